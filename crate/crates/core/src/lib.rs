//! Secrecy-rate maximizing resource allocation for OFDMA downlinks that carry
//! cancelable artificial noise and serve energy-harvesting receivers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dual;
pub mod error;
pub mod heuristics;
pub mod model;
pub mod persc;
mod poly;
pub mod scheme;

pub use error::{Error, Result};
pub use model::{Allocation, ChannelRealization, SystemConfig};
pub use scheme::{Scheme, SchemeRegistry};
