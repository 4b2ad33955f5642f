//! Allocation schemes behind one trait, looked up by name.

use std::collections::BTreeMap;
use std::fmt;

use crate::dual::{solve_optimal, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::heuristics::{solve_fixed_alpha, solve_fsa, solve_noan, solve_suboptimal};
use crate::model::{ChannelRealization, SystemConfig};

pub trait Scheme: Send + Sync {
    fn name(&self) -> &str;

    fn description(&self) -> &str;

    fn solve(
        &self,
        config: &SystemConfig,
        channels: &ChannelRealization,
        options: &SolverOptions,
    ) -> Result<SolveReport>;
}

struct Optimal;

impl Scheme for Optimal {
    fn name(&self) -> &str {
        "optimal"
    }
    fn description(&self) -> &str {
        "joint assignment, power and AN split via the Lagrange dual"
    }
    fn solve(
        &self,
        config: &SystemConfig,
        channels: &ChannelRealization,
        options: &SolverOptions,
    ) -> Result<SolveReport> {
        solve_optimal(config, channels, options)
    }
}

struct Suboptimal;

impl Scheme for Suboptimal {
    fn name(&self) -> &str {
        "suboptimal"
    }
    fn description(&self) -> &str {
        "two-stage equal-power heuristic"
    }
    fn solve(
        &self,
        config: &SystemConfig,
        channels: &ChannelRealization,
        _options: &SolverOptions,
    ) -> Result<SolveReport> {
        solve_suboptimal(config, channels)
    }
}

struct Fsa;

impl Scheme for Fsa {
    fn name(&self) -> &str {
        "fsa"
    }
    fn description(&self) -> &str {
        "round-robin subcarrier assignment, optimized power and split"
    }
    fn solve(
        &self,
        config: &SystemConfig,
        channels: &ChannelRealization,
        options: &SolverOptions,
    ) -> Result<SolveReport> {
        solve_fsa(config, channels, options)
    }
}

/// Dual method with a pinned split.
pub struct FixedAlpha {
    name: String,
    alpha: f64,
}

impl FixedAlpha {
    pub fn new(name: impl Into<String>, alpha: f64) -> Self {
        Self {
            name: name.into(),
            alpha,
        }
    }
}

impl Scheme for FixedAlpha {
    fn name(&self) -> &str {
        &self.name
    }
    fn description(&self) -> &str {
        "optimized assignment and power with a fixed AN split"
    }
    fn solve(
        &self,
        config: &SystemConfig,
        channels: &ChannelRealization,
        options: &SolverOptions,
    ) -> Result<SolveReport> {
        let mut report = solve_fixed_alpha(config, channels, self.alpha, options)?;
        report.scheme = self.name.clone();
        Ok(report)
    }
}

struct NoAn;

impl Scheme for NoAn {
    fn name(&self) -> &str {
        "noan"
    }
    fn description(&self) -> &str {
        "optimized assignment and power without artificial noise"
    }
    fn solve(
        &self,
        config: &SystemConfig,
        channels: &ChannelRealization,
        options: &SolverOptions,
    ) -> Result<SolveReport> {
        solve_noan(config, channels, options)
    }
}

/// Name-keyed scheme table.
pub struct SchemeRegistry {
    schemes: BTreeMap<String, Box<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self {
            schemes: BTreeMap::new(),
        }
    }

    /// `optimal`, `suboptimal`, `fsa`, `alpha05` and `noan`.
    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(Optimal));
        reg.register(Box::new(Suboptimal));
        reg.register(Box::new(Fsa));
        reg.register(Box::new(FixedAlpha::new("alpha05", 0.5)));
        reg.register(Box::new(NoAn));
        reg
    }

    /// Adds or replaces the scheme under its own name.
    pub fn register(&mut self, scheme: Box<dyn Scheme>) {
        self.schemes.insert(scheme.name().to_string(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scheme> {
        self.schemes
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownScheme(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schemes.keys().map(String::as_str)
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl fmt::Debug for SchemeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_registered() {
        let reg = SchemeRegistry::with_defaults();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, ["alpha05", "fsa", "noan", "optimal", "suboptimal"]);
        assert_eq!(reg.get("alpha05").unwrap().name(), "alpha05");
        assert!(matches!(reg.get("greedy"), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn register_replaces_by_name() {
        let mut reg = SchemeRegistry::empty();
        reg.register(Box::new(FixedAlpha::new("pinned", 0.5)));
        reg.register(Box::new(FixedAlpha::new("pinned", 0.25)));
        assert_eq!(reg.names().count(), 1);
    }
}
