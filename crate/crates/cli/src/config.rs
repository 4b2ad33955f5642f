//! Experiment configuration file (TOML).
//!
//! ```toml
//! [system]
//! K1 = 4
//! K2 = 4
//! N = 64
//! P_max_dBm = 37.0
//! P_peak_dBm = "inf"
//! sigma2_dBm = -83.0
//! weights = [1.0, 1.0, 1.0, 1.0]   # optional, defaults to ones
//! zeta = 0.6                       # scalar or one per ER
//! Qbar_uW = 100.0                  # scalar or one per ER
//!
//! [scenario]                       # optional, see ScenarioSpec
//! seed = 1
//!
//! [solver]                         # optional
//! max_iter = 5000
//!
//! scheme = "optimal"               # or a list
//! ```

use std::path::Path;

use answipt::channel::{dbm_to_watts, ScenarioSpec};
use answipt::dual::{SolverOptions, StepRule};
use answipt::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub scheme: SchemeSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "K1")]
    pub k1: usize,
    #[serde(rename = "K2")]
    pub k2: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "P_max_dBm")]
    pub p_max_dbm: f64,
    #[serde(rename = "P_peak_dBm", default)]
    pub p_peak_dbm: PeakPower,
    #[serde(rename = "sigma2_dBm")]
    pub sigma2_dbm: f64,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub zeta: PerEr,
    #[serde(rename = "Qbar_uW")]
    pub qbar_uw: PerEr,
}

/// Peak power in dBm, or the literal `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PeakPower {
    Dbm(f64),
    Literal(String),
}

impl Default for PeakPower {
    fn default() -> Self {
        PeakPower::Literal("inf".into())
    }
}

impl PeakPower {
    pub fn watts(&self) -> Result<f64, CliError> {
        match self {
            PeakPower::Dbm(x) => Ok(dbm_to_watts(*x)),
            PeakPower::Literal(s) if s == "inf" => Ok(f64::INFINITY),
            PeakPower::Literal(s) => Err(CliError::Config(format!(
                "P_peak_dBm must be a number or \"inf\", got \"{s}\""
            ))),
        }
    }
}

/// One value shared by every energy receiver, or one each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEr {
    Shared(f64),
    Each(Vec<f64>),
}

impl PerEr {
    pub fn expand(&self, k2: usize, what: &str) -> Result<Vec<f64>, CliError> {
        match self {
            PerEr::Shared(x) => Ok(vec![*x; k2]),
            PerEr::Each(v) if v.len() == k2 => Ok(v.clone()),
            PerEr::Each(v) => Err(CliError::Config(format!(
                "{what} lists {} values for {k2} energy receivers",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iter: usize,
    /// `"adaptive"` or `"diminishing"`.
    pub step_rule: String,
    pub step_initial: f64,
    pub step_grow: f64,
    pub step_shrink: f64,
    pub step_max: f64,
    pub xi0: f64,
    pub nu0: f64,
    pub tol: f64,
    pub window: usize,
    pub feasibility_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            step_rule: "adaptive".into(),
            step_initial: 0.1,
            step_grow: 1.2,
            step_shrink: 0.5,
            step_max: 1.0,
            xi0: 1.0,
            nu0: 1.0,
            tol: 1e-6,
            window: 10,
            feasibility_tol: 1e-10,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> Result<SolverOptions, CliError> {
        let step_rule = match self.step_rule.as_str() {
            "adaptive" => StepRule::SignAdaptive {
                initial: self.step_initial,
                grow: self.step_grow,
                shrink: self.step_shrink,
                max: self.step_max,
            },
            "diminishing" => StepRule::Diminishing {
                xi0: self.xi0,
                nu0: self.nu0,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown step_rule \"{other}\" (expected \"adaptive\" or \"diminishing\")"
                )))
            }
        };
        let opts = SolverOptions {
            max_iterations: self.max_iter,
            step_rule,
            convergence_tol: self.tol,
            convergence_window: self.window,
            feasibility_tol: self.feasibility_tol,
            record_trace: false,
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeSelection {
    One(String),
    Many(Vec<String>),
}

impl Default for SchemeSelection {
    fn default() -> Self {
        SchemeSelection::One("optimal".into())
    }
}

impl SchemeSelection {
    pub fn names(&self) -> Vec<String> {
        match self {
            SchemeSelection::One(s) => vec![s.clone()],
            SchemeSelection::Many(v) => v.clone(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.scenario.validate()?;
        cfg.system()?;
        cfg.solver.options()?;
        if cfg.scheme.names().is_empty() {
            return Err(CliError::Config("no scheme selected".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// System parameters in watts.
    pub fn system(&self) -> Result<SystemConfig, CliError> {
        let s = &self.system;
        let weights = s.weights.clone().unwrap_or_else(|| vec![1.0; s.k1]);
        let cfg = SystemConfig {
            num_irs: s.k1,
            num_ers: s.k2,
            num_scs: s.n,
            total_power: dbm_to_watts(s.p_max_dbm),
            peak_power: s.p_peak_dbm.watts()?,
            noise_power: dbm_to_watts(s.sigma2_dbm),
            weights,
            harvest_eff: s.zeta.expand(s.k2, "zeta")?,
            harvest_target: s
                .qbar_uw
                .expand(s.k2, "Qbar_uW")?
                .into_iter()
                .map(|q| q / 1e6)
                .collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
