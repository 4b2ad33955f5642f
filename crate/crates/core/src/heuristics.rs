//! Low-complexity two-stage allocation and the benchmark schemes.

use std::f64::consts::LN_2;

use crate::dual::{
    check_harvest_reachable, is_feasible, AssignmentPolicy, DualProblem, PerScPolicy, ReportMeta,
    SolveReport, SolverOptions, StageSizes,
};
use crate::error::{Error, Result};
use crate::model::{
    harvested_all, rate_eve, rate_ir, secrecy_rate_unchecked, weighted_sum_secrecy, Allocation,
    ChannelRealization, SystemConfig,
};
use crate::persc::{alpha_star_unchecked, PerScContext};

fn split_at(p: f64, h2: f64, b2: f64, noise: f64) -> f64 {
    let ctx = PerScContext {
        h2,
        b2,
        noise,
        weight: 1.0,
        omega: 0.0,
        peak: f64::INFINITY,
    };
    alpha_star_unchecked(p, &ctx)
}

/// Two-stage heuristic with equal power on every subcarrier.
///
/// Stage 1 serves the energy receivers in index order: each takes its
/// strongest unassigned subcarriers, handing them to the information
/// receiver with the largest gain there, until its target is met. Power on
/// subcarriers claimed by earlier receivers counts toward later targets.
/// Stage 2 gives each remaining subcarrier to the information receiver with
/// the largest weighted secrecy rate. Harvest reported at the end includes
/// the stage-2 subcarriers.
pub fn solve_suboptimal(
    config: &SystemConfig,
    channels: &ChannelRealization,
) -> Result<SolveReport> {
    config.validate()?;
    channels.check_against(config)?;
    let n = config.num_scs;
    let p = config.peak_power.min(config.total_power / n as f64);
    let sigma2 = config.noise_power;
    let mut alloc = Allocation::empty(n);

    let give = |alloc: &mut Allocation, sc: usize, k: usize| {
        let alpha = split_at(p, channels.gain(k, sc), channels.eve_gain(k, sc), sigma2);
        alloc.set(sc, k, p, alpha);
    };
    let best_ir_by = |score: &dyn Fn(usize) -> f64| {
        (1..config.num_irs).fold(0, |best, k| if score(k) > score(best) { k } else { best })
    };

    let mut stage1 = 0;
    for l in 0..config.num_ers {
        let zeta = config.harvest_eff[l];
        let mut q: f64 = (0..n)
            .filter(|sc| alloc.assign[*sc].is_some())
            .map(|sc| zeta * p * channels.er_gain(l, sc))
            .sum();
        while q < config.harvest_target[l] {
            let free = (0..n).filter(|sc| alloc.assign[*sc].is_none());
            let Some(sc) = free.fold(None, |best: Option<usize>, sc| match best {
                Some(b) if channels.er_gain(l, b) >= channels.er_gain(l, sc) => Some(b),
                _ => Some(sc),
            }) else {
                return Err(Error::Infeasible(format!(
                    "energy receiver {l} cannot reach its target with equal power {p:.4e} W"
                )));
            };
            let k = best_ir_by(&|k| channels.gain(k, sc));
            give(&mut alloc, sc, k);
            q += zeta * p * channels.er_gain(l, sc);
            stage1 += 1;
        }
    }

    let mut stage2 = 0;
    for sc in 0..n {
        if alloc.assign[sc].is_some() {
            continue;
        }
        let score = |k: usize| {
            let (h2, b2) = (channels.gain(k, sc), channels.eve_gain(k, sc));
            config.weights[k]
                * secrecy_rate_unchecked(p, split_at(p, h2, b2, sigma2), h2, b2, sigma2)
        };
        give(&mut alloc, sc, best_ir_by(&score));
        stage2 += 1;
    }

    let harvested = harvested_all(&alloc, channels, config);
    let mut meta = ReportMeta::new(0.0, None);
    meta.er_order = Some("ascending index");
    Ok(SolveReport {
        scheme: "suboptimal".into(),
        objective: weighted_sum_secrecy(&alloc, channels, config),
        feasible: is_feasible(
            &alloc,
            channels,
            config,
            SolverOptions::default().feasibility_tol,
        ),
        harvested,
        total_power: alloc.total_power(),
        dual_value: None,
        duality_gap: None,
        iterations: 0,
        converged: true,
        allocation: alloc,
        dual: None,
        trace: Vec::new(),
        stages: Some(StageSizes { stage1, stage2 }),
        meta,
    })
}

/// Dual method with the split pinned to `alpha` on every subcarrier.
pub fn solve_fixed_alpha(
    config: &SystemConfig,
    channels: &ChannelRealization,
    alpha: f64,
    options: &SolverOptions,
) -> Result<SolveReport> {
    let problem = DualProblem {
        per_sc: PerScPolicy::FixedAlpha(alpha),
        assignment: AssignmentPolicy::Dynamic,
    };
    problem.solve(&format!("alpha={alpha}"), config, channels, options)
}

/// Round-robin map: subcarrier `n` belongs to information receiver `n mod K1`.
pub fn round_robin(num_scs: usize, num_irs: usize) -> Vec<usize> {
    (0..num_scs).map(|n| n % num_irs).collect()
}

/// Dual method with a fixed round-robin subcarrier assignment.
pub fn solve_fsa(
    config: &SystemConfig,
    channels: &ChannelRealization,
    options: &SolverOptions,
) -> Result<SolveReport> {
    config.validate()?;
    let problem = DualProblem {
        per_sc: PerScPolicy::Joint,
        assignment: AssignmentPolicy::Fixed(round_robin(config.num_scs, config.num_irs)),
    };
    problem.solve("fsa", config, channels, options)
}

/// Dual method without artificial noise.
pub fn solve_noan(
    config: &SystemConfig,
    channels: &ChannelRealization,
    options: &SolverOptions,
) -> Result<SolveReport> {
    let mut report = solve_fixed_alpha(config, channels, 0.0, options)?;
    report.scheme = "noan".into();
    Ok(report)
}

/// Secrecy rate when the intended receiver cannot cancel the artificial
/// noise either. Nonincreasing in `alpha`.
pub fn noncancel_secrecy_rate(p: f64, alpha: f64, h2: f64, b2: f64, noise: f64) -> Result<f64> {
    rate_ir(p, alpha, h2, noise)?;
    rate_eve(p, alpha, b2, noise)?;
    if h2 <= b2 || p == 0.0 {
        return Ok(0.0);
    }
    // (hp + s)(agp + s) / ((ahp + s)(gp + s)), with the alpha dependence
    // isolated in one term so that rounding keeps it monotone.
    let x = alpha * p;
    let fade = b2 / h2 + noise * (h2 - b2) / (h2 * (x * h2 + noise));
    let ratio = (h2 * p + noise) / (b2 * p + noise) * fade;
    Ok(((ratio - 1.0).ln_1p() / LN_2).max(0.0))
}

/// Fails early when some energy receiver cannot reach its target at all.
pub fn check_reachable(config: &SystemConfig, channels: &ChannelRealization) -> Result<()> {
    check_harvest_reachable(channels, config, SolverOptions::default().feasibility_tol)
}
