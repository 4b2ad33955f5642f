//! Lagrange dual decomposition over subcarriers.
//!
//! Each iteration solves every (receiver, subcarrier) subproblem at the
//! current prices, assigns each subcarrier to the receiver with the largest
//! positive Lagrangian value, then moves the multipliers along the projected
//! subgradient of the dual function. The best feasible primal point seen along
//! the way is returned together with the best (smallest) dual bound, whose
//! difference is the reported duality gap.

use std::collections::VecDeque;
use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    harvested_all, secrecy_rate_unchecked, weighted_secrecy_total, Allocation, ChannelRealization,
    SystemConfig,
};
use crate::persc::{
    alpha_star_unchecked, feasible_set, price_omega, solve_per_sc, solve_per_sc_fixed_alpha,
    PerScContext, PerScSolution,
};

/// How the multiplier step sizes evolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepRule {
    /// `step(t) = base / sqrt(t)`, in units normalized by the typical size of
    /// each multiplier and its subgradient.
    Diminishing { xi0: f64, nu0: f64 },
    /// Per-multiplier step that grows while the subgradient keeps its sign
    /// and shrinks when it flips. Steps are in normalized multiplier units.
    SignAdaptive {
        initial: f64,
        grow: f64,
        shrink: f64,
        max: f64,
    },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::SignAdaptive {
            initial: 0.1,
            grow: 1.2,
            shrink: 0.5,
            max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub step_rule: StepRule,
    /// Largest normalized multiplier change that still counts as converged.
    pub convergence_tol: f64,
    /// Number of consecutive converged iterations required.
    pub convergence_window: usize,
    /// Slack in watts allowed on the harvesting and total-power constraints.
    pub feasibility_tol: f64,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            step_rule: StepRule::default(),
            convergence_tol: 1e-6,
            convergence_window: 10,
            feasibility_tol: 1e-10,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations >= 1
            && self.convergence_window >= 1
            && self.convergence_tol > 0.0
            && self.feasibility_tol >= 0.0
            && match self.step_rule {
                StepRule::Diminishing { xi0, nu0 } => xi0 > 0.0 && nu0 > 0.0,
                StepRule::SignAdaptive {
                    initial,
                    grow,
                    shrink,
                    max,
                } => initial > 0.0 && grow >= 1.0 && shrink > 0.0 && shrink < 1.0 && max >= initial,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid solver options: {self:?}"
            )))
        }
    }
}

/// Multipliers and their current step sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualState {
    /// One multiplier per energy receiver.
    pub lambda: Vec<f64>,
    /// Total-power multiplier.
    pub gamma: f64,
    pub iteration: usize,
    pub xi: Vec<f64>,
    pub nu: f64,
}

impl DualState {
    pub fn new(lambda: Vec<f64>, gamma: f64) -> Self {
        let xi = vec![0.0; lambda.len()];
        Self {
            lambda,
            gamma,
            iteration: 0,
            xi,
            nu: 0.0,
        }
    }
}

/// Projected subgradient update with the step sizes stored in `dual`.
pub fn subgradient_step(
    dual: &DualState,
    primal: &Allocation,
    channels: &ChannelRealization,
    config: &SystemConfig,
) -> DualState {
    let harvested = harvested_all(primal, channels, config);
    let (lsg, gsg) = subgradient(&harvested, primal.total_power(), config);
    apply_step(dual, &lsg, gsg)
}

fn subgradient(harvested: &[f64], total_power: f64, config: &SystemConfig) -> (Vec<f64>, f64) {
    let lsg = harvested
        .iter()
        .zip(&config.harvest_target)
        .map(|(q, t)| q - t)
        .collect();
    (lsg, config.total_power - total_power)
}

fn apply_step(dual: &DualState, lambda_sg: &[f64], gamma_sg: f64) -> DualState {
    let lambda = dual
        .lambda
        .iter()
        .zip(&dual.xi)
        .zip(lambda_sg)
        .map(|((l, xi), sg)| (l - xi * sg).max(0.0))
        .collect();
    DualState {
        lambda,
        gamma: (dual.gamma - dual.nu * gamma_sg).max(0.0),
        iteration: dual.iteration + 1,
        xi: dual.xi.clone(),
        nu: dual.nu,
    }
}

/// Typical magnitudes of the multipliers and subgradients, used to make the
/// step rules independent of units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualScales {
    pub gamma: f64,
    pub lambda: Vec<f64>,
    pub power: f64,
    pub harvest: Vec<f64>,
}

impl DualScales {
    pub fn new(config: &SystemConfig, channels: &ChannelRealization) -> Self {
        let n = config.num_scs as f64;
        let mean_ir = (0..config.num_irs)
            .flat_map(|k| (0..config.num_scs).map(move |sc| (k, sc)))
            .map(|(k, sc)| channels.gain(k, sc))
            .sum::<f64>()
            / (config.num_irs as f64 * n);
        // Inverse water level of a flat, uniformly loaded band.
        let gamma =
            config.max_weight() / (LN_2 * (config.total_power / n + config.noise_power / mean_ir));
        let mean_er: Vec<f64> = (0..config.num_ers)
            .map(|l| {
                (0..config.num_scs)
                    .map(|sc| channels.er_gain(l, sc))
                    .sum::<f64>()
                    / n
            })
            .collect();
        let lambda = mean_er
            .iter()
            .zip(&config.harvest_eff)
            .map(|(g, z)| gamma / (z * g))
            .collect();
        let harvest = mean_er
            .iter()
            .zip(&config.harvest_eff)
            .map(|(g, z)| z * g * config.total_power)
            .collect();
        Self {
            gamma,
            lambda,
            power: config.total_power,
            harvest,
        }
    }
}

/// Per-multiplier step-size controller.
#[derive(Debug, Clone)]
struct StepController {
    rule: StepRule,
    scales: DualScales,
    /// Normalized step per coordinate (gamma last) for the adaptive rule.
    delta: Vec<f64>,
    last_sign: Vec<f64>,
}

impl StepController {
    fn new(rule: StepRule, scales: DualScales) -> Self {
        let dim = scales.lambda.len() + 1;
        let init = match rule {
            StepRule::SignAdaptive { initial, .. } => initial,
            StepRule::Diminishing { .. } => 0.0,
        };
        Self {
            rule,
            scales,
            delta: vec![init; dim],
            last_sign: vec![0.0; dim],
        }
    }

    /// Sets `dual.xi` / `dual.nu` for the coming update.
    fn prepare(&mut self, dual: &mut DualState, lambda_sg: &[f64], gamma_sg: f64) {
        let t = (dual.iteration + 1) as f64;
        let m = lambda_sg.len();
        match self.rule {
            StepRule::Diminishing { xi0, nu0 } => {
                for l in 0..m {
                    dual.xi[l] = xi0 / t.sqrt() * self.scales.lambda[l] / self.scales.harvest[l];
                }
                dual.nu = nu0 / t.sqrt() * self.scales.gamma / self.scales.power;
            }
            StepRule::SignAdaptive { .. } => {
                for (l, sg) in lambda_sg.iter().enumerate() {
                    dual.xi[l] = self.adapt(l, *sg, dual.lambda[l], self.scales.lambda[l]);
                }
                dual.nu = self.adapt(m, gamma_sg, dual.gamma, self.scales.gamma);
            }
        }
    }

    /// Updates the normalized step of coordinate `i` from the sign history
    /// of its subgradient and returns the raw step size.
    fn adapt(&mut self, i: usize, sg: f64, value: f64, scale: f64) -> f64 {
        let StepRule::SignAdaptive {
            grow, shrink, max, ..
        } = self.rule
        else {
            return 0.0;
        };
        let sign = if sg > 0.0 {
            1.0
        } else if sg < 0.0 {
            -1.0
        } else {
            0.0
        };
        // A multiplier pinned at zero by the projection keeps its step.
        let pinned = value == 0.0 && sign > 0.0;
        if !pinned {
            if sign * self.last_sign[i] < 0.0 {
                self.delta[i] *= shrink;
            } else if sign * self.last_sign[i] > 0.0 {
                self.delta[i] = (self.delta[i] * grow).min(max);
            }
            self.last_sign[i] = sign;
        }
        if sg == 0.0 {
            0.0
        } else {
            self.delta[i] * scale / sg.abs()
        }
    }

    fn normalized_change(&self, a: &DualState, b: &DualState) -> f64 {
        let dg = (a.gamma - b.gamma).abs() / self.scales.gamma;
        a.lambda
            .iter()
            .zip(&b.lambda)
            .zip(&self.scales.lambda)
            .map(|((x, y), s)| (x - y).abs() / s)
            .fold(dg, f64::max)
    }
}

/// How `(p, alpha)` is chosen on each subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PerScPolicy {
    Joint,
    FixedAlpha(f64),
}

/// How subcarriers are given to information receivers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AssignmentPolicy {
    /// Largest positive per-subcarrier Lagrangian wins.
    Dynamic,
    /// Subcarrier `n` always belongs to receiver `map[n]`.
    Fixed(Vec<usize>),
}

/// Selects the winning receiver per subcarrier. Returns `None` when no value
/// is strictly positive; ties go to the lowest index.
pub fn assign_subcarriers(values: &[Vec<f64>]) -> Vec<Option<usize>> {
    let num_scs = values.first().map_or(0, Vec::len);
    (0..num_scs)
        .map(|sc| {
            let mut best: Option<(usize, f64)> = None;
            for (k, row) in values.iter().enumerate() {
                let v = row[sc];
                if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((k, v));
                }
            }
            best.map(|(k, _)| k)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Dual function value, band-averaged.
    pub dual_value: f64,
    /// Objective of the iterate's primal point before any repair.
    pub primal_value: f64,
    /// `sum p - P_max`, watts.
    pub power_excess: f64,
    /// `max_l (Qbar_l - Q_l)^+`, watts.
    pub harvest_shortfall: f64,
    pub gamma: f64,
}

/// Conventions a reader needs to reinterpret the numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    /// Objective, dual value and gap are divided by the number of subcarriers.
    pub normalization: &'static str,
    /// Power price uses the energy receivers' own gains on each subcarrier.
    pub price_convention: &'static str,
    pub gamma_init: f64,
    pub step_rule: Option<StepRule>,
    /// Order in which energy receivers are served by the greedy heuristic.
    pub er_order: Option<&'static str>,
}

impl ReportMeta {
    pub(crate) fn new(gamma_init: f64, step_rule: Option<StepRule>) -> Self {
        Self {
            normalization: "band-average: sum_k w_k sum_n x R / N",
            price_convention: "omega_n = -gamma + sum_l lambda_l zeta_l |h_{l,n}|^2",
            gamma_init,
            step_rule,
            er_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub scheme: String,
    /// Band-averaged weighted sum secrecy rate of `allocation`, bits/s/Hz.
    pub objective: f64,
    /// Harvested power per energy receiver, watts.
    pub harvested: Vec<f64>,
    pub total_power: f64,
    /// Best dual bound, band-averaged. `None` for schemes without a dual.
    pub dual_value: Option<f64>,
    pub duality_gap: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Whether `allocation` satisfies every constraint within tolerance.
    pub feasible: bool,
    pub allocation: Allocation,
    pub dual: Option<DualState>,
    pub trace: Vec<TraceEntry>,
    /// Subcarrier counts per stage, for staged heuristics.
    pub stages: Option<StageSizes>,
    pub meta: ReportMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageSizes {
    /// Subcarriers assigned to meet the harvesting targets.
    pub stage1: usize,
    /// Subcarriers assigned for secrecy afterwards.
    pub stage2: usize,
}

/// Dual bound minus primal objective, both band-averaged. `None` when the
/// report carries no dual bound.
pub fn duality_gap(report: &SolveReport) -> Option<f64> {
    report.dual_value.map(|d| d - report.objective)
}

/// Checks every coupled constraint of `alloc` within `tol` watts.
pub fn is_feasible(
    alloc: &Allocation,
    channels: &ChannelRealization,
    config: &SystemConfig,
    tol: f64,
) -> bool {
    let harvested = harvested_all(alloc, channels, config);
    alloc.validate(config).is_ok()
        && alloc.total_power() <= config.total_power + tol
        && harvested
            .iter()
            .zip(&config.harvest_target)
            .all(|(q, t)| *q >= t - tol)
}

/// Upper bound on what energy receiver `er` can harvest: the whole budget
/// poured into its best subcarriers, each capped at the peak.
pub fn max_harvestable(channels: &ChannelRealization, config: &SystemConfig, er: usize) -> f64 {
    let mut gains: Vec<f64> = (0..config.num_scs)
        .map(|sc| channels.er_gain(er, sc))
        .collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let mut left = config.total_power;
    let mut received = 0.0;
    for g in gains {
        if left <= 0.0 {
            break;
        }
        let p = left.min(config.peak_power);
        received += p * g;
        left -= p;
    }
    config.harvest_eff[er] * received
}

pub(crate) fn check_harvest_reachable(
    channels: &ChannelRealization,
    config: &SystemConfig,
    tol: f64,
) -> Result<()> {
    for l in 0..config.num_ers {
        let cap = max_harvestable(channels, config, l);
        if config.harvest_target[l] > cap + tol {
            return Err(Error::Infeasible(format!(
                "energy receiver {l} needs {:.4e} W but at most {cap:.4e} W is harvestable",
                config.harvest_target[l]
            )));
        }
    }
    Ok(())
}

/// Distinct recent assignments refitted after the dual loop.
const REFIT_SUPPORTS: usize = 4;

/// Bisection steps on the power price during a refit.
const REFIT_STEPS: usize = 60;

/// Step halvings in the local search on the recovered point.
const POLISH_LEVELS: usize = 40;

/// Sweeps over all moves allowed per step size.
const POLISH_SWEEPS: usize = 50;

/// Restricted variants of the dual method share this driver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualProblem {
    pub per_sc: PerScPolicy,
    pub assignment: AssignmentPolicy,
}

struct Iterate {
    alloc: Allocation,
    /// Sum over subcarriers of the winning Lagrangian values.
    lagrangian_sum: f64,
}

impl DualProblem {
    pub fn joint() -> Self {
        Self {
            per_sc: PerScPolicy::Joint,
            assignment: AssignmentPolicy::Dynamic,
        }
    }

    fn per_sc_solution(&self, ctx: &PerScContext) -> Result<PerScSolution> {
        match self.per_sc {
            PerScPolicy::Joint => solve_per_sc(ctx),
            PerScPolicy::FixedAlpha(a) => solve_per_sc_fixed_alpha(ctx, a),
        }
    }

    /// Best per-subcarrier point with positive power.
    fn per_sc_solution_on(&self, ctx: &PerScContext) -> Result<PerScSolution> {
        let PerScPolicy::Joint = self.per_sc else {
            return self.per_sc_solution(ctx);
        };
        let mut best: Option<PerScSolution> = None;
        for c in feasible_set(ctx)?
            .candidates
            .into_iter()
            .filter(|c| c.power > 0.0)
        {
            let value = ctx.lagrangian(c.power, c.alpha);
            if best.is_none_or(|b| value > b.value) {
                best = Some(PerScSolution {
                    power: c.power,
                    alpha: c.alpha,
                    value,
                });
            }
        }
        Ok(best.unwrap_or(PerScSolution::IDLE))
    }

    /// Maximizes the Lagrangian for fixed multipliers.
    fn maximize_lagrangian(
        &self,
        dual: &DualState,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Result<Iterate> {
        self.maximize_on(dual, None, false, channels, config)
    }

    /// Lagrangian maximization, optionally restricted to a given assignment.
    /// With `force_on`, subcarriers of the assignment never fall back to idle.
    fn maximize_on(
        &self,
        dual: &DualState,
        support: Option<&[Option<usize>]>,
        force_on: bool,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Result<Iterate> {
        let n = config.num_scs;
        let peak = config.effective_peak();
        let mut alloc = Allocation::empty(n);
        let mut lagrangian_sum = 0.0;
        let mut er_gains = vec![0.0; config.num_ers];
        for sc in 0..n {
            for (l, g) in er_gains.iter_mut().enumerate() {
                *g = channels.er_gain(l, sc);
            }
            let omega = price_omega(&dual.lambda, dual.gamma, &config.harvest_eff, &er_gains);
            let candidates: Vec<usize> = match (support, &self.assignment) {
                (Some(s), _) => s[sc].into_iter().collect(),
                (None, AssignmentPolicy::Dynamic) => (0..config.num_irs).collect(),
                (None, AssignmentPolicy::Fixed(map)) => vec![map[sc]],
            };
            let mut best: Option<(usize, PerScSolution)> = None;
            for k in candidates {
                let ctx = PerScContext {
                    h2: channels.gain(k, sc),
                    b2: channels.eve_gain(k, sc),
                    noise: config.noise_power,
                    weight: config.weights[k],
                    omega,
                    peak,
                };
                let sol = if force_on {
                    self.per_sc_solution_on(&ctx)?
                } else {
                    self.per_sc_solution(&ctx)?
                };
                if (force_on || sol.value > 0.0) && best.is_none_or(|(_, b)| sol.value > b.value) {
                    best = Some((k, sol));
                }
            }
            if let Some((k, sol)) = best.filter(|(_, sol)| sol.power > 0.0) {
                alloc.set(sc, k, sol.power, sol.alpha);
                lagrangian_sum += sol.value;
            }
        }
        Ok(Iterate {
            alloc,
            lagrangian_sum,
        })
    }

    /// Dual function value (not normalized) at `dual`.
    pub fn dual_function(
        &self,
        dual: &DualState,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Result<f64> {
        let it = self.maximize_lagrangian(dual, channels, config)?;
        Ok(self.dual_value_of(&it, dual, config))
    }

    fn dual_value_of(&self, it: &Iterate, dual: &DualState, config: &SystemConfig) -> f64 {
        let reserved: f64 = dual
            .lambda
            .iter()
            .zip(&config.harvest_target)
            .map(|(l, q)| l * q)
            .sum();
        it.lagrangian_sum - reserved + dual.gamma * config.total_power
    }

    /// Repairs an iterate's primal into a feasible point. Candidates are the
    /// iterate scaled uniformly and the iterate scaled down just enough that
    /// topping up every short energy receiver fits in the budget.
    fn recover(
        &self,
        alloc: &Allocation,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Option<(Allocation, f64)> {
        let mut best: Option<(Allocation, f64)> = None;
        // Recovered points are exactly feasible so the reported gap is a
        // true upper bound on the suboptimality.
        let mut consider = |x: Allocation| {
            if is_feasible(&x, channels, config, 0.0) {
                let obj = weighted_secrecy_total(&x, channels, config);
                if best.as_ref().is_none_or(|(_, b)| obj > *b) {
                    best = Some((x, obj));
                }
            }
        };

        let total = alloc.total_power();
        let harvested = harvested_all(alloc, channels, config);
        let mut c_lo: f64 = 0.0;
        for (q, t) in harvested.iter().zip(&config.harvest_target) {
            if *t > 0.0 {
                c_lo = c_lo.max(if *q > 0.0 {
                    t / q * (1.0 + 1e-12)
                } else {
                    f64::INFINITY
                });
            }
        }
        let max_p = alloc.power.iter().copied().fold(0.0, f64::max);
        let mut c_hi = f64::INFINITY;
        if total > 0.0 {
            c_hi = config.total_power / total;
        }
        if max_p > 0.0 {
            c_hi = c_hi.min(config.peak_power / max_p);
        }
        let mut factors = vec![1.0];
        if c_hi.is_finite() {
            // Keep the rounded sum inside the budget.
            c_hi *= 1.0 - 1e-12;
            factors.push(c_hi);
        }
        if c_lo.is_finite() && c_lo > 0.0 {
            factors.push(c_lo.min(c_hi));
        }
        for c in factors {
            consider(self.scale(alloc, c, channels, config));
        }

        let fits = |c: f64| {
            let x = self.top_up(&self.scale(alloc, c, channels, config), channels, config);
            (x.total_power() <= config.total_power).then_some(x)
        };
        let c_max = c_hi.min(1.0);
        if let Some(x) = fits(c_max) {
            consider(x);
        } else if fits(0.0).is_some() {
            let (mut lo, mut hi) = (0.0, c_max);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if fits(mid).is_some() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if let Some(x) = fits(lo) {
                consider(x);
            }
        }
        best
    }

    /// Adds power on each short energy receiver's strongest subcarriers until
    /// its target is met. Unassigned subcarriers follow the fixed map, or go
    /// to the information receiver with the largest gain there.
    fn top_up(
        &self,
        alloc: &Allocation,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Allocation {
        let mut out = alloc.clone();
        let mut q = harvested_all(&out, channels, config);
        let mut order: Vec<usize> = (0..config.num_scs).collect();
        for l in 0..config.num_ers {
            let zeta = config.harvest_eff[l];
            let target = config.harvest_target[l] * (1.0 + 1e-12);
            if q[l] >= target {
                continue;
            }
            order.sort_by(|a, b| channels.er_gain(l, *b).total_cmp(&channels.er_gain(l, *a)));
            for &sc in &order {
                let short = target - q[l];
                if short <= 0.0 {
                    break;
                }
                let room = config.peak_power - out.power[sc];
                if room <= 0.0 {
                    continue;
                }
                let delta = room.min(short / (zeta * channels.er_gain(l, sc)));
                let k = match (out.assign[sc], &self.assignment) {
                    (Some(k), _) => k,
                    (None, AssignmentPolicy::Fixed(map)) => map[sc],
                    (None, AssignmentPolicy::Dynamic) => (1..config.num_irs).fold(0, |best, k| {
                        if channels.gain(k, sc) > channels.gain(best, sc) {
                            k
                        } else {
                            best
                        }
                    }),
                };
                let p = out.power[sc] + delta;
                self.put(&mut out, sc, k, p, channels, config);
                for (m, qm) in q.iter_mut().enumerate() {
                    *qm += config.harvest_eff[m] * delta * channels.er_gain(m, sc);
                }
            }
        }
        out
    }

    /// Sets power on an assigned subcarrier and the matching split.
    fn put(
        &self,
        out: &mut Allocation,
        sc: usize,
        k: usize,
        p: f64,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) {
        if p <= 0.0 {
            out.clear(sc);
            return;
        }
        let alpha = match self.per_sc {
            PerScPolicy::FixedAlpha(a) => a,
            PerScPolicy::Joint => {
                let ctx = PerScContext {
                    h2: channels.gain(k, sc),
                    b2: channels.eve_gain(k, sc),
                    noise: config.noise_power,
                    weight: config.weights[k],
                    omega: 0.0,
                    peak: config.peak_power,
                };
                alpha_star_unchecked(p, &ctx)
            }
        };
        out.set(sc, k, p, alpha);
    }

    fn scale(
        &self,
        alloc: &Allocation,
        c: f64,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Allocation {
        let mut out = alloc.clone();
        if c == 1.0 {
            return out;
        }
        for sc in 0..out.num_scs() {
            let Some(k) = out.assign[sc] else { continue };
            let p = (out.power[sc] * c).min(config.peak_power);
            self.put(&mut out, sc, k, p, channels, config);
        }
        out
    }

    /// Re-solves power and split on a fixed assignment, moving only the power
    /// price until the budget is met. Returns the allocation at the smallest
    /// price that fits.
    fn refit(
        &self,
        support: &[Option<usize>],
        force_on: bool,
        dual: &DualState,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Result<Allocation> {
        let at = |gamma: f64| {
            let d = DualState {
                gamma,
                ..dual.clone()
            };
            self.maximize_on(&d, Some(support), force_on, channels, config)
                .map(|it| it.alloc)
        };
        let fits = |a: &Allocation| a.total_power() <= config.total_power;
        let start = at(dual.gamma)?;
        if dual.gamma == 0.0 && fits(&start) {
            return Ok(start);
        }
        let (mut lo, mut hi, mut best) = if fits(&start) {
            let mut lo = 0.5 * dual.gamma;
            let mut best = start;
            let mut hi = dual.gamma;
            loop {
                let a = at(lo)?;
                if !fits(&a) {
                    break;
                }
                best = a;
                hi = lo;
                if lo < 1e-12 * dual.gamma {
                    return Ok(best);
                }
                lo *= 0.5;
            }
            (lo, hi, best)
        } else {
            let mut hi = 2.0 * dual.gamma.max(f64::MIN_POSITIVE);
            let mut lo = dual.gamma;
            let mut tries = 0;
            let best = loop {
                let a = at(hi)?;
                if fits(&a) {
                    break a;
                }
                tries += 1;
                if tries > 200 {
                    return Ok(Allocation::empty(config.num_scs));
                }
                lo = hi;
                hi *= 2.0;
            };
            (lo, hi, best)
        };
        for _ in 0..REFIT_STEPS {
            let mid = 0.5 * (lo + hi);
            let a = at(mid)?;
            if fits(&a) {
                hi = mid;
                best = a;
            } else {
                lo = mid;
            }
        }
        Ok(best)
    }

    /// Weighted secrecy rate of one subcarrier at power `p`, with the
    /// policy's split and the best allowed receiver.
    fn sc_value(
        &self,
        sc: usize,
        p: f64,
        current: Option<usize>,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> (f64, Option<usize>) {
        if p <= 0.0 {
            return (0.0, None);
        }
        let ks: Vec<usize> = match &self.assignment {
            AssignmentPolicy::Fixed(map) => vec![map[sc]],
            AssignmentPolicy::Dynamic => current
                .into_iter()
                .chain((0..config.num_irs).filter(|k| Some(*k) != current))
                .collect(),
        };
        let mut best = (f64::NEG_INFINITY, None);
        for k in ks {
            let (h2, b2) = (channels.gain(k, sc), channels.eve_gain(k, sc));
            let alpha = match self.per_sc {
                PerScPolicy::FixedAlpha(a) => a,
                PerScPolicy::Joint => {
                    let ctx = PerScContext {
                        h2,
                        b2,
                        noise: config.noise_power,
                        weight: config.weights[k],
                        omega: 0.0,
                        peak: config.peak_power,
                    };
                    alpha_star_unchecked(p, &ctx)
                }
            };
            let v =
                config.weights[k] * secrecy_rate_unchecked(p, alpha, h2, b2, config.noise_power);
            if v > best.0 {
                best = (v, Some(k));
            }
        }
        best
    }

    /// Local search from a feasible point: power increases into the budget
    /// slack and pairwise transfers, with halving step sizes. Every accepted
    /// move keeps the point feasible.
    fn polish(
        &self,
        alloc: &Allocation,
        channels: &ChannelRealization,
        config: &SystemConfig,
    ) -> Option<(Allocation, f64)> {
        let n = config.num_scs;
        let peak = config.effective_peak();
        let mut p = alloc.power.clone();
        let mut k = alloc.assign.clone();
        let mut v: Vec<f64> = (0..n)
            .map(|sc| {
                let (val, best) = self.sc_value(sc, p[sc], k[sc], channels, config);
                k[sc] = best;
                val
            })
            .collect();
        let mut q = harvested_all(alloc, channels, config);
        let mut total: f64 = p.iter().sum();
        let targets: Vec<f64> = config
            .harvest_target
            .iter()
            .map(|t| t * (1.0 + 1e-12))
            .collect();
        let budget = config.total_power * (1.0 - 1e-12);
        let er = |l: usize, sc: usize| config.harvest_eff[l] * channels.er_gain(l, sc);

        let mut step = 0.5 * peak;
        for _ in 0..POLISH_LEVELS {
            for _ in 0..POLISH_SWEEPS {
                let mut improved = false;
                for j in 0..n {
                    // Increase into the slack.
                    let d = step.min(peak - p[j]).min(budget - total);
                    if d > 0.0 {
                        let (vj, kj) = self.sc_value(j, p[j] + d, k[j], channels, config);
                        if vj > v[j] * (1.0 + 1e-14) {
                            p[j] += d;
                            total += d;
                            for (l, ql) in q.iter_mut().enumerate() {
                                *ql += d * er(l, j);
                            }
                            (v[j], k[j]) = (vj, kj);
                            improved = true;
                        }
                    }
                    // Transfers into `j`, the whole source power included.
                    for i in 0..n {
                        if i == j || p[i] <= 0.0 {
                            continue;
                        }
                        for d in [step.min(p[i]), p[i]] {
                            let d = d.min(peak - p[j]);
                            if d <= 0.0 {
                                continue;
                            }
                            let harvest_ok = (0..config.num_ers).all(|l| {
                                let change = d * (er(l, j) - er(l, i));
                                change >= 0.0 || q[l] + change >= targets[l]
                            });
                            if !harvest_ok {
                                continue;
                            }
                            let pi = if d == p[i] { 0.0 } else { p[i] - d };
                            let (vi, ki) = self.sc_value(i, pi, k[i], channels, config);
                            let (vj, kj) = self.sc_value(j, p[j] + d, k[j], channels, config);
                            let gain = vi + vj - v[i] - v[j];
                            if gain > 1e-14 * (1.0 + v[i] + v[j]) {
                                for (l, ql) in q.iter_mut().enumerate() {
                                    *ql += d * (er(l, j) - er(l, i));
                                }
                                p[i] = pi;
                                p[j] += d;
                                (v[i], k[i]) = (vi, ki);
                                (v[j], k[j]) = (vj, kj);
                                improved = true;
                                break;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            step *= 0.5;
        }

        let mut out = Allocation::empty(n);
        for sc in 0..n {
            if let Some(kk) = k[sc] {
                self.put(&mut out, sc, kk, p[sc], channels, config);
            }
        }
        is_feasible(&out, channels, config, 0.0).then(|| {
            let obj = weighted_secrecy_total(&out, channels, config);
            (out, obj)
        })
    }

    pub fn solve(
        &self,
        name: &str,
        config: &SystemConfig,
        channels: &ChannelRealization,
        options: &SolverOptions,
    ) -> Result<SolveReport> {
        config.validate()?;
        channels.check_against(config)?;
        options.validate()?;
        if let AssignmentPolicy::Fixed(map) = &self.assignment {
            if map.len() != config.num_scs || map.iter().any(|k| *k >= config.num_irs) {
                return Err(Error::Dimension(
                    "fixed assignment map does not fit the system".into(),
                ));
            }
        }
        let tol = options.feasibility_tol;
        check_harvest_reachable(channels, config, tol)?;

        let n = config.num_scs as f64;

        // Zero prices with a zero dual value bound the objective by zero, so
        // any feasible point is optimal. Subgradient steps would only crawl
        // toward the origin of this piecewise-linear dual.
        let zero = DualState::new(vec![0.0; config.num_ers], 0.0);
        if let Ok(it) = self.maximize_lagrangian(&zero, channels, config) {
            if self.dual_value_of(&it, &zero, config) == 0.0 {
                if let Some((allocation, total_obj)) = self.recover(&it.alloc, channels, config) {
                    return Ok(self.report(
                        name,
                        allocation,
                        total_obj,
                        0.0,
                        zero,
                        (1, true),
                        Vec::new(),
                        ReportMeta::new(0.0, Some(options.step_rule)),
                        channels,
                        config,
                        tol,
                    ));
                }
            }
        }

        let scales = DualScales::new(config, channels);
        let mut dual = DualState::new(vec![0.0; config.num_ers], scales.gamma);
        let gamma_init = dual.gamma;
        let mut steps = StepController::new(options.step_rule, scales.clone());

        let mut best_dual = f64::INFINITY;
        let mut best_dual_state = dual.clone();
        let mut best_primal: Option<(Allocation, f64)> = None;
        let mut recent: VecDeque<Vec<Option<usize>>> = VecDeque::with_capacity(REFIT_SUPPORTS);
        let mut trace = Vec::new();
        let mut calm = 0;
        let mut converged = false;
        let mut iterations = 0;

        for _ in 0..options.max_iterations {
            iterations += 1;
            let it = self.maximize_lagrangian(&dual, channels, config)?;
            let g = self.dual_value_of(&it, &dual, config);
            if g < best_dual {
                best_dual = g;
                best_dual_state = dual.clone();
            }

            let harvested = harvested_all(&it.alloc, channels, config);
            let total = it.alloc.total_power();
            if options.record_trace {
                let shortfall = harvested
                    .iter()
                    .zip(&config.harvest_target)
                    .map(|(q, t)| (t - q).max(0.0))
                    .fold(0.0, f64::max);
                trace.push(TraceEntry {
                    iteration: dual.iteration,
                    dual_value: g / n,
                    primal_value: weighted_secrecy_total(&it.alloc, channels, config) / n,
                    power_excess: total - config.total_power,
                    harvest_shortfall: shortfall,
                    gamma: dual.gamma,
                });
            }

            let mut offer = |candidate: Option<(Allocation, f64)>| {
                if let Some((alloc, obj)) = candidate {
                    if best_primal.as_ref().is_none_or(|(_, b)| obj > *b) {
                        best_primal = Some((alloc, obj));
                    }
                }
            };
            offer(self.recover(&it.alloc, channels, config));
            if !recent.contains(&it.alloc.assign) {
                if recent.len() == REFIT_SUPPORTS {
                    recent.pop_back();
                }
                recent.push_front(it.alloc.assign.clone());
            }

            let (lsg, gsg) = subgradient(&harvested, total, config);
            steps.prepare(&mut dual, &lsg, gsg);
            let next = apply_step(&dual, &lsg, gsg);
            let change = steps.normalized_change(&dual, &next);
            dual = next;

            calm = if change < options.convergence_tol {
                calm + 1
            } else {
                0
            };
            if calm >= options.convergence_window {
                converged = true;
                break;
            }
            if dual
                .lambda
                .iter()
                .zip(&scales.lambda)
                .any(|(l, s)| *l > 1e12 * s)
            {
                break;
            }
        }

        // The last iterates straddle the optimum; refitting their assignments
        // at the final multipliers recovers a point with equalized marginals.
        for support in &recent {
            for force_on in [false, true] {
                let alloc = self.refit(support, force_on, &dual, channels, config)?;
                if let Some((alloc, obj)) = self.recover(&alloc, channels, config) {
                    if best_primal.as_ref().is_none_or(|(_, b)| obj > *b) {
                        best_primal = Some((alloc, obj));
                    }
                }
            }
        }

        let Some((mut allocation, mut total_obj)) = best_primal else {
            return Err(Error::Infeasible(format!(
                "no feasible allocation found in {iterations} iterations"
            )));
        };
        if best_dual - total_obj > 1e-9 * (1.0 + best_dual.abs()) {
            if let Some((a, obj)) = self.polish(&allocation, channels, config) {
                if obj > total_obj {
                    (allocation, total_obj) = (a, obj);
                }
            }
        }
        Ok(self.report(
            name,
            allocation,
            total_obj,
            best_dual,
            best_dual_state,
            (iterations, converged),
            trace,
            ReportMeta::new(gamma_init, Some(options.step_rule)),
            channels,
            config,
            tol,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        name: &str,
        allocation: Allocation,
        total_obj: f64,
        best_dual: f64,
        dual: DualState,
        (iterations, converged): (usize, bool),
        trace: Vec<TraceEntry>,
        meta: ReportMeta,
        channels: &ChannelRealization,
        config: &SystemConfig,
        tol: f64,
    ) -> SolveReport {
        let n = config.num_scs as f64;
        let objective = total_obj / n;
        let dual_value = best_dual / n;
        SolveReport {
            scheme: name.to_string(),
            objective,
            harvested: harvested_all(&allocation, channels, config),
            total_power: allocation.total_power(),
            dual_value: Some(dual_value),
            duality_gap: Some(dual_value - objective),
            iterations,
            converged,
            feasible: is_feasible(&allocation, channels, config, tol),
            allocation,
            dual: Some(dual),
            trace,
            stages: None,
            meta,
        }
    }
}

/// Full joint optimization of assignment, power and AN split.
pub fn solve_optimal(
    config: &SystemConfig,
    channels: &ChannelRealization,
    options: &SolverOptions,
) -> Result<SolveReport> {
    DualProblem::joint().solve("optimal", config, channels, options)
}
