//! Joint power / AN-split optimization of one subcarrier for one candidate
//! receiver, given the dual prices.
//!
//! The per-subcarrier Lagrangian is
//!
//! ```text
//! L(p, a) = w * Rs(p, a) + omega * p,   0 <= p <= peak,  0 <= a <= 1
//! ```
//!
//! where `omega` is the net price of transmit power (harvesting reward minus
//! the total-power price). `Rs` is not differentiable across the zero-secrecy
//! boundary, so the maximizer is picked from a finite candidate set built per
//! operating scenario:
//!
//! * A: eavesdropper stronger, peak above the full-AN threshold.
//! * B: eavesdropper stronger, peak at or below it (no positive secrecy).
//! * C: equal gains, the optimal split is exactly one half.
//! * D: receiver stronger, peak above the point where the optimal split hits 0.
//! * E: receiver stronger, peak at or below that point.
//!
//! Interior candidates are stationary points: roots of a cubic in `p` at a
//! fixed split, or of a quadratic along the optimal-split curve. All root
//! finding happens in normalized units (noise 1, unit power chosen so the
//! geometric mean of the two SNR slopes is 1) so the coefficients stay near
//! unity even at realistic noise levels.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{gains_equal, secrecy_rate_unchecked, threshold_unchecked};
use crate::poly::real_roots_in;

/// Inputs of one per-subcarrier subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerScContext {
    /// Intended receiver gain.
    pub h2: f64,
    /// Strongest eavesdropper gain.
    pub b2: f64,
    pub noise: f64,
    pub weight: f64,
    /// Net power price.
    pub omega: f64,
    /// Peak power, possibly `f64::INFINITY`.
    pub peak: f64,
}

impl PerScContext {
    pub fn new(h2: f64, b2: f64, noise: f64, weight: f64, omega: f64, peak: f64) -> Result<Self> {
        let ctx = Self {
            h2,
            b2,
            noise,
            weight,
            omega,
            peak,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.h2) && pos(self.b2) && pos(self.noise) && pos(self.weight)) {
            return Err(domain(format!(
                "gains, noise and weight must be positive: {self:?}"
            )));
        }
        if !self.omega.is_finite() {
            return Err(domain(format!("price must be finite, got {}", self.omega)));
        }
        if !(self.peak > 0.0) {
            return Err(domain(format!(
                "peak power must be positive, got {}",
                self.peak
            )));
        }
        Ok(())
    }

    /// Exact per-subcarrier Lagrangian value.
    pub fn lagrangian(&self, p: f64, alpha: f64) -> f64 {
        if p == 0.0 {
            return 0.0;
        }
        self.weight * secrecy_rate_unchecked(p, alpha, self.h2, self.b2, self.noise)
            + self.omega * p
    }

    /// `(1/b2 - 1/h2) * noise`: power at which the optimal split reaches 0.
    pub fn split_floor_power(&self) -> f64 {
        (1.0 / self.b2 - 1.0 / self.h2) * self.noise
    }

    /// Threshold at full AN (`alpha = 1`).
    pub fn full_an_threshold(&self) -> f64 {
        threshold_unchecked(1.0, self.h2, self.b2, self.noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scenario {
    A,
    B,
    C,
    D,
    E,
}

impl Scenario {
    pub fn classify(ctx: &PerScContext) -> Scenario {
        if gains_equal(ctx.h2, ctx.b2) {
            Scenario::C
        } else if ctx.h2 < ctx.b2 {
            if ctx.peak > ctx.full_an_threshold() {
                Scenario::A
            } else {
                Scenario::B
            }
        } else if ctx.peak > ctx.split_floor_power() {
            Scenario::D
        } else {
            Scenario::E
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub power: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSet {
    pub scenario: Scenario,
    /// The first entry is always the idle point `(0, 0)`.
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerScSolution {
    pub power: f64,
    pub alpha: f64,
    pub value: f64,
}

impl PerScSolution {
    pub const IDLE: PerScSolution = PerScSolution {
        power: 0.0,
        alpha: 0.0,
        value: 0.0,
    };
}

/// Net power price on one subcarrier: harvesting reward over all energy
/// receivers minus the total-power price.
pub fn price_omega(lambda: &[f64], gamma: f64, efficiency: &[f64], er_gains: &[f64]) -> f64 {
    let reward: f64 = lambda
        .iter()
        .zip(efficiency)
        .zip(er_gains)
        .map(|((l, z), g)| l * z * g)
        .sum();
    reward - gamma
}

/// Normalized subproblem: noise 1, powers in units of `unit` watts.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    h: f64,
    g: f64,
    w: f64,
    omega: f64,
    unit: f64,
    equal: bool,
}

impl Scaled {
    fn new(ctx: &PerScContext) -> Self {
        let unit = ctx.noise / (ctx.h2 * ctx.b2).sqrt();
        Self {
            h: (ctx.h2 / ctx.b2).sqrt(),
            g: (ctx.b2 / ctx.h2).sqrt(),
            w: ctx.weight,
            omega: ctx.omega * unit,
            unit,
            equal: gains_equal(ctx.h2, ctx.b2),
        }
    }

    /// `1/h - 1/g`; zero for equal gains.
    fn gap(&self) -> f64 {
        if self.equal {
            0.0
        } else {
            1.0 / self.h - 1.0 / self.g
        }
    }

    fn threshold(&self, alpha: f64) -> f64 {
        if alpha == 0.0 {
            if self.equal || self.g >= self.h {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            self.gap() / alpha
        }
    }

    fn alpha_star(&self, q: f64) -> f64 {
        if self.equal {
            0.5
        } else {
            (0.5 + self.gap() / (2.0 * q)).clamp(0.0, 1.0)
        }
    }

    /// Cubic whose roots are the stationary points in `q` at a fixed split.
    /// Equals the (negated) derivative numerator over
    /// `(1 + (1-a) h q)(1 + g q)(1 + a g q)`.
    fn cubic(&self, a: f64) -> [f64; 4] {
        let Scaled {
            h, g, w, omega: o, ..
        } = *self;
        let aa = a * a - a;
        [
            LN_2 * h * aa * g * g * o,
            aa * g * g * h * w + LN_2 * g * ((a * a - 1.0) * h - g * a) * o,
            LN_2 * o * ((a - 1.0) * h - (a + 1.0) * g) + 2.0 * aa * g * h * w,
            (a - 1.0) * (h - g) * w - LN_2 * o,
        ]
    }

    /// Quadratic whose roots are the stationary points along the unclamped
    /// optimal-split curve; positive exactly where the Lagrangian increases.
    fn quadratic(&self) -> [f64; 3] {
        let Scaled {
            h, g, w, omega: o, ..
        } = *self;
        [
            LN_2 * o * g * g * h,
            w * g * g * h + LN_2 * o * g * (g + 2.0 * h),
            w * g * (h - g) + LN_2 * o * (g + h),
        ]
    }

    /// First and second partial derivatives in `q` at fixed `a`, plus the
    /// mixed partial.
    fn partials(&self, q: f64, a: f64) -> (f64, f64, f64) {
        let Scaled { h, g, w, omega, .. } = *self;
        let k = w / LN_2;
        let (u, v, z) = (1.0 + (1.0 - a) * h * q, 1.0 + g * q, 1.0 + a * g * q);
        let d1 = k * ((1.0 - a) * h / u - g / v + a * g / z) + omega;
        let d2 = k * (-((1.0 - a) * h / u).powi(2) + (g / v).powi(2) - (a * g / z).powi(2));
        let dqa = k * (-h / (u * u) + g / (z * z));
        (d1, d2, dqa)
    }

    /// One guarded Newton step on the stationarity condition.
    fn polish(&self, q: f64, fixed_alpha: Option<f64>, lo: f64, hi: f64) -> f64 {
        let slope = |q: f64| -> (f64, f64) {
            match fixed_alpha {
                Some(a) => {
                    let (d1, d2, _) = self.partials(q, a);
                    (d1, d2)
                }
                None => {
                    let a = self.alpha_star(q);
                    let (d1, d2, dqa) = self.partials(q, a);
                    let da = if self.equal {
                        0.0
                    } else {
                        -self.gap() / (2.0 * q * q)
                    };
                    (d1, d2 + dqa * da)
                }
            }
        };
        let (f, df) = slope(q);
        if df == 0.0 || !df.is_finite() {
            return q;
        }
        let next = q - f / df;
        if next > lo && next <= hi && slope(next).0.abs() < f.abs() {
            next
        } else {
            q
        }
    }
}

/// Optimal split for a given transmit power, clamped to `[0, 1]`. Whenever
/// `p` lies above the zero-secrecy threshold of the result, the value is
/// strictly below 1.
pub fn optimal_alpha_given_p(p: f64, ctx: &PerScContext) -> Result<f64> {
    if !(p > 0.0) {
        return Err(domain(format!(
            "optimal split needs positive power, got {p}"
        )));
    }
    Ok(alpha_star_unchecked(p, ctx))
}

pub(crate) fn alpha_star_unchecked(p: f64, ctx: &PerScContext) -> f64 {
    if gains_equal(ctx.h2, ctx.b2) {
        return 0.5;
    }
    (0.5 + ctx.noise / (2.0 * p) * (1.0 / ctx.h2 - 1.0 / ctx.b2)).clamp(0.0, 1.0)
}

/// Stationary powers at a fixed split that lie strictly above the
/// zero-secrecy threshold and at or below the peak.
pub fn cubic_candidates(alpha: f64, ctx: &PerScContext) -> Vec<f64> {
    let s = Scaled::new(ctx);
    cubic_roots_scaled(&s, alpha, ctx.peak / s.unit)
        .into_iter()
        .map(|q| q * s.unit)
        .collect()
}

fn cubic_roots_scaled(s: &Scaled, alpha: f64, qpeak: f64) -> Vec<f64> {
    let lo = s.threshold(alpha).max(0.0);
    if !(lo < qpeak) {
        return Vec::new();
    }
    real_roots_in(&s.cubic(alpha), lo, qpeak)
        .into_iter()
        .filter(|q| *q > lo)
        .map(|q| s.polish(q, Some(alpha), lo, qpeak))
        .collect()
}

/// Candidates along the optimal-split curve: its stationary points in the
/// region where the unclamped split is valid and secrecy is positive, plus
/// the peak-power boundary point when the peak is finite.
pub fn quadratic_candidates(ctx: &PerScContext) -> Result<Vec<Candidate>> {
    if ctx.peak.is_infinite() && ctx.omega >= 0.0 {
        return Err(Error::Unbounded { omega: ctx.omega });
    }
    let s = Scaled::new(ctx);
    Ok(quadratic_scaled(&s, ctx.peak / s.unit)
        .into_iter()
        .map(|(q, a)| Candidate {
            power: q * s.unit,
            alpha: a,
        })
        .collect())
}

fn quadratic_scaled(s: &Scaled, qpeak: f64) -> Vec<(f64, f64)> {
    // Valid region: split unclamped (q >= 1/g - 1/h) and secrecy positive
    // (q > full-AN threshold 1/h - 1/g when the eavesdropper is stronger).
    let floor = -s.gap();
    let lo = floor.max(s.gap()).max(0.0);
    let mut out = Vec::new();
    if lo < qpeak {
        for q in real_roots_in(&s.quadratic(), lo, qpeak) {
            if q > lo || (q == lo && floor > 0.0) {
                let q = s.polish(q, None, lo, qpeak);
                out.push((q, s.alpha_star(q)));
            }
        }
    }
    if qpeak.is_finite() && qpeak > lo {
        out.push((qpeak, s.alpha_star(qpeak)));
    }
    out
}

/// Builds the candidate set for the scenario the context falls into.
pub fn feasible_set(ctx: &PerScContext) -> Result<CandidateSet> {
    ctx.validate()?;
    if ctx.peak.is_infinite() && ctx.omega >= 0.0 {
        return Err(Error::Unbounded { omega: ctx.omega });
    }
    let scenario = Scenario::classify(ctx);
    let s = Scaled::new(ctx);
    let qpeak = ctx.peak / s.unit;
    let mut cands: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let at_peak = |cands: &mut Vec<(f64, f64)>| {
        if qpeak.is_finite() {
            cands.push((qpeak, 0.0));
        }
    };
    match scenario {
        Scenario::A => {
            cands.extend(quadratic_scaled(&s, qpeak));
            at_peak(&mut cands);
        }
        Scenario::B => at_peak(&mut cands),
        Scenario::C => cands.extend(quadratic_scaled(&s, qpeak)),
        Scenario::D => {
            cands.extend(quadratic_scaled(&s, qpeak));
            cands.extend(
                cubic_roots_scaled(&s, 0.0, qpeak)
                    .into_iter()
                    .map(|q| (q, 0.0)),
            );
            // Where the optimal split clamps to zero.
            cands.push((-s.gap(), 0.0));
        }
        Scenario::E => {
            cands.extend(
                cubic_roots_scaled(&s, 0.0, qpeak)
                    .into_iter()
                    .map(|q| (q, 0.0)),
            );
            at_peak(&mut cands);
        }
    }
    let candidates = cands
        .into_iter()
        .map(|(q, a)| Candidate {
            power: (q * s.unit).min(ctx.peak),
            alpha: a,
        })
        .collect();
    Ok(CandidateSet {
        scenario,
        candidates,
    })
}

fn best_of(ctx: &PerScContext, cands: impl IntoIterator<Item = Candidate>) -> PerScSolution {
    let mut best = PerScSolution::IDLE;
    for c in cands {
        let value = ctx.lagrangian(c.power, c.alpha);
        if value > best.value {
            best = PerScSolution {
                power: c.power,
                alpha: c.alpha,
                value,
            };
        }
    }
    best
}

/// Jointly optimal `(p, alpha)` and the Lagrangian value at the optimum. The
/// idle point `(0, 0)` with value 0 wins unless some candidate is strictly
/// better.
pub fn solve_per_sc(ctx: &PerScContext) -> Result<PerScSolution> {
    Ok(best_of(ctx, feasible_set(ctx)?.candidates))
}

/// Optimal power when the split is pinned to `alpha`.
pub fn solve_per_sc_fixed_alpha(ctx: &PerScContext, alpha: f64) -> Result<PerScSolution> {
    ctx.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain(format!(
            "power split must lie in [0, 1], got {alpha}"
        )));
    }
    let s = Scaled::new(ctx);
    let rate_grows = alpha < 1.0 && (alpha > 0.0 || (!s.equal && s.h > s.g));
    if ctx.peak.is_infinite() && (ctx.omega > 0.0 || (ctx.omega == 0.0 && rate_grows)) {
        return Err(Error::Unbounded { omega: ctx.omega });
    }
    let qpeak = ctx.peak / s.unit;
    let mut qs = Vec::with_capacity(5);
    let thr = s.threshold(alpha).max(0.0);
    if thr > 0.0 && thr.is_finite() {
        qs.push(thr.min(qpeak));
    }
    if alpha < 1.0 {
        qs.extend(cubic_roots_scaled(&s, alpha, qpeak));
    }
    if qpeak.is_finite() {
        qs.push(qpeak);
    }
    let mut best = best_of(
        ctx,
        qs.into_iter().map(|q| Candidate {
            power: (q * s.unit).min(ctx.peak),
            alpha,
        }),
    );
    if best.power == 0.0 {
        best.alpha = 0.0;
    }
    Ok(best)
}
