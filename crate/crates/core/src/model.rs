//! System model: configuration, channel gains, allocations and the closed-form
//! rate and harvesting expressions every solver is built on.
//!
//! Rates are in bits/s/Hz per subcarrier, powers in watts and channel gains
//! are linear power gains. The reported objective is averaged over the band,
//! i.e. the weighted sum of per-subcarrier secrecy rates divided by the number
//! of subcarriers.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Relative tolerance used when comparing channel gains for equality.
pub const GAIN_REL_TOL: f64 = 1e-12;

pub(crate) fn gains_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= GAIN_REL_TOL * a.abs().max(b.abs())
}

/// Static system parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub num_irs: usize,
    pub num_ers: usize,
    pub num_scs: usize,
    /// Total transmit power budget over all subcarriers, watts.
    pub total_power: f64,
    /// Per-subcarrier peak power, watts. `f64::INFINITY` means unbounded.
    pub peak_power: f64,
    pub noise_power: f64,
    /// One positive weight per information receiver.
    pub weights: Vec<f64>,
    /// Energy harvesting efficiency per energy receiver, in (0, 1).
    pub harvest_eff: Vec<f64>,
    /// Minimum harvested power per energy receiver, watts.
    pub harvest_target: Vec<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_irs == 0 {
            return bad("at least one information receiver is required".into());
        }
        if self.num_scs == 0 {
            return bad("at least one subcarrier is required".into());
        }
        if !(self.total_power > 0.0 && self.total_power.is_finite()) {
            return bad(format!(
                "total power must be positive, got {}",
                self.total_power
            ));
        }
        if !(self.peak_power > 0.0) {
            return bad(format!(
                "peak power must be positive, got {}",
                self.peak_power
            ));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad(format!(
                "noise power must be positive, got {}",
                self.noise_power
            ));
        }
        if self.weights.len() != self.num_irs {
            return bad(format!(
                "{} weights for {} information receivers",
                self.weights.len(),
                self.num_irs
            ));
        }
        if self.harvest_eff.len() != self.num_ers || self.harvest_target.len() != self.num_ers {
            return bad(format!(
                "harvesting parameters must have one entry per energy receiver ({})",
                self.num_ers
            ));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return bad(format!("weights must be positive, got {w}"));
        }
        if let Some(z) = self.harvest_eff.iter().find(|z| !(**z > 0.0 && **z < 1.0)) {
            return bad(format!("harvesting efficiency must lie in (0, 1), got {z}"));
        }
        if let Some(q) = self
            .harvest_target
            .iter()
            .find(|q| !(**q >= 0.0 && q.is_finite()))
        {
            return bad(format!("harvest target must be nonnegative, got {q}"));
        }
        Ok(())
    }

    pub fn num_receivers(&self) -> usize {
        self.num_irs + self.num_ers
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Peak power with the total budget folded in. `p <= total_power` is implied
    /// by the sum-power constraint, so this never changes the feasible set.
    pub fn effective_peak(&self) -> f64 {
        self.peak_power.min(self.total_power)
    }
}

/// Channel power gains of all receivers on all subcarriers. Rows `0..num_irs`
/// are information receivers, the remaining rows are energy receivers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRealization {
    num_irs: usize,
    gain: Vec<Vec<f64>>,
    eve_gain: Vec<Vec<f64>>,
}

impl ChannelRealization {
    pub fn new(gain: Vec<Vec<f64>>, num_irs: usize) -> Result<Self> {
        if num_irs == 0 || num_irs > gain.len() {
            return Err(Error::Dimension(format!(
                "{num_irs} information receivers out of {} receivers",
                gain.len()
            )));
        }
        let n = gain[0].len();
        if n == 0 || gain.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(
                "gain rows must share a nonzero length".into(),
            ));
        }
        if let Some(g) = gain
            .iter()
            .flatten()
            .find(|g| !(**g > 0.0 && g.is_finite()))
        {
            return Err(domain(format!(
                "channel gains must be positive and finite, got {g}"
            )));
        }
        let eve_gain = eavesdropper_gains(&gain)?
            .into_iter()
            .take(num_irs)
            .collect();
        Ok(Self {
            num_irs,
            gain,
            eve_gain,
        })
    }

    pub fn num_irs(&self) -> usize {
        self.num_irs
    }

    pub fn num_ers(&self) -> usize {
        self.gain.len() - self.num_irs
    }

    pub fn num_receivers(&self) -> usize {
        self.gain.len()
    }

    pub fn num_scs(&self) -> usize {
        self.gain[0].len()
    }

    pub fn gain(&self, receiver: usize, sc: usize) -> f64 {
        self.gain[receiver][sc]
    }

    pub fn eve_gain(&self, ir: usize, sc: usize) -> f64 {
        self.eve_gain[ir][sc]
    }

    pub fn er_gain(&self, er: usize, sc: usize) -> f64 {
        self.gain[self.num_irs + er][sc]
    }

    pub fn gains(&self) -> &[Vec<f64>] {
        &self.gain
    }

    pub fn check_against(&self, config: &SystemConfig) -> Result<()> {
        if self.num_irs != config.num_irs
            || self.num_ers() != config.num_ers
            || self.num_scs() != config.num_scs
        {
            return Err(Error::Dimension(format!(
                "channels are {}+{} receivers x {} SCs, config expects {}+{} x {}",
                self.num_irs,
                self.num_ers(),
                self.num_scs(),
                config.num_irs,
                config.num_ers,
                config.num_scs
            )));
        }
        Ok(())
    }
}

/// For every receiver and subcarrier, the largest gain among all *other*
/// receivers on that subcarrier.
pub fn eavesdropper_gains(gain: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = gain.len();
    if k < 2 {
        return Err(Error::NoEavesdropper(k));
    }
    let n = gain[0].len();
    let mut out = vec![vec![0.0; n]; k];
    for sc in 0..n {
        // Largest and second largest give every leave-one-out maximum.
        let (mut best, mut best_idx, mut second) = (f64::NEG_INFINITY, 0, f64::NEG_INFINITY);
        for (r, row) in gain.iter().enumerate() {
            let g = row[sc];
            if g > best {
                second = best;
                best = g;
                best_idx = r;
            } else if g > second {
                second = g;
            }
        }
        for (r, row) in out.iter_mut().enumerate() {
            row[sc] = if r == best_idx { second } else { best };
        }
    }
    Ok(out)
}

/// Subcarrier assignment, total power and AN split per subcarrier.
///
/// Storing the owning receiver per subcarrier makes the "at most one IR per
/// SC" constraint structural. Unassigned subcarriers carry zero power and a
/// zero split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub assign: Vec<Option<usize>>,
    pub power: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl Allocation {
    pub fn empty(num_scs: usize) -> Self {
        Self {
            assign: vec![None; num_scs],
            power: vec![0.0; num_scs],
            alpha: vec![0.0; num_scs],
        }
    }

    pub fn num_scs(&self) -> usize {
        self.assign.len()
    }

    pub fn set(&mut self, sc: usize, ir: usize, power: f64, alpha: f64) {
        self.assign[sc] = Some(ir);
        self.power[sc] = power;
        self.alpha[sc] = alpha;
    }

    pub fn clear(&mut self, sc: usize) {
        self.assign[sc] = None;
        self.power[sc] = 0.0;
        self.alpha[sc] = 0.0;
    }

    /// Binary assignment indicator `x_{k,n}`.
    pub fn is_assigned(&self, ir: usize, sc: usize) -> bool {
        self.assign[sc] == Some(ir)
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn assigned_count(&self) -> usize {
        self.assign.iter().filter(|a| a.is_some()).count()
    }

    /// Structural checks: dimensions, zero power off-assignment, bounds.
    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        let n = config.num_scs;
        if self.assign.len() != n || self.power.len() != n || self.alpha.len() != n {
            return Err(Error::Dimension(format!(
                "allocation must cover {n} subcarriers"
            )));
        }
        for sc in 0..n {
            let (p, a) = (self.power[sc], self.alpha[sc]);
            match self.assign[sc] {
                None if p != 0.0 || a != 0.0 => {
                    return Err(domain(format!("unassigned SC {sc} carries power or split")));
                }
                Some(k) if k >= config.num_irs => {
                    return Err(domain(format!("SC {sc} assigned to unknown IR {k}")));
                }
                _ => {}
            }
            if !(p >= 0.0 && p <= config.peak_power) {
                return Err(domain(format!("SC {sc} power {p} outside [0, peak]")));
            }
            if !(0.0..=1.0).contains(&a) {
                return Err(domain(format!("SC {sc} split {a} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn check_rate_args(p: f64, alpha: f64, gain: f64, noise: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(domain(format!(
            "power must be nonnegative and finite, got {p}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain(format!(
            "power split must lie in [0, 1], got {alpha}"
        )));
    }
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(domain(format!("channel gain must be positive, got {gain}")));
    }
    if !(noise > 0.0 && noise.is_finite()) {
        return Err(domain(format!("noise power must be positive, got {noise}")));
    }
    Ok(())
}

/// Information rate at the intended receiver after AN cancellation.
pub fn rate_ir(p: f64, alpha: f64, h2: f64, noise: f64) -> Result<f64> {
    check_rate_args(p, alpha, h2, noise)?;
    Ok(((1.0 - alpha) * h2 * p / noise).ln_1p() / std::f64::consts::LN_2)
}

/// Rate decodable by the strongest eavesdropper, which sees the AN as noise.
pub fn rate_eve(p: f64, alpha: f64, b2: f64, noise: f64) -> Result<f64> {
    check_rate_args(p, alpha, b2, noise)?;
    Ok(((1.0 - alpha) * b2 * p / (noise + alpha * b2 * p)).ln_1p() / std::f64::consts::LN_2)
}

/// Power level below which the secrecy rate is zero for a given split.
///
/// Returns `+inf` / `-inf` for `alpha == 0` depending on whether the
/// eavesdropper is at least as strong as the receiver (ties count as stronger).
/// Callers clamp with `max(0.0)`.
pub fn secrecy_threshold(alpha: f64, h2: f64, b2: f64, noise: f64) -> Result<f64> {
    check_rate_args(0.0, alpha, h2, noise)?;
    check_rate_args(0.0, alpha, b2, noise)?;
    Ok(threshold_unchecked(alpha, h2, b2, noise))
}

pub(crate) fn threshold_unchecked(alpha: f64, h2: f64, b2: f64, noise: f64) -> f64 {
    let equal = gains_equal(h2, b2);
    if alpha == 0.0 {
        if equal || b2 >= h2 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else if equal {
        0.0
    } else {
        noise / alpha * (1.0 / h2 - 1.0 / b2)
    }
}

/// `[rate_ir - rate_eve]^+`.
pub fn secrecy_rate(p: f64, alpha: f64, h2: f64, b2: f64, noise: f64) -> Result<f64> {
    check_rate_args(p, alpha, h2, noise)?;
    check_rate_args(p, alpha, b2, noise)?;
    Ok(secrecy_rate_unchecked(p, alpha, h2, b2, noise))
}

pub(crate) fn secrecy_rate_unchecked(p: f64, alpha: f64, h2: f64, b2: f64, noise: f64) -> f64 {
    if p <= threshold_unchecked(alpha, h2, b2, noise).max(0.0) {
        return 0.0;
    }
    // (1 + (1-a)hp/s) (s + a b p) / (s + b p) - 1, factored to avoid cancellation:
    // p (1-a) (s (h - b) + a h b p) / (s (s + b p)).
    let excess = noise * (h2 - b2) + alpha * h2 * b2 * p;
    let ratio = p * (1.0 - alpha) * excess / (noise * (noise + b2 * p));
    ratio.ln_1p().max(0.0) / std::f64::consts::LN_2
}

/// Power harvested by energy receiver `er`. AN power is harvested as well, so
/// the split does not enter.
pub fn harvested_power(
    alloc: &Allocation,
    channels: &ChannelRealization,
    efficiency: f64,
    er: usize,
) -> Result<f64> {
    if er >= channels.num_ers() {
        return Err(Error::ErIndex {
            index: er,
            count: channels.num_ers(),
        });
    }
    Ok(harvested_unchecked(alloc, channels, efficiency, er))
}

pub(crate) fn harvested_unchecked(
    alloc: &Allocation,
    channels: &ChannelRealization,
    efficiency: f64,
    er: usize,
) -> f64 {
    let received: f64 = alloc
        .power
        .iter()
        .enumerate()
        .map(|(sc, p)| p * channels.er_gain(er, sc))
        .sum();
    efficiency * received
}

/// Harvested power at every energy receiver.
pub fn harvested_all(
    alloc: &Allocation,
    channels: &ChannelRealization,
    config: &SystemConfig,
) -> Vec<f64> {
    (0..config.num_ers)
        .map(|l| harvested_unchecked(alloc, channels, config.harvest_eff[l], l))
        .collect()
}

/// Weighted sum of per-subcarrier secrecy rates, not normalized.
pub fn weighted_secrecy_total(
    alloc: &Allocation,
    channels: &ChannelRealization,
    config: &SystemConfig,
) -> f64 {
    alloc
        .assign
        .iter()
        .enumerate()
        .filter_map(|(sc, a)| a.map(|k| (sc, k)))
        .map(|(sc, k)| {
            config.weights[k]
                * secrecy_rate_unchecked(
                    alloc.power[sc],
                    alloc.alpha[sc],
                    channels.gain(k, sc),
                    channels.eve_gain(k, sc),
                    config.noise_power,
                )
        })
        .sum()
}

/// Weighted sum secrecy rate averaged over the band (bits/s/Hz).
pub fn weighted_sum_secrecy(
    alloc: &Allocation,
    channels: &ChannelRealization,
    config: &SystemConfig,
) -> f64 {
    weighted_secrecy_total(alloc, channels, config) / config.num_scs as f64
}
