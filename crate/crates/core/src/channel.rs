//! Monte-Carlo channel generation: uniform drop geometry, exponent path loss
//! anchored at free space, and multipath Rayleigh fading sampled per
//! subcarrier.
//!
//! Every receiver draws from its own ChaCha stream of the scenario seed, so
//! adding energy receivers never changes the information receivers' channels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ChannelRealization, SystemConfig};

const SPEED_OF_LIGHT: f64 = 3e8;

/// Stream offset separating energy receivers from information receivers.
const ER_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Information receivers are dropped up to this distance, meters.
    pub cell_radius: f64,
    /// Energy receivers are dropped up to this distance, meters.
    pub er_radius: f64,
    /// Reference distance of the path-loss anchor and minimum drop distance.
    pub ref_distance: f64,
    pub carrier: f64,
    pub bandwidth: f64,
    pub pathloss_exp: f64,
    pub num_taps: usize,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            cell_radius: 200.0,
            er_radius: 2.0,
            ref_distance: 1.0,
            carrier: 900e6,
            bandwidth: 1e6,
            pathloss_exp: 3.0,
            num_taps: 8,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(self.ref_distance)
            && positive(self.cell_radius)
            && positive(self.er_radius)
            && self.cell_radius >= self.ref_distance
            && self.er_radius >= self.ref_distance)
        {
            return Err(Error::InvalidConfig(format!(
                "radii must be positive and at least the reference distance: {self:?}"
            )));
        }
        if !(positive(self.carrier) && positive(self.bandwidth) && positive(self.pathloss_exp)) {
            return Err(Error::InvalidConfig(format!(
                "carrier, bandwidth and path-loss exponent must be positive: {self:?}"
            )));
        }
        if self.num_taps == 0 {
            return Err(Error::InvalidConfig(
                "at least one multipath tap is required".into(),
            ));
        }
        Ok(())
    }

    /// Free-space gain at the reference distance.
    pub fn anchor_gain(&self) -> f64 {
        (SPEED_OF_LIGHT / (4.0 * PI * self.carrier * self.ref_distance)).powi(2)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Large-scale power gain at distance `d` meters.
pub fn path_loss(d: f64, spec: &ScenarioSpec) -> Result<f64> {
    if !(d >= spec.ref_distance) || !d.is_finite() {
        return Err(domain(format!(
            "distance {d} m is below the reference distance {} m",
            spec.ref_distance
        )));
    }
    Ok(spec.anchor_gain() * (spec.ref_distance / d).powf(spec.pathloss_exp))
}

pub fn dbm_to_watts(x: f64) -> f64 {
    10f64.powf((x - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn receiver_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `num_taps` i.i.d. CN(0, 1/num_taps) taps.
fn draw_taps(rng: &mut impl Rng, num_taps: usize) -> Vec<Complex64> {
    let sd = (0.5 / num_taps as f64).sqrt();
    (0..num_taps)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect()
}

/// `|H(n)|^2` for `H(n) = sum_t c_t exp(-j 2 pi t n / N)`. For `N >= taps`
/// the band average equals the total tap power.
pub fn frequency_response_power(taps: &[Complex64], num_scs: usize) -> Vec<f64> {
    (0..num_scs)
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(t, c)| {
                    let phase = -2.0 * PI * ((t * n) % num_scs) as f64 / num_scs as f64;
                    c * Complex64::from_polar(1.0, phase)
                })
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect()
}

/// Small-scale fading power of one receiver, from its own stream.
pub fn small_scale_gains(seed: u64, stream: u64, num_taps: usize, num_scs: usize) -> Vec<f64> {
    let mut rng = receiver_rng(seed, stream);
    let _distance_draw: f64 = rng.random();
    frequency_response_power(&draw_taps(&mut rng, num_taps), num_scs)
}

fn receiver_gains(spec: &ScenarioSpec, stream: u64, radius: f64, num_scs: usize) -> Vec<f64> {
    let mut rng = receiver_rng(spec.seed, stream);
    let u: f64 = rng.random();
    let d = spec.ref_distance + u * (radius - spec.ref_distance);
    let pl = spec.anchor_gain() * (spec.ref_distance / d).powf(spec.pathloss_exp);
    frequency_response_power(&draw_taps(&mut rng, spec.num_taps), num_scs)
        .into_iter()
        .map(|h| pl * h)
        .collect()
}

/// Draws one channel realization for `config` under `spec`.
pub fn generate_scenario(config: &SystemConfig, spec: &ScenarioSpec) -> Result<ChannelRealization> {
    spec.validate()?;
    let n = config.num_scs;
    let mut gain = Vec::with_capacity(config.num_receivers());
    for k in 0..config.num_irs {
        gain.push(receiver_gains(spec, k as u64, spec.cell_radius, n));
    }
    for l in 0..config.num_ers {
        gain.push(receiver_gains(
            spec,
            ER_STREAM_BASE + l as u64,
            spec.er_radius,
            n,
        ));
    }
    ChannelRealization::new(gain, config.num_irs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config(k1: usize, k2: usize, n: usize) -> SystemConfig {
        SystemConfig {
            num_irs: k1,
            num_ers: k2,
            num_scs: n,
            total_power: 5.0,
            peak_power: f64::INFINITY,
            noise_power: 5e-12,
            weights: vec![1.0; k1],
            harvest_eff: vec![0.5; k2],
            harvest_target: vec![0.0; k2],
        }
    }

    #[test]
    fn path_loss_examples() {
        let spec = ScenarioSpec::default();
        let g0 = path_loss(1.0, &spec).unwrap();
        assert_relative_eq!(g0, 7.036e-4, max_relative = 1e-3);
        assert_relative_eq!(
            path_loss(2.0, &spec).unwrap(),
            g0 / 8.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            path_loss(200.0, &spec).unwrap(),
            g0 / 8e6,
            max_relative = 1e-14
        );
        assert!(path_loss(0.5, &spec).is_err());
    }

    #[test]
    fn dbm_examples() {
        assert_relative_eq!(dbm_to_watts(0.0), 1e-3, max_relative = 1e-15);
        assert_relative_eq!(dbm_to_watts(37.0), 5.0119, max_relative = 1e-4);
        assert_relative_eq!(dbm_to_watts(-83.0), 5.0119e-12, max_relative = 1e-4);
        assert_relative_eq!(
            watts_to_dbm(dbm_to_watts(-17.5)),
            -17.5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn same_seed_same_channels() {
        let cfg = config(3, 2, 16);
        let spec = ScenarioSpec {
            seed: 42,
            ..Default::default()
        };
        let a = generate_scenario(&cfg, &spec).unwrap();
        let b = generate_scenario(&cfg, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scenario(&cfg, &spec.with_seed(43)).unwrap());
    }

    #[test]
    fn adding_receivers_keeps_existing_streams() {
        let spec = ScenarioSpec {
            seed: 7,
            ..Default::default()
        };
        let small = generate_scenario(&config(2, 1, 8), &spec).unwrap();
        let big = generate_scenario(&config(3, 4, 8), &spec).unwrap();
        assert_eq!(small.gains()[0], big.gains()[0]);
        assert_eq!(small.gains()[1], big.gains()[1]);
        assert_eq!(small.gains()[2], big.gains()[3]);
    }

    #[test]
    fn band_energy_equals_tap_power() {
        let mut rng = receiver_rng(3, 0);
        let taps = draw_taps(&mut rng, 8);
        let tap_power: f64 = taps.iter().map(|c| c.norm_sqr()).sum();
        for n in [8, 16, 64] {
            let h = frequency_response_power(&taps, n);
            assert_relative_eq!(
                h.iter().sum::<f64>() / n as f64,
                tap_power,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = ScenarioSpec {
            num_taps: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScenarioSpec {
            er_radius: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
