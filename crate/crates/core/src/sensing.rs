//! Echo measurement model.
//!
//! Delay, Doppler and the two angles are synthesized as truth plus Gaussian
//! error whose variance is inversely proportional to the echo SNR. Delay and
//! Doppler variances additionally scale with the array sizes, the reflection
//! coefficient and the transmit beam gain on the target.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::Angles;
use crate::scenario::TrueGeometry;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Smallest delay a measurement may report, s.
pub const DELAY_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    /// Matched-filter gain.
    pub g: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    /// Echo noise standard deviation.
    pub sigma: f64,
    /// Radar cross-section scale, m².
    pub xi: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            g: 10.0,
            a1: 6.7e-7,
            a2: 2e4,
            a3: 1.0,
            a4: 1.0,
            sigma: 1.0,
            xi: 10.0,
        }
    }
}

impl SensingConfig {
    /// `sigma = 0` is accepted and switches the measurement noise off.
    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 1.0) {
            return Err(Error::Config(format!("sensing.g must be >= 1, got {}", self.g)));
        }
        for (name, v) in [
            ("sensing.a1", self.a1),
            ("sensing.a2", self.a2),
            ("sensing.a3", self.a3),
            ("sensing.a4", self.a4),
            ("sensing.xi", self.xi),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sensing.sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Measurement-noise variances of delay (s²), Doppler (Hz²), azimuth and
/// elevation (rad²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseVariances {
    pub delay: f64,
    pub doppler: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl NoiseVariances {
    pub fn as_array(&self) -> [f64; 4] {
        [self.delay, self.doppler, self.azimuth, self.elevation]
    }

    pub fn zero() -> Self {
        Self {
            delay: 0.0,
            doppler: 0.0,
            azimuth: 0.0,
            elevation: 0.0,
        }
    }
}

/// One echo-derived observation. Deliberately carries no identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub delay: f64,
    pub doppler: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub variances: NoiseVariances,
}

impl Measurement {
    pub fn angles(&self) -> Angles {
        Angles::new(self.azimuth, self.elevation)
    }

    pub fn range(&self) -> f64 {
        0.5 * SPEED_OF_LIGHT * self.delay
    }

    /// Radial velocity implied by the Doppler shift, m/s (positive = receding).
    pub fn radial_speed(&self, fc_hz: f64) -> f64 {
        self.doppler * SPEED_OF_LIGHT / (2.0 * fc_hz)
    }

    /// Position relative to the base station from range and angles.
    pub fn position(&self) -> nalgebra::Vector3<f64> {
        let [x, y, z] = self.angles().direction();
        self.range() * nalgebra::Vector3::new(x, y, z)
    }
}

/// `β̂ = ξ / (τ̂ c)`
pub fn reflection_coefficient(delay: f64, xi: f64) -> Result<f64> {
    if !(delay > 0.0) {
        return Err(Error::Domain(format!("delay must be positive, got {delay}")));
    }
    Ok(xi / (delay * SPEED_OF_LIGHT))
}

/// Array sizes entering the delay/Doppler variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EchoArrays {
    pub n_t: usize,
    pub n_rb: usize,
}

pub fn noise_variances(
    power: f64,
    beta: f64,
    beam_gain: f64,
    cfg: &SensingConfig,
    arrays: EchoArrays,
) -> Result<NoiseVariances> {
    if !(power > 0.0) {
        return Err(Error::Domain(format!("power must be positive, got {power}")));
    }
    if !(beam_gain > 0.0) || beta == 0.0 {
        return Err(Error::Unobservable(format!(
            "beam gain {beam_gain} and reflection {beta} leave no echo SNR"
        )));
    }
    let s2 = cfg.sigma * cfg.sigma;
    let echo = cfg.g * (arrays.n_t * arrays.n_rb) as f64 * beta * beta * beam_gain * power;
    let angle = cfg.g * power;
    Ok(NoiseVariances {
        delay: cfg.a1 * cfg.a1 * s2 / echo,
        doppler: cfg.a2 * cfg.a2 * s2 / echo,
        azimuth: cfg.a3 * cfg.a3 * s2 / angle,
        elevation: cfg.a4 * cfg.a4 * s2 / angle,
    })
}

/// Truth plus Gaussian noise; four normals are drawn regardless of the variances.
pub fn simulate_measurement<R: Rng + ?Sized>(
    truth: &TrueGeometry,
    variances: NoiseVariances,
    rng: &mut R,
) -> Measurement {
    let mut z = [0.0f64; 4];
    for v in z.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    let delay = truth.delay + variances.delay.sqrt() * z[0];
    let azimuth = truth.angles.azimuth + variances.azimuth.sqrt() * z[2];
    Measurement {
        delay: delay.max(DELAY_FLOOR),
        doppler: truth.doppler + variances.doppler.sqrt() * z[1],
        azimuth: wrap_angle(azimuth),
        elevation: truth.angles.elevation + variances.elevation.sqrt() * z[3],
        variances,
    }
}

/// Wraps to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// A slot's measurements in shuffled order.
///
/// The scan exposes only identity-free [`Measurement`]s; the originating
/// UAV index of each entry is kept apart for scoring.
#[derive(Debug, Clone)]
pub struct AnonymizedScan {
    measurements: Vec<Measurement>,
    origin: Vec<usize>,
}

impl AnonymizedScan {
    /// Shuffles `per_target` (indexed by UAV) into a random order.
    pub fn shuffle<R: Rng + ?Sized>(per_target: Vec<Measurement>, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..per_target.len()).collect();
        order.shuffle(rng);
        let measurements = order.iter().map(|&k| per_target[k]).collect();
        Self {
            measurements,
            origin: order,
        }
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    /// Index of the UAV that produced measurement `i`. For scoring only.
    pub fn origin_of(&self, i: usize) -> usize {
        self.origin[i]
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }
}
