//! Uniform planar array geometry, beam gains and the LoS link budget.
//!
//! Angles follow the spherical convention used throughout the crate:
//! `elevation` is measured from the array boresight (zenith, `θ = 0`) and
//! `azimuth` is `atan2(x, y)`, so a direction is
//! `(sinθ sinφ, sinθ cosφ, cosθ)`.
//!
//! Element `(a, b)` of an `nx × ny` array sits at index `a * ny + b`
//! (row-major, `b` fastest) and carries the phase
//! `π sinθ (a cosφ + b sinφ)` for half-wavelength spacing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpaConfig {
    pub nx: usize,
    pub ny: usize,
}

impl UpaConfig {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!(
                "UPA needs at least one element per axis, got {nx}x{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn elements(&self) -> usize {
        self.nx * self.ny
    }
}

/// Azimuth `φ` and elevation-from-zenith `θ`, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Angles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Angles {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    /// Unit line-of-sight vector for these angles.
    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.elevation.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        [st * sp, st * cp, ct]
    }

    /// Great-circle angle between the two directions, radians.
    pub fn separation(&self, other: &Angles) -> f64 {
        let a = self.direction();
        let b = other.direction();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        cross_norm.atan2(dot)
    }

    /// Direction cosines `(sinθ cosφ, sinθ sinφ)` paired with the array axes.
    fn array_cosines(&self) -> (f64, f64) {
        let st = self.elevation.sin();
        (st * self.azimuth.cos(), st * self.azimuth.sin())
    }
}

/// Unit-norm array response.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(Vec<Complex64>);

impl SteeringVector {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `selfᴴ other`
    pub fn inner(&self, other: &SteeringVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn steering_vector(angles: Angles, upa: UpaConfig) -> SteeringVector {
    let (u, v) = angles.array_cosines();
    let scale = 1.0 / (upa.elements() as f64).sqrt();
    let mut out = Vec::with_capacity(upa.elements());
    for a in 0..upa.nx {
        for b in 0..upa.ny {
            let phase = PI * (a as f64 * u + b as f64 * v);
            out.push(Complex64::from_polar(scale, phase));
        }
    }
    SteeringVector(out)
}

/// Beamforming gain `|aᴴ f|²`.
pub fn array_gain(a: &SteeringVector, f: &SteeringVector) -> Result<f64> {
    Ok(a.inner(f)?.norm_sqr())
}

/// Closed-form `|aᴴ(p) a(q)|²` for a UPA.
///
/// The planar response separates into two Fejér kernels, one per axis, so
/// this avoids building either vector. Agrees with [`array_gain`] on
/// explicitly built steering vectors.
pub fn upa_gain(pointing: Angles, target: Angles, upa: UpaConfig) -> f64 {
    let (u1, v1) = pointing.array_cosines();
    let (u2, v2) = target.array_cosines();
    fejer(upa.nx, u2 - u1) * fejer(upa.ny, v2 - v1)
}

/// `|(1/n) Σ_{k<n} e^{jπkx}|²`
fn fejer(n: usize, x: f64) -> f64 {
    let half = 0.5 * PI * x;
    let den = (n as f64) * half.sin();
    if den.abs() < 1e-12 {
        // limit x → 0 (mod 2)
        return 1.0;
    }
    let r = (n as f64 * half).sin() / den;
    r * r
}

/// Communication link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    /// Transmit power `p`, W.
    pub power_w: f64,
    /// Carrier frequency, Hz.
    pub fc_hz: f64,
    /// Power gain at unit reference distance.
    pub alpha: f64,
    /// Receive noise standard deviation at the UAV.
    pub sigma_r: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            power_w: 1.0e4,
            fc_hz: 28e9,
            alpha: 1.0,
            sigma_r: 1.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("link.power_w", self.power_w),
            ("link.fc_hz", self.fc_hz),
            ("link.alpha", self.alpha),
            ("link.sigma_r", self.sigma_r),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// LoS channel `A = √(N_t N_r p) α̃ d⁻¹ e^{j2π f_c d / c}`.
pub fn channel_coefficient(
    distance: f64,
    budget: &LinkBudget,
    n_t: usize,
    n_r: usize,
) -> Result<Complex64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!(
            "distance must be positive, got {distance}"
        )));
    }
    let magnitude = ((n_t * n_r) as f64 * budget.power_w).sqrt() * budget.alpha / distance;
    let phase = (2.0 * PI * budget.fc_hz * distance / SPEED_OF_LIGHT).rem_euclid(2.0 * PI);
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Per-link beam directions for the SNR computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub true_angles: Angles,
    /// Transmit beam direction at the base station.
    pub tx_beam: Angles,
    /// Receive beam direction at the UAV.
    pub rx_beam: Angles,
    pub distance: f64,
}

/// Receive SNR of one link, `p |A wᴴb aᴴf|² / σ_r²`.
pub fn link_snr(
    link: &LinkGeometry,
    budget: &LinkBudget,
    bs_upa: UpaConfig,
    uav_upa: UpaConfig,
) -> Result<f64> {
    let a = channel_coefficient(link.distance, budget, bs_upa.elements(), uav_upa.elements())?;
    let tx = upa_gain(link.tx_beam, link.true_angles, bs_upa);
    let rx = upa_gain(link.rx_beam, link.true_angles, uav_upa);
    Ok(budget.power_w * a.norm_sqr() * tx * rx / (budget.sigma_r * budget.sigma_r))
}

/// Per-link SNRs and the average achievable rate `(1/K) Σ log2(1 + Γ_k)`.
pub fn receive_snr_and_rate(
    true_angles: &[Angles],
    tx_beams: &[Angles],
    rx_beams: &[Angles],
    distances: &[f64],
    budget: &LinkBudget,
    bs_upa: UpaConfig,
    uav_upa: UpaConfig,
) -> Result<(Vec<f64>, f64)> {
    let k = true_angles.len();
    for len in [tx_beams.len(), rx_beams.len(), distances.len()] {
        if len != k {
            return Err(Error::Dimension {
                expected: k,
                got: len,
            });
        }
    }
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut snrs = Vec::with_capacity(k);
    for i in 0..k {
        let link = LinkGeometry {
            true_angles: true_angles[i],
            tx_beam: tx_beams[i],
            rx_beam: rx_beams[i],
            distance: distances[i],
        };
        snrs.push(link_snr(&link, budget, bs_upa, uav_upa)?);
    }
    let rate = snrs.iter().map(|g| (1.0 + g).log2()).sum::<f64>() / k as f64;
    Ok((snrs, rate))
}
