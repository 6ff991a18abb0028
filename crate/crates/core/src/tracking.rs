//! Extended Kalman filter for constant-velocity UAV tracks.
//!
//! The state is `x = [p; v]` in the base-station frame and the filter
//! consumes the reduced measurement `y = (τ, μ, φ, θ)`:
//!
//! ```text
//! τ = 2‖p − p_b‖ / c
//! μ = 2 vᵀ(p − p_b) f_c / (c ‖p − p_b‖)
//! φ = atan2(p₁, p₂),  θ = arccos(p₃ / ‖p‖)     (p relative to p_b)
//! ```
//!
//! One step runs: state prediction, linearization at the prediction, MSE
//! prediction `G M Gᵀ + Q_s`, Kalman gain, state correction and the MSE update
//! `(I − K H) M`.

use nalgebra::{Matrix4, Matrix6, SMatrix, Vector3, Vector4, Vector6};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::array::{Angles, UpaConfig};
use crate::scenario::DId;
use crate::sensing::{wrap_angle, Measurement};
use crate::{Error, Result, SPEED_OF_LIGHT};

pub type Jacobian = SMatrix<f64, 4, 6>;

/// Largest condition number accepted for the (equilibrated) innovation covariance.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub d_id: DId,
    pub x: Vector6<f64>,
    /// MSE matrix of `x`.
    pub mse: Matrix6<f64>,
}

impl TrackState {
    pub fn new(d_id: DId, position: Vector3<f64>, velocity: Vector3<f64>, mse: Matrix6<f64>) -> Self {
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&position);
        x.fixed_rows_mut::<3>(3).copy_from(&velocity);
        Self { d_id, x, mse }
    }

    pub fn position(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(3).into_owned()
    }
}

/// Default initial MSE: 1 m² per position axis, 1 (m/s)² per velocity axis.
pub fn initial_mse() -> Matrix6<f64> {
    Matrix6::identity()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub process: Matrix6<f64>,
    pub measurement: Matrix4<f64>,
}

impl NoiseModel {
    /// `Q_s = diag(σ_p² I₃, σ_v² I₃)`, `Q_m = diag(σ₁², σ₂², σ₃², σ₄²)`.
    pub fn new(sigma_p: f64, sigma_v: f64, measurement: [f64; 4]) -> Self {
        let mut process = Matrix6::zeros();
        for i in 0..3 {
            process[(i, i)] = sigma_p * sigma_p;
            process[(i + 3, i + 3)] = sigma_v * sigma_v;
        }
        Self {
            process,
            measurement: Matrix4::from_diagonal(&Vector4::from(measurement)),
        }
    }
}

/// Constant-velocity transition `G = [I, Δt I; 0, I]`.
pub fn transition(dt: f64) -> Matrix6<f64> {
    let mut g = Matrix6::identity();
    for i in 0..3 {
        g[(i, i + 3)] = dt;
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub one_step: Vector6<f64>,
    pub two_step: Vector6<f64>,
    pub angles_one: Angles,
    pub angles_two: Angles,
}

pub fn predict(state: &TrackState, dt: f64, bs: &Vector3<f64>) -> Result<Prediction> {
    let g = transition(dt);
    let one_step = g * state.x;
    let two_step = g * one_step;
    let (_, angles_one) = angles_from_position(&(one_step.fixed_rows::<3>(0) - bs))?;
    let (_, angles_two) = angles_from_position(&(two_step.fixed_rows::<3>(0) - bs))?;
    Ok(Prediction {
        one_step,
        two_step,
        angles_one,
        angles_two,
    })
}

/// Range and angles of a base-station-relative position.
///
/// Inverts `p₁ = d sinθ sinφ`, `p₂ = d sinθ cosφ`, `p₃ = d cosθ`. At the
/// zenith the azimuth is reported as 0.
pub fn angles_from_position(p: &Vector3<f64>) -> Result<(f64, Angles)> {
    let d = p.norm();
    if !(d > 0.0) {
        return Err(Error::Domain("position coincides with the array".into()));
    }
    let elevation = (p.z / d).clamp(-1.0, 1.0).acos();
    let azimuth = if p.x == 0.0 && p.y == 0.0 {
        0.0
    } else {
        p.x.atan2(p.y)
    };
    Ok((d, Angles::new(azimuth, elevation)))
}

/// Forward spherical relations; inverse of [`angles_from_position`].
pub fn position_from_angles(d: f64, angles: Angles) -> Vector3<f64> {
    let [x, y, z] = angles.direction();
    d * Vector3::new(x, y, z)
}

/// Noiseless `(τ, μ, φ, θ)` for state `x`.
pub fn measurement_function(x: &Vector6<f64>, bs: &Vector3<f64>, fc_hz: f64) -> Result<Vector4<f64>> {
    let p = x.fixed_rows::<3>(0) - bs;
    let v = x.fixed_rows::<3>(3);
    let (d, angles) = angles_from_position(&p)?;
    Ok(Vector4::new(
        2.0 * d / SPEED_OF_LIGHT,
        2.0 * v.dot(&p) * fc_hz / (SPEED_OF_LIGHT * d),
        angles.azimuth,
        angles.elevation,
    ))
}

/// Analytic `∂(τ, μ, φ, θ)/∂x`.
///
/// The delay row is `m(i) = 2p(i)/(c‖p‖)` and the Doppler row's velocity
/// block is `f_c m(i)`. Exactly at the zenith the azimuth row and the
/// horizontal part of the elevation row are zero.
pub fn jacobian(x: &Vector6<f64>, bs: &Vector3<f64>, fc_hz: f64) -> Result<Jacobian> {
    let p = x.fixed_rows::<3>(0) - bs;
    let v = x.fixed_rows::<3>(3);
    let d2 = p.norm_squared();
    let d = d2.sqrt();
    if !(d > 0.0) {
        return Err(Error::SingularGeometry("zero range".into()));
    }
    let mut h = Jacobian::zeros();
    let pv = p.dot(&v);
    for i in 0..3 {
        let m = 2.0 * p[i] / (SPEED_OF_LIGHT * d);
        h[(0, i)] = m;
        h[(1, i)] = 2.0 * fc_hz / SPEED_OF_LIGHT * (v[i] / d - pv * p[i] / (d2 * d));
        h[(1, i + 3)] = fc_hz * m;
    }
    let rho2 = p.x * p.x + p.y * p.y;
    if rho2 > 0.0 {
        let rho = rho2.sqrt();
        h[(2, 0)] = p.y / rho2;
        h[(2, 1)] = -p.x / rho2;
        h[(3, 0)] = p.x * p.z / (d2 * rho);
        h[(3, 1)] = p.y * p.z / (d2 * rho);
        h[(3, 2)] = -rho / d2;
    }
    Ok(h)
}

/// `ψ_{θ,φ}(e, r) = exp(jπ sinθ [(a − ζ_a) cosφ + (b − ζ_b) sinφ])` for
/// transmit element `e = (a, b)` and receive element `r = (ζ_a, ζ_b)`.
fn psi(theta: f64, phi: f64, e: (usize, usize), r: (usize, usize)) -> Complex64 {
    Complex64::from_polar(1.0, PI * theta.sin() * offset(phi, e, r))
}

/// `χ = ∂ ln ψ / ∂θ`
fn chi(theta: f64, phi: f64, e: (usize, usize), r: (usize, usize)) -> Complex64 {
    Complex64::new(0.0, PI * theta.cos() * offset(phi, e, r))
}

fn offset(phi: f64, e: (usize, usize), r: (usize, usize)) -> f64 {
    (e.0 as f64 - r.0 as f64) * phi.cos() + (e.1 as f64 - r.1 as f64) * phi.sin()
}

/// `∂η/∂θ` for `η(θ) = √(N_t N_rb) β u(φ,θ) aᴴ(φ,θ) a(φ̂,θ̂)`.
///
/// Entry `r` is `(β/√N_t) Σ_e ψ_{θ̂,φ̂}(e, 0) · (−χ_{θ,φ}(e, r)) / ψ_{θ,φ}(e, r)`,
/// with receive elements in the same row-major order as
/// [`crate::array::steering_vector`].
#[allow(clippy::too_many_arguments)]
pub fn partial_eta_theta(
    theta: f64,
    phi: f64,
    theta_hat: f64,
    phi_hat: f64,
    beta: f64,
    upa_tx: UpaConfig,
    upa_rx: UpaConfig,
) -> Vec<Complex64> {
    let scale = beta / (upa_tx.elements() as f64).sqrt();
    let mut out = Vec::with_capacity(upa_rx.elements());
    for ra in 0..upa_rx.nx {
        for rb in 0..upa_rx.ny {
            let r = (ra, rb);
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..upa_tx.nx {
                for b in 0..upa_tx.ny {
                    let e = (a, b);
                    acc += psi(theta_hat, phi_hat, e, (0, 0)) * -chi(theta, phi, e, r)
                        / psi(theta, phi, e, r);
                }
            }
            out.push(scale * acc);
        }
    }
    out
}

/// Runs one EKF cycle of `state` against measurement `y`.
///
/// The azimuth and elevation innovations are wrapped to `(−π, π]`. If the
/// innovation covariance is too ill-conditioned to invert, a
/// [`Error::Numerical`] is returned and the caller keeps its prediction.
pub fn ekf_step(
    state: &TrackState,
    y: &Measurement,
    noise: &NoiseModel,
    dt: f64,
    bs: &Vector3<f64>,
    fc_hz: f64,
) -> Result<TrackState> {
    let g = transition(dt);
    let x_pred = g * state.x;
    let h = jacobian(&x_pred, bs, fc_hz)?;
    let m_pred = g * state.mse * g.transpose() + noise.process;
    let s = noise.measurement + h * m_pred * h.transpose();
    let s_inv = invert_innovation(&s)?;
    let gain = m_pred * h.transpose() * s_inv;

    let predicted = measurement_function(&x_pred, bs, fc_hz)?;
    let mut innovation = Vector4::new(y.delay, y.doppler, y.azimuth, y.elevation) - predicted;
    innovation[2] = wrap_angle(innovation[2]);
    innovation[3] = wrap_angle(innovation[3]);

    let x = x_pred + gain * innovation;
    let mse = (Matrix6::identity() - gain * h) * m_pred;
    Ok(TrackState {
        d_id: state.d_id,
        x,
        mse: 0.5 * (mse + mse.transpose()),
    })
}

/// Inverse of a symmetric positive-definite innovation covariance.
///
/// The channels live on wildly different scales (s² next to Hz²), so the
/// conditioning test runs on the unit-diagonal correlation form.
fn invert_innovation(s: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let mut scale = Vector4::zeros();
    for i in 0..4 {
        let d = s[(i, i)];
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Numerical(format!(
                "innovation variance {d} on channel {i}"
            )));
        }
        scale[i] = 1.0 / d.sqrt();
    }
    let unit = Matrix4::from_diagonal(&scale);
    let corr = unit * s * unit;
    let corr = 0.5 * (corr + corr.transpose());
    let eig = corr.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > MAX_INNOVATION_CONDITION {
        return Err(Error::Numerical(format!(
            "innovation covariance condition {:.3e}",
            hi / lo
        )));
    }
    let inv = corr
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance not positive definite".into()))?
        .inverse();
    Ok(unit * inv * unit)
}

/// Coasting update used when a measurement cannot be applied.
pub fn coast(state: &TrackState, noise: &NoiseModel, dt: f64) -> TrackState {
    let g = transition(dt);
    let mse = g * state.mse * g.transpose() + noise.process;
    TrackState {
        d_id: state.d_id,
        x: g * state.x,
        mse: 0.5 * (mse + mse.transpose()),
    }
}
