//! Fleet initialization and ground-truth kinematics.

use std::io::Write;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::Angles;
use crate::tracking::angles_from_position;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Digital identity: a label known only through the communication link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct UavTruth {
    pub d_id: DId,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetConfig {
    /// Number of UAVs.
    pub k: usize,
    /// Radius of the hemisphere the fleet starts on.
    pub radius_m: f64,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    /// Uniform deviation bound of the heading around the bearing to the BS.
    pub h_dev_deg: f64,
    /// Uniform bound of the initial climb/descent angle.
    pub v_dev_deg: f64,
    pub dt_s: f64,
    pub horizon: usize,
    /// Per-axis position process-noise std dev per slot, m.
    pub sigma_p: f64,
    /// Per-axis velocity process-noise std dev per slot, m/s.
    pub sigma_v: f64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            k: 10,
            radius_m: 100.0,
            v_min_mps: 8.0,
            v_max_mps: 20.0,
            h_dev_deg: 10.0,
            v_dev_deg: 10.0,
            dt_s: 0.02,
            horizon: 500,
            sigma_p: 0.02,
            sigma_v: 0.2,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("fleet.k must be at least 1".into()));
        }
        if !(self.v_min_mps > 0.0 && self.v_min_mps <= self.v_max_mps) {
            return Err(Error::Config(format!(
                "need 0 < fleet.v_min_mps <= fleet.v_max_mps, got {} and {}",
                self.v_min_mps, self.v_max_mps
            )));
        }
        if !(self.dt_s > 0.0) {
            return Err(Error::Config(format!(
                "fleet.dt_s must be positive, got {}",
                self.dt_s
            )));
        }
        if !(self.radius_m > 0.0) {
            return Err(Error::Config(format!(
                "fleet.radius_m must be positive, got {}",
                self.radius_m
            )));
        }
        for (name, v) in [
            ("fleet.h_dev_deg", self.h_dev_deg),
            ("fleet.v_dev_deg", self.v_dev_deg),
            ("fleet.sigma_p", self.sigma_p),
            ("fleet.sigma_v", self.sigma_v),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Places `k` UAVs uniformly on the upper hemisphere around the origin and
/// points each one roughly at the base station.
///
/// The heading is the ground-plane bearing to the BS perturbed by
/// `U(±h_dev)`; the pitch `U(±v_dev)` is applied after that.
pub fn init_fleet<R: Rng + ?Sized>(cfg: &FleetConfig, rng: &mut R) -> Result<Vec<UavTruth>> {
    cfg.validate()?;
    let h_dev = cfg.h_dev_deg.to_radians();
    let v_dev = cfg.v_dev_deg.to_radians();
    let mut fleet = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        // Uniform z on [0, r] gives uniform area on a sphere cap.
        let z = cfg.radius_m * rng.random::<f64>();
        let around = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let rho = (cfg.radius_m * cfg.radius_m - z * z).max(0.0).sqrt();
        let position = Vector3::new(rho * around.cos(), rho * around.sin(), z);

        let bearing = if rho > 1e-9 {
            (-position.y).atan2(-position.x)
        } else {
            around
        };
        let heading = bearing + uniform_symmetric(rng, h_dev);
        let pitch = uniform_symmetric(rng, v_dev);
        let speed = if cfg.v_max_mps > cfg.v_min_mps {
            rng.random_range(cfg.v_min_mps..=cfg.v_max_mps)
        } else {
            cfg.v_min_mps
        };
        let velocity = speed
            * Vector3::new(
                pitch.cos() * heading.cos(),
                pitch.cos() * heading.sin(),
                pitch.sin(),
            );
        fleet.push(UavTruth {
            d_id: DId(k as u32),
            position,
            velocity,
        });
    }
    Ok(fleet)
}

fn uniform_symmetric<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    bound * (2.0 * rng.random::<f64>() - 1.0)
}

/// One slot of the constant-velocity model with additive Gaussian process
/// noise. Six normals are always drawn so the stream stays aligned whatever
/// the noise levels.
pub fn step_motion<R: Rng + ?Sized>(
    state: &UavTruth,
    dt: f64,
    sigma_p: f64,
    sigma_v: f64,
    rng: &mut R,
) -> UavTruth {
    let mut noise = [0.0; 6];
    for n in noise.iter_mut() {
        *n = StandardNormal.sample(rng);
    }
    let mut position = state.position + dt * state.velocity;
    let mut velocity = state.velocity;
    for i in 0..3 {
        position[i] += sigma_p * noise[i];
        velocity[i] += sigma_v * noise[3 + i];
    }
    // Ground reflection.
    if position.z < 0.0 {
        position.z = -position.z;
        velocity.z = -velocity.z;
    }
    UavTruth {
        d_id: state.d_id,
        position,
        velocity,
    }
}

/// Noiseless echo parameters of one UAV seen from the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueGeometry {
    pub distance: f64,
    /// Round-trip delay, s.
    pub delay: f64,
    /// Doppler shift, Hz.
    pub doppler: f64,
    pub angles: Angles,
}

pub fn true_geometry(state: &UavTruth, bs: &Vector3<f64>, fc_hz: f64) -> Result<TrueGeometry> {
    let rel = state.position - bs;
    let distance = rel.norm();
    if !(distance > 0.0) {
        return Err(Error::Domain("UAV coincides with the base station".into()));
    }
    let (_, angles) = angles_from_position(&rel)?;
    Ok(TrueGeometry {
        distance,
        delay: 2.0 * distance / SPEED_OF_LIGHT,
        doppler: 2.0 * state.velocity.dot(&rel) * fc_hz / (SPEED_OF_LIGHT * distance),
        angles,
    })
}

/// Writes `t, d_id, px, py, pz, vx, vy, vz` rows, one per UAV per slot.
pub fn write_trajectories<W: Write>(out: W, slots: &[Vec<UavTruth>], dt: f64) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "d_id", "px", "py", "pz", "vx", "vy", "vz"])?;
    for (n, fleet) in slots.iter().enumerate() {
        let t = n as f64 * dt;
        for uav in fleet {
            w.serialize((
                t,
                uav.d_id.0,
                uav.position.x,
                uav.position.y,
                uav.position.z,
                uav.velocity.x,
                uav.velocity.y,
                uav.velocity.z,
            ))?;
        }
    }
    w.flush()?;
    Ok(())
}
