use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use super::scheme::{AssociationInput, AssociationScheme, BeamSource};
use crate::array::{receive_snr_and_rate, upa_gain, Angles, UpaConfig};
use crate::scenario::{init_fleet, step_motion, true_geometry, TrueGeometry, UavTruth};
use crate::sensing::{
    noise_variances, reflection_coefficient, simulate_measurement, AnonymizedScan, Measurement,
    NoiseVariances,
};
use crate::tracking::{
    angles_from_position, coast, ekf_step, initial_mse, predict, NoiseModel, Prediction, TrackState,
};
use crate::{Error, Result};

/// Beam gain below which a UAV is treated as sitting in a null of every
/// beam. Keeps the echo variances finite.
pub const MIN_SENSING_GAIN: f64 = 1e-6;

/// Per-UAV outcome of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRecord {
    pub uav: usize,
    pub true_angles: Angles,
    /// Transmit beam used for this UAV in this slot.
    pub beam_angles: Angles,
    /// This UAV's own measurement (echo or pilot).
    pub measured_angles: Angles,
    /// Angles of the track after the slot's update.
    pub tracked_angles: Angles,
    pub assigned_ok: bool,
    pub snr: f64,
    /// `log2(1 + snr)` when correctly assigned, else 0.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub links: Vec<LinkRecord>,
}

impl SlotRecord {
    pub fn correct(&self) -> usize {
        self.links.iter().filter(|l| l.assigned_ok).count()
    }

    pub fn mean_rate(&self) -> f64 {
        if self.links.is_empty() {
            0.0
        } else {
            self.links.iter().map(|l| l.rate).sum::<f64>() / self.links.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub k: usize,
    pub slots: Vec<SlotRecord>,
    /// Track updates skipped because the innovation covariance was ill-conditioned.
    pub coasted: usize,
}

impl TrialResult {
    /// Fraction of correct pairings over all slots and UAVs. A trial with no
    /// slots scores 1 and reports itself as vacuous.
    pub fn accuracy(&self) -> (f64, bool) {
        let total = self.slots.len() * self.k;
        if total == 0 {
            return (1.0, true);
        }
        let correct: usize = self.slots.iter().map(SlotRecord::correct).sum();
        (correct as f64 / total as f64, false)
    }
}

/// Mutable state carried from slot to slot.
#[derive(Debug, Clone)]
pub struct TrialState {
    pub truths: Vec<UavTruth>,
    pub tracks: Vec<TrackState>,
    /// UAV receive beams for the next slot.
    pub rx_beams: Vec<Angles>,
    /// Last uplink angle reports (feedback beams only).
    pub reports: Vec<Angles>,
    pub coasted: usize,
    motion: ChaCha8Rng,
    sensing: ChaCha8Rng,
    association: ChaCha8Rng,
}

impl TrialState {
    /// Independent streams for motion, sensing noise and the scheme, so the
    /// true trajectories do not depend on which scheme runs.
    pub fn new(cfg: &SimConfig, seed: u64) -> Result<Self> {
        let mut motion = stream(seed, 0);
        let truths = init_fleet(&cfg.fleet, &mut motion)?;
        Self::with_motion(cfg, truths, seed, motion)
    }

    /// Starts from a given fleet instead of a random one.
    pub fn from_fleet(cfg: &SimConfig, truths: Vec<UavTruth>, seed: u64) -> Result<Self> {
        Self::with_motion(cfg, truths, seed, stream(seed, 0))
    }

    fn with_motion(cfg: &SimConfig, truths: Vec<UavTruth>, seed: u64, motion: ChaCha8Rng) -> Result<Self> {
        let bs = cfg.bs_position();
        let tracks: Vec<TrackState> = truths
            .iter()
            .map(|u| TrackState::new(u.d_id, u.position, u.velocity, initial_mse()))
            .collect();
        let rx_beams = tracks
            .iter()
            .map(|t| predict(t, cfg.fleet.dt_s, &bs).map(|p| p.angles_one))
            .collect::<Result<Vec<_>>>()?;
        let reports = truths
            .iter()
            .map(|u| angles_from_position(&(u.position - bs)).map(|(_, a)| a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            truths,
            tracks,
            rx_beams,
            reports,
            coasted: 0,
            motion,
            sensing: stream(seed, 1),
            association: stream(seed, 2),
        })
    }
}

fn stream(seed: u64, n: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(n);
    r
}

/// A configured scheme ready to run trials.
pub struct Simulation<'a> {
    cfg: &'a SimConfig,
    scheme: &'a dyn AssociationScheme,
    bs_tx: UpaConfig,
    uav_rx: UpaConfig,
    bs: Vector3<f64>,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a SimConfig, scheme: &'a dyn AssociationScheme) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            scheme,
            bs_tx: cfg.array.bs_tx()?,
            uav_rx: cfg.array.uav_rx()?,
            bs: cfg.bs_position(),
        })
    }

    pub fn run_trial(&self, trial: usize, seed: u64) -> Result<TrialResult> {
        self.run_from(trial, TrialState::new(self.cfg, seed)?)
    }

    /// Runs the configured horizon from an existing state.
    pub fn run_from(&self, trial: usize, mut state: TrialState) -> Result<TrialResult> {
        let slots = (0..self.cfg.fleet.horizon)
            .map(|n| self.run_slot(&mut state, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrialResult {
            trial,
            k: state.truths.len(),
            slots,
            coasted: state.coasted,
        })
    }

    /// Advances the world by one slot: beam, move, sense, associate, update.
    pub fn run_slot(&self, state: &mut TrialState, slot: usize) -> Result<SlotRecord> {
        match self.scheme.beam_source() {
            BeamSource::Echo => self.echo_slot(state, slot),
            BeamSource::Feedback => self.feedback_slot(state, slot),
        }
    }

    fn advance_truth(&self, state: &mut TrialState) -> Result<Vec<TrueGeometry>> {
        let f = &self.cfg.fleet;
        for u in state.truths.iter_mut() {
            *u = step_motion(u, f.dt_s, f.sigma_p, f.sigma_v, &mut state.motion);
        }
        state
            .truths
            .iter()
            .map(|u| true_geometry(u, &self.bs, self.cfg.link.fc_hz))
            .collect()
    }

    fn echo_slot(&self, state: &mut TrialState, slot: usize) -> Result<SlotRecord> {
        let cfg = self.cfg;
        let dt = cfg.fleet.dt_s;
        let k = state.tracks.len();
        let predictions = state
            .tracks
            .iter()
            .map(|t| predict(t, dt, &self.bs))
            .collect::<Result<Vec<Prediction>>>()?;
        let tx: Vec<Angles> = predictions.iter().map(|p| p.angles_one).collect();
        let rx = std::mem::replace(
            &mut state.rx_beams,
            predictions.iter().map(|p| p.angles_two).collect(),
        );

        let geoms = self.advance_truth(state)?;
        let mut own = Vec::with_capacity(k);
        for g in &geoms {
            let gain = tx
                .iter()
                .map(|b| upa_gain(*b, g.angles, self.bs_tx))
                .fold(0.0, f64::max)
                .max(MIN_SENSING_GAIN);
            let beta = reflection_coefficient(g.delay, cfg.sensing.xi)?;
            let var = noise_variances(cfg.link.power_w, beta, gain, &cfg.sensing, cfg.array.echo())?;
            own.push(simulate_measurement(g, var, &mut state.sensing));
        }
        let scan = AnonymizedScan::shuffle(own.clone(), &mut state.sensing);

        let input = AssociationInput {
            predictions: &predictions,
            measurements: scan.measurements(),
            bs: self.bs,
            fc_hz: cfg.link.fc_hz,
        };
        let assoc = self.scheme.associate(&input, &mut state.association)?;
        check_association(&assoc, k, scan.len())?;

        let mut flags = Vec::with_capacity(k);
        for (track, &m) in state.tracks.iter_mut().zip(&assoc) {
            let y = &scan.measurements()[m];
            let noise = NoiseModel::new(cfg.fleet.sigma_p, cfg.fleet.sigma_v, y.variances.as_array());
            *track = match ekf_step(track, y, &noise, dt, &self.bs, cfg.link.fc_hz) {
                Ok(next) => next,
                Err(Error::Numerical(_)) => {
                    state.coasted += 1;
                    coast(track, &noise, dt)
                }
                Err(e) => return Err(e),
            };
            flags.push(scan.origin_of(m) == track.d_id.0 as usize);
        }
        let tracked = state
            .tracks
            .iter()
            .map(|t| angles_from_position(&(t.position() - self.bs)).map(|(_, a)| a))
            .collect::<Result<Vec<_>>>()?;
        self.record(slot, &geoms, &tx, &rx, &own, &tracked, &flags)
    }

    fn feedback_slot(&self, state: &mut TrialState, slot: usize) -> Result<SlotRecord> {
        let cfg = self.cfg;
        let k = state.truths.len();
        let beams = state.reports.clone();
        let geoms = self.advance_truth(state)?;
        let var = pilot_variances(cfg)?;
        let own: Vec<Measurement> = geoms
            .iter()
            .map(|g| simulate_measurement(g, var, &mut state.sensing))
            .collect();

        let predictions = Vec::new();
        let input = AssociationInput {
            predictions: &predictions,
            measurements: &own,
            bs: self.bs,
            fc_hz: cfg.link.fc_hz,
        };
        let assoc = self.scheme.associate(&input, &mut state.association)?;
        check_association(&assoc, k, own.len())?;
        let flags: Vec<bool> = assoc.iter().enumerate().map(|(u, &m)| u == m).collect();
        state.reports = assoc.iter().map(|&m| own[m].angles()).collect();
        let tracked = state.reports.clone();
        self.record(slot, &geoms, &beams, &beams, &own, &tracked, &flags)
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        slot: usize,
        geoms: &[TrueGeometry],
        tx: &[Angles],
        rx: &[Angles],
        own: &[Measurement],
        tracked: &[Angles],
        flags: &[bool],
    ) -> Result<SlotRecord> {
        let truth: Vec<Angles> = geoms.iter().map(|g| g.angles).collect();
        let distances: Vec<f64> = geoms.iter().map(|g| g.distance).collect();
        let (snrs, _) = receive_snr_and_rate(
            &truth,
            tx,
            rx,
            &distances,
            &self.cfg.link,
            self.bs_tx,
            self.uav_rx,
        )?;
        let links = (0..geoms.len())
            .map(|u| LinkRecord {
                uav: u,
                true_angles: truth[u],
                beam_angles: tx[u],
                measured_angles: own[u].angles(),
                tracked_angles: tracked[u],
                assigned_ok: flags[u],
                snr: snrs[u],
                rate: if flags[u] { (1.0 + snrs[u]).log2() } else { 0.0 },
            })
            .collect();
        Ok(SlotRecord { slot, links })
    }
}

/// Angle variances of an uplink pilot: the angle formula with unit
/// processing gain.
fn pilot_variances(cfg: &SimConfig) -> Result<NoiseVariances> {
    let p = cfg.link.power_w;
    if !(p > 0.0) {
        return Err(Error::Domain(format!("power must be positive, got {p}")));
    }
    let s2 = cfg.sensing.sigma * cfg.sensing.sigma;
    Ok(NoiseVariances {
        delay: 0.0,
        doppler: 0.0,
        azimuth: cfg.sensing.a3 * cfg.sensing.a3 * s2 / p,
        elevation: cfg.sensing.a4 * cfg.sensing.a4 * s2 / p,
    })
}

fn check_association(assoc: &[usize], k: usize, measurements: usize) -> Result<()> {
    if assoc.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: assoc.len(),
        });
    }
    if let Some(&m) = assoc.iter().find(|&&m| m >= measurements) {
        return Err(Error::Constraint(format!(
            "association points at measurement {m} of {measurements}"
        )));
    }
    Ok(())
}

/// Runs one trial of `scheme` under `cfg` with the given trial seed.
pub fn run_trial(cfg: &SimConfig, scheme: &dyn AssociationScheme, trial: usize, seed: u64) -> Result<TrialResult> {
    Simulation::new(cfg, scheme)?.run_trial(trial, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scheme::SchemeRegistry;

    fn small() -> SimConfig {
        let mut c = SimConfig::default();
        c.fleet.k = 4;
        c.fleet.horizon = 20;
        c
    }

    #[test]
    fn zero_horizon_is_vacuous() {
        let mut c = small();
        c.fleet.horizon = 0;
        let reg = SchemeRegistry::default();
        let r = run_trial(&c, reg.get("dia").unwrap().as_ref(), 0, 9).unwrap();
        assert_eq!(r.accuracy(), (1.0, true));
    }

    #[test]
    fn truth_is_shared_across_schemes() {
        let c = small();
        let reg = SchemeRegistry::default();
        let runs: Vec<TrialResult> = reg
            .names()
            .map(|n| run_trial(&c, reg.get(n).unwrap().as_ref(), 0, 42).unwrap())
            .collect();
        for r in &runs[1..] {
            for (a, b) in r.slots.iter().zip(&runs[0].slots) {
                for (la, lb) in a.links.iter().zip(&b.links) {
                    assert_eq!(la.true_angles, lb.true_angles);
                }
            }
        }
    }

    #[test]
    fn wrong_pairing_earns_no_rate() {
        let c = small();
        let reg = SchemeRegistry::default();
        let r = run_trial(&c, reg.get("classic-isac").unwrap().as_ref(), 0, 3).unwrap();
        for slot in &r.slots {
            assert_eq!(slot.links.len(), 4);
            for l in &slot.links {
                assert!(l.snr >= 0.0);
                if !l.assigned_ok {
                    assert_eq!(l.rate, 0.0);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_result() {
        let c = small();
        let reg = SchemeRegistry::default();
        let s = reg.get("dia").unwrap();
        assert_eq!(
            run_trial(&c, s.as_ref(), 0, 5).unwrap(),
            run_trial(&c, s.as_ref(), 0, 5).unwrap()
        );
    }
}
