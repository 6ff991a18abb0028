use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::RngCore;

use crate::identity::{
    anchored, feature_similarity, feature_weights, magnitude_anchor, similarity_from_fn, FeatureSet,
};
use crate::matching::{AssignmentSolver, AutoSolver, CostMatrix};
use crate::sensing::Measurement;
use crate::tracking::Prediction;
use crate::{Error, Result};

/// What a scheme sees in one slot.
pub struct AssociationInput<'a> {
    /// One-step predictions, indexed by track (D-ID order).
    pub predictions: &'a [Prediction],
    /// Anonymous measurements in arrival order.
    pub measurements: &'a [Measurement],
    pub bs: Vector3<f64>,
    pub fc_hz: f64,
}

/// Where a scheme's beam directions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamSource {
    /// EKF predictions refreshed by anonymous echoes.
    Echo,
    /// Angles each UAV reported over the uplink in the previous slot.
    Feedback,
}

/// A strategy for pairing tracks with measurements.
pub trait AssociationScheme: Send + Sync {
    fn name(&self) -> &str;

    fn beam_source(&self) -> BeamSource {
        BeamSource::Echo
    }

    /// Returns `assoc[track] = measurement index`. Entries need not be
    /// distinct for schemes without a one-to-one constraint.
    fn associate(&self, input: &AssociationInput<'_>, rng: &mut dyn RngCore) -> Result<Vec<usize>>;
}

/// Features compared by an identity-matching scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    Both,
    LocationOnly,
    VelocityOnly,
}

/// Similarity-matrix association solved as a one-to-one assignment.
///
/// Position features are base-station-relative. The measured velocity for
/// a (measurement, track) pair combines the Doppler radial speed along the
/// measured line of sight with the track's predicted tangential velocity.
/// Both features are compared after anchoring with the fleet's mean
/// predicted magnitude, so range and speed differences register.
pub struct IdentityScheme {
    name: String,
    mode: FeatureMode,
    solver: Arc<dyn AssignmentSolver>,
}

impl IdentityScheme {
    pub fn new(name: impl Into<String>, mode: FeatureMode, solver: Arc<dyn AssignmentSolver>) -> Self {
        Self {
            name: name.into(),
            mode,
            solver,
        }
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }
}

/// Predicted `[position, velocity]` features, one row per track.
pub fn predicted_features(predictions: &[Prediction], bs: &Vector3<f64>) -> Result<FeatureSet> {
    FeatureSet::new(
        predictions
            .iter()
            .map(|p| {
                let pos = p.one_step.fixed_rows::<3>(0) - bs;
                let vel = p.one_step.fixed_rows::<3>(3).into_owned();
                vec![pos.as_slice().to_vec(), vel.as_slice().to_vec()]
            })
            .collect(),
    )
}

/// Velocity implied by measurement `y` if it came from a target whose
/// predicted velocity is `v_pred`: measured radial part plus predicted
/// tangential part.
pub fn composed_velocity(y: &Measurement, v_pred: &Vector3<f64>, fc_hz: f64) -> Vector3<f64> {
    let [x, yy, z] = y.angles().direction();
    let u = Vector3::new(x, yy, z);
    let tangential = (Matrix3::identity() - u * u.transpose()) * v_pred;
    y.radial_speed(fc_hz) * u + tangential
}

fn neutral_on_degenerate(c: Result<f64>) -> Result<f64> {
    match c {
        Err(Error::DegenerateFeature(_)) => Ok(0.5),
        other => other,
    }
}

impl AssociationScheme for IdentityScheme {
    fn name(&self) -> &str {
        &self.name
    }

    fn associate(&self, input: &AssociationInput<'_>, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        let k = input.predictions.len();
        if input.measurements.len() != k {
            return Err(Error::Dimension {
                expected: k,
                got: input.measurements.len(),
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let predicted = predicted_features(input.predictions, &input.bs)?;
        let weights = match self.mode {
            FeatureMode::LocationOnly => vec![1.0, 0.0],
            FeatureMode::VelocityOnly => vec![0.0, 1.0],
            FeatureMode::Both if k >= 2 => feature_weights(&predicted)?,
            FeatureMode::Both => vec![0.5, 0.5],
        };
        let positions: Vec<Vector3<f64>> = input.measurements.iter().map(Measurement::position).collect();
        let anchors = [magnitude_anchor(&predicted, 0), magnitude_anchor(&predicted, 1)];
        let s = similarity_from_fn(k, weights, |i, j, m| {
            let (measured, reference) = if m == 0 {
                (positions[i], Vector3::from_column_slice(predicted.get(j, 0)))
            } else {
                let v_pred = Vector3::from_column_slice(predicted.get(j, 1));
                (composed_velocity(&input.measurements[i], &v_pred, input.fc_hz), v_pred)
            };
            let c = feature_similarity(
                &anchored(measured.as_slice(), anchors[m]),
                &anchored(reference.as_slice(), anchors[m]),
            );
            neutral_on_degenerate(c)
        })?;
        let assignment = self.solver.solve(&CostMatrix::from_similarity(&s)?, rng)?;
        Ok(assignment.inverse())
    }
}

/// Each track takes the measurement nearest its predicted position, with no
/// one-to-one constraint.
pub struct NearestNeighborScheme;

impl AssociationScheme for NearestNeighborScheme {
    fn name(&self) -> &str {
        "classic-isac"
    }

    fn associate(&self, input: &AssociationInput<'_>, _rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        if input.measurements.is_empty() && !input.predictions.is_empty() {
            return Err(Error::Dimension {
                expected: input.predictions.len(),
                got: 0,
            });
        }
        let positions: Vec<Vector3<f64>> = input.measurements.iter().map(Measurement::position).collect();
        Ok(input
            .predictions
            .iter()
            .map(|p| {
                let target = p.one_step.fixed_rows::<3>(0) - input.bs;
                positions
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
                    .map_or(0, |(i, _)| i)
            })
            .collect())
    }
}

/// Beams follow uplink angle reports; identities arrive with the reports.
pub struct FeedbackScheme;

impl AssociationScheme for FeedbackScheme {
    fn name(&self) -> &str {
        "feedback"
    }

    fn beam_source(&self) -> BeamSource {
        BeamSource::Feedback
    }

    fn associate(&self, input: &AssociationInput<'_>, _rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        Ok((0..input.measurements.len()).collect())
    }
}

/// Association schemes by name.
#[derive(Clone)]
pub struct SchemeRegistry {
    schemes: BTreeMap<String, Arc<dyn AssociationScheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self {
            schemes: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, scheme: Arc<dyn AssociationScheme>) {
        self.schemes.insert(scheme.name().to_string(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn AssociationScheme>> {
        self.schemes.get(name).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown scheme '{name}' (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schemes.keys().map(String::as_str)
    }

    /// The registry with every scheme using `solver` for assignments.
    pub fn with_solver(solver: Arc<dyn AssignmentSolver>) -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(IdentityScheme::new("dia", FeatureMode::Both, solver.clone())));
        reg.register(Arc::new(IdentityScheme::new(
            "location-isac",
            FeatureMode::LocationOnly,
            solver.clone(),
        )));
        reg.register(Arc::new(IdentityScheme::new(
            "velocity-isac",
            FeatureMode::VelocityOnly,
            solver,
        )));
        reg.register(Arc::new(NearestNeighborScheme));
        reg.register(Arc::new(FeedbackScheme));
        reg
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::with_solver(Arc::new(AutoSolver::default()))
    }
}
