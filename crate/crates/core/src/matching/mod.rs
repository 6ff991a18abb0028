//! P-ID pair assignment.
//!
//! Measured P-IDs are matched one-to-one to predicted P-IDs by minimizing
//! `f1 + f2` over permutations, where `f1` is the mean assigned cost and `f2`
//! the dispersion of the assigned costs. Solvers implement
//! [`AssignmentSolver`] and are looked up by name in a [`SolverRegistry`].

mod exact;
mod lap;
mod local;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::identity::{similarity_matrix_weighted, FeatureSet, SimilarityMatrix};
use crate::{Error, Result};

pub use exact::{solve_exact, DEFAULT_EXACT_LIMIT};
pub use lap::solve_linear;
pub use local::{solve_local_search, DEFAULT_LOCAL_ITERS};

/// `D(i, j) = 1 / S(i, j)`
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(DMatrix<f64>);

impl CostMatrix {
    pub fn new(d: DMatrix<f64>) -> Result<Self> {
        if d.nrows() != d.ncols() {
            return Err(Error::Dimension {
                expected: d.nrows(),
                got: d.ncols(),
            });
        }
        if d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain("costs must be finite and positive".into()));
        }
        Ok(Self(d))
    }

    pub fn from_similarity(s: &SimilarityMatrix) -> Result<Self> {
        Self::new(s.s.map(|v| 1.0 / v))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `perm[i]`: predicted index matched to measured index `i`.
    pub perm: Vec<usize>,
    pub f1: f64,
    pub f2: f64,
}

impl Assignment {
    pub fn from_perm(perm: Vec<usize>, d: &CostMatrix) -> Result<Self> {
        let (f1, f2) = objective(&perm, d)?;
        Ok(Self { perm, f1, f2 })
    }

    pub fn value(&self) -> f64 {
        self.f1 + self.f2
    }

    /// `inverse()[j]`: measured index matched to predicted index `j`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            inv[j] = i;
        }
        inv
    }
}

pub fn check_permutation(perm: &[usize], k: usize) -> Result<()> {
    if perm.len() != k {
        return Err(Error::Constraint(format!(
            "assignment covers {} rows, expected {k}",
            perm.len()
        )));
    }
    let mut seen = vec![false; k];
    for &j in perm {
        if j >= k || std::mem::replace(&mut seen[j], true) {
            return Err(Error::Constraint(format!(
                "column {j} is out of range or matched twice"
            )));
        }
    }
    Ok(())
}

/// `(f1, f2)` of a permutation, with `f2` taken over the assigned pairs.
pub fn objective(perm: &[usize], d: &CostMatrix) -> Result<(f64, f64)> {
    let k = d.size();
    check_permutation(perm, k)?;
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let kf = k as f64;
    let f1 = perm.iter().enumerate().map(|(i, &j)| d.get(i, j)).sum::<f64>() / kf;
    let spread = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (d.get(i, j) - f1).powi(2))
        .sum::<f64>();
    Ok((f1, spread.sqrt() / kf))
}

pub trait AssignmentSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, d: &CostMatrix, rng: &mut dyn RngCore) -> Result<Assignment>;
}

/// Exhaustive search over all permutations.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolver {
    pub limit: usize,
}

impl AssignmentSolver for ExactSolver {
    fn name(&self) -> &str {
        "exact"
    }

    fn solve(&self, d: &CostMatrix, _rng: &mut dyn RngCore) -> Result<Assignment> {
        solve_exact(d, self.limit)
    }
}

/// Linear-assignment seed refined by swap hill-climbing.
#[derive(Debug, Clone, Copy)]
pub struct LocalSearchSolver {
    pub iters: usize,
}

impl AssignmentSolver for LocalSearchSolver {
    fn name(&self) -> &str {
        "local-search"
    }

    fn solve(&self, d: &CostMatrix, rng: &mut dyn RngCore) -> Result<Assignment> {
        Ok(solve_local_search(d, rng, self.iters))
    }
}

/// Exact up to `exact.limit` targets, local search beyond.
#[derive(Debug, Clone, Copy)]
pub struct AutoSolver {
    pub exact: ExactSolver,
    pub local: LocalSearchSolver,
}

impl Default for AutoSolver {
    fn default() -> Self {
        Self {
            exact: ExactSolver {
                limit: DEFAULT_EXACT_LIMIT,
            },
            local: LocalSearchSolver {
                iters: DEFAULT_LOCAL_ITERS,
            },
        }
    }
}

impl AssignmentSolver for AutoSolver {
    fn name(&self) -> &str {
        "auto"
    }

    fn solve(&self, d: &CostMatrix, rng: &mut dyn RngCore) -> Result<Assignment> {
        match self.exact.solve(d, rng) {
            Err(Error::TooLarge { .. }) => self.local.solve(d, rng),
            other => other,
        }
    }
}

#[derive(Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn AssignmentSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, solver: Arc<dyn AssignmentSolver>) {
        self.solvers.insert(solver.name().to_string(), solver);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn AssignmentSolver>> {
        self.solvers.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.solvers.keys().map(String::as_str)
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let auto = AutoSolver::default();
        let mut reg = Self::empty();
        reg.register(Arc::new(auto.exact));
        reg.register(Arc::new(auto.local));
        reg.register(Arc::new(auto));
        reg
    }
}

/// Which single feature a baseline trusts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    LocationOnly,
    VelocityOnly,
}

impl BaselineMode {
    /// Feature index in the crate's `[position, velocity]` layout.
    pub fn feature(self) -> usize {
        match self {
            BaselineMode::LocationOnly => 0,
            BaselineMode::VelocityOnly => 1,
        }
    }
}

/// Assignment built from one feature with unit weight.
pub fn baseline_assignment(
    measured: &FeatureSet,
    predicted: &FeatureSet,
    mode: BaselineMode,
    solver: &dyn AssignmentSolver,
    rng: &mut dyn RngCore,
) -> Result<Assignment> {
    let m = mode.feature();
    let s = similarity_matrix_weighted(&measured.select(m), &predicted.select(m), vec![1.0])?;
    solver.solve(&CostMatrix::from_similarity(&s)?, rng)
}
