use rand::{Rng, RngCore};

use super::{lap::solve_linear, Assignment, CostMatrix};

/// Default budget of neighborhood passes.
pub const DEFAULT_LOCAL_ITERS: usize = 64;

/// Running `f1 + f2` of a permutation, shifted by a reference cost to keep
/// the dispersion term free of cancellation.
struct Tally {
    k: f64,
    reference: f64,
    sum: f64,
    sum_sq: f64,
}

impl Tally {
    fn new(perm: &[usize], d: &CostMatrix, reference: f64) -> Self {
        let mut t = Tally {
            k: perm.len() as f64,
            reference,
            sum: 0.0,
            sum_sq: 0.0,
        };
        for (i, &j) in perm.iter().enumerate() {
            let c = d.get(i, j) - reference;
            t.sum += c;
            t.sum_sq += c * c;
        }
        t
    }

    fn value_with(&self, sum: f64, sum_sq: f64) -> f64 {
        let mean = sum / self.k;
        let var_k = (sum_sq - sum * mean).max(0.0);
        self.reference + mean + var_k.sqrt() / self.k
    }

    fn value(&self) -> f64 {
        self.value_with(self.sum, self.sum_sq)
    }

    /// Value after swapping the columns of rows `a` and `b`.
    fn swapped(&self, perm: &[usize], d: &CostMatrix, a: usize, b: usize) -> (f64, f64, f64) {
        let r = self.reference;
        let old = [d.get(a, perm[a]) - r, d.get(b, perm[b]) - r];
        let new = [d.get(a, perm[b]) - r, d.get(b, perm[a]) - r];
        let sum = self.sum - old[0] - old[1] + new[0] + new[1];
        let sum_sq = self.sum_sq - old[0] * old[0] - old[1] * old[1] + new[0] * new[0] + new[1] * new[1];
        (self.value_with(sum, sum_sq), sum, sum_sq)
    }
}

/// Hill-climbs `f1 + f2` with pairwise column swaps from the `f1`-optimal
/// seed. Each iteration is one best-improvement pass over all swaps; at a
/// local optimum a random 3-cycle kick restarts the climb. The best
/// permutation visited is returned, so the result never exceeds the seed.
pub fn solve_local_search(d: &CostMatrix, rng: &mut dyn RngCore, iters: usize) -> Assignment {
    let k = d.size();
    let seed = solve_linear(d);
    let seed_assignment = Assignment::from_perm(seed.clone(), d).expect("linear assignment is a bijection");
    if iters == 0 || k < 2 {
        return seed_assignment;
    }

    let reference = seed_assignment.f1;
    let mut best_perm = seed.clone();
    let mut best_value = Tally::new(&seed, d, reference).value();
    let mut perm = seed;
    let mut tally = Tally::new(&perm, d, reference);

    for _ in 0..iters {
        let mut pick: Option<(usize, usize, f64, f64, f64)> = None;
        let mut target = tally.value();
        for a in 0..k {
            for b in (a + 1)..k {
                let (v, s, q) = tally.swapped(&perm, d, a, b);
                if v < target - 1e-15 * target.abs() {
                    target = v;
                    pick = Some((a, b, v, s, q));
                }
            }
        }
        match pick {
            Some((a, b, _, s, q)) => {
                perm.swap(a, b);
                tally.sum = s;
                tally.sum_sq = q;
            }
            None => {
                if tally.value() < best_value {
                    best_value = tally.value();
                    best_perm.clone_from(&perm);
                }
                if k < 3 {
                    break;
                }
                kick(&mut perm, rng);
                tally = Tally::new(&perm, d, reference);
            }
        }
    }
    if tally.value() < best_value {
        best_perm = perm;
    }

    let result = Assignment::from_perm(best_perm, d).expect("swaps preserve bijection");
    if result.value() <= seed_assignment.value() {
        result
    } else {
        seed_assignment
    }
}

/// Rotates the columns of three distinct random rows.
fn kick(perm: &mut [usize], rng: &mut dyn RngCore) {
    let k = perm.len();
    let a = rng.random_range(0..k);
    let mut b = rng.random_range(0..k - 1);
    if b >= a {
        b += 1;
    }
    let mut c = rng.random_range(0..k - 2);
    for taken in [a.min(b), a.max(b)] {
        if c >= taken {
            c += 1;
        }
    }
    let t = perm[a];
    perm[a] = perm[b];
    perm[b] = perm[c];
    perm[c] = t;
}
