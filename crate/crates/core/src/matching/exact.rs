use super::{objective, Assignment, CostMatrix};
use crate::{Error, Result};

/// Largest fleet solved exhaustively by default (8! = 40320 permutations).
pub const DEFAULT_EXACT_LIMIT: usize = 8;

/// Relative margin a candidate must beat the incumbent by to replace it,
/// so float-level ties resolve to the lexicographically smallest permutation.
const TIE_TOLERANCE: f64 = 1e-12;

/// Global minimizer of `f1 + f2` by enumerating permutations in
/// lexicographic order.
pub fn solve_exact(d: &CostMatrix, limit: usize) -> Result<Assignment> {
    let k = d.size();
    if k > limit {
        return Err(Error::TooLarge { size: k, limit });
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let (f1, f2) = objective(&perm, d)?;
    let mut best = Assignment {
        perm: perm.clone(),
        f1,
        f2,
    };
    while next_permutation(&mut perm) {
        let (f1, f2) = objective(&perm, d)?;
        let value = f1 + f2;
        if value < best.value() - TIE_TOLERANCE * best.value().abs() {
            best = Assignment {
                perm: perm.clone(),
                f1,
                f2,
            };
        }
    }
    Ok(best)
}

/// Advances to the next permutation in lexicographic order; false after the last.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
