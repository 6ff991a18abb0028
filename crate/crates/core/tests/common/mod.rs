//! Reference computations shared by the oracle tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use dia_isac::array::UpaConfig;
use dia_isac::matching::CostMatrix;
use dia_isac::tracking::{jacobian, measurement_function, partial_eta_theta};
use nalgebra::{DMatrix, Vector3, Vector6};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FC: f64 = 28e9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn upa(nx: usize, ny: usize) -> UpaConfig {
    UpaConfig::new(nx, ny).unwrap()
}

/// Steering vector straight from the element phase `π sinθ (a cosφ + b sinφ)`.
pub fn scalar_steering(phi: f64, theta: f64, nx: usize, ny: usize) -> Vec<Complex64> {
    let norm = 1.0 / ((nx * ny) as f64).sqrt();
    let mut out = Vec::new();
    for a in 0..nx {
        for b in 0..ny {
            let phase = PI * theta.sin() * (a as f64 * phi.cos() + b as f64 * phi.sin());
            out.push(Complex64::from_polar(norm, phase));
        }
    }
    out
}

pub fn hermitian(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// A state at least 1 m off the vertical axis through the origin.
pub fn random_state(r: &mut ChaCha8Rng) -> Vector6<f64> {
    loop {
        let p: Vector3<f64> = Vector3::new(
            r.random_range(-150.0..150.0),
            r.random_range(-150.0..150.0),
            r.random_range(1.0..150.0),
        );
        if p.x.hypot(p.y) > 1.0 {
            let v = Vector3::new(
                r.random_range(-30.0..30.0),
                r.random_range(-30.0..30.0),
                r.random_range(-10.0..10.0),
            );
            return Vector6::new(p.x, p.y, p.z, v.x, v.y, v.z);
        }
    }
}

/// Largest entry-wise difference between the analytic Jacobian and central
/// differences, relative to each row's largest analytic entry.
pub fn jacobian_error(x: &Vector6<f64>, bs: &Vector3<f64>) -> f64 {
    let analytic = jacobian(x, bs, FC).unwrap();
    let mut numeric = analytic;
    for c in 0..6 {
        let h = 1e-5 * x[c].abs().max(1.0);
        let (mut up, mut down) = (*x, *x);
        up[c] += h;
        down[c] -= h;
        let hu = measurement_function(&up, bs, FC).unwrap();
        let hd = measurement_function(&down, bs, FC).unwrap();
        for row in 0..4 {
            let mut diff = hu[row] - hd[row];
            if row == 2 {
                diff = (diff + PI).rem_euclid(2.0 * PI) - PI;
            }
            numeric[(row, c)] = diff / (2.0 * h);
        }
    }
    let mut worst: f64 = 0.0;
    for row in 0..4 {
        let scale = (0..6).map(|c| analytic[(row, c)].abs()).fold(0.0, f64::max);
        for c in 0..6 {
            worst = worst.max((analytic[(row, c)] - numeric[(row, c)]).abs() / scale);
        }
    }
    worst
}

/// Worst [`jacobian_error`] over `n` random states.
pub fn worst_jacobian_error(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    (0..n)
        .map(|_| jacobian_error(&random_state(&mut r), &Vector3::zeros()))
        .fold(0.0, f64::max)
}

/// `η(θ)` evaluated from scalar steering vectors.
pub fn eta(theta: f64, phi: f64, theta_hat: f64, phi_hat: f64, beta: f64, tx: (usize, usize), rx: (usize, usize)) -> Vec<Complex64> {
    let (nt, nr) = ((tx.0 * tx.1) as f64, (rx.0 * rx.1) as f64);
    let a = scalar_steering(phi, theta, tx.0, tx.1);
    let a_hat = scalar_steering(phi_hat, theta_hat, tx.0, tx.1);
    let inner = hermitian(&a, &a_hat);
    scalar_steering(phi, theta, rx.0, rx.1)
        .into_iter()
        .map(|u| (nt * nr).sqrt() * beta * u * inner)
        .collect()
}

/// Worst relative gap between `partial_eta_theta` and central differences
/// of [`eta`] over `n` random angle sets on 4×4 arrays.
pub fn worst_eta_error(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let theta = r.random_range(0.05..PI / 2.0 - 0.05);
        let phi = r.random_range(-PI..PI);
        let theta_hat = theta + r.random_range(-0.2..0.2);
        let phi_hat = phi + r.random_range(-0.2..0.2);
        let beta = r.random_range(0.001..1.0);
        let analytic = partial_eta_theta(theta, phi, theta_hat, phi_hat, beta, upa(4, 4), upa(4, 4));
        let h = 1e-6;
        let up = eta(theta + h, phi, theta_hat, phi_hat, beta, (4, 4), (4, 4));
        let down = eta(theta - h, phi, theta_hat, phi_hat, beta, (4, 4), (4, 4));
        let numeric: Vec<Complex64> = up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect();
        let scale = numeric.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max((a - n).norm() / scale);
        }
    }
    worst
}

pub fn random_cost(r: &mut ChaCha8Rng, k: usize) -> CostMatrix {
    CostMatrix::new(DMatrix::from_fn(k, k, |_, _| r.random_range(1.0..10.0))).unwrap()
}

/// Minimum of `f1 + f2` over every permutation, computed from scratch.
pub fn brute_force(d: &CostMatrix) -> Vec<usize> {
    fn rec(d: &CostMatrix, perm: &mut Vec<usize>, used: &mut [bool], best: &mut (f64, Vec<usize>)) {
        let k = d.size();
        if perm.len() == k {
            let costs: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| d.get(i, j)).collect();
            let mean = costs.iter().sum::<f64>() / k as f64;
            let spread = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>().sqrt() / k as f64;
            if mean + spread < best.0 {
                *best = (mean + spread, perm.clone());
            }
            return;
        }
        for j in 0..k {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(d, perm, used, best);
                perm.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    rec(d, &mut Vec::new(), &mut vec![false; d.size()], &mut best);
    best.1
}
