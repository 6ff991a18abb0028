//! Independent oracles for the numerical building blocks: scalar
//! re-derivations, finite differences, brute force and Monte-Carlo moments.

mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use dia_isac::array::{
    array_gain, channel_coefficient, link_snr, receive_snr_and_rate, steering_vector, upa_gain, Angles,
    LinkBudget, LinkGeometry,
};
use dia_isac::matching::{objective, solve_exact, solve_local_search, DEFAULT_LOCAL_ITERS};
use dia_isac::scenario::{step_motion, true_geometry, DId, UavTruth};
use dia_isac::sensing::{noise_variances, reflection_coefficient, simulate_measurement, EchoArrays, SensingConfig};
use dia_isac::tracking::measurement_function;
use dia_isac::SPEED_OF_LIGHT;
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force, hermitian, random_cost, random_state, rng, scalar_steering, upa, worst_eta_error, worst_jacobian_error, FC};

fn random_angles(r: &mut ChaCha8Rng) -> Angles {
    Angles::new(r.random_range(-PI..PI), r.random_range(0.0..PI / 2.0))
}

#[test]
fn steering_vector_matches_scalar_formula() {
    let mut r = rng(1);
    for _ in 0..200 {
        let (nx, ny) = (r.random_range(1..9), r.random_range(1..9));
        let ang = random_angles(&mut r);
        let got = steering_vector(ang, upa(nx, ny));
        let want = scalar_steering(ang.azimuth, ang.elevation, nx, ny);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.as_slice().iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
    }
    let half_turn = steering_vector(Angles::new(PI / 2.0, PI / 2.0), upa(1, 2));
    let s = half_turn.as_slice();
    assert_relative_eq!(s[0].re, 0.70711, epsilon = 1e-5);
    assert_relative_eq!(s[1].re, -0.70711, epsilon = 1e-5);
    assert!(s[1].im.abs() < 1e-12);
}

#[test]
fn closed_form_gain_matches_brute_force() {
    let mut r = rng(2);
    for _ in 0..500 {
        let (nx, ny) = (r.random_range(1..17), r.random_range(1..17));
        let (p, t) = (random_angles(&mut r), random_angles(&mut r));
        let brute = hermitian(
            &scalar_steering(p.azimuth, p.elevation, nx, ny),
            &scalar_steering(t.azimuth, t.elevation, nx, ny),
        )
        .norm_sqr();
        assert!((upa_gain(p, t, upa(nx, ny)) - brute).abs() < 1e-10);
        let a = steering_vector(p, upa(nx, ny));
        let f = steering_vector(t, upa(nx, ny));
        assert!((array_gain(&a, &f).unwrap() - brute).abs() < 1e-10);
    }
}

#[test]
fn off_beam_gain_shrinks_with_aperture() {
    let p = Angles::new(0.3, 0.8);
    let t = Angles::new(1.2, 0.4);
    let g4 = upa_gain(p, t, upa(4, 4));
    let g16 = upa_gain(p, t, upa(16, 16));
    assert!(g16 < 0.05);
    assert!(g16 < g4);
}

#[test]
fn channel_and_snr_closed_forms() {
    let unit = LinkBudget {
        power_w: 1.0,
        fc_hz: FC,
        alpha: 1.0,
        sigma_r: 1.0,
    };
    let a = channel_coefficient(100.0, &unit, 64, 64).unwrap();
    assert_relative_eq!(a.norm(), 0.64, epsilon = 1e-12);
    let phase = (2.0 * PI * FC * 100.0 / SPEED_OF_LIGHT).rem_euclid(2.0 * PI);
    assert_relative_eq!(a.arg().rem_euclid(2.0 * PI), phase, epsilon = 1e-9);

    let bs = upa(8, 8);
    let true_angles = Angles::new(0.4, 1.1);
    let link = LinkGeometry {
        true_angles,
        tx_beam: true_angles,
        rx_beam: true_angles,
        distance: 100.0,
    };
    let snr = link_snr(&link, &unit, bs, bs).unwrap();
    let want = (64.0 * 64.0) / (100.0 * 100.0);
    assert_relative_eq!(snr, want, max_relative = 1e-12);

    let (snrs, rate) =
        receive_snr_and_rate(&[true_angles; 2], &[true_angles; 2], &[true_angles; 2], &[100.0; 2], &unit, bs, bs)
            .unwrap();
    assert_eq!(snrs.len(), 2);
    assert_relative_eq!(rate, (1.0 + want).log2(), max_relative = 1e-12);
}

#[test]
fn echo_geometry_examples() {
    let bs = Vector3::zeros();
    let still = UavTruth {
        d_id: DId(0),
        position: Vector3::new(100.0, 0.0, 0.0),
        velocity: Vector3::zeros(),
    };
    let g = true_geometry(&still, &bs, FC).unwrap();
    assert_relative_eq!(g.distance, 100.0, epsilon = 1e-12);
    assert_relative_eq!(g.delay, 6.6713e-7, max_relative = 1e-4);
    assert_relative_eq!(g.delay, 200.0 / 299_792_458.0, max_relative = 1e-15);
    assert_eq!(g.doppler, 0.0);

    let receding = UavTruth {
        velocity: Vector3::new(10.0, 0.0, 0.0),
        ..still.clone()
    };
    let g = true_geometry(&receding, &bs, FC).unwrap();
    assert_relative_eq!(g.doppler, 1867.95, max_relative = 1e-5);

    let beta = reflection_coefficient(2.0 * 100.0 / SPEED_OF_LIGHT, 1.0).unwrap();
    assert_relative_eq!(beta, 0.005, max_relative = 1e-12);

    let cfg = SensingConfig {
        xi: 1.0,
        ..SensingConfig::default()
    };
    let arrays = EchoArrays { n_t: 64, n_rb: 64 };
    let var = noise_variances(1.0, beta, 1.0, &cfg, arrays).unwrap();
    assert_relative_eq!(var.azimuth, 0.1, max_relative = 1e-12);
    assert_relative_eq!(var.elevation, 0.1, max_relative = 1e-12);
    let halved = noise_variances(1.0, beta, 0.5, &cfg, arrays).unwrap();
    assert_relative_eq!(halved.delay, 2.0 * var.delay, max_relative = 1e-12);
    assert_relative_eq!(halved.doppler, 2.0 * var.doppler, max_relative = 1e-12);
    assert_eq!(halved.azimuth, var.azimuth);
}

#[test]
fn measurement_function_agrees_with_true_geometry() {
    let mut r = rng(3);
    let bs = Vector3::new(1.0, -2.0, 0.5);
    for _ in 0..1000 {
        let x = random_state(&mut r);
        let truth = UavTruth {
            d_id: DId(0),
            position: x.fixed_rows::<3>(0).into_owned(),
            velocity: x.fixed_rows::<3>(3).into_owned(),
        };
        let g = true_geometry(&truth, &bs, FC).unwrap();
        let h = measurement_function(&x, &bs, FC).unwrap();
        assert!((h[0] - g.delay).abs() <= 1e-12 * g.delay);
        assert!((h[1] - g.doppler).abs() <= 1e-12 * g.doppler.abs().max(1.0));
        assert!((h[2] - g.angles.azimuth).abs() <= 1e-12);
        assert!((h[3] - g.angles.elevation).abs() <= 1e-12);
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let worst = worst_jacobian_error(1000, 4);
    assert!(worst <= 1e-4, "worst relative error {worst:e}");
}

#[test]
fn eta_derivative_matches_central_differences() {
    let worst = worst_eta_error(100, 5);
    assert!(worst <= 1e-4, "worst relative error {worst:e}");
}

#[test]
fn exact_solver_agrees_with_brute_force() {
    let mut r = rng(6);
    for k in [5, 7] {
        for _ in 0..100 {
            let d = random_cost(&mut r, k);
            assert_eq!(solve_exact(&d, 8).unwrap().perm, brute_force(&d));
        }
    }
}

#[test]
fn local_search_usually_finds_the_optimum() {
    let mut r = rng(7);
    let mut search = rng(8);
    let hits = (0..100)
        .filter(|_| {
            let d = random_cost(&mut r, 8);
            let exact = solve_exact(&d, 8).unwrap().value();
            let local = solve_local_search(&d, &mut search, DEFAULT_LOCAL_ITERS);
            let (f1, f2) = objective(&local.perm, &d).unwrap();
            (f1 + f2 - exact).abs() <= 1e-9
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn azimuth_noise_has_the_configured_variance() {
    let mut r = rng(9);
    let truth = true_geometry(
        &UavTruth {
            d_id: DId(0),
            position: Vector3::new(60.0, 40.0, 50.0),
            velocity: Vector3::new(-5.0, 0.0, 1.0),
        },
        &Vector3::zeros(),
        FC,
    )
    .unwrap();
    let cfg = SensingConfig {
        xi: 1.0,
        ..SensingConfig::default()
    };
    let var = noise_variances(1.0, 0.005, 1.0, &cfg, EchoArrays { n_t: 64, n_rb: 64 }).unwrap();
    let n = 100_000;
    let errs: Vec<f64> = (0..n)
        .map(|_| simulate_measurement(&truth, var, &mut r).azimuth - truth.angles.azimuth)
        .map(|e| (e + PI).rem_euclid(2.0 * PI) - PI)
        .collect();
    let mean = errs.iter().sum::<f64>() / n as f64;
    let sample = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((sample / 0.1 - 1.0).abs() < 0.03, "sample variance {sample}");
}

#[test]
fn motion_noise_has_the_configured_spread() {
    let mut r = rng(10);
    let start = UavTruth {
        d_id: DId(0),
        position: Vector3::new(0.0, 0.0, 1.0e6),
        velocity: Vector3::new(3.0, -2.0, 0.0),
    };
    let n = 20_000;
    let (sigma_p, sigma_v, dt) = (0.02, 0.2, 0.02);
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for _ in 0..n {
        let next = step_motion(&start, dt, sigma_p, sigma_v, &mut r);
        pos.push(next.position.x - (start.position.x + dt * start.velocity.x));
        vel.push(next.velocity.y - start.velocity.y);
    }
    let std = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    assert!((std(&pos) / sigma_p - 1.0).abs() < 0.03);
    assert!((std(&vel) / sigma_v - 1.0).abs() < 0.03);
}
