use lure_core::estimator::{
    ekf_update, jacobian_h, measurement_model, Matrix6, Matrix8, Vector6, Vector8, DEFAULT_MEASUREMENT_NOISE,
};
use lure_core::guidance::attacker_commands;
use lure_core::engagement::integrate_step;
use lure_core::scenario::presets;
use lure_core::sim::MeasurementNoise;
use lure_core::{AttackerEstimate, AttackerFilter, ControlPair, FilterConfig, MeasurementVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kalman update written out with general dense matrices and an explicit inverse.
fn textbook_update(x: &[f64], p: &DMatrix<f64>, h: &DMatrix<f64>, r: &DMatrix<f64>, nu: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let s = h * p * h.transpose() + r;
    let k = p * h.transpose() * s.try_inverse().unwrap();
    let x = DVector::from_column_slice(x) + &k * nu;
    let i = DMatrix::<f64>::identity(8, 8);
    let p = (&i - &k * h) * p;
    (x, p)
}

#[test]
fn update_matches_textbook_kalman_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let est = AttackerEstimate(Vector8::from_fn(|i, _| match i {
            0..=3 => rng.random_range(-500.0..500.0),
            4 | 5 => rng.random_range(-3.0..3.0),
            _ => rng.random_range(-10.0..10.0),
        }));
        let (t1, t2) = ([rng.random_range(-500.0..500.0), 800.0], [rng.random_range(-500.0..500.0), -800.0]);
        let a = Matrix8::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let p = a * a.transpose() + Matrix8::identity();
        let r = Matrix6::from_diagonal(&Vector6::from(DEFAULT_MEASUREMENT_NOISE));
        let mut z = measurement_model(&est, t1, t2).unwrap();
        for i in 0..3 {
            z.0[i] += rng.random_range(-1.0..1.0);
        }
        for i in 3..6 {
            z.0[i] += rng.random_range(-0.05..0.05);
        }

        let (got, got_p, _) = ekf_update(&est, &p, &z, &r, t1, t2).unwrap();

        let h = jacobian_h(&est, t1, t2).unwrap();
        let hd = DMatrix::from_fn(6, 8, |i, j| h[(i, j)]);
        let pd = DMatrix::from_fn(8, 8, |i, j| p[(i, j)]);
        let rd = DMatrix::from_fn(6, 6, |i, j| r[(i, j)]);
        let pred = measurement_model(&est, t1, t2).unwrap();
        let nu = DVector::from_fn(6, |i, _| {
            let d = z.0[i] - pred.0[i];
            if i >= 3 { (d + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI } else { d }
        });
        let (want, want_p) = textbook_update(est.0.as_slice(), &pd, &hd, &rd, &nu);
        for i in 0..8 {
            let d = got.0[i] - want[i];
            let d = if i == 4 || i == 5 { (d + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI } else { d };
            assert!(d.abs() < 1e-9, "state {i}: {d:e}");
            for j in 0..8 {
                assert!((got_p[(i, j)] - want_p[(i, j)]).abs() < 1e-9, "cov ({i},{j})");
            }
        }
    }
}

#[test]
fn covariance_stays_symmetric_psd_over_ten_thousand_cycles() {
    // the general example's opening, flown open loop with attacker guidance
    let cfg = presets::general();
    let mut s = cfg.agents.initial_state();
    let noise = MeasurementNoise::new(cfg.measurement_std());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (t1, t2) = (s.target1.position(), s.target2.position());
    let z0 = noise.corrupt(&MeasurementVector::from_truth(&s).unwrap(), &mut rng);
    let mut f = AttackerFilter::initialize(&z0, t1, t2, [60.0, 60.0], &FilterConfig::default());
    let mut worst_eig = f64::INFINITY;
    let mut updates = 0;
    for k in 0..10_000 {
        f.predict(0.05);
        let z = noise.corrupt(&MeasurementVector::from_truth(&s).unwrap(), &mut rng);
        if f.update(&z, s.target1.position(), s.target2.position()).is_ok() {
            updates += 1;
        }
        let p = f.covariance;
        assert!((p - p.transpose()).amax() <= 1e-9, "asymmetric at {k}");
        worst_eig = worst_eig.min(p.symmetric_eigen().eigenvalues.min());
        // restart every 10 s so the attackers never reach the targets
        let a = attacker_commands(&s, &cfg.guidance).unwrap();
        s = integrate_step(&s, ControlPair::new(0.0, 0.0), a, 0.05);
        if k % 200 == 199 {
            s = cfg.agents.initial_state();
        }
    }
    assert!(worst_eig >= -1e-9, "min eigenvalue {worst_eig:e}");
    assert!(updates > 9_900);
}

#[test]
fn innovation_bearings_stay_wrapped() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = presets::general().agents.initial_state();
    let (t1, t2) = (s.target1.position(), s.target2.position());
    let r = Matrix6::from_diagonal(&Vector6::from(DEFAULT_MEASUREMENT_NOISE));
    for _ in 0..1000 {
        let mut est = AttackerEstimate::from_truth(&s, [0.0, 0.0]);
        est.0[0] += rng.random_range(-100.0..100.0);
        est.0[1] += rng.random_range(-100.0..100.0);
        let mut z = MeasurementVector::from_truth(&s).unwrap();
        for i in 3..6 {
            z.0[i] = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        }
        let (_, _, d) = ekf_update(&est, &Matrix8::identity(), &z, &r, t1, t2).unwrap();
        for i in 3..6 {
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&d.innovation[i]));
        }
    }
}

#[test]
fn measurement_noise_matches_configured_variance() {
    let std = presets::general().measurement_std();
    let noise = MeasurementNoise::new(std);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;
    let mut sum = [0.0; 6];
    let mut sq = [0.0; 6];
    for _ in 0..n {
        let d = noise.sample(&mut rng);
        for i in 0..6 {
            sum[i] += d[i];
            sq[i] += d[i] * d[i];
        }
    }
    for i in 0..6 {
        let mean = sum[i] / n as f64;
        let var = (sq[i] - n as f64 * mean * mean) / (n - 1) as f64;
        let want = std[i] * std[i];
        assert!((var / want - 1.0).abs() < 0.05, "channel {i}: {var} vs {want}");
    }
}
