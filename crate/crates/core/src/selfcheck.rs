//! Randomized numerical self-tests: analytic derivatives against central
//! differences and closed-form geometry against direct evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angle::wrap;
use crate::engagement::{
    integrate_step, relative_geometry, relative_rates, AgentState, AttackerAccel, ControlPair, JointState,
};
use crate::escape::{apollonius_circle, to_modified_frame, y_axis_intercepts, ApolloniusCircle, SpeedRatio};
use crate::estimator::{
    estimator_rhs, jacobian_f, jacobian_h, measurement_model, AttackerEstimate, Vector8, BEARINGS,
};
use crate::nmpc::{cost_and_gradient, MpcConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub samples: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

fn random_estimate(rng: &mut ChaCha8Rng) -> AttackerEstimate {
    AttackerEstimate(Vector8::from([
        rng.random_range(-1000.0..1000.0),
        rng.random_range(-1000.0..1000.0),
        rng.random_range(-1000.0..1000.0),
        rng.random_range(-1000.0..1000.0),
        rng.random_range(-3.1..3.1),
        rng.random_range(-3.1..3.1),
        rng.random_range(-30.0..30.0),
        rng.random_range(-30.0..30.0),
    ]))
}

fn random_point(rng: &mut ChaCha8Rng, span: f64) -> [f64; 2] {
    [rng.random_range(-span..span), rng.random_range(-span..span)]
}

fn random_state(rng: &mut ChaCha8Rng) -> JointState {
    let mut agent = |speed: f64| {
        let p = random_point(rng, 1000.0);
        AgentState::new(p[0], p[1], speed, rng.random_range(-3.1..3.1))
    };
    JointState { t: 0.0, target1: agent(30.0), target2: agent(30.0), attacker1: agent(60.0), attacker2: agent(60.0) }
}

const FD_STEP: f64 = 1e-6;

/// Worst absolute error of the estimator dynamics Jacobian.
pub fn dynamics_jacobian(samples: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speeds = [60.0, 60.0];
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let e = random_estimate(&mut rng);
        let jac = jacobian_f(&e, speeds);
        for j in 0..8 {
            let (mut p, mut m) = (e, e);
            p.0[j] += FD_STEP;
            m.0[j] -= FD_STEP;
            let col = (estimator_rhs(&p, speeds) - estimator_rhs(&m, speeds)) / (2.0 * FD_STEP);
            worst = worst.max((col - jac.column(j)).amax());
        }
    }
    CheckResult { name: "dynamics jacobian", samples, worst, tolerance: 1e-5 }
}

/// Worst absolute error of the measurement Jacobian; bearing differences are
/// wrapped.
pub fn measurement_jacobian(samples: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < samples {
        let e = random_estimate(&mut rng);
        let (t1, t2) = (random_point(&mut rng, 1000.0), random_point(&mut rng, 1000.0));
        let Ok(jac) = jacobian_h(&e, t1, t2) else { continue };
        // keep every pair at least 10 m apart so the step is well resolved
        let z = measurement_model(&e, t1, t2).expect("jacobian succeeded");
        if z.0.rows(0, 3).min() < 10.0 {
            continue;
        }
        for j in 0..8 {
            let (mut p, mut m) = (e, e);
            p.0[j] += FD_STEP;
            m.0[j] -= FD_STEP;
            let mut d = measurement_model(&p, t1, t2).unwrap().0 - measurement_model(&m, t1, t2).unwrap().0;
            for i in BEARINGS {
                d[i] = wrap(d[i]);
            }
            worst = worst.max((d / (2.0 * FD_STEP) - jac.column(j)).amax());
        }
        done += 1;
    }
    CheckResult { name: "measurement jacobian", samples, worst, tolerance: 1e-5 }
}

/// Polar relative-rate formulas against differenced Cartesian geometry.
pub fn relative_rates_consistency(samples: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1e-5;
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < samples {
        let s = random_state(&mut rng);
        let u = ControlPair::new(rng.random_range(-0.785..0.785), rng.random_range(-0.785..0.785));
        let a = AttackerAccel::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
        let (Ok(g0), Ok(rates)) = (relative_geometry(&s), relative_rates(&s)) else { continue };
        if g0.attacker_range.min(g0.range1).min(g0.range2) < 10.0 {
            continue;
        }
        let g1 = relative_geometry(&integrate_step(&s, u, a, dt)).expect("tiny step");
        let gm = relative_geometry(&integrate_step(&s, u, a, -dt)).expect("tiny step");
        let fd = |p: f64, m: f64| (p - m) / (2.0 * dt);
        let fda = |p: f64, m: f64| wrap(p - m) / (2.0 * dt);
        let errs = [
            fd(g1.attacker_range, gm.attacker_range) - rates.attacker_range,
            fd(g1.range1, gm.range1) - rates.range1,
            fd(g1.range2, gm.range2) - rates.range2,
            fda(g1.los_attackers, gm.los_attackers) - rates.los_attackers,
            fda(g1.los1, gm.los1) - rates.los1,
            fda(g1.los2, gm.los2) - rates.los2,
        ];
        worst = errs.iter().fold(worst, |w, e| w.max(e.abs()));
        done += 1;
    }
    CheckResult { name: "relative-motion rates", samples, worst, tolerance: 1e-4 }
}

fn random_circle(rng: &mut ChaCha8Rng) -> (ApolloniusCircle, [f64; 2], [f64; 2], f64) {
    loop {
        let a = random_point(rng, 2000.0);
        let t = random_point(rng, 2000.0);
        let gamma = rng.random_range(0.05..0.95);
        if let Ok(c) = apollonius_circle(a, t, SpeedRatio::new(gamma).expect("in range")) {
            return (c, a, t, gamma);
        }
    }
}

/// Relative deviation of dist(p, T) / dist(p, A) from the speed ratio over
/// sampled boundary points.
pub fn apollonius_ratio(circles: usize, points: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..circles {
        let (c, a, t, gamma) = random_circle(&mut rng);
        for k in 0..points {
            let p = c.point_at(std::f64::consts::TAU * k as f64 / points as f64);
            let ratio = (p[0] - t[0]).hypot(p[1] - t[1]) / (p[0] - a[0]).hypot(p[1] - a[1]);
            worst = worst.max((ratio / gamma - 1.0).abs());
        }
    }
    CheckResult { name: "apollonius ratio", samples: circles * points, worst, tolerance: 1e-9 }
}

/// Stable-quadratic intercepts against the direct chord formula.
pub fn intercepts(samples: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < samples {
        let (c, ..) = random_circle(&mut rng);
        let Some(i) = y_axis_intercepts(&c) else { continue };
        let half = (c.radius * c.radius - c.center[0] * c.center[0]).max(0.0).sqrt();
        worst = worst.max((i.y_low - (c.center[1] - half)).abs()).max((i.y_high - (c.center[1] + half)).abs());
        done += 1;
    }
    CheckResult { name: "y-axis intercepts", samples, worst, tolerance: 1e-9 }
}

/// Points on the modified frame's y-axis are equidistant from both attackers.
pub fn bisector(samples: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (a1, a2) = (random_point(&mut rng, 2000.0), random_point(&mut rng, 2000.0));
        let Ok(f) = to_modified_frame(a1, a2) else { continue };
        let p = f.to_world([0.0, rng.random_range(-3000.0..3000.0)]);
        let d1 = (p[0] - a1[0]).hypot(p[1] - a1[1]);
        let d2 = (p[0] - a2[0]).hypot(p[1] - a2[1]);
        worst = worst.max((d1 - d2).abs());
    }
    CheckResult { name: "bisector equidistance", samples, worst, tolerance: 1e-9 }
}

/// Horizon-cost gradient against central differences, relative to the
/// gradient norm.
pub fn cost_gradient(samples: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = MpcConfig::default();
    let model = cfg.model();
    let n = 2 * cfg.horizon.steps;
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < samples {
        let s = random_state(&mut rng);
        let est = AttackerEstimate::from_truth(&s, [0.0, 0.0]);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-0.785..0.785)).collect();
        let mut g = vec![0.0; n];
        if !cost_and_gradient(&s, &est, &x, &model, &mut g).is_finite() {
            continue;
        }
        let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        let mut scratch = vec![0.0; n];
        let mut xp = x.clone();
        for i in 0..n {
            xp[i] = x[i] + FD_STEP;
            let fp = cost_and_gradient(&s, &est, &xp, &model, &mut scratch);
            xp[i] = x[i] - FD_STEP;
            let fm = cost_and_gradient(&s, &est, &xp, &model, &mut scratch);
            xp[i] = x[i];
            worst = worst.max(((fp - fm) / (2.0 * FD_STEP) - g[i]).abs() / scale);
        }
        done += 1;
    }
    CheckResult { name: "horizon cost gradient", samples, worst, tolerance: 1e-4 }
}

/// Everything the `check` command runs.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        dynamics_jacobian(1000, seed),
        measurement_jacobian(1000, seed + 1),
        relative_rates_consistency(1000, seed + 2),
        apollonius_ratio(100, 1000, seed + 3),
        intercepts(1000, seed + 4),
        bisector(1000, seed + 5),
        cost_gradient(20, seed + 6),
    ]
}
