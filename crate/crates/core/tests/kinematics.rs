use std::f64::consts::PI;

use lure_core::angle::wrap;
use lure_core::engagement::{aspect_angles, integrate_step, relative_geometry};
use lure_core::{AgentState, AttackerAccel, ControlPair, JointState};
use proptest::prelude::*;

fn agent() -> impl Strategy<Value = AgentState> {
    (-2000.0..2000.0f64, -2000.0..2000.0f64, 1.0..100.0f64, -PI..PI).prop_map(|(x, y, v, h)| AgentState::new(x, y, v, h))
}

fn joint() -> impl Strategy<Value = JointState> {
    (agent(), agent(), agent(), agent()).prop_map(|(target1, target2, attacker1, attacker2)| JointState {
        t: 0.0,
        target1,
        target2,
        attacker1,
        attacker2,
    })
}

fn rotate(s: &JointState, phi: f64) -> JointState {
    let (sn, cs) = phi.sin_cos();
    let r = |a: &AgentState| AgentState::new(cs * a.x - sn * a.y, sn * a.x + cs * a.y, a.speed, wrap(a.heading + phi));
    JointState { t: s.t, target1: r(&s.target1), target2: r(&s.target2), attacker1: r(&s.attacker1), attacker2: r(&s.attacker2) }
}

fn angle_close(a: f64, b: f64, tol: f64) -> bool {
    wrap(a - b).abs() <= tol
}

proptest! {
    #[test]
    fn relative_quantities_are_rotation_equivariant(s in joint(), phi in -PI..PI) {
        let (Ok(g), Ok(asp)) = (relative_geometry(&s), aspect_angles(&s)) else { return Ok(()) };
        let r = rotate(&s, phi);
        let gr = relative_geometry(&r).unwrap();
        let ar = aspect_angles(&r).unwrap();
        let tol = 1e-9 * g.attacker_range.max(g.range1).max(g.range2).max(1.0);
        prop_assert!((gr.attacker_range - g.attacker_range).abs() <= tol);
        prop_assert!((gr.range1 - g.range1).abs() <= tol);
        prop_assert!((gr.range2 - g.range2).abs() <= tol);
        for (a, b) in [(gr.los_attackers, g.los_attackers), (gr.los1, g.los1), (gr.los2, g.los2)] {
            prop_assert!(angle_close(a, b + phi, 1e-9));
        }
        prop_assert!(angle_close(ar.delta, asp.delta, 1e-9));
        prop_assert!(angle_close(ar.lambda, asp.lambda, 1e-9));
    }

    #[test]
    fn speed_is_conserved_by_integration(s in joint(), u1 in -0.785..0.785f64, u2 in -0.785..0.785f64,
                                         a1 in -50.0..50.0f64, a2 in -50.0..50.0f64) {
        let mut x = s;
        for _ in 0..200 {
            x = integrate_step(&x, ControlPair::new(u1, u2), AttackerAccel::new(a1, a2), 0.05);
        }
        for (before, after) in [(s.target1, x.target1), (s.target2, x.target2), (s.attacker1, x.attacker1), (s.attacker2, x.attacker2)] {
            let v = after.velocity();
            prop_assert!((v[0].hypot(v[1]) - before.speed).abs() <= 1e-9 * before.speed);
            prop_assert!((-PI..PI).contains(&after.heading));
        }
    }
}

/// Closed-form position after turning at a constant rate.
fn arc(a: &AgentState, omega: f64, t: f64) -> [f64; 2] {
    let r = a.speed / omega;
    [a.x + r * ((a.heading + omega * t).sin() - a.heading.sin()), a.y - r * ((a.heading + omega * t).cos() - a.heading.cos())]
}

fn constant_turn_error(dt: f64) -> f64 {
    let s0 = JointState {
        t: 0.0,
        target1: AgentState::new(10.0, -20.0, 30.0, 0.3),
        target2: AgentState::new(-40.0, 5.0, 30.0, -2.0),
        attacker1: AgentState::new(100.0, 0.0, 60.0, 1.0),
        attacker2: AgentState::new(-100.0, 0.0, 60.0, 2.5),
    };
    let (u, a) = (ControlPair::new(0.7, -0.4), AttackerAccel::new(30.0, -45.0));
    let horizon = 4.0;
    let n = (horizon / dt).round() as usize;
    let mut s = s0;
    for _ in 0..n {
        s = integrate_step(&s, u, a, dt);
    }
    let exact = [
        arc(&s0.target1, 0.7, horizon),
        arc(&s0.target2, -0.4, horizon),
        arc(&s0.attacker1, 0.5, horizon),
        arc(&s0.attacker2, -0.75, horizon),
    ];
    [s.target1, s.target2, s.attacker1, s.attacker2]
        .iter()
        .zip(exact)
        .map(|(got, want)| (got.x - want[0]).hypot(got.y - want[1]))
        .fold(0.0, f64::max)
}

#[test]
fn rk4_is_fourth_order_on_constant_turn() {
    let errors: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|dt| constant_turn_error(*dt)).collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((13.0..19.0).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn straight_flight_heading_is_untouched() {
    let s = JointState {
        t: 0.0,
        target1: AgentState::new(0.0, 0.0, 30.0, PI - 1e-3),
        target2: AgentState::new(0.0, 0.0, 30.0, -PI),
        attacker1: AgentState::new(0.0, 0.0, 60.0, 0.0),
        attacker2: AgentState::new(0.0, 0.0, 60.0, 1.0),
    };
    let next = integrate_step(&s, ControlPair::new(0.0, 0.0), AttackerAccel::new(0.0, 0.0), 0.05);
    assert_eq!(next.target1.heading, s.target1.heading);
    assert_eq!(next.attacker2.heading, s.attacker2.heading);
    assert!((next.attacker1.x - 3.0).abs() < 1e-12);
}
