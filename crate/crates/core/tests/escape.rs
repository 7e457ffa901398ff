use lure_core::escape::{
    apollonius_circle, classify_cell, escape_map, escape_verdict, to_modified_frame, EscapeMapFixed, EscapeMapSpec,
    MapCell, Point, SpeedRatio,
};
use lure_core::scenario::presets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[test]
fn every_circle_point_keeps_the_speed_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut circles = 0;
    while circles < 200 {
        let a = [rng.random_range(-3000.0..3000.0), rng.random_range(-3000.0..3000.0)];
        let t = [rng.random_range(-3000.0..3000.0), rng.random_range(-3000.0..3000.0)];
        let gamma = rng.random_range(0.05..0.95);
        let Ok(c) = apollonius_circle(a, t, SpeedRatio::new(gamma).unwrap()) else { continue };
        for k in 0..1000 {
            let p = c.point_at(std::f64::consts::TAU * k as f64 / 1000.0);
            assert!((dist(p, t) / dist(p, a) / gamma - 1.0).abs() < 1e-9);
        }
        circles += 1;
    }
}

#[test]
fn bisector_points_are_equidistant_from_attackers() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let a1 = [rng.random_range(-3000.0..3000.0), rng.random_range(-3000.0..3000.0)];
        let a2 = [rng.random_range(-3000.0..3000.0), rng.random_range(-3000.0..3000.0)];
        let f = to_modified_frame(a1, a2).unwrap();
        let fa1 = f.to_frame(a1);
        let fa2 = f.to_frame(a2);
        assert!(fa1[1].abs() < 1e-9 && fa2[1].abs() < 1e-9 && (fa1[0] + fa2[0]).abs() < 1e-9 && fa1[0] > 0.0);
        for _ in 0..10 {
            let p = f.to_world([0.0, rng.random_range(-5000.0..5000.0)]);
            assert!((dist(p, a1) - dist(p, a2)).abs() < 1e-9);
        }
    }
}

/// Best simultaneous-arrival margin over the attackers' bisector, found by a
/// dense scan in world coordinates. Positive means some bisector point is
/// reached by both targets before their attackers arrive there.
fn best_bisector_margin(a1: Point, a2: Point, t1: Point, t2: Point, gamma: f64) -> (f64, Point) {
    let mid = [0.5 * (a1[0] + a2[0]), 0.5 * (a1[1] + a2[1])];
    let d = [a1[0] - a2[0], a1[1] - a2[1]];
    let len = d[0].hypot(d[1]);
    let n = [-d[1] / len, d[0] / len];
    let mut best = (f64::NEG_INFINITY, mid);
    let mut s = -20_000.0;
    while s <= 20_000.0 {
        let p = [mid[0] + s * n[0], mid[1] + s * n[1]];
        let m = (gamma * dist(p, a1) - dist(p, t1)).min(gamma * dist(p, a2) - dist(p, t2));
        if m > best.0 {
            best = (m, p);
        }
        s += 0.25;
    }
    best
}

/// Targets and attackers fly straight to the meeting point at their speeds.
/// Returns (attacker arrival gap, latest target arrival minus attacker arrival).
fn straight_line_play(a1: Point, a2: Point, t1: Point, t2: Point, p: Point, vt: f64, va: f64) -> (f64, f64) {
    let ta = (dist(a1, p) / va, dist(a2, p) / va);
    let tt = (dist(t1, p) / vt).max(dist(t2, p) / vt);
    ((ta.0 - ta.1).abs(), tt - ta.0)
}

fn concordance(fixed: &EscapeMapFixed, t2: Point) -> Option<bool> {
    let cell = classify_cell(fixed, t2);
    if !matches!(cell, MapCell::Escape | MapCell::Capture) {
        return None;
    }
    let gamma = fixed.gamma1.get();
    let (margin, p) = best_bisector_margin(fixed.a1, fixed.a2, fixed.t1, t2, gamma);
    if margin.abs() < 1.0 {
        return None;
    }
    if margin > 0.0 {
        let (gap, late) = straight_line_play(fixed.a1, fixed.a2, fixed.t1, t2, p, 30.0, 30.0 / gamma);
        assert!(gap < 1e-9 && late < 0.0);
    }
    Some((margin > 0.0) == (cell == MapCell::Escape))
}

#[test]
fn verdicts_agree_with_brute_force_on_the_reference_map() {
    let cfg = presets::escape();
    let fixed = cfg.escape_fixed().unwrap();
    let spec = EscapeMapSpec { nx: 9, ny: 11, ..cfg.escape_map };
    let (mut checked, mut escapes) = (0, 0);
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let t2 = [spec.x(i), spec.y(j)];
            if let Some(agree) = concordance(&fixed, t2) {
                assert!(agree, "disagreement at {t2:?}");
                checked += 1;
                escapes += (classify_cell(&fixed, t2) == MapCell::Escape) as usize;
            }
        }
    }
    assert!(checked >= 50 && escapes >= 5 && checked - escapes >= 5, "{checked} cells, {escapes} escapes");
}

#[test]
fn verdicts_agree_with_brute_force_on_random_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    let mut escapes = 0;
    while checked < 300 {
        let sep = rng.random_range(50.0..500.0);
        let fixed = EscapeMapFixed {
            a1: [sep, 0.0],
            a2: [-sep, 0.0],
            t1: [rng.random_range(10.0..1500.0), rng.random_range(-500.0..2000.0)],
            gamma1: SpeedRatio::new(0.5).unwrap(),
            gamma2: SpeedRatio::new(0.5).unwrap(),
        };
        let t2 = [rng.random_range(-1500.0..-10.0), rng.random_range(-500.0..2000.0)];
        if let Some(agree) = concordance(&fixed, t2) {
            assert!(agree, "disagreement for {fixed:?} with T2 {t2:?}");
            checked += 1;
            escapes += (classify_cell(&fixed, t2) == MapCell::Escape) as usize;
        }
    }
    assert!(escapes >= 10, "only {escapes} escapes");
}

#[test]
fn map_does_not_depend_on_traversal_order() {
    let cfg = presets::escape();
    let fixed = cfg.escape_fixed().unwrap();
    let spec = EscapeMapSpec { nx: 41, ny: 51, ..cfg.escape_map };
    let grid = escape_map(&fixed, &spec).unwrap();
    for k in (0..spec.nx * spec.ny).rev() {
        let (i, j) = (k % spec.nx, k / spec.nx);
        assert_eq!(grid.get(i, j), classify_cell(&fixed, [spec.x(i), spec.y(j)]));
    }
}

#[test]
fn verdict_is_invariant_under_rigid_motion() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let g = SpeedRatio::new(0.5).unwrap();
    for _ in 0..500 {
        let pts: [Point; 4] = [
            [100.0, 0.0],
            [-100.0, 0.0],
            [rng.random_range(10.0..1500.0), rng.random_range(0.0..2500.0)],
            [rng.random_range(-1500.0..-10.0), rng.random_range(0.0..2500.0)],
        ];
        let base = escape_verdict(pts[0], pts[1], pts[2], pts[3], g, g).unwrap();
        let (phi, shift) = (rng.random_range(-3.0..3.0f64), [rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3)]);
        let (s, c) = phi.sin_cos();
        let m = pts.map(|p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]]);
        let moved = escape_verdict(m[0], m[1], m[2], m[3], g, g).unwrap();
        // tangencies may flip under rounding; everything else must match exactly
        if let (lure_core::EscapeVerdict::Escape { marginal: true }, _) | (_, lure_core::EscapeVerdict::Escape { marginal: true }) = (base, moved) {
            continue;
        }
        assert_eq!(base.is_escape(), moved.is_escape());
    }
}
