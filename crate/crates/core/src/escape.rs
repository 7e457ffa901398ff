//! Game-of-kind analysis: can the targets reach a point of the attackers'
//! perpendicular bisector before their attackers do?
//!
//! Everything is evaluated in a frame where A1 sits at `(+d, 0)` and A2 at
//! `(-d, 0)`. The y-axis is then the locus of points the two (equal-speed)
//! attackers reach together, so a y-axis point both targets reach first is a
//! place where the attackers can be made to meet.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Relative width below which an intercept is treated as a tangency.
pub const TANGENCY_TOLERANCE: f64 = 1e-9;

/// Rigid transform into the attacker-symmetric frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame2D {
    pub origin: Point,
    /// Rotation applied after translating by `-origin`.
    pub rotation: f64,
}

impl Frame2D {
    pub fn to_frame(&self, p: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        let (dx, dy) = (p[0] - self.origin[0], p[1] - self.origin[1]);
        [c * dx - s * dy, s * dx + c * dy]
    }

    pub fn to_world(&self, q: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        [c * q[0] + s * q[1] + self.origin[0], -s * q[0] + c * q[1] + self.origin[1]]
    }
}

/// Frame with A1 on the positive x-axis and A2 mirrored on the negative one.
pub fn to_modified_frame(a1: Point, a2: Point) -> Result<Frame2D> {
    let (dx, dy) = (a1[0] - a2[0], a1[1] - a2[1]);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry("attackers coincide"));
    }
    Ok(Frame2D {
        origin: [0.5 * (a1[0] + a2[0]), 0.5 * (a1[1] + a2[1])],
        rotation: -dy.atan2(dx),
    })
}

/// Target-to-attacker speed ratio, strictly inside (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SpeedRatio(f64);

impl SpeedRatio {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma < 1.0 {
            Ok(Self(gamma))
        } else {
            Err(Error::UnitSpeedRatio(gamma))
        }
    }

    pub fn from_speeds(target: f64, attacker: f64) -> Result<Self> {
        Self::new(target / attacker)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SpeedRatio {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpeedRatio> for f64 {
    fn from(g: SpeedRatio) -> f64 {
        g.0
    }
}

/// Boundary of the region a target reaches strictly before its attacker.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApolloniusCircle {
    pub center: Point,
    pub radius: f64,
}

impl ApolloniusCircle {
    pub fn point_at(&self, angle: f64) -> Point {
        [self.center[0] + self.radius * angle.cos(), self.center[1] + self.radius * angle.sin()]
    }
}

pub fn apollonius_circle(attacker: Point, target: Point, gamma: SpeedRatio) -> Result<ApolloniusCircle> {
    let g2 = gamma.0 * gamma.0;
    let (dx, dy) = (target[0] - attacker[0], target[1] - attacker[1]);
    let dist = dx.hypot(dy);
    if dist == 0.0 {
        return Err(Error::DegenerateGeometry("attacker and target coincide"));
    }
    let k = 1.0 - g2;
    Ok(ApolloniusCircle {
        center: [(target[0] - g2 * attacker[0]) / k, (target[1] - g2 * attacker[1]) / k],
        radius: gamma.0 * dist / k,
    })
}

/// Segment of the y-axis inside a circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterceptInterval {
    pub y_low: f64,
    pub y_high: f64,
}

impl InterceptInterval {
    pub fn width(&self) -> f64 {
        self.y_high - self.y_low
    }

    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let lo = self.y_low.max(other.y_low);
        let hi = self.y_high.min(other.y_high);
        (lo <= hi).then_some(Self { y_low: lo, y_high: hi })
    }
}

/// Roots of `y^2 - 2 y_c y + (y_c^2 + x_c^2 - r^2) = 0`, ordered.
pub fn y_axis_intercepts(c: &ApolloniusCircle) -> Option<InterceptInterval> {
    let [xc, yc] = c.center;
    let gap = c.radius - xc.abs();
    if gap.abs() <= TANGENCY_TOLERANCE * c.radius.max(1.0) {
        return Some(InterceptInterval { y_low: yc, y_high: yc });
    }
    if gap < 0.0 {
        return None;
    }
    let b = -2.0 * yc;
    let cc = yc * yc + xc * xc - c.radius * c.radius;
    // disc/4 = r^2 - x_c^2, factored to keep precision near tangency
    let half_root = ((c.radius - xc) * (c.radius + xc)).sqrt();
    let q = -0.5 * (b + b.signum() * 2.0 * half_root);
    let (r1, r2) = if q == 0.0 { (-half_root, half_root) } else { (q, cc / q) };
    Some(InterceptInterval { y_low: r1.min(r2), y_high: r1.max(r2) })
}

/// Which requirement of the escape test failed first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeCondition {
    /// T1's circle does not reach the bisector.
    FirstIntercept,
    /// T2's circle does not reach the bisector.
    SecondIntercept,
    /// Both reach it but the intervals are disjoint.
    Overlap,
}

impl EscapeCondition {
    pub fn number(self) -> u8 {
        match self {
            EscapeCondition::FirstIntercept => 1,
            EscapeCondition::SecondIntercept => 2,
            EscapeCondition::Overlap => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EscapeVerdict {
    /// `marginal` is set when the shared segment has zero width.
    Escape { marginal: bool },
    Capture { failed: EscapeCondition },
}

impl EscapeVerdict {
    pub fn is_escape(&self) -> bool {
        matches!(self, EscapeVerdict::Escape { .. })
    }
}

impl std::fmt::Display for EscapeVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EscapeVerdict::Escape { marginal: false } => write!(f, "Escape"),
            EscapeVerdict::Escape { marginal: true } => write!(f, "Escape (boundary)"),
            EscapeVerdict::Capture { failed } => {
                let why = match failed {
                    EscapeCondition::FirstIntercept => "T1 cannot reach the attackers' bisector first",
                    EscapeCondition::SecondIntercept => "T2 cannot reach the attackers' bisector first",
                    EscapeCondition::Overlap => "the intercept intervals do not overlap",
                };
                write!(f, "Capture (condition {} failed: {why})", failed.number())
            }
        }
    }
}

/// Intermediate geometry behind a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeAnalysis {
    pub frame: Frame2D,
    pub circle1: ApolloniusCircle,
    pub circle2: ApolloniusCircle,
    pub interval1: Option<InterceptInterval>,
    pub interval2: Option<InterceptInterval>,
    pub verdict: EscapeVerdict,
}

pub fn escape_analysis(
    a1: Point,
    a2: Point,
    t1: Point,
    t2: Point,
    gamma1: SpeedRatio,
    gamma2: SpeedRatio,
) -> Result<EscapeAnalysis> {
    let frame = to_modified_frame(a1, a2)?;
    let (fa1, fa2, ft1, ft2) = (frame.to_frame(a1), frame.to_frame(a2), frame.to_frame(t1), frame.to_frame(t2));
    if !(ft1[0] > 0.0) {
        return Err(Error::AssignmentViolation("T1 must lie on A1's side of the bisector"));
    }
    if !(ft2[0] < 0.0) {
        return Err(Error::AssignmentViolation("T2 must lie on A2's side of the bisector"));
    }
    let circle1 = apollonius_circle(fa1, ft1, gamma1)?;
    let circle2 = apollonius_circle(fa2, ft2, gamma2)?;
    let interval1 = y_axis_intercepts(&circle1);
    let interval2 = y_axis_intercepts(&circle2);
    let verdict = match (interval1, interval2) {
        (None, _) => EscapeVerdict::Capture { failed: EscapeCondition::FirstIntercept },
        (_, None) => EscapeVerdict::Capture { failed: EscapeCondition::SecondIntercept },
        (Some(i1), Some(i2)) => match i1.intersection(&i2) {
            None => EscapeVerdict::Capture { failed: EscapeCondition::Overlap },
            Some(shared) => EscapeVerdict::Escape { marginal: shared.width() == 0.0 },
        },
    };
    Ok(EscapeAnalysis { frame, circle1, circle2, interval1, interval2, verdict })
}

/// Escape iff both targets' circles cut the bisector and the cuts overlap.
pub fn escape_verdict(
    a1: Point,
    a2: Point,
    t1: Point,
    t2: Point,
    gamma1: SpeedRatio,
    gamma2: SpeedRatio,
) -> Result<EscapeVerdict> {
    Ok(escape_analysis(a1, a2, t1, t2, gamma1, gamma2)?.verdict)
}

/// Sampling grid for T2's initial position (world coordinates, inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeMapSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for EscapeMapSpec {
    fn default() -> Self {
        Self { x_min: -1000.0, x_max: 0.0, y_min: 0.0, y_max: 2500.0, nx: 101, ny: 126 }
    }
}

impl EscapeMapSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nx > 0
            && self.ny > 0
            && self.x_min <= self.x_max
            && self.y_min <= self.y_max
            && [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("escape map grid needs n > 0 and ordered finite ranges".into()))
        }
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        Self::axis(self.x_min, self.x_max, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        Self::axis(self.y_min, self.y_max, self.ny, j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapCell {
    Escape,
    /// Escape through a single tangent point.
    Boundary,
    Capture,
    /// T2 on the wrong side or coincident with an agent.
    Invalid,
}

impl MapCell {
    pub fn label(self) -> &'static str {
        match self {
            MapCell::Escape => "escape",
            MapCell::Boundary => "boundary",
            MapCell::Capture => "capture",
            MapCell::Invalid => "invalid",
        }
    }
}

/// Verdicts for every T2 position of a grid, row-major with `y` outer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeMapGrid {
    pub spec: EscapeMapSpec,
    pub cells: Vec<MapCell>,
}

impl EscapeMapGrid {
    pub fn get(&self, i: usize, j: usize) -> MapCell {
        self.cells[j * self.spec.nx + i]
    }

    pub fn count(&self, which: MapCell) -> usize {
        self.cells.iter().filter(|c| **c == which).count()
    }

    /// `(x, y, cell)` rows in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, MapCell)> + '_ {
        self.cells.iter().enumerate().map(|(k, c)| {
            let (i, j) = (k % self.spec.nx, k / self.spec.nx);
            (self.spec.x(i), self.spec.y(j), *c)
        })
    }
}

/// Fixed agents for an escape map; only T2 varies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeMapFixed {
    pub a1: Point,
    pub a2: Point,
    pub t1: Point,
    pub gamma1: SpeedRatio,
    pub gamma2: SpeedRatio,
}

pub fn classify_cell(fixed: &EscapeMapFixed, t2: Point) -> MapCell {
    match escape_verdict(fixed.a1, fixed.a2, fixed.t1, t2, fixed.gamma1, fixed.gamma2) {
        Ok(EscapeVerdict::Escape { marginal: false }) => MapCell::Escape,
        Ok(EscapeVerdict::Escape { marginal: true }) => MapCell::Boundary,
        Ok(EscapeVerdict::Capture { .. }) => MapCell::Capture,
        Err(_) => MapCell::Invalid,
    }
}

pub fn escape_map(fixed: &EscapeMapFixed, spec: &EscapeMapSpec) -> Result<EscapeMapGrid> {
    spec.validate()?;
    to_modified_frame(fixed.a1, fixed.a2)?;
    let cells = (0..spec.nx * spec.ny)
        .into_par_iter()
        .map(|k| classify_cell(fixed, [spec.x(k % spec.nx), spec.y(k / spec.nx)]))
        .collect();
    Ok(EscapeMapGrid { spec: *spec, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half() -> SpeedRatio {
        SpeedRatio::new(0.5).unwrap()
    }

    #[test]
    fn frame_examples() {
        let f = to_modified_frame([100.0, 0.0], [-100.0, 0.0]).unwrap();
        assert_eq!(f.to_frame([100.0, 0.0]), [100.0, 0.0]);
        let f = to_modified_frame([0.0, 100.0], [0.0, -100.0]).unwrap();
        assert_relative_eq!(f.rotation, -std::f64::consts::FRAC_PI_2);
        let p = f.to_frame([0.0, 100.0]);
        assert!((p[0] - 100.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let w = f.to_world(f.to_frame([3.0, -7.0]));
        assert!((w[0] - 3.0).abs() < 1e-12 && (w[1] + 7.0).abs() < 1e-12);
        assert!(to_modified_frame([1.0, 1.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn circle_examples() {
        let c = apollonius_circle([100.0, 0.0], [150.0, 600.0], half()).unwrap();
        assert!((c.center[0] - 166.6667).abs() < 1e-3 && (c.center[1] - 800.0).abs() < 1e-9);
        assert!((c.radius - 401.386).abs() < 1e-3);
        let c = apollonius_circle([-100.0, 0.0], [-100.0, 1000.0], half()).unwrap();
        assert!((c.center[0] + 100.0).abs() < 1e-9 && (c.center[1] - 1333.3333).abs() < 1e-3);
        assert!((c.radius - 666.6667).abs() < 1e-3);
        assert!(matches!(SpeedRatio::new(1.0), Err(Error::UnitSpeedRatio(_))));
        assert!(apollonius_circle([1.0, 2.0], [1.0, 2.0], half()).is_err());
    }

    #[test]
    fn small_ratio_shrinks_onto_target() {
        let g = SpeedRatio::new(1e-4).unwrap();
        let c = apollonius_circle([0.0, 0.0], [300.0, 400.0], g).unwrap();
        assert!((c.radius - 1e-4 * 500.0).abs() < 1e-9);
        assert!((c.center[0] - 300.0).abs() < 1e-4 && (c.center[1] - 400.0).abs() < 1e-4);
    }

    #[test]
    fn intercept_examples() {
        let c = apollonius_circle([100.0, 0.0], [150.0, 600.0], half()).unwrap();
        let i = y_axis_intercepts(&c).unwrap();
        assert!((i.y_low - 434.85).abs() < 0.01 && (i.y_high - 1165.15).abs() < 0.01);
        let c = apollonius_circle([-100.0, 0.0], [-100.0, 1000.0], half()).unwrap();
        let i = y_axis_intercepts(&c).unwrap();
        assert!((i.y_low - 674.21).abs() < 0.01 && (i.y_high - 1992.46).abs() < 0.01);
        assert!(y_axis_intercepts(&ApolloniusCircle { center: [500.0, 0.0], radius: 100.0 }).is_none());
        let t = y_axis_intercepts(&ApolloniusCircle { center: [100.0, 7.0], radius: 100.0 }).unwrap();
        assert_eq!((t.y_low, t.y_high), (7.0, 7.0));
        // centred on the axis: b = 0
        let z = y_axis_intercepts(&ApolloniusCircle { center: [0.0, 0.0], radius: 5.0 }).unwrap();
        assert_eq!((z.y_low, z.y_high), (-5.0, 5.0));
    }

    #[test]
    fn verdict_examples() {
        let (a1, a2, t1) = ([100.0, 0.0], [-100.0, 0.0], [150.0, 600.0]);
        let v = escape_verdict(a1, a2, t1, [-100.0, 1000.0], half(), half()).unwrap();
        assert_eq!(v, EscapeVerdict::Escape { marginal: false });
        let v = escape_verdict(a1, a2, t1, [-1000.0, 2000.0], half(), half()).unwrap();
        assert_eq!(v, EscapeVerdict::Capture { failed: EscapeCondition::Overlap });
        let an = escape_analysis(a1, a2, t1, [-1000.0, 2000.0], half(), half()).unwrap();
        let i2 = an.interval2.unwrap();
        assert!((i2.y_low - 1997.5).abs() < 0.1 && (i2.y_high - 3335.8).abs() < 0.1);
        // mirrored with roles swapped
        let m = |p: Point| [-p[0], p[1]];
        let v = escape_verdict(m(a2), m(a1), m([-100.0, 1000.0]), m(t1), half(), half()).unwrap();
        assert!(v.is_escape());
        assert!(matches!(
            escape_verdict(a1, a2, [-5.0, 600.0], [-100.0, 1000.0], half(), half()),
            Err(Error::AssignmentViolation(_))
        ));
    }

    #[test]
    fn map_examples() {
        let fixed = EscapeMapFixed { a1: [100.0, 0.0], a2: [-100.0, 0.0], t1: [150.0, 600.0], gamma1: half(), gamma2: half() };
        let spec = EscapeMapSpec::default();
        let grid = escape_map(&fixed, &spec).unwrap();
        assert_eq!(grid.cells.len(), 101 * 126);
        // x = -100 is column 90, y = 1000 row 50; x = -1000 column 0, y = 2000 row 100
        assert_eq!(grid.get(90, 50), MapCell::Escape);
        assert_eq!(grid.get(0, 100), MapCell::Capture);
        // x = 0 column lies on the bisector
        assert_eq!(grid.get(100, 10), MapCell::Invalid);
        let one = EscapeMapSpec { x_min: -300.0, x_max: -100.0, y_min: 800.0, y_max: 1200.0, nx: 1, ny: 1 };
        let g1 = escape_map(&fixed, &one).unwrap();
        assert_eq!(g1.cells, vec![classify_cell(&fixed, [-200.0, 1000.0])]);
    }
}
