//! Four-agent planar kinematics.
//!
//! The plant integrates positions and headings only. Ranges, line-of-sight
//! angles and aspect angles are always recomputed from positions, so there is
//! nothing to drift out of sync.

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::error::{Error, Result};

/// Position, constant speed and heading of one agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    /// Heading measured from +x, wrapped to `[-pi, pi)`.
    pub heading: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, speed: f64, heading: f64) -> Self {
        Self { x, y, speed, heading: wrap(heading) }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn velocity(&self) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        [self.speed * c, self.speed * s]
    }
}

/// Identifies one of the four agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Agent {
    Target1,
    Target2,
    Attacker1,
    Attacker2,
}

impl Agent {
    pub const ALL: [Agent; 4] = [Agent::Target1, Agent::Target2, Agent::Attacker1, Agent::Attacker2];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub t: f64,
    pub target1: AgentState,
    pub target2: AgentState,
    pub attacker1: AgentState,
    pub attacker2: AgentState,
}

impl JointState {
    pub fn agent(&self, which: Agent) -> &AgentState {
        match which {
            Agent::Target1 => &self.target1,
            Agent::Target2 => &self.target2,
            Agent::Attacker1 => &self.attacker1,
            Agent::Attacker2 => &self.attacker2,
        }
    }

    pub fn agent_mut(&mut self, which: Agent) -> &mut AgentState {
        match which {
            Agent::Target1 => &mut self.target1,
            Agent::Target2 => &mut self.target2,
            Agent::Attacker1 => &mut self.attacker1,
            Agent::Attacker2 => &mut self.attacker2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in Agent::ALL {
            let s = self.agent(a);
            if !(s.speed > 0.0) || !s.speed.is_finite() {
                return Err(Error::ConfigInvalid(format!("{a:?} speed must be positive")));
            }
            if !(s.x.is_finite() && s.y.is_finite() && s.heading.is_finite()) {
                return Err(Error::ConfigInvalid(format!("{a:?} state is not finite")));
            }
        }
        Ok(())
    }
}

/// Time derivative of the integrated part of a [`JointState`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct AgentRate {
    pub dx: f64,
    pub dy: f64,
    pub dheading: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct JointStateDerivative {
    pub target1: AgentRate,
    pub target2: AgentRate,
    pub attacker1: AgentRate,
    pub attacker2: AgentRate,
}

/// Ranges and line-of-sight angles derived from positions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeGeometry {
    /// A1-A2 separation `R`.
    pub attacker_range: f64,
    /// A1-T1 range `r1`.
    pub range1: f64,
    /// A2-T2 range `r2`.
    pub range2: f64,
    pub los_attackers: f64,
    pub los1: f64,
    pub los2: f64,
}

/// Right-hand sides of the relative-motion ODEs, evaluated from Cartesian state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeRates {
    pub attacker_range: f64,
    pub range1: f64,
    pub range2: f64,
    pub los_attackers: f64,
    pub los1: f64,
    pub los2: f64,
}

/// Offsets of the attacker velocity vectors from the A1-A2 line of sight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectAngles {
    pub delta: f64,
    pub lambda: f64,
}

/// Target turn rates (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlPair {
    pub u1: f64,
    pub u2: f64,
}

impl ControlPair {
    pub fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }
}

/// Attacker lateral accelerations (m/s^2).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct AttackerAccel {
    pub a1: f64,
    pub a2: f64,
}

impl AttackerAccel {
    pub fn new(a1: f64, a2: f64) -> Self {
        Self { a1, a2 }
    }
}

/// Capture radii (m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeConfig {
    pub capture_attackers: f64,
    pub capture_r1: f64,
    pub capture_r2: f64,
}

impl Default for OutcomeConfig {
    fn default() -> Self {
        Self { capture_attackers: 1.0, capture_r1: 1.0, capture_r2: 1.0 }
    }
}

impl OutcomeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.capture_attackers, self.capture_r1, self.capture_r2]
            .iter()
            .all(|r| *r > 0.0 && r.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("capture radii must be positive".into()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EngagementOutcome {
    Ongoing,
    AttackersCollided { t: f64 },
    TargetCaptured { target: u8, t: f64 },
}

impl EngagementOutcome {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, EngagementOutcome::Ongoing)
    }
}

fn displacement(from: &AgentState, to: &AgentState) -> [f64; 2] {
    [to.x - from.x, to.y - from.y]
}

fn range_and_los(from: &AgentState, to: &AgentState, what: &'static str) -> Result<(f64, f64)> {
    let [dx, dy] = displacement(from, to);
    let r = dx.hypot(dy);
    if r == 0.0 {
        return Err(Error::DegenerateGeometry(what));
    }
    Ok((r, wrap(dy.atan2(dx))))
}

pub fn relative_geometry(s: &JointState) -> Result<RelativeGeometry> {
    let (attacker_range, los_attackers) =
        range_and_los(&s.attacker1, &s.attacker2, "attackers coincide")?;
    let (range1, los1) = range_and_los(&s.attacker1, &s.target1, "A1 and T1 coincide")?;
    let (range2, los2) = range_and_los(&s.attacker2, &s.target2, "A2 and T2 coincide")?;
    Ok(RelativeGeometry { attacker_range, range1, range2, los_attackers, los1, los2 })
}

pub fn aspect_angles(s: &JointState) -> Result<AspectAngles> {
    let (_, los) = range_and_los(&s.attacker1, &s.attacker2, "attackers coincide")?;
    Ok(aspect_from_los(s.attacker1.heading, s.attacker2.heading, los))
}

pub(crate) fn aspect_from_los(heading1: f64, heading2: f64, los_attackers: f64) -> AspectAngles {
    AspectAngles {
        delta: wrap(heading1 - los_attackers),
        lambda: wrap(std::f64::consts::PI + (heading2 - los_attackers)),
    }
}

/// Closing/opening rates of `R`, `r1`, `r2` and the LOS rotation rates,
/// written in polar form from the current headings.
pub fn relative_rates(s: &JointState) -> Result<RelativeRates> {
    let g = relative_geometry(s)?;
    let pair = |from: &AgentState, to: &AgentState, los: f64, r: f64| {
        let along = to.speed * (to.heading - los).cos() - from.speed * (from.heading - los).cos();
        let across = to.speed * (to.heading - los).sin() - from.speed * (from.heading - los).sin();
        (along, across / r)
    };
    let (dr_a, dth_a) = pair(&s.attacker1, &s.attacker2, g.los_attackers, g.attacker_range);
    let (dr1, dth1) = pair(&s.attacker1, &s.target1, g.los1, g.range1);
    let (dr2, dth2) = pair(&s.attacker2, &s.target2, g.los2, g.range2);
    Ok(RelativeRates {
        attacker_range: dr_a,
        range1: dr1,
        range2: dr2,
        los_attackers: dth_a,
        los1: dth1,
        los2: dth2,
    })
}

fn agent_rate(a: &AgentState, turn_rate: f64) -> AgentRate {
    let [dx, dy] = a.velocity();
    AgentRate { dx, dy, dheading: turn_rate }
}

pub fn kinematics_rhs(s: &JointState, u: ControlPair, a: AttackerAccel) -> JointStateDerivative {
    JointStateDerivative {
        target1: agent_rate(&s.target1, u.u1),
        target2: agent_rate(&s.target2, u.u2),
        attacker1: agent_rate(&s.attacker1, a.a1 / s.attacker1.speed),
        attacker2: agent_rate(&s.attacker2, a.a2 / s.attacker2.speed),
    }
}

fn advance(s: &JointState, d: &JointStateDerivative, h: f64) -> JointState {
    let step = |a: &AgentState, r: &AgentRate| AgentState {
        x: a.x + h * r.dx,
        y: a.y + h * r.dy,
        speed: a.speed,
        // intermediate stages are not wrapped; only the final state is
        heading: a.heading + h * r.dheading,
    };
    JointState {
        t: s.t + h,
        target1: step(&s.target1, &d.target1),
        target2: step(&s.target2, &d.target2),
        attacker1: step(&s.attacker1, &d.attacker1),
        attacker2: step(&s.attacker2, &d.attacker2),
    }
}

/// Classical fixed-step RK4 with controls and accelerations held over the step.
/// A negative `dt` integrates backward.
pub fn integrate_step(s: &JointState, u: ControlPair, a: AttackerAccel, dt: f64) -> JointState {
    let k1 = kinematics_rhs(s, u, a);
    let k2 = kinematics_rhs(&advance(s, &k1, 0.5 * dt), u, a);
    let k3 = kinematics_rhs(&advance(s, &k2, 0.5 * dt), u, a);
    let k4 = kinematics_rhs(&advance(s, &k3, dt), u, a);
    let combine = |a: &AgentState, r1: &AgentRate, r2: &AgentRate, r3: &AgentRate, r4: &AgentRate| {
        let w = dt / 6.0;
        AgentState {
            x: a.x + w * (r1.dx + 2.0 * r2.dx + 2.0 * r3.dx + r4.dx),
            y: a.y + w * (r1.dy + 2.0 * r2.dy + 2.0 * r3.dy + r4.dy),
            speed: a.speed,
            heading: wrap(
                a.heading + w * (r1.dheading + 2.0 * r2.dheading + 2.0 * r3.dheading + r4.dheading),
            ),
        }
    };
    JointState {
        t: s.t + dt,
        target1: combine(&s.target1, &k1.target1, &k2.target1, &k3.target1, &k4.target1),
        target2: combine(&s.target2, &k1.target2, &k2.target2, &k3.target2, &k4.target2),
        attacker1: combine(&s.attacker1, &k1.attacker1, &k2.attacker1, &k3.attacker1, &k4.attacker1),
        attacker2: combine(&s.attacker2, &k1.attacker2, &k2.attacker2, &k3.attacker2, &k4.attacker2),
    }
}

/// Instantaneous outcome test. Attacker collision wins ties.
pub fn check_outcome(s: &JointState, cfg: &OutcomeConfig) -> EngagementOutcome {
    let dist = |a: &AgentState, b: &AgentState| {
        let [dx, dy] = displacement(a, b);
        dx.hypot(dy)
    };
    if dist(&s.attacker1, &s.attacker2) <= cfg.capture_attackers {
        EngagementOutcome::AttackersCollided { t: s.t }
    } else if dist(&s.attacker1, &s.target1) <= cfg.capture_r1 {
        EngagementOutcome::TargetCaptured { target: 1, t: s.t }
    } else if dist(&s.attacker2, &s.target2) <= cfg.capture_r2 {
        EngagementOutcome::TargetCaptured { target: 2, t: s.t }
    } else {
        EngagementOutcome::Ongoing
    }
}

/// Earliest fraction `tau` in `[0, 1]` at which the linearly interpolated
/// separation `d0 + tau (d1 - d0)` drops to `radius`.
fn crossing_fraction(d0: [f64; 2], d1: [f64; 2], radius: f64) -> Option<f64> {
    let dd = [d1[0] - d0[0], d1[1] - d0[1]];
    let c = d0[0] * d0[0] + d0[1] * d0[1] - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let a = dd[0] * dd[0] + dd[1] * dd[1];
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * (d0[0] * dd[0] + d0[1] * dd[1]);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let tau = (-b - disc.sqrt()) / (2.0 * a);
    (0.0..=1.0).contains(&tau).then_some(tau)
}

/// Outcome over one integration step.
///
/// Checks the end state and also the straight-line sweep between the two
/// states, so fast head-on passes that jump over the radius inside a step are
/// caught. Terminal variants carry the interpolated crossing time. Attacker
/// collision wins whenever it fires in the same step.
pub fn check_outcome_over_step(
    prev: &JointState,
    next: &JointState,
    cfg: &OutcomeConfig,
) -> EngagementOutcome {
    let sep = |s: &JointState, a: Agent, b: Agent| displacement(s.agent(a), s.agent(b));
    let when = |a: Agent, b: Agent, r: f64| {
        crossing_fraction(sep(prev, a, b), sep(next, a, b), r)
            .map(|tau| prev.t + tau * (next.t - prev.t))
    };
    if let Some(t) = when(Agent::Attacker1, Agent::Attacker2, cfg.capture_attackers) {
        return EngagementOutcome::AttackersCollided { t };
    }
    let c1 = when(Agent::Attacker1, Agent::Target1, cfg.capture_r1);
    let c2 = when(Agent::Attacker2, Agent::Target2, cfg.capture_r2);
    match (c1, c2) {
        (Some(t1), Some(t2)) if t2 < t1 => EngagementOutcome::TargetCaptured { target: 2, t: t2 },
        (Some(t), _) => EngagementOutcome::TargetCaptured { target: 1, t },
        (None, Some(t)) => EngagementOutcome::TargetCaptured { target: 2, t },
        (None, None) => EngagementOutcome::Ongoing,
    }
}
