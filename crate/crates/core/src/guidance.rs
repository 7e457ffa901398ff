//! Attacker guidance: pure pursuit, proportional navigation and the periodic
//! switch between them that drives the truth model.

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::engagement::{AgentState, AttackerAccel, JointState};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceLaw {
    PurePursuit,
    ProportionalNavigation,
}

impl GuidanceLaw {
    fn other(self) -> Self {
        match self {
            GuidanceLaw::PurePursuit => GuidanceLaw::ProportionalNavigation,
            GuidanceLaw::ProportionalNavigation => GuidanceLaw::PurePursuit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceConfig {
    /// PN navigation constant `N`.
    pub nav_constant: f64,
    /// PP gain (1/s): commanded heading rate per radian of LOS error.
    pub pp_gain: f64,
    /// Seconds spent on each law before switching.
    pub switch_period: f64,
    pub initial_law: GuidanceLaw,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            nav_constant: 3.0,
            pp_gain: 2.0,
            switch_period: 2.5,
            initial_law: GuidanceLaw::ProportionalNavigation,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if pos(self.nav_constant) && pos(self.pp_gain) && pos(self.switch_period) {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("guidance gains and switch period must be positive".into()))
        }
    }
}

/// Pure-pursuit lateral acceleration toward the LOS angle `los`.
///
/// The commanded heading rate is `-kappa * wrap(heading - los)`, so the
/// acceleration is that rate times the attacker speed.
pub fn pure_pursuit_accel(attacker: &AgentState, los: f64, kappa: f64) -> f64 {
    -kappa * attacker.speed * wrap(attacker.heading - los)
}

/// LOS rotation rate from `attacker` to `target`.
pub fn los_rate(attacker: &AgentState, target: &AgentState) -> Result<f64> {
    let dx = target.x - attacker.x;
    let dy = target.y - attacker.y;
    let r2 = dx * dx + dy * dy;
    if r2 == 0.0 {
        return Err(Error::DegenerateGeometry("attacker and target coincide"));
    }
    let [tvx, tvy] = target.velocity();
    let [avx, avy] = attacker.velocity();
    let (dvx, dvy) = (tvx - avx, tvy - avy);
    Ok((dx * dvy - dy * dvx) / r2)
}

/// Proportional navigation: `a = N v dtheta/dt`.
pub fn pro_nav_accel(attacker: &AgentState, target: &AgentState, nav_constant: f64) -> Result<f64> {
    Ok(nav_constant * attacker.speed * los_rate(attacker, target)?)
}

/// Law in force at time `t`; toggles at every multiple of the switch period.
pub fn active_law(t: f64, cfg: &GuidanceConfig) -> GuidanceLaw {
    // tolerate accumulated step error so t = k * period lands in slot k
    let slot = ((t / cfg.switch_period) + 1e-9).floor() as i64;
    if slot.rem_euclid(2) == 0 {
        cfg.initial_law
    } else {
        cfg.initial_law.other()
    }
}

/// Truth-model accelerations for both attackers against their assigned targets.
pub fn attacker_commands(s: &JointState, cfg: &GuidanceConfig) -> Result<AttackerAccel> {
    match active_law(s.t, cfg) {
        GuidanceLaw::PurePursuit => {
            let los = |a: &AgentState, t: &AgentState| (t.y - a.y).atan2(t.x - a.x);
            Ok(AttackerAccel {
                a1: pure_pursuit_accel(&s.attacker1, los(&s.attacker1, &s.target1), cfg.pp_gain),
                a2: pure_pursuit_accel(&s.attacker2, los(&s.attacker2, &s.target2), cfg.pp_gain),
            })
        }
        GuidanceLaw::ProportionalNavigation => {
            Ok(AttackerAccel {
                a1: pro_nav_accel(&s.attacker1, &s.target1, cfg.nav_constant)?,
                a2: pro_nav_accel(&s.attacker2, &s.target2, cfg.nav_constant)?,
            })
        }
    }
}
