//! Scenario files: everything a closed-loop run or escape map needs, as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engagement::{AgentState, JointState, OutcomeConfig};
use crate::error::{Error, Result};
use crate::escape::{EscapeMapFixed, EscapeMapSpec, Point, SpeedRatio};
use crate::estimator::FilterConfig;
use crate::guidance::GuidanceConfig;
use crate::nmpc::MpcConfig;

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Initial positions, speeds and (optional) headings.
///
/// Missing headings default to the pursuit-evasion opening: each attacker
/// points at its assigned target and each target flies directly away from
/// its attacker along the same line of sight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    pub t1: Point,
    pub t2: Point,
    pub a1: Point,
    pub a2: Point,
    #[serde(default = "default_target_speed")]
    pub target_speed: f64,
    #[serde(default = "default_attacker_speed")]
    pub attacker_speed: f64,
    /// `[t1, t2, a1, a2]` in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headings: Option<[f64; 4]>,
}

fn default_target_speed() -> f64 {
    30.0
}

fn default_attacker_speed() -> f64 {
    60.0
}

impl AgentsConfig {
    pub fn initial_state(&self) -> JointState {
        let los = |from: Point, to: Point| (to[1] - from[1]).atan2(to[0] - from[0]);
        let [h1, h2, h3, h4] = self.headings.unwrap_or_else(|| {
            let l1 = los(self.a1, self.t1);
            let l2 = los(self.a2, self.t2);
            [l1, l2, l1, l2]
        });
        let (vt, va) = (self.target_speed, self.attacker_speed);
        JointState {
            t: 0.0,
            target1: AgentState::new(self.t1[0], self.t1[1], vt, h1),
            target2: AgentState::new(self.t2[0], self.t2[1], vt, h2),
            attacker1: AgentState::new(self.a1[0], self.a1[1], va, h3),
            attacker2: AgentState::new(self.a2[0], self.a2[1], va, h4),
        }
    }

    pub fn speed_ratio(&self) -> Result<SpeedRatio> {
        SpeedRatio::from_speeds(self.target_speed, self.attacker_speed)
    }
}

/// Truth-side noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviations of `[r1, r2, R, theta1, theta2, theta_attackers]`.
    /// Defaults to the square roots of the filter's measurement covariance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_std: Option<[f64; 6]>,
    /// Perturb the attacker truth with the filter's process covariance.
    #[serde(default)]
    pub process_noise: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// Plant step (s).
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_max_duration")]
    pub max_duration: f64,
    pub agents: AgentsConfig,
    #[serde(default)]
    pub guidance: GuidanceConfig,
    #[serde(default)]
    pub mpc: MpcConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub outcome: OutcomeConfig,
    #[serde(default)]
    pub escape_map: EscapeMapSpec,
}

fn default_dt() -> f64 {
    0.05
}

fn default_max_duration() -> f64 {
    60.0
}

impl ScenarioConfig {
    /// Built-in defaults with the given agent layout.
    pub fn new(name: &str, agents: AgentsConfig, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            seed,
            dt: default_dt(),
            max_duration: default_max_duration(),
            agents,
            guidance: GuidanceConfig::default(),
            mpc: MpcConfig::default(),
            filter: FilterConfig::default(),
            noise: NoiseConfig::default(),
            outcome: OutcomeConfig::default(),
            escape_map: EscapeMapSpec::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::ConfigInvalid(msg) => Error::ConfigInvalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::ConfigInvalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.max_duration > 0.0 && self.max_duration.is_finite()) {
            return Err(Error::ConfigInvalid("dt and max_duration must be positive".into()));
        }
        let a = &self.agents;
        if !(a.target_speed > 0.0 && a.attacker_speed > 0.0) {
            return Err(Error::ConfigInvalid("speeds must be positive".into()));
        }
        let finite = [a.t1, a.t2, a.a1, a.a2].iter().flatten().all(|v| v.is_finite())
            && a.headings.is_none_or(|h| h.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::ConfigInvalid("agent coordinates must be finite".into()));
        }
        a.initial_state().validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        if let Some(std) = self.noise.measurement_std {
            if !std.iter().all(|v| *v >= 0.0 && v.is_finite()) {
                return Err(Error::ConfigInvalid("measurement_std must be non-negative".into()));
            }
        }
        self.guidance.validate()?;
        self.mpc.validate()?;
        self.filter.validate()?;
        self.outcome.validate()?;
        self.escape_map.validate()
    }

    pub fn measurement_std(&self) -> [f64; 6] {
        self.noise
            .measurement_std
            .unwrap_or_else(|| self.filter.measurement_noise.map(f64::sqrt))
    }

    /// Fixed agents for an escape map over T2's initial position.
    pub fn escape_fixed(&self) -> Result<EscapeMapFixed> {
        let gamma = self.agents.speed_ratio()?;
        Ok(EscapeMapFixed { a1: self.agents.a1, a2: self.agents.a2, t1: self.agents.t1, gamma1: gamma, gamma2: gamma })
    }
}

/// The three engagements studied: the general example and the escape and
/// capture variants that differ only in T2's start.
pub mod presets {
    use super::*;

    pub fn general() -> ScenarioConfig {
        ScenarioConfig::new(
            "general",
            AgentsConfig {
                t1: [100.0, 300.0],
                t2: [-100.0, 310.0],
                a1: [150.0, 0.0],
                a2: [-150.0, 0.0],
                target_speed: 30.0,
                attacker_speed: 60.0,
                headings: None,
            },
            1,
        )
    }

    fn escape_layout(t2: Point) -> AgentsConfig {
        AgentsConfig {
            t1: [150.0, 600.0],
            t2,
            a1: [100.0, 0.0],
            a2: [-100.0, 0.0],
            target_speed: 30.0,
            attacker_speed: 60.0,
            headings: None,
        }
    }

    pub fn escape() -> ScenarioConfig {
        ScenarioConfig::new("escape", escape_layout([-100.0, 1000.0]), 2)
    }

    pub fn capture() -> ScenarioConfig {
        ScenarioConfig::new("capture", escape_layout([-1000.0, 2000.0]), 3)
    }
}
