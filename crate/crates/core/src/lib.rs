//! Engine for the two-target/two-attacker engagement: kinematics, attacker
//! guidance, attacker-state estimation, cooperative receding-horizon target
//! control and closed-form escape classification.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod engagement;
pub mod error;
pub mod escape;
pub mod estimator;
pub mod export;
pub mod guidance;
pub mod nmpc;
pub mod plot;
pub mod scenario;
pub mod selfcheck;
pub mod sim;

pub use engagement::{
    AgentState, AspectAngles, AttackerAccel, ControlPair, EngagementOutcome, JointState, OutcomeConfig,
    RelativeGeometry,
};
pub use error::{Error, Result};
pub use escape::{EscapeVerdict, SpeedRatio};
pub use estimator::{AttackerEstimate, AttackerFilter, FilterConfig, MeasurementVector};
pub use guidance::{GuidanceConfig, GuidanceLaw};
pub use nmpc::{ControlSequence, MpcConfig, MpcController};
pub use scenario::ScenarioConfig;
pub use sim::{run_closed_loop, SimulationTrace};
