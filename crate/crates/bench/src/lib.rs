//! Benchmark fixtures shared by the criterion targets.

use lure_core::scenario::presets;
use lure_core::{AttackerEstimate, JointState};

/// Opening state of the general example with a perfect estimate.
pub fn general_opening() -> (JointState, AttackerEstimate) {
    let s = presets::general().agents.initial_state();
    (s, AttackerEstimate::from_truth(&s, [0.0, 0.0]))
}
