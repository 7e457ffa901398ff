//! Receding-horizon control of the target pair.
//!
//! Direct single shooting: the decision vector is the piecewise-constant turn
//! rate of each target over the horizon, laid out as
//! `[u1_0 .. u1_{N-1}, u2_0 .. u2_{N-1}]`.

mod rollout;
mod solver;

use serde::{Deserialize, Serialize};

pub use rollout::{
    cost_and_gradient, horizon_cost, predict_horizon, AttackerPredictor, PredictedTrajectory,
    PredictionModel,
};
pub use solver::{minimize_box, Box as BoxBounds, SolveReport, SolverOptions, SolverStatus};

use crate::engagement::{ControlPair, JointState};
use crate::error::{Error, Result};
use crate::estimator::AttackerEstimate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    pub steps: usize,
    pub dt: f64,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self { steps: 50, dt: 0.05 }
    }
}

impl HorizonConfig {
    pub fn length(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.dt > 0.0) {
            return Err(Error::ConfigInvalid("horizon needs steps > 0 and dt > 0".into()));
        }
        Ok(())
    }
}

/// Weights on `R`, `delta`, `lambda`, `r1`, `r2` in the running cost
/// `w1 R + w2 delta + w3 lambda - w4 r1 - w5 r2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub attacker_range: f64,
    pub delta: f64,
    pub lambda: f64,
    pub range1: f64,
    pub range2: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { attacker_range: 30.0, delta: 60.0, lambda: 60.0, range1: 1.0, range2: 1.0 }
    }
}

impl CostWeights {
    pub fn zero() -> Self {
        Self { attacker_range: 0.0, delta: 0.0, lambda: 0.0, range1: 0.0, range2: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.attacker_range, self.delta, self.lambda, self.range1, self.range2];
        if all.iter().all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("cost weights must be finite".into()))
        }
    }
}

/// How the aspect angles enter the running cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentPenalty {
    /// Wrapped `delta`, `lambda` used as signed values.
    #[default]
    Signed,
    /// `|delta|`, `|lambda|`.
    Magnitude,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ControlBounds {
    fn default() -> Self {
        Self { lower: -0.785, upper: 0.785 }
    }
}

impl ControlBounds {
    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.lower, self.upper)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower < self.upper && self.lower.is_finite() && self.upper.is_finite() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("control bounds need lower < upper".into()))
        }
    }
}

/// Piecewise-constant turn-rate plan.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSequence(pub Vec<ControlPair>);

impl ControlSequence {
    pub fn zeros(steps: usize) -> Self {
        Self(vec![ControlPair::default(); steps])
    }

    pub fn constant(steps: usize, u: ControlPair) -> Self {
        Self(vec![u; steps])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `[u1_0 .. u1_{N-1}, u2_0 .. u2_{N-1}]`
    pub fn to_decision(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.u1).chain(self.0.iter().map(|c| c.u2)).collect()
    }

    pub fn from_decision(x: &[f64]) -> Self {
        let n = x.len() / 2;
        Self((0..n).map(|k| ControlPair::new(x[k], x[n + k])).collect())
    }

    pub fn clipped(&self, bounds: &ControlBounds) -> Self {
        Self(
            self.0
                .iter()
                .map(|c| ControlPair::new(bounds.clamp(c.u1), bounds.clamp(c.u2)))
                .collect(),
        )
    }

    /// Drops the applied first entry and repeats the last one.
    pub fn shifted(&self) -> Self {
        let mut v: Vec<ControlPair> = self.0.iter().skip(1).copied().collect();
        if let Some(last) = self.0.last() {
            v.push(*last);
        }
        Self(v)
    }

    pub fn within(&self, bounds: &ControlBounds) -> bool {
        self.0.iter().all(|c| {
            (bounds.lower..=bounds.upper).contains(&c.u1) && (bounds.lower..=bounds.upper).contains(&c.u2)
        })
    }
}

/// Everything the optimal control problem needs besides the initial state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcConfig {
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default)]
    pub bounds: ControlBounds,
    #[serde(default)]
    pub penalty: AlignmentPenalty,
    #[serde(default)]
    pub predictor: AttackerPredictor,
    #[serde(default)]
    pub solver: SolverOptions,
}


impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        self.horizon.validate()?;
        self.weights.validate()?;
        self.bounds.validate()?;
        self.predictor.validate()?;
        self.solver.validate()
    }

    pub fn model(&self) -> PredictionModel {
        PredictionModel {
            horizon: self.horizon,
            weights: self.weights,
            penalty: self.penalty,
            predictor: self.predictor,
        }
    }
}

/// Result of one optimal-control solve.
#[derive(Clone, Debug, PartialEq)]
pub struct OcpSolution {
    pub sequence: ControlSequence,
    pub cost: f64,
    pub warm_cost: f64,
    pub report: SolveReport,
}

impl OcpSolution {
    /// True when the line search found no descent direction. The returned
    /// sequence is still the best one found and is safe to apply. Running out
    /// of iterations is an ordinary stop, not a stall.
    pub fn stalled(&self) -> bool {
        self.report.status == SolverStatus::Stalled
    }
}

/// Minimizes the horizon cost from a warm start.
///
/// The returned sequence is within bounds and never costs more than the
/// (clipped) warm start.
pub fn solve_ocp(
    s0: &JointState,
    est: &AttackerEstimate,
    warm: &ControlSequence,
    cfg: &MpcConfig,
) -> OcpSolution {
    let model = cfg.model();
    let n = cfg.horizon.steps;
    let mut warm = warm.clipped(&cfg.bounds);
    warm.0.resize(n, warm.0.last().copied().unwrap_or_default());
    let x0 = warm.to_decision();
    let bounds = BoxBounds::uniform(2 * n, cfg.bounds.lower, cfg.bounds.upper);
    let mut objective = |x: &[f64], grad: &mut [f64]| cost_and_gradient(s0, est, x, &model, grad);
    let report = minimize_box(&mut objective, &x0, &bounds, &cfg.solver);
    OcpSolution {
        sequence: ControlSequence::from_decision(&report.x),
        cost: report.value,
        warm_cost: report.initial_value,
        report,
    }
}

/// Per-step controller diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcDiagnostics {
    pub cost: f64,
    pub warm_cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub projected_gradient: f64,
    pub stalled: bool,
}

/// Receding-horizon controller with shift-and-hold warm starting.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcController {
    pub config: MpcConfig,
    plan: ControlSequence,
}

impl MpcController {
    pub fn new(config: MpcConfig) -> Self {
        let plan = ControlSequence::zeros(config.horizon.steps);
        Self { config, plan }
    }

    /// Current plan (the warm start for the next call, before shifting).
    pub fn plan(&self) -> &ControlSequence {
        &self.plan
    }

    /// Solves from the shifted previous plan and returns the first control.
    pub fn step(&mut self, s0: &JointState, est: &AttackerEstimate) -> (ControlPair, MpcDiagnostics) {
        let (u, next, diag) = mpc_step(s0, est, &self.plan, &self.config);
        self.plan = next;
        (u, diag)
    }
}

/// One receding-horizon iteration. `prev` is the previous solution (or the
/// cold-start zero sequence, which is unchanged by the shift).
pub fn mpc_step(
    s0: &JointState,
    est: &AttackerEstimate,
    prev: &ControlSequence,
    cfg: &MpcConfig,
) -> (ControlPair, ControlSequence, MpcDiagnostics) {
    let warm = prev.shifted();
    let sol = solve_ocp(s0, est, &warm, cfg);
    let first = sol.sequence.0.first().copied().unwrap_or_default();
    let first = ControlPair::new(cfg.bounds.clamp(first.u1), cfg.bounds.clamp(first.u2));
    let diag = MpcDiagnostics {
        cost: sol.cost,
        warm_cost: sol.warm_cost,
        iterations: sol.report.iterations,
        evaluations: sol.report.evaluations,
        projected_gradient: sol.report.projected_gradient,
        stalled: sol.stalled(),
    };
    (first, sol.sequence, diag)
}
