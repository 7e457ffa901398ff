//! Horizon rollout, running cost, and the reverse-mode gradient of the cost
//! with respect to the control sequence.

use serde::{Deserialize, Serialize};

use super::{AlignmentPenalty, ControlSequence, CostWeights, HorizonConfig};
use crate::engagement::{
    aspect_angles, integrate_step, relative_geometry, AgentState, AspectAngles, AttackerAccel,
    ControlPair, JointState, RelativeGeometry,
};
use crate::error::{Error, Result};
use crate::estimator::{AttackerEstimate, ACCEL1, ACCEL2, HEADING1, HEADING2, X1, X2, Y1, Y2};
use crate::guidance::pure_pursuit_accel;

/// How the controller predicts attacker motion inside the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackerPredictor {
    /// The filter's own model: estimated lateral acceleration decaying as
    /// `a' = -a`, independent of what the targets do.
    DecayingAccel,
    /// Attackers turn toward their predicted target at `gain` rad/s per
    /// radian of LOS error, so they respond to the planned target motion.
    Pursuit { gain: f64 },
}

impl Default for AttackerPredictor {
    fn default() -> Self {
        AttackerPredictor::Pursuit { gain: 2.0 }
    }
}

impl AttackerPredictor {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttackerPredictor::Pursuit { gain } if !(*gain > 0.0 && gain.is_finite()) => {
                Err(Error::ConfigInvalid("pursuit predictor gain must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictionModel {
    pub horizon: HorizonConfig,
    pub weights: CostWeights,
    pub penalty: AlignmentPenalty,
    pub predictor: AttackerPredictor,
}

/// Predicted knots over the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictedTrajectory {
    /// Knot states; `steps + 1` entries unless truncated.
    pub states: Vec<JointState>,
    pub geometry: Vec<RelativeGeometry>,
    pub aspects: Vec<AspectAngles>,
    /// Heading rates `[T1, T2, A1, A2]` held over each step.
    pub turn_rates: Vec<[f64; 4]>,
    /// Set when a knot collapsed a required pair; the trajectory stops at the
    /// last valid knot.
    pub truncated: bool,
}

/// Initial joint state for prediction: targets from `s0`, attackers from the
/// estimate (speeds stay those of `s0`).
pub fn prediction_start(s0: &JointState, est: &AttackerEstimate) -> JointState {
    let e = &est.0;
    JointState {
        attacker1: AgentState::new(e[X1], e[Y1], s0.attacker1.speed, e[HEADING1]),
        attacker2: AgentState::new(e[X2], e[Y2], s0.attacker2.speed, e[HEADING2]),
        ..*s0
    }
}

fn los(from: &AgentState, to: &AgentState) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

fn attacker_accel(
    s: &JointState,
    k: usize,
    est: &AttackerEstimate,
    model: &PredictionModel,
) -> AttackerAccel {
    match model.predictor {
        AttackerPredictor::DecayingAccel => {
            let decay = (-(k as f64) * model.horizon.dt).exp();
            AttackerAccel::new(est.0[ACCEL1] * decay, est.0[ACCEL2] * decay)
        }
        AttackerPredictor::Pursuit { gain } => AttackerAccel::new(
            pure_pursuit_accel(&s.attacker1, los(&s.attacker1, &s.target1), gain),
            pure_pursuit_accel(&s.attacker2, los(&s.attacker2, &s.target2), gain),
        ),
    }
}

fn rollout(
    s0: &JointState,
    est: &AttackerEstimate,
    controls: impl Iterator<Item = ControlPair>,
    model: &PredictionModel,
) -> Result<PredictedTrajectory> {
    let start = prediction_start(s0, est);
    let n = model.horizon.steps;
    let mut traj = PredictedTrajectory {
        states: Vec::with_capacity(n + 1),
        geometry: Vec::with_capacity(n + 1),
        aspects: Vec::with_capacity(n + 1),
        turn_rates: Vec::with_capacity(n),
        truncated: false,
    };
    traj.geometry.push(relative_geometry(&start)?);
    traj.aspects.push(aspect_angles(&start)?);
    traj.states.push(start);
    let mut s = start;
    for (k, u) in controls.take(n).enumerate() {
        let a = attacker_accel(&s, k, est, model);
        let next = integrate_step(&s, u, a, model.horizon.dt);
        let (Ok(g), Ok(asp)) = (relative_geometry(&next), aspect_angles(&next)) else {
            traj.truncated = true;
            break;
        };
        traj.turn_rates.push([u.u1, u.u2, a.a1 / s.attacker1.speed, a.a2 / s.attacker2.speed]);
        traj.states.push(next);
        traj.geometry.push(g);
        traj.aspects.push(asp);
        s = next;
    }
    Ok(traj)
}

/// Rolls the targets forward under `seq` and the attackers under the
/// configured predictor, starting from the filter estimate.
pub fn predict_horizon(
    s0: &JointState,
    est: &AttackerEstimate,
    seq: &ControlSequence,
    model: &PredictionModel,
) -> Result<PredictedTrajectory> {
    rollout(s0, est, seq.0.iter().copied(), model)
}

fn aspect_terms(a: &AspectAngles, penalty: AlignmentPenalty) -> (f64, f64, f64, f64) {
    match penalty {
        AlignmentPenalty::Signed => (a.delta, a.lambda, 1.0, 1.0),
        AlignmentPenalty::Magnitude => {
            let sign = |v: f64| if v == 0.0 { 0.0 } else { v.signum() };
            (a.delta.abs(), a.lambda.abs(), sign(a.delta), sign(a.lambda))
        }
    }
}

fn running_cost(g: &RelativeGeometry, a: &AspectAngles, w: &CostWeights, p: AlignmentPenalty) -> f64 {
    let (d, l, _, _) = aspect_terms(a, p);
    w.attacker_range * g.attacker_range + w.delta * d + w.lambda * l
        - w.range1 * g.range1
        - w.range2 * g.range2
}

/// Trapezoid weight of knot `k` out of `last + 1` knots.
fn knot_weight(k: usize, last: usize, dt: f64) -> f64 {
    if last == 0 {
        0.0
    } else if k == 0 || k == last {
        0.5 * dt
    } else {
        dt
    }
}

/// Trapezoidal quadrature of the running cost over the predicted knots.
pub fn horizon_cost(
    traj: &PredictedTrajectory,
    weights: &CostWeights,
    penalty: AlignmentPenalty,
    horizon: &HorizonConfig,
) -> f64 {
    let last = traj.states.len().saturating_sub(1);
    traj.geometry
        .iter()
        .zip(&traj.aspects)
        .enumerate()
        .map(|(k, (g, a))| knot_weight(k, last, horizon.dt) * running_cost(g, a, weights, penalty))
        .sum()
}

// State layout for the adjoint: agent i in [T1, T2, A1, A2], then [x, y, heading].
const T1: usize = 0;
const T2: usize = 3;
const A1: usize = 6;
const A2: usize = 9;

fn agents(s: &JointState) -> [&AgentState; 4] {
    [&s.target1, &s.target2, &s.attacker1, &s.attacker2]
}

/// Adds `scale * d(running cost)/d(state)` into `out`.
fn add_running_cost_gradient(
    s: &JointState,
    g: &RelativeGeometry,
    a: &AspectAngles,
    w: &CostWeights,
    p: AlignmentPenalty,
    scale: f64,
    out: &mut [f64; 12],
) {
    let (_, _, sd, sl) = aspect_terms(a, p);
    let dx = s.attacker2.x - s.attacker1.x;
    let dy = s.attacker2.y - s.attacker1.y;
    let r = g.attacker_range;
    let r2 = r * r;
    let wr = w.attacker_range * scale;
    // delta and lambda both contain -theta_A1A2
    let ang = (w.delta * sd + w.lambda * sl) * scale;
    out[A1] += -wr * dx / r - ang * dy / r2;
    out[A1 + 1] += -wr * dy / r + ang * dx / r2;
    out[A2] += wr * dx / r + ang * dy / r2;
    out[A2 + 1] += wr * dy / r - ang * dx / r2;
    out[A1 + 2] += w.delta * sd * scale;
    out[A2 + 2] += w.lambda * sl * scale;

    let mut range_term = |t: usize, att: usize, tgt: &AgentState, atk: &AgentState, range: f64, wt: f64| {
        let ex = (tgt.x - atk.x) / range;
        let ey = (tgt.y - atk.y) / range;
        let c = wt * scale;
        out[t] -= c * ex;
        out[t + 1] -= c * ey;
        out[att] += c * ex;
        out[att + 1] += c * ey;
    };
    range_term(T1, A1, &s.target1, &s.attacker1, g.range1, w.range1);
    range_term(T2, A2, &s.target2, &s.attacker2, g.range2, w.range2);
}

/// Partials of one RK4 step of a constant-turn agent:
/// `(dx'/dheading, dy'/dheading, dx'/drate, dy'/drate)`.
fn step_partials(heading: f64, rate: f64, speed: f64, dt: f64) -> (f64, f64, f64, f64) {
    let h = 0.5 * dt;
    let (s0, c0) = heading.sin_cos();
    let (s1, c1) = (heading + h * rate).sin_cos();
    let (s2, c2) = (heading + dt * rate).sin_cos();
    let w = dt / 6.0 * speed;
    (
        -w * (s0 + 4.0 * s1 + s2),
        w * (c0 + 4.0 * c1 + c2),
        -w * (4.0 * h * s1 + dt * s2),
        w * (4.0 * h * c1 + dt * c2),
    )
}

/// Horizon cost at decision vector `x` and its gradient written into `grad`.
///
/// Returns `+inf` (and a zero gradient) if the starting geometry is degenerate.
pub fn cost_and_gradient(
    s0: &JointState,
    est: &AttackerEstimate,
    x: &[f64],
    model: &PredictionModel,
    grad: &mut [f64],
) -> f64 {
    let n = model.horizon.steps;
    debug_assert_eq!(x.len(), 2 * n);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let controls = (0..n).map(|k| ControlPair::new(x[k], x[n + k]));
    let Ok(traj) = rollout(s0, est, controls, model) else {
        return f64::INFINITY;
    };
    let dt = model.horizon.dt;
    let w = &model.weights;
    let p = model.penalty;
    let cost = horizon_cost(&traj, w, p, &model.horizon);
    if grad.is_empty() {
        return cost;
    }

    let last = traj.states.len() - 1;
    let mut adj = [0.0; 12];
    add_running_cost_gradient(
        &traj.states[last],
        &traj.geometry[last],
        &traj.aspects[last],
        w,
        p,
        knot_weight(last, last, dt),
        &mut adj,
    );
    for k in (0..last).rev() {
        let s = &traj.states[k];
        let rates = traj.turn_rates[k];
        let mut prev = [0.0; 12];
        let mut rate_adj = [0.0; 4];
        for (i, agent) in agents(s).into_iter().enumerate() {
            let o = 3 * i;
            let (ax, ay, bx, by) = step_partials(agent.heading, rates[i], agent.speed, dt);
            let (lx, ly, lh) = (adj[o], adj[o + 1], adj[o + 2]);
            prev[o] += lx;
            prev[o + 1] += ly;
            prev[o + 2] += lh + lx * ax + ly * ay;
            rate_adj[i] = lx * bx + ly * by + lh * dt;
        }
        grad[k] = rate_adj[0];
        grad[n + k] = rate_adj[1];
        if let AttackerPredictor::Pursuit { gain } = model.predictor {
            for (att, tgt, atk_state, tgt_state, lw) in [
                (A1, T1, &s.attacker1, &s.target1, rate_adj[2]),
                (A2, T2, &s.attacker2, &s.target2, rate_adj[3]),
            ] {
                // rate = -gain * wrap(heading - los)
                prev[att + 2] -= gain * lw;
                let l_los = gain * lw;
                let ex = tgt_state.x - atk_state.x;
                let ey = tgt_state.y - atk_state.y;
                let r2 = ex * ex + ey * ey;
                prev[tgt] -= l_los * ey / r2;
                prev[tgt + 1] += l_los * ex / r2;
                prev[att] += l_los * ey / r2;
                prev[att + 1] -= l_los * ex / r2;
            }
        }
        if k > 0 {
            add_running_cost_gradient(
                s,
                &traj.geometry[k],
                &traj.aspects[k],
                w,
                p,
                knot_weight(k, last, dt),
                &mut prev,
            );
        }
        adj = prev;
    }
    cost
}
