//! Closed-loop engagement: noisy sensing, filtering, receding-horizon target
//! control and switching attacker guidance, stepped until an outcome.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::engagement::{
    aspect_angles, check_outcome, check_outcome_over_step, integrate_step, relative_geometry, AspectAngles,
    AttackerAccel, ControlPair, EngagementOutcome, JointState, RelativeGeometry,
};
use crate::error::Result;
use crate::estimator::{AttackerEstimate, AttackerFilter, MeasurementVector, Vector6, BEARINGS, HEADING1, HEADING2};
use crate::guidance::{active_law, attacker_commands, GuidanceLaw};
use crate::nmpc::{MpcController, MpcDiagnostics};
use crate::scenario::ScenarioConfig;

/// Gaussian sensor noise with a fixed per-channel standard deviation.
pub struct MeasurementNoise {
    channels: [Normal<f64>; 6],
}

impl MeasurementNoise {
    pub fn new(std: [f64; 6]) -> Self {
        Self { channels: std.map(|s| Normal::new(0.0, s).expect("validated std")) }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 6] {
        std::array::from_fn(|i| self.channels[i].sample(rng))
    }

    /// Truth measurement plus noise, bearings re-wrapped.
    pub fn corrupt(&self, z: &MeasurementVector, rng: &mut ChaCha8Rng) -> MeasurementVector {
        let mut out = z.0 + Vector6::from(self.sample(rng));
        for i in BEARINGS {
            out[i] = wrap(out[i]);
        }
        MeasurementVector(out)
    }
}

/// One control interval `[t, t + dt)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub truth: JointState,
    pub measurement: [f64; 6],
    pub estimate: [f64; 8],
    pub sigma: [f64; 8],
    /// Truth attacker accelerations over the interval.
    pub attacker_accel: [f64; 2],
    pub control: ControlPair,
    pub geometry: RelativeGeometry,
    pub aspects: AspectAngles,
    pub law: GuidanceLaw,
    pub solver: MpcDiagnostics,
    /// False when the filter skipped its update this step.
    pub filter_updated: bool,
}

impl StepRecord {
    /// Estimate minus truth, headings wrapped.
    pub fn estimation_error(&self) -> [f64; 8] {
        let s = &self.truth;
        let truth = [
            s.attacker1.x,
            s.attacker1.y,
            s.attacker2.x,
            s.attacker2.y,
            s.attacker1.heading,
            s.attacker2.heading,
            self.attacker_accel[0],
            self.attacker_accel[1],
        ];
        std::array::from_fn(|i| {
            let e = self.estimate[i] - truth[i];
            if i == HEADING1 || i == HEADING2 {
                wrap(e)
            } else {
                e
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub name: String,
    pub dt: f64,
    pub records: Vec<StepRecord>,
    /// Truth at the end of the last interval.
    pub final_state: JointState,
    pub outcome: EngagementOutcome,
    /// Set when the run stopped at the duration limit.
    pub timed_out: bool,
    pub solver_stalls: usize,
    pub skipped_updates: usize,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Truth states at every grid time, including the final one.
    pub fn states(&self) -> impl Iterator<Item = &JointState> {
        self.records.iter().map(|r| &r.truth).chain(std::iter::once(&self.final_state))
    }

    pub fn min_attacker_range(&self) -> f64 {
        self.states()
            .map(|s| (s.attacker1.x - s.attacker2.x).hypot(s.attacker1.y - s.attacker2.y))
            .fold(f64::INFINITY, f64::min)
    }
}

fn perturb(s: &mut JointState, q: &[f64; 8], dt: f64, rng: &mut ChaCha8Rng) {
    let mut draw = |var: f64| Normal::new(0.0, (var * dt).sqrt()).expect("non-negative").sample(rng);
    s.attacker1.x += draw(q[0]);
    s.attacker1.y += draw(q[1]);
    s.attacker2.x += draw(q[2]);
    s.attacker2.y += draw(q[3]);
    s.attacker1.heading = wrap(s.attacker1.heading + draw(q[4]));
    s.attacker2.heading = wrap(s.attacker2.heading + draw(q[5]));
}

/// Runs one engagement to its outcome or to `max_duration`.
///
/// Deterministic for a given configuration (including the seed). Solver
/// stalls and skipped filter updates are counted, not raised.
pub fn run_closed_loop(cfg: &ScenarioConfig) -> Result<SimulationTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = MeasurementNoise::new(cfg.measurement_std());
    let mut controller = MpcController::new(cfg.mpc);
    let mut s = cfg.agents.initial_state();
    let speeds = [s.attacker1.speed, s.attacker2.speed];
    let steps = (cfg.max_duration / cfg.dt).round() as usize;

    let mut trace = SimulationTrace {
        name: cfg.name.clone(),
        dt: cfg.dt,
        records: Vec::with_capacity(steps),
        final_state: s,
        outcome: check_outcome(&s, &cfg.outcome),
        timed_out: false,
        solver_stalls: 0,
        skipped_updates: 0,
    };
    if trace.outcome.is_terminal() {
        return Ok(trace);
    }

    let mut filter: Option<AttackerFilter> = None;
    for k in 0..steps {
        let z = noise.corrupt(&MeasurementVector::from_truth(&s)?, &mut rng);
        let (t1, t2) = (s.target1.position(), s.target2.position());
        let filter_updated = match filter.as_mut() {
            None => {
                filter = Some(AttackerFilter::initialize(&z, t1, t2, speeds, &cfg.filter));
                true
            }
            Some(f) => {
                f.predict(cfg.dt);
                f.update(&z, t1, t2).is_ok()
            }
        };
        if !filter_updated {
            trace.skipped_updates += 1;
        }
        let f = filter.as_ref().expect("initialized above");
        let est: AttackerEstimate = f.estimate;

        let (u, diag) = controller.step(&s, &est);
        if diag.stalled {
            trace.solver_stalls += 1;
        }
        let accel: AttackerAccel = attacker_commands(&s, &cfg.guidance)?;
        let mut next = integrate_step(&s, u, accel, cfg.dt);
        // keep the grid uniform rather than accumulating rounding in t
        next.t = (k + 1) as f64 * cfg.dt;
        if cfg.noise.process_noise {
            perturb(&mut next, &cfg.filter.process_noise, cfg.dt, &mut rng);
        }

        trace.records.push(StepRecord {
            t: s.t,
            truth: s,
            measurement: z.0.into(),
            estimate: est.0.into(),
            sigma: f.sigmas().into(),
            attacker_accel: [accel.a1, accel.a2],
            control: u,
            geometry: relative_geometry(&s)?,
            aspects: aspect_angles(&s)?,
            law: active_law(s.t, &cfg.guidance),
            solver: diag,
            filter_updated,
        });

        let outcome = check_outcome_over_step(&s, &next, &cfg.outcome);
        s = next;
        trace.final_state = s;
        if outcome.is_terminal() {
            trace.outcome = outcome;
            return Ok(trace);
        }
    }
    trace.timed_out = true;
    Ok(trace)
}
