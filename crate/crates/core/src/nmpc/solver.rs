//! Projected limited-memory quasi-Newton minimizer for box-constrained
//! smooth problems.
//!
//! Variables sitting on a bound with the gradient pushing outward are frozen
//! for the iteration; the L-BFGS direction is computed on the remaining free
//! set and trial points are projected back onto the box. Every accepted step
//! satisfies an Armijo decrease, so the returned value never exceeds the
//! starting value.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop when the projected gradient 2-norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop when the largest component of an accepted step is below this.
    pub step_tolerance: f64,
    pub memory: usize,
    pub armijo: f64,
    /// Bound proximity, as a fraction of the box width, at which a variable
    /// pushed outward is held on the bound.
    pub active_margin: f64,
    pub max_backtracks: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            step_tolerance: 1e-9,
            memory: 10,
            armijo: 1e-4,
            active_margin: 1e-3,
            max_backtracks: 40,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || self.memory == 0
            || !(self.gradient_tolerance >= 0.0)
            || !(self.step_tolerance >= 0.0)
            || !(self.armijo > 0.0 && self.armijo < 1.0)
            || !(self.active_margin >= 0.0)
        {
            return Err(Error::ConfigInvalid("invalid solver options".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
    /// No descent step could be found; the best point so far is returned.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub projected_gradient: f64,
    pub status: SolverStatus,
}

/// Component-wise bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Box {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Box {
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self { lower: vec![lower; n], upper: vec![upper; n] }
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Whether component `i` is held on a bound by the gradient.
    fn pinned(&self, i: usize, x: f64, g: f64) -> bool {
        (x <= self.lower[i] && g > 0.0) || (x >= self.upper[i] && g < 0.0)
    }

    /// Gradient with pinned components zeroed.
    pub fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (&xi, &gi))| if self.pinned(i, xi, gi) { 0.0 } else { gi })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// L-BFGS two-loop recursion applied to `q` (already masked).
fn two_loop(memory: &VecDeque<Pair>, q: &mut [f64], initial_scale: f64) {
    let mut alphas = Vec::with_capacity(memory.len());
    for p in memory.iter().rev() {
        let a = p.rho * dot(&p.s, q);
        q.iter_mut().zip(&p.y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let gamma = memory
        .back()
        .map(|p| dot(&p.s, &p.y) / dot(&p.y, &p.y))
        .unwrap_or(initial_scale);
    q.iter_mut().for_each(|qi| *qi *= gamma);
    for (p, a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = p.rho * dot(&p.y, q);
        q.iter_mut().zip(&p.s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
}

/// Minimizes `f` over `bounds` starting from `x0` (projected first).
///
/// `f(x, grad)` returns the objective and writes the gradient.
pub fn minimize_box<F>(f: &mut F, x0: &[f64], bounds: &Box, opts: &SolverOptions) -> SolveReport
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let initial_value = fx;
    let mut evaluations = 1;
    let width = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(l, u)| u - l)
        .fold(f64::INFINITY, f64::min);

    let report = |x: Vec<f64>, value, g: &[f64], iterations, evaluations, status| {
        let projected_gradient = norm(&bounds.projected_gradient(&x, g));
        SolveReport { x, value, initial_value, iterations, evaluations, projected_gradient, status }
    };

    if !fx.is_finite() {
        return report(x, fx, &g, 0, evaluations, SolverStatus::Stalled);
    }

    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut iterations = 0;
    let mut prev_free: Option<Vec<bool>> = None;
    let status = loop {
        let pg = bounds.projected_gradient(&x, &g);
        let pg_norm = norm(&pg);
        if pg_norm < opts.gradient_tolerance {
            break SolverStatus::GradientTolerance;
        }
        if iterations >= opts.max_iterations {
            break SolverStatus::MaxIterations;
        }
        iterations += 1;

        // variables within `eps` of a bound they are pushed against are held
        // there this iteration; the quasi-Newton model covers the rest
        let eps = pg_norm.min(opts.active_margin * width);
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let near_lo = x[i] <= bounds.lower[i] + eps && g[i] > 0.0;
                let near_hi = x[i] >= bounds.upper[i] - eps && g[i] < 0.0;
                !(near_lo || near_hi)
            })
            .collect();
        if prev_free.as_ref() != Some(&free) {
            memory.clear();
        }
        let pg_inf = pg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let initial_scale = if width.is_finite() { 0.5 * width / pg_inf } else { 1.0 / pg_inf };
        let mut d: Vec<f64> = g.iter().zip(&free).map(|(gi, fi)| if *fi { *gi } else { 0.0 }).collect();
        two_loop(&memory, &mut d, initial_scale);
        for i in 0..n {
            d[i] = if free[i] { -d[i] } else { -pg[i] * initial_scale };
        }
        if dot(&d, &g) >= 0.0 {
            memory.clear();
            d = pg.iter().map(|v| -v * initial_scale).collect();
        }
        prev_free = Some(free.clone());

        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..opts.max_backtracks {
            xn.iter_mut().zip(&x).zip(&d).for_each(|((o, xi), di)| *o = xi + t * di);
            bounds.project(&mut xn);
            let decrease: f64 = xn.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            if decrease >= 0.0 {
                // projection killed the descent component
                t *= 0.5;
                continue;
            }
            let fnew = f(&xn, &mut gn);
            evaluations += 1;
            if fnew.is_finite() && fnew <= fx + opts.armijo * decrease {
                accepted = Some(fnew);
                break;
            }
            t *= 0.5;
        }

        let Some(fnew) = accepted else {
            if memory.is_empty() {
                break SolverStatus::Stalled;
            }
            memory.clear();
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let free = prev_free.as_ref().expect("set above");
        let mask = |v: Vec<f64>| -> Vec<f64> { v.into_iter().zip(free).map(|(a, f)| if *f { a } else { 0.0 }).collect() };
        let step_inf = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let s = mask(s);
        let y = mask(gn.iter().zip(&g).map(|(a, b)| a - b).collect());
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back(Pair { rho: 1.0 / sy, s: s.clone(), y });
        }
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        fx = fnew;
        if step_inf < opts.step_tolerance {
            break SolverStatus::StepTolerance;
        }
    };
    report(x, fx, &g, iterations, evaluations, status)
}
