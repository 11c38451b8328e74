//! Initial-value integration and section-crossing detection.
//!
//! Two explicit methods are provided: classic fixed-step RK4 and the
//! Dormand–Prince 5(4) embedded pair with PI-free step control. The driver
//! [`integrate_observed`] hands every accepted step to an observer, which lets
//! callers count events or stop early without storing a trajectory;
//! [`integrate`] is the storing wrapper.
//!
//! Sampling: with `sample_interval = None` every accepted step is a sample.
//! With `Some(dt)` steps are shortened so that they land exactly on multiples
//! of `dt`, and only those points (plus the horizon) are samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Right-hand side of `dx/dt = f(t, x)`.
///
/// Implementations must be deterministic and write exactly `dim()` entries.
pub trait VectorField<T: Scalar> {
    fn dim(&self) -> usize;
    fn eval(&self, t: T, x: &[T], dx: &mut [T]);
}

impl<T: Scalar, V: VectorField<T> + ?Sized> VectorField<T> for &V {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: T, x: &[T], dx: &mut [T]) {
        (**self).eval(t, x, dx)
    }
}

/// Adapts a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Scalar, F: Fn(T, &[T], &mut [T])> VectorField<T> for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: T, x: &[T], dx: &mut [T]) {
        (self.f)(t, x, dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fixed-step-rk4")]
    Rk4,
    #[serde(rename = "adaptive-embedded-rk")]
    DormandPrince45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig<T> {
    pub method: Method,
    /// Fixed step for RK4, initial step for the adaptive method.
    pub step: T,
    pub abs_tol: T,
    pub rel_tol: T,
    /// Upper bound on attempted steps, rejected ones included.
    pub max_steps: usize,
    pub horizon: T,
    pub sample_interval: Option<T>,
}

impl<T: Scalar> IntegratorConfig<T> {
    /// Dormand–Prince with `abs_tol = rel_tol = 1e-9`.
    pub fn adaptive(horizon: T) -> Self {
        Self {
            method: Method::DormandPrince45,
            step: T::lit(1e-2),
            abs_tol: T::lit(1e-9),
            rel_tol: T::lit(1e-9),
            max_steps: 50_000_000,
            horizon,
            sample_interval: None,
        }
    }

    pub fn rk4(step: T, horizon: T) -> Self {
        Self {
            method: Method::Rk4,
            step,
            abs_tol: T::lit(1e-9),
            rel_tol: T::lit(1e-9),
            max_steps: 50_000_000,
            horizon,
            sample_interval: None,
        }
    }

    pub fn with_tolerances(mut self, abs_tol: T, rel_tol: T) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_sample_interval(mut self, dt: T) -> Self {
        self.sample_interval = Some(dt);
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn with_horizon(mut self, horizon: T) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.step) {
            return Err(Error::InvalidConfig(format!("step must be > 0, got {}", self.step)));
        }
        if !pos(self.abs_tol) || !pos(self.rel_tol) {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        if !pos(self.horizon) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if let Some(dt) = self.sample_interval {
            if !pos(dt) {
                return Err(Error::InvalidConfig("sample_interval must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Sampled solution. States are stored contiguously, `dim` values per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dim: usize,
    times: Vec<T>,
    data: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            times: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Panics if `state.len() != dim` or `t` does not increase.
    pub fn push(&mut self, t: T, state: &[T]) {
        assert_eq!(state.len(), self.dim, "state dimension");
        if let Some(&last) = self.times.last() {
            assert!(t > last, "trajectory times must strictly increase");
        }
        self.times.push(t);
        self.data.extend_from_slice(state);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn time(&self, i: usize) -> T {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> Option<&[T]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &[T])> + '_ {
        self.times.iter().copied().zip(self.data.chunks_exact(self.dim))
    }

    /// Values of one state component over time.
    pub fn component(&self, j: usize) -> Vec<T> {
        self.data.chunks_exact(self.dim).map(|s| s[j]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// One accepted step, as seen by an observer.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo<'a, T> {
    pub t_prev: T,
    pub x_prev: &'a [T],
    pub t: T,
    pub x: &'a [T],
    /// The step ends on a sample time (always true without a sample interval).
    pub sample: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub t_end: T,
    pub final_state: Vec<T>,
    pub accepted: usize,
    pub rejected: usize,
    pub stopped_early: bool,
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<T> {
    k: Vec<Vec<T>>,
    stage: Vec<T>,
    a: [[T; 6]; 7],
    c: [T; 7],
    e: [T; 7],
    fsal: bool,
}

impl<T: Scalar> Stepper<T> {
    fn new(dim: usize) -> Self {
        Self {
            k: vec![vec![T::zero(); dim]; 7],
            stage: vec![T::zero(); dim],
            a: DP_A.map(|row| row.map(T::lit)),
            c: DP_C.map(T::lit),
            e: DP_E.map(T::lit),
            fsal: false,
        }
    }

    fn rk4<F: VectorField<T>>(&mut self, f: &F, t: T, x: &[T], h: T, out: &mut [T]) {
        let half = h / T::lit(2.0);
        let [k1, k2, k3, k4, ..] = &mut self.k[..] else {
            unreachable!()
        };
        f.eval(t, x, k1);
        for i in 0..x.len() {
            self.stage[i] = x[i] + half * k1[i];
        }
        f.eval(t + half, &self.stage, k2);
        for i in 0..x.len() {
            self.stage[i] = x[i] + half * k2[i];
        }
        f.eval(t + half, &self.stage, k3);
        for i in 0..x.len() {
            self.stage[i] = x[i] + h * k3[i];
        }
        f.eval(t + h, &self.stage, k4);
        let sixth = h / T::lit(6.0);
        for i in 0..x.len() {
            out[i] = x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
    }

    /// Fifth-order solution in `out`; returns the scaled RMS error estimate.
    fn dp45<F: VectorField<T>>(
        &mut self,
        f: &F,
        t: T,
        x: &[T],
        h: T,
        out: &mut [T],
        tol: (T, T),
    ) -> T {
        if !self.fsal {
            f.eval(t, x, &mut self.k[0]);
            self.fsal = true;
        }
        for s in 1..7 {
            for i in 0..x.len() {
                let mut acc = T::zero();
                for (j, kj) in self.k[..s].iter().enumerate() {
                    acc += self.a[s][j] * kj[i];
                }
                self.stage[i] = x[i] + h * acc;
            }
            f.eval(t + self.c[s] * h, &self.stage, &mut self.k[s]);
        }
        // stage 7 was evaluated at the fifth-order solution
        out.copy_from_slice(&self.stage);
        let (abs_tol, rel_tol) = tol;
        let mut sum = T::zero();
        for i in 0..x.len() {
            let mut err = T::zero();
            for s in 0..7 {
                err += self.e[s] * self.k[s][i];
            }
            let scale = abs_tol + rel_tol * x[i].abs().max(out[i].abs());
            let r = h * err / scale;
            sum += r * r;
        }
        (sum / T::from_count(x.len().max(1))).sqrt()
    }

    /// After an accepted Dormand–Prince step the last stage is the next first stage.
    fn accept_fsal(&mut self) {
        self.k.swap(0, 6);
    }
}

fn all_finite<T: Scalar>(x: &[T]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Integrates over `[0, horizon]`, calling `observer` after every accepted step.
pub fn integrate_observed<T, F, O>(
    field: &F,
    x0: &[T],
    cfg: &IntegratorConfig<T>,
    mut observer: O,
) -> Result<RunSummary<T>>
where
    T: Scalar,
    F: VectorField<T> + ?Sized,
    O: FnMut(&StepInfo<'_, T>) -> Flow,
{
    cfg.validate()?;
    let dim = field.dim();
    if x0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x0.len(),
        });
    }
    if !all_finite(x0) {
        return Err(Error::NonFinite { t: 0.0 });
    }

    let mut stepper = Stepper::new(dim);
    let mut x = x0.to_vec();
    let mut xn = vec![T::zero(); dim];
    let mut t = T::zero();
    let horizon = cfg.horizon;
    let mut sample_index = 1usize;
    let mut h = cfg.step.min(horizon);
    let mut attempts = 0usize;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let sliver = T::lit(1e-9);
    let safety = T::lit(0.9);
    let (shrink, grow) = (T::lit(0.2), T::lit(5.0));
    let order_exp = T::lit(-0.2);

    while t < horizon {
        let next_sample = cfg
            .sample_interval
            .map(|dt| dt * T::from_count(sample_index))
            .filter(|&s| s < horizon);
        let limit = next_sample.unwrap_or(horizon);
        let remaining = limit - t;
        let clamped = h >= remaining * (T::one() - sliver) || remaining - h < sliver * h;
        let h_try = if clamped { remaining } else { h };

        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(Error::StepLimit {
                max_steps: cfg.max_steps,
                t: t.as_f64(),
            });
        }

        match cfg.method {
            Method::Rk4 => {
                stepper.rk4(&field, t, &x, h_try, &mut xn);
                if !all_finite(&xn) {
                    return Err(Error::NonFinite { t: t.as_f64() });
                }
            }
            Method::DormandPrince45 => {
                let err = stepper.dp45(&field, t, &x, h_try, &mut xn, (cfg.abs_tol, cfg.rel_tol));
                if !err.is_finite() || err > T::one() {
                    let factor = if err.is_finite() {
                        (safety * err.powf(order_exp)).max(shrink).min(T::one())
                    } else {
                        shrink
                    };
                    h = h_try * factor;
                    rejected += 1;
                    if h <= T::epsilon() * T::lit(16.0) * t.abs().max(T::one()) {
                        return Err(Error::StepSizeUnderflow { t: t.as_f64() });
                    }
                    continue;
                }
                if !all_finite(&xn) {
                    return Err(Error::NonFinite { t: t.as_f64() });
                }
                let factor = if err == T::zero() {
                    grow
                } else {
                    (safety * err.powf(order_exp)).max(shrink).min(grow)
                };
                let proposal = h_try * factor;
                h = if clamped { h.max(proposal) } else { proposal };
                stepper.accept_fsal();
            }
        }

        let t_new = if clamped { limit } else { t + h_try };
        if t_new <= t {
            return Err(Error::StepSizeUnderflow { t: t.as_f64() });
        }
        let on_sample = match (cfg.sample_interval, next_sample) {
            (None, _) => true,
            (Some(_), Some(s)) if clamped && limit == s => {
                sample_index += 1;
                true
            }
            (Some(_), _) => t_new >= horizon,
        };
        accepted += 1;
        let flow = observer(&StepInfo {
            t_prev: t,
            x_prev: &x,
            t: t_new,
            x: &xn,
            sample: on_sample,
        });
        std::mem::swap(&mut x, &mut xn);
        t = t_new;
        if flow == Flow::Stop {
            return Ok(RunSummary {
                t_end: t,
                final_state: x,
                accepted,
                rejected,
                stopped_early: true,
            });
        }
    }

    Ok(RunSummary {
        t_end: t,
        final_state: x,
        accepted,
        rejected,
        stopped_early: false,
    })
}

/// Integrates and stores `x0` plus every sample.
pub fn integrate<T, F>(field: &F, x0: &[T], cfg: &IntegratorConfig<T>) -> Result<Trajectory<T>>
where
    T: Scalar,
    F: VectorField<T> + ?Sized,
{
    let mut traj = Trajectory::new(field.dim());
    if x0.len() == field.dim() {
        traj.push(T::zero(), x0);
    }
    integrate_observed(field, x0, cfg, |step| {
        if step.sample {
            traj.push(step.t, step.x);
        }
        Flow::Continue
    })?;
    Ok(traj)
}

/// Single step of `method` without error control; used for event refinement.
fn single_step<T: Scalar, F: VectorField<T> + ?Sized>(
    stepper: &mut Stepper<T>,
    method: Method,
    field: &F,
    t: T,
    x: &[T],
    h: T,
    out: &mut [T],
) {
    match method {
        Method::Rk4 => stepper.rk4(&field, t, x, h, out),
        Method::DormandPrince45 => {
            stepper.fsal = false;
            stepper.dp45(&field, t, x, h, out, (T::one(), T::one()));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingEvent<T> {
    pub time: T,
    pub state: Vec<T>,
    pub direction: Direction,
}

/// Tracks sign changes of a scalar sequence. Zeros are skipped, so a value
/// that touches zero and returns to the same side is not a crossing.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignChangeCounter {
    last_positive: Option<bool>,
    count: usize,
}

impl SignChangeCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds the next value; returns the direction if the sign flipped.
    pub fn observe<T: Scalar>(&mut self, value: T) -> Option<Direction> {
        if value == T::zero() || value.is_nan() {
            return None;
        }
        let positive = value > T::zero();
        let flipped = match self.last_positive {
            Some(prev) if prev != positive => Some(if positive {
                Direction::Up
            } else {
                Direction::Down
            }),
            _ => None,
        };
        self.last_positive = Some(positive);
        if flipped.is_some() {
            self.count += 1;
        }
        flipped
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Bisects `g` on `[ta, tb]` where `g(ta)` has sign `positive_at_a`.
fn bisect<T: Scalar>(mut ta: T, mut tb: T, positive_at_a: bool, tol: T, mut g: impl FnMut(T) -> T) -> T {
    for _ in 0..200 {
        if tb - ta <= tol {
            break;
        }
        let mid = ta + (tb - ta) / T::lit(2.0);
        if mid <= ta || mid >= tb {
            break;
        }
        let gm = g(mid);
        if gm == T::zero() {
            return mid;
        }
        if (gm > T::zero()) == positive_at_a {
            ta = mid;
        } else {
            tb = mid;
        }
    }
    ta + (tb - ta) / T::lit(2.0)
}

fn lerp_state<T: Scalar>(xa: &[T], xb: &[T], w: T, out: &mut [T]) {
    for i in 0..xa.len() {
        out[i] = xa[i] + w * (xb[i] - xa[i]);
    }
}

/// Crossings of `event` along a stored trajectory. The state between
/// samples is linearly interpolated and the event time is bisected to
/// within `refine_tol`.
pub fn detect_crossings<T, E>(traj: &Trajectory<T>, event: E, refine_tol: T) -> Vec<CrossingEvent<T>>
where
    T: Scalar,
    E: Fn(&[T]) -> T,
{
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    let mut buf = vec![T::zero(); traj.dim()];
    for i in 0..traj.len() {
        let g = event(traj.state(i));
        if g == T::zero() || g.is_nan() {
            continue;
        }
        let positive = g > T::zero();
        if let Some((j, prev)) = last {
            if prev != positive {
                let (ta, tb) = (traj.time(j), traj.time(i));
                let (xa, xb) = (traj.state(j), traj.state(i));
                let span = tb - ta;
                let time = bisect(ta, tb, prev, refine_tol, |tm| {
                    lerp_state(xa, xb, (tm - ta) / span, &mut buf);
                    event(&buf)
                });
                lerp_state(xa, xb, (time - ta) / span, &mut buf);
                out.push(CrossingEvent {
                    time,
                    state: buf.clone(),
                    direction: if positive { Direction::Up } else { Direction::Down },
                });
            }
        }
        last = Some((i, positive));
    }
    out
}

/// Integrates and locates crossings of `event` on the fly. Each bracketing
/// step is re-integrated from its start with shortened steps of the same
/// method, and the event time is bisected to within `refine_tol`.
pub fn integrate_with_crossings<T, F, E>(
    field: &F,
    x0: &[T],
    cfg: &IntegratorConfig<T>,
    event: E,
    refine_tol: T,
) -> Result<(Trajectory<T>, Vec<CrossingEvent<T>>)>
where
    T: Scalar,
    F: VectorField<T> + ?Sized,
    E: Fn(&[T]) -> T,
{
    let dim = field.dim();
    let mut traj = Trajectory::new(dim);
    if x0.len() == dim {
        traj.push(T::zero(), x0);
    }
    let mut events = Vec::new();
    let mut refiner = Stepper::new(dim);
    let mut buf = vec![T::zero(); dim];
    let g0 = if x0.len() == dim { event(x0) } else { T::zero() };
    let mut last_positive = (g0 != T::zero() && !g0.is_nan()).then_some(g0 > T::zero());

    integrate_observed(field, x0, cfg, |step| {
        if step.sample {
            traj.push(step.t, step.x);
        }
        let g_prev = event(step.x_prev);
        let g = event(step.x);
        if g == T::zero() || g.is_nan() {
            return Flow::Continue;
        }
        let positive = g > T::zero();
        if let Some(prev) = last_positive {
            if prev != positive {
                let (time, state) = if g_prev == T::zero() {
                    // sign change hidden behind an exact zero at the step start
                    (step.t_prev, step.x_prev.to_vec())
                } else {
                    let t0 = step.t_prev;
                    let time = bisect(t0, step.t, prev, refine_tol, |tm| {
                        single_step(&mut refiner, cfg.method, field, t0, step.x_prev, tm - t0, &mut buf);
                        event(&buf)
                    });
                    single_step(&mut refiner, cfg.method, field, t0, step.x_prev, time - t0, &mut buf);
                    (time, buf.clone())
                };
                events.push(CrossingEvent {
                    time,
                    state,
                    direction: if positive { Direction::Up } else { Direction::Down },
                });
            }
        }
        last_positive = Some(positive);
        Flow::Continue
    })?;
    Ok((traj, events))
}
