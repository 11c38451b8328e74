//! N oscillators with inertia and Hebbian coupling on the complete graph:
//!
//! ```text
//! dphi_i/dt = v_i
//! m dv_i/dt = -v_i + omega_i + (1/N) sum_j K_ij sin(phi_j - phi_i)
//! dK_ij/dt  = beta (alpha cos(phi_j - phi_i) - K_ij)
//! ```
//!
//! The flattened state is `[phi_0..phi_{N-1}, v_0..v_{N-1}, K_upper]`, where
//! `K_upper` lists `K_ij` for `i < j` row by row (see [`pair_index`]). Only
//! the upper triangle is integrated, so the coupling stays exactly symmetric.

use std::io::{self, Write};

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{self, Flow, IntegratorConfig, Method, Trajectory, VectorField};
use crate::scalar::{wrap_angle, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleParams<T> {
    pub n: usize,
    pub mass: T,
    pub alpha: T,
    pub beta: T,
    /// Variance of the zero-mean Gaussian frequency distribution.
    pub sigma2: T,
    pub seed: u64,
}

impl<T: Scalar> EnsembleParams<T> {
    pub fn new(n: usize, mass: T, alpha: T, sigma2: T, seed: u64) -> Result<Self> {
        let p = Self {
            n,
            mass,
            alpha,
            beta: T::one(),
            sigma2,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_beta(mut self, beta: T) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 2 {
            return bad(format!("N must be >= 2, got {}", self.n));
        }
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return bad(format!("mass must be > 0, got {}", self.mass));
        }
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return bad(format!("beta must be > 0, got {}", self.beta));
        }
        if !(self.sigma2 >= T::zero()) || !self.sigma2.is_finite() {
            return bad(format!("sigma2 must be >= 0, got {}", self.sigma2));
        }
        Ok(())
    }

    /// `2N + N(N-1)/2`.
    pub fn state_dim(&self) -> usize {
        state_dim(self.n)
    }
}

pub fn state_dim(n: usize) -> usize {
    2 * n + n * (n - 1) / 2
}

/// Position of `K_ij` (`i < j`) within the upper-triangle block.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// `n` draws from `Normal(0, sigma2)`.
///
/// ChaCha8 seeded from `seed`, standard normals by the Ziggurat method
/// (`rand_distr::StandardNormal`) in `f64`, scaled by `sqrt(sigma2)`.
pub fn draw_frequencies<T: Scalar>(n: usize, sigma2: T, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = sigma2.as_f64().sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(sd * z)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleState<T> {
    /// Unwrapped phases.
    pub phases: Vec<T>,
    pub velocities: Vec<T>,
    /// `K_ij` for `i < j`, row by row.
    pub coupling_upper: Vec<T>,
}

impl<T: Scalar> EnsembleState<T> {
    /// Phases `2 pi i / N`, velocities 0, all couplings 1.
    pub fn initial(n: usize) -> Self {
        Self {
            phases: (0..n)
                .map(|i| T::TAU() * T::from_count(i) / T::from_count(n))
                .collect(),
            velocities: vec![T::zero(); n],
            coupling_upper: vec![T::one(); n * (n - 1) / 2],
        }
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }

    pub fn from_flat(n: usize, x: &[T]) -> Result<Self> {
        if x.len() != state_dim(n) {
            return Err(Error::DimensionMismatch {
                expected: state_dim(n),
                got: x.len(),
            });
        }
        Ok(Self {
            phases: x[..n].to_vec(),
            velocities: x[n..2 * n].to_vec(),
            coupling_upper: x[2 * n..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<T> {
        let mut x = Vec::with_capacity(state_dim(self.n()));
        x.extend_from_slice(&self.phases);
        x.extend_from_slice(&self.velocities);
        x.extend_from_slice(&self.coupling_upper);
        x
    }

    pub fn principal_phases(&self) -> Vec<T> {
        self.phases.iter().map(|&p| wrap_angle(p)).collect()
    }

    /// `K_ij`; the diagonal is reported as zero.
    pub fn coupling(&self, i: usize, j: usize) -> T {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.coupling_upper[pair_index(self.n(), i, j)],
            std::cmp::Ordering::Greater => self.coupling_upper[pair_index(self.n(), j, i)],
            std::cmp::Ordering::Equal => T::zero(),
        }
    }

    /// Full symmetric matrix with zero diagonal.
    pub fn coupling_matrix(&self) -> Vec<Vec<T>> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.coupling(i, j)).collect()).collect()
    }

    pub fn max_abs_coupling(&self) -> T {
        self.coupling_upper.iter().fold(T::zero(), |m, k| m.max(k.abs()))
    }
}

/// `|mean(exp(i q phi))|`.
pub fn order_param<T: Scalar>(phases: &[T], q: u32) -> Result<T> {
    if phases.is_empty() {
        return Err(Error::Empty("phases"));
    }
    let qf = T::from_count(q as usize);
    let sum = phases
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &p| {
            let (s, c) = (qf * p).sin_cos();
            acc + Complex::new(c, s)
        });
    Ok((sum.norm() / T::from_count(phases.len())).min(T::one()))
}

/// Two-cluster order parameter, `q = 2`.
pub fn order_param_r2<T: Scalar>(phases: &[T]) -> Result<T> {
    order_param(phases, 2)
}

#[derive(Debug, Clone)]
pub struct EnsembleSystem<T> {
    params: EnsembleParams<T>,
    frequencies: Vec<T>,
}

impl<T: Scalar> EnsembleSystem<T> {
    /// Draws the intrinsic frequencies once from the params' seed.
    pub fn new(params: EnsembleParams<T>) -> Result<Self> {
        params.validate()?;
        let frequencies = draw_frequencies(params.n, params.sigma2, params.seed);
        Ok(Self { params, frequencies })
    }

    pub fn with_frequencies(params: EnsembleParams<T>, frequencies: Vec<T>) -> Result<Self> {
        params.validate()?;
        if frequencies.len() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                got: frequencies.len(),
            });
        }
        Ok(Self { params, frequencies })
    }

    pub fn params(&self) -> &EnsembleParams<T> {
        &self.params
    }

    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    pub fn derivative(&self, state: &EnsembleState<T>) -> EnsembleState<T> {
        let mut dx = vec![T::zero(); self.dim()];
        self.eval(T::zero(), &state.to_flat(), &mut dx);
        EnsembleState::from_flat(self.params.n, &dx).expect("matching dimension")
    }
}

impl<T: Scalar> VectorField<T> for EnsembleSystem<T> {
    fn dim(&self) -> usize {
        self.params.state_dim()
    }

    fn eval(&self, _t: T, x: &[T], dx: &mut [T]) {
        let n = self.params.n;
        let (phases, rest) = x.split_at(n);
        let (vel, coupling) = rest.split_at(n);
        let (dphi, drest) = dx.split_at_mut(n);
        let (dv, dk) = drest.split_at_mut(n);

        let trig: Vec<(T, T)> = phases.iter().map(|p| p.sin_cos()).collect();
        dphi.copy_from_slice(vel);
        dv.iter_mut().for_each(|d| *d = T::zero());

        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let mut idx = 0;
        for i in 0..n {
            let (si, ci) = trig[i];
            for j in (i + 1)..n {
                let (sj, cj) = trig[j];
                // sin(phi_j - phi_i), cos(phi_j - phi_i)
                let sin_ji = sj * ci - cj * si;
                let cos_ji = cj * ci + sj * si;
                let k = coupling[idx];
                let force = k * sin_ji;
                dv[i] += force;
                dv[j] -= force;
                dk[idx] = beta * (alpha * cos_ji - k);
                idx += 1;
            }
        }
        let inv_n = T::one() / T::from_count(n);
        let inv_m = T::one() / self.params.mass;
        for i in 0..n {
            dv[i] = (-vel[i] + self.frequencies[i] + dv[i] * inv_n) * inv_m;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleRunConfig<T> {
    /// Horizon and sampling; `sample_interval` must be set.
    pub integrator: IntegratorConfig<T>,
    /// Orders `q` to record at every sample.
    pub orders: Vec<u32>,
    /// Samples at or after this time enter the coupling bound check.
    pub burn_in: T,
    /// Samples at or after this time enter the mean velocities used for clustering.
    pub velocity_window_start: T,
    pub keep_states: bool,
}

impl<T: Scalar> EnsembleRunConfig<T> {
    /// Fixed-step RK4 with `h = 0.01`, sampled every `sample_interval`.
    pub fn fixed_step(horizon: T, sample_interval: T) -> Self {
        Self::with_integrator(IntegratorConfig::rk4(T::lit(0.01), horizon).with_sample_interval(sample_interval))
    }

    /// Adaptive stepping at the default tolerances.
    pub fn adaptive(horizon: T, sample_interval: T) -> Self {
        Self::with_integrator(IntegratorConfig::adaptive(horizon).with_sample_interval(sample_interval))
    }

    fn with_integrator(integrator: IntegratorConfig<T>) -> Self {
        let horizon = integrator.horizon;
        Self {
            integrator,
            orders: vec![2],
            burn_in: T::lit(10.0).min(horizon),
            velocity_window_start: horizon * T::lit(0.75),
            keep_states: false,
        }
    }
}

/// `values[q_index][sample]` for each requested order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderParameterSeries<T> {
    pub orders: Vec<u32>,
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> OrderParameterSeries<T> {
    pub fn series(&self, q: u32) -> Option<&[T]> {
        self.orders.iter().position(|&o| o == q).map(|i| self.values[i].as_slice())
    }

    /// CSV `t,r2` (plus `r<q>` columns for any other recorded orders).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = self.orders.iter().map(|q| format!("r{q}")).collect();
        writeln!(w, "t,{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            write!(w, "{t}")?;
            for col in &self.values {
                write!(w, ",{}", col[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleRun<T> {
    pub series: OrderParameterSeries<T>,
    pub final_state: EnsembleState<T>,
    /// Largest `|K_ij|` over samples at or after the burn-in time.
    pub max_abs_coupling_after_burn_in: T,
    /// Per-oscillator mean velocity over the velocity window.
    pub mean_velocities: Vec<T>,
    #[serde(skip)]
    pub states: Option<Trajectory<T>>,
}

impl<T: Scalar> EnsembleRun<T> {
    /// Largest minus smallest of order `q` over samples with `t >= t_from`.
    pub fn amplitude(&self, q: u32, t_from: T) -> Option<T> {
        let s = self.series(q)?;
        let mut it = self
            .series
            .times
            .iter()
            .zip(s)
            .filter(|(t, _)| **t >= t_from)
            .map(|(_, v)| *v);
        let first = it.next()?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Some(hi - lo)
    }

    fn series(&self, q: u32) -> Option<&[T]> {
        self.series.series(q)
    }
}

/// Integrates from [`EnsembleState::initial`] and records order parameters at
/// every sample (including `t = 0`).
pub fn simulate<T: Scalar>(system: &EnsembleSystem<T>, cfg: &EnsembleRunConfig<T>) -> Result<EnsembleRun<T>> {
    simulate_from(system, &EnsembleState::initial(system.params.n), cfg)
}

pub fn simulate_from<T: Scalar>(
    system: &EnsembleSystem<T>,
    initial: &EnsembleState<T>,
    cfg: &EnsembleRunConfig<T>,
) -> Result<EnsembleRun<T>> {
    if cfg.integrator.sample_interval.is_none() {
        return Err(Error::InvalidConfig("ensemble runs need a sample interval".into()));
    }
    if cfg.orders.is_empty() {
        return Err(Error::InvalidConfig("at least one order parameter must be requested".into()));
    }
    let n = system.params.n;
    let x0 = initial.to_flat();
    let mut series = OrderParameterSeries {
        orders: cfg.orders.clone(),
        times: Vec::new(),
        values: vec![Vec::new(); cfg.orders.len()],
    };
    let mut states = cfg.keep_states.then(|| Trajectory::new(x0.len()));
    let mut max_k = T::zero();
    let mut vel_sum = vec![T::zero(); n];
    let mut vel_count = 0usize;

    let mut record = |t: T, x: &[T]| {
        series.times.push(t);
        for (col, &q) in series.values.iter_mut().zip(&cfg.orders) {
            col.push(order_param(&x[..n], q).expect("nonempty"));
        }
        if t >= cfg.burn_in {
            max_k = x[2 * n..].iter().fold(max_k, |m, k| m.max(k.abs()));
        }
        if t >= cfg.velocity_window_start {
            vel_sum.iter_mut().zip(&x[n..2 * n]).for_each(|(s, v)| *s += *v);
            vel_count += 1;
        }
        if let Some(tr) = states.as_mut() {
            tr.push(t, x);
        }
    };
    if x0.len() == system.dim() {
        record(T::zero(), &x0);
    }
    let summary = ode::integrate_observed(system, &x0, &cfg.integrator, |step| {
        if step.sample {
            record(step.t, step.x);
        }
        Flow::Continue
    })?;

    let mean_velocities = if vel_count > 0 {
        let inv = T::one() / T::from_count(vel_count);
        vel_sum.into_iter().map(|s| s * inv).collect()
    } else {
        summary.final_state[n..2 * n].to_vec()
    };
    Ok(EnsembleRun {
        series,
        final_state: EnsembleState::from_flat(n, &summary.final_state)?,
        max_abs_coupling_after_burn_in: max_k,
        mean_velocities,
        states,
    })
}

/// Whether a run was integrated with a fixed step, which makes it bit-reproducible.
pub fn is_fixed_step<T>(cfg: &EnsembleRunConfig<T>) -> bool {
    cfg.integrator.method == Method::Rk4
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster<T> {
    pub members: Vec<usize>,
    pub mean_velocity: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport<T> {
    /// Largest first; equal sizes ordered by mean velocity.
    pub clusters: Vec<Cluster<T>>,
}

/// Groups oscillators by (time-averaged) velocity: sorted values are split
/// wherever the gap between neighbours exceeds `velocity_tol`.
pub fn detect_clusters<T: Scalar>(velocities: &[T], velocity_tol: T) -> ClusterReport<T> {
    let mut order: Vec<usize> = (0..velocities.len()).collect();
    order.sort_by(|&a, &b| {
        velocities[a]
            .partial_cmp(&velocities[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut clusters: Vec<Cluster<T>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut flush = |members: &mut Vec<usize>| {
        if members.is_empty() {
            return;
        }
        let mean = members.iter().map(|&i| velocities[i]).sum::<T>() / T::from_count(members.len());
        let mut m = std::mem::take(members);
        m.sort_unstable();
        clusters.push(Cluster {
            members: m,
            mean_velocity: mean,
        });
    };
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && velocities[i] - velocities[order[pos - 1]] > velocity_tol {
            flush(&mut current);
        }
        current.push(i);
    }
    flush(&mut current);
    clusters.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then(a.mean_velocity.partial_cmp(&b.mean_velocity).unwrap_or(std::cmp::Ordering::Equal))
    });
    ClusterReport { clusters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params(n: usize) -> EnsembleParams<f64> {
        EnsembleParams::new(n, 1.0, 1.0, 0.1, 7).unwrap()
    }

    #[test]
    fn layout() {
        assert_eq!(state_dim(50), 1325);
        let n = 5;
        let mut seen = vec![false; n * (n - 1) / 2];
        for i in 0..n {
            for j in (i + 1)..n {
                let k = pair_index(n, i, j);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        assert_eq!(pair_index(4, 0, 1), 0);
        assert_eq!(pair_index(4, 1, 2), 3);
        assert_eq!(pair_index(4, 2, 3), 5);
    }

    #[test]
    fn invalid_params() {
        assert!(EnsembleParams::new(1, 1.0, 1.0, 0.1, 0).is_err());
        assert!(EnsembleParams::new(3, 0.0, 1.0, 0.1, 0).is_err());
        assert!(EnsembleParams::new(3, 1.0, 0.0, 0.1, 0).is_err());
        assert!(EnsembleParams::new(3, 1.0, 1.0, -0.1, 0).is_err());
        assert!(params(3).with_beta(0.0).is_err());
    }

    #[test]
    fn initial_state() {
        let s = EnsembleState::<f64>::initial(4);
        let expected = [0.0, FRAC_PI_2, PI, 1.5 * PI];
        for (a, b) in s.phases.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(s.velocities.iter().all(|v| *v == 0.0));
        assert!(s.coupling_upper.iter().all(|k| *k == 1.0));
    }

    #[test]
    fn frequency_draws() {
        assert!(draw_frequencies(10, 0.0, 3).iter().all(|w: &f64| *w == 0.0));
        let a: Vec<f64> = draw_frequencies(10, 0.1, 3);
        assert_eq!(a, draw_frequencies(10, 0.1, 3));
        assert_ne!(a, draw_frequencies(10, 0.1, 4));
        let big: Vec<f64> = draw_frequencies(20000, 4.0, 1);
        let mean = big.iter().sum::<f64>() / big.len() as f64;
        let var = big.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / big.len() as f64;
        assert!(mean.abs() < 0.05);
        assert!((var - 4.0).abs() < 0.15);
    }

    #[test]
    fn order_parameter_identities() {
        assert!((order_param_r2(&[0.7_f64; 10]).unwrap() - 1.0).abs() < 1e-15);
        let mut anti = vec![0.0; 25];
        anti.extend(vec![PI; 25]);
        assert!((order_param_r2(&anti).unwrap() - 1.0).abs() < 1e-15);
        let even = EnsembleState::<f64>::initial(50).phases;
        assert!(order_param_r2(&even).unwrap() < 1e-12);
        assert!(order_param(&even, 1).unwrap() < 1e-12);
        assert!(order_param_r2::<f64>(&[]).is_err());
    }

    #[test]
    fn synchronized_fixed_point() {
        let p = EnsembleParams::new(4, 1.0, 2.5, 0.0, 0).unwrap();
        let sys = EnsembleSystem::new(p).unwrap();
        let s = EnsembleState {
            phases: vec![0.3; 4],
            velocities: vec![0.0; 4],
            coupling_upper: vec![2.5; 6],
        };
        let d = sys.derivative(&s);
        assert!(d.to_flat().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn coupling_term_by_hand() {
        let p = EnsembleParams::new(3, 1.0, 1.0, 0.0, 0).unwrap();
        let sys = EnsembleSystem::new(p).unwrap();
        let s = EnsembleState {
            phases: vec![0.0, FRAC_PI_2, PI],
            velocities: vec![0.0; 3],
            coupling_upper: vec![1.0; 3],
        };
        let d = sys.derivative(&s);
        assert!((d.velocities[0] - 1.0 / 3.0).abs() < 1e-15);
        // dK_01 = cos(pi/2) - 1, dK_02 = cos(pi) - 1
        assert!((d.coupling_upper[0] + 1.0).abs() < 1e-15);
        assert!((d.coupling_upper[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn coupling_matrix_symmetric() {
        let sys = EnsembleSystem::new(params(6)).unwrap();
        let run = simulate(&sys, &EnsembleRunConfig::fixed_step(2.0, 0.5)).unwrap();
        let k = run.final_state.coupling_matrix();
        for i in 0..6 {
            assert_eq!(k[i][i], 0.0);
            for j in 0..6 {
                assert_eq!(k[i][j], k[j][i]);
            }
        }
    }

    #[test]
    fn run_records_every_sample() {
        let sys = EnsembleSystem::new(params(5)).unwrap();
        let mut cfg = EnsembleRunConfig::fixed_step(1.0, 0.25);
        cfg.orders = vec![2, 1];
        cfg.keep_states = true;
        let run = simulate(&sys, &cfg).unwrap();
        assert_eq!(run.series.times.len(), 5);
        assert_eq!(run.series.values.len(), 2);
        assert_eq!(run.states.as_ref().unwrap().len(), 5);
        assert!(run.series.values.iter().flatten().all(|r| (0.0..=1.0).contains(r)));
        let mut buf = Vec::new();
        run.series.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,r2,r1\n"));
    }

    #[test]
    fn cluster_examples() {
        let one = detect_clusters(&[1.0, 1.0, 1.0], 0.1);
        assert_eq!(one.clusters.len(), 1);
        assert_eq!(one.clusters[0].members, vec![0, 1, 2]);
        let two = detect_clusters(&[0.0, 5.0, 0.0, 5.0, 9.0], 0.1);
        assert_eq!(two.clusters.len(), 3);
        assert_eq!(two.clusters[0].members, vec![0, 2]);
        assert_eq!(two.clusters[1].members, vec![1, 3]);
        assert_eq!(two.clusters[2].members, vec![4]);
        assert!(detect_clusters::<f64>(&[], 0.1).clusters.is_empty());
    }
}
