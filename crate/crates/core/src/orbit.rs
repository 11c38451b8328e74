//! First-harmonic approximation of the rotating solution that exists when
//! `alpha < 2 omega` (unit mass only).
//!
//! The phase advances at a constant rate `zeta`, the unique real root of
//! `2x^3 - 2 omega x^2 + (alpha + 2) x - 2 omega`, and
//!
//! ```text
//! phi(t)   = zeta t + phi0
//! gamma(t) = zeta + c cos 2phi + d sin 2phi
//! k(t)     = a cos phi + b sin phi
//! ```

use serde::Serialize;

use crate::cubic::{Cubic, CubicRoots};
use crate::error::{Error, Result};
use crate::ode::{self, IntegratorConfig};
use crate::pair::{PairParams, PairState, PairSystem};
use crate::scalar::{wrap_angle, Scalar};

/// `2x^3 - 2 omega x^2 + (alpha + 2) x - 2 omega`.
pub fn zeta_cubic<T: Scalar>(p: &PairParams<T>) -> Cubic<T> {
    let two = T::lit(2.0);
    Cubic::new(two, -two * p.omega(), p.alpha() + two, -two * p.omega())
}

fn require_unit_mass<T: Scalar>(p: &PairParams<T>) -> Result<()> {
    if p.mass() == T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "the periodic approximation is derived for m = 1, got m = {}",
            p.mass()
        )))
    }
}

/// Unique real root of [`zeta_cubic`]. Fails rather than picking one if the
/// cubic has three real roots.
pub fn solve_zeta<T: Scalar>(p: &PairParams<T>) -> Result<T> {
    require_unit_mass(p)?;
    match zeta_cubic(p).roots() {
        CubicRoots::OneReal { real, .. } => Ok(real),
        CubicRoots::Real(r) => {
            // a triple root is still a single real value
            if r[0] == r[2] {
                Ok(r[0])
            } else {
                Err(Error::MultipleRealRoots(3))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicApproximation<T> {
    pub zeta: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub phi0: T,
}

impl<T: Scalar> PeriodicApproximation<T> {
    pub fn new(p: &PairParams<T>, phi0: T) -> Result<Self> {
        let zeta = solve_zeta(p)?;
        Ok(Self::from_zeta(zeta, p.alpha(), phi0))
    }

    fn from_zeta(zeta: T, alpha: T, phi0: T) -> Self {
        let one = T::one();
        let two = T::lit(2.0);
        let z2 = zeta * zeta;
        let q1 = z2 + one;
        let q4 = T::lit(4.0) * z2 + one;
        Self {
            zeta,
            a: alpha / q1,
            b: alpha * zeta / q1,
            c: T::lit(3.0) * zeta * alpha / (two * q1 * q4),
            d: (two * z2 - one) * alpha / (two * q1 * q4),
            phi0,
        }
    }

    /// `(gamma, k)` on the approximate orbit at phase `phi`.
    pub fn gamma_k_at_phase(&self, phi: T) -> (T, T) {
        let (s, c) = phi.sin_cos();
        let (s2, c2) = (phi + phi).sin_cos();
        (self.zeta + self.c * c2 + self.d * s2, self.a * c + self.b * s)
    }

    pub fn state_at(&self, t: T) -> PairState<T> {
        let phi = self.zeta * t + self.phi0;
        let (gamma, k) = self.gamma_k_at_phase(phi);
        PairState::from_lifted(phi, gamma, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproximationError<T> {
    pub rms_gamma_k: T,
    pub sup_gamma_k: T,
}

/// How the simulated attractor is produced for [`approximation_error`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitErrorConfig<T> {
    pub integrator: IntegratorConfig<T>,
    /// Samples before this time are discarded.
    pub transient: T,
    pub initial: [T; 3],
    pub n_bins: usize,
    /// Minimum number of full turns after the transient for the run to count as rotating.
    pub min_turns: usize,
}

impl<T: Scalar> Default for OrbitErrorConfig<T> {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::adaptive(T::lit(300.0)).with_sample_interval(T::lit(0.01)),
            transient: T::lit(100.0),
            initial: [T::zero(); 3],
            n_bins: 256,
            min_turns: 3,
        }
    }
}

/// One phase bin of the overlay: bin-mean simulated values and the
/// approximation at the bin-mean phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlayRow<T> {
    pub phi: T,
    pub gamma_sim: T,
    pub k_sim: T,
    pub gamma_approx: T,
    pub k_approx: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitComparison<T> {
    pub approximation: PeriodicApproximation<T>,
    pub error: ApproximationError<T>,
    /// Half the peak-to-peak range of the simulated `k` after the transient.
    pub k_amplitude: T,
    /// Least-squares slope of the lifted phase against time after the transient.
    pub phase_slope: T,
    pub overlay: Vec<OverlayRow<T>>,
}

/// Compares states against the approximation, phase by phase.
///
/// Each state is paired with the approximation at its own principal phase;
/// the `(gamma, k)` differences are averaged within `n_bins` equal phase bins
/// and the rms and sup are taken over the occupied bins.
pub fn compare_states<T: Scalar>(
    appx: &PeriodicApproximation<T>,
    states: impl IntoIterator<Item = PairState<T>>,
    n_bins: usize,
) -> Result<(ApproximationError<T>, Vec<OverlayRow<T>>)> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be >= 1".into()));
    }
    // per bin: count, sum phi, sum gamma, sum k, sum dgamma, sum dk
    let mut acc = vec![(0usize, [T::zero(); 5]); n_bins];
    let width = T::TAU() / T::from_count(n_bins);
    for s in states {
        let idx = (((s.phi + T::PI()) / width).floor().to_usize().unwrap_or(0)).min(n_bins - 1);
        let (g, k) = appx.gamma_k_at_phase(s.phi);
        let slot = &mut acc[idx];
        slot.0 += 1;
        for (sum, v) in slot.1.iter_mut().zip([s.phi, s.gamma, s.k, s.gamma - g, s.k - k]) {
            *sum += v;
        }
    }
    let mut sq = T::zero();
    let mut sup = T::zero();
    let mut used = 0usize;
    let mut overlay = Vec::new();
    for (n, sums) in acc {
        if n == 0 {
            continue;
        }
        let inv = T::one() / T::from_count(n);
        let [phi, gamma, k, dg, dk] = sums.map(|x| x * inv);
        let dist = dg.hypot(dk);
        sq += dist * dist;
        sup = sup.max(dist);
        used += 1;
        let (ga, ka) = appx.gamma_k_at_phase(phi);
        overlay.push(OverlayRow {
            phi,
            gamma_sim: gamma,
            k_sim: k,
            gamma_approx: ga,
            k_approx: ka,
        });
    }
    if used == 0 {
        return Err(Error::Empty("no states to compare"));
    }
    let err = ApproximationError {
        rms_gamma_k: (sq / T::from_count(used)).sqrt(),
        sup_gamma_k: sup,
    };
    Ok((err, overlay))
}

/// Simulates one trajectory and measures how far its post-transient part is
/// from the approximate orbit.
pub fn approximation_error<T: Scalar>(p: &PairParams<T>, cfg: &OrbitErrorConfig<T>) -> Result<OrbitComparison<T>> {
    require_unit_mass(p)?;
    if p.has_equilibria() {
        return Err(Error::NotRotating {
            alpha: p.alpha().as_f64(),
            omega: p.omega().as_f64(),
        });
    }
    if !(cfg.transient >= T::zero() && cfg.transient < cfg.integrator.horizon) {
        return Err(Error::InvalidConfig("transient must lie in [0, horizon)".into()));
    }
    let appx = PeriodicApproximation::new(p, T::zero())?;
    let traj = ode::integrate(&PairSystem::new(*p), &cfg.initial, &cfg.integrator)?;

    let kept: Vec<(T, PairState<T>)> = traj
        .iter()
        .filter(|(t, _)| *t >= cfg.transient)
        .map(|(t, x)| (t, PairState::from_slice(x)))
        .collect();
    if kept.len() < 2 {
        return Err(Error::Empty("no samples after the transient"));
    }
    let turns = (kept[kept.len() - 1].1.phi_lift - kept[0].1.phi_lift).abs() / T::TAU();
    if turns < T::from_count(cfg.min_turns) {
        return Err(Error::NotRotating {
            alpha: p.alpha().as_f64(),
            omega: p.omega().as_f64(),
        });
    }

    let (kmin, kmax) = kept
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), (_, s)| (lo.min(s.k), hi.max(s.k)));
    let phase_slope = linear_slope(kept.iter().map(|(t, s)| (*t, s.phi_lift)));
    let (error, overlay) = compare_states(&appx, kept.iter().map(|(_, s)| *s), cfg.n_bins)?;
    Ok(OrbitComparison {
        approximation: appx,
        error,
        k_amplitude: (kmax - kmin) / T::lit(2.0),
        phase_slope,
        overlay,
    })
}

fn linear_slope<T: Scalar>(points: impl Iterator<Item = (T, T)> + Clone) -> T {
    let n = T::from_count(points.clone().count());
    let (sx, sy) = points.clone().fold((T::zero(), T::zero()), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.fold((T::zero(), T::zero()), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    sxy / sxx
}

/// Principal phase of the approximate orbit at time `t`.
pub fn approx_phase<T: Scalar>(appx: &PeriodicApproximation<T>, t: T) -> T {
    wrap_angle(appx.zeta * t + appx.phi0)
}
