//! The reduced two-oscillator system.
//!
//! With `phi = phi_1 - phi_2`, `gamma = dphi/dt` and `k = K_12`, and after
//! rescaling time by the learning rate, the pair obeys
//!
//! ```text
//! dphi/dt   = gamma
//! dgamma/dt = (-gamma + omega - k sin phi) / m
//! dk/dt     = alpha cos phi - k
//! ```
//!
//! This module holds the vector field and everything that can be computed
//! from it in closed form: the four equilibria, their characteristic cubics
//! and stability classes, the `(u, v)` regions where those cubics have only
//! real roots, the energy functional, and audits of dissipation and
//! eventual boundedness.
//!
//! Integrated states are `[phi_lift, gamma, k]` where `phi_lift` is the
//! unwrapped phase; [`PairState`] carries both the lift and its principal
//! value in `[-pi, pi)`.

use std::io::{self, Write};

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubic::Cubic;
use crate::error::{Error, Result};
use crate::ode::{self, IntegratorConfig, Trajectory, VectorField};
use crate::scalar::{wrap_angle, Scalar};

/// Parameters before nondimensionalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPairParams<T> {
    pub mass: T,
    pub omega1: T,
    pub omega2: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> RawPairParams<T> {
    /// Rescales to `(beta m, |omega1 - omega2| / beta, alpha / beta)`.
    pub fn rescale(&self) -> Result<PairParams<T>> {
        if !(self.beta > T::zero()) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {}", self.beta)));
        }
        PairParams::new(
            self.beta * self.mass,
            (self.omega1 - self.omega2).abs() / self.beta,
            self.alpha / self.beta,
        )
    }
}

/// Rescaled parameters `(m, omega, alpha)` with `m > 0`, `alpha > 0`, `omega >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairParams<T> {
    mass: T,
    omega: T,
    alpha: T,
}

impl<T: Scalar> PairParams<T> {
    pub fn new(mass: T, omega: T, alpha: T) -> Result<Self> {
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if !(omega >= T::zero()) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("omega must be >= 0, got {omega}")));
        }
        Ok(Self { mass, omega, alpha })
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Equilibria exist iff `alpha >= 2 omega`.
    pub fn has_equilibria(&self) -> bool {
        self.alpha >= T::lit(2.0) * self.omega
    }

    /// Saddle-node point `alpha == 2 omega`.
    pub fn is_saddle_node(&self) -> bool {
        self.alpha == T::lit(2.0) * self.omega
    }

    fn require_equilibria(&self) -> Result<()> {
        if self.has_equilibria() {
            Ok(())
        } else {
            Err(Error::NoEquilibria {
                alpha: self.alpha.as_f64(),
                two_omega: 2.0 * self.omega.as_f64(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairState<T> {
    /// Principal value in `[-pi, pi)`.
    pub phi: T,
    pub phi_lift: T,
    pub gamma: T,
    pub k: T,
}

impl<T: Scalar> PairState<T> {
    pub fn from_lifted(phi_lift: T, gamma: T, k: T) -> Self {
        Self {
            phi: wrap_angle(phi_lift),
            phi_lift,
            gamma,
            k,
        }
    }

    /// From an integrated `[phi_lift, gamma, k]` vector.
    pub fn from_slice(x: &[T]) -> Self {
        Self::from_lifted(x[0], x[1], x[2])
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.phi_lift, self.gamma, self.k]
    }
}

/// `(dphi, dgamma, dk)` at `s`.
pub fn vector_field<T: Scalar>(s: &PairState<T>, p: &PairParams<T>) -> [T; 3] {
    let (sin, cos) = s.phi_lift.sin_cos();
    [
        s.gamma,
        (-s.gamma + p.omega - s.k * sin) / p.mass,
        p.alpha * cos - s.k,
    ]
}

/// Jacobian of the vector field with respect to `(phi, gamma, k)`.
pub fn jacobian<T: Scalar>(s: &PairState<T>, p: &PairParams<T>) -> [[T; 3]; 3] {
    let (sin, cos) = s.phi_lift.sin_cos();
    let m = p.mass;
    [
        [T::zero(), T::one(), T::zero()],
        [-s.k * cos / m, -T::one() / m, -sin / m],
        [-p.alpha * sin, T::zero(), -T::one()],
    ]
}

/// Phase-space volume contraction rate `-1/m - 1`; independent of the state.
pub fn divergence<T: Scalar>(p: &PairParams<T>) -> T {
    -T::one() / p.mass - T::one()
}

/// The reduced system as an integrable vector field on `[phi_lift, gamma, k]`.
#[derive(Debug, Clone, Copy)]
pub struct PairSystem<T> {
    pub params: PairParams<T>,
}

impl<T: Scalar> PairSystem<T> {
    pub fn new(params: PairParams<T>) -> Self {
        Self { params }
    }
}

impl<T: Scalar> VectorField<T> for PairSystem<T> {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, _t: T, x: &[T], dx: &mut [T]) {
        let p = &self.params;
        let (sin, cos) = x[0].sin_cos();
        dx[0] = x[1];
        dx[1] = (-x[1] + p.omega - x[2] * sin) / p.mass;
        dx[2] = p.alpha * cos - x[2];
    }
}

pub fn simulate<T: Scalar>(
    p: &PairParams<T>,
    initial: [T; 3],
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    ode::integrate(&PairSystem::new(*p), &initial, cfg)
}

/// Uniform draw from `[-pi, pi)^3`.
pub fn random_initial_state<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> [T; 3] {
    let pi = std::f64::consts::PI;
    std::array::from_fn(|_| T::lit(rng.random_range(-pi..pi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumLabel {
    P1,
    P2,
    P3,
    P4,
}

/// Equilibria share characteristic polynomials in pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelPair {
    P1P3,
    P2P4,
}

impl EquilibriumLabel {
    pub const ALL: [EquilibriumLabel; 4] = [Self::P1, Self::P2, Self::P3, Self::P4];

    pub fn pair(self) -> LabelPair {
        match self {
            Self::P1 | Self::P3 => LabelPair::P1P3,
            Self::P2 | Self::P4 => LabelPair::P2P4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium<T> {
    pub label: EquilibriumLabel,
    pub state: PairState<T>,
    /// Set on the saddle-node line `alpha = 2 omega`, where P1 = P2 and P3 = P4.
    pub degenerate: bool,
}

/// The four equilibria, or none when `alpha < 2 omega`.
///
/// With `theta = asin(2 omega / alpha) / 2` the phases are `theta`,
/// `pi/2 - theta`, `-pi + theta` and `-pi/2 - theta`, and `k = alpha cos phi`.
/// On the saddle-node line both merged pairs are still returned, flagged.
pub fn equilibria<T: Scalar>(p: &PairParams<T>) -> Vec<Equilibrium<T>> {
    if !p.has_equilibria() {
        return Vec::new();
    }
    let ratio = (T::lit(2.0) * p.omega / p.alpha).min(T::one());
    let theta = ratio.asin() / T::lit(2.0);
    let half_pi = T::FRAC_PI_2();
    let degenerate = p.is_saddle_node();
    EquilibriumLabel::ALL
        .iter()
        .map(|&label| {
            let phi = match label {
                EquilibriumLabel::P1 => theta,
                EquilibriumLabel::P2 => half_pi - theta,
                EquilibriumLabel::P3 => -T::PI() + theta,
                EquilibriumLabel::P4 => -half_pi - theta,
            };
            Equilibrium {
                label,
                state: PairState {
                    phi,
                    phi_lift: phi,
                    gamma: T::zero(),
                    k: p.alpha * phi.cos(),
                },
                degenerate,
            }
        })
        .collect()
}

/// `u = alpha + sqrt(alpha^2 - 4 omega^2)`, `v = alpha - sqrt(alpha^2 - 4 omega^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UvPoint<T> {
    pub u: T,
    pub v: T,
}

impl<T: Scalar> UvPoint<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }
}

/// `sqrt(alpha^2 - 4 omega^2)`, factored to stay exact at `alpha = 2 omega`.
fn root_gap<T: Scalar>(p: &PairParams<T>) -> T {
    let two_omega = T::lit(2.0) * p.omega;
    ((p.alpha - two_omega) * (p.alpha + two_omega)).max(T::zero()).sqrt()
}

pub fn uv<T: Scalar>(p: &PairParams<T>) -> Result<UvPoint<T>> {
    p.require_equilibria()?;
    let r = root_gap(p);
    Ok(UvPoint {
        u: p.alpha + r,
        v: p.alpha - r,
    })
}

/// Characteristic cubic of the linearization, in the `(u, v)` form.
///
/// P1/P3: `2m x^3 + 2(m+1) x^2 + (u+2) x + (u-v)`.
/// P2/P4: the same with `u` and `v` exchanged, i.e. constant term `v - u`;
/// this is the negated left-hand side of the textbook form so the leading
/// coefficient stays positive.
pub fn characteristic_cubic<T: Scalar>(label: EquilibriumLabel, p: &PairParams<T>) -> Result<Cubic<T>> {
    let point = uv(p)?;
    // u - v computed directly so it is exactly 0 on the saddle-node line
    let gap = T::lit(2.0) * root_gap(p);
    Ok(pair_cubic(label.pair(), point, p.mass, gap))
}

fn pair_cubic<T: Scalar>(pair: LabelPair, point: UvPoint<T>, m: T, u_minus_v: T) -> Cubic<T> {
    let two = T::lit(2.0);
    let (linear, constant) = match pair {
        LabelPair::P1P3 => (point.u + two, u_minus_v),
        LabelPair::P2P4 => (point.v + two, -u_minus_v),
    };
    Cubic::new(two * m, two * (m + T::one()), linear, constant)
}

/// Cubic for an arbitrary `(u, v)`, used for region rasters.
pub fn uv_cubic<T: Scalar>(pair: LabelPair, point: UvPoint<T>, m: T) -> Cubic<T> {
    pair_cubic(pair, point, m, point.u - point.v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityClass {
    /// Three negative real eigenvalues.
    AllRealNegative,
    /// One negative real eigenvalue and a conjugate pair with negative real part.
    ComplexPairSink,
    /// One positive and two negative real eigenvalues.
    SaddleAllReal,
    /// One positive real eigenvalue and a conjugate pair with negative real part.
    SaddleComplex,
    /// Zero eigenvalue on the saddle-node line.
    SaddleNodeDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport<T> {
    pub label: EquilibriumLabel,
    /// Real roots first (ascending), then the conjugate pair with positive imaginary part first.
    pub eigenvalues: [Complex<T>; 3],
    pub class: StabilityClass,
    /// The characteristic cubic has three real roots.
    pub in_gamma_region: bool,
    pub cubic: Cubic<T>,
    pub uv: UvPoint<T>,
}

/// Eigenvalues and stability class of one equilibrium.
///
/// Eigenvalues are the roots of [`characteristic_cubic`]; on the saddle-node
/// line they are `0` and `(-(m+1) +- sqrt((m-1)^2 - 2 m alpha)) / (2m)`.
pub fn classify<T: Scalar>(label: EquilibriumLabel, p: &PairParams<T>) -> Result<StabilityReport<T>> {
    let point = uv(p)?;
    let cubic = characteristic_cubic(label, p)?;
    let in_gamma = cubic.has_three_real_roots();

    if p.is_saddle_node() {
        let m = p.mass;
        let two_m = T::lit(2.0) * m;
        let disc = (m - T::one()).powi(2) - two_m * p.alpha;
        let centre = -(m + T::one()) / two_m;
        let zero = Complex::new(T::zero(), T::zero());
        let eigenvalues = if disc >= T::zero() {
            let r = disc.sqrt() / two_m;
            let mut v = [zero, Complex::new(centre - r, T::zero()), Complex::new(centre + r, T::zero())];
            sort_eigenvalues(&mut v);
            v
        } else {
            let r = (-disc).sqrt() / two_m;
            [zero, Complex::new(centre, r), Complex::new(centre, -r)]
        };
        return Ok(StabilityReport {
            label,
            eigenvalues,
            class: StabilityClass::SaddleNodeDegenerate,
            in_gamma_region: in_gamma,
            cubic,
            uv: point,
        });
    }

    let eigenvalues = cubic.roots().to_complex();
    let class = match (label.pair(), in_gamma) {
        (LabelPair::P1P3, true) => StabilityClass::AllRealNegative,
        (LabelPair::P1P3, false) => StabilityClass::ComplexPairSink,
        (LabelPair::P2P4, true) => StabilityClass::SaddleAllReal,
        (LabelPair::P2P4, false) => StabilityClass::SaddleComplex,
    };
    Ok(StabilityReport {
        label,
        eigenvalues,
        class,
        in_gamma_region: in_gamma,
        cubic,
        uv: point,
    })
}

fn sort_eigenvalues<T: Scalar>(v: &mut [Complex<T>; 3]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// `s = 4(m+1)^2 - 6m(x+2)`; the double-root boundary is real iff `s >= 0`.
pub fn boundary_s<T: Scalar>(m: T, free_var: T) -> T {
    let mp1 = m + T::one();
    T::lit(4.0) * mp1 * mp1 - T::lit(6.0) * m * (free_var + T::lit(2.0))
}

/// Largest free-variable value with a real boundary, `2(m^2 - m + 1) / (3m)`.
pub fn gamma_bound<T: Scalar>(m: T) -> T {
    T::lit(2.0) * (m * m - m + T::one()) / (T::lit(3.0) * m)
}

/// The two branch values of the region boundary at `free_var`.
///
/// Returns `(free - h_plus, free - h_minus)` with
/// `h_pm = (+-sqrt(s) + m + 1)(sqrt(s) -+ 2(m+1))^2 / (54 m^2)`. For the
/// P1/P3 region `free_var` is `u` and the results are `v`; for P2/P4 the
/// roles are exchanged. A value of `s` negative only by rounding is taken as 0.
pub fn gamma_boundary<T: Scalar>(m: T, free_var: T) -> Result<(T, T)> {
    let mp1 = m + T::one();
    let mut s = boundary_s(m, free_var);
    let slack = T::lit(64.0) * T::epsilon() * T::lit(4.0) * mp1 * mp1;
    if s < T::zero() {
        if s >= -slack {
            s = T::zero();
        } else {
            return Err(Error::NegativeBoundaryDiscriminant { s: s.as_f64() });
        }
    }
    let rs = s.sqrt();
    let denom = T::lit(54.0) * m * m;
    let h_plus = (rs + mp1) * (rs - T::lit(2.0) * mp1).powi(2) / denom;
    let h_minus = (mp1 - rs) * (rs + T::lit(2.0) * mp1).powi(2) / denom;
    Ok((free_var - h_plus, free_var - h_minus))
}

/// Whether the cubic for `pair` at `point` has three real roots
/// (discriminant >= 0; boundary points count as inside).
pub fn in_gamma_region<T: Scalar>(pair: LabelPair, point: UvPoint<T>, m: T) -> bool {
    uv_cubic(pair, point, m).has_three_real_roots()
}

/// Region membership from the boundary curves instead of the discriminant:
/// the dependent coordinate must lie between the two branch values.
pub fn in_gamma_region_by_boundary<T: Scalar>(pair: LabelPair, point: UvPoint<T>, m: T) -> bool {
    let (free, dependent) = match pair {
        LabelPair::P1P3 => (point.u, point.v),
        LabelPair::P2P4 => (point.v, point.u),
    };
    match gamma_boundary(m, free) {
        Ok((a, b)) => dependent >= a.min(b) && dependent <= a.max(b),
        Err(_) => false,
    }
}

/// One `(u, v)` cell of a region raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaCell<T> {
    pub u: T,
    pub v: T,
    pub in_gamma1: bool,
    pub in_gamma2: bool,
    pub discriminant_p1p3: T,
    pub discriminant_p2p4: T,
}

/// Region membership on a uniform `n x n` grid over `[0, bound]^2`, where
/// `bound = 2(m^2 - m + 1) / (3m)`. Cells with `v > u` are outside both regions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRaster<T> {
    pub mass: T,
    pub n: usize,
    pub bound: T,
    /// Row-major over `v`: cell `(i_u, j_v)` sits at `j_v * n + i_u`.
    pub cells: Vec<GammaCell<T>>,
}

pub fn gamma_raster<T: Scalar>(m: T, n: usize) -> Result<GammaRaster<T>> {
    if !(m > T::zero()) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("mass must be > 0, got {m}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("grid size must be >= 2, got {n}")));
    }
    let bound = gamma_bound(m);
    let step = bound / T::from_count(n - 1);
    let cells = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let point = UvPoint::new(step * T::from_count(idx % n), step * T::from_count(idx / n));
            let c13 = uv_cubic(LabelPair::P1P3, point, m);
            let c24 = uv_cubic(LabelPair::P2P4, point, m);
            let admissible = point.v <= point.u;
            GammaCell {
                u: point.u,
                v: point.v,
                in_gamma1: admissible && c13.has_three_real_roots(),
                in_gamma2: admissible && c24.has_three_real_roots(),
                discriminant_p1p3: c13.discriminant(),
                discriminant_p2p4: c24.discriminant(),
            }
        })
        .collect();
    Ok(GammaRaster { mass: m, n, bound, cells })
}

impl<T: Scalar> GammaRaster<T> {
    /// CSV with header `u,v,m,in_gamma1,in_gamma2,discriminant_p1p3,discriminant_p2p4`;
    /// booleans are written as `1`/`0`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "u,v,m,in_gamma1,in_gamma2,discriminant_p1p3,discriminant_p2p4")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.u,
                c.v,
                self.mass,
                u8::from(c.in_gamma1),
                u8::from(c.in_gamma2),
                c.discriminant_p1p3,
                c.discriminant_p2p4
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyAudit<T> {
    pub energy: T,
    pub de_dt: T,
}

/// `E = alpha m gamma^2 / 2 - alpha omega phi - alpha k cos phi + k^2 / 2`
/// on the principal phase, with `dE/dt = -(alpha gamma^2 + (k - alpha cos phi)^2)`.
pub fn energy<T: Scalar>(s: &PairState<T>, p: &PairParams<T>) -> EnergyAudit<T> {
    let (a, m, w) = (p.alpha, p.mass, p.omega);
    let half = T::lit(0.5);
    let cos = s.phi.cos();
    let energy = half * a * m * s.gamma * s.gamma - a * w * s.phi - a * s.k * cos + half * s.k * s.k;
    let slack = s.k - a * cos;
    EnergyAudit {
        energy,
        de_dt: -(a * s.gamma * s.gamma + slack * slack),
    }
}

/// `(dE/dphi, dE/dgamma, dE/dk)`; vanishes exactly at the equilibria.
pub fn energy_gradient<T: Scalar>(s: &PairState<T>, p: &PairParams<T>) -> [T; 3] {
    let (sin, cos) = s.phi.sin_cos();
    [
        -p.alpha * p.omega + p.alpha * s.k * sin,
        p.alpha * p.mass * s.gamma,
        -p.alpha * cos + s.k,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundednessAudit<T> {
    pub epsilon: T,
    /// First sample time from which both bounds hold to the end; `None` if the last sample violates them.
    pub t_epsilon: Option<T>,
    pub k_bound: T,
    pub gamma_bound: T,
    pub satisfied: bool,
}

/// Checks `|k| <= alpha + eps` and `|gamma| <= omega + alpha + eps` on a
/// trajectory of [`PairSystem`].
pub fn boundedness_audit<T: Scalar>(traj: &Trajectory<T>, p: &PairParams<T>, epsilon: T) -> BoundednessAudit<T> {
    let k_bound = p.alpha + epsilon;
    let gamma_bound = p.omega + p.alpha + epsilon;
    let mut t_epsilon = None;
    for i in (0..traj.len()).rev() {
        let s = traj.state(i);
        if s[2].abs() <= k_bound && s[1].abs() <= gamma_bound {
            t_epsilon = Some(traj.time(i));
        } else {
            break;
        }
    }
    BoundednessAudit {
        epsilon,
        t_epsilon,
        k_bound,
        gamma_bound,
        satisfied: t_epsilon.is_some(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic::CubicRoots;
    use nalgebra::Matrix3;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn params(m: f64, w: f64, a: f64) -> PairParams<f64> {
        PairParams::new(m, w, a).unwrap()
    }

    fn numeric_eigenvalues(j: [[f64; 3]; 3]) -> Vec<Complex<f64>> {
        let m = Matrix3::from_fn(|r, c| j[r][c]);
        m.complex_eigenvalues().iter().map(|z| Complex::new(z.re, z.im)).collect()
    }

    /// Greedy nearest matching between two root multisets.
    fn max_mismatch(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for za in a {
            let (idx, d) = b
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, zb)| (i, (za - zb).norm()))
                .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .unwrap();
            used[idx] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn rescale_examples() {
        let raw = RawPairParams { mass: 1.0, omega1: 3.0, omega2: 0.0, alpha: 5.0, beta: 1.0 };
        assert_eq!(raw.rescale().unwrap(), params(1.0, 3.0, 5.0));
        let raw = RawPairParams { mass: 1.0, omega1: 6.0, omega2: 0.0, alpha: 10.0, beta: 2.0 };
        assert_eq!(raw.rescale().unwrap(), params(2.0, 3.0, 5.0));
        let raw = RawPairParams { mass: 1.0, omega1: 0.0, omega2: 3.0, alpha: 5.0, beta: 1.0 };
        assert_eq!(raw.rescale().unwrap().omega(), 3.0);
        let raw = RawPairParams { mass: 1.0, omega1: 0.0, omega2: 3.0, alpha: 5.0, beta: 0.0 };
        assert!(raw.rescale().is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(PairParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PairParams::new(1.0, -1.0, 1.0).is_err());
        assert!(PairParams::new(1.0, 1.0, 0.0).is_err());
        assert!(PairParams::new(1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn vector_field_examples() {
        let p = params(1.0, 3.0, 5.0);
        let d = vector_field(&PairState::from_lifted(0.0, 0.0, 0.0), &p);
        assert_eq!(d, [0.0, 3.0, 5.0]);
        let d = vector_field(&PairState::from_lifted(FRAC_PI_2, 1.0, 2.0), &p);
        assert_eq!(d[0], 1.0);
        assert!(d[1].abs() < 1e-15);
        assert!((d[2] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn no_equilibria_in_rotating_region() {
        assert!(equilibria(&params(1.0, 3.0, 5.0)).is_empty());
        assert!(matches!(uv(&params(1.0, 3.0, 5.0)), Err(Error::NoEquilibria { .. })));
        assert!(classify(EquilibriumLabel::P1, &params(1.0, 3.0, 5.0)).is_err());
    }

    #[test]
    fn saddle_node_merges_pairs() {
        let p = params(1.0, 1.5, 3.0);
        let eq = equilibria(&p);
        assert_eq!(eq.len(), 4);
        assert!(eq.iter().all(|e| e.degenerate));
        assert!((eq[0].state.phi - FRAC_PI_4).abs() < 1e-15);
        assert!((eq[0].state.phi - eq[1].state.phi).abs() < 1e-15);
        assert!((eq[0].state.k - 3.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((eq[2].state.phi - eq[3].state.phi).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_closed_form_and_residual() {
        let p = params(1.0, 3.0, 10.0);
        let eq = equilibria(&p);
        assert!(!eq[0].degenerate);
        // asin(0.6)/2 and 10 cos of it
        assert!((eq[0].state.phi - 0.3217505543966422).abs() < 1e-15);
        assert!((eq[0].state.k - 9.486832980505138).abs() < 1e-13);
        for e in &eq {
            let r = vector_field(&e.state, &p);
            assert!(r.iter().all(|x| x.abs() < 1e-12), "{:?}: {r:?}", e.label);
            assert!(((2.0 * e.state.phi).sin() - 0.6).abs() < 1e-12);
            assert!(e.state.phi >= -PI && e.state.phi < PI);
        }
    }

    #[test]
    fn uv_examples() {
        let p = uv(&params(1.0, 3.0, 10.0)).unwrap();
        assert_eq!((p.u, p.v), (18.0, 2.0));
        let p = uv(&params(1.0, 2.5, 5.0)).unwrap();
        assert_eq!((p.u, p.v), (5.0, 5.0));
        let p = uv(&params(1.0, 0.0, 5.0)).unwrap();
        assert_eq!((p.u, p.v), (10.0, 0.0));
    }

    #[test]
    fn cubic_coefficients() {
        let p = params(1.0, 3.0, 10.0);
        let c = characteristic_cubic(EquilibriumLabel::P1, &p).unwrap();
        assert_eq!((c.c3, c.c2, c.c1, c.c0), (2.0, 4.0, 20.0, 16.0));
        assert_eq!(c, characteristic_cubic(EquilibriumLabel::P3, &p).unwrap());
        let c = characteristic_cubic(EquilibriumLabel::P2, &p).unwrap();
        assert_eq!((c.c3, c.c2, c.c1, c.c0), (2.0, 4.0, 4.0, -16.0));
        match c.roots() {
            CubicRoots::OneReal { real, .. } => assert!(real > 0.0),
            CubicRoots::Real(r) => assert!(r[2] > 0.0),
        }
        // saddle-node: constant term exactly zero
        let c = characteristic_cubic(EquilibriumLabel::P1, &params(1.0, 1.0, 2.0)).unwrap();
        assert_eq!(c.c0, 0.0);
        assert_eq!(c.eval(0.0), 0.0);
    }

    #[test]
    fn cubic_roots_match_jacobian_eigenvalues() {
        let p = params(1.0, 3.0, 10.0);
        for e in equilibria(&p) {
            let rep = classify(e.label, &p).unwrap();
            let numeric = numeric_eigenvalues(jacobian(&e.state, &p));
            assert!(max_mismatch(&rep.eigenvalues, &numeric) < 1e-9, "{:?}", e.label);
        }
    }

    #[test]
    fn classify_examples() {
        let rep = classify(EquilibriumLabel::P1, &params(1.0, 1.0, 2.0)).unwrap();
        assert_eq!(rep.class, StabilityClass::SaddleNodeDegenerate);
        let expected = [Complex::new(0.0, 0.0), Complex::new(-1.0, 1.0), Complex::new(-1.0, -1.0)];
        assert!(max_mismatch(&rep.eigenvalues, &expected) < 1e-15);
        for z in expected {
            assert!(rep.cubic.eval_complex(z).norm() < 1e-14);
        }

        let p = params(1.0, 3.0, 10.0);
        let rep = classify(EquilibriumLabel::P1, &p).unwrap();
        assert_eq!(rep.class, StabilityClass::ComplexPairSink);
        assert!(!rep.in_gamma_region);
        assert!(rep.eigenvalues.iter().all(|z| z.re < 0.0));
        let rep = classify(EquilibriumLabel::P2, &p).unwrap();
        assert_eq!(rep.class, StabilityClass::SaddleComplex);
        assert_eq!(rep.eigenvalues.iter().filter(|z| z.re > 0.0).count(), 1);
    }

    #[test]
    fn gamma_boundary_examples() {
        let (a, b) = gamma_boundary(1.0_f64, 2.0 / 3.0).unwrap();
        assert!((a - 2.0 / 27.0).abs() < 1e-12 && (b - 2.0 / 27.0).abs() < 1e-12);
        assert!((gamma_bound(1.0_f64) - 2.0 / 3.0).abs() < 1e-15);
        for m in [0.5_f64, 1.0, 2.0, 3.7] {
            let (a, b) = gamma_boundary(m, gamma_bound(m)).unwrap();
            assert!((a - b).abs() < 1e-6, "m = {m}");
        }
        let (a, b) = gamma_boundary(1.0_f64, 0.5).unwrap();
        assert!(a != b);
        for v in [a, b] {
            assert!((0.0..=0.5).contains(&v));
            let c = uv_cubic(LabelPair::P1P3, UvPoint::new(0.5, v), 1.0);
            let scale = 2.0 * 16.0 * 20.0;
            assert!(c.discriminant().abs() < 1e-9 * scale, "{}", c.discriminant());
            assert!(in_gamma_region(LabelPair::P1P3, UvPoint::new(0.5, v), 1.0));
        }
        assert!(matches!(gamma_boundary(1.0, 1.0), Err(Error::NegativeBoundaryDiscriminant { .. })));
    }

    #[test]
    fn gamma_region_examples() {
        assert!(!in_gamma_region(LabelPair::P1P3, UvPoint::new(18.0, 2.0), 1.0));
        let (a, b) = gamma_boundary(1.0_f64, 0.5).unwrap();
        let mid = UvPoint::new(0.5, 0.5 * (a + b));
        assert!(in_gamma_region(LabelPair::P1P3, mid, 1.0));
        assert!(in_gamma_region_by_boundary(LabelPair::P1P3, mid, 1.0));
        match uv_cubic(LabelPair::P1P3, mid, 1.0).roots() {
            CubicRoots::Real(r) => assert!(r.iter().all(|x| *x < 0.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn energy_examples() {
        let p = params(1.0, 3.0, 10.0);
        for e in equilibria(&p) {
            let audit = energy(&e.state, &p);
            assert!(audit.de_dt.abs() < 1e-24);
            assert!(energy_gradient(&e.state, &p).iter().all(|g| g.abs() < 1e-12));
        }
        for phi in [-3.0, -1.0, 0.2, 2.9] {
            let s = PairState::from_lifted(phi, 0.0, 10.0 * f64::cos(phi));
            assert_eq!(energy(&s, &p).de_dt, 0.0);
        }
        let s = PairState::from_lifted(0.3, 1.0, 0.0);
        assert!(energy(&s, &p).de_dt < 0.0);
    }

    #[test]
    fn divergence_examples() {
        assert_eq!(divergence(&params(1.0, 3.0, 5.0)), -2.0);
        assert_eq!(divergence(&params(2.0, 3.0, 5.0)), -1.5);
    }

    #[test]
    fn boundedness_from_inside() {
        let p = params(1.0, 3.0, 5.0);
        let traj = simulate(&p, [0.1, 0.2, 0.3], &IntegratorConfig::adaptive(50.0)).unwrap();
        let audit = boundedness_audit(&traj, &p, 0.01);
        assert!(audit.satisfied);
        assert_eq!(audit.t_epsilon, Some(0.0));
    }

    #[test]
    fn boundedness_reports_violation_at_end() {
        let p = params(1.0, 3.0, 5.0);
        let traj = simulate(&p, [0.0, 0.0, 100.0], &IntegratorConfig::adaptive(1.0)).unwrap();
        let audit = boundedness_audit(&traj, &p, 0.01);
        assert!(!audit.satisfied);
        assert_eq!(audit.t_epsilon, None);
    }

    #[test]
    fn raster_shape_and_csv() {
        let r = gamma_raster(1.0_f64, 11).unwrap();
        assert_eq!(r.cells.len(), 121);
        assert!((r.bound - 2.0 / 3.0).abs() < 1e-15);
        assert!(r.cells.iter().filter(|c| c.v > c.u).all(|c| !c.in_gamma1 && !c.in_gamma2));
        assert!(r.cells.iter().any(|c| c.in_gamma1));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,v,m,in_gamma1,in_gamma2,discriminant_p1p3,discriminant_p2p4\n"));
        assert_eq!(text.lines().count(), 122);
        assert!(gamma_raster(0.0_f64, 11).is_err());
        assert!(gamma_raster(1.0_f64, 1).is_err());
    }

    #[test]
    fn single_precision_pair_math() {
        let p = PairParams::new(1.0_f32, 3.0, 10.0).unwrap();
        let rep = classify(EquilibriumLabel::P1, &p).unwrap();
        assert_eq!(rep.class, StabilityClass::ComplexPairSink);
        let sum: f32 = rep.eigenvalues.iter().map(|z| z.re).sum();
        assert!((sum + 2.0).abs() < 1e-4);
    }
}
