//! Real cubic polynomials: discriminant, closed-form roots with Newton polish.
//!
//! The characteristic polynomials of the reduced pair system and the
//! rotation-frequency equation of the periodic approximation are both cubics,
//! so everything goes through this one solver.

use num_complex::Complex;
use serde::Serialize;

use crate::scalar::Scalar;

/// Relative slack on the discriminant sign test. A discriminant that is
/// negative by less than this fraction of its largest term is treated as zero
/// (double root), which puts boundary points inside the real-root region.
pub const DISCRIMINANT_REL_TOL: f64 = 1e-12;

/// `c3 x^3 + c2 x^2 + c1 x + c0` with `c3 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cubic<T> {
    pub c3: T,
    pub c2: T,
    pub c1: T,
    pub c0: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CubicRoots<T> {
    /// Three real roots (with multiplicity), ascending.
    Real([T; 3]),
    /// One real root and a conjugate pair; `pair.im > 0`.
    OneReal { real: T, pair: Complex<T> },
}

impl<T: Scalar> CubicRoots<T> {
    pub fn real_count(&self) -> usize {
        match self {
            CubicRoots::Real(_) => 3,
            CubicRoots::OneReal { .. } => 1,
        }
    }

    /// All three roots as complex numbers, real ones first for the one-real case.
    pub fn to_complex(&self) -> [Complex<T>; 3] {
        match *self {
            CubicRoots::Real([a, b, c]) => [
                Complex::new(a, T::zero()),
                Complex::new(b, T::zero()),
                Complex::new(c, T::zero()),
            ],
            CubicRoots::OneReal { real, pair } => {
                [Complex::new(real, T::zero()), pair, pair.conj()]
            }
        }
    }
}

impl<T: Scalar> Cubic<T> {
    pub fn new(c3: T, c2: T, c1: T, c0: T) -> Self {
        Self { c3, c2, c1, c0 }
    }

    pub fn eval(&self, x: T) -> T {
        ((self.c3 * x + self.c2) * x + self.c1) * x + self.c0
    }

    pub fn eval_complex(&self, z: Complex<T>) -> Complex<T> {
        ((z * self.c3 + self.c2) * z + self.c1) * z + self.c0
    }

    pub fn derivative_at(&self, x: T) -> T {
        (T::lit(3.0) * self.c3 * x + T::lit(2.0) * self.c2) * x + self.c1
    }

    fn derivative_complex(&self, z: Complex<T>) -> Complex<T> {
        (z * (T::lit(3.0) * self.c3) + T::lit(2.0) * self.c2) * z + self.c1
    }

    fn discriminant_terms(&self) -> [T; 5] {
        let (a, b, c, d) = (self.c3, self.c2, self.c1, self.c0);
        [
            T::lit(18.0) * a * b * c * d,
            -T::lit(4.0) * b * b * b * d,
            b * b * c * c,
            -T::lit(4.0) * a * c * c * c,
            -T::lit(27.0) * a * a * d * d,
        ]
    }

    /// `18abcd - 4b^3 d + b^2 c^2 - 4ac^3 - 27a^2 d^2`.
    pub fn discriminant(&self) -> T {
        self.discriminant_terms().into_iter().sum()
    }

    /// True when all three roots are real (a zero discriminant counts).
    pub fn has_three_real_roots(&self) -> bool {
        let terms = self.discriminant_terms();
        let disc: T = terms.iter().copied().sum();
        let scale: T = terms.iter().map(|t| t.abs()).sum();
        disc >= -T::lit(DISCRIMINANT_REL_TOL) * scale
    }

    /// Product of the roots, `-c0 / c3`.
    pub fn root_product(&self) -> T {
        -self.c0 / self.c3
    }

    /// Sum of the roots, `-c2 / c3`.
    pub fn root_sum(&self) -> T {
        -self.c2 / self.c3
    }

    /// Trigonometric (three real) or Cardano (one real) solution followed by
    /// one Newton step per root. The real/complex split follows
    /// [`Cubic::has_three_real_roots`].
    pub fn roots(&self) -> CubicRoots<T> {
        let three = T::lit(3.0);
        let b = self.c2 / self.c3;
        let c = self.c1 / self.c3;
        let d = self.c0 / self.c3;
        let shift = b / three;
        // x = t - b/3  =>  t^3 + p t + q = 0
        let p = c - b * b / three;
        let q = T::lit(2.0) * b * b * b / T::lit(27.0) - b * c / three + d;

        if self.has_three_real_roots() {
            let mut r = if p < T::zero() {
                let amp = T::lit(2.0) * (-p / three).sqrt();
                let arg = (three * q / (T::lit(2.0) * p) * (-three / p).sqrt())
                    .max(-T::one())
                    .min(T::one());
                let theta = arg.acos() / three;
                let step = T::TAU() / three;
                [
                    amp * theta.cos() - shift,
                    amp * (theta - step).cos() - shift,
                    amp * (theta - step - step).cos() - shift,
                ]
            } else {
                // p == 0 up to rounding: triple root
                let t = (-q).cbrt();
                [t - shift; 3]
            };
            for x in r.iter_mut() {
                *x = self.polish(*x);
            }
            r.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            CubicRoots::Real(r)
        } else {
            let half_q = q / T::lit(2.0);
            let disc = (half_q * half_q + p * p * p / T::lit(27.0)).max(T::zero());
            let sign = if q >= T::zero() { -T::one() } else { T::one() };
            let big = sign * (half_q.abs() + disc.sqrt()).cbrt();
            let small = if big != T::zero() {
                -p / (three * big)
            } else {
                T::zero()
            };
            let real = self.polish(big + small - shift);
            let re = -(big + small) / T::lit(2.0) - shift;
            let im = (three.sqrt() / T::lit(2.0) * (big - small)).abs();
            let pair = self.polish_complex(Complex::new(re, im));
            let pair = if pair.im < T::zero() {
                pair.conj()
            } else {
                pair
            };
            CubicRoots::OneReal { real, pair }
        }
    }

    fn polish(&self, x: T) -> T {
        let fx = self.eval(x);
        let dfx = self.derivative_at(x);
        if dfx == T::zero() || !dfx.is_finite() {
            return x;
        }
        let y = x - fx / dfx;
        if y.is_finite() && self.eval(y).abs() <= fx.abs() {
            y
        } else {
            x
        }
    }

    fn polish_complex(&self, z: Complex<T>) -> Complex<T> {
        let fz = self.eval_complex(z);
        let dfz = self.derivative_complex(z);
        if dfz.norm_sqr() == T::zero() {
            return z;
        }
        let w = z - fz / dfz;
        if w.re.is_finite() && w.im.is_finite() && self.eval_complex(w).norm() <= fz.norm() {
            w
        } else {
            z
        }
    }
}
