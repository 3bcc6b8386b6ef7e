//! Scalar abstraction and forward-mode automatic differentiation.
//!
//! The loss formulas in this crate are written once, generically over
//! [`Scalar`], and instantiated twice: at `f64` for plain evaluation and at
//! [`Dual`] for exact forward-mode derivatives. [`grad`] computes a full
//! gradient with one dual evaluation per parameter; [`finite_diff`] is the
//! independent central-difference estimate used to cross-check it.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Minimal scalar interface needed by the differentiable kernels.
///
/// Only operations with well-defined forward-mode derivatives are exposed.
/// `clamp_sym` saturates symmetrically around zero and propagates a zero
/// derivative in the saturated region, matching the convention used for the
/// arccos guard in the geodesic distance.
pub trait Scalar:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Primal (value) part.
    fn value(self) -> f64;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn acos(self) -> Self;
    fn tanh(self) -> Self;
    fn abs(self) -> Self;
    /// Pointwise maximum; at a tie the first argument wins, and the
    /// derivative follows the selected branch.
    fn max(self, other: Self) -> Self;
    /// Clamp into `[lo, hi]` with zero derivative outside the interval.
    fn clamp_to(self, lo: f64, hi: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn acos(self) -> Self {
        f64::acos(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
    #[inline]
    fn clamp_to(self, lo: f64, hi: f64) -> Self {
        self.clamp(lo, hi)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`: carries one directional
/// derivative alongside the value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    #[inline]
    pub fn constant(re: f64) -> Self {
        Dual { re, eps: 0.0 }
    }

    /// The active variable of a directional derivative: value `re`, slope 1.
    #[inline]
    pub fn variable(re: f64) -> Self {
        Dual { re, eps: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual {
            re: self.re + o.re,
            eps: self.eps + o.eps,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual {
            re: self.re - o.re,
            eps: self.eps - o.eps,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual {
            re: self.re * o.re,
            eps: self.eps * o.re + self.re * o.eps,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.re;
        Dual {
            re: self.re * inv,
            eps: (self.eps - self.re * inv * o.eps) * inv,
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual {
            re: -self.re,
            eps: -self.eps,
        }
    }
}

impl PartialOrd for Dual {
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl Scalar for Dual {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    #[inline]
    fn ln(self) -> Self {
        Dual {
            re: self.re.ln(),
            eps: self.eps / self.re,
        }
    }
    #[inline]
    fn ln_1p(self) -> Self {
        Dual {
            re: self.re.ln_1p(),
            eps: self.eps / (1.0 + self.re),
        }
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            eps: self.eps * e,
        }
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual {
            re: s,
            eps: self.eps * 0.5 / s,
        }
    }
    #[inline]
    fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            eps: self.eps * self.re.cos(),
        }
    }
    #[inline]
    fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            eps: -self.eps * self.re.sin(),
        }
    }
    #[inline]
    fn acos(self) -> Self {
        Dual {
            re: self.re.acos(),
            eps: -self.eps / (1.0 - self.re * self.re).sqrt(),
        }
    }
    #[inline]
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual {
            re: t,
            eps: self.eps * (1.0 - t * t),
        }
    }
    #[inline]
    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        if self.re >= other.re {
            self
        } else {
            other
        }
    }
    #[inline]
    fn clamp_to(self, lo: f64, hi: f64) -> Self {
        if self.re < lo {
            Dual::constant(lo)
        } else if self.re > hi {
            Dual::constant(hi)
        } else {
            self
        }
    }
}

/// Full gradient of `f` at `x` by forward mode: one dual evaluation per
/// coordinate, exact to floating-point rounding for smooth `f`.
pub fn grad<F>(f: F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[Dual]) -> Dual,
{
    let mut duals: Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        duals[i].eps = 1.0;
        out.push(f(&duals).eps);
        duals[i].eps = 0.0;
    }
    out
}

/// Central-difference gradient estimate with half-step `step` per coordinate.
///
/// Independent of [`grad`]; used as the oracle when validating analytic or
/// dual-number derivatives.
pub fn finite_diff<F>(f: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let saved = probe[i];
        probe[i] = saved + step;
        let hi = f(&probe);
        probe[i] = saved - step;
        let lo = f(&probe);
        probe[i] = saved;
        out.push((hi - lo) / (2.0 * step));
    }
    out
}

/// Relative error with an absolute floor: `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()).max(floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOLERANCE: f64 = 1e-9;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < TOLERANCE, "{a} vs {b}");
    }

    #[test]
    fn dual_arithmetic_matches_calculus() {
        // d/dx [x² · sin(x) + eˣ / x] at x = 1.3
        let f = |x: Dual| x * x * x.sin() + x.exp() / x;
        let x = 1.3_f64;
        let d = f(Dual::variable(x)).eps;
        let expected = 2.0 * x * x.sin() + x * x * x.cos() + x.exp() / x - x.exp() / (x * x);
        assert_close(d, expected);
    }

    #[test]
    fn dual_transcendentals() {
        let x = 0.7_f64;
        let v = Dual::variable(x);
        assert_close(v.ln().eps, 1.0 / x);
        assert_close(v.ln_1p().eps, 1.0 / (1.0 + x));
        assert_close(v.sqrt().eps, 0.5 / x.sqrt());
        assert_close(v.acos().eps, -1.0 / (1.0 - x * x).sqrt());
        assert_close(v.tanh().eps, 1.0 - x.tanh().powi(2));
        assert_close(v.cos().eps, -x.sin());
    }

    #[test]
    fn grad_matches_finite_diff_on_smooth_function() {
        let f_dual = |p: &[Dual]| p[0] * p[1].sin() + (p[2] * p[2]).exp();
        let f_f64 = |p: &[f64]| p[0] * p[1].sin() + (p[2] * p[2]).exp();
        let x = [0.4, -1.1, 0.3];
        let g = grad(f_dual, &x);
        let fd = finite_diff(f_f64, &x, 1e-6);
        for (a, b) in g.iter().zip(fd.iter()) {
            assert!(relative_error(*a, *b, 1e-8) < 1e-7);
        }
    }

    #[test]
    fn clamp_zeroes_derivative_when_saturated() {
        let inside = Dual::variable(0.5).clamp_to(-1.0, 1.0);
        assert_eq!(inside.eps, 1.0);
        let outside = Dual::variable(1.5).clamp_to(-1.0, 1.0);
        assert_eq!(outside.re, 1.0);
        assert_eq!(outside.eps, 0.0);
    }

    #[test]
    fn max_follows_selected_branch() {
        let a = Dual { re: 2.0, eps: 1.0 };
        let b = Dual { re: 1.0, eps: 5.0 };
        assert_eq!(a.max(b).eps, 1.0);
        assert_eq!(b.max(a).eps, 1.0);
    }

    #[test]
    fn abs_is_signed_identity_away_from_zero() {
        let neg = Dual::variable(-2.0).abs();
        assert_eq!(neg.re, 2.0);
        assert_eq!(neg.eps, -1.0);
    }
}
