//! Log-domain arithmetic shared by the partition, root and probe code.
//!
//! Partition-function terms routinely span hundreds of e-folds, so sums are
//! taken relative to their largest term and complex results are carried as a
//! log-magnitude plus a phase.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex number `exp(ln_abs + i*arg)`.
///
/// Zero is represented by `ln_abs = -inf`. `arg` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        ln_abs: f64::NEG_INFINITY,
        arg: 0.0,
    };

    pub fn new(ln_abs: f64, arg: f64) -> Self {
        Self {
            ln_abs,
            arg: wrap_phase(arg),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        Self {
            ln_abs: z.norm().ln(),
            arg: z.arg(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn norm(&self) -> f64 {
        self.ln_abs.exp()
    }

    /// Converts to an ordinary complex number; overflows to infinity or
    /// underflows to zero outside the double range.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.ln_abs, -self.arg)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.ln_abs + other.ln_abs, self.arg + other.arg)
    }

    pub fn div(&self, other: &Self) -> Self {
        Self::new(self.ln_abs - other.ln_abs, self.arg - other.arg)
    }

    pub fn powi(&self, n: i32) -> Self {
        Self::new(self.ln_abs * n as f64, self.arg * n as f64)
    }

    /// `self / other` as an ordinary complex number, valid whenever the
    /// ratio itself is representable.
    pub fn ratio(&self, other: &Self) -> Complex64 {
        Complex64::from_polar((self.ln_abs - other.ln_abs).exp(), self.arg - other.arg)
    }

    /// `ln |self - other|`, stable for operands of wildly different size.
    pub fn ln_abs_diff(&self, other: &Self) -> f64 {
        let (big, small) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        if big.is_zero() {
            return f64::NEG_INFINITY;
        }
        let u = small.ratio(big);
        big.ln_abs + (Complex64::new(1.0, 0.0) - u).norm().ln()
    }

    /// `self - other`, stable for operands of wildly different size.
    pub fn sub(&self, other: &Self) -> Self {
        if other.is_zero() {
            return *self;
        }
        if self.is_zero() {
            return Self::new(other.ln_abs, other.arg + PI);
        }
        if self.ln_abs >= other.ln_abs {
            let u = Complex64::new(1.0, 0.0) - other.ratio(self);
            self.mul(&Self::from_complex(u))
        } else {
            let u = self.ratio(other) - Complex64::new(1.0, 0.0);
            other.mul(&Self::from_complex(u))
        }
    }

    /// `|self - other|` measured relative to `max(1, min(|self|, |other|))`.
    ///
    /// For representable operands of order one this is the plain absolute
    /// distance; for very large operands it becomes a relative distance.
    pub fn scaled_distance(&self, other: &Self) -> f64 {
        let floor = self.ln_abs.min(other.ln_abs).max(0.0);
        (self.ln_abs_diff(other) - floor).exp()
    }
}

/// Wraps a phase into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let mut r = phi.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// `ln sum exp(x_i)`; returns `-inf` for an empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let mut acc = NeumaierSum::default();
    for &x in xs {
        acc.add((x - max).exp());
    }
    max + acc.total().ln()
}

/// Neumaier-compensated real summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Componentwise compensated complex summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }
}

/// Result of summing `exp(a_n + i phi_n)` relative to the largest term.
#[derive(Debug, Clone, Copy)]
pub struct ScaledSum {
    /// Log of the largest term magnitude.
    pub ln_max: f64,
    /// The sum divided by `exp(ln_max)`.
    pub value: Complex64,
    /// Sum of term magnitudes divided by `exp(ln_max)`.
    pub abs_total: f64,
}

impl ScaledSum {
    pub fn to_log(&self) -> LogComplex {
        let v = LogComplex::from_complex(self.value);
        LogComplex::new(self.ln_max + v.ln_abs, v.arg)
    }

    /// `|sum| / max term`.
    pub fn relative_to_max(&self) -> f64 {
        self.value.norm()
    }
}

/// Sums `exp(log_mag[n] + i*phase[n])` with compensation.
pub fn scaled_complex_sum<I>(terms: I) -> ScaledSum
where
    I: IntoIterator<Item = (f64, f64)>,
    I::IntoIter: Clone,
{
    let iter = terms.into_iter();
    let ln_max = iter
        .clone()
        .map(|(a, _)| a)
        .fold(f64::NEG_INFINITY, f64::max);
    if !ln_max.is_finite() {
        return ScaledSum {
            ln_max,
            value: Complex64::new(0.0, 0.0),
            abs_total: 0.0,
        };
    }
    let mut acc = ComplexSum::default();
    let mut abs = NeumaierSum::default();
    for (a, phi) in iter {
        let mag = (a - ln_max).exp();
        acc.add(Complex64::from_polar(mag, phi));
        abs.add(mag);
    }
    ScaledSum {
        ln_max,
        value: acc.total(),
        abs_total: abs.total(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(7.0) - (7.0 - TAU)).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.1, -2.0, 3.5];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn log_sum_exp_huge_arguments() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn ln_abs_diff_extreme_scales() {
        let a = LogComplex::new(800.0, 0.3);
        let b = LogComplex::new(-5.0, 1.0);
        assert!((a.ln_abs_diff(&b) - 800.0).abs() < 1e-12);
        let c = LogComplex::from_complex(Complex64::new(-1.0, 0.0));
        let d = LogComplex::from_complex(Complex64::new(-1.0, 1e-9));
        assert!((c.scaled_distance(&d) - 1e-9).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_cancellation() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.total(), 2.0);
    }
}
