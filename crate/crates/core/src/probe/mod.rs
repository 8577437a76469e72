//! Probe qubit coupled through `lambda*Jz*sigma_z`.
//!
//! The coupling is diagonal, so the qubit populations are frozen and the
//! coherence is multiplied by `g = Z~/Z` (times the free phase
//! `exp(-i*omega0*t)`), where `Z~ = Tr exp(-beta*H - i*2*lambda*t*Jz)`.
//! `|g|` vanishes exactly when `z~ = exp(-beta*h - i*2*lambda*t)` hits a
//! Lee-Yang zero.

mod scan;

pub use scan::{
    scan_joint, scan_time, BetaHGrid, DetectionHit, Heatmap, JointScan, LambdaTGrid,
    PredictedHit, ScanOptions, DEFAULT_MATCH_TOL, DEFAULT_THRESHOLD, DEFAULT_VANISHING_TOL,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_polynomial, ModelSpec};
use crate::numeric::{scaled_complex_sum, LogComplex};
use crate::rootfinder::ZeroSet;

/// Tolerance used when validating user-supplied density matrices.
pub const STATE_TOL: f64 = 1e-12;
/// Allowed negativity of `det(rho)` from rounding.
pub const POSITIVITY_TOL: f64 = 1e-14;

/// A 2x2 density matrix in the `{|up>, |down>}` basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub entries: [[Complex64; 2]; 2],
}

impl QubitState {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let state = Self { entries };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.entries;
        if e.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument("state has non-finite entries".into()));
        }
        if (e[1][0] - e[0][1].conj()).norm() > STATE_TOL
            || e[0][0].im.abs() > STATE_TOL
            || e[1][1].im.abs() > STATE_TOL
        {
            return Err(Error::InvalidArgument("state is not Hermitian".into()));
        }
        if (e[0][0].re + e[1][1].re - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidArgument("state trace is not 1".into()));
        }
        if e[0][0].re < -POSITIVITY_TOL || e[1][1].re < -POSITIVITY_TOL || self.det() < -POSITIVITY_TOL {
            return Err(Error::InvalidArgument("state is not positive semidefinite".into()));
        }
        Ok(())
    }

    /// `(|up> + |down>)/sqrt(2)`.
    pub fn plus() -> Self {
        let half = Complex64::new(0.5, 0.0);
        Self {
            entries: [[half, half], [half, half]],
        }
    }

    /// `(I + r.sigma)/2`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let [x, y, z] = r;
        let off = Complex64::new(x / 2.0, -y / 2.0);
        Self::new([
            [Complex64::new((1.0 + z) / 2.0, 0.0), off],
            [off.conj(), Complex64::new((1.0 - z) / 2.0, 0.0)],
        ])
    }

    pub fn bloch(&self) -> [f64; 3] {
        let c = self.entries[0][1];
        [
            2.0 * c.re,
            -2.0 * c.im,
            self.entries[0][0].re - self.entries[1][1].re,
        ]
    }

    pub fn coherence(&self) -> Complex64 {
        self.entries[0][1]
    }

    pub fn populations(&self) -> (f64, f64) {
        (self.entries[0][0].re, self.entries[1][1].re)
    }

    pub fn det(&self) -> f64 {
        let (p0, p1) = self.populations();
        p0 * p1 - self.coherence().norm_sqr()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    pub omega0: f64,
    pub initial_state: QubitState,
}

impl QubitSpec {
    pub fn plus(omega0: f64) -> Self {
        Self {
            omega0,
            initial_state: QubitState::plus(),
        }
    }
}

impl Default for QubitSpec {
    fn default() -> Self {
        Self::plus(0.0)
    }
}

/// Terms `ln p_n - beta*h*n` with phases `-2*lambda_t*n`, summed relative to
/// the largest term.
fn polynomial_sum(spec: &ModelSpec, lambda_t: f64) -> crate::numeric::ScaledSum {
    let poly = build_polynomial(spec);
    scaled_complex_sum(
        poly.log_coeff
            .iter()
            .enumerate()
            .map(|(n, &c)| (c - spec.beta_h * n as f64, -2.0 * lambda_t * n as f64)),
    )
}

/// `Z~ = exp((beta*h/2 + i*lambda_t)*N) * sum_n p_n z~^n`, `z~ = exp(-beta*h - i*2*lambda_t)`.
pub fn tilde_partition(spec: &ModelSpec, lambda_t: f64) -> LogComplex {
    let s = polynomial_sum(spec, lambda_t).to_log();
    let n = spec.spins as f64;
    LogComplex::new(s.ln_abs + spec.beta_h * n / 2.0, s.arg + lambda_t * n)
}

/// `g = Z~/Z` as a complex number.
pub fn coherence_factor(spec: &ModelSpec, lambda_t: f64) -> Complex64 {
    let tilde = polynomial_sum(spec, lambda_t);
    let plain = polynomial_sum(spec, 0.0);
    let phase = Complex64::from_polar(1.0, lambda_t * spec.spins as f64);
    tilde.value / plain.value.re * phase
}

/// `|Z~/Z|` from the direct spectral sums.
pub fn amplitude_ratio(spec: &ModelSpec, lambda_t: f64) -> f64 {
    let tilde = polynomial_sum(spec, lambda_t);
    tilde.value.norm() / tilde.abs_total
}

/// `|prod_i (z~ - z_i) / prod_i (z - z_i)|` over a solved zero set.
pub fn amplitude_ratio_factorized(spec: &ModelSpec, zeros: &ZeroSet, lambda_t: f64) -> f64 {
    let z = LogComplex::new(-spec.beta_h, 0.0);
    let z_tilde = LogComplex::new(-spec.beta_h, -2.0 * lambda_t);
    let mut ln = crate::numeric::NeumaierSum::default();
    for root in &zeros.roots {
        ln.add(z_tilde.ln_abs_diff(root));
        ln.add(-z.ln_abs_diff(root));
    }
    ln.total().exp()
}

/// Both computations of `|Z~/Z|`, for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePair {
    pub direct: f64,
    pub factorized: f64,
}

pub fn amplitude_pair(spec: &ModelSpec, zeros: &ZeroSet, lambda_t: f64) -> AmplitudePair {
    AmplitudePair {
        direct: amplitude_ratio(spec, lambda_t),
        factorized: amplitude_ratio_factorized(spec, zeros, lambda_t),
    }
}

/// The probe state after time `t`: populations frozen, coherence scaled by
/// `(Z~/Z) exp(-i*omega0*t)`.
pub fn evolved_state(
    spec: &ModelSpec,
    qubit: &QubitSpec,
    t: f64,
    lambda: f64,
    beta: f64,
) -> Result<QubitState> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")));
    }
    let g = coherence_factor(spec, lambda * t);
    let rho0 = &qubit.initial_state.entries;
    let off = g * Complex64::from_polar(1.0, -qubit.omega0 * t) * rho0[0][1];
    Ok(QubitState {
        entries: [[rho0[0][0], off], [off.conj(), rho0[1][1]]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(n: usize, k: u32, bg: f64, bh: f64) -> ModelSpec {
        ModelSpec::new(n, k, bg, bh).unwrap()
    }

    #[test]
    fn state_validation() {
        assert!(QubitState::new(QubitState::plus().entries).is_ok());
        let mut bad = QubitState::plus().entries;
        bad[0][0] = Complex64::new(0.7, 0.0);
        assert!(QubitState::new(bad).is_err());
        assert!(QubitState::from_bloch([1.2, 0.0, 0.0]).is_err());
        let s = QubitState::from_bloch([0.3, -0.4, 0.5]).unwrap();
        let r = s.bloch();
        assert!((r[0] - 0.3).abs() < 1e-15 && (r[1] + 0.4).abs() < 1e-15 && (r[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tilde_equals_z_at_zero_time() {
        let s = spec(6, 3, 0.2, 0.4);
        let zt = tilde_partition(&s, 0.0);
        assert!((zt.ln_abs - crate::model::partition_value(&s)).abs() < 1e-13);
        assert_eq!(zt.arg, 0.0);
        assert_eq!(amplitude_ratio(&s, 0.0), 1.0);
    }

    #[test]
    fn tilde_vanishes_at_tuned_zeros() {
        let base = spec(4, 4, 1.0, 0.0);
        let zeros = crate::rootfinder::solve_model(&base).unwrap();
        for root in &zeros.roots {
            let tuned = base.with_beta_h(-root.ln_abs);
            let zt = tilde_partition(&tuned, PI / 2.0);
            let scale = polynomial_sum(&tuned, PI / 2.0).ln_max;
            assert!(zt.ln_abs - scale - tuned.beta_h * 2.0 < (1e-10f64).ln(), "{zt:?}");
        }
    }

    #[test]
    fn diagonal_state_does_not_evolve() {
        let s = spec(5, 2, -0.4, 0.3);
        let q = QubitSpec {
            omega0: 1.3,
            initial_state: QubitState::from_bloch([0.0, 0.0, 0.6]).unwrap(),
        };
        for t in [0.0, 0.3, 2.0] {
            let rho = evolved_state(&s, &q, t, 0.8, 1.0).unwrap();
            assert_eq!(rho, q.initial_state);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let s = spec(5, 3, 0.4, 0.3);
        let q = QubitSpec::plus(2.0);
        let rho = evolved_state(&s, &q, 0.0, 0.8, 1.0).unwrap();
        assert!(rho.max_abs_diff(&q.initial_state) < 1e-15);
        assert!(evolved_state(&s, &q, 1.0, 0.8, 0.0).is_err());
    }

    #[test]
    fn linear_limit_single_vanishing() {
        // beta*gamma = 0, beta*h = 0: |Z~/Z| = |cos(lambda_t)|^N.
        let s = spec(3, 2, 0.0, 0.0);
        for lt in [0.1, 0.7, 1.2, PI / 2.0] {
            let a = amplitude_ratio(&s, lt);
            assert!((a - lt.cos().abs().powi(3)).abs() < 1e-14);
        }
    }
}
