//! The nonlinear collective-spin model `H = gamma*Jz^k + h*Jz`.
//!
//! Everything is expressed through the dimensionless products `beta*gamma`
//! and `beta*h`. The Dicke level `n` (0..=N) has magnetization `n - N/2` and
//! degeneracy `C(N, n)`.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Number of spin-1/2 particles `N`.
    pub spins: usize,
    /// Nonlinearity exponent `k`.
    pub nonlinearity: u32,
    pub beta_gamma: f64,
    pub beta_h: f64,
}

impl ModelSpec {
    pub fn new(spins: usize, nonlinearity: u32, beta_gamma: f64, beta_h: f64) -> Result<Self> {
        let spec = Self {
            spins,
            nonlinearity,
            beta_gamma,
            beta_h,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spins == 0 {
            return Err(Error::InvalidModel("spin count N must be >= 1".into()));
        }
        if self.nonlinearity == 0 {
            return Err(Error::InvalidModel("nonlinearity k must be >= 1".into()));
        }
        if !self.beta_gamma.is_finite() || !self.beta_h.is_finite() {
            return Err(Error::InvalidModel(
                "beta*gamma and beta*h must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn with_beta_h(&self, beta_h: f64) -> Self {
        Self { beta_h, ..*self }
    }

    pub fn with_beta_gamma(&self, beta_gamma: f64) -> Self {
        Self {
            beta_gamma,
            ..*self
        }
    }

    pub fn magnetization(&self, n: usize) -> f64 {
        n as f64 - self.spins as f64 / 2.0
    }

    /// `m^k`; exactly even in `m` for even `k`.
    pub fn nonlinear_moment(&self, n: usize) -> f64 {
        self.magnetization(n).powi(self.nonlinearity as i32)
    }

    /// The fugacity `z = exp(-beta*h)`.
    pub fn fugacity(&self) -> f64 {
        (-self.beta_h).exp()
    }

    pub fn k_is_even(&self) -> bool {
        self.nonlinearity % 2 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    pub index: usize,
    pub magnetization: f64,
    /// `C(N, n)`; exact while it fits in the f64 mantissa.
    pub degeneracy: f64,
    pub ln_degeneracy: f64,
    /// `beta*gamma*m^k + beta*h*m`.
    pub energy_beta: f64,
}

/// `ln C(N, n)`, written as `ln N! - (ln n! + ln (N-n)!)` so the value is
/// bitwise symmetric under `n -> N - n`.
pub fn ln_binomial(spins: usize, n: usize) -> f64 {
    debug_assert!(n <= spins);
    ln_factorial(spins as u64) - (ln_factorial(n as u64) + ln_factorial((spins - n) as u64))
}

fn binomial_f64(spins: usize, n: usize) -> f64 {
    let k = n.min(spins - n);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (spins - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn build_spectrum(spec: &ModelSpec) -> Vec<SpectrumLevel> {
    (0..=spec.spins)
        .map(|n| {
            let m = spec.magnetization(n);
            SpectrumLevel {
                index: n,
                magnetization: m,
                degeneracy: binomial_f64(spec.spins, n),
                ln_degeneracy: ln_binomial(spec.spins, n),
                energy_beta: spec.beta_gamma * spec.nonlinear_moment(n) + spec.beta_h * m,
            }
        })
        .collect()
}

/// The partition polynomial `sum_n p_n z^n`, `p_n = C(N,n) exp(-beta*gamma*(n-N/2)^k)`,
/// with coefficients kept as logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPolynomial {
    pub degree: usize,
    /// `ln p_n`, lowest order first.
    pub log_coeff: Vec<f64>,
    /// `max_n ln p_n`.
    pub scale: f64,
}

impl ScaledPolynomial {
    /// Builds a polynomial from raw log-coefficients (lowest order first).
    pub fn from_log_coeffs(log_coeff: Vec<f64>) -> Result<Self> {
        if log_coeff.len() < 2 {
            return Err(Error::InvalidArgument(
                "polynomial degree must be at least 1".into(),
            ));
        }
        if log_coeff.iter().any(|c| c.is_nan() || *c == f64::INFINITY) {
            return Err(Error::InvalidArgument("log-coefficients must be finite".into()));
        }
        if !log_coeff[0].is_finite() || !log_coeff[log_coeff.len() - 1].is_finite() {
            return Err(Error::InvalidArgument(
                "leading and trailing coefficients must be nonzero".into(),
            ));
        }
        let scale = log_coeff
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            degree: log_coeff.len() - 1,
            log_coeff,
            scale,
        })
    }

    /// `ln q_n = ln p_n - scale`, so `max_n q_n = 1`.
    pub fn ln_normalized(&self, n: usize) -> f64 {
        self.log_coeff[n] - self.scale
    }

    pub fn normalized(&self) -> Vec<f64> {
        (0..=self.degree)
            .map(|n| self.ln_normalized(n).exp())
            .collect()
    }

    /// `max_n ln p_n - min_n ln p_n`.
    pub fn log_span(&self) -> f64 {
        let min = self.log_coeff.iter().copied().fold(f64::INFINITY, f64::min);
        self.scale - min
    }
}

/// The partition polynomial in the fugacity. `beta_h` is not read: the
/// `exp(beta*h*N/2)` prefactor does not move the zeros.
pub fn build_polynomial(spec: &ModelSpec) -> ScaledPolynomial {
    let log_coeff: Vec<f64> = (0..=spec.spins)
        .map(|n| ln_binomial(spec.spins, n) - spec.beta_gamma * spec.nonlinear_moment(n))
        .collect();
    let scale = log_coeff
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    ScaledPolynomial {
        degree: spec.spins,
        log_coeff,
        scale,
    }
}

/// `ln Z`, including the `exp(beta*h*N/2)` prefactor.
pub fn partition_value(spec: &ModelSpec) -> f64 {
    let poly = build_polynomial(spec);
    let terms: Vec<f64> = poly
        .log_coeff
        .iter()
        .enumerate()
        .map(|(n, &c)| c - spec.beta_h * n as f64)
        .collect();
    spec.beta_h * spec.spins as f64 / 2.0 + log_sum_exp(&terms)
}

/// Thermal mean of `gamma*m^k + h*m`, with `gamma = beta_gamma/beta` and
/// `h = beta_h/beta`. This is `E_beta = -d ln Z / d beta` at fixed `gamma`, `h`.
pub fn thermo_energy_beta(spec: &ModelSpec, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")));
    }
    let levels = build_spectrum(spec);
    let logw: Vec<f64> = levels
        .iter()
        .map(|l| l.ln_degeneracy - l.energy_beta)
        .collect();
    let ln_z = log_sum_exp(&logw);
    let mut num = crate::numeric::NeumaierSum::default();
    for (l, w) in levels.iter().zip(&logw) {
        num.add((w - ln_z).exp() * l.energy_beta / beta);
    }
    Ok(num.total())
}
