//! Brute-force reference implementations used for validation only.
//!
//! Nothing here reuses the main-path summation, root finding or evolution
//! code: sums run in plain floating point in their own order, roots come from
//! companion-matrix eigenvalues, and the probe state is evolved in the full
//! qubit-times-Dicke space.

mod eigen;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ScaledPolynomial};
use crate::numeric::LogComplex;
use crate::probe::{QubitSpec, QubitState};
use crate::qfim::{qfim_exact, QfimMatrix, Regime, PURITY_TOL};
use crate::rootfinder::ZeroSet;

pub const PRODUCT_BASIS_MAX_SPINS: usize = 16;
pub const COMPANION_MAX_DEGREE: usize = 12;
pub const FULL_EVOLUTION_MAX_SPINS: usize = 64;
pub const FD_STEP: f64 = 1e-5;
pub const FD_STEP_RANGE: (f64, f64) = (1e-8, 1e-3);
/// Eigenvalues carry absolute error near `eps * r_max`, so `1e-6` relative
/// accuracy on the smallest root needs `ln(r_max/r_min) < ln(1e-6/eps)`.
pub const COMPANION_MAX_ROOT_SPREAD: f64 = 22.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMeasure {
    Absolute,
    Relative,
}

/// Comparison of a main-path payload against an oracle payload.
///
/// `max_rel_error` is the largest absolute deviation divided by the largest
/// oracle magnitude, so near-zero entries do not blow it up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub main_value: Vec<f64>,
    pub oracle_value: Vec<f64>,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub measure: ErrorMeasure,
    pub pass: bool,
}

impl OracleReport {
    pub fn compare(
        quantity: impl Into<String>,
        main_value: Vec<f64>,
        oracle_value: Vec<f64>,
        tolerance: f64,
        measure: ErrorMeasure,
    ) -> Self {
        let same_shape = main_value.len() == oracle_value.len();
        let max_abs_error = if same_shape {
            main_value
                .iter()
                .zip(&oracle_value)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, |acc: f64, e| if e.is_nan() { f64::NAN } else { acc.max(e) })
        } else {
            f64::INFINITY
        };
        let scale = oracle_value.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let max_rel_error = if scale > 0.0 {
            max_abs_error / scale
        } else {
            max_abs_error
        };
        let err = match measure {
            ErrorMeasure::Absolute => max_abs_error,
            ErrorMeasure::Relative => max_rel_error,
        };
        Self {
            quantity: quantity.into(),
            main_value,
            oracle_value,
            max_abs_error,
            max_rel_error,
            tolerance,
            measure,
            pass: err <= tolerance,
        }
    }

    /// Report for a quantity whose deviation was measured elsewhere.
    pub fn from_error(quantity: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Self {
            quantity: quantity.into(),
            main_value: vec![error],
            oracle_value: vec![0.0],
            max_abs_error: error,
            max_rel_error: error,
            tolerance,
            measure: ErrorMeasure::Absolute,
            pass: error <= tolerance,
        }
    }
}

fn naive_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `M^k` by repeated multiplication.
fn naive_pow(m: f64, k: u32) -> f64 {
    let mut p = 1.0;
    for _ in 0..k {
        p *= m;
    }
    p
}

/// `beta * E` for total `J_z` eigenvalue `m`.
fn naive_energy_beta(spec: &ModelSpec, m: f64) -> f64 {
    spec.beta_gamma * naive_pow(m, spec.nonlinearity) + spec.beta_h * m
}

/// `ln Z` by enumerating all `2^N` product states.
pub fn product_basis_partition(spec: &ModelSpec) -> Result<f64> {
    spec.validate()?;
    if spec.spins > PRODUCT_BASIS_MAX_SPINS {
        return Err(Error::SizeExceeded {
            size: spec.spins,
            bound: PRODUCT_BASIS_MAX_SPINS,
        });
    }
    let n = spec.spins;
    let exponents: Vec<f64> = (0u32..(1u32 << n))
        .map(|config| {
            let up = config.count_ones() as f64;
            let m = (up - (n as f64 - up)) / 2.0;
            -naive_energy_beta(spec, m)
        })
        .collect();
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|x| (x - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Roots of `poly` as eigenvalues of its balanced companion matrix.
pub fn companion_roots(poly: &ScaledPolynomial) -> Result<ZeroSet> {
    let n = poly.degree;
    if n > COMPANION_MAX_DEGREE {
        return Err(Error::SizeExceeded {
            size: n,
            bound: COMPANION_MAX_DEGREE,
        });
    }
    let lead = poly.log_coeff[n];
    let spread = root_modulus_spread(&poly.log_coeff);
    if spread > COMPANION_MAX_ROOT_SPREAD {
        return Err(Error::DynamicRange { log_span: spread });
    }
    let monic: Vec<f64> = poly.log_coeff.iter().map(|c| (c - lead).exp()).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![vec![zero; n]; n];
    for j in 0..n {
        a[0][j] = Complex64::new(-monic[n - 1 - j], 0.0);
    }
    for i in 1..n {
        a[i][i - 1] = Complex64::new(1.0, 0.0);
    }
    // A library Schur without exceptional shifts stalls on the exact cyclic
    // companion of 1 + z^N, which deep negative coupling produces.
    eigen::balance(&mut a);
    let eig = eigen::hessenberg_eigenvalues(a)?;
    let residuals = eig
        .iter()
        .map(|&z| naive_relative_residual(&monic, z))
        .collect();
    Ok(ZeroSet {
        roots: eig.iter().map(|&z| LogComplex::from_complex(z)).collect(),
        residuals,
        clusters: (0..n).map(|i| vec![i]).collect(),
        attempts: 1,
    })
}

/// `ln(r_max / r_min)` from the extreme Newton-polygon slopes of the
/// log-coefficients.
fn root_modulus_spread(log_coeff: &[f64]) -> f64 {
    let n = log_coeff.len() - 1;
    let ln_max = (0..n)
        .map(|i| (log_coeff[i] - log_coeff[n]) / (n - i) as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let ln_min = (1..=n)
        .map(|i| (log_coeff[0] - log_coeff[i]) / i as f64)
        .fold(f64::INFINITY, f64::min);
    ln_max - ln_min
}

fn naive_relative_residual(coeff: &[f64], z: Complex64) -> f64 {
    let mut p = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let mut zn = Complex64::new(1.0, 0.0);
    for &c in coeff {
        p += zn * c;
        scale += (zn * c).norm();
        zn *= z;
    }
    p.norm() / scale
}

/// Matches every cluster of `main` with as many of the nearest unused
/// `oracle` roots and compares centroids, relative to `max(1, |z|)`.
///
/// Averaging over a cluster removes the `eps^(1/m)` splitting the companion
/// route shows at an `m`-fold root.
pub fn compare_zero_sets(main: &ZeroSet, oracle: &ZeroSet, tolerance: f64) -> OracleReport {
    let quantity = "zeros";
    if main.len() != oracle.len() {
        return OracleReport::from_error(quantity, f64::INFINITY, tolerance);
    }
    let mut used = vec![false; oracle.len()];
    let mut main_value = Vec::new();
    let mut oracle_value = Vec::new();
    let mut worst: f64 = 0.0;
    for cluster in &main.clusters {
        let center = main.roots[cluster[0]];
        let mut order: Vec<usize> = (0..oracle.len()).filter(|&j| !used[j]).collect();
        order.sort_by(|&a, &b| {
            center
                .scaled_distance(&oracle.roots[a])
                .total_cmp(&center.scaled_distance(&oracle.roots[b]))
        });
        let picked = &order[..cluster.len().min(order.len())];
        let mut mean = Complex64::new(0.0, 0.0);
        for &j in picked {
            used[j] = true;
            mean += oracle.roots[j].to_complex();
        }
        mean /= picked.len() as f64;
        let d = center.scaled_distance(&LogComplex::from_complex(mean));
        worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        let c = center.to_complex();
        main_value.extend([c.re, c.im]);
        oracle_value.extend([mean.re, mean.im]);
    }
    OracleReport {
        quantity: quantity.into(),
        main_value,
        oracle_value,
        max_abs_error: worst,
        max_rel_error: worst,
        tolerance,
        measure: ErrorMeasure::Relative,
        pass: worst <= tolerance,
    }
}

/// Plain floating-point sum of `Z~` terms, shifted by the largest exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveSum {
    pub ln_shift: f64,
    /// `sum_n d_n exp(-beta*E_n - ln_shift) exp(-i*2*lambda_t*m_n)`.
    pub value: Complex64,
    /// Same sum without phases.
    pub abs_total: f64,
}

impl NaiveSum {
    pub fn ln_abs(&self) -> f64 {
        self.ln_shift + self.value.norm().ln()
    }
}

/// `Z~` as a direct sum over the `N+1` collective levels, highest level first.
pub fn naive_tilde_partition(spec: &ModelSpec, lambda_t: f64) -> NaiveSum {
    let n = spec.spins;
    let levels: Vec<(f64, f64, f64)> = (0..=n)
        .rev()
        .map(|i| {
            let m = i as f64 - n as f64 / 2.0;
            (naive_binomial(n, i), -naive_energy_beta(spec, m), m)
        })
        .collect();
    let shift = levels
        .iter()
        .map(|&(d, e, _)| d.ln() + e)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs_total = 0.0;
    for &(d, e, m) in &levels {
        let w = d * (e - shift).exp();
        value += Complex64::from_polar(w, -2.0 * lambda_t * m);
        abs_total += w;
    }
    NaiveSum {
        ln_shift: shift,
        value,
        abs_total,
    }
}

/// Evolves `rho_q (x) rho_thermal` under the diagonal total Hamiltonian
/// `H + omega0*sigma_z/2 + lambda*J_z*sigma_z` and traces out the spins.
pub fn full_evolution(
    spec: &ModelSpec,
    qubit: &QubitSpec,
    t: f64,
    lambda: f64,
    beta: f64,
) -> Result<QubitState> {
    if spec.spins > FULL_EVOLUTION_MAX_SPINS {
        return Err(Error::SizeExceeded {
            size: spec.spins,
            bound: FULL_EVOLUTION_MAX_SPINS,
        });
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")));
    }
    let n = spec.spins;
    let dicke = n + 1;
    let ms: Vec<f64> = (0..dicke).map(|i| i as f64 - n as f64 / 2.0).collect();
    let beta_e: Vec<f64> = ms.iter().map(|&m| naive_energy_beta(spec, m)).collect();
    let shift = (0..dicke)
        .map(|i| naive_binomial(n, i).ln() - beta_e[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = (0..dicke)
        .map(|i| naive_binomial(n, i) * (-beta_e[i] - shift).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    // Basis index = qubit * dicke + level, qubit 0 = up (sigma_z = +1).
    let sigma = [1.0, -1.0];
    let energy = |q: usize, i: usize| sigma[q] * qubit.omega0 / 2.0 + beta_e[i] / beta + sigma[q] * lambda * ms[i];
    let rho0 = &qubit.initial_state.entries;
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            for i in 0..dicke {
                let phase = -(energy(a, i) - energy(b, i)) * t;
                *entry += rho0[a][b] * (weights[i] / z) * Complex64::from_polar(1.0, phase);
            }
        }
    }
    Ok(QubitState { entries: out })
}

/// Centered first derivatives of a vector-valued function of `(lambda, beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdGradient {
    pub value: Vec<f64>,
    pub d_lambda: Vec<f64>,
    pub d_beta: Vec<f64>,
}

pub fn central_gradient<F>(f: F, lambda: f64, beta: f64, step: f64) -> Result<FdGradient>
where
    F: Fn(f64, f64) -> Result<Vec<f64>>,
{
    if !(step >= FD_STEP_RANGE.0 && step <= FD_STEP_RANGE.1) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {step} outside [{}, {}]",
            FD_STEP_RANGE.0, FD_STEP_RANGE.1
        )));
    }
    let eval = |l: f64, b: f64| -> Result<Vec<f64>> {
        let v = f(l, b).map_err(|e| Error::StencilFailure(format!("at ({l}, {b}): {e}")))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::StencilFailure(format!("non-finite value at ({l}, {b})")));
        }
        Ok(v)
    };
    let value = eval(lambda, beta)?;
    let stencil = [
        eval(lambda + step, beta)?,
        eval(lambda - step, beta)?,
        eval(lambda, beta + step)?,
        eval(lambda, beta - step)?,
    ];
    if stencil.iter().any(|v| v.len() != value.len()) {
        return Err(Error::StencilFailure("shape changed across the stencil".into()));
    }
    let diff = |p: &[f64], m: &[f64]| -> Vec<f64> {
        p.iter().zip(m).map(|(a, b)| (a - b) / (2.0 * step)).collect()
    };
    Ok(FdGradient {
        d_lambda: diff(&stencil[0], &stencil[1]),
        d_beta: diff(&stencil[2], &stencil[3]),
        value,
    })
}

/// The model at inverse temperature `beta2`, keeping `gamma` and `h` of
/// `spec` (whose products refer to `beta`).
fn at_beta(spec: &ModelSpec, beta: f64, beta2: f64) -> ModelSpec {
    let mut s = *spec;
    s.beta_gamma = spec.beta_gamma / beta * beta2;
    s.beta_h = spec.beta_h / beta * beta2;
    s
}

/// `(dE_lambda, dE_beta)` from centered differences of `ln g`, `g = Z~/Z`.
pub fn fd_energy_deviations(
    spec: &ModelSpec,
    t: f64,
    lambda: f64,
    beta: f64,
    step: f64,
) -> Result<(Complex64, Complex64)> {
    let g = |l: f64, b: f64| {
        let s = naive_tilde_partition(&at_beta(spec, beta, b), l * t);
        s.value / s.abs_total
    };
    let g0 = g(lambda, beta);
    if g0.norm() == 0.0 {
        return Err(Error::StencilFailure("g vanishes at the centre".into()));
    }
    let grad = central_gradient(
        |l, b| {
            let r = g(l, b) / g0;
            Ok(vec![g(l, b).norm().ln(), r.arg()])
        },
        lambda,
        beta,
        step,
    )?;
    Ok((
        Complex64::new(grad.d_lambda[0], grad.d_lambda[1]),
        Complex64::new(grad.d_beta[0], grad.d_beta[1]),
    ))
}

/// QFIM from differenced Bloch vectors of [`full_evolution`].
pub fn fd_qfim(
    spec: &ModelSpec,
    qubit: &QubitSpec,
    t: f64,
    lambda: f64,
    beta: f64,
    step: f64,
) -> Result<QfimMatrix> {
    let grad = central_gradient(
        |l, b| Ok(full_evolution(&at_beta(spec, beta, b), qubit, t, l, b)?.bloch().to_vec()),
        lambda,
        beta,
        step,
    )?;
    let r = &grad.value;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (dl, db) = (&grad.d_lambda, &grad.d_beta);
    let one_minus = 1.0 - dot(r, r);
    if one_minus < 4.0 * PURITY_TOL {
        return Ok(QfimMatrix {
            f_ll: dot(dl, dl),
            f_bb: dot(db, db),
            f_lb: dot(dl, db),
            regime: Regime::Pure,
        });
    }
    let (rl, rb) = (dot(r, dl), dot(r, db));
    Ok(QfimMatrix {
        f_ll: dot(dl, dl) + rl * rl / one_minus,
        f_bb: dot(db, db) + rb * rb / one_minus,
        f_lb: dot(dl, db) + rl * rb / one_minus,
        regime: Regime::Mixed,
    })
}

/// Richardson-extrapolated limit of [`qfim_exact`] along `beta_h -> beta_h_m`
/// at the tuned `lambda_m`, for the `|+>` probe.
pub fn extrapolated_at_zero_limit(
    spec: &ModelSpec,
    zeros: &ZeroSet,
    m: usize,
    t: f64,
    beta: f64,
) -> Result<QfimMatrix> {
    const LEVELS: usize = 4;
    const FIRST_OFFSET: f64 = 1e-3;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("t must be > 0".into()));
    }
    let zm = zeros
        .roots
        .get(m)
        .ok_or_else(|| Error::InvalidArgument(format!("zero index {m} out of range")))?;
    let beta_h = -zm.ln_abs;
    let lambda = -zm.arg / 2.0 / t;
    let qubit = QubitSpec::default();
    let mut table: Vec<Vec<[f64; 3]>> = Vec::with_capacity(LEVELS);
    for i in 0..LEVELS {
        let eps = FIRST_OFFSET / (1u32 << i) as f64;
        let q = qfim_exact(&spec.with_beta_h(beta_h + eps), &qubit, t, lambda, beta)?;
        let mut row = vec![q.entries()];
        for j in 1..=i {
            let factor = ((1u32 << j) - 1) as f64;
            let prev = row[j - 1];
            let above = table[i - 1][j - 1];
            row.push(std::array::from_fn(|e| prev[e] + (prev[e] - above[e]) / factor));
        }
        table.push(row);
    }
    let best = table[LEVELS - 1][LEVELS - 1];
    Ok(QfimMatrix {
        f_ll: best[0],
        f_bb: best[1],
        f_lb: best[2],
        regime: Regime::AtZero,
    })
}
