//! Quantum Fisher information of the probe state for the parameters
//! `(lambda, beta)` at fixed `gamma`, `h` and `t`.
//!
//! With `g = Z~/Z`, `d g = g * dE` where `dE_x = E_x - E~_x` and
//! `E~_x = -d_x ln Z~`. The qubit state only moves through its coherence
//! `c = g * exp(-i*omega0*t) * [rho0]_01`, which gives closed two-level
//! expressions for the pure and the mixed case.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_spectrum, thermo_energy_beta, ModelSpec};
use crate::numeric::{ComplexSum, LogComplex, NeumaierSum};
use crate::probe::QubitSpec;
use crate::rootfinder::{solve_model, ZeroSet};

/// `|Z~| / sum |terms|` below which `Z~` counts as vanished.
pub const AT_ZERO_TOL: f64 = 1e-10;
/// `det(rho_t)` below which the pure-state expressions are used.
pub const PURITY_TOL: f64 = 1e-12;
/// `|ln|z_m||` below which a zero is taken to lie on the unit circle.
pub const UNIT_CIRCLE_SNAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Pure,
    Mixed,
    AtZero,
    ApproxPure,
    ApproxMixed,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Pure => "pure",
            Regime::Mixed => "mixed",
            Regime::AtZero => "at-zero",
            Regime::ApproxPure => "approx-pure",
            Regime::ApproxMixed => "approx-mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfimMatrix {
    pub f_ll: f64,
    pub f_bb: f64,
    pub f_lb: f64,
    pub regime: Regime,
}

impl QfimMatrix {
    pub fn zero(regime: Regime) -> Self {
        Self {
            f_ll: 0.0,
            f_bb: 0.0,
            f_lb: 0.0,
            regime,
        }
    }

    pub fn det(&self) -> f64 {
        self.f_ll * self.f_bb - self.f_lb * self.f_lb
    }

    pub fn entries(&self) -> [f64; 3] {
        [self.f_ll, self.f_bb, self.f_lb]
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn scale(&self) -> f64 {
        self.entries().iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDeviations {
    pub d_e_lambda: Complex64,
    pub d_e_beta: Complex64,
    /// Always zero: `Z` does not depend on `lambda`.
    pub e_lambda: f64,
    pub e_beta: f64,
    pub tilde_e_lambda: Complex64,
    pub tilde_e_beta: Complex64,
}

fn check_time_beta(t: f64, beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    Ok(())
}

/// Phase-weighted spectral moments at `lambda_t`, all relative to the
/// largest Boltzmann weight.
struct Moments {
    /// `sum w e^{i phi}`
    s0: Complex64,
    /// `sum m w e^{i phi}`
    s_m: Complex64,
    /// `sum (beta*E) w e^{i phi}`
    s_e: Complex64,
    /// `sum w`
    total: f64,
}

fn moments(spec: &ModelSpec, lambda_t: f64) -> Moments {
    let levels = build_spectrum(spec);
    let ln_w: Vec<f64> = levels
        .iter()
        .map(|l| l.ln_degeneracy - l.energy_beta)
        .collect();
    let ln_max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut s0, mut s_m, mut s_e) = (ComplexSum::default(), ComplexSum::default(), ComplexSum::default());
    let mut total = NeumaierSum::default();
    for (l, a) in levels.iter().zip(&ln_w) {
        let w = (a - ln_max).exp();
        let term = Complex64::from_polar(w, -2.0 * lambda_t * l.magnetization);
        s0.add(term);
        s_m.add(term * l.magnetization);
        s_e.add(term * l.energy_beta);
        total.add(w);
    }
    Moments {
        s0: s0.total(),
        s_m: s_m.total(),
        s_e: s_e.total(),
        total: total.total(),
    }
}

/// `E~`, `E` and `dE = E - E~` for `lambda`, `beta` derivatives.
pub fn energy_deviations(
    spec: &ModelSpec,
    lambda_t: f64,
    t: f64,
    beta: f64,
) -> Result<EnergyDeviations> {
    check_time_beta(t, beta)?;
    let mo = moments(spec, lambda_t);
    let rel = mo.s0.norm() / mo.total;
    if rel < AT_ZERO_TOL {
        return Err(Error::AtZero {
            relative_magnitude: rel,
        });
    }
    let i = Complex64::i();
    let tilde_e_lambda = i * 2.0 * t * mo.s_m / mo.s0;
    let tilde_e_beta = mo.s_e / mo.s0 / beta;
    let e_beta = thermo_energy_beta(spec, beta)?;
    Ok(EnergyDeviations {
        d_e_lambda: -tilde_e_lambda,
        d_e_beta: Complex64::new(e_beta, 0.0) - tilde_e_beta,
        e_lambda: 0.0,
        e_beta,
        tilde_e_lambda,
        tilde_e_beta,
    })
}

/// Pure-state entries `4|g|^2 |rho01|^2 Re(dE_a dE_b*)`.
fn pure_entries(c_abs_sq: f64, dl: Complex64, db: Complex64) -> QfimMatrix {
    let p = 4.0 * c_abs_sq;
    QfimMatrix {
        f_ll: p * dl.norm_sqr(),
        f_bb: p * db.norm_sqr(),
        f_lb: p * (dl * db.conj()).re,
        regime: Regime::Pure,
    }
}

/// Mixed-state entries; `det = [rho0]_00 [rho0]_11 - |g|^2 |rho01|^2`.
fn mixed_entries(c_abs_sq: f64, det: f64, dl: Complex64, db: Complex64) -> QfimMatrix {
    let p = 4.0 * c_abs_sq;
    let q = c_abs_sq / det;
    QfimMatrix {
        f_ll: p * (dl.norm_sqr() + q * dl.re * dl.re),
        f_bb: p * (db.norm_sqr() + q * db.re * db.re),
        f_lb: p * ((dl * db.conj()).re + q * dl.re * db.re),
        regime: Regime::Mixed,
    }
}

/// QFIM from the pure-state expressions regardless of `det(rho_t)`.
pub fn qfim_pure_branch(
    spec: &ModelSpec,
    qubit: &QubitSpec,
    t: f64,
    lambda: f64,
    beta: f64,
) -> Result<QfimMatrix> {
    let (c_abs_sq, _, dev) = branch_inputs(spec, qubit, t, lambda, beta)?;
    Ok(pure_entries(c_abs_sq, dev.d_e_lambda, dev.d_e_beta))
}

/// QFIM from the mixed-state expressions regardless of `det(rho_t)`.
pub fn qfim_mixed_branch(
    spec: &ModelSpec,
    qubit: &QubitSpec,
    t: f64,
    lambda: f64,
    beta: f64,
) -> Result<QfimMatrix> {
    let (c_abs_sq, det, dev) = branch_inputs(spec, qubit, t, lambda, beta)?;
    Ok(mixed_entries(c_abs_sq, det, dev.d_e_lambda, dev.d_e_beta))
}

fn branch_inputs(
    spec: &ModelSpec,
    qubit: &QubitSpec,
    t: f64,
    lambda: f64,
    beta: f64,
) -> Result<(f64, f64, EnergyDeviations)> {
    let dev = energy_deviations(spec, lambda * t, t, beta)?;
    let g = crate::probe::coherence_factor(spec, lambda * t);
    let c_abs_sq = g.norm_sqr() * qubit.initial_state.coherence().norm_sqr();
    let (p0, p1) = qubit.initial_state.populations();
    Ok((c_abs_sq, p0 * p1 - c_abs_sq, dev))
}

/// QFIM of the evolved probe state.
///
/// Uses the pure-state expressions when `det(rho_t) < PURITY_TOL` and the
/// mixed-state ones otherwise. When `Z~` vanishes the at-zero closed forms
/// are used instead (scaled by `4|[rho0]_01|^2`, which is 1 for `|+>`); a repeated
/// zero gives the zero matrix.
pub fn qfim_exact(
    spec: &ModelSpec,
    qubit: &QubitSpec,
    t: f64,
    lambda: f64,
    beta: f64,
) -> Result<QfimMatrix> {
    check_time_beta(t, beta)?;
    qubit.initial_state.validate()?;
    let c0 = qubit.initial_state.coherence().norm_sqr();
    let (p0, p1) = qubit.initial_state.populations();
    if c0 == 0.0 {
        let regime = if p0 * p1 < PURITY_TOL {
            Regime::Pure
        } else {
            Regime::Mixed
        };
        return Ok(QfimMatrix::zero(regime));
    }
    match branch_inputs(spec, qubit, t, lambda, beta) {
        Ok((c_abs_sq, det, dev)) => Ok(if det < PURITY_TOL {
            pure_entries(c_abs_sq, dev.d_e_lambda, dev.d_e_beta)
        } else {
            mixed_entries(c_abs_sq, det, dev.d_e_lambda, dev.d_e_beta)
        }),
        Err(Error::AtZero { .. }) => {
            let zeros = solve_model(spec)?;
            let z_tilde = LogComplex::new(-spec.beta_h, -2.0 * lambda * t);
            let (m, _) = zeros
                .nearest(&z_tilde)
                .ok_or_else(|| Error::InvalidModel("empty zero set".into()))?;
            // Near a zero of order p >= 2, |g|^2 |dE|^2 ~ |z~ - z_m|^(2p-2) -> 0.
            if zeros.multiplicity(m) > 1 {
                return Ok(QfimMatrix::zero(Regime::AtZero));
            }
            let q = qfim_at_zero(spec, &zeros, m, t, beta)?;
            Ok(QfimMatrix {
                f_ll: 4.0 * c0 * q.f_ll,
                f_bb: 4.0 * c0 * q.f_bb,
                f_lb: 4.0 * c0 * q.f_lb,
                regime: Regime::AtZero,
            })
        }
        Err(e) => Err(e),
    }
}

/// At-zero closed forms together with the quantities they are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtZeroAnalysis {
    pub zero_index: usize,
    pub zero: LogComplex,
    /// Tuned `beta*h_m = -ln|z_m|`.
    pub beta_h: f64,
    /// Tuned `lambda_m*t = -arg(z_m)/2`.
    pub lambda_t: f64,
    /// `h_m = beta*h_m / beta`.
    pub h: f64,
    /// `prod_{i != m} |z_m - z_i|^2`.
    pub numerator: LogComplex,
    /// `(prod_i (|z_m| - z_i))^2` as a complex number.
    pub denominator_raw: LogComplex,
    /// `|prod_i (|z_m| - z_i)|^2`.
    pub denominator_modulus: f64,
    pub qfim: QfimMatrix,
    /// `|d_lambda Z~|^2 / Z^2` from the spectral sums at the tuned point.
    pub f_ll_complete: f64,
    /// `|d_beta Z~|^2 / Z^2`, with `beta` also acting on the `gamma` weights.
    pub f_bb_complete: f64,
    pub f_lb_complete: f64,
}

/// At-zero QFIM for the `|+>` probe tuned onto zero `m`.
pub fn qfim_at_zero(
    spec: &ModelSpec,
    zeros: &ZeroSet,
    m: usize,
    t: f64,
    beta: f64,
) -> Result<QfimMatrix> {
    Ok(at_zero_analysis(spec, zeros, m, t, beta)?.qfim)
}

pub fn at_zero_analysis(
    spec: &ModelSpec,
    zeros: &ZeroSet,
    m: usize,
    t: f64,
    beta: f64,
) -> Result<AtZeroAnalysis> {
    check_time_beta(t, beta)?;
    if m >= zeros.len() {
        return Err(Error::InvalidArgument(format!(
            "zero index {m} out of range for {} zeros",
            zeros.len()
        )));
    }
    let multiplicity = zeros.multiplicity(m);
    if multiplicity > 1 {
        return Err(Error::DegenerateZero {
            index: m,
            multiplicity,
        });
    }
    let zm = zeros.roots[m];
    let norm = LogComplex::new(zm.ln_abs, 0.0);
    let mut ln_num = NeumaierSum::default();
    let mut ln_den = NeumaierSum::default();
    let mut arg_den = NeumaierSum::default();
    for (i, zi) in zeros.roots.iter().enumerate() {
        if i != m {
            ln_num.add(2.0 * zm.ln_abs_diff(zi));
        }
        let d = norm.sub(zi);
        ln_den.add(2.0 * d.ln_abs);
        arg_den.add(2.0 * d.arg);
    }
    let numerator = LogComplex::new(ln_num.total(), 0.0);
    let denominator_raw = LogComplex::new(ln_den.total(), arg_den.total());
    let ln_ratio = ln_num.total() - ln_den.total();
    // Zeros this close to the unit circle sit on it up to rounding.
    let beta_h = if zm.ln_abs.abs() < UNIT_CIRCLE_SNAP { 0.0 } else { -zm.ln_abs };
    let h = beta_h / beta;
    // exp(-2*beta*h_m) = |z_m|^2
    let base = (ln_ratio + 2.0 * zm.ln_abs).exp();
    let qfim = QfimMatrix {
        f_ll: 4.0 * t * t * base,
        f_bb: h * h * base,
        f_lb: 0.0,
        regime: Regime::AtZero,
    };

    let lambda_t = -zm.arg / 2.0;
    let tuned = spec.with_beta_h(beta_h);
    let mo = moments(&tuned, lambda_t);
    let d_lambda = Complex64::new(0.0, -2.0 * t) * mo.s_m / mo.total;
    let d_beta = -mo.s_e / beta / mo.total;
    Ok(AtZeroAnalysis {
        zero_index: m,
        zero: zm,
        beta_h,
        lambda_t,
        h,
        numerator,
        denominator_raw,
        denominator_modulus: ln_den.total().exp(),
        qfim,
        f_ll_complete: d_lambda.norm_sqr(),
        f_bb_complete: d_beta.norm_sqr(),
        f_lb_complete: (d_lambda * d_beta.conj()).re,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxQfim {
    pub qfim: QfimMatrix,
    /// `1 - sin^2(lambda_t N) / cosh^2(beta_h N / 2)`.
    pub g_abs_sq: f64,
    /// Even `k`, and for the pure branch `sin(lambda_t N) = 0`.
    pub valid: bool,
}

/// Large-negative-`beta*gamma` forms, where only the two extreme levels of
/// an even-`k` spectrum survive. The `|+>` probe is assumed.
pub fn qfim_small_beta_gamma(
    spec: &ModelSpec,
    t: f64,
    lambda: f64,
    beta: f64,
    branch: Branch,
) -> Result<ApproxQfim> {
    check_time_beta(t, beta)?;
    let n = spec.spins as f64;
    let lt = lambda * t;
    let h = spec.beta_h / beta;
    let x = spec.beta_h * n;
    let s = (lt * n).sin();
    let c = (lt * n).cos();
    let ch = (x / 2.0).cosh();
    let g_abs_sq = 1.0 - s * s / (ch * ch);
    let (qfim, valid) = match branch {
        Branch::Mixed => (
            QfimMatrix {
                f_ll: t * t * n * n,
                f_bb: 0.25 * h * h * n * n * s * s / (ch * ch),
                f_lb: 0.0,
                regime: Regime::ApproxMixed,
            },
            spec.k_is_even(),
        ),
        Branch::Pure => (
            QfimMatrix {
                f_ll: t * t * n * n * (1.0 - c * c / (ch * ch)),
                f_bb: 0.25 * h * h * n * n * s * s / ch.powi(4),
                f_lb: 0.5 * h * t * n * n * (2.0 * lt * n).sin() * x.sinh()
                    / (1.0 + x.cosh()).powi(2),
                regime: Regime::ApproxPure,
            },
            spec.k_is_even() && s.abs() < 1e-12,
        ),
    };
    Ok(ApproxQfim {
        qfim,
        g_abs_sq,
        valid,
    })
}

/// Two-level approximations of `dE_lambda` and `dE_beta`.
pub fn small_beta_gamma_deviations(
    spec: &ModelSpec,
    lambda_t: f64,
    t: f64,
    beta: f64,
) -> (Complex64, Complex64) {
    let n = spec.spins as f64;
    let x = spec.beta_h * n;
    let y = 2.0 * lambda_t * n;
    let den = x.cosh() + y.cos();
    let h = spec.beta_h / beta;
    let d_lambda = -t * n * Complex64::new(y.sin(), -x.sinh()) / den;
    let s = (lambda_t * n).sin();
    let d_beta = 0.5 * h * n * Complex64::new(2.0 * s * s * (x / 2.0).tanh(), y.sin()) / den;
    (d_lambda, d_beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::QubitState;

    fn spec(n: usize, k: u32, bg: f64, bh: f64) -> ModelSpec {
        ModelSpec::new(n, k, bg, bh).unwrap()
    }

    #[test]
    fn zero_time_gives_zero_matrix() {
        let s = spec(5, 4, 0.5, 0.3);
        let q = qfim_exact(&s, &QubitSpec::default(), 0.0, 0.7, 1.0).unwrap();
        assert_eq!(q.regime, Regime::Pure);
        assert!(q.scale() < 1e-20, "{q:?}");
    }

    #[test]
    fn symmetric_point_deviations() {
        let s = spec(4, 4, 0.5, 0.0);
        let d = energy_deviations(&s, 0.0, 1.3, 1.0).unwrap();
        assert!(d.d_e_beta.norm() < 1e-13);
        assert!(d.d_e_lambda.norm() < 1e-13);
        let s = spec(4, 3, 0.5, 0.4);
        let d = energy_deviations(&s, 0.0, 1.3, 1.0).unwrap();
        assert!(d.d_e_beta.norm() < 1e-13);
        assert!(d.d_e_lambda.re.abs() < 1e-15 && d.d_e_lambda.im != 0.0);
    }

    #[test]
    fn at_zero_is_reported() {
        let s = spec(3, 2, 0.0, 0.0);
        let err = energy_deviations(&s, std::f64::consts::FRAC_PI_2, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::AtZero { .. }));
    }

    #[test]
    fn diagonal_state_has_no_information() {
        let s = spec(4, 2, -0.3, 0.2);
        let q = QubitSpec {
            omega0: 0.0,
            initial_state: QubitState::from_bloch([0.0, 0.0, 0.2]).unwrap(),
        };
        assert_eq!(qfim_exact(&s, &q, 1.0, 0.4, 1.0).unwrap().scale(), 0.0);
    }

    #[test]
    fn at_zero_identities() {
        let s = spec(4, 2, -0.5, 0.0);
        let zeros = solve_model(&s).unwrap();
        for m in 0..zeros.len() {
            let a = at_zero_analysis(&s, &zeros, m, 1.0, 1.0).unwrap();
            assert_eq!(a.qfim.f_lb, 0.0);
            assert!(a.qfim.f_bb < 1e-20);
            // The denominator is real and positive for a conjugate-closed set
            // with no positive real zeros.
            assert!(a.denominator_raw.arg.abs() < 1e-9, "{a:?}");
            assert!((a.qfim.f_ll - a.f_ll_complete).abs() < 1e-9 * a.f_ll_complete);
        }
    }

    #[test]
    fn degenerate_zero_rejected() {
        let s = spec(3, 4, 0.0, 0.0);
        let zeros = solve_model(&s).unwrap();
        assert!(matches!(
            qfim_at_zero(&s, &zeros, 0, 1.0, 1.0),
            Err(Error::DegenerateZero { multiplicity: 3, .. })
        ));
    }

    #[test]
    fn exact_switches_to_at_zero() {
        let s = spec(4, 2, -0.5, 0.0);
        let zeros = solve_model(&s).unwrap();
        let z = zeros.roots[0];
        let tuned = s.with_beta_h(-z.ln_abs);
        let q = qfim_exact(&tuned, &QubitSpec::default(), 1.0, -z.arg / 2.0, 1.0).unwrap();
        assert_eq!(q.regime, Regime::AtZero);
        assert_eq!(q.f_lb, 0.0);
    }

    #[test]
    fn approximate_forms() {
        let s = spec(5, 4, -8.0, 0.3);
        let m = qfim_small_beta_gamma(&s, 0.7, 2.0, 1.0, Branch::Mixed).unwrap();
        assert_eq!(m.qfim.f_ll, 0.7 * 0.7 * 25.0);
        assert_eq!(m.qfim.f_lb, 0.0);
        // N odd, lambda_t = pi/2: f_bb at its maximum over time.
        let lt = std::f64::consts::FRAC_PI_2;
        let m = qfim_small_beta_gamma(&s, 1.0, lt, 1.0, Branch::Mixed).unwrap();
        let max = 0.25 * 0.09 * 25.0 / (0.3f64 * 2.5).cosh().powi(2);
        assert!((m.qfim.f_bb - max).abs() < 1e-15);
        let p = qfim_small_beta_gamma(&s.with_beta_h(0.4), 1.0, std::f64::consts::PI / 5.0, 1.0, Branch::Pure)
            .unwrap();
        let expect = 25.0 * (1.0 - 1.0 / 1.0f64.cosh().powi(2));
        assert!((p.qfim.f_ll - expect).abs() < 1e-12);
        assert!(p.valid && (p.g_abs_sq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deviations_match_two_level_limit() {
        let s = spec(4, 2, -8.0, 0.3);
        let d = energy_deviations(&s, 0.4, 1.0, 1.0).unwrap();
        let (dl, _) = small_beta_gamma_deviations(&s, 0.4, 1.0, 1.0);
        assert!((d.d_e_lambda - dl).norm() < 1e-3);
    }
}
