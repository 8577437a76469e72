//! Lee-Yang zeros of the partition polynomial.
//!
//! Roots are found by Aberth-Ehrlich simultaneous iteration. Every root is
//! carried as `(ln|z|, arg z)` and every polynomial evaluation is a
//! log-scaled term sum, so zeros far outside the double range (which occur
//! for odd `k` and large `|beta*gamma|`) are located as easily as those near
//! the unit circle.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_polynomial, ModelSpec, ScaledPolynomial};
use crate::numeric::{scaled_complex_sum, ComplexSum, LogComplex};

/// Zeros closer than this (absolute, or relative beyond unit magnitude) are
/// reported as one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Default tolerance for "on the unit circle".
pub const ON_CIRCLE_TOL: f64 = 1e-6;
/// Retries after the first attempt, each with rotated starting points.
pub const MAX_RETRIES: usize = 5;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 500;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
const POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub roots: Vec<LogComplex>,
    /// `|P(z_i)| / max_n |q_n z_i^n|`, evaluated with compensated summation.
    pub residuals: Vec<f64>,
    /// Groups of root indices closer than [`CLUSTER_TOL`]; singletons included.
    pub clusters: Vec<Vec<usize>>,
    /// Number of solver attempts used (1 when the first succeeded).
    pub attempts: usize,
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.roots.iter().map(LogComplex::to_complex).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.roots.iter().map(LogComplex::norm).collect()
    }

    pub fn cluster_of(&self, index: usize) -> &[usize] {
        self.clusters
            .iter()
            .find(|c| c.contains(&index))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn multiplicity(&self, index: usize) -> usize {
        self.cluster_of(index).len()
    }

    /// Root indices ordered by argument in `(-pi, pi]`, ties broken by norm.
    pub fn order_by_arg(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.roots.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ra, rb) = (&self.roots[a], &self.roots[b]);
            ra.arg
                .total_cmp(&rb.arg)
                .then(ra.ln_abs.total_cmp(&rb.ln_abs))
        });
        idx
    }

    /// Index of the root nearest to `z` in scaled distance.
    pub fn nearest(&self, z: &LogComplex) -> Option<(usize, f64)> {
        self.roots
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.scaled_distance(z)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Value of `P(z)/(z P'(z))` and the relative residual at one point.
#[derive(Debug, Clone, Copy)]
struct Eval {
    newton_ratio: Complex64,
    residual: f64,
    /// Rounding bound on `residual`, from the absolute term sum.
    noise: f64,
}

fn evaluate(ln_q: &[f64], z: &LogComplex) -> Eval {
    evaluate_derivative(ln_q, z, 0)
}

/// `falling(n, d) = n (n-1) ... (n-d+1)`.
fn falling(n: usize, d: usize) -> f64 {
    (0..d).map(|i| n as f64 - i as f64).product()
}

/// Newton ratio for the `order`-th derivative: `P^(d)(z) / (z P^(d+1)(z))`,
/// and the relative size of `z^d P^(d)(z)`.
fn evaluate_derivative(ln_q: &[f64], z: &LogComplex, order: usize) -> Eval {
    let terms = ln_q
        .iter()
        .enumerate()
        .map(|(n, &c)| (c + n as f64 * z.ln_abs, n as f64 * z.arg));
    let ln_max = terms
        .clone()
        .map(|(a, _)| a)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p = ComplexSum::default();
    let mut dp = ComplexSum::default();
    let mut abs_sum = 0.0;
    let count = ln_q.len() as f64;
    for (n, (a, phi)) in terms.enumerate() {
        let w = Complex64::from_polar((a - ln_max).exp(), phi);
        p.add(w * falling(n, order));
        dp.add(w * falling(n, order + 1));
        abs_sum += w.norm() * falling(n, order);
    }
    let (p, dp) = (p.total(), dp.total());
    Eval {
        newton_ratio: p / dp,
        residual: p.norm(),
        noise: 2.0 * count * f64::EPSILON * abs_sum,
    }
}

/// Relative residual `|P(z)| / max_n |q_n z^n|` of a polynomial given by
/// log-coefficients.
pub fn relative_residual(poly: &ScaledPolynomial, z: &LogComplex) -> f64 {
    let s = scaled_complex_sum(
        poly.log_coeff
            .iter()
            .enumerate()
            .map(|(n, &c)| (c + n as f64 * z.ln_abs, n as f64 * z.arg)),
    );
    s.relative_to_max()
}

/// Smallest relative residual that `z` can be certified to when stored in
/// log-polar form: a rounding of `ln|z|` or `arg z` moves the `n`-th term by
/// `n` times that rounding.
pub fn residual_floor(poly: &ScaledPolynomial, z: &LogComplex) -> f64 {
    let ln_terms: Vec<f64> = poly
        .log_coeff
        .iter()
        .enumerate()
        .map(|(n, &c)| c + n as f64 * z.ln_abs)
        .collect();
    let ln_max = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weighted: f64 = ln_terms
        .iter()
        .enumerate()
        .map(|(n, a)| n as f64 * (a - ln_max).exp())
        .sum();
    f64::EPSILON * (z.ln_abs.abs() + z.arg.abs()) * weighted
}

/// Upper convex hull of `(n, ln q_n)`: each edge `(i, j)` carries `j - i`
/// roots of modulus `exp((ln q_i - ln q_j)/(j - i))`.
fn newton_polygon(ln_q: &[f64]) -> Vec<(usize, usize)> {
    let mut hull: Vec<usize> = Vec::with_capacity(ln_q.len());
    for n in 0..ln_q.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b - a) as f64 * (ln_q[n] - ln_q[a]) - (n - a) as f64 * (ln_q[b] - ln_q[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(n);
    }
    hull.windows(2).map(|w| (w[0], w[1])).collect()
}

fn initial_guesses(ln_q: &[f64], rotation: f64) -> Vec<LogComplex> {
    let degree = ln_q.len() - 1;
    let mut guesses = Vec::with_capacity(degree);
    for (i, j) in newton_polygon(ln_q) {
        let count = j - i;
        let ln_r = (ln_q[i] - ln_q[j]) / count as f64;
        for s in 0..count {
            let theta = TAU * s as f64 / count as f64
                + TAU * i as f64 / degree as f64
                + 0.4
                + rotation;
            guesses.push(LogComplex::new(ln_r, theta));
        }
    }
    guesses
}

/// `1/(1 - u)` with `u` given in log-polar form.
fn inv_one_minus(u: &LogComplex) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if u.ln_abs <= 0.0 {
        one / (one - u.to_complex())
    } else {
        let v = Complex64::from_polar((-u.ln_abs).exp(), -u.arg);
        -v / (one - v)
    }
}

fn aberth(ln_q: &[f64], roots: &mut [LogComplex], max_iter: usize) -> usize {
    let degree = roots.len();
    let eps = f64::EPSILON;
    let converged_residual = 2.0 * (degree + 1) as f64 * eps;
    let mut done = vec![false; degree];
    for iter in 0..max_iter {
        let mut active = false;
        for i in 0..degree {
            if done[i] {
                continue;
            }
            let ev = evaluate(ln_q, &roots[i]);
            if ev.residual <= converged_residual {
                done[i] = true;
                continue;
            }
            active = true;
            let rho = ev.newton_ratio;
            let step = if !rho.is_finite() {
                // Derivative terms underflowed: the iterate sits far inside
                // the smallest root. Push it outward.
                Complex64::new(-1.0, 0.0)
            } else {
                let mut repulsion = Complex64::new(0.0, 0.0);
                for j in 0..degree {
                    if j != i {
                        let term = inv_one_minus(&roots[j].div(&roots[i]));
                        if term.is_finite() {
                            repulsion += term;
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - rho * repulsion;
                if denom.norm() == 0.0 || !denom.is_finite() {
                    rho
                } else {
                    rho / denom
                }
            };
            let mut factor = Complex64::new(1.0, 0.0) - step;
            if factor.norm() < 1e-12 {
                factor = Complex64::new(1e-3, 0.0);
            }
            let factor = LogComplex::from_complex(factor);
            roots[i] = roots[i].mul(&factor);
            if step.norm() <= 4.0 * eps {
                done[i] = true;
            }
        }
        if !active {
            return iter + 1;
        }
    }
    max_iter
}

fn polish(ln_q: &[f64], root: &mut LogComplex) {
    let mut current = evaluate(ln_q, root);
    for _ in 0..POLISH_STEPS {
        let rho = current.newton_ratio;
        if !rho.is_finite() || current.residual == 0.0 {
            return;
        }
        let candidate = root.mul(&LogComplex::from_complex(Complex64::new(1.0, 0.0) - rho));
        let next = evaluate(ln_q, &candidate);
        if next.residual < current.residual {
            *root = candidate;
            current = next;
        } else {
            return;
        }
    }
}

fn find_clusters(ln_q: &[f64], roots: &[LogComplex]) -> Vec<Vec<usize>> {
    let degree = roots.len();
    // Newton inclusion radii, widened by the rounding noise in P so that the
    // scattered members of a multiple root overlap.
    let ln_radius: Vec<f64> = roots
        .iter()
        .map(|z| {
            let ev = evaluate(ln_q, z);
            let widen = (ev.residual + ev.noise) / ev.residual.max(f64::MIN_POSITIVE);
            (degree as f64).ln() + ev.newton_ratio.norm().ln() + widen.ln() + z.ln_abs
        })
        .collect();
    let mut parent: Vec<usize> = (0..degree).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..degree {
        for j in (i + 1)..degree {
            let floor = roots[i].ln_abs.min(roots[j].ln_abs).max(0.0);
            let dist = roots[i].scaled_distance(&roots[j]);
            let radii = (ln_radius[i] - floor).exp() + (ln_radius[j] - floor).exp();
            if dist <= CLUSTER_TOL + radii {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; degree];
    for i in 0..degree {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[r]].push(i);
    }
    groups
}

/// Replaces the members of a numerically multiple root by one point: their
/// centroid, refined by Newton steps on `P^(m-1)`, which has a simple root
/// at an `m`-fold zero of `P`.
fn merge_cluster(ln_q: &[f64], roots: &mut [LogComplex], members: &[usize], tol: f64) {
    let reference = roots[members[0]];
    let mut offset = Complex64::new(0.0, 0.0);
    for &i in members {
        offset += roots[i].ratio(&reference) - 1.0;
    }
    offset /= members.len() as f64;
    let mut centre = reference.mul(&LogComplex::from_complex(offset + 1.0));
    let order = members.len() - 1;
    let mut current = evaluate_derivative(ln_q, &centre, order);
    for _ in 0..20 {
        let rho = current.newton_ratio;
        if !rho.is_finite() || current.residual == 0.0 {
            break;
        }
        let candidate = centre.mul(&LogComplex::from_complex(Complex64::new(1.0, 0.0) - rho));
        let next = evaluate_derivative(ln_q, &candidate, order);
        if next.residual >= current.residual {
            break;
        }
        centre = candidate;
        current = next;
    }
    if evaluate(ln_q, &centre).residual <= tol {
        for &i in members {
            roots[i] = centre;
        }
    }
}

fn attempt(poly: &ScaledPolynomial, tol: f64, max_iter: usize, rotation: f64) -> (Vec<LogComplex>, Vec<f64>) {
    let ln_q: Vec<f64> = (0..=poly.degree).map(|n| poly.ln_normalized(n)).collect();
    let mut roots = initial_guesses(&ln_q, rotation);
    aberth(&ln_q, &mut roots, max_iter);
    for r in roots.iter_mut() {
        polish(&ln_q, r);
    }
    // Merging can join clusters that were split before, so regroup until stable.
    for _ in 0..roots.len() {
        let before = roots.clone();
        for cluster in find_clusters(&ln_q, &roots) {
            if cluster.len() > 1 {
                merge_cluster(&ln_q, &mut roots, &cluster, tol);
            }
        }
        if roots == before {
            break;
        }
    }
    let residuals = roots.iter().map(|z| relative_residual(poly, z)).collect();
    (roots, residuals)
}

/// All `degree` zeros of `poly`, each certified to relative residual
/// `<= tol` plus its [`residual_floor`].
pub fn solve_roots(poly: &ScaledPolynomial, tol: f64, max_iter: usize) -> Result<ZeroSet> {
    solve_roots_seeded(poly, tol, max_iter, 0)
}

/// As [`solve_roots`], with the retry schedule offset by `seed` golden-angle steps.
pub fn solve_roots_seeded(
    poly: &ScaledPolynomial,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<ZeroSet> {
    if poly.degree < 1 {
        return Err(Error::InvalidArgument("degree must be >= 1".into()));
    }
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0, 1e-4], got {tol}"
        )));
    }
    let mut worst = f64::INFINITY;
    for a in 0..=MAX_RETRIES {
        let rotation = GOLDEN_ANGLE * (a as u64).wrapping_add(seed) as f64;
        let (roots, residuals) = attempt(poly, tol, max_iter, rotation);
        let max_res = residuals.iter().copied().fold(0.0, f64::max);
        let certified = roots
            .iter()
            .zip(&residuals)
            .all(|(z, r)| *r <= tol + residual_floor(poly, z));
        if certified && roots.iter().all(|r| !r.ln_abs.is_nan() && !r.arg.is_nan()) {
            let ln_q: Vec<f64> = (0..=poly.degree).map(|n| poly.ln_normalized(n)).collect();
            let clusters = find_clusters(&ln_q, &roots);
            return Ok(ZeroSet {
                roots,
                residuals,
                clusters,
                attempts: a + 1,
            });
        }
        if max_res.is_finite() {
            worst = worst.min(max_res);
        }
    }
    Err(Error::NonConvergence {
        attempts: MAX_RETRIES + 1,
        worst_residual: worst,
    })
}

/// Zeros of the model's partition polynomial with default solver settings.
pub fn solve_model(spec: &ModelSpec) -> Result<ZeroSet> {
    solve_roots(&build_polynomial(spec), DEFAULT_TOL, DEFAULT_MAX_ITER)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Check {
    /// `N` odd and `k` even.
    pub applicable: bool,
    /// `|P(-1)|` relative to the largest term on the unit circle.
    pub relative_residual: f64,
    /// `(-1)^n + (-1)^(N-n) = 0` and `p_n = p_(N-n)` for every paired `n`.
    pub pairing_identity: bool,
    pub holds: bool,
}

pub const THEOREM1_TOL: f64 = 1e-12;

/// Checks that `z = -1` is a zero when `N` is odd and `k` even.
pub fn verify_theorem1(spec: &ModelSpec) -> Theorem1Check {
    let poly = build_polynomial(spec);
    let n_spins = spec.spins;
    let applicable = n_spins % 2 == 1 && spec.k_is_even();
    let mut sum = ComplexSum::default();
    for n in 0..=n_spins {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(Complex64::new(sign * poly.ln_normalized(n).exp(), 0.0));
    }
    let relative_residual = sum.total().norm();
    let pairing_identity = (0..=n_spins).all(|n| {
        let sign_sum = (-1i64).pow(n as u32) + (-1i64).pow((n_spins - n) as u32);
        sign_sum == 0 && poly.log_coeff[n] == poly.log_coeff[n_spins - n]
    });
    Theorem1Check {
        applicable,
        relative_residual,
        pairing_identity,
        holds: applicable && pairing_identity && relative_residual < THEOREM1_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VietaCheck {
    /// `sum_i ln|z_i|`.
    pub ln_measured: f64,
    /// `beta*gamma*((N/2)^k - (-N/2)^k)`.
    pub ln_predicted: f64,
}

impl VietaCheck {
    pub fn measured(&self) -> f64 {
        self.ln_measured.exp()
    }

    pub fn predicted(&self) -> f64 {
        self.ln_predicted.exp()
    }

    /// `|measured/predicted - 1|`, computed in the log domain.
    pub fn relative_error(&self) -> f64 {
        (self.ln_measured - self.ln_predicted).exp_m1().abs()
    }
}

/// Product of zero norms against the ratio of extreme coefficients.
pub fn vieta_norm_product(zeros: &ZeroSet, spec: &ModelSpec) -> VietaCheck {
    let half = spec.spins as f64 / 2.0;
    let k = spec.nonlinearity as i32;
    let ln_predicted = spec.beta_gamma * (half.powi(k) - (-half).powi(k));
    let mut acc = crate::numeric::NeumaierSum::default();
    for r in &zeros.roots {
        acc.add(r.ln_abs);
    }
    VietaCheck {
        ln_measured: acc.total(),
        ln_predicted,
    }
}

/// `max_i ||z_i| - 1|`.
pub fn unit_circle_deviation(zeros: &ZeroSet) -> f64 {
    zeros
        .roots
        .iter()
        .map(|r| r.ln_abs.exp_m1().abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearchResult {
    pub beta_gamma_critical: f64,
    /// Final bisection bracket; `low` carries the on-circle indicator of the
    /// original lower endpoint.
    pub bracket: (f64, f64),
    /// `(beta*gamma, max_i ||z_i| - 1|)` on a uniform grid over the input bracket.
    pub deviation_profile: Vec<(f64, f64)>,
    pub on_circle_tol: f64,
}

pub const CRITICAL_BRACKET_WIDTH: f64 = 1e-6;
pub const CRITICAL_PROFILE_POINTS: usize = 201;

fn deviation_at(spins: usize, k: u32, beta_gamma: f64) -> Result<f64> {
    let spec = ModelSpec::new(spins, k, beta_gamma, 0.0)?;
    Ok(unit_circle_deviation(&solve_model(&spec)?))
}

/// Bisection for the `beta*gamma` at which the zeros leave the unit circle.
pub fn find_critical_beta_gamma(
    spins: usize,
    k: u32,
    on_circle_tol: f64,
    bracket: (f64, f64),
) -> Result<CriticalSearchResult> {
    find_critical_beta_gamma_with(spins, k, on_circle_tol, bracket, CRITICAL_PROFILE_POINTS)
}

pub fn find_critical_beta_gamma_with(
    spins: usize,
    k: u32,
    on_circle_tol: f64,
    bracket: (f64, f64),
    profile_points: usize,
) -> Result<CriticalSearchResult> {
    if k % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "critical search needs even nonlinearity, got k = {k}"
        )));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bracket must satisfy low < high, got ({lo}, {hi})"
        )));
    }
    if profile_points < 100 {
        return Err(Error::InvalidArgument(
            "deviation profile needs at least 100 points".into(),
        ));
    }
    let (a, b) = bracket;
    let profile = (0..profile_points)
        .into_par_iter()
        .map(|i| {
            let bg = a + (b - a) * i as f64 / (profile_points - 1) as f64;
            Ok((bg, deviation_at(spins, k, bg)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let on = |dev: f64| dev < on_circle_tol;
    let on_lo = on(profile[0].1);
    let on_hi = on(profile[profile_points - 1].1);
    if on_lo == on_hi {
        return Err(Error::BracketInvalid {
            low: lo,
            high: hi,
            indicator: on_lo,
        });
    }
    // The indicator need not be monotone (at beta*gamma = 0 every zero sits at
    // -1), so bisect inside the first profile cell where it flips.
    let flip = profile
        .iter()
        .position(|&(_, dev)| on(dev) != on_lo)
        .expect("endpoints differ");
    lo = profile[flip - 1].0;
    hi = profile[flip].0;
    while hi - lo > CRITICAL_BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if on(deviation_at(spins, k, mid)?) == on_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalSearchResult {
        beta_gamma_critical: 0.5 * (lo + hi),
        bracket: (lo, hi),
        deviation_profile: profile,
        on_circle_tol,
    })
}

/// The `N`-th roots of `-1`, `exp(i*pi*(2j+1)/N)`.
pub fn roots_of_minus_one(spins: usize) -> Vec<Complex64> {
    (0..spins)
        .map(|j| Complex64::from_polar(1.0, PI * (2 * j + 1) as f64 / spins as f64))
        .collect()
}
