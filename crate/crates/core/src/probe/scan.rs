//! Detection protocols: a time-only scan at fixed `beta*h` and a joint
//! `(beta*h, lambda*t)` scan.
//!
//! Coarse grids are evaluated with the direct spectral sum. Every coarse
//! local minimum is then refined by golden-section search on the log of the
//! factorized amplitude, which stays well conditioned next to (possibly
//! multiple) zeros where the direct sum bottoms out at rounding level.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_polynomial, ModelSpec};
use crate::numeric::{scaled_complex_sum, LogComplex, NeumaierSum};
use crate::rootfinder::{solve_model, ZeroSet, ON_CIRCLE_TOL};

pub const DEFAULT_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_VANISHING_TOL: f64 = 1e-8;
pub const DEFAULT_MATCH_TOL: f64 = 1e-6;
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;
pub const DEFAULT_LAMBDA_T_POINTS: usize = 2001;
pub const DEFAULT_BETA_H_POINTS: usize = 801;
pub const DEFAULT_BETA_H_RANGE: (f64, f64) = (-20.0, 20.0);

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const MAX_ALTERNATIONS: usize = 60;

/// Uniform grid over `lambda*t`. A grid spanning exactly one period `[a, a+pi]`
/// is treated as periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaTGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Default for LambdaTGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: PI,
            points: DEFAULT_LAMBDA_T_POINTS,
        }
    }
}

impl LambdaTGrid {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.points < 3 || !(self.end > self.start) || !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda_t grid needs >= 3 points over a finite increasing range, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| self.start + h * i as f64).collect()
    }

    pub fn is_periodic(&self) -> bool {
        ((self.end - self.start) - PI).abs() < 1e-12
    }
}

/// Uniform grid over `beta*h`; a single point is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaHGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Default for BetaHGrid {
    fn default() -> Self {
        Self {
            start: DEFAULT_BETA_H_RANGE.0,
            end: DEFAULT_BETA_H_RANGE.1,
            points: DEFAULT_BETA_H_POINTS,
        }
    }
}

impl BetaHGrid {
    pub fn single(beta_h: f64) -> Self {
        Self {
            start: beta_h,
            end: beta_h,
            points: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.start.is_finite()
            && self.end.is_finite()
            && ((self.points == 1 && self.start == self.end)
                || (self.points >= 2 && self.end > self.start));
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid beta_h grid {self:?}")));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        if self.points == 1 {
            0.0
        } else {
            (self.end - self.start) / (self.points - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| self.start + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Refined minima at or above this amplitude are discarded.
    pub threshold: f64,
    /// Refined minima below this are flagged as genuine zeros.
    pub vanishing_tol: f64,
    /// Maximum distance between `recovered_z` and a solved zero, relative
    /// to `max(1, |z|)`.
    pub match_tol: f64,
    /// Target accuracy of the refined coordinates.
    pub refine_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            vanishing_tol: DEFAULT_VANISHING_TOL,
            match_tol: DEFAULT_MATCH_TOL,
            refine_tol: DEFAULT_REFINE_TOL,
        }
    }
}

impl ScanOptions {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.match_tol > 0.0) || !(self.refine_tol > 0.0) || !(self.vanishing_tol > 0.0) {
            return Err(Error::InvalidArgument("scan tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Where a zero should show up in the joint scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedHit {
    pub zero_index: usize,
    pub beta_h: f64,
    pub lambda_t: f64,
    pub on_unit_circle: bool,
}

impl PredictedHit {
    pub fn for_zero(zeros: &ZeroSet, index: usize) -> Self {
        let z = zeros.roots[index];
        Self {
            zero_index: index,
            beta_h: -z.ln_abs,
            lambda_t: (-z.arg / 2.0).rem_euclid(PI),
            on_unit_circle: z.ln_abs.abs() < ON_CIRCLE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionHit {
    /// Refined time coordinate, reduced to `[0, pi)`.
    pub lambda_t: f64,
    pub beta_h: f64,
    /// Direct `|Z~/Z|` at the refined point.
    pub amplitude: f64,
    /// `amplitude < vanishing_tol`.
    pub vanishing: bool,
    pub matched_zero: Option<usize>,
    /// Distance to the matched (or nearest) zero, relative to `max(1, |z|)`.
    pub match_distance: f64,
    /// Number of coincident zeros at the matched location.
    pub multiplicity: usize,
    /// `exp(-beta_h - i*2*lambda_t)`.
    pub recovered_z: Complex64,
    pub predicted: Option<PredictedHit>,
}

/// Amplitudes on a `(beta_h, lambda_t)` grid, row-major over `beta_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub beta_h: Vec<f64>,
    pub lambda_t: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.amplitude[row * self.lambda_t.len() + col]
    }

    pub fn min(&self) -> f64 {
        self.amplitude.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointScan {
    pub heatmap: Heatmap,
    pub hits: Vec<DetectionHit>,
    pub predicted: Vec<PredictedHit>,
    pub zeros: ZeroSet,
}

/// Direct and factorized amplitude evaluators sharing one set of
/// coefficients, so that grid sweeps do not rebuild the polynomial.
struct Field<'a> {
    log_coeff: Vec<f64>,
    zeros: &'a ZeroSet,
}

impl<'a> Field<'a> {
    fn new(spec: &ModelSpec, zeros: &'a ZeroSet) -> Self {
        Self {
            log_coeff: build_polynomial(spec).log_coeff,
            zeros,
        }
    }

    fn direct(&self, beta_h: f64, lambda_t: f64) -> f64 {
        let s = scaled_complex_sum(
            self.log_coeff
                .iter()
                .enumerate()
                .map(|(n, &c)| (c - beta_h * n as f64, -2.0 * lambda_t * n as f64)),
        );
        s.value.norm() / s.abs_total
    }

    fn ln_factorized(&self, beta_h: f64, lambda_t: f64) -> f64 {
        let z = LogComplex::new(-beta_h, 0.0);
        let z_tilde = LogComplex::new(-beta_h, -2.0 * lambda_t);
        let mut acc = NeumaierSum::default();
        for root in &self.zeros.roots {
            acc.add(z_tilde.ln_abs_diff(root));
            acc.add(-z.ln_abs_diff(root));
        }
        acc.total()
    }
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    // The bracket endpoints themselves are never sampled; compare the
    // midpoint with the best interior point seen last.
    if f(m) <= fc.min(fd) {
        m
    } else if fc <= fd {
        c
    } else {
        d
    }
}

/// Steps across grid cells (including diagonals) while the objective
/// decreases, so that minima produced by rounding noise in the coarse map
/// drain into the basin of the zero they sit next to.
fn descend(
    mut f: impl FnMut(f64, f64) -> f64,
    start: (f64, f64),
    step: (f64, f64),
    max_steps: usize,
) -> (f64, f64) {
    let (mut x, mut y) = start;
    let mut best = f(x, y);
    for _ in 0..max_steps {
        let mut next = None;
        for dx in [-1.0, 0.0, 1.0] {
            for dy in [-1.0, 0.0, 1.0] {
                if (dx == 0.0 && dy == 0.0) || (dx != 0.0 && step.0 == 0.0) {
                    continue;
                }
                let (cx, cy) = (x + dx * step.0, y + dy * step.1);
                let v = f(cx, cy);
                if v < best {
                    best = v;
                    next = Some((cx, cy));
                }
            }
        }
        match next {
            Some(p) => (x, y) = p,
            None => break,
        }
    }
    (x, y)
}

fn recovered(beta_h: f64, lambda_t: f64) -> LogComplex {
    LogComplex::new(-beta_h, -2.0 * lambda_t)
}

fn build_hit(
    field: &Field,
    zeros: &ZeroSet,
    beta_h: f64,
    lambda_t: f64,
    opts: &ScanOptions,
) -> DetectionHit {
    let lambda_t = lambda_t.rem_euclid(PI);
    let amplitude = field.direct(beta_h, lambda_t);
    let z = recovered(beta_h, lambda_t);
    let (matched_zero, match_distance) = match zeros.nearest(&z) {
        Some((i, d)) if d <= opts.match_tol => (Some(i), d),
        Some((_, d)) => (None, d),
        None => (None, f64::INFINITY),
    };
    let multiplicity = matched_zero.map_or(0, |i| zeros.multiplicity(i).max(1));
    DetectionHit {
        lambda_t,
        beta_h,
        amplitude,
        vanishing: amplitude < opts.vanishing_tol,
        matched_zero,
        match_distance,
        multiplicity,
        recovered_z: z.to_complex(),
        predicted: matched_zero.map(|i| PredictedHit::for_zero(zeros, i)),
    }
}

/// Drops hits that refined onto the same point or the same zero cluster,
/// keeping the lowest amplitude. Output is sorted by `(beta_h, lambda_t)`.
fn dedup_hits(mut hits: Vec<DetectionHit>, zeros: &ZeroSet, tol: f64) -> Vec<DetectionHit> {
    hits.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    let mut kept: Vec<DetectionHit> = Vec::new();
    for hit in hits {
        let duplicate = kept.iter().any(|k| {
            let same_cluster = match (k.matched_zero, hit.matched_zero) {
                (Some(a), Some(b)) => a == b || zeros.cluster_of(a).contains(&b),
                _ => false,
            };
            let dt = (k.lambda_t - hit.lambda_t).abs();
            let same_point = (k.beta_h - hit.beta_h).abs() <= tol && dt.min(PI - dt) <= tol;
            same_cluster || same_point
        });
        if !duplicate {
            kept.push(hit);
        }
    }
    kept.sort_by(|a, b| {
        a.beta_h
            .total_cmp(&b.beta_h)
            .then(a.lambda_t.total_cmp(&b.lambda_t))
    });
    kept
}

/// Indices of strict coarse minima in `values`; on a periodic grid the last
/// point duplicates the first and neighbours wrap.
fn coarse_minima_1d(values: &[f64], periodic: bool) -> Vec<usize> {
    let n = if periodic { values.len() - 1 } else { values.len() };
    let mut out = Vec::new();
    for i in 0..n {
        let left = if i > 0 {
            Some(values[i - 1])
        } else if periodic {
            Some(values[n - 1])
        } else {
            None
        };
        let right = if i + 1 < n {
            Some(values[i + 1])
        } else if periodic {
            Some(values[0])
        } else {
            None
        };
        let (Some(l), Some(r)) = (left, right) else {
            continue;
        };
        if values[i] < l && values[i] <= r {
            out.push(i);
        }
    }
    out
}

/// Time-only scan at the `beta_h` of `spec`.
pub fn scan_time(
    spec: &ModelSpec,
    grid: &LambdaTGrid,
    opts: &ScanOptions,
) -> Result<Vec<DetectionHit>> {
    spec.validate()?;
    grid.validate()?;
    opts.validate()?;
    let zeros = solve_model(spec)?;
    let field = Field::new(spec, &zeros);
    let bh = spec.beta_h;
    let lts = grid.values();
    let amps: Vec<f64> = lts.iter().map(|&lt| field.direct(bh, lt)).collect();
    let h = grid.spacing();
    let hits: Vec<DetectionHit> = coarse_minima_1d(&amps, grid.is_periodic())
        .into_iter()
        .map(|i| {
            let (_, start) = descend(
                |b, x| field.ln_factorized(b, x),
                (bh, lts[i]),
                (0.0, h),
                grid.points,
            );
            let lt = golden_min(
                |x| field.ln_factorized(bh, x),
                start - h,
                start + h,
                opts.refine_tol,
            );
            build_hit(&field, &zeros, bh, lt, opts)
        })
        .filter(|hit| hit.amplitude < opts.threshold)
        .collect();
    let hits = dedup_hits(hits, &zeros, 10.0 * opts.refine_tol);
    if hits.is_empty() {
        return Err(Error::EmptyScan {
            threshold: opts.threshold,
        });
    }
    Ok(hits)
}

fn coarse_minima_2d(map: &Heatmap, periodic: bool) -> Vec<(usize, usize)> {
    let rows = map.beta_h.len();
    let cols_all = map.lambda_t.len();
    let cols = if periodic { cols_all - 1 } else { cols_all };
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = map.get(r, c);
            let mut is_min = true;
            let mut has_col_neighbours = true;
            for dr in [-1i64, 0, 1] {
                for dc in [-1i64, 0, 1] {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let rr = r as i64 + dr;
                    if rr < 0 || rr >= rows as i64 {
                        continue;
                    }
                    let mut cc = c as i64 + dc;
                    if periodic {
                        cc = cc.rem_euclid(cols as i64);
                    } else if cc < 0 || cc >= cols as i64 {
                        has_col_neighbours = false;
                        continue;
                    }
                    let w = map.get(rr as usize, cc as usize);
                    // Ties are broken towards the earlier grid index.
                    let earlier = (rr, cc) < (r as i64, c as i64);
                    if w < v || (w == v && earlier) {
                        is_min = false;
                    }
                }
            }
            if is_min && has_col_neighbours {
                out.push((r, c));
            }
        }
    }
    out
}

/// Alternating golden-section searches in `beta_h` and `lambda_t`.
///
/// `z~ = exp(-beta_h - i*2*lambda_t)` is conformal in `(beta_h, 2*lambda_t)`,
/// so near a zero the level sets are axis-aligned ellipses and a handful of
/// alternations suffices.
fn refine_2d(
    field: &Field,
    start: (f64, f64),
    half_width: (f64, f64),
    tol: f64,
) -> (f64, f64) {
    let (mut bh, mut lt) = start;
    for _ in 0..MAX_ALTERNATIONS {
        let (bh0, lt0) = (bh, lt);
        if half_width.0 > 0.0 {
            bh = golden_min(
                |x| field.ln_factorized(x, lt),
                start.0 - half_width.0,
                start.0 + half_width.0,
                tol,
            );
        }
        lt = golden_min(
            |x| field.ln_factorized(bh, x),
            start.1 - half_width.1,
            start.1 + half_width.1,
            tol,
        );
        if (bh - bh0).abs() <= tol && (lt - lt0).abs() <= tol {
            break;
        }
    }
    (bh, lt)
}

/// Joint scan over `beta_h` and `lambda_t`; the `beta_h` of `spec` is ignored.
pub fn scan_joint(
    spec: &ModelSpec,
    beta_h_grid: &BetaHGrid,
    lambda_t_grid: &LambdaTGrid,
    opts: &ScanOptions,
) -> Result<JointScan> {
    spec.validate()?;
    beta_h_grid.validate()?;
    lambda_t_grid.validate()?;
    opts.validate()?;
    let zeros = solve_model(&spec.with_beta_h(0.0))?;
    let field = Field::new(spec, &zeros);
    let bhs = beta_h_grid.values();
    let lts = lambda_t_grid.values();
    let amplitude: Vec<f64> = bhs
        .par_iter()
        .flat_map_iter(|&bh| lts.iter().map(move |&lt| (bh, lt)).collect::<Vec<_>>())
        .map(|(bh, lt)| field.direct(bh, lt))
        .collect();
    let heatmap = Heatmap {
        beta_h: bhs,
        lambda_t: lts,
        amplitude,
    };
    let widths = (1.5 * beta_h_grid.spacing(), 1.5 * lambda_t_grid.spacing());
    let candidates = coarse_minima_2d(&heatmap, lambda_t_grid.is_periodic());
    let hits: Vec<DetectionHit> = candidates
        .par_iter()
        .map(|&(r, c)| {
            let start = descend(
                |b, x| field.ln_factorized(b, x),
                (heatmap.beta_h[r], heatmap.lambda_t[c]),
                (beta_h_grid.spacing(), lambda_t_grid.spacing()),
                beta_h_grid.points + lambda_t_grid.points,
            );
            let (bh, lt) = refine_2d(&field, start, widths, opts.refine_tol);
            build_hit(&field, &zeros, bh, lt, opts)
        })
        .filter(|hit| hit.amplitude < opts.threshold)
        .collect();
    let hits = dedup_hits(hits, &zeros, 10.0 * opts.refine_tol);
    let predicted = (0..zeros.len())
        .map(|i| PredictedHit::for_zero(&zeros, i))
        .collect();
    Ok(JointScan {
        heatmap,
        hits,
        predicted,
        zeros,
    })
}
