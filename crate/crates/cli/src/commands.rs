use std::f64::consts::PI;

use leeyang::model::build_polynomial;
use leeyang::probe::{
    amplitude_ratio, scan_joint, BetaHGrid, DetectionHit, JointScan, LambdaTGrid, PredictedHit,
    ScanOptions,
};
use leeyang::qfim::{
    at_zero_analysis, qfim_exact, qfim_small_beta_gamma, Branch, QfimMatrix,
};
use leeyang::rootfinder::{
    find_critical_beta_gamma, solve_roots_seeded, unit_circle_deviation, verify_theorem1,
    vieta_norm_product, Theorem1Check, ON_CIRCLE_TOL, DEFAULT_MAX_ITER,
};
use leeyang::{ModelSpec, QubitSpec, ZeroSet};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Format, QfimMode, RunArgs, SweepAxis};
use crate::output::{fmt_f64, to_csv, to_json, ComplexRecord, SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelRecord {
    #[serde(rename = "N")]
    pub spins: usize,
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_gamma: Option<f64>,
}

fn model_record(args: &RunArgs, beta_gamma: Option<f64>) -> ModelRecord {
    ModelRecord {
        spins: args.spins,
        k: args.nonlinearity,
        beta_gamma,
    }
}

fn spec(args: &RunArgs, beta_gamma: f64, beta_h: f64) -> Result<ModelSpec, CliError> {
    Ok(ModelSpec::new(args.spins, args.nonlinearity, beta_gamma, beta_h)?)
}

fn solve(args: &RunArgs, s: &ModelSpec) -> Result<ZeroSet, CliError> {
    Ok(solve_roots_seeded(&build_polynomial(s), args.tol, DEFAULT_MAX_ITER, args.seed)?)
}

fn single_beta_gamma(args: &RunArgs, what: &str) -> Result<f64, CliError> {
    let v = args.beta_gammas();
    if v.len() != 1 {
        return Err(CliError::Config(format!("{what} takes exactly one --beta-gamma, got {}", v.len())));
    }
    Ok(v[0])
}

#[derive(Serialize)]
struct ZeroRecord {
    re: f64,
    im: f64,
    norm: f64,
    ln_norm: f64,
    arg: f64,
    residual: f64,
    multiplicity: usize,
}

#[derive(Serialize)]
struct VietaRecord {
    measured: f64,
    predicted: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct ZeroSetRecord {
    beta_gamma: f64,
    attempts: usize,
    norm_product: VietaRecord,
    unit_circle_deviation: f64,
    zeros: Vec<ZeroRecord>,
}

fn zero_set_record(s: &ModelSpec, zs: &ZeroSet) -> ZeroSetRecord {
    let v = vieta_norm_product(zs, s);
    ZeroSetRecord {
        beta_gamma: s.beta_gamma,
        attempts: zs.attempts,
        norm_product: VietaRecord {
            measured: v.measured(),
            predicted: v.predicted(),
            relative_error: v.relative_error(),
        },
        unit_circle_deviation: unit_circle_deviation(zs),
        zeros: zs
            .order_by_arg()
            .into_iter()
            .map(|i| {
                let r = zs.roots[i];
                let z = r.to_complex();
                ZeroRecord {
                    re: z.re,
                    im: z.im,
                    norm: r.norm(),
                    ln_norm: r.ln_abs,
                    arg: r.arg,
                    residual: zs.residuals[i],
                    multiplicity: zs.multiplicity(i),
                }
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct NormCurve {
    beta_gamma: f64,
    norms: Vec<f64>,
}

pub fn cmd_zeros(args: &RunArgs) -> Result<Vec<u8>, CliError> {
    let solved: Vec<(ModelSpec, ZeroSet)> = args
        .beta_gammas()
        .par_iter()
        .map(|&bg| {
            let s = spec(args, bg, 0.0)?;
            let zs = solve(args, &s)?;
            Ok((s, zs))
        })
        .collect::<Result<_, CliError>>()?;
    if args.norms {
        let curves: Vec<NormCurve> = solved
            .iter()
            .map(|(s, zs)| {
                let mut norms = zs.norms();
                norms.sort_by(f64::total_cmp);
                NormCurve {
                    beta_gamma: s.beta_gamma,
                    norms,
                }
            })
            .collect();
        return match args.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Doc {
                    schema_version: u32,
                    model: ModelRecord,
                    curves: Vec<NormCurve>,
                }
                to_json(&Doc {
                    schema_version: SCHEMA_VERSION,
                    model: model_record(args, None),
                    curves,
                })
            }
            Format::Csv => {
                let rows = curves
                    .iter()
                    .flat_map(|c| {
                        c.norms.iter().enumerate().map(move |(i, n)| {
                            vec![fmt_f64(c.beta_gamma), i.to_string(), fmt_f64(*n)]
                        })
                    })
                    .collect::<Vec<_>>();
                to_csv(&["beta_gamma", "index", "norm"], &rows)
            }
        };
    }
    let sets: Vec<ZeroSetRecord> = solved.iter().map(|(s, zs)| zero_set_record(s, zs)).collect();
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                schema_version: u32,
                model: ModelRecord,
                sets: Vec<ZeroSetRecord>,
            }
            to_json(&Doc {
                schema_version: SCHEMA_VERSION,
                model: model_record(args, None),
                sets,
            })
        }
        Format::Csv => {
            let rows = sets
                .iter()
                .flat_map(|set| {
                    set.zeros.iter().enumerate().map(move |(i, z)| {
                        vec![
                            fmt_f64(set.beta_gamma),
                            i.to_string(),
                            fmt_f64(z.re),
                            fmt_f64(z.im),
                            fmt_f64(z.norm),
                            fmt_f64(z.residual),
                        ]
                    })
                })
                .collect::<Vec<_>>();
            to_csv(&["beta_gamma", "index", "re", "im", "norm", "residual"], &rows)
        }
    }
}

const HEATMAP_HEADER: [&str; 3] = ["beta_h", "lambda_t", "amplitude"];

fn scan_options(args: &RunArgs) -> ScanOptions {
    ScanOptions::with_threshold(args.threshold)
}

fn lambda_grid(args: &RunArgs) -> LambdaTGrid {
    LambdaTGrid::with_points(args.lambda_t_points)
}

fn beta_h_grid(args: &RunArgs, default_range: Option<(f64, f64)>) -> BetaHGrid {
    match (args.beta_h_range, default_range) {
        (Some(r), _) => BetaHGrid {
            start: r.start,
            end: r.end,
            points: if r.start == r.end { 1 } else { args.beta_h_points },
        },
        (None, Some((a, b))) => BetaHGrid {
            start: a,
            end: b,
            points: args.beta_h_points,
        },
        (None, None) => BetaHGrid::single(args.beta_h),
    }
}

#[derive(Serialize)]
struct HeatmapDoc {
    schema_version: u32,
    model: ModelRecord,
    beta_h: Vec<f64>,
    lambda_t: Vec<f64>,
    /// Row-major over `beta_h`.
    amplitude: Vec<f64>,
}

fn heatmap_rows(scan: &JointScan) -> Vec<Vec<String>> {
    let map = &scan.heatmap;
    let mut rows = Vec::with_capacity(map.amplitude.len());
    for (r, bh) in map.beta_h.iter().enumerate() {
        for (c, lt) in map.lambda_t.iter().enumerate() {
            rows.push(vec![fmt_f64(*bh), fmt_f64(*lt), fmt_f64(map.get(r, c))]);
        }
    }
    rows
}

pub fn cmd_scan(args: &RunArgs) -> Result<Vec<u8>, CliError> {
    let bg = single_beta_gamma(args, "scan")?;
    let s = spec(args, bg, 0.0)?;
    let scan = scan_joint(&s, &beta_h_grid(args, None), &lambda_grid(args), &scan_options(args))?;
    match args.format {
        Format::Csv => to_csv(&HEATMAP_HEADER, &heatmap_rows(&scan)),
        Format::Json => to_json(&HeatmapDoc {
            schema_version: SCHEMA_VERSION,
            model: model_record(args, Some(bg)),
            beta_h: scan.heatmap.beta_h,
            lambda_t: scan.heatmap.lambda_t,
            amplitude: scan.heatmap.amplitude,
        }),
    }
}

#[derive(Serialize)]
struct PredictedRecord {
    zero_index: usize,
    beta_h: f64,
    lambda_t: f64,
    on_unit_circle: bool,
}

impl From<PredictedHit> for PredictedRecord {
    fn from(p: PredictedHit) -> Self {
        Self {
            zero_index: p.zero_index,
            beta_h: p.beta_h,
            lambda_t: p.lambda_t,
            on_unit_circle: p.on_unit_circle,
        }
    }
}

#[derive(Serialize)]
struct HitRecord {
    lambda_t: f64,
    beta_h: f64,
    amplitude: f64,
    vanishing: bool,
    zero: Option<ComplexRecord>,
    matched_index: Option<usize>,
    multiplicity: usize,
    recovered_z: ComplexRecord,
    predicted: Option<PredictedRecord>,
}

fn hit_record(hit: &DetectionHit, zeros: &ZeroSet) -> HitRecord {
    HitRecord {
        lambda_t: hit.lambda_t,
        beta_h: hit.beta_h,
        amplitude: hit.amplitude,
        vanishing: hit.vanishing,
        zero: hit.matched_zero.map(|i| zeros.roots[i].to_complex().into()),
        matched_index: hit.matched_zero,
        multiplicity: hit.multiplicity,
        recovered_z: hit.recovered_z.into(),
        predicted: hit.predicted.map(Into::into),
    }
}

#[derive(Serialize)]
struct TraceRecord {
    beta_h: f64,
    lambda_t: Vec<f64>,
    amplitude: Vec<f64>,
}

#[derive(Serialize)]
struct DetectDoc {
    schema_version: u32,
    model: ModelRecord,
    threshold: f64,
    vanishing_tol: f64,
    hits: Vec<HitRecord>,
    predicted: Vec<PredictedRecord>,
    zeros: Vec<ComplexRecord>,
    trace: TraceRecord,
}

pub fn cmd_detect(args: &RunArgs) -> Result<Vec<u8>, CliError> {
    let opts = scan_options(args);
    let grid = beta_h_grid(args, Some((-20.0, 20.0)));
    let lambda = lambda_grid(args);
    let bgs = args.beta_gammas();
    if args.format == Format::Csv {
        if bgs.len() != 1 {
            return Err(CliError::Config("CSV heatmap output takes exactly one --beta-gamma".into()));
        }
        let scan = scan_joint(&spec(args, bgs[0], 0.0)?, &grid, &lambda, &opts)?;
        return to_csv(&HEATMAP_HEADER, &heatmap_rows(&scan));
    }
    let docs: Vec<DetectDoc> = bgs
        .iter()
        .map(|&bg| {
            let s = spec(args, bg, 0.0)?;
            let scan = scan_joint(&s, &grid, &lambda, &opts)?;
            let traced = s.with_beta_h(args.beta_h);
            let lts = lambda.values();
            let amplitude = lts.par_iter().map(|&lt| amplitude_ratio(&traced, lt)).collect();
            Ok(DetectDoc {
                schema_version: SCHEMA_VERSION,
                model: model_record(args, Some(bg)),
                threshold: opts.threshold,
                vanishing_tol: opts.vanishing_tol,
                hits: scan.hits.iter().map(|h| hit_record(h, &scan.zeros)).collect(),
                predicted: scan.predicted.iter().map(|&p| p.into()).collect(),
                zeros: scan.zeros.zeros().into_iter().map(Into::into).collect(),
                trace: TraceRecord {
                    beta_h: args.beta_h,
                    lambda_t: lts,
                    amplitude,
                },
            })
        })
        .collect::<Result<_, CliError>>()?;
    if docs.len() == 1 {
        to_json(&docs[0])
    } else {
        to_json(&docs)
    }
}

#[derive(Serialize)]
struct QfimRow {
    t: f64,
    lambda: f64,
    beta: f64,
    beta_gamma: f64,
    beta_h: f64,
    f_ll: Option<f64>,
    f_bb: Option<f64>,
    f_lb: Option<f64>,
    regime: Option<&'static str>,
    error: Option<String>,
}

#[derive(Serialize)]
struct AtZeroRow {
    beta_gamma: f64,
    zero_index: usize,
    zero: ComplexRecord,
    beta_h: f64,
    lambda_t: f64,
    f_ll: Option<f64>,
    f_bb: Option<f64>,
    f_lb: Option<f64>,
    regime: &'static str,
    denominator_modulus: Option<f64>,
    denominator_arg: Option<f64>,
    f_ll_complete: Option<f64>,
    f_bb_complete: Option<f64>,
    f_lb_complete: Option<f64>,
    error: Option<String>,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn qfim_point(args: &RunArgs, s: &ModelSpec, t: f64) -> QfimRow {
    let qubit = QubitSpec::plus(args.omega0);
    let result: Result<QfimMatrix, leeyang::Error> = match args.branch {
        QfimMode::Exact => qfim_exact(s, &qubit, t, args.lambda, args.beta),
        QfimMode::ApproxMixed => {
            qfim_small_beta_gamma(s, t, args.lambda, args.beta, Branch::Mixed).map(|a| a.qfim)
        }
        QfimMode::ApproxPure => {
            qfim_small_beta_gamma(s, t, args.lambda, args.beta, Branch::Pure).map(|a| a.qfim)
        }
    };
    let (q, error) = match result {
        Ok(q) => (Some(q), None),
        Err(e) => (None, Some(e.to_string())),
    };
    QfimRow {
        t,
        lambda: args.lambda,
        beta: args.beta,
        beta_gamma: s.beta_gamma,
        beta_h: s.beta_h,
        f_ll: q.map(|q| q.f_ll),
        f_bb: q.map(|q| q.f_bb),
        f_lb: q.map(|q| q.f_lb),
        regime: q.map(|q| q.regime.as_str()),
        error,
    }
}

pub fn cmd_qfim(args: &RunArgs) -> Result<Vec<u8>, CliError> {
    if args.at_zeros {
        return qfim_at_zeros(args);
    }
    let mut points: Vec<(ModelSpec, f64)> = Vec::new();
    let sweep_values = match (args.sweep, args.sweep_range) {
        (Some(_), Some(r)) => r.values(),
        (Some(_), None) => return Err(CliError::Config("--sweep needs --sweep-range".into())),
        (None, _) => Vec::new(),
    };
    match args.sweep {
        None => {
            for bg in args.beta_gammas() {
                points.push((spec(args, bg, args.beta_h)?, args.t));
            }
        }
        Some(SweepAxis::Time) => {
            for bg in args.beta_gammas() {
                for &t in &sweep_values {
                    points.push((spec(args, bg, args.beta_h)?, t));
                }
            }
        }
        Some(SweepAxis::BetaH) => {
            for bg in args.beta_gammas() {
                for &bh in &sweep_values {
                    points.push((spec(args, bg, bh)?, args.t));
                }
            }
        }
        Some(SweepAxis::BetaGamma) => {
            for &bg in &sweep_values {
                points.push((spec(args, bg, args.beta_h)?, args.t));
            }
        }
    }
    let rows: Vec<QfimRow> = points.par_iter().map(|(s, t)| qfim_point(args, s, *t)).collect();
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                schema_version: u32,
                model: ModelRecord,
                rows: Vec<QfimRow>,
            }
            to_json(&Doc {
                schema_version: SCHEMA_VERSION,
                model: model_record(args, None),
                rows,
            })
        }
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.t),
                        fmt_f64(r.lambda),
                        fmt_f64(r.beta),
                        fmt_f64(r.beta_gamma),
                        fmt_f64(r.beta_h),
                        opt(r.f_ll),
                        opt(r.f_bb),
                        opt(r.f_lb),
                        r.regime.unwrap_or_default().to_string(),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            to_csv(
                &["t", "lambda", "beta", "beta_gamma", "beta_h", "f_ll", "f_bb", "f_lb", "regime", "error"],
                &body,
            )
        }
    }
}

fn qfim_at_zeros(args: &RunArgs) -> Result<Vec<u8>, CliError> {
    let mut rows = Vec::new();
    for bg in args.beta_gammas() {
        let s = spec(args, bg, 0.0)?;
        let zs = solve(args, &s)?;
        for m in zs.order_by_arg() {
            let z = zs.roots[m];
            let base = AtZeroRow {
                beta_gamma: bg,
                zero_index: m,
                zero: z.to_complex().into(),
                beta_h: -z.ln_abs,
                lambda_t: (-z.arg / 2.0).rem_euclid(PI),
                f_ll: None,
                f_bb: None,
                f_lb: None,
                regime: "at-zero",
                denominator_modulus: None,
                denominator_arg: None,
                f_ll_complete: None,
                f_bb_complete: None,
                f_lb_complete: None,
                error: None,
            };
            rows.push(match at_zero_analysis(&s, &zs, m, args.t, args.beta) {
                Ok(a) => AtZeroRow {
                    f_ll: Some(a.qfim.f_ll),
                    f_bb: Some(a.qfim.f_bb),
                    f_lb: Some(a.qfim.f_lb),
                    denominator_modulus: Some(a.denominator_modulus),
                    denominator_arg: Some(a.denominator_raw.arg),
                    f_ll_complete: Some(a.f_ll_complete),
                    f_bb_complete: Some(a.f_bb_complete),
                    f_lb_complete: Some(a.f_lb_complete),
                    ..base
                },
                Err(e) => AtZeroRow {
                    error: Some(e.to_string()),
                    ..base
                },
            });
        }
    }
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                schema_version: u32,
                model: ModelRecord,
                t: f64,
                beta: f64,
                rows: Vec<AtZeroRow>,
            }
            to_json(&Doc {
                schema_version: SCHEMA_VERSION,
                model: model_record(args, None),
                t: args.t,
                beta: args.beta,
                rows,
            })
        }
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.beta_gamma),
                        r.zero_index.to_string(),
                        fmt_f64(r.zero.re),
                        fmt_f64(r.zero.im),
                        fmt_f64(r.beta_h),
                        fmt_f64(r.lambda_t),
                        opt(r.f_ll),
                        opt(r.f_bb),
                        opt(r.f_lb),
                        r.regime.to_string(),
                        opt(r.denominator_modulus),
                        opt(r.denominator_arg),
                        opt(r.f_ll_complete),
                        opt(r.f_bb_complete),
                        opt(r.f_lb_complete),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            to_csv(
                &[
                    "beta_gamma",
                    "zero_index",
                    "re",
                    "im",
                    "beta_h",
                    "lambda_t",
                    "f_ll",
                    "f_bb",
                    "f_lb",
                    "regime",
                    "denominator_modulus",
                    "denominator_arg",
                    "f_ll_complete",
                    "f_bb_complete",
                    "f_lb_complete",
                    "error",
                ],
                &body,
            )
        }
    }
}

pub fn cmd_critical(args: &RunArgs) -> Result<Vec<u8>, CliError> {
    let bracket = args.bracket.map_or((-1.0, 1.0), |r| (r.start, r.end));
    let res = find_critical_beta_gamma(args.spins, args.nonlinearity, ON_CIRCLE_TOL, bracket)?;
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Point {
                beta_gamma: f64,
                deviation: f64,
            }
            #[derive(Serialize)]
            struct Doc {
                schema_version: u32,
                model: ModelRecord,
                beta_gamma_critical: f64,
                bracket: (f64, f64),
                on_circle_tol: f64,
                profile: Vec<Point>,
            }
            to_json(&Doc {
                schema_version: SCHEMA_VERSION,
                model: model_record(args, None),
                beta_gamma_critical: res.beta_gamma_critical,
                bracket: res.bracket,
                on_circle_tol: res.on_circle_tol,
                profile: res
                    .deviation_profile
                    .iter()
                    .map(|&(beta_gamma, deviation)| Point {
                        beta_gamma,
                        deviation,
                    })
                    .collect(),
            })
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = res
                .deviation_profile
                .iter()
                .map(|(bg, d)| vec![fmt_f64(*bg), fmt_f64(*d)])
                .collect();
            to_csv(&["beta_gamma", "deviation"], &rows)
        }
    }
}

#[derive(Serialize)]
struct ReportEntry {
    beta_gamma: f64,
    zeros: ZeroSetRecord,
    theorem1: Theorem1Check,
    min_amplitude: f64,
    min_amplitude_lambda_t: f64,
    below_threshold: bool,
}

pub fn cmd_report(args: &RunArgs) -> Result<Vec<u8>, CliError> {
    let lambda = lambda_grid(args);
    let entries: Vec<ReportEntry> = args
        .beta_gammas()
        .iter()
        .map(|&bg| {
            let s = spec(args, bg, args.beta_h)?;
            let zs = solve(args, &s)?;
            let (lt, amp) = lambda
                .values()
                .into_iter()
                .map(|lt| (lt, amplitude_ratio(&s, lt)))
                .fold((0.0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
            Ok(ReportEntry {
                beta_gamma: bg,
                zeros: zero_set_record(&s, &zs),
                theorem1: verify_theorem1(&s),
                min_amplitude: amp,
                min_amplitude_lambda_t: lt,
                below_threshold: amp < args.threshold,
            })
        })
        .collect::<Result<_, CliError>>()?;
    if args.format == Format::Csv {
        let rows: Vec<Vec<String>> = entries
            .iter()
            .map(|e| {
                vec![
                    fmt_f64(e.beta_gamma),
                    fmt_f64(e.zeros.norm_product.relative_error),
                    fmt_f64(e.zeros.unit_circle_deviation),
                    e.theorem1.holds.to_string(),
                    fmt_f64(e.min_amplitude),
                    fmt_f64(e.min_amplitude_lambda_t),
                ]
            })
            .collect();
        return to_csv(
            &[
                "beta_gamma",
                "vieta_relative_error",
                "unit_circle_deviation",
                "theorem1_holds",
                "min_amplitude",
                "min_amplitude_lambda_t",
            ],
            &rows,
        );
    }
    #[derive(Serialize)]
    struct Doc {
        schema_version: u32,
        model: ModelRecord,
        beta_h: f64,
        threshold: f64,
        entries: Vec<ReportEntry>,
    }
    to_json(&Doc {
        schema_version: SCHEMA_VERSION,
        model: model_record(args, None),
        beta_h: args.beta_h,
        threshold: args.threshold,
        entries,
    })
}
