use std::f64::consts::FRAC_PI_2;

use leeyang::model::{build_polynomial, partition_value};
use leeyang::oracle::{
    companion_roots, compare_zero_sets, fd_energy_deviations, fd_qfim, full_evolution,
    naive_tilde_partition, product_basis_partition, ErrorMeasure, OracleReport, FD_STEP,
};
use leeyang::probe::{coherence_factor, evolved_state};
use leeyang::qfim::{energy_deviations, qfim_exact};
use leeyang::rootfinder::{
    roots_of_minus_one, solve_model, unit_circle_deviation, verify_theorem1, vieta_norm_product,
};
use leeyang::{Error, ModelSpec, QubitSpec, QubitState};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::RunArgs;
use crate::output::{to_json, SCHEMA_VERSION};
use crate::CliError;

pub const MATRIX_SPINS: [usize; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
pub const MATRIX_NONLINEARITY: [u32; 5] = [1, 2, 3, 4, 5];
pub const MATRIX_BETA_GAMMA: [f64; 6] = [-5.0, -1.0, -0.05, 0.0, 0.05, 1.0];
pub const MATRIX_BETA_H: [f64; 3] = [-2.0, 0.0, 0.7];

pub const PARTITION_TOL: f64 = 1e-12;
pub const EVOLUTION_TOL: f64 = 1e-12;
pub const COHERENCE_TOL: f64 = 1e-12;
pub const COMPANION_TOL: f64 = 1e-6;
pub const FD_ENERGY_TOL: f64 = 1e-6;
pub const FD_QFIM_TOL: f64 = 1e-5;

/// One oracle comparison or bound check, labelled by its parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case: String,
    #[serde(flatten)]
    pub report: OracleReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub case: String,
    pub quantity: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantitySummary {
    pub quantity: String,
    pub cases: usize,
    pub failures: usize,
    pub worst_error: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bundle {
    pub schema_version: u32,
    pub suite: String,
    pub pass: bool,
    pub summary: Vec<QuantitySummary>,
    pub skipped: Vec<Skipped>,
    pub reports: Vec<CaseReport>,
}

fn label(s: &ModelSpec) -> String {
    format!("N={} k={} beta_gamma={} beta_h={}", s.spins, s.nonlinearity, s.beta_gamma, s.beta_h)
}

fn ok(case: &str, report: OracleReport) -> CaseReport {
    CaseReport {
        case: case.to_string(),
        report,
        error: None,
    }
}

fn failed(case: &str, quantity: &str, tolerance: f64, e: impl ToString) -> CaseReport {
    CaseReport {
        case: case.to_string(),
        report: OracleReport::from_error(quantity, f64::INFINITY, tolerance),
        error: Some(e.to_string()),
    }
}

/// Bound check `value > bound`, reported with `max_abs_error = bound - value`.
fn lower_bound(case: &str, quantity: &str, value: f64, bound: f64) -> CaseReport {
    let mut report = OracleReport::from_error(quantity, bound - value, 0.0);
    report.main_value = vec![value];
    report.oracle_value = vec![bound];
    report.pass = value > bound;
    ok(case, report)
}

fn entries(rho: &QubitState) -> Vec<f64> {
    rho.entries
        .iter()
        .flatten()
        .flat_map(|z| [z.re, z.im])
        .collect()
}

fn matrix_specs() -> Vec<ModelSpec> {
    let mut v = Vec::new();
    for &n in &MATRIX_SPINS {
        for &k in &MATRIX_NONLINEARITY {
            for &bg in &MATRIX_BETA_GAMMA {
                for &bh in &MATRIX_BETA_H {
                    v.push(ModelSpec::new(n, k, bg, bh).expect("matrix point is valid"));
                }
            }
        }
    }
    v
}

/// Probe states and `(t, lambda, beta, omega0)` points for the dynamics oracle.
fn dynamics_points() -> Vec<(QubitSpec, f64, f64, f64)> {
    let mixed = QubitSpec {
        omega0: 0.3,
        initial_state: QubitState::from_bloch([0.3, -0.2, 0.5]).expect("valid Bloch vector"),
    };
    vec![
        (QubitSpec::plus(0.0), 1.0, 0.7, 1.0),
        (QubitSpec::plus(1.1), 0.4, 2.3, 0.5),
        (mixed, 1.3, 0.35, 2.0),
    ]
}

fn spec_at_beta(s: &ModelSpec, beta: f64) -> ModelSpec {
    // Matrix values are beta*gamma and beta*h at beta = 1.
    let mut out = *s;
    out.beta_gamma *= beta;
    out.beta_h *= beta;
    out
}

fn point_checks(s: &ModelSpec) -> Vec<CaseReport> {
    let case = label(s);
    let mut out = Vec::new();
    out.push(match product_basis_partition(s) {
        Ok(oracle) => ok(
            &case,
            OracleReport::compare(
                "ln_partition",
                vec![partition_value(s)],
                vec![oracle],
                PARTITION_TOL,
                ErrorMeasure::Relative,
            ),
        ),
        Err(e) => failed(&case, "ln_partition", PARTITION_TOL, e),
    });
    for (q, t, lambda, beta) in dynamics_points() {
        let sb = spec_at_beta(s, beta);
        let c = format!("{case} t={t} lambda={lambda} beta={beta} omega0={}", q.omega0);
        out.push(
            match (evolved_state(&sb, &q, t, lambda, beta), full_evolution(&sb, &q, t, lambda, beta)) {
                (Ok(a), Ok(b)) => ok(
                    &c,
                    OracleReport::compare("evolved_state", entries(&a), entries(&b), EVOLUTION_TOL, ErrorMeasure::Absolute),
                ),
                (Err(e), _) | (_, Err(e)) => failed(&c, "evolved_state", EVOLUTION_TOL, e),
            },
        );
    }
    for lt in [0.4, FRAC_PI_2, 2.5] {
        let g = coherence_factor(s, lt);
        let naive = naive_tilde_partition(s, lt);
        let h = naive.value / naive.abs_total;
        out.push(ok(
            &format!("{case} lambda_t={lt}"),
            OracleReport::compare(
                "coherence_factor",
                vec![g.re, g.im],
                vec![h.re, h.im],
                COHERENCE_TOL,
                ErrorMeasure::Absolute,
            ),
        ));
    }
    out
}

fn companion_check(s: &ModelSpec) -> Result<CaseReport, Skipped> {
    let case = label(s);
    let oracle = match companion_roots(&build_polynomial(s)) {
        Ok(z) => z,
        Err(e @ (Error::DynamicRange { .. } | Error::SizeExceeded { .. })) => {
            return Err(Skipped {
                case,
                quantity: "zeros".into(),
                reason: e.to_string(),
            })
        }
        Err(e) => return Ok(failed(&case, "zeros", COMPANION_TOL, e)),
    };
    Ok(match solve_model(s) {
        Ok(main) => ok(&case, compare_zero_sets(&main, &oracle, COMPANION_TOL)),
        Err(e) => failed(&case, "zeros", COMPANION_TOL, e),
    })
}

fn fd_specs() -> Vec<ModelSpec> {
    let mut v = Vec::new();
    for n in 1..=6 {
        for &k in &MATRIX_NONLINEARITY {
            for bg in [-1.0, 0.05, 1.0] {
                for bh in [0.0, 0.7] {
                    v.push(ModelSpec::new(n, k, bg, bh).expect("valid"));
                }
            }
        }
    }
    v
}

fn fd_checks(s: &ModelSpec) -> Vec<CaseReport> {
    let (t, lambda, beta) = (1.0, 0.7, 1.0);
    let case = format!("{} t={t} lambda={lambda} beta={beta}", label(s));
    let mut out = Vec::new();
    let main = energy_deviations(s, lambda * t, t, beta);
    let fd = fd_energy_deviations(s, t, lambda, beta, FD_STEP);
    out.push(match (main, fd) {
        (Ok(d), Ok((dl, db))) => ok(
            &case,
            OracleReport::compare(
                "energy_deviations",
                vec![d.d_e_lambda.re, d.d_e_lambda.im, d.d_e_beta.re, d.d_e_beta.im],
                vec![dl.re, dl.im, db.re, db.im],
                FD_ENERGY_TOL,
                ErrorMeasure::Relative,
            ),
        ),
        (Err(e), _) => failed(&case, "energy_deviations", FD_ENERGY_TOL, e),
        (_, Err(e)) => failed(&case, "energy_deviations", FD_ENERGY_TOL, e),
    });
    let q = QubitSpec::plus(0.0);
    out.push(
        match (qfim_exact(s, &q, t, lambda, beta), fd_qfim(s, &q, t, lambda, beta, FD_STEP)) {
            (Ok(a), Ok(b)) => ok(
                &case,
                OracleReport::compare("qfim", a.entries().to_vec(), b.entries().to_vec(), FD_QFIM_TOL, ErrorMeasure::Relative),
            ),
            (Err(e), _) | (_, Err(e)) => failed(&case, "qfim", FD_QFIM_TOL, e),
        },
    );
    out
}

/// Full oracle matrix: partition function, dynamics, coherence factor,
/// companion zeros and a finite-difference subset.
pub fn oracle_matrix() -> (Vec<CaseReport>, Vec<Skipped>) {
    let specs = matrix_specs();
    let mut reports: Vec<CaseReport> = specs.par_iter().flat_map_iter(point_checks).collect();
    let zero_specs: Vec<&ModelSpec> = specs.iter().filter(|s| s.beta_h == 0.0).collect();
    let companion: Vec<Result<CaseReport, Skipped>> =
        zero_specs.par_iter().map(|s| companion_check(s)).collect();
    let mut skipped = Vec::new();
    for c in companion {
        match c {
            Ok(r) => reports.push(r),
            Err(s) => skipped.push(s),
        }
    }
    reports.extend(fd_specs().par_iter().flat_map_iter(fd_checks).collect::<Vec<_>>());
    (reports, skipped)
}

pub const THEOREM1_RESIDUAL_TOL: f64 = 1e-12;
pub const THEOREM1_DISTANCE_TOL: f64 = 1e-8;
pub const VIETA_TOL: f64 = 1e-8;
pub const ODD_K_DEVIATION_BOUND: f64 = 1e-10;
pub const ROOTS_OF_MINUS_ONE_TOL: f64 = 1e-3;
pub const ON_CIRCLE_TOL: f64 = 1e-6;

const THEOREM_BETA_GAMMA: [f64; 4] = [-1.0, -0.05, 0.05, 1.0];

/// `z = -1` is a zero for odd `N`, even `k`.
pub fn theorem1_suite() -> Vec<CaseReport> {
    let mut specs = Vec::new();
    for n in (1..=11).step_by(2) {
        for k in [2, 4, 6] {
            for bg in THEOREM_BETA_GAMMA {
                specs.push(ModelSpec::new(n, k, bg, 0.0).expect("valid"));
            }
        }
    }
    specs
        .par_iter()
        .flat_map_iter(|s| {
            let case = label(s);
            let check = verify_theorem1(s);
            let mut pairing = OracleReport::from_error("pairing_identity", if check.pairing_identity { 0.0 } else { 1.0 }, 0.0);
            pairing.pass = check.applicable && check.pairing_identity;
            let residual = OracleReport::from_error("residual_at_minus_one", check.relative_residual, THEOREM1_RESIDUAL_TOL);
            let distance = match solve_model(s) {
                Ok(zs) => {
                    let d = zs
                        .zeros()
                        .iter()
                        .map(|z| (z + 1.0).norm())
                        .fold(f64::INFINITY, f64::min);
                    ok(&case, OracleReport::from_error("zero_at_minus_one", d, THEOREM1_DISTANCE_TOL))
                }
                Err(e) => failed(&case, "zero_at_minus_one", THEOREM1_DISTANCE_TOL, e),
            };
            vec![ok(&case, pairing), ok(&case, residual), distance]
        })
        .collect()
}

fn vieta_reports(s: &ModelSpec) -> Vec<CaseReport> {
    let case = label(s);
    match solve_model(s) {
        Ok(zs) => {
            let v = vieta_norm_product(&zs, s);
            let mut out = vec![ok(&case, OracleReport::from_error("norm_product", v.relative_error(), VIETA_TOL))];
            if s.nonlinearity % 2 == 1 && s.beta_gamma != 0.0 {
                out.push(lower_bound(&case, "unit_circle_deviation", unit_circle_deviation(&zs), ODD_K_DEVIATION_BOUND));
            }
            out
        }
        Err(e) => vec![failed(&case, "norm_product", VIETA_TOL, e)],
    }
}

fn vieta_suite(ks: &[u32], beta_gammas: &[f64]) -> Vec<CaseReport> {
    let mut specs = Vec::new();
    for n in 1..=10 {
        for &k in ks {
            for &bg in beta_gammas {
                specs.push(ModelSpec::new(n, k, bg, 0.0).expect("valid"));
            }
        }
    }
    specs.par_iter().flat_map_iter(vieta_reports).collect()
}

/// Odd `k`: norm product `exp(2 beta*gamma (N/2)^k)` and zeros off the circle.
pub fn theorem2_suite() -> Vec<CaseReport> {
    vieta_suite(&[1, 3, 5], &[-1.0, -0.5, -0.05, -1e-3, 1e-3, 0.05, 0.5, 1.0])
}

/// Even `k`: norm product 1.
pub fn theorem3_suite() -> Vec<CaseReport> {
    vieta_suite(&[2, 4, 6], &[-1.0, -0.5, -0.05, 0.0, 0.05, 0.5, 1.0])
}

/// Large negative `beta*gamma`: zeros approach the roots of `1 + z^N`.
pub fn theorem4_suite() -> Vec<CaseReport> {
    let mut specs = Vec::new();
    for n in 3..=8 {
        for k in [2, 4, 6] {
            specs.push(ModelSpec::new(n, k, -5.0, 0.0).expect("valid"));
        }
    }
    specs
        .par_iter()
        .flat_map_iter(|s| {
            let case = label(s);
            match solve_model(s) {
                Ok(zs) => {
                    let targets = roots_of_minus_one(s.spins);
                    let d = zs
                        .zeros()
                        .iter()
                        .map(|z| targets.iter().map(|r| (r - z).norm()).fold(f64::INFINITY, f64::min))
                        .fold(0.0, f64::max);
                    vec![
                        ok(&case, OracleReport::from_error("distance_to_roots_of_minus_one", d, ROOTS_OF_MINUS_ONE_TOL)),
                        ok(&case, OracleReport::from_error("unit_circle_deviation", unit_circle_deviation(&zs), ON_CIRCLE_TOL)),
                    ]
                }
                Err(e) => vec![failed(&case, "roots_of_minus_one", ROOTS_OF_MINUS_ONE_TOL, e)],
            }
        })
        .collect()
}

fn error_of(r: &OracleReport) -> f64 {
    match r.measure {
        ErrorMeasure::Absolute => r.max_abs_error,
        ErrorMeasure::Relative => r.max_rel_error,
    }
}

pub fn bundle(suite: &str, reports: Vec<CaseReport>, skipped: Vec<Skipped>) -> Bundle {
    let mut summary: Vec<QuantitySummary> = Vec::new();
    for r in &reports {
        let e = error_of(&r.report);
        let entry = match summary.iter_mut().find(|s| s.quantity == r.report.quantity) {
            Some(s) => s,
            None => {
                summary.push(QuantitySummary {
                    quantity: r.report.quantity.clone(),
                    cases: 0,
                    failures: 0,
                    worst_error: f64::NEG_INFINITY,
                    tolerance: r.report.tolerance,
                });
                summary.last_mut().expect("just pushed")
            }
        };
        entry.cases += 1;
        entry.failures += usize::from(!r.report.pass);
        entry.worst_error = if e.is_nan() { f64::INFINITY } else { entry.worst_error.max(e) };
    }
    Bundle {
        schema_version: SCHEMA_VERSION,
        suite: suite.to_string(),
        pass: reports.iter().all(|r| r.report.pass),
        summary,
        skipped,
        reports,
    }
}

pub fn run_suite(theorem: Option<u8>) -> Result<Bundle, CliError> {
    Ok(match theorem {
        None => {
            let (reports, skipped) = oracle_matrix();
            bundle("oracle-matrix", reports, skipped)
        }
        Some(1) => bundle("theorem-1", theorem1_suite(), Vec::new()),
        Some(2) => bundle("theorem-2", theorem2_suite(), Vec::new()),
        Some(3) => bundle("theorem-3", theorem3_suite(), Vec::new()),
        Some(4) => bundle("theorem-4", theorem4_suite(), Vec::new()),
        Some(n) => return Err(CliError::Config(format!("--theorem must be 1, 2, 3 or 4, got {n}"))),
    })
}

/// Returns the bundle document and whether every check passed.
pub fn cmd_verify(args: &RunArgs) -> Result<(Vec<u8>, bool), CliError> {
    let b = run_suite(args.theorem)?;
    let pass = b.pass;
    Ok((to_json(&b)?, pass))
}
