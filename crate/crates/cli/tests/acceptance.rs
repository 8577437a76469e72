//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use leeyang::oracle::{extrapolated_at_zero_limit, fd_energy_deviations, fd_qfim, full_evolution, FD_STEP};
use leeyang::probe::{
    amplitude_ratio, evolved_state, scan_joint, scan_time, BetaHGrid, LambdaTGrid, ScanOptions,
};
use leeyang::qfim::{
    energy_deviations, qfim_at_zero, qfim_exact, qfim_mixed_branch, qfim_small_beta_gamma, Branch,
    UNIT_CIRCLE_SNAP,
};
use leeyang::rootfinder::{roots_of_minus_one, solve_model, unit_circle_deviation, vieta_norm_product};
use leeyang::{ModelSpec, QubitSpec, QubitState, ZeroSet};
use leeyang_cli::verify;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn spec(n: usize, k: u32, bg: f64, bh: f64) -> ModelSpec {
    ModelSpec::new(n, k, bg, bh).expect("valid model")
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.2} s exceeds {limit_s} s", elapsed.as_secs_f64())
    })
}

fn worst_conjugate_gap(zs: &ZeroSet) -> f64 {
    let zeros = zs.zeros();
    zeros
        .iter()
        .map(|z| {
            let c = z.conj();
            zeros.iter().map(|w| (w - c).norm()).fold(f64::INFINITY, f64::min) / z.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

fn c1_theorem1() -> Outcome {
    let start = Instant::now();
    let reports = verify::theorem1_suite();
    let elapsed = start.elapsed();
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.report.pass)
        .map(|r| format!("{} {}", r.case, r.report.quantity))
        .collect();
    check(failed.is_empty(), || format!("{} failing checks, first: {}", failed.len(), failed[0]))?;
    within(elapsed, 5.0)?;
    Ok(format!("{} checks over 72 models in {:.2} s", reports.len(), elapsed.as_secs_f64()))
}

fn c2_vieta() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut min_dev = f64::INFINITY;
    for n in 1..=10 {
        for _ in 0..50 {
            let k = rng.gen_range(1..=6u32);
            let bg = rng.gen_range(-1.0..1.0);
            let s = spec(n, k, bg, 0.0);
            let zs = solve_model(&s).map_err(|e| format!("{s:?}: {e}"))?;
            let v = vieta_norm_product(&zs, &s);
            worst = worst.max(v.relative_error());
            if k % 2 == 0 {
                check(v.measured() == v.predicted() || (v.measured() - 1.0).abs() < 1e-8, || {
                    format!("{s:?}: even-k product {}", v.measured())
                })?;
            } else if bg.abs() >= 1e-3 {
                let d = unit_circle_deviation(&zs);
                min_dev = min_dev.min(d);
                check(d > verify::ODD_K_DEVIATION_BOUND, || format!("{s:?}: deviation {d:e}"))?;
            }
        }
    }
    check(worst < verify::VIETA_TOL, || format!("worst relative Vieta error {worst:e}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("500 draws, worst Vieta error {worst:.1e}, smallest odd-k deviation {min_dev:.1e}"))
}

fn c3_theorem4() -> Outcome {
    let mut worst_root: f64 = 0.0;
    let mut worst_circle: f64 = 0.0;
    for k in [2, 4, 6] {
        for n in 3..=8 {
            let zs = solve_model(&spec(n, k, -5.0, 0.0)).map_err(|e| e.to_string())?;
            let targets = roots_of_minus_one(n);
            for z in zs.zeros() {
                let d = targets.iter().map(|r| (r - z).norm()).fold(f64::INFINITY, f64::min);
                worst_root = worst_root.max(d);
            }
            worst_circle = worst_circle.max(unit_circle_deviation(&zs));
        }
    }
    check(worst_root < 1e-3, || format!("zero {worst_root:e} from nearest root of -1"))?;
    check(worst_circle < 1e-6, || format!("unit-circle deviation {worst_circle:e}"))?;
    Ok(format!("distance to roots of -1 <= {worst_root:.1e}, circle deviation <= {worst_circle:.1e}"))
}

fn c4_zero_sets() -> Outcome {
    let start = Instant::now();
    let (mut sym, mut res, mut vieta): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in [3, 4] {
        for n in [6, 7, 10] {
            for bg in [-0.05, -0.01, 0.01, 0.05] {
                let s = spec(n, k, bg, 0.0);
                let zs = solve_model(&s).map_err(|e| format!("{s:?}: {e}"))?;
                sym = sym.max(worst_conjugate_gap(&zs));
                res = res.max(zs.residuals.iter().copied().fold(0.0, f64::max));
                vieta = vieta.max(vieta_norm_product(&zs, &s).relative_error());
                if k % 2 == 0 && n % 2 == 1 {
                    let d = zs.zeros().iter().map(|z| (z + 1.0).norm()).fold(f64::INFINITY, f64::min);
                    check(d < verify::THEOREM1_DISTANCE_TOL, || format!("{s:?}: no zero at -1 ({d:e})"))?;
                }
                if k % 2 == 1 {
                    let d = unit_circle_deviation(&zs);
                    check(d > verify::ODD_K_DEVIATION_BOUND, || format!("{s:?}: deviation {d:e}"))?;
                }
            }
        }
    }
    check(sym < 1e-8, || format!("conjugate mismatch {sym:e}"))?;
    check(res < 1e-10, || format!("residual {res:e}"))?;
    check(vieta < verify::VIETA_TOL, || format!("Vieta error {vieta:e}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("24 zero sets: conjugate gap {sym:.1e}, residual {res:.1e}, Vieta {vieta:.1e}"))
}

fn c5_detection() -> Outcome {
    let mut notes = Vec::new();
    for (n, bg) in [(4usize, 1.0), (5, 0.5)] {
        let start = Instant::now();
        let s = spec(n, 4, bg, 0.0);
        let scan = scan_joint(&s, &BetaHGrid::default(), &LambdaTGrid::default(), &ScanOptions::default())
            .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        check(scan.hits.len() == n, || format!("N={n}: {} hits", scan.hits.len()))?;
        for h in &scan.hits {
            let m = h.matched_zero.ok_or_else(|| format!("N={n}: unmatched hit {h:?}"))?;
            let z = scan.zeros.roots[m];
            check((h.lambda_t - FRAC_PI_2).abs() < 1e-6, || format!("N={n}: lambda_t {}", h.lambda_t))?;
            check((h.beta_h + z.ln_abs).abs() < 1e-6, || format!("N={n}: beta_h {} vs {}", h.beta_h, -z.ln_abs))?;
            check(h.amplitude < 1e-8, || format!("N={n}: amplitude {:e}", h.amplitude))?;
        }
        within(elapsed, 30.0)?;
        notes.push(format!("N={n}: {n} hits in {:.2} s", elapsed.as_secs_f64()));
    }
    Ok(notes.join("; "))
}

fn c6_odd_k_no_hits() -> Outcome {
    let mut lowest = f64::INFINITY;
    let opts = ScanOptions::default();
    for bg in [-1.0, 1.0] {
        for k in [3, 5] {
            let s = spec(4, k, bg, 0.0);
            let grid = LambdaTGrid::default();
            let min = grid.values().into_iter().map(|lt| amplitude_ratio(&s, lt)).fold(f64::INFINITY, f64::min);
            lowest = lowest.min(min);
            check(min > opts.threshold, || format!("k={k} bg={bg}: min amplitude {min:e}"))?;
            match scan_time(&s, &grid, &opts) {
                Err(leeyang::Error::EmptyScan { .. }) => {}
                Ok(hits) => check(hits.is_empty(), || format!("k={k} bg={bg}: {} hits", hits.len()))?,
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    Ok(format!("minimum amplitude {lowest:.3e} > {}", opts.threshold))
}

fn c7_dynamics() -> Outcome {
    let start = Instant::now();
    let mixed = QubitState::from_bloch([0.3, -0.2, 0.5]).expect("valid");
    let probes = [
        (QubitSpec::plus(0.0), 1.0, 0.7, 1.0),
        (QubitSpec::plus(1.1), 0.4, 2.3, 0.5),
        (QubitSpec { omega0: 0.3, initial_state: mixed }, 1.3, 0.35, 2.0),
    ];
    let mut worst: f64 = 0.0;
    let mut draws = 0;
    for &n in &verify::MATRIX_SPINS {
        for &k in &verify::MATRIX_NONLINEARITY {
            for &bg in &verify::MATRIX_BETA_GAMMA {
                for &bh in &verify::MATRIX_BETA_H {
                    for (q, t, lambda, beta) in &probes {
                        let s = spec(n, k, bg * beta, bh * beta);
                        let a = evolved_state(&s, q, *t, *lambda, *beta).map_err(|e| e.to_string())?;
                        let b = full_evolution(&s, q, *t, *lambda, *beta).map_err(|e| e.to_string())?;
                        worst = worst.max(a.max_abs_diff(&b));
                        draws += 1;
                    }
                }
            }
        }
    }
    check(draws >= 200, || format!("only {draws} draws"))?;
    check(worst < verify::EVOLUTION_TOL, || format!("entrywise error {worst:e}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("{draws} draws, entrywise error <= {worst:.1e}"))
}

fn c8_qfim_fd() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(8);
    let (mut worst_q, mut worst_e): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let s = spec(rng.gen_range(1..=8), rng.gen_range(1..=6), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (t, lambda, beta): (f64, f64, f64) =
            (rng.gen_range(0.2..2.0), rng.gen_range(-1.5..1.5), rng.gen_range(0.3..2.0));
        let r: f64 = rng.gen_range(0.0..0.9);
        let (th, ph): (f64, f64) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
        let q = QubitSpec {
            omega0: rng.gen_range(-2.0..2.0),
            initial_state: QubitState::from_bloch([r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()])
                .expect("valid"),
        };
        let main = qfim_exact(&s, &q, t, lambda, beta).map_err(|e| e.to_string())?;
        let fd = fd_qfim(&s, &q, t, lambda, beta, FD_STEP).map_err(|e| e.to_string())?;
        let eq = main.max_abs_diff(&fd) / main.scale().max(fd.scale()).max(f64::MIN_POSITIVE);
        worst_q = worst_q.max(eq);

        let d = energy_deviations(&s, lambda * t, t, beta).map_err(|e| e.to_string())?;
        let (dl, db) = fd_energy_deviations(&s, t, lambda, beta, FD_STEP).map_err(|e| e.to_string())?;
        let scale = [dl, db].iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
        let err = [d.d_e_lambda - dl, d.d_e_beta - db]
            .iter()
            .map(|c: &Complex64| c.re.abs().max(c.im.abs()))
            .fold(0.0, f64::max);
        worst_e = worst_e.max(err / scale.max(f64::MIN_POSITIVE));
    }
    check(worst_q < verify::FD_QFIM_TOL, || format!("QFIM relative error {worst_q:e}"))?;
    check(worst_e < verify::FD_ENERGY_TOL, || format!("energy deviation relative error {worst_e:e}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("50 draws, QFIM error {worst_q:.1e}, dE error {worst_e:.1e}"))
}

fn c9_at_zero() -> Outcome {
    // Cross term and unit-circle identities over several models.
    let mut on_circle = 0;
    for (n, k, bg) in [(3, 4, 1.0), (4, 4, 1.0), (5, 4, 0.5), (5, 2, -0.5), (7, 6, 0.05), (6, 3, 0.2)] {
        let s = spec(n, k, bg, 0.0);
        let zs = solve_model(&s).map_err(|e| e.to_string())?;
        for m in 0..zs.len() {
            if zs.multiplicity(m) > 1 {
                continue;
            }
            let q = qfim_at_zero(&s, &zs, m, 1.0, 1.0).map_err(|e| e.to_string())?;
            check(q.f_lb == 0.0, || format!("N={n} k={k} bg={bg} zero {m}: f_lb = {:e}", q.f_lb))?;
            if zs.roots[m].ln_abs.abs() < UNIT_CIRCLE_SNAP {
                on_circle += 1;
                check(q.f_bb == 0.0, || format!("N={n} k={k} bg={bg} zero {m}: f_bb = {:e}", q.f_bb))?;
            }
        }
    }
    check(on_circle > 0, || "no unit-circle zero exercised".into())?;

    let s = spec(4, 4, 1.0, 0.0);
    let zs = solve_model(&s).map_err(|e| e.to_string())?;
    let (mut ll, mut bb): (f64, f64) = (0.0, 0.0);
    let mut detail = Vec::new();
    for m in 0..zs.len() {
        let at = qfim_at_zero(&s, &zs, m, 1.0, 1.0).map_err(|e| e.to_string())?;
        let lim = extrapolated_at_zero_limit(&s, &zs, m, 1.0, 1.0).map_err(|e| e.to_string())?;
        ll = ll.max(((at.f_ll - lim.f_ll) / lim.f_ll).abs());
        let e = ((at.f_bb - lim.f_bb) / lim.f_bb).abs();
        bb = bb.max(e);
        detail.push(format!("f_bb {:.6} vs limit {:.6}", at.f_bb, lim.f_bb));
    }
    check(ll < 1e-4 && bb < 1e-4, || {
        format!("relative error f_ll {ll:.1e}, f_bb {bb:.1e} ({})", detail.join(", "))
    })?;
    Ok(format!("f_lb = 0, {on_circle} unit-circle zeros with f_bb = 0, limit error f_ll {ll:.1e} f_bb {bb:.1e}"))
}

fn c10_small_beta_gamma() -> Outcome {
    let q = QubitSpec::default();
    let (t, lambda, beta, bh) = (1.0, 0.7, 1.0, 0.5);
    let mut failures = Vec::new();
    let mut worst_final: f64 = 0.0;
    for n in 1..=6 {
        for k in [2u32, 4, 6] {
            let mut errs = Vec::new();
            let mut noise = Vec::new();
            for bg in [-2.0, -4.0, -8.0] {
                let s = spec(n, k, bg, bh);
                let exact = qfim_mixed_branch(&s, &q, t, lambda, beta).map_err(|e| e.to_string())?;
                let approx = qfim_small_beta_gamma(&s, t, lambda, beta, Branch::Mixed).map_err(|e| e.to_string())?;
                let nf = n as f64;
                check(approx.qfim.f_ll == t * t * nf * nf && approx.qfim.f_lb == 0.0, || {
                    format!("N={n} k={k}: approximate mixed entries {:?}", approx.qfim)
                })?;
                errs.push(exact.max_abs_diff(&approx.qfim));
                // Rounding left by subtracting energies of size |beta*gamma| (N/2)^k.
                noise.push(1e-13 * bg.abs() * (nf / 2.0).powi(k as i32) * (1.0 + exact.scale()));
            }
            worst_final = worst_final.max(errs[2]);
            let decreasing = errs[1] <= errs[0] + noise[1] && errs[2] <= errs[1] + noise[2];
            if !(decreasing && errs[2] < 1e-3) {
                failures.push(format!("N={n} k={k}: {:.2e} {:.2e} {:.2e}", errs[0], errs[1], errs[2]));
            }
        }
    }
    check(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("monotone, final error <= {worst_final:.1e}"))
}

fn run_binary(args: &[&str]) -> Result<(Vec<u8>, Vec<u8>), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_leeyang"))
        .args(args)
        .arg("--out")
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("{args:?} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    let file = std::fs::read(&path).map_err(|e| e.to_string())?;
    let stdout = Command::new(env!("CARGO_BIN_EXE_leeyang"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?
        .stdout;
    Ok((file, stdout))
}

fn c11_determinism() -> Outcome {
    let cases: [&[&str]; 4] = [
        &["detect", "--spins", "4", "--nonlinearity", "4", "--beta-gamma", "1.0", "--lambda-t-points", "501", "--beta-h-points", "201"],
        &["detect", "--spins", "5", "--nonlinearity", "4", "--beta-gamma", "0.5", "--format", "csv", "--lambda-t-points", "301", "--beta-h-points", "101"],
        &["zeros", "--spins", "10", "--nonlinearity", "3", "--beta-gamma", "-0.05", "--beta-gamma", "0.05", "--seed", "3"],
        &["zeros", "--spins", "7", "--nonlinearity", "4", "--beta-gamma-sweep", "-1:1:0.25", "--format", "csv"],
    ];
    for args in cases {
        let (a_file, a_out) = run_binary(args)?;
        let (b_file, b_out) = run_binary(args)?;
        check(!a_file.is_empty(), || format!("{args:?}: empty output"))?;
        check(a_file == b_file && a_out == b_out && a_file == a_out, || format!("{args:?}: outputs differ"))?;
    }
    Ok("detect and zeros outputs byte-identical across runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("zero at -1 for odd N, even k", c1_theorem1),
        ("norm product and odd-k departure", c2_vieta),
        ("deep negative coupling limit", c3_theorem4),
        ("conjugate-symmetric zero sets", c4_zero_sets),
        ("joint-scan detection at pi/2", c5_detection),
        ("no false hits for odd k", c6_odd_k_no_hits),
        ("analytic dynamics vs full evolution", c7_dynamics),
        ("QFIM and dE vs finite differences", c8_qfim_fd),
        ("at-zero QFIM identities", c9_at_zero),
        ("small beta*gamma convergence", c10_small_beta_gamma),
        ("deterministic CLI output", c11_determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("[PASS] criterion {:>2}: {name} ({msg}; {secs:.2} s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] criterion {:>2}: {name} ({msg}; {secs:.2} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
