use std::f64::consts::{FRAC_PI_2, PI};

use leeyang::oracle::{full_evolution, naive_tilde_partition};
use leeyang::probe::{
    amplitude_ratio, amplitude_ratio_factorized, coherence_factor, evolved_state, scan_joint,
    tilde_partition, BetaHGrid, LambdaTGrid, ScanOptions,
};
use leeyang::rootfinder::solve_model;
use leeyang::{ModelSpec, QubitSpec, QubitState};
use num_complex::Complex64;
use proptest::prelude::*;

fn spec(n: usize, k: u32, bg: f64, bh: f64) -> ModelSpec {
    ModelSpec::new(n, k, bg, bh).unwrap()
}

fn wrapped(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn bloch_state() -> impl Strategy<Value = QubitState> {
    (0.0f64..=1.0, 0.0f64..PI, 0.0f64..2.0 * PI).prop_map(|(r, th, ph)| {
        QubitState::from_bloch([r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]).unwrap()
    })
}

proptest! {
    #[test]
    fn coherence_factor_is_contractive(n in 1usize..=16, k in 1u32..7, bg in -2.0f64..2.0, bh in -3.0f64..3.0, lt in 0.0f64..PI) {
        let g = coherence_factor(&spec(n, k, bg, bh), lt);
        prop_assert!(g.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn amplitude_has_period_pi(n in 1usize..=16, k in 1u32..7, bg in -2.0f64..2.0, bh in -3.0f64..3.0, lt in 0.0f64..PI) {
        let s = spec(n, k, bg, bh);
        prop_assert!((amplitude_ratio(&s, lt + PI) - amplitude_ratio(&s, lt)).abs() < 1e-12);
    }

    #[test]
    fn factorized_amplitude_matches_direct(n in 1usize..=10, k in 1u32..6, bg in -1.0f64..1.0, bh in -2.0f64..2.0, lt in 0.0f64..PI) {
        let s = spec(n, k, bg, bh);
        let zeros = solve_model(&s).unwrap();
        let (a, b) = (amplitude_ratio(&s, lt), amplitude_ratio_factorized(&s, &zeros, lt));
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn evolved_state_stays_physical(
        n in 1usize..=12, k in 1u32..6, bg in -1.0f64..1.0, bh in -2.0f64..2.0,
        rho in bloch_state(), t in 0.0f64..3.0, lambda in -2.0f64..2.0, beta in 0.1f64..3.0, omega0 in -3.0f64..3.0,
    ) {
        let q = QubitSpec { omega0, initial_state: rho };
        let out = evolved_state(&spec(n, k, bg, bh), &q, t, lambda, beta).unwrap();
        prop_assert!(out.validate().is_ok());
        let r = out.bloch();
        prop_assert!(r.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
        prop_assert!(out.det() >= -1e-14);
        prop_assert_eq!(out.populations(), rho.populations());
    }

    #[test]
    fn coherence_modulus_ignores_omega0(n in 1usize..=10, k in 1u32..6, bg in -1.0f64..1.0, bh in -2.0f64..2.0, t in 0.0f64..3.0, w1 in -5.0f64..5.0, w2 in -5.0f64..5.0) {
        let s = spec(n, k, bg, bh);
        let a = evolved_state(&s, &QubitSpec::plus(w1), t, 0.6, 1.0).unwrap();
        let b = evolved_state(&s, &QubitSpec::plus(w2), t, 0.6, 1.0).unwrap();
        prop_assert!((a.coherence().norm() - b.coherence().norm()).abs() < 1e-15);
    }
}

#[test]
fn tilde_partition_matches_naive_sum() {
    let s = spec(5, 4, 0.5, 0.7);
    let main = tilde_partition(&s, 1.1);
    let naive = naive_tilde_partition(&s, 1.1);
    assert!((main.ln_abs - naive.ln_abs()).abs() < 1e-12, "{main:?} vs {naive:?}");
    assert!(wrapped(main.arg - naive.value.arg()).abs() < 1e-12);
}

#[test]
fn evolved_state_matches_full_evolution_example() {
    let s = spec(6, 3, 0.2, 0.1);
    let q = QubitSpec::plus(2.3);
    let a = evolved_state(&s, &q, 1.0, 0.9, 1.0).unwrap();
    let b = full_evolution(&s, &q, 1.0, 0.9, 1.0).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-12, "{a:?} vs {b:?}");
}

#[test]
fn joint_scan_recovers_every_zero() {
    for (n, bg) in [(4usize, 1.0), (5, 0.5)] {
        let s = spec(n, 4, bg, 0.0);
        let scan = scan_joint(&s, &BetaHGrid::default(), &LambdaTGrid::default(), &ScanOptions::default()).unwrap();
        assert_eq!(scan.hits.len(), n, "N={n}: {:?}", scan.hits);
        let mut matched: Vec<usize> = scan.hits.iter().map(|h| h.matched_zero.unwrap()).collect();
        matched.sort_unstable();
        matched.dedup();
        assert_eq!(matched.len(), n);
        for h in &scan.hits {
            let z = scan.zeros.roots[h.matched_zero.unwrap()];
            assert!((h.lambda_t - FRAC_PI_2).abs() < 1e-6, "{h:?}");
            assert!((h.beta_h + z.ln_abs).abs() < 1e-6, "{h:?}");
            assert!(h.amplitude < 1e-8 && h.vanishing);
            let recovered = Complex64::from_polar((-h.beta_h).exp(), -2.0 * h.lambda_t);
            assert!((recovered - h.recovered_z).norm() <= 1e-12 * recovered.norm().max(1.0));
        }
    }
}

#[test]
fn odd_k_amplitude_stays_above_threshold() {
    for k in [3, 5] {
        for bg in [-1.0, 1.0] {
            let s = spec(4, k, bg, 0.0);
            let min = LambdaTGrid::default()
                .values()
                .into_iter()
                .map(|lt| amplitude_ratio(&s, lt))
                .fold(f64::INFINITY, f64::min);
            assert!(min > ScanOptions::default().threshold, "k={k} bg={bg}: {min}");
        }
    }
}
