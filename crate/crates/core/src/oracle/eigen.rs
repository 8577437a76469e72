//! Eigenvalues of a small dense complex upper-Hessenberg matrix by the
//! shifted QR iteration, after diagonal balancing.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) type Matrix = Vec<Vec<Complex64>>;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 100;

/// Parlett-Reinsch balancing with power-of-two scalings.
pub(crate) fn balance(a: &mut Matrix) {
    let n = a.len();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].norm();
                    r += a[i][j].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[i][j] /= f;
                    a[j][i] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper-Hessenberg matrix (destroys the input).
pub(crate) fn hessenberg_eigenvalues(mut h: Matrix) -> Result<Vec<Complex64>> {
    let n = h.len();
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[l][l].norm() + h[l - 1][l - 1].norm();
            if h[l][l - 1].norm() <= f64::EPSILON * s || h[l][l - 1].norm() < f64::MIN_POSITIVE {
                h[l][l - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > MAX_SWEEPS_PER_EIGENVALUE * n {
            let worst = (1..=hi).map(|k| h[k][k - 1].norm()).fold(0.0, f64::max);
            return Err(Error::NonConvergence {
                attempts: total,
                worst_residual: worst,
            });
        }
        let mu = if iter % 10 == 0 {
            // Exceptional shift to break cycles.
            h[hi][hi] + Complex64::new(0.75 * h[hi][hi - 1].norm(), 0.43 * h[hi][hi - 1].norm())
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        qr_step(&mut h, l, hi, mu);
    }
    eig[0] = h[0][0];
    Ok(eig)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let (r1, r2) = (m + disc, m - disc);
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// One explicitly shifted QR step on rows/columns `lo..=hi`.
fn qr_step(h: &mut Matrix, lo: usize, hi: usize, mu: Complex64) {
    for k in lo..=hi {
        h[k][k] -= mu;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[k][k];
        let y = h[k + 1][k];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (x / r, y / r)
        };
        for j in k..=hi {
            let (u, v) = (h[k][j], h[k + 1][j]);
            h[k][j] = c.conj() * u + s.conj() * v;
            h[k + 1][j] = -s * u + c * v;
        }
        rotations.push((c, s));
    }
    for (idx, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + idx;
        let top = (k + 2).min(hi);
        for i in lo..=top {
            let (u, v) = (h[i][k], h[i][k + 1]);
            h[i][k] = u * c + v * s;
            h[i][k + 1] = -u * s.conj() + v * c.conj();
        }
    }
    for k in lo..=hi {
        h[k][k] += mu;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn triangular_eigenvalues() {
        let h = vec![
            vec![c(1.0), c(2.0), c(3.0)],
            vec![c(0.0), c(4.0), c(5.0)],
            vec![c(0.0), c(0.0), c(6.0)],
        ];
        let mut e = hessenberg_eigenvalues(h).unwrap();
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (x, want) in e.iter().zip([1.0, 4.0, 6.0]) {
            assert!((x - c(want)).norm() < 1e-14);
        }
    }

    #[test]
    fn rotation_block() {
        // [[0, -1], [1, 0]] has eigenvalues +-i.
        let mut h = vec![vec![c(0.0), c(-1.0)], vec![c(1.0), c(0.0)]];
        balance(&mut h);
        let mut e = hessenberg_eigenvalues(h).unwrap();
        e.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((e[0] + Complex64::i()).norm() < 1e-14);
        assert!((e[1] - Complex64::i()).norm() < 1e-14);
    }
}
