//! Implicit-shift QL iteration for real symmetric tridiagonal matrices.

use crate::error::{Error, Result};

/// Maximum QL sweeps spent on a single eigenvalue.
pub const MAX_SWEEPS: usize = 30;

/// Eigenvalues (unsorted) and eigenvectors of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `offdiag`.
///
/// Eigenvectors come back row-major: row `i` of the returned `n*n` buffer is
/// the eigenvector belonging to eigenvalue `i`.
pub(crate) fn tql(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    assert_eq!(offdiag.len() + 1, n.max(1), "offdiag must have length n - 1");
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    if n <= 1 {
        return Ok((d, z));
    }

    let anorm = (0..n)
        .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    let abs_floor = f64::EPSILON * anorm * 0.5;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= abs_floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_SWEEPS {
                return Err(Error::Solver {
                    index: l,
                    iterations: MAX_SWEEPS,
                });
            }
            iter += 1;

            // Wilkinson-type shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..];
                let zi1 = &mut hi[..n];
                for k in 0..n {
                    let f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut y = diag[i] * v[i] - lambda * v[i];
                if i > 0 {
                    y += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    y += off[i] * v[i + 1];
                }
                y * y
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn two_by_two() {
        let (d, z) = tql(&[1.0, 3.0], &[2.0]).unwrap();
        let mut ev = d.clone();
        ev.sort_by(f64::total_cmp);
        let disc = 5f64.sqrt();
        assert!((ev[0] - (2.0 - disc)).abs() < 1e-13, "{ev:?}");
        assert!((ev[1] - (2.0 + disc)).abs() < 1e-13);
        for j in 0..2 {
            assert!(residual(&[1.0, 3.0], &[2.0], d[j], &z[j * 2..j * 2 + 2]) < 1e-13);
        }
    }

    #[test]
    fn free_chain_matches_closed_form() {
        // tridiag(1, 0, 1) of size n has eigenvalues 2 cos(k pi / (n + 1)).
        let n = 40;
        let (mut d, _) = tql(&vec![0.0; n], &vec![1.0; n - 1]).unwrap();
        d.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in d.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn decoupled_blocks() {
        let diag = [1.0, 2.0, 5.0, -1.0];
        let off = [0.0, 0.5, 0.0];
        let (d, z) = tql(&diag, &off).unwrap();
        for j in 0..4 {
            assert!(residual(&diag, &off, d[j], &z[j * 4..j * 4 + 4]) < 1e-13);
        }
    }

    #[test]
    fn trivial_sizes() {
        let (d, z) = tql(&[4.0], &[]).unwrap();
        assert_eq!((d, z), (vec![4.0], vec![1.0]));
        let (d, z) = tql(&[], &[]).unwrap();
        assert!(d.is_empty() && z.is_empty());
    }
}
