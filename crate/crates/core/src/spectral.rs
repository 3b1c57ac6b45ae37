//! Eigen-decomposition of the subspace Hamiltonian and spectral analysis of
//! observables.
//!
//! A state evolves as `Psi(tau) = sum_j eps_j v_j exp(-i lambda_j tau)`, so
//! `<n3>(tau)` is a finite trigonometric sum over the eigenvalue differences
//! `lambda_i - lambda_j`. A spectrum that is an arithmetic progression makes
//! that sum a Fourier series with a finite recurrence time; an irregular
//! spectrum does not.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csv::num;
use crate::error::{Error, Result};
use crate::fock::WaveFunction;
use crate::hamiltonian::TridiagonalHamiltonian;
use crate::tridiag;

/// Relative deviation below which a spectrum counts as linearly spaced.
pub const LINEAR_SPACING_THRESHOLD: f64 = 1e-3;

/// Two frequencies are merged when closer than this fraction of `max |lambda|`.
pub const FREQUENCY_DEDUP_REL: f64 = 1e-3;

/// Lines lighter than this fraction of the heaviest line are pruned.
pub const LINE_PRUNE_REL: f64 = 1e-12;

/// Eigenvalues in ascending order and the matrix `beta`, whose row `j` holds
/// eigenvector `v_j` in the occupation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    lambdas: Vec<f64>,
    beta: Vec<f64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.beta[j * d..(j + 1) * d]
    }

    /// `beta_{jk}`: component `k` of eigenvector `j`.
    pub fn beta(&self, j: usize, k: usize) -> f64 {
        self.beta[j * self.dim() + k]
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.lambdas.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    /// `max |<v_i, v_j> - delta_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let dot: f64 = self.vector(i).iter().zip(self.vector(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max_j ||H v_j - lambda_j v_j||`.
    pub fn max_residual(&self, h: &TridiagonalHamiltonian) -> f64 {
        (0..self.dim())
            .map(|j| {
                let hv = h.apply_real(self.vector(j));
                hv.iter()
                    .zip(self.vector(j))
                    .map(|(a, b)| (a - self.lambdas[j] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max_k |lambda_k + lambda_{d-1-k}|`.
    pub fn symmetry_error(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|k| (self.lambdas[k] + self.lambdas[d - 1 - k]).abs())
            .fold(0.0, f64::max)
    }

    /// Indices of eigenvalues with `|lambda| <= rel * max |lambda|`.
    pub fn kernel(&self, rel: f64) -> Vec<usize> {
        let cut = rel * self.max_abs_lambda();
        (0..self.dim())
            .filter(|&j| self.lambdas[j].abs() <= cut)
            .collect()
    }

    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("k,lambda_k\n");
        for (k, l) in self.lambdas.iter().enumerate() {
            s.push_str(&format!("{k},{}\n", num(*l)));
        }
        s
    }
}

/// Full spectrum and eigenvectors, ascending, each eigenvector's
/// largest-magnitude component made positive.
pub fn eigensystem(h: &TridiagonalHamiltonian) -> Result<EigenSystem> {
    let d = h.dim();
    let (values, vectors) = tridiag::tql(&vec![0.0; d], h.offdiag())?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut lambdas = Vec::with_capacity(d);
    let mut beta = Vec::with_capacity(d * d);
    for &j in &order {
        lambdas.push(values[j]);
        let v = &vectors[j * d..(j + 1) * d];
        let mut pivot = 0;
        for k in 1..d {
            if v[k].abs() > v[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        beta.extend(v.iter().map(|x| sign * x));
    }
    Ok(EigenSystem { lambdas, beta })
}

/// Overlaps `eps_j = <v_j, psi0>`.
pub fn eigen_weights(psi0: &WaveFunction, es: &EigenSystem) -> Result<Vec<Complex64>> {
    if psi0.dim() != es.dim() {
        return Err(Error::Shape {
            expected: es.dim(),
            got: psi0.dim(),
        });
    }
    Ok((0..es.dim())
        .map(|j| {
            es.vector(j)
                .iter()
                .zip(psi0.amplitudes())
                .map(|(b, a)| a * b)
                .sum()
        })
        .collect())
}

pub fn weights_csv(eps: &[Complex64]) -> String {
    let mut s = String::from("j,eps_re,eps_im,eps_abs\n");
    for (j, e) in eps.iter().enumerate() {
        s.push_str(&format!("{j},{},{},{}\n", num(e.re), num(e.im), num(e.norm())));
    }
    s
}

/// One term `weight * exp(i freq tau)` of the `<n3>` expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub freq: f64,
    pub weight: Complex64,
    pub i: usize,
    pub j: usize,
}

/// All `d^2` ordered eigenpair lines of `<n3>(tau)`:
/// `weight_ij = conj(eps_i) eps_j sum_k beta_ik beta_jk k` at `lambda_i - lambda_j`.
pub fn spectral_lines_n3(psi0: &WaveFunction, es: &EigenSystem) -> Result<Vec<SpectralLine>> {
    let eps = eigen_weights(psi0, es)?;
    let d = es.dim();
    let mut lines = Vec::with_capacity(d * d);
    for i in 0..d {
        let vi = es.vector(i);
        for j in 0..d {
            let vj = es.vector(j);
            let m: f64 = (0..d).map(|k| vi[k] * vj[k] * k as f64).sum();
            lines.push(SpectralLine {
                freq: es.lambdas[i] - es.lambdas[j],
                weight: eps[i].conj() * eps[j] * m,
                i,
                j,
            });
        }
    }
    Ok(lines)
}

/// Lines kept after pruning, and how many were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedLines {
    pub lines: Vec<SpectralLine>,
    pub dropped: usize,
}

/// Drops lines with `|weight| < rel * max |weight|`. Reporting only: the
/// pruned set no longer reconstructs `<n3>` exactly.
pub fn prune_lines(lines: &[SpectralLine], rel: f64) -> PrunedLines {
    let max = lines.iter().map(|l| l.weight.norm()).fold(0.0, f64::max);
    let cut = rel * max;
    let kept: Vec<SpectralLine> = lines
        .iter()
        .filter(|l| l.weight.norm() >= cut && l.weight.norm() > 0.0)
        .copied()
        .collect();
    PrunedLines {
        dropped: lines.len() - kept.len(),
        lines: kept,
    }
}

/// `sum weight * exp(i freq tau)` before discarding the imaginary part.
pub fn reconstruct_n3_complex(lines: &[SpectralLine], tau: f64) -> Complex64 {
    lines
        .iter()
        .map(|l| l.weight * Complex64::from_polar(1.0, l.freq * tau))
        .sum()
}

/// `<n3>(tau)` rebuilt from an unpruned line list.
pub fn reconstruct_n3(lines: &[SpectralLine], tau: f64) -> f64 {
    reconstruct_n3_complex(lines, tau).re
}

pub fn lines_csv(lines: &[SpectralLine]) -> String {
    let mut s = String::from("freq,weight_re,weight_im,i,j\n");
    for l in lines {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            num(l.freq),
            num(l.weight.re),
            num(l.weight.im),
            l.i,
            l.j
        ));
    }
    s
}

/// Greedy clustering of sorted values: a new cluster opens whenever a value
/// sits more than `tol` above the current cluster's first member.
fn count_clusters(mut values: Vec<f64>, tol: f64) -> usize {
    values.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut start: Option<f64> = None;
    for v in values {
        match start {
            Some(s) if v - s <= tol => {}
            _ => {
                count += 1;
                start = Some(v);
            }
        }
    }
    count
}

/// Number of distinct nonnegative differences `lambda_i - lambda_j`, merging
/// frequencies within `rel * max |lambda|`.
pub fn count_distinct_frequencies(lambdas: &[f64], rel: f64) -> usize {
    let scale = lambdas.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let tol = rel * scale;
    let mut freqs = Vec::with_capacity(lambdas.len() * (lambdas.len() + 1) / 2);
    for (a, &la) in lambdas.iter().enumerate() {
        for &lb in &lambdas[..=a] {
            let f = (la - lb).abs();
            freqs.push(f);
        }
    }
    count_clusters(freqs, tol)
}

/// Distinct nonnegative frequencies among the given (typically pruned) lines.
pub fn count_realized_frequencies(lines: &[SpectralLine], max_abs_lambda: f64, rel: f64) -> usize {
    let freqs: Vec<f64> = lines
        .iter()
        .filter(|l| l.freq >= 0.0)
        .map(|l| l.freq)
        .collect();
    count_clusters(freqs, rel * max_abs_lambda)
}

/// Fit of the positive half-spectrum to an arithmetic progression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingReport {
    pub linear_verdict: bool,
    pub base: f64,
    pub max_deviation: f64,
    pub n_distinct_freqs: usize,
}

/// Fits the positive eigenvalues to `k * base` (odd `d`) or `(k - 1/2) * base`
/// (even `d`) by least squares through the origin and reports
/// `max_k |lambda_k - fit_k| / lambda_k`.
pub fn spacing_diagnostic(es: &EigenSystem) -> Result<SpacingReport> {
    let d = es.dim();
    if d < 3 {
        return Err(Error::Domain(format!(
            "spacing diagnostic needs d >= 3, got {d}"
        )));
    }
    let positive = &es.lambdas[d / 2 + d % 2..];
    let offset = if d % 2 == 1 { 0.0 } else { 0.5 };
    let xs: Vec<f64> = (1..=positive.len()).map(|k| k as f64 - offset).collect();
    let base = xs.iter().zip(positive).map(|(x, p)| x * p).sum::<f64>()
        / xs.iter().map(|x| x * x).sum::<f64>();
    let max_deviation = xs
        .iter()
        .zip(positive)
        .map(|(x, p)| (p - x * base).abs() / p.abs())
        .fold(0.0, f64::max);
    Ok(SpacingReport {
        linear_verdict: max_deviation < LINEAR_SPACING_THRESHOLD,
        base,
        max_deviation,
        n_distinct_freqs: count_distinct_frequencies(&es.lambdas, FREQUENCY_DEDUP_REL),
    })
}

/// `|<Psi(0), Psi(tau)>|^2` from the eigen-populations `|eps_j|^2`.
pub fn return_fidelity(lambdas: &[f64], populations: &[f64], tau: f64) -> f64 {
    let amp: Complex64 = lambdas
        .iter()
        .zip(populations)
        .map(|(l, p)| Complex64::from_polar(*p, -l * tau))
        .sum();
    amp.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recurrence {
    pub tau: f64,
    pub fidelity: f64,
    /// Fidelity never fell below the threshold (stationary state); `tau` is
    /// then just the first scan point.
    pub degenerate: bool,
}

/// First return of the return fidelity to `threshold` after it has dropped
/// below it, located on a scan of step `(2 pi / max |lambda|) / 20` and refined
/// to the local fidelity maximum by golden-section search.
pub fn recurrence_time(
    es: &EigenSystem,
    psi0: &WaveFunction,
    horizon: f64,
    threshold: f64,
) -> Result<Option<Recurrence>> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let populations: Vec<f64> = eigen_weights(psi0, es)?.iter().map(|e| e.norm_sqr()).collect();
    let lambdas = es.lambdas();
    let fid = |tau: f64| return_fidelity(lambdas, &populations, tau);

    let max_lambda = es.max_abs_lambda();
    let step = if max_lambda > 0.0 {
        2.0 * PI / max_lambda / 20.0
    } else {
        horizon / 1000.0
    };
    let n = (horizon / step).ceil() as usize;

    let mut left = false;
    let mut k = 1;
    while k <= n {
        let f = fid(k as f64 * step);
        if !left {
            left = f < threshold;
            k += 1;
            continue;
        }
        if f >= threshold {
            let mut best = f;
            while k < n {
                let next = fid((k + 1) as f64 * step);
                if next <= best {
                    break;
                }
                best = next;
                k += 1;
            }
            let (tau, fidelity) =
                golden_max(&fid, (k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
            let (tau, fidelity) = if fidelity >= best {
                (tau, fidelity)
            } else {
                (k as f64 * step, best)
            };
            return Ok(Some(Recurrence {
                tau,
                fidelity,
                degenerate: false,
            }));
        }
        k += 1;
    }
    if !left {
        return Ok(Some(Recurrence {
            tau: step,
            fidelity: fid(step),
            degenerate: true,
        }));
    }
    Ok(None)
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if (b - a).abs() <= 1e-14 * b.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
