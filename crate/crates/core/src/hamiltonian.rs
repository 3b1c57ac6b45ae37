//! Tridiagonal Hamiltonian of an invariant subspace.
//!
//! With the coupling phase fixed at `g = -i` the Hamiltonian is real
//! symmetric with a vanishing diagonal and off-diagonal couplings
//! `h_i = sqrt((s2 - i)(s3 - s2 + 1 + i)(i + 1))`. Only the coupling vector is
//! stored; `|g|` enters through the time normalization `tau = t |g|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csv::num;
use crate::error::{Error, Result};
use crate::fock::{SubspaceSpec, WaveFunction};

/// Coupling between `psi_i` and `psi_{i+1}`, for `0 <= i < s2`.
pub fn coupling(spec: SubspaceSpec, i: usize) -> Result<f64> {
    let s2 = spec.s2();
    if s2 == 0 || i as u64 >= s2 {
        return Err(Error::Index {
            index: i,
            max: s2.saturating_sub(1) as usize,
        });
    }
    Ok(coupling_unchecked(spec, i))
}

fn coupling_unchecked(spec: SubspaceSpec, i: usize) -> f64 {
    let (s2, s3, i) = (spec.s2() as f64, spec.s3() as f64, i as f64);
    ((s2 - i) * (s3 - s2 + 1.0 + i) * (i + 1.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    spec: SubspaceSpec,
    offdiag: Vec<f64>,
}

/// One row of the coupling export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub i: usize,
    pub h_i: f64,
}

impl TridiagonalHamiltonian {
    pub fn build(spec: SubspaceSpec) -> Self {
        let offdiag = (0..spec.dim() - 1)
            .map(|i| coupling_unchecked(spec, i))
            .collect();
        Self { spec, offdiag }
    }

    pub fn spec(&self) -> SubspaceSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.offdiag.len() + 1
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn max_coupling(&self) -> f64 {
        self.offdiag.iter().copied().fold(0.0, f64::max)
    }

    /// Gershgorin bound on the spectral radius, `max_i (h_{i-1} + h_i)`.
    pub fn spectral_radius_bound(&self) -> f64 {
        let h = &self.offdiag;
        (0..self.dim())
            .map(|i| {
                let left = if i > 0 { h[i - 1] } else { 0.0 };
                let right = h.get(i).copied().unwrap_or(0.0);
                left + right
            })
            .fold(0.0, f64::max)
    }

    /// `(H psi)_i = h_{i-1} alpha_{i-1} + h_i alpha_{i+1}`.
    pub fn apply(&self, psi: &WaveFunction) -> Result<Vec<Complex64>> {
        if psi.spec() != self.spec {
            return Err(Error::Shape {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(psi.amplitudes(), &mut out);
        Ok(out)
    }

    /// Matrix-vector product on raw amplitude slices of length `d`.
    pub fn apply_slice(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let h = &self.offdiag;
        let d = x.len();
        if d == 1 {
            out[0] = Complex64::new(0.0, 0.0);
            return;
        }
        out[0] = x[1] * h[0];
        for i in 1..d - 1 {
            out[i] = x[i - 1] * h[i - 1] + x[i + 1] * h[i];
        }
        out[d - 1] = x[d - 2] * h[d - 2];
    }

    /// Real-vector variant of [`Self::apply_into`].
    pub(crate) fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        let h = &self.offdiag;
        let d = x.len();
        let mut out = vec![0.0; d];
        for i in 0..d {
            if i > 0 {
                out[i] += h[i - 1] * x[i - 1];
            }
            if i + 1 < d {
                out[i] += h[i] * x[i + 1];
            }
        }
        out
    }

    pub fn coupling_rows(&self) -> Vec<CouplingRow> {
        self.offdiag
            .iter()
            .enumerate()
            .map(|(i, &h_i)| CouplingRow { i, h_i })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,h_i\n");
        for row in self.coupling_rows() {
            s.push_str(&format!("{},{}\n", row.i, num(row.h_i)));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.coupling_rows()).expect("coupling rows serialize")
    }
}
