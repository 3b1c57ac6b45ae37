//! Invariant subspace of the three-wave Hamiltonian and states living in it.
//!
//! The operators `s2 = n1 + n3` and `s3 = n1 + n2` commute with the
//! Hamiltonian, so each pair of eigenvalues fixes a closed subspace of
//! dimension `s2 + 1` spanned by the occupation-number states
//!
//! ```text
//! psi_i = |s2 - i, s3 - s2 + i, i>,   i = 0..=s2
//! ```
//!
//! Wave functions are dense amplitude vectors over this basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `|sum |alpha_i|^2 - 1|`.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Conserved quantum numbers `(s2, s3)` fixing an invariant subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubspaceSpec {
    s2: u64,
    s3: u64,
}

impl SubspaceSpec {
    /// Validates `0 <= s2 <= s3`. Waves 2 and 3 are never swapped silently.
    pub fn new(s2: i64, s3: i64) -> Result<Self> {
        if s2 < 0 || s3 < 0 {
            return Err(Error::Domain(format!(
                "quantum numbers must be nonnegative, got s2 = {s2}, s3 = {s3}"
            )));
        }
        if s3 < s2 {
            return Err(Error::Convention { s2, s3 });
        }
        Ok(Self {
            s2: s2 as u64,
            s3: s3 as u64,
        })
    }

    pub fn s2(&self) -> u64 {
        self.s2
    }

    pub fn s3(&self) -> u64 {
        self.s3
    }

    /// Subspace dimension `d = s2 + 1`.
    pub fn dim(&self) -> usize {
        self.s2 as usize + 1
    }

    pub fn basis_state(&self, index: usize) -> Result<BasisState> {
        if index > self.s2 as usize {
            return Err(Error::Index {
                index,
                max: self.s2 as usize,
            });
        }
        let i = index as u64;
        Ok(BasisState {
            index,
            n1: self.s2 - i,
            n2: self.s3 - self.s2 + i,
            n3: i,
        })
    }

    pub fn basis(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(move |i| BasisState {
            index: i,
            n1: self.s2 - i as u64,
            n2: self.s3 - self.s2 + i as u64,
            n3: i as u64,
        })
    }
}

/// Convenience wrapper for [`SubspaceSpec::new`].
pub fn subspace_dimension(s2: i64, s3: i64) -> Result<SubspaceSpec> {
    SubspaceSpec::new(s2, s3)
}

/// Occupation-number basis state `psi_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisState {
    pub index: usize,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
}

impl BasisState {
    pub fn occupations(&self) -> (u64, u64, u64) {
        (self.n1, self.n2, self.n3)
    }
}

/// Amplitudes of a state over the basis of one invariant subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    spec: SubspaceSpec,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    /// Builds a normalized wave function, rejecting vectors whose norm is off
    /// by more than [`NORM_TOLERANCE`].
    pub fn new(spec: SubspaceSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        let psi = Self::new_unnormalized(spec, amplitudes)?;
        psi.check_norm(NORM_TOLERANCE)?;
        Ok(psi)
    }

    /// Builds a wave function without checking the norm. Observables still
    /// refuse to evaluate on it until it is normalized.
    pub fn new_unnormalized(spec: SubspaceSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != spec.dim() {
            return Err(Error::Shape {
                expected: spec.dim(),
                got: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        Ok(Self { spec, amplitudes })
    }

    /// Scales the amplitudes to unit norm. Fails on the zero vector.
    pub fn normalized(spec: SubspaceSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut psi = Self::new_unnormalized(spec, amplitudes)?;
        psi.renormalize()?;
        Ok(psi)
    }

    pub fn from_real(spec: SubspaceSpec, amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            spec,
            amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        )
    }

    /// The pure basis state `psi_index`.
    pub fn basis(spec: SubspaceSpec, index: usize) -> Result<Self> {
        spec.basis_state(index)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); spec.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { spec, amplitudes })
    }

    pub fn spec(&self) -> SubspaceSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_deviation(&self) -> f64 {
        (self.norm_sqr() - 1.0).abs()
    }

    pub fn check_norm(&self, tolerance: f64) -> Result<()> {
        let deviation = self.norm_deviation();
        if deviation > tolerance {
            Err(Error::Normalization {
                deviation,
                tolerance,
            })
        } else {
            Ok(())
        }
    }

    pub fn renormalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        for a in &mut self.amplitudes {
            *a /= norm;
        }
        Ok(())
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies every amplitude by `exp(i theta)`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            spec: self.spec,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }
}

/// Expected occupation numbers `(<n1>, <n2>, <n3>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

/// Expected occupations, each summed directly over the basis occupations.
pub fn expectations(psi: &WaveFunction) -> Result<Expectations> {
    psi.check_norm(NORM_TOLERANCE)?;
    Ok(expectations_of(psi.spec, &psi.probabilities()))
}

pub(crate) fn expectations_of(spec: SubspaceSpec, probabilities: &[f64]) -> Expectations {
    let mut e = Expectations {
        n1: 0.0,
        n2: 0.0,
        n3: 0.0,
    };
    for (b, &p) in spec.basis().zip(probabilities) {
        e.n1 += p * b.n1 as f64;
        e.n2 += p * b.n2 as f64;
        e.n3 += p * b.n3 as f64;
    }
    e
}

/// Variance of `n1`, `<n1^2> - <n1>^2`, in `[0, s2^2 / 4]`.
pub fn variance_n1(psi: &WaveFunction) -> Result<f64> {
    psi.check_norm(NORM_TOLERANCE)?;
    Ok(variance_n1_of(psi.spec, &psi.probabilities()))
}

// Centered form, nonnegative in floating point.
pub(crate) fn variance_n1_of(spec: SubspaceSpec, probabilities: &[f64]) -> f64 {
    let s2 = spec.s2() as f64;
    let mean: f64 = probabilities
        .iter()
        .enumerate()
        .map(|(j, p)| p * (s2 - j as f64))
        .sum();
    probabilities
        .iter()
        .enumerate()
        .map(|(j, p)| p * (s2 - j as f64 - mean).powi(2))
        .sum()
}

/// Observables of a state at one instant of normalized time `tau = t |g|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSnapshot {
    pub tau: f64,
    pub en1: f64,
    pub en2: f64,
    pub en3: f64,
    pub var_n1: f64,
    pub probabilities: Vec<f64>,
}

impl ObservableSnapshot {
    pub fn of(psi: &WaveFunction, tau: f64) -> Result<Self> {
        psi.check_norm(NORM_TOLERANCE)?;
        Ok(Self::from_probabilities(psi.spec, tau, psi.probabilities()))
    }

    pub(crate) fn from_probabilities(spec: SubspaceSpec, tau: f64, probabilities: Vec<f64>) -> Self {
        let e = expectations_of(spec, &probabilities);
        Self {
            tau,
            en1: e.n1,
            en2: e.n2,
            en3: e.n3,
            var_n1: variance_n1_of(spec, &probabilities),
            probabilities,
        }
    }
}
