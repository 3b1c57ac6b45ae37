//! Spread initial states and the linearized quantum instability of `<n1>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::GrowthRate;
use crate::error::{Error, Result};
use crate::fock::{expectations, variance_n1, SubspaceSpec, WaveFunction, NORM_TOLERANCE};
use crate::hamiltonian::{coupling, TridiagonalHamiltonian};

/// Geometric spread `alpha_i ~ epsilon^|m - i|` around the center `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadSpec {
    pub m: usize,
    pub epsilon: f64,
}

impl SpreadSpec {
    pub fn new(m: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { m, epsilon })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Real spread state, truncated at both ends of the subspace and normalized.
pub fn spread_state(spec: SubspaceSpec, s: SpreadSpec) -> Result<WaveFunction> {
    check_epsilon(s.epsilon)?;
    let d = spec.dim();
    if s.m >= d {
        return Err(Error::Index {
            index: s.m,
            max: d - 1,
        });
    }
    let amps: Vec<f64> = (0..d)
        .map(|i| s.epsilon.powi(s.m.abs_diff(i) as i32))
        .collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let amps: Vec<f64> = amps.iter().map(|a| a / norm).collect();
    WaveFunction::from_real(spec, &amps)
}

/// Variance of an untruncated spread state,
/// `2 e^2 (1 - e^2) / (1 + e^2)^2 * sum_n e^{2n} (2n(n+1) + 1)`.
pub fn initial_variance(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let x = epsilon * epsilon;
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    let mut pow = 1.0;
    for n in 0.. {
        let n = n as f64;
        let term = pow * (2.0 * n * (n + 1.0) + 1.0);
        sum += term;
        if term <= f64::EPSILON * 1e-3 * sum {
            break;
        }
        pow *= x;
    }
    Ok(2.0 * x * (1.0 - x) / (1.0 + x).powi(2) * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceGrowth {
    pub slope: f64,
    pub valid_until: f64,
}

/// Short-time bound `slope = 2 epsilon (h_m - h_{m-1})`, `valid_until = 1/h_m`.
pub fn variance_growth_bound(spec: SubspaceSpec, s: SpreadSpec) -> Result<VarianceGrowth> {
    check_epsilon(s.epsilon)?;
    let s2 = spec.s2() as usize;
    if s.m > s2 {
        return Err(Error::Index { index: s.m, max: s2 });
    }
    if s.m == 0 || s.m == s2 {
        return Err(Error::Boundary { m: s.m });
    }
    let hm = coupling(spec, s.m)?;
    let hprev = coupling(spec, s.m - 1)?;
    Ok(VarianceGrowth {
        slope: 2.0 * s.epsilon * (hm - hprev),
        valid_until: 1.0 / hm,
    })
}

/// `gamma_Q = 2 sqrt(n1 - n2 - n3 - 1/2)`.
pub fn quantum_growth_rate(n1: f64, n2: f64, n3: f64) -> GrowthRate {
    GrowthRate::from_radicand(n1 - n2 - n3 - 0.5)
}

/// `B_Q = 2 n1 (1 + n2 + n3) - 2 n2 n3 - 6 delta1`.
pub fn quantum_b(n: [f64; 3], delta1_0: f64) -> f64 {
    let [n1, n2, n3] = n;
    2.0 * n1 * (1.0 + n2 + n3) - 2.0 * n2 * n3 - 6.0 * delta1_0
}

/// `d<n1>/dtau` at the state, `Re sum_i 2 conj(alpha_i) alpha_i' (s2 - i)`
/// with `alpha' = -i H alpha`.
pub fn initial_slope(h: &TridiagonalHamiltonian, psi0: &WaveFunction) -> Result<f64> {
    psi0.check_norm(NORM_TOLERANCE)?;
    let h_psi = h.apply(psi0)?;
    let s2 = h.spec().s2() as f64;
    let minus_i = Complex64::new(0.0, -1.0);
    Ok(psi0
        .amplitudes()
        .iter()
        .zip(&h_psi)
        .enumerate()
        .map(|(i, (a, hp))| 2.0 * (a.conj() * minus_i * hp).re * (s2 - i as f64))
        .sum())
}

/// Solves `d<n1>/dtau(0) = gamma (2 C1 + B / gamma^2)` for `C1`.
pub fn determine_c1(h: &TridiagonalHamiltonian, psi0: &WaveFunction, gamma_q: f64, b_q: f64) -> Result<f64> {
    if !(gamma_q > 0.0 && gamma_q.is_finite()) {
        return Err(Error::DegenerateGrowth);
    }
    let slope = initial_slope(h, psi0)?;
    Ok(0.5 * (slope / gamma_q - b_q / (gamma_q * gamma_q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumLinearParams {
    #[serde(rename = "gammaQ")]
    pub gamma_q: f64,
    #[serde(rename = "BQ")]
    pub b_q: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub delta1_0: f64,
    pub n_init: [f64; 3],
}

impl QuantumLinearParams {
    /// Constants from the actual expectations and variance of `psi0`.
    pub fn from_state(h: &TridiagonalHamiltonian, psi0: &WaveFunction) -> Result<Self> {
        let e = expectations(psi0)?;
        let delta1_0 = variance_n1(psi0)?;
        let n_init = [e.n1, e.n2, e.n3];
        let radicand = e.n1 - e.n2 - e.n3 - 0.5;
        let gamma_q = match quantum_growth_rate(e.n1, e.n2, e.n3) {
            GrowthRate::Unstable { gamma } => gamma,
            GrowthRate::Stable { .. } if radicand == 0.0 => return Err(Error::DegenerateGrowth),
            GrowthRate::Stable { .. } => return Err(Error::StableBranch { radicand }),
        };
        let b_q = quantum_b(n_init, delta1_0);
        let c1 = determine_c1(h, psi0, gamma_q, b_q)?;
        Ok(Self {
            gamma_q,
            b_q,
            c1,
            delta1_0,
            n_init,
        })
    }

    pub fn gamma_q_sq(&self) -> f64 {
        self.gamma_q * self.gamma_q
    }

    pub fn initial_slope(&self) -> f64 {
        self.gamma_q * (2.0 * self.c1 + self.b_q / self.gamma_q_sq())
    }
}

/// `dn1(tau) = B/g^2 + C1 e^{g tau} - (B/g^2 + C1) e^{-g tau}`.
pub fn quantum_linear_solution(params: &QuantumLinearParams, tau: f64) -> Result<f64> {
    let g = params.gamma_q;
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::StableBranch { radicand: g * g / 4.0 });
    }
    let base = params.b_q / (g * g);
    Ok(base + params.c1 * (g * tau).exp() - (base + params.c1) * (-g * tau).exp())
}

/// Parameter report for export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearReport {
    #[serde(rename = "gammaQ")]
    pub gamma_q: f64,
    #[serde(rename = "gammaQ_sq")]
    pub gamma_q_sq: f64,
    #[serde(rename = "BQ")]
    pub b_q: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub delta1_0: f64,
    pub valid_until: Option<f64>,
}

impl LinearReport {
    pub fn new(params: &QuantumLinearParams, bound: Option<VarianceGrowth>) -> Self {
        Self {
            gamma_q: params.gamma_q,
            gamma_q_sq: params.gamma_q_sq(),
            b_q: params.b_q,
            c1: params.c1,
            delta1_0: params.delta1_0,
            valid_until: bound.map(|b| b.valid_until),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
