//! Classical three-wave dynamics with the coupling normalized to `g = 1`.
//!
//! Amplitudes obey `A1' = A2 A3`, `A2' = -A1 A3*`, `A3' = -A1 A2*`, which
//! conserve `s2 = I1 + I3` and `s3 = I1 + I2` for the actions `Ij = |Aj|^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csv::num;
use crate::error::{Error, Result};

/// Relative mismatch allowed between supplied actions and invariants.
const INVARIANT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub t: f64,
    pub a: [Complex64; 3],
}

impl ClassicalState {
    pub fn new(a: [Complex64; 3]) -> Self {
        Self { t: 0.0, a }
    }

    /// Real, nonnegative amplitudes `Aj = sqrt(Ij)`.
    pub fn from_actions(actions: [f64; 3]) -> Result<Self> {
        check_actions(actions)?;
        Ok(Self::new(actions.map(|i| Complex64::new(i.sqrt(), 0.0))))
    }

    pub fn actions(&self) -> [f64; 3] {
        self.a.map(|z| z.norm_sqr())
    }

    pub fn s2(&self) -> f64 {
        let [i1, _, i3] = self.actions();
        i1 + i3
    }

    pub fn s3(&self) -> f64 {
        let [i1, i2, _] = self.actions();
        i1 + i2
    }

    /// `H = A1* A2 A3 - A1 A2* A3*`, purely imaginary.
    pub fn energy(&self) -> Complex64 {
        let [a1, a2, a3] = self.a;
        let p = a1.conj() * a2 * a3;
        p - p.conj()
    }

    /// `dI1/dt = A1* A2 A3 + c.c.`
    pub fn action_rate(&self) -> f64 {
        let [a1, a2, a3] = self.a;
        2.0 * (a1.conj() * a2 * a3).re
    }

    /// Whether all amplitudes are real and nonnegative.
    pub fn is_real_positive(&self) -> bool {
        self.a.iter().all(|z| z.im == 0.0 && z.re >= 0.0)
    }
}

fn check_actions(actions: [f64; 3]) -> Result<()> {
    if actions.iter().any(|i| !i.is_finite() || *i < 0.0) {
        return Err(Error::Domain(format!(
            "actions must be finite and nonnegative, got {actions:?}"
        )));
    }
    Ok(())
}

pub fn amplitude_rhs(a: &[Complex64; 3]) -> [Complex64; 3] {
    let [a1, a2, a3] = *a;
    [a2 * a3, -a1 * a3.conj(), -a1 * a2.conj()]
}

/// Right-hand sides of the closed second-order action equations.
pub fn action_accelerations(actions: [f64; 3], s2: f64, s3: f64) -> [f64; 3] {
    let [i1, i2, i3] = actions;
    [
        2.0 * (s2 * s3 + 3.0 * i1 * i1 - 2.0 * (s2 + s3) * i1),
        2.0 * (s3 * (s2 - s3) - 3.0 * i2 * i2 + 2.0 * (2.0 * s3 - s2) * i2),
        2.0 * (s2 * (s3 - s2) - 3.0 * i3 * i3 + 2.0 * (2.0 * s2 - s3) * i3),
    ]
}

/// Classical growth rate or the stable marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum GrowthRate {
    Unstable { gamma: f64 },
    /// Non-positive radicand; `magnitude = 2 sqrt(|radicand|)`.
    Stable { magnitude: f64 },
}

impl GrowthRate {
    pub(crate) fn from_radicand(radicand: f64) -> Self {
        if radicand > 0.0 {
            GrowthRate::Unstable {
                gamma: 2.0 * radicand.sqrt(),
            }
        } else {
            GrowthRate::Stable {
                magnitude: 2.0 * radicand.abs().sqrt(),
            }
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            GrowthRate::Unstable { gamma } => Some(gamma),
            GrowthRate::Stable { .. } => None,
        }
    }

    pub fn is_unstable(&self) -> bool {
        matches!(self, GrowthRate::Unstable { .. })
    }

    /// `gamma^2` with sign: negative on the stable branch.
    pub fn signed_square(&self) -> f64 {
        match *self {
            GrowthRate::Unstable { gamma } => gamma * gamma,
            GrowthRate::Stable { magnitude } => -magnitude * magnitude,
        }
    }
}

/// `gamma_C = 2 sqrt(I1 - I2 - I3)`.
pub fn classical_growth_rate(i1: f64, i2: f64, i3: f64) -> GrowthRate {
    GrowthRate::from_radicand(i1 - i2 - i3)
}

/// `dt = 1e-4 / gamma_C`, or `1e-4` on the stable branch.
pub fn default_classical_step(actions: [f64; 3]) -> f64 {
    let [i1, i2, i3] = actions;
    match classical_growth_rate(i1, i2, i3).gamma() {
        Some(g) => 1e-4 / g,
        None => 1e-4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLinearParams {
    #[serde(rename = "gammaC")]
    pub gamma_c: f64,
    #[serde(rename = "BC")]
    pub b_c: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

impl ClassicalLinearParams {
    /// Constants for real positive initial amplitudes `Aj(0) = sqrt(Iji)`.
    ///
    /// `C1` is fixed by matching the slope of the linear solution at `t = 0`
    /// to `dI1/dt(0) = 2 sqrt(I1 I2 I3)`.
    pub fn new(i1: f64, i2: f64, i3: f64) -> Result<Self> {
        check_actions([i1, i2, i3])?;
        let gamma = match classical_growth_rate(i1, i2, i3) {
            GrowthRate::Unstable { gamma } => gamma,
            GrowthRate::Stable { .. } => {
                return Err(Error::StableBranch {
                    radicand: i1 - i2 - i3,
                })
            }
        };
        let b = 2.0 * i1 * (i2 + i3) - 2.0 * i2 * i3;
        let c1 = (i1 * i2 * i3).sqrt() / gamma - b / (2.0 * gamma * gamma);
        Ok(Self {
            gamma_c: gamma,
            b_c: b,
            c1,
        })
    }

    /// Requires real nonnegative amplitudes.
    pub fn from_state(state: &ClassicalState) -> Result<Self> {
        if !state.is_real_positive() {
            return Err(Error::Domain(
                "C1 is defined only for real nonnegative initial amplitudes".into(),
            ));
        }
        let [i1, i2, i3] = state.actions();
        Self::new(i1, i2, i3)
    }

    /// `dI1(t) = B/g^2 + C1 e^{g t} - (B/g^2 + C1) e^{-g t}`.
    pub fn delta(&self, t: f64) -> f64 {
        let g = self.gamma_c;
        let base = self.b_c / (g * g);
        base + self.c1 * (g * t).exp() - (base + self.c1) * (-g * t).exp()
    }

    pub fn initial_slope(&self) -> f64 {
        let g = self.gamma_c;
        g * (2.0 * self.c1 + self.b_c / (g * g))
    }
}

pub fn classical_linear_solution(i1: f64, i2: f64, i3: f64, t: f64) -> Result<f64> {
    Ok(ClassicalLinearParams::new(i1, i2, i3)?.delta(t))
}

fn check_run(tau_end: f64, dt: f64) -> Result<usize> {
    if !(tau_end > 0.0 && tau_end.is_finite()) {
        return Err(Error::Domain(format!("tau_end must be positive, got {tau_end}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    Ok((tau_end / dt).ceil().max(1.0) as usize)
}

/// Amplitude trajectory sampled at every integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub states: Vec<ClassicalState>,
}

impl ClassicalTrajectory {
    pub fn last(&self) -> &ClassicalState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Largest `|s(t) - s(0)|` over `s2` and `s3`, relative to `max(s2(0), 1)`.
    pub fn invariant_drift(&self) -> f64 {
        let first = &self.states[0];
        let (s2, s3) = (first.s2(), first.s3());
        let scale = s2.max(1.0);
        self.states
            .iter()
            .map(|s| (s.s2() - s2).abs().max((s.s3() - s3).abs()) / scale)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,I1,I2,I3,s2,s3,ReA1,ImA1,ReA2,ImA2,ReA3,ImA3\n");
        for st in &self.states {
            let [i1, i2, i3] = st.actions();
            let mut cols = vec![st.t, i1, i2, i3, st.s2(), st.s3()];
            for z in st.a {
                cols.push(z.re);
                cols.push(z.im);
            }
            let row: Vec<String> = cols.into_iter().map(num).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

fn rk4_amplitudes(a: &[Complex64; 3], h: f64) -> [Complex64; 3] {
    let add = |x: &[Complex64; 3], k: &[Complex64; 3], c: f64| -> [Complex64; 3] {
        [x[0] + k[0] * c, x[1] + k[1] * c, x[2] + k[2] * c]
    };
    let k1 = amplitude_rhs(a);
    let k2 = amplitude_rhs(&add(a, &k1, h / 2.0));
    let k3 = amplitude_rhs(&add(a, &k2, h / 2.0));
    let k4 = amplitude_rhs(&add(a, &k3, h));
    let mut out = *a;
    for j in 0..3 {
        out[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
    }
    out
}

/// Fixed-step RK4 from `a0.t` to `a0.t + tau_end`.
///
/// The run is split into `ceil(tau_end / dt)` equal steps so the endpoint is
/// hit exactly.
pub fn integrate_amplitudes(a0: &ClassicalState, tau_end: f64, dt: f64) -> Result<ClassicalTrajectory> {
    let n = check_run(tau_end, dt)?;
    let h = tau_end / n as f64;
    let mut states = Vec::with_capacity(n + 1);
    states.push(*a0);
    let mut a = a0.a;
    for k in 1..=n {
        let next = rk4_amplitudes(&a, h);
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence {
                last_valid_time: a0.t + (k - 1) as f64 * h,
            });
        }
        a = next;
        states.push(ClassicalState {
            t: a0.t + k as f64 * h,
            a,
        });
    }
    Ok(ClassicalTrajectory { states })
}

/// Action trajectory from the second-order equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTrajectory {
    pub t: Vec<f64>,
    pub actions: Vec<[f64; 3]>,
    /// First derivatives `dIj/dt`.
    pub rates: Vec<[f64; 3]>,
    /// Largest `|I1'' + I2''|` or `|I1'' + I3''|` seen, relative to `|I1''|`
    /// scaled by `2 s2 s3`.
    pub antisymmetry_residual: f64,
}

impl ActionTrajectory {
    pub fn i1(&self) -> Vec<f64> {
        self.actions.iter().map(|a| a[0]).collect()
    }
}

/// Integrates the action equations as a six-dimensional first-order system.
///
/// `di0` is `dI1/dt(0)`; the daughters start with the opposite rate.
pub fn integrate_actions(
    i0: [f64; 3],
    s2: f64,
    s3: f64,
    tau_end: f64,
    dt: f64,
    di0: f64,
) -> Result<ActionTrajectory> {
    check_actions(i0)?;
    let scale = s2.abs().max(s3.abs()).max(1.0);
    if (i0[0] + i0[2] - s2).abs() > INVARIANT_TOLERANCE * scale
        || (i0[0] + i0[1] - s3).abs() > INVARIANT_TOLERANCE * scale
    {
        return Err(Error::Domain(format!(
            "actions {i0:?} inconsistent with s2 = {s2}, s3 = {s3}"
        )));
    }
    if !di0.is_finite() {
        return Err(Error::Domain(format!("initial rate must be finite, got {di0}")));
    }
    let n = check_run(tau_end, dt)?;
    let h = tau_end / n as f64;

    type Y = [f64; 6];
    let f = |y: &Y| -> Y {
        let acc = action_accelerations([y[0], y[1], y[2]], s2, s3);
        [y[3], y[4], y[5], acc[0], acc[1], acc[2]]
    };
    let add = |y: &Y, k: &Y, c: f64| -> Y { std::array::from_fn(|i| y[i] + c * k[i]) };
    let acc_scale = 2.0 * (s2 * s3).abs().max(1.0);
    let residual = |y: &Y| -> f64 {
        let acc = action_accelerations([y[0], y[1], y[2]], s2, s3);
        (acc[0] + acc[1]).abs().max((acc[0] + acc[2]).abs()) / acc_scale
    };

    let mut y: Y = [i0[0], i0[1], i0[2], di0, -di0, -di0];
    let mut out = ActionTrajectory {
        t: Vec::with_capacity(n + 1),
        actions: Vec::with_capacity(n + 1),
        rates: Vec::with_capacity(n + 1),
        antisymmetry_residual: residual(&y),
    };
    out.t.push(0.0);
    out.actions.push([y[0], y[1], y[2]]);
    out.rates.push([y[3], y[4], y[5]]);
    for k in 1..=n {
        let k1 = f(&y);
        let k2 = f(&add(&y, &k1, h / 2.0));
        let k3 = f(&add(&y, &k2, h / 2.0));
        let k4 = f(&add(&y, &k3, h));
        let next: Y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                last_valid_time: (k - 1) as f64 * h,
            });
        }
        y = next;
        out.antisymmetry_residual = out.antisymmetry_residual.max(residual(&y));
        out.t.push(k as f64 * h);
        out.actions.push([y[0], y[1], y[2]]);
        out.rates.push([y[3], y[4], y[5]]);
    }
    Ok(out)
}
