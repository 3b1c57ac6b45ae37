//! Schrödinger propagation `i d/dtau Psi = H Psi` inside an invariant
//! subspace.
//!
//! Two independent routes are available: spectral propagation through the
//! eigen-decomposition (the default) and fixed-step RK4 on the coupled
//! amplitude equations `i alpha_i' = h_{i-1} alpha_{i-1} + h_i alpha_{i+1}`.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csv::num;
use crate::error::{Error, Result};
use crate::fock::{ObservableSnapshot, WaveFunction, NORM_TOLERANCE};
use crate::hamiltonian::TridiagonalHamiltonian;
use crate::spectral::{self, EigenSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    ExactEigen,
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-eigen" | "eigen" | "exact" => Ok(Method::ExactEigen),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::Domain(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::ExactEigen => "exact-eigen",
            Method::Rk4 => "rk4",
        })
    }
}

/// Default RK4 step: `min(0.005 / rho, 1e-3)` with `rho` the Gershgorin bound
/// on the spectral radius, so `|lambda| dt <= 0.005` for every mode.
pub fn default_rk4_step(h: &TridiagonalHamiltonian) -> f64 {
    let rho = h.spectral_radius_bound();
    if rho > 0.0 {
        (0.005 / rho).min(1e-3)
    } else {
        1e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub method: Method,
    /// RK4 step; `None` selects [`default_rk4_step`].
    pub dt: Option<f64>,
    /// Output times, strictly increasing from 0.
    pub tau_grid: Vec<f64>,
    /// Maximum tolerated `|norm^2 - 1|` along the run.
    pub norm_check: f64,
}

impl EvolutionConfig {
    pub fn new(method: Method, tau_grid: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            method,
            dt: None,
            tau_grid,
            norm_check: match method {
                Method::ExactEigen => 1e-10,
                Method::Rk4 => 1e-8,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `points` equally spaced times covering `[0, tau_max]`.
    pub fn uniform(method: Method, tau_max: f64, points: usize) -> Result<Self> {
        if points < 2 || !(tau_max > 0.0) {
            return Err(Error::Grid(format!(
                "need tau_max > 0 and at least 2 points, got {tau_max} and {points}"
            )));
        }
        let grid = (0..points)
            .map(|k| tau_max * k as f64 / (points - 1) as f64)
            .collect();
        Self::new(method, grid)
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_norm_check(mut self, tol: f64) -> Self {
        self.norm_check = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.tau_grid.first() {
            None => return Err(Error::Grid("empty time grid".into())),
            Some(&t0) if t0 != 0.0 => {
                return Err(Error::Grid(format!("grid must start at 0, starts at {t0}")))
            }
            _ => {}
        }
        if self.tau_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::Grid("non-finite grid time".into()));
        }
        if self.tau_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("grid times must be strictly increasing".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Grid(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

/// Spectral propagator for one Hamiltonian; the eigen-decomposition is
/// computed on first use and shared read-only afterwards.
#[derive(Debug, Clone)]
pub struct Propagator {
    h: TridiagonalHamiltonian,
    eigen: Arc<OnceLock<Arc<EigenSystem>>>,
}

impl Propagator {
    pub fn new(h: &TridiagonalHamiltonian) -> Self {
        Self {
            h: h.clone(),
            eigen: Arc::new(OnceLock::new()),
        }
    }

    pub fn from_eigensystem(h: &TridiagonalHamiltonian, es: Arc<EigenSystem>) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(es);
        Self {
            h: h.clone(),
            eigen: Arc::new(cell),
        }
    }

    pub fn hamiltonian(&self) -> &TridiagonalHamiltonian {
        &self.h
    }

    pub fn eigensystem(&self) -> Result<Arc<EigenSystem>> {
        if let Some(es) = self.eigen.get() {
            return Ok(es.clone());
        }
        let es = Arc::new(spectral::eigensystem(&self.h)?);
        Ok(self.eigen.get_or_init(|| es).clone())
    }

    /// Binds an initial state, precomputing its eigen-weights.
    pub fn prepare(&self, psi0: &WaveFunction) -> Result<PreparedState> {
        check_state(&self.h, psi0)?;
        let es = self.eigensystem()?;
        let weights = spectral::eigen_weights(psi0, &es)?;
        Ok(PreparedState {
            spec: psi0.spec(),
            es,
            weights,
        })
    }
}

/// An initial state expanded in the eigenbasis.
#[derive(Debug, Clone)]
pub struct PreparedState {
    spec: crate::fock::SubspaceSpec,
    es: Arc<EigenSystem>,
    weights: Vec<Complex64>,
}

impl PreparedState {
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn amplitudes_at(&self, tau: f64) -> Vec<Complex64> {
        let d = self.es.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for (j, (&lambda, &w)) in self.es.lambdas().iter().zip(&self.weights).enumerate() {
            let c = w * Complex64::from_polar(1.0, -lambda * tau);
            for (o, b) in out.iter_mut().zip(self.es.vector(j)) {
                *o += c * b;
            }
        }
        out
    }

    pub fn state_at(&self, tau: f64) -> Result<WaveFunction> {
        WaveFunction::new_unnormalized(self.spec, self.amplitudes_at(tau))
    }

    pub fn probabilities_at(&self, tau: f64) -> Vec<f64> {
        self.amplitudes_at(tau).iter().map(|a| a.norm_sqr()).collect()
    }
}

fn check_state(h: &TridiagonalHamiltonian, psi: &WaveFunction) -> Result<()> {
    if psi.spec() != h.spec() {
        return Err(Error::Shape {
            expected: h.dim(),
            got: psi.dim(),
        });
    }
    psi.check_norm(NORM_TOLERANCE)
}

fn rk4_step(h: &TridiagonalHamiltonian, a: &mut [Complex64], dt: f64, k: &mut [Vec<Complex64>; 5]) {
    let minus_i = Complex64::new(0.0, -1.0);
    let d = a.len();
    let [k1, k2, k3, k4, tmp] = k;
    h.apply_into(a, k1);
    k1.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..d {
        tmp[i] = a[i] + k1[i] * (0.5 * dt);
    }
    h.apply_into(tmp, k2);
    k2.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..d {
        tmp[i] = a[i] + k2[i] * (0.5 * dt);
    }
    h.apply_into(tmp, k3);
    k3.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..d {
        tmp[i] = a[i] + k3[i] * dt;
    }
    h.apply_into(tmp, k4);
    k4.iter_mut().for_each(|x| *x *= minus_i);
    for i in 0..d {
        a[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// Fixed-step RK4 integration visiting each grid time exactly: every grid
/// interval is split into the fewest equal steps no longer than `dt`.
struct Rk4Run<'a> {
    h: &'a TridiagonalHamiltonian,
    amps: Vec<Complex64>,
    tau: f64,
    dt: f64,
    scratch: [Vec<Complex64>; 5],
}

impl<'a> Rk4Run<'a> {
    fn new(h: &'a TridiagonalHamiltonian, psi0: &WaveFunction, dt: f64) -> Self {
        let d = psi0.dim();
        let z = vec![Complex64::new(0.0, 0.0); d];
        Self {
            h,
            amps: psi0.amplitudes().to_vec(),
            tau: 0.0,
            dt,
            scratch: [z.clone(), z.clone(), z.clone(), z.clone(), z],
        }
    }

    fn advance_to(&mut self, target: f64) -> Result<()> {
        let span = target - self.tau;
        if span <= 0.0 {
            return Ok(());
        }
        let steps = (span / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let step = span / steps as f64;
        for _ in 0..steps {
            rk4_step(self.h, &mut self.amps, step, &mut self.scratch);
        }
        if self.amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Divergence {
                last_valid_time: self.tau,
            });
        }
        self.tau = target;
        Ok(())
    }
}

/// `Psi(tau)` from `psi0` by the configured method.
pub fn propagate(
    h: &TridiagonalHamiltonian,
    psi0: &WaveFunction,
    tau: f64,
    cfg: &EvolutionConfig,
) -> Result<WaveFunction> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be nonnegative, got {tau}")));
    }
    check_state(h, psi0)?;
    let psi = match cfg.method {
        Method::ExactEigen => Propagator::new(h).prepare(psi0)?.state_at(tau)?,
        Method::Rk4 => {
            let mut run = Rk4Run::new(h, psi0, cfg.dt.unwrap_or_else(|| default_rk4_step(h)));
            run.advance_to(tau)?;
            WaveFunction::new_unnormalized(psi0.spec(), run.amps)?
        }
    };
    let drift = psi.norm_deviation();
    if drift > cfg.norm_check {
        return Err(Error::IntegrationQuality {
            drift,
            tolerance: cfg.norm_check,
        });
    }
    Ok(psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub snapshots: Vec<ObservableSnapshot>,
    pub final_state: WaveFunction,
    /// Largest `|norm^2 - 1|` seen on the grid.
    pub norm_drift: f64,
}

impl EvolutionResult {
    /// CSV `tau,en1,en2,en3,var_n1[,p0,...,p{d-1}]`.
    pub fn to_csv(&self, with_probabilities: bool) -> String {
        let d = self.final_state.dim();
        let mut s = String::from("tau,en1,en2,en3,var_n1");
        if with_probabilities {
            for i in 0..d {
                s.push_str(&format!(",p{i}"));
            }
        }
        s.push('\n');
        for snap in &self.snapshots {
            let cols = [snap.tau, snap.en1, snap.en2, snap.en3, snap.var_n1];
            s.push_str(&cols.map(num).join(","));
            if with_probabilities {
                for &p in &snap.probabilities {
                    s.push(',');
                    s.push_str(&num(p));
                }
            }
            s.push('\n');
        }
        s
    }
}

/// One snapshot per grid time.
pub fn evolve_observables(
    h: &TridiagonalHamiltonian,
    psi0: &WaveFunction,
    cfg: &EvolutionConfig,
) -> Result<EvolutionResult> {
    evolve_with(&Propagator::new(h), psi0, cfg)
}

/// As [`evolve_observables`], reusing a propagator's cached eigensystem.
pub fn evolve_with(
    prop: &Propagator,
    psi0: &WaveFunction,
    cfg: &EvolutionConfig,
) -> Result<EvolutionResult> {
    cfg.validate()?;
    let h = prop.hamiltonian();
    check_state(h, psi0)?;
    let spec = psi0.spec();
    let mut snapshots = Vec::with_capacity(cfg.tau_grid.len());
    let mut norm_drift: f64 = 0.0;

    let mut record = |tau: f64, amps: &[Complex64]| -> Result<()> {
        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        let drift = (probs.iter().sum::<f64>() - 1.0).abs();
        norm_drift = norm_drift.max(drift);
        if drift > cfg.norm_check {
            return Err(Error::IntegrationQuality {
                drift,
                tolerance: cfg.norm_check,
            });
        }
        snapshots.push(ObservableSnapshot::from_probabilities(spec, tau, probs));
        Ok(())
    };

    let final_amps = match cfg.method {
        Method::ExactEigen => {
            let prepared = prop.prepare(psi0)?;
            let mut last = Vec::new();
            for &tau in &cfg.tau_grid {
                last = prepared.amplitudes_at(tau);
                record(tau, &last)?;
            }
            last
        }
        Method::Rk4 => {
            let mut run = Rk4Run::new(h, psi0, cfg.dt.unwrap_or_else(|| default_rk4_step(h)));
            for &tau in &cfg.tau_grid {
                run.advance_to(tau)?;
                record(tau, &run.amps)?;
            }
            run.amps
        }
    };

    Ok(EvolutionResult {
        snapshots,
        final_state: WaveFunction::new_unnormalized(spec, final_amps)?,
        norm_drift,
    })
}

/// Comparison of a finite-difference `d^2<n1>/dtau^2` with the closed
/// Heisenberg right-hand side `2(s2 s3 + 3<n1^2> - (2 s2 + 2 s3 + 1)<n1>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergCheck {
    pub finite_difference: f64,
    pub rhs: f64,
    /// `|fd - rhs|` over the magnitude scale of the right-hand side terms.
    pub residual: f64,
}

/// Five-point central difference of `<n1>` along exact propagation, step
/// `0.01 / rho` with `rho` the spectral-radius bound.
pub fn heisenberg_rhs_check(h: &TridiagonalHamiltonian, psi: &WaveFunction) -> Result<HeisenbergCheck> {
    check_state(h, psi)?;
    let spec = psi.spec();
    let (s2, s3) = (spec.s2() as f64, spec.s3() as f64);
    let prepared = Propagator::new(h).prepare(psi)?;

    let rho = h.spectral_radius_bound();
    let step = if rho > 0.0 { 0.01 / rho } else { 1e-3 };
    let n1_at = |tau: f64| {
        prepared
            .probabilities_at(tau)
            .iter()
            .enumerate()
            .map(|(j, p)| p * (s2 - j as f64))
            .sum::<f64>()
    };
    let f = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|k| n1_at(k * step));
    let fd = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * step * step);

    let probs = psi.probabilities();
    let n1: f64 = probs.iter().enumerate().map(|(j, p)| p * (s2 - j as f64)).sum();
    let n1_sq: f64 = probs
        .iter()
        .enumerate()
        .map(|(j, p)| p * (s2 - j as f64).powi(2))
        .sum();
    let rhs = 2.0 * (s2 * s3 + 3.0 * n1_sq - (2.0 * s2 + 2.0 * s3 + 1.0) * n1);
    let scale = 2.0 * (s2 * s3 + 3.0 * n1_sq + (2.0 * s2 + 2.0 * s3 + 1.0) * n1);
    let residual = if scale > 0.0 { (fd - rhs).abs() / scale } else { (fd - rhs).abs() };
    Ok(HeisenbergCheck {
        finite_difference: fd,
        rhs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expectations, SubspaceSpec};

    fn setup(s2: i64, s3: i64) -> (SubspaceSpec, TridiagonalHamiltonian) {
        let spec = SubspaceSpec::new(s2, s3).unwrap();
        (spec, TridiagonalHamiltonian::build(spec))
    }

    #[test]
    fn zero_time_is_identity() {
        let (spec, h) = setup(5, 7);
        let psi = WaveFunction::basis(spec, 2).unwrap();
        for method in [Method::ExactEigen, Method::Rk4] {
            let cfg = EvolutionConfig::new(method, vec![0.0]).unwrap();
            let out = propagate(&h, &psi, 0.0, &cfg).unwrap();
            for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn three_state_closed_form() {
        // spectrum {0, +-sqrt6}: the kernel part (2, 0, -sqrt2) / 3 of e0 is
        // frozen and the remainder rotates at sqrt6
        let (spec, h) = setup(2, 2);
        let psi = WaveFunction::basis(spec, 0).unwrap();
        let r6 = 6f64.sqrt();
        let cfg = EvolutionConfig::new(Method::ExactEigen, vec![0.0]).unwrap();
        for tau in [0.1, 0.7, 2.3] {
            let out = propagate(&h, &psi, tau, &cfg).unwrap();
            let a0 = (2.0 + (r6 * tau).cos()) / 3.0;
            let a1 = -(r6 * tau).sin() / r6 * 2f64.sqrt();
            let a2 = 2f64.sqrt() * ((r6 * tau).cos() - 1.0) / 3.0;
            let got = out.amplitudes();
            assert!((got[0] - Complex64::new(a0, 0.0)).norm() < 1e-13, "{tau}");
            assert!((got[1] - Complex64::new(0.0, a1)).norm() < 1e-13, "{tau}");
            assert!((got[2] - Complex64::new(a2, 0.0)).norm() < 1e-13, "{tau}");
        }
    }

    #[test]
    fn rk4_agrees_with_exact_on_three_states() {
        let (spec, h) = setup(2, 2);
        let psi = WaveFunction::basis(spec, 0).unwrap();
        let exact = EvolutionConfig::new(Method::ExactEigen, vec![0.0]).unwrap();
        let rk4 = EvolutionConfig::new(Method::Rk4, vec![0.0]).unwrap();
        for tau in [0.25, 1.0, 3.0] {
            let a = propagate(&h, &psi, tau, &exact).unwrap();
            let b = propagate(&h, &psi, tau, &rk4).unwrap();
            let err = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "tau {tau}: {err}");
        }
    }

    #[test]
    fn stationary_states_do_not_move() {
        let (spec, h) = setup(6, 9);
        let es = spectral::eigensystem(&h).unwrap();
        let v = WaveFunction::from_real(spec, es.vector(3)).unwrap();
        let lambda = es.lambdas()[3];
        let cfg = EvolutionConfig::uniform(Method::ExactEigen, 2.0, 9).unwrap();
        let out = propagate(&h, &v, 2.0, &cfg).unwrap();
        let phase = Complex64::from_polar(1.0, -lambda * 2.0);
        for (a, b) in out.amplitudes().iter().zip(v.amplitudes()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
        let res = evolve_observables(&h, &v, &cfg).unwrap();
        let e0 = expectations(&v).unwrap();
        for s in &res.snapshots {
            assert!((s.en1 - e0.n1).abs() < 1e-11);
            assert!((s.var_n1 - res.snapshots[0].var_n1).abs() < 1e-10);
        }
    }

    #[test]
    fn rk4_visits_grid_times_exactly() {
        let (spec, h) = setup(4, 4);
        let psi = WaveFunction::basis(spec, 0).unwrap();
        let grid = vec![0.0, 0.013, 0.05, 0.0501, 0.2];
        let cfg = EvolutionConfig::new(Method::Rk4, grid.clone()).unwrap().with_dt(0.003);
        let res = evolve_observables(&h, &psi, &cfg).unwrap();
        let taus: Vec<f64> = res.snapshots.iter().map(|s| s.tau).collect();
        assert_eq!(taus, grid);
        let exact = EvolutionConfig::new(Method::ExactEigen, grid).unwrap();
        let reference = evolve_observables(&h, &psi, &exact).unwrap();
        for (a, b) in res.snapshots.iter().zip(&reference.snapshots) {
            assert!((a.en1 - b.en1).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(EvolutionConfig::new(Method::Rk4, vec![]).is_err());
        assert!(EvolutionConfig::new(Method::Rk4, vec![0.1, 0.2]).is_err());
        assert!(EvolutionConfig::new(Method::Rk4, vec![0.0, 0.2, 0.2]).is_err());
        assert!(EvolutionConfig::uniform(Method::Rk4, 1.0, 1).is_err());
        let cfg = EvolutionConfig::new(Method::Rk4, vec![0.0, 1.0]).unwrap().with_dt(-1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn coarse_rk4_trips_the_norm_check() {
        let (spec, h) = setup(30, 30);
        let psi = WaveFunction::basis(spec, 0).unwrap();
        let cfg = EvolutionConfig::uniform(Method::Rk4, 1.0, 3).unwrap().with_dt(0.05);
        assert!(matches!(
            evolve_observables(&h, &psi, &cfg),
            Err(Error::IntegrationQuality { .. }) | Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn heisenberg_identity_on_pump_state() {
        let (spec, h) = setup(100, 100);
        let psi = WaveFunction::basis(spec, 0).unwrap();
        let check = heisenberg_rhs_check(&h, &psi).unwrap();
        // <n1> = 100, <n1^2> = 1e4: 2(1e4 + 3e4 - 401 * 100) = -200
        assert!((check.rhs + 200.0).abs() < 1e-9);
        assert!(check.residual <= 1e-5, "{check:?}");
    }

    #[test]
    fn heisenberg_identity_on_eigenvectors() {
        let (spec, h) = setup(12, 15);
        let es = spectral::eigensystem(&h).unwrap();
        for j in 0..es.dim() {
            let v = WaveFunction::from_real(spec, es.vector(j)).unwrap();
            let check = heisenberg_rhs_check(&h, &v).unwrap();
            let scale = 2.0 * (12.0 * 15.0 + 3.0 * 144.0 + 55.0 * 12.0);
            assert!(check.finite_difference.abs() <= 1e-8 * scale, "{check:?}");
            assert!(check.rhs.abs() <= 1e-8 * scale, "{check:?}");
            assert!(check.residual <= 1e-8, "{check:?}");
        }
    }

    #[test]
    fn heisenberg_identity_exact_on_three_states() {
        // d^2<n1>/dtau^2 at tau = 0 equals <[H,[N1,H]]> = 2<H N1 H> - <H^2 N1> - <N1 H^2>
        // for real states; brute-force it with dense 3x3 matrices.
        let (spec, h) = setup(2, 2);
        let (a, b) = (2f64.sqrt(), 2.0);
        let hm = [[0.0, a, 0.0], [a, 0.0, b], [0.0, b, 0.0]];
        let n1 = [2.0, 1.0, 0.0];
        for m in 0..3 {
            let mut e = [0.0; 3];
            e[m] = 1.0;
            let he: Vec<f64> = (0..3).map(|i| (0..3).map(|k| hm[i][k] * e[k]).sum()).collect();
            let h2e: Vec<f64> = (0..3).map(|i| (0..3).map(|k| hm[i][k] * he[k]).sum()).collect();
            let hnh: f64 = (0..3).map(|i| he[i] * n1[i] * he[i]).sum();
            let h2n: f64 = (0..3).map(|i| e[i] * n1[i] * h2e[i]).sum();
            let exact = 2.0 * hnh - 2.0 * h2n;
            let psi = WaveFunction::basis(spec, m).unwrap();
            let check = heisenberg_rhs_check(&h, &psi).unwrap();
            assert!((check.rhs - exact).abs() < 1e-12, "m = {m}: {} vs {exact}", check.rhs);
            assert!((check.finite_difference - exact).abs() < 1e-8, "{check:?}");
        }
    }

    #[test]
    fn csv_layout() {
        let (spec, h) = setup(2, 2);
        let psi = WaveFunction::basis(spec, 0).unwrap();
        let cfg = EvolutionConfig::uniform(Method::ExactEigen, 0.5, 3).unwrap();
        let res = evolve_observables(&h, &psi, &cfg).unwrap();
        let csv = res.to_csv(true);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "tau,en1,en2,en3,var_n1,p0,p1,p2");
        let parse = |l: &str| -> Vec<f64> { l.split(',').map(|x| x.parse().unwrap()).collect() };
        let first = parse(lines.next().unwrap());
        let expected = [0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        for (a, b) in first.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{first:?}");
        }
        let row = parse(lines.next().unwrap());
        assert_eq!(row.len(), 8);
        assert_eq!(row[0], 0.25);
        assert_eq!(res.to_csv(false).lines().next().unwrap(), "tau,en1,en2,en3,var_n1");
        assert_eq!(csv.lines().count(), 4);
    }
}
