//! Cartesian parameter sweeps with per-row error capture.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use threewave::classical::classical_growth_rate;
use threewave::csv::num;
use threewave::evolve::{evolve_with, Propagator};
use threewave::fock::{expectations, SubspaceSpec};
use threewave::linear::{quantum_growth_rate, spread_state, QuantumLinearParams, SpreadSpec};
use threewave::spectral::spacing_diagnostic;
use threewave::{EvolutionConfig, Method, TridiagonalHamiltonian};

use crate::config::{SweepSpec, TimeGrid};
use crate::error::{CliError, Context, Result};
use crate::experiment::divergence_time;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s2: i64,
    pub s3: i64,
    pub m: usize,
    pub epsilon: f64,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub n3: Option<f64>,
    #[serde(rename = "gammaQ")]
    pub gamma_q: Option<f64>,
    #[serde(rename = "gammaC")]
    pub gamma_c: Option<f64>,
    pub gamma_ratio_dev: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    pub divergence_time: Option<f64>,
    pub spacing_deviation: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn blank(s2: i64, s3: i64, m: usize, epsilon: f64) -> Self {
        Self {
            s2,
            s3,
            m,
            epsilon,
            n1: None,
            n2: None,
            n3: None,
            gamma_q: None,
            gamma_c: None,
            gamma_ratio_dev: None,
            c1: None,
            divergence_time: None,
            spacing_deviation: None,
            error: None,
        }
    }
}

/// Rows in expansion order: `s2` outermost, then `s3`, `m`, `epsilon`.
pub fn expand(spec: &SweepSpec) -> Vec<(i64, i64, usize, f64)> {
    let mut out = Vec::new();
    for &s2 in &spec.s2 {
        let s3s = if spec.s3.is_empty() {
            vec![s2]
        } else {
            spec.s3.clone()
        };
        for &s3 in &s3s {
            for &m in &spec.m {
                for &eps in &spec.epsilon {
                    out.push((s2, s3, m, eps));
                }
            }
        }
    }
    out
}

/// Evaluates every row, in parallel when `jobs` is not 1. Row order always
/// follows [`expand`].
pub fn sweep(
    spec: &SweepSpec,
    grid: &TimeGrid,
    method: Method,
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let points = expand(spec);
    let eval = |&(s2, s3, m, eps): &(i64, i64, usize, f64)| {
        let mut row = SweepRow::blank(s2, s3, m, eps);
        if let Err(e) = fill(&mut row, spec.max_dim, grid, method) {
            row.error = Some(e.to_string());
        }
        row
    };
    if jobs == Some(1) {
        return Ok(points.iter().map(eval).collect());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage("jobs", e.to_string()))?;
    Ok(pool.install(|| points.par_iter().map(eval).collect()))
}

fn fill(row: &mut SweepRow, max_dim: usize, grid: &TimeGrid, method: Method) -> Result<()> {
    let sp = SubspaceSpec::new(row.s2, row.s3).context("subspace")?;
    let psi0 = spread_state(sp, SpreadSpec::new(row.m, row.epsilon).context("spread")?)
        .context("spread")?;
    let e = expectations(&psi0).context("expectations")?;
    row.n1 = Some(e.n1);
    row.n2 = Some(e.n2);
    row.n3 = Some(e.n3);
    row.gamma_q = quantum_growth_rate(e.n1, e.n2, e.n3).gamma();
    row.gamma_c = classical_growth_rate(e.n1, e.n2, e.n3).gamma();
    if let (Some(q), Some(c)) = (row.gamma_q, row.gamma_c) {
        row.gamma_ratio_dev = Some((q / c - 1.0).abs());
    }

    let h = TridiagonalHamiltonian::build(sp);
    let params = if row.gamma_q.is_some() {
        Some(QuantumLinearParams::from_state(&h, &psi0).context("linear parameters")?)
    } else {
        None
    };
    row.c1 = params.map(|p| p.c1);

    if sp.dim() > max_dim {
        return Ok(());
    }
    let prop = Propagator::new(&h);
    if sp.dim() >= 3 {
        let es = prop.eigensystem().context("eigensystem")?;
        row.spacing_deviation = Some(spacing_diagnostic(&es).context("spacing")?.max_deviation);
    }
    if let Some(p) = params {
        let cfg =
            EvolutionConfig::uniform(method, grid.tau_max, grid.points).context("time grid")?;
        let res = evolve_with(&prop, &psi0, &cfg).context("evolve")?;
        row.divergence_time = divergence_time(&res, &p)?;
    }
    Ok(())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut s = String::from(
        "s2,s3,m,epsilon,n1,n2,n3,gammaQ,gammaC,gamma_ratio_dev,C1,divergence_time,spacing_deviation,error\n",
    );
    for r in rows {
        let cols = [
            r.s2.to_string(),
            r.s3.to_string(),
            r.m.to_string(),
            num(r.epsilon),
            opt(r.n1),
            opt(r.n2),
            opt(r.n3),
            opt(r.gamma_q),
            opt(r.gamma_c),
            opt(r.gamma_ratio_dev),
            opt(r.c1),
            opt(r.divergence_time),
            opt(r.spacing_deviation),
            r.error.as_deref().map(quote).unwrap_or_default(),
        ];
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}
