//! Execution of one validated experiment into an output directory.

use serde::Serialize;
use serde_json::json;
use threewave::classical::{
    classical_growth_rate, default_classical_step, integrate_amplitudes, ClassicalLinearParams,
};
use threewave::csv::num;
use threewave::evolve::{evolve_with, Propagator};
use threewave::fock::SubspaceSpec;
use threewave::linear::{
    quantum_linear_solution, spread_state, variance_growth_bound, LinearReport,
    QuantumLinearParams, SpreadSpec,
};
use threewave::spectral::{
    eigen_weights, lines_csv, prune_lines, recurrence_time, return_fidelity, spacing_diagnostic,
    spectral_lines_n3, weights_csv,
};
use threewave::{
    ClassicalState, Complex64, EvolutionConfig, EvolutionResult, TridiagonalHamiltonian,
    WaveFunction,
};

use crate::config::{ExperimentConfig, Format, Kind, RecurrenceConfig};
use crate::error::{CliError, Context, Result};
use crate::manifest::OutputDir;
use crate::svg::{Plot, Series};
use crate::sweep::{sweep, sweep_csv};

/// Probability tables above this many cells need an explicit opt-in.
pub const PROBABILITY_CELL_LIMIT: usize = 5_000_000;

/// Relative deviation of the linear solution that marks divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 0.1;

/// Spectral line tables cost `O(d^3)`; larger subspaces skip them.
pub const LINES_MAX_DIM: usize = 1001;

/// Pruning level for the exported line table.
pub const LINE_PRUNE_REL: f64 = 1e-12;

pub(crate) fn subspace(e: &ExperimentConfig) -> Result<SubspaceSpec> {
    let (s2, s3) = e.labels();
    SubspaceSpec::new(s2, s3).context("subspace")
}

pub(crate) fn initial_state(e: &ExperimentConfig, sp: SubspaceSpec) -> Result<WaveFunction> {
    let ic = &e.initial;
    if let Some(m) = ic.m {
        let spread = SpreadSpec::new(m, ic.epsilon.unwrap_or(0.0)).context("initial state")?;
        return spread_state(sp, spread).context("initial state");
    }
    if let Some(a) = &ic.amplitudes {
        let amps = a.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        return WaveFunction::normalized(sp, amps).context("initial state");
    }
    WaveFunction::basis(sp, 0).context("initial state")
}

pub(crate) fn evolution_config(e: &ExperimentConfig) -> Result<EvolutionConfig> {
    let mut cfg = EvolutionConfig::uniform(e.solver.method, e.time.tau_max, e.time.points)
        .context("time grid")?;
    if let Some(dt) = e.solver.dt {
        cfg = cfg.with_dt(dt);
    }
    if let Some(tol) = e.solver.norm_check {
        cfg = cfg.with_norm_check(tol);
    }
    Ok(cfg)
}

/// First grid time after 0 where `|linear - exact| / |exact|` for `<n1> - <n1>(0)`
/// exceeds [`DIVERGENCE_THRESHOLD`].
pub(crate) fn divergence_time(
    res: &EvolutionResult,
    p: &QuantumLinearParams,
) -> Result<Option<f64>> {
    let n10 = res.snapshots[0].en1;
    for s in &res.snapshots[1..] {
        let exact = s.en1 - n10;
        let lin = quantum_linear_solution(p, s.tau).context("linear solution")?;
        if (lin - exact).abs() > DIVERGENCE_THRESHOLD * exact.abs() {
            return Ok(Some(s.tau));
        }
    }
    Ok(None)
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("value serializes") + "\n"
}

pub(crate) struct Ctx<'a> {
    pub out: &'a mut OutputDir,
    pub warnings: &'a mut Vec<String>,
    pub jobs: Option<usize>,
}

pub(crate) fn run_experiment(e: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let label = |what: &str| format!("{} ({what})", e.name);
    match e.kind {
        Kind::Evolve | Kind::Cascade => run_evolve(e, ctx),
        Kind::LinearCompare => run_linear(e, ctx),
        Kind::Classical => run_classical(e, ctx),
        Kind::Spectrum => run_spectrum(e, ctx),
        Kind::Recurrence => run_recurrence(e, ctx),
        Kind::Sweep => run_sweep(e, ctx),
    }
    .map_err(|err| match err {
        CliError::Numerical { context, source } => CliError::numerical(label(&context), source),
        other => other,
    })
}

fn run_evolve(e: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let sp = subspace(e)?;
    let cells = e.time.points * sp.dim();
    let probs = e.kind == Kind::Cascade || e.output.probabilities;
    if probs && cells > PROBABILITY_CELL_LIMIT {
        if !e.output.probabilities {
            return Err(CliError::usage(
                "output.probabilities",
                format!(
                    "{} experiment '{}' would write {cells} probability cells; set probabilities = true (--probs) to allow it",
                    "cascade", e.name
                ),
            ));
        }
        ctx.warnings.push(format!(
            "{}: writing {} rows x {} probability columns",
            e.name,
            e.time.points,
            sp.dim()
        ));
    }
    let h = TridiagonalHamiltonian::build(sp);
    let psi0 = initial_state(e, sp)?;
    let res = evolve_with(&Propagator::new(&h), &psi0, &evolution_config(e)?).context("evolve")?;

    if e.output.wants(Format::Csv) {
        ctx.out
            .write(&format!("{}.csv", e.name), &res.to_csv(probs))?;
    }
    if e.output.wants(Format::Json) {
        let snaps: Vec<_> = res
            .snapshots
            .iter()
            .map(|s| {
                let mut s = s.clone();
                if !probs {
                    s.probabilities.clear();
                }
                s
            })
            .collect();
        ctx.out
            .write(&format!("{}.json", e.name), &pretty(&snaps))?;
    }
    if e.output.wants(Format::Svg) {
        let t: Vec<f64> = res.snapshots.iter().map(|s| s.tau).collect();
        let series = |f: &dyn Fn(&threewave::ObservableSnapshot) -> f64| -> Vec<(f64, f64)> {
            t.iter().copied().zip(res.snapshots.iter().map(f)).collect()
        };
        let plot = if e.kind == Kind::Cascade {
            let mut p = Plot::new(
                &format!("{}: occupation probabilities", e.name),
                "tau",
                "probability",
            );
            for k in 0..sp.dim().min(4) {
                p = p.with(Series::line(
                    &format!("p{k}"),
                    series(&|s| s.probabilities[k]),
                ));
            }
            p
        } else {
            Plot::new(&format!("{}: occupations", e.name), "tau", "<n>")
                .with(Series::line("<n1>", series(&|s| s.en1)))
                .with(Series::line("<n2>", series(&|s| s.en2)))
                .with(Series::line("<n3>", series(&|s| s.en3)))
                .with(Series::line("var n1", series(&|s| s.var_n1)))
        };
        ctx.out.write(&format!("{}.svg", e.name), &plot.render())?;
    }
    let last = res.snapshots.last().expect("grid has two or more points");
    let summary = json!({
        "kind": e.kind,
        "s2": sp.s2(),
        "s3": sp.s3(),
        "dim": sp.dim(),
        "method": e.solver.method,
        "norm_drift": res.norm_drift,
        "final": { "tau": last.tau, "en1": last.en1, "en2": last.en2, "en3": last.en3, "var_n1": last.var_n1 },
    });
    ctx.out
        .write(&format!("{}_summary.json", e.name), &pretty(&summary))
}

fn run_linear(e: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let sp = subspace(e)?;
    let h = TridiagonalHamiltonian::build(sp);
    let psi0 = initial_state(e, sp)?;
    let params = QuantumLinearParams::from_state(&h, &psi0).context("linear parameters")?;
    let res = evolve_with(&Propagator::new(&h), &psi0, &evolution_config(e)?).context("evolve")?;

    let n10 = res.snapshots[0].en1;
    let mut rows = Vec::with_capacity(res.snapshots.len());
    for s in &res.snapshots {
        let lin = quantum_linear_solution(&params, s.tau).context("linear solution")?;
        rows.push((s.tau, s.en1, n10 + lin, s.en1 - n10, lin));
    }
    if e.output.wants(Format::Csv) {
        let mut csv = String::from("tau,exact_n1,linear_n1,exact_dn1,linear_dn1,rel_dev\n");
        for &(tau, ex, li, dex, dli) in &rows {
            let rel = if dex != 0.0 {
                num((dli - dex).abs() / dex.abs())
            } else {
                String::new()
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{rel}\n",
                num(tau),
                num(ex),
                num(li),
                num(dex),
                num(dli)
            ));
        }
        ctx.out.write(&format!("{}.csv", e.name), &csv)?;
    }
    if e.output.wants(Format::Json) {
        let json_rows: Vec<_> = rows
            .iter()
            .map(|&(tau, ex, li, _, _)| json!({"tau": tau, "exact_n1": ex, "linear_n1": li}))
            .collect();
        ctx.out
            .write(&format!("{}.json", e.name), &pretty(&json_rows))?;
    }
    if e.output.wants(Format::Svg) {
        // The linear curve leaves the physical range quickly; clip it to the
        // exact curve's span so the figure stays readable.
        let lo = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let pad = (hi - lo).max(1.0);
        let plot = Plot::new(&format!("{}: exact vs linear", e.name), "tau", "<n1>")
            .with(Series::line(
                "exact",
                rows.iter().map(|r| (r.0, r.1)).collect(),
            ))
            .with(Series::line(
                "linear",
                rows.iter()
                    .filter(|r| r.2 >= lo - pad && r.2 <= hi + pad)
                    .map(|r| (r.0, r.2))
                    .collect(),
            ));
        ctx.out.write(&format!("{}.svg", e.name), &plot.render())?;
    }

    let bound = match e.initial.m {
        Some(m) => SpreadSpec::new(m, e.initial.epsilon.unwrap_or(0.0))
            .and_then(|s| variance_growth_bound(sp, s))
            .ok(),
        None => None,
    };
    let summary = json!({
        "kind": e.kind,
        "s2": sp.s2(),
        "s3": sp.s3(),
        "params": LinearReport::new(&params, bound),
        "n_init": params.n_init,
        "divergence_threshold": DIVERGENCE_THRESHOLD,
        "divergence_time": divergence_time(&res, &params)?,
        "norm_drift": res.norm_drift,
    });
    ctx.out
        .write(&format!("{}_summary.json", e.name), &pretty(&summary))
}

fn run_classical(e: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let actions = e.initial.actions.expect("validated");
    let a0 = ClassicalState::from_actions(actions).context("initial actions")?;
    let dt = e
        .solver
        .dt
        .unwrap_or_else(|| default_classical_step(actions));
    let intervals = e.time.points - 1;
    let interval = e.time.tau_max / intervals as f64;
    let per = (interval / dt).ceil().max(1.0) as usize;
    let n = intervals * per;
    // Slightly enlarged step so the integrator settles on exactly `n` steps.
    let tr = integrate_amplitudes(
        &a0,
        e.time.tau_max,
        e.time.tau_max / n as f64 * (1.0 + 1e-12),
    )
    .context("classical integration")?;
    let sampled = threewave::classical::ClassicalTrajectory {
        states: tr.states.iter().step_by(per).copied().collect(),
    };

    if e.output.wants(Format::Csv) {
        ctx.out
            .write(&format!("{}.csv", e.name), &sampled.to_csv())?;
    }
    if e.output.wants(Format::Json) {
        let rows: Vec<_> = sampled
            .states
            .iter()
            .map(|s| json!({"t": s.t, "actions": s.actions()}))
            .collect();
        ctx.out.write(&format!("{}.json", e.name), &pretty(&rows))?;
    }
    if e.output.wants(Format::Svg) {
        let mut plot = Plot::new(&format!("{}: classical actions", e.name), "t", "I");
        for (j, name) in ["I1", "I2", "I3"].iter().enumerate() {
            plot = plot.with(Series::line(
                name,
                sampled
                    .states
                    .iter()
                    .map(|s| (s.t, s.actions()[j]))
                    .collect(),
            ));
        }
        ctx.out.write(&format!("{}.svg", e.name), &plot.render())?;
    }
    let [i1, i2, i3] = actions;
    let summary = json!({
        "kind": e.kind,
        "actions": actions,
        "growth": classical_growth_rate(i1, i2, i3),
        "linear": ClassicalLinearParams::new(i1, i2, i3).ok(),
        "dt": e.time.tau_max / n as f64,
        "invariant_drift": tr.invariant_drift(),
        "final_actions": tr.last().actions(),
    });
    ctx.out
        .write(&format!("{}_summary.json", e.name), &pretty(&summary))
}

/// Spectrum, spacing diagnostic and, when an initial state is configured, its
/// eigen-weights and `<n3>` spectral lines.
fn run_spectrum(e: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let sp = subspace(e)?;
    let h = TridiagonalHamiltonian::build(sp);
    let es = threewave::spectral::eigensystem(&h).context("eigensystem")?;
    let report = spacing_diagnostic(&es).context("spacing diagnostic")?;

    if e.output.wants(Format::Csv) {
        ctx.out
            .write(&format!("{}_spectrum.csv", e.name), &es.spectrum_csv())?;
    }
    if e.output.wants(Format::Json) {
        ctx.out
            .write(&format!("{}_spectrum.json", e.name), &pretty(&es.lambdas()))?;
    }
    if e.output.wants(Format::Svg) {
        let plot =
            Plot::new(&format!("{}: eigenvalues", e.name), "k", "lambda").with(Series::scatter(
                "lambda_k",
                es.lambdas()
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| (k as f64, l))
                    .collect(),
            ));
        ctx.out
            .write(&format!("{}_spectrum.svg", e.name), &plot.render())?;
    }

    let mut weights_summary = serde_json::Value::Null;
    if e.initial.m.is_some() || e.initial.amplitudes.is_some() {
        let psi0 = initial_state(e, sp)?;
        let eps = eigen_weights(&psi0, &es).context("eigen weights")?;
        if e.output.wants(Format::Csv) {
            ctx.out
                .write(&format!("{}_weights.csv", e.name), &weights_csv(&eps))?;
        }
        if e.output.wants(Format::Svg) {
            let plot = Plot::new(
                &format!("{}: eigenvector weights", e.name),
                "lambda",
                "|eps|",
            )
            .with(Series::scatter(
                "|eps_j|",
                es.lambdas()
                    .iter()
                    .zip(&eps)
                    .map(|(&l, w)| (l, w.norm()))
                    .collect(),
            ));
            ctx.out
                .write(&format!("{}_weights.svg", e.name), &plot.render())?;
        }
        let mut lines_summary = serde_json::Value::Null;
        if sp.dim() <= LINES_MAX_DIM {
            let lines = spectral_lines_n3(&psi0, &es).context("spectral lines")?;
            let pruned = prune_lines(&lines, LINE_PRUNE_REL);
            if e.output.wants(Format::Csv) {
                ctx.out
                    .write(&format!("{}_lines.csv", e.name), &lines_csv(&pruned.lines))?;
            }
            lines_summary = json!({
                "total": lines.len(),
                "kept": pruned.lines.len(),
                "dropped": pruned.dropped,
                "prune_rel": LINE_PRUNE_REL,
            });
        } else {
            ctx.warnings.push(format!(
                "{}: d = {} exceeds {LINES_MAX_DIM}; spectral line table skipped",
                e.name,
                sp.dim()
            ));
        }
        weights_summary = json!({
            "participation": 1.0 / eps.iter().map(|w| w.norm_sqr().powi(2)).sum::<f64>(),
            "lines": lines_summary,
        });
    }

    let summary = json!({
        "kind": e.kind,
        "s2": sp.s2(),
        "s3": sp.s3(),
        "dim": sp.dim(),
        "spacing": report,
        "max_abs_lambda": es.max_abs_lambda(),
        "symmetry_error": es.symmetry_error(),
        "weights": weights_summary,
    });
    ctx.out
        .write(&format!("{}_summary.json", e.name), &pretty(&summary))
}

fn run_recurrence(e: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let sp = subspace(e)?;
    let rc = e.recurrence.unwrap_or_default();
    let RecurrenceConfig { threshold, horizon } = rc;
    let h = TridiagonalHamiltonian::build(sp);
    let es = threewave::spectral::eigensystem(&h).context("eigensystem")?;
    let psi0 = initial_state(e, sp)?;
    let rec = recurrence_time(&es, &psi0, horizon, threshold).context("recurrence")?;
    let pops: Vec<f64> = eigen_weights(&psi0, &es)
        .context("eigen weights")?
        .iter()
        .map(|w| w.norm_sqr())
        .collect();
    let curve: Vec<(f64, f64)> = e
        .time
        .times()
        .into_iter()
        .map(|t| (t, return_fidelity(es.lambdas(), &pops, t)))
        .collect();

    if e.output.wants(Format::Csv) {
        let mut csv = String::from("tau,fidelity\n");
        for (t, f) in &curve {
            csv.push_str(&format!("{},{}\n", num(*t), num(*f)));
        }
        ctx.out.write(&format!("{}.csv", e.name), &csv)?;
    }
    if e.output.wants(Format::Json) {
        let rows: Vec<_> = curve
            .iter()
            .map(|(t, f)| json!({"tau": t, "fidelity": f}))
            .collect();
        ctx.out.write(&format!("{}.json", e.name), &pretty(&rows))?;
    }
    if e.output.wants(Format::Svg) {
        let plot = Plot::new(&format!("{}: return fidelity", e.name), "tau", "fidelity")
            .with(Series::line("|<psi0|psi(tau)>|^2", curve.clone()))
            .with(Series::line(
                "threshold",
                vec![(0.0, threshold), (e.time.tau_max, threshold)],
            ));
        ctx.out.write(&format!("{}.svg", e.name), &plot.render())?;
    }
    let summary = json!({
        "kind": e.kind,
        "s2": sp.s2(),
        "s3": sp.s3(),
        "threshold": threshold,
        "horizon": horizon,
        "recurrence": rec,
    });
    ctx.out
        .write(&format!("{}_summary.json", e.name), &pretty(&summary))
}

fn run_sweep(e: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let spec = e.sweep.as_ref().expect("validated");
    let rows = sweep(spec, &e.time, e.solver.method, ctx.jobs)?;
    if e.output.wants(Format::Csv) {
        ctx.out
            .write(&format!("{}.csv", e.name), &sweep_csv(&rows))?;
    }
    if e.output.wants(Format::Json) {
        ctx.out.write(&format!("{}.json", e.name), &pretty(&rows))?;
    }
    if e.output.wants(Format::Svg) {
        let plot = Plot::new(
            &format!("{}: growth-rate ratio", e.name),
            "row",
            "|gammaQ/gammaC - 1|",
        )
        .with(Series::scatter(
            "ratio deviation",
            rows.iter()
                .enumerate()
                .filter_map(|(k, r)| r.gamma_ratio_dev.map(|v| (k as f64, v)))
                .collect(),
        ));
        ctx.out.write(&format!("{}.svg", e.name), &plot.render())?;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        ctx.warnings.push(format!(
            "{}: {failed} of {} sweep rows failed",
            e.name,
            rows.len()
        ));
    }
    let summary = json!({ "kind": e.kind, "rows": rows.len(), "failed": failed });
    ctx.out
        .write(&format!("{}_summary.json", e.name), &pretty(&summary))
}
