//! Command-line front end: `simulate`, `tangent`, `adjoint`, `average`,
//! `study` and `optimize`, each writing CSV tables and a `manifest.json`.
//!
//! Everything is computed in memory first; the output directory is only
//! created once the pipeline succeeded, so failures leave no partial output.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::adjoint::{adjoint_sweep, AdjointConfig, AdjointMode};
use crate::analysis::{
    analytic_sensitivity_series, analytic_series, convergence_study, divergence_diagnostic, end_step,
    endpoint_shift_robustness, required_len, Reference, StudyOptions,
};
use crate::config::{Quantity, ReferenceChoice, RunConfig, StudyAnalysis};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::optim::optimize;
use crate::primal::{estimate_period, simulate, TimeGrid, Trajectory};
use crate::tangent::{tangent, windowed_tangent_sensitivity};
use crate::windows::{discrete_weights, Normalization, WindowKind};

/// Environment variable naming the fallback output directory.
pub const OUTPUT_DIR_ENV: &str = "LCO_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "lco-output";

#[derive(Debug, Parser)]
#[command(name = "lco", version, about = "Windowed averages and sensitivities of limit-cycle oscillations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, short = 'c')]
    pub config: PathBuf,
    /// Output directory; overrides [run].output_dir and LCO_OUTPUT_DIR.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Design vector, comma separated; overrides [run].sigma.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma: Option<Vec<f64>>,
    /// Window kinds, comma separated (square, hann, hann-square, bump), or `all`.
    #[arg(long, alias = "window")]
    pub windows: Option<String>,
    /// Weight normalization: paper-faithful or renormalized.
    #[arg(long)]
    pub normalization: Option<Normalization>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// March the primal solver and write the trajectory.
    Simulate(Common),
    /// Forward sensitivities and their windowed averages.
    Tangent(Common),
    /// Reverse sweep with windowed seeding; writes adjoint norms, seeds and running gradients.
    Adjoint {
        #[command(flatten)]
        common: Common,
        /// Adjoint inner solve: fixed-point or direct.
        #[arg(long)]
        mode: Option<AdjointMode>,
    },
    /// Windowed time averages of the output.
    Average(Common),
    /// Convergence, divergence or endpoint-shift study over period counts.
    Study {
        #[command(flatten)]
        common: Common,
        /// Studied quantity: average or sensitivity.
        #[arg(long)]
        quantity: Option<Quantity>,
        /// Period counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<usize>>,
    },
    /// Projected-gradient design loop on the windowed objective.
    Optimize(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Tangent(_) => "tangent",
            Command::Adjoint { .. } => "adjoint",
            Command::Average(_) => "average",
            Command::Study { .. } => "study",
            Command::Optimize(_) => "optimize",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c) | Command::Tangent(c) | Command::Average(c) | Command::Optimize(c) => c,
            Command::Adjoint { common, .. } | Command::Study { common, .. } => common,
        }
    }
}

/// Exit status for an error: 2 configuration, 3 solver, 4 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidSpan { .. }
        | Error::OutsideBox { .. } => 2,
        Error::Io(_) => 4,
        Error::DesignEvaluation { source, .. } => exit_code(source),
        _ => 3,
    }
}

fn error_kind(code: i32) -> &'static str {
    match code {
        2 => "config",
        4 => "io",
        _ => "solver",
    }
}

/// Machine-readable error record printed on stderr.
pub fn error_record(command: &str, err: &Error) -> Value {
    let code = exit_code(err);
    json!({
        "error": {
            "command": command,
            "kind": error_kind(code),
            "exit_code": code,
            "message": err.to_string(),
        }
    })
}

/// Tables and summaries produced by one pipeline.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub results: Map<String, Value>,
    pub diagnostics: Map<String, Value>,
}

struct Csv {
    body: String,
}

impl Csv {
    fn new(header: &[String]) -> Self {
        let mut body = header.join(",");
        body.push('\n');
        Csv { body }
    }

    fn row(&mut self, cells: &[String]) {
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }
}

/// Round-trip float formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn floats(v: impl IntoIterator<Item = f64>) -> Vec<String> {
    v.into_iter().map(fmt_f64).collect()
}

fn parse_windows(text: &str) -> Result<Vec<WindowKind>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(WindowKind::ALL.to_vec());
    }
    text.split(',').map(str::parse).collect()
}

/// Applies command-line overrides to a parsed configuration.
pub fn apply_overrides(cfg: &mut RunConfig, command: &Command) -> Result<()> {
    let common = command.common();
    if let Some(s) = &common.sigma {
        cfg.run.sigma = Some(s.clone());
    }
    if let Some(w) = &common.windows {
        cfg.window.kinds = parse_windows(w)?;
    }
    if let Some(n) = common.normalization {
        cfg.window.normalization = n;
    }
    match command {
        Command::Adjoint { mode: Some(m), .. } => cfg.adjoint.mode = *m,
        Command::Study { quantity, k_list, .. } => {
            if let Some(q) = quantity {
                cfg.study.quantity = *q;
            }
            if let Some(k) = k_list {
                cfg.study.k_list = k.clone();
            }
        }
        _ => {}
    }
    cfg.validate()
}

/// Flag, then `[run].output_dir`, then `LCO_OUTPUT_DIR`, then `lco-output`.
pub fn resolve_output_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.run.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn primal(cfg: &RunConfig, grid: &TimeGrid) -> Result<Trajectory> {
    simulate(&cfg.model, &cfg.output(), &cfg.sigma(), grid, &cfg.solver)
}

fn adjoint_config(cfg: &RunConfig) -> AdjointConfig {
    AdjointConfig {
        tolerance: cfg.adjoint_tolerance(),
        ..AdjointConfig::matching(&cfg.solver)
    }
    .with_mode(cfg.adjoint.mode)
}

fn period_value(outputs: &[f64], grid: &TimeGrid) -> Value {
    match estimate_period(outputs, grid.transient, grid.dt) {
        Ok(p) => json!({"period": p.period, "periods": p.periods, "spread": p.spread()}),
        Err(e) => json!({"error": e.to_string()}),
    }
}

fn trajectory_diagnostics(traj: &Trajectory, out: &mut Map<String, Value>) {
    let max_residual = traj.residual_norms.iter().cloned().fold(0.0, f64::max);
    let unconverged = traj.converged.iter().filter(|c| !**c).count();
    out.insert("steps".into(), json!(traj.last_step()));
    out.insert("all_converged".into(), json!(traj.all_converged()));
    out.insert("unconverged_steps".into(), json!(unconverged));
    out.insert("max_inner_residual".into(), json!(max_residual));
    out.insert(
        "max_inner_iterations".into(),
        json!(traj.inner_iterations.iter().copied().max().unwrap_or(0)),
    );
    out.insert(
        "total_inner_iterations".into(),
        json!(traj.inner_iterations.iter().sum::<usize>()),
    );
}

pub fn run_simulate(cfg: &RunConfig) -> Result<Artifacts> {
    let traj = primal(cfg, &cfg.grid)?;
    let du = cfg.model.state_dim();
    let mut header = strings(&["step", "time"]);
    header.extend(indexed("u", du));
    header.extend(strings(&["output", "inner_iterations", "residual_norm", "converged"]));
    let mut csv = Csv::new(&header);
    for n in 0..=traj.last_step() {
        let mut row = vec![n.to_string(), fmt_f64(traj.time(n))];
        row.extend(floats(traj.states[n].iter().copied()));
        row.push(fmt_f64(traj.outputs[n]));
        row.push(traj.inner_iterations[n].to_string());
        row.push(fmt_f64(traj.residual_norms[n]));
        row.push(traj.converged[n].to_string());
        csv.row(&row);
    }
    let mut art = Artifacts::default();
    art.files.push(("trajectory.csv".into(), csv.body));
    art.results.insert("period".into(), period_value(&traj.outputs, &cfg.grid));
    trajectory_diagnostics(&traj, &mut art.diagnostics);
    Ok(art)
}

pub fn run_tangent(cfg: &RunConfig) -> Result<Artifacts> {
    let traj = primal(cfg, &cfg.grid)?;
    let tan = tangent(&cfg.model, &cfg.output(), &traj)?;
    let nd = cfg.model.design_dim();
    let mut header = strings(&["step", "time", "output"]);
    header.extend(indexed("dg_dsigma", nd));
    let mut csv = Csv::new(&header);
    for n in 0..=traj.last_step() {
        let mut row = vec![n.to_string(), fmt_f64(traj.time(n)), fmt_f64(traj.outputs[n])];
        row.extend(floats(tan.output_sensitivities[n].iter().copied()));
        csv.row(&row);
    }
    let mut windowed = Csv::new(&strings(&["window", "component", "value"]));
    let mut per_window = Map::new();
    for &kind in &cfg.window.kinds {
        let w = discrete_weights(kind, cfg.grid.transient, cfg.grid.steps, cfg.window.normalization)?;
        let s = windowed_tangent_sensitivity(&tan, &w)?;
        for (j, v) in s.iter().enumerate() {
            windowed.row(&[kind.name().to_string(), j.to_string(), fmt_f64(*v)]);
        }
        per_window.insert(kind.name().into(), json!(s.as_slice()));
    }
    let mut art = Artifacts::default();
    art.files.push(("tangent.csv".into(), csv.body));
    art.files.push(("windowed_sensitivity.csv".into(), windowed.body));
    art.results.insert("windowed_sensitivity".into(), Value::Object(per_window));
    trajectory_diagnostics(&traj, &mut art.diagnostics);
    art.diagnostics.insert("dense_solves".into(), json!(tan.dense_solves));
    Ok(art)
}

pub fn run_adjoint(cfg: &RunConfig) -> Result<Artifacts> {
    let traj = primal(cfg, &cfg.grid)?;
    let acfg = adjoint_config(cfg);
    let nd = cfg.model.design_dim();
    let mut header = strings(&["window", "step", "adjoint_norm", "seed_norm"]);
    header.extend(indexed("running_gradient", nd));
    header.extend(strings(&["inner_iterations", "residual", "contraction"]));
    let mut csv = Csv::new(&header);
    let mut gradients = Csv::new(&strings(&["window", "component", "value"]));
    let mut grad_map = Map::new();
    let mut contraction_map = Map::new();
    for &kind in &cfg.window.kinds {
        let w = discrete_weights(kind, cfg.grid.transient, cfg.grid.steps, cfg.window.normalization)?;
        let sweep = adjoint_sweep(&cfg.model, &cfg.output(), &traj, &w, &acfg)?;
        let running = sweep.running_gradient();
        for n in (0..sweep.adjoints.len()).rev() {
            let mut row = vec![
                kind.name().to_string(),
                n.to_string(),
                fmt_f64(sweep.adjoints[n].norm()),
                fmt_f64(sweep.seeds[n].norm()),
            ];
            row.extend(floats(running[n].iter().copied()));
            row.push(sweep.inner_iterations[n].to_string());
            row.push(fmt_f64(sweep.residuals[n]));
            row.push(fmt_f64(sweep.contractions[n]));
            csv.row(&row);
        }
        for (j, v) in sweep.gradient.iter().enumerate() {
            gradients.row(&[kind.name().to_string(), j.to_string(), fmt_f64(*v)]);
        }
        grad_map.insert(kind.name().into(), json!(sweep.gradient.as_slice()));
        contraction_map.insert(kind.name().into(), json!(sweep.max_contraction()));
    }
    let mut art = Artifacts::default();
    art.files.push(("adjoint.csv".into(), csv.body));
    art.files.push(("gradient.csv".into(), gradients.body));
    art.results.insert("mode".into(), json!(acfg.mode));
    art.results.insert("design_derivative".into(), Value::Object(grad_map));
    trajectory_diagnostics(&traj, &mut art.diagnostics);
    art.diagnostics.insert("max_contraction".into(), Value::Object(contraction_map));
    Ok(art)
}

pub fn run_average(cfg: &RunConfig) -> Result<Artifacts> {
    let traj = primal(cfg, &cfg.grid)?;
    let mut csv = Csv::new(&strings(&["window", "transient", "end", "value"]));
    let mut map = Map::new();
    for &kind in &cfg.window.kinds {
        let w = discrete_weights(kind, cfg.grid.transient, cfg.grid.steps, cfg.window.normalization)?;
        let v = w.average(&traj.outputs)?;
        csv.row(&[
            kind.name().to_string(),
            cfg.grid.transient.to_string(),
            cfg.grid.steps.to_string(),
            fmt_f64(v),
        ]);
        map.insert(kind.name().into(), json!(v));
    }
    let mut art = Artifacts::default();
    art.files.push(("averages.csv".into(), csv.body));
    art.results.insert("averages".into(), Value::Object(map));
    art.results.insert("period".into(), period_value(&traj.outputs, &cfg.grid));
    trajectory_diagnostics(&traj, &mut art.diagnostics);
    Ok(art)
}

/// Primal output series, the studied series and the measured period.
struct StudyData {
    outputs: Vec<f64>,
    series: Vec<f64>,
    period: f64,
    /// Full sensitivity vectors per step, when the quantity is a sensitivity.
    vectors: Option<Vec<DVector<f64>>>,
    extended_to: Option<usize>,
}

fn study_series(cfg: &RunConfig, len: usize) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<DVector<f64>>>)> {
    let sigma = cfg.sigma();
    let j = cfg.study.component;
    let dt = cfg.grid.dt;
    match (&cfg.model, cfg.study.quantity) {
        (Model::AnalyticSignal(spec), Quantity::Average) => {
            let s = analytic_series(spec, &sigma, dt, len);
            Ok((s.clone(), s, None))
        }
        (Model::AnalyticSignal(spec), Quantity::Sensitivity) => {
            let vectors: Vec<DVector<f64>> = (0..len)
                .map(|n| {
                    DVector::from_vec(crate::models::analytic_output_sensitivity(
                        spec,
                        n as f64 * dt,
                        &sigma,
                    ))
                })
                .collect();
            Ok((
                analytic_series(spec, &sigma, dt, len),
                analytic_sensitivity_series(spec, &sigma, dt, len, j),
                Some(vectors),
            ))
        }
        (_, quantity) => {
            let grid = TimeGrid::new(dt, len - 1, cfg.grid.transient)?;
            let traj = primal(cfg, &grid)?;
            match quantity {
                Quantity::Average => Ok((traj.outputs.clone(), traj.outputs, None)),
                Quantity::Sensitivity => {
                    let tan = tangent(&cfg.model, &cfg.output(), &traj)?;
                    let series = tan.component(j);
                    Ok((traj.outputs, series, Some(tan.output_sensitivities)))
                }
            }
        }
    }
}

fn study_reference(cfg: &RunConfig) -> Result<Reference> {
    let closed = |cfg: &RunConfig| -> Result<Reference> {
        match &cfg.model {
            Model::AnalyticSignal(spec) => {
                let sigma = cfg.sigma();
                Ok(Reference::ClosedForm(match cfg.study.quantity {
                    Quantity::Average => spec.mean.value(&sigma),
                    Quantity::Sensitivity => spec.mean.gradient(&sigma)[cfg.study.component],
                }))
            }
            other => Err(Error::Config(format!(
                "no closed-form reference for model {}",
                other.name()
            ))),
        }
    };
    match cfg.study.reference {
        ReferenceChoice::ClosedForm => closed(cfg),
        ReferenceChoice::Bump => Ok(Reference::BumpAtPeriods(cfg.study.reference_k)),
        ReferenceChoice::Auto => match cfg.model {
            Model::AnalyticSignal(_) => closed(cfg),
            _ => Ok(Reference::BumpAtPeriods(cfg.study.reference_k)),
        },
    }
}

fn load_study_data(cfg: &RunConfig, needed: impl Fn(f64) -> usize) -> Result<StudyData> {
    let base_len = cfg.grid.steps + 1;
    let (outputs, series, vectors) = study_series(cfg, base_len)?;
    let period = estimate_period(&outputs, cfg.grid.transient, cfg.grid.dt)?.period;
    let want = needed(period);
    if want <= base_len {
        return Ok(StudyData {
            outputs,
            series,
            period,
            vectors,
            extended_to: None,
        });
    }
    log::info!("extending the record from {base_len} to {want} samples for the study");
    let (outputs, series, vectors) = study_series(cfg, want)?;
    Ok(StudyData {
        outputs,
        series,
        period,
        vectors,
        extended_to: Some(want - 1),
    })
}

pub fn run_study(cfg: &RunConfig) -> Result<Artifacts> {
    let st = &cfg.study;
    let dt = cfg.grid.dt;
    let n_tr = cfg.grid.transient;
    let mut art = Artifacts::default();
    let options = |period: f64| StudyOptions {
        measure: st.measure,
        normalization: cfg.window.normalization,
        period: Some(period),
    };

    match st.analysis {
        StudyAnalysis::Convergence => {
            let reference = study_reference(cfg)?;
            let data = load_study_data(cfg, |p| required_len(n_tr, p, dt, &st.k_list, &reference, st.measure))?;
            let mut csv = Csv::new(&strings(&["window", "k", "N", "value", "error", "slope"]));
            let mut map = Map::new();
            for &kind in &cfg.window.kinds {
                let study = convergence_study(&data.series, kind, n_tr, dt, &st.k_list, reference, &options(data.period))?;
                for i in 0..study.k_values.len() {
                    csv.row(&[
                        kind.name().to_string(),
                        study.k_values[i].to_string(),
                        study.ends[i].to_string(),
                        fmt_f64(study.values[i]),
                        fmt_f64(study.errors[i]),
                        fmt_f64(study.slope),
                    ]);
                }
                map.insert(
                    kind.name().into(),
                    json!({
                        "slope": study.slope,
                        "order": study.order(),
                        "fit_residual": study.fit_residual,
                        "fitted_points": study.fitted_points,
                        "noise_floor": study.noise_floor,
                        "reference": study.reference,
                        "reference_source": study.reference_source,
                    }),
                );
            }
            art.files.push(("study.csv".into(), csv.body));
            art.results.insert("studies".into(), Value::Object(map));
            art.results.insert("period".into(), json!(data.period));
            art.diagnostics.insert("extended_to".into(), json!(data.extended_to));
            art.diagnostics.insert("samples".into(), json!(data.outputs.len()));
        }
        StudyAnalysis::Divergence => {
            let data = load_study_data(cfg, |p| {
                let k_max = *st.k_list.last().unwrap_or(&1) as f64;
                end_step(n_tr, p, dt, k_max) + ((p / dt).round() as usize).max(1)
            })?;
            let mut csv = Csv::new(&strings(&["window", "k", "N", "value", "magnitude", "growth", "growing"]));
            let mut map = Map::new();
            for &kind in &cfg.window.kinds {
                let table = divergence_diagnostic(&data.series, kind, n_tr, dt, &st.k_list, &options(data.period))?;
                for r in &table.rows {
                    csv.row(&[
                        kind.name().to_string(),
                        r.k.to_string(),
                        r.end.to_string(),
                        fmt_f64(r.value),
                        fmt_f64(r.magnitude),
                        r.growth.map(fmt_f64).unwrap_or_default(),
                        r.growing.to_string(),
                    ]);
                }
                map.insert(kind.name().into(), json!({"any_growth": table.any_growth()}));
            }
            art.files.push(("divergence.csv".into(), csv.body));
            art.results.insert("divergence".into(), Value::Object(map));
            art.results.insert("period".into(), json!(data.period));
            art.diagnostics.insert("extended_to".into(), json!(data.extended_to));
        }
        StudyAnalysis::EndpointShift => {
            let end_of = |p: f64| match st.base_periods {
                Some(k) => end_step(n_tr, p, dt, k),
                None => cfg.grid.steps,
            };
            let shift_of = |p: f64| (st.shift_fraction * p / dt).round() as usize;
            let data = load_study_data(cfg, |p| end_of(p) + shift_of(p) + 1)?;
            let (end, shift) = (end_of(data.period), shift_of(data.period));
            let mut csv = Csv::new(&strings(&["window", "N1", "N2", "rel_change"]));
            let mut map = Map::new();
            for &kind in &cfg.window.kinds {
                let rel = endpoint_shift_robustness(
                    |w| match &data.vectors {
                        Some(vectors) => {
                            let mut acc = DVector::zeros(vectors[0].len());
                            for n in w.transient()..=w.end() {
                                acc.axpy(w.weight(n), &vectors[n], 1.0);
                            }
                            Ok(acc / w.span() as f64)
                        }
                        None => Ok(DVector::from_element(1, w.average(&data.series)?)),
                    },
                    kind,
                    n_tr,
                    end,
                    shift,
                    cfg.window.normalization,
                )?;
                csv.row(&[kind.name().to_string(), end.to_string(), (end + shift).to_string(), fmt_f64(rel)]);
                map.insert(kind.name().into(), json!(rel));
            }
            art.files.push(("endpoint_shift.csv".into(), csv.body));
            art.results.insert("rel_change".into(), Value::Object(map));
            art.results.insert("period".into(), json!(data.period));
            art.results.insert("shift_steps".into(), json!(shift));
            art.diagnostics.insert("extended_to".into(), json!(data.extended_to));
        }
    }
    Ok(art)
}

pub fn run_optimize(cfg: &RunConfig) -> Result<Artifacts> {
    let problem = cfg.design_problem()?;
    let history = optimize(&problem, &cfg.sigma())?;
    let nd = cfg.model.design_dim();
    let mut header = strings(&["iteration"]);
    header.extend(indexed("sigma", nd));
    header.extend(strings(&["objective", "constraint", "feasible", "grad_norm", "step", "merit", "penalty"]));
    let mut csv = Csv::new(&header);
    for s in &history.steps {
        let mut row = vec![s.iteration.to_string()];
        row.extend(floats(s.sigma.iter().copied()));
        row.push(fmt_f64(s.objective));
        row.push(s.constraint.map(fmt_f64).unwrap_or_default());
        row.push(s.feasible.to_string());
        row.push(fmt_f64(s.gradient_norm));
        row.push(fmt_f64(s.step));
        row.push(fmt_f64(s.merit));
        row.push(fmt_f64(s.penalty));
        csv.row(&row);
    }
    let mut art = Artifacts::default();
    art.files.push(("history.csv".into(), csv.body));
    art.results.insert("converged".into(), json!(history.converged));
    art.results.insert("line_search_failed".into(), json!(history.line_search_failed));
    art.results.insert("final_design".into(), json!(history.final_design()));
    art.results.insert("iterations".into(), json!(history.steps.len()));
    art.results.insert("updates".into(), json!(history.updates()));
    Ok(art)
}

/// Runs the pipeline of `command` on a validated configuration.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Artifacts> {
    match command {
        Command::Simulate(_) => run_simulate(cfg),
        Command::Tangent(_) => run_tangent(cfg),
        Command::Adjoint { .. } => run_adjoint(cfg),
        Command::Average(_) => run_average(cfg),
        Command::Study { .. } => run_study(cfg),
        Command::Optimize(_) => run_optimize(cfg),
    }
}

/// Writes every table and the manifest into `dir`.
pub fn write_outputs(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    config_path: &Path,
    art: &Artifacts,
    wall_time: f64,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in &art.files {
        std::fs::write(dir.join(name), body)?;
    }
    let manifest = json!({
        "tool": "lco",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_path": config_path.display().to_string(),
        "config": cfg,
        "wall_time_seconds": wall_time,
        "files": art.files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "diagnostics": art.diagnostics,
        "results": art.results,
    });
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Parses arguments, runs the pipeline and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command = cli.command;
    let name = command.name();
    let fail = |err: Error| {
        eprintln!("{}", error_record(name, &err));
        exit_code(&err)
    };

    let started = Instant::now();
    let common = command.common().clone();
    let mut cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Err(e) = apply_overrides(&mut cfg, &command) {
        return fail(e);
    }
    let artifacts = match execute(&command, &cfg) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let dir = resolve_output_dir(common.out.as_deref(), &cfg);
    let wall = started.elapsed().as_secs_f64();
    match write_outputs(&dir, name, &cfg, &common.config, &artifacts, wall) {
        Ok(path) => {
            log::info!("{name}: wrote {} files to {}", artifacts.files.len() + 1, dir.display());
            println!("{}", path.display());
            0
        }
        Err(e) => fail(e),
    }
}
