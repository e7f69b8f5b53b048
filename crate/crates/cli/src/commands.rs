use serde::Serialize;
use starlike_sis::fixedpoint::{
    classify_regime, critical_b, linearized_threshold, solve_fixed_point, FixedPointReport, Regime,
    SolverOptions,
};
use starlike_sis::geometry::{count_intersections, region_slice, sample_curves, CurveSample};
use starlike_sis::meanfield::{iterate, IterateOptions, Trajectory};
use starlike_sis::stochastic::{
    plateau_mean, run_trials, ChainState, RunSummary, DEFAULT_PLATEAU_WINDOW,
};
use starlike_sis::LevelState;

use crate::config::{ExperimentConfig, Format, EQ_TOL};
use crate::error::CliError;
use crate::output::{emit, emit_sidecar, level_header, num, to_json, Csv};

pub const DEFAULT_CURVE_B: [f64; 3] = [0.08, 0.125, 0.15];
pub const REGION_B: f64 = 0.08;
pub const REGION_Z: [f64; 3] = [0.0, 0.25, 0.75];
const CURVE_GRID: usize = 1000;
const REGION_GRID: usize = 101;

fn json_only(cfg: &ExperimentConfig, command: &str) -> Result<(), CliError> {
    match cfg.format_or(Format::Json) {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::Validation(format!("{command} only writes JSON"))),
    }
}

#[derive(Serialize)]
struct ThresholdReport {
    a: f64,
    branching: Vec<usize>,
    b_crit: f64,
    linearized_threshold: f64,
    b: Option<f64>,
    regime: Option<Regime>,
}

pub fn threshold(cfg: &ExperimentConfig) -> Result<(), CliError> {
    json_only(cfg, "threshold")?;
    let regime = match cfg.b {
        Some(_) => Some(classify_regime(&cfg.params()?, &cfg.topo, EQ_TOL)),
        None => None,
    };
    let report = ThresholdReport {
        a: cfg.a,
        branching: cfg.branching.clone(),
        b_crit: critical_b(cfg.a, &cfg.branching)?,
        linearized_threshold: linearized_threshold(cfg.a, &cfg.branching)?,
        b: cfg.b,
        regime,
    };
    emit(cfg.out.as_deref(), &to_json(&report)?)
}

pub fn parse_start(spec: &str, k: usize) -> Result<LevelState, CliError> {
    let state = match spec {
        "ones" => LevelState::ones(k),
        "zeros" => LevelState::zeros(k),
        list => {
            let values = list
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Validation(format!("invalid --start {list:?}: {e}")))?;
            if values.len() == 1 {
                LevelState::uniform(k, values[0])?
            } else {
                LevelState::new(values)?
            }
        }
    };
    if state.levels() != k {
        return Err(CliError::Validation(format!(
            "--start has {} entries, the graph has {k} levels",
            state.levels()
        )));
    }
    Ok(state)
}

#[derive(Serialize)]
struct IterateStatus<'a> {
    status: &'static str,
    converged: bool,
    iterations: usize,
    final_residual: f64,
    limit: &'a LevelState,
    regime: Regime,
}

#[derive(Serialize)]
struct IterateJson<'a> {
    #[serde(flatten)]
    status: IterateStatus<'a>,
    trajectory: &'a Trajectory,
}

pub fn iterate_cmd(cfg: &ExperimentConfig, start: &str, thin: usize) -> Result<(), CliError> {
    let params = cfg.params()?;
    let k = cfg.topo.levels();
    let d0 = parse_start(start, k)?;
    let opts = IterateOptions {
        tol: cfg.tol_or(IterateOptions::default().tol),
        max_iter: cfg.max_iter,
        thin,
    };
    let traj = iterate(&d0, &params, &cfg.topo, &opts)?;
    let status = IterateStatus {
        status: if traj.converged {
            "converged"
        } else {
            "max_iter"
        },
        converged: traj.converged,
        iterations: traj.iterations,
        final_residual: traj.final_residual,
        limit: &traj.limit,
        regime: classify_regime(&params, &cfg.topo, EQ_TOL),
    };
    match cfg.format_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&level_header(&["step"], k, &["residual"]));
            for p in &traj.states {
                let mut row = vec![p.step.to_string()];
                row.extend(p.state.as_slice().iter().map(|&v| num(v)));
                row.push(num(p.residual));
                csv.row(&row);
            }
            emit(cfg.out.as_deref(), &csv.into_string())?;
            emit_sidecar(cfg.out.as_deref(), &to_json(&status)?)?;
        }
        Format::Json => {
            let doc = IterateJson {
                status,
                trajectory: &traj,
            };
            emit(cfg.out.as_deref(), &to_json(&doc)?)?;
        }
    }
    Ok(())
}

/// Solver tolerance for `fixedpoint`; agreement beyond ten times it fails.
pub fn solver_options(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.tol_or(SolverOptions::default().tol),
        max_iter: cfg.max_iter,
        eq_tol: EQ_TOL,
    }
}

pub fn check_agreement(report: &FixedPointReport, tol: f64) -> Result<(), CliError> {
    if report.agreement > 10.0 * tol {
        return Err(CliError::Invariant(format!(
            "iteration and curve root disagree by {:e} (limit {:e})",
            report.agreement,
            10.0 * tol
        )));
    }
    Ok(())
}

pub fn fixedpoint(cfg: &ExperimentConfig) -> Result<(), CliError> {
    json_only(cfg, "fixedpoint")?;
    let opts = solver_options(cfg);
    let report = solve_fixed_point(&cfg.params()?, &cfg.topo, &opts)?;
    emit(cfg.out.as_deref(), &to_json(&report)?)?;
    check_agreement(&report, opts.tol)
}

#[derive(Serialize)]
struct CurveSet {
    b: f64,
    intersections: usize,
    samples: Vec<CurveSample>,
}

pub fn curves(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let bs = match cfg.b {
        Some(b) => vec![b],
        None => DEFAULT_CURVE_B.to_vec(),
    };
    let grid_n = cfg.grid_or(CURVE_GRID);
    let sets = bs
        .into_iter()
        .map(|b| {
            let samples = sample_curves(&cfg.params_with(b)?, &cfg.topo, grid_n)?;
            Ok(CurveSet {
                b,
                intersections: count_intersections(&samples),
                samples,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    match cfg.format_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&["b", "t", "d2", "hub_d1", "tail_d1", "admissible"]);
            for set in &sets {
                for s in &set.samples {
                    csv.row(&[
                        num(set.b),
                        num(s.t),
                        num(s.d2),
                        num(s.hub_d1),
                        num(s.tail_d1),
                        (s.admissible as u8).to_string(),
                    ]);
                }
            }
            emit(cfg.out.as_deref(), &csv.into_string())?;
            for set in &sets {
                eprintln!(
                    "b = {}: {} interior intersection(s)",
                    set.b, set.intersections
                );
            }
        }
        Format::Json => emit(cfg.out.as_deref(), &to_json(&sets)?)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct SliceSummary {
    z: f64,
    count: usize,
    grid: Vec<f64>,
    members: Vec<Vec<bool>>,
}

pub fn regions(cfg: &ExperimentConfig, zs: &[f64]) -> Result<(), CliError> {
    let params = cfg.params_with(cfg.b.unwrap_or(REGION_B))?;
    let grid_n = cfg.grid_or(REGION_GRID);
    let slices = zs
        .iter()
        .map(|&z| region_slice(z, grid_n, &params, &cfg.topo))
        .collect::<Result<Vec<_>, _>>()?;
    match cfg.format_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&["z", "x", "y", "in_region"]);
            for s in &slices {
                for (row, &y) in s.members.iter().zip(&s.grid) {
                    for (&m, &x) in row.iter().zip(&s.grid) {
                        csv.row(&[num(s.z), num(x), num(y), (m as u8).to_string()]);
                    }
                }
            }
            emit(cfg.out.as_deref(), &csv.into_string())?;
            for s in &slices {
                eprintln!(
                    "z = {}: {} of {} grid points in Region I",
                    s.z,
                    s.count(),
                    grid_n * grid_n
                );
            }
        }
        Format::Json => {
            let out: Vec<SliceSummary> = slices
                .into_iter()
                .map(|s| SliceSummary {
                    z: s.z,
                    count: s.count(),
                    grid: s.grid,
                    members: s.members,
                })
                .collect();
            emit(cfg.out.as_deref(), &to_json(&out)?)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    seed: u64,
    trials: usize,
    horizon: usize,
    extinction_step: Option<usize>,
    extinct_trials: usize,
    plateau_window: [usize; 2],
    plateau_mean: Vec<f64>,
    /// Mean-field fixed point, for comparison only.
    mean_field: Option<LevelState>,
    deviation: Option<Vec<f64>>,
    regime: Regime,
    #[serde(skip_serializing_if = "Option::is_none")]
    prevalence: Option<&'a [Vec<f64>]>,
}

pub fn simulate(cfg: &ExperimentConfig, init: &str) -> Result<(), CliError> {
    let params = cfg.params()?;
    let topo = &cfg.topo;
    let start = match init {
        "all" => ChainState::all_infected(topo),
        "hub" => {
            let mut s = ChainState::all_healthy(topo);
            s.infected[0] = true;
            s
        }
        other => {
            return Err(CliError::Validation(format!(
                "--init must be `all` or `hub`, got {other:?}"
            )))
        }
    };
    let summary: RunSummary = run_trials(&params, topo, &start, cfg.horizon, cfg.trials, cfg.seed)?;
    let rows = summary.prevalence.len();
    let window = if DEFAULT_PLATEAU_WINDOW.end <= rows {
        DEFAULT_PLATEAU_WINDOW
    } else {
        (rows / 5)..rows
    };
    let plateau = plateau_mean(&summary, window.clone())?;
    let regime = classify_regime(&params, topo, EQ_TOL);
    let mean_field = if regime.dies_out() {
        Some(LevelState::zeros(topo.levels()))
    } else {
        solve_fixed_point(&params, topo, &solver_options(cfg))
            .ok()
            .and_then(|r| r.nontrivial_point)
    };
    let deviation = mean_field.as_ref().map(|m| {
        plateau
            .iter()
            .zip(m.as_slice())
            .map(|(s, m)| s - m)
            .collect()
    });
    let format = cfg.format_or(Format::Csv);
    let doc = SimulationSummary {
        seed: summary.seed,
        trials: summary.trials,
        horizon: summary.horizon,
        extinction_step: summary.extinction_step,
        extinct_trials: summary.extinct_trials,
        plateau_window: [window.start, window.end],
        plateau_mean: plateau,
        mean_field,
        deviation,
        regime,
        prevalence: (format == Format::Json).then_some(summary.prevalence.as_slice()),
    };
    match format {
        Format::Csv => {
            let mut csv = Csv::new(&level_header(&["step"], topo.levels(), &[]));
            for (t, row) in summary.prevalence.iter().enumerate() {
                let mut fields = vec![t.to_string()];
                fields.extend(row.iter().map(|&v| num(v)));
                csv.row(&fields);
            }
            emit(cfg.out.as_deref(), &csv.into_string())?;
            emit_sidecar(cfg.out.as_deref(), &to_json(&doc)?)?;
        }
        Format::Json => emit(cfg.out.as_deref(), &to_json(&doc)?)?,
    }
    Ok(())
}
