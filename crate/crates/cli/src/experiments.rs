//! The named experiments behind `hjcrit run`.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hjcrit_core::acceptance::CriterionReport;
use hjcrit_core::initial::InitialData;
use hjcrit_core::norms::integrate;
use hjcrit_core::physical::{evolve_physical, l1_limit_probe, ProbeHorizon, FLAT_RATE};
use hjcrit_core::reduced::integrate_reduced;
use hjcrit_core::similarity::{
    evolve, evolve_with, Absorption, Nonlinearity, Scheme, SolverConfig, TruncationParams,
};
use hjcrit_core::spectral::{hermite_mode, project_q0, semigroup_decay_rate, spectral_bound};
use hjcrit_core::{CriticalData, Error as CoreError, Grid, ScalarField};

use crate::config::{Experiment, ExperimentConfig, InitialSpec, SchemeName};
use crate::csv::{to_csv, Row};
use crate::manifest::RunManifest;
use crate::plot::{emit_plot, Axes, Reference};
use crate::verify::{print_table, run_verify};

/// Rows for the CSV plus experiment-specific manifest entries.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    pub results: Vec<(String, String)>,
}

impl ExperimentOutput {
    fn note(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }
}

/// What a finished `run` produced.
#[derive(Debug)]
pub enum RunStatus {
    Artifacts { rows: usize },
    Verified { reports: Vec<CriterionReport> },
}

impl RunStatus {
    pub fn success(&self) -> bool {
        match self {
            Self::Artifacts { .. } => true,
            Self::Verified { reports } => reports.iter().all(|r| r.passed),
        }
    }
}

fn initial_field(cfg: &ExperimentConfig, grid: &Grid) -> Result<ScalarField> {
    let data = match &cfg.initial_data {
        InitialSpec::Gaussian {} => InitialData::Gaussian,
        InitialSpec::ScaledGaussian { alpha } => InitialData::ScaledGaussian(*alpha),
        InitialSpec::GaussianPlusMoment { epsilon } => InitialData::GaussianPlusMoment(*epsilon),
        InitialSpec::FromFile { path } => InitialData::Values(read_values(path)?),
    };
    Ok(data.sample(grid)?)
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading initial data {}", path.display()))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, s)| {
            s.parse::<f64>()
                .with_context(|| format!("{}: value {} is not a number: `{s}`", path.display(), i + 1))
        })
        .collect()
}

fn solver_config(cfg: &ExperimentConfig, tau_end: f64) -> SolverConfig {
    SolverConfig {
        dt: cfg.solver.dt,
        tau_end,
        scheme: match cfg.solver.scheme {
            SchemeName::Rk4 => Scheme::ExplicitRk4,
            SchemeName::ImexEuler => Scheme::ImexEuler,
        },
        record_every: cfg.solver.record_every,
        nonlinearity: if cfg.truncation.enabled {
            Nonlinearity::Truncated
        } else {
            Nonlinearity::Full
        },
        store_snapshots: false,
    }
}

/// Runs the numerical part of an experiment without touching the disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let grid = cfg.grid()?;
    let mut out = ExperimentOutput::default();
    match cfg.experiment {
        Experiment::SimilarityRun => {
            let v0 = initial_field(cfg, &grid)?;
            let trunc = TruncationParams::new(cfg.truncation.rho, cfg.weight()?)?;
            let solver = solver_config(cfg, cfg.solver.tau_end);
            let traj = evolve_with(&v0, 0.0, &solver, Some(trunc), Absorption::for_exponent(cfg.q, cfg.dim))?;
            for w in &traj.warnings {
                log::warn!("{w}");
            }
            out.rows = traj.records.iter().map(Row::from_similarity).collect();
            out.note("dt_used", format!("{:.16e}", traj.dt));
            out.note("final_mass", format!("{:.16e}", traj.final_state.mass()));
            out.note("warnings", traj.warnings.len());
        }
        Experiment::PhysicalRun => {
            let u0 = initial_field(cfg, &grid)?;
            let solver = solver_config(cfg, 0.0);
            let traj = evolve_physical(&u0, cfg.q, cfg.solver.t_end, &solver)?;
            out.rows = traj.records.iter().map(Row::from_physical).collect();
            out.note("dt_used", format!("{:.16e}", traj.dt));
        }
        Experiment::ReducedOde => {
            let crit = CriticalData::new(cfg.dim)?;
            let m0 = integrate(&initial_field(cfg, &grid)?);
            let states = integrate_reduced(m0, crit.c_mass, cfg.solver.tau_end, cfg.solver.dt, cfg.dim)?;
            let last = states.len() - 1;
            out.rows = states
                .iter()
                .enumerate()
                .filter(|(i, _)| i % cfg.solver.record_every == 0 || *i == last)
                .map(|(_, s)| {
                    let mut row = Row::at_tau(s.tau);
                    row.set("mass", s.mass);
                    row.set("rescaled_mass", s.tau.powi(cfg.dim as i32 + 1) * s.mass);
                    row
                })
                .collect();
            out.note("initial_mass", format!("{m0:.16e}"));
        }
        Experiment::DichotomyProbe => {
            let u0 = initial_field(cfg, &grid)?;
            let horizon = ProbeHorizon {
                t_switch: cfg.solver.t_end,
                tau_end: cfg.solver.tau_end,
                ..ProbeHorizon::default()
            };
            let probe = l1_limit_probe(&u0, cfg.q, &horizon)?;
            out.rows = probe
                .samples
                .iter()
                .map(|&(tau, l1)| {
                    let mut row = Row::at_tau(tau);
                    row.set("l1", l1);
                    row
                })
                .collect();
            out.note("initial_l1", format!("{:.16e}", probe.initial_l1));
            out.note("plateau_estimate", format!("{:.16e}", probe.plateau_estimate));
            out.note("tail_rate", format!("{:.16e}", probe.tail_rate));
            out.note("flat_rate_threshold", format!("{FLAT_RATE:e}"));
            out.note("decaying", probe.decaying);
        }
        Experiment::SpectralProbe => {
            let weight = cfg.weight()?;
            let window = (1.0, cfg.solver.tau_end);
            let w0 = initial_field(cfg, &grid)?;
            for k in 1..=2 {
                let r = semigroup_decay_rate(&hermite_mode(&grid, k)?, &weight, window)?;
                out.note(&format!("mode{k}_measured_rate"), format!("{:.16e}", r.measured_rate));
                out.note(&format!("mode{k}_expected_rate"), format!("{:.16e}", r.expected_rate));
            }
            match semigroup_decay_rate(&w0, &weight, window) {
                Ok(r) => {
                    out.note("data_measured_rate", format!("{:.16e}", r.measured_rate));
                    out.note("data_expected_rate", format!("{:.16e}", r.expected_rate));
                }
                Err(CoreError::Inconclusive(msg)) => out.note("data_measured_rate", msg),
                Err(e) => return Err(e.into()),
            }
            out.note("essential_spectrum_bound", format!("{:.16e}", spectral_bound(weight.m(), cfg.dim)?));
            let linear = SolverConfig {
                nonlinearity: Nonlinearity::Off,
                ..SolverConfig::default_for(&grid, cfg.solver.tau_end)
            };
            let traj = evolve(&project_q0(&w0), &linear, None)?;
            out.rows = traj
                .records
                .iter()
                .map(|r| {
                    let mut row = Row::at_tau(r.tau);
                    row.set("mass", r.mass);
                    row.set("l2", r.l2);
                    row.set("h1m", r.h1m);
                    row.set("manifold_remainder", r.manifold_remainder);
                    row
                })
                .collect();
        }
        Experiment::Verify => bail!("verify produces no time series"),
    }
    Ok(out)
}

/// Runs an experiment and writes its artifacts.
///
/// Nothing is written when the experiment or the plot fails.
pub fn run(cfg: &ExperimentConfig) -> Result<RunStatus> {
    if cfg.experiment == Experiment::Verify {
        let reports = run_verify(false)?;
        print_table(&reports);
        return Ok(RunStatus::Verified { reports });
    }
    let start = Instant::now();
    let out = execute(cfg).with_context(|| format!("{} failed", cfg.experiment))?;
    let csv = to_csv(&out.rows);
    let svg = match &cfg.output.svg_path {
        Some(_) => {
            let table = crate::csv::parse_csv(&csv)?;
            let reference = reference_for(&cfg.output.plot_columns, cfg.dim)?;
            let axes = if cfg.output.log_axes { Axes::LogY } else { Axes::Linear };
            Some(emit_plot(&table, &cfg.output.plot_columns, axes, reference.as_ref())?)
        }
        None => None,
    };
    let manifest = RunManifest::new(cfg, &out.results, start.elapsed())?;

    let csv_path = cfg
        .output
        .csv_path
        .as_ref()
        .context("output.csv_path is required")?;
    write(csv_path, &csv)?;
    if let (Some(path), Some(svg)) = (&cfg.output.svg_path, svg) {
        write(path, &svg)?;
    }
    if let Some(path) = &cfg.output.manifest_path {
        write(path, &manifest.render())?;
    }
    Ok(RunStatus::Artifacts {
        rows: out.rows.len(),
    })
}

/// `M★` for plots of the rescaled mass.
pub fn reference_for(columns: &[String], dim: usize) -> Result<Option<Reference>> {
    if columns.iter().any(|c| c == "rescaled_mass") {
        Ok(Some(Reference {
            label: "M*".into(),
            value: CriticalData::new(dim)?.m_star,
        }))
    } else {
        Ok(None)
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
