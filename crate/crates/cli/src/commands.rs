// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use pcwqed_core::analysis::{analyze, fit_omega_vs_n, AnalysisConfig, DipReport, LinearFit};
use pcwqed_core::ensemble::{run_ensemble, run_g2_ensemble, G2Spec, ProgressHook, RunOptions, SpectrumResult};
use pcwqed_core::observables::{dominant_frequency, Field};
use serde::{Deserialize, Serialize};

use crate::config::{G2Detuning, RunConfig, SweepAxis};
use crate::error::CliError;
use crate::output::{ensure_dir, read_columns, write_csv, write_json, Table};

pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const G2_CSV: &str = "g2.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const ANALYSIS_JSON: &str = "analysis.json";

/// Where and how a command runs. Nothing here reaches the output files.
pub struct Runtime<'a> {
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub out_dir: PathBuf,
    pub progress: Option<ProgressHook<'a>>,
}

impl Runtime<'_> {
    fn options(&self) -> RunOptions<'_> {
        RunOptions {
            workers: self.workers,
            progress: self.progress,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub command: String,
    pub config: RunConfig,
    pub samples: usize,
    pub failed: usize,
    pub analysis: DipReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub omega_max: Option<f64>,
    pub t_dip: Option<f64>,
    pub t_peak: f64,
    pub spacing: Option<f64>,
    pub dips: usize,
    pub samples: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub command: String,
    pub config: RunConfig,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// ω_max against atom number, when the axis is one and at least three
    /// values produced a dip.
    pub fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Summary {
    pub command: String,
    pub config: RunConfig,
    pub delta: f64,
    pub field: Field,
    pub samples: usize,
    pub failed: usize,
    pub g2_zero: f64,
    /// Angular frequency of the strongest oscillation in g²(τ) − 1.
    pub beat_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeSummary {
    pub command: String,
    pub input: PathBuf,
    pub analysis: AnalysisConfig,
    pub cluster_center: f64,
    pub report: DipReport,
}

fn ensemble_spectrum(cfg: &RunConfig, rt: &Runtime) -> Result<(SpectrumResult, DipReport), CliError> {
    let spec = cfg.ensemble_spec(cfg.spectrum.grid()?);
    let res = run_ensemble(&spec, &cfg.physics, &rt.options())?;
    let report = analyze(
        &res.delta,
        &res.t_mean,
        &cfg.analysis,
        Some(cfg.cluster_center()),
        cfg.physics.j_strength,
    )?;
    Ok((res, report))
}

fn write_spectrum(path: &Path, res: &SpectrumResult) -> Result<(), CliError> {
    let table = Table::dense(
        &["delta", "T_mean", "T_stderr", "R_mean", "R_stderr"],
        &[&res.delta, &res.t_mean, &res.t_stderr, &res.r_mean, &res.r_stderr],
    );
    write_csv(path, &table)
}

/// Ensemble spectrum: `spectrum.csv` and `summary.json`.
pub fn cmd_spectrum(cfg: &RunConfig, rt: &Runtime) -> Result<SpectrumSummary, CliError> {
    cfg.validate()?;
    let dir = ensure_dir(&rt.out_dir)?;
    let (res, analysis) = ensemble_spectrum(cfg, rt)?;
    write_spectrum(&dir.join(SPECTRUM_CSV), &res)?;
    let summary = SpectrumSummary {
        command: "spectrum".into(),
        config: cfg.clone(),
        samples: res.samples,
        failed: res.failed,
        analysis,
    };
    write_json(&dir.join(SUMMARY_JSON), &summary)?;
    Ok(summary)
}

/// One spectrum per swept value (`spectrum_<k>.csv`), the extracted
/// quantities in `sweep.csv`, and `summary.json`. Every value reuses the
/// same master seed.
pub fn cmd_sweep(cfg: &RunConfig, rt: &Runtime) -> Result<SweepSummary, CliError> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("the sweep command needs a [sweep] section".into()))?;
    let dir = ensure_dir(&rt.out_dir)?;
    let mut rows = Vec::with_capacity(sweep.values.len());
    for (k, &value) in sweep.values.iter().enumerate() {
        let point = cfg.with_axis(sweep.axis, value)?;
        let (res, report) = ensemble_spectrum(&point, rt)?;
        write_spectrum(&dir.join(format!("spectrum_{k:03}.csv")), &res)?;
        rows.push(SweepRow {
            value,
            omega_max: report.omega_max,
            t_dip: report.t_dip,
            t_peak: report.t_peak,
            spacing: report.spacing,
            dips: report.dips.len(),
            samples: res.samples,
            failed: res.failed,
        });
    }
    let fit = match sweep.axis {
        SweepAxis::N | SweepAxis::NMean => {
            let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.omega_max.map(|w| (r.value, w))).collect();
            fit_omega_vs_n(&pts).ok()
        }
        _ => None,
    };
    let col = |f: &dyn Fn(&SweepRow) -> Option<f64>| rows.iter().map(f).collect::<Vec<_>>();
    let table = Table {
        header: &["value", "omega_max", "t_dip", "t_peak", "spacing", "dips", "samples", "failed"],
        columns: vec![
            col(&|r| Some(r.value)),
            col(&|r| r.omega_max),
            col(&|r| r.t_dip),
            col(&|r| Some(r.t_peak)),
            col(&|r| r.spacing),
            col(&|r| Some(r.dips as f64)),
            col(&|r| Some(r.samples as f64)),
            col(&|r| Some(r.failed as f64)),
        ],
    };
    write_csv(&dir.join(SWEEP_CSV), &table)?;
    let summary = SweepSummary {
        command: "sweep".into(),
        config: cfg.clone(),
        axis: sweep.axis,
        rows,
        fit,
    };
    write_json(&dir.join(SUMMARY_JSON), &summary)?;
    Ok(summary)
}

/// Ensemble g²(τ): `g2.csv` and `summary.json`. With `delta = "omega_max"`
/// the ensemble spectrum is computed first and written as well.
pub fn cmd_g2(cfg: &RunConfig, rt: &Runtime) -> Result<G2Summary, CliError> {
    cfg.validate()?;
    let dir = ensure_dir(&rt.out_dir)?;
    let delta = match cfg.g2.delta {
        G2Detuning::Value(d) => d,
        G2Detuning::Auto(_) => {
            let (res, report) = ensemble_spectrum(cfg, rt)?;
            write_spectrum(&dir.join(SPECTRUM_CSV), &res)?;
            report.omega_max.ok_or(CliError::NoDip)?
        }
    };
    let spec = G2Spec {
        count: cfg.ensemble.count,
        samples: cfg.ensemble.samples,
        master_seed: cfg.seed,
        delta,
        tau: cfg.g2.tau_grid()?,
        field: cfg.g2.field,
        average: cfg.g2.average,
    };
    let res = run_g2_ensemble(&spec, &cfg.physics, &rt.options())?;
    let name = match cfg.g2.field {
        Field::Reflected => ["tau", "g2_R", "g2_R_stderr"],
        Field::Transmitted => ["tau", "g2_T", "g2_T_stderr"],
    };
    write_csv(
        &dir.join(G2_CSV),
        &Table::dense(&name, &[&res.tau, &res.g2_mean, &res.g2_stderr]),
    )?;
    let summary = G2Summary {
        command: "g2".into(),
        config: cfg.clone(),
        delta,
        field: cfg.g2.field,
        samples: res.samples,
        failed: res.failed,
        g2_zero: res.g2_mean[0],
        beat_frequency: dominant_frequency(&res.tau, &res.g2_mean),
    };
    write_json(&dir.join(SUMMARY_JSON), &summary)?;
    Ok(summary)
}

/// Re-analyses a spectrum table (columns `delta`, `T_mean`) with the
/// config's analysis settings and writes `analysis.json`.
pub fn cmd_analyze(cfg: &RunConfig, rt: &Runtime, input: &Path) -> Result<AnalyzeSummary, CliError> {
    cfg.validate()?;
    let cols = read_columns(input, &["delta", "T_mean"])?;
    let cluster_center = cfg.cluster_center();
    let report = analyze(&cols[0], &cols[1], &cfg.analysis, Some(cluster_center), cfg.physics.j_strength)?;
    let dir = ensure_dir(&rt.out_dir)?;
    let summary = AnalyzeSummary {
        command: "analyze".into(),
        input: input.to_path_buf(),
        analysis: cfg.analysis,
        cluster_center,
        report,
    };
    write_json(&dir.join(ANALYSIS_JSON), &summary)?;
    Ok(summary)
}
