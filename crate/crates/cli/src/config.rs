// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.

use std::path::PathBuf;

use pcwqed_core::analysis::AnalysisConfig;
use pcwqed_core::ensemble::{AtomCount, G2Average, SolverKind};
use pcwqed_core::observables::Field;
use pcwqed_core::PhysicalParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest detuning or delay grid accepted.
const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Master seed for the chain substreams.
    pub seed: u64,
    pub physics: PhysicalParams,
    pub ensemble: EnsembleSection,
    pub spectrum: SpectrumSection,
    pub analysis: AnalysisConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub g2: G2Section,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            physics: PhysicalParams::default(),
            ensemble: EnsembleSection::default(),
            spectrum: SpectrumSection::default(),
            analysis: AnalysisConfig::default(),
            sweep: None,
            g2: G2Section::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub count: AtomCount,
    pub samples: usize,
    pub solver: SolverKind,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            count: AtomCount::Fixed { n: 10 },
            samples: 1000,
            solver: SolverKind::Coherent,
        }
    }
}

/// Uniform detuning grid `delta_min, delta_min + step, …, delta_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_step: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            delta_min: -10.0,
            delta_max: 50.0,
            delta_step: 0.1,
        }
    }
}

impl SpectrumSection {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        uniform_grid("spectrum", self.delta_min, self.delta_max, self.delta_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Fixed atom number.
    N,
    /// Poisson mean atom number.
    NMean,
    SigmaIh,
    GammaD,
    GammaEm,
    JStrength,
    IntLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoDetuning {
    OmegaMax,
}

/// Either an explicit probe detuning or `"omega_max"`, located on the
/// ensemble spectrum first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum G2Detuning {
    Value(f64),
    Auto(AutoDetuning),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct G2Section {
    pub delta: G2Detuning,
    pub tau_max: f64,
    pub tau_step: f64,
    pub field: Field,
    pub average: G2Average,
}

impl Default for G2Section {
    fn default() -> Self {
        Self {
            delta: G2Detuning::Auto(AutoDetuning::OmegaMax),
            tau_max: 20.0,
            tau_step: 0.05,
            field: Field::Reflected,
            average: G2Average::PerChain,
        }
    }
}

impl G2Section {
    pub fn tau_grid(&self) -> Result<Vec<f64>, CliError> {
        uniform_grid("g2 tau", 0.0, self.tau_max, self.tau_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn uniform_grid(name: &str, lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(CliError::Config(format!(
            "{name} grid needs finite bounds with max >= min and step > 0"
        )));
    }
    let steps = ((hi - lo) / step).round();
    if steps >= MAX_GRID_POINTS as f64 {
        return Err(CliError::Config(format!("{name} grid exceeds {MAX_GRID_POINTS} points")));
    }
    Ok((0..=steps as usize).map(|i| lo + step * i as f64).collect())
}

impl RunConfig {
    /// Parses and validates; any failure is a configuration error.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if !table.contains_key("schema_version") {
            return Err(CliError::Config("missing required key `schema_version`".into()));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: pcwqed_core::Error| CliError::Config(e.to_string());
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.physics.validate().map_err(cfg)?;
        self.analysis.validate().map_err(cfg)?;
        if self.ensemble.samples == 0 {
            return Err(CliError::Config("ensemble.samples must be >= 1".into()));
        }
        self.ensemble_spec(self.spectrum.grid()?).validate(&self.physics).map_err(cfg)?;
        self.g2.tau_grid()?;
        if let G2Detuning::Value(d) = self.g2.delta {
            if !d.is_finite() {
                return Err(CliError::Config("g2.delta must be finite".into()));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.len() < 2 {
                return Err(CliError::Config("sweep needs at least two values".into()));
            }
            for &v in &sweep.values {
                self.with_axis(sweep.axis, v)?;
            }
        }
        Ok(())
    }

    pub fn ensemble_spec(&self, delta_grid: Vec<f64>) -> pcwqed_core::ensemble::EnsembleSpec {
        pcwqed_core::ensemble::EnsembleSpec {
            count: self.ensemble.count,
            samples: self.ensemble.samples,
            delta_grid,
            master_seed: self.seed,
            solver: self.ensemble.solver,
        }
    }

    /// Copy with one swept quantity replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self, CliError> {
        let mut out = self.clone();
        match axis {
            SweepAxis::N => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= usize::MAX as f64) {
                    return Err(CliError::Config(format!("sweep value {value} is not an atom number")));
                }
                out.ensemble.count = AtomCount::Fixed { n: value as usize };
            }
            SweepAxis::NMean => out.ensemble.count = AtomCount::Poisson { mean: value },
            SweepAxis::SigmaIh => out.physics.sigma_ih = value,
            SweepAxis::GammaD => out.physics.gamma_d = value,
            SweepAxis::GammaEm => out.physics.gamma_em = value,
            SweepAxis::JStrength => out.physics.j_strength = value,
            SweepAxis::IntLength => out.physics.int_length = value,
        }
        out.sweep = None;
        out.physics.validate().map_err(|e| CliError::Config(e.to_string()))?;
        out.ensemble_spec(vec![0.0])
            .validate(&out.physics)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(out)
    }

    /// Centre of the high-frequency dip cluster, `n̄·𝒥`.
    pub fn cluster_center(&self) -> f64 {
        let n = match self.ensemble.count {
            AtomCount::Fixed { n } => n as f64,
            AtomCount::Poisson { mean } => mean,
        };
        n * self.physics.j_strength
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_toml("schema_version = 1\n").unwrap();
        assert_eq!(c, RunConfig::default());
        let grid = c.spectrum.grid().unwrap();
        assert_eq!(grid.len(), 601);
        assert_eq!(grid[0], -10.0);
        assert!((grid[600] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_keys_and_missing_version() {
        for text in [
            "schema_version = 1\n[physics]\ngamma_1D = 0.3\n",
            "schema_version = 1\nsamples = 3\n",
            "schema_version = 1\n[ensemble]\ncount = { mode = \"fixed\", n = 3, m = 1 }\n",
            "[physics]\ngamma_1d = 0.3\n",
            "schema_version = 2\n",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = RunConfig::from_toml("schema_version = 1\n[physics]\nomega_c = \n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
    }

    #[test]
    fn detuning_choice_parses_both_forms() {
        let c = RunConfig::from_toml("schema_version = 1\n[g2]\ndelta = 39.5\n").unwrap();
        assert_eq!(c.g2.delta, G2Detuning::Value(39.5));
        let c = RunConfig::from_toml("schema_version = 1\n[g2]\ndelta = \"omega_max\"\n").unwrap();
        assert_eq!(c.g2.delta, G2Detuning::Auto(AutoDetuning::OmegaMax));
    }

    #[test]
    fn sweep_validation() {
        let ok = "schema_version = 1\n[sweep]\naxis = \"n\"\nvalues = [2, 4, 6]\n";
        let c = RunConfig::from_toml(ok).unwrap();
        assert_eq!(
            c.with_axis(SweepAxis::N, 4.0).unwrap().ensemble.count,
            AtomCount::Fixed { n: 4 }
        );
        for bad in [
            "schema_version = 1\n[sweep]\naxis = \"n\"\nvalues = [2]\n",
            "schema_version = 1\n[sweep]\naxis = \"n\"\nvalues = [2, 4.5]\n",
            "schema_version = 1\n[sweep]\naxis = \"gamma_d\"\nvalues = [1, -1]\n",
        ] {
            assert!(RunConfig::from_toml(bad).is_err(), "{bad}");
        }
    }
}
