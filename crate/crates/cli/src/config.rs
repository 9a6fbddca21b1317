//! Experiment configuration schemas. Configs are JSON, schema-validated on
//! load, with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use qrob_core::estimators::{Estimator, FunctionalSpec};
use qrob_core::measures::{uniform_grid_measure, DiscreteMeasure};
use qrob_core::models::{InnovationLaw, LinearProcessModel, ParametricFamily};
use qrob_core::robustness::{ContaminantAtom, ContaminationPath};

use crate::CliError;

/// Where a measure comes from: inline JSON, a file, a uniform-grid
/// discretization, or a point mass. Continuous targets are discretized
/// here, at the front door, never inside the library.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSource {
    Inline { measure: DiscreteMeasure },
    File { path: PathBuf },
    UniformGrid { min: f64, max: f64, points: usize },
    Dirac { at: f64 },
}

impl MeasureSource {
    pub fn resolve(&self, config_dir: &Path) -> Result<DiscreteMeasure, CliError> {
        match self {
            MeasureSource::Inline { measure } => Ok(measure.clone()),
            MeasureSource::File { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    config_dir.join(path)
                };
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    CliError::Config(format!("cannot read measure file {}: {e}", full.display()))
                })?;
                DiscreteMeasure::from_json_str(&text).map_err(|e| {
                    CliError::Config(format!("bad measure file {}: {e}", full.display()))
                })
            }
            MeasureSource::UniformGrid { min, max, points } => {
                uniform_grid_measure(*min, *max, *points)
                    .map_err(|e| CliError::Config(format!("bad uniform grid: {e}")))
            }
            MeasureSource::Dirac { at } => DiscreteMeasure::dirac_scalar(*at)
                .map_err(|e| CliError::Config(format!("bad dirac atom: {e}"))),
        }
    }
}

/// Contamination path with measure sources instead of resolved measures.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    ParamShift {
        family: ParametricFamily,
        theta1: f64,
        direction: f64,
    },
    MixtureDirac {
        base: MeasureSource,
        atom: ContaminantAtom,
    },
    ArShift {
        a: f64,
        innovation: InnovationLaw,
        a_direction: f64,
        #[serde(default)]
        innovation_magnitude: Option<f64>,
    },
}

impl PathSpec {
    pub fn resolve(&self, config_dir: &Path) -> Result<ContaminationPath, CliError> {
        Ok(match self {
            PathSpec::ParamShift {
                family,
                theta1,
                direction,
            } => ContaminationPath::ParamShift {
                family: *family,
                theta1: *theta1,
                direction: *direction,
            },
            PathSpec::MixtureDirac { base, atom } => ContaminationPath::MixtureDirac {
                base: base.resolve(config_dir)?,
                atom: *atom,
            },
            PathSpec::ArShift {
                a,
                innovation,
                a_direction,
                innovation_magnitude,
            } => ContaminationPath::ArShift {
                base: LinearProcessModel::new(*a, innovation.clone())
                    .map_err(|e| CliError::Config(format!("bad linear process: {e}")))?,
                a_direction: *a_direction,
                innovation_magnitude: *innovation_magnitude,
            },
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub measure1: MeasureSource,
    pub measure2: MeasureSource,
    /// Gauge exponent for the psi-distance column.
    pub psi_p: f64,
    #[serde(default)]
    pub master_seed: u64,
    pub output_csv: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvarConfig {
    pub measure: MeasureSource,
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
    pub output_json: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub path: PathSpec,
    pub estimator: Estimator,
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    /// Robustness target; defaults to three noise floors.
    #[serde(default)]
    pub eps_target: Option<f64>,
    /// Horizon of the finite-sample verdict; defaults to the largest grid n.
    #[serde(default)]
    pub n0: Option<usize>,
    pub output_surface_csv: PathBuf,
    pub output_verdict_json: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IorConfig {
    pub functional: FunctionalSpec,
    /// Probe gauge grid; defaults to `{0, 0.25, ..., 4}`.
    #[serde(default)]
    pub probe_grid: Option<Vec<f64>>,
    /// Base measure of the probe families; defaults to a point mass at 0.
    #[serde(default)]
    pub base: Option<MeasureSource>,
    #[serde(default)]
    pub master_seed: u64,
    pub output_json: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CramerRaoSection {
    pub n: usize,
    pub replications: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricConfig {
    pub family: ParametricFamily,
    pub theta: f64,
    #[serde(default)]
    pub cramer_rao: Option<CramerRaoSection>,
    /// Parameter displacements for the L1-density continuity sweep.
    #[serde(default)]
    pub l1_sweep_deltas: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_cramer_rao_csv: Option<PathBuf>,
    #[serde(default)]
    pub output_l1_csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PremiumExperimentConfig {
    pub base: MeasureSource,
    pub alpha: f64,
    /// Escaping-atom constant: the unbounded path places the contaminant at
    /// `k / delta`.
    pub unbounded_k: f64,
    /// Fixed contaminant location of the bounded path.
    pub bounded_c: f64,
    pub delta_grid_unbounded: Vec<f64>,
    pub delta_grid_bounded: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_atom_cap")]
    pub atom_cap: usize,
    #[serde(default = "default_mc_fallback")]
    pub mc_fallback_size: usize,
    pub master_seed: u64,
    pub output_csv: PathBuf,
    pub output_summary_json: PathBuf,
}

fn default_atom_cap() -> usize {
    qrob_core::measures::DEFAULT_ATOM_CAP
}

fn default_mc_fallback() -> usize {
    qrob_core::estimators::DEFAULT_MC_FALLBACK_SIZE
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YwExperimentConfig {
    pub a: f64,
    pub innovation: InnovationLaw,
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    /// Sample size of the standalone mean-accuracy check.
    pub mean_check_n: usize,
    pub master_seed: u64,
    pub output_csv: PathBuf,
    pub output_json: PathBuf,
}

/// Reads, hashes, and parses a config file.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, String, PathBuf), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let hash = crate::output::sha256_hex(&bytes);
    let parsed: T = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
    let dir = path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((parsed, hash, dir))
}
