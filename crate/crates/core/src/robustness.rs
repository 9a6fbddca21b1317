//! The diagnostic engine: Monte-Carlo sampling laws of estimators,
//! robustness-modulus surfaces over contamination paths, gauge
//! integrability certificates, functional-continuity probes, the
//! index-of-robustness estimator, and the information-bound check.
//!
//! A verdict here is always path- and grid-relative: surfaces sample the
//! neighborhood of a base model along explicit contamination paths rather
//! than optimizing over a metric ball, so they are lower bounds as evidence
//! of non-robustness and sampled evidence for robustness. Reports echo the
//! grids so that no reader can mistake them for the full quantifier.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimators::{Estimator, EstimatorError};
use crate::functionals::{Functional, FunctionalError};
use crate::measures::{DiscreteMeasure, GaugeFunction, MeasureError};
use crate::metrics::{prohorov, psi_distance_with_tol};
use crate::models::{InnovationLaw, LinearProcessModel, ModelError, ModelSpec, ParametricFamily};
use crate::rng::{child_seed, SeedSpec};

/// Estimator outputs are snapped to this grid before forming the empirical
/// law, bounding the atom count of sampling laws.
pub const OUTPUT_ROUNDING: f64 = 1e-12;

/// Number of geometric family members probed by the continuity machinery:
/// contamination depths `m = 2^j`, `j = 0..=IOR_FAMILY_DEPTH_LOG2`.
pub const IOR_FAMILY_DEPTH_LOG2: u32 = 36;

/// A probe flags a discontinuity when the tail gaps exceed this multiple of
/// the final probe distance (scale-free, no absolute tolerance).
pub const FLAG_MARGIN_FACTOR: f64 = 4.0;

/// Probe distances are resolved finer than the default metric tolerance so
/// that the geometric tails (down to 2^-36) remain strictly ordered.
const PROBE_DISTANCE_TOL: f64 = 1e-13;

/// Default verdict threshold in noise-floor multiples.
pub const DEFAULT_NOISE_FLOOR_MULTIPLE: f64 = 3.0;

#[derive(Debug, Error)]
pub enum RobustnessError {
    #[error("need at least 2 replications, got {0}")]
    TooFewReplications(usize),
    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        source: EstimatorError,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("contamination path invalid at delta = {delta}: {reason}")]
    PathInvalid { delta: f64, reason: String },
    #[error("target epsilon {eps_target} is not above the noise floor {noise_floor}")]
    TargetBelowNoiseFloor { eps_target: f64, noise_floor: f64 },
    #[error("probe family construction failed: {0}")]
    ProbeConstruction(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Monte-Carlo approximation of the estimator's sampling law
/// `P^theta o T_n^{-1}`.
#[derive(Debug, Clone)]
pub struct SamplingLaw {
    pub law: DiscreteMeasure,
    pub n: usize,
    pub replications: usize,
    pub seed: SeedSpec,
}

/// Runs `replications` independent replications of "draw `n` observations,
/// apply the estimator" and returns the empirical law of the outputs.
///
/// Replication `r` uses the child seed `mix64(cell ^ r * GOLDEN)` of the
/// stream's effective seed, so outputs are identical no matter how the
/// replications are scheduled.
pub fn sampling_law(
    model: &ModelSpec,
    estimator: &Estimator,
    n: usize,
    replications: usize,
    seed: SeedSpec,
) -> Result<SamplingLaw, RobustnessError> {
    if replications < 2 {
        return Err(RobustnessError::TooFewReplications(replications));
    }
    model.validate()?;
    let cell = seed.effective();
    let run_one = |r: usize| -> Result<f64, EstimatorError> {
        let mut rng = crate::rng::SplitMix64::new(child_seed(cell, r as u64));
        let xs = crate::models::sample_with_rng(model, n, &mut rng);
        let estimator_seed = SeedSpec::new(child_seed(cell, r as u64), 1);
        let est = estimator.evaluate(&xs, estimator_seed)?;
        Ok((est.value / OUTPUT_ROUNDING).round() * OUTPUT_ROUNDING)
    };
    let results: Vec<Result<f64, EstimatorError>> = if replications >= 64 {
        (0..replications).into_par_iter().map(run_one).collect()
    } else {
        (0..replications).map(run_one).collect()
    };
    let mut outputs = Vec::with_capacity(replications);
    for (index, res) in results.into_iter().enumerate() {
        outputs.push(res.map_err(|source| RobustnessError::Replication { index, source })?);
    }
    let law = DiscreteMeasure::empirical_scalar(&outputs)?;
    Ok(SamplingLaw {
        law,
        n,
        replications,
        seed,
    })
}

/// Location of the contaminating atom along a mixture path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContaminantAtom {
    /// Atom fixed at `c` for every delta.
    Fixed { c: f64 },
    /// Atom at `k / delta`: mass shrinks while the atom escapes, the
    /// gauge-breaking direction.
    InverseDelta { k: f64 },
}

/// A one-parameter family of models through a base model at `delta = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContaminationPath {
    /// Parameter shift `theta_1 + delta * direction` inside one family.
    ParamShift {
        family: ParametricFamily,
        theta1: f64,
        direction: f64,
    },
    /// `(1 - delta) base + delta * dirac(c(delta))`.
    MixtureDirac {
        base: DiscreteMeasure,
        atom: ContaminantAtom,
    },
    /// Linear-process perturbation: shifts the coefficient by
    /// `delta * a_direction` and, when `innovation_magnitude` is set, mixes
    /// the innovations with a centered `±magnitude` pair at rate `delta`.
    ArShift {
        base: LinearProcessModel,
        a_direction: f64,
        innovation_magnitude: Option<f64>,
    },
}

impl ContaminationPath {
    /// The model at displacement `delta >= 0`; `delta = 0` is the base.
    pub fn model_at(&self, delta: f64) -> Result<ModelSpec, RobustnessError> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(RobustnessError::PathInvalid {
                delta,
                reason: "delta must be finite and nonnegative".into(),
            });
        }
        match self {
            ContaminationPath::ParamShift {
                family,
                theta1,
                direction,
            } => {
                let theta = theta1 + delta * direction;
                if !family.theta_in_range(theta) {
                    return Err(RobustnessError::PathInvalid {
                        delta,
                        reason: format!("shifted parameter {theta} leaves the family range"),
                    });
                }
                Ok(ModelSpec::IidParametric {
                    family: *family,
                    theta,
                })
            }
            ContaminationPath::MixtureDirac { base, atom } => {
                if delta == 0.0 {
                    return Ok(ModelSpec::IidNonparametric {
                        measure: base.clone(),
                    });
                }
                if delta > 1.0 {
                    return Err(RobustnessError::PathInvalid {
                        delta,
                        reason: "mixture weight above one".into(),
                    });
                }
                let c = match *atom {
                    ContaminantAtom::Fixed { c } => c,
                    ContaminantAtom::InverseDelta { k } => k / delta,
                };
                if !c.is_finite() {
                    return Err(RobustnessError::PathInvalid {
                        delta,
                        reason: "contaminant atom is not finite".into(),
                    });
                }
                let contaminated =
                    DiscreteMeasure::mix(base, &DiscreteMeasure::dirac_scalar(c)?, delta)?;
                Ok(ModelSpec::IidNonparametric {
                    measure: contaminated,
                })
            }
            ContaminationPath::ArShift {
                base,
                a_direction,
                innovation_magnitude,
            } => {
                let a = base.a + delta * a_direction;
                let innovation = match innovation_magnitude {
                    Some(magnitude) if delta > 0.0 => InnovationLaw::Contaminated {
                        base: Box::new(base.innovation.clone()),
                        eps: delta,
                        magnitude: *magnitude,
                    },
                    _ => base.innovation.clone(),
                };
                let model = LinearProcessModel::new(a, innovation).map_err(|e| {
                    RobustnessError::PathInvalid {
                        delta,
                        reason: e.to_string(),
                    }
                })?;
                Ok(ModelSpec::LinearProcess { model })
            }
        }
    }
}

/// Grid of Prohorov distances between sampling laws along a contamination
/// path, plus the per-n noise floor.
#[derive(Debug, Clone, Serialize)]
pub struct RobustnessSurface {
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    /// `eps_hat[i][j]` = distance at `(delta_grid[i], n_grid[j])`.
    pub eps_hat: Vec<Vec<f64>>,
    /// Prohorov distance between two independent `delta = 0` laws, per n.
    pub noise_floor: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
}

const TAG_BASE: u64 = 0x1_0000_0000;
const TAG_FLOOR: u64 = 0x2_0000_0000;
const TAG_PATH: u64 = 0x3_0000_0000;

/// Computes the surface `eps_hat(delta, n) = prohorov(law at delta, law at
/// 0)` with independent child seeds per cell. The `delta = 0` row is the
/// noise floor replicate by construction.
pub fn robustness_surface(
    path: &ContaminationPath,
    estimator: &Estimator,
    delta_grid: &[f64],
    n_grid: &[usize],
    replications: usize,
    seed: SeedSpec,
) -> Result<RobustnessSurface, RobustnessError> {
    if delta_grid.is_empty() || n_grid.is_empty() {
        return Err(RobustnessError::InvalidGrid("empty grid".into()));
    }
    if delta_grid[0] != 0.0 {
        return Err(RobustnessError::InvalidGrid(
            "delta grid must start at 0".into(),
        ));
    }
    if delta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RobustnessError::InvalidGrid(
            "delta grid must be strictly increasing".into(),
        ));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RobustnessError::InvalidGrid(
            "n grid must be strictly increasing".into(),
        ));
    }
    let base_model = path.model_at(0.0)?;
    // Validate the whole path before any sampling.
    for &d in &delta_grid[1..] {
        path.model_at(d)?;
    }
    let mut base_laws = Vec::with_capacity(n_grid.len());
    let mut noise_floor = Vec::with_capacity(n_grid.len());
    for (j, &n) in n_grid.iter().enumerate() {
        let base = sampling_law(
            &base_model,
            estimator,
            n,
            replications,
            seed.substream(TAG_BASE + j as u64),
        )?;
        let floor = sampling_law(
            &base_model,
            estimator,
            n,
            replications,
            seed.substream(TAG_FLOOR + j as u64),
        )?;
        noise_floor.push(prohorov(&floor.law, &base.law));
        base_laws.push(base);
    }
    let mut eps_hat = Vec::with_capacity(delta_grid.len());
    for (i, &delta) in delta_grid.iter().enumerate() {
        if delta == 0.0 {
            // Same pair as the noise floor: equal by construction.
            eps_hat.push(noise_floor.clone());
            continue;
        }
        let model = path.model_at(delta)?;
        let mut row = Vec::with_capacity(n_grid.len());
        for (j, &n) in n_grid.iter().enumerate() {
            let law = sampling_law(
                &model,
                estimator,
                n,
                replications,
                seed.substream(TAG_PATH + (i * n_grid.len() + j) as u64),
            )?;
            row.push(prohorov(&law.law, &base_laws[j].law));
        }
        eps_hat.push(row);
    }
    Ok(RobustnessSurface {
        delta_grid: delta_grid.to_vec(),
        n_grid: n_grid.to_vec(),
        eps_hat,
        noise_floor,
        replications,
        master_seed: seed.master_seed,
    })
}

impl RobustnessSurface {
    pub fn max_noise_floor(&self) -> f64 {
        self.noise_floor.iter().copied().fold(0.0, f64::max)
    }
}

/// Grid-relative robustness verdict; all thresholds echoed.
#[derive(Debug, Clone, Serialize)]
pub struct RobustnessVerdict {
    /// Some positive grid delta keeps the surface below target for every
    /// grid n up to `n0`.
    pub finite_sample_ok: bool,
    /// Some positive grid delta keeps the surface below target for every
    /// grid n from some grid point onward.
    pub asymptotic_ok: bool,
    /// `eps_target` in noise-floor multiples.
    pub margin: f64,
    pub eps_target: f64,
    pub n0: usize,
    pub max_noise_floor: f64,
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    /// Verdicts are relative to the sampled path and grids, not the full
    /// neighborhood quantifier.
    pub grid_relative: bool,
}

/// Classifies a surface against a target epsilon. `eps_target = None` uses
/// [`DEFAULT_NOISE_FLOOR_MULTIPLE`] times the maximal noise floor.
pub fn classify(
    surface: &RobustnessSurface,
    eps_target: Option<f64>,
    n0: usize,
) -> Result<RobustnessVerdict, RobustnessError> {
    let max_nf = surface.max_noise_floor();
    let eps_target = eps_target.unwrap_or(DEFAULT_NOISE_FLOOR_MULTIPLE * max_nf);
    if eps_target <= max_nf {
        return Err(RobustnessError::TargetBelowNoiseFloor {
            eps_target,
            noise_floor: max_nf,
        });
    }
    let positive_rows: Vec<usize> = (0..surface.delta_grid.len())
        .filter(|&i| surface.delta_grid[i] > 0.0)
        .collect();
    // A grid with no positive displacement samples no contamination at all;
    // the quantifier over the delta-ball is then vacuous and both verdicts
    // hold trivially.
    let finite_sample_ok = positive_rows.is_empty()
        || positive_rows.iter().any(|&i| {
            surface
                .n_grid
                .iter()
                .enumerate()
                .filter(|(_, &n)| n <= n0)
                .all(|(j, _)| surface.eps_hat[i][j] <= eps_target)
        });
    let asymptotic_ok = positive_rows.is_empty()
        || positive_rows.iter().any(|&i| {
            (0..surface.n_grid.len()).any(|j_star| {
                (j_star..surface.n_grid.len()).all(|j| surface.eps_hat[i][j] <= eps_target)
            })
        });
    Ok(RobustnessVerdict {
        finite_sample_ok,
        asymptotic_ok,
        margin: if max_nf > 0.0 {
            eps_target / max_nf
        } else {
            f64::INFINITY
        },
        eps_target,
        n0,
        max_noise_floor: max_nf,
        delta_grid: surface.delta_grid.clone(),
        n_grid: surface.n_grid.clone(),
        replications: surface.replications,
        master_seed: surface.master_seed,
        grid_relative: true,
    })
}

/// Smallest grid value `a = 2^k, k <= 64` at which every measure's gauge
/// tail drops to `eps`, or `None` if none does.
pub fn uniform_integrability_check(
    measures: &[DiscreteMeasure],
    psi: &GaugeFunction,
    eps: f64,
) -> Option<f64> {
    (0..=64u32)
        .map(|k| (2.0f64).powi(k as i32))
        .find(|&a| measures.iter().all(|mu| mu.gauge_tail(psi, a) <= eps))
}

/// The escaping-atom family `(1 - 1/m) dirac(0) + (1/m) dirac(m^{1/p})`.
pub fn adversarial_family(p: f64, m: u64) -> Result<DiscreteMeasure, RobustnessError> {
    contaminated_member(&DiscreteMeasure::dirac_scalar(0.0)?, p, m)
}

/// `(1 - 1/m) base + (1/m) dirac(m^{1/p})`.
fn contaminated_member(
    base: &DiscreteMeasure,
    p: f64,
    m: u64,
) -> Result<DiscreteMeasure, RobustnessError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(RobustnessError::ProbeConstruction(format!(
            "probe exponent {p} must be positive"
        )));
    }
    if m < 1 {
        return Err(RobustnessError::ProbeConstruction(
            "family depth m must be >= 1".into(),
        ));
    }
    let atom = (m as f64).powf(1.0 / p);
    if !atom.is_finite() {
        return Err(RobustnessError::ProbeConstruction(format!(
            "contaminant atom m^(1/p) overflows at p = {p}, m = {m}"
        )));
    }
    Ok(DiscreteMeasure::mix(
        base,
        &DiscreteMeasure::dirac_scalar(atom)?,
        1.0 / m as f64,
    )?)
}

/// Per-member record of a continuity probe.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    /// `psi`-distance from each family member to the limit.
    pub distances: Vec<f64>,
    /// `|T(mu_m) - T(limit)|` for each member.
    pub gaps: Vec<f64>,
    /// Length of the tail inspected by the flag rule.
    pub tail_len: usize,
    /// Distances strictly decrease over the tail while every tail gap stays
    /// at least [`FLAG_MARGIN_FACTOR`] times the final distance.
    pub flagged: bool,
}

/// Evaluates the functional along a measure sequence and flags an apparent
/// discontinuity at the limit.
pub fn continuity_probe(
    functional: &Functional,
    family: &[DiscreteMeasure],
    limit: &DiscreteMeasure,
    psi: &GaugeFunction,
) -> Result<ContinuityReport, RobustnessError> {
    if family.is_empty() {
        return Err(RobustnessError::InvalidGrid("empty probe family".into()));
    }
    let limit_value = functional.eval(limit)?;
    let mut distances = Vec::with_capacity(family.len());
    let mut gaps = Vec::with_capacity(family.len());
    for mu in family {
        distances.push(psi_distance_with_tol(mu, limit, psi, PROBE_DISTANCE_TOL));
        gaps.push((functional.eval(mu)? - limit_value).abs());
    }
    let tail_len = family.len().div_ceil(2);
    let tail_start = family.len() - tail_len;
    let decreasing = distances[tail_start..].windows(2).all(|w| w[0] > w[1]);
    let final_distance = *distances.last().expect("nonempty");
    let min_tail_gap = gaps[tail_start..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let flagged =
        decreasing && min_tail_gap > 0.0 && min_tail_gap >= FLAG_MARGIN_FACTOR * final_distance;
    Ok(ContinuityReport {
        distances,
        gaps,
        tail_len,
        flagged,
    })
}

/// Index-of-robustness estimate.
#[derive(Debug, Clone, Serialize)]
pub struct IorResult {
    /// Smallest probed gauge exponent with no discontinuity flag; `None`
    /// when every gauge flagged.
    pub p_star: Option<f64>,
    /// `1 / p_star` with the conventions `1/0 = inf` (all gauges pass) and
    /// `0` when none passes.
    pub ior: f64,
    /// Gauges that flagged a discontinuity, in probe order.
    pub flagged_gauges: Vec<f64>,
}

/// The default probe grid `{0, 0.25, ..., 4}`.
pub fn default_probe_grid() -> Vec<f64> {
    (0..=16).map(|i| i as f64 * 0.25).collect()
}

/// Estimates the index of robustness of a plug-in functional by probing
/// each gauge `psi_q` on the grid with escaping-atom families built from
/// every positive grid exponent: `ior = 1 / p*` where `p*` is the smallest
/// gauge the functional survives.
pub fn ior_estimate(
    functional: &Functional,
    probe_ps: &[f64],
    base: &DiscreteMeasure,
) -> Result<IorResult, RobustnessError> {
    if probe_ps.is_empty() {
        return Err(RobustnessError::InvalidGrid("empty probe grid".into()));
    }
    if probe_ps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RobustnessError::InvalidGrid(
            "probe grid must be strictly increasing".into(),
        ));
    }
    if probe_ps.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(RobustnessError::InvalidGrid(
            "probe exponents must be finite and >= 0".into(),
        ));
    }
    let exponents: Vec<f64> = probe_ps.iter().copied().filter(|&r| r > 0.0).collect();
    let families: Vec<Vec<DiscreteMeasure>> = exponents
        .iter()
        .map(|&r| {
            (0..=IOR_FAMILY_DEPTH_LOG2)
                .map(|j| contaminated_member(base, r, 1u64 << j))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut p_star = None;
    let mut flagged_gauges = Vec::new();
    for &q in probe_ps {
        let psi = GaugeFunction::psi(q)?;
        let mut flagged = false;
        for family in &families {
            if continuity_probe(functional, family, base, &psi)?.flagged {
                flagged = true;
                break;
            }
        }
        if flagged {
            flagged_gauges.push(q);
        } else if p_star.is_none() {
            p_star = Some(q);
            break;
        }
    }
    let ior = match p_star {
        Some(p) => {
            if p == 0.0 {
                f64::INFINITY
            } else {
                1.0 / p
            }
        }
        None => 0.0,
    };
    Ok(IorResult {
        p_star,
        ior,
        flagged_gauges,
    })
}

/// Information-bound check report.
#[derive(Debug, Clone, Serialize)]
pub struct CramerRaoReport {
    pub family: ParametricFamily,
    pub theta: f64,
    pub n: usize,
    pub replications: usize,
    /// The aspect estimated by the natural statistic: the mean of one
    /// observation (`theta` for Bernoulli/Poisson/Normal, `1/theta` for the
    /// rate-parametrized Exponential).
    pub aspect: f64,
    pub estimate_mean: f64,
    pub empirical_variance: f64,
    /// `tau'(theta)^2 / (n I_1(theta))`.
    pub cr_bound: f64,
    /// `empirical_variance / cr_bound`; one at Cramer-Rao equality.
    pub ratio: f64,
    /// Monte-Carlo standard error of the ratio.
    pub ratio_se: f64,
    pub fisher_info: f64,
}

/// Monte-Carlo check of the information inequality for the natural
/// statistic (the sample mean) of a parametric family. For all four
/// families that statistic attains the bound, so the ratio concentrates
/// at one.
pub fn cramer_rao_check(
    family: &ParametricFamily,
    theta: f64,
    n: usize,
    replications: usize,
    seed: SeedSpec,
) -> Result<CramerRaoReport, RobustnessError> {
    if replications < 2 {
        return Err(RobustnessError::TooFewReplications(replications));
    }
    let info = family.fisher_info(theta)?;
    let model = ModelSpec::IidParametric {
        family: *family,
        theta,
    };
    let cell = seed.effective();
    let estimates: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = crate::rng::SplitMix64::new(child_seed(cell, r as u64));
            let xs = crate::models::sample_with_rng(&model, n, &mut rng);
            crate::measures::kahan_sum(xs.iter().copied()) / n as f64
        })
        .collect();
    let rf = replications as f64;
    let mean = crate::measures::kahan_sum(estimates.iter().copied()) / rf;
    let var =
        crate::measures::kahan_sum(estimates.iter().map(|e| (e - mean) * (e - mean))) / (rf - 1.0);
    let m4 = crate::measures::kahan_sum(
        estimates
            .iter()
            .map(|e| (e - mean) * (e - mean) * (e - mean) * (e - mean)),
    ) / rf;
    let tau_prime = family.mean_aspect_derivative(theta);
    let cr_bound = tau_prime * tau_prime / (n as f64 * info);
    // Standard error of the sample variance from the empirical fourth
    // moment, then scaled by the bound.
    let var_of_var = ((m4 - var * var * (rf - 3.0) / (rf - 1.0)) / rf).max(0.0);
    Ok(CramerRaoReport {
        family: *family,
        theta,
        n,
        replications,
        aspect: family.mean_aspect(theta),
        estimate_mean: mean,
        empirical_variance: var,
        cr_bound,
        ratio: var / cr_bound,
        ratio_se: var_of_var.sqrt() / cr_bound,
        fisher_info: info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::FunctionalSpec;

    fn dirac(x: f64) -> DiscreteMeasure {
        DiscreteMeasure::dirac_scalar(x).unwrap()
    }

    fn mean_plugin() -> Estimator {
        Estimator::PlugIn {
            functional: FunctionalSpec::Mean,
        }
    }

    #[test]
    fn sampling_law_of_degenerate_model_is_dirac() {
        let model = ModelSpec::IidNonparametric {
            measure: dirac(2.5),
        };
        for (n, r) in [(1, 10), (7, 25)] {
            let law = sampling_law(&model, &mean_plugin(), n, r, SeedSpec::new(1, 0)).unwrap();
            assert_eq!(law.law.values(), &[2.5]);
            assert_eq!(law.law.mass(0), 1.0);
        }
    }

    #[test]
    fn sampling_law_is_deterministic_and_has_rational_masses() {
        let model = ModelSpec::IidParametric {
            family: ParametricFamily::Bernoulli,
            theta: 0.4,
        };
        let seed = SeedSpec::new(9, 2);
        let a = sampling_law(&model, &mean_plugin(), 5, 200, seed).unwrap();
        let b = sampling_law(&model, &mean_plugin(), 5, 200, seed).unwrap();
        assert_eq!(a.law, b.law);
        for &m in a.law.masses() {
            let k = m * 200.0;
            assert!((k - k.round()).abs() < 1e-9, "mass {m} not k/R");
        }
    }

    #[test]
    fn sampling_law_bernoulli_mle_n2_matches_binomial() {
        let model = ModelSpec::IidParametric {
            family: ParametricFamily::Bernoulli,
            theta: 0.5,
        };
        let est = Estimator::Mle {
            family: ParametricFamily::Bernoulli,
        };
        let law = sampling_law(&model, &est, 2, 100_000, SeedSpec::new(33, 0)).unwrap();
        // Exact law of the mean of two fair coins: {0: 1/4, 1/2: 1/2, 1: 1/4}.
        assert_eq!(law.law.values(), &[0.0, 0.5, 1.0]);
        for (mass, want) in law.law.masses().iter().zip([0.25, 0.5, 0.25]) {
            assert!((mass - want).abs() < 0.01, "{mass} vs {want}");
        }
    }

    #[test]
    fn surface_delta_zero_row_equals_noise_floor() {
        let path = ContaminationPath::ParamShift {
            family: ParametricFamily::Bernoulli,
            theta1: 0.5,
            direction: 1.0,
        };
        let est = Estimator::Mle {
            family: ParametricFamily::Bernoulli,
        };
        let surface =
            robustness_surface(&path, &est, &[0.0], &[3, 6], 100, SeedSpec::new(5, 0)).unwrap();
        assert_eq!(surface.eps_hat[0], surface.noise_floor);
    }

    #[test]
    fn surface_bernoulli_shift_at_n1_matches_exact_prohorov() {
        // Exact n = 1 laws are Bernoulli(0.5) and Bernoulli(0.6); the subset
        // oracle gives prohorov = 0.1.
        let path = ContaminationPath::ParamShift {
            family: ParametricFamily::Bernoulli,
            theta1: 0.5,
            direction: 1.0,
        };
        let est = Estimator::Mle {
            family: ParametricFamily::Bernoulli,
        };
        let surface = robustness_surface(
            &path,
            &est,
            &[0.0, 0.1],
            &[1],
            100_000,
            SeedSpec::new(12, 0),
        )
        .unwrap();
        let exact = {
            let a = DiscreteMeasure::new(vec![
                (crate::measures::Point::scalar(0.0).unwrap(), 0.5),
                (crate::measures::Point::scalar(1.0).unwrap(), 0.5),
            ])
            .unwrap();
            let b = DiscreteMeasure::new(vec![
                (crate::measures::Point::scalar(0.0).unwrap(), 0.4),
                (crate::measures::Point::scalar(1.0).unwrap(), 0.6),
            ])
            .unwrap();
            crate::metrics::prohorov_bruteforce(&a, &b).unwrap()
        };
        assert!((exact - 0.1).abs() < 1e-12);
        let noise = surface.noise_floor[0].max(0.002);
        assert!(
            (surface.eps_hat[1][0] - exact).abs() <= 3.0 * noise,
            "eps_hat {} vs exact {exact} (noise {noise})",
            surface.eps_hat[1][0]
        );
    }

    #[test]
    fn mixture_dirac_path_hits_base_at_zero() {
        let base = crate::measures::uniform_grid_measure(0.0, 1.0, 8).unwrap();
        let path = ContaminationPath::MixtureDirac {
            base: base.clone(),
            atom: ContaminantAtom::InverseDelta { k: 10.0 },
        };
        match path.model_at(0.0).unwrap() {
            ModelSpec::IidNonparametric { measure } => assert_eq!(measure, base),
            other => panic!("unexpected model {other:?}"),
        }
        match path.model_at(0.1).unwrap() {
            ModelSpec::IidNonparametric { measure } => {
                assert_eq!(measure.atom_count(), 9);
                assert_eq!(*measure.values().last().unwrap(), 100.0);
            }
            other => panic!("unexpected model {other:?}"),
        }
    }

    #[test]
    fn escaping_atom_keeps_mean_surface_high() {
        // Mean plug-in under contamination (1-delta) dirac_0 + delta
        // dirac_{10/delta}: the contaminated sample mean concentrates near
        // 10 independently of delta, so the law distance stays large while
        // the model distance is at most delta.
        let path = ContaminationPath::MixtureDirac {
            base: dirac(0.0),
            atom: ContaminantAtom::InverseDelta { k: 10.0 },
        };
        let surface = robustness_surface(
            &path,
            &mean_plugin(),
            &[0.0, 0.05, 0.1, 0.2],
            &[100],
            400,
            SeedSpec::new(21, 0),
        )
        .unwrap();
        for i in 1..4 {
            assert!(
                surface.eps_hat[i][0] > 0.3,
                "delta {} gave {}",
                surface.delta_grid[i],
                surface.eps_hat[i][0]
            );
        }
        // Model-space displacement stays <= delta.
        for &delta in &[0.05, 0.1, 0.2] {
            let contaminated = match path.model_at(delta).unwrap() {
                ModelSpec::IidNonparametric { measure } => measure,
                _ => unreachable!(),
            };
            let d = prohorov(&contaminated, &dirac(0.0));
            assert!(d <= delta + 1e-6, "model distance {d} above {delta}");
        }
    }

    fn synthetic_surface(value: f64) -> RobustnessSurface {
        RobustnessSurface {
            delta_grid: vec![0.0, 0.1, 0.2],
            n_grid: vec![10, 100, 1000],
            eps_hat: vec![vec![0.01; 3], vec![value; 3], vec![value; 3]],
            noise_floor: vec![0.01; 3],
            replications: 100,
            master_seed: 0,
        }
    }

    #[test]
    fn classify_flat_zero_surface_is_robust() {
        let surface = synthetic_surface(0.011);
        let verdict = classify(&surface, Some(0.25), 1000).unwrap();
        assert!(verdict.finite_sample_ok);
        assert!(verdict.asymptotic_ok);
    }

    #[test]
    fn classify_flat_one_surface_is_not_robust() {
        let surface = synthetic_surface(1.0);
        let verdict = classify(&surface, Some(0.25), 1000).unwrap();
        assert!(!verdict.finite_sample_ok);
        assert!(!verdict.asymptotic_ok);
    }

    #[test]
    fn classify_asymptotic_only_case() {
        let mut surface = synthetic_surface(0.02);
        // Small n blows up, large n settles: asymptotically fine only.
        surface.eps_hat[1] = vec![0.9, 0.02, 0.02];
        surface.eps_hat[2] = vec![0.95, 0.5, 0.5];
        let verdict = classify(&surface, Some(0.25), 1000).unwrap();
        assert!(!verdict.finite_sample_ok);
        assert!(verdict.asymptotic_ok);
    }

    #[test]
    fn classify_rejects_target_below_noise_floor() {
        let surface = synthetic_surface(0.5);
        assert!(matches!(
            classify(&surface, Some(0.005), 100),
            Err(RobustnessError::TargetBelowNoiseFloor { .. })
        ));
    }

    #[test]
    fn adversarial_family_examples() {
        let fam = adversarial_family(2.0, 4).unwrap();
        assert_eq!(fam.values(), &[0.0, 2.0]);
        assert_eq!(fam.masses(), &[0.75, 0.25]);
        // Mass argument: prohorov(adversarial, dirac_0) <= 1/m.
        for m in [2u64, 8, 64] {
            let fam = adversarial_family(1.5, m).unwrap();
            let d = crate::metrics::prohorov_bruteforce(&fam, &dirac(0.0)).unwrap();
            assert!(d <= 1.0 / m as f64 + 1e-12, "m={m}: {d}");
        }
        // The moment cancellation.
        for p in [1.0, 2.0, 3.0] {
            let fam = adversarial_family(p, 512).unwrap();
            assert!((crate::functionals::abs_moment(&fam, p) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_integrability_small_family_stabilizes() {
        let psi1 = GaugeFunction::psi(1.0).unwrap();
        // A single compactly supported measure always certifies.
        let m = crate::measures::uniform_grid_measure(-3.0, 3.0, 16).unwrap();
        assert!(uniform_integrability_check(&[m], &psi1, 0.25).is_some());

        // Escaping family under a weaker gauge: the certificate level
        // stabilizes as the family deepens (tails (1/m) m^{q/p} shrink).
        let build = |depth: u32, p: f64| -> Vec<DiscreteMeasure> {
            (0..=depth)
                .map(|j| adversarial_family(p, 1 << j).unwrap())
                .collect()
        };
        let psi_q = GaugeFunction::psi(1.0).unwrap(); // q = 1 < p = 2
        let a_shallow = uniform_integrability_check(&build(10, 2.0), &psi_q, 0.25).unwrap();
        let a_deep = uniform_integrability_check(&build(30, 2.0), &psi_q, 0.25).unwrap();
        assert_eq!(a_shallow, a_deep);

        // At q = p the tail value exceeds one for every member, so the
        // certificate level must chase the largest atom.
        let psi_p = GaugeFunction::psi(2.0).unwrap();
        for m in [4u64, 64, 1024] {
            let fam = adversarial_family(2.0, m).unwrap();
            let atom_gauge = psi_p.eval_scalar((m as f64).sqrt());
            assert!(fam.gauge_tail(&psi_p, atom_gauge) > 1.0);
        }
        let b_shallow = uniform_integrability_check(&build(10, 2.0), &psi_p, 0.5).unwrap();
        let b_deep = uniform_integrability_check(&build(30, 2.0), &psi_p, 0.5).unwrap();
        assert!(b_deep > b_shallow * 1000.0, "{b_shallow} vs {b_deep}");

        // A heavy far atom defeats every grid level.
        let heavy = DiscreteMeasure::mix(&dirac(0.0), &dirac(1e30), 0.5).unwrap();
        assert!(uniform_integrability_check(&[heavy], &psi1, 0.5).is_none());
    }

    #[test]
    fn continuity_probe_constant_sequence_no_flag() {
        let psi = GaugeFunction::psi(1.0).unwrap();
        let limit = dirac(0.0);
        let family = vec![limit.clone(); 8];
        let report = continuity_probe(&Functional::Mean, &family, &limit, &psi).unwrap();
        assert!(!report.flagged);
        assert!(report.gaps.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn continuity_probe_flags_moment_discontinuity() {
        let p = 2.0;
        let family: Vec<DiscreteMeasure> = (0..=IOR_FAMILY_DEPTH_LOG2)
            .map(|j| adversarial_family(p, 1 << j).unwrap())
            .collect();
        let limit = dirac(0.0);
        let functional = Functional::AbsMoment { p };
        // Under psi_1 (q < p) the distances shrink while the gap stays 1.
        let weak = continuity_probe(
            &functional,
            &family,
            &limit,
            &GaugeFunction::psi(1.0).unwrap(),
        )
        .unwrap();
        assert!(weak.flagged);
        // Under psi_p the gauge term stays near 1: no flag.
        let tight = continuity_probe(
            &functional,
            &family,
            &limit,
            &GaugeFunction::psi(p).unwrap(),
        )
        .unwrap();
        assert!(!tight.flagged);
    }

    #[test]
    fn ior_of_second_moment_is_half() {
        let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
        let result = ior_estimate(&Functional::AbsMoment { p: 2.0 }, &grid, &dirac(0.0)).unwrap();
        assert_eq!(result.p_star, Some(2.0));
        assert_eq!(result.ior, 0.5);
    }

    #[test]
    fn ior_of_mean_is_one() {
        let result = ior_estimate(&Functional::Mean, &default_probe_grid(), &dirac(0.0)).unwrap();
        assert_eq!(result.p_star, Some(1.0));
        assert_eq!(result.ior, 1.0);
    }

    #[test]
    fn ior_of_median_is_infinite() {
        // Quantiles at a base with a fine symmetric grid: no probe moves the
        // median enough relative to the probe distance, every gauge passes.
        let base = crate::measures::uniform_grid_measure(-0.5, 0.5, 101).unwrap();
        let result =
            ior_estimate(&Functional::VaR { s: 0.5 }, &default_probe_grid(), &base).unwrap();
        assert_eq!(result.p_star, Some(0.0));
        assert!(result.ior.is_infinite());
    }

    #[test]
    fn ior_is_monotone_in_moment_order() {
        let grid = default_probe_grid();
        let mut last = -1.0;
        for p in [1.0, 2.0, 3.0] {
            let r = ior_estimate(&Functional::AbsMoment { p }, &grid, &dirac(0.0)).unwrap();
            let p_star = r.p_star.unwrap();
            assert!(p_star >= last, "p={p}: p_star {p_star} after {last}");
            assert_eq!(p_star, p);
            last = p_star;
        }
    }

    #[test]
    fn cramer_rao_normal_bound_value() {
        let report = cramer_rao_check(
            &ParametricFamily::Normal { sigma2: 1.0 },
            0.0,
            20,
            20_000,
            SeedSpec::new(77, 0),
        )
        .unwrap();
        assert!((report.cr_bound - 0.05).abs() < 1e-15);
        assert!(
            (report.ratio - 1.0).abs() < 4.0 * report.ratio_se,
            "{report:?}"
        );
    }

    #[test]
    fn cramer_rao_poisson_bound_value() {
        let report = cramer_rao_check(
            &ParametricFamily::Poisson,
            3.0,
            100,
            20_000,
            SeedSpec::new(78, 0),
        )
        .unwrap();
        assert!((report.cr_bound - 0.03).abs() < 1e-15);
        assert!(
            (report.ratio - 1.0).abs() < 4.0 * report.ratio_se,
            "{report:?}"
        );
    }
}
