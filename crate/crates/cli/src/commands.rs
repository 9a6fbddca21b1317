//! The seven subcommands. Each loads a schema-validated JSON config, runs
//! the wrapped library calls, and writes CSV (grids) or JSON (scalars,
//! verdicts) with the config hash embedded.

use std::path::Path;

use serde_json::json;

use qrob_core::estimators::Estimator;
use qrob_core::functionals::{avar_with_method, AvarMethod, Functional};
use qrob_core::measures::GaugeFunction;
use qrob_core::metrics::{prohorov, psi_distance, wasserstein1};
use qrob_core::models::{LinearProcessModel, ModelSpec};
use qrob_core::robustness::{
    classify, cramer_rao_check, default_probe_grid, ior_estimate, robustness_surface, sampling_law,
    ContaminationPath, RobustnessSurface,
};
use qrob_core::SeedSpec;

use crate::config::{self, load};
use crate::output::{fmt_f64, write_output, Csv};
use crate::CliError;

fn compute_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

/// Grid shape is part of the config contract: reject before any sampling.
fn check_grids(delta_grid: &[f64], n_grid: &[usize]) -> Result<(), CliError> {
    if delta_grid.first() != Some(&0.0) {
        return Err(CliError::Config("delta_grid must start at 0".into()));
    }
    if delta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(
            "delta_grid must be strictly increasing".into(),
        ));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(
            "n_grid must be nonempty and strictly increasing".into(),
        ));
    }
    Ok(())
}

pub fn cmd_metric(config_path: &Path) -> Result<(), CliError> {
    let (cfg, hash, dir) = load::<config::MetricConfig>(config_path)?;
    let psi =
        GaugeFunction::psi(cfg.psi_p).map_err(|e| CliError::Config(format!("bad psi_p: {e}")))?;
    let m1 = cfg.measure1.resolve(&dir)?;
    let m2 = cfg.measure2.resolve(&dir)?;
    if m1.dim() != m2.dim() {
        return Err(CliError::Compute(format!(
            "dimension mismatch: {} vs {}",
            m1.dim(),
            m2.dim()
        )));
    }
    let d_p = prohorov(&m1, &m2);
    let w1 = if m1.dim() == 1 {
        Some(wasserstein1(&m1, &m2).map_err(compute_err)?)
    } else {
        None
    };
    let d_psi = psi_distance(&m1, &m2, &psi);
    let mut csv = Csv::new(&["prohorov", "wasserstein1", "psi_p", "psi_distance"]);
    csv.row(&[
        fmt_f64(d_p),
        w1.map(fmt_f64).unwrap_or_default(),
        fmt_f64(cfg.psi_p),
        fmt_f64(d_psi),
    ]);
    write_output(&cfg.output_csv, &hash, cfg.master_seed, &csv.finish())?;
    println!(
        "metric: prohorov={} psi_distance={} -> {}",
        fmt_f64(d_p),
        fmt_f64(d_psi),
        cfg.output_csv.display()
    );
    Ok(())
}

pub fn cmd_avar(config_path: &Path) -> Result<(), CliError> {
    let (cfg, hash, dir) = load::<config::AvarConfig>(config_path)?;
    let measure = cfg.measure.resolve(&dir)?;
    let qa =
        avar_with_method(&measure, cfg.alpha, AvarMethod::QuantileAverage).map_err(compute_err)?;
    let df =
        avar_with_method(&measure, cfg.alpha, AvarMethod::DistributionForm).map_err(compute_err)?;
    let body = serde_json::to_string_pretty(&json!({
        "alpha": cfg.alpha,
        "quantile_average": qa,
        "distribution_form": df,
        "representation_gap": (qa - df).abs(),
    }))
    .expect("serializable json");
    write_output(&cfg.output_json, &hash, cfg.master_seed, &body)?;
    println!(
        "avar: alpha={} value={} -> {}",
        cfg.alpha,
        fmt_f64(qa),
        cfg.output_json.display()
    );
    Ok(())
}

const SURFACE_COLUMNS: [&str; 6] = ["delta", "n", "eps_hat", "noise_floor", "R", "master_seed"];

fn surface_rows(csv: &mut Csv, s: &RobustnessSurface, label: Option<&str>) {
    for (i, &delta) in s.delta_grid.iter().enumerate() {
        for (j, &n) in s.n_grid.iter().enumerate() {
            let mut row = Vec::with_capacity(7);
            if let Some(label) = label {
                row.push(label.to_string());
            }
            row.extend([
                fmt_f64(delta),
                n.to_string(),
                fmt_f64(s.eps_hat[i][j]),
                fmt_f64(s.noise_floor[j]),
                s.replications.to_string(),
                s.master_seed.to_string(),
            ]);
            csv.row(&row);
        }
    }
}

fn surface_csv(s: &RobustnessSurface) -> String {
    let mut csv = Csv::new(&SURFACE_COLUMNS);
    surface_rows(&mut csv, s, None);
    csv.finish()
}

/// Several surfaces in one file, distinguished by a leading label column.
fn labeled_surface_csv(surfaces: &[(&str, &RobustnessSurface)]) -> String {
    let mut columns = vec!["path"];
    columns.extend(SURFACE_COLUMNS);
    let mut csv = Csv::new(&columns);
    for (label, s) in surfaces {
        surface_rows(&mut csv, s, Some(label));
    }
    csv.finish()
}

pub fn cmd_surface(config_path: &Path) -> Result<(), CliError> {
    let (cfg, hash, dir) = load::<config::SurfaceConfig>(config_path)?;
    check_grids(&cfg.delta_grid, &cfg.n_grid)?;
    let path = cfg.path.resolve(&dir)?;
    let seed = SeedSpec::new(cfg.master_seed, 0);
    let surface = robustness_surface(
        &path,
        &cfg.estimator,
        &cfg.delta_grid,
        &cfg.n_grid,
        cfg.replications,
        seed,
    )
    .map_err(compute_err)?;
    let n0 = cfg
        .n0
        .unwrap_or_else(|| *cfg.n_grid.last().expect("nonempty grid"));
    let verdict = classify(&surface, cfg.eps_target, n0).map_err(compute_err)?;
    write_output(
        &cfg.output_surface_csv,
        &hash,
        cfg.master_seed,
        &surface_csv(&surface),
    )?;
    let body = serde_json::to_string_pretty(&verdict).expect("serializable verdict");
    write_output(&cfg.output_verdict_json, &hash, cfg.master_seed, &body)?;
    println!(
        "surface: finite_sample_ok={} asymptotic_ok={} -> {}, {}",
        verdict.finite_sample_ok,
        verdict.asymptotic_ok,
        cfg.output_surface_csv.display(),
        cfg.output_verdict_json.display()
    );
    Ok(())
}

pub fn cmd_ior(config_path: &Path) -> Result<(), CliError> {
    let (cfg, hash, dir) = load::<config::IorConfig>(config_path)?;
    let functional: Functional = cfg.functional.to_functional();
    let grid = cfg.probe_grid.clone().unwrap_or_else(default_probe_grid);
    let base = match &cfg.base {
        Some(src) => src.resolve(&dir)?,
        None => qrob_core::DiscreteMeasure::dirac_scalar(0.0).expect("unit dirac"),
    };
    let result = ior_estimate(&functional, &grid, &base).map_err(compute_err)?;
    let ior_value = if result.ior.is_infinite() {
        json!("inf")
    } else {
        json!(result.ior)
    };
    let body = serde_json::to_string_pretty(&json!({
        "p_star": result.p_star,
        "ior": ior_value,
        "flagged_gauges": result.flagged_gauges,
        "probe_grid": grid,
    }))
    .expect("serializable json");
    write_output(&cfg.output_json, &hash, cfg.master_seed, &body)?;
    println!(
        "ior: p_star={:?} ior={} -> {}",
        result.p_star,
        result.ior,
        cfg.output_json.display()
    );
    Ok(())
}

pub fn cmd_parametric(config_path: &Path) -> Result<(), CliError> {
    let (cfg, hash, _dir) = load::<config::ParametricConfig>(config_path)?;
    if let (Some(section), Some(out)) = (&cfg.cramer_rao, &cfg.output_cramer_rao_csv) {
        let report = cramer_rao_check(
            &cfg.family,
            cfg.theta,
            section.n,
            section.replications,
            SeedSpec::new(cfg.master_seed, 0),
        )
        .map_err(compute_err)?;
        let mut csv = Csv::new(&[
            "family",
            "theta",
            "n",
            "replications",
            "fisher_info",
            "cr_bound",
            "estimate_mean",
            "empirical_variance",
            "ratio",
            "ratio_se",
        ]);
        csv.row(&[
            format!("{:?}", cfg.family),
            fmt_f64(cfg.theta),
            section.n.to_string(),
            section.replications.to_string(),
            fmt_f64(report.fisher_info),
            fmt_f64(report.cr_bound),
            fmt_f64(report.estimate_mean),
            fmt_f64(report.empirical_variance),
            fmt_f64(report.ratio),
            fmt_f64(report.ratio_se),
        ]);
        write_output(out, &hash, cfg.master_seed, &csv.finish())?;
        println!(
            "parametric: ratio={} (se {}) -> {}",
            fmt_f64(report.ratio),
            fmt_f64(report.ratio_se),
            out.display()
        );
    }
    if let Some(out) = &cfg.output_l1_csv {
        let mut csv = Csv::new(&["family", "theta", "delta", "l1_distance"]);
        for &delta in &cfg.l1_sweep_deltas {
            let d = cfg
                .family
                .l1_density_distance(cfg.theta, cfg.theta + delta)
                .map_err(compute_err)?;
            csv.row(&[
                format!("{:?}", cfg.family),
                fmt_f64(cfg.theta),
                fmt_f64(delta),
                fmt_f64(d),
            ]);
        }
        write_output(out, &hash, cfg.master_seed, &csv.finish())?;
        println!("parametric: l1 sweep -> {}", out.display());
    }
    Ok(())
}

pub fn cmd_premium_experiment(config_path: &Path) -> Result<(), CliError> {
    let (cfg, hash, dir) = load::<config::PremiumExperimentConfig>(config_path)?;
    check_grids(&cfg.delta_grid_unbounded, &cfg.n_grid)?;
    check_grids(&cfg.delta_grid_bounded, &cfg.n_grid)?;
    let base = cfg.base.resolve(&dir)?;
    let estimator = Estimator::PremiumEstimator {
        alpha: cfg.alpha,
        atom_cap: cfg.atom_cap,
        mc_fallback_size: cfg.mc_fallback_size,
    };
    let unbounded_path = ContaminationPath::MixtureDirac {
        base: base.clone(),
        atom: qrob_core::robustness::ContaminantAtom::InverseDelta { k: cfg.unbounded_k },
    };
    let bounded_path = ContaminationPath::MixtureDirac {
        base,
        atom: qrob_core::robustness::ContaminantAtom::Fixed { c: cfg.bounded_c },
    };
    let unbounded = robustness_surface(
        &unbounded_path,
        &estimator,
        &cfg.delta_grid_unbounded,
        &cfg.n_grid,
        cfg.replications,
        SeedSpec::new(cfg.master_seed, 1),
    )
    .map_err(compute_err)?;
    let bounded = robustness_surface(
        &bounded_path,
        &estimator,
        &cfg.delta_grid_bounded,
        &cfg.n_grid,
        cfg.replications,
        SeedSpec::new(cfg.master_seed, 2),
    )
    .map_err(compute_err)?;
    write_output(
        &cfg.output_csv,
        &hash,
        cfg.master_seed,
        &labeled_surface_csv(&[("unbounded", &unbounded), ("bounded", &bounded)]),
    )?;
    // Signature summary: the escaping-atom path in noise-floor multiples at
    // every positive delta, the bounded path at its smallest positive delta.
    let ratio = |s: &RobustnessSurface, i: usize, j: usize| {
        s.eps_hat[i][j] / s.noise_floor[j].max(f64::MIN_POSITIVE)
    };
    let unbounded_min_ratio = (1..unbounded.delta_grid.len())
        .flat_map(|i| (0..unbounded.n_grid.len()).map(move |j| (i, j)))
        .map(|(i, j)| ratio(&unbounded, i, j))
        .fold(f64::INFINITY, f64::min);
    let bounded_smallest_delta_max_ratio = (0..bounded.n_grid.len())
        .map(|j| ratio(&bounded, 1, j))
        .fold(0.0f64, f64::max);
    let body = serde_json::to_string_pretty(&json!({
        "alpha": cfg.alpha,
        "unbounded_k": cfg.unbounded_k,
        "bounded_c": cfg.bounded_c,
        "n_grid": cfg.n_grid,
        "replications": cfg.replications,
        "unbounded_min_ratio": unbounded_min_ratio,
        "bounded_smallest_delta": bounded.delta_grid.get(1),
        "bounded_smallest_delta_max_ratio": bounded_smallest_delta_max_ratio,
        "unbounded_noise_floor": unbounded.noise_floor,
        "bounded_noise_floor": bounded.noise_floor,
    }))
    .expect("serializable json");
    write_output(&cfg.output_summary_json, &hash, cfg.master_seed, &body)?;
    println!(
        "premium-experiment: unbounded_min_ratio={} bounded_max_ratio={} -> {}, {}",
        fmt_f64(unbounded_min_ratio),
        fmt_f64(bounded_smallest_delta_max_ratio),
        cfg.output_csv.display(),
        cfg.output_summary_json.display()
    );
    Ok(())
}

pub fn cmd_yw_experiment(config_path: &Path) -> Result<(), CliError> {
    let (cfg, hash, _dir) = load::<config::YwExperimentConfig>(config_path)?;
    check_grids(&cfg.delta_grid, &cfg.n_grid)?;
    let model = LinearProcessModel::new(cfg.a, cfg.innovation.clone())
        .map_err(|e| CliError::Config(format!("bad linear process: {e}")))?;
    let path = ContaminationPath::ArShift {
        base: model.clone(),
        a_direction: 1.0,
        innovation_magnitude: None,
    };
    let estimator = Estimator::YuleWalker;
    let surface = robustness_surface(
        &path,
        &estimator,
        &cfg.delta_grid,
        &cfg.n_grid,
        cfg.replications,
        SeedSpec::new(cfg.master_seed, 0),
    )
    .map_err(compute_err)?;
    // Standalone consistency check at the base model.
    let base_law = sampling_law(
        &ModelSpec::LinearProcess { model },
        &estimator,
        cfg.mean_check_n,
        cfg.replications,
        SeedSpec::new(cfg.master_seed, 3),
    )
    .map_err(compute_err)?;
    let mean_estimate = qrob_core::functionals::mean(&base_law.law);
    // Monotonicity in delta within one noise floor, per n.
    let monotone_within_noise = (0..cfg.n_grid.len()).all(|j| {
        (1..surface.delta_grid.len() - 1)
            .all(|i| surface.eps_hat[i + 1][j] >= surface.eps_hat[i][j] - surface.noise_floor[j])
    });
    let endpoints_ordered = (0..cfg.n_grid.len())
        .all(|j| surface.eps_hat[1][j] <= surface.eps_hat[surface.delta_grid.len() - 1][j]);
    write_output(
        &cfg.output_csv,
        &hash,
        cfg.master_seed,
        &surface_csv(&surface),
    )?;
    let body = serde_json::to_string_pretty(&json!({
        "a": cfg.a,
        "mean_check_n": cfg.mean_check_n,
        "replications": cfg.replications,
        "mean_estimate": mean_estimate,
        "mean_abs_error": (mean_estimate - cfg.a).abs(),
        "monotone_within_noise": monotone_within_noise,
        "endpoints_ordered": endpoints_ordered,
        "noise_floor": surface.noise_floor,
    }))
    .expect("serializable json");
    write_output(&cfg.output_json, &hash, cfg.master_seed, &body)?;
    println!(
        "yw-experiment: mean_estimate={} monotone_within_noise={monotone_within_noise} -> {}, {}",
        fmt_f64(mean_estimate),
        cfg.output_csv.display(),
        cfg.output_json.display()
    );
    Ok(())
}
