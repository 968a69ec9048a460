//! The experiment catalog: configuration, execution and CSV output.

mod catalog;
mod config;
mod output;
pub mod validate;

pub use catalog::{default_config, describe};
pub use config::{
    AnalyticConfig, ArrayConfig, CsiErrorConfig, ExperimentConfig, ExperimentId, SnrReference, Sweep, UsersConfig,
    Variable,
};
pub use output::{format_number, read_csv, write_csv, CSV_HEADER};

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::analytic::{mean_throughput, AnalyticOptions, CsiMode};
use crate::config::{db_to_linear, linear_to_db};
use crate::coupling::CouplingModel;
use crate::error::{Error, Result};
use crate::geometry::{build_array_geometry, place_users, Pathloss};
use crate::montecarlo::{
    estimate_throughput_mc, trial_rng, CsiError, McScenario, Precoding, UserMode, LAYOUT_STREAM, SCENARIO_STREAM,
    USERS_STREAM,
};
use crate::precoding::{MfScaling, PrecoderMode};
use validate::ValidationReport;

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Experiment name and configuration hash, `name@hash`.
    pub experiment: String,
    pub seed: u64,
    pub mode: PrecoderMode,
    pub m: usize,
    pub k: usize,
    pub snr_db: f64,
    pub x_name: String,
    pub x_value: f64,
    pub analytic_nats: Option<f64>,
    pub mc_mean_nats: Option<f64>,
    pub mc_ci95: Option<f64>,
    pub solver_t_star: Option<f64>,
}

impl Default for Row {
    fn default() -> Self {
        Row {
            experiment: String::new(),
            seed: 0,
            mode: PrecoderMode::Full,
            m: 0,
            k: 0,
            snr_db: 0.0,
            x_name: String::new(),
            x_value: 0.0,
            analytic_nats: None,
            mc_mean_nats: None,
            mc_ci95: None,
            solver_t_star: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    /// Present for the validation suite.
    pub report: Option<ValidationReport>,
}

pub fn mode_name(mode: PrecoderMode) -> &'static str {
    match mode {
        PrecoderMode::Full => "full",
        PrecoderMode::Partial => "partial",
        PrecoderMode::None => "none",
        PrecoderMode::Optimal => "optimal",
    }
}

fn csi_of(mode: PrecoderMode) -> Option<CsiMode> {
    match mode {
        PrecoderMode::Full => Some(CsiMode::Full),
        PrecoderMode::Partial => Some(CsiMode::Partial),
        PrecoderMode::None => Some(CsiMode::None),
        PrecoderMode::Optimal => None,
    }
}

/// One evaluation group: fixed `M`, `K` and CSI error, several SNRs.
struct Group {
    order: usize,
    m: usize,
    k: usize,
    error_db: Option<f64>,
    /// `(snr_db, x)` per point; `None` SNR means the `[system]` noise.
    points: Vec<(Option<f64>, f64)>,
}

fn as_count(v: f64) -> usize {
    v as usize
}

fn groups(cfg: &ExperimentConfig) -> Vec<Group> {
    let series: Vec<Option<(config::Variable, f64)>> = match &cfg.series {
        Some(s) => s.values.iter().map(|&v| Some((s.variable, v))).collect(),
        None => vec![None],
    };
    let sweep = cfg.sweep().expect("validated configuration");
    let mut out = Vec::new();
    for (order, s) in series.into_iter().enumerate() {
        let mut m = cfg.system.m;
        let mut k = cfg.system.k;
        let mut error_db = cfg.csi_error.error_db;
        let mut snr = cfg.snr_db;
        let mut apply = |var: Variable, v: f64, snr: &mut Option<f64>| match var {
            Variable::M => m = as_count(v),
            Variable::K => k = as_count(v),
            Variable::CsiErrorDb => error_db = Some(v),
            Variable::SnrDb => *snr = Some(v),
        };
        if let Some((var, v)) = s {
            apply(var, v, &mut snr);
        }
        if sweep.variable == Variable::SnrDb {
            out.push(Group {
                order,
                m,
                k,
                error_db,
                points: sweep.values.iter().map(|&v| (Some(v), v)).collect(),
            });
        } else {
            for &v in &sweep.values {
                let (mut m2, mut k2, mut e2, mut snr2) = (m, k, error_db, snr);
                match sweep.variable {
                    Variable::M => m2 = as_count(v),
                    Variable::K => k2 = as_count(v),
                    Variable::CsiErrorDb => e2 = Some(v),
                    Variable::SnrDb => snr2 = Some(v),
                }
                out.push(Group {
                    order,
                    m: m2,
                    k: k2,
                    error_db: e2,
                    points: vec![(snr2, v)],
                });
            }
        }
    }
    out
}

/// The array model for `m` elements; excitation phases come from a stream
/// reserved for the scenario.
pub fn build_model(cfg: &ExperimentConfig, m: usize) -> Result<CouplingModel> {
    let geometry = build_array_geometry(m, cfg.array.layout(cfg.system.wavelength))?;
    CouplingModel::from_geometry(
        &geometry,
        cfg.system.wavelength,
        cfg.kernel,
        &mut trial_rng(cfg.system.seed, SCENARIO_STREAM),
    )
}

fn pathloss(cfg: &ExperimentConfig, reference_distance: f64) -> Pathloss {
    Pathloss {
        exponent: cfg.system.pathloss_exponent,
        reference_distance,
    }
}

/// User gains for `k` users, or `None` when they are resampled per trial.
pub fn fixed_users(cfg: &ExperimentConfig, k: usize) -> Result<Option<Vec<f64>>> {
    let s = &cfg.system;
    match cfg.users {
        UsersConfig::Equal { gain } => Ok(Some(vec![gain; k])),
        UsersConfig::Placed { reference_distance } => {
            let mut rng = trial_rng(s.seed, USERS_STREAM);
            let layout = place_users(k, s.cell_radius, s.min_distance, pathloss(cfg, reference_distance), &mut rng)?;
            Ok(Some(layout.variances))
        }
        UsersConfig::Resampled { .. } => Ok(None),
    }
}

/// `N0` realizing the requested SNR, and the SNR reported for it.
fn noise_for(cfg: &ExperimentConfig, snr_db: Option<f64>, model: &CouplingModel, users: Option<&[f64]>) -> Result<(f64, f64)> {
    let p = cfg.system.p_watts;
    // Received SNR per unit of P/N0.
    let gain = match cfg.snr_reference {
        config::SnrReference::Transmit => 1.0,
        config::SnrReference::Received => {
            let users = users.ok_or_else(|| Error::Config("received SNR needs fixed users".into()))?;
            let mean = users.iter().sum::<f64>() / users.len() as f64;
            mean * model.spectrum.spectral_sum(1) / model.m() as f64
        }
    };
    Ok(match snr_db {
        Some(snr) => (p * gain / db_to_linear(snr), snr),
        None => (cfg.system.n0_watts, linear_to_db(p * gain / cfg.system.n0_watts)),
    })
}

fn analytic_value(
    model: &CouplingModel,
    users: Option<&[f64]>,
    layouts: &[Vec<f64>],
    rho: f64,
    csi: CsiMode,
    opts: &AnalyticOptions,
    pool: &rayon::ThreadPool,
) -> Result<f64> {
    match users {
        Some(v) => mean_throughput(model, v, rho, csi, opts),
        None => {
            let values: Vec<Result<f64>> =
                pool.install(|| layouts.par_iter().map(|v| mean_throughput(model, v, rho, csi, opts)).collect());
            let mut total = 0.0;
            for v in values {
                total += v?;
            }
            Ok(total / layouts.len() as f64)
        }
    }
}

/// Runs a configuration and returns its rows (or its report, for the
/// validation suite).
pub fn run_experiment(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.experiment == ExperimentId::Validate {
        return Ok(ExperimentOutput {
            rows: Vec::new(),
            report: Some(validate::run_validation(cfg.system.seed, cfg.n_trials, pool)?),
        });
    }
    let tag = format!("{}@{}", cfg.experiment.name(), cfg.hash()?);
    let opts = cfg.analytic.options()?;
    let mut models: BTreeMap<usize, CouplingModel> = BTreeMap::new();
    let mut keyed: Vec<((usize, usize, usize, usize), Row)> = Vec::new();
    for (gi, g) in groups(cfg).into_iter().enumerate() {
        if !models.contains_key(&g.m) {
            models.insert(g.m, build_model(cfg, g.m)?);
        }
        let model = &models[&g.m];
        let users = fixed_users(cfg, g.k)?;
        let layouts: Vec<Vec<f64>> = match (cfg.users, &users) {
            (UsersConfig::Resampled { reference_distance }, None) => {
                let mut rng = trial_rng(cfg.system.seed, LAYOUT_STREAM);
                let s = &cfg.system;
                (0..cfg.analytic.layouts.max(1))
                    .map(|_| {
                        place_users(g.k, s.cell_radius, s.min_distance, pathloss(cfg, reference_distance), &mut rng)
                            .map(|l| l.variances)
                    })
                    .collect::<Result<_>>()?
            }
            _ => Vec::new(),
        };
        let user_mode = match (&users, cfg.users) {
            (Some(v), _) => UserMode::Fixed(v.clone()),
            (None, UsersConfig::Resampled { reference_distance }) => UserMode::Resampled {
                k: g.k,
                cell_radius: cfg.system.cell_radius,
                min_distance: cfg.system.min_distance,
                pathloss: pathloss(cfg, reference_distance),
            },
            _ => unreachable!("only resampled users lack fixed gains"),
        };
        let noise: Vec<(f64, f64)> = g
            .points
            .iter()
            .map(|(snr, _)| noise_for(cfg, *snr, model, users.as_deref()))
            .collect::<Result<_>>()?;
        let csi_error = g.error_db.map(|error_db| CsiError {
            error_db,
            scale: cfg.csi_error.scale,
        });
        for (mi, &mode) in cfg.modes.iter().enumerate() {
            let precoding = match csi_of(mode) {
                Some(csi) => Precoding::MatchedFilter {
                    csi,
                    scaling: cfg.mf_scaling,
                },
                None => Precoding::MaxMin { method: cfg.solver },
            };
            let sc = McScenario {
                model,
                users: user_mode.clone(),
                p_watts: cfg.system.p_watts,
                n0_watts: noise.iter().map(|n| n.0).collect(),
                precoding,
                csi_error,
            };
            let mc = estimate_throughput_mc(&sc, cfg.n_trials, cfg.system.seed, pool)?;
            for (pi, ((n0, snr_db), (_, x))) in noise.iter().zip(&g.points).enumerate() {
                let analytic = match csi_of(mode) {
                    Some(csi) if cfg.mf_scaling == MfScaling::PerElement && csi_error.is_none() => {
                        let rho = cfg.system.p_watts / (g.m as f64 * n0);
                        Some(analytic_value(model, users.as_deref(), &layouts, rho, csi, &opts, pool)?)
                    }
                    _ => None,
                };
                let r = &mc[pi];
                keyed.push((
                    (g.order, mi, gi, pi),
                    Row {
                        experiment: tag.clone(),
                        seed: cfg.system.seed,
                        mode,
                        m: g.m,
                        k: g.k,
                        snr_db: *snr_db,
                        x_name: cfg.sweep()?.variable.name().to_string(),
                        x_value: *x,
                        analytic_nats: analytic,
                        mc_mean_nats: Some(r.mean.mean),
                        mc_ci95: Some(r.mean.half_width_95),
                        solver_t_star: r.t_star.map(|t| t.mean),
                    },
                ));
            }
        }
    }
    keyed.sort_by_key(|(key, _)| *key);
    Ok(ExperimentOutput {
        rows: keyed.into_iter().map(|(_, r)| r).collect(),
        report: None,
    })
}

/// Path of the CSV (or report) a configuration writes.
pub fn output_path(cfg: &ExperimentConfig) -> PathBuf {
    let ext = if cfg.experiment == ExperimentId::Validate { "txt" } else { "csv" };
    cfg.output_dir.join(format!("{}.{ext}", cfg.experiment.name()))
}

/// Runs a configuration and writes its output file.
pub fn run_and_write(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<(ExperimentOutput, PathBuf)> {
    let out = run_experiment(cfg, pool)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    let path = output_path(cfg);
    match &out.report {
        Some(report) => std::fs::write(&path, report.to_string()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => write_csv(&out.rows, &path)?,
    }
    Ok((out, path))
}
