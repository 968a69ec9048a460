//! Oracle checks run by the `validate` experiment.

use std::fmt;

use crate::analytic::{
    beta_parameter, jensen_expectation_oracle, lemma1_sigma, mean_throughput, moment_match_gamma, no_csi_sigma,
    oracle::exponential_expectation, partial_csi_sigma, AnalyticOptions, BetaMode, CsiMode, MomentOptions,
};
use crate::channel::{complex_gaussian, ChannelRealization};
use crate::config::db_to_linear;
use crate::coupling::{CouplingKernel, CouplingModel};
use crate::error::Result;
use crate::geometry::{build_array_geometry, ArrayLayout};
use crate::maxmin::{maxmin_beamforming, SolverMethod, SolverOptions};
use crate::montecarlo::{
    estimate_throughput_mc, ks_two_sample, run_trials, trial_rng, McScenario, Precoding, UserMode, SCENARIO_STREAM,
};
use crate::precoding::{mf_precoder_full, sinr_equivalent_sample, sinr_per_user};
use crate::special::SeriesControl;

/// Carrier wavelength used by the checks, m.
const WAVELENGTH: f64 = 0.1874;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst error, or the statistic, that the check compares.
    pub achieved: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{status} {:<24} achieved {:.3e} tolerance {:.3e}  {}",
                c.name, c.achieved, c.tolerance, c.detail
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        writeln!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn model(m: usize, layout: ArrayLayout, seed: u64) -> Result<CouplingModel> {
    let g = build_array_geometry(m, layout)?;
    CouplingModel::from_geometry(&g, WAVELENGTH, CouplingKernel::Sinc, &mut trial_rng(seed, SCENARIO_STREAM))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn lemma2_check(seed: u64) -> Result<Check> {
    let tol = 1e-8;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for m in [4, 16, 64] {
        let model = model(m, ArrayLayout::Grid { spacing: WAVELENGTH / 2.0 }, seed)?;
        let beta = beta_parameter(&model.q, 1.0, BetaMode::default())?.beta;
        for k in [2usize, 8] {
            let g2 = (k - 1) as f64;
            for snr_db in [-10.0, 0.0, 10.0, 20.0, 30.0] {
                let rho = db_to_linear(snr_db) / m as f64;
                let partial = partial_csi_sigma(beta, 1.0, g2, rho)?;
                let partial_q = exponential_expectation(beta, |x| rho * x / (1.0 + rho * g2 * x))?;
                let none = no_csi_sigma(beta, rho, k - 1)?;
                let none_q = exponential_expectation(beta, |x| rho * x / (1.0 + g2 * rho * x))?;
                worst = worst.max(rel(partial, partial_q)).max(rel(none, none_q));
                points += 1;
            }
        }
    }
    Ok(Check {
        name: "lemma2-quadrature",
        passed: worst <= tol,
        achieved: worst,
        tolerance: tol,
        detail: format!("{points} points, partial and no-CSI"),
    })
}

fn lemma1_check(seed: u64) -> Result<Check> {
    let tol = 1e-4;
    let model = model(16, ArrayLayout::Line { spacing: WAVELENGTH / 4.0 }, seed)?;
    let p = moment_match_gamma(&model.spectrum.eigenvalues, 1.0, &[1.0; 7], MomentOptions::default())?;
    let mut worst: f64 = 0.0;
    for snr_db in [0.0, 10.0, 20.0] {
        let rho = db_to_linear(snr_db) / 16.0;
        let series = lemma1_sigma(&p, rho, SeriesControl::default())?.sigma;
        worst = worst.max(rel(series, jensen_expectation_oracle(&p, rho)?));
    }
    Ok(Check {
        name: "lemma1-quadrature",
        passed: worst <= tol,
        achieved: worst,
        tolerance: tol,
        detail: "M=16 K=8, 0/10/20 dB".into(),
    })
}

fn ks_check(m: usize, k: usize, n: usize, seed: u64, pool: &rayon::ThreadPool) -> Result<Check> {
    let alpha = 0.01;
    let model = model(m, ArrayLayout::Line { spacing: WAVELENGTH / 4.0 }, seed)?;
    let users = vec![1.0; k];
    let (p, n0) = (1.0, 0.1);
    let rho = p / (m as f64 * n0);
    let direct: Vec<f64> = run_trials(pool, n, seed, |_, rng| {
        let ch = ChannelRealization::draw(&users, &model, None, rng)?;
        let w = mf_precoder_full(ch.known(), p)?;
        Ok(sinr_per_user(&ch.h, &w.w, n0)?[0])
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let equivalent: Vec<f64> = run_trials(pool, n, seed.wrapping_add(1), |_, rng| {
        sinr_equivalent_sample(&model.spectrum.eigenvalues, 1.0, &users[1..], rho, rng)
    });
    let ks = ks_two_sample(&direct, &equivalent, alpha)?;
    Ok(Check {
        name: if m == 8 { "equivalence-ks-8x4" } else { "equivalence-ks-16x8" },
        passed: !ks.reject,
        achieved: ks.d,
        tolerance: ks.critical,
        detail: format!("M={m} K={k}, n={n} each, p={:.3}", ks.p_value),
    })
}

fn solver_check(seed: u64) -> Result<Check> {
    let tol = 1e-6;
    let mut worst: f64 = 0.0;
    let instances = 20;
    for t in 0..instances {
        let mut rng = trial_rng(seed, t);
        let h = nalgebra::DMatrix::from_fn(4, 8, |_, _| complex_gaussian(&mut rng, 1.0));
        let a = maxmin_beamforming(&h, 1.0, 0.1, SolverOptions::with_method(SolverMethod::Bisection))?;
        let b = maxmin_beamforming(&h, 1.0, 0.1, SolverOptions::with_method(SolverMethod::PowerBalancing))?;
        worst = worst.max(rel(a.t_star, b.t_star));
    }
    Ok(Check {
        name: "solver-methods-agree",
        passed: worst <= tol,
        achieved: worst,
        tolerance: tol,
        detail: format!("{instances} instances, M=8 K=4"),
    })
}

fn analytic_mc_check(seed: u64, pool: &rayon::ThreadPool) -> Result<Check> {
    let tol = 0.15;
    let m = 16;
    let model = model(m, ArrayLayout::Line { spacing: WAVELENGTH / 4.0 }, seed)?;
    let users = vec![1.0; 8];
    let n0: Vec<f64> = [0.0, 10.0, 20.0].iter().map(|&s| 1.0 / db_to_linear(s)).collect();
    let sc = McScenario {
        model: &model,
        users: UserMode::Fixed(users.clone()),
        p_watts: 1.0,
        n0_watts: n0.clone(),
        precoding: Precoding::mf(CsiMode::Full),
        csi_error: None,
    };
    let mc = estimate_throughput_mc(&sc, 2000, seed, pool)?;
    let mut worst: f64 = 0.0;
    let mut jensen = true;
    for (r, n0) in mc.iter().zip(&n0) {
        let a = mean_throughput(&model, &users, 1.0 / (m as f64 * n0), CsiMode::Full, &AnalyticOptions::default())?;
        worst = worst.max(rel(a, r.mean.mean));
        jensen &= a >= r.mean.mean - r.mean.half_width_95;
    }
    Ok(Check {
        name: "analytic-vs-mc",
        passed: worst <= tol && jensen,
        achieved: worst,
        tolerance: tol,
        detail: format!("full CSI, M=16 K=8, 0/10/20 dB, upper bound holds: {jensen}"),
    })
}

/// Runs every check; `ks_samples` is the size of each side of the
/// distribution tests.
pub fn run_validation(seed: u64, ks_samples: usize, pool: &rayon::ThreadPool) -> Result<ValidationReport> {
    Ok(ValidationReport {
        checks: vec![
            lemma2_check(seed)?,
            lemma1_check(seed)?,
            ks_check(8, 4, ks_samples, seed, pool)?,
            ks_check(16, 8, ks_samples, seed, pool)?,
            solver_check(seed)?,
            analytic_mc_check(seed, pool)?,
        ],
    })
}
