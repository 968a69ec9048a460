//! Seeded, parallel Monte Carlo estimation and the statistics used to check
//! it.
//!
//! Trial `t` draws from ChaCha8 stream `t` of the master seed, and results
//! are reduced in trial order, so estimates do not depend on the number of
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::CsiMode;
use crate::channel::{ChannelRealization, CsiErrorScale};
use crate::coupling::CouplingModel;
use crate::error::{Error, Result};
use crate::geometry::{place_users, Pathloss};
use crate::maxmin::{maxmin_beamforming, SolverMethod, SolverOptions};
use crate::precoding::{
    mf_precoder_full, mf_precoder_no_csi, mf_precoder_partial, sinr_per_user, MfScaling, Precoder,
};

pub use rayon::ThreadPool;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "HMIMO_THREADS";

/// Stream reserved for scenario-level draws such as excitation phases.
pub const SCENARIO_STREAM: u64 = u64::MAX;

/// Stream for a user placement kept fixed over all trials.
pub const USERS_STREAM: u64 = u64::MAX - 1;

/// Stream for the placements averaged by the analytic model.
pub const LAYOUT_STREAM: u64 = u64::MAX - 2;

pub const MIN_TRIALS: usize = 100;

/// RNG for trial `trial` under `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sample mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub n_trials: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::param("samples", "need at least two samples"));
        }
        let (mean, var) = empirical_moments(samples);
        Ok(McEstimate {
            mean,
            half_width_95: 1.96 * (var / samples.len() as f64).sqrt(),
            n_trials: samples.len(),
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width_95
    }
}

/// Unbiased mean and variance.
pub fn empirical_moments(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().copied().collect::<CompensatedSum>().value() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss = samples.iter().map(|x| (x - mean).powi(2)).collect::<CompensatedSum>().value();
    (mean, ss / (n - 1.0))
}

/// Sample covariance of paired samples.
pub fn empirical_covariance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Dimension(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    let (ma, _) = empirical_moments(a);
    let (mb, _) = empirical_moments(b);
    let s = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect::<CompensatedSum>();
    Ok(s.value() / (a.len() as f64 - 1.0))
}

/// Pearson correlation of paired samples.
pub fn empirical_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    let cov = empirical_covariance(a, b)?;
    let (_, va) = empirical_moments(a);
    let (_, vb) = empirical_moments(b);
    if !(va > 0.0) || !(vb > 0.0) {
        return Err(Error::Degenerate("constant sample has no correlation".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Largest distance between the two empirical CDFs.
    pub d: f64,
    /// Critical value at the requested level.
    pub critical: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
    pub reject: bool,
}

/// Kolmogorov survival function `P(K > x)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * x * x).exp();
        s += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test at level `alpha`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("samples", "both samples must be nonempty"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::param("samples", "NaN in sample"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let critical = (-(alpha / 2.0).ln() / 2.0).sqrt() / en;
    Ok(KsResult {
        d,
        critical,
        p_value: kolmogorov_sf(d * en),
        reject: d > critical,
    })
}

/// Worker pool sized from [`THREADS_ENV`], or rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::param("threads", format!("{THREADS_ENV}={s:?} is not a count")))?,
        Err(_) => 0,
    };
    pool_with_threads(threads)
}

/// Worker pool with `threads` workers; `0` means rayon's default.
pub fn pool_with_threads(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))
}

/// Runs `trial(t, rng)` for `t` in `0..n`, returning results in trial order.
pub fn run_trials<T, F>(pool: &rayon::ThreadPool, n: usize, master_seed: u64, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    pool.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|t| trial(t, &mut trial_rng(master_seed, t)))
            .collect()
    })
}

/// Where the users are.
#[derive(Debug, Clone, PartialEq)]
pub enum UserMode {
    /// The same large-scale gains in every trial.
    Fixed(Vec<f64>),
    /// `k` users dropped afresh in every trial.
    Resampled {
        k: usize,
        cell_radius: f64,
        min_distance: f64,
        pathloss: Pathloss,
    },
}

impl UserMode {
    pub fn k(&self) -> usize {
        match self {
            UserMode::Fixed(v) => v.len(),
            UserMode::Resampled { k, .. } => *k,
        }
    }
}

/// Precoder built in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Precoding {
    MatchedFilter { csi: CsiMode, scaling: MfScaling },
    MaxMin { method: SolverMethod },
}

impl Precoding {
    pub fn mf(csi: CsiMode) -> Self {
        Precoding::MatchedFilter {
            csi,
            scaling: MfScaling::PerElement,
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Precoding::MatchedFilter { csi, .. } => format!("mf_{}", csi.name()),
            Precoding::MaxMin { .. } => "maxmin".to_string(),
        }
    }
}

/// CSI corruption applied before precoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiError {
    pub error_db: f64,
    pub scale: CsiErrorScale,
}

/// One Monte Carlo setting: the array, the users, the precoder and a list
/// of noise levels sharing the same random draws.
#[derive(Debug, Clone)]
pub struct McScenario<'a> {
    pub model: &'a CouplingModel,
    pub users: UserMode,
    pub p_watts: f64,
    pub n0_watts: Vec<f64>,
    pub precoding: Precoding,
    pub csi_error: Option<CsiError>,
}

/// Throughput estimates at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    /// Per user index, nats.
    pub per_user: Vec<McEstimate>,
    /// User-averaged throughput, nats.
    pub mean: McEstimate,
    /// Per-trial minimum SINR on the true channel, linear.
    pub min_sinr: McEstimate,
    /// Balanced SINR the max-min solver reported for the known channel.
    pub t_star: Option<McEstimate>,
}

struct TrialOutcome {
    rates: Vec<f64>,
    min_sinr: f64,
    t_star: Option<f64>,
}

fn build_precoder(
    precoding: Precoding,
    model: &CouplingModel,
    variances: &[f64],
    known: &nalgebra::DMatrix<num_complex::Complex64>,
    p: f64,
    n0: f64,
) -> Result<(Precoder, Option<f64>)> {
    match precoding {
        Precoding::MatchedFilter { csi, scaling } => {
            let pc = match csi {
                CsiMode::Full => mf_precoder_full(known, p)?,
                CsiMode::Partial => mf_precoder_partial(model, variances, p)?,
                CsiMode::None => mf_precoder_no_csi(model, variances.len(), p)?,
            };
            Ok((pc.scaled(scaling, p)?, None))
        }
        Precoding::MaxMin { method } => {
            let s = maxmin_beamforming(known, p, n0, SolverOptions::with_method(method))?;
            Ok((s.precoder, Some(s.t_star)))
        }
    }
}

/// Per-trial `ln(1 + γ_k)` of every user at every noise level.
fn one_trial(sc: &McScenario, rng: &mut ChaCha8Rng) -> Result<Vec<TrialOutcome>> {
    let variances = match &sc.users {
        UserMode::Fixed(v) => v.clone(),
        UserMode::Resampled {
            k,
            cell_radius,
            min_distance,
            pathloss,
        } => place_users(*k, *cell_radius, *min_distance, *pathloss, rng)?.variances,
    };
    let error_variance = sc
        .csi_error
        .map(|e| e.scale.error_variance(e.error_db, &variances, sc.model));
    let ch = ChannelRealization::draw(&variances, sc.model, error_variance, rng)?;
    let mut shared: Option<Precoder> = None;
    let mut out = Vec::with_capacity(sc.n0_watts.len());
    for &n0 in &sc.n0_watts {
        // Matched filters ignore the noise level, so one precoder serves all.
        let (pc, t_star) = match (&shared, sc.precoding) {
            (Some(pc), Precoding::MatchedFilter { .. }) => (pc.clone(), None),
            _ => {
                let (pc, t) = build_precoder(sc.precoding, sc.model, &variances, ch.known(), sc.p_watts, n0)?;
                shared = Some(pc.clone());
                (pc, t)
            }
        };
        let sinr = sinr_per_user(&ch.h, &pc.w, n0)?;
        out.push(TrialOutcome {
            rates: sinr.iter().map(|g| g.ln_1p()).collect(),
            min_sinr: sinr.iter().cloned().fold(f64::INFINITY, f64::min),
            t_star,
        });
    }
    Ok(out)
}

/// Ergodic throughput by simulation, one [`McResult`] per noise level.
pub fn estimate_throughput_mc(
    sc: &McScenario,
    n_trials: usize,
    master_seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<McResult>> {
    if n_trials < MIN_TRIALS {
        return Err(Error::param("n_trials", format!("need at least {MIN_TRIALS}, got {n_trials}")));
    }
    if sc.n0_watts.is_empty() {
        return Err(Error::param("n0_watts", "need at least one noise level"));
    }
    let k = sc.users.k();
    if k == 0 {
        return Err(Error::param("k", "need at least one user"));
    }
    let trials = run_trials(pool, n_trials, master_seed, |_, rng| one_trial(sc, rng));
    let trials: Vec<_> = trials.into_iter().collect::<Result<_>>()?;
    let mut results = Vec::with_capacity(sc.n0_watts.len());
    for level in 0..sc.n0_watts.len() {
        let per_user = (0..k)
            .map(|u| {
                let s: Vec<f64> = trials.iter().map(|t| t[level].rates[u]).collect();
                McEstimate::from_samples(&s)
            })
            .collect::<Result<Vec<_>>>()?;
        let means: Vec<f64> = trials
            .iter()
            .map(|t| t[level].rates.iter().sum::<f64>() / k as f64)
            .collect();
        let mins: Vec<f64> = trials.iter().map(|t| t[level].min_sinr).collect();
        let t_stars: Option<Vec<f64>> = trials.iter().map(|t| t[level].t_star).collect();
        results.push(McResult {
            per_user,
            mean: McEstimate::from_samples(&means)?,
            min_sinr: McEstimate::from_samples(&mins)?,
            t_star: t_stars.map(|v| McEstimate::from_samples(&v)).transpose()?,
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Exp1, Gamma};

    #[test]
    fn streams_are_distinct_and_replayable() {
        let a: u64 = trial_rng(7, 0).random();
        let b: u64 = trial_rng(7, 1).random();
        let c: u64 = trial_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1e16];
        xs.extend(std::iter::repeat(1.0).take(1000));
        xs.push(-1e16);
        let s: CompensatedSum = xs.into_iter().collect();
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn moments_basics() {
        assert_eq!(empirical_moments(&[3.0; 10]), (3.0, 0.0));
        let a: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x - 1.0).collect();
        assert!((empirical_correlation(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let (m, v) = empirical_moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unit_exponential_mean() {
        let mut rng = trial_rng(11, 0);
        let s: Vec<f64> = (0..1_000_000).map(|_| Distribution::<f64>::sample(&Exp1, &mut rng)).collect();
        let (m, _) = empirical_moments(&s);
        assert!((m - 1.0).abs() < 5e-3);
    }

    #[test]
    fn ks_calibration() {
        let mut r1 = trial_rng(1, 0);
        let mut r2 = trial_rng(1, 1);
        let a: Vec<f64> = (0..100_000).map(|_| Distribution::<f64>::sample(&Exp1, &mut r1)).collect();
        let b: Vec<f64> = (0..100_000).map(|_| Distribution::<f64>::sample(&Exp1, &mut r2)).collect();
        assert_eq!(ks_two_sample(&a, &a, 0.01).unwrap().d, 0.0);
        assert!(!ks_two_sample(&a, &b, 0.01).unwrap().reject);
        let g = Gamma::new(2.0, 0.5).unwrap();
        let c: Vec<f64> = (0..100_000).map(|_| g.sample(&mut r2)).collect();
        let r = ks_two_sample(&a, &c, 0.01).unwrap();
        assert!(r.reject && r.p_value < 1e-6);
    }

    #[test]
    fn ks_handles_ties() {
        let r = ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0], 0.05).unwrap();
        assert!((r.d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn interval_coverage() {
        let pool = pool_with_threads(2).unwrap();
        let hits: usize = run_trials(&pool, 200, 3, |_, rng| {
            let s: Vec<f64> = (0..400).map(|_| Distribution::<f64>::sample(&Exp1, rng)).collect();
            McEstimate::from_samples(&s).unwrap().contains(1.0) as usize
        })
        .into_iter()
        .sum();
        assert!(hits >= 180, "{hits}");
    }

    #[test]
    fn results_do_not_depend_on_threads() {
        let f = |_: u64, rng: &mut ChaCha8Rng| rng.random::<f64>();
        let one = run_trials(&pool_with_threads(1).unwrap(), 1000, 9, f);
        let many = run_trials(&pool_with_threads(8).unwrap(), 1000, 9, f);
        assert_eq!(one, many);
    }
}
