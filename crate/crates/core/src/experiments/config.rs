//! Experiment configuration files.
//!
//! Configurations are TOML. Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{AnalyticOptions, BetaMode, EtaMapping, MomentMode, MomentOptions, NoCsiModel, SeriesForm};
use crate::channel::CsiErrorScale;
use crate::config::SystemConfig;
use crate::coupling::CouplingKernel;
use crate::error::{Error, Result};
use crate::geometry::ArrayLayout;
use crate::maxmin::SolverMethod;
use crate::precoding::{MfScaling, PrecoderMode};
use crate::special::SeriesControl;

/// The experiment catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    SnrSweep,
    ApertureCoupling,
    MfVsOptimal,
    CsiError,
    SnrLevels,
    Validate,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::SnrSweep,
        ExperimentId::ApertureCoupling,
        ExperimentId::MfVsOptimal,
        ExperimentId::CsiError,
        ExperimentId::SnrLevels,
        ExperimentId::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::SnrSweep => "snr-sweep",
            ExperimentId::ApertureCoupling => "aperture-coupling",
            ExperimentId::MfVsOptimal => "mf-vs-optimal",
            ExperimentId::CsiError => "csi-error",
            ExperimentId::SnrLevels => "snr-levels",
            ExperimentId::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|id| id.name()).collect();
                Error::Config(format!("unknown experiment `{s}`; known: {}", known.join(", ")))
            })
    }
}

/// Which SNR the `snr_db` values refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// `P / N0`.
    #[default]
    Transmit,
    /// `ρ σ_k² L(λ, 1)` averaged over users.
    Received,
}

/// Quantities a sweep or series can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    SnrDb,
    M,
    K,
    CsiErrorDb,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::SnrDb => "snr_db",
            Variable::M => "m",
            Variable::K => "k",
            Variable::CsiErrorDb => "csi_error_db",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, Variable::M | Variable::K)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: Variable,
    pub values: Vec<f64>,
}

impl Sweep {
    fn validate(&self, what: &str) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config(format!("{what}: values must be nonempty")));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{what}: values must be finite")));
        }
        let up = self.values.windows(2).all(|w| w[0] < w[1]);
        let down = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::Config(format!("{what}: values must be strictly monotone")));
        }
        if self.variable.is_count() && self.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
            return Err(Error::Config(format!(
                "{what}: `{}` values must be positive integers",
                self.variable.name()
            )));
        }
        Ok(())
    }
}

/// Element layout, with spacings in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrayConfig {
    Line { spacing_wavelengths: f64 },
    Grid { spacing_wavelengths: f64 },
    /// Square aperture with the given side in meters.
    Aperture { side: f64 },
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig::Line {
            spacing_wavelengths: 0.5,
        }
    }
}

impl ArrayConfig {
    pub fn layout(self, wavelength: f64) -> ArrayLayout {
        match self {
            ArrayConfig::Line { spacing_wavelengths } => ArrayLayout::Line {
                spacing: spacing_wavelengths * wavelength,
            },
            ArrayConfig::Grid { spacing_wavelengths } => ArrayLayout::Grid {
                spacing: spacing_wavelengths * wavelength,
            },
            ArrayConfig::Aperture { side } => ArrayLayout::Aperture { side },
        }
    }
}

/// How user gains are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum UsersConfig {
    /// Every user has gain `gain`.
    Equal { gain: f64 },
    /// One placement drawn from the seed and kept for all trials.
    Placed { reference_distance: f64 },
    /// A fresh placement in every trial.
    Resampled { reference_distance: f64 },
}

impl Default for UsersConfig {
    fn default() -> Self {
        UsersConfig::Equal { gain: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsiErrorConfig {
    pub scale: CsiErrorScale,
    /// Fixed error level; unset means perfect CSI unless swept.
    pub error_db: Option<f64>,
}

impl Default for CsiErrorConfig {
    fn default() -> Self {
        CsiErrorConfig {
            scale: CsiErrorScale::Relative,
            error_db: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticConfig {
    pub moment_mode: MomentMode,
    pub eta_mapping: EtaMapping,
    pub beta_mode: BetaMode,
    pub no_csi_model: NoCsiModel,
    pub series_form: SeriesForm,
    pub rel_tol: f64,
    pub max_terms: usize,
    /// Placements averaged over when users are resampled.
    pub layouts: usize,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        let ctrl = SeriesControl::default();
        AnalyticConfig {
            moment_mode: MomentMode::default(),
            eta_mapping: EtaMapping::default(),
            beta_mode: BetaMode::default(),
            no_csi_model: NoCsiModel::default(),
            series_form: SeriesForm::default(),
            rel_tol: ctrl.rel_tol,
            max_terms: ctrl.max_terms,
            layouts: 256,
        }
    }
}

impl AnalyticConfig {
    pub fn options(&self) -> Result<AnalyticOptions> {
        Ok(AnalyticOptions {
            moments: MomentOptions {
                mode: self.moment_mode,
                eta_mapping: self.eta_mapping,
            },
            ctrl: SeriesControl::new(self.rel_tol, self.max_terms)?,
            form: self.series_form,
            beta_mode: self.beta_mode,
            no_csi: self.no_csi_model,
        })
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_modes() -> Vec<PrecoderMode> {
    vec![PrecoderMode::Full, PrecoderMode::Partial, PrecoderMode::None]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub n_trials: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_modes")]
    pub modes: Vec<PrecoderMode>,
    /// Fixed SNR when it is not swept; unset means `P / N0` from `[system]`.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub snr_reference: SnrReference,
    #[serde(default)]
    pub mf_scaling: MfScaling,
    #[serde(default)]
    pub solver: SolverMethod,
    #[serde(default)]
    pub kernel: CouplingKernel,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub users: UsersConfig,
    /// Required by every experiment except `validate`.
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub series: Option<Sweep>,
    #[serde(default)]
    pub csi_error: CsiErrorConfig,
    #[serde(default)]
    pub analytic: AnalyticConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the normalized configuration,
    /// leaving out the output directory.
    pub fn hash(&self) -> Result<String> {
        let normalized = ExperimentConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(normalized.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn sweep(&self) -> Result<&Sweep> {
        self.sweep
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} needs a [sweep] section", self.experiment.name())))
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.experiment == ExperimentId::Validate {
            return self.analytic.options().map(|_| ());
        }
        let sweep = self.sweep()?;
        sweep.validate("sweep")?;
        if let Some(series) = &self.series {
            series.validate("series")?;
            if series.variable == sweep.variable {
                return Err(Error::Config("series and sweep must vary different quantities".into()));
            }
        }
        if self.n_trials < crate::montecarlo::MIN_TRIALS {
            return Err(Error::Config(format!(
                "n_trials must be at least {}",
                crate::montecarlo::MIN_TRIALS
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("modes must be nonempty".into()));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].contains(m) {
                return Err(Error::Config(format!("mode {m:?} listed twice")));
            }
        }
        match self.users {
            UsersConfig::Equal { gain } if !(gain > 0.0 && gain.is_finite()) => {
                return Err(Error::Config("users.gain must be positive".into()))
            }
            UsersConfig::Placed { reference_distance } | UsersConfig::Resampled { reference_distance }
                if !(reference_distance > 0.0 && reference_distance.is_finite()) =>
            {
                return Err(Error::Config("users.reference_distance must be positive".into()))
            }
            UsersConfig::Resampled { .. } if self.snr_reference == SnrReference::Received => {
                return Err(Error::Config(
                    "received SNR needs fixed users (mode = \"equal\" or \"placed\")".into(),
                ))
            }
            _ => {}
        }
        match self.array {
            ArrayConfig::Line { spacing_wavelengths } | ArrayConfig::Grid { spacing_wavelengths }
                if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) =>
            {
                return Err(Error::Config("array.spacing_wavelengths must be positive".into()))
            }
            ArrayConfig::Aperture { side } if !(side > 0.0 && side.is_finite()) => {
                return Err(Error::Config("array.side must be positive".into()))
            }
            _ => {}
        }
        self.analytic.options()?;
        Ok(())
    }
}
