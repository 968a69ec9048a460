use super::config::{ExperimentConfig, ExperimentId};
use crate::error::Result;

fn source(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::SnrSweep => include_str!("../../../../configs/snr-sweep.toml"),
        ExperimentId::ApertureCoupling => include_str!("../../../../configs/aperture-coupling.toml"),
        ExperimentId::MfVsOptimal => include_str!("../../../../configs/mf-vs-optimal.toml"),
        ExperimentId::CsiError => include_str!("../../../../configs/csi-error.toml"),
        ExperimentId::SnrLevels => include_str!("../../../../configs/snr-levels.toml"),
        ExperimentId::Validate => include_str!("../../../../configs/validate.toml"),
    }
}

/// The shipped configuration for `id`.
pub fn default_config(id: ExperimentId) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(source(id))
}

/// What `id` measures, followed by its shipped configuration.
pub fn describe(id: ExperimentId) -> String {
    let summary = match id {
        ExperimentId::SnrSweep => {
            "Average per-user throughput against SNR for every CSI level, analytic and Monte Carlo, \
             for two array sizes. Expect analytic above simulation and full >= partial >= none."
        }
        ExperimentId::ApertureCoupling => {
            "Throughput as more elements are packed into a fixed square aperture. The gain per added \
             element shrinks as the spacing closes in and coupling grows."
        }
        ExperimentId::MfVsOptimal => {
            "Full-CSI matched filter against max-min beamforming over the array size for several \
             user counts. Max-min never does worse on the weakest user."
        }
        ExperimentId::CsiError => {
            "Matched filter against max-min beamforming as the channel estimate degrades. Max-min wins \
             with good estimates, the matched filter with poor ones, and the switch-over moves to \
             larger errors as the array grows."
        }
        ExperimentId::SnrLevels => {
            "Matched filter against max-min beamforming over the array size at several received SNR \
             levels. The two are close at low SNR and max-min pulls ahead as SNR grows."
        }
        ExperimentId::Validate => {
            "Checks the closed forms and the solver against independent oracles and writes a \
             pass/fail report. Exits nonzero if any check fails."
        }
    };
    format!("{}\n\n{summary}\n\n{}", id.name(), source(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_parse() {
        for id in ExperimentId::ALL {
            let cfg = default_config(id).unwrap();
            assert_eq!(cfg.experiment, id);
            assert!(describe(id).starts_with(id.name()));
        }
    }

    #[test]
    fn normalized_form_round_trips() {
        for id in ExperimentId::ALL {
            let cfg = default_config(id).unwrap();
            let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.hash().unwrap(), cfg.hash().unwrap());
        }
    }
}
