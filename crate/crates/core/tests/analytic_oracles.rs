use hmimo::analytic::{
    jensen_expectation_oracle, lemma1_sigma, lemma1_sigma_with, moment_match_gamma, GammaApproxParams,
    MomentOptions, SeriesForm,
};
use hmimo::coupling::{CouplingKernel, CouplingModel};
use hmimo::geometry::{build_array_geometry, ArrayLayout};
use hmimo::special::SeriesControl;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn line_model(m: usize, spacing_over_lambda: f64) -> CouplingModel {
    let lambda = 0.1874;
    let g = build_array_geometry(m, ArrayLayout::Line { spacing: spacing_over_lambda * lambda }).unwrap();
    CouplingModel::from_geometry(&g, lambda, CouplingKernel::Sinc, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
}

#[test]
fn series_matches_two_dimensional_quadrature() {
    let model = line_model(16, 0.25);
    let p = moment_match_gamma(&model.spectrum.eigenvalues, 1.0, &[1.0; 7], MomentOptions::default()).unwrap();
    for snr_db in [0.0, 10.0, 20.0] {
        let rho = 10f64.powf(snr_db / 10.0) / 16.0;
        let series = lemma1_sigma(&p, rho, SeriesControl::default()).unwrap().sigma;
        let oracle = jensen_expectation_oracle(&p, rho).unwrap();
        let rel = (series - oracle).abs() / oracle;
        println!("{snr_db} dB: series {series}, oracle {oracle}, rel {rel:e}");
        assert!(rel < 1e-4);
    }
}

#[test]
fn series_matches_quadrature_for_small_mu() {
    let p = GammaApproxParams { nu: 7.0, theta: 0.4, mu: 0.8, phi: 3.0, eta: 0.3 };
    for rho in [0.05, 1.0, 20.0] {
        let series = lemma1_sigma_with(&p, rho, SeriesControl::default(), SeriesForm::Tricomi).unwrap().sigma;
        let oracle = jensen_expectation_oracle(&p, rho).unwrap();
        let rel = (series - oracle).abs() / oracle;
        println!("rho {rho}: series {series}, oracle {oracle}, rel {rel:e}");
        assert!(rel < 1e-6);
    }
}
