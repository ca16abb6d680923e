//! Analytical results against Monte Carlo through the public API, at small
//! trial counts.

use uam_core::analysis::{
    connectivity_probability, expected_chord_length, expected_participants_real, CpDistribution, LaplaceCurve,
    LaplaceEvaluator,
};
use uam_core::mcsim::{empirical_cdf, mc_connectivity, mc_participants, mc_staleness};
use uam_core::quad::QuadratureSpec;
use uam_core::units::db_to_linear;
use uam_core::channel::ServingRule;
use uam_core::ModelParams;

#[test]
fn uniform_offsets_connectivity_agrees_with_simulation() {
    let p = ModelParams::reference_uniform();
    let ev = LaplaceEvaluator::new(&p, QuadratureSpec::default()).unwrap();
    let gamma = db_to_linear(5.0);
    let analytic = connectivity_probability(gamma, &ev).unwrap();
    let mc = mc_connectivity(&p, gamma, 5000, ServingRule::TaggedAtOrigin, 17).unwrap();
    assert!((analytic - mc.estimate).abs() < 4.0 * mc.stderr + 1e-3, "{analytic} vs {mc:?}");
}

#[test]
fn staleness_cdf_agrees_with_simulated_delays() {
    let p = ModelParams::reference_gaussian();
    let ev = LaplaceEvaluator::new(&p, QuadratureSpec::default()).unwrap();
    let curve = LaplaceCurve::for_thresholds(&ev, db_to_linear(-20.0), db_to_linear(30.0), 6).unwrap();
    let samples = mc_staleness(&p, 5000, ServingRule::TaggedAtOrigin, 5).unwrap();
    for db in [20.0, 5.0, -10.0] {
        let tau = p.t_comp() + p.t_tran(db_to_linear(db));
        let a = curve.staleness_cdf(tau).unwrap();
        let e = empirical_cdf(&samples, tau);
        let se = (e * (1.0 - e) / samples.len() as f64).sqrt();
        assert!((a - e).abs() < 4.0 * se + 2e-3, "tau {tau}: {a} vs {e}");
    }
    assert_eq!(curve.staleness_cdf(p.t_comp()).unwrap(), 0.0);
}

#[test]
fn participant_count_matches_simulation_up_to_sampling_bias() {
    // The simulated typical GBS is the one nearest the origin (zero cell,
    // mean area 1.2802 / lambda_b), and lines through uniform points of a disc
    // of radius R have density 2R / E[chord] times the disc average at its
    // centre.
    let mut p = ModelParams::reference_gaussian();
    p.lambda_c *= 5.0;
    p.lambda_b *= 0.5;
    let chord = expected_chord_length(&p, &QuadratureSpec::default(), CpDistribution::UniformInDisc).unwrap();
    let k = expected_participants_real(&p, chord).unwrap();
    let mc = mc_participants(&p, 3000, 2).unwrap();
    let biased = k * 1.2802 * 2.0 * p.sampling_radius() / chord;
    assert!((biased - mc.estimate).abs() < 4.0 * mc.stderr + 0.05 * biased, "{biased} vs {mc:?}");
}
