use flowtube_core::kinetics::{
    fit_kinetic, pseudo_first_order_deviation, KineticFitOptions, KineticKind, ReactionConditions,
    REFERENCE_REACTION_TIMES,
};
use flowtube_core::reference_data::SYMMETRIC_RTD_TABLE;
use flowtube_core::rtd::{fit_rtd, RtdModel, SymGaussParams};
use flowtube_core::simulate::{
    synth_kinetic_dataset, synth_rtd_trace, NoiseSpec, PulseSpec, RtdShape, Sensitivities,
};

#[test]
fn long_residence_times_give_narrow_rtds() {
    let pulse = PulseSpec {
        duration: 1.0,
        mfc_response_time: 0.3,
        amplitude: 1.0,
    };
    let rows: Vec<_> = SYMMETRIC_RTD_TABLE.iter().filter(|r| r.tau > 5.0).collect();
    assert!(rows.len() > 10);
    for (i, row) in rows.iter().enumerate() {
        let shape = RtdShape::Symmetric(SymGaussParams {
            amplitude: 100.0,
            mean: row.acetone_mu,
            sigma: row.acetone_sigma,
            baseline: 0.5,
        });
        let trace = synth_rtd_trace(&shape, &pulse, 10.0, &NoiseSpec::new(0.01, i as u64)).unwrap();
        let fit = fit_rtd(&trace, RtdModel::Symmetric).unwrap();
        assert!(fit.converged);
        let ratio = fit.params.sigma() / fit.params.mean();
        assert!(ratio < 0.15, "tau {}: sigma/mu = {ratio}", row.tau);
    }
}

#[test]
fn fitted_decay_stays_within_the_oracle_bias_bound() {
    let cond = ReactionConditions::ozonolysis_reference();
    let k = 2.1e-15;
    let bound = pseudo_first_order_deviation(&cond, k, &REFERENCE_REACTION_TIMES).unwrap();
    assert!(bound <= 0.06);
    let sens = Sensitivities {
        organic: 1e-10,
        ..Default::default()
    };
    let data = synth_kinetic_dataset(
        &cond,
        k,
        &REFERENCE_REACTION_TIMES,
        &sens,
        &NoiseSpec::noiseless(),
    )
    .unwrap();
    let fit = fit_kinetic(
        &data.organic,
        KineticKind::Reactant,
        &KineticFitOptions::default(),
    )
    .unwrap();
    let bias = (fit.model.primary_rate() / (k * cond.conc_oxidant) - 1.0).abs();
    assert!(bias <= 0.06, "k' bias {bias}");
}
