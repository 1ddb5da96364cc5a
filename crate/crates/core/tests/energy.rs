use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use viscoplate::dynamics::{simulate, DampingSpec, ForcingSpec, Model, NonlinearitySpec, PlateState};
use viscoplate::energy::{
    decay_envelope_check, dissipation_residual, energy, perturbed_energy, psi, EnergyConstants, EnergyMeter,
    EnergyRecorder,
};
use viscoplate::memory::{HistoryField, MemoryKernel};
use viscoplate::spectral::{DomainSpec, SpectralField};

fn random_state(model: &Model, seed: u64, scale: f64) -> PlateState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = model.domain;
    let draw = |rng: &mut ChaCha8Rng| {
        let coeffs = (0..domain.len())
            .map(|k| scale * rng.gen_range(-1.0..1.0) / (1.0 + domain.eigenvalue(k)))
            .collect();
        SpectralField::from_coeffs(domain, coeffs).unwrap()
    };
    let u = draw(&mut rng);
    let v = draw(&mut rng);
    let mut state = PlateState::new(model, u, v, 0.05).unwrap();
    if let Some(kernel) = model.kernel {
        let lags = HistoryField::zero(domain, kernel, 0.05).unwrap().lags();
        let values: Vec<SpectralField> = (0..lags).map(|_| draw(&mut rng)).collect();
        state.history = Some(HistoryField::from_values(domain, kernel, 0.05, &values).unwrap());
    }
    state
}

fn memory_model(dim: usize, modes: usize) -> Model {
    Model::new(
        DomainSpec::with_modes(dim, modes).unwrap(),
        DampingSpec::paper_family(0.2, 0.5),
    )
    .with_kernel(MemoryKernel::new(1.0, 2.0))
    .with_nonlinearity(NonlinearitySpec::cubic())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn psi_is_bounded_by_energy(seed in any::<u64>(), scale in 0.01f64..5.0, two_d in any::<bool>()) {
        let model = if two_d { memory_model(2, 4) } else { memory_model(1, 8) };
        let state = random_state(&model, seed, scale);
        let c = EnergyConstants::new(&model);
        let e = energy(&state, &model).unwrap();
        let bound = c.c1 * (e + c.c_f * c.volume);
        prop_assert!(psi(&state).abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn perturbed_energy_sandwich(seed in any::<u64>(), scale in 0.01f64..5.0, frac in 0.01f64..=1.0) {
        let model = memory_model(1, 8);
        let state = random_state(&model, seed, scale);
        let c = EnergyConstants::new(&model);
        let eps = frac * c.eps2;
        let e = energy(&state, &model).unwrap();
        let e_eps = perturbed_energy(&state, &model, eps).unwrap();
        let slack = 1e-12 * (1.0 + e.abs());
        prop_assert!(0.5 * e - 0.5 * c.c_f * c.volume <= e_eps + slack);
        prop_assert!(e_eps <= 1.5 * e + 0.5 * c.c_f * c.volume + slack);
    }
}

#[test]
fn psi_closed_forms() {
    let model = Model::new(DomainSpec::with_modes(1, 4).unwrap(), DampingSpec::constant(1.0));
    let sin = SpectralField::single_mode(model.domain, &[1], 1.0).unwrap();
    let state = PlateState::new(&model, sin.clone(), sin.clone(), 0.1).unwrap();
    // (sin, sin) + (cos, cos) = π/2 + π/2
    assert!((psi(&state) - PI).abs() < 1e-14);
    let rest = PlateState::new(&model, sin, SpectralField::zeros(model.domain), 0.1).unwrap();
    assert_eq!(psi(&rest), 0.0);
}

#[test]
fn perturbation_outside_range_is_rejected() {
    let model = memory_model(1, 4);
    let state = PlateState::at_rest(&model, 0.05).unwrap();
    let c = EnergyConstants::new(&model);
    assert!(perturbed_energy(&state, &model, 2.0 * c.eps2).is_err());
    assert!(perturbed_energy(&state, &model, 0.0).is_err());
    assert_eq!(perturbed_energy(&state, &model, c.eps2).unwrap(), 0.0);
}

#[test]
fn linear_identity_rhs_matches_scalar_oracle() {
    // E = (π/2)(½(1+λ)v² + ½λ²u²), dE/dt = -(π/2)(a+λ)v²
    let domain = DomainSpec::with_modes(1, 3).unwrap();
    let a = 0.8;
    let model = Model::new(domain, DampingSpec::constant(a));
    let state = PlateState::new(
        &model,
        SpectralField::single_mode(domain, &[2], 0.3).unwrap(),
        SpectralField::single_mode(domain, &[2], -0.7).unwrap(),
        0.01,
    )
    .unwrap();
    let report = EnergyMeter::new(&model).report(&state).unwrap();
    let lambda = 4.0;
    let expected_e = PI / 2.0 * (0.5 * (1.0 + lambda) * 0.49 + 0.5 * lambda * lambda * 0.09);
    assert!((report.energy - expected_e).abs() < 1e-13);
    assert!((report.dedt_identity_rhs + PI / 2.0 * (a + lambda) * 0.49).abs() < 1e-13);
}

fn identity_residual_max(model: &Model, dt: f64) -> f64 {
    let domain = model.domain;
    let u: Vec<f64> = (0..domain.len()).map(|k| 0.8 / (1.0 + k as f64).powi(2)).collect();
    let v: Vec<f64> = (0..domain.len())
        .map(|k| 0.3 * (-1f64).powi(k as i32) / (1.0 + k as f64).powi(2))
        .collect();
    let initial = PlateState::new(
        model,
        SpectralField::from_coeffs(domain, u).unwrap(),
        SpectralField::from_coeffs(domain, v).unwrap(),
        dt,
    )
    .unwrap();
    let mut recorder = EnergyRecorder::new(model, 1);
    simulate(&initial, model, 1.0, dt, &mut [&mut recorder]).unwrap();
    recorder
        .reports()
        .iter()
        .filter_map(|r| r.identity_residual())
        .fold(0.0, f64::max)
}

#[test]
fn identity_residual_is_second_order_without_memory() {
    let domain = DomainSpec::with_modes(1, 8).unwrap();
    let model = Model::new(domain, DampingSpec::paper_family(0.2, 0.5))
        .with_nonlinearity(NonlinearitySpec::cubic())
        .with_forcing(ForcingSpec::Stationary(
            SpectralField::single_mode(domain, &[1], 1.0).unwrap(),
        ));
    let errors: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| identity_residual_max(&model, dt))
        .collect();
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order >= 1.9, "order {order} from {errors:?}");
    }
}

#[test]
fn recorder_stride_keeps_centered_differences() {
    let model = memory_model(1, 4);
    let mut initial = random_state(&model, 1, 1.0);
    initial.history = Some(HistoryField::zero(model.domain, model.kernel.unwrap(), 0.01).unwrap());
    let mut every = EnergyRecorder::new(&model, 1);
    let mut sparse = EnergyRecorder::new(&model, 7);
    simulate(&initial, &model, 0.5, 0.01, &mut [&mut every, &mut sparse]).unwrap();
    for r in sparse.reports() {
        let index = (r.t / 0.01).round() as usize;
        let full = &every.reports()[index];
        assert_eq!(r.energy, full.energy);
        assert_eq!(r.dedt_fd, full.dedt_fd);
    }
    assert_eq!(sparse.reports().len(), 8);
    assert!(sparse.reports()[0].dedt_fd.is_none());
}

#[test]
fn forced_run_stays_inside_envelope() {
    let domain = DomainSpec::with_modes(1, 8).unwrap();
    let model = Model::new(domain, DampingSpec::paper_family(0.5, 0.5))
        .with_kernel(MemoryKernel::new(1.0, 1.0))
        .with_nonlinearity(NonlinearitySpec::cubic())
        .with_forcing(ForcingSpec::periodic(
            SpectralField::single_mode(domain, &[1], 1.0).unwrap(),
            1.0,
        ));
    let dt = 0.01;
    let mut initial = random_state(&model, 9, 3.0);
    initial.history = Some(HistoryField::zero(domain, model.kernel.unwrap(), dt).unwrap());
    let mut recorder = EnergyRecorder::new(&model, 10);
    simulate(&initial, &model, 30.0, dt, &mut [&mut recorder]).unwrap();
    let samples: Vec<(f64, f64)> = recorder.reports().iter().map(|r| (r.t, r.energy)).collect();
    let eps2 = recorder.constants().eps2;
    let fit = decay_envelope_check(&samples, &model, eps2).unwrap();
    assert!(fit.inside_envelope(), "{:?}", fit.first_violation);
    assert!(fit.fitted_slope.is_none());
    for r in recorder.reports() {
        if let Some(res) = dissipation_residual(r, &model) {
            assert!(res <= 1e-4 * (1.0 + r.energy.abs()), "t={} residual {res}", r.t);
        }
    }
}

#[test]
fn equilibrium_has_zero_dissipation_residual() {
    let model = memory_model(1, 4);
    let state = PlateState::at_rest(&model, 0.01).unwrap();
    let mut recorder = EnergyRecorder::new(&model, 1);
    simulate(&state, &model, 0.1, 0.01, &mut [&mut recorder]).unwrap();
    for r in recorder.reports() {
        assert_eq!(r.energy, 0.0);
        if let Some(res) = dissipation_residual(r, &model) {
            assert_eq!(res, 0.0);
        }
    }
}
