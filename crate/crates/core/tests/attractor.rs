use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use viscoplate::attractor::{
    continuous_dependence_experiment, difference_energy, directed_hausdorff, hausdorff_semidistance,
    omega_limit_approx, phase_distance_sq, CloudMetadata, SamplingParams, SnapshotCloud, BALL_TOLERANCE,
};
use viscoplate::dynamics::{DampingSpec, ForcingSpec, Model, NonlinearitySpec, PlateState};
use viscoplate::energy::absorbing_radius;
use viscoplate::memory::{HistoryField, MemoryKernel};
use viscoplate::spectral::{embedding_constants, DomainSpec, SpectralField};

const SPACING: f64 = 0.5;

fn small_model() -> Model {
    Model::new(DomainSpec::with_modes(1, 3).unwrap(), DampingSpec::constant(1.0))
        .with_kernel(MemoryKernel::new(1.0, 2.0))
}

fn random_point(model: &Model, rng: &mut ChaCha8Rng) -> PlateState {
    let domain = model.domain;
    let draw = |rng: &mut ChaCha8Rng| {
        SpectralField::from_coeffs(domain, (0..domain.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    };
    let u = draw(rng);
    let v = draw(rng);
    let kernel = model.kernel.unwrap();
    let lags = HistoryField::zero(domain, kernel, SPACING).unwrap().lags();
    let values: Vec<SpectralField> = (0..lags).map(|_| draw(rng)).collect();
    PlateState::new(model, u, v, SPACING)
        .unwrap()
        .with_history(HistoryField::from_values(domain, kernel, SPACING, &values).unwrap())
}

fn cloud(points: Vec<PlateState>) -> SnapshotCloud {
    let n = points.len();
    SnapshotCloud {
        points,
        metadata: CloudMetadata {
            damping_epsilon: 0.0,
            shifts: vec![0.0; n],
            times: vec![0.0; n],
            transient_warning: false,
        },
    }
}

// independent phase distance: direct sums over modes and lags
fn naive_distance(a: &PlateState, b: &PlateState) -> f64 {
    let domain = a.domain();
    let parseval = domain.parseval_factor();
    let mut total = 0.0;
    for k in 0..domain.len() {
        let lambda = domain.eigenvalue(k);
        let du = a.u.coeffs()[k] - b.u.coeffs()[k];
        let dv = a.v.coeffs()[k] - b.v.coeffs()[k];
        total += parseval * (lambda * lambda * du * du + lambda * dv * dv);
    }
    let (ha, hb) = (a.history.as_ref().unwrap(), b.history.as_ref().unwrap());
    let weights = ha.quadrature_weights();
    for j in 1..=ha.lags() {
        for k in 0..domain.len() {
            let lambda = domain.eigenvalue(k);
            let d = ha.coeff(j, k) - hb.coeff(j, k);
            total += parseval * weights[j - 1] * lambda * lambda * d * d;
        }
    }
    total.sqrt()
}

fn naive_semidistance(a: &[PlateState], b: &[PlateState]) -> f64 {
    let mut sup = 0.0f64;
    for x in a {
        let mut inf = f64::INFINITY;
        for y in b {
            inf = inf.min(naive_distance(x, y));
        }
        sup = sup.max(inf);
    }
    sup
}

#[test]
fn semidistance_agrees_with_naive_double_loop() {
    let model = small_model();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let na = rng.gen_range(1..=20);
        let nb = rng.gen_range(1..=20);
        let a: Vec<PlateState> = (0..na).map(|_| random_point(&model, &mut rng)).collect();
        let b: Vec<PlateState> = (0..nb).map(|_| random_point(&model, &mut rng)).collect();
        let fast = hausdorff_semidistance(&cloud(a.clone()), &cloud(b.clone())).unwrap();
        let slow = naive_semidistance(&a, &b);
        assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow), "{fast} vs {slow}");
        let a_cloud = cloud(a);
        assert_eq!(hausdorff_semidistance(&a_cloud, &a_cloud).unwrap(), 0.0);
    }
}

#[test]
fn asymmetry_witness() {
    let model = small_model();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_point(&model, &mut rng);
    let y = random_point(&model, &mut rng);
    let a = cloud(vec![x.clone(), y.clone()]);
    let b = cloud(vec![x.clone()]);
    let d_xy = phase_distance_sq(&y, &x).unwrap().sqrt();
    assert!(d_xy > 0.0);
    assert!((hausdorff_semidistance(&a, &b).unwrap() - d_xy).abs() < 1e-12);
    assert_eq!(hausdorff_semidistance(&b, &a).unwrap(), 0.0);
}

#[test]
fn one_point_clouds_are_symmetric() {
    let model = small_model();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = cloud(vec![random_point(&model, &mut rng)]);
    let b = cloud(vec![random_point(&model, &mut rng)]);
    let ab = hausdorff_semidistance(&a, &b).unwrap();
    assert_eq!(ab, hausdorff_semidistance(&b, &a).unwrap());
    assert!((ab - naive_distance(&a.points[0], &b.points[0])).abs() < 1e-12);
}

#[test]
fn empty_clouds_are_rejected() {
    let model = small_model();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = cloud(vec![random_point(&model, &mut rng)]);
    assert!(hausdorff_semidistance(&a, &cloud(vec![])).is_err());
    assert!(hausdorff_semidistance(&cloud(vec![]), &a).is_err());
    let empty: [f64; 0] = [];
    assert!(directed_hausdorff(&empty, &[1.0], |x, y| Ok((x - y).abs())).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn directed_triangle_inequality(seed in any::<u64>(), na in 1usize..8, nb in 1usize..8, nc in 1usize..8) {
        let model = small_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| cloud((0..n).map(|_| random_point(&model, &mut rng)).collect());
        let (a, b, c) = (draw(na), draw(nb), draw(nc));
        let ac = hausdorff_semidistance(&a, &c).unwrap();
        let ab = hausdorff_semidistance(&a, &b).unwrap();
        let bc = hausdorff_semidistance(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn subsets_are_at_zero_distance(seed in any::<u64>(), n in 2usize..10) {
        let model = small_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<PlateState> = (0..n).map(|_| random_point(&model, &mut rng)).collect();
        let sub = cloud(points[..n / 2].to_vec());
        let all = cloud(points.clone());
        prop_assert_eq!(hausdorff_semidistance(&sub, &all).unwrap(), 0.0);
        let max_pair = points
            .iter()
            .flat_map(|x| points.iter().map(move |y| (x, y)))
            .map(|(x, y)| naive_distance(x, y))
            .fold(0.0, f64::max);
        prop_assert!(hausdorff_semidistance(&all, &sub).unwrap() <= max_pair + 1e-12);
    }

    #[test]
    fn difference_energy_is_equivalent_to_phase_distance(seed in any::<u64>()) {
        let model = small_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(&model, &mut rng);
        let y = random_point(&model, &mut rng);
        let phase = phase_distance_sq(&x, &y).unwrap();
        let ew = difference_energy(&x, &y).unwrap();
        let lambda0 = embedding_constants(&model.domain).lambda0;
        prop_assert!(phase <= ew * (1.0 + 1e-12));
        prop_assert!(ew <= (1.0 + 1.0 / lambda0) * phase * (1.0 + 1e-12));
        prop_assert_eq!(ew, difference_energy(&y, &x).unwrap());
        prop_assert_eq!(difference_energy(&x, &x).unwrap(), 0.0);
    }
}

#[test]
fn difference_energy_of_velocity_sine() {
    let domain = DomainSpec::with_modes(1, 4).unwrap();
    let model = Model::new(domain, DampingSpec::constant(1.0));
    let rest = PlateState::at_rest(&model, 0.1).unwrap();
    let moving = PlateState::new(
        &model,
        SpectralField::zeros(domain),
        SpectralField::single_mode(domain, &[1], 1.0).unwrap(),
        0.1,
    )
    .unwrap();
    assert!((difference_energy(&moving, &rest).unwrap() - PI).abs() < 1e-14);
    let doubled = PlateState::new(
        &model,
        SpectralField::zeros(domain),
        SpectralField::single_mode(domain, &[1], 2.0).unwrap(),
        0.1,
    )
    .unwrap();
    assert!((difference_energy(&doubled, &rest).unwrap() - 4.0 * PI).abs() < 1e-13);
}

fn initial_set(model: &Model, dt: f64) -> Vec<PlateState> {
    let domain = model.domain;
    [1.0, -2.0]
        .iter()
        .map(|&scale| {
            let u = (0..domain.len())
                .map(|k| scale * 0.8 / (1.0 + k as f64).powi(2))
                .collect();
            let v = (0..domain.len()).map(|k| scale * 0.3 / (1.0 + k as f64)).collect();
            PlateState::new(
                model,
                SpectralField::from_coeffs(domain, u).unwrap(),
                SpectralField::from_coeffs(domain, v).unwrap(),
                dt,
            )
            .unwrap()
        })
        .collect()
}

#[test]
fn stationary_linear_cloud_sits_on_steady_state() {
    // with η = 0 at rest, λ²û = ĥ per mode
    let domain = DomainSpec::with_modes(1, 4).unwrap();
    let h = SpectralField::from_coeffs(domain, vec![1.0, 0.0, 0.5, 0.2]).unwrap();
    let model = Model::new(domain, DampingSpec::constant(1.0))
        .with_kernel(MemoryKernel::new(1.0, 1.0))
        .with_forcing(ForcingSpec::Stationary(h.clone()));
    let dt = 0.01;
    let params = SamplingParams {
        dt,
        t_transient: 40.0,
        t_sample: 5.0,
        n_snapshots: 8,
        symbol_samples: 1,
    };
    let cloud = omega_limit_approx(&model, &initial_set(&model, dt), &params).unwrap();
    assert_eq!(cloud.len(), 8);
    let steady: Vec<f64> = (0..4).map(|k| h.coeffs()[k] / domain.eigenvalue(k).powi(2)).collect();
    let target = PlateState::new(
        &model,
        SpectralField::from_coeffs(domain, steady).unwrap(),
        SpectralField::zeros(domain),
        dt,
    )
    .unwrap();
    for point in &cloud.points {
        let d = phase_distance_sq(point, &target).unwrap().sqrt();
        assert!(d <= 1e-3, "distance {d}");
    }
    let rho0 = absorbing_radius(&model);
    assert!(cloud.max_phase_norm() <= rho0 + BALL_TOLERANCE);
    assert!(!cloud.metadata.transient_warning);
}

#[test]
fn unforced_cloud_collapses() {
    let domain = DomainSpec::with_modes(1, 8).unwrap();
    let model = Model::new(domain, DampingSpec::paper_family(0.2, 0.5))
        .with_kernel(MemoryKernel::new(1.0, 1.0))
        .with_nonlinearity(NonlinearitySpec::cubic());
    let dt = 0.01;
    let params = SamplingParams {
        dt,
        t_transient: 40.0,
        t_sample: 5.0,
        n_snapshots: 8,
        symbol_samples: 1,
    };
    let cloud = omega_limit_approx(&model, &initial_set(&model, dt), &params).unwrap();
    assert!(cloud.max_phase_norm() <= 1e-4, "{}", cloud.max_phase_norm());
}

#[test]
fn periodic_forcing_samples_symbol_shifts() {
    let domain = DomainSpec::with_modes(1, 4).unwrap();
    let h = SpectralField::single_mode(domain, &[1], 1.0).unwrap();
    let model = Model::new(domain, DampingSpec::constant(1.0)).with_forcing(ForcingSpec::periodic(h, 2.0));
    let dt = 0.01;
    let params = SamplingParams {
        dt,
        t_transient: 5.0,
        t_sample: 1.0,
        n_snapshots: 12,
        symbol_samples: 3,
    };
    let cloud = omega_limit_approx(&model, &initial_set(&model, dt), &params).unwrap();
    assert_eq!(cloud.len(), 12);
    let mut shifts = cloud.metadata.shifts.clone();
    shifts.dedup();
    assert_eq!(shifts.len(), 6, "{:?}", cloud.metadata.shifts);
}

#[test]
fn equal_damping_gives_zero_difference() {
    let domain = DomainSpec::with_modes(1, 8).unwrap();
    let model = Model::new(domain, DampingSpec::paper_family(0.0, 0.5))
        .with_kernel(MemoryKernel::new(1.0, 1.0))
        .with_nonlinearity(NonlinearitySpec::cubic());
    let dt = 0.01;
    let initial = &initial_set(&model, dt)[0];
    let report = continuous_dependence_experiment(&model, &model.clone(), initial, 2.0, dt).unwrap();
    assert!(report.difference_energy.iter().all(|e| *e == 0.0));
    assert_eq!(report.sup_phase_distance_sq, 0.0);
    assert_eq!(report.ratio(), None);
}

#[test]
fn continuous_dependence_fit_respects_bound() {
    let domain = DomainSpec::with_modes(1, 8).unwrap();
    let reference = Model::new(domain, DampingSpec::paper_family(0.0, 0.5))
        .with_kernel(MemoryKernel::new(1.0, 1.0))
        .with_nonlinearity(NonlinearitySpec::cubic());
    let dt = 0.01;
    let initial = &initial_set(&reference, dt)[0];
    let mut previous = 0.0;
    for eps in [0.05, 0.1, 0.2] {
        let perturbed = reference.clone().with_damping(DampingSpec::paper_family(eps, 0.5));
        let report = continuous_dependence_experiment(&perturbed, &reference, initial, 3.0, dt).unwrap();
        assert!((report.damping_gap - eps).abs() < 1e-15);
        assert!(report.fitted_kb.unwrap() <= report.kb_bound);
        // larger damping gap, larger difference
        assert!(report.sup_phase_distance_sq > previous);
        previous = report.sup_phase_distance_sq;
    }
    let mismatched = reference.clone().with_nonlinearity(NonlinearitySpec::zero());
    assert!(continuous_dependence_experiment(&mismatched, &reference, initial, 1.0, dt).is_err());
}
