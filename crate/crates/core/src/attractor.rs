//! Distances between phase-space points and sets, finite samplings of
//! attractor sections, continuous dependence on the damping, and the
//! perturbation sweep.

use alloc::format;
use alloc::vec::Vec;

use crate::dynamics::{linf_distance, DampingFamily, DampingKind, Model, PlateState, Stepper};
use crate::energy::{least_squares_slope, EnergyConstants};
use crate::math;
use crate::memory::memory_distance_sq;
use crate::spectral::{embedding_constants, SineTransform, SpectralField};
use crate::{Error, Result};

fn check_compatible(a: &PlateState, b: &PlateState) -> Result<()> {
    if a.domain() != b.domain() {
        return Err(Error::Argument("states live on different domains".into()));
    }
    match (&a.history, &b.history) {
        (None, None) => Ok(()),
        (Some(x), Some(y)) if x.compatible_with(y) => Ok(()),
        _ => Err(Error::Argument("states carry incompatible histories".into())),
    }
}

fn history_distance_sq(a: &PlateState, b: &PlateState) -> Result<f64> {
    match (&a.history, &b.history) {
        (Some(x), Some(y)) => memory_distance_sq(x, y),
        _ => Ok(0.0),
    }
}

/// `E_w = ‖w_t‖² + ‖∇w_t‖² + ‖Δw‖² + ‖ξ‖²_{μ,2}` for `w = u_a - u_b`, `ξ = η_a - η_b`.
pub fn difference_energy(a: &PlateState, b: &PlateState) -> Result<f64> {
    check_compatible(a, b)?;
    let w = &a.u - &b.u;
    let wt = &a.v - &b.v;
    Ok(wt.l2_norm_sq() + wt.grad_norm_sq() + w.lap_norm_sq() + history_distance_sq(a, b)?)
}

/// `‖a - b‖²_𝓗 = ‖Δw‖² + ‖∇w_t‖² + ‖ξ‖²_{μ,2}`.
pub fn phase_distance_sq(a: &PlateState, b: &PlateState) -> Result<f64> {
    check_compatible(a, b)?;
    let w = &a.u - &b.u;
    let wt = &a.v - &b.v;
    Ok(wt.grad_norm_sq() + w.lap_norm_sq() + history_distance_sq(a, b)?)
}

/// `sup_{x∈a} inf_{y∈b} dist(x, y)` by brute force.
pub fn directed_hausdorff<T>(a: &[T], b: &[T], mut dist: impl FnMut(&T, &T) -> Result<f64>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("semidistance needs nonempty sets".into()));
    }
    let mut sup = 0.0f64;
    for x in a {
        let mut inf = f64::INFINITY;
        for y in b {
            let d = dist(x, y)?;
            if d < inf {
                inf = d;
                // cannot raise the supremum any further
                if inf <= sup {
                    break;
                }
            }
        }
        sup = sup.max(inf);
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudMetadata {
    pub damping_epsilon: f64,
    /// Symbol shift of each point.
    pub shifts: Vec<f64>,
    /// Sampling time of each point.
    pub times: Vec<f64>,
    /// Some trajectory was still outside the absorbing ball when collection started.
    pub transient_warning: bool,
}

/// Finite sample of an attractor section.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotCloud {
    pub points: Vec<PlateState>,
    pub metadata: CloudMetadata,
}

impl SnapshotCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `‖y‖_𝓗` over the cloud.
    pub fn max_phase_norm(&self) -> f64 {
        self.points
            .iter()
            .map(|p| math::sqrt(p.phase_norm_sq()))
            .fold(0.0, f64::max)
    }
}

/// `dist_𝓗(A, B)` in the phase norm.
pub fn hausdorff_semidistance(a: &SnapshotCloud, b: &SnapshotCloud) -> Result<f64> {
    directed_hausdorff(&a.points, &b.points, |x, y| phase_distance_sq(x, y).map(math::sqrt))
}

/// How trajectories are sampled after the transient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub dt: f64,
    pub t_transient: f64,
    pub t_sample: f64,
    /// Total number of snapshots, split across trajectories.
    pub n_snapshots: usize,
    /// Symbol shifts per period for non-autonomous forcing.
    pub symbol_samples: usize,
}

/// Slack added to `ρ₀` in ball checks, which matters when `ρ₀ = 0`.
pub const BALL_TOLERANCE: f64 = 1e-4;

fn damping_epsilon(model: &Model) -> f64 {
    match model.damping.kind {
        DampingKind::PaperFamily { epsilon, .. } => epsilon,
        _ => f64::NAN,
    }
}

fn steps_for(span: f64, dt: f64) -> usize {
    math::round(span / dt).max(0.0) as usize
}

/// Runs every initial state under every sampled symbol, discards the
/// transient and collects equally spaced snapshots.
pub fn omega_limit_approx(model: &Model, initial: &[PlateState], params: &SamplingParams) -> Result<SnapshotCloud> {
    if initial.is_empty() {
        return Err(Error::Argument("initial set is empty".into()));
    }
    if params.n_snapshots == 0 {
        return Err(Error::Argument("need at least one snapshot".into()));
    }
    if !(params.t_transient >= 0.0 && params.t_sample >= 0.0) {
        return Err(Error::Argument("sampling times must be nonnegative".into()));
    }
    let symbols = model.forcing.symbol_samples(params.symbol_samples);
    let rho0 = EnergyConstants::new(model).rho0;
    let ball = rho0 + BALL_TOLERANCE;
    let runs = initial.len() * symbols.len();
    let transient_steps = steps_for(params.t_transient, params.dt);
    let window_steps = steps_for(params.t_sample, params.dt);
    let check_from = transient_steps.saturating_sub(window_steps.max(1));

    let mut points = Vec::with_capacity(params.n_snapshots);
    let mut shifts = Vec::with_capacity(params.n_snapshots);
    let mut times = Vec::with_capacity(params.n_snapshots);
    let mut warning = false;
    let mut run = 0;
    for state in initial {
        for (shift, forcing) in &symbols {
            let count = params.n_snapshots / runs + usize::from(run < params.n_snapshots % runs);
            run += 1;
            if count == 0 {
                continue;
            }
            let sample_steps: Vec<usize> = if count == 1 {
                alloc::vec![transient_steps + window_steps]
            } else {
                (0..count)
                    .map(|j| {
                        transient_steps + math::round(window_steps as f64 * j as f64 / (count - 1) as f64) as usize
                    })
                    .collect()
            };
            let shifted = model.clone().with_forcing(forcing.clone());
            let mut stepper = Stepper::new(&shifted, params.dt)?;
            let mut current = state.clone();
            let t0 = current.t;
            let mut next = 0;
            let last = *sample_steps.last().expect("count > 0");
            for i in 0..=last {
                if i > 0 {
                    stepper.step(&mut current)?;
                    current.t = t0 + i as f64 * params.dt;
                }
                if i >= check_from && i <= transient_steps && math::sqrt(current.phase_norm_sq()) > ball {
                    warning = true;
                }
                while next < sample_steps.len() && sample_steps[next] == i {
                    points.push(current.clone());
                    shifts.push(*shift);
                    times.push(current.t);
                    next += 1;
                }
            }
        }
    }
    Ok(SnapshotCloud {
        points,
        metadata: CloudMetadata {
            damping_epsilon: damping_epsilon(model),
            shifts,
            times,
            transient_warning: warning,
        },
    })
}

/// Co-integration of two models that differ only in their damping.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDependence {
    pub times: Vec<f64>,
    /// `E_w(t)`, the left side of the continuous-dependence estimate.
    pub difference_energy: Vec<f64>,
    /// `‖w(t)‖²_𝓗`.
    pub phase_distance_sq: Vec<f64>,
    pub sup_difference_energy: f64,
    pub sup_phase_distance_sq: f64,
    /// `‖a_ε - a₀‖_∞`.
    pub damping_gap: f64,
    /// `max(0, slope)` of `ln E_w` over the second half of the run.
    pub fitted_kb: Option<f64>,
    /// Smallest `K₂` with `E_w ≤ K₂‖a_ε - a₀‖_∞ e^{K_B t}` at every sample.
    pub fitted_k2: Option<f64>,
    /// `sup ‖u_t‖²` of the perturbed trajectory.
    pub k1: f64,
    /// `‖a_ε - a₀‖_∞ + M_f(1 + R^p)/√λ₁`, `R` the largest grid value of `|u|`, `|v|`.
    pub kb_bound: f64,
    /// `K₁/K_B`.
    pub k2_bound: f64,
}

impl ContinuousDependence {
    /// `sup ‖w‖²_𝓗 / ‖a_ε - a₀‖_∞`, undefined for equal dampings.
    pub fn ratio(&self) -> Option<f64> {
        (self.damping_gap > 0.0).then(|| self.sup_phase_distance_sq / self.damping_gap)
    }
}

fn same_except_damping(a: &Model, b: &Model) -> bool {
    a.domain == b.domain
        && a.kernel == b.kernel
        && a.tail_tolerance == b.tail_tolerance
        && a.nonlinearity == b.nonlinearity
        && a.forcing == b.forcing
        && a.coupling == b.coupling
}

fn grid_sup(transform: &SineTransform, field: &SpectralField, buffer: &mut [f64]) -> f64 {
    transform.to_physical_into(field.coeffs(), buffer);
    buffer.iter().map(|x| math::abs(*x)).fold(0.0, f64::max)
}

/// Integrates both models from `initial` over `[0, horizon]` and records the
/// difference at every step.
pub fn continuous_dependence_experiment(
    model_eps: &Model,
    model_0: &Model,
    initial: &PlateState,
    horizon: f64,
    dt: f64,
) -> Result<ContinuousDependence> {
    if !same_except_damping(model_eps, model_0) {
        return Err(Error::Argument("models must differ only in their damping".into()));
    }
    let mut stepper_eps = Stepper::new(model_eps, dt)?;
    let mut stepper_0 = Stepper::new(model_0, dt)?;
    let steps = steps_for(horizon, dt);
    let transform = SineTransform::new(model_eps.domain);
    let mut buffer = alloc::vec![0.0; model_eps.domain.grid_len()];

    let mut a = initial.clone();
    let mut b = initial.clone();
    let t0 = initial.t;
    let mut times = Vec::with_capacity(steps + 1);
    let mut ew = Vec::with_capacity(steps + 1);
    let mut ph = Vec::with_capacity(steps + 1);
    let mut k1 = 0.0f64;
    let mut r = 0.0f64;
    for i in 0..=steps {
        if i > 0 {
            stepper_eps.step(&mut a)?;
            stepper_0.step(&mut b)?;
            a.t = t0 + i as f64 * dt;
            b.t = a.t;
        }
        times.push(a.t);
        ew.push(difference_energy(&a, &b)?);
        ph.push(phase_distance_sq(&a, &b)?);
        k1 = k1.max(a.v.l2_norm_sq());
        for field in [&a.u, &a.v, &b.u, &b.v] {
            r = r.max(grid_sup(&transform, field, &mut buffer));
        }
    }

    let damping_gap = linf_distance(&model_eps.damping, &model_0.damping);
    let lambda1 = embedding_constants(&model_eps.domain).lambda1;
    let nl = &model_eps.nonlinearity;
    let kb_bound = damping_gap + nl.m_f * (1.0 + math::powf(r, nl.growth_exponent)) / math::sqrt(lambda1);
    let k2_bound = if kb_bound > 0.0 { k1 / kb_bound } else { 0.0 };

    let (mut fitted_kb, mut fitted_k2) = (None, None);
    if damping_gap > 0.0 {
        let half = t0 + 0.5 * horizon;
        let tail: Vec<(f64, f64)> = times
            .iter()
            .zip(&ew)
            .filter(|(t, e)| **t >= half && **e > 0.0)
            .map(|(t, e)| (*t, math::ln(*e)))
            .collect();
        let kb = if tail.len() >= 2 {
            least_squares_slope(&tail).max(0.0)
        } else {
            0.0
        };
        let k2 = times
            .iter()
            .zip(&ew)
            .filter(|(t, _)| **t > t0)
            .map(|(t, e)| e / (damping_gap * math::exp(kb * (t - t0))))
            .fold(0.0, f64::max);
        fitted_kb = Some(kb);
        fitted_k2 = Some(k2);
    }

    Ok(ContinuousDependence {
        sup_difference_energy: ew.iter().copied().fold(0.0, f64::max),
        sup_phase_distance_sq: ph.iter().copied().fold(0.0, f64::max),
        times,
        difference_energy: ew,
        phase_distance_sq: ph,
        damping_gap,
        fitted_kb,
        fitted_k2,
        k1,
        kb_bound,
        k2_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub sampling: SamplingParams,
    /// Horizon `T` of the continuous-dependence runs.
    pub horizon: f64,
    /// Required semidistance at the smallest positive `ε`.
    pub tolerance: f64,
    /// Allowed growth factor between consecutive semidistances.
    pub slack: f64,
}

impl SweepParams {
    pub fn new(sampling: SamplingParams, horizon: f64) -> Self {
        Self {
            sampling,
            horizon,
            tolerance: 1e-2,
            slack: 1.25,
        }
    }
}

/// Everything computed for one `ε` of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub epsilon: f64,
    pub cloud: SnapshotCloud,
    pub dependence: Option<ContinuousDependence>,
}

/// Below this, semidistances are treated as round-off in the monotonicity check.
pub const SEMIDISTANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub epsilons: Vec<f64>,
    pub semidistances: Vec<f64>,
    pub ratios: Vec<Option<f64>>,
    pub fitted_k2: Vec<Option<f64>>,
    pub fitted_kb: Vec<Option<f64>>,
    pub tolerance: f64,
    pub slack: f64,
    /// Semidistance at the smallest positive `ε` within tolerance.
    pub within_tolerance: bool,
    /// `d_{i+1} ≤ slack·d_i` along decreasing `ε`.
    pub monotone: bool,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.within_tolerance && self.monotone
    }
}

/// Checks the `ε` list: strictly decreasing, ending in `0`, at least three positive values.
pub fn validate_epsilons(epsilons: &[f64]) -> Result<()> {
    let positive = epsilons.iter().filter(|e| **e > 0.0).count();
    if epsilons.last() != Some(&0.0) || positive < 3 || positive + 1 != epsilons.len() {
        return Err(Error::Argument(format!(
            "sweep needs at least three positive epsilons followed by 0, got {epsilons:?}"
        )));
    }
    if epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Argument(format!(
            "sweep epsilons must decrease, got {epsilons:?}"
        )));
    }
    Ok(())
}

/// Cloud and continuous-dependence run for one family member. The
/// continuous-dependence run starts from the first initial state.
pub fn sweep_member(
    template: &Model,
    family: DampingFamily,
    epsilon: f64,
    initial: &[PlateState],
    params: &SweepParams,
) -> Result<SweepMember> {
    let model = template.clone().with_damping(family.at(epsilon));
    let mut cloud = omega_limit_approx(&model, initial, &params.sampling)?;
    cloud.metadata.damping_epsilon = epsilon;
    let dependence = if epsilon > 0.0 {
        let reference = template.clone().with_damping(family.at(0.0));
        Some(continuous_dependence_experiment(
            &model,
            &reference,
            &initial[0],
            params.horizon,
            params.sampling.dt,
        )?)
    } else {
        None
    };
    Ok(SweepMember {
        epsilon,
        cloud,
        dependence,
    })
}

/// Semidistances to the `ε = 0` member and the pass flags.
pub fn assemble_sweep(members: &[SweepMember], params: &SweepParams) -> Result<SweepReport> {
    let epsilons: Vec<f64> = members.iter().map(|m| m.epsilon).collect();
    validate_epsilons(&epsilons)?;
    let reference = &members[members.len() - 1].cloud;
    let mut semidistances = Vec::with_capacity(members.len());
    for member in members {
        semidistances.push(hausdorff_semidistance(&member.cloud, reference)?);
    }
    let pick = |f: fn(&ContinuousDependence) -> Option<f64>| -> Vec<Option<f64>> {
        members.iter().map(|m| m.dependence.as_ref().and_then(f)).collect()
    };
    let positive = &semidistances[..semidistances.len() - 1];
    let within_tolerance = positive.last().is_some_and(|d| *d <= params.tolerance);
    let monotone = positive
        .windows(2)
        .all(|w| w[1] <= params.slack * w[0] + SEMIDISTANCE_FLOOR);
    Ok(SweepReport {
        ratios: pick(|d| d.ratio()),
        fitted_k2: pick(|d| d.fitted_k2),
        fitted_kb: pick(|d| d.fitted_kb),
        epsilons,
        semidistances,
        tolerance: params.tolerance,
        slack: params.slack,
        within_tolerance,
        monotone,
    })
}

/// Sequential sweep over `epsilons` (decreasing, ending in `0`).
pub fn epsilon_sweep(
    template: &Model,
    family: DampingFamily,
    epsilons: &[f64],
    initial: &[PlateState],
    params: &SweepParams,
) -> Result<SweepReport> {
    validate_epsilons(epsilons)?;
    let members = epsilons
        .iter()
        .map(|&e| sweep_member(template, family, e, initial, params))
        .collect::<Result<Vec<_>>>()?;
    assemble_sweep(&members, params)
}
