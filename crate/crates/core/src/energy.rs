//! Energy functionals and the dissipation estimates built on them.
//!
//! ```text
//! E   = ½‖u_t‖² + ½‖∇u_t‖² + ½‖Δu‖² + ½‖η‖²_{μ,2} + ∫ F(u)
//! Ψ   = (u_t, u) + (∇u_t, ∇u)
//! E_ε = E + εΨ
//! ```
//!
//! Two different small parameters appear in the estimates: the Young
//! parameter used to bound `dΨ/dt` ([`EnergyConstants::young_eps1`]) and the
//! admissible perturbation size ([`EnergyConstants::pert_eps1`]).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{Model, Observer, PlateState};
use crate::math;
use crate::memory::{memory_dissipation_bound, memory_norm_sq};
use crate::spectral::{embedding_constants, SineTransform};
use crate::{Error, Result};

/// Every constant of the decay argument, computed from the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConstants {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu0: f64,
    /// `δ`, infinite without memory.
    pub delta: f64,
    pub a0: f64,
    pub a1: f64,
    pub c_f: f64,
    /// `|Ω| = π^d`.
    pub volume: f64,
    /// `‖g₀‖²_{L_b²}` in closed form.
    pub forcing_bound: f64,
    /// `max{1/λ₀ + 1, 1/λ₁ + 1/λ₂}`, so that `|Ψ| ≤ C₁(E + C_f|Ω|)`.
    pub c1: f64,
    /// Young parameter `1/(4(μ₀ + a₁²/λ₁ + 1/λ₁ + 1/λ₁))`, half the largest
    /// value keeping the `‖Δu‖²` coefficient in `dΨ/dt` negative.
    pub young_eps1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `min{1/C₂, δ/(2C₃)}`.
    pub pert_eps1: f64,
    /// `ε₂ = min{1/(2C₁), pert_eps1}`.
    pub eps2: f64,
    /// `1/(4a₀) + 1/(4·young_eps1)`.
    pub c4: f64,
    /// `C = max{8, 6C₄/ε₂}`.
    pub c_absorb: f64,
    /// `ρ₀ = 2C(C_f|Ω| + ‖g₀‖²_{L_b²})`.
    pub rho0: f64,
}

impl EnergyConstants {
    pub fn new(model: &Model) -> Self {
        let emb = embedding_constants(&model.domain);
        let (l0, l1, l2) = (emb.lambda0, emb.lambda1, emb.lambda2);
        let mu0 = model.kernel_mass();
        let delta = model.decay_rate();
        let a0 = model.damping.lower;
        let a1 = model.damping.upper;
        let c_f = model.nonlinearity.c_f;
        let volume = model.domain.volume();
        let forcing_bound = model.forcing.translation_bound();

        let c1 = (1.0 / l0 + 1.0).max(1.0 / l1 + 1.0 / l2);
        let young_eps1 = 1.0 / (4.0 * (mu0 + a1 * a1 / l1 + 1.0 / l1 + 1.0 / l1));
        let c2 = 1.5 / l0 + 1.5 + 1.0 / (4.0 * young_eps1 * l0) + 1.0 / (4.0 * young_eps1);
        let c3 = 0.5 + 1.0 / (4.0 * young_eps1);
        let pert_eps1 = (1.0 / c2).min(delta / (2.0 * c3));
        let eps2 = (1.0 / (2.0 * c1)).min(pert_eps1);
        let c4 = 1.0 / (4.0 * a0) + 1.0 / (4.0 * young_eps1);
        let c_absorb = 8.0f64.max(6.0 * c4 / eps2);
        let rho0 = 2.0 * c_absorb * (c_f * volume + forcing_bound);
        Self {
            lambda0: l0,
            lambda1: l1,
            lambda2: l2,
            mu0,
            delta,
            a0,
            a1,
            c_f,
            volume,
            forcing_bound,
            c1,
            young_eps1,
            c2,
            c3,
            pert_eps1,
            eps2,
            c4,
            c_absorb,
            rho0,
        }
    }

    /// `3E(0)e^{-2εt/3} + 3C_f|Ω| + (3C₄/ε)‖g₀‖²_{L_b²}`.
    pub fn envelope(&self, e0: f64, t: f64, eps: f64) -> f64 {
        3.0 * e0 * math::exp(-2.0 * eps * t / 3.0)
            + 3.0 * self.c_f * self.volume
            + 3.0 * self.c4 / eps * self.forcing_bound
    }
}

/// `ρ₀` for the model.
pub fn absorbing_radius(model: &Model) -> f64 {
    EnergyConstants::new(model).rho0
}

/// One record along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: f64,
    pub psi: f64,
    /// `E + ε₂Ψ`.
    pub e_eps: f64,
    pub phase_norm_sq: f64,
    /// `-‖∇u_t‖² - (η, η_s)_{μ,2} - (a u_t, u_t) + (g, u_t)`.
    pub dedt_identity_rhs: f64,
    /// `-‖∇u_t‖² - (δ/2)‖η‖²_{μ,2} + ‖g‖²/(4a₀)`.
    pub dissipation_rhs_312: f64,
    pub memory_norm_sq: f64,
    pub grad_ut_norm_sq: f64,
    pub forcing_norm_sq: f64,
    /// Centered difference of `E`; absent at the ends of a run.
    pub dedt_fd: Option<f64>,
}

impl EnergyReport {
    /// `|dE/dt_fd - identity rhs|`.
    pub fn identity_residual(&self) -> Option<f64> {
        self.dedt_fd.map(|d| math::abs(d - self.dedt_identity_rhs))
    }
}

/// Evaluates the functionals for one model, caching the transform.
#[derive(Debug, Clone)]
pub struct EnergyMeter<'m> {
    model: &'m Model,
    constants: EnergyConstants,
    transform: Option<SineTransform>,
    grid: Vec<f64>,
    forcing: Vec<f64>,
}

impl<'m> EnergyMeter<'m> {
    pub fn new(model: &'m Model) -> Self {
        let transform = (!model.nonlinearity.is_zero()).then(|| SineTransform::new(model.domain));
        let grid = vec![
            0.0;
            if transform.is_some() {
                model.domain.grid_len()
            } else {
                0
            }
        ];
        Self {
            model,
            constants: EnergyConstants::new(model),
            transform,
            grid,
            forcing: vec![0.0; model.domain.len()],
        }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn constants(&self) -> &EnergyConstants {
        &self.constants
    }

    /// `∫_Ω F(u)` by grid quadrature.
    pub fn potential(&mut self, state: &PlateState) -> Result<f64> {
        let Some(transform) = &self.transform else {
            return Ok(0.0);
        };
        transform.to_physical_into(state.u.coeffs(), &mut self.grid);
        let mut total = 0.0;
        for &s in &self.grid {
            total += self.model.nonlinearity.primitive(s)?;
        }
        Ok(transform.cell_volume() * total)
    }

    pub fn energy(&mut self, state: &PlateState) -> Result<f64> {
        let memory = state.history.as_ref().map_or(0.0, memory_norm_sq);
        Ok(
            0.5 * (state.v.l2_norm_sq() + state.v.grad_norm_sq() + state.u.lap_norm_sq() + memory)
                + self.potential(state)?,
        )
    }

    /// `E + εΨ` for `0 < ε ≤ ε₂`.
    pub fn perturbed_energy(&mut self, state: &PlateState, eps: f64) -> Result<f64> {
        check_eps(eps, &self.constants)?;
        Ok(self.energy(state)? + eps * psi(state))
    }

    /// Full record with `dedt_fd` unset.
    pub fn report(&mut self, state: &PlateState) -> Result<EnergyReport> {
        let model = self.model;
        let c = self.constants;
        let memory = state.history.as_ref().map_or(0.0, memory_norm_sq);
        let memory_term = state.history.as_ref().map_or(0.0, |h| memory_dissipation_bound(h).0);
        let grad_v = state.v.grad_norm_sq();
        let l2_v = state.v.l2_norm_sq();
        let energy = 0.5 * (l2_v + grad_v + state.u.lap_norm_sq() + memory) + self.potential(state)?;
        let psi = psi(state);
        let a = model.damping.eval(state.t);
        model.forcing.eval_into(state.t, &mut self.forcing);
        let parseval = model.domain.parseval_factor();
        let g_sq = parseval * self.forcing.iter().map(|g| g * g).sum::<f64>();
        let g_v = parseval
            * self
                .forcing
                .iter()
                .zip(state.v.coeffs())
                .map(|(g, v)| g * v)
                .sum::<f64>();
        let memory_decay = if memory == 0.0 { 0.0 } else { 0.5 * c.delta * memory };
        Ok(EnergyReport {
            t: state.t,
            energy,
            psi,
            e_eps: energy + c.eps2 * psi,
            phase_norm_sq: state.u.lap_norm_sq() + grad_v + memory,
            dedt_identity_rhs: -grad_v + memory_term - a * l2_v + g_v,
            dissipation_rhs_312: -grad_v - memory_decay + g_sq / (4.0 * c.a0),
            memory_norm_sq: memory,
            grad_ut_norm_sq: grad_v,
            forcing_norm_sq: g_sq,
            dedt_fd: None,
        })
    }
}

fn check_eps(eps: f64, c: &EnergyConstants) -> Result<()> {
    if eps > 0.0 && eps <= c.eps2 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "perturbation size {eps} outside (0, eps2] with eps2 = {}",
            c.eps2
        )))
    }
}

/// `E` of a state.
pub fn energy(state: &PlateState, model: &Model) -> Result<f64> {
    EnergyMeter::new(model).energy(state)
}

/// `Ψ = (π/2)^d Σ_k (1 + λ_k) v_k u_k`.
pub fn psi(state: &PlateState) -> f64 {
    let domain = state.u.domain();
    let sum: f64 = state
        .u
        .coeffs()
        .iter()
        .zip(state.v.coeffs())
        .enumerate()
        .map(|(k, (u, v))| (1.0 + domain.eigenvalue(k)) * u * v)
        .sum();
    domain.parseval_factor() * sum
}

/// `E_ε = E + εΨ`, requiring `0 < ε ≤ ε₂`.
pub fn perturbed_energy(state: &PlateState, model: &Model, eps: f64) -> Result<f64> {
    EnergyMeter::new(model).perturbed_energy(state, eps)
}

/// Both sides of the energy identity at `state`, given `E` one step before
/// and one step after.
pub fn energy_derivative_identity(
    e_prev: f64,
    e_next: f64,
    dt: f64,
    state: &PlateState,
    model: &Model,
) -> Result<(f64, f64)> {
    let report = EnergyMeter::new(model).report(state)?;
    Ok(((e_next - e_prev) / (2.0 * dt), report.dedt_identity_rhs))
}

/// `dE/dt_fd + ‖∇u_t‖² + (δ/2)‖η‖²_{μ,2} - ‖g‖²/(4a₀)` with `δ` and `a₀`
/// taken from `model`; nonpositive when the dissipation inequality holds.
pub fn dissipation_residual(report: &EnergyReport, model: &Model) -> Option<f64> {
    let fd = report.dedt_fd?;
    let memory_decay = if report.memory_norm_sq == 0.0 {
        0.0
    } else {
        0.5 * model.decay_rate() * report.memory_norm_sq
    };
    let bound = -report.grad_ut_norm_sq - memory_decay + report.forcing_norm_sq / (4.0 * model.damping.lower);
    Some(fd - bound)
}

/// Collects an [`EnergyReport`] every `stride` steps, with centered
/// differences of `E` filled in once the following step is known.
#[derive(Debug, Clone)]
pub struct EnergyRecorder<'m> {
    meter: EnergyMeter<'m>,
    stride: usize,
    reports: Vec<EnergyReport>,
    previous: Option<(f64, f64)>,
    // report index waiting for the next E, with E one step before it
    pending: Option<(usize, f64, f64)>,
}

impl<'m> EnergyRecorder<'m> {
    pub fn new(model: &'m Model, stride: usize) -> Self {
        Self {
            meter: EnergyMeter::new(model),
            stride: stride.max(1),
            reports: Vec::new(),
            previous: None,
            pending: None,
        }
    }

    pub fn reports(&self) -> &[EnergyReport] {
        &self.reports
    }

    pub fn into_reports(self) -> Vec<EnergyReport> {
        self.reports
    }

    pub fn constants(&self) -> &EnergyConstants {
        self.meter.constants()
    }
}

impl Observer for EnergyRecorder<'_> {
    fn observe(&mut self, step: usize, state: &PlateState) -> Result<()> {
        let phase = step % self.stride;
        // E is only needed at recorded steps and their two neighbours
        if phase != 0 && phase + 1 != self.stride && self.pending.is_none() {
            self.previous = None;
            return Ok(());
        }
        let report = if phase == 0 {
            Some(self.meter.report(state)?)
        } else {
            None
        };
        let (t, e) = match &report {
            Some(r) => (r.t, r.energy),
            None => (state.t, self.meter.energy(state)?),
        };
        if let Some((index, t_prev, e_prev)) = self.pending.take() {
            self.reports[index].dedt_fd = Some((e - e_prev) / (t - t_prev));
        }
        if let Some(report) = report {
            if let Some((t_prev, e_prev)) = self.previous {
                self.pending = Some((self.reports.len(), t_prev, e_prev));
            }
            self.reports.push(report);
        }
        self.previous = Some((t, e));
        Ok(())
    }
}

/// First sample outside the decay envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeViolation {
    pub t: f64,
    pub energy: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub eps: f64,
    pub first_violation: Option<EnvelopeViolation>,
    /// Least-squares slope of `ln E` over samples with `E ≥ 1e-10·E(0)`;
    /// only for unforced runs with `C_f = 0`.
    pub fitted_slope: Option<f64>,
    /// `-2ε/3`.
    pub envelope_slope: f64,
    pub samples_in_fit: usize,
}

impl DecayFit {
    pub fn inside_envelope(&self) -> bool {
        self.first_violation.is_none()
    }

    /// Fitted slope no larger than `-2ε/3 + slack` (vacuous without a fit).
    pub fn slope_ok(&self, slack: f64) -> bool {
        self.fitted_slope.is_none_or(|s| s <= self.envelope_slope + slack)
    }
}

/// Compares `(t, E)` samples with the envelope for perturbation size `eps`.
pub fn decay_envelope_check(samples: &[(f64, f64)], model: &Model, eps: f64) -> Result<DecayFit> {
    let constants = EnergyConstants::new(model);
    check_eps(eps, &constants)?;
    let Some(&(t0, e0)) = samples.first() else {
        return Err(Error::Argument("no energy samples".into()));
    };
    let first_violation = samples.iter().find_map(|&(t, e)| {
        let envelope = constants.envelope(e0, t - t0, eps);
        (e > envelope * (1.0 + 1e-12) + 1e-300).then_some(EnvelopeViolation { t, energy: e, envelope })
    });
    let mut fitted_slope = None;
    let mut samples_in_fit = 0;
    if model.forcing.is_zero() && constants.c_f == 0.0 && e0 > 0.0 {
        let floor = 1e-10 * e0;
        let points: Vec<(f64, f64)> = samples
            .iter()
            .take_while(|&&(_, e)| e >= floor)
            .map(|&(t, e)| (t, math::ln(e)))
            .collect();
        samples_in_fit = points.len();
        if points.len() >= 2 {
            fitted_slope = Some(least_squares_slope(&points));
        }
    }
    Ok(DecayFit {
        eps,
        first_violation,
        fitted_slope,
        envelope_slope: -2.0 * eps / 3.0,
        samples_in_fit,
    })
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
