//! The evolution system for `(u, u_t, η^t)`: model assembly, phase-space
//! states and time integration.

mod damping;
mod forcing;
mod integrator;
mod nonlinearity;

pub use damping::{linf_distance, DampingFamily, DampingKind, DampingSpec};
pub use forcing::{translation_bounded_norm, ForcingSpec};
pub use integrator::{rhs, simulate, step, MemoryCoupling, Observer, Stepper, Trajectory};
pub use nonlinearity::{admissible_exponent, NonlinearityKind, NonlinearitySpec};

use alloc::format;
use alloc::vec::Vec;

use crate::memory::{memory_norm_sq, validate_kernel, HistoryField, MemoryKernel};
use crate::spectral::{DomainSpec, SpectralField};
use crate::{Error, Result};

/// `a(t)` at time `t` for `spec`.
pub fn eval_damping(spec: &DampingSpec, t: f64) -> f64 {
    spec.eval(t)
}

/// Pointwise `(f(u), F(u))`.
pub fn eval_nonlinearity(spec: &NonlinearitySpec, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.eval(u)
}

/// Everything that defines the equation apart from the state.
///
/// Without a kernel the memory term is absent and states carry no history.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub domain: DomainSpec,
    pub kernel: Option<MemoryKernel>,
    /// Tail tolerance for kernel validation; `None` means `1e-8·μ₀`.
    pub tail_tolerance: Option<f64>,
    pub damping: DampingSpec,
    pub nonlinearity: NonlinearitySpec,
    pub forcing: ForcingSpec,
    pub coupling: MemoryCoupling,
}

impl Model {
    /// Memory-free, unforced model with `f = 0`.
    pub fn new(domain: DomainSpec, damping: DampingSpec) -> Self {
        Self {
            domain,
            kernel: None,
            tail_tolerance: None,
            damping,
            nonlinearity: NonlinearitySpec::zero(),
            forcing: ForcingSpec::Zero,
            coupling: MemoryCoupling::default(),
        }
    }

    pub fn with_kernel(mut self, kernel: MemoryKernel) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn with_tail_tolerance(mut self, tolerance: f64) -> Self {
        self.tail_tolerance = Some(tolerance);
        self
    }

    pub fn with_nonlinearity(mut self, nonlinearity: NonlinearitySpec) -> Self {
        self.nonlinearity = nonlinearity;
        self
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_coupling(mut self, coupling: MemoryCoupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_damping(mut self, damping: DampingSpec) -> Self {
        self.damping = damping;
        self
    }

    /// `μ₀`, zero without memory.
    pub fn kernel_mass(&self) -> f64 {
        self.kernel.map_or(0.0, |k| k.mass())
    }

    /// `δ`, `+∞` without memory (no constraint from the memory side).
    pub fn decay_rate(&self) -> f64 {
        self.kernel.map_or(f64::INFINITY, |k| k.decay_rate)
    }

    /// Largest admissible time step `2.5/λ_max`.
    pub fn stability_limit(&self) -> f64 {
        2.5 / self.domain.max_eigenvalue()
    }

    /// Runs every validator and reports all failures together.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if let Some(kernel) = &self.kernel {
            let tolerance = self.tail_tolerance.unwrap_or_else(|| kernel.default_tail_tolerance());
            let report = validate_kernel(kernel, tolerance);
            for failure in report.failures() {
                errors.push(format!(
                    "kernel fails {}: {}",
                    failure.condition.label(),
                    failure.detail
                ));
            }
        }
        errors.extend(self.damping.validate());
        errors.extend(self.nonlinearity.validate(self.domain.dim()));
        errors.extend(self.forcing.validate(&self.domain));
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errors))
        }
    }
}

/// A point `(u, u_t, η^t)` of the phase space together with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateState {
    pub t: f64,
    pub u: SpectralField,
    pub v: SpectralField,
    /// Present exactly when the model has a kernel.
    pub history: Option<HistoryField>,
}

impl PlateState {
    /// `(u₀, v₀)` with flat prehistory (zero history on a lag grid of spacing `dt`).
    pub fn new(model: &Model, u: SpectralField, v: SpectralField, dt: f64) -> Result<Self> {
        if *u.domain() != model.domain || *v.domain() != model.domain {
            return Err(Error::Argument("initial data on a different domain".into()));
        }
        let history = match model.kernel {
            Some(kernel) => Some(HistoryField::zero(model.domain, kernel, dt)?),
            None => None,
        };
        Ok(Self { t: 0.0, u, v, history })
    }

    pub fn at_rest(model: &Model, dt: f64) -> Result<Self> {
        Self::new(
            model,
            SpectralField::zeros(model.domain),
            SpectralField::zeros(model.domain),
            dt,
        )
    }

    pub fn with_history(mut self, history: HistoryField) -> Self {
        self.history = Some(history);
        self
    }

    pub fn domain(&self) -> &DomainSpec {
        self.u.domain()
    }

    /// `‖Δu‖² + ‖∇u_t‖² + ‖η‖²_{μ,2}`.
    pub fn phase_norm_sq(&self) -> f64 {
        self.u.lap_norm_sq() + self.v.grad_norm_sq() + self.history.as_ref().map_or(0.0, memory_norm_sq)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.history.as_ref().is_none_or(|h| h.is_finite())
    }
}
