//! Classical RK4 for `(u, v)` followed by the exact shift of the history.
//!
//! Per mode the velocity equation reads
//! `(1 + λ) v' = -a(t) v - λ² u - M - λ v - f̂(u) + ĝ(t)` where
//! `M = λ² Σ_j w_j μ(s_j) η_j` is the memory term. At the start of every step
//! `M` is computed from the history. Inside the step it is either held fixed
//! ([`MemoryCoupling::Frozen`]) or carried along the stages by
//! `M' = λ² W v - δ M` with `W = Σ_j w_j μ(s_j)` ([`MemoryCoupling::Evolved`]),
//! which is what the exact transport implies for an exponential kernel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Model, PlateState};
use crate::memory::memory_integral_into;
use crate::spectral::{SineTransform, SpectralField};
use crate::{Error, Result};

/// Treatment of the memory term inside one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryCoupling {
    /// Memory term fixed at its value from the history at the step start;
    /// first order in `dt`.
    Frozen,
    /// Memory term integrated along the stages from the history value.
    #[default]
    Evolved,
}

/// Receives the initial state (step 0) and the state after every step.
pub trait Observer {
    fn observe(&mut self, step: usize, state: &PlateState) -> Result<()>;
}

impl<F: FnMut(usize, &PlateState)> Observer for F {
    fn observe(&mut self, step: usize, state: &PlateState) -> Result<()> {
        self(step, state);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_state: PlateState,
    pub steps: usize,
}

/// Reusable integrator for one model and step size.
#[derive(Debug, Clone)]
pub struct Stepper<'m> {
    model: &'m Model,
    dt: f64,
    steps_taken: usize,
    lambda: Vec<f64>,
    transform: Option<SineTransform>,
    grid: Vec<f64>,
    scratch: Vec<f64>,
    memory: Vec<f64>,
    memory_start: Vec<f64>,
    // λ²W per mode, zero without memory
    memory_gain: Vec<f64>,
    forcing: Vec<f64>,
    stage: [Vec<f64>; 2],
    km: [Vec<f64>; 4],
    ku: [Vec<f64>; 4],
    kv: [Vec<f64>; 4],
}

impl<'m> Stepper<'m> {
    /// Validates the model and the step size (`0 < dt ≤ 2.5/λ_max`).
    pub fn new(model: &'m Model, dt: f64) -> Result<Self> {
        model.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Argument(format!("time step must be positive, got {dt}")));
        }
        if dt > model.stability_limit() {
            return Err(Error::Config(format!(
                "time step {dt} exceeds the stability limit {} = 2.5/lambda_max",
                model.stability_limit()
            )));
        }
        Ok(Self::unchecked(model, dt))
    }

    fn unchecked(model: &'m Model, dt: f64) -> Self {
        let n = model.domain.len();
        let transform = (!model.nonlinearity.is_zero()).then(|| SineTransform::new(model.domain));
        let grid_len = if transform.is_some() {
            model.domain.grid_len()
        } else {
            0
        };
        let lambda = model.domain.eigenvalues();
        let memory_gain = match model.kernel {
            Some(kernel) => match crate::memory::HistoryField::zero(model.domain, kernel, dt) {
                Ok(h) => {
                    let w: f64 = h.quadrature_weights().iter().sum();
                    lambda.iter().map(|l| l * l * w).collect()
                }
                Err(_) => vec![0.0; n],
            },
            None => vec![0.0; n],
        };
        Self {
            model,
            dt,
            steps_taken: 0,
            lambda,
            transform,
            grid: vec![0.0; grid_len],
            scratch: vec![0.0; n],
            memory: vec![0.0; n],
            memory_start: vec![0.0; n],
            memory_gain,
            forcing: vec![0.0; n],
            stage: [vec![0.0; n], vec![0.0; n]],
            km: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            ku: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            kv: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    fn load_memory(&mut self, state: &PlateState) -> Result<()> {
        match (&state.history, self.model.kernel) {
            (Some(history), Some(_)) => {
                memory_integral_into(history, &mut self.memory);
                Ok(())
            }
            (None, None) => {
                self.memory.iter_mut().for_each(|m| *m = 0.0);
                Ok(())
            }
            (None, Some(_)) => Err(Error::Config(
                "model has memory but the state carries no history".into(),
            )),
            (Some(_), None) => Err(Error::Config(
                "state carries a history but the model has no memory".into(),
            )),
        }
    }

    // out = (1+λ)^{-1}[-a v - λ²u - M - λ v - f̂(u) + ĝ(t)]
    fn acceleration(&mut self, t: f64, u: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let a = self.model.damping.eval(t);
        self.model.forcing.eval_into(t, &mut self.forcing);
        if let Some(transform) = &self.transform {
            transform.to_physical_into(u, &mut self.grid);
            self.model.nonlinearity.apply_in_place(&mut self.grid)?;
            transform.to_spectral_into(&self.grid, &mut self.scratch);
        } else {
            self.scratch.iter_mut().for_each(|x| *x = 0.0);
        }
        for k in 0..out.len() {
            let lambda = self.lambda[k];
            let bracket =
                -(a + lambda) * v[k] - lambda * lambda * u[k] - self.memory[k] - self.scratch[k] + self.forcing[k];
            out[k] = bracket / (1.0 + lambda);
        }
        Ok(())
    }

    /// `(u_t, v_t)` at the state, with the memory term from its history.
    pub fn rhs(&mut self, state: &PlateState) -> Result<(SpectralField, SpectralField)> {
        self.load_memory(state)?;
        let domain = self.model.domain;
        let mut dv = vec![0.0; domain.len()];
        self.acceleration(state.t, state.u.coeffs(), state.v.coeffs(), &mut dv)?;
        Ok((state.v.clone(), SpectralField::from_coeffs(domain, dv)?))
    }

    /// Advances `state` by one step in place.
    pub fn step(&mut self, state: &mut PlateState) -> Result<()> {
        let index = self.steps_taken + 1;
        self.load_memory(state)?;
        let dt = self.dt;
        let t = state.t;
        let n = self.model.domain.len();
        let u0 = state.u.coeffs().to_vec();
        let v0 = state.v.coeffs().to_vec();

        let evolve = self.model.coupling == MemoryCoupling::Evolved && self.model.kernel.is_some();
        let delta = self.model.decay_rate();
        self.memory_start.copy_from_slice(&self.memory);

        let mut ku = core::mem::take(&mut self.ku);
        let mut kv = core::mem::take(&mut self.kv);
        let mut km = core::mem::take(&mut self.km);
        let [mut su, mut sv] = core::mem::take(&mut self.stage);
        let offsets = [0.0, 0.5 * dt, 0.5 * dt, dt];
        let mut result = Ok(());
        for s in 0..4 {
            if s == 0 {
                su.copy_from_slice(&u0);
                sv.copy_from_slice(&v0);
            } else {
                let h = offsets[s];
                for k in 0..n {
                    su[k] = u0[k] + h * ku[s - 1][k];
                    sv[k] = v0[k] + h * kv[s - 1][k];
                }
                if evolve {
                    for k in 0..n {
                        self.memory[k] = self.memory_start[k] + h * km[s - 1][k];
                    }
                }
            }
            ku[s].copy_from_slice(&sv);
            if evolve {
                for k in 0..n {
                    km[s][k] = self.memory_gain[k] * sv[k] - delta * self.memory[k];
                }
            }
            if let Err(e) = self.acceleration(t + offsets[s], &su, &sv, &mut kv[s]) {
                result = Err(e);
                break;
            }
        }
        if result.is_ok() {
            let sixth = dt / 6.0;
            let u = state.u.coeffs_mut();
            for k in 0..n {
                u[k] = u0[k] + sixth * (ku[0][k] + 2.0 * ku[1][k] + 2.0 * ku[2][k] + ku[3][k]);
            }
            let v = state.v.coeffs_mut();
            for k in 0..n {
                v[k] = v0[k] + sixth * (kv[0][k] + 2.0 * kv[1][k] + 2.0 * kv[2][k] + kv[3][k]);
            }
        }
        self.ku = ku;
        self.kv = kv;
        self.km = km;
        self.stage = [su, sv];
        result?;

        if let Some(history) = state.history.as_mut() {
            let old = SpectralField::from_coeffs(self.model.domain, u0)?;
            history.advance(&old, &state.u, dt)?;
        }
        state.t = t + dt;
        self.steps_taken = index;
        if !state.is_finite() {
            return Err(Error::Divergence {
                step: index,
                t: state.t,
            });
        }
        Ok(())
    }
}

/// `(u_t, v_t)` for a state under a validated model.
pub fn rhs(state: &PlateState, model: &Model) -> Result<(SpectralField, SpectralField)> {
    model.validate()?;
    Stepper::unchecked(model, 1.0).rhs(state)
}

/// One step from `state`.
pub fn step(state: &PlateState, model: &Model, dt: f64) -> Result<PlateState> {
    let mut next = state.clone();
    Stepper::new(model, dt)?.step(&mut next)?;
    Ok(next)
}

/// Steps from `initial.t` to `t_end`, feeding every state to the observers.
///
/// On divergence the observers have already seen every finite state and the
/// error names the failing step.
pub fn simulate(
    initial: &PlateState,
    model: &Model,
    t_end: f64,
    dt: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(model, dt)?;
    let span = t_end - initial.t;
    if !(span >= -1e-12 * dt) {
        return Err(Error::Argument(format!(
            "end time {t_end} precedes start time {}",
            initial.t
        )));
    }
    let steps = crate::math::round(span / dt).max(0.0) as usize;
    let mut state = initial.clone();
    for observer in observers.iter_mut() {
        observer.observe(0, &state)?;
    }
    for i in 1..=steps {
        stepper.step(&mut state)?;
        // keep sample times free of accumulated rounding
        state.t = initial.t + i as f64 * dt;
        for observer in observers.iter_mut() {
            observer.observe(i, &state)?;
        }
    }
    Ok(Trajectory {
        final_state: state,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DampingSpec, ForcingSpec, NonlinearitySpec};
    use crate::memory::MemoryKernel;
    use crate::spectral::DomainSpec;

    fn linear_model(n: usize) -> Model {
        Model::new(DomainSpec::with_modes(1, n).unwrap(), DampingSpec::constant(1.0))
    }

    #[test]
    fn equilibrium_rhs_is_zero() {
        let model = linear_model(4).with_nonlinearity(NonlinearitySpec::cubic());
        let state = PlateState::at_rest(&model, 0.01).unwrap();
        let (du, dv) = rhs(&state, &model).unwrap();
        assert!(du.is_zero() && dv.is_zero());
    }

    #[test]
    fn single_mode_rhs_closed_form() {
        let model = linear_model(4).with_damping(DampingSpec::constant(0.7));
        let domain = model.domain;
        let u = SpectralField::single_mode(domain, &[3], 0.4).unwrap();
        let v = SpectralField::single_mode(domain, &[3], -1.3).unwrap();
        let state = PlateState::new(&model, u, v, 0.01).unwrap();
        let (_, dv) = rhs(&state, &model).unwrap();
        let lambda = 9.0;
        let expected = -((0.7 + lambda) * -1.3 + lambda * lambda * 0.4) / (1.0 + lambda);
        assert!((dv.coeffs()[2] - expected).abs() < 1e-14);
        assert!(dv.coeffs().iter().enumerate().all(|(k, &c)| k == 2 || c == 0.0));
    }

    #[test]
    fn stationary_forcing_rhs() {
        let domain = DomainSpec::with_modes(1, 3).unwrap();
        let h = SpectralField::from_coeffs(domain, vec![1.0, 2.0, 3.0]).unwrap();
        let model = Model::new(domain, DampingSpec::constant(1.0)).with_forcing(ForcingSpec::Stationary(h));
        let state = PlateState::at_rest(&model, 0.01).unwrap();
        let (_, dv) = rhs(&state, &model).unwrap();
        assert_eq!(dv.coeffs(), &[1.0 / 2.0, 2.0 / 5.0, 3.0 / 10.0]);
    }

    #[test]
    fn equilibrium_is_preserved() {
        let model = linear_model(4)
            .with_nonlinearity(NonlinearitySpec::cubic())
            .with_kernel(MemoryKernel::new(1.0, 1.0));
        let state = PlateState::at_rest(&model, 0.01).unwrap();
        let traj = simulate(&state, &model, 1.0, 0.01, &mut []).unwrap();
        assert_eq!(traj.steps, 100);
        assert!(traj.final_state.u.is_zero() && traj.final_state.v.is_zero());
        assert_eq!(traj.final_state.phase_norm_sq(), 0.0);
    }

    #[test]
    fn zero_horizon_returns_initial() {
        let model = linear_model(2);
        let u = SpectralField::single_mode(model.domain, &[1], 1.0).unwrap();
        let state = PlateState::new(&model, u, SpectralField::zeros(model.domain), 0.01).unwrap();
        let mut seen = 0;
        let mut count = |_: usize, _: &PlateState| seen += 1;
        let traj = simulate(&state, &model, 0.0, 0.01, &mut [&mut count]).unwrap();
        assert_eq!(traj.steps, 0);
        assert_eq!(traj.final_state, state);
        assert_eq!(seen, 1);
    }

    #[test]
    fn stability_limit_enforced() {
        let model = linear_model(8);
        let state = PlateState::at_rest(&model, 0.05).unwrap();
        assert!(matches!(step(&state, &model, 0.05), Err(Error::Config(_))));
        assert!(matches!(step(&state, &model, -0.01), Err(Error::Argument(_))));
    }

    #[test]
    fn divergence_names_the_step() {
        // f(s) = |s|^8 s from a large amplitude blows up within a few steps
        let model = linear_model(2).with_nonlinearity(NonlinearitySpec::odd_power(8.0));
        let u = SpectralField::single_mode(model.domain, &[1], 1e3).unwrap();
        let state = PlateState::new(&model, u, SpectralField::zeros(model.domain), 0.01).unwrap();
        let mut last = 0;
        let mut track = |i: usize, _: &PlateState| last = i;
        let err = simulate(&state, &model, 10.0, 0.01, &mut [&mut track]).unwrap_err();
        let Error::Divergence { step, .. } = err else {
            panic!("expected divergence, got {err:?}");
        };
        assert_eq!(step, last + 1);
    }

    #[test]
    fn modes_stay_decoupled_without_nonlinearity() {
        let model = linear_model(6).with_kernel(MemoryKernel::new(1.0, 2.0));
        let u = SpectralField::single_mode(model.domain, &[2], 1.0).unwrap();
        let state = PlateState::new(&model, u, SpectralField::zeros(model.domain), 0.01).unwrap();
        let traj = simulate(&state, &model, 2.0, 0.01, &mut []).unwrap();
        for (k, (a, b)) in traj
            .final_state
            .u
            .coeffs()
            .iter()
            .zip(traj.final_state.v.coeffs())
            .enumerate()
        {
            if k != 1 {
                assert_eq!((*a, *b), (0.0, 0.0));
            }
        }
    }
}
