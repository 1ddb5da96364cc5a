//! Fading memory: the exponential kernel `μ(s) = c·e^{-δs}`, the history
//! variable `η^t(s) = u(t) - u(t - s)` on a uniform lag grid, and the
//! weighted space `𝓜₂` with `‖η‖²_{μ,2} = ∫₀^∞ μ(s)‖Δη(s)‖² ds`.
//!
//! The lag grid has spacing equal to the time step, so transport along the
//! characteristics of `η_t = -η_s + u_t` is an index shift plus the jump
//! `u(t+Δt) - u(t)`. Integrals over `s` use the trapezoid rule on
//! `0 = s₀ < s₁ < … < s_J = S` with the anchor `η(0) = 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::spectral::{DomainSpec, SpectralField};
use crate::{Error, Result};

/// Default truncation: the discarded tail carries at most this fraction of `μ₀`.
pub const DEFAULT_RELATIVE_TAIL: f64 = 1e-8;

/// `μ(s) = amplitude · e^{-decay_rate · s}` on `[0, truncation]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryKernel {
    pub amplitude: f64,
    pub decay_rate: f64,
    pub truncation: f64,
}

impl MemoryKernel {
    /// Kernel truncated where the tail mass drops to
    /// [`DEFAULT_RELATIVE_TAIL`]` · μ₀`. Not validated; see [`validate_kernel`].
    pub fn new(amplitude: f64, decay_rate: f64) -> Self {
        let truncation = if decay_rate > 0.0 {
            math::ln(1.0 / DEFAULT_RELATIVE_TAIL) / decay_rate
        } else {
            f64::INFINITY
        };
        Self {
            amplitude,
            decay_rate,
            truncation,
        }
    }

    pub fn with_truncation(mut self, truncation: f64) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn value(&self, s: f64) -> f64 {
        self.amplitude * math::exp(-self.decay_rate * s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        -self.decay_rate * self.value(s)
    }

    /// `μ₀ = ∫₀^∞ μ(s) ds = c/δ`.
    pub fn mass(&self) -> f64 {
        self.amplitude / self.decay_rate
    }

    /// `α = 1 + μ₀`, the stiffness of the original (non-reformulated) equation.
    pub fn alpha(&self) -> f64 {
        1.0 + self.mass()
    }

    /// `∫_S^∞ μ(s) ds = c·e^{-δS}/δ`.
    pub fn tail_mass(&self) -> f64 {
        if self.decay_rate <= 0.0 {
            return f64::INFINITY;
        }
        self.amplitude * math::exp(-self.decay_rate * self.truncation) / self.decay_rate
    }

    /// Tail tolerance `DEFAULT_RELATIVE_TAIL · μ₀` used for model validation.
    pub fn default_tail_tolerance(&self) -> f64 {
        // small relative slack so the default truncation itself passes
        DEFAULT_RELATIVE_TAIL * self.mass() * (1.0 + 1e-9)
    }
}

/// `μ₀` of the kernel.
pub fn kernel_mass(kernel: &MemoryKernel) -> f64 {
    kernel.mass()
}

/// Which kernel assumption a check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelCondition {
    /// `μ ≥ 0` and `μ' ≤ 0`.
    Monotone,
    /// `0 < μ(0) < ∞` and finite mass `μ₀`.
    PositiveFinite,
    /// `μ'(s) + δμ(s) ≤ 0` with `δ > 0`.
    DecayRate,
    /// Mass beyond the truncation below the tolerance.
    Tail,
}

impl KernelCondition {
    pub fn label(&self) -> &'static str {
        match self {
            KernelCondition::Monotone => "kernel nonnegative and nonincreasing",
            KernelCondition::PositiveFinite => "0 < mu(0) < inf with finite mass",
            KernelCondition::DecayRate => "mu' + delta*mu <= 0 with delta > 0",
            KernelCondition::Tail => "truncated tail mass within tolerance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheck {
    pub condition: KernelCondition,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub checks: Vec<KernelCheck>,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &KernelCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, condition: KernelCondition) -> Option<&KernelCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }
}

/// Checks every kernel assumption; never aborts.
pub fn validate_kernel(kernel: &MemoryKernel, tail_tolerance: f64) -> KernelReport {
    let c = kernel.amplitude;
    let delta = kernel.decay_rate;
    let s_max = kernel.truncation;
    let mut checks = Vec::with_capacity(4);

    // sample grid over the stored range (or a unit range when unbounded)
    let span = if s_max.is_finite() && s_max > 0.0 { s_max } else { 1.0 };
    let samples: Vec<f64> = (0..=256).map(|i| span * i as f64 / 256.0).collect();

    let finite = c.is_finite() && delta.is_finite();
    let monotone = finite
        && samples
            .iter()
            .all(|&s| kernel.value(s) >= 0.0 && kernel.derivative(s) <= 0.0);
    checks.push(KernelCheck {
        condition: KernelCondition::Monotone,
        passed: monotone,
        detail: if monotone {
            String::from("ok")
        } else {
            format!("mu or mu' has the wrong sign for amplitude {c}, decay rate {delta}")
        },
    });

    let positive = finite && c > 0.0 && delta > 0.0;
    checks.push(KernelCheck {
        condition: KernelCondition::PositiveFinite,
        passed: positive,
        detail: if positive {
            format!("mu(0) = {c}, mu0 = {}", kernel.mass())
        } else if !(c > 0.0) {
            format!("mu(0) = {c} is not positive")
        } else {
            format!("mass is infinite for decay rate {delta}")
        },
    });

    let decay_ok = finite
        && delta > 0.0
        && samples.iter().all(|&s| {
            let r = kernel.derivative(s) + delta * kernel.value(s);
            r <= 1e-12 * (1.0 + kernel.value(s))
        });
    checks.push(KernelCheck {
        condition: KernelCondition::DecayRate,
        passed: decay_ok,
        detail: if decay_ok {
            format!("delta = {delta}")
        } else {
            format!("delta = {delta} <= 0")
        },
    });

    let tail = kernel.tail_mass();
    let tail_ok = tail.is_finite() && tail <= tail_tolerance;
    checks.push(KernelCheck {
        condition: KernelCondition::Tail,
        passed: tail_ok,
        detail: format!("tail mass {tail:e} vs tolerance {tail_tolerance:e} at S = {s_max}"),
    });

    KernelReport { checks }
}

/// `η^t` sampled at `s_j = j·Δs`, `j = 1..J`, with `η(0) = 0` implied.
///
/// Stored as `η(s_j) = offset - past_j` with `past` a ring buffer, so that the
/// characteristic shift costs `O(N^d)` instead of `O(J·N^d)`.
#[derive(Debug, Clone)]
pub struct HistoryField {
    domain: DomainSpec,
    kernel: MemoryKernel,
    spacing: f64,
    lags: usize,
    offset: Vec<f64>,
    past: Vec<f64>,
    head: usize,
    // trapezoid weight times μ(s_j), j = 1..J
    weights: Vec<f64>,
}

impl PartialEq for HistoryField {
    fn eq(&self, other: &Self) -> bool {
        self.compatible_with(other) && (1..=self.lags).all(|j| self.value(j) == other.value(j))
    }
}

impl HistoryField {
    /// Zero history on `J = ⌈S/Δs⌉` lags.
    pub fn zero(domain: DomainSpec, kernel: MemoryKernel, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Argument(format!("lag spacing must be positive, got {spacing}")));
        }
        if !(kernel.truncation > 0.0) || !kernel.truncation.is_finite() {
            return Err(Error::Config(format!(
                "kernel truncation must be finite and positive, got {}",
                kernel.truncation
            )));
        }
        let lags = math::ceil(kernel.truncation / spacing - 1e-9).max(1.0) as usize;
        let n = domain.len();
        let mut weights: Vec<f64> = (1..=lags).map(|j| spacing * kernel.value(j as f64 * spacing)).collect();
        weights[lags - 1] *= 0.5;
        Ok(Self {
            domain,
            kernel,
            spacing,
            lags,
            offset: vec![0.0; n],
            past: vec![0.0; lags * n],
            head: 0,
            weights,
        })
    }

    /// History with prescribed values `η(s_1), …, η(s_J)`.
    pub fn from_values(
        domain: DomainSpec,
        kernel: MemoryKernel,
        spacing: f64,
        values: &[SpectralField],
    ) -> Result<Self> {
        let mut history = Self::zero(domain, kernel, spacing)?;
        if values.len() != history.lags {
            return Err(Error::Config(format!(
                "history needs {} lag values, got {}",
                history.lags,
                values.len()
            )));
        }
        let n = domain.len();
        for (j, value) in values.iter().enumerate() {
            if *value.domain() != domain {
                return Err(Error::Config("history value on a different domain".into()));
            }
            for (p, &c) in history.past[j * n..(j + 1) * n].iter_mut().zip(value.coeffs()) {
                *p = -c;
            }
        }
        Ok(history)
    }

    /// History `η(s) = profile(s)` evaluated on the lag grid.
    pub fn from_fn(
        domain: DomainSpec,
        kernel: MemoryKernel,
        spacing: f64,
        mut profile: impl FnMut(f64) -> SpectralField,
    ) -> Result<Self> {
        let probe = Self::zero(domain, kernel, spacing)?;
        let values: Vec<SpectralField> = (1..=probe.lags).map(|j| profile(probe.s(j))).collect();
        Self::from_values(domain, kernel, spacing, &values)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    /// `Δs`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `J`, the number of stored lags.
    pub fn lags(&self) -> usize {
        self.lags
    }

    /// `s_j = j·Δs` for `j` in `1..=J`.
    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    pub fn s_grid(&self) -> Vec<f64> {
        (1..=self.lags).map(|j| self.s(j)).collect()
    }

    /// `w_j μ(s_j)` for `j = 1..J`.
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    fn slot(&self, j: usize) -> usize {
        (self.head + j - 1) % self.lags
    }

    /// Coefficient `k` (flat) of `η(s_j)`, `j ≥ 1`.
    #[inline]
    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        let n = self.domain.len();
        self.offset[k] - self.past[self.slot(j) * n + k]
    }

    /// Writes `η(s_j)` into `out`.
    pub fn value_into(&self, j: usize, out: &mut [f64]) {
        let n = self.domain.len();
        let base = self.slot(j) * n;
        for (k, o) in out.iter_mut().enumerate().take(n) {
            *o = self.offset[k] - self.past[base + k];
        }
    }

    /// `η(s_j)` for `j` in `1..=J`.
    pub fn value(&self, j: usize) -> SpectralField {
        let mut coeffs = vec![0.0; self.domain.len()];
        self.value_into(j, &mut coeffs);
        SpectralField::from_coeffs(self.domain, coeffs).expect("length matches domain")
    }

    pub fn values(&self) -> Vec<SpectralField> {
        (1..=self.lags).map(|j| self.value(j)).collect()
    }

    /// Piecewise-linear interpolation in `s`, anchored at `η(0) = 0` and
    /// held constant beyond `S`.
    pub fn sample(&self, s: f64) -> SpectralField {
        let n = self.domain.len();
        if s <= 0.0 {
            return SpectralField::zeros(self.domain);
        }
        let x = s / self.spacing;
        if x >= self.lags as f64 {
            return self.value(self.lags);
        }
        let j0 = x as usize; // 0..J-1
        let theta = x - j0 as f64;
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let left = if j0 == 0 { 0.0 } else { self.coeff(j0, k) };
            let right = self.coeff(j0 + 1, k);
            *c = (1.0 - theta) * left + theta * right;
        }
        SpectralField::from_coeffs(self.domain, coeffs).expect("length matches domain")
    }

    /// Same domain, kernel and lag grid.
    pub fn compatible_with(&self, other: &HistoryField) -> bool {
        self.domain == other.domain
            && self.kernel == other.kernel
            && self.spacing == other.spacing
            && self.lags == other.lags
    }

    pub fn is_finite(&self) -> bool {
        self.offset.iter().chain(&self.past).all(|c| c.is_finite())
    }

    /// In-place form of [`history_advance`].
    pub fn advance(&mut self, u_old: &SpectralField, u_new: &SpectralField, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Argument(format!("time step must be positive, got {dt}")));
        }
        if math::abs(dt - self.spacing) > 1e-12 * self.spacing {
            return Err(Error::Config(format!(
                "time step {dt} does not match the lag spacing {}",
                self.spacing
            )));
        }
        if *u_old.domain() != self.domain || *u_new.domain() != self.domain {
            return Err(Error::Argument("displacement on a different domain".into()));
        }
        let n = self.domain.len();
        // new η(s_1) = u_new - u_old, new η(s_j) = old η(s_{j-1}) + (u_new - u_old)
        self.head = (self.head + self.lags - 1) % self.lags;
        let base = self.head * n;
        self.past[base..base + n].copy_from_slice(&self.offset);
        for (k, o) in self.offset.iter_mut().enumerate() {
            *o += u_new.coeffs()[k] - u_old.coeffs()[k];
        }
        Ok(())
    }

    /// `Σ_j w_j μ(s_j) F(η(s_j))` style accumulation over lags.
    fn for_each_lag(&self, mut visit: impl FnMut(usize, f64, &[f64])) {
        let n = self.domain.len();
        let mut eta = vec![0.0; n];
        for j in 1..=self.lags {
            self.value_into(j, &mut eta);
            visit(j, self.weights[j - 1], &eta);
        }
    }
}

/// One step of exact-characteristic transport:
/// `η^{t+Δt}(s_j) = η^t(s_{j-1}) + u(t+Δt) - u(t)`, requiring `Δt = Δs`.
pub fn history_advance(
    history: &HistoryField,
    u_old: &SpectralField,
    u_new: &SpectralField,
    dt: f64,
) -> Result<HistoryField> {
    let mut next = history.clone();
    next.advance(u_old, u_new, dt)?;
    Ok(next)
}

/// `∫₀^∞ μ(s) Δ²η(s) ds` by the trapezoid rule.
pub fn memory_integral(history: &HistoryField) -> SpectralField {
    let mut out = SpectralField::zeros(history.domain);
    memory_integral_into(history, out.coeffs_mut());
    out
}

pub(crate) fn memory_integral_into(history: &HistoryField, out: &mut [f64]) {
    let n = history.domain.len();
    // Σ w μ (offset - past_j) = offset·Σwμ - Σ wμ past_j
    let total_weight: f64 = history.weights.iter().sum();
    let mut acc = vec![0.0; n];
    for j in 1..=history.lags {
        let w = history.weights[j - 1];
        let base = history.slot(j) * n;
        for (a, p) in acc.iter_mut().zip(&history.past[base..base + n]) {
            *a += w * p;
        }
    }
    for (k, o) in out.iter_mut().enumerate().take(n) {
        let lambda = history.domain.eigenvalue(k);
        *o = lambda * lambda * (history.offset[k] * total_weight - acc[k]);
    }
}

/// `‖η‖²_{μ,2}` by the trapezoid rule (squared norm).
pub fn memory_norm_sq(history: &HistoryField) -> f64 {
    let domain = history.domain;
    let mut total = 0.0;
    history.for_each_lag(|_, w, eta| {
        let s: f64 = eta
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let lambda = domain.eigenvalue(k);
                lambda * lambda * c * c
            })
            .sum();
        total += w * s;
    });
    domain.parseval_factor() * total
}

/// `(η₁, η₂)_{μ,2}` for histories on the same grid.
pub fn memory_inner(a: &HistoryField, b: &HistoryField) -> Result<f64> {
    if !a.compatible_with(b) {
        return Err(Error::Argument("histories live on different grids or kernels".into()));
    }
    let domain = a.domain;
    let n = domain.len();
    let mut ea = vec![0.0; n];
    let mut eb = vec![0.0; n];
    let mut total = 0.0;
    for j in 1..=a.lags {
        a.value_into(j, &mut ea);
        b.value_into(j, &mut eb);
        let s: f64 = (0..n)
            .map(|k| {
                let lambda = domain.eigenvalue(k);
                lambda * lambda * ea[k] * eb[k]
            })
            .sum();
        total += a.weights[j - 1] * s;
    }
    Ok(domain.parseval_factor() * total)
}

/// `‖η₁ - η₂‖²_{μ,2}`.
pub fn memory_distance_sq(a: &HistoryField, b: &HistoryField) -> Result<f64> {
    if !a.compatible_with(b) {
        return Err(Error::Argument("histories live on different grids or kernels".into()));
    }
    let domain = a.domain;
    let n = domain.len();
    let mut total = 0.0;
    for j in 1..=a.lags {
        let sa = a.slot(j) * n;
        let sb = b.slot(j) * n;
        let s: f64 = (0..n)
            .map(|k| {
                let lambda = domain.eigenvalue(k);
                let d = (a.offset[k] - a.past[sa + k]) - (b.offset[k] - b.past[sb + k]);
                lambda * lambda * d * d
            })
            .sum();
        total += a.weights[j - 1] * s;
    }
    Ok(domain.parseval_factor() * total)
}

/// Both sides of `-(η, η_s)_{μ,2} ≤ -(δ/2)‖η‖²_{μ,2}`.
///
/// `lhs = ½ ∫ μ'(s)‖Δη(s)‖² ds`, which equals `-(η, η_s)_{μ,2}` after
/// integrating by parts with `η(0) = 0`; `rhs = -(δ/2)‖η‖²_{μ,2}`.
pub fn memory_dissipation_bound(history: &HistoryField) -> (f64, f64) {
    let domain = history.domain;
    let kernel = history.kernel;
    let spacing = history.spacing;
    let lags = history.lags;
    let mut lhs = 0.0;
    history.for_each_lag(|j, _, eta| {
        let trapezoid = if j == lags { 0.5 * spacing } else { spacing };
        let s: f64 = eta
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let lambda = domain.eigenvalue(k);
                lambda * lambda * c * c
            })
            .sum();
        lhs += trapezoid * kernel.derivative(j as f64 * spacing) * s;
    });
    let lhs = 0.5 * domain.parseval_factor() * lhs;
    let rhs = -0.5 * kernel.decay_rate * memory_norm_sq(history);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    fn d1(n: usize) -> DomainSpec {
        DomainSpec::with_modes(1, n).unwrap()
    }

    #[test]
    fn mass_and_alpha() {
        assert_eq!(kernel_mass(&MemoryKernel::new(1.0, 1.0)), 1.0);
        assert_eq!(kernel_mass(&MemoryKernel::new(2.0, 4.0)), 0.5);
        assert_eq!(MemoryKernel::new(1.0, 1.0).alpha(), 2.0);
    }

    #[test]
    fn validation_passes_for_long_truncation() {
        let kernel = MemoryKernel::new(1.0, 1.0).with_truncation(40.0);
        let report = validate_kernel(&kernel, 1e-6);
        assert!(report.passed(), "{report:?}");
        // closed-form tail e^{-40}
        assert!((kernel.tail_mass() - (-40.0f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn validation_flags_negative_decay() {
        let report = validate_kernel(&MemoryKernel::new(1.0, -1.0), 1e-6);
        assert!(!report.check(KernelCondition::DecayRate).unwrap().passed);
        assert!(!report.passed());
    }

    #[test]
    fn validation_flags_zero_amplitude() {
        let report = validate_kernel(&MemoryKernel::new(0.0, 1.0), 1e-6);
        assert!(!report.check(KernelCondition::PositiveFinite).unwrap().passed);
    }

    #[test]
    fn validation_flags_short_truncation() {
        let kernel = MemoryKernel::new(1.0, 1.0).with_truncation(2.0);
        let report = validate_kernel(&kernel, 1e-6);
        assert!(!report.check(KernelCondition::Tail).unwrap().passed);
        assert!(report.check(KernelCondition::DecayRate).unwrap().passed);
    }

    #[test]
    fn default_truncation_meets_default_tail() {
        let kernel = MemoryKernel::new(0.7, 2.5);
        assert!(validate_kernel(&kernel, kernel.default_tail_tolerance()).passed());
    }

    #[test]
    fn advance_with_no_motion_keeps_zero() {
        let domain = d1(4);
        let h = HistoryField::zero(domain, MemoryKernel::new(1.0, 1.0), 0.01).unwrap();
        let u = SpectralField::single_mode(domain, &[2], 0.3).unwrap();
        let next = history_advance(&h, &u, &u, 0.01).unwrap();
        assert!((1..=next.lags()).all(|j| next.value(j).is_zero()));
    }

    #[test]
    fn one_jump_reaches_every_lag() {
        let domain = d1(4);
        let h = HistoryField::zero(domain, MemoryKernel::new(1.0, 1.0), 0.01).unwrap();
        let u0 = SpectralField::single_mode(domain, &[1], 0.5).unwrap();
        let phi = SpectralField::single_mode(domain, &[3], 0.25).unwrap();
        let u1 = &u0 + &phi;
        let next = history_advance(&h, &u0, &u1, 0.01).unwrap();
        for j in 1..=next.lags() {
            let v = next.value(j);
            for (a, b) in v.coeffs().iter().zip(phi.coeffs()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_ramp_gives_min_s_t() {
        let domain = d1(3);
        let dt = 0.05;
        let mut h = HistoryField::zero(domain, MemoryKernel::new(1.0, 2.0), dt).unwrap();
        let phi = SpectralField::single_mode(domain, &[2], 1.0).unwrap();
        let steps = 40;
        for n in 0..steps {
            let u_old = phi.scaled(n as f64 * dt);
            let u_new = phi.scaled((n + 1) as f64 * dt);
            h.advance(&u_old, &u_new, dt).unwrap();
        }
        let t = steps as f64 * dt;
        for j in 1..=h.lags() {
            let expected = h.s(j).min(t);
            assert!((h.coeff(j, 1) - expected).abs() < 1e-12);
            assert_eq!(h.coeff(j, 0), 0.0);
        }
    }

    #[test]
    fn advance_argument_errors() {
        let domain = d1(2);
        let mut h = HistoryField::zero(domain, MemoryKernel::new(1.0, 1.0), 0.01).unwrap();
        let u = SpectralField::zeros(domain);
        assert!(matches!(h.advance(&u, &u, 0.02), Err(Error::Config(_))));
        assert!(matches!(h.advance(&u, &u, 0.0), Err(Error::Argument(_))));
        assert!(matches!(h.advance(&u, &u, -0.01), Err(Error::Argument(_))));
    }

    #[test]
    fn zero_history_integrals() {
        let h = HistoryField::zero(d1(4), MemoryKernel::new(1.0, 1.0), 0.01).unwrap();
        assert!(memory_integral(&h).is_zero());
        assert_eq!(memory_norm_sq(&h), 0.0);
        assert_eq!(memory_dissipation_bound(&h), (0.0, 0.0));
    }

    #[test]
    fn constant_history_integral_is_mass_times_bilaplacian() {
        let domain = d1(4);
        let ds = 1e-3;
        let kernel = MemoryKernel::new(1.0, 1.0);
        let phi = SpectralField::single_mode(domain, &[1], 1.0).unwrap();
        let h = HistoryField::from_fn(domain, kernel, ds, |_| phi.clone()).unwrap();
        let m = memory_integral(&h);
        // the η(0) = 0 anchor removes ds/2·μ(0) from the trapezoid sum
        assert!((m.coeffs()[0] - 1.0).abs() < ds);
        assert!(m.coeffs()[1..].iter().all(|&c| c == 0.0));
        assert!((memory_norm_sq(&h) - PI / 2.0).abs() < 2.0 * ds);
    }

    #[test]
    fn decaying_history_integral() {
        let domain = d1(4);
        let ds = 1e-3;
        let kernel = MemoryKernel::new(1.0, 1.0);
        let phi = SpectralField::single_mode(domain, &[2], 1.0).unwrap();
        let h = HistoryField::from_fn(domain, kernel, ds, |s| phi.scaled((-s).exp())).unwrap();
        let m = memory_integral(&h);
        // ∫ e^{-2s} ds · λ² = 16/2, less the ds/2 lost to the anchor jump
        assert!((m.coeffs()[1] - 8.0).abs() < 16.0 * ds);
    }

    #[test]
    fn norm_is_quadratic() {
        let domain = d1(3);
        let kernel = MemoryKernel::new(1.0, 1.5);
        let h = HistoryField::from_fn(domain, kernel, 0.01, |s| {
            SpectralField::from_coeffs(domain, vec![s.sin(), (2.0 * s).cos() - 1.0, s * (-s).exp()]).unwrap()
        })
        .unwrap();
        let values: Vec<SpectralField> = h.values().iter().map(|v| v.scaled(2.0)).collect();
        let h2 = HistoryField::from_values(domain, kernel, 0.01, &values).unwrap();
        let ratio = memory_norm_sq(&h2) / memory_norm_sq(&h);
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_kernel_dissipation_equality() {
        let domain = d1(3);
        let kernel = MemoryKernel::new(1.0, 2.0);
        let h = HistoryField::from_fn(domain, kernel, 0.01, |s| {
            SpectralField::from_coeffs(domain, vec![s.sin(), s * s / (1.0 + s), 0.3]).unwrap()
        })
        .unwrap();
        let (lhs, rhs) = memory_dissipation_bound(&h);
        assert!(lhs < 0.0);
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn sample_interpolates_with_anchor() {
        let domain = d1(1);
        let ds = 0.1;
        let kernel = MemoryKernel::new(1.0, 1.0);
        let h = HistoryField::from_fn(domain, kernel, ds, |s| {
            SpectralField::from_coeffs(domain, vec![s]).unwrap()
        })
        .unwrap();
        assert_eq!(h.sample(0.0).coeffs()[0], 0.0);
        assert!((h.sample(0.05).coeffs()[0] - 0.05).abs() < 1e-15);
        assert!((h.sample(0.37).coeffs()[0] - 0.37).abs() < 1e-13);
        let end = h.s(h.lags());
        assert!((h.sample(end + 5.0).coeffs()[0] - end).abs() < 1e-12);
    }

    #[test]
    fn from_values_rejects_wrong_length() {
        let domain = d1(2);
        let kernel = MemoryKernel::new(1.0, 1.0);
        let err = HistoryField::from_values(domain, kernel, 0.5, &[SpectralField::zeros(domain)]);
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
