//! External forcing `g(x, t)` and its translation-bounded norm
//! `‖g‖²_{L_b²} = sup_t ∫_t^{t+1} ‖g(s)‖² ds`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math::{self, PI};
use crate::spectral::{DomainSpec, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Zero,
    /// `g(t) = h`.
    Stationary(SpectralField),
    /// `g(t) = h sin(ωt + φ)`.
    Periodic {
        profile: SpectralField,
        frequency: f64,
        phase: f64,
    },
    /// `g(t) = h₁ sin(ω₁t + φ₁) + h₂ sin(ω₂t + φ₂)`.
    QuasiPeriodic {
        first: SpectralField,
        second: SpectralField,
        frequencies: [f64; 2],
        phases: [f64; 2],
    },
    /// `g(t) = base(t + shift)`, a point of the symbol hull.
    TimeShift {
        base: Box<ForcingSpec>,
        shift: f64,
    },
}

impl ForcingSpec {
    pub fn periodic(profile: SpectralField, frequency: f64) -> Self {
        ForcingSpec::Periodic {
            profile,
            frequency,
            phase: 0.0,
        }
    }

    pub fn quasi_periodic(first: SpectralField, second: SpectralField, frequencies: [f64; 2]) -> Self {
        ForcingSpec::QuasiPeriodic {
            first,
            second,
            frequencies,
            phases: [0.0, 0.0],
        }
    }

    /// `g(· + τ)`.
    pub fn shifted(&self, shift: f64) -> Self {
        match self {
            ForcingSpec::Zero | ForcingSpec::Stationary(_) => self.clone(),
            ForcingSpec::TimeShift { base, shift: s } => ForcingSpec::TimeShift {
                base: base.clone(),
                shift: s + shift,
            },
            _ => ForcingSpec::TimeShift {
                base: Box::new(self.clone()),
                shift,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForcingSpec::Zero => true,
            ForcingSpec::Stationary(h) => h.is_zero(),
            ForcingSpec::Periodic { profile, .. } => profile.is_zero(),
            ForcingSpec::QuasiPeriodic { first, second, .. } => first.is_zero() && second.is_zero(),
            ForcingSpec::TimeShift { base, .. } => base.is_zero(),
        }
    }

    /// Independent of `t`.
    pub fn is_autonomous(&self) -> bool {
        match self {
            ForcingSpec::Zero | ForcingSpec::Stationary(_) => true,
            ForcingSpec::TimeShift { base, .. } => base.is_autonomous(),
            _ => self.is_zero(),
        }
    }

    /// Domain of the profiles, `None` for zero forcing.
    pub fn domain(&self) -> Option<&DomainSpec> {
        match self {
            ForcingSpec::Zero => None,
            ForcingSpec::Stationary(h) => Some(h.domain()),
            ForcingSpec::Periodic { profile, .. } => Some(profile.domain()),
            ForcingSpec::QuasiPeriodic { first, .. } => Some(first.domain()),
            ForcingSpec::TimeShift { base, .. } => base.domain(),
        }
    }

    pub fn validate(&self, domain: &DomainSpec) -> Vec<String> {
        let mut errors = Vec::new();
        let mut fields: Vec<&SpectralField> = Vec::new();
        let mut numbers: Vec<f64> = Vec::new();
        self.collect(&mut fields, &mut numbers);
        if fields.iter().any(|f| f.domain() != domain) {
            errors.push(String::from("forcing profile lives on a different domain"));
        }
        if fields.iter().any(|f| !f.is_finite()) || numbers.iter().any(|x| !x.is_finite()) {
            errors.push(String::from("forcing has non-finite entries"));
        }
        if let ForcingSpec::QuasiPeriodic { frequencies, .. } = self {
            if frequencies.iter().any(|w| *w <= 0.0) {
                errors.push(format!(
                    "quasi-periodic frequencies must be positive, got {frequencies:?}"
                ));
            }
        }
        errors
    }

    fn collect<'a>(&'a self, fields: &mut Vec<&'a SpectralField>, numbers: &mut Vec<f64>) {
        match self {
            ForcingSpec::Zero => {}
            ForcingSpec::Stationary(h) => fields.push(h),
            ForcingSpec::Periodic {
                profile,
                frequency,
                phase,
            } => {
                fields.push(profile);
                numbers.extend([*frequency, *phase]);
            }
            ForcingSpec::QuasiPeriodic {
                first,
                second,
                frequencies,
                phases,
            } => {
                fields.extend([first, second]);
                numbers.extend(frequencies.iter().chain(phases));
            }
            ForcingSpec::TimeShift { base, shift } => {
                numbers.push(*shift);
                base.collect(fields, numbers);
            }
        }
    }

    /// Writes the coefficients of `g(t)` into `out` (zeroed for zero forcing).
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            ForcingSpec::Zero => out.iter_mut().for_each(|x| *x = 0.0),
            ForcingSpec::Stationary(h) => out.copy_from_slice(h.coeffs()),
            ForcingSpec::Periodic {
                profile,
                frequency,
                phase,
            } => {
                let s = math::sin(frequency * t + phase);
                for (o, h) in out.iter_mut().zip(profile.coeffs()) {
                    *o = s * h;
                }
            }
            ForcingSpec::QuasiPeriodic {
                first,
                second,
                frequencies,
                phases,
            } => {
                let s1 = math::sin(frequencies[0] * t + phases[0]);
                let s2 = math::sin(frequencies[1] * t + phases[1]);
                for ((o, a), b) in out.iter_mut().zip(first.coeffs()).zip(second.coeffs()) {
                    *o = s1 * a + s2 * b;
                }
            }
            ForcingSpec::TimeShift { base, shift } => base.eval_into(t + shift, out),
        }
    }

    pub fn eval(&self, domain: DomainSpec, t: f64) -> SpectralField {
        let mut g = SpectralField::zeros(domain);
        self.eval_into(t, g.coeffs_mut());
        g
    }

    /// Closed-form `sup_t ∫_t^{t+1} ‖g‖²`; an upper bound in the
    /// quasi-periodic case (the cross term is bounded by Cauchy–Schwarz).
    pub fn translation_bound(&self) -> f64 {
        match self {
            ForcingSpec::Zero => 0.0,
            ForcingSpec::Stationary(h) => h.l2_norm_sq(),
            ForcingSpec::Periodic {
                profile,
                frequency,
                phase,
            } => profile.l2_norm_sq() * sine_window_sup(*frequency, *phase),
            ForcingSpec::QuasiPeriodic {
                first,
                second,
                frequencies,
                phases,
            } => {
                let cross = math::abs(first.l2_inner(second));
                let p1 = sine_window_sup(frequencies[0], phases[0]);
                let p2 = sine_window_sup(frequencies[1], phases[1]);
                (first.l2_norm_sq() + cross) * p1 + (second.l2_norm_sq() + cross) * p2
            }
            ForcingSpec::TimeShift { base, .. } => base.translation_bound(),
        }
    }

    /// Shifts sampling the symbol hull: one per point of a uniform grid over
    /// a period, a phase grid over the torus for two frequencies, just `self`
    /// for autonomous forcing.
    pub fn symbol_samples(&self, count: usize) -> Vec<(f64, ForcingSpec)> {
        let count = count.max(1);
        match self {
            ForcingSpec::Periodic { frequency, .. } if *frequency != 0.0 && !self.is_zero() => {
                let period = 2.0 * PI / math::abs(*frequency);
                (0..count)
                    .map(|i| {
                        let tau = period * i as f64 / count as f64;
                        (tau, self.shifted(tau))
                    })
                    .collect()
            }
            ForcingSpec::QuasiPeriodic {
                first,
                second,
                frequencies,
                phases,
            } if !self.is_zero() => {
                let side = (math::sqrt(count as f64) as usize).max(1);
                let mut out = Vec::with_capacity(side * side);
                for i in 0..side {
                    for j in 0..side {
                        let d1 = 2.0 * PI * i as f64 / side as f64;
                        let d2 = 2.0 * PI * j as f64 / side as f64;
                        out.push((
                            (i * side + j) as f64,
                            ForcingSpec::QuasiPeriodic {
                                first: first.clone(),
                                second: second.clone(),
                                frequencies: *frequencies,
                                phases: [phases[0] + d1, phases[1] + d2],
                            },
                        ));
                    }
                }
                out
            }
            _ => alloc::vec![(0.0, self.clone())],
        }
    }
}

// sup_t ∫_t^{t+1} sin²(ωs + φ) ds
fn sine_window_sup(omega: f64, phase: f64) -> f64 {
    if omega == 0.0 {
        let s = math::sin(phase);
        return s * s;
    }
    0.5 + math::abs(math::sin(omega)) / (2.0 * math::abs(omega))
}

/// Largest window integral `∫_t^{t+1} ‖g‖²` over window starts in
/// `[t_a, t_b - 1]` spaced by `resolution`, each window by composite Simpson.
pub fn translation_bounded_norm(spec: &ForcingSpec, window: (f64, f64), resolution: f64) -> f64 {
    let Some(domain) = spec.domain() else {
        return 0.0;
    };
    let (t_a, t_b) = window;
    let last = (t_b - 1.0).max(t_a);
    let resolution = if resolution > 0.0 { resolution } else { 1e-2 };
    let starts = math::ceil((last - t_a) / resolution) as usize;
    let panels = 256;
    let h = 1.0 / panels as f64;
    let mut g = SpectralField::zeros(*domain);
    let mut norm_at = |t: f64| {
        spec.eval_into(t, g.coeffs_mut());
        g.l2_norm_sq()
    };
    let mut best = 0.0f64;
    for i in 0..=starts {
        let t0 = (t_a + resolution * i as f64).min(last);
        let mut sum = norm_at(t0) + norm_at(t0 + 1.0);
        for j in 1..panels {
            let weight = if j % 2 == 1 { 4.0 } else { 2.0 };
            sum += weight * norm_at(t0 + h * j as f64);
        }
        best = best.max(sum * h / 3.0);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d1() -> DomainSpec {
        DomainSpec::with_modes(1, 4).unwrap()
    }

    #[test]
    fn zero_forcing_has_zero_norm() {
        assert_eq!(translation_bounded_norm(&ForcingSpec::Zero, (0.0, 10.0), 0.1), 0.0);
        assert_eq!(ForcingSpec::Zero.translation_bound(), 0.0);
    }

    #[test]
    fn stationary_norm() {
        let h = SpectralField::single_mode(d1(), &[1], 1.0).unwrap();
        let g = ForcingSpec::Stationary(h);
        let n = translation_bounded_norm(&g, (0.0, 5.0), 0.25);
        assert!((n - PI / 2.0).abs() < 1e-14);
        assert_eq!(g.translation_bound(), PI / 2.0);
    }

    #[test]
    fn periodic_window_matches_scalar_oracle() {
        let h = SpectralField::from_coeffs(d1(), vec![1.0, 0.5, 0.0, 0.0]).unwrap();
        let hn = h.l2_norm_sq();
        let omega = 1.0;
        let g = ForcingSpec::periodic(h, omega);
        // scalar factor max_t ∫_t^{t+1} sin² by a fine scan with the antiderivative
        let anti = |x: f64| x / 2.0 - (2.0 * x).sin() / 4.0;
        let factor = (0..20000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 20000.0;
                anti(t + 1.0) - anti(t)
            })
            .fold(0.0, f64::max);
        let numeric = translation_bounded_norm(&g, (0.0, 2.0 * PI + 1.0), 1e-3);
        assert!((numeric - hn * factor).abs() < 1e-6 * hn);
        assert!((g.translation_bound() - hn * factor).abs() < 1e-6 * hn);
    }

    #[test]
    fn quasi_periodic_bound_dominates_numeric() {
        let a = SpectralField::single_mode(d1(), &[1], 1.0).unwrap();
        let b = SpectralField::from_coeffs(d1(), vec![0.3, 0.7, 0.0, 0.0]).unwrap();
        let g = ForcingSpec::quasi_periodic(a, b, [1.0, 2.0f64.sqrt()]);
        let numeric = translation_bounded_norm(&g, (0.0, 40.0), 0.05);
        assert!(numeric <= g.translation_bound() * (1.0 + 1e-12));
        assert!(numeric > 0.5 * g.translation_bound());
    }

    #[test]
    fn shift_composes() {
        let h = SpectralField::single_mode(d1(), &[2], 2.0).unwrap();
        let g = ForcingSpec::periodic(h, 3.0);
        let twice = g.shifted(0.25).shifted(0.5);
        let direct = g.shifted(0.75);
        for t in [0.0, 0.4, 2.0] {
            assert_eq!(twice.eval(d1(), t), direct.eval(d1(), t));
        }
        assert!((direct.eval(d1(), 0.0).coeffs()[1] - 2.0 * (2.25f64).sin()).abs() < 1e-14);
        assert_eq!(direct.translation_bound(), g.translation_bound());
    }

    #[test]
    fn symbol_samples_cover_period() {
        let h = SpectralField::single_mode(d1(), &[1], 1.0).unwrap();
        let g = ForcingSpec::periodic(h.clone(), 2.0);
        let samples = g.symbol_samples(4);
        assert_eq!(samples.len(), 4);
        assert!((samples[2].0 - PI / 2.0).abs() < 1e-15);
        assert_eq!(ForcingSpec::Stationary(h).symbol_samples(8).len(), 1);
    }
}
