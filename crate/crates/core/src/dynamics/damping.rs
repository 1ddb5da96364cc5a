//! Time-dependent damping coefficients `a(t)` with bounds `0 < a₀ ≤ a(t) ≤ a₁`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DampingKind {
    /// `a_ε(t) = (1-ε) t²/(1+t²) + ζ`.
    PaperFamily {
        epsilon: f64,
        zeta: f64,
    },
    Constant(f64),
    /// Piecewise-linear through `(t, a)` points, constant outside.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingSpec {
    pub kind: DampingKind,
    /// `a₀`
    pub lower: f64,
    /// `a₁`
    pub upper: f64,
}

impl DampingSpec {
    /// Family member with `a₀ = ζ`, `a₁ = 1 - ε + ζ`.
    pub fn paper_family(epsilon: f64, zeta: f64) -> Self {
        Self {
            kind: DampingKind::PaperFamily { epsilon, zeta },
            lower: zeta,
            upper: 1.0 - epsilon + zeta,
        }
    }

    pub fn constant(a: f64) -> Self {
        Self {
            kind: DampingKind::Constant(a),
            lower: a,
            upper: a,
        }
    }

    /// Bounds are the extreme tabulated values.
    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("tabulated damping needs at least one point".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("tabulated damping has repeated times".into()));
        }
        let lower = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let upper = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kind: DampingKind::Tabulated(points),
            lower,
            upper,
        })
    }

    /// Overrides the declared bounds.
    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    /// `a(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            DampingKind::PaperFamily { epsilon, zeta } => {
                let t2 = t * t;
                (1.0 - epsilon) * t2 / (1.0 + t2) + zeta
            }
            DampingKind::Constant(a) => *a,
            DampingKind::Tabulated(points) => interpolate(points, t),
        }
    }

    /// Parameter ranges plus `a₀ ≤ a(t) ≤ a₁` sampled on `[0, 100]`.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        match &self.kind {
            DampingKind::PaperFamily { epsilon, zeta } => {
                if !(0.0..=1.0).contains(epsilon) {
                    errors.push(format!("damping epsilon {epsilon} outside [0, 1]"));
                }
                if !(*zeta > 0.0) || !zeta.is_finite() {
                    errors.push(format!("damping zeta {zeta} must be positive"));
                }
            }
            DampingKind::Constant(a) => {
                if !(*a > 0.0) || !a.is_finite() {
                    errors.push(format!("constant damping {a} must be positive"));
                }
            }
            DampingKind::Tabulated(points) => {
                if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                    errors.push(String::from("tabulated damping has non-finite entries"));
                }
            }
        }
        if !(self.lower > 0.0) || !(self.lower <= self.upper) || !self.upper.is_finite() {
            errors.push(format!(
                "damping bounds need 0 < a0 <= a1 < inf, got a0 = {}, a1 = {}",
                self.lower, self.upper
            ));
        }
        if errors.is_empty() {
            let slack = 1e-12 * (1.0 + self.upper);
            for i in 0..=4000 {
                let t = 0.025 * i as f64;
                let a = self.eval(t);
                if !(a >= self.lower - slack && a <= self.upper + slack) {
                    errors.push(format!(
                        "damping a({t}) = {a} leaves [a0, a1] = [{}, {}]",
                        self.lower, self.upper
                    ));
                    break;
                }
            }
        }
        errors
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= t);
    let (t0, a0) = points[i - 1];
    let (t1, a1) = points[i];
    a0 + (a1 - a0) * (t - t0) / (t1 - t0)
}

/// `sup_{t ≥ 0} |a(t) - b(t)|`.
///
/// Closed form for two members of the same `PaperFamily` shape (`|Δε|`, the
/// supremum of `t²/(1+t²)` being approached as `t → ∞`) and for constants;
/// otherwise a dense sample of `[0, 100]` together with the limits.
pub fn linf_distance(a: &DampingSpec, b: &DampingSpec) -> f64 {
    match (&a.kind, &b.kind) {
        (DampingKind::PaperFamily { epsilon: ea, zeta: za }, DampingKind::PaperFamily { epsilon: eb, zeta: zb })
            if za == zb =>
        {
            math::abs(ea - eb)
        }
        (DampingKind::Constant(x), DampingKind::Constant(y)) => math::abs(x - y),
        _ => {
            let mut sup = math::abs(limit(a) - limit(b));
            for i in 0..=100_000 {
                let t = 1e-3 * i as f64;
                sup = sup.max(math::abs(a.eval(t) - b.eval(t)));
            }
            sup
        }
    }
}

fn limit(spec: &DampingSpec) -> f64 {
    match &spec.kind {
        DampingKind::PaperFamily { epsilon, zeta } => 1.0 - epsilon + zeta,
        DampingKind::Constant(a) => *a,
        DampingKind::Tabulated(points) => points[points.len() - 1].1,
    }
}

/// One-parameter damping families for perturbation sweeps; `ε = 0` is the
/// reference member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingFamily {
    /// `(1 - ε) t²/(1 + t²) + ζ` with fixed `ζ`.
    Paper { zeta: f64 },
    /// Constant `ζ + ε`.
    Shifted { zeta: f64 },
}

impl DampingFamily {
    pub fn at(&self, epsilon: f64) -> DampingSpec {
        match *self {
            DampingFamily::Paper { zeta } => DampingSpec::paper_family(epsilon, zeta),
            DampingFamily::Shifted { zeta } => DampingSpec::constant(zeta + epsilon),
        }
    }
}
