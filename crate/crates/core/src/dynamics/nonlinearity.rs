//! The source term `f(u)` and its primitive `F(z) = ∫₀^z f`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    Zero,
    /// `f(s) = s³`.
    Cubic,
    /// `f(s) = |s|^p s`.
    OddPower {
        p: f64,
    },
    /// Piecewise-linear `f` through `(nodes[i], values[i])`.
    Tabulated {
        nodes: Vec<f64>,
        values: Vec<f64>,
    },
}

/// `f` together with its growth exponent `p` and the constants of
/// `|f'(s)| ≤ M_f (1 + |s|^p)` and `-C_f ≤ F(s) ≤ f(s) s`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub growth_exponent: f64,
    pub m_f: f64,
    pub c_f: f64,
}

impl NonlinearitySpec {
    pub fn zero() -> Self {
        Self {
            kind: NonlinearityKind::Zero,
            growth_exponent: 1.0,
            m_f: 0.0,
            c_f: 0.0,
        }
    }

    pub fn cubic() -> Self {
        Self {
            kind: NonlinearityKind::Cubic,
            growth_exponent: 2.0,
            m_f: 3.0,
            c_f: 0.0,
        }
    }

    /// `|s|^p s`, with `M_f = p + 1` and `C_f = 0`.
    pub fn odd_power(p: f64) -> Self {
        Self {
            kind: NonlinearityKind::OddPower { p },
            growth_exponent: p,
            m_f: p + 1.0,
            c_f: 0.0,
        }
    }

    /// Tabulated `f` with caller-supplied constants. The nodes must be strictly
    /// increasing and bracket `0`.
    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>, growth_exponent: f64, m_f: f64, c_f: f64) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::Config(format!(
                "tabulated nonlinearity needs matching node and value lists of length >= 2, got {} and {}",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("tabulated nonlinearity nodes must increase".into()));
        }
        if !(nodes[0] <= 0.0 && 0.0 <= nodes[nodes.len() - 1]) {
            return Err(Error::Config("tabulated nonlinearity range must contain 0".into()));
        }
        Ok(Self {
            kind: NonlinearityKind::Tabulated { nodes, values },
            growth_exponent,
            m_f,
            c_f,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.kind == NonlinearityKind::Zero
    }

    /// `f(s)`.
    pub fn f(&self, s: f64) -> Result<f64> {
        Ok(match &self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Cubic => s * s * s,
            NonlinearityKind::OddPower { p } => math::powf(math::abs(s), *p) * s,
            NonlinearityKind::Tabulated { nodes, values } => {
                let i = segment(nodes, s)?;
                let theta = (s - nodes[i]) / (nodes[i + 1] - nodes[i]);
                values[i] + theta * (values[i + 1] - values[i])
            }
        })
    }

    /// `F(s) = ∫₀^s f`.
    pub fn primitive(&self, s: f64) -> Result<f64> {
        Ok(match &self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Cubic => 0.25 * s * s * s * s,
            NonlinearityKind::OddPower { p } => math::powf(math::abs(s), p + 2.0) / (p + 2.0),
            NonlinearityKind::Tabulated { nodes, values } => {
                let end = segment(nodes, s)?;
                let zero = segment(nodes, 0.0)?;
                tabulated_integral(nodes, values, zero, end, s)
            }
        })
    }

    /// `f'(s)`, one-sided on tabulated nodes.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        Ok(match &self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Cubic => 3.0 * s * s,
            NonlinearityKind::OddPower { p } => (p + 1.0) * math::powf(math::abs(s), *p),
            NonlinearityKind::Tabulated { nodes, values } => {
                let i = segment(nodes, s)?;
                (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i])
            }
        })
    }

    /// Pointwise `(f(u), F(u))` on grid values.
    pub fn eval(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut f = Vec::with_capacity(u.len());
        let mut big_f = Vec::with_capacity(u.len());
        for &s in u {
            f.push(self.f(s)?);
            big_f.push(self.primitive(s)?);
        }
        Ok((f, big_f))
    }

    /// Overwrites `values` with `f(values)`.
    pub(crate) fn apply_in_place(&self, values: &mut [f64]) -> Result<()> {
        match &self.kind {
            NonlinearityKind::Zero => values.iter_mut().for_each(|x| *x = 0.0),
            NonlinearityKind::Cubic => values.iter_mut().for_each(|x| *x = *x * *x * *x),
            _ => {
                for x in values.iter_mut() {
                    *x = self.f(*x)?;
                }
            }
        }
        Ok(())
    }

    /// Spot checks of the growth and sign conditions plus admissibility of
    /// the exponent in dimension `dim`.
    pub fn validate(&self, dim: usize) -> Vec<String> {
        let mut errors = Vec::new();
        let p = self.growth_exponent;
        if !admissible_exponent(p, dim) {
            errors.push(format!("growth exponent p = {p} is not admissible in dimension {dim}"));
        }
        if !(self.m_f >= 0.0 && self.c_f >= 0.0) {
            errors.push(format!(
                "nonlinearity constants must be nonnegative, got M_f = {}, C_f = {}",
                self.m_f, self.c_f
            ));
        }
        if let NonlinearityKind::OddPower { p } = self.kind {
            if !(p > 0.0) {
                errors.push(format!("odd power exponent {p} must be positive"));
            }
        }
        if !errors.is_empty() {
            return errors;
        }
        let (lo, hi) = match &self.kind {
            NonlinearityKind::Tabulated { nodes, .. } => (nodes[0], nodes[nodes.len() - 1]),
            _ => (-10.0, 10.0),
        };
        let samples = 2001;
        for i in 0..samples {
            let s = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            let (Ok(fs), Ok(big_f), Ok(df)) = (self.f(s), self.primitive(s), self.derivative(s)) else {
                errors.push(format!("nonlinearity cannot be evaluated at {s}"));
                break;
            };
            let growth = self.m_f * (1.0 + math::powf(math::abs(s), p));
            let tol = 1e-12 * (1.0 + growth);
            if math::abs(df) > growth + tol {
                errors.push(format!(
                    "growth condition |f'(s)| <= M_f (1 + |s|^p) fails at s = {s}: {} > {growth}",
                    math::abs(df)
                ));
                break;
            }
            let fs_s = fs * s;
            let tol = 1e-12 * (1.0 + math::abs(fs_s) + math::abs(big_f));
            if big_f < -self.c_f - tol || big_f > fs_s + tol {
                errors.push(format!(
                    "sign condition -C_f <= F(s) <= f(s) s fails at s = {s}: F = {big_f}, f s = {fs_s}"
                ));
                break;
            }
        }
        errors
    }
}

/// Growth exponents allowed for a spatial dimension: any `p > 0` up to
/// dimension 4, `p ≤ 4/(dim-4)` beyond.
pub fn admissible_exponent(p: f64, dim: usize) -> bool {
    if !(p > 0.0) || !p.is_finite() {
        return false;
    }
    dim <= 4 || p <= 4.0 / (dim as f64 - 4.0)
}

fn segment(nodes: &[f64], s: f64) -> Result<usize> {
    let lo = nodes[0];
    let hi = nodes[nodes.len() - 1];
    if !(s >= lo && s <= hi) {
        return Err(Error::Domain { value: s, lo, hi });
    }
    let i = nodes.partition_point(|&x| x <= s);
    Ok(i.clamp(1, nodes.len() - 1) - 1)
}

// exact integral of the piecewise-linear interpolant from 0 to s
fn tabulated_integral(nodes: &[f64], values: &[f64], zero: usize, end: usize, s: f64) -> f64 {
    let interp = |i: usize, x: f64| {
        let theta = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
        values[i] + theta * (values[i + 1] - values[i])
    };
    let piece = |i: usize, a: f64, b: f64| 0.5 * (b - a) * (interp(i, a) + interp(i, b));
    if zero == end {
        return piece(zero, 0.0, s);
    }
    let (sign, from, from_seg, to, to_seg) = if end > zero {
        (1.0, 0.0, zero, s, end)
    } else {
        (-1.0, s, end, 0.0, zero)
    };
    let mut total = piece(from_seg, from, nodes[from_seg + 1]);
    for i in from_seg + 1..to_seg {
        total += piece(i, nodes[i], nodes[i + 1]);
    }
    total += piece(to_seg, nodes[to_seg], to);
    sign * total
}
