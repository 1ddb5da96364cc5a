//! Discrete function spaces on `Ω = (0, π)^d`, `d ∈ {1, 2}`.
//!
//! Fields are expanded in products of `sin(k·x)`, which satisfy `u = Δu = 0`
//! on `∂Ω` exactly. The basis is not orthonormal: for coefficients `c_k`,
//!
//! ```text
//! ‖u‖²   = (π/2)^d Σ c_k²
//! ‖∇u‖²  = (π/2)^d Σ λ_k c_k²
//! ‖Δu‖²  = (π/2)^d Σ λ_k² c_k²,      λ_k = Σ_i k_i²
//! ```
//!
//! Every norm and inner product in the crate goes through
//! [`DomainSpec::parseval_factor`].

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::math::{self, PI};
use crate::{Error, Result};

/// Box dimension, modes per axis and de-aliasing grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DomainSpec {
    dim: usize,
    modes: usize,
    grid: usize,
}

impl DomainSpec {
    /// `dim ∈ {1, 2}`, `modes ≥ 1`, `grid ≥ 2·modes`.
    pub fn new(dim: usize, modes: usize, grid: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(alloc::format!("dimension must be 1 or 2, got {dim}")));
        }
        if modes == 0 {
            return Err(Error::Config("at least one mode per axis is required".into()));
        }
        if grid < 2 * modes {
            return Err(Error::Config(alloc::format!(
                "grid of {grid} points per axis cannot de-alias {modes} modes (need at least {})",
                2 * modes
            )));
        }
        Ok(Self { dim, modes, grid })
    }

    /// Domain with the minimal de-aliasing grid `M = 2N`.
    pub fn with_modes(dim: usize, modes: usize) -> Result<Self> {
        Self::new(dim, modes, 2 * modes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Number of spectral coefficients, `N^d`.
    pub fn len(&self) -> usize {
        self.modes.pow(self.dim as u32)
    }

    /// Always false; a valid domain has at least one mode.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of physical grid values, `M^d`.
    pub fn grid_len(&self) -> usize {
        self.grid.pow(self.dim as u32)
    }

    /// `|Ω| = π^d`.
    pub fn volume(&self) -> f64 {
        math::powf(PI, self.dim as f64)
    }

    /// `(π/2)^d`, the squared L² norm of a single basis function.
    pub fn parseval_factor(&self) -> f64 {
        math::powf(PI / 2.0, self.dim as f64)
    }

    /// Flat storage index of a 1-based multi-index (row-major).
    pub fn flat_index(&self, k: &[usize]) -> Result<usize> {
        if k.len() != self.dim || k.iter().any(|&ki| ki == 0 || ki > self.modes) {
            return Err(Error::IndexOutOfRange {
                index: k.to_vec(),
                modes: self.modes,
                dim: self.dim,
            });
        }
        Ok(k.iter().fold(0, |acc, &ki| acc * self.modes + (ki - 1)))
    }

    /// 1-based multi-index of a flat storage index; unused axes are 0.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat + 1, 0],
            _ => [flat / self.modes + 1, flat % self.modes + 1],
        }
    }

    /// `λ_k` for a flat index.
    pub fn eigenvalue(&self, flat: usize) -> f64 {
        let k = self.multi_index(flat);
        (k[0] * k[0] + k[1] * k[1]) as f64
    }

    /// `λ_k` for every coefficient in storage order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.eigenvalue(i)).collect()
    }

    /// Smallest eigenvalue, attained at `(1, …, 1)`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.dim as f64
    }

    /// Largest eigenvalue, attained at `(N, …, N)`.
    pub fn max_eigenvalue(&self) -> f64 {
        (self.dim * self.modes * self.modes) as f64
    }
}

/// Eigenvalue of `-Δ` for the multi-index `k`.
pub fn laplacian_eigenvalue(domain: &DomainSpec, k: &[usize]) -> Result<f64> {
    let flat = domain.flat_index(k)?;
    Ok(domain.eigenvalue(flat))
}

/// A real field in the sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: DomainSpec,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(domain: DomainSpec) -> Self {
        Self {
            domain,
            coeffs: vec![0.0; domain.len()],
        }
    }

    pub fn from_coeffs(domain: DomainSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != domain.len() {
            return Err(Error::Config(alloc::format!(
                "expected {} coefficients, got {}",
                domain.len(),
                coeffs.len()
            )));
        }
        Ok(Self { domain, coeffs })
    }

    /// `amplitude · Π sin(k_i x_i)`.
    pub fn single_mode(domain: DomainSpec, k: &[usize], amplitude: f64) -> Result<Self> {
        let mut field = Self::zeros(domain);
        let flat = domain.flat_index(k)?;
        field.coeffs[flat] = amplitude;
        Ok(field)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        debug_assert_eq!(self.domain, x.domain);
        for (y, &xi) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * xi;
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        self.map_modes(|_, c| a * c)
    }

    /// Applies a diagonal operator given by its symbol in `λ`.
    pub fn map_modes(&self, symbol: impl Fn(f64, f64) -> f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| symbol(self.domain.eigenvalue(i), c))
            .collect();
        SpectralField {
            domain: self.domain,
            coeffs,
        }
    }

    /// `-Δu`.
    pub fn neg_laplacian(&self) -> SpectralField {
        self.map_modes(|lambda, c| lambda * c)
    }

    /// `Δ²u`.
    pub fn bilaplacian(&self) -> SpectralField {
        self.map_modes(|lambda, c| lambda * lambda * c)
    }

    /// `(I - Δ)u`.
    pub fn mass(&self) -> SpectralField {
        self.map_modes(|lambda, c| (1.0 + lambda) * c)
    }

    /// `(I - Δ)⁻¹u`.
    pub fn mass_inverse(&self) -> SpectralField {
        self.map_modes(|lambda, c| c / (1.0 + lambda))
    }

    fn weighted_inner(&self, other: &SpectralField, power: i32) -> f64 {
        debug_assert_eq!(self.domain, other.domain);
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| {
                let lambda = self.domain.eigenvalue(i);
                let w = match power {
                    0 => 1.0,
                    1 => lambda,
                    _ => lambda * lambda,
                };
                w * a * b
            })
            .sum();
        self.domain.parseval_factor() * sum
    }

    /// `(u, w)` in L².
    pub fn l2_inner(&self, other: &SpectralField) -> f64 {
        self.weighted_inner(other, 0)
    }

    /// `(∇u, ∇w)`.
    pub fn grad_inner(&self, other: &SpectralField) -> f64 {
        self.weighted_inner(other, 1)
    }

    /// `(Δu, Δw)`.
    pub fn lap_inner(&self, other: &SpectralField) -> f64 {
        self.weighted_inner(other, 2)
    }

    /// `‖u‖²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_inner(self)
    }

    /// `‖∇u‖²`, the squared `V₁` norm.
    pub fn grad_norm_sq(&self) -> f64 {
        self.grad_inner(self)
    }

    /// `‖Δu‖²`, the squared `V₂` norm.
    pub fn lap_norm_sq(&self) -> f64 {
        self.lap_inner(self)
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;

    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// `(‖u‖, ‖∇u‖, ‖Δu‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub v1: f64,
    pub v2: f64,
}

pub fn norms(field: &SpectralField) -> Norms {
    Norms {
        l2: math::sqrt(field.l2_norm_sq()),
        v1: math::sqrt(field.grad_norm_sq()),
        v2: math::sqrt(field.lap_norm_sq()),
    }
}

/// Constants of the embeddings `λ₀‖u‖² ≤ ‖∇u‖²`, `λ₁‖u‖² ≤ ‖Δu‖²`,
/// `λ₂‖∇u‖² ≤ ‖Δu‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingConstants {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Sharp constants for the discrete space: all three are attained by the
/// lowest mode, so `λ₀ = λ₂ = λ_min` and `λ₁ = λ_min²`.
pub fn embedding_constants(domain: &DomainSpec) -> EmbeddingConstants {
    let lambda_min = domain.min_eigenvalue();
    EmbeddingConstants {
        lambda0: lambda_min,
        lambda1: lambda_min * lambda_min,
        lambda2: lambda_min,
    }
}

/// Discrete sine transform pair between coefficients and the interior grid
/// `x_j = jπ/(M+1)`, `j = 1..M` on each axis.
///
/// With `M ≥ 2N` the cube of a resolved field is projected back onto the
/// first `N` modes without aliasing, and the grid quadrature integrates
/// quartic polynomials of resolved fields exactly.
#[derive(Debug, Clone)]
pub struct SineTransform {
    domain: DomainSpec,
    // sin(k x_j), row j (grid), column k (mode)
    table: Vec<f64>,
}

impl SineTransform {
    pub fn new(domain: DomainSpec) -> Self {
        let m = domain.grid();
        let n = domain.modes();
        let h = PI / (m + 1) as f64;
        let mut table = Vec::with_capacity(m * n);
        for j in 1..=m {
            for k in 1..=n {
                table.push(math::sin((k * j) as f64 * h));
            }
        }
        Self { domain, table }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// One-dimensional grid nodes.
    pub fn nodes(&self) -> Vec<f64> {
        let h = PI / (self.domain.grid() + 1) as f64;
        (1..=self.domain.grid()).map(|j| j as f64 * h).collect()
    }

    /// Grid cell volume `(π/(M+1))^d` used by [`Self::integrate`].
    pub fn cell_volume(&self) -> f64 {
        math::powf(PI / (self.domain.grid() + 1) as f64, self.domain.dim() as f64)
    }

    #[inline]
    fn s(&self, j: usize, k: usize) -> f64 {
        self.table[j * self.domain.modes() + k]
    }

    /// Field values on the grid, row-major for `d = 2`.
    pub fn to_physical(&self, field: &SpectralField) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.grid_len()];
        self.to_physical_into(field.coeffs(), &mut out);
        out
    }

    pub fn to_physical_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let m = self.domain.grid();
        let n = self.domain.modes();
        match self.domain.dim() {
            1 => {
                for (j, o) in out.iter_mut().enumerate().take(m) {
                    *o = (0..n).map(|k| coeffs[k] * self.s(j, k)).sum();
                }
            }
            _ => {
                // tmp[k1][b] = Σ_k2 c[k1][k2] sin(k2 x_b)
                let mut tmp = vec![0.0; n * m];
                for k1 in 0..n {
                    for b in 0..m {
                        tmp[k1 * m + b] = (0..n).map(|k2| coeffs[k1 * n + k2] * self.s(b, k2)).sum();
                    }
                }
                for a in 0..m {
                    for b in 0..m {
                        out[a * m + b] = (0..n).map(|k1| self.s(a, k1) * tmp[k1 * m + b]).sum();
                    }
                }
            }
        }
    }

    /// Projection of grid values onto the first `N` modes per axis.
    pub fn to_spectral(&self, values: &[f64]) -> Result<SpectralField> {
        if values.len() != self.domain.grid_len() {
            return Err(Error::Config(alloc::format!(
                "grid has {} values, expected {}",
                values.len(),
                self.domain.grid_len()
            )));
        }
        let mut coeffs = vec![0.0; self.domain.len()];
        self.to_spectral_into(values, &mut coeffs);
        SpectralField::from_coeffs(self.domain, coeffs)
    }

    pub fn to_spectral_into(&self, values: &[f64], coeffs: &mut [f64]) {
        let m = self.domain.grid();
        let n = self.domain.modes();
        let scale = 2.0 / (m + 1) as f64;
        match self.domain.dim() {
            1 => {
                for (k, c) in coeffs.iter_mut().enumerate().take(n) {
                    *c = scale * (0..m).map(|j| values[j] * self.s(j, k)).sum::<f64>();
                }
            }
            _ => {
                // tmp[a][k2] = Σ_b u[a][b] sin(k2 x_b)
                let mut tmp = vec![0.0; m * n];
                for a in 0..m {
                    for k2 in 0..n {
                        tmp[a * n + k2] = (0..m).map(|b| values[a * m + b] * self.s(b, k2)).sum();
                    }
                }
                for k1 in 0..n {
                    for k2 in 0..n {
                        let sum: f64 = (0..m).map(|a| self.s(a, k1) * tmp[a * n + k2]).sum();
                        coeffs[k1 * n + k2] = scale * scale * sum;
                    }
                }
            }
        }
    }

    /// Grid quadrature of `∫_Ω φ dx` for a function vanishing on `∂Ω`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_volume() * values.iter().sum::<f64>()
    }
}

/// Convenience wrapper around [`SineTransform::to_physical`].
pub fn to_physical(field: &SpectralField) -> Vec<f64> {
    SineTransform::new(*field.domain()).to_physical(field)
}

/// Convenience wrapper around [`SineTransform::to_spectral`].
pub fn to_spectral(domain: DomainSpec, values: &[f64]) -> Result<SpectralField> {
    SineTransform::new(domain).to_spectral(values)
}
