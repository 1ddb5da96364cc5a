//! Initial states from the `[initial]` section.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viscoplate::dynamics::{Model, PlateState};
use viscoplate::spectral::SpectralField;

use crate::clouds::state_from_row;
use crate::config::{InitialKind, InitialSpec};
use crate::error::{LabError, Result};
use crate::format::Table;

fn padded(model: &Model, coeffs: &[f64]) -> Result<SpectralField> {
    let mut c = coeffs.to_vec();
    c.resize(model.domain.len(), 0.0);
    Ok(SpectralField::from_coeffs(model.domain, c)?)
}

fn base(spec: &InitialSpec, model: &Model, seed: u64) -> Result<(SpectralField, SpectralField)> {
    let domain = model.domain;
    let n = domain.len();
    match &spec.kind {
        InitialKind::Profile { amplitude, velocity } => {
            let u: Vec<f64> = (0..n).map(|k| amplitude / (1.0 + k as f64).powi(2)).collect();
            let v: Vec<f64> = (0..n)
                .map(|k| velocity * if k % 2 == 0 { 1.0 } else { -1.0 } / (1.0 + k as f64).powi(2))
                .collect();
            Ok((padded(model, &u)?, padded(model, &v)?))
        }
        InitialKind::Rest => Ok((SpectralField::zeros(domain), SpectralField::zeros(domain))),
        InitialKind::Coefficients { u, v } => Ok((padded(model, u)?, padded(model, v)?)),
        InitialKind::Random { norm, band } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..n)
                    .map(|k| {
                        let idx = domain.multi_index(k);
                        let inside = idx[..domain.dim()].iter().all(|i| i <= band);
                        let x: f64 = rng.gen_range(-1.0..1.0);
                        if inside {
                            x / (1.0 + domain.eigenvalue(k)).powi(2)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            };
            let u = padded(model, &draw(&mut rng))?;
            let v = padded(model, &draw(&mut rng))?;
            let current = (u.lap_norm_sq() + v.grad_norm_sq()).sqrt();
            if current == 0.0 {
                return Ok((u, v));
            }
            let scale = norm / current;
            Ok((u.scaled(scale), v.scaled(scale)))
        }
        InitialKind::File { path, row } => {
            let table = Table::read(path)?;
            if table.rows.is_empty() {
                return Err(LabError::format(path, "no data rows"));
            }
            let row = row.unwrap_or(table.rows.len() - 1);
            state_from_row(path, &table, row, domain)
        }
    }
}

/// One state per configured scale, at `t = 0` with flat prehistory on a lag grid of spacing `dt`.
pub fn initial_states(spec: &InitialSpec, model: &Model, seed: u64, dt: f64) -> Result<Vec<PlateState>> {
    let (u, v) = base(spec, model, seed)?;
    spec.scales
        .iter()
        .map(|&s| Ok(PlateState::new(model, u.scaled(s), v.scaled(s), dt)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use viscoplate::dynamics::DampingSpec;
    use viscoplate::memory::MemoryKernel;
    use viscoplate::spectral::DomainSpec;

    fn model() -> Model {
        Model::new(DomainSpec::with_modes(2, 4).unwrap(), DampingSpec::constant(1.0))
            .with_kernel(MemoryKernel::new(1.0, 1.0))
    }

    #[test]
    fn random_data_has_the_requested_norm_and_band() {
        let spec = InitialSpec {
            kind: InitialKind::Random { norm: 2.5, band: 2 },
            scales: vec![1.0],
        };
        let m = model();
        let states = initial_states(&spec, &m, 11, 0.01).unwrap();
        let s = &states[0];
        assert!((s.phase_norm_sq().sqrt() - 2.5).abs() < 1e-12);
        let k = m.domain.flat_index(&[3, 1]).unwrap();
        assert_eq!(s.u.coeffs()[k], 0.0);
        let again = initial_states(&spec, &m, 11, 0.01).unwrap();
        assert_eq!(states, again);
        let other = initial_states(&spec, &m, 12, 0.01).unwrap();
        assert_ne!(states, other);
    }

    #[test]
    fn scales_multiply_the_base_state() {
        let spec = InitialSpec {
            kind: InitialKind::Coefficients {
                u: vec![1.0, 2.0],
                v: vec![],
            },
            scales: vec![1.0, -2.0],
        };
        let states = initial_states(&spec, &model(), 0, 0.01).unwrap();
        assert_eq!(states.len(), 2);
        assert_eq!(states[1].u.coeffs()[..3], [-2.0, -4.0, 0.0]);
        assert!(states[1].history.is_some());
    }
}
