//! Snapshot clouds on disk.
//!
//! `cloud_<i>.csv` has one row per snapshot:
//!
//! ```text
//! index,epsilon,shift,t,u_<k>...,v_<k>...,history_sha256
//! ```
//!
//! where `<k>` is the mode label (`3` in 1-d, `1_2` in 2-d) and the digest
//! covers the little-endian bytes of `η(s_1), …, η(s_J)` in flat order, or is
//! `none` without memory. The sidecar `cloud_<i>.json` records the domain,
//! kernel and lag spacing; `cloud_<i>_history.csv` (optional) holds the full
//! histories as `index,lag,c_<k>...`.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use viscoplate::attractor::{CloudMetadata, SnapshotCloud};
use viscoplate::dynamics::PlateState;
use viscoplate::memory::{HistoryField, MemoryKernel};
use viscoplate::spectral::{DomainSpec, SpectralField};

use crate::error::{LabError, Result};
use crate::format::{num, parse_float, sha256_hex, Artifacts, Cell, Csv, Table};

/// `3` in 1-d, `1_2` in 2-d.
pub fn mode_label(domain: &DomainSpec, flat: usize) -> String {
    let k = domain.multi_index(flat);
    match domain.dim() {
        1 => k[0].to_string(),
        _ => format!("{}_{}", k[0], k[1]),
    }
}

/// `u_<k>` for every mode, then `v_<k>`.
pub fn state_columns(domain: &DomainSpec) -> Vec<String> {
    let labels: Vec<String> = (0..domain.len()).map(|k| mode_label(domain, k)).collect();
    labels
        .iter()
        .map(|l| format!("u_{l}"))
        .chain(labels.iter().map(|l| format!("v_{l}")))
        .collect()
}

pub fn state_cells(state: &PlateState) -> impl Iterator<Item = Cell> + '_ {
    state.u.coeffs().iter().chain(state.v.coeffs()).map(|x| Cell::Float(*x))
}

fn history_bytes(history: &HistoryField) -> Vec<u8> {
    let n = history.domain().len();
    let mut value = vec![0.0; n];
    let mut bytes = Vec::with_capacity(history.lags() * n * 8);
    for j in 1..=history.lags() {
        history.value_into(j, &mut value);
        for x in &value {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    bytes
}

pub fn history_digest(state: &PlateState) -> String {
    state
        .history
        .as_ref()
        .map_or_else(|| String::from("none"), |h| sha256_hex(&history_bytes(h)))
}

/// Reads `(u, v)` from `row` of a table with `u_*`/`v_*` columns.
pub fn state_from_row(
    path: &Path,
    table: &Table,
    row: usize,
    domain: DomainSpec,
) -> Result<(SpectralField, SpectralField)> {
    let cells = table
        .rows
        .get(row)
        .ok_or_else(|| LabError::format(path, format!("no row {row}")))?;
    let read = |prefix: &str| -> Result<SpectralField> {
        let coeffs = (0..domain.len())
            .map(|k| {
                let name = format!("{prefix}_{}", mode_label(&domain, k));
                let col = table
                    .column(&name)
                    .ok_or_else(|| LabError::format(path, format!("missing column {name}")))?;
                parse_float(path, &cells[col])
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(SpectralField::from_coeffs(domain, coeffs)?)
    };
    Ok((read("u")?, read("v")?))
}

fn kernel_json(kernel: Option<&MemoryKernel>) -> Value {
    kernel.map_or(Value::Null, |k| {
        json!({
            "amplitude": num(k.amplitude),
            "decay_rate": num(k.decay_rate),
            "truncation": num(k.truncation),
        })
    })
}

/// Writes the cloud, its sidecar and optionally the full histories; returns the CSV name.
pub fn write_cloud(
    artifacts: &mut Artifacts,
    index: usize,
    cloud: &SnapshotCloud,
    with_history: bool,
) -> Result<String> {
    let first = cloud
        .points
        .first()
        .ok_or_else(|| LabError::format(artifacts.dir(), "cannot write an empty cloud"))?;
    let domain = *first.domain();
    let mut header = vec!["index".to_string(), "epsilon".into(), "shift".into(), "t".into()];
    header.extend(state_columns(&domain));
    header.push("history_sha256".into());
    let mut csv = Csv::new(&header);
    for (i, point) in cloud.points.iter().enumerate() {
        let mut row = vec![
            Cell::from(i),
            Cell::from(cloud.metadata.damping_epsilon),
            Cell::from(cloud.metadata.shifts[i]),
            Cell::from(cloud.metadata.times[i]),
        ];
        row.extend(state_cells(point));
        row.push(Cell::Text(history_digest(point)));
        csv.row(row);
    }
    let name = format!("cloud_{index}.csv");
    artifacts.write_csv(&name, csv)?;

    let history = first.history.as_ref();
    let history_name = (with_history && history.is_some()).then(|| format!("cloud_{index}_history.csv"));
    if let Some(history_name) = &history_name {
        let mut header = vec!["index".to_string(), "lag".into()];
        header.extend((0..domain.len()).map(|k| format!("c_{}", mode_label(&domain, k))));
        let mut csv = Csv::new(&header);
        let mut value = vec![0.0; domain.len()];
        for (i, point) in cloud.points.iter().enumerate() {
            let h = point
                .history
                .as_ref()
                .expect("every point of a memory cloud has a history");
            for j in 1..=h.lags() {
                h.value_into(j, &mut value);
                let mut row = vec![Cell::from(i), Cell::from(j)];
                row.extend(value.iter().map(|x| Cell::Float(*x)));
                csv.row(row);
            }
        }
        artifacts.write_csv(history_name, csv)?;
    }

    let sidecar = json!({
        "dim": domain.dim(),
        "modes": domain.modes(),
        "grid": domain.grid(),
        "kernel": kernel_json(history.map(|h| h.kernel())),
        "spacing": history.map_or(Value::Null, |h| num(h.spacing())),
        "lags": history.map_or(Value::Null, |h| json!(h.lags())),
        "snapshots": cloud.len(),
        "damping_epsilon": num(cloud.metadata.damping_epsilon),
        "transient_warning": cloud.metadata.transient_warning,
        "history_file": history_name.as_ref().map_or(Value::Null, |n| json!(n)),
    });
    artifacts.write_json(&format!("cloud_{index}.json"), &sidecar)?;
    Ok(name)
}

/// A cloud read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedCloud {
    pub cloud: SnapshotCloud,
    /// Histories were restored and verified against their digests.
    pub with_history: bool,
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn json_f64(path: &Path, doc: &Value, key: &str) -> Result<f64> {
    doc[key]
        .as_f64()
        .ok_or_else(|| LabError::format(path, format!("missing number `{key}`")))
}

fn json_usize(path: &Path, doc: &Value, key: &str) -> Result<usize> {
    doc[key]
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| LabError::format(path, format!("missing integer `{key}`")))
}

/// Reads `cloud_<i>.csv` together with its sidecar and, when present, its histories.
pub fn read_cloud(path: &Path) -> Result<LoadedCloud> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| LabError::io(&side, e))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| LabError::format(&side, e.to_string()))?;
    let domain = DomainSpec::new(
        json_usize(&side, &doc, "dim")?,
        json_usize(&side, &doc, "modes")?,
        json_usize(&side, &doc, "grid")?,
    )?;
    let table = Table::read(path)?;
    let column = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| LabError::format(path, format!("missing column {name}")))
    };
    let (c_eps, c_shift, c_t, c_digest) = (
        column("epsilon")?,
        column("shift")?,
        column("t")?,
        column("history_sha256")?,
    );

    let kernel_spec = match &doc["kernel"] {
        Value::Object(_) => Some((
            MemoryKernel::new(
                json_f64(&side, &doc["kernel"], "amplitude")?,
                json_f64(&side, &doc["kernel"], "decay_rate")?,
            )
            .with_truncation(json_f64(&side, &doc["kernel"], "truncation")?),
            json_f64(&side, &doc, "spacing")?,
        )),
        _ => None,
    };
    let histories = match (kernel_spec, doc["history_file"].as_str()) {
        (Some(_), Some(name)) => Some(read_histories(&path.with_file_name(name), domain, table.rows.len())?),
        _ => None,
    };

    let mut points = Vec::with_capacity(table.rows.len());
    let mut shifts = Vec::with_capacity(table.rows.len());
    let mut times = Vec::with_capacity(table.rows.len());
    let mut epsilon = f64::NAN;
    for (i, row) in table.rows.iter().enumerate() {
        let (u, v) = state_from_row(path, &table, i, domain)?;
        let t = parse_float(path, &row[c_t])?;
        epsilon = parse_float(path, &row[c_eps])?;
        shifts.push(parse_float(path, &row[c_shift])?);
        times.push(t);
        let mut state = PlateState { t, u, v, history: None };
        if let (Some(all), Some((kernel, spacing))) = (&histories, kernel_spec) {
            let history = HistoryField::from_values(domain, kernel, spacing, &all[i])?;
            state.history = Some(history);
            let digest = history_digest(&state);
            if digest != row[c_digest] {
                return Err(LabError::format(
                    path,
                    format!("history of snapshot {i} does not match its digest"),
                ));
            }
        }
        points.push(state);
    }
    Ok(LoadedCloud {
        with_history: histories.is_some(),
        cloud: SnapshotCloud {
            points,
            metadata: CloudMetadata {
                damping_epsilon: epsilon,
                shifts,
                times,
                transient_warning: doc["transient_warning"].as_bool().unwrap_or(false),
            },
        },
    })
}

// η(s_1..s_J) per snapshot from a history file
fn read_histories(file: &Path, domain: DomainSpec, snapshots: usize) -> Result<Vec<Vec<SpectralField>>> {
    let table = Table::read(file)?;
    let coeff_cols = (0..domain.len())
        .map(|k| {
            let name = format!("c_{}", mode_label(&domain, k));
            table
                .column(&name)
                .ok_or_else(|| LabError::format(file, format!("missing column {name}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut all = vec![Vec::new(); snapshots];
    for row in &table.rows {
        let index: usize = row[0]
            .parse()
            .map_err(|_| LabError::format(file, format!("bad index {:?}", row[0])))?;
        let target = all
            .get_mut(index)
            .ok_or_else(|| LabError::format(file, format!("index {index} beyond the cloud")))?;
        let coeffs = coeff_cols
            .iter()
            .map(|&c| parse_float(file, &row[c]))
            .collect::<Result<Vec<f64>>>()?;
        target.push(SpectralField::from_coeffs(domain, coeffs)?);
    }
    Ok(all)
}

/// Drops every history so that clouds with and without stored histories compare.
pub fn without_history(mut cloud: SnapshotCloud) -> SnapshotCloud {
    for p in &mut cloud.points {
        p.history = None;
    }
    cloud
}
