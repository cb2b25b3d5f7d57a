//! File formats shared with the `qphase` binary: JSON state files, CSV count
//! files, and CSV slice files. All writers are deterministic (stable key and
//! row order) so identical inputs produce byte-identical artifacts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix;
use crate::states::DensityOperator;
use crate::tomography::{MeasurementSetting, TomographyDataset};
use crate::wigner::SliceData;
use crate::{Error, Result};

use num_complex::Complex64;

/// On-disk density operator: real and imaginary parts as nested arrays.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub n_qubits: usize,
    pub matrix_re: Vec<Vec<f64>>,
    pub matrix_im: Vec<Vec<f64>>,
}

/// Shortest decimal representation capped at 12 significant digits that
/// round-trips back to the rounded value.
pub fn format_float(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let rounded: f64 = format!("{value:.11e}").parse().expect("formatted float");
    format!("{rounded}")
}

/// Serializes a density operator to a [`StateFile`] JSON document.
pub fn write_state(path: &Path, rho: &DensityOperator) -> Result<()> {
    let dim = rho.dim();
    let mut re = vec![vec![0.0; dim]; dim];
    let mut im = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let z = rho.matrix()[(i, j)];
            re[i][j] = z.re;
            im[i][j] = z.im;
        }
    }
    let file = StateFile {
        n_qubits: rho.n_qubits(),
        matrix_re: re,
        matrix_im: im,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads and revalidates a [`StateFile`]; the matrix must satisfy every
/// density-operator invariant.
pub fn read_state(path: &Path) -> Result<DensityOperator> {
    let text = std::fs::read_to_string(path)?;
    let file: StateFile = serde_json::from_str(&text)?;
    let dim = 1usize << file.n_qubits;
    if file.matrix_re.len() != dim
        || file.matrix_im.len() != dim
        || file.matrix_re.iter().any(|r| r.len() != dim)
        || file.matrix_im.iter().any(|r| r.len() != dim)
    {
        return Err(Error::DimensionMismatch(format!(
            "state file declares {} qubits but the matrix is not {dim}x{dim}",
            file.n_qubits
        )));
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = Complex64::new(file.matrix_re[i][j], file.matrix_im[i][j]);
        }
    }
    DensityOperator::from_matrix(file.n_qubits, m)
}

/// Writes `setting,outcome,count` rows, every outcome of every setting, in
/// the dataset's setting order with outcomes ascending.
pub fn write_counts(path: &Path, data: &TomographyDataset) -> Result<()> {
    let n = data.n_qubits();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["setting", "outcome", "count"])?;
    for (setting, counts) in data.records() {
        for (outcome, &count) in counts.iter().enumerate() {
            w.write_record([
                setting.bases(),
                &format!("{outcome:0n$b}", n = n),
                &count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a counts CSV; rows for the same setting accumulate, missing outcomes
/// default to zero, and every setting must total the same shot count.
pub fn read_counts(path: &Path) -> Result<TomographyDataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["setting", "outcome", "count"] {
        return Err(Error::InvalidArgument(format!(
            "counts file header must be setting,outcome,count, got {headers:?}"
        )));
    }
    let mut n_qubits = None;
    let mut order: Vec<MeasurementSetting> = Vec::new();
    let mut table: Vec<Vec<u64>> = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() != 3 {
            return Err(Error::InvalidArgument(format!("bad counts row {row:?}")));
        }
        let setting = MeasurementSetting::new(&row[0])?;
        let n = *n_qubits.get_or_insert(setting.n_qubits());
        if setting.n_qubits() != n {
            return Err(Error::DimensionMismatch(format!(
                "setting {} length disagrees with earlier rows ({n} qubits)",
                setting.bases()
            )));
        }
        let outcome = &row[1];
        if outcome.len() != n || !outcome.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::InvalidArgument(format!(
                "outcome {outcome:?} is not a {n}-bit string"
            )));
        }
        let idx = usize::from_str_radix(outcome, 2).expect("validated bitstring");
        let count: u64 = row[2]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad count {:?}", &row[2])))?;
        let slot = match order.iter().position(|s| s == &setting) {
            Some(pos) => pos,
            None => {
                order.push(setting);
                table.push(vec![0u64; 1 << n]);
                table.len() - 1
            }
        };
        table[slot][idx] += count;
    }
    let n = n_qubits.ok_or_else(|| Error::IncompleteDataset("counts file has no rows".into()))?;
    let shots: u64 = table[0].iter().sum();
    if shots == 0 {
        return Err(Error::IncompleteDataset(
            "first setting carries zero counts".into(),
        ));
    }
    let records = order.into_iter().zip(table).collect();
    TomographyDataset::new(n, shots, records)
}

/// Writes `theta,phi,w` rows, row-major over the slice grid, 12 significant
/// digits per value.
pub fn write_slice(path: &Path, slice: &SliceData) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta", "phi", "w"])?;
    for (i, &theta) in slice.thetas.iter().enumerate() {
        for (j, &phi) in slice.phis.iter().enumerate() {
            let value = slice.values[i * slice.phis.len() + j];
            w.write_record([format_float(theta), format_float(phi), format_float(value)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a slice CSV back into [`SliceData`], reconstructing the grid axes
/// from the row-major ordering.
pub fn read_slice(path: &Path) -> Result<SliceData> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta", "phi", "w"] {
        return Err(Error::InvalidArgument(format!(
            "slice file header must be theta,phi,w, got {headers:?}"
        )));
    }
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for row in reader.records() {
        let row = row?;
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidArgument(format!("bad float {s:?} in slice file")))
        };
        rows.push((parse(&row[0])?, parse(&row[1])?, parse(&row[2])?));
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("slice file has no rows".into()));
    }
    let mut phis: Vec<f64> = Vec::new();
    for &(_, phi, _) in &rows {
        if !phis.is_empty() && phi == phis[0] {
            break;
        }
        phis.push(phi);
    }
    if !rows.len().is_multiple_of(phis.len()) {
        return Err(Error::InvalidArgument(
            "slice rows do not form a full grid".into(),
        ));
    }
    let thetas: Vec<f64> = rows
        .iter()
        .step_by(phis.len())
        .map(|&(t, _, _)| t)
        .collect();
    let values: Vec<f64> = rows.iter().map(|&(_, _, w)| w).collect();
    Ok(SliceData {
        thetas,
        phis,
        values,
    })
}
