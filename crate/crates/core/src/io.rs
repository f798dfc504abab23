//! File formats: matrix and gain-table CSV, sampled gait trajectories and
//! calibration thresholds.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! every file round-trips bit for bit.

use std::fmt::Write as _;
use std::io::Read;

use nalgebra::{DMatrix, Dim, Matrix, RawStorage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{nominal_with, PeriodicGait};
use crate::linalg::*;
use crate::model::{build_continuous_dynamics, transition};
use crate::stabilizer::{DlqrWeights, GainTable};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Data(format!("bad number {s:?}: {e}")))
}

/// Row-major CSV without header.
pub fn matrix_to_csv<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(parse_f64).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Data("ragged matrix CSV".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t",
    "x_swing_x",
    "x_swing_y",
    "x_pelvis_x",
    "x_pelvis_y",
    "x_stance_x",
    "x_stance_y",
    "v_swing_x",
    "v_swing_y",
    "v_pelvis_x",
    "v_pelvis_y",
    "v_stance_x",
    "v_stance_y",
];

/// Nominal trajectory of one phase sampled at `samples` evenly spaced
/// instants including both ends.
pub fn sample_trajectory(gait: &PeriodicGait, samples: usize) -> Result<Vec<(f64, Vec12)>> {
    if samples < 2 {
        return Err(Error::Data("need at least two trajectory samples".into()));
    }
    let dyn_ = build_continuous_dynamics(&gait.params)?;
    (0..samples)
        .map(|i| {
            let t = if i + 1 == samples {
                gait.step_time
            } else {
                gait.step_time * i as f64 / (samples - 1) as f64
            };
            Ok((t, nominal_with(gait, &transition(&dyn_, t)?)))
        })
        .collect()
}

pub fn trajectory_to_csv(rows: &[(f64, Vec12)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(TRAJECTORY_HEADER)?;
    for (t, q) in rows {
        let mut rec = vec![fmt_f64(*t)];
        rec.extend(q.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

/// Metadata written next to a gain table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTableHeader {
    pub grid: usize,
    #[serde(rename = "T")]
    pub step_time: f64,
    pub weights: DlqrWeights,
}

/// Columns: `tau`, the 32 entries of `Gu` row-major, the 16 of `Gp`.
pub fn gain_table_to_csv(table: &GainTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    let mut header = vec!["tau".to_string()];
    header.extend((0..4).flat_map(|i| (0..8).map(move |j| format!("gu_{i}_{j}"))));
    header.extend((0..2).flat_map(|i| (0..8).map(move |j| format!("gp_{i}_{j}"))));
    w.write_record(&header)?;
    for (k, tau) in table.tau_grid.iter().enumerate() {
        let mut rec = vec![fmt_f64(*tau)];
        let (gu, gp) = (&table.gu[k], &table.gp[k]);
        rec.extend((0..4).flat_map(|i| (0..8).map(move |j| fmt_f64(gu[(i, j)]))));
        rec.extend((0..2).flat_map(|i| (0..8).map(move |j| fmt_f64(gp[(i, j)]))));
        w.write_record(&rec)?;
    }
    into_string(w)
}

pub fn gain_table_from_csv(text: &str, step_time: f64) -> Result<GainTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut table = GainTable {
        step_time,
        tau_grid: vec![],
        gu: vec![],
        gp: vec![],
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 49 {
            return Err(Error::Data(format!(
                "gain table row has {} columns, expected 49",
                rec.len()
            )));
        }
        let v = rec.iter().map(parse_f64).collect::<Result<Vec<_>>>()?;
        table.tau_grid.push(v[0]);
        table.gu.push(Mat4x8::from_row_slice(&v[1..33]));
        table.gp.push(Mat2x8::from_row_slice(&v[33..49]));
    }
    if table.tau_grid.len() < 2 {
        return Err(Error::Data("gain table needs at least two rows".into()));
    }
    Ok(table)
}

/// Calibrated per-channel dead-zone thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub thresholds: [f64; 8],
    /// Trace columns the thresholds were fitted on.
    pub source: String,
    pub samples: usize,
}

impl Thresholds {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reads the columns `{prefix}0..{prefix}{n-1}` of a CSV with header.
pub fn read_columns(reader: impl Read, prefix: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let idx = (0..n)
        .map(|i| {
            let name = format!("{prefix}{i}");
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Data(format!("missing column {name}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cols = vec![Vec::new(); n];
    for rec in r.records() {
        let rec = rec?;
        for (c, &i) in idx.iter().enumerate() {
            cols[c].push(parse_f64(&rec[i])?);
        }
    }
    Ok(cols)
}

/// Writes whitespace-separated columns with a `#` header line, readable by
/// gnuplot.
pub fn columns_to_dat(names: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = format!("# {}\n", names.join(" "));
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::solve_periodic;
    use crate::params::ModelParams;
    use crate::stabilizer::Controller;

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = Mat4x8::from_fn(|i, j| (i as f64 + 0.1) / (j as f64 + 3.0) * 1e-7 - 0.3);
        let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
        assert_eq!(back.shape(), (4, 8));
        for i in 0..4 {
            for j in 0..8 {
                assert_eq!(back[(i, j)].to_bits(), m[(i, j)].to_bits());
            }
        }
        assert!(matrix_from_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn gain_table_round_trip_is_exact() {
        let p = ModelParams::default();
        let g = solve_periodic(&p, Vec2::new(0.1, 0.0), p.step_time).unwrap();
        let table = Controller::with_default_weights(g)
            .unwrap()
            .export_gain_table(5)
            .unwrap();
        let back =
            gain_table_from_csv(&gain_table_to_csv(&table).unwrap(), table.step_time).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn trajectory_and_columns() {
        let p = ModelParams::default();
        let g = solve_periodic(&p, Vec2::zeros(), p.step_time).unwrap();
        let rows = sample_trajectory(&g, 11).unwrap();
        assert_eq!(rows.last().unwrap().0, p.step_time);
        let csv = trajectory_to_csv(&rows).unwrap();
        let cols = read_columns(csv.as_bytes(), "x_pelvis_", 0).unwrap();
        assert!(cols.is_empty());
        assert!(csv.starts_with("t,x_swing_x,"));
        assert_eq!(csv.lines().count(), 12);
        assert!(read_columns("a0,a1\n1,2\n".as_bytes(), "a", 3).is_err());
        assert_eq!(
            read_columns("a0,a1\n1,2\n".as_bytes(), "a", 2).unwrap(),
            vec![vec![1.0], vec![2.0]]
        );
    }
}
