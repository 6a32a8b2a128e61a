// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Trajectory CSV files.
//!
//! The first line is a `#` comment holding the run configuration as JSON,
//! followed by the header `n,S_1..S_d,G_1..G_d,M_1..M_d,N_1..N_d,a_n,b_n,residual`
//! and one row per recorded step. Reals are written in the shortest form
//! that parses back to the same double.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use cmerw_core::montecarlo::functionals::{LilTracker, QslAccumulator, LIL_THRESHOLD, QSL_MIN_HORIZON};
use cmerw_core::{ModelParams, Regime, WalkState};

use crate::error::{CliError, CliResult};
use crate::provenance::RunConfig;

pub fn header(d: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    for prefix in ["S", "G", "M", "N"] {
        h.extend((1..=d).map(|i| format!("{prefix}_{i}")));
    }
    h.extend(["a_n", "b_n", "residual"].map(String::from));
    h
}

pub struct TrajectoryWriter<W: Write> {
    csv: csv::Writer<W>,
    record: Vec<String>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W, run: &RunConfig, d: usize) -> CliResult<Self> {
        writeln!(out, "# {}", serde_json::to_string(run)?)?;
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(header(d))?;
        Ok(Self {
            csv,
            record: Vec::with_capacity(4 * d + 4),
        })
    }

    /// Writes the current state, which must carry martingale tracking.
    pub fn write_state(&mut self, state: &WalkState) -> CliResult<()> {
        let track = state
            .track()
            .ok_or_else(|| CliError::Usage("trajectory rows need martingale tracking".into()))?;
        self.record.clear();
        self.record.push(state.n().to_string());
        self.record.extend(state.position().iter().map(i64::to_string));
        self.record.extend(state.center_of_mass().iter().map(f64::to_string));
        self.record.extend(track.m().iter().map(f64::to_string));
        self.record.extend(track.n_martingale().iter().map(f64::to_string));
        self.record.push(track.gain().to_string());
        self.record.push(track.b().to_string());
        self.record.push(state.cm_decomposition_residual()?.to_string());
        self.csv.write_record(&self.record)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<W> {
        self.csv.flush()?;
        self.csv.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub n: u64,
    pub position: Vec<i64>,
    pub center: Vec<f64>,
    pub m: Vec<f64>,
    pub n_martingale: Vec<f64>,
    pub gain: f64,
    pub b: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryFile {
    pub run: Option<RunConfig>,
    pub d: usize,
    pub rows: Vec<TrajectoryRow>,
}

fn parse<T: std::str::FromStr>(field: &str, line: usize) -> CliResult<T> {
    field
        .parse()
        .map_err(|_| CliError::Usage(format!("trajectory row {line}: cannot parse {field:?}")))
}

pub fn read_trajectory<'r>(input: impl BufRead + 'r) -> CliResult<TrajectoryFile> {
    let mut input = input;
    let mut first = String::new();
    input.read_line(&mut first)?;
    let (run, header_line) = match first.strip_prefix('#') {
        Some(json) => (Some(serde_json::from_str::<RunConfig>(json.trim())?), None),
        None => (None, Some(first)),
    };
    let reader: Box<dyn Read + 'r> = match header_line {
        Some(h) => Box::new(std::io::Cursor::new(h.into_bytes()).chain(input)),
        None => Box::new(input),
    };
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let head = csv.headers()?.clone();
    if head.len() < 8 || (head.len() - 4) % 4 != 0 {
        return Err(CliError::Usage(format!("unexpected trajectory header with {} columns", head.len())));
    }
    let d = (head.len() - 4) / 4;
    if head.iter().collect::<Vec<_>>() != header(d) {
        return Err(CliError::Usage("trajectory header does not match the expected columns".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in csv.records().enumerate() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let reals = |start: usize| -> CliResult<Vec<f64>> { (start..start + d).map(|i| parse(f(i), line)).collect() };
        rows.push(TrajectoryRow {
            n: parse(f(0), line)?,
            position: (1..=d).map(|i| parse(f(i), line)).collect::<CliResult<_>>()?,
            center: reals(1 + d)?,
            m: reals(1 + 2 * d)?,
            n_martingale: reals(1 + 3 * d)?,
            gain: parse(f(1 + 4 * d), line)?,
            b: parse(f(2 + 4 * d), line)?,
            residual: parse(f(3 + 4 * d), line)?,
        });
    }
    Ok(TrajectoryFile { run, d, rows })
}

/// Values recomputed from a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub rows: usize,
    /// Largest residual column entry.
    pub recorded_max_residual: f64,
    /// Largest `‖G_n − (b_n M_n − N_n)/n‖` recomputed from the other columns.
    pub recomputed_max_residual: f64,
    /// Largest gap between `M_n` and `a_n S_n`, relative to `max(1, |a_n S_n|)`.
    pub representation_gap: f64,
    /// Present for diffusive and critical models when the file has every
    /// step from 1 and enough of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qsl_trace: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lil_running_max: Option<f64>,
}

pub fn replay(file: &TrajectoryFile, params: Option<&ModelParams>) -> ReplayReport {
    let mut recorded = 0.0f64;
    let mut recomputed = 0.0f64;
    let mut gap = 0.0f64;
    for row in &file.rows {
        recorded = recorded.max(row.residual);
        let nf = row.n as f64;
        let r2: f64 = (0..file.d)
            .map(|i| {
                let rebuilt = (row.b * row.m[i] - row.n_martingale[i]) / nf;
                (row.center[i] - rebuilt).powi(2)
            })
            .sum();
        recomputed = recomputed.max(r2.sqrt());
        let scale = row.position.iter().fold(1.0f64, |s, &x| s.max((row.gain * x as f64).abs()));
        for i in 0..file.d {
            gap = gap.max((row.m[i] - row.gain * row.position[i] as f64).abs() / scale);
        }
    }
    let consecutive = file.rows.iter().enumerate().all(|(i, r)| r.n == i as u64 + 1);
    let (mut qsl_trace, mut lil_running_max) = (None, None);
    // The strong-law and iterated-logarithm functionals have no limit when a > 1/2.
    let params = params.filter(|p| p.regime() != Regime::Superdiffusive);
    if let (Some(params), true) = (params, consecutive) {
        let mut qsl = QslAccumulator::new(file.d, params.regime());
        let mut lil = LilTracker::new(params.regime());
        for r in &file.rows {
            qsl.push(r.n, &r.center);
            lil.push(r.n, &r.center);
        }
        let n = file.rows.len() as u64;
        if n >= QSL_MIN_HORIZON {
            qsl_trace = qsl.trace().ok();
        }
        if n >= LIL_THRESHOLD {
            lil_running_max = Some(lil.running_max());
        }
    }
    ReplayReport {
        rows: file.rows.len(),
        recorded_max_residual: recorded,
        recomputed_max_residual: recomputed,
        representation_gap: gap,
        qsl_trace,
        lil_running_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        assert_eq!(header(1).join(","), "n,S_1,G_1,M_1,N_1,a_n,b_n,residual");
        assert_eq!(
            header(2).join(","),
            "n,S_1,S_2,G_1,G_2,M_1,M_2,N_1,N_2,a_n,b_n,residual"
        );
    }

    #[test]
    fn reads_file_without_provenance() {
        let text = "n,S_1,G_1,M_1,N_1,a_n,b_n,residual\n1,1,1,1,0,1,1,0\n2,2,1.5,1.5,0.5,0.75,2.3333333333333335,0\n";
        let f = read_trajectory(text.as_bytes()).unwrap();
        assert!(f.run.is_none());
        assert_eq!(f.d, 1);
        assert_eq!(f.rows.len(), 2);
        assert_eq!(f.rows[1].b, 2.3333333333333335);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(read_trajectory("n,S_1,G_1\n1,1,1\n".as_bytes()).is_err());
        assert!(read_trajectory("n,X_1,G_1,M_1,N_1,a_n,b_n,residual\n".as_bytes()).is_err());
    }
}
