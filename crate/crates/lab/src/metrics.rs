//! The long-format metrics log: `run_id,t,split,metric,value`.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use sweetspot_core::timing::AccuracySeries;
use sweetspot_core::train::{MetricsRecord, SplitMetrics};

use crate::error::{LabError, Result};

pub const HEADER: &str = "run_id,t,split,metric,value";

fn split_rows(out: &mut Vec<(&'static str, &'static str, f64)>, split: &'static str, m: &SplitMetrics) {
    out.push((split, "exact_match", m.exact_match));
    if let Some(v) = m.suffix_exact_match {
        out.push((split, "suffix_exact_match", v));
    }
    if let Some(v) = m.suffix_bit_accuracy {
        out.push((split, "suffix_bit_accuracy", v));
    }
    out.push((split, "token_accuracy", m.token_accuracy));
    out.push((split, "teacher_forced_accuracy", m.teacher_forced_accuracy));
}

/// The rows of one record, in a fixed order.
pub fn record_rows(record: &MetricsRecord) -> Vec<(&'static str, &'static str, f64)> {
    let mut rows = Vec::with_capacity(12);
    split_rows(&mut rows, "train", &record.train);
    split_rows(&mut rows, "validation", &record.validation);
    rows.push(("train", "loss", record.loss));
    rows.push(("train", "lr", record.lr));
    rows
}

pub fn record_lines(run_id: &str, record: &MetricsRecord) -> String {
    record_rows(record)
        .into_iter()
        .map(|(split, metric, value)| format!("{run_id},{},{split},{metric},{value}\n", record.t))
        .collect()
}

/// Append-only writer for one run.
pub struct MetricsWriter {
    file: File,
    run_id: String,
}

impl MetricsWriter {
    /// Starts a fresh log holding `existing` records.
    pub fn create(path: &Path, run_id: &str, existing: &[MetricsRecord]) -> Result<Self> {
        let mut file = File::create(path).map_err(LabError::io(path))?;
        let mut text = format!("{HEADER}\n");
        for r in existing {
            text.push_str(&record_lines(run_id, r));
        }
        file.write_all(text.as_bytes()).map_err(LabError::io(path))?;
        let file = OpenOptions::new().append(true).open(path).map_err(LabError::io(path))?;
        Ok(Self { file, run_id: run_id.to_string() })
    }

    pub fn append(&mut self, record: &MetricsRecord) -> std::io::Result<()> {
        self.file.write_all(record_lines(&self.run_id, record).as_bytes())?;
        self.file.flush()
    }
}

/// `(split, metric) -> [(t, value)]` for one run, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub series: BTreeMap<(String, String), Vec<(u64, f64)>>,
}

impl RunMetrics {
    pub fn get(&self, split: &str, metric: &str) -> Option<&[(u64, f64)]> {
        self.series.get(&(split.to_string(), metric.to_string())).map(Vec::as_slice)
    }

    pub fn accuracy(&self, split: &str, metric: &str, budget: u64) -> Result<Option<AccuracySeries>> {
        self.get(split, metric)
            .map(|points| {
                AccuracySeries::new(points.to_vec(), budget)
                    .map_err(|e| LabError::Data(format!("{split}/{metric}: {e}")))
            })
            .transpose()
    }

    /// A_T, A_V and (when logged) A_R.
    pub fn components(&self, budget: u64) -> Result<(AccuracySeries, AccuracySeries, Option<AccuracySeries>)> {
        let need = |s: Option<AccuracySeries>, what: &str| s.ok_or_else(|| LabError::Data(format!("no {what} series")));
        Ok((
            need(self.accuracy("train", "exact_match", budget)?, "train exact_match")?,
            need(self.accuracy("validation", "exact_match", budget)?, "validation exact_match")?,
            self.accuracy("train", "suffix_exact_match", budget)?,
        ))
    }
}

pub fn read_metrics(path: &Path) -> Result<RunMetrics> {
    if !path.exists() {
        return Err(LabError::MissingInput(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| LabError::Data(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| LabError::Data(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != HEADER {
        return Err(LabError::Data(format!("{}: unexpected header", path.display())));
    }
    let mut out = RunMetrics::default();
    for row in reader.records() {
        let row = row.map_err(|e| LabError::Data(format!("{}: {e}", path.display())))?;
        let bad = || LabError::Data(format!("{}: malformed row {row:?}", path.display()));
        let t: u64 = row[1].parse().map_err(|_| bad())?;
        let v: f64 = row[4].parse().map_err(|_| bad())?;
        out.series.entry((row[2].to_string(), row[3].to_string())).or_default().push((t, v));
    }
    Ok(out)
}
