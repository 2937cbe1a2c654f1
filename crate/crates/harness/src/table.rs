//! Results table and its CSV form.
//!
//! The CSV schema is one row per `(sweep value, scheme)`, sorted by value and
//! then scheme label, with floats in shortest round-trip scientific notation
//! so a parse of the emitted file reproduces the table exactly.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::config::{Scheme, SimError};

pub const CSV_HEADER: &str =
    "sweep_param,value,scheme,avg_power_watt,std_power_watt,trials,infeasible,violation_rate,rate_mse";

/// One aggregated `(sweep value, scheme)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub sweep_param: String,
    pub value: f64,
    pub scheme: Scheme,
    pub avg_power_watt: f64,
    pub std_power_watt: f64,
    /// Feasible trials that entered the averages.
    pub trials: usize,
    /// Trials dropped as infeasible; `trials + infeasible` is the configured count.
    pub infeasible: usize,
    /// Fraction of per-user SINR constraints violated across feasible trials.
    pub violation_rate: f64,
    /// Mean squared relative rate error across users and feasible trials.
    pub rate_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

impl ResultsTable {
    /// Builds a table, sorting rows by `(value, scheme label)`.
    pub fn new(mut rows: Vec<ResultsRow>) -> Self {
        rows.sort_by(|a, b| {
            a.value
                .partial_cmp(&b.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.scheme.label().cmp(b.scheme.label()))
        });
        Self { rows }
    }

    /// The row for one `(sweep value, scheme)` cell, if present.
    pub fn row(&self, value: f64, scheme: Scheme) -> Option<&ResultsRow> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.scheme == scheme)
    }

    /// All rows of one scheme, in sweep order.
    pub fn scheme_rows(&self, scheme: Scheme) -> Vec<&ResultsRow> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{},{:e},{:e},{},{},{:e},{:e}",
                r.sweep_param,
                r.value,
                r.scheme,
                r.avg_power_watt,
                r.std_power_watt,
                r.trials,
                r.infeasible,
                r.violation_rate,
                r.rate_mse,
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, self.to_csv()).map_err(|e| SimError::Io(path.display().to_string(), e))
    }

    pub fn from_csv_str(text: &str) -> Result<Self, SimError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header.trim() == CSV_HEADER => {}
            other => {
                return Err(SimError::Config(format!(
                    "unexpected CSV header: {other:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(SimError::Config(format!(
                    "CSV row {}: expected 9 fields, got {}",
                    idx + 2,
                    fields.len()
                )));
            }
            let num = |i: usize| -> Result<f64, SimError> {
                fields[i].parse::<f64>().map_err(|_| {
                    SimError::Config(format!("CSV row {}: bad number '{}'", idx + 2, fields[i]))
                })
            };
            let int = |i: usize| -> Result<usize, SimError> {
                fields[i].parse::<usize>().map_err(|_| {
                    SimError::Config(format!("CSV row {}: bad integer '{}'", idx + 2, fields[i]))
                })
            };
            rows.push(ResultsRow {
                sweep_param: fields[0].to_string(),
                value: num(1)?,
                scheme: Scheme::from_str(fields[2])?,
                avg_power_watt: num(3)?,
                std_power_watt: num(4)?,
                trials: int(5)?,
                infeasible: int(6)?,
                violation_rate: num(7)?,
                rate_mse: num(8)?,
            });
        }
        Ok(Self { rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(path.display().to_string(), e))?;
        Self::from_csv_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row(value: f64, scheme: Scheme) -> ResultsRow {
        ResultsRow {
            sweep_param: "rate".into(),
            value,
            scheme,
            avg_power_watt: 1.234567890123e-5 * value,
            std_power_watt: 3.3e-7,
            trials: 500,
            infeasible: 0,
            violation_rate: 0.0,
            rate_mse: 4.2e-18,
        }
    }

    #[test]
    fn empty_table_writes_header_only() {
        let table = ResultsTable::default();
        assert_eq!(table.to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_are_sorted_by_value_then_label() {
        let table = ResultsTable::new(vec![
            sample_row(3.0, Scheme::Zf),
            sample_row(1.0, Scheme::Olp),
            sample_row(1.0, Scheme::AOlp),
            sample_row(3.0, Scheme::Rzf),
        ]);
        let order: Vec<(f64, &str)> = table
            .rows
            .iter()
            .map(|r| (r.value, r.scheme.label()))
            .collect();
        assert_eq!(
            order,
            vec![(1.0, "A-OLP"), (1.0, "OLP"), (3.0, "RZF"), (3.0, "ZF")]
        );
        // 2 grid points x 2 schemes -> 4 data rows.
        assert_eq!(table.to_csv().lines().count(), 5);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let table = ResultsTable::new(vec![
            sample_row(0.1, Scheme::Olp),
            sample_row(0.1, Scheme::PaRzf),
            ResultsRow {
                sweep_param: "rate".into(),
                value: 5.0,
                scheme: Scheme::Zf,
                avg_power_watt: 7.721309243874319e-3,
                std_power_watt: 1.9481e-4,
                trials: 499,
                infeasible: 1,
                violation_rate: 2.5e-4,
                rate_mse: 1.77e-2,
            },
        ]);
        let parsed = ResultsTable::from_csv_str(&table.to_csv()).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn rejects_malformed_csv() {
        assert!(ResultsTable::from_csv_str("nope\n").is_err());
        let bad_row = format!("{CSV_HEADER}\nrate,1e0,OLP,1e-5\n");
        assert!(ResultsTable::from_csv_str(&bad_row).is_err());
        let bad_scheme = format!("{CSV_HEADER}\nrate,1e0,DPC,1e-5,0e0,5,0,0e0,0e0\n");
        assert!(ResultsTable::from_csv_str(&bad_scheme).is_err());
    }
}
