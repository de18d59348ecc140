use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::StepperConfig;
use crate::spectral::{Grid, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("sample time {time} does not follow previous time {previous}")]
    NonIncreasingTime { time: f64, previous: f64 },
    #[error("sample has {got} values, record has {expected} columns")]
    WrongWidth { expected: usize, got: usize },
    #[error("no column named {0:?}")]
    MissingColumn(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub params: ModelParams,
    pub grid: Grid,
    pub stepper: StepperConfig,
    pub config_hash: String,
    pub code_version: String,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub values: Vec<f64>,
}

/// Time series of named scalars. Every sample carries every column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub metadata: RecordMetadata,
    columns: Vec<String>,
    samples: Vec<Sample>,
}

impl RunRecord {
    pub fn new(columns: Vec<String>, params: ModelParams, grid: Grid, stepper: StepperConfig) -> Self {
        Self {
            metadata: RecordMetadata {
                params,
                grid,
                stepper,
                config_hash: String::new(),
                code_version: crate::CODE_VERSION.to_string(),
                extra: BTreeMap::new(),
            },
            columns,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, values: Vec<f64>) -> Result<(), RecordError> {
        if values.len() != self.columns.len() {
            return Err(RecordError::WrongWidth {
                expected: self.columns.len(),
                got: values.len(),
            });
        }
        if let Some(last) = self.samples.last() {
            if !(time > last.time) {
                return Err(RecordError::NonIncreasingTime {
                    time,
                    previous: last.time,
                });
            }
        }
        self.samples.push(Sample { time, values });
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, RecordError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| RecordError::MissingColumn(name.to_string()))
    }

    /// `(time, value)` pairs of one column.
    pub fn series(&self, name: &str) -> Result<Vec<(f64, f64)>, RecordError> {
        let i = self.column_index(name)?;
        Ok(self.samples.iter().map(|s| (s.time, s.values[i])).collect())
    }

    pub fn last_value(&self, name: &str) -> Result<Option<f64>, RecordError> {
        let i = self.column_index(name)?;
        Ok(self.samples.last().map(|s| s.values[i]))
    }

    /// CSV with header `time,<columns...>`; values in shortest round-trip
    /// scientific notation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{:e}", s.time));
            for v in &s.values {
                out.push_str(&format!(",{v:e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}
