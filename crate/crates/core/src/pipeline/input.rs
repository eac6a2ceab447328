//! Input files: a labeled rational dissimilarity matrix, or labeled p-adic
//! points given by their digits.

use std::path::Path;

use num::rational::BigRational;
use serde::Deserialize;

use super::PipelineError;
use crate::padic::{parse_rational, PAdic};
use crate::ultraspace::DissimilarityMatrix;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    labels: Vec<String>,
    #[serde(default)]
    matrix: Option<Vec<Vec<Entry>>>,
    #[serde(default)]
    padic_points: Option<Vec<Vec<u32>>>,
    /// Valuation of the first digit of each point; zero when absent.
    #[serde(default)]
    valuations: Option<Vec<i64>>,
    #[serde(default)]
    prime: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone)]
pub enum InputData {
    Matrix(DissimilarityMatrix),
    /// Digits least significant first, with the valuation of the first digit.
    Points { labels: Vec<String>, digits: Vec<(i64, Vec<u32>)> },
}

#[derive(Debug, Clone)]
pub struct Input {
    pub data: InputData,
    pub prime: Option<u32>,
}

impl InputData {
    pub fn labels(&self) -> &[String] {
        match self {
            InputData::Matrix(m) => m.labels(),
            InputData::Points { labels, .. } => labels,
        }
    }

    /// Builds the points at the given prime and digit budget.
    pub fn points(&self, prime: u32, precision: usize, path: &Path) -> Result<Option<Vec<PAdic>>, PipelineError> {
        let InputData::Points { digits, .. } = self else {
            return Ok(None);
        };
        digits
            .iter()
            .enumerate()
            .map(|(i, (v, d))| {
                PAdic::from_digits(prime, *v, d, precision)
                    .map_err(|e| PipelineError::schema(path, format!("padic_points[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

pub fn read_input(path: &Path) -> Result<Input, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_input(&text, path)
}

pub fn parse_input(text: &str, path: &Path) -> Result<Input, PipelineError> {
    let raw: RawInput = serde_json::from_str(text).map_err(|e| PipelineError::from_json(path, e))?;
    let n = raw.labels.len();
    let data = match (raw.matrix, raw.padic_points) {
        (Some(_), Some(_)) => {
            return Err(PipelineError::schema(path, "give either \"matrix\" or \"padic_points\", not both"))
        }
        (None, None) => return Err(PipelineError::schema(path, "missing \"matrix\" or \"padic_points\"")),
        (Some(rows), None) => {
            let mut parsed = Vec::with_capacity(rows.len());
            for (i, row) in rows.into_iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for (j, entry) in row.into_iter().enumerate() {
                    let value = match entry {
                        Entry::Int(v) => Ok(BigRational::from_integer(v.into())),
                        Entry::Text(s) => parse_rational(&s),
                    }
                    .map_err(|e| PipelineError::schema(path, format!("matrix[{i}][{j}]: {e}")))?;
                    out.push(value);
                }
                parsed.push(out);
            }
            let matrix = DissimilarityMatrix::new(raw.labels, parsed)
                .map_err(|e| PipelineError::schema(path, format!("matrix: {e}")))?;
            InputData::Matrix(matrix)
        }
        (None, Some(points)) => {
            if points.len() != n {
                return Err(PipelineError::schema(path, format!("{n} labels but {} points", points.len())));
            }
            let valuations = raw.valuations.unwrap_or_else(|| vec![0; n]);
            if valuations.len() != n {
                return Err(PipelineError::schema(path, format!("{n} labels but {} valuations", valuations.len())));
            }
            InputData::Points { labels: raw.labels, digits: valuations.into_iter().zip(points).collect() }
        }
    };
    Ok(Input { data, prime: raw.prime })
}
