use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::AnalysisError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    /// Pearson on average ranks.
    Spearman,
}

/// Pairwise feature correlations. Entries involving a constant feature are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub method: CorrelationMethod,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// CSV with a header row of names; undefined entries are empty cells.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("feature");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in names.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    let _ = write!(out, "{v:?}");
                }
            }
            out.push('\n');
        }
        out
    }
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn correlation_matrix(x: &Matrix, method: CorrelationMethod) -> Result<CorrelationMatrix, AnalysisError> {
    let n = x.rows();
    if n < 2 {
        return Err(AnalysisError::TooFewSamples { needed: 2, got: n });
    }
    let d = x.cols();
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let c = x.column(j);
            match method {
                CorrelationMethod::Pearson => c,
                CorrelationMethod::Spearman => average_ranks(&c),
            }
        })
        .collect();
    // centered columns and their norms
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut values = vec![vec![None; d]; d];
    for a in 0..d {
        if norms[a] == 0.0 {
            continue;
        }
        values[a][a] = Some(1.0);
        for b in a + 1..d {
            if norms[b] == 0.0 {
                continue;
            }
            let dot: f64 = centered[a].iter().zip(&centered[b]).map(|(p, q)| p * q).sum();
            let r = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            values[a][b] = Some(r);
            values[b][a] = Some(r);
        }
    }
    Ok(CorrelationMatrix { method, values })
}
