use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

pub const GERMAN_CREDIT_FEATURES: usize = 24;
pub const GERMAN_CREDIT_ROWS: usize = 1000;

/// Standardized German-credit features with binary labels (1 = bad credit).
#[derive(Debug, Clone, PartialEq)]
pub struct GermanCreditDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    /// Columns that were constant and left unscaled.
    pub constant_columns: Vec<usize>,
}

impl GermanCreditDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Seeded shuffle into `(train, test)` with `round(N · train_fraction)`
    /// training rows.
    pub fn split(&self, train_fraction: f64, seed: u64) -> (Self, Self) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng::seeded(seed));
        let n_train = (self.len() as f64 * train_fraction).round() as usize;
        let subset = |idx: &[usize]| GermanCreditDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            constant_columns: self.constant_columns.clone(),
        };
        (subset(&order[..n_train]), subset(&order[n_train..]))
    }
}

/// Reads UCI `german.data-numeric`: 1000 rows of 24 integer features and a
/// label in {1, 2}. Labels map 1 → 0 (good) and 2 → 1 (bad); features are
/// z-scored per column with the sample standard deviation.
pub fn load_german_credit(path: impl AsRef<Path>) -> Result<GermanCreditDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(lineno, format!("non-numeric field: {e}")))?;
        if fields.len() != GERMAN_CREDIT_FEATURES + 1 {
            return Err(bad(
                lineno,
                format!(
                    "expected {} columns, found {}",
                    GERMAN_CREDIT_FEATURES + 1,
                    fields.len()
                ),
            ));
        }
        let label = match fields[GERMAN_CREDIT_FEATURES] {
            l if l == 1.0 => 0,
            l if l == 2.0 => 1,
            l => return Err(bad(lineno, format!("label {l} outside {{1, 2}}"))),
        };
        features.push(fields[..GERMAN_CREDIT_FEATURES].to_vec());
        labels.push(label);
    }
    if features.len() != GERMAN_CREDIT_ROWS {
        return Err(bad(
            text.lines().count(),
            format!("expected {GERMAN_CREDIT_ROWS} rows, found {}", features.len()),
        ));
    }

    let n = features.len() as f64;
    let mut constant_columns = Vec::new();
    for c in 0..GERMAN_CREDIT_FEATURES {
        let mean = features.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = features.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = if var > 0.0 {
            var.sqrt()
        } else {
            log::warn!("{}: feature column {c} is constant", path.display());
            constant_columns.push(c);
            1.0
        };
        for row in features.iter_mut() {
            row[c] = (row[c] - mean) / sd;
        }
    }

    Ok(GermanCreditDataset {
        features,
        labels,
        constant_columns,
    })
}
