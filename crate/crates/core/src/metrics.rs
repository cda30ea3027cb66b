//! Confusion matrix, overall accuracy, average accuracy and Cohen's kappa.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with rows indexed by reference class and columns by predicted
/// class, both `1..=c` stored at `0..c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let c = rows.len();
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::Data("confusion matrix must be square".into()));
        }
        Ok(Self {
            classes: c,
            counts: rows.concat(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, reference: usize, predicted: usize) -> u64 {
        self.counts[reference * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i * self.classes..(i + 1) * self.classes].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.classes).map(|i| self.get(i, j)).sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.classes).map(|i| self.get(i, i)).sum()
    }

    /// Chance agreement `Σ rowᵢ·colᵢ / total²`.
    pub fn expected_agreement(&self) -> Result<f64> {
        let n = self.nonempty_total()? as f64;
        let s: f64 = (0..self.classes)
            .map(|i| self.row_sum(i) as f64 * self.col_sum(i) as f64)
            .sum();
        Ok(s / (n * n))
    }

    fn nonempty_total(&self) -> Result<u64> {
        match self.total() {
            0 => Err(Error::Data("confusion matrix is empty".into())),
            n => Ok(n),
        }
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.classes).map(|c| c.to_string()).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.classes {
            let row: Vec<String> = (0..self.classes).map(|j| self.get(i, j).to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Data("empty confusion CSV".into()))?;
        let c = header.split(',').count();
        let rows = lines
            .map(|l| {
                l.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<u64>()
                            .map_err(|e| Error::Data(format!("bad count {v:?}: {e}")))
                    })
                    .collect::<Result<Vec<u64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != c {
            return Err(Error::Data(format!("expected {c} rows, found {}", rows.len())));
        }
        Self::from_counts(&rows)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

pub fn confusion(reference: &[u16], predicted: &[u16], classes: u16) -> Result<ConfusionMatrix> {
    if reference.len() != predicted.len() {
        return Err(Error::dims(
            format!("{} predictions", reference.len()),
            predicted.len(),
        ));
    }
    let c = classes as usize;
    let mut cm = ConfusionMatrix::zeros(c);
    for (&t, &p) in reference.iter().zip(predicted) {
        for l in [t, p] {
            if l == 0 || l > classes {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    num_classes: classes,
                });
            }
        }
        cm.counts[(t as usize - 1) * c + p as usize - 1] += 1;
    }
    Ok(cm)
}

pub fn oa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonempty_total()?;
    Ok(cm.diagonal() as f64 / n as f64)
}

/// Mean per-class recall over reference classes that occur.
pub fn aa(cm: &ConfusionMatrix) -> Result<f64> {
    cm.nonempty_total()?;
    let recalls: Vec<f64> = (0..cm.classes)
        .filter(|&i| cm.row_sum(i) > 0)
        .map(|i| cm.get(i, i) as f64 / cm.row_sum(i) as f64)
        .collect();
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// `(p_o − p_e)/(1 − p_e)`, evaluated as `(N·Σdiag − Σrc)/(N² − Σrc)` on
/// the integer counts; `1` when `p_e = 1`.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonempty_total()? as u128;
    let chance: u128 = (0..cm.classes)
        .map(|i| cm.row_sum(i) as u128 * cm.col_sum(i) as u128)
        .sum();
    if chance == n * n {
        return Ok(1.0);
    }
    let agree = n * cm.diagonal() as u128;
    Ok((agree as f64 - chance as f64) / ((n * n - chance) as f64))
}

/// The three accuracy figures of one confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
}

impl Summary {
    pub fn of(cm: &ConfusionMatrix) -> Result<Self> {
        Ok(Self {
            oa: oa(cm)?,
            aa: aa(cm)?,
            kappa: kappa(cm)?,
        })
    }
}
