use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MethodologyLabel;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KappaError {
    #[error("label sequences differ in length ({human} human vs {machine} machine)")]
    LengthMismatch { human: usize, machine: usize },
    #[error("label sequences are empty")]
    Empty,
}

/// Agreement between a human rater (rows) and the classifier (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub n: u64,
    /// Row and column order of `confusion`.
    pub labels: [MethodologyLabel; 5],
    pub confusion: [[u64; 5]; 5],
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    /// `None` when expected agreement is 1 and kappa is undefined.
    pub kappa: Option<f64>,
    /// Diagonal over human row total, for labels the human used.
    pub per_category_accuracy: BTreeMap<MethodologyLabel, f64>,
}

pub fn cohen_kappa(
    human: &[MethodologyLabel],
    machine: &[MethodologyLabel],
) -> Result<KappaReport, KappaError> {
    if human.len() != machine.len() {
        return Err(KappaError::LengthMismatch {
            human: human.len(),
            machine: machine.len(),
        });
    }
    if human.is_empty() {
        return Err(KappaError::Empty);
    }
    let mut confusion = [[0u64; 5]; 5];
    for (h, m) in human.iter().zip(machine) {
        confusion[h.index()][m.index()] += 1;
    }
    let n = human.len() as u64;
    let trace: u64 = (0..5).map(|k| confusion[k][k]).sum();
    let rows: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..5)
        .map(|k| confusion.iter().map(|r| r[k]).sum())
        .collect();
    // Exact integer numerators; a single division each at the end.
    let chance: u128 = (0..5).map(|k| rows[k] as u128 * cols[k] as u128).sum();
    let n2 = n as u128 * n as u128;
    let p_o = trace as f64 / n as f64;
    let p_e = chance as f64 / n2 as f64;
    let kappa = (chance < n2).then(|| {
        // (p_o - p_e) / (1 - p_e) with both scaled by n^2
        let num = trace as f64 * n as f64 - chance as f64;
        let den = n2 as f64 - chance as f64;
        num / den
    });
    let per_category_accuracy = MethodologyLabel::ALL
        .iter()
        .filter(|l| rows[l.index()] > 0)
        .map(|&l| {
            (
                l,
                confusion[l.index()][l.index()] as f64 / rows[l.index()] as f64,
            )
        })
        .collect();
    Ok(KappaReport {
        n,
        labels: MethodologyLabel::ALL,
        confusion,
        observed_agreement: p_o,
        expected_agreement: p_e,
        kappa,
        per_category_accuracy,
    })
}
