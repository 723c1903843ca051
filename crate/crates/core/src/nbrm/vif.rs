//! Variance inflation factors from auxiliary least-squares regressions.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use super::{NbrmError, RegressionInput};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VifValue {
    Finite(f64),
    /// The column is (numerically) an exact linear combination of the others.
    Infinite,
}

impl VifValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            VifValue::Finite(v) => Some(v),
            VifValue::Infinite => None,
        }
    }
}

impl Serialize for VifValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            VifValue::Finite(v) => serializer.serialize_f64(*v),
            VifValue::Infinite => serializer.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VifEntry {
    pub column: String,
    pub vif: VifValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct VifReport {
    pub entries: Vec<VifEntry>,
}

impl VifReport {
    pub fn get(&self, column: &str) -> Option<VifValue> {
        self.entries
            .iter()
            .find(|e| e.column == column)
            .map(|e| e.vif)
    }

    pub fn has_infinite(&self) -> bool {
        self.entries.iter().any(|e| e.vif == VifValue::Infinite)
    }
}

/// Below this `1 - R²` a column is reported as perfectly collinear.
const COLLINEAR_TOL: f64 = 1e-10;

/// VIF of every non-intercept column, regressing it on the remaining
/// non-intercept columns plus an intercept.
pub fn vif(input: &RegressionInput) -> Result<VifReport, NbrmError> {
    let x = input.x();
    let n = x.nrows();
    let cols: Vec<usize> = (0..input.n_params())
        .filter(|&j| !input.is_intercept(j))
        .collect();
    if cols.len() < 2 {
        return Err(NbrmError::VifTooFewColumns);
    }

    let mut entries = Vec::with_capacity(cols.len());
    for &j in &cols {
        let target = x.column(j).clone_owned();
        let mean = target.mean();
        let sst: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();

        let others: Vec<usize> = cols.iter().copied().filter(|&k| k != j).collect();
        let mut design = DMatrix::from_element(n, others.len() + 1, 1.0);
        for (c, &k) in others.iter().enumerate() {
            design.set_column(c + 1, &x.column(k));
        }
        let residual = least_squares_residual(&design, &target);
        let ssr = residual.norm_squared();

        let vif = if sst <= 0.0 {
            VifValue::Infinite
        } else {
            let tolerance = ssr / sst;
            if tolerance < COLLINEAR_TOL {
                VifValue::Infinite
            } else {
                VifValue::Finite(1.0 / tolerance)
            }
        };
        entries.push(VifEntry {
            column: input.columns()[j].clone(),
            vif,
        });
    }
    Ok(VifReport { entries })
}

/// Residual of the minimum-norm least-squares fit; tolerates rank-deficient
/// designs.
fn least_squares_residual(design: &DMatrix<f64>, target: &DVector<f64>) -> DVector<f64> {
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let coef = svd
        .solve(target, max_sv * 1e-12)
        .expect("U and V were computed");
    target - design * coef
}
