//! Negative binomial (NB2) regression of citation counts on multi-affiliation
//! marks and publication controls, with Wald inference and diagnostics.

mod design;
mod fit;
mod loglik;
mod table;
mod vif;

use nalgebra::DMatrix;

pub use design::{build_design, DesignOptions, FitThresholds, SkipReason, COLUMNS};
pub use fit::{
    nb2_fit, percent_change, pseudo_r2, stars, wald_stats, FitOptions, FitResult, WaldStats,
};
pub use loglik::{nb2_derivatives, nb2_loglik, poisson_loglik, Derivatives};
pub use table::{run_table, CellOutcome, EffectTable, TableCell, TableRow};
pub use vif::{vif, VifEntry, VifReport, VifValue};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NbrmError {
    #[error("dispersion alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("linear predictor not finite or out of range at row {row}")]
    NonFiniteLinearPredictor { row: usize },
    #[error("negative response value {value} at row {row}")]
    NegativeResponse { row: usize, value: i64 },
    #[error("non-finite covariate at row {row}, column {column}")]
    NonFiniteCovariate { row: usize, column: usize },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("column '{0}' is constant")]
    ConstantColumn(String),
    #[error("design matrix is rank deficient (columns: {0})")]
    RankDeficient(String),
    #[error("too few observations: {n_obs} rows for {n_params} parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },
    #[error("Hessian is not negative definite at the candidate optimum")]
    IndefiniteHessian,
    #[error("no convergence after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        partial: Box<FitResult>,
    },
    #[error("null log-likelihood is zero")]
    ZeroNullLoglik,
    #[error("VIF needs at least two non-intercept columns")]
    VifTooFewColumns,
}

/// Response counts and a named design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInput {
    y: Vec<u64>,
    x: DMatrix<f64>,
    columns: Vec<String>,
}

impl RegressionInput {
    /// Validates shapes, signs and finiteness. A column named `intercept` is
    /// expected to be all ones but is not required.
    pub fn new(y: Vec<i64>, x: DMatrix<f64>, columns: Vec<String>) -> Result<Self, NbrmError> {
        if x.nrows() != y.len() {
            return Err(NbrmError::DimensionMismatch {
                expected: y.len(),
                got: x.nrows(),
            });
        }
        if x.ncols() != columns.len() {
            return Err(NbrmError::DimensionMismatch {
                expected: x.ncols(),
                got: columns.len(),
            });
        }
        for (row, &value) in y.iter().enumerate() {
            if value < 0 {
                return Err(NbrmError::NegativeResponse { row, value });
            }
        }
        for column in 0..x.ncols() {
            if let Some(row) = x.column(column).iter().position(|v| !v.is_finite()) {
                return Err(NbrmError::NonFiniteCovariate { row, column });
            }
        }
        Ok(Self {
            y: y.into_iter().map(|v| v as u64).collect(),
            x,
            columns,
        })
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub(crate) fn is_intercept(&self, column: usize) -> bool {
        self.columns[column] == "intercept" && self.x.column(column).iter().all(|&v| v == 1.0)
    }

    /// Intercept-only design on the same rows.
    pub fn null_model(&self) -> Self {
        Self {
            y: self.y.clone(),
            x: DMatrix::from_element(self.n_obs(), 1, 1.0),
            columns: vec!["intercept".to_string()],
        }
    }

    /// Errors on any constant column other than the intercept.
    pub fn check_constant_columns(&self) -> Result<(), NbrmError> {
        for j in 0..self.n_params() {
            if self.is_intercept(j) {
                continue;
            }
            let col = self.x.column(j);
            if self.n_obs() > 0 && col.iter().all(|&v| v == col[0]) {
                return Err(NbrmError::ConstantColumn(self.columns[j].clone()));
            }
        }
        Ok(())
    }

    /// Returns a copy with column `name` multiplied by `factor`.
    pub fn with_scaled_column(&self, name: &str, factor: f64) -> Option<Self> {
        let j = self.column_index(name)?;
        let mut out = self.clone();
        out.x.column_mut(j).scale_mut(factor);
        Some(out)
    }

    /// Returns a copy with rows reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            y: order.iter().map(|&i| self.y[i]).collect(),
            x: self.x.select_rows(order),
            columns: self.columns.clone(),
        }
    }
}
