use nalgebra::DMatrix;

use super::{NbrmError, RegressionInput};
use crate::classify::{classify_publication, domestic_flags};
use crate::ingest::{compute_tc_window, Publication, DEFAULT_CITATION_WINDOW};
use crate::reference::{Country, Discipline};

/// Design columns in order.
pub const COLUMNS: [&str; 7] = [
    "intercept",
    "NM_mark",
    "IM_mark",
    "N_refs",
    "N_ins",
    "N_c",
    "N_a",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignOptions {
    /// Publications with more authors are dropped.
    pub max_authors: usize,
    pub citation_window: usize,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            max_authors: 10,
            citation_window: DEFAULT_CITATION_WINDOW,
        }
    }
}

/// Builds the regression design for one discipline, optionally restricted to
/// publications with an address in `country`. In country mode the marks are
/// the country's domestic NM/IM flags; otherwise the global publication flags.
pub fn build_design(
    publications: &[Publication],
    discipline: Discipline,
    country: Option<Country>,
    options: DesignOptions,
) -> Result<RegressionInput, NbrmError> {
    let mut y = Vec::new();
    let mut values = Vec::new();
    for p in publications {
        if p.discipline != discipline || p.authors.len() > options.max_authors {
            continue;
        }
        let (nm, im) = match country {
            Some(c) if !p.has_country(c) => continue,
            Some(c) => {
                let f = domestic_flags(p, c);
                (f.p_nm_domestic, f.p_im_domestic)
            }
            None => {
                let f = classify_publication(p);
                (f.has_nm, f.has_im)
            }
        };
        // Ingested corpora always carry a complete window; skip anything else.
        let Ok(tc) = compute_tc_window(p, options.citation_window) else {
            log::warn!("publication {} has no usable citation count; dropped", p.id);
            continue;
        };
        y.push(tc as i64);
        values.extend_from_slice(&[
            1.0,
            nm as u8 as f64,
            im as u8 as f64,
            p.n_refs as f64,
            p.distinct_institutions().len() as f64,
            p.countries().len() as f64,
            p.authors.len() as f64,
        ]);
    }
    let n = y.len();
    RegressionInput::new(
        y,
        DMatrix::from_row_slice(n, COLUMNS.len(), &values),
        COLUMNS.iter().map(|c| c.to_string()).collect(),
    )
}

/// Minimum cell size for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitThresholds {
    pub min_rows: usize,
    /// Minimum number of rows with each mark set.
    pub min_mark_positives: usize,
}

impl Default for FitThresholds {
    fn default() -> Self {
        Self {
            min_rows: 50,
            min_mark_positives: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    TooFewRows {
        n_obs: usize,
        min_rows: usize,
    },
    TooFewMarks {
        column: String,
        positives: usize,
        min: usize,
    },
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::TooFewRows { n_obs, min_rows } => {
                write!(f, "{n_obs} rows < {min_rows}")
            }
            SkipReason::TooFewMarks {
                column,
                positives,
                min,
            } => write!(f, "{column} has {positives} positive rows < {min}"),
        }
    }
}

impl FitThresholds {
    pub fn check(&self, input: &RegressionInput) -> Result<(), SkipReason> {
        if input.n_obs() < self.min_rows {
            return Err(SkipReason::TooFewRows {
                n_obs: input.n_obs(),
                min_rows: self.min_rows,
            });
        }
        for name in ["NM_mark", "IM_mark"] {
            if let Some(j) = input.column_index(name) {
                let positives = input.x().column(j).iter().filter(|&&v| v > 0.0).count();
                if positives < self.min_mark_positives {
                    return Err(SkipReason::TooFewMarks {
                        column: name.to_string(),
                        positives,
                        min: self.min_mark_positives,
                    });
                }
            }
        }
        Ok(())
    }
}
