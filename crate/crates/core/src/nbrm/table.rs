//! Batch of per-discipline (optionally per-country) fits behind the effect
//! tables.

use rayon::prelude::*;

use super::{
    build_design, nb2_fit, vif, DesignOptions, FitOptions, FitResult, FitThresholds, VifReport,
};
use crate::ingest::Publication;
use crate::reference::{Country, Discipline};

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Fitted {
        fit: Box<FitResult>,
        vif: Option<VifReport>,
    },
    /// Below the minimum fit size.
    Skipped(String),
    /// The fit itself failed.
    Failed(String),
}

impl CellOutcome {
    pub fn fit(&self) -> Option<&FitResult> {
        match self {
            CellOutcome::Fitted { fit, .. } => Some(fit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub country: Option<Country>,
    pub n_obs: usize,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub discipline: Discipline,
    /// One cell in global mode, one per country otherwise.
    pub cells: Vec<TableCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectTable {
    pub countries: Option<Vec<Country>>,
    pub rows: Vec<TableRow>,
}

impl EffectTable {
    pub fn cells(&self) -> impl Iterator<Item = (Discipline, &TableCell)> {
        self.rows
            .iter()
            .flat_map(|r| r.cells.iter().map(move |c| (r.discipline, c)))
    }

    pub fn fitted_count(&self) -> usize {
        self.cells()
            .filter(|(_, c)| c.outcome.fit().is_some())
            .count()
    }
}

fn run_cell(
    publications: &[Publication],
    discipline: Discipline,
    country: Option<Country>,
    design: DesignOptions,
    thresholds: FitThresholds,
    options: &FitOptions,
) -> TableCell {
    let input = match build_design(publications, discipline, country, design) {
        Ok(input) => input,
        Err(e) => {
            return TableCell {
                country,
                n_obs: 0,
                outcome: CellOutcome::Failed(e.to_string()),
            }
        }
    };
    let n_obs = input.n_obs();
    if let Err(reason) = thresholds.check(&input) {
        return TableCell {
            country,
            n_obs,
            outcome: CellOutcome::Skipped(reason.to_string()),
        };
    }
    let outcome = match nb2_fit(&input, options) {
        Ok(fit) => CellOutcome::Fitted {
            fit: Box::new(fit),
            vif: vif(&input).ok(),
        },
        Err(e) => CellOutcome::Failed(e.to_string()),
    };
    TableCell {
        country,
        n_obs,
        outcome,
    }
}

/// Fits every requested cell; cells run in parallel, output order follows
/// `disciplines` then `countries`.
pub fn run_table(
    publications: &[Publication],
    disciplines: &[Discipline],
    countries: Option<&[Country]>,
    design: DesignOptions,
    thresholds: FitThresholds,
    options: &FitOptions,
) -> EffectTable {
    let keys: Vec<(Discipline, Option<Country>)> = disciplines
        .iter()
        .flat_map(|&d| match countries {
            Some(cs) => cs.iter().map(|&c| (d, Some(c))).collect::<Vec<_>>(),
            None => vec![(d, None)],
        })
        .collect();
    let mut cells: Vec<TableCell> = keys
        .par_iter()
        .map(|&(d, c)| run_cell(publications, d, c, design, thresholds, options))
        .collect();

    let per_row = countries.map_or(1, |c| c.len());
    let mut rows = Vec::with_capacity(disciplines.len());
    for &d in disciplines.iter().rev() {
        let row_cells = cells.split_off(cells.len() - per_row);
        rows.push(TableRow {
            discipline: d,
            cells: row_cells,
        });
    }
    rows.reverse();
    EffectTable {
        countries: countries.map(<[Country]>::to_vec),
        rows,
    }
}
