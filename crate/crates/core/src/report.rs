//! CSV and JSON output layouts. Percentages carry one decimal, ratios two.

use std::io::Write;

use serde::Serialize;

use crate::classify::MultiKind;
use crate::nbrm::{CellOutcome, EffectTable, FitResult, TableCell, VifReport};
use crate::reference::{Country, Discipline};
use crate::shares::{
    CorpusSummary, DisciplineShares, HospUnivRow, InstitutionRank, RatioMatrix, ShareMatrix,
};

pub type CsvResult = Result<(), csv::Error>;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

pub fn write_table3<W: Write>(summary: &CorpusSummary, w: W) -> CsvResult {
    let mut out = writer(w);
    out.write_record(["row", "total", "p_m", "p_nm", "p_im", "p_nom"])?;
    out.write_record([
        "pubs".to_string(),
        summary.total.to_string(),
        summary.p_m.to_string(),
        summary.p_nm.to_string(),
        summary.p_im.to_string(),
        summary.p_nom.to_string(),
    ])?;
    out.write_record([
        "share".to_string(),
        "-".to_string(),
        summary.share_p_m().percent(),
        summary.share_p_nm().percent(),
        summary.share_p_im().percent(),
        summary.share_p_nom().percent(),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn write_table_a1<W: Write>(shares: &DisciplineShares, w: W) -> CsvResult {
    let mut out = writer(w);
    out.write_record(["discipline", "share_p_m", "share_p_nm", "share_p_im"])?;
    for row in &shares.rows {
        out.write_record([
            row.discipline.code().to_string(),
            row.p_m.percent(),
            row.p_nm.percent(),
            row.p_im.percent(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn matrix_header(cols: &[Discipline]) -> Vec<String> {
    std::iter::once("country".to_string())
        .chain(cols.iter().map(|d| d.code().to_string()))
        .collect()
}

/// Country rows by discipline columns; empty where a country has no
/// publications in the discipline.
pub fn write_share_matrix<W: Write>(matrix: &ShareMatrix, w: W) -> CsvResult {
    let mut out = writer(w);
    out.write_record(matrix_header(&matrix.cols))?;
    for (country, row) in matrix.rows.iter().zip(&matrix.cells) {
        let mut record = vec![country.to_string()];
        record.extend(
            row.iter()
                .map(|c| c.map(|c| c.percent()).unwrap_or_default()),
        );
        out.write_record(record)?;
    }
    out.flush()?;
    Ok(())
}

/// Normalized ratios; `NA` where undefined.
pub fn write_ratio_matrix<W: Write>(matrix: &RatioMatrix, w: W) -> CsvResult {
    let mut out = writer(w);
    out.write_record(matrix_header(&matrix.cols))?;
    for (country, row) in matrix.rows.iter().zip(&matrix.ratios) {
        let mut record = vec![country.to_string()];
        record.extend(
            row.iter()
                .map(|r| r.map(|r| r.formatted()).unwrap_or_else(|| "NA".to_string())),
        );
        out.write_record(record)?;
    }
    out.flush()?;
    Ok(())
}

pub struct TopK<'a> {
    pub country: Country,
    pub kind: MultiKind,
    pub ranks: &'a [InstitutionRank],
}

pub fn write_topk<W: Write>(groups: &[TopK<'_>], w: W) -> CsvResult {
    let mut out = writer(w);
    out.write_record([
        "country",
        "kind",
        "rank",
        "inst_id",
        "inst_name",
        "count",
        "share_in_total",
    ])?;
    for g in groups {
        for (i, r) in g.ranks.iter().enumerate() {
            out.write_record([
                g.country.to_string(),
                g.kind.to_string(),
                (i + 1).to_string(),
                r.inst_id.clone(),
                r.inst_name.clone(),
                r.count.to_string(),
                r.share_in_total.percent(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_fig_a1<W: Write>(rows: &[HospUnivRow], w: W) -> CsvResult {
    let mut out = writer(w);
    out.write_record(["discipline", "numerator", "denominator", "share"])?;
    for r in rows {
        out.write_record([
            r.discipline.code().to_string(),
            r.numerator.to_string(),
            r.denominator.to_string(),
            r.share()
                .map(|s| s.percent())
                .unwrap_or_else(|| "NA".into()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Percent change with significance stars, e.g. `16.9***`.
pub fn effect_cell(fit: &FitResult, column: &str) -> String {
    match fit.coefficient(column) {
        Some(k) => format!("{:.1}{}", fit.pct_change[k], fit.stars[k]),
        None => String::new(),
    }
}

const EFFECT_COLUMNS: [&str; 6] = ["NM_mark", "IM_mark", "N_refs", "N_ins", "N_c", "N_a"];

fn status(cell: &TableCell) -> String {
    match &cell.outcome {
        CellOutcome::Fitted { .. } => "ok".to_string(),
        CellOutcome::Skipped(why) => format!("skipped: {why}"),
        CellOutcome::Failed(why) => format!("failed: {why}"),
    }
}

fn marker(cell: &TableCell) -> &'static str {
    match cell.outcome {
        CellOutcome::Fitted { .. } => "",
        CellOutcome::Skipped(_) => "skipped",
        CellOutcome::Failed(_) => "failed",
    }
}

/// One row per discipline: percent changes for every covariate plus the
/// McFadden pseudo-R².
pub fn write_table4<W: Write>(table: &EffectTable, w: W) -> CsvResult {
    let mut out = writer(w);
    let mut header = vec!["discipline", "n_obs"];
    header.extend(EFFECT_COLUMNS);
    header.extend(["R-Squared(McFadden)", "status"]);
    out.write_record(&header)?;
    for row in &table.rows {
        let Some(cell) = row.cells.first() else {
            continue;
        };
        let mut record = vec![row.discipline.code().to_string(), cell.n_obs.to_string()];
        match cell.outcome.fit() {
            Some(fit) => {
                record.extend(EFFECT_COLUMNS.iter().map(|c| effect_cell(fit, c)));
                record.push(fit.pseudo_r2.map(|r| format!("{r:.2}")).unwrap_or_default());
            }
            None => record.extend(std::iter::repeat_n(
                marker(cell).to_string(),
                EFFECT_COLUMNS.len() + 1,
            )),
        }
        record.push(status(cell));
        out.write_record(record)?;
    }
    out.flush()?;
    Ok(())
}

/// Discipline rows with an NM_mark / IM_mark pair per country.
pub fn write_table5<W: Write>(table: &EffectTable, w: W) -> CsvResult {
    let mut out = writer(w);
    let countries = table.countries.as_deref().unwrap_or(&[]);
    let mut header = vec!["discipline".to_string()];
    for c in countries {
        header.push(format!("{c}_NM_mark"));
        header.push(format!("{c}_IM_mark"));
    }
    out.write_record(&header)?;
    for row in &table.rows {
        let mut record = vec![row.discipline.code().to_string()];
        for cell in &row.cells {
            match cell.outcome.fit() {
                Some(fit) => {
                    record.push(effect_cell(fit, "NM_mark"));
                    record.push(effect_cell(fit, "IM_mark"));
                }
                None => {
                    record.push(marker(cell).to_string());
                    record.push(marker(cell).to_string());
                }
            }
        }
        out.write_record(record)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-fit JSON document.
#[derive(Debug, Serialize)]
pub struct FitReport<'a> {
    pub discipline: Discipline,
    pub country: Option<Country>,
    pub columns: &'a [String],
    pub beta: &'a [f64],
    pub alpha: f64,
    pub se: &'a [f64],
    pub z: &'a [f64],
    pub p: &'a [f64],
    pub stars: &'a [String],
    pub pct_change: &'a [f64],
    pub loglik: f64,
    pub loglik_null: Option<f64>,
    pub pseudo_r2: Option<f64>,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub vif: Option<&'a VifReport>,
}

impl<'a> FitReport<'a> {
    pub fn new(
        discipline: Discipline,
        country: Option<Country>,
        fit: &'a FitResult,
        vif: Option<&'a VifReport>,
    ) -> Self {
        Self {
            discipline,
            country,
            columns: &fit.columns,
            beta: &fit.beta,
            alpha: fit.alpha,
            se: &fit.se,
            z: &fit.z,
            p: &fit.p,
            stars: &fit.stars,
            pct_change: &fit.pct_change,
            loglik: fit.loglik,
            loglik_null: fit.loglik_null,
            pseudo_r2: fit.pseudo_r2,
            n_obs: fit.n_obs,
            converged: fit.converged,
            iterations: fit.iterations,
            vif,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fit report serializes");
        s.push('\n');
        s
    }
}

/// File stem for a fit, e.g. `CHE` or `FR_CHE`.
pub fn fit_stem(discipline: Discipline, country: Option<Country>) -> String {
    match country {
        Some(c) => format!("{c}_{discipline}"),
        None => discipline.to_string(),
    }
}
