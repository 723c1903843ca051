//! Descriptive share statistics over a collaborative corpus.
//!
//! All counts are exact integers; shares and ratios are kept as rationals and
//! only rounded when formatted for output.

use std::collections::{BTreeMap, BTreeSet};

use crate::classify::{
    classify_author, classify_publication, domestic_flags, AuthorClass, MultiKind,
};
use crate::ingest::{OrgType, Publication};
use crate::reference::{Country, Discipline};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShareError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("country {0} does not appear in the corpus")]
    CountryAbsent(Country),
    #[error(
        "no org_type annotations in the corpus; hospital/university shares are not computable"
    )]
    NoOrgTypes,
    #[error("k must be at least 1")]
    ZeroK,
}

/// Rounds `num / den` to the nearest integer, halves away from zero.
fn round_ratio(num: u128, den: u128) -> u128 {
    (2 * num + den) / (2 * den)
}

fn fixed(value: u128, decimals: u32) -> String {
    let scale = 10u128.pow(decimals);
    format!(
        "{}.{:0width$}",
        value / scale,
        value % scale,
        width = decimals as usize
    )
}

/// `numerator / denominator` with a non-zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShareCell {
    numerator: u64,
    denominator: u64,
}

impl ShareCell {
    /// `None` when the denominator is zero or the numerator exceeds it.
    pub fn new(numerator: u64, denominator: u64) -> Option<Self> {
        (denominator > 0 && numerator <= denominator).then_some(Self {
            numerator,
            denominator,
        })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn share(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Percentage with one decimal, e.g. `45.7`.
    pub fn percent(&self) -> String {
        fixed(
            round_ratio(1000 * self.numerator as u128, self.denominator as u128),
            1,
        )
    }

    /// Exact ratio of this share to `baseline`, `None` for a zero baseline.
    pub fn ratio_to(&self, baseline: &ShareCell) -> Option<Ratio> {
        (baseline.numerator > 0).then(|| Ratio {
            num: self.numerator as u128 * baseline.denominator as u128,
            den: self.denominator as u128 * baseline.numerator as u128,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Two decimals, e.g. `1.25`.
    pub fn formatted(&self) -> String {
        fixed(round_ratio(100 * self.num, self.den), 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSummary {
    pub total: u64,
    pub p_m: u64,
    pub p_nm: u64,
    pub p_im: u64,
    pub p_nom: u64,
    /// Publications in both P_NM and P_IM.
    pub overlap: u64,
}

impl CorpusSummary {
    fn cell(&self, n: u64) -> ShareCell {
        ShareCell::new(n, self.total).expect("summary counts never exceed a non-zero total")
    }

    pub fn share_p_m(&self) -> ShareCell {
        self.cell(self.p_m)
    }

    pub fn share_p_nm(&self) -> ShareCell {
        self.cell(self.p_nm)
    }

    pub fn share_p_im(&self) -> ShareCell {
        self.cell(self.p_im)
    }

    pub fn share_p_nom(&self) -> ShareCell {
        self.cell(self.p_nom)
    }
}

/// Counts of P_M, P_NM, P_IM and P_NoM over collaborative publications.
pub fn corpus_summary(publications: &[Publication]) -> Result<CorpusSummary, ShareError> {
    if publications.is_empty() {
        return Err(ShareError::EmptyCorpus);
    }
    let mut s = CorpusSummary {
        total: 0,
        p_m: 0,
        p_nm: 0,
        p_im: 0,
        p_nom: 0,
        overlap: 0,
    };
    for p in publications {
        let class = classify_publication(p);
        s.total += 1;
        s.p_nm += class.has_nm as u64;
        s.p_im += class.has_im as u64;
        s.overlap += (class.has_nm && class.has_im) as u64;
        if class.is_multi() {
            s.p_m += 1;
        } else {
            s.p_nom += 1;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisciplineShareRow {
    pub discipline: Discipline,
    pub p_m: ShareCell,
    pub p_nm: ShareCell,
    pub p_im: ShareCell,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DisciplineShares {
    pub rows: Vec<DisciplineShareRow>,
    /// Requested disciplines without any collaborative publication.
    pub omitted: Vec<Discipline>,
}

impl DisciplineShares {
    pub fn get(&self, discipline: Discipline) -> Option<&DisciplineShareRow> {
        self.rows.iter().find(|r| r.discipline == discipline)
    }

    pub fn baseline(&self, discipline: Discipline, kind: MultiKind) -> Option<ShareCell> {
        self.get(discipline).map(|r| match kind {
            MultiKind::NM => r.p_nm,
            MultiKind::IM => r.p_im,
        })
    }
}

/// Per-discipline shares of P_M, P_NM and P_IM, in the order of `disciplines`.
pub fn discipline_shares(
    publications: &[Publication],
    disciplines: &[Discipline],
) -> DisciplineShares {
    // (total, p_m, p_nm, p_im)
    let mut counts: BTreeMap<Discipline, [u64; 4]> = BTreeMap::new();
    for p in publications {
        let class = classify_publication(p);
        let c = counts.entry(p.discipline).or_default();
        c[0] += 1;
        c[1] += class.is_multi() as u64;
        c[2] += class.has_nm as u64;
        c[3] += class.has_im as u64;
    }

    let mut out = DisciplineShares::default();
    for &d in disciplines {
        match counts.get(&d) {
            Some(&[total, m, nm, im]) if total > 0 => out.rows.push(DisciplineShareRow {
                discipline: d,
                p_m: ShareCell::new(m, total).expect("count within total"),
                p_nm: ShareCell::new(nm, total).expect("count within total"),
                p_im: ShareCell::new(im, total).expect("count within total"),
            }),
            _ => {
                log::warn!("discipline {d} has no collaborative publications; omitted");
                out.omitted.push(d);
            }
        }
    }
    out
}

/// Country x discipline domestic shares with the global per-discipline
/// baseline for the same kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareMatrix {
    pub kind: MultiKind,
    pub rows: Vec<Country>,
    pub cols: Vec<Discipline>,
    /// `cells[row][col]`; `None` when the country has no publications in the
    /// discipline.
    pub cells: Vec<Vec<Option<ShareCell>>>,
    pub baseline: Vec<Option<ShareCell>>,
}

impl ShareMatrix {
    pub fn cell(&self, country: Country, discipline: Discipline) -> Option<ShareCell> {
        let r = self.rows.iter().position(|&c| c == country)?;
        let c = self.cols.iter().position(|&d| d == discipline)?;
        self.cells[r][c]
    }
}

pub fn country_discipline_shares(
    publications: &[Publication],
    countries: &[Country],
    disciplines: &[Discipline],
    kind: MultiKind,
) -> Result<ShareMatrix, ShareError> {
    if publications.is_empty() {
        return Err(ShareError::EmptyCorpus);
    }
    let present: BTreeSet<Country> = publications.iter().flat_map(|p| p.countries()).collect();
    if let Some(&missing) = countries.iter().find(|c| !present.contains(c)) {
        return Err(ShareError::CountryAbsent(missing));
    }

    let col_of: BTreeMap<Discipline, usize> = disciplines
        .iter()
        .enumerate()
        .map(|(i, &d)| (d, i))
        .collect();
    // [row][col] = (flagged, total)
    let mut counts = vec![vec![(0u64, 0u64); disciplines.len()]; countries.len()];
    for p in publications {
        let Some(&col) = col_of.get(&p.discipline) else {
            continue;
        };
        for (row, &country) in countries.iter().enumerate() {
            if !p.has_country(country) {
                continue;
            }
            let cell = &mut counts[row][col];
            cell.1 += 1;
            cell.0 += kind.pick_domestic(domestic_flags(p, country)) as u64;
        }
    }

    let global = discipline_shares(publications, disciplines);
    Ok(ShareMatrix {
        kind,
        rows: countries.to_vec(),
        cols: disciplines.to_vec(),
        cells: counts
            .into_iter()
            .map(|row| row.into_iter().map(|(n, d)| ShareCell::new(n, d)).collect())
            .collect(),
        baseline: disciplines
            .iter()
            .map(|&d| global.baseline(d, kind))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioMatrix {
    pub kind: MultiKind,
    pub rows: Vec<Country>,
    pub cols: Vec<Discipline>,
    /// `None` where the cell is empty or the column baseline is zero/absent.
    pub ratios: Vec<Vec<Option<Ratio>>>,
    /// Columns whose baseline is zero or missing.
    pub undefined_cols: Vec<Discipline>,
}

/// Divides every cell by its column's global baseline share.
pub fn normalize(matrix: &ShareMatrix) -> RatioMatrix {
    let undefined_cols = matrix
        .cols
        .iter()
        .zip(&matrix.baseline)
        .filter(|(_, b)| b.is_none_or(|b| b.numerator() == 0))
        .map(|(&d, _)| d)
        .collect();
    let ratios = matrix
        .cells
        .iter()
        .map(|row| {
            row.iter()
                .zip(&matrix.baseline)
                .map(|(cell, base)| match (cell, base) {
                    (Some(cell), Some(base)) => cell.ratio_to(base),
                    _ => None,
                })
                .collect()
        })
        .collect();
    RatioMatrix {
        kind: matrix.kind,
        rows: matrix.rows.clone(),
        cols: matrix.cols.clone(),
        ratios,
        undefined_cols,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstitutionRank {
    pub inst_id: String,
    pub inst_name: String,
    pub count: u64,
    pub share_in_total: ShareCell,
}

/// Institutions of `country` ranked by the number of publications carrying
/// the country's domestic flag of `kind`. Count ties break on `inst_id`.
pub fn top_institutions(
    publications: &[Publication],
    country: Country,
    kind: MultiKind,
    k: usize,
) -> Result<Vec<InstitutionRank>, ShareError> {
    if k == 0 {
        return Err(ShareError::ZeroK);
    }
    // inst_id -> (name, flagged, total)
    let mut tally: BTreeMap<&str, (&str, u64, u64)> = BTreeMap::new();
    let mut seen_country = false;
    for p in publications {
        if !p.has_country(country) {
            continue;
        }
        seen_country = true;
        let flagged = kind.pick_domestic(domestic_flags(p, country));
        let mut insts: BTreeMap<&str, &str> = BTreeMap::new();
        for aff in p.affiliations.iter().filter(|a| a.country == country) {
            insts.entry(&aff.inst_id).or_insert(&aff.name);
        }
        for (id, name) in insts {
            let entry = tally.entry(id).or_insert((name, 0, 0));
            entry.1 += flagged as u64;
            entry.2 += 1;
        }
    }
    if !seen_country {
        return Err(ShareError::CountryAbsent(country));
    }

    let mut ranks: Vec<InstitutionRank> = tally
        .into_iter()
        .filter(|(_, (_, flagged, _))| *flagged > 0)
        .map(|(id, (name, flagged, total))| InstitutionRank {
            inst_id: id.to_string(),
            inst_name: name.to_string(),
            count: flagged,
            share_in_total: ShareCell::new(flagged, total).expect("flagged within total"),
        })
        .collect();
    ranks.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.inst_id.cmp(&b.inst_id))
    });
    ranks.truncate(k);
    Ok(ranks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HospUnivRow {
    pub discipline: Discipline,
    /// Publications with a hospital-affiliated multi-affiliated author.
    pub denominator: u64,
    /// Of those, publications where such an author also holds a university
    /// or college affiliation.
    pub numerator: u64,
}

impl HospUnivRow {
    /// `None` when no publication qualifies.
    pub fn share(&self) -> Option<ShareCell> {
        ShareCell::new(self.numerator, self.denominator)
    }
}

pub fn hosp_univ_combination_share(
    publications: &[Publication],
    disciplines: &[Discipline],
) -> Result<Vec<HospUnivRow>, ShareError> {
    let annotated = publications
        .iter()
        .flat_map(|p| &p.affiliations)
        .any(|a| a.org_type.is_some());
    if !annotated {
        return Err(ShareError::NoOrgTypes);
    }

    let mut rows: Vec<HospUnivRow> = disciplines
        .iter()
        .map(|&d| HospUnivRow {
            discipline: d,
            denominator: 0,
            numerator: 0,
        })
        .collect();
    for p in publications {
        let Some(row) = rows.iter_mut().find(|r| r.discipline == p.discipline) else {
            continue;
        };
        let mut hospital = false;
        let mut combined = false;
        for author in &p.authors {
            if classify_author(p, author) == AuthorClass::S {
                continue;
            }
            let types: Vec<Option<OrgType>> =
                p.author_affiliations(author).map(|a| a.org_type).collect();
            if types.contains(&Some(OrgType::Hospital)) {
                hospital = true;
                combined |= types
                    .iter()
                    .any(|t| matches!(t, Some(OrgType::University | OrgType::College)));
            }
        }
        row.denominator += hospital as u64;
        row.numerator += combined as u64;
    }
    Ok(rows)
}
