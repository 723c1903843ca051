//! Line-delimited publication records: parsing, validation, QC and the
//! collaborative-publication filter.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::reference::{Country, Discipline};

/// Default citation window in years (publication year plus the two following).
pub const DEFAULT_CITATION_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocType {
    Article,
    Review,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrgType {
    University,
    College,
    Hospital,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affiliation {
    pub inst_id: String,
    pub name: String,
    pub country: Country,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org_type: Option<OrgType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub name: String,
    /// Zero-based indices into the publication's affiliation list.
    pub affs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub year: i32,
    pub doc_type: DocType,
    pub discipline: Discipline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citations_by_year: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc3: Option<u64>,
    pub n_refs: u64,
    pub affiliations: Vec<Affiliation>,
    pub authors: Vec<AuthorRecord>,
}

impl Publication {
    /// Affiliations of one author, in the author's listing order.
    pub fn author_affiliations<'a>(
        &'a self,
        author: &'a AuthorRecord,
    ) -> impl Iterator<Item = &'a Affiliation> + 'a {
        author.affs.iter().map(move |&i| &self.affiliations[i])
    }

    pub fn distinct_institutions(&self) -> BTreeSet<&str> {
        self.affiliations
            .iter()
            .map(|a| a.inst_id.as_str())
            .collect()
    }

    pub fn countries(&self) -> BTreeSet<Country> {
        self.affiliations.iter().map(|a| a.country).collect()
    }

    pub fn has_country(&self, country: Country) -> bool {
        self.affiliations.iter().any(|a| a.country == country)
    }

    /// Serializes back to the one-line record format.
    pub fn to_record_line(&self) -> String {
        serde_json::to_string(self).expect("publication serialization is infallible")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TcError {
    #[error("citation window incomplete: {have} yearly counts, need {need}, and no tc3")]
    IncompleteWindow { have: usize, need: usize },
    #[error("no citation data (neither citations_by_year nor tc3)")]
    Missing,
}

/// Citation count over the first `window` years. Per-year data wins over `tc3`
/// whenever it covers the window.
pub fn compute_tc_window(publication: &Publication, window: usize) -> Result<u64, TcError> {
    match (&publication.citations_by_year, publication.tc3) {
        (Some(years), _) if years.len() >= window => Ok(years[..window].iter().sum()),
        (_, Some(tc3)) => Ok(tc3),
        (Some(years), None) => Err(TcError::IncompleteWindow {
            have: years.len(),
            need: window,
        }),
        (None, None) => Err(TcError::Missing),
    }
}

/// Three-year citation count.
pub fn compute_tc(publication: &Publication) -> Result<u64, TcError> {
    compute_tc_window(publication, DEFAULT_CITATION_WINDOW)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QcKind {
    Malformed,
    MissingField,
    InvalidField,
    UnknownCountry,
    UnknownDiscipline,
    MultiDiscipline,
    DanglingIndex,
    NegativeCount,
    NoAuthors,
    NoAffiliations,
    UnlinkedAuthor,
    IncompleteWindow,
}

impl QcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QcKind::Malformed => "malformed",
            QcKind::MissingField => "missing_field",
            QcKind::InvalidField => "invalid_field",
            QcKind::UnknownCountry => "unknown_country",
            QcKind::UnknownDiscipline => "unknown_discipline",
            QcKind::MultiDiscipline => "multi_discipline",
            QcKind::DanglingIndex => "dangling_index",
            QcKind::NegativeCount => "negative_count",
            QcKind::NoAuthors => "no_authors",
            QcKind::NoAffiliations => "no_affiliations",
            QcKind::UnlinkedAuthor => "unlinked_author",
            QcKind::IncompleteWindow => "incomplete_window",
        }
    }
}

impl fmt::Display for QcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QcEntry {
    /// One-based physical line number in the input.
    pub line: usize,
    pub kind: QcKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub publications: Vec<Publication>,
    pub qc: Vec<QcEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub citation_window: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            citation_window: DEFAULT_CITATION_WINDOW,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed reading input: {0}")]
    Io(#[from] std::io::Error),
}

struct Reject {
    kind: QcKind,
    message: String,
}

impl Reject {
    fn new(kind: QcKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

/// Parses a record stream with the default three-year window.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Corpus, IngestError> {
    parse_corpus_with(reader, IngestOptions::default())
}

pub fn parse_corpus_with<R: BufRead>(
    reader: R,
    options: IngestOptions,
) -> Result<Corpus, IngestError> {
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }

    let parsed: Vec<(usize, Result<Publication, Reject>)> = lines
        .par_iter()
        .map(|(number, line)| (*number, parse_record(line, options)))
        .collect();

    let mut corpus = Corpus::default();
    for (line, result) in parsed {
        match result {
            Ok(publication) => corpus.publications.push(publication),
            Err(reject) => corpus.qc.push(QcEntry {
                line,
                kind: reject.kind,
                message: reject.message,
            }),
        }
    }
    Ok(corpus)
}

fn parse_record(line: &str, options: IngestOptions) -> Result<Publication, Reject> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| Reject::new(QcKind::Malformed, format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Reject::new(QcKind::Malformed, "record must be a JSON object"))?;

    let id = required_str(obj, "id")?;
    if id.is_empty() {
        return Err(Reject::new(QcKind::InvalidField, "field 'id' is empty"));
    }
    let year = required_int(obj, "year")?;
    let year = i32::try_from(year)
        .map_err(|_| Reject::new(QcKind::InvalidField, format!("year {year} out of range")))?;

    let doc_type = match required_str(obj, "doc_type")? {
        "Article" => DocType::Article,
        "Review" => DocType::Review,
        other => {
            return Err(Reject::new(
                QcKind::InvalidField,
                format!("unsupported doc_type '{other}'"),
            ))
        }
    };

    let discipline = match obj.get("discipline") {
        None | Some(Value::Null) => {
            return Err(Reject::new(
                QcKind::MissingField,
                "missing required field 'discipline'",
            ))
        }
        Some(Value::Array(_)) => {
            return Err(Reject::new(
                QcKind::MultiDiscipline,
                "discipline must be a single code",
            ))
        }
        Some(Value::String(code)) => code
            .parse::<Discipline>()
            .map_err(|e| Reject::new(QcKind::UnknownDiscipline, e.to_string()))?,
        Some(_) => {
            return Err(Reject::new(
                QcKind::Malformed,
                "field 'discipline' must be a string",
            ))
        }
    };

    let citations_by_year = match obj.get("citations_by_year") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => Some(
            items
                .iter()
                .map(|v| count_value(v, "citations_by_year"))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Some(_) => {
            return Err(Reject::new(
                QcKind::Malformed,
                "field 'citations_by_year' must be an array",
            ))
        }
    };
    let tc3 = match obj.get("tc3") {
        None | Some(Value::Null) => None,
        Some(v) => Some(count_value(v, "tc3")?),
    };
    let n_refs = match obj.get("n_refs") {
        None | Some(Value::Null) => {
            return Err(Reject::new(
                QcKind::MissingField,
                "missing required field 'n_refs'",
            ))
        }
        Some(v) => count_value(v, "n_refs")?,
    };

    let affiliations = required_array(obj, "affiliations")?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_affiliation(i, v))
        .collect::<Result<Vec<_>, _>>()?;
    if affiliations.is_empty() {
        return Err(Reject::new(
            QcKind::NoAffiliations,
            "record has no affiliations",
        ));
    }

    let authors = required_array(obj, "authors")?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_author(i, v, affiliations.len()))
        .collect::<Result<Vec<_>, _>>()?;
    if authors.is_empty() {
        return Err(Reject::new(QcKind::NoAuthors, "record has no authors"));
    }

    let publication = Publication {
        id: id.to_string(),
        year,
        doc_type,
        discipline,
        citations_by_year,
        tc3,
        n_refs,
        affiliations,
        authors,
    };
    compute_tc_window(&publication, options.citation_window)
        .map_err(|e| Reject::new(QcKind::IncompleteWindow, e.to_string()))?;
    Ok(publication)
}

fn parse_affiliation(index: usize, value: &Value) -> Result<Affiliation, Reject> {
    let obj = value.as_object().ok_or_else(|| {
        Reject::new(
            QcKind::Malformed,
            format!("affiliation {index} must be an object"),
        )
    })?;
    let inst_id = required_str(obj, "inst_id")?;
    if inst_id.is_empty() {
        return Err(Reject::new(
            QcKind::InvalidField,
            format!("affiliation {index} has an empty inst_id"),
        ));
    }
    let name = required_str(obj, "name")?;
    let country = required_str(obj, "country")?
        .parse::<Country>()
        .map_err(|e| Reject::new(QcKind::UnknownCountry, e.to_string()))?;
    let org_type = match obj.get("org_type") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(match s.as_str() {
            "university" => OrgType::University,
            "college" => OrgType::College,
            "hospital" => OrgType::Hospital,
            "other" => OrgType::Other,
            other => {
                return Err(Reject::new(
                    QcKind::InvalidField,
                    format!("unknown org_type '{other}'"),
                ))
            }
        }),
        Some(_) => {
            return Err(Reject::new(
                QcKind::Malformed,
                "field 'org_type' must be a string",
            ))
        }
    };
    Ok(Affiliation {
        inst_id: inst_id.to_string(),
        name: name.to_string(),
        country,
        org_type,
    })
}

fn parse_author(index: usize, value: &Value, n_affs: usize) -> Result<AuthorRecord, Reject> {
    let obj = value.as_object().ok_or_else(|| {
        Reject::new(
            QcKind::Malformed,
            format!("author {index} must be an object"),
        )
    })?;
    let name = required_str(obj, "name")?;
    let mut affs = Vec::new();
    for v in required_array(obj, "affs")? {
        let i = v
            .as_i64()
            .ok_or_else(|| Reject::new(QcKind::Malformed, "author affs must be integer indices"))?;
        if i < 0 || i as usize >= n_affs {
            return Err(Reject::new(
                QcKind::DanglingIndex,
                format!("dangling index {i} for author {index} ({n_affs} affiliations)"),
            ));
        }
        affs.push(i as usize);
    }
    if affs.is_empty() {
        return Err(Reject::new(
            QcKind::UnlinkedAuthor,
            format!("author {index} has no affiliation links"),
        ));
    }
    Ok(AuthorRecord {
        name: name.to_string(),
        affs,
    })
}

fn required<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a Value, Reject> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(Reject::new(
            QcKind::MissingField,
            format!("missing required field '{field}'"),
        )),
        Some(v) => Ok(v),
    }
}

fn required_str<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a str, Reject> {
    required(obj, field)?.as_str().ok_or_else(|| {
        Reject::new(
            QcKind::Malformed,
            format!("field '{field}' must be a string"),
        )
    })
}

fn required_int(obj: &Map<String, Value>, field: &str) -> Result<i64, Reject> {
    required(obj, field)?.as_i64().ok_or_else(|| {
        Reject::new(
            QcKind::Malformed,
            format!("field '{field}' must be an integer"),
        )
    })
}

fn required_array<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a Vec<Value>, Reject> {
    required(obj, field)?.as_array().ok_or_else(|| {
        Reject::new(
            QcKind::Malformed,
            format!("field '{field}' must be an array"),
        )
    })
}

fn count_value(value: &Value, field: &str) -> Result<u64, Reject> {
    match value.as_i64() {
        Some(n) if n < 0 => Err(Reject::new(
            QcKind::NegativeCount,
            format!("field '{field}' has negative count {n}"),
        )),
        Some(n) => Ok(n as u64),
        None => value.as_u64().ok_or_else(|| {
            Reject::new(
                QcKind::Malformed,
                format!("field '{field}' must hold integer counts"),
            )
        }),
    }
}

/// Keeps publications with at least two distinct institutions.
pub fn filter_collaborative(corpus: &Corpus) -> Corpus {
    Corpus {
        publications: corpus
            .publications
            .iter()
            .filter(|p| is_collaborative(p))
            .cloned()
            .collect(),
        qc: corpus.qc.clone(),
    }
}

pub fn is_collaborative(publication: &Publication) -> bool {
    let mut first: Option<&str> = None;
    for aff in &publication.affiliations {
        match first {
            None => first = Some(&aff.inst_id),
            Some(id) if id != aff.inst_id => return true,
            Some(_) => {}
        }
    }
    false
}

/// Writes the QC report as `line,kind,message` CSV.
pub fn write_qc_csv<W: std::io::Write>(qc: &[QcEntry], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["line", "kind", "message"])?;
    for entry in qc {
        w.write_record([
            entry.line.to_string().as_str(),
            entry.kind.as_str(),
            entry.message.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
