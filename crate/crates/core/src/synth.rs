//! Deterministic synthetic corpora and NB2 count draws.
//!
//! Every record (or row) `i` draws from its own ChaCha8 stream: the generator
//! is seeded from the 64-bit seed and then switched to stream `i`, so output is
//! independent of generation order and can be produced in parallel.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{Affiliation, AuthorRecord, DocType, OrgType, Publication};
use crate::reference::{sample_countries, Country, Discipline};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite mean at row {0}")]
    NonFiniteMean(usize),
    #[error("dispersion alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_pubs: usize,
    /// Discipline mix; probabilities sum to one.
    pub disciplines: BTreeMap<Discipline, f64>,
    /// Lead-country mix; probabilities sum to one.
    pub countries: BTreeMap<Country, f64>,
    /// Probability of inserting a national multi-affiliated author.
    pub p_nm: f64,
    /// Probability of inserting an international multi-affiliated author.
    pub p_im: f64,
    /// Per lead-country overrides of `p_nm`.
    pub country_p_nm: BTreeMap<Country, f64>,
    /// Per lead-country overrides of `p_im`.
    pub country_p_im: BTreeMap<Country, f64>,
    /// Probability that base author affiliations span two or more institutions.
    pub p_collab: f64,
    /// Probability that a co-author's base affiliation is abroad.
    pub p_foreign_coauthor: f64,
    pub authors_min: usize,
    pub authors_max: usize,
    pub refs_mean: f64,
    pub institutions_per_country: usize,
    /// Fraction of each country's institutions typed as hospitals.
    pub hospital_share: f64,
    /// True coefficients for `[intercept, NM_mark, IM_mark, N_refs, N_ins, N_c, N_a]`.
    pub beta: [f64; 7],
    pub alpha: f64,
    pub first_year: i32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let disciplines = Discipline::ALL
            .iter()
            .map(|&d| (d, 1.0 / Discipline::ALL.len() as f64))
            .collect();
        let countries: Vec<Country> = sample_countries();
        let w = 1.0 / countries.len() as f64;
        Self {
            n_pubs: 1000,
            disciplines,
            countries: countries.into_iter().map(|c| (c, w)).collect(),
            p_nm: 0.35,
            p_im: 0.15,
            country_p_nm: BTreeMap::new(),
            country_p_im: BTreeMap::new(),
            p_collab: 1.0,
            p_foreign_coauthor: 0.2,
            authors_min: 2,
            authors_max: 12,
            refs_mean: 35.0,
            institutions_per_country: 20,
            hospital_share: 0.25,
            beta: [1.0, 0.15, 0.1, 0.01, 0.05, 0.05, 0.03],
            alpha: 0.8,
            first_year: 2013,
            seed: 42,
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SynthError::InvalidSpec(format!(
            "{name} = {p} is not in [0, 1]"
        )))
    }
}

fn check_mix<K: std::fmt::Debug>(name: &str, mix: &BTreeMap<K, f64>) -> Result<(), SynthError> {
    if mix.is_empty() {
        return Err(SynthError::InvalidSpec(format!("{name} mix is empty")));
    }
    for (k, &p) in mix {
        check_probability(&format!("{name}[{k:?}]"), p)?;
    }
    let total: f64 = mix.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SynthError::InvalidSpec(format!(
            "{name} probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        check_mix("disciplines", &self.disciplines)?;
        check_mix("countries", &self.countries)?;
        for (name, p) in [
            ("p_nm", self.p_nm),
            ("p_im", self.p_im),
            ("p_collab", self.p_collab),
            ("p_foreign_coauthor", self.p_foreign_coauthor),
            ("hospital_share", self.hospital_share),
        ] {
            check_probability(name, p)?;
        }
        for (c, &p) in self.country_p_nm.iter().chain(&self.country_p_im) {
            check_probability(&format!("country override {c}"), p)?;
        }
        if !(1 <= self.authors_min
            && self.authors_min <= self.authors_max
            && self.authors_max <= 15)
        {
            return Err(SynthError::InvalidSpec(format!(
                "author counts must satisfy 1 <= min <= max <= 15, got {}..{}",
                self.authors_min, self.authors_max
            )));
        }
        if self.institutions_per_country < 2 {
            return Err(SynthError::InvalidSpec(
                "need at least two institutions per country".into(),
            ));
        }
        if !(self.refs_mean.is_finite() && self.refs_mean >= 0.0) {
            return Err(SynthError::InvalidSpec(
                "refs_mean must be non-negative".into(),
            ));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(SynthError::InvalidSpec("beta must be finite".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(SynthError::InvalidAlpha(self.alpha));
        }
        let may_go_abroad = self.p_im > 0.0
            || self.p_foreign_coauthor > 0.0
            || self.country_p_im.values().any(|&p| p > 0.0);
        if may_go_abroad && self.countries.len() < 2 {
            return Err(SynthError::InvalidSpec(
                "international authorship needs at least two countries".into(),
            ));
        }
        Ok(())
    }

    fn p_nm_for(&self, country: Country) -> f64 {
        self.country_p_nm
            .get(&country)
            .copied()
            .unwrap_or(self.p_nm)
    }

    fn p_im_for(&self, country: Country) -> f64 {
        self.country_p_im
            .get(&country)
            .copied()
            .unwrap_or(self.p_im)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One NB2 draw with mean `mu` (Poisson when `alpha == 0`).
fn draw_nb2<R: Rng>(rng: &mut R, mu: f64, alpha: f64) -> u64 {
    let lambda = if alpha > 0.0 {
        Gamma::new(1.0 / alpha, alpha * mu)
            .expect("shape and scale are positive")
            .sample(rng)
    } else {
        mu
    };
    if lambda <= 0.0 {
        return 0;
    }
    let lambda = lambda.min(Poisson::<f64>::MAX_LAMBDA);
    Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
}

/// Draws `y_i ~ NB2(exp(x_i' beta), alpha)` row by row; row `i` uses stream `i`.
pub fn gen_nb_counts(
    x: &DMatrix<f64>,
    beta: &[f64],
    alpha: f64,
    seed: u64,
) -> Result<Vec<u64>, SynthError> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(SynthError::InvalidAlpha(alpha));
    }
    if beta.len() != x.ncols() {
        return Err(SynthError::InvalidSpec(format!(
            "beta has {} entries for {} columns",
            beta.len(),
            x.ncols()
        )));
    }
    let mu: Vec<f64> = x
        .row_iter()
        .map(|row| row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp())
        .collect();
    if let Some(i) = mu.iter().position(|m| !m.is_finite()) {
        return Err(SynthError::NonFiniteMean(i));
    }
    Ok(mu
        .par_iter()
        .enumerate()
        .map(|(i, &m)| draw_nb2(&mut stream_rng(seed, i as u64), m, alpha))
        .collect())
}

struct Pools {
    disciplines: Vec<Discipline>,
    discipline_index: WeightedIndex<f64>,
    countries: Vec<Country>,
    country_index: WeightedIndex<f64>,
}

fn inst_id(country: Country, k: usize) -> String {
    format!("{country}-{k:03}")
}

fn org_type(spec: &SynthSpec, k: usize) -> OrgType {
    let hospitals = (spec.hospital_share * spec.institutions_per_country as f64).round() as usize;
    if k < hospitals {
        OrgType::Hospital
    } else {
        match k % 4 {
            0 => OrgType::Other,
            1 => OrgType::College,
            _ => OrgType::University,
        }
    }
}

/// Builder for one record's affiliation list, deduplicated by institution.
struct AffList<'a> {
    spec: &'a SynthSpec,
    affs: Vec<Affiliation>,
    index: BTreeMap<(Country, usize), usize>,
}

impl<'a> AffList<'a> {
    fn new(spec: &'a SynthSpec) -> Self {
        Self {
            spec,
            affs: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    fn get(&mut self, country: Country, k: usize) -> usize {
        *self.index.entry((country, k)).or_insert_with(|| {
            self.affs.push(Affiliation {
                inst_id: inst_id(country, k),
                name: format!("Institute {k} of {country}"),
                country,
                org_type: Some(org_type(self.spec, k)),
            });
            self.affs.len() - 1
        })
    }
}

fn other_country<R: Rng>(rng: &mut R, pools: &Pools, not: Country) -> Country {
    loop {
        let c = pools.countries[pools.country_index.sample(rng)];
        if c != not {
            return c;
        }
    }
}

fn other_inst<R: Rng>(rng: &mut R, n: usize, not: usize) -> usize {
    let k = rng.random_range(0..n - 1);
    if k >= not {
        k + 1
    } else {
        k
    }
}

fn gen_publication(spec: &SynthSpec, pools: &Pools, index: usize) -> Publication {
    let mut rng = stream_rng(spec.seed, index as u64);
    let n_inst = spec.institutions_per_country;

    let discipline = pools.disciplines[pools.discipline_index.sample(&mut rng)];
    let lead = pools.countries[pools.country_index.sample(&mut rng)];
    let n_authors = rng.random_range(spec.authors_min..=spec.authors_max);
    let collaborative = rng.random_bool(spec.p_collab);
    let insert_nm = rng.random_bool(spec.p_nm_for(lead));
    let insert_im = rng.random_bool(spec.p_im_for(lead));

    // Base affiliation (country, institution) per author.
    let lead_inst = rng.random_range(0..n_inst);
    let mut base: Vec<(Country, usize)> = vec![(lead, lead_inst)];
    for _ in 1..n_authors {
        if !collaborative {
            base.push((lead, lead_inst));
        } else if rng.random_bool(spec.p_foreign_coauthor) {
            let c = other_country(&mut rng, pools, lead);
            base.push((c, rng.random_range(0..n_inst)));
        } else {
            base.push((lead, rng.random_range(0..n_inst)));
        }
    }
    if collaborative && n_authors >= 2 && base.iter().all(|b| *b == base[0]) {
        let last = base.len() - 1;
        base[last] = (lead, other_inst(&mut rng, n_inst, lead_inst));
    }

    let mut extra: Vec<Option<(Country, usize)>> = vec![None; n_authors];
    let mut nm_author = None;
    if insert_nm {
        let candidates: Vec<usize> = (0..n_authors).filter(|&a| base[a].0 == lead).collect();
        let a = candidates[rng.random_range(0..candidates.len())];
        extra[a] = Some((lead, other_inst(&mut rng, n_inst, base[a].1)));
        nm_author = Some(a);
    }
    if insert_im {
        let candidates: Vec<usize> = (0..n_authors).filter(|&a| Some(a) != nm_author).collect();
        if !candidates.is_empty() {
            let a = candidates[rng.random_range(0..candidates.len())];
            let c = other_country(&mut rng, pools, base[a].0);
            extra[a] = Some((c, rng.random_range(0..n_inst)));
        }
    }

    let mut affs = AffList::new(spec);
    let authors: Vec<AuthorRecord> = (0..n_authors)
        .map(|a| {
            let mut links = vec![affs.get(base[a].0, base[a].1)];
            if let Some((c, k)) = extra[a] {
                links.push(affs.get(c, k));
            }
            AuthorRecord {
                name: format!("Author {a}"),
                affs: links,
            }
        })
        .collect();
    let affiliations = affs.affs;

    let has_nm = nm_author.is_some();
    let has_im = extra
        .iter()
        .enumerate()
        .any(|(a, e)| e.is_some_and(|(c, _)| c != base[a].0));
    let n_refs = if spec.refs_mean > 0.0 {
        Poisson::new(spec.refs_mean)
            .expect("positive mean")
            .sample(&mut rng) as u64
    } else {
        0
    };
    let n_ins = affiliations
        .iter()
        .map(|a| a.inst_id.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    let n_c = affiliations
        .iter()
        .map(|a| a.country)
        .collect::<BTreeSet<_>>()
        .len();
    let row = [
        1.0,
        has_nm as u8 as f64,
        has_im as u8 as f64,
        n_refs as f64,
        n_ins as f64,
        n_c as f64,
        n_authors as f64,
    ];
    let mu = row
        .iter()
        .zip(&spec.beta)
        .map(|(x, b)| x * b)
        .sum::<f64>()
        .exp();
    let tc = draw_nb2(&mut rng, mu, spec.alpha);

    // Spread the window total over three years and add an out-of-window year.
    let y0 = Binomial::new(tc, 0.2).expect("valid p").sample(&mut rng);
    let y1 = Binomial::new(tc - y0, 0.5)
        .expect("valid p")
        .sample(&mut rng);
    let y2 = tc - y0 - y1;
    let y3 = Poisson::new(0.3 * mu + 0.1)
        .expect("positive mean")
        .sample(&mut rng) as u64;

    Publication {
        id: format!("SYN{:07}", index),
        year: spec.first_year + (index % 3) as i32,
        doc_type: if rng.random_bool(0.9) {
            DocType::Article
        } else {
            DocType::Review
        },
        discipline,
        citations_by_year: Some(vec![y0, y1, y2, y3]),
        tc3: None,
        n_refs,
        affiliations,
        authors,
    }
}

/// Generates `spec.n_pubs` schema-valid publications.
pub fn gen_corpus(spec: &SynthSpec) -> Result<Vec<Publication>, SynthError> {
    spec.validate()?;
    let disciplines: Vec<Discipline> = spec.disciplines.keys().copied().collect();
    let countries: Vec<Country> = spec.countries.keys().copied().collect();
    let pools = Pools {
        discipline_index: WeightedIndex::new(spec.disciplines.values().copied())
            .map_err(|e| SynthError::InvalidSpec(format!("disciplines: {e}")))?,
        disciplines,
        country_index: WeightedIndex::new(spec.countries.values().copied())
            .map_err(|e| SynthError::InvalidSpec(format!("countries: {e}")))?,
        countries,
    };
    Ok((0..spec.n_pubs)
        .into_par_iter()
        .map(|i| gen_publication(spec, &pools, i))
        .collect())
}

/// Writes publications in the line-delimited record format.
pub fn write_records<W: Write>(publications: &[Publication], mut writer: W) -> std::io::Result<()> {
    for p in publications {
        writeln!(writer, "{}", p.to_record_line())?;
    }
    writer.flush()
}
