#![allow(dead_code)]

use std::collections::BTreeSet;

use multiaff::classify::{AuthorClass, CountryAuthorClass};
use multiaff::ingest::{Affiliation, AuthorRecord, DocType, OrgType, Publication};
use multiaff::nbrm::RegressionInput;
use multiaff::reference::{Country, Discipline};
use multiaff::synth::gen_nb_counts;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn country(code: &str) -> Country {
    code.parse().unwrap()
}

pub fn aff(inst: &str, code: &str) -> Affiliation {
    Affiliation {
        inst_id: inst.to_string(),
        name: format!("Institution {inst}"),
        country: country(code),
        org_type: None,
    }
}

pub fn typed_aff(inst: &str, code: &str, org: OrgType) -> Affiliation {
    Affiliation {
        org_type: Some(org),
        ..aff(inst, code)
    }
}

/// Publication with authors given as affiliation-index lists.
pub fn publication(
    id: &str,
    discipline: Discipline,
    affiliations: Vec<Affiliation>,
    authors: &[&[usize]],
) -> Publication {
    Publication {
        id: id.to_string(),
        year: 2013,
        doc_type: DocType::Article,
        discipline,
        citations_by_year: Some(vec![1, 2, 3]),
        tc3: None,
        n_refs: 30,
        affiliations,
        authors: authors
            .iter()
            .enumerate()
            .map(|(i, affs)| AuthorRecord {
                name: format!("Author {i}"),
                affs: affs.to_vec(),
            })
            .collect(),
    }
}

const POOL_COUNTRIES: [&str; 3] = ["FR", "US", "CN"];

/// Random publication with at most 6 authors, 5 affiliation entries and 3
/// countries. Institution ids come from a small pool so duplicates occur.
pub fn random_publication<R: Rng>(rng: &mut R, id: usize) -> Publication {
    let n_affs = rng.random_range(1..=5);
    let affiliations: Vec<Affiliation> = (0..n_affs)
        .map(|_| {
            let inst = format!("i{}", rng.random_range(0..6));
            let code = POOL_COUNTRIES[rng.random_range(0..3)];
            aff(&inst, code)
        })
        .collect();
    let n_authors = rng.random_range(1..=6);
    let authors: Vec<Vec<usize>> = (0..n_authors)
        .map(|_| {
            let k = rng.random_range(1..=3);
            (0..k).map(|_| rng.random_range(0..n_affs)).collect()
        })
        .collect();
    let refs: Vec<&[usize]> = authors.iter().map(|a| a.as_slice()).collect();
    let discipline = Discipline::ALL[rng.random_range(0..Discipline::ALL.len())];
    let mut p = publication(&format!("R{id}"), discipline, affiliations, &refs);
    p.citations_by_year = Some((0..3).map(|_| rng.random_range(0..20)).collect());
    p.n_refs = rng.random_range(0..80);
    p
}

pub fn random_corpus(seed: u64, n: usize) -> Vec<Publication> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_publication(&mut rng, i)).collect()
}

/// Countries queried in oracle checks: every pool country plus one that
/// never occurs.
pub fn oracle_countries() -> Vec<Country> {
    POOL_COUNTRIES
        .iter()
        .chain(&["DE"])
        .map(|c| country(c))
        .collect()
}

/// Brute-force author class. Pairwise comparison of the author's affiliation
/// entries: any two in different countries make the author international; else
/// any two at different institutions make them national; else single.
pub fn oracle_author_class(p: &Publication, author: &AuthorRecord) -> AuthorClass {
    let entries: Vec<&Affiliation> = author.affs.iter().map(|&i| &p.affiliations[i]).collect();
    let mut cross_country = false;
    let mut cross_inst = false;
    for a in &entries {
        for b in &entries {
            cross_country |= a.country != b.country;
            cross_inst |= a.inst_id != b.inst_id;
        }
    }
    if cross_country {
        AuthorClass::IM
    } else if cross_inst {
        AuthorClass::NM
    } else {
        AuthorClass::S
    }
}

/// Brute-force six-way label: evaluates each label's defining predicate
/// separately and insists exactly one holds.
pub fn oracle_country_class(
    p: &Publication,
    author: &AuthorRecord,
    a: Country,
) -> CountryAuthorClass {
    let base = oracle_author_class(p, author);
    let countries: BTreeSet<Country> = author
        .affs
        .iter()
        .map(|&i| p.affiliations[i].country)
        .collect();
    let home = countries.contains(&a);
    let candidates = [
        (
            CountryAuthorClass::NmDomestic,
            base == AuthorClass::NM && home,
        ),
        (
            CountryAuthorClass::NmForeign,
            base == AuthorClass::NM && !home,
        ),
        (
            CountryAuthorClass::ImDomestic,
            base == AuthorClass::IM && home,
        ),
        (
            CountryAuthorClass::ImForeign,
            base == AuthorClass::IM && !home,
        ),
        (
            CountryAuthorClass::SDomestic,
            base == AuthorClass::S && home,
        ),
        (
            CountryAuthorClass::SForeign,
            base == AuthorClass::S && !home,
        ),
    ];
    let hits: Vec<CountryAuthorClass> = candidates
        .iter()
        .filter(|(_, holds)| *holds)
        .map(|(label, _)| *label)
        .collect();
    assert_eq!(hits.len(), 1, "oracle labels not exclusive: {hits:?}");
    hits[0]
}

/// `(has_nm, has_im)` by scanning all authors.
pub fn oracle_pub_flags(p: &Publication) -> (bool, bool) {
    let classes: Vec<AuthorClass> = p
        .authors
        .iter()
        .map(|a| oracle_author_class(p, a))
        .collect();
    (
        classes.contains(&AuthorClass::NM),
        classes.contains(&AuthorClass::IM),
    )
}

/// `(p_nm_domestic, p_im_domestic)` for country `a`.
pub fn oracle_domestic(p: &Publication, a: Country) -> (bool, bool) {
    let labels: Vec<CountryAuthorClass> = p
        .authors
        .iter()
        .map(|au| oracle_country_class(p, au, a))
        .collect();
    (
        labels.contains(&CountryAuthorClass::NmDomestic),
        labels.contains(&CountryAuthorClass::ImDomestic),
    )
}

/// `[intercept, Bernoulli(0.5), N(0,1)]` design with NB2 responses.
pub fn synthetic_input(n: usize, beta: &[f64; 3], alpha: f64, seed: u64) -> RegressionInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, 3);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        x[(i, 2)] = StandardNormal.sample(&mut rng);
    }
    let y = gen_nb_counts(&x, beta, alpha, seed.wrapping_add(1)).unwrap();
    RegressionInput::new(
        y.into_iter().map(|v| v as i64).collect(),
        x,
        vec!["intercept".into(), "binary".into(), "normal".into()],
    )
    .unwrap()
}

/// Pearson correlation-controlled design: `a` and `b` with correlation `rho`
/// in the population, `c` independent.
pub fn correlated_design(n: usize, rho: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, 4);
    for i in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let z3: f64 = StandardNormal.sample(&mut rng);
        x[(i, 0)] = 1.0;
        x[(i, 1)] = z1;
        x[(i, 2)] = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
        x[(i, 3)] = z3;
    }
    x
}

/// Sylvester-Hadamard column: `(-1)^popcount(i & j)`; distinct `j > 0` give
/// orthogonal zero-mean columns.
pub fn hadamard(n: usize, j: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if (i & j).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

pub fn vif_input(cols: &[Vec<f64>]) -> RegressionInput {
    let n = cols[0].len();
    let mut x = DMatrix::from_element(n, cols.len() + 1, 1.0);
    for (j, c) in cols.iter().enumerate() {
        x.set_column(j + 1, &nalgebra::DVector::from_column_slice(c));
    }
    let mut names = vec!["intercept".to_string()];
    names.extend((0..cols.len()).map(|j| format!("c{j}")));
    RegressionInput::new(vec![0; n], x, names).unwrap()
}

/// VIFs as the diagonal of the inverse sample correlation matrix.
pub fn vif_oracle(cols: &[Vec<f64>]) -> Vec<f64> {
    let k = cols.len();
    let n = cols[0].len() as f64;
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let corr = DMatrix::from_fn(k, k, |i, j| {
        dot(&centered[i], &centered[j])
            / (dot(&centered[i], &centered[i]) * dot(&centered[j], &centered[j])).sqrt()
    });
    let inv = corr.try_inverse().unwrap();
    (0..k).map(|i| inv[(i, i)]).collect()
}
