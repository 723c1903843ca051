mod common;

use std::collections::BTreeMap;

use multiaff::classify::{domestic_flags, MultiKind};
use multiaff::ingest::{is_collaborative, OrgType, Publication};
use multiaff::reference::{Country, Discipline};
use multiaff::shares::{
    corpus_summary, country_discipline_shares, discipline_shares, hosp_univ_combination_share,
    normalize, top_institutions, ShareError,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{aff, country, publication, typed_aff};

fn collaborative(seed: u64, n: usize) -> Vec<Publication> {
    common::random_corpus(seed, n)
        .into_iter()
        .filter(is_collaborative)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summary_identities(seed in any::<u64>(), n in 1usize..200) {
        let pubs = collaborative(seed, n);
        prop_assume!(!pubs.is_empty());
        let s = corpus_summary(&pubs).unwrap();
        prop_assert_eq!(s.p_m + s.p_nom, s.total);
        prop_assert_eq!(s.p_nm + s.p_im - s.overlap, s.p_m);
        prop_assert!(s.p_nm + s.p_im >= s.p_m);
        let (m, nm, im) = (s.share_p_m().share(), s.share_p_nm().share(), s.share_p_im().share());
        prop_assert!(nm.max(im) <= m && m <= nm + im + 1e-15);
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn discipline_shares_match_naive_count(seed in any::<u64>(), n in 1usize..300) {
        let pubs = collaborative(seed, n);
        let shares = discipline_shares(&pubs, &Discipline::ALL);
        // [total, m, nm, im] per discipline from the brute-force flags.
        let mut naive: BTreeMap<Discipline, [u64; 4]> = BTreeMap::new();
        for p in &pubs {
            let (nm, im) = common::oracle_pub_flags(p);
            let c = naive.entry(p.discipline).or_default();
            c[0] += 1;
            c[1] += (nm || im) as u64;
            c[2] += nm as u64;
            c[3] += im as u64;
        }
        for d in Discipline::ALL {
            match (shares.get(d), naive.get(&d)) {
                (Some(row), Some(c)) => {
                    prop_assert_eq!(row.p_m.denominator(), c[0]);
                    prop_assert_eq!(
                        [row.p_m.numerator(), row.p_nm.numerator(), row.p_im.numerator()],
                        [c[1], c[2], c[3]]
                    );
                }
                (None, None) => prop_assert!(shares.omitted.contains(&d)),
                other => prop_assert!(false, "mismatch for {}: {:?}", d, other.0.is_some()),
            }
        }
    }

    #[test]
    fn country_matrix_matches_naive_count(seed in any::<u64>(), n in 20usize..300) {
        let pubs = collaborative(seed, n);
        let countries: Vec<Country> = ["FR", "US", "CN"].iter().map(|c| country(c)).collect();
        prop_assume!(countries.iter().all(|&c| pubs.iter().any(|p| p.has_country(c))));
        for kind in [MultiKind::NM, MultiKind::IM] {
            let m = country_discipline_shares(&pubs, &countries, &Discipline::ALL, kind).unwrap();
            for &c in &countries {
                for d in Discipline::ALL {
                    let in_cell: Vec<&Publication> =
                        pubs.iter().filter(|p| p.discipline == d && p.has_country(c)).collect();
                    let flagged = in_cell
                        .iter()
                        .filter(|p| {
                            let (nm, im) = common::oracle_domestic(p, c);
                            if kind == MultiKind::NM { nm } else { im }
                        })
                        .count() as u64;
                    match m.cell(c, d) {
                        Some(cell) => {
                            prop_assert_eq!(cell.denominator(), in_cell.len() as u64);
                            prop_assert_eq!(cell.numerator(), flagged);
                        }
                        None => prop_assert!(in_cell.is_empty()),
                    }
                }
            }
        }
    }

    #[test]
    fn invariant_under_record_order(seed in any::<u64>(), n in 20usize..200) {
        let pubs = collaborative(seed, n);
        prop_assume!(!pubs.is_empty());
        let mut shuffled = pubs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        prop_assert_eq!(corpus_summary(&pubs).unwrap(), corpus_summary(&shuffled).unwrap());
        prop_assert_eq!(
            discipline_shares(&pubs, &Discipline::ALL),
            discipline_shares(&shuffled, &Discipline::ALL)
        );
        let present: Vec<Country> = pubs.iter().flat_map(|p| p.countries()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        for kind in [MultiKind::NM, MultiKind::IM] {
            prop_assert_eq!(
                country_discipline_shares(&pubs, &present, &Discipline::ALL, kind).unwrap(),
                country_discipline_shares(&shuffled, &present, &Discipline::ALL, kind).unwrap()
            );
            for &c in &present {
                prop_assert_eq!(
                    top_institutions(&pubs, c, kind, 3).unwrap(),
                    top_institutions(&shuffled, c, kind, 3).unwrap()
                );
            }
        }
    }

    #[test]
    fn single_country_world_normalizes_to_one(seed in any::<u64>(), n in 20usize..200) {
        // Relabel every address to one country: each publication is then
        // domestic to it and its domestic NM flag equals the global flag.
        let mut pubs = collaborative(seed, n);
        prop_assume!(!pubs.is_empty());
        let world = country("JP");
        for p in &mut pubs {
            for a in &mut p.affiliations {
                a.country = world;
            }
        }
        let m = country_discipline_shares(&pubs, &[world], &Discipline::ALL, MultiKind::NM).unwrap();
        let r = normalize(&m);
        for (j, ratio) in r.ratios[0].iter().enumerate() {
            let base = m.baseline[j];
            match (ratio, base) {
                (Some(ratio), _) => {
                    prop_assert_eq!(ratio.value(), 1.0);
                    prop_assert_eq!(ratio.formatted(), "1.00");
                }
                (None, Some(b)) => prop_assert_eq!(b.numerator(), 0),
                (None, None) => prop_assert!(m.cells[0][j].is_none()),
            }
        }
    }
}

/// 10 collaborative publications: 3 NM only, 1 IM only, 1 both, 5 neither.
fn ten_pub_fixture() -> Vec<Publication> {
    let nm = || vec![aff("a", "FR"), aff("b", "FR")];
    let im = || vec![aff("a", "FR"), aff("c", "US")];
    let mut pubs = Vec::new();
    for i in 0..3 {
        pubs.push(publication(
            &format!("nm{i}"),
            Discipline::Che,
            nm(),
            &[&[0, 1]],
        ));
    }
    pubs.push(publication("im", Discipline::Che, im(), &[&[0, 1]]));
    pubs.push(publication(
        "both",
        Discipline::Che,
        vec![aff("a", "FR"), aff("b", "FR"), aff("c", "US")],
        &[&[0, 1], &[0, 2]],
    ));
    for i in 0..5 {
        pubs.push(publication(
            &format!("s{i}"),
            Discipline::Che,
            im(),
            &[&[0], &[1]],
        ));
    }
    pubs
}

#[test]
fn ten_publication_summary() {
    let s = corpus_summary(&ten_pub_fixture()).unwrap();
    assert_eq!((s.total, s.p_nm, s.p_im, s.overlap), (10, 4, 2, 1));
    assert_eq!((s.p_m, s.p_nom), (5, 5));
    assert_eq!(s.share_p_m().percent(), "50.0");
}

#[test]
fn saturated_discipline_share() {
    let pubs: Vec<Publication> = ten_pub_fixture().into_iter().take(3).collect();
    let shares = discipline_shares(&pubs, &[Discipline::Che]);
    assert_eq!(shares.rows[0].p_nm.share(), 1.0);
}

#[test]
fn empty_corpus_is_an_error() {
    assert_eq!(corpus_summary(&[]), Err(ShareError::EmptyCorpus));
}

#[test]
fn single_publication_country_cell() {
    let pubs = vec![publication(
        "p",
        Discipline::Spa,
        vec![aff("a", "ZA"), aff("b", "ZA")],
        &[&[0, 1]],
    )];
    let m = country_discipline_shares(&pubs, &[country("ZA")], &[Discipline::Spa], MultiKind::NM)
        .unwrap();
    assert_eq!(m.cell(country("ZA"), Discipline::Spa).unwrap().share(), 1.0);
    assert_eq!(
        country_discipline_shares(&pubs, &[country("FR")], &[Discipline::Spa], MultiKind::NM),
        Err(ShareError::CountryAbsent(country("FR")))
    );
}

#[test]
fn hospital_university_fixture() {
    use OrgType::*;
    let hu = || {
        vec![
            typed_aff("h", "FR", Hospital),
            typed_aff("u", "FR", University),
            typed_aff("x", "FR", Other),
        ]
    };
    let hc = || {
        vec![
            typed_aff("h", "FR", Hospital),
            typed_aff("c", "FR", College),
            typed_aff("x", "FR", Other),
        ]
    };
    let pubs = vec![
        // qualifying with the combination
        publication("q1", Discipline::Cli, hu(), &[&[0, 1]]),
        publication("q2", Discipline::Cli, hc(), &[&[0, 1], &[2]]),
        publication("q3", Discipline::Cli, hu(), &[&[0, 2], &[1, 0]]),
        // qualifying, hospital only paired with "other"
        publication("q4", Discipline::Cli, hu(), &[&[0, 2], &[1]]),
        // not qualifying: hospital author is single-affiliated
        publication("n1", Discipline::Cli, hu(), &[&[0], &[1, 2]]),
        // not qualifying: no hospital affiliation on a multi-affiliated author
        publication("n2", Discipline::Cli, hu(), &[&[1, 2], &[0]]),
    ];
    let rows = hosp_univ_combination_share(&pubs, &[Discipline::Cli, Discipline::Neu]).unwrap();
    assert_eq!((rows[0].numerator, rows[0].denominator), (3, 4));
    assert_eq!(rows[0].share().unwrap().share(), 0.75);
    assert_eq!(rows[1].denominator, 0);
    assert!(rows[1].share().is_none());

    let untyped = vec![publication(
        "u",
        Discipline::Cli,
        vec![aff("a", "FR"), aff("b", "FR")],
        &[&[0, 1]],
    )];
    assert_eq!(
        hosp_univ_combination_share(&untyped, &[Discipline::Cli]),
        Err(ShareError::NoOrgTypes)
    );
}

#[test]
fn top_institutions_fixture() {
    // Institution counts among FR NM-domestic publications: z=5, b=3, m=3.
    let mut pubs = Vec::new();
    let mut add = |insts: [&str; 2], n: usize| {
        for i in 0..n {
            let id = format!("{}{}{i}", insts[0], insts[1]);
            pubs.push(publication(
                &id,
                Discipline::Phy,
                vec![aff(insts[0], "FR"), aff(insts[1], "FR")],
                &[&[0, 1]],
            ));
        }
    };
    add(["z", "m"], 3);
    add(["z", "b"], 2);
    add(["b", "q"], 1);
    // z also appears once without the flag.
    pubs.push(publication(
        "plain",
        Discipline::Phy,
        vec![aff("z", "FR"), aff("k", "US")],
        &[&[0], &[1]],
    ));
    let fr = country("FR");
    assert!(domestic_flags(&pubs[0], fr).p_nm_domestic);

    let ranks = top_institutions(&pubs, fr, MultiKind::NM, 3).unwrap();
    let got: Vec<(&str, u64)> = ranks
        .iter()
        .map(|r| (r.inst_id.as_str(), r.count))
        .collect();
    assert_eq!(got, [("z", 5), ("b", 3), ("m", 3)]);
    assert_eq!(
        (
            ranks[0].share_in_total.numerator(),
            ranks[0].share_in_total.denominator()
        ),
        (5, 6)
    );
    assert_eq!(ranks[0].share_in_total.percent(), "83.3");
    assert_eq!(ranks[1].share_in_total.share(), 1.0);
    assert!(top_institutions(&pubs, fr, MultiKind::IM, 3)
        .unwrap()
        .is_empty());
    assert_eq!(
        top_institutions(&pubs, country("DE"), MultiKind::NM, 3),
        Err(ShareError::CountryAbsent(country("DE")))
    );
}
