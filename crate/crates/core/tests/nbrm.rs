mod common;

use multiaff::nbrm::{
    build_design, nb2_derivatives, nb2_fit, nb2_loglik, percent_change, poisson_loglik, run_table,
    stars, vif, CellOutcome, DesignOptions, FitOptions, FitThresholds, NbrmError, RegressionInput,
    VifValue, COLUMNS,
};
use multiaff::reference::Discipline;
use multiaff::synth::{gen_corpus, SynthSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{hadamard, synthetic_input, vif_input, vif_oracle};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[test]
fn derivatives_match_finite_differences() {
    let input = synthetic_input(150, &[0.5, 0.4, -0.3], 0.6, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-5;
    for _ in 0..25 {
        let mut params: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        params.push(rng.random_range(-4.0..1.5));
        let ll = |q: &[f64]| nb2_loglik(&q[..3], q[3].exp(), &input).unwrap();
        let d = nb2_derivatives(&params[..3], params[3], &input).unwrap();
        assert!((d.loglik - ll(&params)).abs() < 1e-9 * d.loglik.abs());
        for k in 0..4 {
            let mut up = params.clone();
            let mut dn = params.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (ll(&up) - ll(&dn)) / (2.0 * h);
            assert!(
                rel_err(d.gradient[k], fd) < 1e-5,
                "g[{k}] {} vs {fd}",
                d.gradient[k]
            );
            let gu = nb2_derivatives(&up[..3], up[3], &input).unwrap().gradient;
            let gd = nb2_derivatives(&dn[..3], dn[3], &input).unwrap().gradient;
            for l in 0..4 {
                let fd2 = (gu[l] - gd[l]) / (2.0 * h);
                assert!(
                    rel_err(d.hessian[(k, l)], fd2) < 1e-5,
                    "H[{k},{l}] {} vs {fd2}",
                    d.hessian[(k, l)]
                );
            }
        }
    }
}

#[test]
fn poisson_limit_of_loglik() {
    let input = synthetic_input(500, &[1.2, -0.2, 0.3], 0.0, 8);
    let beta = [1.1, -0.1, 0.25];
    let nb = nb2_loglik(&beta, 1e-10, &input).unwrap();
    let pois = poisson_loglik(&beta, &input).unwrap();
    assert!((nb - pois).abs() < 1e-6, "{nb} vs {pois}");
}

#[test]
fn poisson_data_gives_small_alpha() {
    let input = synthetic_input(20_000, &[1.0, 0.3, 0.5], 0.0, 5);
    let fit = nb2_fit(&input, &FitOptions::default()).unwrap();
    assert!(fit.alpha <= 0.01, "alpha = {}", fit.alpha);
    for (b, t) in fit.beta.iter().zip([1.0, 0.3, 0.5]) {
        assert!((b - t).abs() < 0.03);
    }
}

#[test]
fn optimum_conditions() {
    let input = synthetic_input(3000, &[0.7, 0.3, -0.4], 1.3, 21);
    let fit = nb2_fit(&input, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let d = nb2_derivatives(&fit.beta, fit.alpha.ln(), &input).unwrap();
    assert!(d.gradient.amax() < 1e-6 * d.loglik.abs().max(1.0));
    let eig = SymmetricEigen::new(d.hessian.clone());
    assert!(eig.eigenvalues.iter().all(|&v| v < 0.0));
    assert_eq!(d.loglik, fit.loglik);

    for k in 0..fit.beta.len() {
        assert!(fit.se[k] > 0.0);
        assert!((fit.z[k] - fit.beta[k] / fit.se[k]).abs() < 1e-12 * fit.z[k].abs().max(1.0));
        assert_eq!(fit.stars[k], stars(fit.p[k]));
        assert!((fit.pct_change[k] - percent_change(fit.beta[k])).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&fit.p[k]));
    }
    let r2 = fit.pseudo_r2.unwrap();
    assert!(r2 > 0.0 && r2 < 1.0);
    assert!(fit.loglik > fit.loglik_null.unwrap());
}

#[test]
fn fit_is_deterministic() {
    let input = synthetic_input(2000, &[1.0, 0.3, 0.5], 0.8, 77);
    let a = nb2_fit(&input, &FitOptions::default()).unwrap();
    let b = nb2_fit(&input, &FitOptions::default()).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.beta), bits(&b.beta));
    assert_eq!(bits(&a.se), bits(&b.se));
    assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
    assert_eq!(a, b);
}

#[test]
fn row_permutation_changes_nothing() {
    let input = synthetic_input(2000, &[1.0, 0.3, 0.5], 0.8, 78);
    let mut order: Vec<usize> = (0..input.n_obs()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let a = nb2_fit(&input, &FitOptions::default()).unwrap();
    let b = nb2_fit(&input.permuted(&order), &FitOptions::default()).unwrap();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * x.abs().max(1.0);
    assert!(close(a.alpha, b.alpha));
    assert!(close(a.loglik, b.loglik));
    assert!(close(a.pseudo_r2.unwrap(), b.pseudo_r2.unwrap()));
    for k in 0..3 {
        assert!(close(a.beta[k], b.beta[k]));
        assert!(close(a.se[k], b.se[k]));
        assert!(close(a.p[k], b.p[k]));
    }
    let va = vif(&input).unwrap();
    let vb = vif(&input.permuted(&order)).unwrap();
    for (x, y) in va.entries.iter().zip(&vb.entries) {
        assert!(close(x.vif.finite().unwrap(), y.vif.finite().unwrap()));
    }
}

#[test]
fn scaling_a_covariate_rescales_only_its_coefficient() {
    let input = synthetic_input(4000, &[0.8, 0.3, 0.5], 0.6, 31);
    let scaled = input.with_scaled_column("normal", 4.0).unwrap();
    let a = nb2_fit(&input, &FitOptions::default()).unwrap();
    let b = nb2_fit(&scaled, &FitOptions::default()).unwrap();
    assert!(rel_err(a.beta[2] / 4.0, b.beta[2]) < 1e-8);
    for k in 0..2 {
        assert!(rel_err(a.beta[k], b.beta[k]) < 1e-8);
    }
    for k in 0..3 {
        assert!(rel_err(a.z[k], b.z[k]) < 1e-8);
        assert!((a.p[k] - b.p[k]).abs() < 1e-8);
    }
    assert!(rel_err(a.alpha, b.alpha) < 1e-8);
    assert!(rel_err(a.loglik, b.loglik) < 1e-8);
    let (ma, mb) = (a.fitted_means(&input), b.fitted_means(&scaled));
    assert!(ma.iter().zip(&mb).all(|(x, y)| rel_err(*x, *y) < 1e-8));
}

#[test]
fn pseudo_r2_rises_with_a_predictive_column() {
    let full = synthetic_input(5000, &[1.0, 0.3, 0.5], 0.8, 12);
    let reduced = RegressionInput::new(
        full.y().iter().map(|&v| v as i64).collect(),
        full.x().columns(0, 2).into_owned(),
        full.columns()[..2].to_vec(),
    )
    .unwrap();
    let r_full = nb2_fit(&full, &FitOptions::default()).unwrap();
    let r_red = nb2_fit(&reduced, &FitOptions::default()).unwrap();
    assert!(r_full.pseudo_r2.unwrap() > r_red.pseudo_r2.unwrap());
    assert!(r_red.pseudo_r2.unwrap() > 0.0);

    let null = nb2_fit(&full.null_model(), &FitOptions::default()).unwrap();
    assert_eq!(null.pseudo_r2, Some(0.0));
    assert_eq!(r_full.loglik_null, Some(null.loglik));
}

#[test]
fn structural_errors() {
    let base = synthetic_input(100, &[1.0, 0.3, 0.5], 0.8, 2);
    let mut x = base.x().clone().insert_column(3, 0.0);
    let dup = x.column(2).clone_owned();
    x.set_column(3, &dup);
    let mut names = base.columns().to_vec();
    names.push("copy".into());
    let dup_input =
        RegressionInput::new(base.y().iter().map(|&v| v as i64).collect(), x, names).unwrap();
    assert!(matches!(
        nb2_fit(&dup_input, &FitOptions::default()),
        Err(NbrmError::RankDeficient(_))
    ));
    assert!(vif(&dup_input).unwrap().has_infinite());

    let tiny = RegressionInput::new(
        vec![1, 2, 3],
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]),
        vec!["intercept".into(), "x".into()],
    )
    .unwrap();
    assert!(matches!(
        nb2_fit(&tiny, &FitOptions::default()),
        Err(NbrmError::TooFewObservations { .. })
    ));

    assert!(matches!(
        RegressionInput::new(
            vec![1, -2],
            DMatrix::from_element(2, 1, 1.0),
            vec!["intercept".into()]
        ),
        Err(NbrmError::NegativeResponse { row: 1, value: -2 })
    ));
}

#[test]
fn iteration_cap_is_reported() {
    let input = synthetic_input(2000, &[1.0, 0.3, 0.5], 0.8, 9);
    let options = FitOptions {
        max_iter: 1,
        ..FitOptions::default()
    };
    match nb2_fit(&input, &options) {
        Err(NbrmError::NotConverged {
            iterations,
            partial,
        }) => {
            assert_eq!(iterations, 1);
            assert!(!partial.converged);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn vif_fixtures() {
    let n = 16;
    let orthogonal = vec![hadamard(n, 1), hadamard(n, 2), hadamard(n, 4)];
    for e in vif(&vif_input(&orthogonal)).unwrap().entries {
        assert!((e.vif.finite().unwrap() - 1.0).abs() < 1e-9);
    }

    let u = hadamard(n, 1);
    let v = hadamard(n, 2);
    let b: Vec<f64> = u.iter().zip(&v).map(|(a, c)| 0.6 * a + 0.8 * c).collect();
    let cols = vec![u, b, hadamard(n, 8)];
    let report = vif(&vif_input(&cols)).unwrap();
    let oracle = vif_oracle(&cols);
    let expected = [1.5625, 1.5625, 1.0];
    for ((e, o), want) in report.entries.iter().zip(&oracle).zip(expected) {
        let got = e.vif.finite().unwrap();
        assert!((got - want).abs() < 1e-6, "{} = {got}", e.column);
        assert!((o - want).abs() < 1e-9);
    }

    let mut dup = cols.clone();
    dup.push(cols[0].iter().map(|v| 2.0 * v + 1.0).collect());
    let report = vif(&vif_input(&dup)).unwrap();
    assert_eq!(report.get("c0"), Some(VifValue::Infinite));
    assert_eq!(report.get("c3"), Some(VifValue::Infinite));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vif_matches_oracle_and_is_at_least_one(seed in any::<u64>(), rho in -0.95f64..0.95) {
        let x = common::correlated_design(60, rho, seed);
        let cols: Vec<Vec<f64>> = (1..4).map(|j| x.column(j).iter().copied().collect()).collect();
        let report = vif(&vif_input(&cols)).unwrap();
        for (e, o) in report.entries.iter().zip(vif_oracle(&cols)) {
            let v = e.vif.finite().unwrap();
            prop_assert!(v >= 1.0 - 1e-12);
            prop_assert!((v - o).abs() < 1e-8 * o);
        }
    }

    #[test]
    fn percent_change_inverts(beta in -5.0f64..5.0) {
        let x = percent_change(beta) / 100.0;
        // A few ulps of x, amplified by the conditioning of ln(1 + x).
        let tol = 8.0 * f64::EPSILON * beta.abs().max(x.abs() / (1.0 + x));
        prop_assert!((x.ln_1p() - beta).abs() <= tol);
    }
}

#[test]
fn global_table_layout() {
    let spec = SynthSpec {
        n_pubs: 600,
        disciplines: [(Discipline::Che, 0.5), (Discipline::Phy, 0.5)]
            .into_iter()
            .collect(),
        seed: 5,
        ..SynthSpec::default()
    };
    let pubs = gen_corpus(&spec).unwrap();
    let table = run_table(
        &pubs,
        &Discipline::ALL,
        None,
        DesignOptions::default(),
        FitThresholds::default(),
        &FitOptions::default(),
    );
    assert_eq!(table.rows.len(), 19);
    for row in &table.rows {
        let fitted = row.cells[0].outcome.fit().is_some();
        assert_eq!(
            fitted,
            matches!(row.discipline, Discipline::Che | Discipline::Phy)
        );
        if !fitted {
            assert!(matches!(row.cells[0].outcome, CellOutcome::Skipped(_)));
        }
    }

    // Author cap: no design row exceeds ten authors.
    let input = build_design(&pubs, Discipline::Che, None, DesignOptions::default()).unwrap();
    let na = input.column_index("N_a").unwrap();
    assert!(input.x().column(na).iter().all(|&v| v <= 10.0));
    assert_eq!(input.columns(), COLUMNS);
    let all = pubs
        .iter()
        .filter(|p| p.discipline == Discipline::Che)
        .count();
    let capped = pubs
        .iter()
        .filter(|p| p.discipline == Discipline::Che && p.authors.len() <= 10)
        .count();
    assert!(capped < all);
    assert_eq!(input.n_obs(), capped);
}
