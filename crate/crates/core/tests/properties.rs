use biplane::diagnostics::{binned_summary, ResidualRow, ResidualTable};
use biplane::hazards::hazards;
use biplane::validity::{check_validity, ScanOptions, Verdict};
use biplane::*;
use proptest::prelude::*;

fn subjects() -> impl Strategy<Value = Vec<Subject>> {
    prop::collection::vec((1u8..12, any::<bool>(), 1u8..12, any::<bool>(), -1.0..1.0f64), 3..40).prop_map(|rows| {
        rows.into_iter()
            .map(|(a, d1, b, d2, z)| Subject::new(f64::from(a) / 2.0, d1, f64::from(b) / 2.0, d2, vec![z]))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn surface_margins_are_kaplan_meier(s in subjects()) {
        let d = Dataset::new(s).unwrap();
        let surf = dabrowska(&d);
        let y1: Vec<f64> = d.subjects().iter().map(|s| s.y1).collect();
        let e1: Vec<bool> = d.subjects().iter().map(|s| s.delta1).collect();
        let km = km_fit(&y1, &e1).unwrap();
        prop_assert_eq!(surf.eval(0.0, 0.0), 1.0);
        for t in (0..14).map(|k| f64::from(k) / 2.0) {
            prop_assert_eq!(surf.eval(t, 0.0), km.eval(t));
        }
        prop_assert!(surf.s.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn downdate_equals_recompute(s in subjects()) {
        let d = Dataset::new(s).unwrap();
        let Ok(grid) = default_grid(&d, 2) else { return Ok(()) };
        let a = pseudo(&d, &grid, PseudoKind::Trivariate, JackknifeMethod::Downdate);
        let b = pseudo(&d, &grid, PseudoKind::Trivariate, JackknifeMethod::Recompute);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((&a.values - &b.values).amax() <= 1e-10),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn pseudo_rows_follow_subject_permutation(s in subjects(), shift in 1usize..10) {
        let d = Dataset::new(s.clone()).unwrap();
        let Ok(grid) = default_grid(&d, 2) else { return Ok(()) };
        let n = s.len();
        let order: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let Ok(a) = pseudo(&d, &grid, PseudoKind::Bivariate, JackknifeMethod::Downdate) else { return Ok(()) };
        let b = pseudo(&d.resample(&order), &grid, PseudoKind::Bivariate, JackknifeMethod::Downdate).unwrap();
        for (row, &i) in order.iter().enumerate() {
            for j in 0..grid.len() {
                prop_assert!((b.values[(row, j)] - a.values[(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cross_ratio_sign_follows_baseline(theta in 0.1..3.0f64, z in 0.0..1.0f64, t1 in 0.05..2.0f64, t2 in 0.05..2.0f64, b in -1.0..1.0f64) {
        let params = ModelParams::Simple { b: vec![b] };
        for (base, sign) in [(BaselineSpec::Clayton { theta }, 1.0), (BaselineSpec::GumbelBarnett { theta: theta / 3.0 }, -1.0)] {
            let h = hazards(&base, &params, &[z], t1, t2);
            if h.l10 > 0.0 && h.l01 > 0.0 {
                prop_assert!((cross_ratio(&h).unwrap() - 1.0) * sign > 0.0);
            }
        }
    }

    #[test]
    fn sufficient_conditions_imply_clean_scan(a in -1.0..1.0f64, d1 in 0.0..1.0f64, d2 in 0.0..1.0f64, theta in 0.1..3.0f64) {
        // gamma <= alpha, beta on a non-negative box: the ordering part of both conditions holds
        let params = ModelParams::General { alpha: vec![a + d1], beta: vec![a + d2], gamma: vec![a] };
        let r = check_validity(&BaselineSpec::Clayton { theta }, &params, &[(0.0, 1.0)], &ScanOptions { time_points: 12, ..Default::default() });
        prop_assert_eq!(r.verdict, Verdict::SufficientCondition1);
        let scan = validity::numeric_validity_scan(
            &BaselineSpec::Clayton { theta }, &params, &[vec![0.0], vec![1.0]], &validity::time_grid(4.0, 12), &validity::time_grid(4.0, 12));
        prop_assert!(scan.is_empty());
    }

    #[test]
    fn bins_partition_rows_without_splitting_ties(zs in prop::collection::vec(0u8..8, 4..60), bins in 2usize..7) {
        let rows = zs.iter().enumerate().map(|(i, &z)| ResidualRow {
            subject: i, point: 0, z: vec![f64::from(z)], pseudo: 1.0, predicted: 0.5, raw: 0.5,
            pearson: Some(1.0), cloglog_pseudo: None, flagged: false,
        }).collect();
        let t = ResidualTable { rows, covariate_names: vec!["z".into()], simple: true };
        let s = binned_summary(&t, 0, bins, None).unwrap();
        prop_assert_eq!(s.bins.iter().map(|b| b.count).sum::<usize>(), zs.len());
        prop_assert!(s.bins.len() <= bins);
        for w in s.bins.windows(2) {
            prop_assert!(w[0].z_high < w[1].z_low);
        }
    }
}
