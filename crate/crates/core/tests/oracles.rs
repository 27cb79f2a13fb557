//! Estimator and jackknife outputs against brute-force recomputation.

use biplane::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn km(times: &[f64], events: &[bool], t: f64) -> f64 {
    let mut jumps: Vec<f64> = times.iter().zip(events).filter(|p| *p.1).map(|p| *p.0).collect();
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    let mut s = 1.0;
    for u in jumps.into_iter().filter(|&u| u <= t) {
        let risk = times.iter().filter(|&&x| x >= u).count() as f64;
        let d = times.iter().zip(events).filter(|p| *p.1 && *p.0 == u).count() as f64;
        s *= 1.0 - d / risk;
    }
    s
}

/// Product-limit form written directly from counts at each pair of failure times.
fn naive_dabrowska(subjects: &[Subject], t1: f64, t2: f64) -> f64 {
    let y1: Vec<f64> = subjects.iter().map(|s| s.y1).collect();
    let y2: Vec<f64> = subjects.iter().map(|s| s.y2).collect();
    let d1: Vec<bool> = subjects.iter().map(|s| s.delta1).collect();
    let d2: Vec<bool> = subjects.iter().map(|s| s.delta2).collect();
    let fails = |y: &[f64], d: &[bool], t: f64| {
        let mut f: Vec<f64> = y.iter().zip(d).filter(|p| *p.1 && *p.0 <= t).map(|p| *p.0).collect();
        f.sort_by(f64::total_cmp);
        f.dedup();
        f
    };
    let mut s = km(&y1, &d1, t1) * km(&y2, &d2, t2);
    for &u in &fails(&y1, &d1, t1) {
        for &v in &fails(&y2, &d2, t2) {
            let count = |f: &dyn Fn(&Subject) -> bool| subjects.iter().filter(|s| f(s)).count() as f64;
            let r = count(&|s| s.y1 >= u && s.y2 >= v);
            let a = count(&|s| s.y1 == u && s.delta1 && s.y2 >= v);
            let b = count(&|s| s.y1 >= u && s.y2 == v && s.delta2);
            let c = count(&|s| s.y1 == u && s.delta1 && s.y2 == v && s.delta2);
            let den = (r - a) * (r - b);
            if r > 0.0 && den != 0.0 {
                s *= r * (r - a - b + c) / den;
            }
        }
    }
    s
}

fn random_subjects(rng: &mut ChaCha8Rng, n: usize) -> Vec<Subject> {
    (0..n)
        .map(|_| {
            let t1 = (rng.random::<f64>() * 20.0).ceil() / 4.0;
            let t2 = (rng.random::<f64>() * 20.0).ceil() / 4.0;
            Subject::new(t1, rng.random::<f64>() < 0.7, t2, rng.random::<f64>() < 0.7, vec![0.0])
        })
        .collect()
}

#[test]
fn surface_matches_direct_product_on_censored_tied_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let subjects = random_subjects(&mut rng, 60);
        let surface = dabrowska(&Dataset::new(subjects.clone()).unwrap());
        for a in 0..=21 {
            for b in 0..=21 {
                let (t1, t2) = (a as f64 / 4.0 + 0.1, b as f64 / 4.0 + 0.1);
                let (x, y) = (surface.eval(t1, t2), naive_dabrowska(&subjects, t1, t2));
                assert!((x - y).abs() <= 1e-12, "({t1}, {t2}): {x} vs {y}");
            }
        }
    }
}

#[test]
fn log_surface_is_margins_plus_accumulated_cell_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let d = Dataset::new(random_subjects(&mut rng, 80)).unwrap();
    let s = dabrowska(&d);
    let h = hazard_increments(&d);
    let mut acc = vec![vec![0.0; h.v_grid.len() + 1]; h.u_grid.len() + 1];
    for r in 1..=h.u_grid.len() {
        for c in 1..=h.v_grid.len() {
            let (l10, l01, l11) = (h.l10[(r, c)], h.l01[(r, c)], h.l11[(r, c)]);
            let den = (1.0 - l10) * (1.0 - l01);
            let term = if h.risk[(r, c)] > 0 && den != 0.0 { (1.0 - (l10 * l01 - l11) / den).ln() } else { 0.0 };
            acc[r][c] = term + acc[r - 1][c] + acc[r][c - 1] - acc[r - 1][c - 1];
            if s.s[(r, c)] > 0.0 {
                let lhs = s.s[(r, c)].ln() - s.s[(r, 0)].ln() - s.s[(0, c)].ln();
                assert!((lhs - acc[r][c]).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn three_subject_pseudo_values_match_leave_one_out() {
    let subjects = vec![
        Subject::new(1.0, true, 1.0, true, vec![0.0]),
        Subject::new(2.0, false, 3.0, true, vec![0.0]),
        Subject::new(4.0, true, 2.0, false, vec![0.0]),
    ];
    let d = Dataset::new(subjects.clone()).unwrap();
    let grid = EvalGrid::new(vec![(1.5, 1.5)]).unwrap();
    let full = naive_dabrowska(&subjects, 1.5, 1.5);
    for method in [JackknifeMethod::Downdate, JackknifeMethod::Recompute] {
        let pm = pseudo(&d, &grid, PseudoKind::Bivariate, method).unwrap();
        for i in 0..3 {
            let mut rest = subjects.clone();
            rest.remove(i);
            let expect = 3.0 * full - 2.0 * naive_dabrowska(&rest, 1.5, 1.5);
            assert!((pm.values[(i, 0)] - expect).abs() <= 1e-12);
        }
    }
}

#[test]
fn censored_subject_at_largest_time() {
    let times = [1.0, 2.0, 3.0, 4.0, 5.0];
    let events = [true, true, false, true, false];
    let subjects: Vec<Subject> = times.iter().zip(events).map(|(&t, e)| Subject::new(t, e, t, true, vec![0.0])).collect();
    let d = Dataset::new(subjects).unwrap();
    let grid = EvalGrid::new(vec![(4.5, 1.5)]).unwrap();
    let pm = pseudo(&d, &grid, PseudoKind::Marginal1, JackknifeMethod::Downdate).unwrap();
    let full = km(&times, &events, 4.5);
    for i in 0..5 {
        let (mut t, mut e) = (times.to_vec(), events.to_vec());
        t.remove(i);
        e.remove(i);
        let expect = 5.0 * full - 4.0 * km(&t, &e, 4.5);
        assert!((pm.values[(i, 0)] - expect).abs() <= 1e-12, "subject {i}");
    }
}

#[test]
fn trivariate_blocks_equal_single_functionals() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let d = Dataset::new(random_subjects(&mut rng, 120)).unwrap();
    let grid = default_grid(&d, 3).unwrap();
    let tri = pseudo(&d, &grid, PseudoKind::Trivariate, JackknifeMethod::Downdate).unwrap();
    let singles = [PseudoKind::Marginal1, PseudoKind::Marginal2, PseudoKind::Bivariate];
    for (b, kind) in singles.into_iter().enumerate() {
        let single = pseudo(&d, &grid, kind, JackknifeMethod::Downdate).unwrap();
        assert_eq!(tri.block(b), single.values);
    }
}
