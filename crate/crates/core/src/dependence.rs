//! Local and averaged dependence measures under the Lehmann models.

use serde::{Deserialize, Serialize};

use crate::baseline::Baseline;
use crate::error::{Error, Result};
use crate::hazards::{hazards, log_survival, HazardTriple, ModelParams};
use crate::quad;

pub const QUAD_TOL: f64 = 1e-8;

/// `l11 / (l10 l01)`.
pub fn cross_ratio(triple: &HazardTriple) -> Result<f64> {
    let den = triple.l10 * triple.l01;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Numerical(format!("cross ratio undefined: l10 * l01 = {den}")));
    }
    Ok(1.0 + triple.a / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightedKind {
    /// Unweighted average of the cross ratio against `l10 l01`.
    C,
    /// The same average with the joint survival as an extra weight.
    CTilde,
}

/// Weighted average of the covariate-adjusted cross ratio over `[0,t1] x [0,t2]`.
pub fn weighted_cross_ratio(
    base: &dyn Baseline,
    params: &ModelParams,
    z: &[f64],
    t1: f64,
    t2: f64,
    kind: WeightedKind,
) -> Result<f64> {
    let h = |s1: f64, s2: f64| hazards(base, params, z, s1, s2);
    let (num, den) = match kind {
        WeightedKind::C => {
            let ls = |u, v| log_survival(base, params, z, u, v);
            let num = ls(t1, t2) - ls(t1, 0.0) - ls(0.0, t2);
            let den = quad::integrate2(
                |s1, s2| {
                    let t = h(s1, s2);
                    t.l10 * t.l01
                },
                (0.0, t1),
                (0.0, t2),
                QUAD_TOL,
            )?;
            (num, den)
        }
        WeightedKind::CTilde => {
            let w = |s1, s2| log_survival(base, params, z, s1, s2).exp();
            let num = quad::integrate2(|s1, s2| h(s1, s2).a * w(s1, s2), (0.0, t1), (0.0, t2), QUAD_TOL)?;
            let den = quad::integrate2(
                |s1, s2| {
                    let t = h(s1, s2);
                    t.l10 * t.l01 * w(s1, s2)
                },
                (0.0, t1),
                (0.0, t2),
                QUAD_TOL,
            )?;
            (num, den)
        }
    };
    if den == 0.0 {
        return Err(Error::Numerical("weighted cross ratio has a zero denominator".into()));
    }
    Ok(1.0 + num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativityDemo {
    /// `l11(point | z) / lambda11_0(point)` for each z of the pair.
    pub ratios: (f64, f64),
    /// The baseline has no local dependence at the point, so the contrast is uninformative.
    pub degenerate: bool,
}

pub fn non_multiplicativity_demo(
    base: &dyn Baseline,
    params: &ModelParams,
    z_pair: (&[f64], &[f64]),
    point: (f64, f64),
) -> MultiplicativityDemo {
    let (t1, t2) = point;
    let l0 = base.lambda11(t1, t2);
    let r = |z: &[f64]| hazards(base, params, z, t1, t2).l11 / l0;
    MultiplicativityDemo { ratios: (r(z_pair.0), r(z_pair.1)), degenerate: base.a0(t1, t2) == 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::BaselineSpec;

    #[test]
    fn cross_ratio_cases() {
        let simple = ModelParams::Simple { b: vec![0.6] };
        let ind = hazards(&BaselineSpec::Independence, &simple, &[1.0], 0.5, 0.5);
        assert!((cross_ratio(&ind).unwrap() - 1.0).abs() < 1e-15);
        let c = BaselineSpec::Clayton { theta: 2.0 };
        let t = hazards(&c, &simple, &[0.0], 0.7, 1.4);
        assert!((cross_ratio(&t).unwrap() - 3.0).abs() < 1e-12);
        let gb = hazards(&BaselineSpec::GumbelBarnett { theta: 0.5 }, &simple, &[0.3], 0.7, 1.4);
        assert!(cross_ratio(&gb).unwrap() < 1.0);
        let zero = HazardTriple { l10: 0.0, l01: 1.0, l11: 0.0, a: 0.0 };
        assert!(cross_ratio(&zero).is_err());
    }

    #[test]
    fn weighted_measures_match_brute_force() {
        let base = BaselineSpec::Clayton { theta: 2.0 };
        let params = ModelParams::Simple { b: vec![0.0] };
        let c = weighted_cross_ratio(&base, &params, &[0.0], 1.0, 0.8, WeightedKind::C).unwrap();
        // constant cross ratio: the weighted average equals it
        assert!((c - 3.0).abs() < 1e-6);

        let params = ModelParams::General { alpha: vec![0.3], beta: vec![0.1], gamma: vec![-0.2] };
        let n = 400;
        let (t1, t2) = (1.0, 0.8);
        let (mut num, mut den, mut num_w, mut den_w) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let s1 = (i as f64 + 0.5) * t1 / n as f64;
                let s2 = (j as f64 + 0.5) * t2 / n as f64;
                let h = hazards(&base, &params, &[1.0], s1, s2);
                let w = log_survival(&base, &params, &[1.0], s1, s2).exp();
                num += h.a;
                den += h.l10 * h.l01;
                num_w += h.a * w;
                den_w += h.l10 * h.l01 * w;
            }
        }
        let c = weighted_cross_ratio(&base, &params, &[1.0], t1, t2, WeightedKind::C).unwrap();
        let ct = weighted_cross_ratio(&base, &params, &[1.0], t1, t2, WeightedKind::CTilde).unwrap();
        assert!((c - (1.0 + num / den)).abs() < 1e-4, "{c}");
        assert!((ct - (1.0 + num_w / den_w)).abs() < 1e-4, "{ct}");
    }

    #[test]
    fn independence_average_is_one() {
        let c = weighted_cross_ratio(
            &BaselineSpec::Independence,
            &ModelParams::Simple { b: vec![1.0] },
            &[0.5],
            1.0,
            1.0,
            WeightedKind::C,
        )
        .unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_failure_rate_is_not_multiplicative() {
        let c = BaselineSpec::Clayton { theta: 2.0 };
        let simple = ModelParams::Simple { b: vec![0.8] };
        let d = non_multiplicativity_demo(&c, &simple, (&[0.0], &[1.0]), (0.5, 0.5));
        assert!(!d.degenerate);
        // a multiplicative form would give exp(0.8) for z = 1
        assert!((d.ratios.1 / d.ratios.0 - 0.8f64.exp()).abs() > 1e-3);

        let ind = non_multiplicativity_demo(&BaselineSpec::Independence, &simple, (&[0.0], &[1.0]), (0.5, 0.5));
        assert!(ind.degenerate);
        assert!((ind.ratios.1 - 1.6f64.exp()).abs() < 1e-12);
    }
}
