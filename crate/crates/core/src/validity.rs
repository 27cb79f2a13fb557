//! Sufficient validity conditions and a numeric fallback scan.
//!
//! A Lehmann model defines a proper survival function when `l10`, `l01` and
//! `l11` are non-negative everywhere. The closed-form conditions only involve
//! box minima of linear forms and the sign of `a0`; when they fail, the
//! hazards are evaluated on a (covariate x time) lattice.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::Baseline;
use crate::hazards::{hazards, ModelParams};
use crate::par;

pub const NEG_TOL: f64 = -1e-10;

/// Per-coordinate closed ranges.
pub type CovariateBox = [(f64, f64)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Points per time axis, endpoints included.
    pub time_points: usize,
    pub tau: (f64, f64),
    /// Latin-hypercube draws added to the box corners.
    pub z_samples: usize,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { time_points: 50, tau: (4.0, 4.0), z_samples: 25, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    L10,
    L01,
    L11,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub z: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
    pub component: Component,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SufficientCondition1,
    SufficientCondition2,
    NumericScanClean,
    Violations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub z_samples: usize,
    pub time_points: usize,
    pub tau: (f64, f64),
    /// Most negative first.
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub condition1: bool,
    pub condition2: bool,
    /// Smallest `a0` on the time lattice.
    pub min_a0: f64,
    pub a0_scan_points: usize,
    pub tau: (f64, f64),
    /// Named box minima of the linear forms the conditions inspect.
    pub box_minima: Vec<(String, f64)>,
    pub scan: Option<ScanReport>,
    pub verdict: Verdict,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.verdict != Verdict::Violations
    }
}

/// Exact minimum of `c'z` over the box.
pub fn box_min(c: &[f64], bx: &CovariateBox) -> f64 {
    c.iter().zip(bx).map(|(&c, &(lo, hi))| (c * lo).min(c * hi)).sum()
}

pub fn time_grid(tau: f64, points: usize) -> Vec<f64> {
    let m = points.max(2) - 1;
    (0..=m).map(|k| tau * k as f64 / m as f64).collect()
}

/// Box corners (for up to 10 coordinates) followed by a Latin-hypercube sample.
pub fn z_samples(bx: &CovariateBox, n_lhs: usize, seed: u64) -> Vec<Vec<f64>> {
    let p = bx.len();
    let mut out = Vec::new();
    if p <= 10 {
        for mask in 0..(1usize << p) {
            out.push((0..p).map(|k| if mask >> k & 1 == 1 { bx[k].1 } else { bx[k].0 }).collect());
        }
    }
    if n_lhs > 0 && p > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
        for &(lo, hi) in bx {
            let mut strata: Vec<usize> = (0..n_lhs).collect();
            strata.shuffle(&mut rng);
            cols.push(
                strata
                    .iter()
                    .map(|&s| lo + (hi - lo) * (s as f64 + rng.random::<f64>()) / n_lhs as f64)
                    .collect(),
            );
        }
        for i in 0..n_lhs {
            out.push(cols.iter().map(|c| c[i]).collect());
        }
    }
    out
}

/// Every `(z, t1, t2)` cell where a hazard component falls below `NEG_TOL`.
pub fn numeric_validity_scan(
    base: &dyn Baseline,
    params: &ModelParams,
    zs: &[Vec<f64>],
    t1_grid: &[f64],
    t2_grid: &[f64],
) -> Vec<Violation> {
    let rows = par::map_indexed(zs.len() * t1_grid.len(), |k| {
        let z = &zs[k / t1_grid.len()];
        let t1 = t1_grid[k % t1_grid.len()];
        let mut found = Vec::new();
        for &t2 in t2_grid {
            let h = hazards(base, params, z, t1, t2);
            for (component, value) in [(Component::L10, h.l10), (Component::L01, h.l01), (Component::L11, h.l11)] {
                if value < NEG_TOL || value.is_nan() {
                    found.push(Violation { z: z.clone(), t1, t2, component, value });
                }
            }
        }
        found
    });
    let mut all: Vec<Violation> = rows.into_iter().flatten().collect();
    all.sort_by(|a, b| a.value.total_cmp(&b.value));
    all
}

fn min_a0(base: &dyn Baseline, tau: (f64, f64), points: usize) -> f64 {
    let g1 = time_grid(tau.0, points);
    let g2 = time_grid(tau.1, points);
    par::map_indexed(g1.len(), |i| g2.iter().map(|&v| base.a0(g1[i], v)).fold(f64::INFINITY, f64::min))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn finish(
    base: &dyn Baseline,
    params: &ModelParams,
    bx: &CovariateBox,
    opts: &ScanOptions,
    condition1: bool,
    condition2: bool,
    min_a0: f64,
    box_minima: Vec<(String, f64)>,
) -> ValidityReport {
    let (scan, verdict) = if condition1 {
        (None, Verdict::SufficientCondition1)
    } else if condition2 {
        (None, Verdict::SufficientCondition2)
    } else {
        let zs = z_samples(bx, opts.z_samples, opts.seed);
        let violations = numeric_validity_scan(
            base,
            params,
            &zs,
            &time_grid(opts.tau.0, opts.time_points),
            &time_grid(opts.tau.1, opts.time_points),
        );
        let verdict = if violations.is_empty() { Verdict::NumericScanClean } else { Verdict::Violations };
        let report = ScanReport { z_samples: zs.len(), time_points: opts.time_points, tau: opts.tau, violations };
        (Some(report), verdict)
    };
    ValidityReport {
        condition1,
        condition2,
        min_a0,
        a0_scan_points: opts.time_points,
        tau: opts.tau,
        box_minima,
        scan,
        verdict,
    }
}

pub fn check_validity_simple(base: &dyn Baseline, b: &[f64], bx: &CovariateBox, opts: &ScanOptions) -> ValidityReport {
    let m = min_a0(base, opts.tau, opts.time_points);
    let bmin = box_min(b, bx);
    let params = ModelParams::Simple { b: b.to_vec() };
    finish(base, &params, bx, opts, m >= NEG_TOL, bmin >= 0.0, m, vec![("b'z".into(), bmin)])
}

pub fn check_validity_general(
    base: &dyn Baseline,
    alpha: &[f64],
    beta: &[f64],
    gamma: &[f64],
    bx: &CovariateBox,
    opts: &ScanOptions,
) -> ValidityReport {
    let diff = |x: &[f64]| x.iter().zip(gamma).map(|(a, g)| a - g).collect::<Vec<_>>();
    let ag = box_min(&diff(alpha), bx);
    let bg = box_min(&diff(beta), bx);
    let g = box_min(gamma, bx);
    let m = min_a0(base, opts.tau, opts.time_points);
    let ordered = ag >= 0.0 && bg >= 0.0;
    let params = ModelParams::General { alpha: alpha.to_vec(), beta: beta.to_vec(), gamma: gamma.to_vec() };
    finish(
        base,
        &params,
        bx,
        opts,
        ordered && m >= NEG_TOL,
        ordered && g >= 0.0,
        m,
        vec![("(alpha-gamma)'z".into(), ag), ("(beta-gamma)'z".into(), bg), ("gamma'z".into(), g)],
    )
}

pub fn check_validity(base: &dyn Baseline, params: &ModelParams, bx: &CovariateBox, opts: &ScanOptions) -> ValidityReport {
    match params {
        ModelParams::Simple { b } => check_validity_simple(base, b, bx, opts),
        ModelParams::General { alpha, beta, gamma } => check_validity_general(base, alpha, beta, gamma, bx, opts),
    }
}
