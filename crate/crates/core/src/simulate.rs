//! Sampling from Lehmann models with unit-exponential baseline margins.
//!
//! `T1 | z` is exponential with rate `exp(alpha'z)`; `T2 | T1, z` is drawn by
//! inverting the conditional survival
//! `P(T2 > t | T1 = t1) = S(t1,t|z) l10(t1,t|z) / (S(t1,0|z) l10(t1,0|z))`
//! with bisection. Each subject draws from its own RNG stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::BaselineSpec;
use crate::data::{Dataset, Subject};
use crate::error::{Error, Result};
use crate::hazards::{hazards, log_survival, ModelParams};
use crate::par;
use crate::validity::{check_validity, ScanOptions, ValidityReport};

const BISECT_TOL: f64 = 1e-10;
const MAX_T: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CovariateLaw {
    Uniform { low: f64, high: f64 },
    Bernoulli { p: f64 },
}

impl CovariateLaw {
    fn support(&self) -> (f64, f64) {
        match *self {
            CovariateLaw::Uniform { low, high } => (low, high),
            CovariateLaw::Bernoulli { .. } => (0.0, 1.0),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            CovariateLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            CovariateLaw::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Independent exponential censoring per axis; a zero rate means no censoring.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Censoring {
    pub rate1: f64,
    pub rate2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub baseline: BaselineSpec,
    pub model: ModelParams,
    pub covariates: Vec<CovariateLaw>,
    #[serde(default)]
    pub censoring: Censoring,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SimSpec {
    pub fn covariate_box(&self) -> Vec<(f64, f64)> {
        self.covariates.iter().map(|c| c.support()).collect()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    /// Scan window covering all but a `e^-8` tail of each margin for every z in the box.
    pub fn scan_options(&self) -> ScanOptions {
        let bx = self.covariate_box();
        let rate = |c: &[f64]| crate::validity::box_min(c, &bx).exp();
        let (a, b) = match &self.model {
            ModelParams::Simple { b } => (rate(b), rate(b)),
            ModelParams::General { alpha, beta, .. } => (rate(alpha), rate(beta)),
        };
        ScanOptions { tau: (8.0 / a, 8.0 / b), ..ScanOptions::default() }
    }

    pub fn validate(&self) -> Result<ValidityReport> {
        self.baseline.validate()?;
        self.model.validate()?;
        if self.model.p() != self.covariates.len() {
            return Err(Error::InvalidModel(format!(
                "model has {} slopes but {} covariate laws are given",
                self.model.p(),
                self.covariates.len()
            )));
        }
        for c in &self.covariates {
            let ok = match *c {
                CovariateLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
                CovariateLaw::Bernoulli { p } => (0.0..=1.0).contains(&p),
            };
            if !ok {
                return Err(Error::InvalidModel(format!("invalid covariate law {c:?}")));
            }
        }
        let cz = self.censoring;
        if !(cz.rate1 >= 0.0 && cz.rate2 >= 0.0 && cz.rate1.is_finite() && cz.rate2.is_finite()) {
            return Err(Error::InvalidModel("censoring rates must be finite and non-negative".into()));
        }
        let report = check_validity(&self.baseline, &self.model, &self.covariate_box(), &self.scan_options());
        if !report.is_valid() {
            let worst = report.scan.as_ref().and_then(|s| s.violations.first()).cloned();
            return Err(Error::InvalidModel(format!(
                "specification does not define a proper survival function; most negative hazard: {worst:?}"
            )));
        }
        Ok(report)
    }
}

pub fn analytic_surface(spec: &SimSpec, z: &[f64], t1: f64, t2: f64) -> f64 {
    log_survival(&spec.baseline, &spec.model, z, t1, t2).exp()
}

/// `P(T2 > t2 | T1 = t1, z)`.
pub fn conditional_survival(spec: &SimSpec, z: &[f64], t1: f64, t2: f64) -> f64 {
    let ls = |v| log_survival(&spec.baseline, &spec.model, z, t1, v);
    let l10 = |v| hazards(&spec.baseline, &spec.model, z, t1, v).l10;
    (ls(t2) - ls(0.0)).exp() * l10(t2) / l10(0.0)
}

fn invert_conditional(spec: &SimSpec, z: &[f64], t1: f64, u: f64) -> Result<f64> {
    let g = |t| conditional_survival(spec, z, t1, t);
    let mut hi = 1.0;
    while g(hi) > u {
        hi *= 2.0;
        if hi > MAX_T {
            return Err(Error::Bracket(format!("no upper bracket for u = {u} at t1 = {t1}, z = {z:?}")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > BISECT_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.is_nan() {
            return Err(Error::Bracket(format!("conditional survival undefined at t2 = {mid}")));
        }
        if v > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Covariates and latent failure times `(z, t1, t2)` of subject `i`, plus its censoring times.
fn draw_subject(spec: &SimSpec, i: usize) -> Result<(Vec<f64>, f64, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(i as u64);
    let z: Vec<f64> = spec.covariates.iter().map(|c| c.draw(&mut rng)).collect();
    let (xa, _, _) = spec.model.indices(&z);
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let t1 = -(1.0 - u1).ln() / xa.exp();
    let t2 = invert_conditional(spec, &z, t1, 1.0 - u2)?;
    let cens = |rate: f64, rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        if rate > 0.0 {
            -(1.0 - u).ln() / rate
        } else {
            f64::INFINITY
        }
    };
    let c1 = cens(spec.censoring.rate1, &mut rng);
    let c2 = cens(spec.censoring.rate2, &mut rng);
    Ok((z, t1, t2, c1, c2))
}

/// Draw a dataset; the specification is validity-checked first.
pub fn sample(spec: &SimSpec) -> Result<Dataset> {
    spec.validate()?;
    sample_unchecked(spec)
}

pub(crate) fn sample_unchecked(spec: &SimSpec) -> Result<Dataset> {
    let rows = par::map_indexed(spec.n, |i| draw_subject(spec, i));
    let mut subjects = Vec::with_capacity(spec.n);
    for r in rows {
        let (z, t1, t2, c1, c2) = r?;
        subjects.push(Subject::new(t1.min(c1), t1 <= c1, t2.min(c2), t2 <= c2, z));
    }
    Dataset::new(subjects)
}

/// Monte Carlo censored proportions per axis from `n_probe` draws.
pub fn censoring_fraction(spec: &SimSpec, n_probe: usize) -> Result<(f64, f64)> {
    if spec.censoring.rate1 == 0.0 && spec.censoring.rate2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let d = sample(&spec.with_n(n_probe))?;
    let n = d.n() as f64;
    let c1 = d.subjects().iter().filter(|s| !s.delta1).count() as f64 / n;
    let c2 = d.subjects().iter().filter(|s| !s.delta2).count() as f64 / n;
    Ok((c1, c2))
}

/// Common censoring rate giving a target average censored proportion, by bisection on the rate.
pub fn calibrate_censoring(spec: &SimSpec, target: f64, n_probe: usize) -> Result<(f64, (f64, f64))> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::InvalidModel(format!("target censoring fraction {target} must be in [0, 1)")));
    }
    let frac = |rate: f64| -> Result<(f64, f64)> {
        censoring_fraction(&SimSpec { censoring: Censoring { rate1: rate, rate2: rate }, ..spec.clone() }, n_probe)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while {
        let f = frac(hi)?;
        0.5 * (f.0 + f.1) < target
    } {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical("censoring calibration did not bracket the target".into()));
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let f = frac(mid)?;
        if 0.5 * (f.0 + f.1) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rate = 0.5 * (lo + hi);
    Ok((rate, frac(rate)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clayton_spec(n: usize) -> SimSpec {
        SimSpec {
            baseline: BaselineSpec::Clayton { theta: 2.0 },
            model: ModelParams::Simple { b: vec![0.7] },
            covariates: vec![CovariateLaw::Uniform { low: 0.0, high: 1.0 }],
            censoring: Censoring::default(),
            n,
            seed: 11,
        }
    }

    #[test]
    fn closed_form_values() {
        let mut s = clayton_spec(1);
        s.model = ModelParams::Simple { b: vec![0.0] };
        let e2 = 2.0f64.exp();
        assert!((analytic_surface(&s, &[0.0], 1.0, 1.0) - (2.0 * e2 - 1.0).powf(-0.5)).abs() < 1e-14);
        s.baseline = BaselineSpec::Independence;
        assert!((analytic_surface(&s, &[0.0], 0.4, 1.1) - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn conditional_survival_starts_at_one_and_decreases() {
        let s = clayton_spec(1);
        assert!((conditional_survival(&s, &[0.5], 0.7, 0.0) - 1.0).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 1..50 {
            let v = conditional_survival(&s, &[0.5], 0.7, k as f64 * 0.1);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn no_censoring_means_all_events() {
        let d = sample(&clayton_spec(200)).unwrap();
        assert!(d.subjects().iter().all(|s| s.delta1 && s.delta2));
        assert_eq!(censoring_fraction(&clayton_spec(10), 10).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn same_seed_same_data() {
        let a = sample(&clayton_spec(50)).unwrap();
        let b = sample(&clayton_spec(50)).unwrap();
        assert_eq!(a.subjects(), b.subjects());
        let c = sample(&clayton_spec(50).with_seed(12)).unwrap();
        assert_ne!(a.subjects(), c.subjects());
    }

    #[test]
    fn invalid_general_spec_is_rejected() {
        let mut s = clayton_spec(10);
        s.model = ModelParams::General { alpha: vec![0.0], beta: vec![0.0], gamma: vec![2.0] };
        s.covariates = vec![CovariateLaw::Uniform { low: 0.0, high: 2.0 }];
        assert!(matches!(sample(&s), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"baseline":{"family":"gumbel_barnett","theta":1.0},
            "model":{"type":"general","alpha":[0.5],"beta":[-0.3],"gamma":[0.2]},
            "covariates":[{"law":"uniform","low":0.0,"high":2.0}],
            "censoring":{"rate1":0.2,"rate2":0.2},"n":100,"seed":5}"#;
        let s: SimSpec = serde_json::from_str(text).unwrap();
        assert_eq!(s.baseline, BaselineSpec::GumbelBarnett { theta: 1.0 });
        let back: SimSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
