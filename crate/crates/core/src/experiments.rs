//! Monte Carlo studies on simulated data.
//!
//! Replicate `r` of a study draws its dataset with seed `spec.seed + r`, so
//! every study is reproducible and independent of the worker count.

use serde::{Deserialize, Serialize};

use crate::bootstrap::default_resampler;
use crate::data::{Dataset, EvalGrid};
use crate::diagnostics::{binned_summary, pseudo_residuals, trend_test, FittedModel};
use crate::error::{Error, Result};
use crate::general::{bootstrap_general, fit_general, fit_general_pseudo, GeneralOptions, LinkPolicy};
use crate::hazards::ModelParams;
use crate::link::LinkKind;
use crate::par;
use crate::pseudo::{self, PseudoKind};
use crate::simple::{fit_simple, FitOptions};
use crate::simulate::{sample, SimSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub spec: SimSpec,
    pub grid: Vec<(f64, f64)>,
    pub replications: usize,
}

impl Study {
    fn grid(&self) -> Result<EvalGrid> {
        EvalGrid::new(self.grid.clone())
    }

    /// Run `f` on every replicate dataset, in replicate order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<Result<T>>>
    where
        T: Send,
        F: Fn(&Dataset) -> Result<T> + Sync + Send,
    {
        self.spec.validate()?;
        Ok(par::map_indexed(self.replications, |r| {
            let spec = self.spec.with_seed(self.spec.seed.wrapping_add(r as u64));
            f(&sample(&spec)?)
        }))
    }
}

/// Mean, Monte Carlo standard error of the mean, and standard deviation of each column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub mean: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub sd: Vec<f64>,
}

pub fn summarize(rows: &[Vec<f64>]) -> ColumnSummary {
    let q = rows.first().map_or(0, Vec::len);
    let m = rows.len() as f64;
    let mean: Vec<f64> = (0..q).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / m).collect();
    let sd: Vec<f64> = (0..q)
        .map(|c| (rows.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / (m - 1.0)).sqrt())
        .collect();
    let mc_se = sd.iter().map(|s| s / m.sqrt()).collect();
    ColumnSummary { mean, mc_se, sd }
}

fn split<T>(results: Vec<Result<T>>) -> (Vec<T>, usize) {
    let total = results.len();
    let ok: Vec<T> = results.into_iter().filter_map(|r| r.ok()).collect();
    let failed = total - ok.len();
    (ok, failed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimpleRecovery {
    pub truth: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub summary: ColumnSummary,
    /// Share of replicates whose 95% Wald interval covers the truth, per slope.
    pub coverage: Vec<f64>,
    pub failed: usize,
}

pub fn simple_recovery(study: &Study) -> Result<SimpleRecovery> {
    let ModelParams::Simple { b } = &study.spec.model else {
        return Err(Error::InvalidModel("simple recovery needs a simple-model specification".into()));
    };
    let grid = study.grid()?;
    let (fits, failed) = split(study.run(|d| {
        let f = fit_simple(d, &grid, &FitOptions::default())?;
        Ok((f.slopes.clone(), f.slope_std_errors()))
    })?);
    if fits.len() < 2 {
        return Err(Error::Numerical(format!("only {} of {} replicates succeeded", fits.len(), study.replications)));
    }
    let coverage = (0..b.len())
        .map(|c| fits.iter().filter(|(e, s)| (e[c] - b[c]).abs() <= 1.959963984540054 * s[c]).count() as f64 / fits.len() as f64)
        .collect();
    let (estimates, std_errors): (Vec<_>, Vec<_>) = fits.into_iter().unzip();
    Ok(SimpleRecovery { truth: b.clone(), summary: summarize(&estimates), estimates, std_errors, coverage, failed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralRecovery {
    /// `(alpha, beta, gamma)` concatenated.
    pub truth: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    pub summary: ColumnSummary,
    /// Per replicate, `|alpha - gamma|` and `|beta - gamma|` summed over covariates.
    pub slope_gaps: Vec<(f64, f64)>,
    pub failed: usize,
}

impl GeneralRecovery {
    pub fn mean_gaps(&self) -> (f64, f64) {
        let m = self.slope_gaps.len() as f64;
        let s = self.slope_gaps.iter().fold((0.0, 0.0), |a, g| (a.0 + g.0, a.1 + g.1));
        (s.0 / m, s.1 / m)
    }
}

pub fn general_recovery(study: &Study, options: &GeneralOptions) -> Result<GeneralRecovery> {
    let truth = match &study.spec.model {
        ModelParams::Simple { b } => [b.clone(), b.clone(), b.clone()].concat(),
        ModelParams::General { alpha, beta, gamma } => [alpha.clone(), beta.clone(), gamma.clone()].concat(),
    };
    let grid = study.grid()?;
    let (fits, failed) = split(study.run(|d| {
        let f = fit_general(d, &grid, options)?;
        Ok([f.alpha, f.beta, f.gamma].concat())
    })?);
    if fits.len() < 2 {
        return Err(Error::Numerical(format!("only {} of {} replicates succeeded", fits.len(), study.replications)));
    }
    let p = truth.len() / 3;
    let gap = |e: &[f64], o: usize| (0..p).map(|c| (e[o + c] - e[2 * p + c]).abs()).sum::<f64>();
    let slope_gaps = fits.iter().map(|e| (gap(e, 0), gap(e, p))).collect();
    Ok(GeneralRecovery { truth, summary: summarize(&fits), estimates: fits, slope_gaps, failed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSelection {
    pub replicates: usize,
    pub all_loglog: usize,
    pub all_cloglog: usize,
    pub mixed: usize,
    pub failed: usize,
}

/// Links chosen per point (no common-link requirement) in each replicate.
pub fn link_selection(study: &Study) -> Result<LinkSelection> {
    let grid = study.grid()?;
    let options = GeneralOptions { link_policy: LinkPolicy::PerPoint, ..Default::default() };
    let (links, failed) = split(study.run(|d| {
        let pm = pseudo::pseudo(d, &grid, PseudoKind::Trivariate, options.jackknife)?;
        Ok(fit_general_pseudo(d, &pm, &options, None)?.link3)
    })?);
    let all = |k: LinkKind| links.iter().filter(|l| l.iter().all(|&x| x == k)).count();
    let (all_loglog, all_cloglog) = (all(LinkKind::Loglog), all(LinkKind::Cloglog));
    Ok(LinkSelection {
        replicates: study.replications,
        all_loglog,
        all_cloglog,
        mixed: links.len() - all_loglog - all_cloglog,
        failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceComparison {
    pub analytic_se: Vec<f64>,
    pub bootstrap_se: Vec<f64>,
    /// `analytic / bootstrap` per `xi2` entry.
    pub ratio: Vec<f64>,
    pub bootstrap_failed: usize,
}

/// Analytic two-step versus bootstrap standard errors of `xi2` on one simulated dataset.
pub fn variance_comparison(spec: &SimSpec, grid: &[(f64, f64)], replicates: usize, seed: u64) -> Result<VarianceComparison> {
    let d = sample(spec)?;
    let grid = EvalGrid::new(grid.to_vec())?;
    let options = GeneralOptions { seed, ..Default::default() };
    let fit = fit_general(&d, &grid, &options)?;
    let boot = bootstrap_general(&d, &grid, &options, &fit.link3, replicates, &default_resampler(seed))?;
    let q1 = fit.xi1().len();
    let q2 = fit.xi2().len();
    let analytic_se: Vec<f64> = (0..q2).map(|i| fit.covariance_xi2_analytic[(i, i)].sqrt()).collect();
    let bootstrap_se: Vec<f64> = (0..q2).map(|i| boot.covariance[(q1 + i, q1 + i)].sqrt()).collect();
    let ratio = analytic_se.iter().zip(&bootstrap_se).map(|(a, b)| a / b).collect();
    Ok(VarianceComparison { analytic_se, bootstrap_se, ratio, bootstrap_failed: boot.failed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStudy {
    pub bins_total: usize,
    /// Bins whose mean raw residual lies within 3 SEs of zero.
    pub bins_within: usize,
    /// Per replicate, the smallest trend-test p-value over grid points times K.
    pub trend_p: Vec<f64>,
    pub failed: usize,
}

impl ResidualStudy {
    pub fn within_share(&self) -> f64 {
        self.bins_within as f64 / self.bins_total as f64
    }

    pub fn detected_share(&self, level: f64) -> f64 {
        self.trend_p.iter().filter(|&&p| p < level).count() as f64 / self.trend_p.len() as f64
    }
}

/// Simple-model fits with binned pseudo-residuals over covariate `covariate`, per grid point.
pub fn residual_study(study: &Study, covariate: usize, bins: usize) -> Result<ResidualStudy> {
    let grid = study.grid()?;
    let k = grid.len();
    let (reps, failed) = split(study.run(|d| {
        let pm = pseudo::pseudo(d, &grid, PseudoKind::Bivariate, Default::default())?;
        let fit = crate::simple::fit_simple_pseudo(d, &pm, &Default::default())?;
        let table = pseudo_residuals(FittedModel::Simple(&fit), d, &pm)?;
        let mut within = 0;
        let mut total = 0;
        let mut p_min = f64::INFINITY;
        for j in 0..k {
            let s = binned_summary(&table, covariate, bins, Some(j))?;
            total += s.bins.len();
            within += s.bins.iter().filter(|b| b.mean_raw.abs() <= 3.0 * b.se_raw).count();
            p_min = p_min.min(trend_test(&s)?.p_value);
        }
        Ok((within, total, (p_min * k as f64).min(1.0)))
    })?);
    Ok(ResidualStudy {
        bins_total: reps.iter().map(|r| r.1).sum(),
        bins_within: reps.iter().map(|r| r.0).sum(),
        trend_p: reps.iter().map(|r| r.2).collect(),
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::BaselineSpec;
    use crate::simulate::{Censoring, CovariateLaw};

    fn study(reps: usize) -> Study {
        Study {
            spec: SimSpec {
                baseline: BaselineSpec::Clayton { theta: 2.0 },
                model: ModelParams::Simple { b: vec![0.7] },
                covariates: vec![CovariateLaw::Uniform { low: 0.0, high: 1.0 }],
                censoring: Censoring { rate1: 0.1, rate2: 0.1 },
                n: 300,
                seed: 40,
            },
            grid: vec![(0.3, 0.3), (0.8, 0.8)],
            replications: reps,
        }
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[vec![1.0, 2.0], vec![3.0, 2.0]]);
        assert_eq!(s.mean, vec![2.0, 2.0]);
        assert!((s.sd[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.sd[1], 0.0);
    }

    #[test]
    fn replicates_are_reproducible() {
        let a = simple_recovery(&study(4)).unwrap();
        let b = simple_recovery(&study(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimates.len() + a.failed, 4);
        assert!(a.estimates[0] != a.estimates[1]);
    }

    #[test]
    fn clayton_selects_loglog() {
        let l = link_selection(&study(3)).unwrap();
        assert_eq!(l.all_loglog, 3);
    }
}
