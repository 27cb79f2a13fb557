//! Simple Lehmann model: `S(t1,t2|z) = S0(t1,t2)^exp(b'z)`, fitted to
//! bivariate pseudo-observations with the cloglog link.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, EvalGrid};
use crate::error::{Error, Result};
use crate::gee::{sandwich, GeeProblem, SolverOptions, SolverSummary};
use crate::link::LinkKind;
use crate::pseudo::{self, JackknifeMethod, PseudoKind, PseudoMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub solver: SolverOptions,
    pub jackknife: JackknifeMethod,
}

#[derive(Debug, Clone)]
pub struct SimpleLehmannFit {
    /// `b0(t1^j, t2^j)` for each grid point.
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
    /// `(K + p) x (K + p)` sandwich covariance, intercepts first.
    pub covariance: DMatrix<f64>,
    pub grid: EvalGrid,
    pub covariate_names: Vec<String>,
    pub solver: SolverSummary,
    pub warnings: Vec<String>,
}

impl SimpleLehmannFit {
    pub fn k(&self) -> usize {
        self.intercepts.len()
    }

    pub fn params(&self) -> Vec<f64> {
        self.intercepts.iter().chain(&self.slopes).copied().collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.covariance.nrows()).map(|i| self.covariance[(i, i)].max(0.0).sqrt()).collect()
    }

    pub fn slope_std_errors(&self) -> Vec<f64> {
        self.std_errors()[self.k()..].to_vec()
    }

    pub fn wald_z(&self) -> Vec<f64> {
        self.params().iter().zip(self.std_errors()).map(|(b, s)| b / s).collect()
    }

    /// Two-sided normal p-values of the Wald statistics.
    pub fn p_values(&self) -> Vec<f64> {
        let norm = Normal::standard();
        self.wald_z()
            .iter()
            .map(|z| if z.is_finite() { 2.0 * norm.sf(z.abs()) } else { f64::NAN })
            .collect()
    }
}

pub fn fit_simple(dataset: &Dataset, grid: &EvalGrid, options: &FitOptions) -> Result<SimpleLehmannFit> {
    let pm = pseudo::pseudo(dataset, grid, PseudoKind::Bivariate, options.jackknife)?;
    fit_simple_pseudo(dataset, &pm, &options.solver)
}

/// Column indices of covariates with positive sample variance, plus warnings for the rest.
pub(crate) fn active_covariates(dataset: &Dataset) -> (Vec<usize>, Vec<String>) {
    let mut active = Vec::new();
    let mut warnings = Vec::new();
    for (k, name) in dataset.covariate_names().iter().enumerate() {
        let first = dataset.subjects()[0].z[k];
        if dataset.subjects().iter().all(|s| s.z[k] == first) {
            warnings.push(format!("covariate {name} has zero variance; its slope is fixed at 0"));
        } else {
            active.push(k);
        }
    }
    (active, warnings)
}

/// Fit from an already computed bivariate (or trivariate) pseudo matrix.
pub fn fit_simple_pseudo(dataset: &Dataset, pm: &PseudoMatrix, solver: &SolverOptions) -> Result<SimpleLehmannFit> {
    dataset.require_min(2)?;
    if dataset.p() == 0 {
        return Err(Error::InvalidModel("the simple model needs at least one covariate".into()));
    }
    let (y, _) = pm
        .joint()
        .ok_or_else(|| Error::InvalidModel("simple model needs joint-survival pseudo-observations".into()))?;
    if y.nrows() != dataset.n() {
        return Err(Error::InvalidModel("pseudo matrix and dataset differ in size".into()));
    }
    let k = pm.k();
    let p = dataset.p();
    let (active, warnings) = active_covariates(dataset);
    let q = k + active.len();
    let subjects = dataset.subjects();
    let problem = GeeProblem::new(&y, q, vec![LinkKind::Cloglog; k], |i, c| {
        let mut row = vec![0.0; q];
        row[c] = 1.0;
        for (a, &col) in active.iter().enumerate() {
            row[k + a] = subjects[i].z[col];
        }
        row
    })?;
    let mut init = DVector::zeros(q);
    for c in 0..k {
        let mean = y.column(c).mean();
        init[c] = LinkKind::Cloglog.eval(LinkKind::Cloglog.clamp_mean(mean))?;
    }
    let res = problem.solve(init, solver)?;
    if !res.converged {
        return Err(Error::NonConvergence {
            stage: "simple model".into(),
            iterations: res.iterations,
            max_abs_score: res.max_abs_score,
            trace: res.trace,
        });
    }
    let cov_active = sandwich(&res.info, &res.per_subject_scores)?;

    // expand back to the full covariate layout; dropped slopes stay at 0
    let full_index = |a: usize| if a < k { a } else { k + active[a - k] };
    let mut covariance = DMatrix::zeros(k + p, k + p);
    for a in 0..q {
        for b in 0..q {
            covariance[(full_index(a), full_index(b))] = cov_active[(a, b)];
        }
    }
    let mut slopes = vec![0.0; p];
    for (a, &col) in active.iter().enumerate() {
        slopes[col] = res.params[k + a];
    }
    Ok(SimpleLehmannFit {
        intercepts: res.params.rows(0, k).iter().copied().collect(),
        slopes,
        covariance,
        grid: pm.grid.clone(),
        covariate_names: dataset.covariate_names().to_vec(),
        solver: SolverSummary::from(&res),
        warnings,
    })
}

/// `exp(-exp(b0j + b'z))`.
pub fn predict_simple(fit: &SimpleLehmannFit, z: &[f64], point_index: usize) -> f64 {
    let eta = fit.intercepts[point_index] + fit.slopes.iter().zip(z).map(|(b, z)| b * z).sum::<f64>();
    LinkKind::Cloglog.inv(eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(intercepts: Vec<f64>, slopes: Vec<f64>) -> SimpleLehmannFit {
        let q = intercepts.len() + slopes.len();
        let k = intercepts.len();
        SimpleLehmannFit {
            intercepts,
            slopes,
            covariance: DMatrix::identity(q, q) * 0.01,
            grid: EvalGrid::new(vec![(1.0, 1.0); k]).unwrap(),
            covariate_names: vec![],
            solver: SolverSummary { iterations: 0, converged: true, max_abs_score: 0.0, trace: vec![] },
            warnings: vec![],
        }
    }

    #[test]
    fn prediction_identities() {
        let f = fit(vec![-0.3, 0.1], vec![0.7, -0.2]);
        assert_eq!(predict_simple(&f, &[0.0, 0.0], 1), (-(0.1f64).exp()).exp());
        let base = predict_simple(&f, &[0.4, 1.0], 0);
        let up = predict_simple(&f, &[1.4, 1.0], 0);
        assert!((up.ln() / base.ln() - 0.7f64.exp()).abs() < 1e-12);
        let flat = fit(vec![-0.3], vec![0.0]);
        assert_eq!(predict_simple(&flat, &[0.0], 0), predict_simple(&flat, &[5.0], 0));
    }

    #[test]
    fn wald_statistics() {
        let f = fit(vec![0.0], vec![0.196]);
        let p = f.p_values();
        assert!((f.wald_z()[1] - 1.96).abs() < 1e-12);
        assert!((p[1] - 0.05).abs() < 1e-3);
    }
}
