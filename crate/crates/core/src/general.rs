//! Generalized Lehmann model fitted in two steps.
//!
//! Step 1 regresses the marginal pseudo-observations on `z` with cloglog links
//! (parameters `xi1 = (alpha0, alpha, beta0, beta)`). Step 2 regresses
//! `Y_ij = theta3_ij / (S1(t1^j|z_i) S2(t2^j|z_i))` with the step-1 plug-ins
//! on `z` through a double-log link chosen from the sign of `log mean(Y_j)`
//! (parameters `xi2 = (gamma0, gamma)`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, BootstrapResult, Resampler};
use crate::data::{Dataset, EvalGrid};
use crate::error::{Error, Result};
use crate::gee::{invert, sandwich, symmetrize, GeeProblem, GeeResult, SolverOptions, SolverSummary};
use crate::link::LinkKind;
use crate::pseudo::{self, JackknifeMethod, PseudoKind, PseudoMatrix};
use crate::simple::active_covariates;

/// `|Ybar - 1|` at or below this is treated as no dependence.
pub const DEGENERATE_YBAR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkPolicy {
    #[default]
    Common,
    PerPoint,
}

/// Which slopes are estimated (`true`) or held at zero, per component.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlopeMasks {
    pub alpha: Option<Vec<bool>>,
    pub beta: Option<Vec<bool>>,
    pub gamma: Option<Vec<bool>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralOptions {
    pub solver: SolverOptions,
    pub jackknife: JackknifeMethod,
    pub link_policy: LinkPolicy,
    pub masks: SlopeMasks,
    /// Bootstrap replicates; `None` skips the bootstrap.
    pub bootstrap: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GeneralizedLehmannFit {
    pub grid: EvalGrid,
    pub covariate_names: Vec<String>,
    pub alpha0: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta0: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub gamma: Vec<f64>,
    pub link3: Vec<LinkKind>,
    pub link_policy: LinkPolicy,
    /// Mean step-2 response per point.
    pub ybar: Vec<f64>,
    /// Sandwich covariance of `xi1 = (alpha0, alpha, beta0, beta)`.
    pub covariance_xi1: DMatrix<f64>,
    /// Two-step covariance of `xi2 = (gamma0, gamma)`.
    pub covariance_xi2_analytic: DMatrix<f64>,
    pub bootstrap: Option<BootstrapResult>,
    pub masks: SlopeMasks,
    pub solver_step1: SolverSummary,
    pub solver_step2: SolverSummary,
    pub warnings: Vec<String>,
}

impl GeneralizedLehmannFit {
    pub fn k(&self) -> usize {
        self.alpha0.len()
    }

    pub fn p(&self) -> usize {
        self.alpha.len()
    }

    pub fn xi1(&self) -> Vec<f64> {
        [&self.alpha0, &self.alpha, &self.beta0, &self.beta].into_iter().flatten().copied().collect()
    }

    pub fn xi2(&self) -> Vec<f64> {
        self.gamma0.iter().chain(&self.gamma).copied().collect()
    }

    /// Bootstrap covariance of `xi2`, when a bootstrap was run.
    pub fn covariance_xi2_bootstrap(&self) -> Option<DMatrix<f64>> {
        let q1 = self.xi1().len();
        let q2 = self.xi2().len();
        self.bootstrap.as_ref().map(|b| b.covariance.view((q1, q1), (q2, q2)).into_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralPrediction {
    pub s1: f64,
    pub s2: f64,
    pub factor: f64,
    pub joint: f64,
    /// Joint survival outside `(0, 1]`: the model may be invalid at this z.
    pub flagged: bool,
}

pub fn predict_general(fit: &GeneralizedLehmannFit, z: &[f64], j: usize) -> GeneralPrediction {
    let lin = |c0: f64, c: &[f64]| c0 + c.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    let s1 = LinkKind::Cloglog.inv(lin(fit.alpha0[j], &fit.alpha));
    let s2 = LinkKind::Cloglog.inv(lin(fit.beta0[j], &fit.beta));
    let factor = fit.link3[j].inv(lin(fit.gamma0[j], &fit.gamma));
    let joint = s1 * s2 * factor;
    GeneralPrediction { s1, s2, factor, joint, flagged: !(joint > 0.0 && joint <= 1.0) }
}

/// Parameter layout with masked and degenerate slopes removed.
#[derive(Debug, Clone)]
struct Layout {
    k: usize,
    p: usize,
    a: Vec<usize>,
    b: Vec<usize>,
    g: Vec<usize>,
}

impl Layout {
    fn new(dataset: &Dataset, k: usize, masks: &SlopeMasks) -> Result<(Self, Vec<String>)> {
        let p = dataset.p();
        let (usable, warnings) = active_covariates(dataset);
        let pick = |m: &Option<Vec<bool>>, name: &str| -> Result<Vec<usize>> {
            match m {
                Some(m) if m.len() != p => {
                    Err(Error::InvalidModel(format!("{name} mask has length {}, expected {p}", m.len())))
                }
                Some(m) => Ok(usable.iter().copied().filter(|&c| m[c]).collect()),
                None => Ok(usable.clone()),
            }
        };
        let layout = Self { k, p, a: pick(&masks.alpha, "alpha")?, b: pick(&masks.beta, "beta")?, g: pick(&masks.gamma, "gamma")? };
        Ok((layout, warnings))
    }

    fn q1(&self) -> usize {
        2 * self.k + self.a.len() + self.b.len()
    }

    fn q2(&self) -> usize {
        self.k + self.g.len()
    }

    fn beta_offset(&self) -> usize {
        self.k + self.a.len()
    }

    /// Step-1 design row for column `c` (margin 1 for `c < K`, margin 2 otherwise).
    fn x1(&self, z: &[f64], c: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.q1()];
        let (off, j, act) = if c < self.k { (0, c, &self.a) } else { (self.beta_offset(), c - self.k, &self.b) };
        row[off + j] = 1.0;
        for (s, &col) in act.iter().enumerate() {
            row[off + self.k + s] = z[col];
        }
        row
    }

    fn x2(&self, z: &[f64], j: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.q2()];
        row[j] = 1.0;
        for (s, &col) in self.g.iter().enumerate() {
            row[self.k + s] = z[col];
        }
        row
    }

    /// Scatter an active `xi1` into `(alpha0, alpha, beta0, beta)` with zeros for inactive slopes.
    fn expand1(&self, v: &DVector<f64>) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let k = self.k;
        let mut alpha = vec![0.0; self.p];
        let mut beta = vec![0.0; self.p];
        for (s, &c) in self.a.iter().enumerate() {
            alpha[c] = v[k + s];
        }
        let o = self.beta_offset();
        for (s, &c) in self.b.iter().enumerate() {
            beta[c] = v[o + k + s];
        }
        (v.rows(0, k).iter().copied().collect(), alpha, v.rows(o, k).iter().copied().collect(), beta)
    }

    fn expand2(&self, v: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
        let mut gamma = vec![0.0; self.p];
        for (s, &c) in self.g.iter().enumerate() {
            gamma[c] = v[self.k + s];
        }
        (v.rows(0, self.k).iter().copied().collect(), gamma)
    }

    /// Full-layout index of each active `xi1` entry.
    fn full_index1(&self) -> Vec<usize> {
        let (k, p) = (self.k, self.p);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.extend(self.a.iter().map(|&c| k + c));
        idx.extend((0..k).map(|j| k + p + j));
        idx.extend(self.b.iter().map(|&c| 2 * k + p + c));
        idx
    }

    fn full_index2(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.k).collect();
        idx.extend(self.g.iter().map(|&c| self.k + c));
        idx
    }

    /// Active vectors from full-layout parameter values.
    fn compress1(&self, full: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.q1(), self.full_index1().into_iter().map(|i| full[i]))
    }

    fn compress2(&self, full: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.q2(), self.full_index2().into_iter().map(|i| full[i]))
    }
}

fn scatter(m: &DMatrix<f64>, idx: &[usize], dim: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, dim);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(i, j)] = m[(a, b)];
        }
    }
    out
}

/// The two estimating equations on a fixed trivariate pseudo matrix, in active-parameter form.
///
/// Exposed so that the analytic Jacobians can be checked against finite differences.
pub struct TwoStep<'a> {
    layout: Layout,
    z: Vec<&'a [f64]>,
    theta: DMatrix<f64>,
    links3: Vec<LinkKind>,
}

impl<'a> TwoStep<'a> {
    pub fn new(dataset: &'a Dataset, pm: &PseudoMatrix, masks: &SlopeMasks, links3: Vec<LinkKind>) -> Result<Self> {
        if pm.kind != PseudoKind::Trivariate {
            return Err(Error::InvalidModel("the generalized model needs trivariate pseudo-observations".into()));
        }
        if pm.n() != dataset.n() {
            return Err(Error::InvalidModel("pseudo matrix and dataset differ in size".into()));
        }
        let (layout, _) = Layout::new(dataset, pm.k(), masks)?;
        if links3.len() != pm.k() {
            return Err(Error::InvalidModel("one step-2 link per grid point is required".into()));
        }
        Ok(Self { layout, z: dataset.subjects().iter().map(|s| s.z.as_slice()).collect(), theta: pm.values.clone(), links3 })
    }

    pub fn q1(&self) -> usize {
        self.layout.q1()
    }

    pub fn q2(&self) -> usize {
        self.layout.q2()
    }

    fn k(&self) -> usize {
        self.layout.k
    }

    pub fn step1_problem(&self) -> Result<GeeProblem> {
        let k = self.k();
        let y = self.theta.columns(0, 2 * k).into_owned();
        GeeProblem::new(&y, self.q1(), vec![LinkKind::Cloglog; 2 * k], |i, c| self.layout.x1(self.z[i], c))
    }

    /// Linear predictors of both margins for subject `i` at point `j`.
    fn etas(&self, xi1: &DVector<f64>, i: usize, j: usize) -> (f64, f64) {
        let dot = |row: Vec<f64>| row.iter().zip(xi1.iter()).map(|(a, b)| a * b).sum::<f64>();
        (dot(self.layout.x1(self.z[i], j)), dot(self.layout.x1(self.z[i], self.k() + j)))
    }

    /// Step-2 responses `Y_ij` given `xi1`.
    pub fn responses(&self, xi1: &DVector<f64>) -> DMatrix<f64> {
        let k = self.k();
        DMatrix::from_fn(self.theta.nrows(), k, |i, j| {
            let (e1, e2) = self.etas(xi1, i, j);
            // theta3 / (S1 S2) with S = exp(-exp(eta))
            self.theta[(i, 2 * k + j)] * (e1.exp() + e2.exp()).exp()
        })
    }

    pub fn step2_problem(&self, xi1: &DVector<f64>) -> Result<GeeProblem> {
        let y = self.responses(xi1);
        GeeProblem::new(&y, self.q2(), self.links3.clone(), |i, j| self.layout.x2(self.z[i], j))
    }

    pub fn step1_score_sum(&self, xi1: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.step1_problem()?.score(xi1))
    }

    pub fn step2_score_sum(&self, xi1: &DVector<f64>, xi2: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.step2_problem(xi1)?.score(xi2))
    }

    /// `A1 = -dU1/dxi1`.
    pub fn a1(&self, xi1: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.step1_problem()?.jacobian(xi1))
    }

    /// `B2 = -dU2/dxi2`.
    pub fn b2(&self, xi1: &DVector<f64>, xi2: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.step2_problem(xi1)?.jacobian(xi2))
    }

    /// `B1 = -dU2/dxi1`; `xi1` enters only through the responses, with `dY/deta_m = Y exp(eta_m)`.
    pub fn b1(&self, xi1: &DVector<f64>, xi2: &DVector<f64>) -> DMatrix<f64> {
        let k = self.k();
        let y = self.responses(xi1);
        let mut out = DMatrix::zeros(self.q2(), self.q1());
        for i in 0..self.theta.nrows() {
            for j in 0..k {
                let x2 = DVector::from_vec(self.layout.x2(self.z[i], j));
                let eta2 = x2.dot(xi2);
                let d = self.links3[j].inv_deriv(eta2);
                let (e1, e2) = self.etas(xi1, i, j);
                let dy = DVector::from_vec(self.layout.x1(self.z[i], j)) * e1.exp()
                    + DVector::from_vec(self.layout.x1(self.z[i], k + j)) * e2.exp();
                out -= (x2 * d) * (dy * y[(i, j)]).transpose();
            }
        }
        out
    }
}

/// Link per point from the mean step-2 responses.
pub fn select_link(ybar: &[f64], policy: LinkPolicy) -> Result<Vec<LinkKind>> {
    for (index, &y) in ybar.iter().enumerate() {
        if !y.is_finite() || (y - 1.0).abs() <= DEGENERATE_YBAR {
            return Err(Error::DegenerateDependence { index, ybar: y });
        }
    }
    let pick = |y: f64| if y > 1.0 { LinkKind::Loglog } else { LinkKind::Cloglog };
    let links: Vec<LinkKind> = ybar.iter().map(|&y| pick(y)).collect();
    if policy == LinkPolicy::Common && links.iter().any(|&l| l != links[0]) {
        return Err(Error::MixedDependence(ybar.to_vec()));
    }
    Ok(links)
}

/// Mean step-2 responses and link assignment for converged step-1 parameters.
pub fn select_link_for(
    dataset: &Dataset,
    pm: &PseudoMatrix,
    xi1_full: &[f64],
    masks: &SlopeMasks,
    policy: LinkPolicy,
) -> Result<(Vec<LinkKind>, Vec<f64>)> {
    let ts = TwoStep::new(dataset, pm, masks, vec![LinkKind::Cloglog; pm.k()])?;
    let ybar = mean_responses(&ts, &ts.layout.compress1(xi1_full));
    Ok((select_link(&ybar, policy)?, ybar))
}

fn mean_responses(ts: &TwoStep, xi1: &DVector<f64>) -> Vec<f64> {
    let y = ts.responses(xi1);
    y.column_iter().map(|c| c.mean()).collect()
}

fn converged(res: GeeResult, stage: &str) -> Result<GeeResult> {
    if res.converged {
        Ok(res)
    } else {
        Err(Error::NonConvergence {
            stage: stage.into(),
            iterations: res.iterations,
            max_abs_score: res.max_abs_score,
            trace: res.trace,
        })
    }
}

fn label(stage: &str, e: Error) -> Error {
    match e {
        Error::Singular(what) => Error::Numerical(format!("{stage}: singular {what}")),
        other => other,
    }
}

pub fn fit_general(dataset: &Dataset, grid: &EvalGrid, options: &GeneralOptions) -> Result<GeneralizedLehmannFit> {
    let pm = pseudo::pseudo(dataset, grid, PseudoKind::Trivariate, options.jackknife)?;
    let mut fit = fit_general_pseudo(dataset, &pm, options, None)?;
    if let Some(b) = options.bootstrap {
        let res = bootstrap_general(dataset, grid, options, &fit.link3, b, &bootstrap::default_resampler(options.seed))?;
        fit.bootstrap = Some(res);
    }
    Ok(fit)
}

/// Both steps on a given trivariate pseudo matrix; `links3` fixes the step-2 links instead of selecting them.
pub fn fit_general_pseudo(
    dataset: &Dataset,
    pm: &PseudoMatrix,
    options: &GeneralOptions,
    links3: Option<&[LinkKind]>,
) -> Result<GeneralizedLehmannFit> {
    dataset.require_min(2)?;
    let k = pm.k();
    let (layout, warnings) = Layout::new(dataset, k, &options.masks)?;
    let mut ts = TwoStep::new(dataset, pm, &options.masks, vec![LinkKind::Cloglog; k])?;

    // step 1
    let p1 = ts.step1_problem()?;
    let mut init1 = DVector::zeros(layout.q1());
    for j in 0..k {
        for (off, col) in [(0, j), (layout.beta_offset(), k + j)] {
            let m = pm.values.column(col).mean();
            init1[off + j] = LinkKind::Cloglog.eval(LinkKind::Cloglog.clamp_mean(m))?;
        }
    }
    let r1 = converged(p1.solve(init1, &options.solver).map_err(|e| label("step 1", e))?, "step 1")?;
    let xi1 = r1.params.clone();

    // link selection and step 2
    let ybar = mean_responses(&ts, &xi1);
    let links = match links3 {
        Some(l) => l.to_vec(),
        None => select_link(&ybar, options.link_policy)?,
    };
    ts.links3 = links.clone();
    let p2 = ts.step2_problem(&xi1)?;
    let mut init2 = DVector::zeros(layout.q2());
    for j in 0..k {
        init2[j] = links[j].eval(links[j].clamp_mean(ybar[j])).unwrap_or(0.0);
    }
    let r2 = converged(p2.solve(init2, &options.solver).map_err(|e| label("step 2", e))?, "step 2")?;
    let xi2 = r2.params.clone();

    let cov1 = sandwich(&r1.info, &r1.per_subject_scores).map_err(|e| label("step 1", e))?;
    let cov2 = twostep_covariance(&ts, &r1, &r2)?;

    let (alpha0, alpha, beta0, beta) = layout.expand1(&xi1);
    let (gamma0, gamma) = layout.expand2(&xi2);
    let q1f = 2 * k + 2 * layout.p;
    let q2f = k + layout.p;
    Ok(GeneralizedLehmannFit {
        grid: pm.grid.clone(),
        covariate_names: dataset.covariate_names().to_vec(),
        alpha0,
        alpha,
        beta0,
        beta,
        gamma0,
        gamma,
        link3: links,
        link_policy: options.link_policy,
        ybar,
        covariance_xi1: scatter(&cov1, &layout.full_index1(), q1f),
        covariance_xi2_analytic: scatter(&cov2, &layout.full_index2(), q2f),
        bootstrap: None,
        masks: options.masks.clone(),
        solver_step1: SolverSummary::from(&r1),
        solver_step2: SolverSummary::from(&r2),
        warnings,
    })
}

/// Pieces of the two-step covariance, in active-parameter form.
#[derive(Debug, Clone)]
pub struct TwoStepVariance {
    pub covariance: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
    pub sigma21: DMatrix<f64>,
}

fn twostep_parts(ts: &TwoStep, xi1: &DVector<f64>, xi2: &DVector<f64>, s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<TwoStepVariance> {
    let a1 = ts.a1(xi1)?;
    let b2 = ts.b2(xi1, xi2)?;
    let b1 = ts.b1(xi1, xi2);
    let sigma1 = s1.transpose() * s1;
    let sigma2 = s2.transpose() * s2;
    let sigma21 = s2.transpose() * s1;
    let a1i = invert(&a1, "A1").map_err(|e| label("two-step variance", e))?;
    let b2i = invert(&b2, "B2").map_err(|e| label("two-step variance", e))?;
    let c = &b1 * &a1i;
    let middle = &sigma2 + &c * &sigma1 * c.transpose() - &sigma21 * c.transpose() - &c * sigma21.transpose();
    let covariance = symmetrize(&(&b2i * middle * b2i.transpose()));
    Ok(TwoStepVariance { covariance, a1, b1, b2, sigma1, sigma2, sigma21 })
}

fn twostep_covariance(ts: &TwoStep, r1: &GeeResult, r2: &GeeResult) -> Result<DMatrix<f64>> {
    Ok(twostep_parts(ts, &r1.params, &r2.params, &r1.per_subject_scores, &r2.per_subject_scores)?.covariance)
}

/// Two-step covariance of `xi2` for a fitted model, with the intermediate matrices (active layout).
pub fn twostep_variance(fit: &GeneralizedLehmannFit, dataset: &Dataset, pm: &PseudoMatrix) -> Result<TwoStepVariance> {
    let ts = TwoStep::new(dataset, pm, &fit.masks, fit.link3.clone())?;
    let xi1 = ts.layout.compress1(&fit.xi1());
    let xi2 = ts.layout.compress2(&fit.xi2());
    let s1 = ts.step1_problem()?.per_subject_scores(&xi1);
    let s2 = ts.step2_problem(&xi1)?.per_subject_scores(&xi2);
    let mut v = twostep_parts(&ts, &xi1, &xi2, &s1, &s2)?;
    v.covariance = scatter(&v.covariance, &ts.layout.full_index2(), fit.k() + fit.p());
    Ok(v)
}

impl GeneralizedLehmannFit {
    /// Active-layout parameter vectors, for use with [`TwoStep`].
    pub fn active_params(&self, dataset: &Dataset) -> Result<(DVector<f64>, DVector<f64>)> {
        let (layout, _) = Layout::new(dataset, self.k(), &self.masks)?;
        Ok((layout.compress1(&self.xi1()), layout.compress2(&self.xi2())))
    }
}

/// Nonparametric bootstrap of both steps with the step-2 links held fixed.
pub fn bootstrap_general(
    dataset: &Dataset,
    grid: &EvalGrid,
    options: &GeneralOptions,
    links3: &[LinkKind],
    replicates: usize,
    resampler: &Resampler,
) -> Result<BootstrapResult> {
    bootstrap::run(dataset, replicates, resampler, |d| {
        let pm = pseudo::pseudo(d, grid, PseudoKind::Trivariate, options.jackknife)?;
        let fit = fit_general_pseudo(d, &pm, options, Some(links3))?;
        Ok(fit.xi1().into_iter().chain(fit.xi2()).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_rule_is_the_threshold_at_one() {
        assert_eq!(select_link(&[1.3], LinkPolicy::Common).unwrap(), vec![LinkKind::Loglog]);
        assert_eq!(select_link(&[0.8], LinkPolicy::Common).unwrap(), vec![LinkKind::Cloglog]);
        assert!(matches!(select_link(&[1.0 + 1e-9], LinkPolicy::Common), Err(Error::DegenerateDependence { index: 0, .. })));
        assert!(matches!(select_link(&[1.2, 0.9], LinkPolicy::Common), Err(Error::MixedDependence(_))));
        assert_eq!(
            select_link(&[1.2, 0.9], LinkPolicy::PerPoint).unwrap(),
            vec![LinkKind::Loglog, LinkKind::Cloglog]
        );
    }

    fn fixture() -> GeneralizedLehmannFit {
        GeneralizedLehmannFit {
            grid: EvalGrid::new(vec![(1.0, 1.0)]).unwrap(),
            covariate_names: vec!["z".into()],
            alpha0: vec![-0.2],
            alpha: vec![0.5],
            beta0: vec![0.1],
            beta: vec![-0.3],
            gamma0: vec![-1.5],
            gamma: vec![0.2],
            link3: vec![LinkKind::Cloglog],
            link_policy: LinkPolicy::Common,
            ybar: vec![0.8],
            covariance_xi1: DMatrix::zeros(4, 4),
            covariance_xi2_analytic: DMatrix::zeros(2, 2),
            bootstrap: None,
            masks: SlopeMasks::default(),
            solver_step1: SolverSummary { iterations: 0, converged: true, max_abs_score: 0.0, trace: vec![] },
            solver_step2: SolverSummary { iterations: 0, converged: true, max_abs_score: 0.0, trace: vec![] },
            warnings: vec![],
        }
    }

    #[test]
    fn unit_increase_identity() {
        let f = fixture();
        let (a, b, g) = (0.5f64.exp(), (-0.3f64).exp(), 0.2f64.exp());
        let p0 = predict_general(&f, &[0.7], 0);
        let p1 = predict_general(&f, &[1.7], 0);
        let rhs = p0.s1.powf(a - g) * p0.s2.powf(b - g) * p0.joint.powf(g);
        assert!((p1.joint - rhs).abs() < 1e-12);
    }

    #[test]
    fn zero_covariate_and_independence_factor() {
        let mut f = fixture();
        let p = predict_general(&f, &[0.0], 0);
        assert_eq!(p.s1, (-(-0.2f64).exp()).exp());
        assert_eq!(p.factor, LinkKind::Cloglog.inv(-1.5));
        f.gamma = vec![0.0];
        f.gamma0 = vec![-800.0];
        let p = predict_general(&f, &[1.0], 0);
        assert!(p.factor == 1.0 && (p.joint - p.s1 * p.s2).abs() < 1e-15);
    }
}
