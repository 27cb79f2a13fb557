//! Generalized estimating equations with identity working covariance.
//!
//! Each subject contributes `m` responses; response `c` of subject `i` has mean
//! `h_c(x_ic' b)` with `h_c` the inverse of the column's link. The estimating
//! function is `U(b) = sum_i sum_c x_ic h_c'(eta_ic) (y_ic - mu_ic)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::LinkKind;
use crate::par;

const CHUNK: usize = 64;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkingCovariance {
    #[default]
    Identity,
}

/// Responses, stacked design rows and per-column links.
#[derive(Debug, Clone)]
pub struct GeeProblem {
    n: usize,
    m: usize,
    q: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    links: Vec<LinkKind>,
    pub working_cov: WorkingCovariance,
}

#[derive(Debug, Clone)]
pub struct GeeResult {
    pub params: DVector<f64>,
    /// n x q, row i is `U_i` at the solution.
    pub per_subject_scores: DMatrix<f64>,
    /// `sum_i D_i' D_i` at the solution.
    pub info: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_abs_score: f64,
    /// `max |U|` at each iterate, starting value first.
    pub trace: Vec<f64>,
}

/// Compact solver report for fit outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub converged: bool,
    pub max_abs_score: f64,
    pub trace: Vec<f64>,
}

impl From<&GeeResult> for SolverSummary {
    fn from(r: &GeeResult) -> Self {
        Self {
            iterations: r.iterations,
            converged: r.converged,
            max_abs_score: r.max_abs_score,
            trace: r.trace.clone(),
        }
    }
}

struct Accum {
    u: DVector<f64>,
    info: DMatrix<f64>,
    jac: DMatrix<f64>,
}

impl GeeProblem {
    /// `y` is n x m; `design(i, c)` returns the length-q row for response `c` of subject `i`.
    pub fn new(
        y: &DMatrix<f64>,
        q: usize,
        links: Vec<LinkKind>,
        design: impl Fn(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let (n, m) = y.shape();
        if links.len() != m {
            return Err(Error::InvalidModel(format!("{} links for {m} response columns", links.len())));
        }
        let mut x = Vec::with_capacity(n * m * q);
        let mut yy = Vec::with_capacity(n * m);
        for i in 0..n {
            for c in 0..m {
                let row = design(i, c);
                if row.len() != q {
                    return Err(Error::InvalidModel(format!("design row has length {}, expected {q}", row.len())));
                }
                x.extend(row);
                yy.push(y[(i, c)]);
            }
        }
        Ok(Self { n, m, q, y: yy, x, links, working_cov: WorkingCovariance::Identity })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    fn row(&self, i: usize, c: usize) -> &[f64] {
        let k = (i * self.m + c) * self.q;
        &self.x[k..k + self.q]
    }

    fn eta(&self, row: &[f64], b: &DVector<f64>) -> f64 {
        row.iter().zip(b.iter()).map(|(x, b)| x * b).sum()
    }

    /// Score contribution of subject `i`.
    pub fn subject_score(&self, i: usize, b: &DVector<f64>) -> DVector<f64> {
        let mut u = DVector::zeros(self.q);
        for c in 0..self.m {
            let row = self.row(i, c);
            let eta = self.eta(row, b);
            let link = self.links[c];
            let w = link.inv_deriv(eta) * (self.y[i * self.m + c] - link.inv(eta));
            for (k, x) in row.iter().enumerate() {
                u[k] += x * w;
            }
        }
        u
    }

    fn accumulate(&self, b: &DVector<f64>, with_matrices: bool) -> Accum {
        let q = self.q;
        let zero = || Accum {
            u: DVector::zeros(q),
            info: DMatrix::zeros(if with_matrices { q } else { 0 }, if with_matrices { q } else { 0 }),
            jac: DMatrix::zeros(if with_matrices { q } else { 0 }, if with_matrices { q } else { 0 }),
        };
        par::chunked_reduce(
            self.n,
            CHUNK,
            |range| {
                let mut acc = zero();
                for i in range {
                    for c in 0..self.m {
                        let row = self.row(i, c);
                        let eta = self.eta(row, b);
                        let link = self.links[c];
                        let (mu, d1) = (link.inv(eta), link.inv_deriv(eta));
                        let resid = self.y[i * self.m + c] - mu;
                        let w = d1 * resid;
                        for (k, x) in row.iter().enumerate() {
                            acc.u[k] += x * w;
                        }
                        if with_matrices {
                            let wi = d1 * d1;
                            let wj = wi - link.inv_second_deriv(eta) * resid;
                            for k in 0..q {
                                if row[k] == 0.0 {
                                    continue;
                                }
                                for l in 0..q {
                                    acc.info[(k, l)] += row[k] * row[l] * wi;
                                    acc.jac[(k, l)] += row[k] * row[l] * wj;
                                }
                            }
                        }
                    }
                }
                acc
            },
            |mut a, b| {
                a.u += b.u;
                a.info += b.info;
                a.jac += b.jac;
                a
            },
            zero(),
        )
    }

    /// Summed estimating function `U(b)`.
    pub fn score(&self, b: &DVector<f64>) -> DVector<f64> {
        self.accumulate(b, false).u
    }

    /// Expected information `sum_i D_i' D_i`.
    pub fn info(&self, b: &DVector<f64>) -> DMatrix<f64> {
        self.accumulate(b, true).info
    }

    /// Negative Jacobian `-dU/db`, including the residual curvature term.
    pub fn jacobian(&self, b: &DVector<f64>) -> DMatrix<f64> {
        self.accumulate(b, true).jac
    }

    pub fn per_subject_scores(&self, b: &DVector<f64>) -> DMatrix<f64> {
        let rows = par::map_indexed(self.n, |i| self.subject_score(i, b));
        DMatrix::from_fn(self.n, self.q, |i, k| rows[i][k])
    }

    fn line_search(&self, b: &DVector<f64>, step: &DVector<f64>, norm: f64) -> Option<DVector<f64>> {
        let mut t = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let cand = b + step * t;
            let u = self.score(&cand);
            if u.iter().all(|v| v.is_finite()) && u.norm() < norm {
                return Some(cand);
            }
            t *= 0.5;
        }
        None
    }

    /// Fisher scoring with step halving on the Euclidean score norm.
    pub fn solve(&self, init: DVector<f64>, options: &SolverOptions) -> Result<GeeResult> {
        if init.len() != self.q {
            return Err(Error::InvalidModel(format!("initial vector has length {}, expected {}", init.len(), self.q)));
        }
        let mut b = init;
        let mut acc = self.accumulate(&b, true);
        let mut trace = vec![max_abs(&acc.u)];
        let mut iterations = 0;
        let mut converged = trace[0] <= options.tol;
        while !converged && iterations < options.max_iter {
            if !acc.u.iter().all(|v| v.is_finite()) {
                break;
            }
            let step = solve_spd(&acc.info, &acc.u)?;
            let norm = acc.u.norm();
            let mut accepted = self.line_search(&b, &step, norm);
            if accepted.is_none() {
                // Fisher steps need not descend for non-canonical links; Newton steps always do.
                if let Some(newton) = acc.jac.clone().lu().solve(&acc.u) {
                    accepted = self.line_search(&b, &newton, norm);
                }
            }
            iterations += 1;
            let Some(next) = accepted else { break };
            b = next;
            acc = self.accumulate(&b, true);
            let m = max_abs(&acc.u);
            trace.push(m);
            converged = m <= options.tol;
        }
        let per_subject_scores = self.per_subject_scores(&b);
        Ok(GeeResult {
            params: b,
            per_subject_scores,
            info: acc.info,
            iterations,
            converged,
            max_abs_score: *trace.last().unwrap_or(&f64::NAN),
            trace,
        })
    }
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let ch = a.clone().cholesky().ok_or(Error::Singular("information matrix"))?;
    let d = ch.l_dirty().diagonal();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > hi * 1e-10) {
        return Err(Error::Singular("information matrix"));
    }
    Ok(ch.solve(b))
}

/// Inverse of a square matrix, or a singularity error naming it.
pub fn invert(a: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let inv = a.clone().try_inverse().ok_or(Error::Singular(what))?;
    if inv.iter().all(|v| v.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::Singular(what))
    }
}

/// Robust covariance `I^-1 (sum_i U_i U_i') I^-1`, symmetrised.
pub fn sandwich(info: &DMatrix<f64>, scores: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = invert(info, "information matrix")?;
    let meat = scores.transpose() * scores;
    Ok(symmetrize(&(&inv * meat * inv.transpose())))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}
