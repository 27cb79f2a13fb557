//! Jackknife pseudo-observations for the two Kaplan–Meier margins and the
//! Dabrowska joint survival probability at each evaluation point.
//!
//! Every functional is computed from one shared set of `n + 1` estimator
//! evaluations (full sample plus each leave-one-out sample). Two routes are
//! available:
//!
//! * [`JackknifeMethod::Recompute`] rebuilds the risk-set counts without
//!   subject `i` and re-multiplies the product integral, `O(n)` work per cell
//!   region per subject.
//! * [`JackknifeMethod::Downdate`] exploits that deleting subject `i` changes
//!   only the cells inside its own risk rectangle, and there in a way that
//!   depends on the cell counts alone (risk set minus one) except along the
//!   row and column of its own failures. Prefix sums of log cell factors then
//!   give each leave-one-out product in `O(1)` per point.
//!
//! Both produce the same numbers up to floating-point round-off.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EvalGrid};
use crate::error::{Error, Result};
use crate::estimator::{axis_indices, cell_factor, km_factor, AxisIndex, CellCounts};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoKind {
    Marginal1,
    Marginal2,
    Bivariate,
    Trivariate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JackknifeMethod {
    #[default]
    Downdate,
    Recompute,
}

/// Pseudo-observations, one row per subject.
///
/// For [`PseudoKind::Trivariate`] the columns are `[margin 1 | margin 2 | joint]`,
/// each block holding the K grid points in order.
#[derive(Debug, Clone)]
pub struct PseudoMatrix {
    pub values: DMatrix<f64>,
    pub grid: EvalGrid,
    pub kind: PseudoKind,
    /// Full-sample estimate behind each column.
    pub full: Vec<f64>,
}

impl PseudoMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.grid.len()
    }

    /// Column block `b` (0 = margin 1, 1 = margin 2, 2 = joint) of a trivariate matrix,
    /// or the only block otherwise.
    pub fn block(&self, b: usize) -> DMatrix<f64> {
        let k = self.k();
        match self.kind {
            PseudoKind::Trivariate => self.values.columns(b * k, k).into_owned(),
            _ => self.values.clone(),
        }
    }

    pub fn block_full(&self, b: usize) -> &[f64] {
        let k = self.k();
        match self.kind {
            PseudoKind::Trivariate => &self.full[b * k..(b + 1) * k],
            _ => &self.full,
        }
    }

    /// Joint-survival block (trivariate or bivariate only).
    pub fn joint(&self) -> Option<(DMatrix<f64>, &[f64])> {
        match self.kind {
            PseudoKind::Trivariate => Some((self.block(2), self.block_full(2))),
            PseudoKind::Bivariate => Some((self.values.clone(), &self.full)),
            _ => None,
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.values.column_iter().map(|c| c.sum() / n).collect()
    }
}

/// Full-sample and leave-one-out values of `(KM1, KM2, S)` at every grid point.
#[derive(Debug, Clone)]
pub struct JackknifeEvaluations {
    /// Length 3K: `[KM1(t1^j) | KM2(t2^j) | S(t1^j, t2^j)]`.
    pub full: Vec<f64>,
    /// n x 3K, same column layout, row i with subject i removed.
    pub loo: DMatrix<f64>,
}

pub fn pseudo_bivariate(dataset: &Dataset, grid: &EvalGrid) -> Result<PseudoMatrix> {
    pseudo(dataset, grid, PseudoKind::Bivariate, JackknifeMethod::default())
}

pub fn pseudo_marginal(dataset: &Dataset, grid: &EvalGrid, axis: u8) -> Result<PseudoMatrix> {
    let kind = match axis {
        1 => PseudoKind::Marginal1,
        2 => PseudoKind::Marginal2,
        _ => return Err(Error::Data(format!("axis must be 1 or 2, got {axis}"))),
    };
    pseudo(dataset, grid, kind, JackknifeMethod::default())
}

pub fn pseudo_trivariate(dataset: &Dataset, grid: &EvalGrid) -> Result<PseudoMatrix> {
    pseudo(dataset, grid, PseudoKind::Trivariate, JackknifeMethod::default())
}

pub fn pseudo(
    dataset: &Dataset,
    grid: &EvalGrid,
    kind: PseudoKind,
    method: JackknifeMethod,
) -> Result<PseudoMatrix> {
    let ev = jackknife(dataset, grid, method)?;
    Ok(assemble(&ev, grid, kind, dataset.n()))
}

/// Combine jackknife evaluations into pseudo-observations `n θ - (n-1) θ^{-i}`.
pub fn assemble(ev: &JackknifeEvaluations, grid: &EvalGrid, kind: PseudoKind, n: usize) -> PseudoMatrix {
    let k = grid.len();
    let cols: Vec<usize> = match kind {
        PseudoKind::Marginal1 => (0..k).collect(),
        PseudoKind::Marginal2 => (k..2 * k).collect(),
        PseudoKind::Bivariate => (2 * k..3 * k).collect(),
        PseudoKind::Trivariate => (0..3 * k).collect(),
    };
    let nf = n as f64;
    let values = DMatrix::from_fn(n, cols.len(), |i, c| {
        let col = cols[c];
        nf * ev.full[col] - (nf - 1.0) * ev.loo[(i, col)]
    });
    PseudoMatrix {
        values,
        grid: grid.clone(),
        kind,
        full: cols.iter().map(|&c| ev.full[c]).collect(),
    }
}

/// The `n + 1` estimator evaluations shared by all pseudo-observation kinds.
pub fn jackknife(dataset: &Dataset, grid: &EvalGrid, method: JackknifeMethod) -> Result<JackknifeEvaluations> {
    dataset.require_min(2)?;
    let (a1, a2) = axis_indices(dataset);
    let pos: Vec<(usize, usize)> = grid
        .points()
        .iter()
        .map(|&(t1, t2)| (a1.position(t1), a2.position(t2)))
        .collect();
    let rows = pos.iter().map(|p| p.0).max().unwrap_or(0);
    let cols = pos.iter().map(|p| p.1).max().unwrap_or(0);
    let ev = match method {
        JackknifeMethod::Downdate => Downdate::new(&a1, &a2, rows, cols).evaluate(&a1, &a2, &pos),
        JackknifeMethod::Recompute => recompute(&a1, &a2, rows, cols, &pos),
    };
    let k = pos.len();
    for (index, &(t1, t2)) in grid.points().iter().enumerate() {
        if ev.full[2 * k + index] <= 0.0 {
            return Err(Error::PointOutsideSupport { index, t1, t2 });
        }
    }
    Ok(ev)
}

/// Product of `(KM1, KM2, S)` over the region below each point, from explicit counts.
fn direct_values(counts: &CellCounts, pos: &[(usize, usize)]) -> Vec<f64> {
    let k = pos.len();
    let mut out = vec![0.0; 3 * k];
    let mut km1 = vec![1.0; counts.rows + 1];
    for r in 1..=counts.rows {
        let i = counts.idx(r, 0);
        km1[r] = km1[r - 1] * km_factor(counts.risk[i], counts.n10[i]);
    }
    let mut km2 = vec![1.0; counts.cols + 1];
    for c in 1..=counts.cols {
        let i = counts.idx(0, c);
        km2[c] = km2[c - 1] * km_factor(counts.risk[i], counts.n01[i]);
    }
    for (j, &(rj, cj)) in pos.iter().enumerate() {
        let mut prod = 1.0;
        for r in 1..=rj {
            for c in 1..=cj {
                prod *= counts.factor(r, c);
            }
        }
        out[j] = km1[rj];
        out[k + j] = km2[cj];
        out[2 * k + j] = km1[rj] * km2[cj] * prod;
    }
    out
}

fn recompute(a1: &AxisIndex, a2: &AxisIndex, rows: usize, cols: usize, pos: &[(usize, usize)]) -> JackknifeEvaluations {
    let n = a1.at.len();
    let full = direct_values(&CellCounts::build(a1, a2, rows, cols, |_| true), pos);
    let loo_rows = par::map_indexed(n, |i| direct_values(&CellCounts::build(a1, a2, rows, cols, |m| m != i), pos));
    let loo = DMatrix::from_fn(n, 3 * pos.len(), |i, c| loo_rows[i][c]);
    JackknifeEvaluations { full, loo }
}

/// A factor carried in log space with exact zero bookkeeping.
#[derive(Debug, Clone, Copy, Default)]
struct LogFactor {
    zeros: i32,
    log: f64,
}

impl LogFactor {
    #[inline]
    fn of(x: f64) -> Self {
        if x == 0.0 {
            Self { zeros: 1, log: 0.0 }
        } else {
            Self { zeros: 0, log: x.ln() }
        }
    }

    #[inline]
    fn value(self) -> f64 {
        if self.zeros > 0 {
            0.0
        } else {
            self.log.exp()
        }
    }
}

impl std::ops::Add for LogFactor {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self { zeros: self.zeros + o.zeros, log: self.log + o.log }
    }
}

impl std::ops::Sub for LogFactor {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self { zeros: self.zeros - o.zeros, log: self.log - o.log }
    }
}

/// Per-cell factor variants when one subject at risk in the cell is removed.
///
/// `plain`: the subject fails in neither the cell's row nor column.
/// `row`/`col`/`both`: it fails in the row, the column, or at the cell itself.
/// Variants that no subject can realise are set equal to `plain` (they cancel).
#[inline]
fn removal_variants(risk: u32, n10: u32, n01: u32, n11: u32) -> (f64, f64, f64, f64) {
    let bystanders = risk + n11 - n10 - n01;
    let plain = if bystanders == 0 { 1.0 } else { cell_factor(risk - 1, n10, n01, n11) };
    let row = if n10 > 0 { cell_factor(risk - 1, n10 - 1, n01, n11) } else { plain };
    let col = if n01 > 0 { cell_factor(risk - 1, n10, n01 - 1, n11) } else { plain };
    let both = if n11 > 0 { cell_factor(risk - 1, n10 - 1, n01 - 1, n11 - 1) } else { plain };
    (plain, row, col, both)
}

struct Downdate {
    w: usize,
    counts: CellCounts,
    /// 2D prefix of the full-sample factors.
    full: Vec<LogFactor>,
    /// 2D prefix of (plain removal - full).
    plain: Vec<LogFactor>,
    /// Row-wise prefix of (row removal - plain).
    row: Vec<LogFactor>,
    /// Column-wise prefix of (column removal - plain).
    col: Vec<LogFactor>,
    km1_full: Vec<LogFactor>,
    km1_plain: Vec<LogFactor>,
    km2_full: Vec<LogFactor>,
    km2_plain: Vec<LogFactor>,
}

impl Downdate {
    fn new(a1: &AxisIndex, a2: &AxisIndex, rows: usize, cols: usize) -> Self {
        let counts = CellCounts::build(a1, a2, rows, cols, |_| true);
        let w = cols + 1;
        let len = (rows + 1) * w;
        let mut full = vec![LogFactor::default(); len];
        let mut plain = vec![LogFactor::default(); len];
        let mut row = vec![LogFactor::default(); len];
        let mut col = vec![LogFactor::default(); len];

        // cell terms, one lattice row per task
        let mut cells: Vec<Vec<[LogFactor; 4]>> = vec![Vec::new(); rows + 1];
        par::fill_indexed(&mut cells, |r, out| {
            if r == 0 {
                return;
            }
            *out = (0..=cols)
                .map(|c| {
                    if c == 0 {
                        return [LogFactor::default(); 4];
                    }
                    let k = r * w + c;
                    let (rk, a, b, d) = (counts.risk[k], counts.n10[k], counts.n01[k], counts.n11[k]);
                    let f = LogFactor::of(cell_factor(rk, a, b, d));
                    if rk == 0 {
                        return [f, LogFactor::default(), LogFactor::default(), LogFactor::default()];
                    }
                    let (p, ro, co, _) = removal_variants(rk, a, b, d);
                    let p = LogFactor::of(p);
                    [f, p - f, LogFactor::of(ro) - p, LogFactor::of(co) - p]
                })
                .collect();
        });
        for r in 1..=rows {
            for c in 1..=cols {
                let k = r * w + c;
                let [f, d, ro, co] = cells[r][c];
                full[k] = f + full[k - 1] + full[k - w] - full[k - w - 1];
                plain[k] = d + plain[k - 1] + plain[k - w] - plain[k - w - 1];
                row[k] = ro + row[k - 1];
                col[k] = co + col[k - w];
            }
        }

        let margin = |cells: Vec<(u32, u32)>| {
            let mut f = vec![LogFactor::default(); cells.len() + 1];
            let mut p = vec![LogFactor::default(); cells.len() + 1];
            for (r, &(risk, deaths)) in cells.iter().enumerate() {
                let lf = LogFactor::of(km_factor(risk, deaths));
                let lp = if risk == 0 || risk == deaths {
                    lf
                } else {
                    LogFactor::of(km_factor(risk - 1, deaths))
                };
                f[r + 1] = f[r] + lf;
                p[r + 1] = p[r] + (lp - lf);
            }
            (f, p)
        };
        let (km1_full, km1_plain) =
            margin((1..=rows).map(|r| (counts.risk[r * w], counts.n10[r * w])).collect());
        let (km2_full, km2_plain) = margin((1..=cols).map(|c| (counts.risk[c], counts.n01[c])).collect());
        Self { w, counts, full, plain, row, col, km1_full, km1_plain, km2_full, km2_plain }
    }

    /// Removal factor for the margin when the removed subject fails at this grid time.
    fn km_fail_term(&self, risk: u32, deaths: u32) -> LogFactor {
        let lf = LogFactor::of(km_factor(risk, deaths));
        let lp = if risk == deaths { lf } else { LogFactor::of(km_factor(risk - 1, deaths)) };
        LogFactor::of(km_factor(risk - 1, deaths - 1)) - lp
    }

    fn evaluate(&self, a1: &AxisIndex, a2: &AxisIndex, pos: &[(usize, usize)]) -> JackknifeEvaluations {
        let n = a1.at.len();
        let k = pos.len();
        let w = self.w;
        let full: Vec<f64> = pos
            .iter()
            .map(|&(rj, _)| self.km1_full[rj].value())
            .chain(pos.iter().map(|&(_, cj)| self.km2_full[cj].value()))
            .chain(pos.iter().map(|&(rj, cj)| {
                (self.km1_full[rj] + self.km2_full[cj] + self.full[rj * w + cj]).value()
            }))
            .collect();

        let rows = par::map_indexed(n, |i| {
            let (ia, ib) = (a1.at[i], a2.at[i]);
            let (fr, fc) = (a1.fail[i], a2.fail[i]);
            let mut out = vec![0.0; 3 * k];
            for (j, &(rj, cj)) in pos.iter().enumerate() {
                let (a, b) = (ia.min(rj), ib.min(cj));
                let row_in = fr > 0 && fr <= rj;
                let col_in = fc > 0 && fc <= cj;

                let mut m1 = self.km1_full[rj] + self.km1_plain[a];
                if row_in {
                    let c0 = self.counts.idx(fr, 0);
                    m1 = m1 + self.km_fail_term(self.counts.risk[c0], self.counts.n10[c0]);
                }
                let mut m2 = self.km2_full[cj] + self.km2_plain[b];
                if col_in {
                    let c0 = self.counts.idx(0, fc);
                    m2 = m2 + self.km_fail_term(self.counts.risk[c0], self.counts.n01[c0]);
                }

                let mut joint = self.full[rj * w + cj] + self.plain[a * w + b];
                if row_in {
                    joint = joint + self.row[fr * w + b];
                }
                if col_in {
                    joint = joint + self.col[a * w + fc];
                }
                if row_in && col_in {
                    let c = fr * w + fc;
                    let (rk, n10, n01, n11) = (self.counts.risk[c], self.counts.n10[c], self.counts.n01[c], self.counts.n11[c]);
                    let (p, ro, co, bo) = removal_variants(rk, n10, n01, n11);
                    let p = LogFactor::of(p);
                    // replace the row and column corrections at the failure cell
                    joint = joint - (LogFactor::of(ro) - p) - (LogFactor::of(co) - p) + (LogFactor::of(bo) - p);
                }
                out[j] = m1.value();
                out[k + j] = m2.value();
                out[2 * k + j] = (m1 + m2 + joint).value();
            }
            out
        });
        let loo = DMatrix::from_fn(n, 3 * k, |i, c| rows[i][c]);
        JackknifeEvaluations { full, loo }
    }
}
