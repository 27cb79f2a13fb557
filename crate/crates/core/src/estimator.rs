//! Nonparametric estimators: Kaplan–Meier margins, the three hazard-increment
//! fields, and the Dabrowska product-integral surface.
//!
//! All grids are the sorted unique failure times of each axis. Matrices are
//! laid out with an extra leading row/column standing for time 0, so cell
//! `(r, c)` with `r, c >= 1` refers to `(u_grid[r-1], v_grid[c-1])`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Right-continuous survival step function with `value(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub jump_times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&u| u <= t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }
}

/// Product-limit estimate. Failures precede censorings at tied times.
pub fn km_fit(times: &[f64], events: &[bool]) -> Result<StepFunction> {
    if times.is_empty() {
        return Err(Error::Data("Kaplan–Meier needs at least one observation".into()));
    }
    if times.len() != events.len() {
        return Err(Error::Data("times and events differ in length".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Data("times must be finite and nonnegative".into()));
    }
    let axis = AxisIndex::new(times, events);
    let m = axis.grid.len();
    let mut at_risk = vec![0u32; m + 2];
    let mut deaths = vec![0u32; m + 1];
    for (k, &a) in axis.at.iter().enumerate() {
        at_risk[a] += 1;
        if events[k] {
            deaths[a] += 1;
        }
    }
    for r in (0..=m).rev() {
        at_risk[r] += at_risk[r + 1];
    }
    let mut s = 1.0;
    let mut values = Vec::with_capacity(m);
    for r in 1..=m {
        s *= km_factor(at_risk[r], deaths[r]);
        values.push(s);
    }
    Ok(StepFunction { jump_times: axis.grid, values })
}

#[inline]
pub(crate) fn km_factor(at_risk: u32, deaths: u32) -> f64 {
    if at_risk == 0 {
        1.0
    } else {
        1.0 - f64::from(deaths) / f64::from(at_risk)
    }
}

/// One cell of the Dabrowska product: `1 - L(du,dv)` written in counts.
///
/// With `L10 = a/R`, `L01 = b/R`, `L11 = c/R`, the factor
/// `1 - (L10 L01 - L11) / ((1 - L10)(1 - L01))` equals
/// `R (R - a - b + c) / ((R - a)(R - b))`. Empty risk sets and exhausted
/// margins contribute 1.
#[inline]
pub(crate) fn cell_factor(risk: u32, n10: u32, n01: u32, n11: u32) -> f64 {
    if risk == 0 {
        return 1.0;
    }
    let r = f64::from(risk);
    let den = (r - f64::from(n10)) * (r - f64::from(n01));
    if den == 0.0 {
        return 1.0;
    }
    r * (r - f64::from(n10) - f64::from(n01) + f64::from(n11)) / den
}

/// Failure-time grid of one axis plus each subject's grid position.
#[derive(Debug, Clone)]
pub(crate) struct AxisIndex {
    pub grid: Vec<f64>,
    /// Number of grid times `<= y` for each subject.
    pub at: Vec<usize>,
    /// Grid row of the subject's failure (1-based), 0 when censored.
    pub fail: Vec<usize>,
}

impl AxisIndex {
    pub fn new(times: &[f64], events: &[bool]) -> Self {
        let mut grid: Vec<f64> = times
            .iter()
            .zip(events)
            .filter(|(_, &e)| e)
            .map(|(&t, _)| t)
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let at: Vec<usize> = times.iter().map(|&t| grid.partition_point(|&u| u <= t)).collect();
        let fail = at.iter().zip(events).map(|(&a, &e)| if e { a } else { 0 }).collect();
        Self { grid, at, fail }
    }

    pub fn position(&self, t: f64) -> usize {
        self.grid.partition_point(|&u| u <= t)
    }
}

pub(crate) fn axis_indices(dataset: &Dataset) -> (AxisIndex, AxisIndex) {
    let s = dataset.subjects();
    let y1: Vec<f64> = s.iter().map(|x| x.y1).collect();
    let d1: Vec<bool> = s.iter().map(|x| x.delta1).collect();
    let y2: Vec<f64> = s.iter().map(|x| x.y2).collect();
    let d2: Vec<bool> = s.iter().map(|x| x.delta2).collect();
    (AxisIndex::new(&y1, &d1), AxisIndex::new(&y2, &d2))
}

/// Risk-set and failure counts on the `(rows+1) x (cols+1)` cell lattice.
#[derive(Debug, Clone)]
pub(crate) struct CellCounts {
    pub rows: usize,
    pub cols: usize,
    pub risk: Vec<u32>,
    pub n10: Vec<u32>,
    pub n01: Vec<u32>,
    pub n11: Vec<u32>,
}

impl CellCounts {
    /// Counts over the subjects accepted by `include`, truncated to the
    /// first `rows` x `cols` grid cells.
    pub fn build(
        a1: &AxisIndex,
        a2: &AxisIndex,
        rows: usize,
        cols: usize,
        include: impl Fn(usize) -> bool,
    ) -> Self {
        let w = cols + 1;
        let len = (rows + 1) * w;
        let mut risk = vec![0u32; len];
        let mut n10 = vec![0u32; len];
        let mut n01 = vec![0u32; len];
        let mut n11 = vec![0u32; len];
        for i in 0..a1.at.len() {
            if !include(i) {
                continue;
            }
            let (ia, ib) = (a1.at[i].min(rows), a2.at[i].min(cols));
            risk[ia * w + ib] += 1;
            let (fr, fc) = (a1.fail[i], a2.fail[i]);
            if fr > 0 && fr <= rows {
                n10[fr * w + ib] += 1;
            }
            if fc > 0 && fc <= cols {
                n01[ia * w + fc] += 1;
            }
            if fr > 0 && fr <= rows && fc > 0 && fc <= cols {
                n11[fr * w + fc] += 1;
            }
        }
        // risk: suffix sums over both directions; n10 along columns; n01 along rows
        for r in (0..=rows).rev() {
            for c in (0..cols).rev() {
                risk[r * w + c] += risk[r * w + c + 1];
                n10[r * w + c] += n10[r * w + c + 1];
            }
        }
        for r in (0..rows).rev() {
            for c in 0..=cols {
                risk[r * w + c] += risk[(r + 1) * w + c];
                n01[r * w + c] += n01[(r + 1) * w + c];
            }
        }
        Self { rows, cols, risk, n10, n01, n11 }
    }

    #[inline]
    pub fn idx(&self, r: usize, c: usize) -> usize {
        r * (self.cols + 1) + c
    }

    #[inline]
    pub fn factor(&self, r: usize, c: usize) -> f64 {
        let k = self.idx(r, c);
        cell_factor(self.risk[k], self.n10[k], self.n01[k], self.n11[k])
    }
}

/// Empirical single- and double-failure hazard increments.
#[derive(Debug, Clone)]
pub struct HazardField {
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    /// `L10(du, v-)`; rows `1..`, columns `0..` (column 0 is `v = 0`).
    pub l10: DMatrix<f64>,
    /// `L01(u-, dv)`; rows `0..`, columns `1..`.
    pub l01: DMatrix<f64>,
    /// `L11(du, dv)`; rows and columns `1..`.
    pub l11: DMatrix<f64>,
    /// `#{i: Y1i >= u, Y2i >= v}`.
    pub risk: DMatrix<u32>,
}

pub fn hazard_increments(dataset: &Dataset) -> HazardField {
    let (a1, a2) = axis_indices(dataset);
    let (rows, cols) = (a1.grid.len(), a2.grid.len());
    let counts = CellCounts::build(&a1, &a2, rows, cols, |_| true);
    let mut l10 = DMatrix::zeros(rows + 1, cols + 1);
    let mut l01 = DMatrix::zeros(rows + 1, cols + 1);
    let mut l11 = DMatrix::zeros(rows + 1, cols + 1);
    let mut risk = DMatrix::zeros(rows + 1, cols + 1);
    for r in 0..=rows {
        for c in 0..=cols {
            let k = counts.idx(r, c);
            let at = counts.risk[k];
            risk[(r, c)] = at;
            if at == 0 {
                continue;
            }
            let rf = f64::from(at);
            if r > 0 {
                l10[(r, c)] = f64::from(counts.n10[k]) / rf;
            }
            if c > 0 {
                l01[(r, c)] = f64::from(counts.n01[k]) / rf;
            }
            if r > 0 && c > 0 {
                l11[(r, c)] = f64::from(counts.n11[k]) / rf;
            }
        }
    }
    HazardField { u_grid: a1.grid, v_grid: a2.grid, l10, l01, l11, risk }
}

/// Dabrowska estimate of `S(t1, t2)` on the failure-time lattice.
#[derive(Debug, Clone)]
pub struct SurvivalSurface {
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    /// `s[(r, c)]` is the estimate at the lattice cell; row/column 0 hold the margins.
    pub s: DMatrix<f64>,
    pub margin1: StepFunction,
    pub margin2: StepFunction,
}

impl SurvivalSurface {
    /// Right-continuous lookup; constant beyond the last grid line.
    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        let r = self.u_grid.partition_point(|&u| u <= t1);
        let c = self.v_grid.partition_point(|&v| v <= t2);
        self.s[(r, c)]
    }
}

pub fn dabrowska(dataset: &Dataset) -> SurvivalSurface {
    let (a1, a2) = axis_indices(dataset);
    let (rows, cols) = (a1.grid.len(), a2.grid.len());
    let counts = CellCounts::build(&a1, &a2, rows, cols, |_| true);
    let subj = dataset.subjects();
    let margin1 = km_fit(
        &subj.iter().map(|s| s.y1).collect::<Vec<_>>(),
        &subj.iter().map(|s| s.delta1).collect::<Vec<_>>(),
    )
    .expect("dataset is non-empty");
    let margin2 = km_fit(
        &subj.iter().map(|s| s.y2).collect::<Vec<_>>(),
        &subj.iter().map(|s| s.delta2).collect::<Vec<_>>(),
    )
    .expect("dataset is non-empty");

    let mut s = DMatrix::zeros(rows + 1, cols + 1);
    s[(0, 0)] = 1.0;
    for r in 1..=rows {
        s[(r, 0)] = margin1.values[r - 1];
    }
    for c in 1..=cols {
        s[(0, c)] = margin2.values[c - 1];
    }
    // prod[c] = product of factors over rows <= r and columns <= c
    let mut prod = vec![1.0; cols + 1];
    for r in 1..=rows {
        let mut row = 1.0;
        for c in 1..=cols {
            row *= counts.factor(r, c);
            prod[c] *= row;
            s[(r, c)] = s[(r, 0)] * s[(0, c)] * prod[c];
        }
    }
    SurvivalSurface { u_grid: a1.grid, v_grid: a2.grid, s, margin1, margin2 }
}
