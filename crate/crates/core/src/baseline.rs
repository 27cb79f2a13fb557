//! Baseline bivariate hazard functions.
//!
//! Analytic families all have unit-exponential margins. The empirical
//! baseline turns Dabrowska hazard increments into rough piecewise-constant
//! rates and is meant for exploration only.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::estimator::{dabrowska, hazard_increments, HazardField, SurvivalSurface};

/// Baseline hazards `lambda10`, `lambda01`, `lambda11` and the cross-partial
/// `a0 = d^2 log S0 / dt1 dt2 = lambda11 - lambda10 lambda01`.
pub trait Baseline: Sync {
    fn lambda10(&self, t1: f64, t2: f64) -> f64;
    fn lambda01(&self, t1: f64, t2: f64) -> f64;
    fn a0(&self, t1: f64, t2: f64) -> f64;

    fn lambda11(&self, t1: f64, t2: f64) -> f64 {
        self.a0(t1, t2) + self.lambda10(t1, t2) * self.lambda01(t1, t2)
    }

    fn log_survival(&self, t1: f64, t2: f64) -> f64;

    /// `int_0^t1 int_0^t2 a0 = log S0(t1,t2) - log S0(t1,0) - log S0(0,t2)`.
    fn a0_int(&self, t1: f64, t2: f64) -> f64 {
        self.log_survival(t1, t2) - self.log_survival(t1, 0.0) - self.log_survival(0.0, t2)
    }

    /// `int_0^t2 a0(t1, v) dv = lambda10(t1, 0) - lambda10(t1, t2)`.
    fn a0_int_v(&self, t1: f64, t2: f64) -> f64 {
        self.lambda10(t1, 0.0) - self.lambda10(t1, t2)
    }

    /// `int_0^t1 a0(u, t2) du = lambda01(0, t2) - lambda01(t1, t2)`.
    fn a0_int_u(&self, t1: f64, t2: f64) -> f64 {
        self.lambda01(0.0, t2) - self.lambda01(t1, t2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaselineSpec {
    Independence,
    /// Clayton survival copula, `theta > 0`.
    Clayton { theta: f64 },
    /// Gumbel–Barnett survival copula, `theta` in `(0, 1]`.
    GumbelBarnett { theta: f64 },
}

impl BaselineSpec {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = match *self {
            BaselineSpec::Independence => true,
            BaselineSpec::Clayton { theta } => theta > 0.0 && theta.is_finite(),
            BaselineSpec::GumbelBarnett { theta } => theta > 0.0 && theta <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidModel(format!("baseline parameter out of range: {self:?}")))
        }
    }

    pub fn survival(&self, t1: f64, t2: f64) -> f64 {
        self.log_survival(t1, t2).exp()
    }
}

impl Baseline for BaselineSpec {
    fn lambda10(&self, t1: f64, t2: f64) -> f64 {
        match *self {
            BaselineSpec::Independence => 1.0,
            BaselineSpec::Clayton { theta } => 1.0 / (1.0 + ((theta * t2).exp() - 1.0) * (-theta * t1).exp()),
            BaselineSpec::GumbelBarnett { theta } => 1.0 + theta * t2,
        }
    }

    fn lambda01(&self, t1: f64, t2: f64) -> f64 {
        // every family is exchangeable
        self.lambda10(t2, t1)
    }

    fn a0(&self, t1: f64, t2: f64) -> f64 {
        match *self {
            BaselineSpec::Independence => 0.0,
            BaselineSpec::Clayton { theta } => theta * self.lambda10(t1, t2) * self.lambda01(t1, t2),
            BaselineSpec::GumbelBarnett { theta } => -theta,
        }
    }

    fn log_survival(&self, t1: f64, t2: f64) -> f64 {
        match *self {
            BaselineSpec::Independence => -t1 - t2,
            BaselineSpec::Clayton { theta } => {
                // W = e^{θt1} + e^{θt2} - 1, factored to avoid overflow
                let m = t1.max(t2);
                let w = (theta * (t1 - m)).exp() + (theta * (t2 - m)).exp() - (-theta * m).exp();
                -m - w.ln() / theta
            }
            BaselineSpec::GumbelBarnett { theta } => -t1 - t2 - theta * t1 * t2,
        }
    }

    fn a0_int(&self, t1: f64, t2: f64) -> f64 {
        match *self {
            BaselineSpec::Independence => 0.0,
            BaselineSpec::GumbelBarnett { theta } => -theta * t1 * t2,
            BaselineSpec::Clayton { .. } => self.log_survival(t1, t2) + t1 + t2,
        }
    }
}

/// Piecewise-constant rates from the Dabrowska hazard increments.
///
/// Each rate is the increment of the cell holding `(t1, t2)` divided by the
/// cell's width (or area for the double-failure field).
#[derive(Debug, Clone)]
pub struct EmpiricalBaseline {
    field: HazardField,
    surface: SurvivalSurface,
}

impl EmpiricalBaseline {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        Self { field: hazard_increments(dataset), surface: dabrowska(dataset) }
    }

    fn cell(grid: &[f64], t: f64) -> (usize, f64) {
        let r = grid.partition_point(|&u| u <= t).max(1).min(grid.len().max(1));
        if grid.is_empty() {
            return (0, 1.0);
        }
        let lo = if r >= 2 { grid[r - 2] } else { 0.0 };
        (r, (grid[r - 1] - lo).max(f64::MIN_POSITIVE))
    }
}

impl Baseline for EmpiricalBaseline {
    fn lambda10(&self, t1: f64, t2: f64) -> f64 {
        let (r, w) = Self::cell(&self.field.u_grid, t1);
        let c = self.field.v_grid.partition_point(|&v| v < t2);
        if r == 0 || c >= self.field.l10.ncols() {
            return 0.0;
        }
        self.field.l10[(r, c)] / w
    }

    fn lambda01(&self, t1: f64, t2: f64) -> f64 {
        let (c, w) = Self::cell(&self.field.v_grid, t2);
        let r = self.field.u_grid.partition_point(|&u| u < t1);
        if c == 0 || r >= self.field.l01.nrows() {
            return 0.0;
        }
        self.field.l01[(r, c)] / w
    }

    fn lambda11(&self, t1: f64, t2: f64) -> f64 {
        let (r, w1) = Self::cell(&self.field.u_grid, t1);
        let (c, w2) = Self::cell(&self.field.v_grid, t2);
        if r == 0 || c == 0 {
            return 0.0;
        }
        self.field.l11[(r, c)] / (w1 * w2)
    }

    fn a0(&self, t1: f64, t2: f64) -> f64 {
        self.lambda11(t1, t2) - self.lambda10(t1, t2) * self.lambda01(t1, t2)
    }

    fn log_survival(&self, t1: f64, t2: f64) -> f64 {
        self.surface.eval(t1, t2).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAMILIES: [BaselineSpec; 3] = [
        BaselineSpec::Independence,
        BaselineSpec::Clayton { theta: 2.0 },
        BaselineSpec::GumbelBarnett { theta: 0.8 },
    ];

    #[test]
    fn unit_exponential_margins() {
        for b in FAMILIES {
            for t in [0.0, 0.3, 1.7, 5.0] {
                assert!((b.survival(t, 0.0) - (-t).exp()).abs() < 1e-14);
                assert!((b.survival(0.0, t) - (-t).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn clayton_closed_form() {
        let c = BaselineSpec::Clayton { theta: 2.0 };
        let e2 = 2.0f64.exp();
        assert!((c.survival(1.0, 1.0) - (2.0 * e2 - 1.0).powf(-0.5)).abs() < 1e-14);
        assert!((c.survival(1.0, 1.0) - 0.269_404_683_507_458_4).abs() < 1e-15);
    }

    #[test]
    fn hazards_are_log_derivatives() {
        let h = 1e-5;
        for b in FAMILIES {
            for &(t1, t2) in &[(0.3, 0.7), (1.0, 1.0), (2.0, 0.4)] {
                let ls = |u: f64, v: f64| b.log_survival(u, v);
                let l10 = -(ls(t1 + h, t2) - ls(t1 - h, t2)) / (2.0 * h);
                let l01 = -(ls(t1, t2 + h) - ls(t1, t2 - h)) / (2.0 * h);
                let a = (ls(t1 + h, t2 + h) - ls(t1 + h, t2 - h) - ls(t1 - h, t2 + h) + ls(t1 - h, t2 - h)) / (4.0 * h * h);
                assert!((l10 - b.lambda10(t1, t2)).abs() < 1e-6);
                assert!((l01 - b.lambda01(t1, t2)).abs() < 1e-6);
                assert!((a - b.a0(t1, t2)).abs() < 1e-4);
                assert!((b.lambda11(t1, t2) - b.a0(t1, t2) - b.lambda10(t1, t2) * b.lambda01(t1, t2)).abs() < 1e-10);
                // mixed partials of the single-failure hazards
                let d10 = (b.lambda10(t1, t2 + h) - b.lambda10(t1, t2 - h)) / (2.0 * h);
                let d01 = (b.lambda01(t1 + h, t2) - b.lambda01(t1 - h, t2)) / (2.0 * h);
                assert!((-d10 - b.a0(t1, t2)).abs() < 1e-4 && (-d01 - b.a0(t1, t2)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn integrated_cross_partial_matches_generic_identity() {
        for b in FAMILIES {
            let generic = b.log_survival(1.2, 0.5) - b.log_survival(1.2, 0.0) - b.log_survival(0.0, 0.5);
            assert!((b.a0_int(1.2, 0.5) - generic).abs() < 1e-13);
        }
    }

    #[test]
    fn empirical_rates_are_finite() {
        let d = Dataset::new(vec![
            crate::Subject::new(1.0, true, 2.0, true, vec![]),
            crate::Subject::new(2.0, true, 1.0, true, vec![]),
            crate::Subject::new(3.0, true, 3.0, true, vec![]),
        ])
        .unwrap();
        let e = EmpiricalBaseline::from_dataset(&d);
        assert!((e.lambda10(1.0, 0.5) - 1.0 / 3.0).abs() < 1e-12);
        for &(t1, t2) in &[(0.5, 0.5), (1.5, 2.5), (10.0, 10.0)] {
            assert!(e.a0(t1, t2).is_finite());
        }
    }
}
