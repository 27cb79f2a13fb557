//! Covariate-adjusted hazards and survival of the two Lehmann models.

use serde::{Deserialize, Serialize};

use crate::baseline::Baseline;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Simple { b: Vec<f64> },
    General { alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64> },
}

impl ModelParams {
    pub fn p(&self) -> usize {
        match self {
            ModelParams::Simple { b } => b.len(),
            ModelParams::General { alpha, .. } => alpha.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ModelParams::General { alpha, beta, gamma } = self {
            if alpha.len() != beta.len() || alpha.len() != gamma.len() {
                return Err(Error::InvalidModel("alpha, beta and gamma must have equal length".into()));
            }
        }
        Ok(())
    }

    /// Linear predictors `(alpha'z, beta'z, gamma'z)`; all equal `b'z` for the simple model.
    pub fn indices(&self, z: &[f64]) -> (f64, f64, f64) {
        match self {
            ModelParams::Simple { b } => {
                let e = dot(b, z);
                (e, e, e)
            }
            ModelParams::General { alpha, beta, gamma } => (dot(alpha, z), dot(beta, z), dot(gamma, z)),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardTriple {
    pub l10: f64,
    pub l01: f64,
    pub l11: f64,
    pub a: f64,
}

impl HazardTriple {
    pub fn min_component(&self) -> f64 {
        self.l10.min(self.l01).min(self.l11)
    }
}

pub fn hazards_simple(base: &dyn Baseline, b: &[f64], z: &[f64], t1: f64, t2: f64) -> HazardTriple {
    let e = dot(b, z).exp();
    let (b10, b01) = (base.lambda10(t1, t2), base.lambda01(t1, t2));
    HazardTriple {
        l10: b10 * e,
        l01: b01 * e,
        l11: base.lambda11(t1, t2) * e - b10 * b01 * (e - e * e),
        a: base.a0(t1, t2) * e,
    }
}

pub fn hazards_general(
    base: &dyn Baseline,
    alpha: &[f64],
    beta: &[f64],
    gamma: &[f64],
    z: &[f64],
    t1: f64,
    t2: f64,
) -> HazardTriple {
    let (ea, eb, eg) = (dot(alpha, z).exp(), dot(beta, z).exp(), dot(gamma, z).exp());
    let l10 = ea * base.lambda10(t1, 0.0) - eg * base.a0_int_v(t1, t2);
    let l01 = eb * base.lambda01(0.0, t2) - eg * base.a0_int_u(t1, t2);
    let a = eg * base.a0(t1, t2);
    HazardTriple { l10, l01, l11: l10 * l01 + a, a }
}

pub fn hazards(base: &dyn Baseline, params: &ModelParams, z: &[f64], t1: f64, t2: f64) -> HazardTriple {
    match params {
        ModelParams::Simple { b } => hazards_simple(base, b, z, t1, t2),
        ModelParams::General { alpha, beta, gamma } => hazards_general(base, alpha, beta, gamma, z, t1, t2),
    }
}

/// `log S(t1, t2 | z)`.
pub fn log_survival(base: &dyn Baseline, params: &ModelParams, z: &[f64], t1: f64, t2: f64) -> f64 {
    let (xa, xb, xg) = params.indices(z);
    match params {
        ModelParams::Simple { .. } => xa.exp() * base.log_survival(t1, t2),
        ModelParams::General { .. } => {
            xa.exp() * base.log_survival(t1, 0.0) + xb.exp() * base.log_survival(0.0, t2) + xg.exp() * base.a0_int(t1, t2)
        }
    }
}

pub fn survival(base: &dyn Baseline, params: &ModelParams, z: &[f64], t1: f64, t2: f64) -> f64 {
    log_survival(base, params, z, t1, t2).exp()
}
