//! Double-log link functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkKind {
    /// `g(x) = log(-log x)` on `(0, 1)`.
    Cloglog,
    /// `g(x) = log(log x)` on `(1, inf)`.
    Loglog,
}

impl LinkKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Cloglog => "CLOGLOG",
            LinkKind::Loglog => "LOGLOG",
        }
    }

    pub fn eval(self, x: f64) -> Result<f64> {
        let ok = match self {
            LinkKind::Cloglog => x > 0.0 && x < 1.0,
            LinkKind::Loglog => x > 1.0 && x.is_finite(),
        };
        if !ok {
            return Err(Error::LinkDomain { link: self.name(), value: x });
        }
        Ok(match self {
            LinkKind::Cloglog => (-x.ln()).ln(),
            LinkKind::Loglog => x.ln().ln(),
        })
    }

    #[inline]
    pub fn inv(self, y: f64) -> f64 {
        match self {
            LinkKind::Cloglog => (-y.exp()).exp(),
            LinkKind::Loglog => y.exp().exp(),
        }
    }

    #[inline]
    pub fn inv_deriv(self, y: f64) -> f64 {
        let e = y.exp();
        match self {
            LinkKind::Cloglog => -e * (-e).exp(),
            LinkKind::Loglog => e * e.exp(),
        }
    }

    #[inline]
    pub fn inv_second_deriv(self, y: f64) -> f64 {
        let e = y.exp();
        match self {
            LinkKind::Cloglog => (-e).exp() * e * (e - 1.0),
            LinkKind::Loglog => e.exp() * e * (1.0 + e),
        }
    }

    /// Move a mean into the link domain before taking the link (initial values only).
    pub fn clamp_mean(self, x: f64) -> f64 {
        match self {
            LinkKind::Cloglog => x.clamp(1e-6, 1.0 - 1e-6),
            LinkKind::Loglog => x.max(1.0 + 1e-6),
        }
    }
}

pub fn link_eval(link: LinkKind, x: f64) -> Result<f64> {
    link.eval(x)
}

pub fn link_inv(link: LinkKind, y: f64) -> f64 {
    link.inv(y)
}

pub fn link_inv_deriv(link: LinkKind, y: f64) -> f64 {
    link.inv_deriv(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(LinkKind::Cloglog.eval((-1.0f64).exp()).unwrap(), 0.0);
        assert!(LinkKind::Loglog.eval(std::f64::consts::E).unwrap().abs() < 1e-16);
        let x = LinkKind::Cloglog.inv(LinkKind::Cloglog.eval(0.37).unwrap());
        assert!((x - 0.37).abs() < 1e-12);
    }

    #[test]
    fn domain_errors_carry_value() {
        match LinkKind::Cloglog.eval(1.2) {
            Err(Error::LinkDomain { link: "CLOGLOG", value }) => assert_eq!(value, 1.2),
            other => panic!("{other:?}"),
        }
        assert!(LinkKind::Loglog.eval(0.5).is_err());
        assert!(LinkKind::Loglog.eval(1.0).is_err());
        assert!(LinkKind::Cloglog.eval(0.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for link in [LinkKind::Cloglog, LinkKind::Loglog] {
            for y in [-2.0, -0.5, 0.0, 0.4, 1.1] {
                let h = 1e-6;
                let d1 = (link.inv(y + h) - link.inv(y - h)) / (2.0 * h);
                let d2 = (link.inv_deriv(y + h) - link.inv_deriv(y - h)) / (2.0 * h);
                assert!((d1 - link.inv_deriv(y)).abs() < 1e-6 * (1.0 + d1.abs()));
                assert!((d2 - link.inv_second_deriv(y)).abs() < 1e-6 * (1.0 + d2.abs()));
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(y in -4.0f64..1.5) {
            for link in [LinkKind::Cloglog, LinkKind::Loglog] {
                let back = link.eval(link.inv(y)).unwrap();
                prop_assert!((back - y).abs() <= 1e-10 * y.abs().max(1.0));
            }
        }
    }
}
