use thiserror::Error;

/// Errors raised across the library.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// input/schema problems, data problems, and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("need at least {required} subjects, got {found}")]
    TooFewSubjects { required: usize, found: usize },

    #[error("axis {axis} has no observed failures")]
    UnusableAxis { axis: u8 },

    #[error("evaluation point {index} ({t1}, {t2}) lies outside the region where the estimated survival is positive")]
    PointOutsideSupport { index: usize, t1: f64, t2: f64 },

    #[error("value {value} is outside the domain of the {link} link")]
    LinkDomain { link: &'static str, value: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("{stage}: solver did not converge after {iterations} iterations (max |U| = {max_abs_score:e})")]
    NonConvergence {
        stage: String,
        iterations: usize,
        max_abs_score: f64,
        trace: Vec<f64>,
    },

    #[error("degenerate dependence at point {index}: mean step-2 response {ybar} is numerically 1")]
    DegenerateDependence { index: usize, ybar: f64 },

    #[error("dependence direction differs across points (mean responses {0:?}); use the per-point link policy")]
    MixedDependence(Vec<f64>),

    #[error("quadrature failed to reach tolerance (achieved {achieved:e})")]
    Quadrature { achieved: f64 },

    #[error("bisection bracket failure while sampling: {0}")]
    Bracket(String),

    #[error("{failed} of {total} bootstrap replicates failed")]
    UnstableBootstrap { failed: usize, total: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by the numerical machinery rather than by the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::NonConvergence { .. }
                | Error::Quadrature { .. }
                | Error::Bracket(_)
                | Error::UnstableBootstrap { .. }
                | Error::Numerical(_)
                | Error::DegenerateDependence { .. }
                | Error::MixedDependence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
