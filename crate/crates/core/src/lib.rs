//! Lehmann-type bivariate Cox regression fitted to jackknife
//! pseudo-observations of the Dabrowska survival estimator.

pub mod baseline;
pub mod bootstrap;
pub mod data;
pub mod dependence;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod gee;
pub mod general;
pub mod hazards;
pub mod link;
pub mod par;
pub mod pseudo;
pub mod quad;
pub mod simple;
pub mod simulate;
pub mod validity;

pub use data::{default_grid, load_csv, read_csv, Dataset, EvalGrid, Subject};
pub use error::{Error, Result};
pub use estimator::{dabrowska, hazard_increments, km_fit, HazardField, StepFunction, SurvivalSurface};
pub use pseudo::{
    pseudo, pseudo_bivariate, pseudo_marginal, pseudo_trivariate, JackknifeMethod, PseudoKind, PseudoMatrix,
};
pub use gee::{sandwich, GeeProblem, GeeResult, SolverOptions, SolverSummary};
pub use link::{link_eval, link_inv, link_inv_deriv, LinkKind};
pub use baseline::{Baseline, BaselineSpec, EmpiricalBaseline};
pub use dependence::{cross_ratio, non_multiplicativity_demo, weighted_cross_ratio, WeightedKind};
pub use hazards::{hazards_general, hazards_simple, HazardTriple, ModelParams};
pub use simple::{fit_simple, predict_simple, FitOptions, SimpleLehmannFit};
pub use simulate::{analytic_surface, censoring_fraction, sample, Censoring, CovariateLaw, SimSpec};
pub use validity::{check_validity_general, check_validity_simple, numeric_validity_scan, ValidityReport};
pub use bootstrap::{bootstrap_simple, default_resampler, BootstrapResult};
pub use general::{
    fit_general, predict_general, select_link, twostep_variance, GeneralOptions, GeneralPrediction,
    GeneralizedLehmannFit, LinkPolicy, SlopeMasks,
};
pub use diagnostics::{binned_summary, pseudo_residuals, trend_test, FittedModel, ResidualTable};
