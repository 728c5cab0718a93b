//! Beta seasonal autoregressive moving average models for time series of
//! rates and proportions.
//!
//! The conditional likelihood, its score and Fisher information are in
//! [`likelihood`]; [`estimation`] fits models by BFGS and provides Wald
//! inference; [`diagnostics`], [`forecast`] and [`montecarlo`] build on a
//! [`FittedModel`].

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod forecast;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod montecarlo;
pub mod optim;
pub mod special;

pub use error::{BsarmaError, Result};
pub use estimation::{fit, fit_from, FitOptions, FittedModel};
pub use likelihood::{conditional_loglik, eta_jacobian, fisher_information, score, PreparedSeries};
pub use model::{burn_in, expand_polynomials, predictor_path, Link, ModelOrder, ParamVector, SeriesData};
