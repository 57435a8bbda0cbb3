//! Linear age regression: OLS with diagnostics, response transforms,
//! stepwise AIC selection and the per-bone model bank.

mod bank;
mod diagnostics;
mod ols;
mod stepwise;
mod transform;

pub use bank::*;
pub use diagnostics::{
    boxcox_profile, correlation_p_value, dagostino_skew, heteroscedasticity_check, jarque_bera,
    normality_tests, pearson, shapiro_wilk, BoxCoxProfile, NormalityTests, TestResult,
};
pub use ols::{
    aic, back_substitute, fit_ols, forward_substitute_transposed, householder_qr,
    FittedLinearModel, Qr, INTERCEPT,
};
pub use stepwise::*;
pub use transform::TransformSpec;
