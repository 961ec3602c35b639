//! Numerical checks of the analytic machinery behind the boundedness
//! criteria: elementary inequalities, Young splittings, the
//! maximal-regularity estimate and a manufactured-solution study of the
//! solver.

pub mod inequalities;
pub mod mms;
pub mod regularity;

pub use inequalities::{
    check_lower_order_absorption, check_power_sum_inequality, check_young_splitting,
    power_sum_sweep, young_sweep, AbsorptionConstants, SweepTally, YoungPoint,
};
pub use mms::{mms_convergence, MmsCase, MmsReport};
pub use regularity::{
    estimate_c_rho, evaluate_sample, random_cosine_field, sample_data, RegularityEstimate, RegularityOptions, SampleEvaluation,
    ESTIMATE_CSV_HEADER,
};
