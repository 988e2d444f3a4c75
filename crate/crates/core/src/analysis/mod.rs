//! Large-system predictions: estimation error, residual interference, the
//! scalar iterative map with its certificates, AME and user capacity.

mod capacity;
mod closed_form;
mod fixed_point;

pub use capacity::{user_capacity_search, CapacityProbe, CapacityResult, CapacitySearch};
pub use closed_form::{
    ame, ame_finite_difference, delta_a_feedback, delta_a_training, map_coefficients, pe_max,
    pic_output_model, residual_interference_variance, sigma_f_entry, MapCoefficients, PeMax,
    PicOutputModel,
};
pub use fixed_point::{
    check_convergence_conditions, check_uniqueness, construct_multiple_fixed_points, iterate_map,
    sign_changes, ConvergenceVerdict, Counterexample, DecoderCharacteristic, FixedPointReport,
    UniquenessCertificate, SCAN_POINTS,
};
