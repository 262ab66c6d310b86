//! Parameter identification from cycling data, OCV fitting and piecewise
//! linearization.

pub mod data;
pub mod fit;
pub mod nelder_mead;
pub mod ocv_fit;
pub mod pwl;

pub use data::{DataRow, DataSet};
pub use fit::{
    fit_fault_parameters, fit_parameters, FaultFitOptions, FaultFitReport, FaultParamId, FaultParams, FitOptions,
    FitReport, ParamBounds, ParamId,
};
pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};
pub use ocv_fit::fit_ocv;
pub use pwl::{piecewise_linearize, PwlOcv, PwlSegment, PwlTarget};
