//! Simulation and optimization toolkit for cavity-based dispersive qubit
//! readout with coherent, single-mode-squeezed, and two-mode-squeezed input
//! light.
//!
//! Three mutually cross-checking computational paths are provided:
//!
//! * closed-form expressions ([`readout`]),
//! * exact Gaussian covariance propagation ([`dynamics`]),
//! * Monte Carlo sampling of measurement records ([`montecarlo`]).
//!
//! Conventions: the quadratures are defined through `a = (X + iY)/2`, so the
//! vacuum input correlators are `<X_in(t) X_in(t')> = delta(t - t')` and the
//! integrated vacuum record has variance `kappa * tau`. Rates are expressed in
//! units of the decay rate of cavity 1 and times in its inverse.

pub mod dynamics;
pub mod figures;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod optimize;
pub mod readout;
pub mod source;
pub mod transmon;
pub mod util;

pub use model::{
    CavityParams, LossModel, PhotonBudget, Protocol, QubitState, ReadoutConfig, SqueezeSource,
    ValidatedConfig, ValidationError,
};
pub use readout::MeasurementStats;
