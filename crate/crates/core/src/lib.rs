//! Numerical checks for the curvature of conformally flat metrics under Ricci flow.
//!
//! The crate is organised by subsystem:
//!
//! * [`curvature`] rebuilds the Riemann tensor of a metric with vanishing Weyl
//!   tensor from its Ricci eigenvalues and diagonalises the curvature operator
//!   on the wedge basis `√2 e_i∧e_j`.
//! * [`lie`] holds the `so(n)` structure constants and both routes to the
//!   Lie-algebra square `M#` (closed form and structure-constant contraction).
//! * [`pinching`] evaluates the quadratic pinching function `f`, its constraint
//!   system and the intermediate inequalities used to bound it from below;
//!   [`scan`] estimates the lower-bound constant by seeded constrained search.
//! * [`reaction`] and [`integrate`] cover the pointwise reaction ODE
//!   `dW/dt = W² + W#`, pinching scalars and the ODE comparison bound.
//! * [`soliton`] validates the three normalized shrinking soliton models.

pub mod curvature;
pub mod error;
pub mod integrate;
pub mod lie;
pub mod pairs;
pub mod pinching;
pub mod reaction;
pub mod scan;
pub mod soliton;

pub use curvature::{
    riemann_from_spectrum, wedge_components, wedge_values, weyl_tensor, RicciSpectrum,
    RiemannTensor, WedgeDiagonal, WedgeKind, WeylTensor,
};
pub use error::{Error, Result};
pub use integrate::{integrate, IntegratorOptions, Method, OdeState, Trajectory};
pub use lie::{
    lie_algebra_square_closed, lie_algebra_square_full, lie_algebra_square_oracle,
    structure_constants, StructureConstants, WedgeMatrix,
};
pub use pinching::{reaction_quadratic, Constraints, PinchingInstance, ProofClaims, ReactionQuadratic};
pub use reaction::{
    comparison_bound, conformal_project, hamilton_ivey_margin, pinch_scalars, reaction_rhs,
    ConformalProjection, PinchScalars,
};
pub use scan::{scan_min_f, Provenance, ScanConfig, ScanResult, ScanSample};
pub use soliton::{
    growth_bound_check, hess_bound_check, soliton_residual, GrowthReport, HessBound, ModelPoint,
    SolitonKind, SolitonModel, SolitonResidual,
};

/// Largest dimension supported by the dense `R_ijkl` storage.
pub const MAX_DIM: usize = 8;
