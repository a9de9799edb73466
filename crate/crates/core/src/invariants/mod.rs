//! Isometric and conformal invariants of hypersurfaces.

pub mod conformal;
pub mod forms;
pub mod integrability;
mod jetalg;
pub mod lift;

pub use conformal::{conformal_tensors, identity_residuals, ConformalData, IdentityResiduals};
pub use forms::{
    conformal_factor, fundamental_forms, metric_index, scalar_curvature, scalar_curvature_at, PointFrame,
    ScalarCurvature, REGULARITY_THRESHOLD,
};
pub use integrability::{integrability_residuals, IntegrabilityResiduals, LocalTensors, DEFAULT_STEP};
pub use jetalg::Riemann;
pub use lift::{frame_lift, FrameLift};
