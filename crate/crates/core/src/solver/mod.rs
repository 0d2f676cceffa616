//! Linking geometry, min-max flow, Newton refinement and the `ε`
//! continuation built on them.

pub mod continuation;
pub mod flow;
pub mod geometry;
pub mod newton;

pub use continuation::{
    bound_report, run_continuation, BoundCheck, BoundReport, ContinuationRecord, ContinuationRun, EpsSchedule,
    SolverConfig, StageBounds,
};
pub use flow::{flow_minmax, FlowConfig, FlowOutcome, FlowStop};
pub use geometry::{
    big_r_root, boundary_audit, choose_big_r, sphere_audit, BoundaryAudit, GeometryConfig, LinkingGeometry,
    SphereAudit,
};
pub use newton::{newton_refine, NewtonConfig, NewtonOutcome};
