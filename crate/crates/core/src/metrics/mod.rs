//! Distances and evaluation metrics.

mod assignment;
mod combined;
mod distance;
mod pose;
mod surface;

pub use assignment::{
    solve_assignment, solve_assignment_auction, solve_assignment_warm, ApproxAssignment, Assignment, CostMatrix,
    WarmStart,
};
pub use combined::{combined_loss, loss_breakdown, LossBreakdown, LossMode};
pub(crate) use combined::{loss_with_matches, TermMatches};
pub use distance::{
    chamfer_distance, chamfer_matches, chamfer_with_indices, distance_matrix, earth_movers_distance,
    earth_movers_distance_approx, ChamferMatches, APPROX_EMD_GAP, EXACT_EMD_LIMIT,
};
pub use pose::{auc, joint_errors, linear_thresholds, mpjpe, pck_curve, HandPose, PckCurve, JOINT_NAMES, NUM_JOINTS};
pub use surface::{surface_project, SurfaceProjection};
