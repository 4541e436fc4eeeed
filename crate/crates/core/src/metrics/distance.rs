//! Chamfer and Earth Mover's distances between point clouds.

use rayon::prelude::*;

use super::assignment::{solve_assignment, solve_assignment_auction, Assignment, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::{distance_squared, NearestNeighborIndex, Point3, PointCloud};

/// Largest cardinality for which exact EMD is computed by default.
pub const EXACT_EMD_LIMIT: usize = 2048;

/// Relative optimality gap certified by the auction approximation.
pub const APPROX_EMD_GAP: f64 = 1e-3;

/// Nearest-neighbor correspondences behind a Chamfer value.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamferMatches {
    /// For each ground-truth point, the index of its nearest predicted point.
    pub gt_to_pred: Vec<usize>,
    /// For each predicted point, the index of its nearest ground-truth point.
    pub pred_to_gt: Vec<usize>,
    /// Mean squared distance from ground truth to prediction.
    pub gt_term: f64,
    /// Mean squared distance from prediction to ground truth.
    pub pred_term: f64,
}

impl ChamferMatches {
    pub fn value(&self) -> f64 {
        self.gt_term + self.pred_term
    }
}

/// Squared-distance Chamfer distance: the mean over each cloud of the squared
/// distance to the nearest point of the other cloud, summed over both
/// directions. Symmetric in its arguments.
pub fn chamfer_distance(gt: &PointCloud, pred: &PointCloud) -> Result<f64> {
    Ok(chamfer_matches(gt.points(), pred.points())?.value())
}

/// Chamfer distance with the correspondences that realize it.
pub fn chamfer_matches(gt: &[Point3], pred: &[Point3]) -> Result<ChamferMatches> {
    if gt.is_empty() || pred.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let gt_index = NearestNeighborIndex::build(gt)?;
    let pred_index = NearestNeighborIndex::build(pred)?;
    Ok(chamfer_with_indices(gt, pred, &gt_index, &pred_index))
}

/// Chamfer correspondences using prebuilt indices over `gt` and `pred`.
pub fn chamfer_with_indices(
    gt: &[Point3],
    pred: &[Point3],
    gt_index: &NearestNeighborIndex,
    pred_index: &NearestNeighborIndex,
) -> ChamferMatches {
    let (gt_to_pred, gt_term) = directed_term(gt, pred_index);
    let (pred_to_gt, pred_term) = directed_term(pred, gt_index);
    ChamferMatches {
        gt_to_pred,
        pred_to_gt,
        gt_term,
        pred_term,
    }
}

/// Nearest matches from `from` into the indexed set, with the mean squared
/// distance. Queries may run in parallel; the sum is taken in index order.
fn directed_term(from: &[Point3], into: &NearestNeighborIndex) -> (Vec<usize>, f64) {
    let found: Vec<(usize, f64)> = if from.len() >= 4096 {
        from.par_iter().map(|p| into.nearest_squared(p)).collect()
    } else {
        from.iter().map(|p| into.nearest_squared(p)).collect()
    };
    let sum: f64 = found.iter().map(|&(_, d2)| d2).sum();
    let matches = found.into_iter().map(|(i, _)| i).collect();
    (matches, sum / from.len() as f64)
}

/// Pairwise Euclidean distances: entry (i, j) = ‖pred_i − gt_j‖.
pub fn distance_matrix(pred: &[Point3], gt: &[Point3]) -> CostMatrix {
    CostMatrix::from_fn(pred.len(), gt.len(), |i, j| distance_squared(&pred[i], &gt[j]).sqrt())
}

/// Exact Earth Mover's distance: the minimum over bijections from predicted
/// to ground-truth points of the summed (unsquared) Euclidean distances.
/// `mapping[i]` is the ground-truth partner of predicted point `i`.
pub fn earth_movers_distance(gt: &PointCloud, pred: &PointCloud) -> Result<(f64, Assignment)> {
    let assignment = emd_assignment(gt.points(), pred.points())?;
    Ok((assignment.total_cost, assignment))
}

pub(crate) fn emd_assignment(gt: &[Point3], pred: &[Point3]) -> Result<Assignment> {
    if gt.len() != pred.len() {
        return Err(Error::CardinalityMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let cost = distance_matrix(pred, gt);
    solve_assignment(&cost)
}

/// EMD by auction with a certified relative gap of [`APPROX_EMD_GAP`]; for
/// clouds too large for the exact solver.
pub fn earth_movers_distance_approx(gt: &PointCloud, pred: &PointCloud) -> Result<(f64, Assignment, f64)> {
    if gt.len() != pred.len() {
        return Err(Error::CardinalityMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    gt.require_non_empty()?;
    let cost = distance_matrix(pred.points(), gt.points());
    let approx = solve_assignment_auction(&cost, APPROX_EMD_GAP)?;
    Ok((approx.assignment.total_cost, approx.assignment, approx.relative_gap_bound))
}
