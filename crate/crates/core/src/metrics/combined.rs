//! Combined local/global reconstruction loss: Chamfer plus EMD on each of
//! the six hand components and on the whole cloud, all weighted equally.

use serde::{Deserialize, Serialize};

use super::assignment::Assignment;
use super::distance::{chamfer_matches, emd_assignment, ChamferMatches};
use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Point3, PointCloud};

/// Which terms of the combined loss are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    /// Only the whole-cloud CD and EMD.
    GlobalOnly,
    /// Per-component CD and EMD plus the whole-cloud terms.
    LocalGlobal,
}

/// Every term of the combined loss.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Per-component Chamfer distance, indexed by `ComponentId::index`.
    pub local_cd: [f64; 6],
    /// Per-component EMD, indexed by `ComponentId::index`.
    pub local_emd: [f64; 6],
    pub global_cd: f64,
    pub global_emd: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn finish(mut self) -> Self {
        let local: f64 = (0..6).map(|i| self.local_cd[i] + self.local_emd[i]).sum();
        self.total = local + self.global_cd + self.global_emd;
        self
    }

    pub fn local_cd(&self, c: ComponentId) -> f64 {
        self.local_cd[c.index()]
    }

    pub fn local_emd(&self, c: ComponentId) -> f64 {
        self.local_emd[c.index()]
    }

    /// Element-wise accumulation, used for epoch averages.
    pub fn accumulate(&mut self, other: &LossBreakdown) {
        for i in 0..6 {
            self.local_cd[i] += other.local_cd[i];
            self.local_emd[i] += other.local_emd[i];
        }
        self.global_cd += other.global_cd;
        self.global_emd += other.global_emd;
        self.total += other.total;
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for i in 0..6 {
            self.local_cd[i] *= factor;
            self.local_emd[i] *= factor;
        }
        self.global_cd *= factor;
        self.global_emd *= factor;
        self.total *= factor;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
            && self.global_cd.is_finite()
            && self.global_emd.is_finite()
            && self.local_cd.iter().chain(&self.local_emd).all(|v| v.is_finite())
    }
}

/// The combined loss with per-component and global terms.
pub fn combined_loss(gt: &PointCloud, pred: &PointCloud) -> Result<LossBreakdown> {
    loss_breakdown(gt, pred, LossMode::LocalGlobal)
}

/// The loss for `mode`; inactive terms are reported as zero.
pub fn loss_breakdown(gt: &PointCloud, pred: &PointCloud, mode: LossMode) -> Result<LossBreakdown> {
    Ok(loss_with_matches(gt, pred, mode)?.0)
}

/// Correspondences of one (CD, EMD) term pair over a subset of points.
#[derive(Debug, Clone)]
pub(crate) struct TermMatches {
    /// Ground-truth indices (into the full cloud) participating in the term.
    pub gt_indices: Vec<usize>,
    /// Predicted indices (into the full cloud) participating in the term.
    pub pred_indices: Vec<usize>,
    /// Chamfer matches, local to the subsets above.
    pub chamfer: ChamferMatches,
    /// EMD matching, local to the subsets above.
    pub emd: Assignment,
}

pub(crate) fn loss_with_matches(
    gt: &PointCloud,
    pred: &PointCloud,
    mode: LossMode,
) -> Result<(LossBreakdown, Vec<TermMatches>)> {
    gt.require_non_empty()?;
    pred.require_non_empty()?;
    if gt.len() != pred.len() {
        return Err(Error::CardinalityMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    let mut breakdown = LossBreakdown::default();
    let mut terms = Vec::with_capacity(7);

    if mode == LossMode::LocalGlobal {
        let gt_labels = gt.require_labels()?;
        let pred_labels = pred.require_labels()?;
        for c in ComponentId::ALL {
            let gi: Vec<usize> = indices_of(gt_labels, c);
            let pi: Vec<usize> = indices_of(pred_labels, c);
            if gi.len() != pi.len() {
                return Err(Error::ComponentCardinalityMismatch {
                    component: c,
                    gt: gi.len(),
                    pred: pi.len(),
                });
            }
            if gi.is_empty() {
                continue;
            }
            let term = term_matches(gt.points(), pred.points(), gi, pi)?;
            breakdown.local_cd[c.index()] = term.chamfer.value();
            breakdown.local_emd[c.index()] = term.emd.total_cost;
            terms.push(term);
        }
    }

    let all: Vec<usize> = (0..gt.len()).collect();
    let term = term_matches(gt.points(), pred.points(), all.clone(), all)?;
    breakdown.global_cd = term.chamfer.value();
    breakdown.global_emd = term.emd.total_cost;
    terms.push(term);

    Ok((breakdown.finish(), terms))
}

fn indices_of(labels: &[ComponentId], c: ComponentId) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| (l == c).then_some(i))
        .collect()
}

fn term_matches(
    gt: &[Point3],
    pred: &[Point3],
    gt_indices: Vec<usize>,
    pred_indices: Vec<usize>,
) -> Result<TermMatches> {
    let g: Vec<Point3> = gt_indices.iter().map(|&i| gt[i]).collect();
    let p: Vec<Point3> = pred_indices.iter().map(|&i| pred[i]).collect();
    let chamfer = chamfer_matches(&g, &p)?;
    let emd = emd_assignment(&g, &p)?;
    Ok(TermMatches {
        gt_indices,
        pred_indices,
        chamfer,
        emd,
    })
}
