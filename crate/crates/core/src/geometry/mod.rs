//! Geometric primitives shared by every other module: points, labeled point
//! clouds, rigid transforms, pinhole cameras and the exact k-d tree index.

mod camera;
mod kdtree;
mod transform;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use camera::CameraModel;
pub use kdtree::{Neighbor, NearestNeighborIndex};
pub use transform::RigidTransform;

/// A 3D point in double precision. Millimeters unless documented otherwise.
pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Squared Euclidean distance, accumulated in a fixed order so that every
/// caller (tree search, brute force, losses) produces bit-identical values.
#[inline]
pub fn distance_squared(a: &Point3, b: &Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// One of the six semantic hand components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentId {
    Palm,
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
}

impl ComponentId {
    pub const ALL: [ComponentId; 6] = [
        ComponentId::Palm,
        ComponentId::Thumb,
        ComponentId::Index,
        ComponentId::Middle,
        ComponentId::Ring,
        ComponentId::Pinky,
    ];

    /// The five digits in thumb-to-pinky order.
    pub const DIGITS: [ComponentId; 5] = [
        ComponentId::Thumb,
        ComponentId::Index,
        ComponentId::Middle,
        ComponentId::Ring,
        ComponentId::Pinky,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentId::Palm => "palm",
            ComponentId::Thumb => "thumb",
            ComponentId::Index => "index",
            ComponentId::Middle => "middle",
            ComponentId::Ring => "ring",
            ComponentId::Pinky => "pinky",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered 3D points with optional per-point component labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    labels: Option<Vec<ComponentId>>,
}

impl PointCloud {
    /// Builds an unlabeled cloud. Every coordinate must be finite.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        check_finite(&points)?;
        Ok(PointCloud { points, labels: None })
    }

    /// Builds a labeled cloud; `labels` must have one entry per point.
    pub fn with_labels(points: Vec<Point3>, labels: Vec<ComponentId>) -> Result<Self> {
        check_finite(&points)?;
        if labels.len() != points.len() {
            return Err(Error::LabelLengthMismatch {
                points: points.len(),
                labels: labels.len(),
            });
        }
        Ok(PointCloud {
            points,
            labels: Some(labels),
        })
    }

    /// Builds a cloud from parts that are finite by construction.
    pub(crate) fn from_parts_unchecked(points: Vec<Point3>, labels: Option<Vec<ComponentId>>) -> Self {
        debug_assert!(labels.as_ref().is_none_or(|l| l.len() == points.len()));
        PointCloud { points, labels }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[ComponentId]> {
        self.labels.as_deref()
    }

    pub fn into_parts(self) -> (Vec<Point3>, Option<Vec<ComponentId>>) {
        (self.points, self.labels)
    }

    pub fn label(&self, index: usize) -> Option<ComponentId> {
        self.labels.as_ref().map(|l| l[index])
    }

    /// Replaces the label vector.
    pub fn set_labels(&mut self, labels: Vec<ComponentId>) -> Result<()> {
        if labels.len() != self.points.len() {
            return Err(Error::LabelLengthMismatch {
                points: self.points.len(),
                labels: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(())
    }

    pub fn clear_labels(&mut self) {
        self.labels = None;
    }

    pub(crate) fn require_non_empty(&self) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::EmptyCloud)
        } else {
            Ok(())
        }
    }

    pub(crate) fn require_labels(&self) -> Result<&[ComponentId]> {
        self.labels.as_deref().ok_or(Error::MissingLabels)
    }

    /// Indices of the points carrying `component`, in ascending order.
    pub fn component_indices(&self, component: ComponentId) -> Vec<usize> {
        match &self.labels {
            Some(labels) => labels
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| (l == component).then_some(i))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Number of points per component, indexed by `ComponentId::index`.
    pub fn component_counts(&self) -> [usize; 6] {
        let mut counts = [0usize; 6];
        if let Some(labels) = &self.labels {
            for l in labels {
                counts[l.index()] += 1;
            }
        }
        counts
    }

    /// A new cloud made of the points at `indices` (labels carried along).
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        PointCloud { points, labels }
    }

    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    /// Applies `T` to every point; labels are preserved.
    pub fn transform(&self, transform: &RigidTransform) -> PointCloud {
        if transform.is_identity() {
            return self.clone();
        }
        PointCloud {
            points: self.points.iter().map(|p| transform.apply(p)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Concatenates clouds in order. Labels survive only if every input is labeled.
    pub fn concat<'a>(clouds: impl IntoIterator<Item = &'a PointCloud>) -> PointCloud {
        let mut points = Vec::new();
        let mut labels = Some(Vec::new());
        for cloud in clouds {
            points.extend_from_slice(&cloud.points);
            match (&mut labels, &cloud.labels) {
                (Some(acc), Some(l)) => acc.extend_from_slice(l),
                _ => labels = None,
            }
        }
        if points.is_empty() {
            labels = None;
        }
        PointCloud { points, labels }
    }
}

/// Applies a rigid transform to every point of a cloud.
pub fn transform(cloud: &PointCloud, transform: &RigidTransform) -> PointCloud {
    cloud.transform(transform)
}

/// Builds the exact nearest-neighbor index over a cloud.
pub fn build_index(cloud: &PointCloud) -> Result<NearestNeighborIndex> {
    NearestNeighborIndex::build(cloud.points())
}

/// `min(k, N)` nearest points to `query`, ascending distance, ties by index.
pub fn k_nearest(index: &NearestNeighborIndex, query: &Point3, k: usize) -> Vec<Neighbor> {
    index.k_nearest(query, k)
}

fn check_finite(points: &[Point3]) -> Result<()> {
    match points
        .iter()
        .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
    {
        Some(index) => Err(Error::NonFinitePoint { index }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_names_round_trip() {
        for c in ComponentId::ALL {
            assert_eq!(ComponentId::from_name(c.name()), Some(c));
            assert_eq!(ComponentId::from_index(c.index()), Some(c));
        }
        assert_eq!(ComponentId::ALL.len(), 6);
    }

    #[test]
    fn rejects_non_finite_points() {
        let err = PointCloud::new(vec![Point3::new(0.0, f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinitePoint { index: 0 }));
    }

    #[test]
    fn rejects_label_length_mismatch() {
        let err = PointCloud::with_labels(vec![Point3::origin()], vec![]).unwrap_err();
        assert!(matches!(err, Error::LabelLengthMismatch { .. }));
    }

    #[test]
    fn identity_transform_is_bitwise() {
        let cloud = PointCloud::new(vec![Point3::new(-0.0, 1.5e-300, 3.25)]).unwrap();
        let out = cloud.transform(&RigidTransform::identity());
        assert_eq!(out.points()[0].x.to_bits(), (-0.0f64).to_bits());
        assert_eq!(out, cloud);
    }

    #[test]
    fn translation_moves_origin() {
        let cloud = PointCloud::with_labels(vec![Point3::origin()], vec![ComponentId::Ring]).unwrap();
        let t = RigidTransform::from_translation(Vector3::new(1.0, 2.0, 3.0));
        let out = transform(&cloud, &t);
        assert_eq!(out.points()[0], Point3::new(1.0, 2.0, 3.0));
        assert_eq!(out.labels(), Some(&[ComponentId::Ring][..]));
    }

    #[test]
    fn concat_keeps_order_and_labels() {
        let a = PointCloud::with_labels(vec![Point3::origin()], vec![ComponentId::Palm]).unwrap();
        let b = PointCloud::with_labels(vec![Point3::new(1.0, 0.0, 0.0)], vec![ComponentId::Thumb]).unwrap();
        let c = PointCloud::concat([&a, &b]);
        assert_eq!(c.len(), 2);
        assert_eq!(c.labels().unwrap(), &[ComponentId::Palm, ComponentId::Thumb]);
        let unlabeled = PointCloud::new(vec![Point3::origin()]).unwrap();
        assert!(PointCloud::concat([&a, &unlabeled]).labels().is_none());
    }
}
