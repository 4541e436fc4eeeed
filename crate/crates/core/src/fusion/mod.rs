//! Multi-view depth fusion: threshold segmentation, back-projection, merge,
//! statistical outlier removal and voxel density balancing.

mod render;

use std::collections::HashMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, ComponentId, NearestNeighborIndex, Point3, PointCloud, Vector3};

pub use render::{render_mesh, render_points, tetrahedral_rig};

/// Depth values at or beyond this are invalid sensor readings.
pub const MAX_DEPTH_MM: f64 = 10_000.0;

/// A depth image in millimeters (0 = invalid) with its camera.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    camera: CameraModel,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<f64>, camera: CameraModel) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "depth buffer has {} values, expected {width}x{height}",
                depth.len()
            )));
        }
        if camera.width != width || camera.height != height {
            return Err(Error::InvalidCamera(format!(
                "camera is {}x{} but the depth map is {width}x{height}",
                camera.width, camera.height
            )));
        }
        if let Some(i) = depth.iter().position(|&d| !(d == 0.0 || (d > 0.0 && d < MAX_DEPTH_MM))) {
            return Err(Error::InvalidArgument(format!("invalid depth {} at pixel {i}", depth[i])));
        }
        Ok(DepthMap {
            width,
            height,
            depth,
            camera,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }

    /// Depth rounded to whole millimeters, as stored by 16-bit sensors.
    pub fn quantized(&self) -> DepthMap {
        DepthMap {
            depth: self.depth.iter().map(|d| d.round()).collect(),
            ..self.clone()
        }
    }
}

/// Parameters of the fusion pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Hand-segmentation depth window (mm).
    pub near: f64,
    pub far: f64,
    pub outlier_k: usize,
    pub outlier_alpha: f64,
    /// Density-balancing voxel edge (mm).
    pub voxel_size: f64,
    pub target_points: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            near: 200.0,
            far: 1000.0,
            outlier_k: 8,
            outlier_alpha: 2.0,
            voxel_size: 3.0,
            target_points: 1038,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "fusion window must satisfy 0 < near < far (near={}, far={})",
                self.near, self.far
            )));
        }
        if self.outlier_k == 0 {
            return Err(Error::InvalidArgument("outlier_k must be at least 1".into()));
        }
        if !(self.outlier_alpha.is_finite() && self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::InvalidArgument("outlier_alpha must be finite and voxel_size positive".into()));
        }
        if self.target_points == 0 {
            return Err(Error::InvalidArgument("target_points must be at least 1".into()));
        }
        Ok(())
    }
}

/// Invalidates every pixel outside `[near, far]`.
pub fn segment_depth(map: &DepthMap, near: f64, far: f64) -> DepthMap {
    DepthMap {
        depth: map
            .depth
            .iter()
            .map(|&d| if d >= near && d <= far { d } else { 0.0 })
            .collect(),
        ..map.clone()
    }
}

/// World-frame points of all valid pixels, in row-major pixel order.
pub fn backproject(map: &DepthMap) -> Result<PointCloud> {
    let cam = &map.camera;
    let points: Vec<Point3> = map
        .depth
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0)
        .map(|(i, &d)| cam.unproject((i % map.width) as f64, (i / map.width) as f64, d))
        .collect();
    if points.is_empty() {
        return Err(Error::NoValidPixels);
    }
    Ok(PointCloud::from_parts_unchecked(points, None))
}

/// Concatenates views in order.
pub fn merge_views(clouds: &[PointCloud]) -> Result<PointCloud> {
    if clouds.iter().all(PointCloud::is_empty) {
        return Err(Error::EmptyCloud);
    }
    Ok(PointCloud::concat(clouds))
}

/// Mean distance from every point to its `k` nearest other points.
pub fn mean_neighbor_distances(cloud: &PointCloud, k: usize) -> Result<Vec<f64>> {
    if cloud.len() <= k {
        return Err(Error::TooFewPoints { points: cloud.len(), k });
    }
    let tree = NearestNeighborIndex::build(cloud.points())?;
    Ok(cloud
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let neighbors = tree.k_nearest(p, k + 1);
            let sum: f64 = neighbors.iter().filter(|n| n.index != i).take(k).map(|n| n.distance).sum();
            sum / k as f64
        })
        .collect())
}

/// Statistical outlier removal: drops points whose mean k-NN distance
/// exceeds `μ + α·σ` of that statistic over the cloud.
pub fn remove_outliers(cloud: &PointCloud, k: usize, alpha: f64) -> Result<PointCloud> {
    let means = mean_neighbor_distances(cloud, k)?;
    let n = means.len() as f64;
    let mu = means.iter().sum::<f64>() / n;
    let sigma = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / n).sqrt();
    let limit = mu + alpha * sigma;
    let keep: Vec<usize> = (0..means.len()).filter(|&i| means[i] <= limit).collect();
    Ok(cloud.select(&keep))
}

/// Replaces the points of every occupied voxel by their centroid (label: the
/// majority, ties to the lower component), then subsamples uniformly to
/// `target` if still larger. Voxels are emitted in first-occupied order.
pub fn balance_density(cloud: &PointCloud, voxel_size: f64, target: usize, seed: u64) -> Result<PointCloud> {
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::InvalidArgument("voxel size must be positive".into()));
    }
    let mut slots: HashMap<[i64; 3], usize> = HashMap::new();
    let mut sums: Vec<(Vector3, usize, [usize; 6])> = Vec::new();
    let labels = cloud.labels();
    for (i, p) in cloud.points().iter().enumerate() {
        let key = [p.x, p.y, p.z].map(|c| (c / voxel_size).floor() as i64);
        let slot = *slots.entry(key).or_insert_with(|| {
            sums.push((Vector3::zeros(), 0, [0; 6]));
            sums.len() - 1
        });
        let entry = &mut sums[slot];
        entry.0 += p.coords;
        entry.1 += 1;
        if let Some(l) = labels {
            entry.2[l[i].index()] += 1;
        }
    }
    let points: Vec<Point3> = sums.iter().map(|(s, n, _)| Point3::from(s / *n as f64)).collect();
    let voxel_labels = labels.map(|_| {
        sums.iter()
            .map(|(_, _, votes)| {
                let best = *votes.iter().max().expect("six entries");
                ComponentId::ALL[votes.iter().position(|&v| v == best).expect("max exists")]
            })
            .collect::<Vec<_>>()
    });
    let balanced = PointCloud::from_parts_unchecked(points, voxel_labels);
    if balanced.len() <= target {
        return Ok(balanced);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = index::sample(&mut rng, balanced.len(), target).into_vec();
    keep.sort_unstable();
    Ok(balanced.select(&keep))
}

/// Full pipeline: segment → backproject (per view) → merge → outlier
/// removal → density balancing.
pub fn fuse(maps: &[DepthMap], config: &FusionConfig, seed: u64) -> Result<PointCloud> {
    config.validate()?;
    if maps.is_empty() {
        return Err(Error::InvalidArgument("fusion needs at least one depth map".into()));
    }
    let views = maps
        .par_iter()
        .map(|m| backproject(&segment_depth(m, config.near, config.far)))
        .collect::<Result<Vec<_>>>()?;
    let merged = merge_views(&views)?;
    let filtered = remove_outliers(&merged, config.outlier_k, config.outlier_alpha)?;
    balance_density(&filtered, config.voxel_size, config.target_points, seed)
}

#[cfg(test)]
mod tests;
