//! 2.5D surface projection: keeps the camera-visible part of a complete cloud.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, PointCloud};

/// Raster and depth tolerance of a z-buffer visibility test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceProjection {
    pub raster_width: usize,
    pub raster_height: usize,
    /// Points within this distance (mm) behind a cell's nearest point are kept.
    pub depth_tolerance: f64,
}

impl SurfaceProjection {
    pub const DEFAULT_DEPTH_TOLERANCE: f64 = 10.0;

    /// Native camera resolution with a 10 mm tolerance.
    pub fn for_camera(camera: &CameraModel) -> Self {
        SurfaceProjection {
            raster_width: camera.width,
            raster_height: camera.height,
            depth_tolerance: Self::DEFAULT_DEPTH_TOLERANCE,
        }
    }
}

/// Projects world-frame points into a raster over the image; within every
/// occupied cell keeps the points whose depth is within the tolerance of the
/// cell's minimum depth. The result is in the camera frame, in input order,
/// with labels preserved.
pub fn surface_project(cloud: &PointCloud, camera: &CameraModel, params: &SurfaceProjection) -> Result<PointCloud> {
    if params.raster_width == 0 || params.raster_height == 0 {
        return Err(Error::InvalidArgument("raster must be non-empty".into()));
    }
    if !(params.depth_tolerance >= 0.0) {
        return Err(Error::InvalidArgument("depth tolerance must be non-negative".into()));
    }
    let sx = params.raster_width as f64 / camera.width as f64;
    let sy = params.raster_height as f64 / camera.height as f64;
    let world_from_cam_inv = camera.extrinsic.inverse();

    let mut cells: Vec<Option<(usize, f64)>> = Vec::with_capacity(cloud.len());
    let mut min_depth: HashMap<usize, f64> = HashMap::new();
    for p in cloud.points() {
        let pc = world_from_cam_inv.apply(p);
        let cell = camera.project_camera(&pc).and_then(|(u, v, d)| {
            let (cu, cv) = (((u + 0.5) * sx).floor(), ((v + 0.5) * sy).floor());
            let inside = cu >= 0.0 && cv >= 0.0 && cu < params.raster_width as f64 && cv < params.raster_height as f64;
            inside.then(|| (cv as usize * params.raster_width + cu as usize, d))
        });
        if let Some((c, d)) = cell {
            min_depth.entry(c).and_modify(|m| *m = m.min(d)).or_insert(d);
        }
        cells.push(cell);
    }
    if min_depth.is_empty() {
        return Err(Error::OutsideFrustum);
    }
    let keep: Vec<usize> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.and_then(|(cell, d)| (d <= min_depth[&cell] + params.depth_tolerance).then_some(i)))
        .collect();
    Ok(cloud.select(&keep).transform(&world_from_cam_inv))
}
