//! Synthetic depth rendering used to exercise fusion without real sensors.

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Point3, RigidTransform, Vector3};
use crate::templates::TriangleMesh;

use super::DepthMap;

/// Z-buffered triangle rasterization of `mesh`. Each pixel centre receives the
/// exact depth of the nearest surface along its ray (perspective-correct
/// interpolation of `1/z`). Pixels that see nothing get `background`, or 0.
pub fn render_mesh(mesh: &TriangleMesh, camera: &CameraModel, background: Option<f64>) -> Result<DepthMap> {
    let to_camera = camera.extrinsic.inverse();
    let projected: Vec<Option<(f64, f64, f64)>> = mesh
        .vertices()
        .iter()
        .map(|v| camera.project_camera(&to_camera.apply(v)))
        .collect();
    let (w, h) = (camera.width, camera.height);
    let mut zbuf = vec![f64::INFINITY; w * h];
    for face in mesh.faces() {
        let [Some(a), Some(b), Some(c)] = face.map(|v| projected[v]) else {
            continue;
        };
        let area = edge(a, b, c.0, c.1);
        if area == 0.0 {
            continue;
        }
        let lo_u = a.0.min(b.0).min(c.0).ceil().max(0.0);
        let hi_u = a.0.max(b.0).max(c.0).floor().min((w - 1) as f64);
        let lo_v = a.1.min(b.1).min(c.1).ceil().max(0.0);
        let hi_v = a.1.max(b.1).max(c.1).floor().min((h - 1) as f64);
        if lo_u > hi_u || lo_v > hi_v {
            continue;
        }
        for py in lo_v as usize..=hi_v as usize {
            for px in lo_u as usize..=hi_u as usize {
                let (u, v) = (px as f64, py as f64);
                let l0 = edge(b, c, u, v) / area;
                let l1 = edge(c, a, u, v) / area;
                let l2 = edge(a, b, u, v) / area;
                if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                    continue;
                }
                let depth = 1.0 / (l0 / a.2 + l1 / b.2 + l2 / c.2);
                let slot = &mut zbuf[py * w + px];
                if depth < *slot {
                    *slot = depth;
                }
            }
        }
    }
    let fill = background.unwrap_or(0.0);
    let depth = zbuf.into_iter().map(|d| if d.is_finite() { d } else { fill }).collect();
    DepthMap::new(w, h, depth, *camera)
}

/// Point-splat z-buffer: each point writes its depth into the pixel containing
/// its projection.
pub fn render_points(points: &[Point3], camera: &CameraModel) -> Result<DepthMap> {
    let to_camera = camera.extrinsic.inverse();
    let mut zbuf = vec![0.0; camera.width * camera.height];
    for p in points {
        if let Some((u, v, d)) = camera.project_camera(&to_camera.apply(p)) {
            if let Some((px, py)) = camera.pixel_of(u, v) {
                let slot = &mut zbuf[py * camera.width + px];
                if *slot == 0.0 || d < *slot {
                    *slot = d;
                }
            }
        }
    }
    DepthMap::new(camera.width, camera.height, zbuf, *camera)
}

fn edge(a: (f64, f64, f64), b: (f64, f64, f64), u: f64, v: f64) -> f64 {
    (b.0 - a.0) * (v - a.1) - (b.1 - a.1) * (u - a.0)
}

/// Four cameras on the vertices of a regular tetrahedron around `target`,
/// each `distance` mm away and looking at it.
pub fn tetrahedral_rig(target: Point3, distance: f64, focal: f64, width: usize, height: usize) -> Result<Vec<CameraModel>> {
    if !(distance > 0.0) {
        return Err(Error::InvalidArgument("rig distance must be positive".into()));
    }
    [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
        .into_iter()
        .map(|d| {
            let dir = Vector3::from(d).normalize();
            let eye = target + dir * distance;
            // Any up vector not parallel to the viewing direction works.
            let up = if dir.cross(&Vector3::z()).norm() > 1e-6 { Vector3::z() } else { Vector3::y() };
            let pose = RigidTransform::look_at(eye, target, up)?;
            CameraModel::new(
                focal,
                focal,
                (width as f64 - 1.0) / 2.0,
                (height as f64 - 1.0) / 2.0,
                width,
                height,
                pose,
            )
        })
        .collect()
}
