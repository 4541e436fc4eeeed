use super::{Point3, RigidTransform};
use crate::error::{Error, Result};

/// Pinhole intrinsics plus a world-from-camera extrinsic. Pixel `(u, v)` has
/// its center at integer coordinates; the camera looks along +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub extrinsic: RigidTransform,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        extrinsic: RigidTransform,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::InvalidCamera(format!("focal lengths must be positive (fx={fx}, fy={fy})")));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera("image size must be non-zero".into()));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::InvalidCamera(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            extrinsic,
        })
    }

    /// World point to camera frame.
    pub fn to_camera(&self, world: &Point3) -> Point3 {
        self.extrinsic.inverse().apply(world)
    }

    /// Continuous pixel coordinates and depth of a camera-frame point, or
    /// `None` when the point is not in front of the camera.
    pub fn project_camera(&self, p: &Point3) -> Option<(f64, f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy, p.z))
    }

    /// Projects a world point; see [`CameraModel::project_camera`].
    pub fn project(&self, world: &Point3) -> Option<(f64, f64, f64)> {
        self.project_camera(&self.to_camera(world))
    }

    /// Camera-frame point for pixel `(u, v)` at `depth`.
    pub fn unproject_camera(&self, u: f64, v: f64, depth: f64) -> Point3 {
        Point3::new((u - self.cx) * depth / self.fx, (v - self.cy) * depth / self.fy, depth)
    }

    /// World-frame point for pixel `(u, v)` at `depth`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point3 {
        self.extrinsic.apply(&self.unproject_camera(u, v, depth))
    }

    /// Integer pixel containing continuous coordinates `(u, v)`, if inside the image.
    pub fn pixel_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let (px, py) = ((u + 0.5).floor(), (v + 0.5).floor());
        if px >= 0.0 && py >= 0.0 && px < self.width as f64 && py < self.height as f64 {
            Some((px as usize, py as usize))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_intrinsics() {
        let id = RigidTransform::identity();
        assert!(CameraModel::new(0.0, 1.0, 1.0, 1.0, 4, 4, id).is_err());
        assert!(CameraModel::new(1.0, 1.0, 4.0, 1.0, 4, 4, id).is_err());
        assert!(CameraModel::new(1.0, 1.0, 3.9, 0.0, 4, 4, id).is_ok());
    }

    #[test]
    fn project_unproject_round_trip() {
        let cam = CameraModel::new(600.0, 610.0, 320.0, 240.0, 640, 480, RigidTransform::identity()).unwrap();
        let p = Point3::new(12.5, -40.25, 512.0);
        let (u, v, d) = cam.project(&p).unwrap();
        let back = cam.unproject(u, v, d);
        assert!((back - p).norm() < 1e-9);
        assert_eq!(cam.pixel_of(-0.49, 0.0), Some((0, 0)));
        assert_eq!(cam.pixel_of(-0.51, 0.0), None);
    }
}
