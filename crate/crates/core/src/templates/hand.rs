//! Procedural capsule-and-ellipsoid hand used as canonical geometry.
//!
//! Layout (millimeters, hand frame): the palm is an ellipsoid centred at the
//! origin, fingers point along +x, the thumb leaves the palm towards −y, and the
//! palm faces −z. Positive flexion bends a digit towards the palm side.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mesh::{assemble, upsample_downsample, FaceSampler, TriangleMesh};
use super::ComponentBudget;
use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Point3, PointCloud, RigidTransform, Vector3};
use crate::metrics::{HandPose, NUM_JOINTS};

/// Angular resolution of every ring and latitude band.
pub const ANGULAR_RESOLUTION: usize = 16;
const CAP_RINGS: usize = 3;
const PALM_LATITUDES: usize = 7;
/// Joint miters are never widened by more than this factor.
const MAX_MITER_SCALE: f64 = 2.0;

/// Dimensions and articulation of the synthetic hand. Digit arrays are in
/// thumb, index, middle, ring, pinky order; phalanges proximal to distal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticHandSpec {
    pub bone_lengths: [[f64; 3]; 5],
    pub palm_radii: [f64; 3],
    pub digit_radii: [f64; 5],
    #[serde(default)]
    pub flexion: [[f64; 3]; 5],
}

impl Default for SyntheticHandSpec {
    fn default() -> Self {
        SyntheticHandSpec {
            bone_lengths: [
                [40.0, 32.0, 27.0],
                [40.0, 25.0, 20.0],
                [44.0, 28.0, 21.0],
                [41.0, 27.0, 20.0],
                [33.0, 20.0, 18.0],
            ],
            palm_radii: [45.0, 40.0, 13.0],
            digit_radii: [9.0, 7.5, 7.5, 7.0, 6.0],
            flexion: [[0.0; 3]; 5],
        }
    }
}

impl SyntheticHandSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.bone_lengths.iter().flatten().all(|&v| positive(v)) {
            return Err(Error::InvalidArgument("bone lengths must be positive".into()));
        }
        if !self.palm_radii.iter().all(|&v| positive(v)) || !self.digit_radii.iter().all(|&v| positive(v)) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        if !self.flexion.iter().flatten().all(|&a| (-FRAC_PI_2..=PI).contains(&a)) {
            return Err(Error::InvalidArgument("flexion angles must lie in [-pi/2, pi]".into()));
        }
        Ok(())
    }

    pub fn with_flexion(mut self, flexion: [[f64; 3]; 5]) -> Self {
        self.flexion = flexion;
        self
    }
}

#[derive(Debug, Clone)]
struct Digit {
    joints: [Point3; 4],
    dirs: [Vector3; 3],
    axis: Vector3,
    radius: f64,
}

/// A posed synthetic hand: forward kinematics, mesh and visibility helpers.
#[derive(Debug, Clone)]
pub struct SyntheticHand {
    spec: SyntheticHandSpec,
    digits: Vec<Digit>,
}

/// Base position (as a fraction of the palm radii) and in-plane heading of each digit.
fn digit_layout(digit: usize) -> ([f64; 2], f64) {
    match digit {
        0 => ([-0.1, -0.7], -50f64.to_radians()),
        1 => ([0.6, -0.66], -10f64.to_radians()),
        2 => ([0.6, -0.22], -3f64.to_radians()),
        3 => ([0.6, 0.22], 4f64.to_radians()),
        _ => ([0.6, 0.66], 12f64.to_radians()),
    }
}

impl SyntheticHand {
    pub fn new(spec: SyntheticHandSpec) -> Result<Self> {
        spec.validate()?;
        let [rx, ry, _] = spec.palm_radii;
        let digits = (0..5)
            .map(|d| {
                let ([bx, by], heading) = digit_layout(d);
                let base = Point3::new(bx * rx, by * ry, 0.0);
                let d0 = Vector3::new(heading.cos(), heading.sin(), 0.0);
                let axis = Vector3::z().cross(&d0).normalize();
                let mut joints = [base; 4];
                let mut dirs = [d0; 3];
                let mut angle = 0.0;
                for k in 0..3 {
                    angle += spec.flexion[d][k];
                    dirs[k] = RigidTransform::from_axis_angle(axis, angle).apply_vector(&d0);
                    joints[k + 1] = joints[k] + dirs[k] * spec.bone_lengths[d][k];
                }
                Digit {
                    joints,
                    dirs,
                    axis,
                    radius: spec.digit_radii[d],
                }
            })
            .collect();
        Ok(SyntheticHand { spec, digits })
    }

    pub fn spec(&self) -> &SyntheticHandSpec {
        &self.spec
    }

    /// The 21 joints: wrist, then MCP, PIP, DIP and tip of each digit.
    pub fn joints(&self) -> HandPose {
        let mut joints = [Point3::origin(); NUM_JOINTS];
        joints[0] = Point3::new(-self.spec.palm_radii[0], 0.0, 0.0);
        for (d, digit) in self.digits.iter().enumerate() {
            joints[1 + 4 * d..5 + 4 * d].copy_from_slice(&digit.joints);
        }
        HandPose::new(joints)
    }

    /// Watertight mesh: one closed shell per component, per-vertex labels.
    pub fn mesh(&self) -> TriangleMesh {
        let mut builder = MeshBuilder::default();
        builder.add_palm(self.spec.palm_radii);
        for (d, digit) in self.digits.iter().enumerate() {
            builder.add_digit(digit, ComponentId::DIGITS[d]);
        }
        TriangleMesh::new(builder.vertices, builder.faces, Some(builder.labels)).expect("procedural mesh is valid")
    }

    /// True when `p`, a surface point of `own`, lies inside another component.
    pub fn is_hidden(&self, p: &Point3, own: ComponentId) -> bool {
        if own != ComponentId::Palm {
            let [rx, ry, rz] = self.spec.palm_radii;
            if (p.x / rx).powi(2) + (p.y / ry).powi(2) + (p.z / rz).powi(2) < 1.0 - 1e-9 {
                return true;
            }
        }
        // Facets of the 16-gon tubes sit at cos(pi/16) of the nominal radius.
        let inscribed = (PI / ANGULAR_RESOLUTION as f64).cos();
        self.digits.iter().zip(ComponentId::DIGITS).any(|(digit, id)| {
            id != own
                && (0..3).any(|k| {
                    segment_distance(p, &digit.joints[k], &digit.joints[k + 1]) < digit.radius * inscribed
                })
        })
    }

    /// Uniform samples of the exposed outer surface (points inside another
    /// component are rejected before the downsampling phase).
    pub fn sample_exposed(&self, n: usize, seed: u64) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        let mesh = self.mesh();
        let sampler = FaceSampler::new(&mesh, (0..mesh.faces().len()).collect())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = upsample_downsample(&sampler, n, &mut rng, |p, f| {
            !self.is_hidden(p, mesh.face_label(f).expect("labeled"))
        });
        Ok(assemble(&mesh, picked).0)
    }

    /// Exposed-surface samples with an exact count per component, emitted in
    /// component order.
    pub fn sample_exposed_components(&self, budget: &ComponentBudget, seed: u64) -> Result<PointCloud> {
        let mesh = self.mesh();
        sample_components(&mesh, budget, seed, |p, c| !self.is_hidden(p, c))
    }
}

/// Per-component sampling with exact counts; each component draws from an
/// independent stream derived from `seed`.
pub(crate) fn sample_components(
    mesh: &TriangleMesh,
    budget: &ComponentBudget,
    seed: u64,
    accept: impl Fn(&Point3, ComponentId) -> bool,
) -> Result<PointCloud> {
    let mut parts = Vec::new();
    for (c, count) in budget.iter() {
        let faces = mesh.faces_of(c);
        if faces.is_empty() {
            return Err(Error::MissingComponent(c));
        }
        let sampler = FaceSampler::new(mesh, faces)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c.index() as u64 + 1);
        let picked = upsample_downsample(&sampler, count, &mut rng, |p, _| accept(p, c));
        parts.push(assemble(mesh, picked).0);
    }
    if parts.is_empty() {
        return Err(Error::InvalidArgument("component budget is empty".into()));
    }
    Ok(PointCloud::concat(&parts))
}

fn segment_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    labels: Vec<ComponentId>,
}

impl MeshBuilder {
    /// Closes a sequence of rings between two poles. Rings must progress along
    /// `t` with ring angle running from `u` towards `w`, where `u × w = t`;
    /// that orientation yields outward-facing triangles.
    fn add_shell(&mut self, start: Point3, rings: &[Vec<Point3>], end: Point3, label: ComponentId) {
        let n = ANGULAR_RESOLUTION;
        let first = self.vertices.len();
        self.vertices.push(start);
        for ring in rings {
            self.vertices.extend_from_slice(ring);
        }
        self.vertices.push(end);
        self.labels.resize(self.vertices.len(), label);
        let ring_at = |r: usize, k: usize| first + 1 + r * n + k % n;
        let end_idx = self.vertices.len() - 1;
        for k in 0..n {
            self.faces.push([first, ring_at(0, k + 1), ring_at(0, k)]);
            for r in 0..rings.len() - 1 {
                let (a0, a1, b0, b1) = (ring_at(r, k), ring_at(r, k + 1), ring_at(r + 1, k), ring_at(r + 1, k + 1));
                self.faces.push([a0, a1, b1]);
                self.faces.push([a0, b1, b0]);
            }
            let last = rings.len() - 1;
            self.faces.push([ring_at(last, k), ring_at(last, k + 1), end_idx]);
        }
    }

    fn add_palm(&mut self, [rx, ry, rz]: [f64; 3]) {
        let rings: Vec<Vec<Point3>> = (1..=PALM_LATITUDES)
            .map(|l| {
                // From the bottom pole upwards so that x × y = +z is the progression.
                let theta = PI - PI * l as f64 / (PALM_LATITUDES + 1) as f64;
                ring_points(|phi| Point3::new(rx * theta.sin() * phi.cos(), ry * theta.sin() * phi.sin(), rz * theta.cos()))
            })
            .collect();
        self.add_shell(Point3::new(0.0, 0.0, -rz), &rings, Point3::new(0.0, 0.0, rz), ComponentId::Palm);
    }

    fn add_digit(&mut self, digit: &Digit, label: ComponentId) {
        let r = digit.radius;
        let u = digit.axis;
        let circle = |center: Point3, t: Vector3, radius: f64, stretch: f64| {
            let w = t.cross(&u);
            ring_points(|phi| center + u * (radius * phi.cos()) + w * (radius * stretch * phi.sin()))
        };
        let [d0, d1, d2] = digit.dirs;
        let [j0, j1, j2, j3] = digit.joints;
        let mut rings = Vec::new();
        for l in (1..=CAP_RINGS).rev() {
            let alpha = FRAC_PI_2 * l as f64 / (CAP_RINGS + 1) as f64;
            rings.push(circle(j0 - d0 * (r * alpha.sin()), d0, r * alpha.cos(), 1.0));
        }
        rings.push(circle(j0, d0, r, 1.0));
        for (j, a, b) in [(j1, d0, d1), (j2, d1, d2)] {
            let bisector = (a + b).normalize();
            let half = a.angle(&b) / 2.0;
            let stretch = (1.0 / half.cos()).min(MAX_MITER_SCALE);
            rings.push(circle(j, bisector, r, stretch));
        }
        rings.push(circle(j3, d2, r, 1.0));
        for l in 1..=CAP_RINGS {
            let alpha = FRAC_PI_2 * l as f64 / (CAP_RINGS + 1) as f64;
            rings.push(circle(j3 + d2 * (r * alpha.sin()), d2, r * alpha.cos(), 1.0));
        }
        self.add_shell(j0 - d0 * r, &rings, j3 + d2 * r, label);
    }
}

fn ring_points(f: impl Fn(f64) -> Point3) -> Vec<Point3> {
    (0..ANGULAR_RESOLUTION)
        .map(|k| f(std::f64::consts::TAU * k as f64 / ANGULAR_RESOLUTION as f64))
        .collect()
}
