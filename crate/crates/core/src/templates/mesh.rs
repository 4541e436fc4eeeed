//! Triangle meshes and area-weighted surface sampling.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Point3, PointCloud};

/// Oversampling factor of the upsample-then-downsample surface sampler.
pub const UPSAMPLE_FACTOR: usize = 4;

/// Indexed triangle mesh with optional per-vertex component labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    labels: Option<Vec<ComponentId>>,
}

impl TriangleMesh {
    /// Validates indices and finiteness; zero-area faces are dropped.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>, labels: Option<Vec<ComponentId>>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite())) {
            return Err(Error::NonFinitePoint { index: i });
        }
        if let Some(l) = &labels {
            if l.len() != vertices.len() {
                return Err(Error::LabelLengthMismatch {
                    points: vertices.len(),
                    labels: l.len(),
                });
            }
        }
        if let Some((fi, _)) = faces.iter().enumerate().find(|(_, f)| f.iter().any(|&v| v >= vertices.len())) {
            return Err(Error::InvalidArgument(format!(
                "face {fi} references a vertex outside 0..{}",
                vertices.len()
            )));
        }
        let faces = faces
            .into_iter()
            .filter(|f| triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]) > 0.0)
            .collect();
        Ok(TriangleMesh { vertices, faces, labels })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn labels(&self) -> Option<&[ComponentId]> {
        self.labels.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Majority label of the face's vertices; a three-way tie resolves to the
    /// lowest component in `ComponentId` order.
    pub fn face_label(&self, face: usize) -> Option<ComponentId> {
        let labels = self.labels.as_ref()?;
        let [a, b, c] = self.faces[face].map(|v| labels[v]);
        Some(if a == b || a == c {
            a
        } else if b == c {
            b
        } else {
            a.min(b).min(c)
        })
    }

    /// Faces whose label is `component`.
    pub fn faces_of(&self, component: ComponentId) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| self.face_label(f) == Some(component))
            .collect()
    }

    /// Number of faces incident to each undirected edge.
    pub fn edge_face_counts(&self) -> std::collections::HashMap<(usize, usize), usize> {
        let mut counts = std::collections::HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// True when every edge is shared by exactly two faces.
    pub fn is_watertight(&self) -> bool {
        !self.faces.is_empty() && self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// Signed volume enclosed by the mesh (positive for outward winding).
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| self.vertices[v].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

pub(crate) fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Area-weighted random point generator over a subset of faces.
pub(crate) struct FaceSampler<'a> {
    mesh: &'a TriangleMesh,
    faces: Vec<usize>,
    cumulative: Vec<f64>,
}

impl<'a> FaceSampler<'a> {
    pub(crate) fn new(mesh: &'a TriangleMesh, faces: Vec<usize>) -> Result<Self> {
        let mut total = 0.0;
        let cumulative: Vec<f64> = faces
            .iter()
            .map(|&f| {
                total += mesh.face_area(f);
                total
            })
            .collect();
        if faces.is_empty() || !(total > 0.0) {
            return Err(Error::InvalidArgument("mesh has no faces to sample".into()));
        }
        Ok(FaceSampler { mesh, faces, cumulative })
    }

    /// A uniform point on the selected surface and the face it lies on.
    pub(crate) fn sample(&self, rng: &mut impl Rng) -> (Point3, usize) {
        let total = *self.cumulative.last().expect("non-empty");
        let r = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= r).min(self.faces.len() - 1);
        let face = self.faces[k];
        let [a, b, c] = self.mesh.faces[face].map(|v| self.mesh.vertices[v]);
        let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        (a + (b - a) * u + (c - a) * v, face)
    }
}

/// Draws `UPSAMPLE_FACTOR · n` accepted candidates, then keeps a uniformly
/// chosen `n` of them (in candidate order).
pub(crate) fn upsample_downsample(
    sampler: &FaceSampler<'_>,
    n: usize,
    rng: &mut ChaCha8Rng,
    mut accept: impl FnMut(&Point3, usize) -> bool,
) -> Vec<(Point3, usize)> {
    let target = UPSAMPLE_FACTOR * n;
    let mut candidates = Vec::with_capacity(target);
    while candidates.len() < target {
        let (p, f) = sampler.sample(rng);
        if accept(&p, f) {
            candidates.push((p, f));
        }
    }
    let mut chosen = index::sample(rng, target, n).into_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| candidates[i]).collect()
}

/// Uniform surface sampling; returns the cloud and the source face of every point.
pub fn sample_mesh_surface_with_faces(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<(PointCloud, Vec<usize>)> {
    if mesh.is_empty() {
        return Err(Error::InvalidArgument("empty mesh".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let sampler = FaceSampler::new(mesh, (0..mesh.faces.len()).collect())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = upsample_downsample(&sampler, n, &mut rng, |_, _| true);
    Ok(assemble(mesh, picked))
}

/// Area-weighted uniform sampling of `n` surface points: `4n` candidates by
/// barycentric sampling proportional to triangle area, then a uniform random
/// choice of `n` without replacement. Labels come from the source face.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    Ok(sample_mesh_surface_with_faces(mesh, n, seed)?.0)
}

pub(crate) fn assemble(mesh: &TriangleMesh, picked: Vec<(Point3, usize)>) -> (PointCloud, Vec<usize>) {
    let faces: Vec<usize> = picked.iter().map(|&(_, f)| f).collect();
    let points = picked.into_iter().map(|(p, _)| p).collect();
    let labels = mesh
        .labels
        .as_ref()
        .map(|_| faces.iter().map(|&f| mesh.face_label(f).expect("labeled mesh")).collect());
    (PointCloud::from_parts_unchecked(points, labels), faces)
}
