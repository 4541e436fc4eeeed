//! Decoder template initializations and mesh surface sampling.

mod hand;
mod mesh;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Point3, PointCloud, Vector3};

pub use hand::{SyntheticHand, SyntheticHandSpec, ANGULAR_RESOLUTION};
pub use mesh::{sample_mesh_surface, sample_mesh_surface_with_faces, TriangleMesh, UPSAMPLE_FACTOR};

/// Which initialization a template represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateKind {
    Grid2D,
    Hand3D,
    LocalHand3D,
}

impl TemplateKind {
    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::Grid2D => "grid",
            TemplateKind::Hand3D => "hand",
            TemplateKind::LocalHand3D => "local",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(TemplateKind::Grid2D),
            "hand" => Ok(TemplateKind::Hand3D),
            "local" => Ok(TemplateKind::LocalHand3D),
            other => Err(Error::InvalidArgument(format!("unknown template kind '{other}'"))),
        }
    }
}

/// Exact number of points per component. A zero entry means the component is
/// not part of the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "std::collections::BTreeMap<ComponentId, usize>", into = "std::collections::BTreeMap<ComponentId, usize>")]
pub struct ComponentBudget([usize; 6]);

impl ComponentBudget {
    /// Builds a budget from explicit entries; every listed count must be ≥ 1.
    pub fn new(entries: impl IntoIterator<Item = (ComponentId, usize)>) -> Result<Self> {
        let mut counts = [0; 6];
        for (c, n) in entries {
            if n == 0 {
                return Err(Error::InvalidArgument(format!("budget for {c} must be at least 1")));
            }
            counts[c.index()] = n;
        }
        if counts.iter().all(|&n| n == 0) {
            return Err(Error::InvalidArgument("component budget is empty".into()));
        }
        Ok(ComponentBudget(counts))
    }

    /// `palm` points for the palm and `finger` for each of the five digits.
    pub fn uniform(palm: usize, finger: usize) -> Result<Self> {
        Self::new(ComponentId::ALL.map(|c| (c, if c == ComponentId::Palm { palm } else { finger })))
    }

    pub fn get(&self, c: ComponentId) -> usize {
        self.0[c.index()]
    }

    pub fn counts(&self) -> [usize; 6] {
        self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Non-zero entries in component order.
    pub fn iter(&self) -> impl Iterator<Item = (ComponentId, usize)> + '_ {
        ComponentId::ALL.into_iter().map(|c| (c, self.0[c.index()])).filter(|&(_, n)| n > 0)
    }
}

impl TryFrom<std::collections::BTreeMap<ComponentId, usize>> for ComponentBudget {
    type Error = Error;

    fn try_from(map: std::collections::BTreeMap<ComponentId, usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<ComponentBudget> for std::collections::BTreeMap<ComponentId, usize> {
    fn from(b: ComponentBudget) -> Self {
        b.iter().collect()
    }
}

impl FromStr for ComponentBudget {
    type Err = Error;

    /// Parses `palm=100,thumb=50,...`.
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .filter(|part| !part.trim().is_empty())
            .map(|part| {
                let (name, count) = part
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidArgument(format!("budget entry '{part}' is not name=count")))?;
                let c = ComponentId::from_name(name.trim())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown component '{}'", name.trim())))?;
                let n = count
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidArgument(format!("budget for {c}: {e}")))?;
                Ok((c, n))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

impl fmt::Display for ComponentBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(c, n)| format!("{c}={n}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// A labeled point set that a folding decoder deforms.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    points: PointCloud,
    kind: TemplateKind,
    budget: Option<ComponentBudget>,
}

impl Template {
    /// Checks the kind-specific invariants (planarity, exact budgets).
    pub fn new(points: PointCloud, kind: TemplateKind, budget: Option<ComponentBudget>) -> Result<Self> {
        points.require_non_empty()?;
        points.require_labels()?;
        match kind {
            TemplateKind::Grid2D if points.points().iter().any(|p| p.z != 0.0) => {
                return Err(Error::InvalidArgument("grid template points must lie in z = 0".into()))
            }
            TemplateKind::LocalHand3D => {
                let budget = budget.ok_or_else(|| Error::InvalidArgument("local template requires a budget".into()))?;
                if points.component_counts() != budget.counts() {
                    return Err(Error::InvalidArgument("template labels do not match its budget".into()));
                }
            }
            _ => {}
        }
        let budget = if kind == TemplateKind::LocalHand3D { budget } else { None };
        Ok(Template { points, kind, budget })
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn budget(&self) -> Option<&ComponentBudget> {
        self.budget.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> &[ComponentId] {
        self.points.labels().expect("templates are labeled")
    }
}

/// `m × m` lattice over `[−1, 1]²` at `z = 0`, row-major (x outer, y inner).
pub fn grid_template(n: usize) -> Result<Template> {
    let m = (n as f64).sqrt().round() as usize;
    if m < 2 || m * m != n {
        return Err(Error::InvalidArgument(format!("grid size {n} is not a perfect square of a side ≥ 2")));
    }
    grid_template_rect(m, m)
}

/// `rows × cols` lattice over `[−1, 1]²` at `z = 0`; rows run along x.
/// Used where a point count has no integer square root.
pub fn grid_template_rect(rows: usize, cols: usize) -> Result<Template> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidArgument("grid needs at least two rows and two columns".into()));
    }
    let coord = |i: usize, m: usize| -1.0 + 2.0 * i as f64 / (m - 1) as f64;
    let points = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| Point3::new(coord(i, rows), coord(j, cols), 0.0)))
        .collect::<Vec<_>>();
    let labels = vec![ComponentId::Palm; points.len()];
    Template::new(PointCloud::with_labels(points, labels)?, TemplateKind::Grid2D, None)
}

/// Template of the given kind with `budget.total()` points. Grids use the
/// most nearly square `rows × cols` factorization of the total.
pub fn build_template(kind: TemplateKind, budget: &ComponentBudget, seed: u64) -> Result<Template> {
    let n = budget.total();
    match kind {
        TemplateKind::Grid2D => {
            let rows = (2..=(n as f64).sqrt() as usize).rev().find(|r| n % r == 0).ok_or_else(|| {
                Error::InvalidArgument(format!("{n} points cannot be laid out as a grid with at least two rows"))
            })?;
            grid_template_rect(rows, n / rows)
        }
        TemplateKind::Hand3D => hand_template(n, seed),
        TemplateKind::LocalHand3D => local_hand_template(budget, seed),
    }
}

/// Translation and isotropic scale mapping a cloud into normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: Vector3,
    pub scale: f64,
}

impl Normalization {
    /// Zero centroid and unit max radius for `points`.
    pub fn fit(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let center = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / points.len() as f64;
        let scale = points.iter().map(|p| (p.coords - center).norm()).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument("cannot normalize a cloud of coincident points".into()));
        }
        Ok(Normalization { center, scale })
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from((p.coords - self.center) / self.scale)
    }

    pub fn invert(&self, p: &Point3) -> Point3 {
        Point3::from(p.coords * self.scale + self.center)
    }

    pub fn apply_cloud(&self, cloud: &PointCloud) -> PointCloud {
        let points = cloud.points().iter().map(|p| self.apply(p)).collect();
        PointCloud::from_parts_unchecked(points, cloud.labels().map(<[_]>::to_vec))
    }
}

/// Normalization frame of the default open hand: area-weighted surface
/// centroid and the largest vertex distance from it.
pub fn canonical_normalization() -> Normalization {
    let mesh = SyntheticHand::new(SyntheticHandSpec::default()).expect("default spec").mesh();
    let mut weighted = Vector3::zeros();
    let mut area = 0.0;
    for (f, face) in mesh.faces().iter().enumerate() {
        let a = mesh.face_area(f);
        let c = face.iter().fold(Vector3::zeros(), |acc, &v| acc + mesh.vertices()[v].coords) / 3.0;
        weighted += c * a;
        area += a;
    }
    let center = weighted / area;
    let scale = mesh.vertices().iter().map(|v| (v.coords - center).norm()).fold(0.0, f64::max);
    Normalization { center, scale }
}

fn normalized(cloud: PointCloud) -> Result<PointCloud> {
    let frame = Normalization::fit(cloud.points())?;
    Ok(frame.apply_cloud(&cloud))
}

/// `n` surface samples of the default synthetic hand in normalized units.
pub fn hand_template(n: usize, seed: u64) -> Result<Template> {
    if n < 6 {
        return Err(Error::InvalidArgument("hand template needs at least 6 points".into()));
    }
    let mesh = SyntheticHand::new(SyntheticHandSpec::default())?.mesh();
    let cloud = normalized(sample_mesh_surface(&mesh, n, seed)?)?;
    Template::new(cloud, TemplateKind::Hand3D, None)
}

/// Per-component surface samples with exact counts, in normalized units.
pub fn local_hand_template(budget: &ComponentBudget, seed: u64) -> Result<Template> {
    let mesh = SyntheticHand::new(SyntheticHandSpec::default())?.mesh();
    local_template_from_mesh(&mesh, budget, seed)
}

/// Exactly `budget` surface samples per component of a labeled mesh, in
/// the mesh's own units, concatenated in component order.
pub fn sample_mesh_components(mesh: &TriangleMesh, budget: &ComponentBudget, seed: u64) -> Result<PointCloud> {
    if mesh.labels().is_none() {
        return Err(Error::MissingLabels);
    }
    hand::sample_components(mesh, budget, seed, |_, _| true)
}

/// Like [`local_hand_template`] but over an arbitrary labeled mesh.
pub fn local_template_from_mesh(mesh: &TriangleMesh, budget: &ComponentBudget, seed: u64) -> Result<Template> {
    let cloud = normalized(sample_mesh_components(mesh, budget, seed)?)?;
    Template::new(cloud, TemplateKind::LocalHand3D, Some(*budget))
}
