//! Template folding decoder and the 21-joint pose head.

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{empty_rows, MlpCache, MlpLayout};
use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Point3, PointCloud};
use crate::metrics::{loss_with_matches, HandPose, LossBreakdown, LossMode, TermMatches, NUM_JOINTS};
use crate::templates::{Template, TemplateKind};

/// Dimension of the latent code.
pub const LATENT_DIM: usize = 512;
/// Default hidden width of each folding stage.
pub const DEFAULT_HIDDEN: usize = 128;
/// Hidden width of the pose head.
pub const POSE_HIDDEN: usize = 128;

/// A 512-dimensional conditioning vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode(Array1<f64>);

impl LatentCode {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != LATENT_DIM {
            return Err(Error::LatentDimension {
                expected: LATENT_DIM,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("latent code must be finite".into()));
        }
        Ok(LatentCode(Array1::from(values)))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice().expect("contiguous")
    }

    pub(crate) fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }
}

/// Both folding stages of one weight set.
#[derive(Debug, Clone, PartialEq)]
struct FoldNet {
    stage1: MlpLayout,
    stage2: MlpLayout,
}

/// Points of the template handled by one weight set.
#[derive(Debug, Clone, PartialEq)]
struct Group {
    rows: Vec<usize>,
    points: Array2<f64>,
}

/// Two residual folding stages that deform a template conditioned on a
/// latent code:
///
/// `q = p + f₁(p ⊕ z)`, `output = p + f₂(q ⊕ z)`,
///
/// where each `fᵢ` is a three-layer perceptron whose last layer starts at
/// zero, so a fresh decoder reproduces its template exactly. A LocalHand3D
/// template gets one independent weight set per component.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldingDecoder {
    template: Template,
    hidden: usize,
    nets: Vec<FoldNet>,
    groups: Vec<Group>,
    params: Vec<f64>,
}

/// Gradients of every decoder parameter, aligned with [`FoldingDecoder::params`].
pub type Gradients = Vec<f64>;

impl FoldingDecoder {
    pub fn new(template: Template, hidden: usize, seed: u64) -> Result<Self> {
        let mut decoder = Self::zeroed(template, hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for net in &decoder.nets {
            net.stage1.initialize(&mut decoder.params, &mut rng, true);
            net.stage2.initialize(&mut decoder.params, &mut rng, true);
        }
        Ok(decoder)
    }

    /// Decoder with the right layout and all parameters zero.
    pub(crate) fn zeroed(template: Template, hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be at least 1".into()));
        }
        let labels = template.labels().to_vec();
        let points = template.points().points();
        let sets: Vec<Vec<usize>> = match template.kind() {
            TemplateKind::LocalHand3D => ComponentId::ALL
                .iter()
                .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect::<Vec<_>>())
                .filter(|rows| !rows.is_empty())
                .collect(),
            _ => vec![(0..points.len()).collect()],
        };
        let mut offset = 0;
        let mut nets = Vec::with_capacity(sets.len());
        let mut groups = Vec::with_capacity(sets.len());
        for rows in sets {
            let stage1 = MlpLayout::new(3, LATENT_DIM, vec![hidden, hidden, 3], offset);
            let stage2 = MlpLayout::new(3, LATENT_DIM, vec![hidden, hidden, 3], stage1.end());
            offset = stage2.end();
            nets.push(FoldNet { stage1, stage2 });
            let pts = Array2::from_shape_fn((rows.len(), 3), |(r, k)| points[rows[r]][k]);
            groups.push(Group { rows, points: pts });
        }
        Ok(FoldingDecoder {
            template,
            hidden,
            nets,
            groups,
            params: vec![0.0; offset],
        })
    }

    pub fn template(&self) -> &Template {
        &self.template
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Number of independent weight sets (1, or one per local component).
    pub fn weight_sets(&self) -> usize {
        self.nets.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Decoded cloud; labels are copied from the template.
    pub fn decode(&self, z: &LatentCode) -> PointCloud {
        self.forward(z).0
    }

    fn forward(&self, z: &LatentCode) -> (PointCloud, Vec<(MlpCache, MlpCache)>) {
        let mut out = vec![Point3::origin(); self.template.len()];
        let mut caches = Vec::with_capacity(self.nets.len());
        for (net, group) in self.nets.iter().zip(&self.groups) {
            let (dq, cache1) = net.stage1.forward(&self.params, group.points.view(), z.view());
            let q = &group.points + &dq;
            let (offset, cache2) = net.stage2.forward(&self.params, q.view(), z.view());
            for (r, &row) in group.rows.iter().enumerate() {
                let p = &self.template.points().points()[row];
                out[row] = Point3::new(p.x + offset[[r, 0]], p.y + offset[[r, 1]], p.z + offset[[r, 2]]);
            }
            caches.push((cache1, cache2));
        }
        let cloud = PointCloud::from_parts_unchecked(out, Some(self.template.labels().to_vec()));
        (cloud, caches)
    }

    /// Backpropagates `d_out` (loss gradient per output point) through the
    /// activations of a forward pass.
    fn backward(&self, z: &LatentCode, caches: &[(MlpCache, MlpCache)], d_out: &Array2<f64>) -> Gradients {
        let mut grads = vec![0.0; self.params.len()];
        for ((net, group), (cache1, cache2)) in self.nets.iter().zip(&self.groups).zip(caches) {
            let dy = Array2::from_shape_fn((group.rows.len(), 3), |(r, k)| d_out[[group.rows[r], k]]);
            let dq = net.stage2.backward(&self.params, cache2, dy.view(), z.view(), &mut grads);
            net.stage1.backward(&self.params, cache1, dq.view(), z.view(), &mut grads);
        }
        grads
    }
}

/// Gradient of the summed loss terms with respect to every predicted point,
/// with CD nearest neighbours and the EMD assignment held fixed.
pub(crate) fn point_gradients(gt: &PointCloud, pred: &PointCloud, terms: &[TermMatches]) -> Array2<f64> {
    let g = gt.points();
    let p = pred.points();
    let mut d = Array2::zeros((p.len(), 3));
    let mut add = |row: usize, v: [f64; 3], scale: f64| {
        for k in 0..3 {
            d[[row, k]] += scale * v[k];
        }
    };
    let diff = |a: &Point3, b: &Point3| [a.x - b.x, a.y - b.y, a.z - b.z];
    for term in terms {
        let m = term.pred_indices.len() as f64;
        let (gi, pi) = (&term.gt_indices, &term.pred_indices);
        for (i, &j) in term.chamfer.gt_to_pred.iter().enumerate() {
            add(pi[j], diff(&p[pi[j]], &g[gi[i]]), 2.0 / m);
        }
        for (j, &i) in term.chamfer.pred_to_gt.iter().enumerate() {
            add(pi[j], diff(&p[pi[j]], &g[gi[i]]), 2.0 / m);
        }
        for (j, &i) in term.emd.mapping.iter().enumerate() {
            let v = diff(&p[pi[j]], &g[gi[i]]);
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm > 0.0 {
                add(pi[j], v, 1.0 / norm);
            }
        }
    }
    d
}

/// Loss of the decoded cloud against `gt` and the gradient of every weight.
pub fn loss_and_gradients(
    decoder: &FoldingDecoder,
    z: &LatentCode,
    gt: &PointCloud,
    mode: LossMode,
) -> Result<(LossBreakdown, Gradients)> {
    let (pred, caches) = decoder.forward(z);
    let (breakdown, terms) = loss_with_matches(gt, &pred, mode)?;
    let d_out = point_gradients(gt, &pred, &terms);
    Ok((breakdown, decoder.backward(z, &caches, &d_out)))
}

/// Three fully connected layers (`512 → 128 → 128 → 63`) predicting the 21
/// joints from the latent code.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseDecoder {
    layout: MlpLayout,
    params: Vec<f64>,
}

impl PoseDecoder {
    pub fn new(seed: u64) -> Self {
        let layout = MlpLayout::new(0, LATENT_DIM, vec![POSE_HIDDEN, POSE_HIDDEN, 3 * NUM_JOINTS], 0);
        let mut params = vec![0.0; layout.num_params()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        layout.initialize(&mut params, &mut rng, false);
        PoseDecoder { layout, params }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, z: &LatentCode) -> (Array2<f64>, MlpCache) {
        self.layout.forward(&self.params, empty_rows(1).view(), z.view())
    }

    pub fn predict(&self, z: &LatentCode) -> HandPose {
        let (y, _) = self.forward(z);
        HandPose::from_flat(y.as_slice().expect("contiguous")).expect("63 outputs")
    }
}

/// `‖J_pred − J_gt‖₂` over the 63 coordinates, and its exact gradient
/// (zero when the prediction is exact).
pub fn pose_loss_and_gradients(decoder: &PoseDecoder, z: &LatentCode, gt: &HandPose) -> (f64, Gradients) {
    let (y, cache) = decoder.forward(z);
    let target = gt.to_flat();
    let residual: Vec<f64> = y.iter().zip(target.iter()).map(|(a, b)| a - b).collect();
    let loss = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    let mut grads = vec![0.0; decoder.params.len()];
    if loss > 0.0 {
        let dy = Array2::from_shape_fn((1, residual.len()), |(_, k)| residual[k] / loss);
        decoder.layout.backward(&decoder.params, &cache, dy.view(), z.view(), &mut grads);
    }
    (loss, grads)
}
