//! Fully connected networks over a flat parameter buffer.
//!
//! The first layer sees a per-row "point" block and a conditioning vector
//! that is shared by every row (the latent code). The conditioning product
//! `W_z · z` is therefore computed once per call rather than once per row.

use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis, Zip};
use rand::Rng;

/// Exponential linear unit; smooth enough for finite-difference checks.
#[inline]
fn elu(a: f64) -> f64 {
    if a > 0.0 {
        a
    } else {
        a.exp_m1()
    }
}

#[inline]
fn elu_grad(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        a.exp()
    }
}

/// Shape and position of one network inside a flat parameter vector.
/// Layer `l` stores its weight matrix row-major (`out × in`) then its bias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct MlpLayout {
    /// Width of the per-row block of the first layer input.
    pub point_dim: usize,
    /// Width of the shared conditioning block.
    pub cond_dim: usize,
    /// Output widths of every layer.
    pub widths: Vec<usize>,
    /// Offset of the first parameter in the flat buffer.
    pub offset: usize,
}

/// Activations kept for the backward pass.
pub(crate) struct MlpCache {
    input: Array2<f64>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl MlpLayout {
    pub fn new(point_dim: usize, cond_dim: usize, widths: Vec<usize>, offset: usize) -> Self {
        MlpLayout {
            point_dim,
            cond_dim,
            widths,
            offset,
        }
    }

    fn fan_in(&self, layer: usize) -> usize {
        if layer == 0 {
            self.point_dim + self.cond_dim
        } else {
            self.widths[layer - 1]
        }
    }

    /// (weight offset, bias offset) of `layer`.
    fn offsets(&self, layer: usize) -> (usize, usize) {
        let mut at = self.offset;
        for l in 0..layer {
            at += self.widths[l] * (self.fan_in(l) + 1);
        }
        (at, at + self.widths[layer] * self.fan_in(layer))
    }

    pub fn num_params(&self) -> usize {
        (0..self.widths.len()).map(|l| self.widths[l] * (self.fan_in(l) + 1)).sum()
    }

    pub fn end(&self) -> usize {
        self.offset + self.num_params()
    }

    fn weight<'a>(&self, params: &'a [f64], layer: usize) -> ArrayView2<'a, f64> {
        let (w, b) = self.offsets(layer);
        ArrayView2::from_shape((self.widths[layer], self.fan_in(layer)), &params[w..b]).expect("layout")
    }

    fn bias<'a>(&self, params: &'a [f64], layer: usize) -> ArrayView1<'a, f64> {
        let (_, b) = self.offsets(layer);
        ArrayView1::from(&params[b..b + self.widths[layer]])
    }

    fn weight_mut<'a>(&self, params: &'a mut [f64], layer: usize) -> ArrayViewMut2<'a, f64> {
        let (w, b) = self.offsets(layer);
        ArrayViewMut2::from_shape((self.widths[layer], self.fan_in(layer)), &mut params[w..b]).expect("layout")
    }

    /// He-uniform initialization. The point and conditioning blocks of the
    /// first layer are scaled by their own fan-in so that neither swamps the
    /// other; biases start at zero and the last layer optionally at zero.
    pub fn initialize(&self, params: &mut [f64], rng: &mut impl Rng, zero_last: bool) {
        let layers = self.widths.len();
        for l in 0..layers {
            let (w, b) = self.offsets(l);
            params[b..b + self.widths[l]].fill(0.0);
            if zero_last && l + 1 == layers {
                params[w..b].fill(0.0);
                continue;
            }
            let fan = self.fan_in(l);
            let mut weight = self.weight_mut(params, l);
            for mut row in weight.rows_mut() {
                for (k, v) in row.iter_mut().enumerate() {
                    let block_fan = if l > 0 {
                        fan
                    } else if k < self.point_dim {
                        self.point_dim
                    } else {
                        self.cond_dim
                    };
                    let bound = (6.0 / block_fan as f64).sqrt();
                    *v = rng.random_range(-bound..bound);
                }
            }
        }
    }

    /// Forward pass for `x` (`rows × point_dim`) conditioned on `cond`.
    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>, cond: ArrayView1<f64>) -> (Array2<f64>, MlpCache) {
        debug_assert_eq!(x.ncols(), self.point_dim);
        debug_assert_eq!(cond.len(), self.cond_dim);
        let layers = self.widths.len();
        let mut pre = Vec::with_capacity(layers);
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(layers);
        for l in 0..layers {
            let w = self.weight(params, l);
            let b = self.bias(params, l);
            let a = if l == 0 {
                let shared = w.slice(s![.., self.point_dim..]).dot(&cond) + b;
                let mut a = if self.point_dim > 0 {
                    x.dot(&w.slice(s![.., ..self.point_dim]).t())
                } else {
                    Array2::zeros((x.nrows(), self.widths[0]))
                };
                a += &shared;
                a
            } else {
                post[l - 1].dot(&w.t()) + b
            };
            let h = if l + 1 == layers { a.clone() } else { a.mapv(elu) };
            pre.push(a);
            post.push(h);
        }
        let out = post.pop().expect("at least one layer");
        (
            out,
            MlpCache {
                input: x.to_owned(),
                pre,
                post,
            },
        )
    }

    /// Accumulates parameter gradients for output gradient `dy` into
    /// `grads` and returns the gradient with respect to the point block.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &MlpCache,
        dy: ArrayView2<f64>,
        cond: ArrayView1<f64>,
        grads: &mut [f64],
    ) -> Array2<f64> {
        let layers = self.widths.len();
        let mut delta = dy.to_owned();
        for l in (0..layers).rev() {
            if l + 1 < layers {
                Zip::from(&mut delta).and(&cache.pre[l]).for_each(|d, &a| *d *= elu_grad(a));
            }
            let (wo, bo) = self.offsets(l);
            let bias_grad = delta.sum_axis(Axis(0));
            for (g, v) in grads[bo..bo + self.widths[l]].iter_mut().zip(bias_grad.iter()) {
                *g += v;
            }
            let mut wg = ArrayViewMut2::from_shape((self.widths[l], self.fan_in(l)), &mut grads[wo..bo]).expect("layout");
            if l == 0 {
                if self.point_dim > 0 {
                    let mut block = wg.slice_mut(s![.., ..self.point_dim]);
                    block += &delta.t().dot(&cache.input);
                }
                let outer = bias_grad
                    .view()
                    .insert_axis(Axis(1))
                    .dot(&cond.insert_axis(Axis(0)));
                let mut block = wg.slice_mut(s![.., self.point_dim..]);
                block += &outer;
                let w = self.weight(params, 0);
                return delta.dot(&w.slice(s![.., ..self.point_dim]));
            }
            wg += &delta.t().dot(&cache.post[l - 1]);
            delta = delta.dot(&self.weight(params, l));
        }
        unreachable!("layer 0 returns")
    }
}

/// Row vector helper for single-sample networks.
pub(crate) fn empty_rows(rows: usize) -> Array2<f64> {
    Array2::zeros((rows, 0))
}

