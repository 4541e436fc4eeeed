//! Adam training of the folding and pose decoders.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decoder::{loss_and_gradients, pose_loss_and_gradients, FoldingDecoder, PoseDecoder};
use super::scene::SyntheticScene;
use crate::error::{Error, Result};
use crate::geometry::ComponentId;
use crate::metrics::{chamfer_distance, earth_movers_distance, mpjpe, LossBreakdown, LossMode};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossMode,
}

impl TrainerConfig {
    /// Reconstruction stage: lr 1e-3, weight decay 1e-6, batch 32.
    pub fn reconstruction(epochs: usize, seed: u64, loss: LossMode) -> Self {
        TrainerConfig {
            learning_rate: 1e-3,
            weight_decay: 1e-6,
            batch_size: 32,
            epochs,
            seed,
            loss,
        }
    }

    /// Pose stage: lr 1e-4, weight decay 1e-6, batch 32.
    pub fn pose(epochs: usize, seed: u64) -> Self {
        TrainerConfig {
            learning_rate: 1e-4,
            ..Self::reconstruction(epochs, seed, LossMode::GlobalOnly)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument("weight decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Adam with L2 weight decay added to the gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(params: usize, lr: f64, weight_decay: f64) -> Self {
        Adam {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; params],
            v: vec![0.0; params],
        }
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let g = g + self.weight_decay * *p;
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Mean training loss over all scenes seen in one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
}

/// Metrics of the trained decoder, averaged over the evaluation scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalMetrics {
    /// Mean global Chamfer distance.
    pub mean_cd: f64,
    /// Mean global Earth Mover's distance divided by the point count.
    pub mean_emd_per_point: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub final_metrics: FinalMetrics,
}

impl TrainingLog {
    pub const CSV_HEADER: &'static str = "epoch,cd_global,emd_global,cd_palm,cd_thumb,cd_index,cd_middle,cd_ring,cd_pinky,emd_palm,emd_thumb,emd_index,emd_middle,emd_ring,emd_pinky,total";

    /// One line per epoch, fixed column order, shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.epochs {
            let l = &r.loss;
            let _ = write!(out, "{},{},{}", r.epoch, l.global_cd, l.global_emd);
            for c in ComponentId::ALL {
                let _ = write!(out, ",{}", l.local_cd(c));
            }
            for c in ComponentId::ALL {
                let _ = write!(out, ",{}", l.local_emd(c));
            }
            let _ = writeln!(out, ",{}", l.total);
        }
        out
    }
}

fn epoch_order(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Mini-batch Adam on the combined point-cloud loss. Each batch's gradient is
/// the mean of per-scene gradients, summed in batch order. Epoch numbers in
/// the log start at 1.
pub fn train(decoder: &mut FoldingDecoder, scenes: &[SyntheticScene], config: &TrainerConfig) -> Result<TrainingLog> {
    train_with_progress(decoder, scenes, config, |_| {})
}

/// As [`train`], calling `progress` after every epoch.
pub fn train_with_progress(
    decoder: &mut FoldingDecoder,
    scenes: &[SyntheticScene],
    config: &TrainerConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<TrainingLog> {
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::InvalidArgument("training needs at least one scene".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(decoder.num_params(), config.learning_rate, config.weight_decay);
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let mut sum = LossBreakdown::default();
        for batch in epoch_order(&mut rng, scenes.len()).chunks(config.batch_size) {
            let shared: &FoldingDecoder = decoder;
            let results: Vec<Result<(LossBreakdown, Vec<f64>)>> = batch
                .par_iter()
                .map(|&i| {
                    let s = &scenes[i];
                    loss_and_gradients(shared, &s.latent, &s.cloud, config.loss)
                })
                .collect();
            let mut grad = vec![0.0; decoder.num_params()];
            for (&i, result) in batch.iter().zip(results) {
                let (loss, g) = result.map_err(|e| match e {
                    Error::NonFinitePoint { .. } | Error::NonFiniteCost { .. } => Error::Diverged {
                        epoch,
                        detail: format!("scene {i}: {e}"),
                    },
                    e => e,
                })?;
                if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged {
                        epoch,
                        detail: format!("non-finite loss or gradient on scene {i} (total {})", loss.total),
                    });
                }
                sum.accumulate(&loss);
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.update(decoder.params_mut(), &grad);
        }
        let record = EpochRecord {
            epoch,
            loss: sum.scaled(1.0 / scenes.len() as f64),
        };
        progress(&record);
        epochs.push(record);
    }
    let final_metrics = evaluate(decoder, scenes)?;
    Ok(TrainingLog { epochs, final_metrics })
}

/// Mean global CD and per-point EMD of the decoder over `scenes`.
pub fn evaluate(decoder: &FoldingDecoder, scenes: &[SyntheticScene]) -> Result<FinalMetrics> {
    let per_scene: Vec<(f64, f64)> = scenes
        .par_iter()
        .map(|s| {
            let pred = decoder.decode(&s.latent);
            let cd = chamfer_distance(&s.cloud, &pred)?;
            let (emd, _) = earth_movers_distance(&s.cloud, &pred)?;
            Ok((cd, emd / pred.len() as f64))
        })
        .collect::<Result<_>>()?;
    let n = per_scene.len() as f64;
    Ok(FinalMetrics {
        mean_cd: per_scene.iter().map(|p| p.0).sum::<f64>() / n,
        mean_emd_per_point: per_scene.iter().map(|p| p.1).sum::<f64>() / n,
    })
}

/// Per-epoch mean pose loss and the final mean per-joint error (normalized units).
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrainingLog {
    pub epoch_loss: Vec<f64>,
    pub final_mpjpe: f64,
}

/// Mini-batch Adam on the L2 pose loss.
pub fn train_pose(decoder: &mut PoseDecoder, scenes: &[SyntheticScene], config: &TrainerConfig) -> Result<PoseTrainingLog> {
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::InvalidArgument("training needs at least one scene".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(decoder.params().len(), config.learning_rate, config.weight_decay);
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let mut total = 0.0;
        for batch in epoch_order(&mut rng, scenes.len()).chunks(config.batch_size) {
            let shared: &PoseDecoder = decoder;
            let results: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| pose_loss_and_gradients(shared, &scenes[i].latent, &scenes[i].pose))
                .collect();
            let mut grad = vec![0.0; decoder.params().len()];
            for (loss, g) in results {
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        detail: "non-finite pose loss".into(),
                    });
                }
                total += loss;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b / batch.len() as f64;
                }
            }
            adam.update(decoder.params_mut(), &grad);
        }
        epoch_loss.push(total / scenes.len() as f64);
    }
    let final_mpjpe = scenes
        .iter()
        .map(|s| mpjpe(&decoder.predict(&s.latent), &s.pose))
        .sum::<f64>()
        / scenes.len() as f64;
    Ok(PoseTrainingLog { epoch_loss, final_mpjpe })
}
