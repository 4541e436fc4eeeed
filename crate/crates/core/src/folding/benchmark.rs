//! The fixed synthetic benchmark comparing template kinds: the same posed
//! scenes, the same trainer, only the template (and its loss) differs.

use super::decoder::FoldingDecoder;
use super::scene::{generate_scenes, SyntheticScene};
use super::train::{train_with_progress, EpochRecord, TrainerConfig, TrainingLog};
use crate::error::Result;
use crate::metrics::LossMode;
use crate::templates::{build_template, ComponentBudget, TemplateKind};

/// Hidden width used by the benchmark decoders.
pub const BENCHMARK_HIDDEN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub scenes: usize,
    pub budget: ComponentBudget,
    pub epochs: usize,
    pub seed: u64,
    pub hidden: usize,
}

impl Default for BenchmarkConfig {
    /// 200 poses of 600 points (palm 200, 80 per digit), 200 epochs, seed 0.
    fn default() -> Self {
        BenchmarkConfig {
            scenes: 200,
            budget: ComponentBudget::uniform(200, 80).expect("non-zero budget"),
            epochs: 200,
            seed: 0,
            hidden: BENCHMARK_HIDDEN,
        }
    }
}

/// Loss each template kind is trained with: the per-component terms only
/// exist for templates that carry per-component decoders.
pub fn loss_mode_for(kind: TemplateKind) -> LossMode {
    match kind {
        TemplateKind::LocalHand3D => LossMode::LocalGlobal,
        TemplateKind::Grid2D | TemplateKind::Hand3D => LossMode::GlobalOnly,
    }
}

impl BenchmarkConfig {
    pub fn scenes(&self) -> Result<Vec<SyntheticScene>> {
        generate_scenes(self.scenes, &self.budget, self.seed)
    }

    /// Trains a fresh decoder for `kind` on `scenes`.
    pub fn run(
        &self,
        kind: TemplateKind,
        scenes: &[SyntheticScene],
        progress: impl FnMut(&EpochRecord),
    ) -> Result<(FoldingDecoder, TrainingLog)> {
        let template = build_template(kind, &self.budget, self.seed)?;
        let mut decoder = FoldingDecoder::new(template, self.hidden, self.seed)?;
        let config = TrainerConfig::reconstruction(self.epochs, self.seed, loss_mode_for(kind));
        let log = train_with_progress(&mut decoder, scenes, &config, progress)?;
        Ok((decoder, log))
    }
}
