//! Trains grid, hand and local-hand templates on the fixed synthetic benchmark
//! and prints the final mean Chamfer distance of each.
//!
//! `cargo run --release --example template_benchmark -- [epochs]`

use std::time::Instant;

use handcloud::folding::BenchmarkConfig;
use handcloud::templates::TemplateKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = BenchmarkConfig::default();
    if let Some(epochs) = std::env::args().nth(1) {
        config.epochs = epochs.parse()?;
    }
    let scenes = config.scenes()?;
    for kind in [TemplateKind::Grid2D, TemplateKind::Hand3D, TemplateKind::LocalHand3D] {
        let start = Instant::now();
        let (_, log) = config.run(kind, &scenes, |record| {
            if record.epoch % 10 == 0 {
                eprintln!("{kind} epoch {:>4}: total {:.5} cd {:.6}", record.epoch, record.loss.total, record.loss.global_cd);
            }
        })?;
        println!(
            "{kind}: mean CD {:.6}, mean EMD/point {:.6} ({:.0} s)",
            log.final_metrics.mean_cd,
            log.final_metrics.mean_emd_per_point,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
