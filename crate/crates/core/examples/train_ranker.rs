//! Trains the three ranker architectures on pooled SNRs and prints their
//! per-SNR validation accuracy.

use amc_subsample::bench::Workbench;
use amc_subsample::neurokit::TrainConfig;
use amc_subsample::sigstream::{generate_dataset, GenConfig};

fn main() -> amc_subsample::Result<()> {
    let cfg = GenConfig {
        d: 32,
        shift: 16,
        snr_grid: vec![0, 18],
        frames_per_class_per_snr: 40,
        seed: 3,
        ..GenConfig::default()
    };
    let ds = generate_dataset(&cfg)?;
    let mut wb = Workbench::new(&ds, 3, 0.25, 0.25)?;
    let tc = TrainConfig {
        max_epochs: 6,
        patience: 3,
        seed: 3,
        ..TrainConfig::default()
    };
    for r in wb.train_rankers(&tc)? {
        println!(
            "{:<10} {} epochs (best {}), val accuracy {:?}",
            r.kind.name(),
            r.history.epochs_run,
            r.history.best_epoch,
            r.val_accuracy
        );
    }
    Ok(())
}
