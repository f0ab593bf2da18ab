//! Runs the per-SNR epsilon-greedy ensemble search and shows how epsilon
//! grew at each SNR.

use amc_subsample::bench::Workbench;
use amc_subsample::classifiers::RankerModel;
use amc_subsample::neurokit::TrainConfig;
use amc_subsample::search::{ensemble_subsample_logged, NeuralLeafTrainer};
use amc_subsample::sigstream::{generate_dataset, GenConfig};

fn main() -> amc_subsample::Result<()> {
    let ds = generate_dataset(&GenConfig {
        d: 16,
        shift: 8,
        snr_grid: vec![-10, 10],
        frames_per_class_per_snr: 40,
        seed: 5,
        ..GenConfig::default()
    })?;
    let mut wb = Workbench::new(&ds, 5, 0.25, 0.25)?;
    let quick = TrainConfig {
        max_epochs: 4,
        patience: 2,
        seed: 5,
        ..TrainConfig::default()
    };
    wb.train_rankers(&quick)?;
    let rankers: Vec<&dyn RankerModel> = wb
        .rankers()
        .unwrap()
        .iter()
        .map(|r| r as &dyn RankerModel)
        .collect();
    let trainer = NeuralLeafTrainer {
        train: wb.train.by_snr(),
        val: wb.val.by_snr(),
        cfg: quick.clone(),
    };
    let (plan, logs) = ensemble_subsample_logged(4, &wb.val.by_snr(), &rankers, &trainer, 64)?;
    for log in &logs {
        println!(
            "{:>3} dB: {} attempt(s), eps {:?}, accepted {:?} at {:.3}{}",
            log.snr_db,
            log.attempts.len(),
            log.attempts.iter().map(|(e, _)| *e).collect::<Vec<_>>(),
            log.accepted.indices,
            log.accepted.accuracy,
            if log.missed { " (missed)" } else { "" }
        );
    }
    println!("{}", amc_subsample::bench::encode_plan(&plan)?);
    Ok(())
}
