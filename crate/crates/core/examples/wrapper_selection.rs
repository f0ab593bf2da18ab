//! Ranks sample positions with the Subsampler Net (one ranker) and the
//! holistic tier scheme (three rankers) at a single SNR.

use amc_subsample::bench::Workbench;
use amc_subsample::classifiers::RankerModel;
use amc_subsample::neurokit::TrainConfig;
use amc_subsample::sigstream::{generate_dataset, GenConfig};
use amc_subsample::wrapper::{holistic_select, subsampler_net};

fn main() -> amc_subsample::Result<()> {
    let ds = generate_dataset(&GenConfig {
        d: 32,
        shift: 16,
        snr_grid: vec![18],
        frames_per_class_per_snr: 60,
        seed: 11,
        ..GenConfig::default()
    })?;
    let mut wb = Workbench::new(&ds, 11, 0.25, 0.25)?;
    wb.train_rankers(&TrainConfig {
        max_epochs: 6,
        patience: 3,
        seed: 11,
        ..TrainConfig::default()
    })?;
    let rankers: Vec<&dyn RankerModel> = wb
        .rankers()
        .expect("just trained")
        .iter()
        .map(|r| r as &dyn RankerModel)
        .collect();
    let val = &wb.val;
    let k = 8;

    for (r, nr) in rankers.iter().zip(wb.rankers().unwrap()) {
        let sel = subsampler_net(k, val, *r)?;
        println!("subnet {:<10} {:?}", nr.kind.name(), sel.indices);
    }
    let sel = holistic_select(k, val, &rankers)?;
    println!("holistic          {:?}", sel.indices);
    for (i, s) in sel.steps.iter().enumerate() {
        println!(
            "  step {i}: position {:>2} from tier {} (priority {:.3})",
            sel.indices[i],
            s.tier.unwrap_or(0),
            s.priority
        );
    }
    Ok(())
}
