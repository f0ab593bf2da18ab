//! Full pipeline for a couple of methods: select, train the final
//! classifier on the reduced frames, report accuracy per SNR and write the
//! CSV/JSON outputs.

use amc_subsample::bench::{report_csv, run_pipeline_on, write_outputs, Method, RunConfig};
use amc_subsample::neurokit::TrainConfig;
use amc_subsample::sigstream::{generate_dataset, GenConfig};

fn main() -> amc_subsample::Result<()> {
    let ds = generate_dataset(&GenConfig {
        d: 32,
        shift: 16,
        snr_grid: vec![0, 18],
        frames_per_class_per_snr: 40,
        seed: 9,
        ..GenConfig::default()
    })?;
    let quick = TrainConfig {
        max_epochs: 5,
        patience: 2,
        ..TrainConfig::default()
    };
    let out = std::env::temp_dir().join("amc-example-run");
    for (method, k) in [(Method::None, None), (Method::Uniform, Some(16)), (Method::Fisher, Some(16))] {
        let cfg = RunConfig {
            method,
            k,
            seed: 9,
            train: quick.clone(),
            ranker: quick.clone(),
            ..RunConfig::default()
        };
        let report = run_pipeline_on(&ds, &cfg)?;
        println!("== {method} (k={})", report.k);
        print!("{}", report_csv(&report));
        write_outputs(&out.join(method.name()), &report, None)?;
    }
    println!("outputs under {}", out.display());
    Ok(())
}
