//! Gaussian naive Bayes on raw I/Q samples for two binary modulation pairs
//! at high SNR: the dense QAM pair is hard, PAM4 vs QAM64 is easy.

use amc_subsample::classifiers::gnb_fit;
use amc_subsample::sigstream::{generate_dataset, GenConfig, ModType, Splits};

fn pair_accuracy(a: ModType, b: ModType) -> amc_subsample::Result<f64> {
    let ds = generate_dataset(&GenConfig {
        snr_grid: vec![18],
        frames_per_class_per_snr: 200,
        seed: 1,
        ..GenConfig::default()
    })?;
    let splits = Splits::stratified(&ds, 0.25, 0.0, 1)?;
    let pick = |idx: &[usize]| {
        let rows: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| ds.labels[i] == a || ds.labels[i] == b)
            .collect();
        ds.batch(&rows)
    };
    let (train, test) = (pick(&splits.train), pick(&splits.test));
    gnb_fit(&train.x, 2 * ds.d, &train.labels)?.accuracy(&test.x, &test.labels)
}

fn main() -> amc_subsample::Result<()> {
    for (a, b) in [(ModType::Qam16, ModType::Qam64), (ModType::Pam4, ModType::Qam64)] {
        println!("{} vs {}: {:.3}", a.name(), b.name(), pair_accuracy(a, b)?);
    }
    Ok(())
}
