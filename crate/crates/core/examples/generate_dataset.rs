//! Synthesizes a small impaired I/Q dataset, writes it as MSUB and reads it
//! back.
//!
//! cargo run --release --example generate_dataset -- [out.msub]

use amc_subsample::bench::{load_dataset, save_dataset};
use amc_subsample::sigstream::{generate_dataset, GenConfig, ModType};

fn main() -> amc_subsample::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("amc-example.msub"));
    let cfg = GenConfig {
        d: 64,
        shift: 32,
        snr_grid: vec![-10, 0, 10, 18],
        frames_per_class_per_snr: 20,
        seed: 7,
        ..GenConfig::default()
    };
    let ds = generate_dataset(&cfg)?;
    println!(
        "{} frames of {} samples, bandwidth ratio {:.4}",
        ds.len(),
        ds.d,
        cfg.bandwidth_ratio()
    );
    for ((m, snr), idx) in ds.cells().into_iter().filter(|((_, s), _)| *s == 18) {
        let p: f64 = idx
            .iter()
            .map(|&i| ds.frame_iq(i).iter().map(|v| f64::from(*v).powi(2)).sum::<f64>())
            .sum::<f64>()
            / (idx.len() * ds.d) as f64;
        println!("{:>6} @ {snr:>3} dB: {:>3} frames, mean power {p:.3}", m.name(), idx.len());
    }
    save_dataset(&out, &ds)?;
    let back = load_dataset(&out)?;
    // MSUB carries the frames only; generation metadata is not stored.
    assert_eq!((&back.iq, &back.labels, &back.snrs), (&ds.iq, &ds.labels, &ds.snrs));
    println!("wrote {} and read it back unchanged", out.display());
    let bpsk = ds.cells().keys().filter(|(m, _)| *m == ModType::Bpsk).count();
    println!("BPSK present at {bpsk} SNRs");
    Ok(())
}
