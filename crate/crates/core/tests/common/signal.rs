//! Measurements on synthesized waveforms.

use std::collections::BTreeSet;

use amc_subsample::sigstream::{draw_waveform, map_symbols, mean_power, GenConfig, ModType};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Ratio of summed clean power to summed noise power over a cell's
/// waveforms, in dB.
pub fn cell_snr(cfg: &GenConfig, m: ModType, snr: i16, waveforms: u64) -> f64 {
    let (mut ps, mut pn) = (0.0, 0.0);
    for w in 0..waveforms {
        let draw = draw_waveform(cfg, m, snr, w).unwrap();
        ps += mean_power(&draw.clean);
        pn += mean_power(&draw.noise);
    }
    10.0 * (ps / pn).log10()
}

/// Expected alphabet size of the digital modulations.
pub fn expected_alphabet(m: ModType) -> Option<usize> {
    Some(match m {
        ModType::Bpsk | ModType::Bfsk | ModType::Cpfsk => 2,
        ModType::Qpsk | ModType::Pam4 => 4,
        ModType::Psk8 => 8,
        ModType::Qam16 => 16,
        ModType::Qam64 => 64,
        _ => return None,
    })
}

/// Distinct points produced by mapping every symbol level, and their mean
/// energy.
pub fn constellation(m: ModType) -> Option<(usize, f64)> {
    let bits = m.bits_per_symbol()?;
    let levels: Vec<u32> = (0..1u32 << bits).collect();
    let pts = map_symbols(&levels, m).unwrap();
    let distinct: BTreeSet<(i64, i64)> = pts
        .iter()
        .map(|c| ((c.re * 1e9).round() as i64, (c.im * 1e9).round() as i64))
        .collect();
    let energy = pts.iter().map(|c| c.norm_sqr()).sum::<f64>() / pts.len() as f64;
    Some((distinct.len(), energy))
}

/// Fraction of spectral energy within `|f| <= edge` cycles/sample.
pub fn energy_below(x: &[Complex64], edge: f64) -> f64 {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let n = buf.len();
    let (mut inside, mut total) = (0.0, 0.0);
    for (i, v) in buf.iter().enumerate() {
        let f = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 } / n as f64;
        let e = v.norm_sqr();
        total += e;
        if f.abs() <= edge {
            inside += e;
        }
    }
    inside / total
}

/// Smallest share of clean BPSK energy in the lowest sixth of the one-sided
/// band (`|f| <= 1/12`) over `waveforms` draws at d = 128.
pub fn bpsk_low_band_share(waveforms: u64) -> f64 {
    let cfg = GenConfig {
        d: 128,
        ..GenConfig::default()
    };
    (0..waveforms)
        .map(|w| energy_below(&draw_waveform(&cfg, ModType::Bpsk, 18, w).unwrap().clean, 1.0 / 12.0))
        .fold(f64::INFINITY, f64::min)
}
