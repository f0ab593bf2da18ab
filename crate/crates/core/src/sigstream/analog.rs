//! Surrogate analog program source and the two analog modulations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::channel::{apply_channel, ChannelParams};
use super::modulation::ModType;
use crate::error::{Error, Result};

/// Peak frequency deviation of WBFM in cycles/sample for a unit source.
pub const FM_DEVIATION: f64 = 0.05;
const TONES: usize = 8;

/// Band-limited real source: eight random-phase tones below `1/(2 sps)`
/// cycles/sample, peak-normalized, with up to two silent stretches.
pub fn analog_source<R: Rng + ?Sized>(len: usize, sps: usize, rng: &mut R) -> Vec<f64> {
    let fmax = 1.0 / (2.0 * sps as f64);
    let tones: Vec<(f64, f64, f64)> = (0..TONES)
        .map(|_| {
            (
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..fmax),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let mut m: Vec<f64> = (0..len)
        .map(|n| {
            tones
                .iter()
                .map(|&(a, f, p)| a * (2.0 * PI * f * n as f64 + p).cos())
                .sum()
        })
        .collect();
    let peak = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak > 0.0 {
        for v in &mut m {
            *v /= peak;
        }
    }
    if len >= 8 {
        for _ in 0..rng.gen_range(0..=2) {
            let width = rng.gen_range(len / 8..=len / 3);
            let start = rng.gen_range(0..=len - width);
            m[start..start + width].fill(0.0);
        }
    }
    m
}

/// Frequency modulation: the phase integrates `2 pi deviation m[n]`.
pub fn fm_modulate(source: &[f64], deviation: f64) -> Vec<Complex64> {
    let mut phase = 0.0f64;
    source
        .iter()
        .map(|&m| {
            phase = (phase + 2.0 * PI * deviation * m).rem_euclid(2.0 * PI);
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// Double-sideband suppressed-carrier: the source rides the carrier as a
/// real envelope.
pub fn dsb_modulate(source: &[f64]) -> Vec<Complex64> {
    source.iter().map(|&m| Complex64::new(m, 0.0)).collect()
}

/// Modulates a given source and applies the channel; the output has
/// exactly `source.len()` samples.
pub fn modulate_analog<R: Rng + ?Sized>(
    m: ModType,
    source: &[f64],
    params: &ChannelParams,
    sps: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let base = match m {
        ModType::Wbfm => fm_modulate(source, FM_DEVIATION),
        ModType::AmDsb => dsb_modulate(source),
        _ => return Err(Error::InvalidInput(format!("{m} is not an analog modulation"))),
    };
    params.validate()?;
    let mut y = apply_channel(&base, params, sps, false, rng);
    y.truncate(source.len());
    Ok(y)
}

/// Draws a fresh source and modulates it.
pub fn synth_analog(
    m: ModType,
    duration: usize,
    params: &ChannelParams,
    sps: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if !m.is_analog() {
        return Err(Error::InvalidInput(format!("{m} is not an analog modulation")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = analog_source(duration, sps, &mut rng);
    modulate_analog(m, &source, params, sps, &mut rng)
}
