use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Mean of `|x|^2`.
pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Circular white Gaussian noise whose variance (I and Q combined) sits
/// `snr_db` below the empirical power of `waveform`. An infinite SNR gives
/// an all-zero realization.
pub fn noise_realization<R: Rng + ?Sized>(
    waveform: &[Complex64],
    snr_db: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let p = mean_power(waveform);
    if p.is_nan() || p <= 0.0 {
        return Err(Error::InvalidInput("waveform has zero energy".into()));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidInput("snr_db is NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(vec![Complex64::new(0.0, 0.0); waveform.len()]);
    }
    let var = p / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, (var / 2.0).sqrt())
        .map_err(|e| Error::InvalidInput(format!("noise scale: {e}")))?;
    Ok((0..waveform.len())
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect())
}

/// `waveform + noise_realization(waveform, snr_db)`.
pub fn add_noise<R: Rng + ?Sized>(
    waveform: &[Complex64],
    snr_db: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let n = noise_realization(waveform, snr_db, rng)?;
    Ok(waveform.iter().zip(&n).map(|(a, b)| a + b).collect())
}
