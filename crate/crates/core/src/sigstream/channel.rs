//! Transmit pulse, channel impairments and frequency-shift keying.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the transmit pulse in symbol periods.
pub const PULSE_SPAN: usize = 8;

/// One channel realization applied to a waveform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub amplitude: f64,
    /// Carrier frequency offset in cycles per sample.
    pub cfo: f64,
    pub phase: f64,
    /// Standard deviation of the per-symbol phase jitter.
    pub jitter_sigma: f64,
    /// Timing offset as a fraction of the symbol period, in `[0, 1)`.
    pub timing_offset: f64,
    /// Channel impulse response with unit energy.
    pub taps: Vec<Complex64>,
    /// Rolloff of the root-raised-cosine pulse, in `(0, 1]`.
    pub rolloff: f64,
}

impl ChannelParams {
    /// All impairments at their neutral values.
    pub fn identity() -> Self {
        ChannelParams {
            amplitude: 1.0,
            cfo: 0.0,
            phase: 0.0,
            jitter_sigma: 0.0,
            timing_offset: 0.0,
            taps: vec![Complex64::new(1.0, 0.0)],
            rolloff: 0.35,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            errs.push("amplitude must be positive".to_string());
        }
        if !self.cfo.is_finite() || !self.phase.is_finite() {
            errs.push("cfo and phase must be finite".to_string());
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            errs.push("jitter_sigma must be non-negative".to_string());
        }
        if !(0.0..1.0).contains(&self.timing_offset) {
            errs.push("timing_offset must lie in [0, 1)".to_string());
        }
        if self.taps.is_empty() {
            errs.push("taps must be non-empty".to_string());
        } else {
            let e: f64 = self.taps.iter().map(|t| t.norm_sqr()).sum();
            if (e - 1.0).abs() > 1e-9 {
                errs.push(format!("tap energy is {e}, expected 1"));
            }
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            errs.push("rolloff must lie in (0, 1]".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Scales taps to unit energy.
pub fn normalize_taps(taps: &mut [Complex64]) {
    let e: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
    if e > 0.0 {
        let s = 1.0 / e.sqrt();
        for t in taps {
            *t *= s;
        }
    }
}

/// Unit-energy root-raised-cosine pulse, `span * sps + 1` taps.
pub fn rrc_taps(beta: f64, sps: usize, span: usize) -> Vec<f64> {
    let n = span * sps + 1;
    let mid = (n / 2) as f64;
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 - mid) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - beta + 4.0 * beta / PI
            } else if ((4.0 * beta * t).abs() - 1.0).abs() < 1e-9 {
                beta / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos())
            } else {
                ((PI * t * (1.0 - beta)).sin()
                    + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos())
                    / (PI * t * (1.0 - (4.0 * beta * t).powi(2)))
            }
        })
        .collect();
    let e = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut h {
        *v /= e;
    }
    h
}

fn convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if h.len() == 1 {
        return x.iter().map(|v| v * h[0]).collect();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (i, xv) in x.iter().enumerate() {
        for (j, hv) in h.iter().enumerate() {
            y[i + j] += xv * hv;
        }
    }
    y
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Delays `x` by `delay` samples (possibly fractional) with a linear phase
/// ramp in the frequency domain. The output is `ceil(delay)` samples longer.
pub fn fractional_delay(x: &[Complex64], delay: f64) -> Vec<Complex64> {
    if delay == 0.0 {
        return x.to_vec();
    }
    let out_len = x.len() + delay.ceil() as usize;
    let n = (out_len + 32).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..x.len()].copy_from_slice(x);
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        p.plan_fft_forward(n).process(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            let f = if k < n / 2 {
                k as f64 / n as f64
            } else {
                k as f64 / n as f64 - 1.0
            };
            *v *= Complex64::from_polar(1.0 / n as f64, -2.0 * PI * f * delay);
        }
        p.plan_fft_inverse(n).process(&mut buf);
    });
    buf.truncate(out_len);
    buf
}

fn phase_jitter<R: Rng + ?Sized>(count: usize, sigma: f64, rng: &mut R) -> Vec<Complex64> {
    if sigma == 0.0 {
        return vec![Complex64::new(1.0, 0.0); count];
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    (0..count)
        .map(|_| Complex64::from_polar(1.0, normal.sample(rng)))
        .collect()
}

/// Multipath, timing offset, gain and carrier. `block_jitter` applies one
/// phase per block of `sps` samples (used for frequency-keyed waveforms
/// whose symbols are not pulse-shaped points).
pub(crate) fn apply_channel<R: Rng + ?Sized>(
    x: &[Complex64],
    params: &ChannelParams,
    sps: usize,
    block_jitter: bool,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut y = if block_jitter {
        let j = phase_jitter(x.len().div_ceil(sps), params.jitter_sigma, rng);
        x.iter().enumerate().map(|(n, v)| v * j[n / sps]).collect()
    } else {
        x.to_vec()
    };
    y = convolve(&y, &params.taps);
    y = fractional_delay(&y, params.timing_offset * sps as f64);
    for (n, v) in y.iter_mut().enumerate() {
        *v *= Complex64::from_polar(
            params.amplitude,
            2.0 * PI * params.cfo * n as f64 + params.phase,
        );
    }
    y
}

fn check_shape_args(len: usize, params: &ChannelParams, sps: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::InvalidInput("no symbols".into()));
    }
    if sps < 2 {
        return Err(Error::InvalidInput("sps must be at least 2".into()));
    }
    params.validate()
}

/// Pulse-shapes unit-energy symbols and applies the channel: each symbol
/// picks up its own phase jitter, the sum is filtered by the pulse
/// convolved with the channel taps, delayed by `timing_offset * sps`
/// samples and finally scaled and rotated by the carrier.
pub fn shape_and_impair<R: Rng + ?Sized>(
    symbols: &[Complex64],
    params: &ChannelParams,
    sps: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_shape_args(symbols.len(), params, sps)?;
    let jitter = phase_jitter(symbols.len(), params.jitter_sigma, rng);
    let pulse = rrc_taps(params.rolloff, sps, PULSE_SPAN);
    let mut shaped = vec![Complex64::new(0.0, 0.0); (symbols.len() - 1) * sps + pulse.len()];
    for (k, s) in symbols.iter().zip(&jitter).map(|(s, j)| s * j).enumerate() {
        for (i, p) in pulse.iter().enumerate() {
            shaped[k * sps + i] += s * p;
        }
    }
    Ok(apply_channel(&shaped, params, sps, false, rng))
}

/// Tone-per-symbol waveform with tones at `+-1/(2 sps)` cycles/sample.
/// CPFSK carries phase across symbol edges; BFSK restarts each symbol at
/// phase zero.
pub fn fsk_baseband(tokens: &[Complex64], sps: usize, continuous: bool) -> Vec<Complex64> {
    let dev = 1.0 / (2.0 * sps as f64);
    let mut out = Vec::with_capacity(tokens.len() * sps);
    let mut phase = 0.0f64;
    for tok in tokens {
        let f = dev * tok.re.signum();
        if !continuous {
            phase = 0.0;
        }
        for _ in 0..sps {
            out.push(Complex64::from_polar(1.0, phase));
            phase = (phase + 2.0 * PI * f).rem_euclid(2.0 * PI);
        }
    }
    out
}

/// Frequency-keyed waveform followed by the channel.
pub fn fsk_and_impair<R: Rng + ?Sized>(
    tokens: &[Complex64],
    continuous: bool,
    params: &ChannelParams,
    sps: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_shape_args(tokens.len(), params, sps)?;
    let base = fsk_baseband(tokens, sps, continuous);
    Ok(apply_channel(&base, params, sps, true, rng))
}
