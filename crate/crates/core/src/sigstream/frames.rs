use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of windows `frame_windows` produces.
pub fn frame_count(len: usize, d: usize, shift: usize) -> usize {
    if len < d || shift == 0 {
        0
    } else {
        (len - d) / shift + 1
    }
}

/// Sliding windows of `d` samples every `shift` samples, each laid out as
/// the in-phase row followed by the quadrature row.
pub fn frame_windows(waveform: &[Complex64], d: usize, shift: usize) -> Result<Vec<Vec<f32>>> {
    if d == 0 || shift == 0 || shift > d {
        return Err(Error::InvalidInput(format!(
            "need 1 <= shift <= d, got d={d} shift={shift}"
        )));
    }
    if waveform.len() < d {
        return Err(Error::InvalidInput(format!(
            "waveform of {} samples is shorter than a {d}-sample frame",
            waveform.len()
        )));
    }
    Ok((0..frame_count(waveform.len(), d, shift))
        .map(|t| {
            let w = &waveform[t * shift..t * shift + d];
            w.iter()
                .map(|v| v.re as f32)
                .chain(w.iter().map(|v| v.im as f32))
                .collect()
        })
        .collect())
}
