//! Balanced, seeded generation of labeled frames and the in-memory views
//! the rest of the crate trains on.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analog::{analog_source, modulate_analog};
use super::channel::{fsk_and_impair, normalize_taps, shape_and_impair, ChannelParams, PULSE_SPAN};
use super::frames::frame_windows;
use super::modulation::{map_symbols, ModType};
use super::noise::noise_realization;
use crate::error::{Error, Result};

/// Bounds the per-waveform channel draws are taken from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentRanges {
    pub amplitude: (f64, f64),
    /// Carrier offsets are uniform in `[-cfo_max, cfo_max]` cycles/sample.
    pub cfo_max: f64,
    /// Phases are uniform in `[-phase_max, phase_max]`.
    pub phase_max: f64,
    /// Jitter standard deviations are uniform in `[0, jitter_max]`.
    pub jitter_max: f64,
    pub max_taps: usize,
    /// Largest magnitude of a secondary tap relative to the first.
    pub echo_max: f64,
    pub rolloff: f64,
}

impl Default for ImpairmentRanges {
    fn default() -> Self {
        ImpairmentRanges {
            amplitude: (0.8, 1.2),
            cfo_max: 5e-4,
            phase_max: PI / 6.0,
            jitter_max: 0.05,
            max_taps: 3,
            echo_max: 0.3,
            rolloff: 0.35,
        }
    }
}

impl ImpairmentRanges {
    /// Identity channel on every draw.
    pub fn none() -> Self {
        ImpairmentRanges {
            amplitude: (1.0, 1.0),
            cfo_max: 0.0,
            phase_max: 0.0,
            jitter_max: 0.0,
            max_taps: 1,
            echo_max: 0.0,
            rolloff: 0.35,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelParams {
        let uniform = |rng: &mut R, lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let amplitude = uniform(rng, self.amplitude.0, self.amplitude.1);
        let cfo = uniform(rng, -self.cfo_max, self.cfo_max);
        let phase = uniform(rng, -self.phase_max, self.phase_max);
        let jitter_sigma = uniform(rng, 0.0, self.jitter_max);
        let timing_offset = rng.gen_range(0.0..1.0);
        let n = rng.gen_range(1..=self.max_taps.max(1));
        let mut taps = vec![Complex64::new(1.0, 0.0)];
        for _ in 1..n {
            let mag = uniform(rng, 0.0, self.echo_max);
            taps.push(Complex64::from_polar(mag, rng.gen_range(0.0..2.0 * PI)));
        }
        normalize_taps(&mut taps);
        ChannelParams {
            amplitude,
            cfo,
            phase,
            jitter_sigma,
            timing_offset,
            taps,
            rolloff: self.rolloff,
        }
    }

    fn validate(&self, errs: &mut Vec<String>) {
        let (lo, hi) = self.amplitude;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            errs.push("amplitude range must satisfy 0 < lo <= hi".into());
        }
        for (name, v) in [
            ("cfo_max", self.cfo_max),
            ("phase_max", self.phase_max),
            ("jitter_max", self.jitter_max),
            ("echo_max", self.echo_max),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be a non-negative number"));
            }
        }
        if self.max_taps == 0 {
            errs.push("max_taps must be at least 1".into());
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            errs.push("rolloff must lie in (0, 1]".into());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Samples per frame.
    pub d: usize,
    pub shift: usize,
    /// Samples per symbol.
    pub sps: usize,
    pub snr_grid: Vec<i16>,
    pub frames_per_class_per_snr: usize,
    /// Frames cut from each underlying waveform.
    pub frames_per_waveform: usize,
    pub seed: u64,
    /// Threads used for synthesis; the output does not depend on it.
    pub workers: usize,
    pub impairments: ImpairmentRanges,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            d: 128,
            shift: 64,
            sps: 8,
            snr_grid: (-10..=9).map(|i| 2 * i).collect(),
            frames_per_class_per_snr: 100,
            frames_per_waveform: 4,
            seed: 0,
            workers: 1,
            impairments: ImpairmentRanges::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.d == 0 {
            errs.push("d must be positive".into());
        }
        if self.shift == 0 || self.shift > self.d {
            errs.push("shift must lie in [1, d]".into());
        }
        if self.sps < 2 {
            errs.push("sps must be at least 2".into());
        }
        if self.snr_grid.is_empty() {
            errs.push("snr_grid must be non-empty".into());
        }
        if self.snr_grid.windows(2).any(|w| w[0] >= w[1]) {
            errs.push("snr_grid must be strictly increasing".into());
        }
        if self.frames_per_class_per_snr == 0 {
            errs.push("frames_per_class_per_snr must be positive".into());
        }
        if self.frames_per_waveform == 0 {
            errs.push("frames_per_waveform must be positive".into());
        }
        if self.workers == 0 {
            errs.push("workers must be positive".into());
        }
        self.impairments.validate(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Waveform length that yields `frames_per_waveform` windows.
    pub fn waveform_len(&self) -> usize {
        self.d + (self.frames_per_waveform - 1) * self.shift
    }

    /// One-sided occupied bandwidth of the pulse over the sampling rate.
    pub fn bandwidth_ratio(&self) -> f64 {
        (1.0 + self.impairments.rolloff) / (2.0 * self.sps as f64)
    }
}

/// One labeled frame: `iq` holds the in-phase row then the quadrature row.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameExample {
    pub iq: Vec<f32>,
    pub label: ModType,
    pub snr_db: i16,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub sps: Option<usize>,
    pub bandwidth_ratio: Option<f64>,
}

/// Frames stored column-wise: `iq` is `len x 2d`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub d: usize,
    pub snr_grid: Vec<i16>,
    pub iq: Vec<f32>,
    pub labels: Vec<ModType>,
    pub snrs: Vec<i16>,
    pub meta: DatasetMeta,
}

impl LabeledDataset {
    pub fn empty(d: usize, snr_grid: Vec<i16>) -> Self {
        LabeledDataset {
            d,
            snr_grid,
            iq: Vec::new(),
            labels: Vec::new(),
            snrs: Vec::new(),
            meta: DatasetMeta::default(),
        }
    }

    pub fn from_frames(d: usize, snr_grid: Vec<i16>, frames: Vec<FrameExample>) -> Result<Self> {
        let mut ds = LabeledDataset::empty(d, snr_grid);
        for f in frames {
            ds.push(f)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, f: FrameExample) -> Result<()> {
        if f.iq.len() != 2 * self.d {
            return Err(Error::Shape(format!(
                "frame has {} values, expected {}",
                f.iq.len(),
                2 * self.d
            )));
        }
        self.iq.extend_from_slice(&f.iq);
        self.labels.push(f.label);
        self.snrs.push(f.snr_db);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn frame_iq(&self, i: usize) -> &[f32] {
        &self.iq[i * 2 * self.d..(i + 1) * 2 * self.d]
    }

    pub fn frame(&self, i: usize) -> FrameExample {
        FrameExample {
            iq: self.frame_iq(i).to_vec(),
            label: self.labels[i],
            snr_db: self.snrs[i],
        }
    }

    /// Checks internal consistency: lengths, finite values, SNR tags on
    /// the grid.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.iq.len() != self.len() * 2 * self.d || self.snrs.len() != self.len() {
            errs.push("column lengths disagree".to_string());
        }
        if self.iq.iter().any(|v| !v.is_finite()) {
            errs.push("non-finite sample value".to_string());
        }
        if let Some(s) = self.snrs.iter().find(|s| !self.snr_grid.contains(s)) {
            errs.push(format!("frame SNR {s} dB is not on the grid"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Frame indices per (class, SNR) cell.
    pub fn cells(&self) -> BTreeMap<(ModType, i16), Vec<usize>> {
        let mut out: BTreeMap<_, Vec<usize>> = BTreeMap::new();
        for i in 0..self.len() {
            out.entry((self.labels[i], self.snrs[i])).or_default().push(i);
        }
        out
    }

    pub fn batch(&self, indices: &[usize]) -> FrameBatch {
        let w = 2 * self.d;
        let mut x = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            x.extend_from_slice(self.frame_iq(i));
        }
        FrameBatch {
            d: self.d,
            x,
            labels: indices.iter().map(|&i| self.labels[i].label()).collect(),
            snrs: indices.iter().map(|&i| self.snrs[i]).collect(),
        }
    }

    pub fn full_batch(&self) -> FrameBatch {
        FrameBatch {
            d: self.d,
            x: self.iq.clone(),
            labels: self.labels.iter().map(|m| m.label()).collect(),
            snrs: self.snrs.clone(),
        }
    }
}

/// Contiguous frames with integer labels, the shape models consume.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBatch {
    pub d: usize,
    /// `len x 2d`, each frame the in-phase row then the quadrature row.
    pub x: Vec<f32>,
    pub labels: Vec<usize>,
    pub snrs: Vec<i16>,
}

impl FrameBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.x[i * 2 * self.d..(i + 1) * 2 * self.d]
    }

    pub fn gather(&self, indices: &[usize]) -> FrameBatch {
        let mut x = Vec::with_capacity(indices.len() * 2 * self.d);
        for &i in indices {
            x.extend_from_slice(self.frame(i));
        }
        FrameBatch {
            d: self.d,
            x,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            snrs: indices.iter().map(|&i| self.snrs[i]).collect(),
        }
    }

    pub fn by_snr(&self) -> BTreeMap<i16, FrameBatch> {
        let mut idx: BTreeMap<i16, Vec<usize>> = BTreeMap::new();
        for (i, &s) in self.snrs.iter().enumerate() {
            idx.entry(s).or_default().push(i);
        }
        idx.into_iter().map(|(s, v)| (s, self.gather(&v))).collect()
    }

    /// Keeps the listed sample positions, in the given order, from every
    /// frame.
    pub fn keep_samples(&self, keep: &[usize]) -> Result<FrameBatch> {
        self.keep_samples_with(keep.len(), |_| keep)
    }

    /// Keeps `k` positions per frame chosen by `select(frame_index)`.
    pub fn keep_samples_with<'a>(
        &'a self,
        k: usize,
        select: impl Fn(usize) -> &'a [usize],
    ) -> Result<FrameBatch> {
        let d = self.d;
        let mut x = Vec::with_capacity(self.len() * 2 * k);
        for i in 0..self.len() {
            let keep = select(i);
            if keep.len() != k {
                return Err(Error::Shape(format!(
                    "frame {i} keeps {} samples, expected {k}",
                    keep.len()
                )));
            }
            if let Some(&bad) = keep.iter().find(|&&j| j >= d) {
                return Err(Error::InvalidInput(format!(
                    "sample index {bad} outside [0, {d})"
                )));
            }
            let f = self.frame(i);
            x.extend(keep.iter().map(|&j| f[j]));
            x.extend(keep.iter().map(|&j| f[d + j]));
        }
        Ok(FrameBatch {
            d: k,
            x,
            labels: self.labels.clone(),
            snrs: self.snrs.clone(),
        })
    }
}

/// Index sets into a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Within every (class, SNR) cell: a `test_fraction` share goes to
    /// test, then a `val_fraction` share of the rest to validation.
    pub fn stratified(
        ds: &LabeledDataset,
        test_fraction: f64,
        val_fraction: f64,
        seed: u64,
    ) -> Result<Splits> {
        for (name, f) in [("test_fraction", test_fraction), ("val_fraction", val_fraction)] {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1)")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Splits {
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for (_, mut idx) in ds.cells() {
            idx.shuffle(&mut rng);
            let nt = (idx.len() as f64 * test_fraction).round() as usize;
            let nv = ((idx.len() - nt) as f64 * val_fraction).round() as usize;
            s.test.extend_from_slice(&idx[..nt]);
            s.val.extend_from_slice(&idx[nt..nt + nv]);
            s.train.extend_from_slice(&idx[nt + nv..]);
        }
        s.train.sort_unstable();
        s.val.sort_unstable();
        s.test.sort_unstable();
        Ok(s)
    }

    /// Train and validation together: everything the selection side sees.
    pub fn training_side(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.train.iter().chain(&self.val).copied().collect();
        v.sort_unstable();
        v
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one underlying waveform; independent of scheduling.
pub fn waveform_seed(seed: u64, m: ModType, snr_db: i16, index: u64) -> u64 {
    let mut z = splitmix(seed);
    z = splitmix(z ^ m.label() as u64);
    z = splitmix(z ^ snr_db as u16 as u64);
    splitmix(z ^ index)
}

/// A noiseless waveform and the noise the dataset adds to it.
#[derive(Clone, Debug)]
pub struct WaveformDraw {
    pub clean: Vec<Complex64>,
    pub noise: Vec<Complex64>,
    pub params: ChannelParams,
}

impl WaveformDraw {
    pub fn noisy(&self) -> Vec<Complex64> {
        self.clean.iter().zip(&self.noise).map(|(a, b)| a + b).collect()
    }
}

/// Synthesizes waveform `index` of the (`m`, `snr_db`) cell.
pub fn draw_waveform(cfg: &GenConfig, m: ModType, snr_db: i16, index: u64) -> Result<WaveformDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(waveform_seed(cfg.seed, m, snr_db, index));
    let params = cfg.impairments.draw(&mut rng);
    let len = cfg.waveform_len();
    let clean = if m.is_analog() {
        let margin = 2 * cfg.sps;
        let source = analog_source(len + 2 * margin, cfg.sps, &mut rng);
        let y = modulate_analog(m, &source, &params, cfg.sps, &mut rng)?;
        y[margin..margin + len].to_vec()
    } else {
        let bits = m.bits_per_symbol().expect("digital");
        let symbols = len.div_ceil(cfg.sps) + 2 * PULSE_SPAN;
        let levels: Vec<u32> = (0..symbols).map(|_| rng.gen_range(0..1u32 << bits)).collect();
        let points = map_symbols(&levels, m)?;
        let y = if m.is_fsk() {
            fsk_and_impair(&points, m == ModType::Cpfsk, &params, cfg.sps, &mut rng)?
        } else {
            shape_and_impair(&points, &params, cfg.sps, &mut rng)?
        };
        let start = PULSE_SPAN * cfg.sps;
        y[start..start + len].to_vec()
    };
    let noise = noise_realization(&clean, snr_db as f64, &mut rng)?;
    Ok(WaveformDraw {
        clean,
        noise,
        params,
    })
}

/// Exactly `frames_per_class_per_snr` frames per (class, SNR) cell, ordered
/// by SNR, then class, then waveform.
pub fn generate_dataset(cfg: &GenConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let fpw = cfg.frames_per_waveform;
    let per_cell = cfg.frames_per_class_per_snr;
    let mut jobs = Vec::new();
    for &snr in &cfg.snr_grid {
        for m in ModType::ALL {
            for w in 0..per_cell.div_ceil(fpw) {
                jobs.push((snr, m, w, fpw.min(per_cell - w * fpw)));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let frames: Vec<Vec<Vec<f32>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(snr, m, w, take)| -> Result<Vec<Vec<f32>>> {
                let draw = draw_waveform(cfg, m, snr, w as u64)?;
                let mut f = frame_windows(&draw.noisy(), cfg.d, cfg.shift)?;
                f.truncate(take);
                Ok(f)
            })
            .collect::<Result<_>>()
    })?;
    let mut ds = LabeledDataset::empty(cfg.d, cfg.snr_grid.clone());
    ds.meta = DatasetMeta {
        sps: Some(cfg.sps),
        bandwidth_ratio: Some(cfg.bandwidth_ratio()),
    };
    for (&(snr, m, _, _), fs) in jobs.iter().zip(frames) {
        for iq in fs {
            ds.push(FrameExample {
                iq,
                label: m,
                snr_db: snr,
            })?;
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig {
            d: 32,
            shift: 16,
            snr_grid: vec![0, 10],
            frames_per_class_per_snr: 7,
            frames_per_waveform: 3,
            seed: 9,
            ..GenConfig::default()
        }
    }

    #[test]
    fn balanced_and_tagged() {
        let ds = generate_dataset(&small()).unwrap();
        assert_eq!(ds.len(), 10 * 2 * 7);
        let cells = ds.cells();
        assert_eq!(cells.len(), 20);
        assert!(cells.values().all(|v| v.len() == 7));
        ds.validate().unwrap();
        assert_eq!(ds.meta.bandwidth_ratio, Some(1.35 / 16.0));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let a = generate_dataset(&small()).unwrap();
        let b = generate_dataset(&GenConfig {
            workers: 3,
            ..small()
        })
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs_are_itemized() {
        let cfg = GenConfig {
            shift: 0,
            snr_grid: vec![4, 2],
            ..small()
        };
        match generate_dataset(&cfg) {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn splits_are_disjoint_and_stratified() {
        let ds = generate_dataset(&GenConfig {
            frames_per_class_per_snr: 8,
            ..small()
        })
        .unwrap();
        let s = Splits::stratified(&ds, 0.25, 0.25, 1).unwrap();
        assert_eq!(s.test.len(), 20 * 2);
        assert_eq!(s.val.len(), 20 * 2);
        assert_eq!(s.train.len(), 20 * 4);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
    }

    #[test]
    fn keep_samples_reorders_rows() {
        let b = FrameBatch {
            d: 4,
            x: vec![0., 1., 2., 3., 10., 11., 12., 13.],
            labels: vec![2],
            snrs: vec![0],
        };
        let r = b.keep_samples(&[1, 3]).unwrap();
        assert_eq!(r.x, vec![1., 3., 11., 13.]);
        assert_eq!(r.d, 2);
        assert!(b.keep_samples(&[4]).is_err());
    }
}
