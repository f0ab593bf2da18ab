//! Synthetic I/Q frames for ten modulation classes under a randomized
//! channel: pulse shaping, multipath, timing and carrier offsets, phase
//! jitter and white noise at a chosen SNR.

pub mod analog;
pub mod channel;
pub mod dataset;
pub mod frames;
pub mod modulation;
pub mod noise;

pub use analog::{analog_source, dsb_modulate, fm_modulate, modulate_analog, synth_analog, FM_DEVIATION};
pub use channel::{
    fractional_delay, fsk_and_impair, fsk_baseband, normalize_taps, rrc_taps, shape_and_impair,
    ChannelParams, PULSE_SPAN,
};
pub use dataset::{
    draw_waveform, generate_dataset, waveform_seed, DatasetMeta, FrameBatch, FrameExample,
    GenConfig, ImpairmentRanges, LabeledDataset, Splits, WaveformDraw,
};
pub use frames::{frame_count, frame_windows};
pub use modulation::{map_symbols, ModType};
pub use noise::{add_noise, mean_power, noise_realization};
