//! Accuracy of a trained model with sample positions zeroed.
//!
//! [`Model::removal_accuracies`] scores many single-position removals on
//! top of a shared permanent mask. Zeroing position `j` only perturbs a
//! window of each convolutional feature map, and an LSTM only from step
//! `j` on, so each candidate recomputes that window and resumes the
//! recurrence from cached base states instead of re-running the network.

use rayon::prelude::*;

use super::kernels::{self, LstmRecord};
use super::layers::{LayerSpec, Op, Shape};
use super::model::{gather_step, Model};
use super::scalar::Scalar;
use crate::error::{Error, Result};

const EVAL_CHUNK: usize = 256;

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

struct Trace<T> {
    /// `acts[i]` is the input of op `i`; the last entry is the output.
    acts: Vec<Vec<T>>,
    lstm: Vec<Option<LstmRecord<T>>>,
}

struct Window<T> {
    lo: usize,
    hi: usize,
    /// `[c][b][hi-lo]`
    data: Vec<T>,
}

enum Stage<T> {
    Win(Window<T>),
    Full(Vec<T>),
    /// The perturbation vanished; the output equals the base output.
    Clean,
}

impl<T: Scalar> Model<T> {
    fn seq_input(&self) -> Result<(usize, usize)> {
        match self.input_shape() {
            Shape::Seq { channels, len } => Ok((channels, len)),
            Shape::Flat(_) => Err(Error::Shape(
                "masking needs a sequence-shaped input".into(),
            )),
        }
    }

    fn check_mask(&self, masked: &[usize]) -> Result<()> {
        let (_, len) = self.seq_input()?;
        if let Some(&bad) = masked.iter().find(|&&j| j >= len) {
            return Err(Error::InvalidInput(format!(
                "masked index {bad} outside [0, {len})"
            )));
        }
        Ok(())
    }

    fn masked_copy(&self, frames: &[T], n: usize, masked: &[usize]) -> Vec<T> {
        let mut x = frames[..n * self.input_shape().size()].to_vec();
        if let Shape::Seq { channels, len } = self.input_shape() {
            for ex in x.chunks_mut(channels * len) {
                for c in 0..channels {
                    for &j in masked {
                        ex[c * len + j] = T::zero();
                    }
                }
            }
        }
        x
    }

    /// Inference probabilities `[n][classes]` with `masked` positions zeroed
    /// in a copy of every example.
    pub fn predict_masked(&self, frames: &[T], n: usize, masked: &[usize]) -> Result<Vec<T>> {
        self.check_mask(masked)?;
        let size = self.input_shape().size();
        if frames.len() != n * size {
            return Err(Error::Shape(format!(
                "{} values do not form {n} examples of {size}",
                frames.len()
            )));
        }
        let mut out = Vec::with_capacity(n * self.output_width());
        for start in (0..n).step_by(EVAL_CHUNK) {
            let b = EVAL_CHUNK.min(n - start);
            let x = self.masked_copy(&frames[start * size..(start + b) * size], b, masked);
            out.extend(self.forward(&x, b)?);
        }
        Ok(out)
    }

    /// Fraction of argmax predictions equal to `labels` with `masked`
    /// positions zeroed (both I and Q rows). Inputs are not modified.
    pub fn evaluate(&self, frames: &[T], labels: &[usize], masked: &[usize]) -> Result<f64> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidInput("no examples to evaluate".into()));
        }
        let probs = self.predict_masked(frames, n, masked)?;
        let k = self.output_width();
        let correct = probs
            .chunks(k)
            .zip(labels)
            .filter(|(row, &y)| argmax(row) == y)
            .count();
        Ok(correct as f64 / n as f64)
    }

    /// For each candidate `j`, the accuracy of
    /// `evaluate(frames, labels, permanent ∪ {j})`.
    pub fn removal_accuracies(
        &self,
        frames: &[T],
        labels: &[usize],
        permanent: &[usize],
        candidates: &[usize],
    ) -> Result<Vec<f64>> {
        self.check_mask(permanent)?;
        self.check_mask(candidates)?;
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidInput("no examples to evaluate".into()));
        }
        let size = self.input_shape().size();
        if frames.len() != n * size {
            return Err(Error::Shape("frame buffer size".into()));
        }
        let k = self.output_width();
        let mut correct = vec![0usize; candidates.len()];
        for start in (0..n).step_by(EVAL_CHUNK) {
            let b = EVAL_CHUNK.min(n - start);
            let x = self.masked_copy(&frames[start * size..(start + b) * size], b, permanent);
            let trace = self.trace(self.to_internal(&x, b), b);
            let ys = &labels[start..start + b];
            let base_out = trace.acts.last().expect("output recorded");
            let counts: Vec<usize> = candidates
                .par_iter()
                .map(|&j| {
                    let hits = |probs: &[T]| {
                        probs
                            .chunks(k)
                            .zip(ys)
                            .filter(|(row, &y)| argmax(row) == y)
                            .count()
                    };
                    match self.perturbed_output(&trace, b, j) {
                        Some(probs) => hits(&probs),
                        None => hits(base_out),
                    }
                })
                .collect();
            for (c, v) in correct.iter_mut().zip(counts) {
                *c += v;
            }
        }
        Ok(correct.into_iter().map(|c| c as f64 / n as f64).collect())
    }

    fn trace(&self, input: Vec<T>, batch: usize) -> Trace<T> {
        let p = &self.params.trainable;
        let mut acts = Vec::with_capacity(self.ops.len() + 1);
        let mut lstm = Vec::with_capacity(self.ops.len());
        let mut skips: Vec<Vec<T>> = Vec::new();
        let mut act = input;
        for (i, op) in self.ops.iter().enumerate() {
            acts.push(act.clone());
            let in_shape = self.op_input_shape(i);
            let mut rec = None;
            act = match op {
                Op::ResBegin { .. } => {
                    skips.push(act.clone());
                    act
                }
                Op::ResEnd { .. } => {
                    let s = skips.pop().expect("balanced residual markers");
                    for (a, b) in act.iter_mut().zip(&s) {
                        *a += *b;
                    }
                    act
                }
                Op::Layer { idx, spec } => match (spec, in_shape) {
                    (
                        LayerSpec::LstmCellLayer { inputs, hidden },
                        Shape::Seq { channels, len },
                    ) => {
                        let w = self.lstm_weights(*idx, *inputs, *hidden);
                        let mut h = vec![T::zero(); batch * hidden];
                        let mut c = vec![T::zero(); batch * hidden];
                        let mut r = LstmRecord {
                            hs: h.clone(),
                            cs: c.clone(),
                            ..Default::default()
                        };
                        kernels::lstm_steps(
                            &w,
                            batch,
                            0,
                            len,
                            |t, buf| gather_step(&act, channels, batch, len, t, buf),
                            &mut h,
                            &mut c,
                            Some(&mut r),
                            false,
                        );
                        rec = Some(r);
                        h
                    }
                    _ => self.infer_flat_or_seq(*idx, spec, in_shape, act, batch, p),
                },
            };
            lstm.push(rec);
        }
        acts.push(act);
        Trace { acts, lstm }
    }

    /// Inference for every layer kind except the LSTM.
    fn infer_flat_or_seq(
        &self,
        idx: usize,
        spec: &LayerSpec,
        in_shape: Shape,
        mut act: Vec<T>,
        batch: usize,
        p: &super::model::TensorStore<T>,
    ) -> Vec<T> {
        match (spec, in_shape) {
            (
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    width,
                },
                Shape::Seq { len, .. },
            ) => {
                let cols = kernels::im2col(&act, *in_channels, batch, len, 0, len, *width, 0, len);
                kernels::conv_apply(
                    &cols,
                    &p.get(idx, "weight").data,
                    &p.get(idx, "bias").data,
                    *out_channels,
                    batch * len,
                )
            }
            (LayerSpec::Relu, _) => {
                kernels::relu_inplace(&mut act);
                act
            }
            (LayerSpec::MaxPool1d { width }, Shape::Seq { channels, len }) => {
                kernels::maxpool(&act, channels, batch, len, 0, *width, 0, len / width).0
            }
            (LayerSpec::BatchNorm { channels }, _) => {
                self.bn_infer(idx, *channels, &mut act);
                act
            }
            (LayerSpec::Flatten, Shape::Seq { channels, len }) => {
                kernels::flatten_seq(&act, channels, batch, len)
            }
            (LayerSpec::Flatten, Shape::Flat(_)) => act,
            (LayerSpec::Dense { inputs, outputs }, _) => kernels::dense(
                &act,
                &p.get(idx, "weight").data,
                &p.get(idx, "bias").data,
                batch,
                *inputs,
                *outputs,
            ),
            (LayerSpec::Softmax, Shape::Flat(n)) => {
                kernels::softmax_rows(&mut act, n);
                act
            }
            _ => unreachable!("shapes validated at construction"),
        }
    }

    fn bn_infer(&self, idx: usize, channels: usize, x: &mut [T]) {
        let p = &self.params.trainable;
        kernels::batchnorm_infer(
            x,
            channels,
            &self.params.running.get(idx, "running_mean").data,
            &self.params.running.get(idx, "running_var").data,
            &p.get(idx, "gamma").data,
            &p.get(idx, "beta").data,
        );
    }

    /// Output probabilities with position `j` additionally zeroed, or `None`
    /// when the change cannot reach the output.
    fn perturbed_output(&self, trace: &Trace<T>, batch: usize, j: usize) -> Option<Vec<T>> {
        let p = &self.params.trainable;
        let (in_ch, _) = self.seq_input().ok()?;
        let mut stage = Stage::Win(Window {
            lo: j,
            hi: j + 1,
            data: vec![T::zero(); in_ch * batch],
        });
        let mut skips: Vec<(Stage<T>, usize)> = Vec::new();
        for (i, op) in self.ops.iter().enumerate() {
            let in_shape = self.op_input_shape(i);
            let base_in = &trace.acts[i];
            stage = match (stage, op) {
                (Stage::Clean, Op::Layer { .. }) if skips.is_empty() => return None,
                (Stage::Clean, Op::Layer { .. }) => Stage::Clean,
                (s, Op::ResBegin { .. }) => {
                    let copy = match &s {
                        Stage::Win(w) => Stage::Win(Window {
                            lo: w.lo,
                            hi: w.hi,
                            data: w.data.clone(),
                        }),
                        Stage::Full(v) => Stage::Full(v.clone()),
                        Stage::Clean => Stage::Clean,
                    };
                    skips.push((copy, i));
                    s
                }
                (s, Op::ResEnd { .. }) => {
                    let (skip, begin) = skips.pop().expect("balanced residual markers");
                    let base_skip = &trace.acts[begin];
                    residual_merge(s, skip, base_in, base_skip, in_shape, batch)
                }
                (Stage::Full(act), Op::Layer { idx, spec }) => match (spec, in_shape) {
                    (LayerSpec::LstmCellLayer { .. }, _) => {
                        unreachable!("sequence layers precede flat ones")
                    }
                    _ => Stage::Full(self.infer_flat_or_seq(*idx, spec, in_shape, act, batch, p)),
                },
                (Stage::Win(win), Op::Layer { idx, spec }) => {
                    let idx = *idx;
                    let Shape::Seq { channels, len } = in_shape else {
                        unreachable!("windows only live on sequence activations")
                    };
                    match spec {
                        LayerSpec::Conv1d {
                            in_channels,
                            out_channels,
                            width,
                        } => {
                            let pad = kernels::same_pad(*width);
                            let olo = win.lo.saturating_sub(width - 1 - pad);
                            let ohi = len.min(win.hi + pad);
                            let s0 = olo.saturating_sub(pad);
                            let s1 = len.min(ohi + width - 1 - pad);
                            let slab = build_slab(base_in, &win, channels, batch, len, s0, s1);
                            let cols = kernels::im2col(
                                &slab,
                                *in_channels,
                                batch,
                                s1 - s0,
                                s0,
                                len,
                                *width,
                                olo,
                                ohi - olo,
                            );
                            let data = kernels::conv_apply(
                                &cols,
                                &p.get(idx, "weight").data,
                                &p.get(idx, "bias").data,
                                *out_channels,
                                batch * (ohi - olo),
                            );
                            Stage::Win(Window {
                                lo: olo,
                                hi: ohi,
                                data,
                            })
                        }
                        LayerSpec::Relu => {
                            let mut w = win;
                            kernels::relu_inplace(&mut w.data);
                            Stage::Win(w)
                        }
                        LayerSpec::BatchNorm { channels } => {
                            let mut w = win;
                            self.bn_infer(idx, *channels, &mut w.data);
                            Stage::Win(w)
                        }
                        LayerSpec::MaxPool1d { width } => {
                            let out_len = len / width;
                            let olo = win.lo / width;
                            let ohi = out_len.min(win.hi.div_ceil(*width));
                            if olo >= ohi {
                                Stage::Clean
                            } else {
                                let (s0, s1) = (olo * width, ohi * width);
                                let slab = build_slab(base_in, &win, channels, batch, len, s0, s1);
                                let (data, _) = kernels::maxpool(
                                    &slab,
                                    channels,
                                    batch,
                                    s1 - s0,
                                    s0,
                                    *width,
                                    olo,
                                    ohi - olo,
                                );
                                Stage::Win(Window {
                                    lo: olo,
                                    hi: ohi,
                                    data,
                                })
                            }
                        }
                        LayerSpec::Flatten => {
                            let mut flat = trace.acts[i + 1].clone();
                            let f = channels * len;
                            let wl = win.hi - win.lo;
                            for c in 0..channels {
                                for b in 0..batch {
                                    flat[b * f + c * len + win.lo..b * f + c * len + win.hi]
                                        .copy_from_slice(
                                            &win.data[(c * batch + b) * wl..(c * batch + b + 1) * wl],
                                        );
                                }
                            }
                            Stage::Full(flat)
                        }
                        LayerSpec::LstmCellLayer { inputs, hidden } => {
                            let rec = trace.lstm[i].as_ref().expect("lstm states recorded");
                            let w = self.lstm_weights(idx, *inputs, *hidden);
                            let bh = batch * hidden;
                            let mut h = rec.hs[win.lo * bh..(win.lo + 1) * bh].to_vec();
                            let mut c = rec.cs[win.lo * bh..(win.lo + 1) * bh].to_vec();
                            let wl = win.hi - win.lo;
                            kernels::lstm_steps(
                                &w,
                                batch,
                                win.lo,
                                len,
                                |t, buf| {
                                    if t < win.hi {
                                        let off = t - win.lo;
                                        for b in 0..batch {
                                            for ch in 0..channels {
                                                buf[b * channels + ch] =
                                                    win.data[(ch * batch + b) * wl + off];
                                            }
                                        }
                                    } else {
                                        gather_step(base_in, channels, batch, len, t, buf);
                                    }
                                },
                                &mut h,
                                &mut c,
                                None,
                                false,
                            );
                            Stage::Full(h)
                        }
                        LayerSpec::Dense { .. }
                        | LayerSpec::Softmax
                        | LayerSpec::Residual { .. } => {
                            unreachable!("flat layer on a sequence activation")
                        }
                    }
                }
            };
        }
        match stage {
            Stage::Full(v) => Some(v),
            Stage::Clean => None,
            Stage::Win(_) => unreachable!("model output is flat"),
        }
    }
}

/// Copy of base positions `[s0, s1)` with the window overlaid.
fn build_slab<T: Scalar>(
    base: &[T],
    win: &Window<T>,
    channels: usize,
    batch: usize,
    len: usize,
    s0: usize,
    s1: usize,
) -> Vec<T> {
    let sl = s1 - s0;
    let wl = win.hi - win.lo;
    let mut out = vec![T::zero(); channels * batch * sl];
    let (olo, ohi) = (win.lo.max(s0), win.hi.min(s1));
    for cb in 0..channels * batch {
        let dst = &mut out[cb * sl..(cb + 1) * sl];
        dst.copy_from_slice(&base[cb * len + s0..cb * len + s1]);
        if olo < ohi {
            dst[olo - s0..ohi - s0]
                .copy_from_slice(&win.data[cb * wl + (olo - win.lo)..cb * wl + (ohi - win.lo)]);
        }
    }
    out
}

fn window_value<T: Scalar>(
    stage: &Stage<T>,
    base: &[T],
    cb: usize,
    len: usize,
    pos: usize,
) -> T {
    match stage {
        Stage::Win(w) if pos >= w.lo && pos < w.hi => w.data[cb * (w.hi - w.lo) + pos - w.lo],
        _ => base[cb * len + pos],
    }
}

fn residual_merge<T: Scalar>(
    body: Stage<T>,
    skip: Stage<T>,
    base_body: &[T],
    base_skip: &[T],
    shape: Shape,
    batch: usize,
) -> Stage<T> {
    match (&body, &skip) {
        (Stage::Full(_), _) | (_, Stage::Full(_)) => {
            let to_full = |s: Stage<T>, base: &[T]| match s {
                Stage::Full(v) => v,
                _ => base.to_vec(),
            };
            let mut a = to_full(body, base_body);
            let b = to_full(skip, base_skip);
            for (x, y) in a.iter_mut().zip(&b) {
                *x += *y;
            }
            Stage::Full(a)
        }
        (Stage::Clean, Stage::Clean) => Stage::Clean,
        _ => {
            let Shape::Seq { channels, len } = shape else {
                unreachable!("windows only live on sequence activations")
            };
            let bounds = |s: &Stage<T>| match s {
                Stage::Win(w) => Some((w.lo, w.hi)),
                _ => None,
            };
            let (lo, hi) = match (bounds(&body), bounds(&skip)) {
                (Some((a, b)), Some((c, d))) => (a.min(c), b.max(d)),
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => unreachable!("handled above"),
            };
            let wl = hi - lo;
            let mut data = vec![T::zero(); channels * batch * wl];
            for cb in 0..channels * batch {
                for pos in lo..hi {
                    data[cb * wl + pos - lo] = window_value(&body, base_body, cb, len, pos)
                        + window_value(&skip, base_skip, cb, len, pos);
                }
            }
            Stage::Win(Window { lo, hi, data })
        }
    }
}
