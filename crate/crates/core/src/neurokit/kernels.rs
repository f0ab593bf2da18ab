//! Layer kernels shared by the full forward/backward tape and the
//! incremental masked evaluator. Sequence tensors are `[c][b][l]`, flat
//! tensors `[b][f]`.

use super::scalar::{gemm, MatRef, Scalar};

pub(crate) const BN_EPS: f64 = 1e-5;

/// Left padding of a "same" convolution.
pub(crate) fn same_pad(width: usize) -> usize {
    (width - 1) / 2
}

/// Column matrix `[(cin*width)][batch*olen]` for output positions
/// `[o0, o0+olen)` of a length-`len` sequence. `x` is a slab `[c][b][slen]`
/// holding global positions `[s0, s0+slen)`; positions outside `[0, len)`
/// read as zero padding.
#[allow(clippy::too_many_arguments)]
pub(crate) fn im2col<T: Scalar>(
    x: &[T],
    cin: usize,
    batch: usize,
    slen: usize,
    s0: usize,
    len: usize,
    width: usize,
    o0: usize,
    olen: usize,
) -> Vec<T> {
    let pad = same_pad(width) as isize;
    let n = batch * olen;
    let mut cols = vec![T::zero(); cin * width * n];
    for c in 0..cin {
        for kk in 0..width {
            let row = &mut cols[(c * width + kk) * n..(c * width + kk + 1) * n];
            let shift = kk as isize - pad;
            for b in 0..batch {
                let src = &x[(c * batch + b) * slen..(c * batch + b + 1) * slen];
                let dst = &mut row[b * olen..(b + 1) * olen];
                for (o, d) in dst.iter_mut().enumerate() {
                    let g = (o0 + o) as isize + shift;
                    if g >= 0 && (g as usize) < len {
                        let local = g as usize - s0;
                        debug_assert!(local < slen, "im2col read outside slab");
                        *d = src[local];
                    }
                }
            }
        }
    }
    cols
}

/// `weight [cout][cin*width] x cols + bias` -> `[cout][n]`.
pub(crate) fn conv_apply<T: Scalar>(
    cols: &[T],
    weight: &[T],
    bias: &[T],
    cout: usize,
    n: usize,
) -> Vec<T> {
    let k = weight.len() / cout;
    let mut out = vec![T::zero(); cout * n];
    for (o, row) in out.chunks_mut(n.max(1)).enumerate().take(cout) {
        row.fill(bias[o]);
    }
    gemm(
        T::one(),
        MatRef::new(weight, cout, k),
        MatRef::new(cols, k, n),
        T::one(),
        &mut out,
    );
    out
}

/// Scatter column gradients back onto a full-length input `[c][b][len]`.
pub(crate) fn col2im<T: Scalar>(
    dcols: &[T],
    cin: usize,
    batch: usize,
    len: usize,
    width: usize,
) -> Vec<T> {
    let pad = same_pad(width) as isize;
    let n = batch * len;
    let mut dx = vec![T::zero(); cin * n];
    for c in 0..cin {
        for kk in 0..width {
            let row = &dcols[(c * width + kk) * n..(c * width + kk + 1) * n];
            let shift = kk as isize - pad;
            for b in 0..batch {
                let dst = &mut dx[(c * batch + b) * len..(c * batch + b + 1) * len];
                let src = &row[b * len..(b + 1) * len];
                for (o, &g_val) in src.iter().enumerate() {
                    let g = o as isize + shift;
                    if g >= 0 && (g as usize) < len {
                        dst[g as usize] += g_val;
                    }
                }
            }
        }
    }
    dx
}

pub(crate) fn relu_inplace<T: Scalar>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Max pooling for output positions `[o0, o0+olen)` from a slab holding
/// global input positions `[s0, s0+slen)`. Returns values and, per output,
/// the winning global input position.
#[allow(clippy::too_many_arguments)]
pub(crate) fn maxpool<T: Scalar>(
    x: &[T],
    channels: usize,
    batch: usize,
    slen: usize,
    s0: usize,
    width: usize,
    o0: usize,
    olen: usize,
) -> (Vec<T>, Vec<u32>) {
    let mut out = vec![T::zero(); channels * batch * olen];
    let mut arg = vec![0u32; channels * batch * olen];
    for cb in 0..channels * batch {
        let src = &x[cb * slen..(cb + 1) * slen];
        for o in 0..olen {
            let start = (o0 + o) * width;
            let mut best = start;
            let mut best_v = src[start - s0];
            for g in start + 1..start + width {
                if src[g - s0] > best_v {
                    best_v = src[g - s0];
                    best = g;
                }
            }
            out[cb * olen + o] = best_v;
            arg[cb * olen + o] = best as u32;
        }
    }
    (out, arg)
}

/// Inference batchnorm with running statistics over `[c][rest]`.
pub(crate) fn batchnorm_infer<T: Scalar>(
    x: &mut [T],
    channels: usize,
    mean: &[T],
    var: &[T],
    gamma: &[T],
    beta: &[T],
) {
    let per = x.len() / channels;
    let eps = T::from_f64(BN_EPS);
    for c in 0..channels {
        let scale = gamma[c] / (var[c] + eps).sqrt();
        let shift = beta[c] - mean[c] * scale;
        for v in &mut x[c * per..(c + 1) * per] {
            *v = *v * scale + shift;
        }
    }
}

/// `[c][b][l]` -> `[b][c*l]`.
pub(crate) fn flatten_seq<T: Scalar>(x: &[T], channels: usize, batch: usize, len: usize) -> Vec<T> {
    let f = channels * len;
    let mut out = vec![T::zero(); batch * f];
    for c in 0..channels {
        for b in 0..batch {
            out[b * f + c * len..b * f + (c + 1) * len]
                .copy_from_slice(&x[(c * batch + b) * len..(c * batch + b + 1) * len]);
        }
    }
    out
}

pub(crate) fn unflatten_seq<T: Scalar>(
    d: &[T],
    channels: usize,
    batch: usize,
    len: usize,
) -> Vec<T> {
    let f = channels * len;
    let mut out = vec![T::zero(); batch * f];
    for c in 0..channels {
        for b in 0..batch {
            out[(c * batch + b) * len..(c * batch + b + 1) * len]
                .copy_from_slice(&d[b * f + c * len..b * f + (c + 1) * len]);
        }
    }
    out
}

/// `x [b][in] x weight [in][out] + bias`.
pub(crate) fn dense<T: Scalar>(
    x: &[T],
    weight: &[T],
    bias: &[T],
    batch: usize,
    inputs: usize,
    outputs: usize,
) -> Vec<T> {
    let mut out = Vec::with_capacity(batch * outputs);
    for _ in 0..batch {
        out.extend_from_slice(bias);
    }
    gemm(
        T::one(),
        MatRef::new(x, batch, inputs),
        MatRef::new(weight, inputs, outputs),
        T::one(),
        &mut out,
    );
    out
}

pub(crate) fn softmax_rows<T: Scalar>(x: &mut [T], width: usize) {
    for row in x.chunks_mut(width) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v = *v / s;
        }
    }
}

pub(crate) struct LstmWeights<'a, T> {
    pub w_ih: &'a [T],
    pub w_hh: &'a [T],
    pub bias: &'a [T],
    pub inputs: usize,
    pub hidden: usize,
}

/// Per-step history kept for backpropagation or for resuming a pass.
#[derive(Clone, Debug, Default)]
pub(crate) struct LstmRecord<T> {
    /// Step inputs `[t][b][in]` (only when gates are recorded).
    pub xs: Vec<T>,
    /// Activated gates `[t][b][4h]`, order i, f, g, o.
    pub gates: Vec<T>,
    /// Hidden states `[t+1][b][h]`, entry 0 is the initial state.
    pub hs: Vec<T>,
    /// Cell states `[t+1][b][h]`.
    pub cs: Vec<T>,
}

/// Runs steps `[start, end)` updating `h`/`c` in place. `fill_x(t, buf)`
/// writes the `[b][in]` step input.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lstm_steps<T: Scalar>(
    w: &LstmWeights<T>,
    batch: usize,
    start: usize,
    end: usize,
    mut fill_x: impl FnMut(usize, &mut [T]),
    h: &mut [T],
    c: &mut [T],
    mut record: Option<&mut LstmRecord<T>>,
    keep_gates: bool,
) {
    let hid = w.hidden;
    let g4 = 4 * hid;
    let mut xt = vec![T::zero(); batch * w.inputs];
    let mut z = vec![T::zero(); batch * g4];
    for t in start..end {
        fill_x(t, &mut xt);
        for b in 0..batch {
            z[b * g4..(b + 1) * g4].copy_from_slice(w.bias);
        }
        gemm(
            T::one(),
            MatRef::new(&xt, batch, w.inputs),
            MatRef::new(w.w_ih, w.inputs, g4),
            T::one(),
            &mut z,
        );
        gemm(
            T::one(),
            MatRef::new(h, batch, hid),
            MatRef::new(w.w_hh, hid, g4),
            T::one(),
            &mut z,
        );
        for b in 0..batch {
            let zb = &mut z[b * g4..(b + 1) * g4];
            for u in 0..hid {
                let i = zb[u].sigmoid();
                let f = zb[hid + u].sigmoid();
                let g = zb[2 * hid + u].tanh_act();
                let o = zb[3 * hid + u].sigmoid();
                let cell = f * c[b * hid + u] + i * g;
                c[b * hid + u] = cell;
                h[b * hid + u] = o * cell.tanh_act();
                zb[u] = i;
                zb[hid + u] = f;
                zb[2 * hid + u] = g;
                zb[3 * hid + u] = o;
            }
        }
        if let Some(rec) = record.as_deref_mut() {
            if keep_gates {
                rec.xs.extend_from_slice(&xt);
                rec.gates.extend_from_slice(&z);
            }
            rec.hs.extend_from_slice(h);
            rec.cs.extend_from_slice(c);
        }
    }
}
