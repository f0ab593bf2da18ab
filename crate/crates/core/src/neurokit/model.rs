use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::kernels::{self, LstmRecord, LstmWeights, BN_EPS};
use super::layers::{compile, infer_shapes, LayerSpec, Op, Shape};
use super::scalar::{gemm, MatRef, Scalar};
use crate::error::{Error, Result};

/// Probability floor inside the cross-entropy log.
pub const LOG_CLIP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], v: T) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; shape.iter().product()],
        }
    }
}

/// (layer index, tensor name).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamKey {
    pub layer: usize,
    pub name: String,
}

impl ParamKey {
    pub fn new(layer: usize, name: &str) -> Self {
        ParamKey {
            layer,
            name: name.to_string(),
        }
    }
}

/// Keyed tensor collection; parameters and gradients share this type.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorStore<T> {
    pub tensors: BTreeMap<ParamKey, Tensor<T>>,
}

impl<T: Scalar> TensorStore<T> {
    pub fn get(&self, layer: usize, name: &str) -> &Tensor<T> {
        self.tensors
            .get(&ParamKey::new(layer, name))
            .unwrap_or_else(|| panic!("missing tensor {layer}.{name}"))
    }

    pub fn get_mut(&mut self, layer: usize, name: &str) -> &mut Tensor<T> {
        self.tensors
            .get_mut(&ParamKey::new(layer, name))
            .unwrap_or_else(|| panic!("missing tensor {layer}.{name}"))
    }

    pub fn insert(&mut self, layer: usize, name: &str, t: Tensor<T>) {
        self.tensors.insert(ParamKey::new(layer, name), t);
    }

    pub fn zeros_like(&self) -> Self {
        TensorStore {
            tensors: self
                .tensors
                .iter()
                .map(|(k, t)| (k.clone(), Tensor::zeros(&t.shape)))
                .collect(),
        }
    }

    pub fn is_congruent(&self, other: &Self) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|((ka, a), (kb, b))| ka == kb && a.shape == b.shape)
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .values()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    pub fn num_values(&self) -> usize {
        self.tensors.values().map(|t| t.data.len()).sum()
    }
}

/// Trainable tensors plus batchnorm running statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub trainable: TensorStore<T>,
    pub running: TensorStore<T>,
}

/// Batch statistics seen by one batchnorm layer during a training pass.
#[derive(Clone, Debug)]
pub struct BnBatchStats<T> {
    pub layer: usize,
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

/// Result of [`Model::loss_and_grad`].
#[derive(Clone, Debug)]
pub struct LossGrad<T> {
    pub loss: f64,
    pub grads: TensorStore<T>,
    pub bn_stats: Vec<BnBatchStats<T>>,
}

enum Cache<T> {
    None,
    Conv { cols: Vec<T> },
    Relu { out: Vec<T> },
    MaxPool { arg: Vec<u32>, in_len: usize },
    Bn { xhat: Vec<T>, inv_std: Vec<T> },
    Dense { input: Vec<T> },
    Lstm { rec: LstmRecord<T> },
    Softmax { out: Vec<T> },
}

/// A sequential network over a static op list.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    arch: Vec<LayerSpec>,
    input: Shape,
    pub(crate) ops: Vec<Op>,
    pub(crate) shapes: Vec<Shape>,
    pub params: ModelParams<T>,
}

impl<T: Scalar> Model<T> {
    /// Builds a model with randomly initialized parameters.
    pub fn new<R: Rng + ?Sized>(arch: Vec<LayerSpec>, input: Shape, rng: &mut R) -> Result<Self> {
        let ops = compile(&arch);
        let shapes = infer_shapes(&ops, input)?;
        match shapes.last() {
            Some(Shape::Flat(_)) => {}
            _ => {
                return Err(Error::Shape(
                    "architecture must end in a flat output".into(),
                ))
            }
        }
        let mut trainable = TensorStore::default();
        let mut running = TensorStore::default();
        for op in &ops {
            let Op::Layer { idx, spec } = op else { continue };
            let idx = *idx;
            match *spec {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    width,
                } => {
                    let fan_in = in_channels * width;
                    trainable.insert(
                        idx,
                        "weight",
                        he_normal(&[out_channels, fan_in], fan_in, rng),
                    );
                    trainable.insert(idx, "bias", Tensor::zeros(&[out_channels]));
                }
                LayerSpec::Dense { inputs, outputs } => {
                    trainable.insert(idx, "weight", he_normal(&[inputs, outputs], inputs, rng));
                    trainable.insert(idx, "bias", Tensor::zeros(&[outputs]));
                }
                LayerSpec::BatchNorm { channels } => {
                    trainable.insert(idx, "gamma", Tensor::filled(&[channels], T::one()));
                    trainable.insert(idx, "beta", Tensor::zeros(&[channels]));
                    running.insert(idx, "running_mean", Tensor::zeros(&[channels]));
                    running.insert(idx, "running_var", Tensor::filled(&[channels], T::one()));
                }
                LayerSpec::LstmCellLayer { inputs, hidden } => {
                    let bound = 1.0 / (hidden as f64).sqrt();
                    let u = Uniform::new_inclusive(-bound, bound);
                    let mut draw = |shape: &[usize]| Tensor {
                        shape: shape.to_vec(),
                        data: (0..shape.iter().product::<usize>())
                            .map(|_| T::from_f64(u.sample(rng)))
                            .collect(),
                    };
                    trainable.insert(idx, "w_ih", draw(&[inputs, 4 * hidden]));
                    trainable.insert(idx, "w_hh", draw(&[hidden, 4 * hidden]));
                    let mut bias = Tensor::zeros(&[4 * hidden]);
                    for v in &mut bias.data[hidden..2 * hidden] {
                        *v = T::one();
                    }
                    trainable.insert(idx, "bias", bias);
                }
                _ => {}
            }
        }
        Ok(Model {
            arch,
            input,
            ops,
            shapes,
            params: ModelParams { trainable, running },
        })
    }

    /// Rebuilds a model around existing parameters, checking their shapes.
    pub fn from_parts(arch: Vec<LayerSpec>, input: Shape, params: ModelParams<T>) -> Result<Self> {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let template = Model::<T>::new(arch, input, &mut rng)?;
        if !template.params.trainable.is_congruent(&params.trainable)
            || !template.params.running.is_congruent(&params.running)
        {
            return Err(Error::Shape(
                "parameter tensors do not match the architecture".into(),
            ));
        }
        Ok(Model { params, ..template })
    }

    pub fn arch(&self) -> &[LayerSpec] {
        &self.arch
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn output_width(&self) -> usize {
        self.shapes.last().map(Shape::size).unwrap_or(0)
    }

    pub(crate) fn op_input_shape(&self, i: usize) -> Shape {
        if i == 0 {
            self.input
        } else {
            self.shapes[i - 1]
        }
    }

    /// Converts example-major input `[b][...]` to the internal layout.
    pub(crate) fn to_internal(&self, x: &[T], batch: usize) -> Vec<T> {
        match self.input {
            Shape::Seq { channels, len } => kernels::unflatten_seq(x, channels, batch, len),
            Shape::Flat(_) => x.to_vec(),
        }
    }

    fn check_batch(&self, x: &[T], batch: usize) -> Result<()> {
        if x.len() != batch * self.input.size() {
            return Err(Error::Shape(format!(
                "batch of {} values is not {batch} x {:?}",
                x.len(),
                self.input
            )));
        }
        Ok(())
    }

    /// Inference pass on example-major input; returns `[b][out]`.
    pub fn forward(&self, x: &[T], batch: usize) -> Result<Vec<T>> {
        self.check_batch(x, batch)?;
        let internal = self.to_internal(x, batch);
        Ok(self.run(internal, batch, false, None).0)
    }

    /// Runs the op list on internal-layout input. In training mode
    /// batchnorm uses batch statistics and, with a tape, caches are kept.
    fn run(
        &self,
        mut act: Vec<T>,
        batch: usize,
        train: bool,
        mut tape: Option<&mut Vec<Cache<T>>>,
    ) -> (Vec<T>, Vec<BnBatchStats<T>>) {
        let mut skips: Vec<Vec<T>> = Vec::new();
        let mut stats = Vec::new();
        let p = &self.params.trainable;
        for (i, op) in self.ops.iter().enumerate() {
            let in_shape = self.op_input_shape(i);
            let mut cache = Cache::None;
            act = match op {
                Op::ResBegin { .. } => {
                    skips.push(act.clone());
                    act
                }
                Op::ResEnd { .. } => {
                    let skip = skips.pop().expect("balanced residual markers");
                    for (a, s) in act.iter_mut().zip(&skip) {
                        *a += *s;
                    }
                    act
                }
                Op::Layer { idx, spec } => {
                    let idx = *idx;
                    match (spec, in_shape) {
                        (
                            LayerSpec::Conv1d {
                                in_channels,
                                out_channels,
                                width,
                            },
                            Shape::Seq { len, .. },
                        ) => {
                            let cols = kernels::im2col(
                                &act,
                                *in_channels,
                                batch,
                                len,
                                0,
                                len,
                                *width,
                                0,
                                len,
                            );
                            let out = kernels::conv_apply(
                                &cols,
                                &p.get(idx, "weight").data,
                                &p.get(idx, "bias").data,
                                *out_channels,
                                batch * len,
                            );
                            if tape.is_some() {
                                cache = Cache::Conv { cols };
                            }
                            out
                        }
                        (LayerSpec::Relu, _) => {
                            kernels::relu_inplace(&mut act);
                            if tape.is_some() {
                                cache = Cache::Relu { out: act.clone() };
                            }
                            act
                        }
                        (LayerSpec::MaxPool1d { width }, Shape::Seq { channels, len }) => {
                            let olen = len / width;
                            let (out, arg) =
                                kernels::maxpool(&act, channels, batch, len, 0, *width, 0, olen);
                            if tape.is_some() {
                                cache = Cache::MaxPool { arg, in_len: len };
                            }
                            out
                        }
                        (LayerSpec::BatchNorm { channels }, _) => {
                            let gamma = &p.get(idx, "gamma").data;
                            let beta = &p.get(idx, "beta").data;
                            if train {
                                let (xhat, inv_std, mean, var) =
                                    bn_train_forward(&mut act, *channels, gamma, beta);
                                stats.push(BnBatchStats {
                                    layer: idx,
                                    mean,
                                    var,
                                });
                                if tape.is_some() {
                                    cache = Cache::Bn { xhat, inv_std };
                                }
                            } else {
                                kernels::batchnorm_infer(
                                    &mut act,
                                    *channels,
                                    &self.params.running.get(idx, "running_mean").data,
                                    &self.params.running.get(idx, "running_var").data,
                                    gamma,
                                    beta,
                                );
                            }
                            act
                        }
                        (LayerSpec::Flatten, Shape::Seq { channels, len }) => {
                            kernels::flatten_seq(&act, channels, batch, len)
                        }
                        (LayerSpec::Flatten, Shape::Flat(_)) => act,
                        (LayerSpec::Dense { inputs, outputs }, _) => {
                            let out = kernels::dense(
                                &act,
                                &p.get(idx, "weight").data,
                                &p.get(idx, "bias").data,
                                batch,
                                *inputs,
                                *outputs,
                            );
                            if tape.is_some() {
                                cache = Cache::Dense { input: act };
                            }
                            out
                        }
                        (
                            LayerSpec::LstmCellLayer { inputs, hidden },
                            Shape::Seq { channels, len },
                        ) => {
                            let w = self.lstm_weights(idx, *inputs, *hidden);
                            let mut h = vec![T::zero(); batch * hidden];
                            let mut c = vec![T::zero(); batch * hidden];
                            let mut rec = LstmRecord::default();
                            let keep = tape.is_some();
                            if keep {
                                rec.hs.extend_from_slice(&h);
                                rec.cs.extend_from_slice(&c);
                            }
                            kernels::lstm_steps(
                                &w,
                                batch,
                                0,
                                len,
                                |t, buf| gather_step(&act, channels, batch, len, t, buf),
                                &mut h,
                                &mut c,
                                keep.then_some(&mut rec),
                                true,
                            );
                            if keep {
                                cache = Cache::Lstm { rec };
                            }
                            h
                        }
                        (LayerSpec::Softmax, Shape::Flat(n)) => {
                            kernels::softmax_rows(&mut act, n);
                            if tape.is_some() {
                                cache = Cache::Softmax { out: act.clone() };
                            }
                            act
                        }
                        _ => unreachable!("shapes validated at construction"),
                    }
                }
            };
            if let Some(t) = tape.as_deref_mut() {
                t.push(cache);
            }
        }
        (act, stats)
    }

    pub(crate) fn lstm_weights(&self, idx: usize, inputs: usize, hidden: usize) -> LstmWeights<'_, T> {
        let p = &self.params.trainable;
        LstmWeights {
            w_ih: &p.get(idx, "w_ih").data,
            w_hh: &p.get(idx, "w_hh").data,
            bias: &p.get(idx, "bias").data,
            inputs,
            hidden,
        }
    }

    /// Mean cross-entropy of the softmax output against `labels` and its
    /// gradient with respect to every trainable tensor. Batchnorm runs in
    /// training mode; the batch statistics are returned, not applied.
    pub fn loss_and_grad(&self, x: &[T], labels: &[usize]) -> Result<LossGrad<T>> {
        let batch = labels.len();
        self.check_batch(x, batch)?;
        if batch == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if !matches!(self.ops.last(), Some(Op::Layer { spec: LayerSpec::Softmax, .. })) {
            return Err(Error::Shape(
                "cross-entropy needs a softmax output layer".into(),
            ));
        }
        let classes = self.output_width();
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} outside [0, {classes})"
            )));
        }
        let mut tape = Vec::with_capacity(self.ops.len());
        let internal = self.to_internal(x, batch);
        let (probs, bn_stats) = self.run(internal, batch, true, Some(&mut tape));

        let clip = T::from_f64(LOG_CLIP);
        let inv_b = T::one() / T::from_f64(batch as f64);
        let mut loss = 0.0;
        let mut grad = vec![T::zero(); probs.len()];
        for (b, &y) in labels.iter().enumerate() {
            let pr = probs[b * classes + y];
            loss -= pr.max(clip).to_f64().ln();
            if pr > clip {
                grad[b * classes + y] = -inv_b / pr;
            }
        }
        loss /= batch as f64;
        let grads = self.backward(grad, batch, tape);
        Ok(LossGrad {
            loss,
            grads,
            bn_stats,
        })
    }

    fn backward(&self, mut g: Vec<T>, batch: usize, mut tape: Vec<Cache<T>>) -> TensorStore<T> {
        let mut grads = self.params.trainable.zeros_like();
        let mut skip_grads: Vec<Vec<T>> = Vec::new();
        let p = &self.params.trainable;
        for i in (0..self.ops.len()).rev() {
            let cache = tape.pop().expect("one cache per op");
            let in_shape = self.op_input_shape(i);
            g = match &self.ops[i] {
                Op::ResEnd { .. } => {
                    skip_grads.push(g.clone());
                    g
                }
                Op::ResBegin { .. } => {
                    let s = skip_grads.pop().expect("balanced residual markers");
                    for (a, b) in g.iter_mut().zip(&s) {
                        *a += *b;
                    }
                    g
                }
                Op::Layer { idx, spec } => {
                    let idx = *idx;
                    match (spec, in_shape, cache) {
                        (
                            LayerSpec::Conv1d {
                                in_channels,
                                out_channels,
                                width,
                            },
                            Shape::Seq { len, .. },
                            Cache::Conv { cols },
                        ) => {
                            let n = batch * len;
                            let k = in_channels * width;
                            let w = &p.get(idx, "weight").data;
                            {
                                let dw = &mut grads.get_mut(idx, "weight").data;
                                gemm(
                                    T::one(),
                                    MatRef::new(&g, *out_channels, n),
                                    MatRef::new(&cols, k, n).t(),
                                    T::one(),
                                    dw,
                                );
                            }
                            let db = &mut grads.get_mut(idx, "bias").data;
                            for (o, row) in g.chunks(n).enumerate() {
                                db[o] += row.iter().copied().sum::<T>();
                            }
                            let mut dcols = vec![T::zero(); k * n];
                            gemm(
                                T::one(),
                                MatRef::new(w, *out_channels, k).t(),
                                MatRef::new(&g, *out_channels, n),
                                T::zero(),
                                &mut dcols,
                            );
                            kernels::col2im(&dcols, *in_channels, batch, len, *width)
                        }
                        (LayerSpec::Relu, _, Cache::Relu { out }) => {
                            for (gv, o) in g.iter_mut().zip(&out) {
                                if *o <= T::zero() {
                                    *gv = T::zero();
                                }
                            }
                            g
                        }
                        (
                            LayerSpec::MaxPool1d { .. },
                            Shape::Seq { channels, .. },
                            Cache::MaxPool { arg, in_len },
                        ) => {
                            let olen = g.len() / (channels * batch);
                            let mut dx = vec![T::zero(); channels * batch * in_len];
                            for cb in 0..channels * batch {
                                for o in 0..olen {
                                    dx[cb * in_len + arg[cb * olen + o] as usize] += g[cb * olen + o];
                                }
                            }
                            dx
                        }
                        (LayerSpec::BatchNorm { channels }, _, Cache::Bn { xhat, inv_std }) => {
                            let per = g.len() / channels;
                            let gamma = &p.get(idx, "gamma").data;
                            let mut dgamma = vec![T::zero(); *channels];
                            let mut dbeta = vec![T::zero(); *channels];
                            let nf = T::from_f64(per as f64);
                            let mut dx = vec![T::zero(); g.len()];
                            for c in 0..*channels {
                                let gs = &g[c * per..(c + 1) * per];
                                let xs = &xhat[c * per..(c + 1) * per];
                                let mut sum_g = T::zero();
                                let mut sum_gx = T::zero();
                                for (gv, xv) in gs.iter().zip(xs) {
                                    sum_g += *gv;
                                    sum_gx += *gv * *xv;
                                }
                                dgamma[c] = sum_gx;
                                dbeta[c] = sum_g;
                                // dxhat = g * gamma
                                let k = gamma[c] * inv_std[c] / nf;
                                for ((d, gv), xv) in
                                    dx[c * per..(c + 1) * per].iter_mut().zip(gs).zip(xs)
                                {
                                    *d = k * (nf * *gv - sum_g - *xv * sum_gx);
                                }
                            }
                            add_into(&mut grads.get_mut(idx, "gamma").data, &dgamma);
                            add_into(&mut grads.get_mut(idx, "beta").data, &dbeta);
                            dx
                        }
                        (LayerSpec::Flatten, Shape::Seq { channels, len }, _) => {
                            kernels::unflatten_seq(&g, channels, batch, len)
                        }
                        (LayerSpec::Flatten, Shape::Flat(_), _) => g,
                        (LayerSpec::Dense { inputs, outputs }, _, Cache::Dense { input }) => {
                            gemm(
                                T::one(),
                                MatRef::new(&input, batch, *inputs).t(),
                                MatRef::new(&g, batch, *outputs),
                                T::one(),
                                &mut grads.get_mut(idx, "weight").data,
                            );
                            let db = &mut grads.get_mut(idx, "bias").data;
                            for row in g.chunks(*outputs) {
                                add_into(db, row);
                            }
                            let mut dx = vec![T::zero(); batch * inputs];
                            gemm(
                                T::one(),
                                MatRef::new(&g, batch, *outputs),
                                MatRef::new(&p.get(idx, "weight").data, *inputs, *outputs).t(),
                                T::zero(),
                                &mut dx,
                            );
                            dx
                        }
                        (
                            LayerSpec::LstmCellLayer { inputs, hidden },
                            Shape::Seq { channels, len },
                            Cache::Lstm { rec },
                        ) => self.lstm_backward(
                            idx,
                            *inputs,
                            *hidden,
                            channels,
                            len,
                            batch,
                            &rec,
                            &g,
                            &mut grads,
                        ),
                        (LayerSpec::Softmax, Shape::Flat(n), Cache::Softmax { out }) => {
                            for (grow, prow) in g.chunks_mut(n).zip(out.chunks(n)) {
                                let dot: T = grow.iter().zip(prow).map(|(a, b)| *a * *b).sum();
                                for (gv, pv) in grow.iter_mut().zip(prow) {
                                    *gv = *pv * (*gv - dot);
                                }
                            }
                            g
                        }
                        _ => unreachable!("cache kind follows op kind"),
                    }
                }
            };
        }
        grads
    }

    #[allow(clippy::too_many_arguments)]
    fn lstm_backward(
        &self,
        idx: usize,
        inputs: usize,
        hid: usize,
        channels: usize,
        len: usize,
        batch: usize,
        rec: &LstmRecord<T>,
        dout: &[T],
        grads: &mut TensorStore<T>,
    ) -> Vec<T> {
        let w = self.lstm_weights(idx, inputs, hid);
        let g4 = 4 * hid;
        let bh = batch * hid;
        let mut dh = dout.to_vec();
        let mut dc = vec![T::zero(); bh];
        let mut dz = vec![T::zero(); batch * g4];
        let mut dx = vec![T::zero(); channels * batch * len];
        let mut dxt = vec![T::zero(); batch * inputs];
        let mut dw_ih = vec![T::zero(); inputs * g4];
        let mut dw_hh = vec![T::zero(); hid * g4];
        let mut dbias = vec![T::zero(); g4];
        for t in (0..len).rev() {
            let gates = &rec.gates[t * batch * g4..(t + 1) * batch * g4];
            let c_prev = &rec.cs[t * bh..(t + 1) * bh];
            let c_cur = &rec.cs[(t + 1) * bh..(t + 2) * bh];
            for b in 0..batch {
                let gb = &gates[b * g4..(b + 1) * g4];
                let dzb = &mut dz[b * g4..(b + 1) * g4];
                for u in 0..hid {
                    let (i, f, gg, o) = (gb[u], gb[hid + u], gb[2 * hid + u], gb[3 * hid + u]);
                    let tc = c_cur[b * hid + u].tanh_act();
                    let dhv = dh[b * hid + u];
                    let dcv = dc[b * hid + u] + dhv * o * (T::one() - tc * tc);
                    dzb[u] = dcv * gg * i * (T::one() - i);
                    dzb[hid + u] = dcv * c_prev[b * hid + u] * f * (T::one() - f);
                    dzb[2 * hid + u] = dcv * i * (T::one() - gg * gg);
                    dzb[3 * hid + u] = dhv * tc * o * (T::one() - o);
                    dc[b * hid + u] = dcv * f;
                }
            }
            let xt = &rec.xs[t * batch * inputs..(t + 1) * batch * inputs];
            let h_prev = &rec.hs[t * bh..(t + 1) * bh];
            gemm(
                T::one(),
                MatRef::new(xt, batch, inputs).t(),
                MatRef::new(&dz, batch, g4),
                T::one(),
                &mut dw_ih,
            );
            gemm(
                T::one(),
                MatRef::new(h_prev, batch, hid).t(),
                MatRef::new(&dz, batch, g4),
                T::one(),
                &mut dw_hh,
            );
            for row in dz.chunks(g4) {
                add_into(&mut dbias, row);
            }
            gemm(
                T::one(),
                MatRef::new(&dz, batch, g4),
                MatRef::new(w.w_ih, inputs, g4).t(),
                T::zero(),
                &mut dxt,
            );
            for b in 0..batch {
                for ch in 0..channels {
                    dx[(ch * batch + b) * len + t] = dxt[b * inputs + ch];
                }
            }
            gemm(
                T::one(),
                MatRef::new(&dz, batch, g4),
                MatRef::new(w.w_hh, hid, g4).t(),
                T::zero(),
                &mut dh,
            );
        }
        add_into(&mut grads.get_mut(idx, "w_ih").data, &dw_ih);
        add_into(&mut grads.get_mut(idx, "w_hh").data, &dw_hh);
        add_into(&mut grads.get_mut(idx, "bias").data, &dbias);
        dx
    }

    /// Folds training-pass batch statistics into the running estimates.
    pub fn update_running_stats(&mut self, stats: &[BnBatchStats<T>], momentum: f64) {
        let m = T::from_f64(momentum);
        let one_m = T::one() - m;
        for s in stats {
            let rm = &mut self.params.running.get_mut(s.layer, "running_mean").data;
            for (r, v) in rm.iter_mut().zip(&s.mean) {
                *r = m * *r + one_m * *v;
            }
            let rv = &mut self.params.running.get_mut(s.layer, "running_var").data;
            for (r, v) in rv.iter_mut().zip(&s.var) {
                *r = m * *r + one_m * *v;
            }
        }
    }
}

pub(crate) fn gather_step<T: Scalar>(
    x: &[T],
    channels: usize,
    batch: usize,
    len: usize,
    t: usize,
    buf: &mut [T],
) {
    for b in 0..batch {
        for c in 0..channels {
            buf[b * channels + c] = x[(c * batch + b) * len + t];
        }
    }
}

fn bn_train_forward<T: Scalar>(
    x: &mut [T],
    channels: usize,
    gamma: &[T],
    beta: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>, Vec<T>) {
    let per = x.len() / channels;
    let nf = T::from_f64(per as f64);
    let mut xhat = vec![T::zero(); x.len()];
    let mut inv_std = vec![T::zero(); channels];
    let mut means = vec![T::zero(); channels];
    let mut vars = vec![T::zero(); channels];
    for c in 0..channels {
        let xs = &mut x[c * per..(c + 1) * per];
        let mean = xs.iter().copied().sum::<T>() / nf;
        let var = xs.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / nf;
        let is = T::one() / (var + T::from_f64(BN_EPS)).sqrt();
        for (xv, xh) in xs.iter_mut().zip(&mut xhat[c * per..(c + 1) * per]) {
            *xh = (*xv - mean) * is;
            *xv = gamma[c] * *xh + beta[c];
        }
        inv_std[c] = is;
        means[c] = mean;
        vars[c] = var;
    }
    (xhat, inv_std, means, vars)
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

fn he_normal<T: Scalar, R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<T> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    Tensor {
        shape: shape.to_vec(),
        data: (0..shape.iter().product::<usize>())
            .map(|_| T::from_f64(normal.sample(rng)))
            .collect(),
    }
}
