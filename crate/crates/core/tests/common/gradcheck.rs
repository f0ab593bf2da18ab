//! Central finite-difference oracle for `Model::<f64>::loss_and_grad`.

use amc_subsample::neurokit::{LayerSpec, Model, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const STEP: f64 = 1e-3;
/// Gradients smaller than this are compared in absolute terms; the
/// truncation error of a central difference at `STEP` is of order 1e-7.
pub const REL_FLOOR: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct GradConfig {
    pub seed: u64,
    pub arch: Vec<LayerSpec>,
    pub input: Shape,
    pub batch: usize,
    pub classes: usize,
}

impl GradConfig {
    pub fn kinds(&self) -> Vec<&'static str> {
        fn walk(specs: &[LayerSpec], out: &mut Vec<&'static str>) {
            for s in specs {
                let name = match s {
                    LayerSpec::Conv1d { .. } => "conv1d",
                    LayerSpec::Dense { .. } => "dense",
                    LayerSpec::Relu => "relu",
                    LayerSpec::MaxPool1d { .. } => "max_pool1d",
                    LayerSpec::BatchNorm { .. } => "batch_norm",
                    LayerSpec::LstmCellLayer { .. } => "lstm_cell_layer",
                    LayerSpec::Flatten => "flatten",
                    LayerSpec::Softmax => "softmax",
                    LayerSpec::Residual { body } => {
                        walk(body, out);
                        "residual"
                    }
                };
                out.push(name);
            }
        }
        let mut out = Vec::new();
        walk(&self.arch, &mut out);
        out
    }
}

#[derive(Clone, Debug)]
pub struct GradReport {
    pub max_rel_err: f64,
    pub worst: String,
    pub checked: usize,
}

fn conv(i: usize, o: usize, w: usize) -> LayerSpec {
    LayerSpec::Conv1d {
        in_channels: i,
        out_channels: o,
        width: w,
    }
}

fn dense(i: usize, o: usize) -> LayerSpec {
    LayerSpec::Dense {
        inputs: i,
        outputs: o,
    }
}

/// Twenty small networks cycling through every layer kind.
pub fn gradcheck_configs() -> Vec<GradConfig> {
    (0..20u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let c = rng.gen_range(2..=4);
            let len = 2 * rng.gen_range(2..=4);
            let w = rng.gen_range(1..=5);
            let k = rng.gen_range(3..=6);
            let h = rng.gen_range(2..=5);
            let arch = match seed % 7 {
                0 => vec![conv(2, c, w), LayerSpec::Flatten, dense(c * len, k)],
                1 => vec![
                    conv(2, c, w),
                    LayerSpec::Relu,
                    conv(c, c, 3),
                    LayerSpec::Flatten,
                    dense(c * len, k),
                ],
                2 => vec![
                    conv(2, c, w),
                    LayerSpec::MaxPool1d { width: 2 },
                    LayerSpec::Flatten,
                    dense(c * len / 2, k),
                ],
                3 => vec![
                    conv(2, c, w),
                    LayerSpec::BatchNorm { channels: c },
                    LayerSpec::Relu,
                    LayerSpec::Flatten,
                    dense(c * len, k),
                ],
                4 => vec![LayerSpec::LstmCellLayer { inputs: 2, hidden: h }, dense(h, k)],
                5 => vec![
                    conv(2, c, w),
                    LayerSpec::Relu,
                    LayerSpec::LstmCellLayer { inputs: c, hidden: h },
                    dense(h, k),
                ],
                _ => vec![
                    conv(2, c, 3),
                    LayerSpec::Residual {
                        body: vec![
                            conv(c, c, w),
                            LayerSpec::BatchNorm { channels: c },
                            LayerSpec::Relu,
                            conv(c, c, w),
                            LayerSpec::BatchNorm { channels: c },
                        ],
                    },
                    LayerSpec::Relu,
                    LayerSpec::MaxPool1d { width: 2 },
                    LayerSpec::Flatten,
                    dense(c * len / 2, h),
                    LayerSpec::Relu,
                    dense(h, k),
                ],
            };
            let mut arch = arch;
            arch.push(LayerSpec::Softmax);
            GradConfig {
                seed,
                arch,
                input: Shape::Seq { channels: 2, len },
                batch: rng.gen_range(3..=6),
                classes: k,
            }
        })
        .collect()
}

/// Compares every analytic gradient entry with a central difference.
pub fn check_gradients(cfg: &GradConfig) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::<f64>::new(cfg.arch.clone(), cfg.input, &mut rng).unwrap();
    // Nonzero biases so no unit sits exactly on a kink.
    for t in model.params.trainable.tensors.values_mut() {
        for v in t.data.iter_mut() {
            *v += 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let x: Vec<f64> = (0..cfg.batch * cfg.input.size())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let y: Vec<usize> = (0..cfg.batch).map(|_| rng.gen_range(0..cfg.classes)).collect();
    let analytic = model.loss_and_grad(&x, &y).unwrap().grads;
    let keys: Vec<_> = model.params.trainable.tensors.keys().cloned().collect();
    let mut report = GradReport {
        max_rel_err: 0.0,
        worst: String::new(),
        checked: 0,
    };
    for key in keys {
        let n = model.params.trainable.tensors[&key].data.len();
        for i in 0..n {
            let orig = model.params.trainable.tensors[&key].data[i];
            let mut at = |v: f64| {
                model.params.trainable.tensors.get_mut(&key).unwrap().data[i] = v;
                model.loss_and_grad(&x, &y).unwrap().loss
            };
            let numeric = (at(orig + STEP) - at(orig - STEP)) / (2.0 * STEP);
            model.params.trainable.tensors.get_mut(&key).unwrap().data[i] = orig;
            let a = analytic.tensors[&key].data[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            report.checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst = format!(
                    "layer {} {}[{i}]: analytic {a:e} numeric {numeric:e}",
                    key.layer, key.name
                );
            }
        }
    }
    report
}
