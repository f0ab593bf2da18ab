use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One layer of a sequential architecture. `Residual` wraps a body whose
/// output is added to its input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// "same"-padded 1-D convolution over the sequence axis.
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        width: usize,
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Relu,
    MaxPool1d {
        width: usize,
    },
    /// Per-channel batch normalization over (batch, position).
    BatchNorm {
        channels: usize,
    },
    /// LSTM over the sequence axis emitting the last hidden state.
    LstmCellLayer {
        inputs: usize,
        hidden: usize,
    },
    Flatten,
    Softmax,
    Residual {
        body: Vec<LayerSpec>,
    },
}

/// Per-example activation shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// `channels x len`, stored channel-major across the batch: `[c][b][l]`.
    Seq { channels: usize, len: usize },
    /// Flat features, stored `[b][f]`.
    Flat(usize),
}

impl Shape {
    pub fn size(&self) -> usize {
        match *self {
            Shape::Seq { channels, len } => channels * len,
            Shape::Flat(n) => n,
        }
    }
}

/// Flattened execution step. Layers are numbered in pre-order, so a
/// `Residual` takes an index and its body follows it.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Op {
    Layer { idx: usize, spec: LayerSpec },
    ResBegin { idx: usize },
    ResEnd { idx: usize },
}

pub(crate) fn compile(specs: &[LayerSpec]) -> Vec<Op> {
    fn walk(specs: &[LayerSpec], next: &mut usize, out: &mut Vec<Op>) {
        for spec in specs {
            let idx = *next;
            *next += 1;
            match spec {
                LayerSpec::Residual { body } => {
                    out.push(Op::ResBegin { idx });
                    walk(body, next, out);
                    out.push(Op::ResEnd { idx });
                }
                other => out.push(Op::Layer {
                    idx,
                    spec: other.clone(),
                }),
            }
        }
    }
    let mut ops = Vec::new();
    walk(specs, &mut 0, &mut ops);
    ops
}

/// Output shape of every op, checking that consecutive layers compose.
pub(crate) fn infer_shapes(ops: &[Op], input: Shape) -> Result<Vec<Shape>> {
    let mut shapes = Vec::with_capacity(ops.len());
    let mut cur = input;
    let mut skips = Vec::new();
    for op in ops {
        cur = match op {
            Op::ResBegin { .. } => {
                skips.push(cur);
                cur
            }
            Op::ResEnd { idx } => {
                let skip = skips.pop().expect("balanced residual markers");
                if skip != cur {
                    return Err(Error::Shape(format!(
                        "residual layer {idx}: body output {cur:?} differs from input {skip:?}"
                    )));
                }
                cur
            }
            Op::Layer { idx, spec } => layer_output(*idx, spec, cur)?,
        };
        shapes.push(cur);
    }
    Ok(shapes)
}

fn layer_output(idx: usize, spec: &LayerSpec, input: Shape) -> Result<Shape> {
    let mismatch = |what: &str| {
        Err(Error::Shape(format!(
            "layer {idx} ({spec:?}) cannot take {input:?}: {what}"
        )))
    };
    match (spec, input) {
        (
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                width,
            },
            Shape::Seq { channels, len },
        ) => {
            if *in_channels != channels {
                return mismatch("channel count");
            }
            if *width == 0 || *out_channels == 0 {
                return mismatch("empty kernel");
            }
            Ok(Shape::Seq {
                channels: *out_channels,
                len,
            })
        }
        (LayerSpec::Dense { inputs, outputs }, Shape::Flat(n)) => {
            if *inputs != n || *outputs == 0 {
                return mismatch("feature count");
            }
            Ok(Shape::Flat(*outputs))
        }
        (LayerSpec::Relu, s) => Ok(s),
        (LayerSpec::MaxPool1d { width }, Shape::Seq { channels, len }) => {
            if *width == 0 || len / width == 0 {
                return mismatch("pool wider than sequence");
            }
            Ok(Shape::Seq {
                channels,
                len: len / width,
            })
        }
        (LayerSpec::BatchNorm { channels: c }, Shape::Seq { channels, len }) => {
            if *c != channels {
                return mismatch("channel count");
            }
            Ok(Shape::Seq { channels, len })
        }
        (LayerSpec::LstmCellLayer { inputs, hidden }, Shape::Seq { channels, .. }) => {
            if *inputs != channels || *hidden == 0 {
                return mismatch("input width");
            }
            Ok(Shape::Flat(*hidden))
        }
        (LayerSpec::Flatten, Shape::Seq { channels, len }) => Ok(Shape::Flat(channels * len)),
        (LayerSpec::Flatten, Shape::Flat(n)) => Ok(Shape::Flat(n)),
        (LayerSpec::Softmax, Shape::Flat(n)) => Ok(Shape::Flat(n)),
        _ => mismatch("incompatible layer kind"),
    }
}
