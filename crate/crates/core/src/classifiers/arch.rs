use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neurokit::LayerSpec;
use crate::sigstream::ModType;

/// The three small network families used as rankers; `MiniResNet` is also
/// the final classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArchKind {
    MiniCnn,
    MiniCldnn,
    MiniResNet,
}

const CLASSES: usize = ModType::COUNT;

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

fn residual_unit(ch: usize) -> LayerSpec {
    LayerSpec::Residual {
        body: vec![
            conv(ch, ch, 5),
            LayerSpec::BatchNorm { channels: ch },
            LayerSpec::Relu,
            conv(ch, ch, 5),
            LayerSpec::BatchNorm { channels: ch },
        ],
    }
}

impl ArchKind {
    pub const ALL: [ArchKind; 3] = [ArchKind::MiniCnn, ArchKind::MiniCldnn, ArchKind::MiniResNet];

    /// Layer list for 2 x `len` inputs and ten output classes.
    pub fn layers(self, len: usize) -> Vec<LayerSpec> {
        match self {
            ArchKind::MiniCnn => vec![
                conv(2, 16, 3),
                LayerSpec::Relu,
                conv(16, 16, 3),
                LayerSpec::Relu,
                LayerSpec::Flatten,
                dense(16 * len, 64),
                LayerSpec::Relu,
                dense(64, CLASSES),
                LayerSpec::Softmax,
            ],
            ArchKind::MiniCldnn => vec![
                conv(2, 16, 3),
                LayerSpec::Relu,
                LayerSpec::LstmCellLayer {
                    inputs: 16,
                    hidden: 32,
                },
                dense(32, CLASSES),
                LayerSpec::Softmax,
            ],
            ArchKind::MiniResNet => {
                let mut l = vec![
                    conv(2, 16, 5),
                    LayerSpec::BatchNorm { channels: 16 },
                    LayerSpec::Relu,
                    residual_unit(16),
                    LayerSpec::Relu,
                    residual_unit(16),
                    LayerSpec::Relu,
                ];
                // A single retained sample leaves nothing to pool.
                let pooled = if len >= 2 {
                    l.push(LayerSpec::MaxPool1d { width: 2 });
                    len / 2
                } else {
                    len
                };
                l.extend([
                    LayerSpec::Flatten,
                    dense(16 * pooled, 32),
                    LayerSpec::Relu,
                    dense(32, CLASSES),
                    LayerSpec::Softmax,
                ]);
                l
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArchKind::MiniCnn => "cnn",
            ArchKind::MiniCldnn => "cldnn",
            ArchKind::MiniResNet => "resnet",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        let key = key.trim_start_matches("mini");
        ArchKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown architecture {s:?}")))
    }
}
