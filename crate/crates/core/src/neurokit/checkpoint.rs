//! `MSNN` model checkpoints.
//!
//! Layout (little-endian): magic `MSNN`, `u32` version, `u32` descriptor
//! length followed by the JSON architecture descriptor (input shape and
//! layer list), `u32` tensor count, then per tensor: `u32` name length,
//! name bytes (`<layer>.<name>`), `u32` rank, rank x `u32` dims and the
//! `f32` values.

use serde::{Deserialize, Serialize};

use super::layers::{LayerSpec, Shape};
use super::model::{Model, ModelParams, ParamKey, Tensor, TensorStore};
use crate::error::{Error, Result};

pub const MSNN_MAGIC: &[u8; 4] = b"MSNN";
pub const MSNN_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Descriptor {
    input: Shape,
    layers: Vec<LayerSpec>,
}

pub fn encode(model: &Model<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MSNN_MAGIC);
    out.extend_from_slice(&MSNN_VERSION.to_le_bytes());
    let desc = serde_json::to_vec(&Descriptor {
        input: model.input_shape(),
        layers: model.arch().to_vec(),
    })
    .expect("descriptor serializes");
    out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    out.extend_from_slice(&desc);
    let all: Vec<(&ParamKey, &Tensor<f32>)> = model
        .params
        .trainable
        .tensors
        .iter()
        .chain(&model.params.running.tensors)
        .collect();
    out.extend_from_slice(&(all.len() as u32).to_le_bytes());
    for (key, t) in all {
        let name = format!("{}.{}", key.layer, key.name);
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Parse {
                offset: self.pos,
                message: format!("truncated while reading {what}"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

pub fn decode(buf: &[u8]) -> Result<Model<f32>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MSNN_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad magic, expected MSNN".into(),
        });
    }
    let version = r.u32("version")?;
    if version != MSNN_VERSION {
        return Err(Error::Parse {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let dlen = r.u32("descriptor length")? as usize;
    let at = r.pos;
    let desc: Descriptor =
        serde_json::from_slice(r.take(dlen, "descriptor")?).map_err(|e| Error::Parse {
            offset: at,
            message: format!("bad architecture descriptor: {e}"),
        })?;
    let count = r.u32("tensor count")?;
    let mut trainable = TensorStore::default();
    let mut running = TensorStore::default();
    for _ in 0..count {
        let at = r.pos;
        let nlen = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(nlen, "tensor name")?).map_err(|_| Error::Parse {
            offset: at,
            message: "tensor name is not UTF-8".into(),
        })?;
        let (layer, tname) = name
            .split_once('.')
            .and_then(|(l, n)| l.parse::<usize>().ok().map(|l| (l, n)))
            .ok_or_else(|| Error::Parse {
                offset: at,
                message: format!("malformed tensor name {name:?}"),
            })?;
        let rank = r.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dimension")? as usize);
        }
        let n: usize = shape.iter().product();
        let raw = r.take(n * 4, "tensor values")?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        let store = if tname.starts_with("running_") {
            &mut running
        } else {
            &mut trainable
        };
        store.insert(layer, tname, Tensor { shape, data });
    }
    if r.pos != buf.len() {
        return Err(Error::Parse {
            offset: r.pos,
            message: "trailing bytes after last tensor".into(),
        });
    }
    Model::from_parts(desc.layers, desc.input, ModelParams { trainable, running })
}

pub fn save(path: &std::path::Path, model: &Model<f32>) -> Result<()> {
    crate::bench::io::write_atomic(path, &encode(model))
}

pub fn load(path: &std::path::Path) -> Result<Model<f32>> {
    decode(&std::fs::read(path)?)
}
