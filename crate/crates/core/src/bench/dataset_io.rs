//! The MSUB binary dataset format. All integers little-endian:
//! `"MSUB"`, u32 version, u32 d, u32 frame count, u32 SNR count, the SNR
//! grid as i16, then per frame a u8 label, an i16 SNR and `2d` f32 values
//! (in-phase row, then quadrature row).

use std::path::Path;

use super::io::write_atomic;
use crate::error::{Error, Result};
use crate::sigstream::{LabeledDataset, ModType};

pub const MSUB_MAGIC: &[u8; 4] = b"MSUB";
pub const MSUB_VERSION: u32 = 1;
/// Bytes before the SNR list.
pub const MSUB_HEADER_LEN: usize = 20;

pub fn encode_dataset(ds: &LabeledDataset) -> Vec<u8> {
    let frame_len = 3 + 8 * ds.d;
    let mut out =
        Vec::with_capacity(MSUB_HEADER_LEN + 2 * ds.snr_grid.len() + ds.len() * frame_len);
    out.extend_from_slice(MSUB_MAGIC);
    for v in [MSUB_VERSION, ds.d as u32, ds.len() as u32, ds.snr_grid.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in &ds.snr_grid {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for i in 0..ds.len() {
        out.push(ds.labels[i].label() as u8);
        out.extend_from_slice(&ds.snrs[i].to_le_bytes());
        for v in ds.frame_iq(i) {
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
                message: format!("truncated {what}"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn i16(&mut self, what: &str) -> Result<i16> {
        Ok(i16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
}

pub fn decode_dataset(buf: &[u8]) -> Result<LabeledDataset> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MSUB_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad magic, expected MSUB".into(),
        });
    }
    let version = r.u32("version")?;
    if version != MSUB_VERSION {
        return Err(Error::Parse {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let d = r.u32("d")? as usize;
    let count = r.u32("frame count")? as usize;
    let nsnr = r.u32("SNR count")? as usize;
    if d == 0 {
        return Err(Error::Parse {
            offset: 8,
            message: "d must be positive".into(),
        });
    }
    let grid = (0..nsnr)
        .map(|_| r.i16("SNR list"))
        .collect::<Result<Vec<_>>>()?;
    let frame_len = 3 + 8 * d;
    let remaining = buf.len() - r.pos;
    if remaining / frame_len < count {
        let frame = remaining / frame_len;
        return Err(Error::Parse {
            offset: r.pos + frame * frame_len,
            message: format!("file truncated in frame {frame} of {count}"),
        });
    }
    if remaining > count * frame_len {
        return Err(Error::Parse {
            offset: r.pos + count * frame_len,
            message: "trailing bytes after the last frame".into(),
        });
    }
    let mut ds = LabeledDataset::empty(d, grid);
    ds.iq.reserve(count * 2 * d);
    for i in 0..count {
        let at = r.pos;
        let label = r.take(1, "label")?[0];
        let m = ModType::from_label(label as usize).map_err(|_| Error::Parse {
            offset: at,
            message: format!("frame {i} has unknown label {label}"),
        })?;
        let snr = r.i16("SNR")?;
        if !ds.snr_grid.contains(&snr) {
            return Err(Error::Parse {
                offset: at + 1,
                message: format!("frame {i} has SNR {snr} outside the grid"),
            });
        }
        let raw = r.take(8 * d, "samples")?;
        ds.iq
            .extend(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())));
        ds.labels.push(m);
        ds.snrs.push(snr);
    }
    Ok(ds)
}

pub fn save_dataset(path: &Path, ds: &LabeledDataset) -> Result<()> {
    ds.validate()?;
    write_atomic(path, &encode_dataset(ds))
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    decode_dataset(&std::fs::read(path)?)
}
