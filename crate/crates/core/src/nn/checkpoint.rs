//! Binary tensor container shared by model checkpoints and shape features.
//!
//! ```text
//! magic        8 bytes  "PCAPCKPT"
//! version      u32      1
//! config_len   u32      byte length of the config block
//! config       UTF-8    `key=value` lines
//! count        u32      number of tensors
//! per tensor:
//!   name_len   u16, name UTF-8
//!   dtype      u8       0 = f32, 1 = u8
//!   ndim       u32, dims u32 × ndim
//!   data       f32 little-endian or raw bytes, product(dims) elements
//! ```
//! All integers are little-endian.

use std::path::Path;

use super::tensor::{Parameters, Tensor};
use crate::error::{Error, IoContext, Result};

const MAGIC: &[u8; 8] = b"PCAPCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: TensorData,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub config: Vec<(String, String)>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_parameters<P: Parameters>(config: Vec<(String, String)>, params: &P) -> Self {
        let mut tensors = Vec::new();
        params.visit(&mut |name, t| {
            tensors.push(NamedTensor {
                name: name.to_string(),
                shape: t.shape.clone(),
                data: TensorData::F32(t.data.iter().map(|&v| v as f32).collect()),
            })
        });
        Self { config, tensors }
    }

    /// Copies stored tensors into `params`, requiring identical names and
    /// shapes in visit order.
    pub fn load_into<P: Parameters>(&self, params: &mut P) -> Result<()> {
        let mut i = 0;
        let mut err = None;
        params.visit_mut(&mut |name, t| {
            if err.is_some() {
                return;
            }
            match self.tensors.get(i) {
                Some(NamedTensor {
                    name: n,
                    shape,
                    data: TensorData::F32(d),
                }) if n == name && *shape == t.shape => {
                    for (dst, &src) in t.data.iter_mut().zip(d) {
                        *dst = src as f64;
                    }
                }
                Some(other) => {
                    err = Some(Error::Format(format!(
                        "checkpoint tensor {i} is `{}` {:?}, model expects `{name}` {:?}",
                        other.name, other.shape, t.shape
                    )))
                }
                None => err = Some(Error::Format(format!("checkpoint is missing tensor `{name}`"))),
            }
            i += 1;
        });
        if let Some(e) = err {
            return Err(e);
        }
        if i != self.tensors.len() {
            return Err(Error::Format(format!(
                "checkpoint holds {} tensors, model has {i}",
                self.tensors.len()
            )));
        }
        Ok(())
    }

    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let cfg: String = self.config.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(cfg.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(match t.data {
                TensorData::F32(_) => 0,
                TensorData::U8(_) => 1,
            });
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            match &t.data {
                TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                TensorData::U8(v) => out.extend_from_slice(v),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let cfg_len = r.u32()? as usize;
        let cfg = std::str::from_utf8(r.take(cfg_len)?)
            .map_err(|e| Error::Format(format!("config block is not UTF-8: {e}")))?;
        let config = cfg
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Format(format!("bad config line `{l}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|e| Error::Format(format!("tensor name is not UTF-8: {e}")))?;
            let dtype = r.take(1)?[0];
            let ndim = r.u32()? as usize;
            let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let data = match dtype {
                0 => TensorData::F32(
                    r.take(n * 4)?
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
                1 => TensorData::U8(r.take(n)?.to_vec()),
                other => return Err(Error::Format(format!("unknown tensor dtype {other}"))),
            };
            tensors.push(NamedTensor { name, shape, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after last tensor".into()));
        }
        Ok(Self { config, tensors })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).at(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).at(path)?)
    }
}

impl NamedTensor {
    pub fn to_tensor(&self) -> Tensor {
        let data = match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::U8(v) => v.iter().map(|&x| x as f64).collect(),
        };
        Tensor::from_vec(&self.shape, data)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("unexpected end of checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses `key=value` config entries with a typed accessor.
pub(crate) fn config_get<T: std::str::FromStr>(cfg: &Checkpoint, key: &str) -> Result<T> {
    let raw = cfg
        .config_value(key)
        .ok_or_else(|| Error::Format(format!("checkpoint config lacks `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::Format(format!("checkpoint config `{key}` has bad value `{raw}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_mixed_tensors() {
        let ck = Checkpoint {
            config: vec![("a".into(), "1".into()), ("mode".into(), "max".into())],
            tensors: vec![
                NamedTensor {
                    name: "w".into(),
                    shape: vec![2, 3],
                    data: TensorData::F32(vec![1.0, -2.5, 3.0, 0.0, 1e-3, 7.0]),
                },
                NamedTensor {
                    name: "mask".into(),
                    shape: vec![4],
                    data: TensorData::U8(vec![1, 0, 1, 1]),
                },
            ],
        };
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..8], b"PCAPCKPT");
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.config_value("mode"), Some("max"));
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
