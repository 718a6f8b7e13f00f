//! Versioned model container.
//!
//! Layout:
//!
//! ```text
//! magic      8 bytes  "WAYFCKPT"
//! version    u32 LE
//! header_len u64 LE
//! header     header_len bytes of UTF-8 JSON
//! payloads   f64 LE tensors, concatenated in manifest order
//! ```
//!
//! The JSON header carries the model kind, its configuration, vocabulary,
//! department names and a tensor manifest (`name`, `shape`, `dtype`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cnn::{CnnConfig, CnnModel, CnnParams, FilterBank, Head};
use crate::encode::{fnv1a_bytes, Vocabulary};
use crate::linear::{LinearConfig, LinearModel};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"WAYFCKPT";
pub const VERSION: u32 = 1;
const DTYPE: &str = "f64le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelMeta {
    Cnn { config: CnnConfig },
    Linear { config: LinearConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    #[serde(flatten)]
    pub meta: ModelMeta,
    /// Vocabulary tokens after the reserved PAD and UNK entries.
    #[serde(default)]
    pub vocab: Vec<String>,
    pub departments: Vec<String>,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: Header,
    pub payloads: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let total: usize = self.payloads.iter().map(Vec::len).sum();
        let mut out = Vec::with_capacity(20 + header.len() + 8 * total);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in &self.payloads {
            for x in t {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a wayfind checkpoint"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = &bytes[20..];
        if body.len() < header_len {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&body[..header_len])?;
        let mut rest = &body[header_len..];
        let mut payloads = Vec::with_capacity(header.tensors.len());
        for t in &header.tensors {
            if t.dtype != DTYPE {
                return Err(Error::Checkpoint(format!("tensor {}: unsupported dtype {}", t.name, t.dtype)));
            }
            let n: usize = t.shape.iter().product();
            if rest.len() < 8 * n {
                return Err(Error::Checkpoint(format!("tensor {} is truncated", t.name)));
            }
            let (data, tail) = rest.split_at(8 * n);
            payloads.push(
                data.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            );
            rest = tail;
        }
        if !rest.is_empty() {
            return Err(bad("trailing bytes after last tensor"));
        }
        Ok(Self { header, payloads })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Short content hash used as a model version tag.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(format!("{:016x}", fnv1a_bytes(&self.to_bytes()?)))
    }

    fn take(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let i = self
            .header
            .tensors
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
        if self.header.tensors[i].shape != shape {
            return Err(Error::Checkpoint(format!(
                "tensor {name} has shape {:?}, expected {shape:?}",
                self.header.tensors[i].shape
            )));
        }
        Ok(std::mem::take(&mut self.payloads[i]))
    }
}

fn manifest<'a>(tensors: impl IntoIterator<Item = (String, Vec<usize>, &'a [f64])>) -> (Vec<TensorEntry>, Vec<Vec<f64>>) {
    tensors
        .into_iter()
        .map(|(name, shape, data)| {
            (
                TensorEntry {
                    name,
                    shape,
                    dtype: DTYPE.into(),
                },
                data.to_vec(),
            )
        })
        .unzip()
}

impl CnnModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let (tensors, payloads) = manifest(self.params.named());
        Checkpoint {
            header: Header {
                meta: ModelMeta::Cnn {
                    config: self.config.clone(),
                },
                vocab: self.vocab.content_tokens().to_vec(),
                departments: self.departments.clone(),
                tensors,
            },
            payloads,
        }
    }

    pub fn from_checkpoint(mut ckpt: Checkpoint) -> Result<Self> {
        let ModelMeta::Cnn { config } = ckpt.header.meta.clone() else {
            return Err(Error::Checkpoint("not a CNN checkpoint".into()));
        };
        config.validate()?;
        let vocab = Vocabulary::from_tokens(std::mem::take(&mut ckpt.header.vocab));
        let departments = std::mem::take(&mut ckpt.header.departments);
        if departments.len() != config.num_departments {
            return Err(Error::Checkpoint("department count does not match config".into()));
        }
        let (dim, maps, p, l) = (config.embedding_dim, config.feature_maps, config.num_departments, config.pooled_len());
        let embeddings = ckpt.take("embeddings", &[vocab.len(), dim])?;
        let mut banks = Vec::new();
        for &width in &config.filter_widths {
            banks.push(FilterBank {
                width,
                weights: ckpt.take(&format!("conv{width}.weight"), &[maps, width, dim])?,
                bias: ckpt.take(&format!("conv{width}.bias"), &[maps])?,
            });
        }
        let origin = Head {
            weights: ckpt.take("origin.weight", &[l, p])?,
            bias: ckpt.take("origin.bias", &[p])?,
        };
        let destination = Head {
            weights: ckpt.take("destination.weight", &[l, p])?,
            bias: ckpt.take("destination.bias", &[p])?,
        };
        let params = CnnParams {
            embeddings,
            dim,
            banks,
            origin,
            destination,
        };
        Ok(Self {
            config,
            vocab,
            departments,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint().write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::read(path)?)
    }
}

impl LinearModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let p = self.departments.len();
        let b = self.config.buckets;
        let (tensors, payloads) = manifest([
            ("origin.weight".to_string(), vec![b, p], &self.origin_weights[..]),
            ("origin.bias".to_string(), vec![p], &self.origin_bias[..]),
            ("destination.weight".to_string(), vec![b, p], &self.destination_weights[..]),
            ("destination.bias".to_string(), vec![p], &self.destination_bias[..]),
        ]);
        Checkpoint {
            header: Header {
                meta: ModelMeta::Linear {
                    config: self.config.clone(),
                },
                vocab: Vec::new(),
                departments: self.departments.clone(),
                tensors,
            },
            payloads,
        }
    }

    pub fn from_checkpoint(mut ckpt: Checkpoint) -> Result<Self> {
        let ModelMeta::Linear { config } = ckpt.header.meta.clone() else {
            return Err(Error::Checkpoint("not a linear checkpoint".into()));
        };
        let departments = std::mem::take(&mut ckpt.header.departments);
        let (b, p) = (config.buckets, departments.len());
        Ok(Self {
            origin_weights: ckpt.take("origin.weight", &[b, p])?,
            origin_bias: ckpt.take("origin.bias", &[p])?,
            destination_weights: ckpt.take("destination.weight", &[b, p])?,
            destination_bias: ckpt.take("destination.bias", &[p])?,
            config,
            departments,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::CnnConfig;

    fn model() -> CnnModel {
        let cfg = CnnConfig {
            embedding_dim: 4,
            filter_widths: vec![2, 3],
            feature_maps: 3,
            max_len: 8,
            ..Default::default()
        };
        let vocab = Vocabulary::build(["from mri to reception"]);
        CnnModel::init(cfg, vocab, vec!["MRI".into(), "Reception".into(), "Admitting".into()]).unwrap()
    }

    #[test]
    fn cnn_round_trip_is_bit_exact() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        m.save(&path).unwrap();
        let back = CnnModel::load(&path).unwrap();
        assert_eq!(back.params, m.params);
        assert_eq!(back.config, m.config);
        assert_eq!(back.vocab, m.vocab);
        assert_eq!(
            back.predict("from mri to reception").unwrap(),
            m.predict("from mri to reception").unwrap()
        );
    }

    #[test]
    fn layout() {
        let bytes = model().to_checkpoint().to_bytes().unwrap();
        assert_eq!(&bytes[..8], b"WAYFCKPT");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&bytes[20..20 + hlen]).unwrap();
        assert_eq!(header["kind"], "cnn");
        assert_eq!(header["tensors"][0]["name"], "embeddings");
        assert_eq!(header["tensors"][0]["dtype"], "f64le");
        // vocab: pad, unk + 4 tokens; dim 4
        let first = f64::from_le_bytes(bytes[20 + hlen..28 + hlen].try_into().unwrap());
        assert_eq!(first, 0.0);
        assert_eq!(bytes.len() - 20 - hlen, 8 * model().params.named().iter().map(|t| t.2.len()).sum::<usize>());
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = model().to_checkpoint().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(Checkpoint::from_bytes(b"WAYFCKPX\x01\0\0\0\0\0\0\0\0\0\0\0").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        let mut v2 = bytes;
        v2[8] = 2;
        assert!(Checkpoint::from_bytes(&v2).is_err());
    }
}
