//! Binary checkpoint container: a versioned header and named sections, each
//! carrying a JSON meta string and a raw little-endian f64 payload.
//! Round-trips are byte-exact.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::net::{DenseNet, NetSpec};

const MAGIC: &[u8; 6] = b"SLCKPT";
const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    BadVersion(u16),
    #[error("missing section '{0}'")]
    MissingSection(String),
    #[error("section '{0}' meta is not valid JSON: {1}")]
    BadMeta(String, serde_json::Error),
    #[error("section '{section}' payload length {got} does not match descriptor ({expected})")]
    PayloadMismatch {
        section: String,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub meta: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    sections: Vec<Section>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, meta: String, values: Vec<f64>) {
        self.sections.push(Section {
            name: name.to_string(),
            meta,
            values,
        });
    }

    pub fn section(&self, name: &str) -> Result<&Section, CheckpointError> {
        self.sections
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CheckpointError::MissingSection(name.to_string()))
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Serializes a network as a section: the meta is its `NetSpec` JSON and
    /// the payload its flat parameter vector.
    pub fn push_net(&mut self, name: &str, net: &DenseNet) {
        let meta = serde_json::to_string(net.spec()).expect("NetSpec serializes");
        self.push(name, meta, net.params().to_vec());
    }

    pub fn net(&self, name: &str) -> Result<DenseNet, CheckpointError> {
        let section = self.section(name)?;
        let spec: NetSpec = serde_json::from_str(&section.meta)
            .map_err(|e| CheckpointError::BadMeta(name.to_string(), e))?;
        DenseNet::from_params(spec.clone(), section.values.clone()).map_err(|_| {
            CheckpointError::PayloadMismatch {
                section: name.to_string(),
                expected: spec.param_count(),
                got: section.values.len(),
            }
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut out: Vec<u8> = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());
        for s in &self.sections {
            let name = s.name.as_bytes();
            let meta = s.meta.as_bytes();
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name);
            out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
            out.extend_from_slice(meta);
            out.extend_from_slice(&(s.values.len() as u64).to_le_bytes());
            for v in &s.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut cur = std::io::Cursor::new(bytes);

        let mut magic = [0u8; 6];
        cur.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut u16buf = [0u8; 2];
        cur.read_exact(&mut u16buf)?;
        let version = u16::from_le_bytes(u16buf);
        if version != VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let mut u32buf = [0u8; 4];
        cur.read_exact(&mut u32buf)?;
        let n_sections = u32::from_le_bytes(u32buf);

        let mut sections = Vec::with_capacity(n_sections as usize);
        for _ in 0..n_sections {
            cur.read_exact(&mut u32buf)?;
            let mut name = vec![0u8; u32::from_le_bytes(u32buf) as usize];
            cur.read_exact(&mut name)?;
            cur.read_exact(&mut u32buf)?;
            let mut meta = vec![0u8; u32::from_le_bytes(u32buf) as usize];
            cur.read_exact(&mut meta)?;
            let mut u64buf = [0u8; 8];
            cur.read_exact(&mut u64buf)?;
            let n_values = u64::from_le_bytes(u64buf) as usize;
            let mut values = Vec::with_capacity(n_values);
            let mut f64buf = [0u8; 8];
            for _ in 0..n_values {
                cur.read_exact(&mut f64buf)?;
                values.push(f64::from_le_bytes(f64buf));
            }
            sections.push(Section {
                name: String::from_utf8_lossy(&name).into_owned(),
                meta: String::from_utf8_lossy(&meta).into_owned(),
                values,
            });
        }
        Ok(Self { sections })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Activation;
    use slicelab_core::RngSource;

    #[test]
    fn round_trip_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");

        let spec = NetSpec::mlp(9, &[64, 64], 49, Activation::Softmax);
        let mut rng = RngSource::new(3).substream("ckpt-test");
        let net = DenseNet::init(spec, &mut rng);

        let mut ckpt = Checkpoint::new();
        ckpt.push_net("actor", &net);
        ckpt.push("extra", "{\"note\":1}".into(), vec![1.0, f64::MIN_POSITIVE, -0.0]);
        ckpt.save(&path).unwrap();

        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ckpt);
        let net2 = loaded.net("actor").unwrap();
        // Bitwise equality, not approximate.
        for (a, b) in net.params().iter().zip(net2.params()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(matches!(
            loaded.net("critic"),
            Err(CheckpointError::MissingSection(_))
        ));
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"NOTateckpt").unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(CheckpointError::BadMagic)));

        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&9u16.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(CheckpointError::BadVersion(9))
        ));
    }
}
