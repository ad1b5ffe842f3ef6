//! The persisted feature corpus and its binary container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic          8 bytes  "RGEMIDX\0"
//! version        u32
//! hue/sat/val    3 x u32
//! max_dimension  u32      0 when ingestion did not downscale
//! region count   u8       followed by (u8 length, ascii name) per region
//! entry count    u64
//! entries        (u32 len, id) (u32 len, label) (u32 len, path) then
//!                feature_len x f64
//! digest         32 bytes SHA-256 of every preceding byte
//! ```

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{BinConfig, FeatureVector};
use crate::ingest::Manifest;
use crate::pipeline::Descriptor;
use crate::regions::Region;

pub const MAGIC: &[u8; 8] = b"RGEMIDX\0";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct IndexEntry {
    pub image_id: String,
    pub class_label: String,
    pub source_path: String,
    pub feature: FeatureVector,
}

/// Immutable-once-built collection of descriptors sharing one [`BinConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureIndex {
    config: BinConfig,
    max_dimension: Option<u32>,
    entries: Vec<IndexEntry>,
    ids: std::collections::HashMap<String, usize>,
}

impl FeatureIndex {
    pub fn new(config: BinConfig) -> Self {
        Self {
            config,
            max_dimension: None,
            entries: Vec::new(),
            ids: Default::default(),
        }
    }

    pub fn with_max_dimension(mut self, max_dimension: Option<u32>) -> Self {
        self.max_dimension = max_dimension.filter(|&d| d > 0);
        self
    }

    pub fn format_version(&self) -> u32 {
        FORMAT_VERSION
    }

    pub fn config(&self) -> &BinConfig {
        &self.config
    }

    pub fn max_dimension(&self) -> Option<u32> {
        self.max_dimension
    }

    /// Descriptor matching the settings this index was built with.
    pub fn descriptor(&self) -> Descriptor {
        Descriptor::new(self.config).with_max_dimension(self.max_dimension)
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&IndexEntry> {
        self.ids.get(image_id).map(|&i| &self.entries[i])
    }

    pub fn push(&mut self, entry: IndexEntry) -> Result<()> {
        if entry.feature.config() != &self.config {
            return Err(Error::ConfigMismatch {
                index: self.config.to_string(),
                query: entry.feature.config().to_string(),
            });
        }
        if self.ids.contains_key(&entry.image_id) {
            return Err(Error::DuplicateId(entry.image_id));
        }
        self.ids.insert(entry.image_id.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    /// Distinct class labels in first-seen order.
    pub fn class_labels(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.entries
            .iter()
            .map(|e| e.class_label.as_str())
            .filter(|l| seen.insert(*l))
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let feature_len = self.config.feature_len();
        let mut buf = Vec::with_capacity(64 + self.entries.len() * (feature_len * 8 + 64));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for n in [self.config.hue_bins, self.config.sat_bins, self.config.val_bins] {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        buf.extend_from_slice(&self.max_dimension.unwrap_or(0).to_le_bytes());
        buf.push(Region::ALL.len() as u8);
        for region in Region::ALL {
            buf.push(region.name().len() as u8);
            buf.extend_from_slice(region.name().as_bytes());
        }
        buf.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for entry in &self.entries {
            for s in [&entry.image_id, &entry.class_label, &entry.source_path] {
                buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
                buf.extend_from_slice(s.as_bytes());
            }
            for v in entry.feature.values() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 + DIGEST_LEN {
            if bytes.len() >= MAGIC.len() && &bytes[..MAGIC.len()] != MAGIC {
                return Err(Error::InvalidFormat("bad magic bytes".into()));
            }
            return Err(Error::ChecksumMismatch);
        }
        if &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::InvalidFormat("bad magic bytes".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version > FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let (payload, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(payload).as_slice() != digest {
            return Err(Error::ChecksumMismatch);
        }

        let mut r = Reader { buf: payload, pos: 12 };
        let config = BinConfig::new(r.u32()?, r.u32()?, r.u32()?)?;
        let max_dimension = Some(r.u32()?).filter(|&d| d > 0);
        let region_count = r.u8()? as usize;
        let names = (0..region_count)
            .map(|_| {
                let len = r.u8()? as usize;
                r.string(len)
            })
            .collect::<Result<Vec<_>>>()?;
        let expected: Vec<&str> = Region::ALL.iter().map(|r| r.name()).collect();
        if names != expected {
            return Err(Error::InvalidFormat(format!("unexpected region order {names:?}")));
        }
        let count = r.u64()? as usize;
        let feature_len = config.feature_len();
        let mut index = FeatureIndex::new(config).with_max_dimension(max_dimension);
        index.entries.reserve(count.min(payload.len() / (feature_len * 8).max(1)));
        for _ in 0..count {
            let image_id = r.prefixed_string()?;
            let class_label = r.prefixed_string()?;
            let source_path = r.prefixed_string()?;
            let values = (0..feature_len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let feature = FeatureVector::from_values(config, values)?;
            index.push(IndexEntry {
                image_id,
                class_label,
                source_path,
                feature,
            })?;
        }
        if r.pos != payload.len() {
            return Err(Error::InvalidFormat(format!("{} trailing bytes", payload.len() - r.pos)));
        }
        Ok(index)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::InvalidFormat("unexpected end of payload".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, len: usize) -> Result<String> {
        String::from_utf8(self.take(len)?.to_vec()).map_err(|e| Error::InvalidFormat(e.to_string()))
    }

    fn prefixed_string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        self.string(len)
    }
}

pub fn save_index(index: &FeatureIndex, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&index.to_bytes())?;
    file.sync_all()?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<FeatureIndex> {
    FeatureIndex::from_bytes(&std::fs::read(path)?)
}

/// One image that could not be indexed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BuildFailure {
    pub path: String,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub failures: Vec<BuildFailure>,
}

impl BuildReport {
    pub fn is_empty(&self) -> bool {
        self.failures.is_empty()
    }

    /// One JSON object per line: `{"path", "kind", "message"}`.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for failure in &self.failures {
            serde_json::to_writer(&mut out, failure).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Extracts every manifest image in parallel. Entry order follows the
/// manifest; images that fail are reported and skipped.
pub fn build_index(manifest: &Manifest, descriptor: &Descriptor) -> Result<(FeatureIndex, BuildReport)> {
    descriptor.config.validate()?;
    if manifest.records.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let outcomes: Vec<Result<FeatureVector>> = manifest
        .records
        .par_iter()
        .map(|record| descriptor.describe_path(&record.path))
        .collect();

    let mut index = FeatureIndex::new(descriptor.config).with_max_dimension(descriptor.max_dimension);
    let mut report = BuildReport::default();
    for (record, outcome) in manifest.records.iter().zip(outcomes) {
        match outcome {
            Ok(feature) => index.push(IndexEntry {
                image_id: record.image_id.clone(),
                class_label: record.class_label.clone(),
                source_path: record.path.to_string_lossy().into_owned(),
                feature,
            })?,
            Err(err) => {
                log::warn!("skipping {}: {err}", record.path.display());
                report.failures.push(BuildFailure {
                    path: record.path.to_string_lossy().into_owned(),
                    kind: err.kind().to_string(),
                    message: err.to_string(),
                });
            }
        }
    }
    if index.is_empty() {
        return Err(Error::AllImagesFailed(report.failures.len()));
    }
    Ok((index, report))
}
