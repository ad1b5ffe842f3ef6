//! Dataset scanning (class folders, id-keyed CSV metadata) and stratified
//! train/test splitting.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_RATIO: f64 = 0.9;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub image_id: String,
    pub class_label: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_name: String,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.records.iter().map(|r| &r.class_label).collect::<HashSet<_>>().len()
    }

    /// Records whose ids are in `ids`, in manifest order.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a String>) -> Manifest {
        let keep: HashSet<&String> = ids.into_iter().collect();
        Manifest {
            dataset_name: self.dataset_name.clone(),
            records: self.records.iter().filter(|r| keep.contains(&r.image_id)).cloned().collect(),
        }
    }

    /// One JSON record per line.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn is_image_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>> {
    let unreadable = |source| Error::UnreadableDirectory {
        path: path.to_path_buf(),
        source,
    };
    let mut entries = std::fs::read_dir(path)
        .map_err(unreadable)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(unreadable)?;
    entries.sort();
    Ok(entries)
}

/// Scans `root/<class>/<image>` into a manifest. Image ids are the paths
/// relative to `root`, joined with `/`.
pub fn scan_class_folders(root: impl AsRef<Path>) -> Result<Manifest> {
    let root = root.as_ref();
    let mut records = Vec::new();
    for class_dir in sorted_dir(root)?.into_iter().filter(|p| p.is_dir()) {
        let Some(label) = class_dir.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
            continue;
        };
        for file in sorted_dir(&class_dir)?.into_iter().filter(|p| p.is_file() && is_image_file(p)) {
            let name = file.file_name().unwrap().to_string_lossy();
            records.push(ManifestRecord {
                image_id: format!("{label}/{name}"),
                class_label: label.clone(),
                path: file,
            });
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    let dataset_name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| root.display().to_string());
    Ok(Manifest {
        dataset_name,
        records,
    })
}

/// `column=value` row predicate, e.g. `subCategory=Jewellery`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryFilter {
    pub column: String,
    pub value: String,
}

impl std::str::FromStr for CategoryFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (column, value) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("filter {s:?} is not column=value")))?;
        Ok(Self {
            column: column.trim().to_string(),
            value: value.trim().to_string(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub filter: Option<CategoryFilter>,
    pub label_column: String,
    pub id_column: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            filter: Some(CategoryFilter {
                column: "subCategory".into(),
                value: "Jewellery".into(),
            }),
            label_column: "articleType".into(),
            id_column: "id".into(),
        }
    }
}

/// A CSV row that passed the filter but has no image on disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MissingImage {
    pub id: String,
    pub line: u64,
}

/// Reads id-keyed CSV metadata. Images are looked up as `<image_root>/<id>.<ext>`.
pub fn scan_csv_metadata(
    csv_path: impl AsRef<Path>,
    image_root: impl AsRef<Path>,
    options: &CsvOptions,
) -> Result<(Manifest, Vec<MissingImage>)> {
    let csv_path = csv_path.as_ref();
    let image_root = image_root.as_ref();
    // catalog exports often carry unquoted commas in free-text trailing columns
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(csv_path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
            _ => Error::MalformedCsv(e.to_string()),
        })?;
    let headers = reader.headers().map_err(|e| Error::MalformedCsv(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MalformedCsv(format!("missing column {name:?}")))
    };
    let id_col = column(&options.id_column)?;
    let label_col = column(&options.label_column)?;
    let filter_col = options.filter.as_ref().map(|f| column(&f.column)).transpose()?;

    let mut records = Vec::new();
    let mut missing = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedCsv(e.to_string()))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| {
            row.get(i)
                .map(str::trim)
                .ok_or_else(|| Error::MalformedCsv(format!("line {line}: expected at least {} fields", i + 1)))
        };
        if let (Some(filter), Some(col)) = (&options.filter, filter_col) {
            if field(col)? != filter.value {
                continue;
            }
        }
        let id = field(id_col)?.to_string();
        let label = field(label_col)?.to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::MalformedCsv(format!("line {line}: duplicate id {id:?}")));
        }
        let found = IMAGE_EXTENSIONS
            .iter()
            .map(|ext| image_root.join(format!("{id}.{ext}")))
            .find(|p| p.is_file());
        match found {
            Some(path) => records.push(ManifestRecord {
                image_id: id,
                class_label: label,
                path,
            }),
            None => missing.push(MissingImage { id, line }),
        }
    }
    let dataset_name = csv_path
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((
        Manifest {
            dataset_name,
            records,
        },
        missing,
    ))
}

/// Disjoint train/test ids, each listed in manifest order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Split {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
    pub ratio: f64,
}

fn class_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Number of records of a class that go to the train side.
pub fn train_count(class_size: usize, ratio: f64) -> usize {
    if class_size <= 1 {
        return class_size;
    }
    // the epsilon absorbs products such as 90 * 0.7 = 62.99999999999999
    let n = (class_size as f64 * ratio + 1e-9).floor() as usize;
    n.clamp(1, class_size)
}

/// Stratified split: each class is shuffled with a generator seeded by
/// `(seed, label)` and its first `train_count` records become train.
pub fn split_manifest(manifest: &Manifest, ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio {ratio} must lie in (0, 1)")));
    }
    if manifest.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, record) in manifest.records.iter().enumerate() {
        by_class.entry(&record.class_label).or_default().push(i);
    }
    let mut is_train = vec![false; manifest.len()];
    for (label, mut members) in by_class {
        members.shuffle(&mut class_rng(seed, label));
        for &i in &members[..train_count(members.len(), ratio)] {
            is_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = manifest.records.iter().zip(is_train).partition(|(_, t)| *t);
    Ok(Split {
        train_ids: train.into_iter().map(|(r, _)| r.image_id.clone()).collect(),
        test_ids: test.into_iter().map(|(r, _)| r.image_id.clone()).collect(),
        seed,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn manifest(classes: &[(&str, usize)]) -> Manifest {
        let records = classes
            .iter()
            .flat_map(|&(label, n)| {
                (0..n).map(move |i| ManifestRecord {
                    image_id: format!("{label}/{i}.png"),
                    class_label: label.to_string(),
                    path: PathBuf::from(format!("{label}/{i}.png")),
                })
            })
            .collect();
        Manifest {
            dataset_name: "synthetic".into(),
            records,
        }
    }

    #[test]
    fn ten_records_split_nine_one() {
        let split = split_manifest(&manifest(&[("a", 10)]), 0.9, 42).unwrap();
        assert_eq!((split.train_ids.len(), split.test_ids.len()), (9, 1));
    }

    #[test]
    fn singleton_class_goes_to_train() {
        let split = split_manifest(&manifest(&[("a", 1), ("b", 5)]), 0.9, 42).unwrap();
        assert!(split.train_ids.contains(&"a/0.png".to_string()));
        assert_eq!(split.test_ids.len(), 1);
    }

    #[test]
    fn float_products_round_as_integers() {
        assert_eq!(train_count(30, 0.9), 27);
        assert_eq!(train_count(90, 0.7), 63);
        assert_eq!(train_count(2, 0.1), 1);
        assert_eq!(train_count(1, 0.5), 1);
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let m = manifest(&[("a", 20), ("b", 13)]);
        assert_eq!(split_manifest(&m, 0.9, 42).unwrap(), split_manifest(&m, 0.9, 42).unwrap());
        let a = split_manifest(&m, 0.5, 1).unwrap();
        let b = split_manifest(&m, 0.5, 2).unwrap();
        assert_ne!(a.test_ids, b.test_ids);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(split_manifest(&Manifest::default(), 0.9, 42), Err(Error::EmptyManifest)));
        assert!(matches!(split_manifest(&manifest(&[("a", 3)]), 1.0, 42), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn filter_parsing() {
        let f: CategoryFilter = "subCategory=Jewellery".parse().unwrap();
        assert_eq!((f.column.as_str(), f.value.as_str()), ("subCategory", "Jewellery"));
        assert!("nonsense".parse::<CategoryFilter>().is_err());
    }

    proptest! {
        #[test]
        fn split_is_stratified_partition(
            sizes in prop::collection::vec(1usize..40, 1..6),
            ratio in 0.05f64..0.95,
            seed: u64,
        ) {
            let labels: Vec<String> = (0..sizes.len()).map(|i| format!("c{i}")).collect();
            let classes: Vec<(&str, usize)> = labels.iter().map(String::as_str).zip(sizes.iter().copied()).collect();
            let m = manifest(&classes);
            let split = split_manifest(&m, ratio, seed).unwrap();
            let train: HashSet<_> = split.train_ids.iter().collect();
            let test: HashSet<_> = split.test_ids.iter().collect();
            prop_assert!(train.is_disjoint(&test));
            prop_assert_eq!(train.len() + test.len(), m.len());
            for (label, n) in classes {
                let in_test = split.test_ids.iter().filter(|id| id.starts_with(&format!("{label}/"))).count();
                let deviation = (in_test as f64 / n as f64 - (1.0 - ratio)).abs();
                prop_assert!(deviation <= 1.0 / n as f64 + 1e-9, "class {} n={} test={}", label, n, in_test);
            }
        }
    }
}
