//! Optional TOML settings file. Every key mirrors a command-line flag; a flag
//! given on the command line always wins.

use std::path::Path;

use anyhow::{bail, Context};
use regiongem::eval::DEFAULT_K_VALUES;
use regiongem::ingest::{DEFAULT_RATIO, DEFAULT_SEED};
use regiongem::BinConfig;
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub hue_bins: Option<u32>,
    pub sat_bins: Option<u32>,
    pub val_bins: Option<u32>,
    pub max_dimension: Option<u32>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub ratio: Option<f64>,
    pub k_values: Option<Vec<usize>>,
    pub bind: Option<String>,
    pub default_k: Option<usize>,
    pub max_upload_bytes: Option<usize>,
    pub allow_origins: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Picks the flag value, then the file value, then the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn resolve_bins(
    flags: (Option<u32>, Option<u32>, Option<u32>),
    file: &FileConfig,
) -> anyhow::Result<BinConfig> {
    let d = BinConfig::default();
    let config = BinConfig {
        hue_bins: pick(flags.0, file.hue_bins, d.hue_bins),
        sat_bins: pick(flags.1, file.sat_bins, d.sat_bins),
        val_bins: pick(flags.2, file.val_bins, d.val_bins),
    };
    config.validate()?;
    Ok(config)
}

pub fn resolve_ratio(flag: Option<f64>, file: &FileConfig) -> anyhow::Result<f64> {
    let ratio = pick(flag, file.ratio, DEFAULT_RATIO);
    if !(ratio > 0.0 && ratio < 1.0) {
        bail!("ratio must lie strictly between 0 and 1, got {ratio}");
    }
    Ok(ratio)
}

pub fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> u64 {
    pick(flag, file.seed, DEFAULT_SEED)
}

pub fn resolve_k_values(flag: Option<Vec<usize>>, file: &FileConfig) -> anyhow::Result<Vec<usize>> {
    let mut ks = pick(flag, file.k_values.clone(), DEFAULT_K_VALUES.to_vec());
    if ks.is_empty() || ks.contains(&0) {
        bail!("k values must be >= 1");
    }
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: FileConfig = toml::from_str("hue-bins = 8\nsat-bins = 4\nseed = 7\nk-values = [3, 1]").unwrap();
        let bins = resolve_bins((Some(12), None, None), &file).unwrap();
        assert_eq!((bins.hue_bins, bins.sat_bins, bins.val_bins), (12, 4, 3));
        assert_eq!(resolve_seed(None, &file), 7);
        assert_eq!(resolve_seed(Some(1), &file), 1);
        assert_eq!(resolve_k_values(None, &file).unwrap(), vec![1, 3]);
        assert_eq!(resolve_k_values(None, &FileConfig::default()).unwrap(), vec![1, 5, 10, 15, 20]);
        assert_eq!(resolve_ratio(None, &file).unwrap(), 0.9);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(resolve_bins((Some(0), None, None), &FileConfig::default()).is_err());
        assert!(resolve_ratio(Some(1.0), &FileConfig::default()).is_err());
        assert!(resolve_k_values(Some(vec![0, 5]), &FileConfig::default()).is_err());
        assert!(toml::from_str::<FileConfig>("colour = 3").is_err());
    }
}
