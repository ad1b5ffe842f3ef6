//! Per-region quantized 3D HSV histograms, concatenated into one descriptor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{in_hsv_domain, Hsv, HsvImage};
use crate::regions::{Region, RegionMaskSet};

/// Bin counts per HSV channel. Defaults are 10 hue, 14 saturation, 3 value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinConfig {
    pub hue_bins: u32,
    pub sat_bins: u32,
    pub val_bins: u32,
}

impl Default for BinConfig {
    fn default() -> Self {
        Self {
            hue_bins: 10,
            sat_bins: 14,
            val_bins: 3,
        }
    }
}

impl fmt::Display for BinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}/s{}/v{}", self.hue_bins, self.sat_bins, self.val_bins)
    }
}

impl BinConfig {
    pub fn new(hue_bins: u32, sat_bins: u32, val_bins: u32) -> Result<Self> {
        let config = Self {
            hue_bins,
            sat_bins,
            val_bins,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hue_bins == 0 || self.sat_bins == 0 || self.val_bins == 0 {
            return Err(Error::InvalidArgument(format!("bin counts must be >= 1, got {self}")));
        }
        Ok(())
    }

    pub fn bins_per_region(&self) -> usize {
        self.hue_bins as usize * self.sat_bins as usize * self.val_bins as usize
    }

    pub fn feature_len(&self) -> usize {
        Region::ALL.len() * self.bins_per_region()
    }

    fn quantize(&self, p: Hsv) -> usize {
        let clamp = |x: f64, bins: u32| ((x.floor() as i64).clamp(0, bins as i64 - 1)) as usize;
        let h = clamp(p.h / 360.0 * self.hue_bins as f64, self.hue_bins);
        let s = clamp(p.s * self.sat_bins as f64, self.sat_bins);
        let v = clamp(p.v * self.val_bins as f64, self.val_bins);
        (h * self.sat_bins as usize + s) * self.val_bins as usize + v
    }
}

/// Flat histogram bin of one HSV pixel: `(h * sat_bins + s) * val_bins + v`.
pub fn bin_index(pixel: Hsv, config: &BinConfig) -> Result<usize> {
    if !in_hsv_domain(&pixel) {
        return Err(Error::DomainError(format!("hsv pixel {pixel:?} out of range")));
    }
    Ok(config.quantize(pixel))
}

/// Five L1-normalized region histograms in canonical region order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    config: BinConfig,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn from_values(config: BinConfig, values: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if values.len() != config.feature_len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} components", config.feature_len()),
                found: format!("{} components", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::DomainError(format!("feature component {v} is not a non-negative real")));
        }
        Ok(Self { config, values })
    }

    pub fn config(&self) -> &BinConfig {
        &self.config
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, region: Region) -> &[f64] {
        let n = self.config.bins_per_region();
        &self.values[region.index() * n..(region.index() + 1) * n]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_dims(img: &HsvImage, masks: &RegionMaskSet) -> Result<()> {
    if img.width() != masks.width() || img.height() != masks.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", masks.width(), masks.height()),
            found: format!("{}x{}", img.width(), img.height()),
        });
    }
    Ok(())
}

/// Unnormalized per-region bin counts, concatenated in canonical order.
pub fn raw_counts(img: &HsvImage, masks: &RegionMaskSet, config: &BinConfig) -> Result<Vec<u64>> {
    config.validate()?;
    check_dims(img, masks)?;
    let per_region = config.bins_per_region();
    let bins: Vec<usize> = img.pixels().iter().map(|&p| config.quantize(p)).collect();
    let mut counts = vec![0u64; config.feature_len()];
    for (block, mask) in counts.chunks_mut(per_region).zip(masks.masks().iter()) {
        for (&bin, _) in bins.iter().zip(mask.iter()).filter(|(_, &m)| m) {
            block[bin] += 1;
        }
    }
    Ok(counts)
}

/// The descriptor: each region's histogram divided by that region's pixel
/// count. Empty regions yield an all-zero block.
pub fn extract_features(img: &HsvImage, masks: &RegionMaskSet, config: &BinConfig) -> Result<FeatureVector> {
    let counts = raw_counts(img, masks, config)?;
    let mut values = Vec::with_capacity(counts.len());
    for block in counts.chunks(config.bins_per_region()) {
        let total: u64 = block.iter().sum();
        if total == 0 {
            values.extend(std::iter::repeat_n(0.0, block.len()));
        } else {
            let total = total as f64;
            values.extend(block.iter().map(|&c| c as f64 / total));
        }
    }
    Ok(FeatureVector {
        config: *config,
        values,
    })
}
