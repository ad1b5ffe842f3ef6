use std::path::Path;

use crate::error::Result;
use crate::features::{extract_features, BinConfig, FeatureVector};
use crate::imaging::{decode_image, rgb_to_hsv, RgbImage};
use crate::regions::{build_masks, make_region_spec};

/// Full image-to-descriptor pipeline: optional downscale, HSV conversion,
/// region masks and histogram extraction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Descriptor {
    pub config: BinConfig,
    /// Longest-side bound applied before extraction. `None` keeps full size.
    pub max_dimension: Option<u32>,
}

impl Descriptor {
    pub fn new(config: BinConfig) -> Self {
        Self {
            config,
            max_dimension: None,
        }
    }

    pub fn with_max_dimension(mut self, max_dimension: Option<u32>) -> Self {
        self.max_dimension = max_dimension.filter(|&d| d > 0);
        self
    }

    pub fn describe_rgb(&self, img: &RgbImage) -> Result<FeatureVector> {
        let scaled;
        let img = match self.max_dimension {
            Some(max) => {
                scaled = img.downscale(max)?;
                &scaled
            }
            None => img,
        };
        let masks = build_masks(&make_region_spec(img.width(), img.height())?);
        extract_features(&rgb_to_hsv(img), &masks, &self.config)
    }

    pub fn describe_bytes(&self, bytes: &[u8]) -> Result<FeatureVector> {
        self.describe_rgb(&decode_image(bytes)?)
    }

    pub fn describe_path(&self, path: impl AsRef<Path>) -> Result<FeatureVector> {
        self.describe_bytes(&std::fs::read(path)?)
    }
}
