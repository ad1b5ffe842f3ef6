//! Deterministic toy catalog: each class is an object of one hue band on a
//! light, noisy background, placed at a random spot in the frame.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::imaging::{hsv_to_pixel, Hsv, RgbImage};
use crate::ingest::{Manifest, ManifestRecord};
use crate::sheet::save_png;

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub classes: usize,
    pub per_class: usize,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    /// Half-width in degrees of each class's hue band.
    pub hue_jitter: f64,
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        Self {
            classes: 8,
            per_class: 30,
            width: 64,
            height: 64,
            seed: 7,
            hue_jitter: 6.0,
        }
    }
}

pub struct SyntheticImage {
    pub image_id: String,
    pub class_label: String,
    pub image: RgbImage,
}

impl SyntheticCorpus {
    pub fn class_label(&self, class: usize) -> String {
        format!("class{class:02}")
    }

    pub fn class_hue(&self, class: usize) -> f64 {
        (5.0 + class as f64 * 360.0 / self.classes as f64).rem_euclid(360.0)
    }

    pub fn generate(&self) -> Vec<SyntheticImage> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.classes * self.per_class);
        for class in 0..self.classes {
            for i in 0..self.per_class {
                out.push(SyntheticImage {
                    image_id: format!("{}/{i:03}.png", self.class_label(class)),
                    class_label: self.class_label(class),
                    image: self.render(class, &mut rng),
                });
            }
        }
        out
    }

    fn render(&self, class: usize, rng: &mut ChaCha8Rng) -> RgbImage {
        let (w, h) = (self.width as f64, self.height as f64);
        let hue = self.class_hue(class) + rng.gen_range(-self.hue_jitter..=self.hue_jitter);
        let sat: f64 = rng.gen_range(0.55..0.95);
        let val: f64 = rng.gen_range(0.55..0.95);
        let rx = rng.gen_range(0.18..0.30) * w;
        let ry = rng.gen_range(0.18..0.30) * h;
        let cx = rng.gen_range(rx..w - rx);
        let cy = rng.gen_range(ry..h - ry);
        let background: f64 = rng.gen_range(0.85..0.98);
        let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
        RgbImage::from_fn(self.width, self.height, |x, y| {
            let dx = (x as f64 - cx) / rx;
            let dy = (y as f64 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                let h = (hue + noise.gen_range(-3.0..3.0)).rem_euclid(360.0);
                let s = (sat + noise.gen_range(-0.05..0.05)).clamp(0.0, 1.0);
                let v = (val + noise.gen_range(-0.05..0.05)).clamp(0.0, 1.0);
                hsv_to_pixel(Hsv::new(h, s, v))
            } else {
                let v = (background + noise.gen_range(-0.03..0.03)).clamp(0.0, 1.0);
                hsv_to_pixel(Hsv::new(0.0, noise.gen_range(0.0..0.04), v))
            }
        })
        .expect("corpus dimensions are at least 2x2")
    }

    /// Writes the corpus as `<root>/<class>/<nnn>.png` and returns its manifest.
    pub fn write_class_folders(&self, root: impl AsRef<Path>) -> Result<Manifest> {
        let root = root.as_ref();
        let mut records = Vec::new();
        for img in self.generate() {
            let path = root.join(&img.image_id);
            std::fs::create_dir_all(path.parent().unwrap())?;
            save_png(&img.image, &path)?;
            records.push(ManifestRecord {
                image_id: img.image_id,
                class_label: img.class_label,
                path,
            });
        }
        Ok(Manifest {
            dataset_name: "synthetic".into(),
            records,
        })
    }
}
