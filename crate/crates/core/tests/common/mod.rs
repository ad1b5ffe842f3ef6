//! Naive reference implementations used as test oracles. They are written
//! directly from the formulas and share no code with the library.
#![allow(dead_code)]

use rand::Rng;
use regiongem::{Hsv, HsvImage};

/// `½ Σ (x − y)² / (x + y)` with a plain index loop.
pub fn naive_chi_square(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mut total = 0.0;
    for i in 0..x.len() {
        if x[i] + y[i] != 0.0 {
            total += (x[i] - y[i]) * (x[i] - y[i]) / (x[i] + y[i]);
        }
    }
    total / 2.0
}

/// Center and semi-axes the Python way: `(w // 2, h // 2)` and
/// `int(w * 0.7) // 2`.
pub fn naive_geometry(w: u32, h: u32) -> (i128, i128, i128, i128) {
    let axis = |side: u32| ((side as f64) * 0.7).floor() as i128 / 2;
    ((w / 2) as i128, (h / 2) as i128, axis(w), axis(h))
}

/// Exact evaluation of `((x − cx)/ax)² + ((y − cy)/ay)² ≤ 1` by cross
/// multiplication; an empty ellipse when either axis is 0.
pub fn naive_in_ellipse(x: u32, y: u32, w: u32, h: u32) -> bool {
    let (cx, cy, ax, ay) = naive_geometry(w, h);
    if ax == 0 || ay == 0 {
        return false;
    }
    let dx = x as i128 - cx;
    let dy = y as i128 - cy;
    (dx * dx) * (ay * ay) + (dy * dy) * (ax * ax) <= (ax * ax) * (ay * ay)
}

/// Region index 0..5 in the order rTl, rTr, rBr, rBl, ellipse.
pub fn naive_region(x: u32, y: u32, w: u32, h: u32) -> usize {
    if naive_in_ellipse(x, y, w, h) {
        return 4;
    }
    let (cx, cy) = (w / 2, h / 2);
    if y < cy {
        if x < cx {
            0
        } else {
            1
        }
    } else if x >= cx {
        2
    } else {
        3
    }
}

pub fn naive_bin(p: Hsv, hue_bins: usize, sat_bins: usize, val_bins: usize) -> usize {
    let mut hi = (p.h / 360.0 * hue_bins as f64).floor() as usize;
    let mut si = (p.s * sat_bins as f64).floor() as usize;
    let mut vi = (p.v * val_bins as f64).floor() as usize;
    if hi >= hue_bins {
        hi = hue_bins - 1;
    }
    if si >= sat_bins {
        si = sat_bins - 1;
    }
    if vi >= val_bins {
        vi = val_bins - 1;
    }
    (hi * sat_bins + si) * val_bins + vi
}

/// Double loop over the raster accumulating raw counts per region.
pub fn naive_counts(img: &HsvImage, hue_bins: usize, sat_bins: usize, val_bins: usize) -> Vec<u64> {
    let per_region = hue_bins * sat_bins * val_bins;
    let mut counts = vec![0u64; 5 * per_region];
    for y in 0..img.height() {
        for x in 0..img.width() {
            let region = naive_region(x, y, img.width(), img.height());
            let bin = naive_bin(img.get(x, y), hue_bins, sat_bins, val_bins);
            counts[region * per_region + bin] += 1;
        }
    }
    counts
}

pub fn random_rgb(rng: &mut impl Rng, w: u32, h: u32) -> regiongem::RgbImage {
    regiongem::RgbImage::from_fn(w, h, |_, _| rng.gen()).unwrap()
}

/// Nearest-neighbour 2× upscale.
pub fn upscale2(img: &regiongem::RgbImage) -> regiongem::RgbImage {
    regiongem::RgbImage::from_fn(img.width() * 2, img.height() * 2, |x, y| img.get(x / 2, y / 2)).unwrap()
}

pub fn encode_png(img: &regiongem::RgbImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.to_image().write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}
