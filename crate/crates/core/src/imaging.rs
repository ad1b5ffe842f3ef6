//! Raster decoding and the RGB to HSV (hexcone) conversion.

use std::io::Cursor;

use image::{imageops::FilterType, DynamicImage, ImageDecoder, ImageError, ImageReader};

use crate::error::{Error, Result};

/// An 8-bit RGB raster in row-major order. Both sides are at least 2 pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dimensions(width, height)?;
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{expected} pixels"),
                found: format!("{} pixels", pixels.len()),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        check_dimensions(width, height)?;
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn to_image(&self) -> image::RgbImage {
        let raw = self.pixels.iter().flatten().copied().collect();
        image::RgbImage::from_raw(self.width, self.height, raw).expect("buffer length matches dimensions")
    }

    pub fn from_image(img: &image::RgbImage) -> Result<Self> {
        let pixels = img.pixels().map(|p| p.0).collect();
        Self::new(img.width(), img.height(), pixels)
    }

    /// Shrinks the image so its longest side is at most `max_dimension`.
    /// Images already within the bound are returned unchanged.
    pub fn downscale(&self, max_dimension: u32) -> Result<Self> {
        let longest = self.width.max(self.height);
        if max_dimension == 0 || longest <= max_dimension {
            return Ok(self.clone());
        }
        let scale = max_dimension as f64 / longest as f64;
        let w = ((self.width as f64 * scale).round() as u32).max(2);
        let h = ((self.height as f64 * scale).round() as u32).max(2);
        let resized = image::imageops::resize(&self.to_image(), w, h, FilterType::Triangle);
        Self::from_image(&resized)
    }
}

fn check_dimensions(width: u32, height: u32) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(Error::DegenerateImage { width, height });
    }
    Ok(())
}

/// One HSV pixel: hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl Hsv {
    pub fn new(h: f64, s: f64, v: f64) -> Self {
        Self { h, s, v }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HsvImage {
    width: u32,
    height: u32,
    pixels: Vec<Hsv>,
}

impl HsvImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Hsv>) -> Result<Self> {
        check_dimensions(width, height)?;
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{expected} pixels"),
                found: format!("{} pixels", pixels.len()),
            });
        }
        if let Some(p) = pixels.iter().find(|p| !in_hsv_domain(p)) {
            return Err(Error::DomainError(format!("hsv pixel {p:?} out of range")));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Hsv] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Hsv {
        self.pixels[(y * self.width + x) as usize]
    }
}

pub(crate) fn in_hsv_domain(p: &Hsv) -> bool {
    (0.0..360.0).contains(&p.h) && (0.0..=1.0).contains(&p.s) && (0.0..=1.0).contains(&p.v)
}

/// Decodes a PNG or JPEG byte stream. Alpha is dropped and grayscale is
/// replicated across the three channels.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::CorruptImage(e.to_string()))?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat);
    }
    let mut decoder = reader.into_decoder().map_err(map_image_error)?;
    let orientation = decoder.orientation().ok();
    let mut dynamic = DynamicImage::from_decoder(decoder).map_err(map_image_error)?;
    if let Some(orientation) = orientation {
        dynamic.apply_orientation(orientation);
    }
    let rgb = dynamic.to_rgb8();
    RgbImage::from_image(&rgb)
}

fn map_image_error(err: ImageError) -> Error {
    match err {
        ImageError::Unsupported(_) => Error::UnsupportedFormat,
        other => Error::CorruptImage(other.to_string()),
    }
}

/// Hexcone conversion of one pixel. Achromatic pixels get hue 0.
pub fn pixel_to_hsv([r, g, b]: [u8; 3]) -> Hsv {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max as f64 / 255.0;
    if max == 0 {
        return Hsv::new(0.0, 0.0, 0.0);
    }
    let delta = (max - min) as f64;
    let s = delta / max as f64;
    if max == min {
        return Hsv::new(0.0, s, v);
    }
    let (rf, gf, bf) = (r as f64, g as f64, b as f64);
    let sector = if max == r {
        (gf - bf) / delta
    } else if max == g {
        (bf - rf) / delta + 2.0
    } else {
        (rf - gf) / delta + 4.0
    };
    let mut h = 60.0 * sector;
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    Hsv::new(h, s, v)
}

/// Inverse hexcone transform, rounding each channel to the nearest integer.
pub fn hsv_to_pixel(hsv: Hsv) -> [u8; 3] {
    let c = hsv.v * hsv.s;
    let hp = (hsv.h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = hsv.v - c;
    let to_u8 = |ch: f64| ((ch + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [to_u8(r1), to_u8(g1), to_u8(b1)]
}

pub fn rgb_to_hsv(img: &RgbImage) -> HsvImage {
    HsvImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| pixel_to_hsv(p)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn encode(img: DynamicImage, format: image::ImageFormat) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, format).unwrap();
        out.into_inner()
    }

    #[test]
    fn decodes_red_png() {
        let img = image::RgbImage::from_pixel(2, 2, image::Rgb([255, 0, 0]));
        let bytes = encode(DynamicImage::ImageRgb8(img), image::ImageFormat::Png);
        let decoded = decode_image(&bytes).unwrap();
        assert_eq!(decoded.pixels(), &[[255, 0, 0]; 4]);
    }

    #[test]
    fn grayscale_jpeg_replicates_channels() {
        let img = image::GrayImage::from_pixel(8, 8, image::Luma([128]));
        let bytes = encode(DynamicImage::ImageLuma8(img), image::ImageFormat::Jpeg);
        let decoded = decode_image(&bytes).unwrap();
        for p in decoded.pixels() {
            assert_eq!(p[0], p[1]);
            assert_eq!(p[1], p[2]);
            assert!((p[0] as i32 - 128).abs() <= 1, "{p:?}");
        }
    }

    #[test]
    fn alpha_is_discarded() {
        let img = image::RgbaImage::from_pixel(3, 2, image::Rgba([10, 20, 30, 0]));
        let bytes = encode(DynamicImage::ImageRgba8(img), image::ImageFormat::Png);
        assert_eq!(decode_image(&bytes).unwrap().pixels(), &[[10, 20, 30]; 6]);
    }

    #[test]
    fn one_pixel_image_is_degenerate() {
        let img = image::RgbImage::from_pixel(1, 1, image::Rgb([1, 2, 3]));
        let bytes = encode(DynamicImage::ImageRgb8(img), image::ImageFormat::Png);
        assert!(matches!(decode_image(&bytes), Err(Error::DegenerateImage { width: 1, height: 1 })));
    }

    #[test]
    fn unknown_and_corrupt_bytes() {
        assert!(matches!(decode_image(b"definitely not an image"), Err(Error::UnsupportedFormat)));
        let img = image::RgbImage::from_pixel(16, 16, image::Rgb([1, 2, 3]));
        let mut bytes = encode(DynamicImage::ImageRgb8(img), image::ImageFormat::Png);
        bytes.truncate(40);
        assert!(matches!(decode_image(&bytes), Err(Error::CorruptImage(_))));
    }

    #[test]
    fn reference_conversions() {
        assert_eq!(pixel_to_hsv([255, 0, 0]), Hsv::new(0.0, 1.0, 1.0));
        assert_eq!(pixel_to_hsv([0, 0, 0]), Hsv::new(0.0, 0.0, 0.0));
        assert_eq!(pixel_to_hsv([128, 128, 128]), Hsv::new(0.0, 0.0, 128.0 / 255.0));
        assert_eq!(pixel_to_hsv([0, 255, 0]).h, 120.0);
        assert_eq!(pixel_to_hsv([0, 0, 255]).h, 240.0);
        assert_eq!(pixel_to_hsv([255, 0, 1]).h, 360.0 - 60.0 / 255.0);
    }

    #[test]
    fn downscale_bounds_longest_side() {
        let img = RgbImage::from_fn(40, 10, |x, _| [x as u8, 0, 0]).unwrap();
        let small = img.downscale(20).unwrap();
        assert_eq!((small.width(), small.height()), (20, 5));
        assert_eq!(img.downscale(64).unwrap(), img);
    }

    proptest! {
        #[test]
        fn round_trip_within_one_step(r: u8, g: u8, b: u8) {
            let hsv = pixel_to_hsv([r, g, b]);
            prop_assert!(in_hsv_domain(&hsv));
            let back = hsv_to_pixel(hsv);
            for (a, b) in back.iter().zip([r, g, b]) {
                prop_assert!((*a as i32 - b as i32).abs() <= 1, "{:?} -> {:?} -> {:?}", [r, g, b], hsv, back);
            }
        }

        #[test]
        fn hue_never_reaches_360(r: u8, g: u8, b: u8) {
            prop_assert!(pixel_to_hsv([r, g, b]).h < 360.0);
        }

        #[test]
        fn scaling_scales_value_only(
            base in (0u8..16, 0u8..16, 0u8..16).prop_filter("non-black", |(r, g, b)| r | g | b != 0),
            m1 in 1u8..16,
            m2 in 1u8..16,
        ) {
            let px = |m: u8| pixel_to_hsv([base.0 * m, base.1 * m, base.2 * m]);
            let (a, b) = (px(m1), px(m2));
            prop_assert!((a.h - b.h).abs() < 1e-9);
            prop_assert!((a.s - b.s).abs() < 1e-9);
            prop_assert!((b.v - a.v * m2 as f64 / m1 as f64).abs() < 1e-9);
        }
    }
}
