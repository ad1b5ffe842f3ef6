//! Contact sheets: the query on the left, the top results to its right, each
//! result framed green when its class matches the query and red otherwise.

use std::path::Path;

use image::{imageops, Rgb};

use crate::error::{Error, Result};
use crate::imaging::RgbImage;
use crate::similarity::{Hit, RankedResult};

pub const SHEET_RESULTS: usize = 5;
pub const CELL: u32 = 160;
pub const BORDER: u32 = 6;
const GAP: u32 = 12;

pub const MATCH_COLOR: [u8; 3] = [0, 200, 0];
pub const MISMATCH_COLOR: [u8; 3] = [220, 0, 0];
pub const QUERY_COLOR: [u8; 3] = [128, 128, 128];
const BACKGROUND: [u8; 3] = [255, 255, 255];

/// Left edge of the `slot`-th cell; slot 0 is the query.
pub fn cell_origin(slot: usize) -> u32 {
    if slot == 0 {
        0
    } else {
        CELL + GAP + (slot as u32 - 1) * (CELL + GAP)
    }
}

fn draw_cell(canvas: &mut image::RgbImage, slot: usize, img: &RgbImage, frame: [u8; 3]) {
    let x0 = cell_origin(slot);
    for y in 0..CELL {
        for x in 0..CELL {
            if x < BORDER || y < BORDER || x >= CELL - BORDER || y >= CELL - BORDER {
                canvas.put_pixel(x0 + x, y, Rgb(frame));
            }
        }
    }
    let inner = CELL - 2 * BORDER;
    let scale = inner as f64 / img.width().max(img.height()) as f64;
    let w = ((img.width() as f64 * scale).round() as u32).clamp(1, inner);
    let h = ((img.height() as f64 * scale).round() as u32).clamp(1, inner);
    let thumb = imageops::resize(&img.to_image(), w, h, imageops::FilterType::Triangle);
    let ox = x0 + BORDER + (inner - w) / 2;
    let oy = BORDER + (inner - h) / 2;
    imageops::replace(canvas, &thumb, ox as i64, oy as i64);
}

/// Renders the query and up to five results. `load` fetches the pixels of a
/// result image.
pub fn render_contact_sheet(
    query: &RgbImage,
    query_label: &str,
    results: &RankedResult,
    mut load: impl FnMut(&Hit) -> Result<RgbImage>,
) -> Result<RgbImage> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("contact sheet needs at least one result".into()));
    }
    let shown = &results.hits[..results.len().min(SHEET_RESULTS)];
    let width = cell_origin(shown.len()) + CELL;
    let mut canvas = image::RgbImage::from_pixel(width, CELL, Rgb(BACKGROUND));
    draw_cell(&mut canvas, 0, query, QUERY_COLOR);
    for (i, hit) in shown.iter().enumerate() {
        let frame = if hit.class_label == query_label {
            MATCH_COLOR
        } else {
            MISMATCH_COLOR
        };
        draw_cell(&mut canvas, i + 1, &load(hit)?, frame);
    }
    RgbImage::from_image(&canvas)
}

pub fn save_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    img.to_image()
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hit(id: &str, label: &str) -> Hit {
        Hit {
            image_id: id.into(),
            distance: 0.0,
            class_label: label.into(),
        }
    }

    #[test]
    fn borders_follow_label_match() {
        let query = RgbImage::from_fn(30, 20, |_, _| [0, 0, 255]).unwrap();
        let results = RankedResult {
            query_id: None,
            hits: vec![hit("1", "ring"), hit("2", "stud"), hit("3", "ring"), hit("4", "hoop"), hit("5", "ring"), hit("6", "ring")],
        };
        let sheet = render_contact_sheet(&query, "ring", &results, |_| RgbImage::from_fn(8, 8, |_, _| [9, 9, 9])).unwrap();
        assert_eq!(sheet.width(), cell_origin(5) + CELL);
        assert_eq!(sheet.get(1, 1), QUERY_COLOR);
        let expected = [MATCH_COLOR, MISMATCH_COLOR, MATCH_COLOR, MISMATCH_COLOR, MATCH_COLOR];
        for (slot, color) in expected.iter().enumerate() {
            assert_eq!(sheet.get(cell_origin(slot + 1) + 1, 1), *color, "slot {}", slot + 1);
        }
        assert_eq!(sheet.get(cell_origin(1) + CELL / 2, CELL / 2), [9, 9, 9]);
    }

    #[test]
    fn all_matching_results_are_green() {
        let query = RgbImage::from_fn(4, 4, |_, _| [1, 1, 1]).unwrap();
        let results = RankedResult {
            query_id: None,
            hits: (0..5).map(|i| hit(&i.to_string(), "a")).collect(),
        };
        let sheet = render_contact_sheet(&query, "a", &results, |_| Ok(query.clone())).unwrap();
        for slot in 1..=5 {
            assert_eq!(sheet.get(cell_origin(slot) + CELL - 1, CELL - 1), MATCH_COLOR);
        }
    }

    #[test]
    fn empty_results_rejected() {
        let query = RgbImage::from_fn(4, 4, |_, _| [1, 1, 1]).unwrap();
        let err = render_contact_sheet(&query, "a", &RankedResult::default(), |_| Ok(query.clone()));
        assert!(err.is_err());
    }
}
