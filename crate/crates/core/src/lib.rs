//! Content-based image retrieval with a region-masked HSV histogram
//! descriptor.
//!
//! Each image is split into four corner rectangles and a central filled
//! ellipse. Every region contributes an L1-normalized 3D HSV histogram
//! (10 hue × 14 saturation × 3 value bins by default), and the five
//! histograms are concatenated into a 2100-component descriptor. Queries are
//! ranked against an index by chi-square distance with an exhaustive scan.
//!
//! ```no_run
//! use regiongem::{ingest, index, Descriptor, BinConfig, rank};
//!
//! let manifest = ingest::scan_class_folders("./dataset")?;
//! let (idx, _report) = index::build_index(&manifest, &Descriptor::new(BinConfig::default()))?;
//! let query = idx.descriptor().describe_path("query.jpg")?;
//! for hit in rank(&query, &idx, 5)?.hits {
//!     println!("{} {:.4} {}", hit.image_id, hit.distance, hit.class_label);
//! }
//! # Ok::<(), regiongem::Error>(())
//! ```

pub mod error;
pub mod eval;
pub mod features;
pub mod imaging;
pub mod index;
pub mod ingest;
pub mod pipeline;
pub mod regions;
pub mod sheet;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};
pub use features::{bin_index, extract_features, BinConfig, FeatureVector};
pub use imaging::{decode_image, rgb_to_hsv, Hsv, HsvImage, RgbImage};
pub use index::{build_index, load_index, save_index, FeatureIndex, IndexEntry};
pub use pipeline::Descriptor;
pub use regions::{build_masks, make_region_spec, region_pixel_counts, Region, RegionMaskSet, RegionSpec};
pub use similarity::{chi_square, rank, Hit, RankedResult};
