//! Python module `regiongem`.
//!
//! ```python
//! import regiongem
//! idx = regiongem.FeatureIndex.build("data/")
//! idx.query_path("data/rings/001.jpg", k=5)
//! ```

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use regiongem::ingest::scan_class_folders;
use regiongem::similarity::chi_square_slices;
use regiongem::{Descriptor, Error, Region};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(format!("{}: {e}", e.kind())),
    }
}

#[pyclass(name = "BinConfig", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyBinConfig {
    inner: regiongem::BinConfig,
}

#[pymethods]
impl PyBinConfig {
    #[new]
    #[pyo3(signature = (hue_bins=10, sat_bins=14, val_bins=3))]
    fn new(hue_bins: u32, sat_bins: u32, val_bins: u32) -> PyResult<Self> {
        let inner = regiongem::BinConfig::new(hue_bins, sat_bins, val_bins).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn hue_bins(&self) -> u32 {
        self.inner.hue_bins
    }

    #[getter]
    fn sat_bins(&self) -> u32 {
        self.inner.sat_bins
    }

    #[getter]
    fn val_bins(&self) -> u32 {
        self.inner.val_bins
    }

    fn feature_len(&self) -> usize {
        self.inner.feature_len()
    }

    fn __repr__(&self) -> String {
        format!(
            "BinConfig(hue_bins={}, sat_bins={}, val_bins={})",
            self.inner.hue_bins, self.inner.sat_bins, self.inner.val_bins
        )
    }
}

fn descriptor(config: Option<PyBinConfig>, max_dimension: Option<u32>) -> Descriptor {
    Descriptor::new(config.map(|c| c.inner).unwrap_or_default()).with_max_dimension(max_dimension)
}

type PyHit = (String, f64, String);

#[pyclass(name = "FeatureIndex", frozen)]
pub struct PyFeatureIndex {
    inner: regiongem::FeatureIndex,
}

impl PyFeatureIndex {
    fn rank(&self, py: Python<'_>, query: regiongem::Result<regiongem::FeatureVector>, k: usize) -> PyResult<Vec<PyHit>> {
        let feature = query.map_err(to_py)?;
        let result = py.detach(|| regiongem::rank(&feature, &self.inner, k)).map_err(to_py)?;
        Ok(result.hits.into_iter().map(|h| (h.image_id, h.distance, h.class_label)).collect())
    }
}

#[pymethods]
impl PyFeatureIndex {
    /// Indexes a class-folder tree; returns the index and the skipped paths.
    #[staticmethod]
    #[pyo3(signature = (root, config=None, max_dimension=None))]
    fn build(
        py: Python<'_>,
        root: std::path::PathBuf,
        config: Option<PyBinConfig>,
        max_dimension: Option<u32>,
    ) -> PyResult<(Self, Vec<String>)> {
        let descriptor = descriptor(config, max_dimension);
        let (inner, report) = py
            .detach(|| {
                let manifest = scan_class_folders(&root)?;
                regiongem::build_index(&manifest, &descriptor)
            })
            .map_err(to_py)?;
        let skipped = report.failures.into_iter().map(|f| f.path).collect();
        Ok((Self { inner }, skipped))
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: regiongem::load_index(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        regiongem::save_index(&self.inner, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn config(&self) -> PyBinConfig {
        PyBinConfig { inner: *self.inner.config() }
    }

    #[getter]
    fn max_dimension(&self) -> Option<u32> {
        self.inner.max_dimension()
    }

    fn image_ids(&self) -> Vec<String> {
        self.inner.entries().iter().map(|e| e.image_id.clone()).collect()
    }

    fn class_labels(&self) -> Vec<String> {
        self.inner.class_labels().into_iter().map(String::from).collect()
    }

    fn feature(&self, image_id: &str) -> PyResult<Vec<f64>> {
        let entry = self
            .inner
            .get(image_id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown image id {image_id:?}")))?;
        Ok(entry.feature.values().to_vec())
    }

    /// Top-k `(image_id, distance, class_label)` tuples for an image file.
    #[pyo3(signature = (path, k=5))]
    fn query_path(&self, py: Python<'_>, path: std::path::PathBuf, k: usize) -> PyResult<Vec<PyHit>> {
        let feature = self.inner.descriptor().describe_path(path);
        self.rank(py, feature, k)
    }

    /// Same as `query_path` for encoded PNG/JPEG bytes.
    #[pyo3(signature = (data, k=5))]
    fn query_bytes(&self, py: Python<'_>, data: &[u8], k: usize) -> PyResult<Vec<PyHit>> {
        let feature = self.inner.descriptor().describe_bytes(data);
        self.rank(py, feature, k)
    }

    fn __repr__(&self) -> String {
        format!("FeatureIndex(len={}, config={})", self.inner.len(), self.inner.config())
    }
}

#[pyfunction]
fn region_names() -> Vec<&'static str> {
    Region::ALL.iter().map(|r| r.name()).collect()
}

/// `(center_x, center_y, axis_x, axis_y)` for a width x height grid.
#[pyfunction]
fn make_region_spec(width: u32, height: u32) -> PyResult<(u32, u32, u32, u32)> {
    let s = regiongem::make_region_spec(width, height).map_err(to_py)?;
    Ok((s.center_x, s.center_y, s.axis_x, s.axis_y))
}

#[pyfunction]
fn region_pixel_counts(width: u32, height: u32) -> PyResult<Vec<usize>> {
    let spec = regiongem::make_region_spec(width, height).map_err(to_py)?;
    Ok(regiongem::region_pixel_counts(&regiongem::build_masks(&spec)).to_vec())
}

#[pyfunction]
#[pyo3(signature = (path, config=None, max_dimension=None))]
fn describe_path(path: std::path::PathBuf, config: Option<PyBinConfig>, max_dimension: Option<u32>) -> PyResult<Vec<f64>> {
    let feature = descriptor(config, max_dimension).describe_path(path).map_err(to_py)?;
    Ok(feature.into_values())
}

#[pyfunction]
#[pyo3(signature = (data, config=None, max_dimension=None))]
fn describe_bytes(data: &[u8], config: Option<PyBinConfig>, max_dimension: Option<u32>) -> PyResult<Vec<f64>> {
    let feature = descriptor(config, max_dimension).describe_bytes(data).map_err(to_py)?;
    Ok(feature.into_values())
}

#[pyfunction]
fn chi_square(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    chi_square_slices(&x, &y).map_err(to_py)
}

/// Converts one 8-bit RGB triple to `(h, s, v)`.
#[pyfunction]
fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let hsv = regiongem::imaging::pixel_to_hsv([r, g, b]);
    (hsv.h, hsv.s, hsv.v)
}

#[pymodule]
#[pyo3(name = "regiongem")]
fn regiongem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBinConfig>()?;
    m.add_class::<PyFeatureIndex>()?;
    m.add_function(wrap_pyfunction!(region_names, m)?)?;
    m.add_function(wrap_pyfunction!(make_region_spec, m)?)?;
    m.add_function(wrap_pyfunction!(region_pixel_counts, m)?)?;
    m.add_function(wrap_pyfunction!(describe_path, m)?)?;
    m.add_function(wrap_pyfunction!(describe_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square, m)?)?;
    m.add_function(wrap_pyfunction!(rgb_to_hsv, m)?)?;
    Ok(())
}
