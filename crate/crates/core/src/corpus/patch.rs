use ndarray::Array3;

use crate::corpus::taxonomy::ClassTaxonomy;
use crate::error::{Error, Result};

/// One geolocated sample: an optical image, a composed SAR image and the
/// ground-truth class set as a dense binary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub patch_id: String,
    pub lon: f64,
    pub lat: f64,
    /// `[n_o, H, W]`, values in `[0, 1]`.
    pub optical: Array3<f64>,
    /// `[n_s, H, W]`, values in `[0, 1]`.
    pub sar: Array3<f64>,
    /// Length `n_c`, entries 0/1.
    pub labels: Vec<u8>,
}

impl PatchRecord {
    /// Checks the per-record invariants against a taxonomy.
    pub fn validate(&self, taxonomy: &ClassTaxonomy) -> Result<()> {
        if self.labels.len() != taxonomy.n_classes() {
            return Err(Error::shape_mismatch(
                format!("{} label bits", taxonomy.n_classes()),
                format!("{} (patch {})", self.labels.len(), self.patch_id),
            ));
        }
        if let Some(&bad) = self.labels.iter().find(|&&b| b > 1) {
            return Err(Error::invalid_input(format!(
                "patch {}: labels must be 0/1, found {bad}",
                self.patch_id
            )));
        }
        if !taxonomy.labels_consistent(&self.labels) {
            return Err(Error::invalid_input(format!(
                "patch {}: labels are not hierarchy-consistent",
                self.patch_id
            )));
        }
        if self.optical.shape()[1..] != self.sar.shape()[1..] {
            return Err(Error::shape_mismatch(
                format!("optical HxW {:?}", &self.optical.shape()[1..]),
                format!("sar HxW {:?}", &self.sar.shape()[1..]),
            ));
        }
        for (name, img) in [("optical", &self.optical), ("sar", &self.sar)] {
            if img.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(Error::invalid_input(format!(
                    "patch {}: {name} image has values outside [0, 1]",
                    self.patch_id
                )));
            }
        }
        Ok(())
    }

    /// Class ids with a set label bit, ascending.
    pub fn present_classes(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(|(i, _)| i)
            .collect()
    }
}
