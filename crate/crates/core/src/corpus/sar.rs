use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed clip bounds (in dB) used to rescale the VV and VH channels to [0, 1].
///
/// The ratio channel is normalized per patch instead, so it carries relative
/// volume-vs-surface contrast rather than absolute backscatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SarClipBounds {
    /// (min, max) dB for the VV channel.
    pub vv_db: (f64, f64),
    /// (min, max) dB for the VH channel.
    pub vh_db: (f64, f64),
}

impl Default for SarClipBounds {
    fn default() -> Self {
        Self {
            vv_db: (-25.0, 0.0),
            vh_db: (-30.0, -5.0),
        }
    }
}

fn rescale_clipped(img: &Array2<f64>, (lo, hi): (f64, f64)) -> Array2<f64> {
    let span = hi - lo;
    img.mapv(|v| ((v - lo) / span).clamp(0.0, 1.0))
}

/// Composes the 3-channel SAR image from VV and VH backscatter in dB:
/// channel 0 = clipped-and-rescaled VV, channel 1 = clipped-and-rescaled VH,
/// channel 2 = the VV-VH difference min-max normalized per patch.
///
/// A constant difference image (max == min) yields a ratio channel of 0.5
/// everywhere.
pub fn compose_sar_channels(
    vv_db: &Array2<f64>,
    vh_db: &Array2<f64>,
    bounds: SarClipBounds,
) -> Result<Array3<f64>> {
    if vv_db.dim() != vh_db.dim() {
        return Err(Error::shape_mismatch(
            format!("{:?}", vv_db.dim()),
            format!("{:?}", vh_db.dim()),
        ));
    }
    for (name, img) in [("vv", vv_db), ("vh", vh_db)] {
        if img.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input(format!(
                "{name} image contains non-finite values"
            )));
        }
    }
    let (h, w) = vv_db.dim();
    let vv = rescale_clipped(vv_db, bounds.vv_db);
    let vh = rescale_clipped(vh_db, bounds.vh_db);

    let diff = vv_db - vh_db;
    let min = diff.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = diff.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ratio = if max > min {
        diff.mapv(|v| (v - min) / (max - min))
    } else {
        Array2::from_elem((h, w), 0.5)
    };

    let mut out = Array3::zeros((3, h, w));
    out.index_axis_mut(ndarray::Axis(0), 0).assign(&vv);
    out.index_axis_mut(ndarray::Axis(0), 1).assign(&vh);
    out.index_axis_mut(ndarray::Axis(0), 2).assign(&ratio);
    Ok(out)
}
