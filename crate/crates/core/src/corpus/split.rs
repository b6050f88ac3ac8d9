use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::patch::PatchRecord;
use crate::corpus::question::Split;
use crate::error::{Error, Result};

/// Train/val/test fractions for the geographic split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.66,
            val: 0.11,
            test: 0.23,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        if self.train <= 0.0 || self.val <= 0.0 || self.test <= 0.0 {
            return Err(Error::invalid_input("split fractions must be positive"));
        }
        if ((self.train + self.val + self.test) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_input("split fractions must sum to 1"));
        }
        Ok(())
    }
}

/// Assigns splits by longitude: westernmost patches go to train, easternmost
/// to test, the middle band to val. Ties are broken by patch id so the
/// partition is deterministic.
pub fn split_by_longitude(
    patches: &[PatchRecord],
    fractions: SplitFractions,
) -> Result<BTreeMap<String, Split>> {
    fractions.validate()?;
    if patches.is_empty() {
        return Err(Error::invalid_input("cannot split an empty patch list"));
    }
    let mut order: Vec<(f64, &str)> = patches
        .iter()
        .map(|p| (p.lon, p.patch_id.as_str()))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));

    let n = order.len();
    let cut = |f: f64| -> usize { (n as f64 * f).round() as usize };
    // the westernmost patch always trains, even for tiny corpora
    let b1 = cut(fractions.train).clamp(1, n);
    let b2 = cut(fractions.train + fractions.val).clamp(b1, n);

    let mut out = BTreeMap::new();
    for (i, (_, id)) in order.into_iter().enumerate() {
        let split = if i < b1 {
            Split::Train
        } else if i < b2 {
            Split::Val
        } else {
            Split::Test
        };
        if out.insert(id.to_string(), split).is_some() {
            return Err(Error::invalid_input(format!("duplicate patch id {id:?}")));
        }
    }
    Ok(out)
}
