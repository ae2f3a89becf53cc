//! Binary, finite non-uniform and infinite mid-tread quantizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A quantizer description.
///
/// Finite cells are `(c_{i-1}, c_i]` with `c_0 = -inf` and `c_n = +inf`,
/// except that an input landing exactly on a threshold is sent to the upper
/// cell. Only measure-zero inputs are affected by that choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuantizerSpec {
    /// Outputs `-1` below the threshold and `+1` at or above it.
    Binary { threshold: f64 },
    /// Interior thresholds `c_1 < ... < c_{n-1}` and levels `l_1 < ... < l_n`.
    Finite { thresholds: Vec<f64>, levels: Vec<f64> },
    /// Mid-tread rule `delta * round(w / delta)`.
    Uniform { delta: f64 },
}

impl QuantizerSpec {
    pub fn binary(threshold: f64) -> Result<Self> {
        let s = QuantizerSpec::Binary { threshold };
        s.validate()?;
        Ok(s)
    }

    pub fn finite(thresholds: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let s = QuantizerSpec::Finite { thresholds, levels };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(delta: f64) -> Result<Self> {
        let s = QuantizerSpec::Uniform { delta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            QuantizerSpec::Binary { threshold } => {
                if !threshold.is_finite() {
                    return Err(Error::InvalidArgument("binary threshold must be finite".into()));
                }
            }
            QuantizerSpec::Finite { thresholds, levels } => {
                if levels.is_empty() {
                    return Err(Error::InvalidArgument("finite quantizer needs at least one level".into()));
                }
                if levels.len() != thresholds.len() + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "finite quantizer has {} thresholds but {} levels (need one more level than thresholds)",
                        thresholds.len(),
                        levels.len()
                    )));
                }
                if thresholds.iter().chain(levels).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("thresholds and levels must be finite".into()));
                }
                if !strictly_increasing(thresholds) {
                    return Err(Error::InvalidArgument("thresholds must be strictly increasing".into()));
                }
                if !strictly_increasing(levels) {
                    return Err(Error::InvalidArgument("levels must be strictly increasing".into()));
                }
            }
            QuantizerSpec::Uniform { delta } => {
                if !(delta.is_finite() && *delta > 0.0) {
                    return Err(Error::InvalidArgument(format!("step must be positive, got {delta}")));
                }
            }
        }
        Ok(())
    }

    /// Thresholds and levels of a finite-output quantizer. `None` for the
    /// infinite mid-tread family.
    pub fn cells(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            QuantizerSpec::Binary { threshold } => Some((vec![*threshold], vec![-1.0, 1.0])),
            QuantizerSpec::Finite { thresholds, levels } => Some((thresholds.clone(), levels.clone())),
            QuantizerSpec::Uniform { .. } => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            QuantizerSpec::Binary { threshold } => *threshold == 0.0,
            QuantizerSpec::Uniform { .. } => true,
            QuantizerSpec::Finite { thresholds, levels } => {
                let n = thresholds.len();
                let m = levels.len();
                (0..n).all(|i| (thresholds[i] + thresholds[n - 1 - i]).abs() < 1e-12)
                    && (0..m).all(|i| (levels[i] + levels[m - 1 - i]).abs() < 1e-12)
            }
        }
    }

    /// Quantize a single value. NaN is the caller's problem; see
    /// [`quantize_series`].
    pub fn apply(&self, w: f64) -> f64 {
        match self {
            QuantizerSpec::Binary { threshold } => {
                if w < *threshold {
                    -1.0
                } else {
                    1.0
                }
            }
            QuantizerSpec::Finite { thresholds, levels } => {
                // number of thresholds <= w
                let idx = thresholds.partition_point(|&c| c <= w);
                levels[idx]
            }
            QuantizerSpec::Uniform { delta } => delta * (w / delta).round_ties_even(),
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[0] < p[1])
}

pub fn quantize_series(w: &[f64], spec: &QuantizerSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if let Some(i) = w.iter().position(|v| v.is_nan()) {
        return Err(Error::NanInput(i));
    }
    Ok(w.iter().map(|&v| spec.apply(v)).collect())
}

/// Saturated uniform quantizer over the granular region `[lo, hi]`.
///
/// The region is split into `2^bits` equal cells whose output is the lower
/// boundary point. Inputs above `hi` saturate to `hi`; inputs below `lo`
/// saturate to `lo`, which coincides with the first granular level so the two
/// cells merge. The result has `2^bits + 1` levels and thresholds at
/// `lo + w, ..., hi`.
pub fn make_saturated_uniform(lo: f64, hi: f64, bits: u32) -> Result<QuantizerSpec> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    if bits == 0 {
        return Err(Error::InvalidArgument("bits must be at least 1".into()));
    }
    if bits > 16 {
        return Err(Error::InvalidArgument(format!("bits = {bits} exceeds the limit of 16")));
    }
    let cells = 1usize << bits;
    let width = (hi - lo) / cells as f64;
    let point = |i: usize| if i == cells { hi } else { lo + width * i as f64 };
    let thresholds = (1..=cells).map(point).collect();
    let levels = (0..=cells).map(point).collect();
    QuantizerSpec::finite(thresholds, levels)
}
