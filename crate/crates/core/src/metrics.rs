//! Inequality and rolling-window summaries of training runs.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Gini coefficient together with a flag for the all-zero case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiniValue {
    pub value: f64,
    /// Total consumption was zero, so the value is the 0 convention.
    pub zero_total: bool,
}

/// `sum_i sum_j |c_i - c_j| / (2 N sum_i c_i)`, with `N` the number of
/// entries. Returns 0 when everything is zero.
pub fn gini(consumptions: &[f64]) -> Result<f64> {
    gini_flagged(consumptions).map(|g| g.value)
}

pub fn gini_flagged(consumptions: &[f64]) -> Result<GiniValue> {
    if consumptions.is_empty() {
        return Err(Error::Empty("consumption vector"));
    }
    for &c in consumptions {
        if !c.is_finite() {
            return Err(Error::NonFinite("consumption"));
        }
        if c < 0.0 {
            return Err(Error::NegativeConsumption(c));
        }
    }
    let total: f64 = consumptions.iter().sum();
    if total == 0.0 {
        return Ok(GiniValue {
            value: 0.0,
            zero_total: true,
        });
    }
    let mut pairwise = 0.0;
    for &a in consumptions {
        for &b in consumptions {
            pairwise += (a - b).abs();
        }
    }
    let n = consumptions.len() as f64;
    Ok(GiniValue {
        value: pairwise / (2.0 * n * total),
        zero_total: false,
    })
}

/// Per-episode record of agent consumptions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeMetrics {
    pub step: u64,
    pub episode: u64,
    /// Apples for gridworlds, undiscounted return otherwise.
    pub consumptions: Vec<f64>,
    pub gini: f64,
    pub total: f64,
}

impl EpisodeMetrics {
    pub fn new(step: u64, episode: u64, consumptions: Vec<f64>) -> Result<Self> {
        let gini = gini(&consumptions)?;
        let total = consumptions.iter().sum();
        Ok(Self {
            step,
            episode,
            consumptions,
            gini,
            total,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RollingSeries {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Trailing-window mean, min and max; the first `window - 1` entries use
/// the shorter prefix.
pub fn rolling_aggregate(series: &[f64], window: usize) -> Result<RollingSeries> {
    if series.is_empty() {
        return Err(Error::Empty("series"));
    }
    if window == 0 {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: "must be at least 1".into(),
        });
    }
    let mut out = RollingSeries {
        mean: Vec::with_capacity(series.len()),
        min: Vec::with_capacity(series.len()),
        max: Vec::with_capacity(series.len()),
    };
    for end in 1..=series.len() {
        let slice = &series[end.saturating_sub(window)..end];
        let sum: f64 = slice.iter().sum();
        out.mean.push(sum / slice.len() as f64);
        out.min.push(slice.iter().copied().fold(f64::INFINITY, f64::min));
        out.max.push(slice.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(out)
}
