//! Seed extraction by thresholding.

use alloc::vec::Vec;

use crate::dump::AggregatedAttention;
use crate::error::{input_err, Result};
use crate::mask::{SeedSet, SoftMask};

/// Mean of the selected CA token channels, without renormalization.
///
/// Multi-token class names (e.g. "potted plant") average their sub-token
/// channels.
pub fn class_channel_raw(agg: &AggregatedAttention, token_indices: &[usize]) -> Result<SoftMask> {
    let tokens = agg.token_count();
    if token_indices.is_empty() {
        return Err(input_err!("no class token indices given"));
    }
    if let Some(&bad) = token_indices.iter().find(|&&i| i >= tokens) {
        return Err(input_err!("token index {bad} outside the {tokens} CA channels"));
    }
    let side = agg.scale.side();
    let ca = agg.ca.data();
    let n = token_indices.len() as f64;
    let data: Vec<f32> = (0..side * side)
        .map(|pos| {
            let base = pos * tokens;
            let sum: f64 = token_indices.iter().map(|&t| f64::from(ca[base + t])).sum();
            (sum / n) as f32
        })
        .collect();
    SoftMask::new(side, data)
}

/// Class-token CA map rescaled so its peak is 1.
pub fn class_channel(agg: &AggregatedAttention, token_indices: &[usize]) -> Result<SoftMask> {
    class_channel_raw(agg, token_indices).map(SoftMask::renormalized)
}

/// Coordinates whose value is at least `alpha`.
///
/// When nothing clears the threshold the single global maximum is returned
/// instead (first in row-major order on ties), so the result is never empty.
pub fn extract_seeds(mask: &SoftMask, alpha: f32) -> SeedSet {
    let side = mask.side();
    let above: Vec<(usize, usize)> = mask
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= alpha)
        .map(|(i, _)| (i / side, i % side))
        .collect();
    if !above.is_empty() {
        return SeedSet::new(side, above).expect("coordinates on grid");
    }
    let mut best = 0;
    for (i, &v) in mask.data().iter().enumerate() {
        if v > mask.data()[best] {
            best = i;
        }
    }
    SeedSet::new(side, [(best / side, best % side)]).expect("coordinate on grid")
}
