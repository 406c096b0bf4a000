//! Background suppression and full-resolution binarization.

use alloc::string::String;

use crate::error::{input_err, Result};
use crate::expansion::{expand_with, upsample_bilinear};
use crate::mask::{BinaryMask, FinalMask, SeedSet, SoftMask};
use crate::seeding::extract_seeds;
use crate::tensor::{Tensor, FULL_RESOLUTION};

/// `1 − mask`, elementwise.
pub fn invert_mask(mask: &SoftMask) -> SoftMask {
    let data = mask.data().iter().map(|&v| 1.0 - v).collect();
    SoftMask::from_unit_values(mask.side(), data)
}

/// Seeds the inverted object mask and expands those seeds through `sa`.
/// Returns the background seeds together with the background mask.
pub fn background_mask_with(
    sa: &Tensor,
    expanded: &SoftMask,
    alpha: f32,
    renormalize: bool,
) -> Result<(SeedSet, SoftMask)> {
    let seeds = extract_seeds(&invert_mask(expanded), alpha);
    let mask = expand_with(sa, &seeds, renormalize)?;
    Ok((seeds, mask))
}

pub fn background_mask(sa: &Tensor, expanded: &SoftMask, alpha: f32) -> Result<SoftMask> {
    background_mask_with(sa, expanded, alpha, true).map(|(_, m)| m)
}

/// `(1 − bg) ⊙ object`. Never increases an entry of `object`.
pub fn refine_with_background(object: &SoftMask, background: &SoftMask) -> Result<SoftMask> {
    if object.side() != background.side() {
        return Err(input_err!(
            "object mask side {} differs from background mask side {}",
            object.side(),
            background.side()
        ));
    }
    let data = object
        .data()
        .iter()
        .zip(background.data())
        .map(|(&o, &b)| ((1.0 - f64::from(b)) * f64::from(o)) as f32)
        .collect();
    Ok(SoftMask::from_unit_values(object.side(), data))
}

/// Keeps entries `≥ beta`, zeroes the rest; binary is the support.
pub fn binarize(soft: &SoftMask, beta: f32) -> FinalMask {
    let side = soft.side();
    let kept: alloc::vec::Vec<f32> = soft
        .data()
        .iter()
        .map(|&v| if v >= beta { v } else { 0.0 })
        .collect();
    let binary = BinaryMask::new(side, side, kept.iter().map(|&v| u8::from(v > 0.0)).collect())
        .expect("square support");
    FinalMask {
        soft: SoftMask::from_unit_values(side, kept),
        binary,
        class_label: String::new(),
    }
}

/// Upsamples `refined` to 512×512 and binarizes it at `beta`.
pub fn finalize(refined: &SoftMask, beta: f32) -> Result<FinalMask> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(input_err!("beta must lie in (0, 1], got {beta}"));
    }
    let full = match refined.side() {
        FULL_RESOLUTION => refined.clone(),
        side if side < FULL_RESOLUTION => upsample_bilinear(refined, FULL_RESOLUTION)?,
        side => return Err(input_err!("mask side {side} exceeds the output resolution")),
    };
    Ok(binarize(&full, beta))
}
