//! The three mask-generation strategies, sharing one dump and one config.

use alloc::collections::BTreeMap;
use alloc::vec;

use crate::config::{PipelineConfig, Strategy};
use crate::dump::{AggregatedAttention, AttentionDump};
use crate::error::{dump_err, Result};
use crate::expansion::{expand_with, iterative_expand, propagate_weighted, sa_at, upsample_bilinear, Trace};
use crate::mask::{FinalMask, SoftMask};
use crate::refine::{background_mask_with, finalize, refine_with_background};
use crate::seeding::{class_channel, class_channel_raw, extract_seeds};
use crate::tensor::ScaleLevel;

type Aggregates = BTreeMap<ScaleLevel, AggregatedAttention>;

fn aggregate_at(aggregates: &Aggregates, scale: ScaleLevel) -> Result<&AggregatedAttention> {
    aggregates
        .get(&scale)
        .ok_or_else(|| dump_err!("no attention aggregate at scale {scale}"))
}

fn resample(mask: SoftMask, side: usize) -> Result<SoftMask> {
    if mask.side() == side {
        Ok(mask)
    } else {
        upsample_bilinear(&mask, side)
    }
}

fn labelled(mut mask: FinalMask, dump: &AttentionDump) -> FinalMask {
    mask.class_label = dump.class_label();
    mask
}

/// Runs the strategy selected by `config.strategy`.
pub fn run(dump: &AttentionDump, config: &PipelineConfig) -> Result<FinalMask> {
    run_traced(dump, config, None)
}

pub fn run_traced(dump: &AttentionDump, config: &PipelineConfig, trace: Option<&mut Trace>) -> Result<FinalMask> {
    match config.strategy {
        Strategy::Caa => run_caa(dump, config),
        Strategy::CaSa => run_ca_sa(dump, config),
        Strategy::Seeded => run_seeded_traced(dump, config, trace),
    }
}

/// CA-only baseline: the raw class channel at the seed scale, upsampled and
/// binarized. No renormalization and no SA.
pub fn run_caa(dump: &AttentionDump, config: &PipelineConfig) -> Result<FinalMask> {
    config.validate()?;
    let aggregates = dump.aggregates(config.ca_normalization)?;
    let agg = aggregate_at(&aggregates, config.ca_seed_scale)?;
    let channel = class_channel_raw(agg, &dump.header().class_token_indices)?;
    finalize(&channel, config.beta).map(|m| labelled(m, dump))
}

/// CA·SA baseline: the renormalized class channel, resampled to the SA scale,
/// weights the SA affinity fields; the result is renormalized, upsampled and
/// binarized.
pub fn run_ca_sa(dump: &AttentionDump, config: &PipelineConfig) -> Result<FinalMask> {
    config.validate()?;
    let aggregates = dump.aggregates(config.ca_normalization)?;
    let agg = aggregate_at(&aggregates, config.ca_seed_scale)?;
    let channel = class_channel(agg, &dump.header().class_token_indices)?;
    let weights = resample(channel, config.ca_sa_scale.side())?;
    let sa = sa_at(&aggregates, config.ca_sa_scale)?;
    let propagated = propagate_weighted(sa, &weights)?.renormalized();
    finalize(&propagated, config.beta).map(|m| labelled(m, dump))
}

pub fn run_seeded(dump: &AttentionDump, config: &PipelineConfig) -> Result<FinalMask> {
    run_seeded_traced(dump, config, None)
}

/// Seed from CA, expand coarse to fine through SA, suppress the background
/// mask, then upsample and binarize.
///
/// Extra trace names: `background_seeds`, `background`, `refined`.
pub fn run_seeded_traced(
    dump: &AttentionDump,
    config: &PipelineConfig,
    mut trace: Option<&mut Trace>,
) -> Result<FinalMask> {
    config.validate()?;
    let aggregates = dump.aggregates(config.ca_normalization)?;
    let indices = &dump.header().class_token_indices;

    let expanded = if config.reseed_from_ca {
        per_scale_expand(&aggregates, indices, config, trace.as_deref_mut())?
    } else {
        let agg = aggregate_at(&aggregates, config.ca_seed_scale)?;
        let channel = class_channel(agg, indices)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push_mask("class_channel", &channel);
        }
        let seeds = extract_seeds(&channel, config.alpha);
        iterative_expand(&aggregates, seeds, config, trace.as_deref_mut())?
    };

    let refined = if config.background {
        let sa = sa_at(&aggregates, config.final_scale())?;
        let (bg_seeds, bg) = background_mask_with(
            sa,
            &expanded,
            config.background_threshold(),
            config.renormalize_expansion,
        )?;
        let refined = refine_with_background(&expanded, &bg)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push_seeds("background_seeds", &bg_seeds);
            t.push_mask("background", &bg);
            t.push_mask("refined", &refined);
        }
        refined
    } else {
        expanded
    };
    finalize(&refined, config.beta).map(|m| labelled(m, dump))
}

/// Ablation variant: seeds are extracted from the class channel of the CA
/// map at each schedule scale, every scale expands independently and the
/// expansions are averaged at the final scale and renormalized.
fn per_scale_expand(
    aggregates: &Aggregates,
    indices: &[usize],
    config: &PipelineConfig,
    mut trace: Option<&mut Trace>,
) -> Result<SoftMask> {
    let final_side = config.final_scale().side();
    let mut acc = vec![0.0f64; final_side * final_side];
    for (k, &scale) in config.scale_schedule.iter().enumerate() {
        let agg = aggregate_at(aggregates, scale)?;
        let channel = class_channel(agg, indices)?;
        let seeds = extract_seeds(&channel, config.alpha);
        let expanded = expand_with(&agg.sa, &seeds, config.renormalize_expansion)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push_seeds(alloc::format!("seeds_{}", k + 1), &seeds);
            t.push_mask(alloc::format!("expanded_{}", k + 1), &expanded);
        }
        let at_final = resample(expanded, final_side)?;
        for (a, &v) in acc.iter_mut().zip(at_final.data()) {
            *a += f64::from(v);
        }
    }
    let n = config.scale_schedule.len() as f64;
    let data = acc.into_iter().map(|v| (v / n) as f32).collect();
    Ok(SoftMask::new(final_side, data)?.renormalized())
}
