//! In-memory form of a captured generation session.

use alloc::borrow::Cow;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::aggregate::{self, MaxNormalization};
use crate::error::{dump_err, Result};
use crate::tensor::{ScaleLevel, Tensor};

/// Number of transformer blocks in the denoising U-Net.
pub const LAYER_COUNT: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AttentionKind {
    /// Latent positions against prompt tokens, shape `(s, s, P)`.
    Cross,
    /// Latent positions against latent positions, shape `(s, s, s, s)`.
    #[cfg_attr(feature = "serde", serde(rename = "self"))]
    SelfAttention,
}

impl AttentionKind {
    pub fn expected_shape(self, scale: ScaleLevel, tokens: usize) -> Vec<usize> {
        let s = scale.side();
        match self {
            Self::Cross => alloc::vec![s, s, tokens],
            Self::SelfAttention => alloc::vec![s, s, s, s],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cross => "cross",
            Self::SelfAttention => "self",
        }
    }
}

/// Attention map of a single layer at a single denoising step, heads already
/// reduced.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAttentionMap {
    pub kind: AttentionKind,
    pub scale: ScaleLevel,
    /// 1-based transformer block index.
    pub layer: u8,
    /// 1-based denoising step.
    pub timestep: u32,
    pub data: Tensor,
}

impl RawAttentionMap {
    fn sort_key(&self) -> (AttentionKind, ScaleLevel, u8, u32) {
        (self.kind, self.scale, self.layer, self.timestep)
    }
}

/// Per-scale averaged, max-normalized CA and SA maps.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedAttention {
    pub scale: ScaleLevel,
    /// `(s, s, P)` with entries in `[0, 1]`.
    pub ca: Tensor,
    /// `(s, s, s, s)` with entries in `[0, 1]`.
    pub sa: Tensor,
}

impl AggregatedAttention {
    pub fn token_count(&self) -> usize {
        self.ca.shape().get(2).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DumpMode {
    Aggregated,
    Full,
}

/// Manifest metadata that is not tensor data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DumpHeader {
    pub prompt: String,
    pub class_token_indices: Vec<usize>,
    pub timestep_count: u32,
    pub class_label: Option<String>,
    pub image_path: Option<String>,
    pub model_id: Option<String>,
    pub sampler_seed: Option<u64>,
}

impl DumpHeader {
    /// Explicit class label, falling back to the prompt with the usual
    /// `a photo of a ...` / `... in the city` template stripped.
    pub fn class_label(&self) -> String {
        if let Some(label) = &self.class_label {
            return label.clone();
        }
        let mut text = self.prompt.trim();
        for prefix in ["a photo of an ", "a photo of a ", "a photo of "] {
            if let Some(rest) = text.strip_prefix(prefix) {
                text = rest;
                break;
            }
        }
        if let Some(rest) = text.strip_suffix(" in the city") {
            text = rest;
        }
        String::from(text.trim())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DumpTensors {
    Aggregated(BTreeMap<ScaleLevel, AggregatedAttention>),
    /// Sorted by (kind, scale, layer, timestep).
    Full(Vec<RawAttentionMap>),
}

/// A validated attention dump. Construction through [`AttentionDump::new`]
/// guarantees every structural invariant, so downstream stages only check
/// the things they add (e.g. that a schedule scale is present).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDump {
    header: DumpHeader,
    scales: Vec<ScaleLevel>,
    token_count: usize,
    tensors: DumpTensors,
}

impl AttentionDump {
    pub fn new(header: DumpHeader, scales: &[ScaleLevel], tensors: DumpTensors) -> Result<Self> {
        let declared: BTreeSet<ScaleLevel> = scales.iter().copied().collect();
        if declared.is_empty() {
            return Err(dump_err!("no scales declared"));
        }
        if declared.len() != scales.len() {
            return Err(dump_err!("duplicate scale in {scales:?}"));
        }
        if header.timestep_count == 0 {
            return Err(dump_err!("timestep_count must be at least 1"));
        }

        let mut tensors = tensors;
        let token_count = match &mut tensors {
            DumpTensors::Aggregated(map) => validate_aggregated(map, &declared)?,
            DumpTensors::Full(maps) => {
                maps.sort_by_key(RawAttentionMap::sort_key);
                validate_full(maps, &declared, header.timestep_count)?
            }
        };

        if header.class_token_indices.is_empty() {
            return Err(dump_err!("class_token_indices is empty"));
        }
        if let Some(&bad) = header.class_token_indices.iter().find(|&&i| i >= token_count) {
            return Err(dump_err!(
                "class token index {bad} outside prompt length {token_count}"
            ));
        }

        Ok(Self {
            header,
            scales: declared.into_iter().collect(),
            token_count,
            tensors,
        })
    }

    pub fn header(&self) -> &DumpHeader {
        &self.header
    }

    /// Declared scales, ascending.
    pub fn scales(&self) -> &[ScaleLevel] {
        &self.scales
    }

    /// Prompt token length `P` (last axis of every CA tensor).
    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn mode(&self) -> DumpMode {
        match self.tensors {
            DumpTensors::Aggregated(_) => DumpMode::Aggregated,
            DumpTensors::Full(_) => DumpMode::Full,
        }
    }

    pub fn tensors(&self) -> &DumpTensors {
        &self.tensors
    }

    pub fn class_label(&self) -> String {
        self.header.class_label()
    }

    /// Per-scale aggregates: borrowed in aggregated mode, computed from the raw
    /// maps in full mode.
    pub fn aggregates(
        &self,
        normalization: MaxNormalization,
    ) -> Result<Cow<'_, BTreeMap<ScaleLevel, AggregatedAttention>>> {
        match &self.tensors {
            DumpTensors::Aggregated(map) => Ok(Cow::Borrowed(map)),
            DumpTensors::Full(maps) => {
                aggregate::aggregate_dump(maps, &self.scales, normalization).map(Cow::Owned)
            }
        }
    }
}

fn check_entries(t: &Tensor, what: &dyn core::fmt::Display, upper: Option<f32>) -> Result<()> {
    for &v in t.data() {
        if !v.is_finite() || v < 0.0 {
            return Err(dump_err!("{what}: entry {v} is not a finite non-negative value"));
        }
        if let Some(hi) = upper {
            if v > hi {
                return Err(dump_err!("{what}: aggregated entry {v} exceeds {hi}"));
            }
        }
    }
    Ok(())
}

fn check_shape(t: &Tensor, expected: &[usize], what: &dyn core::fmt::Display) -> Result<()> {
    if t.shape() != expected {
        return Err(dump_err!(
            "{what}: shape {:?} does not match expected {expected:?}",
            t.shape()
        ));
    }
    Ok(())
}

fn ca_token_count(t: &Tensor, what: &dyn core::fmt::Display) -> Result<usize> {
    match t.shape() {
        [_, _, p] if *p > 0 => Ok(*p),
        other => Err(dump_err!("{what}: cross-attention shape {other:?} is not (s, s, P)")),
    }
}

fn validate_aggregated(
    map: &BTreeMap<ScaleLevel, AggregatedAttention>,
    declared: &BTreeSet<ScaleLevel>,
) -> Result<usize> {
    let present: BTreeSet<ScaleLevel> = map.keys().copied().collect();
    if &present != declared {
        return Err(dump_err!(
            "aggregated tensors cover scales {present:?} but {declared:?} were declared"
        ));
    }
    let mut tokens = None;
    for (scale, agg) in map {
        if agg.scale != *scale {
            return Err(dump_err!("aggregate keyed {scale} claims scale {}", agg.scale));
        }
        let what = alloc::format!("cross@{scale}");
        let p = ca_token_count(&agg.ca, &what)?;
        match tokens {
            None => tokens = Some(p),
            Some(t) if t != p => {
                return Err(dump_err!("{what}: prompt length {p} differs from {t}"));
            }
            _ => {}
        }
        check_shape(&agg.ca, &AttentionKind::Cross.expected_shape(*scale, p), &what)?;
        check_entries(&agg.ca, &what, Some(1.0))?;
        let what = alloc::format!("self@{scale}");
        check_shape(&agg.sa, &AttentionKind::SelfAttention.expected_shape(*scale, p), &what)?;
        check_entries(&agg.sa, &what, Some(1.0))?;
    }
    tokens.ok_or_else(|| dump_err!("no tensors"))
}

fn validate_full(
    maps: &[RawAttentionMap],
    declared: &BTreeSet<ScaleLevel>,
    timestep_count: u32,
) -> Result<usize> {
    let mut tokens = None;
    let mut seen = BTreeSet::new();
    for m in maps {
        let what = alloc::format!(
            "{}@{} layer {} step {}",
            m.kind.as_str(),
            m.scale,
            m.layer,
            m.timestep
        );
        if !declared.contains(&m.scale) {
            return Err(dump_err!("{what}: scale not declared"));
        }
        if !(1..=LAYER_COUNT).contains(&m.layer) {
            return Err(dump_err!("{what}: layer outside 1..={LAYER_COUNT}"));
        }
        if !(1..=timestep_count).contains(&m.timestep) {
            return Err(dump_err!("{what}: timestep outside 1..={timestep_count}"));
        }
        if !seen.insert(m.sort_key()) {
            return Err(dump_err!("{what}: duplicate entry"));
        }
        let p = match m.kind {
            AttentionKind::Cross => {
                let p = ca_token_count(&m.data, &what)?;
                match tokens {
                    None => tokens = Some(p),
                    Some(t) if t != p => {
                        return Err(dump_err!("{what}: prompt length {p} differs from {t}"));
                    }
                    _ => {}
                }
                p
            }
            AttentionKind::SelfAttention => 0,
        };
        check_shape(&m.data, &m.kind.expected_shape(m.scale, p), &what)?;
        check_entries(&m.data, &what, None)?;
    }
    for scale in declared {
        for kind in [AttentionKind::Cross, AttentionKind::SelfAttention] {
            if !maps.iter().any(|m| m.scale == *scale && m.kind == kind) {
                return Err(dump_err!("no {} maps at declared scale {scale}", kind.as_str()));
            }
        }
    }
    tokens.ok_or_else(|| dump_err!("no cross-attention maps"))
}
