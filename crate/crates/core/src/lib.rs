//! Attention-driven mask synthesis.
//!
//! Turns multi-scale cross-attention (CA) and self-attention (SA) maps captured
//! from a text-to-image diffusion model into per-class segmentation masks:
//!
//! 1. raw maps are grouped by resolution, max-normalized and averaged
//!    ([`aggregate`]);
//! 2. the class-token channel of the 16×16 CA map is thresholded into seeds
//!    ([`seeding`]);
//! 3. seeds pick SA affinity fields which are averaged, upsampled to the next
//!    resolution and re-seeded until the finest scale ([`expansion`]);
//! 4. the inverted result seeds a background mask that suppresses leakage,
//!    and the product is upsampled to 512×512 and binarized ([`refine`]).
//!
//! The crate is `no_std` and only needs an allocator. File formats, PNG export
//! and the command line live in the companion `attnseg` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod aggregate;
pub mod atnb;
pub mod config;
pub mod dump;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod mask;
pub mod refine;
pub mod seeding;
pub mod strategies;
pub mod synth;
pub mod tensor;

pub use config::{PipelineConfig, Strategy};
pub use dump::{
    AggregatedAttention, AttentionDump, AttentionKind, DumpHeader, DumpMode, DumpTensors,
    RawAttentionMap,
};
pub use error::{Error, Result};
pub use mask::{BinaryMask, FinalMask, SeedSet, SoftMask};
pub use tensor::{ScaleLevel, Tensor, FULL_RESOLUTION};
