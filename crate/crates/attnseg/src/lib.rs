//! Filesystem side of the attention-segmentation engine: ATNB tensor files,
//! dump directories, PNG masks and heatmaps, traces, batch runs, evaluation
//! over mask directories and synthetic fixtures on disk.

pub mod batch;
pub mod dump_io;
pub mod error;
pub mod eval_io;
pub mod fixture;
pub mod generate;
pub mod image_io;
pub mod inspect;
pub mod tensor_io;

pub use error::{exit, Error, Result};
