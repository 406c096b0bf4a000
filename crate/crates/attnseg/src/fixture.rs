//! Synthetic dumps written to disk together with their ground truth.

use std::path::Path;

use attnseg_core::synth::{make_synthetic_dump, SynthParams, SyntheticFixture};

use crate::dump_io::save_dump;
use crate::error::Result;
use crate::image_io::write_binary_png;

pub const TRUTH_FILE: &str = "truth.png";

/// Writes the dump for `params` into `dir` and its 512×512 ground truth as
/// `truth.png` next to the manifest.
pub fn write_fixture(params: &SynthParams, dir: &Path) -> Result<SyntheticFixture> {
    let fixture = make_synthetic_dump(params)?;
    save_dump(&fixture.dump, dir)?;
    write_binary_png(&fixture.truth, &dir.join(TRUTH_FILE))?;
    Ok(fixture)
}
