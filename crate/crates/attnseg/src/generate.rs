//! Single-dump mask generation and trace output.

use std::fs;
use std::path::{Path, PathBuf};

use attnseg_core::expansion::{Trace, TraceData};
use attnseg_core::strategies::run_traced;
use attnseg_core::{AttentionDump, FinalMask, PipelineConfig};
use serde::{Deserialize, Serialize};

use crate::dump_io::load_dump;
use crate::error::{Error, Result};
use crate::image_io::write_binary_png;
use crate::tensor_io::{write_json, write_tensor};

pub const MASK_FILE: &str = "mask.png";
pub const SOFT_FILE: &str = "soft.atnb";
pub const TRACE_DIR: &str = "trace";
pub const TRACE_INDEX: &str = "index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Mask,
    /// Stored as a 0/1 indicator map.
    Seeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceIndexEntry {
    pub name: String,
    pub kind: TraceKind,
    pub side: usize,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceIndex {
    pub entries: Vec<TraceIndexEntry>,
}

/// Writes every trace entry as `<name>.atnb` plus an `index.json` listing
/// them in pipeline order.
pub fn write_trace(trace: &Trace, dir: &Path) -> Result<TraceIndex> {
    fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
    let mut entries = Vec::with_capacity(trace.entries.len());
    for e in &trace.entries {
        let path = format!("{}.atnb", e.name);
        let (kind, mask, seed_count) = match &e.data {
            TraceData::Mask(m) => (TraceKind::Mask, m.clone(), None),
            TraceData::Seeds(s) => (TraceKind::Seeds, s.to_indicator(), Some(s.len())),
        };
        write_tensor(&mask.to_tensor(), &dir.join(&path))?;
        entries.push(TraceIndexEntry {
            name: e.name.clone(),
            kind,
            side: mask.side(),
            path,
            seed_count,
        });
    }
    let index = TraceIndex { entries };
    write_json(&index, &dir.join(TRACE_INDEX))?;
    Ok(index)
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub mask: FinalMask,
    pub mask_path: PathBuf,
    pub soft_path: PathBuf,
    pub trace_dir: Option<PathBuf>,
}

/// Runs the configured strategy on `dump` and writes `mask.png`,
/// `soft.atnb` and, when `trace` is set, `trace/`.
pub fn generate(dump: &AttentionDump, out_dir: &Path, config: &PipelineConfig, trace: bool) -> Result<Generated> {
    let mut recorded = trace.then(Trace::default);
    let mask = run_traced(dump, config, recorded.as_mut())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::write(out_dir, e))?;
    let mask_path = out_dir.join(MASK_FILE);
    let soft_path = out_dir.join(SOFT_FILE);
    write_binary_png(&mask.binary, &mask_path)?;
    write_tensor(&mask.soft.to_tensor(), &soft_path)?;
    let trace_dir = match recorded {
        Some(t) => {
            let dir = out_dir.join(TRACE_DIR);
            write_trace(&t, &dir)?;
            Some(dir)
        }
        None => None,
    };
    Ok(Generated {
        mask,
        mask_path,
        soft_path,
        trace_dir,
    })
}

pub fn generate_from_dir(dump_dir: &Path, out_dir: &Path, config: &PipelineConfig, trace: bool) -> Result<Generated> {
    let dump = load_dump(dump_dir)?;
    generate(&dump, out_dir, config, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_io::read_mask_png;
    use crate::tensor_io::{read_json, read_tensor};
    use attnseg_core::synth::{make_synthetic_dump, SynthParams};
    use attnseg_core::ScaleLevel;

    #[test]
    fn writes_mask_soft_and_trace() {
        let mut p = SynthParams::disk();
        p.scales = vec![ScaleLevel::S16, ScaleLevel::S32];
        let f = make_synthetic_dump(&p).unwrap();
        let config = PipelineConfig::default().with_schedule(vec![ScaleLevel::S16, ScaleLevel::S32]);
        let dir = tempfile::tempdir().unwrap();
        let out = generate(&f.dump, dir.path(), &config, true).unwrap();
        assert_eq!(read_mask_png(&out.mask_path).unwrap(), out.mask.binary);
        assert_eq!(read_tensor(&out.soft_path).unwrap().shape(), &[512, 512]);

        let index: TraceIndex = read_json(&dir.path().join(TRACE_DIR).join(TRACE_INDEX)).unwrap();
        let names: Vec<&str> = index.entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "class_channel", "seeds_1", "expanded_1", "upsampled_2", "seeds_2", "expanded_2",
                "background_seeds", "background", "refined"
            ]
        );
        for e in &index.entries {
            let t = read_tensor(&dir.path().join(TRACE_DIR).join(&e.path)).unwrap();
            assert_eq!(t.shape(), &[e.side, e.side]);
        }
    }

    #[test]
    fn no_trace_dir_by_default() {
        let mut p = SynthParams::rectangle();
        p.scales = vec![ScaleLevel::S16];
        let f = make_synthetic_dump(&p).unwrap();
        let config = PipelineConfig::default().with_schedule(vec![ScaleLevel::S16]);
        let dir = tempfile::tempdir().unwrap();
        let out = generate(&f.dump, dir.path(), &config, false).unwrap();
        assert!(out.trace_dir.is_none());
        assert!(!dir.path().join(TRACE_DIR).exists());
    }
}
