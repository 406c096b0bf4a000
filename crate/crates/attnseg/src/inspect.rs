//! Per-scale heatmaps of the class CA channel and of selected SA slices.

use std::fs;
use std::path::Path;

use attnseg_core::aggregate::MaxNormalization;
use attnseg_core::seeding::class_channel;
use attnseg_core::{AttentionDump, SoftMask};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::write_heatmap_png;
use crate::tensor_io::write_json;

pub const INSPECT_INDEX: &str = "inspect.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapKind {
    Cross,
    #[serde(rename = "self")]
    SelfAttention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub kind: HeatmapKind,
    pub scale: usize,
    /// Query position at this scale, for SA slices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[usize; 2]>,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectIndex {
    pub class_label: String,
    pub heatmaps: Vec<Heatmap>,
}

/// `at` coordinates are given on the finest declared scale and mapped to
/// each coarser grid by integer scaling.
pub fn inspect(dump: &AttentionDump, out_dir: &Path, at: &[(usize, usize)], size: usize) -> Result<InspectIndex> {
    let finest = dump.scales().last().expect("validated dump declares a scale").side();
    if let Some(&(i, j)) = at.iter().find(|&&(i, j)| i >= finest || j >= finest) {
        return Err(attnseg_core::Error::Input(format!("--at {i},{j} is outside the {finest}x{finest} grid")).into());
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::write(out_dir, e))?;
    let aggregates = dump.aggregates(MaxNormalization::Global)?;
    let indices = &dump.header().class_token_indices;
    let mut heatmaps = Vec::new();
    for (scale, agg) in aggregates.iter() {
        let s = scale.side();
        let path = format!("ca_{s}.png");
        write_heatmap_png(&class_channel(agg, indices)?, size, &out_dir.join(&path))?;
        heatmaps.push(Heatmap { kind: HeatmapKind::Cross, scale: s, at: None, path });

        let plane = s * s;
        for &(i, j) in at {
            let (si, sj) = (i * s / finest, j * s / finest);
            let start = (si * s + sj) * plane;
            let slice = SoftMask::new(s, agg.sa.data()[start..start + plane].to_vec())?;
            let path = format!("sa_{s}_{si}_{sj}.png");
            write_heatmap_png(&slice, size, &out_dir.join(&path))?;
            heatmaps.push(Heatmap { kind: HeatmapKind::SelfAttention, scale: s, at: Some([si, sj]), path });
        }
    }
    let index = InspectIndex { class_label: dump.class_label(), heatmaps };
    write_json(&index, &out_dir.join(INSPECT_INDEX))?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use attnseg_core::synth::{make_synthetic_dump, SynthParams};
    use attnseg_core::ScaleLevel;

    #[test]
    fn coordinates_map_to_coarser_scales() {
        let mut p = SynthParams::disk();
        p.scales = vec![ScaleLevel::S16, ScaleLevel::S32];
        let dump = make_synthetic_dump(&p).unwrap().dump;
        let dir = tempfile::tempdir().unwrap();
        let index = inspect(&dump, dir.path(), &[(31, 5)], 64).unwrap();
        let sa: Vec<(usize, [usize; 2])> = index
            .heatmaps
            .iter()
            .filter_map(|h| h.at.map(|a| (h.scale, a)))
            .collect();
        assert_eq!(sa, vec![(16, [15, 2]), (32, [31, 5])]);
        for h in &index.heatmaps {
            assert!(dir.path().join(&h.path).is_file());
        }
        assert!(inspect(&dump, dir.path(), &[(32, 0)], 64).is_err());
    }
}
