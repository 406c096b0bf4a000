//! Dump directories: `manifest.json` plus one ATNB file per tensor.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use attnseg_core::dump::{
    AggregatedAttention, AttentionDump, AttentionKind, DumpHeader, DumpMode, DumpTensors, RawAttentionMap,
};
use attnseg_core::{ScaleLevel, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::{read_json, read_tensor, write_json, write_tensor};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Generator {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub kind: AttentionKind,
    pub scale: ScaleLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestep: Option<u32>,
    /// Relative to the dump directory.
    pub path: String,
    pub shape: Vec<usize>,
}

/// On-disk manifest. Unknown keys are ignored when reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub prompt: String,
    pub class_token_indices: Vec<usize>,
    pub timestep_count: u32,
    pub mode: DumpMode,
    pub scales: Vec<ScaleLevel>,
    pub tensors: Vec<TensorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default)]
    pub generator: Generator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_label: Option<String>,
}

impl Manifest {
    fn header(&self) -> DumpHeader {
        DumpHeader {
            prompt: self.prompt.clone(),
            class_token_indices: self.class_token_indices.clone(),
            timestep_count: self.timestep_count,
            class_label: self.class_label.clone(),
            image_path: self.image_path.clone(),
            model_id: self.generator.model_id.clone(),
            sampler_seed: self.generator.sampler_seed,
        }
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    read_json(&dir.join(MANIFEST_FILE))
}

fn load_entry(dir: &Path, entry: &TensorEntry) -> Result<Tensor> {
    let path = dir.join(&entry.path);
    if !path.is_file() {
        return Err(Error::dump(&path, "tensor file listed in the manifest is missing"));
    }
    let tensor = read_tensor(&path)?;
    if tensor.shape() != entry.shape.as_slice() {
        return Err(Error::dump(
            &path,
            format!("file holds shape {:?} but the manifest declares {:?}", tensor.shape(), entry.shape),
        ));
    }
    Ok(tensor)
}

/// Reads and validates a dump directory. Manifest entry order does not
/// matter.
pub fn load_dump(dir: &Path) -> Result<AttentionDump> {
    let manifest = read_manifest(dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let tensors = match manifest.mode {
        DumpMode::Aggregated => {
            let mut parts: BTreeMap<ScaleLevel, (Option<Tensor>, Option<Tensor>)> = BTreeMap::new();
            for entry in &manifest.tensors {
                let slot = parts.entry(entry.scale).or_default();
                let target = match entry.kind {
                    AttentionKind::Cross => &mut slot.0,
                    AttentionKind::SelfAttention => &mut slot.1,
                };
                if target.is_some() {
                    return Err(Error::dump(
                        &manifest_path,
                        format!("more than one {} tensor at scale {}", entry.kind.as_str(), entry.scale),
                    ));
                }
                *target = Some(load_entry(dir, entry)?);
            }
            let mut map = BTreeMap::new();
            for (scale, pair) in parts {
                let (Some(ca), Some(sa)) = pair else {
                    return Err(Error::dump(&manifest_path, format!("scale {scale} needs one cross and one self tensor")));
                };
                map.insert(scale, AggregatedAttention { scale, ca, sa });
            }
            DumpTensors::Aggregated(map)
        }
        DumpMode::Full => {
            let mut maps = Vec::with_capacity(manifest.tensors.len());
            for entry in &manifest.tensors {
                let (Some(layer), Some(timestep)) = (entry.layer, entry.timestep) else {
                    return Err(Error::dump(&manifest_path, format!("full-mode entry {} lacks layer or timestep", entry.path)));
                };
                maps.push(RawAttentionMap {
                    kind: entry.kind,
                    scale: entry.scale,
                    layer,
                    timestep,
                    data: load_entry(dir, entry)?,
                });
            }
            DumpTensors::Full(maps)
        }
    };
    AttentionDump::new(manifest.header(), &manifest.scales, tensors).map_err(|e| match e {
        attnseg_core::Error::Dump(msg) => Error::dump(&manifest_path, msg),
        other => other.into(),
    })
}

fn prefix(kind: AttentionKind) -> &'static str {
    match kind {
        AttentionKind::Cross => "ca",
        AttentionKind::SelfAttention => "sa",
    }
}

fn entry_for(kind: AttentionKind, scale: ScaleLevel, layer: Option<u8>, timestep: Option<u32>, t: &Tensor) -> TensorEntry {
    let path = match (layer, timestep) {
        (Some(l), Some(ts)) => format!("{}_{}_l{l:02}_t{ts:04}.atnb", prefix(kind), scale.side()),
        _ => format!("{}_{}.atnb", prefix(kind), scale.side()),
    };
    TensorEntry {
        kind,
        scale,
        layer,
        timestep,
        path,
        shape: t.shape().to_vec(),
    }
}

/// Writes `dump` into `dir` (created if needed) and returns the manifest.
pub fn save_dump(dump: &AttentionDump, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
    let mut entries = Vec::new();
    let (mode, pairs): (DumpMode, Vec<(TensorEntry, &Tensor)>) = match dump.tensors() {
        DumpTensors::Aggregated(map) => (
            DumpMode::Aggregated,
            map.values()
                .flat_map(|a| {
                    [
                        (entry_for(AttentionKind::Cross, a.scale, None, None, &a.ca), &a.ca),
                        (entry_for(AttentionKind::SelfAttention, a.scale, None, None, &a.sa), &a.sa),
                    ]
                })
                .collect(),
        ),
        DumpTensors::Full(maps) => (
            DumpMode::Full,
            maps.iter()
                .map(|m| (entry_for(m.kind, m.scale, Some(m.layer), Some(m.timestep), &m.data), &m.data))
                .collect(),
        ),
    };
    for (entry, tensor) in pairs {
        write_tensor(tensor, &dir.join(&entry.path))?;
        entries.push(entry);
    }
    let h = dump.header();
    let manifest = Manifest {
        prompt: h.prompt.clone(),
        class_token_indices: h.class_token_indices.clone(),
        timestep_count: h.timestep_count,
        mode,
        scales: dump.scales().to_vec(),
        tensors: entries,
        image_path: h.image_path.clone(),
        generator: Generator {
            model_id: h.model_id.clone(),
            sampler_seed: h.sampler_seed,
        },
        class_label: h.class_label.clone(),
    };
    write_json(&manifest, &dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use attnseg_core::synth::{make_synthetic_dump, SynthMode, SynthParams};

    fn small_dump(mode: SynthMode) -> AttentionDump {
        let mut p = SynthParams::disk();
        p.scales = vec![ScaleLevel::S16];
        p.mode = mode;
        make_synthetic_dump(&p).unwrap().dump
    }

    fn is_dump_error(r: Result<AttentionDump>) -> bool {
        matches!(r, Err(Error::Core(attnseg_core::Error::Dump(_))))
    }

    #[test]
    fn aggregated_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let dump = small_dump(SynthMode::Aggregated);
        let m = save_dump(&dump, dir.path()).unwrap();
        assert_eq!(m.tensors.len(), 2);
        assert_eq!(load_dump(dir.path()).unwrap(), dump);
    }

    #[test]
    fn full_mode_counts_and_order_independence() {
        let dir = tempfile::tempdir().unwrap();
        let dump = small_dump(SynthMode::Full { layers: 2, timesteps: 2 });
        save_dump(&dump, dir.path()).unwrap();
        let loaded = load_dump(dir.path()).unwrap();
        let DumpTensors::Full(maps) = loaded.tensors() else { panic!() };
        assert_eq!(maps.iter().filter(|m| m.kind == AttentionKind::Cross).count(), 4);
        assert_eq!(maps.iter().filter(|m| m.kind == AttentionKind::SelfAttention).count(), 4);

        let mut manifest = read_manifest(dir.path()).unwrap();
        manifest.tensors.reverse();
        write_json(&manifest, &dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(load_dump(dir.path()).unwrap(), loaded);
    }

    #[test]
    fn unknown_keys_ignored() {
        let dir = tempfile::tempdir().unwrap();
        save_dump(&small_dump(SynthMode::Aggregated), dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        v["future_field"] = serde_json::json!({"x": 1});
        v["tensors"][0]["checksum"] = serde_json::json!("abc");
        fs::write(&path, v.to_string()).unwrap();
        assert!(load_dump(dir.path()).is_ok());
    }

    #[test]
    fn missing_file_and_bad_shape_are_dump_errors() {
        let dir = tempfile::tempdir().unwrap();
        let m = save_dump(&small_dump(SynthMode::Aggregated), dir.path()).unwrap();
        let ca = m.tensors.iter().find(|e| e.kind == AttentionKind::Cross).unwrap();
        fs::remove_file(dir.path().join(&ca.path)).unwrap();
        assert!(is_dump_error(load_dump(dir.path())));

        let dir = tempfile::tempdir().unwrap();
        let mut m = save_dump(&small_dump(SynthMode::Aggregated), dir.path()).unwrap();
        m.tensors[0].shape = vec![16, 16, 9];
        write_json(&m, &dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(is_dump_error(load_dump(dir.path())));

        let dir = tempfile::tempdir().unwrap();
        let mut m = save_dump(&small_dump(SynthMode::Aggregated), dir.path()).unwrap();
        m.class_token_indices = vec![8];
        write_json(&m, &dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(is_dump_error(load_dump(dir.path())));
    }

    #[test]
    fn missing_manifest_is_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dump(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), crate::exit::INPUT);
    }
}
