//! Many dumps in parallel, one dataset manifest out.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use attnseg_core::PipelineConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dump_io::load_dump;
use crate::error::{Error, Result};
use crate::generate::{generate, MASK_FILE, SOFT_FILE};
use crate::tensor_io::write_json;

pub const DATASET_FILE: &str = "dataset.json";
pub const CLASS_MAP_FILE: &str = "class_map.json";

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub jobs: usize,
    pub trace: bool,
    pub config: PipelineConfig,
}

/// One generated image–mask pair. Output paths are relative to the batch
/// output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub dump: String,
    pub image_path: Option<String>,
    pub mask_path: String,
    pub soft_path: String,
    pub class_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub dump: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    pub failures: Vec<BatchFailure>,
}

/// Reads a dump list: one directory per line, blank lines and `#` comments
/// skipped, relative paths resolved against the list file's directory.
pub fn read_dump_list(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

fn slot_name(index: usize, dump: &Path) -> String {
    let stem = dump
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dump".into());
    format!("{index:05}_{stem}")
}

fn process_one(index: usize, dump_dir: &Path, out_dir: &Path, opts: &BatchOptions) -> Result<DatasetEntry> {
    let dump = load_dump(dump_dir)?;
    let slot = slot_name(index, dump_dir);
    let generated = generate(&dump, &out_dir.join(&slot), &opts.config, opts.trace)?;
    Ok(DatasetEntry {
        dump: dump_dir.display().to_string(),
        image_path: dump.header().image_path.clone(),
        mask_path: format!("{slot}/{MASK_FILE}"),
        soft_path: format!("{slot}/{SOFT_FILE}"),
        class_label: generated.mask.class_label,
    })
}

/// Processes `dumps` on a pool of `opts.jobs` threads. Outputs depend only on
/// the inputs, never on the thread count or scheduling: each dump writes to
/// its own numbered slot and results are merged in input order.
pub fn run_batch(dumps: &[PathBuf], out_dir: &Path, opts: &BatchOptions) -> Result<Dataset> {
    if opts.jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    opts.config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::write(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {} worker threads: {e}", opts.jobs)))?;
    let results: Vec<Result<DatasetEntry>> = pool.install(|| {
        dumps
            .par_iter()
            .enumerate()
            .map(|(i, d)| process_one(i, d, out_dir, opts))
            .collect()
    });

    let mut dataset = Dataset { entries: Vec::new(), failures: Vec::new() };
    for (dump, result) in dumps.iter().zip(results) {
        match result {
            Ok(entry) => dataset.entries.push(entry),
            // output-side failures abort the batch; bad inputs are recorded
            Err(e) if e.exit_code() == crate::exit::OUTPUT => return Err(e),
            Err(e) => dataset.failures.push(BatchFailure {
                dump: dump.display().to_string(),
                error: e.to_string(),
            }),
        }
    }
    write_json(&dataset, &out_dir.join(DATASET_FILE))?;
    let class_map: BTreeMap<&str, &str> = dataset
        .entries
        .iter()
        .map(|e| (e.mask_path.as_str(), e.class_label.as_str()))
        .collect();
    write_json(&class_map, &out_dir.join(CLASS_MAP_FILE))?;
    Ok(dataset)
}
