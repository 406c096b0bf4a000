//! mIoU over prediction / ground-truth PNG directories.

use std::collections::BTreeMap;
use std::path::Path;

use attnseg_core::eval::{EvalReport, EvalTally, Pooling};

use crate::error::{Error, Result};
use crate::image_io::read_mask_png;
use crate::tensor_io::read_json;

pub const REPORT_FILE: &str = "eval.json";

/// `class_map` maps mask paths (relative to both directories) to class
/// labels; every listed mask must exist on both sides.
pub fn evaluate_dirs(pred_dir: &Path, gt_dir: &Path, class_map: &BTreeMap<String, String>, pooling: Pooling) -> Result<EvalReport> {
    let mut tally = EvalTally::default();
    for (rel, label) in class_map {
        let pred = read_mask_png(&pred_dir.join(rel))?;
        let gt = read_mask_png(&gt_dir.join(rel))?;
        tally.add(&pred, &gt, label).map_err(|e| match e {
            attnseg_core::Error::Input(msg) => attnseg_core::Error::Input(format!("{rel}: {msg}")),
            other => other,
        })?;
    }
    Ok(tally.finish(pooling)?)
}

pub fn read_class_map(path: &Path) -> Result<BTreeMap<String, String>> {
    let map: BTreeMap<String, String> = read_json(path)?;
    if map.is_empty() {
        return Err(Error::Core(attnseg_core::Error::Input(format!("{} lists no masks", path.display()))));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_io::write_binary_png;
    use attnseg_core::BinaryMask;

    #[test]
    fn pooled_report_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let (pred, gt) = (dir.path().join("pred"), dir.path().join("gt"));
        std::fs::create_dir_all(pred.join("a")).unwrap();
        std::fs::create_dir_all(gt.join("a")).unwrap();
        let one = |bits: &[u8]| BinaryMask::new(1, bits.len(), bits.to_vec()).unwrap();
        write_binary_png(&one(&[1, 0, 0]), &pred.join("a/m.png")).unwrap();
        write_binary_png(&one(&[1, 1, 0]), &gt.join("a/m.png")).unwrap();
        write_binary_png(&one(&[0, 1]), &pred.join("n.png")).unwrap();
        write_binary_png(&one(&[0, 1]), &gt.join("n.png")).unwrap();
        let map = BTreeMap::from([("a/m.png".to_string(), "cat".to_string()), ("n.png".to_string(), "dog".to_string())]);
        let r = evaluate_dirs(&pred, &gt, &map, Pooling::Dataset).unwrap();
        assert_eq!(r.per_class["cat"], 0.5);
        assert_eq!(r.per_class["dog"], 1.0);
        assert_eq!(r.miou, 0.75);
    }

    #[test]
    fn missing_prediction_is_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let map = BTreeMap::from([("x.png".to_string(), "cat".to_string())]);
        let err = evaluate_dirs(dir.path(), dir.path(), &map, Pooling::Dataset).unwrap_err();
        assert_eq!(err.exit_code(), crate::exit::INPUT);
    }
}
