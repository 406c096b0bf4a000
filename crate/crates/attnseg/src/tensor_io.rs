//! ATNB tensor files.

use std::fs;
use std::path::Path;

use attnseg_core::{atnb, Tensor};

use crate::error::{Error, Result};

/// Encodes `tensor` and writes it through a temporary sibling file, so a
/// reader never observes a partially written tensor.
pub fn write_tensor(tensor: &Tensor, path: &Path) -> Result<()> {
    let bytes = atnb::encode(tensor)?;
    write_atomic(path, &bytes)
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Error::read(path, e))?;
    atnb::decode(&bytes).map_err(|e| match e {
        attnseg_core::Error::Format(msg) => attnseg_core::Error::Format(format!("{}: {msg}", path.display())).into(),
        other => other.into(),
    })
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::write(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::write(path, e))
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.atnb");
        write_tensor(&Tensor::new(vec![1], vec![0.5]).unwrap(), &path).unwrap();
        assert_eq!(read_tensor(&path).unwrap().data(), &[0.5]);
        assert!(!dir.path().join("t.atnb.tmp").exists());
    }

    #[test]
    fn zero_scalar_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.atnb");
        write_tensor(&Tensor::new(vec![1, 1], vec![0.0]).unwrap(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 28 + 4);
        assert_eq!(&bytes[28..], &[0, 0, 0, 0]);
    }

    #[test]
    fn bad_files_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.atnb");
        let mut bytes = atnb::encode(&Tensor::new(vec![2, 2], vec![1.0; 4]).unwrap()).unwrap();
        bytes.truncate(bytes.len() - 4);
        fs::write(&path, &bytes).unwrap();
        let err = read_tensor(&path).unwrap_err();
        assert!(matches!(err, Error::Core(attnseg_core::Error::Format(_))), "{err}");
        assert_eq!(err.exit_code(), crate::exit::INPUT);

        bytes[..4].copy_from_slice(b"XXXX");
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_tensor(&path), Err(Error::Core(attnseg_core::Error::Format(_)))));

        assert!(matches!(read_tensor(&dir.path().join("missing.atnb")), Err(Error::Read { .. })));
    }
}
