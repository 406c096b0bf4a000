//! ATNB tensor container.
//!
//! Layout (all integers little-endian):
//!
//! | offset     | size      | field                                  |
//! |------------|-----------|----------------------------------------|
//! | 0          | 4         | magic `b"ATNB"`                        |
//! | 4          | 2         | version, `u16` = 1                     |
//! | 6          | 1         | dtype, `u8` (0 = `f32`)                |
//! | 7          | 1         | reserved, written as 0                 |
//! | 8          | 4         | dimension count `n`, `u32`, 1..=4      |
//! | 12         | 8·n       | dimensions, `u64` each                 |
//! | 12 + 8·n   | 4·numel   | row-major `f32` payload                |
//!
//! Encoding is a pure function of the tensor, so identical tensors always
//! produce identical bytes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::{checked_numel, Tensor};

pub const MAGIC: [u8; 4] = *b"ATNB";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 0;
pub const MAX_DIMS: usize = 4;

const FIXED_HEADER: usize = 12;

/// Parsed header of an ATNB buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub version: u16,
    pub dtype: u8,
    pub dims: Vec<usize>,
}

impl Header {
    pub fn encoded_len(&self) -> usize {
        header_len(self.dims.len())
    }
}

pub const fn header_len(ndim: usize) -> usize {
    FIXED_HEADER + 8 * ndim
}

/// Total encoded size of `tensor`, header included.
pub fn encoded_len(tensor: &Tensor) -> usize {
    header_len(tensor.shape().len()) + 4 * tensor.len()
}

pub fn encode(tensor: &Tensor) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(encoded_len(tensor));
    encode_into(tensor, &mut out)?;
    Ok(out)
}

/// Appends the encoding of `tensor` to `out`.
pub fn encode_into(tensor: &Tensor, out: &mut Vec<u8>) -> Result<()> {
    let ndim = tensor.shape().len();
    if !(1..=MAX_DIMS).contains(&ndim) {
        return Err(Error::Encoding(alloc::format!(
            "ATNB stores 1 to {MAX_DIMS} dimensions, got {ndim}"
        )));
    }
    if let Some(pos) = tensor.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::Encoding(alloc::format!(
            "entry {pos} is not finite ({})",
            tensor.data()[pos]
        )));
    }
    out.reserve(encoded_len(tensor));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(DTYPE_F32);
    out.push(0);
    out.extend_from_slice(&(ndim as u32).to_le_bytes());
    for &d in tensor.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

fn format_err(msg: impl Into<alloc::string::String>) -> Error {
    Error::Format(msg.into())
}

/// Parses and checks the header without touching the payload.
pub fn decode_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < FIXED_HEADER {
        return Err(format_err(alloc::format!(
            "{} bytes is shorter than the {FIXED_HEADER}-byte fixed header",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(format_err(alloc::format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(format_err(alloc::format!("unsupported version {version}")));
    }
    let dtype = bytes[6];
    if dtype != DTYPE_F32 {
        return Err(format_err(alloc::format!("unsupported dtype code {dtype}")));
    }
    let ndim = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    if !(1..=MAX_DIMS).contains(&ndim) {
        return Err(format_err(alloc::format!("dimension count {ndim} outside 1..={MAX_DIMS}")));
    }
    let hlen = header_len(ndim);
    if bytes.len() < hlen {
        return Err(format_err("truncated dimension list"));
    }
    let dims = bytes[FIXED_HEADER..hlen]
        .chunks_exact(8)
        .map(|c| {
            let d = u64::from_le_bytes(c.try_into().expect("chunk of 8"));
            usize::try_from(d).map_err(|_| format_err(alloc::format!("dimension {d} too large")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Header {
        version,
        dtype,
        dims,
    })
}

pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    let header = decode_header(bytes)?;
    let numel = checked_numel(&header.dims)
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| format_err(alloc::format!("dimensions {:?} overflow", header.dims)))?;
    let payload = &bytes[header.encoded_len()..];
    if payload.len() != numel * 4 {
        return Err(format_err(alloc::format!(
            "dimensions {:?} need a {}-byte payload, found {}",
            header.dims,
            numel * 4,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
        .collect();
    Tensor::new(header.dims, data).map_err(|e| format_err(alloc::format!("{e}")))
}
