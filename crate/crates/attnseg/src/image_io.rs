//! 8-bit PNG output for masks and attention heatmaps, and mask input.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use attnseg_core::{BinaryMask, SoftMask};

use crate::error::{Error, Result};

fn encode(path: &Path, width: usize, height: usize, color: png::ColorType, pixels: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(|e| Error::write(&tmp, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let encode_err = |source| Error::Encode { path: path.to_path_buf(), source };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(pixels).map_err(encode_err)?;
    writer.finish().map_err(encode_err)?;
    std::fs::rename(&tmp, path).map_err(|e| Error::write(path, e))
}

/// Foreground 255, background 0.
pub fn write_binary_png(mask: &BinaryMask, path: &Path) -> Result<()> {
    let px: Vec<u8> = mask.data().iter().map(|&b| if b != 0 { 255 } else { 0 }).collect();
    encode(path, mask.width(), mask.height(), png::ColorType::Grayscale, &px)
}

pub fn write_soft_png(mask: &SoftMask, path: &Path) -> Result<()> {
    let px: Vec<u8> = mask.data().iter().map(|&v| to_byte(v)).collect();
    encode(path, mask.side(), mask.side(), png::ColorType::Grayscale, &px)
}

fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Piecewise-linear dark-blue → teal → yellow ramp.
const RAMP: [[f32; 3]; 5] = [
    [0.07, 0.02, 0.30],
    [0.23, 0.32, 0.55],
    [0.13, 0.57, 0.55],
    [0.37, 0.79, 0.38],
    [0.99, 0.91, 0.14],
];

fn ramp(v: f32) -> [u8; 3] {
    let x = v.clamp(0.0, 1.0) * (RAMP.len() - 1) as f32;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let t = x - i as f32;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = to_byte(RAMP[i][c] * (1.0 - t) + RAMP[i + 1][c] * t);
    }
    out
}

/// Colour heatmap of `mask`, enlarged to `size`×`size` by nearest neighbour.
/// Values are shown relative to the map's own maximum.
pub fn write_heatmap_png(mask: &SoftMask, size: usize, path: &Path) -> Result<()> {
    let side = mask.side();
    let size = size.max(side);
    let peak = mask.max();
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let mut px = Vec::with_capacity(size * size * 3);
    for r in 0..size {
        let sr = r * side / size;
        for c in 0..size {
            px.extend(ramp(mask.get(sr, c * side / size) * scale));
        }
    }
    encode(path, size, size, png::ColorType::Rgb, &px)
}

/// Reads a mask PNG of any colour type; a pixel is foreground when any
/// colour channel is non-zero. Alpha is ignored.
pub fn read_mask_png(path: &Path) -> Result<BinaryMask> {
    let image_err = |message: String| Error::Image { path: path.to_path_buf(), message };
    let file = File::open(path).map_err(|e| Error::read(path, e))?;
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| image_err(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| image_err("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| image_err(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let (channels, colour) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => return Err(image_err("palette was not expanded".into())),
    };
    let stride = info.line_size;
    let mut data = Vec::with_capacity(w * h);
    for r in 0..h {
        let line = &buf[r * stride..r * stride + w * channels];
        data.extend(line.chunks(channels).map(|px| u8::from(px[..colour].iter().any(|&v| v != 0))));
    }
    Ok(BinaryMask::new(h, w, data)?)
}
