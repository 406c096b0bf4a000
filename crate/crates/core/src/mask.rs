use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, Result};
use crate::tensor::{ScaleLevel, Tensor};

/// Square real-valued map with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    side: usize,
    data: Vec<f32>,
}

impl SoftMask {
    pub fn new(side: usize, data: Vec<f32>) -> Result<Self> {
        if side == 0 {
            return Err(input_err!("mask side must be positive"));
        }
        if data.len() != side * side {
            return Err(input_err!("{} values do not form a {side}x{side} mask", data.len()));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(input_err!("mask entry {v} outside [0, 1]"));
        }
        Ok(Self { side, data })
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                data.push(f(r, c));
            }
        }
        Self::new(side, data)
    }

    pub fn constant(side: usize, value: f32) -> Result<Self> {
        Self::new(side, vec![value; side * side])
    }

    /// Wraps values known to be in range; only used on outputs of bounded
    /// arithmetic. Clamps away rounding excursions.
    pub(crate) fn from_unit_values(side: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), side * side);
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn scale(&self) -> Option<ScaleLevel> {
        ScaleLevel::from_side(self.side).ok()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.side + col]
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(0.0, f32::max)
    }

    pub fn min(&self) -> f32 {
        self.data.iter().copied().fold(1.0, f32::min)
    }

    /// Divides by the maximum so the peak becomes exactly 1. An all-zero mask
    /// is returned unchanged.
    pub fn renormalized(self) -> Self {
        let max = self.max();
        if max <= 0.0 || max == 1.0 {
            return self;
        }
        let m = f64::from(max);
        let data = self.data.iter().map(|&v| (f64::from(v) / m) as f32).collect();
        Self::from_unit_values(self.side, data)
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.side, self.side], self.data.clone()).expect("square mask")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match t.shape() {
            [h, w] if h == w => Self::new(*h, t.data().to_vec()),
            other => Err(input_err!("expected a square 2-D tensor, got shape {other:?}")),
        }
    }
}

/// Seed coordinates `(row, col)` on a square grid. Always non-empty, sorted
/// row-major and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    side: usize,
    coords: Vec<(usize, usize)>,
}

impl SeedSet {
    pub fn new(side: usize, coords: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut coords: Vec<(usize, usize)> = coords.into_iter().collect();
        if coords.is_empty() {
            return Err(input_err!("seed set must not be empty"));
        }
        if let Some(&(r, c)) = coords.iter().find(|&&(r, c)| r >= side || c >= side) {
            return Err(input_err!("seed ({r}, {c}) outside {side}x{side} grid"));
        }
        coords.sort_unstable();
        coords.dedup();
        Ok(Self { side, coords })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.coords.binary_search(&(row, col)).is_ok()
    }

    pub fn is_subset(&self, other: &SeedSet) -> bool {
        self.side == other.side && self.coords.iter().all(|&(r, c)| other.contains(r, c))
    }

    /// 0/1 indicator of the seed positions.
    pub fn to_indicator(&self) -> SoftMask {
        let mut data = vec![0.0; self.side * self.side];
        for &(r, c) in &self.coords {
            data[r * self.side + c] = 1.0;
        }
        SoftMask::from_unit_values(self.side, data)
    }
}

/// Row-major mask over `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(input_err!("{} values do not form a {height}x{width} mask", data.len()));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(input_err!("binary mask values must be 0 or 1"));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(u8::from(f(r, c)));
            }
        }
        Self { height, width, data }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] != 0
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }
}

/// Final 512×512 annotation: the thresholded soft map and its support.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalMask {
    /// Entries are either 0 or at least the binarization threshold.
    pub soft: SoftMask,
    /// `binary[i, j] = 1` exactly where `soft[i, j] > 0`.
    pub binary: BinaryMask,
    pub class_label: String,
}
