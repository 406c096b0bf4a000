use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{input_err, Result};

/// Side length of the generated image and of every final mask.
pub const FULL_RESOLUTION: usize = 512;

/// One of the four attention resolutions produced by the U-Net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "usize", into = "usize"))]
pub enum ScaleLevel {
    S8,
    S16,
    S32,
    S64,
}

impl ScaleLevel {
    pub const ALL: [ScaleLevel; 4] = [Self::S8, Self::S16, Self::S32, Self::S64];

    pub const fn side(self) -> usize {
        match self {
            Self::S8 => 8,
            Self::S16 => 16,
            Self::S32 => 32,
            Self::S64 => 64,
        }
    }

    pub fn from_side(side: usize) -> Result<Self> {
        match side {
            8 => Ok(Self::S8),
            16 => Ok(Self::S16),
            32 => Ok(Self::S32),
            64 => Ok(Self::S64),
            other => Err(input_err!("{other} is not an attention scale (expected 8, 16, 32 or 64)")),
        }
    }
}

impl TryFrom<usize> for ScaleLevel {
    type Error = crate::Error;

    fn try_from(side: usize) -> Result<Self> {
        Self::from_side(side)
    }
}

impl From<ScaleLevel> for usize {
    fn from(scale: ScaleLevel) -> usize {
        scale.side()
    }
}

impl fmt::Display for ScaleLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.side())
    }
}

/// Dense row-major `f32` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() {
            return Err(input_err!("tensor needs at least one dimension"));
        }
        let numel = checked_numel(&shape).ok_or_else(|| input_err!("tensor shape {shape:?} overflows"))?;
        if numel != data.len() {
            return Err(input_err!(
                "shape {shape:?} holds {numel} elements but {} were given",
                data.len()
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let numel = checked_numel(&shape).ok_or_else(|| input_err!("tensor shape {shape:?} overflows"))?;
        Self::new(shape, vec![0.0; numel])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Largest entry, or `None` for an empty tensor.
    pub fn max(&self) -> Option<f32> {
        self.data.iter().copied().reduce(f32::max)
    }

    pub fn min(&self) -> Option<f32> {
        self.data.iter().copied().reduce(f32::min)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn checked_numel(shape: &[usize]) -> Option<usize> {
    shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}
