use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::aggregate::MaxNormalization;
use crate::error::{input_err, Error, Result};
use crate::tensor::ScaleLevel;

/// Seed threshold used for CA seeds, re-seeding and background seeds.
pub const DEFAULT_ALPHA: f32 = 0.5;
/// Binarization threshold applied at full resolution.
pub const DEFAULT_BETA: f32 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Threshold the aggregated CA channel directly.
    Caa,
    /// Propagate the CA channel through the SA affinity matrix.
    CaSa,
    /// Seed from CA, expand through the SA scale schedule, refine with a
    /// background mask.
    #[default]
    Seeded,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Caa => "caa",
            Self::CaSa => "ca_sa",
            Self::Seeded => "seediff",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "caa" => Ok(Self::Caa),
            "ca_sa" => Ok(Self::CaSa),
            "seediff" => Ok(Self::Seeded),
            other => Err(input_err!("unknown strategy '{other}' (expected caa, ca_sa or seediff)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub alpha: f32,
    pub beta: f32,
    /// Strictly increasing; the first entry is the CA seed scale.
    pub scale_schedule: Vec<ScaleLevel>,
    pub strategy: Strategy,
    pub ca_seed_scale: ScaleLevel,
    /// SA scale used by the CA·SA baseline.
    pub ca_sa_scale: ScaleLevel,
    /// Run the background-mask refinement after the last expansion.
    pub background: bool,
    /// Threshold for background seeds; `None` reuses `alpha`.
    pub background_alpha: Option<f32>,
    /// Divide every expanded mask by its maximum before it is re-seeded.
    pub renormalize_expansion: bool,
    /// Ablation switch: extract seeds from the CA map at every schedule scale
    /// and average the independent per-scale expansions instead of chaining
    /// them.
    pub reseed_from_ca: bool,
    pub ca_normalization: MaxNormalization,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            scale_schedule: vec![ScaleLevel::S16, ScaleLevel::S32, ScaleLevel::S64],
            strategy: Strategy::Seeded,
            ca_seed_scale: ScaleLevel::S16,
            ca_sa_scale: ScaleLevel::S32,
            background: true,
            background_alpha: None,
            renormalize_expansion: true,
            reseed_from_ca: false,
            ca_normalization: MaxNormalization::Global,
        }
    }
}

fn check_threshold(name: &str, v: f32) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(input_err!("{name} must lie in (0, 1], got {v}"))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        check_threshold("alpha", self.alpha)?;
        check_threshold("beta", self.beta)?;
        if let Some(a) = self.background_alpha {
            check_threshold("background alpha", a)?;
        }
        let first = self
            .scale_schedule
            .first()
            .ok_or_else(|| input_err!("scale schedule is empty"))?;
        if self.scale_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(input_err!(
                "scale schedule {:?} is not strictly increasing",
                self.scale_schedule
            ));
        }
        if *first != self.ca_seed_scale {
            return Err(input_err!(
                "CA seed scale {} must equal the first schedule scale {first}",
                self.ca_seed_scale
            ));
        }
        if self.ca_sa_scale < self.ca_seed_scale {
            return Err(input_err!(
                "CA·SA scale {} is coarser than the CA seed scale {}",
                self.ca_sa_scale,
                self.ca_seed_scale
            ));
        }
        Ok(())
    }

    /// Replaces the schedule and keeps the CA seed scale in sync with it.
    pub fn with_schedule(mut self, schedule: Vec<ScaleLevel>) -> Self {
        if let Some(&first) = schedule.first() {
            self.ca_seed_scale = first;
        }
        self.scale_schedule = schedule;
        self
    }

    pub fn background_threshold(&self) -> f32 {
        self.background_alpha.unwrap_or(self.alpha)
    }

    pub fn final_scale(&self) -> ScaleLevel {
        *self.scale_schedule.last().expect("validated schedule")
    }
}

/// Parses a comma-separated list such as `16,32,64`.
pub fn parse_schedule(text: &str) -> Result<Vec<ScaleLevel>> {
    text.split(',')
        .map(|t| {
            let side: usize = t
                .trim()
                .parse()
                .map_err(|_| input_err!("'{t}' is not a scale"))?;
            ScaleLevel::from_side(side)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.beta, 0.3);
        assert_eq!(cfg.final_scale(), ScaleLevel::S64);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = PipelineConfig::default();
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig::default().with_schedule(vec![ScaleLevel::S32, ScaleLevel::S16]);
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.ca_seed_scale = ScaleLevel::S32;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.beta = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn schedule_parsing() {
        assert_eq!(
            parse_schedule("16, 32,64").unwrap(),
            vec![ScaleLevel::S16, ScaleLevel::S32, ScaleLevel::S64]
        );
        assert!(parse_schedule("16,24").is_err());
        assert_eq!("ca_sa".parse::<Strategy>().unwrap(), Strategy::CaSa);
        assert!("crf".parse::<Strategy>().is_err());
    }
}
