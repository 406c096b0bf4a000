//! Region expansion through self-attention affinity fields.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::PipelineConfig;
use crate::dump::AggregatedAttention;
use crate::error::{dump_err, input_err, Result};
use crate::mask::{SeedSet, SoftMask};
use crate::seeding::extract_seeds;
use crate::tensor::{ScaleLevel, Tensor};

/// Intermediate artifact recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceData {
    Mask(SoftMask),
    Seeds(SeedSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub name: String,
    pub data: TraceData,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn push_mask(&mut self, name: impl Into<String>, mask: &SoftMask) {
        self.entries.push(TraceEntry {
            name: name.into(),
            data: TraceData::Mask(mask.clone()),
        });
    }

    pub fn push_seeds(&mut self, name: impl Into<String>, seeds: &SeedSet) {
        self.entries.push(TraceEntry {
            name: name.into(),
            data: TraceData::Seeds(seeds.clone()),
        });
    }

    pub fn get(&self, name: &str) -> Option<&TraceData> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.data)
    }
}

fn sa_side(sa: &Tensor) -> Result<usize> {
    match sa.shape() {
        [a, b, c, d] if a == b && b == c && c == d => Ok(*a),
        other => Err(input_err!("self-attention shape {other:?} is not (s, s, s, s)")),
    }
}

/// Mean of the SA affinity fields `sa[i, j, :, :]` over the seeds, before any
/// renormalization. Each output entry is a convex combination of the seed
/// slices.
pub fn expand_region_raw(sa: &Tensor, seeds: &SeedSet) -> Result<SoftMask> {
    let side = sa_side(sa)?;
    if seeds.side() != side {
        return Err(input_err!(
            "seeds on a {}-grid cannot index self-attention at scale {side}",
            seeds.side()
        ));
    }
    let plane = side * side;
    let data = sa.data();
    let mut acc = vec![0.0f64; plane];
    for &(r, c) in seeds.coords() {
        let start = (r * side + c) * plane;
        for (a, &v) in acc.iter_mut().zip(&data[start..start + plane]) {
            *a += f64::from(v);
        }
    }
    let n = seeds.len() as f64;
    let out = acc.into_iter().map(|v| (v / n) as f32).collect();
    Ok(SoftMask::from_unit_values(side, out))
}

/// Seed-averaged SA field, rescaled so its peak is 1.
///
/// Raw SA rows are softmax outputs whose absolute magnitudes shrink with the
/// number of positions; the rescaling makes the next seed threshold
/// independent of that magnitude.
pub fn expand_region(sa: &Tensor, seeds: &SeedSet) -> Result<SoftMask> {
    expand_region_raw(sa, seeds).map(SoftMask::renormalized)
}

/// Weighted mean of the SA fields, `Σ_p w[p]·sa[p, :, :] / Σ_p w[p]`.
/// This is the affinity-matrix/vector product used by the CA·SA baseline.
pub fn propagate_weighted(sa: &Tensor, weights: &SoftMask) -> Result<SoftMask> {
    let side = sa_side(sa)?;
    if weights.side() != side {
        return Err(input_err!(
            "weights of side {} do not match self-attention scale {side}",
            weights.side()
        ));
    }
    let total: f64 = weights.data().iter().map(|&w| f64::from(w)).sum();
    if total <= 0.0 {
        return Err(input_err!("propagation weights are identically zero"));
    }
    let plane = side * side;
    let data = sa.data();
    let mut acc = vec![0.0f64; plane];
    for (p, &w) in weights.data().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let w = f64::from(w);
        for (a, &v) in acc.iter_mut().zip(&data[p * plane..(p + 1) * plane]) {
            *a += w * f64::from(v);
        }
    }
    let out = acc.into_iter().map(|v| (v / total) as f32).collect();
    Ok(SoftMask::from_unit_values(side, out))
}

/// Source sample positions for one output axis: `(lower index, upper index,
/// weight of the upper sample)`.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let ratio = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|d| {
            let x = ((d as f64 + 0.5) * ratio - 0.5).clamp(0.0, last);
            let lo = libm::floor(x) as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, x - lo as f64)
        })
        .collect()
}

/// Bilinear upsampling with half-pixel centers and edge clamping: output
/// pixel `d` samples source coordinate `(d + 0.5)·src/dst − 0.5`.
pub fn upsample_bilinear(mask: &SoftMask, target: usize) -> Result<SoftMask> {
    let src = mask.side();
    if target <= src {
        return Err(input_err!("upsampling target {target} must exceed source side {src}"));
    }
    let taps = axis_taps(src, target);
    let data = mask.data();
    // rows first, then columns
    let mut horizontal = vec![0.0f64; src * target];
    for r in 0..src {
        let row = &data[r * src..(r + 1) * src];
        for (c, &(lo, hi, w)) in taps.iter().enumerate() {
            horizontal[r * target + c] = f64::from(row[lo]) * (1.0 - w) + f64::from(row[hi]) * w;
        }
    }
    let mut out = Vec::with_capacity(target * target);
    for &(lo, hi, w) in &taps {
        let top = &horizontal[lo * target..(lo + 1) * target];
        let bottom = &horizontal[hi * target..(hi + 1) * target];
        out.extend(top.iter().zip(bottom).map(|(&t, &b)| (t * (1.0 - w) + b * w) as f32));
    }
    Ok(SoftMask::from_unit_values(target, out))
}

pub(crate) fn sa_at(
    aggregates: &BTreeMap<ScaleLevel, AggregatedAttention>,
    scale: ScaleLevel,
) -> Result<&Tensor> {
    aggregates
        .get(&scale)
        .map(|a| &a.sa)
        .ok_or_else(|| dump_err!("no self-attention aggregate at scale {scale}"))
}

pub(crate) fn expand_with(sa: &Tensor, seeds: &SeedSet, renormalize: bool) -> Result<SoftMask> {
    if renormalize {
        expand_region(sa, seeds)
    } else {
        expand_region_raw(sa, seeds)
    }
}

/// Coarse-to-fine expansion over `config.scale_schedule`.
///
/// At every scale but the last, the seed-averaged SA field is upsampled to
/// the next scale and re-thresholded at `alpha` to obtain that scale's seeds.
/// The last scale only expands. Seeds never come from finer CA maps.
///
/// Trace names: `seeds_k`, `expanded_k` and `upsampled_{k+1}`, with `k`
/// counted from 1.
pub fn iterative_expand(
    aggregates: &BTreeMap<ScaleLevel, AggregatedAttention>,
    initial_seeds: SeedSet,
    config: &PipelineConfig,
    mut trace: Option<&mut Trace>,
) -> Result<SoftMask> {
    let schedule = &config.scale_schedule;
    let first = *schedule.first().ok_or_else(|| input_err!("scale schedule is empty"))?;
    if initial_seeds.side() != first.side() {
        return Err(input_err!(
            "initial seeds are on a {}-grid but the schedule starts at {first}",
            initial_seeds.side()
        ));
    }
    let mut seeds = initial_seeds;
    let mut k = 1;
    loop {
        let scale = schedule[k - 1];
        let sa = sa_at(aggregates, scale)?;
        let expanded = expand_with(sa, &seeds, config.renormalize_expansion)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push_seeds(alloc::format!("seeds_{k}"), &seeds);
            t.push_mask(alloc::format!("expanded_{k}"), &expanded);
        }
        let Some(&next) = schedule.get(k) else {
            return Ok(expanded);
        };
        let upsampled = upsample_bilinear(&expanded, next.side())?;
        if let Some(t) = trace.as_deref_mut() {
            t.push_mask(alloc::format!("upsampled_{}", k + 1), &upsampled);
        }
        seeds = extract_seeds(&upsampled, config.alpha);
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 2x2-scale SA whose slice (i, j) is `slices[i * 2 + j]`.
    fn sa2(slices: [[f32; 4]; 4]) -> Tensor {
        Tensor::new(vec![2, 2, 2, 2], slices.concat()).unwrap()
    }

    #[test]
    fn single_seed_is_its_slice() {
        let sa = sa2([[0.1, 0.2, 0.4, 0.0], [0.0; 4], [0.0; 4], [0.0; 4]]);
        let seeds = SeedSet::new(2, [(0, 0)]).unwrap();
        let m = expand_region(&sa, &seeds).unwrap();
        assert_eq!(m.data(), &[0.25, 0.5, 1.0, 0.0]);
    }

    #[test]
    fn two_seed_mean() {
        // A = [0.2, 0.4, 0.0, 0.2], B = [0.6, 0.0, 0.2, 0.2]; (A+B)/2 = [0.4, 0.2, 0.1, 0.2]
        let sa = sa2([[0.2, 0.4, 0.0, 0.2], [0.6, 0.0, 0.2, 0.2], [0.9; 4], [0.9; 4]]);
        let seeds = SeedSet::new(2, [(0, 0), (0, 1)]).unwrap();
        let raw = expand_region_raw(&sa, &seeds).unwrap();
        let expect = [0.4f32, 0.2, 0.1, 0.2];
        for (a, b) in raw.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-7);
        }
        let m = expand_region(&sa, &seeds).unwrap();
        for (a, b) in m.data().iter().zip([1.0f32, 0.5, 0.25, 0.5]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn doubly_stochastic_all_seeds_is_constant() {
        // symmetric, every slice sums to 1, equal column sums
        let sa = sa2([
            [0.4, 0.3, 0.2, 0.1],
            [0.3, 0.4, 0.1, 0.2],
            [0.2, 0.1, 0.4, 0.3],
            [0.1, 0.2, 0.3, 0.4],
        ]);
        let seeds = SeedSet::new(2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let m = expand_region(&sa, &seeds).unwrap();
        assert!(m.data().iter().all(|&v| (v - 1.0).abs() < 1e-6), "{:?}", m.data());
    }

    #[test]
    fn scale_mismatch_rejected() {
        let sa = sa2([[0.25; 4]; 4]);
        let seeds = SeedSet::new(4, [(3, 3)]).unwrap();
        assert!(expand_region(&sa, &seeds).is_err());
        let bad = Tensor::new(vec![2, 2, 4], vec![0.0; 16]).unwrap();
        assert!(expand_region(&bad, &SeedSet::new(2, [(0, 0)]).unwrap()).is_err());
    }

    #[test]
    fn weighted_propagation_cases() {
        let sa = sa2([
            [0.4, 0.3, 0.2, 0.1],
            [0.3, 0.4, 0.1, 0.2],
            [0.2, 0.1, 0.4, 0.3],
            [0.0, 0.2, 0.3, 0.5],
        ]);
        let one_hot = SoftMask::new(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(propagate_weighted(&sa, &one_hot).unwrap().data(), &[0.2, 0.1, 0.4, 0.3]);

        let uniform = SoftMask::constant(2, 0.7).unwrap();
        let all = SeedSet::new(2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let a = propagate_weighted(&sa, &uniform).unwrap();
        let b = expand_region_raw(&sa, &all).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-7);
        }

        // brute force over all 16 entries with weights [1, 0.5, 0, 0.25]
        let w = [1.0f64, 0.5, 0.0, 0.25];
        let slices = sa.data();
        let mut expect = [0.0f64; 4];
        for p in 0..4 {
            for q in 0..4 {
                expect[q] += w[p] * f64::from(slices[p * 4 + q]);
            }
        }
        let total: f64 = w.iter().sum();
        let weights = SoftMask::new(2, w.iter().map(|&v| v as f32).collect()).unwrap();
        let got = propagate_weighted(&sa, &weights).unwrap();
        for (g, e) in got.data().iter().zip(expect) {
            assert!((f64::from(*g) - e / total).abs() < 1e-7);
        }

        assert!(propagate_weighted(&sa, &SoftMask::constant(2, 0.0).unwrap()).is_err());
    }

    #[test]
    fn upsample_constant_and_monotone() {
        let c = SoftMask::constant(3, 0.7).unwrap();
        let up = upsample_bilinear(&c, 8).unwrap();
        assert!(up.data().iter().all(|&v| v == 0.7));

        let ramp = SoftMask::new(2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let up = upsample_bilinear(&ramp, 4).unwrap();
        for r in 0..4 {
            for c in 1..4 {
                assert!(up.get(r, c) >= up.get(r, c - 1));
            }
        }
        assert!(upsample_bilinear(&ramp, 2).is_err());
        assert!(upsample_bilinear(&ramp, 1).is_err());
    }

    #[test]
    fn upsample_checkerboard_matches_hand_values() {
        // [[0,1],[1,0]] -> 4x4; source coords per axis are 0, 0.25, 0.75, 1
        let m = SoftMask::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let up = upsample_bilinear(&m, 4).unwrap();
        let xs = [0.0f64, 0.25, 0.75, 1.0];
        for (r, &y) in xs.iter().enumerate() {
            for (c, &x) in xs.iter().enumerate() {
                let expect = x * (1.0 - y) + (1.0 - x) * y;
                assert!((f64::from(up.get(r, c)) - expect).abs() < 1e-6);
            }
        }
    }

    fn unit_mask(max_side: usize) -> impl Strategy<Value = SoftMask> {
        (1..=max_side).prop_flat_map(|side| {
            proptest::collection::vec(0.0f32..=1.0, side * side)
                .prop_map(move |d| SoftMask::new(side, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn upsample_stays_in_range(m in unit_mask(6), extra in 1usize..20) {
            let up = upsample_bilinear(&m, m.side() + extra).unwrap();
            let (lo, hi) = (m.min(), m.max());
            prop_assert!(up.data().iter().all(|&v| v >= lo && v <= hi));
        }

        #[test]
        fn expansion_is_convex_and_order_free(
            raw in proptest::collection::vec(0.0f32..=1.0, 81),
            picks in proptest::collection::vec((0usize..3, 0usize..3), 1..9),
        ) {
            let sa = Tensor::new(vec![3, 3, 3, 3], raw).unwrap();
            let seeds = SeedSet::new(3, picks.iter().copied()).unwrap();
            let reversed = SeedSet::new(3, picks.iter().rev().copied()).unwrap();
            let out = expand_region_raw(&sa, &seeds).unwrap();
            prop_assert_eq!(&out, &expand_region_raw(&sa, &reversed).unwrap());
            for q in 0..9 {
                let vals: Vec<f32> = seeds.coords().iter().map(|&(r, c)| sa.data()[(r * 3 + c) * 9 + q]).collect();
                let lo = vals.iter().copied().fold(f32::INFINITY, f32::min);
                let hi = vals.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                prop_assert!(out.data()[q] >= lo - 1e-7 && out.data()[q] <= hi + 1e-7);
            }
        }
    }
}
