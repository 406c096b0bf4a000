//! Resolution-grouped aggregation of raw attention maps.
//!
//! Every map is divided by its own maximum and the normalized maps of one
//! `(kind, scale)` group are averaged uniformly over layers and timesteps.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::dump::{AggregatedAttention, AttentionKind, RawAttentionMap};
use crate::error::{input_err, Error, Result};
use crate::tensor::{ScaleLevel, Tensor};

/// Reduction used for the per-map maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaxNormalization {
    /// One maximum over every entry of the map.
    #[default]
    Global,
    /// CA maps are normalized per token channel (max over the spatial axes);
    /// SA maps still use the global maximum.
    PerToken,
}

/// Max-normalized copy of `map`, accumulated in `f64`.
fn normalized_f64(map: &RawAttentionMap, normalization: MaxNormalization) -> Result<Vec<f64>> {
    let data = map.data.data();
    if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(input_err!("attention entries must be finite and non-negative, got {v}"));
    }
    let global = data.iter().copied().fold(0.0f32, f32::max);
    if global <= 0.0 {
        return Err(Error::DegenerateMap);
    }
    match (normalization, map.kind) {
        (MaxNormalization::PerToken, AttentionKind::Cross) => {
            let tokens = *map.data.shape().last().unwrap_or(&1);
            let mut maxima = vec![0.0f32; tokens];
            for (i, &v) in data.iter().enumerate() {
                let c = i % tokens;
                maxima[c] = maxima[c].max(v);
            }
            Ok(data
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let m = maxima[i % tokens];
                    if m > 0.0 {
                        f64::from(v) / f64::from(m)
                    } else {
                        0.0
                    }
                })
                .collect())
        }
        _ => {
            let m = f64::from(global);
            Ok(data.iter().map(|&v| f64::from(v) / m).collect())
        }
    }
}

/// Divides `map` by its global maximum. The result has maximum exactly 1.
pub fn normalize_map(map: &RawAttentionMap) -> Result<Tensor> {
    normalize_map_with(map, MaxNormalization::Global)
}

pub fn normalize_map_with(map: &RawAttentionMap, normalization: MaxNormalization) -> Result<Tensor> {
    let out = normalized_f64(map, normalization)?;
    Tensor::new(map.data.shape().to_vec(), out.into_iter().map(|v| v as f32).collect())
}

/// Mean of the max-normalized maps, which must all share `scale` and one kind.
///
/// Maps are summed in (layer, timestep) order regardless of input order, so
/// the result is bit-identical under any permutation of `maps`.
pub fn aggregate_scale(
    maps: &[&RawAttentionMap],
    scale: ScaleLevel,
    normalization: MaxNormalization,
) -> Result<Tensor> {
    let first = maps.first().ok_or_else(|| input_err!("no maps to aggregate at scale {scale}"))?;
    let kind = first.kind;
    let shape = first.data.shape().to_vec();
    for m in maps {
        if m.scale != scale || m.kind != kind {
            return Err(input_err!(
                "mixed maps: expected {}@{scale}, found {}@{}",
                kind.as_str(),
                m.kind.as_str(),
                m.scale
            ));
        }
        if m.data.shape() != shape.as_slice() {
            return Err(input_err!(
                "mixed shapes {:?} and {:?} at scale {scale}",
                shape,
                m.data.shape()
            ));
        }
    }

    let mut ordered: Vec<&RawAttentionMap> = maps.to_vec();
    ordered.sort_by_key(|m| (m.layer, m.timestep));

    let mut acc = vec![0.0f64; first.data.len()];
    for m in &ordered {
        let norm = normalized_f64(m, normalization)?;
        for (a, v) in acc.iter_mut().zip(norm) {
            *a += v;
        }
    }
    let count = ordered.len() as f64;
    let data = acc.into_iter().map(|v| ((v / count) as f32).clamp(0.0, 1.0)).collect();
    Tensor::new(shape, data)
}

/// Aggregates every declared scale of a full-mode dump.
pub fn aggregate_dump(
    maps: &[RawAttentionMap],
    scales: &[ScaleLevel],
    normalization: MaxNormalization,
) -> Result<BTreeMap<ScaleLevel, AggregatedAttention>> {
    let mut out = BTreeMap::new();
    for &scale in scales {
        let group = |kind| -> Vec<&RawAttentionMap> {
            maps.iter().filter(|m| m.scale == scale && m.kind == kind).collect()
        };
        let ca = aggregate_scale(&group(AttentionKind::Cross), scale, normalization)?;
        let sa = aggregate_scale(&group(AttentionKind::SelfAttention), scale, normalization)?;
        out.insert(scale, AggregatedAttention { scale, ca, sa });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(kind: AttentionKind, layer: u8, timestep: u32, shape: Vec<usize>, data: Vec<f32>) -> RawAttentionMap {
        RawAttentionMap {
            kind,
            scale: ScaleLevel::S8,
            layer,
            timestep,
            data: Tensor::new(shape, data).unwrap(),
        }
    }

    fn row(layer: u8, data: Vec<f32>) -> RawAttentionMap {
        raw(AttentionKind::SelfAttention, layer, 1, vec![1, data.len()], data)
    }

    #[test]
    fn normalize_divides_by_max() {
        let out = normalize_map(&row(1, vec![0.2, 0.4])).unwrap();
        assert_eq!(out.data(), &[0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_is_ones() {
        let out = normalize_map(&row(1, vec![0.3; 4])).unwrap();
        assert!(out.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn normalize_zero_map_is_degenerate() {
        assert_eq!(normalize_map(&row(1, vec![0.0, 0.0])), Err(Error::DegenerateMap));
    }

    #[test]
    fn two_map_mean() {
        let a = row(1, vec![0.0, 1.0]);
        let b = row(2, vec![1.0, 1.0]);
        let out = aggregate_scale(&[&a, &b], ScaleLevel::S8, MaxNormalization::Global).unwrap();
        assert_eq!(out.data(), &[0.5, 1.0]);
    }

    #[test]
    fn single_map_and_replicas() {
        let a = row(1, vec![0.1, 0.7, 0.35]);
        let one = aggregate_scale(&[&a], ScaleLevel::S8, MaxNormalization::Global).unwrap();
        assert_eq!(one, normalize_map(&a).unwrap());
        let four = aggregate_scale(&[&a, &a, &a, &a], ScaleLevel::S8, MaxNormalization::Global).unwrap();
        assert_eq!(four, one);
    }

    #[test]
    fn rejects_empty_and_mixed() {
        assert!(matches!(
            aggregate_scale(&[], ScaleLevel::S8, MaxNormalization::Global),
            Err(Error::Input(_))
        ));
        let a = row(1, vec![1.0, 2.0]);
        let mut b = row(2, vec![1.0, 2.0]);
        b.kind = AttentionKind::Cross;
        assert!(matches!(
            aggregate_scale(&[&a, &b], ScaleLevel::S8, MaxNormalization::Global),
            Err(Error::Input(_))
        ));
        let mut c = row(2, vec![1.0, 2.0]);
        c.scale = ScaleLevel::S16;
        assert!(matches!(
            aggregate_scale(&[&a, &c], ScaleLevel::S8, MaxNormalization::Global),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn per_token_normalizes_each_channel() {
        // (1, 2, 2): two positions, two tokens
        let m = raw(AttentionKind::Cross, 1, 1, vec![1, 2, 2], vec![0.1, 0.8, 0.2, 0.4]);
        let global = normalize_map_with(&m, MaxNormalization::Global).unwrap();
        assert_eq!(global.data(), &[0.125, 1.0, 0.25, 0.5]);
        let per = normalize_map_with(&m, MaxNormalization::PerToken).unwrap();
        assert_eq!(per.data(), &[0.5, 1.0, 1.0, 0.5]);
    }

    fn map_strategy() -> impl Strategy<Value = Vec<Vec<f32>>> {
        (1usize..6, 1usize..7).prop_flat_map(|(len, count)| {
            proptest::collection::vec(
                proptest::collection::vec(0.0f32..10.0, len).prop_map(|mut v| {
                    v[0] += 0.01;
                    v
                }),
                count,
            )
        })
    }

    proptest! {
        #[test]
        fn output_in_unit_interval_and_permutation_invariant(datas in map_strategy(), rot in 0usize..7) {
            let maps: Vec<RawAttentionMap> = datas
                .iter()
                .enumerate()
                .map(|(i, d)| row(i as u8 + 1, d.clone()))
                .collect();
            let refs: Vec<&RawAttentionMap> = maps.iter().collect();
            let base = aggregate_scale(&refs, ScaleLevel::S8, MaxNormalization::Global).unwrap();
            prop_assert!(base.data().iter().all(|v| (0.0..=1.0).contains(v)));

            let mut rotated = refs.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            rotated.reverse();
            let permuted = aggregate_scale(&rotated, ScaleLevel::S8, MaxNormalization::Global).unwrap();
            prop_assert_eq!(&base, &permuted);

            let mut replicated = refs.clone();
            replicated.extend(refs.iter().copied());
            replicated.extend(refs.iter().copied());
            let rep = aggregate_scale(&replicated, ScaleLevel::S8, MaxNormalization::Global).unwrap();
            for (a, b) in base.data().iter().zip(rep.data()) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }

        #[test]
        fn positive_rescaling_is_absorbed(datas in map_strategy(), factor in 0.01f32..100.0, which in 0usize..7) {
            let mut maps: Vec<RawAttentionMap> = datas
                .iter()
                .enumerate()
                .map(|(i, d)| row(i as u8 + 1, d.clone()))
                .collect();
            let refs: Vec<&RawAttentionMap> = maps.iter().collect();
            let base = aggregate_scale(&refs, ScaleLevel::S8, MaxNormalization::Global).unwrap();
            let k = which % maps.len();
            for v in maps[k].data.data_mut() {
                *v *= factor;
            }
            let refs: Vec<&RawAttentionMap> = maps.iter().collect();
            let scaled = aggregate_scale(&refs, ScaleLevel::S8, MaxNormalization::Global).unwrap();
            for (a, b) in base.data().iter().zip(scaled.data()) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }
    }
}
