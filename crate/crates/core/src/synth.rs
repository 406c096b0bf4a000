//! Synthetic attention dumps with known ground truth.
//!
//! Geometry is defined on the unit square and rasterized at 512×512 by pixel
//! centers; that raster is the ground-truth mask. Each attention scale sees
//! the box-averaged coverage of the object (and of an optional halo ring
//! around it), so coarser scales get blurrier region boundaries.
//!
//! SA rows are block affinities: with region memberships `m_p` over
//! {object, halo, far background} and a symmetric 3×3 affinity table `A`,
//! `w(p, q) = m_pᵀ A m_q`, optionally perturbed by multiplicative noise, then
//! normalized so each row sums to 1 (the softmax of the log-affinity).
//!
//! The class CA channel at the seed scale is 1 on a chosen set of hot pixels
//! inside the object (plus optional hot pixels just outside it) and 0
//! elsewhere, mixed with uniform noise. Finer CA maps spread that channel
//! toward a uniform level.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregate::{aggregate_scale, MaxNormalization};
use crate::dump::{
    AggregatedAttention, AttentionDump, AttentionKind, DumpHeader, DumpTensors, RawAttentionMap,
};
use crate::error::{input_err, Result};
use crate::expansion::upsample_bilinear;
use crate::mask::{BinaryMask, SoftMask};
use crate::tensor::{ScaleLevel, Tensor, FULL_RESOLUTION};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl Disk {
    fn signed_distance(&self, x: f64, y: f64) -> f64 {
        libm::hypot(x - self.cx, y - self.cy) - self.radius
    }
}

/// Object geometry in unit-square coordinates (`x` = column, `y` = row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk(Disk),
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    TwoBlobs(Disk, Disk),
}

impl Shape {
    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Disk(d) => d.signed_distance(x, y),
            Shape::Rectangle { x0, y0, x1, y1 } => {
                let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
                let (hx, hy) = ((x1 - x0) / 2.0, (y1 - y0) / 2.0);
                let dx = libm::fabs(x - cx) - hx;
                let dy = libm::fabs(y - cy) - hy;
                let outside = libm::hypot(dx.max(0.0), dy.max(0.0));
                outside + dx.max(dy).min(0.0)
            }
            Shape::TwoBlobs(a, b) => a.signed_distance(x, y).min(b.signed_distance(x, y)),
        }
    }

    fn fits_unit_square(&self) -> bool {
        let disk_fits = |d: &Disk| {
            d.radius > 0.0
                && d.cx - d.radius >= 0.0
                && d.cx + d.radius <= 1.0
                && d.cy - d.radius >= 0.0
                && d.cy + d.radius <= 1.0
        };
        match self {
            Shape::Disk(d) => disk_fits(d),
            Shape::Rectangle { x0, y0, x1, y1 } => {
                *x0 >= 0.0 && *y0 >= 0.0 && *x1 <= 1.0 && *y1 <= 1.0 && x0 < x1 && y0 < y1
            }
            Shape::TwoBlobs(a, b) => disk_fits(a) && disk_fits(b),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Disk(_) => "disk",
            Shape::Rectangle { .. } => "rectangle",
            Shape::TwoBlobs(..) => "two-blobs",
        }
    }
}

/// Block affinity strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affinity {
    /// object ↔ object
    pub object: f64,
    /// background ↔ background (halo ↔ far and far ↔ far)
    pub background: f64,
    /// object ↔ any background
    pub cross: f64,
    /// halo ↔ halo
    pub halo: f64,
}

impl Default for Affinity {
    fn default() -> Self {
        Self {
            object: 1.0,
            background: 1.0,
            cross: 0.0,
            halo: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    /// One aggregated CA and SA tensor per scale.
    Aggregated,
    /// Raw maps for `layers` blocks per scale over `timesteps` steps.
    Full { layers: usize, timesteps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub shape: Shape,
    pub affinity: Affinity,
    /// Number of hot CA pixels inside the object at the seed scale.
    pub seed_count: usize,
    /// Pick hot pixels as a tight cluster around one anchor instead of
    /// uniformly at random.
    pub concentrated: bool,
    /// Hot CA pixels placed on background pixels touching the object.
    pub leak_seeds: usize,
    /// Width of the halo ring around the object, in unit-square units.
    pub halo_width: f64,
    /// Uniform CA noise amplitude and multiplicative SA noise amplitude, in
    /// `[0, 1]`.
    pub noise: f64,
    pub seed: u64,
    pub scales: Vec<ScaleLevel>,
    pub ca_seed_scale: ScaleLevel,
    pub token_count: usize,
    pub class_token: usize,
    pub class_label: String,
    pub mode: SynthMode,
}

impl SynthParams {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            affinity: Affinity::default(),
            seed_count: 6,
            concentrated: false,
            leak_seeds: 0,
            halo_width: 0.0,
            noise: 0.0,
            seed: 0,
            scales: vec![ScaleLevel::S16, ScaleLevel::S32, ScaleLevel::S64],
            ca_seed_scale: ScaleLevel::S16,
            token_count: 8,
            class_token: 5,
            class_label: String::from(shape.name()),
            mode: SynthMode::Aggregated,
        }
    }

    /// Centered disk of radius 0.35.
    pub fn disk() -> Self {
        Self::new(Shape::Disk(Disk {
            cx: 0.5,
            cy: 0.5,
            radius: 0.35,
        }))
    }

    pub fn rectangle() -> Self {
        Self::new(Shape::Rectangle {
            x0: 0.15,
            y0: 0.2,
            x1: 0.85,
            y1: 0.85,
        })
    }

    pub fn two_blobs() -> Self {
        Self::new(Shape::TwoBlobs(
            Disk {
                cx: 0.3,
                cy: 0.35,
                radius: 0.18,
            },
            Disk {
                cx: 0.68,
                cy: 0.62,
                radius: 0.2,
            },
        ))
    }

    /// Two hot CA pixels packed together in one spot of the object, with
    /// noisy CA and SA.
    pub fn sparse_concentrated() -> Self {
        let mut p = Self::disk();
        p.seed_count = 2;
        p.concentrated = true;
        p.noise = 0.1;
        p
    }

    /// Concentrated seeds plus hot CA pixels just outside the object, whose
    /// surrounding halo has strong internal affinity.
    pub fn background_leak() -> Self {
        let mut p = Self::disk();
        p.seed_count = 2;
        p.concentrated = true;
        p.leak_seeds = 1;
        p.halo_width = 0.08;
        p.affinity.halo = 8.0;
        p
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFixture {
    pub dump: AttentionDump,
    /// 512×512 ground truth.
    pub truth: BinaryMask,
    /// Object coverage fraction per declared scale.
    pub coverage: BTreeMap<ScaleLevel, SoftMask>,
}

/// Block layout of a U-Net with 16 transformer blocks: which 1-based block
/// indices produce each resolution.
pub fn layers_for_scale(scale: ScaleLevel) -> &'static [u8] {
    match scale {
        ScaleLevel::S64 => &[1, 2, 14, 15, 16],
        ScaleLevel::S32 => &[3, 4, 11, 12, 13],
        ScaleLevel::S16 => &[5, 6, 8, 9, 10],
        ScaleLevel::S8 => &[7],
    }
}

/// Region memberships of one cell: object, halo, far background.
type Membership = [f64; 3];

struct Raster {
    object: Vec<bool>,
    halo: Vec<bool>,
}

fn rasterize(shape: &Shape, halo_width: f64) -> Raster {
    let n = FULL_RESOLUTION;
    let mut object = Vec::with_capacity(n * n);
    let mut halo = Vec::with_capacity(n * n);
    for r in 0..n {
        let y = (r as f64 + 0.5) / n as f64;
        for c in 0..n {
            let x = (c as f64 + 0.5) / n as f64;
            let d = shape.signed_distance(x, y);
            object.push(d <= 0.0);
            halo.push(d > 0.0 && d <= halo_width);
        }
    }
    Raster { object, halo }
}

fn memberships(raster: &Raster, side: usize) -> Vec<Membership> {
    let block = FULL_RESOLUTION / side;
    let area = (block * block) as f64;
    let mut out = Vec::with_capacity(side * side);
    for br in 0..side {
        for bc in 0..side {
            let (mut obj, mut halo) = (0usize, 0usize);
            for r in br * block..(br + 1) * block {
                let row = r * FULL_RESOLUTION;
                for c in bc * block..(bc + 1) * block {
                    obj += usize::from(raster.object[row + c]);
                    halo += usize::from(raster.halo[row + c]);
                }
            }
            let (o, h) = (obj as f64 / area, halo as f64 / area);
            out.push([o, h, (1.0 - o - h).max(0.0)]);
        }
    }
    out
}

fn affinity_table(a: &Affinity) -> [[f64; 3]; 3] {
    [
        [a.object, a.cross, a.cross],
        [a.cross, a.halo, a.background],
        [a.cross, a.background, a.background],
    ]
}

/// Row-normalized block-affinity SA at one scale, in `f64`.
fn block_self_attention(
    members: &[Membership],
    table: &[[f64; 3]; 3],
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let plane = members.len();
    let mut out = vec![0.0f64; plane * plane];
    for (p, mp) in members.iter().enumerate() {
        let mut v = [0.0f64; 3];
        for (h, vh) in v.iter_mut().enumerate() {
            *vh = (0..3).map(|g| mp[g] * table[g][h]).sum();
        }
        let row = &mut out[p * plane..(p + 1) * plane];
        let mut total = 0.0;
        for (w, mq) in row.iter_mut().zip(members) {
            let mut value = v[0] * mq[0] + v[1] * mq[1] + v[2] * mq[2];
            if noise > 0.0 {
                value *= 1.0 + noise * (2.0 * rng.gen::<f64>() - 1.0);
            }
            *w = value.max(0.0);
            total += *w;
        }
        if total > 0.0 {
            row.iter_mut().for_each(|w| *w /= total);
        } else {
            row[p] = 1.0;
        }
    }
    out
}

fn pick_nearest(candidates: &[usize], anchor: usize, side: usize, count: usize) -> Vec<usize> {
    let (ar, ac) = ((anchor / side) as i64, (anchor % side) as i64);
    let mut ranked: Vec<(i64, usize)> = candidates
        .iter()
        .map(|&i| {
            let (r, c) = ((i / side) as i64, (i % side) as i64);
            ((r - ar).pow(2) + (c - ac).pow(2), i)
        })
        .collect();
    ranked.sort_unstable();
    ranked.into_iter().take(count).map(|(_, i)| i).collect()
}

fn pick_random(candidates: &[usize], count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pool = candidates.to_vec();
    for i in 0..count.min(pool.len()) {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Class channel at the seed scale, in `[0, 1]`.
fn seed_scale_channel(
    params: &SynthParams,
    members: &[Membership],
    side: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let interior: Vec<usize> = (0..members.len()).filter(|&i| members[i][0] >= 1.0).collect();
    if interior.is_empty() {
        return Err(input_err!(
            "object covers no full pixel at the {side}x{side} seed scale"
        ));
    }
    if params.seed_count == 0 || params.seed_count > interior.len() {
        return Err(input_err!(
            "seed count {} outside 1..={} interior pixels",
            params.seed_count,
            interior.len()
        ));
    }
    let anchor = interior[rng.gen_range(0..interior.len())];
    let hot = if params.concentrated {
        pick_nearest(&interior, anchor, side, params.seed_count)
    } else {
        pick_random(&interior, params.seed_count, rng)
    };

    let mut leaks = Vec::new();
    if params.leak_seeds > 0 {
        let touches_object = |i: usize| {
            let (r, c) = ((i / side) as i64, (i % side) as i64);
            (-1..=1).any(|dr| {
                (-1..=1).any(|dc| {
                    let (nr, nc) = (r + dr, c + dc);
                    nr >= 0
                        && nc >= 0
                        && (nr as usize) < side
                        && (nc as usize) < side
                        && members[nr as usize * side + nc as usize][0] > 0.0
                })
            })
        };
        let border: Vec<usize> = (0..members.len())
            .filter(|&i| members[i][0] == 0.0 && touches_object(i))
            .collect();
        if params.leak_seeds > border.len() {
            return Err(input_err!(
                "{} leak seeds requested but only {} background pixels touch the object",
                params.leak_seeds,
                border.len()
            ));
        }
        leaks = if params.concentrated {
            pick_nearest(&border, anchor, side, params.leak_seeds)
        } else {
            pick_random(&border, params.leak_seeds, rng)
        };
    }

    let mut channel = vec![0.0f64; members.len()];
    for &i in hot.iter().chain(&leaks) {
        channel[i] = 1.0;
    }
    for v in channel.iter_mut() {
        *v = (1.0 - params.noise) * *v + params.noise * rng.gen::<f64>();
    }
    Ok(channel)
}

/// Class channel at another scale: area mean when coarser, bilinear upsample
/// blended toward a uniform level when finer.
fn channel_at_scale(seed_channel: &[f64], seed_side: usize, side: usize) -> Result<Vec<f64>> {
    if side == seed_side {
        return Ok(seed_channel.to_vec());
    }
    if side < seed_side {
        let f = seed_side / side;
        let mut out = vec![0.0; side * side];
        for r in 0..seed_side {
            for c in 0..seed_side {
                out[(r / f) * side + c / f] += seed_channel[r * seed_side + c] / (f * f) as f64;
            }
        }
        return Ok(out);
    }
    let mask = SoftMask::new(
        seed_side,
        seed_channel.iter().map(|&v| (v as f32).clamp(0.0, 1.0)).collect(),
    )?;
    let up = upsample_bilinear(&mask, side)?;
    let spread = 0.25 * libm::log2(side as f64 / seed_side as f64);
    Ok(up
        .data()
        .iter()
        .map(|&v| (1.0 - spread) * f64::from(v) + spread * 0.5)
        .collect())
}

fn cross_attention(
    class_channel: &[f64],
    params: &SynthParams,
    side: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let tokens = params.token_count;
    let mut out = Vec::with_capacity(side * side * tokens);
    for &cls in class_channel {
        for t in 0..tokens {
            let v = if t == params.class_token {
                cls
            } else if t == 0 {
                0.5
            } else {
                0.05 + 0.05 * params.noise * rng.gen::<f64>()
            };
            out.push(v);
        }
    }
    out
}

fn to_tensor(shape: Vec<usize>, data: &[f64]) -> Result<Tensor> {
    Tensor::new(shape, data.iter().map(|&v| v as f32).collect())
}

/// Builds a dump and its ground truth from `params`. Deterministic in
/// `params.seed`.
pub fn make_synthetic_dump(params: &SynthParams) -> Result<SyntheticFixture> {
    if !params.shape.fits_unit_square() {
        return Err(input_err!("{} geometry does not fit the unit square", params.shape.name()));
    }
    if !(0.0..=1.0).contains(&params.noise) {
        return Err(input_err!("noise {} outside [0, 1]", params.noise));
    }
    if params.token_count < 2 || params.class_token == 0 || params.class_token >= params.token_count {
        return Err(input_err!(
            "class token {} must be a non-start token of {}",
            params.class_token,
            params.token_count
        ));
    }
    if !params.scales.contains(&params.ca_seed_scale) {
        return Err(input_err!("seed scale {} is not among the generated scales", params.ca_seed_scale));
    }
    let a = params.affinity;
    if [a.object, a.background, a.cross, a.halo].iter().any(|v| !v.is_finite() || *v < 0.0) || a.object <= 0.0 {
        return Err(input_err!("affinities must be non-negative with a positive object affinity"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let raster = rasterize(&params.shape, params.halo_width);
    let truth = BinaryMask::new(
        FULL_RESOLUTION,
        FULL_RESOLUTION,
        raster.object.iter().map(|&b| u8::from(b)).collect(),
    )?;

    let mut scales = params.scales.clone();
    scales.sort_unstable();
    scales.dedup();

    let member_maps: BTreeMap<ScaleLevel, Vec<Membership>> = scales
        .iter()
        .map(|&s| (s, memberships(&raster, s.side())))
        .collect();
    let coverage = member_maps
        .iter()
        .map(|(&s, m)| {
            let data = m.iter().map(|v| (v[0] as f32).clamp(0.0, 1.0)).collect();
            SoftMask::new(s.side(), data).map(|mask| (s, mask))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;

    let seed_side = params.ca_seed_scale.side();
    let seed_channel = seed_scale_channel(params, &member_maps[&params.ca_seed_scale], seed_side, &mut rng)?;

    let table = affinity_table(&params.affinity);
    let mut base = Vec::with_capacity(scales.len());
    for &scale in &scales {
        let side = scale.side();
        let channel = channel_at_scale(&seed_channel, seed_side, side)?;
        let ca = cross_attention(&channel, params, side, &mut rng);
        let sa = block_self_attention(&member_maps[&scale], &table, params.noise, &mut rng);
        base.push((scale, ca, sa));
    }

    let header = DumpHeader {
        prompt: alloc::format!("a photo of a {}", params.class_label),
        class_token_indices: vec![params.class_token],
        timestep_count: 1,
        class_label: Some(params.class_label.clone()),
        image_path: None,
        model_id: Some(String::from("synthetic")),
        sampler_seed: Some(params.seed),
    };

    let tokens = params.token_count;
    let dump = match params.mode {
        SynthMode::Aggregated => {
            let mut map = BTreeMap::new();
            for (scale, ca, sa) in base {
                let s = scale.side();
                let raw = |kind, shape, data: &[f64]| -> Result<RawAttentionMap> {
                    Ok(RawAttentionMap {
                        kind,
                        scale,
                        layer: layers_for_scale(scale)[0],
                        timestep: 1,
                        data: to_tensor(shape, data)?,
                    })
                };
                let ca = raw(AttentionKind::Cross, vec![s, s, tokens], &ca)?;
                let sa = raw(AttentionKind::SelfAttention, vec![s, s, s, s], &sa)?;
                map.insert(
                    scale,
                    AggregatedAttention {
                        scale,
                        ca: aggregate_scale(&[&ca], scale, MaxNormalization::Global)?,
                        sa: aggregate_scale(&[&sa], scale, MaxNormalization::Global)?,
                    },
                );
            }
            AttentionDump::new(header, &scales, DumpTensors::Aggregated(map))?
        }
        SynthMode::Full { layers, timesteps } => {
            if timesteps == 0 || layers == 0 {
                return Err(input_err!("full mode needs at least one layer and one timestep"));
            }
            let mut header = header;
            header.timestep_count = timesteps as u32;
            let mut maps = Vec::new();
            for (scale, ca, sa) in &base {
                let s = scale.side();
                let ids = layers_for_scale(*scale);
                if layers > ids.len() {
                    return Err(input_err!("scale {scale} has only {} blocks", ids.len()));
                }
                for &layer in &ids[..layers] {
                    for t in 1..=timesteps {
                        maps.push(RawAttentionMap {
                            kind: AttentionKind::Cross,
                            scale: *scale,
                            layer,
                            timestep: t as u32,
                            data: to_tensor(vec![s, s, tokens], &jittered(ca, params.noise, None, &mut rng))?,
                        });
                        maps.push(RawAttentionMap {
                            kind: AttentionKind::SelfAttention,
                            scale: *scale,
                            layer,
                            timestep: t as u32,
                            data: to_tensor(vec![s, s, s, s], &jittered(sa, params.noise, Some(s * s), &mut rng))?,
                        });
                    }
                }
            }
            AttentionDump::new(header, &scales, DumpTensors::Full(maps))?
        }
    };

    Ok(SyntheticFixture { dump, truth, coverage })
}

/// Per-map copy with a random positive gain and multiplicative entry noise;
/// with `row_len` set, rows are renormalized to sum to 1.
fn jittered(base: &[f64], noise: f64, row_len: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gain = 0.5 + 1.5 * rng.gen::<f64>();
    let mut out: Vec<f64> = base
        .iter()
        .map(|&v| {
            let j = if noise > 0.0 { 1.0 + noise * (2.0 * rng.gen::<f64>() - 1.0) } else { 1.0 };
            (v * gain * j).max(0.0)
        })
        .collect();
    if let Some(n) = row_len {
        for row in out.chunks_mut(n) {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(shape: Shape) -> SynthParams {
        let mut p = SynthParams::new(shape);
        p.scales = vec![ScaleLevel::S16, ScaleLevel::S32];
        p
    }

    #[test]
    fn deterministic_in_seed() {
        let mut p = SynthParams::sparse_concentrated().with_seed(7);
        p.scales = vec![ScaleLevel::S16, ScaleLevel::S32];
        let a = make_synthetic_dump(&p).unwrap();
        let b = make_synthetic_dump(&p).unwrap();
        assert_eq!(a, b);
        let c = make_synthetic_dump(&p.clone().with_seed(8)).unwrap();
        assert_ne!(a.dump, c.dump);
    }

    #[test]
    fn sa_rows_sum_to_one_before_normalization() {
        let raster = rasterize(&SynthParams::disk().shape, 0.05);
        let members = memberships(&raster, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let table = affinity_table(&Affinity { halo: 4.0, cross: 0.1, ..Affinity::default() });
        let sa = block_self_attention(&members, &table, 0.2, &mut rng);
        for row in sa.chunks(256) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_geometry_rejected() {
        let p = small(Shape::Disk(Disk { cx: 0.9, cy: 0.5, radius: 0.3 }));
        assert!(make_synthetic_dump(&p).is_err());
        let p = small(Shape::Disk(Disk { cx: 0.5, cy: 0.5, radius: 0.02 }));
        assert!(make_synthetic_dump(&p).is_err());
        let mut p = small(Shape::Disk(Disk { cx: 0.5, cy: 0.5, radius: 0.3 }));
        p.seed_count = 10_000;
        assert!(make_synthetic_dump(&p).is_err());
    }

    #[test]
    fn truth_matches_geometry() {
        let f = make_synthetic_dump(&small(SynthParams::rectangle().shape)).unwrap();
        // 0.15..0.85 x 0.2..0.85 on a 512 grid of pixel centers
        let cols = (0..512).filter(|&c| {
            let x = (c as f64 + 0.5) / 512.0;
            (0.15..=0.85).contains(&x)
        });
        let rows = (0..512).filter(|&r| {
            let y = (r as f64 + 0.5) / 512.0;
            (0.2..=0.85).contains(&y)
        });
        assert_eq!(f.truth.count_ones(), cols.count() * rows.count());
        assert!(f.truth.get(280, 250));
        assert!(!f.truth.get(10, 10));
    }

    #[test]
    fn full_mode_layout() {
        let mut p = small(SynthParams::disk().shape);
        p.scales = vec![ScaleLevel::S16];
        p.mode = SynthMode::Full { layers: 2, timesteps: 2 };
        let f = make_synthetic_dump(&p).unwrap();
        let DumpTensors::Full(maps) = f.dump.tensors() else { panic!("full mode") };
        let count = |kind| maps.iter().filter(|m| m.kind == kind).count();
        assert_eq!(count(AttentionKind::Cross), 4);
        assert_eq!(count(AttentionKind::SelfAttention), 4);
    }
}
