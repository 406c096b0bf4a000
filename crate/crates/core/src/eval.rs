//! IoU and mIoU.

use alloc::collections::BTreeMap;
use alloc::string::String;

use crate::error::{input_err, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Pooling {
    /// Sum intersections and unions of a class over all images, then divide.
    #[default]
    Dataset,
    /// Average the per-image IoUs of a class.
    PerImage,
}

/// Pixel tallies for one class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassCounts {
    pub intersection: u64,
    pub union: u64,
    pub images: u64,
    /// Sum of per-image IoUs, used by [`Pooling::PerImage`].
    pub iou_sum: f64,
}

impl ClassCounts {
    fn merge(&mut self, other: &ClassCounts) {
        self.intersection += other.intersection;
        self.union += other.union;
        self.images += other.images;
        self.iou_sum += other.iou_sum;
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub per_class: BTreeMap<String, f64>,
    pub miou: f64,
    pub counts: BTreeMap<String, ClassCounts>,
    pub pooling: Pooling,
    /// IoU assigned when prediction and ground truth are both empty.
    pub empty_iou: f64,
}

fn tally(pred: &BinaryMask, gt: &BinaryMask) -> Result<(u64, u64)> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(input_err!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        ));
    }
    let (mut inter, mut union) = (0u64, 0u64);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let (p, g) = (p != 0, g != 0);
        inter += u64::from(p && g);
        union += u64::from(p || g);
    }
    Ok((inter, union))
}

fn ratio(intersection: u64, union: u64) -> f64 {
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

/// `|pred ∩ gt| / |pred ∪ gt|`; two empty masks score 1.
pub fn iou(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    let (i, u) = tally(pred, gt)?;
    Ok(ratio(i, u))
}

/// Mergeable per-class accumulator; shards can be tallied independently and
/// combined with [`EvalTally::merge`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalTally {
    counts: BTreeMap<String, ClassCounts>,
}

impl EvalTally {
    pub fn add(&mut self, pred: &BinaryMask, gt: &BinaryMask, class_label: &str) -> Result<()> {
        let (i, u) = tally(pred, gt)?;
        let entry = self.counts.entry(String::from(class_label)).or_default();
        entry.merge(&ClassCounts {
            intersection: i,
            union: u,
            images: 1,
            iou_sum: ratio(i, u),
        });
        Ok(())
    }

    pub fn merge(&mut self, other: &EvalTally) {
        for (label, c) in &other.counts {
            self.counts.entry(label.clone()).or_default().merge(c);
        }
    }

    pub fn finish(self, pooling: Pooling) -> Result<EvalReport> {
        if self.counts.is_empty() {
            return Err(input_err!("nothing to evaluate"));
        }
        let per_class: BTreeMap<String, f64> = self
            .counts
            .iter()
            .map(|(label, c)| {
                let v = match pooling {
                    Pooling::Dataset => ratio(c.intersection, c.union),
                    Pooling::PerImage => c.iou_sum / c.images as f64,
                };
                (label.clone(), v)
            })
            .collect();
        let miou = per_class.values().sum::<f64>() / per_class.len() as f64;
        Ok(EvalReport {
            per_class,
            miou,
            counts: self.counts,
            pooling,
            empty_iou: 1.0,
        })
    }
}

pub fn evaluate<'a, I>(pairs: I, pooling: Pooling) -> Result<EvalReport>
where
    I: IntoIterator<Item = (&'a BinaryMask, &'a BinaryMask, &'a str)>,
{
    let mut t = EvalTally::default();
    for (pred, gt, label) in pairs {
        t.add(pred, gt, label)?;
    }
    t.finish(pooling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn m(bits: &[u8]) -> BinaryMask {
        BinaryMask::new(1, bits.len(), bits.to_vec()).unwrap()
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&m(&[1, 1, 0]), &m(&[1, 1, 0])).unwrap(), 1.0);
        assert_eq!(iou(&m(&[1, 0, 0]), &m(&[0, 1, 0])).unwrap(), 0.0);
        assert_eq!(iou(&m(&[1, 0, 0]), &m(&[1, 1, 0])).unwrap(), 0.5);
        assert_eq!(iou(&m(&[0, 0]), &m(&[0, 0])).unwrap(), 1.0);
        assert!(iou(&m(&[0, 0]), &m(&[0, 0, 0])).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let a = m(&[1, 1, 0]);
        let r = evaluate([(&a, &a, "cat")], Pooling::Dataset).unwrap();
        assert_eq!(r.miou, 1.0);

        let (p, g) = (m(&[1, 0]), m(&[0, 1]));
        let r = evaluate([(&a, &a, "cat"), (&p, &g, "dog")], Pooling::Dataset).unwrap();
        assert_eq!(r.miou, 0.5);

        // (I=1, U=2) twice for one class -> 2/4
        let (p, g) = (m(&[1, 0, 0]), m(&[1, 1, 0]));
        let r = evaluate([(&p, &g, "cat"), (&p, &g, "cat")], Pooling::Dataset).unwrap();
        assert_eq!(r.per_class["cat"], 0.5);
        assert_eq!(r.counts["cat"].intersection, 2);
        assert_eq!(r.counts["cat"].union, 4);

        let empty: [(&BinaryMask, &BinaryMask, &str); 0] = [];
        assert!(evaluate(empty, Pooling::Dataset).is_err());
    }

    #[test]
    fn pooled_differs_from_per_image() {
        let (p1, g1) = (m(&[1, 0, 0, 0]), m(&[1, 0, 0, 0]));
        let (p2, g2) = (m(&[1, 1, 1, 0]), m(&[1, 0, 0, 0]));
        let pooled = evaluate([(&p1, &g1, "x"), (&p2, &g2, "x")], Pooling::Dataset).unwrap();
        let per = evaluate([(&p1, &g1, "x"), (&p2, &g2, "x")], Pooling::PerImage).unwrap();
        assert_eq!(pooled.miou, 2.0 / 4.0);
        assert!((per.miou - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    fn masks() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        (1usize..6, 1usize..6).prop_flat_map(|(h, w)| {
            (
                proptest::collection::vec(0u8..2, h * w),
                proptest::collection::vec(0u8..2, h * w),
            )
                .prop_map(move |(a, b)| (BinaryMask::new(h, w, a).unwrap(), BinaryMask::new(h, w, b).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn iou_symmetric_bounded_reflexive((a, b) in masks()) {
            let ab = iou(&a, &b).unwrap();
            prop_assert_eq!(ab, iou(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn evaluate_order_free(pairs in proptest::collection::vec((masks(), 0usize..3), 1..8)) {
            let labels = ["a", "b", "c"];
            let items: Vec<(&BinaryMask, &BinaryMask, &str)> =
                pairs.iter().map(|((p, g), l)| (p, g, labels[*l])).collect();
            let fwd = evaluate(items.iter().copied(), Pooling::Dataset).unwrap();
            let rev = evaluate(items.iter().rev().copied(), Pooling::Dataset).unwrap();
            for (label, c) in &fwd.counts {
                let r = &rev.counts[label];
                prop_assert_eq!((c.intersection, c.union, c.images), (r.intersection, r.union, r.images));
                prop_assert!((c.iou_sum - r.iou_sum).abs() < 1e-12);
            }
            prop_assert_eq!(&fwd.per_class, &rev.per_class);
            prop_assert_eq!(fwd.miou, rev.miou);

            // shard and merge
            let mid = items.len() / 2;
            let mut left = EvalTally::default();
            let mut right = EvalTally::default();
            for &(p, g, l) in &items[..mid] { left.add(p, g, l).unwrap(); }
            for &(p, g, l) in &items[mid..] { right.add(p, g, l).unwrap(); }
            left.merge(&right);
            prop_assert_eq!(left.finish(Pooling::Dataset).unwrap().per_class, fwd.per_class);
        }
    }

    #[test]
    fn report_lists_every_class() {
        let a = m(&[1]);
        let r = evaluate([(&a, &a, "z"), (&a, &a, "y")], Pooling::Dataset).unwrap();
        assert_eq!(r.per_class.keys().cloned().collect::<Vec<_>>(), vec!["y", "z"]);
    }
}
