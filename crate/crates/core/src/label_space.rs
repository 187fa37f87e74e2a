//! Pseudo-motion label pool.
//!
//! A label is a decoupled speed pair `(x, y)` drawn from `{-K..K}` on each
//! axis with at most one non-zero component. Positive x moves the crop window
//! right, positive y moves it down. Class indices follow the lexicographic
//! order of `(x, y)`, so they are stable across runs and across processes.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MotionLabel {
    pub x: i32,
    pub y: i32,
}

impl MotionLabel {
    pub const STATIC: MotionLabel = MotionLabel { x: 0, y: 0 };

    pub fn new(x: i32, y: i32) -> Self {
        MotionLabel { x, y }
    }

    pub fn is_static(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// Magnitude of the single non-zero speed (0 for the static label).
    pub fn speed(&self) -> u32 {
        self.x.unsigned_abs() + self.y.unsigned_abs()
    }

    pub fn is_valid_for(&self, k: u32) -> bool {
        self.x * self.y == 0 && self.x.unsigned_abs() <= k && self.y.unsigned_abs() <= k
    }

    pub fn negated(&self) -> Self {
        MotionLabel::new(-self.x, -self.y)
    }
}

impl fmt::Display for MotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Which axes may carry motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    Both,
    X,
    Y,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "both" | "xy" => Ok(Axis::Both),
            "x" | "x-only" => Ok(Axis::X),
            "y" | "y-only" => Ok(Axis::Y),
            other => Err(Error::Config(format!(
                "unknown axis {other:?} (expected both, x or y)"
            ))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Both => "both",
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPool {
    granularity: u32,
    axis: Axis,
    labels: Vec<MotionLabel>,
    index: HashMap<MotionLabel, usize>,
}

impl LabelPool {
    pub fn granularity(&self) -> u32 {
        self.granularity
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn labels(&self) -> &[MotionLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> Option<MotionLabel> {
        self.labels.get(index).copied()
    }

    pub fn index_of(&self, label: MotionLabel) -> Option<usize> {
        self.index.get(&label).copied()
    }

    /// Per-axis speed count `C = 2K + 1`.
    pub fn speeds_per_axis(&self) -> u32 {
        2 * self.granularity + 1
    }
}

/// Builds the pool of `4K + 1` labels (or `2K + 1` for a single axis).
pub fn build_label_pool(k: u32, axis: Axis) -> Result<LabelPool> {
    if k < 1 {
        return Err(Error::InvalidGranularity(k as i64));
    }
    let k_signed = k as i32;
    let speeds = -k_signed..=k_signed;
    let mut labels: Vec<MotionLabel> = match axis {
        Axis::X => speeds.map(|x| MotionLabel::new(x, 0)).collect(),
        Axis::Y => speeds.map(|y| MotionLabel::new(0, y)).collect(),
        Axis::Both => speeds
            .clone()
            .flat_map(|x| speeds.clone().map(move |y| MotionLabel::new(x, y)))
            .filter(|l| l.x * l.y == 0)
            .collect(),
    };
    labels.sort();
    let index = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    Ok(LabelPool {
        granularity: k,
        axis,
        labels,
        index,
    })
}

/// Maps a per-axis speed count `C` to the granularity `K = (C - 1) / 2`.
pub fn per_axis_speed_count_to_k(c: u32) -> Result<u32> {
    if c < 3 || c % 2 != 1 {
        return Err(Error::InvalidClassCount(c as i64));
    }
    Ok((c - 1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_pool_has_nine_labels() {
        let pool = build_label_pool(2, Axis::Both).unwrap();
        assert_eq!(pool.len(), 9);
        assert_eq!(build_label_pool(1, Axis::Both).unwrap().len(), 5);
    }

    #[test]
    fn x_only_pool_contents() {
        let pool = build_label_pool(2, Axis::X).unwrap();
        let expected: Vec<_> = [(-2, 0), (-1, 0), (0, 0), (1, 0), (2, 0)]
            .into_iter()
            .map(|(x, y)| MotionLabel::new(x, y))
            .collect();
        assert_eq!(pool.labels(), expected.as_slice());
    }

    #[test]
    fn canonical_order_for_k2() {
        let pool = build_label_pool(2, Axis::Both).unwrap();
        let got: Vec<(i32, i32)> = pool.labels().iter().map(|l| (l.x, l.y)).collect();
        assert_eq!(
            got,
            vec![
                (-2, 0),
                (-1, 0),
                (0, -2),
                (0, -1),
                (0, 0),
                (0, 1),
                (0, 2),
                (1, 0),
                (2, 0)
            ]
        );
    }

    #[test]
    fn zero_granularity_rejected() {
        assert!(matches!(
            build_label_pool(0, Axis::Both),
            Err(Error::InvalidGranularity(0))
        ));
    }

    #[test]
    fn speed_count_conversion() {
        assert_eq!(per_axis_speed_count_to_k(5).unwrap(), 2);
        assert_eq!(per_axis_speed_count_to_k(3).unwrap(), 1);
        assert_eq!(per_axis_speed_count_to_k(9).unwrap(), 4);
        for bad in [0, 1, 2, 4, 6] {
            assert!(matches!(
                per_axis_speed_count_to_k(bad),
                Err(Error::InvalidClassCount(_))
            ));
        }
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("both".parse::<Axis>().unwrap(), Axis::Both);
        assert_eq!("X".parse::<Axis>().unwrap(), Axis::X);
        assert_eq!("y".parse::<Axis>().unwrap(), Axis::Y);
        assert!("z".parse::<Axis>().is_err());
    }

    proptest! {
        #[test]
        fn pool_invariants(k in 1u32..=8, axis in prop_oneof![Just(Axis::Both), Just(Axis::X), Just(Axis::Y)]) {
            let pool = build_label_pool(k, axis).unwrap();
            let expected = if axis == Axis::Both { 4 * k + 1 } else { 2 * k + 1 };
            prop_assert_eq!(pool.len() as u32, expected);
            prop_assert_eq!(pool.labels().iter().filter(|l| l.is_static()).count(), 1);
            for (i, l) in pool.labels().iter().enumerate() {
                prop_assert!(l.is_valid_for(k));
                prop_assert_eq!(pool.index_of(*l), Some(i));
                prop_assert!(pool.index_of(l.negated()).is_some());
            }
            prop_assert!(pool.labels().windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(&pool, &build_label_pool(k, axis).unwrap());
        }
    }
}
