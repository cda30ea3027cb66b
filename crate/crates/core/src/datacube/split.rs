use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabelRaster;
use crate::error::{Error, Result};

/// Disjoint train/test pixel indices covering every labeled pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSplit {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub fraction: f64,
    pub seed: u64,
}

/// Number of training samples drawn from a class of `n` labeled pixels.
pub fn class_train_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

pub fn stratified_split(labels: &LabelRaster, fraction: f64, seed: u64) -> Result<SampleSplit> {
    stratified_split_labels(labels.labels(), labels.num_classes(), fraction, seed)
}

/// Per class `c` with `n_c` labeled pixels, `max(1, round(fraction·n_c))`
/// are drawn uniformly without replacement for training and the rest go to
/// test. Both index lists come back sorted.
pub fn stratified_split_labels(
    labels: &[u16],
    num_classes: u16,
    fraction: f64,
    seed: u64,
) -> Result<SampleSplit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} must lie in (0, 1]")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); usize::from(num_classes)];
    for (i, &l) in labels.iter().enumerate() {
        match l {
            0 => {}
            l if l <= num_classes => by_class[usize::from(l) - 1].push(i),
            l => return Err(Error::LabelOutOfRange { label: l, num_classes }),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (c, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            return Err(Error::ClassAbsent {
                class: c as u16 + 1,
                num_classes,
            });
        }
        let k = class_train_count(members.len(), fraction);
        let (picked, rest) = members.partial_shuffle(&mut rng, k);
        train_idx.extend_from_slice(picked);
        test_idx.extend_from_slice(rest);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SampleSplit {
        train_idx,
        test_idx,
        fraction,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_class_keeps_one_training_sample() {
        // max(1, round(0.7)) = 1
        assert_eq!(class_train_count(7, 0.10), 1);
        assert_eq!(class_train_count(4, 0.10), 1);
        assert_eq!(class_train_count(15, 0.10), 2);
        assert_eq!(class_train_count(25, 0.10), 3); // round-half-away
    }

    #[test]
    fn full_fraction_leaves_test_empty() {
        let labels = [0, 1, 1, 2, 2, 2, 0];
        let s = stratified_split_labels(&labels, 2, 1.0, 9).unwrap();
        assert!(s.test_idx.is_empty());
        assert_eq!(s.train_idx, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn class_of_seven_at_ten_percent() {
        let labels = [1u16; 7];
        let s = stratified_split_labels(&labels, 1, 0.10, 0).unwrap();
        assert_eq!(s.train_idx.len(), 1);
        assert_eq!(s.test_idx.len(), 6);
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(stratified_split_labels(&[1], 1, 0.0, 0).is_err());
        assert!(stratified_split_labels(&[1], 1, 1.5, 0).is_err());
    }

    #[test]
    fn empty_class_rejected() {
        assert!(matches!(
            stratified_split_labels(&[1, 1], 2, 0.5, 0),
            Err(Error::ClassAbsent { class: 2, .. })
        ));
    }
}
