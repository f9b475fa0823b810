use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSnapshot;
use crate::error::{Error, Result};

/// Record positions (into `snapshot.records()`) per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Takes `round(len * fraction)` items spread evenly over `seq`.
fn take_every(seq: &[usize], fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut taken = Vec::new();
    let mut rest = Vec::new();
    for (p, &i) in seq.iter().enumerate() {
        let before = (p as f64 * fraction + 0.5).floor();
        let after = ((p + 1) as f64 * fraction + 0.5).floor();
        if after > before {
            taken.push(i);
        } else {
            rest.push(i);
        }
    }
    (taken, rest)
}

/// Stratifies on each record's rarest label (unlabeled records form their
/// own stratum), shuffles within strata, then deals the validation and
/// calibration shares evenly across the concatenated strata.
pub fn stratified_split(
    snapshot: &CorpusSnapshot,
    validation_fraction: f64,
    calibration_fraction: f64,
    seed: u64,
) -> Result<Split> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation_fraction must be in (0, 1), got {validation_fraction}"
        )));
    }
    if !(0.0..1.0).contains(&calibration_fraction) {
        return Err(Error::InvalidArgument(format!(
            "calibration_fraction must be in [0, 1), got {calibration_fraction}"
        )));
    }
    let ann = snapshot.annotations();
    let usage: BTreeMap<&str, usize> = ann
        .schema
        .labels()
        .map(|(_, l)| (l, ann.usage(l)))
        .collect();
    let mut strata: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
    for (i, r) in snapshot.records().iter().enumerate() {
        let key = ann
            .labels_of(&r.id)
            .map(|l| (usage.get(l).copied().unwrap_or(0), l.to_string()))
            .min()
            .unwrap_or((usize::MAX, String::new()));
        strata.entry(key).or_default().push(i);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut seq = Vec::with_capacity(snapshot.len());
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        seq.extend_from_slice(members);
    }
    let (mut validation, rest) = take_every(&seq, validation_fraction);
    if validation.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "validation_fraction {validation_fraction} of {} records selects none",
            snapshot.len()
        )));
    }
    let (mut calibration, mut train) = take_every(&rest, calibration_fraction);
    if train.is_empty() {
        return Err(Error::DegenerateSplit("training split is empty".into()));
    }
    validation.sort_unstable();
    calibration.sort_unstable();
    train.sort_unstable();
    Ok(Split {
        train,
        calibration,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn take_every_counts() {
        let seq: Vec<usize> = (0..100).collect();
        let (a, b) = take_every(&seq, 0.2);
        assert_eq!(a.len(), 20);
        assert_eq!(b.len(), 80);
        let (a, _) = take_every(&seq[..2], 0.2);
        assert!(a.is_empty());
        let (a, _) = take_every(&seq[..3], 0.2);
        assert_eq!(a.len(), 1);
    }
}
