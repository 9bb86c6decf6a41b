//! Train/test partitions by scene or by receiver.

use rand::seq::SliceRandom;

use super::manifest::{DatasetManifest, ReceiverPartition, Split, SplitInfo, SplitMode};
use crate::rng::stream;
use crate::{Error, Result};

/// Training count for `n` items, rounded to nearest. Both sides must be
/// non-empty.
fn train_count(n: usize, fraction: f64, what: &str) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InfeasibleSplit(format!("train fraction {fraction} must lie strictly between 0 and 1")));
    }
    let k = (n as f64 * fraction).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::InfeasibleSplit(format!("{n} {what} cannot be split {:.0}/{:.0}", fraction * 100.0, (1.0 - fraction) * 100.0)));
    }
    Ok(k)
}

/// Assigns splits in a copy of `manifest`, deterministically from `seed`.
///
/// Scene mode gives every scene one split. Receiver mode keeps every scene
/// in both splits and partitions each scene's receivers.
pub fn split_dataset(manifest: &DatasetManifest, mode: SplitMode, seed: u64) -> Result<DatasetManifest> {
    let mut out = manifest.clone();
    match mode {
        SplitMode::Scene { train_fraction } => {
            let k = train_count(out.scenes.len(), train_fraction, "scenes")?;
            let mut order: Vec<usize> = (0..out.scenes.len()).collect();
            order.shuffle(&mut stream(seed, &["split", "scene"]));
            for (rank, &i) in order.iter().enumerate() {
                let s = &mut out.scenes[i];
                s.split = Some(if rank < k { Split::Train } else { Split::Test });
                s.receiver_split = None;
            }
        }
        SplitMode::Receiver { train_fraction } => {
            for s in &mut out.scenes {
                let k = train_count(s.num_receivers, train_fraction, &format!("receivers of {}", s.id))?;
                let mut order: Vec<usize> = (0..s.num_receivers).collect();
                order.shuffle(&mut stream(seed, &["split", "receiver", &s.id]));
                let (mut train, mut test) = (order[..k].to_vec(), order[k..].to_vec());
                train.sort_unstable();
                test.sort_unstable();
                s.split = None;
                s.receiver_split = Some(ReceiverPartition { train, test });
            }
        }
    }
    out.split = Some(SplitInfo { mode, seed });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::dataset::manifest::SceneRecord;
    use crate::heatmap::TaskMode;

    fn manifest(n: usize, receivers: usize) -> DatasetManifest {
        let mut m = DatasetManifest::new(7, TaskMode::Omni, String::new());
        m.scenes = (0..n)
            .map(|i| SceneRecord {
                id: format!("scene_{i:04}"),
                sources: vec![0],
                num_receivers: receivers,
                split: None,
                receiver_split: None,
                files: BTreeMap::new(),
            })
            .collect();
        m
    }

    #[test]
    fn eighty_twenty_on_ten_scenes() {
        let m = split_dataset(&manifest(10, 5), SplitMode::Scene { train_fraction: 0.8 }, 1).unwrap();
        let train = m.scenes.iter().filter(|s| s.split == Some(Split::Train)).count();
        let test = m.scenes.iter().filter(|s| s.split == Some(Split::Test)).count();
        assert_eq!((train, test), (8, 2));
        let again = split_dataset(&manifest(10, 5), SplitMode::Scene { train_fraction: 0.8 }, 1).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn receiver_mode_partitions_every_scene() {
        for fraction in [0.3, 0.5, 0.9] {
            let m = split_dataset(&manifest(4, 40), SplitMode::Receiver { train_fraction: fraction }, 2).unwrap();
            for s in &m.scenes {
                let p = s.receiver_split.as_ref().unwrap();
                let train: BTreeSet<_> = p.train.iter().collect();
                let test: BTreeSet<_> = p.test.iter().collect();
                assert!(train.is_disjoint(&test));
                assert_eq!(train.len() + test.len(), 40);
                assert!(s.in_split(Split::Train) && s.in_split(Split::Test));
            }
            let p = m.scenes[0].receiver_split.as_ref().unwrap();
            assert_eq!(p.train.len(), (40.0 * fraction).round() as usize);
        }
    }

    #[test]
    fn infeasible_ratios_are_errors() {
        assert!(matches!(
            split_dataset(&manifest(1, 5), SplitMode::Scene { train_fraction: 0.8 }, 0),
            Err(Error::InfeasibleSplit(_))
        ));
        assert!(split_dataset(&manifest(10, 5), SplitMode::Scene { train_fraction: 1.0 }, 0).is_err());
        assert!(split_dataset(&manifest(10, 5), SplitMode::Scene { train_fraction: 0.01 }, 0).is_err());
        assert!(split_dataset(&manifest(3, 1), SplitMode::Receiver { train_fraction: 0.5 }, 0).is_err());
    }
}
