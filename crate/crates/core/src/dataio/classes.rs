use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::record::PacketRecord;
use crate::{Error, Result};

/// The ten raw attack labels, in table order.
pub const RAW_CLASSES: [&str; 10] = [
    "Benign",
    "DNS Flood",
    "Dictionary Attack",
    "Slowloris",
    "SYN Flood",
    "Port Scan",
    "Vulnerability Scan",
    "OS Scan",
    "UDP Flood",
    "ICMP Flood",
];

/// Labels after merging floods into `DNS Flood` and scans into `Port Scan`.
pub const GROUPED_CLASSES: [&str; 5] = [
    "Benign",
    "DNS Flood",
    "Dictionary Attack",
    "Slowloris",
    "Port Scan",
];

/// Raw full-corpus class counts in [`RAW_CLASSES`] order.
pub const FULL_COUNTS: [usize; 10] = [601_868, 18_577, 4_645, 2_974, 2_113, 582, 445, 156, 68, 58];

/// Per-class undersampling cap of the ten-class dataset.
pub const FULL10_CAP: usize = 5_800;
/// Per-class undersampling cap of the grouped dataset.
pub const GROUPED5_CAP: usize = 11_830;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ClassScheme {
    #[default]
    Full10,
    Grouped5,
}

fn normalize(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Index into [`RAW_CLASSES`] of a raw label, tolerant of case and separators.
pub fn raw_class_index(label: &str) -> Option<usize> {
    let n = normalize(label);
    RAW_CLASSES.iter().position(|c| normalize(c) == n)
}

/// Grouped class of each raw class.
const GROUP_OF: [usize; 10] = [0, 1, 2, 3, 1, 4, 4, 4, 1, 1];

impl ClassScheme {
    pub fn num_classes(self) -> usize {
        self.names().len()
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            ClassScheme::Full10 => &RAW_CLASSES,
            ClassScheme::Grouped5 => &GROUPED_CLASSES,
        }
    }

    /// Class index of a label. Grouped schemes accept raw member labels too.
    pub fn index_of(self, label: &str) -> Option<usize> {
        let raw = raw_class_index(label)?;
        Some(match self {
            ClassScheme::Full10 => raw,
            ClassScheme::Grouped5 => GROUP_OF[raw],
        })
    }

    /// The undersampling caps used for this scheme.
    pub fn table_caps(self) -> Vec<usize> {
        match self {
            ClassScheme::Full10 => vec![FULL10_CAP; 10],
            ClassScheme::Grouped5 => vec![GROUPED5_CAP; 5],
        }
    }

    pub fn labels_of(self, records: &[PacketRecord]) -> Result<Vec<usize>> {
        records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                self.index_of(&r.label).ok_or_else(|| Error::Record {
                    row: i + 1,
                    reason: format!("unknown label `{}`", r.label),
                })
            })
            .collect()
    }
}

impl FromStr for ClassScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full10" => Ok(Self::Full10),
            "grouped5" => Ok(Self::Grouped5),
            _ => Err(format!("expected full10|grouped5, got `{s}`")),
        }
    }
}

impl fmt::Display for ClassScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Full10 => "full10",
            Self::Grouped5 => "grouped5",
        })
    }
}

/// Relabels floods as `DNS Flood` and scans as `Port Scan`.
pub fn group_classes(records: &[PacketRecord]) -> Result<Vec<PacketRecord>> {
    let labels = ClassScheme::Grouped5.labels_of(records)?;
    Ok(records
        .iter()
        .zip(labels)
        .map(|(r, l)| PacketRecord {
            label: GROUPED_CLASSES[l].to_string(),
            ..r.clone()
        })
        .collect())
}

/// Indices (ascending) kept after capping every class at `caps[class]`.
pub fn undersample_indices(labels: &[usize], caps: &[usize], seed: u64) -> Result<Vec<usize>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); caps.len()];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or(Error::LabelOutOfRange {
                label: l,
                classes: caps.len(),
            })?
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(labels.len());
    for (members, &cap) in by_class.iter().zip(caps) {
        if members.len() <= cap {
            keep.extend_from_slice(members);
        } else {
            keep.extend(sample(&mut rng, members.len(), cap).iter().map(|k| members[k]));
        }
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Randomly subsamples every class above its cap, keeping record order.
pub fn undersample(
    records: &[PacketRecord],
    scheme: ClassScheme,
    caps: &[usize],
    seed: u64,
) -> Result<Vec<PacketRecord>> {
    if caps.len() != scheme.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "{} caps for {} classes",
            caps.len(),
            scheme.num_classes()
        )));
    }
    let labels = scheme.labels_of(records)?;
    Ok(undersample_indices(&labels, caps, seed)?
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}

/// Row count per class.
pub fn class_counts(labels: &[usize], num_classes: usize) -> Vec<usize> {
    let mut c = vec![0; num_classes];
    for &l in labels {
        c[l] += 1;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full_labels() -> Vec<usize> {
        FULL_COUNTS
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect()
    }

    #[test]
    fn full10_caps() {
        let labels = full_labels();
        let keep = undersample_indices(&labels, &ClassScheme::Full10.table_caps(), 1).unwrap();
        let kept: Vec<usize> = keep.iter().map(|&i| labels[i]).collect();
        assert_eq!(
            class_counts(&kept, 10),
            vec![5_800, 5_800, 4_645, 2_974, 2_113, 582, 445, 156, 68, 58]
        );
    }

    #[test]
    fn grouped_counts_and_caps() {
        let grouped: Vec<usize> = full_labels().iter().map(|&l| GROUP_OF[l]).collect();
        let counts = class_counts(&grouped, 5);
        assert_eq!(counts, vec![601_868, 20_816, 4_645, 2_974, 1_183]);
        let keep = undersample_indices(&grouped, &ClassScheme::Grouped5.table_caps(), 2).unwrap();
        let kept: Vec<usize> = keep.iter().map(|&i| grouped[i]).collect();
        assert_eq!(class_counts(&kept, 5), vec![11_830, 11_830, 4_645, 2_974, 1_183]);
    }

    #[test]
    fn group_records_relabels() {
        let r = |label: &str| PacketRecord {
            srcip: [0, 0, 0, 0].into(),
            sport: 0,
            dstip: [0, 0, 0, 0].into(),
            dsport: 0,
            protocol: super::super::Protocol::Tcp,
            sttl: 0,
            total_len: 0,
            payload: vec![],
            label: label.into(),
        };
        let g = group_classes(&[r("SYN Flood"), r("os_scan"), r("Benign"), r("ICMP Flood")]).unwrap();
        let names: Vec<&str> = g.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(names, vec!["DNS Flood", "Port Scan", "Benign", "DNS Flood"]);
        assert!(group_classes(&[r("Mystery")]).is_err());
    }

    #[test]
    fn cap_above_size_unchanged() {
        let labels = vec![0, 0, 1];
        assert_eq!(undersample_indices(&labels, &[10, 10], 0).unwrap(), vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn undersample_never_grows(labels in proptest::collection::vec(0usize..4, 0..300),
                                   caps in proptest::collection::vec(0usize..80, 4), seed: u64) {
            let keep = undersample_indices(&labels, &caps, seed).unwrap();
            let before = class_counts(&labels, 4);
            let after = class_counts(&keep.iter().map(|&i| labels[i]).collect::<Vec<_>>(), 4);
            for c in 0..4 {
                prop_assert!(after[c] <= before[c]);
                prop_assert_eq!(after[c], before[c].min(caps[c]));
            }
            prop_assert_eq!(&keep, &undersample_indices(&labels, &caps, seed).unwrap());
        }

        #[test]
        fn group_then_count_equals_count_then_sum(labels in proptest::collection::vec(0usize..10, 0..400)) {
            let raw = class_counts(&labels, 10);
            let grouped = class_counts(&labels.iter().map(|&l| GROUP_OF[l]).collect::<Vec<_>>(), 5);
            let mut summed = vec![0; 5];
            for (c, n) in raw.iter().enumerate() {
                summed[GROUP_OF[c]] += n;
            }
            prop_assert_eq!(grouped, summed);
        }
    }
}
