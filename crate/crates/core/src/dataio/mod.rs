//! Packet-record ingestion and the 1515-wide feature pipeline.

mod classes;
mod features;
mod record;
mod synth;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use classes::{
    class_counts, group_classes, raw_class_index, undersample, undersample_indices, ClassScheme,
    FULL10_CAP, FULL_COUNTS, GROUPED5_CAP, GROUPED_CLASSES, RAW_CLASSES,
};
pub use features::{
    featurize, featurize_scaled, write_features, FeatureScaling, FeatureVector, DSPORT_OFFSET,
    DSTIP_OFFSET, FEATURE_WIDTH, PAYLOAD_BYTES, PAYLOAD_OFFSET, PROTOCOL_OFFSET, SPORT_OFFSET,
    SRCIP_OFFSET, STTL_OFFSET, TOTAL_LEN_OFFSET,
};
pub use record::{
    load_csv, parse_payload, read_csv, save_csv, write_csv, PacketRecord, Protocol, CSV_HEADER,
};
pub use synth::synthesize_dataset;

use crate::engine::{Dataset, Matrix};
use crate::{Error, Result};

/// Featurizes records into a training matrix labelled under `scheme`.
pub fn to_dataset(
    records: &[PacketRecord],
    scheme: ClassScheme,
    scaling: FeatureScaling,
) -> Result<Dataset<f32>> {
    let labels = scheme.labels_of(records)?;
    let mut data = vec![0.0f32; records.len() * FEATURE_WIDTH];
    for (r, dst) in records.iter().zip(data.chunks_exact_mut(FEATURE_WIDTH)) {
        write_features(r, scaling, dst);
    }
    Dataset::new(
        Matrix::from_vec(records.len(), FEATURE_WIDTH, data)?,
        labels,
        scheme.num_classes(),
    )
}

/// Disjoint train/test partitions of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Dataset<f32>,
    pub test: Dataset<f32>,
    pub fraction: f64,
    pub seed: u64,
}

/// Seeded permutation cut into `round(n·fraction)` train rows and the rest.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (n as f64 * fraction).round() as usize;
    let test = idx.split_off(cut.min(n));
    Ok((idx, test))
}

pub fn split(data: &Dataset<f32>, fraction: f64, seed: u64) -> Result<DatasetSplit> {
    let (train, test) = split_indices(data.len(), fraction, seed)?;
    Ok(DatasetSplit {
        train: data.subset(&train),
        test: data.subset(&test),
        fraction,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_sizes() {
        let (tr, te) = split_indices(10, 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(split_indices(100_000, 0.8, 1).unwrap().0.len(), 80_000);
        assert_eq!(split_indices(10, 0.8, 1).unwrap(), (tr, te));
        assert!(split_indices(10, 1.0, 1).is_err());
        assert!(split_indices(10, 0.0, 1).is_err());
    }

    #[test]
    fn dataset_from_synthetic_records() {
        let recs = synthesize_dataset(4, ClassScheme::Grouped5, 3);
        let ds = to_dataset(&recs, ClassScheme::Grouped5, FeatureScaling::Raw).unwrap();
        assert_eq!(ds.features.shape(), (20, FEATURE_WIDTH));
        assert_eq!(class_counts(&ds.labels, 5), vec![4; 5]);
        let s = split(&ds, 0.8, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (16, 4));
    }

    proptest! {
        #[test]
        fn split_disjoint_exhaustive(n in 0usize..500, f in 0.01f64..0.99, seed: u64) {
            let (tr, te) = split_indices(n, f, seed).unwrap();
            let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!((tr.len() as f64 - n as f64 * f).abs() <= 1.0);
        }
    }
}
