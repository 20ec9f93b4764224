//! Site-structured datasets: synthetic generation, leave-site-out stratified
//! splitting, and CSV ingestion/export.

mod csvio;
mod split;
mod synthetic;

pub use csvio::{load_csv, write_samples_csv, write_split_csv, CsvSchema};
pub use split::{stratified_split, SplitRatios};
pub use synthetic::{generate, generate_samples, SyntheticConfig};

use crate::error::{Error, Result};
use crate::nn::Batch;

/// Unpartitioned samples: the input to [`stratified_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    features: Vec<f32>,
    input_dim: usize,
    labels: Vec<u8>,
    auxiliary: Vec<f32>,
    site_ids: Vec<u32>,
    subject_ids: Vec<u64>,
    task_id: String,
}

impl SampleSet {
    pub fn new(
        features: Vec<f32>,
        input_dim: usize,
        labels: Vec<u8>,
        auxiliary: Vec<f32>,
        site_ids: Vec<u32>,
        subject_ids: Vec<u64>,
        task_id: String,
    ) -> Result<Self> {
        let n = labels.len();
        if site_ids.len() != n || subject_ids.len() != n {
            return Err(Error::Shape(format!(
                "sample set: {} site ids / {} subject ids for {} samples",
                site_ids.len(),
                subject_ids.len(),
                n
            )));
        }
        // Batch's own checks cover features/labels/auxiliary agreement
        Batch::new(features.clone(), input_dim, labels.clone(), auxiliary.clone())?;
        {
            let mut seen = std::collections::BTreeSet::new();
            for &s in &subject_ids {
                if !seen.insert(s) {
                    return Err(Error::Data(format!("duplicate subject id {s}")));
                }
            }
        }
        Ok(Self {
            features,
            input_dim,
            labels,
            auxiliary,
            site_ids,
            subject_ids,
            task_id,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn auxiliary(&self) -> &[f32] {
        &self.auxiliary
    }

    pub fn site_ids(&self) -> &[u32] {
        &self.site_ids
    }

    pub fn subject_ids(&self) -> &[u64] {
        &self.subject_ids
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn feature_row(&self, i: usize) -> &[f32] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// Distinct site ids, ascending.
    pub fn sites(&self) -> Vec<u32> {
        let mut sites: Vec<u32> = self.site_ids.clone();
        sites.sort_unstable();
        sites.dedup();
        sites
    }

    pub(crate) fn take_rows(&self, rows: &[usize]) -> Partition {
        let mut features = Vec::with_capacity(rows.len() * self.input_dim);
        let mut labels = Vec::with_capacity(rows.len());
        let mut auxiliary = Vec::with_capacity(rows.len());
        let mut site_ids = Vec::with_capacity(rows.len());
        let mut subject_ids = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.feature_row(r));
            labels.push(self.labels[r]);
            auxiliary.push(self.auxiliary[r]);
            site_ids.push(self.site_ids[r]);
            subject_ids.push(self.subject_ids[r]);
        }
        let batch = Batch::new(features, self.input_dim, labels, auxiliary)
            .expect("rows of a valid sample set form a valid batch");
        Partition {
            batch,
            site_ids,
            subject_ids,
        }
    }
}

/// One partition of a dataset with per-sample provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub batch: Batch,
    pub site_ids: Vec<u32>,
    pub subject_ids: Vec<u64>,
}

impl Partition {
    /// Distinct site ids, ascending.
    pub fn sites(&self) -> Vec<u32> {
        let mut sites = self.site_ids.clone();
        sites.sort_unstable();
        sites.dedup();
        sites
    }
}

/// Provenance of a split: seeds and per-partition site lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMetadata {
    pub seed: u64,
    pub task_id: String,
    pub train_sites: Vec<u32>,
    pub validation_sites: Vec<u32>,
    pub test_sites: Vec<u32>,
}

/// Train/validation/test partitions with leave-site-out test sites.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Partition,
    pub validation: Partition,
    pub test: Partition,
    pub metadata: SplitMetadata,
}

impl DatasetSplit {
    /// Checks the split's structural invariants: disjoint subjects, test
    /// sites never seen in train/validation, and per-site label proportions
    /// in train/validation within 10 percentage points of the global rate.
    pub fn validate(&self) -> Result<()> {
        let mut subjects = std::collections::BTreeSet::new();
        for p in [&self.train, &self.validation, &self.test] {
            for &s in &p.subject_ids {
                if !subjects.insert(s) {
                    return Err(Error::Data(format!(
                        "subject {s} appears in more than one partition"
                    )));
                }
            }
        }
        let test_sites: std::collections::BTreeSet<u32> =
            self.test.sites().into_iter().collect();
        for p in [&self.train, &self.validation] {
            for s in p.sites() {
                if test_sites.contains(&s) {
                    return Err(Error::Data(format!(
                        "site {s} appears in both test and a training partition"
                    )));
                }
            }
        }

        let total: usize = self.train.batch.len() + self.validation.batch.len() + self.test.batch.len();
        if total == 0 {
            return Err(Error::Data("empty dataset".into()));
        }
        let pos: usize = [&self.train, &self.validation, &self.test]
            .iter()
            .map(|p| p.batch.labels().iter().filter(|&&l| l == 1).count())
            .sum();
        let global = pos as f64 / total as f64;
        for (name, p) in [("train", &self.train), ("validation", &self.validation)] {
            for site in p.sites() {
                let (mut n, mut np) = (0usize, 0usize);
                for (i, &s) in p.site_ids.iter().enumerate() {
                    if s == site {
                        n += 1;
                        np += (p.batch.labels()[i] == 1) as usize;
                    }
                }
                let rate = np as f64 / n as f64;
                if (rate - global).abs() > 0.10 + 1e-9 {
                    return Err(Error::Data(format!(
                        "{name} site {site}: label rate {rate:.3} deviates more than 10pp from global {global:.3}"
                    )));
                }
            }
        }
        Ok(())
    }
}
