//! Ground sets, finite subsets, and diversity values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for all real comparisons in the crate.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("member index {0} out of range for ground of size {1}")]
    IndexOutOfRange(usize, usize),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// An ordered list of distinct point identifiers. The order is the
/// canonical sort of the labels, so two ground sets with the same labels
/// compare equal element-for-element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    labels: Vec<String>,
}

impl GroundSet {
    pub fn new(mut labels: Vec<String>) -> Result<Self> {
        labels.sort();
        for w in labels.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidInput(format!("duplicate label `{}`", w[0])));
            }
        }
        Ok(GroundSet { labels })
    }

    /// Ground set with zero-padded labels `p000`, `p001`, ... whose sort
    /// order matches the index order.
    pub fn indexed(n: usize, prefix: &str) -> Self {
        let width = n.max(1).to_string().len();
        let labels = (0..n)
            .map(|i| format!("{prefix}{i:0width$}"))
            .collect();
        GroundSet { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .map_err(|_| Error::UnknownLabel(label.to_string()))
    }
}

/// A sorted, duplicate-free list of indices into an ambient [`GroundSet`].
/// Set equality is list equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FiniteSubset {
    members: Vec<usize>,
}

impl FiniteSubset {
    pub fn empty() -> Self {
        FiniteSubset { members: vec![] }
    }

    pub fn new(ground: &GroundSet, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&m) = members.last() {
            if m >= ground.len() {
                return Err(Error::IndexOutOfRange(m, ground.len()));
            }
        }
        Ok(FiniteSubset { members })
    }

    pub fn from_labels(ground: &GroundSet, labels: &[&str]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| ground.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ground, idx)
    }

    /// Subset from a bitmask over the first 32 ground elements.
    pub fn from_mask(ground: &GroundSet, mask: u32) -> Result<Self> {
        let members = (0..32).filter(|i| mask >> i & 1 == 1).collect();
        Self::new(ground, members)
    }

    pub fn mask(&self) -> u32 {
        self.members.iter().fold(0u32, |m, &i| m | 1 << i)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &FiniteSubset) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }

    pub fn union(&self, other: &FiniteSubset) -> FiniteSubset {
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        members.sort_unstable();
        members.dedup();
        FiniteSubset { members }
    }

    pub fn label_vec(&self, ground: &GroundSet) -> Vec<String> {
        self.members.iter().map(|&i| ground.label(i).to_string()).collect()
    }
}

/// A certified interval `[lb, ub]` around a diversity value. Exact values
/// have `lb == ub`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityValue {
    pub lb: f64,
    pub ub: f64,
}

impl DiversityValue {
    pub fn exact(v: f64) -> Self {
        debug_assert!(v >= 0.0);
        DiversityValue { lb: v, ub: v }
    }

    pub fn interval(lb: f64, ub: f64) -> Result<Self> {
        if !(0.0 <= lb && lb <= ub) {
            return Err(Error::InvalidInput(format!(
                "invalid diversity interval [{lb}, {ub}]"
            )));
        }
        Ok(DiversityValue { lb, ub })
    }

    pub fn is_exact(&self) -> bool {
        self.lb == self.ub
    }

    /// Exact value, if the interval is a point.
    pub fn value(&self) -> Option<f64> {
        self.is_exact().then_some(self.lb)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lb + self.ub)
    }
}
