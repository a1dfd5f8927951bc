//! Symmetric distance tables with validated metric invariants.

use serde::{Deserialize, Serialize};

use crate::ground::{Error, GroundSet, Result, TOL};

/// A symmetric nonnegative matrix with zero diagonal, indexed by the
/// labels of a [`GroundSet`]. The triangle inequality is enforced within
/// [`TOL`] at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    ground: GroundSet,
    dist: Vec<f64>,
}

impl MetricTable {
    pub fn new(ground: GroundSet, dist: Vec<f64>) -> Result<Self> {
        let n = ground.len();
        if dist.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        let t = MetricTable { ground, dist };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let n = self.ground.len();
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "nonzero diagonal at {}",
                    self.ground.label(i)
                )));
            }
            for j in 0..n {
                let d = self.get(i, j);
                if d < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "negative distance d({},{})",
                        self.ground.label(i),
                        self.ground.label(j)
                    )));
                }
                if d != self.get(j, i) {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric at ({},{})",
                        self.ground.label(i),
                        self.ground.label(j)
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.get(i, j) > self.get(i, k) + self.get(k, j) + TOL {
                        return Err(Error::InvalidInput(format!(
                            "triangle inequality violated at ({},{},{})",
                            self.ground.label(i),
                            self.ground.label(j),
                            self.ground.label(k)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.ground.len() + j]
    }
}
