//! Sparse mass functions on the integer lattice.
//!
//! A [`SparseField`] is a plain subprobability mass function on one copy of
//! the lattice: the exchange format between the dense endpoint recursion,
//! profile extraction, and the partitioned-measure snapshots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice site coordinates.
pub type Site = Vec<i64>;

/// A sparse nonnegative mass function on one copy of the lattice,
/// with total mass at most 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseField {
    pub d: usize,
    /// Parallel arrays of sites and strictly positive masses.
    pub sites: Vec<Site>,
    pub masses: Vec<f64>,
}

impl SparseField {
    pub fn new(d: usize, sites: Vec<Site>, masses: Vec<f64>) -> Result<Self> {
        if sites.len() != masses.len() {
            return Err(Error::InvalidInput(
                "sites and masses must have equal length".into(),
            ));
        }
        if sites.iter().any(|s| s.len() != d) {
            return Err(Error::InvalidInput(format!(
                "every site must have {d} coordinates"
            )));
        }
        if masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidInput(
                "masses must be strictly positive".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "total mass {total} exceeds 1"
            )));
        }
        Ok(SparseField { d, sites, masses })
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Atoms ordered by decreasing mass, ties broken lexicographically by
    /// site. This is the fixed tie-breaking rule used everywhere order
    /// statistics of atoms are taken.
    pub fn ordered_atoms(&self) -> Vec<(Site, f64)> {
        let mut atoms: Vec<(Site, f64)> = self
            .sites
            .iter()
            .cloned()
            .zip(self.masses.iter().copied())
            .collect();
        atoms.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| a.0.cmp(&b.0))
        });
        atoms
    }

    /// Translates every site by `v`.
    pub fn translate(&self, v: &[i64]) -> SparseField {
        let sites = self
            .sites
            .iter()
            .map(|s| s.iter().zip(v).map(|(a, b)| a + b).collect())
            .collect();
        SparseField {
            d: self.d,
            sites,
            masses: self.masses.clone(),
        }
    }
}

/// l1 norm of the difference of two sites.
#[inline]
pub fn l1_dist(a: &[i64], b: &[i64]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.abs_diff(*y))
        .sum()
}
