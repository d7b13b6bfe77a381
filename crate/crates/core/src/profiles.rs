//! Constructive concentration compactness at finite scale: decompose a
//! sequence of mass functions into finitely many translating clusters plus
//! a vanishing remainder, and turn single snapshots into partitioned
//! measures by greedy clustering.
//!
//! The sequence extractor mirrors the compactness construction: order
//! statistics of atoms, pairwise position differences classified as
//! stabilized or diverging, greedy reference atoms, one part per cluster.
//! "Stabilized over a trailing window" stands in for convergence of the
//! differences, and "distance at least the threshold at the end" stands in
//! for divergence.

use crate::error::{Error, Result};
use crate::field::{l1_dist, Site, SparseField};
use crate::pspm::Pspm;

/// Tuning of the finite-scale extraction.
#[derive(Clone, Debug)]
pub struct ProfileParams {
    /// Number of order-statistic atoms tracked.
    pub k_max: usize,
    /// Trailing steps over which pairwise differences must be constant.
    pub stabilization_window: usize,
    /// Pairwise l1 distance beyond which atoms are declared separating.
    pub divergence_threshold: f64,
    /// Atoms below this mass are dropped from the output.
    pub mass_floor: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            k_max: 16,
            stabilization_window: 3,
            divergence_threshold: 32.0,
            mass_floor: 1e-4,
        }
    }
}

impl ProfileParams {
    fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::InvalidInput("k_max must be at least 1".into()));
        }
        if self.stabilization_window < 2 {
            return Err(Error::InvalidInput(
                "stabilization_window must be at least 2".into(),
            ));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::InvalidInput(
                "divergence_threshold must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.mass_floor) {
            return Err(Error::InvalidInput("mass_floor must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// Result of the sequence extraction: the limit candidate plus the pairs
/// that neither stabilized nor exceeded the divergence threshold (each such
/// pair was treated as diverging).
#[derive(Clone, Debug)]
pub struct ProfileExtraction {
    pub pspm: Pspm,
    /// Unclassified order-statistic index pairs (1-based).
    pub unclassified: Vec<(usize, usize)>,
}

/// Extracts the profile decomposition from a sequence of subprobability
/// mass functions on the lattice.
pub fn extract_sequence(seq: &[SparseField], params: &ProfileParams) -> Result<ProfileExtraction> {
    params.validate()?;
    if seq.len() < params.stabilization_window {
        return Err(Error::InvalidInput(format!(
            "sequence length {} is shorter than the stabilization window {}",
            seq.len(),
            params.stabilization_window
        )));
    }
    let d = seq[0].d;
    if seq.iter().any(|f| f.d != d) {
        return Err(Error::InvalidInput("mixed dimensions in sequence".into()));
    }
    let window = &seq[seq.len() - params.stabilization_window..];
    let ordered: Vec<Vec<(Site, f64)>> = window.iter().map(|f| f.ordered_atoms()).collect();
    // track only order statistics present in every window element
    let k_eff = ordered
        .iter()
        .map(|a| a.len())
        .min()
        .unwrap()
        .min(params.k_max);
    if k_eff == 0 {
        return Ok(ProfileExtraction {
            pspm: Pspm::zero(d),
            unclassified: vec![],
        });
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Pair {
        Stabilized,
        Diverging,
        Unclassified,
    }
    let classify = |k: usize, l: usize| -> (Pair, Option<Vec<i64>>) {
        let diff_at = |n: usize| -> Vec<i64> {
            ordered[n][k]
                .0
                .iter()
                .zip(&ordered[n][l].0)
                .map(|(a, b)| a - b)
                .collect()
        };
        let last = diff_at(ordered.len() - 1);
        let stable = (0..ordered.len() - 1).all(|n| diff_at(n) == last);
        if stable {
            (Pair::Stabilized, Some(last))
        } else if last.iter().map(|c| c.unsigned_abs()).sum::<u64>() as f64
            >= params.divergence_threshold
        {
            (Pair::Diverging, None)
        } else {
            (Pair::Unclassified, None)
        }
    };

    // greedy reference atoms: each new tracked atom joins the first
    // reference it stabilizes against, else opens a new cluster
    let mut refs: Vec<usize> = Vec::new();
    let mut cluster_of = vec![0usize; k_eff];
    let mut offset_of: Vec<Vec<i64>> = vec![vec![]; k_eff];
    let mut unclassified = Vec::new();
    for k in 0..k_eff {
        let mut assigned = false;
        for (r, &l) in refs.iter().enumerate() {
            let (class, off) = classify(k, l);
            match class {
                Pair::Stabilized => {
                    cluster_of[k] = r;
                    offset_of[k] = off.unwrap();
                    assigned = true;
                    break;
                }
                Pair::Unclassified => {
                    unclassified.push((k + 1, l + 1));
                }
                Pair::Diverging => {}
            }
        }
        if !assigned {
            refs.push(k);
            cluster_of[k] = refs.len() - 1;
            offset_of[k] = vec![0; d];
        }
    }

    // masses: trailing-window averages of the order-statistic values
    let mut parts: Vec<Vec<(Site, f64)>> = vec![Vec::new(); refs.len()];
    for k in 0..k_eff {
        let mass: f64 =
            ordered.iter().map(|a| a[k].1).sum::<f64>() / ordered.len() as f64;
        if mass >= params.mass_floor {
            parts[cluster_of[k]].push((offset_of[k].clone(), mass));
        }
    }
    let raw: Vec<(u32, Vec<(Site, f64)>)> = parts
        .into_iter()
        .filter(|atoms| !atoms.is_empty())
        .enumerate()
        .map(|(i, atoms)| (i as u32, atoms))
        .collect();
    Ok(ProfileExtraction {
        pspm: Pspm::new(d, raw)?,
        unclassified,
    })
}

/// Single-snapshot heuristic: keep the top `k_max` atoms, drop those below
/// `floor`, and cluster greedily by l1 distance to cluster seeds (heaviest
/// atom first); one part per cluster, positions relative to the seed.
pub fn extract_snapshot(f: &SparseField, k_max: usize, radius: u64, floor: f64) -> Result<Pspm> {
    let mut atoms = f.ordered_atoms();
    atoms.truncate(k_max);
    atoms.retain(|(_, m)| *m >= floor);
    if atoms.is_empty() {
        return Ok(Pspm::zero(f.d));
    }
    let mut seeds: Vec<Site> = Vec::new();
    let mut clusters: Vec<Vec<(Site, f64)>> = Vec::new();
    for (site, mass) in atoms {
        match seeds.iter().position(|s| l1_dist(s, &site) <= radius) {
            Some(i) => {
                let rel: Site = site.iter().zip(&seeds[i]).map(|(a, b)| a - b).collect();
                clusters[i].push((rel, mass));
            }
            None => {
                seeds.push(site.clone());
                clusters.push(vec![(vec![0; f.d], mass)]);
            }
        }
    }
    Pspm::new(
        f.d,
        clusters
            .into_iter()
            .enumerate()
            .map(|(i, atoms)| (i as u32, atoms))
            .collect(),
    )
}

/// The staircase-with-escaping-peak family used as a worked example:
/// mass 1/2 at n, mass 1/(2n) on [0, n).
pub fn qn_field(n: i64) -> SparseField {
    let mut sites = vec![vec![n]];
    let mut masses = vec![0.5];
    for x in 0..n {
        sites.push(vec![x]);
        masses.push(0.5 / n as f64);
    }
    SparseField { d: 1, sites, masses }
}

/// The three-blob family: mass 1/5 at each of -2n, -n, n, n+1, and
/// mass 1/(5n) on [0, n).
pub fn rn_field(n: i64) -> SparseField {
    let mut sites = vec![vec![-2 * n], vec![-n], vec![n], vec![n + 1]];
    let mut masses = vec![0.2, 0.2, 0.2, 0.2];
    for x in 0..n {
        sites.push(vec![x]);
        masses.push(0.2 / n as f64);
    }
    SparseField { d: 1, sites, masses }
}
