//! Empirical measures of endpoint snapshots, assignment-based Wasserstein
//! distance between them, and the fixed-point residual of the update map.

use rayon::prelude::*;

use crate::assignment;
use crate::disorder::DisorderSpec;
use crate::dynamics::update_sample;
use crate::error::{Error, Result};
use crate::lattice::TrajectoryRecord;
use crate::metric::distance_auto;
use crate::profiles::extract_snapshot;
use crate::pspm::Pspm;
use crate::rng::split_seed;

/// Provenance of an empirical measure.
#[derive(Clone, Debug)]
pub struct EmpiricalMeta {
    pub source: String,
    pub stride: usize,
    pub k_top: usize,
    /// Whether snapshot truncation may have dropped atoms.
    pub truncated: bool,
}

/// A uniform-weight finite collection of partitioned measures.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<Pspm>,
    pub meta: EmpiricalMeta,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Pspm>, meta: EmpiricalMeta) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput(
                "empirical measure needs at least one atom".into(),
            ));
        }
        let d = atoms[0].d();
        if atoms.iter().any(|a| a.d() != d) {
            return Err(Error::InvalidInput("mixed dimensions".into()));
        }
        Ok(EmpiricalMeasure { atoms, meta })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Default clustering radius when turning snapshots into partitioned
/// measures.
pub const DEFAULT_SNAPSHOT_RADIUS: u64 = 32;

/// Builds the empirical measure of a trajectory's stored snapshots taken at
/// the given stride, each converted through the snapshot extractor with at
/// most `k_top` atoms.
pub fn build_empirical(
    traj: &TrajectoryRecord,
    k_top: usize,
    stride: usize,
    cluster_radius: u64,
    mass_floor: f64,
) -> Result<EmpiricalMeasure> {
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be positive".into()));
    }
    let snaps = traj.snapshots();
    if snaps.is_empty() {
        return Err(Error::NoSnapshots);
    }
    let mut atoms = Vec::new();
    let mut truncated = false;
    for (step, field) in snaps {
        if step % stride != 0 {
            continue;
        }
        truncated |= field.len() >= k_top;
        atoms.push(extract_snapshot(field, k_top, cluster_radius, mass_floor)?);
    }
    if atoms.is_empty() {
        return Err(Error::NoSnapshots);
    }
    EmpiricalMeasure::new(
        atoms,
        EmpiricalMeta {
            source: format!("trajectory seed {} beta {}", traj.seed, traj.beta),
            stride,
            k_top,
            truncated,
        },
    )
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Exact Wasserstein distance between two uniform empirical measures via
/// optimal assignment on the pairwise-distance matrix. Unequal atom counts
/// are equalized by cyclic repetition to the least common multiple.
///
/// Returns (value, flagged): `flagged` is set when any matrix entry came
/// from the scalable upper bound rather than the exact oracle, making the
/// value an upper bound on the true distance.
pub fn wasserstein(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, k_top: usize) -> (f64, bool) {
    let m = lcm(mu.len(), nu.len());
    let a: Vec<&Pspm> = (0..m).map(|i| &mu.atoms[i % mu.len()]).collect();
    let b: Vec<&Pspm> = (0..m).map(|i| &nu.atoms[i % nu.len()]).collect();
    let entries: Vec<(f64, bool)> = (0..m * m)
        .into_par_iter()
        .map(|idx| distance_auto(a[idx / m], b[idx % m], k_top))
        .collect();
    let flagged = entries.iter().any(|(_, f)| *f);
    let cost: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| entries[i * m + j].0).collect())
        .collect();
    let (total, _) = assignment::solve(&cost);
    (total / m as f64, flagged)
}

/// One probe of the fixed-point residual series.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ResidualPoint {
    pub n: usize,
    pub residual: f64,
    pub flagged_upper: bool,
    pub seed: u64,
}

/// Residual distance between the shifted empirical measure of snapshots
/// {f_1..f_{n+1}} and one-sample updates of {f_0..f_n}, probed at the given
/// n values. The trajectory must store snapshots at stride 1 covering every
/// probe plus one.
pub fn fixed_point_residual(
    traj: &TrajectoryRecord,
    spec: &DisorderSpec,
    beta: f64,
    seed: u64,
    probes: &[usize],
    k_top: usize,
    cluster_radius: u64,
    mass_floor: f64,
) -> Result<Vec<ResidualPoint>> {
    let max_probe = *probes
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidInput("need at least one probe".into()))?;
    let snaps = traj.snapshots();
    if snaps.is_empty() {
        return Err(Error::NoSnapshots);
    }
    // require contiguous snapshots 0..=max_probe+1
    let by_step: std::collections::HashMap<usize, &crate::field::SparseField> =
        snaps.iter().map(|(s, f)| (*s, *f)).collect();
    for i in 0..=max_probe + 1 {
        if !by_step.contains_key(&i) {
            return Err(Error::InvalidInput(format!(
                "fixed-point residual needs snapshots at stride 1; step {i} missing"
            )));
        }
    }
    let measures: Vec<Pspm> = (0..=max_probe + 1)
        .map(|i| extract_snapshot(by_step[&i], k_top, cluster_radius, mass_floor))
        .collect::<Result<_>>()?;
    // one update draw per step, reused across probes
    let updated: Vec<Pspm> = (0..=max_probe)
        .into_par_iter()
        .map(|i| update_sample(&measures[i], spec, beta, split_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(probes.len());
    for &n in probes {
        let mu_prime = EmpiricalMeasure::new(
            measures[1..=n + 1].to_vec(),
            EmpiricalMeta {
                source: "shifted empirical".into(),
                stride: 1,
                k_top,
                truncated: true,
            },
        )?;
        let t_mu = EmpiricalMeasure::new(
            updated[..=n].to_vec(),
            EmpiricalMeta {
                source: "one-sample update".into(),
                stride: 1,
                k_top,
                truncated: true,
            },
        )?;
        let (residual, flagged_upper) = wasserstein(&mu_prime, &t_mu, k_top);
        out.push(ResidualPoint {
            n,
            residual,
            flagged_upper,
            seed,
        });
    }
    Ok(out)
}
