//! Shared helpers for the integration suites.
#![allow(dead_code)]

use std::collections::HashMap;

use polymer_core::disorder::{sample_at, DisorderSpec};
use polymer_core::lattice::{step_endpoint, EndpointField};
use polymer_core::pspm::Pspm;
use polymer_core::rng::SplitMix64;

pub fn gaussian() -> DisorderSpec {
    DisorderSpec::Gaussian {
        mean: 0.0,
        stddev: 1.0,
    }
}

/// Runs the recursion without recording diagnostics.
pub fn bare_trajectory(
    d: usize,
    beta: f64,
    spec: &DisorderSpec,
    n: usize,
    seed: u64,
) -> EndpointField {
    let mut f = EndpointField::initial(d);
    for _ in 0..n {
        f = step_endpoint(&f, spec, beta, seed).unwrap();
    }
    f
}

/// Full endpoint field as a single-part partitioned measure.
pub fn field_to_pspm(f: &EndpointField) -> Pspm {
    let sparse = f.top_atoms(f.diamond().len().max(1));
    Pspm::from_field(&sparse).unwrap()
}

/// Sums over all 2^n one-dimensional paths through the same keyed
/// environment the recursion reads: (log Z_n, endpoint law).
pub fn enumerate_paths_1d(
    spec: &DisorderSpec,
    beta: f64,
    seed: u64,
    n: usize,
) -> (f64, HashMap<i64, f64>) {
    let mut z = 0.0;
    let mut by_endpoint: HashMap<i64, f64> = HashMap::new();
    for mask in 0..(1u32 << n) {
        let mut pos = 0i64;
        let mut energy = 0.0;
        for i in 0..n {
            pos += if mask & (1 << i) != 0 { 1 } else { -1 };
            energy += sample_at(spec, seed, 0, (i + 1) as i64, &[pos]);
        }
        let w = (beta * energy).exp();
        z += w;
        *by_endpoint.entry(pos).or_insert(0.0) += w;
    }
    let log_z = (z / (1u64 << n) as f64).ln();
    for v in by_endpoint.values_mut() {
        *v /= z;
    }
    (log_z, by_endpoint)
}

/// Random partitioned measure with at most `max_atoms` atoms in total
/// across at most `max_parts` parts, one-dimensional sites.
pub fn random_pspm(rng: &mut SplitMix64, max_parts: usize, max_atoms: usize) -> Pspm {
    let n_parts = 1 + rng.next_below(max_parts as u64) as usize;
    let n_atoms = 1 + rng.next_below(max_atoms as u64) as usize;
    let mut parts: Vec<Vec<(Vec<i64>, f64)>> = vec![Vec::new(); n_parts];
    for i in 0..n_atoms {
        let site = vec![rng.next_below(25) as i64 - 12];
        let slot = &mut parts[i % n_parts];
        if !slot.iter().any(|(s, _)| *s == site) {
            slot.push((site, 0.05 + 0.45 * rng.next_f64()));
        }
    }
    let total: f64 = parts.iter().flatten().map(|(_, m)| m).sum();
    let scale = (0.2 + 0.79 * rng.next_f64()) / total;
    let raw: Vec<(u32, Vec<(Vec<i64>, f64)>)> = parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(l, atoms)| {
            (
                l as u32,
                atoms.into_iter().map(|(s, m)| (s, m * scale)).collect(),
            )
        })
        .collect();
    Pspm::new(1, raw).unwrap()
}

/// Applies a random translation to every part and reverses labels: an
/// equivalent element of the quotient space.
pub fn equivalent_variant(rng: &mut SplitMix64, f: &Pspm) -> Pspm {
    let mut g = f.clone();
    for i in 0..g.parts().len() {
        let shift = rng.next_below(61) as i64 - 30;
        g = g.translate_part(i, &[shift]);
    }
    let labels: Vec<u32> = (0..g.parts().len() as u32).map(|l| 1000 - l).collect();
    g.with_labels(&labels).unwrap()
}
