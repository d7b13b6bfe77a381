//! The metric on partitioned subprobability measures: isometries with their
//! degrees, the per-isometry cost, an exact small-support oracle for the
//! infimum, a scalable upper bound, and the test-function metric used for
//! cross-validation.

use crate::error::{Error, Result};
use crate::field::{l1_dist, Site};
use crate::pspm::Pspm;

/// A point of some copy of the lattice: (copy label, site).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartPoint {
    pub part: u32,
    pub site: Site,
}

impl PartPoint {
    pub fn new(part: u32, site: Site) -> Self {
        PartPoint { part, site }
    }
}

/// Extended distance on labeled copies: within one copy the l1 distance,
/// across copies infinity.
#[inline]
pub fn point_dist(a: &PartPoint, b: &PartPoint) -> Option<u64> {
    if a.part == b.part {
        Some(l1_dist(&a.site, &b.site))
    } else {
        None
    }
}

/// Degree of an isometry: finite or infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Finite(u64),
    Infinite,
}

impl Degree {
    /// The 2^{-deg} penalty, 0 for infinite degree.
    pub fn penalty(self) -> f64 {
        match self {
            Degree::Infinite => 0.0,
            Degree::Finite(m) => (-(m as f64)).exp2(),
        }
    }
}

/// A finite partial injection of the labeled lattice copies.
#[derive(Clone, Debug, Default)]
pub struct Isometry {
    pairs: Vec<(PartPoint, PartPoint)>,
}

impl Isometry {
    /// Validates injectivity in both directions.
    pub fn new(pairs: Vec<(PartPoint, PartPoint)>) -> Result<Self> {
        let mut dom = std::collections::HashSet::new();
        let mut ran = std::collections::HashSet::new();
        for (u, v) in &pairs {
            if !dom.insert(u.clone()) {
                return Err(Error::InvalidInput(format!("duplicate domain point {u:?}")));
            }
            if !ran.insert(v.clone()) {
                return Err(Error::InvalidInput(format!("duplicate range point {v:?}")));
            }
        }
        Ok(Isometry { pairs })
    }

    pub fn empty() -> Self {
        Isometry { pairs: vec![] }
    }

    pub fn pairs(&self) -> &[(PartPoint, PartPoint)] {
        &self.pairs
    }

    pub fn inverse(&self) -> Isometry {
        Isometry {
            pairs: self.pairs.iter().map(|(u, v)| (v.clone(), u.clone())).collect(),
        }
    }

    /// Composition psi o phi on the domain where it is defined.
    pub fn compose(phi: &Isometry, psi: &Isometry) -> Isometry {
        let mut pairs = Vec::new();
        for (u, v) in &phi.pairs {
            if let Some((_, w)) = psi.pairs.iter().find(|(a, _)| a == v) {
                pairs.push((u.clone(), w.clone()));
            }
        }
        Isometry { pairs }
    }

    /// Maximum degree: the largest m such that differences are preserved
    /// whenever either side is closer than m. Computed as the minimum over
    /// difference-violating pairs of min(|u - v|, |phi(u) - phi(v)|);
    /// infinite when no pair violates (in particular for empty or
    /// single-pair maps).
    pub fn degree(&self) -> Degree {
        let mut best = Degree::Infinite;
        for i in 0..self.pairs.len() {
            for j in (i + 1)..self.pairs.len() {
                let (u1, v1) = &self.pairs[i];
                let (u2, v2) = &self.pairs[j];
                let du = diff(u1, u2);
                let dv = diff(v1, v2);
                if du != dv {
                    let lu = point_dist(u1, u2).unwrap_or(u64::MAX);
                    let lv = point_dist(v1, v2).unwrap_or(u64::MAX);
                    let cap = lu.min(lv);
                    best = match best {
                        Degree::Infinite => Degree::Finite(cap),
                        Degree::Finite(b) => Degree::Finite(b.min(cap)),
                    };
                }
            }
        }
        best
    }
}

/// Difference of two points in the extended group: Some(vector) within one
/// copy, None standing for the point at infinity.
fn diff(a: &PartPoint, b: &PartPoint) -> Option<Vec<i64>> {
    if a.part == b.part {
        Some(a.site.iter().zip(&b.site).map(|(x, y)| x - y).collect())
    } else {
        None
    }
}

/// Per-isometry cost:
/// 2 sum_{u in A} |f(u) - g(phi u)| + sum_{u notin A} f(u)^2
/// + sum_{v notin phi(A)} g(v)^2 + 2^{-deg(phi)}.
pub fn d_phi(f: &Pspm, g: &Pspm, phi: &Isometry) -> f64 {
    let mut cost = phi.degree().penalty();
    let mut f_used: std::collections::HashSet<&PartPoint> = std::collections::HashSet::new();
    let mut g_used: std::collections::HashSet<&PartPoint> = std::collections::HashSet::new();
    for (u, v) in phi.pairs() {
        let fu = mass_at(f, u);
        let gv = mass_at(g, v);
        cost += 2.0 * (fu - gv).abs();
        f_used.insert(u);
        g_used.insert(v);
    }
    for p in f.parts() {
        for (s, m) in p.atoms() {
            let pt = PartPoint::new(p.label(), s.clone());
            if !f_used.contains(&pt) {
                cost += m * m;
            }
        }
    }
    for p in g.parts() {
        for (s, m) in p.atoms() {
            let pt = PartPoint::new(p.label(), s.clone());
            if !g_used.contains(&pt) {
                cost += m * m;
            }
        }
    }
    cost
}

fn mass_at(f: &Pspm, u: &PartPoint) -> f64 {
    for p in f.parts() {
        if p.label() == u.part {
            return p
                .atoms()
                .iter()
                .find(|(s, _)| *s == u.site)
                .map(|(_, m)| *m)
                .unwrap_or(0.0);
        }
    }
    0.0
}

/// Atom cap for the exact oracle.
pub const EXACT_ATOM_LIMIT: usize = 12;

/// Exact distance for small supports: the infimum over all isometries,
/// realized over partial injections between the supports.
///
/// Restricting to support-to-support maps loses nothing: mapping an atom to
/// a zero-mass site costs 2 f(u) >= f(u)^2 and never beats leaving it
/// unmatched, and enlarging the domain beyond the support only adds
/// nonnegative terms while possibly lowering the degree.
pub fn distance_exact(f: &Pspm, g: &Pspm) -> Result<f64> {
    let (na, nb) = (f.atom_count(), g.atom_count());
    if na > EXACT_ATOM_LIMIT || nb > EXACT_ATOM_LIMIT {
        return Err(Error::TooLarge {
            atoms: na.max(nb),
            limit: EXACT_ATOM_LIMIT,
        });
    }
    // A fixed orientation keeps the search bit-for-bit symmetric in (f, g).
    if orientation_key(g) < orientation_key(f) {
        return distance_exact(g, f);
    }
    let fa = sorted_atoms(f);
    let ga = sorted_atoms(g);
    let sum_sq: f64 = fa.iter().map(|(_, m)| m * m).sum::<f64>()
        + ga.iter().map(|(_, m)| m * m).sum::<f64>();
    // Match deltas: including pair (u,w) changes the cost by
    // 2|f(u)-g(w)| - f(u)^2 - g(w)^2 relative to leaving both unmatched.
    // Only strictly negative deltas can help (the degree term never
    // improves when the domain grows), so the search branches over those.
    let n = fa.len();
    let m = ga.len();
    let mut delta = vec![vec![0.0f64; m]; n];
    for i in 0..n {
        for j in 0..m {
            let (fi, gj) = (fa[i].1, ga[j].1);
            delta[i][j] = 2.0 * (fi - gj).abs() - fi * fi - gj * gj;
        }
    }
    let mut search = ExactSearch {
        fa: &fa,
        ga: &ga,
        delta: &delta,
        used: vec![false; m],
        pairs: Vec::with_capacity(n),
        best: sum_sq, // empty isometry: degree infinity, no penalty
        base: sum_sq,
    };
    search.run(0, 0.0, Degree::Infinite);
    Ok(search.best)
}

struct ExactSearch<'a> {
    fa: &'a [(PartPoint, f64)],
    ga: &'a [(PartPoint, f64)],
    delta: &'a [Vec<f64>],
    used: Vec<bool>,
    pairs: Vec<(usize, usize)>,
    best: f64,
    base: f64,
}

impl<'a> ExactSearch<'a> {
    fn run(&mut self, idx: usize, acc: f64, deg: Degree) {
        if idx == self.fa.len() {
            let cost = self.base + acc + deg.penalty();
            if cost < self.best {
                self.best = cost;
            }
            return;
        }
        // lower bound: remaining atoms take their best available delta
        let mut bound = acc;
        for i in idx..self.fa.len() {
            let mut best_d = 0.0f64;
            for (j, d_row) in self.delta[i].iter().enumerate() {
                if !self.used[j] && *d_row < best_d {
                    best_d = *d_row;
                }
            }
            bound += best_d;
        }
        if self.base + bound >= self.best {
            return;
        }
        // branch: match idx to each available atom with negative delta
        for j in 0..self.ga.len() {
            if self.used[j] || self.delta[idx][j] >= 0.0 {
                continue;
            }
            let new_deg = self.degree_with(idx, j, deg);
            self.used[j] = true;
            self.pairs.push((idx, j));
            self.run(idx + 1, acc + self.delta[idx][j], new_deg);
            self.pairs.pop();
            self.used[j] = false;
        }
        // or leave idx unmatched
        self.run(idx + 1, acc, deg);
    }

    fn degree_with(&self, i: usize, j: usize, current: Degree) -> Degree {
        let mut deg = current;
        let u1 = &self.fa[i].0;
        let v1 = &self.ga[j].0;
        for &(pi, pj) in &self.pairs {
            let u2 = &self.fa[pi].0;
            let v2 = &self.ga[pj].0;
            if diff(u1, u2) != diff(v1, v2) {
                let cap = point_dist(u1, u2)
                    .unwrap_or(u64::MAX)
                    .min(point_dist(v1, v2).unwrap_or(u64::MAX));
                deg = match deg {
                    Degree::Infinite => Degree::Finite(cap),
                    Degree::Finite(b) => Degree::Finite(b.min(cap)),
                };
            }
        }
        deg
    }
}

fn sorted_atoms(f: &Pspm) -> Vec<(PartPoint, f64)> {
    let mut atoms: Vec<(PartPoint, f64)> = f
        .indexed_atoms()
        .into_iter()
        .map(|((part, site), m)| (PartPoint::new(part, site), m))
        .collect();
    atoms.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| (a.0.part, &a.0.site).cmp(&(b.0.part, &b.0.site)))
    });
    atoms
}

fn orientation_key(f: &Pspm) -> (usize, Vec<(u64, u32, Site)>) {
    let mut key: Vec<(u64, u32, Site)> = f
        .indexed_atoms()
        .into_iter()
        .map(|((part, site), m)| (m.to_bits(), part, site))
        .collect();
    key.sort();
    (f.atom_count(), key)
}

/// Upper bound on the distance: the best d_phi cost among a family of
/// constructed isometries (empty map, greedy mass matching of the top-k
/// atoms, and per-part translations aligning heavy atoms). Always a valid
/// d_phi value, hence always at least the true distance.
pub fn distance_upper(f: &Pspm, g: &Pspm, k_top: usize) -> f64 {
    assert!(k_top >= 1);
    let fa = {
        let mut a = sorted_atoms(f);
        a.truncate(k_top);
        a
    };
    let ga = {
        let mut a = sorted_atoms(g);
        a.truncate(k_top);
        a
    };
    let mut best = d_phi(f, g, &Isometry::empty());

    // greedy matching by mass: each heavy f-atom takes the available g-atom
    // with the most negative match delta
    {
        let mut used = vec![false; ga.len()];
        let mut pairs = Vec::new();
        for (u, fm) in &fa {
            let mut pick: Option<(usize, f64)> = None;
            for (j, (_, gm)) in ga.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let d = 2.0 * (fm - gm).abs() - fm * fm - gm * gm;
                if d < pick.map_or(0.0, |(_, pd)| pd) {
                    pick = Some((j, d));
                }
            }
            if let Some((j, _)) = pick {
                used[j] = true;
                pairs.push((u.clone(), ga[j].0.clone()));
            }
        }
        best = best.min(d_phi(f, g, &Isometry { pairs }));
    }

    // translation alignment: pair parts by decreasing mass, shift so the
    // anchor atoms coincide, and match every f-atom to the g-atom at the
    // shifted site when one exists
    let mut f_parts: Vec<&crate::pspm::Part> = f.parts().iter().collect();
    let mut g_parts: Vec<&crate::pspm::Part> = g.parts().iter().collect();
    f_parts.sort_by(|a, b| b.mass().total_cmp(&a.mass()));
    g_parts.sort_by(|a, b| b.mass().total_cmp(&a.mass()));
    const ANCHORS: usize = 3;
    for shift_pick in 0..ANCHORS {
        let mut pairs = Vec::new();
        for (pf, pg) in f_parts.iter().zip(&g_parts) {
            let mut af: Vec<(&Site, f64)> = pf.atoms().iter().map(|(s, m)| (s, *m)).collect();
            let mut ag: Vec<(&Site, f64)> = pg.atoms().iter().map(|(s, m)| (s, *m)).collect();
            af.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            ag.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            let anchor_f = af[0].0;
            let anchor_g = ag[shift_pick.min(ag.len() - 1)].0;
            let tau: Vec<i64> = anchor_g.iter().zip(anchor_f).map(|(b, a)| b - a).collect();
            for (s, fm) in af.iter().take(k_top) {
                let target: Site = s.iter().zip(&tau).map(|(a, t)| a + t).collect();
                if let Some((_, gm)) = pg.atoms().iter().find(|(gs, _)| *gs == target) {
                    let dlt = 2.0 * (fm - gm).abs() - fm * fm - gm * gm;
                    if dlt < 0.0 {
                        pairs.push((
                            PartPoint::new(pf.label(), (*s).clone()),
                            PartPoint::new(pg.label(), target),
                        ));
                    }
                }
            }
        }
        best = best.min(d_phi(f, g, &Isometry { pairs }));
    }
    best
}

/// Distance dispatch used by empirical-measure costs: exact when both
/// supports fit the oracle, otherwise the upper bound (flagged).
pub fn distance_auto(f: &Pspm, g: &Pspm, k_top: usize) -> (f64, bool) {
    match distance_exact(f, g) {
        Ok(v) => (v, false),
        Err(_) => (distance_upper(f, g, k_top), true),
    }
}

/// A translation-invariant test function of k points with finite-support
/// profile: W(x1..xk) = w(x2-x1, ..., xk-x1).
#[derive(Clone, Debug)]
pub struct TestKernel {
    /// Number of arguments, k >= 2.
    pub k: usize,
    /// Finite support of w: offset tuples (length k-1) with their values.
    pub offsets: Vec<(Vec<Site>, f64)>,
    /// Series weight of this kernel in the truncated metric.
    pub weight: f64,
}

impl TestKernel {
    pub fn sup_norm(&self) -> f64 {
        self.offsets
            .iter()
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// I(W, f): sum over parts and base points of W times the product of masses.
pub fn test_value(kernel: &TestKernel, f: &Pspm) -> f64 {
    let mut total = 0.0;
    for p in f.parts() {
        for (x1, m1) in p.atoms() {
            'offsets: for (offs, w) in &kernel.offsets {
                let mut prod = m1 * w;
                for off in offs {
                    let target: Site = x1.iter().zip(off).map(|(a, b)| a + b).collect();
                    match p.atoms().iter().find(|(s, _)| *s == target) {
                        Some((_, m)) => prod *= m,
                        None => continue 'offsets,
                    }
                }
                total += prod;
            }
        }
    }
    total
}

/// Truncated test-function metric over a finite kernel library:
/// sum_r weight_r (1 + |W_r|_inf)^{-1} |I(W_r, f) - I(W_r, g)|.
/// A lower bound on the full-series metric.
pub fn distance_d_library(f: &Pspm, g: &Pspm, library: &[TestKernel]) -> f64 {
    assert!(!library.is_empty());
    library
        .iter()
        .map(|kernel| {
            kernel.weight / (1.0 + kernel.sup_norm())
                * (test_value(kernel, f) - test_value(kernel, g)).abs()
        })
        .sum()
}

/// Default library: pair kernels at offsets {0, e1, 2e1} and triple kernels
/// at offset tuples {(0,0), (e1,e1)}, weights 2^{-r} in listed order.
pub fn default_library(d: usize) -> Vec<TestKernel> {
    let e1 = |c: i64| {
        let mut v = vec![0i64; d];
        v[0] = c;
        v
    };
    let mut lib = Vec::new();
    let mut r = 1;
    for c in [0i64, 1, 2] {
        lib.push(TestKernel {
            k: 2,
            offsets: vec![(vec![e1(c)], 1.0)],
            weight: (-(r as f64)).exp2(),
        });
        r += 1;
    }
    for c in [0i64, 1] {
        lib.push(TestKernel {
            k: 3,
            offsets: vec![(vec![e1(c), e1(c)], 1.0)],
            weight: (-(r as f64)).exp2(),
        });
        r += 1;
    }
    lib
}
