//! Partitioned subprobability measures: finite lists of sparse nonnegative
//! mass functions on copies of the lattice, with total mass at most 1,
//! considered up to per-copy translation and copy relabeling.
//!
//! The canonical form picks one representative per equivalence class; all
//! functionals here factor through the quotient.

use crate::error::{Error, Result};
use crate::field::{l1_dist, Site, SparseField};

/// One part: a labeled sparse mass function on its own copy of the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    label: u32,
    /// Atoms sorted by site, all masses strictly positive.
    atoms: Vec<(Site, f64)>,
}

impl Part {
    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn atoms(&self) -> &[(Site, f64)] {
        &self.atoms
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m).sum()
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| *m).fold(0.0, f64::max)
    }
}

/// A partitioned subprobability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Pspm {
    d: usize,
    parts: Vec<Part>,
}

/// Canonical equivalence-class representative: parts translated so the
/// lexicographically least maximal atom of each sits at the origin, parts
/// sorted by (descending mass, descending atom-mass multiset, lexicographic
/// shape), labels renumbered in that order. Two measures are equivalent in
/// the quotient space iff their canonical forms are identical.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalPspm(pub Pspm);

const MASS_SLACK: f64 = 1e-12;

/// Exact search limit for the diameter functional; larger parts fall back to
/// a greedy upper bound and set the `approximate` flag.
pub const W_DELTA_EXACT_LIMIT: usize = 64;

impl Pspm {
    /// Builds a measure from labeled atom lists, validating all invariants.
    pub fn new(d: usize, raw_parts: Vec<(u32, Vec<(Site, f64)>)>) -> Result<Self> {
        let mut parts = Vec::with_capacity(raw_parts.len());
        let mut labels = std::collections::HashSet::new();
        for (label, mut atoms) in raw_parts {
            if !labels.insert(label) {
                return Err(Error::InvalidInput(format!("duplicate part label {label}")));
            }
            if atoms.is_empty() {
                return Err(Error::InvalidInput(format!("part {label} is empty")));
            }
            for (site, mass) in &atoms {
                if site.len() != d {
                    return Err(Error::InvalidInput(format!(
                        "site {site:?} does not have {d} coordinates"
                    )));
                }
                if !(*mass > 0.0) || !mass.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "atom mass {mass} must be strictly positive and finite"
                    )));
                }
            }
            atoms.sort_by(|a, b| a.0.cmp(&b.0));
            if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInput(format!(
                    "part {label} has duplicate sites"
                )));
            }
            parts.push(Part { label, atoms });
        }
        let pspm = Pspm { d, parts };
        let total = pspm.total_mass();
        if total > 1.0 + MASS_SLACK {
            return Err(Error::InvalidInput(format!(
                "total mass {total} exceeds 1"
            )));
        }
        Ok(pspm)
    }

    /// The element with empty part list (total mass zero).
    pub fn zero(d: usize) -> Self {
        Pspm { d, parts: vec![] }
    }

    /// The element whose representatives are single unit atoms.
    pub fn one(d: usize) -> Self {
        Pspm {
            d,
            parts: vec![Part {
                label: 0,
                atoms: vec![(vec![0; d], 1.0)],
            }],
        }
    }

    /// Embeds a mass function on one lattice copy as a single-part measure.
    pub fn from_field(field: &SparseField) -> Result<Self> {
        if field.is_empty() {
            return Ok(Pspm::zero(field.d));
        }
        let atoms = field
            .sites
            .iter()
            .cloned()
            .zip(field.masses.iter().copied())
            .collect();
        Pspm::new(field.d, vec![(0, atoms)])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.parts.iter().map(|p| p.mass()).sum()
    }

    pub fn max_atom(&self) -> f64 {
        self.parts.iter().map(|p| p.max_atom()).fold(0.0, f64::max)
    }

    pub fn atom_count(&self) -> usize {
        self.parts.iter().map(|p| p.atoms.len()).sum()
    }

    /// All atoms as ((part label, site), mass).
    pub fn indexed_atoms(&self) -> Vec<((u32, Site), f64)> {
        let mut out = Vec::with_capacity(self.atom_count());
        for p in &self.parts {
            for (s, m) in &p.atoms {
                out.push(((p.label, s.clone()), *m));
            }
        }
        out
    }

    /// Pointwise scaling by alpha in [0, 1].
    pub fn scale(&self, alpha: f64) -> Pspm {
        assert!((0.0..=1.0).contains(&alpha));
        if alpha == 0.0 {
            return Pspm::zero(self.d);
        }
        let parts = self
            .parts
            .iter()
            .map(|p| Part {
                label: p.label,
                atoms: p.atoms.iter().map(|(s, m)| (s.clone(), alpha * m)).collect(),
            })
            .collect();
        Pspm { d: self.d, parts }
    }

    /// Translates one part by `v`; the result is equivalent in the quotient.
    pub fn translate_part(&self, part_index: usize, v: &[i64]) -> Pspm {
        let mut out = self.clone();
        let part = &mut out.parts[part_index];
        for (s, _) in &mut part.atoms {
            for (c, dv) in s.iter_mut().zip(v) {
                *c += dv;
            }
        }
        part.atoms.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Renames part labels; the result is equivalent in the quotient.
    pub fn with_labels(&self, labels: &[u32]) -> Result<Pspm> {
        if labels.len() != self.parts.len() {
            return Err(Error::InvalidInput("label count mismatch".into()));
        }
        Pspm::new(
            self.d,
            self.parts
                .iter()
                .zip(labels)
                .map(|(p, l)| (*l, p.atoms.clone()))
                .collect(),
        )
    }

    /// Canonical representative of the equivalence class.
    pub fn canonicalize(&self) -> CanonicalPspm {
        let mut shifted: Vec<Part> = self
            .parts
            .iter()
            .map(|p| {
                // anchor: lexicographically least among atoms of maximal mass
                let max = p.max_atom();
                let anchor = p
                    .atoms
                    .iter()
                    .filter(|(_, m)| *m == max)
                    .map(|(s, _)| s)
                    .min()
                    .expect("nonempty part")
                    .clone();
                let mut atoms: Vec<(Site, f64)> = p
                    .atoms
                    .iter()
                    .map(|(s, m)| {
                        (
                            s.iter().zip(&anchor).map(|(a, b)| a - b).collect(),
                            *m,
                        )
                    })
                    .collect();
                atoms.sort_by(|a, b| a.0.cmp(&b.0));
                Part { label: 0, atoms }
            })
            .collect();
        shifted.sort_by(|a, b| {
            b.mass()
                .total_cmp(&a.mass())
                .then_with(|| {
                    let mut ma: Vec<f64> = a.atoms.iter().map(|(_, m)| *m).collect();
                    let mut mb: Vec<f64> = b.atoms.iter().map(|(_, m)| *m).collect();
                    ma.sort_by(|x, y| y.total_cmp(x));
                    mb.sort_by(|x, y| y.total_cmp(x));
                    for (x, y) in ma.iter().zip(&mb) {
                        match y.total_cmp(x) {
                            std::cmp::Ordering::Equal => continue,
                            o => return o,
                        }
                    }
                    ma.len().cmp(&mb.len())
                })
                .then_with(|| {
                    let sa: Vec<&Site> = a.atoms.iter().map(|(s, _)| s).collect();
                    let sb: Vec<&Site> = b.atoms.iter().map(|(s, _)| s).collect();
                    sa.cmp(&sb)
                })
        });
        for (i, p) in shifted.iter_mut().enumerate() {
            p.label = i as u32;
        }
        CanonicalPspm(Pspm {
            d: self.d,
            parts: shifted,
        })
    }

    /// Serializes as `{"d": .., "parts": [{"label": .., "atoms": [[x1..xd, mass], ..]}, ..]}`
    /// with masses printed to 17 significant digits.
    pub fn to_json_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{{\"d\":{},\"parts\":[", self.d));
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("{{\"label\":{},\"atoms\":[", p.label));
            for (j, (site, mass)) in p.atoms.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                s.push('[');
                for c in site {
                    s.push_str(&format!("{c},"));
                }
                s.push_str(&format!("{mass:.16e}]"));
            }
            s.push_str("]}");
        }
        s.push_str("]}");
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let d = v
            .get("d")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::InvalidInput("missing field d".into()))? as usize;
        let mut raw_parts = Vec::new();
        for pv in v
            .get("parts")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::InvalidInput("missing field parts".into()))?
        {
            let label = pv
                .get("label")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| Error::InvalidInput("part missing label".into()))?
                as u32;
            let mut atoms = Vec::new();
            for av in pv
                .get("atoms")
                .and_then(|x| x.as_array())
                .ok_or_else(|| Error::InvalidInput("part missing atoms".into()))?
            {
                let nums = av
                    .as_array()
                    .ok_or_else(|| Error::InvalidInput("atom must be an array".into()))?;
                if nums.len() != d + 1 {
                    return Err(Error::InvalidInput(format!(
                        "atom needs {d} coordinates and a mass"
                    )));
                }
                let site: Site = nums[..d]
                    .iter()
                    .map(|x| {
                        x.as_i64()
                            .ok_or_else(|| Error::InvalidInput("coordinate must be an integer".into()))
                    })
                    .collect::<Result<_>>()?;
                let mass = nums[d]
                    .as_f64()
                    .ok_or_else(|| Error::InvalidInput("mass must be a number".into()))?;
                atoms.push((site, mass));
            }
            raw_parts.push((label, atoms));
        }
        Pspm::new(d, raw_parts)
    }
}

/// Values of the atom-level functionals.
#[derive(Clone, Copy, Debug)]
pub struct AtomFunctionals {
    /// Total mass.
    pub total: f64,
    /// Largest atom.
    pub max_atom: f64,
    /// Mass on atoms strictly greater than eps.
    pub eps_mass: f64,
    /// Whether the largest atom is at least eps.
    pub indicator: bool,
}

/// total, max atom, mass above eps, and the atomicity indicator.
///
/// The strict inequality in `eps_mass` versus the weak one in `indicator`
/// mirrors the defining sets; the difference matters for atoms exactly at eps.
pub fn atom_functionals(f: &Pspm, eps: f64) -> AtomFunctionals {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    let mut total = 0.0;
    let mut max_atom: f64 = 0.0;
    let mut eps_mass = 0.0;
    for p in f.parts() {
        for (_, m) in p.atoms() {
            total += m;
            max_atom = max_atom.max(*m);
            if *m > eps {
                eps_mass += m;
            }
        }
    }
    AtomFunctionals {
        total,
        max_atom,
        eps_mass,
        indicator: max_atom >= eps,
    }
}

/// Values of the part-level functionals.
#[derive(Clone, Debug)]
pub struct PartFunctionals {
    /// Number of parts (the support number).
    pub support_number: usize,
    /// Per-part masses, in part order.
    pub part_masses: Vec<f64>,
    /// Largest part mass.
    pub max_part_mass: f64,
    /// Sum of q/(1-q) over parts, with 1/0 = infinity.
    pub q_sum: f64,
}

pub fn part_functionals(f: &Pspm) -> PartFunctionals {
    let part_masses: Vec<f64> = f.parts().iter().map(|p| p.mass()).collect();
    let max_part_mass = part_masses.iter().copied().fold(0.0, f64::max);
    let q_sum = part_masses
        .iter()
        .map(|q| if *q >= 1.0 { f64::INFINITY } else { q / (1.0 - q) })
        .sum();
    PartFunctionals {
        support_number: part_masses.len(),
        part_masses,
        max_part_mass,
        q_sum,
    }
}

/// Values of the geometric-localization functionals.
#[derive(Clone, Copy, Debug)]
pub struct GeometryFunctionals {
    /// Least diameter of a region in one copy carrying mass > 1 - delta;
    /// None when no copy carries that much mass.
    pub w_delta: Option<u64>,
    /// Whether w_delta <= K.
    pub in_v: bool,
    /// in_v together with a single part of full mass.
    pub in_g: bool,
    /// Mass within distance K of every mode.
    pub favorite_mass: f64,
    /// True when a part exceeded the exact search limit and a greedy upper
    /// bound was used for w_delta.
    pub approximate: bool,
}

pub fn geometry_functionals(f: &Pspm, delta: f64, k: u64) -> GeometryFunctionals {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
    let need = 1.0 - delta;
    let mut w_delta: Option<u64> = None;
    let mut approximate = false;
    for p in f.parts() {
        let (w, approx) = part_min_diameter(p.atoms(), need);
        approximate |= approx;
        w_delta = match (w_delta, w) {
            (None, w) => w,
            (Some(a), None) => Some(a),
            (Some(a), Some(b)) => Some(a.min(b)),
        };
    }
    let in_v = matches!(w_delta, Some(w) if w <= k);
    let total = f.total_mass();
    let in_g = in_v && f.parts().len() == 1 && total >= 1.0 - 1e-9;
    GeometryFunctionals {
        w_delta,
        in_v,
        in_g,
        favorite_mass: favorite_mass(f, k),
        approximate,
    }
}

/// Mass within l1 distance K of every mode (atom of maximal mass). Modes in
/// different copies leave no site close to all of them, giving mass 0.
pub fn favorite_mass(f: &Pspm, k: u64) -> f64 {
    let max = f.max_atom();
    if max == 0.0 {
        return 0.0;
    }
    let mut mode_part: Option<usize> = None;
    let mut modes: Vec<&Site> = Vec::new();
    for (i, p) in f.parts().iter().enumerate() {
        for (s, m) in p.atoms() {
            if *m == max {
                match mode_part {
                    None => {
                        mode_part = Some(i);
                        modes.push(s);
                    }
                    Some(j) if j == i => modes.push(s),
                    Some(_) => return 0.0,
                }
            }
        }
    }
    let part = &f.parts()[mode_part.unwrap()];
    part.atoms()
        .iter()
        .filter(|(s, _)| modes.iter().all(|m| l1_dist(s, m) <= k))
        .map(|(_, m)| m)
        .sum()
}

/// Least diameter of an atom subset with mass strictly above `need`,
/// (value, used_greedy_fallback). Exact up to [`W_DELTA_EXACT_LIMIT`] atoms:
/// a branch-and-bound search over subsets, scanning candidate diameters in
/// increasing order. Beyond the limit a greedy heaviest-first cover gives an
/// upper bound.
pub fn part_min_diameter(atoms: &[(Site, f64)], need: f64) -> (Option<u64>, bool) {
    let total: f64 = atoms.iter().map(|(_, m)| m).sum();
    if !(total > need) {
        return (None, false);
    }
    if atoms.len() > W_DELTA_EXACT_LIMIT {
        return (greedy_min_diameter(atoms, need), true);
    }
    let d = atoms[0].0.len();
    if d == 1 {
        return (Some(min_width_1d(atoms, need)), false);
    }
    // sort by decreasing mass for better pruning
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[b].1.total_cmp(&atoms[a].1));
    let masses: Vec<f64> = order.iter().map(|&i| atoms[i].1).collect();
    let n = atoms.len();
    let mut dist = vec![vec![0u64; n]; n];
    let mut candidates: Vec<u64> = vec![0];
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = l1_dist(&atoms[order[i]].0, &atoms[order[j]].0);
            dist[i][j] = dij;
            dist[j][i] = dij;
            candidates.push(dij);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    // suffix sums for the bound
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + masses[i];
    }
    for cap in candidates {
        let mut compat = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && dist[i][j] <= cap {
                    compat[i] |= 1 << j;
                }
            }
        }
        if exists_heavy_subset(&masses, &suffix, &compat, need) {
            return (Some(cap), false);
        }
    }
    (None, false) // unreachable: the full set is a candidate
}

fn exists_heavy_subset(masses: &[f64], suffix: &[f64], compat: &[u64], need: f64) -> bool {
    fn dfs(
        idx: usize,
        avail: u64,
        acc: f64,
        masses: &[f64],
        suffix: &[f64],
        compat: &[u64],
        need: f64,
    ) -> bool {
        if acc > need {
            return true;
        }
        if idx >= masses.len() {
            return false;
        }
        // bound: even taking every remaining available atom cannot reach
        let mut rest = 0.0;
        let mut m = avail >> idx << idx;
        if acc + suffix[idx] <= need {
            return false;
        }
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            rest += masses[i];
            m &= m - 1;
        }
        if acc + rest <= need {
            return false;
        }
        if avail & (1 << idx) != 0 {
            // include idx: restrict to atoms compatible with it
            if dfs(
                idx + 1,
                avail & compat[idx],
                acc + masses[idx],
                masses,
                suffix,
                compat,
                need,
            ) {
                return true;
            }
        }
        dfs(idx + 1, avail & !(1 << idx), acc, masses, suffix, compat, need)
    }
    let all = if masses.len() == 64 {
        u64::MAX
    } else {
        (1u64 << masses.len()) - 1
    };
    dfs(0, all, 0.0, masses, suffix, compat, need)
}

/// Exact one-dimensional case: sliding window over sorted positions.
fn min_width_1d(atoms: &[(Site, f64)], need: f64) -> u64 {
    let mut pts: Vec<(i64, f64)> = atoms.iter().map(|(s, m)| (s[0], *m)).collect();
    pts.sort_by_key(|(z, _)| *z);
    let mut best = u64::MAX;
    let mut acc = 0.0;
    let mut lo = 0usize;
    for hi in 0..pts.len() {
        acc += pts[hi].1;
        while acc - pts[lo].1 > need {
            acc -= pts[lo].1;
            lo += 1;
        }
        if acc > need {
            best = best.min((pts[hi].0 - pts[lo].0) as u64);
        }
    }
    best
}

fn greedy_min_diameter(atoms: &[(Site, f64)], need: f64) -> Option<u64> {
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[b].1.total_cmp(&atoms[a].1));
    let mut acc = 0.0;
    let mut chosen: Vec<usize> = Vec::new();
    for i in order {
        chosen.push(i);
        acc += atoms[i].1;
        if acc > need {
            let mut diam = 0;
            for (a, &i) in chosen.iter().enumerate() {
                for &j in &chosen[a + 1..] {
                    diam = diam.max(l1_dist(&atoms[i].0, &atoms[j].0));
                }
            }
            return Some(diam);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pspm1(parts: Vec<(u32, Vec<(i64, f64)>)>) -> Pspm {
        Pspm::new(
            1,
            parts
                .into_iter()
                .map(|(l, atoms)| (l, atoms.into_iter().map(|(x, m)| (vec![x], m)).collect()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(Pspm::new(1, vec![(0, vec![])]).is_err());
        assert!(Pspm::new(1, vec![(0, vec![(vec![0], 0.6)]), (0, vec![(vec![1], 0.1)])]).is_err());
        assert!(Pspm::new(1, vec![(0, vec![(vec![0], 0.6), (vec![0], 0.2)])]).is_err());
        assert!(Pspm::new(1, vec![(0, vec![(vec![0], 1.5)])]).is_err());
        assert!(Pspm::new(1, vec![(0, vec![(vec![0], -0.1)])]).is_err());
    }

    #[test]
    fn canonical_translation_and_relabeling_invariance() {
        let f = pspm1(vec![(3, vec![(0, 0.3), (2, 0.1)]), (7, vec![(5, 0.5)])]);
        let g = f.translate_part(0, &[7]).with_labels(&[10, 2]).unwrap();
        assert_eq!(f.canonicalize(), g.canonicalize());
        // idempotence
        let c = f.canonicalize();
        assert_eq!(c.0.canonicalize(), c);
    }

    #[test]
    fn canonical_distinguishes_different_shapes() {
        let f = pspm1(vec![(0, vec![(0, 1.0)])]);
        let g = pspm1(vec![(0, vec![(0, 0.5), (1, 0.5)])]);
        assert_ne!(f.canonicalize(), g.canonicalize());
    }

    #[test]
    fn atom_functionals_values() {
        let one = Pspm::one(2);
        let a = atom_functionals(&one, 0.5);
        assert_eq!(
            (a.total, a.max_atom, a.eps_mass, a.indicator),
            (1.0, 1.0, 1.0, true)
        );

        let uniform = pspm1(vec![(0, (0..10).map(|i| (i, 0.1)).collect())]);
        let a = atom_functionals(&uniform, 0.1);
        assert_eq!(a.eps_mass, 0.0); // strict inequality
        assert!(a.indicator); // weak inequality

        let z = Pspm::zero(1);
        let a = atom_functionals(&z, 0.3);
        assert_eq!(
            (a.total, a.max_atom, a.eps_mass, a.indicator),
            (0.0, 0.0, 0.0, false)
        );
    }

    #[test]
    fn part_functionals_values() {
        let one = Pspm::one(1);
        let p = part_functionals(&one);
        assert_eq!(p.support_number, 1);
        assert_eq!(p.max_part_mass, 1.0);
        assert!(p.q_sum.is_infinite());

        let halves = pspm1(vec![(0, vec![(0, 0.5)]), (1, vec![(9, 0.5)])]);
        let p = part_functionals(&halves);
        assert_eq!(p.support_number, 2);
        assert_eq!(p.max_part_mass, 0.5);
        assert!((p.q_sum - 2.0).abs() < 1e-15);

        let p = part_functionals(&Pspm::zero(1));
        assert_eq!((p.support_number, p.max_part_mass, p.q_sum), (0, 0.0, 0.0));
    }

    #[test]
    fn q_infinite_iff_single_full_part() {
        let one = Pspm::one(1);
        assert!(part_functionals(&one).q_sum.is_infinite());
        let two = pspm1(vec![(0, vec![(0, 0.5)]), (1, vec![(4, 0.5)])]);
        assert!(part_functionals(&two).q_sum.is_finite());
        let sub = pspm1(vec![(0, vec![(0, 0.9)])]);
        assert!(part_functionals(&sub).q_sum.is_finite());
    }

    #[test]
    fn geometry_on_single_atom() {
        let one = Pspm::one(3);
        for k in [0, 1, 5] {
            let g = geometry_functionals(&one, 0.1, k);
            assert_eq!(g.w_delta, Some(0));
            assert!(g.in_v && g.in_g);
            assert_eq!(g.favorite_mass, 1.0);
            assert!(!g.approximate);
        }
    }

    #[test]
    fn w_delta_window_examples() {
        // {0.6 at 0, 0.4 at 5}: the singleton {0} already carries 0.6 > 0.5
        let f = pspm1(vec![(0, vec![(0, 0.6), (5, 0.4)])]);
        assert_eq!(geometry_functionals(&f, 0.5, 0).w_delta, Some(0));
        // {0.5, 0.5}: need both atoms to exceed 0.7
        let g = pspm1(vec![(0, vec![(0, 0.5), (5, 0.5)])]);
        assert_eq!(geometry_functionals(&g, 0.3, 0).w_delta, Some(5));
    }

    #[test]
    fn w_delta_matches_subset_enumeration_2d() {
        // oracle: enumerate all subsets
        let mut rng = crate::rng::SplitMix64::new(77);
        for _ in 0..200 {
            let n = 2 + (rng.next_below(8)) as usize;
            let mut atoms: Vec<(Site, f64)> = Vec::new();
            let mut used = std::collections::HashSet::new();
            for _ in 0..n {
                let s = vec![
                    rng.next_below(11) as i64 - 5,
                    rng.next_below(11) as i64 - 5,
                ];
                if used.insert(s.clone()) {
                    atoms.push((s, 0.01 + rng.next_f64() / n as f64));
                }
            }
            let total: f64 = atoms.iter().map(|(_, m)| m).sum();
            let scale = 0.95 / total.max(1.0);
            for (_, m) in &mut atoms {
                *m *= scale;
            }
            let need = (0.3 + 0.5 * rng.next_f64()) * atoms.iter().map(|(_, m)| m).sum::<f64>();
            let (got, approx) = part_min_diameter(&atoms, need);
            assert!(!approx);
            let mut oracle: Option<u64> = None;
            for mask in 1u32..(1 << atoms.len()) {
                let sel: Vec<usize> =
                    (0..atoms.len()).filter(|i| mask & (1 << i) != 0).collect();
                let mass: f64 = sel.iter().map(|&i| atoms[i].1).sum();
                if mass > need {
                    let mut diam = 0;
                    for (a, &i) in sel.iter().enumerate() {
                        for &j in &sel[a + 1..] {
                            diam = diam.max(l1_dist(&atoms[i].0, &atoms[j].0));
                        }
                    }
                    oracle = Some(oracle.map_or(diam, |o: u64| o.min(diam)));
                }
            }
            assert_eq!(got, oracle, "atoms {atoms:?} need {need}");
        }
    }

    #[test]
    fn functionals_invariant_under_canonicalize() {
        let f = pspm1(vec![
            (0, vec![(3, 0.4), (4, 0.2)]),
            (1, vec![(-10, 0.25)]),
        ]);
        let g = f.translate_part(1, &[100]).with_labels(&[5, 0]).unwrap();
        let (af, ag) = (atom_functionals(&f, 0.3), atom_functionals(&g, 0.3));
        assert_eq!(af.total, ag.total);
        assert_eq!(af.eps_mass, ag.eps_mass);
        let (pf, pg) = (part_functionals(&f), part_functionals(&g));
        assert_eq!(pf.q_sum, pg.q_sum);
        assert_eq!(pf.max_part_mass, pg.max_part_mass);
        let (gf, gg) = (
            geometry_functionals(&f, 0.5, 3),
            geometry_functionals(&g, 0.5, 3),
        );
        assert_eq!(gf.w_delta, gg.w_delta);
        assert_eq!(gf.favorite_mass, gg.favorite_mass);
    }

    #[test]
    fn eps_mass_monotone_in_eps() {
        let f = pspm1(vec![(0, vec![(0, 0.4), (1, 0.3), (2, 0.2), (3, 0.05)])]);
        let grid = [0.5, 0.25, 0.1, 0.04, 0.01];
        let mut prev = -1.0;
        for eps in grid {
            let a = atom_functionals(&f, eps);
            assert!(a.eps_mass >= prev);
            prev = a.eps_mass;
        }
        assert!((prev - f.total_mass()).abs() < 1e-15);
    }

    #[test]
    fn in_g_monotone_in_delta_and_k() {
        let f = pspm1(vec![(0, vec![(0, 0.55), (3, 0.25), (9, 0.2)])]);
        let deltas = [0.2, 0.3, 0.5, 0.7];
        let ks = [0u64, 2, 4, 9, 12];
        for w in deltas.windows(2) {
            for &k in &ks {
                let a = geometry_functionals(&f, w[0], k);
                let b = geometry_functionals(&f, w[1], k);
                assert!(!(a.in_g && !b.in_g), "delta monotonicity");
            }
        }
        for &dl in &deltas {
            for w in ks.windows(2) {
                let a = geometry_functionals(&f, dl, w[0]);
                let b = geometry_functionals(&f, dl, w[1]);
                assert!(!(a.in_g && !b.in_g), "K monotonicity");
            }
        }
    }

    #[test]
    fn favorite_mass_nondecreasing_and_witnessed() {
        let f = pspm1(vec![(0, vec![(0, 0.5), (2, 0.3), (40, 0.2)])]);
        let mut prev = -1.0;
        for k in [0u64, 1, 2, 5, 40, 100] {
            let v = favorite_mass(&f, k);
            assert!(v >= prev);
            prev = v;
        }
        // unique mode, window of diameter 2 containing it carries 0.8 > 1 - 0.25
        let g = geometry_functionals(&f, 0.25, 2);
        assert!(g.in_g);
        assert!(g.favorite_mass >= 1.0 - 0.25);
    }

    #[test]
    fn json_round_trip_and_digits() {
        let f = Pspm::new(
            2,
            vec![
                (0, vec![(vec![0, 1], 0.123456789012345678), (vec![2, -3], 0.25)]),
                (4, vec![(vec![-1, -1], 1.0 / 3.0)]),
            ],
        )
        .unwrap();
        let s = f.to_json_string();
        let back = Pspm::from_json_str(&s).unwrap();
        assert_eq!(f, back);
        assert!(s.contains("\"d\":2"));
        // 17 significant digits present
        assert!(s.contains("e-1") || s.contains("e0"));
    }
}
