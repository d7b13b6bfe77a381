//! Dense storage layout for the reachable set of an n-step walk: the
//! parity-correct l1 diamond {x : |x|_1 <= n, |x|_1 == n mod 2}.
//!
//! Sites are stored row by row, a row being the set of admissible last
//! coordinates for a fixed (d-1)-coordinate prefix. Row starts live in a
//! dense table over the prefix box, so ranking a site is O(d) and the
//! one-step stencil reduces to strided slice additions between rows.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Diamond {
    pub d: usize,
    pub radius: i64,
    side: i64,
    /// Start offset per prefix, `u64::MAX` marking empty rows; a single
    /// entry when d = 1.
    prefix_starts: Vec<u64>,
    len: usize,
}

/// One row of the diamond: sites (prefix, z) for z in
/// {z_min, z_min + 2, ..., z_min + 2 (count - 1)}.
#[derive(Clone, Copy, Debug)]
pub struct Row {
    pub start: usize,
    pub z_min: i64,
    pub count: usize,
}

impl Diamond {
    pub fn new(d: usize, radius: i64) -> Result<Self> {
        assert!(d >= 1);
        assert!(radius >= 0);
        let side = 2 * radius + 1;
        let rows = (side as u128).checked_pow(d as u32 - 1).ok_or_else(|| {
            Error::InvalidInput(format!("prefix box overflow: d={d}, radius={radius}"))
        })?;
        if rows > (1u128 << 40) {
            return Err(Error::InvalidInput(format!(
                "prefix box too large: d={d}, radius={radius}"
            )));
        }
        let mut prefix_starts = vec![u64::MAX; rows as usize];
        let parity = radius & 1;
        let mut acc: u64 = 0;
        let mut prefix = vec![-radius; d - 1];
        for flat in 0..rows as usize {
            let abs_sum: i64 = prefix.iter().map(|x| x.abs()).sum();
            let coord_sum: i64 = prefix.iter().sum();
            let budget = radius - abs_sum;
            if budget >= 0 {
                let z_max = z_max_for(budget, (parity - coord_sum) & 1);
                if z_max >= 0 {
                    prefix_starts[flat] = acc;
                    acc += (z_max + 1) as u64;
                }
            }
            // odometer increment of the prefix coordinates
            for i in (0..d - 1).rev() {
                if prefix[i] < radius {
                    prefix[i] += 1;
                    break;
                }
                prefix[i] = -radius;
            }
        }
        Ok(Diamond {
            d,
            radius,
            side,
            prefix_starts,
            len: acc as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn rows(&self) -> usize {
        self.prefix_starts.len()
    }

    fn parity(&self) -> i64 {
        self.radius & 1
    }

    #[inline]
    pub fn flat_prefix(&self, prefix: &[i64]) -> usize {
        let mut flat = 0usize;
        for &c in prefix {
            flat = flat * self.side as usize + (c + self.radius) as usize;
        }
        flat
    }

    /// Decodes a flat prefix index into coordinates.
    #[inline]
    pub fn decode_prefix(&self, mut flat: usize, out: &mut [i64]) {
        for i in (0..self.d - 1).rev() {
            out[i] = (flat % self.side as usize) as i64 - self.radius;
            flat /= self.side as usize;
        }
    }

    /// Row for a prefix flat index, if nonempty.
    #[inline]
    pub fn row_at(&self, flat: usize, abs_prefix_sum: i64, prefix_coord_sum: i64) -> Option<Row> {
        let start = *self.prefix_starts.get(flat)?;
        if start == u64::MAX {
            return None;
        }
        let budget = self.radius - abs_prefix_sum;
        let z_max = z_max_for(budget, (self.parity() - prefix_coord_sum) & 1);
        Some(Row {
            start: start as usize,
            z_min: -z_max,
            count: (z_max + 1) as usize,
        })
    }

    pub fn row(&self, prefix: &[i64]) -> Option<Row> {
        let abs_sum: i64 = prefix.iter().map(|x| x.abs()).sum();
        if abs_sum > self.radius {
            return None;
        }
        let coord_sum: i64 = prefix.iter().sum();
        self.row_at(self.flat_prefix(prefix), abs_sum, coord_sum)
    }

    /// Dense rank of a site, or None if it lies outside the diamond or has
    /// the wrong parity.
    pub fn rank(&self, site: &[i64]) -> Option<usize> {
        debug_assert_eq!(site.len(), self.d);
        let (prefix, z) = site.split_at(self.d - 1);
        if prefix.iter().any(|c| c.abs() > self.radius) {
            return None;
        }
        let row = self.row(prefix)?;
        let z = z[0];
        if z < row.z_min || z > -row.z_min || (z - row.z_min) % 2 != 0 {
            return None;
        }
        Some(row.start + ((z - row.z_min) / 2) as usize)
    }

    /// Visits every nonempty row in storage order.
    pub fn for_each_row<F: FnMut(&[i64], Row)>(&self, mut visit: F) {
        let mut prefix = vec![-self.radius; self.d - 1];
        for flat in 0..self.prefix_starts.len() {
            if self.prefix_starts[flat] != u64::MAX {
                let abs_sum: i64 = prefix.iter().map(|x| x.abs()).sum();
                let coord_sum: i64 = prefix.iter().sum();
                let row = self
                    .row_at(flat, abs_sum, coord_sum)
                    .expect("nonempty row");
                visit(&prefix, row);
            }
            for i in (0..self.d - 1).rev() {
                if prefix[i] < self.radius {
                    prefix[i] += 1;
                    break;
                }
                prefix[i] = -self.radius;
            }
        }
    }

    /// Collects all sites in storage order; test helper, O(len) memory.
    pub fn sites(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.len);
        self.for_each_row(|prefix, row| {
            for k in 0..row.count {
                let mut site = prefix.to_vec();
                site.push(row.z_min + 2 * k as i64);
                out.push(site);
            }
        });
        out
    }
}

/// Largest admissible |z| for a last coordinate with the given budget and
/// parity (0 or 1); -1 when no value fits.
#[inline]
fn z_max_for(budget: i64, parity: i64) -> i64 {
    if budget < 0 {
        -1
    } else if (budget & 1) == parity {
        budget
    } else {
        budget - 1
    }
}

/// Number of sites of the parity diamond, via the shell-count recurrence;
/// used for memory budgeting without building the index.
pub fn site_count(d: usize, n: i64) -> u128 {
    // shells[s] = #{x in Z^d : |x|_1 = s}
    let n = n as usize;
    let mut shells = vec![0u128; n + 1];
    shells[0] = 1;
    for _ in 1..=d {
        let prev = shells.clone();
        for s in 0..=n {
            let mut acc = prev[s]; // t = 0
            for t in 1..=s {
                acc = acc.saturating_add(2 * prev[s - t]);
            }
            shells[s] = acc;
        }
    }
    (0..=n)
        .filter(|s| s % 2 == n % 2)
        .map(|s| shells[s])
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Largest n whose parity diamond fits the site budget.
pub fn max_steps_within(d: usize, budget_sites: u128) -> usize {
    let mut n: i64 = 0;
    while site_count(d, n + 1) <= budget_sites {
        n += 1;
        if n > 1 << 30 {
            break;
        }
    }
    n as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_enumeration() {
        for d in 1..=4usize {
            for n in 0..=6i64 {
                let dia = Diamond::new(d, n).unwrap();
                // brute-force count over the box
                let mut count = 0usize;
                let side = 2 * n + 1;
                let total = (side as u64).pow(d as u32);
                for mut flat in 0..total {
                    let mut abs = 0;
                    for _ in 0..d {
                        let c = (flat % side as u64) as i64 - n;
                        abs += c.abs();
                        flat /= side as u64;
                    }
                    if abs <= n && (abs - n) % 2 == 0 {
                        count += 1;
                    }
                }
                assert_eq!(dia.len(), count, "d={d} n={n}");
                assert_eq!(site_count(d, n), count as u128, "formula d={d} n={n}");
            }
        }
    }

    #[test]
    fn rank_is_a_bijection() {
        for d in 1..=3usize {
            for n in 0..=5i64 {
                let dia = Diamond::new(d, n).unwrap();
                let sites = dia.sites();
                assert_eq!(sites.len(), dia.len());
                for (i, s) in sites.iter().enumerate() {
                    assert_eq!(dia.rank(s), Some(i), "d={d} n={n} site={s:?}");
                }
            }
        }
    }

    #[test]
    fn wrong_parity_rejected() {
        let dia = Diamond::new(2, 3).unwrap();
        assert_eq!(dia.rank(&[0, 0]), None); // |x| even, radius odd
        assert!(dia.rank(&[0, 1]).is_some());
        assert_eq!(dia.rank(&[4, 1]), None);
    }

    #[test]
    fn budget_helper() {
        assert_eq!(max_steps_within(1, 101), 100);
        let n = max_steps_within(3, 1_000_000);
        assert!(site_count(3, n as i64) <= 1_000_000);
        assert!(site_count(3, n as i64 + 1) > 1_000_000);
    }
}
