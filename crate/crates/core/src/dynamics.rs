//! The one-step update map as a sampler on partitioned measures, and the
//! energy functional R with Monte Carlo estimation and analytic endpoints.
//!
//! For a measure f with total mass at most 1, a fresh environment Y on the
//! neighborhood of its support reweights the one-step smoothing; the
//! deficit 1 - |f| enters through a constant correction term calibrated so
//! the expected normalizer matches the expected one-step partition ratio.

use std::collections::HashMap;

use crate::disorder::{check_mgf_window, log_mgf, norm_quantile, DisorderSpec, Sampler};
use crate::error::{Error, Result};
use crate::field::Site;
use crate::lattice::{kahan_sum, EndpointField};
use crate::pspm::Pspm;
use crate::rng::{key_begin, key_finish, key_push, split_seed};
use crate::stats::mean_stderr;

/// Stream tag for update-map and energy draws (the lattice environment
/// uses tag 0).
const UPDATE_TAG: u64 = 1;
const ENERGY_TAG: u64 = 2;

/// A Monte Carlo estimate of the energy functional, with an analytic value
/// when a closed form applies.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EnergyEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub analytic: Option<f64>,
}

/// Support plus lattice neighbors of one part, with the smoothed masses
/// g(u) = sum_{v ~ u} f(v).
fn part_neighborhood(atoms: &[(Site, f64)], d: usize) -> Vec<(Site, f64)> {
    let index: HashMap<&Site, f64> = atoms.iter().map(|(s, m)| (s, *m)).collect();
    let mut sites: Vec<Site> = Vec::with_capacity(atoms.len() * (2 * d + 1));
    for (s, _) in atoms {
        for j in 0..d {
            for sign in [-1i64, 1] {
                let mut n = s.clone();
                n[j] += sign;
                sites.push(n);
            }
        }
    }
    sites.sort();
    sites.dedup();
    sites
        .into_iter()
        .map(|u| {
            let mut g = 0.0;
            for j in 0..d {
                for sign in [-1i64, 1] {
                    let mut v = u.clone();
                    v[j] += sign;
                    if let Some(m) = index.get(&v) {
                        g += m;
                    }
                }
            }
            (u, g)
        })
        .filter(|(_, g)| *g > 0.0)
        .collect()
}

/// One draw of the update map: reweights the one-step smoothing of `f` by
/// a fresh environment and normalizes against the mass-deficit correction.
pub fn update_sample(f: &Pspm, spec: &DisorderSpec, beta: f64, seed: u64) -> Result<Pspm> {
    if beta > 0.0 {
        check_mgf_window(spec, beta)?;
    } else {
        spec.validate()?;
    }
    let d = f.d();
    let two_d = 2.0 * d as f64;
    if f.is_zero() {
        return Ok(Pspm::zero(d));
    }
    let total = f.total_mass();
    let smoothed: Vec<(u32, Vec<(Site, f64)>)> = f
        .parts()
        .iter()
        .map(|p| (p.label(), part_neighborhood(p.atoms(), d)))
        .collect();

    if beta == 0.0 {
        // every weight is 1: the exact random-walk smoothing
        let parts = smoothed
            .into_iter()
            .map(|(label, atoms)| {
                (
                    label,
                    atoms
                        .into_iter()
                        .map(|(s, g)| (s, g / two_d))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        return Pspm::new(d, parts);
    }

    let sampler = Sampler::new(spec);
    let c_beta = log_mgf(spec, beta)?;
    // pass 1: draw beta Y over the neighborhoods, tracking the max
    let mut draws: Vec<(u32, Vec<(Site, f64, f64)>)> = Vec::with_capacity(smoothed.len());
    let mut max_by = f64::NEG_INFINITY;
    for (label, atoms) in smoothed {
        let mut rows = Vec::with_capacity(atoms.len());
        for (site, g) in atoms {
            let mut h = key_begin(seed, UPDATE_TAG);
            h = key_push(h, label as i64);
            for &c in &site {
                h = key_push(h, c);
            }
            let by = beta * sampler.draw(key_finish(h));
            if by > max_by {
                max_by = by;
            }
            rows.push((site, g, by));
        }
        draws.push((label, rows));
    }
    // pass 2: shifted weights and normalizer
    let correction = two_d * (1.0 - total) * ((c_beta - max_by).exp());
    let mut s = 0.0;
    for (_, rows) in &draws {
        s += kahan_sum(rows.iter().map(|(_, g, by)| g * (by - max_by).exp()));
    }
    let denom = s + correction;
    if !(denom > 0.0) {
        return Err(Error::Overflow { step: 0 });
    }
    let parts: Vec<(u32, Vec<(Site, f64)>)> = draws
        .into_iter()
        .map(|(label, rows)| {
            (
                label,
                rows.into_iter()
                    .filter_map(|(site, g, by)| {
                        let m = g * (by - max_by).exp() / denom;
                        (m > 0.0).then_some((site, m))
                    })
                    .collect::<Vec<_>>(),
            )
        })
        .filter(|(_, atoms)| !atoms.is_empty())
        .collect();
    Pspm::new(d, parts)
}

/// Monte Carlo estimate of the energy functional
/// R(f) = E log( sum_u sum_{v~u} f(v) e^{beta Y_u} + 2d (1 - |f|) e^{c(beta)} ) - log 2d.
///
/// At the zero measure the argument is the constant 2d e^{c(beta)}, so the
/// value is exactly c(beta) with zero variance; at beta = 0 every weight is
/// 1 and the value is exactly 0.
pub fn energy_r(
    f: &Pspm,
    spec: &DisorderSpec,
    beta: f64,
    replicas: usize,
    seed: u64,
) -> Result<EnergyEstimate> {
    if replicas < 1 {
        return Err(Error::InvalidInput("replicas must be at least 1".into()));
    }
    if beta > 0.0 {
        check_mgf_window(spec, beta)?;
    } else {
        spec.validate()?;
    }
    let c_beta = log_mgf(spec, beta)?;
    if f.is_zero() {
        return Ok(EnergyEstimate {
            mean: c_beta,
            stderr: 0.0,
            replicas,
            analytic: Some(c_beta),
        });
    }
    if beta == 0.0 {
        return Ok(EnergyEstimate {
            mean: 0.0,
            stderr: 0.0,
            replicas,
            analytic: Some(0.0),
        });
    }
    let values = energy_samples(f, spec, beta, c_beta, replicas, seed);
    let ms = mean_stderr(&values);
    let analytic = if is_unit_point(f) {
        analytic_log_z1(spec, beta, f.d())
    } else {
        None
    };
    Ok(EnergyEstimate {
        mean: ms.mean,
        stderr: ms.stderr,
        replicas,
        analytic,
    })
}

fn is_unit_point(f: &Pspm) -> bool {
    f.parts().len() == 1 && f.parts()[0].atoms().len() == 1 && f.parts()[0].atoms()[0].1 == 1.0
}

/// Per-replica values of the log argument of R (minus log 2d), common
/// random numbers keyed by (seed, replica, part, site).
fn energy_samples(
    f: &Pspm,
    spec: &DisorderSpec,
    beta: f64,
    c_beta: f64,
    replicas: usize,
    seed: u64,
) -> Vec<f64> {
    let d = f.d();
    let two_d = 2.0 * d as f64;
    let total = f.total_mass();
    let sampler = Sampler::new(spec);
    let smoothed: Vec<(u32, Vec<(Site, f64)>)> = f
        .parts()
        .iter()
        .map(|p| (p.label(), part_neighborhood(p.atoms(), d)))
        .collect();
    (0..replicas)
        .map(|r| {
            let mut max_by = f64::NEG_INFINITY;
            let mut terms: Vec<(f64, f64)> = Vec::new();
            for (label, atoms) in &smoothed {
                let mut h = key_begin(seed, ENERGY_TAG);
                h = key_push(h, r as i64);
                h = key_push(h, *label as i64);
                for (site, g) in atoms {
                    let mut hs = h;
                    for &c in site {
                        hs = key_push(hs, c);
                    }
                    let by = beta * sampler.draw(key_finish(hs));
                    if by > max_by {
                        max_by = by;
                    }
                    terms.push((*g, by));
                }
            }
            let s = kahan_sum(terms.iter().map(|(g, by)| g * (by - max_by).exp()));
            let correction = two_d * (1.0 - total) * (c_beta - max_by).exp();
            max_by + (s + correction).ln() - two_d.ln()
        })
        .collect()
}

/// Report of R(alpha f) across a grid of alphas under common random
/// numbers: the same environment replicas are reused for every alpha, so
/// strict orderings are visible at modest replica counts.
#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    pub alphas: Vec<f64>,
    pub estimates: Vec<EnergyEstimate>,
    /// Per-alpha, per-replica values for paired comparisons.
    values: Vec<Vec<f64>>,
}

impl MonotonicityReport {
    /// Mean and standard error of the paired difference
    /// R(alpha_i f) - R(alpha_j f).
    pub fn paired_difference(&self, i: usize, j: usize) -> crate::stats::MeanStderr {
        let diffs: Vec<f64> = self.values[i]
            .iter()
            .zip(&self.values[j])
            .map(|(a, b)| a - b)
            .collect();
        mean_stderr(&diffs)
    }
}

/// Estimates R(alpha f) for each alpha with common random numbers.
/// Rows at alpha = 0 are exactly c(beta) (the argument is constant);
/// alpha = 1 reproduces R(f) on the same samples.
pub fn monotonicity_check(
    f: &Pspm,
    alphas: &[f64],
    spec: &DisorderSpec,
    beta: f64,
    replicas: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if f.is_zero() {
        return Err(Error::InvalidInput(
            "monotonicity check needs a nonzero measure".into(),
        ));
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidInput("alphas must lie in [0,1]".into()));
    }
    check_mgf_window(spec, beta)?;
    let c_beta = log_mgf(spec, beta)?;
    let d = f.d();
    let two_d = 2.0 * d as f64;
    let total = f.total_mass();
    let sampler = Sampler::new(spec);
    let smoothed: Vec<(u32, Vec<(Site, f64)>)> = f
        .parts()
        .iter()
        .map(|p| (p.label(), part_neighborhood(p.atoms(), d)))
        .collect();
    // one shifted weighted sum per replica, shared across alphas
    let mut sums = Vec::with_capacity(replicas);
    let mut shifts = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut max_by = f64::NEG_INFINITY;
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for (label, atoms) in &smoothed {
            let mut h = key_begin(seed, ENERGY_TAG);
            h = key_push(h, r as i64);
            h = key_push(h, *label as i64);
            for (site, g) in atoms {
                let mut hs = h;
                for &c in site {
                    hs = key_push(hs, c);
                }
                let by = beta * sampler.draw(key_finish(hs));
                if by > max_by {
                    max_by = by;
                }
                terms.push((*g, by));
            }
        }
        sums.push(kahan_sum(terms.iter().map(|(g, by)| g * (by - max_by).exp())));
        shifts.push(max_by);
    }
    let mut values = Vec::with_capacity(alphas.len());
    let mut estimates = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let vals: Vec<f64> = if alpha == 0.0 {
            vec![c_beta; replicas]
        } else {
            (0..replicas)
                .map(|r| {
                    let corr = two_d * (1.0 - alpha * total) * (c_beta - shifts[r]).exp();
                    shifts[r] + (alpha * sums[r] + corr).ln() - two_d.ln()
                })
                .collect()
        };
        let ms = mean_stderr(&vals);
        estimates.push(EnergyEstimate {
            mean: ms.mean,
            stderr: if alpha == 0.0 { 0.0 } else { ms.stderr },
            replicas,
            analytic: if alpha == 0.0 { Some(c_beta) } else { None },
        });
        values.push(vals);
    }
    Ok(MonotonicityReport {
        alphas: alphas.to_vec(),
        estimates,
        values,
    })
}

/// Per-step energy estimates along the iteration started from the unit
/// point mass, whose Cesaro mean estimates the variational minimum.
#[derive(Clone, Debug)]
pub struct IterateReport {
    pub per_step: Vec<EnergyEstimate>,
    /// Running Cesaro mean of the per-step means.
    pub cesaro: Vec<f64>,
    /// Free energy along the same trajectory, for cross-checks.
    pub free_energy: Vec<f64>,
}

impl IterateReport {
    pub fn final_cesaro(&self) -> f64 {
        *self.cesaro.last().expect("nonempty iteration")
    }

    /// Standard error of the final Cesaro mean treating per-step Monte
    /// Carlo errors as independent across steps.
    pub fn final_cesaro_stderr(&self) -> f64 {
        let n = self.per_step.len() as f64;
        (self
            .per_step
            .iter()
            .map(|e| e.stderr * e.stderr)
            .sum::<f64>())
        .sqrt()
            / n
    }
}

/// Iterates the update map from the unit point mass by reusing the lattice
/// recursion (the i-th iterate is distributed as the i-th endpoint law) and
/// estimates R at every step with fresh-environment replicas.
pub fn iterate_from_point(
    spec: &DisorderSpec,
    beta: f64,
    d: usize,
    n_steps: usize,
    seed: u64,
    replicas: usize,
    site_budget: u128,
) -> Result<IterateReport> {
    if n_steps < 1 {
        return Err(Error::InvalidInput("n_steps must be at least 1".into()));
    }
    if beta > 0.0 {
        check_mgf_window(spec, beta)?;
    } else {
        spec.validate()?;
    }
    if crate::lattice::diamond::site_count(d, n_steps as i64) > site_budget {
        return Err(Error::BudgetExceeded {
            d,
            n_steps,
            max_steps: crate::lattice::diamond::max_steps_within(d, site_budget),
        });
    }
    let sampler = Sampler::new(spec);
    let mut f = EndpointField::initial(d);
    let mut per_step = Vec::with_capacity(n_steps);
    let mut cesaro = Vec::with_capacity(n_steps);
    let mut free_energy = Vec::with_capacity(n_steps);
    let mut acc = 0.0;
    let replica_seed = split_seed(seed, u64::MAX);
    for i in 0..n_steps {
        // estimate R(f_i) before stepping
        let est = if beta == 0.0 {
            EnergyEstimate {
                mean: 0.0,
                stderr: 0.0,
                replicas,
                analytic: Some(0.0),
            }
        } else {
            let values = energy_r_field(&f, &sampler, beta, replicas, replica_seed, i);
            let ms = mean_stderr(&values);
            EnergyEstimate {
                mean: ms.mean,
                stderr: ms.stderr,
                replicas,
                analytic: if i == 0 {
                    analytic_log_z1(spec, beta, d)
                } else {
                    None
                },
            }
        };
        acc += est.mean;
        cesaro.push(acc / (i + 1) as f64);
        per_step.push(est);
        f = crate::lattice::step_endpoint(&f, spec, beta, seed)?;
        free_energy.push(f.free_energy());
    }
    Ok(IterateReport {
        per_step,
        cesaro,
        free_energy,
    })
}

/// Replica values of log((2d)^{-1} sum_x g_i(x) e^{beta Y_x}) for a full
/// probability field (no correction term needed).
fn energy_r_field(
    f: &EndpointField,
    sampler: &Sampler,
    beta: f64,
    replicas: usize,
    seed: u64,
    step_index: usize,
) -> Vec<f64> {
    // half_step gives ghat = g / 2d summing to 1, and
    // log((2d)^{-1} sum g e^{bY}) = log(sum ghat e^{bY}).
    let next = crate::lattice::half_step(f).expect("smoothing");
    let dia = next.diamond();
    let g = next.masses();
    (0..replicas)
        .map(|r| {
            let mut h0 = key_begin(seed, ENERGY_TAG);
            h0 = key_push(h0, step_index as i64);
            h0 = key_push(h0, r as i64);
            let mut max_by = f64::NEG_INFINITY;
            let mut sum = 0.0;
            let mut comp = 0.0;
            // two passes would need the draws stored; instead draw once per
            // site into a running log-sum-exp with rescaling
            dia.for_each_row(|prefix, row| {
                let mut h = h0;
                for &c in prefix {
                    h = key_push(h, c);
                }
                for k in 0..row.count {
                    let gv = g[row.start + k];
                    if gv <= 0.0 {
                        continue;
                    }
                    let z = row.z_min + 2 * k as i64;
                    let by = beta * sampler.draw(key_finish(key_push(h, z)));
                    // rescale the running sum when a new max appears
                    if by > max_by {
                        let scale = (max_by - by).exp();
                        sum *= scale;
                        comp *= scale;
                        max_by = by;
                    }
                    let term = gv * (by - max_by).exp();
                    let y = term - comp;
                    let t = sum + y;
                    comp = (t - sum) - y;
                    sum = t;
                }
            });
            max_by + sum.ln()
        })
        .collect()
}

/// Closed-form or quadrature value of E log Z_1 when available:
/// exact finite sums for bounded discrete laws, tensor quadrature for the
/// continuous laws in one dimension.
pub fn analytic_log_z1(spec: &DisorderSpec, beta: f64, d: usize) -> Option<f64> {
    let two_d = 2 * d;
    match spec {
        DisorderSpec::BernoulliPm { p } => {
            // group the 2^{2d} sign vectors by their number of +1 entries
            let mut value = 0.0;
            let ln_choose = |n: usize, k: usize| -> f64 {
                let lf = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
                lf(n) - lf(k) - lf(n - k)
            };
            for k in 0..=two_d {
                let prob = (ln_choose(two_d, k)
                    + k as f64 * p.ln()
                    + (two_d - k) as f64 * (1.0 - p).ln())
                .exp();
                let z1 = (k as f64 * beta.exp() + (two_d - k) as f64 * (-beta).exp())
                    / two_d as f64;
                value += prob * z1.ln();
            }
            Some(value)
        }
        DisorderSpec::TableLaw {
            values,
            probabilities,
        } => {
            let t = values.len();
            if (t as f64).powi(two_d as i32) > 2e6 {
                return None;
            }
            // enumerate assignments of the 2d neighbor sites
            let mut total = 0.0;
            let mut idx = vec![0usize; two_d];
            loop {
                let mut prob = 1.0;
                let mut z1 = 0.0;
                for &i in &idx {
                    prob *= probabilities[i];
                    z1 += (beta * values[i]).exp();
                }
                total += prob * (z1 / two_d as f64).ln();
                // odometer
                let mut pos = 0;
                loop {
                    if pos == two_d {
                        return Some(total);
                    }
                    idx[pos] += 1;
                    if idx[pos] < t {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        }
        DisorderSpec::Gaussian { mean, stddev } if d == 1 => {
            Some(quadrature_log_z1_pair(|u| mean + stddev * norm_quantile(u), beta))
        }
        DisorderSpec::Uniform { a, b } if d == 1 => {
            Some(quadrature_log_z1_pair(|u| a + u * (b - a), beta))
        }
        _ => None,
    }
}

/// E log((e^{beta Y1} + e^{beta Y2})/2) by tensor midpoint quadrature in
/// the uniform variables.
fn quadrature_log_z1_pair(inv_cdf: impl Fn(f64) -> f64, beta: f64) -> f64 {
    const N: usize = 2048;
    let ey: Vec<f64> = (0..N)
        .map(|i| {
            let u = (i as f64 + 0.5) / N as f64;
            (beta * inv_cdf(u)).exp()
        })
        .collect();
    let mut total = 0.0;
    for a in &ey {
        let mut row = 0.0;
        for b in &ey {
            row += ((a + b) / 2.0).ln();
        }
        total += row;
    }
    total / (N * N) as f64
}
