//! Small statistics helpers: sample means with standard errors and
//! Kolmogorov-Smirnov tests used by the Monte Carlo checks.

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> MeanStderr {
    let n = xs.len();
    assert!(n >= 1, "mean_stderr needs at least one sample");
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanStderr {
            mean,
            stderr: 0.0,
            n,
        };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    MeanStderr {
        mean,
        stderr: (var / n as f64).sqrt(),
        n,
    }
}

/// Pearson correlation coefficient.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Survival function of the Kolmogorov distribution,
/// `Q(t) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 t^2)`.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64).powi(2) * t * t).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Outcome of a KS test.
#[derive(Clone, Copy, Debug)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    // Stephens' small-sample correction to the asymptotic distribution.
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS test of `samples` against a distribution given by its CDF
/// and its left limit `F(x-)`. For continuous laws pass the same function
/// twice; for discrete laws the left limit makes the statistic exact.
pub fn ks_one_sample<F, G>(samples: &mut [f64], cdf: F, cdf_left: G) -> KsResult
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let n = samples.len();
    assert!(n > 0);
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let v = samples[i];
        let mut j = i;
        while j < n && samples[j] == v {
            j += 1;
        }
        // Empirical CDF is i/n just below v and j/n at v.
        let lo = i as f64 / nf;
        let hi = j as f64 / nf;
        d = d.max((hi - cdf(v)).abs()).max((lo - cdf_left(v)).abs());
        i = j;
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, nf),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty());
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
    }
}
