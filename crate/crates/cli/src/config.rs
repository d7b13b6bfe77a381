//! Experiment configuration: one JSON file drives every subcommand.
//!
//! Schema (defaults in parentheses):
//! ```json
//! {
//!   "dimension": 1,
//!   "beta": 1.0,                     // simulate / fixed-point
//!   "beta_grid": [0.25, 0.5, 1.0],   // scan
//!   "disorder": {"kind": "gaussian", "mean": 0.0, "stddev": 1.0},
//!     // kinds: gaussian{mean,stddev} | bernoulli_pm{p} (p = P(X=+1))
//!     //        | uniform{a,b} | table_law{values,probabilities}
//!   "n_steps": 100,
//!   "base_seed": 42,                 // replica r uses split_seed(base_seed, r)
//!   "replica_count": 1,
//!   "thinning": 0,                   // snapshot stride, 0 = none
//!   "k_top": 16,                     // snapshot truncation
//!   "eps_grid": [0.1, 0.01, 0.001, 0.0001],
//!   "delta_grid": [0.5],
//!   "k_grid": [20],
//!   "site_budget": 100000000,
//!   "formats": ["csv", "ndjson"],
//!   "profiles": {"fixture": "qn", "input": null,
//!                "k_max": 16, "window": 3, "threshold": 32.0, "floor": 0.0001},
//!   "metric_check": {"pairs": 500, "triples": 200, "seed": 1, "k_top": 16},
//!   "fixed_point": {"probes": [32, 64, 128, 256, 512],
//!                   "k_top": 16, "radius": 32, "floor": 1e-9},
//!   "plot": {"input": "...", "x": "step", "y": ["F"], "output": "plot.svg",
//!            "kind": "line", "title": ""}
//! }
//! ```

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use polymer_core::disorder::DisorderSpec;
use polymer_core::lattice::{RunParams, DEFAULT_EPS_GRID, DEFAULT_SITE_BUDGET};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub beta_grid: Option<Vec<f64>>,
    pub disorder: DisorderSpec,
    pub n_steps: usize,
    pub base_seed: u64,
    #[serde(default = "default_replicas")]
    pub replica_count: usize,
    #[serde(default)]
    pub thinning: usize,
    #[serde(default = "default_k_top")]
    pub k_top: usize,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<u64>,
    #[serde(default = "default_site_budget")]
    pub site_budget: u128,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    #[serde(default)]
    pub profiles: ProfilesConfig,
    #[serde(default)]
    pub metric_check: MetricCheckConfig,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub plot: Option<PlotConfig>,
}

fn default_replicas() -> usize {
    1
}
fn default_k_top() -> usize {
    16
}
fn default_eps_grid() -> Vec<f64> {
    DEFAULT_EPS_GRID.to_vec()
}
fn default_delta_grid() -> Vec<f64> {
    vec![0.5]
}
fn default_k_grid() -> Vec<u64> {
    vec![20]
}
fn default_site_budget() -> u128 {
    DEFAULT_SITE_BUDGET
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "ndjson".into()]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesConfig {
    /// Bundled family: "qn" or "rn"; overridden by `input`.
    #[serde(default)]
    pub fixture: Option<String>,
    /// NDJSON file of sparse fields, one per line.
    #[serde(default)]
    pub input: Option<String>,
    #[serde(default = "default_profile_k_max")]
    pub k_max: usize,
    #[serde(default = "default_profile_window")]
    pub window: usize,
    #[serde(default = "default_profile_threshold")]
    pub threshold: f64,
    #[serde(default = "default_profile_floor")]
    pub floor: f64,
}

fn default_profile_k_max() -> usize {
    16
}
fn default_profile_window() -> usize {
    3
}
fn default_profile_threshold() -> f64 {
    32.0
}
fn default_profile_floor() -> f64 {
    1e-4
}

impl Default for ProfilesConfig {
    fn default() -> Self {
        ProfilesConfig {
            fixture: Some("qn".into()),
            input: None,
            k_max: default_profile_k_max(),
            window: default_profile_window(),
            threshold: default_profile_threshold(),
            floor: default_profile_floor(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricCheckConfig {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_triples")]
    pub triples: usize,
    #[serde(default = "default_one")]
    pub seed: u64,
    #[serde(default = "default_k_top")]
    pub k_top: usize,
}

fn default_pairs() -> usize {
    500
}
fn default_triples() -> usize {
    200
}
fn default_one() -> u64 {
    1
}

impl Default for MetricCheckConfig {
    fn default() -> Self {
        MetricCheckConfig {
            pairs: default_pairs(),
            triples: default_triples(),
            seed: default_one(),
            k_top: default_k_top(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    #[serde(default = "default_probes")]
    pub probes: Vec<usize>,
    #[serde(default = "default_k_top")]
    pub k_top: usize,
    #[serde(default = "default_radius")]
    pub radius: u64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Replicas per step for the energy series along the iteration from
    /// the unit point mass; 0 disables the series.
    #[serde(default = "default_energy_replicas")]
    pub energy_replicas: usize,
}

fn default_energy_replicas() -> usize {
    64
}

fn default_probes() -> Vec<usize> {
    vec![32, 64, 128, 256, 512]
}
fn default_radius() -> u64 {
    32
}
fn default_floor() -> f64 {
    1e-9
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            probes: default_probes(),
            k_top: default_k_top(),
            radius: default_radius(),
            floor: default_floor(),
            energy_replicas: default_energy_replicas(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotConfig {
    pub input: String,
    pub x: String,
    pub y: Vec<String>,
    pub output: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub title: String,
}

fn default_kind() -> String {
    "line".into()
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 1 {
            bail!("config.dimension: must be at least 1");
        }
        if self.n_steps < 1 {
            bail!("config.n_steps: must be at least 1");
        }
        if self.replica_count < 1 {
            bail!("config.replica_count: must be at least 1");
        }
        if let Some(beta) = self.beta {
            if beta < 0.0 {
                bail!("config.beta: must be nonnegative");
            }
        }
        if let Some(grid) = &self.beta_grid {
            if grid.is_empty() {
                bail!("config.beta_grid: must be nonempty");
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                bail!("config.beta_grid: must be strictly increasing");
            }
            if grid.iter().any(|b| *b < 0.0) {
                bail!("config.beta_grid: entries must be nonnegative");
            }
        }
        for (name, ok) in [
            ("eps_grid", sorted_strictly(&self.eps_grid)),
            ("delta_grid", sorted_strictly(&self.delta_grid)),
        ] {
            if !ok {
                bail!("config.{name}: must be nonempty unless unused, sorted, without repeats");
            }
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            bail!("config.k_grid: must be strictly increasing");
        }
        self.disorder
            .validate()
            .map_err(|e| anyhow::anyhow!("config.disorder: {e}"))?;
        for f in &self.formats {
            if f != "csv" && f != "ndjson" {
                bail!("config.formats: unknown format {f:?} (use \"csv\" or \"ndjson\")");
            }
        }
        Ok(())
    }

    /// Parameters for replica `r`.
    pub fn run_params(&self, beta: f64, replica: u64) -> RunParams {
        RunParams {
            d: self.dimension,
            beta,
            spec: self.disorder.clone(),
            n_steps: self.n_steps,
            seed: polymer_core::rng::split_seed(self.base_seed, replica),
            thinning: self.thinning,
            snapshot_k: self.k_top,
            eps_grid: self.eps_grid.clone(),
            delta_grid: self.delta_grid.clone(),
            k_grid: self.k_grid.clone(),
            site_budget: self.site_budget,
        }
    }

    pub fn single_beta(&self) -> Result<f64> {
        self.beta
            .ok_or_else(|| anyhow::anyhow!("config.beta: required for this command"))
    }
}

/// Grids may be monotone in either direction but must not repeat values.
fn sorted_strictly(grid: &[f64]) -> bool {
    grid.windows(2).all(|w| w[0] > w[1]) || grid.windows(2).all(|w| w[0] < w[1])
}
