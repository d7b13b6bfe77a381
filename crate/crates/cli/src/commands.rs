//! Subcommand implementations: each is a thin orchestration layer over the
//! library, with deterministic fixed-order aggregation so outputs do not
//! depend on the worker count.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use polymer_core::disorder::log_mgf;
use polymer_core::empirical::fixed_point_residual;
use polymer_core::field::SparseField;
use polymer_core::lattice::{run_polymer, TrajectoryRecord};
use polymer_core::metric::{distance_exact, distance_upper};
use polymer_core::profiles::{extract_sequence, qn_field, rn_field, ProfileParams};
use polymer_core::pspm::Pspm;
use polymer_core::rng::{split_seed, SplitMix64};
use polymer_core::stats::mean_stderr;

use crate::config::ExperimentConfig;

fn write_trajectory(
    config: &ExperimentConfig,
    out_dir: &Path,
    replica: u64,
    traj: &TrajectoryRecord,
) -> Result<()> {
    if config.formats.iter().any(|f| f == "csv") {
        let path = out_dir.join(format!("traj_r{replica}.csv"));
        let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
        traj.write_csv(&mut file)?;
    }
    if config.formats.iter().any(|f| f == "ndjson") {
        let path = out_dir.join(format!("traj_r{replica}.ndjson"));
        let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
        traj.write_ndjson(&mut file)?;
    }
    Ok(())
}

/// `simulate`: one trajectory per replica, written as CSV and/or NDJSON.
pub fn simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let beta = config.single_beta()?;
    fs::create_dir_all(out_dir)?;
    let trajectories: Vec<TrajectoryRecord> = (0..config.replica_count as u64)
        .into_par_iter()
        .map(|r| run_polymer(&config.run_params(beta, r)))
        .collect::<polymer_core::Result<_>>()?;
    for (r, traj) in trajectories.iter().enumerate() {
        write_trajectory(config, out_dir, r as u64, traj)?;
    }
    let final_f: Vec<f64> = trajectories.iter().map(|t| t.final_free_energy()).collect();
    let ms = mean_stderr(&final_f);
    println!(
        "simulate: {} replicas, n = {}, beta = {}: F_n = {} +- {}",
        config.replica_count, config.n_steps, beta, ms.mean, ms.stderr
    );
    Ok(())
}

/// `scan`: one row per beta with free-energy and localization summaries.
pub fn scan(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let grid = config
        .beta_grid
        .clone()
        .ok_or_else(|| anyhow::anyhow!("config.beta_grid: required for scan"))?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("scan.csv");
    let mut file = std::io::BufWriter::new(fs::File::create(&path)?);

    let mut header = vec![
        "beta".to_string(),
        "p_hat".to_string(),
        "p_stderr".to_string(),
        "c_beta".to_string(),
        "lambda_hat".to_string(),
        "cesaro_max".to_string(),
        "cesaro_overlap".to_string(),
    ];
    for e in &config.eps_grid {
        header.push(format!("cesaro_eps_mass@{e}"));
    }
    for dl in &config.delta_grid {
        for k in &config.k_grid {
            header.push(format!("cesaro_g_fraction@{dl}-{k}"));
        }
    }
    for k in &config.k_grid {
        header.push(format!("cesaro_favmass@{k}"));
    }
    writeln!(file, "{}", header.join(","))?;

    let mut crossover: Option<(f64, f64)> = None; // (beta, lambda in stderr units)
    let mut last_flat: Option<f64> = None;
    for &beta in &grid {
        let trajectories: Vec<TrajectoryRecord> = (0..config.replica_count as u64)
            .into_par_iter()
            .map(|r| run_polymer(&config.run_params(beta, r)))
            .collect::<polymer_core::Result<_>>()?;
        let n = config.n_steps;
        let f_vals: Vec<f64> = trajectories.iter().map(|t| t.final_free_energy()).collect();
        let p = mean_stderr(&f_vals);
        let c_beta = log_mgf(&config.disorder, beta)
            .with_context(|| format!("c(beta) at beta = {beta}"))?;
        let lambda_hat = c_beta - p.mean;
        if lambda_hat < -4.0 * p.stderr {
            bail!(
                "scan invariant violated at beta = {beta}: lambda_hat = {lambda_hat} \
                 below -4 stderr = {}",
                -4.0 * p.stderr
            );
        }
        let mean_over = |f: &dyn Fn(&TrajectoryRecord) -> f64| -> f64 {
            let vals: Vec<f64> = trajectories.iter().map(|t| f(t)).collect();
            mean_stderr(&vals).mean
        };
        let cesaro_max = mean_over(&|t| t.cesaro(n, |s| s.max_atom));
        let cesaro_overlap = mean_over(&|t| t.cesaro(n, |s| s.overlap));
        let mut row = format!(
            "{beta},{},{},{c_beta},{lambda_hat},{cesaro_max},{cesaro_overlap}",
            p.mean, p.stderr
        );
        for (i, _) in config.eps_grid.iter().enumerate() {
            row.push_str(&format!(",{}", mean_over(&|t| t.cesaro(n, |s| s.eps_mass[i]))));
        }
        for (di, _) in config.delta_grid.iter().enumerate() {
            for (ki, _) in config.k_grid.iter().enumerate() {
                let idx = di * config.k_grid.len() + ki;
                row.push_str(&format!(
                    ",{}",
                    mean_over(&|t| t.cesaro(n, |s| if s.g_member[idx] { 1.0 } else { 0.0 }))
                ));
            }
        }
        for (ki, _) in config.k_grid.iter().enumerate() {
            row.push_str(&format!(
                ",{}",
                mean_over(&|t| t.cesaro(n, |s| s.favorite_mass[ki]))
            ));
        }
        writeln!(file, "{row}")?;
        println!(
            "scan: beta = {beta}: p_hat = {:.5} +- {:.5}, lambda_hat = {lambda_hat:.5}",
            p.mean, p.stderr
        );
        // crossover bookkeeping: first beta where lambda is significantly
        // positive (two standard errors), with the last flat beta before it
        if crossover.is_none() {
            if p.stderr > 0.0 && lambda_hat > 2.0 * p.stderr {
                crossover = Some((beta, lambda_hat / p.stderr));
            } else {
                last_flat = Some(beta);
            }
        }
    }
    // the crossover estimate is reported, never asserted: the grid only
    // brackets where the Lyapunov exponent leaves zero at this run's noise
    match (crossover, last_flat) {
        (Some((beta, sigmas)), Some(lo)) => println!(
            "scan: empirical crossover estimate: lambda first significantly positive at \
             beta = {beta} ({sigmas:.1} se); bracketing interval ({lo}, {beta}]"
        ),
        (Some((beta, sigmas)), None) => println!(
            "scan: lambda already significantly positive at the smallest grid point \
             beta = {beta} ({sigmas:.1} se); crossover below the grid"
        ),
        _ => println!(
            "scan: lambda not significantly positive anywhere on the grid; \
             crossover above the grid or beyond this run's resolution"
        ),
    }
    println!("scan: wrote {}", path.display());
    Ok(())
}

/// `profiles`: extract the profile decomposition of a snapshot sequence
/// (bundled fixture or NDJSON input) and write it as measure JSON.
pub fn profiles(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let pc = &config.profiles;
    let sequence: Vec<SparseField> = if let Some(input) = &pc.input {
        let text = fs::read_to_string(input).with_context(|| format!("reading {input}"))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<SparseField>(l).context("parsing sparse field"))
            .collect::<Result<_>>()?
    } else {
        match pc.fixture.as_deref() {
            Some("qn") => (64..=256).map(qn_field).collect(),
            Some("rn") => (64..=256).map(rn_field).collect(),
            other => bail!("config.profiles: unknown fixture {other:?} (use \"qn\" or \"rn\")"),
        }
    };
    let params = ProfileParams {
        k_max: pc.k_max,
        stabilization_window: pc.window,
        divergence_threshold: pc.threshold,
        mass_floor: pc.floor,
    };
    let out = extract_sequence(&sequence, &params)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("profile.json");
    fs::write(&path, out.pspm.to_json_string())?;
    for (k, l) in &out.unclassified {
        eprintln!("warning: order-statistic pair ({k},{l}) neither stabilized nor diverged; treated as diverging");
    }
    println!(
        "profiles: {} parts, total mass {}, wrote {}",
        out.pspm.parts().len(),
        out.pspm.total_mass(),
        path.display()
    );
    Ok(())
}

/// `metric-check`: the oracle-comparison harness. Emits one CSV row per
/// random pair and fails on any triangle-inequality violation.
pub fn metric_check(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mc = &config.metric_check;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("metric_check.csv");
    let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(file, "case_id,d_exact,d_upper,gap,n_atoms_f,n_atoms_g")?;
    let mut rng = SplitMix64::new(mc.seed);
    let mut gaps = Vec::with_capacity(mc.pairs);
    for case in 0..mc.pairs {
        let f = random_measure(&mut rng, 12);
        let g = random_measure(&mut rng, 12);
        let exact = distance_exact(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?;
        let upper = distance_upper(&f, &g, mc.k_top);
        if upper < exact - 1e-15 {
            bail!("case {case}: upper bound {upper} below exact {exact}");
        }
        gaps.push(upper - exact);
        writeln!(
            file,
            "{case},{exact},{upper},{},{},{}",
            upper - exact,
            f.atom_count(),
            g.atom_count()
        )?;
    }
    let mut violations = 0usize;
    for _ in 0..mc.triples {
        let f = random_measure(&mut rng, 8);
        let g = random_measure(&mut rng, 8);
        let h = random_measure(&mut rng, 8);
        let fg = distance_exact(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?;
        let gh = distance_exact(&g, &h).map_err(|e| anyhow::anyhow!("{e}"))?;
        let fh = distance_exact(&f, &h).map_err(|e| anyhow::anyhow!("{e}"))?;
        if fh > fg + gh + 1e-12 {
            violations += 1;
        }
    }
    gaps.sort_by(|a, b| a.total_cmp(b));
    let median_gap = gaps[gaps.len() / 2];
    println!(
        "metric-check: {} pairs (median gap {median_gap:.4}), {} triples, \
         {violations} triangle violations, wrote {}",
        mc.pairs,
        mc.triples,
        path.display()
    );
    if violations > 0 {
        bail!("{violations} triangle-inequality violations");
    }
    Ok(())
}

fn random_measure(rng: &mut SplitMix64, max_atoms: usize) -> Pspm {
    let n_parts = 1 + rng.next_below(3) as usize;
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
    Pspm::new(
        1,
        parts
            .into_iter()
            .filter(|p| !p.is_empty())
            .enumerate()
            .map(|(l, atoms)| {
                (
                    l as u32,
                    atoms
                        .into_iter()
                        .map(|(s, m)| (s, m * scale))
                        .collect::<Vec<_>>(),
                )
            })
            .collect(),
    )
    .expect("valid random measure")
}

/// `fixed-point`: residual series per replica as CSV.
pub fn fixed_point(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let beta = config.single_beta()?;
    let fp = &config.fixed_point;
    let max_probe = *fp
        .probes
        .iter()
        .max()
        .ok_or_else(|| anyhow::anyhow!("config.fixed_point.probes: must be nonempty"))?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("fixed_point.csv");
    let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(file, "n,residual,flagged_upper_bound,seed")?;
    let series: Vec<Vec<polymer_core::empirical::ResidualPoint>> = (0..config.replica_count
        as u64)
        .into_par_iter()
        .map(|r| {
            let mut params = config.run_params(beta, r);
            params.n_steps = max_probe + 1;
            params.thinning = 1;
            let traj = run_polymer(&params)?;
            fixed_point_residual(
                &traj,
                &config.disorder,
                beta,
                split_seed(params.seed, 1),
                &fp.probes,
                fp.k_top,
                fp.radius,
                fp.floor,
            )
        })
        .collect::<polymer_core::Result<_>>()?;
    for points in &series {
        for p in points {
            writeln!(
                file,
                "{},{},{},{}",
                p.n, p.residual, p.flagged_upper, p.seed
            )?;
        }
    }
    println!(
        "fixed-point: {} replicas at probes {:?}, wrote {}",
        config.replica_count,
        fp.probes,
        path.display()
    );

    // energy series along the iteration from the unit point mass, whose
    // running Cesaro mean estimates the limiting free energy
    if fp.energy_replicas > 0 {
        let report = polymer_core::dynamics::iterate_from_point(
            &config.disorder,
            beta,
            config.dimension,
            max_probe + 1,
            split_seed(config.base_seed, u64::MAX / 2),
            fp.energy_replicas,
            config.site_budget,
        )?;
        let epath = out_dir.join("energy.csv");
        let mut efile = std::io::BufWriter::new(fs::File::create(&epath)?);
        writeln!(efile, "step,mean,stderr,replicas,analytic,cesaro")?;
        for (i, est) in report.per_step.iter().enumerate() {
            writeln!(
                efile,
                "{i},{},{},{},{},{}",
                est.mean,
                est.stderr,
                est.replicas,
                est.analytic.map_or(String::new(), |a| a.to_string()),
                report.cesaro[i]
            )?;
        }
        println!(
            "fixed-point: energy Cesaro mean {} after {} steps, wrote {}",
            report.final_cesaro(),
            report.per_step.len(),
            epath.display()
        );
    }
    Ok(())
}

/// `plot`: render CSV columns as an SVG chart; no computation.
pub fn plot(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let pc = config
        .plot
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config.plot: required for plot"))?;
    let table = crate::plot::read_csv(Path::new(&pc.input))?;
    let svg = crate::plot::render(&table, &pc.x, &pc.y, &pc.kind, &pc.title)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(&pc.output);
    fs::write(&path, svg)?;
    println!("plot: wrote {}", path.display());
    Ok(())
}
