//! Command-line front end: config-driven simulations, delta sweeps, and
//! closed-form reports.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use chainbandit::chart::{self, Series};
use chainbandit::config::{load_config, LoadedConfig};
use chainbandit::results;
use chainbandit::sim::{run_experiment, sweep_delta, CellFailure, ExperimentConfig};
use chainbandit::{
    perturb_toward, regret_lower_bound, stationary_distribution, verify_theorem1, Perturbation,
};

#[derive(Parser)]
#[command(name = "chainbandit", version, about = "Bandit simulations over a biased Markov walker")]
struct Cli {
    /// Override the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid; write traces CSV and per-delta regret SVGs.
    Simulate { config: PathBuf },
    /// Run the delta sweep; write the sweep table CSV and SVG.
    Sweep { config: PathBuf },
    /// Print the per-step reward ceiling and regret floor per delta.
    Bound { config: PathBuf },
    /// Print the unbiased stationary distribution and its biased variants.
    Stationary { config: PathBuf },
    /// Score all single-target biases and check the best-arm optimality.
    VerifyTheorem1 { config: PathBuf },
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn load(path: &Path, cli: &Cli) -> anyhow::Result<LoadedConfig> {
    let mut loaded = load_config(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        loaded.experiment.seed = seed;
    }
    if let Some(out) = &cli.out {
        loaded.output_dir = out.clone();
    }
    Ok(loaded)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Simulate { config } => simulate(&load(config, &cli)?, cli.quiet),
        Command::Sweep { config } => sweep(&load(config, &cli)?, cli.quiet),
        Command::Bound { config } => bound(&load(config, &cli)?.experiment),
        Command::Stationary { config } => stationary(&load(config, &cli)?.experiment),
        Command::VerifyTheorem1 { config } => theorem1(&load(config, &cli)?.experiment),
    }
}

fn delta_tag(delta: f64) -> String {
    // shortest round-trip Display; "." would read as a file extension
    format!("{delta}").replace('.', "_")
}

fn report_failures(failures: &[CellFailure]) -> anyhow::Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    for f in failures.iter().take(5) {
        eprintln!(
            "cell failed: policy={} delta={} rep={}: {}",
            f.policy, f.delta, f.replication, f.error
        );
    }
    bail!("{} of the experiment cells failed", failures.len());
}

fn simulate(loaded: &LoadedConfig, quiet: bool) -> anyhow::Result<()> {
    let config = &loaded.experiment;
    if config.policies.is_empty() {
        bail!("`simulate` needs at least one entry in `policies`");
    }
    std::fs::create_dir_all(&loaded.output_dir)
        .with_context(|| format!("creating {}", loaded.output_dir.display()))?;
    let result = run_experiment(config);

    let csv_path = loaded.output_dir.join("results.csv");
    results::write_results(&result.traces, &csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    if !quiet {
        println!("wrote {}", csv_path.display());
    }

    for &delta in &config.deltas {
        let series: Vec<Series> = result
            .curves
            .iter()
            .filter(|c| c.delta == delta)
            .map(|c| Series {
                label: c.policy.clone(),
                points: c
                    .mean_realized
                    .iter()
                    .enumerate()
                    .map(|(t, &v)| ((t + 1) as f64, v))
                    .collect(),
            })
            .collect();
        if series.is_empty() {
            continue;
        }
        let svg_path = loaded
            .output_dir
            .join(format!("regret_delta_{}.svg", delta_tag(delta)));
        chart::write_svg(
            &svg_path,
            &format!("Mean cumulative regret, delta = {delta}"),
            "t",
            "C_t",
            &series,
        )
        .with_context(|| format!("writing {}", svg_path.display()))?;
        if !quiet {
            println!("wrote {}", svg_path.display());
        }
    }

    if !quiet {
        println!(
            "{:<8} {:>8} {:>6} {:>14} {:>12}",
            "policy", "delta", "reps", "final C_T", "std err"
        );
        for c in &result.curves {
            println!(
                "{:<8} {:>8} {:>6} {:>14.3} {:>12.3}",
                c.policy,
                c.delta,
                c.replications,
                c.final_mean_realized(),
                c.final_se_realized()
            );
        }
    }
    report_failures(&result.failures)
}

fn sweep(loaded: &LoadedConfig, quiet: bool) -> anyhow::Result<()> {
    let config = &loaded.experiment;
    if config.policies.is_empty() {
        bail!("`sweep` needs at least one entry in `policies`");
    }
    let (rows, failures) = sweep_delta(config)?;
    std::fs::create_dir_all(&loaded.output_dir)
        .with_context(|| format!("creating {}", loaded.output_dir.display()))?;

    let csv_path = loaded.output_dir.join("sweep.csv");
    results::write_sweep(&rows, &csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;

    let mut series: Vec<Series> = Vec::new();
    for row in &rows {
        match series.iter_mut().find(|s| s.label == row.policy) {
            Some(s) => s.points.push((row.delta, row.final_mean_realized)),
            None => series.push(Series {
                label: row.policy.clone(),
                points: vec![(row.delta, row.final_mean_realized)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let svg_path = loaded.output_dir.join("sweep.svg");
    chart::write_svg(
        &svg_path,
        "Final mean cumulative regret vs delta",
        "delta",
        "final C_T",
        &series,
    )
    .with_context(|| format!("writing {}", svg_path.display()))?;

    if !quiet {
        println!("wrote {}", csv_path.display());
        println!("wrote {}", svg_path.display());
        println!(
            "{:<8} {:>8} {:>14} {:>12}",
            "policy", "delta", "final C_T", "std err"
        );
        for row in &rows {
            println!(
                "{:<8} {:>8} {:>14.3} {:>12.3}",
                row.policy, row.delta, row.final_mean_realized, row.final_se_realized
            );
        }
    }
    report_failures(&failures)
}

fn bound(config: &ExperimentConfig) -> anyhow::Result<()> {
    for &delta in &config.deltas {
        let report = regret_lower_bound(&config.matrix, &config.rewards, delta, config.horizon)?;
        println!("delta = {delta} (bias target: arm {})", report.target + 1);
        println!("  mu_star       = {:.6}", report.mu_star);
        println!("  mu_tilde      = {:.6}", report.mu_tilde);
        println!("  per-step gap  = {:.6}", report.per_step_gap);
        println!(
            "  regret floor  = {:.6}  (T = {})",
            report.bound_at_horizon, config.horizon
        );
        let probs: Vec<String> = report
            .nu_delta
            .probs()
            .iter()
            .map(|p| format!("{p:.6}"))
            .collect();
        println!("  nu_delta      = [{}]", probs.join(", "));
    }
    Ok(())
}

fn stationary(config: &ExperimentConfig) -> anyhow::Result<()> {
    let nu = stationary_distribution(&config.matrix)?;
    let probs: Vec<String> = nu.probs().iter().map(|p| format!("{p:.6}")).collect();
    println!("unbiased nu = [{}]", probs.join(", "));
    let target = config.rewards.best_arm();
    for &delta in &config.deltas {
        let pert = Perturbation::new(delta, target, config.matrix.k())?;
        let biased = stationary_distribution(&perturb_toward(&config.matrix, pert))?;
        let probs: Vec<String> = biased.probs().iter().map(|p| format!("{p:.6}")).collect();
        println!(
            "delta = {delta}, biased toward arm {}: nu = [{}]",
            target + 1,
            probs.join(", ")
        );
    }
    Ok(())
}

fn print_target_table(config: &ExperimentConfig, rewards_table: &[f64], best: usize) {
    println!("  {:>6} {:>18} {:>12}", "target", "stationary reward", "true mean");
    for (l, &v) in rewards_table.iter().enumerate() {
        let marker = if l == best { "  <- best" } else { "" };
        println!(
            "  {:>6} {:>18.6} {:>12.6}{marker}",
            l + 1,
            v,
            config.rewards.true_mean(l)
        );
    }
}

fn theorem1(config: &ExperimentConfig) -> anyhow::Result<()> {
    let mut violations = 0usize;
    for &delta in &config.deltas {
        println!("delta = {delta}");
        match verify_theorem1(&config.matrix, &config.rewards, delta) {
            Ok(table) => {
                print_target_table(config, &table.stationary_rewards, table.best_target);
                println!(
                    "  verdict: best single-target bias is arm {}, the best-mean arm",
                    table.best_target + 1
                );
            }
            Err(chainbandit::bounds::TheoremError::Violation {
                expected,
                found,
                stationary_rewards,
            }) => {
                print_target_table(config, &stationary_rewards, found);
                println!(
                    "  verdict: VIOLATED - best single-target bias is arm {}, not the \
                     best-mean arm {}",
                    found + 1,
                    expected + 1
                );
                violations += 1;
            }
            Err(other) => return Err(other.into()),
        }
    }
    if violations > 0 {
        bail!("single-target optimality violated for {violations} delta value(s)");
    }
    Ok(())
}
