use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use topotrack::batch::{normalize_and_threshold, run_batch, tune_kappas};
use topotrack::{GridTopology, PriceMatrix};
use topotrack_bench::io::{read_matrix_csv, write_json, write_matrix_csv, RunDir};
use topotrack_bench::{evaluate, run_tracking_experiment, simulate, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "topotrack",
    version,
    about = "Grid topology recovery from nodal prices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clear the market for every interval and write the price matrix.
    Simulate(Common),
    /// Run batch recovery at one (κ1, κ2).
    RecoverBatch {
        #[command(flatten)]
        common: Common,
        /// Use this price matrix instead of simulating.
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Sweep (κ1, κ2) over the configured grid and report average degrees.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Stream prices with a mid-horizon topology change through the online tracker.
    Track(Common),
    /// Score an estimate against a grid.
    Eval {
        /// Estimate as headerless CSV.
        #[arg(long)]
        estimate: PathBuf,
        /// Grid JSON; the bundled IEEE 30-bus grid when absent.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "runs/latest")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    kappa1: Option<f64>,
    #[arg(long)]
    kappa2: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl Common {
    fn config(&self) -> anyhow::Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.days {
            c.days = v;
            c.tracking.days = v;
        }
        if let Some(v) = self.kappa1 {
            c.recovery.kappa1 = v;
        }
        if let Some(v) = self.kappa2 {
            c.recovery.kappa2 = v;
        }
        if let Some(v) = self.rho {
            c.recovery.rho = v;
        }
        if let Some(v) = self.max_iters {
            c.recovery.max_iters = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn load_or_simulate(
    scenario: &Scenario,
    prices: &Option<PathBuf>,
    run: &mut RunDir,
) -> anyhow::Result<PriceMatrix> {
    match prices {
        Some(p) => {
            Ok(PriceMatrix::load(p).with_context(|| format!("reading prices {}", p.display()))?)
        }
        None => {
            let sim = simulate(scenario)?;
            write_json(&run.file("simulation.json"), &sim.summary)?;
            let pm = sim.price_matrix(scenario)?;
            pm.save(run.file("prices.csv"))?;
            Ok(pm)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Simulate(common) => {
            let config = common.config()?;
            let scenario = Scenario::new(config.clone())?;
            let mut run = RunDir::create(&common.out)?;
            let sim = simulate(&scenario)?;
            let pm = sim.price_matrix(&scenario)?;
            pm.save(run.file("prices.csv"))?;
            let outcomes: Vec<_> = sim
                .outcomes
                .iter()
                .map(|(t, o)| serde_json::json!({"interval": t, "outcome": o}))
                .collect();
            write_json(&run.file("outcomes.json"), &outcomes)?;
            write_json(&run.file("simulation.json"), &sim.summary)?;
            run.write_manifest("simulate", &config)?;
            println!(
                "{} intervals: {} congested, {} uncongested, {} infeasible; price matrix {}x{}",
                sim.summary.intervals,
                sim.summary.congested,
                sim.summary.uncongested,
                sim.summary.infeasible,
                pm.bus_count(),
                pm.horizon()
            );
        }
        Command::RecoverBatch { common, prices } => {
            let config = common.config()?;
            let scenario = Scenario::new(config.clone())?;
            let mut run = RunDir::create(&common.out)?;
            let pm = load_or_simulate(&scenario, &prices, &mut run)?;
            let solve_start = Instant::now();
            let outcome = run_batch(&pm.values, &config.recovery)?;
            let wall = solve_start.elapsed().as_secs_f64();
            write_matrix_csv(&run.file("b_hat.csv"), &outcome.b_hat)?;
            let support = normalize_and_threshold(&outcome.b_hat, config.recovery.threshold_tau)?;
            write_json(&run.file("edges.json"), &support.edges)?;
            write_json(
                &run.file("diagnostics.json"),
                &serde_json::json!({
                    "iterations": outcome.iterations(),
                    "status": outcome.status,
                    "primal_tol": outcome.primal_tol,
                    "residuals": outcome.state.residuals,
                }),
            )?;
            let report = evaluate(
                &outcome.b_hat,
                &scenario.topology,
                config.recovery.threshold_tau,
            )?;
            write_json(&run.file("report.json"), &report)?;
            write_json(
                &run.path.join("timing.json"),
                &serde_json::json!({"solve_seconds": wall}),
            )?;
            run.write_manifest("recover-batch", &config)?;
            println!(
                "{} iterations ({:?}); average degree {:.2}; edge F1 {:.3}",
                outcome.iterations(),
                outcome.status,
                support.average_degree(),
                report.edge_f1
            );
        }
        Command::Sweep { common, prices } => {
            let config = common.config()?;
            let scenario = Scenario::new(config.clone())?;
            let mut run = RunDir::create(&common.out)?;
            let pm = load_or_simulate(&scenario, &prices, &mut run)?;
            let sweep = tune_kappas(
                &pm.values,
                &config.kappa_grid,
                config.target_degree,
                &config.recovery,
            )?;
            let mut w = csv::Writer::from_path(run.file("degree_table.csv"))?;
            let mut header = vec!["kappa1".to_string()];
            header.extend(sweep.grid.iter().map(|k| format!("kappa2={k}")));
            w.write_record(&header)?;
            for (k1, row) in sweep.grid.iter().zip(sweep.degree_table()) {
                let mut rec = vec![k1.to_string()];
                rec.extend(row.iter().map(|d| format!("{d:.4}")));
                w.write_record(&rec)?;
            }
            w.flush()?;
            write_json(&run.file("sweep.json"), &sweep)?;
            run.write_manifest("sweep", &config)?;
            for (k1, row) in sweep.grid.iter().zip(sweep.degree_table()) {
                let cells: Vec<String> = row.iter().map(|d| format!("{d:5.2}")).collect();
                println!("κ1={k1:<6} {}", cells.join(" "));
            }
            println!(
                "closest to {}: κ1={}, κ2={}",
                config.target_degree, sweep.best.0, sweep.best.1
            );
        }
        Command::Track(common) => {
            let config = common.config()?;
            let scenario = Scenario::new(config.clone())?;
            let mut run = RunDir::create(&common.out)?;
            let exp = run_tracking_experiment(&scenario)?;
            exp.tracker
                .write_trace_csv(std::fs::File::create(run.file("trace.csv"))?)?;
            write_matrix_csv(&run.file("b_final.csv"), &exp.tracker.state.b1)?;
            write_matrix_csv(&run.file("warm_start.csv"), &exp.warm_start)?;
            exp.prices.save(run.file("prices.csv"))?;
            write_json(&run.file("tracking.json"), &exp.report)?;
            run.write_manifest("track", &config)?;
            let r = &exp.report;
            println!(
                "{} steps, {} after the change at interval {}",
                r.horizon, r.post_event_steps, r.event_interval
            );
            for (label, list) in [
                ("removed", &r.removed),
                ("added", &r.added),
                ("watch", &r.persistent),
            ] {
                for w in list {
                    println!(
                        "{label:8} {:?}: before {:.4}, crossing after {:?} steps, final {:.4}, min {:.4}",
                        w.buses, w.pre_event, w.first_crossing, w.final_value, w.minimum
                    );
                }
            }
        }
        Command::Eval {
            estimate,
            grid,
            tau,
            out,
        } => {
            let b_hat = read_matrix_csv(&estimate)?;
            let topo = match grid {
                Some(p) => GridTopology::load(&p)
                    .with_context(|| format!("loading grid {}", p.display()))?,
                None => GridTopology::ieee30(),
            };
            let report = evaluate(&b_hat, &topo, tau)?;
            let text = serde_json::to_string_pretty(&report)?;
            if let Some(dir) = out {
                let mut run = RunDir::create(dir)?;
                write_json(&run.file("report.json"), &report)?;
                run.write_manifest(
                    "eval",
                    &serde_json::json!({"estimate": estimate, "tau": tau}),
                )?;
            }
            println!("{text}");
        }
    }
    eprintln!("done in {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err.chain().any(|e| {
                e.downcast_ref::<topotrack::Error>()
                    .is_some_and(|e| e.is_numerical())
            });
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}
