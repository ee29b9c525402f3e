use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dvrft::evaluation::montecarlo::{write_records_csv, write_summary_csv};
use dvrft::evaluation::{monte_carlo, DistributedController, MonteCarloConfig};
use dvrft::experiment::{
    check_assumptions, check_realizable, evaluate_controller, exit_code, load_network,
    read_data_csv, run_experiment, seeded_data, synthesize_class, virtual_data, write_data_csv,
    write_traces_csv, ClassConfig, ExperimentConfig,
};
use dvrft::ideal::{build_ideal_controller, check_realizability};
use dvrft::identification::ExcitationThresholds;
use dvrft::lti::frequency_grid;
use dvrft::network::validate_network;
use dvrft::{Error, Result};

/// Data-driven synthesis of distributed controllers.
#[derive(Parser)]
#[command(name = "dvrft", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo replicates.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Controller class: full, reduced, decentralized or custom.
    #[arg(long, global = true)]
    class: Option<String>,
    /// Parametrization file for --class custom.
    #[arg(long, global = true)]
    param: Option<PathBuf>,
    /// Frequency grid size.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output-noise standard deviation.
    #[arg(long = "sigma-v", global = true)]
    sigma_v: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the network assumptions and realizability of the ideal controller.
    Validate { network: PathBuf },
    /// Print the ideal distributed controller.
    Ideal { network: PathBuf },
    /// Identify a controller from measured data (t,u_1..u_L,y_1..y_L).
    Synthesize {
        network: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Evaluate a controller (the ideal one by default) on step references.
    Evaluate {
        network: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        /// Also write seeded identification data to OUT/data.csv.
        #[arg(long)]
        generate_data: bool,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
    },
    /// Monte Carlo study over controller classes.
    Montecarlo {
        network: PathBuf,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
    },
    /// Run the full pipeline from an experiment configuration file.
    Run { config: PathBuf },
}

fn write_out(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)?;
            eprintln!("wrote {}", dir.join(name).display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn classes(cli: &Cli) -> Result<Vec<ClassConfig>> {
    match &cli.class {
        Some(name) => Ok(vec![ClassConfig::from_name(name, cli.param.as_deref())?]),
        None => Ok(ExperimentConfig::new("").classes),
    }
}

fn run(cli: Cli) -> Result<()> {
    let grid = frequency_grid(cli.grid.unwrap_or(512));
    let seed = cli.seed.unwrap_or(1);
    let sigma_v = cli.sigma_v.unwrap_or(0.1);
    let out = cli.out.as_deref();
    let here = Path::new(".");
    match &cli.command {
        Command::Validate { network } => {
            let spec = load_network(network)?;
            let report = validate_network(&spec, &grid);
            let real = check_realizability(&spec);
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "assumptions": report,
                    "realizability": real,
                }))?
            );
            check_assumptions(&spec, &grid)?;
            check_realizable(&spec)?;
        }
        Command::Ideal { network } => {
            let spec = load_network(network)?;
            check_realizable(&spec)?;
            let ctrl = build_ideal_controller(&spec)?;
            for (i, node) in ctrl.nodes.iter().enumerate() {
                println!("node {}", spec.id(i));
                for (label, tf) in node.entries_named(|j| spec.id(j).to_string()) {
                    if !tf.is_zero() {
                        println!("  {label:<12} {tf}");
                    }
                }
            }
            if out.is_some() {
                write_out(
                    out,
                    "ideal_controller.json",
                    &ctrl.to_json_string(&spec, None)?,
                )?;
            }
        }
        Command::Synthesize { network, data } => {
            let spec = load_network(network)?;
            let file = fs::File::open(data)
                .map_err(|e| Error::Config(format!("{}: {e}", data.display())))?;
            let (u, y) = read_data_csv(&spec, file)?;
            let vd = virtual_data(&spec, &y)?;
            for class in classes(&cli)? {
                let class = class.build(&spec, here)?;
                let syn = synthesize_class(
                    &spec,
                    &class,
                    &vd,
                    &u,
                    None,
                    &ExcitationThresholds::default(),
                )?;
                write_out(
                    out,
                    &format!("controller_{}.json", class.label),
                    &syn.to_json_string(&spec)?,
                )?;
            }
        }
        Command::Evaluate {
            network,
            controller,
            generate_data,
            horizon,
        } => {
            let spec = load_network(network)?;
            let (u, y, r) = seeded_data(&spec, seed, *horizon, 1.0, sigma_v, 100)?;
            if *generate_data {
                let mut buf = Vec::new();
                write_data_csv(&spec, &u, &y, &mut buf)?;
                write_out(out, "data.csv", &String::from_utf8_lossy(&buf))?;
            }
            let ctrl = match controller {
                Some(p) => DistributedController::from_json_file(&spec, p)?,
                None => build_ideal_controller(&spec)?,
            };
            let ev = evaluate_controller(&spec, &ctrl, &grid, &r)?;
            println!("metric {:e}\nJ_MR   {:e}", ev.metric, ev.jmr);
            if ev.response.diverged {
                println!("closed loop diverged");
            }
            if out.is_some() {
                let mut buf = Vec::new();
                write_traces_csv(&spec, &r, &[("evaluated", &ev)], &mut buf)?;
                write_out(out, "traces.csv", &String::from_utf8_lossy(&buf))?;
            }
        }
        Command::Montecarlo { network, horizon } => {
            let spec = load_network(network)?;
            check_assumptions(&spec, &grid)?;
            let classes = classes(&cli)?
                .iter()
                .map(|c| c.build(&spec, here))
                .collect::<Result<Vec<_>>>()?;
            let res = monte_carlo(&MonteCarloConfig {
                spec,
                classes,
                horizon: *horizon,
                sigma_u: 1.0,
                sigma_v,
                seed,
                runs: cli.runs.unwrap_or(100),
                grid,
                trim: None,
                step_horizon: 100,
            });
            let mut summary = Vec::new();
            write_summary_csv(&res.summaries, &mut summary)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    write_records_csv(&res.records, fs::File::create(dir.join("replicates.csv"))?)?;
                    fs::write(dir.join("summary.csv"), &summary)?;
                }
                None => std::io::stdout().write_all(&summary)?,
            }
        }
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::from_json_file(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(r) = cli.runs {
                cfg.runs = r;
            }
            if let Some(g) = cli.grid {
                cfg.grid = g;
            }
            if let Some(v) = cli.sigma_v {
                cfg.sigma_v = v;
            }
            if let Some(o) = &cli.out {
                cfg.out_dir = o.clone();
            }
            if cli.class.is_some() {
                cfg.classes = classes(&cli)?;
            }
            let base = config.parent().unwrap_or(here);
            let summary = run_experiment(&cfg, base)?;
            print!("{}", summary.table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
