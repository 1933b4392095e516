use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rydsim_cli::output::{self, RunInfo};
use rydsim_cli::pool::{available_workers, PoolRunner, WORKERS_ENV};
use rydsim_cli::{exit, load_config, plot, run_scenario};

/// Cold Rydberg-atom simulations driven by JSON scenario files.
#[derive(Parser)]
#[command(name = "rydsim", version, about)]
struct Cli {
    /// Worker threads for ensemble and scan jobs.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write `<output_dir>/<scenario>-<timestamp>/`.
    Run {
        config: PathBuf,
        /// Override a scalar leaf, e.g. `--set params.n_samples=100`.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        /// Also write `plot.svg` for the primary trace.
        #[arg(long)]
        plot: bool,
    },
    /// Resolve and validate a scenario, printing the resolved configuration.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
    /// Render a trace CSV as SVG.
    Plot {
        csv: PathBuf,
        /// Output file (defaults to the CSV path with an `.svg` extension).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Validate { config, overrides } => match load_config(&config, &overrides) {
            Ok(cfg) => {
                print!("{}", cfg.to_json_pretty());
                ExitCode::SUCCESS
            }
            Err(e) => fail(exit::CONFIG, e),
        },
        Command::Plot { csv, output } => {
            let text = match std::fs::read_to_string(&csv) {
                Ok(t) => t,
                Err(e) => return fail(exit::IO, format!("{}: {e}", csv.display())),
            };
            let data = match plot::read_trace(&text) {
                Ok(d) => d,
                Err(e) => return fail(exit::CONFIG, format!("{}: {e}", csv.display())),
            };
            let title = csv
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let out = output.unwrap_or_else(|| csv.with_extension("svg"));
            match output::write_atomic(&out, plot::render_svg(&data, &title).as_bytes()) {
                Ok(()) => {
                    println!("{}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(exit::IO, format!("{}: {e}", out.display())),
            }
        }
        Command::Run {
            config,
            overrides,
            plot: want_plot,
        } => {
            let cfg = match load_config(&config, &overrides) {
                Ok(c) => c,
                Err(e) => return fail(exit::CONFIG, e),
            };
            let workers = cli.workers.unwrap_or_else(available_workers);
            let runner = match PoolRunner::new(workers) {
                Ok(r) => r,
                Err(e) => return fail(exit::IO, e),
            };
            let started = chrono::Utc::now();
            let clock = Instant::now();
            log::info!(
                "running {} with {} workers",
                cfg.scenario.as_str(),
                runner.workers()
            );
            let out = match run_scenario(&cfg, &runner) {
                Ok(o) => o,
                Err(e) => return fail(exit::NUMERIC, e),
            };
            let svg = if want_plot {
                match plot::read_trace(out.trace_csv()) {
                    Ok(d) => Some(plot::render_svg(&d, cfg.scenario.as_str())),
                    Err(e) => return fail(exit::NUMERIC, e),
                }
            } else {
                None
            };
            let info = RunInfo {
                started_utc: started.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                wall_clock_s: clock.elapsed().as_secs_f64(),
                workers: runner.workers(),
            };
            let stamp = started.format("%Y%m%dT%H%M%S%.3fZ").to_string();
            let result = output::create_run_dir(&cfg.output_dir, cfg.scenario.as_str(), &stamp)
                .and_then(|dir| output::write_run(&dir, &cfg, &out, svg, &info).map(|_| dir));
            match result {
                Ok(dir) => {
                    println!("{}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(exit::IO, e),
            }
        }
    }
}
