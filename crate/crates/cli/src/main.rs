use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use guidedplan_cli::{load_config, run, Mode, RunOptions};

#[derive(Parser)]
#[command(name = "guidedplan", version, about = "Learning-guided belief-tree planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run planning episodes (guided when a checkpoint is configured).
    Plan(Common),
    /// Closed-loop self-supervised training.
    TrainSsl(Common),
    /// Closed-loop soft actor-critic training.
    TrainRl(Common),
    /// Collect an unguided dataset, then train on it offline.
    TrainOpenSsl(Common),
    /// Evaluate a checkpoint with and without the planner.
    Eval(Common),
    /// Compare converged searches with the exhaustive oracle on Tiger.
    OracleCheck(Common),
}

#[derive(clap::Args)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "K=V")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Interleave actor and learner steps on one thread.
    #[arg(long)]
    single_thread: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Plan(a) => (Mode::Plan, a),
        Command::TrainSsl(a) => (Mode::TrainSsl, a),
        Command::TrainRl(a) => (Mode::TrainRl, a),
        Command::TrainOpenSsl(a) => (Mode::TrainOpenSsl, a),
        Command::Eval(a) => (Mode::Eval, a),
        Command::OracleCheck(a) => (Mode::OracleCheck, a),
    };
    let config = match load_config(args.config.as_deref(), &args.set, args.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        mode,
        config,
        out: args.out,
        single_thread: args.single_thread,
    };
    match run(&opts) {
        Ok(report) => {
            for (name, s) in &report.summaries {
                println!(
                    "{name}: reward {:.2} +- {:.2} over {} episodes, collisions {:.3}, near-miss {:.4}, speed {:.2}",
                    s.reward.mean, s.reward.stderr, s.episodes, s.collision_rate, s.near_miss_rate.mean, s.average_speed.mean
                );
            }
            match report.oracle_passed {
                Some(false) => {
                    eprintln!("oracle check failed; see metrics.csv");
                    ExitCode::FAILURE
                }
                Some(true) => {
                    println!("oracle check passed");
                    ExitCode::SUCCESS
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
