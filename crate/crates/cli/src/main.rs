use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use singular_plap_cli::{run, CliError, Command, RunConfig};

/// Solve, continue and verify the singular p-Laplacian problem on the unit ball.
#[derive(Debug, Parser)]
#[command(name = "singular-plap", version)]
struct Args {
    /// Overrides the `command` key of the config.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Flat JSON config; unset keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    grading: Option<f64>,
}

fn resolve(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = args.command {
        cfg.command = c;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(g) = args.grading {
        cfg.grading = g;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = resolve(&args).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            for f in &o.files {
                println!("{}", f.display());
            }
            if o.checks_passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
