mod bench;
mod gen;
mod manifest;
mod ops;
mod report;

use clap::{Parser, Subcommand};
use himap::Error;

/// Multivariate quantile maps via mass-aligned space-filling trees:
/// fitting, evaluation, distances, barycenters, regression, and benchmarks.
#[derive(Debug, Parser)]
#[command(name = "himap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic datasets.
    Gen(gen::GenArgs),
    /// Fit a mass-aligned tree to a point cloud.
    Fit(ops::FitArgs),
    /// Sample a fitted tree's quantile map on a grid.
    Eval(ops::EvalArgs),
    /// Distance between two distributions under a chosen metric.
    Distance(ops::DistanceArgs),
    /// Closed-form weighted barycenter of fitted trees.
    Barycenter(ops::BarycenterArgs),
    /// Distribution-valued regression over a dataset manifest.
    Regress(ops::RegressArgs),
    /// Timed experiment reproductions with machine-readable reports.
    Bench(bench::BenchArgs),
}

fn error_kind(err: &Error) -> (&'static str, i32) {
    match err {
        Error::Config(_) => ("config", 2),
        Error::Domain(_) => ("domain", 3),
        Error::Data(_) => ("data", 3),
        Error::Io(_) => ("io", 3),
        Error::Parse(_) => ("parse", 3),
        Error::Json(_) => ("json", 3),
        Error::Resource(_) => ("resource", 3),
        Error::Weight(_) => ("weight", 4),
        Error::LinearAlgebra { .. } => ("linear_algebra", 4),
        Error::Bandwidth(_) => ("bandwidth", 4),
        Error::NonConvergence { .. } => ("non_convergence", 4),
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen::run(args),
        Command::Fit(args) => ops::run_fit(args),
        Command::Eval(args) => ops::run_eval(args),
        Command::Distance(args) => ops::run_distance(args),
        Command::Barycenter(args) => ops::run_barycenter(args),
        Command::Regress(args) => ops::run_regress(args),
        Command::Bench(args) => bench::run(args),
    };
    if let Err(err) = result {
        let (kind, code) = error_kind(&err);
        let detail = serde_json::json!({
            "error": {
                "kind": kind,
                "message": err.to_string(),
                "exit_code": code,
            }
        });
        eprintln!("{}", serde_json::to_string_pretty(&detail).unwrap());
        std::process::exit(code);
    }
}
