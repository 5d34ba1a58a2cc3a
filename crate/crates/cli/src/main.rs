use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tensor_mvsc::construct::SynthParams;
use tensor_mvsc::io::ParamOverrides;
use tensor_mvsc::pipeline::{self, RunOverrides};
use tensor_mvsc::selftest::{self, SelftestOptions};

const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(name = "tensor-mvsc", version, about = "Multi-view subspace clustering in third-order tensor space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the dataset described by a manifest and write a JSON report.
    Cluster {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        max_outer: Option<usize>,
        #[arg(long, value_enum)]
        normalize: Option<Switch>,
        /// Report path; predicted labels go to `<stem>.labels.txt` beside it.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Write a labelled union-of-subspaces dataset and its manifest.
    Synth {
        #[arg(long, default_value_t = 3)]
        clusters: usize,
        #[arg(long, default_value_t = 20)]
        per_cluster: usize,
        #[arg(long, value_delimiter = ',', default_value = "30,25")]
        views: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        subspace_dim: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in oracle suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_bcirc_fault: bool,
    },
}

fn report_error(e: &tensor_mvsc::Error) {
    // Stage errors already carry their cause in the message.
    eprintln!("error: {e}");
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Cluster {
            manifest,
            alpha,
            lambda,
            beta,
            clusters,
            seed,
            eps,
            max_outer,
            normalize,
            out,
        } => {
            let overrides = RunOverrides {
                params: ParamOverrides {
                    alpha,
                    lambda,
                    beta,
                    eps,
                    max_outer,
                    seed,
                },
                clusters,
                normalize: normalize.map(|s| matches!(s, Switch::On)),
            };
            let report = match pipeline::run_cluster(&manifest, &overrides, Some(&out)) {
                Ok(r) => r,
                Err(e) => {
                    report_error(&e);
                    return ExitCode::FAILURE;
                }
            };
            println!(
                "{}: n={} k={} status={} iterations={} solve={:.3}s",
                report.dataset.name,
                report.dataset.n,
                report.dataset.k,
                report.solver.status,
                report.solver.iterations,
                report.timings.solve_s,
            );
            if let Some(m) = &report.metrics {
                println!(
                    "ACC {:.4} ± {:.4}  NMI {:.4} ± {:.4}  F {:.4}  P {:.4}  R {:.4}  ARI {:.4}",
                    m.acc.mean, m.acc.std, m.nmi.mean, m.nmi.std, m.f_score.mean, m.precision.mean, m.recall.mean, m.ari.mean
                );
            }
            println!("report: {}", out.display());
            if report.converged() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NOT_CONVERGED)
            }
        }
        Command::Synth {
            clusters,
            per_cluster,
            views,
            subspace_dim,
            noise,
            seed,
            out,
        } => {
            let params = SynthParams {
                clusters,
                per_cluster,
                view_dims: views,
                subspace_dim,
                noise_sigma: noise,
                seed,
            };
            match pipeline::run_synth(&params, &out) {
                Ok(path) => {
                    println!("{}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    report_error(&e);
                    ExitCode::FAILURE
                }
            }
        }
        Command::Selftest {
            seed,
            inject_bcirc_fault,
        } => {
            let report = selftest::run(&SelftestOptions {
                inject_bcirc_fault,
                seed,
            });
            for s in &report.suites {
                println!(
                    "{:<9} {}  {} checks, {} failed, {:.3}s  ({})",
                    s.name,
                    if s.passed { "PASS" } else { "FAIL" },
                    s.checks,
                    s.failures,
                    s.seconds,
                    s.detail
                );
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
