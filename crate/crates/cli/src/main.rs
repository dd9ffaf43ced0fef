use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use halfcert_cli::commands::{
    cmd_certify, cmd_gen, cmd_learn, cmd_sweep, cmd_verify, load_config, load_raw, output_dir,
    parse_candidate, parse_values, DataSource, Experiment, SweepSpec,
};
use halfcert_cli::{CliError, ExperimentConfig, EXIT_OK, EXIT_RUNTIME};

#[derive(Parser)]
#[command(
    name = "halfcert",
    version,
    about = "Certificate-based halfspace learning under Tsybakov noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a labeled dataset from the configured oracle.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Dataset path; defaults to `<output dir>/dataset.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a certificate that the candidate `w` is suboptimal.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated coordinates, or a model file.
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        /// Dataset file split in half into fitting and held-out parts. Fresh
        /// oracle draws are used when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Size of each fresh batch; defaults to `learner.n_per_iter`.
        #[arg(long)]
        n: Option<usize>,
        /// Band angle; defaults to `learner.eps`.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the learner and write the model, trace and summary.
    Learn {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite; exits 0 iff every check passes.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one config scalar and record summary metrics.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `section.key` of the swept scalar, e.g. `learner.k`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// certify, learn or moments.
        #[arg(long, default_value = "certify")]
        experiment: String,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Candidate for certify and moments sweeps.
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        reference_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dir_of(cfg: &ExperimentConfig) -> Option<&std::path::Path> {
    cfg.output_dir.as_deref()
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Gen { config, n, out } => {
            let cfg = load_config(&config)?;
            let path = out.unwrap_or_else(|| output_dir(None, dir_of(&cfg)).join("dataset.csv"));
            let data = cmd_gen(&cfg, n, &path)?;
            println!("wrote {} examples to {}", data.len(), path.display());
        }
        Command::Certify {
            config,
            w,
            data,
            n,
            theta,
            out,
        } => {
            let cfg = load_config(&config)?;
            let w = parse_candidate(&w, cfg.marginal.dim())?;
            let source = match data {
                Some(p) => DataSource::File(p),
                None => DataSource::Fresh {
                    n: n.unwrap_or(cfg.learner.n_per_iter),
                    index: 0,
                },
            };
            let dir = output_dir(out.as_deref(), dir_of(&cfg));
            let report = cmd_certify(&cfg, &w, &source, theta, &dir)?;
            println!("{}", report.line());
        }
        Command::Learn { config, out } => {
            let cfg = load_config(&config)?;
            let dir = output_dir(out.as_deref(), dir_of(&cfg));
            let report = cmd_learn(&cfg, &dir)?;
            let line: Vec<String> = report
                .summary
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            println!("{}", line.join(" "));
        }
        Command::Verify { suite, seed, out } => {
            let dir = output_dir(out.as_deref(), None);
            let report = cmd_verify(&suite, seed, &dir)?;
            let failed: Vec<_> = report.failures().collect();
            for c in &failed {
                eprintln!(
                    "FAIL {} lhs={} rhs={} se={}",
                    c.name, c.lhs, c.rhs, c.std_err
                );
            }
            println!(
                "suite {suite}: {}/{} checks passed",
                report.checks.len() - failed.len(),
                report.checks.len()
            );
            if !report.passed() {
                return Ok(EXIT_RUNTIME);
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            experiment,
            replicates,
            w,
            reference_n,
            out,
        } => {
            let raw = load_raw(&config)?;
            let spec = SweepSpec {
                param,
                values: parse_values(&values)?,
                experiment: Experiment::parse(&experiment)?,
                replicates,
                w,
                reference_n,
            };
            let cfg_dir = raw.get("output.directory").map(PathBuf::from);
            let dir = output_dir(out.as_deref(), cfg_dir.as_deref());
            let report = cmd_sweep(&raw, &spec, &dir)?;
            println!(
                "wrote {} rows to {}",
                report.rows.len(),
                report.results_path.display()
            );
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
