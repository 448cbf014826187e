use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sphercomp::harness::{self, ExperimentConfig, ExperimentKind};

#[derive(Parser, Debug)]
#[command(name = "sphercomp", version, about = "Random spherical compression experiments")]
struct Cli {
    /// gaussian-location, sparse-threshold, amp, indirect-coding,
    /// coupling-tails, wasserstein-bound or rd-curves
    experiment: String,
    /// Dimension(s), comma separated.
    #[arg(long)]
    n: Option<String>,
    /// Signal dimension for amp.
    #[arg(long)]
    d: Option<String>,
    /// Bitrates, comma separated and strictly increasing.
    #[arg(long)]
    rates: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    sparsity: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// gaussian, rademacher or bernoulli-gaussian
    #[arg(long)]
    prior: Option<String>,
    /// AMP iterations.
    #[arg(long)]
    iterations: Option<String>,
    /// Magnitude offsets for coupling-tails and wasserstein-bound.
    #[arg(long, allow_hyphen_values = true)]
    mismatch: Option<String>,
    /// Noise levels for the one-bit sweep; empty to skip it.
    #[arg(long = "eps-grid")]
    eps_grid: Option<String>,
    /// Encode with real codebooks (n R <= 24 bits).
    #[arg(long)]
    explicit_codebook: bool,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trial CSV path; the summary goes to FILE.summary.csv.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn build_config(cli: Cli) -> sphercomp::Result<ExperimentConfig> {
    let kind: ExperimentKind = cli.experiment.parse()?;
    let mut cfg = ExperimentConfig::defaults(kind);
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
        cfg.experiment = kind;
    }
    let settings = [
        ("n", cli.n),
        ("d", cli.d),
        ("rates", cli.rates),
        ("trials", cli.trials),
        ("seed", cli.seed),
        ("eps", cli.eps),
        ("kappa", cli.kappa),
        ("sparsity", cli.sparsity),
        ("delta", cli.delta),
        ("prior", cli.prior),
        ("iterations", cli.iterations),
        ("mismatch", cli.mismatch),
        ("eps-grid", cli.eps_grid),
    ];
    for (key, value) in settings {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if cli.explicit_codebook {
        cfg.explicit_codebook = true;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|cfg| {
        let out = harness::run(&cfg)?;
        match &cfg.out {
            Some(path) => {
                let summary = out.write_files(path)?;
                eprintln!("wrote {} and {}", path.display(), summary.display());
            }
            None => out.write_trials(std::io::stdout().lock())?,
        }
        out.write_summary(std::io::stderr().lock())?;
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
