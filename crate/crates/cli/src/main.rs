use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use wicklab_cli::run::{batch_exit_code, load_config, run_batch, Overrides, OUT_ROOT_ENV};
use wicklab_cli::{run_experiment, CliError, EXIT_CONFIG};

/// Runs wicklab experiments from JSON configs.
#[derive(Debug, Parser)]
#[command(name = "wicklab", version, after_help = format!(
    "Exit codes: 0 success, 2 config error, 3 numerical failure or divergence, 4 IO error.\n\
     Runs without an output directory write under ${OUT_ROOT_ENV} (default ./wicklab-out)."
))]
struct Args {
    /// Config file, or a directory of `*.json` configs run as a batch.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; for a batch, the root holding one directory per config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn report(label: &str, result: &Result<wicklab_cli::RunManifest, CliError>) {
    match result {
        Ok(m) => println!(
            "{label}: {:?} -> {} ({} files, {:.3} s)",
            m.status,
            m.output_dir.display(),
            m.files.len(),
            m.wall_time_seconds
        ),
        Err(e) => eprintln!("{label}: {e}"),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("--threads must be positive");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let ov = Overrides { out: args.out.clone(), seed: args.seed };
    let code = pool.install(|| {
        if args.config.is_dir() {
            match run_batch(&args.config, &ov) {
                Ok(items) => {
                    for it in &items {
                        report(&it.config.display().to_string(), &it.result);
                    }
                    batch_exit_code(&items)
                }
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
            }
        } else {
            let result = load_config(&args.config, &ov, false).and_then(|cfg| run_experiment(&cfg));
            report(&args.config.display().to_string(), &result);
            match &result {
                Ok(m) => m.exit_code(),
                Err(e) => e.exit_code(),
            }
        }
    });
    ExitCode::from(code as u8)
}
