use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use germ_core::cli::{
    cmd_bouquet, cmd_couple, cmd_frag_process, cmd_germ_transform, cmd_sample, save_reports, write_reports, Format,
    RunConfig,
};
use germ_core::coupling::TransformHook;
use germ_core::verify::{all_pass, run_all, VerifyConfig};

#[derive(Parser)]
#[command(name = "germ", version, about = "Maximal germ couplings of Brownian motions with drift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run seed; every path uses its own substream of it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "paths", default_value_t = 1)]
    n_paths: usize,
    #[arg(long = "steps", default_value_t = 1000)]
    n_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Common {
    fn config(&self, thetas: Vec<f64>) -> RunConfig {
        RunConfig {
            seed: self.seed,
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            horizon: self.horizon,
            thetas,
            alpha: self.alpha,
            out_dir: self.out.clone(),
            format: self.format,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Hook {
    None,
    SkipReflection,
}

#[derive(Subcommand)]
enum Command {
    /// Sample standard Brownian stems as path_<id>.csv.
    Sample(Common),
    /// Couple each stem with a drift-θ branch; writes stem/branch CSVs and frag_times.
    Couple {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
    },
    /// One stem and one branch per drift, sharing the stem's uniform.
    Bouquet {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        thetas: Vec<f64>,
    },
    /// Last visits of each stem to the lines t ↦ θt/2.
    FragProcess {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        thetas: Vec<f64>,
    },
    /// Apply the germ transform to a single CSV path.
    GermTransform {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the statistical verification suite; exit code 0 iff every check passes.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Fault injection for negative controls.
        #[arg(long, value_enum, default_value_t = Hook::None, hide = true)]
        hook: Hook,
    },
}

fn run(cli: Cli) -> germ_core::Result<bool> {
    match cli.command {
        Command::Sample(common) => {
            let files = cmd_sample(&common.config(Vec::new()))?;
            eprintln!("wrote {} files to {}", files.len(), common.out.display());
        }
        Command::Couple { common, theta } => {
            let records = cmd_couple(&common.config(vec![theta]), theta)?;
            let kept = records.iter().filter(|r| r.kept_stem).count();
            eprintln!("{} pairs, {kept} kept the stem on [0, T]", records.len());
        }
        Command::Bouquet { common, thetas } => {
            let processes = cmd_bouquet(&common.config(thetas))?;
            eprintln!("{} bouquets written to {}", processes.len(), common.out.display());
        }
        Command::FragProcess { common, thetas } => {
            let processes = cmd_frag_process(&common.config(thetas))?;
            eprintln!("{} processes written to {}", processes.len(), common.out.display());
        }
        Command::GermTransform { input, theta, u, out } => {
            cmd_germ_transform(&input, theta, u, &out)?;
        }
        Command::Verify {
            seed,
            alpha,
            out,
            format,
            hook,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(germ_core::Error::InvalidParameter {
                    name: "alpha",
                    reason: format!("{alpha} not in (0, 1)"),
                });
            }
            let config = VerifyConfig {
                seed,
                alpha,
                hook: match hook {
                    Hook::None => TransformHook::None,
                    Hook::SkipReflection => TransformHook::SkipReflection,
                },
            };
            let reports = run_all(&config)?;
            match out {
                Some(file) => save_reports(&reports, format, &file)?,
                None => write_reports(&reports, format, std::io::stdout().lock())?,
            }
            for r in &reports {
                eprintln!(
                    "{} {:<45} statistic={:.6e} threshold={:.6e}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.test_name,
                    r.statistic,
                    r.threshold
                );
            }
            return Ok(all_pass(&reports));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
