use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manivar::model::{ModelKind, PhiKind};
use manivar::solvers::SolverKind;
use manivar_cli::{
    add_noise, mse, phantom, read_mvd, render_png, run_denoise, write_mvd, write_trace, CliError,
    DenoiseSettings, NoiseSpec, Phantom,
};

#[derive(Parser)]
#[command(
    name = "manivar",
    version,
    about = "Variational denoising of manifold-valued images"
)]
struct Cli {
    /// Worker threads for pixel-parallel loops.
    #[arg(long, global = true, env = "MANIVAR_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic test image.
    Phantom {
        /// s1-blocks, s2-patches or spd-gradient
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 64)]
        n1: usize,
        #[arg(long, default_value_t = 64)]
        n2: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add tangent Gaussian noise.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize a variational model.
    Denoise(DenoiseArgs),
    /// Print the mean squared geodesic distance between two images.
    Mse { a: PathBuf, b: PathBuf },
    /// Render an image as PNG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn core_parser<T: std::str::FromStr<Err = manivar::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: manivar::Error| e.to_string())
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DenoiseArgs {
    /// tv, tvphi, tv2, tvtv2 or tgv
    #[arg(long, default_value = "tv", value_parser = core_parser::<ModelKind>)]
    model: ModelKind,
    /// subgradient, hq, cppa, dr or pdr
    #[arg(long, default_value = "cppa", value_parser = core_parser::<SolverKind>)]
    solver: SolverKind,
    #[arg(long, default_value_t = DenoiseSettings::default().alpha)]
    alpha: f64,
    /// Mixing weight of tvtv2 and tgv, in (0, 1).
    #[arg(long, default_value_t = DenoiseSettings::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    p: u8,
    /// phi1, phi2 or phi3 (tvphi only)
    #[arg(long, value_parser = core_parser::<PhiKind>)]
    phi: Option<PhiKind>,
    #[arg(long, default_value_t = DenoiseSettings::default().eps)]
    eps: f64,
    #[arg(long, default_value_t = DenoiseSettings::default().iters)]
    iters: usize,
    /// Step scale (subgradient, cppa) or relaxation (dr, pdr).
    #[arg(long)]
    tau0: Option<f64>,
    /// Prox scale of dr and pdr.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// CSV of iteration, objective and change.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl DenoiseArgs {
    fn settings(&self) -> DenoiseSettings {
        DenoiseSettings {
            model: self.model,
            solver: self.solver,
            alpha: self.alpha,
            beta: self.beta,
            p: self.p,
            phi: self.phi,
            eps: self.eps,
            iters: self.iters,
            tau0: self.tau0,
            eta: self.eta,
            seed: self.seed,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|e| CliError::usage(format!("--workers: {e}")))?;
    match cli.command {
        Command::Phantom { name, n1, n2, out } => {
            if n1 == 0 || n2 == 0 {
                return Err(CliError::usage("--n1 and --n2 must be positive"));
            }
            let name: Phantom = name.parse()?;
            write_mvd(&phantom(name, n1, n2), &out)
        }
        Command::Noise {
            input,
            sigma,
            seed,
            out,
        } => {
            let spec = NoiseSpec::new(sigma, seed)?;
            write_mvd(&add_noise(&read_mvd(&input)?, &spec)?, &out)
        }
        Command::Denoise(args) => {
            let settings = args.settings();
            settings.validate()?;
            let f = read_mvd(&args.input)?;
            let result = run_denoise(&f, &settings)?;
            write_mvd(result.image(), &args.out)?;
            if let Some(path) = &args.trace {
                write_trace(&result, path)?;
            }
            eprintln!(
                "{} iterations, objective {}, {}",
                result.trace.len(),
                result.objective,
                if result.converged {
                    "converged"
                } else {
                    "iteration cap reached"
                }
            );
            Ok(())
        }
        Command::Mse { a, b } => {
            println!("{}", mse(&read_mvd(&a)?, &read_mvd(&b)?)?);
            Ok(())
        }
        Command::Render { input, out } => render_png(&read_mvd(&input)?, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
