//! Denoising runs as driven by the command line.

use std::io::Write;
use std::path::Path;

use manivar::model::{self, ManifoldImage, ModelConfig, ModelKind, Phi, PhiKind};
use manivar::solvers::{self, SolverKind, SolverOptions, SolverRun, StepSchedule};

use crate::CliError;

/// (1/|G|) Σ_i dist²(u_i, v_i).
pub fn mse(u: &ManifoldImage, v: &ManifoldImage) -> Result<f64, CliError> {
    Ok(2.0 * model::data_term(u, v)? / u.len() as f64)
}

/// Parameters of a `denoise` invocation. `None` fields take the solver
/// defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseSettings {
    pub model: ModelKind,
    pub solver: SolverKind,
    pub alpha: f64,
    pub beta: f64,
    pub p: u8,
    pub phi: Option<PhiKind>,
    pub eps: f64,
    pub iters: usize,
    /// τ₀ of the harmonic steps (subgradient, CPPA) or the constant
    /// relaxation (DR, PDR).
    pub tau0: Option<f64>,
    pub eta: Option<f64>,
    /// Logged with the run; all solvers are deterministic.
    pub seed: u64,
}

impl Default for DenoiseSettings {
    fn default() -> Self {
        DenoiseSettings {
            model: ModelKind::Tv,
            solver: SolverKind::Cppa,
            alpha: 0.3,
            beta: 0.5,
            p: 1,
            phi: None,
            eps: 0.1,
            iters: 500,
            tau0: None,
            eta: None,
            seed: 0,
        }
    }
}

fn positive(flag: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{flag} must be positive and finite, got {v}"
        )))
    }
}

impl DenoiseSettings {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("--alpha", self.alpha)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(CliError::usage(format!(
                "--beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.p != 1 && self.p != 2 {
            return Err(CliError::usage(format!(
                "--p must be 1 or 2, got {}",
                self.p
            )));
        }
        positive("--eps", self.eps)?;
        if self.iters == 0 {
            return Err(CliError::usage("--iters must be at least 1"));
        }
        if let Some(t) = self.tau0 {
            positive("--tau0", t)?;
        }
        if let Some(e) = self.eta {
            positive("--eta", e)?;
        }
        match (self.model, self.phi) {
            (ModelKind::TvPhi, None) => {
                return Err(CliError::usage("--model tvphi needs --phi"));
            }
            (m, Some(_)) if m != ModelKind::TvPhi => {
                return Err(CliError::usage(format!(
                    "--phi only applies to --model tvphi, not {m}"
                )));
            }
            _ => {}
        }
        if self.solver == SolverKind::HalfQuadratic && self.model != ModelKind::TvPhi {
            return Err(CliError::usage("--solver hq needs --model tvphi"));
        }
        if self.model == ModelKind::Tgv
            && matches!(
                self.solver,
                SolverKind::DouglasRachford | SolverKind::ParallelDouglasRachford
            )
        {
            return Err(CliError::usage(format!(
                "--model tgv is not supported by --solver {}",
                self.solver
            )));
        }
        Ok(())
    }

    pub fn config(&self) -> Result<ModelConfig, CliError> {
        self.validate()?;
        let mut config = ModelConfig::new(self.model, self.alpha)
            .with_beta(self.beta)
            .with_p(self.p);
        if let Some(kind) = self.phi {
            config = config.with_phi(Phi::new(kind, self.eps)?);
        }
        Ok(config)
    }

    pub fn options(&self) -> SolverOptions {
        let mut opts = SolverOptions::default().with_max_iter(self.iters);
        if let Some(t) = self.tau0 {
            match self.solver {
                SolverKind::DouglasRachford | SolverKind::ParallelDouglasRachford => {
                    opts.relaxation = StepSchedule::Constant(t);
                }
                _ => opts.schedule = StepSchedule::Harmonic(t),
            }
        }
        if let Some(e) = self.eta {
            opts.eta = e;
        }
        opts
    }
}

pub fn run_denoise(f: &ManifoldImage, settings: &DenoiseSettings) -> Result<SolverRun, CliError> {
    let config = settings.config()?;
    log::info!(
        "denoising {}x{} {} image: model {} solver {} alpha {} seed {}",
        f.n1(),
        f.n2(),
        f.tag(),
        settings.model,
        settings.solver,
        settings.alpha,
        settings.seed
    );
    let run = solvers::denoise(f, &config, settings.solver, &settings.options())?;
    for w in &run.warnings {
        log::warn!("{w}");
    }
    Ok(run)
}

/// CSV with header `iteration,objective,change`; floats use the shortest
/// representation that parses back exactly.
pub fn write_trace(run: &SolverRun, path: &Path) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(out, "iteration,objective,change").map_err(io)?;
    for e in &run.trace {
        writeln!(out, "{},{},{}", e.iteration, e.objective, e.change).map_err(io)?;
    }
    out.flush().map_err(io)
}
