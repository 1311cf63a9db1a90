//! Minimization algorithms: subgradient descent, half-quadratic
//! minimization, the cyclic proximal point algorithm and (parallel)
//! Douglas–Rachford, plus the Karcher mean.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::manifold::{self, Curvature, ManifoldTag};
use crate::model::{self, Iterate, ManifoldImage};

mod cppa;
mod dr;
mod hq;
mod karcher;
mod problem;
mod schedule;
mod subgradient;

pub use cppa::cppa;
pub use dr::{douglas_rachford, parallel_douglas_rachford, reflect_prox};
pub use hq::half_quadratic;
pub use karcher::{karcher_mean, KarcherMean};
pub use problem::{
    denoise, BatchTerm, DataTerm, DenoiseProblem, DistanceTerm, PairTerm, RegularizerTerm,
};
pub use schedule::{GuaranteeMode, StepSchedule};
pub use subgradient::subgradient_descent;

/// A function of the solver state.
pub trait Functional: Sync {
    fn value(&self, x: &Iterate) -> Result<f64>;
}

/// A function with a subgradient oracle.
pub trait Subdifferentiable: Functional {
    /// One element of the subdifferential at `x`.
    fn subgradient(&self, x: &Iterate) -> Result<Direction>;
}

/// A function with a proximal map.
pub trait Proximable: Functional {
    /// prox_{λ·self}(x). Numerical proxes stop once they are within
    /// `tolerance` of the exact value; closed forms ignore it.
    fn prox(&self, x: &Iterate, lambda: f64, tolerance: f64) -> Result<Iterate>;

    fn label(&self) -> String {
        "term".to_string()
    }

    /// True when the growth condition φ(x) − φ(y) ≤ C·dist(x, y)(1 + dist(x, p))
    /// of the CPPA convergence theorem holds by construction.
    fn lipschitz_by_construction(&self) -> bool {
        false
    }
}

/// Tangent vectors for every variable of an [`Iterate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub u: Vec<f64>,
    pub xi: Option<[Vec<f64>; 2]>,
}

impl Direction {
    pub fn zeros(x: &Iterate) -> Self {
        let n = x.image().len() * x.image().tag().tangent_len();
        Direction {
            u: vec![0.0; n],
            xi: x.has_field().then(|| [vec![0.0; n], vec![0.0; n]]),
        }
    }

    pub fn norm(&self, x: &Iterate) -> f64 {
        let u = x.image();
        let tag = u.tag();
        let m = tag.tangent_len();
        let mut parts = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let r = i * m..(i + 1) * m;
            let mut s = tag.inner(u.px(i), &self.u[r.clone()], &self.u[r.clone()]);
            if let Some(xi) = &self.xi {
                for v in xi {
                    s += tag.inner(u.px(i), &v[r.clone()], &v[r.clone()]);
                }
            }
            parts.push(s);
        }
        model::pairwise_sum(&parts).sqrt()
    }
}

/// Solver names as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Subgradient,
    HalfQuadratic,
    Cppa,
    DouglasRachford,
    ParallelDouglasRachford,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Subgradient => "subgradient",
            SolverKind::HalfQuadratic => "hq",
            SolverKind::Cppa => "cppa",
            SolverKind::DouglasRachford => "dr",
            SolverKind::ParallelDouglasRachford => "pdr",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "subgradient" | "sg" => Ok(SolverKind::Subgradient),
            "hq" | "half-quadratic" => Ok(SolverKind::HalfQuadratic),
            "cppa" => Ok(SolverKind::Cppa),
            "dr" => Ok(SolverKind::DouglasRachford),
            "pdr" => Ok(SolverKind::ParallelDouglasRachford),
            _ => Err(Error::invalid(format!("unknown solver '{s}'"))),
        }
    }
}

/// Which convergence statement covers a solver on a manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// A convergence theorem applies.
    Guaranteed(&'static str),
    /// Convergence holds provided the iterates stay bounded.
    BoundedIterates(&'static str),
    /// No theorem applies; the run is best effort.
    BestEffort(&'static str),
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Guaranteed(s) => write!(f, "guaranteed: {s}"),
            Regime::BoundedIterates(s) => write!(f, "bounded iterates: {s}"),
            Regime::BestEffort(s) => write!(f, "best effort: {s}"),
        }
    }
}

/// The theory regime of `solver` on `tag`.
pub fn regime(solver: SolverKind, tag: &ManifoldTag) -> Regime {
    let curvature = tag.curvature();
    let hadamard = tag.is_hadamard();
    match solver {
        SolverKind::Subgradient => match curvature {
            Curvature::Flat | Curvature::NonNegative => {
                Regime::Guaranteed("non-negative sectional curvature")
            }
            _ => Regime::BoundedIterates("curvature bounded from below"),
        },
        SolverKind::HalfQuadratic | SolverKind::Cppa | SolverKind::DouglasRachford => {
            if hadamard {
                Regime::Guaranteed("Hadamard manifold")
            } else {
                Regime::BestEffort("manifold is not Hadamard")
            }
        }
        SolverKind::ParallelDouglasRachford => {
            if hadamard && curvature == Curvature::Flat {
                Regime::Guaranteed("constant non-positive curvature")
            } else {
                Regime::BestEffort(
                    "diagonal reflection is only nonexpansive for constant curvature",
                )
            }
        }
    }
}

/// Parameters shared by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// τ_r for subgradient steps and CPPA prox parameters.
    pub schedule: StepSchedule,
    /// DR relaxation τ_r.
    pub relaxation: StepSchedule,
    /// DR prox scale η.
    pub eta: f64,
    pub max_iter: usize,
    /// Relative objective change that counts as stalled.
    pub tolerance: f64,
    /// Consecutive stalled iterations before stopping.
    pub patience: usize,
    pub mode: GuaranteeMode,
    /// ε₀ of the inexact CPPA, with ε_r = ε₀/(r + 1)².
    pub inexact: Option<f64>,
    /// Gradient steps per half-quadratic outer iteration.
    pub hq_inner_steps: usize,
    /// Iteration cap of the inner solver for the regularizer prox in DR.
    pub inner_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            schedule: StepSchedule::Harmonic(4.0),
            relaxation: StepSchedule::Constant(0.9),
            eta: 0.35,
            max_iter: 500,
            tolerance: 1e-8,
            patience: 5,
            mode: GuaranteeMode::BestEffort,
            inexact: None,
            hq_inner_steps: 20,
            inner_iter: 1000,
        }
    }
}

impl SolverOptions {
    pub fn with_max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    pub fn with_schedule(mut self, s: StepSchedule) -> Self {
        self.schedule = s;
        self
    }

    pub fn with_tolerance(mut self, t: f64) -> Self {
        self.tolerance = t;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be non-negative"));
        }
        if let Some(e) = self.inexact {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::invalid("inexact tolerance must be positive"));
            }
        }
        Ok(())
    }
}

/// One row of the solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    /// Distance between consecutive iterates.
    pub change: f64,
}

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub schedule: StepSchedule,
    pub eta: Option<f64>,
    pub max_iter: usize,
    pub tolerance: f64,
    pub trace: Vec<TraceEntry>,
    pub iterate: Iterate,
    /// Objective at the returned iterate.
    pub objective: f64,
    pub converged: bool,
    pub regime: Regime,
    pub warnings: Vec<String>,
    /// CPPA only: whether every term satisfies the growth condition of the
    /// convergence theorem by construction.
    pub lipschitz_by_construction: Option<bool>,
}

impl SolverRun {
    pub fn image(&self) -> &ManifoldImage {
        self.iterate.image()
    }
}

/// Relative-change stopping rule.
pub(crate) struct Stopper {
    tolerance: f64,
    patience: usize,
    streak: usize,
    last: Option<f64>,
}

impl Stopper {
    pub fn new(opts: &SolverOptions) -> Self {
        Stopper {
            tolerance: opts.tolerance,
            patience: opts.patience.max(1),
            streak: 0,
            last: None,
        }
    }

    /// Records an objective value; true once it stalled `patience` times.
    pub fn update(&mut self, obj: f64) -> bool {
        if let Some(last) = self.last {
            let rel = (obj - last).abs() / last.abs().max(f64::MIN_POSITIVE);
            if rel < self.tolerance || obj == last {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(obj);
        self.streak >= self.patience
    }
}

/// Moves every variable along `d` scaled by `t`; tangent-field components
/// are translated and then parallel transported to the new base.
pub(crate) fn retract(x: &Iterate, d: &Direction, t: f64) -> Iterate {
    let tag = x.image().tag().clone();
    let m = tag.tangent_len();
    let mut y = x.clone();
    for i in 0..x.image().len() {
        let r = i * m..(i + 1) * m;
        let v = manifold::scale(&d.u[r.clone()], t);
        let p = x.px(i);
        let q = tag.exp(p, &v);
        if let (Some(dx), true) = (&d.xi, x.has_field()) {
            for k in 0..2 {
                let mut w = x.xi(k, i).to_vec();
                manifold::axpy(t, &dx[k][r.clone()], &mut w);
                let moved = tag.transport_along(p, &v, 1.0, &w);
                y.set_xi(k, i, &tag.project_tangent(&q, &moved));
            }
        }
        y.u.set_px(i, &q);
    }
    y
}

/// Distance between iterates; tangent fields are compared after transport.
pub(crate) fn iterate_distance(a: &Iterate, b: &Iterate) -> f64 {
    let tag = a.image().tag();
    let mut parts = Vec::with_capacity(a.image().len());
    for i in 0..a.image().len() {
        let d = tag.dist(a.px(i), b.px(i));
        let mut s = d * d;
        if a.has_field() && b.has_field() {
            for k in 0..2 {
                if let Ok(mut t) = tag.transport(a.px(i), b.px(i), a.xi(k, i)) {
                    manifold::axpy(-1.0, b.xi(k, i), &mut t);
                    s += tag.inner(b.px(i), &t, &t);
                }
            }
        }
        parts.push(s);
    }
    model::pairwise_sum(&parts).sqrt()
}

/// Runs `f`, nudging pixels reported in a cut locus and retrying.
pub(crate) fn with_nudges<T>(
    x: &mut Iterate,
    previous: Option<&Iterate>,
    warnings: &mut Vec<String>,
    f: impl Fn(&Iterate) -> Result<T>,
) -> Result<T> {
    let mut tries: HashMap<usize, i32> = HashMap::new();
    loop {
        match f(x) {
            Err(e) => {
                let Error::CutLocus { index: Some(i), .. } = *e.root() else {
                    return Err(e);
                };
                let count = tries.entry(i).or_insert(0);
                if *count >= 40 {
                    return Err(e);
                }
                let size = model::NUDGE * 2f64.powi(*count);
                *count += 1;
                model::nudge_pixel(&mut x.u, i, previous.map(|p| p.image()), size);
                if x.has_field() {
                    let tag = x.image().tag().clone();
                    for k in 0..2 {
                        let v = tag.project_tangent(x.px(i), x.xi(k, i));
                        x.set_xi(k, i, &v);
                    }
                }
                warnings.push(format!("pixel {i} nudged by {size:e} out of a cut locus"));
            }
            ok => return ok,
        }
    }
}

/// Pixelwise map over two images of the same shape.
pub(crate) fn pixelwise(
    a: &ManifoldImage,
    b: &ManifoldImage,
    f: impl Fn(&ManifoldTag, &[f64], &[f64]) -> Result<Vec<f64>>,
) -> Result<ManifoldImage> {
    let tag = a.tag();
    let mut out = a.clone();
    for i in 0..a.len() {
        let v = f(tag, a.px(i), b.px(i)).map_err(|e| e.at_index(i))?;
        out.set_px(i, &v);
    }
    Ok(out)
}
