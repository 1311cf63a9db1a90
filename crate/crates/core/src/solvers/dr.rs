use super::karcher::karcher_chart;
use super::{
    cppa::split_value, iterate_distance, regime, with_nudges, Proximable, SolverKind,
    SolverOptions, SolverRun, Stopper, TraceEntry,
};
use crate::error::{Error, Result};
use crate::model::{self, Iterate};
use crate::prox::NUMERIC_TOLERANCE;

fn no_field(x: &Iterate, what: &str) -> Result<()> {
    if x.has_field() {
        return Err(Error::invalid(format!(
            "{what} does not support tangent-field variables"
        )));
    }
    Ok(())
}

/// Pointwise geodesic reflection of `x` at `p`.
fn reflect_at(p: &Iterate, x: &Iterate) -> Result<Iterate> {
    super::pixelwise(p.image(), x.image(), |tag, a, b| tag.reflect(a, b)).map(Iterate::new)
}

/// Pointwise γ(a, b; τ).
fn relax(a: &Iterate, b: &Iterate, tau: f64) -> Result<Iterate> {
    super::pixelwise(a.image(), b.image(), |tag, x, y| tag.geodesic(x, y, tau)).map(Iterate::new)
}

/// R_{ηφ}(x) = exp_p(−log_p x) with p = prox_{ηφ}(x), pixel by pixel.
pub fn reflect_prox(term: &dyn Proximable, eta: f64, x: &Iterate) -> Result<Iterate> {
    no_field(x, "reflect_prox")?;
    let p = term.prox(x, eta, NUMERIC_TOLERANCE)?;
    reflect_at(&p, x).map_err(|e| e.in_step("reflection"))
}

/// Douglas–Rachford for φ + ψ:
/// t ← γ(t, R_{ηφ} R_{ηψ} t; τ_r), returning prox_{ηψ}(t).
pub fn douglas_rachford(
    phi: &dyn Proximable,
    psi: &dyn Proximable,
    t0: Iterate,
    opts: &SolverOptions,
) -> Result<SolverRun> {
    opts.validate()?;
    no_field(&t0, "douglas_rachford")?;
    let mut warnings: Vec<String> = opts
        .relaxation
        .validate_relaxation(opts.mode)?
        .into_iter()
        .collect();
    let eta = opts.eta;
    let terms = [phi, psi];
    let mut t = t0;
    let mut x = psi.prox(&t, eta, NUMERIC_TOLERANCE)?;
    let mut obj = split_value(&terms, &x)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: obj,
        change: 0.0,
    }];
    let mut stopper = Stopper::new(opts);
    stopper.update(obj);
    let mut converged = false;
    for r in 1..=opts.max_iter {
        let previous = t.clone();
        // x = prox_{ηψ}(t) is reused for the first reflection
        let s = with_nudges(&mut t, Some(&previous), &mut warnings, |t| {
            let a = if t == &previous {
                reflect_at(&x, t).map_err(|e| e.in_step("reflection"))
            } else {
                reflect_prox(psi, eta, t)
            }
            .map_err(|e| e.in_term(1, psi.label()))?;
            reflect_prox(phi, eta, &a).map_err(|e| e.in_term(0, phi.label()))
        })?;
        t = relax(&t, &s, opts.relaxation.at(r))?;
        x = psi.prox(&t, eta, NUMERIC_TOLERANCE)?;
        obj = split_value(&terms, &x)?;
        let change = iterate_distance(&previous, &t);
        trace.push(TraceEntry {
            iteration: r,
            objective: obj,
            change,
        });
        if change < 1e-12 || stopper.update(obj) {
            converged = true;
            break;
        }
    }
    Ok(SolverRun {
        solver: SolverKind::DouglasRachford,
        schedule: opts.relaxation.clone(),
        eta: Some(eta),
        max_iter: opts.max_iter,
        tolerance: opts.tolerance,
        trace,
        regime: regime(SolverKind::DouglasRachford, x.image().tag()),
        iterate: x,
        objective: obj,
        converged,
        warnings,
        lipschitz_by_construction: None,
    })
}

/// Pixelwise equal-weight Karcher mean of the copies.
fn diagonal_projection(copies: &[Iterate]) -> Result<Iterate> {
    let base = copies[0].image();
    let tag = base.tag();
    let w = vec![1.0; copies.len()];
    let means = model::par_collect(base.len(), |i| {
        let pts: Vec<&[f64]> = copies.iter().map(|c| c.px(i)).collect();
        karcher_chart(tag, &pts, &w)
            .map(|(m, _)| m)
            .map_err(|e| e.at_index(i))
    })?;
    let mut out = base.clone();
    for (i, m) in means.iter().enumerate() {
        out.set_px(i, m);
    }
    Ok(Iterate::new(out))
}

/// Parallel Douglas–Rachford for Σ_k φ_k on the product of K copies:
/// reflection at the diagonal (Karcher mean, then geodesic reflection)
/// followed by the separable reflections R_{ηφ_k}. The output is the
/// Karcher mean of the copies.
pub fn parallel_douglas_rachford(
    terms: &[&dyn Proximable],
    u0: Iterate,
    opts: &SolverOptions,
) -> Result<SolverRun> {
    opts.validate()?;
    no_field(&u0, "parallel_douglas_rachford")?;
    if terms.is_empty() {
        return Err(Error::invalid(
            "parallel douglas-rachford needs at least one term",
        ));
    }
    let mut warnings: Vec<String> = opts
        .relaxation
        .validate_relaxation(opts.mode)?
        .into_iter()
        .collect();
    let reg = regime(SolverKind::ParallelDouglasRachford, u0.image().tag());
    if let super::Regime::BestEffort(why) = reg {
        warnings.push(format!("no convergence guarantee: {why}"));
    }
    let eta = opts.eta;
    let mut t: Vec<Iterate> = vec![u0; terms.len()];
    let mut x = diagonal_projection(&t)?;
    let mut obj = split_value(terms, &x)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: obj,
        change: 0.0,
    }];
    let mut stopper = Stopper::new(opts);
    stopper.update(obj);
    let mut converged = false;
    for r in 1..=opts.max_iter {
        let tau = opts.relaxation.at(r);
        let mean = diagonal_projection(&t)?;
        let next = terms
            .iter()
            .zip(&t)
            .enumerate()
            .map(|(k, (term, tk))| {
                let reflected =
                    reflect_at(&mean, tk).map_err(|e| e.in_step("diagonal reflection"))?;
                let s =
                    reflect_prox(*term, eta, &reflected).map_err(|e| e.in_term(k, term.label()))?;
                relax(tk, &s, tau)
            })
            .collect::<Result<Vec<_>>>()?;
        let change = t
            .iter()
            .zip(&next)
            .map(|(a, b)| iterate_distance(a, b).powi(2))
            .sum::<f64>()
            .sqrt();
        t = next;
        x = diagonal_projection(&t)?;
        obj = split_value(terms, &x)?;
        trace.push(TraceEntry {
            iteration: r,
            objective: obj,
            change,
        });
        if change < 1e-12 || stopper.update(obj) {
            converged = true;
            break;
        }
    }
    Ok(SolverRun {
        solver: SolverKind::ParallelDouglasRachford,
        schedule: opts.relaxation.clone(),
        eta: Some(eta),
        max_iter: opts.max_iter,
        tolerance: opts.tolerance,
        trace,
        regime: reg,
        iterate: x,
        objective: obj,
        converged,
        warnings,
        lipschitz_by_construction: None,
    })
}
