use super::{
    iterate_distance, regime, with_nudges, Proximable, SolverKind, SolverOptions, SolverRun,
    Stopper, TraceEntry,
};
use crate::error::{Error, Result};
use crate::model::{self, Iterate};
use crate::prox::NUMERIC_TOLERANCE;

/// Σ_k φ_k(x).
pub(crate) fn split_value(terms: &[&dyn Proximable], x: &Iterate) -> Result<f64> {
    let v = terms
        .iter()
        .enumerate()
        .map(|(k, t)| t.value(x).map_err(|e| e.in_term(k, t.label())))
        .collect::<Result<Vec<_>>>()?;
    Ok(model::pairwise_sum(&v))
}

/// Cyclic proximal point algorithm for Σ_k φ_k: each sweep applies
/// prox_{λ_r φ_k} for k = 1, …, K in order, with λ_r from the step schedule.
///
/// With `opts.inexact = Some(ε₀)` every prox is computed to ε_r/K where
/// ε_r = ε₀/(r + 1)², which keeps the accumulated error summable.
pub fn cppa(terms: &[&dyn Proximable], x0: Iterate, opts: &SolverOptions) -> Result<SolverRun> {
    opts.validate()?;
    if terms.is_empty() {
        return Err(Error::invalid("cppa needs at least one term"));
    }
    let mut warnings: Vec<String> = opts
        .schedule
        .validate_steps(opts.mode)?
        .into_iter()
        .collect();
    let lipschitz = terms.iter().all(|t| t.lipschitz_by_construction());
    if !lipschitz {
        warnings
            .push("a term is not Lipschitz by construction; convergence is not guaranteed".into());
    }
    let k_terms = terms.len() as f64;
    let mut x = x0;
    let mut obj = with_nudges(&mut x, None, &mut warnings, |x| split_value(terms, x))?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: obj,
        change: 0.0,
    }];
    let mut stopper = Stopper::new(opts);
    stopper.update(obj);
    let mut converged = false;
    for r in 1..=opts.max_iter {
        let lambda = opts.schedule.at(r);
        let tolerance = match opts.inexact {
            Some(e0) => e0 / ((r + 1) as f64).powi(2) / k_terms,
            None => NUMERIC_TOLERANCE,
        };
        let previous = x.clone();
        for (k, term) in terms.iter().enumerate() {
            let before = x.clone();
            x = with_nudges(&mut x, Some(&before), &mut warnings, |x| {
                term.prox(x, lambda, tolerance)
            })
            .map_err(|e| e.in_term(k, term.label()))?;
        }
        obj = with_nudges(&mut x, Some(&previous), &mut warnings, |x| {
            split_value(terms, x)
        })?;
        let change = iterate_distance(&previous, &x);
        trace.push(TraceEntry {
            iteration: r,
            objective: obj,
            change,
        });
        if stopper.update(obj) || change == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(SolverRun {
        solver: SolverKind::Cppa,
        schedule: opts.schedule.clone(),
        eta: None,
        max_iter: opts.max_iter,
        tolerance: opts.tolerance,
        trace,
        regime: regime(SolverKind::Cppa, x.image().tag()),
        iterate: x,
        objective: obj,
        converged,
        warnings,
        lipschitz_by_construction: Some(lipschitz),
    })
}
