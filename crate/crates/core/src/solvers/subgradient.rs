use super::{
    regime, retract, with_nudges, SolverKind, SolverOptions, SolverRun, Subdifferentiable,
    TraceEntry,
};
use crate::error::Result;
use crate::model::Iterate;

/// Normalized subgradient descent x ← exp_x(−τ_r s/‖s‖).
///
/// Objective values are not monotone along the iterates, so the best
/// iterate seen is returned. A zero subgradient ends the run as converged.
pub fn subgradient_descent<P>(problem: &P, x0: Iterate, opts: &SolverOptions) -> Result<SolverRun>
where
    P: Subdifferentiable + ?Sized,
{
    opts.validate()?;
    let mut warnings: Vec<String> = opts
        .schedule
        .validate_steps(opts.mode)?
        .into_iter()
        .collect();
    let mut x = x0;
    let mut obj = with_nudges(&mut x, None, &mut warnings, |x| problem.value(x))?;
    let mut best = (x.clone(), obj);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: obj,
        change: 0.0,
    }];
    let mut converged = false;
    for r in 1..=opts.max_iter {
        let previous = x.clone();
        let s = with_nudges(&mut x, Some(&previous), &mut warnings, |x| {
            problem.subgradient(x)
        })?;
        let norm = s.norm(&x);
        if norm == 0.0 {
            converged = true;
            break;
        }
        let tau = opts.schedule.at(r);
        x = retract(&x, &s, -tau / norm);
        obj = with_nudges(&mut x, Some(&previous), &mut warnings, |x| problem.value(x))?;
        trace.push(TraceEntry {
            iteration: r,
            objective: obj,
            change: tau,
        });
        if obj < best.1 {
            best = (x.clone(), obj);
        }
    }
    Ok(SolverRun {
        solver: SolverKind::Subgradient,
        schedule: opts.schedule.clone(),
        eta: None,
        max_iter: opts.max_iter,
        tolerance: opts.tolerance,
        trace,
        regime: regime(SolverKind::Subgradient, best.0.image().tag()),
        iterate: best.0,
        objective: best.1,
        converged,
        warnings,
        lipschitz_by_construction: None,
    })
}
