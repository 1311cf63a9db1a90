use super::{regime, Direction, SolverKind, SolverOptions, SolverRun, Stopper, TraceEntry};
use crate::error::{Error, Result};
use crate::manifold;
use crate::model::terms::{self, Family, Shape, Var};
use crate::model::{self, Iterate, ManifoldImage, ModelConfig, ModelKind};

/// ½Σ dist²(u_i, f_i) + Σ_g α v_g d_g(u)², with d_g the group distance.
struct Weighted<'a> {
    f: &'a ManifoldImage,
    families: &'a [Family],
    /// Per family, per group.
    v: Vec<Vec<f64>>,
}

impl Weighted<'_> {
    fn value(&self, x: &Iterate) -> Result<f64> {
        let mut total = model::data_term(x.image(), self.f)?;
        for (fam, v) in self.families.iter().zip(&self.v) {
            let parts = model::par_collect(fam.groups.len(), |k| {
                let d2 = fam.groups[k]
                    .iter()
                    .map(|b| b.value(x).map(|d| d * d))
                    .sum::<Result<f64>>()?;
                Ok(v[k] * d2)
            })?;
            total += fam.weight * model::pairwise_sum(&parts);
        }
        Ok(total)
    }

    fn gradient(&self, x: &Iterate) -> Result<Direction> {
        let u = x.image();
        let tag = u.tag();
        let m = tag.tangent_len();
        let mut d = Direction::zeros(x);
        for i in 0..u.len() {
            let g = tag.log(u.px(i), self.f.px(i)).map_err(|e| e.at_index(i))?;
            manifold::axpy(-1.0, &g, &mut d.u[i * m..(i + 1) * m]);
        }
        for (fam, v) in self.families.iter().zip(&self.v) {
            let grads = model::par_collect(fam.groups.len(), |k| {
                let mut out = Vec::new();
                for b in &fam.groups[k] {
                    let (dv, gr) = b.grad(x)?;
                    let c = 2.0 * v[k] * dv;
                    out.extend(
                        gr.into_iter()
                            .map(|(var, gv)| (var, manifold::scale(&gv, c))),
                    );
                }
                Ok(out)
            })?;
            for (var, g) in grads.into_iter().flatten() {
                let Var::U(i) = var else {
                    unreachable!("no tangent fields in TV_phi")
                };
                manifold::axpy(fam.weight, &g, &mut d.u[i * m..(i + 1) * m]);
            }
        }
        Ok(d)
    }
}

/// Group distance: the block value for p = 1, the Euclidean norm of the
/// block values for p = 2.
fn group_distance(group: &[terms::Block], x: &Iterate) -> Result<f64> {
    let d2 = group
        .iter()
        .map(|b| b.value(x).map(|d| d * d))
        .sum::<Result<f64>>()?;
    Ok(d2.sqrt())
}

/// Half-quadratic minimization of D(u; f) + α TV_φ(u): alternates the
/// weights v_g = φ'(d_g)/(2 d_g) with gradient steps on the weighted
/// quadratic. J_φ never increases; an increase is reported as an error.
pub fn half_quadratic(
    f: &ManifoldImage,
    config: &ModelConfig,
    opts: &SolverOptions,
) -> Result<SolverRun> {
    opts.validate()?;
    config.validate()?;
    if config.model != ModelKind::TvPhi {
        return Err(Error::invalid(format!(
            "half-quadratic minimization needs the tvphi model, got {}",
            config.model
        )));
    }
    let families = terms::model_families(f, config);
    let phi = match families.first().map(|fam| fam.shape) {
        Some(Shape::Phi(phi, _)) => phi,
        _ => return Err(Error::invalid("tvphi model without a phi function")),
    };
    let objective = |x: &Iterate| -> Result<f64> {
        Ok(model::data_term(x.image(), f)? + terms::families_value(&families, x)?)
    };

    let mut warnings = Vec::new();
    let mut x = Iterate::new(f.clone());
    let mut obj = objective(&x)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: obj,
        change: 0.0,
    }];
    let mut stopper = Stopper::new(opts);
    stopper.update(obj);
    let mut converged = false;
    let mut capped = 0usize;
    let mut step = 1.0;
    for r in 1..=opts.max_iter {
        let v = families
            .iter()
            .map(|fam| {
                fam.groups
                    .iter()
                    .map(|g| group_distance(g, &x).map(|d| phi.weight(d)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let q = Weighted {
            f,
            families: &families,
            v,
        };
        let previous = x.clone();
        let mut qv = q.value(&x)?;
        let mut inner_done = false;
        for _ in 0..opts.hq_inner_steps {
            let g = q.gradient(&x)?;
            let gn = g.norm(&x);
            if gn <= 1e-12 {
                inner_done = true;
                break;
            }
            step *= 2.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = super::retract(&x, &g, -step);
                if let Ok(tv) = q.value(&trial) {
                    if tv <= qv - 1e-4 * step * gn * gn {
                        x = trial;
                        qv = tv;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                inner_done = true;
                step = 1.0;
                break;
            }
        }
        if !inner_done {
            capped += 1;
        }
        let next = objective(&x)?;
        if next - obj > 1e-12 {
            return Err(Error::ObjectiveIncrease {
                iteration: r,
                before: obj,
                after: next,
            });
        }
        obj = next;
        let change = super::iterate_distance(&previous, &x);
        trace.push(TraceEntry {
            iteration: r,
            objective: obj,
            change,
        });
        if change == 0.0 || stopper.update(obj) {
            converged = true;
            break;
        }
    }
    if capped > 0 {
        warnings.push(format!(
            "inner solve used its full budget of {} steps in {capped} outer iterations",
            opts.hq_inner_steps
        ));
    }
    Ok(SolverRun {
        solver: SolverKind::HalfQuadratic,
        schedule: opts.schedule.clone(),
        eta: None,
        max_iter: opts.max_iter,
        tolerance: opts.tolerance,
        trace,
        regime: regime(SolverKind::HalfQuadratic, f.tag()),
        iterate: x,
        objective: obj,
        converged,
        warnings,
        lipschitz_by_construction: None,
    })
}
