//! Model-level objectives and their splittings into proximable terms.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{
    cppa, douglas_rachford, half_quadratic, parallel_douglas_rachford, subgradient_descent,
    Direction, Functional, Proximable, SolverKind, SolverOptions, SolverRun, Subdifferentiable,
};
use crate::error::{Error, Result};
use crate::manifold::{self, Curvature, ManifoldTag};
use crate::model::terms::{self, Block, Family, Shape, Var};
use crate::model::{self, Iterate, ManifoldImage, ModelConfig, ModelKind};
use crate::prox;

/// ½ Σ dist²(u_i, f_i).
#[derive(Debug, Clone)]
pub struct DataTerm {
    f: ManifoldImage,
}

impl DataTerm {
    pub fn new(f: ManifoldImage) -> Self {
        DataTerm { f }
    }
}

impl Functional for DataTerm {
    fn value(&self, x: &Iterate) -> Result<f64> {
        model::data_term(x.image(), &self.f)
    }
}

impl Proximable for DataTerm {
    fn prox(&self, x: &Iterate, lambda: f64, _tolerance: f64) -> Result<Iterate> {
        x.image().same_shape(&self.f)?;
        let u = super::pixelwise(x.image(), &self.f, |tag, a, b| {
            prox::prox_point_chart(tag, a, b, lambda, 2)
        })?;
        let mut y = x.clone();
        y.u = u;
        Ok(y)
    }

    fn label(&self) -> String {
        "data".into()
    }

    fn lipschitz_by_construction(&self) -> bool {
        true
    }
}

/// Σ dist(u_i, y_i)^p, p ∈ {1, 2}.
#[derive(Debug, Clone)]
pub struct DistanceTerm {
    target: ManifoldImage,
    p: u8,
}

impl DistanceTerm {
    pub fn new(target: ManifoldImage, p: u8) -> Result<Self> {
        if p != 1 && p != 2 {
            return Err(Error::invalid(format!("p must be 1 or 2, got {p}")));
        }
        Ok(DistanceTerm { target, p })
    }
}

impl Functional for DistanceTerm {
    fn value(&self, x: &Iterate) -> Result<f64> {
        x.image().same_shape(&self.target)?;
        let tag = x.image().tag();
        Ok((0..self.target.len())
            .map(|i| tag.dist(x.px(i), self.target.px(i)).powi(self.p as i32))
            .sum())
    }
}

impl Proximable for DistanceTerm {
    fn prox(&self, x: &Iterate, lambda: f64, _tolerance: f64) -> Result<Iterate> {
        x.image().same_shape(&self.target)?;
        // dist² = 2·(½dist²)
        let lam = if self.p == 2 { 2.0 * lambda } else { lambda };
        let p = self.p;
        let u = super::pixelwise(x.image(), &self.target, |tag, a, b| {
            prox::prox_point_chart(tag, a, b, lam, p)
        })?;
        let mut y = x.clone();
        y.u = u;
        Ok(y)
    }

    fn label(&self) -> String {
        format!("dist^{}", self.p)
    }

    fn lipschitz_by_construction(&self) -> bool {
        true
    }
}

/// Σ dist(u_a, u_b)^p over disjoint pixel pairs.
#[derive(Debug, Clone)]
pub struct PairTerm {
    pairs: Vec<(usize, usize)>,
    p: u8,
}

impl PairTerm {
    pub fn new(pairs: Vec<(usize, usize)>, p: u8) -> Result<Self> {
        if p != 1 && p != 2 {
            return Err(Error::invalid(format!("p must be 1 or 2, got {p}")));
        }
        let mut seen: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("pairs must be disjoint"));
        }
        Ok(PairTerm { pairs, p })
    }
}

impl Functional for PairTerm {
    fn value(&self, x: &Iterate) -> Result<f64> {
        let tag = x.image().tag();
        Ok(self
            .pairs
            .iter()
            .map(|&(a, b)| tag.dist(x.px(a), x.px(b)).powi(self.p as i32))
            .sum())
    }
}

impl Proximable for PairTerm {
    fn prox(&self, x: &Iterate, lambda: f64, _tolerance: f64) -> Result<Iterate> {
        let tag = x.image().tag().clone();
        let lam = if self.p == 2 { 2.0 * lambda } else { lambda };
        let mut y = x.clone();
        for &(a, b) in &self.pairs {
            let (pa, pb) = prox::prox_pair_chart(&tag, x.px(a), x.px(b), lam, self.p)
                .map_err(|e| e.at_index(a))?;
            y.u.set_px(a, &pa);
            y.u.set_px(b, &pb);
        }
        Ok(y)
    }

    fn label(&self) -> String {
        format!("pair dist^{}", self.p)
    }

    fn lipschitz_by_construction(&self) -> bool {
        true
    }
}

fn is_flat(tag: &ManifoldTag) -> bool {
    tag.curvature() == Curvature::Flat
}

/// Prox of μ·(group value); returns new values for the group's variables.
fn prox_group(
    shape: &Shape,
    group: &[Block],
    x: &Iterate,
    mu: f64,
    tolerance: f64,
) -> Result<Vec<(Var, Vec<f64>)>> {
    let tag = x.image().tag();
    let m = tag.tangent_len();
    let vars = terms::footprint(group);
    let norm_shape = matches!(shape, Shape::Norm(_));

    if *tag == ManifoldTag::Circle && norm_shape && group.len() == 1 {
        if let Some((w, scale)) = group[0].circle_weights() {
            let bv = group[0].vars();
            let angles: Vec<f64> = bv.iter().map(|&v| x.get(v)[0]).collect();
            let r = prox::circle_weighted_prox(&angles, &w, mu * scale, 1);
            return Ok(bv
                .into_iter()
                .zip(r.principal)
                .map(|(v, a)| (v, vec![a]))
                .collect());
        }
    }

    if is_flat(tag) && norm_shape {
        let col = |v: Var| vars.binary_search(&v).expect("variable in footprint");
        let mut w = DMatrix::zeros(group.len(), vars.len());
        let mut r0 = Vec::with_capacity(group.len() * m);
        for (k, b) in group.iter().enumerate() {
            let (r, wb) = b.flat_residual(x)?;
            for (v, c) in b.vars().into_iter().zip(wb) {
                w[(k, col(v))] += c;
            }
            r0.extend(r);
        }
        let q = prox::linear_norm_dual(&w, m, &r0, mu);
        return Ok(vars
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let mut step = vec![0.0; m];
                for k in 0..group.len() {
                    manifold::axpy(-w[(k, j)], &q[k * m..(k + 1) * m], &mut step);
                }
                let val = match v {
                    Var::U(_) => tag.exp(x.get(v), &step),
                    Var::Xi(..) => {
                        let mut xi = x.get(v).to_vec();
                        manifold::axpy(1.0, &step, &mut xi);
                        xi
                    }
                };
                (v, val)
            })
            .collect());
    }

    if vars.iter().any(|v| matches!(v, Var::Xi(..))) {
        return Err(Error::invalid(
            "proximal steps on tangent fields need a flat manifold; use the subgradient solver",
        ));
    }

    if let ([Block::Pair { a, b }], Shape::Norm(1)) = (group, shape) {
        let (pa, pb) = prox::prox_pair_chart(tag, x.px(*a), x.px(*b), mu, 1)?;
        return Ok(vec![(Var::U(*a), pa), (Var::U(*b), pb)]);
    }

    // iterative prox on a local copy of the footprint pixels
    let pixels: Vec<usize> = vars
        .iter()
        .map(|v| match v {
            Var::U(i) => *i,
            Var::Xi(..) => unreachable!(),
        })
        .collect();
    let local = |i: usize| pixels.binary_search(&i).expect("pixel in footprint");
    let local_group: Vec<Block> = group.iter().map(|b| b.remap(local)).collect();
    let anchors: Vec<Vec<f64>> = pixels.iter().map(|&i| x.px(i).to_vec()).collect();
    let as_iterate = |pts: &[Vec<f64>]| {
        let data: Vec<f64> = pts.iter().flatten().copied().collect();
        Iterate::new(ManifoldImage::from_chart(tag.clone(), pts.len(), 1, data))
    };
    let r = if norm_shape {
        let n = tag.dim();
        prox::gauss_newton_prox(tag, &anchors, mu, 1, tolerance, |pts| {
            let it = as_iterate(pts);
            let mut c = Vec::new();
            let mut blocks = Vec::new();
            for b in &local_group {
                let (r, rows) = b.linearize(&it)?;
                c.extend(r);
                blocks.push(rows);
            }
            let mut j = DMatrix::zeros(c.len(), pts.len() * n);
            let mut row = 0;
            for rows in blocks {
                let mut height = 0;
                for (k, jk) in rows {
                    height = jk.nrows();
                    let mut view = j.view_mut((row, k * n), (height, n));
                    view += jk;
                }
                row += height;
            }
            Ok((c, j))
        })
    } else {
        prox::numeric_prox_within(tag, &anchors, mu, tolerance, |pts| {
            let it = as_iterate(pts);
            let (val, grads) = terms::group_grad(shape, &local_group, &it)?;
            let mut g = vec![tag.zero_tangent(); pts.len()];
            for (v, gv) in grads {
                if let Var::U(i) = v {
                    manifold::axpy(1.0, &gv, &mut g[i]);
                }
            }
            Ok((val, g))
        })
    };
    if !r.converged {
        log::warn!("iterative prox stopped after {} iterations", r.iterations);
    }
    Ok(pixels.into_iter().map(Var::U).zip(r.points).collect())
}

/// The groups of one independent batch of a regularizer family.
#[derive(Debug, Clone)]
pub struct BatchTerm {
    family: Arc<Family>,
    groups: Vec<usize>,
    batch: usize,
}

impl BatchTerm {
    /// Every batch of the regularizer of `config` on images shaped like `u`,
    /// in the fixed order x-differences, y-differences, second order.
    pub fn for_model(u: &ManifoldImage, config: &ModelConfig) -> Vec<BatchTerm> {
        terms::model_families(u, config)
            .into_iter()
            .flat_map(|fam| {
                let fam = Arc::new(fam);
                fam.batches()
                    .into_iter()
                    .enumerate()
                    .map(move |(batch, groups)| BatchTerm {
                        family: fam.clone(),
                        groups,
                        batch,
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

impl Functional for BatchTerm {
    fn value(&self, x: &Iterate) -> Result<f64> {
        let v = self
            .groups
            .iter()
            .map(|&g| terms::group_value(&self.family.shape, &self.family.groups[g], x))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.family.weight * model::pairwise_sum(&v))
    }
}

impl Proximable for BatchTerm {
    fn prox(&self, x: &Iterate, lambda: f64, tolerance: f64) -> Result<Iterate> {
        let mu = lambda * self.family.weight;
        let fam = &self.family;
        let updates = model::par_collect(self.groups.len(), |k| {
            prox_group(&fam.shape, &fam.groups[self.groups[k]], x, mu, tolerance)
        })?;
        let mut y = x.clone();
        for (v, val) in updates.into_iter().flatten() {
            y.set(v, &val);
        }
        Ok(y)
    }

    fn label(&self) -> String {
        format!("{}[{}]", self.family.label, self.batch)
    }

    fn lipschitz_by_construction(&self) -> bool {
        // sums of distances and norms of logs grow at most linearly
        true
    }
}

/// `c·term`.
struct Scaled<'a> {
    term: &'a dyn Proximable,
    c: f64,
}

impl Functional for Scaled<'_> {
    fn value(&self, x: &Iterate) -> Result<f64> {
        Ok(self.c * self.term.value(x)?)
    }
}

impl Proximable for Scaled<'_> {
    fn prox(&self, x: &Iterate, lambda: f64, tolerance: f64) -> Result<Iterate> {
        self.term.prox(x, self.c * lambda, tolerance)
    }
}

/// The whole regularizer α·R as one term. Its prox is exact when the
/// regularizer is a single batch; otherwise argmin ½d²(·, x) + λαR is
/// solved by an inner parallel Douglas–Rachford run.
#[derive(Debug, Clone)]
pub struct RegularizerTerm {
    batches: Vec<BatchTerm>,
    inner_iter: usize,
}

impl RegularizerTerm {
    pub fn new(u: &ManifoldImage, config: &ModelConfig, inner_iter: usize) -> Self {
        RegularizerTerm {
            batches: BatchTerm::for_model(u, config),
            inner_iter: inner_iter.max(1),
        }
    }
}

impl Functional for RegularizerTerm {
    fn value(&self, x: &Iterate) -> Result<f64> {
        let v = self
            .batches
            .iter()
            .map(|b| b.value(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(model::pairwise_sum(&v))
    }
}

impl Proximable for RegularizerTerm {
    fn prox(&self, x: &Iterate, lambda: f64, tolerance: f64) -> Result<Iterate> {
        match self.batches.as_slice() {
            [] => Ok(x.clone()),
            [only] => only.prox(x, lambda, tolerance),
            all => {
                let anchor = DataTerm::new(x.image().clone());
                let scaled: Vec<Scaled> =
                    all.iter().map(|b| Scaled { term: b, c: lambda }).collect();
                let mut terms: Vec<&dyn Proximable> = vec![&anchor];
                terms.extend(scaled.iter().map(|t| t as &dyn Proximable));
                let opts = SolverOptions::default()
                    .with_max_iter(self.inner_iter)
                    .with_tolerance(0.0);
                Ok(parallel_douglas_rachford(&terms, x.clone(), &opts)?.iterate)
            }
        }
    }

    fn label(&self) -> String {
        "regularizer".into()
    }

    fn lipschitz_by_construction(&self) -> bool {
        true
    }
}

/// J(u) = D(u; f) + α·R(u) for a model configuration. For TGV the
/// objective is the joint functional of (u, ξ).
#[derive(Debug, Clone)]
pub struct DenoiseProblem {
    f: ManifoldImage,
    config: ModelConfig,
    families: Vec<Family>,
}

impl DenoiseProblem {
    pub fn new(f: ManifoldImage, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let families = terms::model_families(&f, &config);
        Ok(DenoiseProblem {
            f,
            config,
            families,
        })
    }

    pub fn data(&self) -> &ManifoldImage {
        &self.f
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// u = f, with a zero tangent field for TGV.
    pub fn initial(&self) -> Iterate {
        if self.config.model == ModelKind::Tgv {
            let n = self.f.len() * self.f.tag().tangent_len();
            Iterate::with_field(self.f.clone(), vec![0.0; n], vec![0.0; n])
        } else {
            Iterate::new(self.f.clone())
        }
    }

    /// Data term first, then the regularizer batches.
    pub fn splitting(&self) -> Vec<Box<dyn Proximable>> {
        let mut out: Vec<Box<dyn Proximable>> = vec![Box::new(DataTerm::new(self.f.clone()))];
        for b in BatchTerm::for_model(&self.f, &self.config) {
            out.push(Box::new(b));
        }
        out
    }

    fn check_proximal(&self, solver: SolverKind) -> Result<()> {
        if self.config.model == ModelKind::Tgv && !is_flat(self.f.tag()) {
            return Err(Error::invalid(format!(
                "the {solver} solver supports TGV only on flat manifolds; use --solver subgradient"
            )));
        }
        Ok(())
    }
}

impl Functional for DenoiseProblem {
    fn value(&self, x: &Iterate) -> Result<f64> {
        Ok(model::data_term(x.image(), &self.f)? + terms::families_value(&self.families, x)?)
    }
}

impl Subdifferentiable for DenoiseProblem {
    fn subgradient(&self, x: &Iterate) -> Result<Direction> {
        let u = x.image();
        let tag = u.tag();
        let m = tag.tangent_len();
        let mut d = Direction::zeros(x);
        for i in 0..u.len() {
            let g = tag.log(u.px(i), self.f.px(i)).map_err(|e| e.at_index(i))?;
            manifold::axpy(-1.0, &g, &mut d.u[i * m..(i + 1) * m]);
        }
        for fam in &self.families {
            let grads = model::par_collect(fam.groups.len(), |k| {
                terms::group_grad(&fam.shape, &fam.groups[k], x).map(|(_, gr)| gr)
            })?;
            for (v, g) in grads.into_iter().flatten() {
                let target = match v {
                    Var::U(i) => &mut d.u[i * m..(i + 1) * m],
                    Var::Xi(k, i) => {
                        &mut d.xi.as_mut().expect("field present for TGV")[k][i * m..(i + 1) * m]
                    }
                };
                manifold::axpy(fam.weight, &g, target);
            }
        }
        Ok(d)
    }
}

/// Runs `solver` on the model `config` with data `f`, starting from f.
pub fn denoise(
    f: &ManifoldImage,
    config: &ModelConfig,
    solver: SolverKind,
    opts: &SolverOptions,
) -> Result<SolverRun> {
    let problem = DenoiseProblem::new(f.clone(), config.clone())?;
    match solver {
        SolverKind::Subgradient => subgradient_descent(&problem, problem.initial(), opts),
        SolverKind::HalfQuadratic => half_quadratic(f, config, opts),
        SolverKind::Cppa => {
            problem.check_proximal(solver)?;
            let split = problem.splitting();
            let refs: Vec<&dyn Proximable> = split.iter().map(|t| t.as_ref()).collect();
            cppa(&refs, problem.initial(), opts)
        }
        SolverKind::DouglasRachford => {
            if config.model == ModelKind::Tgv {
                return Err(Error::invalid(
                    "the dr solver does not support TGV; use cppa or subgradient",
                ));
            }
            let data = DataTerm::new(f.clone());
            let reg = RegularizerTerm::new(f, config, opts.inner_iter);
            douglas_rachford(&data, &reg, problem.initial(), opts)
        }
        SolverKind::ParallelDouglasRachford => {
            if config.model == ModelKind::Tgv {
                return Err(Error::invalid(
                    "the pdr solver does not support TGV; use cppa or subgradient",
                ));
            }
            let split = problem.splitting();
            let refs: Vec<&dyn Proximable> = split.iter().map(|t| t.as_ref()).collect();
            parallel_douglas_rachford(&refs, problem.initial(), opts)
        }
    }
}
