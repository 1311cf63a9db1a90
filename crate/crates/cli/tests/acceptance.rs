//! End-to-end acceptance checks. Every check prints one `PASS`/`FAIL` line
//! to stderr (bypassing the test harness capture) before asserting.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use manivar::manifold::circle::wrap;
use manivar::model::{self, ManifoldImage, ModelConfig, ModelKind, Phi, PhiKind};
use manivar::prox;
use manivar::sample::{random_coords, random_point, tangent_with_norm};
use manivar::solvers::{denoise, reflect_prox, DistanceTerm, PairTerm, SolverKind, SolverOptions};
use manivar::transport::{
    transport_closed, transport_pole, transport_schild, CoefficientCase, JacobiFrame,
};
use manivar::{ManifoldTag, Point};
use manivar_cli::{add_noise, mse, phantom, run_denoise, DenoiseSettings, NoiseSpec, Phantom};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, passed: bool, detail: String) {
    let status = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr().lock(), "[{status}] {name}: {detail}");
    assert!(passed, "{name}: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn lin(a: &[f64], ca: f64, b: &[f64], cb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

fn tag(s: &str) -> ManifoldTag {
    s.parse().unwrap()
}

// ---------------------------------------------------------------------------
// differentials

const H: f64 = 1e-4;

fn diff_tags() -> Vec<ManifoldTag> {
    ["Euclidean(3)", "Circle", "Sphere2", "SPD(2)", "SPD(3)"]
        .iter()
        .map(|s| tag(s))
        .collect()
}

fn cases(r: &mut ChaCha8Rng) -> Vec<CoefficientCase> {
    use CoefficientCase::*;
    vec![
        ExpBase,
        LogBase,
        LogArg,
        GeoFirst(r.gen_range(0.1..0.9)),
        GeoSecond(r.gen_range(0.1..0.9)),
        ExpArg,
    ]
}

struct Instance {
    x: Vec<f64>,
    other: Vec<f64>,
    frame: JacobiFrame,
    xi: Vec<f64>,
}

fn instance(case: CoefficientCase, tag: &ManifoldTag, r: &mut ChaCha8Rng) -> Instance {
    let x = random_point(tag, r);
    let u = tangent_with_norm(&x, r.gen_range(0.2..2.0), r);
    let xi = tangent_with_norm(&x, 1.0, r).coords().to_vec();
    let frame = JacobiFrame::along(tag, x.coords(), u.coords());
    let other = match case {
        CoefficientCase::ExpBase | CoefficientCase::ExpArg => u.coords().to_vec(),
        _ => tag.exp(x.coords(), u.coords()),
    };
    Instance {
        x: x.coords().to_vec(),
        other,
        frame,
        xi,
    }
}

/// Central difference of the map selected by `case`, as a tangent vector
/// at its output point.
fn central_difference(case: CoefficientCase, tag: &ManifoldTag, inst: &Instance) -> Vec<f64> {
    use CoefficientCase::*;
    let (x, other, xi) = (&inst.x[..], &inst.other[..], &inst.xi[..]);
    let eval = |s: f64| -> Vec<f64> {
        let xs = tag.exp(x, &lin(xi, s, xi, 0.0));
        match case {
            ExpBase => tag.exp(&xs, &tag.transport_along(x, xi, s, other)),
            LogBase => {
                let v = tag.log(&xs, other).unwrap();
                tag.transport(&xs, x, &v).unwrap()
            }
            LogArg => tag.log(other, &xs).unwrap(),
            GeoFirst(t) => tag.geodesic(&xs, other, t).unwrap(),
            GeoSecond(t) => tag.geodesic(other, &xs, t).unwrap(),
            ExpArg => tag.exp(x, &lin(other, 1.0, xi, s)),
        }
    };
    let (p, m) = (eval(H), eval(-H));
    match case {
        LogBase | LogArg => lin(&p, 0.5 / H, &m, -0.5 / H),
        _ => {
            let c = eval(0.0);
            lin(
                &tag.log(&c, &p).unwrap(),
                0.5 / H,
                &tag.log(&c, &m).unwrap(),
                -0.5 / H,
            )
        }
    }
}

#[test]
fn differential_correctness() {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for tag in diff_tags() {
        for _ in 0..100 {
            for case in cases(&mut r) {
                let inst = instance(case, &tag, &mut r);
                let an = inst.frame.apply(case, &inst.xi).unwrap();
                let num = central_difference(case, &tag, &inst);
                let at = inst.frame.point_at(case.output_time());
                let err = tag.norm(&at, &lin(&an, 1.0, &num, -1.0));
                worst = worst.max(err / tag.norm(&at, &an).max(1e-3));
                count += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "differentials vs central differences",
        worst <= 1e-5 && elapsed < Duration::from_secs(30),
        format!("{count} instances, worst relative error {worst:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn adjoint_identity() {
    let mut r = rng(102);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for tag in diff_tags() {
        for _ in 0..100 {
            for case in cases(&mut r) {
                let inst = instance(case, &tag, &mut r);
                let at = inst.frame.point_at(case.output_time());
                let w =
                    tangent_with_norm(&Point::new(tag.clone(), at.clone()).unwrap(), 1.0, &mut r);
                let lhs = tag.inner(&at, &inst.frame.apply(case, &inst.xi).unwrap(), w.coords());
                let rhs = tag.inner(
                    &inst.x,
                    &inst.xi,
                    &inst.frame.apply_adjoint(case, w.coords()).unwrap(),
                );
                worst = worst.max((lhs - rhs).abs());
                count += 1;
            }
        }
    }
    report(
        "adjoint identity",
        worst <= 1e-10,
        format!("{count} instances, worst |<DF xi, w> - <xi, DF* w>| = {worst:.2e}"),
    );
}

#[test]
fn transport_ladders() {
    let mut r = rng(103);
    let mut worst: f64 = 0.0;
    for tag in [ManifoldTag::Sphere2, ManifoldTag::Spd(3)] {
        for _ in 0..100 {
            let x = random_point(&tag, &mut r);
            let u = tangent_with_norm(&x, r.gen_range(0.1..1.5), &mut r);
            let y = manivar::manifold::exp(&x, &u).unwrap();
            let xi = tangent_with_norm(&x, r.gen_range(0.05..1.0), &mut r);
            let a = transport_closed(&x, &y, &xi).unwrap();
            let b = transport_pole(&x, &y, &xi).unwrap();
            worst = worst.max(tag.norm(y.coords(), &lin(a.coords(), 1.0, b.coords(), -1.0)));
        }
    }
    let tag = ManifoldTag::Sphere2;
    let x = random_point(&tag, &mut r);
    let u = tangent_with_norm(&x, 0.8, &mut r);
    let y = manivar::manifold::exp(&x, &u).unwrap();
    let dir = tangent_with_norm(&x, 1.0, &mut r);
    let schild = |s: f64| {
        let xi = dir.scaled(s);
        let a = transport_closed(&x, &y, &xi).unwrap();
        let b = transport_schild(&x, &y, &xi).unwrap();
        tag.norm(y.coords(), &lin(a.coords(), 1.0, b.coords(), -1.0))
    };
    let (e1, e2) = (schild(0.1), schild(0.05));
    let order = (e1 / e2).log2();
    report(
        "pole ladder exactness and Schild order",
        worst <= 1e-8 && order >= 1.8,
        format!("pole ladder worst error {worst:.2e} over 200 instances; Schild errors {e1:.2e} -> {e2:.2e}, order {order:.3}"),
    );
}

// ---------------------------------------------------------------------------
// prox oracles

const GRID_STEP: f64 = 1e-4;

fn cdist(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(move |k| lo + (hi - lo) * k as f64 / n as f64)
}

struct Branch {
    name: String,
    worst: f64,
    count: usize,
}

impl Branch {
    fn new(name: impl Into<String>) -> Self {
        Branch {
            name: name.into(),
            worst: f64::NEG_INFINITY,
            count: 0,
        }
    }

    /// Records analytic − oracle objective values.
    fn record(&mut self, analytic: f64, oracle: f64) {
        self.worst = self.worst.max(analytic - oracle);
        self.count += 1;
    }
}

fn point_branches(tag: &ManifoldTag, r: &mut ChaCha8Rng) -> Vec<Branch> {
    let mut out = Vec::new();
    for (p, mode) in [(1u8, "moves"), (1, "lands"), (2, "square")] {
        let mut b = Branch::new(format!("{tag} dist-to-point p={p} {mode}"));
        while b.count < 50 {
            let x = random_point(tag, r);
            let y = random_point(tag, r);
            let d = tag.dist(x.coords(), y.coords());
            if d < 1e-3 || tag.log(x.coords(), y.coords()).is_err() {
                continue;
            }
            let lambda = match mode {
                "moves" => d * r.gen_range(0.1..0.9),
                "lands" => d * r.gen_range(1.1..3.0),
                _ => r.gen_range(0.1..3.0),
            };
            let obj = |z: &[f64]| {
                0.5 * tag.dist(z, x.coords()).powi(2)
                    + lambda / p as f64 * tag.dist(z, y.coords()).powi(p as i32)
            };
            let res = prox::prox_dist_to_point(&x, &y, lambda, p).unwrap();
            let oracle = grid(0.0, 1.0, GRID_STEP)
                .map(|t| obj(&tag.geodesic(x.coords(), y.coords(), t).unwrap()))
                .fold(f64::INFINITY, f64::min);
            b.record(obj(res.points[0].coords()), oracle);
        }
        out.push(b);
    }
    for (p, mode) in [(1u8, "moves"), (1, "meets"), (2, "square")] {
        let mut b = Branch::new(format!("{tag} pair p={p} {mode}"));
        while b.count < 50 {
            let x = random_point(tag, r);
            let y = random_point(tag, r);
            let d = tag.dist(x.coords(), y.coords());
            if d < 1e-3 || tag.log(x.coords(), y.coords()).is_err() {
                continue;
            }
            let lambda = match mode {
                "moves" => 0.5 * d * r.gen_range(0.1..0.9),
                "meets" => 0.5 * d * r.gen_range(1.1..3.0),
                _ => r.gen_range(0.1..3.0),
            };
            let obj = |a: &[f64], c: &[f64]| {
                0.5 * tag.dist(a, x.coords()).powi(2)
                    + 0.5 * tag.dist(c, y.coords()).powi(2)
                    + lambda / p as f64 * tag.dist(a, c).powi(p as i32)
            };
            let res = prox::prox_dist_pair(&x, &y, lambda, p).unwrap();
            let at = |t: f64| tag.geodesic(x.coords(), y.coords(), t).unwrap();
            let symmetric = grid(0.0, 0.5, GRID_STEP).map(|s| obj(&at(s), &at(1.0 - s)));
            let coarse: Vec<Vec<f64>> = grid(0.0, 1.0, 0.01).map(at).collect();
            let mut oracle = symmetric.fold(f64::INFINITY, f64::min);
            for a in &coarse {
                for c in &coarse {
                    oracle = oracle.min(obj(a, c));
                }
            }
            b.record(obj(res.points[0].coords(), res.points[1].coords()), oracle);
        }
        out.push(b);
    }
    out
}

fn circle_diff_branch(order: u8, power: u8, mode: &str, r: &mut ChaCha8Rng) -> Branch {
    let w: Vec<f64> = if order == 1 {
        vec![-1.0, 1.0]
    } else {
        vec![1.0, -2.0, 1.0]
    };
    let nw2: f64 = w.iter().map(|c| c * c).sum();
    let mut b = Branch::new(format!(
        "Circle order-{order} difference power {power} {mode}"
    ));
    while b.count < 50 {
        let mut x: Vec<f64> = (0..w.len()).map(|_| r.gen_range(-PI..PI)).collect();
        if mode == "two-fold" {
            // force (<x, w>)_2pi = -pi
            let last = w.len() - 1;
            let rest: f64 = x[..last].iter().zip(&w).map(|(a, c)| a * c).sum();
            x[last] = wrap((PI - rest) / w[last]);
            let s: f64 = x.iter().zip(&w).map(|(a, c)| a * c).sum();
            if (wrap(s).abs() - PI).abs() > 1e-13 {
                continue;
            }
        }
        let s = wrap(x.iter().zip(&w).map(|(a, c)| a * c).sum());
        let lambda = match mode {
            "shrinks" if power == 1 => s.abs() / nw2 * r.gen_range(0.1..0.9),
            "annihilates" => s.abs() / nw2 * r.gen_range(1.1..3.0),
            _ => r.gen_range(0.05..2.0),
        };
        if lambda <= 0.0 {
            continue;
        }
        let obj = |z: &[f64]| {
            let fit: f64 = z
                .iter()
                .zip(&x)
                .map(|(a, c)| 0.5 * cdist(*a, *c).powi(2))
                .sum();
            let v = wrap(z.iter().zip(&w).map(|(a, c)| a * c).sum()).abs();
            fit + lambda / power as f64 * v.powi(power as i32)
        };
        let pts: Vec<Point> = x.iter().map(|&a| Point::circle(a)).collect();
        let res = prox::prox_circle_diff(&pts, lambda, order, power).unwrap();
        let coords = |ps: &[Point]| ps.iter().map(|p| p.coords()[0]).collect::<Vec<_>>();
        // fine grid along the w direction, coarse grid over the torus
        let mut oracle = grid(-2.0 * PI, 2.0 * PI, GRID_STEP)
            .map(|c| {
                obj(&lin(&x, 1.0, &w, c / nw2)
                    .into_iter()
                    .map(wrap)
                    .collect::<Vec<_>>())
            })
            .fold(f64::INFINITY, f64::min);
        let coarse: Vec<f64> = grid(-PI, PI, if order == 1 { 0.01 } else { 0.1 }).collect();
        let mut z = vec![0.0; w.len()];
        let mut idx = vec![0usize; w.len()];
        loop {
            for (k, &i) in idx.iter().enumerate() {
                z[k] = coarse[i];
            }
            oracle = oracle.min(obj(&z));
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < coarse.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
        b.record(obj(&coords(&res.points)), oracle);
        if mode == "two-fold" {
            assert!(res.multivalued);
            b.record(obj(&coords(res.alternatives.as_ref().unwrap())), oracle);
        }
    }
    b
}

fn circle_data_branch(wraps: bool, r: &mut ChaCha8Rng) -> Branch {
    let mut b = Branch::new(format!(
        "Circle data prox {}",
        if wraps { "across pi" } else { "inside" }
    ));
    while b.count < 50 {
        let (x, y) = (r.gen_range(-PI..PI), r.gen_range(-PI..PI));
        if ((x - y).abs() > PI) != wraps {
            continue;
        }
        let lambda = r.gen_range(0.05..3.0);
        let obj = |z: f64| 0.5 * cdist(z, x).powi(2) + 0.5 * lambda * cdist(z, y).powi(2);
        let res = prox::prox_circle_data(&Point::circle(x), &Point::circle(y), lambda).unwrap();
        let oracle = grid(-PI, PI, GRID_STEP)
            .map(obj)
            .fold(f64::INFINITY, f64::min);
        b.record(obj(res.points[0].coords()[0]), oracle);
    }
    b
}

#[test]
fn prox_oracles() {
    let mut r = rng(104);
    let mut branches = Vec::new();
    for t in ["Euclidean(2)", "Circle", "Sphere2", "SPD(2)"] {
        branches.extend(point_branches(&tag(t), &mut r));
    }
    for order in [1, 2] {
        for (power, mode) in [
            (1, "shrinks"),
            (1, "annihilates"),
            (1, "two-fold"),
            (2, "square"),
            (2, "two-fold"),
        ] {
            branches.push(circle_diff_branch(order, power, mode, &mut r));
        }
    }
    branches.push(circle_data_branch(false, &mut r));
    branches.push(circle_data_branch(true, &mut r));
    let failed: Vec<String> = branches
        .iter()
        .filter(|b| b.worst > 1e-6)
        .map(|b| format!("{} ({:.2e})", b.name, b.worst))
        .collect();
    let worst = branches
        .iter()
        .map(|b| b.worst)
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        "prox vs grid-search oracle",
        failed.is_empty(),
        format!(
            "{} branches x 50 instances, worst analytic - oracle = {worst:.2e}{}",
            branches.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failed.join(", "))
            }
        ),
    );
}

// ---------------------------------------------------------------------------
// cross-solver agreement

fn circle_objective(u: &[f64], f: &[f64], alpha: f64) -> f64 {
    let d: f64 = u
        .iter()
        .zip(f)
        .map(|(a, b)| 0.5 * cdist(*a, *b).powi(2))
        .sum();
    let t: f64 = u.windows(2).map(|w| cdist(w[1], w[0])).sum();
    d + alpha * t
}

/// Projected gradient on the dual of 1-D Euclidean TV.
fn euclidean_tv(f: &[f64], alpha: f64) -> Vec<f64> {
    let n = f.len();
    let primal = |z: &[f64]| {
        let mut u = f.to_vec();
        for k in 0..n - 1 {
            u[k] += z[k];
            u[k + 1] -= z[k];
        }
        u
    };
    let mut z = vec![0.0; n - 1];
    for _ in 0..200_000 {
        let u = primal(&z);
        for k in 0..n - 1 {
            z[k] = (z[k] - 0.25 * (u[k] - u[k + 1])).clamp(-alpha, alpha);
        }
    }
    primal(&z)
}

/// Dynamic programming over a 6284-point angle grid, then the exact
/// Euclidean solution on the lift of the grid optimum.
fn circle_tv_oracle(f: &[f64], alpha: f64) -> f64 {
    let n_grid = 6284;
    let g: Vec<f64> = (0..n_grid)
        .map(|k| -PI + 2.0 * PI * k as f64 / n_grid as f64)
        .collect();
    let mut cost: Vec<f64> = g.iter().map(|&a| 0.5 * cdist(a, f[0]).powi(2)).collect();
    let mut back = vec![vec![0usize; n_grid]; f.len()];
    for i in 1..f.len() {
        let mut next = vec![f64::INFINITY; n_grid];
        for (b, &gb) in g.iter().enumerate() {
            let (c, a) = g
                .iter()
                .enumerate()
                .map(|(a, &ga)| (cost[a] + alpha * cdist(gb, ga), a))
                .fold((f64::INFINITY, 0), |m, v| if v.0 < m.0 { v } else { m });
            next[b] = c + 0.5 * cdist(gb, f[i]).powi(2);
            back[i][b] = a;
        }
        cost = next;
    }
    let mut k = (0..n_grid)
        .min_by(|&a, &b| cost[a].total_cmp(&cost[b]))
        .unwrap();
    let mut u = vec![0.0; f.len()];
    for i in (0..f.len()).rev() {
        u[i] = g[k];
        k = back[i][k];
    }
    let mut lifted = vec![u[0]];
    for i in 1..u.len() {
        lifted.push(lifted[i - 1] + wrap(u[i] - u[i - 1]));
    }
    let lf: Vec<f64> = lifted.iter().zip(f).map(|(a, b)| a + wrap(b - a)).collect();
    let refined: Vec<f64> = euclidean_tv(&lf, alpha).into_iter().map(wrap).collect();
    circle_objective(&u, f, alpha).min(circle_objective(&refined, f, alpha))
}

fn timed_run(
    f: &ManifoldImage,
    cfg: &ModelConfig,
    solver: SolverKind,
    iters: usize,
) -> (f64, Duration) {
    let start = Instant::now();
    let opts = SolverOptions::default()
        .with_max_iter(iters)
        .with_tolerance(1e-14);
    let run = denoise(f, cfg, solver, &opts).unwrap();
    (run.objective, start.elapsed())
}

fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo.abs()
}

#[test]
fn cross_solver_agreement_circle() {
    let clean = ManifoldImage::new(ManifoldTag::Circle, 1, 4, vec![2.5, 2.5, -2.5, -2.5]).unwrap();
    let f = add_noise(
        &clean,
        &NoiseSpec {
            sigma: 0.3,
            seed: 3,
        },
    )
    .unwrap();
    let alpha = 0.5;
    let oracle = circle_tv_oracle(f.data(), alpha);
    let cfg = ModelConfig::new(ModelKind::Tv, alpha);
    let runs: Vec<(SolverKind, f64, Duration)> = [
        (SolverKind::Subgradient, 200_000),
        (SolverKind::Cppa, 100_000),
        (SolverKind::DouglasRachford, 2000),
        (SolverKind::ParallelDouglasRachford, 5000),
    ]
    .into_iter()
    .map(|(s, n)| {
        let (o, t) = timed_run(&f, &cfg, s, n);
        (s, o, t)
    })
    .collect();
    let values: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let spread = relative_spread(&values);
    let off = values
        .iter()
        .map(|v| (v - oracle).abs())
        .fold(0.0, f64::max);
    let slowest = runs.iter().map(|r| r.2).max().unwrap();
    let detail: Vec<String> = runs
        .iter()
        .map(|(s, o, t)| format!("{s} {o:.9} ({t:.2?})"))
        .collect();
    report(
        "cross-solver agreement, 1x4 Circle TV",
        spread <= 1e-3 && off <= 1e-4 && slowest < Duration::from_secs(60),
        format!(
            "oracle {oracle:.9}; {}; relative spread {spread:.2e}, max |J - oracle| {off:.2e}",
            detail.join(", ")
        ),
    );
}

#[test]
fn cross_solver_agreement_spd() {
    let mut r = rng(5);
    let t = ManifoldTag::Spd(2);
    let data: Vec<f64> = (0..16).flat_map(|_| random_coords(&t, &mut r)).collect();
    let f = ManifoldImage::new(t, 4, 4, data).unwrap();
    let cfg = ModelConfig::new(ModelKind::Tv, 0.3);
    let runs: Vec<(SolverKind, f64, Duration)> = [
        (SolverKind::Subgradient, 10_000),
        (SolverKind::Cppa, 5000),
        (SolverKind::DouglasRachford, 300),
        (SolverKind::ParallelDouglasRachford, 3000),
    ]
    .into_iter()
    .map(|(s, n)| {
        let (o, t) = timed_run(&f, &cfg, s, n);
        (s, o, t)
    })
    .collect();
    let values: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let spread = relative_spread(&values);
    let slowest = runs.iter().map(|r| r.2).max().unwrap();
    let detail: Vec<String> = runs
        .iter()
        .map(|(s, o, t)| format!("{s} {o:.6} ({t:.2?})"))
        .collect();
    report(
        "cross-solver agreement, 4x4 SPD(2) TV",
        spread <= 1e-3 && slowest < Duration::from_secs(60),
        format!("{}; relative spread {spread:.2e}", detail.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// half-quadratic

#[test]
fn half_quadratic_monotone_on_spd_phantom() {
    let clean = phantom(Phantom::SpdGradient, 16, 16);
    let f = add_noise(
        &clean,
        &NoiseSpec {
            sigma: 0.1,
            seed: 7,
        },
    )
    .unwrap();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut lines = Vec::new();
    for (kind, eps) in [
        (PhiKind::Phi1, 0.1),
        (PhiKind::Phi2, 0.1),
        (PhiKind::Phi3, 3.0),
    ] {
        let cfg = ModelConfig::new(ModelKind::TvPhi, 0.1).with_phi(Phi::new(kind, eps).unwrap());
        let opts = SolverOptions::default().with_max_iter(40);
        let run = denoise(&f, &cfg, SolverKind::HalfQuadratic, &opts).unwrap();
        let rise = run
            .trace
            .windows(2)
            .map(|w| w[1].objective - w[0].objective)
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(rise);
        let (first, last) = (run.trace[0].objective, run.trace.last().unwrap().objective);
        lines.push(format!(
            "{kind:?}: {first:.6} -> {last:.6} in {} steps",
            run.trace.len()
        ));
    }
    report(
        "half-quadratic monotonicity, 16x16 SPD(2)",
        worst <= 1e-12,
        format!("{}; largest step increase {worst:.2e}", lines.join(", ")),
    );
}

fn phi_objective(u: &[f64], f: &[f64], alpha: f64, phi: &Phi) -> f64 {
    let d: f64 = u.iter().zip(f).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    d + alpha * u.windows(2).map(|w| phi.value(w[1] - w[0])).sum::<f64>()
}

/// Plain gradient descent on the smooth objective.
fn phi_minimizer(f: &[f64], alpha: f64, phi: &Phi) -> Vec<f64> {
    let mut u = f.to_vec();
    for _ in 0..2_000_000 {
        let mut g: Vec<f64> = u.iter().zip(f).map(|(a, b)| a - b).collect();
        for k in 0..u.len() - 1 {
            let s = alpha * phi.derivative(u[k + 1] - u[k]);
            g[k] -= s;
            g[k + 1] += s;
        }
        if g.iter().map(|c| c * c).sum::<f64>().sqrt() < 1e-14 {
            break;
        }
        for (a, c) in u.iter_mut().zip(&g) {
            *a -= 0.05 * c;
        }
    }
    u
}

#[test]
fn half_quadratic_matches_smooth_minimizer() {
    let f = [0.0, 1.0, 0.3];
    let alpha = 0.4;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (kind, eps) in [
        (PhiKind::Phi1, 0.2),
        (PhiKind::Phi2, 0.3),
        (PhiKind::Phi3, 0.8),
    ] {
        let phi = Phi::new(kind, eps).unwrap();
        let img = ManifoldImage::new(ManifoldTag::Euclidean(1), 1, 3, f.to_vec()).unwrap();
        let cfg = ModelConfig::new(ModelKind::TvPhi, alpha).with_phi(phi);
        let opts = SolverOptions::default()
            .with_max_iter(5000)
            .with_tolerance(0.0);
        let run = denoise(&img, &cfg, SolverKind::HalfQuadratic, &opts).unwrap();
        let oracle = phi_minimizer(&f, alpha, &phi);
        let err = run
            .image()
            .data()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        lines.push(format!(
            "{kind:?}: J {:.12} vs oracle {:.12}, max |u - u*| {err:.2e}",
            run.objective,
            phi_objective(&oracle, &f, alpha, &phi)
        ));
    }
    report(
        "half-quadratic limit vs smooth minimizer, 1x3 Euclidean",
        worst <= 1e-6,
        lines.join("; "),
    );
}

// ---------------------------------------------------------------------------
// denoising

#[test]
fn denoising_effect() {
    let start = Instant::now();
    let clean = phantom(Phantom::S1Blocks, 64, 64);
    let f = add_noise(
        &clean,
        &NoiseSpec {
            sigma: 0.3,
            seed: 1,
        },
    )
    .unwrap();
    let noisy = mse(&f, &clean).unwrap();
    let run = |model, alpha, beta| {
        let s = DenoiseSettings {
            model,
            alpha,
            beta,
            solver: SolverKind::Cppa,
            iters: 200,
            ..Default::default()
        };
        mse(run_denoise(&f, &s).unwrap().image(), &clean).unwrap()
    };
    let tv = run(ModelKind::Tv, 0.3, 0.5);
    let tvtv2 = run(ModelKind::TvTv2, 0.3, 0.6);
    let tgv = run(ModelKind::Tgv, 0.4, 0.5);
    let elapsed = start.elapsed();
    report(
        "denoising, 64x64 s1-blocks, sigma 0.3",
        noisy / tv >= 5.0 && tvtv2 <= 1.1 * tv && tgv <= 1.1 * tv && elapsed < Duration::from_secs(300),
        format!(
            "MSE noisy {noisy:.5}, TV {tv:.5} ({:.1}x), TV-TV2 {tvtv2:.5}, TGV {tgv:.5}, {elapsed:.2?}",
            noisy / tv
        ),
    );
}

// ---------------------------------------------------------------------------
// reflections

#[test]
fn reflection_nonexpansiveness() {
    let t = ManifoldTag::Spd(2);
    let mut r = rng(106);
    let image = |r: &mut ChaCha8Rng, n: usize| {
        let pts: Vec<Point> = (0..n).map(|_| random_point(&t, r)).collect();
        model::Iterate::new(ManifoldImage::from_points(&pts, 1, n).unwrap())
    };
    let dist = |a: &model::Iterate, b: &model::Iterate| -> f64 {
        (0..a.image().len())
            .map(|i| t.dist(a.image().px(i), b.image().px(i)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let eta = r.gen_range(0.05..2.0);
        let y = ManifoldImage::from_points(&[random_point(&t, &mut r)], 1, 1).unwrap();
        for p in [1, 2] {
            let term = DistanceTerm::new(y.clone(), p).unwrap();
            let (a, b) = (image(&mut r, 1), image(&mut r, 1));
            let (ra, rb) = (
                reflect_prox(&term, eta, &a).unwrap(),
                reflect_prox(&term, eta, &b).unwrap(),
            );
            worst = worst.max(dist(&ra, &rb) - dist(&a, &b));
            let pair = PairTerm::new(vec![(0, 1)], p).unwrap();
            let (a, b) = (image(&mut r, 2), image(&mut r, 2));
            let (ra, rb) = (
                reflect_prox(&pair, eta, &a).unwrap(),
                reflect_prox(&pair, eta, &b).unwrap(),
            );
            worst = worst.max(dist(&ra, &rb) - dist(&a, &b));
        }
    }
    report(
        "reflection nonexpansiveness, SPD(2)",
        worst <= 1e-10,
        format!("1000 pairs x 4 terms, max dist(R a, R b) - dist(a, b) = {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// Euclidean functionals

struct Grid<'a> {
    v: &'a [f64],
    n1: usize,
    n2: usize,
    m: usize,
}

impl Grid<'_> {
    fn at(&self, a: isize, b: isize) -> Option<&[f64]> {
        if a < 0 || b < 0 || a >= self.n1 as isize || b >= self.n2 as isize {
            return None;
        }
        let i = a as usize * self.n2 + b as usize;
        Some(&self.v[i * self.m..(i + 1) * self.m])
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn group(ds: &[f64], p: u8) -> f64 {
    if p == 1 {
        ds.iter().sum()
    } else {
        norm(ds)
    }
}

fn classical_data(u: &[f64], f: &[f64]) -> f64 {
    0.5 * u.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
}

fn classical_tv(g: &Grid, p: u8) -> f64 {
    let mut total = 0.0;
    for a in 0..g.n1 as isize {
        for b in 0..g.n2 as isize {
            let c = g.at(a, b).unwrap();
            let ds: Vec<f64> = [g.at(a + 1, b), g.at(a, b + 1)]
                .into_iter()
                .flatten()
                .map(|n| norm(&lin(n, 1.0, c, -1.0)))
                .collect();
            total += group(&ds, p);
        }
    }
    total
}

/// d_xx, d_yy = |(u₋ + u₊)/2 − u|; the mixed differences compare the
/// midpoints of the two diagonals of a 2×2 cell.
fn classical_tv2(g: &Grid, p: u8) -> f64 {
    let mid = |a: &[f64], b: &[f64]| lin(a, 0.5, b, 0.5);
    let mut total = 0.0;
    for a in 0..g.n1 as isize {
        for b in 0..g.n2 as isize {
            let c = g.at(a, b).unwrap();
            let mut ds = Vec::new();
            for (da, db) in [(1, 0), (0, 1)] {
                if let (Some(x), Some(z)) = (g.at(a - da, b - db), g.at(a + da, b + db)) {
                    ds.push(norm(&lin(&mid(x, z), 1.0, c, -1.0)));
                }
            }
            // d_xy: needs (a, b ± 1) and (a + 1, b)
            if g.at(a, b + 1).is_some() {
                if let (Some(w), Some(e)) = (g.at(a, b - 1), g.at(a + 1, b)) {
                    let diag = g.at(a + 1, b - 1).unwrap();
                    ds.push(norm(&lin(&mid(c, diag), 1.0, &mid(w, e), -1.0)));
                }
            }
            // d_yx: needs (a ± 1, b) and (a, b + 1)
            if g.at(a + 1, b).is_some() {
                if let (Some(n), Some(e)) = (g.at(a - 1, b), g.at(a, b + 1)) {
                    let diag = g.at(a - 1, b + 1).unwrap();
                    ds.push(norm(&lin(&mid(c, diag), 1.0, &mid(n, e), -1.0)));
                }
            }
            total += group(&ds, p);
        }
    }
    total
}

/// Scalar anisotropic TGV as a linear program: minimize over ξ
/// β Σ |∇u − ξ| + (1 − β) Σ |backward differences of ξ|.
fn lp_tgv(v: &[f64], n1: usize, n2: usize, beta: f64) -> f64 {
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let n = n1 * n2;
    let xi: Vec<Vec<_>> = (0..2)
        .map(|_| {
            (0..n)
                .map(|_| pb.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
                .collect()
        })
        .collect();
    let at = |a: usize, b: usize| a * n2 + b;
    // t ≥ |Σ lin − c| through two inequalities
    let abs_term = |pb: &mut Problem, w: f64, lin: Vec<(minilp::Variable, f64)>, c: f64| {
        let t = pb.add_var(w, (0.0, f64::INFINITY));
        let mut up = lin.clone();
        up.push((t, 1.0));
        pb.add_constraint(&up, ComparisonOp::Ge, c);
        let mut down: Vec<_> = lin.iter().map(|&(x, a)| (x, -a)).collect();
        down.push((t, 1.0));
        pb.add_constraint(&down, ComparisonOp::Ge, -c);
    };
    for a in 0..n1 {
        for b in 0..n2 {
            let i = at(a, b);
            let gx = if a + 1 < n1 {
                v[at(a + 1, b)] - v[i]
            } else {
                0.0
            };
            let gy = if b + 1 < n2 {
                v[at(a, b + 1)] - v[i]
            } else {
                0.0
            };
            abs_term(&mut pb, beta, vec![(xi[0][i], 1.0)], gx);
            abs_term(&mut pb, beta, vec![(xi[1][i], 1.0)], gy);
            for field in &xi {
                if a >= 1 && a + 1 < n1 {
                    abs_term(
                        &mut pb,
                        1.0 - beta,
                        vec![(field[i], 1.0), (field[at(a - 1, b)], -1.0)],
                        0.0,
                    );
                }
                if b >= 1 && b + 1 < n2 {
                    abs_term(
                        &mut pb,
                        1.0 - beta,
                        vec![(field[i], 1.0), (field[at(a, b - 1)], -1.0)],
                        0.0,
                    );
                }
            }
        }
    }
    pb.solve().unwrap().objective()
}

#[test]
fn euclidean_functionals_match_classical() {
    let mut r = rng(107);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (n1, n2, m) = (r.gen_range(1..6), r.gen_range(2..6), 1 + k % 3);
        let t = ManifoldTag::Euclidean(m);
        let v: Vec<f64> = (0..n1 * n2 * m).map(|_| r.gen_range(-2.0..2.0)).collect();
        let f: Vec<f64> = (0..n1 * n2 * m).map(|_| r.gen_range(-2.0..2.0)).collect();
        let u = ManifoldImage::new(t.clone(), n1, n2, v.clone()).unwrap();
        let fi = ManifoldImage::new(t, n1, n2, f.clone()).unwrap();
        let g = Grid { v: &v, n1, n2, m };
        let mut check = |a: f64, b: f64| worst = worst.max((a - b).abs());
        check(model::data_term(&u, &fi).unwrap(), classical_data(&v, &f));
        for p in [1, 2] {
            check(model::tv(&u, p).unwrap(), classical_tv(&g, p));
            check(model::tv2(&u, p).unwrap(), classical_tv2(&g, p));
        }
        // scalar TGV against the LP
        let s: Vec<f64> = (0..16).map(|_| r.gen_range(-1.0..1.0)).collect();
        let beta = r.gen_range(0.2..0.8);
        let su = ManifoldImage::new(ManifoldTag::Euclidean(1), 4, 4, s.clone()).unwrap();
        check(
            model::tgv(&su, beta, 1).unwrap().value,
            lp_tgv(&s, 4, 4, beta),
        );
    }
    report(
        "Euclidean functionals vs classical implementation",
        worst <= 1e-10,
        format!("20 images, data/tv/tv2 (p = 1, 2) and scalar tgv, worst difference {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// command line

fn manivar(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_manivar"))
        .args(args)
        .current_dir(dir)
        .env_remove("MANIVAR_WORKERS")
        .output()
        .unwrap()
}

fn pipeline(dir: &Path) -> (Vec<u8>, Vec<u8>, Vec<u8>, String) {
    let ok = |args: &[&str]| {
        let out = manivar(args, dir);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    };
    ok(&[
        "phantom",
        "--name",
        "s1-blocks",
        "--n1",
        "24",
        "--n2",
        "24",
        "--out",
        "clean.mvd",
    ]);
    ok(&[
        "noise",
        "--in",
        "clean.mvd",
        "--sigma",
        "0.3",
        "--seed",
        "1",
        "--out",
        "noisy.mvd",
    ]);
    ok(&[
        "denoise",
        "--model",
        "tv",
        "--solver",
        "cppa",
        "--alpha",
        "0.3",
        "--iters",
        "50",
        "--seed",
        "1",
        "--workers",
        "1",
        "--in",
        "noisy.mvd",
        "--out",
        "out.mvd",
        "--trace",
        "trace.csv",
    ]);
    let m = ok(&["mse", "out.mvd", "clean.mvd"]);
    let read = |name: &str| std::fs::read(dir.join(name)).unwrap();
    (
        read("noisy.mvd"),
        read("out.mvd"),
        read("trace.csv"),
        String::from_utf8(m.stdout).unwrap(),
    )
}

#[test]
fn cli_round_trip_and_determinism() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline(d1.path());
    let second = pipeline(d2.path());
    let identical = first == second;
    let roundtrip = manivar(&["mse", "clean.mvd", "clean.mvd"], d1.path());
    let zero = String::from_utf8_lossy(&roundtrip.stdout).trim() == "0";
    let bad = manivar(
        &[
            "denoise",
            "--alpha",
            "-1",
            "--in",
            "noisy.mvd",
            "--out",
            "x.mvd",
        ],
        d1.path(),
    );
    let stderr = String::from_utf8_lossy(&bad.stderr);
    let bad_ok = bad.status.code() == Some(2) && stderr.contains("--alpha");
    let noisy: f64 = manivar(&["mse", "noisy.mvd", "clean.mvd"], d1.path())
        .stdout
        .iter()
        .map(|&b| b as char)
        .collect::<String>()
        .trim()
        .parse()
        .unwrap();
    let denoised: f64 = first.3.trim().parse().unwrap();
    report(
        "CLI round trip and determinism",
        identical && zero && bad_ok,
        format!(
            "two pipelines bit-identical: {identical}; mse(clean, clean) = 0: {zero}; alpha -1 exits 2 naming --alpha: {bad_ok}; MSE {noisy:.5} -> {denoised:.5}"
        ),
    );
}
