use manivar::sample::{random_point, tangent_with_norm};
use manivar::transport::{
    adjoint_differential, differential, pole_ladder_adjoint, transport_closed, transport_pole,
    transport_schild, Anchor, CoefficientCase, JacobiFrame,
};
use manivar::{ManifoldTag, Point, TangentVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-4;

fn tags() -> Vec<ManifoldTag> {
    [
        "Euclidean(3)",
        "Circle",
        "Sphere2",
        "SPD(2)",
        "SPD(3)",
        "Rotations3",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect()
}

fn lin(a: &[f64], ca: f64, b: &[f64], cb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

/// Moves x along exp_x(s ξ).
fn moved(tag: &ManifoldTag, x: &[f64], xi: &[f64], s: f64) -> Vec<f64> {
    tag.exp(x, &xi.iter().map(|c| c * s).collect::<Vec<_>>())
}

/// Central finite difference of the map F as a vector in T_{F(x)}.
fn fd(case: CoefficientCase, tag: &ManifoldTag, x: &[f64], other: &[f64], xi: &[f64]) -> Vec<f64> {
    use CoefficientCase::*;
    let eval = |s: f64| -> (Vec<f64>, Vec<f64>) {
        // returns (value, base point of value) for tangent-valued maps,
        // or (point, empty) for point-valued maps
        let xs = moved(tag, x, xi, s);
        match case {
            ExpBase => {
                let u = tag.transport_along(x, xi, s, other);
                (tag.exp(&xs, &u), vec![])
            }
            LogBase => {
                let v = tag.log(&xs, other).unwrap();
                (tag.transport(&xs, x, &v).unwrap(), vec![])
            }
            LogArg => (tag.log(other, &xs).unwrap(), vec![]),
            GeoFirst(t) => (tag.geodesic(&xs, other, t).unwrap(), vec![]),
            GeoSecond(t) => (tag.geodesic(other, &xs, t).unwrap(), vec![]),
            ExpArg => {
                let u = lin(other, 1.0, xi, s);
                (tag.exp(x, &u), vec![])
            }
        }
    };
    let (p, _) = eval(H);
    let (m, _) = eval(-H);
    match case {
        CoefficientCase::LogBase | CoefficientCase::LogArg => lin(&p, 0.5 / H, &m, -0.5 / H),
        _ => {
            let c = eval(0.0).0;
            let lp = tag.log(&c, &p).unwrap();
            let lm = tag.log(&c, &m).unwrap();
            lin(&lp, 0.5 / H, &lm, -0.5 / H)
        }
    }
}

struct Instance {
    x: Point,
    other: Vec<f64>,
    frame: JacobiFrame,
    xi: Vec<f64>,
}

fn instance(case: CoefficientCase, tag: &ManifoldTag, rng: &mut ChaCha8Rng) -> Instance {
    let x = random_point(tag, rng);
    let len = rng.gen_range(0.2..2.0);
    let u = tangent_with_norm(&x, len, rng);
    let xi = tangent_with_norm(&x, 1.0, rng).coords().to_vec();
    let (other, frame) = match case {
        CoefficientCase::ExpBase | CoefficientCase::ExpArg => (
            u.coords().to_vec(),
            JacobiFrame::along(tag, x.coords(), u.coords()),
        ),
        _ => {
            let y = tag.exp(x.coords(), u.coords());
            let f = JacobiFrame::along(tag, x.coords(), u.coords());
            (y, f)
        }
    };
    Instance {
        x,
        other,
        frame,
        xi,
    }
}

fn cases(rng: &mut ChaCha8Rng) -> Vec<CoefficientCase> {
    use CoefficientCase::*;
    vec![
        ExpBase,
        LogBase,
        LogArg,
        GeoFirst(rng.gen_range(0.1..0.9)),
        GeoSecond(rng.gen_range(0.1..0.9)),
        ExpArg,
    ]
}

#[test]
fn differentials_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for tag in tags() {
        for _ in 0..30 {
            for case in cases(&mut rng) {
                let inst = instance(case, &tag, &mut rng);
                let an = inst.frame.apply(case, &inst.xi).unwrap();
                let num = fd(case, &tag, inst.x.coords(), &inst.other, &inst.xi);
                let at = inst.frame.point_at(case.output_time());
                let err = tag.norm(&at, &lin(&an, 1.0, &num, -1.0));
                let scale = tag.norm(&at, &an).max(1e-3);
                assert!(err / scale < 1e-5, "{tag} {case:?}: {err} / {scale}");
            }
        }
    }
}

#[test]
fn adjoints_satisfy_the_inner_product_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for tag in tags() {
        for _ in 0..30 {
            for case in cases(&mut rng) {
                let inst = instance(case, &tag, &mut rng);
                let at = inst.frame.point_at(case.output_time());
                let atp = Point::new(tag.clone(), at.clone()).unwrap();
                let w = tangent_with_norm(&atp, 1.0, &mut rng);
                let lhs = tag.inner(&at, &inst.frame.apply(case, &inst.xi).unwrap(), w.coords());
                let rhs = tag.inner(
                    inst.x.coords(),
                    &inst.xi,
                    &inst.frame.apply_adjoint(case, w.coords()).unwrap(),
                );
                assert!((lhs - rhs).abs() < 1e-10, "{tag} {case:?}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn typed_differential_lands_at_the_image_point() {
    let tag = ManifoldTag::Sphere2;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_point(&tag, &mut rng);
    let u = tangent_with_norm(&x, 0.8, &mut rng);
    let y = manivar::manifold::exp(&x, &u).unwrap();
    let xi = tangent_with_norm(&x, 1.0, &mut rng);
    let d = differential(CoefficientCase::GeoFirst(0.5), &x, Anchor::Point(&y), &xi).unwrap();
    let mid = manivar::manifold::geodesic_point(&x, &y, 0.5).unwrap();
    assert!(tag.dist(d.base().coords(), mid.coords()) < 1e-14);
    let back =
        adjoint_differential(CoefficientCase::GeoFirst(0.5), &x, Anchor::Point(&y), &d).unwrap();
    assert_eq!(back.base(), &x);
    let e = differential(CoefficientCase::ExpArg, &x, Anchor::Tangent(&u), &xi).unwrap();
    assert!(tag.dist(e.base().coords(), y.coords()) < 1e-14);
}

#[test]
fn pole_ladder_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for tag in [
        ManifoldTag::Sphere2,
        ManifoldTag::Spd(3),
        ManifoldTag::Rotations3,
    ] {
        for _ in 0..100 {
            let x = random_point(&tag, &mut rng);
            let u = tangent_with_norm(&x, rng.gen_range(0.1..1.5), &mut rng);
            let y = manivar::manifold::exp(&x, &u).unwrap();
            let xi = tangent_with_norm(&x, rng.gen_range(0.05..1.0), &mut rng);
            let a = transport_closed(&x, &y, &xi).unwrap();
            let b = transport_pole(&x, &y, &xi).unwrap();
            let err = tag.norm(y.coords(), &lin(a.coords(), 1.0, b.coords(), -1.0));
            assert!(err < 1e-8, "{tag}: {err}");
            assert!((a.norm() - xi.norm()).abs() < 1e-10);
        }
    }
}

#[test]
fn schild_ladder_is_second_order() {
    let tag = ManifoldTag::Sphere2;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x = random_point(&tag, &mut rng);
    let u = tangent_with_norm(&x, 0.8, &mut rng);
    let y = manivar::manifold::exp(&x, &u).unwrap();
    let dir = tangent_with_norm(&x, 1.0, &mut rng);
    let err = |s: f64| {
        let xi = dir.scaled(s);
        let a = transport_closed(&x, &y, &xi).unwrap();
        let b = transport_schild(&x, &y, &xi).unwrap();
        tag.norm(y.coords(), &lin(a.coords(), 1.0, b.coords(), -1.0))
    };
    let e1 = err(0.1);
    let e2 = err(0.05);
    assert!(e1 < 1e-2);
    assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
}

#[test]
fn pole_ladder_adjoint_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for tag in tags() {
        for _ in 0..20 {
            let x = random_point(&tag, &mut rng);
            let u = tangent_with_norm(&x, rng.gen_range(0.2..1.0), &mut rng);
            let y = tag.exp(x.coords(), u.coords());
            let zeta = tangent_with_norm(&x, rng.gen_range(0.1..0.6), &mut rng)
                .coords()
                .to_vec();
            let yp = Point::new(tag.clone(), y.clone()).unwrap();
            let g = tangent_with_norm(&yp, 1.0, &mut rng).coords().to_vec();
            let adj = pole_ladder_adjoint(&tag, x.coords(), &y, &zeta, &g).unwrap();

            let p = |xx: &[f64], yy: &[f64], z: &[f64]| {
                manivar::transport::transport_pole(
                    &Point::new(tag.clone(), xx.to_vec()).unwrap(),
                    &Point::new(tag.clone(), yy.to_vec()).unwrap(),
                    &TangentVector::new(Point::new(tag.clone(), xx.to_vec()).unwrap(), z.to_vec())
                        .unwrap(),
                )
                .unwrap()
                .coords()
                .to_vec()
            };
            // direction in x, with ζ carried along by parallel transport
            let ex = tangent_with_norm(&x, 1.0, &mut rng).coords().to_vec();
            let dx = {
                let f = |s: f64| {
                    let xs = moved(&tag, x.coords(), &ex, s);
                    let zs = tag.transport_along(x.coords(), &ex, s, &zeta);
                    tag.inner(&y, &p(&xs, &y, &zs), &g)
                };
                (f(H) - f(-H)) / (2.0 * H)
            };
            let want = tag.inner(x.coords(), &ex, &adj.x);
            assert!((dx - want).abs() < 1e-6, "{tag} x: {dx} vs {want}");

            // direction in y; output and g are compared at y by transport
            let ey = tangent_with_norm(&yp, 1.0, &mut rng).coords().to_vec();
            let dy = {
                let f = |s: f64| {
                    let ys = moved(&tag, &y, &ey, s);
                    let gs = tag.transport_along(&y, &ey, s, &g);
                    tag.inner(&ys, &p(x.coords(), &ys, &zeta), &gs)
                };
                (f(H) - f(-H)) / (2.0 * H)
            };
            let want = tag.inner(&y, &ey, &adj.y);
            assert!((dy - want).abs() < 1e-6, "{tag} y: {dy} vs {want}");

            let ez = tangent_with_norm(&x, 1.0, &mut rng).coords().to_vec();
            let dz = {
                let f = |s: f64| tag.inner(&y, &p(x.coords(), &y, &lin(&zeta, 1.0, &ez, s)), &g);
                (f(H) - f(-H)) / (2.0 * H)
            };
            let want = tag.inner(x.coords(), &ez, &adj.zeta);
            assert!((dz - want).abs() < 1e-6, "{tag} zeta: {dz} vs {want}");
        }
    }
}
