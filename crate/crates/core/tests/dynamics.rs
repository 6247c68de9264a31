use std::sync::Arc;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use sha2::{Digest, Sha256};
use straitlab::dynamics::{
    external_ray, landing_relation, misiurewicz_newton, multiplier, parabolic_root_newton, parameter_ray,
    partition_agrees, periodic_points, quadratic_like_restriction, render_julia, weighted_period, DynamicsError,
    Escape, PeriodicOptions, QlikeOptions, RayStatus, Stability, Viewport,
};
use straitlab::{
    ang, angs, Angle, MappingSchema, RationalLamination, RayOptions, SchemaAngle, SchemaPolynomial, TuningContext,
};

const SQRT5: f64 = 2.23606797749979;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn quad(re: f64, im: f64) -> SchemaPolynomial {
    SchemaPolynomial::quadratic(c(re, im))
}

fn basilica() -> SchemaPolynomial {
    quad(-1.0, 0.0)
}

/// The root of c³ + 2c² + c + 1 in the upper half plane, by Newton.
fn rabbit_c() -> C {
    let mut z = c(-0.1, 0.7);
    for _ in 0..60 {
        z -= (((z + 2.0) * z + 1.0) * z + 1.0) / ((3.0 * z + 4.0) * z + 1.0);
    }
    z
}

/// The real center of period four below −1: bisection on Q_c⁴(0).
fn tuned_basilica_c() -> f64 {
    let q4 = |c: f64| (0..4).fold(0.0, |z: f64, _| z * z + c);
    let (mut lo, mut hi) = (-1.4, -1.2);
    assert!(q4(lo) * q4(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q4(lo) * q4(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Capture cubic z³ − 3a²z + b with f²(a) = a and f²(−a) = a, solved by Newton
/// in (a, b) from the seed recorded with the fixture.
fn capture_cubic() -> (SchemaPolynomial, C, C) {
    let f = |a: C, b: C, z: C| z * z * z - 3.0 * a * a * z + b;
    let g = |x: [C; 2]| [f(x[0], x[1], f(x[0], x[1], x[0])) - x[0], f(x[0], x[1], f(x[0], x[1], -x[0])) - x[0]];
    let mut x = [c(0.0, 0.91), c(0.0, -0.27)];
    for _ in 0..50 {
        let g0 = g(x);
        let h = 1e-7;
        let ga = g([x[0] + h, x[1]]);
        let gb = g([x[0], x[1] + h]);
        let j = [[(ga[0] - g0[0]) / h, (gb[0] - g0[0]) / h], [(ga[1] - g0[1]) / h, (gb[1] - g0[1]) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        x[0] -= (j[1][1] * g0[0] - j[0][1] * g0[1]) / det;
        x[1] -= (j[0][0] * g0[1] - j[1][0] * g0[0]) / det;
    }
    let (a, b) = (x[0], x[1]);
    let poly = SchemaPolynomial::new(MappingSchema::trivial(3), vec![vec![b, -3.0 * a * a, c(0.0, 0.0), c(1.0, 0.0)]])
        .unwrap();
    (poly, a, b)
}

fn opts() -> RayOptions {
    RayOptions::default()
}

fn landing(f: &SchemaPolynomial, theta: &str) -> C {
    let r = external_ray(f, 0, &ang(theta), &opts()).unwrap();
    r.landing().unwrap_or_else(|| panic!("ray {theta} did not land: {:?}", r.status))
}

fn sa(v: usize, s: &str) -> SchemaAngle {
    SchemaAngle::new(v, ang(s))
}

fn names(partition: &[Vec<SchemaAngle>]) -> Vec<Vec<String>> {
    partition.iter().map(|g| g.iter().map(|p| p.angle.to_string()).collect()).collect()
}

#[test]
fn evaluate_examples() {
    let f = basilica();
    assert_eq!(f.evaluate(0, c(0.0, 0.0), 2).unwrap(), (0, c(0.0, 0.0)));

    let cap = MappingSchema::capture(3);
    let (v1, v2) = (cap.vertex("v1").unwrap(), cap.vertex("v2").unwrap());
    let cc = c(-0.3, 0.2);
    let mut consts = vec![c(0.0, 0.0); 2];
    consts[v1] = c(0.25, 0.0);
    consts[v2] = cc;
    let g = SchemaPolynomial::unicritical(cap, &consts).unwrap();
    assert_eq!(g.evaluate(v2, c(0.0, 0.0), 1).unwrap(), (v1, cc));

    let q = quad(0.25, 0.0);
    assert_eq!(q.evaluate(0, c(0.5, 0.0), 5).unwrap(), (0, c(0.5, 0.0)));
}

#[test]
fn evaluate_flags_overflow() {
    let f = basilica();
    match f.evaluate(0, c(1e10, 0.0), 50) {
        Err(DynamicsError::Overflow { step }) => assert!(step > 1 && step < 50),
        other => panic!("expected overflow, got {other:?}"),
    }
}

#[test]
fn escape_examples() {
    let f = basilica();
    assert!(!f.escape_classify(0, c(0.0, 0.0), 1000, 2.0).unwrap().escaped());
    assert!(matches!(f.escape_classify(0, c(0.0, 0.0), 1000, 2.0).unwrap(), Escape::Cycle { .. }));

    let z2 = quad(0.0, 0.0);
    assert_eq!(z2.escape_classify(0, c(2.0, 0.0), 10, 2.0).unwrap(), Escape::Escaped { n: 0, modulus: 2.0 });

    let q = quad(0.25, 0.0);
    let r = q.escape_classify(0, c(0.49, 0.0), 100_000, 2.0).unwrap();
    assert!(!r.escaped(), "{r:?}");
    // The plain orbit agrees: it creeps up to 1/2 from below.
    let mut z = 0.49f64;
    for _ in 0..100_000 {
        z = z * z + 0.25;
        assert!(z < 0.5);
    }

    assert!(matches!(f.escape_classify(0, c(0.0, 0.0), 10, 1.5), Err(DynamicsError::Radius { .. })));
    // Budget exhaustion is distinguished from a detected cycle.
    let slow = q.escape_classify(0, c(0.1, 0.0), 5, 2.0).unwrap();
    assert_eq!(slow, Escape::Budget { iterations: 5 });
}

#[test]
fn escape_radius_policy() {
    let f = quad(-1.0, 3.0);
    assert!((f.escape_radius(0) - 2.0 * 10f64.sqrt()).abs() < 1e-12);
    assert_eq!(basilica().escape_radius(0), 2.0);
}

#[test]
fn basilica_rays_land_on_fixed_points() {
    let f = basilica();
    let beta = (1.0 + SQRT5) / 2.0;
    let alpha = (1.0 - SQRT5) / 2.0;
    assert!((landing(&f, "0/1") - c(beta, 0.0)).norm() <= 1e-8);
    let a1 = landing(&f, "1/3");
    let a2 = landing(&f, "2/3");
    assert!((a1 - a2).norm() <= 1e-6);
    assert!((a1 - c(alpha, 0.0)).norm() <= 1e-6);
}

#[test]
fn rays_of_z_squared_land_on_the_circle() {
    let f = quad(0.0, 0.0);
    for s in ["1/7", "1/5", "3/10", "5/12", "0/1", "1/2"] {
        let t = ang(s).to_f64();
        let want = C::from_polar(1.0, std::f64::consts::TAU * t);
        assert!((landing(&f, s) - want).norm() <= 1e-10, "{s}");
    }
}

#[test]
fn ray_samples_follow_the_ray_equation() {
    let f = basilica();
    let r = external_ray(&f, 0, &ang("1/3"), &opts()).unwrap();
    assert_eq!(r.preperiod, 0);
    assert_eq!(r.period, 2);
    assert_eq!(r.path, vec![0, 0]);
    assert!(r.final_potential > 0.0 && r.final_potential <= 1e-8 * 1.0001);
    for (z, g) in r.points.iter().zip(&r.potentials) {
        let measured = f.potential(0, *z, 100_000);
        assert!((measured - g).abs() <= 1e-9 * g.max(1e-3), "{z} {g} {measured}");
        // The angle, read off φ(f^m z)^{1/2^m} once f^m z is large.
        let mut m = 0;
        let mut w = *z;
        while w.norm() < 1e6 {
            w = f.eval(0, w);
            m += 1;
        }
        let phi = f.boettcher(0, w).unwrap();
        let turns = phi.arg() / std::f64::consts::TAU;
        let want = ang("1/3").times_u(1 << m).to_f64();
        let diff = (turns - want).rem_euclid(1.0);
        assert!(diff.min(1.0 - diff) <= 1e-8, "sample {z}: {turns} vs {want}");
    }
}

#[test]
fn boettcher_functional_equation_along_rays() {
    let (cap, ..) = capture_cubic();
    let fixtures = [(basilica(), "1/3"), (quad(rabbit_c().re, rabbit_c().im), "1/7"), (cap, "1/8")];
    for (f, s) in fixtures {
        let r = external_ray(&f, 0, &ang(s), &opts()).unwrap();
        assert!(matches!(r.status, RayStatus::Landed { .. }), "{s}");
        let d = f.schema().delta(0) as f64;
        for z in r.points.iter().filter(|z| f.potential(0, **z, 100_000) >= 1e-4) {
            let lhs = f.potential(0, f.eval(0, *z), 100_000);
            let rhs = d * f.potential(0, *z, 100_000);
            assert!((lhs - rhs).abs() <= 1e-8, "{s} at {z}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn boettcher_is_the_identity_for_monomials() {
    let f = quad(0.0, 0.0);
    let z = c(3.0, -4.0);
    assert!((f.boettcher(0, z).unwrap() - z).norm() < 1e-12);
    let g = basilica();
    assert!(g.boettcher(0, c(0.1, 0.0)).is_none());
    let w = c(5.0, 1.0);
    let lhs = g.boettcher(0, g.eval(0, w)).unwrap();
    let rhs = g.boettcher(0, w).unwrap().powu(2);
    assert!((lhs - rhs).norm() / rhs.norm() < 1e-12);
}

#[test]
fn preperiodic_rays_land_on_preimages() {
    let f = basilica();
    // 1/4 → 1/2 → 0: the ray lands on a preimage of −β.
    let z = landing(&f, "1/4");
    let beta = (1.0 + SQRT5) / 2.0;
    assert!((f.eval(0, z) + c(beta, 0.0)).norm() < 1e-8);
    let r = external_ray(&f, 0, &ang("1/4"), &opts()).unwrap();
    assert_eq!((r.preperiod, r.period), (2, 1));
}

#[test]
fn parabolic_rays_land() {
    let q = quad(0.25, 0.0);
    assert!((landing(&q, "0/1") - c(0.5, 0.0)).norm() < 1e-6);
    // Period-two angles land on the repelling two-cycle −1/2 ± i.
    assert!((landing(&q, "1/3") - c(-0.5, 1.0)).norm() < 1e-8);
    assert!((landing(&q, "2/3") - c(-0.5, -1.0)).norm() < 1e-8);
}

#[test]
fn rays_in_escaping_fibers_are_bifurcated() {
    let f = quad(0.5, 0.0);
    let r = external_ray(&f, 0, &ang("1/3"), &opts()).unwrap();
    assert_eq!(r.status, RayStatus::Bifurcated);
    assert!(r.final_potential > 1e-8);
}

#[test]
fn rays_need_a_normalized_polynomial() {
    let f = SchemaPolynomial::general(MappingSchema::trivial(2), vec![vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]])
        .unwrap();
    assert!(matches!(external_ray(&f, 0, &ang("1/3"), &opts()), Err(DynamicsError::NotNormalized { .. })));
}

#[test]
fn capture_fiber_rays() {
    let schema = MappingSchema::capture(3);
    let (v1, v2) = (schema.vertex("v1").unwrap(), schema.vertex("v2").unwrap());
    let mut consts = vec![c(0.0, 0.0); 2];
    consts[v1] = c(-1.0, 0.0);
    consts[v2] = c(0.0, 0.0);
    let g = SchemaPolynomial::unicritical(schema, &consts).unwrap();
    // At v2 the map z ↦ z² lands on the basilica plane: the ray 1/6 at v2
    // maps to 1/3 at v1, so it lands on a square root of α.
    let r = external_ray(&g, v2, &ang("1/6"), &opts()).unwrap();
    assert_eq!(r.path, vec![v2, v1, v1]);
    let z = r.landing().unwrap();
    assert!((z * z - c((1.0 - SQRT5) / 2.0, 0.0)).norm() < 1e-8);
}

#[test]
fn parameter_ray_examples() {
    let mut o = opts();
    o.target_potential = 1e-6;

    // The tip: the ray of 1/2 runs along the real axis to −2.
    let tip = parameter_ray(&ang("1/2"), &o).unwrap();
    assert!((tip.c - c(-2.0, 0.0)).norm() < 1e-3, "{}", tip.c);
    assert!(tip.points.iter().all(|p| p.im.abs() < 1e-9 && p.re < -2.0 + 1e-9));

    // The cusp: at potential 1e−6 the endpoint is still ≈ 0.27; escape near
    // 1/4 takes ≈ π/√(c − 1/4) steps, so G ≈ 1e−6 means c − 1/4 ≈ 0.02. The
    // trace approaches 1/4 monotonically, reaches it to 1e−3 at G = 1e−30,
    // and the root certificate from the 1e−6 endpoint lands on it.
    let cusp = parameter_ray(&Angle::zero(), &o).unwrap();
    assert!(cusp.points.windows(2).all(|w| w[1].re <= w[0].re && w[1].re > 0.25));
    let (root, res) = parabolic_root_newton(cusp.c, 1, 100).unwrap();
    assert!((root - c(0.25, 0.0)).norm() <= 1e-3 && res < 1e-10);
    let mut deep = opts();
    deep.target_potential = 1e-30;
    let cusp = parameter_ray(&Angle::zero(), &deep).unwrap();
    assert!((cusp.c - c(0.25, 0.0)).norm() <= 1e-3, "{}", cusp.c);

    // The root of the period-two component, through the same certificate.
    let r = parameter_ray(&ang("1/3"), &o).unwrap();
    let dist: Vec<f64> = r.points.iter().map(|p| (p - c(-0.75, 0.0)).norm()).collect();
    assert!(dist[dist.len() - 1] < dist[0] && dist[dist.len() - 1] < 0.2);
    let (root, res) = parabolic_root_newton(r.c, 2, 100).unwrap();
    assert!((root - c(-0.75, 0.0)).norm() <= 1e-3 && res < 1e-10, "{root}");
}

#[test]
fn misiurewicz_certificates() {
    let mut o = opts();
    o.target_potential = 1e-6;
    // c = i: 0 → i → i − 1 → −i → i − 1, preperiod 2 and period 2, angle 1/6.
    let r = parameter_ray(&ang("1/6"), &o).unwrap();
    let (m, res) = misiurewicz_newton(r.c, 2, 2, 100).unwrap();
    assert!((m - c(0.0, 1.0)).norm() < 1e-12 && res < 1e-12);
    // c = −2 from the tip ray, preperiod 2 and period 1.
    let r = parameter_ray(&ang("1/2"), &o).unwrap();
    let (m, _) = misiurewicz_newton(r.c, 2, 1, 100).unwrap();
    assert!((m + 2.0).norm() < 1e-12);
    // Centers solve the relation with a shorter preperiod and are rejected.
    assert!(misiurewicz_newton(c(0.01, 0.0), 2, 1, 100).is_none());
}

#[test]
fn periodic_point_examples() {
    let (pts, failures) = periodic_points(&basilica(), 0, 1, &[], &PeriodicOptions::default()).unwrap();
    assert_eq!(failures, 0);
    assert_eq!(pts.len(), 2);
    let alpha = (1.0 - SQRT5) / 2.0;
    let beta = (1.0 + SQRT5) / 2.0;
    assert!((pts[0].location - c(alpha, 0.0)).norm() < 1e-12);
    assert!((pts[1].location - c(beta, 0.0)).norm() < 1e-12);
    assert!((pts[0].multiplier - c(1.0 - SQRT5, 0.0)).norm() < 1e-8);
    assert!((pts[1].multiplier - c(1.0 + SQRT5, 0.0)).norm() < 1e-8);
    assert!((pts[0].multiplier.norm() - 1.2360679).abs() < 1e-7);
    assert!(pts.iter().all(|p| p.stability == Stability::Repelling));

    let (pts, _) = periodic_points(&quad(0.25, 0.0), 0, 1, &[], &PeriodicOptions::default()).unwrap();
    assert_eq!(pts.len(), 1);
    assert!((pts[0].location - c(0.5, 0.0)).norm() < 1e-9);
    assert!((pts[0].multiplier - c(1.0, 0.0)).norm() < 1e-8);
    assert_eq!(pts[0].stability, Stability::Indifferent);

    let (pts, _) = periodic_points(&quad(0.0, 0.0), 0, 2, &[], &PeriodicOptions::default()).unwrap();
    let cycle: Vec<_> = pts.iter().filter(|p| p.minimal_period == 2).collect();
    assert_eq!(cycle.len(), 2);
    for p in cycle {
        assert!((p.location.norm() - 1.0).abs() < 1e-12);
        let k = (p.location.arg() / (std::f64::consts::TAU / 3.0)).round();
        assert!((p.location - C::from_polar(1.0, k * std::f64::consts::TAU / 3.0)).norm() < 1e-12);
        assert!((p.multiplier.norm() - 4.0).abs() < 1e-10);
    }
    // The full period-two solution set also holds the fixed points 0 and 1.
    assert_eq!(pts.len(), 4);
}

#[test]
fn periodic_points_report_failures_and_errors() {
    let f = basilica();
    assert!(matches!(periodic_points(&f, 0, 0, &[], &PeriodicOptions::default()), Err(DynamicsError::Input(_))));
    let schema = MappingSchema::capture(3);
    let v2 = schema.vertex("v2").unwrap();
    let g = SchemaPolynomial::unicritical(schema, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(matches!(
        periodic_points(&g, v2, 1, &[], &PeriodicOptions::default()),
        Err(DynamicsError::NotReturning { .. })
    ));
    // A seed that overflows is counted, not fatal.
    let opts = PeriodicOptions { grid: 0, ..PeriodicOptions::default() };
    let (pts, failures) = periodic_points(&f, 0, 1, &[c(1e200, 1e200), c(-0.6, 0.0)], &opts).unwrap();
    assert_eq!(failures, 1);
    assert_eq!(pts.len(), 1);
}

#[test]
fn weighted_periods() {
    let schema = MappingSchema::capture(3);
    let (v1, v2) = (schema.vertex("v1").unwrap(), schema.vertex("v2").unwrap());
    let mut ell = vec![0; 2];
    ell[v1] = 3;
    ell[v2] = 5;
    assert_eq!(weighted_period(&schema, &ell, v2, 1), 5);
    assert_eq!(weighted_period(&schema, &ell, v2, 3), 11);
    assert_eq!(weighted_period(&schema, &ell, v1, 4), 12);
}

#[test]
fn landing_relation_examples() {
    let f = basilica();
    let set: Vec<SchemaAngle> = ["0/1", "1/3", "2/3", "1/6", "5/6"].iter().map(|s| sa(0, s)).collect();
    let p = landing_relation(&f, &set, &opts()).unwrap();
    assert_eq!(names(&p), vec![vec!["0/1"], vec!["1/6", "5/6"], vec!["1/3", "2/3"]]);

    let z2 = quad(0.0, 0.0);
    let set: Vec<SchemaAngle> = ["0/1", "1/3", "2/3", "1/7", "1/5", "1/2"].iter().map(|s| sa(0, s)).collect();
    let p = landing_relation(&z2, &set, &opts()).unwrap();
    assert!(p.iter().all(|g| g.len() == 1) && p.len() == 6);

    let r = rabbit_c();
    assert!((r - c(-0.122561, 0.744862)).norm() < 1e-6);
    let rabbit = quad(r.re, r.im);
    let set: Vec<SchemaAngle> = ["1/7", "2/7", "4/7"].iter().map(|s| sa(0, s)).collect();
    let p = landing_relation(&rabbit, &set, &opts()).unwrap();
    assert_eq!(p.len(), 1);
}

#[test]
fn landing_relation_names_the_unresolved_angle() {
    let f = quad(0.5, 0.0);
    let err = landing_relation(&f, &[sa(0, "1/3")], &opts()).unwrap_err();
    assert_eq!(err, DynamicsError::Bifurcated { vertex: "pt".into(), angle: "1/3".into() });
}

fn lam(schema: MappingSchema, gens: &[&[&str]], depth: usize) -> RationalLamination {
    RationalLamination::build(schema, gens.iter().map(|g| (0, angs(g))).collect(), depth).unwrap()
}

fn class_angles(l: &RationalLamination) -> Vec<SchemaAngle> {
    l.classes().iter().flat_map(|k| k.angles.iter().map(|a| SchemaAngle::new(k.vertex, a.clone()))).collect()
}

#[test]
fn ray_class_consistency_on_pcf_fixtures() {
    let basilica_lam = lam(MappingSchema::trivial(2), &[&["1/3", "2/3"]], 4);
    let rabbit_lam = lam(MappingSchema::trivial(2), &[&["1/7", "2/7", "4/7"]], 3);
    let ctx = TuningContext::new(Arc::new(lam(MappingSchema::trivial(2), &[&["1/3", "2/3"]], 6))).unwrap();
    let child = RationalLamination::build(ctx.child_schema().clone(), vec![(0, angs(&["1/3", "2/3"]))], 4).unwrap();
    let tuned = ctx.tune(&child, 3).unwrap();
    assert!(tuned.class_of(&sa(0, "2/5")).unwrap() == angs(&["2/5", "3/5"]));

    let r = rabbit_c();
    let fixtures = [(basilica(), basilica_lam), (quad(r.re, r.im), rabbit_lam), (quad(tuned_basilica_c(), 0.0), tuned)];
    for (f, l) in fixtures {
        let sample = class_angles(&l);
        assert!(sample.len() >= 6);
        let p = landing_relation(&f, &sample, &opts()).unwrap();
        assert!(partition_agrees(&p, &l).unwrap(), "{:?}", names(&p));
        // And exactly the cached classes, not merely a refinement.
        assert_eq!(p.len(), l.classes().len());
    }
}

#[test]
fn capture_cubic_rays_follow_its_lamination() {
    let (f, a, _) = capture_cubic();
    let image = |z: C| f.eval(0, z);
    assert!((image(image(a)) - a).norm() < 1e-12);
    assert!((image(image(-a)) - a).norm() < 1e-12);
    let base = lam(MappingSchema::trivial(3), &[&["5/9", "17/18"], &["11/18", "8/9"]], 4);
    let sample = class_angles(&base);
    let p = landing_relation(&f, &sample, &opts()).unwrap();
    assert!(partition_agrees(&p, &base).unwrap(), "{:?}", names(&p));
    // The small fixed point α between the two basilica lobes.
    let alpha = landing(&f, "1/8");
    assert!((landing(&f, "3/8") - alpha).norm() < 1e-6);
    assert!((image(alpha) - alpha).norm() < 1e-10);
    let m = multiplier(&f, 0, alpha, 1);
    assert!(m.norm() > 1.01);
}

#[test]
fn multipliers_match_finite_differences() {
    let r = rabbit_c();
    let (cap, ..) = capture_cubic();
    for (f, period) in [(basilica(), 1), (basilica(), 2), (quad(r.re, r.im), 3), (cap, 2), (quad(0.3, 0.5), 4)] {
        let (pts, _) = periodic_points(&f, 0, period, &[], &PeriodicOptions::default()).unwrap();
        assert!(!pts.is_empty());
        for p in pts {
            let fp = |z: C| f.evaluate(0, z, period).unwrap().1;
            assert!((fp(p.location) - p.location).norm() <= 1e-10);
            let h = 1e-6;
            let fd = (fp(p.location + h) - fp(p.location - h)) / (2.0 * h);
            let scale = 1.0 + p.multiplier.norm();
            assert!((fd - p.multiplier).norm() <= 1e-6 * scale, "{} vs {}", fd, p.multiplier);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multipliers_are_conjugacy_invariant(
        cr in -1.0f64..0.3, ci in -0.8f64..0.8,
        ar in 0.3f64..2.0, ai in -1.5f64..1.5, br in -1.0f64..1.0, bi in -1.0f64..1.0,
        period in 1usize..4,
    ) {
        let f = quad(cr, ci);
        let a = c(ar, ai);
        let b = c(br, bi);
        let g = f.conjugate(a, b);
        let (pf, _) = periodic_points(&f, 0, period, &[], &PeriodicOptions::default()).unwrap();
        for p in pf {
            let z = a * p.location + b;
            let m = multiplier(&g, 0, z, period);
            prop_assert!((m - p.multiplier).norm() <= 1e-10 * (1.0 + m.norm()), "{} vs {}", m, p.multiplier);
        }
    }

    #[test]
    fn reported_periodic_points_solve_the_equation(cr in -1.5f64..0.3, ci in -1.0f64..1.0, period in 1usize..4) {
        let f = quad(cr, ci);
        let (pts, _) = periodic_points(&f, 0, period, &[], &PeriodicOptions::default()).unwrap();
        for p in pts {
            let w = f.evaluate(0, p.location, period).unwrap().1;
            prop_assert!((w - p.location).norm() <= 1e-10);
            prop_assert_eq!(period % p.minimal_period, 0);
        }
    }
}

#[test]
fn preimages_cover_the_composite() {
    let r = rabbit_c();
    let f = quad(r.re, r.im);
    let w = c(0.3, -0.2);
    let pre = f.preimages(0, 3, w);
    assert_eq!(pre.len(), 8);
    for z in &pre {
        assert!((f.evaluate(0, *z, 3).unwrap().1 - w).norm() < 1e-10);
    }
}

#[test]
fn quadratic_like_examples() {
    let q = QlikeOptions::default();
    let cb = tuned_basilica_c();
    assert!((cb + 1.3107026).abs() < 1e-6);
    let f = quad(cb, 0.0);
    let found = quadratic_like_restriction(&f, 0, 2, c(0.0, 0.0), &q).unwrap();
    assert_eq!(found.degree, 2);
    assert!(found.inner_radius < found.radius && found.modulus_bound > 0.0);
    assert!(found.critical_point.norm() < 1e-9);

    let beta = c((1.0 + SQRT5) / 2.0, 0.0);
    assert_eq!(quadratic_like_restriction(&basilica(), 0, 1, beta, &q), Err(DynamicsError::NoRestriction));

    let (cap, a, _) = capture_cubic();
    let center = (a + cap.eval(0, a)) * 0.5;
    let found = quadratic_like_restriction(&cap, 0, 1, center, &q).unwrap();
    assert_eq!(found.degree, 2);
    assert!((found.critical_point - a).norm() < 1e-9);
    // The captured critical point stays outside V′.
    assert!((-a - center).norm() > found.inner_radius);
}

#[test]
fn render_is_deterministic() {
    let f = basilica();
    let view = Viewport::square(c(0.0, 0.0), 2.0);
    let a = render_julia(&f, 0, &view, 256, 256, 200).unwrap();
    let b = render_julia(&f, 0, &view, 256, 256, 200).unwrap();
    assert_eq!(a, b);
    let ppm = a.to_ppm();
    assert!(ppm.starts_with(b"P6\n256 256\n255\n"));
    assert_eq!(ppm.len(), 15 + 256 * 256 * 3);
    let hash = format!("{:x}", Sha256::digest(&ppm));
    assert_eq!(hash, GOLDEN_BASILICA_SHA256);
}

const GOLDEN_BASILICA_SHA256: &str = "b3c190226c3614b466edc14a3f62cfebfbe0119755f93b617ce39171cda2a6ba";
/// Pixels of the 320×240 grid whose plain orbit stays in |z| < 2 for 500
/// steps, counted once with a bare loop independent of the renderer.
const GOLDEN_CAULIFLOWER_INTERIOR: usize = 29308;

#[test]
fn cauliflower_interior_matches_golden() {
    let f = quad(0.25, 0.0);
    let view = Viewport { x_min: -1.6, x_max: 1.6, y_min: -1.2, y_max: 1.2 };
    let img = render_julia(&f, 0, &view, 320, 240, 500).unwrap();
    let want = GOLDEN_CAULIFLOWER_INTERIOR as f64;
    assert!((img.interior as f64 - want).abs() <= 0.01 * want, "{}", img.interior);
}

#[test]
fn render_capture_preimage_fiber() {
    let schema = MappingSchema::capture(3);
    let v2 = schema.vertex("v2").unwrap();
    let g = SchemaPolynomial::unicritical(schema, &[c(-1.0, 0.0), c(-1.0, 0.0)]).unwrap();
    let img = render_julia(&g, v2, &Viewport::square(c(0.0, 0.0), 2.0), 64, 64, 100).unwrap();
    assert!(img.interior > 0 && img.interior < 64 * 64);
    assert!(render_julia(&g, v2, &Viewport { x_min: 1.0, x_max: 0.0, y_min: 0.0, y_max: 1.0 }, 8, 8, 10).is_err());
}

#[test]
fn polynomial_json_round_trip() {
    let (cap, ..) = capture_cubic();
    let json = cap.to_json();
    let back = SchemaPolynomial::from_json(&json).unwrap();
    assert_eq!(back, cap);
    let text = serde_json::to_string(&json).unwrap();
    assert!(text.contains("\"pt\""));
}
