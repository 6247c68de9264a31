use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use straitlab::dynamics::{misiurewicz_newton, parameter_ray, RayOptions};
use straitlab::parabolic::*;
use straitlab::{ang, MappingSchema, SchemaPolynomial};

fn model_attr() -> FatouCoordinate<f64> {
    fatou_attracting(NormalForm::identity(PolyMap::model()), None, None).unwrap()
}

fn model_rep() -> FatouCoordinate<f64> {
    fatou_repelling(NormalForm::identity(PolyMap::model()), None, None).unwrap()
}

fn cauliflower() -> NormalForm<f64> {
    NormalForm::parabolic(&[C::new(0.25, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)], C::new(0.5, 0.0)).unwrap()
}

fn f(z: C) -> C {
    z + z * z
}

fn q(z: C) -> C {
    z * z + 0.25
}

/// `α(Q) = −1/2 + i`: `Q(−1/2 + i) = −1/2 − i` and `Q(−1/2 − i) = −1/2 + i`.
const ALPHA_Q: C = C::new(-0.5, 1.0);

/// The phase with `g(1/4) = α(Q)`, through the preimage of `α(Q)` under
/// `Q^k` reached by the branch `√(z − 1/4)` fixing `1/2`.
fn cauliflower_lavaurs() -> LavaursMap<f64> {
    let attr = fatou_attracting(cauliflower(), None, None).unwrap();
    let rep = fatou_repelling(cauliflower(), None, None).unwrap();
    let k = 12;
    let mut y = ALPHA_Q;
    for _ in 0..k {
        y = (y - 0.25).sqrt();
    }
    let phase = rep.eval(y).unwrap() + k as f64 - attr.eval(C::new(0.25, 0.0)).unwrap();
    lavaurs(attr, rep, phase).unwrap()
}

fn basin_points(n: usize, seed: u64) -> Vec<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = 0.2 * rng.gen::<f64>().sqrt();
            C::new(-0.25, 0.0) + C::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect()
}

#[test]
fn abel_equation_for_the_model_map() {
    let phi = model_attr();
    assert_eq!(phi.eps, 0.25);
    for z in [C::new(-0.1, 0.0), C::new(-0.1, 0.02), C::new(-0.11, -0.03), C::new(-0.09, 0.01)] {
        let r = (phi.eval(f(z)).unwrap() - phi.eval(z).unwrap() - 1.0).norm();
        assert!(r <= 1e-9, "{z}: {r}");
    }
    for z in basin_points(100, 7) {
        let r = (phi.eval(f(z)).unwrap() - phi.eval(z).unwrap() - 1.0).norm();
        assert!(r <= 1e-8, "{z}: {r}");
    }
    assert!(phi.eval(phi.base).unwrap().norm() < 1e-15);
}

#[test]
fn abel_residual_on_grids() {
    for phi in [model_attr(), model_rep()] {
        let (r, n) = phi.abel_residual(40).unwrap();
        assert!(n >= 1000, "{n} points");
        assert!(r <= 1e-8, "{:?}: {r}", phi.kind);
        assert!(phi.winding_check(400).unwrap());
    }
}

#[test]
fn cauliflower_normal_form() {
    // w = z − 1/2 conjugates z² + 1/4 to w + w² exactly.
    let nf = cauliflower();
    assert_eq!(nf.scale, C::new(1.0, 0.0));
    let c = &nf.map.coeffs;
    assert_eq!(c.len(), 3);
    assert!((c[2] - 1.0).norm() < 1e-15);
    let via_schema =
        NormalForm::from_schema(&SchemaPolynomial::quadratic(C::new(0.25, 0.0)), 0, 1, C::new(0.5, 0.0)).unwrap();
    assert_eq!(via_schema, nf);
    let phi = fatou_attracting(nf, None, None).unwrap();
    let (r, _) = phi.abel_residual(40).unwrap();
    assert!(r <= 1e-8);
    for z in [C::new(0.4, 0.0), C::new(0.25, 0.0), C::new(0.0, 0.1)] {
        assert!((phi.eval(q(z)).unwrap() - phi.eval(z).unwrap() - 1.0).norm() <= 1e-9);
    }
}

#[test]
fn normal_form_rescales_and_checks_the_multiplier() {
    // 3(z − 1)² + z has a parabolic point at 1 with second coefficient 3.
    let coeffs = [C::new(3.0, 0.0), C::new(-5.0, 0.0), C::new(3.0, 0.0)];
    let nf = NormalForm::parabolic(&coeffs, C::new(1.0, 0.0)).unwrap();
    assert_eq!(nf.scale, C::new(3.0, 0.0));
    for z in [C::new(0.9, 0.1), C::new(1.05, -0.02)] {
        let direct = coeffs[0] + coeffs[1] * z + coeffs[2] * z * z;
        assert!((nf.eval_global(z) - direct).norm() < 1e-14);
    }
    let attr = fatou_attracting(nf, None, None).unwrap();
    assert!(attr.abel_residual(30).unwrap().0 <= 1e-8);

    let not_parabolic =
        NormalForm::parabolic(&[C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(1.0, 0.0)], C::new(0.0, 0.0));
    assert!(matches!(not_parabolic, Err(ParabolicError::NotParabolic { .. })));
    let not_fixed = NormalForm::parabolic(&[C::new(0.25, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)], C::new(0.4, 0.0));
    assert!(matches!(not_fixed, Err(ParabolicError::NotFixed { .. })));
    let degenerate = NormalForm::parabolic(
        &[C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)],
        C::new(0.0, 0.0),
    );
    assert_eq!(degenerate, Err(ParabolicError::Degenerate));
}

#[test]
fn petal_radius_policy() {
    assert!(matches!(
        fatou_attracting(NormalForm::identity(PolyMap::model()), Some(2.0), None),
        Err(ParabolicError::EpsTooLarge { .. })
    ));
    let small = fatou_attracting(NormalForm::identity(PolyMap::model()), Some(0.1), None).unwrap();
    assert_eq!(small.eps, 0.1);
    // w + w² + 4w³ needs a smaller petal than 1/4.
    let cubic = PolyMap::new(vec![C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(4.0, 0.0)]);
    let phi = fatou_attracting(NormalForm::identity(cubic), None, None).unwrap();
    assert!(phi.eps < 0.25);
    assert!(phi.abel_residual(40).unwrap().0 <= 1e-8);
}

#[test]
fn repelling_inverse_and_extension() {
    let rep = model_rep();
    let (center, r) = rep.domain();
    for k in 0..40 {
        let z = center + C::from_polar(r * 0.9 * (k as f64 / 40.0), k as f64 * 2.4);
        let back = rep.psi(rep.eval(z).unwrap()).unwrap();
        assert!((back - z).norm() <= 1e-9, "{z}: {back}");
    }
    for i in 0..=20 {
        for j in -6..=6 {
            let w = C::new(-5.0 + 0.5 * i as f64, 0.5 * j as f64);
            let lhs = rep.psi(w + 1.0).unwrap();
            let rhs = f(rep.psi(w).unwrap());
            assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()), "{w}");
            let sym = rep.psi(w.conj()).unwrap() - rep.psi(w).unwrap().conj();
            assert!(sym.norm() <= 1e-10, "{w}: {sym}");
        }
    }
    assert!(model_attr().psi(C::new(0.0, 0.0)).is_err());
}

#[test]
fn lavaurs_commutes_with_the_map() {
    for phase in [C::new(0.0, 0.0), C::new(0.3, 0.7), C::new(-1.2, -0.4)] {
        let g = lavaurs(model_attr(), model_rep(), phase).unwrap();
        let pts = basin_points(50, 11);
        assert!(g.commutation_residual(&pts).unwrap() <= 1e-6);
        let shifted = g.with_phase(phase + 1.0);
        for &z in &pts {
            let d = shifted.eval(z).unwrap() - f(g.eval(z).unwrap());
            assert!(d.norm() <= 1e-6);
        }
    }
}

#[test]
fn lavaurs_gauge_invariance() {
    let attr = model_attr();
    let rep = model_rep();
    for (tau, c) in [(C::new(0.5, 0.0), C::new(0.2, 0.1)), (C::new(-0.3, 1.1), C::new(0.0, -0.5))] {
        let g1 = lavaurs(attr.translated(tau), rep.clone(), c).unwrap();
        let g2 = lavaurs(attr.clone(), rep.clone(), c + tau).unwrap();
        for z in basin_points(30, 3) {
            assert!((g1.eval(z).unwrap() - g2.eval(z).unwrap()).norm() <= 1e-9);
        }
    }
}

#[test]
fn lavaurs_rejects_mismatched_coordinates() {
    let other = fatou_repelling(cauliflower(), None, None).unwrap();
    assert_eq!(lavaurs(model_attr(), other, C::new(0.0, 0.0)), Err(ParabolicError::MapMismatch));
    assert!(lavaurs(model_rep(), model_rep(), C::new(0.0, 0.0)).is_err());
}

#[test]
fn cauliflower_lavaurs_map_sends_the_critical_value_to_alpha() {
    let g = cauliflower_lavaurs();
    let v = g.eval(C::new(0.25, 0.0)).unwrap();
    assert!((v - ALPHA_Q).norm() <= 1e-4, "{v}");
    // The same phase comes out of every depth of the preimage chain.
    let mut y = ALPHA_Q;
    let a = g.attracting.eval(C::new(0.25, 0.0)).unwrap();
    for k in 1..=14 {
        y = (y - 0.25).sqrt();
        if let Ok(p) = g.repelling.eval(y) {
            assert!((p + k as f64 - a - g.phase).norm() < 1e-9, "k = {k}");
        }
    }
    assert!(g.derivative(C::new(0.25, 0.0), 1e-5).unwrap().norm() > 1e-3);
}

#[test]
fn perturbed_coordinates() {
    let alpha = C::from_polar(0.01, std::f64::consts::PI / 8.0);
    let phi = fatou_perturbed(PolyMap::rotation_model(alpha), None, None).unwrap();
    let (r, n) = phi.abel_residual(12).unwrap();
    assert!(n > 100);
    assert!(r <= 1e-7, "{r}");
    assert!(phi.winding_check(200).unwrap());

    for a in [C::new(0.0, 0.01), C::new(-0.01, 0.0), C::from_polar(0.01, 1.0), C::new(0.0, 0.0)] {
        assert!(
            matches!(fatou_perturbed(PolyMap::rotation_model(a), None, None), Err(ParabolicError::Sector { .. })),
            "{a}"
        );
    }
}

#[test]
fn perturbed_fixed_point_seed() {
    // λw + w² fixes x = 1 − λ; the seed band is |x + 2πiα| ≤ |πiα|.
    for a in [C::new(1e-3, 0.0), C::from_polar(1e-3, 0.5), C::from_polar(1e-4, -0.7), C::new(1e-6, 0.0)] {
        let map = PolyMap::rotation_model(a);
        let lambda = map.coeffs[1];
        let x = C::new(1.0, 0.0) - lambda;
        let seed = C::new(0.0, -std::f64::consts::TAU) * a;
        assert!((x - seed).norm() <= 0.5 * seed.norm(), "{a}");
        let phi = fatou_perturbed(map, None, None).unwrap();
        let (center, r) = phi.domain();
        // The petal boundary passes through 0 and x.
        assert!((center.norm() - r).abs() < 1e-12);
        assert!(((center - x).norm() - r).abs() < 1e-12);
    }
}

#[test]
fn perturbed_coordinates_approach_the_parabolic_one() {
    // On the compact disk |z + 0.12| ≤ 0.01 the difference of the two
    // coordinates, up to a constant, shrinks with α.
    let attr = model_attr();
    let compact: Vec<C> = std::iter::once(C::new(-0.12, 0.0))
        .chain((0..8).map(|j| C::new(-0.12, 0.0) + C::from_polar(0.01, j as f64 * std::f64::consts::FRAC_PI_4)))
        .collect();
    let mut drifts = Vec::new();
    for a in [1e-2, 1e-3, 1e-4, 1e-5] {
        let phi = fatou_perturbed(PolyMap::rotation_model(C::new(a, 0.0)), None, None).unwrap();
        let diffs: Vec<C> = compact.iter().map(|&z| phi.eval(z).unwrap() - attr.eval(z).unwrap()).collect();
        drifts.push(diffs.iter().map(|d| (d - diffs[0]).norm()).fold(0.0, f64::max));
    }
    assert!(drifts.windows(2).all(|w| w[1] < w[0]), "{drifts:?}");
    assert!(drifts[3] <= 1e-3, "{drifts:?}");
}

#[test]
fn geometric_limit_negative_control() {
    let g = cauliflower_lavaurs();
    let pts: Vec<C> = (0..8).map(|j| C::new(0.25, 0.0) + C::from_polar(0.01, j as f64)).collect();
    let maps: Vec<fn(C) -> C> = vec![q; 5];
    let table = geometric_limit_check(&maps, &[6; 5], &g, &pts).unwrap();
    let d0 = table.rows[0].sup_distance;
    assert!(table.rows.iter().all(|r| r.sup_distance == d0));
    assert_eq!(table.verdict, Verdict::NotConverging);
    assert_eq!(table.min_ratio, 1.0);

    // Shifting k by one matches the phase c + 1.
    let shifted = g.with_phase(g.phase + 1.0);
    let t1 = geometric_limit_check(&maps[..1], &[7], &shifted, &pts).unwrap();
    let direct = pts
        .iter()
        .map(|&z| {
            let mut w = z;
            for _ in 0..7 {
                w = q(w);
            }
            (w - q(g.eval(z).unwrap())).norm()
        })
        .fold(0.0, f64::max);
    assert!((t1.rows[0].sup_distance - direct).abs() <= 1e-5);

    let escaping: Vec<fn(C) -> C> = vec![|z| z * z + 3.0];
    assert!(matches!(geometric_limit_check(&escaping, &[40], &g, &pts), Err(ParabolicError::Escape { index: 0, .. })));
}

#[test]
fn quadratic_implosion_converges() {
    // Q_m = z² + c_m with c_m the landing point of the parameter ray of
    // angle (1/3)/2^m, certified by Q_m^{m+1}(0) = Q_m^{m+3}(0).
    let g = cauliflower_lavaurs();
    let opts = RayOptions { target_potential: 1e-6, ..RayOptions::default() };
    let mut cs = Vec::new();
    for m in 4..=10usize {
        let ray = parameter_ray(&ang("1/3").div_u(1 << m), &opts).unwrap();
        let (c, residual) = misiurewicz_newton(ray.c, m + 1, 2, 100).unwrap();
        assert!(residual <= 1e-9);
        cs.push(c);
    }
    let maps: Vec<_> = cs.iter().map(|&c| move |z: C| z * z + c).collect();
    let ks: Vec<usize> = (4..=10).collect();
    let pts: Vec<C> =
        (0..16).map(|j| C::new(0.25, 0.0) + C::from_polar(0.002, j as f64 * std::f64::consts::FRAC_PI_8)).collect();
    let table = geometric_limit_check(&maps, &ks, &g, &pts).unwrap();
    assert!(table.rows.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance));
    // The distances fall like 1/m: the ratios stay near 1.03 to 1.09.
    assert!(table.min_ratio > 1.0 && table.min_ratio < 1.2, "{}", table.min_ratio);
}

#[test]
fn holder_exponent_examples() {
    let anchor = (C::new(0.3, -0.2), C::new(0.6, -0.4));
    let linear: Vec<(C, C)> = (0..40)
        .map(|k| {
            let w = anchor.0 + C::from_polar(10f64.powf(-(k as f64) / 8.0), k as f64);
            (w, w * 2.0)
        })
        .collect();
    let fit = holder_exponent(&linear, anchor, None).unwrap();
    assert!((fit.exponent - 1.0).abs() <= 0.01);
    assert!(!fit.low_confidence);
    assert!(fit.residual < 1e-10);

    let power: Vec<(C, C)> = (0..40)
        .map(|k| {
            let t: f64 = 10f64.powf(-(k as f64) / 8.0);
            (C::new(t, 0.0), C::new(t.powf(1.5) * (1.0 + 0.1 * (k as f64).sin()), 0.0))
        })
        .collect();
    let fit = holder_exponent(&power, (C::new(0.0, 0.0), C::new(0.0, 0.0)), Some((2.0, 2f64.powf(1.5)))).unwrap();
    assert!((fit.exponent - 1.5).abs() <= 0.02, "{}", fit.exponent);
    assert!((fit.predicted.unwrap() - 1.5).abs() < 1e-12);
    assert!(fit.relative_gap.unwrap() < 0.02);

    let narrow: Vec<(C, C)> = (1..10).map(|k| (C::new(k as f64 * 0.01, 0.0), C::new(k as f64 * 0.02, 0.0))).collect();
    assert!(holder_exponent(&narrow, (C::new(0.0, 0.0), C::new(0.0, 0.0)), None).unwrap().low_confidence);
    assert!(holder_exponent(&narrow[..2], (C::new(0.0, 0.0), C::new(0.0, 0.0)), None).is_err());
}

#[test]
fn grid_samples_serialize() {
    let s = model_attr().sample_grid(8).unwrap();
    assert!(!s.points.is_empty());
    let json = serde_json::to_string(&s).unwrap();
    let back: GridSample = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
    assert!(json.contains("\"attracting\""));
}

#[test]
fn capture_schema_normal_form_uses_the_return_map() {
    // (v1, z) ↦ (v1, z² + 1/4) over the capture schema: the return map of v1
    // is the cauliflower.
    let schema = MappingSchema::capture(3);
    let v1 = schema.vertex("v1").unwrap();
    let v2 = schema.vertex("v2").unwrap();
    let mut coeffs = vec![Vec::new(); 2];
    coeffs[v1] = vec![C::new(0.25, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
    coeffs[v2] = vec![C::new(0.25, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
    let p = SchemaPolynomial::new(schema, coeffs).unwrap();
    assert_eq!(NormalForm::from_schema(&p, v1, 1, C::new(0.5, 0.0)).unwrap(), cauliflower());
    assert!(NormalForm::from_schema(&p, v2, 1, C::new(0.5, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn abel_holds_in_the_petal(r in 0.0f64..0.2, t in 0.0f64..std::f64::consts::TAU) {
        let phi = model_attr();
        let z = C::new(-0.25, 0.0) + C::from_polar(r, t);
        let res = (phi.eval(f(z)).unwrap() - phi.eval(z).unwrap() - 1.0).norm();
        prop_assert!(res <= 1e-8);
    }

    #[test]
    fn gauge_invariance(tr in -2.0f64..2.0, ti in -2.0f64..2.0, cr in -1.0f64..1.0, ci in -1.0f64..1.0) {
        let tau = C::new(tr, ti);
        let c = C::new(cr, ci);
        let z = C::new(-0.2, 0.05);
        let g1 = lavaurs(model_attr().translated(tau), model_rep(), c).unwrap();
        let g2 = lavaurs(model_attr(), model_rep(), c + tau).unwrap();
        prop_assert!((g1.eval(z).unwrap() - g2.eval(z).unwrap()).norm() <= 1e-9);
    }
}
