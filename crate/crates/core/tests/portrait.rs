use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use straitlab::angles::{angs, sorted_set, Angle};
use straitlab::lamination::RationalLamination;
use straitlab::portrait::{portrait_from_lamination, CriticalPortrait, Placement, PortraitError, PortraitViolation};
use straitlab::schema::MappingSchema;
use straitlab::tuning::TuningContext;

fn frac(x: BigRational) -> BigRational {
    let f = x.floor();
    x - f
}

fn times(x: &Angle, d: u64) -> BigRational {
    frac(x.as_ratio() * BigRational::from_integer(BigInt::from(d)))
}

/// CP1 and CP3 over a single-vertex schema of degree `d`, plus pairwise
/// chord disjointness read from cyclic order.
fn cp_oracle(pieces: &[Vec<Angle>], d: u64) -> bool {
    let mut sum = 0;
    for p in pieces {
        let imgs: Vec<BigRational> = p.iter().map(|x| times(x, d)).collect();
        if p.len() < 2 || imgs.iter().any(|y| *y != imgs[0]) {
            return false;
        }
        sum += p.len() - 1;
    }
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            if !arc_oracle(&pieces[i], &pieces[j]) {
                return false;
            }
        }
    }
    sum as u64 == d - 1
}

/// `x` avoids `theta` and sits in the closure of one complementary arc of it.
fn arc_oracle(theta: &[Angle], x: &[Angle]) -> bool {
    let mut arc = None;
    for y in x {
        if theta.contains(y) {
            return false;
        }
        let k = theta.iter().filter(|t| *t < y).count() % theta.len();
        if *arc.get_or_insert(k) != k {
            return false;
        }
    }
    true
}

fn strictly_preperiodic_oracle(x: &Angle, d: u64) -> bool {
    let start = x.as_ratio().clone();
    let mut seen = vec![start.clone()];
    let mut y = start.clone();
    loop {
        y = frac(y * BigRational::from_integer(BigInt::from(d)));
        if y == start {
            return false;
        }
        if seen.contains(&y) {
            return true;
        }
        seen.push(y.clone());
    }
}

fn single(d: u32, pieces: &[&[&str]]) -> Result<CriticalPortrait, PortraitError> {
    CriticalPortrait::new(MappingSchema::trivial(d), pieces.iter().map(|p| (0, angs(p))).collect())
}

fn quadratic(schema: &MappingSchema, gens: &[&[&str]], depth: usize) -> RationalLamination {
    RationalLamination::build(schema.clone(), gens.iter().map(|g| (0, angs(g))).collect(), depth).unwrap()
}

#[test]
fn validate_examples() {
    assert!(single(2, &[&["1/6", "2/3"]]).is_ok());
    assert!(cp_oracle(&[angs(&["1/6", "2/3"])], 2));
    assert!(single(3, &[&["1/9", "4/9", "7/9"]]).is_ok());
    assert!(cp_oracle(&[angs(&["1/9", "4/9", "7/9"])], 3));
    match single(2, &[&["1/3", "2/3"]]) {
        Err(PortraitError::Invalid(rep)) => assert!(rep.violations.contains(&PortraitViolation::Collapse { piece: 0 })),
        other => panic!("unexpected {other:?}"),
    }
    assert!(!cp_oracle(&[angs(&["1/3", "2/3"])], 2));
}

#[test]
fn validate_reports_linked_and_degree() {
    // Two crossing critical chords of the cubic.
    match single(3, &[&["0/1", "1/3"], &["1/6", "1/2"]]) {
        Err(PortraitError::Invalid(rep)) => {
            assert!(rep.violations.contains(&PortraitViolation::Linked { a: 0, b: 1 }))
        }
        other => panic!("unexpected {other:?}"),
    }
    match single(3, &[&["0/1", "1/3"]]) {
        Err(PortraitError::Invalid(rep)) => {
            assert_eq!(rep.violations, vec![PortraitViolation::DegreeSum { found: 1, expected: 2 }])
        }
        other => panic!("unexpected {other:?}"),
    }
    // Sharing an endpoint is weakly unlinked but not a valid pair of pieces.
    assert!(single(3, &[&["0/1", "1/3"], &["1/3", "2/3"]]).is_err());
    assert!(single(3, &[&["0/1", "1/3"], &["1/2", "5/6"]]).is_ok());
    let t = MappingSchema::capture(3);
    let p = CriticalPortrait::new(t.clone(), vec![(0, angs(&["1/4", "3/4"])), (1, angs(&["1/4", "3/4"]))]).unwrap();
    assert!(p.validate().is_valid());
    // Pieces in different fibers never interact.
    let raw = CriticalPortrait::new(t, vec![(0, angs(&["1/4", "3/4"])), (5, angs(&["0/1", "1/2"]))]);
    assert!(
        matches!(raw, Err(PortraitError::Invalid(r)) if r.violations.contains(&PortraitViolation::Fiber { piece: 1 }))
    );
}

#[test]
fn preperiodic_examples() {
    let cases: [(u32, &[&str], bool); 3] =
        [(2, &["1/6", "2/3"], false), (2, &["1/12", "7/12"], true), (3, &["1/9", "4/9", "7/9"], true)];
    for (d, piece, expected) in cases {
        let p = single(d, &[piece]).unwrap();
        assert_eq!(p.is_preperiodic(), expected, "{piece:?}");
        assert_eq!(angs(piece).iter().all(|x| strictly_preperiodic_oracle(x, d as u64)), expected);
    }
}

#[test]
fn unlinked_neighborhood_examples() {
    let p = single(2, &[&["1/6", "2/3"]]).unwrap();
    let theta = angs(&["1/6", "2/3"]);
    for (x, expected) in [(vec!["0/1"], true), (vec!["1/4", "1/2"], true), (vec!["0/1", "1/4"], false)] {
        let x = angs(&x);
        assert_eq!(p.unlinked_neighborhood(0, &x), expected, "{x:?}");
        assert_eq!(arc_oracle(&theta, &x), expected);
    }
    assert!(!p.unlinked_neighborhood(0, &angs(&["1/6"])));
}

#[test]
fn json_round_trip() {
    let p =
        CriticalPortrait::new(MappingSchema::capture(3), vec![(1, angs(&["3/4", "1/4"])), (0, angs(&["1/6", "2/3"]))])
            .unwrap();
    let text = serde_json::to_string(&p.to_json()).unwrap();
    assert_eq!(
        text,
        r#"{"schema":{"vertices":["v1","v2"],"sigma":{"v1":"v1","v2":"v1"},"delta":{"v1":2,"v2":2}},"pieces":[{"vertex":"v1","angles":["1/6","2/3"]},{"vertex":"v2","angles":["1/4","3/4"]}]}"#
    );
    let back = CriticalPortrait::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back, p);
}

fn gap_degree_sums(sel: &straitlab::portrait::PortraitSelection) -> Vec<usize> {
    let t = sel.pushforward.schema();
    t.vertices()
        .map(|w| sel.pushforward.pieces().iter().filter(|(u, _)| *u == w).map(|(_, a)| a.len() - 1).sum())
        .collect()
}

#[test]
fn base_portrait_pushes_to_trivial_child() {
    let base = Arc::new(quadratic(&MappingSchema::trivial(2), &[&["1/3", "2/3"]], 5));
    let ctx = TuningContext::new(base.clone()).unwrap();
    let sel = portrait_from_lamination(&base, &ctx).unwrap();
    assert_eq!(sel.portrait.pieces(), &[(0, angs(&["1/6", "2/3"]))]);
    assert_eq!(sel.placement, vec![Placement::Gap { w: 0 }]);
    let trivial = RationalLamination::build(ctx.child_schema().clone(), vec![], 3).unwrap();
    let expected: Vec<_> = trivial.portrait().iter().map(|p| (p.vertex, p.angles.clone())).collect();
    assert_eq!(sel.pushforward.pieces(), &expected[..]);
    assert_eq!(sel.pushforward.pieces(), &[(0, angs(&["0/1", "1/2"]))]);
    assert_eq!(gap_degree_sums(&sel), vec![1]);
}

#[test]
fn tuned_rabbit_pushes_to_rabbit_portrait() {
    let base = Arc::new(quadratic(&MappingSchema::trivial(2), &[&["1/3", "2/3"]], 5));
    let ctx = TuningContext::new(base).unwrap();
    let rabbit = quadratic(ctx.child_schema(), &[&["1/7", "2/7", "4/7"]], 4);
    let tuned = ctx.tune(&rabbit, 4).unwrap();
    let sel = portrait_from_lamination(&tuned, &ctx).unwrap();
    assert_eq!(sel.placement, vec![Placement::Gap { w: 0 }]);
    assert!(sel.pushforward.validate().is_valid());
    // The pushed piece is the critical piece the rabbit itself selects, and it
    // is unlinked with every rabbit class.
    let own: Vec<_> = rabbit.portrait().iter().map(|p| (p.vertex, p.angles.clone())).collect();
    assert_eq!(sel.pushforward.pieces(), &own[..]);
    assert_eq!(sel.pushforward.pieces(), &[(0, angs(&["1/14", "4/7"]))]);
    for c in rabbit.classes() {
        let piece = &sel.pushforward.pieces()[0].1;
        let meets = c.angles.iter().any(|x| piece.contains(x));
        assert!(meets || sel.pushforward.unlinked_neighborhood(0, &c.angles), "{:?}", c.angles);
    }
    let before: usize = sel.portrait.pieces().iter().map(|(_, a)| a.len() - 1).sum();
    assert_eq!(before, 1);
    assert_eq!(gap_degree_sums(&sel), vec![1]);
}

#[test]
fn critical_class_is_selected_as_is() {
    // A cubic with a critical leaf landing on a fixed point and a period two
    // critical Fatou gap.
    let base = Arc::new(quadratic(&MappingSchema::trivial(3), &[&["1/6", "5/6"], &["1/8", "7/8"]], 3));
    let inv = base.critical_inventory().unwrap();
    assert_eq!(inv.crit_p.len(), 1);
    assert_eq!(inv.crit_f.len(), 1);
    let ctx = TuningContext::new(base.clone()).unwrap();
    let sel = portrait_from_lamination(&base, &ctx).unwrap();
    assert!(sel.portrait.validate().is_valid());
    assert_eq!(sel.placement, vec![Placement::CriticalClass { class: angs(&["1/6", "5/6"]) }, Placement::Gap { w: 0 }]);
    assert!(sel.portrait.pieces().contains(&(0, angs(&["1/6", "5/6"]))));
    assert_eq!(sel.pushforward.pieces(), &[(0, angs(&["0/1", "1/2"]))]);
    assert_eq!(gap_degree_sums(&sel), vec![ctx.child_schema().delta(0) as usize - 1]);
}

#[test]
fn selection_requires_containment() {
    let base = Arc::new(quadratic(&MappingSchema::trivial(2), &[&["1/3", "2/3"]], 5));
    let ctx = TuningContext::new(base).unwrap();
    let other = quadratic(&MappingSchema::trivial(2), &[&["1/7", "2/7", "4/7"]], 4);
    assert!(matches!(portrait_from_lamination(&other, &ctx), Err(PortraitError::Lamination(_))));
}

/// A valid cubic portrait built from one or two critical values.
fn cubic_portrait() -> impl Strategy<Value = Vec<Vec<Angle>>> {
    (1u64..40, 0u64..40, 0u64..3, any::<bool>()).prop_map(|(q, p, k, full)| {
        let v = Angle::new(p % q, q);
        let pre = v.preimages(3);
        if full {
            vec![pre]
        } else {
            // Adjacent preimages of v, and the next two preimages of v + 1/2,
            // which lie outside the arc cut off by the first chord.
            let i = k as usize;
            let a = sorted_set([pre[i].clone(), pre[(i + 1) % 3].clone()]);
            let shift = |x: &Angle| Angle::from_ratio(x.as_ratio() + BigRational::new(1.into(), 6.into()));
            let w = sorted_set(pre.iter().map(shift));
            let b = sorted_set([w[(i + 1) % 3].clone(), w[(i + 2) % 3].clone()]);
            vec![a, b]
        }
    })
}

fn angle_set(max_den: u64, len: usize) -> impl Strategy<Value = Vec<Angle>> {
    proptest::collection::vec((1..max_den).prop_flat_map(|q| (0..q, Just(q))), 1..=len)
        .prop_map(|v| sorted_set(v.into_iter().map(|(p, q)| Angle::new(p, q))))
}

proptest! {
    #[test]
    fn degree_sum_holds_for_valid_portraits(pieces in cubic_portrait()) {
        let res = CriticalPortrait::new(MappingSchema::trivial(3), pieces.iter().map(|p| (0, p.clone())).collect());
        prop_assert_eq!(res.is_ok(), cp_oracle(&pieces, 3));
        if let Ok(p) = res {
            let sum: usize = p.pieces().iter().map(|(_, a)| a.len() - 1).sum();
            prop_assert_eq!(sum, 2);
            let back = CriticalPortrait::from_json(&p.to_json()).unwrap();
            let again: usize = back.pieces().iter().map(|(_, a)| a.len() - 1).sum();
            prop_assert_eq!(again, 2);
        }
    }

    #[test]
    fn quadratic_diameters_are_valid(p in 0u64..200, q in 1u64..200) {
        let v = Angle::new(p % q, q);
        let pre = v.preimages(2);
        let portrait = CriticalPortrait::new(MappingSchema::trivial(2), vec![(0, pre.clone())]).unwrap();
        prop_assert!(portrait.validate().is_valid());
        prop_assert_eq!(portrait.is_preperiodic(), pre.iter().all(|x| strictly_preperiodic_oracle(x, 2)));
        prop_assert!((pre[1].as_ratio() - pre[0].as_ratio() - BigRational::new(1.into(), 2.into())).is_zero());
    }

    #[test]
    fn neighborhoods_are_monotone(x in angle_set(48, 5), drop in 0usize..5, pieces in cubic_portrait()) {
        let Ok(p) = CriticalPortrait::new(MappingSchema::trivial(3), pieces.iter().map(|q| (0, q.clone())).collect()) else {
            return Ok(());
        };
        let big = p.unlinked_neighborhood(0, &x);
        let mut small = x.clone();
        if small.len() > 1 {
            small.remove(drop % small.len());
        }
        if big {
            prop_assert!(p.unlinked_neighborhood(0, &small));
        }
        let expected = p.pieces().iter().all(|(_, t)| arc_oracle(t, &x));
        prop_assert_eq!(big, expected);
    }
}
