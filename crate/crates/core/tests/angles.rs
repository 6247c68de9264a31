use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use straitlab::angles::{
    ang, angs, consecutive_preserving, cyclic_between, multiply_map, orbit, unlinked, Angle, AngleError, Linkage,
};

// Two chords cross iff exactly one endpoint of one lies strictly inside the
// arc spanned by the other.
fn chords_cross(a: (&Angle, &Angle), b: (&Angle, &Angle)) -> bool {
    let inside = |x: &Angle| {
        let (lo, hi) = if a.0 < a.1 { (a.0, a.1) } else { (a.1, a.0) };
        lo < x && x < hi
    };
    if [a.0, a.1].contains(&b.0) || [a.0, a.1].contains(&b.1) {
        return false;
    }
    inside(b.0) != inside(b.1)
}

fn hulls_unlinked_oracle(a: &[Angle], b: &[Angle]) -> bool {
    // Hull edges plus, for sets of two or more points, one point containment
    // test: disjoint polygons either cross or one sits in a gap of the other.
    let edges = |s: &[Angle]| -> Vec<(Angle, Angle)> {
        (0..s.len()).map(|i| (s[i].clone(), s[(i + 1) % s.len()].clone())).collect()
    };
    for (p, q) in edges(a) {
        for (r, t) in edges(b) {
            if chords_cross((&p, &q), (&r, &t)) {
                return false;
            }
        }
    }
    true
}

fn winding_oracle(a: &[Angle], d: u64) -> bool {
    let img: Vec<Angle> = a.iter().map(|x| x.times_u(d)).collect();
    let distinct: HashSet<&Angle> = img.iter().collect();
    if distinct.len() == 1 {
        return true;
    }
    let mut total = BigRational::zero();
    for i in 0..img.len() {
        let (x, y) = (&img[i], &img[(i + 1) % img.len()]);
        if x == y {
            return false;
        }
        total += x.arc_to(y);
    }
    total == BigRational::one()
}

#[test]
fn multiply_map_examples() {
    assert_eq!(multiply_map(&ang("1/3"), 2).unwrap(), ang("2/3"));
    assert_eq!(multiply_map(&ang("2/3"), 2).unwrap(), ang("1/3"));
    assert_eq!(multiply_map(&ang("1/7"), 3).unwrap(), ang("3/7"));
    assert_eq!(multiply_map(&ang("1/7"), 1), Err(AngleError::Degree(1)));
}

#[test]
fn orbit_examples() {
    let o = orbit(&ang("1/7"), 2).unwrap();
    assert_eq!((o.preperiod, o.period), (0, 3));
    assert_eq!(o.orbit, vec![ang("1/7"), ang("2/7"), ang("4/7")]);
    let o = orbit(&ang("1/6"), 2).unwrap();
    assert_eq!((o.preperiod, o.period), (1, 2));
    assert_eq!(o.orbit, vec![ang("1/6"), ang("1/3"), ang("2/3")]);
    let o = orbit(&ang("1/2"), 2).unwrap();
    assert_eq!((o.preperiod, o.period), (1, 1));
    assert_eq!(o.orbit, vec![ang("1/2"), ang("0/1")]);
}

#[test]
fn cyclic_between_examples() {
    assert!(cyclic_between(&ang("1/3"), &ang("1/2"), &ang("2/3")).unwrap());
    assert!(!cyclic_between(&ang("2/3"), &ang("1/2"), &ang("1/3")).unwrap());
    assert!(cyclic_between(&ang("5/6"), &ang("0/1"), &ang("1/6")).unwrap());
    assert_eq!(cyclic_between(&ang("1/3"), &ang("1/2"), &ang("1/3")), Err(AngleError::DegenerateArc));
}

#[test]
fn unlinked_examples() {
    assert!(unlinked(&angs(&["1/3", "2/3"]), &angs(&["1/7", "2/7"]), Linkage::Strict).unwrap());
    assert!(!unlinked(&angs(&["1/7", "2/7", "4/7"]), &angs(&["3/7", "5/7"]), Linkage::Strict).unwrap());
    let a = angs(&["1/3", "2/3"]);
    assert!(unlinked(&a, &a, Linkage::Weak).unwrap());
    assert!(matches!(unlinked(&a, &a, Linkage::Strict), Err(AngleError::Shared(_))));
    assert_eq!(unlinked(&[], &a, Linkage::Weak), Err(AngleError::Empty));
}

#[test]
fn consecutive_preserving_examples() {
    assert!(consecutive_preserving(&angs(&["1/3", "2/3"]), 2).unwrap());
    assert!(consecutive_preserving(&angs(&["1/7", "2/7", "4/7"]), 2).unwrap());
    // The gaps of {1/5, 2/5, 3/5} map onto the three gaps of {1/5, 2/5, 4/5},
    // so the definition holds here.
    assert!(consecutive_preserving(&angs(&["1/5", "2/5", "3/5"]), 2).unwrap());
    assert!(winding_oracle(&angs(&["1/5", "2/5", "3/5"]), 2));
    // Under tripling the order of the images is reversed.
    assert!(!consecutive_preserving(&angs(&["1/4", "1/2", "3/4"]), 3).unwrap());
    assert!(!winding_oracle(&angs(&["1/4", "1/2", "3/4"]), 3));
}

#[test]
fn parsing_is_canonical() {
    for bad in ["2/4", "-1/3", "3/3", "4/3", "0", "1/0", " 1/3", "1/3 "] {
        assert!(bad.parse::<Angle>().is_err(), "{bad}");
    }
    assert_eq!(serde_json::to_string(&ang("0/1")).unwrap(), "\"0/1\"");
    let back: Angle = serde_json::from_str("\"2/3\"").unwrap();
    assert_eq!(back, ang("2/3"));
    assert!(serde_json::from_str::<Angle>("\"4/6\"").is_err());
}

#[test]
fn orbits_match_brute_force() {
    for d in [2u64, 3, 4] {
        for q in 1u64..=1000 {
            // A spread of numerators keeps the run short.
            for p in [0, 1, q / 3, q / 2, q - 1] {
                if p >= q {
                    continue;
                }
                let x = Angle::new(p, q);
                let o = orbit(&x, d as u32).unwrap();
                let mut seen = Vec::new();
                let mut y = x.clone();
                while !seen.contains(&y) {
                    seen.push(y.clone());
                    y = y.times_u(d);
                }
                let pre = seen.iter().position(|z| *z == y).unwrap();
                assert_eq!(o.orbit, seen);
                assert_eq!((o.preperiod, o.period), (pre, seen.len() - pre));
                let tail = o.orbit.last().unwrap().times_u(d);
                assert_eq!(tail, o.orbit[o.preperiod]);
            }
        }
    }
}

#[test]
fn preimage_counts() {
    for d in [2u32, 3, 4] {
        for q in 1u64..=60 {
            if num_integer::gcd(q, d as u64) != 1 {
                continue;
            }
            for p in 0..q {
                let theta = Angle::new(p, q);
                // Brute force over all angles with denominator dividing d·q.
                let dq = d as u64 * q;
                let hits: HashSet<Angle> =
                    (0..dq).map(|k| Angle::new(k, dq)).filter(|phi| phi.times_u(d as u64) == theta).collect();
                assert_eq!(hits.len(), d as usize);
                let pre: HashSet<Angle> = theta.preimages(d).into_iter().collect();
                assert_eq!(pre, hits);
            }
        }
    }
}

fn angle_set(max_den: u64, len: usize) -> impl Strategy<Value = Vec<Angle>> {
    proptest::collection::vec((1..max_den).prop_flat_map(|q| (0..q, Just(q))), 1..=len)
        .prop_map(|v| straitlab::angles::sorted_set(v.into_iter().map(|(p, q)| Angle::new(p, q))))
}

proptest! {
    #[test]
    fn canonical_form_is_idempotent(p in -500i64..500, q in 1i64..500) {
        let x = Angle::new(p, q);
        let again = Angle::from_ratio(x.as_ratio().clone());
        prop_assert_eq!(&again, &x);
        prop_assert!(x.as_ratio() >= &BigRational::zero() && x.as_ratio() < &BigRational::one());
        let text = x.to_string();
        prop_assert_eq!(text.parse::<Angle>().unwrap(), x);
    }

    #[test]
    fn unlinked_is_symmetric_and_matches_chords(a in angle_set(64, 4), b in angle_set(64, 4)) {
        prop_assume!(a.iter().all(|x| !b.contains(x)));
        let ab = unlinked(&a, &b, Linkage::Strict).unwrap();
        let ba = unlinked(&b, &a, Linkage::Strict).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(ab, hulls_unlinked_oracle(&a, &b));
    }

    #[test]
    fn consecutive_preserving_matches_winding(a in angle_set(40, 5), d in 2u32..5) {
        prop_assert_eq!(consecutive_preserving(&a, d).unwrap(), winding_oracle(&a, d as u64));
    }
}
