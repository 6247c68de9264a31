//! Named laminations, polynomials and the multiplier-mismatch fixtures.
//!
//! The JSON files under `fixtures/` are compiled in, so the binary does not
//! depend on the working directory; the tests check that they agree with
//! the constructors here.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use straitlab::dynamics::poly_roots;
use straitlab::lamination::LaminationJson;
use straitlab::{angs, MappingSchema, RationalLamination, SchemaPolynomial};

use crate::{HarnessError, Result};

pub const BASILICA_JSON: &str = include_str!("../fixtures/basilica.json");
pub const RABBIT_JSON: &str = include_str!("../fixtures/rabbit.json");
pub const BASILICA_POLY_JSON: &str = include_str!("../fixtures/basilica_poly.json");
pub const CAPTURE_CUBIC_JSON: &str = include_str!("../fixtures/capture_cubic.json");
pub const IDENTITY_JSON: &str = include_str!("../fixtures/identity.json");

/// Generators of the built-in laminations as `(name, degree, classes)`.
pub const LAMINATIONS: &[(&str, u32, &[&[&str]])] = &[
    ("basilica", 2, &[&["1/3", "2/3"]]),
    ("rabbit", 2, &[&["1/7", "2/7", "4/7"]]),
    ("corabbit", 2, &[&["3/7", "5/7", "6/7"]]),
    ("airplane", 2, &[&["3/7", "4/7"], &["1/7", "6/7"], &["2/7", "5/7"]]),
    ("capture-base", 3, &[&["5/9", "17/18"], &["11/18", "8/9"]]),
    ("capture-full", 3, &[&["5/9", "17/18"], &["11/18", "8/9"], &["1/8", "3/8"]]),
];

pub fn lamination(name: &str, depth: usize) -> Result<RationalLamination> {
    let (_, d, gens) = LAMINATIONS
        .iter()
        .find(|(n, ..)| *n == name)
        .ok_or_else(|| HarnessError::Usage(format!("unknown lamination fixture {name:?}")))?;
    RationalLamination::build(MappingSchema::trivial(*d), gens.iter().map(|g| (0, angs(g))).collect(), depth)
        .map_err(HarnessError::domain)
}

pub fn lamination_from_json(text: &str) -> Result<RationalLamination> {
    let raw: LaminationJson =
        serde_json::from_str(text).map_err(|e| HarnessError::Usage(format!("lamination: {e}")))?;
    RationalLamination::from_json(&raw).map_err(HarnessError::domain)
}

pub fn polynomial_from_json(text: &str) -> Result<SchemaPolynomial> {
    let raw = serde_json::from_str(text).map_err(|e| HarnessError::Usage(format!("polynomial: {e}")))?;
    SchemaPolynomial::from_json(&raw).map_err(HarnessError::domain)
}

/// How a fixture's polynomial is realized numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Realization {
    /// `z³ − 3a²z + b` with `f²(a) = a` and `f²(−a) = a`, by Newton in
    /// `(a, b)` from the seeds.
    CaptureCubic { seed_a: [f64; 2], seed_b: [f64; 2] },
    /// The center `z² + c` whose landing relation is the fixture lamination.
    QuadraticCenter,
}

/// A renormalizable polynomial with its combinatorics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MismatchFixture {
    pub name: String,
    pub realization: Realization,
    /// The renormalization context `λ0`.
    pub base: LaminationJson,
    /// The lamination of the polynomial, containing `λ0`.
    pub lamination: LaminationJson,
    /// Vertex of the induced schema that carries the renormalization.
    pub gap: usize,
    /// Offset `δ` of the Hölder samples `θ + δ/2^{rk}` in the straightened plane.
    pub sample_offset: String,
}

impl MismatchFixture {
    pub fn named(name: &str) -> Result<Self> {
        let text = match name {
            "capture-cubic" => CAPTURE_CUBIC_JSON,
            "identity" => IDENTITY_JSON,
            _ => return Err(HarnessError::Usage(format!("unknown mismatch fixture {name:?}"))),
        };
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Usage(format!("fixture: {e}")))
    }

    pub fn realize(&self) -> Result<SchemaPolynomial> {
        match &self.realization {
            Realization::CaptureCubic { seed_a, seed_b } => {
                Ok(capture_cubic(C::new(seed_a[0], seed_a[1]), C::new(seed_b[0], seed_b[1]))?.0)
            }
            Realization::QuadraticCenter => {
                let lam = RationalLamination::from_json(&self.lamination).map_err(HarnessError::domain)?;
                quadratic_center(&lam)
            }
        }
    }
}

/// The capture cubic and its parameters `(a, b)`.
pub fn capture_cubic(seed_a: C, seed_b: C) -> Result<(SchemaPolynomial, C, C)> {
    let f = |a: C, b: C, z: C| z * z * z - 3.0 * a * a * z + b;
    let g = |x: [C; 2]| [f(x[0], x[1], f(x[0], x[1], x[0])) - x[0], f(x[0], x[1], f(x[0], x[1], -x[0])) - x[0]];
    let mut x = [seed_a, seed_b];
    for _ in 0..60 {
        let g0 = g(x);
        if g0[0].norm() + g0[1].norm() < 1e-15 {
            break;
        }
        // The Jacobian by forward differences is plenty for a simple root.
        let h = 1e-7;
        let ga = g([x[0] + h, x[1]]);
        let gb = g([x[0], x[1] + h]);
        let j = [[(ga[0] - g0[0]) / h, (gb[0] - g0[0]) / h], [(ga[1] - g0[1]) / h, (gb[1] - g0[1]) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        x[0] -= (j[1][1] * g0[0] - j[0][1] * g0[1]) / det;
        x[1] -= (j[0][0] * g0[1] - j[1][0] * g0[0]) / det;
    }
    let (a, b) = (x[0], x[1]);
    let res = g(x);
    if !(res[0].norm() < 1e-12 && res[1].norm() < 1e-12) {
        return Err(HarnessError::Domain("capture cubic: Newton did not converge from the seed".into()));
    }
    let poly = SchemaPolynomial::new(
        MappingSchema::trivial(3),
        vec![vec![b, -3.0 * a * a, C::new(0.0, 0.0), C::new(1.0, 0.0)]],
    )
    .map_err(HarnessError::domain)?;
    Ok((poly, a, b))
}

/// Centers of exact period `p` in the quadratic family: roots of
/// `Q_c^p(0)` with the roots of lower periods removed.
pub fn quadratic_centers(p: usize) -> Vec<C> {
    // Q_c^p(0) as a polynomial in c: z_1 = c, z_{k+1} = z_k² + c.
    let mut z = vec![C::new(0.0, 0.0), C::new(1.0, 0.0)];
    for _ in 1..p {
        let mut sq = vec![C::new(0.0, 0.0); 2 * z.len() - 1];
        for (i, a) in z.iter().enumerate() {
            for (j, b) in z.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq[1] += 1.0;
        z = sq;
    }
    let mut roots: Vec<C> = poly_roots(&z)
        .into_iter()
        .map(|c| polish_center(c, p))
        .filter(|&c| (1..p).filter(|k| p.is_multiple_of(*k)).all(|k| orbit(c, k).norm() > 1e-8))
        .collect();
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite roots"));
    roots.dedup_by(|a, b| (*a - *b).norm() < 1e-9);
    roots
}

fn orbit(c: C, k: usize) -> C {
    (0..k).fold(C::new(0.0, 0.0), |z, _| z * z + c)
}

fn polish_center(mut c: C, p: usize) -> C {
    for _ in 0..8 {
        let (mut z, mut dz) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
        for _ in 0..p {
            dz = 2.0 * z * dz + 1.0;
            z = z * z + c;
        }
        if dz.norm() == 0.0 {
            break;
        }
        c -= z / dz;
    }
    c
}

/// The quadratic center whose rational lamination restricted to the
/// cached classes of `lam` is `lam`, among centers of the critical gap's
/// period.
pub fn quadratic_center(lam: &RationalLamination) -> Result<SchemaPolynomial> {
    use straitlab::dynamics::{landing_relation, partition_agrees};
    if lam.schema().len() != 1 || lam.schema().delta(0) != 2 {
        return Err(HarnessError::Domain("only quadratic laminations are realized as centers".into()));
    }
    let gaps = lam.critical_gaps().map_err(HarnessError::domain)?;
    let p = gaps.first().map(|g| g.period).ok_or_else(|| HarnessError::Domain("no critical gap".into()))?;
    let sample: Vec<straitlab::SchemaAngle> = lam
        .classes()
        .iter()
        .flat_map(|k| k.angles.iter().map(|a| straitlab::SchemaAngle::new(k.vertex, a.clone())))
        .collect();
    let mut hits = Vec::new();
    for c in quadratic_centers(p) {
        let f = SchemaPolynomial::quadratic(c);
        let Ok(partition) = landing_relation(&f, &sample, &straitlab::RayOptions::default()) else {
            continue;
        };
        if partition_agrees(&partition, lam).unwrap_or(false) && partition.len() == lam.classes().len() {
            hits.push(f);
        }
    }
    match hits.len() {
        1 => Ok(hits.pop().expect("one hit")),
        0 => Err(HarnessError::Domain(format!("no center of period {p} realizes the lamination"))),
        n => Err(HarnessError::Domain(format!("{n} centers of period {p} realize the lamination"))),
    }
}
