//! Portrait regions, their inverse branches, and classes determined by
//! itineraries.
//!
//! The portrait pieces at a vertex cut the circle into `δ(v)` regions, each
//! mapped injectively onto the circle minus the critical values. An angle
//! whose orbit never meets the generating set is equivalent exactly to the
//! angles sharing its itinerary through these regions. Those are found as
//! fixed points of the composed inverse branches, which are piecewise affine
//! with slope `1/D`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::angles::{component_index, sorted_set, Angle};
use crate::schema::{SchemaAngle, Vertex};

use super::{LaminationError, RationalLamination};

fn frac(r: &BigRational) -> BigRational {
    r - r.floor()
}

fn int(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

#[derive(Debug, Clone)]
pub(crate) struct Regions {
    degree: u32,
    pieces: Vec<Vec<Angle>>,
    cuts: Vec<Angle>,
    ids: HashMap<Vec<usize>, usize>,
    /// Per region, its arcs as `(start, length)`.
    arcs: Vec<Vec<(BigRational, BigRational)>>,
}

impl Regions {
    pub fn new(lam: &RationalLamination, v: Vertex) -> Regions {
        let pieces: Vec<Vec<Angle>> = lam.portrait.iter().filter(|p| p.vertex == v).map(|p| p.angles.clone()).collect();
        let cuts = sorted_set(pieces.iter().flatten().cloned());
        let degree = lam.schema.delta(v);
        let mut ids = HashMap::new();
        let mut arcs: Vec<Vec<(BigRational, BigRational)>> = Vec::new();
        if cuts.is_empty() {
            ids.insert(vec![], 0);
            arcs.push(vec![(BigRational::zero(), BigRational::one())]);
        } else {
            let n = cuts.len();
            for i in 0..n {
                let a = &cuts[i];
                let len = a.arc_to(&cuts[(i + 1) % n]);
                let mid = Angle::from_ratio(a.as_ratio() + &len / int(2));
                let sig: Vec<usize> = pieces.iter().map(|p| component_index(p, &mid)).collect();
                let next = ids.len();
                let id = *ids.entry(sig).or_insert(next);
                if id == arcs.len() {
                    arcs.push(Vec::new());
                }
                arcs[id].push((a.as_ratio().clone(), len));
            }
        }
        Regions { degree, pieces, cuts, ids, arcs }
    }

    pub fn count(&self) -> usize {
        self.arcs.len()
    }

    /// Region of `x`, or `None` when `x` is a portrait point.
    pub fn region_of(&self, x: &Angle) -> Option<usize> {
        if self.cuts.binary_search(x).is_ok() {
            return None;
        }
        let sig: Vec<usize> = self.pieces.iter().map(|p| component_index(p, x)).collect();
        self.ids.get(&sig).copied()
    }

    /// Index of the arc of region `r` whose image starts the half-open image
    /// interval containing `x`, with the offset of `x` inside it.
    fn locate(&self, r: usize, x: &BigRational) -> (usize, BigRational) {
        let d = int(self.degree as i64);
        for (i, (a, len)) in self.arcs[r].iter().enumerate() {
            let off = frac(&(x - a * &d));
            if off < len * &d {
                return (i, off);
            }
        }
        unreachable!("region images tile the circle")
    }

    /// The preimage of `x` inside region `r`.
    pub fn branch(&self, r: usize, x: &Angle) -> Angle {
        let (i, off) = self.locate(r, x.as_ratio());
        let a = &self.arcs[r][i].0;
        Angle::from_ratio(a + off / int(self.degree as i64))
    }

    fn breakpoints(&self, r: usize) -> Vec<BigRational> {
        let d = int(self.degree as i64);
        self.arcs[r].iter().map(|(a, _)| frac(&(a * &d))).collect()
    }
}

/// `x ↦ img + (x − start)·scale` on the lifted interval `[start, start + len)`.
#[derive(Debug, Clone)]
struct Affine {
    start: BigRational,
    len: BigRational,
    img: BigRational,
    scale: BigRational,
}

fn compose(regions: &Regions, r: usize, pieces: Vec<Affine>) -> Vec<Affine> {
    let bps = regions.breakpoints(r);
    let d = int(regions.degree as i64);
    let mut out = Vec::new();
    for p in pieces {
        let lo = p.img.clone();
        let hi = &p.img + &p.len * &p.scale;
        let mut cuts = vec![lo.clone(), hi.clone()];
        let top = hi.ceil().to_integer();
        for b in &bps {
            let mut k = BigInt::zero();
            while k <= top {
                let t = b + BigRational::from_integer(k.clone());
                if lo < t && t < hi {
                    cuts.push(t);
                }
                k += 1;
            }
        }
        cuts.sort();
        cuts.dedup();
        for w in cuts.windows(2) {
            let (u, u2) = (&w[0], &w[1]);
            let (i, off) = regions.locate(r, &frac(u));
            let a = &regions.arcs[r][i].0;
            out.push(Affine {
                start: &p.start + (u - &p.img) / &p.scale,
                len: (u2 - u) / &p.scale,
                img: frac(&(a + off / &d)),
                scale: &p.scale / &d,
            });
        }
    }
    out
}

fn fixed_points(pieces: &[Affine]) -> Vec<Angle> {
    let mut out = Vec::new();
    for p in pieces {
        let dd = BigRational::one() / &p.scale;
        for j in -2..=2 {
            // x = img + (x − start)/D − j  ⇒  x = (D(img − j) − start)/(D − 1)
            let x = (&dd * (&p.img - int(j)) - &p.start) / (&dd - BigRational::one());
            if p.start <= x && x < &p.start + &p.len {
                out.push(Angle::from_ratio(x));
            }
        }
    }
    sorted_set(out)
}

/// Class of `p` among angles sharing its itinerary. `orbit` is the exact
/// orbit of `p` with preperiod `pre`; it must avoid the generating set and
/// the portrait.
pub(crate) fn itinerary_class(
    lam: &RationalLamination,
    p: &SchemaAngle,
    orbit: &[SchemaAngle],
    pre: usize,
) -> Result<Vec<Angle>, LaminationError> {
    let letters: Vec<usize> =
        orbit.iter().map(|q| lam.regions[q.vertex].region_of(&q.angle).expect("orbit avoids the portrait")).collect();
    let q = orbit.len() - pre;
    let mut pieces = vec![Affine {
        start: BigRational::zero(),
        len: BigRational::one(),
        img: BigRational::zero(),
        scale: BigRational::one(),
    }];
    for j in (pre..pre + q).rev() {
        pieces = compose(&lam.regions[orbit[j].vertex], letters[j], pieces);
    }
    let mut out = Vec::new();
    for y in fixed_points(&pieces) {
        let mut x = y;
        for j in (0..pre).rev() {
            x = lam.regions[orbit[j].vertex].branch(letters[j], &x);
        }
        let start = SchemaAngle::new(p.vertex, x.clone());
        let mut cur = start.clone();
        let mut same = true;
        for (j, &l) in letters.iter().enumerate() {
            if lam.in_s(cur.vertex, &cur.angle) || lam.regions[cur.vertex].region_of(&cur.angle) != Some(l) {
                same = false;
                break;
            }
            debug_assert_eq!(cur.vertex, orbit[j].vertex);
            cur = lam.schema.step(&cur);
        }
        if same {
            out.push(x);
        }
    }
    let out = sorted_set(out);
    if out.binary_search(&p.angle).is_err() {
        return Err(LaminationError::Inconsistent(format!("itinerary of {} does not reproduce the angle", p.angle)));
    }
    Ok(out)
}
