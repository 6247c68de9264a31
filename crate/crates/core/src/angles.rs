//! Exact angles on the circle R/Z and the multiplication maps m_d.
//!
//! Angles are rationals kept in lowest terms inside [0, 1). Open arcs are
//! positively oriented; when a boundary convention is needed an arc is read
//! as half-open `[a, b)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AngleError {
    #[error("degree must be at least 2, got {0}")]
    Degree(u32),
    #[error("arc endpoints coincide")]
    DegenerateArc,
    #[error("empty angle set")]
    Empty,
    #[error("sets share the angle {0}; use the weak test")]
    Shared(Angle),
    #[error("cannot parse angle {0:?}")]
    Parse(String),
}

/// A rational point of R/Z in canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Angle(BigRational);

impl Angle {
    pub fn zero() -> Self {
        Angle(BigRational::zero())
    }

    /// Reduces `num/den` modulo 1. Panics if `den` is zero.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Self::from_ratio(BigRational::new(num.into(), den.into()))
    }

    pub fn from_ratio(r: BigRational) -> Self {
        let f = r.clone() - r.floor();
        Angle(f)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        // Ratio::to_f64 handles huge numerators and denominators without overflow.
        self.0.to_f64().unwrap_or(0.0)
    }

    /// `k·θ mod 1` for any nonnegative integer factor.
    pub fn times(&self, k: &BigInt) -> Angle {
        let den = self.0.denom();
        let num = (self.0.numer() * k).mod_floor(den);
        Angle(BigRational::new(num, den.clone()))
    }

    pub fn times_u(&self, k: u64) -> Angle {
        self.times(&BigInt::from(k))
    }

    /// `θ / k` read in [0, 1/k).
    pub fn div_u(&self, k: u64) -> Angle {
        Angle(&self.0 / BigRational::from_integer(BigInt::from(k)))
    }

    pub fn add(&self, other: &Angle) -> Angle {
        Angle::from_ratio(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Angle) -> Angle {
        Angle::from_ratio(&self.0 - &other.0)
    }

    /// Length of the positively oriented arc from `self` to `other`, in [0, 1).
    pub fn arc_to(&self, other: &Angle) -> BigRational {
        Angle::from_ratio(&other.0 - &self.0).0
    }

    /// The `d` preimages of `self` under `m_d`, ascending.
    pub fn preimages(&self, d: u32) -> Vec<Angle> {
        let dd = BigRational::from_integer(BigInt::from(d));
        (0..d).map(|k| Angle((&self.0 + BigRational::from_integer(BigInt::from(k))) / &dd)).collect()
    }

    /// The base-`d` digit of the first step: ⌊d·θ⌋.
    pub fn leading_digit(&self, d: u32) -> u32 {
        let x = &self.0 * BigRational::from_integer(BigInt::from(d));
        x.floor().to_integer().to_u32().unwrap_or(0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Angle {
    type Err = AngleError;

    /// Accepts only the canonical form `num/den`: lowest terms, `0 <= num < den`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AngleError::Parse(s.to_string());
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(n) || !digits(d) {
            return Err(bad());
        }
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() || n >= d || !n.gcd(&d).is_one() {
            return Err(bad());
        }
        if n.is_negative() {
            return Err(bad());
        }
        Ok(Angle(BigRational::new_raw(n, d)))
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses an angle literal, panicking on malformed input. Meant for fixtures.
pub fn ang(s: &str) -> Angle {
    s.parse().unwrap_or_else(|e| panic!("{e}"))
}

/// Parses a list of angle literals into a sorted set.
pub fn angs(list: &[&str]) -> Vec<Angle> {
    sorted_set(list.iter().map(|s| ang(s)))
}

pub fn sorted_set(it: impl IntoIterator<Item = Angle>) -> Vec<Angle> {
    let mut v: Vec<Angle> = it.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

/// Forward orbit of a rational angle, split at the first repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitData {
    pub preperiod: usize,
    pub period: usize,
    pub orbit: Vec<Angle>,
}

impl OrbitData {
    pub fn is_periodic(&self) -> bool {
        self.preperiod == 0
    }

    pub fn cycle(&self) -> &[Angle] {
        &self.orbit[self.preperiod..]
    }
}

fn check_degree(d: u32) -> Result<(), AngleError> {
    if d < 2 {
        Err(AngleError::Degree(d))
    } else {
        Ok(())
    }
}

pub fn multiply_map(theta: &Angle, d: u32) -> Result<Angle, AngleError> {
    check_degree(d)?;
    Ok(theta.times_u(d as u64))
}

pub fn orbit(theta: &Angle, d: u32) -> Result<OrbitData, AngleError> {
    check_degree(d)?;
    // For θ = p/q with q = q1·q2, gcd(q2, d) = 1 and q1 built from primes of d,
    // the orbit is eventually periodic; a map from angle to index finds the split.
    let mut seen = std::collections::HashMap::new();
    let mut orbit = Vec::new();
    let mut x = theta.clone();
    loop {
        if let Some(&i) = seen.get(&x) {
            let period = orbit.len() - i;
            return Ok(OrbitData { preperiod: i, period, orbit });
        }
        seen.insert(x.clone(), orbit.len());
        let next = x.times_u(d as u64);
        orbit.push(x);
        x = next;
    }
}

/// True iff `x` lies in the open positively oriented arc from `a` to `b`.
pub fn cyclic_between(a: &Angle, x: &Angle, b: &Angle) -> Result<bool, AngleError> {
    if a == b {
        return Err(AngleError::DegenerateArc);
    }
    Ok(between(a, x, b))
}

/// `cyclic_between` without the endpoint check; `a == b` reads as the circle minus `a`.
pub fn between(a: &Angle, x: &Angle, b: &Angle) -> bool {
    if a < b {
        a < x && x < b
    } else {
        x > a || x < b
    }
}

/// Half-open membership `x ∈ [a, b)`.
pub fn between_half_open(a: &Angle, x: &Angle, b: &Angle) -> bool {
    x == a || between(a, x, b)
}

/// Index of the component of `R/Z ∖ set` containing `x`. Component `i` is the
/// arc `(set[i], set[i+1])`, the last one wrapping through 0. `set` must be
/// sorted and must not contain `x`.
pub fn component_index(set: &[Angle], x: &Angle) -> usize {
    let k = set.len();
    let p = set.partition_point(|a| a < x);
    (p + k - 1) % k
}

/// Which flavor of unlinkedness to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    /// Disjoint sets whose hulls are disjoint; shared points are an error.
    Strict,
    /// Hulls may touch along shared points.
    Weak,
}

/// True iff `b` lies in one component of `R/Z ∖ a` (and symmetrically in the
/// weak case, after removing shared points).
pub fn unlinked(a: &[Angle], b: &[Angle], mode: Linkage) -> Result<bool, AngleError> {
    if a.is_empty() || b.is_empty() {
        return Err(AngleError::Empty);
    }
    let a = sorted_set(a.iter().cloned());
    let b = sorted_set(b.iter().cloned());
    if mode == Linkage::Strict {
        if let Some(x) = b.iter().find(|x| a.binary_search(x).is_ok()) {
            return Err(AngleError::Shared(x.clone()));
        }
    }
    Ok(weakly_unlinked_sorted(&a, &b))
}

/// Weak unlinkedness on sorted, deduplicated sets.
pub fn weakly_unlinked_sorted(a: &[Angle], b: &[Angle]) -> bool {
    one_side(a, b) && one_side(b, a)
}

fn one_side(a: &[Angle], b: &[Angle]) -> bool {
    let mut comp = None;
    for x in b {
        if a.binary_search(x).is_ok() {
            continue;
        }
        let c = component_index(a, x);
        match comp {
            None => comp = Some(c),
            Some(c0) if c0 != c => return false,
            _ => {}
        }
    }
    true
}

/// Every gap `(θ, θ')` of `R/Z ∖ A` must map to a gap `(dθ, dθ')` of
/// `R/Z ∖ d·A`. When `d·A` is a single point `x`, its one gap is the circle
/// minus `x`, which is also what `(x, x)` denotes.
pub fn consecutive_preserving(a: &[Angle], d: u32) -> Result<bool, AngleError> {
    check_degree(d)?;
    if a.is_empty() {
        return Err(AngleError::Empty);
    }
    let a = sorted_set(a.iter().cloned());
    Ok(consecutive_preserving_by(&a, |x| x.times_u(d as u64)))
}

/// Consecutive preservation for an arbitrary map on a sorted set.
pub fn consecutive_preserving_by(a: &[Angle], f: impl Fn(&Angle) -> Angle) -> bool {
    let img: Vec<Angle> = a.iter().map(&f).collect();
    let set = sorted_set(img.iter().cloned());
    let k = a.len();
    (0..k).all(|i| {
        let (x, y) = (&img[i], &img[(i + 1) % k]);
        if set.len() == 1 {
            return true;
        }
        if x == y {
            return false;
        }
        // (x, y) is a gap iff no image point lies strictly inside it.
        let p = set.binary_search(x).expect("image point");
        &set[(p + 1) % set.len()] == y
    })
}
