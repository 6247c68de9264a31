//! Polynomials over mapping schemata and their numerical dynamics.
//!
//! A polynomial over a schema `T` is a family `f_v` of degree `δ(v)`
//! polynomials acting as the skew product `(v, z) ↦ (σ(v), f_v(z))`. The
//! dynamical plane of each vertex carries its own filled Julia set, Green
//! function and external rays; rays at `v` map to rays at `σ(v)` with the
//! angle multiplied by `δ(v)`.

mod periodic;
mod qlike;
mod rays;
mod render;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Real, C};
use crate::schema::{MappingSchema, SchemaError, SchemaJson, Vertex};

pub use periodic::{multiplier, periodic_points, weighted_period, PeriodicOptions, PeriodicPoint, Stability};
pub use qlike::{quadratic_like_restriction, QlikeOptions, QuadraticLike};
pub use rays::{
    external_ray, landing_relation, misiurewicz_newton, parabolic_root_newton, parameter_ray, partition_agrees,
    ParameterRay, RayOptions, RayStatus, RayTrace,
};
pub use render::{render_julia, Image, Viewport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("f_{vertex} needs {expected} coefficients, found {found}")]
    Coefficients { vertex: String, expected: usize, found: usize },
    #[error("f_{vertex} is not monic and centered")]
    NotNormalized { vertex: String },
    #[error("f_{vertex} has a vanishing leading coefficient")]
    Degenerate { vertex: String },
    #[error("orbit left the floating-point range at step {step}")]
    Overflow { step: usize },
    #[error("escape radius {radius} is below the bound {bound}")]
    Radius { radius: f64, bound: f64 },
    #[error("period {period} does not return to vertex {vertex}")]
    NotReturning { vertex: String, period: usize },
    #[error("ray {angle} at {vertex} did not land")]
    Unresolved { vertex: String, angle: String },
    #[error("ray {angle} at {vertex} meets an escaping critical orbit")]
    Bifurcated { vertex: String, angle: String },
    #[error("no quadratic-like restriction at the attempted radii")]
    NoRestriction,
    #[error("{0}")]
    Input(String),
}

/// A polynomial over a schema. `coeffs[v][k]` is the coefficient of `z^k`
/// in `f_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaPolynomial<T> {
    schema: MappingSchema,
    coeffs: Vec<Vec<C<T>>>,
}

/// Escape-time verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Escape<T> {
    /// `|z_n| ≥ R` first at step `n`.
    Escaped { n: usize, modulus: T },
    /// The floating-point orbit repeated exactly, so it is bounded.
    Cycle { n: usize },
    /// Still inside the disk after the whole budget.
    Budget { iterations: usize },
}

impl<T> Escape<T> {
    pub fn escaped(&self) -> bool {
        matches!(self, Escape::Escaped { .. })
    }
}

/// Value and first two derivatives of an iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub vertex: Vertex,
    pub z: C<T>,
    pub d1: C<T>,
    pub d2: C<T>,
}

/// JSON form with decimal `[re, im]` pairs keyed by vertex name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub schema: SchemaJson,
    pub coeffs: std::collections::BTreeMap<String, Vec<[f64; 2]>>,
}

impl<T: Real> SchemaPolynomial<T> {
    /// A monic centered polynomial over `schema`.
    pub fn new(schema: MappingSchema, coeffs: Vec<Vec<C<T>>>) -> Result<Self, DynamicsError> {
        let p = Self::general(schema, coeffs)?;
        for v in p.schema.vertices() {
            if !p.is_normalized_at(v) {
                return Err(DynamicsError::NotNormalized { vertex: p.schema.name(v).to_string() });
            }
        }
        Ok(p)
    }

    /// Any polynomial with the degrees the schema prescribes.
    pub fn general(schema: MappingSchema, coeffs: Vec<Vec<C<T>>>) -> Result<Self, DynamicsError> {
        if coeffs.len() != schema.len() {
            return Err(DynamicsError::Input(format!(
                "{} coefficient lists for {} vertices",
                coeffs.len(),
                schema.len()
            )));
        }
        for v in schema.vertices() {
            let expected = schema.delta(v) as usize + 1;
            if coeffs[v].len() != expected {
                return Err(DynamicsError::Coefficients {
                    vertex: schema.name(v).to_string(),
                    expected,
                    found: coeffs[v].len(),
                });
            }
            if coeffs[v][expected - 1].is_zero() {
                return Err(DynamicsError::Degenerate { vertex: schema.name(v).to_string() });
            }
        }
        Ok(SchemaPolynomial { schema, coeffs })
    }

    /// `z^d + c` on every vertex.
    pub fn unicritical(schema: MappingSchema, constants: &[C<T>]) -> Result<Self, DynamicsError> {
        let coeffs = schema
            .vertices()
            .map(|v| {
                let d = schema.delta(v) as usize;
                let mut c = vec![C::zero(); d + 1];
                c[0] = constants.get(v).copied().unwrap_or_else(C::zero);
                c[d] = C::one();
                c
            })
            .collect();
        Self::new(schema, coeffs)
    }

    /// `z² + c` over the trivial degree two schema.
    pub fn quadratic(c: C<T>) -> Self {
        Self::unicritical(MappingSchema::trivial(2), &[c]).expect("z^2 + c is normalized")
    }

    pub fn schema(&self) -> &MappingSchema {
        &self.schema
    }

    pub fn coeffs(&self, v: Vertex) -> &[C<T>] {
        &self.coeffs[v]
    }

    fn is_normalized_at(&self, v: Vertex) -> bool {
        let c = &self.coeffs[v];
        let d = c.len() - 1;
        c[d] == C::one() && c[d - 1].is_zero()
    }

    pub fn is_normalized(&self) -> bool {
        self.schema.vertices().all(|v| self.is_normalized_at(v))
    }

    pub(crate) fn require_normalized(&self) -> Result<(), DynamicsError> {
        match self.schema.vertices().find(|&v| !self.is_normalized_at(v)) {
            Some(v) => Err(DynamicsError::NotNormalized { vertex: self.schema.name(v).to_string() }),
            None => Ok(()),
        }
    }

    pub fn eval(&self, v: Vertex, z: C<T>) -> C<T> {
        self.coeffs[v].iter().rev().fold(C::zero(), |acc, &c| acc * z + c)
    }

    /// `(f_v(z), f_v'(z), f_v''(z))` by Horner.
    pub fn eval2(&self, v: Vertex, z: C<T>) -> (C<T>, C<T>, C<T>) {
        let (mut p, mut dp, mut ddp) = (C::zero(), C::zero(), C::zero());
        for &c in self.coeffs[v].iter().rev() {
            ddp = ddp * z + dp * T::lit(2.0);
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp, ddp)
    }

    pub fn step(&self, v: Vertex, z: C<T>) -> (Vertex, C<T>) {
        (self.schema.sigma(v), self.eval(v, z))
    }

    /// `f^n(v, z)`, flagging overflow instead of returning infinities.
    pub fn evaluate(&self, v: Vertex, z: C<T>, n: usize) -> Result<(Vertex, C<T>), DynamicsError> {
        let (mut v, mut z) = (v, z);
        for step in 0..n {
            (v, z) = self.step(v, z);
            if !finite(z) {
                return Err(DynamicsError::Overflow { step: step + 1 });
            }
        }
        Ok((v, z))
    }

    /// `f^n` with its first two derivatives along the fiber coordinate.
    pub fn jet(&self, v: Vertex, z: C<T>, n: usize) -> Jet<T> {
        let mut j = Jet { vertex: v, z, d1: C::one(), d2: C::zero() };
        for _ in 0..n {
            let (p, dp, ddp) = self.eval2(j.vertex, j.z);
            j.d2 = ddp * j.d1 * j.d1 + dp * j.d2;
            j.d1 = dp * j.d1;
            j.z = p;
            j.vertex = self.schema.sigma(j.vertex);
        }
        j
    }

    /// `R_v = max(2, 2·max|a_k|)` over the non-leading coefficients, scaled
    /// by the leading one for polynomials that are not monic.
    pub fn escape_radius(&self, v: Vertex) -> T {
        let c = &self.coeffs[v];
        let lead = c[c.len() - 1].norm();
        let m = c[..c.len() - 1].iter().map(|a| a.norm() / lead).fold(T::zero(), T::max);
        let r = T::lit(2.0).max(T::lit(2.0) * m);
        if lead < T::one() {
            r / lead
        } else {
            r
        }
    }

    /// The largest escape radius along the orbit of `v`.
    pub fn chain_escape_radius(&self, v: Vertex) -> T {
        self.vertex_orbit(v).into_iter().map(|u| self.escape_radius(u)).fold(T::zero(), T::max)
    }

    /// Vertices visited from `v`, in order, until the first repetition.
    pub fn vertex_orbit(&self, v: Vertex) -> Vec<Vertex> {
        let mut out = vec![v];
        let mut u = self.schema.sigma(v);
        while !out.contains(&u) {
            out.push(u);
            u = self.schema.sigma(u);
        }
        out
    }

    pub fn escape_classify(&self, v: Vertex, z: C<T>, max_iter: usize, radius: T) -> Result<Escape<T>, DynamicsError> {
        let bound = self.chain_escape_radius(v);
        if radius < bound {
            return Err(DynamicsError::Radius {
                radius: radius.to_f64().unwrap_or(f64::NAN),
                bound: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.escape_unchecked(v, z, max_iter, radius))
    }

    pub(crate) fn escape_unchecked(&self, v: Vertex, z: C<T>, max_iter: usize, radius: T) -> Escape<T> {
        let (mut v, mut z) = (v, z);
        // Brent-style checkpoint for exact float cycles.
        let (mut mark, mut mark_v, mut next_mark) = (z, v, 1usize);
        for n in 0..=max_iter {
            let m = z.norm();
            // NaN counts as escaped.
            if m.partial_cmp(&radius) != Some(std::cmp::Ordering::Less) {
                return Escape::Escaped { n, modulus: m };
            }
            if n == max_iter {
                break;
            }
            (v, z) = self.step(v, z);
            if z == mark && v == mark_v {
                return Escape::Cycle { n: n + 1 };
            }
            if n + 1 == next_mark {
                mark = z;
                mark_v = v;
                next_mark *= 2;
            }
        }
        Escape::Budget { iterations: max_iter }
    }

    /// Green function `G_v(z) = lim log|z_n| / D_n`, zero on the filled Julia
    /// set as far as `max_iter` can tell.
    pub fn potential(&self, v: Vertex, z: C<T>, max_iter: usize) -> T {
        let big = T::lit(1e40);
        let (mut v, mut z, mut deg) = (v, z, T::one());
        for _ in 0..max_iter {
            let m = z.norm();
            if m > big {
                return self.log_boettcher_modulus(v, z) / deg;
            }
            deg = deg * T::lit(self.schema.delta(v) as f64);
            (v, z) = self.step(v, z);
            if !finite(z) {
                return T::infinity();
            }
        }
        T::zero()
    }

    /// `log|φ_v(z)|` for `|z|` beyond the escape radius, through the
    /// telescoping product with principal branches.
    fn log_boettcher_modulus(&self, v: Vertex, z: C<T>) -> T {
        self.boettcher_raw(v, z).map(|(lm, _)| lm).unwrap_or_else(|| z.norm().ln())
    }

    /// `φ_v(z)` for `|z|` at least the chain escape radius. The product
    /// `z·Π (z_{k+1}/z_k^{δ_k})^{1/D_{k+1}}` converges with principal branches
    /// there because each factor is close to the leading coefficient.
    pub fn boettcher(&self, v: Vertex, z: C<T>) -> Option<C<T>> {
        if self.require_normalized().is_err() || z.norm() < self.chain_escape_radius(v) {
            return None;
        }
        let (lm, arg) = self.boettcher_raw(v, z)?;
        Some(C::from_polar(lm.exp(), arg))
    }

    fn boettcher_raw(&self, v: Vertex, z: C<T>) -> Option<(T, T)> {
        let mut lm = z.norm().ln();
        let mut arg = z.arg();
        let (mut v, mut z, mut deg) = (v, z, T::one());
        let huge = T::lit(1e150);
        for _ in 0..200 {
            let d = T::lit(self.schema.delta(v) as f64);
            let next = self.eval(v, z);
            if !finite(next) || next.norm() > huge {
                break;
            }
            let ratio = next / z.powu(self.schema.delta(v));
            deg = deg * d;
            lm = lm + ratio.norm().ln() / deg;
            arg = arg + ratio.arg() / deg;
            let term = ratio.norm().ln().abs() / deg;
            v = self.schema.sigma(v);
            z = next;
            if term < T::epsilon() * T::lit(1e-3) {
                break;
            }
        }
        if !lm.is_finite() {
            return None;
        }
        Some((lm, arg))
    }

    /// Critical points of `f_v`.
    pub fn critical_points(&self, v: Vertex) -> Vec<C<T>> {
        let c = &self.coeffs[v];
        let deriv: Vec<C<T>> = (1..c.len()).map(|k| c[k] * T::lit(k as f64)).collect();
        poly_roots(&deriv)
    }

    /// All `D` solutions of `f^n(v, z) = w` with multiplicity, `D` the degree
    /// along the chain, by root finding one fiber at a time and a final
    /// Newton polish against the composite.
    pub fn preimages(&self, v: Vertex, n: usize, w: C<T>) -> Vec<C<T>> {
        let chain: Vec<Vertex> = (0..n).map(|k| self.schema.sigma_iter(v, k)).collect();
        let mut level = vec![w];
        for &u in chain.iter().rev() {
            let mut next = Vec::with_capacity(level.len() * self.schema.delta(u) as usize);
            for y in level {
                let mut c = self.coeffs[u].clone();
                c[0] = c[0] - y;
                next.extend(poly_roots(&c));
            }
            level = next;
        }
        level.into_iter().map(|z| rays::newton_preimage(self, v, n, w, z, 8).map_or(z, |r| r.0)).collect()
    }

    /// `a·f((z − b)/a) + b` on every fiber.
    pub fn conjugate(&self, a: C<T>, b: C<T>) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                // Horner over polynomials in z: acc ← acc·(z − b)/a + c_k.
                let inv = C::<T>::one() / a;
                let lin = [-b * inv, inv];
                let mut acc: Vec<C<T>> = vec![c[c.len() - 1]];
                for &ck in c.iter().rev().skip(1) {
                    let mut next = vec![C::zero(); acc.len() + 1];
                    for (i, &x) in acc.iter().enumerate() {
                        next[i] = next[i] + x * lin[0];
                        next[i + 1] = next[i + 1] + x * lin[1];
                    }
                    next[0] = next[0] + ck;
                    acc = next;
                }
                let mut out: Vec<C<T>> = acc.into_iter().map(|x| x * a).collect();
                out[0] = out[0] + b;
                out
            })
            .collect();
        SchemaPolynomial { schema: self.schema.clone(), coeffs }
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            schema: self.schema.to_json(),
            coeffs: self
                .schema
                .vertices()
                .map(|v| {
                    let list = self.coeffs[v]
                        .iter()
                        .map(|c| [c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN)])
                        .collect();
                    (self.schema.name(v).to_string(), list)
                })
                .collect(),
        }
    }

    pub fn from_json(raw: &PolynomialJson) -> Result<Self, DynamicsError> {
        let schema = MappingSchema::from_json(&raw.schema)?;
        let mut coeffs = Vec::new();
        for v in schema.vertices() {
            let name = schema.name(v);
            let list =
                raw.coeffs.get(name).ok_or_else(|| DynamicsError::Input(format!("no coefficients for {name}")))?;
            coeffs.push(list.iter().map(|[re, im]| C::new(T::lit(*re), T::lit(*im))).collect());
        }
        if raw.coeffs.len() != schema.len() {
            return Err(DynamicsError::Input("coefficients for unknown vertices".into()));
        }
        Self::new(schema, coeffs)
    }
}

pub(crate) fn finite<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub(crate) fn cis<T: Real>(turns: T) -> C<T> {
    C::from_polar(T::one(), T::TAU() * turns)
}

/// Roots of `Σ c_k z^k` by Aberth iteration; empty for constants.
pub fn poly_roots<T: Real>(c: &[C<T>]) -> Vec<C<T>> {
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<C<T>> = c.iter().map(|&x| x / lead).collect();
    let bound = T::one() + monic[..n].iter().map(|x| x.norm()).fold(T::zero(), T::max);
    let mut z: Vec<C<T>> =
        (0..n).map(|k| C::from_polar(bound, T::TAU() * (T::lit(k as f64) + T::lit(0.4)) / T::lit(n as f64))).collect();
    let eval = |x: C<T>| {
        let (mut p, mut dp): (C<T>, C<T>) = (C::zero(), C::zero());
        for &a in monic.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut moved = T::zero();
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.is_zero() {
                continue;
            }
            let ratio: C<T> = p / dp;
            let mut s: C<T> = C::zero();
            for j in 0..n {
                if j != i {
                    s = s + C::<T>::one() / (z[i] - z[j]);
                }
            }
            let w: C<T> = ratio / (C::<T>::one() - ratio * s);
            z[i] = z[i] - w;
            moved = moved.max(w.norm());
        }
        if moved < T::epsilon() * bound {
            break;
        }
    }
    z
}
