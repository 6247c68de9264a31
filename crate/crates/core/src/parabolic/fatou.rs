//! Attracting and repelling Fatou coordinates of `F(w) = w + w² + O(w³)`.
//!
//! In the chart `ζ = −1/w` the map is `G(ζ) = ζ + 1 + A/ζ + O(ζ⁻²)` and its
//! Fatou coordinate has the asymptotic expansion
//! `Φ(ζ) = ζ − A log ζ + Σ a_k ζ^{−k}`. The coefficients of `G` are read
//! off samples of `F` on a small circle, so the construction only evaluates
//! the map. A point is pushed along its orbit until `|ζ|` is large, where
//! the truncated expansion is accurate, and the Abel equation carries the
//! value back.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::perturbed::Gate;
use super::{finite, NormalForm, ParabolicError, PolyMap};
use crate::scalar::{Real, C};

/// `|ζ|` beyond which the truncated expansion is used.
const R_EVAL: f64 = 48.0;
/// Terms `a_1 … a_K` of the expansion.
const TERMS: usize = 10;
const MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Attracting,
    Repelling,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Inner<T> {
    Parabolic(Expansion<T>),
    Perturbed(Gate<T>),
}

/// A numerically realized solution of `Φ(f(z)) = Φ(z) + 1`, normalized by
/// `Φ(base) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FatouCoordinate<T> {
    pub kind: Kind,
    pub normal: NormalForm<T>,
    /// Petal radius in local coordinates.
    pub eps: T,
    /// Base point in the caller's coordinates.
    pub base: C<T>,
    pub(crate) offset: C<T>,
    pub(crate) inner: Inner<T>,
}

/// Sampled values for plotting: rows `[Re z, Im z, Re Φ, Im Φ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    pub kind: Kind,
    pub center: [f64; 2],
    pub radius: f64,
    pub points: Vec<[f64; 4]>,
}

pub fn fatou_attracting<T: Real>(
    normal: NormalForm<T>,
    eps: Option<T>,
    base: Option<C<T>>,
) -> Result<FatouCoordinate<T>, ParabolicError> {
    build(normal, Kind::Attracting, eps, base)
}

pub fn fatou_repelling<T: Real>(
    normal: NormalForm<T>,
    eps: Option<T>,
    base: Option<C<T>>,
) -> Result<FatouCoordinate<T>, ParabolicError> {
    build(normal, Kind::Repelling, eps, base)
}

fn build<T: Real>(
    normal: NormalForm<T>,
    kind: Kind,
    eps: Option<T>,
    base: Option<C<T>>,
) -> Result<FatouCoordinate<T>, ParabolicError> {
    let one = C::new(T::one(), T::zero());
    if normal.map.coeffs.len() < 3
        || normal.map.coeffs[0] != C::new(T::zero(), T::zero())
        || normal.map.coeffs[1] != one
    {
        return Err(ParabolicError::Input("local map must be w + w² + O(w³)".into()));
    }
    if (normal.map.coeffs[2] - one).norm() > T::lit(1e-12) {
        return Err(ParabolicError::Input("local map must be normalized to w + w² + O(w³)".into()));
    }
    let eps = petal_radius(&normal.map, kind, eps)?;
    let expansion = Expansion::fit(&normal.map, TERMS);
    let center = if kind == Kind::Attracting { -eps } else { eps };
    let base = base.unwrap_or_else(|| normal.to_global(C::new(center, T::zero())));
    let mut coord = FatouCoordinate {
        kind,
        normal,
        eps,
        base,
        offset: C::new(T::zero(), T::zero()),
        inner: Inner::Parabolic(expansion),
    };
    coord.offset = coord.raw(coord.normal.to_local(base))?;
    Ok(coord)
}

/// The given radius after checking invariance, or the largest of
/// `0.25, 0.125, …` whose petal is invariant.
fn petal_radius<T: Real>(map: &PolyMap<T>, kind: Kind, eps: Option<T>) -> Result<T, ParabolicError> {
    if let Some(e) = eps {
        return if e > T::zero() && petal_invariant(map, kind, e) {
            Ok(e)
        } else {
            Err(ParabolicError::EpsTooLarge { eps: e.to_f64().unwrap_or(f64::NAN) })
        };
    }
    let mut e = T::lit(0.25);
    while e > T::lit(1e-9) {
        if petal_invariant(map, kind, e) {
            return Ok(e);
        }
        e = e * T::lit(0.5);
    }
    Err(ParabolicError::EpsTooLarge { eps: 0.25 })
}

/// `F(D_attr) ⊂ D_attr`, respectively `F^{-1}(D_rep) ⊂ D_rep` for the local
/// inverse, on boundary samples. `D_attr = {|w + ε| < ε}`, `D_rep = {|w − ε| < ε}`.
fn petal_invariant<T: Real>(map: &PolyMap<T>, kind: Kind, eps: T) -> bool {
    let n = 256;
    (0..n).all(|j| {
        let phi = T::TAU() * (T::lit(j as f64) + T::lit(0.5)) / T::lit(n as f64);
        let e = C::from_polar(eps, phi) - C::new(eps, T::zero());
        match kind {
            Kind::Attracting => (map.eval(e) + eps).norm() < eps,
            _ => {
                let w = -e;
                map.preimage_near(w, w * T::lit(2.0) - map.eval(w)).is_some_and(|u| (u - eps).norm() < eps)
            }
        }
    })
}

impl<T: Real> FatouCoordinate<T> {
    pub(crate) fn perturbed(normal: NormalForm<T>, eps: T, base: C<T>, gate: Gate<T>) -> Result<Self, ParabolicError> {
        let mut coord = FatouCoordinate {
            kind: Kind::Perturbed,
            normal,
            eps,
            base,
            offset: C::new(T::zero(), T::zero()),
            inner: Inner::Perturbed(gate),
        };
        coord.offset = coord.raw(coord.normal.to_local(base))?;
        Ok(coord)
    }

    /// The petal as `(center, radius)` in the caller's coordinates.
    pub fn domain(&self) -> (C<T>, T) {
        let center = match (&self.inner, self.kind) {
            (Inner::Perturbed(g), _) => g.attracting_center(self.eps),
            (_, Kind::Attracting) => C::new(-self.eps, T::zero()),
            _ => C::new(self.eps, T::zero()),
        };
        (self.normal.to_global(center), self.eps / self.normal.scale.norm())
    }

    /// The map in the caller's coordinates.
    pub fn map(&self, z: C<T>) -> C<T> {
        self.normal.eval_global(z)
    }

    /// `Φ(z)`. Attracting coordinates extend to the whole parabolic basin,
    /// repelling ones to every point whose backward orbit under the local
    /// inverse reaches the petal.
    pub fn eval(&self, z: C<T>) -> Result<C<T>, ParabolicError> {
        Ok(self.raw(self.normal.to_local(z))? - self.offset)
    }

    /// The same coordinate plus the constant `tau`.
    pub fn translated(&self, tau: C<T>) -> Self {
        let mut out = self.clone();
        out.offset = out.offset - tau;
        out
    }

    fn raw(&self, w: C<T>) -> Result<C<T>, ParabolicError> {
        match &self.inner {
            Inner::Perturbed(g) => g.raw(&self.normal.map, w),
            Inner::Parabolic(exp) => match self.kind {
                Kind::Attracting => attracting_raw(&self.normal.map, exp, w),
                _ => repelling_raw(&self.normal.map, exp, w),
            },
        }
    }

    /// `Ψ = Φ^{-1}` of a repelling coordinate, defined on the whole plane
    /// through `Ψ(W + 1) = f(Ψ(W))`.
    pub fn psi(&self, big_w: C<T>) -> Result<C<T>, ParabolicError> {
        let Inner::Parabolic(exp) = &self.inner else {
            return Err(ParabolicError::Input("Ψ is only exposed for repelling coordinates".into()));
        };
        if self.kind != Kind::Repelling {
            return Err(ParabolicError::Input("Ψ is only exposed for repelling coordinates".into()));
        }
        let raw = big_w + self.offset;
        if !finite(raw) {
            return Err(ParabolicError::OutsideDomain("non-finite argument".into()));
        }
        let margin = T::lit(R_EVAL).max(raw.im.abs() * T::lit(2.0));
        let n = (raw.re + margin).ceil().max(T::zero());
        let steps = n
            .to_usize()
            .filter(|&s| s <= MAX_ITER)
            .ok_or_else(|| ParabolicError::OutsideDomain("argument too far right".into()))?;
        let zeta = exp.invert(raw - n, Kind::Repelling)?;
        let mut w = -C::new(T::one(), T::zero()) / zeta;
        for _ in 0..steps {
            w = self.normal.map.eval(w);
            if !finite(w) {
                return Err(ParabolicError::OutsideDomain("Ψ overflowed".into()));
            }
        }
        Ok(self.normal.to_global(w))
    }

    /// Largest `|Φ(f(z)) − Φ(z) − 1|` over an `n × n` grid clipped to 95% of
    /// the petal, with the number of points used.
    pub fn abel_residual(&self, n: usize) -> Result<(T, usize), ParabolicError> {
        let points = self.grid_points(n, T::lit(0.95));
        let residuals: Result<Vec<T>, ParabolicError> = points
            .par_iter()
            .map(|&z| Ok((self.eval(self.map(z))? - self.eval(z)? - C::new(T::one(), T::zero())).norm()))
            .collect();
        let residuals = residuals?;
        Ok((residuals.iter().copied().fold(T::zero(), T::max), residuals.len()))
    }

    /// Argument-principle test: `Φ` takes its value at the petal center
    /// exactly once inside a circle of 0.9 times the petal radius.
    pub fn winding_check(&self, samples: usize) -> Result<bool, ParabolicError> {
        let (center, r) = self.domain();
        let target = self.eval(center)?;
        let values: Result<Vec<C<T>>, ParabolicError> = (0..=samples)
            .map(|j| {
                let phi = T::TAU() * T::lit(j as f64) / T::lit(samples as f64);
                self.eval(center + C::from_polar(r * T::lit(0.9), phi))
            })
            .collect();
        let values = values?;
        let mut turn = T::zero();
        for pair in values.windows(2) {
            turn = turn + ((pair[1] - target) / (pair[0] - target)).arg();
        }
        Ok(((turn / T::TAU()) - T::one()).abs() < T::lit(1e-6))
    }

    pub fn sample_grid(&self, n: usize) -> Result<GridSample, ParabolicError> {
        let (center, r) = self.domain();
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        let mut points = Vec::new();
        for z in self.grid_points(n, T::lit(0.95)) {
            let v = self.eval(z)?;
            points.push([f(z.re), f(z.im), f(v.re), f(v.im)]);
        }
        Ok(GridSample { kind: self.kind, center: [f(center.re), f(center.im)], radius: f(r), points })
    }

    fn grid_points(&self, n: usize, shrink: T) -> Vec<C<T>> {
        let (center, r) = self.domain();
        let r = r * shrink;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let x = -r + T::lit(2.0) * r * (T::lit(i as f64) + T::lit(0.5)) / T::lit(n as f64);
                let y = -r + T::lit(2.0) * r * (T::lit(j as f64) + T::lit(0.5)) / T::lit(n as f64);
                let d = C::new(x, y);
                if d.norm() < r {
                    out.push(center + d);
                }
            }
        }
        out
    }
}

fn attracting_raw<T: Real>(map: &PolyMap<T>, exp: &Expansion<T>, w: C<T>) -> Result<C<T>, ParabolicError> {
    let mut w = w;
    for n in 0..MAX_ITER {
        let zeta = -C::new(T::one(), T::zero()) / w;
        if !finite(zeta) {
            return Err(ParabolicError::OutsideDomain("the parabolic point itself".into()));
        }
        if zeta.norm() >= T::lit(R_EVAL) && zeta.re >= zeta.im.abs() {
            return Ok(exp.eval(zeta, Kind::Attracting) - T::lit(n as f64));
        }
        w = map.eval(w);
        if !finite(w) || w.norm() > T::lit(1e8) {
            return Err(ParabolicError::OutsideDomain(format!("orbit escaped at step {}", n + 1)));
        }
    }
    Err(ParabolicError::OutsideDomain("orbit did not enter the petal".into()))
}

fn repelling_raw<T: Real>(map: &PolyMap<T>, exp: &Expansion<T>, w: C<T>) -> Result<C<T>, ParabolicError> {
    let mut w = w;
    for n in 0..MAX_ITER {
        let zeta = -C::new(T::one(), T::zero()) / w;
        if !finite(zeta) {
            return Err(ParabolicError::OutsideDomain("the parabolic point itself".into()));
        }
        if zeta.norm() >= T::lit(R_EVAL) && -zeta.re >= zeta.im.abs() {
            return Ok(exp.eval(zeta, Kind::Repelling) + T::lit(n as f64));
        }
        w = map
            .preimage_near(w, w * T::lit(2.0) - map.eval(w))
            .ok_or_else(|| ParabolicError::OutsideDomain(format!("local inverse failed at step {}", n + 1)))?;
    }
    Err(ParabolicError::OutsideDomain("backward orbit did not enter the petal".into()))
}

/// `Φ(ζ) = ζ − A·L(ζ) + Σ a_k ζ^{−k}` with `L = log ζ` on the attracting
/// side and `log(−ζ)` on the repelling side, so both are real on the real
/// axis for real maps.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Expansion<T> {
    pub(crate) log_coeff: C<T>,
    pub(crate) coeffs: Vec<C<T>>,
}

impl<T: Real> Expansion<T> {
    /// Laurent coefficients `g_j` of `G(ζ) − ζ − 1` by the trapezoid rule on
    /// `|ζ| = R`, then `A = g_1` and `a_k` from the Abel equation order by
    /// order.
    pub(crate) fn fit(map: &PolyMap<T>, terms: usize) -> Self {
        let zero = C::new(T::zero(), T::zero());
        let one = C::new(T::one(), T::zero());
        // Radius with |F(w)/w − 1| ≤ 1/2 on |w| = 1/R.
        let samples = 128;
        let mut radius = T::lit(4.0);
        let circle = |r: T, k: usize| C::from_polar(r, T::TAU() * T::lit(k as f64) / T::lit(samples as f64));
        while radius < T::lit(1e6) {
            let ok = (0..samples).all(|k| {
                let w = -one / circle(radius, k);
                (map.eval(w) / w - one).norm() <= T::lit(0.5)
            });
            if ok {
                break;
            }
            radius = radius * T::lit(2.0);
        }
        let m = terms + 2;
        let mut g = vec![zero; m];
        for k in 0..samples {
            let zeta = circle(radius, k);
            let w = -one / zeta;
            let r = -one / map.eval(w) - zeta - one;
            let mut p = zeta;
            for gj in g.iter_mut().skip(1) {
                *gj = *gj + r * p;
                p = p * zeta;
            }
        }
        for gj in g.iter_mut() {
            *gj = *gj / T::lit(samples as f64);
        }
        // S(t) = G/ζ as a series in t = 1/ζ.
        let mut s = vec![zero; m];
        s[0] = one;
        s[1] = one;
        s[2..m].copy_from_slice(&g[1..m - 1]);
        let mut x = s.clone();
        x[0] = zero;
        let mut log_s = vec![zero; m];
        let mut xp = x.clone();
        for p in 1..m {
            let c = T::lit(if p % 2 == 1 { 1.0 } else { -1.0 } / p as f64);
            for i in 0..m {
                log_s[i] = log_s[i] + xp[i] * c;
            }
            xp = series_mul(&xp, &x);
        }
        let s_inv = series_inv(&s);
        let mut powers = vec![s_inv.clone()];
        for _ in 1..terms {
            let next = series_mul(powers.last().expect("nonempty"), &s_inv);
            powers.push(next);
        }
        let a = g[1];
        let mut coeffs = vec![zero; terms];
        for n in 2..=terms + 1 {
            let mut known = g[n] - a * log_s[n];
            for k in 1..n - 1 {
                known = known + coeffs[k - 1] * powers[k - 1][n - k];
            }
            coeffs[n - 2] = known / T::lit((n - 1) as f64);
        }
        Expansion { log_coeff: a, coeffs }
    }

    fn log_term(zeta: C<T>, side: Kind) -> C<T> {
        match side {
            Kind::Attracting => zeta.ln(),
            _ => (-zeta).ln(),
        }
    }

    pub(crate) fn eval(&self, zeta: C<T>, side: Kind) -> C<T> {
        let t = C::new(T::one(), T::zero()) / zeta;
        let tail = self.coeffs.iter().rev().fold(C::new(T::zero(), T::zero()), |acc, &c| (acc + c) * t);
        zeta - self.log_coeff * Self::log_term(zeta, side) + tail
    }

    fn deriv(&self, zeta: C<T>) -> C<T> {
        let t = C::new(T::one(), T::zero()) / zeta;
        let mut d = C::new(T::one(), T::zero()) - self.log_coeff * t;
        let mut p = t * t;
        for (k, &c) in self.coeffs.iter().enumerate() {
            d = d - c * p * T::lit((k + 1) as f64);
            p = p * t;
        }
        d
    }

    /// Solves `Φ(ζ) = s` for `ζ` in the sector of `side`.
    pub(crate) fn invert(&self, s: C<T>, side: Kind) -> Result<C<T>, ParabolicError> {
        let mut zeta = s + self.log_coeff * Self::log_term(s, side);
        for _ in 0..100 {
            let step = (self.eval(zeta, side) - s) / self.deriv(zeta);
            zeta = zeta - step;
            if !finite(zeta) {
                break;
            }
            if step.norm() <= T::epsilon() * T::lit(4.0) * zeta.norm() {
                return Ok(zeta);
            }
        }
        Err(ParabolicError::OutsideDomain("inverse Fatou coordinate did not converge".into()))
    }
}

fn series_mul<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    let m = a.len();
    let mut out = vec![C::new(T::zero(), T::zero()); m];
    for i in 0..m {
        for j in 0..m - i {
            out[i + j] = out[i + j] + a[i] * b[j];
        }
    }
    out
}

/// `1/s` for a series with `s[0] = 1`.
fn series_inv<T: Real>(s: &[C<T>]) -> Vec<C<T>> {
    let m = s.len();
    let mut out = vec![C::new(T::zero(), T::zero()); m];
    out[0] = C::new(T::one(), T::zero()) / s[0];
    for n in 1..m {
        let mut acc = C::new(T::zero(), T::zero());
        for k in 1..=n {
            acc = acc + s[k] * out[n - k];
        }
        out[n] = -acc * out[0];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_of_the_model_map() {
        // w + w² is ζ ↦ ζ²/(ζ − 1) = ζ + 1 + 1/ζ + 1/ζ² + …, so A = 1, and
        // the order-two balance gives a_1 = 1/2.
        let exp = Expansion::<f64>::fit(&PolyMap::model(), 6);
        assert!((exp.log_coeff - C::new(1.0, 0.0)).norm() < 1e-12);
        assert!((exp.coeffs[0] - C::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn truncation_error_is_small_at_the_evaluation_radius() {
        let exp = Expansion::<f64>::fit(&PolyMap::model(), TERMS);
        for zeta in [C::new(R_EVAL, 0.0), C::new(R_EVAL, R_EVAL * 0.9), C::new(2.0 * R_EVAL, -R_EVAL)] {
            let g = zeta * zeta / (zeta - 1.0);
            let r = exp.eval(g, Kind::Attracting) - exp.eval(zeta, Kind::Attracting) - 1.0;
            assert!(r.norm() < 1e-13, "{zeta}: {r}");
        }
    }
}
