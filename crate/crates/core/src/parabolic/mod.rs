//! Fatou coordinates at parabolic and near-parabolic fixed points, Lavaurs
//! maps, and checks of geometric limits `f_n^{k_n} → g`.
//!
//! Everything works in a local coordinate `w` in which the map is
//! `w + w² + O(w³)` (parabolic) or `λw + O(w²)` (perturbed). [`NormalForm`]
//! carries the affine change of coordinates back to the caller's plane.

mod fatou;
mod holder;
mod lavaurs;
mod perturbed;

use thiserror::Error;

use crate::dynamics::SchemaPolynomial;
use crate::scalar::{Real, C};
use crate::schema::Vertex;

pub use fatou::{fatou_attracting, fatou_repelling, FatouCoordinate, GridSample, Kind};
pub use holder::{holder_exponent, HolderFit};
pub use lavaurs::{geometric_limit_check, lavaurs, ConvergenceRow, ConvergenceTable, LavaursMap, Verdict};
pub use perturbed::fatou_perturbed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParabolicError {
    #[error("fixed point has multiplier {re}{im:+}i, not 1")]
    NotParabolic { re: f64, im: f64 },
    #[error("point is not fixed (residual {residual:e})")]
    NotFixed { residual: f64 },
    #[error("second derivative vanishes at the parabolic point")]
    Degenerate,
    #[error("no invariant petal of radius {eps}")]
    EpsTooLarge { eps: f64 },
    #[error("α = {re}{im:+}i is outside the sector |arg α| < π/4")]
    Sector { re: f64, im: f64 },
    #[error("{0}")]
    OutsideDomain(String),
    #[error("coordinates belong to different maps")]
    MapMismatch,
    #[error("sequence {index}: orbit escaped at step {step}")]
    Escape { index: usize, step: usize },
    #[error("{0}")]
    Input(String),
}

/// A polynomial `Σ c_k w^k` in a local coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap<T> {
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> PolyMap<T> {
    pub fn new(coeffs: Vec<C<T>>) -> Self {
        PolyMap { coeffs }
    }

    /// `w + w²`.
    pub fn model() -> Self {
        PolyMap::new(vec![C::new(T::zero(), T::zero()), C::new(T::one(), T::zero()), C::new(T::one(), T::zero())])
    }

    /// `λw + w²` with `λ = e^{2πiα}`.
    pub fn rotation_model(alpha: C<T>) -> Self {
        let lambda = (C::new(T::zero(), T::TAU()) * alpha).exp();
        PolyMap::new(vec![C::new(T::zero(), T::zero()), lambda, C::new(T::one(), T::zero())])
    }

    pub fn eval(&self, w: C<T>) -> C<T> {
        self.coeffs.iter().rev().fold(C::new(T::zero(), T::zero()), |acc, &c| acc * w + c)
    }

    pub fn eval_d(&self, w: C<T>) -> (C<T>, C<T>) {
        let zero = C::new(T::zero(), T::zero());
        let (mut p, mut dp) = (zero, zero);
        for &c in self.coeffs.iter().rev() {
            dp = dp * w + p;
            p = p * w + c;
        }
        (p, dp)
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == T::zero())
    }

    /// The preimage of `w` near `seed` by Newton's method.
    pub fn preimage_near(&self, w: C<T>, seed: C<T>) -> Option<C<T>> {
        let mut u = seed;
        for _ in 0..60 {
            let (p, dp) = self.eval_d(u);
            let step = (p - w) / dp;
            u = u - step;
            if !(u.re.is_finite() && u.im.is_finite()) {
                return None;
            }
            if step.norm() <= T::epsilon() * T::lit(4.0) * (T::one() + u.norm()) {
                return Some(u);
            }
        }
        let (p, _) = self.eval_d(u);
        ((p - w).norm() <= T::lit(1e-13) * (T::one() + w.norm())).then_some(u)
    }
}

/// Local coordinates `w = scale·(z − point)` in which the map is `map`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm<T> {
    pub point: C<T>,
    pub scale: C<T>,
    pub map: PolyMap<T>,
}

impl<T: Real> NormalForm<T> {
    /// A map already given in local coordinates.
    pub fn identity(map: PolyMap<T>) -> Self {
        NormalForm { point: C::new(T::zero(), T::zero()), scale: C::new(T::one(), T::zero()), map }
    }

    /// Conjugates the polynomial `Σ c_k z^k` at its parabolic fixed point
    /// `point` (multiplier 1) to `w + w² + O(w³)`.
    pub fn parabolic(coeffs: &[C<T>], point: C<T>) -> Result<Self, ParabolicError> {
        let mut b = taylor_shift(coeffs, point);
        b.resize(b.len().max(3), C::new(T::zero(), T::zero()));
        let residual = (b[0] - point).norm();
        if residual > T::lit(1e-9) * (T::one() + point.norm()) {
            return Err(ParabolicError::NotFixed { residual: residual.to_f64().unwrap_or(f64::NAN) });
        }
        let one = C::new(T::one(), T::zero());
        if (b[1] - one).norm() > T::lit(1e-8) {
            return Err(ParabolicError::NotParabolic {
                re: b[1].re.to_f64().unwrap_or(f64::NAN),
                im: b[1].im.to_f64().unwrap_or(f64::NAN),
            });
        }
        let a = b[2];
        if a.norm() <= T::lit(1e-12) {
            return Err(ParabolicError::Degenerate);
        }
        // F(w) = a·(P(p + w/a) − p): c_k = b_k·a^{1−k}. The fixed point and
        // multiplier are snapped to their exact values.
        let mut c = Vec::with_capacity(b.len());
        let inv = one / a;
        let mut pow = a;
        for &bk in &b {
            c.push(bk * pow);
            pow = pow * inv;
        }
        c[0] = C::new(T::zero(), T::zero());
        c[1] = one;
        Ok(NormalForm { point, scale: a, map: PolyMap::new(c) })
    }

    /// The normal form of `f^period` on the fiber of `v`.
    pub fn from_schema(f: &SchemaPolynomial<T>, v: Vertex, period: usize, point: C<T>) -> Result<Self, ParabolicError> {
        if period == 0 || f.schema().sigma_iter(v, period) != v {
            return Err(ParabolicError::Input(format!("period {period} does not return to the vertex")));
        }
        let mut acc = vec![C::new(T::zero(), T::zero()), C::new(T::one(), T::zero())];
        let mut u = v;
        for _ in 0..period {
            acc = compose(f.coeffs(u), &acc);
            u = f.schema().sigma(u);
        }
        Self::parabolic(&acc, point)
    }

    pub fn to_local(&self, z: C<T>) -> C<T> {
        (z - self.point) * self.scale
    }

    pub fn to_global(&self, w: C<T>) -> C<T> {
        self.point + w / self.scale
    }

    /// The map in the caller's coordinates.
    pub fn eval_global(&self, z: C<T>) -> C<T> {
        self.to_global(self.map.eval(self.to_local(z)))
    }
}

/// Coefficients of `outer ∘ inner`.
pub(crate) fn compose<T: Real>(outer: &[C<T>], inner: &[C<T>]) -> Vec<C<T>> {
    let zero = C::new(T::zero(), T::zero());
    let mut acc = vec![*outer.last().unwrap_or(&zero)];
    for &c in outer.iter().rev().skip(1) {
        let mut next = vec![zero; acc.len() + inner.len() - 1];
        for (i, &x) in acc.iter().enumerate() {
            for (j, &y) in inner.iter().enumerate() {
                next[i + j] = next[i + j] + x * y;
            }
        }
        next[0] = next[0] + c;
        acc = next;
    }
    acc
}

/// Coefficients of `P(p + u)` in `u`.
fn taylor_shift<T: Real>(coeffs: &[C<T>], p: C<T>) -> Vec<C<T>> {
    compose(coeffs, &[p, C::new(T::one(), T::zero())])
}

pub(crate) fn finite<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
