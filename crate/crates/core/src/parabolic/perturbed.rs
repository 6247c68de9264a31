//! Fatou coordinates of `f(w) = λw + O(w²)` with `λ = e^{2πiα}`, `α` small
//! in the sector `|arg α| < π/4`.
//!
//! The fixed points `0` and `x` have multipliers `λ` and `λ_x`, and
//! `F(w) = log w / log λ + log(w − x) / log λ_x` is a Fatou coordinate up to
//! an error that is smallest in the gate between them. Orbits are pushed into
//! the gate, where `F` is averaged with smooth weights that telescope, so the
//! Abel equation holds exactly for the computed function.

use super::fatou::FatouCoordinate;
use super::{finite, NormalForm, ParabolicError, PolyMap};
use crate::scalar::{Real, C};

/// Half-width of the averaging window, in steps.
const WINDOW: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Gate<T> {
    pub(crate) alpha: C<T>,
    /// The second fixed point.
    pub(crate) x: C<T>,
    log0: C<T>,
    logx: C<T>,
}

/// The coordinate on the petal through `0` and `x` on the attracting side.
/// `eps` defaults to the largest of `0.25, 0.125, …` whose boundary, away
/// from the two fixed points, maps into the petal.
pub fn fatou_perturbed<T: Real>(
    map: PolyMap<T>,
    eps: Option<T>,
    base: Option<C<T>>,
) -> Result<FatouCoordinate<T>, ParabolicError> {
    let zero = C::new(T::zero(), T::zero());
    if map.coeffs.len() < 3 || map.coeffs[0] != zero {
        return Err(ParabolicError::Input("local map must fix 0 and have degree at least 2".into()));
    }
    let lambda = map.coeffs[1];
    let log0 = lambda.ln();
    let alpha = log0 / C::new(T::zero(), T::TAU());
    if alpha.norm() == T::zero() || alpha.im.abs() >= alpha.re.abs() || alpha.re <= T::zero() {
        return Err(ParabolicError::Sector {
            re: alpha.re.to_f64().unwrap_or(f64::NAN),
            im: alpha.im.to_f64().unwrap_or(f64::NAN),
        });
    }
    let x = other_fixed_point(&map, -log0)?;
    let logx = map.eval_d(x).1.ln();
    let gate = Gate { alpha, x, log0, logx };
    let eps = match eps {
        Some(e) if gate.petal_ok(&map, e) => e,
        Some(e) => return Err(ParabolicError::EpsTooLarge { eps: e.to_f64().unwrap_or(f64::NAN) }),
        None => {
            let mut e = T::lit(0.25);
            while !gate.petal_ok(&map, e) {
                e = e * T::lit(0.5);
                if e <= x.norm() {
                    return Err(ParabolicError::EpsTooLarge { eps: 0.25 });
                }
            }
            e
        }
    };
    let base = base.unwrap_or_else(|| gate.attracting_center(eps));
    FatouCoordinate::perturbed(NormalForm::identity(map), eps, base, gate)
}

/// Newton on `(f(w) − w)/w = 0` from `seed`.
fn other_fixed_point<T: Real>(map: &PolyMap<T>, seed: C<T>) -> Result<C<T>, ParabolicError> {
    let mut h: Vec<C<T>> = map.coeffs[1..].to_vec();
    h[0] = h[0] - C::new(T::one(), T::zero());
    let hp = PolyMap::new(h);
    let mut z = seed;
    for _ in 0..100 {
        let (v, d) = hp.eval_d(z);
        let step = v / d;
        z = z - step;
        if !finite(z) {
            break;
        }
        if step.norm() <= T::epsilon() * T::lit(4.0) * z.norm() {
            return Ok(z);
        }
    }
    Err(ParabolicError::Input("second fixed point not found".into()))
}

impl<T: Real> Gate<T> {
    /// Center of the radius-`eps` disk whose boundary passes through `0`
    /// and `x`, on the side of negative real part.
    pub(crate) fn attracting_center(&self, eps: T) -> C<T> {
        let half = self.x * T::lit(0.5);
        let h = (eps * eps - half.norm_sqr()).max(T::zero()).sqrt();
        let normal = C::new(T::zero(), T::one()) * self.x / self.x.norm();
        let (a, b) = (half + normal * h, half - normal * h);
        if a.re < b.re {
            a
        } else {
            b
        }
    }

    fn petal_ok(&self, map: &PolyMap<T>, eps: T) -> bool {
        if eps <= self.x.norm() {
            return false;
        }
        let center = self.attracting_center(eps);
        let n = 256;
        let keep_off = self.x.norm() * T::lit(2.0);
        (0..n).all(|j| {
            let z = center + C::from_polar(eps, T::TAU() * T::lit(j as f64) / T::lit(n as f64));
            z.norm() < keep_off || (z - self.x).norm() < keep_off || (map.eval(z) - center).norm() < eps
        })
    }

    /// `Re τ` for the Möbius coordinate `τ = log(w/(x − w)) / log λ`, which
    /// grows by about one per step and vanishes in the middle of the gate.
    fn position(&self, w: C<T>) -> T {
        ((w / (self.x - w)).ln() / self.log0).re
    }

    fn model(&self, w: C<T>) -> C<T> {
        w.ln() / self.log0 + (w - self.x).ln() / self.logx
    }

    pub(crate) fn raw(&self, map: &PolyMap<T>, w: C<T>) -> Result<C<T>, ParabolicError> {
        if !finite(w) || w.norm() == T::zero() || (w - self.x).norm() == T::zero() {
            return Err(ParabolicError::OutsideDomain("a fixed point".into()));
        }
        let cap = (T::lit(100.0) / self.alpha.norm()).to_usize().unwrap_or(usize::MAX).saturating_add(100_000);
        let window = T::lit(WINDOW);
        let mut z = w;
        let mut shift = 0usize;
        while self.position(z) > -window - T::one() {
            z = map
                .preimage_near(z, z * T::lit(2.0) - map.eval(z))
                .filter(|&u| finite(u))
                .ok_or_else(|| ParabolicError::OutsideDomain("local inverse failed".into()))?;
            shift += 1;
            if shift > cap {
                return Err(ParabolicError::OutsideDomain("backward orbit did not leave the gate".into()));
            }
        }
        // Σ_k (ψ(s_k) − ψ(s_{k+1}))·(F(z_k) − k) with ψ a smooth step from 1
        // to 0 across the window.
        let mut sum = C::new(T::zero(), T::zero());
        let mut weight = weight_of(self.position(z), window);
        for k in 0..cap {
            let next = map.eval(z);
            if !finite(next) || next.norm() > T::lit(1e8) {
                return Err(ParabolicError::OutsideDomain(format!("orbit escaped at step {}", k + 1)));
            }
            let next_weight = weight_of(self.position(next), window);
            if weight != next_weight {
                sum = sum + (self.model(z) - T::lit(k as f64)) * (weight - next_weight);
            }
            if next_weight == T::zero() {
                return Ok(sum + T::lit(shift as f64));
            }
            z = next;
            weight = next_weight;
        }
        Err(ParabolicError::OutsideDomain("orbit did not cross the gate".into()))
    }
}

fn weight_of<T: Real>(s: T, window: T) -> T {
    if s <= -window {
        return T::one();
    }
    if s >= window {
        return T::zero();
    }
    let t = (s + window) / (window * T::lit(2.0));
    let smooth = t * t * t * (t * (t * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0));
    T::one() - smooth
}
