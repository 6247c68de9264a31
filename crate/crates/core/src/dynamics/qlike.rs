//! Numerical search for quadratic-like restrictions `f^p : V' → V`.
//!
//! `V` runs through round disks about the center guess. `V'` is the
//! component of `f^{-p}(V)` containing the center, rasterized on a grid and
//! flood filled. A pair is accepted when `V'` is compactly inside `V`,
//! simply connected, and `f^p` has exactly two preimages of the center in it.

use std::collections::VecDeque;

use super::{finite, DynamicsError, SchemaPolynomial};
use crate::scalar::{Real, C};
use crate::schema::Vertex;

#[derive(Debug, Clone, PartialEq)]
pub struct QlikeOptions<T> {
    pub radii: Vec<T>,
    /// Grid points per side of the bounding square of `V`.
    pub grid: usize,
    /// Required gap between `V'` and `∂V`, relative to the radius.
    pub margin: T,
}

impl<T: Real> Default for QlikeOptions<T> {
    fn default() -> Self {
        let radii = (0..=20).map(|k| T::lit(0.05 * 1.25f64.powi(k))).collect();
        QlikeOptions { radii, grid: 241, margin: T::lit(0.02) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLike<T> {
    pub vertex: Vertex,
    pub period: usize,
    pub center: C<T>,
    /// Radius of `V`.
    pub radius: T,
    /// Largest distance from the center to a point of `V'`.
    pub inner_radius: T,
    /// `log(radius / inner_radius) / 2π`, a lower bound for `mod(V ∖ V')`.
    pub modulus_bound: T,
    pub degree: usize,
    /// The critical point of `f^p` inside `V'`.
    pub critical_point: C<T>,
}

pub fn quadratic_like_restriction<T: Real>(
    f: &SchemaPolynomial<T>,
    v: Vertex,
    period: usize,
    center: C<T>,
    opts: &QlikeOptions<T>,
) -> Result<QuadraticLike<T>, DynamicsError> {
    if period == 0 || f.schema().sigma_iter(v, period) != v {
        return Err(DynamicsError::NotReturning { vertex: f.schema().name(v).to_string(), period });
    }
    for &r in &opts.radii {
        if let Some(found) = attempt(f, v, period, center, r, opts) {
            return Ok(found);
        }
    }
    Err(DynamicsError::NoRestriction)
}

fn attempt<T: Real>(
    f: &SchemaPolynomial<T>,
    v: Vertex,
    p: usize,
    center: C<T>,
    r: T,
    opts: &QlikeOptions<T>,
) -> Option<QuadraticLike<T>> {
    let n = opts.grid | 1;
    let h = T::lit(2.0) * r / T::lit((n - 1) as f64);
    let at = |i: usize, j: usize| center + C::new(-r + h * T::lit(i as f64), -r + h * T::lit(j as f64));
    let in_preimage = |z: C<T>| {
        let w = f.jet(v, z, p).z;
        finite(w) && (w - center).norm() < r
    };
    let mid = n / 2;
    if !in_preimage(center) {
        return None;
    }
    // Flood fill V' from the center.
    let mut inside = vec![false; n * n];
    let mut queue = VecDeque::from([(mid, mid)]);
    inside[mid * n + mid] = true;
    let limit = r * (T::one() - opts.margin);
    let mut rho = T::zero();
    while let Some((i, j)) = queue.pop_front() {
        let z = at(i, j);
        let d = (z - center).norm();
        if d + h > limit || i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            return None;
        }
        rho = rho.max(d + h);
        for (a, b) in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
            if !inside[a * n + b] && in_preimage(at(a, b)) {
                inside[a * n + b] = true;
                queue.push_back((a, b));
            }
        }
    }
    // Simple connectivity: the complement is reachable from the border.
    let mut outside = vec![false; n * n];
    let mut queue = VecDeque::new();
    for k in 0..n {
        for (a, b) in [(0, k), (n - 1, k), (k, 0), (k, n - 1)] {
            if !inside[a * n + b] && !outside[a * n + b] {
                outside[a * n + b] = true;
                queue.push_back((a, b));
            }
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        let next = [(i.wrapping_add(1), j), (i.wrapping_sub(1), j), (i, j.wrapping_add(1)), (i, j.wrapping_sub(1))];
        for (a, b) in next {
            if a < n && b < n && !inside[a * n + b] && !outside[a * n + b] {
                outside[a * n + b] = true;
                queue.push_back((a, b));
            }
        }
    }
    if (0..n * n).any(|k| !inside[k] && !outside[k]) {
        return None;
    }
    // Degree: solutions of f^p(z) = center lying in V', with multiplicity.
    let roots: Vec<C<T>> = f
        .preimages(v, p, center)
        .into_iter()
        .filter(|&z| nearest(center, r, h, n, z).is_some_and(|(a, b)| inside[a * n + b]))
        .collect();
    if roots.len() != 2 {
        return None;
    }
    let critical_point = critical_in(f, v, p, center, &roots)?;
    Some(QuadraticLike {
        vertex: v,
        period: p,
        center,
        radius: r,
        inner_radius: rho,
        modulus_bound: (r / rho).ln() / T::TAU(),
        degree: roots.len(),
        critical_point,
    })
}

fn nearest<T: Real>(center: C<T>, r: T, h: T, n: usize, z: C<T>) -> Option<(usize, usize)> {
    let i = ((z.re - center.re + r) / h).round().to_usize()?;
    let j = ((z.im - center.im + r) / h).round().to_usize()?;
    (i < n && j < n).then_some((i, j))
}

/// The critical point of `f^p` between two preimages: Newton on the
/// derivative from their midpoint.
fn critical_in<T: Real>(f: &SchemaPolynomial<T>, v: Vertex, p: usize, _center: C<T>, roots: &[C<T>]) -> Option<C<T>> {
    let mut z = (roots[0] + roots[1]) * T::lit(0.5);
    for _ in 0..100 {
        let j = f.jet(v, z, p);
        if j.d2.norm() == T::zero() {
            break;
        }
        let step = j.d1 / j.d2;
        z = z - step;
        if step.norm() < T::lit(1e-15) {
            break;
        }
    }
    finite(z).then_some(z)
}
