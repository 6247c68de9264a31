use super::rays::schroeder_fixed;
use super::{DynamicsError, SchemaPolynomial};
use crate::scalar::{Real, C};
use crate::schema::Vertex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    Indifferent,
    Repelling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicPoint<T> {
    pub vertex: Vertex,
    pub location: C<T>,
    /// The requested period, in skew-product steps.
    pub period: usize,
    /// The least `k` dividing `period` with `f^k(x) = x`.
    pub minimal_period: usize,
    /// `(f^period)'(x)`.
    pub multiplier: C<T>,
    pub stability: Stability,
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOptions<T> {
    /// Seeds on an `n × n` grid over the escape disk, in addition to the
    /// caller's seeds.
    pub grid: usize,
    pub iters: usize,
    pub dedup_tol: T,
    pub residual_tol: T,
    pub indifference_tol: T,
}

impl<T: Real> Default for PeriodicOptions<T> {
    fn default() -> Self {
        PeriodicOptions {
            grid: 24,
            iters: 200,
            dedup_tol: T::lit(1e-7),
            residual_tol: T::lit(1e-10),
            indifference_tol: T::lit(1e-9),
        }
    }
}

/// Solutions of `f^p(v, z) = (v, z)` reached from the seeds, deduplicated,
/// with their multipliers. Seeds whose iteration diverges are counted in the
/// second component.
pub fn periodic_points<T: Real>(
    f: &SchemaPolynomial<T>,
    v: Vertex,
    period: usize,
    seeds: &[C<T>],
    opts: &PeriodicOptions<T>,
) -> Result<(Vec<PeriodicPoint<T>>, usize), DynamicsError> {
    if period == 0 {
        return Err(DynamicsError::Input("period must be positive".into()));
    }
    if f.schema().sigma_iter(v, period) != v {
        return Err(DynamicsError::NotReturning { vertex: f.schema().name(v).to_string(), period });
    }
    let r = f.chain_escape_radius(v);
    let mut all: Vec<C<T>> = seeds.to_vec();
    let n = opts.grid;
    for i in 0..n {
        for j in 0..n {
            let x = -r + T::lit(2.0) * r * (T::lit(i as f64) + T::lit(0.5)) / T::lit(n as f64);
            let y = -r + T::lit(2.0) * r * (T::lit(j as f64) + T::lit(0.5)) / T::lit(n as f64);
            all.push(C::new(x, y));
        }
    }
    let mut found: Vec<PeriodicPoint<T>> = Vec::new();
    let mut failures = 0;
    for seed in all {
        let Some((z, _)) = schroeder_fixed(f, v, period, seed, opts.iters) else {
            failures += 1;
            continue;
        };
        let residual = (f.jet(v, z, period).z - z).norm();
        if residual > opts.residual_tol {
            failures += 1;
            continue;
        }
        if found.iter().any(|p| (p.location - z).norm() <= opts.dedup_tol) {
            continue;
        }
        found.push(classify(f, v, z, period, residual, opts));
    }
    found.sort_by(|a, b| {
        (a.location.re, a.location.im).partial_cmp(&(b.location.re, b.location.im)).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok((found, failures))
}

fn classify<T: Real>(
    f: &SchemaPolynomial<T>,
    v: Vertex,
    z: C<T>,
    period: usize,
    residual: T,
    opts: &PeriodicOptions<T>,
) -> PeriodicPoint<T> {
    let multiplier = f.jet(v, z, period).d1;
    let minimal_period = (1..=period)
        .filter(|k| period.is_multiple_of(*k) && f.schema().sigma_iter(v, *k) == v)
        .find(|&k| (f.jet(v, z, k).z - z).norm() <= T::lit(1e3) * opts.residual_tol.max(residual))
        .unwrap_or(period);
    let m = multiplier.norm();
    let stability = if m < T::one() - opts.indifference_tol {
        Stability::Attracting
    } else if m > T::one() + opts.indifference_tol {
        Stability::Repelling
    } else {
        Stability::Indifferent
    };
    PeriodicPoint { vertex: v, location: z, period, minimal_period, multiplier, stability, residual }
}

/// The multiplier of `f^p` at `z` by the chain rule, with the period in
/// skew-product steps.
pub fn multiplier<T: Real>(f: &SchemaPolynomial<T>, v: Vertex, z: C<T>, period: usize) -> C<T> {
    f.jet(v, z, period).d1
}

/// Steps of the ambient map covering `n` steps of an induced schema whose
/// vertex `w` returns after `ell[w]` steps: `Σ_{k<n} ℓ_{σ^k(w)}`.
pub fn weighted_period(schema: &crate::schema::MappingSchema, ell: &[usize], w: Vertex, n: usize) -> usize {
    (0..n).map(|k| ell[schema.sigma_iter(w, k)]).sum()
}
