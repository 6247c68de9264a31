use serde::{Deserialize, Serialize};

use super::fatou::{FatouCoordinate, Kind};
use super::{finite, ParabolicError};
use crate::scalar::{Real, C};

/// `g_c = Ψ_rep ∘ (Φ_attr + c)`, defined on the parabolic basin.
#[derive(Debug, Clone, PartialEq)]
pub struct LavaursMap<T> {
    pub attracting: FatouCoordinate<T>,
    pub repelling: FatouCoordinate<T>,
    pub phase: C<T>,
}

pub fn lavaurs<T: Real>(
    attracting: FatouCoordinate<T>,
    repelling: FatouCoordinate<T>,
    phase: C<T>,
) -> Result<LavaursMap<T>, ParabolicError> {
    if attracting.kind != Kind::Attracting || repelling.kind != Kind::Repelling {
        return Err(ParabolicError::Input("need an attracting and a repelling coordinate".into()));
    }
    let (a, r) = (&attracting.normal, &repelling.normal);
    if a.point != r.point || a.scale != r.scale || a.map != r.map {
        return Err(ParabolicError::MapMismatch);
    }
    Ok(LavaursMap { attracting, repelling, phase })
}

impl<T: Real> LavaursMap<T> {
    pub fn eval(&self, z: C<T>) -> Result<C<T>, ParabolicError> {
        self.repelling.psi(self.attracting.eval(z)? + self.phase)
    }

    pub fn with_phase(&self, phase: C<T>) -> Self {
        LavaursMap { phase, ..self.clone() }
    }

    /// The base map in the caller's coordinates.
    pub fn map(&self, z: C<T>) -> C<T> {
        self.attracting.map(z)
    }

    /// Largest `|g(f(z)) − f(g(z))|` over the points.
    pub fn commutation_residual(&self, points: &[C<T>]) -> Result<T, ParabolicError> {
        let mut worst = T::zero();
        for &z in points {
            let d = (self.eval(self.map(z))? - self.map(self.eval(z)?)).norm();
            worst = worst.max(d);
        }
        Ok(worst)
    }

    /// `g'(z)` by a central difference with step `h`.
    pub fn derivative(&self, z: C<T>, h: T) -> Result<C<T>, ParabolicError> {
        let hc = C::new(h, T::zero());
        Ok((self.eval(z + hc)? - self.eval(z - hc)?) / (hc * T::lit(2.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converging,
    NotConverging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow<T> {
    pub index: usize,
    pub k: usize,
    pub sup_distance: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    /// Smallest ratio `d_n / d_{n+1}` between consecutive rows.
    pub min_ratio: T,
    pub verdict: Verdict,
}

/// Relative noise allowed when comparing consecutive distances.
const NOISE: f64 = 1e-9;

/// `max_z |f_n^{k_n}(z) − g(z)|` for each `n`. The verdict is converging
/// when the distances never increase beyond rounding noise and the last one
/// is at most half the first.
pub fn geometric_limit_check<T: Real, F: Fn(C<T>) -> C<T>>(
    maps: &[F],
    ks: &[usize],
    g: &LavaursMap<T>,
    points: &[C<T>],
) -> Result<ConvergenceTable<T>, ParabolicError> {
    if maps.len() != ks.len() || maps.is_empty() || points.is_empty() {
        return Err(ParabolicError::Input("need aligned nonempty sequences and test points".into()));
    }
    let targets: Result<Vec<C<T>>, ParabolicError> = points.iter().map(|&z| g.eval(z)).collect();
    let targets = targets?;
    let mut rows = Vec::with_capacity(maps.len());
    for (index, (f, &k)) in maps.iter().zip(ks).enumerate() {
        let mut sup = T::zero();
        for (&z, &t) in points.iter().zip(&targets) {
            let mut w = z;
            for step in 0..k {
                w = f(w);
                if !finite(w) || w.norm() > T::lit(1e8) {
                    return Err(ParabolicError::Escape { index, step: step + 1 });
                }
            }
            sup = sup.max((w - t).norm());
        }
        rows.push(ConvergenceRow { index, k, sup_distance: sup });
    }
    let min_ratio = rows.windows(2).map(|p| p[0].sup_distance / p[1].sup_distance).fold(T::infinity(), T::min);
    let monotone = rows.windows(2).all(|p| p[1].sup_distance <= p[0].sup_distance * (T::one() + T::lit(NOISE)));
    let first = rows[0].sup_distance;
    let last = rows[rows.len() - 1].sup_distance;
    let verdict = if rows.len() > 1 && monotone && last <= first * T::lit(0.5) {
        Verdict::Converging
    } else {
        Verdict::NotConverging
    };
    Ok(ConvergenceTable { rows, min_ratio, verdict })
}
