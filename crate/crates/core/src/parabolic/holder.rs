use super::ParabolicError;
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderFit<T> {
    /// Least-squares slope of `log|ψ(w) − ψ(α)|` against `log|w − α|`.
    pub exponent: T,
    pub intercept: T,
    /// Root-mean-square residual of the fit.
    pub residual: T,
    /// Decades of `|w − α|` covered by the samples.
    pub span_decades: T,
    /// Set when the span is below three decades.
    pub low_confidence: bool,
    /// `log b / log a` when the multiplier moduli were supplied.
    pub predicted: Option<T>,
    /// `|exponent − predicted| / predicted`.
    pub relative_gap: Option<T>,
}

/// Hölder exponent of a conjugacy at `anchor = (α, ψ(α))` from samples
/// `(w, ψ(w))`. `multipliers = (a, b)` are the moduli at `α` and `ψ(α)`.
pub fn holder_exponent<T: Real>(
    samples: &[(C<T>, C<T>)],
    anchor: (C<T>, C<T>),
    multipliers: Option<(T, T)>,
) -> Result<HolderFit<T>, ParabolicError> {
    let pts: Vec<(T, T)> = samples
        .iter()
        .filter_map(|&(w, p)| {
            let dx = (w - anchor.0).norm();
            let dy = (p - anchor.1).norm();
            (dx > T::zero() && dy > T::zero() && dx.is_finite() && dy.is_finite()).then(|| (dx.ln(), dy.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return Err(ParabolicError::Input("need at least three samples away from the anchor".into()));
    }
    let n = T::lit(pts.len() as f64);
    let mx = pts.iter().map(|p| p.0).fold(T::zero(), |a, b| a + b) / n;
    let my = pts.iter().map(|p| p.1).fold(T::zero(), |a, b| a + b) / n;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).fold(T::zero(), |a, b| a + b);
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).fold(T::zero(), |a, b| a + b);
    if sxx == T::zero() {
        return Err(ParabolicError::Input("samples are all at the same distance".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse = pts
        .iter()
        .map(|p| {
            let r = p.1 - intercept - exponent * p.0;
            r * r
        })
        .fold(T::zero(), |a, b| a + b);
    let lo = pts.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let hi = pts.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    let span_decades = (hi - lo) / T::LN_10();
    let predicted = multipliers.map(|(a, b)| b.ln() / a.ln());
    Ok(HolderFit {
        exponent,
        intercept,
        residual: (sse / n).sqrt(),
        span_decades,
        low_confidence: span_decades < T::lit(3.0),
        predicted,
        relative_gap: predicted.map(|p| ((exponent - p) / p).abs()),
    })
}
