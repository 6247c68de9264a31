//! Multiplier mismatch between a renormalizable polynomial and its
//! straightening.
//!
//! `f` is renormalizable at the gap `w` of its context lamination `λ0`; the
//! straightened lamination at `w` is realized as a quadratic center `P`. A
//! repelling periodic point `α` on the small filled Julia set corresponds to
//! `ψ(α) ∈ J(P)` through internal angles. A hybrid conjugacy `ψ` sends
//! `|α − w| ≈ a^{-k}` to `|ψ(α) − ψ(w)| ≈ b^{-k}`, so it is Hölder with
//! exponent `log b / log a` at `α` and the moduli `a`, `b` of the
//! multipliers need not agree.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;
use straitlab::dynamics::{
    landing_relation, periodic_points, quadratic_like_restriction, PeriodicOptions, QlikeOptions,
};
use straitlab::parabolic::holder_exponent;
use straitlab::{
    Angle, MappingSchema, RationalLamination, RayOptions, SchemaAngle, SchemaPolynomial, TuningContext, Vertex,
};

use crate::fixtures::{quadratic_center, MismatchFixture};
use crate::implosion::binary_period;
use crate::landing::{landing, landing_with_image, Method};
use crate::output::{self, ser_c, ser_f64, ser_opt_f64};
use crate::{ExperimentConfig, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchVerdict {
    /// `|log a − log b|` exceeds three times the combined error estimate.
    Mismatch,
    Equal,
}

/// A certified repelling periodic point.
#[derive(Debug, Clone, Serialize)]
pub struct Certified {
    #[serde(serialize_with = "ser_c")]
    pub point: C,
    pub period: usize,
    #[serde(serialize_with = "ser_c")]
    pub multiplier: C,
    #[serde(serialize_with = "ser_f64")]
    pub modulus: f64,
    /// Bound on the error of `modulus`.
    #[serde(serialize_with = "ser_f64")]
    pub error: f64,
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Restriction {
    #[serde(serialize_with = "ser_c")]
    pub center: C,
    #[serde(serialize_with = "ser_f64")]
    pub radius: f64,
    #[serde(serialize_with = "ser_f64")]
    pub inner_radius: f64,
    #[serde(serialize_with = "ser_f64")]
    pub modulus_bound: f64,
    pub degree: usize,
    #[serde(serialize_with = "ser_c")]
    pub critical_point: C,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub k: usize,
    /// Angle in the straightened plane.
    pub t: Angle,
    /// `α_w^{-1}(t)`, the corresponding angle of `f`.
    pub s: Angle,
    #[serde(serialize_with = "ser_c")]
    pub z_f: C,
    #[serde(serialize_with = "ser_c")]
    pub z_p: C,
    pub method_f: Method,
    pub method_p: Method,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fit {
    #[serde(serialize_with = "ser_f64")]
    pub exponent: f64,
    #[serde(serialize_with = "ser_f64")]
    pub intercept: f64,
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
    #[serde(serialize_with = "ser_f64")]
    pub span_decades: f64,
    pub low_confidence: bool,
    /// `log b / log a`.
    #[serde(serialize_with = "ser_opt_f64")]
    pub predicted: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub relative_gap: Option<f64>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MismatchReport {
    pub fixture: String,
    pub gap: usize,
    /// Return time of the gap under `f`.
    pub ell: usize,
    /// Straightened lamination at the gap, over the degree two schema.
    pub straightened: Vec<Vec<Angle>>,
    #[serde(serialize_with = "ser_c")]
    pub p_constant: C,
    /// Landing angles of `ψ(α)` for `P` and of `α` for `f`.
    pub angles_p: Vec<Angle>,
    pub angles_f: Vec<Angle>,
    pub correspondence: bool,
    pub alpha: Certified,
    pub psi_alpha: Certified,
    /// `a = |mult_f(α)|`, `b = |mult_P(ψ(α))|`.
    #[serde(serialize_with = "ser_f64")]
    pub a: f64,
    #[serde(serialize_with = "ser_f64")]
    pub b: f64,
    pub repelling: bool,
    #[serde(serialize_with = "ser_f64")]
    pub log_gap: f64,
    /// Combined error estimate of `log a − log b`.
    #[serde(serialize_with = "ser_f64")]
    pub log_error: f64,
    pub verdict: MismatchVerdict,
    pub restriction: Restriction,
    pub fit: Fit,
    pub samples: Vec<Sample>,
}

/// The straightened lamination at a fixed degree two gap `w`, over the
/// degree two schema: the forward-closed classes of `lam` on the gap
/// boundary pushed through `α_w`. Only this vertex of `T(λ0)` is needed, and
/// building the whole straightened lamination would also require the
/// first pullback at captured gaps, which level-zero classes do not fix.
fn straighten_at(ctx: &TuningContext, lam: &RationalLamination, w: Vertex) -> Result<RationalLamination> {
    let schema = ctx.child_schema();
    if schema.sigma(w) != w || schema.delta(w) != 2 {
        return Err(HarnessError::Domain(format!(
            "gap {} is not a fixed degree two vertex of the induced schema",
            schema.name(w)
        )));
    }
    if !lam.contains(ctx.base()).map_err(HarnessError::domain)? {
        return Err(HarnessError::Domain("the lamination does not contain the base".into()));
    }
    let v = ctx.induced().gaps[w].vertex;
    let mut gens: Vec<(Vertex, Vec<Angle>)> = Vec::new();
    for c in lam.classes().iter().filter(|c| c.level == 0 && c.vertex == v) {
        let mut vals: Vec<Angle> = c.angles.iter().filter_map(|x| ctx.angles().alpha(w, x).ok()).collect();
        vals.sort();
        vals.dedup();
        if vals.len() >= 2 {
            gens.push((0, vals));
        }
    }
    RationalLamination::build(MappingSchema::trivial(2), gens, lam.depth()).map_err(HarnessError::domain)
}

/// Newton refinement of a periodic point near `seed`, with a bound on the
/// error of its multiplier modulus.
fn certify(f: &SchemaPolynomial, v: Vertex, period: usize, seed: C, margin: f64) -> Result<Certified> {
    let opts = PeriodicOptions { grid: 0, ..PeriodicOptions::default() };
    let (found, _) = periodic_points(f, v, period, &[seed], &opts).map_err(HarnessError::domain)?;
    let p = found
        .into_iter()
        .min_by(|a, b| (a.location - seed).norm().total_cmp(&(b.location - seed).norm()))
        .ok_or_else(|| HarnessError::Domain(format!("no periodic point of period {period} near {seed}")))?;
    if (p.location - seed).norm() > 1e-5 {
        return Err(HarnessError::Domain(format!(
            "periodic refinement moved {seed} to {}, away from the ray landing",
            p.location
        )));
    }
    let jet = f.jet(v, p.location, period);
    let modulus = jet.d1.norm();
    // Newton's error bound for a fixed point of f^p, pushed through (f^p)''.
    let dz = p.residual / (jet.d1 - 1.0).norm();
    let error = jet.d2.norm() * dz + 1e-13 * period as f64 * modulus;
    if modulus < 1.0 + margin {
        return Err(HarnessError::Domain(format!(
            "periodic point {} has multiplier modulus {modulus}, below 1 + {margin}",
            p.location
        )));
    }
    Ok(Certified { point: p.location, period, multiplier: jet.d1, modulus, error, residual: p.residual })
}

/// Landing point shared by all of `angles`, or an error if they split.
fn colanding(f: &SchemaPolynomial, v: Vertex, angles: &[Angle]) -> Result<C> {
    let opts = RayOptions::default();
    let points: Vec<SchemaAngle> = angles.iter().map(|a| SchemaAngle::new(v, a.clone())).collect();
    let groups = landing_relation(f, &points, &opts).map_err(HarnessError::domain)?;
    if groups.len() != 1 {
        return Err(HarnessError::Domain(format!("rays {angles:?} do not co-land: {} landing points", groups.len())));
    }
    landing(f, v, &angles[0], &opts)
}

/// The periodic critical point of `f^ℓ` and the midpoint to its image.
fn restriction(f: &SchemaPolynomial, v: Vertex, ell: usize) -> Result<Restriction> {
    let periodic = f
        .critical_points(v)
        .into_iter()
        .find(|&c| (1..=16).any(|p| f.evaluate(v, c, ell * p).map(|(_, z)| (z - c).norm() < 1e-8).unwrap_or(false)));
    let c = periodic.ok_or_else(|| HarnessError::Domain("no periodic critical point on the gap".into()))?;
    let image = f.evaluate(v, c, ell).map_err(HarnessError::domain)?.1;
    let center = (c + image) / 2.0;
    let q = quadratic_like_restriction(f, v, ell, center, &QlikeOptions::default()).map_err(HarnessError::domain)?;
    Ok(Restriction {
        center,
        radius: q.radius,
        inner_radius: q.inner_radius,
        modulus_bound: q.modulus_bound,
        degree: q.degree,
        critical_point: q.critical_point,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<MismatchReport> {
    let fixture = MismatchFixture::named(&cfg.fixtures.mismatch)?;
    run_fixture(&fixture, cfg)
}

pub fn run_fixture(fixture: &MismatchFixture, cfg: &ExperimentConfig) -> Result<MismatchReport> {
    let tol = &cfg.tolerances;
    let f = fixture.realize()?;
    let base = RationalLamination::from_json(&fixture.base).map_err(HarnessError::domain)?;
    let lam_f = RationalLamination::from_json(&fixture.lamination).map_err(HarnessError::domain)?;
    let ctx = TuningContext::new(Arc::new(base)).map_err(HarnessError::domain)?;
    let w = fixture.gap;
    let induced = ctx.induced();
    if w >= induced.gaps.len() {
        return Err(HarnessError::Usage(format!("gap {w} out of range")));
    }
    let vf = induced.gaps[w].vertex;
    let ell = induced.ell[w];
    let lam_p = straighten_at(&ctx, &lam_f, w)?;
    let p = quadratic_center(&lam_p)?;

    // α: the smallest fixed class of the straightened lamination.
    let (id, class) = lam_p
        .classes()
        .iter()
        .enumerate()
        .filter(|(id, _)| lam_p.class_period(*id) == Some(1))
        .min_by(|a, b| a.1.angles.cmp(&b.1.angles))
        .ok_or_else(|| HarnessError::Domain("the straightened lamination has no fixed class".into()))?;
    let q = lam_p.class_period(id).expect("filtered on the period");
    let angles_p = class.angles.clone();
    let system = ctx.angles();
    let angles_f: Vec<Angle> = angles_p
        .iter()
        .map(|t| system.alpha_inv(w, t))
        .collect::<std::result::Result<_, _>>()
        .map_err(HarnessError::domain)?;
    for (s, t) in angles_f.iter().zip(&angles_p) {
        let back = system.alpha(w, s).map_err(HarnessError::domain)?;
        if !system.on_boundary(w, s) || &back != t {
            return Err(HarnessError::Domain(format!("internal angle {t} does not round trip through {s}")));
        }
    }
    let seed_p = colanding(&p, 0, &angles_p)?;
    let seed_f = colanding(&f, vf, &angles_f)?;
    let psi_alpha = certify(&p, 0, q, seed_p, tol.repelling_margin)?;
    let alpha = certify(&f, vf, ell * q, seed_f, tol.repelling_margin)?;
    let (a, b) = (alpha.modulus, psi_alpha.modulus);
    let log_gap = (a.ln() - b.ln()).abs();
    let log_error = alpha.error / a + psi_alpha.error / b;
    let verdict = if log_gap > 3.0 * log_error { MismatchVerdict::Mismatch } else { MismatchVerdict::Equal };
    let restriction = restriction(&f, vf, ell)?;

    let samples = samples(&f, vf, ell, &p, &ctx, w, &angles_p[0], fixture, cfg)?;
    let pairs: Vec<(C, C)> = samples.iter().map(|s| (s.z_f, s.z_p)).collect();
    let h = holder_exponent(&pairs, (alpha.point, psi_alpha.point), Some((a, b))).map_err(HarnessError::domain)?;
    let fit = Fit {
        exponent: h.exponent,
        intercept: h.intercept,
        residual: h.residual,
        span_decades: h.span_decades,
        low_confidence: h.low_confidence,
        predicted: h.predicted,
        relative_gap: h.relative_gap,
        consistent: h.relative_gap.is_some_and(|g| g <= tol.holder_gap),
    };
    Ok(MismatchReport {
        fixture: fixture.name.clone(),
        gap: w,
        ell,
        straightened: lam_p.classes().iter().map(|c| c.angles.clone()).collect(),
        p_constant: p.coeffs(0)[0],
        angles_p,
        angles_f,
        correspondence: true,
        alpha,
        psi_alpha,
        a,
        b,
        repelling: true,
        log_gap,
        log_error,
        verdict,
        restriction,
        fit,
        samples,
    })
}

/// Landings of `t_k = θ + δ/2^{rk}` for `P` and of `α_w^{-1}(t_k)` for `f`,
/// `r` the period of `θ`. Both rays map onto a fixed ray after `rk` returns.
#[allow(clippy::too_many_arguments)]
fn samples(
    f: &SchemaPolynomial,
    vf: Vertex,
    ell: usize,
    p: &SchemaPolynomial,
    ctx: &TuningContext,
    w: usize,
    theta: &Angle,
    fixture: &MismatchFixture,
    cfg: &ExperimentConfig,
) -> Result<Vec<Sample>> {
    let delta: Angle = fixture.sample_offset.parse().map_err(|e| HarnessError::Usage(format!("sample_offset: {e}")))?;
    let r = binary_period(theta).ok_or_else(|| HarnessError::Domain(format!("{theta} is not periodic")))?;
    let b = &cfg.budgets;
    if r * b.holder_k_max >= 64 {
        return Err(HarnessError::Usage(format!("holder_k_max {} is too deep for period {r}", b.holder_k_max)));
    }
    let opts = RayOptions::default();
    let fs = f.schema();
    let ks: Vec<usize> = (b.holder_k_min..=b.holder_k_max).collect();
    let mut images: HashMap<(bool, SchemaAngle), C> = HashMap::new();
    let mut plan = Vec::new();
    for &k in &ks {
        let t = theta.add(&delta.div_u(1u64 << (r * k)));
        let s = ctx.angles().alpha_inv(w, &t).map_err(HarnessError::domain)?;
        let img_p = SchemaAngle::new(0, t.times_u(1u64 << (r * k)));
        let img_f = fs.step_n(&SchemaAngle::new(vf, s.clone()), ell * r * k);
        for key in [(false, img_p.clone()), (true, img_f.clone())] {
            if let std::collections::hash_map::Entry::Vacant(e) = images.entry(key) {
                let g = if e.key().0 { f } else { p };
                let z = landing(g, e.key().1.vertex, &e.key().1.angle, &opts)?;
                e.insert(z);
            }
        }
        plan.push((k, t, s, images[&(false, img_p)], images[&(true, img_f)]));
    }
    plan.into_par_iter()
        .map(|(k, t, s, ip, if_)| {
            let lp = landing_with_image(p, 0, &t, r * k, ip, &opts)?;
            let lf = landing_with_image(f, vf, &s, ell * r * k, if_, &opts)?;
            Ok(Sample { k, t, s, z_f: lf.point, z_p: lp.point, method_f: lf.method, method_p: lp.method })
        })
        .collect()
}

/// `mismatch.csv` and `mismatch.json`.
pub fn artifacts(cfg: &ExperimentConfig, report: &MismatchReport) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let rows: Vec<Vec<String>> = report
        .samples
        .iter()
        .map(|s| {
            vec![
                s.k.to_string(),
                s.t.to_string(),
                s.s.to_string(),
                output::hex((s.z_f - report.alpha.point).norm()),
                output::hex((s.z_p - report.psi_alpha.point).norm()),
            ]
        })
        .collect();
    Ok(vec![
        ("mismatch.csv", output::csv_bytes(cfg, &["k", "t", "s", "dist_f", "dist_p"], &rows)?),
        ("mismatch.json", output::json_bytes(cfg, report)?),
    ])
}
