//! Parabolic implosion for `Q = z² + 1/4`.
//!
//! The Misiurewicz parameters `c_m` with `Q_m^{m+1}(0) = α(Q_m)` sit at the
//! end of the parameter rays `θ/2^m`, where `θ` is the angle of a ray
//! landing at the repelling 2-cycle point `α(Q)`. As `m → ∞`, `Q_m^m`
//! converges near `1/4` to the Lavaurs map `g_Q` whose phase makes
//! `g_Q(1/4) = α(Q)`.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;
use straitlab::angles::orbit;
use straitlab::dynamics::{
    external_ray, landing_relation, misiurewicz_newton, parameter_ray, periodic_points, PeriodicOptions, Stability,
};
use straitlab::parabolic::{
    fatou_attracting, fatou_repelling, geometric_limit_check, lavaurs, LavaursMap, NormalForm, Verdict,
};
use straitlab::{ang, Angle, RayOptions, SchemaAngle, SchemaPolynomial};

use crate::landing::{landing_with_image, Method};
use crate::output::{self, ser_c, ser_f64};
use crate::{ExperimentConfig, HarnessError, Result};

pub const QUARTER: C = C::new(0.25, 0.0);

/// `Q = z² + 1/4` with its Lavaurs map normalized at `α(Q)`.
#[derive(Debug, Clone)]
pub struct Parabolic {
    pub q: SchemaPolynomial,
    pub theta: Angle,
    pub alpha: C,
    pub lavaurs: LavaursMap<f64>,
    pub chain: Vec<ChainLink>,
    /// Largest phase difference between the deeper half of the chain and
    /// the phase used.
    pub phase_spread: f64,
}

/// `y_k`, the landing point of `R_Q(θ/2^k)`, and the phase it implies.
#[derive(Debug, Clone, Serialize)]
pub struct ChainLink {
    pub k: usize,
    pub angle: Angle,
    #[serde(serialize_with = "ser_c")]
    pub point: C,
    pub method: Method,
    #[serde(serialize_with = "ser_c")]
    pub phase: C,
}

/// Exact binary period of `θ`, or `None` when `θ` is not periodic.
pub fn binary_period(theta: &Angle) -> Option<usize> {
    let o = orbit(theta, 2).ok()?;
    o.is_periodic().then_some(o.period)
}

/// The repelling periodic point of period 2 of `Q` with the largest
/// imaginary part, and the smallest angle landing there.
pub fn alpha_angle(q: &SchemaPolynomial) -> Result<(Angle, C)> {
    let (points, _) = periodic_points(q, 0, 2, &[], &PeriodicOptions::default()).map_err(HarnessError::domain)?;
    let alpha = points
        .iter()
        .filter(|p| p.minimal_period == 2 && p.stability == Stability::Repelling)
        .max_by(|a, b| (a.location.im, a.location.re).partial_cmp(&(b.location.im, b.location.re)).expect("finite"))
        .map(|p| p.location)
        .ok_or_else(|| HarnessError::Domain("Q has no repelling 2-cycle".into()))?;
    let candidates: Vec<SchemaAngle> = ["1/3", "2/3"].iter().map(|s| SchemaAngle::new(0, ang(s))).collect();
    let opts = RayOptions::default();
    let groups = landing_relation(q, &candidates, &opts).map_err(HarnessError::domain)?;
    for group in groups {
        let theta = group[0].angle.clone();
        let point = crate::landing::landing(q, 0, &theta, &opts)?;
        if (point - alpha).norm() < opts.coland_tol {
            return Ok((theta, alpha));
        }
    }
    Err(HarnessError::Domain(format!("no period-2 ray lands at {alpha}")))
}

/// `α` for a caller-chosen angle: the landing point, checked to be a
/// repelling periodic point.
fn alpha_for(q: &SchemaPolynomial, theta: &Angle) -> Result<C> {
    let p = binary_period(theta).ok_or_else(|| HarnessError::Domain(format!("{theta} is not periodic")))?;
    let z = crate::landing::landing(q, 0, theta, &RayOptions::default())?;
    let j = q.jet(0, z, p);
    if (j.z - z).norm() > 1e-9 || j.d1.norm() <= 1.0 {
        return Err(HarnessError::Domain(format!("ray {theta} does not land at a repelling periodic point")));
    }
    Ok(z)
}

impl Parabolic {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let q = SchemaPolynomial::quadratic(QUARTER);
        let (theta, alpha) = match &cfg.fixtures.theta {
            Some(t) => {
                let theta: Angle = t.parse().map_err(|e| HarnessError::Usage(format!("theta: {e}")))?;
                let alpha = alpha_for(&q, &theta)?;
                (theta, alpha)
            }
            None => alpha_angle(&q)?,
        };
        let nf = NormalForm::parabolic(&[QUARTER, C::new(0.0, 0.0), C::new(1.0, 0.0)], C::new(0.5, 0.0))
            .map_err(HarnessError::domain)?;
        let attr = fatou_attracting(nf.clone(), None, None).map_err(HarnessError::domain)?;
        let rep = fatou_repelling(nf, None, None).map_err(HarnessError::domain)?;
        let start = attr.eval(QUARTER).map_err(HarnessError::domain)?;
        let opts = RayOptions::default();
        let mut chain = Vec::new();
        let mut y = alpha;
        for k in 1..=cfg.budgets.phase_depth {
            let angle = theta.div_u(1 << k);
            let l = landing_with_image(&q, 0, &angle, 1, y, &opts)?;
            y = l.point;
            if let Ok(w) = rep.eval(y) {
                chain.push(ChainLink { k, angle, point: y, method: l.method, phase: w + k as f64 - start });
            }
        }
        let last =
            chain.last().ok_or_else(|| HarnessError::Domain("no chain point reached the repelling petal".into()))?;
        let phase = last.phase;
        let half = chain.len() / 2;
        let phase_spread = chain[half..].iter().map(|l| (l.phase - phase).norm()).fold(0.0, f64::max);
        let lavaurs = lavaurs(attr, rep, phase).map_err(HarnessError::domain)?;
        Ok(Parabolic { q, theta, alpha, lavaurs, chain, phase_spread })
    }

    /// Solve `g_Q(y) = target` by Newton from `seed`.
    pub fn lavaurs_preimage(&self, target: C, seed: C) -> Result<C> {
        let mut y = seed;
        for _ in 0..60 {
            let v = self.lavaurs.eval(y).map_err(HarnessError::domain)?;
            let d = self.lavaurs.derivative(y, 1e-6).map_err(HarnessError::domain)?;
            let step = (v - target) / d;
            y -= step;
            if step.norm() < 1e-14 * (1.0 + y.norm()) {
                let r = (self.lavaurs.eval(y).map_err(HarnessError::domain)? - target).norm();
                if r < 1e-9 {
                    return Ok(y);
                }
                break;
            }
        }
        Err(HarnessError::Domain(format!("g_Q(y) = {target} has no solution near {seed}")))
    }
}

/// A certified Misiurewicz parameter.
#[derive(Debug, Clone, Serialize)]
pub struct Misiurewicz {
    pub m: usize,
    pub angle: Angle,
    #[serde(serialize_with = "ser_c")]
    pub c: C,
    /// `|z_{m+1+p} − z_{m+1}|` for the critical orbit.
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
    /// `|Q_m^{m+1}(0) − α(Q_m)|`, `α(Q_m)` the landing point of `R(θ)`.
    #[serde(serialize_with = "ser_f64")]
    pub alpha_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub m: usize,
    pub reason: String,
}

pub fn misiurewicz(theta: &Angle, m: usize, cfg: &ExperimentConfig) -> std::result::Result<Misiurewicz, String> {
    let p = binary_period(theta).ok_or("θ is not periodic")?;
    let angle = theta.div_u(1 << m);
    if binary_period(&angle).is_some() {
        return Err(format!("{angle} is periodic: its parameter ray lands at a parabolic parameter"));
    }
    let tol = &cfg.tolerances;
    let ray = parameter_ray(&angle, &RayOptions { target_potential: tol.parameter_potential, ..RayOptions::default() })
        .map_err(|e| e.to_string())?;
    let (c, residual) =
        misiurewicz_newton(ray.c, m + 1, p, cfg.budgets.newton_iters).ok_or("Misiurewicz Newton failed")?;
    if residual > tol.certificate {
        return Err(format!("certificate residual {residual:e} above {:e}", tol.certificate));
    }
    let qm = SchemaPolynomial::quadratic(c);
    let alpha = crate::landing::landing(&qm, 0, theta, &RayOptions::default()).map_err(|e| e.to_string())?;
    let z = qm.evaluate(0, C::new(0.0, 0.0), m + 1).map_err(|e| e.to_string())?.1;
    let alpha_distance = (z - alpha).norm();
    if alpha_distance > tol.alpha_landing {
        return Err(format!("Q_m^(m+1)(0) misses the landing point of R({theta}) by {alpha_distance:e}"));
    }
    Ok(Misiurewicz { m, angle, c, residual, alpha_distance })
}

/// Certified parameters over the configured range, in order, and the
/// indices that were skipped.
pub fn parameters(theta: &Angle, cfg: &ExperimentConfig) -> (Vec<Misiurewicz>, Vec<Skipped>) {
    let results: Vec<(usize, std::result::Result<Misiurewicz, String>)> =
        (cfg.budgets.m_min..=cfg.budgets.m_max).into_par_iter().map(|m| (m, misiurewicz(theta, m, cfg))).collect();
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for (m, r) in results {
        match r {
            Ok(x) => ok.push(x),
            Err(reason) => skipped.push(Skipped { m, reason }),
        }
    }
    (ok, skipped)
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub n: usize,
    pub k_n: usize,
    #[serde(serialize_with = "ser_f64")]
    pub sup_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImplosionReport {
    pub theta: Angle,
    #[serde(serialize_with = "ser_c")]
    pub alpha: C,
    #[serde(serialize_with = "ser_c")]
    pub phase: C,
    #[serde(serialize_with = "ser_f64")]
    pub phase_spread: f64,
    pub chain: Vec<ChainLink>,
    pub parameters: Vec<Misiurewicz>,
    pub skipped: Vec<Skipped>,
    pub convergence: Vec<Row>,
    /// Smallest `d_n / d_{n+1}`.
    #[serde(serialize_with = "ser_f64")]
    pub min_ratio: f64,
    pub verdict: Verdict,
    /// `g_Q'(1/4)` by a central difference.
    #[serde(serialize_with = "ser_c")]
    pub derivative: C,
    pub derivative_nonzero: bool,
}

pub fn test_points(cfg: &ExperimentConfig) -> Vec<C> {
    let n = cfg.budgets.test_points.max(1);
    (0..n)
        .map(|j| QUARTER + C::from_polar(cfg.budgets.test_radius, std::f64::consts::TAU * j as f64 / n as f64))
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<ImplosionReport> {
    let para = Parabolic::new(cfg)?;
    let (parameters, skipped) = self::parameters(&para.theta, cfg);
    if parameters.is_empty() {
        return Err(HarnessError::Domain("no parameter in the range was certified".into()));
    }
    let maps: Vec<_> = parameters.iter().map(|p| move |z: C| z * z + p.c).collect();
    let ks: Vec<usize> = parameters.iter().map(|p| p.m).collect();
    let table = geometric_limit_check(&maps, &ks, &para.lavaurs, &test_points(cfg)).map_err(HarnessError::domain)?;
    let convergence =
        table.rows.iter().map(|r| Row { n: parameters[r.index].m, k_n: r.k, sup_distance: r.sup_distance }).collect();
    let derivative = para.lavaurs.derivative(QUARTER, 1e-5).map_err(HarnessError::domain)?;
    Ok(ImplosionReport {
        theta: para.theta.clone(),
        alpha: para.alpha,
        phase: para.lavaurs.phase,
        phase_spread: para.phase_spread,
        chain: para.chain.clone(),
        parameters,
        skipped,
        convergence,
        min_ratio: table.min_ratio,
        verdict: table.verdict,
        derivative,
        derivative_nonzero: derivative.norm() > cfg.tolerances.derivative_floor,
    })
}

/// `implosion.csv` and `implosion.json`.
pub fn artifacts(cfg: &ExperimentConfig, report: &ImplosionReport) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let verdict = serde_json::to_value(report.verdict).map_err(HarnessError::domain)?;
    let verdict = verdict.as_str().unwrap_or_default().to_string();
    let rows: Vec<Vec<String>> = report
        .convergence
        .iter()
        .map(|r| vec![r.n.to_string(), r.k_n.to_string(), output::hex(r.sup_distance), verdict.clone()])
        .collect();
    Ok(vec![
        ("implosion.csv", output::csv_bytes(cfg, &["n", "k_n", "sup_distance", "verdict"], &rows)?),
        ("implosion.json", output::json_bytes(cfg, report)?),
    ])
}

/// The landing of `R_Q(θ)` for tests and the CLI.
pub fn quadratic_landing(c: C, theta: &Angle) -> Result<C> {
    let q = SchemaPolynomial::quadratic(c);
    let t = external_ray(&q, 0, theta, &RayOptions::default()).map_err(HarnessError::domain)?;
    t.landing_or_err("pt").map_err(HarnessError::domain)
}
