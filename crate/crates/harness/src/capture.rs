//! The capture-schema family `Q̃_{n,m}` over `T_capt,d1+1`.
//!
//! `v1` carries the quadratic `z² + c` and `v2` maps into it by
//! `z^{d1} + y`. Along the family `c = c_m` and `y = y_n(Q_m)`, the landing
//! point of `R_{Q_m}(θ_n/2^m)`; the limits are `Q̃_n` with `c = 1/4`,
//! `y = y_n(Q)` and `Q̃` with `y = 1/4`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;
use straitlab::{Angle, MappingSchema, RayOptions, SchemaPolynomial};

use crate::implosion::{binary_period, parameters, Misiurewicz, Parabolic, Skipped, QUARTER};
use crate::landing::{landing, landing_with_image, Method};
use crate::output::{self, ser_c, ser_f64};
use crate::{ExperimentConfig, HarnessError, Result};

/// `θ_n`: the periodic block `B` of `θ` repeated `n` times followed by the
/// complement of the first digit of `B`, made periodic. `θ_n → θ`.
pub fn theta_n(theta: &Angle, n: usize) -> Result<Angle> {
    let p = binary_period(theta).ok_or_else(|| HarnessError::Domain(format!("{theta} is not periodic")))?;
    let len = n * p + 1;
    if len >= 63 {
        return Err(HarnessError::Usage(format!("θ_{n} has period {len}, above the supported 62")));
    }
    let den = (1u64 << p) - 1;
    // θ = block / (2^p − 1) with the reduced denominator dividing 2^p − 1.
    let (num, q) = (u64::try_from(theta.numer()), u64::try_from(theta.denom()));
    let (Ok(num), Ok(q)) = (num, q) else {
        return Err(HarnessError::Usage(format!("{theta} is too long a fraction for θ_n")));
    };
    let block = num * (den / q);
    let first = block >> (p - 1);
    let num = (0..n).fold(0u64, |acc, _| (acc << p) | block);
    Ok(Angle::new((num << 1) | (1 - first), (1u64 << len) - 1))
}

/// `(v1, z² + c)` and `(v2, z^{d1} + y)`.
pub fn member(d1: u32, c: C, y: C) -> Result<SchemaPolynomial> {
    SchemaPolynomial::unicritical(MappingSchema::capture(d1 + 1), &[c, y]).map_err(HarnessError::domain)
}

/// Coefficients keyed by vertex name, ascending, as hexadecimal `[re, im]`.
#[derive(Debug, Clone, Serialize)]
pub struct Member {
    pub label: String,
    pub coeffs: BTreeMap<String, Vec<[String; 2]>>,
}

impl Member {
    fn new(label: String, f: &SchemaPolynomial) -> Self {
        let coeffs = f
            .schema()
            .vertices()
            .map(|v| {
                let row = f.coeffs(v).iter().map(|c| [output::hex(c.re), output::hex(c.im)]).collect();
                (f.schema().name(v).to_string(), row)
            })
            .collect();
        Member { label, coeffs }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Point {
    pub m: usize,
    #[serde(serialize_with = "ser_c")]
    pub y: C,
    pub method: Method,
    /// `|y_n(Q_m) − y_n(Q)|`.
    #[serde(serialize_with = "ser_f64")]
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sequence {
    pub n: usize,
    pub theta_n: Angle,
    #[serde(serialize_with = "ser_c")]
    pub alpha_n: C,
    /// `y_n(Q)`, solving `g_Q(y) = α_n(Q)`.
    #[serde(serialize_with = "ser_c")]
    pub limit: C,
    pub points: Vec<Point>,
    pub skipped: Vec<Skipped>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaptureReport {
    pub d1: u32,
    pub theta: Angle,
    pub parameters: Vec<Misiurewicz>,
    pub skipped: Vec<Skipped>,
    pub sequences: Vec<Sequence>,
    pub members: Vec<Member>,
}

/// `y_n(Q_m)`, pulled back from `α_n(Q_m)` along `m` steps.
fn y_nm(theta_n: &Angle, p: &Misiurewicz) -> Result<(C, Method)> {
    let q = SchemaPolynomial::quadratic(p.c);
    let opts = RayOptions::default();
    let alpha = landing(&q, 0, theta_n, &opts)?;
    let l = landing_with_image(&q, 0, &theta_n.div_u(1 << p.m), p.m, alpha, &opts)?;
    Ok((l.point, l.method))
}

fn sequence(para: &Parabolic, ps: &[Misiurewicz], n: usize) -> Result<Sequence> {
    let tn = theta_n(&para.theta, n)?;
    let alpha_n = landing(&para.q, 0, &tn, &RayOptions::default())?;
    let limit = para.lavaurs_preimage(alpha_n, QUARTER)?;
    let results: Vec<(usize, Result<(C, Method)>)> = ps.par_iter().map(|p| (p.m, y_nm(&tn, p))).collect();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (m, r) in results {
        match r {
            Ok((y, method)) => points.push(Point { m, y, method, distance: (y - limit).norm() }),
            Err(e) => skipped.push(Skipped { m, reason: e.to_string() }),
        }
    }
    let decreasing = points.windows(2).all(|w| w[1].distance < w[0].distance);
    Ok(Sequence { n, theta_n: tn, alpha_n, limit, points, skipped, decreasing })
}

pub fn run(cfg: &ExperimentConfig) -> Result<CaptureReport> {
    let d1 = cfg.fixtures.d1;
    let para = Parabolic::new(cfg)?;
    let (ps, skipped) = parameters(&para.theta, cfg);
    let sequences: Vec<Sequence> =
        cfg.budgets.n_values.iter().map(|&n| sequence(&para, &ps, n)).collect::<Result<_>>()?;
    let mut members = vec![Member::new("Q~".into(), &member(d1, QUARTER, QUARTER)?)];
    for s in &sequences {
        members.push(Member::new(format!("Q~_{}", s.n), &member(d1, QUARTER, s.limit)?));
        for pt in &s.points {
            let c = ps.iter().find(|p| p.m == pt.m).expect("point from a certified parameter").c;
            members.push(Member::new(format!("Q~_{},{}", s.n, pt.m), &member(d1, c, pt.y)?));
        }
    }
    Ok(CaptureReport { d1, theta: para.theta, parameters: ps, skipped, sequences, members })
}

/// `capture.csv` and `capture.json`.
pub fn artifacts(cfg: &ExperimentConfig, report: &CaptureReport) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let rows: Vec<Vec<String>> = report
        .sequences
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |p| {
                vec![
                    s.n.to_string(),
                    p.m.to_string(),
                    output::hex(p.y.re),
                    output::hex(p.y.im),
                    output::hex(p.distance),
                    s.decreasing.to_string(),
                ]
            })
        })
        .collect();
    Ok(vec![
        ("capture.csv", output::csv_bytes(cfg, &["n", "m", "y_re", "y_im", "distance", "decreasing"], &rows)?),
        ("capture.json", output::json_bytes(cfg, report)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use straitlab::ang;

    #[test]
    fn theta_n_for_one_third() {
        assert_eq!(theta_n(&ang("1/3"), 1).unwrap(), ang("3/7"));
        assert_eq!(theta_n(&ang("1/3"), 2).unwrap(), ang("11/31"));
        assert_eq!(theta_n(&ang("1/3"), 3).unwrap(), ang("43/127"));
        // 2/3 = .(10): block 10, complement of 1 is 0.
        assert_eq!(theta_n(&ang("2/3"), 1).unwrap(), ang("4/7"));
    }
}
