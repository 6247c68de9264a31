//! Ray landings for rays whose image ray has already landed.
//!
//! Rays with a long preperiod approach their landing point more slowly
//! than the tracer's acceptance test expects. When the tracer gives up, the
//! landing point is still determined by the image: it is the preimage of the
//! image's landing point that the traced ray is heading for, provided the
//! ray's tail is clearly closer to it than to any other preimage.

use num_complex::Complex64 as C;
use serde::Serialize;
use straitlab::dynamics::external_ray;
use straitlab::{Angle, RayOptions, SchemaAngle, SchemaPolynomial, Vertex};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// The tracer certified the landing itself.
    Ray,
    /// The tail of the traced ray picked one preimage of the image landing.
    Pullback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landing {
    pub point: C,
    pub method: Method,
}

/// How much closer the tail must be to the chosen preimage than to the next.
const SEPARATION: f64 = 4.0;

/// Landing of `R_f(v, θ)` given that `f^steps` maps it to the landing point
/// `image` of the image ray.
///
/// Rays along the forward orbit of `θ` are traced until one lands; the
/// landing point is then pulled back one step at a time, each step choosing
/// among `deg` preimages by the tail of that step's ray.
pub fn landing_with_image(
    f: &SchemaPolynomial,
    v: Vertex,
    theta: &Angle,
    steps: usize,
    image: C,
    opts: &RayOptions,
) -> Result<Landing> {
    let schema = f.schema();
    let mut p = SchemaAngle::new(v, theta.clone());
    let mut tails = Vec::new();
    let mut landed = None;
    for j in 0..steps {
        let trace = external_ray(f, p.vertex, &p.angle, opts).map_err(HarnessError::domain)?;
        if let Some(point) = trace.landing() {
            landed = Some((j, point));
            break;
        }
        let tail = *trace.points.last().expect("a trace starts with one point");
        tails.push((p.vertex, tail, trace.final_potential));
        p = schema.step(&p);
    }
    let (j0, mut z) = landed.unwrap_or((steps, image));
    let pushed = f.evaluate(schema.sigma_iter(v, j0), z, steps - j0).map_err(HarnessError::domain)?.1;
    if (pushed - image).norm() > 1e-6 * (1.0 + image.norm()) {
        return Err(HarnessError::Domain(format!(
            "ray {theta} lands at {z} after {j0} steps, which maps to {pushed} instead of {image}"
        )));
    }
    for &(u, tail, potential) in tails.iter().rev() {
        let mut candidates = f.preimages(u, 1, z);
        candidates.sort_by(|a, b| (a - tail).norm().total_cmp(&(b - tail).norm()));
        let nearest = candidates[0];
        if candidates.len() > 1 && SEPARATION * (nearest - tail).norm() > (candidates[1] - tail).norm() {
            return Err(HarnessError::Domain(format!(
                "ray {theta} did not land and a tail at potential {potential} does not single out a preimage"
            )));
        }
        z = nearest;
    }
    let method = if j0 == 0 { Method::Ray } else { Method::Pullback };
    Ok(Landing { point: z, method })
}

/// Landing of a ray the tracer must resolve on its own.
pub fn landing(f: &SchemaPolynomial, v: Vertex, theta: &Angle, opts: &RayOptions) -> Result<C> {
    let trace = external_ray(f, v, theta, opts).map_err(HarnessError::domain)?;
    trace.landing_or_err(f.schema().name(v)).map_err(HarnessError::domain)
}
