//! External and parameter rays by Newton pullback along potential levels.
//!
//! A point of potential `G` on the ray of angle `θ` at `v` is found by
//! solving `f^m(z) = exp(G·D_m)·e^{2πi·D_m θ}` with `m` large enough that
//! the Böttcher coordinate at the image vertex is the identity to working
//! precision. Consecutive levels shrink by `2^{-1/S}` and each solve is
//! seeded with the previous sample.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::{cis, finite, DynamicsError, SchemaPolynomial};
use crate::angles::Angle;
use crate::lamination::{LaminationError, RationalLamination};
use crate::scalar::{Real, C};
use crate::schema::{SchemaAngle, Vertex};

#[derive(Debug, Clone, PartialEq)]
pub struct RayOptions<T> {
    pub target_potential: T,
    pub steps_per_halving: usize,
    pub newton_iters: usize,
    pub land_tol: T,
    pub coland_tol: T,
}

impl<T: Real> Default for RayOptions<T> {
    fn default() -> Self {
        RayOptions {
            target_potential: T::lit(1e-8),
            steps_per_halving: 8,
            newton_iters: 64,
            land_tol: T::lit(1e-8),
            coland_tol: T::lit(1e-6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayStatus<T> {
    Landed { point: C<T>, tolerance: T },
    Unresolved,
    Bifurcated,
}

#[derive(Debug, Clone)]
pub struct RayTrace<T> {
    pub vertex: Vertex,
    pub angle: Angle,
    /// Vertices along the angle's orbit up to its first repetition.
    pub path: Vec<Vertex>,
    pub preperiod: usize,
    pub period: usize,
    pub points: Vec<C<T>>,
    pub potentials: Vec<T>,
    pub final_potential: T,
    pub status: RayStatus<T>,
}

impl<T: Real> RayTrace<T> {
    pub fn landing(&self) -> Option<C<T>> {
        match self.status {
            RayStatus::Landed { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn landing_or_err(&self, schema_name: &str) -> Result<C<T>, DynamicsError> {
        match self.status {
            RayStatus::Landed { point, .. } => Ok(point),
            RayStatus::Unresolved => {
                Err(DynamicsError::Unresolved { vertex: schema_name.to_string(), angle: self.angle.to_string() })
            }
            RayStatus::Bifurcated => {
                Err(DynamicsError::Bifurcated { vertex: schema_name.to_string(), angle: self.angle.to_string() })
            }
        }
    }
}

/// Big enough that `φ(w) = w` to working precision at `|w| = e^{LOG_BIG}`.
fn log_big<T: Real>() -> T {
    T::lit(1e10_f64.ln())
}

struct Tracer<'a, T> {
    f: &'a SchemaPolynomial<T>,
    orbit: Vec<SchemaAngle>,
    pre: usize,
    iters: usize,
}

impl<'a, T: Real> Tracer<'a, T> {
    fn new(f: &'a SchemaPolynomial<T>, v: Vertex, theta: &Angle, iters: usize) -> Self {
        let (orbit, pre) = f.schema().orbit(&SchemaAngle::new(v, theta.clone()));
        Tracer { f, orbit, pre, iters }
    }

    fn period(&self) -> usize {
        self.orbit.len() - self.pre
    }

    fn point(&self, k: usize) -> &SchemaAngle {
        if k < self.orbit.len() {
            &self.orbit[k]
        } else {
            &self.orbit[self.pre + (k - self.pre) % self.period()]
        }
    }

    /// Smallest `m` with `G·D_m ≥ LOG_BIG`, and the target `W`.
    fn target(&self, g: T) -> (usize, C<T>) {
        let lb = log_big::<T>();
        let (mut m, mut deg) = (0usize, T::one());
        while g * deg < lb {
            deg = deg * T::lit(self.f.schema().delta(self.point(m).vertex) as f64);
            m += 1;
        }
        let theta = T::lit(self.point(m).angle.to_f64());
        (m, cis(theta) * (g * deg).exp())
    }

    /// Newton on `f^m(z) = W`. The accepted residual is the size of the
    /// last Newton correction relative to `1 + |z|`, i.e. the backward error
    /// in `z`; the forward residual in `W` is limited by the conditioning of
    /// `f^m` and is not a usable test at small potentials.
    fn solve(&self, seed: C<T>, g: T) -> Option<C<T>> {
        let (m, w) = self.target(g);
        let v = self.orbit[0].vertex;
        let mut z = seed;
        let mut last = T::infinity();
        for _ in 0..self.iters {
            let j = self.f.jet(v, z, m);
            if !finite(j.z) || j.d1.is_zero() {
                return None;
            }
            let dz = (j.z - w) / j.d1;
            z = z - dz;
            if !finite(z) {
                return None;
            }
            let size = dz.norm() / (T::one() + z.norm());
            if size >= last && last <= T::lit(1e-12) {
                break;
            }
            last = size;
            if size <= T::lit(4.0) * T::epsilon() {
                break;
            }
        }
        (last <= T::lit(1e-12)).then_some(z)
    }

    /// Solve at `g`, splitting the step from `g_prev` when Newton fails.
    fn solve_from(&self, seed: C<T>, g_prev: T, g: T, depth: usize, out: &mut Vec<(T, C<T>)>) -> bool {
        if let Some(z) = self.solve(seed, g) {
            out.push((g, z));
            return true;
        }
        if depth == 0 {
            return false;
        }
        let mid = (g_prev * g).sqrt();
        if !self.solve_from(seed, g_prev, mid, depth - 1, out) {
            return false;
        }
        let s = out.last().expect("pushed").1;
        self.solve_from(s, mid, g, depth - 1, out)
    }
}

/// The potential level below which the ray at `v` may hit an escaping
/// critical point somewhere along its forward orbit, or zero when every
/// critical orbit on the chain stays bounded.
fn bifurcation_level<T: Real>(f: &SchemaPolynomial<T>, v: Vertex) -> T {
    let mut worst = T::zero();
    let (mut u, mut deg) = (v, T::one());
    for _ in 0..64 {
        for c in f.critical_points(u) {
            let g = f.potential(u, c, 2000);
            if g > T::zero() && g.is_finite() {
                worst = worst.max(g / deg);
            }
        }
        deg = deg * T::lit(f.schema().delta(u) as f64);
        u = f.schema().sigma(u);
        if deg > T::lit(1e12) {
            break;
        }
    }
    worst
}

pub fn external_ray<T: Real>(
    f: &SchemaPolynomial<T>,
    v: Vertex,
    theta: &Angle,
    opts: &RayOptions<T>,
) -> Result<RayTrace<T>, DynamicsError> {
    f.require_normalized()?;
    if v >= f.schema().len() {
        return Err(DynamicsError::Input(format!("unknown vertex index {v}")));
    }
    let tr = Tracer::new(f, v, theta, opts.newton_iters);
    let mut trace = RayTrace {
        vertex: v,
        angle: theta.clone(),
        path: tr.orbit.iter().map(|p| p.vertex).collect(),
        preperiod: tr.pre,
        period: tr.period(),
        points: Vec::new(),
        potentials: Vec::new(),
        final_potential: T::zero(),
        status: RayStatus::Unresolved,
    };
    let crit = bifurcation_level(f, v);
    let floor = if crit > T::zero() { opts.target_potential.max(crit * T::lit(1.05)) } else { opts.target_potential };
    let ratio = T::lit(0.5).powf(T::one() / T::lit(opts.steps_per_halving.max(1) as f64));
    let mut g = log_big::<T>();
    let mut z = cis(T::lit(theta.to_f64())) * g.exp();
    trace.points.push(z);
    trace.potentials.push(g);
    while g > floor {
        let next = (g * ratio).max(floor);
        let mut out = Vec::new();
        if !tr.solve_from(z, g, next, 12, &mut out) {
            trace.final_potential = g;
            return Ok(trace);
        }
        for (gg, zz) in out {
            trace.potentials.push(gg);
            trace.points.push(zz);
        }
        g = next;
        z = *trace.points.last().expect("nonempty");
    }
    trace.final_potential = g;
    if crit > T::zero() && crit * T::lit(1.05) >= opts.target_potential {
        trace.status = RayStatus::Bifurcated;
        return Ok(trace);
    }
    trace.status = land(f, &tr, &trace, opts);
    Ok(trace)
}

/// Refine the tail onto the (pre)periodic landing point and accept it when
/// the tail approaches it.
fn land<T: Real>(
    f: &SchemaPolynomial<T>,
    tr: &Tracer<'_, T>,
    trace: &RayTrace<T>,
    opts: &RayOptions<T>,
) -> RayStatus<T> {
    let tail = *trace.points.last().expect("nonempty");
    let per = tr.period();
    let periodic_start = tr.point(tr.pre).clone();
    // Seed for the periodic landing point: the tail of the periodic ray.
    let seed = if tr.pre == 0 {
        tail
    } else {
        let sub = RayOptions { target_potential: opts.target_potential, ..opts.clone() };
        match external_ray(f, periodic_start.vertex, &periodic_start.angle, &sub) {
            Ok(t) => match t.status {
                RayStatus::Landed { point, .. } => point,
                _ => return RayStatus::Unresolved,
            },
            Err(_) => return RayStatus::Unresolved,
        }
    };
    let u = periodic_start.vertex;
    let Some((y, dy)) = schroeder_fixed(f, u, per, seed, 200) else {
        return RayStatus::Unresolved;
    };
    let (x, dx) = if tr.pre == 0 {
        (y, dy)
    } else {
        match newton_preimage(f, trace.vertex, tr.pre, y, tail, 200) {
            Some(r) => r,
            None => return RayStatus::Unresolved,
        }
    };
    let mult = f.jet(u, y, per).d1.norm();
    let indifferent = (mult - T::one()).abs() < T::lit(1e-6);
    // Near a repelling landing point one potential halving shrinks the
    // distance by about 2^{-log|μ|/log D}, D the degree of the return.
    let ret_deg = T::lit(f.schema().degree_along(u, per).max(2) as f64);
    let predicted = T::lit(0.5).powf(mult.ln() / ret_deg.ln());
    let n = trace.points.len();
    let k = opts.steps_per_halving.max(1);
    if n <= k + 1 {
        return RayStatus::Unresolved;
    }
    let dist: Vec<T> = trace.points[n - k - 1..].iter().map(|p| (*p - x).norm()).collect();
    // Distances at rounding level carry no shape information.
    let noise = T::lit(64.0) * T::epsilon() * (T::one() + x.norm());
    let monotone = dist.windows(2).all(|w| w[1] <= w[0] + noise);
    let contracting = indifferent || dist[k] <= predicted.sqrt() * dist[0] || dist[0] <= opts.land_tol;
    if !(monotone && contracting) {
        return RayStatus::Unresolved;
    }
    let tolerance = dx.max(dy);
    if tolerance > opts.land_tol {
        return RayStatus::Unresolved;
    }
    RayStatus::Landed { point: x, tolerance }
}

/// Root of `f^p(y) = y` near `seed` by Schröder's iteration, which stays
/// quadratic at multiple roots. Returns the root and the last step size.
pub(crate) fn schroeder_fixed<T: Real>(
    f: &SchemaPolynomial<T>,
    u: Vertex,
    p: usize,
    seed: C<T>,
    iters: usize,
) -> Option<(C<T>, T)> {
    let mut y = seed;
    let mut last = T::infinity();
    for _ in 0..iters {
        let j = f.jet(u, y, p);
        let g = j.z - y;
        let dg = j.d1 - C::one();
        let ddg = j.d2;
        if g.is_zero() {
            return Some((y, T::zero()));
        }
        let den = dg * dg - g * ddg;
        if den.is_zero() || !finite(den) {
            return None;
        }
        let step = g * dg / den;
        y = y - step;
        if !finite(y) {
            return None;
        }
        last = step.norm();
        if last <= T::lit(16.0) * T::epsilon() * (T::one() + y.norm()) {
            break;
        }
    }
    let res = (f.jet(u, y, p).z - y).norm();
    (res <= T::lit(1e-9) * (T::one() + y.norm())).then_some((y, last.max(res)))
}

/// Solve `f^l(x) = y` near `seed`.
pub(crate) fn newton_preimage<T: Real>(
    f: &SchemaPolynomial<T>,
    v: Vertex,
    l: usize,
    y: C<T>,
    seed: C<T>,
    iters: usize,
) -> Option<(C<T>, T)> {
    let mut x = seed;
    let mut last = T::infinity();
    for _ in 0..iters {
        let j = f.jet(v, x, l);
        if j.d1.is_zero() {
            return None;
        }
        let step = (j.z - y) / j.d1;
        x = x - step;
        if !finite(x) {
            return None;
        }
        last = step.norm();
        if last <= T::lit(16.0) * T::epsilon() * (T::one() + x.norm()) {
            break;
        }
    }
    let res = (f.jet(v, x, l).z - y).norm();
    (res <= T::lit(1e-9) * (T::one() + y.norm())).then_some((x, last))
}

/// Partition of `angles` by coincidence of landing points within the
/// co-landing tolerance. Classes and their members come out sorted.
pub fn landing_relation<T: Real>(
    f: &SchemaPolynomial<T>,
    angles: &[SchemaAngle],
    opts: &RayOptions<T>,
) -> Result<Vec<Vec<SchemaAngle>>, DynamicsError> {
    let mut angles: Vec<SchemaAngle> = angles.to_vec();
    angles.sort();
    angles.dedup();
    let traces: Vec<Result<RayTrace<T>, DynamicsError>> =
        angles.par_iter().map(|p| external_ray(f, p.vertex, &p.angle, opts)).collect();
    let mut points = Vec::with_capacity(angles.len());
    for (p, t) in angles.iter().zip(traces) {
        let t = t?;
        points.push(t.landing_or_err(f.schema().name(p.vertex))?);
    }
    let n = angles.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if angles[i].vertex == angles[j].vertex && (points[i] - points[j]).norm() <= opts.coland_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<SchemaAngle>> = Default::default();
    for (i, a) in angles.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(a.clone());
    }
    Ok(groups.into_values().collect())
}

/// Whether a landing partition matches the classes of `lam` restricted to
/// the sampled angles.
pub fn partition_agrees(partition: &[Vec<SchemaAngle>], lam: &RationalLamination) -> Result<bool, LaminationError> {
    let all: Vec<&SchemaAngle> = partition.iter().flatten().collect();
    for group in partition {
        for p in group {
            let class = lam.class_of(p)?;
            let expected: Vec<&SchemaAngle> =
                all.iter().copied().filter(|q| q.vertex == p.vertex && class.contains(&q.angle)).collect();
            if expected.len() != group.len() || !group.iter().all(|q| expected.contains(&q)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A parameter ray of the quadratic family `z² + c`.
#[derive(Debug, Clone)]
pub struct ParameterRay<T> {
    pub angle: Angle,
    pub points: Vec<C<T>>,
    pub potentials: Vec<T>,
    pub c: C<T>,
}

fn param_solve<T: Real>(theta: &Angle, seed: C<T>, g: T, iters: usize) -> Option<C<T>> {
    let lb = log_big::<T>();
    let (mut m, mut deg) = (0usize, T::one());
    while g * deg < lb || m == 0 {
        deg = deg * T::lit(2.0);
        m += 1;
    }
    let w = cis(T::lit(theta.times(&(BigInt::one() << m)).to_f64())) * (g * deg).exp();
    let mut c = seed;
    let mut last = T::infinity();
    for _ in 0..iters {
        // z_0 = c, z_{k+1} = z_k² + c; Φ_M(c) ≈ z_m^{1/2^m}.
        let (mut z, mut dz) = (c, C::<T>::one());
        for _ in 0..m {
            dz = z * dz * T::lit(2.0) + C::one();
            z = z * z + c;
        }
        if !finite(z) || dz.is_zero() {
            return None;
        }
        let step = (z - w) / dz;
        c = c - step;
        if !finite(c) {
            return None;
        }
        let size = step.norm() / (T::one() + c.norm());
        if size >= last && last <= T::lit(1e-12) {
            break;
        }
        last = size;
        if size <= T::lit(4.0) * T::epsilon() {
            break;
        }
    }
    (last <= T::lit(1e-12)).then_some(c)
}

/// Trace the parameter ray of angle `theta` down to `target_potential`.
pub fn parameter_ray<T: Real>(theta: &Angle, opts: &RayOptions<T>) -> Result<ParameterRay<T>, DynamicsError> {
    let ratio = T::lit(0.5).powf(T::one() / T::lit(opts.steps_per_halving.max(1) as f64));
    let mut g = T::lit(1e4_f64.ln());
    let mut c = cis(T::lit(theta.to_f64())) * g.exp();
    let mut ray = ParameterRay { angle: theta.clone(), points: vec![c], potentials: vec![g], c };
    let unresolved = || DynamicsError::Unresolved { vertex: "parameter".into(), angle: theta.to_string() };
    while g > opts.target_potential {
        let next = (g * ratio).max(opts.target_potential);
        // Split the step when Newton wanders.
        let mut stack = vec![next];
        let mut cur_g = g;
        while let Some(target) = stack.pop() {
            match param_solve(theta, c, target, opts.newton_iters) {
                Some(nc) if (nc - c).norm() < T::lit(0.5) * (T::one() + c.norm()) => {
                    c = nc;
                    cur_g = target;
                    ray.points.push(c);
                    ray.potentials.push(target);
                }
                _ => {
                    if stack.len() > 24 || (cur_g - target).abs() < T::epsilon() * cur_g {
                        return Err(unresolved());
                    }
                    stack.push(target);
                    stack.push((cur_g * target).sqrt());
                }
            }
        }
        g = next;
    }
    ray.c = c;
    Ok(ray)
}

/// Newton on `z_{l+p} = z_l` for the critical orbit `z_0 = 0` of `z² + c`,
/// returning the parameter and the final residual `|z_{l+p} − z_l|`.
/// Solutions with preperiod below `l` are rejected.
pub fn misiurewicz_newton<T: Real>(seed: C<T>, preperiod: usize, period: usize, iters: usize) -> Option<(C<T>, T)> {
    let orbit = |c: C<T>| {
        let (mut z, mut dz) = (C::<T>::zero(), C::<T>::zero());
        let (mut zl, mut dzl) = (z, dz);
        for k in 0..preperiod + period {
            if k == preperiod {
                zl = z;
                dzl = dz;
            }
            dz = z * dz * T::lit(2.0) + C::one();
            z = z * z + c;
        }
        if preperiod + period == preperiod {
            zl = z;
            dzl = dz;
        }
        (z - zl, dz - dzl)
    };
    let mut c = seed;
    for _ in 0..iters {
        let (g, dg) = orbit(c);
        if !finite(g) || dg.is_zero() {
            return None;
        }
        let step = g / dg;
        c = c - step;
        if step.norm() <= T::lit(16.0) * T::epsilon() * (T::one() + c.norm()) {
            break;
        }
    }
    let (g, _) = orbit(c);
    if !finite(g) {
        return None;
    }
    // Reject solutions whose preperiod is shorter than requested, such as
    // centers where the critical point is itself periodic.
    if preperiod > 0 {
        let mut zs = vec![C::<T>::zero()];
        for _ in 0..preperiod + period {
            let z = *zs.last().expect("nonempty");
            zs.push(z * z + c);
        }
        let gap = (zs[preperiod - 1 + period] - zs[preperiod - 1]).norm();
        if gap <= T::lit(1e-6) * (T::one() + zs[preperiod - 1].norm()) {
            return None;
        }
    }
    Some((c, g.norm()))
}

/// Newton refinement of a parameter-ray endpoint onto the root of a
/// hyperbolic component of period `period`: a parameter where some cycle of
/// period `k | period` has multiplier `e^{2πi r/q}` with `kq = period`.
/// Every such system is tried from `seed` and the nearest converged root is
/// returned with its residual. Satellite roots are solved through the
/// lower-period cycle, where the system is nonsingular.
pub fn parabolic_root_newton<T: Real>(seed: C<T>, period: usize, iters: usize) -> Option<(C<T>, T)> {
    if period == 0 {
        return None;
    }
    let mut best: Option<(C<T>, T)> = None;
    for k in (1..=period).filter(|k| period.is_multiple_of(*k)) {
        let q = period / k;
        let f = SchemaPolynomial::quadratic(seed);
        let Ok((cycle, _)) = super::periodic_points(&f, 0, k, &[], &super::PeriodicOptions::default()) else {
            continue;
        };
        for r in (0..q.max(1)).filter(|r| num_integer::gcd(*r, q) == 1) {
            let target = cis(T::lit(r as f64) / T::lit(q as f64));
            for p in cycle.iter().filter(|p| p.minimal_period == k) {
                let Some(found) = root_system(seed, p.location, k, target, iters) else { continue };
                if best.is_none_or(|b| (found.0 - seed).norm() < (b.0 - seed).norm()) {
                    best = Some(found);
                }
            }
        }
    }
    best
}

/// Newton on `(f_c^k(z) − z, (f_c^k)'(z) − μ)` in the unknowns `(c, z)`.
fn root_system<T: Real>(c0: C<T>, z0: C<T>, k: usize, mu: C<T>, iters: usize) -> Option<(C<T>, T)> {
    // Returns f^k(z), ∂_z, ∂_c, ∂_z², ∂_c∂_z.
    let jet = |c: C<T>, z: C<T>| {
        let (mut w, mut wz, mut wc, mut wzz, mut wcz) =
            (z, C::<T>::one(), C::<T>::zero(), C::<T>::zero(), C::<T>::zero());
        for _ in 0..k {
            let two = T::lit(2.0);
            wcz = (wc * wz + w * wcz) * two;
            wzz = (wz * wz + w * wzz) * two;
            wc = w * wc * two + C::one();
            wz = w * wz * two;
            w = w * w + c;
        }
        (w, wz, wc, wzz, wcz)
    };
    let (mut c, mut z) = (c0, z0);
    for _ in 0..iters {
        let (w, wz, wc, wzz, wcz) = jet(c, z);
        let (f1, f2) = (w - z, wz - mu);
        // Jacobian rows: (∂_c f1, ∂_z f1), (∂_c f2, ∂_z f2).
        let (a, b, cc, d) = (wc, wz - C::one(), wcz, wzz);
        let det = a * d - b * cc;
        if det.is_zero() || !finite(det) {
            return None;
        }
        let dc = (d * f1 - b * f2) / det;
        let dz = (a * f2 - cc * f1) / det;
        c = c - dc;
        z = z - dz;
        if !finite(c) || !finite(z) {
            return None;
        }
        if dc.norm() + dz.norm() <= T::lit(16.0) * T::epsilon() * (T::one() + c.norm() + z.norm()) {
            break;
        }
    }
    let (w, wz, ..) = jet(c, z);
    let residual = (w - z).norm().max((wz - mu).norm());
    (residual <= T::lit(1e-10)).then_some((c, residual))
}
