//! Internal angle systems on the critical Fatou gaps.
//!
//! For a critical gap `w` the first return `m_T^{ℓ_w}` carries `∂w` onto
//! `∂σ(w)` with degree `δ(w)`. The preimages of the anchor of `σ(w)` cut `∂w`
//! into `δ(w)` sectors; the sector index of each return is one digit of the
//! internal angle, read in the mixed radix given by the degrees along the
//! orbit of `w` in `T(λ)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::angles::{sorted_set, Angle};
use crate::schema::SchemaAngle;

use super::gaps::InducedSchema;
use super::{LaminationError, RationalLamination};

#[derive(Debug, Clone)]
struct Sector {
    entry_pos: BigRational,
    members: Vec<Angle>,
}

#[derive(Debug, Clone)]
struct GapAngles {
    anchor: Angle,
    entry: Angle,
    sectors: Vec<Sector>,
}

#[derive(Debug, Clone)]
pub struct InternalAngleSystem {
    lam: Arc<RationalLamination>,
    induced: InducedSchema,
    data: Vec<GapAngles>,
}

fn int(k: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

impl RationalLamination {
    pub fn internal_angles(self: &Arc<Self>) -> Result<InternalAngleSystem, LaminationError> {
        InternalAngleSystem::new(Arc::clone(self))
    }
}

impl InternalAngleSystem {
    pub fn new(lam: Arc<RationalLamination>) -> Result<Self, LaminationError> {
        let induced = lam.induced_schema()?;
        let n = induced.gaps.len();
        let mut sys = InternalAngleSystem { lam, induced, data: Vec::new() };
        let mut anchors: Vec<Option<Angle>> = vec![None; n];
        let t = sys.induced.schema.clone();
        // Periodic cycles first, each anchored at its first gap.
        for w in 0..n {
            if anchors[w].is_some() || t.period(w).is_none() {
                continue;
            }
            let cycle: Vec<usize> =
                std::iter::successors(Some(w), |&u| Some(t.sigma(u))).take(t.period(w).unwrap()).collect();
            let mut a = sys.fixed_anchor(w, &cycle)?;
            for &u in &cycle {
                anchors[u] = Some(a.clone());
                a = sys.advance(u, &a);
            }
        }
        // Strictly preperiodic gaps, nearest to their cycles first.
        while anchors.iter().any(Option::is_none) {
            let mut progress = false;
            for w in 0..n {
                if anchors[w].is_some() {
                    continue;
                }
                if let Some(next) = anchors[t.sigma(w)].clone() {
                    let pre = sys.preimages_on(w, &next)?;
                    let a = pre.into_iter().min().ok_or_else(|| {
                        LaminationError::Inconsistent(format!("gap w{w} has no preimage of the next anchor"))
                    })?;
                    anchors[w] = Some(a);
                    progress = true;
                }
            }
            if !progress {
                return Err(LaminationError::Inconsistent("anchors do not propagate".into()));
            }
        }
        let anchors: Vec<Angle> = anchors.into_iter().map(Option::unwrap).collect();
        for w in 0..n {
            let anchor = anchors[w].clone();
            let gap = &sys.induced.gaps[w];
            let cls = sys.lam.class_of(&SchemaAngle::new(gap.vertex, anchor.clone()))?;
            let entry = cls
                .iter()
                .find(|x| sys.lam.faces[gap.vertex].face_plus(x) == gap.face)
                .cloned()
                .unwrap_or_else(|| anchor.clone());
            let next = &anchors[t.sigma(w)];
            let mut groups: Vec<Vec<Angle>> = Vec::new();
            for y in sys.preimages_on(w, next)? {
                if groups.iter().any(|g| g.binary_search(&y).is_ok()) {
                    continue;
                }
                groups.push(sys.lam.class_of(&SchemaAngle::new(gap.vertex, y))?);
            }
            if groups.len() != gap.return_degree as usize {
                return Err(LaminationError::Inconsistent(format!(
                    "gap w{w} has {} sector boundaries, expected {}",
                    groups.len(),
                    gap.return_degree
                )));
            }
            let mut sectors: Vec<Sector> = groups
                .into_iter()
                .map(|members| {
                    let entry_pos = members.iter().map(|x| entry.arc_to(x)).min().unwrap();
                    Sector { entry_pos, members }
                })
                .collect();
            sectors.sort_by(|a, b| a.entry_pos.cmp(&b.entry_pos));
            if !sectors[0].entry_pos.is_zero() {
                return Err(LaminationError::Inconsistent(format!("anchor of w{w} does not open a sector")));
            }
            sys.data.push(GapAngles { anchor, entry, sectors });
        }
        Ok(sys)
    }

    pub fn lamination(&self) -> &Arc<RationalLamination> {
        &self.lam
    }

    pub fn induced(&self) -> &InducedSchema {
        &self.induced
    }

    /// The anchor `θ_w`, with `α_w(θ_w) = 0`.
    pub fn anchor(&self, w: usize) -> &Angle {
        &self.data[w].anchor
    }

    fn step_multiplier(&self, w: usize) -> u64 {
        self.lam.schema.degree_along(self.induced.gaps[w].vertex, self.induced.ell[w])
    }

    fn advance(&self, w: usize, x: &Angle) -> Angle {
        x.times_u(self.step_multiplier(w))
    }

    fn touches(&self, w: usize, x: &Angle) -> bool {
        self.lam.touches_gap(&self.induced.gaps[w], x)
    }

    /// Points of `∂w` mapped by the first return into the class of `target`.
    fn preimages_on(&self, w: usize, target: &Angle) -> Result<Vec<Angle>, LaminationError> {
        let t = self.induced.schema.sigma(w);
        let cls = self.lam.class_of(&SchemaAngle::new(self.induced.gaps[t].vertex, target.clone()))?;
        let k = self.step_multiplier(w);
        let pts = cls
            .iter()
            .flat_map(|z| (0..k).map(move |j| Angle::from_ratio((z.as_ratio() + int(j)) / int(k))))
            .filter(|y| self.touches(w, y));
        Ok(sorted_set(pts))
    }

    /// The boundary fixed point of the cycle's return map with the smallest angle.
    fn fixed_anchor(&self, w: usize, cycle: &[usize]) -> Result<Angle, LaminationError> {
        let gap = &self.induced.gaps[w];
        let v = gap.vertex;
        let steps: usize = cycle.iter().map(|&u| self.induced.ell[u]).sum();
        let lam = &self.lam;
        let mut found: Vec<(Angle, Vec<Angle>)> = Vec::new();
        for &c in &gap.boundary_classes {
            let mut cur = Some(c);
            for _ in 0..steps {
                cur = cur.and_then(|i| lam.image_of(i));
            }
            if cur == Some(c) {
                let cls = &lam.class(c).angles;
                let a = cls.iter().find(|x| self.touches(w, x)).expect("boundary class").clone();
                found.push((a, cls.clone()));
            }
        }
        let dm1 = BigRational::from_integer(BigInt::from(lam.schema.degree_along(v, steps) - 1));
        let f = &lam.faces[v];
        let arcs: Vec<(BigRational, BigRational)> = if f.len() == 0 {
            vec![(BigRational::zero(), BigRational::one())]
        } else {
            f.face_arcs[gap.face].iter().map(|&i| (f.points[i].as_ratio().clone(), f.arc_length(i))).collect()
        };
        for (a, len) in arcs {
            let lo = (&a * &dm1).ceil().to_integer();
            let hi = ((&a + &len) * &dm1).floor().to_integer();
            let mut k = lo;
            while k <= hi {
                let x = Angle::from_ratio(BigRational::new(k.clone(), dm1.to_integer()));
                k += 1;
                if lam.class_id(&SchemaAngle::new(v, x.clone())).is_some() || !self.touches(w, &x) {
                    continue;
                }
                if found.iter().any(|(_, cls)| cls.binary_search(&x).is_ok()) {
                    continue;
                }
                let cls = lam.class_of(&SchemaAngle::new(v, x.clone()))?;
                found.push((x, cls));
            }
        }
        let expected = gap.cycle_degree.unwrap_or(1) as usize - 1;
        if found.len() != expected {
            return Err(LaminationError::Inconsistent(format!(
                "return map of w{w} shows {} fixed boundary points, expected {expected}",
                found.len()
            )));
        }
        Ok(found.into_iter().map(|(a, _)| a).min().expect("at least one fixed point"))
    }

    fn digit(&self, w: usize, x: &Angle) -> usize {
        let g = &self.data[w];
        if let Some(j) = g.sectors.iter().position(|s| s.members.binary_search(x).is_ok()) {
            return j;
        }
        let pos = g.entry.arc_to(x);
        g.sectors.iter().rposition(|s| s.entry_pos <= pos).unwrap_or(0)
    }

    /// `α_w(x)` for a rational boundary angle `x` of `w`.
    pub fn alpha(&self, w: usize, x: &Angle) -> Result<Angle, LaminationError> {
        let t = &self.induced.schema;
        let mut seen: HashMap<(usize, Angle), usize> = HashMap::new();
        let mut digits: Vec<(u64, u64)> = Vec::new();
        let (mut g, mut y) = (w, x.clone());
        let pre = loop {
            if let Some(&i) = seen.get(&(g, y.clone())) {
                break i;
            }
            if !self.touches(g, &y) {
                return Err(LaminationError::NotOnBoundary(x.clone(), w));
            }
            seen.insert((g, y.clone()), digits.len());
            digits.push((self.digit(g, &y) as u64, t.delta(g) as u64));
            y = self.advance(g, &y);
            g = t.sigma(g);
        };
        // Mixed-radix value with a repeating tail.
        let mut tail = BigRational::zero();
        let mut scale = BigRational::one();
        for &(d, q) in &digits[pre..] {
            scale /= int(q);
            tail += int(d) * &scale;
        }
        let big = BigRational::one() / &scale;
        tail = tail * &big / (&big - BigRational::one());
        let mut value = BigRational::zero();
        let mut scale = BigRational::one();
        for &(d, q) in &digits[..pre] {
            scale /= int(q);
            value += int(d) * &scale;
        }
        value += tail * scale;
        Ok(Angle::from_ratio(value))
    }

    /// True iff `x` and its return orbit stay on the gap boundaries.
    pub fn on_boundary(&self, w: usize, x: &Angle) -> bool {
        self.alpha(w, x).is_ok()
    }

    /// The preimage on `∂w` of `y` in sector `j` of `w`.
    fn branch(&self, w: usize, j: usize, y: &Angle) -> Result<Angle, LaminationError> {
        let k = self.step_multiplier(w);
        let cands: Vec<Angle> = (0..k)
            .map(|i| Angle::from_ratio((y.as_ratio() + int(i)) / int(k)))
            .filter(|c| self.touches(w, c) && self.digit(w, c) == j)
            .collect();
        if cands.len() > 1 {
            if let Some(c) = cands.iter().find(|c| self.on_boundary(w, c)) {
                return Ok(c.clone());
            }
        }
        cands
            .into_iter()
            .next()
            .ok_or_else(|| LaminationError::Inconsistent(format!("no preimage of {y} in sector {j} of w{w}")))
    }

    /// A boundary angle of `w` with internal angle `theta`. When the preimage
    /// is a collapsed class, any of its boundary points is returned.
    pub fn alpha_inv(&self, w: usize, theta: &Angle) -> Result<Angle, LaminationError> {
        let t = &self.induced.schema;
        let (orbit, pre) = t.orbit(&SchemaAngle::new(w, theta.clone()));
        let digits: Vec<usize> = orbit.iter().map(|q| q.angle.leading_digit(t.delta(q.vertex)) as usize).collect();
        let start = orbit[pre].vertex;
        let target = &orbit[pre].angle;
        let mult: u64 = orbit[pre..].iter().map(|q| self.step_multiplier(q.vertex)).product();
        let mut y = self.data[start].anchor.clone();
        let mut found = None;
        'search: for _ in 0..6 {
            for n in (pre..orbit.len()).rev() {
                y = self.branch(orbit[n].vertex, digits[n], &y)?;
            }
            for r in 1..=2u32 {
                let den: BigInt = num_traits::Pow::pow(BigInt::from(mult), r) - 1;
                let k = (y.as_ratio() * BigRational::from_integer(den.clone())).round().to_integer();
                for dk in [0i32, -1, 1] {
                    let c = Angle::from_ratio(BigRational::new(&k + dk, den.clone()));
                    if self.alpha(start, &c).ok().as_ref() == Some(target) {
                        found = Some(c);
                        break 'search;
                    }
                }
            }
        }
        let mut y = found.ok_or_else(|| {
            LaminationError::ResolutionExceeded(format!("no boundary angle of w{start} with internal angle {target}"))
        })?;
        for n in (0..pre).rev() {
            y = self.branch(orbit[n].vertex, digits[n], &y)?;
        }
        match self.alpha(w, &y) {
            Ok(a) if &a == theta => Ok(y),
            _ => Err(LaminationError::Inconsistent(format!("inverse internal angle of {theta} fails to verify"))),
        }
    }
}
