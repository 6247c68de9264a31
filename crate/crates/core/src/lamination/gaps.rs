//! Fatou gaps, critical elements, classification and the induced schema.
//!
//! A Fatou gap is certified at a resolution `r` by the region it occupies
//! among the cached classes of level at most `r`, together with the period,
//! preperiod and degree read off from the orbit of one of its germs. The
//! certificate is accepted only if the same numbers come out at `r − 1`.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::angles::{sorted_set, Angle};
use crate::schema::{MappingSchema, SchemaAngle, Vertex};

use super::faces::Faces;
use super::{common_component, ClassId, LaminationError, PieceKind, RationalLamination, PRIMITIVITY_PERIOD_FACTOR};

/// An infinite unlinked class, identified by a germ `(germ, +)` inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FatouGap {
    pub vertex: Vertex,
    pub germ: Angle,
    pub boundary_classes: Vec<ClassId>,
    pub period: usize,
    pub preperiod: usize,
    /// Degree of `m_T` on the gap.
    pub return_degree: u32,
    /// Product of the degrees around the cycle, for periodic gaps.
    pub cycle_degree: Option<u32>,
    #[serde(skip)]
    pub(crate) face: usize,
}

impl FatouGap {
    pub fn is_critical(&self) -> bool {
        self.return_degree >= 2
    }

    pub fn is_periodic(&self) -> bool {
        self.preperiod == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PostCritical {
    Class { vertex: Vertex, angles: Vec<Angle> },
    Gap { vertex: Vertex, germ: Angle },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalInventory {
    pub crit_p: Vec<ClassId>,
    pub crit_f: Vec<FatouGap>,
    pub post_critical: Vec<PostCritical>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LaminationKind {
    Hyperbolic,
    Misiurewicz,
    /// Post-critically finite with both critical classes and critical gaps.
    PostCriticallyFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub kind: LaminationKind,
    pub post_critically_finite: bool,
    pub primitive: bool,
}

impl Classification {
    pub fn is_hyperbolic(&self) -> bool {
        self.kind == LaminationKind::Hyperbolic
    }

    pub fn is_misiurewicz(&self) -> bool {
        self.kind == LaminationKind::Misiurewicz
    }
}

/// `T(λ)` with the gaps behind its vertices (`w0`, `w1`, … in order) and the
/// first-return times `ℓ_w`.
#[derive(Debug, Clone)]
pub struct InducedSchema {
    pub schema: MappingSchema,
    pub gaps: Vec<FatouGap>,
    pub ell: Vec<usize>,
}

/// The gap lies in the positively oriented arc `(a, b)` cut off by the
/// rays at `a` and `b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SectorEdge {
    pub a: Angle,
    pub b: Angle,
}

struct GapTable<'a> {
    faces: Vec<Cow<'a, Faces>>,
    /// Gap pieces: (vertex, face) of each.
    piece_faces: Vec<(Vertex, usize)>,
    degree: HashMap<(Vertex, usize), u32>,
}

impl<'a> GapTable<'a> {
    fn orbit(&self, schema: &MappingSchema, v: Vertex, x: &Angle) -> (Vec<(Vertex, usize)>, usize) {
        let mut seen = HashMap::new();
        let mut seq = Vec::new();
        let mut p = SchemaAngle::new(v, x.clone());
        loop {
            let key = (p.vertex, self.faces[p.vertex].face_plus(&p.angle));
            if let Some(&i) = seen.get(&key) {
                return (seq, i);
            }
            seen.insert(key, seq.len());
            seq.push(key);
            p = schema.step(&p);
        }
    }

    fn germ(&self, key: (Vertex, usize)) -> Angle {
        self.faces[key.0].germ(key.1)
    }
}

impl RationalLamination {
    fn faces_cow(&self, v: Vertex, res: usize) -> Cow<'_, Faces> {
        if res >= self.depth {
            Cow::Borrowed(&self.faces[v])
        } else {
            Cow::Owned(self.faces_at(v, res))
        }
    }

    fn gap_table(&self, res: usize) -> Result<GapTable<'_>, LaminationError> {
        let faces: Vec<Cow<Faces>> = self.schema.vertices().map(|v| self.faces_cow(v, res)).collect();
        let mut piece_faces = Vec::new();
        let mut degree = HashMap::new();
        for piece in self.portrait.iter().filter(|p| p.kind == PieceKind::Gap) {
            let f = &faces[piece.vertex];
            let theta = &piece.angles[0];
            let germ = match f.index_of(theta) {
                None => theta.clone(),
                Some(i) => {
                    let owner = f.owner[i];
                    let class = &self.classes[owner].angles;
                    let comp = common_component(class, &piece.angles).ok_or_else(|| {
                        LaminationError::Portrait(format!(
                            "gap piece at {} is split by a class",
                            self.schema.name(piece.vertex)
                        ))
                    })?;
                    class[comp].clone()
                }
            };
            let key = (piece.vertex, f.face_plus(&germ));
            *degree.entry(key).or_insert(1) += piece.angles.len() as u32 - 1;
            piece_faces.push(key);
        }
        Ok(GapTable { faces, piece_faces, degree })
    }

    fn gaps_from(&self, t: &GapTable) -> Vec<FatouGap> {
        let mut out: BTreeMap<(Vertex, Angle), FatouGap> = BTreeMap::new();
        for &key in &t.piece_faces {
            let (seq, pre) = t.orbit(&self.schema, key.0, &t.germ(key));
            let period = seq.len() - pre;
            for (j, &(v, f)) in seq.iter().enumerate() {
                let deg = |k: &(Vertex, usize)| t.degree.get(k).copied().unwrap_or(1);
                let periodic = j >= pre;
                let cycle_degree = periodic.then(|| seq[pre..].iter().map(deg).product());
                let gap = FatouGap {
                    vertex: v,
                    germ: t.germ((v, f)),
                    boundary_classes: t.faces[v].face_classes(f),
                    period,
                    preperiod: pre.saturating_sub(j),
                    return_degree: deg(&(v, f)),
                    cycle_degree,
                    face: f,
                };
                out.entry((v, gap.germ.clone())).or_insert(gap);
            }
        }
        out.into_values().collect()
    }

    fn certificate(&self, t: &GapTable) -> Vec<(usize, usize)> {
        t.piece_faces
            .iter()
            .map(|&key| {
                let (seq, pre) = t.orbit(&self.schema, key.0, &t.germ(key));
                (pre, seq.len() - pre)
            })
            .collect()
    }

    /// Fatou gaps in the forward orbits of the critical gaps, certified at
    /// `resolution` (capped at the cache depth).
    pub fn fatou_gaps(&self, resolution: usize) -> Result<Vec<FatouGap>, LaminationError> {
        let res = resolution.min(self.depth);
        let t = self.gap_table(res)?;
        if res >= 1 {
            let coarse = self.gap_table(res - 1)?;
            if self.certificate(&t) != self.certificate(&coarse) {
                return Err(LaminationError::ResolutionExceeded(format!(
                    "gap periods are not yet stable at resolution {res}"
                )));
            }
        }
        Ok(self.gaps_from(&t))
    }

    /// `crit^F(λ)` at the cache depth, ordered by vertex and germ.
    pub fn critical_gaps(&self) -> Result<Vec<FatouGap>, LaminationError> {
        Ok(self.fatou_gaps(self.depth)?.into_iter().filter(|g| g.is_critical()).collect())
    }

    fn class_degree(&self, id: ClassId) -> u32 {
        let c = &self.classes[id];
        let img = sorted_set(c.angles.iter().map(|x| x.times_u(self.schema.delta(c.vertex) as u64)));
        (c.angles.len() / img.len()) as u32
    }

    pub fn critical_inventory(&self) -> Result<CriticalInventory, LaminationError> {
        let mut crit_p: Vec<ClassId> = self
            .portrait
            .iter()
            .filter(|p| p.kind == PieceKind::Class)
            .map(|p| self.index[&(p.vertex, p.angles[0].clone())])
            .collect();
        crit_p.sort_unstable();
        crit_p.dedup();
        let crit_f = self.critical_gaps()?;
        let found: u32 = crit_p.iter().map(|&c| self.class_degree(c) - 1).sum::<u32>()
            + crit_f.iter().map(|g| g.return_degree - 1).sum::<u32>();
        let expected = self.schema.total_degree() - 1;
        if found != expected {
            return Err(LaminationError::DegreeSum { found, expected });
        }
        let mut pc: Vec<PostCritical> = Vec::new();
        let push = |e: PostCritical, pc: &mut Vec<PostCritical>| {
            if pc.contains(&e) {
                false
            } else {
                pc.push(e);
                true
            }
        };
        for &c in &crit_p {
            let cls = &self.classes[c];
            let mut v = self.schema.sigma(cls.vertex);
            let mut set = sorted_set(cls.angles.iter().map(|x| x.times_u(self.schema.delta(cls.vertex) as u64)));
            while push(PostCritical::Class { vertex: v, angles: set.clone() }, &mut pc) {
                let d = self.schema.delta(v) as u64;
                set = sorted_set(set.iter().map(|x| x.times_u(d)));
                v = self.schema.sigma(v);
            }
        }
        for g in &crit_f {
            let mut p = self.schema.step(&SchemaAngle::new(g.vertex, g.germ.clone()));
            loop {
                let f = self.faces[p.vertex].face_plus(&p.angle);
                let germ = self.faces[p.vertex].germ(f);
                if !push(PostCritical::Gap { vertex: p.vertex, germ }, &mut pc) {
                    break;
                }
                p = self.schema.step(&p);
            }
        }
        Ok(CriticalInventory { crit_p, crit_f, post_critical: pc })
    }

    pub fn classify(&self) -> Result<Classification, LaminationError> {
        self.classify_with_bound(PRIMITIVITY_PERIOD_FACTOR * self.max_generator_period())
    }

    /// Classification with an explicit bound on the eventual periods of the
    /// classes searched for a primitivity witness.
    pub fn classify_with_bound(&self, period_bound: usize) -> Result<Classification, LaminationError> {
        let inv = self.critical_inventory()?;
        let kind = match (inv.crit_p.is_empty(), inv.crit_f.is_empty()) {
            (true, _) => LaminationKind::Hyperbolic,
            (false, true) => LaminationKind::Misiurewicz,
            (false, false) => LaminationKind::PostCriticallyFinite,
        };
        let primitive = inv.crit_f.is_empty() || self.primitivity_witness(&inv, period_bound)?.is_none();
        Ok(Classification { kind, post_critically_finite: true, primitive })
    }

    /// A class meeting the closures of two distinct Fatou gaps, searched among
    /// the critical classes and the forward-closed generating set.
    pub fn primitivity_witness(
        &self,
        inv: &CriticalInventory,
        period_bound: usize,
    ) -> Result<Option<ClassId>, LaminationError> {
        let gaps = self.fatou_gaps(self.depth)?;
        let next: HashMap<(Vertex, usize), (Vertex, usize)> = gaps
            .iter()
            .map(|g| {
                let p = self.schema.step(&SchemaAngle::new(g.vertex, g.germ.clone()));
                ((g.vertex, g.face), (p.vertex, self.faces[p.vertex].face_plus(&p.angle)))
            })
            .collect();
        // The germ just after `x` lies in a Fatou gap iff along the periodic
        // part of its orbit every germ sits in a gap face and the faces follow
        // the gap dynamics.
        let is_fatou = |v: Vertex, x: &Angle| -> bool {
            let (orbit, pre) = self.schema.orbit(&SchemaAngle::new(v, x.clone()));
            let keys: Vec<(Vertex, usize)> =
                orbit[pre..].iter().map(|q| (q.vertex, self.faces[q.vertex].face_plus(&q.angle))).collect();
            (0..keys.len()).all(|j| next.get(&keys[j]) == Some(&keys[(j + 1) % keys.len()]))
        };
        let mut candidates: Vec<ClassId> =
            (0..self.s_count).filter(|&c| self.eventual_period(c).is_some_and(|p| p <= period_bound)).collect();
        candidates.extend(inv.crit_p.iter().copied());
        for c in candidates {
            let cls = &self.classes[c];
            let f = &self.faces[cls.vertex];
            let mut adjacent: Vec<usize> =
                cls.angles.iter().filter(|x| is_fatou(cls.vertex, x)).map(|x| f.face_plus(x)).collect();
            adjacent.sort_unstable();
            adjacent.dedup();
            if adjacent.len() >= 2 {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }

    /// Period of a periodic class of `S`; `None` for strictly preperiodic
    /// classes and those collapsing to points.
    pub fn class_period(&self, id: ClassId) -> Option<usize> {
        let mut cur = id;
        for n in 1..=self.s_count {
            cur = self.image[cur]?;
            if cur == id {
                return Some(n);
            }
        }
        None
    }

    /// Eventual period of a class of `S` under the image map; `None` if the
    /// orbit collapses to points.
    pub(crate) fn eventual_period(&self, id: ClassId) -> Option<usize> {
        let mut seen: HashMap<ClassId, usize> = HashMap::new();
        let mut cur = id;
        let mut n = 0usize;
        loop {
            if let Some(&i) = seen.get(&cur) {
                return Some(n - i);
            }
            seen.insert(cur, n);
            cur = self.image[cur]?;
            n += 1;
        }
    }

    pub fn induced_schema(&self) -> Result<InducedSchema, LaminationError> {
        let all = self.fatou_gaps(self.depth)?;
        let crit: Vec<FatouGap> = all.iter().filter(|g| g.is_critical()).cloned().collect();
        if crit.is_empty() {
            return Err(LaminationError::NoCriticalGap);
        }
        let pos: HashMap<(Vertex, usize), usize> =
            crit.iter().enumerate().map(|(i, g)| ((g.vertex, g.face), i)).collect();
        let mut sigma = Vec::new();
        let mut ell = Vec::new();
        for g in &crit {
            let mut p = SchemaAngle::new(g.vertex, g.germ.clone());
            let mut hit = None;
            for n in 1..=all.len() + 1 {
                p = self.schema.step(&p);
                let key = (p.vertex, self.faces[p.vertex].face_plus(&p.angle));
                if let Some(&i) = pos.get(&key) {
                    hit = Some((i, n));
                    break;
                }
            }
            let (i, n) = hit.ok_or_else(|| {
                LaminationError::Inconsistent("a critical gap never returns to a critical gap".into())
            })?;
            sigma.push(i);
            ell.push(n);
        }
        let names: Vec<String> = (0..crit.len()).map(|i| format!("w{i}")).collect();
        let entries: Vec<(String, String, u32)> = crit
            .iter()
            .enumerate()
            .map(|(i, g)| (names[i].clone(), names[sigma[i]].clone(), g.return_degree))
            .collect();
        // Names w0..w9, w10.. sort lexicographically; keep the gap order aligned.
        let schema = MappingSchema::new(&entries)?;
        let mut gaps = vec![None; crit.len()];
        let mut ells = vec![0; crit.len()];
        for (i, g) in crit.into_iter().enumerate() {
            let v = schema.vertex(&names[i])?;
            gaps[v] = Some(g);
            ells[v] = ell[i];
        }
        Ok(InducedSchema { schema, gaps: gaps.into_iter().map(Option::unwrap).collect(), ell: ells })
    }

    /// Edges of the sectors cutting out the fiber of the unlinked class of
    /// `p`, using classes of level at most `depth`.
    pub fn fiber_sectors(&self, p: &SchemaAngle, depth: usize) -> Result<Vec<SectorEdge>, LaminationError> {
        if p.vertex >= self.schema.len() {
            return Err(crate::schema::SchemaError::UnknownVertex(p.vertex.to_string()).into());
        }
        let f = self.faces_cow(p.vertex, depth);
        let n = f.len();
        let mut out = Vec::new();
        if let Some(i) = f.index_of(&p.angle) {
            let cls = &self.classes[f.owner[i]].angles;
            for k in 0..cls.len() {
                out.push(SectorEdge { a: cls[k].clone(), b: cls[(k + 1) % cls.len()].clone() });
            }
            return Ok(out);
        }
        if n == 0 {
            return Ok(out);
        }
        let face = f.face_plus(&p.angle);
        for &i in &f.face_arcs[face] {
            let e = (i + 1) % n;
            let cls = &self.classes[f.owner[e]].angles;
            let k = cls.binary_search(&f.points[e]).expect("class point");
            let s = cls[(k + cls.len() - 1) % cls.len()].clone();
            out.push(SectorEdge { a: s, b: f.points[e].clone() });
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// True iff the germ just after `p` lies in the region of `gap` at the
    /// cache depth.
    pub fn germ_in_gap(&self, gap: &FatouGap, p: &SchemaAngle) -> bool {
        p.vertex == gap.vertex && self.faces[p.vertex].face_plus(&p.angle) == gap.face
    }

    /// True iff `x` lies on the closure of the region of the gap at the cache depth.
    pub(crate) fn touches_gap(&self, gap: &FatouGap, x: &Angle) -> bool {
        self.faces[gap.vertex].touches(gap.face, x)
    }
}
