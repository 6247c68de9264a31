//! Invariant rational laminations over a mapping schema.
//!
//! A lamination is presented by finitely many generator classes. Their forward
//! images form a finite set `S` of classes. Every other class is reached by
//! pulling back: the first pullback step is settled by an exhaustive search
//! for the unique unlinked, consecutive-preserving configuration, and that
//! step also fixes a critical portrait. Deeper pullbacks are then read off
//! from the portrait regions. Angles whose orbits never meet `S` are
//! classified by their itineraries relative to the same portrait.
//!
//! The generators must include every critical class; critical classes cannot
//! be recovered by pulling back.

mod faces;
mod gaps;
mod internal;
mod itinerary;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::{component_index, consecutive_preserving_by, sorted_set, weakly_unlinked_sorted, Angle};
use crate::schema::{MappingSchema, SchemaAngle, SchemaError, SchemaJson, Vertex};

pub use gaps::{Classification, CriticalInventory, FatouGap, InducedSchema, LaminationKind, PostCritical, SectorEdge};
pub use internal::InternalAngleSystem;

use faces::Faces;
use itinerary::Regions;

pub type ClassId = usize;

/// Default bound on eventual periods searched by the primitivity test, as a
/// multiple of the largest generator period.
pub const PRIMITIVITY_PERIOD_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum AxiomViolation {
    /// A generator with fewer than two angles or an unknown vertex.
    Malformed {
        class: String,
    },
    /// Two classes overlap without being equal.
    Closed {
        a: String,
        b: String,
    },
    /// Two classes of one fiber are linked.
    Unlinked {
        a: String,
        b: String,
    },
    /// The image of a class is not a class.
    Image {
        class: String,
        image: String,
    },
    ConsecutivePreserving {
        class: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| format!("{v:?}")).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaminationError {
    #[error("axiom violations: {0}")]
    Axioms(AxiomReport),
    #[error("first pullback of {0}")]
    Bootstrap(String),
    #[error("critical portrait: {0}")]
    Portrait(String),
    #[error("resolution exceeded: {0}")]
    ResolutionExceeded(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("lamination has no critical Fatou gap")]
    NoCriticalGap,
    #[error("degree sum {found} differs from total degree minus one ({expected})")]
    DegreeSum { found: u32, expected: u32 },
    #[error("{0} is not on the boundary of gap w{1}")]
    NotOnBoundary(Angle, usize),
    #[error("inconsistent lamination data: {0}")]
    Inconsistent(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

/// A class held in the pullback cache. `level` is the number of pullback
/// steps from the forward-closed generating set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoredClass {
    pub vertex: Vertex,
    pub angles: Vec<Angle>,
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    Class,
    Gap,
}

/// A piece of the portrait selected during the first pullback step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortraitPiece {
    pub vertex: Vertex,
    pub angles: Vec<Angle>,
    pub kind: PieceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassJson {
    pub vertex: String,
    pub angles: Vec<Angle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaminationJson {
    pub schema: SchemaJson,
    pub classes: Vec<ClassJson>,
    pub pullback_depth: usize,
}

#[derive(Debug, Clone)]
pub struct RationalLamination {
    schema: MappingSchema,
    depth: usize,
    generators: Vec<(Vertex, Vec<Angle>)>,
    classes: Vec<StoredClass>,
    s_count: usize,
    index: HashMap<(Vertex, Angle), ClassId>,
    image: Vec<Option<ClassId>>,
    critical_values: HashSet<(Vertex, Angle)>,
    portrait: Vec<PortraitPiece>,
    regions: Vec<Regions>,
    faces: Vec<Faces>,
}

fn show(schema: &MappingSchema, v: Vertex, a: &[Angle]) -> String {
    let inner: Vec<String> = a.iter().map(|x| x.to_string()).collect();
    format!("{}:{{{}}}", schema.name(v), inner.join(","))
}

fn image_set(schema: &MappingSchema, v: Vertex, a: &[Angle]) -> Vec<Angle> {
    let d = schema.delta(v) as u64;
    sorted_set(a.iter().map(|x| x.times_u(d)))
}

struct Store {
    classes: Vec<StoredClass>,
    index: HashMap<(Vertex, Angle), ClassId>,
}

impl Store {
    /// `Ok((id, fresh))`, or `Err(other)` when the set overlaps a different class.
    fn insert(&mut self, v: Vertex, a: Vec<Angle>, level: usize) -> Result<(ClassId, bool), ClassId> {
        if let Some(&id) = self.index.get(&(v, a[0].clone())) {
            return if self.classes[id].angles == a { Ok((id, false)) } else { Err(id) };
        }
        if let Some(&id) = a.iter().find_map(|x| self.index.get(&(v, x.clone()))) {
            return Err(id);
        }
        let id = self.classes.len();
        for x in &a {
            self.index.insert((v, x.clone()), id);
        }
        self.classes.push(StoredClass { vertex: v, angles: a, level });
        Ok((id, true))
    }
}

impl RationalLamination {
    /// Validates the generators closed under forward images and fills the
    /// pullback cache to `depth` (at least 1).
    pub fn build(
        schema: MappingSchema,
        generators: Vec<(Vertex, Vec<Angle>)>,
        depth: usize,
    ) -> Result<Self, LaminationError> {
        let depth = depth.max(1);
        let mut violations = Vec::new();
        let mut gens = Vec::new();
        for (v, a) in generators {
            let a = sorted_set(a);
            if v >= schema.len() || a.len() < 2 {
                let name = if v < schema.len() { schema.name(v).to_string() } else { format!("#{v}") };
                let inner: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                violations.push(AxiomViolation::Malformed { class: format!("{name}:{{{}}}", inner.join(",")) });
            } else {
                gens.push((v, a));
            }
        }
        gens.sort();
        gens.dedup();

        // Forward closure S.
        let mut store = Store { classes: Vec::new(), index: HashMap::new() };
        let mut queue: VecDeque<(Vertex, Vec<Angle>)> = gens.iter().cloned().collect();
        let mut singles: HashSet<(Vertex, Angle)> = HashSet::new();
        while let Some((v, a)) = queue.pop_front() {
            match store.insert(v, a.clone(), 0) {
                Ok((_, false)) => {}
                Ok((_, true)) => {
                    let img = image_set(&schema, v, &a);
                    let w = schema.sigma(v);
                    if img.len() >= 2 {
                        queue.push_back((w, img));
                    } else {
                        singles.insert((w, img[0].clone()));
                    }
                }
                Err(other) => violations.push(AxiomViolation::Closed {
                    a: show(&schema, v, &a),
                    b: show(&schema, store.classes[other].vertex, &store.classes[other].angles),
                }),
            }
        }
        let s_count = store.classes.len();
        let mut image = vec![None; s_count];
        for (id, c) in store.classes.iter().enumerate() {
            let img = image_set(&schema, c.vertex, &c.angles);
            let w = schema.sigma(c.vertex);
            let label = show(&schema, c.vertex, &c.angles);
            match store.index.get(&(w, img[0].clone())) {
                Some(&j) if img.len() >= 2 && store.classes[j].angles == img => image[id] = Some(j),
                None if img.len() == 1 => {}
                _ => violations.push(AxiomViolation::Image { class: label.clone(), image: show(&schema, w, &img) }),
            }
            let d = schema.delta(c.vertex) as u64;
            if !consecutive_preserving_by(&c.angles, |x| x.times_u(d)) {
                violations.push(AxiomViolation::ConsecutivePreserving { class: label });
            }
        }
        for i in 0..s_count {
            for j in i + 1..s_count {
                let (a, b) = (&store.classes[i], &store.classes[j]);
                if a.vertex == b.vertex && !weakly_unlinked_sorted(&a.angles, &b.angles) {
                    violations.push(AxiomViolation::Unlinked {
                        a: show(&schema, a.vertex, &a.angles),
                        b: show(&schema, b.vertex, &b.angles),
                    });
                }
            }
        }
        if !violations.is_empty() {
            return Err(LaminationError::Axioms(AxiomReport { violations }));
        }

        let mut lam = RationalLamination {
            schema,
            depth,
            generators: gens,
            classes: store.classes,
            s_count,
            index: store.index,
            image,
            critical_values: singles,
            portrait: Vec::new(),
            regions: Vec::new(),
            faces: Vec::new(),
        };
        lam.bootstrap()?;
        lam.derive_portrait()?;
        lam.regions = lam.schema.vertices().map(|v| Regions::new(&lam, v)).collect();
        for v in lam.schema.vertices() {
            if lam.regions[v].count() != lam.schema.delta(v) as usize {
                return Err(LaminationError::Portrait(format!(
                    "portrait cuts {} into {} regions instead of {}",
                    lam.schema.name(v),
                    lam.regions[v].count(),
                    lam.schema.delta(v)
                )));
            }
        }
        for level in 2..=depth {
            lam.lift_level(level)?;
        }
        lam.faces = lam.schema.vertices().map(|v| lam.faces_at(v, depth)).collect();
        lam.check_cache()?;
        Ok(lam)
    }

    pub fn from_json(raw: &LaminationJson) -> Result<Self, LaminationError> {
        let schema = MappingSchema::from_json(&raw.schema)?;
        let mut gens = Vec::new();
        for c in &raw.classes {
            gens.push((schema.vertex(&c.vertex)?, c.angles.clone()));
        }
        Self::build(schema, gens, raw.pullback_depth)
    }

    pub fn to_json(&self) -> LaminationJson {
        LaminationJson {
            schema: self.schema.to_json(),
            classes: self
                .generators
                .iter()
                .map(|(v, a)| ClassJson { vertex: self.schema.name(*v).to_string(), angles: a.clone() })
                .collect(),
            pullback_depth: self.depth,
        }
    }

    /// The empty lamination over a schema.
    pub fn empty(schema: MappingSchema, depth: usize) -> Self {
        Self::build(schema, vec![], depth).expect("the empty lamination is valid")
    }

    /// The same generators with the cache filled to another depth.
    pub fn with_depth(&self, depth: usize) -> Result<Self, LaminationError> {
        Self::build(self.schema.clone(), self.generators.clone(), depth)
    }

    pub fn schema(&self) -> &MappingSchema {
        &self.schema
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Generator classes sorted by vertex and smallest angle.
    pub fn generators(&self) -> &[(Vertex, Vec<Angle>)] {
        &self.generators
    }

    /// Every cached class; the first `forward_count()` form the set `S`.
    pub fn classes(&self) -> &[StoredClass] {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> &StoredClass {
        &self.classes[id]
    }

    pub fn forward_count(&self) -> usize {
        self.s_count
    }

    /// The image class of a cached class, `None` when the image is a point.
    pub fn image_of(&self, id: ClassId) -> Option<ClassId> {
        self.image[id]
    }

    pub fn portrait(&self) -> &[PortraitPiece] {
        &self.portrait
    }

    pub fn class_id(&self, p: &SchemaAngle) -> Option<ClassId> {
        self.index.get(&(p.vertex, p.angle.clone())).copied()
    }

    fn in_s(&self, v: Vertex, x: &Angle) -> bool {
        matches!(self.index.get(&(v, x.clone())), Some(&id) if id < self.s_count)
    }

    fn s_classes_at(&self, v: Vertex) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.s_count).filter(move |&i| self.classes[i].vertex == v)
    }

    // ---- first pullback step -------------------------------------------------

    fn bootstrap(&mut self) -> Result<(), LaminationError> {
        struct Entry {
            label: String,
            options: Vec<Vec<Vec<Angle>>>,
            vertex: Vertex,
        }
        let mut entries = Vec::new();
        for a in 0..self.s_count {
            let w = self.classes[a].vertex;
            let target = self.classes[a].angles.clone();
            for v in self.schema.vertices().filter(|&v| self.schema.sigma(v) == w) {
                let d = self.schema.delta(v);
                let pre: Vec<Angle> = sorted_set(target.iter().flat_map(|x| x.preimages(d)));
                let rest: Vec<Angle> = pre.iter().filter(|x| !self.in_s(v, x)).cloned().collect();
                let label = format!("{} at {}", show(&self.schema, w, &target), self.schema.name(v));
                if !rest.len().is_multiple_of(target.len()) {
                    return Err(LaminationError::Bootstrap(format!(
                        "{label}: {} free preimages cannot form lifts (is a critical class missing from the generators?)",
                        rest.len()
                    )));
                }
                let s_here: Vec<Vec<Angle>> = self.s_classes_at(v).map(|i| self.classes[i].angles.clone()).collect();
                let mut options = Vec::new();
                let mut current = Vec::new();
                partitions(&rest, &target, d, &s_here, &mut current, &mut options);
                if options.is_empty() {
                    return Err(LaminationError::Bootstrap(format!("{label}: no unlinked lift exists")));
                }
                entries.push(Entry { label, options, vertex: v });
            }
        }
        // Combine per-class options into one globally unlinked configuration.
        fn search(
            entries: &[Entry],
            i: usize,
            chosen: &mut Vec<(Vertex, Vec<Angle>)>,
            found: &mut Vec<Vec<(Vertex, Vec<Angle>)>>,
        ) {
            if found.len() > 1 {
                return;
            }
            if i == entries.len() {
                found.push(chosen.clone());
                return;
            }
            let v = entries[i].vertex;
            for opt in &entries[i].options {
                let ok = opt.iter().all(|b| chosen.iter().all(|(u, c)| *u != v || weakly_unlinked_sorted(b, c)));
                if ok {
                    let n = chosen.len();
                    chosen.extend(opt.iter().map(|b| (v, b.clone())));
                    search(entries, i + 1, chosen, found);
                    chosen.truncate(n);
                }
            }
        }
        let mut found = Vec::new();
        search(&entries, 0, &mut Vec::new(), &mut found);
        match found.len() {
            0 => {
                let labels: Vec<&str> = entries.iter().map(|e| e.label.as_str()).collect();
                return Err(LaminationError::Bootstrap(format!(
                    "lifts of {} cannot be made pairwise unlinked",
                    labels.join(", ")
                )));
            }
            1 => {}
            _ => {
                let amb: Vec<&str> = entries.iter().filter(|e| e.options.len() > 1).map(|e| e.label.as_str()).collect();
                return Err(LaminationError::Bootstrap(format!("ambiguous lift of {}", amb.join(", "))));
            }
        }
        let mut store = Store { classes: std::mem::take(&mut self.classes), index: std::mem::take(&mut self.index) };
        let mut blocks = found.pop().unwrap();
        blocks.sort();
        for (v, b) in blocks {
            let img = image_set(&self.schema, v, &b);
            let w = self.schema.sigma(v);
            let parent = store.index[&(w, img[0].clone())];
            store.insert(v, b, 1).map_err(|_| LaminationError::Inconsistent("overlapping first lifts".into()))?;
            self.image.push(Some(parent));
        }
        self.classes = store.classes;
        self.index = store.index;
        Ok(())
    }

    /// Faces of the classes at `v` whose level is at most `res`.
    fn faces_at(&self, v: Vertex, res: usize) -> Faces {
        let pts = self
            .classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.vertex == v && c.level <= res)
            .flat_map(|(id, c)| c.angles.iter().map(move |x| (x.clone(), id)))
            .collect();
        Faces::new(pts)
    }

    fn derive_portrait(&mut self) -> Result<(), LaminationError> {
        let mut pieces = Vec::new();
        for v in self.schema.vertices() {
            let d = self.schema.delta(v);
            if d < 2 {
                continue;
            }
            let w = self.schema.sigma(v);
            let here = self.faces_at(v, 1);
            let there = self.faces_at(w, 0);
            let mut excess = 0u32;
            for id in 0..self.classes.len() {
                let c = &self.classes[id];
                if c.vertex != v {
                    continue;
                }
                let img = image_set(&self.schema, v, &c.angles);
                if img.len() < c.angles.len() {
                    let x0 = c.angles[0].times_u(d as u64);
                    let piece: Vec<Angle> = c.angles.iter().filter(|x| x.times_u(d as u64) == x0).cloned().collect();
                    if piece.len() * img.len() != c.angles.len() {
                        return Err(LaminationError::Portrait(format!(
                            "class {} is not evenly critical",
                            show(&self.schema, v, &c.angles)
                        )));
                    }
                    excess += piece.len() as u32 - 1;
                    pieces.push(PortraitPiece { vertex: v, angles: piece, kind: PieceKind::Class });
                }
            }
            for f in 0..here.face_count() {
                let len = here.face_length(f);
                let probe = here.interior_point(f).times_u(d as u64);
                let target = there.face_length(there.face_plus(&probe));
                let ratio = BigRational::from_integer(BigInt::from(d)) * len / target;
                if !ratio.is_integer() {
                    return Err(LaminationError::Portrait(format!(
                        "region of {} has non-integral degree {ratio}",
                        self.schema.name(v)
                    )));
                }
                let k = ratio.to_integer().to_u32().unwrap_or(0);
                if k < 2 {
                    continue;
                }
                let b0 = match here.len() {
                    0 => self
                        .critical_values
                        .iter()
                        .filter(|(u, _)| *u == w)
                        .flat_map(|(_, x)| x.preimages(d))
                        .min()
                        .unwrap_or_else(Angle::zero),
                    _ => here.face_points(f)[0].clone(),
                };
                let y = b0.times_u(d as u64);
                let piece: Vec<Angle> = y.preimages(d).into_iter().filter(|z| here.touches(f, z)).collect();
                if piece.len() as u32 != k {
                    return Err(LaminationError::Portrait(format!(
                        "critical region of {} has degree {k} but {} boundary points over {y}",
                        self.schema.name(v),
                        piece.len()
                    )));
                }
                excess += k - 1;
                pieces.push(PortraitPiece { vertex: v, angles: piece, kind: PieceKind::Gap });
            }
            if excess != d - 1 {
                return Err(LaminationError::Portrait(format!(
                    "critical elements at {} account for degree {} instead of {d}",
                    self.schema.name(v),
                    excess + 1
                )));
            }
        }
        self.portrait = pieces;
        Ok(())
    }

    // ---- deeper pullbacks ----------------------------------------------------

    fn lift_level(&mut self, level: usize) -> Result<(), LaminationError> {
        let frontier: Vec<ClassId> =
            (self.s_count..self.classes.len()).filter(|&i| self.classes[i].level == level - 1).collect();
        let mut store = Store { classes: std::mem::take(&mut self.classes), index: std::mem::take(&mut self.index) };
        let mut result = Ok(());
        'outer: for a in frontier {
            let w = store.classes[a].vertex;
            let target = store.classes[a].angles.clone();
            for v in self.schema.vertices().filter(|&v| self.schema.sigma(v) == w) {
                let d = self.schema.delta(v);
                let mut groups: HashMap<usize, Vec<Angle>> = HashMap::new();
                for x in target.iter().flat_map(|x| x.preimages(d)) {
                    match self.regions[v].region_of(&x) {
                        Some(r) => groups.entry(r).or_default().push(x),
                        None => {
                            result = Err(LaminationError::Inconsistent(format!(
                                "portrait point {x} maps into a class outside the generated set"
                            )));
                            break 'outer;
                        }
                    }
                }
                let mut keys: Vec<usize> = groups.keys().copied().collect();
                keys.sort_unstable();
                for r in keys {
                    let b = sorted_set(groups.remove(&r).unwrap());
                    let ok = b.len() == target.len()
                        && image_set(&self.schema, v, &b) == target
                        && consecutive_preserving_by(&b, |x| x.times_u(d as u64));
                    if !ok {
                        result = Err(LaminationError::Inconsistent(format!(
                            "lift {} of {} is not a bijective consecutive-preserving block",
                            show(&self.schema, v, &b),
                            show(&self.schema, w, &target)
                        )));
                        break 'outer;
                    }
                    match store.insert(v, b.clone(), level) {
                        Ok((_, true)) => self.image.push(Some(a)),
                        _ => {
                            result = Err(LaminationError::Inconsistent(format!(
                                "lift {} overlaps a cached class",
                                show(&self.schema, v, &b)
                            )));
                            break 'outer;
                        }
                    }
                }
            }
        }
        self.classes = store.classes;
        self.index = store.index;
        result
    }

    fn check_cache(&self) -> Result<(), LaminationError> {
        let mut violations = Vec::new();
        for v in self.schema.vertices() {
            let f = &self.faces[v];
            let pts: Vec<(Angle, ClassId)> = f.points.iter().cloned().zip(f.owner.iter().copied()).collect();
            if let Some((a, b)) = faces::find_crossing(&pts, |c| self.classes[c].angles.len()) {
                violations.push(AxiomViolation::Unlinked {
                    a: show(&self.schema, v, &self.classes[a].angles),
                    b: show(&self.schema, v, &self.classes[b].angles),
                });
            }
        }
        for (id, c) in self.classes.iter().enumerate().skip(self.s_count) {
            let d = self.schema.delta(c.vertex) as u64;
            let img = image_set(&self.schema, c.vertex, &c.angles);
            let parent = self.image[id].map(|p| &self.classes[p].angles);
            if parent != Some(&img) {
                violations.push(AxiomViolation::Image {
                    class: show(&self.schema, c.vertex, &c.angles),
                    image: show(&self.schema, self.schema.sigma(c.vertex), &img),
                });
            }
            if !consecutive_preserving_by(&c.angles, |x| x.times_u(d)) {
                violations
                    .push(AxiomViolation::ConsecutivePreserving { class: show(&self.schema, c.vertex, &c.angles) });
            }
        }
        if !violations.is_empty() {
            return Err(LaminationError::Axioms(AxiomReport { violations }));
        }
        for piece in &self.portrait {
            for c in self.classes.iter().filter(|c| c.vertex == piece.vertex) {
                if !weakly_unlinked_sorted(&piece.angles, &c.angles) {
                    return Err(LaminationError::Portrait(format!(
                        "piece {} is linked with {}",
                        show(&self.schema, piece.vertex, &piece.angles),
                        show(&self.schema, c.vertex, &c.angles)
                    )));
                }
            }
        }
        Ok(())
    }

    // ---- queries ---------------------------------------------------------------

    /// The class of `p`. Exact whenever it returns; fails when the answer
    /// needs more pullback steps than the cache holds.
    pub fn class_of(&self, p: &SchemaAngle) -> Result<Vec<Angle>, LaminationError> {
        if p.vertex >= self.schema.len() {
            return Err(SchemaError::UnknownVertex(p.vertex.to_string()).into());
        }
        if let Some(id) = self.class_id(p) {
            return Ok(self.classes[id].angles.clone());
        }
        let (orbit, pre) = self.schema.orbit(p);
        if let Some(k) = orbit.iter().position(|q| self.in_s(q.vertex, &q.angle)) {
            return Err(if k > self.depth {
                LaminationError::ResolutionExceeded(format!(
                    "{} reaches the generating set after {k} steps; cache depth is {}",
                    p.angle, self.depth
                ))
            } else {
                LaminationError::Inconsistent(format!("{} missing from the pullback cache", p.angle))
            });
        }
        let special = |q: &SchemaAngle| {
            self.critical_values.contains(&(q.vertex, q.angle.clone()))
                || self.regions[q.vertex].region_of(&q.angle).is_none()
        };
        if orbit.iter().any(special) {
            return Ok(vec![p.angle.clone()]);
        }
        itinerary::itinerary_class(self, p, &orbit, pre)
    }

    /// Exact equality of the cached classes of both laminations, up to the
    /// smaller of the two depths.
    pub fn same_classes(&self, other: &RationalLamination) -> Result<bool, LaminationError> {
        if self.schema != other.schema {
            return Ok(false);
        }
        let depth = self.depth.min(other.depth);
        for (a, b) in [(self, other), (other, self)] {
            for c in a.classes.iter().filter(|c| c.level <= depth) {
                let got = b.class_of(&SchemaAngle::new(c.vertex, c.angles[0].clone()))?;
                if got != c.angles {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// True iff every cached class of `base` (to the common depth) lies in a
    /// class of `self`.
    pub fn contains(&self, base: &RationalLamination) -> Result<bool, LaminationError> {
        if self.schema != base.schema {
            return Err(LaminationError::SchemaMismatch("containment needs a common schema".into()));
        }
        let depth = self.depth.min(base.depth);
        for c in base.classes.iter().filter(|c| c.level <= depth) {
            let got = self.class_of(&SchemaAngle::new(c.vertex, c.angles[0].clone()))?;
            if !c.angles.iter().all(|x| got.binary_search(x).is_ok()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest eventual period among generator classes, read as sets.
    pub fn max_generator_period(&self) -> usize {
        (0..self.s_count).filter_map(|c| self.eventual_period(c)).max().unwrap_or(1)
    }
}

/// All ways to split `rest` into blocks that map bijectively and
/// consecutive-preservingly onto `target`, unlinked with `fixed` and each other.
fn partitions(
    rest: &[Angle],
    target: &[Angle],
    d: u32,
    fixed: &[Vec<Angle>],
    current: &mut Vec<Vec<Angle>>,
    out: &mut Vec<Vec<Vec<Angle>>>,
) {
    let used: BTreeSet<&Angle> = current.iter().flatten().collect();
    let free: Vec<&Angle> = rest.iter().filter(|x| !used.contains(x)).collect();
    let Some(first) = free.first() else {
        out.push(current.clone());
        return;
    };
    let img0 = first.times_u(d as u64);
    let mut slots: Vec<Vec<&Angle>> = Vec::new();
    for t in target {
        if *t == img0 {
            slots.push(vec![*first]);
        } else {
            slots.push(free.iter().copied().filter(|x| x.times_u(d as u64) == *t).collect());
        }
    }
    let mut pick = vec![0usize; slots.len()];
    if slots.iter().any(|s| s.is_empty()) {
        return;
    }
    loop {
        let block = sorted_set(pick.iter().zip(&slots).map(|(&i, s)| s[i].clone()));
        if block.len() == target.len()
            && consecutive_preserving_by(&block, |x| x.times_u(d as u64))
            && fixed.iter().chain(current.iter()).all(|c| weakly_unlinked_sorted(&block, c))
        {
            current.push(block);
            partitions(rest, target, d, fixed, current, out);
            current.pop();
        }
        let mut k = 0;
        loop {
            if k == pick.len() {
                return;
            }
            pick[k] += 1;
            if pick[k] < slots[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// Component of `R/Z ∖ a` that holds every point of `b ∖ a`, if there is one.
pub(crate) fn common_component(a: &[Angle], b: &[Angle]) -> Option<usize> {
    let mut comp = None;
    for x in b.iter().filter(|x| a.binary_search(x).is_err()) {
        let c = component_index(a, x);
        if comp.is_some_and(|c0| c0 != c) {
            return None;
        }
        comp = Some(c);
    }
    comp
}
