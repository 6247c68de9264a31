//! Critical portraits over a schema and their transfer to `T(λ0)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::{sorted_set, weakly_unlinked_sorted, Angle};
use crate::lamination::{ClassJson, LaminationError, RationalLamination};
use crate::schema::{MappingSchema, SchemaAngle, SchemaError, SchemaJson, Vertex};
use crate::tuning::TuningContext;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum PortraitViolation {
    /// An unknown vertex.
    Fiber { piece: usize },
    /// CP1: fewer than two angles, or more than one image.
    Collapse { piece: usize },
    /// CP2.
    Linked { a: usize, b: usize },
    /// CP3.
    DegreeSum { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortraitReport {
    pub violations: Vec<PortraitViolation>,
}

impl PortraitReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PortraitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| format!("{v:?}")).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortraitError {
    #[error("invalid critical portrait: {0}")]
    Invalid(PortraitReport),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Lamination(#[from] LaminationError),
    #[error("portrait piece {0} lies neither in a critical class nor on one critical gap of the base")]
    Placement(usize),
}

/// A critical portrait `Θ = {Θ_1, …, Θ_m}` over a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalPortrait {
    schema: MappingSchema,
    pieces: Vec<(Vertex, Vec<Angle>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortraitJson {
    pub schema: SchemaJson,
    pub pieces: Vec<ClassJson>,
}

/// Where a selected piece sits relative to the base lamination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// Inside a critical class of the base.
    CriticalClass { class: Vec<Angle> },
    /// On the closure of critical gap `w` of the base.
    Gap { w: Vertex },
}

#[derive(Debug, Clone)]
pub struct PortraitSelection {
    pub portrait: CriticalPortrait,
    pub placement: Vec<Placement>,
    /// The gap-supported pieces pushed through the internal angles, over `T(λ0)`.
    pub pushforward: CriticalPortrait,
}

/// Report for raw pieces; never fails.
pub fn validate_pieces(schema: &MappingSchema, pieces: &[(Vertex, Vec<Angle>)]) -> PortraitReport {
    let mut violations = Vec::new();
    let mut sum = 0;
    for (j, (v, a)) in pieces.iter().enumerate() {
        if *v >= schema.len() {
            violations.push(PortraitViolation::Fiber { piece: j });
            continue;
        }
        let d = schema.delta(*v) as u64;
        let images = sorted_set(a.iter().map(|x| x.times_u(d)));
        if a.len() < 2 || images.len() != 1 {
            violations.push(PortraitViolation::Collapse { piece: j });
        }
        sum += a.len().saturating_sub(1);
    }
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let ((u, a), (v, b)) = (&pieces[i], &pieces[j]);
            let disjoint = a.iter().all(|x| b.binary_search(x).is_err());
            if u == v && !(disjoint && weakly_unlinked_sorted(a, b)) {
                violations.push(PortraitViolation::Linked { a: i, b: j });
            }
        }
    }
    let expected = schema.total_degree() as usize - 1;
    if sum != expected {
        violations.push(PortraitViolation::DegreeSum { found: sum, expected });
    }
    PortraitReport { violations }
}

impl CriticalPortrait {
    pub fn new(schema: MappingSchema, pieces: Vec<(Vertex, Vec<Angle>)>) -> Result<Self, PortraitError> {
        let mut pieces: Vec<(Vertex, Vec<Angle>)> = pieces.into_iter().map(|(v, a)| (v, sorted_set(a))).collect();
        pieces.sort();
        let report = validate_pieces(&schema, &pieces);
        if !report.is_valid() {
            return Err(PortraitError::Invalid(report));
        }
        Ok(CriticalPortrait { schema, pieces })
    }

    pub fn schema(&self) -> &MappingSchema {
        &self.schema
    }

    pub fn pieces(&self) -> &[(Vertex, Vec<Angle>)] {
        &self.pieces
    }

    pub fn validate(&self) -> PortraitReport {
        validate_pieces(&self.schema, &self.pieces)
    }

    /// True iff no angle of the portrait is periodic under `m_T`.
    pub fn is_preperiodic(&self) -> bool {
        self.pieces.iter().all(|(v, a)| {
            a.iter().all(|x| {
                let (_, pre) = self.schema.orbit(&SchemaAngle::new(*v, x.clone()));
                pre > 0
            })
        })
    }

    /// Membership of the portrait in the subbasis set `V_X`: the closed set
    /// `x` at vertex `v` is unlinked with every piece, which in particular
    /// means it avoids them.
    pub fn unlinked_neighborhood(&self, v: Vertex, x: &[Angle]) -> bool {
        let x = sorted_set(x.iter().cloned());
        self.pieces
            .iter()
            .filter(|(u, _)| *u == v)
            .all(|(_, a)| a.iter().all(|y| x.binary_search(y).is_err()) && weakly_unlinked_sorted(a, &x))
    }

    pub fn from_json(raw: &PortraitJson) -> Result<Self, PortraitError> {
        let schema = MappingSchema::from_json(&raw.schema)?;
        let pieces = raw
            .pieces
            .iter()
            .map(|p| Ok((schema.vertex(&p.vertex)?, p.angles.clone())))
            .collect::<Result<Vec<_>, SchemaError>>()?;
        Self::new(schema, pieces)
    }

    pub fn to_json(&self) -> PortraitJson {
        PortraitJson {
            schema: self.schema.to_json(),
            pieces: self
                .pieces
                .iter()
                .map(|(v, a)| ClassJson { vertex: self.schema.name(*v).to_string(), angles: a.clone() })
                .collect(),
        }
    }
}

/// The critical portrait of `lam` read off its first pullback, placed relative
/// to the base of `ctx`, with the gap-supported pieces pushed to `T(λ0)`.
pub fn portrait_from_lamination(
    lam: &RationalLamination,
    ctx: &TuningContext,
) -> Result<PortraitSelection, PortraitError> {
    let base = ctx.base();
    if !lam.contains(base)? {
        return Err(LaminationError::Inconsistent("lamination does not contain the base".into()).into());
    }
    let pieces: Vec<(Vertex, Vec<Angle>)> = lam.portrait().iter().map(|p| (p.vertex, p.angles.clone())).collect();
    let portrait = CriticalPortrait::new(lam.schema().clone(), pieces)?;
    let inv = base.critical_inventory()?;
    let crit_classes: Vec<(Vertex, Vec<Angle>)> =
        inv.crit_p.iter().map(|&c| (base.class(c).vertex, base.class(c).angles.clone())).collect();
    let t = ctx.child_schema();
    let mut placement = Vec::new();
    let mut pushed = Vec::new();
    for (j, (v, a)) in portrait.pieces().iter().enumerate() {
        if let Some((_, cls)) =
            crit_classes.iter().find(|(u, cls)| u == v && a.iter().all(|x| cls.binary_search(x).is_ok()))
        {
            placement.push(Placement::CriticalClass { class: cls.clone() });
            continue;
        }
        let gaps: Vec<Vertex> = t
            .vertices()
            .filter(|&w| ctx.induced().gaps[w].vertex == *v && a.iter().all(|x| ctx.angles().on_boundary(w, x)))
            .collect();
        let [w] = gaps[..] else {
            return Err(PortraitError::Placement(j));
        };
        let image = a.iter().map(|x| ctx.angles().alpha(w, x)).collect::<Result<Vec<_>, _>>()?;
        placement.push(Placement::Gap { w });
        pushed.push((w, image));
    }
    let pushforward = CriticalPortrait::new(t.clone(), pushed)?;
    Ok(PortraitSelection { portrait, placement, pushforward })
}
