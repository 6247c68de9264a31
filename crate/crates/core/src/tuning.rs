//! Combinatorial tuning and straightening relative to a base lamination with
//! critical Fatou gaps.
//!
//! Tuning replaces each class of a child lamination over `T(λ0)` by the union
//! of the base classes that the inverse internal angle map sends its angles
//! to, and closes the result under images and pullbacks over the base schema.
//! Straightening reads the identifications a lamination `λ ⊇ λ0` induces on
//! the boundaries of the critical gaps through the internal angles.

use std::sync::Arc;

use crate::angles::{sorted_set, Angle};
use crate::lamination::{Classification, InducedSchema, InternalAngleSystem, LaminationError, RationalLamination};
use crate::schema::{MappingSchema, SchemaAngle, Vertex};

#[derive(Debug, Clone)]
pub struct TuningContext {
    base: Arc<RationalLamination>,
    angles: InternalAngleSystem,
}

/// Outcome of tuning a child: the tuned lamination's primitivity, and whether
/// the hypothesis forcing it was met (a primitive child whose periodic gaps
/// all have period at least the threshold).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitivityTransfer {
    pub primitive: bool,
    pub hypothesis_met: bool,
    pub min_child_period: Option<usize>,
}

impl TuningContext {
    pub fn new(base: Arc<RationalLamination>) -> Result<Self, LaminationError> {
        let angles = base.internal_angles()?;
        Ok(TuningContext { base, angles })
    }

    pub fn base(&self) -> &Arc<RationalLamination> {
        &self.base
    }

    pub fn angles(&self) -> &InternalAngleSystem {
        &self.angles
    }

    pub fn induced(&self) -> &InducedSchema {
        self.angles.induced()
    }

    /// The schema `T(λ0)` that children live over.
    pub fn child_schema(&self) -> &MappingSchema {
        &self.angles.induced().schema
    }

    fn gap_vertex(&self, w: Vertex) -> Vertex {
        self.induced().gaps[w].vertex
    }

    /// The base class realizing internal angle `theta` on gap `w`.
    fn realize(&self, w: Vertex, theta: &Angle) -> Result<Vec<Angle>, LaminationError> {
        let x = self.angles.alpha_inv(w, theta)?;
        self.base.class_of(&SchemaAngle::new(self.gap_vertex(w), x))
    }

    /// A lamination over the base schema whose straightening is `child`.
    pub fn tune(&self, child: &RationalLamination, depth: usize) -> Result<RationalLamination, LaminationError> {
        if child.schema() != self.child_schema() {
            return Err(LaminationError::SchemaMismatch("child must live over T(λ0)".into()));
        }
        let mut gens: Vec<(Vertex, Vec<Angle>)> = Vec::new();
        for c in child.classes().iter().filter(|c| c.level == 0) {
            let mut union = Vec::new();
            for theta in &c.angles {
                union.extend(self.realize(c.vertex, theta)?);
            }
            gens.push((self.gap_vertex(c.vertex), sorted_set(union)));
        }
        // Keep base generators that no child class absorbed.
        for (v, a) in self.base.generators() {
            let absorbed = gens.iter().any(|(u, g)| u == v && a.iter().any(|x| g.binary_search(x).is_ok()));
            if !absorbed {
                gens.push((*v, a.clone()));
            }
        }
        RationalLamination::build(self.base.schema().clone(), gens, depth)
    }

    /// The lamination over `T(λ0)` induced by `lam` on the critical gap
    /// boundaries, built to `depth`.
    pub fn straighten(&self, lam: &RationalLamination, depth: usize) -> Result<RationalLamination, LaminationError> {
        if !lam.contains(&self.base)? {
            return Err(LaminationError::Inconsistent("lamination does not contain the base".into()));
        }
        let t = self.child_schema();
        let mut gens: Vec<(Vertex, Vec<Angle>)> = Vec::new();
        for c in lam.classes().iter().filter(|c| c.level == 0) {
            for w in t.vertices().filter(|&w| self.gap_vertex(w) == c.vertex) {
                let vals = sorted_set(c.angles.iter().filter_map(|x| self.angles.alpha(w, x).ok()));
                if vals.len() >= 2 {
                    gens.push((w, vals));
                }
            }
        }
        RationalLamination::build(t.clone(), gens, depth)
    }

    /// Tunes `child` and classifies the result. The tuned lamination is
    /// primitive whenever the child is and every periodic Fatou gap of the
    /// child has period at least `threshold`; that implication is checked when
    /// the hypothesis holds.
    pub fn primitivity_transfer(
        &self,
        child: &RationalLamination,
        depth: usize,
        threshold: usize,
    ) -> Result<(PrimitivityTransfer, Classification), LaminationError> {
        let tuned = self.tune(child, depth)?;
        let class = tuned.classify()?;
        let child_primitive = child.classify()?.primitive;
        let min_child_period =
            child.fatou_gaps(child.depth())?.iter().filter(|g| g.is_periodic()).map(|g| g.period).min();
        let hypothesis_met = child_primitive && min_child_period.is_none_or(|p| p >= threshold);
        if hypothesis_met && !class.primitive {
            return Err(LaminationError::Inconsistent(
                "tuning a primitive child above the period threshold lost primitivity".into(),
            ));
        }
        Ok((PrimitivityTransfer { primitive: class.primitive, hypothesis_met, min_child_period }, class))
    }
}
