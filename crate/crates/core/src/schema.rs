//! Mapping schemata `T = (|T|, σ, δ)` and the skew angle map `m_T`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::Angle;

/// Vertices are referred to by their index in the lexicographically sorted name list.
pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("invalid schema: {0}")]
    Invalid(ValidationReport),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("operation needs a reduced schema; vertex {0} has degree 1")]
    NotReduced(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    DuplicateVertex { vertex: String },
    SigmaMissing { vertex: String },
    DeltaMissing { vertex: String },
    UnknownTarget { vertex: String, target: String },
    StrayEntry { vertex: String },
    ZeroDegree { vertex: String },
    PeriodicProduct { cycle: Vec<String>, product: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub reduced: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid{}", if self.reduced { ", reduced" } else { "" });
        }
        let parts: Vec<String> = self.violations.iter().map(|v| format!("{v:?}")).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Wire form of a schema. Maps may be partial; `validate_json` reports gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaJson {
    pub vertices: Vec<String>,
    pub sigma: BTreeMap<String, String>,
    pub delta: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MappingSchema {
    names: Vec<String>,
    sigma: Vec<Vertex>,
    delta: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaClass {
    Disjoint,
    NonTrivialCriticalRelation,
}

/// A point `(v, θ)` of `|T| × Q/Z`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaAngle {
    pub vertex: Vertex,
    pub angle: Angle,
}

impl SchemaAngle {
    pub fn new(vertex: Vertex, angle: Angle) -> Self {
        SchemaAngle { vertex, angle }
    }
}

pub fn validate_json(raw: &SchemaJson) -> ValidationReport {
    let mut violations = Vec::new();
    if raw.vertices.is_empty() {
        violations.push(Violation::Empty);
    }
    let mut seen = BTreeSet::new();
    for v in &raw.vertices {
        if !seen.insert(v.clone()) {
            violations.push(Violation::DuplicateVertex { vertex: v.clone() });
        }
    }
    for v in &seen {
        match raw.sigma.get(v) {
            None => violations.push(Violation::SigmaMissing { vertex: v.clone() }),
            Some(t) if !seen.contains(t) => {
                violations.push(Violation::UnknownTarget { vertex: v.clone(), target: t.clone() })
            }
            _ => {}
        }
        match raw.delta.get(v) {
            None => violations.push(Violation::DeltaMissing { vertex: v.clone() }),
            Some(0) => violations.push(Violation::ZeroDegree { vertex: v.clone() }),
            _ => {}
        }
    }
    for k in raw.sigma.keys().chain(raw.delta.keys()) {
        if !seen.contains(k) {
            violations.push(Violation::StrayEntry { vertex: k.clone() });
        }
    }
    let total = violations.is_empty();
    if total {
        // σ and δ are total here, so cycles can be walked safely.
        let names: Vec<&String> = seen.iter().collect();
        let index = |n: &String| names.iter().position(|m| *m == n).unwrap();
        let sigma: Vec<usize> = names.iter().map(|v| index(&raw.sigma[*v])).collect();
        let delta: Vec<u32> = names.iter().map(|v| raw.delta[*v]).collect();
        for cycle in cycles(&sigma) {
            let product: u64 = cycle.iter().map(|&v| delta[v] as u64).product();
            if product < 2 {
                violations.push(Violation::PeriodicProduct {
                    cycle: cycle.iter().map(|&v| names[v].clone()).collect(),
                    product,
                });
            }
        }
    }
    let reduced = total && raw.delta.values().all(|&d| d >= 2);
    ValidationReport { violations, reduced }
}

/// Periodic cycles of a self-map of `0..n`, each starting at its smallest element.
fn cycles(sigma: &[usize]) -> Vec<Vec<usize>> {
    let n = sigma.len();
    let mut out = Vec::new();
    let mut done = vec![false; n];
    for start in 0..n {
        // Walk n steps to land on a cycle, then read it off.
        let mut v = start;
        for _ in 0..n {
            v = sigma[v];
        }
        let mut cyc = vec![v];
        let mut w = sigma[v];
        while w != v {
            cyc.push(w);
            w = sigma[w];
        }
        let m = *cyc.iter().min().unwrap();
        if !done[m] {
            for &c in &cyc {
                done[c] = true;
            }
            let pos = cyc.iter().position(|&c| c == m).unwrap();
            cyc.rotate_left(pos);
            out.push(cyc);
        }
    }
    out.sort();
    out
}

impl MappingSchema {
    /// Builds a schema from `(name, σ(name), δ(name))` triples and validates it.
    pub fn new<S: AsRef<str>>(entries: &[(S, S, u32)]) -> Result<Self, SchemaError> {
        let raw = SchemaJson {
            vertices: entries.iter().map(|e| e.0.as_ref().to_string()).collect(),
            sigma: entries.iter().map(|e| (e.0.as_ref().to_string(), e.1.as_ref().to_string())).collect(),
            delta: entries.iter().map(|e| (e.0.as_ref().to_string(), e.2)).collect(),
        };
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &SchemaJson) -> Result<Self, SchemaError> {
        let report = validate_json(raw);
        if !report.is_valid() {
            return Err(SchemaError::Invalid(report));
        }
        let mut names: Vec<String> = raw.vertices.clone();
        names.sort();
        let index = |n: &str| names.binary_search_by(|m| m.as_str().cmp(n)).unwrap();
        let sigma = names.iter().map(|v| index(&raw.sigma[v])).collect();
        let delta = names.iter().map(|v| raw.delta[v]).collect();
        Ok(MappingSchema { names, sigma, delta })
    }

    pub fn to_json(&self) -> SchemaJson {
        SchemaJson {
            vertices: self.names.clone(),
            sigma: (0..self.len()).map(|v| (self.names[v].clone(), self.names[self.sigma[v]].clone())).collect(),
            delta: (0..self.len()).map(|v| (self.names[v].clone(), self.delta[v])).collect(),
        }
    }

    /// The single-vertex schema `({pt}, id, d)`.
    pub fn trivial(d: u32) -> Self {
        Self::new(&[("pt", "pt", d)]).expect("trivial schema")
    }

    /// The capture schema of total degree `d`: `v1 → v1` of degree 2 and
    /// `v2 → v1` of degree `d − 1`.
    pub fn capture(d: u32) -> Self {
        Self::new(&[("v1", "v1", 2), ("v2", "v1", d - 1)]).expect("capture schema")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn vertices(&self) -> std::ops::Range<Vertex> {
        0..self.names.len()
    }

    pub fn name(&self, v: Vertex) -> &str {
        &self.names[v]
    }

    pub fn vertex(&self, name: &str) -> Result<Vertex, SchemaError> {
        self.names.binary_search_by(|m| m.as_str().cmp(name)).map_err(|_| SchemaError::UnknownVertex(name.to_string()))
    }

    pub fn sigma(&self, v: Vertex) -> Vertex {
        self.sigma[v]
    }

    pub fn delta(&self, v: Vertex) -> u32 {
        self.delta[v]
    }

    pub fn sigma_iter(&self, v: Vertex, n: usize) -> Vertex {
        (0..n).fold(v, |w, _| self.sigma[w])
    }

    /// Product of degrees along `v, σ(v), …, σ^{n−1}(v)`.
    pub fn degree_along(&self, v: Vertex, n: usize) -> u64 {
        let mut w = v;
        let mut d = 1u64;
        for _ in 0..n {
            d *= self.delta[w] as u64;
            w = self.sigma[w];
        }
        d
    }

    /// σ-period of `v`, or `None` if `v` is strictly preperiodic.
    pub fn period(&self, v: Vertex) -> Option<usize> {
        let mut w = self.sigma[v];
        for n in 1..=self.len() {
            if w == v {
                return Some(n);
            }
            w = self.sigma[w];
        }
        None
    }

    pub fn validate(&self) -> ValidationReport {
        validate_json(&self.to_json())
    }

    pub fn is_reduced(&self) -> bool {
        self.delta.iter().all(|&d| d >= 2)
    }

    pub fn total_degree(&self) -> u32 {
        1 + self.delta.iter().map(|d| d - 1).sum::<u32>()
    }

    pub fn classify(&self) -> Result<SchemaClass, SchemaError> {
        if let Some(v) = self.vertices().find(|&v| self.delta[v] < 2) {
            return Err(SchemaError::NotReduced(self.names[v].clone()));
        }
        let critical = |v: Vertex| self.delta[v] >= 2;
        if self.delta.iter().any(|&d| d >= 3) {
            return Ok(SchemaClass::NonTrivialCriticalRelation);
        }
        for v in self.vertices().filter(|&v| critical(v)) {
            let mut w = self.sigma[v];
            for _ in 0..self.len() {
                if w != v && critical(w) {
                    return Ok(SchemaClass::NonTrivialCriticalRelation);
                }
                w = self.sigma[w];
            }
        }
        debug_assert!(self
            .vertices()
            .filter(|&v| critical(v))
            .all(|v| self.period(v).map(|p| self.degree_along(v, p)) == Some(2)));
        Ok(SchemaClass::Disjoint)
    }

    pub fn schema_map(&self, p: &SchemaAngle) -> Result<SchemaAngle, SchemaError> {
        if p.vertex >= self.len() {
            return Err(SchemaError::UnknownVertex(p.vertex.to_string()));
        }
        Ok(self.step(p))
    }

    /// `m_T` without the bounds check.
    pub fn step(&self, p: &SchemaAngle) -> SchemaAngle {
        SchemaAngle { vertex: self.sigma[p.vertex], angle: p.angle.times_u(self.delta[p.vertex] as u64) }
    }

    pub fn step_n(&self, p: &SchemaAngle, n: usize) -> SchemaAngle {
        (0..n).fold(p.clone(), |q, _| self.step(&q))
    }

    /// Orbit of `p` under `m_T` up to the first repetition: `(orbit, preperiod)`.
    pub fn orbit(&self, p: &SchemaAngle) -> (Vec<SchemaAngle>, usize) {
        let mut seen = std::collections::HashMap::new();
        let mut out = Vec::new();
        let mut q = p.clone();
        loop {
            if let Some(&i) = seen.get(&q) {
                return (out, i);
            }
            seen.insert(q.clone(), out.len());
            let next = self.step(&q);
            out.push(q);
            q = next;
        }
    }

    /// The same schema with vertices renamed through `rename`.
    pub fn relabel(&self, rename: impl Fn(&str) -> String) -> Self {
        let entries: Vec<(String, String, u32)> = self
            .vertices()
            .map(|v| (rename(&self.names[v]), rename(&self.names[self.sigma[v]]), self.delta[v]))
            .collect();
        Self::new(&entries).expect("relabeling keeps validity")
    }
}

impl Serialize for MappingSchema {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MappingSchema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = SchemaJson::deserialize(d)?;
        Self::from_json(&raw).map_err(serde::de::Error::custom)
    }
}
