//! Complementary regions of a finite family of unlinked classes in one fiber.
//!
//! The class points cut the circle into arcs; arc `i` runs from `points[i]`
//! to `points[i + 1]`. Walking along the boundary of a region, the arc that
//! ends at a point `x` of class `C` is followed by the arc that starts at the
//! cyclic predecessor of `x` in `C`. The cycles of that permutation are the
//! regions.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::angles::Angle;

use super::ClassId;

#[derive(Debug, Clone)]
pub(crate) struct Faces {
    pub points: Vec<Angle>,
    pub owner: Vec<ClassId>,
    pub arc_face: Vec<usize>,
    pub face_arcs: Vec<Vec<usize>>,
}

impl Faces {
    /// `pts` must contain every point of every class that occurs in it.
    pub fn new(mut pts: Vec<(Angle, ClassId)>) -> Faces {
        pts.sort();
        let n = pts.len();
        let (points, owner): (Vec<Angle>, Vec<ClassId>) = pts.into_iter().unzip();
        if n == 0 {
            return Faces { points, owner, arc_face: vec![], face_arcs: vec![vec![]] };
        }
        let mut members: std::collections::HashMap<ClassId, Vec<usize>> = Default::default();
        for (i, &c) in owner.iter().enumerate() {
            members.entry(c).or_default().push(i);
        }
        let mut prev = vec![0; n];
        for idx in members.values() {
            for (k, &i) in idx.iter().enumerate() {
                prev[i] = idx[(k + idx.len() - 1) % idx.len()];
            }
        }
        let next_arc = |i: usize| prev[(i + 1) % n];
        let mut arc_face = vec![usize::MAX; n];
        let mut face_arcs = Vec::new();
        for start in 0..n {
            if arc_face[start] != usize::MAX {
                continue;
            }
            let id = face_arcs.len();
            let mut arcs = Vec::new();
            let mut i = start;
            while arc_face[i] == usize::MAX {
                arc_face[i] = id;
                arcs.push(i);
                i = next_arc(i);
            }
            arcs.sort_unstable();
            face_arcs.push(arcs);
        }
        Faces { points, owner, arc_face, face_arcs }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn face_count(&self) -> usize {
        self.face_arcs.len()
    }

    pub fn index_of(&self, x: &Angle) -> Option<usize> {
        self.points.binary_search(x).ok()
    }

    fn last_index(&self, p: usize) -> usize {
        if p == 0 {
            self.points.len() - 1
        } else {
            p - 1
        }
    }

    /// Face containing the germ just after `x`.
    pub fn face_plus(&self, x: &Angle) -> usize {
        if self.points.is_empty() {
            return 0;
        }
        let p = self.points.partition_point(|a| a <= x);
        self.arc_face[self.last_index(p)]
    }

    /// Face containing the germ just before `x`.
    pub fn face_minus(&self, x: &Angle) -> usize {
        if self.points.is_empty() {
            return 0;
        }
        let p = self.points.partition_point(|a| a < x);
        self.arc_face[self.last_index(p)]
    }

    pub fn touches(&self, face: usize, x: &Angle) -> bool {
        self.face_plus(x) == face || self.face_minus(x) == face
    }

    pub fn arc(&self, i: usize) -> (&Angle, &Angle) {
        (&self.points[i], &self.points[(i + 1) % self.points.len()])
    }

    pub fn arc_length(&self, i: usize) -> BigRational {
        let (a, b) = self.arc(i);
        a.arc_to(b)
    }

    pub fn face_length(&self, face: usize) -> BigRational {
        if self.points.is_empty() {
            return BigRational::one();
        }
        self.face_arcs[face].iter().fold(BigRational::zero(), |acc, &i| acc + self.arc_length(i))
    }

    /// Smallest angle `x` with the germ `(x, +)` in the face.
    pub fn germ(&self, face: usize) -> Angle {
        match self.face_arcs[face].first() {
            Some(&i) => self.points[i].clone(),
            None => Angle::zero(),
        }
    }

    /// Classes with an edge on the face, ascending.
    pub fn face_classes(&self, face: usize) -> Vec<ClassId> {
        let n = self.points.len();
        let mut out: Vec<ClassId> =
            self.face_arcs[face].iter().flat_map(|&i| [self.owner[i], self.owner[(i + 1) % n]]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Class points on the boundary of the face, ascending.
    pub fn face_points(&self, face: usize) -> Vec<Angle> {
        let n = self.points.len();
        let mut out: Vec<usize> = self.face_arcs[face].iter().flat_map(|&i| [i, (i + 1) % n]).collect();
        out.sort_unstable();
        out.dedup();
        out.into_iter().map(|i| self.points[i].clone()).collect()
    }

    /// A point strictly inside the first arc of the face.
    pub fn interior_point(&self, face: usize) -> Angle {
        match self.face_arcs[face].first() {
            None => Angle::new(1, 2),
            Some(&i) => {
                let (a, _) = self.arc(i);
                let half = self.arc_length(i) / BigRational::from_integer(2.into());
                Angle::from_ratio(a.as_ratio() + half)
            }
        }
    }
}

/// First crossing pair found by a stack scan over the sorted points of one fiber.
pub(crate) fn find_crossing(pts: &[(Angle, ClassId)], size: impl Fn(ClassId) -> usize) -> Option<(ClassId, ClassId)> {
    let mut stack: Vec<ClassId> = Vec::new();
    let mut left: std::collections::HashMap<ClassId, usize> = Default::default();
    for (_, c) in pts {
        match left.get_mut(c) {
            Some(k) => {
                if stack.last() != Some(c) {
                    return Some((*c, *stack.last().expect("open class")));
                }
                *k -= 1;
                if *k == 0 {
                    stack.pop();
                }
            }
            None => {
                let k = size(*c) - 1;
                left.insert(*c, k);
                if k > 0 {
                    stack.push(*c);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::ang;

    #[test]
    fn basilica_level_one_regions() {
        let pts = vec![(ang("1/3"), 0), (ang("2/3"), 0), (ang("1/6"), 1), (ang("5/6"), 1)];
        let f = Faces::new(pts);
        assert_eq!(f.face_count(), 3);
        let crit = f.face_plus(&ang("1/4"));
        assert_eq!(f.face_plus(&ang("3/4")), crit);
        assert_ne!(f.face_plus(&ang("1/2")), crit);
        assert_ne!(f.face_plus(&ang("0/1")), crit);
        assert_eq!(f.face_length(crit), BigRational::new(1.into(), 3.into()));
        assert_eq!(f.face_classes(crit), vec![0, 1]);
        assert!(f.touches(crit, &ang("1/3")));
        assert!(!f.touches(f.face_plus(&ang("1/2")), &ang("1/6")));
    }

    #[test]
    fn crossing_scan() {
        let mut pts = vec![(ang("1/7"), 0), (ang("2/7"), 0), (ang("4/7"), 0)];
        pts.extend([(ang("3/7"), 1), (ang("5/7"), 1), (ang("6/7"), 1)]);
        pts.sort();
        assert!(find_crossing(&pts, |_| 3).is_some());
        let ok = vec![(ang("1/6"), 1), (ang("1/3"), 0), (ang("2/3"), 0), (ang("5/6"), 1)];
        assert!(find_crossing(&ok, |_| 2).is_none());
    }
}
