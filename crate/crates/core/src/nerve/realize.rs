//! Realization of a nerve inside c0 over `Q_p`: each simplex becomes the
//! clopen ball around its vertices' embedded positions.

use std::sync::Arc;

use super::{NerveComplex, NerveError};
use crate::padic::GammaValue;
use crate::ultraspace::{affine_rank, C0Vector, Embedding};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedSimplex {
    pub vertices: Vec<usize>,
    /// Point whose embedded position is the center of the ball.
    pub center: usize,
    pub radius: GammaValue,
    /// Points of the space lying in the ball.
    pub support: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Realization {
    embedding: Arc<Embedding>,
    simplexes: Vec<RealizedSimplex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct UniformityReport {
    pub sup_diam: GammaValue,
    /// `None` when there is only one simplex and the infimum is vacuous.
    pub inf_dist: Option<GammaValue>,
    pub is_uniform: bool,
}

impl Realization {
    pub fn new(nerve: &NerveComplex, embedding: Arc<Embedding>) -> Self {
        let simplexes = nerve
            .maximal_simplexes()
            .iter()
            .map(|vertices| {
                let support = nerve.support(vertices);
                let radius = diameter(&embedding, &support);
                RealizedSimplex { vertices: vertices.clone(), center: vertices[0], radius, support }
            })
            .collect();
        Realization { embedding, simplexes }
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn simplexes(&self) -> &[RealizedSimplex] {
        &self.simplexes
    }

    pub fn position(&self, vertex: usize) -> &C0Vector {
        self.embedding.vector(vertex)
    }

    /// Distance between the embedded positions of two vertices.
    pub fn distance(&self, a: usize, b: usize) -> GammaValue {
        self.embedding.distance(a, b)
    }

    /// Largest simplex diameter and smallest gap between distinct simplexes.
    pub fn check_uniform(&self) -> Result<UniformityReport, NerveError> {
        if self.simplexes.is_empty() {
            return Err(NerveError::EmptyComplex);
        }
        let sup_diam = self
            .simplexes
            .iter()
            .map(|s| diameter(&self.embedding, &s.support))
            .max()
            .unwrap_or(GammaValue::Infinity);
        let mut inf_dist: Option<GammaValue> = None;
        for (i, a) in self.simplexes.iter().enumerate() {
            for b in &self.simplexes[i + 1..] {
                for &x in &a.support {
                    for &y in &b.support {
                        let d = self.embedding.distance(x, y);
                        inf_dist = Some(inf_dist.map_or(d, |m| m.min(d)));
                    }
                }
            }
        }
        let is_uniform = inf_dist.is_none_or(|d| !d.is_zero());
        Ok(UniformityReport { sup_diam, inf_dist, is_uniform })
    }

    /// Simplexes whose vertex positions are not affinely independent.
    pub fn affine_defects(&self) -> Vec<usize> {
        self.simplexes
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let positions: Vec<&C0Vector> = s.vertices.iter().map(|&v| self.position(v)).collect();
                affine_rank(&positions) + 1 != s.vertices.len()
            })
            .map(|(i, _)| i)
            .collect()
    }
}

fn diameter(embedding: &Embedding, support: &[usize]) -> GammaValue {
    let mut diam = GammaValue::Infinity;
    for (i, &x) in support.iter().enumerate() {
        for &y in &support[i + 1..] {
            diam = diam.max(embedding.distance(x, y));
        }
    }
    diam
}

/// The p^j-subdivision: each simplex of radius `r` is replaced by the balls
/// of radius `r * p^-j` meeting its support. The vertices of a piece are the
/// support points it contains.
pub fn subdivide(realization: &Realization, j: i64) -> Result<Realization, NerveError> {
    if j < 1 {
        return Err(NerveError::SubdivisionExponent(j));
    }
    let embedding = &realization.embedding;
    let mut simplexes = Vec::new();
    for parent in &realization.simplexes {
        let radius = parent.radius.scaled(-j);
        let mut remaining = parent.support.clone();
        while let Some(&center) = remaining.first() {
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                remaining.iter().partition(|&&y| embedding.distance(center, y) <= radius);
            simplexes.push(RealizedSimplex { vertices: inside.clone(), center, radius, support: inside });
            remaining = outside;
        }
    }
    Ok(Realization { embedding: Arc::clone(embedding), simplexes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nerve::{build_nerve, scale_cover};
    use crate::padic::PAdic;
    use crate::ultraspace::UltraSpace;

    fn residues(p: u32, values: &[i64]) -> UltraSpace {
        let points: Vec<PAdic> = values.iter().map(|&v| PAdic::from_i64(p, v, 8).unwrap()).collect();
        UltraSpace::from_points(values.iter().map(|v| v.to_string()).collect(), &points).unwrap()
    }

    fn realize(space: &UltraSpace, j: i64, k: i64) -> (NerveComplex, Realization) {
        let nerve = build_nerve(space, &scale_cover(space, j), k, Some(GammaValue::Finite(j)), 0).unwrap();
        let embedding = Arc::new(Embedding::new(space).unwrap());
        let realization = Realization::new(&nerve, embedding);
        (nerve, realization)
    }

    // Exhaustive scan over point pairs, grouped by simplex.
    fn scan(space: &UltraSpace, r: &Realization) -> (GammaValue, Option<GammaValue>) {
        let owner = |x: usize| r.simplexes().iter().position(|s| s.support.contains(&x)).unwrap();
        let mut sup = GammaValue::Infinity;
        let mut inf = None;
        for x in 0..space.len() {
            for y in 0..space.len() {
                if x == y {
                    continue;
                }
                if owner(x) == owner(y) {
                    sup = sup.max(space.dist(x, y));
                } else {
                    inf = Some(inf.map_or(space.dist(x, y), |m: GammaValue| m.min(space.dist(x, y))));
                }
            }
        }
        (sup, inf)
    }

    #[test]
    fn single_simplex_has_vacuous_gap() {
        let s = residues(2, &[0, 1, 2, 3]);
        let (_, r) = realize(&s, 0, 0);
        let report = r.check_uniform().unwrap();
        assert_eq!(report.inf_dist, None);
        assert_eq!(report.sup_diam, GammaValue::ONE);
        assert!(report.is_uniform);
    }

    #[test]
    fn two_simplexes_gap_and_diameter() {
        // {0, 9} and {3, 12}: diameters 3^-2, gap 3^-1.
        let s = residues(3, &[0, 9, 3, 12]);
        let (nerve, r) = realize(&s, 2, 0);
        assert_eq!(nerve.maximal_simplexes().len(), 2);
        let report = r.check_uniform().unwrap();
        assert_eq!(report.sup_diam, GammaValue::Finite(2));
        assert_eq!(report.inf_dist, Some(GammaValue::Finite(1)));
        assert_eq!((report.sup_diam, report.inf_dist), scan(&s, &r));
    }

    #[test]
    fn uniform_witnesses_match_scan() {
        let s = residues(2, &[0, 1, 2, 3, 5, 8, 13, 21, 34]);
        for j in 0..7 {
            for k in 0..3 {
                let (_, r) = realize(&s, j, k);
                let report = r.check_uniform().unwrap();
                assert_eq!((report.sup_diam, report.inf_dist), scan(&s, &r), "j={j} k={k}");
                assert!(report.inf_dist.is_none_or(|d| d > report.sup_diam));
                assert!(r.affine_defects().is_empty());
            }
        }
    }

    #[test]
    fn subdivision_by_digit_prefix() {
        let s = residues(3, &[0, 1, 2]);
        let (_, r) = realize(&s, 0, 0);
        assert_eq!(r.simplexes()[0].radius, GammaValue::ONE);
        let sub = subdivide(&r, 1).unwrap();
        // Digit-prefix oracle: group by the first digit.
        assert_eq!(sub.simplexes().len(), 3);
        let mut supports: Vec<Vec<usize>> = sub.simplexes().iter().map(|s| s.support.clone()).collect();
        supports.sort();
        assert_eq!(supports, vec![vec![0], vec![1], vec![2]]);
        assert!(subdivide(&r, 0).is_err());
    }

    #[test]
    fn singleton_support_stays_whole() {
        let s = residues(5, &[4]);
        let (_, r) = realize(&s, 0, 0);
        for j in 1..4 {
            assert_eq!(subdivide(&r, j).unwrap().simplexes().len(), 1);
        }
    }

    #[test]
    fn subdivisions_compose() {
        let s = residues(2, &(0..32).map(|x| x * 3 + 1).collect::<Vec<_>>());
        let (_, r) = realize(&s, 1, 1);
        for j1 in 1..3 {
            for j2 in 1..3 {
                let twice = subdivide(&subdivide(&r, j1).unwrap(), j2).unwrap();
                let once = subdivide(&r, j1 + j2).unwrap();
                let mut a = twice.simplexes().to_vec();
                let mut b = once.simplexes().to_vec();
                a.sort_by(|x, y| x.support.cmp(&y.support));
                b.sort_by(|x, y| x.support.cmp(&y.support));
                assert_eq!(a, b);
                let mut points: Vec<usize> = a.iter().flat_map(|x| x.support.clone()).collect();
                points.sort();
                assert_eq!(points, (0..32).collect::<Vec<_>>());
            }
        }
    }
}
