//! Scale covers by clopen balls and the p^k-nerves built on them.

mod realize;

pub use realize::{subdivide, RealizedSimplex, Realization, UniformityReport};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::padic::GammaValue;
use crate::ultraspace::UltraSpace;
use crate::union_find::DisjointSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NerveError {
    #[error("empty tower range: {0} > {1}")]
    EmptyRange(i64, i64),
    #[error("threshold {threshold} is below the largest block diameter {diameter}")]
    ThresholdBelowDiameter { threshold: GammaValue, diameter: GammaValue },
    #[error("threshold relation is not transitive on blocks {0} and {1}")]
    NotTransitive(usize, usize),
    #[error("the complex has no simplexes")]
    EmptyComplex,
    #[error("subdivision exponent must be at least 1, got {0}")]
    SubdivisionExponent(i64),
    #[error("block of point {0} at the finer level is not inside a block of the coarser level")]
    NotNested(usize),
    #[error(transparent)]
    Space(#[from] crate::ultraspace::SpaceError),
}

/// Partition of a space into the closed balls of radius `p^-j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleCover {
    scale: i64,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl ScaleCover {
    /// The exponent `j` of the radius `p^-j`.
    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn radius(&self) -> GammaValue {
        GammaValue::Finite(self.scale)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the block holding `point`.
    pub fn block_of(&self, point: usize) -> usize {
        self.block_of[point]
    }

    /// Smallest member of the block holding `point`.
    pub fn representative_of(&self, point: usize) -> usize {
        self.blocks[self.block_of[point]][0]
    }

    pub fn representatives(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b[0]).collect()
    }

    /// Largest block diameter; `Infinity` when every block is a singleton.
    pub fn sup_diameter(&self, space: &UltraSpace) -> GammaValue {
        self.blocks
            .iter()
            .map(|b| space.diameter(b))
            .max()
            .unwrap_or(GammaValue::Infinity)
    }

    /// True when every block of `self` lies inside a block of `coarse`.
    pub fn refines(&self, coarse: &ScaleCover) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&x| coarse.block_of[x] == coarse.block_of[b[0]]))
    }
}

pub fn scale_cover(space: &UltraSpace, j: i64) -> ScaleCover {
    let blocks = space.balls(GammaValue::Finite(j));
    let mut block_of = vec![0; space.len()];
    for (index, block) in blocks.iter().enumerate() {
        for &x in block {
            block_of[x] = index;
        }
    }
    ScaleCover { scale: j, blocks, block_of }
}

/// Covers at scales `j_min..=j_max`, coarsest first.
pub fn cover_tower(space: &UltraSpace, j_min: i64, j_max: i64) -> Result<Vec<ScaleCover>, NerveError> {
    if j_min > j_max {
        return Err(NerveError::EmptyRange(j_min, j_max));
    }
    Ok((j_min..=j_max).map(|j| scale_cover(space, j)).collect())
}

/// Abstract simplicial complex whose vertices are the blocks of a cover,
/// identified by their representatives. Simplexes are the subsets of the
/// maximal simplexes, which partition the vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NerveComplex {
    level: usize,
    cover: ScaleCover,
    threshold: GammaValue,
    maximal: Vec<Vec<usize>>,
    simplex_of: BTreeMap<usize, usize>,
}

/// Builds the nerve of `cover` at threshold `p^k * b`. Without `b`, the
/// largest block diameter is used.
pub fn build_nerve(
    space: &UltraSpace,
    cover: &ScaleCover,
    k: i64,
    b: Option<GammaValue>,
    level: usize,
) -> Result<NerveComplex, NerveError> {
    let diameter = cover.sup_diameter(space);
    let threshold = b.unwrap_or(diameter).scaled(k);
    if threshold < diameter {
        return Err(NerveError::ThresholdBelowDiameter { threshold, diameter });
    }
    let blocks = cover.blocks();
    let n = blocks.len();
    let mut adjacent = vec![vec![false; n]; n];
    let mut ds = DisjointSet::new(n);
    for a in 0..n {
        adjacent[a][a] = true;
        for c in a + 1..n {
            if space.set_distance(&blocks[a], &blocks[c]) <= threshold {
                adjacent[a][c] = true;
                adjacent[c][a] = true;
                ds.union(a, c);
            }
        }
    }
    let classes = ds.classes();
    for class in &classes {
        for &a in class {
            for &c in class {
                if !adjacent[a][c] {
                    return Err(NerveError::NotTransitive(blocks[a][0], blocks[c][0]));
                }
            }
        }
    }
    let maximal: Vec<Vec<usize>> = classes
        .iter()
        .map(|class| class.iter().map(|&b| blocks[b][0]).collect())
        .collect();
    let simplex_of = maximal
        .iter()
        .enumerate()
        .flat_map(|(s, vs)| vs.iter().map(move |&v| (v, s)))
        .collect();
    Ok(NerveComplex { level, cover: cover.clone(), threshold, maximal, simplex_of })
}

impl NerveComplex {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn cover(&self) -> &ScaleCover {
        &self.cover
    }

    pub fn scale(&self) -> i64 {
        self.cover.scale
    }

    pub fn threshold(&self) -> GammaValue {
        self.threshold
    }

    /// Vertex ids (block representatives) in increasing order.
    pub fn vertices(&self) -> Vec<usize> {
        self.simplex_of.keys().copied().collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.simplex_of.len()
    }

    pub fn maximal_simplexes(&self) -> &[Vec<usize>] {
        &self.maximal
    }

    /// Index of the maximal simplex containing vertex `v`.
    pub fn simplex_index(&self, v: usize) -> Option<usize> {
        self.simplex_of.get(&v).copied()
    }

    /// Maximal simplex containing the block of `point`.
    pub fn simplex_of_point(&self, point: usize) -> &[usize] {
        &self.maximal[self.simplex_of[&self.cover.representative_of(point)]]
    }

    /// A vertex set spans a simplex iff it sits inside one maximal simplex.
    pub fn is_simplex(&self, vertices: &[usize]) -> bool {
        let mut owners = vertices.iter().map(|v| self.simplex_of.get(v));
        match owners.next() {
            None => false,
            Some(None) => false,
            Some(Some(first)) => owners.all(|o| o == Some(first)),
        }
    }

    /// Points covered by the blocks of a simplex.
    pub fn support(&self, simplex: &[usize]) -> Vec<usize> {
        let mut points: Vec<usize> = simplex
            .iter()
            .flat_map(|&v| self.cover.blocks[self.cover.block_of[v]].iter().copied())
            .collect();
        points.sort_unstable();
        points
    }

    pub fn dim_l(&self) -> usize {
        self.maximal.iter().map(|s| s.len() - 1).max().unwrap_or(0)
    }

    /// Number of simplexes of each dimension, faces included.
    pub fn face_counts(&self) -> Vec<u128> {
        let mut counts = vec![0u128; self.dim_l() + 1];
        for simplex in &self.maximal {
            let size = simplex.len() as u128;
            let mut choose = 1u128;
            for d in 0..simplex.len() {
                choose = choose * (size - d as u128) / (d as u128 + 1);
                counts[d] += choose;
            }
        }
        counts
    }

    /// Every simplex, faces included, as sorted vertex lists. Exponential in
    /// the dimension; meant for small complexes.
    pub fn all_simplexes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for simplex in &self.maximal {
            for mask in 1u64..(1u64 << simplex.len()) {
                out.push(
                    simplex
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &v)| v)
                        .collect(),
                );
            }
        }
        out.sort();
        out
    }

    /// The point whose simplex is the single vertex `{x}` with block `{x}`.
    pub fn is_isolated(&self, point: usize) -> bool {
        let simplex = self.simplex_of_point(point);
        simplex.len() == 1 && self.support(simplex) == [point]
    }
}

/// Where each point becomes isolated, and any level contradicting it.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct IsolationReport {
    /// Per point: the first level where both the cover radius and the nerve
    /// threshold drop below the distance to the nearest other point.
    pub isolated_from: Vec<Option<usize>>,
    /// `(point, level)` pairs where the point should be isolated but is not.
    pub exceptions: Vec<(usize, usize)>,
}

impl IsolationReport {
    pub fn passed(&self) -> bool {
        self.exceptions.is_empty()
    }
}

pub fn isolated_point_check(space: &UltraSpace, nerves: &[NerveComplex]) -> IsolationReport {
    let mut isolated_from = Vec::with_capacity(space.len());
    let mut exceptions = Vec::new();
    for x in 0..space.len() {
        let nearest = space.nearest_distance(x);
        let below = |nerve: &NerveComplex| match nearest {
            None => true,
            Some(d) => nerve.cover.radius().max(nerve.threshold) < d,
        };
        let first = nerves.iter().position(below);
        if let Some(first) = first {
            for nerve in &nerves[first..] {
                if !nerve.is_isolated(x) {
                    exceptions.push((x, nerve.level));
                }
            }
        }
        isolated_from.push(first.map(|i| nerves[i].level));
    }
    IsolationReport { isolated_from, exceptions }
}
