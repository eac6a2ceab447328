//! Finite ultrametric spaces.
//!
//! Raw dissimilarities arrive as a [`DissimilarityMatrix`] of exact
//! rationals. They can be checked against the strong triangle inequality,
//! closed to their subdominant ultrametric, and rounded into the value group
//! to give an [`UltraSpace`], whose distances are stored as exponents.

mod embed;

pub use embed::{affine_rank, baire_encode, c0_embed, BaireCodes, C0Vector, Embedding};

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num::rational::BigRational;
use num::{Signed, Zero};
use thiserror::Error;

use crate::padic::{check_prime, round_to_gamma, GammaValue, PAdic, PadicError};
use crate::union_find::DisjointSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("a space needs at least one point")]
    Empty,
    #[error("{labels} labels given for {points} points")]
    LabelCount { labels: usize, points: usize },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("matrix is not symmetric at ({0}, {1})")]
    Asymmetric(String, String),
    #[error("negative entry at ({0}, {1})")]
    NegativeEntry(String, String),
    #[error("nonzero diagonal entry at {0}")]
    NonzeroDiagonal(String),
    #[error("not an ultrametric: {0}")]
    NotUltrametric(String),
    #[error("points {0} and {1} are at distance zero")]
    NotSeparated(String, String),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// A triple `(i, j, k)` with `d(i, k) > max(d(i, j), d(j, k))`, `i < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl Violation {
    pub fn describe(&self, labels: &[String]) -> String {
        format!(
            "({}, {}, {}): d({}, {}) exceeds max(d({}, {}), d({}, {}))",
            labels[self.i],
            labels[self.j],
            labels[self.k],
            labels[self.i],
            labels[self.k],
            labels[self.i],
            labels[self.j],
            labels[self.j],
            labels[self.k]
        )
    }
}

fn scan_violations<T: Ord>(n: usize, d: impl Fn(usize, usize) -> T) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            let dik = d(i, k);
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                if dik > d(i, j).max(d(j, k)) {
                    out.push(Violation { i, j, k });
                }
            }
        }
    }
    out
}

fn check_labels(labels: &[String], points: usize) -> Result<(), SpaceError> {
    if points == 0 {
        return Err(SpaceError::Empty);
    }
    if labels.len() != points {
        return Err(SpaceError::LabelCount { labels: labels.len(), points });
    }
    let mut seen = HashSet::new();
    for label in labels {
        if !seen.insert(label) {
            return Err(SpaceError::DuplicateLabel(label.clone()));
        }
    }
    Ok(())
}

fn check_square<T>(rows: &[Vec<T>]) -> Result<(), SpaceError> {
    for (row, entries) in rows.iter().enumerate() {
        if entries.len() != rows.len() {
            return Err(SpaceError::NotSquare { row, len: entries.len(), expected: rows.len() });
        }
    }
    Ok(())
}

/// Classes of the relation "distance zero", with the smallest index first in
/// each class and classes ordered by that index.
fn zero_classes(n: usize, is_zero: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut ds = DisjointSet::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if is_zero(i, j) {
                ds.union(i, j);
            }
        }
    }
    ds.classes()
}

/// Maps each merged label to the label of its class representative.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MergeReport {
    pub merged: BTreeMap<String, String>,
}

impl MergeReport {
    fn from_classes(labels: &[String], classes: &[Vec<usize>]) -> Self {
        let merged = classes
            .iter()
            .flat_map(|class| {
                class[1..]
                    .iter()
                    .map(move |&m| (labels[m].clone(), labels[class[0]].clone()))
            })
            .collect();
        MergeReport { merged }
    }

    pub fn is_identity(&self) -> bool {
        self.merged.is_empty()
    }
}

/// Labeled, symmetric, nonnegative matrix of exact rational dissimilarities
/// with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DissimilarityMatrix {
    labels: Vec<String>,
    rows: Vec<Vec<BigRational>>,
}

impl DissimilarityMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<BigRational>>) -> Result<Self, SpaceError> {
        check_labels(&labels, rows.len())?;
        check_square(&rows)?;
        for (i, label) in labels.iter().enumerate() {
            if !rows[i][i].is_zero() {
                return Err(SpaceError::NonzeroDiagonal(label.clone()));
            }
        }
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if rows[i][j].is_negative() {
                    return Err(SpaceError::NegativeEntry(labels[i].clone(), labels[j].clone()));
                }
            }
        }
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                if rows[i][j] != rows[j][i] {
                    return Err(SpaceError::Asymmetric(labels[i].clone(), labels[j].clone()));
                }
            }
        }
        Ok(DissimilarityMatrix { labels, rows })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    /// Every triple breaking the strong triangle inequality. Empty iff the
    /// matrix is an ultrametric.
    pub fn validate_ultrametric(&self) -> Vec<Violation> {
        scan_violations(self.len(), |a, b| &self.rows[a][b])
    }

    /// The largest ultrametric lying entrywise below this matrix: the
    /// minimax path distance, read off a minimum spanning tree.
    pub fn subdominant_closure(&self) -> DissimilarityMatrix {
        let n = self.len();
        // Prim's algorithm.
        let mut in_tree = vec![false; n];
        let mut best: Vec<Option<(BigRational, usize)>> = vec![None; n];
        let mut adjacency: Vec<Vec<(usize, BigRational)>> = vec![Vec::new(); n];
        in_tree[0] = true;
        for j in 1..n {
            best[j] = Some((self.rows[0][j].clone(), 0));
        }
        for _ in 1..n {
            let next = (0..n)
                .filter(|&j| !in_tree[j])
                .min_by(|&a, &b| best[a].as_ref().unwrap().0.cmp(&best[b].as_ref().unwrap().0))
                .expect("a vertex remains outside the tree");
            let (weight, parent) = best[next].take().unwrap();
            in_tree[next] = true;
            adjacency[next].push((parent, weight.clone()));
            adjacency[parent].push((next, weight));
            for j in 0..n {
                if !in_tree[j] && best[j].as_ref().is_some_and(|(w, _)| &self.rows[next][j] < w) {
                    best[j] = Some((self.rows[next][j].clone(), next));
                }
            }
        }

        let mut rows = vec![vec![BigRational::zero(); n]; n];
        for (source, row) in rows.iter_mut().enumerate() {
            let mut stack = vec![(source, usize::MAX, BigRational::zero())];
            while let Some((node, from, heaviest)) = stack.pop() {
                row[node] = heaviest.clone();
                for (next, weight) in &adjacency[node] {
                    if *next != from {
                        stack.push((*next, node, heaviest.clone().max(weight.clone())));
                    }
                }
            }
        }
        DissimilarityMatrix { labels: self.labels.clone(), rows }
    }

    /// Rounds every entry down into the value group of `Q_p`.
    pub fn round(&self, p: u32) -> Result<UltraSpace, SpaceError> {
        if let Some(v) = self.validate_ultrametric().first() {
            return Err(SpaceError::NotUltrametric(v.describe(&self.labels)));
        }
        let mut dist = Vec::with_capacity(self.len() * self.len());
        for row in &self.rows {
            for entry in row {
                dist.push(round_to_gamma(entry, p)?);
            }
        }
        UltraSpace::from_flat(self.labels.clone(), p, dist)
    }

    /// Merges points at distance zero into their smallest-index member.
    pub fn quotient_zero(&self) -> (DissimilarityMatrix, MergeReport) {
        let classes = zero_classes(self.len(), |i, j| self.rows[i][j].is_zero());
        let keep: Vec<usize> = classes.iter().map(|c| c[0]).collect();
        let rows = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| self.rows[i][j].clone()).collect())
            .collect();
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        (
            DissimilarityMatrix { labels, rows },
            MergeReport::from_classes(&self.labels, &classes),
        )
    }
}

/// A finite ultrametric space whose distances lie in the value group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UltraSpace {
    labels: Vec<String>,
    prime: u32,
    // row-major n x n
    dist: Vec<GammaValue>,
}

impl UltraSpace {
    pub fn new(labels: Vec<String>, prime: u32, rows: Vec<Vec<GammaValue>>) -> Result<Self, SpaceError> {
        check_labels(&labels, rows.len())?;
        check_square(&rows)?;
        Self::from_flat(labels, prime, rows.into_iter().flatten().collect())
    }

    fn from_flat(labels: Vec<String>, prime: u32, dist: Vec<GammaValue>) -> Result<Self, SpaceError> {
        check_prime(u64::from(prime))?;
        let space = UltraSpace { labels, prime, dist };
        let n = space.len();
        for i in 0..n {
            if space.dist(i, i) != GammaValue::Infinity {
                return Err(SpaceError::NonzeroDiagonal(space.labels[i].clone()));
            }
            for j in i + 1..n {
                if space.dist(i, j) != space.dist(j, i) {
                    return Err(SpaceError::Asymmetric(space.labels[i].clone(), space.labels[j].clone()));
                }
            }
        }
        if let Some(v) = space.violations().first() {
            return Err(SpaceError::NotUltrametric(v.describe(&space.labels)));
        }
        Ok(space)
    }

    /// Distances `|x_i - x_j|_p` between p-adic points.
    pub fn from_points(labels: Vec<String>, points: &[PAdic]) -> Result<Self, SpaceError> {
        check_labels(&labels, points.len())?;
        let prime = points[0].prime();
        let n = points.len();
        let mut dist = vec![GammaValue::Infinity; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = points[i].sub(&points[j])?.norm();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::from_flat(labels, prime, dist)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn dist(&self, i: usize, j: usize) -> GammaValue {
        self.dist[i * self.len() + j]
    }

    pub fn rows(&self) -> Vec<Vec<GammaValue>> {
        self.dist.chunks(self.len()).map(<[GammaValue]>::to_vec).collect()
    }

    pub fn violations(&self) -> Vec<Violation> {
        scan_violations(self.len(), |a, b| self.dist(a, b))
    }

    /// First pair of distinct points at distance zero, if any.
    pub fn zero_pair(&self) -> Option<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| self.dist(i, j).is_zero())
    }

    pub fn is_separated(&self) -> bool {
        self.zero_pair().is_none()
    }

    pub fn require_separated(&self) -> Result<(), SpaceError> {
        match self.zero_pair() {
            None => Ok(()),
            Some((i, j)) => Err(SpaceError::NotSeparated(self.labels[i].clone(), self.labels[j].clone())),
        }
    }

    /// Smallest and largest finite exponent among off-diagonal distances.
    pub fn exponent_range(&self) -> Option<(i64, i64)> {
        let n = self.len();
        let exps = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.dist(i, j).exponent());
        exps.fold(None, |acc, e| match acc {
            None => Some((e, e)),
            Some((lo, hi)) => Some((lo.min(e), hi.max(e))),
        })
    }

    /// Distance to the nearest other point; `None` for a single point.
    pub fn nearest_distance(&self, i: usize) -> Option<GammaValue> {
        (0..self.len()).filter(|&j| j != i).map(|j| self.dist(i, j)).min()
    }

    /// Diameter of a set of points (`Infinity`, i.e. zero, for singletons).
    pub fn diameter(&self, members: &[usize]) -> GammaValue {
        let mut diam = GammaValue::Infinity;
        for (a, &x) in members.iter().enumerate() {
            for &y in &members[a + 1..] {
                diam = diam.max(self.dist(x, y));
            }
        }
        diam
    }

    /// Smallest distance between members of two sets.
    pub fn set_distance(&self, a: &[usize], b: &[usize]) -> GammaValue {
        a.iter()
            .flat_map(|&x| b.iter().map(move |&y| (x, y)))
            .map(|(x, y)| self.dist(x, y))
            .min()
            .unwrap_or(GammaValue::Infinity)
    }

    /// Partition into closed balls `{y : d(x, y) <= radius}`. Blocks are
    /// sorted internally and ordered by their smallest member.
    pub fn balls(&self, radius: GammaValue) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut assigned = vec![false; n];
        let mut blocks = Vec::new();
        for i in 0..n {
            if assigned[i] {
                continue;
            }
            let block: Vec<usize> = (i..n).filter(|&j| !assigned[j] && self.dist(i, j) <= radius).collect();
            for &j in &block {
                assigned[j] = true;
            }
            blocks.push(block);
        }
        blocks
    }

    /// Merges points at distance zero into their smallest-index member.
    pub fn quotient_zero(&self) -> (UltraSpace, MergeReport) {
        let classes = zero_classes(self.len(), |i, j| self.dist(i, j).is_zero());
        let keep: Vec<usize> = classes.iter().map(|c| c[0]).collect();
        let dist = keep
            .iter()
            .flat_map(|&i| keep.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.dist(i, j))
            .collect();
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        (
            UltraSpace { labels, prime: self.prime, dist },
            MergeReport::from_classes(&self.labels, &classes),
        )
    }
}

impl fmt::Display for UltraSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p = {}, {} points", self.prime, self.len())?;
        for (i, row) in self.dist.chunks(self.len()).enumerate() {
            let cells: Vec<String> = row.iter().map(GammaValue::to_string).collect();
            writeln!(f, "{:>8}: {}", self.labels[i], cells.join(" "))?;
        }
        Ok(())
    }
}
