//! Baire coding of a separated ultrametric space and the isometric
//! embedding into the sequence space c0 over `Q_p`.

use std::collections::{BTreeMap, BTreeSet};

use num::rational::BigRational;
use num::{One, Zero};

use super::{SpaceError, UltraSpace};
use crate::padic::{GammaValue, PAdic};

/// One code per point. The symbol of point `x` at position `i` is the index
/// of the closed ball of radius `p^-(i+1)` containing `x`, so two codes first
/// differ at position `k` exactly when the points are at distance `p^-k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaireCodes {
    prime: u32,
    first_position: i64,
    codes: Vec<Vec<usize>>,
}

impl BaireCodes {
    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Number of positions carried by each code.
    pub fn depth(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    /// Positions run from `first_position` to `first_position + depth - 1`.
    /// The first position is 0 unless some distance exceeds 1.
    pub fn first_position(&self) -> i64 {
        self.first_position
    }

    pub fn code(&self, point: usize) -> &[usize] {
        &self.codes[point]
    }

    pub fn symbol(&self, point: usize, position: i64) -> usize {
        self.codes[point][(position - self.first_position) as usize]
    }

    /// First position where the two codes disagree.
    pub fn first_difference(&self, a: usize, b: usize) -> Option<i64> {
        self.codes[a]
            .iter()
            .zip(&self.codes[b])
            .position(|(x, y)| x != y)
            .map(|i| i as i64 + self.first_position)
    }

    /// Distance read off the codes: `p^-k` at the first difference `k`.
    pub fn distance(&self, a: usize, b: usize) -> GammaValue {
        self.first_difference(a, b).map_or(GammaValue::Infinity, GammaValue::Finite)
    }
}

pub fn baire_encode(space: &UltraSpace) -> Result<BaireCodes, SpaceError> {
    space.require_separated()?;
    let n = space.len();
    let (first, last) = match space.exponent_range() {
        Some((lo, hi)) => (lo.min(0), hi),
        None => (0, 0),
    };
    let mut codes = vec![Vec::with_capacity((last - first + 1) as usize); n];
    for position in first..=last {
        for (symbol, ball) in space.balls(GammaValue::Finite(position + 1)).iter().enumerate() {
            for &x in ball {
                codes[x].push(symbol);
            }
        }
    }
    Ok(BaireCodes { prime: space.prime(), first_position: first, codes })
}

/// Finitely supported vector of c0 over `Q_p`, keyed by `(position, symbol)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct C0Vector {
    prime: u32,
    entries: BTreeMap<(i64, usize), PAdic>,
}

impl C0Vector {
    pub fn zero(prime: u32) -> Self {
        C0Vector { prime, entries: BTreeMap::new() }
    }

    pub fn entries(&self) -> &BTreeMap<(i64, usize), PAdic> {
        &self.entries
    }

    pub fn sub(&self, other: &C0Vector) -> C0Vector {
        let mut entries = BTreeMap::new();
        let keys: BTreeSet<_> = self.entries.keys().chain(other.entries.keys()).collect();
        for key in keys {
            let value = match (self.entries.get(key), other.entries.get(key)) {
                (Some(a), Some(b)) => a.sub(b).expect("coordinates share the prime"),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.neg(),
                (None, None) => unreachable!(),
            };
            if !value.is_zero() {
                entries.insert(*key, value);
            }
        }
        C0Vector { prime: self.prime, entries }
    }

    /// Sup norm: the largest `|coefficient|_p`.
    pub fn norm(&self) -> GammaValue {
        self.entries.values().map(PAdic::norm).max().unwrap_or(GammaValue::Infinity)
    }
}

/// `f(x) = sum_i p^i e_(i, x_i)` for every code.
pub fn c0_embed(codes: &BaireCodes) -> Vec<C0Vector> {
    let p = codes.prime;
    (0..codes.len())
        .map(|x| {
            let entries = codes.codes[x]
                .iter()
                .enumerate()
                .map(|(offset, &symbol)| {
                    let position = codes.first_position + offset as i64;
                    let coefficient = PAdic::prime_power(p, position, 1).expect("prime checked by the space");
                    ((position, symbol), coefficient)
                })
                .collect();
            C0Vector { prime: p, entries }
        })
        .collect()
}

/// A space together with its codes and embedded points.
#[derive(Debug, Clone)]
pub struct Embedding {
    codes: BaireCodes,
    vectors: Vec<C0Vector>,
    // pairwise norms of differences, row-major
    table: Vec<GammaValue>,
}

impl Embedding {
    pub fn new(space: &UltraSpace) -> Result<Self, SpaceError> {
        let codes = baire_encode(space)?;
        let vectors = c0_embed(&codes);
        let n = vectors.len();
        let mut table = vec![GammaValue::Infinity; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let d = vectors[a].sub(&vectors[b]).norm();
                table[a * n + b] = d;
                table[b * n + a] = d;
            }
        }
        Ok(Embedding { codes, vectors, table })
    }

    pub fn codes(&self) -> &BaireCodes {
        &self.codes
    }

    pub fn vector(&self, point: usize) -> &C0Vector {
        &self.vectors[point]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `||f(a) - f(b)||`, computed once from the vectors.
    pub fn distance(&self, a: usize, b: usize) -> GammaValue {
        self.table[a * self.vectors.len() + b]
    }
}

/// Affine rank of a set of vectors over `Q`, which equals the rank over
/// `Q_p` since every coordinate is rational.
pub fn affine_rank(points: &[&C0Vector]) -> usize {
    let Some((base, rest)) = points.split_first() else {
        return 0;
    };
    let keys: Vec<(i64, usize)> = points
        .iter()
        .flat_map(|v| v.entries.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let value = |v: &C0Vector, key: &(i64, usize)| v.entries.get(key).map_or_else(BigRational::zero, PAdic::to_rational);
    let mut rows: Vec<Vec<BigRational>> = rest
        .iter()
        .map(|v| keys.iter().map(|key| value(v, key) - value(base, key)).collect())
        .collect();
    rank(&mut rows, keys.len())
}

fn rank(rows: &mut [Vec<BigRational>], columns: usize) -> usize {
    let mut rank = 0;
    for col in 0..columns {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inverse = BigRational::one() / &rows[rank][col];
        let pivot_row: Vec<BigRational> = rows[rank].iter().map(|x| x * &inverse).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &factor * y;
                }
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: &[&[i64]], p: u32) -> UltraSpace {
        let n = rows.len();
        let labels = (0..n).map(|i| format!("x{i}")).collect();
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, &e)| if i == j { GammaValue::Infinity } else { GammaValue::Finite(e) })
                    .collect()
            })
            .collect();
        UltraSpace::new(labels, p, rows).unwrap()
    }

    // Brute force: codes must first differ exactly at the distance exponent.
    fn check_prefix_property(s: &UltraSpace, codes: &BaireCodes) {
        for a in 0..s.len() {
            for b in 0..s.len() {
                let expected = s.dist(a, b).exponent();
                let ca = codes.code(a);
                let cb = codes.code(b);
                let mut first = None;
                for i in 0..ca.len() {
                    if ca[i] != cb[i] {
                        first = Some(i as i64 + codes.first_position());
                        break;
                    }
                }
                assert_eq!(first, expected, "points {a}, {b}");
            }
        }
    }

    #[test]
    fn two_points_at_first_scale_differ_at_position_one() {
        let s = space(&[&[0, 1], &[1, 0]], 3);
        let codes = baire_encode(&s).unwrap();
        assert_eq!(codes.first_position(), 0);
        assert_eq!(codes.depth(), 2);
        assert_eq!(codes.first_difference(0, 1), Some(1));
    }

    #[test]
    fn single_point_code() {
        let s = space(&[&[0]], 2);
        let codes = baire_encode(&s).unwrap();
        assert_eq!(codes.len(), 1);
        assert!(codes.depth() >= 1);
        assert_eq!(c0_embed(&codes)[0].norm(), GammaValue::ONE);
    }

    #[test]
    fn four_point_space() {
        // {a, b} and {c, d} at 3^-2 inside, 3^-1 across.
        let s = space(&[&[0, 2, 1, 1], &[2, 0, 1, 1], &[1, 1, 0, 2], &[1, 1, 2, 0]], 3);
        let embedding = Embedding::new(&s).unwrap();
        check_prefix_property(&s, embedding.codes());
        assert_eq!(embedding.codes().depth(), 3);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(embedding.distance(a, b), s.dist(a, b));
            }
        }
    }

    #[test]
    fn codes_differing_at_two_give_distance_p_squared() {
        let s = space(&[&[0, 2], &[2, 0]], 5);
        let e = Embedding::new(&s).unwrap();
        assert_eq!(e.codes().first_difference(0, 1), Some(2));
        assert_eq!(e.distance(0, 1), GammaValue::Finite(2));
        assert_eq!(e.distance(1, 1), GammaValue::Infinity);
    }

    #[test]
    fn large_distances_use_negative_positions() {
        let s = space(&[&[0, -2, -2], &[-2, 0, 0], &[-2, 0, 0]], 2);
        let e = Embedding::new(&s).unwrap();
        assert_eq!(e.codes().first_position(), -2);
        check_prefix_property(&s, e.codes());
        assert_eq!(e.distance(0, 2), GammaValue::Finite(-2));
        assert_eq!(e.distance(1, 2), GammaValue::ONE);
    }

    #[test]
    fn unseparated_space_is_rejected() {
        let inf = GammaValue::Infinity;
        let s = UltraSpace::new(vec!["a".into(), "b".into()], 2, vec![vec![inf, inf], vec![inf, inf]]).unwrap();
        assert!(matches!(baire_encode(&s), Err(SpaceError::NotSeparated(..))));
    }

    #[test]
    fn embedded_points_are_affinely_independent() {
        let s = space(&[&[0, 2, 1, 1], &[2, 0, 1, 1], &[1, 1, 0, 2], &[1, 1, 2, 0]], 3);
        let e = Embedding::new(&s).unwrap();
        let all: Vec<&C0Vector> = (0..4).map(|i| e.vector(i)).collect();
        assert_eq!(affine_rank(&all), 3);
        assert_eq!(affine_rank(&all[..1]), 0);
        let repeated = [e.vector(0), e.vector(1), e.vector(0)];
        assert_eq!(affine_rank(&repeated), 1);
    }
}
