//! The quotient θ from the p-adic unit ball onto `[0, 1]`, reading digits
//! as a base-p fraction, and the real shadows of nerve complexes.

use std::collections::{BTreeMap, BTreeSet};

use num::rational::BigRational;
use num::{BigInt, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::nerve::{NerveComplex, Realization};
use crate::padic::{check_prime, prime_power, PAdic, PadicError};
use crate::spectrum::BondingMap;

// Enumerations over all digit strings stop here.
const MAX_ENUMERATION: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShadowError {
    #[error("θ is defined on the unit ball, but the valuation is {0}")]
    OutsideUnitBall(i64),
    #[error("{requested} digits requested from a value carrying {precision}")]
    PrecisionExceeded { requested: usize, precision: usize },
    #[error("boundary pairs need at least 2 digits, got {0}")]
    TooFewDigits(usize),
    #[error("{0}^{1} digit strings are too many to enumerate")]
    TooLarge(u32, usize),
    #[error("grid index {k} is outside 0..={max}")]
    OffGrid { k: u64, max: u64 },
    #[error("the realization does not match the nerve at level {0}")]
    Unrealized(usize),
    #[error("bonding map does not match the shadows: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// `Σ_{i<n} a_i p^{-i-1}` for the digits `a_i` of `x`.
pub fn theta(x: &PAdic, n: usize) -> Result<BigRational, ShadowError> {
    if let Some(v) = x.valuation() {
        if v < 0 {
            return Err(ShadowError::OutsideUnitBall(v));
        }
    }
    if n > x.precision() {
        return Err(ShadowError::PrecisionExceeded { requested: n, precision: x.precision() });
    }
    let digits: Vec<u32> = (0..n as i64).map(|i| x.digit_at(i)).collect();
    Ok(theta_digits(x.prime(), &digits))
}

/// θ of a digit string `a_0, a_1, ...`, least significant p-adic digit first.
pub fn theta_digits(p: u32, digits: &[u32]) -> BigRational {
    let pb = BigInt::from(p);
    let numerator = digits.iter().fold(BigInt::zero(), |acc, &d| acc * &pb + BigInt::from(d));
    BigRational::new(numerator, num::pow(pb, digits.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThetaReport {
    pub pairs: usize,
    /// Indices of pairs with `|θ(x) - θ(y)| > |x - y|_p`.
    pub violations: Vec<usize>,
}

pub fn theta_nonstretch_check(pairs: &[(PAdic, PAdic)], n: usize) -> Result<ThetaReport, ShadowError> {
    let mut violations = Vec::new();
    for (i, (x, y)) in pairs.iter().enumerate() {
        let gap = (theta(x, n)? - theta(y, n)?).abs();
        let distance = x.sub(y)?.norm().to_rational(x.prime());
        if gap > distance {
            violations.push(i);
        }
    }
    Ok(ThetaReport { pairs: pairs.len(), violations })
}

/// A unit-ball element with `θ(x) = k p^{-n}`, for `0 <= k < p^n`. The grid
/// point `1` is only reached in the limit, by `-1 = (p-1, p-1, ...)`.
pub fn theta_preimage(p: u32, k: u64, n: usize) -> Result<PAdic, ShadowError> {
    check_prime(u64::from(p))?;
    let max = u64::from(p).checked_pow(n as u32).ok_or(ShadowError::TooLarge(p, n))?;
    if k >= max {
        return Err(ShadowError::OffGrid { k, max });
    }
    Ok(PAdic::from_digits(p, 0, &grid_digits(p, k, n), n.max(1))?)
}

/// Two digit strings θ identifies in the limit, with their images at the
/// working precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryPair {
    pub x: Vec<u32>,
    pub y: Vec<u32>,
    pub theta_x: BigRational,
    pub theta_y: BigRational,
}

impl BoundaryPair {
    pub fn gap(&self) -> BigRational {
        &self.theta_y - &self.theta_x
    }
}

/// Pairs `(a_0, ..., a, p-1, ..., p-1)` and `(a_0, ..., a+1, 0, ..., 0)` of
/// `n` digits: θ glues their infinite continuations, and at precision `n`
/// their images sit `p^{-n}` apart.
pub fn theta_boundary_pairs(p: u32, n: usize) -> Result<Vec<BoundaryPair>, ShadowError> {
    check_prime(u64::from(p))?;
    if n < 2 {
        return Err(ShadowError::TooFewDigits(n));
    }
    let count = enumeration_size(p, n)?;
    let mut pairs = Vec::new();
    for k in 0..count {
        let x = grid_digits(p, k, n);
        if x[n - 1] != p - 1 || x.iter().all(|&d| d == p - 1) {
            continue;
        }
        let y = grid_digits(p, k + 1, n);
        pairs.push(BoundaryPair { theta_x: theta_digits(p, &x), theta_y: theta_digits(p, &y), x, y });
    }
    Ok(pairs)
}

fn enumeration_size(p: u32, n: usize) -> Result<u64, ShadowError> {
    u64::from(p)
        .checked_pow(n as u32)
        .filter(|&c| c <= MAX_ENUMERATION)
        .ok_or(ShadowError::TooLarge(p, n))
}

// Digits of k as an n-digit base-p numeral, most significant first.
fn grid_digits(p: u32, k: u64, n: usize) -> Vec<u32> {
    let mut digits = vec![0u32; n];
    let mut rest = k;
    for slot in digits.iter_mut().rev() {
        *slot = (rest % u64::from(p)) as u32;
        rest /= u64::from(p);
    }
    digits
}

/// All digit strings of length `n`, in increasing θ order.
pub fn digit_strings(p: u32, n: usize) -> Result<Vec<Vec<u32>>, ShadowError> {
    Ok((0..enumeration_size(p, n)?).map(|k| grid_digits(p, k, n)).collect())
}

/// Real cell `θ(s)`: the unit cube on the coordinates of the non-base
/// vertices, `0 <= e^v <= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RealSimplex {
    pub vertices: Vec<usize>,
    pub base: usize,
    pub axes: Vec<usize>,
    #[serde(rename = "dimR")]
    pub dim_r: usize,
}

impl RealSimplex {
    fn new(vertices: &[usize]) -> Self {
        RealSimplex { vertices: vertices.to_vec(), base: vertices[0], axes: vertices[1..].to_vec(), dim_r: vertices.len() - 1 }
    }

    /// Cube constraints `(axis, lower, upper)`.
    pub fn constraints(&self) -> Vec<(usize, u32, u32)> {
        self.axes.iter().map(|&a| (a, 0, 1)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShadowComplex {
    pub level: usize,
    pub cells: Vec<RealSimplex>,
}

pub fn shadow_complex(nerve: &NerveComplex, realization: &Realization) -> Result<ShadowComplex, ShadowError> {
    let realized: Vec<&Vec<usize>> = realization.simplexes().iter().map(|s| &s.vertices).collect();
    let expected: Vec<&Vec<usize>> = nerve.maximal_simplexes().iter().collect();
    if realized != expected {
        return Err(ShadowError::Unrealized(nerve.level()));
    }
    Ok(ShadowComplex { level: nerve.level(), cells: nerve.maximal_simplexes().iter().map(|s| RealSimplex::new(s)).collect() })
}

impl ShadowComplex {
    pub fn vertices(&self) -> BTreeSet<usize> {
        self.cells.iter().flat_map(|c| c.vertices.iter().copied()).collect()
    }

    pub fn dim_r(&self) -> usize {
        self.cells.iter().map(|c| c.dim_r).max().unwrap_or(0)
    }

    /// Faces per real dimension: a cube on `d` axes with its base vertex has
    /// `C(d+1, i+1)` vertex subsets spanning `i`-dimensional faces.
    pub fn face_counts(&self) -> Vec<u128> {
        let mut counts = vec![0u128; self.dim_r() + 1];
        for cell in &self.cells {
            let size = cell.axes.len() + 1;
            for (i, slot) in counts.iter_mut().enumerate().take(size) {
                *slot += binomial(size as u128, i as u128 + 1);
            }
        }
        counts
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Cells whose vertex set or dimension disagree with the source simplexes,
/// plus whether the face counts agree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShadowCheck {
    pub level: usize,
    pub cells: usize,
    pub dimension_mismatches: Vec<usize>,
    pub vertex_set_mismatches: Vec<usize>,
    pub face_counts_match: bool,
    pub vertex_count_match: bool,
}

impl ShadowCheck {
    pub fn passed(&self) -> bool {
        self.dimension_mismatches.is_empty()
            && self.vertex_set_mismatches.is_empty()
            && self.face_counts_match
            && self.vertex_count_match
    }
}

pub fn check_shadow(nerve: &NerveComplex, shadow: &ShadowComplex) -> ShadowCheck {
    let mut dimension_mismatches = Vec::new();
    let mut vertex_set_mismatches = Vec::new();
    for (i, cell) in shadow.cells.iter().enumerate() {
        match nerve.maximal_simplexes().get(i) {
            Some(s) if *s == cell.vertices => {
                if cell.dim_r != s.len() - 1 {
                    dimension_mismatches.push(i);
                }
            }
            _ => vertex_set_mismatches.push(i),
        }
    }
    if shadow.cells.len() != nerve.maximal_simplexes().len() {
        vertex_set_mismatches.push(shadow.cells.len());
    }
    ShadowCheck {
        level: shadow.level,
        cells: shadow.cells.len(),
        dimension_mismatches,
        vertex_set_mismatches,
        face_counts_match: shadow.face_counts() == nerve.face_counts(),
        vertex_count_match: shadow.vertices().len() == nerve.vertex_count(),
    }
}

/// Affine map of one cell: the base vertex and each axis go to the listed
/// target vertices, and the cube follows by linear extension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellMap {
    pub source: usize,
    pub target: usize,
    pub images: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShadowBonding {
    pub from: usize,
    pub to: usize,
    pub vertex_map: BTreeMap<usize, usize>,
    pub cells: Vec<CellMap>,
}

pub fn shadow_bonding(
    map: &BondingMap,
    source: &ShadowComplex,
    target: &ShadowComplex,
) -> Result<ShadowBonding, ShadowError> {
    if map.from != source.level || map.to != target.level {
        return Err(ShadowError::Mismatch(format!(
            "map runs {} -> {}, shadows are levels {} and {}",
            map.from, map.to, source.level, target.level
        )));
    }
    let domain: BTreeSet<usize> = map.vertex_map.keys().copied().collect();
    if domain != source.vertices() {
        return Err(ShadowError::Mismatch("vertex sets differ".into()));
    }
    let mut cells = Vec::with_capacity(source.cells.len());
    for (i, cell) in source.cells.iter().enumerate() {
        let images: Vec<usize> = cell.vertices.iter().map(|v| map.vertex_map[v]).collect();
        let target_cell = target
            .cells
            .iter()
            .position(|t| images.iter().all(|w| t.vertices.contains(w)))
            .ok_or_else(|| ShadowError::Mismatch(format!("cell {i} has no target cell")))?;
        cells.push(CellMap { source: i, target: target_cell, images });
    }
    Ok(ShadowBonding { from: map.from, to: map.to, vertex_map: map.vertex_map.clone(), cells })
}

impl ShadowBonding {
    /// `next ∘ self`, with cell images routed through the middle complex.
    pub fn then(&self, next: &ShadowBonding) -> ShadowBonding {
        ShadowBonding {
            from: self.from,
            to: next.to,
            vertex_map: self.vertex_map.iter().map(|(&v, w)| (v, next.vertex_map[w])).collect(),
            cells: self
                .cells
                .iter()
                .map(|c| CellMap {
                    source: c.source,
                    target: next.cells[c.target].target,
                    images: c.images.iter().map(|w| next.vertex_map[w]).collect(),
                })
                .collect(),
        }
    }
}

/// θ over a list of points, each scaled into the unit ball by the smallest
/// valuation present.
pub fn theta_samples(points: &[PAdic], n: usize) -> Result<Vec<BigRational>, ShadowError> {
    let shift = points.iter().filter_map(PAdic::valuation).min().unwrap_or(0).min(0);
    points
        .iter()
        .map(|x| {
            let scaled = if shift < 0 {
                x.mul(&PAdic::prime_power(x.prime(), -shift, x.precision())?)?
            } else {
                x.clone()
            };
            theta(&scaled, n.min(scaled.precision()))
        })
        .collect()
}

/// `num/den` text for a rational.
pub fn rational_text(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// `p^{-n}` as a rational.
pub fn grid_step(p: u32, n: usize) -> BigRational {
    prime_power(p, -(n as i64))
}

/// The value `|x - y|_p` as a rational, for reporting.
pub fn distance_rational(x: &PAdic, y: &PAdic) -> Result<BigRational, ShadowError> {
    Ok(x.sub(y)?.norm().to_rational(x.prime()))
}
