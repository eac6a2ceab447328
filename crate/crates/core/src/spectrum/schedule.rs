//! Level schedules: the scale `j(m)`, exponent `k(m)` and base `b_m` of
//! every level of an expansion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::GammaValue;
use crate::ultraspace::UltraSpace;

// Auto schedules stop long before this; it only guards against runaway loops.
const MAX_LEVELS: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("scale list is empty")]
    Empty,
    #[error("scales must strictly increase, but j({m}) = {next} follows {prev}")]
    ScaleNotIncreasing { m: usize, prev: i64, next: i64 },
    #[error("k must not increase, but k({m}) = {next} follows {prev}")]
    KIncreasing { m: usize, prev: i64, next: i64 },
    #[error("k({m}) = {k} is below -{m}")]
    KBelowBound { m: usize, k: i64 },
    #[error("{j} scales but {k} values of k")]
    LengthMismatch { j: usize, k: usize },
    #[error("base b must be a nonzero value-group element")]
    ZeroBase,
    #[error("the finest level (scale {scale}, reach {reach}) does not separate points at distance {nearest}")]
    NotSeparating { scale: i64, reach: GammaValue, nearest: GammaValue },
    #[error("no separating level within {0} levels")]
    Unbounded(usize),
    #[error("invalid schedule entry {0:?}")]
    Syntax(String),
}

/// Scales: `"auto"` or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawSteps", into = "RawSteps")]
pub enum Scales {
    #[default]
    Auto,
    List(Vec<i64>),
}

/// Nerve exponents: `"auto"` (all zero), one integer for every level, or a list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawSteps", into = "RawSteps")]
pub enum Exponents {
    #[default]
    Auto,
    Constant(i64),
    List(Vec<i64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSteps {
    Word(String),
    Int(i64),
    List(Vec<i64>),
}

impl TryFrom<RawSteps> for Scales {
    type Error = ScheduleError;

    fn try_from(raw: RawSteps) -> Result<Self, Self::Error> {
        match raw {
            RawSteps::Word(w) if w == "auto" => Ok(Scales::Auto),
            RawSteps::List(v) => Ok(Scales::List(v)),
            RawSteps::Word(w) => Err(ScheduleError::Syntax(w)),
            RawSteps::Int(i) => Err(ScheduleError::Syntax(i.to_string())),
        }
    }
}

impl From<Scales> for RawSteps {
    fn from(s: Scales) -> Self {
        match s {
            Scales::Auto => RawSteps::Word("auto".into()),
            Scales::List(v) => RawSteps::List(v),
        }
    }
}

impl TryFrom<RawSteps> for Exponents {
    type Error = ScheduleError;

    fn try_from(raw: RawSteps) -> Result<Self, Self::Error> {
        match raw {
            RawSteps::Word(w) if w == "auto" => Ok(Exponents::Auto),
            RawSteps::Word(w) => Err(ScheduleError::Syntax(w)),
            RawSteps::Int(i) => Ok(Exponents::Constant(i)),
            RawSteps::List(v) => Ok(Exponents::List(v)),
        }
    }
}

impl From<Exponents> for RawSteps {
    fn from(k: Exponents) -> Self {
        match k {
            Exponents::Auto => RawSteps::Word("auto".into()),
            Exponents::Constant(c) => RawSteps::Int(c),
            Exponents::List(v) => RawSteps::List(v),
        }
    }
}

/// What the user asks for. `b` multiplies the per-level base `p^-j(m)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub j: Scales,
    #[serde(default)]
    pub k: Exponents,
    #[serde(default)]
    pub b: Option<GammaValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelParams {
    pub j: i64,
    pub k: i64,
    pub b: GammaValue,
}

impl LevelParams {
    /// `p^k * b`, the distance within which blocks are joined.
    pub fn threshold(&self) -> GammaValue {
        self.b.scaled(self.k)
    }

    /// Bound on the diameter of any simplex's support at this level.
    pub fn reach(&self) -> GammaValue {
        GammaValue::Finite(self.j).max(self.threshold())
    }
}

/// A fully resolved schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    levels: Vec<LevelParams>,
}

impl Schedule {
    pub fn levels(&self) -> &[LevelParams] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, m: usize) -> LevelParams {
        self.levels[m]
    }

    /// Schedule given by explicit lists, checked against the constraints.
    pub fn from_levels(levels: Vec<LevelParams>) -> Result<Self, ScheduleError> {
        if levels.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for (m, level) in levels.iter().enumerate() {
            if level.b.is_zero() {
                return Err(ScheduleError::ZeroBase);
            }
            if level.k < -(m as i64) {
                return Err(ScheduleError::KBelowBound { m, k: level.k });
            }
            if m > 0 {
                let prev = levels[m - 1];
                if level.j <= prev.j {
                    return Err(ScheduleError::ScaleNotIncreasing { m, prev: prev.j, next: level.j });
                }
                if level.k > prev.k {
                    return Err(ScheduleError::KIncreasing { m, prev: prev.k, next: level.k });
                }
            }
        }
        Ok(Schedule { levels })
    }

    /// The finest level separates the space when its reach is below the
    /// smallest distance.
    pub fn separates(&self, space: &UltraSpace) -> bool {
        separates(self.levels.last().expect("schedule is nonempty"), space)
    }

    pub fn check_separates(&self, space: &UltraSpace) -> Result<(), ScheduleError> {
        if self.separates(space) {
            return Ok(());
        }
        let last = self.levels.last().expect("schedule is nonempty");
        Err(ScheduleError::NotSeparating { scale: last.j, reach: last.reach(), nearest: min_distance(space) })
    }
}

fn min_distance(space: &UltraSpace) -> GammaValue {
    (0..space.len()).filter_map(|i| space.nearest_distance(i)).min().unwrap_or(GammaValue::Infinity)
}

fn separates(level: &LevelParams, space: &UltraSpace) -> bool {
    space.len() <= 1 || level.reach() < min_distance(space)
}

impl ScheduleSpec {
    /// Resolves the spec against a space. Auto scales start at
    /// `min(0, e_min)`, where every point shares one block, and step by one;
    /// an auto length stops at the first separating level.
    pub fn resolve(&self, space: &UltraSpace) -> Result<Schedule, ScheduleError> {
        let base = self.b.unwrap_or(GammaValue::ONE);
        if base.is_zero() {
            return Err(ScheduleError::ZeroBase);
        }
        let start = space.exponent_range().map_or(0, |(lo, _)| lo.min(0));
        let fixed_len = match (&self.j, &self.k) {
            (Scales::List(j), Exponents::List(k)) if j.len() != k.len() => {
                return Err(ScheduleError::LengthMismatch { j: j.len(), k: k.len() })
            }
            (Scales::List(j), _) => Some(j.len()),
            (Scales::Auto, Exponents::List(k)) => Some(k.len()),
            _ => None,
        };
        let params = |m: usize| {
            let j = match &self.j {
                Scales::List(v) => v[m],
                Scales::Auto => start + m as i64,
            };
            let k = match &self.k {
                Exponents::Auto => 0,
                Exponents::Constant(c) => *c,
                Exponents::List(v) => v[m],
            };
            LevelParams { j, k, b: base.scaled(-j) }
        };
        let levels = match fixed_len {
            Some(len) => (0..len).map(params).collect(),
            None => {
                let mut levels = Vec::new();
                loop {
                    let level = params(levels.len());
                    levels.push(level);
                    if separates(&level, space) {
                        break;
                    }
                    if levels.len() >= MAX_LEVELS {
                        return Err(ScheduleError::Unbounded(MAX_LEVELS));
                    }
                }
                levels
            }
        };
        let schedule = Schedule::from_levels(levels)?;
        schedule.check_separates(space)?;
        Ok(schedule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PAdic;

    fn residues(p: u32, values: &[i64]) -> UltraSpace {
        let points: Vec<PAdic> = values.iter().map(|&v| PAdic::from_i64(p, v, 8).unwrap()).collect();
        UltraSpace::from_points(values.iter().map(|v| v.to_string()).collect(), &points).unwrap()
    }

    #[test]
    fn default_schedule_runs_to_separation() {
        let s = residues(3, &(0..27).collect::<Vec<_>>());
        let schedule = ScheduleSpec::default().resolve(&s).unwrap();
        let scales: Vec<i64> = schedule.levels().iter().map(|l| l.j).collect();
        assert_eq!(scales, vec![0, 1, 2, 3]);
        for l in schedule.levels() {
            assert_eq!(l.threshold(), GammaValue::Finite(l.j));
        }
    }

    #[test]
    fn single_point_has_one_level() {
        let s = residues(2, &[5]);
        assert_eq!(ScheduleSpec::default().resolve(&s).unwrap().len(), 1);
    }

    #[test]
    fn large_distances_start_coarser() {
        let points = [PAdic::prime_power(2, -3, 4).unwrap(), PAdic::zero(2, 4).unwrap()];
        let s = UltraSpace::from_points(vec!["a".into(), "b".into()], &points).unwrap();
        let schedule = ScheduleSpec::default().resolve(&s).unwrap();
        assert_eq!(schedule.level(0).j, -3);
        assert_eq!(schedule.len(), 2);
    }

    #[test]
    fn constant_k_needs_one_more_level() {
        let s = residues(3, &(0..9).collect::<Vec<_>>());
        let spec = ScheduleSpec { k: Exponents::Constant(1), ..Default::default() };
        let schedule = spec.resolve(&s).unwrap();
        assert_eq!(schedule.len(), 4);
    }

    #[test]
    fn constraint_violations() {
        let s = residues(3, &(0..9).collect::<Vec<_>>());
        let spec = |j: Vec<i64>, k: Vec<i64>| ScheduleSpec { j: Scales::List(j), k: Exponents::List(k), b: None };
        assert!(matches!(
            spec(vec![0, 1, 2], vec![0, 1, 1]).resolve(&s),
            Err(ScheduleError::KIncreasing { m: 1, .. })
        ));
        assert!(matches!(
            spec(vec![0, 2, 2], vec![0, 0, 0]).resolve(&s),
            Err(ScheduleError::ScaleNotIncreasing { m: 2, .. })
        ));
        assert!(matches!(
            spec(vec![0, 1, 2], vec![0, -2, -2]).resolve(&s),
            Err(ScheduleError::KBelowBound { m: 1, k: -2 })
        ));
        assert!(matches!(
            spec(vec![0, 1], vec![0, 0]).resolve(&s),
            Err(ScheduleError::NotSeparating { .. })
        ));
        assert!(matches!(
            spec(vec![0, 1], vec![0]).resolve(&s),
            Err(ScheduleError::LengthMismatch { .. })
        ));
        assert!(spec(vec![0, 2, 3], vec![1, 0, 0]).resolve(&s).is_ok());
    }

    #[test]
    fn spec_json_forms() {
        let spec: ScheduleSpec = serde_json::from_str(r#"{"j": "auto", "k": 1, "b": 2}"#).unwrap();
        assert_eq!(spec.k, Exponents::Constant(1));
        assert_eq!(spec.b, Some(GammaValue::Finite(2)));
        let spec: ScheduleSpec = serde_json::from_str(r#"{"j": [0, 1], "k": "auto"}"#).unwrap();
        assert_eq!(spec.j, Scales::List(vec![0, 1]));
        assert!(serde_json::from_str::<ScheduleSpec>(r#"{"j": "sometimes"}"#).is_err());
        assert!(serde_json::from_str::<ScheduleSpec>(r#"{"j": 3}"#).is_err());
        let text = serde_json::to_string(&ScheduleSpec::default()).unwrap();
        assert_eq!(text, r#"{"j":"auto","k":"auto","b":null}"#);
    }
}
