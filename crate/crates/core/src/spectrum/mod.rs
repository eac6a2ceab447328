//! Inverse sequences of nerves: bonding maps, their verification, threads,
//! and reconstruction of the space from the limit.

mod group;
mod schedule;

pub use group::{group_expansion, GroupExpansion};
pub use schedule::{Exponents, LevelParams, Schedule, ScheduleError, ScheduleSpec, Scales};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::nerve::{
    build_nerve, isolated_point_check, scale_cover, IsolationReport, NerveComplex, NerveError, Realization,
    UniformityReport,
};
use crate::padic::GammaValue;
use crate::ultraspace::{Embedding, SpaceError, UltraSpace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectrumError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Nerve(#[from] NerveError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("thread of point {point} is not coherent between levels {fine} and {coarse}")]
    Incoherent { point: usize, fine: usize, coarse: usize },
    #[error("bonding maps are not functorial: {from} -> {via} -> {to}")]
    NotFunctorial { from: usize, via: usize, to: usize },
    #[error("{0}")]
    Group(String),
}

/// Map from the vertices of a finer nerve to those of a coarser one,
/// sending each block to the block containing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BondingMap {
    pub from: usize,
    pub to: usize,
    pub vertex_map: BTreeMap<usize, usize>,
    /// Source maximal simplexes whose image spans no simplex.
    pub containment_violations: Vec<Vec<usize>>,
}

pub fn bonding_map(fine: &NerveComplex, coarse: &NerveComplex) -> Result<BondingMap, NerveError> {
    if let Some(bad) = fine
        .cover()
        .blocks()
        .iter()
        .find(|b| b.iter().any(|&x| coarse.cover().block_of(x) != coarse.cover().block_of(b[0])))
    {
        return Err(NerveError::NotNested(bad[0]));
    }
    let vertex_map: BTreeMap<usize, usize> = fine
        .vertices()
        .into_iter()
        .map(|v| (v, coarse.cover().representative_of(v)))
        .collect();
    let mut map = BondingMap { from: fine.level(), to: coarse.level(), vertex_map, containment_violations: Vec::new() };
    map.containment_violations = fine
        .maximal_simplexes()
        .iter()
        .filter(|s| !coarse.is_simplex(&map.image(s)))
        .cloned()
        .collect();
    Ok(map)
}

impl BondingMap {
    pub fn identity(nerve: &NerveComplex) -> Self {
        BondingMap {
            from: nerve.level(),
            to: nerve.level(),
            vertex_map: nerve.vertices().into_iter().map(|v| (v, v)).collect(),
            containment_violations: Vec::new(),
        }
    }

    pub fn apply(&self, v: usize) -> usize {
        self.vertex_map[&v]
    }

    /// Image of a vertex set, sorted and without repeats.
    pub fn image(&self, simplex: &[usize]) -> Vec<usize> {
        simplex.iter().map(|&v| self.apply(v)).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &BondingMap) -> BondingMap {
        BondingMap {
            from: self.from,
            to: next.to,
            vertex_map: self.vertex_map.iter().map(|(&v, &w)| (v, next.apply(w))).collect(),
            containment_violations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonstretchReport {
    pub pairs: usize,
    /// Vertex pairs whose images are farther apart than they are.
    pub violations: Vec<(usize, usize)>,
    pub merged_pairs: usize,
    pub surviving_pairs: usize,
    /// Surviving pairs whose distance, measured in units of the level base,
    /// shrinks by exactly `p`.
    pub exact_factor_pairs: usize,
    /// Pairs where the unit-normalised distance shrinks by less than `p`.
    pub contraction_failures: Vec<(usize, usize)>,
}

impl NonstretchReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contracts_by_p(&self) -> bool {
        self.contraction_failures.is_empty()
    }
}

pub fn verify_nonstretching(
    map: &BondingMap,
    source: &Realization,
    target: &Realization,
    source_base: GammaValue,
    target_base: GammaValue,
) -> NonstretchReport {
    let vertices: Vec<usize> = map.vertex_map.keys().copied().collect();
    let mut report = NonstretchReport {
        pairs: 0,
        violations: Vec::new(),
        merged_pairs: 0,
        surviving_pairs: 0,
        exact_factor_pairs: 0,
        contraction_failures: Vec::new(),
    };
    for (i, &a) in vertices.iter().enumerate() {
        for &b in &vertices[i + 1..] {
            report.pairs += 1;
            let before = source.distance(a, b);
            let (fa, fb) = (map.apply(a), map.apply(b));
            let after = if fa == fb { GammaValue::Infinity } else { target.distance(fa, fb) };
            if after > before {
                report.violations.push((a, b));
            }
            let (Some(e_after), Some(e_before)) = (after.exponent(), before.exponent()) else {
                report.merged_pairs += 1;
                continue;
            };
            report.surviving_pairs += 1;
            // after / b_target <= before / (p * b_source), in exponents.
            let (Some(bt), Some(bs)) = (target_base.exponent(), source_base.exponent()) else {
                continue;
            };
            let lhs = e_after - bt;
            let rhs = e_before - bs + 1;
            if lhs == rhs {
                report.exact_factor_pairs += 1;
            } else if lhs < rhs {
                report.contraction_failures.push((a, b));
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NondegeneracyReport {
    /// Source maximal simplexes with two or more vertices sent to one vertex.
    pub collapsed: Vec<Vec<usize>>,
}

pub fn verify_nondegenerate(map: &BondingMap, source: &NerveComplex) -> NondegeneracyReport {
    let collapsed = source
        .maximal_simplexes()
        .iter()
        .filter(|s| s.len() >= 2 && map.image(s).len() == 1)
        .cloned()
        .collect();
    NondegeneracyReport { collapsed }
}

/// The simplexes containing one point's block, coarsest level first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Thread {
    pub point: usize,
    pub simplexes: Vec<Vec<usize>>,
}

/// Nerves of a space at every level of a schedule, with the bonding maps
/// `bonding[m]` from level `m + 1` to level `m`.
#[derive(Debug, Clone)]
pub struct Expansion {
    space: Arc<UltraSpace>,
    embedding: Arc<Embedding>,
    schedule: Schedule,
    nerves: Vec<NerveComplex>,
    bonding: Vec<BondingMap>,
}

pub fn assemble_expansion(space: Arc<UltraSpace>, spec: &ScheduleSpec) -> Result<Expansion, SpectrumError> {
    space.require_separated()?;
    let schedule = spec.resolve(&space)?;
    Expansion::with_schedule(space, schedule)
}

impl Expansion {
    /// Expansion along an already resolved schedule, whose finest level must
    /// separate the space.
    pub fn with_schedule(space: Arc<UltraSpace>, schedule: Schedule) -> Result<Self, SpectrumError> {
        space.require_separated()?;
        schedule.check_separates(&space)?;
        let embedding = Arc::new(Embedding::new(&space)?);
        let nerves = schedule
            .levels()
            .iter()
            .enumerate()
            .map(|(m, level)| build_nerve(&space, &scale_cover(&space, level.j), level.k, Some(level.b), m))
            .collect::<Result<Vec<_>, _>>()?;
        let bonding = nerves
            .windows(2)
            .map(|pair| bonding_map(&pair[1], &pair[0]))
            .collect::<Result<Vec<_>, _>>()?;
        let expansion = Expansion { space, embedding, schedule, nerves, bonding };
        if let Some((from, via, to)) = expansion.functoriality_failures().first() {
            return Err(SpectrumError::NotFunctorial { from: *from, via: *via, to: *to });
        }
        Ok(expansion)
    }

    pub fn space(&self) -> &UltraSpace {
        &self.space
    }

    pub fn embedding(&self) -> &Arc<Embedding> {
        &self.embedding
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn nerves(&self) -> &[NerveComplex] {
        &self.nerves
    }

    pub fn nerve(&self, m: usize) -> &NerveComplex {
        &self.nerves[m]
    }

    pub fn len(&self) -> usize {
        self.nerves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nerves.is_empty()
    }

    /// The map from level `m + 1` to level `m`.
    pub fn bonding(&self, m: usize) -> &BondingMap {
        &self.bonding[m]
    }

    pub fn bonding_maps(&self) -> &[BondingMap] {
        &self.bonding
    }

    /// Composite of consecutive bonding maps from level `from` down to `to`.
    pub fn composite(&self, from: usize, to: usize) -> BondingMap {
        assert!(to <= from, "bonding maps run from finer to coarser levels");
        let mut map = BondingMap::identity(&self.nerves[from]);
        for m in (to..from).rev() {
            map = map.then(&self.bonding[m]);
        }
        map
    }

    /// Triples `(m, m', l)` where the direct map from `m` to `l` differs
    /// from the composite through `m'`.
    pub fn functoriality_failures(&self) -> Vec<(usize, usize, usize)> {
        let mut failures = Vec::new();
        for m in 0..self.len() {
            for l in 0..=m {
                let direct = bonding_map(&self.nerves[m], &self.nerves[l]).expect("levels are nested");
                for via in l..=m {
                    let composite = self.composite(m, via).then(&self.composite(via, l));
                    if composite.vertex_map != direct.vertex_map {
                        failures.push((m, via, l));
                    }
                }
            }
        }
        failures
    }

    /// The first levels only.
    pub fn truncated(&self, levels: usize) -> Expansion {
        let levels = levels.clamp(1, self.len());
        Expansion {
            space: Arc::clone(&self.space),
            embedding: Arc::clone(&self.embedding),
            schedule: Schedule::from_levels(self.schedule.levels()[..levels].to_vec()).expect("prefix of a valid schedule"),
            nerves: self.nerves[..levels].to_vec(),
            bonding: self.bonding[..levels - 1].to_vec(),
        }
    }

    pub fn realization(&self, m: usize) -> Realization {
        Realization::new(&self.nerves[m], Arc::clone(&self.embedding))
    }

    pub fn thread(&self, point: usize) -> Result<Thread, SpectrumError> {
        if point >= self.space.len() {
            return Err(SpectrumError::UnknownPoint(point.to_string()));
        }
        Ok(Thread { point, simplexes: self.nerves.iter().map(|n| n.simplex_of_point(point).to_vec()).collect() })
    }

    pub fn thread_of(&self, label: &str) -> Result<Thread, SpectrumError> {
        let point = self.space.index_of(label).ok_or_else(|| SpectrumError::UnknownPoint(label.to_string()))?;
        self.thread(point)
    }

    /// First `(fine, coarse)` pair of levels where the thread breaks.
    pub fn incoherence(&self, thread: &Thread) -> Option<(usize, usize)> {
        if thread.simplexes.len() != self.len() {
            return Some((thread.simplexes.len(), self.len()));
        }
        (0..self.bonding.len()).find_map(|m| {
            let image = self.bonding[m].image(&thread.simplexes[m + 1]);
            let coarse: BTreeSet<usize> = thread.simplexes[m].iter().copied().collect();
            let inside = self.nerves[m].is_simplex(&thread.simplexes[m])
                && self.nerves[m + 1].is_simplex(&thread.simplexes[m + 1])
                && image.iter().all(|v| coarse.contains(v));
            (!inside).then_some((m + 1, m))
        })
    }

    /// Points lying under every simplex of the thread.
    pub fn reconstruct(&self, thread: &Thread) -> Result<BTreeSet<usize>, SpectrumError> {
        if let Some((fine, coarse)) = self.incoherence(thread) {
            return Err(SpectrumError::Incoherent { point: thread.point, fine, coarse });
        }
        let mut points: BTreeSet<usize> = (0..self.space.len()).collect();
        for (nerve, simplex) in self.nerves.iter().zip(&thread.simplexes) {
            let support: BTreeSet<usize> = nerve.support(simplex).into_iter().collect();
            points = points.intersection(&support).copied().collect();
        }
        Ok(points)
    }

    /// Compares each distance with the scale recovered from the level where
    /// the two threads part.
    pub fn limit_isometry_check(&self) -> LimitReport {
        let n = self.space.len();
        let levels = self.schedule.levels();
        let mut report = LimitReport {
            pairs: 0,
            mismatches: Vec::new(),
            bound_violations: Vec::new(),
            unseparated: Vec::new(),
            max_exponent_gap: 0,
        };
        for x in 0..n {
            for y in x + 1..n {
                report.pairs += 1;
                let parted = self.nerves.iter().position(|nerve| {
                    nerve.simplex_index(nerve.cover().representative_of(x))
                        != nerve.simplex_index(nerve.cover().representative_of(y))
                });
                let Some(m) = parted else {
                    report.unseparated.push((x, y));
                    continue;
                };
                let true_distance = self.space.dist(x, y);
                if m == 0 {
                    report.mismatches.push((x, y));
                    report.bound_violations.push((x, y));
                    continue;
                }
                let recovered = levels[m - 1].reach();
                if recovered != true_distance {
                    report.mismatches.push((x, y));
                }
                if !(levels[m].reach() < true_distance && true_distance <= recovered) {
                    report.bound_violations.push((x, y));
                }
                if let (Some(t), Some(r)) = (true_distance.exponent(), recovered.exponent()) {
                    report.max_exponent_gap = report.max_exponent_gap.max(t - r);
                }
            }
        }
        report
    }

    /// Runs every check on the expansion.
    pub fn verify(&self) -> ExpansionReport {
        let realizations: Vec<Realization> = (0..self.len()).map(|m| self.realization(m)).collect();
        let levels = self.schedule.levels();
        let uniformity = realizations
            .iter()
            .map(|r| r.check_uniform().expect("nerves are nonempty"))
            .collect();
        let affine_defects = realizations.iter().map(|r| r.affine_defects().len()).sum();
        let maps = self
            .bonding
            .iter()
            .enumerate()
            .map(|(m, map)| MapReport {
                from: m + 1,
                to: m,
                containment_violations: map.containment_violations.len(),
                nonstretching: verify_nonstretching(
                    map,
                    &realizations[m + 1],
                    &realizations[m],
                    levels[m + 1].b,
                    levels[m].b,
                ),
                nondegeneracy: verify_nondegenerate(map, &self.nerves[m + 1]),
            })
            .collect();
        let mut incoherent_threads = Vec::new();
        let mut reconstruction_failures = Vec::new();
        for x in 0..self.space.len() {
            let thread = self.thread(x).expect("point in range");
            match self.reconstruct(&thread) {
                Ok(points) if points.len() == 1 && points.contains(&x) => {}
                Ok(_) => reconstruction_failures.push(x),
                Err(_) => incoherent_threads.push(x),
            }
        }
        ExpansionReport {
            uniformity,
            affine_defects,
            maps,
            functoriality_failures: self.functoriality_failures(),
            incoherent_threads,
            reconstruction_failures,
            limit: self.limit_isometry_check(),
            isolation: isolated_point_check(&self.space, &self.nerves),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitReport {
    pub pairs: usize,
    /// Pairs whose recovered scale differs from their distance.
    pub mismatches: Vec<(usize, usize)>,
    /// Pairs whose distance falls outside the bracket the schedule allows.
    pub bound_violations: Vec<(usize, usize)>,
    /// Pairs never parted by the expansion.
    pub unseparated: Vec<(usize, usize)>,
    /// Largest `e_true - e_recovered`: distances are recovered within `p`
    /// to this power.
    pub max_exponent_gap: i64,
}

impl LimitReport {
    pub fn passed(&self) -> bool {
        self.bound_violations.is_empty() && self.unseparated.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MapReport {
    pub from: usize,
    pub to: usize,
    pub containment_violations: usize,
    pub nonstretching: NonstretchReport,
    pub nondegeneracy: NondegeneracyReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionReport {
    pub uniformity: Vec<UniformityReport>,
    pub affine_defects: usize,
    pub maps: Vec<MapReport>,
    pub functoriality_failures: Vec<(usize, usize, usize)>,
    pub incoherent_threads: Vec<usize>,
    pub reconstruction_failures: Vec<usize>,
    pub limit: LimitReport,
    pub isolation: IsolationReport,
}

impl ExpansionReport {
    /// Failed checks, described; empty when everything holds.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (m, u) in self.uniformity.iter().enumerate() {
            if !u.is_uniform {
                out.push(format!("level {m} is not a uniform polyhedron"));
            }
        }
        if self.affine_defects > 0 {
            out.push(format!("{} simplexes with affinely dependent vertices", self.affine_defects));
        }
        for map in &self.maps {
            if map.containment_violations > 0 {
                out.push(format!(
                    "bonding {} -> {}: {} simplexes leave every target simplex",
                    map.from, map.to, map.containment_violations
                ));
            }
            if let Some((a, b)) = map.nonstretching.violations.first() {
                out.push(format!("bonding {} -> {} stretches the pair ({a}, {b})", map.from, map.to));
            }
        }
        if let Some((m, via, l)) = self.functoriality_failures.first() {
            out.push(format!("composite {m} -> {via} -> {l} differs from the direct map"));
        }
        if let Some(x) = self.incoherent_threads.first() {
            out.push(format!("thread of point {x} is incoherent"));
        }
        if let Some(x) = self.reconstruction_failures.first() {
            out.push(format!("point {x} is not recovered from its thread"));
        }
        if let Some((x, y)) = self.limit.bound_violations.first() {
            out.push(format!("distance of ({x}, {y}) is not recovered from the limit"));
        }
        if let Some((x, y)) = self.limit.unseparated.first() {
            out.push(format!("points {x} and {y} are never separated"));
        }
        if let Some((x, m)) = self.isolation.exceptions.first() {
            out.push(format!("point {x} should be isolated at level {m}"));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}
