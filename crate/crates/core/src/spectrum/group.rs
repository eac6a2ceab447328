//! The residues mod `p^m` under the p-adic metric: a finite stage of
//! `Z_p = lim Z/p^m`, whose expansion levels are the quotients `Z/p^i`.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::{assemble_expansion, Expansion, ScheduleSpec, SpectrumError};
use crate::padic::{check_prime, PAdic};
use crate::ultraspace::UltraSpace;

// Keeps the distance matrix, which has p^(2m) entries, within memory.
const MAX_POINTS: u64 = 1 << 12;

#[derive(Debug, Clone)]
pub struct GroupExpansion {
    pub prime: u32,
    pub depth: u32,
    /// Residue carried by each point, in point order.
    pub residues: Vec<u64>,
    pub expansion: Expansion,
    pub checks: GroupChecks,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupChecks {
    pub level_counts: Vec<usize>,
    pub expected_counts: Vec<usize>,
    /// `(level, vertex)` where the bonding map is not reduction mod `p^level`.
    pub reduction_failures: Vec<(usize, u64)>,
    /// Translations tried; zero when a proper subset was given.
    pub translations: u64,
    /// `(c, x, y)` with `d(x + c, y + c) != d(x, y)`.
    pub invariance_failures: Vec<(u64, u64, u64)>,
}

impl GroupChecks {
    pub fn passed(&self) -> bool {
        self.level_counts == self.expected_counts
            && self.reduction_failures.is_empty()
            && self.invariance_failures.is_empty()
    }
}

/// Builds the expansion of `Z/p^depth` (or of the given residues) with the
/// default schedule and checks it against residue arithmetic.
pub fn group_expansion(prime: u32, depth: u32, subset: Option<&[u64]>) -> Result<GroupExpansion, SpectrumError> {
    check_prime(u64::from(prime)).map_err(crate::ultraspace::SpaceError::from)?;
    if depth == 0 {
        return Err(SpectrumError::Group("depth must be at least 1".into()));
    }
    let modulus = u64::from(prime)
        .checked_pow(depth)
        .filter(|&m| m <= MAX_POINTS)
        .ok_or_else(|| SpectrumError::Group(format!("{prime}^{depth} residues exceed the limit of {MAX_POINTS}")))?;
    let residues: Vec<u64> = match subset {
        None => (0..modulus).collect(),
        Some(values) => {
            let set: BTreeSet<u64> = values.iter().copied().collect();
            if set.is_empty() || set.len() != values.len() {
                return Err(SpectrumError::Group("subset must be nonempty and without repeats".into()));
            }
            if let Some(bad) = set.iter().find(|&&r| r >= modulus) {
                return Err(SpectrumError::Group(format!("{bad} is not a residue mod {modulus}")));
            }
            set.into_iter().collect()
        }
    };
    let full = residues.len() as u64 == modulus;

    let points = residues
        .iter()
        .map(|&r| PAdic::from_i64(prime, r as i64, depth as usize))
        .collect::<Result<Vec<_>, _>>()
        .map_err(crate::ultraspace::SpaceError::from)?;
    let labels = residues.iter().map(u64::to_string).collect();
    let space = Arc::new(UltraSpace::from_points(labels, &points)?);
    let expansion = assemble_expansion(Arc::clone(&space), &ScheduleSpec::default())?;

    let p = u64::from(prime);
    let level_counts = expansion.nerves().iter().map(|n| n.vertex_count()).collect();
    let expected_counts = (0..expansion.len())
        .map(|i| residues.iter().map(|r| r % p.pow(i as u32)).collect::<BTreeSet<_>>().len())
        .collect();

    let mut reduction_failures = Vec::new();
    for (i, map) in expansion.bonding_maps().iter().enumerate() {
        let q = p.pow(i as u32);
        for (&v, &w) in &map.vertex_map {
            let expected = residues.iter().copied().find(|s| s % q == residues[v] % q).expect("v itself qualifies");
            if residues[w] != expected {
                reduction_failures.push((i, residues[v]));
            }
        }
    }

    let mut invariance_failures = Vec::new();
    let translations = if full { modulus } else { 0 };
    for c in 0..translations {
        for x in 0..modulus {
            for y in 0..modulus {
                let (tx, ty) = ((x + c) % modulus, (y + c) % modulus);
                if space.dist(tx as usize, ty as usize) != space.dist(x as usize, y as usize) {
                    invariance_failures.push((c, x, y));
                }
            }
        }
    }

    Ok(GroupExpansion {
        prime,
        depth,
        residues,
        expansion,
        checks: GroupChecks { level_counts, expected_counts, reduction_failures, translations, invariance_failures },
    })
}
