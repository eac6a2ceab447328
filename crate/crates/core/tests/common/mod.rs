//! Seeded random corpora shared by the integration tests and the acceptance
//! run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultranerve::padic::{GammaValue, PAdic};
use ultranerve::ultraspace::UltraSpace;

pub const PRIMES: [u32; 3] = [2, 3, 5];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// Distinct p-adic points with valuations in `-2..=2`.
pub fn padic_points(rng: &mut ChaCha8Rng, p: u32, n: usize, precision: usize) -> Vec<PAdic> {
    let mut seen = BTreeSet::new();
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let v = rng.gen_range(-2..=2);
        let len = rng.gen_range(1..=precision.min(8));
        let digits: Vec<u32> = (0..len).map(|_| rng.gen_range(0..p)).collect();
        let x = PAdic::from_digits(p, v, &digits, precision).expect("digits below p");
        if seen.insert(x.to_string()) {
            points.push(x);
        }
    }
    points
}

pub fn padic_space(rng: &mut ChaCha8Rng, p: u32, n: usize) -> UltraSpace {
    let points = padic_points(rng, p, n, 16);
    UltraSpace::from_points(labels(n), &points).expect("distinct points form a separated space")
}

/// Random dendrogram: each internal node splits its points into at least
/// two parts, and the distance between points is `p^-e` for the exponent of
/// the node where they part. Exponents grow by 1 or 2 going down.
pub fn tree_space(rng: &mut ChaCha8Rng, p: u32, n: usize) -> UltraSpace {
    let mut exps = vec![vec![0i64; n]; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let root = rng.gen_range(-3..=1);
    split(rng, &order, root, &mut exps);
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { GammaValue::Infinity } else { GammaValue::Finite(exps[i][j]) })
                .collect()
        })
        .collect();
    UltraSpace::new(labels(n), p, rows).expect("dendrogram distances are ultrametric")
}

fn split(rng: &mut ChaCha8Rng, members: &[usize], e: i64, exps: &mut [Vec<i64>]) {
    if members.len() < 2 {
        return;
    }
    let parts = rng.gen_range(2..=members.len().min(4));
    let mut cuts: Vec<usize> = (1..members.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts[..parts - 1].to_vec();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(members.len());
    let groups: Vec<&[usize]> = cuts.windows(2).map(|w| &members[w[0]..w[1]]).collect();
    for (a, g) in groups.iter().enumerate() {
        for h in &groups[a + 1..] {
            for &x in *g {
                for &y in *h {
                    exps[x][y] = e;
                    exps[y][x] = e;
                }
            }
        }
    }
    for g in groups {
        let step = rng.gen_range(1..=2);
        split(rng, g, e + step, exps);
    }
}

/// `count` separated spaces with up to 64 points, alternating between
/// p-adic point sets and random dendrograms over p in {2, 3, 5}.
pub fn corpus(seed: u64, count: usize) -> Vec<UltraSpace> {
    let mut rng = rng(seed);
    (0..count)
        .map(|i| {
            let p = PRIMES[i % PRIMES.len()];
            let n = rng.gen_range(1..=64);
            if i % 2 == 0 {
                padic_space(&mut rng, p, n)
            } else {
                tree_space(&mut rng, p, n)
            }
        })
        .collect()
}

/// A tight cluster, with every distance at most `p^-2`, plus one outlier at
/// distance `p^gap` from all of it. Returns the space and the outlier index.
pub fn planted_outlier(rng: &mut ChaCha8Rng, p: u32, n: usize, gap: i64) -> (UltraSpace, usize) {
    let cluster = tree_space(rng, p, n);
    let shift = cluster.exponent_range().map_or(0, |(lo, _)| 2 - lo);
    let outlier = rng.gen_range(0..=n);
    let m = n + 1;
    let index = |i: usize| if i < outlier { i } else { i + 1 };
    let mut rows = vec![vec![GammaValue::Infinity; m]; m];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rows[index(i)][index(j)] = cluster.dist(i, j).scaled(-shift);
            }
        }
        rows[index(i)][outlier] = GammaValue::Finite(-gap);
        rows[outlier][index(i)] = GammaValue::Finite(-gap);
    }
    let space = UltraSpace::new(labels(m), p, rows).expect("outlier keeps the space ultrametric");
    (space, outlier)
}

/// Classes of the transitive closure of `d(x, y) <= p^-j`, by boolean
/// Warshall closure; each class sorted, classes ordered by first member.
pub fn closure_classes(space: &UltraSpace, j: i64) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut reach: Vec<Vec<bool>> = (0..n)
        .map(|x| (0..n).map(|y| space.dist(x, y) <= GammaValue::Finite(j)).collect())
        .collect();
    for k in 0..n {
        for x in 0..n {
            if reach[x][k] {
                for y in 0..n {
                    if reach[k][y] {
                        reach[x][y] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for x in 0..n {
        if !seen[x] {
            let class: Vec<usize> = (0..n).filter(|&y| reach[x][y]).collect();
            for &y in &class {
                seen[y] = true;
            }
            classes.push(class);
        }
    }
    classes
}
