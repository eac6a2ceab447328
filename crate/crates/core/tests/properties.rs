mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num::rational::BigRational;
use proptest::prelude::*;

use ultranerve::padic::{prime_power, PAdic};
use ultranerve::pipeline::bundle::{expansion_bundle, Bundle, ExpansionSummary};
use ultranerve::pipeline::{run, PipelineConfig, Stage};
use ultranerve::shadow::{distance_rational, theta};
use ultranerve::spectrum::{assemble_expansion, Exponents, ScheduleSpec};
use ultranerve::ultraspace::{Embedding, MergeReport, UltraSpace};

fn space(seed: u64, p: u32, n: usize, tree: bool) -> UltraSpace {
    let mut rng = common::rng(seed);
    if tree {
        common::tree_space(&mut rng, p, n)
    } else {
        common::padic_space(&mut rng, p, n)
    }
}

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(common::PRIMES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn embedding_is_isometric(seed in any::<u64>(), p in prime(), n in 1usize..40, tree in any::<bool>()) {
        let s = space(seed, p, n, tree);
        let e = Embedding::new(&s).unwrap();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(e.distance(a, b), s.dist(a, b));
            }
        }
    }

    #[test]
    fn expansions_verify(seed in any::<u64>(), p in prime(), n in 1usize..32, tree in any::<bool>(), k in 0i64..3) {
        let s = Arc::new(space(seed, p, n, tree));
        let spec = ScheduleSpec { k: Exponents::Constant(k), ..Default::default() };
        let e = assemble_expansion(s, &spec).unwrap();
        let report = e.verify();
        prop_assert!(report.passed(), "{:?}", report.failures());
        // The finest level of an auto schedule is discrete.
        prop_assert_eq!(e.nerve(e.len() - 1).vertex_count(), n);
        prop_assert_eq!(e.nerve(0).vertex_count(), 1);
    }

    #[test]
    fn bundles_rebuild(seed in any::<u64>(), p in prime(), n in 1usize..24, k in 0i64..2) {
        let s = Arc::new(space(seed, p, n, true));
        let spec = ScheduleSpec { k: Exponents::Constant(k), ..Default::default() };
        let e = assemble_expansion(s, &spec).unwrap();
        let value = expansion_bundle(&ExpansionSummary {
            prime: p,
            precision: 8,
            expansion: &e,
            merged: &MergeReport::default(),
            points: None,
            reports: BTreeMap::new(),
        });
        let text = serde_json::to_string(&value).unwrap();
        let bundle: Bundle = serde_json::from_str(&text).unwrap();
        let rebuilt = bundle.rebuild(Path::new("bundle.json")).unwrap();
        prop_assert_eq!(rebuilt.nerves(), e.nerves());
        prop_assert_eq!(rebuilt.bonding_maps(), e.bonding_maps());
    }

    #[test]
    fn theta_does_not_stretch(
        p in prime(),
        x in prop::collection::vec(0u32..5, 1..7),
        y in prop::collection::vec(0u32..5, 1..7),
    ) {
        let clip = |d: &[u32]| d.iter().map(|&v| v % p).collect::<Vec<_>>();
        let (x, y) = (PAdic::from_digits(p, 0, &clip(&x), 6).unwrap(), PAdic::from_digits(p, 0, &clip(&y), 6).unwrap());
        let gap = theta(&x, 6).unwrap() - theta(&y, 6).unwrap();
        let gap = if gap < BigRational::from_integer(0.into()) { -gap } else { gap };
        prop_assert!(gap <= distance_rational(&x, &y).unwrap());
        prop_assert!(gap < prime_power(p, 0) || x == y);
    }

    #[test]
    fn rounding_run_accepts_any_dissimilarity(
        p in prime(),
        entries in prop::collection::vec((1u32..50, 1u32..50), 15),
    ) {
        // Six points, upper triangle from the generated fractions.
        let n = 6;
        let mut rows = vec![vec!["0".to_string(); n]; n];
        let mut it = entries.iter();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = it.next().unwrap();
                rows[i][j] = format!("{a}/{b}");
                rows[j][i] = format!("{a}/{b}");
            }
        }
        let labels: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let input = serde_json::json!({ "labels": labels, "matrix": rows, "prime": p });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.json");
        std::fs::write(&path, input.to_string()).unwrap();
        let config = PipelineConfig {
            stages: Some(vec![Stage::Round, Stage::Verify, Stage::Shadow]),
            ..Default::default()
        };
        let out = run(&config, &path).unwrap();
        prop_assert!(out.report.passed, "{:?}", out.report.failures);
        prop_assert!(out.bundle.is_some() && out.shadow.is_some());
    }
}
