//! Graphviz export: one undirected graph per level, each maximal simplex
//! drawn as a filled cluster whose members are pairwise joined.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::bundle::{Bundle, LevelJson};
use super::{write_file, PipelineError};

const FILLS: &[&str] = &["lightblue", "lightsalmon", "palegreen", "plum", "khaki", "lightpink"];

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn level_dot(level: &LevelJson) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph level_{} {{", level.level);
    let _ = writeln!(out, "  label={};", quoted(&format!("level {} (scale {}, dimL {})", level.level, level.scale, level.dim_l)));
    out.push_str("  node [shape=circle];\n");
    for v in &level.vertices {
        let _ = writeln!(out, "  {};", quoted(v));
    }
    let mut edges = Vec::new();
    for (i, simplex) in level.maximal_simplexes.iter().filter(|s| s.len() > 1).enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{i} {{");
        let _ = writeln!(out, "    style=filled;\n    fillcolor={};", FILLS[i % FILLS.len()]);
        for v in simplex {
            let _ = writeln!(out, "    {};", quoted(v));
        }
        out.push_str("  }\n");
        for (a, x) in simplex.iter().enumerate() {
            for y in &simplex[a + 1..] {
                edges.push(format!("  {} -- {};", quoted(x), quoted(y)));
            }
        }
    }
    for e in edges {
        out.push_str(&e);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Writes `level_<m>.dot` for every level into `dir`.
pub fn export_dot(bundle: &Bundle, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    bundle
        .levels
        .iter()
        .map(|level| write_file(&dir.join(format!("level_{}.dot", level.level)), &level_dot(level)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::GammaValue;

    fn level(vertices: &[&str], simplexes: &[&[&str]]) -> LevelJson {
        LevelJson {
            level: 1,
            scale: 1,
            threshold: GammaValue::ONE,
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            maximal_simplexes: simplexes.iter().map(|s| s.iter().map(|v| v.to_string()).collect()).collect(),
            dim_l: simplexes.iter().map(|s| s.len()).max().unwrap_or(1) - 1,
        }
    }

    #[test]
    fn discrete_level_has_nodes_only() {
        let dot = level_dot(&level(&["0", "1"], &[&["0"], &["1"]]));
        assert!(!dot.contains("--"));
        assert!(!dot.contains("cluster"));
        assert_eq!(dot.matches(";\n").count(), 4);
    }

    #[test]
    fn clique_edges() {
        let dot = level_dot(&level(&["0", "1", "2"], &[&["0", "1", "2"]]));
        assert_eq!(dot.matches(" -- ").count(), 3);
        assert!(dot.contains("\"0\" -- \"2\""));
    }

    #[test]
    fn labels_are_escaped() {
        let dot = level_dot(&level(&["a\"b"], &[&["a\"b"]]));
        assert!(dot.contains("\"a\\\"b\""));
    }
}
