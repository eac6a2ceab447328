//! Expansion and shadow bundles. Bundles are built as JSON values, whose
//! object keys serialize in sorted order, so equal inputs give equal bytes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Value};

use super::PipelineError;
use crate::padic::{GammaValue, PAdic};
use crate::shadow::{rational_text, ShadowBonding, ShadowCheck, ShadowComplex};
use crate::spectrum::{Expansion, LevelParams, Schedule};
use crate::ultraspace::{MergeReport, UltraSpace};

pub struct ExpansionSummary<'a> {
    pub prime: u32,
    pub precision: usize,
    pub expansion: &'a Expansion,
    pub merged: &'a MergeReport,
    pub points: Option<&'a [PAdic]>,
    pub reports: BTreeMap<String, Value>,
}

fn names(space: &UltraSpace, ids: &[usize]) -> Vec<String> {
    ids.iter().map(|&i| space.label(i).to_string()).collect()
}

pub fn expansion_bundle(summary: &ExpansionSummary<'_>) -> Value {
    let e = summary.expansion;
    let space = e.space();
    let levels: Vec<Value> = e
        .nerves()
        .iter()
        .zip(e.schedule().levels())
        .map(|(nerve, params)| {
            json!({
                "level": nerve.level(),
                "scale": params.j,
                "k": params.k,
                "b": params.b,
                "threshold": nerve.threshold(),
                "vertices": names(space, &nerve.vertices()),
                "maximal_simplexes": nerve.maximal_simplexes().iter().map(|s| names(space, s)).collect::<Vec<_>>(),
                "dimL": nerve.dim_l(),
            })
        })
        .collect();
    let bonding: Vec<Value> = e
        .bonding_maps()
        .iter()
        .map(|map| {
            let vertex_map: BTreeMap<&str, &str> =
                map.vertex_map.iter().map(|(&v, &w)| (space.label(v), space.label(w))).collect();
            json!({ "from": map.from, "to": map.to, "vertex_map": vertex_map })
        })
        .collect();
    let schedule = e.schedule().levels();
    let mut bundle = json!({
        "prime": summary.prime,
        "precision": summary.precision,
        "space": { "labels": space.labels(), "gamma_matrix": space.rows() },
        "merged": summary.merged.merged,
        "schedule": {
            "j": schedule.iter().map(|l| l.j).collect::<Vec<_>>(),
            "k": schedule.iter().map(|l| l.k).collect::<Vec<_>>(),
            "b": schedule.iter().map(|l| l.b).collect::<Vec<_>>(),
        },
        "levels": levels,
        "bonding": bonding,
        "reports": summary.reports,
    });
    if let Some(points) = summary.points {
        bundle["points"] = json!(points.iter().map(PAdic::to_string).collect::<Vec<_>>());
    }
    bundle
}

#[derive(Debug, Clone, Deserialize)]
pub struct SpaceJson {
    pub labels: Vec<String>,
    pub gamma_matrix: Vec<Vec<GammaValue>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScheduleJson {
    pub j: Vec<i64>,
    pub k: Vec<i64>,
    pub b: Vec<GammaValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct LevelJson {
    pub level: usize,
    pub scale: i64,
    pub threshold: GammaValue,
    pub vertices: Vec<String>,
    pub maximal_simplexes: Vec<Vec<String>>,
    #[serde(rename = "dimL")]
    pub dim_l: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BondingJson {
    pub from: usize,
    pub to: usize,
    pub vertex_map: BTreeMap<String, String>,
}

/// The parts of an expansion bundle read back by later commands.
#[derive(Debug, Clone, Deserialize)]
pub struct Bundle {
    pub prime: u32,
    pub precision: usize,
    pub space: SpaceJson,
    #[serde(default)]
    pub points: Option<Vec<String>>,
    pub schedule: ScheduleJson,
    pub levels: Vec<LevelJson>,
    pub bonding: Vec<BondingJson>,
}

pub fn read_bundle(path: &Path) -> Result<Bundle, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::from_json(path, e))
}

impl Bundle {
    /// Recomputes the expansion from the stored space and schedule and
    /// checks it against the stored levels.
    pub fn rebuild(&self, path: &Path) -> Result<Expansion, PipelineError> {
        let space = UltraSpace::new(self.space.labels.clone(), self.prime, self.space.gamma_matrix.clone())
            .map_err(|e| PipelineError::schema(path, format!("space: {e}")))?;
        let s = &self.schedule;
        if s.k.len() != s.j.len() || s.b.len() != s.j.len() {
            return Err(PipelineError::schema(path, "schedule lists differ in length"));
        }
        let levels = (0..s.j.len()).map(|m| LevelParams { j: s.j[m], k: s.k[m], b: s.b[m] }).collect();
        let schedule = Schedule::from_levels(levels).map_err(PipelineError::Schedule)?;
        let expansion = Expansion::with_schedule(Arc::new(space), schedule).map_err(PipelineError::from_spectrum)?;
        let rebuilt = expansion_bundle(&ExpansionSummary {
            prime: self.prime,
            precision: self.precision,
            expansion: &expansion,
            merged: &MergeReport::default(),
            points: None,
            reports: BTreeMap::new(),
        });
        let levels: Vec<LevelJson> = serde_json::from_value(rebuilt["levels"].clone()).expect("bundle levels parse");
        if levels != self.levels {
            return Err(PipelineError::schema(path, "stored levels do not match the stored space and schedule"));
        }
        Ok(expansion)
    }

    pub fn parsed_points(&self, path: &Path) -> Result<Option<Vec<PAdic>>, PipelineError> {
        self.points
            .as_ref()
            .map(|texts| {
                texts
                    .iter()
                    .map(|t| t.parse::<PAdic>().map_err(|e| PipelineError::schema(path, format!("points: {e}"))))
                    .collect()
            })
            .transpose()
    }
}

pub struct ShadowSummary<'a> {
    pub prime: u32,
    pub expansion: &'a Expansion,
    pub shadows: &'a [ShadowComplex],
    pub bondings: &'a [ShadowBonding],
    pub checks: &'a [ShadowCheck],
    pub theta: Option<(usize, &'a [num::rational::BigRational])>,
}

pub fn shadow_bundle(summary: &ShadowSummary<'_>) -> Value {
    let space = summary.expansion.space();
    let levels: Vec<Value> = summary
        .shadows
        .iter()
        .zip(summary.expansion.nerves())
        .map(|(shadow, nerve)| {
            let cells: Vec<Value> = shadow
                .cells
                .iter()
                .map(|c| {
                    json!({
                        "vertices": names(space, &c.vertices),
                        "base": space.label(c.base),
                        "axes": names(space, &c.axes),
                        "dimR": c.dim_r,
                    })
                })
                .collect();
            json!({
                "level": shadow.level,
                "vertices": names(space, &shadow.vertices().into_iter().collect::<Vec<_>>()),
                "cells": cells,
                "dimR": shadow.dim_r(),
                "dimL": nerve.dim_l(),
            })
        })
        .collect();
    let bonding: Vec<Value> = summary
        .bondings
        .iter()
        .map(|b| {
            let vertex_map: BTreeMap<&str, &str> =
                b.vertex_map.iter().map(|(&v, &w)| (space.label(v), space.label(w))).collect();
            let cells: Vec<Value> = b
                .cells
                .iter()
                .map(|c| json!({ "source": c.source, "target": c.target, "images": names(space, &c.images) }))
                .collect();
            json!({ "from": b.from, "to": b.to, "vertex_map": vertex_map, "cells": cells, "extension": "affine" })
        })
        .collect();
    let mut bundle = json!({
        "prime": summary.prime,
        "levels": levels,
        "bonding": bonding,
        "checks": summary.checks,
    });
    if let Some((digits, samples)) = summary.theta {
        let map: BTreeMap<&str, String> =
            space.labels().iter().map(String::as_str).zip(samples.iter().map(rational_text)).collect();
        bundle["theta_digits"] = json!(digits);
        bundle["theta_samples"] = json!(map);
    }
    bundle
}

/// `label,digits,theta` rows. Digits run least significant first from the
/// smallest valuation present, or from position 0 if that is smaller.
pub fn theta_csv(
    labels: &[String],
    points: &[PAdic],
    samples: &[num::rational::BigRational],
) -> Result<String, PipelineError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| PipelineError::Io { path: "theta.csv".into(), message: e.to_string() };
    writer.write_record(["label", "digits", "theta"]).map_err(io)?;
    let shift = points.iter().filter_map(PAdic::valuation).min().unwrap_or(0).min(0);
    for ((label, point), theta) in labels.iter().zip(points).zip(samples) {
        let top = point.valuation().map_or(shift, |v| v + point.digits().len() as i64);
        let mut digits: Vec<u32> = (shift..top).map(|i| point.digit_at(i)).collect();
        while digits.len() > 1 && digits.last() == Some(&0) {
            digits.pop();
        }
        if digits.is_empty() {
            digits.push(0);
        }
        let text: Vec<String> = digits.iter().map(u32::to_string).collect();
        writer.write_record([label.as_str(), &text.join(" "), &rational_text(theta)]).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| PipelineError::Io { path: "theta.csv".into(), message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    text
}
