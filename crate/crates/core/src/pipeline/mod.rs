//! The pipeline driver behind the command line: input loading, staged runs,
//! bundle and report output, and DOT export.

pub mod bundle;
pub mod dot;
pub mod input;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::nerve::NerveError;
use crate::padic::{check_prime, round_to_gamma, PAdic, DEFAULT_PRECISION};
use crate::shadow::{self, ShadowBonding, ShadowCheck, ShadowComplex};
use crate::spectrum::{assemble_expansion, group_expansion, Expansion, ScheduleError, ScheduleSpec, SpectrumError};
use crate::ultraspace::{DissimilarityMatrix, MergeReport, SpaceError, UltraSpace};

use bundle::{expansion_bundle, shadow_bundle, theta_csv, to_text, ExpansionSummary, ShadowSummary};
use input::{read_input, InputData};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "ULTRANERVE_CONFIG";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("schedule rejected: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("expansion rejected: {0}")]
    Nerve(#[from] NerveError),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl PipelineError {
    pub fn schema(path: &Path, message: impl Into<String>) -> Self {
        PipelineError::Schema { path: path.display().to_string(), message: message.into() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        PipelineError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    /// Syntax errors keep their position; type and field errors are schema
    /// errors.
    pub fn from_json(path: &Path, err: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match err.classify() {
            Category::Io => PipelineError::Io { path: path.display().to_string(), message: err.to_string() },
            Category::Syntax | Category::Eof => PipelineError::Parse {
                path: path.display().to_string(),
                line: err.line(),
                column: err.column(),
                message: err.to_string(),
            },
            Category::Data => PipelineError::schema(path, err.to_string()),
        }
    }

    pub fn from_spectrum(err: SpectrumError) -> Self {
        match err {
            SpectrumError::Schedule(e) => PipelineError::Schedule(e),
            SpectrumError::Nerve(e) => PipelineError::Nerve(e),
            SpectrumError::Space(e) => PipelineError::Schema { path: "input".into(), message: e.to_string() },
            other => PipelineError::Verification(other.to_string()),
        }
    }

    /// Process exit status; 2 is left to argument errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Verification(_) => 1,
            PipelineError::Parse { .. } => 3,
            PipelineError::Schema { .. } => 4,
            PipelineError::Schedule(_) | PipelineError::Nerve(_) => 5,
            PipelineError::Config(_) => 6,
            PipelineError::Io { .. } => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Validate,
    Round,
    Expand,
    Verify,
    Shadow,
    Demo,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Round => "round",
            Stage::Expand => "expand",
            Stage::Verify => "verify",
            Stage::Shadow => "shadow",
            Stage::Demo => "demo",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub prime: Option<u32>,
    #[serde(default)]
    pub precision: Option<usize>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub stages: Option<Vec<Stage>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| match PipelineError::from_json(path, e) {
            PipelineError::Schema { path, message } => PipelineError::Config(format!("{path}: {message}")),
            other => other,
        })
    }

    /// Overlays the flags that were given.
    pub fn with_overrides(mut self, o: Overrides) -> Self {
        self.prime = o.prime.or(self.prime);
        self.precision = o.precision.or(self.precision);
        if let Some(k) = o.k {
            self.schedule.k = k;
        }
        self.stages = o.stages.or(self.stages);
        self.out = o.out.or(self.out);
        self
    }

    /// The requested stages in run order, with `expand` added when a later
    /// stage needs it.
    pub fn stage_plan(&self) -> Result<Vec<Stage>, PipelineError> {
        let mut stages = self.stages.clone().unwrap_or_else(|| vec![Stage::Validate, Stage::Expand, Stage::Verify]);
        if stages.contains(&Stage::Demo) {
            return Err(PipelineError::Config("the demo stage runs only through `demo zp`".into()));
        }
        if stages.iter().any(|s| matches!(s, Stage::Verify | Stage::Shadow)) {
            stages.push(Stage::Expand);
        }
        stages.sort();
        stages.dedup();
        Ok(stages)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub prime: Option<u32>,
    pub precision: Option<usize>,
    pub k: Option<crate::spectrum::Exponents>,
    pub stages: Option<Vec<Stage>>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub passed: bool,
    pub millis: u128,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub passed: bool,
    pub failures: Vec<String>,
    pub stages: Vec<StageReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub bundle: Option<Value>,
    pub shadow: Option<Value>,
    pub theta_csv: Option<String>,
}

impl RunOutput {
    /// Writes whatever was produced into `dir`, returning the files written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let mut files = vec![(
            "report.json",
            to_text(&serde_json::to_value(&self.report).expect("report serializes")),
        )];
        if let Some(b) = &self.bundle {
            files.push(("bundle.json", to_text(b)));
        }
        if let Some(s) = &self.shadow {
            files.push(("shadow.json", to_text(s)));
        }
        if let Some(csv) = &self.theta_csv {
            files.push(("theta.csv", csv.clone()));
        }
        files.into_iter().map(|(name, text)| write_file(&dir.join(name), &text)).collect()
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<PathBuf, PipelineError> {
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))?;
    Ok(path.to_path_buf())
}

struct Recorder {
    stages: Vec<StageReport>,
    failures: Vec<String>,
}

impl Recorder {
    fn record(&mut self, stage: Stage, start: Instant, failures: Vec<String>, details: Value) {
        self.stages.push(StageReport {
            stage: stage.name(),
            passed: failures.is_empty(),
            millis: start.elapsed().as_millis(),
            details,
        });
        self.failures.extend(failures.into_iter().map(|f| format!("{}: {f}", stage.name())));
    }

    fn finish(self) -> RunReport {
        RunReport { passed: self.failures.is_empty(), failures: self.failures, stages: self.stages }
    }
}

/// Converts a matrix whose entries already lie in the value group.
fn exact_space(matrix: &DissimilarityMatrix, prime: u32, path: &Path) -> Result<UltraSpace, PipelineError> {
    let mut rows = Vec::with_capacity(matrix.len());
    for (i, row) in matrix.rows().iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, q) in row.iter().enumerate() {
            let g = round_to_gamma(q, prime).map_err(|e| PipelineError::schema(path, format!("matrix[{i}][{j}]: {e}")))?;
            if &g.to_rational(prime) != q {
                return Err(PipelineError::schema(
                    path,
                    format!("matrix[{i}][{j}] = {q} is not a power of {prime}; enable the round stage"),
                ));
            }
            out.push(g);
        }
        rows.push(out);
    }
    UltraSpace::new(matrix.labels().to_vec(), prime, rows).map_err(|e| PipelineError::schema(path, e.to_string()))
}

fn resolve_prime(config: &PipelineConfig, input_prime: Option<u32>) -> Result<u32, PipelineError> {
    let p = config
        .prime
        .or(input_prime)
        .ok_or_else(|| PipelineError::Config("no prime given by flag, config, or input".into()))?;
    check_prime(u64::from(p)).map_err(|e| PipelineError::Config(e.to_string()))
}

/// Runs the configured stages on one input file.
///
/// Failed checks are returned in the report; an `Err` means the run could
/// not proceed at all.
pub fn run(config: &PipelineConfig, path: &Path) -> Result<RunOutput, PipelineError> {
    let stages = config.stage_plan()?;
    let precision = config.precision.unwrap_or(DEFAULT_PRECISION);
    if precision == 0 {
        return Err(PipelineError::Config("precision must be at least 1".into()));
    }
    let input = read_input(path)?;
    let prime = resolve_prime(config, input.prime)?;
    let mut rec = Recorder { stages: Vec::new(), failures: Vec::new() };
    let points = input.data.points(prime, precision, path)?;

    let start = Instant::now();
    let (space, merged) = match &input.data {
        InputData::Matrix(matrix) => {
            let (matrix, merged) = matrix.quotient_zero();
            let violations = matrix.validate_ultrametric();
            let described: Vec<String> = violations.iter().map(|v| v.describe(matrix.labels())).collect();
            let rounding = stages.contains(&Stage::Round);
            if stages.contains(&Stage::Validate) || !rounding {
                let failures = if rounding { Vec::new() } else { described.iter().take(1).cloned().collect() };
                rec.record(
                    Stage::Validate,
                    start,
                    failures,
                    json!({ "points": matrix.len(), "violations": described.len(), "first_violations": &described[..described.len().min(8)] }),
                );
            }
            if !rounding && !violations.is_empty() {
                return Ok(RunOutput { report: rec.finish(), bundle: None, shadow: None, theta_csv: None });
            }
            let space = if rounding {
                let start = Instant::now();
                let closed = matrix.subdominant_closure();
                let space = closed.round(prime).map_err(|e| PipelineError::schema(path, e.to_string()))?;
                rec.record(Stage::Round, start, Vec::new(), json!({ "closure_changed": closed != matrix }));
                space
            } else {
                exact_space(&matrix, prime, path)?
            };
            (space, merged)
        }
        InputData::Points { labels, .. } => {
            let points = points.as_deref().expect("point input has points");
            let space = UltraSpace::from_points(labels.clone(), points)
                .map_err(|e| PipelineError::schema(path, e.to_string()))?;
            let (space, merged) = space.quotient_zero();
            if stages.contains(&Stage::Validate) {
                rec.record(Stage::Validate, start, Vec::new(), json!({ "points": space.len(), "violations": 0 }));
            }
            (space, merged)
        }
    };

    if !stages.contains(&Stage::Expand) {
        return Ok(RunOutput { report: rec.finish(), bundle: None, shadow: None, theta_csv: None });
    }
    let start = Instant::now();
    let expansion = assemble_expansion(Arc::new(space), &config.schedule).map_err(PipelineError::from_spectrum)?;
    rec.record(
        Stage::Expand,
        start,
        Vec::new(),
        json!({ "levels": expansion.len(), "vertex_counts": expansion.nerves().iter().map(|n| n.vertex_count()).collect::<Vec<_>>() }),
    );

    let mut reports = BTreeMap::new();
    if stages.contains(&Stage::Verify) {
        let start = Instant::now();
        let report = expansion.verify();
        let value = serde_json::to_value(&report).expect("report serializes");
        rec.record(Stage::Verify, start, report.failures(), value.clone());
        reports.insert("verify".to_string(), value);
    }

    // Points that survived the zero quotient, in space order.
    let kept_points: Option<Vec<PAdic>> = points.as_ref().map(|pts| {
        let labels = input.data.labels();
        expansion
            .space()
            .labels()
            .iter()
            .map(|l| pts[labels.iter().position(|m| m == l).expect("kept label is an input label")].clone())
            .collect()
    });

    let (shadow, csv) = if stages.contains(&Stage::Shadow) {
        let start = Instant::now();
        let out = shadow_outputs(prime, &expansion, kept_points.as_deref(), precision)?;
        rec.record(Stage::Shadow, start, out.failures.clone(), json!({ "levels": expansion.len() }));
        reports.insert("shadow".to_string(), json!({ "passed": out.failures.is_empty() }));
        (Some(out.bundle), out.csv)
    } else {
        (None, None)
    };

    let bundle = expansion_bundle(&ExpansionSummary {
        prime,
        precision,
        expansion: &expansion,
        merged: &merged,
        points: kept_points.as_deref(),
        reports,
    });
    Ok(RunOutput { report: rec.finish(), bundle: Some(bundle), shadow, theta_csv: csv })
}

pub struct ShadowOutputs {
    pub bundle: Value,
    pub csv: Option<String>,
    pub failures: Vec<String>,
}

/// Shadow complexes of every level, their bondings and checks, and θ samples
/// when the points are known.
pub fn shadow_outputs(
    prime: u32,
    expansion: &Expansion,
    points: Option<&[PAdic]>,
    digits: usize,
) -> Result<ShadowOutputs, PipelineError> {
    let shadow_err = |e: shadow::ShadowError| PipelineError::Verification(e.to_string());
    let shadows: Vec<ShadowComplex> = (0..expansion.len())
        .map(|m| shadow::shadow_complex(expansion.nerve(m), &expansion.realization(m)))
        .collect::<Result<_, _>>()
        .map_err(shadow_err)?;
    let checks: Vec<ShadowCheck> =
        expansion.nerves().iter().zip(&shadows).map(|(n, s)| shadow::check_shadow(n, s)).collect();
    let bondings: Vec<ShadowBonding> = expansion
        .bonding_maps()
        .iter()
        .map(|map| shadow::shadow_bonding(map, &shadows[map.from], &shadows[map.to]))
        .collect::<Result<_, _>>()
        .map_err(shadow_err)?;
    let mut failures: Vec<String> =
        checks.iter().filter(|c| !c.passed()).map(|c| format!("level {} shadow differs from its nerve", c.level)).collect();
    let samples = match points {
        Some(pts) => Some(shadow::theta_samples(pts, digits).map_err(shadow_err)?),
        None => None,
    };
    let bundle = shadow_bundle(&ShadowSummary {
        prime,
        expansion,
        shadows: &shadows,
        bondings: &bondings,
        checks: &checks,
        theta: samples.as_deref().map(|s| (digits, s)),
    });
    let csv = match (points, &samples) {
        (Some(pts), Some(s)) => Some(theta_csv(expansion.space().labels(), pts, s)?),
        _ => None,
    };
    if shadows.is_empty() {
        failures.push("no levels".into());
    }
    Ok(ShadowOutputs { bundle, csv, failures })
}

/// Result of validating an input without expanding it.
#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub points: usize,
    pub ultrametric: bool,
    pub violations: Vec<String>,
    pub zero_pairs: MergeReport,
    /// Whether every entry is already a power of the prime, when one is known.
    pub in_value_group: Option<bool>,
}

pub fn validate(path: &Path, prime: Option<u32>) -> Result<ValidateReport, PipelineError> {
    let input = read_input(path)?;
    let prime = prime.or(input.prime);
    if let Some(p) = prime {
        check_prime(u64::from(p)).map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    match &input.data {
        InputData::Matrix(matrix) => {
            let (quotient, merged) = matrix.quotient_zero();
            let violations: Vec<String> =
                quotient.validate_ultrametric().iter().map(|v| v.describe(quotient.labels())).collect();
            let in_value_group = prime.map(|p| {
                quotient.rows().iter().flatten().all(|q| {
                    round_to_gamma(q, p).map(|g| &g.to_rational(p) == q).unwrap_or(false)
                })
            });
            Ok(ValidateReport {
                points: quotient.len(),
                ultrametric: violations.is_empty(),
                violations,
                zero_pairs: merged,
                in_value_group,
            })
        }
        InputData::Points { labels, .. } => {
            let p = prime.ok_or_else(|| PipelineError::Config("point input needs a prime".into()))?;
            let points = input.data.points(p, DEFAULT_PRECISION, path)?.expect("point input");
            let space = UltraSpace::from_points(labels.clone(), &points)
                .map_err(|e| PipelineError::schema(path, e.to_string()))?;
            let (space, merged) = space.quotient_zero();
            Ok(ValidateReport {
                points: space.len(),
                ultrametric: true,
                violations: Vec::new(),
                zero_pairs: merged,
                in_value_group: Some(true),
            })
        }
    }
}

/// The `Z/p^depth` demonstration bundle and whether its checks passed.
pub fn demo_zp(prime: u32, depth: u32, subset: Option<&[u64]>) -> Result<(Value, bool), PipelineError> {
    let g = group_expansion(prime, depth, subset).map_err(|e| match e {
        SpectrumError::Group(msg) => PipelineError::Config(msg),
        SpectrumError::Space(SpaceError::Padic(e)) => PipelineError::Config(e.to_string()),
        other => PipelineError::from_spectrum(other),
    })?;
    let points: Vec<PAdic> = g
        .residues
        .iter()
        .map(|&r| PAdic::from_i64(prime, r as i64, depth as usize).expect("residue fits"))
        .collect();
    let mut reports = BTreeMap::new();
    reports.insert("group".to_string(), serde_json::to_value(&g.checks).expect("checks serialize"));
    let bundle = expansion_bundle(&ExpansionSummary {
        prime,
        precision: depth as usize,
        expansion: &g.expansion,
        merged: &MergeReport::default(),
        points: Some(&points),
        reports,
    });
    Ok((bundle, g.checks.passed()))
}

/// Rebuilds an expansion from a bundle and computes its shadow.
pub fn shadow_from_bundle(path: &Path) -> Result<ShadowOutputs, PipelineError> {
    let bundle = bundle::read_bundle(path)?;
    let expansion = bundle.rebuild(path)?;
    let points = bundle.parsed_points(path)?;
    if let Some(pts) = &points {
        if pts.len() != expansion.space().len() {
            return Err(PipelineError::schema(path, "points and labels differ in number"));
        }
        let check = UltraSpace::from_points(bundle.space.labels.clone(), pts)
            .map_err(|e| PipelineError::schema(path, e.to_string()))?;
        if &check != expansion.space() {
            return Err(PipelineError::schema(path, "points do not produce the stored distances"));
        }
    }
    shadow_outputs(bundle.prime, &expansion, points.as_deref(), bundle.precision)
}
