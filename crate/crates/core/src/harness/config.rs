use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{LadderSpec, Reference};
use crate::error::{Error, Result};
use crate::model::{build_grid, InitialSegment, NeutralModel, NoiseTerm};
use crate::noise::SeedPlan;
use crate::registry::{build_model, find_model};

pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub segment: SegmentSection,
    pub grid: GridSection,
    pub monte_carlo: MonteCarloSection,
    #[serde(default)]
    pub experiments: ExperimentsSection,
    #[serde(default)]
    pub gates: GatesSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    #[default]
    Constant,
    Linear,
}

/// `xi(theta) = scale + slope * theta`; `scale` defaults to the model's
/// initial level.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    #[serde(default)]
    pub kind: SegmentKind,
    pub scale: Option<f64>,
    #[serde(default)]
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub tau: f64,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: f64,
    /// Steps per delay; each entry gives `h = tau / m`.
    pub m: Vec<usize>,
    #[serde(default = "default_refine")]
    pub refine: usize,
    /// Steps per delay of the reference grid; defaults to `max(m) * refine`.
    pub reference_m: Option<usize>,
}

fn default_refine() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub n_paths: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    #[serde(default)]
    pub explosion_budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Em,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentsSection {
    #[serde(default = "yes")]
    pub strong_error: bool,
    #[serde(default)]
    pub displacement: bool,
    #[serde(default)]
    pub sup_moment: bool,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub reference: ReferenceKind,
}

impl Default for ExperimentsSection {
    fn default() -> Self {
        Self {
            strong_error: true,
            displacement: false,
            sup_moment: false,
            p: default_p(),
            theta: Vec::new(),
            reference: ReferenceKind::Em,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_p() -> Vec<f64> {
    vec![2.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateTarget {
    StrongError,
    Displacement,
    PointwiseDisplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeGate {
    pub experiment: GateTarget,
    #[serde(default = "two")]
    pub p: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub min_r2: Option<f64>,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesSection {
    #[serde(default)]
    pub slope: Vec<SlopeGate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub strong_error: String,
    pub displacement: String,
    pub sup_moment: String,
    pub summary_json: String,
    pub summary_text: String,
    pub manifest: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            strong_error: "strong_error.csv".into(),
            displacement: "displacement.csv".into(),
            sup_moment: "sup_moment.csv".into(),
            summary_json: "summary.json".into(),
            summary_text: "summary.txt".into(),
            manifest: "manifest.json".into(),
        }
    }
}

impl OutputSection {
    fn names(&self) -> [(&'static str, &str); 6] {
        [
            ("strong_error", &self.strong_error),
            ("displacement", &self.displacement),
            ("sup_moment", &self.sup_moment),
            ("summary_json", &self.summary_json),
            ("summary_text", &self.summary_text),
            ("manifest", &self.manifest),
        ]
    }
}

/// Parses and validates a TOML config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with_overrides(text, &[])
}

/// Like [`parse_config`], first applying `key.path=value` overrides to the
/// document. Values are read as TOML literals, falling back to strings.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Schema {
        path: ".".into(),
        message: e.message().to_string(),
    })?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    let cfg: ExperimentConfig =
        serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<()> {
    let bad = |message: &str| Error::Schema {
        path: item.to_string(),
        message: message.to_string(),
    };
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| bad("override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut table = doc;
    for part in parents {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{part}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let info = find_model(&self.model.id)?;
        info.resolve(&self.model.params)?;
        let model = self.build_model()?;

        let g = &self.grid;
        if !(g.tau > 0.0 && g.tau.is_finite()) {
            return Err(schema("grid.tau", "must be positive"));
        }
        if !(g.horizon > 0.0 && g.horizon.is_finite()) {
            return Err(schema("grid.T", "must be positive"));
        }
        if g.refine == 0 {
            return Err(schema("grid.refine", "must be at least 1"));
        }
        check_ladder(&g.m)?;
        let fine_m = self.reference_m();
        for &m in &g.m {
            if !fine_m.is_multiple_of(m) {
                return Err(Error::Nesting(format!(
                    "m = {m} does not divide reference_m = {fine_m}"
                )));
            }
            build_grid(g.tau, g.horizon, m, fine_m / m)?;
        }
        build_grid(g.tau, g.horizon, fine_m, 1)?;

        let mc = &self.monte_carlo;
        if mc.n_paths < MIN_PATHS {
            return Err(schema(
                "monte_carlo.n_paths",
                format!("must be at least {MIN_PATHS}, got {}", mc.n_paths),
            ));
        }
        if mc.workers == Some(0) {
            return Err(schema("monte_carlo.workers", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&mc.explosion_budget) {
            return Err(schema("monte_carlo.explosion_budget", "must lie in [0, 1]"));
        }

        let ex = &self.experiments;
        if !(ex.strong_error || ex.displacement || ex.sup_moment) {
            return Err(schema("experiments", "no experiment enabled"));
        }
        if ex.p.is_empty() {
            return Err(schema("experiments.p", "must list at least one order"));
        }
        if let Some(p) = ex.p.iter().find(|p| !(**p >= 2.0 && p.is_finite())) {
            return Err(schema(
                "experiments.p",
                format!("orders must be >= 2, got {p}"),
            ));
        }
        if let Some(t) = ex.theta.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(schema(
                "experiments.theta",
                format!("must lie in (0, 1), got {t}"),
            ));
        }
        if ex.strong_error {
            self.reference(&model)?;
        }

        for (i, gate) in self.gates.slope.iter().enumerate() {
            let path = format!("gates.slope[{i}]");
            let enabled = match gate.experiment {
                GateTarget::StrongError => ex.strong_error,
                GateTarget::Displacement | GateTarget::PointwiseDisplacement => ex.displacement,
            };
            if !enabled {
                return Err(schema(&path, "gate refers to a disabled experiment"));
            }
            if !ex.p.contains(&gate.p) {
                return Err(schema(&path, format!("p = {} is not measured", gate.p)));
            }
        }

        let names = self.output.names();
        for (i, (key, name)) in names.iter().enumerate() {
            if name.is_empty() || name.contains(['/', '\\']) || *name == "." || *name == ".." {
                return Err(schema(
                    &format!("output.{key}"),
                    "must be a plain file name",
                ));
            }
            if names[..i].iter().any(|(_, other)| other == name) {
                return Err(schema(&format!("output.{key}"), "duplicate file name"));
            }
        }
        Ok(())
    }

    pub fn reference_m(&self) -> usize {
        self.grid
            .reference_m
            .unwrap_or_else(|| self.grid.m.iter().copied().max().unwrap_or(1) * self.grid.refine)
    }

    pub fn build_model(&self) -> Result<NeutralModel> {
        build_model(&self.model.id, &self.model.params)
    }

    pub fn segment(&self) -> Result<InitialSegment> {
        let info = find_model(&self.model.id)?;
        let params = info.resolve(&self.model.params)?;
        let scale = self
            .segment
            .scale
            .unwrap_or_else(|| info.segment_level(&params));
        match self.segment.kind {
            SegmentKind::Constant => InitialSegment::constant(vec![scale], self.grid.tau),
            SegmentKind::Linear => {
                InitialSegment::linear(vec![scale], vec![self.segment.slope], self.grid.tau)
            }
        }
    }

    fn reference(&self, model: &NeutralModel) -> Result<Reference> {
        match self.experiments.reference {
            ReferenceKind::Em => Ok(Reference::Em),
            ReferenceKind::Oracle if self.model.id == "gbm" => {
                let p = find_model("gbm")?.resolve(&self.model.params)?;
                Ok(Reference::GbmExact {
                    mu: p["mu"],
                    sigma: p["sigma"],
                    x0: self.segment.scale.unwrap_or(p["x0"]),
                })
            }
            ReferenceKind::Oracle
                if matches!(model.noise(), NoiseTerm::None) && !model.has_drift() =>
            {
                Ok(Reference::NeutralOracle)
            }
            ReferenceKind::Oracle => Err(schema(
                "experiments.reference",
                format!("no closed-form oracle for model `{}`", self.model.id),
            )),
        }
    }

    pub fn ladder_spec(&self) -> Result<LadderSpec> {
        let model = self.build_model()?;
        Ok(LadderSpec {
            tau: self.grid.tau,
            horizon: self.grid.horizon,
            ladder: self.grid.m.clone(),
            fine_m: self.reference_m(),
            reference: self.reference(&model)?,
            n_paths: self.monte_carlo.n_paths,
            plan: SeedPlan::new(self.monte_carlo.seed),
            explosion_budget: self.monte_carlo.explosion_budget,
            workers: self.monte_carlo.workers,
        })
    }
}

/// Strictly increasing, with one common integer ratio between neighbours.
fn check_ladder(m: &[usize]) -> Result<()> {
    if m.is_empty() {
        return Err(Error::Nesting("ladder is empty".into()));
    }
    if m[0] == 0 {
        return Err(Error::Nesting("m must be positive".into()));
    }
    let mut base = None;
    for w in m.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::Nesting(format!(
                "{} is not an integer multiple of {}",
                w[1], w[0]
            )));
        }
        let ratio = w[1] / w[0];
        if *base.get_or_insert(ratio) != ratio {
            return Err(Error::Nesting(format!(
                "ratios {} and {ratio} differ",
                base.unwrap()
            )));
        }
    }
    Ok(())
}
