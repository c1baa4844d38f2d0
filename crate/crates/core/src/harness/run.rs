use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, GateTarget, SlopeGate};
use super::output::{content_hash, tables_to_csv, to_json, OutputSet};
use crate::analysis::{
    run_study, theory_rate_jump, ErrorTable, Measure, MomentReport, OrderFit, Reference,
    StudyOutcome,
};
use crate::error::{Error, Result};
use crate::registry::find_model;

/// Errors at or below this level are treated as exact.
pub const EXACT_LEVEL: f64 = 1e-20;

#[derive(Debug, Clone, Serialize)]
pub struct TheoryExponent {
    pub theta: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongErrorSummary {
    pub p: f64,
    /// "fitted", "exact scheme" or "degenerate".
    pub status: String,
    pub fit: Option<OrderFit>,
    pub fit_error: Option<String>,
    pub max_err: f64,
    pub theory_exponents: Vec<TheoryExponent>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DisplacementSummary {
    pub p: f64,
    pub fit: Option<OrderFit>,
    pub pointwise_fit: Option<OrderFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupMomentSummary {
    pub p: f64,
    pub values: Vec<f64>,
    /// Largest over smallest estimate across the ladder.
    pub spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateResult {
    #[serde(flatten)]
    pub gate: SlopeGate,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub segment: String,
    pub tau: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub ladder_m: Vec<usize>,
    pub steps: Vec<f64>,
    pub reference_m: usize,
    pub reference: Reference,
    pub n_paths: usize,
    pub seed: u64,
    pub strong_error: Vec<StrongErrorSummary>,
    pub displacement: Vec<DisplacementSummary>,
    pub sup_moment: Vec<SupMomentSummary>,
    pub gates: Vec<GateResult>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub seed: u64,
    /// Seconds per experiment pass.
    pub wall_time: BTreeMap<String, f64>,
    /// Output file name to content hash.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub summary: Summary,
    pub study: StudyOutcome,
}

impl RunOutcome {
    pub fn gates_passed(&self) -> bool {
        self.summary.passed
    }
}

/// Runs every enabled experiment and writes the artifacts into `out_dir`.
/// On error nothing written by this call is left behind.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let seg = cfg.segment()?;
    let spec = cfg.ladder_spec()?;
    let ex = &cfg.experiments;
    let mut wall_time = BTreeMap::new();

    let mut study = StudyOutcome {
        errors: Vec::new(),
        moments: Vec::new(),
    };
    if ex.strong_error {
        let start = Instant::now();
        let measure = Measure {
            strong_error: true,
            moments: false,
        };
        study.errors = run_study(&model, &seg, &spec, &ex.p, measure)?.errors;
        wall_time.insert("strong_error".into(), start.elapsed().as_secs_f64());
    }
    if ex.displacement || ex.sup_moment {
        let start = Instant::now();
        let measure = Measure {
            strong_error: false,
            moments: true,
        };
        study.moments = run_study(&model, &seg, &spec, &ex.p, measure)?.moments;
        wall_time.insert("moments".into(), start.elapsed().as_secs_f64());
    }

    let summary = summarise(
        cfg,
        &spec.steps(),
        spec.reference,
        seg.description(),
        &study,
    )?;

    let mut out = OutputSet::new(out_dir)?;
    let mut outputs = BTreeMap::new();
    let mut emit = |out: &mut OutputSet, name: &str, bytes: Vec<u8>| -> Result<()> {
        out.write(name, &bytes)?;
        outputs.insert(name.to_string(), content_hash(&bytes));
        Ok(())
    };
    let names = &cfg.output;
    if ex.strong_error {
        emit(&mut out, &names.strong_error, tables_to_csv(&study.errors)?)?;
    }
    if ex.displacement {
        let tables: Vec<ErrorTable> = study
            .moments
            .iter()
            .map(|m| m.displacement_table())
            .collect();
        emit(&mut out, &names.displacement, tables_to_csv(&tables)?)?;
    }
    if ex.sup_moment {
        let tables: Vec<ErrorTable> = study.moments.iter().map(|m| m.sup_moment_table()).collect();
        emit(&mut out, &names.sup_moment, tables_to_csv(&tables)?)?;
    }
    emit(&mut out, &names.summary_json, to_json(&summary)?)?;
    emit(
        &mut out,
        &names.summary_text,
        summary_text(&summary, &study).into_bytes(),
    )?;

    let manifest = RunManifest {
        config: cfg.clone(),
        version: crate::VERSION.to_string(),
        seed: cfg.monte_carlo.seed,
        wall_time,
        outputs,
    };
    out.write(&names.manifest, &to_json(&manifest)?)?;
    out.keep();
    Ok(RunOutcome {
        manifest,
        summary,
        study,
    })
}

fn summarise(
    cfg: &ExperimentConfig,
    steps: &[f64],
    reference: Reference,
    segment: &str,
    study: &StudyOutcome,
) -> Result<Summary> {
    let ex = &cfg.experiments;
    let params = find_model(&cfg.model.id)?.resolve(&cfg.model.params)?;

    let strong_error = study
        .errors
        .iter()
        .zip(&ex.p)
        .map(|(table, &p)| {
            let max_err = table.max_err();
            let (status, fit, fit_error) = if max_err <= EXACT_LEVEL {
                let e = Error::DegenerateInput(format!("every error is at most {EXACT_LEVEL:e}"));
                ("exact scheme", None, Some(e.to_string()))
            } else {
                match table.fit() {
                    Ok(fit) => ("fitted", Some(fit), None),
                    Err(e) => ("degenerate", None, Some(e.to_string())),
                }
            };
            let theory_exponents = ex
                .theta
                .iter()
                .map(|&theta| {
                    Ok(TheoryExponent {
                        theta,
                        exponent: theory_rate_jump(p, theta, cfg.grid.horizon, cfg.grid.tau)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(StrongErrorSummary {
                p,
                status: status.into(),
                fit,
                fit_error,
                max_err,
                theory_exponents,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let displacement = if ex.displacement {
        study
            .moments
            .iter()
            .zip(&ex.p)
            .map(|(m, &p)| DisplacementSummary {
                p,
                fit: m.displacement_fit,
                pointwise_fit: m.pointwise_fit,
            })
            .collect()
    } else {
        Vec::new()
    };

    let sup_moment = if ex.sup_moment {
        study
            .moments
            .iter()
            .zip(&ex.p)
            .map(|(m, &p)| sup_summary(m, p))
            .collect()
    } else {
        Vec::new()
    };

    let gates: Vec<GateResult> = cfg
        .gates
        .slope
        .iter()
        .map(|gate| check_gate(gate, &strong_error, &displacement))
        .collect();
    let passed = gates.iter().all(|g| g.passed);

    Ok(Summary {
        model: cfg.model.id.clone(),
        params,
        segment: segment.to_string(),
        tau: cfg.grid.tau,
        horizon: cfg.grid.horizon,
        ladder_m: cfg.grid.m.clone(),
        steps: steps.to_vec(),
        reference_m: cfg.reference_m(),
        reference,
        n_paths: cfg.monte_carlo.n_paths,
        seed: cfg.monte_carlo.seed,
        strong_error,
        displacement,
        sup_moment,
        gates,
        passed,
    })
}

fn sup_summary(m: &MomentReport, p: f64) -> SupMomentSummary {
    let values: Vec<f64> = m.rows.iter().map(|r| r.sup_moment).collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    SupMomentSummary {
        p,
        spread: hi / lo,
        values,
    }
}

fn check_gate(
    gate: &SlopeGate,
    strong: &[StrongErrorSummary],
    disp: &[DisplacementSummary],
) -> GateResult {
    let fit = match gate.experiment {
        GateTarget::StrongError => strong.iter().find(|s| s.p == gate.p).and_then(|s| s.fit),
        GateTarget::Displacement => disp.iter().find(|d| d.p == gate.p).and_then(|d| d.fit),
        GateTarget::PointwiseDisplacement => disp
            .iter()
            .find(|d| d.p == gate.p)
            .and_then(|d| d.pointwise_fit),
    };
    let passed = fit.is_some_and(|f| {
        gate.min.is_none_or(|lo| f.slope >= lo)
            && gate.max.is_none_or(|hi| f.slope <= hi)
            && gate.min_r2.is_none_or(|r| f.r_squared >= r)
    });
    GateResult {
        gate: *gate,
        slope: fit.map(|f| f.slope),
        r2: fit.map(|f| f.r_squared),
        passed,
    }
}

fn fmt_fit(fit: Option<&OrderFit>) -> String {
    match fit {
        Some(f) => format!("slope {:.4}  r2 {:.4}", f.slope, f.r_squared),
        None => "no fit".to_string(),
    }
}

pub fn summary_text(s: &Summary, study: &StudyOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model      {}", s.model);
    for (k, v) in &s.params {
        let _ = writeln!(out, "  {k} = {v}");
    }
    let _ = writeln!(out, "segment    {}", s.segment);
    let _ = writeln!(
        out,
        "tau = {}  T = {}  reference_m = {}",
        s.tau, s.horizon, s.reference_m
    );
    let _ = writeln!(out, "paths      {}  seed {}", s.n_paths, s.seed);

    for (e, table) in s.strong_error.iter().zip(&study.errors) {
        let _ = writeln!(out, "\nstrong error E sup|X - Y|^{}", e.p);
        for r in &table.rows {
            let _ = writeln!(
                out,
                "  h = {:<10} err = {:.6e}  se = {:.2e}  exploded = {}",
                r.h, r.err, r.stderr, r.exploded_frac
            );
        }
        match e.status.as_str() {
            "exact scheme" => {
                let _ = writeln!(out, "  exact scheme (all errors <= {EXACT_LEVEL:e})");
            }
            _ => {
                let _ = writeln!(out, "  {}", fmt_fit(e.fit.as_ref()));
            }
        }
        for t in &e.theory_exponents {
            let _ = writeln!(
                out,
                "  theory exponent at theta {}: {:.5}",
                t.theta, t.exponent
            );
        }
    }

    for (d, report) in s.displacement.iter().zip(&study.moments) {
        let _ = writeln!(out, "\ndisplacement E sup|Y - Ybar|^{}", d.p);
        for r in &report.rows {
            let _ = writeln!(
                out,
                "  h = {:<10} sup = {:.6e}  pointwise = {:.6e}",
                r.h, r.displacement, r.pointwise_displacement
            );
        }
        let _ = writeln!(out, "  sup       {}", fmt_fit(d.fit.as_ref()));
        let _ = writeln!(out, "  pointwise {}", fmt_fit(d.pointwise_fit.as_ref()));
    }

    for m in &s.sup_moment {
        let _ = writeln!(
            out,
            "\nE sup|Y|^{}: {:?}  spread {:.3}",
            m.p, m.values, m.spread
        );
    }

    if !s.gates.is_empty() {
        let _ = writeln!(out);
        for g in &s.gates {
            let _ = writeln!(
                out,
                "gate {:?} p = {}: {} ({})",
                g.gate.experiment,
                g.gate.p,
                if g.passed { "pass" } else { "FAIL" },
                g.slope
                    .map_or("no slope".into(), |v| format!("slope {v:.4}"))
            );
        }
    }
    out
}
