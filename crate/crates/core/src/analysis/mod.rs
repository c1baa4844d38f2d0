//! Coupled coarse/fine Monte Carlo estimates of strong errors, sup-moments
//! and interpolation displacement, plus log-log order fitting.
//!
//! Every path draws one noise realisation on the common fine grid
//! (`h_ref = tau / fine_m`); each ladder step `h = tau / m` runs the
//! continuous EM scheme on that same noise, evaluated at every fine node.
//! Paths are processed in fixed-size chunks whose partial sums are merged in
//! chunk order, so results do not depend on the worker count.

mod engine;
mod fit;

use serde::Serialize;

pub use engine::{LadderSpec, Reference};
pub use fit::{fit_order, theory_rate_jump, OrderFit, MIN_FIT_POINTS};

use crate::error::{Error, Result};
use crate::model::{InitialSegment, NeutralModel, TimeGrid};
use crate::noise::SeedPlan;

/// One row of a strong-error style table. CSV column order follows the
/// field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub h: f64,
    pub p: f64,
    pub n_paths: usize,
    pub err: f64,
    pub stderr: f64,
    pub exploded_frac: f64,
}

/// Rows for one `(model, T, tau, p, seed)`, sorted by `h` descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.h, r.err)).collect()
    }

    pub fn fit(&self) -> Result<OrderFit> {
        fit_order(&self.points())
    }

    pub fn max_err(&self) -> f64 {
        self.rows.iter().map(|r| r.err).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub h: f64,
    pub p: f64,
    pub n_paths: usize,
    /// `E sup_t |Y(t)|^p`
    pub sup_moment: f64,
    pub sup_moment_stderr: f64,
    /// `E sup_t |Y(t) - Ybar(t)|^p`
    pub displacement: f64,
    pub displacement_stderr: f64,
    /// `max_t E |Y(t) - Ybar(t)|^p`
    pub pointwise_displacement: f64,
    pub exploded_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    pub displacement_fit: Option<OrderFit>,
    pub pointwise_fit: Option<OrderFit>,
}

impl MomentReport {
    fn from_rows(rows: Vec<MomentRow>) -> Self {
        let disp: Vec<_> = rows.iter().map(|r| (r.h, r.displacement)).collect();
        let point: Vec<_> = rows
            .iter()
            .map(|r| (r.h, r.pointwise_displacement))
            .collect();
        Self {
            displacement_fit: fit_order(&disp).ok(),
            pointwise_fit: fit_order(&point).ok(),
            rows,
        }
    }

    pub fn displacement_table(&self) -> ErrorTable {
        ErrorTable {
            rows: self
                .rows
                .iter()
                .map(|r| ErrorRow {
                    h: r.h,
                    p: r.p,
                    n_paths: r.n_paths,
                    err: r.displacement,
                    stderr: r.displacement_stderr,
                    exploded_frac: r.exploded_frac,
                })
                .collect(),
        }
    }

    pub fn sup_moment_table(&self) -> ErrorTable {
        ErrorTable {
            rows: self
                .rows
                .iter()
                .map(|r| ErrorRow {
                    h: r.h,
                    p: r.p,
                    n_paths: r.n_paths,
                    err: r.sup_moment,
                    stderr: r.sup_moment_stderr,
                    exploded_frac: r.exploded_frac,
                })
                .collect(),
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub exploded_frac: f64,
}

/// What a single pass over the paths should measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Measure {
    pub strong_error: bool,
    pub moments: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    /// One table per requested `p`, empty when strong errors were not measured.
    pub errors: Vec<ErrorTable>,
    pub moments: Vec<MomentReport>,
}

/// Runs every requested measurement in a single pass over the paths.
pub fn run_study(
    model: &NeutralModel,
    seg: &InitialSegment,
    spec: &LadderSpec,
    ps: &[f64],
    measure: Measure,
) -> Result<StudyOutcome> {
    for &p in ps {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "moment order must be >= 1, got {p}"
            )));
        }
    }
    let stats = engine::simulate(model, seg, spec, ps, measure)?;
    let steps = spec.steps();
    let n = spec.n_paths;
    let budget = spec.explosion_budget;
    let check = |i: usize, blown: usize| -> Result<f64> {
        let frac = blown as f64 / n as f64;
        if frac > budget {
            Err(Error::ExplosionBudgetExceeded {
                h: steps[i],
                fraction: frac,
                budget,
            })
        } else {
            Ok(frac)
        }
    };

    let mut errors = Vec::new();
    if measure.strong_error {
        for (pi, &p) in ps.iter().enumerate() {
            let mut rows = Vec::with_capacity(steps.len());
            for (i, &h) in steps.iter().enumerate() {
                let frac = check(i, stats.error_blown[i])?;
                let s = stats.error[i][pi];
                rows.push(ErrorRow {
                    h,
                    p,
                    n_paths: n,
                    err: s.mean(),
                    stderr: s.stderr(),
                    exploded_frac: frac,
                });
            }
            errors.push(ErrorTable { rows });
        }
    }

    let mut moments = Vec::new();
    if measure.moments {
        for (pi, &p) in ps.iter().enumerate() {
            let mut rows = Vec::with_capacity(steps.len());
            for (i, &h) in steps.iter().enumerate() {
                let frac = check(i, stats.moment_blown[i])?;
                let sup = stats.sup[i][pi];
                let disp = stats.disp[i][pi];
                rows.push(MomentRow {
                    h,
                    p,
                    n_paths: n,
                    sup_moment: sup.mean(),
                    sup_moment_stderr: sup.stderr(),
                    displacement: disp.mean(),
                    displacement_stderr: disp.stderr(),
                    pointwise_displacement: stats.pointwise[i][pi],
                    exploded_frac: frac,
                });
            }
            moments.push(MomentReport::from_rows(rows));
        }
    }
    Ok(StudyOutcome { errors, moments })
}

/// `E sup_t |X(t) - Y(t)|^p` for every ladder step.
pub fn coupled_strong_error(
    model: &NeutralModel,
    seg: &InitialSegment,
    spec: &LadderSpec,
    p: f64,
) -> Result<ErrorTable> {
    let measure = Measure {
        strong_error: true,
        moments: false,
    };
    let mut out = run_study(model, seg, spec, &[p], measure)?;
    Ok(out.errors.remove(0))
}

/// Sup-moments of `Y` and of the displacement `Y - Ybar` for every ladder
/// step, with fitted displacement slopes.
pub fn displacement_moment(
    model: &NeutralModel,
    seg: &InitialSegment,
    spec: &LadderSpec,
    p: f64,
) -> Result<MomentReport> {
    let measure = Measure {
        strong_error: false,
        moments: true,
    };
    let mut out = run_study(model, seg, spec, &[p], measure)?;
    Ok(out.moments.remove(0))
}

/// `E sup_t |Y(t)|^p` for the continuous scheme on `grid`, sup taken over
/// its fine nodes.
pub fn sup_moment(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
    p: f64,
    n_paths: usize,
    plan: SeedPlan,
) -> Result<Estimate> {
    let spec = LadderSpec {
        tau: grid.tau(),
        horizon: grid.horizon(),
        ladder: vec![grid.m()],
        fine_m: grid.m() * grid.refine(),
        reference: Reference::Em,
        n_paths,
        plan,
        explosion_budget: 1.0,
        workers: None,
    };
    let report = displacement_moment(model, seg, &spec, p)?;
    let row = report.rows[0];
    Ok(Estimate {
        value: row.sup_moment,
        stderr: row.sup_moment_stderr,
        exploded_frac: row.exploded_frac,
    })
}

#[cfg(test)]
mod tests;
