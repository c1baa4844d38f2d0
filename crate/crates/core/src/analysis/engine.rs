use rayon::prelude::*;
use serde::Serialize;

use super::Measure;
use crate::em::{
    em_continuous_brownian, em_continuous_jump, gbm_exact, neutral_recursion_oracle, EmPath,
};
use crate::error::{Error, Result};
use crate::model::{build_grid, distance, norm, InitialSegment, NeutralModel, NoiseTerm, TimeGrid};
use crate::noise::{sample_brownian, sample_jumps, BrownianIncrements, JumpStream, SeedPlan};

/// Paths per work item. Part of the reproducibility contract: changing it
/// changes summation order.
const CHUNK: usize = 64;
const STEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// Continuous EM at the fine step `h_ref`.
    Em,
    /// Closed-form geometric Brownian motion on the shared increments.
    GbmExact { mu: f64, sigma: f64, x0: f64 },
    /// Exact recursion for models without drift or noise.
    NeutralOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderSpec {
    pub tau: f64,
    pub horizon: f64,
    /// Steps per delay for each ladder entry, `h = tau / m`.
    pub ladder: Vec<usize>,
    /// Steps per delay of the common fine grid, `h_ref = tau / fine_m`.
    pub fine_m: usize,
    pub reference: Reference,
    pub n_paths: usize,
    pub plan: SeedPlan,
    /// Largest tolerated fraction of exploded paths per row.
    pub explosion_budget: f64,
    pub workers: Option<usize>,
}

impl LadderSpec {
    /// Builds a spec from step sizes rather than steps-per-delay.
    pub fn from_steps(
        tau: f64,
        horizon: f64,
        steps: &[f64],
        h_ref: f64,
        n_paths: usize,
        plan: SeedPlan,
    ) -> Result<Self> {
        let ladder = steps
            .iter()
            .map(|&h| m_for_step(tau, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tau,
            horizon,
            ladder,
            fine_m: m_for_step(tau, h_ref)?,
            reference: Reference::Em,
            n_paths,
            plan,
            explosion_budget: 0.0,
            workers: None,
        })
    }

    pub fn steps(&self) -> Vec<f64> {
        self.ladder.iter().map(|&m| self.tau / m as f64).collect()
    }

    pub fn h_ref(&self) -> f64 {
        self.tau / self.fine_m as f64
    }

    pub fn fine_grid(&self) -> Result<TimeGrid> {
        build_grid(self.tau, self.horizon, self.fine_m, 1)
    }

    /// Ladder grids refined onto the common fine grid.
    pub fn grids(&self, with_reference: bool) -> Result<Vec<TimeGrid>> {
        if self.ladder.is_empty() {
            return Err(Error::NonNestedSteps("empty ladder".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::OutOfRange("n_paths must be positive".into()));
        }
        let mut sorted = self.ladder.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) || sorted != self.ladder {
            return Err(Error::NonNestedSteps(
                "ladder must list strictly decreasing steps".into(),
            ));
        }
        let finest = *sorted.last().unwrap();
        if with_reference && matches!(self.reference, Reference::Em) && self.fine_m < 4 * finest {
            return Err(Error::NonNestedSteps(format!(
                "h_ref = tau/{} must be at most min(h)/4 = tau/{}",
                self.fine_m,
                4 * finest
            )));
        }
        self.ladder
            .iter()
            .map(|&m| {
                if m == 0 || !self.fine_m.is_multiple_of(m) {
                    return Err(Error::NonNestedSteps(format!(
                        "h = tau/{m} does not divide h_ref = tau/{}",
                        self.fine_m
                    )));
                }
                build_grid(self.tau, self.horizon, m, self.fine_m / m)
            })
            .collect()
    }
}

fn m_for_step(tau: f64, h: f64) -> Result<usize> {
    let m = (tau / h).round();
    if m.is_nan() || m < 1.0 || (tau / m - h).abs() > STEP_TOL * h {
        return Err(Error::NonNestedSteps(format!(
            "step {h} is not tau / m for an integer m (tau = {tau})"
        )));
    }
    Ok(m as usize)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(super) struct Moments {
    sum: f64,
    sumsq: f64,
    count: usize,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sumsq += x * x;
        self.count += 1;
    }

    fn merge(&mut self, other: &Moments) {
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        self.count += other.count;
    }

    pub(super) fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    pub(super) fn stderr(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone)]
struct Partial {
    error: Vec<Vec<Moments>>,
    error_blown: Vec<usize>,
    sup: Vec<Vec<Moments>>,
    disp: Vec<Vec<Moments>>,
    /// per (step, p): sum over paths of |Gamma(t_j)|^p at each fine node
    node_disp: Vec<Vec<Vec<f64>>>,
    moment_blown: Vec<usize>,
}

impl Partial {
    fn new(n_steps: usize, n_p: usize, nodes: usize, moments: bool) -> Self {
        let node_len = if moments { nodes } else { 0 };
        Self {
            error: vec![vec![Moments::default(); n_p]; n_steps],
            error_blown: vec![0; n_steps],
            sup: vec![vec![Moments::default(); n_p]; n_steps],
            disp: vec![vec![Moments::default(); n_p]; n_steps],
            node_disp: vec![vec![vec![0.0; node_len]; n_p]; n_steps],
            moment_blown: vec![0; n_steps],
        }
    }

    fn merge(&mut self, other: &Partial) {
        for i in 0..self.error.len() {
            for pi in 0..self.error[i].len() {
                self.error[i][pi].merge(&other.error[i][pi]);
                self.sup[i][pi].merge(&other.sup[i][pi]);
                self.disp[i][pi].merge(&other.disp[i][pi]);
                for (a, b) in self.node_disp[i][pi]
                    .iter_mut()
                    .zip(&other.node_disp[i][pi])
                {
                    *a += b;
                }
            }
            self.error_blown[i] += other.error_blown[i];
            self.moment_blown[i] += other.moment_blown[i];
        }
    }
}

pub(super) struct LadderStats {
    pub error: Vec<Vec<Moments>>,
    pub error_blown: Vec<usize>,
    pub sup: Vec<Vec<Moments>>,
    pub disp: Vec<Vec<Moments>>,
    pub pointwise: Vec<Vec<f64>>,
    pub moment_blown: Vec<usize>,
}

enum PathNoise {
    None(BrownianIncrements),
    Brownian(BrownianIncrements),
    Jump(JumpStream),
}

struct Context<'a> {
    model: &'a NeutralModel,
    seg: &'a InitialSegment,
    spec: &'a LadderSpec,
    grids: Vec<TimeGrid>,
    fine: TimeGrid,
    ps: &'a [f64],
    measure: Measure,
    oracle: Option<EmPath>,
}

pub(super) fn simulate(
    model: &NeutralModel,
    seg: &InitialSegment,
    spec: &LadderSpec,
    ps: &[f64],
    measure: Measure,
) -> Result<LadderStats> {
    let grids = spec.grids(measure.strong_error)?;
    let fine = spec.fine_grid()?;
    let oracle = match (measure.strong_error, spec.reference) {
        (true, Reference::NeutralOracle) => Some(neutral_recursion_oracle(model, seg, &fine)?),
        (true, Reference::GbmExact { .. }) if model.noise_dim() != 1 || model.dim() != 1 => {
            return Err(Error::DimensionMismatch(
                "gbm reference needs a scalar Brownian model".into(),
            ))
        }
        _ => None,
    };
    let ctx = Context {
        model,
        seg,
        spec,
        grids,
        fine,
        ps,
        measure,
        oracle,
    };

    let n_chunks = spec.n_paths.div_ceil(CHUNK);
    let run = || -> Result<Vec<Partial>> {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(spec.n_paths);
                ctx.chunk(start..end)
            })
            .collect()
    };
    let partials = match spec.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::OutOfRange(format!("cannot build worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let nodes = fine.fine_steps() + 1;
    let mut total = Partial::new(ctx.grids.len(), ps.len(), nodes, measure.moments);
    for part in &partials {
        total.merge(part);
    }
    let pointwise = total
        .node_disp
        .iter()
        .enumerate()
        .map(|(i, per_p)| {
            let valid = spec.n_paths - total.moment_blown[i];
            per_p
                .iter()
                .map(|sums| {
                    if valid == 0 || sums.is_empty() {
                        f64::NAN
                    } else {
                        sums.iter()
                            .fold(0.0, |acc: f64, s| acc.max(s / valid as f64))
                    }
                })
                .collect()
        })
        .collect();
    Ok(LadderStats {
        error: total.error,
        error_blown: total.error_blown,
        sup: total.sup,
        disp: total.disp,
        pointwise,
        moment_blown: total.moment_blown,
    })
}

impl Context<'_> {
    fn chunk(&self, paths: std::ops::Range<usize>) -> Result<Partial> {
        let nodes = self.fine.fine_steps() + 1;
        let mut acc = Partial::new(self.grids.len(), self.ps.len(), nodes, self.measure.moments);
        for path in paths {
            self.one_path(path as u64, &mut acc)?;
        }
        Ok(acc)
    }

    fn noise(&self, path: u64) -> Result<PathNoise> {
        Ok(match self.model.noise() {
            NoiseTerm::None => PathNoise::None(BrownianIncrements::from_vec(
                self.fine.fine_step(),
                1,
                Vec::new(),
            )?),
            NoiseTerm::Brownian { dim, .. } => {
                PathNoise::Brownian(sample_brownian(&self.fine, *dim, &self.spec.plan, path))
            }
            NoiseTerm::Jump(_) => {
                PathNoise::Jump(sample_jumps(&self.fine, self.model, &self.spec.plan, path)?)
            }
        })
    }

    fn scheme(&self, grid: &TimeGrid, noise: &PathNoise) -> Result<EmPath> {
        match noise {
            PathNoise::None(inc) | PathNoise::Brownian(inc) => {
                em_continuous_brownian(self.model, self.seg, grid, inc)
            }
            PathNoise::Jump(stream) => em_continuous_jump(self.model, self.seg, grid, stream),
        }
    }

    fn reference(&self, noise: &PathNoise) -> Result<Option<EmPath>> {
        if !self.measure.strong_error {
            return Ok(None);
        }
        match self.spec.reference {
            Reference::Em => self.scheme(&self.fine, noise).map(Some),
            Reference::NeutralOracle => Ok(self.oracle.clone()),
            Reference::GbmExact { mu, sigma, x0 } => match noise {
                PathNoise::Brownian(inc) => gbm_exact(mu, sigma, x0, &self.fine, inc).map(Some),
                _ => Err(Error::NoBrownianPart),
            },
        }
    }

    fn one_path(&self, path: u64, acc: &mut Partial) -> Result<()> {
        let noise = self.noise(path)?;
        let reference = self.reference(&noise)?;
        let ref_blown = reference.as_ref().is_some_and(EmPath::is_exploded);

        for (i, grid) in self.grids.iter().enumerate() {
            let y = self.scheme(grid, &noise)?;
            if let Some(x) = &reference {
                if ref_blown || y.is_exploded() {
                    acc.error_blown[i] += 1;
                } else {
                    let sup = x.sup_distance(&y);
                    for (pi, &p) in self.ps.iter().enumerate() {
                        acc.error[i][pi].push(sup.powf(p));
                    }
                }
            }
            if self.measure.moments {
                if y.is_exploded() {
                    acc.moment_blown[i] += 1;
                    continue;
                }
                let r = grid.refine();
                let mut sup_y = 0.0f64;
                let mut sup_gap = 0.0f64;
                for j in 0..y.len() {
                    let state = y.state(j as i64);
                    let left = y.state((j - j % r) as i64);
                    let gap = distance(state, left);
                    sup_y = sup_y.max(norm(state));
                    sup_gap = sup_gap.max(gap);
                    for (pi, &p) in self.ps.iter().enumerate() {
                        acc.node_disp[i][pi][j] += gap.powf(p);
                    }
                }
                for (pi, &p) in self.ps.iter().enumerate() {
                    acc.sup[i][pi].push(sup_y.powf(p));
                    acc.disp[i][pi].push(sup_gap.powf(p));
                }
            }
        }
        Ok(())
    }
}
