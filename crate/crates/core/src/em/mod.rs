//! Euler-Maruyama recursions for neutral delay equations.
//!
//! The discrete scheme advances grid values
//!
//! ```text
//! Y(k+1) = G(Y(k+1-m)) + [Y(k) - G(Y(k-m))] + b(Y(k), Y(k-m)) h + noise(k)
//! ```
//!
//! and the continuous interpolant is evaluated on the fine nodes of the grid
//! with the coefficients frozen at the left coarse node:
//!
//! ```text
//! Y(t) = G(Ybar(t - tau)) + xi(0) - G(xi(-tau)) + ∫ b(Ybar) ds + ∫ noise(Ybar)
//! ```
//!
//! The two routes are computed independently; they agree at coarse nodes up
//! to rounding.

mod driver;
mod oracle;

use serde::Serialize;

pub use oracle::{gbm_exact, neutral_recursion_oracle};

use crate::error::{Error, Result};
use crate::model::{distance, norm, InitialSegment, NeutralModel, NoiseTerm, TimeGrid};
use crate::noise::{BrownianIncrements, JumpStream};
use driver::{BrownianDriver, JumpDriver, NullDriver, StepDriver};

const STEP_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeSet {
    CoarseDiscrete,
    FineContinuous,
}

/// A trajectory on `[-tau, T]`, stored row-major including the history nodes.
#[derive(Debug, Clone)]
pub struct EmPath {
    grid: TimeGrid,
    nodes: NodeSet,
    dim: usize,
    history: usize,
    values: Vec<f64>,
    exploded_at: Option<usize>,
}

impl EmPath {
    pub(crate) fn new(grid: TimeGrid, nodes: NodeSet, dim: usize) -> Self {
        let per = match nodes {
            NodeSet::CoarseDiscrete => 1,
            NodeSet::FineContinuous => grid.refine(),
        };
        let history = grid.m() * per;
        let total = history + grid.steps() * per + 1;
        Self {
            grid,
            nodes,
            dim,
            history,
            values: vec![0.0; total * dim],
            exploded_at: None,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn nodes(&self) -> NodeSet {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per coarse step: 1 for discrete paths, `refine` for continuous.
    pub fn nodes_per_step(&self) -> usize {
        match self.nodes {
            NodeSet::CoarseDiscrete => 1,
            NodeSet::FineContinuous => self.grid.refine(),
        }
    }

    /// Number of nodes on `[0, T]`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim - self.history
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of history nodes on `[-tau, 0)`.
    pub fn history_len(&self) -> usize {
        self.history
    }

    /// State at node `i`; negative indices address the history.
    pub fn state(&self, i: i64) -> &[f64] {
        let row = (i + self.history as i64) as usize;
        &self.values[row * self.dim..(row + 1) * self.dim]
    }

    pub(crate) fn state_mut(&mut self, i: i64) -> &mut [f64] {
        let row = (i + self.history as i64) as usize;
        &mut self.values[row * self.dim..(row + 1) * self.dim]
    }

    pub fn time(&self, i: i64) -> f64 {
        match self.nodes {
            NodeSet::CoarseDiscrete => self.grid.node_time(i),
            NodeSet::FineContinuous => self.grid.fine_node_time(i),
        }
    }

    /// State at coarse node `k`.
    pub fn coarse_state(&self, k: i64) -> &[f64] {
        self.state(k * self.nodes_per_step() as i64)
    }

    /// Rows for `t >= 0`.
    pub fn forward(&self) -> impl Iterator<Item = &[f64]> {
        self.values[self.history * self.dim..].chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_exploded(&self) -> bool {
        self.exploded_at.is_some()
    }

    /// First forward node holding a non-finite value.
    pub fn exploded_at(&self) -> Option<usize> {
        self.exploded_at
    }

    /// `max_t |Y(t)|` over forward nodes.
    pub fn sup_norm(&self) -> f64 {
        self.forward().map(norm).fold(0.0, f64::max)
    }

    /// `max_t |self(t) - other(t)|` over shared forward nodes.
    pub fn sup_distance(&self, other: &EmPath) -> f64 {
        self.forward()
            .zip(other.forward())
            .map(|(a, b)| distance(a, b))
            .fold(0.0, f64::max)
    }

    /// Checks node `i`; on a non-finite value poisons the rest of the path.
    pub(crate) fn guard(&mut self, i: usize) -> bool {
        if self.state(i as i64).iter().all(|v| v.is_finite()) {
            return true;
        }
        self.exploded_at = Some(i);
        let start = (self.history + i) * self.dim;
        self.values[start..].fill(f64::NAN);
        false
    }
}

pub fn em_discrete_brownian(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
    inc: &BrownianIncrements,
) -> Result<EmPath> {
    check_inputs(model, seg, grid)?;
    match model.noise() {
        NoiseTerm::Brownian { dim, .. } => {
            check_increments(inc, *dim, grid.steps(), grid.h())?;
            discrete_core(model, seg, grid, &mut BrownianDriver::new(model, inc, 1))
        }
        NoiseTerm::None => discrete_core(model, seg, grid, &mut NullDriver),
        NoiseTerm::Jump(_) => Err(Error::NoBrownianPart),
    }
}

pub fn em_continuous_brownian(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
    inc: &BrownianIncrements,
) -> Result<EmPath> {
    check_inputs(model, seg, grid)?;
    match model.noise() {
        NoiseTerm::Brownian { dim, .. } => {
            check_increments(inc, *dim, grid.fine_steps(), grid.fine_step())?;
            continuous_core(
                model,
                seg,
                grid,
                &mut BrownianDriver::new(model, inc, grid.refine()),
            )
        }
        NoiseTerm::None => continuous_core(model, seg, grid, &mut NullDriver),
        NoiseTerm::Jump(_) => Err(Error::NoBrownianPart),
    }
}

pub fn em_discrete_jump(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
    jumps: &JumpStream,
) -> Result<EmPath> {
    check_inputs(model, seg, grid)?;
    let part = model.jump_part().ok_or(Error::NoJumpPart)?;
    discrete_core(
        model,
        seg,
        grid,
        &mut JumpDriver::new(model, part, jumps, grid, 1),
    )
}

pub fn em_continuous_jump(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
    jumps: &JumpStream,
) -> Result<EmPath> {
    check_inputs(model, seg, grid)?;
    let part = model.jump_part().ok_or(Error::NoJumpPart)?;
    continuous_core(
        model,
        seg,
        grid,
        &mut JumpDriver::new(model, part, jumps, grid, grid.refine()),
    )
}

fn check_inputs(model: &NeutralModel, seg: &InitialSegment, grid: &TimeGrid) -> Result<()> {
    if seg.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "segment dimension {} vs model dimension {}",
            seg.dim(),
            model.dim()
        )));
    }
    if (seg.tau() - grid.tau()).abs() > STEP_MATCH_TOL * grid.tau() {
        return Err(Error::DimensionMismatch(format!(
            "segment delay {} vs grid delay {}",
            seg.tau(),
            grid.tau()
        )));
    }
    Ok(())
}

fn check_increments(inc: &BrownianIncrements, dim: usize, steps: usize, step: f64) -> Result<()> {
    if inc.dim() != dim || inc.steps() != steps {
        return Err(Error::DimensionMismatch(format!(
            "increments are {}x{}, scheme needs {steps}x{dim}",
            inc.steps(),
            inc.dim()
        )));
    }
    if (inc.fine_step() - step).abs() > STEP_MATCH_TOL * step {
        return Err(Error::DimensionMismatch(format!(
            "increment step {} does not match scheme step {step}",
            inc.fine_step()
        )));
    }
    Ok(())
}

fn fill_history(path: &mut EmPath, seg: &InitialSegment) -> Result<()> {
    let hist = path.history_len() as i64;
    for i in -hist..=0 {
        let t = path.time(i);
        seg.eval_into(t, path.state_mut(i))?;
    }
    Ok(())
}

fn discrete_core<D: StepDriver>(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
    driver: &mut D,
) -> Result<EmPath> {
    let n = model.dim();
    let m = grid.m() as i64;
    let h = grid.h();
    let mut path = EmPath::new(*grid, NodeSet::CoarseDiscrete, n);
    fill_history(&mut path, seg)?;

    let mut g_lead = vec![0.0; n];
    let mut g_lag = vec![0.0; n];
    let mut drift = vec![0.0; n];
    let mut next = vec![0.0; n];
    for k in 0..grid.steps() {
        let ki = k as i64;
        let y = path.state(ki);
        let yd = path.state(ki - m);
        model.neutral_into(path.state(ki + 1 - m), &mut g_lead);
        model.neutral_into(yd, &mut g_lag);
        model.drift_into(y, yd, &mut drift);
        for i in 0..n {
            next[i] = g_lead[i] + (y[i] - g_lag[i]) + drift[i] * h;
        }
        driver.freeze(y, yd);
        driver.add_to(k, 1, h, &mut next);
        path.state_mut(ki + 1).copy_from_slice(&next);
        if !path.guard(k + 1) {
            break;
        }
    }
    Ok(path)
}

fn continuous_core<D: StepDriver>(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
    driver: &mut D,
) -> Result<EmPath> {
    let n = model.dim();
    let m = grid.m();
    let refine = grid.refine();
    let steps = grid.steps();
    let h = grid.h();
    let fine = grid.fine_step();
    let mut path = EmPath::new(*grid, NodeSet::FineContinuous, n);
    fill_history(&mut path, seg)?;

    // Ybar at coarse nodes -m..=M, index k + m
    let mut coarse = vec![0.0; (m + steps + 1) * n];
    for k in 0..m {
        seg.eval_into(
            grid.node_time(k as i64 - m as i64),
            &mut coarse[k * n..(k + 1) * n],
        )?;
    }
    let xi0 = seg.eval(0.0)?;
    let mut acc = vec![0.0; n];
    model.neutral_into(&coarse[..n], &mut acc);
    for (a, x) in acc.iter_mut().zip(&xi0) {
        *a = x - *a;
    }

    let mut base = vec![0.0; n];
    let mut drift = vec![0.0; n];
    let mut row = vec![0.0; n];
    for k in 0..=steps {
        model.neutral_into(&coarse[k * n..(k + 1) * n], &mut base);
        for (b, a) in base.iter_mut().zip(&acc) {
            *b += a;
        }
        let at = k * refine;
        path.state_mut(at as i64).copy_from_slice(&base);
        coarse[(k + m) * n..(k + m + 1) * n].copy_from_slice(&base);
        if !path.guard(at) || k == steps {
            break;
        }

        let (lagged, current) = coarse.split_at(m * n + k * n);
        let y = &current[..n];
        let yd = &lagged[k * n..(k + 1) * n];
        model.drift_into(y, yd, &mut drift);
        driver.freeze(y, yd);

        let mut blown = false;
        for r in 1..refine {
            let elapsed = r as f64 * fine;
            for i in 0..n {
                row[i] = base[i] + drift[i] * elapsed;
            }
            driver.add_to(k, r, elapsed, &mut row);
            path.state_mut((at + r) as i64).copy_from_slice(&row);
            if !path.guard(at + r) {
                blown = true;
                break;
            }
        }
        if blown {
            break;
        }
        for i in 0..n {
            acc[i] += drift[i] * h;
        }
        driver.add_to(k, refine, h, &mut acc);
    }
    Ok(path)
}
