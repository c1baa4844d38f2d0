//! Closed-form references used to check the schemes.

use super::{EmPath, NodeSet};
use crate::error::{Error, Result};
use crate::model::{InitialSegment, NeutralModel, NoiseTerm, TimeGrid};
use crate::noise::BrownianIncrements;

/// Exact solution of `d[X(t) - G(X(t - tau))] = 0`, i.e.
/// `X(t) = xi(0) - G(xi(-tau)) + G(X(t - tau))`, built one delay interval at
/// a time on the fine nodes of `grid`.
pub fn neutral_recursion_oracle(
    model: &NeutralModel,
    seg: &InitialSegment,
    grid: &TimeGrid,
) -> Result<EmPath> {
    if model.has_drift() || !matches!(model.noise(), NoiseTerm::None) {
        return Err(Error::NotDeterministic);
    }
    super::check_inputs(model, seg, grid)?;
    let n = model.dim();
    let mut path = EmPath::new(*grid, NodeSet::FineContinuous, n);
    super::fill_history(&mut path, seg)?;
    let lag = path.history_len() as i64;

    let mut offset = vec![0.0; n];
    model.neutral_into(path.state(-lag), &mut offset);
    for (o, x) in offset.iter_mut().zip(path.state(0).to_vec()) {
        *o = x - *o;
    }
    let mut g = vec![0.0; n];
    for j in 0..path.len() {
        let ji = j as i64;
        model.neutral_into(path.state(ji - lag), &mut g);
        let row = path.state_mut(ji);
        for i in 0..n {
            row[i] = offset[i] + g[i];
        }
        if !path.guard(j) {
            break;
        }
    }
    Ok(path)
}

/// `X(t) = x0 exp((mu - sigma^2 / 2) t + sigma B(t))` on the fine nodes,
/// with `B` the running sum of the given increments.
pub fn gbm_exact(
    mu: f64,
    sigma: f64,
    x0: f64,
    grid: &TimeGrid,
    inc: &BrownianIncrements,
) -> Result<EmPath> {
    if inc.dim() != 1 || inc.steps() != grid.fine_steps() {
        return Err(Error::DimensionMismatch(format!(
            "gbm oracle needs {}x1 increments, got {}x{}",
            grid.fine_steps(),
            inc.steps(),
            inc.dim()
        )));
    }
    let mut path = EmPath::new(*grid, NodeSet::FineContinuous, 1);
    let hist = path.history_len() as i64;
    for i in -hist..0 {
        path.state_mut(i)[0] = x0;
    }
    let rate = mu - 0.5 * sigma * sigma;
    let mut b = 0.0;
    for j in 0..path.len() {
        if j > 0 {
            b += inc.row(j - 1)[0];
        }
        let t = grid.fine_node_time(j as i64);
        path.state_mut(j as i64)[0] = x0 * (rate * t + sigma * b).exp();
        if !path.guard(j) {
            break;
        }
    }
    Ok(path)
}
