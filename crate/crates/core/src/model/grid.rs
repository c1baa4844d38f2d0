use serde::Serialize;

use crate::error::{Error, Result};

const COMMENSURATE_TOL: f64 = 1e-9;

/// Uniform grid with step `h = tau / m` on `[-tau, T]`, plus a nested fine
/// grid with step `h / refine`.
///
/// Node times are always built as `index * step`. Fine node `j` is placed at
/// `(j / refine) * h + (j % refine) * (h / refine)`, so every coarse node is
/// bit-identical to its fine counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    tau: f64,
    horizon: f64,
    m: usize,
    steps: usize,
    refine: usize,
    h: f64,
}

pub fn build_grid(tau: f64, horizon: f64, m: usize, refine: usize) -> Result<TimeGrid> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidGrid("m must be at least 1".into()));
    }
    if refine == 0 {
        return Err(Error::InvalidGrid("refine must be at least 1".into()));
    }
    let h = tau / m as f64;
    if h >= 1.0 {
        return Err(Error::StepTooLarge { step: h });
    }
    let ratio = horizon / h;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > COMMENSURATE_TOL * steps {
        return Err(Error::NonCommensurate { horizon, step: h });
    }
    Ok(TimeGrid {
        tau,
        horizon,
        m,
        steps: steps as usize,
        refine,
        h,
    })
}

impl TimeGrid {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Steps per delay.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Total coarse steps `M` on `[0, T]`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn refine(&self) -> usize {
        self.refine
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn fine_step(&self) -> f64 {
        self.h / self.refine as f64
    }

    pub fn fine_steps(&self) -> usize {
        self.steps * self.refine
    }

    /// Fine nodes strictly before zero, i.e. on `[-tau, 0)`.
    pub fn fine_history(&self) -> usize {
        self.m * self.refine
    }

    pub fn node_time(&self, k: i64) -> f64 {
        k as f64 * self.h
    }

    pub fn fine_node_time(&self, j: i64) -> f64 {
        let r = self.refine as i64;
        j.div_euclid(r) as f64 * self.h + j.rem_euclid(r) as f64 * self.fine_step()
    }

    /// Same delay and horizon, different fine factor.
    pub fn with_refine(&self, refine: usize) -> Result<TimeGrid> {
        build_grid(self.tau, self.horizon, self.m, refine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic() {
        let g = build_grid(1.0, 2.0, 4, 2).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.steps(), 8);
        assert_eq!(g.fine_step(), 0.125);
        assert_eq!(g.fine_steps(), 16);
    }

    #[test]
    fn unit_step_rejected() {
        assert!(matches!(
            build_grid(1.0, 1.0, 1, 1),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn commensurability() {
        let g = build_grid(0.5, 1.3, 5, 1).unwrap();
        assert_eq!(g.steps(), 13);
        assert!((g.h() - 0.1).abs() < 1e-15);
        assert!(matches!(
            build_grid(0.5, 1.33, 5, 1),
            Err(Error::NonCommensurate { .. })
        ));
    }

    #[test]
    fn bad_inputs() {
        assert!(build_grid(0.0, 1.0, 4, 1).is_err());
        assert!(build_grid(1.0, -1.0, 4, 1).is_err());
        assert!(build_grid(1.0, 1.0, 0, 1).is_err());
        assert!(build_grid(1.0, 1.0, 4, 0).is_err());
    }

    #[test]
    fn coarse_nodes_embed_bitwise() {
        for &(tau, horizon, m, refine) in &[(1.0, 2.0, 8, 3), (0.5, 1.3, 5, 7), (0.3, 0.9, 3, 5)] {
            let g = build_grid(tau, horizon, m, refine).unwrap();
            for k in -(m as i64)..=g.steps() as i64 {
                let coarse = g.node_time(k);
                let fine = g.fine_node_time(k * refine as i64);
                assert_eq!(coarse.to_bits(), fine.to_bits(), "k = {k}");
            }
        }
    }

    #[test]
    fn delay_and_horizon_consistent() {
        let g = build_grid(0.5, 1.3, 5, 1).unwrap();
        assert!((g.h() * g.m() as f64 - g.tau()).abs() < 1e-15);
        assert!((g.h() * g.steps() as f64 - g.horizon()).abs() < 1e-12);
    }
}
