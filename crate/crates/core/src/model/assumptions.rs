//! Sampled checks of the polynomial growth conditions.
//!
//! These never certify a global inequality: a pass only means no probe in
//! the box violated the declared constant.

use rand::Rng;
use serde::Serialize;

use super::{distance, norm, InitialSegment, NeutralModel, NoiseTerm};
use crate::noise::{SeedPlan, StreamPurpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssumptionId {
    /// Polynomial Lipschitz bound on the neutral term.
    A1,
    /// Polynomial Lipschitz bound on drift and diffusion.
    A2,
    /// Lipschitz initial segment.
    A3,
    /// Polynomial Lipschitz bound on the jump coefficient.
    A4,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub id: AssumptionId,
    pub n_probes: usize,
    pub max_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub checked: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn get(&self, id: AssumptionId) -> Option<&AssumptionCheck> {
        self.checked.iter().find(|c| c.id == id)
    }

    pub fn all_passed(&self) -> bool {
        self.checked.iter().all(|c| c.passed)
    }
}

/// Probes in the default box `[-1, 1]^n`.
pub fn validate_assumptions(
    model: &NeutralModel,
    seg: &InitialSegment,
    probes: usize,
    slack: f64,
    seed: u64,
) -> AssumptionReport {
    validate_assumptions_in_box(model, seg, probes, slack, seed, 1.0)
}

pub fn validate_assumptions_in_box(
    model: &NeutralModel,
    seg: &InitialSegment,
    probes: usize,
    slack: f64,
    seed: u64,
    half_width: f64,
) -> AssumptionReport {
    let probes = probes.max(1);
    let mut rng = SeedPlan::new(seed).rng(0, StreamPurpose::Probe);
    let n = model.dim();
    let growth = model.growth();
    let weight = |y: &[f64], yb: &[f64]| 1.0 + norm(y).powf(growth.q) + norm(yb).powf(growth.q);

    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| rng.random_range(-half_width..=half_width))
            .collect()
    };

    let mut a1 = 0.0f64;
    let mut a2 = 0.0f64;
    let mut a4 = 0.0f64;
    let mut buf_a = vec![0.0; n];
    let mut buf_b = vec![0.0; n];
    let d = model.noise_dim();
    let mut sig_a = vec![0.0; n * d];
    let mut sig_b = vec![0.0; n * d];
    let jumps = model.jump_part();

    for _ in 0..probes {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let xb = draw(&mut rng);
        let yb = draw(&mut rng);

        model.neutral_into(&y, &mut buf_a);
        model.neutral_into(&yb, &mut buf_b);
        let num = distance(&buf_a, &buf_b);
        a1 = a1.max(ratio(num, growth.l * weight(&y, &yb) * distance(&y, &yb)));

        model.drift_into(&x, &y, &mut buf_a);
        model.drift_into(&xb, &yb, &mut buf_b);
        let mut num = distance(&buf_a, &buf_b);
        if let NoiseTerm::Brownian { .. } = model.noise() {
            model.diffusion_into(&x, &y, &mut sig_a);
            model.diffusion_into(&xb, &yb, &mut sig_b);
            num += distance(&sig_a, &sig_b);
        }
        let den = growth.l * distance(&x, &xb) + growth.l * weight(&y, &yb) * distance(&y, &yb);
        a2 = a2.max(ratio(num, den));

        if let Some(j) = jumps {
            let u = j.marks.sample(&mut rng);
            let ur = u.abs().powf(growth.r);
            (j.coefficient)(&x, &y, u, &mut buf_a);
            (j.coefficient)(&xb, &yb, u, &mut buf_b);
            let den = growth.l0 * (distance(&x, &xb) + weight(&y, &yb) * distance(&y, &yb)) * ur;
            a4 = a4.max(ratio(distance(&buf_a, &buf_b), den));
            let zero = vec![0.0; n];
            (j.coefficient)(&zero, &zero, u, &mut buf_a);
            a4 = a4.max(ratio(norm(&buf_a), ur));
        }
    }

    let mut a3 = 0.0f64;
    let tau = seg.tau();
    let mut s1 = vec![0.0; seg.dim()];
    let mut s2 = vec![0.0; seg.dim()];
    for _ in 0..probes {
        let t1 = -tau * rng.random::<f64>();
        let t2 = -tau * rng.random::<f64>();
        if seg.eval_into(t1, &mut s1).is_err() || seg.eval_into(t2, &mut s2).is_err() {
            continue;
        }
        a3 = a3.max(ratio(distance(&s1, &s2), seg.lipschitz() * (t1 - t2).abs()));
    }

    let check = |id, max_ratio: f64| AssumptionCheck {
        id,
        n_probes: probes,
        max_ratio,
        passed: max_ratio <= 1.0 + slack,
    };
    let mut checked = vec![
        check(AssumptionId::A1, a1),
        check(AssumptionId::A2, a2),
        check(AssumptionId::A3, a3),
    ];
    if jumps.is_some() {
        checked.push(check(AssumptionId::A4, a4));
    }
    AssumptionReport { checked }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}
