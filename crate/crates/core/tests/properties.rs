use std::collections::BTreeMap;

use proptest::prelude::*;

use nsdde::analysis::{fit_order, theory_rate_jump};
use nsdde::em::{
    em_continuous_brownian, em_continuous_jump, em_discrete_brownian, em_discrete_jump,
};
use nsdde::model::{build_grid, validate_assumptions, InitialSegment};
use nsdde::noise::{coarsen, sample_brownian, sample_jumps, BrownianIncrements, SeedPlan};
use nsdde::registry::build_model;

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_nodes_nest(m in 2usize..64, steps_mult in 1usize..6, refine in 1usize..9) {
        let tau = 1.0;
        let horizon = steps_mult as f64 * 0.5;
        prop_assume!(((horizon * m as f64) / tau).fract() == 0.0);
        let grid = build_grid(tau, horizon, m, refine).unwrap();
        prop_assert!((grid.h() * m as f64 - tau).abs() <= 1e-12);
        prop_assert!((grid.h() * grid.steps() as f64 - horizon).abs() <= 1e-12);
        prop_assert!(grid.h() > 0.0 && grid.h() < 1.0);
        for k in -(m as i64)..=grid.steps() as i64 {
            let fine = grid.fine_node_time(k * refine as i64);
            prop_assert_eq!(fine.to_bits(), grid.node_time(k).to_bits());
        }
    }

    #[test]
    fn coarsening_preserves_totals(seed in any::<u64>(), factor in 1usize..5) {
        let grid = build_grid(1.0, 2.0, 8, factor * 2).unwrap();
        let inc = sample_brownian(&grid, 2, &SeedPlan::new(seed), 0);
        let coarse = coarsen(&inc, factor).unwrap();
        prop_assert_eq!(coarse.steps() * factor, inc.steps());
        for d in 0..2 {
            let a: f64 = (0..inc.steps()).map(|i| inc.row(i)[d]).sum();
            let b: f64 = (0..coarse.steps()).map(|i| coarse.row(i)[d]).sum();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn brownian_schemes_coincide_at_coarse_nodes(
        a in -3.0f64..-0.5,
        b in -0.2f64..0.2,
        c in 0.0f64..2.0,
        xi in -0.3f64..0.3,
        seed in any::<u64>(),
    ) {
        let params = BTreeMap::from([
            ("a".to_string(), a),
            ("b".to_string(), b),
            ("c".to_string(), c),
            ("xi".to_string(), xi),
        ]);
        let model = build_model("paper-eq-1.1", &params).unwrap();
        let seg = InitialSegment::linear(vec![xi], vec![0.1], 1.0).unwrap();
        let grid = build_grid(1.0, 2.0, 8, 4).unwrap();
        let inc = sample_brownian(&grid, 1, &SeedPlan::new(seed), 0);
        let cont = em_continuous_brownian(&model, &seg, &grid, &inc).unwrap();
        let disc = em_discrete_brownian(&model, &seg, &grid.with_refine(1).unwrap(), &coarsen(&inc, 4).unwrap()).unwrap();
        prop_assume!(!cont.is_exploded());
        let scale = disc.sup_norm().max(1e-300);
        for k in 0..=grid.steps() as i64 {
            prop_assert!(max_gap(cont.coarse_state(k), disc.state(k)) <= 1e-12 * scale);
        }
    }

    #[test]
    fn jump_schemes_coincide_at_coarse_nodes(q in 1u32..4, seed in any::<u64>(), intensity in 0.0f64..6.0) {
        let params = BTreeMap::from([
            ("q".to_string(), q as f64),
            ("intensity".to_string(), intensity),
            ("mark_low".to_string(), -0.5),
        ]);
        let model = build_model("jump-remark-1.2", &params).unwrap();
        let seg = InitialSegment::constant(vec![0.2], 1.0).unwrap();
        let grid = build_grid(1.0, 2.0, 8, 3).unwrap();
        let stream = sample_jumps(&grid, &model, &SeedPlan::new(seed), 3).unwrap();
        let cont = em_continuous_jump(&model, &seg, &grid, &stream).unwrap();
        let disc = em_discrete_jump(&model, &seg, &grid.with_refine(1).unwrap(), &stream).unwrap();
        let scale = disc.sup_norm().max(1e-300);
        for k in 0..=grid.steps() as i64 {
            prop_assert!(max_gap(cont.coarse_state(k), disc.state(k)) <= 1e-12 * scale);
        }
    }

    #[test]
    fn identical_inputs_give_identical_bits(seed in any::<u64>()) {
        let model = build_model("remark-1.1", &BTreeMap::new()).unwrap();
        let seg = InitialSegment::constant(vec![0.1], 1.0).unwrap();
        let grid = build_grid(1.0, 2.0, 8, 2).unwrap();
        let plan = SeedPlan::new(seed);
        let a = em_continuous_brownian(&model, &seg, &grid, &sample_brownian(&grid, 1, &plan, 7)).unwrap();
        let b = em_continuous_brownian(&model, &seg, &grid, &sample_brownian(&grid, 1, &plan, 7)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(a.values()), bits(b.values()));
    }

    #[test]
    fn fit_recovers_exact_exponent(alpha in 0.1f64..3.0, scale in 1e-6f64..1e3) {
        let pts: Vec<_> = (3..9).map(|k| {
            let h = 2f64.powi(-k);
            (h, scale * h.powf(alpha))
        }).collect();
        let fit = fit_order(&pts).unwrap();
        prop_assert!((fit.slope - alpha).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&fit.r_squared));
    }

    #[test]
    fn theory_exponent_lies_in_unit_interval(theta in 0.001f64..0.999, periods in 0u32..8) {
        let e = theory_rate_jump(2.0, theta, periods as f64 + 0.5, 1.0).unwrap();
        prop_assert!(e > 0.0 && e <= 1.0);
        let expected = (1.0 + theta).powi(-(periods as i32));
        prop_assert!((e - expected).abs() < 1e-12);
    }

    #[test]
    fn linear_segments_respect_their_constant(level in -2.0f64..2.0, slope in -3.0f64..3.0, seed in any::<u64>()) {
        let model = build_model("gbm", &BTreeMap::new()).unwrap();
        let seg = InitialSegment::linear(vec![level], vec![slope], 1.0).unwrap();
        let report = validate_assumptions(&model, &seg, 200, 1e-9, seed);
        prop_assert!(report.all_passed());
    }
}

#[test]
fn zero_increments_reproduce_drift_only_recursion() {
    let model = build_model("gbm", &BTreeMap::from([("sigma".to_string(), 0.0)])).unwrap();
    let seg = InitialSegment::constant(vec![1.0], 1.0).unwrap();
    let grid = build_grid(1.0, 1.0, 10, 1).unwrap();
    let zeros = BrownianIncrements::from_vec(grid.h(), 1, vec![0.0; grid.steps()]).unwrap();
    let path = em_discrete_brownian(&model, &seg, &grid, &zeros).unwrap();
    // y_{k+1} = (1 - h) y_k
    for k in 0..=10 {
        let want = 0.9f64.powi(k);
        assert!((path.state(k as i64)[0] - want).abs() < 1e-14);
    }
}
