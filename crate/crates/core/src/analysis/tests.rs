use super::*;
use crate::em::{em_continuous_brownian, em_discrete_brownian};
use crate::model::{build_grid, scalar};
use crate::noise::{coarsen, sample_brownian};
use crate::registry::{build_model, default_segment};
use std::collections::BTreeMap;

fn defaults() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

fn spec(ladder: Vec<usize>, fine_m: usize, horizon: f64, n_paths: usize, seed: u64) -> LadderSpec {
    LadderSpec {
        tau: 1.0,
        horizon,
        ladder,
        fine_m,
        reference: Reference::Em,
        n_paths,
        plan: SeedPlan::new(seed),
        explosion_budget: 0.0,
        workers: None,
    }
}

#[test]
fn additive_model_has_zero_error() {
    let model = build_model("additive", &defaults()).unwrap();
    let seg = default_segment("additive", &defaults(), 1.0).unwrap();
    let s = spec(vec![2, 4, 8, 16], 64, 1.0, 200, 1);
    let table = coupled_strong_error(&model, &seg, &s, 2.0).unwrap();
    assert_eq!(table.rows.len(), 4);
    for r in &table.rows {
        assert!(r.err <= 1e-20, "h = {}: {}", r.h, r.err);
    }
}

#[test]
fn gbm_against_closed_form_has_half_order() {
    let model = build_model("gbm", &defaults()).unwrap();
    let seg = default_segment("gbm", &defaults(), 1.0).unwrap();
    // Coarser ladders carry a visible O(h^2) drift contribution.
    let mut s = spec(vec![32, 64, 128, 256], 1024, 1.0, 1000, 3);
    s.reference = Reference::GbmExact {
        mu: -1.0,
        sigma: 0.5,
        x0: 1.0,
    };
    let table = coupled_strong_error(&model, &seg, &s, 2.0).unwrap();
    for w in table.rows.windows(2) {
        assert!(w[1].err < w[0].err);
    }
    let fit = table.fit().unwrap();
    assert!((0.8..=1.2).contains(&fit.slope), "{fit:?}");
}

#[test]
fn rows_are_sorted_by_step_descending() {
    let model = build_model("paper-eq-1.1", &defaults()).unwrap();
    let seg = default_segment("paper-eq-1.1", &defaults(), 1.0).unwrap();
    let s = spec(vec![4, 8], 32, 1.0, 64, 2);
    let table = coupled_strong_error(&model, &seg, &s, 2.0).unwrap();
    assert!(table.rows[0].h > table.rows[1].h);
    assert!(table.rows.iter().all(|r| r.err >= 0.0 && r.n_paths == 64));
}

#[test]
fn ladder_paths_use_coarsened_reference_noise() {
    // The engine drives every rung with the fine increments; summing them
    // per coarse step must reproduce the discrete recursion exactly.
    let model = build_model("paper-eq-1.1", &defaults()).unwrap();
    let seg = default_segment("paper-eq-1.1", &defaults(), 1.0).unwrap();
    let s = spec(vec![4, 8, 16], 64, 2.0, 1, 9);
    let fine = s.fine_grid().unwrap();
    let inc = sample_brownian(&fine, 1, &s.plan, 0);
    for grid in s.grids(true).unwrap() {
        let factor = s.fine_m / grid.m();
        let coarse = coarsen(&inc, factor).unwrap();
        for k in 0..coarse.steps() {
            let direct: f64 = (0..factor).map(|i| inc.row(k * factor + i)[0]).sum();
            assert!((coarse.row(k)[0] - direct).abs() < 1e-15);
        }
        let cont = em_continuous_brownian(&model, &seg, &grid, &inc).unwrap();
        let disc =
            em_discrete_brownian(&model, &seg, &grid.with_refine(1).unwrap(), &coarse).unwrap();
        for k in 0..=grid.steps() as i64 {
            let a = cont.coarse_state(k)[0];
            let b = disc.state(k)[0];
            assert!(
                (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
                "m = {} k = {k}",
                grid.m()
            );
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let model = build_model("jump-remark-1.2", &defaults()).unwrap();
    let seg = default_segment("jump-remark-1.2", &defaults(), 1.0).unwrap();
    let measure = Measure {
        strong_error: true,
        moments: true,
    };
    let run = |workers| {
        let mut s = spec(vec![4, 8, 16, 32], 128, 2.0, 300, 5);
        s.workers = Some(workers);
        run_study(&model, &seg, &s, &[2.0, 4.0], measure).unwrap()
    };
    let base = run(1);
    for w in [4, 8] {
        let other = run(w);
        for (a, b) in base.errors.iter().zip(&other.errors) {
            for (x, y) in a.rows.iter().zip(&b.rows) {
                assert_eq!(x.err.to_bits(), y.err.to_bits());
                assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
            }
        }
        for (a, b) in base.moments.iter().zip(&other.moments) {
            for (x, y) in a.rows.iter().zip(&b.rows) {
                assert_eq!(x.displacement.to_bits(), y.displacement.to_bits());
                assert_eq!(x.sup_moment.to_bits(), y.sup_moment.to_bits());
                assert_eq!(
                    x.pointwise_displacement.to_bits(),
                    y.pointwise_displacement.to_bits()
                );
            }
        }
    }
}

#[test]
fn reference_is_converged_relative_to_the_ladder() {
    let model = build_model("paper-eq-1.1", &defaults()).unwrap();
    let seg = default_segment("paper-eq-1.1", &defaults(), 1.0).unwrap();
    let ladder = vec![8, 16, 32, 64];
    let coarse =
        coupled_strong_error(&model, &seg, &spec(ladder.clone(), 256, 2.0, 4000, 4), 2.0).unwrap();
    let finer = coupled_strong_error(&model, &seg, &spec(ladder, 512, 2.0, 4000, 4), 2.0).unwrap();
    let (a, b) = (coarse.rows[0].err, finer.rows[0].err);
    assert!((a - b).abs() / b < 0.1, "{a} vs {b}");
}

#[test]
fn errors_shrink_along_the_ladder() {
    for id in ["paper-eq-1.1", "jump-remark-1.2"] {
        let model = build_model(id, &defaults()).unwrap();
        let seg = default_segment(id, &defaults(), 1.0).unwrap();
        let table = coupled_strong_error(
            &model,
            &seg,
            &spec(vec![4, 8, 16, 32], 128, 2.0, 600, 8),
            2.0,
        )
        .unwrap();
        let inversions = table
            .rows
            .windows(2)
            .filter(|w| w[1].err >= w[0].err)
            .inspect(|w| {
                let gap = w[1].err - w[0].err;
                assert!(gap < 2.0 * (w[0].stderr + w[1].stderr), "{id}: {w:?}");
            })
            .count();
        assert!(inversions <= 1, "{id}: {table:?}");
    }
}

#[test]
fn deterministic_neutral_error_is_pure_bias() {
    let model = build_model("neutral-deterministic", &defaults()).unwrap();
    let seg = crate::model::InitialSegment::linear(vec![0.3], vec![0.4], 1.0).unwrap();
    let mut s = spec(vec![4, 8, 16, 32], 128, 3.0, 2, 0);
    s.reference = Reference::NeutralOracle;
    let table = coupled_strong_error(&model, &seg, &s, 2.0).unwrap();
    assert_eq!(table.rows[0].stderr, 0.0);
    let fit = table.fit().unwrap();
    assert!(fit.slope >= 1.0, "{fit:?}");
}

#[test]
fn zero_coefficients_have_zero_displacement() {
    let model = crate::model::NeutralModel::new("zero", 1)
        .unwrap()
        .with_diffusion(1, scalar::diffusion(|_, _| 0.0))
        .unwrap();
    let seg = crate::model::InitialSegment::constant(vec![0.7], 1.0).unwrap();
    let report =
        displacement_moment(&model, &seg, &spec(vec![2, 4, 8, 16], 64, 1.0, 50, 1), 2.0).unwrap();
    for r in &report.rows {
        assert_eq!(r.displacement, 0.0);
        assert_eq!(r.pointwise_displacement, 0.0);
        assert!((r.sup_moment - 0.49).abs() < 1e-15);
    }
    assert!(report.displacement_fit.is_none());
}

#[test]
fn sup_moment_of_constant_path_is_its_power() {
    let model = crate::model::NeutralModel::new("still", 1).unwrap();
    let seg = crate::model::InitialSegment::constant(vec![-1.5], 1.0).unwrap();
    let grid = build_grid(1.0, 2.0, 8, 2).unwrap();
    let est = sup_moment(&model, &seg, &grid, 3.0, 10, SeedPlan::new(0)).unwrap();
    assert!((est.value - 3.375).abs() < 1e-12);
    assert_eq!(est.stderr, 0.0);
}

#[test]
fn gbm_sup_moment_dominates_initial_square() {
    let params = BTreeMap::from([("mu".to_string(), 0.0)]);
    let model = build_model("gbm", &params).unwrap();
    let seg = default_segment("gbm", &params, 1.0).unwrap();
    let grid = build_grid(1.0, 1.0, 32, 4).unwrap();
    let est = sup_moment(&model, &seg, &grid, 2.0, 2000, SeedPlan::new(12)).unwrap();
    assert!(est.value.is_finite());
    assert!(est.value >= 1.0);
    assert_eq!(est.exploded_frac, 0.0);
}

#[test]
fn sup_moment_is_uniform_in_step() {
    let model = build_model("paper-eq-1.1", &defaults()).unwrap();
    let seg = default_segment("paper-eq-1.1", &defaults(), 1.0).unwrap();
    let coarse = build_grid(1.0, 2.0, 8, 8).unwrap();
    let fine = build_grid(1.0, 2.0, 32, 2).unwrap();
    let a = sup_moment(&model, &seg, &coarse, 2.0, 1000, SeedPlan::new(2)).unwrap();
    let b = sup_moment(&model, &seg, &fine, 2.0, 1000, SeedPlan::new(2)).unwrap();
    let ratio = a.value / b.value;
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
}

#[test]
fn explosions_are_counted_and_budgeted() {
    // y' = y^3 from 2 blows up before t = 1/8 while coarse steps survive longer.
    let model = crate::model::NeutralModel::new("blow", 1)
        .unwrap()
        .with_drift(scalar::drift(|x, _| x.powi(5)))
        .with_diffusion(1, scalar::diffusion(|_, _| 0.0))
        .unwrap();
    let seg = crate::model::InitialSegment::constant(vec![3.0], 1.0).unwrap();
    let mut s = spec(vec![2, 4, 8, 16], 64, 1.0, 100, 1);
    let err = coupled_strong_error(&model, &seg, &s, 2.0).unwrap_err();
    assert!(
        matches!(err, Error::ExplosionBudgetExceeded { .. }),
        "{err}"
    );
    s.explosion_budget = 1.0;
    let table = coupled_strong_error(&model, &seg, &s, 2.0).unwrap();
    for r in &table.rows {
        assert_eq!(r.exploded_frac, 1.0);
        assert!(r.err.is_nan());
    }
}

#[test]
fn invalid_ladders_are_rejected() {
    let model = build_model("gbm", &defaults()).unwrap();
    let seg = default_segment("gbm", &defaults(), 1.0).unwrap();
    let bad = [
        spec(vec![8, 12], 36, 1.0, 10, 0),
        spec(vec![8, 16], 48, 1.0, 10, 0),
        spec(vec![16, 8], 64, 1.0, 10, 0),
        spec(vec![8, 16], 32, 1.0, 10, 0),
    ];
    for s in &bad {
        let e = coupled_strong_error(&model, &seg, s, 2.0).unwrap_err();
        assert!(matches!(e, Error::NonNestedSteps(_)), "{s:?}: {e}");
    }
    let ok =
        LadderSpec::from_steps(1.0, 1.0, &[0.25, 0.125], 1.0 / 32.0, 10, SeedPlan::new(0)).unwrap();
    assert_eq!(ok.ladder, vec![4, 8]);
    assert_eq!(ok.fine_m, 32);
    assert!(LadderSpec::from_steps(1.0, 1.0, &[0.3], 0.01, 10, SeedPlan::new(0)).is_err());
}

#[test]
fn moment_orders_below_one_are_rejected() {
    let model = build_model("gbm", &defaults()).unwrap();
    let seg = default_segment("gbm", &defaults(), 1.0).unwrap();
    let s = spec(vec![8, 16], 64, 1.0, 10, 0);
    assert!(run_study(&model, &seg, &s, &[0.5], Measure::default()).is_err());
}
