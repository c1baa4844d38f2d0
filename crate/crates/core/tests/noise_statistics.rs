use std::collections::BTreeMap;

use nsdde::model::build_grid;
use nsdde::noise::{sample_brownian, sample_jumps, SeedPlan};
use nsdde::registry::build_model;

#[test]
fn brownian_totals_have_variance_horizon() {
    let grid = build_grid(1.0, 2.0, 16, 4).unwrap();
    let plan = SeedPlan::new(99);
    let n = 20_000;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for path in 0..n {
        let inc = sample_brownian(&grid, 1, &plan, path);
        let total: f64 = inc.as_slice().iter().sum();
        sum += total;
        sumsq += total * total;
    }
    let mean = sum / n as f64;
    let var = sumsq / n as f64 - mean * mean;
    assert!(mean.abs() < 4.0 * (2.0 / n as f64).sqrt(), "{mean}");
    assert!((var - 2.0).abs() / 2.0 < 0.05, "{var}");
}

#[test]
fn increments_look_gaussian() {
    let grid = build_grid(1.0, 1.0, 100, 10).unwrap();
    let inc = sample_brownian(&grid, 1, &SeedPlan::new(4), 0);
    let scale = grid.fine_step().sqrt();
    let z: Vec<f64> = inc.as_slice().iter().map(|x| x / scale).collect();
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let skew = z.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
    let kurt = z.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var);
    assert!(mean.abs() < 0.1);
    assert!((var - 1.0).abs() < 0.1);
    assert!(skew.abs() < 0.2, "{skew}");
    assert!((kurt - 3.0).abs() < 0.4, "{kurt}");
}

#[test]
fn jump_counts_match_intensity() {
    let model = build_model("jump-remark-1.2", &BTreeMap::new()).unwrap();
    let grid = build_grid(1.0, 2.0, 8, 1).unwrap();
    let plan = SeedPlan::new(2);
    let n = 10_000u64;
    let counts: Vec<f64> = (0..n)
        .map(|p| sample_jumps(&grid, &model, &plan, p).unwrap().len() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    // Poisson(lambda T) with lambda = 2, T = 2
    let se = (4.0 / n as f64).sqrt();
    assert!((mean - 4.0).abs() < 3.0 * se, "{mean}");
    let marks: Vec<f64> = (0..200)
        .flat_map(|p| {
            sample_jumps(&grid, &model, &plan, p)
                .unwrap()
                .marks()
                .to_vec()
        })
        .collect();
    assert!(marks.iter().all(|u| (-1.0..1.0).contains(u)));
}

#[test]
fn generation_order_does_not_matter() {
    let grid = build_grid(1.0, 1.0, 8, 2).unwrap();
    let plan = SeedPlan::new(31);
    let forward: Vec<_> = (0..20)
        .map(|p| sample_brownian(&grid, 2, &plan, p))
        .collect();
    for p in (0..20).rev() {
        let again = sample_brownian(&grid, 2, &plan, p);
        assert_eq!(again.as_slice(), forward[p as usize].as_slice());
    }
    assert_ne!(forward[0].as_slice(), forward[1].as_slice());
}
