use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::ingest::CrsMode;

/// Dense O(n²) Moran's I and local I_i straight from the definitions.
fn dense_oracle(values: &[f64], w: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let ss: f64 = z.iter().map(|v| v * v).sum();
    let mut s0 = 0.0;
    let mut cross = 0.0;
    let mut local = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            s0 += w[i][j];
            cross += w[i][j] * z[i] * z[j];
            local[i] += w[i][j] * z[j];
        }
    }
    for i in 0..n {
        local[i] *= z[i] / (ss / n as f64);
    }
    (n as f64 / s0 * cross / ss, local)
}

fn grid(rows: usize, cols: usize, cell: f64) -> Vec<[f64; 2]> {
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| [c as f64 * cell, r as f64 * cell]))
        .collect()
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, symmetric: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.4) {
                w[i][j] = rng.gen_range(0.01..2.0);
            }
        }
    }
    if symmetric {
        for i in 0..n {
            for j in 0..i {
                w[i][j] = w[j][i];
            }
        }
    }
    // Guarantee S0 > 0.
    w[0][1] += 1.0;
    w[1][0] += 1.0;
    (values, w)
}

#[test]
fn two_zone_moran_is_minus_one() {
    for a in [0.004f64, 1.0, 37.5] {
        let w = SpatialWeights::from_dense(&[vec![0.0, a], vec![a, 0.0]]).unwrap();
        let r = global_moran(&[0.0, 1.0], &w, 0, 1).unwrap();
        assert!((r.i + 1.0).abs() < 1e-15, "{}", r.i);
        assert_eq!(r.expected, -1.0);
        assert!(r.z_score.is_none());
    }
}

#[test]
fn constant_and_empty_inputs() {
    let w = SpatialWeights::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert!(matches!(global_moran(&[0.1, 0.1], &w, 9, 1), Err(Error::ZeroVariance)));
    assert!(matches!(local_moran(&[3.0, 3.0], &w, 9, 0.05, 1), Err(Error::ZeroVariance)));
    let empty = SpatialWeights::<f64>::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    assert!(matches!(global_moran(&[0.0, 1.0], &empty, 9, 1), Err(Error::EmptyWeights)));
    assert!(global_moran(&[0.0, 1.0, 2.0], &w, 9, 1).is_err());
}

#[test]
fn sparse_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.gen_range(3..=30);
        let (values, dense) = random_instance(&mut rng, n, false);
        let w = SpatialWeights::from_dense(&dense).unwrap();
        let (gi, li) = dense_oracle(&values, &dense);
        let g = global_moran(&values, &w, 0, 0).unwrap();
        let l = local_moran(&values, &w, 0, 0.05, 0).unwrap();
        assert!((g.i - gi).abs() <= 1e-10);
        for (a, b) in l.zones.iter().zip(&li) {
            assert!((a.i - b).abs() <= 1e-10);
        }
        assert!((l.sum_i() - w.s0() * g.i).abs() <= 1e-9);
    }
}

#[test]
fn randomization_z_score_matches_reference_formula() {
    // Independent evaluation of the randomization variance, from sums over
    // the dense matrix.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (values, dense) = random_instance(&mut rng, 12, true);
    let n = 12.0;
    let mean = values.iter().sum::<f64>() / n;
    let z: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let s0: f64 = dense.iter().flatten().sum();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for i in 0..12 {
        let mut rc = 0.0;
        for j in 0..12 {
            s1 += 0.5 * (dense[i][j] + dense[j][i]).powi(2);
            rc += dense[i][j] + dense[j][i];
        }
        s2 += rc * rc;
    }
    let k = (z.iter().map(|v| v.powi(4)).sum::<f64>() / n) / (z.iter().map(|v| v * v).sum::<f64>() / n).powi(2);
    let a = n * ((n * n - 3.0 * n + 3.0) * s1 - n * s2 + 3.0 * s0 * s0);
    let b = k * ((n * n - n) * s1 - 2.0 * n * s2 + 6.0 * s0 * s0);
    let var = (a - b) / ((n - 1.0) * (n - 2.0) * (n - 3.0) * s0 * s0) - 1.0 / (n - 1.0).powi(2);

    let w = SpatialWeights::from_dense(&dense).unwrap();
    let r = global_moran(&values, &w, 0, 0).unwrap();
    assert!((r.variance.unwrap() - var).abs() < 1e-12);
    let zs = (r.i + 1.0 / (n - 1.0)) / var.sqrt();
    assert!((r.z_score.unwrap() - zs).abs() < 1e-9);
    let p = r.p_value.unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn permutation_mean_approaches_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (values, dense) = random_instance(&mut rng, 20, true);
    let w = SpatialWeights::from_dense(&dense).unwrap();
    let draws = permutation_draws(&values, &w, 4000, 8).unwrap();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
    let se = sd / (draws.len() as f64).sqrt();
    assert!((mean + 1.0 / 19.0).abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn center_block_is_significant_hh() {
    let pts = grid(5, 5, 200.0);
    let w: SpatialWeights<f64> = build_weights_from_points(&pts, CrsMode::Projected, 500.0, false).unwrap();
    let values: Vec<f64> = (0..25)
        .map(|k| if (1..=3).contains(&(k / 5)) && (1..=3).contains(&(k % 5)) { 10.0 } else { 0.0 })
        .collect();
    let lisa = local_moran(&values, &w, 999, 0.05, 42).unwrap();
    let center = &lisa.zones[12];
    assert_eq!(center.quadrant, Quadrant::HH);
    assert!(center.pseudo_p.unwrap() <= 0.05);
    assert!(center.significant);
    assert_eq!(center.map_label(), "HH");
}

#[test]
fn lone_spike_is_hl() {
    let pts = grid(5, 5, 200.0);
    let w: SpatialWeights<f64> = build_weights_from_points(&pts, CrsMode::Projected, 500.0, false).unwrap();
    let mut values = vec![0.0; 25];
    values[12] = 10.0;
    let lisa = local_moran(&values, &w, 99, 0.05, 1).unwrap();
    assert_eq!(lisa.zones[12].quadrant, Quadrant::HL);
    assert!(lisa.zones[12].lag < 0.0);
}

#[test]
fn zone_without_neighbours_is_isolated() {
    let mut pts = grid(3, 3, 200.0);
    pts.push([10_000.0, 10_000.0]);
    let w: SpatialWeights<f64> = build_weights_from_points(&pts, CrsMode::Projected, 500.0, false).unwrap();
    let values: Vec<f64> = (0..10).map(|k| k as f64).collect();
    let lisa = local_moran(&values, &w, 99, 0.05, 1).unwrap();
    let lone = &lisa.zones[9];
    assert_eq!(lone.quadrant, Quadrant::Isolated);
    assert_eq!(lone.i, 0.0);
    assert!(!lone.significant && lone.pseudo_p.is_none());
    assert_eq!(lone.map_label(), "isolated");
    assert!(lisa.zones[..9].iter().all(|z| z.quadrant != Quadrant::Isolated));
}

#[test]
fn fixed_seed_is_bit_identical_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (values, dense) = random_instance(&mut rng, 40, true);
    let w = SpatialWeights::from_dense(&dense).unwrap();
    let a = local_moran(&values, &w, 199, 0.05, 123).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| local_moran(&values, &w, 199, 0.05, 123).unwrap());
    assert_eq!(a, b);
    let c = local_moran(&values, &w, 199, 0.05, 124).unwrap();
    assert_ne!(a.zones.iter().map(|z| z.pseudo_p).collect::<Vec<_>>(), c.zones.iter().map(|z| z.pseudo_p).collect::<Vec<_>>());
    assert_eq!(global_moran(&values, &w, 99, 5).unwrap(), global_moran(&values, &w, 99, 5).unwrap());
}

#[test]
fn alpha_can_be_reapplied() {
    let pts = grid(5, 5, 200.0);
    let w: SpatialWeights<f64> = build_weights_from_points(&pts, CrsMode::Projected, 500.0, false).unwrap();
    let values: Vec<f64> = (0..25).map(|k| ((k * 7) % 11) as f64).collect();
    let lisa = local_moran(&values, &w, 99, 0.05, 9).unwrap();
    let strict = lisa.with_alpha(0.0);
    assert!(strict.zones.iter().all(|z| !z.significant));
    let loose = lisa.with_alpha(1.0);
    assert!(loose.zones.iter().all(|z| z.significant));
}

#[test]
fn works_in_single_precision() {
    let pts = grid(4, 4, 200.0);
    let w: SpatialWeights<f32> = build_weights_from_points(&pts, CrsMode::Projected, 500.0, false).unwrap();
    let values: Vec<f32> = (0..16).map(|k| (k / 4) as f32).collect();
    let g = global_moran(&values, &w, 99, 1).unwrap();
    assert!(g.i > 0.0);
    let l = local_moran(&values, &w, 99, 0.05, 1).unwrap();
    assert!((l.sum_i() - w.s0() * g.i).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_invariance(seed in any::<u64>(), a in prop_oneof![0.01f64..100.0, -100.0f64..-0.01], b in -1e3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (values, dense) = random_instance(&mut rng, 15, true);
        let w = SpatialWeights::from_dense(&dense).unwrap();
        let moved: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let g0 = global_moran(&values, &w, 0, 0).unwrap().i;
        let g1 = global_moran(&moved, &w, 0, 0).unwrap().i;
        prop_assert!((g0 - g1).abs() <= 1e-9);
        let (l0, _) = local_statistics(&values, &w).unwrap();
        let (l1, _) = local_statistics(&moved, &w).unwrap();
        for (x, y) in l0.iter().zip(&l1) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn local_sum_identity(seed in any::<u64>(), standardize in any::<bool>(), symmetric in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..40);
        let (values, dense) = random_instance(&mut rng, n, symmetric);
        let mut w = SpatialWeights::from_dense(&dense).unwrap();
        if standardize {
            w = w.row_standardize();
        }
        let g = global_moran(&values, &w, 0, 0).unwrap();
        let l = local_moran(&values, &w, 0, 0.05, 0).unwrap();
        prop_assert!((l.sum_i() - w.s0() * g.i).abs() <= 1e-9);
    }
}
