mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semcert_core::metric_space::capped_lipschitz_cost;
use semcert_core::transport::{glue, kantorovich_dual_value, max_closeness, maximal_coupling, tv_distance, wasserstein};
use semcert_core::{Coupling, CostMatrix};

#[test]
fn oracle_reproduces_hand_example() {
    let cost = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let v = vertex_oracle(&[45, 19], &[26, 38], &cost);
    assert!((v - 19.0 / 64.0).abs() < 1e-15);
}

#[test]
fn random_instances_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let n = rng.gen_range(2..=6);
        let mu = random_units(&mut rng, n);
        let nu = random_units(&mut rng, n);
        let cost = match case % 4 {
            0 => CostMatrix::metric(&planar_space(&mut rng, n)),
            1 => capped_lipschitz_cost(&line_space(&mut rng, n), 0.4, 3.0).unwrap(),
            2 => CostMatrix::threshold(&planar_space(&mut rng, n), 1.5),
            _ => {
                let v = (0..n * n).map(|_| rng.gen_range(0.0..2.0)).collect();
                CostMatrix::general(n, v).unwrap()
            }
        };
        let r = wasserstein(&to_dist(&mu), &to_dist(&nu), &cost).unwrap();
        let oracle = vertex_oracle(&mu, &nu, &cost.to_dense());
        assert!((r.value - oracle).abs() < 1e-9, "case {case}: {} vs {oracle}", r.value);
        r.certify(&cost).unwrap();
    }
}

#[test]
fn mismatch_cost_is_total_variation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let mu = to_dist(&random_units(&mut rng, n));
        let nu = to_dist(&random_units(&mut rng, n));
        let w = wasserstein(&mu, &nu, &CostMatrix::mismatch(n)).unwrap();
        assert!((w.value - tv_distance(&mu, &nu).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn dual_path_agrees_with_primal() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..30 {
        let n = rng.gen_range(2..=7);
        let mu = to_dist(&random_units(&mut rng, n));
        let nu = to_dist(&random_units(&mut rng, n));
        let space = planar_space(&mut rng, n);
        let cost = if case % 2 == 0 {
            CostMatrix::metric(&space)
        } else {
            capped_lipschitz_cost(&space, 0.3, 2.0).unwrap()
        };
        let w = wasserstein(&mu, &nu, &cost).unwrap();
        let d = kantorovich_dual_value(&mu, &nu, &cost).unwrap();
        assert!((w.value - d).abs() < 1e-8, "{} vs {d}", w.value);
    }
}

#[test]
fn cost_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let space = line_space(&mut rng, n);
        let mu = to_dist(&random_units(&mut rng, n));
        let nu = to_dist(&random_units(&mut rng, n));
        let lo = wasserstein(&mu, &nu, &capped_lipschitz_cost(&space, 0.5, 1.0).unwrap()).unwrap();
        let hi = wasserstein(&mu, &nu, &capped_lipschitz_cost(&space, 1.0, 4.0).unwrap()).unwrap();
        assert!(lo.value <= hi.value + 1e-10);
    }
}

#[test]
fn maximal_coupling_attains_exact_closeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let space = planar_space(&mut rng, n);
        let mu = to_dist(&random_units(&mut rng, n));
        let nu = to_dist(&random_units(&mut rng, n));
        let mc = maximal_coupling(&mu, &nu).unwrap();
        let (v, _) = max_closeness(&mu, &nu, &space, 0.0).unwrap();
        assert!((1.0 - mc.off_diagonal_mass() - v).abs() < 1e-12);
        assert!((mc.off_diagonal_mass() - tv_distance(&mu, &nu).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn closeness_is_monotone_in_eps() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let space = line_space(&mut rng, 6);
    let mu = to_dist(&random_units(&mut rng, 6));
    let nu = to_dist(&random_units(&mut rng, 6));
    let mut last = 0.0;
    for k in 0..=20 {
        let (v, _) = max_closeness(&mu, &nu, &space, k as f64 * 0.25).unwrap();
        assert!(v >= last - 1e-12);
        last = v;
    }
    assert!((last - 1.0).abs() < 1e-12);
}

fn random_coupling(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Coupling {
    let units = random_units(rng, rows * cols);
    let entries = units
        .iter()
        .enumerate()
        .map(|(k, &u)| (k / cols, k % cols, u as f64 / UNIT as f64))
        .collect::<Vec<_>>();
    Coupling::from_dense(
        &(0..rows)
            .map(|i| (0..cols).map(|j| entries[i * cols + j].2).collect())
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

#[test]
fn glue_reconstructs_both_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let g12 = random_coupling(&mut rng, 5, 5);
        // second coupling shares the middle marginal: split each row mass
        let mid = g12.col_sums();
        let mut e = Vec::new();
        for (j, &m) in mid.iter().enumerate() {
            let w: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            for (k, x) in w.iter().enumerate() {
                e.push((j, k, m * x / s));
            }
        }
        let rowsum: Vec<f64> = mid.clone();
        let colsum = {
            let mut c = vec![0.0; 5];
            for &(_, k, m) in &e {
                c[k] += m;
            }
            c
        };
        let g23 = Coupling::new(5, 5, e, rowsum, colsum).unwrap();
        let t = glue(&g12, &g23).unwrap();
        for (a, b) in [(t.marginal_12(), &g12), (t.marginal_23(), &g23)] {
            for i in 0..5 {
                for j in 0..5 {
                    assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12);
                }
            }
        }
        assert!((t.total_mass() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_solve_is_certified(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = planar_space(&mut rng, n);
        let mu = to_dist(&random_units(&mut rng, n));
        let nu = to_dist(&random_units(&mut rng, n));
        for cost in [
            CostMatrix::metric(&space),
            capped_lipschitz_cost(&space, 0.7, 5.0).unwrap(),
            CostMatrix::threshold(&space, 1.0),
        ] {
            let r = wasserstein(&mu, &nu, &cost).unwrap();
            prop_assert!(r.coupling.marginal_error() <= 1e-10);
            prop_assert!(r.certify(&cost).is_ok());
            let back = wasserstein(&nu, &mu, &cost).unwrap();
            prop_assert!((back.value - r.value).abs() < 1e-9);
        }
        let tv = tv_distance(&mu, &nu).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
    }
}
