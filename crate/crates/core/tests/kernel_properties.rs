mod common;

use std::sync::Arc;

use common::labels;
use proptest::prelude::*;
use semcert_core::models::{build_xi_chain, XiChainSpec};
use semcert_core::{Distribution, Kernel, MetricSpace};

fn line(n: usize) -> Arc<MetricSpace> {
    Arc::new(MetricSpace::from_line(labels(n), (0..n).map(|i| i as f64).collect(), 0).unwrap())
}

/// Row-stochastic matrices with a random sparsity pattern.
fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    (2usize..8).prop_flat_map(|n| {
        proptest::collection::vec(proptest::collection::vec((any::<bool>(), 1u32..10), n), n).prop_map(move |rows| {
            let m: Vec<Vec<f64>> = rows
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut w: Vec<f64> = r.iter().map(|&(on, v)| if on { v as f64 } else { 0.0 }).collect();
                    if w.iter().all(|&x| x == 0.0) {
                        w[i] = 1.0;
                    }
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / s).collect()
                })
                .collect();
            Kernel::new(line(n), m).unwrap()
        })
    })
}

fn closed_class_count(k: &Kernel) -> usize {
    let n = k.len();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || k.entry(i, j) > 1e-15).collect()).collect();
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][m] && reach[m][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let closed: Vec<usize> = (0..n).filter(|&i| (0..n).all(|j| !reach[i][j] || reach[j][i])).collect();
    let mut reps: Vec<usize> = closed.iter().map(|&i| (0..n).find(|&j| reach[i][j] && reach[j][i]).unwrap()).collect();
    reps.sort_unstable();
    reps.dedup();
    reps.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_law(k in kernel_strategy(), s in 0u32..8, t in 0u32..8) {
        let lhs = k.step(s + t);
        let (a, b) = (k.step(s), k.step(t));
        let n = k.len();
        for i in 0..n {
            for j in 0..n {
                let prod: f64 = (0..n).map(|m| a.entry(i, m) * b.entry(m, j)).sum();
                prop_assert!((lhs.entry(i, j) - prod).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn push_preserves_mass_and_is_dual_to_apply(k in kernel_strategy(), t in 0u32..12, seed in any::<u64>()) {
        let n = k.len();
        let raw: Vec<f64> = (0..n).map(|i| ((seed >> (i * 7)) & 0x7f) as f64 + 1.0).collect();
        let s: f64 = raw.iter().sum();
        let mu = Distribution::new(raw.iter().map(|x| x / s).collect()).unwrap();
        let pushed = k.push_measure(&mu, t).unwrap();
        prop_assert!((pushed.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(pushed.weights().iter().all(|&w| w >= 0.0));
        let phi: Vec<f64> = (0..n).map(|i| (i as f64 * 1.7).sin()).collect();
        let pf = k.apply_function(&phi, t).unwrap();
        let lhs: f64 = pushed.weights().iter().zip(&phi).map(|(a, b)| a * b).sum();
        let rhs: f64 = mu.weights().iter().zip(&pf).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
        let sup = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(pf.iter().all(|x| x.abs() <= sup + 1e-12));
    }

    #[test]
    fn decomposition_matches_closed_classes(k in kernel_strategy()) {
        let dec = k.invariant_measures().unwrap();
        prop_assert_eq!(dec.len(), closed_class_count(&k));
        for (m, members) in dec.measures.iter().zip(&dec.class_members) {
            let next = k.push_measure(m, 1).unwrap();
            prop_assert!(next.l1_distance(m) <= 1e-10);
            for i in m.support(0.0) {
                prop_assert!(members.contains(&i));
            }
        }
    }
}

#[test]
fn xi_chain_point_mass_splits() {
    let spec = XiChainSpec::new(0.4, 6).unwrap();
    let k = build_xi_chain(&spec).unwrap();
    let s = k.space();
    let from_two = k.push_point(s.index_of("2").unwrap(), 1);
    assert_eq!(from_two.get(s.index_of("1").unwrap()), 0.5);
    assert_eq!(from_two.get(s.index_of("3").unwrap()), 0.5);
    let from_shifted = k.push_point(s.index_of("2+xi/2").unwrap(), 1);
    assert_eq!(from_shifted.get(s.index_of("1+xi/1").unwrap()), 0.5);
    assert_eq!(from_shifted.get(s.index_of("3+xi/3").unwrap()), 0.5);
}

#[test]
fn invariant_measures_are_fixed_points() {
    let spec = XiChainSpec::new(0.3, 12).unwrap();
    let k = build_xi_chain(&spec).unwrap();
    for m in k.invariant_measures().unwrap().measures {
        assert!(k.push_measure(&m, 7).unwrap().l1_distance(&m) <= 1e-10);
    }
}

#[test]
fn push_measure_rejects_wrong_length() {
    let k = Kernel::identity(line(3));
    assert!(k.push_measure(&Distribution::uniform(4), 1).is_err());
    assert!(k.apply_function(&[1.0, f64::NAN, 0.0], 1).is_err());
}
