use semcert_core::diagnostics::{check_lwi, verify_a2, CouplingProvider, RateFn};
use semcert_core::models::*;
use semcert_core::transport::tv_distance;
use semcert_core::Distribution;

#[test]
fn spec_validation() {
    assert!(XiChainSpec::new(0.5, 10).is_err());
    assert!(XiChainSpec::new(0.0, 10).is_err());
    assert!(XiChainSpec::new(0.2, 1).is_err());
    assert!(GaussianWalkSpec::new(5.0, 0.01).is_err());
    assert!(GaussianWalkSpec::new(8.0, 0.1).is_err());
    assert!(IntervalChainSpec::new(3001).is_ok());
}

#[test]
fn xi_chain_has_two_classes_at_every_depth() {
    for depth in 2..16 {
        let spec = XiChainSpec::new(0.25, depth).unwrap();
        let k = build_xi_chain(&spec).unwrap();
        let dec = k.invariant_measures().unwrap();
        assert_eq!(dec.len(), 2, "depth {depth}");
        let (a, b) = xi_chain_reference_measures(&spec);
        let tol = 2f64.powi(4 - depth as i32);
        let (a, b) = (Distribution::new(scale(a)).unwrap(), Distribution::new(scale(b)).unwrap());
        assert!(dec.measures[0].l1_distance(&a) <= tol);
        assert!(dec.measures[1].l1_distance(&b) <= tol);
    }
}

fn scale(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

#[test]
fn xi_chain_lwi_lower_bound() {
    let xi = 0.4;
    let spec = XiChainSpec::new(xi, 30).unwrap();
    let k = build_xi_chain(&spec).unwrap();
    for eps in [0.3, 0.15, 0.1, 0.07] {
        let kk = (1..).find(|&j| xi / (j as f64) < eps).unwrap();
        let t = kk + 1;
        let r = check_lwi(&k, 3.0, eps, &[t]).unwrap();
        assert!(r.records[0].value >= 2f64.powi(-(2 * kk as i32 + 2)), "eps {eps}");
    }
}

#[test]
fn sync_provider_first_step() {
    let spec = XiChainSpec::new(0.4, 10).unwrap();
    let k = build_xi_chain(&spec).unwrap();
    let p = XiSyncProvider { spec };
    let (x, y) = (spec.integer(1), spec.integer(3));
    let j = p.joint(&k, x, y, 1, &k.push_point(y, 1)).unwrap();
    let mut e = j.entries().to_vec();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(e, vec![(spec.integer(1), spec.integer(1), 0.5), (spec.integer(2), spec.integer(4), 0.5)]);
}

#[test]
fn interval_tv_is_holder_in_the_start() {
    let spec = IntervalChainSpec::new(3001).unwrap();
    let h = spec.spacing();
    for (y1, y2) in [(0.0, 0.01), (0.1, 0.2), (0.5, 0.9), (0.99, 1.0)] {
        let a = Distribution::new(interval_row(&spec, y1).unwrap()).unwrap();
        let b = Distribution::new(interval_row(&spec, y2).unwrap()).unwrap();
        let tv = tv_distance(&a, &b).unwrap();
        assert!(tv <= 3.0 * (y2.sqrt() - y1.sqrt()) + 2.0 * h, "({y1}, {y2}): {tv}");
    }
}

#[test]
fn interval_one_step_mean_at_one() {
    let spec = IntervalChainSpec::new(301).unwrap();
    let k = build_interval_chain(&spec).unwrap();
    let v = k.apply_function(&spec.grid(), 1).unwrap();
    assert!((v[spec.nearest(1.0)] - 7.0 / 6.0).abs() < spec.spacing());
    for n in 1..=6 {
        let v = k.apply_function(&spec.grid(), n).unwrap();
        let err = spec.grid().iter().zip(&v).map(|(u, x)| (x - interval_chain_closed_form(n, *u).unwrap()).abs()).fold(0.0, f64::max);
        assert!(err <= 10.0 * spec.spacing());
    }
}

#[test]
fn gaussian_grid_tv_tracks_the_closed_form() {
    let spec = GaussianWalkSpec::new(6.0, 0.05).unwrap();
    let k = build_gaussian_walk(&spec).unwrap();
    let h = spec.step;
    for (x, y) in [(0.0, 1.0), (-2.0, 1.5), (3.0, 2.95), (-3.0, 3.0)] {
        for t in [1u32, 2, 4] {
            let g = tv_distance(&k.push_point(spec.index(x), t), &k.push_point(spec.index(y), t)).unwrap();
            let c = gaussian_tv_closed_form(x, y, t as f64).unwrap();
            assert!((g - c).abs() <= 10.0 * h + 1e-6, "({x}, {y}, {t}): {g} vs {c}");
        }
    }
}

#[test]
fn gaussian_rows_mirror() {
    let spec = GaussianWalkSpec::new(6.0, 0.05).unwrap();
    let k = build_gaussian_walk(&spec).unwrap();
    let n = k.len();
    for x in [0.35, 2.0, 5.5] {
        let (a, b) = (k.push_point(spec.index(x), 1), k.push_point(spec.index(-x), 1));
        for j in 0..n {
            assert!((a.get(j) - b.get(n - 1 - j)).abs() <= 1e-12);
        }
    }
}

#[test]
fn shift_provider_gap_is_geometric() {
    let spec = GaussianWalkSpec::new(6.0, 0.05).unwrap();
    let p = GaussianShiftProvider::new(spec, 0.5).unwrap();
    let (x, y) = (spec.index(-1.0), spec.index(1.0));
    for t in 1..10 {
        assert!((p.gap(x, y, t + 1) - 0.5 * p.gap(x, y, t)).abs() < 1e-12);
    }
    assert_eq!(p.gap(x, x, 3), 0.0);
    assert!(GaussianShiftProvider::new(spec, 1.0).is_err());
}

#[test]
fn shift_provider_a2_on_a_coarse_grid() {
    let spec = GaussianWalkSpec::new(6.0, 0.05).unwrap();
    let k = build_gaussian_walk(&spec).unwrap();
    let p = GaussianShiftProvider::new(spec, 0.5).unwrap();
    let b = k.space().base_ball(1.0);
    let r = verify_a2(&k, &p, &b, 0.59, &RateFn::Geometric { scale: 2.0, ratio: 0.5 }, &[1, 2, 3, 4, 6, 8]).unwrap();
    assert!(r.pass);
    // the open ball's extremes are +-(1 - h)
    let span = 2.0 * (1.0 - spec.step);
    let worst = (1..=8).map(|t| gaussian_tv_closed_form(0.0, (1.0 - 0.5f64.powi(t)) * span, t as f64).unwrap()).fold(0.0, f64::max);
    assert!((r.eps_star - (1.0 - worst)).abs() < 5e-3, "{} vs {}", r.eps_star, 1.0 - worst);
    assert_eq!(r.worst.unwrap().t, 2);
}
