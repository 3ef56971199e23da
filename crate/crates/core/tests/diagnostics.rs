mod common;

use std::sync::Arc;

use common::labels;
use semcert_core::diagnostics::*;
use semcert_core::metric_space::capped_lipschitz_cost;
use semcert_core::models::{build_xi_chain, XiChainSpec, XiSyncProvider};
use semcert_core::transport::wasserstein;
use semcert_core::{Coupling, Distribution, Error, Kernel, MetricSpace};

const XI: f64 = 0.4;

fn xi_chain(depth: usize) -> (XiChainSpec, Kernel) {
    let spec = XiChainSpec::new(XI, depth).unwrap();
    (spec, build_xi_chain(&spec).unwrap())
}

fn line(coords: &[f64]) -> Arc<MetricSpace> {
    Arc::new(MetricSpace::from_line(labels(coords.len()), coords.to_vec(), 0).unwrap())
}

fn cert(f: Envelope, bounded: bool) -> AsfPlusCertificate {
    AsfPlusCertificate { x0: 0, times: vec![1], slacks: vec![0.0], f, f_bounded: bounded }
}

fn two_absorbing() -> Kernel {
    Kernel::identity(line(&[0.0, 1.0]))
}

#[test]
fn asf_plus_diagonal_pair_is_trivial() {
    let (_, k) = xi_chain(6);
    let r = check_asf_plus(&k, &cert(Envelope::Constant { c: 0.0 }, true), &[(3, 3)], &[(1.0, 1.0)]).unwrap();
    assert!(r.pass);
    assert_eq!(r.records[0].lhs, 0.0);
}

#[test]
fn asf_plus_lhs_is_symmetric_and_monotone() {
    let (_, k) = xi_chain(8);
    let law = |i| k.push_point(i, 2);
    let grid = [0.5, 1.0, 2.0];
    for (x, y) in [(0, 3), (1, 9), (2, 12)] {
        let mut prev_a = vec![0.0; grid.len()];
        for &a in &grid {
            let mut prev = 0.0;
            for (ki, &kk) in grid.iter().enumerate() {
                let c = capped_lipschitz_cost(k.space(), a, kk).unwrap();
                let v = wasserstein(&law(x), &law(y), &c).unwrap().value;
                let w = wasserstein(&law(y), &law(x), &c).unwrap().value;
                assert!((v - w).abs() < 1e-12);
                assert!(v >= prev - 1e-12 && v >= prev_a[ki] - 1e-12);
                prev = v;
                prev_a[ki] = v;
            }
        }
    }
}

#[test]
fn xi_chain_stated_envelope_fails_at_the_first_and_top_cross_pairs() {
    let (spec, k) = xi_chain(12);
    let n = k.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let ak = [(1.0, 1.0), (1.0, 10.0)];
    let stated = check_asf_plus(&k, &cert(Envelope::Affine { a: 2.0 / XI, b: 1.0 / XI }, false), &pairs, &ak).unwrap();
    let failing: Vec<_> = stated.records.iter().filter(|r| !r.pass).collect();
    assert!(!failing.is_empty());
    let first = (spec.integer(1), spec.shifted(1));
    // the truncated top level resets both lattices at once
    let top = (spec.integer(spec.depth), spec.shifted(spec.depth));
    for r in &failing {
        assert!((r.x, r.y) == first || (r.x, r.y) == top, "({}, {})", r.x, r.y);
        assert_eq!(r.k, 10.0);
        assert!((r.lhs - 2.0).abs() < 1e-12);
    }
    let at_first = failing.iter().find(|r| (r.x, r.y) == first).unwrap();
    assert!((at_first.rhs - 1.8).abs() < 1e-12);
    let corrected = check_asf_plus(&k, &cert(Envelope::Affine { a: 2.0 / XI, b: 2.0 / XI }, false), &pairs, &ak).unwrap();
    assert!(corrected.pass);
}

#[test]
fn asf_plus_rejects_bad_parameters() {
    let (_, k) = xi_chain(4);
    let c = cert(Envelope::Constant { c: 1.0 }, true);
    assert_eq!(check_asf_plus(&k, &c, &[(0, 1)], &[(0.0, 1.0)]).unwrap_err(), Error::NonpositiveParameters);
    let mut bad = c.clone();
    bad.slacks = vec![-1.0];
    assert!(check_asf_plus(&k, &bad, &[(0, 1)], &[(1.0, 1.0)]).is_err());
    assert!(check_asf_plus(&k, &c, &[(0, 99)], &[(1.0, 1.0)]).is_err());
}

#[test]
fn asf_profile_on_identity_kernel() {
    let k = Kernel::identity(line(&[0.0, 0.3, 1.0, 2.5]));
    let p = asf_profile(&k, 0, &[1, 1], &[1, 10], &[0.2, 0.5, 1.5, 10.0]).unwrap();
    assert_eq!(p.values[0], vec![0.0, 0.3, 1.0, 1.0]);
    assert_eq!(p.values[1], vec![0.0, 1.0, 1.0, 1.0]);
    assert_eq!(p.empty_balls, vec![0.2]);
    assert_eq!(p.tail_estimate, vec![0.0, 1.0, 1.0, 1.0]);
}

#[test]
fn asf_profile_is_monotone_in_radius() {
    let (_, k) = xi_chain(10);
    let p = asf_profile(&k, 0, &[1, 2, 3, 4], &[1, 2, 4, 8], &[0.05, 0.3, 0.5, 1.2, 3.0, 100.0]).unwrap();
    for row in &p.values {
        assert!(row.windows(2).all(|w| w[0] <= w[1] + 1e-10));
        assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(row[0], 0.0);
    }
}

#[test]
fn lwi_singleton_ball_and_large_eps() {
    let (_, k) = xi_chain(6);
    let r = check_lwi(&k, 0.1, 0.5, &[1, 3]).unwrap();
    assert_eq!(r.ball, vec![0]);
    assert!(r.records.iter().all(|x| x.value == 1.0));
    assert!(r.pass);
    let diam = k.space().diameter();
    let r = check_lwi(&k, 100.0, diam, &[2]).unwrap();
    assert!((r.records[0].value - 1.0).abs() < 1e-12);
}

#[test]
fn lwi_pass_needs_all_later_times() {
    let k = two_absorbing();
    let r = check_lwi(&k, 5.0, 0.5, &[1, 2, 3]).unwrap();
    assert!(!r.pass);
    assert_eq!(r.first_passing_time, None);
    assert!(check_lwi(&k, 0.0, 0.5, &[1]).is_err());
}

#[test]
fn a1_diagonal_pair_passes() {
    let (_, k) = xi_chain(6);
    let z = Envelope::Constant { c: 0.0 };
    let r = verify_a1(&k, &DiagonalProvider, 0, &z, &z, &RateFn::Geometric { scale: 1.0, ratio: 0.5 }, &[(2, 2)], &[1, 2]).unwrap();
    assert!(r.pass);
}

#[test]
fn a1_sync_coupling_on_integer_lattice() {
    let (spec, k) = xi_chain(40);
    let provider = XiSyncProvider { spec };
    let ints: Vec<usize> = (1..=5).map(|n| spec.integer(n)).collect();
    let pairs: Vec<(usize, usize)> = ints.iter().flat_map(|&x| ints.iter().filter(move |&&y| y != x).map(move |&y| (x, y))).collect();
    let r = verify_a1(
        &k,
        &provider,
        0,
        &Envelope::Constant { c: 0.0 },
        &Envelope::Constant { c: 1.0 },
        &RateFn::Geometric { scale: 1.0, ratio: 0.5 },
        &pairs,
        &[1, 2, 3, 4, 5, 6],
    )
    .unwrap();
    assert!(r.pass);
    for rec in &r.records {
        assert_eq!(rec.tv, 0.0);
        let d = k.space().d(rec.x, rec.y);
        assert!((rec.expected_gap - 0.5f64.powi(rec.t as i32) * d).abs() < 1e-12);
    }
    let cert = fit_asf_plus_envelope(&r).unwrap();
    assert_eq!(cert.f, Envelope::Constant { c: 1.0 });
    assert!(check_asf_plus(&k, &cert, &pairs, &[(1.0, 1.0), (1.0, 10.0)]).unwrap().pass);
}

#[test]
fn a1_cross_lattice_gap_persists() {
    let (spec, k) = xi_chain(40);
    let provider = XiSyncProvider { spec };
    let pair = [(spec.integer(1), spec.shifted(1))];
    for scale in [1.0, 10.0, 1e3] {
        let r = verify_a1(
            &k,
            &provider,
            0,
            &Envelope::Constant { c: 0.0 },
            &Envelope::Constant { c: scale },
            &RateFn::Geometric { scale: 1.0, ratio: 0.5 },
            &pair,
            &[2, 8, 16, 24],
        )
        .unwrap();
        assert!(r.records.iter().all(|x| x.pass_tv));
        assert!(!r.pass);
        assert!(matches!(fit_asf_plus_envelope(&r), Err(Error::A1NotSatisfied)));
    }
}

#[test]
fn fit_on_single_point_space() {
    let k = Kernel::identity(line(&[0.0]));
    let z = Envelope::Constant { c: 0.0 };
    let r = verify_a1(&k, &DiagonalProvider, 0, &z, &z, &RateFn::Table { values: vec![0.0] }, &[(0, 0)], &[1]).unwrap();
    let cert = fit_asf_plus_envelope(&r).unwrap();
    assert_eq!(cert.f, Envelope::Constant { c: 0.0 });
    assert!(check_asf_plus(&k, &cert, &[(0, 0)], &[(1.0, 1.0)]).unwrap().pass);
}

#[test]
fn a2_examples() {
    let k = two_absorbing();
    let r = verify_a2(&k, &DiagonalProvider, &[0], 1.0, &RateFn::Geometric { scale: 1.0, ratio: 0.5 }, &[1, 2]).unwrap();
    assert!(r.pass);
    assert_eq!(r.eps_star, 1.0);
    let r = verify_a2(&k, &IndependentProvider, &[0, 1], 0.5, &RateFn::Geometric { scale: 1.0, ratio: 0.5 }, &[1, 2, 3]).unwrap();
    assert!(!r.pass);
    assert!(r.records.iter().filter(|x| x.x != x.y).all(|x| !x.pass_gap));
    assert!(verify_a2(&k, &DiagonalProvider, &[], 0.5, &RateFn::Table { values: vec![1.0] }, &[1]).is_err());
}

#[test]
fn gluing_construction_examples() {
    let (spec, k) = xi_chain(40);
    let o = theorem23_construction(&k, &DiagonalProvider, 4, 4, 3, 0.0).unwrap();
    assert!((o.closeness - 1.0).abs() < 1e-12);
    let provider = XiSyncProvider { spec };
    let (x, y) = (spec.integer(1), spec.integer(3));
    let o = theorem23_construction(&k, &provider, x, y, 8, 0.0).unwrap();
    assert!(o.bound_holds && o.closeness >= o.lower_bound - 1e-10);
    assert!((o.closeness - (1.0 - 0.5f64.powi(8))).abs() < 1e-12);
    assert!(o.marginal_error <= 1e-10);
}

#[test]
fn table_provider_marginal_is_checked() {
    let k = two_absorbing();
    let mut t = TableProvider::default();
    t.insert(0, 1, 1, Coupling::from_dense(&[vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap());
    assert!(matches!(checked_joint(&t, &k, 0, 1, 1, &k.push_point(1, 1)), Err(Error::MarginalMismatch(_))));
    t.insert(0, 1, 2, Coupling::from_dense(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap());
    assert!(checked_joint(&t, &k, 0, 1, 2, &k.push_point(1, 2)).is_ok());
}

#[test]
fn verdicts() {
    let single = Kernel::identity(line(&[0.0]));
    let v = uniqueness_verdict(
        &single,
        &cert(Envelope::Constant { c: 1.0 }, true),
        &[(0, 0)],
        &[(1.0, 1.0)],
        LwiParams { radius: 1.0, eps: 0.5, times: &[1] },
    )
    .unwrap();
    assert!(v.implied && v.consistent && v.decomposition_count == 1);

    let (_, k) = xi_chain(10);
    let v = uniqueness_verdict(
        &k,
        &cert(Envelope::Affine { a: 2.0 / XI, b: 2.0 / XI }, false),
        &[(0, 1), (0, 10)],
        &[(1.0, 1.0)],
        LwiParams { radius: 3.0, eps: 0.1, times: &[6] },
    )
    .unwrap();
    assert!(!v.implied && v.truncation_dependent && v.consistent);
    assert_eq!(v.reasons, vec!["F unbounded/truncation-dependent".to_string()]);
    assert_eq!(v.decomposition_count, 2);
}

#[test]
fn separation_examples() {
    let (_, k) = xi_chain(40);
    let dec = k.invariant_measures().unwrap();
    let f = Envelope::Affine { a: 2.0 / XI, b: 1.0 / XI };
    let r = support_separation(&dec.measures[0], &dec.measures[1], &f, k.space(), 0).unwrap();
    assert!(r.pass && r.min_ratio >= 1.0);
    assert!(matches!(
        support_separation(&dec.measures[0], &dec.measures[0], &f, k.space(), 0),
        Err(Error::DistinctMeasuresRequired)
    ));

    let s = line(&[0.0, 0.25]);
    let r = support_separation(&Distribution::dirac(2, 0), &Distribution::dirac(2, 1), &Envelope::Constant { c: 4.0 }, &s, 0).unwrap();
    assert_eq!(r.min_ratio, 1.0);
    assert!(r.pass);
}

#[test]
fn certificate_json_schema() {
    let text = r#"{"x0":0,"times":[1,2],"slacks":[0.5,0.25],"F":{"type":"affine","a":5,"b":2.5},"F_bounded":false}"#;
    let c: AsfPlusCertificate = serde_json::from_str(text).unwrap();
    assert_eq!(c.f, Envelope::Affine { a: 5.0, b: 2.5 });
    let back: AsfPlusCertificate = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    assert!(serde_json::from_str::<AsfPlusCertificate>(&text.replace("\"x0\"", "\"x1\":0,\"x0\"")).is_err());
    let table: Envelope = serde_json::from_str(r#"{"type":"table","u":[0,1],"values":[1,2]}"#).unwrap();
    assert_eq!(table.eval(-1.0), 1.0);
    assert_eq!(table.eval(0.99), 1.0);
    assert_eq!(table.eval(1.0), 2.0);
    assert!(serde_json::from_str::<Envelope>(r#"{"type":"table","u":[0,1],"values":[2,1]}"#).unwrap().validate().is_err());
}

#[test]
fn stated_envelope_failures_at_depth_40() {
    let (spec, k) = xi_chain(40);
    let n = k.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let r = check_asf_plus(&k, &cert(Envelope::Affine { a: 2.0 / XI, b: 1.0 / XI }, false), &pairs, &[(1.0, 10.0)]).unwrap();
    let failing: Vec<(usize, usize)> = r.records.iter().filter(|x| !x.pass).map(|x| (x.x, x.y)).collect();
    assert_eq!(failing, vec![(spec.integer(1), spec.shifted(1)), (spec.integer(40), spec.shifted(40))]);
}
