use harmonic_ness::duality::*;
use harmonic_ness::harness::mean_estimate;
use harmonic_ness::model::{sample_configuration, sample_ness, ParameterProfile};
use harmonic_ness::{BoundaryParams, Configuration, RandomSeed};
use proptest::prelude::*;
use rayon::prelude::*;

#[test]
fn expectation_matches_monte_carlo() {
    let b = BoundaryParams::new(0.5, 2.0).unwrap();
    let n = 12;
    let root = RandomSeed::new(404, 0);
    for xi in [
        DualConfiguration::new([(3, 2), (7, 1)]).unwrap(),
        DualConfiguration::new([(1, 1), (12, 1)]).unwrap(),
        DualConfiguration::new([(6, 3)]).unwrap(),
    ] {
        let exact = duality_expectation_exact(&xi, n, b).unwrap();
        let vals: Vec<f64> = (0..400_000u64)
            .into_par_iter()
            .map(|r| {
                let (_, eta) = sample_ness(n, b, root.replica(r)).unwrap();
                duality_poly(&eta, &xi).unwrap()
            })
            .collect();
        let est = mean_estimate(&vals);
        assert!((est.mean - exact).abs() < 4.0 * est.standard_error, "{xi:?}: {est:?} vs {exact}");
    }
}

#[test]
fn conditional_expectation_is_a_parameter_monomial() {
    let b = BoundaryParams::new(0.0, 3.0).unwrap();
    let profile = ParameterProfile::new(vec![0.3, 0.9, 1.4, 2.5], b).unwrap();
    let xi = DualConfiguration::new([(2, 2), (4, 1)]).unwrap();
    let target = 0.9f64.powi(2) * 2.5;
    let root = RandomSeed::new(405, 0);
    let vals: Vec<f64> = (0..400_000u64)
        .into_par_iter()
        .map(|r| duality_poly(&sample_configuration(&profile, root.replica(r)), &xi).unwrap())
        .collect();
    let est = mean_estimate(&vals);
    assert!((est.mean - target).abs() < 4.0 * est.standard_error, "{est:?} vs {target}");
}

#[test]
fn deviation_shrinks_like_one_over_n() {
    let b = BoundaryParams::new(0.0, 2.0).unwrap();
    let scaled: Vec<f64> = [256usize, 1024, 4096, 16384]
        .iter()
        .map(|&n| le_deviation(1.0 / 3.0, &[2, 1], n, b).unwrap().abs() * n as f64)
        .collect();
    let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo < 3.0, "{scaled:?}");
}

proptest! {
    #[test]
    fn polynomial_vanishes_below_dual_occupation(occ in prop::collection::vec(0u64..6, 1..8), site in any::<prop::sample::Index>(), m in 1u64..5) {
        let s = site.index(occ.len()) + 1;
        let eta = Configuration::new(occ.clone());
        let xi = DualConfiguration::new([(s, m)]).unwrap();
        let d = duality_poly(&eta, &xi).unwrap();
        if occ[s - 1] < m {
            prop_assert_eq!(d, 0.0);
        } else {
            prop_assert!(d >= 1.0);
        }
        prop_assert_eq!(duality_poly(&eta, &DualConfiguration::empty()).unwrap(), 1.0);
    }

    #[test]
    fn equilibrium_expectation_is_a_power(theta in 0.0f64..3.0, a in 0u64..4, c in 0u64..4) {
        let b = BoundaryParams::new(theta, theta).unwrap();
        let xi = DualConfiguration::new([(2, a), (5, c)]).unwrap();
        let v = duality_expectation_exact(&xi, 6, b).unwrap();
        let t = theta.powi((a + c) as i32);
        prop_assert!((v - t).abs() <= 1e-12 * t.max(1.0));
    }
}
