use harmonic_ness::harness::{ks_statistic, mean_estimate};
use harmonic_ness::model::*;
use harmonic_ness::moments::theta_sparse_moment;
use harmonic_ness::RandomSeed;
use proptest::prelude::*;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

#[test]
fn order_statistics_follow_beta_laws() {
    let n = 10;
    let replicas = 100_000;
    let b = BoundaryParams::new(0.0, 1.0).unwrap();
    let root = RandomSeed::new(2024, 0);
    let profiles: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| sample_parameter_profile(n, b, root.replica(r)).unwrap().values().to_vec())
        .collect();
    // ten sites tested together: per-site 0.1% critical value keeps the family at 1%
    let crit = 1.949 / (replicas as f64).sqrt();
    for i in 1..=n {
        let xs: Vec<f64> = profiles.iter().map(|p| p[i - 1]).collect();
        let beta = Beta::new(i as f64, (n + 1 - i) as f64).unwrap();
        let d = ks_statistic(&xs, |x| beta.cdf(x.clamp(0.0, 1.0))).unwrap();
        assert!(d < crit, "site {i}: KS {d} >= {crit}");
    }
}

#[test]
fn distant_sites_are_positively_correlated() {
    // Cov(eta_i, eta_j) = Cov(Theta_i, Theta_j) = w^2 i (N+1-j) / ((N+1)^2 (N+2))
    let (n, i, j) = (10, 3, 8);
    let b = BoundaryParams::new(0.0, 2.0).unwrap();
    let exact = theta_sparse_moment(&[(i, 1), (j, 1)], n, b).unwrap()
        - theta_sparse_moment(&[(i, 1)], n, b).unwrap() * theta_sparse_moment(&[(j, 1)], n, b).unwrap();
    let formula = 4.0 * (i * (n + 1 - j)) as f64 / (121.0 * 12.0);
    assert!((exact - formula).abs() < 1e-14);
    let mean_i = b.theta_left() + b.width() * i as f64 / 11.0;
    let mean_j = b.theta_left() + b.width() * j as f64 / 11.0;
    let root = RandomSeed::new(99, 3);
    let products: Vec<f64> = (0..1_000_000u64)
        .into_par_iter()
        .map(|r| {
            let (_, eta) = sample_ness(n, b, root.replica(r)).unwrap();
            let o = eta.occupations();
            (o[i - 1] as f64 - mean_i) * (o[j - 1] as f64 - mean_j)
        })
        .collect();
    let est = mean_estimate(&products);
    assert!((est.mean - exact).abs() < 4.0 * est.standard_error, "{est:?} vs {exact}");
    assert!(est.mean > 5.0 * est.standard_error, "{est:?}");
    let end = theta_sparse_moment(&[(1, 1), (50, 1)], 50, b).unwrap()
        - theta_sparse_moment(&[(1, 1)], 50, b).unwrap() * theta_sparse_moment(&[(50, 1)], 50, b).unwrap();
    assert!(end > 0.0);
}

#[test]
fn equilibrium_sites_are_uncorrelated() {
    let b = BoundaryParams::new(1.5, 1.5).unwrap();
    let root = RandomSeed::new(5, 5);
    let products: Vec<f64> = (0..200_000u64)
        .into_par_iter()
        .map(|r| {
            let (_, eta) = sample_ness(6, b, root.replica(r)).unwrap();
            let o = eta.occupations();
            (o[0] as f64 - 1.5) * (o[5] as f64 - 1.5)
        })
        .collect();
    let est = mean_estimate(&products);
    assert!(est.mean.abs() < 4.0 * est.standard_error, "{est:?}");
}

#[test]
fn conditional_site_laws_are_geometric() {
    let b = BoundaryParams::new(0.0, 3.0).unwrap();
    let profile = ParameterProfile::new(vec![0.0, 0.4, 1.0, 2.9], b).unwrap();
    let replicas = 200_000;
    let root = RandomSeed::new(8, 1);
    let samples: Vec<Vec<u64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| sample_configuration(&profile, root.replica(r)).into_inner())
        .collect();
    for (site, &theta) in profile.values().iter().enumerate() {
        for k in 0..4u64 {
            let p = geometric_pmf(theta, k).unwrap();
            let freq = samples.iter().filter(|s| s[site] == k).count() as f64 / replicas as f64;
            let se = (p * (1.0 - p) / replicas as f64).sqrt();
            assert!((freq - p).abs() <= 4.0 * se + 1e-12, "site {site} k {k}: {freq} vs {p}");
        }
    }
}

#[test]
fn replicas_do_not_depend_on_scheduling() {
    let b = BoundaryParams::new(0.2, 1.7).unwrap();
    let root = RandomSeed::new(1, 2);
    let serial: Vec<_> = (0..64u64).map(|r| sample_ness(30, b, root.replica(r)).unwrap()).collect();
    let parallel: Vec<_> = (0..64usize)
        .into_par_iter()
        .rev()
        .map(|r| sample_ness(30, b, root.replica(r as u64)).unwrap())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    assert_eq!(serial, parallel);
}

proptest! {
    #[test]
    fn profiles_sorted_within_bounds(lo in 0.0f64..5.0, w in 0.0f64..5.0, n in 1usize..200, s in any::<u64>()) {
        let b = BoundaryParams::new(lo, lo + w).unwrap();
        let p = sample_parameter_profile(n, b, RandomSeed::new(s, 0)).unwrap();
        prop_assert_eq!(p.len(), n);
        prop_assert!(p.values().windows(2).all(|x| x[0] <= x[1]));
        prop_assert!(p.values().iter().all(|&v| v >= lo && v <= lo + w));
    }

    #[test]
    fn pmf_is_a_probability_law(theta in 0.0f64..20.0) {
        let mut total = 0.0;
        let mut mean = 0.0;
        for k in 0..5000u64 {
            let p = geometric_pmf(theta, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            total += p;
            mean += k as f64 * p;
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!((mean - theta).abs() < 1e-7 * theta.max(1.0));
    }

    #[test]
    fn same_seed_same_sample(n in 1usize..100, s in any::<u64>(), t in any::<u64>()) {
        let b = BoundaryParams::new(0.5, 2.0).unwrap();
        let seed = RandomSeed::new(s, t);
        prop_assert_eq!(sample_ness(n, b, seed).unwrap(), sample_ness(n, b, seed).unwrap());
    }
}
