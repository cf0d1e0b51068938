use harmonic_ness::fields::*;
use harmonic_ness::local::LocalFunction;
use harmonic_ness::Configuration;
use proptest::prelude::*;

fn config() -> impl Strategy<Value = Configuration> {
    prop::collection::vec(0u64..20, 3..60).prop_map(Configuration::new)
}

proptest! {
    #[test]
    fn field_is_linear_in_phi(eta in config(), a in -3.0f64..3.0, b in -3.0f64..3.0,
                              c1 in prop::collection::vec(-2.0f64..2.0, 1..4),
                              c2 in prop::collection::vec(-2.0f64..2.0, 1..4)) {
        let len = c1.len().max(c2.len());
        let mix: Vec<f64> = (0..len)
            .map(|j| a * c1.get(j).copied().unwrap_or(0.0) + b * c2.get(j).copied().unwrap_or(0.0))
            .collect();
        let p1 = TestFunction::polynomial(c1).unwrap();
        let p2 = TestFunction::polynomial(c2).unwrap();
        let pm = TestFunction::polynomial(mix).unwrap();
        for g in [LocalFunction::density(), LocalFunction::pair_product(), LocalFunction::indicator_vacuum()] {
            let lhs = field_value(&g, &pm, &eta).unwrap();
            let rhs = a * field_value(&g, &p1, &eta).unwrap() + b * field_value(&g, &p2, &eta).unwrap();
            let scale = 1.0 + eta.occupations().iter().map(|&x| (x * x) as f64).sum::<f64>();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn profile_pairing_is_the_field(eta in config(), c in prop::collection::vec(-2.0f64..2.0, 1..4)) {
        let phi = TestFunction::polynomial(c).unwrap();
        for g in [LocalFunction::density(), LocalFunction::pair_product()] {
            let prof = empirical_profile(&g, &eta).unwrap();
            prop_assert_eq!(prof.len(), eta.len() + 1 - g.k());
            prop_assert_eq!(prof.pair(&phi), field_value(&g, &phi, &eta).unwrap());
        }
    }

    #[test]
    fn constant_phi_gives_scaled_total(eta in config()) {
        let x = field_value(&LocalFunction::density(), &TestFunction::constant(1.0), &eta).unwrap();
        let total: u64 = eta.occupations().iter().sum();
        prop_assert!((x - total as f64 / eta.len() as f64).abs() <= 1e-12 * (1.0 + total as f64));
    }
}

#[test]
fn block_average_of_a_ramp() {
    let eta = Configuration::new((1..=100).collect());
    assert_eq!(block_average(&eta, 50, 0.1).unwrap(), 50.0);
    assert!(block_average(&eta, 5, 0.1).is_err());
    assert!(block_average(&eta, 96, 0.1).is_err());
}
