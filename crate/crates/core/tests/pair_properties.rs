use approx::assert_relative_eq;
use bfsmc_core::{dilate, euler_vector, FeedbackPair, HomogeneityParams};
use proptest::prelude::*;

fn pair(scale: f64) -> FeedbackPair {
    let hp = HomogeneityParams::new(3, 1.0, -1.0 / 6.0).unwrap();
    FeedbackPair::hong(hp, &[1.0, 2.0, 64.0]).unwrap().with_scale(scale).unwrap()
}

fn state() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, 3).prop_filter("away from the origin", |z| z.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn v_has_degree_two(z in state(), eps in 0.05f64..20.0) {
        let p = pair(1.0);
        let zd = dilate(eps, &z, p.params()).unwrap();
        assert_relative_eq!(p.value(&zd), eps * eps * p.value(&z), max_relative = 1e-6);
    }

    #[test]
    fn feedback_has_degree_p_r_plus_1(z in state(), eps in 0.05f64..20.0) {
        let p = pair(1.0);
        let zd = dilate(eps, &z, p.params()).unwrap();
        let deg = p.params().weight(3);
        assert_relative_eq!(p.feedback(&zd), eps.powf(deg) * p.feedback(&z), max_relative = 1e-6, epsilon = 1e-12);
    }

    #[test]
    fn euler_relation(z in state()) {
        let p = pair(1.0);
        let g = p.gradient(&z);
        let e = euler_vector(&z, p.params());
        let lhs: f64 = g.iter().zip(&e).map(|(a, b)| a * b).sum();
        assert_relative_eq!(lhs, 2.0 * p.value(&z), max_relative = 1e-6);
    }

    #[test]
    fn gradient_matches_central_differences(z in state()) {
        let p = pair(1.0);
        let g = p.gradient(&z);
        for i in 0..3 {
            let step = 1e-6 * (1.0 + z[i].abs());
            let (mut a, mut b) = (z.clone(), z.clone());
            a[i] += step;
            b[i] -= step;
            let fd = (p.value(&a) - p.value(&b)) / (2.0 * step);
            let norm = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
            prop_assert!((fd - g[i]).abs() <= 1e-4 * norm.max(1e-3), "i={} fd={} g={}", i, fd, g[i]);
        }
    }

    #[test]
    fn feedback_opposes_last_partial(z in state()) {
        let p = pair(1.0);
        prop_assert!(p.feedback(&z) * p.dr_value(&z) <= 0.0);
        prop_assert!(p.value(&z) > 0.0);
    }

    #[test]
    fn value_is_even(z in state()) {
        let p = pair(1.0);
        let m: Vec<f64> = z.iter().map(|x| -x).collect();
        assert_relative_eq!(p.value(&m), p.value(&z), max_relative = 1e-9);
        assert_relative_eq!(p.feedback(&m), -p.feedback(&z), max_relative = 1e-12);
    }

    #[test]
    fn scale_multiplies_v_only(z in state(), c in 0.1f64..100.0) {
        let (a, b) = (pair(1.0), pair(c));
        assert_relative_eq!(b.value(&z), c * a.value(&z), max_relative = 1e-12);
        assert_eq!(b.feedback(&z), a.feedback(&z));
    }
}

#[test]
fn decrease_rate_is_scale_covariant() {
    // rho scales by c^{-kappa/2} = c^{1/12}
    let z = [0.3, -0.7, 1.1];
    let c: f64 = 4096.0;
    assert_relative_eq!(pair(c).rho(&z), pair(1.0).rho(&z) * c.powf(1.0 / 12.0), max_relative = 1e-9);
}
