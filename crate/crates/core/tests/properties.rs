use proptest::prelude::*;

use levinson_core::config::{parse_config, LmaxPolicy, RunConfig};
use levinson_core::potentials::{born_nu, PotentialSpec};
use levinson_core::radial::{distance_mod_pi, phase_shift_variable, reduce_mod_pi};
use levinson_core::smatrix::{ChannelIntegrals, GridSpec};
use levinson_core::spectrum::{count_bound_states, find_eigenvalues};

fn shape() -> impl Strategy<Value = (u8, f64, f64)> {
    (0u8..3, 0.5f64..20.0, 0.5f64..1.5)
}

fn build(kind: u8, v0: f64, range: f64) -> PotentialSpec {
    match kind {
        0 => PotentialSpec::square_well(v0, range),
        1 => PotentialSpec::gaussian(v0, range),
        _ => PotentialSpec::exponential(v0, range * 0.5),
    }
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_round_trips_through_toml(
        (kind, v0, range) in shape(),
        lambda_min in 1e-6f64..1e-2,
        decades in 1.0f64..6.0,
        points in 16usize..5000,
        fixed in proptest::option::of(0u32..50),
    ) {
        let mut cfg = RunConfig::with_potential(build(kind, v0, range));
        cfg.grid = GridSpec::new(lambda_min, lambda_min * 10f64.powf(decades), points).unwrap();
        if let Some(l) = fixed {
            cfg.lmax = LmaxPolicy::Fixed(l);
        }
        let text = cfg.to_toml();
        let back = parse_config(&text, None).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn born_nu_is_linear_in_depth((kind, v0, range) in shape(), factor in 0.1f64..10.0) {
        let a = born_nu(&build(kind, v0, range), 1e-10).unwrap();
        let b = born_nu(&build(kind, v0 * factor, range), 1e-10).unwrap();
        prop_assert!((b - factor * a).abs() <= 1e-9 * b.abs());
    }

    #[test]
    fn born_nu_scales_inversely((kind, v0, range) in shape(), s in 0.5f64..2.0) {
        let spec = build(kind, v0, range);
        let a = born_nu(&spec, 1e-10).unwrap();
        let b = born_nu(&spec.scaled(s).unwrap(), 1e-10).unwrap();
        prop_assert!((b - a / s).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn phase_grows_with_depth(
        (kind, v0, range) in shape(),
        extra in 0.1f64..5.0,
        ell in 0u32..4,
        log_lambda in -2.0f64..2.0,
    ) {
        let lambda = 10f64.powf(log_lambda);
        let shallow = phase_shift_variable(&build(kind, v0, range), ell, lambda).unwrap();
        let deep = phase_shift_variable(&build(kind, v0 + extra, range), ell, lambda).unwrap();
        prop_assert!(deep >= shallow - 1e-9, "{} < {}", deep, shallow);
    }

    #[test]
    fn phase_is_scale_covariant(
        (kind, v0, range) in shape(),
        s in 0.5f64..2.0,
        ell in 0u32..4,
        log_lambda in -1.0f64..2.0,
    ) {
        let spec = build(kind, v0, range);
        let lambda = 10f64.powf(log_lambda);
        let d = phase_shift_variable(&spec, ell, lambda).unwrap();
        let ds = phase_shift_variable(&spec.scaled(s).unwrap(), ell, lambda * s * s).unwrap();
        prop_assert!((d - ds).abs() < 1e-7, "{} vs {}", d, ds);
    }

    #[test]
    fn eigenvalue_count_matches_node_count((kind, v0, range) in shape(), ell in 0u32..3) {
        let spec = build(kind, v0, range);
        let count = count_bound_states(&spec, ell).unwrap().count;
        let eig = find_eigenvalues(&spec, ell, 1e-10).unwrap();
        prop_assert_eq!(eig.len(), count);
        prop_assert!(eig.windows(2).all(|w| w[0].energy < w[1].energy));
        prop_assert!(eig.iter().all(|e| e.energy < 0.0 && e.energy > spec.min_value()));
    }

    #[test]
    fn bound_counts_are_monotone((kind, v0, range) in shape(), extra in 0.0f64..10.0, ell in 0u32..3) {
        let a = count_bound_states(&build(kind, v0, range), ell).unwrap().count;
        let b = count_bound_states(&build(kind, v0 + extra, range), ell).unwrap().count;
        let c = count_bound_states(&build(kind, v0, range), ell + 1).unwrap().count;
        prop_assert!(b >= a);
        prop_assert!(c <= a);
    }
}

proptest! {
    #[test]
    fn antiderivatives_are_additive(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0) {
        let ab = ChannelIntegrals::between(a, b);
        let bc = ChannelIntegrals::between(b, c);
        let ac = ChannelIntegrals::between(a, c);
        prop_assert!((ab.classical + bc.classical - ac.classical).abs() < 1e-12);
        prop_assert!((ab.eq4_re + bc.eq4_re - ac.eq4_re).abs() < 1e-12);
        prop_assert!((ab.eq4_im + bc.eq4_im - ac.eq4_im).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_shift_by_pi_is_classical(a in -10.0f64..10.0) {
        let step = ChannelIntegrals::between(a, a + std::f64::consts::PI);
        prop_assert!((step.eq4_re + 2.0 * std::f64::consts::PI).abs() < 1e-12);
        prop_assert!(step.eq4_im.abs() < 1e-12);
        prop_assert!((step.classical + 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn reduction_mod_pi_is_idempotent(x in -100.0f64..100.0) {
        let r = reduce_mod_pi(x);
        prop_assert!(r > -std::f64::consts::FRAC_PI_2 && r <= std::f64::consts::FRAC_PI_2 + 1e-15);
        prop_assert!(distance_mod_pi(r, x) < 1e-12);
        prop_assert_eq!(reduce_mod_pi(r), r);
    }
}
