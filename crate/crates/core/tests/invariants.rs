use proptest::prelude::*;

use dirac_gauss::angular::{gamma_coefficient, threejm_half, AngularSymmetry};
use dirac_gauss::basis::{even_tempered, kinetic_balance, large_function};
use dirac_gauss::config::parse_level_label;
use dirac_gauss::integrals::{overlap, pi_element, r_power_element, slater_rl, small_overlap};

fn kappa() -> impl Strategy<Value = i32> {
    prop_oneof![-5i32..=-1, 1i32..=4]
}

fn exponent() -> impl Strategy<Value = f64> {
    (-3.0f64..9.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn angular_bookkeeping(k in kappa(), extra in 0u32..4) {
        let s = AngularSymmetry::new(k).unwrap();
        prop_assert_eq!(s.degeneracy(), 2 * k.unsigned_abs());
        prop_assert_eq!(s.two_j() + 1, s.degeneracy());
        prop_assert_eq!(s.l_large() + s.l_small(), s.two_j());
        let n = s.l_large() + 1 + extra;
        prop_assert_eq!(parse_level_label(&s.label(n)).unwrap(), (n, s));
    }

    #[test]
    fn three_j_orthogonality(ka in kappa(), kb in kappa()) {
        let (a, b) = (AngularSymmetry::new(ka).unwrap(), AngularSymmetry::new(kb).unwrap());
        let lo = (a.two_j() as i32 - b.two_j() as i32).unsigned_abs() / 2;
        let hi = (a.two_j() + b.two_j()) / 2;
        let sum: f64 = (lo..=hi).map(|l| (2 * l + 1) as f64 * threejm_half(a.two_j(), l, b.two_j()).powi(2)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-14);
        for l in 0..=hi + 1 {
            prop_assert_eq!(gamma_coefficient(a, b, l), gamma_coefficient(b, a, l));
        }
        prop_assert!((gamma_coefficient(a, a, 0) - 1.0 / a.degeneracy() as f64).abs() < 1e-15);
    }

    #[test]
    fn primitives_are_normalized(k in kappa(), z in exponent()) {
        let s = AngularSymmetry::new(k).unwrap();
        prop_assert!((large_function(s, z).unwrap().norm_squared() - 1.0).abs() < 1e-12);
        prop_assert!((kinetic_balance(s, z).unwrap().norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn even_tempered_is_geometric(alpha in 1e-3f64..10.0, beta in 1.2f64..4.0, n in 1usize..40) {
        let e = even_tempered(alpha, beta, n).unwrap();
        prop_assert_eq!(e.len(), n);
        for w in e.windows(2) {
            prop_assert!((w[1] / w[0] / beta - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_electron_symmetry(k in kappa(), za in exponent(), zb in exponent(), p in -1i32..=2) {
        let s = AngularSymmetry::new(k).unwrap();
        let (f, g) = (large_function(s, za).unwrap(), large_function(s, zb).unwrap());
        prop_assert_eq!(overlap(&f, &g), overlap(&g, &f));
        prop_assert_eq!(r_power_element(&f, &g, p), r_power_element(&g, &f, p));
        // Cauchy-Schwarz for normalized functions.
        prop_assert!(overlap(&f, &g).abs() <= 1.0 + 1e-14);
        prop_assert!(small_overlap(s, za, zb).abs() <= 1.0 + 1e-14);
        prop_assert_eq!(small_overlap(s, za, zb), small_overlap(s, zb, za));
    }

    #[test]
    fn pi_matches_expanded_form(k in kappa(), zs in exponent(), ratio in -2.0f64..2.0) {
        let s = AngularSymmetry::new(k).unwrap();
        let zl = zs * 10f64.powf(ratio);
        let expanded = overlap(&kinetic_balance(s, zs).unwrap(), &large_function(s, zl).unwrap().apply_dkappa(k));
        let pi = pi_element(s, zs, zl);
        prop_assert!(pi > 0.0);
        prop_assert!((pi - expanded).abs() < 1e-9 * pi, "{} vs {}", pi, expanded);
    }

    #[test]
    fn slater_integrals_have_eightfold_symmetry(
        ks in proptest::array::uniform4(kappa()),
        zs in proptest::array::uniform4(-1.0f64..4.0),
        l in 0u32..3,
    ) {
        let f: Vec<_> = ks
            .iter()
            .zip(zs)
            .map(|(&k, z)| large_function(AngularSymmetry::new(k).unwrap(), 10f64.powf(z)).unwrap())
            .collect();
        // Densities r^{l_a+l_c+2} carry multipoles up to l_a + l_c + 1.
        let ls: Vec<u32> = ks.iter().map(|&k| AngularSymmetry::new(k).unwrap().l_large()).collect();
        let l = l.min(ls[0] + ls[2] + 1).min(ls[1] + ls[3] + 1);
        let v = slater_rl(l, &f[0], &f[1], &f[2], &f[3]).unwrap();
        prop_assert!(v > 0.0);
        for (a, b, c, d) in [(2, 1, 0, 3), (0, 3, 2, 1), (2, 3, 0, 1), (1, 0, 3, 2), (3, 0, 1, 2), (1, 2, 3, 0), (3, 2, 1, 0)] {
            prop_assert_eq!(slater_rl(l, &f[a], &f[b], &f[c], &f[d]).unwrap(), v);
        }
    }
}
