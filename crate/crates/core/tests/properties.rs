use std::sync::Arc;

use gapstab_core::abelian::AbelianGroup;
use gapstab_core::algebra::{defect, AlmostHom, TracialAlgebra, UnitaryRep};
use gapstab_core::games::{
    anticommutation_bound_check, commutation_bound_check, commuting_strategy,
    honest_magic_square_strategy, line_answer, magic_square_game, pauli_pvms, perturb_strategy,
    representation_closeness_identity, symmetrize, value, LINE_DEFECT,
};
use gapstab_core::group::FiniteGroup;
use gapstab_core::io::{format_rational, parse_rational};
use gapstab_core::linalg::{expm_i_hermitian, kron, max_abs_diff};
use gapstab_core::stability::{modulations, round, translations, GhOptions};
use gapstab_core::{CMat, C64, Q};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn two_qubit_commuting() -> gapstab_core::games::SynchronousStrategy {
    let z = CMat::from_fn(2, 2, |i, j| {
        C64::new(
            if i != j {
                0.0
            } else if i == 0 {
                1.0
            } else {
                -1.0
            },
            0.0,
        )
    });
    let i2 = CMat::identity(2, 2);
    commuting_strategy(&kron(&z, &i2), &kron(&i2, &z)).unwrap()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn rationals_survive_formatting(n in -1000i64..1000, d in 1i64..1000) {
        let q = Q::new(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
    }

    #[test]
    fn line_answers_multiply_to_alpha(neg in any::<bool>(), k in 0usize..4) {
        let alpha = if neg { -1i8 } else { 1 };
        let t = line_answer(alpha, k);
        prop_assert_eq!(t[0] * t[1] * t[2], alpha);
    }

    #[test]
    fn weyl_relation_holds_on_random_pairs(n in 1usize..=4, a in 0usize..16, chi in 0usize..16) {
        let g = AbelianGroup::elementary_two(n);
        let (a, chi) = (a % g.order(), chi % g.order());
        let lam = translations(&g);
        let md = modulations(&g);
        let s = g.pairing_idx(chi, a);
        prop_assert!(max_abs_diff(&(&md[chi] * &lam[a]), &(&lam[a] * &md[chi] * s)) < 1e-12);
        let (tx, tz) = pauli_pvms(n, 4096).unwrap();
        prop_assert!(tx.residual() < 1e-12 && tz.residual() < 1e-12);
    }

    #[test]
    fn projection_and_unitary_forms_invert_each_other(n in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = AbelianGroup::elementary_two(n);
        let alg = TracialAlgebra::matrix(g.order());
        let u = alg.random_unitary(&mut rng);
        let vals: Vec<CMat> = translations(&g).iter().map(|m| &u * m * u.adjoint()).collect();
        let pvm = g.pvm_from_values(&vals);
        prop_assert!(pvm.residual() < 1e-10);
        let back = g.values_from_pvm(&pvm.projections);
        for (x, y) in vals.iter().zip(&back) {
            prop_assert!(max_abs_diff(x, y) < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn representation_closeness_equals_projection_closeness(seed in any::<u64>(), theta in 0.0f64..0.5, shrink in 0.5f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = AbelianGroup::elementary_two(2);
        let alg = TracialAlgebra::matrix(4);
        let lam = translations(&g);
        let e = expm_i_hermitian(&alg.random_hermitian(&mut rng), theta);
        let v: Vec<CMat> = lam.iter().map(|m| &e * m * e.adjoint()).collect();
        let w = alg.random_unitary(&mut rng) * C64::new(shrink, 0.0);
        let (l, r) = representation_closeness_identity(&alg, &g, &lam, &v, &w).unwrap();
        prop_assert!((l - r).abs() < 1e-10 * l.max(1.0));
    }

    #[test]
    fn symmetrization_keeps_values(seed in any::<u64>(), sigma in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = perturb_strategy(&honest_magic_square_strategy().unwrap(), sigma, &mut rng);
        let g = magic_square_game();
        prop_assert!((value(&g, &s).unwrap() - value(&symmetrize(&g), &s).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn commutation_game_commutators_stay_below_sixteen_and_sixty_four_eps(seed in any::<u64>(), sigma in 0.0f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = perturb_strategy(&two_qubit_commuting(), sigma, &mut rng);
        let b = commutation_bound_check(&s).unwrap();
        prop_assert!(b.holds(1e-12), "{:?}", b);
    }

    #[test]
    fn magic_square_anticommutator_stays_below_432_eps(seed in any::<u64>(), sigma in 0.0f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = perturb_strategy(&honest_magic_square_strategy().unwrap(), sigma, &mut rng);
        let b = anticommutation_bound_check(&s).unwrap();
        prop_assert!(b.holds(1e-12), "{:?}", b);
        prop_assert!((b.eta_sum - LINE_DEFECT * b.eps).abs() < 1e-10);
    }

    #[test]
    fn rounding_distance_within_169_eps(seed in any::<u64>(), which in 0usize..3, theta in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Arc::new([FiniteGroup::symmetric(3), FiniteGroup::cyclic(4), FiniteGroup::dihedral(4)][which].clone());
        let reg = UnitaryRep::regular(g.clone());
        let alg = TracialAlgebra::matrix(reg.dim());
        let values = reg
            .values
            .iter()
            .map(|x| {
                let e = expm_i_hermitian(&alg.random_hermitian(&mut rng), theta);
                &e * x * e.adjoint()
            })
            .collect();
        let phi = AlmostHom::new_unchecked(g, values);
        let eps = defect(&alg, &phi, None);
        let cert = round(&alg, &phi, &GhOptions::default()).unwrap();
        prop_assert!((cert.input_defect - eps).abs() < 1e-12);
        prop_assert!(cert.holds(1e-12), "distance {} eps {}", cert.distance, eps);
    }
}
