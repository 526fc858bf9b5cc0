//! Library results against independent brute-force computations.

use std::sync::Arc;

use gapstab_core::abelian::AbelianGroup;
use gapstab_core::algebra::{AlmostHom, TracialAlgebra, UnitaryRep};
use gapstab_core::codes::{all_binary_codes, predicted_kappa, DualPairing, LinearCode};
use gapstab_core::games::{
    classical_value, game_from_code, honest_strategy, magic_square_game, pauli_pvms, value_with,
    ValueMode,
};
use gapstab_core::group::FiniteGroup;
use gapstab_core::spectral::{kappa_abelian, kappa_general, ProbMeasure, DEFAULT_GROUP_CAP};
use gapstab_core::stability::{round, GhOptions};
use gapstab_core::Q;
use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `1/(1 - lambda_2)` of the symmetrized random-walk matrix on the Cayley
/// table, by dense eigendecomposition.
fn kappa_by_walk_matrix(g: &FiniteGroup, mu: &ProbMeasure) -> f64 {
    let n = g.order();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        for s in mu.support() {
            p[(g.mul(s, x), x)] += mu.weight_f64(s);
        }
    }
    let sym = (&p + p.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    1.0 / (1.0 - ev[1])
}

/// Minimum weight over all nonzero messages, over `F_2` only.
fn binary_distance(code: &LinearCode) -> usize {
    let rows = code.generator();
    let (n, k) = (rows.len(), code.length());
    (1usize..1 << n)
        .map(|m| {
            (0..k)
                .filter(|&i| {
                    (0..n)
                        .filter(|&j| m >> j & 1 == 1)
                        .map(|j| rows[j][i])
                        .sum::<u32>()
                        % 2
                        == 1
                })
                .count()
        })
        .min()
        .unwrap()
}

fn random_measure<R: Rng>(n: usize, rng: &mut R) -> ProbMeasure {
    let w: Vec<i64> = (0..n).map(|_| rng.random_range(0..6)).collect();
    let total: i64 = w.iter().sum::<i64>().max(1);
    let mut w: Vec<Q> = w.iter().map(|&x| Q::new(x, total)).collect();
    if w.iter().all(|x| *x == Q::new(0, 1)) {
        w[0] = Q::new(1, 1);
    }
    ProbMeasure::new(w).unwrap()
}

#[test]
fn abelian_gap_matches_walk_matrix_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for orders in [vec![2, 2, 2], vec![3, 4], vec![5], vec![2, 6]] {
        let a = AbelianGroup::new(&orders).unwrap();
        let g = a.to_finite_group();
        let mut checked = 0;
        for _ in 0..40 {
            let mu = random_measure(a.order(), &mut rng);
            let Ok(r) = kappa_abelian(&a, &mu) else {
                continue;
            };
            let oracle = kappa_by_walk_matrix(&g, &mu);
            assert!(
                (r.kappa - oracle).abs() <= 1e-8 * oracle.max(1.0),
                "{orders:?}: {} vs {oracle}",
                r.kappa
            );
            checked += 1;
        }
        assert!(checked > 10);
    }
}

#[test]
fn general_gap_matches_walk_matrix_spectrum_on_nonabelian_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for g in [
        FiniteGroup::symmetric(3),
        FiniteGroup::dihedral(4),
        FiniteGroup::symmetric(4),
    ] {
        for _ in 0..15 {
            let mu = random_measure(g.order(), &mut rng);
            let Ok(r) = kappa_general(&g, &mu, DEFAULT_GROUP_CAP) else {
                continue;
            };
            let oracle = kappa_by_walk_matrix(&g, &mu);
            assert!((r.kappa - oracle).abs() <= 1e-7 * oracle.max(1.0));
        }
    }
}

#[test]
fn code_distance_matches_message_enumeration() {
    for len in 2..=6 {
        for dim in 1..=3.min(len) {
            for mut c in all_binary_codes(len, dim) {
                assert_eq!(c.distance().unwrap(), binary_distance(&c));
            }
        }
    }
}

#[test]
fn code_measure_gap_equals_length_over_twice_distance() {
    for len in 2..=6 {
        for dim in 1..=3.min(len) {
            for mut c in all_binary_codes(len, dim) {
                let d = c.distance().unwrap();
                let m = c.measure(DualPairing::Coordinate).unwrap();
                let exact = kappa_abelian(&m.group, &m.measure)
                    .unwrap()
                    .kappa_exact
                    .unwrap();
                assert_eq!(exact, predicted_kappa(2, len, d));
                assert_eq!(exact, Q::new(len as i64, 2 * d as i64));
            }
        }
    }
}

#[test]
fn anchor_codes_have_the_stated_gaps() {
    let mut rep = LinearCode::repetition(3);
    let m = rep.measure(DualPairing::Coordinate).unwrap();
    assert_eq!(
        kappa_abelian(&m.group, &m.measure).unwrap().kappa_exact,
        Some(Q::new(1, 2))
    );
    let mut ham = LinearCode::hamming74();
    assert_eq!(ham.distance().unwrap(), 3);
    let m = ham.measure(DualPairing::Coordinate).unwrap();
    assert_eq!(
        kappa_abelian(&m.group, &m.measure).unwrap().kappa_exact,
        Some(Q::new(7, 6))
    );
    assert_eq!(m.predicted_kappa.to_f64().unwrap(), 7.0 / 6.0);
}

#[test]
fn magic_square_classical_value_is_seventeen_eighteenths() {
    let (v, _) = classical_value(&magic_square_game(), 1 << 22).unwrap();
    assert_eq!(v, Q::new(17, 18));
}

#[test]
fn pauli_projections_agree_with_basis_vector_formulas() {
    for n in 1..=3 {
        let (tx, tz) = pauli_pvms(n, 4096).unwrap();
        let d = 1usize << n;
        for a in 0..d {
            for x in 0..d {
                for y in 0..d {
                    let parity = (a & (x ^ y)).count_ones() % 2;
                    let expect_x = if parity == 0 { 1.0 } else { -1.0 } / d as f64;
                    assert!((tx.projections[a][(x, y)].re - expect_x).abs() < 1e-14);
                    let expect_z = if x == a && y == a { 1.0 } else { 0.0 };
                    assert!((tz.projections[a][(x, y)].re - expect_z).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn honest_code_games_win_by_both_value_formulas() {
    for (mut c, mut c2) in [
        (LinearCode::repetition(3), LinearCode::repetition(3)),
        (LinearCode::hamming74(), LinearCode::hamming74()),
    ] {
        let g = game_from_code(&mut c, &mut c2).unwrap();
        let s = honest_strategy(&g).unwrap();
        let a = value_with(&g, &s, ValueMode::Shortcut).unwrap();
        let b = value_with(&g, &s, ValueMode::Direct).unwrap();
        assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
    }
}

#[test]
fn exact_representations_round_to_themselves() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for g in [
        FiniteGroup::symmetric(3),
        FiniteGroup::cyclic(6),
        FiniteGroup::dihedral(4),
    ] {
        let g = Arc::new(g);
        let reg = UnitaryRep::regular(g.clone());
        let alg = TracialAlgebra::matrix(reg.dim());
        let u = alg.random_unitary(&mut rng);
        let values = reg.values.iter().map(|x| &u * x * u.adjoint()).collect();
        let phi = AlmostHom::new_unchecked(g, values);
        let cert = round(&alg, &phi, &GhOptions::default()).unwrap();
        assert!(cert.distance < 1e-10, "{}", cert.distance);
        assert!(cert.trace_excess.abs() < 1e-10);
    }
}
