//! Random inputs for the verification suites.

use gapstab_core::abelian::AbelianGroup;
use gapstab_core::algebra::{Pvm, TracialAlgebra};
use gapstab_core::codes::{random_code, DualPairing};
use gapstab_core::fourier::GroupFourier;
use gapstab_core::games::{
    commuting_strategy, honest_magic_square_strategy, SynchronousStrategy, PVM_TOL,
};
use gapstab_core::group::FiniteGroup;
use gapstab_core::linalg::{block_diag, expm_i_hermitian, kron, op_norm, random_unitary};
use gapstab_core::spectral::ProbMeasure;
use gapstab_core::{CMat, Result, C64, Q};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trial `t` of a run seeded with `seed` draws from its own ChaCha stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `10^x` with `x` uniform in `[lo, hi]`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..=hi))
}

/// Finite groups of order at most 24.
pub fn small_groups() -> Vec<FiniteGroup> {
    vec![
        FiniteGroup::cyclic(2),
        FiniteGroup::cyclic(5),
        FiniteGroup::cyclic(8),
        FiniteGroup::symmetric(3),
        FiniteGroup::dihedral(4),
        FiniteGroup::from_abelian(&AbelianGroup::elementary_two(3)),
        FiniteGroup::dihedral(6),
        FiniteGroup::direct_product(&FiniteGroup::cyclic(3), &FiniteGroup::symmetric(3)),
        FiniteGroup::symmetric(4),
    ]
}

/// A matrix algebra, or one with two unequal blocks, of total dimension
/// `dim`.
pub fn random_algebra<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> TracialAlgebra {
    if dim >= 3 && rng.random_bool(0.3) {
        let a = rng.random_range(1..dim);
        let wa = rng.random_range(0.2..0.8);
        TracialAlgebra::new(&[(a, wa), (dim - a, 1.0 - wa)]).expect("valid blocks")
    } else {
        TracialAlgebra::matrix(dim)
    }
}

/// Random representation: each block of the algebra carries a random sum
/// of irreducibles in a random basis.
pub fn random_rep<R: Rng + ?Sized>(
    f: &GroupFourier,
    alg: &TracialAlgebra,
    rng: &mut R,
) -> Vec<CMat> {
    let order = f.group().order();
    let n = alg.dim();
    let mut vals = vec![CMat::zeros(n, n); order];
    for coords in alg.block_coords() {
        let mut parts = Vec::new();
        let mut left = coords.len();
        while left > 0 {
            let choices: Vec<usize> = (0..f.irreps().len())
                .filter(|&s| f.irreps()[s].dim <= left)
                .collect();
            let s = choices[rng.random_range(0..choices.len())];
            parts.push(s);
            left -= f.irreps()[s].dim;
        }
        let u = random_unitary(rng, coords.len());
        for (x, val) in vals.iter_mut().enumerate() {
            let blocks: Vec<CMat> = parts
                .iter()
                .map(|&s| f.irreps()[s].values[x].clone())
                .collect();
            let m = &u * block_diag(&blocks) * u.adjoint();
            for (a, &i) in coords.iter().enumerate() {
                for (b, &j) in coords.iter().enumerate() {
                    val[(i, j)] = m[(a, b)];
                }
            }
        }
    }
    vals
}

/// Conjugates every value by an independent `exp(i theta H)`, `|H| = 1`.
pub fn perturb<R: Rng + ?Sized>(
    alg: &TracialAlgebra,
    vals: &[CMat],
    theta: f64,
    rng: &mut R,
) -> Vec<CMat> {
    vals.iter()
        .map(|u| {
            let h = alg.random_hermitian(rng);
            let h = &h / C64::new(op_norm(&h).max(1e-300), 0.0);
            let e = expm_i_hermitian(&h, theta);
            &e * u * e.adjoint()
        })
        .collect()
}

/// Random PVM on `(Z/2)^N` (or any abelian group) in a random basis of a
/// full matrix algebra: every basis vector gets a random character.
pub fn random_abelian_rep<R: Rng + ?Sized>(a: &AbelianGroup, dim: usize, rng: &mut R) -> Vec<CMat> {
    let w = random_unitary(rng, dim);
    let mut projections = vec![CMat::zeros(dim, dim); a.order()];
    for i in 0..dim {
        let chi = rng.random_range(0..a.order());
        let col = w.column(i);
        projections[chi] += col * col.adjoint();
    }
    a.values_from_pvm(&projections)
}

/// Measure on `(Z/2)^N` from a random binary code of dimension `N`.
pub fn code_measure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(ProbMeasure, usize, usize)> {
    let len = rng.random_range(n..=2 * n + 3);
    let mut code = random_code(2, len, n, 1, rng, 200)?;
    let d = code.distance()?;
    Ok((code.measure(DualPairing::Coordinate)?.measure, len, d))
}

pub fn uniform(n: usize) -> ProbMeasure {
    ProbMeasure::uniform(n)
}

/// Random measure whose support contains a generating set.
pub fn generating_measure<R: Rng + ?Sized>(g: &FiniteGroup, rng: &mut R) -> Result<ProbMeasure> {
    let n = g.order();
    let mut w = vec![0i64; n];
    for s in g.generating_set() {
        w[s] += rng.random_range(1..4);
    }
    for _ in 0..rng.random_range(0..4) {
        w[rng.random_range(0..n)] += rng.random_range(1..4);
    }
    let total: i64 = w.iter().sum();
    ProbMeasure::new(w.into_iter().map(|x| Q::new(x, total)).collect())
}

fn sign_diag<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}

/// Perfect commutation-game strategy of dimension `dim`: two commuting
/// involutions diagonal in a common random basis.
pub fn commuting_involutions<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
) -> Result<SynchronousStrategy> {
    let w = random_unitary(rng, dim);
    let diag = |s: Vec<f64>| {
        &w * CMat::from_diagonal(&gapstab_core::CVec::from_iterator(
            dim,
            s.into_iter().map(|x| C64::new(x, 0.0)),
        )) * w.adjoint()
    };
    let (o1, o2) = (diag(sign_diag(rng, dim)), diag(sign_diag(rng, dim)));
    commuting_strategy(&o1, &o2)
}

/// Mermin-Peres strategy tensored with `1_k` in a random basis.
pub fn magic_square_strategy<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
) -> Result<SynchronousStrategy> {
    let base = honest_magic_square_strategy()?;
    let dim = 4 * k;
    let w = random_unitary(rng, dim);
    let ik = CMat::identity(k, k);
    let pvms = base
        .pvms
        .iter()
        .map(|p| Pvm {
            projections: p
                .projections
                .iter()
                .map(|x| &w * kron(x, &ik) * w.adjoint())
                .collect(),
        })
        .collect();
    SynchronousStrategy::new(TracialAlgebra::matrix(dim), pvms, PVM_TOL)
}
