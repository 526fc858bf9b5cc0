//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::linalg::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMat, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(r: usize, k: usize) -> CMat {
    CMat::zeros(r, k)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Kronecker product with `a` as the outer factor.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Squared Frobenius norm.
pub fn frob_sq(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frob(x: &CMat) -> f64 {
    frob_sq(x).sqrt()
}

/// Operator (spectral) norm.
pub fn op_norm(x: &CMat) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    let s = x.clone().singular_values();
    s.iter().cloned().fold(0.0, f64::max)
}

/// Largest absolute entry of `x - y`.
pub fn max_abs_diff(x: &CMat, y: &CMat) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_part(x: &CMat) -> CMat {
    (x + x.adjoint()) * c(0.5, 0.0)
}

pub fn commutator(x: &CMat, y: &CMat) -> CMat {
    x * y - y * x
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let e = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &e.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eigh_real(h: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let sym = (h + h.transpose()) * 0.5;
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Columns of `m` selected by `idx`.
pub fn select_columns(m: &CMat, idx: &[usize]) -> CMat {
    let mut out = CMat::zeros(m.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        out.set_column(k, &m.column(i));
    }
    out
}

/// Principal submatrix on the index set `idx`.
pub fn principal(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, r: usize, k: usize) -> CMat {
    CMat::from_fn(r, k, |_, _| {
        c(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Random Hermitian matrix from the Gaussian unitary ensemble.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    hermitian_part(&random_gaussian(rng, n, n))
}

/// Haar-random unitary via QR with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = random_gaussian(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// `exp(i t H)` for Hermitian `H`.
pub fn expm_i_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, t * l);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// Unitary factor `U V*` of a full SVD of a square matrix.
pub fn unitary_polar_factor(x: &CMat) -> CMat {
    let n = x.nrows();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// Orthonormal basis of the complement of the column span of an isometry
/// `v` (columns orthonormal), inside coordinates `idx` of the ambient space.
pub fn complement_basis(v: &CMat, idx: &[usize]) -> CMat {
    let n = v.nrows();
    let sub = CMat::from_fn(idx.len(), v.ncols(), |i, j| v[(idx[i], j)]);
    let proj = &sub * sub.adjoint();
    let (vals, vecs) = eigh(&proj);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < 0.5).collect();
    let mut out = CMat::zeros(n, keep.len());
    for (k, &j) in keep.iter().enumerate() {
        for (a, &i) in idx.iter().enumerate() {
            out[(i, k)] = vecs[(a, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(&mut rng, 6);
        assert!(max_abs_diff(&(u.adjoint() * &u), &eye(6)) < 1e-12);
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(&mut rng, 5);
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            5,
            vals.iter().map(|&v| c(v, 0.0)),
        ));
        assert!(max_abs_diff(&(&vecs * d * vecs.adjoint()), &h) < 1e-10);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let h = CMat::zeros(3, 3);
        assert!(max_abs_diff(&expm_i_hermitian(&h, 1.0), &eye(3)) < 1e-15);
    }

    #[test]
    fn polar_factor_of_unitary_is_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 4);
        assert!(max_abs_diff(&unitary_polar_factor(&u), &u) < 1e-10);
    }
}
