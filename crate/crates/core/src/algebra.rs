//! Finite tracial matrix algebras.
//!
//! An algebra is a direct sum of full matrix blocks. It is stored per
//! coordinate: coordinate `i` belongs to block `labels[i]`, and the trace is
//! `tau(x) = sum_i density[labels[i]] x_ii`. Elements are plain dense
//! matrices whose entries vanish between coordinates of different blocks.
//! This layout covers amplifications `M (x) M_k` and corners without
//! renumbering.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{eigh, frob, frob_sq, random_gaussian, unitary_polar_factor};
use crate::spectral::{kappa_general, ProbMeasure, DEFAULT_GROUP_CAP};
use crate::{CMat, C64};

/// Default tolerance for projection and homomorphism validation.
pub const TOL: f64 = 1e-9;
/// Singular values below this are treated as zero in polar decompositions.
pub const KERNEL_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracialAlgebra {
    labels: Vec<usize>,
    density: Vec<f64>,
}

impl TracialAlgebra {
    /// Direct sum of blocks `M_{n_i}` with trace `sum_i lambda_i tr_{n_i}`.
    pub fn new(blocks: &[(usize, f64)]) -> Result<Self> {
        if blocks.is_empty() {
            return invalid("an algebra needs at least one block");
        }
        if blocks.iter().any(|&(n, w)| n == 0 || !(w > 0.0)) {
            return invalid("blocks need positive dimension and weight");
        }
        let total: f64 = blocks.iter().map(|b| b.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("block weights sum to {total}, not 1"));
        }
        let mut labels = Vec::new();
        for (l, &(n, _)) in blocks.iter().enumerate() {
            labels.extend(std::iter::repeat_n(l, n));
        }
        let density = blocks.iter().map(|&(n, w)| w / n as f64).collect();
        Ok(TracialAlgebra { labels, density })
    }

    /// `M_n` with the normalized trace.
    pub fn matrix(n: usize) -> Self {
        TracialAlgebra {
            labels: vec![0; n],
            density: vec![1.0 / n as f64],
        }
    }

    /// Arbitrary per-coordinate layout; `density[l]` is the trace weight of a
    /// diagonal matrix unit in block `l`.
    pub fn from_parts(labels: Vec<usize>, density: Vec<f64>) -> Result<Self> {
        if labels.iter().any(|&l| l >= density.len()) {
            return invalid("label out of range");
        }
        if density.iter().any(|&d| !(d > 0.0)) {
            return invalid("densities must be positive");
        }
        Ok(TracialAlgebra { labels, density })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn num_blocks(&self) -> usize {
        self.density.len()
    }

    pub fn coord_density(&self, i: usize) -> f64 {
        self.density[self.labels[i]]
    }

    /// Coordinates of each block.
    pub fn block_coords(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.density.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn trace(&self, x: &CMat) -> C64 {
        (0..self.dim())
            .map(|i| x[(i, i)] * self.coord_density(i))
            .sum()
    }

    /// `tau(1)`; equals 1 for the algebras built by [`TracialAlgebra::new`].
    pub fn total_trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.coord_density(i)).sum()
    }

    /// `tau(x* y)`.
    pub fn inner(&self, x: &CMat, y: &CMat) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            let d = self.coord_density(i);
            let mut col = C64::new(0.0, 0.0);
            for j in 0..self.dim() {
                col += x[(j, i)].conj() * y[(j, i)];
            }
            s += col * d;
        }
        s
    }

    /// `|x|_2^2 = tau(x* x)`.
    pub fn norm2_sq(&self, x: &CMat) -> f64 {
        let mut s = 0.0;
        for (i, col) in x.column_iter().enumerate() {
            s += self.coord_density(i) * col.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        s
    }

    pub fn norm2(&self, x: &CMat) -> f64 {
        self.norm2_sq(x).sqrt()
    }

    /// `tau(|x|)`.
    pub fn norm1(&self, x: &CMat) -> f64 {
        let (vals, vecs) = eigh(&(x.adjoint() * x));
        let mut s = 0.0;
        for (k, &v) in vals.iter().enumerate() {
            let r = v.max(0.0).sqrt();
            for i in 0..self.dim() {
                s += r * vecs[(i, k)].norm_sqr() * self.coord_density(i);
            }
        }
        s
    }

    pub fn norm_inf(&self, x: &CMat) -> f64 {
        crate::linalg::op_norm(x)
    }

    /// Largest entry connecting coordinates of different blocks.
    pub fn off_block_residual(&self, x: &CMat) -> f64 {
        let mut r: f64 = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                if self.labels[i] != self.labels[j] {
                    r = r.max(x[(i, j)].norm());
                }
            }
        }
        r
    }

    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        x.nrows() == self.dim() && x.ncols() == self.dim() && self.off_block_residual(x) <= tol
    }

    /// Zeroes the entries between different blocks.
    pub fn project(&self, x: &CMat) -> CMat {
        CMat::from_fn(self.dim(), self.dim(), |i, j| {
            if self.labels[i] == self.labels[j] {
                x[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.dim(), self.dim())
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        self.project(&random_gaussian(rng, self.dim(), self.dim()))
    }

    pub fn random_hermitian<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        crate::linalg::hermitian_part(&self.random_element(rng))
    }

    /// Haar unitary in each block.
    pub fn random_unitary<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        let mut u = CMat::zeros(self.dim(), self.dim());
        for coords in self.block_coords() {
            let b = crate::linalg::random_unitary(rng, coords.len());
            for (a, &i) in coords.iter().enumerate() {
                for (c, &j) in coords.iter().enumerate() {
                    u[(i, j)] = b[(a, c)];
                }
            }
        }
        u
    }

    /// `M (x) M_k` with the amplification index outer: coordinate `(a, i)`
    /// sits at `a * dim + i`. The trace is `tau (x) Tr`, so the image of
    /// `1_M` under [`TracialAlgebra::embed`] keeps trace `tau(1)`.
    pub fn amplify(&self, k: usize, dim_cap: usize) -> Result<TracialAlgebra> {
        if k == 0 {
            return invalid("amplification factor must be at least 1");
        }
        if self.dim() * k > dim_cap {
            return Err(Error::ResourceCap(format!(
                "amplified dimension {} exceeds {dim_cap}",
                self.dim() * k
            )));
        }
        let mut labels = Vec::with_capacity(self.dim() * k);
        for _ in 0..k {
            labels.extend_from_slice(&self.labels);
        }
        Ok(TracialAlgebra {
            labels,
            density: self.density.clone(),
        })
    }

    /// `x (x) e_11` inside the `k`-fold amplification.
    pub fn embed(&self, x: &CMat, k: usize) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n * k, n * k);
        out.view_mut((0, 0), (n, n)).copy_from(x);
        out
    }

    /// The corner algebra on the given coordinates.
    pub fn corner(&self, coords: &[usize]) -> TracialAlgebra {
        TracialAlgebra {
            labels: coords.iter().map(|&i| self.labels[i]).collect(),
            density: self.density.clone(),
        }
    }
}

/// Projection-valued measure: self-adjoint idempotents summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Pvm {
    pub projections: Vec<CMat>,
}

impl Pvm {
    pub fn new(projections: Vec<CMat>, tol: f64) -> Result<Self> {
        let p = Pvm { projections };
        p.validate(tol)?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projections.first().map_or(0, |p| p.nrows())
    }

    /// Largest Frobenius residual among `P* - P`, `P^2 - P` and `sum P - 1`.
    pub fn residual(&self) -> f64 {
        let n = self.dim();
        let mut sum = CMat::zeros(n, n);
        let mut r: f64 = 0.0;
        for p in &self.projections {
            if p.nrows() != n || p.ncols() != n {
                return f64::INFINITY;
            }
            r = r.max(frob(&(p.adjoint() - p)));
            r = r.max(frob(&(p * p - p)));
            sum += p;
        }
        r.max(frob(&(sum - CMat::identity(n, n))))
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.projections.is_empty() {
            return invalid("empty PVM");
        }
        let residual = self.residual();
        if residual > tol {
            return Err(Error::InvalidPvm { residual });
        }
        Ok(())
    }

    /// `u P u*` for each projection.
    pub fn conjugate(&self, u: &CMat) -> Pvm {
        let ua = u.adjoint();
        Pvm {
            projections: self.projections.iter().map(|p| u * p * &ua).collect(),
        }
    }

    /// Observable `sum_a s(a) P_a` for real answer labels `s`.
    pub fn observable(&self, signs: &[f64]) -> CMat {
        let mut o = CMat::zeros(self.dim(), self.dim());
        for (p, &s) in self.projections.iter().zip(signs) {
            o += p * C64::new(s, 0.0);
        }
        o
    }

    /// Spectral projections of a Hermitian matrix with the prescribed
    /// eigenvalues, one projection per entry of `values`.
    pub fn from_observable(o: &CMat, values: &[f64], tol: f64) -> Result<Pvm> {
        let (vals, vecs) = eigh(o);
        let n = o.nrows();
        let mut projections = vec![CMat::zeros(n, n); values.len()];
        for (k, &v) in vals.iter().enumerate() {
            let Some(slot) = values.iter().position(|&t| (t - v).abs() < 1e-6) else {
                return Err(Error::InvalidPvm {
                    residual: values
                        .iter()
                        .map(|t| (t - v).abs())
                        .fold(f64::INFINITY, f64::min),
                });
            };
            let col = vecs.column(k);
            projections[slot] += col * col.adjoint();
        }
        Pvm::new(projections, tol)
    }
}

/// A map from a finite group into unitaries, with no multiplicativity
/// requirement.
#[derive(Clone, Debug)]
pub struct AlmostHom {
    pub group: Arc<FiniteGroup>,
    pub values: Vec<CMat>,
}

/// A unitary representation of a finite group.
#[derive(Clone, Debug)]
pub struct UnitaryRep {
    pub group: Arc<FiniteGroup>,
    pub values: Vec<CMat>,
}

fn unitarity_residual(values: &[CMat]) -> f64 {
    values
        .iter()
        .map(|u| frob(&(u.adjoint() * u - CMat::identity(u.nrows(), u.ncols()))))
        .fold(0.0, f64::max)
}

fn check_shape(group: &FiniteGroup, values: &[CMat]) -> Result<usize> {
    if values.len() != group.order() {
        return invalid(format!(
            "expected {} values, got {}",
            group.order(),
            values.len()
        ));
    }
    let n = values[0].nrows();
    if values.iter().any(|u| u.nrows() != n || u.ncols() != n) {
        return invalid("values must be square matrices of one size");
    }
    Ok(n)
}

impl AlmostHom {
    pub fn new(group: Arc<FiniteGroup>, values: Vec<CMat>, tol: f64) -> Result<Self> {
        check_shape(&group, &values)?;
        let residual = unitarity_residual(&values);
        if residual > tol {
            return Err(Error::InvalidRepresentation { residual });
        }
        Ok(AlmostHom { group, values })
    }

    pub fn new_unchecked(group: Arc<FiniteGroup>, values: Vec<CMat>) -> Self {
        AlmostHom { group, values }
    }

    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn from_rep(rep: &UnitaryRep) -> Self {
        AlmostHom {
            group: rep.group.clone(),
            values: rep.values.clone(),
        }
    }
}

impl UnitaryRep {
    /// Validates unitarity, `U(e) = 1` and `U(g s) = U(g) U(s)` over a
    /// generating set.
    pub fn new(group: Arc<FiniteGroup>, values: Vec<CMat>, tol: f64) -> Result<Self> {
        check_shape(&group, &values)?;
        let residual = homomorphism_residual(&group, &values);
        if residual > tol {
            return Err(Error::InvalidRepresentation { residual });
        }
        Ok(UnitaryRep { group, values })
    }

    pub fn new_unchecked(group: Arc<FiniteGroup>, values: Vec<CMat>) -> Self {
        UnitaryRep { group, values }
    }

    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    /// The trivial representation on `C^n`.
    pub fn trivial(group: Arc<FiniteGroup>, n: usize) -> Self {
        let values = vec![CMat::identity(n, n); group.order()];
        UnitaryRep { group, values }
    }

    /// Left regular representation, `lambda(g) delta_h = delta_{gh}`.
    pub fn regular(group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        let values = (0..n)
            .map(|g| {
                let mut m = CMat::zeros(n, n);
                for h in 0..n {
                    m[(group.mul(g, h), h)] = C64::new(1.0, 0.0);
                }
                m
            })
            .collect();
        UnitaryRep { group, values }
    }
}

/// Largest Frobenius residual of unitarity, `U(e) = 1` and
/// `U(g s) = U(g) U(s)` for `s` in a generating set.
pub fn homomorphism_residual(group: &FiniteGroup, values: &[CMat]) -> f64 {
    let n = values[0].nrows();
    let mut r = unitarity_residual(values).max(frob(&(&values[0] - CMat::identity(n, n))));
    for s in group.generating_set() {
        for g in 0..group.order() {
            r = r.max(frob(&(&values[group.mul(g, s)] - &values[g] * &values[s])));
        }
    }
    r
}

/// `E_{g,h} |phi(gh) - phi(g) phi(h)|_2^2`, or the same double integral
/// against `mu (x) mu`.
pub fn defect(alg: &TracialAlgebra, phi: &AlmostHom, mu: Option<&ProbMeasure>) -> f64 {
    let g = &phi.group;
    let weighted: Vec<(usize, f64)> = match mu {
        Some(m) => m
            .support()
            .into_iter()
            .map(|x| (x, m.weight_f64(x)))
            .collect(),
        None => (0..g.order())
            .map(|x| (x, 1.0 / g.order() as f64))
            .collect(),
    };
    let mut s = 0.0;
    for &(x, wx) in &weighted {
        for &(y, wy) in &weighted {
            let d = &phi.values[g.mul(x, y)] - &phi.values[x] * &phi.values[y];
            s += wx * wy * alg.norm2_sq(&d);
        }
    }
    s
}

/// `E_N(V) = E_g U(g) V U(g)*`, the trace-preserving conditional
/// expectation onto the commutant of the representation.
pub fn conditional_expectation(rep: &UnitaryRep, v: &CMat) -> CMat {
    let mut acc = CMat::zeros(v.nrows(), v.ncols());
    for u in &rep.values {
        acc += u * v * u.adjoint();
    }
    acc / C64::new(rep.values.len() as f64, 0.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorGap {
    /// `|V - E_N(V)|_2^2`.
    pub residual: f64,
    /// `(kappa/2) int |[U(g),V]|_2^2 dmu`.
    pub poincare_bound: f64,
    /// `E_g |[U(g),V]|_2^2`.
    pub group_average: f64,
    /// `kappa int |[U(g),V]|_2^2 dmu`.
    pub average_bound: f64,
    pub kappa: f64,
}

/// Both commutator inequalities for a representation and a measure with
/// generating support.
pub fn commutator_gap_check(
    alg: &TracialAlgebra,
    rep: &UnitaryRep,
    mu: &ProbMeasure,
    v: &CMat,
) -> Result<CommutatorGap> {
    let kappa = kappa_general(&rep.group, mu, DEFAULT_GROUP_CAP)?.kappa;
    let comm = |u: &CMat| alg.norm2_sq(&(u * v - v * u));
    let measure_int: f64 = mu
        .support()
        .into_iter()
        .map(|g| mu.weight_f64(g) * comm(&rep.values[g]))
        .sum();
    let group_average = rep.values.iter().map(comm).sum::<f64>() / rep.values.len() as f64;
    let residual = alg.norm2_sq(&(v - conditional_expectation(rep, v)));
    Ok(CommutatorGap {
        residual,
        poincare_bound: kappa / 2.0 * measure_int,
        group_average,
        average_bound: kappa * measure_int,
        kappa,
    })
}

/// Polar decomposition `x = w |x|` with `w` the partial isometry whose
/// initial space is the range of `|x|`.
pub fn polar(x: &CMat) -> (CMat, CMat) {
    let (r, c) = x.shape();
    if r == 0 || c == 0 {
        return (CMat::zeros(r, c), CMat::zeros(c, c));
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut w = CMat::zeros(r, c);
    let mut absx = CMat::zeros(c, c);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s < KERNEL_THRESHOLD {
            continue;
        }
        let uk = u.column(k);
        let vk = vt.row(k);
        w += uk * vk;
        absx += vk.adjoint() * vk * C64::new(s, 0.0);
    }
    (w, absx)
}

/// One central summand of the commutant: `M_mult (x) 1_irrep_dim`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutantBlock {
    pub mult: usize,
    pub irrep_dim: usize,
    /// Block of the ambient algebra containing this summand.
    pub label: usize,
    /// First column of the summand in the adapted basis.
    pub offset: usize,
}

/// Unitary change of basis exhibiting `N = M cap U(G)'` as a direct sum of
/// `M_m (x) 1_d`. Column `offset + r d + s` of `basis` is the `s`-th vector
/// of copy `r`; in this basis `U(g) = sum 1_m (x) rho_j(g)`.
#[derive(Clone, Debug)]
pub struct CommutantBlocks {
    pub basis: CMat,
    pub blocks: Vec<CommutantBlock>,
    /// `rho_j` for each summand, indexed `[j][g]`.
    pub irreps: Vec<Vec<CMat>>,
}

impl CommutantBlocks {
    pub fn dim_commutant(&self) -> usize {
        self.blocks.iter().map(|b| b.mult * b.mult).sum()
    }

    /// Compressions `A_j` of an element `S* x S` of the commutant, read off
    /// by averaging over the irreducible index.
    pub fn compress(&self, x: &CMat) -> Vec<CMat> {
        let y = self.basis.adjoint() * x * &self.basis;
        self.blocks
            .iter()
            .map(|b| {
                let d = b.irrep_dim;
                CMat::from_fn(b.mult, b.mult, |r, rr| {
                    let mut s = C64::new(0.0, 0.0);
                    for t in 0..d {
                        s += y[(b.offset + r * d + t, b.offset + rr * d + t)];
                    }
                    s / C64::new(d as f64, 0.0)
                })
            })
            .collect()
    }

    /// Inverse of [`CommutantBlocks::compress`].
    pub fn expand(&self, parts: &[CMat]) -> CMat {
        let n = self.basis.nrows();
        let mut y = CMat::zeros(n, n);
        for (b, a) in self.blocks.iter().zip(parts) {
            let d = b.irrep_dim;
            for r in 0..b.mult {
                for rr in 0..b.mult {
                    for t in 0..d {
                        y[(b.offset + r * d + t, b.offset + rr * d + t)] = a[(r, rr)];
                    }
                }
            }
        }
        &self.basis * y * self.basis.adjoint()
    }

    /// Frobenius distance from `S* x S` to its block-scalar part.
    pub fn block_residual(&self, x: &CMat) -> f64 {
        frob(&(x - self.expand(&self.compress(x))))
    }
}

/// `E_g sum_l |Tr U(g)|_l|^2`, the dimension of the commutant inside `M`.
pub fn commutant_dimension(alg: &TracialAlgebra, rep: &UnitaryRep) -> f64 {
    let coords = alg.block_coords();
    let mut s = 0.0;
    for u in &rep.values {
        for c in &coords {
            let tr: C64 = c.iter().map(|&i| u[(i, i)]).sum();
            s += tr.norm_sqr();
        }
    }
    s / rep.values.len() as f64
}

/// Central decomposition of the commutant of `rep` inside `alg`, found from
/// the eigenspaces of a generic self-adjoint element of the commutant.
pub fn commutant_blocks<R: Rng + ?Sized>(
    alg: &TracialAlgebra,
    rep: &UnitaryRep,
    rng: &mut R,
    max_tries: usize,
) -> Result<CommutantBlocks> {
    for _ in 0..max_tries.max(1) {
        if let Some(cb) = try_commutant_blocks(alg, rep, rng) {
            return Ok(cb);
        }
    }
    Err(Error::Degenerate(max_tries))
}

fn try_commutant_blocks<R: Rng + ?Sized>(
    alg: &TracialAlgebra,
    rep: &UnitaryRep,
    rng: &mut R,
) -> Option<CommutantBlocks> {
    let n = alg.dim();
    let h = conditional_expectation(rep, &alg.random_hermitian(rng));
    let y = conditional_expectation(rep, &alg.random_element(rng));
    let (vals, vecs) = eigh(&h);
    let scale = vals.iter().map(|v| v.abs()).fold(1e-300, f64::max);
    let tol = 1e-7 * scale;
    let mut spaces: Vec<Vec<usize>> = Vec::new();
    for k in 0..n {
        match spaces.last_mut() {
            Some(s) if (vals[k] - vals[*s.last().unwrap()]).abs() < tol => s.push(k),
            _ => spaces.push(vec![k]),
        }
    }
    // A gap of a few tolerances means two eigenvalues nearly collided.
    for w in spaces.windows(2) {
        if vals[w[1][0]] - vals[*w[0].last().unwrap()] < 1e3 * tol {
            return None;
        }
    }
    let e: Vec<CMat> = spaces
        .iter()
        .map(|s| crate::linalg::select_columns(&vecs, s))
        .collect();
    let m = e.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let ynorm = frob(&y).max(1e-300);
    for a in 0..m {
        for b in (a + 1)..m {
            let c = e[a].adjoint() * &y * &e[b];
            if frob(&c) > 1e-6 * ynorm {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; m];
    for a in 0..m {
        let r = find(&mut parent, a);
        match root_of[r] {
            Some(gi) => groups[gi].push(a),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![a]);
            }
        }
    }
    let mut basis = CMat::zeros(n, n);
    let mut blocks = Vec::new();
    let mut irreps = Vec::new();
    let mut offset = 0;
    for grp in &groups {
        let d = e[grp[0]].ncols();
        if grp.iter().any(|&a| e[a].ncols() != d) {
            return None;
        }
        let first = &e[grp[0]];
        let mut aligned = vec![first.clone()];
        for &a in &grp[1..] {
            // E_a* Y E_1 intertwines the copies; it is a multiple of a unitary.
            let c = e[a].adjoint() * &y * first;
            let sv = c.clone().singular_values();
            let (lo, hi) = sv
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
            if hi < 1e-8 * ynorm || hi - lo > 1e-6 * hi {
                return None;
            }
            aligned.push(&e[a] * unitary_polar_factor(&c));
        }
        let label = alg.labels()
            [(0..n).max_by(|&i, &j| first[(i, 0)].norm().total_cmp(&first[(j, 0)].norm()))?];
        for (r, ea) in aligned.iter().enumerate() {
            for s in 0..d {
                basis.set_column(offset + r * d + s, &ea.column(s));
            }
        }
        let rho: Vec<CMat> = rep
            .values
            .iter()
            .map(|u| first.adjoint() * u * first)
            .collect();
        irreps.push(rho);
        blocks.push(CommutantBlock {
            mult: grp.len(),
            irrep_dim: d,
            label,
            offset,
        });
        offset += grp.len() * d;
    }
    let cb = CommutantBlocks {
        basis,
        blocks,
        irreps,
    };
    let z = conditional_expectation(rep, &alg.random_element(rng));
    if cb.block_residual(&z) > 1e-8 * frob(&z).max(1.0) {
        return None;
    }
    if (cb.dim_commutant() as f64 - commutant_dimension(alg, rep)).abs() > 1e-6 {
        return None;
    }
    for (b, rho) in cb.blocks.iter().zip(&cb.irreps) {
        let sb = cb
            .basis
            .columns(b.offset, b.mult * b.irrep_dim)
            .into_owned();
        for (u, r) in rep.values.iter().zip(rho) {
            let lhs = sb.adjoint() * u * &sb;
            let rhs = CMat::identity(b.mult, b.mult).kronecker(r);
            if frob(&(lhs - rhs)) > 1e-8 {
                return None;
            }
        }
    }
    Some(cb)
}

/// Unitary of the commutant nearest to `E_N(V)`: the unitary factor of
/// `E_N(V)`, completed on kernels inside each summand of the commutant.
pub fn nearest_unitary_in_commutant(rep: &UnitaryRep, blocks: &CommutantBlocks, v: &CMat) -> CMat {
    let x = conditional_expectation(rep, v);
    let parts: Vec<CMat> = blocks
        .compress(&x)
        .iter()
        .map(unitary_polar_factor)
        .collect();
    blocks.expand(&parts)
}

/// `(|xi - E_N xi|_2, tau(xi eta))` at the maximizer
/// `eta = (xi - E_N xi)* / |xi - E_N xi|_2`, together with
/// `max |tau(eta n)|` over the supplied spanning set of `N`.
pub fn norm_conditional_duality_check(
    alg: &TracialAlgebra,
    rep: &UnitaryRep,
    xi: &CMat,
    spanning: &[CMat],
) -> (f64, f64, f64) {
    let y = xi - conditional_expectation(rep, xi);
    let lhs = alg.norm2(&y);
    // At roundoff level the maximizer is undefined and the supremum is 0.
    if lhs <= 1e-12 * alg.norm2(xi).max(1.0) {
        return (lhs, 0.0, 0.0);
    }
    let eta = y.adjoint() / C64::new(lhs, 0.0);
    let sup = alg.trace(&(xi * &eta)).re;
    let ortho = spanning
        .iter()
        .map(|n| alg.trace(&(&eta * n)).norm())
        .fold(0.0, f64::max);
    (lhs, sup, ortho)
}

/// Cauchy-Schwarz slack `|x|_2 |y|_2 - |tau(x* y)|`.
pub fn cauchy_schwarz_slack(alg: &TracialAlgebra, x: &CMat, y: &CMat) -> f64 {
    alg.norm2(x) * alg.norm2(y) - alg.inner(x, y).norm()
}

/// Frobenius-squared helper exposed for reports.
pub fn frobenius_sq(x: &CMat) -> f64 {
    frob_sq(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, expm_i_hermitian, max_abs_diff, random_unitary};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z2() -> Arc<FiniteGroup> {
        Arc::new(FiniteGroup::cyclic(2))
    }

    fn swap() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn trace_and_norms() {
        let alg = TracialAlgebra::new(&[(2, 0.25), (1, 0.75)]).unwrap();
        assert!((alg.trace(&alg.identity()).re - 1.0).abs() < 1e-15);
        let mut x = CMat::zeros(3, 3);
        x[(2, 2)] = c(2.0, 0.0);
        assert!((alg.norm2_sq(&x) - 3.0).abs() < 1e-15);
        assert!((alg.norm1(&x) - 1.5).abs() < 1e-12);
        assert!((alg.norm_inf(&x) - 2.0).abs() < 1e-12);
        x[(0, 2)] = c(1.0, 0.0);
        assert!(!alg.contains(&x, 1e-12));
    }

    #[test]
    fn rotation_defect_matches_hand_value() {
        let alg = TracialAlgebra::matrix(2);
        let t: f64 = 0.3;
        let rot = CMat::from_row_slice(
            2,
            2,
            &[
                c(t.cos(), 0.0),
                c(-t.sin(), 0.0),
                c(t.sin(), 0.0),
                c(t.cos(), 0.0),
            ],
        );
        let phi = AlmostHom::new(z2(), vec![alg.identity(), rot], TOL).unwrap();
        // Only (1,1) contributes: |I - R(2t)|_2^2 = 2 (1 - cos 2t).
        let expected = 0.25 * 2.0 * (1.0 - (2.0 * t).cos());
        assert!((defect(&alg, &phi, None) - expected).abs() < 1e-14);
        let rep = UnitaryRep::regular(z2());
        assert!(defect(&alg, &AlmostHom::from_rep(&rep), None) < 1e-30);
        let one = AlmostHom::new(z2(), vec![alg.identity(), alg.identity()], TOL).unwrap();
        assert_eq!(defect(&alg, &one, None), 0.0);
    }

    #[test]
    fn conditional_expectation_examples() {
        let rep = UnitaryRep::regular(z2());
        let mut e12 = CMat::zeros(2, 2);
        e12[(0, 1)] = c(1.0, 0.0);
        let got = conditional_expectation(&rep, &e12);
        let want = (e12.clone() + e12.transpose()) * c(0.5, 0.0);
        assert!(max_abs_diff(&got, &want) < 1e-15);
        assert!(max_abs_diff(&conditional_expectation(&rep, &want), &want) < 1e-15);
        let triv = UnitaryRep::trivial(z2(), 2);
        assert!(max_abs_diff(&conditional_expectation(&triv, &e12), &e12) < 1e-15);
    }

    #[test]
    fn polar_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(&mut rng, 3);
        let (w, a) = polar(&u);
        assert!(max_abs_diff(&w, &u) < 1e-10 && max_abs_diff(&a, &CMat::identity(3, 3)) < 1e-10);
        let (w, a) = polar(&CMat::zeros(2, 2));
        assert!(frob(&w) == 0.0 && frob(&a) == 0.0);
        let mut x = CMat::zeros(2, 2);
        x[(0, 0)] = c(2.0, 0.0);
        let (w, a) = polar(&x);
        let mut w_want = CMat::zeros(2, 2);
        w_want[(0, 0)] = c(1.0, 0.0);
        assert!(max_abs_diff(&w, &w_want) < 1e-12 && max_abs_diff(&a, &x) < 1e-12);
    }

    #[test]
    fn commutant_block_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let alg = TracialAlgebra::matrix(3);
        let cb = commutant_blocks(&alg, &UnitaryRep::trivial(z2(), 3), &mut rng, 5).unwrap();
        assert_eq!(cb.blocks.len(), 1);
        assert_eq!((cb.blocks[0].mult, cb.blocks[0].irrep_dim), (3, 1));

        let alg2 = TracialAlgebra::matrix(2);
        let cb = commutant_blocks(&alg2, &UnitaryRep::regular(z2()), &mut rng, 5).unwrap();
        assert_eq!(cb.blocks.len(), 2);
        assert!(cb.blocks.iter().all(|b| b.mult == 1 && b.irrep_dim == 1));

        // Two copies of the 2-dimensional irreducible of S3.
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let reg = UnitaryRep::regular(s3.clone());
        let cb = commutant_blocks(&TracialAlgebra::matrix(6), &reg, &mut rng, 5).unwrap();
        let mut shapes: Vec<(usize, usize)> =
            cb.blocks.iter().map(|b| (b.mult, b.irrep_dim)).collect();
        shapes.sort();
        assert_eq!(shapes, vec![(1, 1), (1, 1), (2, 2)]);
        assert_eq!(cb.dim_commutant(), 6);
    }

    #[test]
    fn commutant_respects_ambient_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alg = TracialAlgebra::new(&[(2, 0.5), (2, 0.5)]).unwrap();
        let rep = UnitaryRep::trivial(z2(), 4);
        let cb = commutant_blocks(&alg, &rep, &mut rng, 5).unwrap();
        assert_eq!(cb.blocks.len(), 2);
        assert_eq!(cb.dim_commutant(), 8);
        assert!((commutant_dimension(&alg, &rep) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_unitary_sqrt_two_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let alg = TracialAlgebra::matrix(2);
        let rep = UnitaryRep::regular(z2());
        let cb = commutant_blocks(&alg, &rep, &mut rng, 5).unwrap();
        // diag(1,-1) anticommutes with the swap, so E_N of it vanishes.
        let v = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-1.0, 0.0),
        ]));
        assert!(frob(&conditional_expectation(&rep, &v)) < 1e-15);
        let vt = nearest_unitary_in_commutant(&rep, &cb, &v);
        assert!(max_abs_diff(&(vt.adjoint() * &vt), &alg.identity()) < 1e-12);
        assert!(max_abs_diff(&(&vt * swap()), &(swap() * &vt)) < 1e-12);
        let lhs = alg.norm2(&(&v - &vt));
        let rhs = 2f64.sqrt() * alg.norm2(&(&v - conditional_expectation(&rep, &v)));
        assert!(lhs <= rhs + 1e-12);
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn duality_examples() {
        let alg = TracialAlgebra::matrix(2);
        let rep = UnitaryRep::regular(z2());
        let span = vec![alg.identity(), swap()];
        let (l, s, _) = norm_conditional_duality_check(&alg, &rep, &swap(), &span);
        assert!(l < 1e-15 && s == 0.0);
        let xi = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-1.0, 0.0),
        ]));
        let (l, s, o) = norm_conditional_duality_check(&alg, &rep, &xi, &span);
        assert!((l - 1.0).abs() < 1e-15 && (s - 1.0).abs() < 1e-15 && o < 1e-15);
    }

    #[test]
    fn amplification_bookkeeping() {
        let m2 = TracialAlgebra::matrix(2);
        assert_eq!(m2.amplify(1, 100).unwrap(), m2);
        let m6 = m2.amplify(3, 100).unwrap();
        assert_eq!(m6.dim(), 6);
        assert!((m6.trace(&m2.embed(&m2.identity(), 3)).re - 1.0).abs() < 1e-15);
        assert!((m6.total_trace() - 3.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = m2.random_element(&mut rng);
        assert!((m6.trace(&m2.embed(&x, 3)) - m2.trace(&x)).norm() < 1e-14);
        assert!(matches!(m2.amplify(3, 5), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn pvm_validation() {
        let p = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let q = CMat::identity(2, 2) - &p;
        assert!(Pvm::new(vec![p.clone(), q], TOL).is_ok());
        assert!(matches!(
            Pvm::new(vec![p.clone(), p], TOL),
            Err(Error::InvalidPvm { .. })
        ));
    }

    fn random_alg(rng: &mut ChaCha8Rng) -> TracialAlgebra {
        let k = rng.random_range(1..=3usize);
        let dims: Vec<usize> = (0..k).map(|_| rng.random_range(1..=3usize)).collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let tot: f64 = raw.iter().sum();
        let blocks: Vec<(usize, f64)> =
            dims.iter().zip(&raw).map(|(&d, &w)| (d, w / tot)).collect();
        TracialAlgebra::new(&blocks).unwrap()
    }

    /// Random representation of `(Z/2)^3` inside `alg`: diagonal signs in a
    /// random unitary basis of each block.
    fn random_rep_z2cubed(alg: &TracialAlgebra, rng: &mut ChaCha8Rng) -> UnitaryRep {
        let a = crate::abelian::AbelianGroup::elementary_two(3);
        let g = Arc::new(a.to_finite_group());
        let n = alg.dim();
        let w = alg.random_unitary(rng);
        let chars: Vec<usize> = (0..n).map(|_| rng.random_range(0..8usize)).collect();
        let values = (0..8)
            .map(|x| {
                let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                    n,
                    chars.iter().map(|&ch| a.pairing_idx(ch, x)),
                ));
                &w * d * w.adjoint()
            })
            .collect();
        UnitaryRep::new(g, values, 1e-9).unwrap()
    }

    #[test]
    fn commutator_gap_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let alg = TracialAlgebra::matrix(4);
        let rep = random_rep_z2cubed(&alg, &mut rng);
        let basis = ProbMeasure::from_multiset(8, &[4, 2, 1]).unwrap();
        let g = commutator_gap_check(&alg, &rep, &basis, &alg.identity()).unwrap();
        assert!(g.residual < 1e-28 && g.poincare_bound < 1e-28 && g.group_average < 1e-28);
        let v = alg.random_element(&mut rng);
        let g = commutator_gap_check(&alg, &rep, &ProbMeasure::uniform(8), &v).unwrap();
        assert!((g.kappa - 1.0).abs() < 1e-9);
        assert!((g.group_average - g.average_bound).abs() < 1e-9 * g.group_average.max(1.0));
        let g = commutator_gap_check(&alg, &rep, &basis, &v).unwrap();
        assert!((g.kappa - 1.5).abs() < 1e-9);
        assert!(g.residual <= g.poincare_bound * (1.0 + 1e-9));
        assert!(g.group_average <= g.average_bound * (1.0 + 1e-9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn norm_axioms(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alg = random_alg(&mut rng);
            let x = alg.random_element(&mut rng);
            let y = alg.random_element(&mut rng);
            prop_assert!(alg.norm2(&(&x + &y)) <= alg.norm2(&x) + alg.norm2(&y) + 1e-12);
            prop_assert!(cauchy_schwarz_slack(&alg, &x, &y) >= -1e-12);
            let u = alg.random_unitary(&mut rng);
            let v = alg.random_unitary(&mut rng);
            prop_assert!((alg.norm2(&(&u * &x * &v)) - alg.norm2(&x)).abs() < 1e-10);
        }

        #[test]
        fn conditional_expectation_is_orthogonal_projection(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alg = random_alg(&mut rng);
            let rep = random_rep_z2cubed(&alg, &mut rng);
            let v = alg.random_element(&mut rng);
            let e = conditional_expectation(&rep, &v);
            prop_assert!(max_abs_diff(&conditional_expectation(&rep, &e), &e) < 1e-12);
            prop_assert!((alg.trace(&e) - alg.trace(&v)).norm() < 1e-12);
            prop_assert!(alg.norm2(&e) <= alg.norm2(&v) + 1e-12);
            let cb = commutant_blocks(&alg, &rep, &mut rng, 8).unwrap();
            let diff = &v - &e;
            for j in 0..cb.blocks.len() {
                let b = &cb.blocks[j];
                for r in 0..b.mult {
                    for rr in 0..b.mult {
                        let parts: Vec<CMat> = cb.blocks.iter().enumerate().map(|(k, bk)| {
                            let mut a = CMat::zeros(bk.mult, bk.mult);
                            if k == j { a[(r, rr)] = c(1.0, 0.0); }
                            a
                        }).collect();
                        let n_elem = cb.expand(&parts);
                        prop_assert!(alg.inner(&diff, &n_elem).norm() < 1e-10);
                    }
                }
            }
            prop_assert!(cb.block_residual(&e) < 1e-8);
        }

        #[test]
        fn nearest_unitary_bound(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alg = random_alg(&mut rng);
            let rep = random_rep_z2cubed(&alg, &mut rng);
            let cb = commutant_blocks(&alg, &rep, &mut rng, 8).unwrap();
            let near = nearest_unitary_in_commutant(&rep, &cb, &alg.identity());
            let h = alg.random_hermitian(&mut rng);
            let t = rng.random_range(0.0..1.5);
            let v = near * expm_i_hermitian(&h, t);
            let vt = nearest_unitary_in_commutant(&rep, &cb, &v);
            for u in &rep.values {
                prop_assert!(max_abs_diff(&(&vt * u), &(u * &vt)) < 1e-9);
            }
            prop_assert!(max_abs_diff(&(vt.adjoint() * &vt), &alg.identity()) < 1e-9);
            let lhs = alg.norm2(&(&v - &vt));
            let rhs = 2f64.sqrt() * alg.norm2(&(&v - conditional_expectation(&rep, &v)));
            prop_assert!(lhs <= rhs + 1e-9);
        }

        #[test]
        fn duality_equality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alg = random_alg(&mut rng);
            let rep = random_rep_z2cubed(&alg, &mut rng);
            let xi = alg.random_element(&mut rng);
            let span: Vec<CMat> = (0..4).map(|_| conditional_expectation(&rep, &alg.random_element(&mut rng))).collect();
            let (l, s, o) = norm_conditional_duality_check(&alg, &rep, &xi, &span);
            prop_assert!((l - s).abs() < 1e-9, "{} {}", l, s);
            prop_assert!(o < 1e-9);
        }
    }
}
