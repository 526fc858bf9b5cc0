//! Rounding almost homomorphisms of finite groups to genuine
//! representations in a corner of an amplification, and the quantitative
//! consequences: subgroup closeness, commuting and twisted pairs, commutator
//! amplification through spectral gaps, and stabilization of direct
//! products.
//!
//! All distances are reported in squared form: the rounding guarantees
//! `E_g |phi(g) - w* pi(g) w|_2^2 <= 169 eps` and `tau(P) <= 1 + 16 eps`
//! where `eps = E_{g,h} |phi(gh) - phi(g) phi(h)|_2^2`.
//!
//! The dilation lives in `M (x) l2(G)`. The default path block-diagonalizes
//! it with the Fourier transform of `G`, so only matrices of size
//! `dim(sigma) * dim(M)` are formed; [`gowers_hatami_round_dense`] builds
//! the `|G| dim(M)` matrices literally and serves as a cross-check.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abelian::AbelianGroup;
use crate::algebra::{
    commutant_blocks, conditional_expectation, defect, homomorphism_residual,
    nearest_unitary_in_commutant, AlmostHom, TracialAlgebra, UnitaryRep,
};
use crate::error::{invalid, Error, Result};
use crate::fourier::GroupFourier;
use crate::group::FiniteGroup;
use crate::io;
use crate::linalg::{complement_basis, eigh, principal};
use crate::spectral::{kappa_abelian, kappa_general, ProbMeasure, DEFAULT_GROUP_CAP};
use crate::{CMat, C64, Q};

/// Largest dense matrix side the rounding may form.
pub const DEFAULT_DIM_CAP: usize = 4096;
/// Eigenvalues of the averaged operator this close to 1/2 are flagged.
pub const TIE_WINDOW: f64 = 1e-9;
/// Singular values of the contraction below this count as kernel.
pub const RANK_THRESHOLD: f64 = 1e-9;
/// Residual under which an input is treated as an exact representation.
pub const EXACT_TOL: f64 = 1e-10;

/// `13^2`: squared distance constant of the rounding.
pub const GH_DISTANCE: f64 = 169.0;
/// `4^2`: bound on `tau(P) - 1` and on `|P - w w*|_2^2`.
pub const GH_TRACE: f64 = 16.0;
/// `|1 - X*X|_2` and `|P - X X*|_2` are at most this times `sqrt(eps)`.
pub const CONTRACTION: f64 = 4.0;
/// `5^2`: squared distance constant of the contraction stage.
pub const CONTRACTION_DISTANCE: f64 = 25.0;
/// `38^2`: squared closeness on equivariant subgroups.
pub const SUBGROUP: f64 = 1444.0;
/// Bound on `|1 + w* Z w|_2^2` for the central sign `Z`, in units of eps.
pub const CENTRAL_SIGN: f64 = 2.0 * SUBGROUP;
/// `(19 sqrt 2 + 4)^2`: squared distance between `P` and its `Z = -1` part.
pub const Z_CORRECTION: f64 =
    (19.0 * std::f64::consts::SQRT_2 + 4.0) * (19.0 * std::f64::consts::SQRT_2 + 4.0);
/// Squared closeness after the sign correction; `(38 + 4(19 sqrt 2 + 4))^2`
/// is just below this.
pub const TWISTED: f64 = 30000.0;

#[derive(Clone, Copy, Debug)]
pub struct GhOptions {
    /// Known defect of the input; computed (at `|G|^2` products) if absent.
    pub defect: Option<f64>,
    /// A central element `z` with `phi(z g) = -phi(g)`; irreps with
    /// `sigma(z) = 1` then contribute nothing and are skipped.
    pub odd_central: Option<usize>,
    pub dim_cap: usize,
}

impl Default for GhOptions {
    fn default() -> Self {
        GhOptions {
            defect: None,
            odd_central: None,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

/// Measurements of the contraction `X = P V` before polar completion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionStage {
    /// `|1_M - X* X|_2`.
    pub isometry_defect: f64,
    /// `|P - X X*|_2`.
    pub projection_defect: f64,
    /// `E_g |phi(g) - X* pi(g) X|_2^2`.
    pub distance: f64,
    /// `4 sqrt(eps)`.
    pub defect_bound: f64,
    /// `25 eps`.
    pub distance_bound: f64,
}

/// Output of the rounding. The corner `P' M_inf P'` is represented by its
/// own coordinates: the first `spectral_rank` span the spectral projection
/// `P`, the rest the completion where `pi` acts trivially.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundingCertificate {
    pub corner: TracialAlgebra,
    pub spectral_rank: usize,
    #[serde(with = "io::matrix_vec")]
    pub pi: Vec<CMat>,
    /// Isometry from `1_M` into the corner, `corner.dim() x dim(M)`.
    #[serde(with = "io::matrix")]
    pub w: CMat,
    pub input_defect: f64,
    /// `E_g |phi(g) - w* pi(g) w|_2^2`.
    pub distance: f64,
    /// `tau_inf(P') - tau(1)`.
    pub trace_excess: f64,
    /// `|1_M - w* w|_2^2`.
    pub isometry_defect: f64,
    /// `|P' - w w*|_2^2`.
    pub range_defect: f64,
    pub contraction: ContractionStage,
    /// Eigenvalues within [`TIE_WINDOW`] of 1/2, included in `P`.
    pub threshold_ties: usize,
    /// `169 eps`.
    pub distance_bound: f64,
    /// `16 eps`.
    pub trace_bound: f64,
}

impl RoundingCertificate {
    /// `w* x w`.
    pub fn pull_back(&self, x: &CMat) -> CMat {
        self.w.adjoint() * x * &self.w
    }

    /// Both conclusions of the rounding, up to an absolute roundoff slack.
    pub fn holds(&self, slack: f64) -> bool {
        self.distance <= self.distance_bound + slack
            && self.trace_excess <= self.trace_bound + slack
    }

    /// `distance / eps`, to compare with 169.
    pub fn distance_ratio(&self) -> f64 {
        ratio(self.distance, self.input_defect)
    }

    pub fn rep(&self, group: Arc<FiniteGroup>) -> UnitaryRep {
        UnitaryRep::new_unchecked(group, self.pi.clone())
    }
}

fn ratio(x: f64, eps: f64) -> f64 {
    if eps > 0.0 {
        x / eps
    } else if x <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// The contraction `X`, the restricted representation and the corner labels.
struct Contraction {
    labels: Vec<usize>,
    x: CMat,
    pi: Vec<CMat>,
    ties: usize,
}

fn check_input(alg: &TracialAlgebra, phi: &AlmostHom) -> Result<()> {
    if phi.dim() != alg.dim() {
        return invalid("almost homomorphism and algebra have different dimensions");
    }
    if phi.values.iter().any(|u| !alg.contains(u, 1e-9)) {
        return invalid("almost homomorphism takes values outside the algebra");
    }
    Ok(())
}

/// Eigenvectors of a Hermitian `h` split by the block labels of its
/// coordinates, keeping those with eigenvalue at least `1/2 - TIE_WINDOW`.
fn upper_eigenvectors(
    h: &CMat,
    labels: &[usize],
    num_labels: usize,
) -> (Vec<(usize, Vec<C64>)>, usize) {
    let mut out = Vec::new();
    let mut ties = 0;
    for l in 0..num_labels {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == l).collect();
        if idx.is_empty() {
            continue;
        }
        let (vals, vecs) = eigh(&principal(h, &idx));
        for (k, &v) in vals.iter().enumerate() {
            if (v - 0.5).abs() <= TIE_WINDOW {
                ties += 1;
            }
            if v >= 0.5 - TIE_WINDOW {
                let mut full = vec![C64::new(0.0, 0.0); labels.len()];
                for (a, &i) in idx.iter().enumerate() {
                    full[i] = vecs[(a, k)];
                }
                out.push((l, full));
            }
        }
    }
    (out, ties)
}

/// Rounds `phi` through the Fourier decomposition of `M (x) l2(G)`.
pub fn gowers_hatami_round(
    alg: &TracialAlgebra,
    phi: &AlmostHom,
    fourier: &GroupFourier,
    opts: &GhOptions,
) -> Result<RoundingCertificate> {
    check_input(alg, phi)?;
    let g = phi.group.as_ref();
    if fourier.group().as_ref() != g {
        return invalid("Fourier data belongs to a different group");
    }
    let n = alg.dim();
    let order = g.order();
    let eps = opts.defect.unwrap_or_else(|| defect(alg, phi, None));

    // Row x holds phi(x^{-1}) flattened as i n + j.
    let phimat = CMat::from_fn(order, n * n, |x, k| phi.values[g.inv(x)][(k / n, k % n)]);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    let mut labels = Vec::new();
    // (irrep, multiplicity) in coordinate order.
    let mut layout: Vec<(usize, usize)> = Vec::new();
    let mut ties = 0;
    for (s, irrep) in fourier.irreps().iter().enumerate() {
        if let Some(z) = opts.odd_central {
            if fourier.central_sign(s, z) == Some(1.0) {
                continue;
            }
        }
        let d = irrep.dim;
        if d * n > opts.dim_cap {
            return Err(Error::ResourceCap(format!(
                "Fourier block of size {} exceeds {}",
                d * n,
                opts.dim_cap
            )));
        }
        let scale = (d as f64).sqrt() / order as f64;
        let smat = CMat::from_fn(d * d, order, |rc, x| {
            irrep.values[x][(rc / d, rc % d)] * scale
        });
        // r_[(r d + c), i n + j] is the (i, j) entry of the (r, c) Fourier
        // coefficient of the dilation.
        let r_ = smat * &phimat;
        let w = CMat::from_fn(d * n, d * n, |ci, rj| {
            let (c, i) = (ci / n, ci % n);
            let (r, j) = (rj / n, rj % n);
            r_[(r * d + c, i * n + j)]
        });
        let b = &w * w.adjoint() / C64::new(d as f64, 0.0);
        let blabels: Vec<usize> = (0..d * n).map(|ci| alg.labels()[ci % n]).collect();
        let (vecs, t) = upper_eigenvectors(&b, &blabels, alg.num_blocks());
        ties += t;
        if vecs.is_empty() {
            continue;
        }
        let mut start = 0;
        while start < vecs.len() {
            let l = vecs[start].0;
            let mut end = start;
            while end < vecs.len() && vecs[end].0 == l {
                end += 1;
            }
            let m = end - start;
            let usel = CMat::from_fn(d * n, m, |a, k| vecs[start + k].1[a]);
            let xb = usel.adjoint() * &w;
            for k in 0..m {
                for r in 0..d {
                    rows.push((0..n).map(|j| xb[(k, r * n + j)]).collect());
                    labels.push(l);
                }
            }
            layout.push((s, m));
            start = end;
        }
    }
    let p = rows.len();
    let x = CMat::from_fn(p, n, |a, j| rows[a][j]);
    let pi = (0..order)
        .map(|el| {
            let mut m = CMat::zeros(p, p);
            let mut off = 0;
            for &(s, mult) in &layout {
                let sig = &fourier.irreps()[s].values[el];
                let d = sig.nrows();
                for _ in 0..mult {
                    m.view_mut((off, off), (d, d)).copy_from(sig);
                    off += d;
                }
            }
            m
        })
        .collect();
    finish(
        alg,
        phi,
        Contraction {
            labels,
            x,
            pi,
            ties,
        },
        eps,
    )
}

/// The rounding built literally in `M (x) M_|G|`: isometry
/// `(V xi)(g) = phi(g^{-1}) xi`, average `A = E_g lambda(g) V V* lambda(g)*`,
/// spectral projection `P = 1_[1/2, 1](A)`, `X = P V`.
pub fn gowers_hatami_round_dense(
    alg: &TracialAlgebra,
    phi: &AlmostHom,
    opts: &GhOptions,
) -> Result<RoundingCertificate> {
    check_input(alg, phi)?;
    let g = phi.group.as_ref();
    let order = g.order();
    let n = alg.dim();
    let amp = alg.amplify(order, opts.dim_cap)?;
    let big = order * n;
    let eps = opts.defect.unwrap_or_else(|| defect(alg, phi, None));
    let scale = C64::new(1.0 / (order as f64).sqrt(), 0.0);
    let mut v = CMat::zeros(big, n);
    for x in 0..order {
        v.view_mut((x * n, 0), (n, n))
            .copy_from(&(&phi.values[g.inv(x)] * scale));
    }
    let vv = &v * v.adjoint();
    let mut a = CMat::zeros(big, big);
    for el in 0..order {
        let gi = g.inv(el);
        for ha in 0..order {
            let sa = g.mul(gi, ha);
            for hb in 0..order {
                let sb = g.mul(gi, hb);
                for i in 0..n {
                    for j in 0..n {
                        a[(ha * n + i, hb * n + j)] += vv[(sa * n + i, sb * n + j)];
                    }
                }
            }
        }
    }
    a /= C64::new(order as f64, 0.0);
    let (vecs, ties) = upper_eigenvectors(&a, amp.labels(), amp.num_blocks());
    let p = vecs.len();
    let e = CMat::from_fn(big, p, |i, k| vecs[k].1[i]);
    let labels = vecs.iter().map(|(l, _)| *l).collect();
    let x = e.adjoint() * &v;
    let pi = (0..order)
        .map(|el| {
            let mut le = CMat::zeros(big, p);
            for h in 0..order {
                let gh = g.mul(el, h);
                for i in 0..n {
                    le.set_row(gh * n + i, &e.row(h * n + i));
                }
            }
            e.adjoint() * le
        })
        .collect();
    finish(
        alg,
        phi,
        Contraction {
            labels,
            x,
            pi,
            ties,
        },
        eps,
    )
}

fn with_identity(m: &CMat, extra: usize) -> CMat {
    let p = m.nrows();
    let mut out = CMat::identity(p + extra, p + extra);
    out.view_mut((0, 0), (p, p)).copy_from(m);
    out
}

/// Contraction-stage measurements, then the polar completion `w = w0 + w1`.
fn finish(
    alg: &TracialAlgebra,
    phi: &AlmostHom,
    c: Contraction,
    eps: f64,
) -> Result<RoundingCertificate> {
    let n = alg.dim();
    let order = phi.group.order();
    let p = c.x.nrows();
    let corner = TracialAlgebra::from_parts(c.labels.clone(), alg.densities().to_vec())?;
    let x = &c.x;
    let dist_with = |w: &CMat, pi: &dyn Fn(usize) -> CMat| -> f64 {
        (0..order)
            .map(|el| alg.norm2_sq(&(&phi.values[el] - w.adjoint() * pi(el) * w)))
            .sum::<f64>()
            / order as f64
    };
    let sqrt_eps = eps.max(0.0).sqrt();
    let contraction = ContractionStage {
        isometry_defect: alg.norm2(&(alg.identity() - x.adjoint() * x)),
        projection_defect: corner.norm2(&(CMat::identity(p, p) - x * x.adjoint())),
        distance: dist_with(x, &|el| c.pi[el].clone()),
        defect_bound: CONTRACTION * sqrt_eps,
        distance_bound: CONTRACTION_DISTANCE * eps,
    };

    let mut w_rows: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; p];
    let mut labels = c.labels.clone();
    for (l, cols) in alg.block_coords().iter().enumerate() {
        if cols.is_empty() {
            continue;
        }
        let rows: Vec<usize> = (0..p).filter(|&a| c.labels[a] == l).collect();
        let mut range: Vec<Vec<C64>> = Vec::new();
        if !rows.is_empty() {
            let sub = CMat::from_fn(rows.len(), cols.len(), |a, b| x[(rows[a], cols[b])]);
            let svd = sub.svd(true, true);
            let u = svd.u.expect("svd u");
            let vt = svd.v_t.expect("svd v_t");
            for (k, &s) in svd.singular_values.iter().enumerate() {
                if s <= RANK_THRESHOLD {
                    continue;
                }
                for (a, &ra) in rows.iter().enumerate() {
                    for (b, &cb) in cols.iter().enumerate() {
                        w_rows[ra][cb] += u[(a, k)] * vt[(k, b)];
                    }
                }
                range.push((0..cols.len()).map(|b| vt[(k, b)].conj()).collect());
            }
        }
        let rmat = CMat::from_fn(cols.len(), range.len(), |b, k| range[k][b]);
        let all: Vec<usize> = (0..cols.len()).collect();
        let kernel = complement_basis(&rmat, &all);
        for k in 0..kernel.ncols() {
            let mut row = vec![C64::new(0.0, 0.0); n];
            for (b, &cb) in cols.iter().enumerate() {
                row[cb] = kernel[(b, k)].conj();
            }
            w_rows.push(row);
            labels.push(l);
        }
    }
    let extra = w_rows.len() - p;
    let w = CMat::from_fn(w_rows.len(), n, |a, j| w_rows[a][j]);
    let pi: Vec<CMat> = c.pi.iter().map(|m| with_identity(m, extra)).collect();
    let corner = TracialAlgebra::from_parts(labels, alg.densities().to_vec())?;
    let distance = dist_with(&w, &|el| pi[el].clone());
    let q = w.nrows();
    Ok(RoundingCertificate {
        trace_excess: corner.total_trace() - alg.total_trace(),
        isometry_defect: alg.norm2_sq(&(alg.identity() - w.adjoint() * &w)),
        range_defect: corner.norm2_sq(&(CMat::identity(q, q) - &w * w.adjoint())),
        corner,
        spectral_rank: p,
        pi,
        w,
        input_defect: eps,
        distance,
        contraction,
        threshold_ties: c.ties,
        distance_bound: GH_DISTANCE * eps,
        trace_bound: GH_TRACE * eps,
    })
}

/// Rounds with freshly computed Fourier data.
pub fn round(
    alg: &TracialAlgebra,
    phi: &AlmostHom,
    opts: &GhOptions,
) -> Result<RoundingCertificate> {
    let f = GroupFourier::new(phi.group.clone())?;
    gowers_hatami_round(alg, phi, &f, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `phi(h g) = phi(h) phi(g)` for `h` in the subgroup.
    Left,
    /// `phi(g h) = phi(g) phi(h)` for `h` in the subgroup.
    Right,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubgroupCheck {
    /// `E_{h in H} |phi(h) - w* pi(h) w|_2^2`.
    pub lhs: f64,
    /// `1444 eps`.
    pub bound: f64,
    /// Largest `|phi(hg) - phi(h) phi(g)|_2` (or the right-sided analogue).
    pub equivariance_residual: f64,
}

impl SubgroupCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.bound + slack
    }
}

/// Closeness on a subgroup along which `phi` is exactly equivariant. The
/// equivariance residual is reported, not enforced.
pub fn subgroup_closeness_report(
    alg: &TracialAlgebra,
    phi: &AlmostHom,
    subgroup: &[usize],
    cert: &RoundingCertificate,
    side: Side,
) -> Result<SubgroupCheck> {
    let g = phi.group.as_ref();
    if subgroup.is_empty() || !g.is_subgroup(subgroup) {
        return invalid("not a subgroup");
    }
    let mut residual: f64 = 0.0;
    for &h in subgroup {
        for x in 0..g.order() {
            let (prod, lhs) = match side {
                Side::Left => (g.mul(h, x), &phi.values[h] * &phi.values[x]),
                Side::Right => (g.mul(x, h), &phi.values[x] * &phi.values[h]),
            };
            residual = residual.max(alg.norm2(&(&phi.values[prod] - lhs)));
        }
    }
    let lhs = subgroup
        .iter()
        .map(|&h| alg.norm2_sq(&(&phi.values[h] - cert.pull_back(&cert.pi[h]))))
        .sum::<f64>()
        / subgroup.len() as f64;
    Ok(SubgroupCheck {
        lhs,
        bound: SUBGROUP * cert.input_defect,
        equivariance_residual: residual,
    })
}

/// As [`subgroup_closeness_report`], rejecting inputs whose equivariance
/// residual exceeds `tol`.
pub fn subgroup_closeness_check(
    alg: &TracialAlgebra,
    phi: &AlmostHom,
    subgroup: &[usize],
    cert: &RoundingCertificate,
    side: Side,
    tol: f64,
) -> Result<SubgroupCheck> {
    let r = subgroup_closeness_report(alg, phi, subgroup, cert, side)?;
    if r.equivariance_residual > tol {
        return Err(Error::Precondition {
            what: "subgroup equivariance".into(),
            residual: r.equivariance_residual,
        });
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairRounding {
    pub certificate: RoundingCertificate,
    #[serde(with = "io::matrix_vec")]
    pub u_tilde: Vec<CMat>,
    #[serde(with = "io::matrix_vec")]
    pub v_tilde: Vec<CMat>,
    /// `E_{a,b} |[U(a), V(b)]|_2^2`.
    pub eps: f64,
    pub dist_u: f64,
    pub dist_v: f64,
    /// `1444 eps`.
    pub bound: f64,
    /// Largest Frobenius norm of `[U~(a), V~(b)]`.
    pub relation_residual: f64,
}

impl PairRounding {
    pub fn holds(&self, slack: f64) -> bool {
        self.dist_u <= self.bound + slack
            && self.dist_v <= self.bound + slack
            && self.certificate.trace_excess <= self.certificate.trace_bound + slack
    }
}

fn same_algebra(alg: &TracialAlgebra, reps: &[&UnitaryRep]) -> Result<()> {
    for r in reps {
        if r.dim() != alg.dim() || r.values.iter().any(|u| !alg.contains(u, 1e-9)) {
            return invalid("representation does not take values in the algebra");
        }
    }
    Ok(())
}

fn pulled_distance(alg: &TracialAlgebra, orig: &[CMat], w: &CMat, tilde: &[CMat]) -> f64 {
    orig.iter()
        .zip(tilde)
        .map(|(u, t)| alg.norm2_sq(&(u - w.adjoint() * t * w)))
        .sum::<f64>()
        / orig.len() as f64
}

/// Two representations with almost commuting ranges, rounded jointly to
/// representations with exactly commuting ranges.
pub fn round_commuting_pair(
    alg: &TracialAlgebra,
    u: &UnitaryRep,
    v: &UnitaryRep,
    fourier: Option<&GroupFourier>,
    opts: &GhOptions,
) -> Result<PairRounding> {
    same_algebra(alg, &[u, v])?;
    let (a, b) = (u.group.as_ref(), v.group.as_ref());
    let nb = b.order();
    let group = Arc::new(FiniteGroup::direct_product(a, b));
    let values = (0..group.order())
        .map(|x| &u.values[x / nb] * &v.values[x % nb])
        .collect();
    let phi = AlmostHom::new_unchecked(group.clone(), values);
    let mut eps = 0.0;
    for ua in &u.values {
        for vb in &v.values {
            eps += alg.norm2_sq(&(ua * vb - vb * ua));
        }
    }
    eps /= (a.order() * nb) as f64;
    let owned;
    let f = match fourier {
        Some(f) => f,
        None => {
            owned = GroupFourier::new(group.clone())?;
            &owned
        }
    };
    let cert = gowers_hatami_round(
        alg,
        &phi,
        f,
        &GhOptions {
            defect: Some(eps),
            ..*opts
        },
    )?;
    let u_tilde: Vec<CMat> = (0..a.order()).map(|x| cert.pi[x * nb].clone()).collect();
    let v_tilde: Vec<CMat> = (0..nb).map(|y| cert.pi[y].clone()).collect();
    let mut rel: f64 = 0.0;
    for ut in &u_tilde {
        for vt in &v_tilde {
            rel = rel.max((ut * vt - vt * ut).norm());
        }
    }
    Ok(PairRounding {
        dist_u: pulled_distance(alg, &u.values, &cert.w, &u_tilde),
        dist_v: pulled_distance(alg, &v.values, &cert.w, &v_tilde),
        u_tilde,
        v_tilde,
        eps,
        bound: SUBGROUP * eps,
        relation_residual: rel,
        certificate: cert,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistedRounding {
    /// Rounding of `phi(a, b, z) = z U(a) V(b)` on the central extension.
    pub certificate: RoundingCertificate,
    /// The `Z = -1` corner `Q`.
    pub corner: TracialAlgebra,
    #[serde(with = "io::matrix_vec")]
    pub u_tilde: Vec<CMat>,
    #[serde(with = "io::matrix_vec")]
    pub v_tilde: Vec<CMat>,
    /// Partial isometry from `1_M` into `Q`.
    #[serde(with = "io::matrix")]
    pub w: CMat,
    /// `E_{a,b} |U(a) V(b) - gamma(a,b) V(b) U(a)|_2^2`.
    pub eps: f64,
    pub dist_u: f64,
    pub dist_v: f64,
    /// `30000 eps`.
    pub bound: f64,
    /// Largest Frobenius norm of `U~(a) V~(b) - gamma(a,b) V~(b) U~(a)`.
    pub relation_residual: f64,
    /// `|1 + w* Z w|_2^2` before correction, at most `2888 eps`.
    pub central_defect: f64,
    /// `|P - Q|_2^2`, at most `(19 sqrt 2 + 4)^2 eps`.
    pub sign_defect: f64,
    /// `|1_M - w* w|_2^2`, at most `|P - Q|_2^2`.
    pub isometry_defect: f64,
    /// `|Q - w w*|_2^2`.
    pub range_defect: f64,
    /// `tau(Q) - tau(1)`.
    pub trace_excess: f64,
    /// `16 eps`.
    pub trace_bound: f64,
    /// `(19 sqrt 2 + 4)^2 eps`.
    pub sign_bound: f64,
}

impl TwistedRounding {
    pub fn holds(&self, slack: f64) -> bool {
        self.dist_u <= self.bound + slack
            && self.dist_v <= self.bound + slack
            && self.trace_excess <= self.trace_bound + slack
            && self.central_defect <= CENTRAL_SIGN * self.eps + slack
            && self.sign_defect <= self.sign_bound + slack
            && self.isometry_defect <= self.sign_bound + slack
    }
}

/// Elements `(a, 1, 1)`, `(1, b, 1)` and `(1, 1, -1)` of the central
/// extension built by [`FiniteGroup::central_extension`].
fn extension_index(nb: usize, a: usize, b: usize, z: usize) -> usize {
    (a * nb + b) * 2 + z
}

/// Two representations satisfying `U(a) V(b) = gamma(a,b) V(b) U(a)`
/// approximately, rounded to representations satisfying it exactly.
pub fn round_twisted_pair(
    alg: &TracialAlgebra,
    u: &UnitaryRep,
    v: &UnitaryRep,
    gamma: &[Vec<i8>],
    fourier: Option<&GroupFourier>,
    opts: &GhOptions,
) -> Result<TwistedRounding> {
    same_algebra(alg, &[u, v])?;
    let (a, b) = (u.group.as_ref(), v.group.as_ref());
    let group = Arc::new(FiniteGroup::central_extension(a, b, gamma)?);
    let nb = b.order();
    let values = (0..group.order())
        .map(|x| {
            let (ab, z) = (x / 2, x % 2);
            let m = &u.values[ab / nb] * &v.values[ab % nb];
            if z == 1 {
                -m
            } else {
                m
            }
        })
        .collect();
    let phi = AlmostHom::new_unchecked(group.clone(), values);
    let mut eps = 0.0;
    for (x, ua) in u.values.iter().enumerate() {
        for (y, vb) in v.values.iter().enumerate() {
            let s = C64::new(gamma[x][y] as f64, 0.0);
            eps += alg.norm2_sq(&(ua * vb - vb * ua * s));
        }
    }
    eps /= (a.order() * nb) as f64;
    let owned;
    let f = match fourier {
        Some(f) => f,
        None => {
            owned = GroupFourier::new(group.clone())?;
            &owned
        }
    };
    let zc = extension_index(nb, 0, 0, 1);
    let cert = gowers_hatami_round(
        alg,
        &phi,
        f,
        &GhOptions {
            defect: Some(eps),
            odd_central: Some(zc),
            ..*opts
        },
    )?;
    let big = &cert.pi[zc];
    let central_defect = alg.norm2_sq(&(alg.identity() + cert.pull_back(big)));

    // Q = (P - Z)/2, computed per block of the corner.
    let pdim = cert.corner.dim();
    let qop = (CMat::identity(pdim, pdim) - big) * C64::new(0.5, 0.0);
    let (vecs, _) = upper_eigenvectors(&qop, cert.corner.labels(), cert.corner.num_blocks());
    let basis = CMat::from_fn(pdim, vecs.len(), |i, k| vecs[k].1[i]);
    let corner = TracialAlgebra::from_parts(
        vecs.iter().map(|(l, _)| *l).collect(),
        cert.corner.densities().to_vec(),
    )?;
    let sign_defect = cert
        .corner
        .norm2_sq(&(CMat::identity(pdim, pdim) - &basis * basis.adjoint()));
    let compress = |m: &CMat| basis.adjoint() * m * &basis;
    let u_tilde: Vec<CMat> = (0..a.order())
        .map(|x| compress(&cert.pi[extension_index(nb, x, 0, 0)]))
        .collect();
    let v_tilde: Vec<CMat> = (0..nb)
        .map(|y| compress(&cert.pi[extension_index(nb, 0, y, 0)]))
        .collect();
    let (w, _) = crate::algebra::polar(&(basis.adjoint() * &cert.w));
    let mut rel: f64 = 0.0;
    for (x, ut) in u_tilde.iter().enumerate() {
        for (y, vt) in v_tilde.iter().enumerate() {
            let s = C64::new(gamma[x][y] as f64, 0.0);
            rel = rel.max((ut * vt - vt * ut * s).norm());
        }
    }
    let q = w.nrows();
    Ok(TwistedRounding {
        dist_u: pulled_distance(alg, &u.values, &w, &u_tilde),
        dist_v: pulled_distance(alg, &v.values, &w, &v_tilde),
        isometry_defect: alg.norm2_sq(&(alg.identity() - w.adjoint() * &w)),
        range_defect: corner.norm2_sq(&(CMat::identity(q, q) - &w * w.adjoint())),
        trace_excess: corner.total_trace() - alg.total_trace(),
        trace_bound: GH_TRACE * eps,
        sign_bound: Z_CORRECTION * eps,
        bound: TWISTED * eps,
        relation_residual: rel,
        central_defect,
        sign_defect,
        corner,
        u_tilde,
        v_tilde,
        w,
        eps,
        certificate: cert,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Amplification {
    /// Uniform average of the (twisted) commutator.
    pub lhs: f64,
    /// `kappa(mu) kappa(nu)` times the measure average.
    pub rhs: f64,
    pub measure_average: f64,
    pub kappa_mu: f64,
    pub kappa_nu: f64,
}

impl Amplification {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

fn amplification_from(
    alg: &TracialAlgebra,
    na: usize,
    nb: usize,
    mu: &ProbMeasure,
    nu: &ProbMeasure,
    kappa_mu: f64,
    kappa_nu: f64,
    term: impl Fn(usize, usize) -> CMat,
) -> Amplification {
    let mut lhs = 0.0;
    for x in 0..na {
        for y in 0..nb {
            lhs += alg.norm2_sq(&term(x, y));
        }
    }
    lhs /= (na * nb) as f64;
    let mut avg = 0.0;
    for x in mu.support() {
        for y in nu.support() {
            avg += mu.weight_f64(x) * nu.weight_f64(y) * alg.norm2_sq(&term(x, y));
        }
    }
    Amplification {
        lhs,
        rhs: kappa_mu * kappa_nu * avg,
        measure_average: avg,
        kappa_mu,
        kappa_nu,
    }
}

/// Uniform commutator average against the measure average scaled by both
/// spectral-gap constants.
pub fn commutator_amplification_check(
    alg: &TracialAlgebra,
    u: &UnitaryRep,
    v: &UnitaryRep,
    mu: &ProbMeasure,
    nu: &ProbMeasure,
) -> Result<Amplification> {
    same_algebra(alg, &[u, v])?;
    let km = kappa_general(&u.group, mu, DEFAULT_GROUP_CAP)?.kappa;
    let kn = kappa_general(&v.group, nu, DEFAULT_GROUP_CAP)?.kappa;
    Ok(amplification_from(
        alg,
        u.group.order(),
        v.group.order(),
        mu,
        nu,
        km,
        kn,
        |x, y| &u.values[x] * &v.values[y] - &v.values[y] * &u.values[x],
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Evaluate the twisted commutators directly.
    Direct,
    /// Tensor with translations and modulations and reduce to commutators.
    Tensor,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistedAmplification {
    pub direct: Option<Amplification>,
    pub tensor: Option<Amplification>,
}

impl TwistedAmplification {
    /// The direct evaluation when present, else the tensor one.
    pub fn primary(&self) -> &Amplification {
        self.direct
            .as_ref()
            .or(self.tensor.as_ref())
            .expect("at least one route")
    }
}

/// Translations `lambda(a) delta_x = delta_{x+a}` on `l2(A)`.
pub fn translations(a: &AbelianGroup) -> Vec<CMat> {
    let n = a.order();
    (0..n)
        .map(|x| {
            let mut m = CMat::zeros(n, n);
            for y in 0..n {
                m[(a.add(y, x), y)] = C64::new(1.0, 0.0);
            }
            m
        })
        .collect()
}

/// Modulations `M(chi) delta_x = chi(x) delta_x` on `l2(A)`.
pub fn modulations(a: &AbelianGroup) -> Vec<CMat> {
    let n = a.order();
    (0..n)
        .map(|chi| CMat::from_diagonal(&crate::CVec::from_fn(n, |x, _| a.pairing_idx(chi, x))))
        .collect()
}

/// Twisted commutator average for `U` on `A` and `V` on the dual of `A`:
/// `E |U(a) V(chi) - chi(a) V(chi) U(a)|_2^2` against its `mu (x) nu`
/// average times `kappa(mu) kappa(nu)`.
pub fn twisted_amplification_check(
    alg: &TracialAlgebra,
    a: &AbelianGroup,
    u: &[CMat],
    v: &[CMat],
    mu: &ProbMeasure,
    nu: &ProbMeasure,
    route: Route,
) -> Result<TwistedAmplification> {
    let n = a.order();
    if u.len() != n || v.len() != n || mu.len() != n || nu.len() != n {
        return invalid("representations and measures must be indexed by the group and its dual");
    }
    let dual = a.dual();
    let km = kappa_abelian(a, mu)?.kappa;
    let kn = kappa_abelian(&dual, nu)?.kappa;
    let direct = matches!(route, Route::Direct | Route::Both).then(|| {
        amplification_from(alg, n, n, mu, nu, km, kn, |x, chi| {
            &u[x] * &v[chi] - &v[chi] * &u[x] * a.pairing_idx(chi, x)
        })
    });
    let tensor = if matches!(route, Route::Tensor | Route::Both) {
        let lam = translations(a);
        let md = modulations(a);
        let labels: Vec<usize> = alg
            .labels()
            .iter()
            .flat_map(|&l| std::iter::repeat_n(l, n))
            .collect();
        let dens: Vec<f64> = alg.densities().iter().map(|d| d / n as f64).collect();
        let big = TracialAlgebra::from_parts(labels, dens)?;
        let ut: Vec<CMat> = (0..n).map(|x| u[x].kronecker(&lam[x])).collect();
        let vt: Vec<CMat> = (0..n).map(|chi| v[chi].kronecker(&md[chi])).collect();
        let ga = Arc::new(a.to_finite_group());
        let gd = Arc::new(dual.to_finite_group());
        let ur = UnitaryRep::new_unchecked(ga, ut);
        let vr = UnitaryRep::new_unchecked(gd, vt);
        Some(commutator_amplification_check(&big, &ur, &vr, mu, nu)?)
    } else {
        None
    };
    Ok(TwistedAmplification { direct, tensor })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PauliRounding {
    pub amplification: TwistedAmplification,
    pub rounding: TwistedRounding,
    /// `kappa(mu) kappa(nu)`.
    pub kappa_product: f64,
    /// `30000 kappa(mu) kappa(nu)`.
    pub constant: f64,
    /// `constant` times the measure average of the twisted commutator.
    pub bound: f64,
}

impl PauliRounding {
    pub fn holds(&self, slack: f64) -> bool {
        let r = &self.rounding;
        self.amplification.primary().holds(slack)
            && r.holds(slack)
            && r.dist_u <= self.bound + slack
            && r.dist_v <= self.bound + slack
    }
}

/// Pair of representations of an exponent-2 group and its dual with
/// approximately Pauli commutation on average under `mu (x) nu`, rounded to
/// an exact Pauli pair.
#[allow(clippy::too_many_arguments)]
pub fn round_pauli_pair(
    alg: &TracialAlgebra,
    a: &AbelianGroup,
    u: &[CMat],
    v: &[CMat],
    mu: &ProbMeasure,
    nu: &ProbMeasure,
    route: Route,
    fourier: Option<&GroupFourier>,
    opts: &GhOptions,
) -> Result<PauliRounding> {
    if !a.is_exponent_two() {
        return invalid("the group must have exponent 2");
    }
    let amplification = twisted_amplification_check(alg, a, u, v, mu, nu, route)?;
    let n = a.order();
    let gamma: Vec<Vec<i8>> = (0..n)
        .map(|x| {
            (0..n)
                .map(|chi| a.pairing_sign(chi, x).expect("exponent two"))
                .collect()
        })
        .collect();
    let ga = Arc::new(a.to_finite_group());
    let gd = Arc::new(a.dual().to_finite_group());
    let ur = UnitaryRep::new_unchecked(ga, u.to_vec());
    let vr = UnitaryRep::new_unchecked(gd, v.to_vec());
    let rounding = round_twisted_pair(alg, &ur, &vr, &gamma, fourier, opts)?;
    let amp = amplification.primary();
    let kappa_product = amp.kappa_mu * amp.kappa_nu;
    Ok(PauliRounding {
        constant: TWISTED * kappa_product,
        bound: TWISTED * kappa_product * amp.measure_average,
        kappa_product,
        amplification,
        rounding,
    })
}

/// The mixture `mu(x,y) = (mu1(x) 1_{y=1} + mu2(y) 1_{x=1}) / 2` on
/// `G1 x G2`, with `(x, y)` at index `x |G2| + y`.
pub fn product_mixture(mu1: &ProbMeasure, mu2: &ProbMeasure) -> Result<ProbMeasure> {
    let (n1, n2) = (mu1.len(), mu2.len());
    let half = Q::new(1, 2);
    let mut w = vec![Q::new(0, 1); n1 * n2];
    for x in 0..n1 {
        w[x * n2] += mu1.weight(x) * half;
    }
    for y in 0..n2 {
        w[y] += mu2.weight(y) * half;
    }
    ProbMeasure::new(w)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductReport {
    /// Defect under the mixture measure.
    pub eps: f64,
    /// `eps_split[i][j]`: defect over `G_i x G_j` against `mu_i (x) mu_j`;
    /// the four sum to `4 eps`.
    pub eps_split: [[f64; 2]; 2],
    pub kappa1: f64,
    /// The restriction to `G1` was already a representation.
    pub exact_first: bool,
    pub exact_second: bool,
    /// `int |phi(g) - w1* pi1(g) w1|_2^2 dmu1`.
    pub first_distance: f64,
    /// `int eta(h)^2 dmu2` with `eta(h) = |phi(h) - E(phi(h))|_2`.
    pub eta_sq: f64,
    /// `(kappa1/2) (2 sqrt(first_distance) + sqrt(eps12) + sqrt(eps21))^2`.
    pub eta_bound_sharp: f64,
    /// `12 kappa1 delta1(eps)` with `delta1(t) = min(4, 169 t)`.
    pub eta_bound: f64,
    /// Uniform defect of the corrected map into the commutant.
    pub second_defect: f64,
    /// `int |V(h) - w2* pi2(h) w2|_2^2 dmu2` inside the commutant.
    pub second_distance: f64,
    /// `int |phi - w* pi w|_2^2` against the mixture measure.
    pub distance: f64,
    pub distance_uniform: f64,
    pub trace_excess: f64,
    /// `distance / (kappa1 eps)`.
    pub empirical_constant: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductStabilization {
    pub corner: TracialAlgebra,
    #[serde(with = "io::matrix_vec")]
    pub pi: Vec<CMat>,
    #[serde(with = "io::matrix")]
    pub w: CMat,
    pub report: ProductReport,
}

fn measure_distance(
    alg: &TracialAlgebra,
    mu: &ProbMeasure,
    phi: &[CMat],
    w: &CMat,
    pi: &[CMat],
) -> f64 {
    mu.support()
        .into_iter()
        .map(|x| mu.weight_f64(x) * alg.norm2_sq(&(&phi[x] - w.adjoint() * &pi[x] * w)))
        .sum()
}

/// Stabilizes an almost homomorphism of `G1 x G2` in two stages: round the
/// restriction to `G1`, move the `G2` values into the commutant of the
/// result, round them there, and combine.
#[allow(clippy::too_many_arguments)]
pub fn stabilize_product<R: Rng + ?Sized>(
    alg: &TracialAlgebra,
    phi: &AlmostHom,
    g1: &Arc<FiniteGroup>,
    g2: &Arc<FiniteGroup>,
    mu1: &ProbMeasure,
    mu2: &ProbMeasure,
    opts: &GhOptions,
    rng: &mut R,
) -> Result<ProductStabilization> {
    check_input(alg, phi)?;
    let prod = FiniteGroup::direct_product(g1, g2);
    if prod != *phi.group {
        return invalid("almost homomorphism must be defined on G1 x G2");
    }
    let (n1, n2) = (g1.order(), g2.order());
    if mu1.len() != n1 || mu2.len() != n2 {
        return invalid("measure sizes do not match the factors");
    }
    let mix = product_mixture(mu1, mu2)?;
    let eps = defect(alg, phi, Some(&mix));
    let embed = |i: usize, x: usize| if i == 0 { x * n2 } else { x };
    let meas = [mu1, mu2];
    let mut eps_split = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = 0.0;
            for x in meas[i].support() {
                for y in meas[j].support() {
                    let (gx, gy) = (embed(i, x), embed(j, y));
                    let d = &phi.values[phi.group.mul(gx, gy)] - &phi.values[gx] * &phi.values[gy];
                    s += meas[i].weight_f64(x) * meas[j].weight_f64(y) * alg.norm2_sq(&d);
                }
            }
            eps_split[i][j] = s;
        }
    }
    let kappa1 = kappa_general(g1, mu1, DEFAULT_GROUP_CAP)?.kappa;

    // Stage one: G1.
    let phi1: Vec<CMat> = (0..n1).map(|x| phi.values[x * n2].clone()).collect();
    let exact_first = homomorphism_residual(g1, &phi1) < EXACT_TOL;
    let (m1, w1, pi1) = if exact_first {
        (alg.clone(), alg.identity(), phi1.clone())
    } else {
        let f1 = GroupFourier::new(g1.clone())?;
        let c1 = gowers_hatami_round(
            alg,
            &AlmostHom::new_unchecked(g1.clone(), phi1.clone()),
            &f1,
            opts,
        )?;
        (c1.corner, c1.w, c1.pi)
    };
    let first_distance = mu1
        .support()
        .into_iter()
        .map(|x| mu1.weight_f64(x) * alg.norm2_sq(&(&phi1[x] - w1.adjoint() * &pi1[x] * &w1)))
        .sum();
    let rep1 = UnitaryRep::new_unchecked(g1.clone(), pi1.clone());
    let d1 = m1.dim();
    let comp = CMat::identity(d1, d1) - &w1 * w1.adjoint();
    let lifted: Vec<CMat> = (0..n2)
        .map(|y| &w1 * &phi.values[y] * w1.adjoint() + &comp)
        .collect();

    // Stage two: into the commutant N of pi1.
    let blocks = commutant_blocks(&m1, &rep1, rng, 16)?;
    let mut eta_sq = 0.0;
    for y in mu2.support() {
        let e = conditional_expectation(&rep1, &lifted[y]);
        eta_sq += mu2.weight_f64(y) * m1.norm2_sq(&(&lifted[y] - e));
    }
    let vals: Vec<CMat> = lifted
        .iter()
        .map(|x| nearest_unitary_in_commutant(&rep1, &blocks, x))
        .collect();
    let mut nlabels = Vec::new();
    let mut ndens = Vec::new();
    let mut noff = Vec::new();
    for (j, b) in blocks.blocks.iter().enumerate() {
        noff.push(nlabels.len());
        nlabels.extend(std::iter::repeat_n(j, b.mult));
        ndens.push(m1.densities()[b.label] * b.irrep_dim as f64);
    }
    let nalg = TracialAlgebra::from_parts(nlabels, ndens.clone())?;
    let ndim = nalg.dim();
    let vn: Vec<CMat> = vals
        .iter()
        .map(|x| {
            let parts = blocks.compress(x);
            let mut m = CMat::zeros(ndim, ndim);
            for (j, p) in parts.iter().enumerate() {
                m.view_mut((noff[j], noff[j]), p.shape()).copy_from(p);
            }
            m
        })
        .collect();
    let second_defect = defect(
        &nalg,
        &AlmostHom::new_unchecked(g2.clone(), vn.clone()),
        None,
    );
    let exact_second = homomorphism_residual(g2, &vn) < EXACT_TOL;
    let (m2, w2, pi2) = if exact_second {
        (nalg.clone(), nalg.identity(), vn.clone())
    } else {
        let f2 = GroupFourier::new(g2.clone())?;
        let c2 = gowers_hatami_round(
            &nalg,
            &AlmostHom::new_unchecked(g2.clone(), vn.clone()),
            &f2,
            &GhOptions {
                defect: Some(second_defect),
                ..*opts
            },
        )?;
        (c2.corner, c2.w, c2.pi)
    };
    let second_distance = mu2
        .support()
        .into_iter()
        .map(|y| mu2.weight_f64(y) * nalg.norm2_sq(&(&vn[y] - w2.adjoint() * &pi2[y] * &w2)))
        .sum();

    // Assemble: a corner coordinate c of label j carries irrep_dim(j) copies.
    let mut fpos = Vec::new();
    let mut flabels = Vec::new();
    for c in 0..m2.dim() {
        let j = m2.labels()[c];
        fpos.push(flabels.len());
        flabels.extend(std::iter::repeat_n(j, blocks.blocks[j].irrep_dim));
    }
    let fdens: Vec<f64> = ndens
        .iter()
        .zip(&blocks.blocks)
        .map(|(d, b)| d / b.irrep_dim as f64)
        .collect();
    let falg = TracialAlgebra::from_parts(flabels, fdens)?;
    let fdim = falg.dim();
    let adapted = blocks.basis.adjoint() * &w1;
    let n = alg.dim();
    let mut w = CMat::zeros(fdim, n);
    for c in 0..m2.dim() {
        let j = m2.labels()[c];
        let b = &blocks.blocks[j];
        for r in 0..b.mult {
            let coef = w2[(c, noff[j] + r)];
            if coef == C64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..b.irrep_dim {
                let src = adapted.row(b.offset + r * b.irrep_dim + s);
                let mut dst = w.row_mut(fpos[c] + s);
                dst += src * coef;
            }
        }
    }
    let pi: Vec<CMat> = (0..n1 * n2)
        .map(|xy| {
            let (x, y) = (xy / n2, xy % n2);
            let mut m = CMat::zeros(fdim, fdim);
            for c in 0..m2.dim() {
                let j = m2.labels()[c];
                let rho = &blocks.irreps[j][x];
                let d = rho.nrows();
                for cc in 0..m2.dim() {
                    let t = pi2[y][(c, cc)];
                    if t == C64::new(0.0, 0.0) || m2.labels()[cc] != j {
                        continue;
                    }
                    for s in 0..d {
                        for ss in 0..d {
                            m[(fpos[c] + s, fpos[cc] + ss)] += t * rho[(s, ss)];
                        }
                    }
                }
            }
            m
        })
        .collect();
    let distance = measure_distance(alg, &mix, &phi.values, &w, &pi);
    let distance_uniform =
        measure_distance(alg, &ProbMeasure::uniform(n1 * n2), &phi.values, &w, &pi);
    let eta_bound_sharp = kappa1 / 2.0
        * (2.0 * f64::sqrt(first_distance) + eps_split[0][1].sqrt() + eps_split[1][0].sqrt())
            .powi(2);
    let report = ProductReport {
        eps,
        eps_split,
        kappa1,
        exact_first,
        exact_second,
        first_distance,
        eta_sq,
        eta_bound_sharp,
        eta_bound: 12.0 * kappa1 * (GH_DISTANCE * eps).min(4.0),
        second_defect,
        second_distance,
        distance,
        distance_uniform,
        trace_excess: falg.total_trace() - alg.total_trace(),
        empirical_constant: ratio(distance, kappa1 * eps),
    };
    Ok(ProductStabilization {
        corner: falg,
        pi,
        w,
        report,
    })
}
