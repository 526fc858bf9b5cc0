//! Spectral-gap constants of probability measures on finite groups.
//!
//! For a measure `mu` with generating support, `kappa(mu)` is the smallest
//! constant such that `|xi - P_inv xi|^2 <= (kappa/2) sum_g mu(g) |pi(g) xi - xi|^2`
//! for every unitary representation. It equals `1/(1 - lambda_2)` where
//! `lambda_2` is the largest eigenvalue of the symmetrized averaging operator
//! off the constants.

use nalgebra::DMatrix;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abelian::AbelianGroup;
use crate::error::{invalid, Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::eigh_real;
use crate::{CMat, CVec, Q};

/// Default cap on `|G|` for the regular-representation computation.
pub const DEFAULT_GROUP_CAP: usize = 5040;

/// Probability measure on the elements `0..n` of a finite group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbMeasure {
    #[serde(with = "crate::io::rational_vec")]
    weights: Vec<Q>,
}

impl ProbMeasure {
    pub fn new(weights: Vec<Q>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("measure on an empty set");
        }
        if weights.iter().any(|w| w.is_negative()) {
            return invalid("negative weight");
        }
        let total: Q = weights.iter().sum();
        if !total.is_one() {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        Ok(ProbMeasure { weights })
    }

    pub fn uniform(n: usize) -> Self {
        ProbMeasure {
            weights: vec![Q::new(1, n as i64); n],
        }
    }

    pub fn dirac(n: usize, x: usize) -> Self {
        let mut weights = vec![Q::zero(); n];
        weights[x] = Q::one();
        ProbMeasure { weights }
    }

    /// Uniform measure on a multiset of elements.
    pub fn from_multiset(n: usize, elems: &[usize]) -> Result<Self> {
        if elems.is_empty() {
            return invalid("empty multiset");
        }
        let mut weights = vec![Q::zero(); n];
        let w = Q::new(1, elems.len() as i64);
        for &e in elems {
            if e >= n {
                return invalid(format!("element {e} out of range"));
            }
            weights[e] += w;
        }
        Ok(ProbMeasure { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, x: usize) -> Q {
        self.weights[x]
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn weight_f64(&self, x: usize) -> f64 {
        self.weights[x].to_f64().unwrap_or(0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| !self.weights[i].is_zero())
            .collect()
    }

    /// `nu(g) = (mu(g) + mu(g^-1)) / 2`.
    pub fn symmetrized(&self, g: &FiniteGroup) -> ProbMeasure {
        let half = Q::new(1, 2);
        ProbMeasure {
            weights: (0..self.len())
                .map(|x| (self.weights[x] + self.weights[g.inv(x)]) * half)
                .collect(),
        }
    }

    /// Mixture `lambda delta_e + (1 - lambda) mu`.
    pub fn lazy(&self, lambda: Q) -> ProbMeasure {
        let mut weights: Vec<Q> = self
            .weights
            .iter()
            .map(|w| w * (Q::one() - lambda))
            .collect();
        weights[0] += lambda;
        ProbMeasure { weights }
    }

    /// Image of the measure under the pushforward `f`.
    pub fn pushforward(&self, n: usize, f: impl Fn(usize) -> usize) -> ProbMeasure {
        let mut weights = vec![Q::zero(); n];
        for (x, w) in self.weights.iter().enumerate() {
            if !w.is_zero() {
                weights[f(x)] += w;
            }
        }
        ProbMeasure { weights }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapMethod {
    AbelianFourier,
    RegularRep,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapReport {
    /// `1/(1 - lambda_2)`; zero for the trivial group.
    pub kappa: f64,
    /// Exact value when every character takes values in `{+1,-1}`.
    #[serde(with = "crate::io::rational_opt")]
    pub kappa_exact: Option<Q>,
    pub second_eigenvalue: f64,
    #[serde(with = "crate::io::rational_opt")]
    pub second_eigenvalue_exact: Option<Q>,
    pub method: GapMethod,
}

/// `kappa = max over nontrivial chi of 1/(1 - Re muhat(chi))`.
pub fn kappa_abelian(a: &AbelianGroup, mu: &ProbMeasure) -> Result<GapReport> {
    if mu.len() != a.order() {
        return invalid("measure does not live on this group");
    }
    let support = mu.support();
    let gens: Vec<usize> = support.clone();
    if !abelian_generates(a, &gens) {
        return Err(Error::NonGenerating);
    }
    if a.order() == 1 {
        return Ok(trivial_report(GapMethod::AbelianFourier));
    }
    if a.is_exponent_two() {
        let mut best: Option<Q> = None;
        for chi in 1..a.order() {
            let mut s = Q::zero();
            for &x in &support {
                let w = mu.weight(x);
                if a.pairing_sign(chi, x) == Some(1) {
                    s += w;
                } else {
                    s -= w;
                }
            }
            best = Some(match best {
                Some(b) if b >= s => b,
                _ => s,
            });
        }
        let l2 = best.expect("nontrivial group");
        let k = (Q::one() - l2).recip();
        return Ok(GapReport {
            kappa: k.to_f64().unwrap_or(f64::INFINITY),
            kappa_exact: Some(k),
            second_eigenvalue: l2.to_f64().unwrap_or(1.0),
            second_eigenvalue_exact: Some(l2),
            method: GapMethod::AbelianFourier,
        });
    }
    let w: Vec<(usize, f64)> = support.iter().map(|&x| (x, mu.weight_f64(x))).collect();
    let mut l2 = f64::NEG_INFINITY;
    for chi in 1..a.order() {
        let s: f64 = w.iter().map(|&(x, wx)| wx * a.pairing_idx(chi, x).re).sum();
        l2 = l2.max(s);
    }
    Ok(GapReport {
        kappa: 1.0 / (1.0 - l2),
        kappa_exact: None,
        second_eigenvalue: l2,
        second_eigenvalue_exact: None,
        method: GapMethod::AbelianFourier,
    })
}

fn abelian_generates(a: &AbelianGroup, gens: &[usize]) -> bool {
    let mut seen = vec![false; a.order()];
    seen[0] = true;
    let mut stack = vec![0usize];
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &s in gens {
            let y = a.add(x, s);
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == a.order()
}

fn trivial_report(method: GapMethod) -> GapReport {
    GapReport {
        kappa: 0.0,
        kappa_exact: Some(Q::zero()),
        second_eigenvalue: f64::NEG_INFINITY,
        second_eigenvalue_exact: None,
        method,
    }
}

/// Spectral gap from the regular representation of the symmetrized measure.
pub fn kappa_general(g: &FiniteGroup, mu: &ProbMeasure, cap: usize) -> Result<GapReport> {
    let n = g.order();
    if mu.len() != n {
        return invalid("measure does not live on this group");
    }
    if n > cap {
        return Err(Error::ResourceCap(format!(
            "|G| = {n} exceeds the cap {cap}"
        )));
    }
    if !g.generates(&mu.support()) {
        return Err(Error::NonGenerating);
    }
    if n == 1 {
        return Ok(trivial_report(GapMethod::RegularRep));
    }
    let nu = mu.symmetrized(g);
    // T = sum nu(s) lambda(s) minus 3 times the projection on constants, so
    // the constant vector sits at -2 below every other eigenvalue.
    let shift = 3.0 / n as f64;
    let mut t = DMatrix::<f64>::from_element(n, n, -shift);
    for s in nu.support() {
        let w = nu.weight_f64(s);
        for h in 0..n {
            t[(g.mul(s, h), h)] += w;
        }
    }
    let vals = eigh_real(&t);
    let l2 = *vals.last().expect("nonempty");
    Ok(GapReport {
        kappa: 1.0 / (1.0 - l2),
        kappa_exact: None,
        second_eigenvalue: l2,
        second_eigenvalue_exact: None,
        method: GapMethod::RegularRep,
    })
}

/// Returns `(|xi - P_inv xi|^2, (kappa/2) sum_g mu(g) |pi(g) xi - xi|^2)`.
pub fn poincare_residual(
    g: &FiniteGroup,
    rep: &[CMat],
    mu: &ProbMeasure,
    xi: &CVec,
) -> Result<(f64, f64)> {
    if rep.len() != g.order() || mu.len() != g.order() {
        return invalid("representation and measure must be indexed by the group");
    }
    if rep
        .iter()
        .any(|u| u.nrows() != xi.len() || u.ncols() != xi.len())
    {
        return invalid("dimension mismatch between representation and vector");
    }
    let gap = kappa_general(g, mu, DEFAULT_GROUP_CAP)?;
    let mut avg = CVec::zeros(xi.len());
    for u in rep {
        avg += u * xi;
    }
    avg /= crate::C64::new(g.order() as f64, 0.0);
    let lhs = (xi - avg).norm_squared();
    let mut s = 0.0;
    for x in mu.support() {
        s += mu.weight_f64(x) * (&rep[x] * xi - xi).norm_squared();
    }
    Ok((lhs, gap.kappa / 2.0 * s))
}

/// Parameters of the random small-support sampler.
#[derive(Clone, Debug)]
pub struct AlonRoichman {
    pub target_kappa: f64,
    /// Support size is `ceil(c ln |G|)`.
    pub c: f64,
    pub max_tries: usize,
    /// Failures tolerated at a given `c` before it doubles.
    pub tries_per_c: usize,
}

impl Default for AlonRoichman {
    fn default() -> Self {
        AlonRoichman {
            target_kappa: 2.0,
            c: 6.0,
            max_tries: 64,
            tries_per_c: 8,
        }
    }
}

/// Uniform measure on a random multiset with certified `kappa <= target`.
pub fn alon_roichman_sample<R: Rng + ?Sized>(
    g: &FiniteGroup,
    opts: &AlonRoichman,
    rng: &mut R,
) -> Result<(ProbMeasure, GapReport)> {
    sample_with(g.order(), opts, rng, |mu| {
        kappa_general(g, mu, DEFAULT_GROUP_CAP)
    })
}

/// Same as [`alon_roichman_sample`], certified through the character formula.
pub fn alon_roichman_sample_abelian<R: Rng + ?Sized>(
    a: &AbelianGroup,
    opts: &AlonRoichman,
    rng: &mut R,
) -> Result<(ProbMeasure, GapReport)> {
    sample_with(a.order(), opts, rng, |mu| kappa_abelian(a, mu))
}

fn sample_with<R: Rng + ?Sized>(
    n: usize,
    opts: &AlonRoichman,
    rng: &mut R,
    verify: impl Fn(&ProbMeasure) -> Result<GapReport>,
) -> Result<(ProbMeasure, GapReport)> {
    if n > DEFAULT_GROUP_CAP {
        return Err(Error::ResourceCap(format!(
            "|G| = {n} exceeds the cap {DEFAULT_GROUP_CAP}"
        )));
    }
    let mut c = opts.c;
    let mut best = f64::INFINITY;
    for t in 0..opts.max_tries {
        if t > 0 && t % opts.tries_per_c.max(1) == 0 {
            c *= 2.0;
        }
        let k = ((c * (n as f64).ln()).ceil() as usize).max(1);
        let elems: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
        let mu = ProbMeasure::from_multiset(n, &elems)?;
        match verify(&mu) {
            Ok(rep) => {
                if rep.kappa <= opts.target_kappa {
                    return Ok((mu, rep));
                }
                best = best.min(rep.kappa);
            }
            Err(Error::NonGenerating) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::SamplingFailure {
        tries: opts.max_tries,
        best: format!("kappa = {best}"),
    })
}
