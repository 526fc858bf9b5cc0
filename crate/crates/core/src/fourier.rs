//! Irreducible unitary representations of a finite group, computed
//! numerically from the regular representation.
//!
//! A generic Hermitian element of the right convolution algebra commutes with
//! the left regular representation; its eigenspaces are irreducible
//! `lambda`-invariant subspaces, and one subspace per character class gives a
//! complete set of irreps.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{eigh, gaussian};
use crate::{CMat, C64};

const ATTEMPTS: usize = 8;
const SEED: u64 = 0x5eed_f00d;

#[derive(Clone, Debug)]
pub struct Irrep {
    pub dim: usize,
    /// `values[g]` is the unitary `sigma(g)`.
    pub values: Vec<CMat>,
    pub character: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct GroupFourier {
    group: Arc<FiniteGroup>,
    irreps: Vec<Irrep>,
}

impl GroupFourier {
    /// Deterministic: the random convolution kernel uses a fixed seed, with
    /// retries on accidental eigenvalue collisions.
    pub fn new(group: Arc<FiniteGroup>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..ATTEMPTS {
            if let Some(irreps) = attempt(&group, &mut rng) {
                return Ok(GroupFourier { group, irreps });
            }
        }
        Err(Error::Degenerate(ATTEMPTS))
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    /// `+1` or `-1` when `sigma(z)` is that scalar, for central `z`.
    pub fn central_sign(&self, irrep: usize, z: usize) -> Option<f64> {
        let s = &self.irreps[irrep].values[z];
        let d = s.nrows();
        for sign in [1.0, -1.0] {
            let r = (s - CMat::identity(d, d) * C64::new(sign, 0.0)).norm();
            if r < 1e-8 {
                return Some(sign);
            }
        }
        None
    }
}

fn attempt<R: Rng>(g: &FiniteGroup, rng: &mut R) -> Option<Vec<Irrep>> {
    let n = g.order();
    let mut f = vec![C64::new(0.0, 0.0); n];
    for x in 0..n {
        let y = g.inv(x);
        if y < x {
            continue;
        }
        if y == x {
            f[x] = C64::new(gaussian(rng), 0.0);
        } else {
            f[x] = C64::new(gaussian(rng), gaussian(rng));
            f[y] = f[x].conj();
        }
    }
    let y = CMat::from_fn(n, n, |h, k| f[g.mul(g.inv(h), k)]);
    let (vals, vecs) = eigh(&y);
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;

    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || vals[i] - vals[i - 1] > tol {
            if i < n && vals[i] - vals[i - 1] < 1e-6 * scale {
                return None;
            }
            clusters.push((start, i));
            start = i;
        }
    }

    let mut irreps: Vec<Irrep> = Vec::new();
    for (a, b) in clusters {
        let d = b - a;
        let e = vecs.columns(a, d).into_owned();
        let proj = &e * e.adjoint();
        let character: Vec<C64> = (0..n)
            .map(|x| (0..n).map(|h| proj[(g.mul(x, h), h)]).sum())
            .collect();
        let norm: f64 = character.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        if (norm - 1.0).abs() > 1e-6 {
            return None;
        }
        let seen = irreps.iter().any(|r| {
            let ip: C64 = r
                .character
                .iter()
                .zip(&character)
                .map(|(x, y)| x.conj() * y)
                .sum();
            (ip / n as f64).norm() > 0.5
        });
        if seen {
            continue;
        }
        let values = (0..n)
            .map(|x| {
                let shifted = CMat::from_fn(n, d, |h, k| e[(g.mul(x, h), k)]);
                shifted.adjoint() * &e
            })
            .collect();
        irreps.push(Irrep {
            dim: d,
            values,
            character,
        });
    }
    let total: usize = irreps.iter().map(|r| r.dim * r.dim).sum();
    if total != n {
        return None;
    }
    irreps.sort_by_key(|r| r.dim);
    Some(irreps)
}
