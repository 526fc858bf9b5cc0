//! Finite abelian groups `Z/m1 x ... x Z/mr`, their duals, and the Fourier
//! correspondence between unitary representations and PVMs.
//!
//! Elements are residue tuples enumerated lexicographically (last coordinate
//! fastest). Characters carry exponent tuples of the same shape, and the dual
//! group is enumerated by the same rule.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Pvm, UnitaryRep};
use crate::error::{invalid, Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::frob;
use crate::{CMat, C64};

/// Tolerance for projection and homomorphism validation.
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct AbelianGroup {
    orders: Vec<u64>,
    strides: Vec<usize>,
    order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub residues: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Character {
    pub exponents: Vec<u64>,
}

impl TryFrom<Vec<i64>> for AbelianGroup {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        AbelianGroup::new(&v)
    }
}

impl From<AbelianGroup> for Vec<i64> {
    fn from(a: AbelianGroup) -> Self {
        a.orders.iter().map(|&m| m as i64).collect()
    }
}

impl AbelianGroup {
    /// Product of cyclic groups of the given orders; the empty list is the
    /// trivial group.
    pub fn new(orders: &[i64]) -> Result<Self> {
        if let Some(&m) = orders.iter().find(|&&m| m <= 0) {
            return invalid(format!("cyclic factor of order {m}"));
        }
        let orders: Vec<u64> = orders.iter().map(|&m| m as u64).collect();
        let mut order: usize = 1;
        for &m in &orders {
            order = order
                .checked_mul(m as usize)
                .filter(|&o| o <= (1 << 31))
                .ok_or_else(|| Error::ResourceCap("group order exceeds 2^31".into()))?;
        }
        let mut strides = vec![1usize; orders.len()];
        for i in (0..orders.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * orders[i + 1] as usize;
        }
        Ok(AbelianGroup {
            orders,
            strides,
            order,
        })
    }

    /// `(Z/2)^n`.
    pub fn elementary_two(n: usize) -> Self {
        AbelianGroup::new(&vec![2; n]).expect("valid orders")
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn name(&self) -> String {
        if self.orders.is_empty() {
            return "1".into();
        }
        self.orders
            .iter()
            .map(|m| format!("Z/{m}"))
            .collect::<Vec<_>>()
            .join("x")
    }

    /// The dual group, with the same orders.
    pub fn dual(&self) -> AbelianGroup {
        self.clone()
    }

    pub fn is_exponent_two(&self) -> bool {
        self.orders.iter().all(|&m| m <= 2)
    }

    pub fn to_finite_group(&self) -> FiniteGroup {
        FiniteGroup::from_abelian(self)
    }

    pub fn residues(&self, idx: usize) -> Vec<u64> {
        self.orders
            .iter()
            .zip(&self.strides)
            .map(|(&m, &s)| ((idx / s) as u64) % m)
            .collect()
    }

    pub fn element(&self, idx: usize) -> GroupElement {
        GroupElement {
            residues: self.residues(idx),
        }
    }

    pub fn character(&self, idx: usize) -> Character {
        Character {
            exponents: self.residues(idx),
        }
    }

    pub fn index_of(&self, residues: &[u64]) -> Result<usize> {
        if residues.len() != self.orders.len() {
            return invalid("residue tuple has the wrong length");
        }
        let mut idx = 0;
        for ((&r, &m), &s) in residues.iter().zip(&self.orders).zip(&self.strides) {
            if r >= m {
                return invalid(format!("residue {r} not in [0,{m})"));
            }
            idx += r as usize * s;
        }
        Ok(idx)
    }

    /// Basis element `e_i`.
    pub fn generator(&self, i: usize) -> usize {
        if self.orders[i] == 1 {
            0
        } else {
            self.strides[i]
        }
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let mut out = 0;
        for (&m, &s) in self.orders.iter().zip(&self.strides) {
            let m = m as usize;
            let x = (a / s) % m;
            let y = (b / s) % m;
            out += ((x + y) % m) * s;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        let mut out = 0;
        for (&m, &s) in self.orders.iter().zip(&self.strides) {
            let m = m as usize;
            let x = (a / s) % m;
            out += ((m - x) % m) * s;
        }
        out
    }

    fn exponent_lcm(&self) -> u64 {
        self.orders.iter().fold(1u64, |l, &m| lcm(l, m))
    }

    /// The pairing as a fraction `t / L` of a full turn, `L` the exponent.
    pub fn pairing_turns(&self, chi: usize, a: usize) -> (u64, u64) {
        let l = self.exponent_lcm();
        let mut t = 0u64;
        for (&m, &s) in self.orders.iter().zip(&self.strides) {
            let x = ((chi / s) as u64) % m;
            let y = ((a / s) as u64) % m;
            t = (t + (x * y % m) * (l / m)) % l;
        }
        (t, l)
    }

    /// `exp(2 pi i sum chi_j a_j / m_j)`, exact at quarter turns.
    pub fn pairing_idx(&self, chi: usize, a: usize) -> C64 {
        let (t, l) = self.pairing_turns(chi, a);
        root_of_unity(t, l)
    }

    /// Exact `+-1` value of the pairing when the group has exponent 2.
    pub fn pairing_sign(&self, chi: usize, a: usize) -> Option<i8> {
        if !self.is_exponent_two() {
            return None;
        }
        let (t, _) = self.pairing_turns(chi, a);
        Some(if t == 0 { 1 } else { -1 })
    }

    pub fn pairing(&self, chi: &Character, a: &GroupElement) -> Result<C64> {
        let c = self.index_of(&chi.exponents)?;
        let x = self.index_of(&a.residues)?;
        Ok(self.pairing_idx(c, x))
    }

    /// `U(a) = sum_chi chi(a) P_chi`, with the PVM indexed by the dual.
    pub fn rep_from_pvm(&self, pvm: &Pvm) -> Result<UnitaryRep> {
        if pvm.len() != self.order {
            return invalid("PVM must be indexed by the dual group");
        }
        pvm.validate(VALIDATION_TOL)?;
        let n = pvm.dim();
        let values = (0..self.order)
            .map(|a| {
                let mut u = CMat::zeros(n, n);
                for (chi, p) in pvm.projections.iter().enumerate() {
                    u += p * self.pairing_idx(chi, a);
                }
                u
            })
            .collect();
        Ok(UnitaryRep::new_unchecked(
            Arc::new(self.to_finite_group()),
            values,
        ))
    }

    /// `P_chi = E_a conj(chi(a)) U(a)`.
    pub fn pvm_from_rep(&self, rep: &UnitaryRep) -> Result<Pvm> {
        if rep.values.len() != self.order {
            return invalid("representation must be indexed by the group");
        }
        let residual = self.homomorphism_residual(&rep.values);
        if residual > VALIDATION_TOL {
            return Err(Error::InvalidRepresentation { residual });
        }
        Ok(self.pvm_from_values(&rep.values))
    }

    /// Fourier coefficients without validation.
    pub fn pvm_from_values(&self, values: &[CMat]) -> Pvm {
        let n = values[0].nrows();
        let w = 1.0 / self.order as f64;
        let projections = (0..self.order)
            .map(|chi| {
                let mut p = CMat::zeros(n, n);
                for (a, u) in values.iter().enumerate() {
                    p += u * (self.pairing_idx(chi, a).conj() * w);
                }
                p
            })
            .collect();
        Pvm { projections }
    }

    /// Unitary representation values from a PVM without validation.
    pub fn values_from_pvm(&self, projections: &[CMat]) -> Vec<CMat> {
        let n = projections[0].nrows();
        (0..self.order)
            .map(|a| {
                let mut u = CMat::zeros(n, n);
                for (chi, p) in projections.iter().enumerate() {
                    u += p * self.pairing_idx(chi, a);
                }
                u
            })
            .collect()
    }

    /// Largest Frobenius residual of `U(0) = 1`, unitarity and
    /// `U(e_i + b) = U(e_i) U(b)`; the latter over all `b` and generators
    /// `e_i` characterizes homomorphisms of an abelian group.
    pub fn homomorphism_residual(&self, values: &[CMat]) -> f64 {
        let n = values[0].nrows();
        let id = CMat::identity(n, n);
        let mut r = frob(&(&values[0] - &id));
        for u in values {
            r = r.max(frob(&(u.adjoint() * u - &id)));
        }
        for i in 0..self.rank() {
            let e = self.generator(i);
            for b in 0..self.order {
                let lhs = &values[self.add(e, b)];
                r = r.max(frob(&(lhs - &values[e] * &values[b])));
            }
        }
        r
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// `exp(2 pi i t / l)` with exact values at quarter turns.
pub fn root_of_unity(t: u64, l: u64) -> C64 {
    let t = t % l;
    if t == 0 {
        return C64::new(1.0, 0.0);
    }
    if 2 * t == l {
        return C64::new(-1.0, 0.0);
    }
    if 4 * t == l {
        return C64::new(0.0, 1.0);
    }
    if 4 * t == 3 * l {
        return C64::new(0.0, -1.0);
    }
    C64::from_polar(1.0, 2.0 * PI * t as f64 / l as f64)
}
