//! Finite fields `F_q`, `q = p^k <= 2^16`.
//!
//! Elements are integers `0..q` whose base-`p` digits are the coefficients of
//! a polynomial in the residue class of `x` modulo a monic irreducible
//! polynomial of degree `k`.

use crate::error::{Error, Result};

/// Largest supported field size.
pub const MAX_Q: u64 = 1 << 16;

#[derive(Clone, Debug)]
pub struct Field {
    p: u32,
    k: u32,
    q: u32,
    /// Low-order coefficients of the monic modulus, degree `k` omitted.
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    add_table: Option<Vec<u32>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.modulus == other.modulus
    }
}

/// `(p, k)` with `q = p^k`, if `q` is a prime power.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q && !q.is_multiple_of(p) {
        p += 1;
    }
    if !q.is_multiple_of(p) {
        p = q;
    }
    let (mut r, mut k) = (q, 0);
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    (r == 1).then_some((p as u32, k))
}

impl Field {
    /// The field of order `q` built on the first monic irreducible modulus.
    pub fn new(q: u64) -> Result<Self> {
        Self::with_modulus_index(q, 0)
    }

    /// Same field, built on the `index`-th monic irreducible modulus in the
    /// enumeration order of its low coefficients.
    pub fn with_modulus_index(q: u64, index: usize) -> Result<Self> {
        if q > MAX_Q {
            return Err(Error::InvalidField(q));
        }
        let (p, k) = prime_power(q).ok_or(Error::InvalidField(q))?;
        let modulus = nth_irreducible(p, k, index).ok_or(Error::InvalidField(q))?;
        let mut f = Field {
            p,
            k,
            q: q as u32,
            modulus,
            exp: Vec::new(),
            log: Vec::new(),
            add_table: None,
        };
        f.build_tables();
        Ok(f)
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        let n = q - 1;
        let mut g = if q == 2 { 1 } else { 2 };
        loop {
            let mut exp = Vec::with_capacity(n);
            let mut x = 1u32;
            let mut ok = true;
            for i in 0..n {
                if i > 0 && x == 1 {
                    ok = false;
                    break;
                }
                exp.push(x);
                x = self.poly_mul(x, g);
            }
            if ok && x == 1 {
                let mut log = vec![0u32; q];
                for (i, &e) in exp.iter().enumerate() {
                    log[e as usize] = i as u32;
                }
                self.exp = exp;
                self.log = log;
                break;
            }
            g += 1;
        }
        if q <= 256 {
            let mut t = vec![0u32; q * q];
            for a in 0..q as u32 {
                for b in 0..q as u32 {
                    t[(a * self.q + b) as usize] = self.digit_add(a, b);
                }
            }
            self.add_table = Some(t);
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    /// Low coefficients of the monic modulus.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn digits(&self, x: u32) -> Vec<u32> {
        let mut d = Vec::with_capacity(self.k as usize);
        let mut x = x;
        for _ in 0..self.k {
            d.push(x % self.p);
            x /= self.p;
        }
        d
    }

    pub fn from_digits(&self, d: &[u32]) -> u32 {
        d.iter().rev().fold(0, |acc, &c| acc * self.p + c % self.p)
    }

    fn digit_add(&self, a: u32, b: u32) -> u32 {
        if self.p == 2 {
            return a ^ b;
        }
        let (mut a, mut b, mut out, mut place) = (a, b, 0, 1);
        for _ in 0..self.k {
            out += ((a % self.p + b % self.p) % self.p) * place;
            a /= self.p;
            b /= self.p;
            place *= self.p;
        }
        out
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        match &self.add_table {
            Some(t) => t[(a * self.q + b) as usize],
            None => self.digit_add(a, b),
        }
    }

    pub fn neg(&self, a: u32) -> u32 {
        if self.p == 2 {
            return a;
        }
        let d: Vec<u32> = self
            .digits(a)
            .iter()
            .map(|&c| (self.p - c) % self.p)
            .collect();
        self.from_digits(&d)
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.q - 1;
        self.exp[((self.log[a as usize] + self.log[b as usize]) % n) as usize]
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let n = self.q - 1;
        Some(self.exp[((n - self.log[a as usize]) % n) as usize])
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let n = (self.q - 1) as u64;
        self.exp[((self.log[a as usize] as u64 * (e % n)) % n) as usize]
    }

    /// The class of `x`, a root of the modulus.
    pub fn generator_root(&self) -> u32 {
        if self.k == 1 {
            // x reduces to minus the constant term.
            (self.p - self.modulus[0]) % self.p
        } else {
            self.p
        }
    }

    /// Absolute trace `Tr(x) = sum_i x^(p^i)`, an element of `F_p`.
    pub fn trace(&self, x: u32) -> u32 {
        let mut s = 0;
        let mut y = x;
        for _ in 0..self.k {
            s = self.add(s, y);
            y = self.pow(y, self.p as u64);
        }
        debug_assert!(s < self.p);
        s
    }

    /// Schoolbook polynomial multiplication modulo the modulus.
    fn poly_mul(&self, a: u32, b: u32) -> u32 {
        let k = self.k as usize;
        let p = self.p;
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = vec![0u32; 2 * k];
        for i in 0..k {
            for j in 0..k {
                prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
            }
        }
        for deg in (k..2 * k).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            prod[deg] = 0;
            for (i, &m) in self.modulus.iter().enumerate() {
                prod[deg - k + i] = (prod[deg - k + i] + p - (c * m) % p) % p;
            }
        }
        self.from_digits(&prod[..k])
    }

    /// Evaluates a polynomial with coefficients in the prime field at `x`.
    pub fn eval_prime_poly(&self, coeffs: &[u32], x: u32) -> u32 {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.add(self.mul(acc, x), c % self.p))
    }

    /// Field isomorphism `self -> other` for fields of the same order,
    /// sending the class of `x` to a root of this field's modulus in `other`.
    pub fn isomorphism_to(&self, other: &Field) -> Result<Vec<u32>> {
        if self.q != other.q {
            return Err(Error::InvalidArgument("fields of different order".into()));
        }
        let mut full = self.modulus.clone();
        full.push(1);
        let root = (0..other.q)
            .find(|&r| other.eval_prime_poly(&full, r) == 0)
            .ok_or_else(|| Error::Internal("modulus has no root in the target field".into()))?;
        let powers: Vec<u32> = (0..self.k).map(|i| other.pow(root, i as u64)).collect();
        Ok((0..self.q)
            .map(|x| {
                self.digits(x)
                    .iter()
                    .zip(&powers)
                    .fold(0, |acc, (&c, &pw)| other.add(acc, other.mul(c, pw)))
            })
            .collect())
    }
}

/// Remainder of `f` (monic of degree `k`, low coefficients given) modulo the
/// monic `g` with low coefficients `g_low`, over `F_p`.
fn poly_mod_is_zero(p: u32, f_low: &[u32], g_low: &[u32]) -> bool {
    let mut r: Vec<u32> = f_low.to_vec();
    r.push(1);
    let dg = g_low.len();
    for deg in (dg..r.len()).rev() {
        let c = r[deg];
        if c == 0 {
            continue;
        }
        r[deg] = 0;
        for (i, &m) in g_low.iter().enumerate() {
            r[deg - dg + i] = (r[deg - dg + i] + p - (c * m) % p) % p;
        }
    }
    r.iter().all(|&c| c == 0)
}

fn low_coeffs(p: u32, deg: u32, code: u64) -> Vec<u32> {
    let mut v = Vec::with_capacity(deg as usize);
    let mut c = code;
    for _ in 0..deg {
        v.push((c % p as u64) as u32);
        c /= p as u64;
    }
    v
}

fn is_irreducible(p: u32, low: &[u32]) -> bool {
    let k = low.len() as u32;
    for d in 1..=k / 2 {
        for code in 0..(p as u64).pow(d) {
            if poly_mod_is_zero(p, low, &low_coeffs(p, d, code)) {
                return false;
            }
        }
    }
    true
}

fn nth_irreducible(p: u32, k: u32, index: usize) -> Option<Vec<u32>> {
    let mut seen = 0;
    for code in 0..(p as u64).pow(k) {
        let low = low_coeffs(p, k, code);
        if is_irreducible(p, &low) {
            if seen == index {
                return Some(low);
            }
            seen += 1;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_axioms(f: &Field) {
        let q = f.q();
        for a in 0..q {
            assert_eq!(f.add(a, 0), a);
            assert_eq!(f.add(a, f.neg(a)), 0);
            assert_eq!(f.mul(a, 1), a);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
            for b in 0..q.min(40) {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for c in 0..q.min(12) {
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn small_fields_satisfy_axioms() {
        for q in [2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32] {
            check_axioms(&Field::new(q).unwrap());
        }
    }

    #[test]
    fn unsupported_sizes() {
        for q in [0, 1, 6, 12, 1 << 17] {
            assert!(matches!(Field::new(q), Err(Error::InvalidField(_))));
        }
        assert_eq!(Field::new(1 << 16).unwrap().degree(), 16);
    }

    #[test]
    fn gf4_by_hand() {
        // x^2 + x + 1 is the only irreducible quadratic over F_2.
        let f = Field::new(4).unwrap();
        assert_eq!(f.modulus(), &[1, 1]);
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.mul(2, 3), 1);
        assert_eq!(f.trace(0), 0);
        assert_eq!(f.trace(1), 0);
        assert_eq!(f.trace(2), 1);
    }

    #[test]
    fn trace_is_linear_and_onto() {
        for q in [8, 9, 32] {
            let f = Field::new(q).unwrap();
            let mut counts = vec![0; f.characteristic() as usize];
            for a in 0..f.q() {
                counts[f.trace(a) as usize] += 1;
                for b in 0..f.q() {
                    assert_eq!(
                        f.trace(f.add(a, b)),
                        (f.trace(a) + f.trace(b)) % f.characteristic()
                    );
                }
            }
            assert!(counts.iter().all(|&c| c == counts[0]));
        }
    }

    #[test]
    fn isomorphism_between_bases() {
        for q in [8, 16, 9] {
            let f0 = Field::new(q).unwrap();
            let f1 = Field::with_modulus_index(q, 1).unwrap();
            assert_ne!(f0.modulus(), f1.modulus());
            let phi = f0.isomorphism_to(&f1).unwrap();
            for a in 0..f0.q() {
                for b in 0..f0.q() {
                    assert_eq!(
                        phi[f0.add(a, b) as usize],
                        f1.add(phi[a as usize], phi[b as usize])
                    );
                    assert_eq!(
                        phi[f0.mul(a, b) as usize],
                        f1.mul(phi[a as usize], phi[b as usize])
                    );
                }
            }
        }
    }
}
