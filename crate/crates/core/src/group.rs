//! Finite groups given by multiplication tables.
//!
//! Elements are indices `0..order`, with `0` always the identity.

use crate::abelian::AbelianGroup;
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    name: String,
}

impl FiniteGroup {
    /// Builds a group from a trusted product function.
    fn from_fn(order: usize, name: String, f: impl Fn(usize, usize) -> usize) -> Self {
        let mut mul = vec![0u32; order * order];
        for g in 0..order {
            for h in 0..order {
                mul[g * order + h] = f(g, h) as u32;
            }
        }
        let mut inv = vec![0u32; order];
        for g in 0..order {
            for h in 0..order {
                if mul[g * order + h] == 0 {
                    inv[g] = h as u32;
                    break;
                }
            }
        }
        FiniteGroup {
            order,
            mul,
            inv,
            name,
        }
    }

    /// Validates a row-major multiplication table: closure, identity at 0,
    /// inverses and associativity.
    pub fn from_table(order: usize, table: Vec<usize>) -> Result<Self> {
        if order == 0 || table.len() != order * order {
            return invalid("multiplication table must be order x order");
        }
        if table.iter().any(|&x| x >= order) {
            return invalid("table entry out of range");
        }
        for g in 0..order {
            if table[g] != g || table[g * order] != g {
                return invalid("element 0 must be the identity");
            }
            let row: std::collections::HashSet<_> =
                table[g * order..(g + 1) * order].iter().collect();
            if row.len() != order {
                return invalid("table row is not a permutation");
            }
        }
        for a in 0..order {
            for b in 0..order {
                let ab = table[a * order + b];
                for cc in 0..order {
                    if table[ab * order + cc] != table[a * order + table[b * order + cc]] {
                        return invalid("table is not associative");
                    }
                }
            }
        }
        Ok(Self::from_fn(order, format!("table({order})"), |g, h| {
            table[g * order + h]
        }))
    }

    pub fn trivial() -> Self {
        Self::from_fn(1, "1".into(), |_, _| 0)
    }

    pub fn cyclic(m: usize) -> Self {
        assert!(m >= 1);
        Self::from_fn(m, format!("Z/{m}"), |g, h| (g + h) % m)
    }

    pub fn from_abelian(a: &AbelianGroup) -> Self {
        Self::from_fn(a.order(), a.name(), |g, h| a.add(g, h))
    }

    /// Symmetric group on `k` letters, permutations in lexicographic order,
    /// product `(st)(i) = s(t(i))`.
    pub fn symmetric(k: usize) -> Self {
        let mut perms: Vec<Vec<usize>> = Vec::new();
        let mut p: Vec<usize> = (0..k).collect();
        loop {
            perms.push(p.clone());
            if !next_permutation(&mut p) {
                break;
            }
        }
        let index: std::collections::HashMap<Vec<usize>, usize> = perms
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        let n = perms.len();
        Self::from_fn(n, format!("S{k}"), |g, h| {
            let comp: Vec<usize> = (0..k).map(|i| perms[g][perms[h][i]]).collect();
            index[&comp]
        })
    }

    /// Dihedral group of order `2m`: element `(r, s)` at index `2r + s`
    /// stands for `rot^r refl^s`.
    pub fn dihedral(m: usize) -> Self {
        Self::from_fn(2 * m, format!("D{m}"), |g, h| {
            let (r1, s1) = (g / 2, g % 2);
            let (r2, s2) = (h / 2, h % 2);
            let r = if s1 == 0 {
                (r1 + r2) % m
            } else {
                (r1 + m - r2) % m
            };
            2 * r + (s1 ^ s2)
        })
    }

    /// Direct product; `(g, h)` sits at index `g * |H| + h`.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let nb = b.order;
        Self::from_fn(a.order * nb, format!("{}x{}", a.name, b.name), |x, y| {
            a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb)
        })
    }

    /// Central extension of `A x B` by `{+1,-1}` with multiplication
    /// `(a,b,z)(a',b',z') = (aa', bb', gamma(a',b) z z')`.
    /// Element `(a, b, z)` sits at index `(a |B| + b) 2 + z`, with `z = 1`
    /// encoding the central element `-1`.
    pub fn central_extension(a: &FiniteGroup, b: &FiniteGroup, gamma: &[Vec<i8>]) -> Result<Self> {
        if gamma.len() != a.order || gamma.iter().any(|r| r.len() != b.order) {
            return invalid("gamma must be an |A| x |B| table");
        }
        if gamma.iter().flatten().any(|&s| s != 1 && s != -1) {
            return invalid("gamma must take values in {+1,-1}");
        }
        check_bicharacter(a, b, gamma)?;
        let nb = b.order;
        Ok(Self::from_fn(
            a.order * nb * 2,
            format!("WH({},{})", a.name, b.name),
            |x, y| {
                let (ab1, z1) = (x / 2, x % 2);
                let (ab2, z2) = (y / 2, y % 2);
                let (a1, b1) = (ab1 / nb, ab1 % nb);
                let (a2, b2) = (ab2 / nb, ab2 % nb);
                let flip = usize::from(gamma[a2][b1] == -1);
                (a.mul(a1, a2) * nb + b.mul(b1, b2)) * 2 + (z1 ^ z2 ^ flip)
            },
        ))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul[g * self.order + h] as usize
    }

    #[inline]
    pub fn inv(&self, g: usize) -> usize {
        self.inv[g] as usize
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|g| (0..self.order).all(|h| self.mul(g, h) == self.mul(h, g)))
    }

    /// Membership mask of the subgroup generated by `gens`.
    pub fn generated_subgroup(&self, gens: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(x) = stack.pop() {
            for &s in gens {
                let y = self.mul(x, s);
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    pub fn generates(&self, gens: &[usize]) -> bool {
        self.generated_subgroup(gens).iter().all(|&b| b)
    }

    /// Greedy generating set: adds the least element outside the subgroup
    /// generated so far.
    pub fn generating_set(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut mask = self.generated_subgroup(&gens);
        while let Some(x) = mask.iter().position(|&b| !b) {
            gens.push(x);
            mask = self.generated_subgroup(&gens);
        }
        gens
    }

    /// True when `elems` (as a set) is a subgroup.
    pub fn is_subgroup(&self, elems: &[usize]) -> bool {
        let mut mask = vec![false; self.order];
        for &e in elems {
            if e >= self.order {
                return false;
            }
            mask[e] = true;
        }
        mask[0]
            && elems
                .iter()
                .all(|&x| elems.iter().all(|&y| mask[self.mul(x, y)]))
    }

    /// True when `z` commutes with every element.
    pub fn is_central(&self, z: usize) -> bool {
        (0..self.order).all(|g| self.mul(g, z) == self.mul(z, g))
    }
}

fn check_bicharacter(a: &FiniteGroup, b: &FiniteGroup, gamma: &[Vec<i8>]) -> Result<()> {
    for a1 in 0..a.order() {
        for a2 in 0..a.order() {
            for bb in 0..b.order() {
                if gamma[a.mul(a1, a2)][bb] != gamma[a1][bb] * gamma[a2][bb] {
                    return invalid("gamma is not multiplicative in the first argument");
                }
            }
        }
    }
    for aa in 0..a.order() {
        for b1 in 0..b.order() {
            for b2 in 0..b.order() {
                if gamma[aa][b.mul(b1, b2)] != gamma[aa][b1] * gamma[aa][b2] {
                    return invalid("gamma is not multiplicative in the second argument");
                }
            }
        }
    }
    Ok(())
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_group_axioms(g: &FiniteGroup) {
        let n = g.order();
        for a in 0..n {
            assert_eq!(g.mul(a, 0), a);
            assert_eq!(g.mul(a, g.inv(a)), 0);
            for b in 0..n {
                for c in 0..n {
                    assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn symmetric_group_axioms() {
        let s3 = FiniteGroup::symmetric(3);
        assert_eq!(s3.order(), 6);
        assert!(!s3.is_abelian());
        assert_group_axioms(&s3);
        assert_eq!(FiniteGroup::symmetric(4).order(), 24);
    }

    #[test]
    fn dihedral_and_products() {
        let d4 = FiniteGroup::dihedral(4);
        assert_group_axioms(&d4);
        assert!(!d4.is_abelian());
        let p = FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(3));
        assert_group_axioms(&p);
        assert!(p.is_abelian());
        assert!(p.generates(&[4]));
    }

    #[test]
    fn weyl_heisenberg_extension() {
        let z2 = FiniteGroup::cyclic(2);
        let gamma = vec![vec![1, 1], vec![1, -1]];
        let wh = FiniteGroup::central_extension(&z2, &z2, &gamma).unwrap();
        assert_eq!(wh.order(), 8);
        assert_group_axioms(&wh);
        assert!(!wh.is_abelian());
        assert!(wh.is_central(1));
        // (1,0,0)(0,1,0) and (0,1,0)(1,0,0) differ by the central element.
        let x = 4;
        let z = 2;
        assert_eq!(wh.mul(x, z) ^ 1, wh.mul(z, x));
    }

    #[test]
    fn non_bicharacter_rejected() {
        let z2 = FiniteGroup::cyclic(2);
        let gamma = vec![vec![1, -1], vec![1, 1]];
        assert!(FiniteGroup::central_extension(&z2, &z2, &gamma).is_err());
    }

    #[test]
    fn table_validation() {
        let bad = vec![0, 1, 1, 1];
        assert!(FiniteGroup::from_table(2, bad).is_err());
        let good = vec![0, 1, 1, 0];
        assert_eq!(
            FiniteGroup::from_table(2, good).unwrap(),
            FiniteGroup::cyclic(2).clone_named("table(2)")
        );
    }

    impl FiniteGroup {
        fn clone_named(&self, name: &str) -> Self {
            let mut g = self.clone();
            g.name = name.into();
            g
        }
    }
}
