//! Linear codes over `F_q` and the measures they induce on `F_q^N`.
//!
//! A code is given by `N` generator rows `b_1, ..., b_N` of length `K`; the
//! codeword of a message `y in F_q^N` is `x_i = sum_j y_j b_j(i)`.

use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;

use crate::abelian::AbelianGroup;
use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::spectral::ProbMeasure;
use crate::Q;

/// Default cap on `q^N` for exhaustive distance enumeration.
pub const DISTANCE_CAP: u64 = 1 << 24;

#[derive(Clone, Debug)]
pub struct LinearCode {
    field: Arc<Field>,
    /// `N` rows of length `K`.
    generator: Vec<Vec<u32>>,
    len: usize,
    distance: Option<usize>,
}

/// How the characters of `F_q` are identified with `F_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualPairing {
    /// `chi_c(t) = exp(2 pi i <digits(c), digits(t)> / p)`.
    Coordinate,
    /// `chi_c(t) = exp(2 pi i Tr(c t) / p)`.
    Trace,
}

/// Measure on the dual of `F_q^N` built from a code, with the predicted
/// spectral-gap constant `((q-1)/q) (K/d)`.
#[derive(Clone, Debug)]
pub struct CodeMeasure {
    pub group: AbelianGroup,
    pub measure: ProbMeasure,
    /// The multiset of characters, as indices of the group.
    pub characters: Vec<usize>,
    pub predicted_kappa: Q,
}

impl LinearCode {
    /// Validates entries and full row rank.
    pub fn new(field: Arc<Field>, generator: Vec<Vec<u32>>) -> Result<Self> {
        let n = generator.len();
        if n == 0 {
            return invalid("a code needs at least one generator row");
        }
        let len = generator[0].len();
        if len == 0 || generator.iter().any(|r| r.len() != len) {
            return invalid("generator rows must have one common positive length");
        }
        if generator.iter().flatten().any(|&x| x >= field.q()) {
            return invalid("generator entry outside the field");
        }
        let rank = rank(&field, &generator);
        if rank < n {
            return Err(Error::RankDeficient { rank, rows: n });
        }
        Ok(LinearCode {
            field,
            generator,
            len,
            distance: None,
        })
    }

    /// Convenience constructor building the field from its order.
    pub fn over(q: u64, generator: Vec<Vec<u32>>) -> Result<Self> {
        Self::new(Arc::new(Field::new(q)?), generator)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// Code length `K`.
    pub fn length(&self) -> usize {
        self.len
    }

    /// Code dimension `N`.
    pub fn dimension(&self) -> usize {
        self.generator.len()
    }

    pub fn generator(&self) -> &[Vec<u32>] {
        &self.generator
    }

    pub fn cached_distance(&self) -> Option<usize> {
        self.distance
    }

    /// Records a distance certified elsewhere.
    pub fn with_distance(mut self, d: usize) -> Self {
        self.distance = Some(d);
        self
    }

    /// Exact minimum weight, cached.
    pub fn distance(&mut self) -> Result<usize> {
        if let Some(d) = self.distance {
            return Ok(d);
        }
        let d = min_weight(&self.field, &self.generator, DISTANCE_CAP)?;
        self.distance = Some(d);
        Ok(d)
    }

    pub fn encode(&self, message: &[u32]) -> Vec<u32> {
        let f = &self.field;
        (0..self.len)
            .map(|i| {
                message
                    .iter()
                    .zip(&self.generator)
                    .fold(0, |acc, (&y, row)| f.add(acc, f.mul(y, row[i])))
            })
            .collect()
    }

    /// Maps every symbol through a field isomorphism.
    pub fn map_field(&self, target: Arc<Field>, iso: &[u32]) -> Result<Self> {
        let generator = self
            .generator
            .iter()
            .map(|r| r.iter().map(|&x| iso[x as usize]).collect())
            .collect();
        let mut c = LinearCode::new(target, generator)?;
        c.distance = self.distance;
        Ok(c)
    }

    /// Repetition code `[K, 1, K]_2`.
    pub fn repetition(k: usize) -> Self {
        LinearCode::over(2, vec![vec![1; k]])
            .expect("repetition code")
            .with_distance(k)
    }

    /// Identity code `[N, N, 1]_2`.
    pub fn identity(n: usize) -> Self {
        let g = (0..n)
            .map(|i| (0..n).map(|j| u32::from(i == j)).collect())
            .collect();
        LinearCode::over(2, g)
            .expect("identity code")
            .with_distance(1)
    }

    /// Hamming `[7, 4, 3]_2` in systematic form.
    pub fn hamming74() -> Self {
        let g = vec![
            vec![1, 0, 0, 0, 1, 1, 0],
            vec![0, 1, 0, 0, 1, 0, 1],
            vec![0, 0, 1, 0, 0, 1, 1],
            vec![0, 0, 0, 1, 1, 1, 1],
        ];
        LinearCode::over(2, g).expect("hamming code")
    }

    /// Measure of the code on the dual of `F_q^N = (Z/p)^{kN}`: the uniform
    /// measure on the characters `y -> chi(sum_j y_j b_j(i))` for `i < K`
    /// and nontrivial `chi`. For `q = 2` these are the columns of the
    /// generator read as characters of `(Z/2)^N`.
    pub fn measure(&mut self, pairing: DualPairing) -> Result<CodeMeasure> {
        let d = self.distance()?;
        let f = self.field.clone();
        let (p, k) = (f.characteristic(), f.degree() as usize);
        let n = self.dimension();
        let group = AbelianGroup::new(&vec![p as i64; k * n])?;
        let functional = |c: u32, t: u32| -> u32 {
            match pairing {
                DualPairing::Coordinate => {
                    f.digits(c)
                        .iter()
                        .zip(f.digits(t))
                        .map(|(&a, b)| a * b)
                        .sum::<u32>()
                        % p
                }
                DualPairing::Trace => f.trace(f.mul(c, t)),
            }
        };
        // Basis of F_q over F_p: alpha^l, i.e. the element with digit l set.
        let basis: Vec<u32> = (0..k).map(|l| p.pow(l as u32)).collect();
        let mut characters = Vec::with_capacity(self.len * (f.q() as usize - 1));
        for i in 0..self.len {
            for c in 1..f.q() {
                let mut exps = Vec::with_capacity(k * n);
                for row in &self.generator {
                    for &al in &basis {
                        exps.push(functional(c, f.mul(al, row[i])) as u64);
                    }
                }
                characters.push(group.index_of(&exps)?);
            }
        }
        let measure = ProbMeasure::from_multiset(group.order(), &characters)?;
        let q = f.q() as i64;
        let predicted_kappa = Q::new(q - 1, q) * Q::new(self.len as i64, d as i64);
        Ok(CodeMeasure {
            group,
            measure,
            characters,
            predicted_kappa,
        })
    }
}

/// Rank over `F_q` by Gaussian elimination.
pub fn rank(f: &Field, rows: &[Vec<u32>]) -> usize {
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, piv);
        let inv = f.inv(m[r][c]).expect("nonzero pivot");
        let pivot_row: Vec<u32> = m[r].iter().map(|&x| f.mul(x, inv)).collect();
        m[r] = pivot_row.clone();
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let factor = m[i][c];
                for j in 0..cols {
                    m[i][j] = f.sub(m[i][j], f.mul(factor, pivot_row[j]));
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Minimum nonzero codeword weight, walking messages in modular Gray-code
/// order so each step adds one precomputed difference vector.
pub fn min_weight(f: &Field, generator: &[Vec<u32>], cap: u64) -> Result<usize> {
    let n = generator.len();
    let len = generator[0].len();
    let q = f.q() as u64;
    let total = q.checked_pow(n as u32).filter(|&t| t <= cap).ok_or_else(|| {
        Error::ResourceCap(format!("{q}^{n} codewords exceed the enumeration cap {cap}; use a randomized lower bound instead"))
    })?;
    // delta[t][e] = (e+1 - e) b_t with field elements indexed by integers.
    let delta: Vec<Vec<Vec<u32>>> = generator
        .iter()
        .map(|row| {
            (0..q as u32)
                .map(|e| {
                    let step = f.sub(((e as u64 + 1) % q) as u32, e);
                    row.iter().map(|&b| f.mul(step, b)).collect()
                })
                .collect()
        })
        .collect();
    let mut digits = vec![0u32; n];
    let mut counter = vec![0u32; n];
    let mut word = vec![0u32; len];
    let mut weight = 0usize;
    let mut best = usize::MAX;
    for _ in 1..total {
        let mut t = 0;
        while counter[t] as u64 == q - 1 {
            counter[t] = 0;
            t += 1;
        }
        counter[t] += 1;
        let dv = &delta[t][digits[t] as usize];
        digits[t] = ((digits[t] as u64 + 1) % q) as u32;
        for (x, &dx) in word.iter_mut().zip(dv) {
            if dx != 0 {
                let was = *x != 0;
                *x = f.add(*x, dx);
                let is = *x != 0;
                if was != is {
                    if is {
                        weight += 1;
                    } else {
                        weight -= 1;
                    }
                }
            }
        }
        if weight < best {
            best = weight;
        }
    }
    if best == usize::MAX {
        return Err(Error::Internal("code has no nonzero codewords".into()));
    }
    Ok(best)
}

/// Multilinear Reed-Muller code over `F_q`, `q = 2^k` with `k` odd: the
/// evaluations of the `2^m` monomials `prod_{i in S} x_i` on `F_q^m` in
/// lexicographic order, giving `[q^m, 2^m, >= q^m (1 - m/q)]`.
pub fn reed_muller_multilinear(q: u64, m: usize) -> Result<LinearCode> {
    let field = Arc::new(Field::new(q)?);
    if field.characteristic() != 2 || field.degree() % 2 == 0 {
        return invalid(format!("q = {q} must be 2^k with k odd"));
    }
    if m == 0 {
        return invalid("m must be positive");
    }
    let qq = q as usize;
    let points = qq
        .checked_pow(m as u32)
        .filter(|&x| x <= 1 << 20)
        .ok_or_else(|| Error::ResourceCap(format!("{q}^{m} points")))?;
    let mut generator = Vec::with_capacity(1 << m);
    for s in 0..(1usize << m) {
        let mut row = Vec::with_capacity(points);
        for pt in 0..points {
            // Lexicographic: the last coordinate varies fastest.
            let mut v = 1u32;
            for i in 0..m {
                if s >> i & 1 == 1 {
                    let xi = (pt / qq.pow((m - 1 - i) as u32)) % qq;
                    v = field.mul(v, xi as u32);
                }
            }
            row.push(v);
        }
        generator.push(row);
    }
    let mut code = LinearCode::new(field, generator)?;
    let bound = Q::from_integer(points as i64) * (Q::one() - Q::new(m as i64, q as i64));
    if (q as u128).pow(1 << m) <= DISTANCE_CAP as u128 {
        let d = code.distance()?;
        if Q::from_integer(d as i64) < bound {
            return Err(Error::Internal(format!(
                "distance {d} below the Schwarz-Zippel bound {bound}"
            )));
        }
    }
    Ok(code)
}

/// Rejection-samples full-rank generators until the exact distance reaches
/// `min_distance`.
pub fn random_code<R: Rng + ?Sized>(
    q: u64,
    len: usize,
    dim: usize,
    min_distance: usize,
    rng: &mut R,
    max_tries: usize,
) -> Result<LinearCode> {
    let field = Arc::new(Field::new(q)?);
    if dim == 0 || dim > len {
        return invalid("need 1 <= N <= K");
    }
    let mut best = 0;
    for _ in 0..max_tries {
        let g: Vec<Vec<u32>> = (0..dim)
            .map(|_| (0..len).map(|_| rng.random_range(0..field.q())).collect())
            .collect();
        let Ok(mut code) = LinearCode::new(field.clone(), g) else {
            continue;
        };
        let d = code.distance()?;
        if d >= min_distance {
            return Ok(code);
        }
        best = best.max(d);
    }
    Err(Error::SamplingFailure {
        tries: max_tries,
        best: format!("[{len},{dim},{best}]_{q}"),
    })
}

/// Every `N`-dimensional binary code of length `K`, one reduced row echelon
/// generator per subspace.
pub fn all_binary_codes(len: usize, dim: usize) -> Vec<LinearCode> {
    let field = Arc::new(Field::new(2).expect("F_2"));
    let mut out = Vec::new();
    let mut pivots = Vec::new();
    choose_pivots(len, dim, 0, &mut pivots, &mut |piv| {
        // Free entries: positions right of each pivot that are not pivots.
        let free: Vec<(usize, usize)> = (0..dim)
            .flat_map(|r| {
                ((piv[r] + 1)..len)
                    .filter(|c| !piv.contains(c))
                    .map(move |c| (r, c))
            })
            .collect();
        for mask in 0..(1u64 << free.len()) {
            let mut g = vec![vec![0u32; len]; dim];
            for r in 0..dim {
                g[r][piv[r]] = 1;
            }
            for (b, &(r, c)) in free.iter().enumerate() {
                g[r][c] = (mask >> b & 1) as u32;
            }
            out.push(LinearCode {
                field: field.clone(),
                generator: g,
                len,
                distance: None,
            });
        }
    });
    out
}

fn choose_pivots(
    len: usize,
    dim: usize,
    start: usize,
    cur: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if cur.len() == dim {
        f(cur);
        return;
    }
    for c in start..len {
        cur.push(c);
        choose_pivots(len, dim, c + 1, cur, f);
        cur.pop();
    }
}

/// Binary code whose generator columns are the given characters of
/// `(Z/2)^N` (as residue vectors): `b_j(i) = a_i(j)`.
pub fn code_from_characters(n: usize, family: &[Vec<u32>]) -> Result<LinearCode> {
    if family.iter().any(|a| a.len() != n) {
        return invalid("characters must have length N");
    }
    let g = (0..n)
        .map(|j| family.iter().map(|a| a[j]).collect())
        .collect();
    LinearCode::over(2, g)
}

/// `((q-1)/q) (K/d)` for given parameters.
pub fn predicted_kappa(q: u64, len: usize, d: usize) -> Q {
    if d == 0 {
        return Q::zero();
    }
    Q::new(q as i64 - 1, q as i64) * Q::new(len as i64, d as i64)
}
