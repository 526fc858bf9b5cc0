//! Synchronous non-local games, strategies in tracial matrix algebras, and
//! the rigidity estimates: commutation, magic square, Pauli PVMs, and the
//! combined Pauli game built from a pair of binary codes.
//!
//! Sign answers are stored as indices: 0 means `+1`, 1 means `-1`. Elements
//! of `(Z/2)^N` and its dual are bit strings with coordinate 0 in the most
//! significant bit, matching [`AbelianGroup::elementary_two`], so that
//! `<chi, h> = (-1)^popcount(chi & h)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abelian::AbelianGroup;
use crate::algebra::{Pvm, TracialAlgebra};
use crate::codes::{all_binary_codes, random_code, DualPairing, LinearCode};
use crate::error::{invalid, Error, Result};
use crate::fourier::GroupFourier;
use crate::io;
use crate::linalg::{eigh, expm_i_hermitian, kron, op_norm};
use crate::spectral::{kappa_abelian, ProbMeasure};
use crate::stability::{
    modulations, round_pauli_pair, translations, GhOptions, PauliRounding, Route,
};
use crate::{CMat, C64, Q};

pub const PVM_TOL: f64 = 1e-9;
/// Line products of the magic-square grid must match `alpha` this closely.
pub const GRID_TOL: f64 = 1e-10;
pub const COMMUTATION_PROJECTIONS: f64 = 16.0;
pub const COMMUTATION_UNITARY: f64 = 64.0;
pub const ANTICOMMUTATION: f64 = 432.0;
/// `sum_l eta_l^2` is exactly this multiple of eps.
pub const LINE_DEFECT: f64 = 72.0;
/// The line-defect bound stated alongside the anticommutation estimate.
pub const LINE_DEFECT_STATED: f64 = 24.0;
pub const PAULI_COMMUTATION: f64 = 1320.0;
/// Decision tables are expanded only for answer sets up to `2^6`.
pub const TABLE_CAP_N: usize = 6;
/// Upper limit on the total number of matrix entries in the Pauli PVMs.
pub const PAULI_ENTRY_CAP: usize = 1 << 25;
/// Tensor-route amplification checks are skipped above this dimension.
pub const TENSOR_ROUTE_CAP: usize = 256;

fn parity(x: usize) -> usize {
    (x.count_ones() & 1) as usize
}

/// `+1` for answer index 0, `-1` for 1.
pub fn sign_of(idx: usize) -> f64 {
    if idx == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The `idx`-th sign triple with product `alpha`.
pub fn line_answer(alpha: i8, idx: usize) -> [i8; 3] {
    let want = usize::from(alpha < 0);
    let mask = (0..8usize)
        .filter(|m| parity(*m) == want)
        .nth(idx)
        .expect("line answers have 4 elements");
    [0, 1, 2].map(|j| if mask >> j & 1 == 1 { -1 } else { 1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnswerSet {
    Signs,
    Labels {
        size: usize,
    },
    /// `A1 x A2`, with `(a, b)` at `a * second + b`.
    Pairs {
        first: usize,
        second: usize,
    },
    /// Sign triples with product `alpha`, see [`line_answer`].
    Line {
        alpha: i8,
    },
    /// `(Z/2)^n` as bit strings.
    Group {
        n: usize,
    },
}

impl AnswerSet {
    pub fn size(&self) -> usize {
        match *self {
            AnswerSet::Signs => 2,
            AnswerSet::Labels { size } => size,
            AnswerSet::Pairs { first, second } => first * second,
            AnswerSet::Line { .. } => 4,
            AnswerSet::Group { n } => 1 << n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Table {
        accepted: Vec<(usize, usize)>,
    },
    /// `D(x, y, a, (a', b')) = 1_{a = a'}`.
    PairFirst {
        second: usize,
    },
    /// `D(x, y, b, (a', b')) = 1_{b = b'}`.
    PairSecond {
        second: usize,
    },
    /// `D(c, l, a, b) = 1_{a = b_c}` with `c` at position `pos` of the line.
    LineEntry {
        pos: usize,
        alpha: i8,
    },
    /// `D(PX, q, chi, e) = 1_{<chi, alpha> = e}`.
    PauliX {
        alpha: usize,
    },
    /// `D(PZ, q, h, e) = 1_{<beta, h> = e}`.
    PauliZ {
        beta: usize,
    },
}

impl Rule {
    pub fn accepts(&self, a: usize, b: usize) -> bool {
        match self {
            Rule::Table { accepted } => accepted.binary_search(&(a, b)).is_ok(),
            Rule::PairFirst { second } => a == b / second,
            Rule::PairSecond { second } => a == b % second,
            Rule::LineEntry { pos, alpha } => sign_of(a) as i8 == line_answer(*alpha, b)[*pos],
            Rule::PauliX { alpha } => parity(a & alpha) == b,
            Rule::PauliZ { beta } => parity(a & beta) == b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub label: String,
    pub answers: AnswerSet,
}

/// One point `(x, y)` of the support of the question distribution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPair {
    pub x: usize,
    pub y: usize,
    #[serde(with = "io::rational")]
    pub weight: Q,
    pub rule: Rule,
    /// The rule is stated for `(y, x)`; `D(x,y,a,b) = rule(b,a)`.
    #[serde(default)]
    pub transposed: bool,
    /// Sampling branch in the combined game (1, 2 or 3); 0 elsewhere.
    #[serde(default)]
    pub case: u8,
}

impl QuestionPair {
    pub fn accepts(&self, a: usize, b: usize) -> bool {
        if self.transposed {
            self.rule.accepts(b, a)
        } else {
            self.rule.accepts(a, b)
        }
    }
}

/// A point of the probability space driving the combined game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaPoint {
    pub alpha: usize,
    pub beta: usize,
    #[serde(with = "io::rational")]
    pub weight: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaBlock {
    pub point: OmegaPoint,
    /// `<beta, alpha> = -1`: the block is a magic square, else a
    /// commutation game.
    pub anticommuting: bool,
    /// Index of the first question of the block.
    pub offset: usize,
}

impl OmegaBlock {
    /// Questions of the block carrying the two observables.
    pub fn distinguished(&self) -> [usize; 2] {
        if self.anticommuting {
            [self.offset + MS_X1, self.offset + MS_X2]
        } else {
            [self.offset, self.offset + 1]
        }
    }

    pub fn num_questions(&self) -> usize {
        if self.anticommuting {
            15
        } else {
            3
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliLayout {
    /// `H = (Z/2)^n`.
    pub n: usize,
    pub px: usize,
    pub pz: usize,
    pub blocks: Vec<OmegaBlock>,
    /// `c`: spectral-gap constant of the law of `alpha`.
    #[serde(with = "io::rational")]
    pub kappa_alpha: Q,
    /// `c'`: spectral-gap constant of the law of `beta`.
    #[serde(with = "io::rational")]
    pub kappa_beta: Q,
}

impl PauliLayout {
    pub fn group(&self) -> AbelianGroup {
        AbelianGroup::elementary_two(self.n)
    }

    pub fn law_alpha(&self) -> Result<ProbMeasure> {
        self.law(|b| b.point.alpha)
    }

    pub fn law_beta(&self) -> Result<ProbMeasure> {
        self.law(|b| b.point.beta)
    }

    fn law(&self, f: impl Fn(&OmegaBlock) -> usize) -> Result<ProbMeasure> {
        let mut w = vec![Q::zero(); 1 << self.n];
        for b in &self.blocks {
            w[f(b)] += b.point.weight;
        }
        ProbMeasure::new(w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Game {
    pub name: String,
    pub questions: Vec<Question>,
    pub pairs: Vec<QuestionPair>,
    /// The two questions whose observables the rigidity estimates concern.
    #[serde(default)]
    pub distinguished: Option<[usize; 2]>,
    #[serde(default)]
    pub pauli: Option<PauliLayout>,
}

impl Game {
    pub fn num_questions(&self) -> usize {
        self.questions.len()
    }

    /// Weights sum to 1, indices are in range, and `D` agrees with itself
    /// wherever it is defined twice.
    pub fn validate(&self) -> Result<()> {
        let total: Q = self.pairs.iter().map(|p| p.weight).sum();
        if total != Q::one() {
            return invalid(format!("question weights sum to {total}"));
        }
        let nq = self.questions.len();
        let mut by_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, p) in self.pairs.iter().enumerate() {
            if p.x >= nq || p.y >= nq {
                return invalid("question index out of range");
            }
            if p.weight <= Q::zero() {
                return invalid("question weights must be positive");
            }
            by_pair.entry((p.x, p.y)).or_default().push(i);
        }
        for (i, p) in self.pairs.iter().enumerate() {
            let (na, nb) = (
                self.questions[p.x].answers.size(),
                self.questions[p.y].answers.size(),
            );
            if na * nb > 1 << 16 {
                continue;
            }
            let same = by_pair
                .get(&(p.x, p.y))
                .into_iter()
                .flatten()
                .filter(|&&j| j > i);
            for &j in same {
                let q = &self.pairs[j];
                if (0..na).any(|a| (0..nb).any(|b| p.accepts(a, b) != q.accepts(a, b))) {
                    return invalid(format!(
                        "decision defined twice inconsistently at ({}, {})",
                        p.x, p.y
                    ));
                }
            }
            if p.x != p.y {
                for &j in by_pair.get(&(p.y, p.x)).into_iter().flatten() {
                    let q = &self.pairs[j];
                    if (0..na).any(|a| (0..nb).any(|b| p.accepts(a, b) != q.accepts(b, a))) {
                        return invalid(format!("decision not symmetric at ({}, {})", p.x, p.y));
                    }
                }
            }
        }
        Ok(())
    }

    /// `mu(x) = (1/2) sum_y mu(x,y) + mu(y,x)`.
    pub fn marginal(&self) -> Vec<Q> {
        let half = Q::new(1, 2);
        let mut m = vec![Q::zero(); self.questions.len()];
        for p in &self.pairs {
            m[p.x] += p.weight * half;
            m[p.y] += p.weight * half;
        }
        m
    }

    /// Probability that `x` is one of the two questions asked.
    pub fn appearance(&self) -> Vec<Q> {
        let mut m = vec![Q::zero(); self.questions.len()];
        for p in &self.pairs {
            m[p.x] += p.weight;
            if p.y != p.x {
                m[p.y] += p.weight;
            }
        }
        m
    }

    /// Same game with every rule replaced by its accepted-pair table.
    pub fn expand_tables(&self) -> Result<Game> {
        let cap = 1 << TABLE_CAP_N;
        let mut g = self.clone();
        for p in &mut g.pairs {
            let (na, nb) = (
                self.questions[p.x].answers.size(),
                self.questions[p.y].answers.size(),
            );
            if na > cap || nb > cap {
                return Err(Error::ResourceCap(format!(
                    "answer sets above {cap} are not expanded"
                )));
            }
            let mut accepted = Vec::new();
            for a in 0..na {
                for b in 0..nb {
                    if p.accepts(a, b) {
                        accepted.push((a, b));
                    }
                }
            }
            p.rule = Rule::Table { accepted };
            p.transposed = false;
        }
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Game> {
        let g: Game = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

/// `mu' = (mu + mu~)/2` with `D` extended by symmetry.
pub fn symmetrize(game: &Game) -> Game {
    let half = Q::new(1, 2);
    let mut pairs: Vec<QuestionPair> = Vec::new();
    let mut index: HashMap<(usize, usize, bool, u8, String), usize> = HashMap::new();
    for p in &game.pairs {
        for (x, y, t) in [(p.x, p.y, p.transposed), (p.y, p.x, !p.transposed)] {
            let key = (x, y, t, p.case, format!("{:?}", p.rule));
            match index.get(&key) {
                Some(&i) => pairs[i].weight += p.weight * half,
                None => {
                    index.insert(key, pairs.len());
                    pairs.push(QuestionPair {
                        x,
                        y,
                        weight: p.weight * half,
                        rule: p.rule.clone(),
                        transposed: t,
                        case: p.case,
                    });
                }
            }
        }
    }
    Game {
        name: format!("{} (symmetrized)", game.name),
        pairs,
        ..game.clone()
    }
}

/// A PVM per question, all in one algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct SynchronousStrategy {
    pub algebra: TracialAlgebra,
    pub pvms: Vec<Pvm>,
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    algebra: TracialAlgebra,
    pvms: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl SynchronousStrategy {
    pub fn new(algebra: TracialAlgebra, pvms: Vec<Pvm>, tol: f64) -> Result<Self> {
        for p in &pvms {
            p.validate(tol)?;
            if p.dim() != algebra.dim() || p.projections.iter().any(|x| !algebra.contains(x, tol)) {
                return invalid("PVM does not live in the strategy's algebra");
            }
        }
        Ok(SynchronousStrategy { algebra, pvms })
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Every question has a PVM with the right number of outcomes.
    pub fn check_for(&self, game: &Game) -> Result<()> {
        if self.pvms.len() != game.questions.len() {
            return invalid(format!(
                "strategy has {} PVMs for {} questions",
                self.pvms.len(),
                game.questions.len()
            ));
        }
        for (q, p) in game.questions.iter().zip(&self.pvms) {
            if q.answers.size() != p.len() {
                return invalid(format!(
                    "question {} has {} answers, PVM has {}",
                    q.label,
                    q.answers.size(),
                    p.len()
                ));
            }
        }
        Ok(())
    }

    /// Restriction to a list of questions.
    pub fn restrict(&self, questions: &[usize]) -> SynchronousStrategy {
        SynchronousStrategy {
            algebra: self.algebra.clone(),
            pvms: questions.iter().map(|&q| self.pvms[q].clone()).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let f = StrategyFile {
            algebra: self.algebra.clone(),
            pvms: self
                .pvms
                .iter()
                .map(|p| p.projections.iter().map(io::matrix::to_rows).collect())
                .collect(),
        };
        serde_json::to_string(&f).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: StrategyFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let pvms = f
            .pvms
            .iter()
            .map(|p| {
                Ok(Pvm {
                    projections: p
                        .iter()
                        .map(|m| io::matrix::from_rows(m))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SynchronousStrategy::new(f.algebra, pvms, 1e-6)
    }
}

/// `Re tau(a b)` in `O(dim^2)`.
pub fn trace_product(alg: &TracialAlgebra, a: &CMat, b: &CMat) -> f64 {
    let n = alg.dim();
    let mut s = 0.0;
    for i in 0..n {
        let mut r = C64::new(0.0, 0.0);
        for j in 0..n {
            r += a[(i, j)] * b[(j, i)];
        }
        s += alg.coord_density(i) * r.re;
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueMode {
    /// Pauli consistency rules through the observable `U(alpha)`.
    Shortcut,
    /// The literal double sum over answers.
    Direct,
}

/// Winning probability of each question pair, unweighted.
pub fn pair_values(game: &Game, strat: &SynchronousStrategy, mode: ValueMode) -> Result<Vec<f64>> {
    strat.check_for(game)?;
    let alg = &strat.algebra;
    let n = alg.dim();
    let mut out = Vec::with_capacity(game.pairs.len());
    for p in &game.pairs {
        let (px, py) = (&strat.pvms[p.x], &strat.pvms[p.y]);
        let pauli = match (&p.rule, mode) {
            (Rule::PauliX { alpha: s } | Rule::PauliZ { beta: s }, ValueMode::Shortcut) => Some(*s),
            _ => None,
        };
        let v = match pauli {
            Some(s) => {
                // The group-side PVM is the first argument of the rule.
                let (group, signs) = if p.transposed { (py, px) } else { (px, py) };
                let mut u = CMat::zeros(n, n);
                for (chi, proj) in group.projections.iter().enumerate() {
                    u += proj * C64::new(sign_of(parity(chi & s)), 0.0);
                }
                let o = &signs.projections[0] - &signs.projections[1];
                0.5 * (1.0 + trace_product(alg, &u, &o))
            }
            None => {
                let mut s = 0.0;
                for (a, pa) in px.projections.iter().enumerate() {
                    for (b, pb) in py.projections.iter().enumerate() {
                        if p.accepts(a, b) {
                            s += trace_product(alg, pa, pb);
                        }
                    }
                }
                s
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// `int sum_{a,b} D(x,y,a,b) tau(P^x_a P^y_b) dmu(x,y)`.
pub fn value(game: &Game, strat: &SynchronousStrategy) -> Result<f64> {
    value_with(game, strat, ValueMode::Shortcut)
}

pub fn value_with(game: &Game, strat: &SynchronousStrategy, mode: ValueMode) -> Result<f64> {
    let v = pair_values(game, strat, mode)?;
    Ok(game
        .pairs
        .iter()
        .zip(&v)
        .map(|(p, v)| crate::io::q_to_f64(&p.weight) * v)
        .sum())
}

/// One-dimensional strategy answering `assignment[x]` to question `x`.
pub fn deterministic_strategy(game: &Game, assignment: &[usize]) -> Result<SynchronousStrategy> {
    if assignment.len() != game.questions.len() {
        return invalid("one answer per question is required");
    }
    let pvms = game
        .questions
        .iter()
        .zip(assignment)
        .map(|(q, &a)| {
            let mut projections = vec![CMat::zeros(1, 1); q.answers.size()];
            projections[a][(0, 0)] = C64::new(1.0, 0.0);
            Pvm { projections }
        })
        .collect();
    SynchronousStrategy::new(TracialAlgebra::matrix(1), pvms, PVM_TOL)
}

/// Exact best value over deterministic strategies, by enumeration.
pub fn classical_value(game: &Game, cap: u64) -> Result<(Q, Vec<usize>)> {
    let sizes: Vec<usize> = game.questions.iter().map(|q| q.answers.size()).collect();
    let total = sizes
        .iter()
        .try_fold(1u64, |acc, &s| acc.checked_mul(s as u64))
        .unwrap_or(u64::MAX);
    if total > cap {
        return Err(Error::ResourceCap(format!(
            "{total} deterministic strategies exceed {cap}"
        )));
    }
    let mut assign = vec![0usize; sizes.len()];
    let mut best = (Q::new(-1, 1), assign.clone());
    loop {
        let v: Q = game
            .pairs
            .iter()
            .filter(|p| p.accepts(assign[p.x], assign[p.y]))
            .map(|p| p.weight)
            .sum();
        if v > best.0 {
            best = (v, assign.clone());
        }
        let mut i = 0;
        loop {
            if i == sizes.len() {
                return Ok(best);
            }
            assign[i] += 1;
            if assign[i] < sizes[i] {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// The three quantities defining closeness of strategies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClosenessCertificate {
    /// `tau(1 - w* w)`.
    pub isometry_defect: f64,
    /// `tau'(P - w w*)` with `tau'` normalized on the corner.
    pub range_defect: f64,
    /// `E_x sum_a |P^x_a - w* Q^x_a w|_2^2`, uniform over the questions.
    pub strategy_distance: f64,
    /// `tau_inf(P)`.
    pub corner_trace: f64,
}

impl ClosenessCertificate {
    /// The smallest `eps` for which the strategies are `eps`-close.
    pub fn epsilon(&self) -> f64 {
        self.isometry_defect
            .max(self.range_defect)
            .max(self.strategy_distance)
    }
}

/// Closeness of `a` (on `M`) to `b` (on a corner of an amplification of
/// `M`) witnessed by `w`.
pub fn closeness(
    a: &SynchronousStrategy,
    b: &SynchronousStrategy,
    w: &CMat,
) -> Result<ClosenessCertificate> {
    let (m, c) = (&a.algebra, &b.algebra);
    if w.nrows() != c.dim() || w.ncols() != m.dim() || a.pvms.len() != b.pvms.len() {
        return invalid("strategies and witness have incompatible shapes");
    }
    let corner_trace = c.total_trace();
    let isometry_defect = m.trace(&(m.identity() - w.adjoint() * w)).re;
    let range_defect = if corner_trace > 0.0 {
        c.trace(&(c.identity() - w * w.adjoint())).re / corner_trace
    } else {
        0.0
    };
    let mut dist = 0.0;
    for (pa, pb) in a.pvms.iter().zip(&b.pvms) {
        if pa.len() != pb.len() {
            return invalid("answer sets differ");
        }
        for (x, y) in pa.projections.iter().zip(&pb.projections) {
            dist += m.norm2_sq(&(x - w.adjoint() * y * w));
        }
    }
    let strategy_distance = if a.pvms.is_empty() {
        0.0
    } else {
        dist / a.pvms.len() as f64
    };
    Ok(ClosenessCertificate {
        isometry_defect,
        range_defect,
        strategy_distance,
        corner_trace,
    })
}

/// Both sides of `E_h |U(h) - w* V(h) w|^2 = sum_chi |P_chi - w* Q_chi w|^2`
/// for representations of a finite abelian group.
pub fn representation_closeness_identity(
    alg: &TracialAlgebra,
    group: &AbelianGroup,
    u: &[CMat],
    v: &[CMat],
    w: &CMat,
) -> Result<(f64, f64)> {
    if u.len() != group.order() || v.len() != group.order() {
        return invalid("representations must be indexed by the group");
    }
    let lhs = u
        .iter()
        .zip(v)
        .map(|(a, b)| alg.norm2_sq(&(a - w.adjoint() * b * w)))
        .sum::<f64>()
        / u.len() as f64;
    let (p, q) = (group.pvm_from_values(u), group.pvm_from_values(v));
    let rhs = p
        .projections
        .iter()
        .zip(&q.projections)
        .map(|(a, b)| alg.norm2_sq(&(a - w.adjoint() * b * w)))
        .sum();
    Ok((lhs, rhs))
}

/// Commutation game on answer sets of sizes `k1`, `k2`: questions
/// `x1, x2, y` with `A(y) = A1 x A2`.
pub fn commutation_game(k1: usize, k2: usize) -> Result<Game> {
    if k1 == 0 || k2 == 0 {
        return invalid("answer sets must be nonempty");
    }
    let set = |k| {
        if k == 2 {
            AnswerSet::Signs
        } else {
            AnswerSet::Labels { size: k }
        }
    };
    let half = Q::new(1, 2);
    Ok(Game {
        name: format!("commutation({k1},{k2})"),
        questions: vec![
            Question {
                label: "x1".into(),
                answers: set(k1),
            },
            Question {
                label: "x2".into(),
                answers: set(k2),
            },
            Question {
                label: "y".into(),
                answers: AnswerSet::Pairs {
                    first: k1,
                    second: k2,
                },
            },
        ],
        pairs: vec![
            QuestionPair {
                x: 0,
                y: 2,
                weight: half,
                rule: Rule::PairFirst { second: k2 },
                transposed: false,
                case: 0,
            },
            QuestionPair {
                x: 1,
                y: 2,
                weight: half,
                rule: Rule::PairSecond { second: k2 },
                transposed: false,
                case: 0,
            },
        ],
        distinguished: Some([0, 1]),
        pauli: None,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutationBound {
    pub eps: f64,
    /// `sum_{a,b} |[p_a, q_b]|_2^2`.
    pub lhs_projections: f64,
    pub bound_projections: f64,
    /// `|[p_1 - p_{-1}, q_1 - q_{-1}]|_2^2` for sign answers.
    pub lhs_unitary: Option<f64>,
    pub bound_unitary: Option<f64>,
}

impl CommutationBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs_projections <= self.bound_projections + slack
            && self
                .lhs_unitary
                .zip(self.bound_unitary)
                .is_none_or(|(l, b)| l <= b + slack)
    }
}

/// Commutator estimates for a strategy on [`commutation_game`], with
/// `eps = 1 - value`.
pub fn commutation_bound_check(strat: &SynchronousStrategy) -> Result<CommutationBound> {
    if strat.pvms.len() != 3 {
        return invalid("a commutation-game strategy has three PVMs");
    }
    let (k1, k2) = (strat.pvms[0].len(), strat.pvms[1].len());
    let game = commutation_game(k1, k2)?;
    let eps = 1.0 - value(&game, strat)?;
    let alg = &strat.algebra;
    let (p, q) = (&strat.pvms[0].projections, &strat.pvms[1].projections);
    let mut lhs = 0.0;
    for pa in p {
        for qb in q {
            lhs += alg.norm2_sq(&(pa * qb - qb * pa));
        }
    }
    let unitary = (k1 == 2 && k2 == 2).then(|| {
        let (u, v) = (&p[0] - &p[1], &q[0] - &q[1]);
        alg.norm2_sq(&(&u * &v - &v * &u))
    });
    Ok(CommutationBound {
        eps,
        lhs_projections: lhs,
        bound_projections: COMMUTATION_PROJECTIONS * eps,
        lhs_unitary: unitary,
        bound_unitary: unitary.map(|_| COMMUTATION_UNITARY * eps),
    })
}

/// Cells of each line: rows `h1..h3`, then columns `v1..v3`; cell `(r, c)`
/// is question `3 r + c`, line `l` is question `9 + l`.
pub const MS_LINES: [[usize; 3]; 6] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
];
/// Every line has product `+1` except the last column.
pub const MS_ALPHA: [i8; 6] = [1, 1, 1, 1, 1, -1];
/// Cells `(1,1)` and `(2,2)`.
pub const MS_X1: usize = 0;
pub const MS_X2: usize = 4;

pub fn magic_square_game() -> Game {
    let mut questions: Vec<Question> = (0..9)
        .map(|c| Question {
            label: format!("c{}{}", c / 3 + 1, c % 3 + 1),
            answers: AnswerSet::Signs,
        })
        .collect();
    for (l, &alpha) in MS_ALPHA.iter().enumerate() {
        let label = if l < 3 {
            format!("h{}", l + 1)
        } else {
            format!("v{}", l - 2)
        };
        questions.push(Question {
            label,
            answers: AnswerSet::Line { alpha },
        });
    }
    let w = Q::new(1, 18);
    let mut pairs = Vec::with_capacity(18);
    for (l, cells) in MS_LINES.iter().enumerate() {
        for (pos, &c) in cells.iter().enumerate() {
            pairs.push(QuestionPair {
                x: c,
                y: 9 + l,
                weight: w,
                rule: Rule::LineEntry {
                    pos,
                    alpha: MS_ALPHA[l],
                },
                transposed: false,
                case: 0,
            });
        }
    }
    Game {
        name: "magic square".into(),
        questions,
        pairs,
        distinguished: Some([MS_X1, MS_X2]),
        pauli: None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnticommutationBound {
    pub eps: f64,
    /// `|U V + V U|_2^2` at the distinguished cells.
    pub lhs: f64,
    /// `432 eps`.
    pub bound: f64,
    /// `eta_l^2 = sum_{c in l} |U^c - U^l(c)|_2^2` per line.
    pub eta_line_sq: Vec<f64>,
    /// `sum_l eta_l^2`, identically `72 eps`.
    pub eta_sum: f64,
    /// `24 eps`, the line-defect bound as stated.
    pub eta_stated_bound: f64,
    /// `18 sum_l eta_l^2 = 1296 eps`, what the chain of estimates yields.
    pub chain_bound: f64,
}

impl AnticommutationBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.bound + slack
    }
}

/// Anticommutation estimate for a strategy on [`magic_square_game`].
pub fn anticommutation_bound_check(strat: &SynchronousStrategy) -> Result<AnticommutationBound> {
    let game = magic_square_game();
    let eps = 1.0 - value(&game, strat)?;
    let alg = &strat.algebra;
    let obs = |q: usize| &strat.pvms[q].projections[0] - &strat.pvms[q].projections[1];
    let mut eta_line_sq = Vec::with_capacity(6);
    for (l, cells) in MS_LINES.iter().enumerate() {
        let mut s = 0.0;
        for (pos, &c) in cells.iter().enumerate() {
            let mut ul = CMat::zeros(alg.dim(), alg.dim());
            for (b, proj) in strat.pvms[9 + l].projections.iter().enumerate() {
                ul += proj * C64::new(line_answer(MS_ALPHA[l], b)[pos] as f64, 0.0);
            }
            s += alg.norm2_sq(&(obs(c) - ul));
        }
        eta_line_sq.push(s);
    }
    let (u, v) = (obs(MS_X1), obs(MS_X2));
    let eta_sum: f64 = eta_line_sq.iter().sum();
    Ok(AnticommutationBound {
        eps,
        lhs: alg.norm2_sq(&(&u * &v + &v * &u)),
        bound: ANTICOMMUTATION * eps,
        eta_line_sq,
        eta_sum,
        eta_stated_bound: LINE_DEFECT_STATED * eps,
        chain_bound: 18.0 * eta_sum,
    })
}

/// Mermin-Peres grid from anticommuting involutions `p, q` and an
/// anticommuting pair `xa, za` commuting with both:
///
/// ```text
///   p      xa     p xa
///   za     q      q za
///   p za   q xa   -p q xa za
/// ```
///
/// Each line is a commuting triple with product `alpha(l)`; this is checked.
pub fn mermin_peres_grid(p: &CMat, q: &CMat, xa: &CMat, za: &CMat) -> Result<Vec<CMat>> {
    let grid = vec![
        p.clone(),
        xa.clone(),
        p * xa,
        za.clone(),
        q.clone(),
        q * za,
        p * za,
        q * xa,
        -(p * q * xa * za),
    ];
    verify_grid(&grid)?;
    Ok(grid)
}

/// Involutions, self-adjointness, commutation within lines and line
/// products, all to [`GRID_TOL`].
pub fn verify_grid(grid: &[CMat]) -> Result<()> {
    let n = grid[0].nrows();
    let id = CMat::identity(n, n);
    let scale = (n as f64).sqrt();
    let mut worst: f64 = 0.0;
    for o in grid {
        worst = worst
            .max((o - o.adjoint()).norm())
            .max((o * o - &id).norm());
    }
    for (l, cells) in MS_LINES.iter().enumerate() {
        let [a, b, c] = cells.map(|i| &grid[i]);
        worst = worst
            .max((a * b - b * a).norm())
            .max((a * c - c * a).norm())
            .max((b * c - c * b).norm());
        worst = worst.max((a * b * c - &id * C64::new(MS_ALPHA[l] as f64, 0.0)).norm());
    }
    if worst / scale > GRID_TOL {
        return Err(Error::Internal(format!(
            "magic-square grid fails verification, residual {worst:e}"
        )));
    }
    Ok(())
}

/// The 15 PVMs of a grid: cells by their spectral projections, lines by
/// joint spectral projections of their commuting triples.
pub fn grid_pvms(grid: &[CMat]) -> Vec<Pvm> {
    let n = grid[0].nrows();
    let id = CMat::identity(n, n);
    let half = C64::new(0.5, 0.0);
    let mut out: Vec<Pvm> = grid
        .iter()
        .map(|o| Pvm {
            projections: vec![(&id + o) * half, (&id - o) * half],
        })
        .collect();
    for (l, cells) in MS_LINES.iter().enumerate() {
        let projections = (0..4)
            .map(|k| {
                let b = line_answer(MS_ALPHA[l], k);
                let mut m = id.clone();
                for (pos, &c) in cells.iter().enumerate() {
                    m = m * (&id + &grid[c] * C64::new(b[pos] as f64, 0.0)) * half;
                }
                m
            })
            .collect();
        out.push(Pvm { projections });
    }
    out
}

fn pauli_x() -> CMat {
    CMat::from_fn(2, 2, |i, j| C64::new(if i != j { 1.0 } else { 0.0 }, 0.0))
}

fn pauli_z() -> CMat {
    CMat::from_fn(2, 2, |i, j| {
        C64::new(
            if i == j {
                if i == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            },
            0.0,
        )
    })
}

/// Two-qubit Mermin-Peres strategy for [`magic_square_game`].
pub fn honest_magic_square_strategy() -> Result<SynchronousStrategy> {
    let i2 = CMat::identity(2, 2);
    let grid = mermin_peres_grid(
        &kron(&pauli_x(), &i2),
        &kron(&pauli_z(), &i2),
        &kron(&i2, &pauli_x()),
        &kron(&i2, &pauli_z()),
    )?;
    SynchronousStrategy::new(TracialAlgebra::matrix(4), grid_pvms(&grid), PVM_TOL)
}

fn observable_pvm(o: &CMat) -> Pvm {
    let n = o.nrows();
    let id = CMat::identity(n, n);
    let half = C64::new(0.5, 0.0);
    Pvm {
        projections: vec![(&id + o) * half, (&id - o) * half],
    }
}

/// Joint spectral projections of commuting involutions.
fn joint_pvm(o1: &CMat, o2: &CMat) -> Pvm {
    let (p, q) = (observable_pvm(o1), observable_pvm(o2));
    let mut projections = Vec::with_capacity(4);
    for a in &p.projections {
        for b in &q.projections {
            projections.push(a * b);
        }
    }
    Pvm { projections }
}

/// Perfect strategy for the sign commutation game from two commuting
/// involutions.
pub fn commuting_strategy(o1: &CMat, o2: &CMat) -> Result<SynchronousStrategy> {
    let alg = TracialAlgebra::matrix(o1.nrows());
    SynchronousStrategy::new(
        alg,
        vec![observable_pvm(o1), observable_pvm(o2), joint_pvm(o1, o2)],
        PVM_TOL,
    )
}

/// `(tau^X_chi)_chi` and `(tau^Z_a)_a` on `M_{2^n}`, as tensor products of
/// the one-qubit projections.
pub fn pauli_pvms(n: usize, dim_cap: usize) -> Result<(Pvm, Pvm)> {
    let dim = 1usize << n;
    if dim > dim_cap || 2 * dim * dim * dim > PAULI_ENTRY_CAP {
        return Err(Error::ResourceCap(format!(
            "Pauli PVMs on {n} qubits exceed the caps"
        )));
    }
    let h = C64::new(0.5, 0.0);
    let x1 = [
        CMat::from_element(2, 2, h),
        CMat::from_fn(2, 2, |i, j| if i == j { h } else { -h }),
    ];
    let z1 = [
        CMat::from_fn(2, 2, |i, j| {
            C64::new(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0)
        }),
        CMat::from_fn(2, 2, |i, j| {
            C64::new(if i == 1 && j == 1 { 1.0 } else { 0.0 }, 0.0)
        }),
    ];
    let build = |one: &[CMat; 2]| -> Vec<CMat> {
        (0..dim)
            .map(|a| {
                let mut m = CMat::identity(1, 1);
                for i in 0..n {
                    m = kron(&m, &one[a >> (n - 1 - i) & 1]);
                }
                m
            })
            .collect()
    };
    Ok((
        Pvm {
            projections: build(&x1),
        },
        Pvm {
            projections: build(&z1),
        },
    ))
}

/// Questions `PX`, `PZ`, then one block per point of `omega`: the
/// commutation game when `<beta, alpha> = 1`, the magic square otherwise.
pub fn combined_game(n: usize, omega: &[OmegaPoint]) -> Result<Game> {
    let size = 1usize << n;
    if n == 0 || n > 16 {
        return invalid("need 1 <= N <= 16");
    }
    let total: Q = omega.iter().map(|o| o.weight).sum();
    if total != Q::one() || omega.iter().any(|o| o.weight <= Q::zero()) {
        return invalid("omega weights must be positive and sum to 1");
    }
    if omega.iter().any(|o| o.alpha >= size || o.beta >= size) {
        return invalid("alpha and beta must lie in (Z/2)^N");
    }
    check_independent(omega)?;
    let group = AbelianGroup::elementary_two(n);
    let mut joint_a = vec![Q::zero(); size];
    let mut joint_b = vec![Q::zero(); size];
    for o in omega {
        joint_a[o.alpha] += o.weight;
        joint_b[o.beta] += o.weight;
    }
    let exact = |w: Vec<Q>| -> Result<Q> {
        let r = kappa_abelian(&group, &ProbMeasure::new(w)?)?;
        r.kappa_exact
            .ok_or_else(|| Error::Internal("exponent-2 gap should be rational".into()))
    };
    let (kappa_alpha, kappa_beta) = (exact(joint_a)?, exact(joint_b)?);

    let mut questions = vec![
        Question {
            label: "PX".into(),
            answers: AnswerSet::Group { n },
        },
        Question {
            label: "PZ".into(),
            answers: AnswerSet::Group { n },
        },
    ];
    let mut pairs = Vec::new();
    let mut blocks = Vec::new();
    let third = Q::new(1, 3);
    let com = commutation_game(2, 2)?;
    let ms = magic_square_game();
    for (k, o) in omega.iter().enumerate() {
        let anticommuting = parity(o.alpha & o.beta) == 1;
        let offset = questions.len();
        let sub = if anticommuting { &ms } else { &com };
        for q in &sub.questions {
            questions.push(Question {
                label: format!("{}@{k}", q.label),
                answers: q.answers,
            });
        }
        let block = OmegaBlock {
            point: o.clone(),
            anticommuting,
            offset,
        };
        let [x1, x2] = block.distinguished();
        pairs.push(QuestionPair {
            x: 0,
            y: x1,
            weight: o.weight * third,
            rule: Rule::PauliX { alpha: o.alpha },
            transposed: false,
            case: 1,
        });
        for sp in &sub.pairs {
            pairs.push(QuestionPair {
                x: offset + sp.x,
                y: offset + sp.y,
                weight: o.weight * third * sp.weight,
                rule: sp.rule.clone(),
                transposed: sp.transposed,
                case: 2,
            });
        }
        pairs.push(QuestionPair {
            x: 1,
            y: x2,
            weight: o.weight * third,
            rule: Rule::PauliZ { beta: o.beta },
            transposed: false,
            case: 3,
        });
        blocks.push(block);
    }
    let game = Game {
        name: format!("combined Pauli game, N = {n}, |Omega| = {}", omega.len()),
        questions,
        pairs,
        distinguished: Some([0, 1]),
        pauli: Some(PauliLayout {
            n,
            px: 0,
            pz: 1,
            blocks,
            kappa_alpha,
            kappa_beta,
        }),
    };
    game.validate()?;
    Ok(game)
}

fn check_independent(omega: &[OmegaPoint]) -> Result<()> {
    let mut joint: HashMap<(usize, usize), Q> = HashMap::new();
    let mut pa: HashMap<usize, Q> = HashMap::new();
    let mut pb: HashMap<usize, Q> = HashMap::new();
    for o in omega {
        *joint.entry((o.alpha, o.beta)).or_insert_with(Q::zero) += o.weight;
        *pa.entry(o.alpha).or_insert_with(Q::zero) += o.weight;
        *pb.entry(o.beta).or_insert_with(Q::zero) += o.weight;
    }
    for (&a, &wa) in &pa {
        for (&b, &wb) in &pb {
            if joint.get(&(a, b)).copied().unwrap_or_else(Q::zero) != wa * wb {
                return invalid("alpha and beta are not independent");
            }
        }
    }
    Ok(())
}

/// Combined game from two binary codes of the same dimension: `Omega` is
/// the product of their column multisets, uniformly weighted, with equal
/// `(alpha, beta)` points merged.
pub fn game_from_code(c: &mut LinearCode, c2: &mut LinearCode) -> Result<Game> {
    if c.q() != 2 || c2.q() != 2 {
        return invalid("codes must be binary");
    }
    if c.dimension() != c2.dimension() {
        return invalid("codes must have the same dimension");
    }
    let n = c.dimension();
    let (m1, m2) = (
        c.measure(DualPairing::Coordinate)?,
        c2.measure(DualPairing::Coordinate)?,
    );
    let w = Q::new(1, (m1.characters.len() * m2.characters.len()) as i64);
    let mut merged: Vec<OmegaPoint> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    for &a in &m1.characters {
        for &b in &m2.characters {
            match index.get(&(a, b)) {
                Some(&i) => merged[i].weight += w,
                None => {
                    index.insert((a, b), merged.len());
                    merged.push(OmegaPoint {
                        alpha: a,
                        beta: b,
                        weight: w,
                    });
                }
            }
        }
    }
    let mut game = combined_game(n, &merged)?;
    let layout = game.pauli.as_ref().expect("combined game has a layout");
    if layout.kappa_alpha != m1.predicted_kappa || layout.kappa_beta != m2.predicted_kappa {
        return Err(Error::Internal(
            "code-derived spectral gaps disagree with the direct computation".into(),
        ));
    }
    game.name = format!(
        "code game [{},{},{}] x [{},{},{}]",
        c.length(),
        n,
        c.distance()?,
        c2.length(),
        n,
        c2.distance()?
    );
    Ok(game)
}

#[derive(Clone, Debug)]
pub enum CodeSource {
    Code(LinearCode),
    /// Best distance among all binary codes of this length.
    Exhaustive {
        len: usize,
    },
    /// Seeded rejection sampling until the distance reaches `min_distance`.
    Random {
        len: usize,
        min_distance: usize,
        seed: u64,
        max_tries: usize,
    },
}

#[derive(Clone, Debug)]
pub struct GnGame {
    pub game: Game,
    pub code: LinearCode,
    /// `|X| / N^2`.
    pub questions_per_n2: f64,
}

/// The game with `2^N` answers at `PX`, `PZ` from one `[K, N, d]` code used
/// on both sides.
pub fn gn_game(n: usize, source: CodeSource) -> Result<GnGame> {
    let mut code = match source {
        CodeSource::Code(c) => c,
        CodeSource::Exhaustive { len } => {
            let mut best: Option<(usize, LinearCode)> = None;
            for mut c in all_binary_codes(len, n) {
                let d = c.distance()?;
                if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
                    best = Some((d, c));
                }
            }
            best.ok_or_else(|| Error::InvalidArgument(format!("no binary [{len},{n}] codes")))?
                .1
        }
        CodeSource::Random {
            len,
            min_distance,
            seed,
            max_tries,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_code(2, len, n, min_distance, &mut rng, max_tries)?
        }
    };
    if code.dimension() != n {
        return invalid("code dimension must equal N");
    }
    let mut other = code.clone();
    let game = game_from_code(&mut code, &mut other)?;
    let questions_per_n2 = game.num_questions() as f64 / (n * n) as f64;
    Ok(GnGame {
        game,
        code,
        questions_per_n2,
    })
}

/// Perfect strategy for a combined game on `M_{2^N} (x) M_2`: Pauli PVMs on
/// the first factor, joint spectral projections on commuting blocks, and
/// a Mermin-Peres grid using the auxiliary qubit on anticommuting blocks.
pub fn honest_strategy(game: &Game) -> Result<SynchronousStrategy> {
    let layout = game
        .pauli
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("game has no Pauli layout".into()))?;
    let n = layout.n;
    let dim = 1usize << n;
    let group = layout.group();
    let lam = translations(&group);
    let md = modulations(&group);
    let i2 = CMat::identity(2, 2);
    let id = CMat::identity(dim, dim);
    let (tx, tz) = pauli_pvms(n, usize::MAX)?;
    let lift = |p: &Pvm| Pvm {
        projections: p.projections.iter().map(|m| kron(m, &i2)).collect(),
    };
    let mut pvms: Vec<Option<Pvm>> = vec![None; game.num_questions()];
    pvms[layout.px] = Some(lift(&tx));
    pvms[layout.pz] = Some(lift(&tz));
    let (xa, za) = (kron(&id, &pauli_x()), kron(&id, &pauli_z()));
    for b in &layout.blocks {
        let p = kron(&lam[b.point.alpha], &i2);
        let q = kron(&md[b.point.beta], &i2);
        if b.anticommuting {
            let grid = mermin_peres_grid(&p, &q, &xa, &za)?;
            for (k, pvm) in grid_pvms(&grid).into_iter().enumerate() {
                pvms[b.offset + k] = Some(pvm);
            }
        } else {
            pvms[b.offset] = Some(observable_pvm(&p));
            pvms[b.offset + 1] = Some(observable_pvm(&q));
            pvms[b.offset + 2] = Some(joint_pvm(&p, &q));
        }
    }
    let pvms = pvms
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Internal("question without PVM".into()))?;
    let strat = SynchronousStrategy::new(TracialAlgebra::matrix(2 * dim), pvms, PVM_TOL)?;
    strat.check_for(game)?;
    Ok(strat)
}

/// The PVMs of one `Omega` block as a strategy for its sub-game.
pub fn block_strategy(
    game: &Game,
    strat: &SynchronousStrategy,
    block: usize,
) -> Result<SynchronousStrategy> {
    let layout = game
        .pauli
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("game has no Pauli layout".into()))?;
    let b = layout
        .blocks
        .get(block)
        .ok_or_else(|| Error::InvalidArgument("no such block".into()))?;
    Ok(strat.restrict(&(b.offset..b.offset + b.num_questions()).collect::<Vec<_>>()))
}

/// Conjugates every PVM by an independent `exp(i sigma H_x)` with `H_x`
/// a Gaussian self-adjoint element of operator norm 1.
pub fn perturb_strategy<R: Rng + ?Sized>(
    strat: &SynchronousStrategy,
    sigma: f64,
    rng: &mut R,
) -> SynchronousStrategy {
    if sigma == 0.0 {
        return strat.clone();
    }
    let alg = &strat.algebra;
    let pvms = strat
        .pvms
        .iter()
        .map(|p| {
            let h = alg.random_hermitian(rng);
            let h = &h / C64::new(op_norm(&h).max(1e-300), 0.0);
            p.conjugate(&expm_i_hermitian(&h, sigma))
        })
        .collect();
    SynchronousStrategy {
        algebra: alg.clone(),
        pvms,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RigidityReport {
    pub value: f64,
    pub eps: f64,
    /// Failure probabilities conditioned on each sampling branch; they sum
    /// to `3 eps`.
    pub case_eps: [f64; 3],
    #[serde(with = "io::rational")]
    pub c: Q,
    #[serde(with = "io::rational")]
    pub c_prime: Q,
    /// `E_{h,chi} |U(h) V(chi) - chi(h) V(chi) U(h)|_2^2`.
    pub lhs: f64,
    /// `1320 c c' eps`.
    pub bound: f64,
    /// `c c' (4 sqrt(eps1) + 36 sqrt(eps2) + 4 sqrt(eps3))^2`, the estimate
    /// obtained by chaining the sub-game bounds with their derived constants.
    pub chain_bound: f64,
    /// `E_omega |U(alpha) V(beta) - <beta,alpha> V(beta) U(alpha)|_2^2`.
    pub omega_average: f64,
    pub rounding: PauliRounding,
    /// Closeness on `{PX, PZ}` to the rounded Pauli-form strategy.
    pub closeness: ClosenessCertificate,
    /// `closeness.epsilon() / eps`.
    pub closeness_ratio: f64,
    /// Largest deviation of the rounded PVMs from `tau (x) 1` after the
    /// change of basis built from them.
    pub pauli_form_residual: f64,
    /// Multiplicity of the Pauli representation in the rounded corner.
    pub multiplicity: usize,
}

impl RigidityReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.bound + slack
    }
}

/// Rigidity estimates for a strategy on a combined game, ending with an
/// explicit Pauli-form strategy close to it.
pub fn pauli_rigidity_report(
    game: &Game,
    strat: &SynchronousStrategy,
    fourier: Option<&GroupFourier>,
    opts: &GhOptions,
) -> Result<RigidityReport> {
    let layout = game
        .pauli
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("game has no Pauli layout".into()))?;
    let group = layout.group();
    let alg = &strat.algebra;
    let pv = pair_values(game, strat, ValueMode::Shortcut)?;
    let mut case_win = [0.0; 3];
    let mut value = 0.0;
    for (p, v) in game.pairs.iter().zip(&pv) {
        let w = io::q_to_f64(&p.weight);
        value += w * v;
        if (1..=3).contains(&p.case) {
            case_win[p.case as usize - 1] += w * v;
        }
    }
    let eps = 1.0 - value;
    let case_eps = case_win.map(|x| 1.0 - 3.0 * x);
    let u = group.values_from_pvm(&strat.pvms[layout.px].projections);
    let v = group.values_from_pvm(&strat.pvms[layout.pz].projections);
    let twisted = |h: usize, chi: usize| {
        &u[h] * &v[chi] - &v[chi] * &u[h] * C64::new(sign_of(parity(h & chi)), 0.0)
    };
    let size = group.order();
    let mut lhs = 0.0;
    for h in 0..size {
        for chi in 0..size {
            lhs += alg.norm2_sq(&twisted(h, chi));
        }
    }
    lhs /= (size * size) as f64;
    let omega_average = layout
        .blocks
        .iter()
        .map(|b| {
            io::q_to_f64(&b.point.weight) * alg.norm2_sq(&twisted(b.point.alpha, b.point.beta))
        })
        .sum();
    let (c, c_prime) = (layout.kappa_alpha, layout.kappa_beta);
    let cc = io::q_to_f64(&(c * c_prime));
    let chain = 4.0 * case_eps[0].max(0.0).sqrt()
        + 36.0 * case_eps[1].max(0.0).sqrt()
        + 4.0 * case_eps[2].max(0.0).sqrt();

    let route = if alg.dim() * size > TENSOR_ROUTE_CAP {
        Route::Direct
    } else {
        Route::Both
    };
    let (mu, nu) = (layout.law_alpha()?, layout.law_beta()?);
    let rounding = round_pauli_pair(alg, &group, &u, &v, &mu, &nu, route, fourier, opts)?;
    let r = &rounding.rounding;
    let px = group.pvm_from_values(&r.u_tilde);
    let pz = group.pvm_from_values(&r.v_tilde);
    let original = strat.restrict(&[layout.px, layout.pz]);
    let rounded = SynchronousStrategy {
        algebra: r.corner.clone(),
        pvms: vec![px.clone(), pz.clone()],
    };
    let closeness = closeness(&original, &rounded, &r.w)?;
    let (pauli_form_residual, multiplicity) = pauli_form(&r.corner, &group, &r.u_tilde, &px, &pz);
    Ok(RigidityReport {
        value,
        eps,
        case_eps,
        c,
        c_prime,
        lhs,
        bound: PAULI_COMMUTATION * cc * eps,
        chain_bound: cc * chain * chain,
        omega_average,
        closeness_ratio: if eps > 0.0 {
            closeness.epsilon() / eps
        } else {
            0.0
        },
        closeness,
        rounding,
        pauli_form_residual,
        multiplicity,
    })
}

/// Change of basis `e_{a,k} = U(a) f_k`, with `f_k` spanning the range of
/// `Q^Z_0`, under which the PVMs should read `tau (x) 1_m`. Returns the
/// largest Frobenius deviation and `m`.
fn pauli_form(
    corner: &TracialAlgebra,
    group: &AbelianGroup,
    u: &[CMat],
    px: &Pvm,
    pz: &Pvm,
) -> (f64, usize) {
    let dim = corner.dim();
    let size = group.order();
    let mut range: Vec<Vec<C64>> = Vec::new();
    for coords in corner.block_coords() {
        if coords.is_empty() {
            continue;
        }
        let (vals, vecs) = eigh(&crate::linalg::principal(&pz.projections[0], &coords));
        for (k, &val) in vals.iter().enumerate() {
            if val > 0.5 {
                let mut f = vec![C64::new(0.0, 0.0); dim];
                for (a, &i) in coords.iter().enumerate() {
                    f[i] = vecs[(a, k)];
                }
                range.push(f);
            }
        }
    }
    let m = range.len();
    if m * size != dim || m == 0 {
        return (f64::INFINITY, m);
    }
    let f = CMat::from_fn(dim, m, |i, k| range[k][i]);
    let mut w = CMat::zeros(dim, dim);
    for (a, ua) in u.iter().enumerate() {
        w.view_mut((0, a * m), (dim, m)).copy_from(&(ua * &f));
    }
    let n = group.rank();
    let Ok((tx, tz)) = pauli_pvms(n, usize::MAX) else {
        return (f64::INFINITY, m);
    };
    let im = CMat::identity(m, m);
    let mut worst: f64 = (w.adjoint() * &w - CMat::identity(dim, dim)).norm();
    for (p, t) in px
        .projections
        .iter()
        .zip(&tx.projections)
        .chain(pz.projections.iter().zip(&tz.projections))
    {
        worst = worst.max((w.adjoint() * p * &w - kron(t, &im)).norm());
    }
    (worst, m)
}

/// The shared cache of Fourier data for the Weyl-Heisenberg group of
/// `(Z/2)^n`, as used by [`pauli_rigidity_report`].
pub fn pauli_fourier(n: usize) -> Result<GroupFourier> {
    let a = AbelianGroup::elementary_two(n);
    let g = a.to_finite_group();
    let gd = a.dual().to_finite_group();
    let size = a.order();
    let gamma: Vec<Vec<i8>> = (0..size)
        .map(|x| {
            (0..size)
                .map(|chi| a.pairing_sign(chi, x).expect("exponent two"))
                .collect()
        })
        .collect();
    GroupFourier::new(Arc::new(crate::group::FiniteGroup::central_extension(
        &g, &gd, &gamma,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::LinearCode;
    use crate::linalg::max_abs_diff;

    #[test]
    fn line_answers_have_the_right_parity() {
        for alpha in [1i8, -1] {
            let all: Vec<[i8; 3]> = (0..4).map(|k| line_answer(alpha, k)).collect();
            for t in &all {
                assert_eq!(t.iter().map(|&x| x as i32).product::<i32>(), alpha as i32);
            }
            for i in 0..4 {
                for j in 0..i {
                    assert_ne!(all[i], all[j]);
                }
            }
        }
    }

    #[test]
    fn commutation_game_shape_and_perfect_strategies() {
        let g = commutation_game(2, 2).unwrap();
        g.validate().unwrap();
        assert_eq!(g.num_questions(), 3);
        let z = pauli_z();
        let x = pauli_x();
        let i2 = CMat::identity(2, 2);
        let s = commuting_strategy(&kron(&z, &i2), &kron(&i2, &x)).unwrap();
        assert!((value(&g, &s).unwrap() - 1.0).abs() < 1e-12);
        let (best, _) = classical_value(&g, 1 << 20).unwrap();
        assert_eq!(best, Q::one());
        let b = commutation_bound_check(&s).unwrap();
        assert!(b.lhs_projections < 1e-20 && b.eps.abs() < 1e-12);
    }

    #[test]
    fn anticommuting_observables_lose_the_commutation_game() {
        let s0 = commuting_strategy(&pauli_z(), &pauli_z()).unwrap();
        let mut s = s0.clone();
        s.pvms[1] = observable_pvm(&pauli_x());
        let b = commutation_bound_check(&s).unwrap();
        assert!(b.eps > 0.1);
        assert!(b.holds(1e-12));
        assert!(b.lhs_unitary.unwrap() > 0.0);
    }

    #[test]
    fn magic_square_shape() {
        let g = magic_square_game();
        g.validate().unwrap();
        assert_eq!(g.num_questions(), 15);
        assert_eq!(g.pairs.len(), 18);
        assert!(g.questions[9..].iter().all(|q| q.answers.size() == 4));
        let (best, assign) = classical_value(&g, 1 << 22).unwrap();
        assert!(best < Q::one());
        let det = deterministic_strategy(&g, &assign).unwrap();
        assert!((value(&g, &det).unwrap() - crate::io::q_to_f64(&best)).abs() < 1e-12);
        let b = anticommutation_bound_check(&det).unwrap();
        assert!(b.holds(1e-12));
        assert!((b.eta_sum - LINE_DEFECT * b.eps).abs() < 1e-12);
    }

    #[test]
    fn mermin_peres_strategy_is_perfect() {
        let s = honest_magic_square_strategy().unwrap();
        let g = magic_square_game();
        assert!((value(&g, &s).unwrap() - 1.0).abs() < 1e-12);
        let b = anticommutation_bound_check(&s).unwrap();
        assert!(b.lhs < 1e-20);
        let u = &s.pvms[MS_X1].projections[0] - &s.pvms[MS_X1].projections[1];
        let v = &s.pvms[MS_X2].projections[0] - &s.pvms[MS_X2].projections[1];
        assert!(max_abs_diff(&(&u * &v), &-(&v * &u)) < 1e-12);
    }

    #[test]
    fn grid_verification_rejects_commuting_inputs() {
        let i2 = CMat::identity(2, 2);
        let z = kron(&pauli_z(), &i2);
        let r = mermin_peres_grid(&z, &z, &kron(&i2, &pauli_x()), &kron(&i2, &pauli_z()));
        assert!(matches!(r, Err(Error::Internal(_))));
    }

    #[test]
    fn one_qubit_pauli_pvms_match_displayed_matrices() {
        let (tx, tz) = pauli_pvms(1, 4096).unwrap();
        let h = C64::new(0.5, 0.0);
        assert_eq!(tx.projections[0], CMat::from_element(2, 2, h));
        assert_eq!(
            tx.projections[1],
            CMat::from_fn(2, 2, |i, j| if i == j { h } else { -h })
        );
        assert_eq!(tz.projections[0][(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(tz.projections[0][(1, 1)], C64::new(0.0, 0.0));
        assert!(pauli_pvms(9, 1 << 20).is_err());
    }

    #[test]
    fn pauli_pvms_are_fourier_transforms_of_translations_and_modulations() {
        for n in 1..=4 {
            let a = AbelianGroup::elementary_two(n);
            let (tx, tz) = pauli_pvms(n, 4096).unwrap();
            tx.validate(1e-12).unwrap();
            tz.validate(1e-12).unwrap();
            let lam = translations(&a);
            let md = modulations(&a);
            let lx = a.values_from_pvm(&tx.projections);
            let mz = a.values_from_pvm(&tz.projections);
            for g in 0..a.order() {
                assert!(max_abs_diff(&lx[g], &lam[g]) < 1e-12);
                assert!(max_abs_diff(&mz[g], &md[g]) < 1e-12);
                for chi in 0..a.order() {
                    let s = a.pairing_idx(chi, g).conj();
                    assert!(max_abs_diff(&(&lam[g] * &md[chi]), &(&md[chi] * &lam[g] * s)) < 1e-12);
                }
            }
        }
    }

    fn single_pair_game() -> Game {
        combined_game(
            1,
            &[OmegaPoint {
                alpha: 1,
                beta: 1,
                weight: Q::one(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn combined_game_counts_and_marginals() {
        let g = single_pair_game();
        assert_eq!(g.num_questions(), 2 + 15);
        let m = g.marginal();
        assert_eq!(m[0], Q::new(1, 6));
        assert_eq!(g.appearance()[0], Q::new(1, 3));
        assert_eq!(g.appearance()[1], Q::new(1, 3));
        assert_eq!(m.iter().copied().sum::<Q>(), Q::one());
        let dependent = [
            OmegaPoint {
                alpha: 0,
                beta: 0,
                weight: Q::new(1, 2),
            },
            OmegaPoint {
                alpha: 1,
                beta: 1,
                weight: Q::new(1, 2),
            },
        ];
        assert!(combined_game(1, &dependent).is_err());
    }

    #[test]
    fn repetition_and_hamming_games() {
        let g = game_from_code(
            &mut LinearCode::repetition(3),
            &mut LinearCode::repetition(3),
        )
        .unwrap();
        let l = g.pauli.as_ref().unwrap();
        assert_eq!(l.kappa_alpha * l.kappa_beta, Q::new(1, 4));
        assert_eq!(g.num_questions(), 17);
        let h = game_from_code(&mut LinearCode::hamming74(), &mut LinearCode::hamming74()).unwrap();
        let l = h.pauli.as_ref().unwrap();
        assert_eq!(l.kappa_alpha * l.kappa_beta, Q::new(49, 36));
        assert_eq!(l.blocks.len(), 49);
    }

    #[test]
    fn honest_strategies_win_combined_games() {
        for g in [
            single_pair_game(),
            game_from_code(
                &mut LinearCode::repetition(3),
                &mut LinearCode::repetition(3),
            )
            .unwrap(),
            game_from_code(
                &mut LinearCode::identity(2),
                &mut LinearCode::over(2, vec![vec![1, 0, 1], vec![0, 1, 1]]).unwrap(),
            )
            .unwrap(),
        ] {
            let s = honest_strategy(&g).unwrap();
            assert!((value(&g, &s).unwrap() - 1.0).abs() < 1e-9, "{}", g.name);
            let l = g.pauli.as_ref().unwrap();
            let (tx, _) = pauli_pvms(l.n, 4096).unwrap();
            for (a, b) in s.pvms[l.px].projections.iter().zip(&tx.projections) {
                assert_eq!(*a, kron(b, &CMat::identity(2, 2)));
            }
        }
    }

    #[test]
    fn shortcut_and_direct_values_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = game_from_code(&mut LinearCode::identity(2), &mut LinearCode::identity(2)).unwrap();
        let s = perturb_strategy(&honest_strategy(&g).unwrap(), 0.2, &mut rng);
        let a = value_with(&g, &s, ValueMode::Shortcut).unwrap();
        let b = value_with(&g, &s, ValueMode::Direct).unwrap();
        let t = value(&g.expand_tables().unwrap(), &s).unwrap();
        assert!((a - b).abs() < 1e-10 && (a - t).abs() < 1e-10);
        assert!(a < 1.0);
    }

    #[test]
    fn symmetrization_preserves_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ms = magic_square_game();
        let s = perturb_strategy(&honest_magic_square_strategy().unwrap(), 0.3, &mut rng);
        let sym = symmetrize(&ms);
        sym.validate().unwrap();
        assert!((value(&ms, &s).unwrap() - value(&sym, &s).unwrap()).abs() < 1e-12);
        let twice = symmetrize(&sym);
        assert_eq!(twice.pairs.len(), sym.pairs.len());
    }

    #[test]
    fn closeness_of_identical_and_degenerate_witnesses() {
        let s = honest_magic_square_strategy().unwrap();
        let id = CMat::identity(4, 4);
        let c = closeness(&s, &s, &id).unwrap();
        assert!(c.epsilon() < 1e-20);
        let zero = CMat::zeros(4, 4);
        let c = closeness(&s, &s, &zero).unwrap();
        assert!((c.isometry_defect - 1.0).abs() < 1e-12 && (c.range_defect - 1.0).abs() < 1e-12);
        let expect: f64 = s
            .pvms
            .iter()
            .flat_map(|p| &p.projections)
            .map(|p| s.algebra.norm2_sq(p))
            .sum::<f64>()
            / 15.0;
        assert!((c.strategy_distance - expect).abs() < 1e-12);
    }

    #[test]
    fn representation_and_projection_closeness_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = AbelianGroup::elementary_two(2);
        let alg = TracialAlgebra::matrix(4);
        let lam = translations(&a);
        let w = alg.random_unitary(&mut rng);
        let w = &w * C64::new(0.9, 0.0);
        let v: Vec<CMat> = lam
            .iter()
            .map(|m| {
                let e = expm_i_hermitian(&alg.random_hermitian(&mut rng), 0.1);
                &e * m * e.adjoint()
            })
            .collect();
        let (l, r) = representation_closeness_identity(&alg, &a, &lam, &v, &w).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn honest_rigidity_report_is_exact() {
        let g = single_pair_game();
        let s = honest_strategy(&g).unwrap();
        let f = pauli_fourier(1).unwrap();
        let r = pauli_rigidity_report(&g, &s, Some(&f), &GhOptions::default()).unwrap();
        assert!(r.eps.abs() < 1e-12 && r.lhs < 1e-20);
        assert!(r.closeness.epsilon() < 1e-9);
        assert!(r.pauli_form_residual < 1e-8);
        assert_eq!(r.multiplicity, 2);
    }

    #[test]
    fn rigidity_survives_global_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = game_from_code(
            &mut LinearCode::repetition(3),
            &mut LinearCode::repetition(3),
        )
        .unwrap();
        let s = honest_strategy(&g).unwrap();
        let u = s.algebra.random_unitary(&mut rng);
        let conj = SynchronousStrategy {
            algebra: s.algebra.clone(),
            pvms: s.pvms.iter().map(|p| p.conjugate(&u)).collect(),
        };
        let r = pauli_rigidity_report(&g, &conj, None, &GhOptions::default()).unwrap();
        assert!(r.eps.abs() < 1e-9);
        assert!(r.closeness.epsilon() < 1e-9);
        assert!(r.pauli_form_residual < 1e-8);
    }

    #[test]
    fn perturbed_rigidity_reports_satisfy_the_commutation_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = game_from_code(
            &mut LinearCode::repetition(3),
            &mut LinearCode::repetition(3),
        )
        .unwrap();
        let s = honest_strategy(&g).unwrap();
        let f = pauli_fourier(1).unwrap();
        for k in 0..6 {
            let p = perturb_strategy(&s, 0.02 * (k + 1) as f64, &mut rng);
            let r = pauli_rigidity_report(&g, &p, Some(&f), &GhOptions::default()).unwrap();
            assert!(r.holds(1e-12), "{} > {}", r.lhs, r.bound);
            assert!((r.case_eps.iter().sum::<f64>() - 3.0 * r.eps).abs() < 1e-12);
            assert!(
                (r.omega_average - r.rounding.amplification.primary().measure_average).abs()
                    < 1e-10
            );
            assert!(r.rounding.holds(1e-12));
        }
    }

    #[test]
    fn strategies_and_games_round_trip_through_json() {
        let g = single_pair_game();
        let back = Game::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
        let s = honest_strategy(&g).unwrap();
        let t = SynchronousStrategy::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s.pvms.len(), t.pvms.len());
        assert!(max_abs_diff(&s.pvms[3].projections[1], &t.pvms[3].projections[1]) < 1e-15);
    }

    #[test]
    fn gn_games_from_exhaustive_and_random_codes() {
        let g2 = gn_game(2, CodeSource::Exhaustive { len: 3 }).unwrap();
        assert_eq!(g2.game.questions[0].answers.size(), 4);
        let s = honest_strategy(&g2.game).unwrap();
        assert!((value(&g2.game, &s).unwrap() - 1.0).abs() < 1e-9);
        let g4 = gn_game(
            4,
            CodeSource::Random {
                len: 16,
                min_distance: 5,
                seed: 1,
                max_tries: 200,
            },
        )
        .unwrap();
        assert_eq!(g4.game.questions[1].answers.size(), 16);
        assert!(g4.questions_per_n2 > 0.0);
    }
}
