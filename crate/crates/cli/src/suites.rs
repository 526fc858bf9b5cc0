//! Randomized verification suites. Each trial draws from its own RNG stream,
//! records one row per inequality it checks, and trials are aggregated only
//! through sums and maxima, so the output does not depend on scheduling.

use std::sync::Arc;

use gapstab_core::abelian::AbelianGroup;
use gapstab_core::algebra::{
    commutant_blocks, commutator_gap_check, conditional_expectation, nearest_unitary_in_commutant,
    AlmostHom, TracialAlgebra, UnitaryRep,
};
use gapstab_core::codes::LinearCode;
use gapstab_core::fourier::GroupFourier;
use gapstab_core::games::{
    anticommutation_bound_check, commutation_bound_check, game_from_code, honest_strategy,
    pauli_fourier, pauli_rigidity_report, perturb_strategy, Game, SynchronousStrategy,
    ANTICOMMUTATION, COMMUTATION_PROJECTIONS, COMMUTATION_UNITARY, LINE_DEFECT, LINE_DEFECT_STATED,
};
use gapstab_core::group::FiniteGroup;
use gapstab_core::linalg::kron;
use gapstab_core::stability::{
    commutator_amplification_check, gowers_hatami_round, gowers_hatami_round_dense,
    subgroup_closeness_check, twisted_amplification_check, GhOptions, Route, Side, GH_DISTANCE,
    GH_TRACE, SUBGROUP,
};
use gapstab_core::{CMat, Error, Result, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sample::{self, trial_rng};

/// Exact representations must round to within this distance.
pub const EXACT_DISTANCE: f64 = 1e-10;
/// Uniform measures must give equality in the amplification inequality.
pub const UNIFORM_EQUALITY: f64 = 1e-10;
/// The nearest-unitary bound must be attained to this precision.
pub const TIGHTNESS: f64 = 1e-9;
/// Defect range for randomized almost homomorphisms.
pub const EPS_RANGE: (f64, f64) = (1e-6, 0.5);
pub const MAX_DIM: usize = 8;
/// Rows whose bound is below this are roundoff-level and left out of the
/// worst-ratio statistic.
pub const RATIO_FLOOR: f64 = 1e-9;
pub const MAX_STRATEGY_DIM: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Commutators in the commutation game: 16 eps and 64 eps.
    Commutation,
    /// Anticommutator in the magic-square game: 432 eps.
    Anticommutation,
    /// Commutator amplification from measures to uniform averages.
    Amplification,
    /// Twisted (Pauli) amplification on `(Z/2)^N` and its dual.
    TwistedAmplification,
    /// Gowers-Hatami rounding: 169 eps and trace 1 + 16 eps.
    Gh,
    /// Closeness on a subgroup of exact equivariance: 1444 eps.
    Subgroup,
    /// Nearest unitary in the commutant within sqrt 2 of the
    /// conditional-expectation residual.
    Sqrt2,
    /// Commutator form of the Poincare inequality.
    Poincare,
    /// Pauli commutation for perturbed honest strategies of the code games:
    /// 1320 c c' eps.
    Pauli,
}

impl Suite {
    pub fn all() -> [Suite; 9] {
        use Suite::*;
        [
            Commutation,
            Anticommutation,
            Amplification,
            TwistedAmplification,
            Gh,
            Subgroup,
            Sqrt2,
            Poincare,
            Pauli,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Commutation => "commutation",
            Suite::Anticommutation => "anticommutation",
            Suite::Amplification => "amplification",
            Suite::TwistedAmplification => "twisted-amplification",
            Suite::Gh => "gh",
            Suite::Subgroup => "subgroup",
            Suite::Sqrt2 => "sqrt2",
            Suite::Poincare => "poincare",
            Suite::Pauli => "pauli",
        }
    }

    /// The constant under test, as printed in reports.
    pub fn constant(self) -> &'static str {
        match self {
            Suite::Commutation => "16 eps (projections), 64 eps (observables)",
            Suite::Anticommutation => "432 eps",
            Suite::Amplification | Suite::TwistedAmplification => {
                "kappa(mu) kappa(nu) x measure average"
            }
            Suite::Gh => "169 eps (distance), 16 eps (trace excess)",
            Suite::Subgroup => "1444 eps",
            Suite::Sqrt2 => "sqrt 2",
            Suite::Poincare => "kappa/2 and kappa",
            Suite::Pauli => "1320 c c' eps",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    /// Absolute slack added to every bound.
    pub tol: f64,
    pub dim_cap: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            trials: 100,
            tol: 1e-12,
            dim_cap: gapstab_core::stability::DEFAULT_DIM_CAP,
        }
    }
}

/// One checked inequality `lhs <= bound` from one trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Row {
    pub trial: u64,
    pub check: String,
    /// Perturbation size or other per-trial parameter.
    pub param: f64,
    pub eps: f64,
    pub lhs: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Secondary measurement; its meaning depends on the suite.
    pub aux: f64,
}

impl Row {
    fn new(trial: u64, check: &str, param: f64, eps: f64, lhs: f64, bound: f64, tol: f64) -> Row {
        let ratio = if bound > 0.0 {
            lhs / bound
        } else if lhs <= tol {
            0.0
        } else {
            f64::INFINITY
        };
        Row {
            trial,
            check: check.into(),
            param,
            eps,
            lhs,
            bound,
            ratio,
            pass: lhs <= bound + tol,
            aux: f64::NAN,
        }
    }

    fn aux(mut self, aux: f64) -> Row {
        self.aux = aux;
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub constant: String,
    pub config: SuiteConfig,
    pub rows: Vec<Row>,
    pub failures: usize,
    /// Largest `lhs / bound` over rows with bound above [`RATIO_FLOOR`].
    pub worst_ratio: f64,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "suite {}: {} trials, {} checks, {} failures, constant {}, worst lhs/bound {:.6e} [{}]",
            self.suite.name(),
            self.config.trials,
            self.rows.len(),
            self.failures,
            self.constant,
            self.worst_ratio,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for n in &self.notes {
            s.push_str("\n  ");
            s.push_str(n);
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Runs `f` on every trial, spread over the available cores, returning the
/// results in trial order.
pub fn run_trials<T: Send>(trials: usize, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(trials.max(1));
    let mut slots: Vec<Option<Result<T>>> = (0..trials).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                s.spawn(move || {
                    (w..trials)
                        .step_by(workers)
                        .map(|t| (t, f(t as u64)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (t, r) in h.join().expect("trial worker panicked") {
                slots[t] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every trial ran"))
        .collect()
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let (rows, notes) = match suite {
        Suite::Commutation => (
            flatten(run_trials(cfg.trials, |t| commutation_trial(cfg, t))?),
            vec![],
        ),
        Suite::Anticommutation => anticommutation(cfg)?,
        Suite::Amplification => amplification(cfg, false)?,
        Suite::TwistedAmplification => amplification(cfg, true)?,
        Suite::Gh => gh(cfg)?,
        Suite::Subgroup => subgroup(cfg)?,
        Suite::Sqrt2 => sqrt2(cfg)?,
        Suite::Poincare => poincare(cfg)?,
        Suite::Pauli => pauli(cfg)?,
    };
    let failures = rows.iter().filter(|r| !r.pass).count();
    let worst_ratio = rows
        .iter()
        .filter(|r| r.bound > RATIO_FLOOR)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    Ok(SuiteReport {
        suite,
        constant: suite.constant().into(),
        config: *cfg,
        rows,
        failures,
        worst_ratio,
        notes,
    })
}

fn flatten(v: Vec<Vec<Row>>) -> Vec<Row> {
    v.into_iter().flatten().collect()
}

fn commutation_trial(cfg: &SuiteConfig, t: u64) -> Result<Vec<Row>> {
    let mut rng = trial_rng(cfg.seed, t);
    let dim = rng.random_range(2..=MAX_STRATEGY_DIM);
    let sigma = sample::log_uniform(&mut rng, -3.0, 0.3);
    let s = perturb_strategy(
        &sample::commuting_involutions(&mut rng, dim)?,
        sigma,
        &mut rng,
    );
    let b = commutation_bound_check(&s)?;
    let mut rows = vec![Row::new(
        t,
        "projections",
        sigma,
        b.eps,
        b.lhs_projections,
        COMMUTATION_PROJECTIONS * b.eps,
        cfg.tol,
    )];
    if let Some(l) = b.lhs_unitary {
        rows.push(Row::new(
            t,
            "observables",
            sigma,
            b.eps,
            l,
            COMMUTATION_UNITARY * b.eps,
            cfg.tol,
        ));
    }
    Ok(rows)
}

fn anticommutation(cfg: &SuiteConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let rows = run_trials(cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, t);
        let k = rng.random_range(1..=MAX_STRATEGY_DIM / 4);
        let sigma = sample::log_uniform(&mut rng, -3.0, 0.3);
        let s = perturb_strategy(
            &sample::magic_square_strategy(&mut rng, k)?,
            sigma,
            &mut rng,
        );
        let b = anticommutation_bound_check(&s)?;
        Ok(Row::new(
            t,
            "anticommutator",
            sigma,
            b.eps,
            b.lhs,
            ANTICOMMUTATION * b.eps,
            cfg.tol,
        )
        .aux(b.eta_sum))
    })?;
    let positive: Vec<&Row> = rows.iter().filter(|r| r.eps > 1e-12).collect();
    let identity_gap = rows
        .iter()
        .map(|r| (r.aux - LINE_DEFECT * r.eps).abs())
        .fold(0.0, f64::max);
    let over_stated = positive
        .iter()
        .filter(|r| r.aux > LINE_DEFECT_STATED * r.eps)
        .count();
    let notes = vec![
        format!("sum of line defects equals {LINE_DEFECT} eps in every trial (max deviation {identity_gap:.3e})"),
        format!(
            "sum of line defects exceeds the stated {LINE_DEFECT_STATED} eps in {over_stated} of {} trials with eps > 0",
            positive.len()
        ),
    ];
    Ok((rows, notes))
}

fn amplification(cfg: &SuiteConfig, twisted: bool) -> Result<(Vec<Row>, Vec<String>)> {
    let rows = run_trials(cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, t);
        let n = rng.random_range(1..=4);
        let a = AbelianGroup::elementary_two(n);
        let dim = rng.random_range(2..=MAX_DIM);
        let alg = TracialAlgebra::matrix(dim);
        let u = sample::random_abelian_rep(&a, dim, &mut rng);
        let v = sample::random_abelian_rep(&a, dim, &mut rng);
        let uniform = t % 5 == 0;
        let (mu, nu) = if uniform {
            (sample::uniform(a.order()), sample::uniform(a.order()))
        } else {
            (
                sample::code_measure(n, &mut rng)?.0,
                sample::code_measure(n, &mut rng)?.0,
            )
        };
        let amp = if twisted {
            let route = if dim * a.order() <= 64 {
                Route::Both
            } else {
                Route::Direct
            };
            let r = twisted_amplification_check(&alg, &a, &u, &v, &mu, &nu, route)?;
            if let (Some(d), Some(te)) = (&r.direct, &r.tensor) {
                if (d.lhs - te.lhs).abs() > 1e-9 * d.lhs.max(1.0) {
                    return Err(Error::Internal("direct and tensor routes disagree".into()));
                }
            }
            r.primary().clone()
        } else {
            let g = Arc::new(a.to_finite_group());
            let ur = UnitaryRep::new_unchecked(g.clone(), u);
            let vr = UnitaryRep::new_unchecked(g, v);
            commutator_amplification_check(&alg, &ur, &vr, &mu, &nu)?
        };
        let mut rows = vec![Row::new(
            t,
            "amplification",
            n as f64,
            amp.measure_average,
            amp.lhs,
            amp.rhs,
            cfg.tol,
        )];
        if uniform {
            let gap = (amp.lhs - amp.rhs).abs();
            rows.push(Row::new(
                t,
                "uniform-equality",
                n as f64,
                amp.measure_average,
                gap,
                UNIFORM_EQUALITY,
                0.0,
            ));
        }
        Ok(rows)
    })?;
    Ok((flatten(rows), vec![]))
}

struct GroupCache {
    groups: Vec<(Arc<FiniteGroup>, GroupFourier)>,
}

impl GroupCache {
    fn new(groups: Vec<FiniteGroup>) -> Result<Self> {
        let groups = groups
            .into_iter()
            .map(|g| {
                let g = Arc::new(g);
                Ok((g.clone(), GroupFourier::new(g)?))
            })
            .collect::<Result<_>>()?;
        Ok(GroupCache { groups })
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> &(Arc<FiniteGroup>, GroupFourier) {
        &self.groups[rng.random_range(0..self.groups.len())]
    }
}

/// Perturbs a random representation until the defect lands in
/// [`EPS_RANGE`]; `None` after repeated misses.
fn almost_hom<R: Rng + ?Sized>(
    alg: &TracialAlgebra,
    g: &Arc<FiniteGroup>,
    base: &[CMat],
    rng: &mut R,
) -> Option<(AlmostHom, f64, f64)> {
    for _ in 0..30 {
        let theta = sample::log_uniform(rng, -3.5, 0.0);
        let phi = AlmostHom::new_unchecked(g.clone(), sample::perturb(alg, base, theta, rng));
        let eps = gapstab_core::algebra::defect(alg, &phi, None);
        if (EPS_RANGE.0..=EPS_RANGE.1).contains(&eps) {
            return Some((phi, eps, theta));
        }
    }
    None
}

fn gh(cfg: &SuiteConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let cache = GroupCache::new(sample::small_groups())?;
    let opts = GhOptions {
        dim_cap: cfg.dim_cap,
        ..GhOptions::default()
    };
    let rows = run_trials(cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, t);
        let (g, f) = cache.pick(&mut rng);
        let dim = rng.random_range(1..=MAX_DIM);
        let alg = sample::random_algebra(&mut rng, dim);
        let base = sample::random_rep(f, &alg, &mut rng);
        if t % 10 == 0 {
            let phi = AlmostHom::new_unchecked(g.clone(), base);
            let cert = gowers_hatami_round(&alg, &phi, f, &opts)?;
            return Ok(vec![Row::new(
                t,
                "exact",
                0.0,
                cert.input_defect,
                cert.distance,
                EXACT_DISTANCE,
                0.0,
            )]);
        }
        let Some((phi, eps, theta)) = almost_hom(&alg, g, &base, &mut rng) else {
            return Ok(vec![]);
        };
        let o = GhOptions {
            defect: Some(eps),
            ..opts
        };
        let cert = if t % 4 == 1 && g.order() * dim <= 96 {
            gowers_hatami_round_dense(&alg, &phi, &o)?
        } else {
            gowers_hatami_round(&alg, &phi, f, &o)?
        };
        Ok(vec![
            Row::new(
                t,
                "distance",
                theta,
                eps,
                cert.distance,
                GH_DISTANCE * eps,
                cfg.tol,
            ),
            Row::new(
                t,
                "trace",
                theta,
                eps,
                cert.trace_excess,
                GH_TRACE * eps,
                cfg.tol,
            ),
        ])
    })?;
    let rows = flatten(rows);
    let used = rows
        .iter()
        .map(|r| r.trial)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    Ok((
        rows,
        vec![format!(
            "{used} of {} trials produced a defect in [{:e}, {}]",
            cfg.trials, EPS_RANGE.0, EPS_RANGE.1
        )],
    ))
}

fn subgroup(cfg: &SuiteConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let pairs = [
        (FiniteGroup::cyclic(3), FiniteGroup::cyclic(2)),
        (FiniteGroup::symmetric(3), FiniteGroup::cyclic(2)),
        (FiniteGroup::cyclic(4), FiniteGroup::cyclic(3)),
        (FiniteGroup::symmetric(3), FiniteGroup::cyclic(3)),
        (FiniteGroup::dihedral(4), FiniteGroup::cyclic(3)),
        (FiniteGroup::cyclic(2), FiniteGroup::symmetric(3)),
    ];
    let mut cache = Vec::new();
    for (g1, g2) in pairs {
        let g = Arc::new(FiniteGroup::direct_product(&g1, &g2));
        let f1 = GroupFourier::new(Arc::new(g1))?;
        let f2 = GroupFourier::new(Arc::new(g2))?;
        let f = GroupFourier::new(g.clone())?;
        cache.push((g, f, f1, f2));
    }
    let opts = GhOptions {
        dim_cap: cfg.dim_cap,
        ..GhOptions::default()
    };
    let rows = run_trials(cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, t);
        let (g, f, f1, f2) = &cache[rng.random_range(0..cache.len())];
        let (n1, n2) = (f1.group().order(), f2.group().order());
        let (a, b) = (rng.random_range(1..=4), rng.random_range(1..=2));
        let alg1 = TracialAlgebra::matrix(a);
        let base = sample::random_rep(f1, &alg1, &mut rng);
        let theta = sample::log_uniform(&mut rng, -3.0, -0.3);
        let mut psi = sample::perturb(&alg1, &base, theta, &mut rng);
        psi[f1.group().identity()] = CMat::identity(a, a);
        let rho = sample::random_rep(f2, &TracialAlgebra::matrix(b), &mut rng);
        let values: Vec<CMat> = (0..n1 * n2)
            .map(|x| kron(&psi[x / n2], &rho[x % n2]))
            .collect();
        let alg = TracialAlgebra::matrix(a * b);
        let phi = AlmostHom::new_unchecked(g.clone(), values);
        let cert = gowers_hatami_round(&alg, &phi, f, &opts)?;
        let h: Vec<usize> = (0..n2).map(|y| f1.group().identity() * n2 + y).collect();
        let check = subgroup_closeness_check(&alg, &phi, &h, &cert, Side::Left, 1e-9)?;
        let eps = cert.input_defect;
        Ok(Row::new(
            t,
            "subgroup",
            theta,
            eps,
            check.lhs,
            SUBGROUP * eps,
            cfg.tol,
        )
        .aux(check.equivariance_residual))
    })?;
    Ok((rows, vec![]))
}

/// `(|V - W|_2, sqrt 2 |V - E(V)|_2)` for the nearest unitary `W` of the
/// commutant.
fn sqrt2_pair<R: Rng + ?Sized>(
    alg: &TracialAlgebra,
    rep: &UnitaryRep,
    v: &CMat,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let blocks = commutant_blocks(alg, rep, rng, 8)?;
    let w = nearest_unitary_in_commutant(rep, &blocks, v);
    let e = conditional_expectation(rep, v);
    Ok((
        alg.norm2(&(v - w)),
        std::f64::consts::SQRT_2 * alg.norm2(&(v - e)),
    ))
}

/// The two-dimensional example where the constant is attained: `Z/2`
/// acting by `diag(1, -1)` and `V` the flip, so `E(V) = 0`.
pub fn sqrt2_witness() -> Result<(f64, f64)> {
    let g = Arc::new(FiniteGroup::cyclic(2));
    let z = CMat::from_diagonal(&gapstab_core::CVec::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
    ]));
    let rep = UnitaryRep::new(g, vec![CMat::identity(2, 2), z], 1e-12)?;
    let flip = CMat::from_fn(2, 2, |i, j| C64::new(if i != j { 1.0 } else { 0.0 }, 0.0));
    let mut rng = sample::trial_rng(0, 0);
    sqrt2_pair(&TracialAlgebra::matrix(2), &rep, &flip, &mut rng)
}

fn sqrt2(cfg: &SuiteConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let cache = GroupCache::new(sample::small_groups())?;
    let mut rows = run_trials(cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, t);
        let (g, f) = cache.pick(&mut rng);
        let dim = rng.random_range(1..=MAX_DIM);
        let alg = sample::random_algebra(&mut rng, dim);
        let rep = UnitaryRep::new_unchecked(g.clone(), sample::random_rep(f, &alg, &mut rng));
        let theta = sample::log_uniform(&mut rng, -3.0, 0.5);
        let blocks = commutant_blocks(&alg, &rep, &mut rng, 8)?;
        let near = nearest_unitary_in_commutant(&rep, &blocks, &alg.random_unitary(&mut rng));
        let v = &sample::perturb(&alg, &[near], theta, &mut rng)[0]
            * gapstab_core::linalg::expm_i_hermitian(&alg.random_hermitian(&mut rng), theta);
        let (lhs, rhs) = sqrt2_pair(&alg, &rep, &v, &mut rng)?;
        Ok(Row::new(
            t,
            "nearest-unitary",
            theta,
            rhs * rhs / 2.0,
            lhs,
            rhs,
            cfg.tol,
        ))
    })?;
    let (l, r) = sqrt2_witness()?;
    let trial = cfg.trials as u64;
    rows.push(
        Row::new(
            trial,
            "tightness",
            0.0,
            r * r / 2.0,
            (l / r - 1.0).abs(),
            TIGHTNESS,
            0.0,
        )
        .aux(l / r),
    );
    Ok((
        rows,
        vec![format!(
            "tightness example: |V - W|_2 / (sqrt 2 |V - E(V)|_2) = {:.12}",
            l / r
        )],
    ))
}

fn poincare(cfg: &SuiteConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let cache = GroupCache::new(sample::small_groups())?;
    let rows = run_trials(cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, t);
        let (g, f) = cache.pick(&mut rng);
        let dim = rng.random_range(1..=MAX_DIM);
        let alg = sample::random_algebra(&mut rng, dim);
        let rep = UnitaryRep::new_unchecked(g.clone(), sample::random_rep(f, &alg, &mut rng));
        let mu = sample::generating_measure(g, &mut rng)?;
        let v = alg.random_element(&mut rng);
        let c = commutator_gap_check(&alg, &rep, &mu, &v)?;
        Ok(vec![
            Row::new(
                t,
                "poincare",
                c.kappa,
                c.residual,
                c.residual,
                c.poincare_bound,
                cfg.tol,
            ),
            Row::new(
                t,
                "average",
                c.kappa,
                c.residual,
                c.group_average,
                c.average_bound,
                cfg.tol,
            ),
        ])
    })?;
    Ok((flatten(rows), vec![]))
}

/// A combined code game with its honest strategy and Fourier cache.
pub struct PauliCase {
    pub name: String,
    pub game: Game,
    pub honest: SynchronousStrategy,
    pub fourier: GroupFourier,
}

impl PauliCase {
    pub fn from_codes(name: &str, mut c: LinearCode, mut c2: LinearCode) -> Result<Self> {
        let game = game_from_code(&mut c, &mut c2)?;
        let honest = honest_strategy(&game)?;
        let n = game.pauli.as_ref().expect("code games have a layout").n;
        Ok(PauliCase {
            name: name.into(),
            game,
            honest,
            fourier: pauli_fourier(n)?,
        })
    }

    pub fn repetition() -> Result<Self> {
        Self::from_codes(
            "repetition [3,1,3]",
            LinearCode::repetition(3),
            LinearCode::repetition(3),
        )
    }

    pub fn hamming() -> Result<Self> {
        Self::from_codes(
            "hamming [7,4,3]",
            LinearCode::hamming74(),
            LinearCode::hamming74(),
        )
    }
}

/// One point of a perturbation sweep of a combined game.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: u64,
    pub sigma: f64,
    pub eps: f64,
    /// Uniform twisted-commutator average.
    pub lhs: f64,
    /// `1320 c c' eps`.
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    pub closeness: f64,
    pub closeness_ratio: f64,
    pub pauli_form_residual: f64,
    pub multiplicity: usize,
}

pub fn sweep_point<R: Rng + ?Sized>(
    game: &Game,
    strategy: &SynchronousStrategy,
    fourier: Option<&GroupFourier>,
    sigma: f64,
    point: u64,
    opts: &GhOptions,
    tol: f64,
    rng: &mut R,
) -> Result<SweepRow> {
    let s = perturb_strategy(strategy, sigma, rng);
    let r = pauli_rigidity_report(game, &s, fourier, opts)?;
    Ok(SweepRow {
        point,
        sigma,
        eps: r.eps,
        lhs: r.lhs,
        bound: r.bound,
        ratio: if r.bound > 0.0 { r.lhs / r.bound } else { 0.0 },
        pass: r.holds(tol),
        closeness: r.closeness.epsilon(),
        closeness_ratio: r.closeness_ratio,
        pauli_form_residual: r.pauli_form_residual,
        multiplicity: r.multiplicity,
    })
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn log_log_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Sigma range of the Pauli sweeps.
pub const PAULI_SIGMA: (f64, f64) = (-3.0, -0.7);

fn pauli(cfg: &SuiteConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let cases = [PauliCase::repetition()?, PauliCase::hamming()?];
    let opts = GhOptions {
        dim_cap: cfg.dim_cap,
        ..GhOptions::default()
    };
    let sweeps = run_trials(cfg.trials, |t| {
        let mut rng = trial_rng(cfg.seed, t);
        let case = &cases[t as usize % cases.len()];
        let sigma = sample::log_uniform(&mut rng, PAULI_SIGMA.0, PAULI_SIGMA.1);
        let p = sweep_point(
            &case.game,
            &case.honest,
            Some(&case.fourier),
            sigma,
            t,
            &opts,
            cfg.tol,
            &mut rng,
        )?;
        Ok((t as usize % cases.len(), p))
    })?;
    let rows = sweeps
        .iter()
        .map(|(_, p)| {
            Row::new(
                p.point,
                "pauli-commutation",
                p.sigma,
                p.eps,
                p.lhs,
                p.bound,
                cfg.tol,
            )
            .aux(p.closeness)
        })
        .collect();
    let mut notes = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let pts: Vec<&SweepRow> = sweeps
            .iter()
            .filter(|(c, _)| *c == k)
            .map(|(_, p)| p)
            .collect();
        let slope = log_log_slope(pts.iter().map(|p| (p.eps, p.closeness)));
        let worst = pts.iter().map(|p| p.closeness_ratio).fold(0.0, f64::max);
        let residual = pts
            .iter()
            .map(|p| p.pauli_form_residual)
            .fold(0.0, f64::max);
        notes.push(format!(
            "{}: {} points, closeness/eps <= {worst:.4}, log-log slope {}, Pauli-form residual <= {residual:.2e}",
            case.name,
            pts.len(),
            slope.map_or("n/a".into(), |s| format!("{s:.4}"))
        ));
    }
    Ok((rows, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_identical_across_runs() {
        let cfg = SuiteConfig {
            seed: 3,
            trials: 6,
            ..SuiteConfig::default()
        };
        let a = run_suite(Suite::Commutation, &cfg)
            .unwrap()
            .to_csv()
            .unwrap();
        let b = run_suite(Suite::Commutation, &cfg)
            .unwrap()
            .to_csv()
            .unwrap();
        assert_eq!(a, b);
        let c = run_suite(Suite::Commutation, &SuiteConfig { seed: 4, ..cfg })
            .unwrap()
            .to_csv()
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn slope_of_a_power_law() {
        let s = log_log_slope((1..10).map(|k| (k as f64, 3.0 * (k as f64).powi(2)))).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(log_log_slope([(1.0, 1.0)]).is_none());
    }

    #[test]
    fn small_runs_of_every_suite_pass() {
        for suite in Suite::all() {
            let trials = if suite == Suite::Pauli { 2 } else { 5 };
            let r = run_suite(
                suite,
                &SuiteConfig {
                    seed: 1,
                    trials,
                    ..SuiteConfig::default()
                },
            )
            .unwrap();
            assert!(r.passed(), "{}", r.summary());
        }
    }

    #[test]
    fn sqrt2_witness_is_tight() {
        let (l, r) = sqrt2_witness().unwrap();
        assert!((l / r - 1.0).abs() < TIGHTNESS);
    }
}
