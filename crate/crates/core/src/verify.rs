//! Executable checks of the reduction results: solution equivalence between
//! `X` and its reduction, support containment, ultrametric minimality by
//! enumeration, independent optimality certificates and a seeded randomized
//! suite over all of them.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, ising_logpartition, EstimatorSpec, Family, SolveReport};
use crate::linkage::{is_binary_ultrametric, slc, Partition};
use crate::orbit::{arcsin_map, check_projection_conditions, cut_membership, ConditionReport, MaskProjection};
use crate::reduce::{self, Input, PenaltySpec};
use crate::symmat::{eigh, SymMatrix};

/// Largest dimension for exhaustive enumeration of binary ultrametrics.
pub const ENUMERATION_LIMIT: usize = 5;
/// Default entrywise tolerance for reduced-versus-full comparisons.
pub const EQUIVALENCE_TOL: f64 = 1e-5;
/// Default tolerance on the independent optimality residuals.
pub const KKT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub family: Family,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    /// `max |T(X) - T(R(X))|`.
    pub deviation: f64,
    /// `|f_X(T(X)) - f_X(T(R(X)))|`.
    pub objective_gap: f64,
    /// Entries of `T(X)` outside the blocks of the reduction.
    pub containment_violations: usize,
    pub conditions: ConditionReport,
    /// `R(R(X)) = R(X)`: the reduced solve sees nothing but reduced data.
    pub reduction_idempotent: bool,
    /// Whether a mask with one required entry removed was rejected.
    /// `None` when no entry is required.
    pub negative_control: Option<bool>,
    pub pass: bool,
}

/// Solves on `X` and on `R(X)` and compares.
///
/// Families with unique solutions must agree entrywise within `tol`. For the
/// others, `T(X)` must vanish off the blocks (relative to `max|θ|`) and the two
/// optimal values must agree within `tol` times the problem scale.
pub fn check_sufficiency(spec: &EstimatorSpec, x: &Input, tol: f64) -> Result<SufficiencyReport> {
    spec.validate()?;
    let group = spec.family.group();
    let reduced = reduce::reduce_input(&spec.penalty, group, x)?;
    let conditions = check_projection_conditions(&reduced.mask, x, &spec.penalty, group)?;
    let again = reduce::reduce_input(&spec.penalty, group, &reduced.reduced)?;
    let reduction_idempotent = again.reduced == reduced.reduced;

    let full = estimators::solve(spec, x).map_err(|e| context(spec, "full solve", e))?;
    let red = estimators::solve(spec, &reduced.reduced).map_err(|e| context(spec, "reduced solve", e))?;

    let deviation = estimate_diff(&full.theta, &red.theta)?;
    let objective_gap =
        (estimators::objective(spec, x, &full.theta)? - estimators::objective(spec, x, &red.theta)?).abs();
    let containment_violations = match (&full.theta, &reduced.partition) {
        (Input::Matrix(t), Some(part)) => check_support_containment(t, part, tol * t.max_abs()).len(),
        _ => 0,
    };
    let negative_control = corrupted_mask(spec, x, &reduced.mask)?
        .map(|bad| check_projection_conditions(&bad, x, &spec.penalty, group).map(|c| !c.dual_feasibility))
        .transpose()?;

    let agree = if spec.family.strictly_convex() {
        deviation <= tol
    } else {
        objective_gap <= tol * x.norm().max(1.0)
    };
    let pass = agree
        && containment_violations == 0
        && conditions.all()
        && reduction_idempotent
        && negative_control != Some(false);
    Ok(SufficiencyReport {
        family: spec.family,
        lambda: spec_lambda(spec),
        k: spec.k,
        eps: spec.eps,
        deviation,
        objective_gap,
        containment_violations,
        conditions,
        reduction_idempotent,
        negative_control,
        pass,
    })
}

fn context(spec: &EstimatorSpec, what: &str, e: Error) -> Error {
    match e {
        Error::NoConvergence { .. } | Error::Infeasible(_) => {
            Error::Infeasible(format!("{} {what}: {e}", spec.family.name()))
        }
        other => other,
    }
}

fn spec_lambda(spec: &EstimatorSpec) -> Option<f64> {
    match &spec.penalty {
        PenaltySpec::EntrywiseL1 { weights } => weights.iter().cloned().reduce(f64::max),
        _ => spec.uniform_lambda(),
    }
}

fn estimate_diff(a: &Input, b: &Input) -> Result<f64> {
    match (a, b) {
        (Input::Matrix(a), Input::Matrix(b)) => a.max_abs_diff(b),
        (Input::Vector(a), Input::Vector(b)) if a.len() == b.len() => {
            Ok(a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
        }
        _ => Err(Error::DimensionMismatch {
            expected: 0,
            found: 0,
        }),
    }
}

/// The reduction's mask with the strongest required entry switched off.
pub fn corrupted_mask(spec: &EstimatorSpec, x: &Input, mask: &MaskProjection) -> Result<Option<MaskProjection>> {
    match (mask, x, &spec.penalty) {
        (MaskProjection::Vector(d), Input::Vector(v), penalty) => {
            let required = |i: usize| match penalty {
                PenaltySpec::EntrywiseL1 { weights } => v[i].abs() > weights[i],
                PenaltySpec::PositiveCone => v[i] > 0.0,
                _ => d[i] != 0.0,
            };
            let pick = (0..v.len())
                .filter(|&i| required(i))
                .max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()));
            Ok(pick.map(|i| {
                let mut d = d.clone();
                d[i] = 0.0;
                MaskProjection::Vector(d)
            }))
        }
        (MaskProjection::Symmetric(b), Input::Matrix(m), penalty) => {
            let p = m.dim();
            let required = |i: usize, j: usize| match penalty {
                PenaltySpec::SymmetricL1 { weights } => m.get(i, j).abs() > weights.weight(i, j),
                PenaltySpec::OffDiagPositivity => m.get(i, j) > 0.0,
                _ => false,
            };
            let mut best: Option<(usize, usize)> = None;
            for i in 0..p {
                for j in (i + 1)..p {
                    if required(i, j) && best.is_none_or(|(a, c)| m.get(i, j).abs() > m.get(a, c).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            Ok(best.map(|(i, j)| {
                let mut b = b.clone();
                b.set(i, j, 0.0);
                MaskProjection::Symmetric(b)
            }))
        }
        _ => Err(Error::Unsupported("mask and input shapes differ".into())),
    }
}

/// Pairs `(i, j)`, `i < j`, in different blocks with `|θ_ij| > tol`.
pub fn check_support_containment(theta: &SymMatrix, partition: &Partition, tol: f64) -> Vec<(usize, usize)> {
    let p = theta.dim();
    let mut out = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if !partition.same_block(i, j) && theta.get(i, j).abs() > tol {
                out.push((i, j));
            }
        }
    }
    out
}

/// All binary unit-diagonal ultrametrics `B` with `|X_ij| > λ ⟹ B_ij = 1`.
pub fn enumerate_feasible_ultrametrics(x: &SymMatrix, lambda: f64) -> Result<Vec<SymMatrix>> {
    let p = x.dim();
    if p > ENUMERATION_LIMIT {
        return Err(Error::DimensionLimit {
            what: "ultrametric enumeration",
            p,
            limit: ENUMERATION_LIMIT,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for bits in 0u32..(1 << pairs.len()) {
        let mut b = SymMatrix::identity(p);
        let mut feasible = true;
        for (e, &(i, j)) in pairs.iter().enumerate() {
            let on = bits >> e & 1 == 1;
            if on {
                b.set(i, j, 1.0);
            } else if x.get(i, j).abs() > lambda {
                feasible = false;
                break;
            }
        }
        if feasible && is_binary_ultrametric(&b)? {
            out.push(b);
        }
    }
    Ok(out)
}

/// True iff `slc(|X|, λ)` is feasible and the unique entry-sum minimizer.
pub fn check_minimality_slc(x: &SymMatrix, lambda: f64) -> Result<bool> {
    let candidates = enumerate_feasible_ultrametrics(x, lambda)?;
    let s = slc(&x.abs(), lambda);
    let best = candidates.iter().map(|b| b.entry_sum()).fold(f64::INFINITY, f64::min);
    let minimizers: Vec<&SymMatrix> = candidates.iter().filter(|b| b.entry_sum() == best).collect();
    Ok(minimizers.len() == 1 && *minimizers[0] == s)
}

/// `Cut_p` membership through the triangle inequalities, exact for `p <= 4`.
pub fn cut_triangle_oracle(b: &SymMatrix, slack: f64) -> Result<bool> {
    let p = b.dim();
    if p > 4 {
        return Err(Error::DimensionLimit {
            what: "triangle description of the cut polytope",
            p,
            limit: 4,
        });
    }
    if (0..p).any(|i| b.get(i, i) != 1.0) {
        return Ok(false);
    }
    if p == 2 {
        return Ok(b.get(0, 1).abs() <= 1.0 + slack);
    }
    for i in 0..p {
        for j in (i + 1)..p {
            for k in (j + 1)..p {
                let (a, c, d) = (b.get(i, j), b.get(i, k), b.get(j, k));
                for (s1, s2, s3) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    if s1 * a + s2 * c + s3 * d < -1.0 - slack {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Optimality residual of `report` for `spec` on `x`, computed from the
/// problem's own stationarity conditions rather than the solver's iterates.
///
/// Scaled by `max(1, max|X|)`.
pub fn kkt_residual(spec: &EstimatorSpec, x: &Input, report: &SolveReport) -> Result<f64> {
    let missing = || Error::InvalidParameter("report lacks the multiplier this check needs".into());
    let r = match (spec.family, x, &report.theta) {
        (Family::Lasso, Input::Vector(v), Input::Vector(t)) => {
            let PenaltySpec::EntrywiseL1 { weights } = &spec.penalty else {
                return Err(missing());
            };
            let mut r: f64 = 0.0;
            for ((&a, &th), &w) in v.iter().zip(t).zip(weights) {
                r = r.max(subgradient_gap(th, a - th, w));
            }
            r
        }
        (Family::Nnls, Input::Vector(v), Input::Vector(t)) => {
            let mut r: f64 = 0.0;
            for (&a, &th) in v.iter().zip(t) {
                r = r.max((-th).max(0.0));
                r = r.max(if th > 0.0 { (a - th).abs() } else { a.max(0.0) });
            }
            r
        }
        (Family::GraphicalLasso, Input::Matrix(m), Input::Matrix(t)) => {
            let PenaltySpec::SymmetricL1 { weights } = &spec.penalty else {
                return Err(missing());
            };
            let w = pd_inverse(t)?;
            // X - W + Λ∘∂|θ| ∋ 0
            max_over_entries(m.dim(), |i, j| subgradient_gap(t.get(i, j), w.get(i, j) - m.get(i, j), weights.weight(i, j)))
        }
        (Family::PositiveInvCov, Input::Matrix(m), Input::Matrix(t)) => {
            let w = pd_inverse(t)?;
            max_over_entries(m.dim(), |i, j| {
                let g = w.get(i, j) - m.get(i, j);
                if i == j || t.get(i, j) < 0.0 {
                    g.abs()
                } else {
                    t.get(i, j).max(0.0).max(-g)
                }
            })
        }
        (Family::IsingPmle, Input::Matrix(m), Input::Matrix(t)) => {
            let lambda = spec.uniform_lambda().ok_or_else(missing)?;
            let (_, moment) = ising_logpartition(t)?;
            max_over_entries(m.dim(), |i, j| {
                if i == j {
                    t.get(i, i).abs()
                } else {
                    subgradient_gap(t.get(i, j), m.get(i, j) - moment.get(i, j), lambda)
                }
            })
        }
        (Family::SparseCovariance, Input::Matrix(m), Input::Matrix(t)) => {
            let lambda = spec.uniform_lambda().ok_or_else(missing)?;
            let eps = spec.eps.ok_or_else(missing)?;
            let y = report.dual.as_ref().ok_or_else(missing)?;
            let sub = multiplier_gap(t, y, lambda);
            let target = m.sub(y)?;
            let proj = eigh(&target)?.spectral_map(|g| g.max(eps));
            sub.max(proj.max_abs_diff(t)?)
        }
        (Family::FantopeSpca, Input::Matrix(m), Input::Matrix(t)) => {
            let lambda = spec.uniform_lambda().ok_or_else(missing)?;
            let k = spec.k.ok_or_else(missing)?;
            let y = report.dual.as_ref().ok_or_else(missing)?;
            let sub = multiplier_gap(t, y, lambda);
            let c = m.sub(y)?;
            let top: f64 = eigh(&c)?.values.iter().take(k).sum();
            let e = eigh(t)?;
            let outside = e.values.iter().map(|v| (-v).max(v - 1.0).max(0.0)).fold(0.0, f64::max);
            let trace = (e.values.iter().sum::<f64>() - k as f64).abs();
            sub.max((top - c.inner(t)?).abs()).max(outside).max(trace)
        }
        _ => return Err(Error::Unsupported("estimate and input shapes differ".into())),
    };
    let scale = match x {
        Input::Vector(v) => v.iter().fold(1.0f64, |m, a| m.max(a.abs())),
        Input::Matrix(m) => m.max_abs().max(1.0),
    };
    Ok(r / scale)
}

/// Distance of `g` from `w·∂|θ|`.
fn subgradient_gap(theta: f64, g: f64, w: f64) -> f64 {
    if theta != 0.0 {
        (g - w * theta.signum()).abs()
    } else {
        (g.abs() - w).max(0.0)
    }
}

/// `y ∈ λ ∂‖θ‖₁` entrywise.
fn multiplier_gap(theta: &SymMatrix, y: &SymMatrix, lambda: f64) -> f64 {
    max_over_entries(theta.dim(), |i, j| subgradient_gap(theta.get(i, j), y.get(i, j), lambda))
}

fn max_over_entries(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..p {
        for j in i..p {
            r = r.max(f(i, j));
        }
    }
    r
}

fn pd_inverse(t: &SymMatrix) -> Result<SymMatrix> {
    let e = eigh(t)?;
    if e.values.iter().any(|&v| v <= 0.0) {
        return Err(Error::Infeasible("estimate is not positive definite".into()));
    }
    Ok(e.spectral_map(|v| 1.0 / v))
}

/// How cross-block entries of a generated instance look.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CrossBlock {
    /// Sampling noise of both signs.
    Noise,
    /// Small negative entries, so the positive-part graph splits at the blocks.
    Negative,
}

/// `VᵀV/n` with `n = 4p` plus a constant signal on `blocks` planted groups of
/// randomly permuted indices. Returns the matrix and the planted partition.
pub fn random_instance(rng: &mut ChaCha8Rng, p: usize, blocks: usize, cross: CrossBlock) -> (SymMatrix, Partition) {
    let blocks = blocks.clamp(1, p.max(1));
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut labels = vec![0; p];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = pos * blocks / p;
    }
    let planted = Partition::from_labels(&labels);
    let n = 4 * p;
    let root3 = 3f64.sqrt();
    let v: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.gen_range(-root3..root3)).collect()).collect();
    let signal: Vec<f64> = (0..blocks).map(|_| rng.gen_range(0.3..0.8)).collect();
    let cov = crate::symmat::uncentered_covariance(&v).expect("nonempty sample");
    let mut x = cov.map_indexed(|i, j, c| {
        if planted.same_block(i, j) {
            c + signal[labels[i]]
        } else if cross == CrossBlock::Noise {
            c
        } else {
            0.0
        }
    });
    if cross == CrossBlock::Negative {
        let floor = x.min_eigenvalue().unwrap_or(0.0).max(0.0);
        let delta = 0.5 * floor / p as f64;
        x = x.map_indexed(|i, j, c| if planted.same_block(i, j) { c } else { -rng.gen_range(0.0..delta.max(f64::MIN_POSITIVE)) });
    }
    (x, planted)
}

/// Planted block-diagonal instance for decomposition benchmarks, with a
/// penalty level 10% above the largest cross-block magnitude.
pub fn planted_benchmark(seed: u64, p: usize, blocks: usize) -> (SymMatrix, Partition, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, planted) = random_instance(&mut rng, p, blocks, CrossBlock::Noise);
    let mut cross: f64 = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            if !planted.same_block(i, j) {
                cross = cross.max(x.get(i, j).abs());
            }
        }
    }
    let lambda = if cross > 0.0 { 1.1 * cross } else { 0.1 };
    (x, planted, lambda)
}

/// Unit-diagonal rescaling `D^{-1/2} X D^{-1/2}`.
pub fn to_correlation(x: &SymMatrix) -> SymMatrix {
    let d: Vec<f64> = x.diag().iter().map(|v| 1.0 / v.sqrt()).collect();
    x.map_indexed(|i, j, v| if i == j { 1.0 } else { (v * d[i] * d[j]).clamp(-1.0, 1.0) })
}

/// `n` penalty levels spread over the off-diagonal magnitudes of `x`, each
/// placed halfway between two consecutive distinct magnitudes so no level
/// ties an entry.
pub fn lambda_grid(x: &SymMatrix, n: usize) -> Vec<f64> {
    let p = x.dim();
    let mut mags: Vec<f64> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).map(|(i, j)| x.get(i, j).abs()).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    if mags.len() < 2 {
        return vec![mags.first().copied().unwrap_or(0.0) + 0.1; n.min(1)];
    }
    let m = mags.len() - 1;
    (0..n)
        .map(|t| {
            let k = ((t as f64 + 0.5) / n as f64 * m as f64) as usize;
            let k = k.min(m - 1);
            0.5 * (mags[k] + mags[k + 1])
        })
        .collect()
}

/// The three suites exposed on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Sufficiency,
    Minimality,
    Orbitope,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Sufficiency, Suite::Minimality, Suite::Orbitope];

    pub fn from_name(s: &str) -> Option<Vec<Suite>> {
        Some(match s {
            "sufficiency" => vec![Suite::Sufficiency],
            "minimality" => vec![Suite::Minimality],
            "orbitope" => vec![Suite::Orbitope],
            "all" => Suite::ALL.to_vec(),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub families: Vec<Family>,
    pub suites: Vec<Suite>,
    /// Random instances per size.
    pub instances: usize,
    /// Penalty levels per instance.
    pub lambdas: usize,
    pub tol: f64,
}

impl SuiteConfig {
    pub fn new(seed: u64, sizes: Vec<usize>, families: Vec<Family>) -> Self {
        SuiteConfig {
            seed,
            sizes,
            families,
            suites: vec![Suite::Sufficiency],
            instances: 2,
            lambdas: 3,
            tol: EQUIVALENCE_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub suite: Suite,
    pub check: String,
    pub p: usize,
    pub detail: String,
}

/// Machine-readable outcome of [`run_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub trials: usize,
    pub failures: Vec<Failure>,
    /// Largest observed value of each monitored quantity.
    pub worst: BTreeMap<String, f64>,
    /// Wall time per suite; the only field that varies between runs.
    pub seconds: BTreeMap<String, f64>,
}

impl Summary {
    fn new(seed: u64) -> Self {
        Summary {
            seed,
            trials: 0,
            failures: Vec::new(),
            worst: BTreeMap::new(),
            seconds: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, key: String, value: f64) {
        let slot = self.worst.entry(key).or_insert(0.0);
        if value > *slot || value.is_nan() {
            *slot = value;
        }
    }

    fn check(&mut self, suite: Suite, check: &str, p: usize, ok: bool, detail: impl FnOnce() -> String) {
        self.trials += 1;
        if !ok {
            self.failures.push(Failure {
                suite,
                check: check.to_string(),
                p,
                detail: detail(),
            });
        }
    }
}

/// Sufficiency suite over `families` with default battery sizes.
pub fn run_suite(seed: u64, sizes: &[usize], families: &[Family]) -> Summary {
    run_suites(&SuiteConfig::new(seed, sizes.to_vec(), families.to_vec()))
}

/// Deterministic for a fixed configuration apart from `seconds`.
pub fn run_suites(cfg: &SuiteConfig) -> Summary {
    let mut summary = Summary::new(cfg.seed);
    for &suite in &cfg.suites {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ suite_salt(suite));
        match suite {
            Suite::Sufficiency => sufficiency_suite(cfg, &mut rng, &mut summary),
            Suite::Minimality => minimality_suite(cfg, &mut rng, &mut summary),
            Suite::Orbitope => orbitope_suite(cfg, &mut rng, &mut summary),
        }
        summary
            .seconds
            .insert(format!("{suite:?}").to_lowercase(), started.elapsed().as_secs_f64());
    }
    summary
}

fn suite_salt(s: Suite) -> u64 {
    match s {
        Suite::Sufficiency => 0x5u64,
        Suite::Minimality => 0x6d69_6e69,
        Suite::Orbitope => 0x6f72_6269,
    }
}

/// Ising instances are population moments `(2/π) arcsin(R)` of a
/// thresholded Gaussian with correlation `R`.
pub fn ising_instance(rng: &mut ChaCha8Rng, p: usize, blocks: usize) -> SymMatrix {
    let (x, _) = random_instance(rng, p, blocks, CrossBlock::Noise);
    arcsin_map(&to_correlation(&x)).expect("correlation matrices are valid arcsin inputs")
}

fn family_specs(family: Family, x: &SymMatrix, lambdas: usize, rng: &mut ChaCha8Rng) -> Vec<EstimatorSpec> {
    let grid = lambda_grid(x, lambdas);
    match family {
        Family::GraphicalLasso => grid.into_iter().map(EstimatorSpec::glasso).collect(),
        Family::SparseCovariance => grid.into_iter().map(|l| EstimatorSpec::sparse_cov(l, 0.01)).collect(),
        Family::IsingPmle => grid.into_iter().map(EstimatorSpec::ising).collect(),
        Family::FantopeSpca => grid
            .into_iter()
            .map(|l| EstimatorSpec::fantope(l, rng.gen_range(1..=2usize).min(x.dim())))
            .collect(),
        Family::PositiveInvCov => vec![EstimatorSpec::positive_invcov()],
        Family::Lasso | Family::Nnls => Vec::new(),
    }
}

fn sufficiency_suite(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, summary: &mut Summary) {
    let s = Suite::Sufficiency;
    for &family in &cfg.families {
        let name = family.name();
        for &p in &cfg.sizes {
            if p == 0 || (family == Family::IsingPmle && p > 8) {
                continue;
            }
            for _ in 0..cfg.instances {
                let blocks = rng.gen_range(1..=3usize.min(p));
                if !family.is_matrix() {
                    vector_chain_trial(family, p, rng, summary);
                    continue;
                }
                let x = match family {
                    Family::IsingPmle => ising_instance(rng, p, blocks),
                    Family::PositiveInvCov => random_instance(rng, p, blocks, CrossBlock::Negative).0,
                    _ => random_instance(rng, p, blocks, CrossBlock::Noise).0,
                };
                let input = Input::Matrix(x);
                for spec in family_specs(family, input.as_matrix().expect("matrix"), cfg.lambdas, rng) {
                    match check_sufficiency(&spec, &input, cfg.tol) {
                        Ok(rep) => {
                            summary.record(format!("{name}.deviation"), rep.deviation);
                            summary.record(format!("{name}.objective_gap"), rep.objective_gap);
                            summary.check(s, &format!("{name}.sufficiency"), p, rep.pass, || {
                                format!("{rep:?}")
                            });
                            match estimators::solve(&spec, &input).and_then(|r| kkt_residual(&spec, &input, &r)) {
                                Ok(k) => {
                                    summary.record(format!("{name}.kkt"), k);
                                    summary.check(s, &format!("{name}.kkt"), p, k <= KKT_TOL, || format!("residual {k:e}"));
                                }
                                Err(e) => summary.check(s, &format!("{name}.kkt"), p, false, || e.to_string()),
                            }
                        }
                        Err(e) => summary.check(s, &format!("{name}.sufficiency"), p, false, || e.to_string()),
                    }
                }
            }
        }
    }
}

/// The closed-form identities for the vector estimators, on one random vector.
fn vector_chain_trial(family: Family, p: usize, rng: &mut ChaCha8Rng, summary: &mut Summary) {
    let s = Suite::Sufficiency;
    let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let ok = match family {
        Family::Lasso => {
            let lam: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..2.0)).collect();
            lasso_chain_holds(&x, &lam)
        }
        _ => nnls_chain_holds(&x),
    };
    summary.check(s, &format!("{}.chain", family.name()), p, ok, || format!("x = {x:?}"));
}

/// `lasso(x) = lasso(hard(x))` bitwise. `hard(x) = reconstruct(lasso(x))` on the
/// zero pattern exactly and elsewhere to within 2 ulp, since `(v - λ) + λ` need
/// not round back to `v`.
pub fn lasso_chain_holds(x: &[f64], lambda: &[f64]) -> bool {
    let (Ok(hard), Ok(soft)) = (reduce::hard_threshold(x, lambda), estimators::lasso(x, lambda)) else {
        return false;
    };
    let Ok(back) = reduce::reconstruct_from_soft(&soft, lambda) else {
        return false;
    };
    let Ok(soft_hard) = estimators::lasso(&hard, lambda) else {
        return false;
    };
    let round_trip = hard.iter().zip(&back).all(|(&h, &b)| {
        (h == 0.0) == (b == 0.0) && (h - b).abs() <= 2.0 * f64::EPSILON * h.abs()
    });
    round_trip && bits(&soft) == bits(&soft_hard)
}

/// `nnls(x) = nnls(x₊) = x₊`, bitwise.
pub fn nnls_chain_holds(x: &[f64]) -> bool {
    let plus = reduce::positive_part(x);
    bits(&estimators::nnls(x)) == bits(&plus) && bits(&estimators::nnls(&plus)) == bits(&plus)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|a| a.to_bits()).collect()
}

fn minimality_suite(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, summary: &mut Summary) {
    let s = Suite::Minimality;
    let mut sizes: Vec<usize> = cfg.sizes.iter().copied().filter(|&p| (1..=ENUMERATION_LIMIT).contains(&p)).collect();
    if sizes.is_empty() {
        sizes = vec![3, 4, 5];
    }
    for p in sizes {
        for _ in 0..cfg.instances * cfg.lambdas {
            let x = SymMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { rng.gen_range(-1.0..1.0) });
            let lambda = rng.gen_range(0.0..1.0);
            let ok = check_minimality_slc(&x, lambda);
            summary.check(s, "slc.minimality", p, matches!(ok, Ok(true)), || format!("λ = {lambda}, X = {x:?}, {ok:?}"));
        }
    }
}

fn orbitope_suite(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, summary: &mut Summary) {
    let s = Suite::Orbitope;
    let trials = cfg.instances * cfg.lambdas * 4;

    // binary ultrametric ⟺ positive semidefinite
    for _ in 0..trials {
        let p = rng.gen_range(2..=6usize);
        let mut b = SymMatrix::from_fn(p, |i, j| if i == j || rng.gen_bool(0.5) { 1.0 } else { 0.0 });
        if rng.gen_bool(0.5) {
            // an ultrametric half the time, from a random partition
            let labels: Vec<usize> = (0..p).map(|_| rng.gen_range(0..3)).collect();
            b = Partition::from_labels(&labels).cluster_matrix();
        }
        let ok = ultrametric_matches_psd(&b);
        summary.check(s, "ultrametric.psd", p, matches!(ok, Ok(true)), || format!("{b:?}"));
    }

    // (2/π) arcsin of a correlation matrix lies in the cut polytope
    for _ in 0..trials {
        let p = rng.gen_range(2..=6usize);
        let (x, _) = random_instance(rng, p, 2, CrossBlock::Noise);
        let ok = arcsin_map(&to_correlation(&x)).and_then(|a| cut_membership(&a, p));
        summary.check(s, "arcsin.cut", p, matches!(ok, Ok(true)), || format!("{x:?}: {ok:?}"));
    }

    // simplex membership agrees with the triangle description for p <= 4
    for _ in 0..trials {
        let p = rng.gen_range(2..=4usize);
        let b = SymMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { rng.gen_range(-1.0..1.0) });
        let lp = cut_membership(&b, p);
        let tri = cut_triangle_oracle(&b, 0.0);
        summary.check(s, "cut.triangle", p, matches!((&lp, &tri), (Ok(a), Ok(b)) if a == b), || {
            format!("{b:?}: simplex {lp:?}, triangles {tri:?}")
        });
    }

    // a corrupted single-linkage mask is rejected
    for _ in 0..trials {
        let p = rng.gen_range(3..=8usize);
        let (x, _) = random_instance(rng, p, 2, CrossBlock::Noise);
        let lambda = lambda_grid(&x, 1)[0];
        let spec = EstimatorSpec::glasso(lambda);
        let input = Input::Matrix(x);
        let ok = reduce::reduce_input(&spec.penalty, spec.family.group(), &input).and_then(|r| {
            match corrupted_mask(&spec, &input, &r.mask)? {
                Some(bad) => Ok(!check_projection_conditions(&bad, &input, &spec.penalty, spec.family.group())?.all()),
                None => Ok(true),
            }
        });
        summary.check(s, "negative_control", p, matches!(ok, Ok(true)), || format!("{ok:?}"));
    }
}

/// Uses a corrupted single-linkage mask (one required edge removed) as if it
/// were the reduction. Every trial is expected to fail, so a healthy build
/// reports failures here.
pub fn run_corrupted_control(seed: u64, sizes: &[usize]) -> Summary {
    let started = Instant::now();
    let mut summary = Summary::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0062_6164);
    for &p in sizes.iter().filter(|&&p| p >= 2) {
        let (x, _) = random_instance(&mut rng, p, 2, CrossBlock::Noise);
        let spec = EstimatorSpec::glasso(lambda_grid(&x, 1)[0]);
        let input = Input::Matrix(x.clone());
        let outcome = reduce::reduce_input(&spec.penalty, spec.family.group(), &input).and_then(|r| {
            let Some(MaskProjection::Symmetric(bad)) = corrupted_mask(&spec, &input, &r.mask)? else {
                return Ok(None);
            };
            let cond = check_projection_conditions(&MaskProjection::Symmetric(bad.clone()), &input, &spec.penalty, spec.family.group())?;
            let full = estimators::solve(&spec, &input)?;
            let red = estimators::solve(&spec, &Input::Matrix(x.hadamard(&bad)?))?;
            Ok(Some((cond, estimate_diff(&full.theta, &red.theta)?)))
        });
        match outcome {
            Ok(Some((cond, dev))) => {
                summary.record("corrupted.deviation".into(), dev);
                summary.check(Suite::Sufficiency, "corrupted_mask", p, cond.all() && dev <= EQUIVALENCE_TOL, || {
                    format!("{cond:?}, deviation {dev:e}")
                });
            }
            Ok(None) => {}
            Err(e) => summary.check(Suite::Sufficiency, "corrupted_mask", p, false, || e.to_string()),
        }
    }
    summary.seconds.insert("corrupted".into(), started.elapsed().as_secs_f64());
    summary
}

/// `is_binary_ultrametric(B)` agrees with `λ_min(B) >= -1e-10`.
pub fn ultrametric_matches_psd(b: &SymMatrix) -> Result<bool> {
    Ok(is_binary_ultrametric(b)? == (b.min_eigenvalue()? >= -1e-10))
}
