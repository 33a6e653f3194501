//! Reference solvers for penalized estimators of the form
//! `argmin_θ A(θ) - <x, θ> + h_C(θ)`.
//!
//! Vector families (Lasso, nonnegative least squares) have closed forms.
//! Symmetric-matrix families share one ADMM skeleton ([`admm`]) and differ
//! only in their two proximal steps. The Ising family is solved by proximal
//! gradient on an exactly enumerated log-partition function ([`ising`]).

pub mod admm;
pub mod ising;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::GroupId;
use crate::reduce::{self, Input, PenaltySpec, SymWeights};
use crate::symmat::SymMatrix;

pub use admm::{fantope_project, fantope_spca, glasso, positive_invcov, sparse_cov};
pub use ising::{ising_logpartition, ising_objective, ising_pmle, ISING_MAX_DIM};

/// Relative threshold below which an entry of `θ` is reported as zero.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Estimator output; same shapes as the input.
pub type Estimate = Input;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Lasso,
    Nnls,
    GraphicalLasso,
    FantopeSpca,
    SparseCovariance,
    PositiveInvCov,
    IsingPmle,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Lasso => "lasso",
            Family::Nnls => "nnls",
            Family::GraphicalLasso => "glasso",
            Family::FantopeSpca => "fps",
            Family::SparseCovariance => "sparsecov",
            Family::PositiveInvCov => "posinvcov",
            Family::IsingPmle => "ising",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Some(match name {
            "lasso" => Family::Lasso,
            "nnls" => Family::Nnls,
            "glasso" => Family::GraphicalLasso,
            "fps" | "fantope" => Family::FantopeSpca,
            "sparsecov" => Family::SparseCovariance,
            "posinvcov" => Family::PositiveInvCov,
            "ising" => Family::IsingPmle,
            _ => return None,
        })
    }

    pub fn is_matrix(self) -> bool {
        !matches!(self, Family::Lasso | Family::Nnls)
    }

    pub fn group(self) -> GroupId {
        if self.is_matrix() {
            GroupId::DiagonalConjugation
        } else {
            GroupId::SignFlipVector
        }
    }

    /// Families whose solution is unique, so reduced and full solves must agree.
    pub fn strictly_convex(self) -> bool {
        !matches!(self, Family::FantopeSpca)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stopping tolerance on the (scale-normalized) optimality residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial ADMM penalty parameter.
    pub rho: f64,
    /// Rebalance `rho` when primal and dual residuals drift apart.
    pub adaptive_rho: bool,
    /// ADMM over-relaxation factor in `(0, 2)`; 1 is the plain iteration.
    #[serde(default = "default_relaxation")]
    pub relaxation: f64,
    /// Cap on concurrently solved blocks; `None` reads `SUFFREDUCE_THREADS`.
    pub threads: Option<usize>,
}

fn default_relaxation() -> f64 {
    1.0
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 50_000,
            rho: 1.0,
            adaptive_rho: true,
            relaxation: 1.0,
            threads: None,
        }
    }
}

/// Which estimator to run, with its penalty and family-specific parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub family: Family,
    pub penalty: PenaltySpec,
    /// Target rank (Fantope sparse PCA).
    pub k: Option<usize>,
    /// Eigenvalue floor (sparse covariance).
    pub eps: Option<f64>,
    pub options: SolverOptions,
}

impl EstimatorSpec {
    fn new(family: Family, penalty: PenaltySpec) -> Self {
        EstimatorSpec {
            family,
            penalty,
            k: None,
            eps: None,
            options: SolverOptions::default(),
        }
    }

    pub fn lasso(lambda: Vec<f64>) -> Self {
        Self::new(Family::Lasso, PenaltySpec::EntrywiseL1 { weights: lambda })
    }

    pub fn nnls() -> Self {
        Self::new(Family::Nnls, PenaltySpec::PositiveCone)
    }

    /// Graphical Lasso with `λ` on the off-diagonal and an unpenalized diagonal.
    pub fn glasso(lambda: f64) -> Self {
        Self::new(Family::GraphicalLasso, PenaltySpec::symmetric_l1(lambda))
    }

    /// Graphical Lasso with `λ` on every entry, diagonal included.
    pub fn glasso_full(lambda: f64) -> Self {
        Self::new(
            Family::GraphicalLasso,
            PenaltySpec::SymmetricL1 {
                weights: SymWeights::Uniform {
                    lambda,
                    penalize_diagonal: true,
                },
            },
        )
    }

    pub fn glasso_weighted(weights: SymMatrix) -> Self {
        Self::new(
            Family::GraphicalLasso,
            PenaltySpec::SymmetricL1 {
                weights: SymWeights::Matrix(weights),
            },
        )
    }

    pub fn fantope(lambda: f64, k: usize) -> Self {
        let mut s = Self::new(
            Family::FantopeSpca,
            PenaltySpec::SymmetricL1 {
                weights: SymWeights::Uniform {
                    lambda,
                    penalize_diagonal: true,
                },
            },
        );
        s.k = Some(k);
        s
    }

    pub fn sparse_cov(lambda: f64, eps: f64) -> Self {
        let mut s = Self::new(
            Family::SparseCovariance,
            PenaltySpec::SymmetricL1 {
                weights: SymWeights::Uniform {
                    lambda,
                    penalize_diagonal: true,
                },
            },
        );
        s.eps = Some(eps);
        s
    }

    pub fn positive_invcov() -> Self {
        Self::new(Family::PositiveInvCov, PenaltySpec::OffDiagPositivity)
    }

    pub fn ising(lambda: f64) -> Self {
        Self::new(Family::IsingPmle, PenaltySpec::symmetric_l1(lambda))
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    /// Scalar `λ` of a uniform symmetric ℓ1 penalty.
    pub fn uniform_lambda(&self) -> Option<f64> {
        match &self.penalty {
            PenaltySpec::SymmetricL1 {
                weights: SymWeights::Uniform { lambda, .. },
            } => Some(*lambda),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.penalty.validate()?;
        let expected = match self.family {
            Family::Lasso => matches!(self.penalty, PenaltySpec::EntrywiseL1 { .. }),
            Family::Nnls => matches!(self.penalty, PenaltySpec::PositiveCone),
            Family::PositiveInvCov => matches!(self.penalty, PenaltySpec::OffDiagPositivity),
            Family::GraphicalLasso => matches!(self.penalty, PenaltySpec::SymmetricL1 { .. }),
            Family::FantopeSpca | Family::SparseCovariance | Family::IsingPmle => {
                self.uniform_lambda().is_some()
            }
        };
        if !expected {
            return Err(Error::Unsupported(format!(
                "{:?} penalty for the {} estimator",
                self.penalty.kind(),
                self.family.name()
            )));
        }
        if self.family == Family::FantopeSpca && self.k.is_none() {
            return Err(Error::InvalidParameter("fantope sparse PCA needs a rank k".into()));
        }
        if self.family == Family::SparseCovariance && !matches!(self.eps, Some(e) if e > 0.0) {
            return Err(Error::InvalidParameter(
                "sparse covariance needs an eigenvalue floor eps > 0".into(),
            ));
        }
        let o = &self.options;
        if !(o.tol > 0.0) || o.max_iter == 0 || !(o.rho > 0.0) || !(o.relaxation > 0.0 && o.relaxation < 2.0) {
            return Err(Error::InvalidParameter(
                "solver options need tol > 0, max_iter > 0, rho > 0 and relaxation in (0, 2)".into(),
            ));
        }
        Ok(())
    }
}

/// Wall time and iterations spent on one diagonal block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStat {
    pub indices: Vec<usize>,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub theta: Estimate,
    pub objective: f64,
    /// Solver's own optimality residual at exit.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Entries with `|θ| > SUPPORT_TOL * max|θ|`.
    pub support: Estimate,
    /// Multiplier of the splitting constraint `θ = Z` (ADMM families), i.e.
    /// the penalty subgradient certified at the solution.
    pub dual: Option<SymMatrix>,
    /// Per-block breakdown, present for decomposed solves.
    pub blocks: Option<Vec<BlockStat>>,
    pub seconds: f64,
}

impl SolveReport {
    pub fn theta_matrix(&self) -> Option<&SymMatrix> {
        self.theta.as_matrix()
    }

    pub fn theta_vector(&self) -> Option<&[f64]> {
        self.theta.as_vector()
    }
}

pub(crate) fn support_of(theta: &Estimate) -> Estimate {
    match theta {
        Input::Vector(v) => {
            let cut = SUPPORT_TOL * v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            Input::Vector(v.iter().map(|a| if a.abs() > cut { 1.0 } else { 0.0 }).collect())
        }
        Input::Matrix(m) => {
            let cut = SUPPORT_TOL * m.max_abs();
            Input::Matrix(m.map(|a| if a.abs() > cut { 1.0 } else { 0.0 }))
        }
    }
}

/// Closed-form report for vector estimators.
fn closed_form_report(theta: Vec<f64>, objective: f64, started: Instant) -> SolveReport {
    let theta = Input::Vector(theta);
    SolveReport {
        support: support_of(&theta),
        theta,
        objective,
        kkt_residual: 0.0,
        iterations: 0,
        converged: true,
        dual: None,
        blocks: None,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Soft thresholding `sign(x_i) max(|x_i| - λ_i, 0)`: the Lasso with identity design.
pub fn lasso(x: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
    if x.len() != lambda.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: lambda.len(),
        });
    }
    Ok(x.iter()
        .zip(lambda)
        .map(|(&v, &l)| if v.abs() > l { v - l * v.signum() } else { 0.0 })
        .collect())
}

/// `argmin_{θ >= 0} ½‖x - θ‖²`, i.e. `max(x, 0)`.
pub fn nnls(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

#[inline]
pub(crate) fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn vector_input(x: &Input) -> Result<&[f64]> {
    x.as_vector()
        .ok_or_else(|| Error::Unsupported("vector estimator given a matrix input".into()))
}

fn matrix_input(x: &Input) -> Result<&SymMatrix> {
    x.as_matrix()
        .ok_or_else(|| Error::Unsupported("matrix estimator given a vector input".into()))
}

/// Runs the estimator described by `spec` on `x`.
pub fn solve(spec: &EstimatorSpec, x: &Input) -> Result<SolveReport> {
    spec.validate()?;
    let started = Instant::now();
    let opts = &spec.options;
    match spec.family {
        Family::Lasso => {
            let v = vector_input(x)?;
            let PenaltySpec::EntrywiseL1 { weights } = &spec.penalty else {
                unreachable!("validated")
            };
            let theta = lasso(v, weights)?;
            let objective = theta
                .iter()
                .zip(v)
                .zip(weights)
                .map(|((t, a), w)| 0.5 * (a - t) * (a - t) + w * t.abs())
                .sum();
            Ok(closed_form_report(theta, objective, started))
        }
        Family::Nnls => {
            let v = vector_input(x)?;
            let theta = nnls(v);
            let objective = theta.iter().zip(v).map(|(t, a)| 0.5 * (a - t) * (a - t)).sum();
            Ok(closed_form_report(theta, objective, started))
        }
        Family::GraphicalLasso => {
            let m = matrix_input(x)?;
            let PenaltySpec::SymmetricL1 { weights } = &spec.penalty else {
                unreachable!("validated")
            };
            glasso(m, &weights.to_matrix(m.dim()), opts)
        }
        Family::FantopeSpca => {
            let m = matrix_input(x)?;
            fantope_spca(m, spec.uniform_lambda().unwrap_or(0.0), spec.k.unwrap_or(1), opts)
        }
        Family::SparseCovariance => {
            let m = matrix_input(x)?;
            sparse_cov(m, spec.uniform_lambda().unwrap_or(0.0), spec.eps.unwrap_or(0.0), opts)
        }
        Family::PositiveInvCov => positive_invcov(matrix_input(x)?, opts),
        Family::IsingPmle => ising_pmle(matrix_input(x)?, spec.uniform_lambda().unwrap_or(0.0), opts),
    }
}

/// The objective of `spec` on data `x`, evaluated at `theta`. Same sign
/// conventions as [`SolveReport::objective`] (Fantope is maximized).
pub fn objective(spec: &EstimatorSpec, x: &Input, theta: &Estimate) -> Result<f64> {
    spec.validate()?;
    match (spec.family, x, theta) {
        (Family::Lasso | Family::Nnls, Input::Vector(v), Input::Vector(t)) => {
            same_len(v.len(), t.len())?;
            let weights: &[f64] = match &spec.penalty {
                PenaltySpec::EntrywiseL1 { weights } => weights,
                _ => &[],
            };
            Ok((0..v.len())
                .map(|i| 0.5 * (v[i] - t[i]).powi(2) + weights.get(i).map_or(0.0, |w| w * t[i].abs()))
                .sum())
        }
        (family, Input::Matrix(m), Input::Matrix(t)) if family.is_matrix() => {
            m.check_dim(t)?;
            let lambda = spec.uniform_lambda().unwrap_or(0.0);
            match family {
                Family::GraphicalLasso => {
                    let PenaltySpec::SymmetricL1 { weights } = &spec.penalty else {
                        unreachable!("validated")
                    };
                    let penalty = weights.to_matrix(m.dim()).hadamard(&t.abs())?.entry_sum();
                    Ok(-admm::log_det_pd(t)? + m.inner(t)? + penalty)
                }
                Family::FantopeSpca => Ok(m.inner(t)? - lambda * t.l1_norm()),
                Family::SparseCovariance => {
                    let diff = t.sub(m)?;
                    Ok(0.5 * diff.inner(&diff)? + lambda * t.l1_norm())
                }
                Family::PositiveInvCov => Ok(-admm::log_det_pd(t)? + m.inner(t)?),
                Family::IsingPmle => ising_objective(t, m, lambda),
                Family::Lasso | Family::Nnls => unreachable!(),
            }
        }
        _ => Err(Error::Unsupported(format!(
            "{} objective needs matching data and estimate shapes",
            spec.family.name()
        ))),
    }
}

fn same_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn thread_cap(opts: &SolverOptions) -> usize {
    opts.threads
        .or_else(|| {
            std::env::var("SUFFREDUCE_THREADS")
                .ok()
                .and_then(|s| s.trim().parse().ok())
        })
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

/// Reduces `X`, solves each diagonal block of the reduction independently and
/// reassembles the blocks with exact zeros between them.
///
/// Fantope sparse PCA couples blocks through its trace constraint, so for that
/// family only the input reduction is applied before a single full solve.
pub fn solve_decomposed(spec: &EstimatorSpec, x: &SymMatrix) -> Result<SolveReport> {
    spec.validate()?;
    if !spec.family.is_matrix() {
        return Err(Error::Unsupported(format!(
            "{} is not a symmetric-matrix estimator",
            spec.family.name()
        )));
    }
    let started = Instant::now();
    let reduced = reduce::reduce_input(&spec.penalty, spec.family.group(), &Input::Matrix(x.clone()))?;
    let reduced_x = reduced
        .reduced
        .as_matrix()
        .cloned()
        .expect("matrix reduction yields a matrix");
    let partition = reduced.partition.expect("matrix reduction yields a partition");

    if spec.family == Family::FantopeSpca || partition.num_blocks() == 1 {
        let mut report = solve(spec, &Input::Matrix(reduced_x))?;
        report.seconds = started.elapsed().as_secs_f64();
        report.blocks = Some(vec![BlockStat {
            indices: (0..x.dim()).collect(),
            iterations: report.iterations,
            seconds: report.seconds,
        }]);
        return Ok(report);
    }

    let blocks = reduce::decompose_blocks(&reduced_x, &partition)?;
    let threads = thread_cap(&spec.options).min(blocks.len());
    let results: Vec<Result<(SolveReport, f64)>> = if threads <= 1 {
        blocks.iter().map(|(_, sub)| solve_block(spec, sub)).collect()
    } else {
        let mut slots: Vec<Option<Result<(SolveReport, f64)>>> = vec![None; blocks.len()];
        std::thread::scope(|scope| {
            let chunk = blocks.len().div_ceil(threads);
            for (block_chunk, slot_chunk) in blocks.chunks(chunk).zip(slots.chunks_mut(chunk)) {
                scope.spawn(move || {
                    for ((_, sub), slot) in block_chunk.iter().zip(slot_chunk.iter_mut()) {
                        *slot = Some(solve_block(spec, sub));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every block solved")).collect()
    };

    let mut solved = Vec::with_capacity(blocks.len());
    let mut stats = Vec::with_capacity(blocks.len());
    let mut duals = Vec::with_capacity(blocks.len());
    // every objective here is additive over diagonal blocks of a block-diagonal θ
    let (mut objective, mut residual, mut iterations, mut converged) = (0.0, 0.0f64, 0, true);
    for ((indices, _), result) in blocks.iter().zip(results) {
        let (report, seconds) = result?;
        let theta = report.theta.as_matrix().cloned().expect("matrix estimate");
        objective += report.objective;
        residual = residual.max(report.kkt_residual);
        iterations += report.iterations;
        converged &= report.converged;
        stats.push(BlockStat {
            indices: indices.clone(),
            iterations: report.iterations,
            seconds,
        });
        if let Some(d) = report.dual {
            duals.push((indices.clone(), d));
        }
        solved.push((indices.clone(), theta));
    }
    let theta = reduce::reassemble_blocks(x.dim(), &solved)?;
    // off-block multipliers follow from θ = W = 0 there
    let dual = if duals.len() == solved.len() {
        let d = reduce::reassemble_blocks(x.dim(), &duals)?;
        let sign = if spec.family == Family::SparseCovariance { 1.0 } else { -1.0 };
        Some(d.map_indexed(|i, j, v| {
            if partition.same_block(i, j) {
                v
            } else {
                sign * x.get(i, j)
            }
        }))
    } else {
        None
    };
    let theta = Input::Matrix(theta);
    Ok(SolveReport {
        support: support_of(&theta),
        theta,
        objective,
        kkt_residual: residual,
        iterations,
        converged,
        dual,
        blocks: Some(stats),
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn solve_block(spec: &EstimatorSpec, sub: &SymMatrix) -> Result<(SolveReport, f64)> {
    let t = Instant::now();
    let report = solve(spec, &Input::Matrix(sub.clone()))?;
    Ok((report, t.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_matches_solver_report() {
        let x = SymMatrix::from_dense(&[[2.0, 0.6, 0.1], [0.6, 1.5, -0.4], [0.1, -0.4, 1.0]], 0.0).unwrap();
        let input = Input::Matrix(x);
        for spec in [
            EstimatorSpec::glasso(0.2),
            EstimatorSpec::fantope(0.2, 1),
            EstimatorSpec::sparse_cov(0.2, 0.05),
            EstimatorSpec::positive_invcov(),
            EstimatorSpec::ising(0.2),
        ] {
            let r = solve(&spec, &input).unwrap();
            let f = objective(&spec, &input, &r.theta).unwrap();
            assert!((f - r.objective).abs() <= 1e-9 * r.objective.abs().max(1.0), "{:?}", spec.family);
        }
        let v = Input::Vector(vec![3.0, -0.5]);
        let spec = EstimatorSpec::lasso(vec![1.0, 1.0]);
        let r = solve(&spec, &v).unwrap();
        assert_eq!(objective(&spec, &v, &r.theta).unwrap(), r.objective);
        assert!(objective(&spec, &input, &r.theta).is_err());
    }

    #[test]
    fn lasso_examples() {
        assert_eq!(lasso(&[3.0], &[1.0]).unwrap(), vec![2.0]);
        assert_eq!(lasso(&[0.5], &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(lasso(&[-3.0], &[1.0]).unwrap(), vec![-2.0]);
        assert!(lasso(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn nnls_examples() {
        assert_eq!(nnls(&[1.0, -2.0]), vec![1.0, 0.0]);
        assert_eq!(nnls(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(nnls(&[-1.0, -0.1]), vec![0.0, 0.0]);
    }

    #[test]
    fn nnls_matches_projected_gradient() {
        let x: [f64; 5] = [0.7, -1.3, 2.5, -0.01, 0.0];
        // projected gradient on ½‖x - θ‖² with step 1/2 from θ = 0
        let mut theta = [0.0; 5];
        for _ in 0..200 {
            for (t, &a) in theta.iter_mut().zip(&x) {
                *t = (*t - 0.5 * (*t - a)).max(0.0);
            }
        }
        for (a, b) in nnls(&x).iter().zip(&theta) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(EstimatorSpec::glasso(0.1).validate().is_ok());
        let mut bad = EstimatorSpec::fantope(0.1, 1);
        bad.k = None;
        assert!(bad.validate().is_err());
        assert!(EstimatorSpec::sparse_cov(0.1, 0.0).validate().is_err());
        let mut bad = EstimatorSpec::lasso(vec![1.0]);
        bad.penalty = PenaltySpec::PositiveCone;
        assert!(matches!(bad.validate(), Err(Error::Unsupported(_))));
        let mut bad = EstimatorSpec::glasso(0.1);
        bad.options.tol = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dispatch_rejects_wrong_shape() {
        let v = Input::Vector(vec![1.0]);
        assert!(solve(&EstimatorSpec::glasso(0.1), &v).is_err());
        let m = Input::Matrix(SymMatrix::identity(2));
        assert!(solve(&EstimatorSpec::nnls(), &m).is_err());
        assert!(solve_decomposed(&EstimatorSpec::nnls(), &SymMatrix::identity(2)).is_err());
    }

    #[test]
    fn vector_dispatch() {
        let r = solve(&EstimatorSpec::lasso(vec![1.0, 1.0]), &Input::Vector(vec![3.0, 0.5])).unwrap();
        assert_eq!(r.theta, Input::Vector(vec![2.0, 0.0]));
        assert_eq!(r.support, Input::Vector(vec![1.0, 0.0]));
        let r = solve(&EstimatorSpec::nnls(), &Input::Vector(vec![1.0, -2.0])).unwrap();
        assert_eq!(r.theta, Input::Vector(vec![1.0, 0.0]));
    }
}
