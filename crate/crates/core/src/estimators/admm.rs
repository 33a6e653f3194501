//! Scaled-form ADMM for `min f(θ) + g(Z)` subject to `θ = Z`, specialized to
//! the symmetric-matrix estimators.
//!
//! Every family supplies the two proximal maps; the loop, the residuals and
//! the penalty-parameter rebalancing are shared. The returned estimate is
//! the `Z` iterate, which carries the penalty's exact zeros (or the
//! constraint's exact signs).

use std::time::Instant;

use crate::error::{Error, Result};
use crate::reduce::Input;
use crate::symmat::{eigh, eigh_warm, EigenDecomposition, SymMatrix};

use super::{soft, support_of, SolveReport, SolverOptions};

/// Trace tolerance of the Fantope projection.
pub const FANTOPE_TRACE_TOL: f64 = 1e-12;
/// Eigenvalue floor below which an unpenalized Graphical Lasso has no solution.
pub const SINGULAR_FLOOR: f64 = 1e-12;

// Residual balancing. Infrequent, fairly aggressive rescaling beat the usual
// (10, every 10, x2) rule on slow Fantope instances.
const RHO_EVERY: usize = 50;
const RHO_MU: f64 = 3.0;
const RHO_TAU: f64 = 3.0;

/// The two proximal steps of one estimator.
trait Splitting {
    const NAME: &'static str;

    /// `argmin_θ f(θ) + (ρ/2)‖θ - v‖²`.
    fn theta_step(&mut self, v: &SymMatrix, rho: f64) -> Result<SymMatrix>;

    /// `argmin_Z g(Z) + (ρ/2)‖Z - v‖²`.
    fn z_step(&self, v: &SymMatrix, rho: f64) -> SymMatrix;

    /// Extra acceptance test on the final `Z` (e.g. definiteness).
    fn accept(&mut self, _z: &SymMatrix) -> Result<bool> {
        Ok(true)
    }
}

struct Outcome {
    z: SymMatrix,
    dual: SymMatrix,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn run<S: Splitting>(split: &mut S, p: usize, scale: f64, opts: &SolverOptions) -> Result<Outcome> {
    let mut rho = opts.rho;
    let mut z = SymMatrix::zeros(p);
    let mut u = SymMatrix::zeros(p);
    let scale = scale.max(1.0);
    let mut residual = f64::INFINITY;
    let alpha = opts.relaxation;
    for iter in 1..=opts.max_iter {
        let v = z.sub(&u)?;
        let theta = split.theta_step(&v, rho)?;
        let relaxed = if alpha == 1.0 {
            theta.clone()
        } else {
            theta.zip_with(&z, |t, zo| alpha * t + (1.0 - alpha) * zo)?
        };
        let w = relaxed.add(&u)?;
        let z_new = split.z_step(&w, rho);

        let mut primal: f64 = 0.0;
        let mut change: f64 = 0.0;
        {
            let up = u.packed_mut();
            for ((((uk, &tk), &hk), &zk), &zo) in up
                .iter_mut()
                .zip(theta.packed())
                .zip(relaxed.packed())
                .zip(z_new.packed())
                .zip(z.packed())
            {
                *uk += hk - zk;
                primal = primal.max((tk - zk).abs());
                change = change.max((zk - zo).abs());
            }
        }
        let dual = rho * change;
        z = z_new;
        residual = primal.max(dual) / scale;

        if residual <= opts.tol && split.accept(&z)? {
            return Ok(Outcome {
                dual: u.scale(rho),
                z,
                iterations: iter,
                residual,
                converged: true,
            });
        }
        if opts.adaptive_rho && iter % RHO_EVERY == 0 {
            let factor = if primal > RHO_MU * dual {
                RHO_TAU
            } else if dual > RHO_MU * primal {
                1.0 / RHO_TAU
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u = u.scale(1.0 / factor);
            }
        }
    }
    Ok(Outcome {
        dual: u.scale(rho),
        z,
        iterations: opts.max_iter,
        residual,
        converged: false,
    })
}

fn finish(
    name: &'static str,
    out: Outcome,
    objective: f64,
    started: Instant,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if !out.converged {
        return Err(Error::NoConvergence {
            solver: name,
            iterations: opts.max_iter,
            residual: out.residual,
        });
    }
    let theta = Input::Matrix(out.z);
    Ok(SolveReport {
        support: support_of(&theta),
        theta,
        objective,
        kkt_residual: out.residual,
        iterations: out.iterations,
        converged: true,
        dual: Some(out.dual),
        blocks: None,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Eigendecomposition that reuses the previous basis as a warm start.
#[derive(Default)]
struct WarmEigen {
    basis: Option<Vec<f64>>,
}

impl WarmEigen {
    fn decompose(&mut self, m: &SymMatrix) -> Result<EigenDecomposition> {
        let e = match eigh_warm(m, self.basis.as_deref()) {
            Ok(e) => e,
            // a poor warm start never prevents a cold solve
            Err(_) if self.basis.is_some() => eigh(m)?,
            Err(err) => return Err(err),
        };
        self.basis = Some(e.warm_start().to_vec());
        Ok(e)
    }
}

/// `-log det θ + <X, θ> + (ρ/2)‖θ - v‖²` is minimized by the spectral map
/// `d -> (d + sqrt(d² + 4ρ)) / 2ρ` of `ρv - X`.
fn logdet_prox(eig: &mut WarmEigen, x: &SymMatrix, v: &SymMatrix, rho: f64) -> Result<SymMatrix> {
    let target = v.scale(rho).sub(x)?;
    let e = eig.decompose(&target)?;
    Ok(e.spectral_map(|d| {
        let root = (d * d + 4.0 * rho).sqrt();
        if d >= 0.0 {
            (d + root) / (2.0 * rho)
        } else {
            2.0 / (root - d)
        }
    }))
}

pub(crate) fn log_det_pd(m: &SymMatrix) -> Result<f64> {
    let e = eigh(m)?;
    if e.values.iter().any(|&v| v <= 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(e.values.iter().map(|v| v.ln()).sum())
}

struct GlassoSplit<'a> {
    x: &'a SymMatrix,
    weights: &'a SymMatrix,
    eig: WarmEigen,
}

impl Splitting for GlassoSplit<'_> {
    const NAME: &'static str = "graphical lasso ADMM";

    fn theta_step(&mut self, v: &SymMatrix, rho: f64) -> Result<SymMatrix> {
        logdet_prox(&mut self.eig, self.x, v, rho)
    }

    fn z_step(&self, v: &SymMatrix, rho: f64) -> SymMatrix {
        v.zip_with(self.weights, |a, w| soft(a, w / rho))
            .expect("weights match the input dimension")
    }

    fn accept(&mut self, z: &SymMatrix) -> Result<bool> {
        Ok(z.min_eigenvalue()? > 0.0)
    }
}

/// Graphical Lasso: `argmin_{θ ≻ 0} -log det θ + <X, θ> + Σ Λ_ij |θ_ij|`.
///
/// An unpenalized problem (`Λ = 0`) has a solution only when `X` is positive
/// definite; a singular `X` is reported as [`Error::Infeasible`], as is a zero
/// diagonal weight paired with a nonpositive `X_ii`.
pub fn glasso(x: &SymMatrix, weights: &SymMatrix, opts: &SolverOptions) -> Result<SolveReport> {
    let started = Instant::now();
    x.check_dim(weights)?;
    let p = x.dim();
    if weights.packed().iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidParameter("glasso weights must be nonnegative".into()));
    }
    for i in 0..p {
        if weights.get(i, i) == 0.0 && !(x.get(i, i) > 0.0) {
            return Err(Error::Infeasible(format!(
                "unpenalized diagonal entry {i} needs X_ii > 0"
            )));
        }
    }
    if weights.max_abs_offdiag() == 0.0 {
        let min_eig = x.min_eigenvalue()?;
        if min_eig <= SINGULAR_FLOOR * x.max_abs().max(1.0) {
            return Err(Error::Infeasible(format!(
                "unpenalized problem needs X positive definite (min eigenvalue {min_eig:e})"
            )));
        }
    }
    let mut split = GlassoSplit {
        x,
        weights,
        eig: WarmEigen::default(),
    };
    let out = run(&mut split, p, x.max_abs(), opts)?;
    let objective = if out.converged {
        -log_det_pd(&out.z)? + x.inner(&out.z)? + weights.hadamard(&out.z.abs())?.entry_sum()
    } else {
        f64::NAN
    };
    finish(GlassoSplit::NAME, out, objective, started, opts)
}

/// Euclidean projection onto `F^k = {θ : 0 ⪯ θ ⪯ I, tr θ = k}`.
///
/// Eigenvalues `γ_i` are replaced by `clip(γ_i - ν, 0, 1)` with the shift `ν`
/// found by bisection so that the trace equals `k`.
pub fn fantope_project(w: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let e = eigh(w)?;
    fantope_from_eigen(&e, k)
}

fn fantope_from_eigen(e: &EigenDecomposition, k: usize) -> Result<SymMatrix> {
    let p = e.dim();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("fantope rank k = {k} must lie in 1..={p}")));
    }
    let shift = fantope_shift(&e.values, k)?;
    Ok(e.spectral_map(|g| (g - shift).clamp(0.0, 1.0)))
}

fn fantope_shift(values: &[f64], k: usize) -> Result<f64> {
    let target = k as f64;
    let trace = |nu: f64| values.iter().map(|g| (g - nu).clamp(0.0, 1.0)).sum::<f64>();
    let hi_g = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo_g = values.iter().cloned().fold(f64::INFINITY, f64::min);
    // trace(lo) = p >= k and trace(hi) = 0 <= k
    let (mut lo, mut hi) = (lo_g - 1.0, hi_g);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let t = trace(mid);
        if (t - target).abs() <= FANTOPE_TRACE_TOL {
            return Ok(mid);
        }
        if t > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // bisection stalled at floating-point resolution: solve exactly on the
    // linear piece containing the bracket
    let nu = 0.5 * (lo + hi);
    let (mut free_sum, mut free_n, mut ones) = (0.0, 0usize, 0usize);
    for &g in values {
        let c = g - nu;
        if c >= 1.0 {
            ones += 1;
        } else if c > 0.0 {
            free_sum += g;
            free_n += 1;
        }
    }
    let refined = if free_n > 0 {
        (free_sum + ones as f64 - target) / free_n as f64
    } else {
        nu
    };
    for cand in [refined, nu] {
        if (trace(cand) - target).abs() <= FANTOPE_TRACE_TOL * target.max(1.0) {
            return Ok(cand);
        }
    }
    Err(Error::NoConvergence {
        solver: "fantope projection bisection",
        iterations: 200,
        residual: (trace(nu) - target).abs(),
    })
}

struct FantopeSplit<'a> {
    x: &'a SymMatrix,
    lambda: f64,
    k: usize,
    eig: WarmEigen,
}

impl Splitting for FantopeSplit<'_> {
    const NAME: &'static str = "fantope sparse PCA ADMM";

    fn theta_step(&mut self, v: &SymMatrix, rho: f64) -> Result<SymMatrix> {
        let target = v.add(&self.x.scale(1.0 / rho))?;
        let e = self.eig.decompose(&target)?;
        fantope_from_eigen(&e, self.k)
    }

    fn z_step(&self, v: &SymMatrix, rho: f64) -> SymMatrix {
        let t = self.lambda / rho;
        v.map(|a| soft(a, t))
    }
}

/// Fantope sparse PCA: `argmax_{θ ∈ F^k} <X, θ> - λ‖θ‖₁`.
///
/// The reported objective is the maximized value `<X, θ> - λ‖θ‖₁`.
pub fn fantope_spca(x: &SymMatrix, lambda: f64, k: usize, opts: &SolverOptions) -> Result<SolveReport> {
    let started = Instant::now();
    let p = x.dim();
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("fantope rank k = {k} must lie in 1..={p}")));
    }
    let mut split = FantopeSplit {
        x,
        lambda,
        k,
        eig: WarmEigen::default(),
    };
    let out = run(&mut split, p, x.max_abs(), opts)?;
    let objective = x.inner(&out.z)? - lambda * out.z.l1_norm();
    finish(FantopeSplit::NAME, out, objective, started, opts)
}

struct SparseCovSplit<'a> {
    x: &'a SymMatrix,
    lambda: f64,
    eps: f64,
    eig: WarmEigen,
}

impl Splitting for SparseCovSplit<'_> {
    const NAME: &'static str = "sparse covariance ADMM";

    fn theta_step(&mut self, v: &SymMatrix, rho: f64) -> Result<SymMatrix> {
        let target = self.x.add(&v.scale(rho))?.scale(1.0 / (1.0 + rho));
        let e = self.eig.decompose(&target)?;
        let eps = self.eps;
        Ok(e.spectral_map(|g| g.max(eps)))
    }

    fn z_step(&self, v: &SymMatrix, rho: f64) -> SymMatrix {
        let t = self.lambda / rho;
        v.map(|a| soft(a, t))
    }

    fn accept(&mut self, z: &SymMatrix) -> Result<bool> {
        Ok(z.min_eigenvalue()? >= self.eps - 1e-10)
    }
}

/// Sparse covariance: `argmin_{θ ⪰ εI} ½‖X - θ‖² + λ‖θ‖₁` (all entries penalized).
pub fn sparse_cov(x: &SymMatrix, lambda: f64, eps: f64, opts: &SolverOptions) -> Result<SolveReport> {
    let started = Instant::now();
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eigenvalue floor must be > 0, got {eps}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut split = SparseCovSplit {
        x,
        lambda,
        eps,
        eig: WarmEigen::default(),
    };
    let out = run(&mut split, x.dim(), x.max_abs(), opts)?;
    let diff = x.sub(&out.z)?;
    let objective = 0.5 * diff.inner(&diff)? + lambda * out.z.l1_norm();
    finish(SparseCovSplit::NAME, out, objective, started, opts)
}

struct PositiveSplit<'a> {
    x: &'a SymMatrix,
    eig: WarmEigen,
}

impl Splitting for PositiveSplit<'_> {
    const NAME: &'static str = "sign-constrained inverse covariance ADMM";

    fn theta_step(&mut self, v: &SymMatrix, rho: f64) -> Result<SymMatrix> {
        logdet_prox(&mut self.eig, self.x, v, rho)
    }

    fn z_step(&self, v: &SymMatrix, _rho: f64) -> SymMatrix {
        v.map_indexed(|i, j, a| if i == j { a } else { a.min(0.0) })
    }

    fn accept(&mut self, z: &SymMatrix) -> Result<bool> {
        Ok(z.min_eigenvalue()? > 0.0)
    }
}

/// Gaussian maximum likelihood for the precision matrix `Ω` with nonpositive
/// off-diagonal entries: `argmin -log det Ω + <X, Ω>` s.t. `Ω_ij <= 0, i != j`.
///
/// This is the estimator with generator `-log det(-θ)` and penalty set
/// `{Z : Z_ii = 0, Z_ij <= 0}` written for `Ω = -θ`.
pub fn positive_invcov(x: &SymMatrix, opts: &SolverOptions) -> Result<SolveReport> {
    let started = Instant::now();
    let p = x.dim();
    if let Some(i) = (0..p).find(|&i| !(x.get(i, i) > 0.0)) {
        return Err(Error::Infeasible(format!("diagonal entry {i} must be positive")));
    }
    let mut split = PositiveSplit {
        x,
        eig: WarmEigen::default(),
    };
    let out = run(&mut split, p, x.max_abs(), opts)?;
    let objective = if out.converged {
        -log_det_pd(&out.z)? + x.inner(&out.z)?
    } else {
        f64::NAN
    };
    finish(PositiveSplit::NAME, out, objective, started, opts)
}
