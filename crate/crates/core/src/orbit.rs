//! Majorization with respect to the two sign groups, cut-polytope membership
//! and the projection conditions a reduction mask has to meet.
//!
//! For coordinate sign flips the orbitope of `u` is the box
//! `{d ∘ u : |d_i| <= 1}`. For conjugation by diagonal sign matrices it is
//! `{B ∘ U : B ∈ Cut_p}`, where `Cut_p` is the convex hull of the rank-one
//! sign matrices `y yᵀ`. Exact cut membership is decided by a phase-one
//! simplex over the `2^(p-1)` vertices, so it is limited to small `p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::is_binary_ultrametric;
use crate::reduce::{Input, PenaltySpec, SymWeights};
use crate::symmat::SymMatrix;

/// Default dimension cap for exact cut-polytope membership.
pub const DEFAULT_CUT_LIMIT: usize = 12;
/// Feasibility tolerance on the moment-matching residual.
pub const CUT_FEASIBILITY_TOL: f64 = 1e-8;
/// Tolerance for the positive-semidefinite precondition of [`arcsin_map`].
pub const PSD_TOL: f64 = 1e-10;

/// The group acting on the estimator's parameter space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupId {
    /// Coordinate sign flips `θ -> Dθ` on vectors.
    SignFlipVector,
    /// Conjugation `θ -> DθD` by diagonal sign matrices on symmetric matrices.
    DiagonalConjugation,
}

/// A linear map of the form `u -> d ∘ u` (vectors) or `U -> B ∘ U` (matrices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MaskProjection {
    Vector(Vec<f64>),
    Symmetric(SymMatrix),
}

impl MaskProjection {
    /// Validates entries: finite and within `[-1, 1]`.
    pub fn vector(d: Vec<f64>) -> Result<Self> {
        if let Some(i) = d.iter().position(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mask entry {i} = {} is outside [-1, 1]",
                d[i]
            )));
        }
        Ok(MaskProjection::Vector(d))
    }

    /// Validates entries in `[-1, 1]` and a unit diagonal.
    pub fn symmetric(b: SymMatrix) -> Result<Self> {
        if b.packed().iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::InvalidParameter("mask entries must lie in [-1, 1]".into()));
        }
        if !b.has_unit_diagonal() {
            return Err(Error::InvalidParameter("symmetric mask needs a unit diagonal".into()));
        }
        Ok(MaskProjection::Symmetric(b))
    }

    /// Binary masks give idempotent, self-adjoint maps: orthogonal projections.
    pub fn is_binary(&self) -> bool {
        match self {
            MaskProjection::Vector(d) => d.iter().all(|&v| v == 0.0 || v == 1.0),
            MaskProjection::Symmetric(b) => b.is_binary(),
        }
    }

    pub fn apply(&self, x: &Input) -> Result<Input> {
        match (self, x) {
            (MaskProjection::Vector(d), Input::Vector(v)) => {
                if d.len() != v.len() {
                    return Err(Error::DimensionMismatch {
                        expected: d.len(),
                        found: v.len(),
                    });
                }
                Ok(Input::Vector(d.iter().zip(v).map(|(a, b)| a * b).collect()))
            }
            (MaskProjection::Symmetric(b), Input::Matrix(m)) => Ok(Input::Matrix(b.hadamard(m)?)),
            _ => Err(Error::Unsupported("mask and input shapes differ".into())),
        }
    }
}

/// True iff `v = d ∘ u` for some `d` with `|d_i| <= 1`.
pub fn sign_majorizes(u: &[f64], v: &[f64]) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(u.iter().zip(v).all(|(&a, &b)| b.abs() <= a.abs()))
}

/// Phase-one simplex: is `{w >= 0 : A w = b}` nonempty?
///
/// `rows` holds the dense rows of `A`. Returns the minimal total artificial
/// slack, which is zero (up to round-off) exactly when the system is feasible.
fn phase_one_residual(rows: &[Vec<f64>], rhs: &[f64]) -> f64 {
    let m = rows.len();
    if m == 0 {
        return 0.0;
    }
    let n = rows[0].len();
    let width = n + m + 1;
    // tableau rows 0..m are constraints, row m is the objective (reduced costs)
    let mut t = vec![0.0; (m + 1) * width];
    let mut basis: Vec<usize> = (n..n + m).collect();
    for (r, (row, &b)) in rows.iter().zip(rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for (c, &a) in row.iter().enumerate() {
            t[r * width + c] = sign * a;
        }
        t[r * width + n + r] = 1.0;
        t[r * width + width - 1] = sign * b;
    }
    // objective: minimize sum of artificials; express reduced costs in the
    // initial artificial basis
    for c in 0..width {
        if c >= n && c < n + m {
            continue;
        }
        let s: f64 = (0..m).map(|r| t[r * width + c]).sum();
        t[m * width + c] = -s;
    }

    const PIVOT_EPS: f64 = 1e-11;
    let max_iter = 50 * (n + m);
    for _ in 0..max_iter {
        // Bland's rule: lowest-index column with negative reduced cost
        let entering = (0..n + m).find(|&c| t[m * width + c] < -PIVOT_EPS);
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = t[r * width + e];
            if a > PIVOT_EPS {
                let ratio = t[r * width + width - 1] / a;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-15
                            || (ratio <= lratio + 1e-15 && basis[r] < basis[lr])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        // phase-one objective is bounded below, so a leaving row always exists
        let Some((l, _)) = leave else { break };
        let piv = t[l * width + e];
        for c in 0..width {
            t[l * width + c] /= piv;
        }
        let pivot_row: Vec<f64> = t[l * width..(l + 1) * width].to_vec();
        for r in 0..=m {
            if r == l {
                continue;
            }
            let f = t[r * width + e];
            if f != 0.0 {
                let row = &mut t[r * width..(r + 1) * width];
                for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pv;
                }
            }
        }
        basis[l] = e;
    }
    // recompute the residual directly from the basic solution
    let mut w = vec![0.0; n];
    for (r, &bv) in basis.iter().enumerate() {
        if bv < n {
            w[bv] = t[r * width + width - 1].max(0.0);
        }
    }
    rows.iter()
        .zip(rhs)
        .map(|(row, &b)| (crate::symmat::dot(row, &w) - b).abs())
        .sum()
}

/// Vertices `y yᵀ` of the cut polytope, one per `y` with `y_0 = +1`.
fn cut_vertex_signs(p: usize) -> Vec<Vec<f64>> {
    let count = 1usize << p.saturating_sub(1);
    (0..count)
        .map(|mask| {
            (0..p)
                .map(|i| {
                    if i > 0 && mask >> (i - 1) & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Feasibility of `Σ_v w_v y_v y_vᵀ` matching `targets` on the listed pairs.
fn cut_feasible(p: usize, targets: &[((usize, usize), f64)]) -> bool {
    if targets.iter().any(|&(_, t)| t.abs() > 1.0 + CUT_FEASIBILITY_TOL) {
        return false;
    }
    let signs = cut_vertex_signs(p);
    let mut rows: Vec<Vec<f64>> = targets
        .iter()
        .map(|&((i, j), _)| signs.iter().map(|y| y[i] * y[j]).collect())
        .collect();
    let mut rhs: Vec<f64> = targets.iter().map(|&(_, t)| t).collect();
    rows.push(vec![1.0; signs.len()]);
    rhs.push(1.0);
    phase_one_residual(&rows, &rhs) <= CUT_FEASIBILITY_TOL
}

fn check_cut_dim(p: usize, p_limit: usize) -> Result<()> {
    if p > p_limit {
        return Err(Error::DimensionLimit {
            what: "cut polytope membership",
            p,
            limit: p_limit,
        });
    }
    Ok(())
}

/// Is `B` a convex combination of the cut vertices `y yᵀ`, `y ∈ {-1, +1}^p`?
pub fn cut_membership(b: &SymMatrix, p_limit: usize) -> Result<bool> {
    let p = b.dim();
    check_cut_dim(p, p_limit)?;
    if (0..p).any(|i| (b.get(i, i) - 1.0).abs() > CUT_FEASIBILITY_TOL) {
        return Err(Error::InvalidParameter("cut membership needs a unit diagonal".into()));
    }
    let mut targets = Vec::with_capacity(p * p.saturating_sub(1) / 2);
    for i in 0..p {
        for j in (i + 1)..p {
            targets.push(((i, j), b.get(i, j)));
        }
    }
    Ok(cut_feasible(p, &targets))
}

/// Is `V = B ∘ U` for some `B ∈ Cut_p`?
///
/// Entries where `U_ij = 0` constrain `V_ij = 0` and leave `B_ij` free.
pub fn conj_majorizes(u: &SymMatrix, v: &SymMatrix, p_limit: usize) -> Result<bool> {
    u.check_dim(v)?;
    let p = u.dim();
    check_cut_dim(p, p_limit)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    if (0..p).any(|i| !close(u.get(i, i), v.get(i, i))) {
        return Ok(false);
    }
    let mut targets = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            let (uij, vij) = (u.get(i, j), v.get(i, j));
            if uij == 0.0 {
                if vij != 0.0 {
                    return Ok(false);
                }
                continue;
            }
            let ratio = vij / uij;
            if ratio.abs() > 1.0 + CUT_FEASIBILITY_TOL {
                return Ok(false);
            }
            targets.push(((i, j), ratio.clamp(-1.0, 1.0)));
        }
    }
    Ok(cut_feasible(p, &targets))
}

/// Entrywise `(2/π) arcsin` of a correlation matrix.
pub fn arcsin_map(sigma: &SymMatrix) -> Result<SymMatrix> {
    let p = sigma.dim();
    if (0..p).any(|i| (sigma.get(i, i) - 1.0).abs() > PSD_TOL) {
        return Err(Error::InvalidParameter("arcsin map needs a unit diagonal".into()));
    }
    if sigma.packed().iter().any(|v| !(v.abs() <= 1.0)) {
        return Err(Error::InvalidParameter("arcsin map needs entries in [-1, 1]".into()));
    }
    let min_eig = sigma.min_eigenvalue()?;
    if min_eig < -PSD_TOL {
        return Err(Error::InvalidParameter(format!(
            "arcsin map needs a positive semidefinite input (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(sigma.map_indexed(|i, j, v| {
        if i == j {
            1.0
        } else {
            std::f64::consts::FRAC_2_PI * v.asin()
        }
    }))
}

/// Outcome of checking a mask against the projection-reduction conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// The map is an orthogonal projection (binary mask).
    pub projection: bool,
    /// `Q u` lies in the orbitope of `u` for every `u`.
    pub averaging: bool,
    /// `Q(x - C) ⊆ x - C`.
    pub dual_feasibility: bool,
    /// `Q(x - C) ⊆ Qx - C`, equivalently `Q C ⊆ C` for linear `Q`.
    pub dual_invariance: bool,
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.projection && self.averaging && self.dual_feasibility && self.dual_invariance
    }
}

/// For `C = [-λ, λ]`: does `q (x - z) ∈ x - C` hold for every `z ∈ C`?
fn box_feasible(q: f64, x: f64, lambda: f64) -> bool {
    (q - 1.0).abs() * x.abs() + q.abs() * lambda <= lambda * (1.0 + 1e-12) + 1e-300
}

/// For `C = (-∞, 0]`: does `q (x - z) ∈ x - C = [x, ∞)` hold for every `z <= 0`?
fn cone_feasible(q: f64, x: f64) -> bool {
    q == 1.0 || (q >= 0.0 && x <= 0.0)
}

fn entrywise_weights(n: usize, weights: &[f64]) -> Result<&[f64]> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    Ok(weights)
}

/// Checks the projection, averaging, dual-feasibility and dual-invariance
/// conditions of `mask` for input `x`, penalty set `penalty` and `group`.
///
/// The dual conditions are decided exactly for the penalty sets in
/// [`PenaltySpec`]; averaging under conjugation uses the ultrametric
/// characterization for binary masks and the cut-polytope program otherwise.
pub fn check_projection_conditions(
    mask: &MaskProjection,
    x: &Input,
    penalty: &PenaltySpec,
    group: GroupId,
) -> Result<ConditionReport> {
    let projection = mask.is_binary();
    match (group, mask, x) {
        (GroupId::SignFlipVector, MaskProjection::Vector(d), Input::Vector(x)) => {
            let n = x.len();
            if d.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d.len(),
                });
            }
            let averaging = d.iter().all(|v| v.abs() <= 1.0);
            let (dual_feasibility, dual_invariance) = match penalty {
                PenaltySpec::EntrywiseL1 { weights } => {
                    let w = entrywise_weights(n, weights)?;
                    let feas = (0..n).all(|i| box_feasible(d[i], x[i], w[i]));
                    (feas, d.iter().all(|v| v.abs() <= 1.0))
                }
                PenaltySpec::GroupL2 { blocks, weights } => {
                    if blocks.len() != n || blocks.num_blocks() != weights.len() {
                        return Err(Error::DimensionMismatch {
                            expected: blocks.num_blocks(),
                            found: weights.len(),
                        });
                    }
                    let feas = blocks
                        .blocks()
                        .iter()
                        .zip(weights)
                        .all(|(block, &lam)| group_ball_feasible(d, x, block, lam));
                    (feas, d.iter().all(|v| v.abs() <= 1.0))
                }
                PenaltySpec::PositiveCone => {
                    let feas = (0..n).all(|i| cone_feasible(d[i], x[i]));
                    (feas, d.iter().all(|&v| v >= 0.0))
                }
                other => {
                    return Err(Error::Unsupported(format!(
                        "{:?} penalty with the sign-flip group",
                        other.kind()
                    )))
                }
            };
            Ok(ConditionReport {
                projection,
                averaging,
                dual_feasibility,
                dual_invariance,
            })
        }
        (GroupId::DiagonalConjugation, MaskProjection::Symmetric(b), Input::Matrix(x)) => {
            b.check_dim(x)?;
            let p = x.dim();
            let averaging = if b.is_binary() {
                is_binary_ultrametric(b)?
            } else {
                cut_membership(b, DEFAULT_CUT_LIMIT)?
            };
            let (dual_feasibility, dual_invariance) = match penalty {
                PenaltySpec::SymmetricL1 { weights } => {
                    let lam = |i: usize, j: usize| match weights {
                        SymWeights::Uniform {
                            lambda,
                            penalize_diagonal,
                        } => {
                            if i != j || *penalize_diagonal {
                                *lambda
                            } else {
                                0.0
                            }
                        }
                        SymWeights::Matrix(m) => m.get(i, j),
                    };
                    if let SymWeights::Matrix(m) = weights {
                        x.check_dim(m)?;
                    }
                    let mut feas = true;
                    for i in 0..p {
                        for j in i..p {
                            feas &= box_feasible(b.get(i, j), x.get(i, j), lam(i, j));
                        }
                    }
                    (feas, b.packed().iter().all(|v| v.abs() <= 1.0))
                }
                PenaltySpec::OffDiagPositivity => {
                    let mut feas = true;
                    let mut inv = true;
                    for i in 0..p {
                        // Z_ii = 0 on the cone, so the diagonal needs B_ii x_ii = x_ii
                        feas &= b.get(i, i) * x.get(i, i) == x.get(i, i);
                        for j in (i + 1)..p {
                            feas &= cone_feasible(b.get(i, j), x.get(i, j));
                            inv &= b.get(i, j) >= 0.0;
                        }
                    }
                    (feas, inv)
                }
                other => {
                    return Err(Error::Unsupported(format!(
                        "{:?} penalty with diagonal conjugation",
                        other.kind()
                    )))
                }
            };
            Ok(ConditionReport {
                projection,
                averaging,
                dual_feasibility,
                dual_invariance,
            })
        }
        (group, _, _) => Err(Error::Unsupported(format!(
            "mask or input shape does not match the {group:?} group"
        ))),
    }
}

/// Dual feasibility for one block of the group-ℓ2 set `{‖z_B‖ <= λ}`.
fn group_ball_feasible(d: &[f64], x: &[f64], block: &[usize], lambda: f64) -> bool {
    let first = d[block[0]];
    if block.iter().all(|&i| d[i] == first) {
        // constant factor q on the block: |1 - q| ‖x_B‖ + |q| λ <= λ
        let norm = block.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
        return box_feasible(first, norm, lambda);
    }
    if block.iter().all(|&i| d[i] == 0.0 || d[i] == 1.0) {
        // kept and dropped coordinates are orthogonal, so the worst case adds
        // ‖(1-d) ∘ x_B‖² to λ²; feasible only if dropped coordinates are zero
        return block.iter().all(|&i| d[i] == 1.0 || x[i] == 0.0);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::{slc, Partition};

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_dense(rows, 0.0).unwrap()
    }

    #[test]
    fn sign_majorizes_examples() {
        assert!(sign_majorizes(&[2.0, -3.0], &[1.0, 0.0]).unwrap());
        assert!(!sign_majorizes(&[2.0, 0.0], &[0.0, 1.0]).unwrap());
        assert!(sign_majorizes(&[1.0, 1.0], &[-1.0, 0.5]).unwrap());
        assert!(sign_majorizes(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cut_membership_examples() {
        for b in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!(cut_membership(&sym(&[&[1.0, b], &[b, 1.0]]), 12).unwrap(), "b = {b}");
        }
        assert!(!cut_membership(&sym(&[&[1.0, 1.2], &[1.2, 1.0]]), 12).unwrap());
        let blocks = Partition::from_blocks(5, &[vec![0, 3], vec![1, 2, 4]]).unwrap();
        assert!(cut_membership(&blocks.cluster_matrix(), 12).unwrap());
        assert!(cut_membership(&SymMatrix::identity(13), 12).is_err());
    }

    #[test]
    fn cut_membership_rejects_violated_triangle() {
        // x12 + x13 + x23 >= -1 fails when all correlations are -0.6
        let b = sym(&[&[1.0, -0.6, -0.6], &[-0.6, 1.0, -0.6], &[-0.6, -0.6, 1.0]]);
        assert!(!cut_membership(&b, 12).unwrap());
        let t = -1.0 / 3.0;
        let b = sym(&[&[1.0, t, t], &[t, 1.0, t], &[t, t, 1.0]]);
        assert!(cut_membership(&b, 12).unwrap());
    }

    #[test]
    fn conj_majorizes_examples() {
        let u = sym(&[&[2.0, 0.5, -1.0], &[0.5, 1.0, 0.0], &[-1.0, 0.0, 3.0]]);
        assert!(conj_majorizes(&u, &u, 12).unwrap());
        let diag = SymMatrix::from_diag(&u.diag());
        assert!(conj_majorizes(&u, &diag, 12).unwrap());
        let mut doubled = u.clone();
        doubled.set(0, 1, 1.0);
        assert!(!conj_majorizes(&u, &doubled, 12).unwrap());
        let mut filled = u.clone();
        filled.set(1, 2, 0.1);
        assert!(!conj_majorizes(&u, &filled, 12).unwrap());
    }

    #[test]
    fn arcsin_examples() {
        assert_eq!(arcsin_map(&SymMatrix::identity(3)).unwrap(), SymMatrix::identity(3));
        assert_eq!(arcsin_map(&SymMatrix::ones(2)).unwrap(), SymMatrix::ones(2));
        let out = arcsin_map(&sym(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
        assert!((out.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!(arcsin_map(&sym(&[&[1.0, 1.5], &[1.5, 1.0]])).is_err());
        // unit diagonal, entries in range, but indefinite
        let bad = sym(&[&[1.0, 1.0, -1.0], &[1.0, 1.0, 1.0], &[-1.0, 1.0, 1.0]]);
        assert!(arcsin_map(&bad).is_err());
    }

    fn example() -> SymMatrix {
        sym(&[&[1.0, 0.8, 0.1], &[0.8, 1.0, 0.5], &[0.1, 0.5, 1.0]])
    }

    #[test]
    fn slc_mask_meets_all_conditions() {
        let x = example();
        let pen = PenaltySpec::symmetric_l1(0.6);
        let mask = MaskProjection::symmetric(slc(&x.abs(), 0.6)).unwrap();
        let report =
            check_projection_conditions(&mask, &Input::Matrix(x.clone()), &pen, GroupId::DiagonalConjugation)
                .unwrap();
        assert!(report.all(), "{report:?}");

        let ones = MaskProjection::symmetric(SymMatrix::ones(3)).unwrap();
        let report =
            check_projection_conditions(&ones, &Input::Matrix(x.clone()), &pen, GroupId::DiagonalConjugation)
                .unwrap();
        assert!(report.all());

        let id = MaskProjection::symmetric(SymMatrix::identity(3)).unwrap();
        let report =
            check_projection_conditions(&id, &Input::Matrix(x), &pen, GroupId::DiagonalConjugation).unwrap();
        assert!(report.averaging && report.dual_invariance);
        assert!(!report.dual_feasibility);
    }

    #[test]
    fn non_ultrametric_mask_fails_averaging() {
        let x = example();
        let b = sym(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 1.0], &[0.0, 1.0, 1.0]]);
        let mask = MaskProjection::symmetric(b).unwrap();
        let report = check_projection_conditions(
            &mask,
            &Input::Matrix(x),
            &PenaltySpec::symmetric_l1(0.4),
            GroupId::DiagonalConjugation,
        )
        .unwrap();
        assert!(!report.averaging);
        assert!(report.dual_feasibility);
    }

    #[test]
    fn negative_mask_breaks_cone_invariance() {
        let x = sym(&[&[1.0, -0.5], &[-0.5, 1.0]]);
        let mask = MaskProjection::symmetric(sym(&[&[1.0, -1.0], &[-1.0, 1.0]])).unwrap();
        let report = check_projection_conditions(
            &mask,
            &Input::Matrix(x),
            &PenaltySpec::OffDiagPositivity,
            GroupId::DiagonalConjugation,
        )
        .unwrap();
        assert!(report.averaging);
        assert!(!report.dual_invariance);
        assert!(!report.projection);
    }

    #[test]
    fn vector_conditions() {
        let x = Input::Vector(vec![2.0, -0.5, 1.5]);
        let pen = PenaltySpec::EntrywiseL1 { weights: vec![1.0; 3] };
        let good = MaskProjection::vector(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(check_projection_conditions(&good, &x, &pen, GroupId::SignFlipVector).unwrap().all());
        let bad = MaskProjection::vector(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(!check_projection_conditions(&bad, &x, &pen, GroupId::SignFlipVector)
            .unwrap()
            .dual_feasibility);

        let cone = PenaltySpec::PositiveCone;
        let pos = MaskProjection::vector(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(check_projection_conditions(&pos, &x, &cone, GroupId::SignFlipVector).unwrap().all());
        let flipped = MaskProjection::vector(vec![1.0, -1.0, 1.0]).unwrap();
        let r = check_projection_conditions(&flipped, &x, &cone, GroupId::SignFlipVector).unwrap();
        assert!(!r.dual_invariance && !r.dual_feasibility);

        assert!(check_projection_conditions(&good, &x, &cone, GroupId::DiagonalConjugation).is_err());
        assert!(check_projection_conditions(
            &good,
            &x,
            &PenaltySpec::OffDiagPositivity,
            GroupId::SignFlipVector
        )
        .is_err());
    }

    #[test]
    fn group_conditions() {
        let blocks = Partition::from_blocks(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let pen = PenaltySpec::GroupL2 {
            blocks,
            weights: vec![5.0, 1.0],
        };
        let x = Input::Vector(vec![3.0, 4.0, 1.0, 1.0]);
        let drop_first = MaskProjection::vector(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(check_projection_conditions(&drop_first, &x, &pen, GroupId::SignFlipVector)
            .unwrap()
            .all());
        let partial = MaskProjection::vector(vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(!check_projection_conditions(&partial, &x, &pen, GroupId::SignFlipVector)
            .unwrap()
            .dual_feasibility);
    }
}
