//! Computationally sufficient input reductions.
//!
//! Each reduction multiplies the input by a binary mask chosen as small as
//! possible while keeping dual feasibility: hard thresholding for entrywise
//! ℓ1, blockwise hard thresholding for group ℓ2, the positive part for the
//! nonnegativity constraint, and single-linkage thresholding for
//! sign-conjugation invariant estimators on symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::{self, Partition};
use crate::orbit::{GroupId, MaskProjection};
use crate::symmat::SymMatrix;

/// Estimator input: a vector or a symmetric matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Input {
    Vector(Vec<f64>),
    Matrix(SymMatrix),
}

impl Input {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Input::Vector(v) => Some(v),
            Input::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&SymMatrix> {
        match self {
            Input::Matrix(m) => Some(m),
            Input::Vector(_) => None,
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Input::Vector(v) => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Input::Matrix(m) => m.frobenius_norm(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PenaltyKind {
    EntrywiseL1,
    GroupL2,
    PositiveCone,
    SymmetricL1,
    OffDiagPositivity,
}

/// Weights of a symmetric ℓ1 penalty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SymWeights {
    /// `λ` on every off-diagonal entry; on the diagonal too if `penalize_diagonal`.
    Uniform { lambda: f64, penalize_diagonal: bool },
    /// Entrywise weights `Λ_ij >= 0`.
    Matrix(SymMatrix),
}

impl SymWeights {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self {
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
        }
    }

    pub fn to_matrix(&self, p: usize) -> SymMatrix {
        match self {
            SymWeights::Matrix(m) => m.clone(),
            _ => SymMatrix::from_fn(p, |i, j| self.weight(i, j)),
        }
    }
}

/// The penalty support set `C` (its support function is the penalty).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PenaltySpec {
    /// `Σ λ_i |θ_i|`, `C` a box.
    EntrywiseL1 { weights: Vec<f64> },
    /// `Σ_j λ_j ‖θ_{B_j}‖₂`, `C` a product of balls.
    GroupL2 { blocks: Partition, weights: Vec<f64> },
    /// Constraint `θ >= 0`, `C` the nonpositive orthant.
    PositiveCone,
    /// `Σ_ij Λ_ij |θ_ij|` on symmetric matrices.
    SymmetricL1 { weights: SymWeights },
    /// Constraint `θ_ij >= 0` for `i != j`, `C = {Z : Z_ii = 0, Z_ij <= 0}`.
    OffDiagPositivity,
}

impl PenaltySpec {
    /// Uniform symmetric ℓ1 with an unpenalized diagonal.
    pub fn symmetric_l1(lambda: f64) -> Self {
        PenaltySpec::SymmetricL1 {
            weights: SymWeights::Uniform {
                lambda,
                penalize_diagonal: false,
            },
        }
    }

    pub fn kind(&self) -> PenaltyKind {
        match self {
            PenaltySpec::EntrywiseL1 { .. } => PenaltyKind::EntrywiseL1,
            PenaltySpec::GroupL2 { .. } => PenaltyKind::GroupL2,
            PenaltySpec::PositiveCone => PenaltyKind::PositiveCone,
            PenaltySpec::SymmetricL1 { .. } => PenaltyKind::SymmetricL1,
            PenaltySpec::OffDiagPositivity => PenaltyKind::OffDiagPositivity,
        }
    }

    /// Checks nonnegativity, block cover and symmetric weight shape.
    pub fn validate(&self) -> Result<()> {
        let nonneg = |w: &[f64]| {
            if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                Err(Error::InvalidParameter("penalty weights must be finite and nonnegative".into()))
            } else {
                Ok(())
            }
        };
        match self {
            PenaltySpec::EntrywiseL1 { weights } => nonneg(weights),
            PenaltySpec::GroupL2 { blocks, weights } => {
                if blocks.num_blocks() != weights.len() {
                    return Err(Error::DimensionMismatch {
                        expected: blocks.num_blocks(),
                        found: weights.len(),
                    });
                }
                nonneg(weights)
            }
            PenaltySpec::SymmetricL1 { weights } => match weights {
                SymWeights::Uniform { lambda, .. } => nonneg(&[*lambda]),
                SymWeights::Matrix(m) => nonneg(m.packed()),
            },
            PenaltySpec::PositiveCone | PenaltySpec::OffDiagPositivity => Ok(()),
        }
    }
}

/// A reduced input together with the mask that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedProblem {
    pub reduced: Input,
    pub mask: MaskProjection,
    /// Connected components of the mask's off-diagonal support (matrix inputs).
    pub partition: Option<Partition>,
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `x_i` if `|x_i| > λ_i`, else 0.
pub fn hard_threshold(x: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), lambda.len())?;
    Ok(x.iter()
        .zip(lambda)
        .map(|(&v, &l)| if v.abs() > l { v } else { 0.0 })
        .collect())
}

fn group_keep_mask(x: &[f64], blocks: &Partition, lambda: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), blocks.len())?;
    check_len(blocks.num_blocks(), lambda.len())?;
    let mut d = vec![0.0; x.len()];
    for (block, &lam) in blocks.blocks().iter().zip(lambda) {
        let norm = block.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
        if norm > lam {
            for &i in block {
                d[i] = 1.0;
            }
        }
    }
    Ok(d)
}

/// Keeps block `B` iff `‖x_B‖₂ > λ_B`.
pub fn group_hard_threshold(x: &[f64], blocks: &Partition, lambda: &[f64]) -> Result<Vec<f64>> {
    let d = group_keep_mask(x, blocks, lambda)?;
    Ok(x.iter().zip(&d).map(|(v, k)| v * k).collect())
}

pub fn positive_part(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Recovers `hard_threshold(x, λ)` from the soft-thresholded `t = lasso(x, λ)`
/// via `t_i + λ_i sign(t_i)`.
pub fn reconstruct_from_soft(t: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
    check_len(t.len(), lambda.len())?;
    Ok(t.iter()
        .zip(lambda)
        .map(|(&v, &l)| if v == 0.0 { 0.0 } else { v + l * v.signum() })
        .collect())
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Dispatches `(penalty, group)` to its reduction and returns the reduced
/// input with its mask.
///
/// Supported pairs: entrywise ℓ1, group ℓ2 and the nonnegativity cone under
/// coordinate sign flips; uniform symmetric ℓ1 and off-diagonal positivity
/// under diagonal conjugation.
pub fn reduce_input(penalty: &PenaltySpec, group: GroupId, x: &Input) -> Result<ReducedProblem> {
    penalty.validate()?;
    match (penalty, group, x) {
        (PenaltySpec::EntrywiseL1 { weights }, GroupId::SignFlipVector, Input::Vector(v)) => {
            check_len(v.len(), weights.len())?;
            let d: Vec<f64> = v.iter().zip(weights).map(|(a, l)| indicator(a.abs() > *l)).collect();
            Ok(ReducedProblem {
                reduced: Input::Vector(hard_threshold(v, weights)?),
                mask: MaskProjection::Vector(d),
                partition: None,
            })
        }
        (PenaltySpec::GroupL2 { blocks, weights }, GroupId::SignFlipVector, Input::Vector(v)) => {
            let d = group_keep_mask(v, blocks, weights)?;
            Ok(ReducedProblem {
                reduced: Input::Vector(group_hard_threshold(v, blocks, weights)?),
                mask: MaskProjection::Vector(d),
                partition: None,
            })
        }
        (PenaltySpec::PositiveCone, GroupId::SignFlipVector, Input::Vector(v)) => {
            let d = v.iter().map(|&a| indicator(a > 0.0)).collect();
            Ok(ReducedProblem {
                reduced: Input::Vector(positive_part(v)),
                mask: MaskProjection::Vector(d),
                partition: None,
            })
        }
        (PenaltySpec::SymmetricL1 { weights }, GroupId::DiagonalConjugation, Input::Matrix(m)) => {
            let SymWeights::Uniform { lambda, .. } = weights else {
                return Err(Error::Unsupported(
                    "single-linkage reduction is only defined for a uniform λ".into(),
                ));
            };
            let partition = linkage::slc_partition(&m.abs(), *lambda);
            let mask = partition.cluster_matrix();
            Ok(ReducedProblem {
                reduced: Input::Matrix(m.hadamard(&mask)?),
                mask: MaskProjection::Symmetric(mask),
                partition: Some(partition),
            })
        }
        (PenaltySpec::OffDiagPositivity, GroupId::DiagonalConjugation, Input::Matrix(m)) => {
            let partition = linkage::slc_partition(m, 0.0);
            let mask = partition.cluster_matrix();
            Ok(ReducedProblem {
                reduced: Input::Matrix(m.hadamard(&mask)?),
                mask: MaskProjection::Symmetric(mask),
                partition: Some(partition),
            })
        }
        (penalty, group, x) => Err(Error::Unsupported(format!(
            "no reduction for {:?} penalty, {group:?} group and {} input",
            penalty.kind(),
            match x {
                Input::Vector(_) => "vector",
                Input::Matrix(_) => "matrix",
            }
        ))),
    }
}

/// Principal submatrices on each block of `partition`, in block order.
pub fn decompose_blocks(x: &SymMatrix, partition: &Partition) -> Result<Vec<(Vec<usize>, SymMatrix)>> {
    check_len(x.dim(), partition.len())?;
    Ok(partition
        .blocks()
        .iter()
        .map(|b| (b.clone(), x.principal_submatrix(b)))
        .collect())
}

/// Inverse of [`decompose_blocks`]: places each block back, zeros elsewhere.
pub fn reassemble_blocks(p: usize, blocks: &[(Vec<usize>, SymMatrix)]) -> Result<SymMatrix> {
    let mut out = SymMatrix::zeros(p);
    let mut seen = vec![false; p];
    for (idx, sub) in blocks {
        check_len(idx.len(), sub.dim())?;
        for (a, &i) in idx.iter().enumerate() {
            if i >= p || seen[i] {
                return Err(Error::InvalidParameter(format!(
                    "block index {i} is out of range or repeated"
                )));
            }
            seen[i] = true;
            for (b, &j) in idx.iter().enumerate().skip(a) {
                out.set(i, j, sub.get(a, b));
            }
        }
    }
    Ok(out)
}
