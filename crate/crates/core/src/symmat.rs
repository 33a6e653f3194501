//! Dense symmetric matrices.
//!
//! [`SymMatrix`] keeps one copy of every unordered pair `(i, j)`, packed
//! row-wise from the upper triangle, so symmetry can never drift. All
//! estimators, reductions and verifiers exchange data through this type.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sweep budget for the cyclic Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal convergence threshold, relative to the Frobenius norm.
pub const JACOBI_REL_TOL: f64 = 1e-14;

/// Dense real symmetric `p x p` matrix with packed upper-triangle storage.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    p: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_len(p: usize) -> usize {
    p * (p + 1) / 2
}

#[inline]
fn row_offset(p: usize, i: usize) -> usize {
    // start of packed row i, which holds entries (i, i..p)
    i * p - i * i.saturating_sub(1) / 2
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        SymMatrix {
            p,
            data: vec![0.0; packed_len(p)],
        }
    }

    pub fn identity(p: usize) -> Self {
        Self::from_diag(&vec![1.0; p])
    }

    pub fn ones(p: usize) -> Self {
        SymMatrix {
            p,
            data: vec![1.0; packed_len(p)],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from a function evaluated on the upper triangle `i <= j`.
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(packed_len(p));
        for i in 0..p {
            for j in i..p {
                data.push(f(i, j));
            }
        }
        SymMatrix { p, data }
    }

    /// Symmetrizes a square array, averaging each pair `(i, j)`, `(j, i)`.
    ///
    /// Fails if any value is non-finite, if rows are ragged, or if the largest
    /// pairwise asymmetry exceeds `asym_tol`.
    pub fn from_dense<R: AsRef<[f64]>>(rows: &[R], asym_tol: f64) -> Result<Self> {
        let p = rows.len();
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        let mut deviation: f64 = 0.0;
        let m = Self::from_fn(p, |i, j| {
            let a = rows[i].as_ref()[j];
            let b = rows[j].as_ref()[i];
            deviation = deviation.max((a - b).abs());
            0.5 * (a + b)
        });
        if deviation > asym_tol {
            return Err(Error::Asymmetric {
                deviation,
                tol: asym_tol,
            });
        }
        Ok(m)
    }

    /// Same as [`SymMatrix::from_dense`] for a row-major flat slice.
    pub fn from_row_major(p: usize, values: &[f64], asym_tol: f64) -> Result<Self> {
        if values.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p * p,
                found: values.len(),
            });
        }
        let rows: Vec<&[f64]> = values.chunks(p.max(1)).take(p).collect();
        Self::from_dense(&rows, asym_tol)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.p);
        row_offset(self.p, i) + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j);
        self.data[k] = value;
    }

    /// Packed upper-triangle storage, row by row.
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Entries `(i, i..p)` of the packed upper triangle.
    pub fn upper_row(&self, i: usize) -> &[f64] {
        let start = row_offset(self.p, i);
        &self.data[start..start + self.p - i]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, i)).collect()
    }

    /// Full row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for (off, &v) in self.upper_row(i).iter().enumerate() {
                let j = i + off;
                out[i * p + j] = v;
                out[j * p + i] = v;
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|i| (0..self.p).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        SymMatrix {
            p: self.p,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Applies `f(i, j, value)` to every stored pair.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SymMatrix {
        let mut out = self.clone();
        let p = self.p;
        let mut k = 0;
        for i in 0..p {
            for j in i..p {
                out.data[k] = f(i, j, self.data[k]);
                k += 1;
            }
        }
        out
    }

    pub fn abs(&self) -> SymMatrix {
        self.map(f64::abs)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        self.map(|v| v * s)
    }

    /// Entrywise combination of two matrices of equal dimension.
    pub fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> Result<SymMatrix> {
        self.check_dim(other)?;
        Ok(SymMatrix {
            p: self.p,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn check_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.p != other.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: other.p,
            });
        }
        Ok(())
    }

    /// Trace inner product `<A, B> = tr(A B)`.
    pub fn inner(&self, other: &SymMatrix) -> Result<f64> {
        self.check_dim(other)?;
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut k = 0;
        for i in 0..self.p {
            for j in i..self.p {
                let v = self.data[k] * other.data[k];
                if i == j {
                    diag += v;
                } else {
                    off += v;
                }
                k += 1;
            }
        }
        Ok(diag + 2.0 * off)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).unwrap_or(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_offdiag(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.p {
            for &v in &self.upper_row(i)[1..] {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// Sum of `|a_ij|` over all `p^2` entries.
    pub fn l1_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.p {
            let row = self.upper_row(i);
            s += row[0].abs();
            s += 2.0 * row[1..].iter().map(|v| v.abs()).sum::<f64>();
        }
        s
    }

    /// Sum of all `p^2` entries.
    pub fn entry_sum(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.p {
            let row = self.upper_row(i);
            s += row[0] + 2.0 * row[1..].iter().sum::<f64>();
        }
        s
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn principal_submatrix(&self, indices: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(indices.len(), |a, b| self.get(indices[a], indices[b]))
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn has_unit_diagonal(&self) -> bool {
        (0..self.p).all(|i| self.get(i, i) == 1.0)
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &SymMatrix) -> Result<SymMatrix> {
        hadamard(self, other)
    }

    pub fn eigh(&self) -> Result<EigenDecomposition> {
        eigh(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(self)?.values.last().copied().unwrap_or(0.0))
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.p, self.p)?;
        for i in 0..self.p {
            let row: Vec<String> = (0..self.p).map(|j| format!("{:.6}", self.get(i, j))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Entrywise (Hadamard) product `A ∘ B`.
pub fn hadamard(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    a.zip_with(b, |x, y| x * y)
}

/// Uncentered covariance `(1/n) Σ_t v_t v_tᵀ` of the rows of an `n x p` array.
///
/// With vote data coded as +1/-1 (0 for a missed vote) entry `(i, j)` is the
/// number of agreements minus disagreements between columns `i` and `j`,
/// divided by `n`.
pub fn uncentered_covariance<R: AsRef<[f64]>>(rows: &[R]) -> Result<SymMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty("covariance needs at least one observation"));
    }
    let p = rows[0].as_ref().len();
    let mut acc = SymMatrix::zeros(p);
    for (t, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: t, col: j });
        }
        let mut k = 0;
        for i in 0..p {
            let vi = row[i];
            for &vj in &row[i..] {
                acc.data[k] += vi * vj;
                k += 1;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    Ok(acc.map(|v| v * inv_n))
}

/// Eigenvalues sorted in descending order with an orthonormal eigenbasis.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Eigenvectors stored as rows: `vectors[k*p..(k+1)*p]` pairs with `values[k]`.
    vectors: Vec<f64>,
    p: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.p
    }

    /// Eigenvector `k`, i.e. column `k` of the basis.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.p..(k + 1) * self.p]
    }

    /// Basis entry `(i, k)`: component `i` of eigenvector `k`.
    pub fn basis(&self, i: usize, k: usize) -> f64 {
        self.vectors[k * self.p + i]
    }

    /// Row-major basis matrix whose columns are the eigenvectors.
    pub fn basis_matrix(&self) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; p * p];
        for k in 0..p {
            for i in 0..p {
                out[i * p + k] = self.vectors[k * p + i];
            }
        }
        out
    }

    /// Spectral function `Σ_k f(λ_k) v_k v_kᵀ`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let weights: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.reconstruct_with(&weights)
    }

    /// `Σ_k w_k v_k v_kᵀ` for explicit weights.
    pub fn reconstruct_with(&self, weights: &[f64]) -> SymMatrix {
        let p = self.p;
        let mut out = SymMatrix::zeros(p);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = self.vector(k);
            let mut idx = 0;
            for i in 0..p {
                let a = w * v[i];
                for &vj in &v[i..] {
                    out.data[idx] += a * vj;
                    idx += 1;
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(&self.values)
    }

    /// Row-major eigenvectors-as-rows, usable as a warm start for [`eigh_warm`].
    pub fn warm_start(&self) -> &[f64] {
        &self.vectors
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigh(x: &SymMatrix) -> Result<EigenDecomposition> {
    eigh_warm(x, None)
}

/// Jacobi eigendecomposition started from a previous eigenbasis.
///
/// `warm` holds eigenvectors as rows (see [`EigenDecomposition::warm_start`]).
/// When `x` is close to a matrix diagonalized by `warm`, the rotated problem
/// is nearly diagonal and only one or two sweeps are needed.
pub fn eigh_warm(x: &SymMatrix, warm: Option<&[f64]>) -> Result<EigenDecomposition> {
    let p = x.dim();
    if let Some(k) = x.data.iter().position(|v| !v.is_finite()) {
        let (i, j) = unpack_index(p, k);
        return Err(Error::NonFinite { row: i, col: j });
    }
    let dense = x.to_dense();
    let (mut a, mut vt) = match warm {
        Some(q) if q.len() == p * p => (congruence(q, &dense, p), q.to_vec()),
        _ => {
            let mut id = vec![0.0; p * p];
            for i in 0..p {
                id[i * p + i] = 1.0;
            }
            (dense, id)
        }
    };
    jacobi_sweeps(&mut a, &mut vt, p)?;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| a[j * p + j].total_cmp(&a[i * p + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&k| a[k * p + k]).collect();
    let mut vectors = Vec::with_capacity(p * p);
    for &k in &order {
        vectors.extend_from_slice(&vt[k * p..(k + 1) * p]);
    }
    Ok(EigenDecomposition { values, vectors, p })
}

fn unpack_index(p: usize, k: usize) -> (usize, usize) {
    for i in 0..p {
        let start = row_offset(p, i);
        if k < start + p - i {
            return (i, i + k - start);
        }
    }
    (p, p)
}

/// `Q A Qᵀ` where `q` holds rows of `Q`.
fn congruence(q: &[f64], a: &[f64], p: usize) -> Vec<f64> {
    let mut qa = vec![0.0; p * p];
    for i in 0..p {
        let qi = &q[i * p..(i + 1) * p];
        for j in 0..p {
            qa[i * p + j] = dot(qi, &a[j * p..(j + 1) * p]);
        }
    }
    let mut out = vec![0.0; p * p];
    for i in 0..p {
        let row = &qa[i * p..(i + 1) * p];
        for j in i..p {
            let v = dot(row, &q[j * p..(j + 1) * p]);
            out[i * p + j] = v;
            out[j * p + i] = v;
        }
    }
    out
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn jacobi_sweeps(a: &mut [f64], vt: &mut [f64], p: usize) -> Result<()> {
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frob == 0.0 || p < 2 {
        return Ok(());
    }
    let threshold = JACOBI_REL_TOL * frob;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                off += 2.0 * a[i * p + j] * a[i * p + j];
            }
        }
        if off.sqrt() <= threshold {
            return Ok(());
        }
        for r in 0..p {
            for s in (r + 1)..p {
                let ars = a[r * p + s];
                if ars == 0.0 {
                    continue;
                }
                let arr = a[r * p + r];
                let ass = a[s * p + s];
                // underflow guard: the rotation would not change the diagonal
                if ars.abs() < f64::EPSILON * 1e-3 * (arr.abs() + ass.abs()) {
                    a[r * p + s] = 0.0;
                    a[s * p + r] = 0.0;
                    continue;
                }
                let theta = (ass - arr) / (2.0 * ars);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(a, vt, p, r, s, c, sn, t, ars);
            }
        }
    }
    let mut off = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            off += 2.0 * a[i * p + j] * a[i * p + j];
        }
    }
    Err(Error::NoConvergence {
        solver: "jacobi eigensolver",
        iterations: JACOBI_MAX_SWEEPS,
        residual: off.sqrt() / frob,
    })
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn rotate(a: &mut [f64], vt: &mut [f64], p: usize, r: usize, s: usize, c: f64, sn: f64, t: f64, ars: f64) {
    for k in 0..p {
        if k == r || k == s {
            continue;
        }
        let akr = a[r * p + k];
        let aks = a[s * p + k];
        let nr = c * akr - sn * aks;
        let ns = sn * akr + c * aks;
        a[r * p + k] = nr;
        a[k * p + r] = nr;
        a[s * p + k] = ns;
        a[k * p + s] = ns;
    }
    a[r * p + r] -= t * ars;
    a[s * p + s] += t * ars;
    a[r * p + s] = 0.0;
    a[s * p + r] = 0.0;
    let (head, tail) = vt.split_at_mut(s * p);
    let vr = &mut head[r * p..(r + 1) * p];
    let vs = &mut tail[..p];
    for (x, y) in vr.iter_mut().zip(vs.iter_mut()) {
        let xr = *x;
        let ys = *y;
        *x = c * xr - sn * ys;
        *y = sn * xr + c * ys;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_dense(rows, 0.0).unwrap()
    }

    #[test]
    fn packed_indexing_round_trips() {
        let m = SymMatrix::from_fn(4, |i, j| (10 * i + j) as f64);
        assert_eq!(m.get(1, 3), 13.0);
        assert_eq!(m.get(3, 1), 13.0);
        assert_eq!(m.get(3, 3), 33.0);
        assert_eq!(m.upper_row(2), &[22.0, 23.0]);
        assert_eq!(unpack_index(4, 5), (1, 2));
    }

    #[test]
    fn from_dense_examples() {
        let m = SymMatrix::from_dense(&[[1.0, 2.0], [2.0, 1.0]], 1e-9).unwrap();
        assert_eq!(m.get(0, 1), 2.0);

        let m = SymMatrix::from_dense(&[[1.0, 2.0], [2.0000000001, 1.0]], 1e-9).unwrap();
        assert_eq!(m.get(0, 1), 0.5 * (2.0 + 2.0000000001));
        assert!((m.get(0, 1) - 2.00000000005).abs() < 1e-15);

        let err = SymMatrix::from_dense(&[[1.0, 2.0], [3.0, 1.0]], 1e-9).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { .. }));
    }

    #[test]
    fn from_dense_rejects_bad_input() {
        assert!(matches!(
            SymMatrix::from_dense(&[vec![1.0, f64::NAN], vec![0.0, 1.0]], 1.0),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            SymMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0]], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn covariance_examples() {
        let c = uncentered_covariance(&[[1.0, -1.0]]).unwrap();
        assert_eq!(c, sym(&[&[1.0, -1.0], &[-1.0, 1.0]]));

        let c = uncentered_covariance(&[[1.0, 1.0], [1.0, -1.0]]).unwrap();
        assert_eq!(c, SymMatrix::identity(2));

        let c = uncentered_covariance(&[[1.0, 1.0], [-1.0, -1.0], [1.0, 0.0]]).unwrap();
        assert!((c.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((c.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.get(1, 1) - 2.0 / 3.0).abs() < 1e-15);

        let empty: [[f64; 2]; 0] = [];
        assert!(matches!(uncentered_covariance(&empty), Err(Error::Empty(_))));
    }

    #[test]
    fn eigh_examples() {
        let e = eigh(&SymMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vector(0), &[1.0, 0.0]);

        let e = eigh(&sym(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0].abs() - h).abs() < 1e-14 && (v0[0] - v0[1]).abs() < 1e-14);
        assert!((v1[0].abs() - h).abs() < 1e-14 && (v1[0] + v1[1]).abs() < 1e-14);

        let e = eigh(&SymMatrix::identity(5)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn eigh_rejects_non_finite() {
        let mut m = SymMatrix::identity(3);
        m.set(1, 2, f64::INFINITY);
        assert!(matches!(eigh(&m), Err(Error::NonFinite { row: 1, col: 2 })));
    }

    #[test]
    fn hadamard_examples() {
        let a = sym(&[&[1.0, 2.0], &[2.0, 3.0]]);
        assert_eq!(a.hadamard(&SymMatrix::identity(2)).unwrap(), SymMatrix::from_diag(&[1.0, 3.0]));
        assert_eq!(a.hadamard(&SymMatrix::ones(2)).unwrap(), a);
        assert!(a.hadamard(&SymMatrix::ones(3)).is_err());
    }

    #[test]
    fn inner_product_counts_both_triangles() {
        let a = sym(&[&[1.0, 2.0], &[2.0, 3.0]]);
        assert_eq!(a.inner(&a).unwrap(), 1.0 + 4.0 + 4.0 + 9.0);
        assert_eq!(a.l1_norm(), 8.0);
        assert_eq!(a.entry_sum(), 8.0);
    }
}
