//! Single-linkage clustering and single-linkage thresholding.
//!
//! All thresholds are strict: an edge `(i, j)` links its endpoints at level
//! `λ` only when its weight is `> λ`. Entries exactly equal to `λ` drop out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

/// Disjoint-set forest with path compression and union by rank.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns `false` if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] = self.rank[ra].saturating_add(1);
        }
        true
    }
}

/// A partition of `0..p` into disjoint blocks.
///
/// Blocks are kept in canonical order: each block is sorted and blocks are
/// ordered by their smallest element, so equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes an arbitrary labeling.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut relabel = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for (i, &r) in raw.iter().enumerate() {
            let next = blocks.len();
            let id = *relabel.entry(r).or_insert(next);
            if id == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[id].push(i);
            labels.push(id);
        }
        Partition { labels, blocks }
    }

    /// Builds a partition from explicit blocks, which must cover `0..p` exactly once.
    pub fn from_blocks(p: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; p];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidParameter("partition has an empty block".into()));
            }
            for &i in block {
                if i >= p {
                    return Err(Error::InvalidParameter(format!(
                        "index {i} out of range for p = {p}"
                    )));
                }
                if raw[i] != usize::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                raw[i] = b;
            }
        }
        if let Some(i) = raw.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidParameter(format!(
                "index {i} is not covered by the partition"
            )));
        }
        Ok(Self::from_labels(&raw))
    }

    pub fn singletons(p: usize) -> Self {
        Self::from_labels(&(0..p).collect::<Vec<_>>())
    }

    pub fn single_block(p: usize) -> Self {
        Self::from_labels(&vec![0; p])
    }

    fn from_union_find(uf: &mut UnionFind, p: usize) -> Self {
        let raw: Vec<usize> = (0..p).map(|i| uf.find(i)).collect();
        Self::from_labels(&raw)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Binary matrix with entry 1 iff `i` and `j` share a block.
    pub fn cluster_matrix(&self) -> SymMatrix {
        SymMatrix::from_fn(self.len(), |i, j| {
            if self.same_block(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// True if every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.len() == coarser.len()
            && self
                .blocks
                .iter()
                .all(|b| b.iter().all(|&i| coarser.labels[i] == coarser.labels[b[0]]))
    }
}

/// One agglomeration step: clusters `a` and `b` join at similarity `height`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// Single-linkage merge history.
///
/// Leaf `i` has cluster id `i`; the `m`-th merge (0-based) creates id `leaves + m`.
/// Heights are similarities and never increase along the merge sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Checks cluster ids and height ordering.
    pub fn validate(&self) -> Result<()> {
        if self.merges.len() >= self.leaves.max(1) {
            return Err(Error::InvalidParameter(format!(
                "{} merges for {} leaves",
                self.merges.len(),
                self.leaves
            )));
        }
        let mut used = vec![false; self.leaves + self.merges.len()];
        let mut prev = f64::INFINITY;
        for (m, merge) in self.merges.iter().enumerate() {
            let limit = self.leaves + m;
            for id in [merge.a, merge.b] {
                if id >= limit || used[id] {
                    return Err(Error::InvalidParameter(format!(
                        "merge {m} references invalid or consumed cluster {id}"
                    )));
                }
                used[id] = true;
            }
            if merge.a == merge.b {
                return Err(Error::InvalidParameter(format!("merge {m} joins a cluster to itself")));
            }
            if !(merge.height <= prev) {
                return Err(Error::InvalidParameter(format!(
                    "merge heights must be non-increasing (merge {m})"
                )));
            }
            prev = merge.height;
        }
        Ok(())
    }

    pub fn max_height(&self) -> Option<f64> {
        self.merges.first().map(|m| m.height)
    }
}

fn check_level(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be a nonnegative number, got {lambda}"
        )));
    }
    Ok(())
}

/// Components of the graph with an edge wherever `linked(i, j)` holds (`i < j`).
fn components_where(p: usize, mut linked: impl FnMut(usize, usize) -> bool) -> Partition {
    let mut uf = UnionFind::new(p);
    for i in 0..p {
        for j in (i + 1)..p {
            if linked(i, j) {
                uf.union(i, j);
            }
        }
    }
    Partition::from_union_find(&mut uf, p)
}

/// Connected components of `{(i, j) : i != j, |X_ij| > λ}`.
pub fn threshold_components(x: &SymMatrix, lambda: f64) -> Result<Partition> {
    check_level(lambda)?;
    Ok(components_where(x.dim(), |i, j| x.get(i, j).abs() > lambda))
}

/// Maximum spanning tree of the similarity graph `|X_ij|` by Kruskal's algorithm.
///
/// All `p(p-1)/2` edges take part, zero-weight ones included, so the
/// dendrogram always has `p - 1` merges. Equal weights are ordered
/// lexicographically by `(i, j)`.
pub fn mst_kruskal(x: &SymMatrix) -> Dendrogram {
    let p = x.dim();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(p * p.saturating_sub(1) / 2);
    for i in 0..p {
        for j in (i + 1)..p {
            edges.push((x.get(i, j).abs(), i, j));
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(p);
    // cluster id currently attached to each union-find root
    let mut cluster_of: Vec<usize> = (0..p).collect();
    let mut merges = Vec::with_capacity(p.saturating_sub(1));
    for (w, i, j) in edges {
        let (ri, rj) = (uf.find(i), uf.find(j));
        if ri == rj {
            continue;
        }
        let (ca, cb) = (cluster_of[ri], cluster_of[rj]);
        uf.union(ri, rj);
        let root = uf.find(ri);
        cluster_of[root] = p + merges.len();
        merges.push(Merge { a: ca, b: cb, height: w });
        if merges.len() + 1 == p {
            break;
        }
    }
    Dendrogram { leaves: p, merges }
}

/// Clusters obtained by applying every merge with height `> λ`.
pub fn cut_dendrogram(d: &Dendrogram, lambda: f64) -> Result<Partition> {
    d.validate()?;
    let n = d.leaves + d.merges.len();
    let mut uf = UnionFind::new(n);
    for (m, merge) in d.merges.iter().enumerate() {
        if merge.height > lambda {
            uf.union(merge.a, d.leaves + m);
            uf.union(merge.b, d.leaves + m);
        }
    }
    Ok(Partition::from_union_find(&mut uf, d.leaves))
}

/// Single-linkage cluster matrix: 1 iff `i == j` or `i`, `j` are joined by a
/// path whose weakest edge `W_uv` is `> τ`. No absolute value is taken.
pub fn slc(w: &SymMatrix, tau: f64) -> SymMatrix {
    slc_partition(w, tau).cluster_matrix()
}

/// The partition underlying [`slc`].
pub fn slc_partition(w: &SymMatrix, tau: f64) -> Partition {
    components_where(w.dim(), |i, j| w.get(i, j) > tau)
}

/// Single-linkage thresholding: `X` masked to the blocks of `slc(|X|, λ)`.
pub fn slt(x: &SymMatrix, lambda: f64) -> Result<SymMatrix> {
    check_level(lambda)?;
    x.hadamard(&slc(&x.abs(), lambda))
}

/// Positivity variant: `X` masked to the blocks of `slc(X, 0)`.
pub fn slt_plus(x: &SymMatrix) -> SymMatrix {
    let mask = slc(x, 0.0);
    x.hadamard(&mask).expect("mask has the input's dimension")
}

/// Checks `B_ij >= min(B_ik, B_jk)` for a binary, unit-diagonal `B`.
pub fn is_binary_ultrametric(b: &SymMatrix) -> Result<bool> {
    if !b.is_binary() {
        return Err(Error::InvalidParameter("matrix is not binary".into()));
    }
    if !b.has_unit_diagonal() {
        return Err(Error::InvalidParameter("matrix does not have a unit diagonal".into()));
    }
    let p = b.dim();
    for k in 0..p {
        for i in 0..p {
            if b.get(i, k) == 0.0 {
                continue;
            }
            for j in (i + 1)..p {
                if b.get(j, k) == 1.0 && b.get(i, j) == 0.0 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> SymMatrix {
        SymMatrix::from_dense(&[[1.0, 0.8, 0.1], [0.8, 1.0, 0.5], [0.1, 0.5, 1.0]], 0.0).unwrap()
    }

    fn blocks(p: &Partition) -> Vec<Vec<usize>> {
        p.blocks().to_vec()
    }

    #[test]
    fn threshold_components_examples() {
        let x = example();
        assert_eq!(blocks(&threshold_components(&x, 0.4).unwrap()), vec![vec![0, 1, 2]]);
        assert_eq!(blocks(&threshold_components(&x, 0.6).unwrap()), vec![vec![0, 1], vec![2]]);
        assert_eq!(threshold_components(&x, 0.9).unwrap(), Partition::singletons(3));
        assert!(threshold_components(&x, -0.1).is_err());
        assert!(threshold_components(&x, f64::NAN).is_err());
    }

    #[test]
    fn strict_inequality_at_threshold() {
        let x = example();
        assert_eq!(threshold_components(&x, 0.8).unwrap(), Partition::singletons(3));
        assert_eq!(blocks(&threshold_components(&x, 0.5).unwrap()), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn kruskal_examples() {
        let d = mst_kruskal(&example());
        assert_eq!(
            d.merges,
            vec![
                Merge { a: 0, b: 1, height: 0.8 },
                Merge { a: 3, b: 2, height: 0.5 },
            ]
        );
        let d = mst_kruskal(&SymMatrix::identity(3));
        assert_eq!(d.merges.len(), 2);
        assert!(d.merges.iter().all(|m| m.height == 0.0));
        assert_eq!(d.merges[0], Merge { a: 0, b: 1, height: 0.0 });
        assert!(mst_kruskal(&SymMatrix::identity(1)).merges.is_empty());
    }

    #[test]
    fn cut_examples() {
        let d = mst_kruskal(&example());
        assert_eq!(blocks(&cut_dendrogram(&d, 0.6).unwrap()), vec![vec![0, 1], vec![2]]);
        assert_eq!(cut_dendrogram(&d, -1.0).unwrap(), Partition::single_block(3));
        assert_eq!(cut_dendrogram(&d, 0.8).unwrap(), Partition::singletons(3));
        assert_eq!(cut_dendrogram(&d, 5.0).unwrap(), Partition::singletons(3));
    }

    #[test]
    fn dendrogram_validation() {
        let bad = Dendrogram {
            leaves: 3,
            merges: vec![Merge { a: 0, b: 1, height: 0.1 }, Merge { a: 3, b: 2, height: 0.5 }],
        };
        assert!(bad.validate().is_err());
        let bad = Dendrogram {
            leaves: 3,
            merges: vec![Merge { a: 0, b: 1, height: 0.5 }, Merge { a: 0, b: 2, height: 0.1 }],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn slc_examples() {
        let x = example();
        assert_eq!(slc(&x.abs(), 0.4), SymMatrix::ones(3));
        let expect =
            SymMatrix::from_dense(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 0.0).unwrap();
        assert_eq!(slc(&x.abs(), 0.6), expect);
        assert_eq!(slc(&x, 0.9), SymMatrix::identity(3));
    }

    #[test]
    fn slt_examples() {
        let x = example();
        let expect =
            SymMatrix::from_dense(&[[1.0, 0.8, 0.0], [0.8, 1.0, 0.0], [0.0, 0.0, 1.0]], 0.0).unwrap();
        let once = slt(&x, 0.6).unwrap();
        assert_eq!(once, expect);
        assert_eq!(slt(&once, 0.6).unwrap(), once);
        assert_eq!(slt(&x, 0.0).unwrap(), x);
    }

    #[test]
    fn slt_plus_examples() {
        let neg = SymMatrix::from_dense(&[[1.0, -0.5], [-0.5, 1.0]], 0.0).unwrap();
        assert_eq!(slt_plus(&neg), SymMatrix::identity(2));
        let pos = SymMatrix::from_dense(&[[1.0, 0.5], [0.5, 1.0]], 0.0).unwrap();
        assert_eq!(slt_plus(&pos), pos);
        let chain = SymMatrix::from_dense(&[[1.0, 0.5, -0.2], [0.5, 1.0, 0.3], [-0.2, 0.3, 1.0]], 0.0)
            .unwrap();
        assert_eq!(slt_plus(&chain), chain);
    }

    #[test]
    fn ultrametric_examples() {
        let b = SymMatrix::from_dense(&[[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]], 0.0).unwrap();
        assert!(!is_binary_ultrametric(&b).unwrap());
        assert!(is_binary_ultrametric(&SymMatrix::identity(4)).unwrap());
        assert!(is_binary_ultrametric(&SymMatrix::ones(4)).unwrap());
        assert!(is_binary_ultrametric(&SymMatrix::zeros(2)).is_err());
        assert!(is_binary_ultrametric(&SymMatrix::ones(2).scale(0.5)).is_err());
    }

    #[test]
    fn partition_from_blocks_validates() {
        assert!(Partition::from_blocks(3, &[vec![0, 1], vec![2]]).is_ok());
        assert!(Partition::from_blocks(3, &[vec![0, 1]]).is_err());
        assert!(Partition::from_blocks(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::from_blocks(3, &[vec![0, 1, 2], vec![]]).is_err());
        let p = Partition::from_blocks(4, &[vec![3, 1], vec![2, 0]]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1, 3]]);
        assert!(p.refines(&Partition::single_block(4)));
        assert!(!Partition::single_block(4).refines(&p));
    }
}
