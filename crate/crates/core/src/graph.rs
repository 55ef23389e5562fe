//! Undirected weighted graphs, Laplacian operators, dense spectral
//! decomposition for verification, polynomial spectral filtering and the
//! downsample-upsample (DU) operation.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::poly::Polynomial;
use crate::scalar::Scalar;

/// Largest graph accepted by the dense eigensolver.
pub const MAX_DENSE_NODES: usize = 4096;
/// Eigenvalues closer than this share one eigenspace.
pub const EIGENSPACE_TOL: f64 = 1e-8;
/// Tolerance when matching λ with its mirror 2 − λ.
pub const MIRROR_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({u}, {v}) has non-positive or non-finite weight {w}")]
    BadWeight { u: usize, v: usize, w: f64 },
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("isolated vertex {0}")]
    IsolatedVertex(usize),
    #[error("graph has {n} nodes; dense routines are limited to {max}, use polynomial filtering instead")]
    TooLarge { n: usize, max: usize },
    #[error("signal has {got} values, graph has {expected} nodes")]
    SignalLength { expected: usize, got: usize },
    #[error("unmirrored spectrum: eigenvalue {0} has no partner at 2 - λ")]
    UnmirroredSpectrum(f64),
}

/// Undirected edge with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub w: T,
}

/// Undirected weighted graph with adjacency stored in CSR form.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    n: usize,
    edges: Vec<Edge<T>>,
    degree: Vec<T>,
    offsets: Vec<usize>,
    adj: Vec<(usize, T)>,
    connected: bool,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph; endpoints may be given in either order.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (a, b, w) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !w.is_finite() || w <= T::zero() {
                return Err(GraphError::BadWeight {
                    u: a,
                    v: b,
                    w: w.as_f64(),
                });
            }
            list.push(Edge {
                u: a.min(b),
                v: a.max(b),
                w,
            });
        }
        list.sort_by_key(|e| (e.u, e.v));
        if let Some(d) = list
            .windows(2)
            .find(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v))
        {
            return Err(GraphError::DuplicateEdge(d[0].u, d[0].v));
        }
        Ok(Self::from_sorted(n, list))
    }

    /// Unit-weight graph.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::new(n, edges.iter().map(|&(u, v)| (u, v, T::one())))
    }

    fn from_sorted(n: usize, edges: Vec<Edge<T>>) -> Self {
        let mut count = vec![0usize; n];
        for e in &edges {
            count[e.u] += 1;
            count[e.v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + count[i];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0usize, T::zero()); offsets[n]];
        for e in &edges {
            adj[fill[e.u]] = (e.v, e.w);
            fill[e.u] += 1;
            adj[fill[e.v]] = (e.u, e.w);
            fill[e.v] += 1;
        }
        for i in 0..n {
            adj[offsets[i]..offsets[i + 1]].sort_by_key(|p| p.0);
        }
        let degree = (0..n)
            .map(|i| adj[offsets[i]..offsets[i + 1]].iter().map(|p| p.1).sum())
            .collect();
        let mut g = Graph {
            n,
            edges,
            degree,
            offsets,
            adj,
            connected: false,
        };
        g.connected = g.components().1 <= 1;
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(u, v)`.
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn degrees(&self) -> &[T] {
        &self.degree
    }

    pub fn degree(&self, i: usize) -> T {
        self.degree[i]
    }

    /// Neighbors of `i` with link weights, ascending by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<T> {
        let nb = self.neighbors(u);
        nb.binary_search_by_key(&v, |p| p.0).ok().map(|k| nb[k].1)
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.neighbors(i).is_empty())
            .collect()
    }

    /// Component label per node and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            queue.push_back(s);
            while let Some(i) = queue.pop_front() {
                for &(j, _) in self.neighbors(i) {
                    if label[j] == usize::MAX {
                        label[j] = count;
                        queue.push_back(j);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Hop distances from `src`; unreachable nodes get `usize::MAX`.
    pub fn hops_from(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(i) = queue.pop_front() {
            for &(j, _) in self.neighbors(i) {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    /// Same vertex set, keeping only the listed edge indices.
    pub fn with_edges(&self, keep: &[usize]) -> Self {
        let mut list: Vec<Edge<T>> = keep.iter().map(|&k| self.edges[k]).collect();
        list.sort_by_key(|e| (e.u, e.v));
        list.dedup_by_key(|e| (e.u, e.v));
        Self::from_sorted(self.n, list)
    }

    /// Subgraph induced on `keep` (in the given order), nodes renumbered `0..keep.len()`.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            index[i] = k;
        }
        let list = self
            .edges
            .iter()
            .filter(|e| index[e.u] != usize::MAX && index[e.v] != usize::MAX)
            .map(|e| Edge {
                u: index[e.u].min(index[e.v]),
                v: index[e.u].max(index[e.v]),
                w: e.w,
            })
            .collect::<Vec<_>>();
        let mut list = list;
        list.sort_by_key(|e| (e.u, e.v));
        Self::from_sorted(keep.len(), list)
    }

    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        let list = self
            .edges
            .iter()
            .map(|e| Edge {
                u: e.u,
                v: e.v,
                w: U::of(e.w.as_f64()),
            })
            .collect();
        Graph::from_sorted(self.n, list)
    }

    /// Whether every node has the same weighted degree.
    pub fn is_regular(&self) -> bool {
        self.degree.windows(2).all(|d| d[0] == d[1])
    }

    /// Hex SHA-256 over node count and the exact edge list.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for e in &self.edges {
            h.update((e.u as u64).to_le_bytes());
            h.update((e.v as u64).to_le_bytes());
            h.update(e.w.as_f64().to_bits().to_le_bytes());
        }
        hex(&h.finalize()[..16])
    }

    pub fn dense_adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.u, e.v)] = e.w.as_f64();
            a[(e.v, e.u)] = e.w.as_f64();
        }
        a
    }

    pub fn check_signal(&self, f: &[T]) -> Result<(), GraphError> {
        if f.len() != self.n {
            return Err(GraphError::SignalLength {
                expected: self.n,
                got: f.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LaplacianKind {
    /// `L = D − A`.
    Unnormalized,
    /// `D^{−1/2} L D^{−1/2}`.
    SymmetricNormalized,
    /// `D^{−1} L`.
    RandomWalk,
}

/// Filtering basis for spectral filters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Symmetric,
    RandomWalk,
}

impl Basis {
    pub fn kind(self) -> LaplacianKind {
        match self {
            Basis::Symmetric => LaplacianKind::SymmetricNormalized,
            Basis::RandomWalk => LaplacianKind::RandomWalk,
        }
    }
}

/// Sparse Laplacian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian<T> {
    kind: LaplacianKind,
    diag: Vec<T>,
    offsets: Vec<usize>,
    entries: Vec<(usize, T)>,
}

impl<T: Scalar> Laplacian<T> {
    /// Requires every degree to be positive.
    pub fn new(g: &Graph<T>, kind: LaplacianKind) -> Result<Self, GraphError> {
        if let Some(&i) = g.isolated_nodes().first() {
            return Err(GraphError::IsolatedVertex(i));
        }
        Ok(Self::lenient(g, kind))
    }

    /// Like [`Laplacian::new`] but isolated nodes get all-zero rows and columns.
    pub fn lenient(g: &Graph<T>, kind: LaplacianKind) -> Self {
        let d = g.degrees();
        let mut diag = vec![T::zero(); g.n()];
        let mut offsets = vec![0usize; g.n() + 1];
        let mut entries = Vec::with_capacity(2 * g.edge_count());
        for i in 0..g.n() {
            if d[i] > T::zero() {
                diag[i] = match kind {
                    LaplacianKind::Unnormalized => d[i],
                    _ => T::one(),
                };
            }
            for &(j, w) in g.neighbors(i) {
                let v = match kind {
                    LaplacianKind::Unnormalized => -w,
                    LaplacianKind::SymmetricNormalized => -w / (d[i] * d[j]).sqrt(),
                    LaplacianKind::RandomWalk => -w / d[i],
                };
                entries.push((j, v));
            }
            offsets[i + 1] = entries.len();
        }
        Laplacian {
            kind,
            diag,
            offsets,
            entries,
        }
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `y = L x`, summing each row in ascending column order.
    pub fn apply_into(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.diag.len() {
            let mut acc = self.diag[i] * x[i];
            for &(j, v) in &self.entries[self.offsets[i]..self.offsets[i + 1]] {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); x.len()];
        self.apply_into(x, &mut y);
        y
    }

    /// Nested (Horner) evaluation of `kernel(L)·f` with `deg kernel` applications.
    pub fn filter(&self, kernel: &Polynomial<T>, f: &[T]) -> Vec<T> {
        let c = kernel.coeffs();
        let Some((&top, rest)) = c.split_last() else {
            return vec![T::zero(); f.len()];
        };
        let mut y: Vec<T> = f.iter().map(|&v| top * v).collect();
        let mut tmp = vec![T::zero(); f.len()];
        for &ck in rest.iter().rev() {
            self.apply_into(&y, &mut tmp);
            for ((yi, &ti), &fi) in y.iter_mut().zip(&tmp).zip(f) {
                *yi = ti + ck * fi;
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i].as_f64();
            for &(j, v) in &self.entries[self.offsets[i]..self.offsets[i + 1]] {
                m[(i, j)] = v.as_f64();
            }
        }
        m
    }
}

pub fn laplacian<T: Scalar>(g: &Graph<T>, kind: LaplacianKind) -> Result<Laplacian<T>, GraphError> {
    Laplacian::new(g, kind)
}

/// `kernel(𝓛)·f` or `kernel(𝓛_r)·f` by sparse Horner evaluation.
pub fn spectral_filter<T: Scalar>(
    g: &Graph<T>,
    kernel: &Polynomial<T>,
    f: &[T],
    basis: Basis,
) -> Result<Vec<T>, GraphError> {
    g.check_signal(f)?;
    Ok(Laplacian::new(g, basis.kind())?.filter(kernel, f))
}

/// Full eigendecomposition of the symmetric normalized Laplacian.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Groups of column indices whose eigenvalues agree within [`EIGENSPACE_TOL`].
    pub fn eigenspaces(&self) -> Vec<(f64, Vec<usize>)> {
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            match out.last_mut() {
                Some((_, idx))
                    if (l - self.eigenvalues[*idx.last().unwrap()]).abs() <= EIGENSPACE_TOL =>
                {
                    idx.push(i)
                }
                _ => out.push((l, vec![i])),
            }
        }
        for (l, idx) in out.iter_mut() {
            *l = idx.iter().map(|&i| self.eigenvalues[i]).sum::<f64>() / idx.len() as f64;
        }
        out
    }

    /// Orthogonal projector onto the span of the given columns.
    pub fn projector(&self, cols: &[usize]) -> DMatrix<f64> {
        let u = self.eigenvectors.select_columns(cols);
        &u * u.transpose()
    }

    /// `U·diag(h(λ))·Uᵀ`.
    pub fn dense_filter(&self, h: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let s = h(l);
            scaled.column_mut(k).scale_mut(s);
        }
        &scaled * self.eigenvectors.transpose()
    }

    /// Graph Fourier transform `Uᵀ f`.
    pub fn transform(&self, f: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(f);
        (self.eigenvectors.transpose() * v)
            .iter()
            .copied()
            .collect()
    }
}

/// Dense eigendecomposition of 𝓛 (verification scale only).
pub fn eig<T: Scalar>(g: &Graph<T>) -> Result<SpectralDecomposition, GraphError> {
    if g.n() > MAX_DENSE_NODES {
        return Err(GraphError::TooLarge {
            n: g.n(),
            max: MAX_DENSE_NODES,
        });
    }
    let l = Laplacian::new(g, LaplacianKind::SymmetricNormalized)?.to_dense();
    let l = (&l + l.transpose()) * 0.5;
    let se = SymmetricEigen::new(l);
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = se.eigenvectors.column(i).into_owned();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vecs.set_column(k, &col);
        vals.push(se.eigenvalues[i]);
    }
    Ok(SpectralDecomposition {
        eigenvalues: vals,
        eigenvectors: vecs,
    })
}

/// Side of a node in a two-set partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    L,
    H,
}

impl Side {
    pub fn as_char(self) -> char {
        match self {
            Side::L => 'L',
            Side::H => 'H',
        }
    }
}

/// Channel selector of the DU operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Low,
    High,
}

impl Channel {
    pub fn side(self) -> Side {
        match self {
            Channel::Low => Side::L,
            Channel::High => Side::H,
        }
    }
}

/// `β(n) = +1` on L and `−1` on H.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BetaFunction {
    sides: Vec<Side>,
}

impl BetaFunction {
    pub fn new(sides: Vec<Side>) -> Self {
        BetaFunction { sides }
    }

    pub fn from_values(beta: &[i8]) -> Self {
        BetaFunction::new(
            beta.iter()
                .map(|&b| if b >= 0 { Side::L } else { Side::H })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn side(&self, i: usize) -> Side {
        self.sides[i]
    }

    pub fn value(&self, i: usize) -> f64 {
        match self.sides[i] {
            Side::L => 1.0,
            Side::H => -1.0,
        }
    }

    pub fn nodes(&self, side: Side) -> Vec<usize> {
        (0..self.sides.len())
            .filter(|&i| self.sides[i] == side)
            .collect()
    }

    /// Whether every edge of `g` joins the two sides.
    pub fn separates<T: Scalar>(&self, g: &Graph<T>) -> bool {
        g.edges().iter().all(|e| self.sides[e.u] != self.sides[e.v])
    }

    /// First edge with both endpoints on one side.
    pub fn violation<T: Scalar>(&self, g: &Graph<T>) -> Option<(usize, usize)> {
        g.edges()
            .iter()
            .find(|e| self.sides[e.u] == self.sides[e.v])
            .map(|e| (e.u, e.v))
    }
}

/// Keeps the entries on `channel`'s side and zeroes the rest.
pub fn du_apply<T: Scalar>(beta: &BetaFunction, channel: Channel, f: &[T]) -> Vec<T> {
    let keep = channel.side();
    f.iter()
        .zip(beta.sides())
        .map(|(&v, &s)| if s == keep { v } else { T::zero() })
        .collect()
}

/// Largest entry of `J_β P_λ − P_{2−λ} J_β` over all eigenspaces.
///
/// When `beta` does not separate `g`, a missing mirror eigenvalue contributes a
/// zero projector and the residual is simply reported.
pub fn check_spectral_folding<T: Scalar>(
    g: &Graph<T>,
    beta: &BetaFunction,
) -> Result<f64, GraphError> {
    let sd = eig(g)?;
    let spaces = sd.eigenspaces();
    let strict = beta.separates(g);
    let n = g.n();
    let j = DMatrix::from_fn(n, n, |a, b| if a == b { beta.value(a) } else { 0.0 });
    let mut worst: f64 = 0.0;
    for (l, cols) in &spaces {
        let p = sd.projector(cols);
        let mirror = spaces
            .iter()
            .find(|(m, _)| (m - (2.0 - l)).abs() <= MIRROR_TOL);
        let q = match mirror {
            Some((_, mc)) => sd.projector(mc),
            None if strict => return Err(GraphError::UnmirroredSpectrum(*l)),
            None => DMatrix::zeros(n, n),
        };
        let r = &j * &p - &q * &j;
        worst = worst.max(r.amax());
    }
    Ok(worst)
}
