//! Bipartiteness, proper coloring, coloring-based (Harary) decomposition into
//! edge-disjoint bipartite stages, 8-connected image graphs with edge-aware
//! link removal, and coarse-graph construction for multiresolution.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{hex, BetaFunction, Graph, GraphError, Side};
use crate::raster::Raster;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BipartiteError {
    #[error("monochromatic edge ({0}, {1})")]
    MonochromaticEdge(usize, usize),
    #[error("edge within one side: ({u}, {v}) in stage {stage}")]
    EdgeWithinSide { stage: usize, u: usize, v: usize },
    #[error("stage {stage} link ({u}, {v}) crosses a cell boundary of an earlier stage")]
    NotNested { stage: usize, u: usize, v: usize },
    #[error("edge {0} assigned more than once")]
    EdgeReused(usize),
    #[error("edge {0} is neither assigned to a stage nor dropped")]
    EdgeUncovered(usize),
    #[error("edge index {0} out of range")]
    EdgeIndex(usize),
    #[error("partition has {got} labels, graph has {expected} nodes")]
    BetaLength { expected: usize, got: usize },
    #[error("image must be at least 2x2, got {width}x{height}")]
    ImageTooSmall { width: usize, height: usize },
    #[error("link ({0}, {1}) is not an 8-neighborhood lattice link")]
    NotLattice(usize, usize),
    #[error("lattice coarsening expects the even-row, even-column pixels in row-major order")]
    LatticeKeep,
    #[error("coarsening needs a nonempty node subset")]
    EmptyKeep,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Two-set partition of the nodes with every edge crossing between the sets.
pub type BipartitePartition = BetaFunction;

/// Two-coloring by breadth-first traversal; each component's first node goes to L.
pub fn is_bipartite<T: Scalar>(g: &Graph<T>) -> Option<BipartitePartition> {
    let mut side: Vec<Option<Side>> = vec![None; g.n()];
    let mut queue = VecDeque::new();
    for s in 0..g.n() {
        if side[s].is_some() {
            continue;
        }
        side[s] = Some(Side::L);
        queue.push_back(s);
        while let Some(i) = queue.pop_front() {
            let other = if side[i] == Some(Side::L) {
                Side::H
            } else {
                Side::L
            };
            for &(j, _) in g.neighbors(i) {
                match side[j] {
                    None => {
                        side[j] = Some(other);
                        queue.push_back(j);
                    }
                    Some(sj) if sj != other => return None,
                    _ => {}
                }
            }
        }
    }
    Some(BetaFunction::new(
        side.into_iter().map(|s| s.unwrap_or(Side::L)).collect(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColoringOrder {
    /// Most neighbors first, ties by node index.
    DegreeDesc,
    Natural,
}

/// Greedy proper coloring: each node takes the smallest color unused by its colored neighbors.
pub fn greedy_coloring<T: Scalar>(g: &Graph<T>, order: ColoringOrder) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..g.n()).collect();
    if order == ColoringOrder::DegreeDesc {
        nodes.sort_by_key(|&i| (std::cmp::Reverse(g.neighbors(i).len()), i));
    }
    let mut color = vec![usize::MAX; g.n()];
    let mut used = Vec::new();
    for i in nodes {
        used.clear();
        used.extend(
            g.neighbors(i)
                .iter()
                .map(|&(j, _)| color[j])
                .filter(|&c| c != usize::MAX),
        );
        used.sort_unstable();
        used.dedup();
        color[i] = used
            .iter()
            .enumerate()
            .find(|&(k, &c)| k != c)
            .map_or(used.len(), |(k, _)| k);
    }
    color
}

/// Number of distinct colors used.
pub fn color_count(colors: &[usize]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

/// One bipartite stage: the subgraph on the full vertex set and its partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage<T> {
    pub graph: Graph<T>,
    pub beta: BipartitePartition,
    /// Indices into the source graph's edge list.
    pub edges: Vec<usize>,
}

/// Ordered, edge-disjoint, nested bipartite stages covering a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteDecomposition<T> {
    n: usize,
    stages: Vec<Stage<T>>,
    dropped: Vec<usize>,
    source_hash: String,
}

impl<T: Scalar> BipartiteDecomposition<T> {
    /// Validates edge-disjointness, coverage, bipartiteness of every stage and
    /// nesting: a stage's links must not cross the cells of earlier stages.
    pub fn new(
        g: &Graph<T>,
        stages: Vec<(Vec<usize>, BipartitePartition)>,
        dropped: Vec<usize>,
    ) -> Result<Self, BipartiteError> {
        let m = g.edge_count();
        let mut owner = vec![false; m];
        for &e in stages.iter().flat_map(|(es, _)| es).chain(&dropped) {
            if e >= m {
                return Err(BipartiteError::EdgeIndex(e));
            }
            if std::mem::replace(&mut owner[e], true) {
                return Err(BipartiteError::EdgeReused(e));
            }
        }
        if let Some(e) = owner.iter().position(|&o| !o) {
            return Err(BipartiteError::EdgeUncovered(e));
        }
        let mut built: Vec<Stage<T>> = Vec::with_capacity(stages.len());
        for (t, (mut edges, beta)) in stages.into_iter().enumerate() {
            if beta.len() != g.n() {
                return Err(BipartiteError::BetaLength {
                    expected: g.n(),
                    got: beta.len(),
                });
            }
            edges.sort_unstable();
            let graph = g.with_edges(&edges);
            if let Some((u, v)) = beta.violation(&graph) {
                return Err(BipartiteError::EdgeWithinSide { stage: t, u, v });
            }
            if let Some(e) = graph.edges().first() {
                if is_bipartite(&graph).is_none() {
                    return Err(BipartiteError::EdgeWithinSide {
                        stage: t,
                        u: e.u,
                        v: e.v,
                    });
                }
            }
            for e in graph.edges() {
                if built.iter().any(|s| s.beta.side(e.u) != s.beta.side(e.v)) {
                    return Err(BipartiteError::NotNested {
                        stage: t,
                        u: e.u,
                        v: e.v,
                    });
                }
            }
            built.push(Stage { graph, beta, edges });
        }
        let mut dropped = dropped;
        dropped.sort_unstable();
        Ok(BipartiteDecomposition {
            n: g.n(),
            stages: built,
            dropped,
            source_hash: g.content_hash(),
        })
    }

    /// Single stage holding every edge of an already bipartite graph.
    pub fn single(g: &Graph<T>, beta: BipartitePartition) -> Result<Self, BipartiteError> {
        Self::new(g, vec![((0..g.edge_count()).collect(), beta)], Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stages(&self) -> &[Stage<T>] {
        &self.stages
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Source edges left out of every stage.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// Hash of the graph this decomposition was built for.
    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }

    /// Side labels of `node` over all stages, e.g. `"LH"`.
    pub fn cell_label(&self, node: usize) -> String {
        self.stages
            .iter()
            .map(|s| s.beta.side(node).as_char())
            .collect()
    }

    /// All `2^S` channel labels in order (`L` before `H`, stage 1 most significant).
    pub fn channel_labels(&self) -> Vec<String> {
        let s = self.stages.len();
        (0..1usize << s)
            .map(|k| {
                (0..s)
                    .map(|t| if k >> (s - 1 - t) & 1 == 0 { 'L' } else { 'H' })
                    .collect()
            })
            .collect()
    }

    /// Nodes per channel, in [`Self::channel_labels`] order, ascending within a channel.
    pub fn cells(&self) -> Vec<(String, Vec<usize>)> {
        let mut map: BTreeMap<String, Vec<usize>> = self
            .channel_labels()
            .into_iter()
            .map(|l| (l, Vec::new()))
            .collect();
        for i in 0..self.n {
            map.get_mut(&self.cell_label(i)).expect("label").push(i);
        }
        self.channel_labels()
            .into_iter()
            .map(|l| {
                let v = map.remove(&l).unwrap_or_default();
                (l, v)
            })
            .collect()
    }

    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.source_hash.as_bytes());
        for s in &self.stages {
            h.update(b"|");
            h.update(
                s.beta
                    .sides()
                    .iter()
                    .map(|x| x.as_char() as u8)
                    .collect::<Vec<_>>(),
            );
            for &e in &s.edges {
                h.update((e as u64).to_le_bytes());
            }
        }
        hex(&h.finalize()[..16])
    }
}

/// Coloring-based decomposition: stage `t` puts nodes whose color has bit `t`
/// clear on L, and each edge goes to the first stage separating its endpoints.
pub fn harary_decompose<T: Scalar>(
    g: &Graph<T>,
    colors: &[usize],
) -> Result<BipartiteDecomposition<T>, BipartiteError> {
    if colors.len() != g.n() {
        return Err(BipartiteError::BetaLength {
            expected: g.n(),
            got: colors.len(),
        });
    }
    if let Some(e) = g.edges().iter().find(|e| colors[e.u] == colors[e.v]) {
        return Err(BipartiteError::MonochromaticEdge(e.u, e.v));
    }
    let top = colors.iter().copied().max().unwrap_or(0);
    let stages = (usize::BITS - top.leading_zeros()).max(1) as usize;
    let mut assign: Vec<Vec<usize>> = vec![Vec::new(); stages];
    for (k, e) in g.edges().iter().enumerate() {
        let t = (colors[e.u] ^ colors[e.v]).trailing_zeros() as usize;
        assign[t].push(k);
    }
    let parts = assign
        .into_iter()
        .enumerate()
        .map(|(t, edges)| {
            let beta = BetaFunction::new(
                colors
                    .iter()
                    .map(|&c| if c >> t & 1 == 0 { Side::L } else { Side::H })
                    .collect(),
            );
            (edges, beta)
        })
        .collect();
    BipartiteDecomposition::new(g, parts, Vec::new())
}

/// Decomposition for a coarse level: the lattice split for image graphs,
/// otherwise a single stage when bipartite, else a greedy-coloring Harary split.
pub fn decompose<T: Scalar>(
    g: &Graph<T>,
    scheme: Coarsening,
) -> Result<BipartiteDecomposition<T>, BipartiteError> {
    match scheme {
        Coarsening::Lattice8 { width, height } => lattice_decomposition(g, width, height),
        Coarsening::TwoHop => match is_bipartite(g) {
            Some(beta) => BipartiteDecomposition::single(g, beta),
            None => harary_decompose(g, &greedy_coloring(g, ColoringOrder::DegreeDesc)),
        },
    }
}

/// Set of removed lattice links, stored as `(p, q)` pixel indices with `p < q`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkMask {
    links: BTreeSet<(usize, usize)>,
}

impl LinkMask {
    pub fn insert(&mut self, p: usize, q: usize) {
        self.links.insert((p.min(q), p.max(q)));
    }

    pub fn contains(&self, p: usize, q: usize) -> bool {
        self.links.contains(&(p.min(q), p.max(q)))
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.links.iter()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageGraphSpec {
    pub width: usize,
    pub height: usize,
    pub mask: Option<LinkMask>,
}

/// Lattice links `(p, q, diagonal)` with `p < q` in row-major order.
fn lattice_links(width: usize, height: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let p = r * width + c;
            if c + 1 < width {
                out.push((p, p + 1, false));
            }
            if r + 1 < height {
                if c > 0 {
                    out.push((p, p + width - 1, true));
                }
                out.push((p, p + width, false));
                if c + 1 < width {
                    out.push((p, p + width + 1, true));
                }
            }
        }
    }
    out
}

/// Unit-weight 8-connected image graph split into rectangular links
/// (checkerboard partition) and diagonal links (row-parity partition).
pub fn image_graph<T: Scalar>(
    spec: &ImageGraphSpec,
) -> Result<(Graph<T>, BipartiteDecomposition<T>), BipartiteError> {
    let (w, h) = (spec.width, spec.height);
    if w < 2 || h < 2 {
        return Err(BipartiteError::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let links = lattice_links(w, h)
        .into_iter()
        .filter(|&(p, q, _)| spec.mask.as_ref().is_none_or(|m| !m.contains(p, q)))
        .map(|(p, q, _)| (p, q, T::one()));
    let g = Graph::new(w * h, links)?;
    let d = lattice_decomposition(&g, w, h)?;
    Ok((g, d))
}

/// Rectangular/diagonal split of a graph whose links all lie on a `width × height` lattice.
pub fn lattice_decomposition<T: Scalar>(
    g: &Graph<T>,
    width: usize,
    height: usize,
) -> Result<BipartiteDecomposition<T>, BipartiteError> {
    if g.n() != width * height {
        return Err(GraphError::SignalLength {
            expected: width * height,
            got: g.n(),
        }
        .into());
    }
    let mut rect = Vec::new();
    let mut diag = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        let (ru, cu) = (e.u / width, e.u % width);
        let (rv, cv) = (e.v / width, e.v % width);
        match (rv - ru, cu.abs_diff(cv)) {
            (0, 1) | (1, 0) => rect.push(k),
            (1, 1) => diag.push(k),
            _ => return Err(BipartiteError::NotLattice(e.u, e.v)),
        }
    }
    let checker = BetaFunction::new(
        (0..g.n())
            .map(|p| {
                if (p / width + p % width).is_multiple_of(2) {
                    Side::L
                } else {
                    Side::H
                }
            })
            .collect(),
    );
    let rows = BetaFunction::new(
        (0..g.n())
            .map(|p| {
                if (p / width).is_multiple_of(2) {
                    Side::L
                } else {
                    Side::H
                }
            })
            .collect(),
    );
    BipartiteDecomposition::new(g, vec![(rect, checker), (diag, rows)], Vec::new())
}

/// Gradient-threshold edge pixels with small 8-connected components removed.
pub fn edge_pixels(image: &Raster, threshold: f64, min_component: usize) -> Vec<bool> {
    let (w, h) = (image.width(), image.height());
    let diff = |a: f64, b: f64, span: usize| if span == 0 { 0.0 } else { a - b };
    let mut edge = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let (c0, c1) = (c.saturating_sub(1), (c + 1).min(w - 1));
            let (r0, r1) = (r.saturating_sub(1), (r + 1).min(h - 1));
            let gx = diff(image.get(r, c1), image.get(r, c0), c1 - c0);
            let gy = diff(image.get(r1, c), image.get(r0, c), r1 - r0);
            edge[r * w + c] = gx.hypot(gy) > threshold;
        }
    }
    let mut seen = vec![false; w * h];
    for s in 0..w * h {
        if !edge[s] || seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let p = comp[k];
            k += 1;
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let q = rr as usize * w + cc as usize;
                    if edge[q] && !seen[q] {
                        seen[q] = true;
                        comp.push(q);
                    }
                }
            }
        }
        if comp.len() < min_component {
            for p in comp {
                edge[p] = false;
            }
        }
    }
    edge
}

/// Lattice links whose endpoints are both edge pixels and differ by more than `threshold`.
pub fn mask_from_edge_pixels(image: &Raster, edges: &[bool], threshold: f64) -> LinkMask {
    let mut mask = LinkMask::default();
    let data = image.data();
    for (p, q, _) in lattice_links(image.width(), image.height()) {
        if edges[p] && edges[q] && (data[p] - data[q]).abs() > threshold {
            mask.insert(p, q);
        }
    }
    mask
}

/// Links to remove so filtering does not cross detected intensity edges.
pub fn edge_aware_mask(image: &Raster, threshold: f64, min_component: usize) -> LinkMask {
    mask_from_edge_pixels(
        image,
        &edge_pixels(image, threshold, min_component),
        threshold,
    )
}

/// Coarse-graph construction scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coarsening {
    /// Kept nodes linked when one or two hops apart.
    TwoHop,
    /// Decimated 8-connected lattice of a `width × height` image graph.
    Lattice8 { width: usize, height: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coarse<T> {
    pub graph: Graph<T>,
    /// Coarse nodes left without links.
    pub isolated: Vec<usize>,
    /// Scheme for coarsening the coarse graph again.
    pub next: Coarsening,
}

/// Reconnects the `keep` nodes (coarse node `k` is `keep[k]`).
pub fn coarsen<T: Scalar>(
    g: &Graph<T>,
    keep: &[usize],
    scheme: Coarsening,
) -> Result<Coarse<T>, BipartiteError> {
    if keep.is_empty() {
        return Err(BipartiteError::EmptyKeep);
    }
    let (graph, next) = match scheme {
        Coarsening::TwoHop => (two_hop(g, keep)?, Coarsening::TwoHop),
        Coarsening::Lattice8 { width, height } => {
            let (cw, ch) = (width.div_ceil(2), height.div_ceil(2));
            let expected: Vec<usize> = (0..height)
                .step_by(2)
                .flat_map(|r| (0..width).step_by(2).map(move |c| r * width + c))
                .collect();
            if g.n() != width * height || keep != expected.as_slice() {
                return Err(BipartiteError::LatticeKeep);
            }
            let mut links = Vec::new();
            for (p, q, _) in lattice_links(cw, ch) {
                let fine = |x: usize| 2 * (x / cw) * width + 2 * (x % cw);
                let (fp, fq) = (fine(p), fine(q));
                let mid = (fp + fq) / 2;
                if g.weight(fp, mid).is_some() && g.weight(mid, fq).is_some() {
                    links.push((p, q, T::one()));
                }
            }
            (
                Graph::new(cw * ch, links)?,
                Coarsening::Lattice8 {
                    width: cw,
                    height: ch,
                },
            )
        }
    };
    Ok(Coarse {
        isolated: graph.isolated_nodes(),
        graph,
        next,
    })
}

fn two_hop<T: Scalar>(g: &Graph<T>, keep: &[usize]) -> Result<Graph<T>, BipartiteError> {
    let mut index = vec![usize::MAX; g.n()];
    for (k, &i) in keep.iter().enumerate() {
        index[i] = k;
    }
    let mut w: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (a, &u) in keep.iter().enumerate() {
        for &(k, wuk) in g.neighbors(u) {
            if index[k] != usize::MAX {
                if index[k] > a {
                    *w.entry((a, index[k])).or_insert(T::zero()) += wuk;
                }
                continue;
            }
            let dk = g.degree(k);
            for &(v, wkv) in g.neighbors(k) {
                if index[v] != usize::MAX && index[v] > a {
                    *w.entry((a, index[v])).or_insert(T::zero()) += wuk * wkv / dk;
                }
            }
        }
    }
    Ok(Graph::new(
        keep.len(),
        w.into_iter().map(|((a, b), x)| (a, b, x)),
    )?)
}
