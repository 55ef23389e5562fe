//! Two-channel analysis and synthesis on bipartite graphs, the separable
//! multi-stage cascade over a decomposition, and multiresolution levels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bipartite::{coarsen, decompose, BipartiteDecomposition, BipartiteError, Coarsening};
use crate::graph::{hex, BetaFunction, Graph, GraphError, Laplacian, LaplacianKind, Side};
use crate::kernels::{verify_kernelset, KernelSet};
use crate::poly::Polynomial;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterbankError {
    #[error("edge within one side: ({0}, {1})")]
    EdgeWithinSide(usize, usize),
    #[error(
        "kernels are not perfect reconstruction (distortion {distortion:.3e}, alias {alias:.3e})"
    )]
    NotPerfectReconstruction { distortion: f64, alias: f64 },
    #[error("levels must be at least 1")]
    InvalidLevels,
    #[error("decomposition was built for a different graph")]
    DecompositionMismatch,
    #[error("incompatible coefficient tree")]
    IncompatibleTree,
    #[error(
        "critical sampling violated at level {level}: {got} coefficients for {expected} nodes"
    )]
    CriticalSampling {
        level: usize,
        expected: usize,
        got: usize,
    },
    #[error("channel sizes do not match the partition: expected {expected}, got {got}")]
    ChannelLength { expected: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bipartite(#[from] BipartiteError),
}

/// Filtering basis of the filterbank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Symmetric normalized Laplacian; the highpass annihilates `D^{1/2}·1`.
    NonzeroDc,
    /// Random-walk Laplacian; the highpass annihilates constants.
    ZeroDc,
}

impl Variant {
    pub fn laplacian_kind(self) -> LaplacianKind {
        match self {
            Variant::NonzeroDc => LaplacianKind::SymmetricNormalized,
            Variant::ZeroDc => LaplacianKind::RandomWalk,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::NonzeroDc => "nonzerodc",
            Variant::ZeroDc => "zerodc",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nonzerodc" => Ok(Variant::NonzeroDc),
            "zerodc" => Ok(Variant::ZeroDc),
            other => Err(format!(
                "unknown variant `{other}` (expected nonzerodc or zerodc)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterbankConfig {
    pub kernels: KernelSet,
    pub variant: Variant,
    pub gain_compensation: bool,
    pub levels: usize,
    pub coarsening: Coarsening,
}

impl FilterbankConfig {
    /// Checks `levels ≥ 1` and that the kernels are perfect reconstruction.
    pub fn new(
        kernels: KernelSet,
        variant: Variant,
        gain_compensation: bool,
        levels: usize,
        coarsening: Coarsening,
    ) -> Result<Self, FilterbankError> {
        if levels == 0 {
            return Err(FilterbankError::InvalidLevels);
        }
        let report = verify_kernelset(&kernels);
        if !report.is_pr() {
            return Err(FilterbankError::NotPerfectReconstruction {
                distortion: report.distortion,
                alias: report.alias,
            });
        }
        Ok(FilterbankConfig {
            kernels,
            variant,
            gain_compensation,
            levels,
            coarsening,
        })
    }

    fn hash_into(&self, h: &mut Sha256) {
        let ks = &self.kernels;
        for p in [&ks.h0, &ks.h1, &ks.g0, &ks.g1] {
            h.update((p.coeffs().len() as u64).to_le_bytes());
            for c in p.coeffs() {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        h.update(format!(
            "{}|{}|{}|{:?}",
            self.variant, self.gain_compensation, self.levels, self.coarsening
        ));
    }
}

#[derive(Clone, Debug)]
struct Kernels<T> {
    h0: Polynomial<T>,
    h1: Polynomial<T>,
    g0: Polynomial<T>,
    g1: Polynomial<T>,
    gain_low: T,
    gain_high: T,
}

impl<T: Scalar> Kernels<T> {
    fn new(ks: &KernelSet, gc: bool) -> Self {
        let cast = |p: &Polynomial<f64>| p.map(|&c| T::of(c));
        let (gl, gh) = if gc {
            (ks.gain_low, ks.gain_high)
        } else {
            (1.0, 1.0)
        };
        Kernels {
            h0: cast(&ks.h0),
            h1: cast(&ks.h1),
            g0: cast(&ks.g0),
            g1: cast(&ks.g1),
            gain_low: T::of(gl),
            gain_high: T::of(gh),
        }
    }
}

/// One bipartite stage prepared for filtering; nodes without stage links pass through.
#[derive(Clone, Debug)]
struct StageOp<T> {
    lap: Laplacian<T>,
    beta: BetaFunction,
    isolated: Vec<bool>,
}

impl<T: Scalar> StageOp<T> {
    fn new(g: &Graph<T>, beta: &BetaFunction, variant: Variant) -> Self {
        StageOp {
            lap: Laplacian::lenient(g, variant.laplacian_kind()),
            beta: beta.clone(),
            isolated: (0..g.n()).map(|i| g.neighbors(i).is_empty()).collect(),
        }
    }

    fn pass_through(&self) -> usize {
        self.isolated.iter().filter(|&&b| b).count()
    }

    /// Full-length lowpass (zero off L) and highpass (zero off H) outputs.
    fn analyze(&self, k: &Kernels<T>, x: &[T]) -> (Vec<T>, Vec<T>) {
        let lo = self.lap.filter(&k.h0, x);
        let hi = self.lap.filter(&k.h1, x);
        let n = x.len();
        let (mut low, mut high) = (vec![T::zero(); n], vec![T::zero(); n]);
        for i in 0..n {
            let pass = self.isolated[i];
            match self.beta.side(i) {
                Side::L => low[i] = if pass { x[i] } else { lo[i] * k.gain_low },
                Side::H => high[i] = if pass { x[i] } else { hi[i] * k.gain_high },
            }
        }
        (low, high)
    }

    fn synthesize(&self, k: &Kernels<T>, low: &[T], high: &[T]) -> Vec<T> {
        let n = low.len();
        let (mut l, mut h) = (vec![T::zero(); n], vec![T::zero(); n]);
        for i in 0..n {
            if self.isolated[i] {
                continue;
            }
            match self.beta.side(i) {
                Side::L => l[i] = low[i] / k.gain_low,
                Side::H => h[i] = high[i] / k.gain_high,
            }
        }
        let mut y = self.lap.filter(&k.g0, &l);
        let y1 = self.lap.filter(&k.g1, &h);
        for i in 0..n {
            y[i] = if self.isolated[i] {
                match self.beta.side(i) {
                    Side::L => low[i],
                    Side::H => high[i],
                }
            } else {
                y[i] + y1[i]
            };
        }
        y
    }
}

fn validate_partition<T: Scalar>(g: &Graph<T>, beta: &BetaFunction) -> Result<(), FilterbankError> {
    if beta.len() != g.n() {
        return Err(FilterbankError::ChannelLength {
            expected: g.n(),
            got: beta.len(),
        });
    }
    match beta.violation(g) {
        Some((u, v)) => Err(FilterbankError::EdgeWithinSide(u, v)),
        None => Ok(()),
    }
}

/// Lowpass coefficients on the L nodes and highpass coefficients on the H nodes, each ascending by node.
pub fn analyze_one<T: Scalar>(
    g: &Graph<T>,
    beta: &BetaFunction,
    ks: &KernelSet,
    f: &[T],
    variant: Variant,
    gc: bool,
) -> Result<(Vec<T>, Vec<T>), FilterbankError> {
    validate_partition(g, beta)?;
    g.check_signal(f)?;
    let (low, high) = StageOp::new(g, beta, variant).analyze(&Kernels::new(ks, gc), f);
    Ok((
        pick(&low, &beta.nodes(Side::L)),
        pick(&high, &beta.nodes(Side::H)),
    ))
}

/// Inverse of [`analyze_one`].
pub fn synthesize_one<T: Scalar>(
    g: &Graph<T>,
    beta: &BetaFunction,
    ks: &KernelSet,
    low: &[T],
    high: &[T],
    variant: Variant,
    gc: bool,
) -> Result<Vec<T>, FilterbankError> {
    validate_partition(g, beta)?;
    let (ln, hn) = (beta.nodes(Side::L), beta.nodes(Side::H));
    if low.len() != ln.len() || high.len() != hn.len() {
        return Err(FilterbankError::ChannelLength {
            expected: g.n(),
            got: low.len() + high.len(),
        });
    }
    let op = StageOp::new(g, beta, variant);
    Ok(op.synthesize(
        &Kernels::new(ks, gc),
        &place(g.n(), &ln, low),
        &place(g.n(), &hn, high),
    ))
}

fn pick<T: Copy>(v: &[T], nodes: &[usize]) -> Vec<T> {
    nodes.iter().map(|&i| v[i]).collect()
}

fn place<T: Scalar>(n: usize, nodes: &[usize], values: &[T]) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    for (&i, &x) in nodes.iter().zip(values) {
        v[i] = x;
    }
    v
}

/// Coefficients of one channel (intersection cell) at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelCoefficients<T> {
    /// Side per stage, e.g. `"LH"`.
    pub label: String,
    /// Level-graph node indices, ascending.
    pub nodes: Vec<usize>,
    /// One value per node; empty when the channel is forwarded to the next level.
    pub values: Vec<T>,
    pub forwarded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelCoefficients<T> {
    pub node_count: usize,
    pub graph_hash: String,
    pub channels: Vec<ChannelCoefficients<T>>,
}

impl<T> LevelCoefficients<T> {
    pub fn stored_count(&self) -> usize {
        self.channels.iter().map(|c| c.values.len()).sum()
    }

    pub fn forwarded_count(&self) -> usize {
        self.channels
            .iter()
            .filter(|c| c.forwarded)
            .map(|c| c.nodes.len())
            .sum()
    }
}

/// Multi-level, multi-channel transform output.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTree<T> {
    pub levels: Vec<LevelCoefficients<T>>,
    pub k0: usize,
    pub k1: usize,
    pub variant: Variant,
    pub gain_compensation: bool,
    config_hash: String,
}

impl<T: Scalar> CoefficientTree<T> {
    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn graph_hash(&self) -> &str {
        &self.levels[0].graph_hash
    }

    /// Stored coefficients over all levels.
    pub fn coefficient_count(&self) -> usize {
        self.levels.iter().map(|l| l.stored_count()).sum()
    }

    /// `(level, channel)` positions holding detail coefficients: everything
    /// except the all-lowpass channel of the deepest level.
    fn is_detail(&self, level: usize, ch: &ChannelCoefficients<T>) -> bool {
        !(level + 1 == self.levels.len() && ch.label.chars().all(|c| c == 'L'))
    }

    pub fn detail_values(&self) -> Vec<T> {
        let mut out = Vec::new();
        for (l, lev) in self.levels.iter().enumerate() {
            for ch in &lev.channels {
                if self.is_detail(l, ch) {
                    out.extend_from_slice(&ch.values);
                }
            }
        }
        out
    }

    /// Every stored value as `(level, label, node, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &str, usize, T)> + '_ {
        self.levels.iter().enumerate().flat_map(|(l, lev)| {
            lev.channels.iter().flat_map(move |ch| {
                ch.nodes
                    .iter()
                    .zip(&ch.values)
                    .map(move |(&n, &v)| (l, ch.label.as_str(), n, v))
            })
        })
    }
}

/// Keeps the deepest all-lowpass channel and the largest `keep_fraction` of the
/// detail coefficients by magnitude; ties go to the earlier (level, channel, node).
pub fn sparsify<T: Scalar>(tree: &CoefficientTree<T>, keep_fraction: f64) -> CoefficientTree<T> {
    let frac = keep_fraction.clamp(0.0, 1.0);
    let mut idx: Vec<(usize, usize, usize, T)> = Vec::new();
    for (l, lev) in tree.levels.iter().enumerate() {
        for (c, ch) in lev.channels.iter().enumerate() {
            if tree.is_detail(l, ch) {
                idx.extend(
                    ch.values
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| (l, c, k, v.abs())),
                );
            }
        }
    }
    let keep = (frac * idx.len() as f64).round() as usize;
    idx.sort_by(|a, b| b.3.partial_cmp(&a.3).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = tree.clone();
    for &(l, c, k, _) in &idx[keep..] {
        out.levels[l].channels[c].values[k] = T::zero();
    }
    out
}

#[derive(Clone, Debug)]
struct LevelPlan<T> {
    graph: Graph<T>,
    ops: Vec<StageOp<T>>,
    labels: Vec<String>,
    cells: Vec<Vec<usize>>,
}

/// Per-level structure report of a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub nodes: usize,
    pub edges: usize,
    pub stages: usize,
    pub dropped_links: usize,
    /// Nodes without links in each stage subgraph (filtered as identity).
    pub pass_through: Vec<usize>,
    /// Coarse nodes left without links by coarsening.
    pub isolated_coarse: usize,
    /// Channel label and node count.
    pub cells: Vec<(String, usize)>,
}

/// Graphs, decompositions and stage operators for every level of a transform.
#[derive(Clone, Debug)]
pub struct Plan<T> {
    kernels: Kernels<T>,
    levels: Vec<LevelPlan<T>>,
    reports: Vec<LevelReport>,
    config: FilterbankConfig,
    hash: String,
}

impl<T: Scalar> Plan<T> {
    /// Builds all levels. Stops early if the all-lowpass cell becomes empty.
    pub fn new(
        g: &Graph<T>,
        decomp: &BipartiteDecomposition<T>,
        cfg: &FilterbankConfig,
    ) -> Result<Self, FilterbankError> {
        if decomp.source_hash() != g.content_hash() || decomp.n() != g.n() {
            return Err(FilterbankError::DecompositionMismatch);
        }
        let mut h = Sha256::new();
        h.update(g.content_hash());
        h.update(decomp.content_hash());
        h.update((std::mem::size_of::<T>() as u64).to_le_bytes());
        cfg.hash_into(&mut h);

        let mut levels = Vec::new();
        let mut reports = Vec::new();
        let mut graph = g.clone();
        let mut dec = decomp.clone();
        let mut scheme = cfg.coarsening;
        let mut isolated_coarse = 0;
        for level in 0..cfg.levels {
            let ops: Vec<StageOp<T>> = dec
                .stages()
                .iter()
                .map(|s| StageOp::new(&s.graph, &s.beta, cfg.variant))
                .collect();
            let (labels, cells): (Vec<String>, Vec<Vec<usize>>) = dec.cells().into_iter().unzip();
            reports.push(LevelReport {
                nodes: graph.n(),
                edges: graph.edge_count(),
                stages: ops.len(),
                dropped_links: dec.dropped().len(),
                pass_through: ops.iter().map(|o| o.pass_through()).collect(),
                isolated_coarse,
                cells: labels
                    .iter()
                    .cloned()
                    .zip(cells.iter().map(|c| c.len()))
                    .collect(),
            });
            let keep = cells[0].clone();
            levels.push(LevelPlan {
                graph: graph.clone(),
                ops,
                labels,
                cells,
            });
            if level + 1 == cfg.levels || keep.is_empty() {
                break;
            }
            let coarse = coarsen(&graph, &keep, scheme)?;
            isolated_coarse = coarse.isolated.len();
            dec = decompose(&coarse.graph, coarse.next)?;
            graph = coarse.graph;
            scheme = coarse.next;
        }
        h.update((levels.len() as u64).to_le_bytes());
        Ok(Plan {
            kernels: Kernels::new(&cfg.kernels, cfg.gain_compensation),
            levels,
            reports,
            config: cfg.clone(),
            hash: hex(&h.finalize()[..16]),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn reports(&self) -> &[LevelReport] {
        &self.reports
    }

    /// Graph used at `level` (0 is the input graph).
    pub fn level_graph(&self, level: usize) -> &Graph<T> {
        &self.levels[level].graph
    }

    pub fn analyze(&self, f: &[T]) -> Result<CoefficientTree<T>, FilterbankError> {
        self.levels[0].graph.check_signal(f)?;
        let mut signal = f.to_vec();
        let mut out = Vec::with_capacity(self.levels.len());
        for (l, lp) in self.levels.iter().enumerate() {
            let mut bank: Vec<Vec<T>> = vec![signal];
            for op in &lp.ops {
                bank = bank
                    .iter()
                    .flat_map(|v| {
                        let (lo, hi) = op.analyze(&self.kernels, v);
                        [lo, hi]
                    })
                    .collect();
            }
            let deepest = l + 1 == self.levels.len();
            let mut channels = Vec::with_capacity(bank.len());
            for (k, v) in bank.iter().enumerate() {
                let forwarded = k == 0 && !deepest;
                channels.push(ChannelCoefficients {
                    label: lp.labels[k].clone(),
                    nodes: lp.cells[k].clone(),
                    values: if forwarded {
                        Vec::new()
                    } else {
                        pick(v, &lp.cells[k])
                    },
                    forwarded,
                });
            }
            signal = pick(&bank[0], &lp.cells[0]);
            let lev = LevelCoefficients {
                node_count: lp.graph.n(),
                graph_hash: lp.graph.content_hash(),
                channels,
            };
            let got = lev.stored_count() + lev.forwarded_count();
            if got != lp.graph.n() {
                return Err(FilterbankError::CriticalSampling {
                    level: l,
                    expected: lp.graph.n(),
                    got,
                });
            }
            out.push(lev);
        }
        Ok(CoefficientTree {
            levels: out,
            k0: self.config.kernels.k0,
            k1: self.config.kernels.k1,
            variant: self.config.variant,
            gain_compensation: self.config.gain_compensation,
            config_hash: self.hash.clone(),
        })
    }

    pub fn synthesize(&self, tree: &CoefficientTree<T>) -> Result<Vec<T>, FilterbankError> {
        if tree.config_hash != self.hash || tree.levels.len() != self.levels.len() {
            return Err(FilterbankError::IncompatibleTree);
        }
        let mut coarse: Option<Vec<T>> = None;
        for (lp, lev) in self.levels.iter().zip(&tree.levels).rev() {
            let n = lp.graph.n();
            let mut bank: BTreeMap<String, Vec<T>> = BTreeMap::new();
            for (k, ch) in lev.channels.iter().enumerate() {
                if ch.label != lp.labels[k] || ch.nodes != lp.cells[k] {
                    return Err(FilterbankError::IncompatibleTree);
                }
                let values = if ch.forwarded {
                    coarse.take().ok_or(FilterbankError::IncompatibleTree)?
                } else {
                    ch.values.clone()
                };
                if values.len() != ch.nodes.len() {
                    return Err(FilterbankError::IncompatibleTree);
                }
                bank.insert(ch.label.clone(), place(n, &ch.nodes, &values));
            }
            for (t, op) in lp.ops.iter().enumerate().rev() {
                let mut next = BTreeMap::new();
                for (label, low) in bank
                    .iter()
                    .filter(|(k, _)| k.len() == t + 1 && k.ends_with('L'))
                {
                    let prefix = &label[..t];
                    let high = &bank[&format!("{prefix}H")];
                    next.insert(prefix.to_string(), op.synthesize(&self.kernels, low, high));
                }
                bank = next;
            }
            coarse = Some(bank.remove("").ok_or(FilterbankError::IncompatibleTree)?);
        }
        coarse.ok_or(FilterbankError::IncompatibleTree)
    }
}

/// Multi-level analysis of `f`.
pub fn analyze<T: Scalar>(
    g: &Graph<T>,
    decomp: &BipartiteDecomposition<T>,
    cfg: &FilterbankConfig,
    f: &[T],
) -> Result<CoefficientTree<T>, FilterbankError> {
    Plan::new(g, decomp, cfg)?.analyze(f)
}

/// Inverse of [`analyze`]; the tree must come from the same graph, decomposition and configuration.
pub fn synthesize<T: Scalar>(
    g: &Graph<T>,
    decomp: &BipartiteDecomposition<T>,
    cfg: &FilterbankConfig,
    tree: &CoefficientTree<T>,
) -> Result<Vec<T>, FilterbankError> {
    Plan::new(g, decomp, cfg)?.synthesize(tree)
}

/// Dense `N×N` single-stage operators, assembled column by column from the sparse path.
#[derive(Clone, Debug)]
pub struct DenseOperators {
    /// Rows of `H0` on L and of `H1` on H.
    pub analysis: DMatrix<f64>,
    /// `synthesize_one ∘ analyze_one`.
    pub roundtrip: DMatrix<f64>,
}

pub fn dense_operators(
    g: &Graph<f64>,
    beta: &BetaFunction,
    ks: &KernelSet,
    variant: Variant,
    gc: bool,
) -> Result<DenseOperators, FilterbankError> {
    validate_partition(g, beta)?;
    let n = g.n();
    let op = StageOp::new(g, beta, variant);
    let k = Kernels::new(ks, gc);
    let mut analysis = DMatrix::zeros(n, n);
    let mut roundtrip = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let (lo, hi) = op.analyze(&k, &e);
        for i in 0..n {
            analysis[(i, j)] = lo[i] + hi[i];
        }
        let y = op.synthesize(&k, &lo, &hi);
        for i in 0..n {
            roundtrip[(i, j)] = y[i];
        }
        e[j] = 0.0;
    }
    Ok(DenseOperators {
        analysis,
        roundtrip,
    })
}
