//! Spreads, Θ and Riesz bounds, and reconstruction quality.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bipartite::is_bipartite;
use crate::filterbank::{dense_operators, FilterbankError, Variant};
use crate::graph::{Basis, Graph, GraphError, Laplacian, SpectralDecomposition};
use crate::kernels::KernelSet;
use crate::Poly64;

/// Number of samples in the graph-independent Θ grid.
pub const THETA_GRID_POINTS: usize = 100;
/// Reported SNR/PSNR when the error is zero or negligible.
pub const SNR_CAP_DB: f64 = 300.0;
/// Largest graph for the dense analysis operator.
pub const MAX_RIESZ_NODES: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("undefined spread: zero signal")]
    UndefinedSpread,
    #[error("undefined SNR: zero reference")]
    UndefinedSnr,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("graph has {n} nodes; dense Riesz bounds are limited to {max}")]
    TooLarge { n: usize, max: usize },
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Filterbank(#[from] FilterbankError),
}

/// Uniform grid on `[0, 2]` including both endpoints.
pub fn theta_grid() -> Vec<f64> {
    let n = THETA_GRID_POINTS;
    (0..n).map(|i| 2.0 * i as f64 / (n - 1) as f64).collect()
}

/// Sampled Riesz bounds and orthogonality measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaReport {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

/// `A = √min ½(h0²+h1²)`, `B = √max ½(h0²+h1²)`, `Θ = 1 − |B−A|/|B+A|` over `grid`.
pub fn theta_of(h0: &Poly64, h1: &Poly64, grid: &[f64]) -> ThetaReport {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &x in grid {
        let c = 0.5 * (h0.eval(x).powi(2) + h1.eval(x).powi(2));
        lo = lo.min(c);
        hi = hi.max(c);
    }
    let (a, b) = (lo.sqrt(), hi.sqrt());
    ThetaReport {
        a,
        b,
        theta: theta_from_bounds(a, b),
    }
}

/// `1 − |B−A|/|B+A|`.
pub fn theta_from_bounds(a: f64, b: f64) -> f64 {
    1.0 - (b - a).abs() / (b + a).abs()
}

/// All-pairs shortest-path lengths; hop counts when all weights are equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Distances {
    d: Vec<Vec<f64>>,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl Distances {
    pub fn new(g: &Graph<f64>) -> Self {
        let uniform = g.edges().windows(2).all(|p| p[0].w == p[1].w);
        let d = (0..g.n())
            .map(|s| {
                if uniform {
                    g.hops_from(s)
                        .into_iter()
                        .map(|h| {
                            if h == usize::MAX {
                                f64::INFINITY
                            } else {
                                h as f64
                            }
                        })
                        .collect()
                } else {
                    dijkstra(g, s)
                }
            })
            .collect();
        Distances { d }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }
}

fn dijkstra(g: &Graph<f64>, s: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.n()];
    dist[s] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, s)]);
    while let Some(Item(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        for &(j, w) in g.neighbors(i) {
            if d + w < dist[j] {
                dist[j] = d + w;
                heap.push(Item(d + w, j));
            }
        }
    }
    dist
}

/// `min_i Σ_j d(i,j)² f(j)² / ‖f‖²`.
pub fn spatial_spread_with(dist: &Distances, f: &[f64]) -> Result<f64, MetricsError> {
    let energy: f64 = f.iter().map(|x| x * x).sum();
    if energy == 0.0 {
        return Err(MetricsError::UndefinedSpread);
    }
    let mut best = f64::INFINITY;
    for row in &dist.d {
        let s: f64 = row
            .iter()
            .zip(f)
            .filter(|(_, &x)| x != 0.0)
            .map(|(&d, &x)| d * d * x * x)
            .sum();
        best = best.min(s / energy);
    }
    Ok(best)
}

pub fn spatial_spread(g: &Graph<f64>, f: &[f64]) -> Result<f64, MetricsError> {
    g.check_signal(f)?;
    spatial_spread_with(&Distances::new(g), f)
}

/// Mean spatial spread of impulse responses, with the per-node values.
pub fn spatial_spread_tx(
    dist: &Distances,
    responses: &[Vec<f64>],
) -> Result<(f64, Vec<f64>), MetricsError> {
    let per: Vec<f64> = responses
        .iter()
        .map(|r| spatial_spread_with(dist, r))
        .collect::<Result<_, _>>()?;
    Ok((per.iter().sum::<f64>() / per.len().max(1) as f64, per))
}

/// Variance of λ under the pmf `p(λ_l) ∝ w_l`.
fn lambda_variance(sd: &SpectralDecomposition, w: &[f64]) -> Result<f64, MetricsError> {
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return Err(MetricsError::UndefinedSpread);
    }
    let mu: f64 = sd
        .eigenvalues
        .iter()
        .zip(w)
        .map(|(l, p)| l * p)
        .sum::<f64>()
        / total;
    Ok(sd
        .eigenvalues
        .iter()
        .zip(w)
        .map(|(l, p)| (l - mu).powi(2) * p)
        .sum::<f64>()
        / total)
}

/// `min_μ Σ_λ (λ − μ)² f̂(λ)² / ‖f‖²`, minimized in closed form at the mean.
pub fn spectral_spread(sd: &SpectralDecomposition, f: &[f64]) -> Result<f64, MetricsError> {
    if f.len() != sd.n() {
        return Err(MetricsError::Length(f.len(), sd.n()));
    }
    let w: Vec<f64> = sd.transform(f).into_iter().map(|x| x * x).collect();
    lambda_variance(sd, &w)
}

/// λ-variance of the averaged squared spectral response, normalized to a pmf.
pub fn spectral_spread_tx(
    sd: &SpectralDecomposition,
    responses: &[Vec<f64>],
) -> Result<f64, MetricsError> {
    let mut w = vec![0.0; sd.n()];
    for r in responses {
        for (acc, x) in w.iter_mut().zip(sd.transform(r)) {
            *acc += x * x;
        }
    }
    lambda_variance(sd, &w)
}

/// `kernel(𝓛)·δ_n` for every node `n`.
pub fn impulse_responses(g: &Graph<f64>, kernel: &Poly64) -> Result<Vec<Vec<f64>>, MetricsError> {
    let lap = Laplacian::new(g, Basis::Symmetric.kind())?;
    let mut delta = vec![0.0; g.n()];
    Ok((0..g.n())
        .map(|n| {
            delta[n] = 1.0;
            let r = lap.filter(kernel, &delta);
            delta[n] = 0.0;
            r
        })
        .collect())
}

/// Ideal half-band lowpass: 1 for `λ ≤ 1`, else 0.
pub fn ideal_lowpass(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Ideal half-band highpass: 1 for `λ > 1`, else 0.
pub fn ideal_highpass(lambda: f64) -> f64 {
    1.0 - ideal_lowpass(lambda)
}

/// Impulse responses of a spectral kernel built through the eigenbasis.
pub fn eigen_responses(sd: &SpectralDecomposition, h: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    let m = sd.dense_filter(h);
    (0..m.ncols())
        .map(|j| m.column(j).iter().copied().collect())
        .collect()
}

/// Spatial and spectral spread of one transform channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadReport {
    pub spatial: f64,
    pub spectral: f64,
    pub per_node: Vec<f64>,
}

pub fn spread_report(
    dist: &Distances,
    sd: &SpectralDecomposition,
    responses: &[Vec<f64>],
) -> Result<SpreadReport, MetricsError> {
    let (spatial, per_node) = spatial_spread_tx(dist, responses)?;
    Ok(SpreadReport {
        spatial,
        spectral: spectral_spread_tx(sd, responses)?,
        per_node,
    })
}

/// `10·log10(‖ref‖² / ‖ref − test‖²)`, capped at [`SNR_CAP_DB`].
pub fn snr<T: Copy + Into<f64>>(reference: &[T], test: &[T]) -> Result<f64, MetricsError> {
    if reference.len() != test.len() {
        return Err(MetricsError::Length(reference.len(), test.len()));
    }
    let mut sig = 0.0;
    let mut err = 0.0;
    for (&r, &t) in reference.iter().zip(test) {
        let (r, t): (f64, f64) = (r.into(), t.into());
        sig += r * r;
        err += (r - t) * (r - t);
    }
    if sig == 0.0 {
        return Err(MetricsError::UndefinedSnr);
    }
    Ok(cap(10.0 * (sig / err).log10()))
}

/// `10·log10(255² / MSE)`, capped at [`SNR_CAP_DB`].
pub fn psnr(reference: &[f64], test: &[f64]) -> Result<f64, MetricsError> {
    if reference.len() != test.len() {
        return Err(MetricsError::Length(reference.len(), test.len()));
    }
    let mse = reference
        .iter()
        .zip(test)
        .map(|(r, t)| (r - t).powi(2))
        .sum::<f64>()
        / reference.len().max(1) as f64;
    Ok(cap(10.0 * (255.0f64.powi(2) / mse).log10()))
}

fn cap(db: f64) -> f64 {
    if db.is_nan() || db > SNR_CAP_DB {
        SNR_CAP_DB
    } else {
        db
    }
}

/// Extreme singular values of the analysis operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RieszBounds {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    /// For zeroDC: `[A√(d_min/d_max), B√(d_max/d_min)]` from the nonzeroDC bounds.
    pub predicted: Option<(f64, f64)>,
}

fn singular_extremes(m: DMatrix<f64>) -> (f64, f64) {
    let sv = m.singular_values();
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sv.iter().copied().fold(0.0, f64::max);
    (lo, hi)
}

/// Exact Riesz bounds of the dense analysis operator (without gain compensation)
/// on a bipartite graph with its natural partition.
pub fn riesz_exact(
    g: &Graph<f64>,
    ks: &KernelSet,
    variant: Variant,
) -> Result<RieszBounds, MetricsError> {
    if g.n() > MAX_RIESZ_NODES {
        return Err(MetricsError::TooLarge {
            n: g.n(),
            max: MAX_RIESZ_NODES,
        });
    }
    let beta = is_bipartite(g).ok_or(MetricsError::NotBipartite)?;
    let (a0, b0) =
        singular_extremes(dense_operators(g, &beta, ks, Variant::NonzeroDc, false)?.analysis);
    let bounds = |a: f64, b: f64, predicted| RieszBounds {
        a,
        b,
        theta: theta_from_bounds(a, b),
        predicted,
    };
    match variant {
        Variant::NonzeroDc => Ok(bounds(a0, b0, None)),
        Variant::ZeroDc => {
            let (a, b) =
                singular_extremes(dense_operators(g, &beta, ks, Variant::ZeroDc, false)?.analysis);
            let d = g.degrees();
            let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
            let dmax = d.iter().copied().fold(0.0, f64::max);
            let r = (dmin / dmax).sqrt();
            Ok(bounds(a, b, Some((a0 * r, b0 / r))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{eig, spectral_filter};
    use crate::kernels::design;
    use crate::Polynomial;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p3() -> Graph<f64> {
        Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn random_bipartite(per_side: usize, seed: u64) -> Graph<f64> {
        let n = 2 * per_side;
        let p = 2.0 * (n as f64).ln() / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for i in 0..per_side {
            e.push((i, per_side + i, 1.0));
            for j in per_side..n {
                if j != per_side + i && rng.gen::<f64>() < p {
                    e.push((i, j, 1.0));
                }
            }
        }
        Graph::new(n, e).unwrap()
    }

    #[test]
    fn theta_examples() {
        let s2 = Polynomial::constant(2f64.sqrt());
        let r = theta_of(&s2, &Polynomial::zero(), &theta_grid());
        assert!((r.a - 1.0).abs() < 1e-15 && (r.b - 1.0).abs() < 1e-15 && r.theta == 1.0);
        let c = 3.0;
        let r = theta_of(&Polynomial::constant(c), &Polynomial::zero(), &theta_grid());
        assert!((r.a - c / 2f64.sqrt()).abs() < 1e-15 && r.theta == 1.0);
        assert_eq!(theta_grid().len(), 100);
    }

    #[test]
    fn spatial_examples() {
        let g = p3();
        let mut d = vec![0.0; 3];
        d[2] = 1.0;
        assert_eq!(spatial_spread(&g, &d).unwrap(), 0.0);
        let h = 0.5f64.sqrt();
        assert!((spatial_spread(&g, &[h, 0.0, h]).unwrap() - 1.0).abs() < 1e-15);
        let k2 = Graph::unweighted(2, &[(0, 1)]).unwrap();
        assert!((spatial_spread(&k2, &[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(
            spatial_spread(&k2, &[0.0, 0.0]),
            Err(MetricsError::UndefinedSpread)
        );
    }

    #[test]
    fn weighted_distances_use_dijkstra() {
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)]).unwrap();
        let d = Distances::new(&g);
        assert_eq!(d.get(0, 2), 2.0);
        let u = Graph::new(3, [(0, 1, 2.0), (1, 2, 2.0)]).unwrap();
        assert_eq!(Distances::new(&u).get(0, 2), 2.0);
    }

    #[test]
    fn transform_spatial_examples() {
        let g = p3();
        let dist = Distances::new(&g);
        let identity: Vec<Vec<f64>> = (0..3)
            .map(|n| (0..3).map(|i| if i == n { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(spatial_spread_tx(&dist, &identity).unwrap().0, 0.0);
        // kernel λ: responses are the columns of 𝓛
        let resp = impulse_responses(&g, &Polynomial::linear(0.0, 1.0)).unwrap();
        let s = 0.5f64.sqrt();
        let cols = [vec![1.0, -s, 0.0], vec![-s, 1.0, -s], vec![0.0, -s, 1.0]];
        for (r, c) in resp.iter().zip(&cols) {
            assert!(r.iter().zip(c).all(|(a, b)| (a - b).abs() < 1e-15));
        }
        // oracle by hand: end nodes 0.5/1.5 = 1/3 (centered at the end), middle 1/2 (centered at middle)
        let (mean, per) = spatial_spread_tx(&dist, &resp).unwrap();
        assert!((per[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((per[1] - 0.5).abs() < 1e-12);
        assert!((mean - (2.0 / 3.0 + 0.5) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_examples() {
        let g = p3();
        let sd = eig(&g).unwrap();
        for l in 0..3 {
            let u: Vec<f64> = sd.eigenvectors.column(l).iter().copied().collect();
            assert!(spectral_spread(&sd, &u).unwrap().abs() < 1e-12);
        }
        let f: Vec<f64> = (0..3)
            .map(|i| sd.eigenvectors[(i, 0)] + sd.eigenvectors[(i, 2)])
            .collect();
        assert!((spectral_spread(&sd, &f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_examples() {
        let r = vec![1.0, -2.0, 3.0];
        assert_eq!(snr(&r, &r).unwrap(), SNR_CAP_DB);
        let norm = r.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        let t: Vec<f64> = r
            .iter()
            .enumerate()
            .map(|(i, x)| x + if i == 0 { 1e-3 * norm } else { 0.0 })
            .collect();
        assert!((snr(&r, &t).unwrap() - 60.0).abs() < 1e-9);
        assert_eq!(
            snr(&[0.0, 0.0], &[1.0, 0.0]),
            Err(MetricsError::UndefinedSnr)
        );
        assert_eq!(snr(&[1.0], &[1.0, 2.0]), Err(MetricsError::Length(1, 2)));
        assert_eq!(psnr(&[10.0, 20.0], &[10.0, 20.0]).unwrap(), SNR_CAP_DB);
        assert!((psnr(&[0.0], &[255.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn riesz_of_orthonormal_operator() {
        // h0 = h1 = 1 gives T_a = I
        let g = random_bipartite(8, 1);
        let r = riesz_exact(&g, &KernelSet::identity(), Variant::NonzeroDc).unwrap();
        assert!((r.a - 1.0).abs() < 1e-12 && (r.b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn riesz_zero_dc_interval_contains_exact_values() {
        let ks = design(3, 3).unwrap();
        for seed in 0..5 {
            let g = random_bipartite(20, seed);
            let r = riesz_exact(&g, &ks, Variant::ZeroDc).unwrap();
            let (lo, hi) = r.predicted.unwrap();
            assert!(lo <= r.a * (1.0 + 1e-9) && r.b <= hi * (1.0 + 1e-9));
        }
    }

    #[test]
    fn riesz_sandwich_holds_for_random_signals() {
        let ks = design(4, 4).unwrap();
        let g = random_bipartite(25, 3);
        let r = riesz_exact(&g, &ks, Variant::NonzeroDc).unwrap();
        let beta = is_bipartite(&g).unwrap();
        let op = dense_operators(&g, &beta, &ks, Variant::NonzeroDc, false)
            .unwrap()
            .analysis;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mut f: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            f.iter_mut().for_each(|x| *x /= n);
            let y = &op * nalgebra::DVector::from_vec(f);
            assert!(r.a * (1.0 - 1e-6) <= y.norm() && y.norm() <= r.b * (1.0 + 1e-6));
        }
    }

    #[test]
    fn not_bipartite_is_reported() {
        let tri = Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(
            riesz_exact(&tri, &KernelSet::identity(), Variant::ZeroDc),
            Err(MetricsError::NotBipartite)
        );
    }

    #[test]
    fn ideal_kernel_is_spectrally_tighter() {
        let g = random_bipartite(30, 7);
        let sd = eig(&g).unwrap();
        let dist = Distances::new(&g);
        let ideal = spread_report(&dist, &sd, &eigen_responses(&sd, ideal_lowpass)).unwrap();
        let ks = design(6, 6).unwrap();
        let poly = spread_report(&dist, &sd, &impulse_responses(&g, &ks.h0).unwrap()).unwrap();
        assert!(ideal.spectral < poly.spectral);
        assert!(ideal.spatial > poly.spatial);
    }

    #[test]
    fn responses_match_spectral_filter() {
        let g = random_bipartite(10, 2);
        let k = Polynomial::new(vec![0.5, -1.0, 0.25]);
        let r = impulse_responses(&g, &k).unwrap();
        let mut d = vec![0.0; 20];
        d[3] = 1.0;
        assert_eq!(r[3], spectral_filter(&g, &k, &d, Basis::Symmetric).unwrap());
    }

    proptest! {
        #[test]
        fn spatial_spread_is_scale_invariant(seed in 0u64..500, s in -10.0f64..10.0) {
            prop_assume!(s.abs() > 1e-3);
            let g = random_bipartite(6, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fs: Vec<f64> = f.iter().map(|x| x * s).collect();
            let a = spatial_spread(&g, &f).unwrap();
            let b = spatial_spread(&g, &fs).unwrap();
            prop_assert!(a == b || (a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn spectral_spread_in_unit_interval(seed in 0u64..500) {
            let g = random_bipartite(8, seed);
            let sd = eig(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
            let f: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = spectral_spread(&sd, &f).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        }

        #[test]
        fn theta_depends_on_scalar_split(s in 0.2f64..5.0) {
            prop_assume!((s - 1.0).abs() > 1e-2);
            let ks = design(3, 3).unwrap();
            let base = theta_of(&ks.h0, &ks.h1, &theta_grid()).theta;
            let moved = theta_of(&ks.h0.scale(s), &ks.h1.scale(1.0 / s), &theta_grid()).theta;
            prop_assert!(moved <= base + 1e-9);
            prop_assert!((moved - base).abs() > 0.0);
        }
    }
}
