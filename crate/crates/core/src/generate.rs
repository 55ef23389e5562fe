//! Seeded synthetic inputs: random bipartite graphs, a planar road-like graph
//! with a piecewise-constant signal, and a disk-scene image.
//!
//! All randomness comes from ChaCha8 seeded with a 64-bit seed; each generator
//! draws from its own stream so adding one never perturbs another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{BetaFunction, Graph, GraphError, Side};
use crate::raster::Raster;
use crate::scalar::Scalar;

/// Stream ids for [`rng`].
pub mod stream {
    pub const BIPARTITE: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const PLANAR: u64 = 3;
    pub const REGIONS: u64 = 4;
    pub const SCENE: u64 = 5;
}

/// ChaCha8 generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Random bipartite graph with its natural partition.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomBipartite<T> {
    pub graph: Graph<T>,
    pub partition: BetaFunction,
    /// Original ids (`0..2·per_side`) of the retained nodes.
    pub original: Vec<usize>,
}

/// Link probability `2 ln N / N` for `N` total nodes.
pub fn default_link_probability(n: usize) -> f64 {
    2.0 * (n as f64).ln() / n as f64
}

/// Nodes `0..per_side` form L and the rest H; each cross pair is linked with
/// probability `p` (unit weight). Isolated nodes are removed afterwards.
pub fn random_bipartite<T: Scalar>(
    per_side: usize,
    p: f64,
    seed: u64,
) -> Result<RandomBipartite<T>, GraphError> {
    let n = 2 * per_side;
    let mut r = rng(seed, stream::BIPARTITE);
    let mut links = Vec::new();
    for i in 0..per_side {
        for j in per_side..n {
            if r.gen::<f64>() < p {
                links.push((i, j));
            }
        }
    }
    let mut used = vec![false; n];
    for &(i, j) in &links {
        used[i] = true;
        used[j] = true;
    }
    let original: Vec<usize> = (0..n).filter(|&i| used[i]).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in original.iter().enumerate() {
        index[i] = k;
    }
    let graph = Graph::new(
        original.len(),
        links.iter().map(|&(i, j)| (index[i], index[j], T::one())),
    )?;
    let partition = BetaFunction::new(
        original
            .iter()
            .map(|&i| if i < per_side { Side::L } else { Side::H })
            .collect(),
    );
    Ok(RandomBipartite {
        graph,
        partition,
        original,
    })
}

/// Uniform values in `[-1, 1)`.
pub fn random_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, stream::SIGNAL);
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Planar graph with node coordinates and a proper 3-coloring.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarGraph<T> {
    pub graph: Graph<T>,
    pub positions: Vec<(f64, f64)>,
    /// `(row + col) mod 3`.
    pub coloring: Vec<usize>,
}

/// Jittered `side × side` grid with horizontal and vertical links and a
/// down-right diagonal in about half of the cells, then random thinning that
/// keeps the graph connected. Planar, and 3-colored by `(row + col) mod 3`.
pub fn synthetic_planar<T: Scalar>(side: usize, seed: u64) -> Result<PlanarGraph<T>, GraphError> {
    let mut r = rng(seed, stream::PLANAR);
    let n = side * side;
    let id = |row: usize, col: usize| row * side + col;
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            (
                (k % side) as f64 + r.gen_range(-0.3..0.3),
                (k / side) as f64 + r.gen_range(-0.3..0.3),
            )
        })
        .collect();
    let mut links = Vec::new();
    for row in 0..side {
        for col in 0..side {
            if col + 1 < side {
                links.push((id(row, col), id(row, col + 1)));
            }
            if row + 1 < side {
                links.push((id(row, col), id(row + 1, col)));
            }
            if row + 1 < side && col + 1 < side && r.gen::<f64>() < 0.5 {
                links.push((id(row, col), id(row + 1, col + 1)));
            }
        }
    }
    let mut keep = vec![true; links.len()];
    for k in 0..links.len() {
        if r.gen::<f64>() < 0.2 {
            keep[k] = false;
            let g: Graph<T> = unit_graph(n, &links, &keep)?;
            if !g.is_connected() {
                keep[k] = true;
            }
        }
    }
    let coloring = (0..n).map(|k| (k / side + k % side) % 3).collect();
    Ok(PlanarGraph {
        graph: unit_graph(n, &links, &keep)?,
        positions,
        coloring,
    })
}

fn unit_graph<T: Scalar>(
    n: usize,
    links: &[(usize, usize)],
    keep: &[bool],
) -> Result<Graph<T>, GraphError> {
    Graph::new(
        n,
        links
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(&(u, v), _)| (u, v, T::one())),
    )
}

/// Constant values on the Voronoi regions of `regions` random sites.
pub fn piecewise_constant_signal(positions: &[(f64, f64)], regions: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, stream::REGIONS);
    let (xmax, ymax) = positions
        .iter()
        .fold((0.0f64, 0.0f64), |m, p| (m.0.max(p.0), m.1.max(p.1)));
    let sites: Vec<((f64, f64), f64)> = (0..regions.max(1))
        .map(|k| {
            (
                (r.gen_range(0.0..=xmax), r.gen_range(0.0..=ymax)),
                1.0 + 2.0 * k as f64,
            )
        })
        .collect();
    positions
        .iter()
        .map(|&(x, y)| {
            sites
                .iter()
                .min_by(|a, b| {
                    let da = (a.0 .0 - x).hypot(a.0 .1 - y);
                    let db = (b.0 .0 - x).hypot(b.0 .1 - y);
                    da.total_cmp(&db)
                })
                .map_or(0.0, |s| s.1)
        })
        .collect()
}

/// Piecewise-constant scene: dark background with bright non-overlapping disks.
pub fn disk_scene(width: usize, height: usize, disks: usize, seed: u64) -> Raster {
    let mut r = rng(seed, stream::SCENE);
    let scale = width.min(height) as f64;
    let mut placed: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < disks && attempts < 10_000 {
        attempts += 1;
        let rad = r.gen_range(0.08..0.16) * scale;
        let cx = r.gen_range(rad + 1.0..width as f64 - rad - 1.0);
        let cy = r.gen_range(rad + 1.0..height as f64 - rad - 1.0);
        if placed
            .iter()
            .all(|&(x, y, q, _)| (x - cx).hypot(y - cy) > q + rad + 2.0)
        {
            let level = r.gen_range(150.0..230.0f64).round();
            placed.push((cx, cy, rad, level));
        }
    }
    Raster::from_fn(width, height, |row, col| {
        let (x, y) = (col as f64 + 0.5, row as f64 + 0.5);
        placed
            .iter()
            .find(|&&(cx, cy, rad, _)| (x - cx).hypot(y - cy) <= rad)
            .map_or(40.0, |d| d.3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::{color_count, greedy_coloring, ColoringOrder};

    #[test]
    fn random_bipartite_is_deterministic_and_bipartite() {
        let a = random_bipartite::<f64>(60, default_link_probability(120), 9).unwrap();
        let b = random_bipartite::<f64>(60, default_link_probability(120), 9).unwrap();
        assert_eq!(a, b);
        assert!(a.partition.separates(&a.graph));
        assert!(a.graph.isolated_nodes().is_empty());
        let c = random_bipartite::<f64>(60, default_link_probability(120), 10).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn small_case_has_at_most_four_links() {
        for seed in 0..20 {
            let g = random_bipartite::<f64>(2, 0.9, seed).unwrap();
            assert!(g.graph.edge_count() <= 4);
        }
    }

    #[test]
    fn density_matches_link_probability() {
        let per = 300;
        let n = 2 * per;
        let p = default_link_probability(n);
        let g = random_bipartite::<f64>(per, p, 3).unwrap();
        let pairs = (per * per) as f64;
        let mean = pairs * p;
        let sd = (pairs * p * (1.0 - p)).sqrt();
        assert!((g.graph.edge_count() as f64 - mean).abs() <= 3.0 * sd);
    }

    #[test]
    fn streams_are_independent() {
        let a: f64 = rng(1, stream::SIGNAL).gen();
        let b: f64 = rng(1, stream::PLANAR).gen();
        assert_ne!(a, b);
        assert_eq!(random_signal(5, 2), random_signal(5, 2));
    }

    #[test]
    fn planar_graph_properties() {
        let pg = synthetic_planar::<f64>(12, 4).unwrap();
        assert_eq!(pg.graph.n(), 144);
        assert!(pg.graph.is_connected());
        assert_eq!(color_count(&pg.coloring), 3);
        assert!(pg
            .graph
            .edges()
            .iter()
            .all(|e| pg.coloring[e.u] != pg.coloring[e.v]));
        let greedy = greedy_coloring(&pg.graph, ColoringOrder::DegreeDesc);
        assert!(color_count(&greedy) >= 3);
        let sig = piecewise_constant_signal(&pg.positions, 5, 4);
        let levels: std::collections::BTreeSet<u64> = sig.iter().map(|v| v.to_bits()).collect();
        assert!(levels.len() >= 2 && levels.len() <= 5);
    }

    #[test]
    fn disk_scene_is_piecewise_constant() {
        let img = disk_scene(64, 64, 4, 1);
        assert_eq!(img.data().len(), 64 * 64);
        let levels: std::collections::BTreeSet<u64> =
            img.data().iter().map(|v| v.to_bits()).collect();
        assert!(levels.len() >= 2 && levels.len() <= 5);
        assert_eq!(img, disk_scene(64, 64, 4, 1));
    }
}
