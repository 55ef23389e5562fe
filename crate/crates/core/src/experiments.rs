//! End-to-end pipelines shared by the command line and the acceptance suite:
//! graph and image transforms with nonlinear approximation, the spread sweep
//! over random bipartite ensembles, and the two compression comparisons.

use thiserror::Error;

use crate::bipartite::{
    decompose, edge_aware_mask, harary_decompose, image_graph, BipartiteDecomposition,
    BipartiteError,
};
use crate::bipartite::{Coarsening, ImageGraphSpec, LinkMask};
use crate::filterbank::{
    sparsify, CoefficientTree, FilterbankConfig, FilterbankError, LevelReport, Plan, Variant,
};
use crate::generate::synthetic_planar;
use crate::generate::{
    default_link_probability, disk_scene, piecewise_constant_signal, random_bipartite,
};
use crate::graph::{eig, Graph, GraphError};
use crate::kernels::{design, KernelError, KernelSet};
use crate::metrics::{
    eigen_responses, ideal_highpass, ideal_lowpass, impulse_responses, psnr, snr,
};
use crate::metrics::{spread_report, Distances, MetricsError};
use crate::raster::{Raster, RasterError};
use crate::scalar::Scalar;

/// Node limit for the dense spread sweep.
pub const MAX_SWEEP_NODES: usize = 1000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("critical sampling violated: {got} coefficients for {expected} nodes")]
    CriticalSampling { expected: usize, got: usize },
    #[error("ensemble graphs have {n} nodes, limit is {max}")]
    TooLarge { n: usize, max: usize },
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bipartite(#[from] BipartiteError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Filterbank(#[from] FilterbankError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Everything about a transform run except the graph and the signal.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSettings {
    pub kernels: KernelSet,
    pub variant: Variant,
    pub gain_compensation: bool,
    pub levels: usize,
    /// Fraction of detail coefficients kept for the reconstruction.
    pub keep: f64,
}

impl TransformSettings {
    pub fn config(&self, coarsening: Coarsening) -> Result<FilterbankConfig, FilterbankError> {
        FilterbankConfig::new(
            self.kernels.clone(),
            self.variant,
            self.gain_compensation,
            self.levels,
            coarsening,
        )
    }
}

#[derive(Clone, Debug)]
pub struct TransformOutcome<T> {
    pub plan_hash: String,
    pub reports: Vec<LevelReport>,
    pub tree: CoefficientTree<T>,
    pub kept: CoefficientTree<T>,
    pub reconstruction: Vec<T>,
    pub snr: f64,
}

/// Analysis, sparsification and synthesis of `f`, checking critical sampling.
pub fn run_transform<T: Scalar>(
    g: &Graph<T>,
    decomp: &BipartiteDecomposition<T>,
    cfg: &FilterbankConfig,
    f: &[T],
    keep: f64,
) -> Result<TransformOutcome<T>, ExperimentError> {
    g.check_signal(f)?;
    let plan = Plan::new(g, decomp, cfg)?;
    let tree = plan.analyze(f)?;
    if tree.coefficient_count() != g.n() {
        return Err(ExperimentError::CriticalSampling {
            expected: g.n(),
            got: tree.coefficient_count(),
        });
    }
    let kept = if keep >= 1.0 {
        tree.clone()
    } else {
        sparsify(&tree, keep)
    };
    let reconstruction = plan.synthesize(&kept)?;
    Ok(TransformOutcome {
        plan_hash: plan.hash().to_string(),
        reports: plan.reports().to_vec(),
        snr: snr(&as_f64(f), &as_f64(&reconstruction))?,
        tree,
        kept,
        reconstruction,
    })
}

fn as_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

/// Transform on an arbitrary graph: bipartite graphs use one stage, others a
/// Harary decomposition of a greedy coloring.
pub fn transform_graph<T: Scalar>(
    g: &Graph<T>,
    settings: &TransformSettings,
    f: &[T],
) -> Result<TransformOutcome<T>, ExperimentError> {
    let decomp = decompose(g, Coarsening::TwoHop)?;
    run_transform(
        g,
        &decomp,
        &settings.config(Coarsening::TwoHop)?,
        f,
        settings.keep,
    )
}

/// Edge-aware link removal parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeAware {
    pub threshold: f64,
    pub min_component: usize,
}

impl Default for EdgeAware {
    fn default() -> Self {
        EdgeAware {
            threshold: 30.0,
            min_component: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ImageOutcome {
    pub transform: TransformOutcome<f64>,
    pub reconstruction: Raster,
    pub psnr: f64,
    pub removed_links: usize,
    /// Detail coefficients above 1% of the image's dynamic range.
    pub significant_details: usize,
}

/// Transform on the 8-connected pixel graph, optionally with edge-aware link removal.
pub fn transform_image(
    image: &Raster,
    settings: &TransformSettings,
    edge_aware: Option<EdgeAware>,
) -> Result<ImageOutcome, ExperimentError> {
    let mask = edge_aware.map(|e| edge_aware_mask(image, e.threshold, e.min_component));
    transform_image_masked(image, settings, mask)
}

/// Transform on the 8-connected pixel graph with the `mask` links removed.
pub fn transform_image_masked(
    image: &Raster,
    settings: &TransformSettings,
    mask: Option<LinkMask>,
) -> Result<ImageOutcome, ExperimentError> {
    let (w, h) = (image.width(), image.height());
    let removed_links = mask.as_ref().map_or(0, |m| m.len());
    let (g, decomp) = image_graph::<f64>(&ImageGraphSpec {
        width: w,
        height: h,
        mask,
    })?;
    let cfg = settings.config(Coarsening::Lattice8 {
        width: w,
        height: h,
    })?;
    let transform = run_transform(&g, &decomp, &cfg, image.data(), settings.keep)?;
    let (lo, hi) = image
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |m, &v| {
            (m.0.min(v), m.1.max(v))
        });
    let cutoff = 0.01 * (hi - lo);
    let significant_details = transform
        .tree
        .detail_values()
        .iter()
        .filter(|v| v.abs() > cutoff)
        .count();
    let reconstruction = Raster::new(w, h, transform.reconstruction.clone())?;
    Ok(ImageOutcome {
        psnr: psnr(image.data(), reconstruction.data())?,
        transform,
        reconstruction,
        removed_links,
        significant_details,
    })
}

#[derive(Clone, Debug)]
pub struct DcComparison {
    pub nonzero_dc: TransformOutcome<f64>,
    pub zero_dc: TransformOutcome<f64>,
}

/// Both variants on a synthetic planar graph with a piecewise-constant signal,
/// split by the Harary decomposition of its 3-coloring.
pub fn planar_compression(
    side: usize,
    regions: usize,
    seed: u64,
    settings: &TransformSettings,
) -> Result<DcComparison, ExperimentError> {
    let pg = synthetic_planar::<f64>(side, seed)?;
    let f = piecewise_constant_signal(&pg.positions, regions, seed);
    let decomp = harary_decompose(&pg.graph, &pg.coloring)?;
    let run = |variant| {
        let cfg = TransformSettings {
            variant,
            ..settings.clone()
        }
        .config(Coarsening::TwoHop)?;
        run_transform(&pg.graph, &decomp, &cfg, &f, settings.keep)
    };
    Ok(DcComparison {
        nonzero_dc: run(Variant::NonzeroDc)?,
        zero_dc: run(Variant::ZeroDc)?,
    })
}

#[derive(Clone, Debug)]
pub struct EdgeComparison {
    pub image: Raster,
    pub plain: ImageOutcome,
    pub edge_aware: ImageOutcome,
}

/// Disk scene transformed with and without edge-aware link removal.
pub fn image_compression(
    size: usize,
    disks: usize,
    seed: u64,
    settings: &TransformSettings,
    edge: EdgeAware,
) -> Result<EdgeComparison, ExperimentError> {
    let image = disk_scene(size, size, disks, seed);
    Ok(EdgeComparison {
        plain: transform_image(&image, settings, None)?,
        edge_aware: transform_image(&image, settings, Some(edge))?,
        image,
    })
}

/// Random bipartite ensemble for the spread sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub members: usize,
    pub per_side: usize,
    /// Member `i` uses seed `seed + i`.
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            members: 10,
            per_side: 100,
            seed: 0,
        }
    }
}

/// Ensemble-mean spreads of one channel of one design.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadRow {
    pub design: String,
    /// `low` or `high`.
    pub channel: &'static str,
    pub spatial: f64,
    pub spectral: f64,
}

/// Spatial and spectral spreads of the analysis kernels `h0` and `h1` for each
/// design, averaged over the ensemble. With `include_ideal`, the ideal
/// half-band pair is appended under the design name `ideal`.
pub fn sweep_spreads(
    designs: &[(usize, usize)],
    ensemble: &EnsembleSpec,
    include_ideal: bool,
) -> Result<Vec<SpreadRow>, ExperimentError> {
    if ensemble.members == 0 {
        return Err(ExperimentError::EmptyEnsemble);
    }
    if 2 * ensemble.per_side > MAX_SWEEP_NODES {
        return Err(ExperimentError::TooLarge {
            n: 2 * ensemble.per_side,
            max: MAX_SWEEP_NODES,
        });
    }
    let kernels: Vec<KernelSet> = designs
        .iter()
        .map(|&(k0, k1)| design(k0, k1))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<SpreadRow> = designs
        .iter()
        .map(|(k0, k1)| format!("graphBior({k0},{k1})"))
        .chain(include_ideal.then(|| "ideal".to_string()))
        .flat_map(|d| {
            ["low", "high"].map(|channel| SpreadRow {
                design: d.clone(),
                channel,
                spatial: 0.0,
                spectral: 0.0,
            })
        })
        .collect();
    let p = default_link_probability(2 * ensemble.per_side);
    for m in 0..ensemble.members {
        let g =
            random_bipartite::<f64>(ensemble.per_side, p, ensemble.seed.wrapping_add(m as u64))?
                .graph;
        let dist = Distances::new(&g);
        let sd = eig(&g)?;
        let mut responses = Vec::with_capacity(rows.len());
        for ks in &kernels {
            responses.push(impulse_responses(&g, &ks.h0)?);
            responses.push(impulse_responses(&g, &ks.h1)?);
        }
        if include_ideal {
            responses.push(eigen_responses(&sd, ideal_lowpass));
            responses.push(eigen_responses(&sd, ideal_highpass));
        }
        for (row, r) in rows.iter_mut().zip(&responses) {
            let rep = spread_report(&dist, &sd, r)?;
            row.spatial += rep.spatial;
            row.spectral += rep.spectral;
        }
    }
    let scale = 1.0 / ensemble.members as f64;
    for row in &mut rows {
        row.spatial *= scale;
        row.spectral *= scale;
    }
    Ok(rows)
}

/// `design,channel,spatial,spectral` with a header line.
pub fn spreads_to_csv(rows: &[SpreadRow]) -> String {
    let mut s = String::from("design,channel,spatial,spectral\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.16e},{:.16e}\n",
            r.design, r.channel, r.spatial, r.spectral
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_signal;

    fn settings(k: usize, variant: Variant, levels: usize, keep: f64) -> TransformSettings {
        TransformSettings {
            kernels: design(k, k).unwrap(),
            variant,
            gain_compensation: true,
            levels,
            keep,
        }
    }

    #[test]
    fn full_keep_reconstructs() {
        let rb = random_bipartite::<f64>(40, default_link_probability(80), 1).unwrap();
        let f = random_signal(rb.graph.n(), 1);
        let out = transform_graph(&rb.graph, &settings(6, Variant::ZeroDc, 2, 1.0), &f).unwrap();
        assert!(out.snr >= 100.0, "{}", out.snr);
        assert_eq!(out.tree.coefficient_count(), rb.graph.n());
    }

    #[test]
    fn sparsified_run_is_deterministic() {
        let pg = synthetic_planar::<f64>(8, 2).unwrap();
        let f = piecewise_constant_signal(&pg.positions, 3, 2);
        let s = settings(3, Variant::ZeroDc, 2, 0.1);
        let a = transform_graph(&pg.graph, &s, &f).unwrap();
        let b = transform_graph(&pg.graph, &s, &f).unwrap();
        assert_eq!(a.reconstruction, b.reconstruction);
        assert_eq!(a.plan_hash, b.plan_hash);
        assert!(a.snr < 300.0);
    }

    #[test]
    fn small_image_round_trip() {
        let img = disk_scene(16, 16, 1, 3);
        let out = transform_image(
            &img,
            &settings(3, Variant::ZeroDc, 3, 1.0),
            Some(EdgeAware::default()),
        )
        .unwrap();
        assert!(out.psnr > 100.0);
        assert!(out.removed_links > 0);
        assert_eq!(out.transform.tree.coefficient_count(), 256);
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let ens = EnsembleSpec {
            members: 1,
            per_side: 15,
            seed: 4,
        };
        let a = sweep_spreads(&[(2, 2)], &ens, true).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(
            (a[0].design.as_str(), a[0].channel),
            ("graphBior(2,2)", "low")
        );
        assert_eq!(a[3].design, "ideal");
        assert_eq!(
            spreads_to_csv(&a),
            spreads_to_csv(&sweep_spreads(&[(2, 2)], &ens, true).unwrap())
        );
        assert!(matches!(
            sweep_spreads(
                &[(1, 1)],
                &EnsembleSpec {
                    members: 1,
                    per_side: 600,
                    seed: 0
                },
                false
            ),
            Err(ExperimentError::TooLarge { .. })
        ));
    }
}
