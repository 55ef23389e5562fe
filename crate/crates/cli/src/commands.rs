use std::path::Path;

use graphbior::bipartite::{decompose, edge_pixels, harary_decompose, mask_from_edge_pixels};
use graphbior::bipartite::{BipartiteDecomposition, Coarsening};
use graphbior::experiments::{
    run_transform, spreads_to_csv, sweep_spreads, transform_image_masked,
};
use graphbior::experiments::{EdgeAware, EnsembleSpec, TransformOutcome, TransformSettings};
use graphbior::filterbank::LevelReport;
use graphbior::generate::{
    default_link_probability, disk_scene, piecewise_constant_signal, random_bipartite,
};
use graphbior::generate::{random_signal, synthetic_planar};
use graphbior::graph::{check_spectral_folding, BetaFunction};
use graphbior::io::{
    coefficients_to_csv, decode_pgm, decomposition_to_string, edge_map_from_raster,
};
use graphbior::io::{
    edge_map_to_raster, encode_pgm, graph_to_string, kernels_to_csv, parse_decomposition,
};
use graphbior::io::{parse_graph, parse_kernels_csv, parse_signal, signal_to_string};
use graphbior::kernels::reference::{compare_with_reference, published_row};
use graphbior::kernels::{
    design, pr_tolerance, spectrum, verify_kernelset, KernelReport, KernelSet,
};
use graphbior::metrics::snr;
use graphbior::Graph64;
use serde_json::{json, Value};

use crate::args::{
    DesignArgs, RandomBipartiteArgs, SpectrumArgs, SweepArgs, TransformArgs, VerifyArgs,
};
use crate::error::{CliError, Failure, StageExt};
use crate::output::{say_raw, OutDir};

/// Designs below this Θ get a warning about dissimilar channel norms.
pub const THETA_WARNING: f64 = 0.7;
/// Round-trip SNR required by `verify` on a graph.
pub const VERIFY_SNR_DB: f64 = 100.0;

fn design_name((k0, k1): (usize, usize)) -> String {
    format!("graphBior({k0},{k1})")
}

fn make_kernels(pair: (usize, usize)) -> Result<KernelSet, CliError> {
    design(pair.0, pair.1).stage("kernel design", &design_name(pair))
}

fn validation(stage: &'static str, input: &str, message: impl std::fmt::Display) -> CliError {
    CliError::new(stage, input, Failure::Validation, message)
}

fn read_text(path: &Path, stage: &'static str) -> Result<String, CliError> {
    std::fs::read_to_string(path).stage(stage, &path.display().to_string())
}

fn to_json(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s.into_bytes()
}

fn pr_json(r: &KernelReport) -> Value {
    json!({
        "distortion": r.distortion,
        "alias": r.alias,
        "halfband": r.halfband,
        "mirror": r.mirror,
        "perfect_reconstruction": r.is_pr(),
    })
}

fn require_pr(report: &KernelReport, input: &str) -> Result<(), CliError> {
    if report.is_pr() {
        Ok(())
    } else {
        Err(CliError::new(
            "perfect-reconstruction check",
            input,
            Failure::Numerical,
            format!(
                "distortion {:.3e}, alias {:.3e}",
                report.distortion, report.alias
            ),
        ))
    }
}

pub fn design_cmd(a: &DesignArgs) -> Result<(), CliError> {
    let name = design_name(a.kernels);
    let ks = make_kernels(a.kernels)?;
    let report = verify_kernelset(&ks);
    say!("{name}: length {}", ks.filter_length());
    say!(
        "  theta {:.6}  riesz [{:.6}, {:.6}]",
        ks.theta,
        ks.riesz_a,
        ks.riesz_b
    );
    say!("  gains low {:.6}  high {:.6}", ks.gain_low, ks.gain_high);
    say!(
        "  PR distortion {:.3e}  alias {:.3e}  half-band {:.3e}  mirror {:.3e}",
        report.distortion,
        report.alias,
        report.halfband,
        report.mirror
    );
    if ks.theta < THETA_WARNING {
        eprintln!(
            "warning: {name} has strongly dissimilar channel norms (theta {:.3} < {THETA_WARNING}, riesz bounds {:.3} and {:.3})",
            ks.theta, ks.riesz_a, ks.riesz_b
        );
    }
    if !report.is_pr() {
        eprintln!(
            "warning: {name} misses the perfect-reconstruction tolerance {:.0e} in f64 (distortion {:.3e}, alias {:.3e}); transforms will refuse it",
            pr_tolerance(ks.filter_length()),
            report.distortion,
            report.alias
        );
    }
    let reference = if a.table2 {
        match published_row(ks.k0, ks.k1) {
            Some(row) => {
                let cmp = compare_with_reference(&ks, row).stage("reference comparison", &name)?;
                say!(
                    "  published row: root distance {:.3e}  product distance {:.3e}  h0 gap {:.3e}  h1 gap {:.3e}  published theta {:.6}",
                    cmp.root_distance, cmp.product_distance, cmp.h0_coeff_distance, cmp.h1_coeff_distance, cmp.published_theta
                );
                json!({
                    "root_distance": cmp.root_distance,
                    "product_distance": cmp.product_distance,
                    "h0_coeff_distance": cmp.h0_coeff_distance,
                    "h1_coeff_distance": cmp.h1_coeff_distance,
                    "published_theta": cmp.published_theta,
                })
            }
            None => {
                say!("  no published reference row for {name}");
                Value::Null
            }
        }
    } else {
        Value::Null
    };
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.write("kernels.csv", kernels_to_csv(&ks).as_bytes())?;
    let meta = json!({
        "design": name,
        "k0": ks.k0,
        "k1": ks.k1,
        "filter_length": ks.filter_length(),
        "rows": ["h0", "h1", "g0", "g1"],
        "theta": ks.theta,
        "riesz_a": ks.riesz_a,
        "riesz_b": ks.riesz_b,
        "gain_low": ks.gain_low,
        "gain_high": ks.gain_high,
        "pr": pr_json(&report),
        "reference": reference,
    });
    out.write("kernels.json", &to_json(&meta))?;
    out.announce();
    Ok(())
}

pub fn random_bipartite_cmd(a: &RandomBipartiteArgs) -> Result<(), CliError> {
    let input = format!(
        "random-bipartite(n_per_side={}, seed={})",
        a.n_per_side, a.common.seed
    );
    if a.n_per_side < 2 {
        return Err(validation(
            "graph generation",
            &input,
            "n-per-side must be at least 2",
        ));
    }
    let p =
        a.p.unwrap_or_else(|| default_link_probability(2 * a.n_per_side));
    if !(p > 0.0 && p <= 1.0) {
        return Err(validation(
            "graph generation",
            &input,
            format!("link probability {p} is outside (0, 1]"),
        ));
    }
    let rb = random_bipartite::<f64>(a.n_per_side, p, a.common.seed)
        .stage("graph generation", &input)?;
    let decomp = BipartiteDecomposition::single(&rb.graph, rb.partition.clone())
        .stage("decomposition", &input)?;
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.write("graph.txt", graph_to_string(&rb.graph).as_bytes())?;
    out.write(
        "decomposition.txt",
        decomposition_to_string(&rb.graph, &decomp).as_bytes(),
    )?;
    let ids: String = rb.original.iter().map(|i| format!("{i}\n")).collect();
    out.write("original_ids.txt", ids.as_bytes())?;
    say!(
        "{input}: {} nodes ({} isolated removed), {} links, p {:.6}, hash {}",
        rb.graph.n(),
        2 * a.n_per_side - rb.graph.n(),
        rb.graph.edge_count(),
        p,
        rb.graph.content_hash()
    );
    out.announce();
    Ok(())
}

fn level_json(r: &LevelReport) -> Value {
    json!({
        "nodes": r.nodes,
        "edges": r.edges,
        "stages": r.stages,
        "dropped_links": r.dropped_links,
        "pass_through": r.pass_through,
        "isolated_coarse": r.isolated_coarse,
        "cells": r.cells.iter().map(|(l, n)| json!({"channel": l, "nodes": n})).collect::<Vec<_>>(),
    })
}

fn transform_json(
    input: &str,
    graph: &Graph64,
    decomp_hash: &str,
    s: &TransformSettings,
    o: &TransformOutcome<f64>,
) -> Value {
    json!({
        "source": input,
        "graph_hash": graph.content_hash(),
        "decomposition_hash": decomp_hash,
        "plan_hash": o.plan_hash,
        "config_hash": o.tree.config_hash(),
        "nodes": graph.n(),
        "edges": graph.edge_count(),
        "coefficients": o.tree.coefficient_count(),
        "design": design_name((s.kernels.k0, s.kernels.k1)),
        "variant": s.variant.to_string(),
        "gain_compensation": s.gain_compensation,
        "levels_requested": s.levels,
        "levels_built": o.tree.levels.len(),
        "keep": s.keep,
        "detail_total": o.tree.detail_values().len(),
        "detail_kept": o.kept.detail_values().iter().filter(|v| **v != 0.0).count(),
        "snr_db": o.snr,
        "levels": o.reports.iter().map(level_json).collect::<Vec<_>>(),
    })
}

fn settings_from(a: &TransformArgs) -> Result<TransformSettings, CliError> {
    let fb = &a.filterbank;
    if !(0.0..=1.0).contains(&fb.keep) {
        return Err(validation(
            "configuration",
            "--keep",
            format!("keep fraction {} is outside [0, 1]", fb.keep),
        ));
    }
    if fb.levels == 0 {
        return Err(validation(
            "configuration",
            "--levels",
            "levels must be at least 1",
        ));
    }
    Ok(TransformSettings {
        kernels: make_kernels(fb.kernels)?,
        variant: fb.variant,
        gain_compensation: fb.gain_compensation(),
        levels: fb.levels,
        keep: fb.keep,
    })
}

fn edge_settings(values: &[f64]) -> Result<EdgeAware, CliError> {
    let d = EdgeAware::default();
    let threshold = values.first().copied().unwrap_or(d.threshold);
    let min_component = match values.get(1) {
        Some(&m) if m >= 0.0 && m.fract() == 0.0 => m as usize,
        Some(&m) => {
            return Err(validation(
                "configuration",
                "--edge-aware",
                format!("min-component {m} is not a count"),
            ))
        }
        None => d.min_component,
    };
    if threshold.is_nan() || threshold < 0.0 {
        return Err(validation(
            "configuration",
            "--edge-aware",
            format!("threshold {threshold} must be non-negative"),
        ));
    }
    Ok(EdgeAware {
        threshold,
        min_component,
    })
}

pub fn transform_cmd(a: &TransformArgs) -> Result<(), CliError> {
    let settings = settings_from(a)?;
    let seed = a.common.seed;
    if a.image.is_some() || a.disk_scene.is_some() {
        return transform_image_cmd(a, &settings);
    }
    if a.edge_aware.is_some() {
        return Err(validation(
            "configuration",
            "--edge-aware",
            "edge-aware links apply to image sources only",
        ));
    }
    let mut out = OutDir::create(&a.common.out_dir)?;
    let (input, graph, signal, decomp) = if let Some(path) = &a.graph {
        let input = path.display().to_string();
        let g: Graph64 =
            parse_graph(&read_text(path, "read graph")?).stage("read graph", &input)?;
        let f = match &a.signal {
            Some(sp) => parse_signal(&read_text(sp, "read signal")?)
                .stage("read signal", &sp.display().to_string())?,
            None => random_signal(g.n(), seed),
        };
        let d = match &a.decomposition {
            Some(dp) => parse_decomposition(&g, &read_text(dp, "read decomposition")?)
                .stage("read decomposition", &dp.display().to_string())?,
            None => decompose(&g, Coarsening::TwoHop).stage("decomposition", &input)?,
        };
        (input, g, f, d)
    } else {
        let (input, g, f, d) = if let Some(n) = a.random_bipartite {
            let input = format!("random-bipartite(n_per_side={n}, seed={seed})");
            if n < 2 {
                return Err(validation(
                    "graph generation",
                    &input,
                    "n-per-side must be at least 2",
                ));
            }
            let g = random_bipartite::<f64>(n, default_link_probability(2 * n), seed)
                .stage("graph generation", &input)?
                .graph;
            let f = random_signal(g.n(), seed);
            (input, g, f, None)
        } else {
            let side = a.planar.expect("clap requires one source");
            let input = format!("planar(side={side}, regions={}, seed={seed})", a.regions);
            if side < 2 {
                return Err(validation(
                    "graph generation",
                    &input,
                    "side must be at least 2",
                ));
            }
            let pg = synthetic_planar::<f64>(side, seed).stage("graph generation", &input)?;
            let f = piecewise_constant_signal(&pg.positions, a.regions, seed);
            let d = harary_decompose(&pg.graph, &pg.coloring).stage("decomposition", &input)?;
            (input, pg.graph, f, Some(d))
        };
        out.write("graph.txt", graph_to_string(&g).as_bytes())?;
        out.write("signal.txt", signal_to_string(&f).as_bytes())?;
        let d = match d {
            Some(d) => d,
            None => decompose(&g, Coarsening::TwoHop).stage("decomposition", &input)?,
        };
        (input, g, f, d)
    };
    let cfg = settings
        .config(Coarsening::TwoHop)
        .stage("configuration", &input)?;
    let outcome =
        run_transform(&graph, &decomp, &cfg, &signal, settings.keep).stage("transform", &input)?;
    out.write(
        "decomposition.txt",
        decomposition_to_string(&graph, &decomp).as_bytes(),
    )?;
    out.write(
        "coefficients.csv",
        coefficients_to_csv(&outcome.tree).as_bytes(),
    )?;
    out.write(
        "reconstruction.txt",
        signal_to_string(&outcome.reconstruction).as_bytes(),
    )?;
    let report = transform_json(&input, &graph, &decomp.content_hash(), &settings, &outcome);
    out.write("report.json", &to_json(&report))?;
    say!(
        "{input}: {} nodes, {} coefficients over {} level(s), keep {}, SNR {:.2} dB",
        graph.n(),
        outcome.tree.coefficient_count(),
        outcome.tree.levels.len(),
        settings.keep,
        outcome.snr
    );
    out.announce();
    Ok(())
}

fn transform_image_cmd(a: &TransformArgs, settings: &TransformSettings) -> Result<(), CliError> {
    let mut out = OutDir::create(&a.common.out_dir)?;
    let (input, image) = match (&a.image, a.disk_scene) {
        (Some(path), _) => {
            let input = path.display().to_string();
            let bytes = std::fs::read(path).stage("read image", &input)?;
            (
                input.clone(),
                decode_pgm(&bytes).stage("read image", &input)?,
            )
        }
        (None, Some(size)) => {
            let input = format!(
                "disk-scene(size={size}, disks={}, seed={})",
                a.disks, a.common.seed
            );
            if size < 4 {
                return Err(validation(
                    "image generation",
                    &input,
                    "size must be at least 4",
                ));
            }
            let img = disk_scene(size, size, a.disks, a.common.seed);
            out.write(
                "input.pgm",
                &encode_pgm(&img, a.ascii).stage("write image", "input.pgm")?,
            )?;
            (input, img)
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let edges = match &a.edge_aware {
        None => None,
        Some(values) => {
            let e = edge_settings(values)?;
            let pixels = match &a.edge_map {
                Some(path) => {
                    let label = path.display().to_string();
                    let map = decode_pgm(&std::fs::read(path).stage("read edge map", &label)?)
                        .stage("read edge map", &label)?;
                    if (map.width(), map.height()) != (image.width(), image.height()) {
                        return Err(validation(
                            "read edge map",
                            &label,
                            format!(
                                "edge map is {}×{}, image is {}×{}",
                                map.width(),
                                map.height(),
                                image.width(),
                                image.height()
                            ),
                        ));
                    }
                    edge_map_from_raster(&map)
                }
                None => edge_pixels(&image, e.threshold, e.min_component),
            };
            Some((e, pixels))
        }
    };
    let mask = edges
        .as_ref()
        .map(|(e, px)| mask_from_edge_pixels(&image, px, e.threshold));
    let outcome = transform_image_masked(&image, settings, mask).stage("transform", &input)?;
    if let Some((_, px)) = &edges {
        let map = edge_map_to_raster(image.width(), image.height(), px);
        out.write(
            "edges.pgm",
            &encode_pgm(&map, a.ascii).stage("write image", "edges.pgm")?,
        )?;
    }
    let t = &outcome.transform;
    out.write("coefficients.csv", coefficients_to_csv(&t.tree).as_bytes())?;
    out.write(
        "reconstruction.pgm",
        &encode_pgm(&outcome.reconstruction, a.ascii).stage("write image", "reconstruction.pgm")?,
    )?;
    let n = image.width() * image.height();
    let mut report = json!({
        "source": input,
        "graph_hash": t.tree.graph_hash(),
        "plan_hash": t.plan_hash,
        "config_hash": t.tree.config_hash(),
        "width": image.width(),
        "height": image.height(),
        "nodes": n,
        "coefficients": t.tree.coefficient_count(),
        "design": design_name((settings.kernels.k0, settings.kernels.k1)),
        "variant": settings.variant.to_string(),
        "gain_compensation": settings.gain_compensation,
        "levels_requested": settings.levels,
        "levels_built": t.tree.levels.len(),
        "keep": settings.keep,
        "snr_db": t.snr,
        "psnr_db": outcome.psnr,
        "removed_links": outcome.removed_links,
        "significant_details": outcome.significant_details,
        "levels": t.reports.iter().map(level_json).collect::<Vec<_>>(),
    });
    if let Some((e, _)) = &edges {
        report["edge_aware"] = json!({"threshold": e.threshold, "min_component": e.min_component});
    }
    out.write("report.json", &to_json(&report))?;
    say!(
        "{input}: {}×{} pixels, {} coefficients over {} level(s), keep {}, PSNR {:.2} dB, {} links removed",
        image.width(),
        image.height(),
        t.tree.coefficient_count(),
        t.tree.levels.len(),
        settings.keep,
        outcome.psnr,
        outcome.removed_links
    );
    out.announce();
    Ok(())
}

pub fn sweep_cmd(a: &SweepArgs) -> Result<(), CliError> {
    let input = format!(
        "ensemble(members={}, n_per_side={}, seed={})",
        a.members, a.n_per_side, a.common.seed
    );
    let ens = EnsembleSpec {
        members: a.members,
        per_side: a.n_per_side,
        seed: a.common.seed,
    };
    let rows = sweep_spreads(&a.designs, &ens, !a.no_ideal).stage("spread sweep", &input)?;
    let csv = spreads_to_csv(&rows);
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.write("spreads.csv", csv.as_bytes())?;
    say_raw(&csv);
    out.announce();
    Ok(())
}

pub fn spectrum_cmd(a: &SpectrumArgs) -> Result<(), CliError> {
    let ks = make_kernels(a.kernels)?;
    let mut csv = String::from("lambda,h0,h1,c,d,pr_check\n");
    for s in spectrum(&ks, a.points) {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.lambda, s.h0, s.h1, s.c, s.d, s.pr_check
        ));
    }
    let mut out = OutDir::create(&a.common.out_dir)?;
    let path = out.write("spectrum.csv", csv.as_bytes())?;
    say!(
        "{}: {} samples written to {}",
        design_name(a.kernels),
        a.points.max(2),
        path.display()
    );
    Ok(())
}

pub fn verify_cmd(a: &VerifyArgs) -> Result<(), CliError> {
    let (name, ks) = match (&a.kernel_file, a.kernels) {
        (Some(path), _) => {
            let label = path.display().to_string();
            let [h0, h1, g0, g1] = parse_kernels_csv(&read_text(path, "read kernels")?)
                .stage("read kernels", &label)?;
            (label, KernelSet::from_kernels(h0, h1, g0, g1, 0, 0))
        }
        (None, pair) => {
            let pair = pair.unwrap_or((6, 6));
            (design_name(pair), make_kernels(pair)?)
        }
    };
    let report = verify_kernelset(&ks);
    say!("{name}");
    say!(
        "  PR distortion {:.3e}  alias {:.3e}  half-band {:.3e}  mirror {:.3e}",
        report.distortion,
        report.alias,
        report.halfband,
        report.mirror
    );
    say!(
        "  theta {:.6}  gains low {:.6}  high {:.6}",
        report.theta,
        report.gain_low,
        report.gain_high
    );
    require_pr(&report, &name)?;
    if let Some(path) = &a.graph {
        let input = path.display().to_string();
        let g: Graph64 =
            parse_graph(&read_text(path, "read graph")?).stage("read graph", &input)?;
        let d = match &a.decomposition {
            Some(dp) => parse_decomposition(&g, &read_text(dp, "read decomposition")?)
                .stage("read decomposition", &dp.display().to_string())?,
            None => decompose(&g, Coarsening::TwoHop).stage("decomposition", &input)?,
        };
        for (t, st) in d.stages().iter().enumerate() {
            // The normalized Laplacian is undefined on nodes without links.
            let linked: Vec<usize> = (0..g.n()).filter(|&i| st.graph.degree(i) > 0.0).collect();
            let sub = st.graph.induced(&linked);
            let beta = BetaFunction::new(linked.iter().map(|&i| st.beta.side(i)).collect());
            let r = check_spectral_folding(&sub, &beta).stage("spectral folding", &input)?;
            say!(
                "  stage {t}: spectral folding residual {r:.3e} on {} linked nodes",
                linked.len()
            );
        }
        let settings = TransformSettings {
            kernels: ks,
            variant: a.variant,
            gain_compensation: true,
            levels: 1,
            keep: 1.0,
        };
        let cfg = settings
            .config(Coarsening::TwoHop)
            .stage("configuration", &name)?;
        let f = random_signal(g.n(), a.seed);
        let o = run_transform(&g, &d, &cfg, &f, 1.0).stage("round trip", &input)?;
        let db = snr(&f, &o.reconstruction).stage("round trip", &input)?;
        say!("  round trip SNR {db:.2} dB ({} variant)", a.variant);
        if db < VERIFY_SNR_DB {
            return Err(CliError::new(
                "round trip",
                input,
                Failure::Numerical,
                format!("SNR {db:.2} dB is below {VERIFY_SNR_DB} dB"),
            ));
        }
    }
    Ok(())
}
