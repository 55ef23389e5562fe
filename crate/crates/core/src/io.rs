//! Text formats for graphs, signals, decompositions, kernels and coefficient
//! dumps, plus 8-bit PGM images. Reals are written with 17 significant digits.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use thiserror::Error;

use crate::bipartite::{BipartiteDecomposition, BipartiteError};
use crate::filterbank::CoefficientTree;
use crate::graph::{BetaFunction, Graph, GraphError, Side};
use crate::kernels::KernelSet;
use crate::poly::PolyError;
use crate::raster::{Raster, RasterError};
use crate::scalar::Scalar;
use crate::Poly64;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bipartite(#[from] BipartiteError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

fn num<F: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<F, IoError> {
    let t = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    t.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{t}`")))
}

/// Content lines with their 1-based line numbers, skipping blanks and `#` comments.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn write_edges<T: Scalar>(
    out: &mut String,
    n: usize,
    edges: impl ExactSizeIterator<Item = (usize, usize, T)>,
) {
    let _ = writeln!(out, "{} {}", n, edges.len());
    for (u, v, w) in edges {
        let _ = writeln!(out, "{u} {v} {:.16e}", w.as_f64());
    }
}

/// `N M` header then one `u v w` line per edge.
pub fn graph_to_string<T: Scalar>(g: &Graph<T>) -> String {
    let mut s = String::new();
    write_edges(&mut s, g.n(), g.edges().iter().map(|e| (e.u, e.v, e.w)));
    s
}

type EdgeList = Vec<(usize, usize, f64)>;

fn parse_edges<'a>(
    it: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(usize, EdgeList), IoError> {
    let (ln, head) = it
        .next()
        .ok_or_else(|| parse_err(0, "missing `N M` header"))?;
    let mut t = head.split_whitespace();
    let n: usize = num(t.next(), ln, "node count")?;
    let m: usize = num(t.next(), ln, "edge count")?;
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, l) = it
            .next()
            .ok_or_else(|| parse_err(ln, format!("expected {m} edge lines")))?;
        let mut t = l.split_whitespace();
        edges.push((
            num(t.next(), ln, "u")?,
            num(t.next(), ln, "v")?,
            num(t.next(), ln, "w")?,
        ));
    }
    Ok((n, edges))
}

pub fn parse_graph<T: Scalar>(text: &str) -> Result<Graph<T>, IoError> {
    let mut it = lines(text);
    let (n, edges) = parse_edges(&mut it)?;
    if let Some((ln, _)) = it.next() {
        return Err(parse_err(ln, "trailing content after edge list"));
    }
    Ok(Graph::new(
        n,
        edges.into_iter().map(|(u, v, w)| (u, v, T::of(w))),
    )?)
}

/// One value per line.
pub fn signal_to_string<T: Scalar>(f: &[T]) -> String {
    f.iter().map(|v| format!("{:.16e}\n", v.as_f64())).collect()
}

pub fn parse_signal<T: Scalar>(text: &str) -> Result<Vec<T>, IoError> {
    lines(text)
        .map(|(ln, l)| num::<f64>(Some(l), ln, "value").map(T::of))
        .collect()
}

/// `stages S`, then per stage a `stage t` line, the side labels and its edge
/// list in graph format, then a `dropped D` section listing `u v` pairs.
pub fn decomposition_to_string<T: Scalar>(g: &Graph<T>, d: &BipartiteDecomposition<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "stages {}", d.stage_count());
    for (t, st) in d.stages().iter().enumerate() {
        let _ = writeln!(s, "stage {t}");
        let _ = writeln!(
            s,
            "{}",
            st.beta
                .sides()
                .iter()
                .map(|x| x.as_char())
                .collect::<String>()
        );
        write_edges(
            &mut s,
            st.graph.n(),
            st.graph.edges().iter().map(|e| (e.u, e.v, e.w)),
        );
    }
    let _ = writeln!(s, "dropped {}", d.dropped().len());
    for &k in d.dropped() {
        let e = g.edges()[k];
        let _ = writeln!(s, "{} {}", e.u, e.v);
    }
    s
}

pub fn parse_decomposition<T: Scalar>(
    g: &Graph<T>,
    text: &str,
) -> Result<BipartiteDecomposition<T>, IoError> {
    let index: HashMap<(usize, usize), usize> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| ((e.u, e.v), k))
        .collect();
    let lookup = |u: usize, v: usize, ln: usize| {
        index
            .get(&(u.min(v), u.max(v)))
            .copied()
            .ok_or_else(|| parse_err(ln, format!("({u}, {v}) is not a graph edge")))
    };
    let mut it = lines(text);
    let (ln, head) = it
        .next()
        .ok_or_else(|| parse_err(0, "empty decomposition"))?;
    let count: usize = num(head.strip_prefix("stages "), ln, "stage count")?;
    let mut stages = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, _) = it
            .next()
            .filter(|(_, l)| l.starts_with("stage "))
            .ok_or_else(|| parse_err(ln, "expected `stage t`"))?;
        let (ln, labels) = it
            .next()
            .ok_or_else(|| parse_err(ln, "missing side labels"))?;
        let sides = labels
            .chars()
            .map(|c| match c {
                'L' => Ok(Side::L),
                'H' => Ok(Side::H),
                other => Err(parse_err(ln, format!("bad side label `{other}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (_, edges) = parse_edges(&mut it)?;
        let ids = edges
            .iter()
            .map(|&(u, v, _)| lookup(u, v, ln))
            .collect::<Result<Vec<_>, _>>()?;
        stages.push((ids, BetaFunction::new(sides)));
    }
    let (ln, head) = it
        .next()
        .ok_or_else(|| parse_err(0, "missing `dropped` section"))?;
    let count: usize = num(head.strip_prefix("dropped "), ln, "dropped count")?;
    let mut dropped = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, l) = it
            .next()
            .ok_or_else(|| parse_err(ln, "missing dropped edge"))?;
        let mut t = l.split_whitespace();
        dropped.push(lookup(
            num(t.next(), ln, "u")?,
            num(t.next(), ln, "v")?,
            ln,
        )?);
    }
    Ok(BipartiteDecomposition::new(g, stages, dropped)?)
}

/// Four lines: `h0`, `h1`, `g0`, `g1`, each ascending coefficients.
pub fn kernels_to_csv(ks: &KernelSet) -> String {
    [&ks.h0, &ks.h1, &ks.g0, &ks.g1]
        .iter()
        .map(|p| p.to_csv() + "\n")
        .collect()
}

pub fn parse_kernels_csv(text: &str) -> Result<[Poly64; 4], IoError> {
    let rows: Vec<(usize, &str)> = lines(text).collect();
    if rows.len() != 4 {
        return Err(parse_err(
            rows.last().map_or(0, |r| r.0),
            format!("expected 4 kernel rows, found {}", rows.len()),
        ));
    }
    let p = |k: usize| Poly64::parse_csv(rows[k].1);
    Ok([p(0)?, p(1)?, p(2)?, p(3)?])
}

/// `level,channel_bits,node,value` rows after `#` header lines.
pub fn coefficients_to_csv<T: Scalar>(tree: &CoefficientTree<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# graph_hash={}", tree.graph_hash());
    let _ = writeln!(s, "# config_hash={}", tree.config_hash());
    let _ = writeln!(s, "# k0={} k1={}", tree.k0, tree.k1);
    let _ = writeln!(s, "# variant={}", tree.variant);
    let _ = writeln!(s, "# gc={}", tree.gain_compensation);
    let _ = writeln!(s, "# levels={}", tree.levels.len());
    s.push_str("level,channel_bits,node,value\n");
    for (l, label, node, v) in tree.entries() {
        let _ = writeln!(s, "{l},{label},{node},{:.16e}", v.as_f64());
    }
    s
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Raster, IoError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(Raster::new(
        w as usize,
        h as usize,
        img.into_raw().into_iter().map(f64::from).collect(),
    )?)
}

/// 8-bit PGM: P2 when `ascii`, else P5.
pub fn encode_pgm(image: &Raster, ascii: bool) -> Result<Vec<u8>, IoError> {
    let encoding = if ascii {
        SampleEncoding::Ascii
    } else {
        SampleEncoding::Binary
    };
    let mut buf = Cursor::new(Vec::new());
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Graymap(encoding))
        .write_image(
            &image.quantized(),
            image.width() as u32,
            image.height() as u32,
            ExtendedColorType::L8,
        )?;
    Ok(buf.into_inner())
}

pub fn read_pgm(path: &Path) -> Result<Raster, IoError> {
    decode_pgm(&std::fs::read(path)?)
}

/// Edge pixels from a PGM edge map, where 0 marks an edge.
pub fn edge_map_from_raster(map: &Raster) -> Vec<bool> {
    map.data().iter().map(|&v| v == 0.0).collect()
}

pub fn edge_map_to_raster(width: usize, height: usize, edges: &[bool]) -> Raster {
    Raster::from_fn(width, height, |r, c| {
        if edges[r * width + c] {
            0.0
        } else {
            255.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::Coarsening;
    use crate::bipartite::{harary_decompose, image_graph, ImageGraphSpec};
    use crate::filterbank::{analyze, FilterbankConfig, Variant};
    use crate::kernels::design;

    fn sample_graph() -> Graph<f64> {
        Graph::new(
            4,
            [(0, 1, 0.1), (1, 2, 1.0 / 3.0), (2, 3, 2.0), (0, 3, 1e-300)],
        )
        .unwrap()
    }

    #[test]
    fn graph_round_trip_is_exact() {
        let g = sample_graph();
        let text = graph_to_string(&g);
        assert!(text.starts_with("4 4\n"));
        assert_eq!(parse_graph::<f64>(&text).unwrap(), g);
    }

    #[test]
    fn graph_parse_errors_carry_lines() {
        assert!(matches!(
            parse_graph::<f64>("2 1\n0 x 1.0\n"),
            Err(IoError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph::<f64>("2 2\n0 1 1.0\n"),
            Err(IoError::Parse { .. })
        ));
        assert!(matches!(
            parse_graph::<f64>("2 1\n0 0 1.0\n"),
            Err(IoError::Graph(GraphError::SelfLoop(0)))
        ));
    }

    #[test]
    fn signal_round_trip_is_exact() {
        let f = vec![0.1, -2.0 / 3.0, 1e-17, 12345.678];
        assert_eq!(parse_signal::<f64>(&signal_to_string(&f)).unwrap(), f);
    }

    #[test]
    fn decomposition_round_trip() {
        let g = Graph::<f64>::unweighted(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let d = harary_decompose(&g, &[0, 1, 2, 0]).unwrap();
        let text = decomposition_to_string(&g, &d);
        assert_eq!(parse_decomposition(&g, &text).unwrap(), d);
        let (gi, di) = image_graph::<f64>(&ImageGraphSpec {
            width: 3,
            height: 3,
            mask: None,
        })
        .unwrap();
        assert_eq!(
            parse_decomposition(&gi, &decomposition_to_string(&gi, &di)).unwrap(),
            di
        );
    }

    #[test]
    fn kernel_csv_round_trip() {
        let ks = design(3, 3).unwrap();
        let [h0, h1, g0, g1] = parse_kernels_csv(&kernels_to_csv(&ks)).unwrap();
        assert_eq!((h0, h1, g0, g1), (ks.h0, ks.h1, ks.g0, ks.g1));
    }

    #[test]
    fn coefficient_dump_layout() {
        let g = Graph::<f64>::unweighted(2, &[(0, 1)]).unwrap();
        let d = BipartiteDecomposition::single(&g, BetaFunction::from_values(&[1, -1])).unwrap();
        let cfg = FilterbankConfig::new(
            design(1, 1).unwrap(),
            Variant::ZeroDc,
            true,
            1,
            Coarsening::TwoHop,
        )
        .unwrap();
        let t = analyze(&g, &d, &cfg, &[1.0, 3.0]).unwrap();
        let csv = coefficients_to_csv(&t);
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "level,channel_bits,node,value");
        assert_eq!(rows.len(), 3);
        assert!(rows[1].starts_with("0,L,0,") && rows[2].starts_with("0,H,1,"));
        let v: f64 = rows[1].rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(v, t.levels[0].channels[0].values[0]);
        assert!(csv.contains("# variant=zerodc") && csv.contains("# gc=true"));
    }

    #[test]
    fn pgm_round_trip_both_encodings() {
        let img = Raster::from_fn(5, 3, |r, c| (r * 40 + c * 7) as f64);
        for ascii in [true, false] {
            let bytes = encode_pgm(&img, ascii).unwrap();
            assert_eq!(&bytes[..2], if ascii { b"P2" } else { b"P5" });
            assert_eq!(decode_pgm(&bytes).unwrap(), img);
        }
    }

    #[test]
    fn edge_map_convention() {
        let edges = vec![true, false, false, true];
        let r = edge_map_to_raster(2, 2, &edges);
        assert_eq!(r.data(), &[0.0, 255.0, 255.0, 0.0]);
        assert_eq!(edge_map_from_raster(&r), edges);
    }
}
