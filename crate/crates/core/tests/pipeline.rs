use graphbior::bipartite::{decompose, harary_decompose, Coarsening};
use graphbior::experiments::{
    planar_compression, run_transform, transform_graph, TransformSettings,
};
use graphbior::filterbank::Variant;
use graphbior::generate::{
    default_link_probability, random_bipartite, random_signal, synthetic_planar,
};
use graphbior::io::{
    decomposition_to_string, graph_to_string, parse_decomposition, parse_graph, parse_signal,
    signal_to_string,
};
use graphbior::kernels::design;
use graphbior::Graph64;

fn settings(k: (usize, usize), variant: Variant, levels: usize, keep: f64) -> TransformSettings {
    TransformSettings {
        kernels: design(k.0, k.1).unwrap(),
        variant,
        gain_compensation: true,
        levels,
        keep,
    }
}

#[test]
fn serialized_inputs_reproduce_the_transform() {
    let g = random_bipartite::<f64>(50, default_link_probability(100), 11)
        .unwrap()
        .graph;
    let f = random_signal(g.n(), 11);
    let d = decompose(&g, Coarsening::TwoHop).unwrap();

    let g2: Graph64 = parse_graph(&graph_to_string(&g)).unwrap();
    let f2 = parse_signal(&signal_to_string(&f)).unwrap();
    let d2 = parse_decomposition(&g2, &decomposition_to_string(&g, &d)).unwrap();

    let s = settings((4, 4), Variant::ZeroDc, 2, 1.0);
    let cfg = s.config(Coarsening::TwoHop).unwrap();
    let a = run_transform(&g, &d, &cfg, &f, 1.0).unwrap();
    let b = run_transform(&g2, &d2, &cfg, &f2, 1.0).unwrap();
    assert_eq!(a.plan_hash, b.plan_hash);
    assert_eq!(a.reconstruction, b.reconstruction);
    assert!(a.snr > 150.0, "{}", a.snr);
}

#[test]
fn planar_graph_splits_into_two_stages() {
    let pg = synthetic_planar::<f64>(20, 3).unwrap();
    assert_eq!(
        harary_decompose(&pg.graph, &pg.coloring)
            .unwrap()
            .stages()
            .len(),
        2
    );
    let f = random_signal(pg.graph.n(), 3);
    let out =
        transform_graph(&pg.graph, &settings((5, 5), Variant::NonzeroDc, 1, 1.0), &f).unwrap();
    assert!(out.snr > 150.0, "{}", out.snr);

    let cmp = planar_compression(20, 5, 3, &settings((5, 5), Variant::ZeroDc, 1, 0.02)).unwrap();
    assert!(
        cmp.zero_dc.snr > cmp.nonzero_dc.snr,
        "{} vs {}",
        cmp.zero_dc.snr,
        cmp.nonzero_dc.snr
    );
}

#[test]
fn single_precision_transform_reconstructs() {
    let g = random_bipartite::<f32>(30, default_link_probability(60), 5)
        .unwrap()
        .graph;
    let f: Vec<f32> = random_signal(g.n(), 5)
        .into_iter()
        .map(|x| x as f32)
        .collect();
    let out = transform_graph(&g, &settings((3, 3), Variant::ZeroDc, 1, 1.0), &f).unwrap();
    assert!(out.snr > 60.0, "{}", out.snr);
}
