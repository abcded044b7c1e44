use mtlz::graph::*;
use mtlz::nogo::*;
fn main() {
    let g = cube_plus_graph(1);
    println!("edges: {:?}", g.edges());
    let loops = enumerate_four_loops(&g);
    println!("n loops: {}", loops.len());
    let e = g.n_edges();
    for bits in 0..(1u64 << (e - 1)) {
        let bits = bits << 1 | 1;
        let orientation = Orientation::from_bits(&g, bits);
        if loops.iter().any(|l| l.classify(&orientation) == LoopClass::Invalid) { continue; }
        if matches!(analyze_orientation(&g, &orientation), PropagationOutcome::Consistent) {
            println!("consistent bits={bits:013b}");
            for v in 0..8 {
                let class = classify_vertex(&g, &orientation, v).unwrap();
                println!("  vertex {v}: {:?}", class);
            }
            for l in &loops {
                println!("  loop {:?}: {:?}", l.vertices, l.classify(&orientation));
            }
        }
    }
}
