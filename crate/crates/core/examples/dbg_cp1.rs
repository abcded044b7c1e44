use mtlz::graph::*;
use mtlz::nogo::*;
fn main() {
    let g = cube_plus_graph(1);
    let loops = enumerate_four_loops(&g);
    let e = g.n_edges();
    for bits in 0..(1u64 << (e - 1)) {
        let bits = bits << 1 | 1;
        let orientation = Orientation::from_bits(&g, bits);
        if loops.iter().any(|l| l.classify(&orientation) == LoopClass::Invalid) { continue; }
        if !matches!(analyze_orientation(&g, &orientation), PropagationOutcome::Consistent) { continue; }
        println!("== consistent bits={bits:013b}");
        let set = generate_constraints(&g, &orientation);
        println!("binary constraints: {}", set.binary.len());
        for mc in &set.multi {
            println!("  multi pair {:?} terms {:?}", mc.pair, mc.terms);
        }
        for l in &loops {
            let cls = l.classify(&orientation);
            let poles = l.poles(&orientation);
            println!("  loop {:?} {:?} poles {:?}", l.vertices, cls, poles);
        }
        break;
    }
}
