use mtlz::nogo::*;
fn main() {
    let t0 = std::time::Instant::now();
    for (name, v) in screen_catalog() {
        let desc = match &v.result {
            VerdictResult::NoSolution { orientations_checked, .. } =>
                format!("NoSolution (checked {orientations_checked})"),
            VerdictResult::Candidate { consistent_orientations, .. } =>
                format!("Candidate ({consistent_orientations} consistent)"),
            VerdictResult::Unresolved { sign_consistent, orientations_checked } =>
                format!("Unresolved ({sign_consistent}/{orientations_checked} sign-consistent)"),
        };
        println!("{name:20} {desc}   [{:?}]", t0.elapsed());
    }
    // fan l=1 question: can the builder construct it?
    use mtlz::family::*;
    let p = FanParams::type2(4, 1, vec![0.1, 0.2, 0.3], vec![3.0, 1.0, 1.0, 1.0]);
    // bypass the l-range check by constructing manually? just report the builder's response
    println!("fan m=4 l=1 builder: {:?}", build_fan(&p).err().map(|e| e.to_string()));
}
