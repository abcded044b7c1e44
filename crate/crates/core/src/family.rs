//! Construction and validation of integrable multitime Landau-Zener families.
//!
//! Each builder realizes one solved geometry (square, cube, 4d hypercube,
//! fan, gamma-magnet) from its free parameters: base forms, rapidity
//! tangents, sign factors and LZ parameters. `validate_family` re-checks the
//! cycle, commutation and slope-difference conditions on the result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{MtlzError, Result};
use crate::forms::{cycle_residual, vertex_residual, wedge, OneForm, QuadraticForm};
use crate::graph::{
    cycle_basis, edge_key, fan_graph, fan_orientation_type2, hypercube_graph,
    hypercube_orientation, square_graph, ConnectivityGraph, EdgeKey, Orientation,
};

/// A fully specified family: graph, orientation, slope forms per vertex,
/// coupling forms and LZ parameters per edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MtlzFamily {
    pub graph: ConnectivityGraph,
    pub orientation: Orientation,
    /// Number of independent time directions M.
    pub dimension: usize,
    /// Slope form per vertex.
    pub lambda: Vec<QuadraticForm>,
    /// Coupling 1-form per edge (unrescaled).
    pub coupling: BTreeMap<EdgeKey, OneForm>,
    /// Unsigned LZ parameter per edge.
    pub gamma: BTreeMap<EdgeKey, f64>,
}

impl MtlzFamily {
    pub fn n_states(&self) -> usize {
        self.graph.n_vertices()
    }

    /// Signed LZ parameter seen from vertex `a`.
    pub fn signed_gamma(&self, a: usize, b: usize) -> f64 {
        self.orientation.sign(a, b) as f64 * self.gamma[&edge_key(a, b)]
    }

    /// Rescaled form on one edge: coupling / sqrt(gamma).
    pub fn rescaled_form(&self, e: EdgeKey) -> OneForm {
        self.coupling[&e].scaled(1.0 / self.gamma[&e].sqrt())
    }

    pub fn rescaled_forms(&self) -> BTreeMap<EdgeKey, OneForm> {
        self.coupling.keys().map(|&e| (e, self.rescaled_form(e))).collect()
    }

    /// Characteristic magnitude of the coupling data, used for relative
    /// tolerances.
    pub fn scale(&self) -> f64 {
        let c = self
            .coupling
            .values()
            .map(|f| f.norm())
            .fold(0.0f64, f64::max);
        let l = self.lambda.iter().map(|q| q.max_abs()).fold(0.0f64, f64::max);
        c.max(l).max(1e-30)
    }
}

/// Residual summary produced by `validate_family`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Largest cycle-condition residual over a cycle basis (rescaled forms).
    pub cycle_residual_max: f64,
    /// Largest two-path commutation residual over all vertex pairs.
    pub vertex_residual_max: f64,
    /// Largest defect of gamma (Lambda^a - Lambda^b) = A (x) A over edges.
    pub edge_condition_max: f64,
    /// Smallest |sin| of the angle between coupling forms sharing a vertex.
    pub good_family_min_sine: f64,
    /// Relative tolerance used for the pass verdict.
    pub tolerance: f64,
    pub scale: f64,
    pub pass: bool,
    /// Human-readable failures.
    pub failures: Vec<String>,
}

/// Re-check every structural condition on a family. Failures are entries in
/// the report, not errors.
pub fn validate_family(family: &MtlzFamily) -> ValidationReport {
    validate_family_with_tolerance(family, 1e-12)
}

pub fn validate_family_with_tolerance(family: &MtlzFamily, rel_tol: f64) -> ValidationReport {
    let scale = family.scale();
    let tol = rel_tol * (scale * scale).max(1.0);
    let mut failures = Vec::new();

    let rescaled = family.rescaled_forms();

    let mut cycle_max = 0.0f64;
    if family.graph.is_connected() {
        for cycle in cycle_basis(&family.graph, &family.orientation) {
            match cycle_residual(&cycle, &rescaled) {
                Ok(r) => cycle_max = cycle_max.max(r.max_abs()),
                Err(e) => failures.push(format!("cycle residual: {e}")),
            }
        }
    } else {
        failures.push("graph is disconnected".into());
    }
    if cycle_max > tol {
        failures.push(format!("cycle residual {cycle_max:.3e} above tolerance {tol:.3e}"));
    }

    let mut vertex_max = 0.0f64;
    let n = family.graph.n_vertices();
    for a in 0..n {
        for b in (a + 1)..n {
            match vertex_residual(&family.graph, a, b, &rescaled, &family.gamma) {
                Ok(w) => vertex_max = vertex_max.max(w.max_abs()),
                Err(e) => failures.push(format!("vertex residual ({a},{b}): {e}")),
            }
        }
    }
    if vertex_max > tol {
        failures.push(format!("vertex residual {vertex_max:.3e} above tolerance {tol:.3e}"));
    }

    let mut edge_max = 0.0f64;
    for (&(a, b), form) in &family.coupling {
        let gamma_signed = family.signed_gamma(a, b);
        let diff = family.lambda[a].add_scaled(-1.0, &family.lambda[b]);
        let mut defect = 0.0f64;
        for i in 0..family.dimension {
            for j in 0..family.dimension {
                let want = form.0[i] * form.0[j];
                defect = defect.max((gamma_signed * diff.0[i][j] - want).abs());
            }
        }
        edge_max = edge_max.max(defect);
        if form.norm() == 0.0 {
            failures.push(format!("zero coupling form on edge ({a},{b})"));
        }
    }
    if edge_max > tol {
        failures.push(format!("edge condition {edge_max:.3e} above tolerance {tol:.3e}"));
    }

    // Good family: forms on edges sharing a vertex must be pairwise
    // independent; this also excludes triple crossings.
    let mut min_sine = f64::INFINITY;
    for v in 0..n {
        let nb = family.graph.neighbors(v);
        for i in 0..nb.len() {
            for j in (i + 1)..nb.len() {
                let f1 = &family.coupling[&edge_key(v, nb[i])];
                let f2 = &family.coupling[&edge_key(v, nb[j])];
                let denom = f1.norm() * f2.norm();
                if denom == 0.0 {
                    min_sine = 0.0;
                    continue;
                }
                let w = wedge(f1, f2).expect("equal dims");
                let mut norm2 = 0.0;
                for r in 0..family.dimension {
                    for c in (r + 1)..family.dimension {
                        norm2 += w.0[r][c] * w.0[r][c];
                    }
                }
                min_sine = min_sine.min(norm2.sqrt() / denom);
            }
        }
    }
    if !min_sine.is_finite() {
        min_sine = 1.0;
    }
    let good = min_sine > 1e-9;
    if !good {
        failures.push(format!(
            "good-family violation: adjacent coupling forms nearly parallel (sin = {min_sine:.3e})"
        ));
    }

    ValidationReport {
        cycle_residual_max: cycle_max,
        vertex_residual_max: vertex_max,
        edge_condition_max: edge_max,
        good_family_min_sine: min_sine,
        tolerance: tol,
        scale,
        pass: failures.is_empty(),
        failures,
    }
}

/// Solve gamma^{ab} (Lambda^a - Lambda^b) = A^{ab} (x) A^{ab} for the vertex
/// forms by spanning-tree propagation from vertex 0, then verify the
/// remaining edges.
pub fn reconstruct_lambdas(
    graph: &ConnectivityGraph,
    orientation: &Orientation,
    coupling: &BTreeMap<EdgeKey, OneForm>,
    gamma: &BTreeMap<EdgeKey, f64>,
    dimension: usize,
    seed: &QuadraticForm,
) -> Result<Vec<QuadraticForm>> {
    if !graph.is_connected() {
        return Err(MtlzError::Graph("lambda reconstruction needs a connected graph".into()));
    }
    let n = graph.n_vertices();
    let mut lambda: Vec<Option<QuadraticForm>> = vec![None; n];
    lambda[0] = Some(seed.clone());
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let lv = lambda[v].clone().unwrap();
        for &w in graph.neighbors(v) {
            if lambda[w].is_some() {
                continue;
            }
            let e = edge_key(v, w);
            let form = &coupling[&e];
            let g = gamma[&e] * orientation.sign(v, w) as f64;
            // Lambda^w = Lambda^v - (A (x) A) / gamma^{vw}
            lambda[w] = Some(lv.add_scaled(-1.0 / g, &form.outer()));
            queue.push_back(w);
        }
    }
    let lambda: Vec<QuadraticForm> = lambda.into_iter().map(|l| l.unwrap()).collect();
    // Non-tree edge consistency.
    let scale = coupling.values().map(|f| f.norm()).fold(1e-30f64, f64::max);
    let tol = 1e-10 * scale * scale;
    for (&(a, b), form) in coupling {
        let g = gamma[&edge_key(a, b)] * orientation.sign(a, b) as f64;
        let diff = lambda[a].add_scaled(-1.0, &lambda[b]);
        let mut defect = 0.0f64;
        for i in 0..dimension {
            for j in 0..dimension {
                defect = defect.max((g * diff.0[i][j] - form.0[i] * form.0[j]).abs());
            }
        }
        if defect > tol {
            return Err(MtlzError::Integrability(format!(
                "edge ({a},{b}) inconsistent after tree propagation (defect {defect:.3e})"
            )));
        }
    }
    Ok(lambda)
}

// ---------------------------------------------------------------------------
// Square
// ---------------------------------------------------------------------------

/// Free parameters of the 4-state square family. Vertices 0..3 around the
/// cycle with vertex 0 the sink and vertex 2 the source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SquareParams {
    /// Rescaled form on edge (0,1): (a1, a2).
    pub a: [f64; 2],
    /// Rescaled form on edge (0,3): (b1, b2).
    pub b: [f64; 2],
    /// Rapidity of the loop transform.
    pub theta: f64,
    /// Overall sign of the loop transform.
    pub p_sign: i8,
    /// LZ parameter shared by edges (0,1) and (2,3).
    pub gamma01: f64,
    /// LZ parameter shared by edges (0,3) and (1,2).
    pub gamma03: f64,
    /// Gauge seed: slope and energy offsets added to every vertex.
    pub gauge: QuadraticForm,
}

impl SquareParams {
    pub fn new(a: [f64; 2], b: [f64; 2], theta: f64, p_sign: i8, gamma01: f64, gamma03: f64) -> Self {
        Self { a, b, theta, p_sign, gamma01, gamma03, gauge: QuadraticForm::zeros(2) }
    }
}

pub fn build_square(params: &SquareParams) -> Result<MtlzFamily> {
    let det = params.a[0] * params.b[1] - params.a[1] * params.b[0];
    if det.abs() < 1e-12 * (params.a[0].hypot(params.a[1]) * params.b[0].hypot(params.b[1])).max(1e-30) {
        return Err(MtlzError::Constraint("base forms of the square must be independent".into()));
    }
    if params.gamma01 <= 0.0 || params.gamma03 <= 0.0 {
        return Err(MtlzError::Domain("LZ parameters must be positive".into()));
    }
    let graph = square_graph();
    let orientation =
        Orientation::new(&graph, &[(0, 1, 1), (0, 3, 1), (2, 1, -1), (2, 3, -1)]).unwrap();

    let fa = OneForm(params.a.to_vec());
    let fb = OneForm(params.b.to_vec());
    let p = params.p_sign as f64;
    let (c, s) = (params.theta.cosh(), params.theta.sinh());
    // far pair from the near pair
    let f23 = fa.scaled(p * c).add_scaled(p * s, &fb);
    let f12 = fa.scaled(p * s).add_scaled(p * c, &fb);

    let mut rescaled = BTreeMap::new();
    rescaled.insert(edge_key(0, 1), fa);
    rescaled.insert(edge_key(0, 3), fb);
    rescaled.insert(edge_key(2, 3), f23);
    rescaled.insert(edge_key(1, 2), f12);

    let mut gamma = BTreeMap::new();
    gamma.insert(edge_key(0, 1), params.gamma01);
    gamma.insert(edge_key(2, 3), params.gamma01);
    gamma.insert(edge_key(0, 3), params.gamma03);
    gamma.insert(edge_key(1, 2), params.gamma03);

    let coupling: BTreeMap<EdgeKey, OneForm> = rescaled
        .iter()
        .map(|(&e, f)| (e, f.scaled(gamma[&e].sqrt())))
        .collect();

    let lambda = reconstruct_lambdas(&graph, &orientation, &coupling, &gamma, 2, &params.gauge)?;
    Ok(MtlzFamily { graph, orientation, dimension: 2, lambda, coupling, gamma })
}

// ---------------------------------------------------------------------------
// Cube
// ---------------------------------------------------------------------------

/// Loop labels follow the vertex-list substitutions 0132 -> 1, 0154 -> 2,
/// 0264 -> 3, 1375 -> 4, 2376 -> 5, 4576 -> 6.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeParams {
    /// Rescaled forms on edges (0,1), (0,2), (0,4).
    pub base_forms: [OneForm; 3],
    /// Free rapidity tangents of loops 1..3.
    pub taus: [f64; 3],
    /// Sign factors of loops 1..6.
    pub p_signs: [i8; 6],
    /// LZ parameters per direction: gamma^{01}, gamma^{02}, gamma^{04}.
    pub gammas: [f64; 3],
    pub gauge: QuadraticForm,
}

impl CubeParams {
    pub fn new(taus: [f64; 3], gammas: [f64; 3]) -> Self {
        Self {
            base_forms: [
                OneForm(vec![1.0, 0.0, 0.0]),
                OneForm(vec![0.0, 1.0, 0.0]),
                OneForm(vec![0.0, 0.0, 1.0]),
            ],
            taus,
            p_signs: [1; 6],
            gammas,
            gauge: QuadraticForm::zeros(3),
        }
    }
}

/// Tangent addition rule for the far face of a cube: the tangent of the face
/// obtained by shifting `tau_parallel` along a direction whose two adjacent
/// face tangents are `tau_a`, `tau_b`.
pub fn derived_face_tangent(tau_parallel: f64, tau_a: f64, tau_b: f64, p_a: i8, p_b: i8) -> f64 {
    (p_a * p_b) as f64 * (tau_parallel + tau_a * tau_b)
        / (((1.0 - tau_a * tau_a) * (1.0 - tau_b * tau_b)).sqrt())
}

/// Derived tangents (tau4, tau5, tau6) of the three far loops.
pub fn cube_far_tangents(taus: [f64; 3], p: [i8; 3]) -> [f64; 3] {
    let [t1, t2, t3] = taus;
    [
        derived_face_tangent(t3, t1, t2, p[0], p[1]),
        derived_face_tangent(t2, t1, t3, p[0], p[2]),
        derived_face_tangent(t1, t2, t3, p[1], p[2]),
    ]
}

fn cosh_sinh_from_tangent(tau: f64, p: i8) -> (f64, f64) {
    let d = (1.0 - tau * tau).sqrt();
    (p as f64 / d, p as f64 * tau / d)
}

pub fn build_cube(params: &CubeParams) -> Result<MtlzFamily> {
    for (i, t) in params.taus.iter().enumerate() {
        if t.abs() >= 1.0 {
            return Err(MtlzError::Domain(format!(
                "loop {} tangent {t} outside (-1, 1)",
                i + 1
            )));
        }
    }
    for g in params.gammas {
        if g <= 0.0 {
            return Err(MtlzError::Domain("LZ parameters must be positive".into()));
        }
    }
    let p = params.p_signs;
    if p[4] != p[1] * p[2] * p[3] || p[5] != p[0] * p[2] * p[3] {
        return Err(MtlzError::Constraint(
            "sign factors must satisfy p2 p4 = p3 p5 and p1 p4 = p3 p6".into(),
        ));
    }
    let far = cube_far_tangents(params.taus, [p[0], p[1], p[2]]);
    for (k, t) in far.iter().enumerate() {
        if t.abs() >= 1.0 {
            return Err(MtlzError::Domain(format!(
                "derived tangent of loop {} is {t:.6}, outside (-1, 1)",
                k + 4
            )));
        }
    }

    // Base-form independence.
    {
        let m = &params.base_forms;
        let det = m[0].0[0] * (m[1].0[1] * m[2].0[2] - m[1].0[2] * m[2].0[1])
            - m[0].0[1] * (m[1].0[0] * m[2].0[2] - m[1].0[2] * m[2].0[0])
            + m[0].0[2] * (m[1].0[0] * m[2].0[1] - m[1].0[1] * m[2].0[0]);
        if det.abs() < 1e-12 {
            return Err(MtlzError::Constraint("cube base forms must be independent".into()));
        }
    }

    let graph = hypercube_graph(3);
    let orientation = hypercube_orientation(&graph);

    let cs: Vec<(f64, f64)> = (0..6)
        .map(|i| {
            let tau = if i < 3 { params.taus[i] } else { far[i - 3] };
            cosh_sinh_from_tangent(tau, p[i])
        })
        .collect();

    let mut rescaled: BTreeMap<EdgeKey, OneForm> = BTreeMap::new();
    let f01 = params.base_forms[0].clone();
    let f02 = params.base_forms[1].clone();
    let f04 = params.base_forms[2].clone();
    // Loops through vertex 0.
    let (c1, s1) = cs[0];
    rescaled.insert(edge_key(2, 3), f01.scaled(c1).add_scaled(s1, &f02));
    rescaled.insert(edge_key(1, 3), f01.scaled(s1).add_scaled(c1, &f02));
    let (c2, s2) = cs[1];
    rescaled.insert(edge_key(4, 5), f01.scaled(c2).add_scaled(s2, &f04));
    rescaled.insert(edge_key(1, 5), f01.scaled(s2).add_scaled(c2, &f04));
    let (c3, s3) = cs[2];
    rescaled.insert(edge_key(4, 6), f02.scaled(c3).add_scaled(s3, &f04));
    rescaled.insert(edge_key(2, 6), f02.scaled(s3).add_scaled(c3, &f04));
    // Loops through vertex 7; each far form has two routes that must agree.
    let (c4, s4) = cs[3];
    let f13 = rescaled[&edge_key(1, 3)].clone();
    let f15 = rescaled[&edge_key(1, 5)].clone();
    let f57 = f13.scaled(c4).add_scaled(s4, &f15);
    let f37 = f13.scaled(s4).add_scaled(c4, &f15);
    let (c5, s5) = cs[4];
    let f23 = rescaled[&edge_key(2, 3)].clone();
    let f26 = rescaled[&edge_key(2, 6)].clone();
    let f67 = f23.scaled(c5).add_scaled(s5, &f26);
    let f37_alt = f23.scaled(s5).add_scaled(c5, &f26);
    let (c6, s6) = cs[5];
    let f45 = rescaled[&edge_key(4, 5)].clone();
    let f46 = rescaled[&edge_key(4, 6)].clone();
    let f67_alt = f45.scaled(c6).add_scaled(s6, &f46);
    let f57_alt = f45.scaled(s6).add_scaled(c6, &f46);

    let scale = f01.norm().max(f02.norm()).max(f04.norm());
    let tol = 1e-10 * scale;
    for (a, b, what) in [
        (&f37, &f37_alt, "(3,7)"),
        (&f67, &f67_alt, "(6,7)"),
        (&f57, &f57_alt, "(5,7)"),
    ] {
        let d = a.add_scaled(-1.0, b).norm();
        if d > tol {
            return Err(MtlzError::Integrability(format!(
                "cube routes disagree on edge {what}: {d:.3e} (internal formula error)"
            )));
        }
    }
    rescaled.insert(edge_key(5, 7), f57);
    rescaled.insert(edge_key(3, 7), f37);
    rescaled.insert(edge_key(6, 7), f67);
    rescaled.insert(edge_key(0, 1), f01);
    rescaled.insert(edge_key(0, 2), f02);
    rescaled.insert(edge_key(0, 4), f04);

    // Parallel edges share |gamma|.
    let mut gamma = BTreeMap::new();
    for &e in graph.edges() {
        let dir = match e.0 ^ e.1 {
            1 => 0,
            2 => 1,
            4 => 2,
            _ => unreachable!(),
        };
        gamma.insert(e, params.gammas[dir]);
    }
    let coupling: BTreeMap<EdgeKey, OneForm> =
        rescaled.iter().map(|(&e, f)| (e, f.scaled(gamma[&e].sqrt()))).collect();

    let lambda = reconstruct_lambdas(&graph, &orientation, &coupling, &gamma, 3, &params.gauge)?;
    Ok(MtlzFamily { graph, orientation, dimension: 3, lambda, coupling, gamma })
}

// ---------------------------------------------------------------------------
// 4d hypercube
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypercube4Params {
    /// Seed tangents for the six faces at vertex 0, keyed by direction pair
    /// in the order (1,2), (1,3), (1,4), (2,3), (2,4), (3,4).
    pub taus: [f64; 6],
    /// LZ parameters per direction.
    pub gammas: [f64; 4],
    pub gauge: QuadraticForm,
}

impl Hypercube4Params {
    pub fn new(taus: [f64; 6], gammas: [f64; 4]) -> Self {
        Self { taus, gammas, gauge: QuadraticForm::zeros(4) }
    }
}

fn dir_pair_index(i: usize, j: usize) -> usize {
    // (0,1) (0,2) (0,3) (1,2) (1,3) (2,3) zero-based directions
    match (i.min(j), i.max(j)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("bad direction pair"),
    }
}

/// q_{ijk}: positivity gates the existence of the inner-cube data.
pub fn hypercube_q(tau_ij: f64, tau_ik: f64, tau_jk: f64) -> f64 {
    1.0 - tau_ij * tau_ij - tau_ik * tau_ik - tau_jk * tau_jk - 2.0 * tau_ij * tau_ik * tau_jk
}

pub fn build_hypercube4(params: &Hypercube4Params) -> Result<MtlzFamily> {
    for t in params.taus {
        if t.abs() >= 1.0 {
            return Err(MtlzError::Domain(format!("seed tangent {t} outside (-1, 1)")));
        }
    }
    for g in params.gammas {
        if g <= 0.0 {
            return Err(MtlzError::Domain("LZ parameters must be positive".into()));
        }
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                let q = hypercube_q(
                    params.taus[dir_pair_index(i, j)],
                    params.taus[dir_pair_index(i, k)],
                    params.taus[dir_pair_index(j, k)],
                );
                if q <= 0.0 {
                    return Err(MtlzError::Domain(format!(
                        "q_{{{},{},{}}}^2 = {q:.6} is not positive",
                        i + 1,
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
    }

    let graph = hypercube_graph(4);
    let orientation = hypercube_orientation(&graph);

    // Face tangents keyed by (direction pair, base vertex with both bits
    // clear). Propagate in order of base popcount; every face reachable
    // through several cubes must agree across all routes.
    let mut face_tau: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for i in 0..4 {
        for j in (i + 1)..4 {
            face_tau.insert((i, j, 0), params.taus[dir_pair_index(i, j)]);
        }
    }
    let bases: Vec<usize> = {
        let mut v: Vec<usize> = (0..16).collect();
        v.sort_by_key(|b: &usize| b.count_ones());
        v
    };
    for &base in &bases {
        if base == 0 {
            continue;
        }
        for i in 0..4usize {
            for j in (i + 1)..4 {
                if base & (1 << i) != 0 || base & (1 << j) != 0 {
                    continue;
                }
                let mut derived: Option<f64> = None;
                for d in 0..4usize {
                    if d == i || d == j || base & (1 << d) == 0 {
                        continue;
                    }
                    let b0 = base & !(1 << d);
                    let t_par = face_tau[&(i, j, b0)];
                    let t_a = face_tau[&(i.min(d), i.max(d), b0)];
                    let t_b = face_tau[&(j.min(d), j.max(d), b0)];
                    let t_new = derived_face_tangent(t_par, t_a, t_b, 1, 1);
                    if t_new.abs() >= 1.0 {
                        return Err(MtlzError::Domain(format!(
                            "derived face tangent {t_new:.6} outside (-1, 1) at base {base:04b}"
                        )));
                    }
                    match derived {
                        None => derived = Some(t_new),
                        Some(prev) => {
                            if (prev - t_new).abs() > 1e-12 {
                                return Err(MtlzError::Integrability(format!(
                                    "face ({},{}) at base {base:04b}: cube routes disagree \
                                     ({prev:.15} vs {t_new:.15})",
                                    i + 1,
                                    j + 1
                                )));
                            }
                        }
                    }
                }
                face_tau.insert((i, j, base), derived.expect("some route"));
            }
        }
    }

    // Edge forms: Abar at (vertex v, direction d) with bit d of v clear.
    let unit = |d: usize| {
        let mut f = vec![0.0; 4];
        f[d] = 1.0;
        OneForm(f)
    };
    let mut form: BTreeMap<(usize, usize), OneForm> = BTreeMap::new();
    for d in 0..4 {
        form.insert((0, d), unit(d));
    }
    let mut vertices: Vec<usize> = (0..16).collect();
    vertices.sort_by_key(|v: &usize| v.count_ones());
    for &v in &vertices {
        if v == 0 {
            continue;
        }
        for d in 0..4usize {
            if v & (1 << d) != 0 {
                continue;
            }
            let mut derived: Option<OneForm> = None;
            for i in 0..4usize {
                if i == d || v & (1 << i) == 0 {
                    continue;
                }
                let v0 = v & !(1 << i);
                let tau = face_tau[&(d.min(i), d.max(i), v0)];
                let (c, s) = cosh_sinh_from_tangent(tau, 1);
                let fd = &form[&(v0, d)];
                let fi = &form[&(v0, i)];
                let f_new = fd.scaled(c).add_scaled(s, fi);
                match &derived {
                    None => derived = Some(f_new),
                    Some(prev) => {
                        let defect = prev.add_scaled(-1.0, &f_new).norm();
                        if defect > 1e-10 * prev.norm().max(1.0) {
                            return Err(MtlzError::Integrability(format!(
                                "edge form at vertex {v:04b} direction {} route mismatch {defect:.3e}",
                                d + 1
                            )));
                        }
                    }
                }
            }
            form.insert((v, d), derived.expect("some route"));
        }
    }

    let mut rescaled: BTreeMap<EdgeKey, OneForm> = BTreeMap::new();
    let mut gamma: BTreeMap<EdgeKey, f64> = BTreeMap::new();
    for (&(v, d), f) in &form {
        let e = edge_key(v, v | (1 << d));
        rescaled.insert(e, f.clone());
        gamma.insert(e, params.gammas[d]);
    }
    let coupling: BTreeMap<EdgeKey, OneForm> =
        rescaled.iter().map(|(&e, f)| (e, f.scaled(gamma[&e].sqrt()))).collect();
    let lambda = reconstruct_lambdas(&graph, &orientation, &coupling, &gamma, 4, &params.gauge)?;
    Ok(MtlzFamily { graph, orientation, dimension: 4, lambda, coupling, gamma })
}

/// Closed-form tangent of the face joining 0011 and 1111 in terms of the six
/// seed tangents; used to cross-check the recursive propagation.
pub fn hypercube4_far_face_tangent(taus: [f64; 6]) -> f64 {
    let (t12, t13, t14, t23, t24, t34) = (taus[0], taus[1], taus[2], taus[3], taus[4], taus[5]);
    let q134 = hypercube_q(t13, t14, t34).sqrt();
    let q234 = hypercube_q(t23, t24, t34).sqrt();
    (t12 + t13 * t23 + t14 * t24 + t34 * (t14 * t23 + t13 * t24 - t12 * t34)) / (q134 * q234)
}

// ---------------------------------------------------------------------------
// Fan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FanOrientationKind {
    /// Hubs are source and sink; no nontrivial solutions for m >= 3.
    TypeI,
    /// a-vertices split into sinks (first l) and sources (rest).
    TypeII,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FanParams {
    /// Number of a-vertices.
    pub m: usize,
    /// Number of sink a-vertices (1 < l < m, or l = 1 when m = 2).
    pub l: usize,
    pub orientation_kind: FanOrientationKind,
    /// Rescaled form pair on the edges of a_1.
    pub base_alpha: [f64; 2],
    pub base_beta: [f64; 2],
    /// Rapidity increments theta_{j+1,j}, j = 1..m-1.
    pub theta_steps: Vec<f64>,
    /// Sign increments p_{j+1,j}.
    pub p_steps: Vec<i8>,
    /// Per-a-vertex LZ parameters gamma^j shared by both edges of a_j.
    pub gammas: Vec<f64>,
    pub gauge: QuadraticForm,
}

impl FanParams {
    pub fn type2(m: usize, l: usize, theta_steps: Vec<f64>, gammas: Vec<f64>) -> Self {
        Self {
            m,
            l,
            orientation_kind: FanOrientationKind::TypeII,
            base_alpha: [1.0, 0.0],
            base_beta: [0.0, 1.0],
            theta_steps,
            p_steps: vec![1; m.saturating_sub(1)],
            gammas,
            gauge: QuadraticForm::zeros(2),
        }
    }
}

pub fn build_fan(params: &FanParams) -> Result<MtlzFamily> {
    let m = params.m;
    if m < 2 {
        return Err(MtlzError::Domain("fan needs at least two a-vertices".into()));
    }
    if params.orientation_kind == FanOrientationKind::TypeI {
        return Err(MtlzError::Constraint(
            "type-I fan orientation admits no nontrivial family: opposite-sign wedge relations \
             of three a-vertex pairs are mutually contradictory for m >= 3; for m = 2 use the \
             type-II split l = 1, which is the square family"
                .into(),
        ));
    }
    let l = params.l;
    let l_ok = (l > 1 && l < m) || (m == 2 && l == 1);
    if !l_ok {
        return Err(MtlzError::Domain(format!(
            "sink count l = {l} must satisfy 1 < l < m (m = {m}); only m = 2 admits l = 1"
        )));
    }
    if params.gammas.len() != m || params.theta_steps.len() != m - 1 || params.p_steps.len() != m - 1
    {
        return Err(MtlzError::Domain("fan parameter lists have wrong lengths".into()));
    }
    if params.gammas.iter().any(|&g| g <= 0.0) {
        return Err(MtlzError::Domain("LZ parameters must be positive".into()));
    }
    let lhs: f64 = params.gammas[..l].iter().sum();
    let rhs: f64 = params.gammas[l..].iter().sum();
    let scale: f64 = params.gammas.iter().sum();
    if (lhs - rhs).abs() > 1e-12 * scale {
        return Err(MtlzError::Constraint(format!(
            "balance condition violated: sink gammas sum to {lhs}, source gammas to {rhs}"
        )));
    }

    let graph = fan_graph(m);
    let orientation = fan_orientation_type2(&graph, m, l);
    let b1 = m;
    let b2 = m + 1;

    let f_alpha1 = OneForm(params.base_alpha.to_vec());
    let f_beta1 = OneForm(params.base_beta.to_vec());
    let det = f_alpha1.0[0] * f_beta1.0[1] - f_alpha1.0[1] * f_beta1.0[0];
    if det.abs() < 1e-12 {
        return Err(MtlzError::Constraint("fan base forms must be independent".into()));
    }

    let mut rescaled = BTreeMap::new();
    let mut gamma = BTreeMap::new();
    let mut theta = 0.0f64;
    let mut p = 1i8;
    for j in 0..m {
        if j > 0 {
            theta += params.theta_steps[j - 1];
            p *= params.p_steps[j - 1];
        }
        let (c, s) = (theta.cosh(), theta.sinh());
        let pf = p as f64;
        let (fa, fb) = if j < l {
            (
                f_alpha1.scaled(pf * c).add_scaled(pf * s, &f_beta1),
                f_alpha1.scaled(pf * s).add_scaled(pf * c, &f_beta1),
            )
        } else {
            // permuted transform for the source region
            (
                f_alpha1.scaled(pf * s).add_scaled(pf * c, &f_beta1),
                f_alpha1.scaled(pf * c).add_scaled(pf * s, &f_beta1),
            )
        };
        rescaled.insert(edge_key(j, b1), fa);
        rescaled.insert(edge_key(j, b2), fb);
        gamma.insert(edge_key(j, b1), params.gammas[j]);
        gamma.insert(edge_key(j, b2), params.gammas[j]);
    }

    let coupling: BTreeMap<EdgeKey, OneForm> =
        rescaled.iter().map(|(&e, f)| (e, f.scaled(gamma[&e].sqrt()))).collect();
    let lambda = reconstruct_lambdas(&graph, &orientation, &coupling, &gamma, 2, &params.gauge)?;
    Ok(MtlzFamily { graph, orientation, dimension: 2, lambda, coupling, gamma })
}

// ---------------------------------------------------------------------------
// Gamma magnet
// ---------------------------------------------------------------------------

/// N-spin gamma-magnet on the N-dimensional hypercube. Vertex bit j set
/// means spin j points down; vertex 0 is the all-up sink.
pub fn build_gamma_magnet(betas: &[f64], gs: &[f64]) -> Result<MtlzFamily> {
    let n_spins = betas.len();
    if n_spins == 0 || gs.len() != n_spins {
        return Err(MtlzError::Domain("need one beta and one g per spin".into()));
    }
    if betas.iter().any(|&b| b == 0.0) {
        return Err(MtlzError::Domain("slopes beta_j must be nonzero".into()));
    }
    if n_spins > 12 {
        return Err(MtlzError::Unsupported("gamma magnet limited to 12 spins".into()));
    }
    let n = 1usize << n_spins;
    let graph = hypercube_graph(n_spins as u32);

    let spin = |v: usize, j: usize| -> f64 {
        if v & (1 << j) == 0 {
            1.0
        } else {
            -1.0
        }
    };

    let mut lambda = Vec::with_capacity(n);
    for v in 0..n {
        let mut q = QuadraticForm::zeros(2);
        let parity: f64 = (0..n_spins).map(|j| spin(v, j)).product();
        q.0[0][0] = (0..n_spins).map(|j| betas[j] * spin(v, j)).sum();
        q.0[0][1] = parity;
        q.0[1][0] = parity;
        q.0[1][1] = (0..n_spins).map(|j| spin(v, j) / betas[j]).sum();
        lambda.push(q);
    }

    let mut coupling = BTreeMap::new();
    let mut gamma = BTreeMap::new();
    let mut signs = Vec::new();
    for v in 0..n {
        for j in 0..n_spins {
            let w = v | (1 << j);
            if w == v {
                continue;
            }
            // v has spin j up.
            let e = edge_key(v, w);
            let low: f64 = (0..j).map(|k| spin(v, k)).product();
            let high: f64 = ((j + 1)..n_spins).map(|k| spin(v, k)).product();
            coupling.insert(e, OneForm(vec![gs[j] * low, gs[j] / betas[j] * high]));
            gamma.insert(e, gs[j] * gs[j] / (2.0 * betas[j].abs()));
            // gamma^{vw} = g^2/(2 beta_j) * s_j(v) with s_j(v) = +1
            let s: i8 = if betas[j] > 0.0 { 1 } else { -1 };
            signs.push((v, w, s));
        }
    }
    let orientation = Orientation::new(&graph, &signs).unwrap();
    Ok(MtlzFamily { graph, orientation, dimension: 2, lambda, coupling, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_couplings_match_parametrization() {
        let p = SquareParams::new([1.3, -0.2], [0.4, 0.9], 0.37, 1, 0.8, 1.1);
        let fam = build_square(&p).unwrap();
        let (c, s) = (0.37f64.cosh(), 0.37f64.sinh());
        let g12 = fam.coupling[&(0, 1)].0[0];
        let g14 = fam.coupling[&(0, 3)].0[0];
        let g23 = fam.coupling[&(1, 2)].0[0];
        let g34 = fam.coupling[&(2, 3)].0[0];
        assert_abs_diff_eq!(g12, 0.8f64.sqrt() * 1.3, epsilon = 1e-14);
        assert_abs_diff_eq!(g14, 1.1f64.sqrt() * 0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(g23, 1.1f64.sqrt() * (s * 1.3 + c * 0.4), epsilon = 1e-14);
        assert_abs_diff_eq!(g34, 0.8f64.sqrt() * (c * 1.3 + s * 0.4), epsilon = 1e-14);
        let rep = validate_family(&fam);
        assert!(rep.pass, "{:?}", rep.failures);
    }

    #[test]
    fn square_slope_differences() {
        let p = SquareParams::new([1.3, -0.2], [0.4, 0.9], 0.37, 1, 0.8, 1.1);
        let fam = build_square(&p).unwrap();
        // beta differences follow the squared rescaled components
        let beta = |v: usize| fam.lambda[v].0[0][0];
        let e = |v: usize| fam.lambda[v].0[0][1];
        assert_abs_diff_eq!(beta(0) - beta(1), 1.3 * 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(beta(0) - beta(3), 0.4 * 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(e(0) - e(1), 1.3 * -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(e(0) - e(3), 0.4 * 0.9, epsilon = 1e-12);
    }

    #[test]
    fn square_gauge_shifts_all_vertices() {
        let mut p = SquareParams::new([1.0, 0.3], [0.2, 1.0], 0.2, 1, 1.0, 1.0);
        let base = build_square(&p).unwrap();
        let mut gauge = QuadraticForm::zeros(2);
        gauge.0[0][0] = 0.7;
        gauge.0[0][1] = -0.4;
        gauge.0[1][0] = -0.4;
        p.gauge = gauge;
        let shifted = build_square(&p).unwrap();
        for v in 0..4 {
            assert_abs_diff_eq!(
                shifted.lambda[v].0[0][0] - base.lambda[v].0[0][0],
                0.7,
                epsilon = 1e-13
            );
            assert_abs_diff_eq!(
                shifted.lambda[v].0[0][1] - base.lambda[v].0[0][1],
                -0.4,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn cube_far_tangent_values() {
        let far = cube_far_tangents([0.5, 0.3, 0.4], [1, 1, 1]);
        // (0.4 + 0.15) / sqrt(0.75 * 0.91)
        assert_abs_diff_eq!(far[0], 0.665_750_285_935_682_8, epsilon = 1e-12);
        assert_abs_diff_eq!(
            far[0],
            (0.4 + 0.5 * 0.3) / (0.75f64 * 0.91).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn cube_rejects_out_of_range_tangent() {
        // (0.9 + 0.81) / (1 - 0.81) = 9.0
        let far = cube_far_tangents([0.9, 0.9, 0.9], [1, 1, 1]);
        assert_abs_diff_eq!(far[0], 9.0, epsilon = 1e-12);
        let err = build_cube(&CubeParams::new([0.9, 0.9, 0.9], [0.1, 0.1, 0.1])).unwrap_err();
        assert!(err.to_string().contains("outside (-1, 1)"), "{err}");
    }

    #[test]
    fn cube_family_validates() {
        let fam = build_cube(&CubeParams::new([0.5, 0.3, 0.4], [0.12, 0.2, 0.3])).unwrap();
        let rep = validate_family(&fam);
        assert!(rep.pass, "{:?}", rep.failures);
        assert!(rep.cycle_residual_max < 1e-12);
        assert!(rep.vertex_residual_max < 1e-12);
    }

    #[test]
    fn cube_broken_gamma_fails_vertex_residual() {
        // Double gamma^{01} only, keeping the rescaled form: the coupling
        // scales by sqrt(2), the parallel-edge relation breaks, and the
        // two-path condition picks it up.
        let mut fam = build_cube(&CubeParams::new([0.5, 0.3, 0.4], [0.12, 0.2, 0.3])).unwrap();
        let e = edge_key(0, 1);
        let g = fam.gamma[&e];
        fam.gamma.insert(e, 2.0 * g);
        let scaled = fam.coupling[&e].scaled(2.0f64.sqrt());
        fam.coupling.insert(e, scaled);
        let rep = validate_family(&fam);
        assert!(!rep.pass);
        assert!(rep.vertex_residual_max > 1e-6, "vertex residual {}", rep.vertex_residual_max);
    }

    #[test]
    fn fan_balance_checked() {
        let err = build_fan(&FanParams::type2(4, 2, vec![0.1, 0.2, 0.3], vec![1.0, 1.0, 1.0, 2.0]))
            .unwrap_err();
        assert!(err.to_string().contains("balance"), "{err}");
        let fam = build_fan(&FanParams::type2(4, 2, vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 1.5, 1.5]))
            .unwrap();
        let rep = validate_family(&fam);
        assert!(rep.pass, "{:?}", rep.failures);
    }

    #[test]
    fn fan_m2_is_a_valid_square() {
        let fam = build_fan(&FanParams::type2(2, 1, vec![0.4], vec![0.7, 0.7])).unwrap();
        assert_eq!(fam.n_states(), 4);
        let rep = validate_family(&fam);
        assert!(rep.pass, "{:?}", rep.failures);
    }

    #[test]
    fn fan_rejects_degenerate_splits() {
        assert!(build_fan(&FanParams::type2(4, 1, vec![0.1, 0.2, 0.3], vec![3.0, 1.0, 1.0, 1.0]))
            .is_err());
        assert!(build_fan(&FanParams::type2(4, 4, vec![0.1, 0.2, 0.3], vec![1.0; 4])).is_err());
        let mut p = FanParams::type2(3, 2, vec![0.1, 0.2], vec![1.0, 1.0, 2.0]);
        p.orientation_kind = FanOrientationKind::TypeI;
        assert!(build_fan(&p).is_err());
    }

    #[test]
    fn gamma_magnet_validates_and_lives_on_hypercube() {
        for n in [2usize, 3, 4] {
            let betas: Vec<f64> = (0..n).map(|j| 0.5 + 0.9 * j as f64).collect();
            let gs: Vec<f64> = (0..n).map(|j| 0.1 + 0.02 * j as f64).collect();
            let fam = build_gamma_magnet(&betas, &gs).unwrap();
            assert_eq!(fam.n_states(), 1 << n);
            assert_eq!(fam.graph.n_edges(), n * (1 << (n - 1)));
            let rep = validate_family(&fam);
            assert!(rep.pass, "n={n}: {:?}", rep.failures);
        }
    }

    #[test]
    fn hypercube4_consistency_and_limits() {
        // all zero: direct product of four spins
        let fam = build_hypercube4(&Hypercube4Params::new([0.0; 6], [0.1, 0.2, 0.3, 0.4])).unwrap();
        assert_eq!(fam.n_states(), 16);
        let rep = validate_family(&fam);
        assert!(rep.pass, "{:?}", rep.failures);

        // single nonzero seed: far face tangent equals the seed
        let mut taus = [0.0; 6];
        taus[0] = 0.2;
        assert_abs_diff_eq!(hypercube4_far_face_tangent(taus), 0.2, epsilon = 1e-15);

        // generic seeds: full validation plus closed-form cross-check
        let taus = [0.3, 0.2, 0.1, 0.25, 0.15, 0.05];
        let fam = build_hypercube4(&Hypercube4Params::new(taus, [0.11, 0.17, 0.23, 0.29])).unwrap();
        let rep = validate_family(&fam);
        assert!(rep.pass, "{:?}", rep.failures);
    }

    #[test]
    fn single_edge_family_validates_trivially() {
        let graph = ConnectivityGraph::new(2, &[(0, 1)]).unwrap();
        let orientation = Orientation::new(&graph, &[(0, 1, 1)]).unwrap();
        let mut coupling = BTreeMap::new();
        coupling.insert((0, 1), OneForm(vec![0.5, 0.1]));
        let mut gamma = BTreeMap::new();
        gamma.insert((0, 1), 0.3);
        let lambda =
            reconstruct_lambdas(&graph, &orientation, &coupling, &gamma, 2, &QuadraticForm::zeros(2))
                .unwrap();
        let fam = MtlzFamily { graph, orientation, dimension: 2, lambda, coupling, gamma };
        let rep = validate_family(&fam);
        assert!(rep.pass, "{:?}", rep.failures);
    }
}
