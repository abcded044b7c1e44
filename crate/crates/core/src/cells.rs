//! Great-circle arrangement of the level-crossing planes on the unit
//! sphere: cell enumeration by face tracing, the dual adjacency graph, and
//! the stereographic projection used for plotting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{MtlzError, Result};
use crate::family::MtlzFamily;
use crate::graph::EdgeKey;

type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

fn add_scaled(a: &Vec3, c: f64, b: &Vec3) -> Vec3 {
    [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]]
}

/// One level-crossing great circle: the plane normal is the rescaled
/// coupling form of the edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Circle {
    pub edge: EdgeKey,
    pub normal: Vec3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreatCircleArrangement {
    pub circles: Vec<Circle>,
}

/// One circle per edge; requires a three-dimensional family and pairwise
/// non-parallel normals.
pub fn build_arrangement(family: &MtlzFamily) -> Result<GreatCircleArrangement> {
    if family.dimension != 3 {
        return Err(MtlzError::Unsupported(format!(
            "cell decomposition needs a 3-dimensional family (got M = {})",
            family.dimension
        )));
    }
    let mut circles = Vec::new();
    for (&edge, _) in &family.coupling {
        let f = family.rescaled_form(edge);
        if f.norm() == 0.0 {
            return Err(MtlzError::DegenerateArrangement(format!(
                "zero form on edge {edge:?}"
            )));
        }
        circles.push(Circle { edge, normal: normalize(&[f.0[0], f.0[1], f.0[2]]) });
    }
    let mut offenders = Vec::new();
    for i in 0..circles.len() {
        for j in (i + 1)..circles.len() {
            let c = cross(&circles[i].normal, &circles[j].normal);
            if norm(&c) < 1e-9 {
                offenders.push((circles[i].edge, circles[j].edge));
            }
        }
    }
    if !offenders.is_empty() {
        return Err(MtlzError::DegenerateArrangement(format!(
            "coincident crossing circles for edge pairs {offenders:?}; \
             the direct-product route applies instead"
        )));
    }
    Ok(GreatCircleArrangement { circles })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    /// Side of each circle, ordered as in the arrangement.
    pub sign_vector: Vec<i8>,
    pub representative: Vec3,
    /// Smallest |normal . representative| over all circles.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellComplex {
    pub arrangement: GreatCircleArrangement,
    pub cells: Vec<Cell>,
    pub n_vertices: usize,
    pub n_arcs: usize,
    /// adjacency[cell] = (neighbor, circle index, true when the step leaves
    /// the positive side of that circle).
    pub adjacency: Vec<Vec<(usize, usize, bool)>>,
    /// Antipodal partner of each cell.
    pub antipode: Vec<usize>,
}

impl CellComplex {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.n_arcs as i64 + self.cells.len() as i64
    }

    pub fn cell_by_sign_vector(&self, sv: &[i8]) -> Option<usize> {
        self.cells.iter().position(|c| c.sign_vector == sv)
    }

    /// The cell containing a given direction.
    pub fn locate(&self, x: &Vec3) -> Option<usize> {
        let sv: Vec<i8> = self
            .arrangement
            .circles
            .iter()
            .map(|c| if dot(&c.normal, x) > 0.0 { 1 } else { -1 })
            .collect();
        self.cell_by_sign_vector(&sv)
    }
}

struct HalfEdge {
    circle: usize,
    from: usize,
    to: usize,
    /// Forward = counterclockwise around the circle normal.
    forward: bool,
    twin: usize,
    next: usize,
}

/// Enumerate the cells of the arrangement by tracing the faces of the
/// induced spherical graph. Exact concurrences of several circles through
/// one point are handled by vertex clustering.
pub fn enumerate_cells(arrangement: &GreatCircleArrangement) -> Result<CellComplex> {
    let nc = arrangement.circles.len();
    if nc == 0 {
        return Err(MtlzError::DegenerateArrangement("no circles".into()));
    }
    if nc == 1 {
        let n = arrangement.circles[0].normal;
        let cells = vec![
            Cell { id: 0, sign_vector: vec![1], representative: n, margin: 1.0 },
            Cell {
                id: 1,
                sign_vector: vec![-1],
                representative: [-n[0], -n[1], -n[2]],
                margin: 1.0,
            },
        ];
        return Ok(CellComplex {
            arrangement: arrangement.clone(),
            cells,
            n_vertices: 0,
            n_arcs: 0,
            adjacency: vec![vec![(1, 0, true)], vec![(0, 0, false)]],
            antipode: vec![1, 0],
        });
    }

    // Intersection points, clustered to absorb exact concurrences.
    let cluster_tol = 1e-9;
    let mut points: Vec<Vec3> = Vec::new();
    for i in 0..nc {
        for j in (i + 1)..nc {
            let c = cross(&arrangement.circles[i].normal, &arrangement.circles[j].normal);
            let len = norm(&c);
            if len < 1e-12 {
                return Err(MtlzError::DegenerateArrangement(format!(
                    "circles {i} and {j} coincide"
                )));
            }
            let p = [c[0] / len, c[1] / len, c[2] / len];
            for cand in [p, [-p[0], -p[1], -p[2]]] {
                if !points.iter().any(|q| {
                    (q[0] - cand[0]).abs() < cluster_tol
                        && (q[1] - cand[1]).abs() < cluster_tol
                        && (q[2] - cand[2]).abs() < cluster_tol
                }) {
                    points.push(cand);
                }
            }
        }
    }
    let n_vertices = points.len();

    // Arcs per circle: points on the circle sorted by angle.
    let on_tol = 1e-8;
    let mut half_edges: Vec<HalfEdge> = Vec::new();
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for (ci, circle) in arrangement.circles.iter().enumerate() {
        let n = circle.normal;
        let u = {
            let seed = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            normalize(&cross(&n, &seed))
        };
        let v = cross(&n, &u);
        let mut on_circle: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|(_, p)| dot(p, &n).abs() < on_tol)
            .map(|(idx, p)| (dot(p, &v).atan2(dot(p, &u)), idx))
            .collect();
        if on_circle.len() < 2 {
            return Err(MtlzError::DegenerateArrangement(format!(
                "circle {ci} carries fewer than two arrangement vertices"
            )));
        }
        on_circle.sort_by(|a, b| a.0.total_cmp(&b.0));
        let k = on_circle.len();
        for idx in 0..k {
            let from = on_circle[idx].1;
            let to = on_circle[(idx + 1) % k].1;
            let fwd_id = half_edges.len();
            half_edges.push(HalfEdge {
                circle: ci,
                from,
                to,
                forward: true,
                twin: fwd_id + 1,
                next: usize::MAX,
            });
            half_edges.push(HalfEdge {
                circle: ci,
                from: to,
                to: from,
                forward: false,
                twin: fwd_id,
                next: usize::MAX,
            });
            outgoing[from].push(fwd_id);
            outgoing[to].push(fwd_id + 1);
        }
    }
    let n_arcs = half_edges.len() / 2;

    // Rotation order of outgoing half-edges around each vertex.
    let tangent = |h: &HalfEdge| -> Vec3 {
        let p = points[h.from];
        let n = arrangement.circles[h.circle].normal;
        let d = cross(&n, &p);
        if h.forward {
            d
        } else {
            [-d[0], -d[1], -d[2]]
        }
    };
    for (vid, list) in outgoing.iter_mut().enumerate() {
        let p = points[vid];
        let seed = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = normalize(&cross(&p, &seed));
        let e2 = cross(&p, &e1);
        list.sort_by(|&ha, &hb| {
            let ta = tangent(&half_edges[ha]);
            let tb = tangent(&half_edges[hb]);
            let aa = dot(&ta, &e2).atan2(dot(&ta, &e1));
            let ab = dot(&tb, &e2).atan2(dot(&tb, &e1));
            aa.total_cmp(&ab)
        });
    }

    // next(h): at the head of h, step one place clockwise from the twin in
    // the rotation order; this traces each face with its interior kept on
    // one fixed side of the travel direction.
    let mut next = vec![usize::MAX; half_edges.len()];
    for (h, he) in half_edges.iter().enumerate() {
        let q = he.to;
        let twin = he.twin;
        let ring = &outgoing[q];
        let pos = ring.iter().position(|&x| x == twin).expect("twin registered at head");
        next[h] = ring[(pos + ring.len() - 1) % ring.len()];
    }
    for (h, hx) in half_edges.iter_mut().enumerate() {
        hx.next = next[h];
    }

    // Trace faces.
    let mut face_of = vec![usize::MAX; half_edges.len()];
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for start in 0..half_edges.len() {
        if face_of[start] != usize::MAX {
            continue;
        }
        let fid = faces.len();
        let mut boundary = Vec::new();
        let mut h = start;
        for _ in 0..half_edges.len() + 1 {
            face_of[h] = fid;
            boundary.push(h);
            h = half_edges[h].next;
            if h == start {
                break;
            }
        }
        if h != start {
            return Err(MtlzError::DegenerateArrangement("face tracing did not close".into()));
        }
        faces.push(boundary);
    }
    let n_faces = faces.len();
    let euler = n_vertices as i64 - n_arcs as i64 + n_faces as i64;
    if euler != 2 {
        return Err(MtlzError::DegenerateArrangement(format!(
            "Euler check failed: V - E + F = {n_vertices} - {n_arcs} + {n_faces} = {euler}"
        )));
    }

    // Representatives and sign vectors.
    let mut cells = Vec::with_capacity(n_faces);
    for (fid, boundary) in faces.iter().enumerate() {
        let mut best: Option<(f64, Vec3)> = None;
        for &h in boundary {
            let he = &half_edges[h];
            let a = points[he.from];
            let b = points[he.to];
            let n = arrangement.circles[he.circle].normal;
            // Midpoint along the traversal direction on the circle.
            let u = normalize(&add_scaled(&a, -dot(&a, &n), &n));
            let w = cross(&n, &u);
            let b_in_plane = add_scaled(&b, -dot(&b, &n), &n);
            let mut ang = dot(&b_in_plane, &w).atan2(dot(&b_in_plane, &u));
            if he.forward {
                if ang <= 1e-12 {
                    ang += std::f64::consts::TAU;
                }
            } else if ang >= -1e-12 {
                ang -= std::f64::consts::TAU;
            }
            let half = 0.5 * ang;
            let mid = normalize(&add_scaled(
                &[u[0] * half.cos(), u[1] * half.cos(), u[2] * half.cos()],
                half.sin(),
                &w,
            ));
            let d = {
                let t = cross(&n, &mid);
                if he.forward {
                    t
                } else {
                    [-t[0], -t[1], -t[2]]
                }
            };
            let left = cross(&mid, &d);
            for delta_exp in 2..=8 {
                let delta = 10f64.powi(-delta_exp);
                let rep = normalize(&add_scaled(&mid, delta, &left));
                let margin = arrangement
                    .circles
                    .iter()
                    .map(|c| dot(&c.normal, &rep).abs())
                    .fold(f64::INFINITY, f64::min);
                if margin < 1e-11 {
                    continue;
                }
                // The representative must sit on the declared side of every
                // boundary circle of this face.
                let ok = boundary.iter().all(|&hh| {
                    let he2 = &half_edges[hh];
                    let side = dot(&arrangement.circles[he2.circle].normal, &rep);
                    if he2.forward {
                        side > 0.0
                    } else {
                        side < 0.0
                    }
                });
                if ok {
                    match best {
                        Some((m, _)) if m >= margin => {}
                        _ => best = Some((margin, rep)),
                    }
                    break;
                }
            }
        }
        let (margin, rep) = best.ok_or_else(|| {
            MtlzError::DegenerateArrangement(format!("no valid representative for cell {fid}"))
        })?;
        let sign_vector: Vec<i8> = arrangement
            .circles
            .iter()
            .map(|c| if dot(&c.normal, &rep) > 0.0 { 1 } else { -1 })
            .collect();
        cells.push(Cell { id: fid, sign_vector, representative: rep, margin });
    }

    // Distinct sign vectors.
    {
        let mut seen = BTreeMap::new();
        for c in &cells {
            if let Some(prev) = seen.insert(c.sign_vector.clone(), c.id) {
                return Err(MtlzError::DegenerateArrangement(format!(
                    "cells {prev} and {} share a sign vector",
                    c.id
                )));
            }
        }
    }

    // Adjacency via arcs: the forward half-edge borders the positive-side
    // face, its twin the negative-side face.
    let mut adjacency: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); n_faces];
    for (h, he) in half_edges.iter().enumerate() {
        if !he.forward {
            continue;
        }
        let plus_face = face_of[h];
        let minus_face = face_of[he.twin];
        adjacency[plus_face].push((minus_face, he.circle, true));
        adjacency[minus_face].push((plus_face, he.circle, false));
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }

    let mut antipode = vec![usize::MAX; n_faces];
    for c in &cells {
        let neg: Vec<i8> = c.sign_vector.iter().map(|s| -s).collect();
        let partner = cells.iter().position(|d| d.sign_vector == neg).ok_or_else(|| {
            MtlzError::DegenerateArrangement(format!("cell {} has no antipodal partner", c.id))
        })?;
        antipode[c.id] = partner;
    }

    Ok(CellComplex {
        arrangement: arrangement.clone(),
        cells,
        n_vertices,
        n_arcs,
        adjacency,
        antipode,
    })
}

// ---------------------------------------------------------------------------
// Stereographic projection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanarShape {
    /// Image of a great circle avoiding the projection pole.
    Circle { cx: f64, cy: f64, r: f64 },
    /// Image of a great circle through the pole: the line a x + b y = 0.
    Line { a: f64, b: f64 },
}

/// Project one great circle from the north pole onto the equatorial plane.
pub fn stereographic_image(normal: &Vec3) -> PlanarShape {
    let nz = normal[2];
    if nz.abs() < 1e-12 {
        PlanarShape::Line { a: normal[0], b: normal[1] }
    } else {
        PlanarShape::Circle { cx: -normal[0] / nz, cy: -normal[1] / nz, r: 1.0 / nz.abs() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneElement {
    pub label: String,
    pub shape: PlanarShape,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StereographicScene {
    pub elements: Vec<SceneElement>,
    pub cell_count: usize,
    /// Rotation applied so the pole avoids every circle (row-major 3x3).
    pub rotation: [[f64; 3]; 3],
}

fn rotation_matrix(axis: &Vec3, angle: f64) -> [[f64; 3]; 3] {
    let [x, y, z] = normalize(axis);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn apply(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Build the planar scene, rotating deterministically until no circle runs
/// through the projection pole.
pub fn stereographic_scene(complex: &CellComplex) -> StereographicScene {
    let circles = &complex.arrangement.circles;
    let mut rotation = rotation_matrix(&[0.0, 0.0, 1.0], 0.0);
    for k in 0..64 {
        let ok = circles.iter().all(|c| apply(&rotation, &c.normal)[2].abs() > 1e-3);
        if ok {
            break;
        }
        let angle = 0.1 + 0.37 * k as f64;
        rotation = rotation_matrix(&[1.0, 1.0, 1.0], angle);
    }
    let elements = circles
        .iter()
        .map(|c| SceneElement {
            label: format!("{}{}", c.edge.0, c.edge.1),
            shape: stereographic_image(&apply(&rotation, &c.normal)),
        })
        .collect();
    StereographicScene { elements, cell_count: complex.n_cells(), rotation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_cube, CubeParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arrangement_from_normals(normals: &[Vec3]) -> GreatCircleArrangement {
        GreatCircleArrangement {
            circles: normals
                .iter()
                .enumerate()
                .map(|(i, n)| Circle { edge: (0, i + 1), normal: normalize(n) })
                .collect(),
        }
    }

    #[test]
    fn three_orthogonal_circles_give_octants() {
        let arr = arrangement_from_normals(&[
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]);
        let complex = enumerate_cells(&arr).unwrap();
        assert_eq!(complex.n_cells(), 8);
        assert_eq!(complex.euler_characteristic(), 2);
        for adj in &complex.adjacency {
            assert_eq!(adj.len(), 3);
        }
    }

    #[test]
    fn cube_family_has_ninety_eight_cells() {
        let fam = build_cube(&CubeParams::new([0.5, 0.3, 0.4], [0.12, 0.2, 0.3])).unwrap();
        let arr = build_arrangement(&fam).unwrap();
        assert_eq!(arr.circles.len(), 12);
        let complex = enumerate_cells(&arr).unwrap();
        assert_eq!(complex.n_cells(), 98);
        assert_eq!(complex.euler_characteristic(), 2);
        assert_eq!(complex.n_vertices, 72);
        assert_eq!(complex.n_arcs, 168);
    }

    #[test]
    fn random_circles_in_general_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(20240917);
        let normals: Vec<Vec3> = (0..12)
            .map(|_| {
                normalize(&[
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ])
            })
            .collect();
        let complex = enumerate_cells(&arrangement_from_normals(&normals)).unwrap();
        // n (n - 1) + 2 cells for n great circles in general position
        assert_eq!(complex.n_cells(), 12 * 11 + 2);
        assert_eq!(complex.euler_characteristic(), 2);
    }

    #[test]
    fn tau_zero_cube_rejected_as_degenerate() {
        let fam = build_cube(&CubeParams::new([0.0, 0.0, 0.0], [0.12, 0.2, 0.3])).unwrap();
        let err = build_arrangement(&fam).unwrap_err();
        assert!(err.to_string().contains("coincident"), "{err}");
    }

    #[test]
    fn square_family_unsupported() {
        let fam = crate::family::build_square(&crate::family::SquareParams::new(
            [1.0, 0.0],
            [0.0, 1.0],
            0.3,
            1,
            1.0,
            1.0,
        ))
        .unwrap();
        assert!(build_arrangement(&fam).is_err());
    }

    #[test]
    fn stereographic_images() {
        match stereographic_image(&[0.0, 0.0, 1.0]) {
            PlanarShape::Circle { cx, cy, r } => {
                assert!(cx.abs() < 1e-12 && cy.abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
            }
            _ => panic!("equator should map to the unit circle"),
        }
        match stereographic_image(&[1.0, 0.0, 0.0]) {
            PlanarShape::Line { a, b } => {
                assert!((a - 1.0).abs() < 1e-12 && b.abs() < 1e-12);
            }
            _ => panic!("circle through the pole should map to a line"),
        }
    }

    #[test]
    fn scene_preserves_cell_count_and_avoids_pole() {
        let fam = build_cube(&CubeParams::new([0.5, 0.3, 0.4], [0.12, 0.2, 0.3])).unwrap();
        let complex = enumerate_cells(&build_arrangement(&fam).unwrap()).unwrap();
        let scene = stereographic_scene(&complex);
        assert_eq!(scene.cell_count, 98);
        assert_eq!(scene.elements.len(), 12);
        for el in &scene.elements {
            if let PlanarShape::Line { .. } = el.shape {
                panic!("auto-rotation should prevent circles through the pole");
            }
        }
    }
}
