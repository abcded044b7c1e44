//! Connectivity graphs for diabatic state couplings.
//!
//! Vertices are diabatic states, edges are nonzero couplings. Orientations
//! carry the signs of the Landau-Zener parameters, which single out source,
//! sink and intermediate vertices and classify every 4-loop.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{MtlzError, Result};

/// Canonical undirected edge key: `(min(a,b), max(a,b))`.
pub type EdgeKey = (usize, usize);

pub fn edge_key(a: usize, b: usize) -> EdgeKey {
    (a.min(b), a.max(b))
}

/// Simple undirected graph with deduplicated, sorted edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityGraph {
    n_vertices: usize,
    edges: Vec<EdgeKey>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

impl ConnectivityGraph {
    pub fn new(n_vertices: usize, raw_edges: &[(usize, usize)]) -> Result<Self> {
        if n_vertices == 0 {
            return Err(MtlzError::Graph("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in raw_edges {
            if a == b {
                return Err(MtlzError::Graph(format!("self-loop at vertex {a}")));
            }
            if a >= n_vertices || b >= n_vertices {
                return Err(MtlzError::Graph(format!(
                    "edge ({a},{b}) endpoint out of range (n={n_vertices})"
                )));
            }
            set.insert(edge_key(a, b));
        }
        let edges: Vec<EdgeKey> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n_vertices];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        Ok(Self { n_vertices, edges, adjacency })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[EdgeKey] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&edge_key(a, b)).is_ok()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Rebuild adjacency after deserialization.
    pub fn rebuild(mut self) -> Self {
        let mut adjacency = vec![Vec::new(); self.n_vertices];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        self.adjacency = adjacency;
        self
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return true;
        }
        let mut seen = vec![false; self.n_vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n_vertices
    }

    /// Common neighbors of `a` and `b`, i.e. midpoints of length-2 paths.
    pub fn common_neighbors(&self, a: usize, b: usize) -> Vec<usize> {
        let (na, nb) = (self.neighbors(a), self.neighbors(b));
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < na.len() && j < nb.len() {
            match na[i].cmp(&nb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(na[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    /// Non-adjacent vertex pairs (zero direct couplings).
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n_vertices {
            for b in (a + 1)..self.n_vertices {
                if !self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Edge orientation: `sign(a,b)` is the sign of the Landau-Zener parameter
/// seen from `a`, antisymmetric under endpoint swap. `+1` means the arrow
/// on the edge points into `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    /// s^{ab} for the canonical key (a<b).
    signs: BTreeMap<EdgeKey, i8>,
}

impl Orientation {
    pub fn new(graph: &ConnectivityGraph, signs: &[(usize, usize, i8)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(a, b, s) in signs {
            if !graph.has_edge(a, b) {
                return Err(MtlzError::Graph(format!("orientation on missing edge ({a},{b})")));
            }
            if s != 1 && s != -1 {
                return Err(MtlzError::Graph(format!("sign on ({a},{b}) must be +-1")));
            }
            let key = edge_key(a, b);
            let canon = if a < b { s } else { -s };
            if let Some(prev) = map.insert(key, canon) {
                if prev != canon {
                    return Err(MtlzError::Graph(format!("conflicting signs on edge {key:?}")));
                }
            }
        }
        if map.len() != graph.n_edges() {
            return Err(MtlzError::Graph(format!(
                "orientation covers {} of {} edges",
                map.len(),
                graph.n_edges()
            )));
        }
        Ok(Self { signs: map })
    }

    /// Build from a bitmask over `graph.edges()`: bit set means s^{ab} = +1
    /// for the canonical key.
    pub fn from_bits(graph: &ConnectivityGraph, bits: u64) -> Self {
        let signs = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, if bits >> i & 1 == 1 { 1 } else { -1 }))
            .collect();
        Self { signs }
    }

    /// s^{ab}: +1 if the arrow points into `a`.
    pub fn sign(&self, a: usize, b: usize) -> i8 {
        let s = self.signs[&edge_key(a, b)];
        if a < b {
            s
        } else {
            -s
        }
    }

    pub fn reversed(&self) -> Self {
        Self { signs: self.signs.iter().map(|(&k, &s)| (k, -s)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexClass {
    Source,
    Sink,
    Intermediate,
}

/// Classify a vertex by the signs on its incident edges: a sink collects
/// all arrows, a source emits all arrows.
pub fn classify_vertex(
    graph: &ConnectivityGraph,
    orientation: &Orientation,
    v: usize,
) -> Result<VertexClass> {
    let nb = graph.neighbors(v);
    if nb.is_empty() {
        return Err(MtlzError::Graph(format!("vertex {v} is isolated")));
    }
    let mut plus = 0usize;
    let mut minus = 0usize;
    for &w in nb {
        if orientation.sign(v, w) > 0 {
            plus += 1;
        } else {
            minus += 1;
        }
    }
    Ok(if minus == 0 {
        VertexClass::Sink
    } else if plus == 0 {
        VertexClass::Source
    } else {
        VertexClass::Intermediate
    })
}

/// Orientation class of a 4-loop. Only non-bipartite loops (one source, one
/// sink at opposite corners) and bipartite loops (alternating sources and
/// sinks) admit nonzero form data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopClass {
    NonBipartite,
    Bipartite,
    Invalid,
}

/// A simple 4-cycle `(a,b,c,d)` with edges ab, bc, cd, da.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourLoop {
    pub vertices: [usize; 4],
}

impl FourLoop {
    pub fn edges(&self) -> [EdgeKey; 4] {
        let [a, b, c, d] = self.vertices;
        [edge_key(a, b), edge_key(b, c), edge_key(c, d), edge_key(d, a)]
    }

    /// In-loop class of each vertex counting only the two loop edges.
    pub fn classify(&self, orientation: &Orientation) -> LoopClass {
        let [a, b, c, d] = self.vertices;
        let ring = [a, b, c, d];
        let mut sources = [false; 4];
        let mut sinks = [false; 4];
        for i in 0..4 {
            let v = ring[i];
            let prev = ring[(i + 3) % 4];
            let next = ring[(i + 1) % 4];
            let s1 = orientation.sign(v, prev);
            let s2 = orientation.sign(v, next);
            sources[i] = s1 < 0 && s2 < 0;
            sinks[i] = s1 > 0 && s2 > 0;
        }
        let ns = sources.iter().filter(|&&x| x).count();
        let nk = sinks.iter().filter(|&&x| x).count();
        match (ns, nk) {
            (1, 1) => {
                let si = sources.iter().position(|&x| x).unwrap();
                let ki = sinks.iter().position(|&x| x).unwrap();
                if (si + 2) % 4 == ki {
                    LoopClass::NonBipartite
                } else {
                    LoopClass::Invalid
                }
            }
            (2, 2) => {
                let si: Vec<usize> =
                    (0..4).filter(|&i| sources[i]).collect();
                if (si[0] + 2) % 4 == si[1] {
                    LoopClass::Bipartite
                } else {
                    LoopClass::Invalid
                }
            }
            _ => LoopClass::Invalid,
        }
    }

    /// Source and sink vertices for a non-bipartite loop, the two source
    /// vertices for a bipartite loop.
    pub fn poles(&self, orientation: &Orientation) -> Option<(usize, usize)> {
        let [a, b, c, d] = self.vertices;
        let ring = [a, b, c, d];
        match self.classify(orientation) {
            LoopClass::NonBipartite => {
                let mut source = None;
                let mut sink = None;
                for i in 0..4 {
                    let v = ring[i];
                    let s1 = orientation.sign(v, ring[(i + 3) % 4]);
                    let s2 = orientation.sign(v, ring[(i + 1) % 4]);
                    if s1 < 0 && s2 < 0 {
                        source = Some(v);
                    }
                    if s1 > 0 && s2 > 0 {
                        sink = Some(v);
                    }
                }
                Some((source?, sink?))
            }
            LoopClass::Bipartite => {
                let mut srcs = Vec::new();
                for i in 0..4 {
                    let v = ring[i];
                    if orientation.sign(v, ring[(i + 3) % 4]) < 0
                        && orientation.sign(v, ring[(i + 1) % 4]) < 0
                    {
                        srcs.push(v);
                    }
                }
                if srcs.len() == 2 {
                    Some((srcs[0], srcs[1]))
                } else {
                    None
                }
            }
            LoopClass::Invalid => None,
        }
    }
}

/// Every simple 4-cycle, once, as `(a,b,c,d)` with `a` minimal and `b < d`.
pub fn enumerate_four_loops(graph: &ConnectivityGraph) -> Vec<FourLoop> {
    let n = graph.n_vertices();
    let mut out = Vec::new();
    for a in 0..n {
        for &b in graph.neighbors(a) {
            if b <= a {
                continue;
            }
            for &c in graph.neighbors(b) {
                if c <= a || c == b {
                    continue;
                }
                for &d in graph.neighbors(c) {
                    if d <= a || d == b || d == c {
                        continue;
                    }
                    if d > b && graph.has_edge(d, a) {
                        out.push(FourLoop { vertices: [a, b, c, d] });
                    }
                }
            }
        }
    }
    out
}

/// Witnesses for screening failures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScreenReport {
    pub triangle_free: bool,
    pub four_loop_cover: bool,
    /// Triangles as vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Adjacent edge pairs not contained in any 4-loop.
    pub uncovered_pairs: Vec<(EdgeKey, EdgeKey)>,
}

impl ScreenReport {
    pub fn pass(&self) -> bool {
        self.triangle_free && self.four_loop_cover
    }
}

/// Check the structural prerequisites for an integrable family: no
/// triangles, and every adjacent edge pair inside some 4-loop.
pub fn screen_graph(graph: &ConnectivityGraph) -> Result<ScreenReport> {
    if !graph.is_connected() {
        return Err(MtlzError::Graph("screening requires a connected graph".into()));
    }
    let mut triangles = Vec::new();
    for &(a, b) in graph.edges() {
        for &c in graph.neighbors(a) {
            if c > b && graph.has_edge(b, c) {
                triangles.push([a, b, c]);
            }
        }
    }
    let loops = enumerate_four_loops(graph);
    let mut covered: BTreeSet<(EdgeKey, EdgeKey)> = BTreeSet::new();
    for l in &loops {
        let es = l.edges();
        for i in 0..4 {
            let e1 = es[i];
            let e2 = es[(i + 1) % 4];
            covered.insert((e1.min(e2), e1.max(e2)));
        }
    }
    let mut uncovered = Vec::new();
    for v in 0..graph.n_vertices() {
        let nb = graph.neighbors(v);
        for i in 0..nb.len() {
            for j in (i + 1)..nb.len() {
                let e1 = edge_key(v, nb[i]);
                let e2 = edge_key(v, nb[j]);
                let key = (e1.min(e2), e1.max(e2));
                if !covered.contains(&key) {
                    uncovered.push((e1.min(e2), e1.max(e2)));
                }
            }
        }
    }
    Ok(ScreenReport {
        triangle_free: triangles.is_empty(),
        four_loop_cover: uncovered.is_empty(),
        triangles,
        uncovered_pairs: uncovered,
    })
}

/// An integer chain over edges with vanishing boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    /// Edge -> coefficient n_alpha in {-1, +1}; absent edges carry 0.
    pub coefficients: BTreeMap<EdgeKey, i8>,
}

impl Cycle {
    /// Signed boundary count at each vertex; zero everywhere for a cycle.
    pub fn boundary(&self, n_vertices: usize) -> Vec<i32> {
        // Boundary of an oriented edge (a->b) is b - a; our coefficients are
        // defined on traversal direction, so track both endpoints mod 2.
        let mut deg = vec![0i32; n_vertices];
        for (&(a, b), &c) in &self.coefficients {
            deg[a] += c as i32;
            deg[b] += c as i32;
        }
        deg
    }
}

/// Fundamental cycles from a BFS spanning tree; coefficients follow the
/// orientation rule n_alpha = s^{ab} when the cycle traverses a -> b.
pub fn cycle_basis(graph: &ConnectivityGraph, orientation: &Orientation) -> Vec<Cycle> {
    let n = graph.n_vertices();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in graph.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                queue.push_back(w);
            }
        }
    }
    let tree_edges: BTreeSet<EdgeKey> = (0..n)
        .filter_map(|v| parent[v].map(|p| edge_key(v, p)))
        .collect();
    let path_to_root = |mut v: usize| -> Vec<usize> {
        let mut path = vec![v];
        while let Some(p) = parent[v] {
            path.push(p);
            v = p;
        }
        path
    };
    let mut cycles = Vec::new();
    for &(a, b) in graph.edges() {
        if tree_edges.contains(&edge_key(a, b)) {
            continue;
        }
        // Tree path b -> a, then close with edge a -> b.
        let pa = path_to_root(a);
        let pb = path_to_root(b);
        let in_pa: BTreeSet<usize> = pa.iter().copied().collect();
        let meet = *pb.iter().find(|v| in_pa.contains(v)).expect("common ancestor");
        let mut walk: Vec<usize> = pb.iter().copied().take_while(|&v| v != meet).collect();
        walk.push(meet);
        let mut up: Vec<usize> = pa.iter().copied().take_while(|&v| v != meet).collect();
        up.reverse();
        walk.extend(up);
        // walk is b ... a; traverse a -> b via the closing edge first.
        let mut coefficients = BTreeMap::new();
        coefficients.insert(edge_key(a, b), orientation.sign(a, b));
        for w in walk.windows(2) {
            let (u, v) = (w[0], w[1]);
            coefficients.insert(edge_key(u, v), orientation.sign(u, v));
        }
        cycles.push(Cycle { coefficients });
    }
    cycles
}

// ---------------------------------------------------------------------------
// Named graphs
// ---------------------------------------------------------------------------

/// The 4-cycle.
pub fn square_graph() -> ConnectivityGraph {
    ConnectivityGraph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()
}

/// D-dimensional hypercube; vertex bits index the directions.
pub fn hypercube_graph(dim: u32) -> ConnectivityGraph {
    let n = 1usize << dim;
    let mut edges = Vec::new();
    for v in 0..n {
        for d in 0..dim {
            let w = v | (1 << d);
            if w != v {
                edges.push((v, w));
            }
        }
    }
    ConnectivityGraph::new(n, &edges).unwrap()
}

pub fn cube_graph() -> ConnectivityGraph {
    hypercube_graph(3)
}

/// Fan: hub vertices b1, b2 (labels m and m+1) each joined to a_1..a_m
/// (labels 0..m-1); the a-vertices are pairwise non-adjacent.
pub fn fan_graph(m: usize) -> ConnectivityGraph {
    let b1 = m;
    let b2 = m + 1;
    let mut edges = Vec::new();
    for a in 0..m {
        edges.push((a, b1));
        edges.push((a, b2));
    }
    ConnectivityGraph::new(m + 2, &edges).unwrap()
}

/// Two intertwined fans on 8 vertices: hubs {0,2} over {1,3,5,7} and hubs
/// {1,3} over {0,2,4,6}.
pub fn double_fan_graph() -> ConnectivityGraph {
    let mut edges = Vec::new();
    for &a in &[1usize, 3, 5, 7] {
        edges.push((0, a));
        edges.push((2, a));
    }
    for &a in &[4usize, 6] {
        edges.push((1, a));
        edges.push((3, a));
    }
    // (1,0),(1,2),(3,0),(3,2) already present from the first fan
    ConnectivityGraph::new(8, &edges).unwrap()
}

/// Two k-gons (outer 0..k-1, inner k..2k-1) where outer vertex i joins the
/// inner vertices i-1 and i+1 (mod k).
pub fn double_polygon_graph(k: usize) -> ConnectivityGraph {
    assert!(k >= 5);
    let mut edges = Vec::new();
    for i in 0..k {
        edges.push((i, (i + 1) % k));
        edges.push((k + i, k + (i + 1) % k));
        edges.push((i, k + (i + 1) % k));
        edges.push((i, k + (i + k - 1) % k));
    }
    ConnectivityGraph::new(2 * k, &edges).unwrap()
}

pub fn double_pentagon_graph() -> ConnectivityGraph {
    double_polygon_graph(5)
}

pub fn double_hexagon_graph() -> ConnectivityGraph {
    double_polygon_graph(6)
}

/// Square 0-1-2-3 with an ear vertex across each diagonal: 4 adjacent to
/// {0,2} and 5 adjacent to {1,3}.
pub fn square_with_ears_graph() -> ConnectivityGraph {
    ConnectivityGraph::new(
        6,
        &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (2, 4), (1, 5), (3, 5)],
    )
    .unwrap()
}

/// Moebius ladder on 8 vertices: the 8-cycle plus the four antipodal rungs.
pub fn mobius_ladder_graph() -> ConnectivityGraph {
    let mut edges = Vec::new();
    for i in 0..8usize {
        edges.push((i, (i + 1) % 8));
    }
    for i in 0..4usize {
        edges.push((i, i + 4));
    }
    ConnectivityGraph::new(8, &edges).unwrap()
}

/// Cube plus k main diagonals (k = 1..3).
pub fn cube_plus_graph(k: usize) -> ConnectivityGraph {
    assert!((1..=3).contains(&k));
    let cube = cube_graph();
    let mut edges: Vec<(usize, usize)> = cube.edges().to_vec();
    let diagonals = [(0usize, 7usize), (1, 6), (2, 5)];
    edges.extend_from_slice(&diagonals[..k]);
    ConnectivityGraph::new(8, &edges).unwrap()
}

/// Orientation with every arrow pointing from the vertex with more set bits
/// to the vertex with fewer (hypercube convention: vertex 0 is the sink).
pub fn hypercube_orientation(graph: &ConnectivityGraph) -> Orientation {
    let signs: Vec<(usize, usize, i8)> = graph
        .edges()
        .iter()
        .map(|&(a, b)| {
            // a < b and b = a | bit, so a has fewer bits: arrow b -> a.
            (a, b, 1)
        })
        .collect();
    Orientation::new(graph, &signs).unwrap()
}

/// The non-bipartite square orientation: vertex 0 sink, vertex 2 source.
pub fn square_orientation_nonbipartite() -> (ConnectivityGraph, Orientation) {
    let g = square_graph();
    let orient = Orientation::new(&g, &[(0, 1, 1), (0, 3, 1), (2, 1, -1), (2, 3, -1)]).unwrap();
    (g, orient)
}

/// The bipartite square orientation: vertices 0 and 2 sinks.
pub fn square_orientation_bipartite() -> (ConnectivityGraph, Orientation) {
    let g = square_graph();
    let orient = Orientation::new(&g, &[(0, 1, 1), (0, 3, 1), (2, 1, 1), (2, 3, 1)]).unwrap();
    (g, orient)
}

/// Type-II fan orientation: a_1..a_l sinks, a_{l+1}..a_m sources.
pub fn fan_orientation_type2(graph: &ConnectivityGraph, m: usize, l: usize) -> Orientation {
    let b1 = m;
    let b2 = m + 1;
    let mut signs = Vec::new();
    for a in 0..m {
        let s: i8 = if a < l { 1 } else { -1 };
        signs.push((a, b1, s));
        signs.push((a, b2, s));
    }
    Orientation::new(graph, &signs).unwrap()
}

/// Type-I fan orientation: b1 source, b2 sink, all a-vertices intermediate.
pub fn fan_orientation_type1(graph: &ConnectivityGraph, m: usize) -> Orientation {
    let b1 = m;
    let b2 = m + 1;
    let mut signs = Vec::new();
    for a in 0..m {
        signs.push((b1, a, -1));
        signs.push((b2, a, 1));
    }
    Orientation::new(graph, &signs).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_vertex_roles_follow_the_arrows() {
        let (g, orient) = square_orientation_nonbipartite();
        assert_eq!(classify_vertex(&g, &orient, 0).unwrap(), VertexClass::Sink);
        assert_eq!(classify_vertex(&g, &orient, 2).unwrap(), VertexClass::Source);
        assert_eq!(classify_vertex(&g, &orient, 1).unwrap(), VertexClass::Intermediate);
        assert_eq!(classify_vertex(&g, &orient, 3).unwrap(), VertexClass::Intermediate);
    }

    #[test]
    fn single_edge_roles() {
        let g = ConnectivityGraph::new(2, &[(0, 1)]).unwrap();
        let orient = Orientation::new(&g, &[(0, 1, 1)]).unwrap();
        assert_eq!(classify_vertex(&g, &orient, 0).unwrap(), VertexClass::Sink);
        assert_eq!(classify_vertex(&g, &orient, 1).unwrap(), VertexClass::Source);
    }

    #[test]
    fn cube_roles() {
        let g = cube_graph();
        let orient = hypercube_orientation(&g);
        assert_eq!(classify_vertex(&g, &orient, 0).unwrap(), VertexClass::Sink);
        assert_eq!(classify_vertex(&g, &orient, 7).unwrap(), VertexClass::Source);
        for v in 1..7 {
            assert_eq!(classify_vertex(&g, &orient, v).unwrap(), VertexClass::Intermediate);
        }
    }

    #[test]
    fn isolated_vertex_rejected() {
        let g = ConnectivityGraph::new(3, &[(0, 1)]).unwrap();
        let orient = Orientation::new(&g, &[(0, 1, 1)]).unwrap();
        assert!(classify_vertex(&g, &orient, 2).is_err());
    }

    #[test]
    fn four_loop_counts() {
        assert_eq!(enumerate_four_loops(&square_graph()).len(), 1);
        assert_eq!(enumerate_four_loops(&cube_graph()).len(), 6);
        assert_eq!(enumerate_four_loops(&fan_graph(3)).len(), 3);
        assert_eq!(enumerate_four_loops(&hypercube_graph(4)).len(), 24);
    }

    #[test]
    fn loop_classes_partition_all_orientations() {
        let g = square_graph();
        let l = &enumerate_four_loops(&g)[0];
        let mut counts = [0usize; 3];
        for bits in 0..16u64 {
            let orient = Orientation::from_bits(&g, bits);
            match l.classify(&orient) {
                LoopClass::NonBipartite => counts[0] += 1,
                LoopClass::Bipartite => counts[1] += 1,
                LoopClass::Invalid => counts[2] += 1,
            }
        }
        assert_eq!(counts, [4, 2, 10]);
    }

    #[test]
    fn screening_regressions() {
        let cube = screen_graph(&cube_graph()).unwrap();
        assert!(cube.pass());

        let k3 = ConnectivityGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let rep = screen_graph(&k3).unwrap();
        assert!(!rep.triangle_free);
        assert_eq!(rep.triangles, vec![[0, 1, 2]]);

        let path = ConnectivityGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let rep = screen_graph(&path).unwrap();
        assert!(rep.triangle_free);
        assert!(!rep.four_loop_cover);
        assert_eq!(rep.uncovered_pairs, vec![((0, 1), (1, 2))]);

        let disconnected = ConnectivityGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(screen_graph(&disconnected).is_err());
    }

    #[test]
    fn cycle_basis_rank() {
        for (g, orient) in [
            square_orientation_nonbipartite(),
            (cube_graph(), hypercube_orientation(&cube_graph())),
            (hypercube_graph(4), hypercube_orientation(&hypercube_graph(4))),
        ] {
            let cycles = cycle_basis(&g, &orient);
            assert_eq!(cycles.len(), g.n_edges() - g.n_vertices() + 1);
        }
        assert_eq!(
            cycle_basis(&cube_graph(), &hypercube_orientation(&cube_graph())).len(),
            5
        );
        assert_eq!(
            cycle_basis(&hypercube_graph(4), &hypercube_orientation(&hypercube_graph(4))).len(),
            17
        );
    }

    #[test]
    fn named_graph_shapes() {
        assert_eq!(double_fan_graph().n_edges(), 12);
        assert_eq!(double_pentagon_graph().n_edges(), 20);
        assert_eq!(square_with_ears_graph().n_edges(), 8);
        assert_eq!(mobius_ladder_graph().n_edges(), 12);
        assert_eq!(cube_plus_graph(1).n_edges(), 13);
        assert_eq!(cube_plus_graph(3).n_edges(), 15);
        for g in [
            double_fan_graph(),
            double_pentagon_graph(),
            double_hexagon_graph(),
            square_with_ears_graph(),
            cube_plus_graph(1),
        ] {
            assert!(g.is_connected());
            assert!(screen_graph(&g).unwrap().triangle_free);
        }
    }
}
