//! Analytic scattering: ordered products of two-level connecting matrices
//! along dual-graph paths between antipodal cells, and the census of the
//! resulting transition-probability matrices.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cells::CellComplex;
use crate::error::{MtlzError, Result};
use crate::graph::EdgeKey;
use crate::monomial::{candidates, fit_entry, Entry, SymbolicMatrix};

type CMat = DMatrix<Complex64>;

/// ln Gamma(z) for complex argument (Lanczos approximation, g = 7).
fn ln_gamma_complex(z: Complex64) -> Complex64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z.re < 0.5 {
        let pi = std::f64::consts::PI;
        return Complex64::new(pi, 0.0).ln()
            - (Complex64::new(pi, 0.0) * z).sin().ln()
            - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let zm = z - Complex64::new(1.0, 0.0);
    let mut x = Complex64::new(COEF[0], 0.0);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        x += Complex64::new(c, 0.0) / (zm + Complex64::new(i as f64, 0.0));
    }
    let g = 7.0;
    let t = zm + Complex64::new(g + 0.5, 0.0);
    let half_ln_two_pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    Complex64::new(half_ln_two_pi, 0.0) + (zm + Complex64::new(0.5, 0.0)) * t.ln() - t + x.ln()
}

/// Stokes phase of the two-level crossing.
pub fn stokes_phase(gamma: f64) -> f64 {
    let lg = ln_gamma_complex(Complex64::new(1.0, -gamma));
    lg.im + gamma * (gamma.ln() - 1.0) + std::f64::consts::FRAC_PI_4
}

/// Unit matrix except for the (a, b) block of a two-level crossing with
/// parameter gamma; `forward` is the passage from the positive to the
/// negative side of the crossing plane, the reverse passage is the adjoint.
pub fn connecting_matrix(n: usize, edge: EdgeKey, gamma: f64, forward: bool) -> CMat {
    let (a, b) = edge;
    let p = (-std::f64::consts::PI * gamma).exp();
    let q = (1.0 - p * p).sqrt();
    let chi = stokes_phase(gamma);
    let mut s = CMat::identity(n, n);
    s[(a, a)] = Complex64::new(p, 0.0);
    s[(b, b)] = Complex64::new(p, 0.0);
    s[(a, b)] = Complex64::from_polar(-q, chi);
    s[(b, a)] = Complex64::from_polar(q, -chi);
    if forward {
        s
    } else {
        s.adjoint()
    }
}

/// A dual-graph step: circle crossed and whether the positive side is left.
pub type PathStep = (usize, bool);

/// Breadth-first path between two cells in the dual graph; `flip` reverses
/// the neighbor iteration order to obtain a second, generally different path.
fn dual_path(complex: &CellComplex, start: usize, end: usize, flip: bool) -> Result<Vec<PathStep>> {
    let n = complex.n_cells();
    let mut prev: Vec<Option<(usize, PathStep)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(c) = queue.pop_front() {
        if c == end {
            break;
        }
        let adj = &complex.adjacency[c];
        let iter: Box<dyn Iterator<Item = &(usize, usize, bool)>> =
            if flip { Box::new(adj.iter().rev()) } else { Box::new(adj.iter()) };
        for &(nb, circle, leaves_plus) in iter {
            if !seen[nb] {
                seen[nb] = true;
                prev[nb] = Some((c, (circle, leaves_plus)));
                queue.push_back(nb);
            }
        }
    }
    if !seen[end] {
        return Err(MtlzError::Domain("dual graph is not connected".into()));
    }
    let mut steps = Vec::new();
    let mut c = end;
    while c != start {
        let (p, step) = prev[c].unwrap();
        steps.push(step);
        c = p;
    }
    steps.reverse();
    Ok(steps)
}

/// Path crossing each circle once, ordered along a geodesic from the
/// start-cell representative to its antipode. Tangent directions that run
/// too close to an arrangement vertex (ambiguous crossing order) are
/// rejected and another deterministic seed is tried.
fn geodesic_path(complex: &CellComplex, start: usize) -> Result<Vec<PathStep>> {
    let rep = complex.cells[start].representative;
    let seeds: [[f64; 3]; 6] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.53, 0.72, -0.31],
        [0.91, -0.24, 0.17],
        [-0.37, 0.44, 0.82],
    ];
    'seed: for seed in seeds {
        let proj = seed[0] * rep[0] + seed[1] * rep[1] + seed[2] * rep[2];
        let mut w = [seed[0] - rep[0] * proj, seed[1] - rep[1] * proj, seed[2] - rep[2] * proj];
        let nw = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if nw < 1e-6 {
            continue;
        }
        w = [w[0] / nw, w[1] / nw, w[2] / nw];
        // x(s) = rep cos s + w sin s crosses circle i where fr cos s = -fw sin s
        let mut crossings: Vec<(f64, usize, bool)> = Vec::new();
        for (i, c) in complex.arrangement.circles.iter().enumerate() {
            let fr = c.normal[0] * rep[0] + c.normal[1] * rep[1] + c.normal[2] * rep[2];
            let fw = c.normal[0] * w[0] + c.normal[1] * w[1] + c.normal[2] * w[2];
            let mut s = fr.atan2(-fw);
            if s <= 0.0 {
                s += std::f64::consts::PI;
            }
            if s >= std::f64::consts::PI {
                s -= std::f64::consts::PI;
            }
            crossings.push((s, i, fr > 0.0));
        }
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in crossings.windows(2) {
            if pair[1].0 - pair[0].0 < 1e-7 {
                continue 'seed;
            }
        }
        return Ok(crossings.into_iter().map(|(_, i, plus)| (i, plus)).collect());
    }
    Err(MtlzError::DegenerateArrangement(
        "no geodesic with well-separated crossings found".into(),
    ))
}

fn product_along(
    complex: &CellComplex,
    gammas: &BTreeMap<EdgeKey, f64>,
    n_states: usize,
    steps: &[PathStep],
) -> CMat {
    let mut u = CMat::identity(n_states, n_states);
    for &(circle, leaves_plus) in steps {
        let edge = complex.arrangement.circles[circle].edge;
        let s = connecting_matrix(n_states, edge, gammas[&edge], leaves_plus);
        u = s * u;
    }
    u
}

fn probabilities(u: &CMat) -> Vec<Vec<f64>> {
    let n = u.nrows();
    (0..n)
        .map(|a| (0..n).map(|b| u[(a, b)].norm_sqr()).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterResult {
    pub start_cell: usize,
    pub end_cell: usize,
    pub probabilities: Vec<Vec<f64>>,
    /// Largest entrywise difference between the probabilities computed
    /// along independent paths.
    pub path_independence_defect: f64,
    pub path: Vec<PathStep>,
}

/// Ordered connecting-matrix product from a start cell to its antipode,
/// cross-checked along three different paths.
pub fn scattering_product(
    complex: &CellComplex,
    gammas: &BTreeMap<EdgeKey, f64>,
    n_states: usize,
    start_cell: usize,
) -> Result<ScatterResult> {
    let end = complex.antipode[start_cell];
    let path_a = dual_path(complex, start_cell, end, false)?;
    let path_b = dual_path(complex, start_cell, end, true)?;
    let path_c = geodesic_path(complex, start_cell)?;
    let pa = probabilities(&product_along(complex, gammas, n_states, &path_a));
    let pb = probabilities(&product_along(complex, gammas, n_states, &path_b));
    let pc = probabilities(&product_along(complex, gammas, n_states, &path_c));
    let mut defect = 0.0f64;
    for a in 0..n_states {
        for b in 0..n_states {
            defect = defect.max((pa[a][b] - pb[a][b]).abs());
            defect = defect.max((pa[a][b] - pc[a][b]).abs());
        }
    }
    if defect > 1e-12 {
        return Err(MtlzError::Integrability(format!(
            "path dependence {defect:.3e} in the scattering product \
             (connecting-matrix convention inconsistent)"
        )));
    }
    Ok(ScatterResult {
        start_cell,
        end_cell: end,
        probabilities: pa,
        path_independence_defect: defect,
        path: path_a,
    })
}

/// A zero-pattern class of probability matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusType {
    pub half_zeros: usize,
    pub column_distribution: Vec<usize>,
    pub count: usize,
    pub representative_cell: usize,
    pub symbolic: SymbolicMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellCensus {
    pub types: Vec<CensusType>,
    /// Index into `types` per cell.
    pub type_of_cell: Vec<usize>,
    /// Symbolic matrix per cell.
    pub symbolic: Vec<SymbolicMatrix>,
    /// Numeric rendering at the working gammas, per cell.
    pub numeric: Vec<Vec<Vec<f64>>>,
}

impl CellCensus {
    pub fn census_key(&self) -> Vec<(usize, Vec<usize>)> {
        self.types
            .iter()
            .map(|t| (t.half_zeros, t.column_distribution.clone()))
            .collect()
    }
}

/// Compute the probability matrix of every cell, fit all entries to
/// monomials in the per-direction symbols, and bucket cells by zero
/// pattern. `direction` maps each edge to its symbol index 0..2.
pub fn classify_all_cells(
    complex: &CellComplex,
    n_states: usize,
    direction: &BTreeMap<EdgeKey, usize>,
    working_gammas: &BTreeMap<EdgeKey, f64>,
) -> Result<CellCensus> {
    // Three fixed generic evaluation points for the monomial fit.
    let p_sets: [[f64; 3]; 3] = [
        [0.37, 0.52, 0.18],
        [0.71, 0.29, 0.44],
        [0.16, 0.83, 0.61],
    ];
    let gamma_sets: Vec<BTreeMap<EdgeKey, f64>> = p_sets
        .iter()
        .map(|ps| {
            direction
                .iter()
                .map(|(&e, &d)| (e, -(ps[d].ln()) / (2.0 * std::f64::consts::PI)))
                .collect()
        })
        .collect();
    let cands = candidates(3);

    let n_cells = complex.n_cells();
    let mut symbolic: Vec<Option<SymbolicMatrix>> = vec![None; n_cells];
    let mut numeric: Vec<Option<Vec<Vec<f64>>>> = vec![None; n_cells];

    for cell in 0..n_cells {
        if symbolic[cell].is_some() {
            continue;
        }
        let evals: Vec<Vec<Vec<f64>>> = gamma_sets
            .iter()
            .map(|gs| scattering_product(complex, gs, n_states, cell).map(|r| r.probabilities))
            .collect::<Result<_>>()?;
        let actual = scattering_product(complex, working_gammas, n_states, cell)?;
        let mut entries = vec![vec![Entry::Zero; n_states]; n_states];
        for a in 0..n_states {
            for b in 0..n_states {
                let values: Vec<f64> = evals.iter().map(|p| p[a][b]).collect();
                entries[a][b] = fit_entry(&values, &p_sets, &cands);
            }
        }
        let sym = SymbolicMatrix { n: n_states, entries };
        // Antipodal start cells produce the same probability matrix; assign
        // both at once.
        let anti = complex.antipode[cell];
        symbolic[cell] = Some(sym.clone());
        numeric[cell] = Some(actual.probabilities.clone());
        if symbolic[anti].is_none() {
            symbolic[anti] = Some(sym);
            numeric[anti] = Some(actual.probabilities);
        }
    }

    let symbolic: Vec<SymbolicMatrix> = symbolic.into_iter().map(Option::unwrap).collect();
    let numeric: Vec<Vec<Vec<f64>>> = numeric.into_iter().map(Option::unwrap).collect();

    let mut type_index: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    let mut types: Vec<CensusType> = Vec::new();
    let mut type_of_cell = vec![usize::MAX; n_cells];
    for (cell, sym) in symbolic.iter().enumerate() {
        if sym.has_unmatched() {
            return Err(MtlzError::Integrability(format!(
                "cell {cell}: an entry fits no monomial of degree <= 3"
            )));
        }
        let key = (sym.half_zeros(), sym.column_zero_distribution());
        let idx = *type_index.entry(key.clone()).or_insert_with(|| {
            types.push(CensusType {
                half_zeros: key.0,
                column_distribution: key.1.clone(),
                count: 0,
                representative_cell: cell,
                symbolic: sym.clone(),
            });
            types.len() - 1
        });
        types[idx].count += 1;
        type_of_cell[cell] = idx;
    }
    types.sort_by(|a, b| {
        (a.half_zeros, &a.column_distribution).cmp(&(b.half_zeros, &b.column_distribution))
    });
    let mut remap = BTreeMap::new();
    for (new_idx, t) in types.iter().enumerate() {
        remap.insert((t.half_zeros, t.column_distribution.clone()), new_idx);
    }
    for (cell, sym) in symbolic.iter().enumerate() {
        type_of_cell[cell] = remap[&(sym.half_zeros(), sym.column_zero_distribution())];
    }

    Ok(CellCensus { types, type_of_cell, symbolic, numeric })
}

/// Kronecker product of two probability matrices.
pub fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (na, nb) = (a.len(), b.len());
    let n = na * nb;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Two-level crossing probability matrix with survival probability p.
pub fn lz_pair_matrix(p: f64) -> Vec<Vec<f64>> {
    vec![vec![p, 1.0 - p], vec![1.0 - p, p]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{build_arrangement, enumerate_cells};
    use crate::family::{build_cube, CubeParams};
    use approx::assert_abs_diff_eq;

    fn cube_setup(
        taus: [f64; 3],
        gammas: [f64; 3],
    ) -> (CellComplex, BTreeMap<EdgeKey, f64>, BTreeMap<EdgeKey, usize>) {
        let fam = build_cube(&CubeParams::new(taus, gammas)).unwrap();
        let complex = enumerate_cells(&build_arrangement(&fam).unwrap()).unwrap();
        let gmap = fam.gamma.clone();
        let dirs = fam
            .gamma
            .keys()
            .map(|&(a, b)| ((a, b), ((a ^ b) as f64).log2() as usize))
            .collect();
        (complex, gmap, dirs)
    }

    #[test]
    fn stokes_phase_small_gamma_limit() {
        let g = 1e-6;
        let expected =
            std::f64::consts::FRAC_PI_4 + g * 0.577_215_664_901_532_9 + g * (g.ln() - 1.0);
        assert_abs_diff_eq!(stokes_phase(g), expected, epsilon = 1e-9);
    }

    #[test]
    fn connecting_matrix_is_unitary() {
        let s = connecting_matrix(4, (1, 3), 0.27, true);
        let prod = &s * s.adjoint();
        assert!((prod - CMat::identity(4, 4)).norm() < 1e-13);
    }

    #[test]
    fn cube_paths_agree_and_probabilities_are_stochastic() {
        let (complex, gammas, _) = cube_setup([0.5, 0.3, 0.4], [0.12, 0.2, 0.3]);
        for cell in [0usize, 17, 45, 80] {
            let r = scattering_product(&complex, &gammas, 8, cell).unwrap();
            assert!(r.path_independence_defect < 1e-12);
            for a in 0..8 {
                let row: f64 = r.probabilities[a].iter().sum();
                assert_abs_diff_eq!(row, 1.0, epsilon = 1e-12);
                for b in 0..8 {
                    assert_abs_diff_eq!(
                        r.probabilities[a][b],
                        r.probabilities[b][a],
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn antipodal_start_cells_share_probabilities() {
        let (complex, gammas, _) = cube_setup([0.5, 0.3, 0.4], [0.12, 0.2, 0.3]);
        for cell in [3usize, 29, 64] {
            let r1 = scattering_product(&complex, &gammas, 8, cell).unwrap();
            let r2 = scattering_product(&complex, &gammas, 8, complex.antipode[cell]).unwrap();
            let mut worst = 0.0f64;
            for a in 0..8 {
                for b in 0..8 {
                    worst = worst.max((r1.probabilities[a][b] - r2.probabilities[a][b]).abs());
                }
            }
            assert!(worst < 1e-12, "antipodal mismatch {worst}");
        }
    }

    #[test]
    fn all_positive_census_types() {
        let (complex, gammas, dirs) = cube_setup([0.5, 0.3, 0.4], [0.12, 0.2, 0.3]);
        let census = classify_all_cells(&complex, 8, &dirs, &gammas).unwrap();
        let key = census.census_key();
        let expected: Vec<(usize, Vec<usize>)> = vec![
            (0, vec![0; 8]),
            (6, vec![3, 3, 1, 1, 1, 1, 1, 1]),
            (8, vec![2; 8]),
            (11, vec![4, 4, 3, 3, 2, 2, 2, 2]),
            (12, vec![3; 8]),
            (12, vec![4, 4, 3, 3, 3, 3, 2, 2]),
        ];
        assert_eq!(key, expected);
        let total: usize = census.types.iter().map(|t| t.count).sum();
        assert_eq!(total, 98);
    }

    #[test]
    fn one_negative_census_contains_the_sixteen_zero_type() {
        let (complex, gammas, dirs) = cube_setup([-0.5, 0.8, 0.7], [0.12, 0.2, 0.3]);
        let census = classify_all_cells(&complex, 8, &dirs, &gammas).unwrap();
        let halves: Vec<usize> = census.types.iter().map(|t| t.half_zeros).collect();
        assert!(halves.contains(&16));
        let t16 = census.types.iter().find(|t| t.half_zeros == 16).unwrap();
        assert_eq!(t16.column_distribution, vec![4; 8]);
        assert_eq!(t16.count, 4);
    }
}
