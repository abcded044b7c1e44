//! Assembling concrete Hamiltonian matrices from family data and checking
//! the operator-level consistency conditions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MtlzError, Result};
use crate::family::MtlzFamily;

/// The matrix data of a family: H_j(x) = sum_k B_{kj} x^k + A_j with all
/// B_{kj} diagonal in the diabatic basis and A_j holding the couplings.
#[derive(Debug, Clone)]
pub struct HamiltonianFamily {
    pub n_states: usize,
    pub dimension: usize,
    /// b[k][j] = diagonal of B_{kj} (symmetric in k, j).
    pub b_diag: Vec<Vec<Vec<f64>>>,
    /// a[j] = symmetric coupling matrix of H_j.
    pub a: Vec<DMatrix<f64>>,
    /// Set when the source family failed validation.
    pub validated: bool,
}

impl HamiltonianFamily {
    /// H_j evaluated at a time-vector x.
    pub fn h_j(&self, j: usize, x: &[f64]) -> DMatrix<f64> {
        let mut h = self.a[j].clone();
        for a in 0..self.n_states {
            let mut d = 0.0;
            for k in 0..self.dimension {
                d += self.b_diag[k][j][a] * x[k];
            }
            h[(a, a)] += d;
        }
        h
    }

    /// Frobenius scale of the family at x, for relative residuals.
    pub fn scale_at(&self, x: &[f64]) -> f64 {
        (0..self.dimension)
            .map(|j| self.h_j(j, x).norm())
            .fold(1e-300f64, f64::max)
    }
}

/// Build the Hamiltonian matrices of a validated family.
pub fn assemble(family: &MtlzFamily) -> HamiltonianFamily {
    let n = family.n_states();
    let m = family.dimension;
    let mut b_diag = vec![vec![vec![0.0; n]; m]; m];
    for v in 0..n {
        for k in 0..m {
            for j in 0..m {
                b_diag[k][j][v] = family.lambda[v].0[k][j];
            }
        }
    }
    let mut a = vec![DMatrix::<f64>::zeros(n, n); m];
    for (&(u, v), form) in &family.coupling {
        for j in 0..m {
            a[j][(u, v)] = form.0[j];
            a[j][(v, u)] = form.0[j];
        }
    }
    HamiltonianFamily { n_states: n, dimension: m, b_diag, a, validated: true }
}

/// Residuals of the pairwise commutation and symmetric-slope conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrabilityResiduals {
    /// max over pairs of |[H_i(x), H_j(x)]|_F.
    pub commutator_norm: f64,
    /// max over pairs of |B_{ji} - B_{ij}|_F plus the mixed commutators
    /// [B_{sj}, A_k] - [B_{sk}, A_j] and [A_j, A_k].
    pub curl_norm: f64,
    /// Scale used to normalize the relative residuals.
    pub scale: f64,
}

impl IntegrabilityResiduals {
    pub fn relative(&self) -> (f64, f64) {
        (self.commutator_norm / self.scale, self.curl_norm / self.scale)
    }
}

pub fn integrability_residuals(hf: &HamiltonianFamily, x: &[f64]) -> IntegrabilityResiduals {
    let m = hf.dimension;
    let mut comm: f64 = 0.0;
    let mut curl: f64 = 0.0;
    let hs: Vec<DMatrix<f64>> = (0..m).map(|j| hf.h_j(j, x)).collect();
    for i in 0..m {
        for j in (i + 1)..m {
            let c = &hs[i] * &hs[j] - &hs[j] * &hs[i];
            comm = comm.max(c.norm());
        }
    }
    // dH_i/dx^j - dH_j/dx^i = B_{ji} - B_{ij}, checked per diagonal entry.
    for i in 0..m {
        for j in 0..m {
            let d: f64 = (0..hf.n_states)
                .map(|a| (hf.b_diag[j][i][a] - hf.b_diag[i][j][a]).powi(2))
                .sum::<f64>()
                .sqrt();
            curl = curl.max(d);
        }
    }
    // Mixed conditions term by term: [B_{sj}, A_k] = [B_{sk}, A_j] and
    // [A_j, A_k] = 0. Diagonal B makes [B, A]_{uv} = (B_u - B_v) A_{uv}.
    for s in 0..m {
        for j in 0..m {
            for k in (j + 1)..m {
                let mut worst = 0.0f64;
                for u in 0..hf.n_states {
                    for v in 0..hf.n_states {
                        let lhs = (hf.b_diag[s][j][u] - hf.b_diag[s][j][v]) * hf.a[k][(u, v)];
                        let rhs = (hf.b_diag[s][k][u] - hf.b_diag[s][k][v]) * hf.a[j][(u, v)];
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
                curl = curl.max(worst);
            }
        }
    }
    for j in 0..m {
        for k in (j + 1)..m {
            let c = &hf.a[j] * &hf.a[k] - &hf.a[k] * &hf.a[j];
            curl = curl.max(c.norm());
        }
    }
    IntegrabilityResiduals { commutator_norm: comm, curl_norm: curl, scale: hf.scale_at(x) }
}

/// Linear time path x(t) = v t + eps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePath {
    pub velocity: Vec<f64>,
    pub offset: Vec<f64>,
}

impl TimePath {
    pub fn new(velocity: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        if velocity.iter().all(|&v| v == 0.0) {
            return Err(MtlzError::Domain("time path needs a nonzero velocity".into()));
        }
        if velocity.len() != offset.len() {
            return Err(MtlzError::DimensionMismatch("velocity/offset lengths differ".into()));
        }
        Ok(Self { velocity, offset })
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        self.velocity
            .iter()
            .zip(&self.offset)
            .map(|(v, e)| v * t + e)
            .collect()
    }
}

/// One-parameter restriction H(t) = A + B t of a family along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHamiltonian {
    pub constant: DMatrix<f64>,
    pub slope: DMatrix<f64>,
}

impl LinearHamiltonian {
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        &self.constant + &self.slope * t
    }

    pub fn n(&self) -> usize {
        self.constant.nrows()
    }

    /// Overall magnitude used for relative thresholds.
    pub fn scale(&self) -> f64 {
        self.constant.norm().max(self.slope.norm()).max(1e-300)
    }
}

/// H(t) = v^j H_j(x(t)): slope v^j v^k B_{kj}, offset v^j (B_{kj} eps^k + A_j).
pub fn restrict(hf: &HamiltonianFamily, path: &TimePath) -> Result<LinearHamiltonian> {
    if path.velocity.len() != hf.dimension {
        return Err(MtlzError::DimensionMismatch(format!(
            "path dimension {} vs family dimension {}",
            path.velocity.len(),
            hf.dimension
        )));
    }
    let n = hf.n_states;
    let mut slope = DMatrix::<f64>::zeros(n, n);
    let mut constant = DMatrix::<f64>::zeros(n, n);
    for j in 0..hf.dimension {
        let vj = path.velocity[j];
        if vj != 0.0 {
            constant += &hf.a[j] * vj;
        }
        for k in 0..hf.dimension {
            for a in 0..n {
                slope[(a, a)] += path.velocity[j] * path.velocity[k] * hf.b_diag[k][j][a];
                constant[(a, a)] += path.velocity[j] * path.offset[k] * hf.b_diag[k][j][a];
            }
        }
    }
    Ok(LinearHamiltonian { constant, slope })
}

/// Number of vertex pairs with no direct coupling.
pub fn zero_coupling_count(family: &MtlzFamily) -> usize {
    let n = family.n_states();
    n * (n - 1) / 2 - family.graph.n_edges()
}

/// Separable N-spin model: H = sum_i (beta_i t + eps_i) sz_i + g_i sx_i,
/// returned as the (constant, slope) pair of 2^N x 2^N matrices.
pub fn separable_spin_hamiltonian(betas: &[f64], gs: &[f64], epss: &[f64]) -> LinearHamiltonian {
    let n_spins = betas.len();
    assert_eq!(gs.len(), n_spins);
    assert_eq!(epss.len(), n_spins);
    let n = 1usize << n_spins;
    let mut constant = DMatrix::<f64>::zeros(n, n);
    let mut slope = DMatrix::<f64>::zeros(n, n);
    let spin = |v: usize, j: usize| if v & (1 << j) == 0 { 1.0 } else { -1.0 };
    for v in 0..n {
        for j in 0..n_spins {
            constant[(v, v)] += epss[j] * spin(v, j);
            slope[(v, v)] += betas[j] * spin(v, j);
            let w = v ^ (1 << j);
            constant[(v, w)] += gs[j];
        }
    }
    LinearHamiltonian { constant, slope }
}

/// Gamma-magnet time path (t, eps): velocity along the first time direction,
/// offset eps along the second.
pub fn two_time_path(eps: f64) -> TimePath {
    TimePath::new(vec![1.0, 0.0], vec![0.0, eps]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{
        build_cube, build_gamma_magnet, build_square, CubeParams, SquareParams,
    };
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_assembles_with_zeros_on_non_edges() {
        let fam = build_square(&SquareParams::new([1.0, 0.3], [0.4, 1.1], 0.25, 1, 0.9, 0.7))
            .unwrap();
        let hf = assemble(&fam);
        let h = hf.h_j(0, &[0.7, 0.2]);
        assert_eq!(h[(0, 2)], 0.0);
        assert_eq!(h[(1, 3)], 0.0);
        assert!(h[(0, 1)].abs() > 0.0);
        assert_abs_diff_eq!((&h - &h.transpose()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn residuals_small_for_built_families_and_scale_with_perturbation() {
        let fam = build_square(&SquareParams::new([1.0, 0.3], [0.4, 1.1], 0.25, 1, 0.9, 0.7))
            .unwrap();
        let hf = assemble(&fam);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let r = integrability_residuals(&hf, &x);
            let (c, k) = r.relative();
            assert!(c < 1e-12 && k < 1e-12, "commutator {c} curl {k}");
        }
        // perturb one coupling by 1e-3: commutator grows to that order
        let mut hf2 = hf.clone();
        hf2.a[0][(1, 2)] += 1e-3;
        hf2.a[0][(2, 1)] += 1e-3;
        let r = integrability_residuals(&hf2, &[0.3, -0.8]);
        let (c, _) = r.relative();
        assert!(c > 1e-5 && c < 1e-1, "commutator {c}");
    }

    #[test]
    fn m1_restriction_is_vacuous() {
        // A single Hamiltonian has no pairs to check.
        let fam = build_square(&SquareParams::new([1.0, 0.0], [0.0, 1.0], 0.0, 1, 1.0, 1.0))
            .unwrap();
        let mut hf = assemble(&fam);
        hf.dimension = 1;
        hf.a.truncate(1);
        let r = integrability_residuals(&hf, &[0.5]);
        assert_eq!(r.commutator_norm, 0.0);
    }

    #[test]
    fn restrict_matches_direct_evaluation() {
        let fam = build_cube(&CubeParams::new([0.5, 0.3, 0.4], [0.12, 0.2, 0.3])).unwrap();
        let hf = assemble(&fam);
        let path = TimePath::new(vec![0.3, -0.7, 1.1], vec![0.05, 0.0, -0.4]).unwrap();
        let lh = restrict(&hf, &path).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t: f64 = rng.gen_range(-3.0..3.0);
            let x = path.at(t);
            let mut direct = DMatrix::<f64>::zeros(8, 8);
            for j in 0..3 {
                direct += hf.h_j(j, &x) * path.velocity[j];
            }
            assert!((lh.at(t) - direct).norm() < 1e-12 * lh.scale().max(1.0));
        }
    }

    #[test]
    fn axis_path_returns_single_hamiltonian() {
        let fam = build_square(&SquareParams::new([1.0, 0.3], [0.4, 1.1], 0.25, 1, 0.9, 0.7))
            .unwrap();
        let hf = assemble(&fam);
        let path = TimePath::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let lh = restrict(&hf, &path).unwrap();
        let t = 0.37;
        assert!((lh.at(t) - hf.h_j(0, &[t, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn zero_coupling_counts() {
        let sq = build_square(&SquareParams::new([1.0, 0.3], [0.4, 1.1], 0.25, 1, 0.9, 0.7))
            .unwrap();
        assert_eq!(zero_coupling_count(&sq), 2);
        let cube = build_cube(&CubeParams::new([0.5, 0.3, 0.4], [0.12, 0.2, 0.3])).unwrap();
        assert_eq!(zero_coupling_count(&cube), 16);
        let gm4 = build_gamma_magnet(&[0.5, 1.7, 4.1, 7.1], &[0.14, 0.15, 0.17, 0.15]).unwrap();
        assert_eq!(zero_coupling_count(&gm4), 88);
    }

    #[test]
    fn gamma_magnet_matches_pauli_construction() {
        // Check H_1(t, eps) entries against the explicit string operators.
        let betas = [0.5, 1.7, 4.1];
        let gs = [0.14, 0.15, 0.17];
        let eps = 1.0;
        let fam = build_gamma_magnet(&betas, &gs).unwrap();
        let hf = assemble(&fam);
        let lh = restrict(&hf, &two_time_path(eps)).unwrap();
        let n = 8usize;
        let spin = |v: usize, j: usize| if v & (1 << j) == 0 { 1.0 } else { -1.0 };
        let t = 0.63;
        let h = lh.at(t);
        for v in 0..n {
            let parity: f64 = (0..3).map(|j| spin(v, j)).product();
            let want: f64 =
                eps * parity + t * (0..3).map(|j| betas[j] * spin(v, j)).sum::<f64>();
            assert_abs_diff_eq!(h[(v, v)], want, epsilon = 1e-13);
            for j in 0..3 {
                let w = v ^ (1 << j);
                let string: f64 = (0..j).map(|k| spin(v, k)).product();
                assert_abs_diff_eq!(h[(v, w)], gs[j] * string, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gauge_shift_moves_all_eigenvalues_equally() {
        let fam = build_square(&SquareParams::new([1.0, 0.3], [0.4, 1.1], 0.25, 1, 0.9, 0.7))
            .unwrap();
        let hf = assemble(&fam);
        let path = TimePath::new(vec![1.0, 0.2], vec![0.0, 0.5]).unwrap();
        let lh = restrict(&hf, &path).unwrap();
        let (beta, e) = (0.37, -0.81);
        let shifted = LinearHamiltonian {
            constant: &lh.constant + DMatrix::identity(4, 4) * e,
            slope: &lh.slope + DMatrix::identity(4, 4) * beta,
        };
        let t = 1.3;
        let ev1 = lh.at(t).symmetric_eigenvalues();
        let ev2 = shifted.at(t).symmetric_eigenvalues();
        let mut v1: Vec<f64> = ev1.iter().copied().collect();
        let mut v2: Vec<f64> = ev2.iter().copied().collect();
        v1.sort_by(f64::total_cmp);
        v2.sort_by(f64::total_cmp);
        for (a, b) in v1.iter().zip(&v2) {
            assert_abs_diff_eq!(a + beta * t + e, *b, epsilon = 1e-12);
        }
    }
}
