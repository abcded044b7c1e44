//! Linear and quadratic forms attached to graph data.
//!
//! Each edge carries a coupling 1-form, each vertex a symmetric slope form.
//! The residual operations here measure how far a data set is from
//! satisfying the cycle and commutation conditions of an integrable family.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{MtlzError, Result};
use crate::graph::{edge_key, ConnectivityGraph, Cycle, EdgeKey, FourLoop, LoopClass, Orientation};

/// Real covector with one component per time direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneForm(pub Vec<f64>);

impl OneForm {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|a| a * c).collect())
    }

    pub fn add_scaled(&self, c: f64, other: &OneForm) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + c * b).collect())
    }

    /// Symmetric tensor square u (x) u as a quadratic form.
    pub fn outer(&self) -> QuadraticForm {
        let m = self.dim();
        let mut q = QuadraticForm::zeros(m);
        for i in 0..m {
            for j in 0..m {
                q.0[i][j] = self.0[i] * self.0[j];
            }
        }
        q
    }
}

/// Symmetric bilinear form (slope data of one vertex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm(pub Vec<Vec<f64>>);

impl QuadraticForm {
    pub fn zeros(m: usize) -> Self {
        Self(vec![vec![0.0; m]; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn add_scaled(&self, c: f64, other: &QuadraticForm) -> Self {
        let m = self.dim();
        let mut out = self.clone();
        for i in 0..m {
            for j in 0..m {
                out.0[i][j] += c * other.0[i][j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    pub fn symmetry_defect(&self) -> f64 {
        let m = self.dim();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        worst
    }
}

/// Antisymmetric matrix of wedge coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeBivector(pub Vec<Vec<f64>>);

impl WedgeBivector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![vec![0.0; m]; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn add_scaled(&self, c: f64, other: &WedgeBivector) -> Self {
        let m = self.dim();
        let mut out = self.clone();
        for i in 0..m {
            for j in 0..m {
                out.0[i][j] += c * other.0[i][j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }
}

/// u ^ v with entries u_i v_j - u_j v_i.
pub fn wedge(u: &OneForm, v: &OneForm) -> Result<WedgeBivector> {
    if u.dim() != v.dim() {
        return Err(MtlzError::DimensionMismatch(format!(
            "wedge of {}-form with {}-form",
            u.dim(),
            v.dim()
        )));
    }
    let m = u.dim();
    let mut w = WedgeBivector::zeros(m);
    for i in 0..m {
        for j in 0..m {
            w.0[i][j] = u.0[i] * v.0[j] - u.0[j] * v.0[i];
        }
    }
    Ok(w)
}

/// Division by sqrt(gamma); maps a coupling form to its rescaled form.
pub fn rescale(form: &OneForm, gamma: f64) -> Result<OneForm> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(MtlzError::Domain(format!("rescale needs gamma > 0, got {gamma}")));
    }
    Ok(form.scaled(1.0 / gamma.sqrt()))
}

/// Sum of n_alpha * Abar (x) Abar over the edges of a cycle; the zero matrix
/// exactly when the cycle condition holds.
pub fn cycle_residual(
    cycle: &Cycle,
    forms: &BTreeMap<EdgeKey, OneForm>,
) -> Result<QuadraticForm> {
    let mut dim = None;
    for (edge, _) in cycle.coefficients.iter() {
        let f = forms
            .get(edge)
            .ok_or_else(|| MtlzError::Integrability(format!("no form on edge {edge:?}")))?;
        match dim {
            None => dim = Some(f.dim()),
            Some(m) if m != f.dim() => {
                return Err(MtlzError::DimensionMismatch("mixed form dimensions in cycle".into()))
            }
            _ => {}
        }
    }
    let m = dim.unwrap_or(0);
    let mut acc = QuadraticForm::zeros(m);
    for (edge, &coeff) in cycle.coefficients.iter() {
        if coeff == 0 {
            continue;
        }
        let f = &forms[edge];
        acc = acc.add_scaled(coeff as f64, &f.outer());
    }
    Ok(acc)
}

/// Left side of the two-path commutation condition for the vertex pair
/// (a, b): sum over common neighbors c of sqrt(gamma_ac gamma_bc)
/// Abar^{ac} ^ Abar^{bc}.
pub fn vertex_residual(
    graph: &ConnectivityGraph,
    a: usize,
    b: usize,
    forms: &BTreeMap<EdgeKey, OneForm>,
    gammas: &BTreeMap<EdgeKey, f64>,
) -> Result<WedgeBivector> {
    if a == b {
        return Err(MtlzError::Domain("vertex pair must be distinct".into()));
    }
    let common = graph.common_neighbors(a, b);
    let m = forms.values().next().map(|f| f.dim()).unwrap_or(0);
    let mut acc = WedgeBivector::zeros(m);
    for c in common {
        let ea = edge_key(a, c);
        let eb = edge_key(b, c);
        let fa = forms
            .get(&ea)
            .ok_or_else(|| MtlzError::Integrability(format!("no form on edge {ea:?}")))?;
        let fb = forms
            .get(&eb)
            .ok_or_else(|| MtlzError::Integrability(format!("no form on edge {eb:?}")))?;
        let ga = *gammas
            .get(&ea)
            .ok_or_else(|| MtlzError::Integrability(format!("no gamma on edge {ea:?}")))?;
        let gb = *gammas
            .get(&eb)
            .ok_or_else(|| MtlzError::Integrability(format!("no gamma on edge {eb:?}")))?;
        let w = wedge(fa, fb)?;
        acc = acc.add_scaled((ga * gb).sqrt(), &w);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    Orthogonal,
    PseudoOrthogonal,
}

/// The 2x2 transform relating the far pair of rescaled forms of a 4-loop to
/// the near pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopTransform {
    pub kind: TransformKind,
    /// Rapidity for the pseudo-orthogonal branch, angle for the orthogonal.
    pub angle_or_rapidity: f64,
    pub p_sign: i8,
    pub r_sign: i8,
}

impl LoopTransform {
    /// Hyperbolic loop transform with entries c = p cosh(theta),
    /// s = p sinh(theta).
    pub fn pseudo_orthogonal(rapidity: f64, p_sign: i8) -> Self {
        Self { kind: TransformKind::PseudoOrthogonal, angle_or_rapidity: rapidity, p_sign, r_sign: -1 }
    }

    /// From the tangent tau = tanh(theta), |tau| < 1.
    pub fn from_tangent(tau: f64, p_sign: i8) -> Result<Self> {
        if tau.abs() >= 1.0 || !tau.is_finite() {
            return Err(MtlzError::Domain(format!("rapidity tangent {tau} outside (-1, 1)")));
        }
        Ok(Self::pseudo_orthogonal(tau.atanh(), p_sign))
    }

    pub fn tangent(&self) -> f64 {
        match self.kind {
            TransformKind::PseudoOrthogonal => self.angle_or_rapidity.tanh(),
            TransformKind::Orthogonal => self.angle_or_rapidity.tan(),
        }
    }

    /// (c, s) matrix entries including the overall sign.
    pub fn entries(&self) -> (f64, f64) {
        let p = self.p_sign as f64;
        match self.kind {
            TransformKind::PseudoOrthogonal => {
                (p * self.angle_or_rapidity.cosh(), p * self.angle_or_rapidity.sinh())
            }
            TransformKind::Orthogonal => {
                (p * self.angle_or_rapidity.cos(), p * self.angle_or_rapidity.sin())
            }
        }
    }

    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        let (c, s) = self.entries();
        match self.kind {
            TransformKind::PseudoOrthogonal => [[c, s], [s, c]],
            TransformKind::Orthogonal => [[c, s], [-s, c]],
        }
    }

    /// Apply to a pair of forms.
    pub fn apply(&self, u: &OneForm, v: &OneForm) -> (OneForm, OneForm) {
        let m = self.as_matrix();
        (
            u.scaled(m[0][0]).add_scaled(m[0][1], v),
            u.scaled(m[1][0]).add_scaled(m[1][1], v),
        )
    }
}

/// Outcome of solving the cycle condition on a single square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SquareSolution {
    /// Non-bipartite loop: a one-parameter pseudo-orthogonal family with a
    /// free sign; the template shown has rapidity zero.
    Family(LoopTransform),
    /// Bipartite loop taken as the entire graph: contradictory sign demands.
    NoSolution { reason: String },
}

/// Solve the square cycle condition given the loop orientation, treating a
/// bipartite loop as the entire graph (which is contradictory).
pub fn solve_square_transform(
    four_loop: &FourLoop,
    orientation: &Orientation,
) -> Result<SquareSolution> {
    match four_loop.classify(orientation) {
        LoopClass::Invalid => Err(MtlzError::Domain(
            "loop orientation admits no nonzero forms".into(),
        )),
        LoopClass::NonBipartite => Ok(SquareSolution::Family(LoopTransform::pseudo_orthogonal(0.0, 1))),
        LoopClass::Bipartite => Ok(SquareSolution::NoSolution {
            reason: "bipartite square as an entire graph: the two diagonal-pair conditions \
                     demand opposite correlated signs"
                .into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_four_loops, square_orientation_bipartite, square_orientation_nonbipartite};
    use approx::assert_abs_diff_eq;

    #[test]
    fn wedge_basics() {
        let u = OneForm(vec![1.0, 0.0]);
        let v = OneForm(vec![0.0, 1.0]);
        let w = wedge(&u, &v).unwrap();
        assert_eq!(w.0, vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let z = wedge(&u, &u).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let a = OneForm(vec![2.0, -3.0]);
        let b = OneForm(vec![0.5, 4.0]);
        // 2x2 determinant oracle
        let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
        assert_abs_diff_eq!(wedge(&a, &b).unwrap().0[0][1], det, epsilon = 1e-15);
        assert!(wedge(&u, &OneForm(vec![1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn rescale_round_trip() {
        let a = OneForm(vec![2.0, 0.0]);
        let r = rescale(&a, 4.0).unwrap();
        assert_eq!(r.0, vec![1.0, 0.0]);
        assert_eq!(rescale(&OneForm(vec![0.0, 0.0]), 7.3).unwrap().0, vec![0.0, 0.0]);
        let a = OneForm(vec![0.3, -1.7]);
        let gamma = 2.9;
        let back = rescale(&a, gamma).unwrap().scaled(gamma.sqrt());
        for (x, y) in back.0.iter().zip(&a.0) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
        assert!(rescale(&a, 0.0).is_err());
        assert!(rescale(&a, -1.0).is_err());
    }

    #[test]
    fn rescale_positive_homogeneity() {
        let a = OneForm(vec![1.2, -0.4, 0.9]);
        let c = 1.7;
        let lhs = rescale(&a.scaled(c), c * c * 0.8).unwrap();
        let rhs = rescale(&a, 0.8).unwrap();
        for (x, y) in lhs.0.iter().zip(&rhs.0) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn square_transform_by_loop_class() {
        let (g, nb) = square_orientation_nonbipartite();
        let loops = enumerate_four_loops(&g);
        match solve_square_transform(&loops[0], &nb).unwrap() {
            SquareSolution::Family(t) => {
                assert_eq!(t.kind, TransformKind::PseudoOrthogonal);
                let m = t.as_matrix();
                assert_eq!(m, [[1.0, 0.0], [0.0, 1.0]]);
            }
            SquareSolution::NoSolution { .. } => panic!("expected family"),
        }
        let (_, bp) = square_orientation_bipartite();
        match solve_square_transform(&loops[0], &bp).unwrap() {
            SquareSolution::NoSolution { .. } => {}
            SquareSolution::Family(_) => panic!("bipartite entire square must fail"),
        }
    }

    #[test]
    fn pseudo_orthogonal_unit_determinant() {
        let t = LoopTransform::from_tangent(0.37, -1).unwrap();
        let (c, s) = t.entries();
        assert_abs_diff_eq!(c * c - s * s, 1.0, epsilon = 1e-12);
    }
}
