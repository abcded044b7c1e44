//! Symbolic monomial representation of transition-probability entries in
//! the per-direction survival and flip probabilities p_i, q_i = 1 - p_i.

use serde::{Deserialize, Serialize};

use crate::error::{MtlzError, Result};

/// A product of powers of p_1..p_3 and q_1..q_3 with unit coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    /// Exponents (p1, p2, p3, q1, q2, q3).
    pub exps: [u8; 6],
}

impl Monomial {
    pub fn degree(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    pub fn eval(&self, p: &[f64; 3]) -> f64 {
        let mut v = 1.0;
        for i in 0..3 {
            v *= p[i].powi(self.exps[i] as i32);
            v *= (1.0 - p[i]).powi(self.exps[i + 3] as i32);
        }
        v
    }

    /// Relabel the three symbol indices by a permutation.
    pub fn permuted(&self, perm: &[usize; 3]) -> Self {
        let mut exps = [0u8; 6];
        for i in 0..3 {
            exps[i] = self.exps[perm[i]];
            exps[i + 3] = self.exps[perm[i] + 3];
        }
        Self { exps }
    }
}

impl std::fmt::Display for Monomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut any = false;
        for (i, &e) in self.exps.iter().enumerate() {
            let sym = ["p1", "p2", "p3", "q1", "q2", "q3"][i];
            for _ in 0..e {
                if any {
                    write!(f, " ")?;
                }
                write!(f, "{sym}")?;
                any = true;
            }
        }
        if !any {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// One entry of a symbolic probability matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entry {
    Zero,
    Mono(Monomial),
    /// Numeric value that fit no monomial of degree <= 3.
    Unmatched,
}

impl Entry {
    pub fn eval(&self, p: &[f64; 3]) -> Option<f64> {
        match self {
            Entry::Zero => Some(0.0),
            Entry::Mono(m) => Some(m.eval(p)),
            Entry::Unmatched => None,
        }
    }
}

/// All candidate monomials of total degree <= `max_degree`.
pub fn candidates(max_degree: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    let md = max_degree as u8;
    for e0 in 0..=md {
        for e1 in 0..=md {
            for e2 in 0..=md {
                for e3 in 0..=md {
                    for e4 in 0..=md {
                        for e5 in 0..=md {
                            let exps = [e0, e1, e2, e3, e4, e5];
                            if exps.iter().map(|&e| e as usize).sum::<usize>() <= max_degree {
                                out.push(Monomial { exps });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Match numeric values observed at several symbol evaluations to a single
/// monomial; evaluations must be generic enough to separate candidates.
pub fn fit_entry(values: &[f64], p_sets: &[[f64; 3]], cands: &[Monomial]) -> Entry {
    debug_assert_eq!(values.len(), p_sets.len());
    if values.iter().all(|v| v.abs() < 1e-9) {
        return Entry::Zero;
    }
    'cand: for m in cands {
        for (v, p) in values.iter().zip(p_sets) {
            if (v - m.eval(p)).abs() > 1e-8 {
                continue 'cand;
            }
        }
        return Entry::Mono(*m);
    }
    Entry::Unmatched
}

/// Symbolic N x N probability matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicMatrix {
    pub n: usize,
    pub entries: Vec<Vec<Entry>>,
}

impl SymbolicMatrix {
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| self.entries[a][b] == self.entries[b][a]))
    }

    pub fn has_unmatched(&self) -> bool {
        self.entries
            .iter()
            .any(|row| row.iter().any(|e| matches!(e, Entry::Unmatched)))
    }

    pub fn max_degree(&self) -> usize {
        self.entries
            .iter()
            .flat_map(|row| row.iter())
            .map(|e| match e {
                Entry::Mono(m) => m.degree(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// All diagonal entries equal to this monomial.
    pub fn constant_diagonal(&self) -> Option<Monomial> {
        let first = match self.entries[0][0] {
            Entry::Mono(m) => m,
            _ => return None,
        };
        for a in 1..self.n {
            if self.entries[a][a] != Entry::Mono(first) {
                return None;
            }
        }
        Some(first)
    }

    /// Zeros in the strict lower triangle (half the total zero count).
    pub fn half_zeros(&self) -> usize {
        let mut count = 0;
        for a in 0..self.n {
            for b in 0..a {
                if self.entries[a][b] == Entry::Zero {
                    count += 1;
                }
            }
        }
        count
    }

    /// Per-column zero counts sorted in descending order.
    pub fn column_zero_distribution(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = (0..self.n)
            .map(|b| (0..self.n).filter(|&a| self.entries[a][b] == Entry::Zero).count())
            .collect();
        cols.sort_unstable_by(|x, y| y.cmp(x));
        cols
    }

    /// Exact row-sum identity: every row must sum to 1 after substituting
    /// q_i = 1 - p_i, checked with integer polynomial arithmetic.
    pub fn rows_sum_to_one(&self) -> Result<bool> {
        for a in 0..self.n {
            // Dense integer coefficients over p1^i p2^j p3^k.
            let mut coeff = [[[0i64; 8]; 8]; 8];
            for b in 0..self.n {
                match &self.entries[a][b] {
                    Entry::Zero => {}
                    Entry::Unmatched => {
                        return Err(MtlzError::Integrability(format!(
                            "row {a} contains an unmatched entry"
                        )))
                    }
                    Entry::Mono(m) => {
                        // expand q_i^e = (1 - p_i)^e
                        let mut terms: Vec<(i64, [usize; 3])> = vec![(1, [0, 0, 0])];
                        for i in 0..3 {
                            let base = m.exps[i] as usize;
                            for t in &mut terms {
                                t.1[i] += base;
                            }
                            let qe = m.exps[i + 3] as usize;
                            for _ in 0..qe {
                                let mut next = Vec::with_capacity(terms.len() * 2);
                                for &(c, e) in &terms {
                                    next.push((c, e));
                                    let mut e2 = e;
                                    e2[i] += 1;
                                    next.push((-c, e2));
                                }
                                terms = next;
                            }
                        }
                        for (c, e) in terms {
                            coeff[e[0]][e[1]][e[2]] += c;
                        }
                    }
                }
            }
            coeff[0][0][0] -= 1;
            let ok = coeff
                .iter()
                .flat_map(|p| p.iter())
                .flat_map(|q| q.iter())
                .all(|&c| c == 0);
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Check equality with `target` after relabeling the levels by a
    /// permutation and the symbol indices by an exchange; returns the pair
    /// of permutations on success.
    pub fn matches_up_to_relabeling(
        &self,
        target: &SymbolicMatrix,
    ) -> Option<([usize; 3], Vec<usize>)> {
        if self.n != target.n {
            return None;
        }
        let n = self.n;
        let index_perms: [[usize; 3]; 6] =
            [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for sym in index_perms {
            let remapped: Vec<Vec<Entry>> = (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| match self.entries[a][b] {
                            Entry::Mono(m) => Entry::Mono(m.permuted(&sym)),
                            e => e,
                        })
                        .collect()
                })
                .collect();
            let mut pi = vec![usize::MAX; n];
            let mut used = vec![false; n];
            if assign(0, &mut pi, &mut used, &remapped, target) {
                return Some((sym, pi));
            }
        }
        None
    }
}

fn assign(
    a: usize,
    pi: &mut Vec<usize>,
    used: &mut Vec<bool>,
    remapped: &[Vec<Entry>],
    target: &SymbolicMatrix,
) -> bool {
    let n = target.n;
    if a == n {
        return true;
    }
    for cand in 0..n {
        if used[cand] {
            continue;
        }
        let mut ok = remapped[cand][cand] == target.entries[a][a];
        if ok {
            for b in 0..a {
                if remapped[cand][pi[b]] != target.entries[a][b]
                    || remapped[pi[b]][cand] != target.entries[b][a]
                {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            pi[a] = cand;
            used[cand] = true;
            if assign(a + 1, pi, used, remapped, target) {
                return true;
            }
            used[cand] = false;
            pi[a] = usize::MAX;
        }
    }
    false
}

fn m(spec: &str) -> Entry {
    if spec == "0" {
        return Entry::Zero;
    }
    let mut exps = [0u8; 6];
    for tok in spec.split_whitespace() {
        let idx = match tok {
            "p1" => 0,
            "p2" => 1,
            "p3" => 2,
            "q1" => 3,
            "q2" => 4,
            "q3" => 5,
            _ => panic!("bad monomial token {tok}"),
        };
        exps[idx] += 1;
    }
    Entry::Mono(Monomial { exps })
}

/// The published six-zero representative matrix.
pub fn reference_six_zeros() -> SymbolicMatrix {
    let rows = [
        ["p1 p2 p3", "p2 p3 q1", "p3 q2", "0", "p2 q3", "0", "q2 q3", "0"],
        ["p2 p3 q1", "p1 p2 p3", "0", "p3 q2", "0", "p2 q3", "0", "q2 q3"],
        ["p3 q2", "0", "p1 p2 p3", "p2 p3 q1", "p1 q2 q3", "q1 q2 q3", "p1 p2 q3", "p2 q1 q3"],
        ["0", "p3 q2", "p2 p3 q1", "p1 p2 p3", "q1 q2 q3", "p1 q2 q3", "p2 q1 q3", "p1 p2 q3"],
        ["p2 q3", "0", "p1 q2 q3", "q1 q2 q3", "p1 p2 p3", "p2 p3 q1", "p1 p3 q2", "p3 q1 q2"],
        ["0", "p2 q3", "q1 q2 q3", "p1 q2 q3", "p2 p3 q1", "p1 p2 p3", "p3 q1 q2", "p1 p3 q2"],
        ["q2 q3", "0", "p1 p2 q3", "p2 q1 q3", "p1 p3 q2", "p3 q1 q2", "p1 p2 p3", "p2 p3 q1"],
        ["0", "q2 q3", "p2 q1 q3", "p1 p2 q3", "p3 q1 q2", "p1 p3 q2", "p2 p3 q1", "p1 p2 p3"],
    ];
    SymbolicMatrix {
        n: 8,
        entries: rows.iter().map(|r| r.iter().map(|s| m(s)).collect()).collect(),
    }
}

/// The published eight-zero representative matrix.
pub fn reference_eight_zeros() -> SymbolicMatrix {
    let rows = [
        ["p1 p2 p3", "p2 p3 q1", "p1 p3 q2", "p3 q1 q2", "p2 q3", "0", "q2 q3", "0"],
        ["p2 p3 q1", "p1 p2 p3", "p3 q1 q2", "p1 p3 q2", "0", "p2 q3", "0", "q2 q3"],
        ["p1 p3 q2", "p3 q1 q2", "p1 p2 p3", "p2 p3 q1", "q2 q3", "0", "p2 q3", "0"],
        ["p3 q1 q2", "p1 p3 q2", "p2 p3 q1", "p1 p2 p3", "0", "q2 q3", "0", "p2 q3"],
        ["p2 q3", "0", "q2 q3", "0", "p1 p2 p3", "p2 p3 q1", "p1 p3 q2", "p3 q1 q2"],
        ["0", "p2 q3", "0", "q2 q3", "p2 p3 q1", "p1 p2 p3", "p3 q1 q2", "p1 p3 q2"],
        ["q2 q3", "0", "p2 q3", "0", "p1 p3 q2", "p3 q1 q2", "p1 p2 p3", "p2 p3 q1"],
        ["0", "q2 q3", "0", "p2 q3", "p3 q1 q2", "p1 p3 q2", "p2 p3 q1", "p1 p2 p3"],
    ];
    SymbolicMatrix {
        n: 8,
        entries: rows.iter().map(|r| r.iter().map(|s| m(s)).collect()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_count_and_fit() {
        let cands = candidates(3);
        assert_eq!(cands.len(), 84);
        let p_sets = [[0.37, 0.52, 0.18], [0.71, 0.29, 0.44], [0.16, 0.83, 0.61]];
        let target = Monomial { exps: [1, 0, 0, 0, 1, 1] }; // p1 q2 q3
        let values: Vec<f64> = p_sets.iter().map(|p| target.eval(p)).collect();
        match fit_entry(&values, &p_sets, &cands) {
            Entry::Mono(m) => assert_eq!(m, target),
            e => panic!("expected monomial, got {e:?}"),
        }
        let zeros = vec![0.0; 3];
        assert_eq!(fit_entry(&zeros, &p_sets, &cands), Entry::Zero);
        let junk = vec![0.123, 0.456, 0.789];
        assert_eq!(fit_entry(&junk, &p_sets, &cands), Entry::Unmatched);
    }

    #[test]
    fn reference_matrices_are_consistent() {
        for (mat, zeros, cols) in [
            (reference_six_zeros(), 6, vec![3, 3, 1, 1, 1, 1, 1, 1]),
            (reference_eight_zeros(), 8, vec![2, 2, 2, 2, 2, 2, 2, 2]),
        ] {
            assert!(mat.is_symmetric());
            assert_eq!(mat.half_zeros(), zeros);
            assert_eq!(mat.column_zero_distribution(), cols);
            assert!(mat.rows_sum_to_one().unwrap());
            assert_eq!(mat.constant_diagonal(), Some(Monomial { exps: [1, 1, 1, 0, 0, 0] }));
            assert!(mat.max_degree() <= 3);
        }
    }

    #[test]
    fn relabeling_match_finds_scrambled_copy() {
        let base = reference_six_zeros();
        let sym = [2usize, 1, 0];
        let perm = [0usize, 1, 5, 3, 4, 2, 6, 7];
        let scrambled = SymbolicMatrix {
            n: 8,
            entries: (0..8)
                .map(|a| {
                    (0..8)
                        .map(|b| match base.entries[perm[a]][perm[b]] {
                            Entry::Mono(mm) => Entry::Mono(mm.permuted(&sym)),
                            e => e,
                        })
                        .collect()
                })
                .collect(),
        };
        assert!(scrambled.matches_up_to_relabeling(&base).is_some());
        assert!(reference_eight_zeros().matches_up_to_relabeling(&base).is_none());
    }
}
