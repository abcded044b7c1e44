//! Eigenvalue tracking along a one-parameter sweep and exact-crossing
//! detection with multiplicity accounting.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::LinearHamiltonian;

/// A degeneracy event: `m` levels coincide at one point, contributing
/// m(m-1)/2 pairwise crossings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub t: f64,
    /// Sorted-level indices participating (contiguous run).
    pub level_lo: usize,
    pub level_hi: usize,
    /// Refined minimal gap.
    pub gap: f64,
}

impl CrossingEvent {
    pub fn multiplicity(&self) -> usize {
        self.level_hi - self.level_lo + 1
    }

    pub fn pairwise(&self) -> usize {
        let m = self.multiplicity();
        m * (m - 1) / 2
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub t: f64,
    pub level: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub t_grid: Vec<f64>,
    /// eigenvalues[k] = sorted spectrum at t_grid[k].
    pub eigenvalues: Vec<Vec<f64>>,
    pub exact: Vec<CrossingEvent>,
    pub avoided: Vec<AvoidedCrossing>,
    /// Minima whose golden-section refinement did not converge.
    pub unconverged: Vec<AvoidedCrossing>,
    pub spectral_scale: f64,
    pub window: (f64, f64),
}

impl SpectrumScan {
    pub fn exact_pairwise_count(&self) -> usize {
        self.exact.iter().map(|e| e.pairwise()).sum()
    }
}

pub struct ScanConfig {
    pub initial_window: (f64, f64),
    pub grid: usize,
    /// Exact-crossing threshold relative to the spectral scale.
    pub exact_tol: f64,
    /// Local minima above this relative size are ignored entirely.
    pub candidate_tol: f64,
    pub max_expansions: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            initial_window: (-2.0, 2.0),
            grid: 4001,
            exact_tol: 1e-9,
            candidate_tol: 0.5,
            max_expansions: 8,
        }
    }
}

fn sorted_eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn gap_at(lh: &LinearHamiltonian, level: usize, t: f64) -> f64 {
    let ev = sorted_eigenvalues(&lh.at(t));
    ev[level + 1] - ev[level]
}

/// Golden-section minimization of the level gap on a bracket.
fn refine_gap(lh: &LinearHamiltonian, level: usize, mut a: f64, mut b: f64) -> (f64, f64, bool) {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = gap_at(lh, level, x1);
    let mut f2 = gap_at(lh, level, x2);
    let mut iters = 0;
    while (b - a).abs() > 1e-14 * (1.0 + a.abs() + b.abs()) && iters < 200 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = gap_at(lh, level, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = gap_at(lh, level, x2);
        }
        iters += 1;
    }
    let t = 0.5 * (a + b);
    (t, gap_at(lh, level, t), iters < 200)
}

/// Scan the spectrum of H(t) over an auto-expanded window, refine every gap
/// minimum, and classify exact against avoided crossings.
pub fn scan_spectrum(lh: &LinearHamiltonian, config: &ScanConfig) -> SpectrumScan {
    let mut window = config.initial_window;
    let mut expansions = 0;
    loop {
        let scan = scan_window(lh, window, config);
        // Expand until no event (exact or avoided) sits in the outer quarter
        // of the window, so every crossing is comfortably inside.
        let span = window.1 - window.0;
        let lo = window.0 + 0.125 * span;
        let hi = window.1 - 0.125 * span;
        let outer = scan
            .exact
            .iter()
            .map(|e| e.t)
            .chain(scan.avoided.iter().map(|a| a.t))
            .any(|t| t < lo || t > hi);
        if !outer || expansions >= config.max_expansions {
            return scan;
        }
        window = (2.0 * window.0, 2.0 * window.1);
        expansions += 1;
    }
}

fn scan_window(lh: &LinearHamiltonian, window: (f64, f64), config: &ScanConfig) -> SpectrumScan {
    let n = lh.n();
    let grid = config.grid.max(16);
    let ts: Vec<f64> = (0..grid)
        .map(|k| window.0 + (window.1 - window.0) * k as f64 / (grid - 1) as f64)
        .collect();
    let eigenvalues: Vec<Vec<f64>> = ts.iter().map(|&t| sorted_eigenvalues(&lh.at(t))).collect();
    let spectral_scale = eigenvalues
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);

    // Candidate minima per adjacent level pair.
    let mut candidates: Vec<(f64, usize, f64, bool)> = Vec::new();
    for level in 0..n - 1 {
        for k in 1..grid - 1 {
            let g_prev = eigenvalues[k - 1][level + 1] - eigenvalues[k - 1][level];
            let g_here = eigenvalues[k][level + 1] - eigenvalues[k][level];
            let g_next = eigenvalues[k + 1][level + 1] - eigenvalues[k + 1][level];
            if g_here <= g_prev && g_here < g_next && g_here < config.candidate_tol * spectral_scale
            {
                let (t, gap, converged) = refine_gap(lh, level, ts[k - 1], ts[k + 1]);
                candidates.push((t, level, gap, converged));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Drop duplicate finds of the same minimum.
    candidates.dedup_by(|a, b| a.1 == b.1 && (a.0 - b.0).abs() < 1e-7 * (1.0 + b.0.abs()));

    let exact_gap = config.exact_tol * spectral_scale;
    let t_merge = 1e-7 * (window.1 - window.0).abs().max(1.0);

    let mut exact: Vec<CrossingEvent> = Vec::new();
    let mut avoided = Vec::new();
    let mut unconverged = Vec::new();

    // Group exact candidates at (approximately) one time into degeneracy
    // clusters read off the spectrum at that time.
    let mut i = 0;
    while i < candidates.len() {
        let (t, level, gap, converged) = candidates[i];
        if !converged {
            unconverged.push(AvoidedCrossing { t, level, gap });
            i += 1;
            continue;
        }
        if gap >= exact_gap {
            avoided.push(AvoidedCrossing { t, level, gap });
            i += 1;
            continue;
        }
        // Collect all exact candidates in this time bucket.
        let mut bucket = vec![(t, level, gap)];
        let mut j = i + 1;
        while j < candidates.len() && (candidates[j].0 - t).abs() < t_merge {
            if candidates[j].3 && candidates[j].2 < exact_gap {
                bucket.push((candidates[j].0, candidates[j].1, candidates[j].2));
                j += 1;
            } else {
                break;
            }
        }
        let t_event = bucket.iter().map(|b| b.0).sum::<f64>() / bucket.len() as f64;
        let ev = sorted_eigenvalues(&lh.at(t_event));
        // Maximal runs of coincident eigenvalues at t_event.
        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut lo = 0;
        for level in 0..n - 1 {
            if ev[level + 1] - ev[level] < exact_gap.max(10.0 * bucket.iter().map(|b| b.2).fold(0.0, f64::max)) {
                // continue the run
            } else {
                if level > lo {
                    runs.push((lo, level));
                }
                lo = level + 1;
            }
        }
        if n - 1 > lo {
            runs.push((lo, n - 1));
        }
        for (lo, hi) in runs {
            if bucket.iter().any(|&(_, l, _)| l >= lo && l < hi) {
                let gap = bucket
                    .iter()
                    .filter(|&&(_, l, _)| l >= lo && l < hi)
                    .map(|b| b.2)
                    .fold(0.0, f64::max);
                exact.push(CrossingEvent { t: t_event, level_lo: lo, level_hi: hi, gap });
            }
        }
        i = j.max(i + 1);
    }

    SpectrumScan {
        t_grid: ts,
        eigenvalues,
        exact,
        avoided,
        unconverged,
        spectral_scale,
        window,
    }
}

/// Count exact crossings with the grid doubled until the census stabilizes
/// twice in a row.
pub fn stable_crossing_count(lh: &LinearHamiltonian, config: &ScanConfig) -> (usize, SpectrumScan) {
    let mut grid = config.grid;
    let mut last: Option<usize> = None;
    let mut stable = 0;
    let mut best = None;
    for _ in 0..5 {
        let cfg = ScanConfig { grid, ..ScanConfig { initial_window: config.initial_window, grid, exact_tol: config.exact_tol, candidate_tol: config.candidate_tol, max_expansions: config.max_expansions } };
        let scan = scan_spectrum(lh, &cfg);
        let count = scan.exact_pairwise_count();
        if Some(count) == last {
            stable += 1;
        } else {
            stable = 0;
        }
        last = Some(count);
        best = Some(scan);
        if stable >= 1 {
            break;
        }
        grid = grid * 2 - 1;
    }
    (last.unwrap(), best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn two_level_exact_and_avoided() {
        // Uncoupled pair crosses exactly once.
        let lh = LinearHamiltonian {
            constant: DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -0.1]),
            slope: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        };
        let scan = scan_spectrum(&lh, &ScanConfig::default());
        assert_eq!(scan.exact_pairwise_count(), 1);
        assert!(scan.avoided.is_empty());
        assert!((scan.exact[0].t - (-0.2)).abs() < 1e-9);

        // Coupled pair: avoided crossing with gap 2g.
        let lh = LinearHamiltonian {
            constant: DMatrix::from_row_slice(2, 2, &[0.0, 0.25, 0.25, 0.0]),
            slope: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        };
        let scan = scan_spectrum(&lh, &ScanConfig::default());
        assert_eq!(scan.exact_pairwise_count(), 0);
        assert_eq!(scan.avoided.len(), 1);
        assert!((scan.avoided[0].gap - 0.5).abs() < 1e-9);
    }

    #[test]
    fn threefold_point_counts_three_pairs() {
        // Three uncoupled levels crossing at t = 0.
        let lh = LinearHamiltonian {
            constant: DMatrix::zeros(3, 3),
            slope: DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, -2.0]),
        };
        let scan = scan_spectrum(&lh, &ScanConfig::default());
        assert_eq!(scan.exact.len(), 1);
        assert_eq!(scan.exact[0].multiplicity(), 3);
        assert_eq!(scan.exact_pairwise_count(), 3);
    }

    #[test]
    fn two_simultaneous_pair_crossings_stay_separate() {
        // Two independent pair crossings at t = 0 at different energies.
        let lh = LinearHamiltonian {
            constant: DMatrix::from_row_slice(
                4,
                4,
                &[5.0, 0.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, -5.0, 0.0, 0.0, 0.0, 0.0, -5.0],
            ),
            slope: DMatrix::from_row_slice(
                4,
                4,
                &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0, -1.5],
            ),
        };
        let scan = scan_spectrum(&lh, &ScanConfig::default());
        assert_eq!(scan.exact.len(), 2);
        assert_eq!(scan.exact_pairwise_count(), 2);
    }
}
