//! Direct numerical integration of i dpsi/dt = H(t) psi for H(t) = A + B t,
//! used as the oracle for asymptotic transition probabilities.
//!
//! The diagonal phases are removed analytically (interaction picture), the
//! envelope is integrated with an adaptive Dormand-Prince 5(4) pair, and the
//! asymptotic matrix is read off as a tail average to suppress the slowly
//! decaying oscillatory transients.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MtlzError, Result};
use crate::hamiltonian::LinearHamiltonian;

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Diabatic,
    InteractionPicture,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Window half-width: evolution runs from -T(1+tail) to +T(1+tail).
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub frame: Frame,
    /// Richardson levels used by the convergence study (0 disables).
    pub richardson_levels: usize,
    /// Fractional length of the tail-averaging window.
    pub tail_fraction: f64,
    pub tail_samples: usize,
    /// Apply the first-order asymptotic dressing at both window ends, which
    /// removes the leading O(1/T) truncation error of the finite window.
    pub dress: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            t_max: 150.0,
            rtol: 1e-8,
            atol: 1e-11,
            frame: Frame::InteractionPicture,
            richardson_levels: 1,
            tail_fraction: 0.15,
            tail_samples: 64,
            dress: true,
        }
    }
}

impl PropagationConfig {
    pub fn validated(self) -> Result<Self> {
        if self.t_max <= 0.0 {
            return Err(MtlzError::Domain("window half-width must be positive".into()));
        }
        if !(self.rtol > 0.0 && self.rtol <= 1e-3 && self.atol > 0.0 && self.atol <= 1e-3) {
            return Err(MtlzError::Domain("tolerances must lie in (0, 1e-3]".into()));
        }
        Ok(self)
    }

    pub fn with_t_max(&self, t_max: f64) -> Self {
        Self { t_max, ..self.clone() }
    }
}

/// Asymptotic transition probabilities between diabatic states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericScattering {
    pub n: usize,
    /// probabilities[a][b] = |U_ab|^2.
    pub probabilities: Vec<Vec<f64>>,
    /// Entrywise error estimate (tail drift plus integrator tolerance).
    pub error_estimate: Vec<Vec<f64>>,
    pub row_sum_defect: f64,
    pub col_sum_defect: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl NumericScattering {
    pub fn max_abs_diff(&self, other: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.n {
            for b in 0..self.n {
                worst = worst.max((self.probabilities[a][b] - other[a][b]).abs());
            }
        }
        worst
    }

    pub fn max_error_estimate(&self) -> f64 {
        self.error_estimate
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |acc, &x| acc.max(x))
    }
}

const A_COEFF: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C_COEFF: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const ERR_COEFF: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Scratch {
    m: CMat,
    z: Vec<Complex64>,
}

struct Envelope {
    a_off: CMat,
    b_diag: Vec<f64>,
    a_diag: Vec<f64>,
    b_full: DMatrix<f64>,
    a_full: DMatrix<f64>,
    interaction: bool,
}

impl Envelope {
    fn new(lh: &LinearHamiltonian, frame: Frame) -> Self {
        let n = lh.n();
        let mut a_off = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    a_off[(i, j)] = Complex64::new(lh.constant[(i, j)], 0.0);
                }
            }
        }
        Self {
            a_off,
            b_diag: (0..n).map(|i| lh.slope[(i, i)]).collect(),
            a_diag: (0..n).map(|i| lh.constant[(i, i)]).collect(),
            b_full: lh.slope.clone(),
            a_full: lh.constant.clone(),
            interaction: frame == Frame::InteractionPicture,
        }
    }

    /// out = -i H_env(t) y
    fn rhs(&self, t: f64, y: &CMat, out: &mut CMat, scratch: &mut Scratch) {
        let n = y.nrows();
        if self.interaction {
            for a in 0..n {
                let phi = 0.5 * self.b_diag[a] * t * t + self.a_diag[a] * t;
                scratch.z[a] = Complex64::new(phi.cos(), phi.sin());
            }
            for b in 0..n {
                let zb = scratch.z[b].conj();
                for a in 0..n {
                    scratch.m[(a, b)] = self.a_off[(a, b)] * scratch.z[a] * zb;
                }
            }
        } else {
            for b in 0..n {
                for a in 0..n {
                    scratch.m[(a, b)] =
                        Complex64::new(self.a_full[(a, b)] + self.b_full[(a, b)] * t, 0.0);
                }
            }
        }
        out.gemm(Complex64::new(0.0, -1.0), &scratch.m, y, Complex64::new(0.0, 0.0));
    }
}

fn axpy_mat(y: &mut CMat, alpha: Complex64, x: &CMat) {
    for (yv, xv) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yv += alpha * xv;
    }
}

fn weighted_error(e: &CMat, y: &CMat, rtol: f64, atol: f64) -> f64 {
    let mut worst = 0.0f64;
    for (ev, yv) in e.iter().zip(y.iter()) {
        let sc = atol + rtol * yv.norm();
        worst = worst.max(ev.norm() / sc);
    }
    worst
}

/// Adaptive Dormand-Prince 5(4) from t0 to t1, calling `sample` at the given
/// increasing times.
fn integrate(
    env: &Envelope,
    y: &mut CMat,
    span: (f64, f64),
    rtol: f64,
    atol: f64,
    sample_times: &[f64],
    mut sample: impl FnMut(f64, &CMat),
) -> Result<usize> {
    let (t0, t1) = span;
    let n = y.nrows();
    let mut scratch = Scratch { m: CMat::zeros(n, n), z: vec![Complex64::default(); n] };
    let mut k: Vec<CMat> = (0..7).map(|_| CMat::zeros(n, n)).collect();
    let mut y_stage = CMat::zeros(n, n);
    let mut y_new = CMat::zeros(n, n);
    let mut err_mat = CMat::zeros(n, n);

    let mut t = t0;
    let mut h = 1e-3f64.min((t1 - t0) * 1e-6).max(1e-9);
    let mut steps = 0usize;
    let max_steps = 100_000_000usize;
    let mut next_sample = 0usize;
    let mut k1_valid = false;

    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        sample(t0, y);
        next_sample += 1;
    }

    while t < t1 - 1e-13 * t1.abs().max(1.0) {
        if steps >= max_steps {
            return Err(MtlzError::Propagation(format!(
                "step budget exhausted at t = {t:.3e} (target {t1:.3e})"
            )));
        }
        let mut h_now = h.min(t1 - t);
        let mut sample_here = false;
        if next_sample < sample_times.len() {
            let ts = sample_times[next_sample];
            if t + h_now >= ts {
                h_now = ts - t;
                sample_here = true;
                if h_now <= 1e-15 * ts.abs().max(1.0) {
                    sample(ts, y);
                    next_sample += 1;
                    continue;
                }
            }
        }

        if !k1_valid {
            env.rhs(t, y, &mut k[0], &mut scratch);
            k1_valid = true;
        }
        for stage in 0..6 {
            y_stage.copy_from(y);
            for (j, kj) in k.iter().take(stage + 1).enumerate() {
                let c = A_COEFF[stage][j];
                if c != 0.0 {
                    axpy_mat(&mut y_stage, Complex64::new(h_now * c, 0.0), kj);
                }
            }
            let t_stage = t + C_COEFF[stage] * h_now;
            let (head, tail) = k.split_at_mut(stage + 1);
            let _ = head;
            env.rhs(t_stage, &y_stage, &mut tail[0], &mut scratch);
        }
        // 5th-order solution is stage 6's argument with the b-row = A_COEFF[5]
        y_new.copy_from(&y_stage);
        // error estimate
        err_mat.fill(Complex64::default());
        for (j, kj) in k.iter().enumerate() {
            let c = ERR_COEFF[j];
            if c != 0.0 {
                axpy_mat(&mut err_mat, Complex64::new(h_now * c, 0.0), kj);
            }
        }
        let err = weighted_error(&err_mat, &y_new, rtol, atol);
        if err <= 1.0 {
            t += h_now;
            std::mem::swap(y, &mut y_new);
            // FSAL: k7 is the derivative at the accepted point.
            k.swap(0, 6);
            if sample_here {
                sample(t, y);
                next_sample += 1;
            }
            let factor = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h = (h_now * factor).min((t1 - t0) * 0.1);
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h = h_now * factor;
            k1_valid = true; // k1 still valid at unchanged t
        }
        steps += 1;
    }
    while next_sample < sample_times.len() {
        sample(t, y);
        next_sample += 1;
    }
    Ok(steps)
}

/// First-order asymptotic dressing: the boundary term of the remaining
/// oscillatory tail integral beyond time `t`.
fn dressing(lh: &LinearHamiltonian, t: f64) -> CMat {
    let n = lh.n();
    let mut c = CMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let v = lh.constant[(a, b)];
            if v == 0.0 {
                continue;
            }
            let db = lh.slope[(a, a)] - lh.slope[(b, b)];
            let da = lh.constant[(a, a)] - lh.constant[(b, b)];
            let rate = db * t + da;
            if rate.abs() <= 10.0 * v.abs() {
                continue;
            }
            let phase = 0.5 * db * t * t + da * t;
            c[(a, b)] = Complex64::new(phase.cos(), phase.sin()) * (v / rate);
        }
    }
    c
}

/// Propagate the full evolution operator and extract tail-averaged
/// transition probabilities.
pub fn propagate(lh: &LinearHamiltonian, config: &PropagationConfig) -> Result<NumericScattering> {
    let config = config.clone().validated()?;
    let n = lh.n();
    let defect = (&lh.constant - lh.constant.transpose()).norm()
        + (&lh.slope - lh.slope.transpose()).norm();
    if defect > 1e-10 * lh.scale() {
        return Err(MtlzError::Domain("Hamiltonian must be real symmetric".into()));
    }
    let env = Envelope::new(lh, config.frame);
    let t_ext = config.t_max * (1.0 + config.tail_fraction);
    let dress = config.dress && config.frame == Frame::InteractionPicture;
    let mut y = CMat::identity(n, n);
    if dress {
        y -= dressing(lh, -t_ext);
    }

    let half = config.tail_samples / 2;
    let sample_times: Vec<f64> = (0..config.tail_samples)
        .map(|k| {
            config.t_max
                + (t_ext - config.t_max) * (k as f64 + 0.5) / config.tail_samples as f64
        })
        .collect();

    let mut acc_first = vec![vec![0.0f64; n]; n];
    let mut acc_second = vec![vec![0.0f64; n]; n];
    let mut count_first = 0usize;
    let mut count_second = 0usize;
    {
        let mut sample_idx = 0usize;
        let mut dressed = CMat::zeros(n, n);
        let steps = integrate(
            &env,
            &mut y,
            (-t_ext, t_ext),
            config.rtol,
            config.atol,
            &sample_times,
            |t, ym| {
                let target = if sample_idx < half {
                    count_first += 1;
                    &mut acc_first
                } else {
                    count_second += 1;
                    &mut acc_second
                };
                if dress {
                    let c = dressing(lh, t);
                    dressed.copy_from(ym);
                    dressed.gemm(Complex64::new(1.0, 0.0), &c, ym, Complex64::new(1.0, 0.0));
                    for a in 0..n {
                        for b in 0..n {
                            target[a][b] += dressed[(a, b)].norm_sqr();
                        }
                    }
                } else {
                    for a in 0..n {
                        for b in 0..n {
                            target[a][b] += ym[(a, b)].norm_sqr();
                        }
                    }
                }
                sample_idx += 1;
            },
        )?;

        let mut probabilities = vec![vec![0.0f64; n]; n];
        let mut error_estimate = vec![vec![0.0f64; n]; n];
        for a in 0..n {
            for b in 0..n {
                let p1 = acc_first[a][b] / count_first.max(1) as f64;
                let p2 = acc_second[a][b] / count_second.max(1) as f64;
                probabilities[a][b] = 0.5 * (p1 + p2);
                error_estimate[a][b] = (p1 - p2).abs() + 10.0 * config.rtol;
            }
        }
        let mut row_defect = 0.0f64;
        let mut col_defect = 0.0f64;
        for i in 0..n {
            let rs: f64 = probabilities[i].iter().sum();
            let cs: f64 = (0..n).map(|a| probabilities[a][i]).sum();
            row_defect = row_defect.max((rs - 1.0).abs());
            col_defect = col_defect.max((cs - 1.0).abs());
        }
        Ok(NumericScattering {
            n,
            probabilities,
            error_estimate,
            row_sum_defect: row_defect,
            col_sum_defect: col_defect,
            t_max: config.t_max,
            steps,
        })
    }
}

/// Propagate a generic callable after verifying it is linear in t.
pub fn propagate_callable(
    h: impl Fn(f64) -> DMatrix<f64>,
    config: &PropagationConfig,
) -> Result<NumericScattering> {
    let h0 = h(0.0);
    let h1 = h(1.0);
    let slope = &h1 - &h0;
    let mid = h(0.5);
    let defect = (&mid - (&h0 + &slope * 0.5)).norm();
    if defect > 1e-9 * (h0.norm() + slope.norm()).max(1.0) {
        return Err(MtlzError::Domain(
            "Hamiltonian is not linear in t (midpoint check failed)".into(),
        ));
    }
    propagate(&LinearHamiltonian { constant: h0, slope }, config)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub t_values: Vec<f64>,
    /// Probability matrices per window.
    pub probabilities: Vec<Vec<Vec<f64>>>,
    /// max entrywise |P(T_{k+1}) - P(T_k)|.
    pub successive_diffs: Vec<f64>,
    /// Two-point Richardson extrapolation in 1/T from the last two windows.
    pub extrapolated: Vec<Vec<f64>>,
    /// Largest drift between the last two windows.
    pub final_diff: f64,
    pub monotone: bool,
}

/// Propagate over a list of increasing windows and extrapolate.
pub fn convergence_study(
    lh: &LinearHamiltonian,
    config: &PropagationConfig,
    t_list: &[f64],
) -> Result<ConvergenceReport> {
    if t_list.len() < 2 || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MtlzError::Domain("need at least two increasing windows".into()));
    }
    let n = lh.n();
    let mut probs = Vec::new();
    for &t in t_list {
        let res = propagate(lh, &config.with_t_max(t))?;
        probs.push(res.probabilities);
    }
    let mut diffs = Vec::new();
    for w in probs.windows(2) {
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((w[1][a][b] - w[0][a][b]).abs());
            }
        }
        diffs.push(worst);
    }
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0] * 1.5);
    let (ta, tb) = (t_list[t_list.len() - 2], t_list[t_list.len() - 1]);
    let (pa, pb) = (&probs[probs.len() - 2], &probs[probs.len() - 1]);
    let mut extrapolated = vec![vec![0.0f64; n]; n];
    for a in 0..n {
        for b in 0..n {
            if config.richardson_levels > 0 {
                // P(T) ~ P_inf + c / T  =>  eliminate the 1/T term.
                extrapolated[a][b] =
                    (tb * pb[a][b] - ta * pa[a][b]) / (tb - ta);
            } else {
                extrapolated[a][b] = pb[a][b];
            }
        }
    }
    Ok(ConvergenceReport {
        t_values: t_list.to_vec(),
        final_diff: *diffs.last().unwrap(),
        successive_diffs: diffs,
        probabilities: probs,
        extrapolated,
        monotone,
    })
}

/// Survival probability of the two-state model with slopes +-beta and
/// coupling g: exp(-2 pi g^2 / (2 beta)).
pub fn lz_survival_probability(gamma: f64) -> f64 {
    (-2.0 * std::f64::consts::PI * gamma).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn two_state(beta: f64, g: f64) -> LinearHamiltonian {
        LinearHamiltonian {
            constant: DMatrix::from_row_slice(2, 2, &[0.0, g, g, 0.0]),
            slope: DMatrix::from_row_slice(2, 2, &[beta, 0.0, 0.0, -beta]),
        }
    }

    #[test]
    fn two_state_lz_matches_the_closed_form() {
        let lh = two_state(1.0, 0.2);
        let gamma = 0.2 * 0.2 / 2.0;
        let cfg = PropagationConfig { t_max: 200.0, rtol: 1e-9, ..Default::default() };
        let res = propagate(&lh, &cfg).unwrap();
        let p_stay = lz_survival_probability(gamma);
        assert!(
            (res.probabilities[0][0] - p_stay).abs() < 1e-4,
            "got {}, want {}",
            res.probabilities[0][0],
            p_stay
        );
        assert!(res.row_sum_defect < 1e-6);
    }

    #[test]
    fn decoupled_system_is_the_identity() {
        let lh = two_state(1.0, 0.0);
        let res = propagate(&lh, &PropagationConfig { t_max: 30.0, ..Default::default() }).unwrap();
        assert!((res.probabilities[0][0] - 1.0).abs() < 1e-9);
        assert!(res.probabilities[0][1].abs() < 1e-9);
    }

    #[test]
    fn convergence_study_reports_decreasing_errors() {
        let lh = two_state(1.0, 0.25);
        let cfg = PropagationConfig { rtol: 1e-8, ..Default::default() };
        let rep = convergence_study(&lh, &cfg, &[50.0, 100.0, 200.0]).unwrap();
        let exact = lz_survival_probability(0.25 * 0.25 / 2.0);
        let last = rep.probabilities.last().unwrap();
        assert!((last[0][0] - exact).abs() < 1e-4);
        assert!(rep.final_diff < 2e-4, "final diff {}", rep.final_diff);
    }

    #[test]
    fn nonlinear_callable_rejected() {
        let bad = |t: f64| DMatrix::from_row_slice(2, 2, &[t * t, 0.1, 0.1, -t]);
        assert!(propagate_callable(bad, &PropagationConfig::default()).is_err());
    }

    #[test]
    fn gauge_shift_leaves_probabilities_unchanged() {
        let lh = two_state(0.8, 0.3);
        let shifted = LinearHamiltonian {
            constant: &lh.constant + DMatrix::identity(2, 2) * 0.4,
            slope: &lh.slope + DMatrix::identity(2, 2) * 1.3,
        };
        let cfg = PropagationConfig { t_max: 80.0, ..Default::default() };
        let p1 = propagate(&lh, &cfg).unwrap();
        let p2 = propagate(&shifted, &cfg).unwrap();
        assert!(p1.max_abs_diff(&p2.probabilities) < 5e-4);
    }
}
