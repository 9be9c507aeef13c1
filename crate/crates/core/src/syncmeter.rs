//! Synchronization analysis: oscillation fits, pairwise lock verdicts, the
//! synchronized operator set and its degree of quantumness, plus mutual
//! information and the relative-quadrature figure of merit for two modes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 math is only present when std is linked
use num_traits::Float;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::opalg::{make_elementary, partial_trace, von_neumann_entropy, DensityMatrix, Elementary, FactorKind};

/// Fewest samples accepted in a fit window.
pub const MIN_WINDOW_SAMPLES: usize = 64;

/// Every decision threshold used by the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Relative frequency mismatch tolerated for a lock.
    pub tol_freq: f64,
    /// Phase tolerance (rad) for the in-phase / anti-phase classes.
    pub tol_phase: f64,
    /// Minimum amplitude relative to the largest |value| in the window.
    pub amp_min: f64,
    /// Maximum residual rms relative to the fitted amplitude.
    pub fit_tol: f64,
    /// Minimum number of periods inside the window.
    pub min_cycles: f64,
    /// Relative Gram–Schmidt residual below which an operator is dependent.
    pub rank_tol: f64,
    /// Max-norm bound under which two operators commute.
    pub commute_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tol_freq: 0.01,
            tol_phase: 0.2,
            amp_min: 1e-3,
            fit_tol: 0.1,
            min_cycles: 1.0,
            rank_tol: 1e-10,
            commute_tol: 1e-10,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_freq", self.tol_freq),
            ("tol_phase", self.tol_phase),
            ("amp_min", self.amp_min),
            ("fit_tol", self.fit_tol),
            ("min_cycles", self.min_cycles),
            ("rank_tol", self.rank_tol),
            ("commute_tol", self.commute_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Result of fitting `B + C e^{-mu tau} + e^{-lambda tau} A cos(omega tau + phi_ref)`,
/// `tau = t - reference_time`, to one windowed series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationFit {
    pub frequency: f64,
    /// Phase of `A cos(omega t + phase)` referred to `t = 0`, in (-pi, pi].
    pub phase: f64,
    pub amplitude: f64,
    /// Baseline value at the reference time.
    pub offset: f64,
    pub residual_rms: f64,
    pub oscillating: bool,
    pub decay_rate: f64,
    pub baseline_rate: f64,
    pub reference_time: f64,
    /// Phase at the reference time, in (-pi, pi].
    pub phase_at_reference: f64,
    pub cycles: f64,
    pub signal_scale: f64,
    pub diagnostic: Option<String>,
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Least squares by modified Gram–Schmidt; dependent columns get coefficient 0.
fn lstsq(cols: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut r = vec![vec![0.0; m]; m];
    let mut kept = vec![false; m];
    for (j, c) in cols.iter().enumerate() {
        let norm0 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = c.clone();
        for (k, qk) in q.iter().enumerate() {
            let d: f64 = qk.iter().zip(&v).map(|(a, b)| a * b).sum();
            r[k][j] = d;
            v.iter_mut().zip(qk).for_each(|(vi, qi)| *vi -= d * qi);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 * norm0 && norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            r[q.len()][j] = norm;
            kept[j] = true;
            q.push(v);
        }
    }
    // Coefficients in the orthonormal basis, then back-substitute over kept columns.
    let qy: Vec<f64> = q.iter().map(|qk| qk.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let kept_idx: Vec<usize> = (0..m).filter(|&j| kept[j]).collect();
    let mut coef = vec![0.0; m];
    for (row, &j) in kept_idx.iter().enumerate().rev() {
        let mut s = qy[row];
        for &j2 in &kept_idx[row + 1..] {
            s -= r[row][j2] * coef[j2];
        }
        coef[j] = s / r[row][j];
    }
    let mut resid = y.to_vec();
    for (j, c) in cols.iter().enumerate() {
        if coef[j] != 0.0 {
            resid.iter_mut().zip(c).for_each(|(ri, ci)| *ri -= coef[j] * ci);
        }
    }
    (coef, resid)
}

struct Model<'a> {
    tau: &'a [f64],
    y: &'a [f64],
}

impl Model<'_> {
    /// Linear coefficients `[B, C, P, Q]` and residuals for `(omega, lambda, mu)`.
    fn solve(&self, q: &[f64; 3]) -> (Vec<f64>, Vec<f64>) {
        let [w, lam, mu] = *q;
        let ones = vec![1.0; self.tau.len()];
        let base: Vec<f64> = self.tau.iter().map(|t| (-mu * t).exp()).collect();
        let cos: Vec<f64> = self.tau.iter().map(|t| (-lam * t).exp() * (w * t).cos()).collect();
        let sin: Vec<f64> = self.tau.iter().map(|t| (-lam * t).exp() * (w * t).sin()).collect();
        lstsq(&[ones, base, cos, sin], self.y)
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = m[i][3];
        for k in i + 1..3 {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    Some(x)
}

/// Bounded Levenberg–Marquardt on the variable-projection cost.
fn refine(model: &Model, x0: [f64; 3], lo: [f64; 3], hi: [f64; 3], scale: [f64; 3]) -> ([f64; 3], f64) {
    let clamp = |x: [f64; 3]| core::array::from_fn::<f64, 3, _>(|i| x[i].clamp(lo[i], hi[i]));
    let mut x = clamp(x0);
    let (_, mut r) = model.solve(&x);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut damping = 1e-3;
    for _ in 0..200 {
        let mut jac = [vec![0.0; r.len()], vec![0.0; r.len()], vec![0.0; r.len()]];
        for i in 0..3 {
            let h = 1e-7 * x[i].abs().max(scale[i]);
            let mut xp = x;
            xp[i] += h;
            let xp = clamp(xp);
            let step = xp[i] - x[i];
            let (xs, sgn) = if step.abs() > 0.0 {
                (xp, step)
            } else {
                let mut xm = x;
                xm[i] -= h;
                (clamp(xm), -h)
            };
            let (_, rp) = model.solve(&xs);
            for (k, jk) in jac[i].iter_mut().enumerate() {
                *jk = (rp[k] - r[k]) / sgn;
            }
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for a in 0..3 {
            jtr[a] = jac[a].iter().zip(&r).map(|(p, q)| p * q).sum();
            for b in 0..3 {
                jtj[a][b] = jac[a].iter().zip(&jac[b]).map(|(p, q)| p * q).sum();
            }
        }
        let mut improved = false;
        while damping < 1e12 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += damping * jtj[i][i].max(1e-300);
            }
            let Some(delta) = solve3(a, [-jtr[0], -jtr[1], -jtr[2]]) else {
                damping *= 10.0;
                continue;
            };
            let cand = clamp([x[0] + delta[0], x[1] + delta[1], x[2] + delta[2]]);
            let (_, rc) = model.solve(&cand);
            let c: f64 = rc.iter().map(|v| v * v).sum();
            if c.is_finite() && c < cost {
                let rel_step = (0..3).map(|i| (cand[i] - x[i]).abs() / x[i].abs().max(scale[i])).fold(0.0, f64::max);
                let rel_cost = (cost - c) / cost.max(1e-300);
                x = cand;
                r = rc;
                cost = c;
                damping = (damping * 0.3).max(1e-12);
                improved = true;
                if rel_step < 1e-12 || rel_cost < 1e-15 {
                    return (x, cost);
                }
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (x, cost)
}

/// Up to `k` frequencies of the largest local maxima of the periodogram of the
/// linearly detrended series, searched above one period per window.
fn spectral_peaks(t: &[f64], y: &[f64], k: usize) -> Vec<f64> {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let dt = span / (n - 1) as f64;
    let tm = t.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let stt: f64 = t.iter().map(|v| (v - tm) * (v - tm)).sum();
    let slope = if stt > 0.0 { t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum::<f64>() / stt } else { 0.0 };
    let yd: Vec<f64> = t.iter().zip(y).map(|(a, b)| b - ym - slope * (a - tm)).collect();

    let w_min = 2.0 * PI / span;
    let w_max = PI / dt;
    let dw = 2.0 * PI / (8.0 * span);
    let count = ((w_max - w_min) / dw).floor() as usize + 1;
    let power: Vec<f64> = (0..count)
        .map(|i| {
            let w = w_min + i as f64 * dw;
            let mut acc = C64::zero();
            for (ti, yi) in t.iter().zip(&yd) {
                let (s, c) = (w * (ti - t[0])).sin_cos();
                acc += C64::new(c, -s) * *yi;
            }
            acc.norm_sqr()
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = (0..count)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { power[i - 1] };
            let right = if i + 1 == count { f64::NEG_INFINITY } else { power[i + 1] };
            power[i] >= left && power[i] >= right
        })
        .map(|i| (power[i], w_min + i as f64 * dw))
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<f64> = peaks.into_iter().take(k).map(|p| p.1).collect();
    if out.is_empty() {
        out.push(w_min);
    }
    out
}

/// Fits a damped sinusoid on an exponential baseline to the samples inside
/// `window` (inclusive).
pub fn fit_oscillation(times: &[f64], values: &[f64], window: (f64, f64), thr: &Thresholds) -> Result<OscillationFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter {
            name: "series".into(),
            reason: format!("{} times but {} values", times.len(), values.len()),
        });
    }
    let eps = 1e-9 * window.1.abs().max(1.0);
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 - eps && **t <= window.1 + eps)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if t.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::WindowTooShort { samples: t.len(), required: MIN_WINDOW_SAMPLES });
    }
    let n = t.len();
    let span = t[n - 1] - t[0];
    if span <= 0.0 {
        return Err(Error::WindowTooShort { samples: 1, required: MIN_WINDOW_SAMPLES });
    }
    let t_ref = 0.5 * (t[0] + t[n - 1]);
    let tau: Vec<f64> = t.iter().map(|v| v - t_ref).collect();
    let signal_scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let model = Model { tau: &tau, y: &y };

    let dt = span / (n - 1) as f64;
    let lo = [0.0, -2.0 / span, 0.0];
    let hi = [PI / dt, 50.0 / span, 200.0 / span];
    let scale = [2.0 * PI / span, 1.0 / span, 1.0 / span];
    let mut best: Option<([f64; 3], f64)> = None;
    for w0 in spectral_peaks(&t, &y, 3) {
        let (x, c) = refine(&model, [w0, 0.5 / span, 1.0 / span], lo, hi, scale);
        if c.is_finite() && best.is_none_or(|(_, bc)| c < bc) {
            best = Some((x, c));
        }
    }
    let Some((x, _)) = best else {
        return Ok(failed_fit(t_ref, signal_scale, "fit diverged: non-finite cost"));
    };
    let (coef, resid) = model.solve(&x);
    let [b, c, p, q] = [coef[0], coef[1], coef[2], coef[3]];
    let amplitude = p.hypot(q);
    let phase_ref = wrap_phase((-q).atan2(p));
    let residual_rms = (resid.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    let frequency = x[0];
    let cycles = frequency * span / (2.0 * PI);
    if !(amplitude.is_finite() && residual_rms.is_finite()) {
        return Ok(failed_fit(t_ref, signal_scale, "fit diverged: non-finite coefficients"));
    }
    let oscillating = amplitude > 1e-12
        && amplitude >= thr.amp_min * signal_scale
        && residual_rms <= thr.fit_tol * amplitude
        && cycles >= thr.min_cycles;
    Ok(OscillationFit {
        frequency,
        phase: wrap_phase(phase_ref - frequency * t_ref),
        amplitude,
        offset: b + c,
        residual_rms,
        oscillating,
        decay_rate: x[1],
        baseline_rate: x[2],
        reference_time: t_ref,
        phase_at_reference: phase_ref,
        cycles,
        signal_scale,
        diagnostic: None,
    })
}

fn failed_fit(t_ref: f64, signal_scale: f64, why: &str) -> OscillationFit {
    OscillationFit {
        frequency: 0.0,
        phase: 0.0,
        amplitude: 0.0,
        offset: 0.0,
        residual_rms: f64::INFINITY,
        oscillating: false,
        decay_rate: 0.0,
        baseline_rate: 0.0,
        reference_time: t_ref,
        phase_at_reference: 0.0,
        cycles: 0.0,
        signal_scale,
        diagnostic: Some(why.to_string()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseClass {
    InPhase,
    AntiPhase,
    PhaseLockedOther,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub synced: bool,
    pub freq_mismatch: f64,
    /// `phi_a - phi_b` at the common reference time, in (-pi, pi].
    pub phase_diff: f64,
    pub phase_class: PhaseClass,
    /// `A_b / A_a`.
    pub amplitude_ratio: f64,
}

pub fn classify_pair(a: &OscillationFit, b: &OscillationFit, thr: &Thresholds) -> PairVerdict {
    let wmax = a.frequency.max(b.frequency);
    let freq_mismatch = if wmax > 0.0 { (a.frequency - b.frequency).abs() / wmax } else { 0.0 };
    let synced = a.oscillating && b.oscillating && freq_mismatch <= thr.tol_freq;
    let phase_diff = if a.reference_time == b.reference_time {
        wrap_phase(a.phase_at_reference - b.phase_at_reference)
    } else {
        wrap_phase(a.phase - b.phase)
    };
    let phase_class = if phase_diff.abs() <= thr.tol_phase {
        PhaseClass::InPhase
    } else if (phase_diff.abs() - PI).abs() <= thr.tol_phase {
        PhaseClass::AntiPhase
    } else {
        PhaseClass::PhaseLockedOther
    };
    let amplitude_ratio = if a.amplitude > 0.0 { b.amplitude / a.amplitude } else { f64::INFINITY };
    PairVerdict { synced, freq_mismatch, phase_diff, phase_class, amplitude_ratio }
}

/// Sampled observable columns: one row per time.
#[derive(Clone, Copy, Debug)]
pub struct SeriesView<'a> {
    pub times: &'a [f64],
    pub names: &'a [String],
    pub rows: &'a [Vec<f64>],
}

impl SeriesView<'_> {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Fits and verdict for one catalog operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub fit_1: OscillationFit,
    pub fit_2: OscillationFit,
    pub verdict: PairVerdict,
}

/// Greedy Hilbert–Schmidt independence filter preserving input order.
pub fn independent_subset(ops: &[CMatrix], rank_tol: f64) -> Vec<usize> {
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut keep = Vec::new();
    for (i, a) in ops.iter().enumerate() {
        let norm0 = a.frobenius_norm();
        let mut v = a.clone();
        for e in &basis {
            let d = e.hs_inner(&v);
            v -= &e.scale(d);
        }
        let norm = v.frobenius_norm();
        if norm0 > 0.0 && norm > rank_tol * norm0 {
            basis.push(v.scale_real(1.0 / norm));
            keep.push(i);
        }
    }
    keep
}

/// Synced catalog members after the independence filter, plus every pair report.
pub fn synchronized_set(
    series: &SeriesView,
    catalog: &[(String, CMatrix)],
    window: (f64, f64),
    thr: &Thresholds,
) -> Result<(Vec<String>, BTreeMap<String, PairReport>)> {
    let mut reports = BTreeMap::new();
    let mut synced = Vec::new();
    for (k, (name, _)) in catalog.iter().enumerate() {
        let c1 = series.column(&format!("{name}_1"))?;
        let c2 = series.column(&format!("{name}_2"))?;
        let fit_1 = fit_oscillation(series.times, &c1, window, thr)?;
        let fit_2 = fit_oscillation(series.times, &c2, window, thr)?;
        let verdict = classify_pair(&fit_1, &fit_2, thr);
        if verdict.synced {
            synced.push(k);
        }
        reports.insert(name.clone(), PairReport { fit_1, fit_2, verdict });
    }
    let ops: Vec<CMatrix> = synced.iter().map(|&k| catalog[k].1.clone()).collect();
    let s = independent_subset(&ops, thr.rank_tol).into_iter().map(|i| catalog[synced[i]].0.clone()).collect();
    Ok((s, reports))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantumness {
    pub chi: usize,
    pub c: usize,
    pub xi: usize,
}

/// `chi = |S|`, `c = max_k |{A_i : [A_k, A_i] = 0}|`, `xi = chi - c`.
/// An empty set gives all zeros.
///
/// `xi <= d^2 - d` is not guaranteed for arbitrary independent sets: four
/// generic qubit Hermitians give `xi = 3`. [`analyze`] notes any excess.
pub fn degree_of_quantumness(s: &[CMatrix], commute_tol: f64) -> Result<Quantumness> {
    let Some(first) = s.first() else {
        return Ok(Quantumness { chi: 0, c: 0, xi: 0 });
    };
    let d = first.dim();
    if s.iter().any(|a| a.dim() != d) {
        return Err(Error::InvalidDimension("operators in S have different dimensions".into()));
    }
    let chi = s.len();
    let c = (0..chi)
        .map(|k| (0..chi).filter(|&i| i == k || s[k].commutator(&s[i]).max_abs() <= commute_tol).count())
        .max()
        .unwrap_or(0);
    Ok(Quantumness { chi, c, xi: chi - c })
}

/// `I(A:B) = S(rho_A) + S(rho_B) - S(rho_AB)`.
pub fn mutual_information(rho: &DensityMatrix, part_a: &[usize], part_b: &[usize]) -> Result<f64> {
    if part_a.is_empty() || part_b.is_empty() {
        return Err(Error::InvalidSelection("both parts of the cut must be non-empty".into()));
    }
    if part_a.iter().any(|s| part_b.contains(s)) {
        return Err(Error::InvalidSelection("the two parts overlap".into()));
    }
    let mut ab: Vec<usize> = part_a.iter().chain(part_b).copied().collect();
    ab.sort_unstable();
    let s_a = von_neumann_entropy(&partial_trace(rho, part_a)?)?;
    let s_b = von_neumann_entropy(&partial_trace(rho, part_b)?)?;
    let s_ab = if ab.len() == rho.layout().len() {
        von_neumann_entropy(rho)?
    } else {
        von_neumann_entropy(&partial_trace(rho, &ab)?)?
    };
    Ok(s_a + s_b - s_ab)
}

/// `tr(rho (a ⊗ b))` on a two-factor state.
fn two_body(rho: &DensityMatrix, a: &CMatrix, b: &CMatrix) -> C64 {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let m = rho.matrix().as_slice();
    let mut acc = C64::zero();
    // sum over rows (i,k), cols (j,l): rho[(i,k),(j,l)] a[j,i] b[l,k]
    for i in 0..na {
        for k in 0..nb {
            let row = (i * nb + k) * n;
            for j in 0..na {
                let aji = a[(j, i)];
                if aji.is_zero() {
                    continue;
                }
                for l in 0..nb {
                    let blk = b[(l, k)];
                    if !blk.is_zero() {
                        acc += m[row + j * nb + l] * aji * blk;
                    }
                }
            }
        }
    }
    acc
}

/// `S_c = 1 / <x_-^2 + p_-^2>` with `x_- = (x_1 - x_2)/sqrt 2`, likewise `p_-`.
pub fn mari_measure(rho: &DensityMatrix) -> Result<f64> {
    let layout = rho.layout();
    if layout.len() != 2 || layout.kinds().iter().any(|k| *k != FactorKind::Boson) {
        return Err(Error::LayoutMismatch("S_c needs a state of exactly two bosonic factors".into()));
    }
    let (n1, n2) = (layout.factors()[0], layout.factors()[1]);
    let x1 = make_elementary(Elementary::Position(n1))?.into_matrix();
    let p1 = make_elementary(Elementary::Momentum(n1))?.into_matrix();
    let x2 = make_elementary(Elementary::Position(n2))?.into_matrix();
    let p2 = make_elementary(Elementary::Momentum(n2))?.into_matrix();
    let (i1, i2) = (CMatrix::identity(n1), CMatrix::identity(n2));
    let local = two_body(rho, &(&x1.matmul(&x1) + &p1.matmul(&p1)), &i2)
        + two_body(rho, &i1, &(&x2.matmul(&x2) + &p2.matmul(&p2)));
    let cross = two_body(rho, &x1, &x2) + two_body(rho, &p1, &p2);
    let denom = 0.5 * (local - cross * 2.0).re;
    if !(denom > 0.0) {
        return Err(Error::Numerical(format!("non-positive relative quadrature variance {denom}")));
    }
    Ok(1.0 / denom)
}

/// Full analysis record of one run or one trajectory file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub pair_verdicts: BTreeMap<String, PairReport>,
    #[serde(rename = "S")]
    pub s: Vec<String>,
    pub chi: usize,
    pub c: usize,
    pub xi: usize,
    /// Single-subsystem dimension d; `0 <= xi <= d^2 - d`.
    pub d: usize,
    pub mutual_info_final: Option<f64>,
    pub window: [f64; 2],
    pub thresholds: Thresholds,
    pub notes: Vec<String>,
}

/// Runs the whole analysis over `series`.
pub fn analyze(
    series: &SeriesView,
    catalog: &[(String, CMatrix)],
    window: (f64, f64),
    thr: &Thresholds,
    mutual_info_final: Option<f64>,
) -> Result<SyncReport> {
    thr.validate()?;
    let d = catalog.first().map(|c| c.1.dim()).unwrap_or(0);
    let (s, pair_verdicts) = synchronized_set(series, catalog, window, thr)?;
    let ops: Vec<CMatrix> =
        s.iter().map(|n| catalog.iter().find(|c| &c.0 == n).expect("catalog member").1.clone()).collect();
    let q = degree_of_quantumness(&ops, thr.commute_tol)?;
    let mut notes = vec![
        format!("window [{}, {}] chosen by the run configuration", window.0, window.1),
        format!(
            "synced: both fits oscillating (amplitude >= {} x max|value|, residual rms <= {} x amplitude, >= {} cycles) and relative frequency mismatch <= {}",
            thr.amp_min, thr.fit_tol, thr.min_cycles, thr.tol_freq
        ),
        format!("phase classes use tol_phase = {} rad at the window midpoint", thr.tol_phase),
        format!("independence: Hilbert-Schmidt Gram-Schmidt residual > {} relative", thr.rank_tol),
        format!("commutation: max |[A, B]| <= {}", thr.commute_tol),
        "empty S gives chi = c = xi = 0 by convention".to_string(),
    ];
    if q.xi > d * d - d {
        notes.push(format!("xi = {} exceeds d^2 - d = {}", q.xi, d * d - d));
    }
    if d > 2 {
        notes.push(format!("catalog truncated at second-order moments; chi = {} is a lower bound", q.chi));
    }
    Ok(SyncReport {
        pair_verdicts,
        s,
        chi: q.chi,
        c: q.c,
        xi: q.xi,
        d,
        mutual_info_final,
        window: [window.0, window.1],
        thresholds: *thr,
        notes,
    })
}
