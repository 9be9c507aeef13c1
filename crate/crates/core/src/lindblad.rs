//! Lindblad master-equation integration.
//!
//! Each dissipator `(gamma, L)` contributes `gamma (2 L rho L^dag - L^dag L rho - rho L^dag L)`.
//! The integrator is an adaptive Dormand–Prince 5(4) scheme that lands exactly
//! on a uniform sample grid; an independent dense Liouvillian with a matrix
//! exponential serves as an oracle for small systems.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 math is only present when std is linked
use num_traits::Float;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::matrix::{CMatrix, CsrMatrix};
use crate::opalg::{DensityMatrix, FactorKind, Operator, SpaceLayout};

/// Largest total dimension accepted by [`dense_liouvillian`].
pub const DEFAULT_ORACLE_CAP: usize = 16;
/// Top-Fock-level population above which a run is aborted.
pub const TRUNCATION_GUARD: f64 = 1e-4;
/// Trace error above which a sample is renormalised.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-10;
/// Hermiticity tolerance for Hamiltonians and observables.
pub const MODEL_HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Dissipator {
    pub rate: f64,
    pub jump: Operator,
}

impl Dissipator {
    pub fn new(rate: f64, jump: Operator) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rate".into(),
                reason: format!("dissipator rate must be finite and >= 0, got {rate}"),
            });
        }
        Ok(Self { rate, jump })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedObservable {
    pub name: String,
    pub op: Operator,
}

/// Hamiltonian, dissipators and recorded observables of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    layout: SpaceLayout,
    hamiltonian: Operator,
    dissipators: Vec<Dissipator>,
    observables: Vec<NamedObservable>,
    reference_rate: f64,
}

impl ModelSpec {
    pub fn new(
        hamiltonian: Operator,
        dissipators: Vec<Dissipator>,
        observables: Vec<NamedObservable>,
        reference_rate: f64,
    ) -> Result<Self> {
        let layout = hamiltonian.layout().clone();
        let defect = hamiltonian.matrix().hermiticity_defect();
        if defect > MODEL_HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        for d in &dissipators {
            if !d.jump.layout().same_shape(&layout) {
                return Err(Error::LayoutMismatch("jump operator layout differs from the model".into()));
            }
        }
        for (i, o) in observables.iter().enumerate() {
            if !o.op.layout().same_shape(&layout) {
                return Err(Error::LayoutMismatch(format!("observable `{}` has a different layout", o.name)));
            }
            let defect = o.op.matrix().hermiticity_defect();
            if defect > MODEL_HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
            if observables[..i].iter().any(|p| p.name == o.name) {
                return Err(Error::InvalidParameter {
                    name: o.name.clone(),
                    reason: "duplicate observable name".into(),
                });
            }
        }
        if !(reference_rate > 0.0 && reference_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "reference_rate".into(),
                reason: format!("must be finite and > 0, got {reference_rate}"),
            });
        }
        Ok(Self { layout, hamiltonian, dissipators, observables, reference_rate })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    pub fn observables(&self) -> &[NamedObservable] {
        &self.observables
    }

    pub fn reference_rate(&self) -> f64 {
        self.reference_rate
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Replaces the recorded observable list.
    pub fn with_observables(mut self, observables: Vec<NamedObservable>) -> Result<Self> {
        let rebuilt = Self::new(self.hamiltonian.clone(), Vec::new(), observables, self.reference_rate)?;
        self.observables = rebuilt.observables;
        Ok(self)
    }

    /// `H_eff = H - i sum gamma L^dag L`.
    fn effective_hamiltonian(&self) -> CMatrix {
        let mut h = self.hamiltonian.matrix().clone();
        for d in &self.dissipators {
            let l = d.jump.matrix();
            h -= &l.adjoint().matmul(l).scale(C64::new(0.0, d.rate));
        }
        h
    }
}

/// Dense right-hand side `d rho / dt`.
pub fn rhs(model: &ModelSpec, rho: &DensityMatrix) -> Result<CMatrix> {
    if !rho.layout().same_shape(model.layout()) {
        return Err(Error::LayoutMismatch("state and model layouts differ".into()));
    }
    let r = rho.matrix();
    let m = model.effective_hamiltonian().matmul(r).scale(C64::new(0.0, -1.0));
    let mut out = &m + &m.adjoint();
    for d in &model.dissipators {
        let l = d.jump.matrix();
        out += &l.matmul(r).matmul(&l.adjoint()).scale_real(2.0 * d.rate);
    }
    Ok(out)
}

/// Sparse form of the right-hand side acting on flat row-major buffers.
struct RhsKernel {
    n: usize,
    h_eff: CsrMatrix,
    jumps: Vec<(f64, CsrMatrix)>,
    scratch: Vec<C64>,
}

impl RhsKernel {
    fn new(model: &ModelSpec) -> Self {
        let n = model.dim();
        Self {
            n,
            h_eff: CsrMatrix::from_dense(&model.effective_hamiltonian()),
            jumps: model
                .dissipators
                .iter()
                .filter(|d| d.rate > 0.0)
                .map(|d| (d.rate, CsrMatrix::from_dense(d.jump.matrix())))
                .collect(),
            scratch: vec![C64::zero(); n * n],
        }
    }

    /// `out = M + M^dag + sum 2 gamma (L rho) L^dag` with `M = -i H_eff rho`.
    fn eval(&mut self, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        self.h_eff.left_mul_into(rho, C64::new(0.0, -1.0), &mut self.scratch);
        for i in 0..n {
            for j in i..n {
                let a = self.scratch[i * n + j];
                let b = self.scratch[j * n + i];
                out[i * n + j] = a + b.conj();
                out[j * n + i] = b + a.conj();
            }
        }
        for (rate, l) in &self.jumps {
            l.left_mul_into(rho, C64::new(1.0, 0.0), &mut self.scratch);
            l.right_mul_adjoint_acc(&self.scratch, C64::new(2.0 * rate, 0.0), out);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-8, abs: 1e-10 }
    }
}

impl Tolerances {
    pub fn halved(self) -> Self {
        Self { rel: 0.5 * self.rel, abs: 0.5 * self.abs }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("rel", self.rel), ("abs", self.abs)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("tolerance must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Per-sample integrator diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    /// `|tr rho - 1|` before any renormalisation.
    pub trace_error: f64,
    /// Smallest eigenvalue of the sampled state, when computed.
    pub min_eigenvalue: Option<f64>,
    pub renormalized: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Row per sample time, column per observable.
    pub values: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub final_state: DensityMatrix,
    /// Accepted integrator steps.
    pub steps: usize,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }

    pub fn max_trace_error(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_error).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.diagnostics.iter().filter_map(|d| d.min_eigenvalue).reduce(f64::min)
    }
}

/// Integration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub t_end: f64,
    pub sample_dt: f64,
    pub tolerances: Tolerances,
    /// Compute the minimum eigenvalue every `eigen_stride` samples (0 disables).
    pub eigen_stride: usize,
    /// Top-Fock-level population limit.
    pub truncation_guard: f64,
}

impl EvolveOptions {
    pub fn new(t_end: f64, sample_dt: f64) -> Self {
        Self {
            t_end,
            sample_dt,
            tolerances: Tolerances::default(),
            eigen_stride: 1,
            truncation_guard: TRUNCATION_GUARD,
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_eigen_stride(mut self, stride: usize) -> Self {
        self.eigen_stride = stride;
        self
    }

    /// Sample times `0, dt, 2 dt, ...` up to `t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let ratio = self.t_end / self.sample_dt;
        let mut n = ratio.floor() as usize;
        if ratio - (n as f64) > 1.0 - 1e-9 {
            n += 1;
        }
        (0..=n).map(|k| k as f64 * self.sample_dt).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t_end".into(),
                reason: format!("must be > 0, got {}", self.t_end),
            });
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sample_dt".into(),
                reason: format!("must be > 0, got {}", self.sample_dt),
            });
        }
        if self.sample_dt > self.t_end {
            return Err(Error::InvalidParameter {
                name: "sample_dt".into(),
                reason: format!("sample_dt {} exceeds t_end {}", self.sample_dt, self.t_end),
            });
        }
        self.tolerances.validate()
    }
}

/// Integrates with default settings.
pub fn evolve(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    t_end: f64,
    sample_dt: f64,
    tolerances: Tolerances,
) -> Result<Trajectory> {
    let opts = EvolveOptions::new(t_end, sample_dt).with_tolerances(tolerances);
    evolve_observed(model, rho0, &opts, &mut |_, _| Ok(()))
}

// Dormand–Prince 5(4) tableau; the nodes are not needed for autonomous systems.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

struct Stages {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::zero();
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

/// Integrates and calls `observer` with every sampled state.
pub fn evolve_observed(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
    observer: &mut dyn FnMut(f64, &DensityMatrix) -> Result<()>,
) -> Result<Trajectory> {
    opts.validate()?;
    if !rho0.layout().same_shape(model.layout()) {
        return Err(Error::LayoutMismatch("initial state and model layouts differ".into()));
    }
    let layout = model.layout().clone();
    let n = model.dim();
    let len = n * n;
    let mut kernel = RhsKernel::new(model);
    let guard = TruncationGuard::new(&layout);
    let tol = opts.tolerances;
    let grid = opts.sample_times();

    let mut y: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let mut st = Stages {
        k: core::array::from_fn(|_| vec![C64::zero(); len]),
        tmp: vec![C64::zero(); len],
        y_new: vec![C64::zero(); len],
    };

    let mut traj = Trajectory {
        times: Vec::with_capacity(grid.len()),
        values: Vec::with_capacity(grid.len()),
        names: model.observables.iter().map(|o| o.name.clone()).collect(),
        diagnostics: Vec::with_capacity(grid.len()),
        final_state: rho0.clone(),
        steps: 0,
    };

    let mut t = 0.0;
    let mut h = initial_step(&mut kernel, &y, &mut st, tol, opts.sample_dt);
    record_sample(model, &layout, &guard, opts, 0, 0.0, &mut y, &mut traj, observer)?;
    kernel.eval(&y, &mut st.k[0]);

    for (idx, &t_target) in grid.iter().enumerate().skip(1) {
        while t < t_target {
            let remaining = t_target - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let h_try = if last { remaining } else { h };
            if h_try <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { time: t, step: h_try });
            }
            let err = dopri_step(&mut kernel, &y, h_try, &mut st, tol);
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
            }
            if err <= 1.0 {
                t = if last { t_target } else { t + h_try };
                core::mem::swap(&mut y, &mut st.y_new);
                st.k.swap(0, 6);
                traj.steps += 1;
                let grow = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).min(MAX_FACTOR) };
                // A step shortened to hit the grid says nothing about the natural size.
                h = if last { h.max(h_try * grow) } else { h_try * grow };
            } else {
                h = h_try * (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
            }
        }
        record_sample(model, &layout, &guard, opts, idx, t_target, &mut y, &mut traj, observer)?;
        kernel.eval(&y, &mut st.k[0]);
    }

    traj.final_state = DensityMatrix::new_unchecked(layout, CMatrix::from_row_major(y))?;
    Ok(traj)
}

/// One Dormand–Prince step from `y` (with `k[0] = f(y)`); returns the scaled error norm.
fn dopri_step(kernel: &mut RhsKernel, y: &[C64], h: f64, st: &mut Stages, tol: Tolerances) -> f64 {
    let Stages { k, tmp, y_new } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    combine(tmp, y, h, &[(A21, k1)]);
    kernel.eval(tmp, k2);
    combine(tmp, y, h, &[(A31, k1), (A32, k2)]);
    kernel.eval(tmp, k3);
    combine(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    kernel.eval(tmp, k4);
    combine(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    kernel.eval(tmp, k5);
    combine(tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
    kernel.eval(tmp, k6);
    combine(y_new, y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
    kernel.eval(y_new, k7);

    let mut sum = 0.0;
    for i in 0..y.len() {
        let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        let scale = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
        sum += e.norm_sqr() / (scale * scale);
    }
    (sum / y.len() as f64).sqrt()
}

/// Standard starting-step heuristic, capped at one sample interval.
fn initial_step(kernel: &mut RhsKernel, y: &[C64], st: &mut Stages, tol: Tolerances, sample_dt: f64) -> f64 {
    kernel.eval(y, &mut st.k[0]);
    let len = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(&st.k[0]) {
        let sc = tol.abs + tol.rel * yi.norm();
        d0 += yi.norm_sqr() / (sc * sc);
        d1 += fi.norm_sqr() / (sc * sc);
    }
    let (d0, d1) = ((d0 / len).sqrt(), (d1 / len).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0.min(sample_dt)
}

struct TruncationGuard {
    /// (label, flat diagonal indices at the top Fock level)
    checks: Vec<(String, Vec<usize>)>,
}

impl TruncationGuard {
    fn new(layout: &SpaceLayout) -> Self {
        let dims = layout.factors();
        let total = layout.total_dim();
        let mut checks = Vec::new();
        for (slot, &kind) in layout.kinds().iter().enumerate() {
            if kind != FactorKind::Boson {
                continue;
            }
            let inner: usize = dims[slot + 1..].iter().product();
            let top = dims[slot] - 1;
            let idx = (0..total).filter(|&i| (i / inner) % dims[slot] == top).collect();
            checks.push((layout.labels()[slot].clone(), idx));
        }
        Self { checks }
    }

    fn check(&self, y: &[C64], n: usize, time: f64, limit: f64) -> Result<()> {
        for (label, idx) in &self.checks {
            let population: f64 = idx.iter().map(|&i| y[i * n + i].re).sum();
            if population > limit {
                return Err(Error::Truncation { label: label.clone(), population, time });
            }
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn record_sample(
    model: &ModelSpec,
    layout: &SpaceLayout,
    guard: &TruncationGuard,
    opts: &EvolveOptions,
    index: usize,
    time: f64,
    y: &mut Vec<C64>,
    traj: &mut Trajectory,
    observer: &mut dyn FnMut(f64, &DensityMatrix) -> Result<()>,
) -> Result<()> {
    let n = model.dim();
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Integration(format!("non-finite state at t = {time}")));
    }
    // Re-Hermitise.
    for i in 0..n {
        y[i * n + i].im = 0.0;
        for j in i + 1..n {
            let a = y[i * n + j];
            let b = y[j * n + i];
            let s = (a + b.conj()) * 0.5;
            y[i * n + j] = s;
            y[j * n + i] = s.conj();
        }
    }
    let tr: f64 = (0..n).map(|i| y[i * n + i].re).sum();
    let trace_error = (tr - 1.0).abs();
    let renormalized = trace_error > RENORMALIZE_THRESHOLD;
    if renormalized {
        let s = 1.0 / tr;
        y.iter_mut().for_each(|z| *z *= s);
    }
    guard.check(y, n, time, opts.truncation_guard)?;

    let rho = DensityMatrix::new_unchecked(layout.clone(), CMatrix::from_row_major(core::mem::take(y)))?;
    let min_eigenvalue = if opts.eigen_stride > 0 && index.is_multiple_of(opts.eigen_stride) {
        Some(rho.min_eigenvalue()?)
    } else {
        None
    };
    let row = model.observables.iter().map(|o| rho.matrix().trace_product(o.op.matrix()).re).collect();
    observer(time, &rho)?;
    *y = rho.into_matrix().into_vec();

    traj.times.push(time);
    traj.values.push(row);
    traj.diagnostics.push(SampleDiagnostics { trace_error, min_eigenvalue, renormalized });
    Ok(())
}

/// Dense `D^2 x D^2` Liouvillian in column-stacking convention,
/// `vec(A X B) = (B^T ⊗ A) vec(X)`.
pub fn dense_liouvillian(model: &ModelSpec) -> Result<CMatrix> {
    dense_liouvillian_capped(model, DEFAULT_ORACLE_CAP)
}

pub fn dense_liouvillian_capped(model: &ModelSpec, cap: usize) -> Result<CMatrix> {
    let d = model.dim();
    if d > cap {
        return Err(Error::OracleCap { dim: d, cap });
    }
    let id = CMatrix::identity(d);
    let h = model.hamiltonian.matrix();
    let mut l = (&id.kron(h) - &h.transpose().kron(&id)).scale(C64::new(0.0, -1.0));
    for diss in &model.dissipators {
        let j = diss.jump.matrix();
        let jdj = j.adjoint().matmul(j);
        let mut term = j.conj().kron(j).scale_real(2.0);
        term -= &id.kron(&jdj);
        term -= &jdj.transpose().kron(&id);
        l += &term.scale_real(diss.rate);
    }
    Ok(l)
}

/// `rho(t) = unvec(exp(L t) vec(rho0))`.
pub fn propagate(liouvillian: &CMatrix, rho0: &DensityMatrix, t: f64) -> Result<CMatrix> {
    let d = rho0.dim();
    if liouvillian.dim() != d * d {
        return Err(Error::InvalidDimension(format!(
            "Liouvillian of dimension {} for a state of dimension {d}",
            liouvillian.dim()
        )));
    }
    let prop = expm(&liouvillian.scale_real(t))?;
    Ok(CMatrix::unvectorize(&prop.mul_vec(&rho0.matrix().vectorize())))
}
