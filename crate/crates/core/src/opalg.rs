//! Operators and states on finite-dimensional composite Hilbert spaces.
//!
//! Conventions: qubit basis order is `[|g>, |e>]`, so `sigma_z = diag(-1, +1)`
//! and `sigma_minus = |g><e|`. Bosonic factors use Fock order `|0>, |1>, ...`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 math is only present when std is linked
use num_traits::Float;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::matrix::CMatrix;

/// Tolerance under which an operator is flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues at or below this floor are dropped from entropy sums.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Qubit,
    Boson,
    Generic,
}

/// Ordered tensor-factor structure of a composite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceLayout {
    factors: Vec<usize>,
    labels: Vec<String>,
    kinds: Vec<FactorKind>,
}

impl SpaceLayout {
    pub fn new(factors: Vec<usize>, labels: Vec<String>, kinds: Vec<FactorKind>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidDimension("layout needs at least one factor".into()));
        }
        if factors.len() != labels.len() || factors.len() != kinds.len() {
            return Err(Error::InvalidDimension(format!(
                "{} factors but {} labels and {} kinds",
                factors.len(),
                labels.len(),
                kinds.len()
            )));
        }
        if let Some(d) = factors.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(format!("factor dimension {d} < 2")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidDimension(format!("duplicate factor label `{l}`")));
            }
        }
        Ok(Self { factors, labels, kinds })
    }

    /// Single-factor layout.
    pub fn single(dim: usize, label: &str, kind: FactorKind) -> Result<Self> {
        Self::new(vec![dim], vec![label.to_string()], vec![kind])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kinds(&self) -> &[FactorKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// Same factor dimensions (labels may differ).
    pub fn same_shape(&self, other: &Self) -> bool {
        self.factors == other.factors
    }

    pub fn slot_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Concatenates two layouts, suffixing clashing labels on the right.
    pub fn concat(&self, other: &Self) -> Self {
        let mut labels = self.labels.clone();
        for l in &other.labels {
            let mut candidate = l.clone();
            let mut k = 2;
            while labels.contains(&candidate) {
                candidate = format!("{l}#{k}");
                k += 1;
            }
            labels.push(candidate);
        }
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        let mut kinds = self.kinds.clone();
        kinds.extend_from_slice(&other.kinds);
        Self { factors, labels, kinds }
    }

    fn select(&self, keep: &[usize]) -> Self {
        Self {
            factors: keep.iter().map(|&s| self.factors[s]).collect(),
            labels: keep.iter().map(|&s| self.labels[s].clone()).collect(),
            kinds: keep.iter().map(|&s| self.kinds[s]).collect(),
        }
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.factors.len() {
            return Err(Error::SlotOutOfRange { slot, factors: self.factors.len() });
        }
        Ok(())
    }
}

/// Operator on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        if matrix.dim() != layout.total_dim() {
            return Err(Error::InvalidDimension(format!(
                "matrix dimension {} does not match layout dimension {}",
                matrix.dim(),
                layout.total_dim()
            )));
        }
        let hermitian = matrix.is_hermitian(HERMITIAN_TOL);
        Ok(Self { layout, matrix, hermitian })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.layout.clone(), self.matrix.scale(s)).expect("same layout")
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.scale_real(s), hermitian: self.hermitian }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Self::new(self.layout.clone(), &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Self::new(self.layout.clone(), &self.matrix - &other.matrix)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Self::new(self.layout.clone(), self.matrix.matmul(&other.matrix))
    }

    /// Hilbert–Schmidt inner product `tr(self^dag other)`.
    pub fn hs_inner(&self, other: &Self) -> Result<C64> {
        self.check_layout(other)?;
        Ok(self.matrix.hs_inner(&other.matrix))
    }

    /// Spectral norm for Hermitian operators, Frobenius bound otherwise.
    pub fn norm_bound(&self) -> f64 {
        if self.hermitian {
            if let Ok(ev) = hermitian_eigenvalues(&self.matrix) {
                return ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
            }
        }
        self.matrix.frobenius_norm()
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if !self.layout.same_shape(&other.layout) {
            return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", self.layout.factors(), other.layout.factors())));
        }
        Ok(())
    }
}

/// Trace-one Hermitian positive operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: CMatrix,
}

/// Trace tolerance when constructing a state from user input.
pub const STATE_TRACE_TOL: f64 = 1e-8;

impl DensityMatrix {
    /// Validates trace, Hermiticity and numerical positivity.
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(layout, matrix)?;
        rho.validate(STATE_TRACE_TOL, 1e-10, -1e-8)?;
        Ok(rho)
    }

    /// Only checks the dimension; used on integrator output where the
    /// diagnostics are recorded separately.
    pub fn new_unchecked(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        if matrix.dim() != layout.total_dim() {
            return Err(Error::InvalidDimension(format!(
                "matrix dimension {} does not match layout dimension {}",
                matrix.dim(),
                layout.total_dim()
            )));
        }
        Ok(Self { layout, matrix })
    }

    pub fn validate(&self, trace_tol: f64, herm_tol: f64, min_eig: f64) -> Result<()> {
        let tr = self.matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let defect = self.matrix.hermiticity_defect();
        if defect > herm_tol {
            return Err(Error::NotHermitian(defect));
        }
        let lo = self.min_eigenvalue()?;
        if lo < min_eig {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    /// Pure state from a normalised amplitude vector.
    pub fn pure(layout: SpaceLayout, amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!("amplitudes have squared norm {norm}")));
        }
        Self::new(layout, CMatrix::outer(amplitudes, amplitudes))
    }

    /// Product of pure factor states, one amplitude list per factor.
    pub fn product_pure(layout: SpaceLayout, factors: &[Vec<C64>]) -> Result<Self> {
        if factors.len() != layout.len() {
            return Err(Error::InvalidState(format!("{} factor states for {} factors", factors.len(), layout.len())));
        }
        let mut psi = vec![C64::new(1.0, 0.0)];
        for (slot, amps) in factors.iter().enumerate() {
            let d = layout.factors()[slot];
            if amps.len() != d {
                return Err(Error::InvalidState(format!(
                    "factor `{}` expects {} amplitudes, got {}",
                    layout.labels()[slot],
                    d,
                    amps.len()
                )));
            }
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > STATE_TRACE_TOL {
                return Err(Error::InvalidState(format!(
                    "factor `{}` amplitudes have squared norm {norm}",
                    layout.labels()[slot]
                )));
            }
            psi = psi.iter().flat_map(|p| amps.iter().map(move |a| p * a)).collect();
        }
        Self::pure(layout, &psi)
    }

    pub fn maximally_mixed(layout: SpaceLayout) -> Self {
        let d = layout.total_dim();
        let matrix = CMatrix::identity(d).scale_real(1.0 / d as f64);
        Self { layout, matrix }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// Population of each basis level of one factor.
    pub fn factor_populations(&self, slot: usize) -> Result<Vec<f64>> {
        let reduced = partial_trace(self, &[slot])?;
        Ok((0..reduced.dim()).map(|i| reduced.matrix[(i, i)].re).collect())
    }
}

/// Elementary single-factor operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Destroy(usize),
    Create(usize),
    Number(usize),
    Identity(usize),
    Position(usize),
    Momentum(usize),
    PauliX,
    PauliY,
    PauliZ,
    PauliPlus,
    PauliMinus,
}

pub fn make_elementary(kind: Elementary) -> Result<Operator> {
    let boson_dim = |n: usize| -> Result<usize> {
        if n < 2 {
            Err(Error::InvalidDimension(format!("bosonic truncation {n} < 2")))
        } else {
            Ok(n)
        }
    };
    let re = |x: f64| C64::new(x, 0.0);
    let (matrix, fkind) = match kind {
        Elementary::Destroy(n) => (destroy(boson_dim(n)?), FactorKind::Boson),
        Elementary::Create(n) => (destroy(boson_dim(n)?).adjoint(), FactorKind::Boson),
        Elementary::Number(n) => {
            let n = boson_dim(n)?;
            (CMatrix::from_fn(n, |i, j| if i == j { re(i as f64) } else { C64::zero() }), FactorKind::Boson)
        }
        Elementary::Identity(n) => {
            if n < 2 {
                return Err(Error::InvalidDimension(format!("identity dimension {n} < 2")));
            }
            (CMatrix::identity(n), FactorKind::Generic)
        }
        Elementary::Position(n) => {
            let a = destroy(boson_dim(n)?);
            ((&a + &a.adjoint()).scale_real(core::f64::consts::FRAC_1_SQRT_2), FactorKind::Boson)
        }
        Elementary::Momentum(n) => {
            let a = destroy(boson_dim(n)?);
            ((&a - &a.adjoint()).scale(C64::new(0.0, -core::f64::consts::FRAC_1_SQRT_2)), FactorKind::Boson)
        }
        Elementary::PauliX => (pauli(0), FactorKind::Qubit),
        Elementary::PauliY => (pauli(1), FactorKind::Qubit),
        Elementary::PauliZ => (pauli(2), FactorKind::Qubit),
        Elementary::PauliPlus => (sigma_minus().adjoint(), FactorKind::Qubit),
        Elementary::PauliMinus => (sigma_minus(), FactorKind::Qubit),
    };
    let label = match fkind {
        FactorKind::Qubit => "q",
        FactorKind::Boson => "b",
        FactorKind::Generic => "s",
    };
    Operator::new(SpaceLayout::single(matrix.dim(), label, fkind)?, matrix)
}

fn destroy(n: usize) -> CMatrix {
    CMatrix::from_fn(n, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::zero() })
}

fn sigma_minus() -> CMatrix {
    // |g><e| with basis [g, e]
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
}

fn pauli(axis: usize) -> CMatrix {
    let sm = sigma_minus();
    let sp = sm.adjoint();
    match axis {
        0 => &sp + &sm,
        // sigma_y = -i (sigma_+ - sigma_-)
        1 => (&sp - &sm).scale(C64::new(0.0, -1.0)),
        _ => CMatrix::from_real_rows(&[&[-1.0, 0.0], &[0.0, 1.0]]),
    }
}

/// Places a single-factor operator on `slot` of `layout`, identities elsewhere.
pub fn embed(op: &Operator, layout: &SpaceLayout, slot: usize) -> Result<Operator> {
    layout.check_slot(slot)?;
    if op.layout().len() != 1 {
        return Err(Error::LayoutMismatch("embed expects a single-factor operator".into()));
    }
    if op.dim() != layout.factors()[slot] {
        return Err(Error::LayoutMismatch(format!(
            "operator dimension {} does not match factor `{}` of dimension {}",
            op.dim(),
            layout.labels()[slot],
            layout.factors()[slot]
        )));
    }
    let mut m = CMatrix::identity(1);
    for (s, &d) in layout.factors().iter().enumerate() {
        let factor = if s == slot { op.matrix().clone() } else { CMatrix::identity(d) };
        m = m.kron(&factor);
    }
    Operator::new(layout.clone(), m)
}

/// Kronecker product; the layout is the concatenation of factor lists.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let layout = a.layout().concat(b.layout());
    let matrix = a.matrix().kron(b.matrix());
    let hermitian = a.is_hermitian() && b.is_hermitian();
    Operator { layout, matrix, hermitian }
}

/// Tensor product of states.
pub fn tensor_states(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix { layout: a.layout().concat(b.layout()), matrix: a.matrix().kron(b.matrix()) }
}

/// Traces out every slot not in `keep`; kept factors retain their order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    if keep.is_empty() {
        return Err(Error::InvalidSelection("keep set is empty".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    for w in keep_sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidSelection(format!("slot {} listed twice", w[0])));
        }
    }
    for &s in &keep_sorted {
        layout.check_slot(s)?;
    }
    let dims = layout.factors();
    let nf = dims.len();
    let traced: Vec<usize> = (0..nf).filter(|s| !keep_sorted.contains(s)).collect();
    let kept_dim: usize = keep_sorted.iter().map(|&s| dims[s]).product();
    let traced_dim: usize = traced.iter().map(|&s| dims[s]).product();
    let total = layout.total_dim();

    // Strides of each slot in the full row-major index.
    let mut strides = vec![1usize; nf];
    for s in (0..nf.saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    let offsets = |slots: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &s in slots.iter().rev() {
            off += (idx % dims[s]) * strides[s];
            idx /= dims[s];
        }
        off
    };
    let kept_off: Vec<usize> = (0..kept_dim).map(|k| offsets(&keep_sorted, k)).collect();
    let traced_off: Vec<usize> = (0..traced_dim).map(|k| offsets(&traced, k)).collect();

    let m = rho.matrix().as_slice();
    let mut out = CMatrix::zeros(kept_dim);
    for (i, &ki) in kept_off.iter().enumerate() {
        for (j, &kj) in kept_off.iter().enumerate() {
            let mut acc = C64::zero();
            for &t in &traced_off {
                acc += m[(ki + t) * total + (kj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { layout: layout.select(&keep_sorted), matrix: out })
}

/// `tr(rho A)`.
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<C64> {
    if !rho.layout().same_shape(a.layout()) {
        return Err(Error::LayoutMismatch(format!(
            "state {:?} vs operator {:?}",
            rho.layout().factors(),
            a.layout().factors()
        )));
    }
    Ok(rho.matrix().trace_product(a.matrix()))
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if !a.layout().same_shape(b.layout()) {
        return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", a.layout().factors(), b.layout().factors())));
    }
    Operator::new(a.layout().clone(), a.matrix().commutator(b.matrix()))
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let defect = rho.matrix().hermiticity_defect();
    if defect > 1e-8 {
        return Err(Error::NotHermitian(defect));
    }
    let ev = rho.eigenvalues()?;
    let s: f64 = ev.iter().filter(|&&l| l > EIGEN_FLOOR).map(|&l| -l * l.ln()).sum();
    Ok(s.max(0.0))
}

/// Trace distance `||a - b||_1 / 2`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if !a.layout().same_shape(b.layout()) {
        return Err(Error::LayoutMismatch("trace distance between different shapes".into()));
    }
    let diff = a.matrix() - b.matrix();
    let ev = hermitian_eigenvalues(&diff)?;
    Ok(0.5 * ev.iter().map(|v| v.abs()).sum::<f64>())
}
