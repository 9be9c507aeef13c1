//! Model builders: two cavity-coupled qubits, the reduced two-qubit model
//! with a collective decay channel, and two coupled quantum van der Pol
//! oscillators. Also hosts the named presets.
//!
//! Qubit factors are labelled `q1`, `q2`; cavities `c1`, `c2`; vdP modes
//! `m1`, `m2`. Observables are named `<name>_<1|2>`.

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
use crate::lindblad::{Dissipator, ModelSpec, NamedObservable};
use crate::matrix::CMatrix;
use crate::opalg::{embed, make_elementary, DensityMatrix, Elementary, FactorKind, Operator, SpaceLayout};

fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// Parameters of two driven qubits, each in its own cavity, with photon
/// hopping between the cavities. Frequencies are detunings from the drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityQubitParams {
    pub delta1: f64,
    pub delta2: f64,
    pub deltaq1: f64,
    pub deltaq2: f64,
    pub g0: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub kappa: f64,
    #[serde(rename = "Nc")]
    pub nc: usize,
}

impl CavityQubitParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("deltaq1", self.deltaq1),
            ("deltaq2", self.deltaq2),
            ("J", self.j),
            ("Omega", self.omega),
        ] {
            finite(n, v)?;
        }
        non_negative("g0", self.g0)?;
        non_negative("kappa", self.kappa)?;
        if self.nc < 3 {
            return Err(invalid("Nc", format!("cavity truncation must be >= 3, got {}", self.nc)));
        }
        Ok(())
    }

    /// Hopping block `[[delta1, J], [J, delta2]]` of the cavity quadratic form.
    pub fn quadratic_form(&self) -> CMatrix {
        CMatrix::from_real_rows(&[&[self.delta1, self.j], &[self.j, self.delta2]])
    }
}

/// Which collective lowering operator the reduced model uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectiveChannel {
    /// `S- = (s-^1 + s-^2)/sqrt 2`
    #[default]
    Symmetric,
    /// `Q- = (s-^1 - s-^2)/sqrt 2`
    Antisymmetric,
}

impl CollectiveChannel {
    pub fn complement(self) -> Self {
        match self {
            Self::Symmetric => Self::Antisymmetric,
            Self::Antisymmetric => Self::Symmetric,
        }
    }
}

/// Two qubits decaying through one collective channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedQubitParams {
    pub deltaq1: f64,
    pub deltaq2: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub gamma_eff: f64,
    #[serde(default)]
    pub channel: CollectiveChannel,
    /// Coefficient of an optional `C+ C-` energy shift on the complementary
    /// channel, as left by an off-resonant normal mode.
    #[serde(default)]
    pub dispersive_shift: f64,
}

impl ReducedQubitParams {
    /// Bad-cavity reduction of `p`: rate `g0^2 / kappa`, same qubit terms.
    pub fn from_cavity(p: &CavityQubitParams) -> Result<Self> {
        if p.kappa <= 0.0 {
            return Err(invalid("kappa", "the reduction needs kappa > 0"));
        }
        Ok(Self {
            deltaq1: p.deltaq1,
            deltaq2: p.deltaq2,
            omega: p.omega,
            gamma_eff: p.g0 * p.g0 / p.kappa,
            channel: CollectiveChannel::Symmetric,
            dispersive_shift: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("deltaq1", self.deltaq1),
            ("deltaq2", self.deltaq2),
            ("Omega", self.omega),
            ("dispersive_shift", self.dispersive_shift),
        ] {
            finite(n, v)?;
        }
        if !(self.gamma_eff > 0.0 && self.gamma_eff.is_finite()) {
            return Err(invalid("gamma_eff", format!("must be finite and > 0, got {}", self.gamma_eff)));
        }
        Ok(())
    }
}

/// Two quantum van der Pol oscillators with a two-mode squeezing coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VdpParams {
    pub omega1: f64,
    pub omega2: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Omega1")]
    pub gain1: f64,
    #[serde(rename = "Omega2")]
    pub gain2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl VdpParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("J", self.j),
            ("Omega1", self.gain1),
            ("Omega2", self.gain2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ] {
            non_negative(n, v)?;
        }
        if self.n < 6 {
            return Err(invalid("N", format!("mode truncation must be >= 6, got {}", self.n)));
        }
        Ok(())
    }
}

fn qubit_pair_layout() -> SpaceLayout {
    SpaceLayout::new(vec![2, 2], vec!["q1".into(), "q2".into()], vec![FactorKind::Qubit; 2]).expect("static layout")
}

fn cavity_qubit_layout(nc: usize) -> Result<SpaceLayout> {
    SpaceLayout::new(
        vec![2, 2, nc, nc],
        vec!["q1".into(), "q2".into(), "c1".into(), "c2".into()],
        vec![FactorKind::Qubit, FactorKind::Qubit, FactorKind::Boson, FactorKind::Boson],
    )
}

fn vdp_layout(n: usize) -> Result<SpaceLayout> {
    SpaceLayout::new(vec![n, n], vec!["m1".into(), "m2".into()], vec![FactorKind::Boson; 2])
}

fn on(kind: Elementary, layout: &SpaceLayout, slot: usize) -> Result<Operator> {
    embed(&make_elementary(kind)?, layout, slot)
}

/// Pauli observables `sx_k, sy_k, sz_k` for qubit slots 0 and 1.
fn pauli_observables(layout: &SpaceLayout) -> Result<Vec<NamedObservable>> {
    let mut out = Vec::new();
    for slot in 0..2 {
        for (name, kind) in [("sx", Elementary::PauliX), ("sy", Elementary::PauliY), ("sz", Elementary::PauliZ)] {
            out.push(NamedObservable { name: format!("{name}_{}", slot + 1), op: on(kind, layout, slot)? });
        }
    }
    Ok(out)
}

/// Single-qubit Pauli catalog, in analysis order.
pub fn pauli_catalog() -> Vec<(String, CMatrix)> {
    [("sx", Elementary::PauliX), ("sy", Elementary::PauliY), ("sz", Elementary::PauliZ)]
        .into_iter()
        .map(|(n, k)| (n.to_string(), make_elementary(k).expect("pauli").into_matrix()))
        .collect()
}

/// Single-mode moments up to second order: `x, p, n, x2, p2, xp` with
/// `xp = (xp + px)/2`.
pub fn moment_catalog(n: usize) -> Result<Vec<(String, CMatrix)>> {
    let x = make_elementary(Elementary::Position(n))?.into_matrix();
    let p = make_elementary(Elementary::Momentum(n))?.into_matrix();
    let num = make_elementary(Elementary::Number(n))?.into_matrix();
    let xp = (&x.matmul(&p) + &p.matmul(&x)).scale_real(0.5);
    Ok(vec![
        ("x".into(), x.clone()),
        ("p".into(), p.clone()),
        ("n".into(), num),
        ("x2".into(), x.matmul(&x)),
        ("p2".into(), p.matmul(&p)),
        ("xp".into(), xp),
    ])
}

/// Embeds every catalog entry on slots 0 and 1 as `<name>_1`, `<name>_2`.
fn catalog_observables(layout: &SpaceLayout, catalog: &[(String, CMatrix)]) -> Result<Vec<NamedObservable>> {
    let mut out = Vec::new();
    for slot in 0..2 {
        let single = SpaceLayout::single(layout.factors()[slot], &layout.labels()[slot], layout.kinds()[slot])?;
        for (name, m) in catalog {
            let op = Operator::new(single.clone(), m.clone())?;
            out.push(NamedObservable { name: format!("{name}_{}", slot + 1), op: embed(&op, layout, slot)? });
        }
    }
    Ok(out)
}

/// Full cavity–qubit model in the frame rotating at the drive frequency.
pub fn build_cavity_qubit(p: &CavityQubitParams) -> Result<ModelSpec> {
    p.validate()?;
    let layout = cavity_qubit_layout(p.nc)?;
    let n = layout.total_dim();
    let a = [on(Elementary::Destroy(p.nc), &layout, 2)?, on(Elementary::Destroy(p.nc), &layout, 3)?];
    let sm = [on(Elementary::PauliMinus, &layout, 0)?, on(Elementary::PauliMinus, &layout, 1)?];
    let sz = [on(Elementary::PauliZ, &layout, 0)?, on(Elementary::PauliZ, &layout, 1)?];
    let delta = [p.delta1, p.delta2];
    let deltaq = [p.deltaq1, p.deltaq2];

    let mut h = CMatrix::zeros(n);
    for j in 0..2 {
        let am = a[j].matrix();
        let ad = am.adjoint();
        let s = sm[j].matrix();
        let sp = s.adjoint();
        h += &ad.matmul(am).scale_real(delta[j]);
        h += &sz[j].matrix().scale_real(0.5 * deltaq[j]);
        // i (-1)^j g0 (a^dag s- - a s+), j = 1, 2
        let sign = if j == 0 { -1.0 } else { 1.0 };
        let jc = &ad.matmul(s) - &am.matmul(&sp);
        h += &jc.scale(C64::new(0.0, sign * p.g0));
    }
    let (a1, a2) = (a[0].matrix(), a[1].matrix());
    h += &(&a1.adjoint().matmul(a2) + &a1.matmul(&a2.adjoint())).scale_real(p.j);
    h += &(&sm[0].matrix().adjoint() + sm[0].matrix()).scale_real(p.omega);

    let hamiltonian = Operator::new(layout.clone(), h)?;
    let dissipators = vec![Dissipator::new(p.kappa, a[0].clone())?, Dissipator::new(p.kappa, a[1].clone())?];
    let reference = if p.kappa > 0.0 { p.kappa } else { 1.0 };
    ModelSpec::new(hamiltonian, dissipators, pauli_observables(&layout)?, reference)
}

/// Collective lowering operator of the chosen channel on the qubit pair.
pub fn collective_lowering(channel: CollectiveChannel) -> Operator {
    let layout = qubit_pair_layout();
    let s1 = on(Elementary::PauliMinus, &layout, 0).expect("static");
    let s2 = on(Elementary::PauliMinus, &layout, 1).expect("static");
    let sum = match channel {
        CollectiveChannel::Symmetric => s1.add(&s2),
        CollectiveChannel::Antisymmetric => s1.sub(&s2),
    }
    .expect("same layout");
    sum.scale_real(core::f64::consts::FRAC_1_SQRT_2)
}

/// Reduced two-qubit model with one collective dissipator.
pub fn build_reduced_qubit(p: &ReducedQubitParams) -> Result<ModelSpec> {
    p.validate()?;
    let layout = qubit_pair_layout();
    let z1 = on(Elementary::PauliZ, &layout, 0)?;
    let z2 = on(Elementary::PauliZ, &layout, 1)?;
    let x1 = on(Elementary::PauliX, &layout, 0)?;
    let c = collective_lowering(p.channel);
    let mut h = z1.matrix().scale_real(0.5 * p.deltaq1);
    h += &z2.matrix().scale_real(0.5 * p.deltaq2);
    h += &x1.matrix().scale_real(p.omega);
    if p.dispersive_shift != 0.0 {
        let other = collective_lowering(p.channel.complement());
        h += &other.matrix().adjoint().matmul(other.matrix()).scale_real(p.dispersive_shift);
    }
    let hamiltonian = Operator::new(layout.clone(), h)?;
    ModelSpec::new(hamiltonian, vec![Dissipator::new(p.gamma_eff, c)?], pauli_observables(&layout)?, p.gamma_eff)
}

/// Coupled van der Pol oscillators with gain `a^dag` and two-photon loss `a^2`.
pub fn build_vdp(p: &VdpParams) -> Result<ModelSpec> {
    p.validate()?;
    let layout = vdp_layout(p.n)?;
    let a1 = on(Elementary::Destroy(p.n), &layout, 0)?;
    let a2 = on(Elementary::Destroy(p.n), &layout, 1)?;
    let (m1, m2) = (a1.matrix(), a2.matrix());
    let mut h = m1.adjoint().matmul(m1).scale_real(p.omega1);
    h += &m2.adjoint().matmul(m2).scale_real(p.omega2);
    // i J (a1^dag a2^dag - a1 a2)
    let sq = &m1.adjoint().matmul(&m2.adjoint()) - &m1.matmul(m2);
    h += &sq.scale(C64::new(0.0, p.j));
    let hamiltonian = Operator::new(layout.clone(), h)?;
    let dissipators = vec![
        Dissipator::new(p.gain1, a1.adjoint())?,
        Dissipator::new(p.gain2, a2.adjoint())?,
        Dissipator::new(p.kappa1, a1.mul(&a1)?)?,
        Dissipator::new(p.kappa2, a2.mul(&a2)?)?,
    ];
    let reference = if p.omega1 > 0.0 { p.omega1 } else { 1.0 };
    let observables = catalog_observables(&layout, &moment_catalog(p.n)?)?;
    ModelSpec::new(hamiltonian, dissipators, observables, reference)
}

/// Any of the three model families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelParams {
    CavityQubit(CavityQubitParams),
    ReducedQubit(ReducedQubitParams),
    Vdp(VdpParams),
}

impl ModelParams {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::CavityQubit(_) => "cavity_qubit",
            Self::ReducedQubit(_) => "reduced_qubit",
            Self::Vdp(_) => "vdp",
        }
    }

    pub fn build(&self) -> Result<ModelSpec> {
        match self {
            Self::CavityQubit(p) => build_cavity_qubit(p),
            Self::ReducedQubit(p) => build_reduced_qubit(p),
            Self::Vdp(p) => build_vdp(p),
        }
    }

    /// Single-subsystem observable catalog analysed for synchronization.
    pub fn catalog(&self) -> Result<Vec<(String, CMatrix)>> {
        match self {
            Self::CavityQubit(_) | Self::ReducedQubit(_) => Ok(pauli_catalog()),
            Self::Vdp(p) => moment_catalog(p.n),
        }
    }

    /// Slots of the two synchronizing subsystems.
    pub fn subsystem_slots(&self) -> (usize, usize) {
        (0, 1)
    }

    pub fn is_bosonic_pair(&self) -> bool {
        matches!(self, Self::Vdp(_))
    }
}

/// Qubit amplitudes `[sqrt 0.9, sqrt 0.1]` and `[sqrt 0.7, sqrt 0.3]` in `[g, e]` order.
pub fn fig2_qubit_amplitudes() -> [Vec<C64>; 2] {
    let re = |x: f64| C64::new(x.sqrt(), 0.0);
    [vec![re(0.9), re(0.1)], vec![re(0.7), re(0.3)]]
}

fn fock(n: usize, amps: &[(usize, f64)]) -> Vec<C64> {
    let mut v = vec![C64::zero(); n];
    for &(k, a) in amps {
        v[k] = C64::new(a, 0.0);
    }
    v
}

/// Initial state used by the named presets, built for the layout of `params`.
pub fn standard_initial_state(params: &ModelParams) -> Result<DensityMatrix> {
    let model = params.build()?;
    let layout = model.layout().clone();
    let [q1, q2] = fig2_qubit_amplitudes();
    match params {
        ModelParams::CavityQubit(p) => {
            let vac = fock(p.nc, &[(0, 1.0)]);
            DensityMatrix::product_pure(layout, &[q1, q2, vac.clone(), vac])
        }
        ModelParams::ReducedQubit(_) => DensityMatrix::product_pure(layout, &[q1, q2]),
        ModelParams::Vdp(p) => DensityMatrix::product_pure(
            layout,
            &[fock(p.n, &[(0, 0.5), (1, 0.75f64.sqrt())]), fock(p.n, &[(0, 0.05f64.sqrt()), (1, 0.95f64.sqrt())])],
        ),
    }
}

pub const PRESET_NAMES: [&str; 4] = ["fig2a", "fig2b", "fig2c", "fig3"];

/// Named scenario: parameters, run length and the analysis window.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub params: ModelParams,
    pub t_end: f64,
    pub sample_dt: f64,
    pub window: (f64, f64),
}

impl Preset {
    pub fn model(&self) -> Result<ModelSpec> {
        self.params.build()
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        standard_initial_state(&self.params)
    }
}

fn fig2_base() -> CavityQubitParams {
    let j = -10.0;
    CavityQubitParams { delta1: -j, delta2: -j, deltaq1: 0.0, deltaq2: 0.0, g0: 0.5, j, omega: 5e-4, kappa: 1.0, nc: 4 }
}

/// Second half of the record.
fn second_half(t_end: f64) -> (f64, f64) {
    (0.5 * t_end, t_end)
}

pub fn preset(name: &str) -> Result<Preset> {
    let p = match name {
        "fig2a" => {
            let t_end = 4000.0;
            Preset {
                name: "fig2a",
                params: ModelParams::CavityQubit(fig2_base()),
                t_end,
                sample_dt: 5.0,
                window: second_half(t_end),
            }
        }
        "fig2b" => {
            let t_end = 4000.0;
            let params = CavityQubitParams { omega: 0.0, ..fig2_base() };
            Preset {
                name: "fig2b",
                params: ModelParams::CavityQubit(params),
                t_end,
                sample_dt: 5.0,
                window: second_half(t_end),
            }
        }
        "fig2c" => {
            let base = fig2_base();
            let t_end = 500.0;
            let params =
                CavityQubitParams { delta2: -2.25 * base.j, deltaq1: 0.08, deltaq2: 0.02, omega: 1e-3, ..base };
            Preset {
                name: "fig2c",
                params: ModelParams::CavityQubit(params),
                t_end,
                sample_dt: 2.0,
                window: second_half(t_end),
            }
        }
        "fig3" => {
            let params = VdpParams {
                omega1: 1.0,
                omega2: 1.0,
                j: 0.5,
                gain1: 1e-3,
                gain2: 1e-3,
                kappa1: 2.0,
                kappa2: 2.0,
                n: 12,
            };
            Preset { name: "fig3", params: ModelParams::Vdp(params), t_end: 20.0, sample_dt: 0.02, window: (2.0, 12.0) }
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(p)
}
