//! Load decomposition into a dc source plus memory elements, and synthesis of
//! the shunt conditioner that cancels the non-active current.

use serde::{Deserialize, Serialize};

use crate::elements::{
    default_gamma, inverse_meminductance_from_spectrum, memcapacitance_from_cosines,
    memductance_from_sines, needs_regularization, regularize, split_repr, strip_linear_term,
    ElementKind, ElementRepr, MemoryElement, Regularization, RegularizedElement,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harmonics::{
    fryze_split, project_waveform_with, same_omega, HarmonicSpectrum, SupplyVoltage,
};
use crate::simulation::{simulate_with, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    /// Every cosine goes to the memcapacitor.
    Capacitive,
    /// Odd cosines go to the meminductor, even cosines to the memcapacitor.
    Inductive,
    /// `Inductive` when `a₁ < 0`, otherwise `Capacitive`.
    #[default]
    Auto,
}

/// Which element absorbs sine terms of even order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvenSineRoute {
    #[default]
    Memristor,
    Meminductor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssignmentPolicy {
    pub mode: AssignmentMode,
    pub route_even_sines: EvenSineRoute,
}

impl AssignmentPolicy {
    pub fn new(mode: AssignmentMode, route_even_sines: EvenSineRoute) -> Self {
        AssignmentPolicy {
            mode,
            route_even_sines,
        }
    }

    /// Resolves `Auto` against the fundamental cosine of `spec`.
    pub fn resolve(&self, spec: &HarmonicSpectrum) -> AssignmentMode {
        match self.mode {
            AssignmentMode::Auto if spec.coefficient(1).0 < 0.0 => AssignmentMode::Inductive,
            AssignmentMode::Auto => AssignmentMode::Capacitive,
            mode => mode,
        }
    }
}

/// Position of a branch in `I_dc + G_M u + Γ_M φ + d(C_M u)/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchRole {
    #[serde(rename = "dc")]
    Dc,
    #[serde(rename = "G_M")]
    Memductance,
    #[serde(rename = "Gamma_M")]
    InverseMeminductance,
    #[serde(rename = "C_M")]
    Memcapacitance,
}

impl BranchRole {
    pub fn label(self) -> &'static str {
        match self {
            BranchRole::Dc => "dc",
            BranchRole::Memductance => "G_M",
            BranchRole::InverseMeminductance => "Gamma_M",
            BranchRole::Memcapacitance => "C_M",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            BranchRole::Dc,
            BranchRole::Memductance,
            BranchRole::InverseMeminductance,
            BranchRole::Memcapacitance,
        ]
        .into_iter()
        .find(|r| r.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BranchRepr", into = "BranchRepr")]
pub struct Branch {
    pub role: BranchRole,
    pub element: MemoryElement,
    pub regularization: Option<Regularization>,
}

#[derive(Serialize, Deserialize)]
struct BranchRepr {
    label: BranchRole,
    #[serde(flatten)]
    element: ElementRepr,
}

impl TryFrom<BranchRepr> for Branch {
    type Error = Error;
    fn try_from(r: BranchRepr) -> Result<Self> {
        let (element, regularization) = split_repr(r.element)?;
        Ok(Branch {
            role: r.label,
            element,
            regularization,
        })
    }
}

impl From<Branch> for BranchRepr {
    fn from(b: Branch) -> Self {
        let element = match b.regularization {
            Some(regularization) => RegularizedElement {
                element: b.element,
                regularization,
            }
            .into(),
            None => b.element.into(),
        };
        BranchRepr {
            label: b.role,
            element,
        }
    }
}

impl Branch {
    fn plain(role: BranchRole, element: MemoryElement) -> Self {
        Branch {
            role,
            element,
            regularization: None,
        }
    }
}

/// Parallel connection of branches fed by one supply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadDecomposition {
    supply: SupplyVoltage,
    branches: Vec<Branch>,
}

impl LoadDecomposition {
    pub fn new(supply: SupplyVoltage, branches: Vec<Branch>) -> Self {
        LoadDecomposition { supply, branches }
    }

    pub fn supply(&self) -> &SupplyVoltage {
        &self.supply
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    fn find(&self, role: BranchRole, kind: ElementKind) -> Option<&MemoryElement> {
        self.branches
            .iter()
            .find(|b| b.role == role && b.element.kind() == kind)
            .map(|b| &b.element)
    }

    pub fn branch(&self, role: BranchRole) -> Option<&Branch> {
        self.branches.iter().find(|b| b.role == role)
    }

    pub fn dc(&self) -> Option<&MemoryElement> {
        self.find(BranchRole::Dc, ElementKind::DcSource)
    }

    pub fn memristor(&self) -> Option<&MemoryElement> {
        self.find(BranchRole::Memductance, ElementKind::Memristor)
    }

    pub fn resistor(&self) -> Option<&MemoryElement> {
        self.find(BranchRole::Memductance, ElementKind::Resistor)
    }

    pub fn meminductor(&self) -> Option<&MemoryElement> {
        self.find(BranchRole::InverseMeminductance, ElementKind::Meminductor)
    }

    pub fn memcapacitor(&self) -> Option<&MemoryElement> {
        self.find(BranchRole::Memcapacitance, ElementKind::Memcapacitor)
    }

    pub fn companions(&self) -> impl Iterator<Item = &MemoryElement> {
        self.branches
            .iter()
            .filter_map(|b| b.regularization.as_ref().map(|r| &r.companion))
    }

    /// Number of physical elements, companions included.
    pub fn element_count(&self) -> usize {
        self.branches.len() + self.companions().count()
    }

    /// Highest harmonic any branch produces.
    pub fn max_harmonic(&self) -> u32 {
        self.branches
            .iter()
            .map(|b| b.element.max_harmonic())
            .max()
            .unwrap_or(0)
    }

    /// Every branch of `self` followed by every branch of `other`.
    pub fn merged(&self, other: &LoadDecomposition) -> Result<LoadDecomposition> {
        same_omega(self.supply.omega(), other.supply.omega())?;
        if self.supply.amplitude() != other.supply.amplitude() {
            return Err(Error::invalid("supply", "amplitudes differ"));
        }
        let mut branches = self.branches.clone();
        branches.extend(other.branches.iter().cloned());
        Ok(LoadDecomposition::new(self.supply, branches))
    }

    /// The same decomposition with every added linear term and its companion
    /// removed.
    pub fn without_regularization(&self) -> Result<LoadDecomposition> {
        let branches = self
            .branches
            .iter()
            .map(|b| match &b.regularization {
                Some(r) => Ok(Branch::plain(
                    b.role,
                    strip_linear_term(&b.element, r.linear_term)?,
                )),
                None => Ok(b.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoadDecomposition::new(self.supply, branches))
    }
}

fn regularized_branch(
    role: BranchRole,
    element: MemoryElement,
    supply: &SupplyVoltage,
) -> Result<Branch> {
    if !needs_regularization(&element) {
        return Ok(Branch::plain(role, element));
    }
    let gamma = default_gamma(&element, supply)?;
    let r = regularize(&element, supply, gamma)?;
    Ok(Branch {
        role,
        element: r.element,
        regularization: Some(r.regularization),
    })
}

/// Realizes `spec` as `I_dc + G_M u + Γ_M φ + d(C_M u)/dt`.
///
/// Sines go to the memristor (even sines optionally to the meminductor); a
/// lone positive fundamental sine becomes an LTI resistor `A/b₁` instead.
/// Cosines go to the memcapacitor, except odd cosines under the inductive
/// mode, which go to the meminductor. Energy-storage elements without a
/// linear term are regularized with the default `γ` and their companion.
pub fn decompose_load(
    supply: &SupplyVoltage,
    spec: &HarmonicSpectrum,
    policy: AssignmentPolicy,
) -> Result<LoadDecomposition> {
    same_omega(supply.omega(), spec.omega())?;
    let mode = policy.resolve(spec);
    let mut sines = Vec::new();
    let mut cosines = Vec::new();
    let mut odd_cosines = Vec::new();
    let mut even_sines = Vec::new();
    for h in spec.terms() {
        let even = h.n % 2 == 0;
        if h.b != 0.0 {
            if even && policy.route_even_sines == EvenSineRoute::Meminductor {
                even_sines.push((h.n, h.b));
            } else {
                sines.push((h.n, h.b));
            }
        }
        if h.a != 0.0 {
            if !even && mode == AssignmentMode::Inductive {
                odd_cosines.push((h.n, h.a));
            } else {
                cosines.push((h.n, h.a));
            }
        }
    }

    let mut branches = Vec::new();
    if spec.dc() != 0.0 {
        branches.push(Branch::plain(
            BranchRole::Dc,
            MemoryElement::dc_source(spec.dc())?,
        ));
    }
    match sines.as_slice() {
        [] => {}
        &[(1, b1)] if b1 > 0.0 => branches.push(Branch::plain(
            BranchRole::Memductance,
            MemoryElement::resistor(supply.amplitude() / b1)?,
        )),
        _ => branches.push(Branch::plain(
            BranchRole::Memductance,
            memductance_from_sines(supply, &sines)?,
        )),
    }
    if !odd_cosines.is_empty() || !even_sines.is_empty() {
        let element = inverse_meminductance_from_spectrum(supply, &odd_cosines, &even_sines)?;
        branches.push(regularized_branch(
            BranchRole::InverseMeminductance,
            element,
            supply,
        )?);
    }
    if !cosines.is_empty() {
        let element = memcapacitance_from_cosines(supply, &cosines)?;
        branches.push(regularized_branch(
            BranchRole::Memcapacitance,
            element,
            supply,
        )?);
    }
    Ok(LoadDecomposition::new(*supply, branches))
}

/// Conditioner injecting the negated non-active current of `spec`. The dc
/// component is never compensated.
pub fn synthesize_conditioner(
    supply: &SupplyVoltage,
    spec: &HarmonicSpectrum,
    policy: AssignmentPolicy,
) -> Result<LoadDecomposition> {
    let split = fryze_split(supply, spec)?;
    decompose_load(supply, &split.nonactive.negate(), policy)
}

/// Spectrum a conditioner injects: the negated non-active current.
pub fn conditioner_target(
    supply: &SupplyVoltage,
    spec: &HarmonicSpectrum,
) -> Result<HarmonicSpectrum> {
    Ok(fryze_split(supply, spec)?.nonactive.negate())
}

/// Simulates one period of `dec` and projects the summed current onto
/// harmonics up to `n_max` (at least the decomposition's own order).
pub fn reconstruct_spectrum(
    dec: &LoadDecomposition,
    n_max: u32,
    exec: Execution,
) -> Result<HarmonicSpectrum> {
    let n_max = n_max.max(dec.max_harmonic()).max(1);
    let spp = (4 * n_max as usize).max(8192);
    let trace = simulate_with(dec, &SimulationConfig::one_period(spp), exec)?;
    project_waveform_with(
        trace.first_period_total(),
        dec.supply().omega(),
        n_max,
        exec,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Largest coefficient deviation over the rms of the target.
    pub coefficient_error: f64,
    /// rms of the waveform deviation over the rms of the target.
    pub waveform_error: f64,
    pub max_rel_rms_error: f64,
}

/// Simulates one period, projects the summed current and compares it with
/// `target`. Errors are absolute when the target is identically zero.
pub fn verify_decomposition(
    dec: &LoadDecomposition,
    target: &HarmonicSpectrum,
) -> Result<VerificationReport> {
    verify_decomposition_with(dec, target, Execution::default())
}

pub fn verify_decomposition_with(
    dec: &LoadDecomposition,
    target: &HarmonicSpectrum,
    exec: Execution,
) -> Result<VerificationReport> {
    same_omega(dec.supply().omega(), target.omega())?;
    let n_max = dec.max_harmonic().max(target.max_order()).max(1);
    let spp = (4 * n_max as usize).max(8192);
    let trace = simulate_with(dec, &SimulationConfig::one_period(spp), exec)?;
    let samples = trace.first_period_total();
    let projected = project_waveform_with(samples, target.omega(), n_max, exec)?;
    let reference = target.sample_period_with(spp, exec);

    let norm = target.rms();
    let scale = if norm > 0.0 { norm } else { 1.0 };
    let coefficient_error = (0..=n_max)
        .map(|n| {
            let (pa, pb) = projected.coefficient(n);
            let (ta, tb) = target.coefficient(n);
            (pa - ta).abs().max((pb - tb).abs())
        })
        .fold(0.0f64, f64::max)
        / scale;
    let mse = samples
        .iter()
        .zip(&reference)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / spp as f64;
    let waveform_error = mse.sqrt() / scale;
    Ok(VerificationReport {
        coefficient_error,
        waveform_error,
        max_rel_rms_error: coefficient_error.max(waveform_error),
    })
}
