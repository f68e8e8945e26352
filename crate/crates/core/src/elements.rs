//! Memory elements, their LTI counterparts, and the formulas that turn
//! sine/cosine harmonic sets into incremental element values.
//!
//! Under `u = A sin ωt` the steady-state flux is `φ = −(A/ω) cos ωt` and the
//! time-integrated flux is `σ = −(A/ω²) sin ωt`, so scaling them by `−ω/A` and
//! `−ω²/A` gives `cos ωt` and `sin ωt`. Every incremental value is a
//! second-kind series over one of those scaled arguments, which turns
//! `U_{n−1}(cos θ) sin θ = sin nθ` into a harmonic of order `n`.

use serde::{Deserialize, Serialize};

use crate::chebyshev::{ChebyshevKind, ChebyshevSeries};
use crate::error::{Error, Result};
use crate::harmonics::SupplyVoltage;

const CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Memristor,
    Meminductor,
    Memcapacitor,
    Resistor,
    Inductor,
    Capacitor,
    DcSource,
}

impl ElementKind {
    pub fn is_memory(self) -> bool {
        matches!(
            self,
            ElementKind::Memristor | ElementKind::Meminductor | ElementKind::Memcapacitor
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Memristor => "memristor",
            ElementKind::Meminductor => "meminductor",
            ElementKind::Memcapacitor => "memcapacitor",
            ElementKind::Resistor => "resistor",
            ElementKind::Inductor => "inductor",
            ElementKind::Capacitor => "capacitor",
            ElementKind::DcSource => "dc_source",
        }
    }
}

/// Variable the incremental value is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlVariable {
    /// `φ`
    Flux,
    /// `σ = ∫φ dt`
    TimeIntegratedFlux,
    /// `q`
    Charge,
    /// `ρ = ∫q dt`
    TimeIntegratedCharge,
}

impl ControlVariable {
    fn dual(self) -> Self {
        match self {
            ControlVariable::Flux => ControlVariable::Charge,
            ControlVariable::Charge => ControlVariable::Flux,
            ControlVariable::TimeIntegratedFlux => ControlVariable::TimeIntegratedCharge,
            ControlVariable::TimeIntegratedCharge => ControlVariable::TimeIntegratedFlux,
        }
    }

    pub fn is_voltage_driven(self) -> bool {
        matches!(
            self,
            ControlVariable::Flux | ControlVariable::TimeIntegratedFlux
        )
    }
}

/// A circuit element.
///
/// Memory kinds hold an incremental series (`G_M`, `Γ_M` or `C_M`, second
/// kind) and the constitutive series it is the derivative of (`q̂` or `ρ̂`,
/// first kind, zero constant). LTI kinds and the dc source hold a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementRepr", into = "ElementRepr")]
pub struct MemoryElement {
    kind: ElementKind,
    control: Option<ControlVariable>,
    incremental: Option<ChebyshevSeries>,
    constitutive: Option<ChebyshevSeries>,
    scalar_value: Option<f64>,
}

impl MemoryElement {
    /// Builds a memory element from its incremental value; the constitutive
    /// relation is its antiderivative with zero constant.
    pub fn memory(
        kind: ElementKind,
        control: ControlVariable,
        incremental: ChebyshevSeries,
    ) -> Result<Self> {
        if !kind.is_memory() {
            return Err(Error::UnsupportedElement {
                kind: kind.name().into(),
                operation: "a Chebyshev incremental value",
            });
        }
        if incremental.kind() != ChebyshevKind::SecondKind {
            return Err(Error::invalid(
                "incremental",
                "must be a second-kind series",
            ));
        }
        let constitutive = incremental.integrate_u_to_t()?;
        Ok(MemoryElement {
            kind,
            control: Some(control),
            incremental: Some(incremental),
            constitutive: Some(constitutive),
            scalar_value: None,
        })
    }

    fn scalar(kind: ElementKind, value: f64, name: &'static str) -> Result<Self> {
        if !value.is_finite() || (kind != ElementKind::DcSource && value <= 0.0) {
            return Err(Error::invalid(
                name,
                format!("must be positive and finite, got {value}"),
            ));
        }
        Ok(MemoryElement {
            kind,
            control: None,
            incremental: None,
            constitutive: None,
            scalar_value: Some(value),
        })
    }

    pub fn resistor(ohms: f64) -> Result<Self> {
        Self::scalar(ElementKind::Resistor, ohms, "R")
    }

    pub fn inductor(henry: f64) -> Result<Self> {
        Self::scalar(ElementKind::Inductor, henry, "L")
    }

    pub fn capacitor(farad: f64) -> Result<Self> {
        Self::scalar(ElementKind::Capacitor, farad, "C")
    }

    pub fn dc_source(amps: f64) -> Result<Self> {
        Self::scalar(ElementKind::DcSource, amps, "I_dc")
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn control(&self) -> Option<ControlVariable> {
        self.control
    }

    pub fn incremental(&self) -> Option<&ChebyshevSeries> {
        self.incremental.as_ref()
    }

    pub fn constitutive(&self) -> Option<&ChebyshevSeries> {
        self.constitutive.as_ref()
    }

    pub fn scalar_value(&self) -> Option<f64> {
        self.scalar_value
    }

    /// Highest harmonic this element produces under a sinusoidal supply.
    pub fn max_harmonic(&self) -> u32 {
        match &self.incremental {
            Some(s) => s.degree().map_or(0, |d| d as u32 + 1),
            None if self.kind == ElementKind::DcSource => 0,
            None => 1,
        }
    }

    fn memory_series(&self, operation: &'static str) -> Result<&ChebyshevSeries> {
        self.incremental
            .as_ref()
            .ok_or_else(|| Error::UnsupportedElement {
                kind: self.kind.name().into(),
                operation,
            })
    }

    fn with_incremental(&self, incremental: ChebyshevSeries) -> Result<Self> {
        MemoryElement::memory(
            self.kind,
            self.control.expect("memory element"),
            incremental,
        )
    }
}

fn check_orders(terms: &[(u32, f64)], what: &'static str) -> Result<usize> {
    if terms.is_empty() {
        return Err(Error::invalid(what, "at least one harmonic is required"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(n, c) in terms {
        if n == 0 {
            return Err(Error::HarmonicOrder {
                n,
                reason: "dc cannot be realized by a memory element",
            });
        }
        if !c.is_finite() {
            return Err(Error::invalid(
                what,
                format!("non-finite amplitude at n = {n}"),
            ));
        }
        if !seen.insert(n) {
            return Err(Error::HarmonicOrder {
                n,
                reason: "harmonic listed twice",
            });
        }
    }
    Ok(*seen.last().unwrap() as usize)
}

/// Flux-controlled memristor whose current `G_M(φ)·u` is `Σ bₙ sin(nωt)`.
///
/// `G_M(φ) = Σ (bₙ/A) U_{n−1}(−ωφ/A)`.
pub fn memductance_from_sines(
    supply: &SupplyVoltage,
    sines: &[(u32, f64)],
) -> Result<MemoryElement> {
    let top = check_orders(sines, "sines")?;
    let a = supply.amplitude();
    let mut coeffs = vec![0.0; top];
    for &(n, b) in sines {
        coeffs[n as usize - 1] = b / a;
    }
    let series = ChebyshevSeries::second_kind(coeffs, -supply.omega() / a)?;
    MemoryElement::memory(ElementKind::Memristor, ControlVariable::Flux, series)
}

/// Meminductor whose current `Γ_M(σ)·φ` is
/// `Σ_odd aₙ cos(nωt) + Σ_even bₙ sin(nωt)`.
pub fn inverse_meminductance_from_spectrum(
    supply: &SupplyVoltage,
    odd_cosines: &[(u32, f64)],
    even_sines: &[(u32, f64)],
) -> Result<MemoryElement> {
    let all: Vec<(u32, f64)> = odd_cosines.iter().chain(even_sines).copied().collect();
    let top = check_orders(&all, "harmonics")?;
    if let Some(&(n, _)) = odd_cosines.iter().find(|(n, _)| n % 2 == 0) {
        return Err(Error::HarmonicOrder {
            n,
            reason: "a meminductor realizes cosine terms of odd order only",
        });
    }
    if let Some(&(n, _)) = even_sines.iter().find(|(n, _)| n % 2 == 1) {
        return Err(Error::HarmonicOrder {
            n,
            reason: "a meminductor realizes sine terms of even order only",
        });
    }
    let (a, w) = (supply.amplitude(), supply.omega());
    let mut coeffs = vec![0.0; top];
    for &(n, an) in odd_cosines {
        // (ω/A)(−1)^((n+1)/2) aₙ
        let sign = if n.div_ceil(2) % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n as usize - 1] = w / a * sign * an;
    }
    for &(n, bn) in even_sines {
        // −(ω/A)(−1)^((n+2)/2) bₙ
        let sign = if ((n + 2) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n as usize - 1] = -w / a * sign * bn;
    }
    let series = ChebyshevSeries::second_kind(coeffs, -w * w / a)?;
    MemoryElement::memory(
        ElementKind::Meminductor,
        ControlVariable::TimeIntegratedFlux,
        series,
    )
}

/// Flux-controlled memcapacitor whose current `d(C_M(φ)·u)/dt` is
/// `Σ aₙ cos(nωt)`.
///
/// `C_M(φ) = Σ aₙ/(nωA) U_{n−1}(−ωφ/A)`.
pub fn memcapacitance_from_cosines(
    supply: &SupplyVoltage,
    cosines: &[(u32, f64)],
) -> Result<MemoryElement> {
    let top = check_orders(cosines, "cosines")?;
    let (a, w) = (supply.amplitude(), supply.omega());
    let mut coeffs = vec![0.0; top];
    for &(n, an) in cosines {
        coeffs[n as usize - 1] = an / (n as f64 * w * a);
    }
    let series = ChebyshevSeries::second_kind(coeffs, -w / a)?;
    MemoryElement::memory(ElementKind::Memcapacitor, ControlVariable::Flux, series)
}

/// Current-driven dual: memcapacitor ↔ meminductor with `φ ↔ q` and
/// `σ ↔ ρ`; a memristor keeps its kind and swaps `φ ↔ q`. Coefficients are
/// reused unchanged, so applying it twice is the identity.
pub fn dualize(element: &MemoryElement) -> Result<MemoryElement> {
    let kind = match element.kind {
        ElementKind::Memcapacitor => ElementKind::Meminductor,
        ElementKind::Meminductor => ElementKind::Memcapacitor,
        ElementKind::Memristor => ElementKind::Memristor,
        other => {
            return Err(Error::UnsupportedElement {
                kind: other.name().into(),
                operation: "dualization",
            })
        }
    };
    Ok(MemoryElement {
        kind,
        control: element.control.map(ControlVariable::dual),
        ..element.clone()
    })
}

/// `true` when the element's linear (`U₀`) term is missing while higher terms
/// are present.
pub fn needs_regularization(element: &MemoryElement) -> bool {
    match &element.incremental {
        Some(s) => s.coeff(0) == 0.0 && s.degree().is_some_and(|d| d > 0),
        None => false,
    }
}

/// LTI element that cancels the linear term added by [`regularize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Regularization {
    pub gamma: f64,
    /// Value added to the `U₀` coefficient.
    pub linear_term: f64,
    pub companion: MemoryElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedElement {
    pub element: MemoryElement,
    pub regularization: Regularization,
}

impl RegularizedElement {
    pub fn companion(&self) -> &MemoryElement {
        &self.regularization.companion
    }

    pub fn gamma(&self) -> f64 {
        self.regularization.gamma
    }

    /// The element with the added linear term removed.
    pub fn base(&self) -> Result<MemoryElement> {
        strip_linear_term(&self.element, self.regularization.linear_term)
    }
}

pub(crate) fn strip_linear_term(
    element: &MemoryElement,
    linear_term: f64,
) -> Result<MemoryElement> {
    let mut series = element.memory_series("regularization")?.clone();
    series.coeffs_mut()[0] -= linear_term;
    element.with_incremental(series)
}

/// Amplitude `γ` of the added linear current that keeps the incremental value
/// nonnegative over the steady-state range `|x| ≤ 1`, using `|U_k| ≤ k + 1`.
pub fn default_gamma(element: &MemoryElement, supply: &SupplyVoltage) -> Result<f64> {
    let series = element.memory_series("regularization")?;
    let bound: f64 = series
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| (k + 1) as f64 * c.abs())
        .sum();
    let (a, w) = (supply.amplitude(), supply.omega());
    match element.kind {
        ElementKind::Memcapacitor => Ok(bound * w * a),
        ElementKind::Meminductor => Ok(bound * a / w),
        other => Err(Error::UnsupportedElement {
            kind: other.name().into(),
            operation: "regularization",
        }),
    }
}

/// Adds a linear term carrying current `γ cos ωt` and returns the LTI
/// companion whose current is `−γ cos ωt`.
///
/// Memcapacitor: `U₀ += γ/(ωA)`, companion inductor `L = A/(ωγ)`.
/// Meminductor: `U₀ += ωγ/A` (its current `Γ₀φ` is `−γ cos ωt`), companion
/// capacitor `C = γ/(ωA)`.
pub fn regularize(
    element: &MemoryElement,
    supply: &SupplyVoltage,
    gamma: f64,
) -> Result<RegularizedElement> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("must be positive, got {gamma}"),
        ));
    }
    let (a, w) = (supply.amplitude(), supply.omega());
    let (linear_term, companion) = match (element.kind, element.control) {
        (ElementKind::Memcapacitor, Some(ControlVariable::Flux)) => {
            (gamma / (w * a), MemoryElement::inductor(a / (w * gamma))?)
        }
        (ElementKind::Meminductor, Some(ControlVariable::TimeIntegratedFlux)) => {
            (w * gamma / a, MemoryElement::capacitor(gamma / (w * a))?)
        }
        (kind, _) => {
            return Err(Error::UnsupportedElement {
                kind: kind.name().into(),
                operation: "regularization",
            })
        }
    };
    let mut series = element.memory_series("regularization")?.clone();
    if series.coeffs().is_empty() {
        series.coeffs_mut().push(0.0);
    }
    series.coeffs_mut()[0] += linear_term;
    Ok(RegularizedElement {
        element: element.with_incremental(series)?,
        regularization: Regularization {
            gamma,
            linear_term,
            companion,
        },
    })
}

/// JSON shape of an element; also used for decomposition branches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ElementRepr {
    pub kind: ElementKind,
    pub control: Option<ControlVariable>,
    pub scale: Option<f64>,
    #[serde(default)]
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub constitutive_coeffs: Vec<f64>,
    pub scalar_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_term: Option<f64>,
    #[serde(default)]
    pub companion: Option<Box<ElementRepr>>,
}

impl From<MemoryElement> for ElementRepr {
    fn from(e: MemoryElement) -> Self {
        ElementRepr {
            kind: e.kind,
            control: e.control,
            scale: e.incremental.as_ref().map(|s| s.scale()),
            coeffs: e
                .incremental
                .map(|s| s.coeffs().to_vec())
                .unwrap_or_default(),
            constitutive_coeffs: e
                .constitutive
                .map(|s| s.coeffs().to_vec())
                .unwrap_or_default(),
            scalar_value: e.scalar_value,
            gamma: None,
            linear_term: None,
            companion: None,
        }
    }
}

impl TryFrom<ElementRepr> for MemoryElement {
    type Error = Error;
    fn try_from(r: ElementRepr) -> Result<Self> {
        if !r.kind.is_memory() {
            let value = r.scalar_value.ok_or_else(|| {
                Error::invalid("scalar_value", "required for LTI and dc elements")
            })?;
            return MemoryElement::scalar(r.kind, value, "scalar_value");
        }
        let control = r
            .control
            .ok_or_else(|| Error::invalid("control", "required for memory elements"))?;
        let scale = r
            .scale
            .ok_or_else(|| Error::invalid("scale", "required for memory elements"))?;
        let element = MemoryElement::memory(
            r.kind,
            control,
            ChebyshevSeries::second_kind(r.coeffs, scale)?,
        )?;
        if !r.constitutive_coeffs.is_empty() {
            let given = ChebyshevSeries::first_kind(r.constitutive_coeffs, scale)?;
            let inc = element.incremental().unwrap();
            let back = given.differentiate_t_to_u()?;
            let mag = inc.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let len = back.coeffs().len().max(inc.coeffs().len());
            let worst = (0..len).fold(0.0f64, |m, k| m.max((back.coeff(k) - inc.coeff(k)).abs()));
            if worst > CONSISTENCY_TOL * mag || given.coeff(0) != 0.0 {
                return Err(Error::invalid(
                    "constitutive_coeffs",
                    "not an antiderivative of the incremental series",
                ));
            }
        }
        Ok(element)
    }
}

impl From<RegularizedElement> for ElementRepr {
    fn from(r: RegularizedElement) -> Self {
        let mut repr = ElementRepr::from(r.element);
        repr.gamma = Some(r.regularization.gamma);
        repr.linear_term = Some(r.regularization.linear_term);
        repr.companion = Some(Box::new(r.regularization.companion.into()));
        repr
    }
}

/// Splits a repr into the element and its optional regularization.
pub(crate) fn split_repr(mut r: ElementRepr) -> Result<(MemoryElement, Option<Regularization>)> {
    let companion = r.companion.take();
    let gamma = r.gamma.take();
    let linear_term = r.linear_term.take();
    let element = MemoryElement::try_from(r)?;
    let regularization = match (companion, gamma, linear_term) {
        (None, None, None) => None,
        (Some(c), Some(gamma), Some(linear_term)) => {
            let companion = MemoryElement::try_from(*c)?;
            if companion.kind.is_memory() {
                return Err(Error::invalid("companion", "must be an LTI element"));
            }
            Some(Regularization {
                gamma,
                linear_term,
                companion,
            })
        }
        _ => {
            return Err(Error::invalid(
                "companion",
                "companion, gamma and linear_term must appear together",
            ))
        }
    };
    Ok((element, regularization))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2, TAU};

    fn example_supply() -> SupplyVoltage {
        SupplyVoltage::new(230.0 * SQRT_2, 100.0 * PI).unwrap()
    }

    /// rms of `f − g` over `m` phase samples, relative to rms of `g`.
    fn rel_rms(m: usize, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..m {
            let th = TAU * k as f64 / m as f64;
            let (x, y) = (f(th), g(th));
            num += (x - y) * (x - y);
            den += y * y;
        }
        (num / den).sqrt()
    }

    #[test]
    fn single_sine_is_a_resistor() {
        let s = example_supply();
        let b1 = 80.0 * SQRT_2;
        let g = memductance_from_sines(&s, &[(1, b1)]).unwrap();
        let inc = g.incremental().unwrap();
        assert_eq!(inc.coeffs(), &[b1 / s.amplitude()]);
        assert!((1.0 / inc.eval(0.37) - s.amplitude() / b1).abs() < 1e-12);
        assert!(!needs_regularization(&g));
    }

    #[test]
    fn memristor_reproduces_sines() {
        let s = SupplyVoltage::new(3.0, 7.0).unwrap();
        let sines = [(1, 0.4), (2, -1.2), (5, 0.7), (8, 0.05)];
        let g = memductance_from_sines(&s, &sines).unwrap();
        let err = rel_rms(
            512,
            |th| {
                let phi = -(3.0 / 7.0) * th.cos();
                g.incremental().unwrap().eval(phi) * 3.0 * th.sin()
            },
            |th| sines.iter().map(|&(n, b)| b * (n as f64 * th).sin()).sum(),
        );
        assert!(err <= 1e-10, "{err}");
        // q̂ coefficients −bₙ/(nω)
        let q = g.constitutive().unwrap();
        assert!((q.coeff(5) - (-0.7 / (5.0 * 7.0))).abs() < 1e-15);
    }

    #[test]
    fn meminductor_reproduces_target() {
        let s = SupplyVoltage::new(2.5, 4.0).unwrap();
        let odd = [(1, -0.9), (3, 0.3), (7, -0.11)];
        let even = [(2, 0.6), (4, -0.25)];
        let gm = inverse_meminductance_from_spectrum(&s, &odd, &even).unwrap();
        let err = rel_rms(
            512,
            |th| {
                let sigma = -(2.5 / 16.0) * th.sin();
                let phi = -(2.5 / 4.0) * th.cos();
                gm.incremental().unwrap().eval(sigma) * phi
            },
            |th| {
                odd.iter()
                    .map(|&(n, a)| a * (n as f64 * th).cos())
                    .sum::<f64>()
                    + even
                        .iter()
                        .map(|&(n, b)| b * (n as f64 * th).sin())
                        .sum::<f64>()
            },
        );
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn fundamental_cosine_is_an_inductor() {
        let s = example_supply();
        let a1 = -100.0 * SQRT_2;
        let gm = inverse_meminductance_from_spectrum(&s, &[(1, a1)], &[]).unwrap();
        let gamma0 = gm.incremental().unwrap().coeff(0);
        assert!((gamma0 - (-s.omega() * a1 / s.amplitude())).abs() < 1e-15);
        assert!((1.0 / gamma0 - (-s.amplitude() / (s.omega() * a1))).abs() < 1e-15);
    }

    #[test]
    fn meminductor_parity_is_enforced() {
        let s = example_supply();
        assert!(inverse_meminductance_from_spectrum(&s, &[(2, 1.0)], &[]).is_err());
        assert!(inverse_meminductance_from_spectrum(&s, &[], &[(3, 1.0)]).is_err());
        assert!(inverse_meminductance_from_spectrum(&s, &[(1, 1.0)], &[(1, 1.0)]).is_err());
    }

    #[test]
    fn conditioner_memcapacitance_matches_linear_law() {
        let s = example_supply();
        let (a, w) = (s.amplitude(), s.omega());
        let (a1, a2) = (-100.0 * SQRT_2, 50.0 * SQRT_2);
        let c = memcapacitance_from_cosines(&s, &[(1, -a1), (2, -a2)]).unwrap();
        let inc = c.incremental().unwrap();
        let constant = inc.eval(0.0);
        let slope = inc.derivative().eval(0.0);
        assert!((constant - (-a1 / (w * a))).abs() <= 1e-12 * constant.abs());
        assert!((slope - a2 / (a * a)).abs() <= 1e-12 * slope.abs());
        assert!((constant - 1.383_96e-3).abs() < 1e-8);
        assert!((slope - 6.6835e-4).abs() < 1e-8);
        // straight line: value at φ equals constant + slope·φ
        assert!((inc.eval(0.8) - (constant + slope * 0.8)).abs() < 1e-15);
        assert!(!needs_regularization(&c));
    }

    #[test]
    fn single_cosine_is_a_capacitor() {
        let s = SupplyVoltage::new(10.0, 50.0).unwrap();
        let c = memcapacitance_from_cosines(&s, &[(1, 2.0)]).unwrap();
        assert_eq!(c.incremental().unwrap().coeffs(), &[2.0 / (50.0 * 10.0)]);
    }

    #[test]
    fn synthesis_rejects_empty_and_dc() {
        let s = example_supply();
        assert!(memductance_from_sines(&s, &[]).is_err());
        assert!(memcapacitance_from_cosines(&s, &[]).is_err());
        assert!(memcapacitance_from_cosines(&s, &[(0, 1.0)]).is_err());
        assert!(memductance_from_sines(&s, &[(2, 1.0), (2, 3.0)]).is_err());
    }

    #[test]
    fn dualize_involution_and_lti_rejection() {
        let s = example_supply();
        let c = memcapacitance_from_cosines(&s, &[(1, 1.0), (2, 0.5)]).unwrap();
        let l = dualize(&c).unwrap();
        assert_eq!(l.kind(), ElementKind::Meminductor);
        assert_eq!(l.control(), Some(ControlVariable::Charge));
        assert_eq!(l.incremental(), c.incremental());
        assert_eq!(dualize(&l).unwrap(), c);
        let k = memcapacitance_from_cosines(&s, &[(1, 3.0)]).unwrap();
        let kd = dualize(&k).unwrap();
        assert_eq!(
            kd.incremental().unwrap().coeffs(),
            k.incremental().unwrap().coeffs()
        );
        assert!(dualize(&MemoryElement::capacitor(1.0).unwrap()).is_err());
        let g = memductance_from_sines(&s, &[(3, 1.0)]).unwrap();
        assert_eq!(dualize(&dualize(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn regularize_memcapacitor() {
        let s = SupplyVoltage::new(1.0, TAU).unwrap();
        let c = memcapacitance_from_cosines(&s, &[(2, -0.2), (4, -0.04)]).unwrap();
        assert!(needs_regularization(&c));
        let r = regularize(&c, &s, 0.3).unwrap();
        assert_eq!(r.companion().kind(), ElementKind::Inductor);
        assert!((r.companion().scalar_value().unwrap() - 1.0 / (TAU * 0.3)).abs() < 1e-15);
        assert!((r.element.incremental().unwrap().coeff(0) - 0.3 / TAU).abs() < 1e-15);
        assert!(!needs_regularization(&r.element));
        let base = r.base().unwrap();
        assert!(base.incremental().unwrap().coeff(0).abs() < 1e-17);
        assert!(regularize(&c, &s, 0.0).is_err());
        assert!(regularize(&c, &s, -1.0).is_err());
    }

    #[test]
    fn regularize_meminductor_companion_cancels() {
        let s = SupplyVoltage::new(2.0, 3.0).unwrap();
        let gm = inverse_meminductance_from_spectrum(&s, &[(3, 0.5)], &[(2, 0.1)]).unwrap();
        assert!(needs_regularization(&gm));
        let gamma = default_gamma(&gm, &s).unwrap();
        let r = regularize(&gm, &s, gamma).unwrap();
        let cap = r.companion().scalar_value().unwrap();
        let g0 = r.regularization.linear_term;
        for k in 0..64 {
            let th = TAU * k as f64 / 64.0;
            let added = g0 * s.flux(th / s.omega());
            let comp = cap * s.amplitude() * s.omega() * th.cos();
            assert!((added + comp).abs() <= 1e-12 * gamma);
        }
    }

    #[test]
    fn default_gamma_keeps_value_positive() {
        let s = SupplyVoltage::new(1.0, TAU).unwrap();
        let c = memcapacitance_from_cosines(&s, &[(2, -0.2), (4, 0.3), (6, -0.1)]).unwrap();
        let r = regularize(&c, &s, default_gamma(&c, &s).unwrap()).unwrap();
        let inc = r.element.incremental().unwrap();
        for k in 0..=200 {
            let x = -1.0 + k as f64 / 100.0;
            assert!(inc.eval(x / inc.scale()) >= 0.0);
        }
    }

    #[test]
    fn needs_regularization_cases() {
        let s = SupplyVoltage::new(1.0, 1.0).unwrap();
        let zero = MemoryElement::memory(
            ElementKind::Memcapacitor,
            ControlVariable::Flux,
            ChebyshevSeries::second_kind(vec![0.0, 0.0], -1.0).unwrap(),
        )
        .unwrap();
        assert!(!needs_regularization(&zero));
        assert!(!needs_regularization(
            &MemoryElement::resistor(1.0).unwrap()
        ));
        assert!(regularize(&MemoryElement::resistor(1.0).unwrap(), &s, 1.0).is_err());
    }

    #[test]
    fn lti_values_must_be_positive() {
        assert!(MemoryElement::resistor(0.0).is_err());
        assert!(MemoryElement::inductor(-1.0).is_err());
        assert!(MemoryElement::dc_source(-2.0).is_ok());
    }

    #[test]
    fn element_json_shape() {
        let s = SupplyVoltage::new(2.0, 1.0).unwrap();
        let g = memductance_from_sines(&s, &[(1, 1.0), (2, 0.5)]).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["kind"], "memristor");
        assert_eq!(v["control"], "flux");
        assert_eq!(v["scale"], -0.5);
        assert_eq!(v["coeffs"], serde_json::json!([0.5, 0.25]));
        assert_eq!(
            v["constitutive_coeffs"],
            serde_json::json!([0.0, -1.0, -0.25])
        );
        assert!(v["scalar_value"].is_null());
        assert!(v["companion"].is_null());
        let back: MemoryElement = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, g);
        let mut bad = v;
        bad["constitutive_coeffs"] = serde_json::json!([0.0, 1.0, -0.25]);
        assert!(serde_json::from_value::<MemoryElement>(bad).is_err());
        let r: MemoryElement = serde_json::from_str(
            r#"{"kind":"resistor","control":null,"scale":null,"scalar_value":2.0}"#,
        )
        .unwrap();
        assert_eq!(r, MemoryElement::resistor(2.0).unwrap());
    }
}
