//! Sinusoidal supplies, harmonic current spectra, and the power quantities
//! derived from them.
//!
//! Amplitudes are stored as peak values, so `a cos(nωt) + b sin(nωt)` is the
//! contribution of harmonic `n`. Conversion to rms happens only in
//! [`compute_powers`].

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

const OMEGA_REL_TOL: f64 = 1e-12;

/// `u_s(t) = A sin(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SupplyRepr", into = "SupplyRepr")]
pub struct SupplyVoltage {
    amplitude: f64,
    omega: f64,
}

#[derive(Serialize, Deserialize)]
struct SupplyRepr {
    #[serde(rename = "A")]
    amplitude: f64,
    omega: f64,
}

impl TryFrom<SupplyRepr> for SupplyVoltage {
    type Error = Error;
    fn try_from(r: SupplyRepr) -> Result<Self> {
        SupplyVoltage::new(r.amplitude, r.omega)
    }
}

impl From<SupplyVoltage> for SupplyRepr {
    fn from(s: SupplyVoltage) -> Self {
        SupplyRepr {
            amplitude: s.amplitude,
            omega: s.omega,
        }
    }
}

impl SupplyVoltage {
    pub fn new(amplitude: f64, omega: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::invalid(
                "A",
                format!("must be positive, got {amplitude}"),
            ));
        }
        check_omega(omega)?;
        Ok(SupplyVoltage { amplitude, omega })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn rms(&self) -> f64 {
        self.amplitude / SQRT_2
    }

    pub fn voltage(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t).sin()
    }

    /// Steady-state flux-linkage `φ_s(t) = −(A/ω) cos ωt`.
    pub fn flux(&self, t: f64) -> f64 {
        -(self.amplitude / self.omega) * (self.omega * t).cos()
    }

    /// Steady-state time-integrated flux `σ_s(t) = −(A/ω²) sin ωt`.
    pub fn integrated_flux(&self, t: f64) -> f64 {
        -(self.amplitude / (self.omega * self.omega)) * (self.omega * t).sin()
    }

    pub(crate) fn same_frequency(&self, omega: f64) -> Result<()> {
        same_omega(self.omega, omega)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "omega",
            format!("must be positive, got {omega}"),
        ))
    }
}

pub(crate) fn same_omega(left: f64, right: f64) -> Result<()> {
    if (left - right).abs() <= OMEGA_REL_TOL * left.abs().max(right.abs()) {
        Ok(())
    } else {
        Err(Error::FrequencyMismatch { left, right })
    }
}

/// One harmonic `a cos(nωt) + b sin(nωt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub n: u32,
    pub a: f64,
    pub b: f64,
}

impl Harmonic {
    pub fn new(n: u32, a: f64, b: f64) -> Self {
        Harmonic { n, a, b }
    }

    pub fn cosine(n: u32, a: f64) -> Self {
        Harmonic { n, a, b: 0.0 }
    }

    pub fn sine(n: u32, b: f64) -> Self {
        Harmonic { n, a: 0.0, b }
    }
}

/// Periodic current `a₀ + Σ [aₙ cos(nωt) + bₙ sin(nωt)]` with sparse terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumRepr", into = "SpectrumRepr")]
pub struct HarmonicSpectrum {
    omega: f64,
    dc: f64,
    terms: Vec<Harmonic>,
    n_max: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumRepr {
    omega: f64,
    dc: f64,
    harmonics: Vec<Harmonic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_max: Option<u32>,
}

impl TryFrom<SpectrumRepr> for HarmonicSpectrum {
    type Error = Error;
    fn try_from(r: SpectrumRepr) -> Result<Self> {
        Ok(HarmonicSpectrum::new(r.omega, r.dc, r.harmonics)?.with_truncation(r.n_max))
    }
}

impl From<HarmonicSpectrum> for SpectrumRepr {
    fn from(s: HarmonicSpectrum) -> Self {
        SpectrumRepr {
            omega: s.omega,
            dc: s.dc,
            harmonics: s.terms,
            n_max: s.n_max,
        }
    }
}

impl HarmonicSpectrum {
    /// Harmonic orders must be strictly increasing and at least 1.
    pub fn new(omega: f64, dc: f64, terms: Vec<Harmonic>) -> Result<Self> {
        check_omega(omega)?;
        if !dc.is_finite() {
            return Err(Error::invalid("dc", "must be finite"));
        }
        let mut previous = 0;
        for h in &terms {
            if h.n == 0 {
                return Err(Error::HarmonicOrder {
                    n: 0,
                    reason: "the dc term is stored separately",
                });
            }
            if h.n <= previous {
                return Err(Error::HarmonicOrder {
                    n: h.n,
                    reason: "orders must be strictly increasing",
                });
            }
            if !(h.a.is_finite() && h.b.is_finite()) {
                return Err(Error::invalid(
                    "harmonics",
                    format!("non-finite amplitude at n = {}", h.n),
                ));
            }
            previous = h.n;
        }
        Ok(HarmonicSpectrum {
            omega,
            dc,
            terms,
            n_max: None,
        })
    }

    pub fn zero(omega: f64) -> Result<Self> {
        HarmonicSpectrum::new(omega, 0.0, Vec::new())
    }

    /// Attaches the truncation order of an infinite series.
    pub fn with_truncation(mut self, n_max: Option<u32>) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dc(&self) -> f64 {
        self.dc
    }

    pub fn terms(&self) -> &[Harmonic] {
        &self.terms
    }

    pub fn truncation(&self) -> Option<u32> {
        self.n_max
    }

    pub fn is_empty(&self) -> bool {
        self.dc == 0.0 && self.terms.is_empty()
    }

    /// Highest stored harmonic order, 0 when only dc is present.
    pub fn max_order(&self) -> u32 {
        self.terms.last().map_or(0, |h| h.n)
    }

    /// `(aₙ, bₙ)` for harmonic `n`, zero when absent. `n = 0` gives `(a₀, 0)`.
    pub fn coefficient(&self, n: u32) -> (f64, f64) {
        if n == 0 {
            return (self.dc, 0.0);
        }
        match self.terms.binary_search_by_key(&n, |h| h.n) {
            Ok(i) => (self.terms[i].a, self.terms[i].b),
            Err(_) => (0.0, 0.0),
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluate_phase(self.omega * t)
    }

    /// Evaluates at phase `θ = ωt`.
    pub fn evaluate_phase(&self, theta: f64) -> f64 {
        self.terms.iter().fold(self.dc, |acc, h| {
            let (s, c) = (h.n as f64 * theta).sin_cos();
            acc + h.a * c + h.b * s
        })
    }

    /// Samples one period at `θ_k = 2πk/m`, `k = 0..m`.
    pub fn sample_period(&self, m: usize) -> Vec<f64> {
        self.sample_period_with(m, Execution::default())
    }

    pub fn sample_period_with(&self, m: usize, exec: Execution) -> Vec<f64> {
        exec.map_range(m, |k| self.evaluate_phase(TAU * k as f64 / m as f64))
    }

    /// rms value with the dc term weighted as `a₀²`.
    pub fn rms(&self) -> f64 {
        rms_with(self, PfConvention::Rms)
    }

    pub fn negate(&self) -> HarmonicSpectrum {
        HarmonicSpectrum {
            omega: self.omega,
            dc: -self.dc,
            terms: self
                .terms
                .iter()
                .map(|h| Harmonic::new(h.n, -h.a, -h.b))
                .collect(),
            n_max: self.n_max,
        }
    }

    /// Term-wise sum. Harmonics that cancel exactly are dropped.
    pub fn add(&self, other: &HarmonicSpectrum) -> Result<HarmonicSpectrum> {
        same_omega(self.omega, other.omega)?;
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let h = match (self.terms.get(i), other.terms.get(j)) {
                (Some(x), Some(y)) if x.n == y.n => {
                    i += 1;
                    j += 1;
                    Harmonic::new(x.n, x.a + y.a, x.b + y.b)
                }
                (Some(x), Some(y)) if x.n < y.n => {
                    i += 1;
                    *x
                }
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (_, Some(y)) => {
                    j += 1;
                    *y
                }
                (None, None) => unreachable!(),
            };
            if h.a != 0.0 || h.b != 0.0 {
                terms.push(h);
            }
        }
        let n_max = match (self.n_max, other.n_max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Ok(HarmonicSpectrum {
            omega: self.omega,
            dc: self.dc + other.dc,
            terms,
            n_max,
        })
    }

    pub fn sub(&self, other: &HarmonicSpectrum) -> Result<HarmonicSpectrum> {
        self.add(&other.negate())
    }

    /// Sum of any number of spectra sharing one frequency.
    pub fn sum<'a, I>(omega: f64, specs: I) -> Result<HarmonicSpectrum>
    where
        I: IntoIterator<Item = &'a HarmonicSpectrum>,
    {
        specs
            .into_iter()
            .try_fold(HarmonicSpectrum::zero(omega)?, |acc, s| acc.add(s))
    }

    pub fn without_dc(&self) -> HarmonicSpectrum {
        HarmonicSpectrum {
            dc: 0.0,
            ..self.clone()
        }
    }

    /// Drops harmonics whose amplitudes are both at most `tol`.
    pub fn pruned(&self, tol: f64) -> HarmonicSpectrum {
        HarmonicSpectrum {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|h| h.a.abs() > tol || h.b.abs() > tol)
                .collect(),
            ..self.clone()
        }
    }
}

/// Fourier coefficients of one period of uniformly spaced samples.
///
/// `samples[k]` is the value at `t = kT/m`; the endpoint `t = T` is not
/// included. On a periodic grid the trapezoid rule reduces to a plain mean, so
/// the result is exact for trigonometric polynomials of order below `m/2`.
pub fn project_waveform(samples: &[f64], omega: f64, n_max: u32) -> Result<HarmonicSpectrum> {
    project_waveform_with(samples, omega, n_max, Execution::default())
}

pub fn project_waveform_with(
    samples: &[f64],
    omega: f64,
    n_max: u32,
    exec: Execution,
) -> Result<HarmonicSpectrum> {
    let m = samples.len();
    let need = (4 * n_max as usize).max(4);
    if m < need {
        return Err(Error::InsufficientSamples { got: m, need });
    }
    check_omega(omega)?;
    let (sin_tab, cos_tab): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|j| (TAU * j as f64 / m as f64).sin_cos())
        .unzip();
    let scale = 2.0 / m as f64;
    let terms = exec.map_range(n_max as usize, |idx| {
        let n = idx + 1;
        let (mut a, mut b) = (0.0, 0.0);
        let mut phase = 0usize;
        for &f in samples {
            a += f * cos_tab[phase];
            b += f * sin_tab[phase];
            phase += n;
            if phase >= m {
                phase %= m;
            }
        }
        Harmonic::new(n as u32, a * scale, b * scale)
    });
    let dc = samples.iter().sum::<f64>() / m as f64;
    HarmonicSpectrum::new(omega, dc, terms)
}

/// How the dc term enters the rms current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfConvention {
    /// Physical rms: `√(a₀² + ½Σ(aₙ² + bₙ²))`.
    #[default]
    Rms,
    /// `a₀` weighted like an ac peak amplitude: `√(½(a₀² + Σ(aₙ² + bₙ²)))`.
    /// Reproduces the classic textbook rectifier power-factor formulas.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub active_power: f64,
    pub apparent_power: f64,
    pub power_factor: f64,
    pub rms_voltage: f64,
    pub rms_current: f64,
}

fn rms_with(spec: &HarmonicSpectrum, convention: PfConvention) -> f64 {
    let ac: f64 = spec.terms.iter().map(|h| h.a * h.a + h.b * h.b).sum();
    let dc2 = spec.dc * spec.dc;
    match convention {
        PfConvention::Rms => (dc2 + 0.5 * ac).sqrt(),
        PfConvention::Paper => (0.5 * (dc2 + ac)).sqrt(),
    }
}

/// Active power, apparent power and power factor of `spec` under `supply`.
pub fn compute_powers(
    supply: &SupplyVoltage,
    spec: &HarmonicSpectrum,
    convention: PfConvention,
) -> Result<PowerSummary> {
    supply.same_frequency(spec.omega)?;
    let (_, b1) = spec.coefficient(1);
    let active_power = supply.amplitude * b1 / 2.0;
    let rms_voltage = supply.rms();
    let rms_current = rms_with(spec, convention);
    let apparent_power = rms_voltage * rms_current;
    let power_factor = if apparent_power > 0.0 {
        active_power / apparent_power
    } else {
        0.0
    };
    Ok(PowerSummary {
        active_power,
        apparent_power,
        power_factor,
        rms_voltage,
        rms_current,
    })
}

/// Fryze decomposition of a load current.
#[derive(Debug, Clone, PartialEq)]
pub struct FryzeSplit {
    /// In-phase current `(P/‖u‖²)·u`.
    pub active: HarmonicSpectrum,
    /// Everything else except dc.
    pub nonactive: HarmonicSpectrum,
    pub dc: f64,
}

pub fn fryze_split(supply: &SupplyVoltage, spec: &HarmonicSpectrum) -> Result<FryzeSplit> {
    supply.same_frequency(spec.omega)?;
    // With u = A sin ωt, P/‖u‖² · u collapses to b₁ sin ωt; taking b₁ directly
    // keeps the n = 1 sine of the remainder exactly zero.
    let (_, b1) = spec.coefficient(1);
    let active_terms = if b1 != 0.0 {
        vec![Harmonic::sine(1, b1)]
    } else {
        Vec::new()
    };
    let active = HarmonicSpectrum::new(spec.omega, 0.0, active_terms)?;
    let nonactive = spec.without_dc().sub(&active)?.with_truncation(spec.n_max);
    Ok(FryzeSplit {
        active,
        nonactive,
        dc: spec.dc,
    })
}

/// `2√2/π`, the power factor of an ideal square-wave current in phase with
/// a sinusoidal voltage.
pub const SQUARE_WAVE_PF: f64 = 2.0 * SQRT_2 / PI;
