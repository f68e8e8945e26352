//! Built-in load spectra: the two-harmonic example load, the half-wave
//! rectifier feeding a unit resistance, and the fully controlled bridge.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harmonics::{
    compute_powers, project_waveform_with, Harmonic, HarmonicSpectrum, PfConvention, SupplyVoltage,
    SQUARE_WAVE_PF,
};
use crate::simulation::{simulate_with, SimulationConfig};
use crate::synthesis::{decompose_load, synthesize_conditioner, AssignmentPolicy};

pub const DEFAULT_N_MAX: u32 = 199;

/// Coefficients smaller than this fraction of the load's scale are dropped.
const DROP_REL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    Motivating,
    HalfWaveRectifier,
    BridgeConverter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub kind: LoadKind,
    pub amplitude: f64,
    pub omega: f64,
    pub n_max: u32,
    /// Firing delay, bridge only.
    pub delta: f64,
    /// Smoothed dc-side current, bridge only.
    pub i_dc: f64,
}

impl LoadModel {
    pub fn supply(&self) -> Result<SupplyVoltage> {
        SupplyVoltage::new(self.amplitude, self.omega)
    }

    pub fn spectrum(&self) -> Result<HarmonicSpectrum> {
        match self.kind {
            LoadKind::Motivating => Ok(motivating_spectrum()),
            LoadKind::HalfWaveRectifier => {
                rectifier_spectrum(self.amplitude, self.omega, self.n_max)
            }
            LoadKind::BridgeConverter => {
                bridge_spectrum(self.i_dc, self.delta, self.omega, self.n_max)
            }
        }
    }
}

/// `A = 230√2`, `ω = 100π`.
pub fn motivating_supply() -> SupplyVoltage {
    SupplyVoltage::new(230.0 * SQRT_2, 100.0 * PI).expect("valid constants")
}

/// `a₁ cos ωt + b₁ sin ωt + a₂ cos 2ωt` with `a₁ = −100√2`, `b₁ = 80√2`,
/// `a₂ = 50√2`.
pub fn motivating_spectrum() -> HarmonicSpectrum {
    HarmonicSpectrum::new(
        100.0 * PI,
        0.0,
        vec![
            Harmonic::new(1, -100.0 * SQRT_2, 80.0 * SQRT_2),
            Harmonic::cosine(2, 50.0 * SQRT_2),
        ],
    )
    .expect("valid constants")
}

pub fn motivating_example() -> (SupplyVoltage, HarmonicSpectrum) {
    (motivating_supply(), motivating_spectrum())
}

fn check_n_max(n_max: u32, min: u32) -> Result<()> {
    if n_max < min {
        return Err(Error::invalid(
            "n_max",
            format!("must be at least {min}, got {n_max}"),
        ));
    }
    Ok(())
}

/// Half-wave rectified `A sin ωt` across a unit resistance:
/// `a₀ = A/π`, `b₁ = A/2`, `aₙ = −2A/(π(n² − 1))` for even `n ≤ n_max`.
pub fn rectifier_spectrum(amplitude: f64, omega: f64, n_max: u32) -> Result<HarmonicSpectrum> {
    check_n_max(n_max, 2)?;
    SupplyVoltage::new(amplitude, omega)?;
    let mut terms = vec![Harmonic::sine(1, amplitude / 2.0)];
    for n in (2..=n_max).step_by(2) {
        let nf = n as f64;
        let a = -2.0 * amplitude / (PI * (nf * nf - 1.0));
        if a.abs() >= DROP_REL * amplitude {
            terms.push(Harmonic::cosine(n, a));
        }
    }
    Ok(HarmonicSpectrum::new(omega, amplitude / PI, terms)?.with_truncation(Some(n_max)))
}

pub fn rectifier(
    amplitude: f64,
    omega: f64,
    n_max: u32,
) -> Result<(SupplyVoltage, HarmonicSpectrum)> {
    Ok((
        SupplyVoltage::new(amplitude, omega)?,
        rectifier_spectrum(amplitude, omega, n_max)?,
    ))
}

/// Square-wave line current of a fully controlled bridge with firing delay
/// `δ`: `aₙ = −(4I_dc/nπ) sin nδ`, `bₙ = (4I_dc/nπ) cos nδ` for odd `n`.
pub fn bridge_spectrum(i_dc: f64, delta: f64, omega: f64, n_max: u32) -> Result<HarmonicSpectrum> {
    check_n_max(n_max, 1)?;
    if !(0.0..=PI).contains(&delta) {
        return Err(Error::invalid(
            "delta",
            format!("must lie in [0, π], got {delta}"),
        ));
    }
    if !i_dc.is_finite() {
        return Err(Error::invalid("i_dc", "must be finite"));
    }
    let floor = DROP_REL * i_dc.abs();
    let drop = |x: f64| if x.abs() < floor { 0.0 } else { x };
    let terms = (1..=n_max)
        .step_by(2)
        .filter_map(|n| {
            let nf = n as f64;
            let k = 4.0 * i_dc / (nf * PI);
            let (s, c) = (nf * delta).sin_cos();
            let h = Harmonic::new(n, drop(-k * s), drop(k * c));
            (h.a != 0.0 || h.b != 0.0).then_some(h)
        })
        .collect();
    Ok(HarmonicSpectrum::new(omega, 0.0, terms)?.with_truncation(Some(n_max)))
}

pub fn bridge(
    i_dc: f64,
    delta: f64,
    amplitude: f64,
    omega: f64,
    n_max: u32,
) -> Result<(SupplyVoltage, HarmonicSpectrum)> {
    Ok((
        SupplyVoltage::new(amplitude, omega)?,
        bridge_spectrum(i_dc, delta, omega, n_max)?,
    ))
}

/// `(2√2/π) cos δ`.
pub fn bridge_power_factor(delta: f64) -> f64 {
    SQUARE_WAVE_PF * delta.cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub pf_uncompensated: f64,
    pub pf_formula: f64,
    /// Recomputed from the simulated load-plus-conditioner current.
    pub pf_compensated: f64,
}

/// Power factor of the bridge before and after compensation over a set of
/// firing delays. Points are returned in input order.
pub fn bridge_pf_sweep(
    supply: &SupplyVoltage,
    i_dc: f64,
    deltas: &[f64],
    n_max: u32,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    // fan out over delays; each point runs its own inner loops sequentially
    exec.map_slice(deltas, |&delta| {
        let spec = bridge_spectrum(i_dc, delta, supply.omega(), n_max)?;
        let before = compute_powers(supply, &spec, PfConvention::Rms)?;
        let load = decompose_load(supply, &spec, AssignmentPolicy::default())?;
        let cond = synthesize_conditioner(supply, &spec, AssignmentPolicy::default())?;
        let spp = (4 * n_max as usize).max(1024);
        let trace = simulate_with(
            &load.merged(&cond)?,
            &SimulationConfig::one_period(spp),
            Execution::Sequential,
        )?;
        let supplied = project_waveform_with(
            trace.first_period_total(),
            supply.omega(),
            n_max,
            Execution::Sequential,
        )?;
        let after = compute_powers(supply, &supplied, PfConvention::Rms)?;
        Ok(SweepPoint {
            delta,
            pf_uncompensated: before.power_factor,
            pf_formula: bridge_power_factor(delta),
            pf_compensated: after.power_factor,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motivating_values() {
        let s = motivating_spectrum();
        assert_eq!(s.coefficient(1).0, -100.0 * SQRT_2);
        assert_eq!(s.dc(), 0.0);
        let p = compute_powers(&motivating_supply(), &s, PfConvention::Rms).unwrap();
        assert!((p.power_factor - 0.58192).abs() < 1e-5);
    }

    #[test]
    fn rectifier_coefficients() {
        let s = rectifier_spectrum(1.0, 1.0, 10).unwrap();
        assert!((s.dc() - 1.0 / PI).abs() < 1e-15);
        assert_eq!(s.coefficient(1), (0.0, 0.5));
        assert!((s.coefficient(2).0 + 0.212_207).abs() < 1e-6);
        assert!((s.coefficient(4).0 + 0.042_441_3).abs() < 1e-7);
        for n in (3..=9).step_by(2) {
            assert_eq!(s.coefficient(n), (0.0, 0.0));
        }
        assert_eq!(s.truncation(), Some(10));
        assert!(rectifier_spectrum(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn rectifier_decay_ratio() {
        let s = rectifier_spectrum(2.0, 1.0, 199).unwrap();
        for n in (2..=196).step_by(2) {
            let ratio = s.coefficient(n).0 / s.coefficient(n + 2).0;
            let nf = n as f64;
            let exact = ((nf + 2.0).powi(2) - 1.0) / (nf * nf - 1.0);
            assert!((ratio - exact).abs() <= 1e-13 * exact);
        }
    }

    #[test]
    fn bridge_coefficients() {
        let s = bridge_spectrum(1.0, PI / 3.0, 1.0, 9).unwrap();
        let (a1, b1) = s.coefficient(1);
        assert!((a1 + 1.102_658).abs() < 1e-6);
        assert!((b1 - 2.0 / PI).abs() < 1e-15);
        // sin(3π/3) rounds to ~1e-16 and is dropped
        assert_eq!(s.coefficient(3).0, 0.0);
        assert_eq!(s.dc(), 0.0);
        assert!(s.terms().iter().all(|h| h.n % 2 == 1));
        let flat = bridge_spectrum(1.0, 0.0, 1.0, 21).unwrap();
        assert!(flat.terms().iter().all(|h| h.a == 0.0));
        assert!(bridge_spectrum(1.0, -0.1, 1.0, 9).is_err());
        assert!(bridge_spectrum(1.0, 3.2, 1.0, 9).is_err());
        assert!(bridge_spectrum(1.0, 0.5, 1.0, 0).is_err());
    }

    #[test]
    fn bridge_rms_tail() {
        let s = bridge_spectrum(1.0, 0.4, 1.0, 199).unwrap();
        assert!((s.rms() - 1.0).abs() <= 3e-3);
    }

    #[test]
    fn model_dispatch() {
        let m = LoadModel {
            kind: LoadKind::BridgeConverter,
            amplitude: 1.0,
            omega: 2.0,
            n_max: 5,
            delta: 0.3,
            i_dc: 2.0,
        };
        assert_eq!(
            m.spectrum().unwrap(),
            bridge_spectrum(2.0, 0.3, 2.0, 5).unwrap()
        );
        assert_eq!(m.supply().unwrap().omega(), 2.0);
    }
}
