//! Time-domain evaluation of decompositions under the sinusoidal supply.
//!
//! Each branch current is computed directly from the supply states, so a
//! simulation is a per-sample map with no coupling between samples (the
//! trapezoid integrator is the one exception, and it runs sequentially).

use std::f64::consts::TAU;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::elements::{ControlVariable, ElementKind, MemoryElement};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harmonics::SupplyVoltage;
use crate::synthesis::{BranchRole, LoadDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Steady-state `φ = −(A/ω) cos ωt`, `σ = −(A/ω²) sin ωt`; initial
    /// values in the config are ignored.
    #[default]
    ClosedForm,
    /// Cumulative trapezoid integration of `u` and `φ` from `phi0`/`sigma0`.
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub periods: u32,
    pub samples_per_period: usize,
    /// Initial flux; `None` means `−A/ω`.
    pub phi0: Option<f64>,
    pub sigma0: f64,
    pub integrator: Integrator,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            periods: 2,
            samples_per_period: 8192,
            phi0: None,
            sigma0: 0.0,
            integrator: Integrator::ClosedForm,
        }
    }
}

impl SimulationConfig {
    pub fn one_period(samples_per_period: usize) -> Self {
        SimulationConfig {
            periods: 1,
            samples_per_period,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::invalid("periods", "must be positive"));
        }
        if self.samples_per_period < 64 {
            return Err(Error::invalid(
                "samples_per_period",
                format!("must be at least 64, got {}", self.samples_per_period),
            ));
        }
        if self.phi0.is_some_and(|p| !p.is_finite()) || !self.sigma0.is_finite() {
            return Err(Error::invalid("initial state", "must be finite"));
        }
        Ok(())
    }
}

/// Sampled supply: `periods · samples_per_period + 1` points including the
/// final endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyStates {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    /// `du/dt`, always analytic.
    pub du: Vec<f64>,
    pub phi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub samples_per_period: usize,
}

impl SupplyStates {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

pub fn supply_states(supply: &SupplyVoltage, config: &SimulationConfig) -> Result<SupplyStates> {
    supply_states_with(supply, config, Execution::default())
}

pub fn supply_states_with(
    supply: &SupplyVoltage,
    config: &SimulationConfig,
    exec: Execution,
) -> Result<SupplyStates> {
    config.validate()?;
    let spp = config.samples_per_period;
    let len = config.periods as usize * spp + 1;
    let (a, w) = (supply.amplitude(), supply.omega());
    // reduce the phase modulo one period so every period samples identical points
    let rows = exec.map_range(len, |k| {
        let theta = TAU * (k % spp) as f64 / spp as f64;
        let t = TAU * k as f64 / (spp as f64 * w);
        let (s, c) = theta.sin_cos();
        (t, a * s, a * w * c, -(a / w) * c, -(a / (w * w)) * s)
    });
    let mut states = SupplyStates {
        t: Vec::with_capacity(len),
        u: Vec::with_capacity(len),
        du: Vec::with_capacity(len),
        phi: Vec::with_capacity(len),
        sigma: Vec::with_capacity(len),
        samples_per_period: spp,
    };
    for (t, u, du, phi, sigma) in rows {
        states.t.push(t);
        states.u.push(u);
        states.du.push(du);
        states.phi.push(phi);
        states.sigma.push(sigma);
    }
    if config.integrator == Integrator::Trapezoid {
        let h = supply.period() / spp as f64;
        let phi0 = config.phi0.unwrap_or(-a / w);
        states.phi = cumulative_trapezoid(&states.u, h, phi0);
        states.sigma = cumulative_trapezoid(&states.phi, h, config.sigma0);
    }
    Ok(states)
}

fn cumulative_trapezoid(f: &[f64], h: f64, initial: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = initial;
    out.push(acc);
    for pair in f.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Current of one branch plus the memcapacitor/capacitor charge and the
/// instantaneous capacitance where those are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchResponse {
    pub current: Vec<f64>,
    pub charge: Option<Vec<f64>>,
    pub capacitance: Option<Vec<f64>>,
}

fn unsupported(element: &MemoryElement) -> Error {
    Error::UnsupportedElement {
        kind: format!(
            "{} controlled by {:?}",
            element.kind().name(),
            element.control()
        ),
        operation: "simulation under a voltage supply",
    }
}

pub fn branch_current(element: &MemoryElement, states: &SupplyStates) -> Result<BranchResponse> {
    branch_current_with(element, states, Execution::default())
}

pub fn branch_current_with(
    element: &MemoryElement,
    states: &SupplyStates,
    exec: Execution,
) -> Result<BranchResponse> {
    let len = states.len();
    let plain = |current: Vec<f64>| BranchResponse {
        current,
        charge: None,
        capacitance: None,
    };
    let scalar = || element.scalar_value().unwrap_or_default();
    let series = element.incremental();
    Ok(match (element.kind(), element.control()) {
        (ElementKind::Memristor, Some(ControlVariable::Flux)) => {
            let g = series.unwrap();
            plain(exec.map_range(len, |k| g.eval(states.phi[k]) * states.u[k]))
        }
        (ElementKind::Meminductor, Some(ControlVariable::TimeIntegratedFlux)) => {
            let gamma = series.unwrap();
            plain(exec.map_range(len, |k| gamma.eval(states.sigma[k]) * states.phi[k]))
        }
        (ElementKind::Memcapacitor, Some(ControlVariable::Flux)) => {
            let c = series.unwrap();
            let dc = c.derivative();
            // q = C(φ)u, i = C(φ)u′ + u·C′(φ)·φ′ with φ′ = u
            let rows = exec.map_range(len, |k| {
                let (u, phi) = (states.u[k], states.phi[k]);
                let cap = c.eval(phi);
                (cap * states.du[k] + u * u * dc.eval(phi), cap * u, cap)
            });
            let mut current = Vec::with_capacity(len);
            let mut charge = Vec::with_capacity(len);
            let mut capacitance = Vec::with_capacity(len);
            for (i, q, cap) in rows {
                current.push(i);
                charge.push(q);
                capacitance.push(cap);
            }
            BranchResponse {
                current,
                charge: Some(charge),
                capacitance: Some(capacitance),
            }
        }
        (ElementKind::Resistor, _) => {
            let r = scalar();
            plain(states.u.iter().map(|u| u / r).collect())
        }
        (ElementKind::Inductor, _) => {
            let l = scalar();
            plain(states.phi.iter().map(|phi| phi / l).collect())
        }
        (ElementKind::Capacitor, _) => {
            let c = scalar();
            BranchResponse {
                current: states.du.iter().map(|du| c * du).collect(),
                charge: Some(states.u.iter().map(|u| c * u).collect()),
                capacitance: Some(vec![c; len]),
            }
        }
        (ElementKind::DcSource, _) => plain(vec![scalar(); len]),
        _ => return Err(unsupported(element)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchTrace {
    pub role: BranchRole,
    pub kind: ElementKind,
    /// Companion of a regularized element; counted only in `i_total`.
    pub companion: bool,
    pub response: BranchResponse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub branches: Vec<BranchTrace>,
    pub i_total: Vec<f64>,
    pub samples_per_period: usize,
}

pub fn simulate(dec: &LoadDecomposition, config: &SimulationConfig) -> Result<SimulationTrace> {
    simulate_with(dec, config, Execution::default())
}

pub fn simulate_with(
    dec: &LoadDecomposition,
    config: &SimulationConfig,
    exec: Execution,
) -> Result<SimulationTrace> {
    let states = supply_states_with(dec.supply(), config, exec)?;
    let mut branches = Vec::new();
    for branch in dec.branches() {
        branches.push(BranchTrace {
            role: branch.role,
            kind: branch.element.kind(),
            companion: false,
            response: branch_current_with(&branch.element, &states, exec)?,
        });
        if let Some(reg) = &branch.regularization {
            branches.push(BranchTrace {
                role: branch.role,
                kind: reg.companion.kind(),
                companion: true,
                response: branch_current_with(&reg.companion, &states, exec)?,
            });
        }
    }
    let mut i_total = vec![0.0; states.len()];
    for b in &branches {
        for (acc, i) in i_total.iter_mut().zip(&b.response.current) {
            *acc += i;
        }
    }
    if i_total.iter().any(|i| !i.is_finite()) {
        return Err(Error::Numerical("non-finite branch current".into()));
    }
    Ok(SimulationTrace {
        t: states.t,
        u: states.u,
        phi: states.phi,
        sigma: states.sigma,
        branches,
        i_total,
        samples_per_period: states.samples_per_period,
    })
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// First period of the total current without the duplicated endpoint,
    /// ready for [`project_waveform`](crate::project_waveform).
    pub fn first_period_total(&self) -> &[f64] {
        &self.i_total[..self.samples_per_period]
    }

    fn column_sum(
        &self,
        role: BranchRole,
        pick: impl Fn(&BranchResponse) -> Option<&Vec<f64>>,
    ) -> Option<Vec<f64>> {
        let mut out: Option<Vec<f64>> = None;
        for b in self
            .branches
            .iter()
            .filter(|b| b.role == role && !b.companion)
        {
            if let Some(col) = pick(&b.response) {
                let acc = out.get_or_insert_with(|| vec![0.0; col.len()]);
                for (a, v) in acc.iter_mut().zip(col) {
                    *a += v;
                }
            }
        }
        out
    }

    /// Summed current of the non-companion branches with `role`.
    pub fn role_current(&self, role: BranchRole) -> Option<Vec<f64>> {
        self.column_sum(role, |r| Some(&r.current))
    }

    /// Writes the trace as CSV with header
    /// `t,u,phi,sigma,i_total,i_dc,i_GM,i_GammaM,i_CM,q_CM,C_of_t`.
    ///
    /// Branch columns sum every non-companion branch of that role; absent
    /// roles are written as empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "t,u,phi,sigma,i_total,i_dc,i_GM,i_GammaM,i_CM,q_CM,C_of_t"
        )?;
        let columns = [
            self.role_current(BranchRole::Dc),
            self.role_current(BranchRole::Memductance),
            self.role_current(BranchRole::InverseMeminductance),
            self.role_current(BranchRole::Memcapacitance),
            self.column_sum(BranchRole::Memcapacitance, |r| r.charge.as_ref()),
            self.column_sum(BranchRole::Memcapacitance, |r| r.capacitance.as_ref()),
        ];
        for k in 0..self.len() {
            write!(
                out,
                "{},{},{},{},{}",
                self.t[k], self.u[k], self.phi[k], self.sigma[k], self.i_total[k]
            )?;
            for col in &columns {
                match col {
                    Some(c) => write!(out, ",{}", c[k])?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Trapezoid average of `u · i` over the whole trace.
pub fn branch_average_power(trace: &SimulationTrace, branch: usize) -> Result<f64> {
    let b = trace
        .branches
        .get(branch)
        .ok_or_else(|| Error::invalid("branch", format!("index {branch} out of range")))?;
    Ok(trapezoid_mean(
        &trace
            .u
            .iter()
            .zip(&b.response.current)
            .map(|(u, i)| u * i)
            .collect::<Vec<_>>(),
    ))
}

/// Trapezoid average of `u · i_total`.
pub fn total_average_power(trace: &SimulationTrace) -> f64 {
    trapezoid_mean(
        &trace
            .u
            .iter()
            .zip(&trace.i_total)
            .map(|(u, i)| u * i)
            .collect::<Vec<_>>(),
    )
}

pub(crate) fn trapezoid_mean(f: &[f64]) -> f64 {
    match f.len() {
        0 => 0.0,
        1 => f[0],
        n => {
            let interior: f64 = f[1..n - 1].iter().sum();
            (interior + 0.5 * (f[0] + f[n - 1])) / (n - 1) as f64
        }
    }
}

/// One closed period of the element's characteristic loop: `(u, q)` for a
/// memcapacitor, `(u, i)` for a memristor, `(φ, i)` for a meminductor.
pub fn hysteresis_loop(element: &MemoryElement, states: &SupplyStates) -> Result<Vec<(f64, f64)>> {
    if !element.kind().is_memory() {
        return Err(Error::UnsupportedElement {
            kind: element.kind().name().into(),
            operation: "hysteresis loops",
        });
    }
    let response = branch_current(element, states)?;
    let n = (states.samples_per_period + 1).min(states.len());
    let pairs = match element.kind() {
        ElementKind::Memcapacitor => {
            let q = response.charge.expect("memcapacitor charge");
            (0..n).map(|k| (states.u[k], q[k])).collect()
        }
        ElementKind::Memristor => (0..n).map(|k| (states.u[k], response.current[k])).collect(),
        ElementKind::Meminductor => (0..n)
            .map(|k| (states.phi[k], response.current[k]))
            .collect(),
        _ => unreachable!(),
    };
    Ok(pairs)
}

/// `(control, q̂ or ρ̂)` over one period: the single-valued constitutive
/// relation traced by the steady state.
pub fn constitutive_curve(
    element: &MemoryElement,
    states: &SupplyStates,
) -> Result<Vec<(f64, f64)>> {
    let (Some(series), Some(control)) = (element.constitutive(), element.control()) else {
        return Err(Error::UnsupportedElement {
            kind: element.kind().name().into(),
            operation: "constitutive curves",
        });
    };
    let source = match control {
        ControlVariable::Flux => &states.phi,
        ControlVariable::TimeIntegratedFlux => &states.sigma,
        _ => return Err(unsupported(element)),
    };
    let n = (states.samples_per_period + 1).min(states.len());
    Ok(source[..n].iter().map(|&v| (v, series.eval(v))).collect())
}
