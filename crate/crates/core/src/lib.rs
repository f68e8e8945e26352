//! Characterization of nonlinear loads from their harmonic current spectra
//! in terms of memristors, meminductors and memcapacitors, and synthesis of
//! the lossless shunt conditioner that cancels their non-active current.
//!
//! The workflow is:
//!
//! 1. Describe the load current as a [`HarmonicSpectrum`] under a sinusoidal
//!    [`SupplyVoltage`] (or generate one with the [`loads`] module).
//! 2. [`decompose_load`] maps the spectrum onto a dc source plus memory
//!    elements whose incremental values are Chebyshev series in the supply's
//!    flux-linkage or time-integrated flux.
//! 3. [`synthesize_conditioner`] does the same for the negated non-active
//!    (Fryze) current, giving the compensator.
//! 4. [`simulate`] evaluates every branch in the time domain so the result can
//!    be checked against the target waveform and the power factor recomputed.
//!
//! ```
//! use memsynth::{loads, synthesize_conditioner, AssignmentPolicy};
//!
//! let (supply, spectrum) = loads::motivating_example();
//! let conditioner = synthesize_conditioner(&supply, &spectrum, AssignmentPolicy::default()).unwrap();
//! let c_m = conditioner.memcapacitor().unwrap();
//! let constant = c_m.incremental().unwrap().eval(0.0);
//! assert!((constant - 1.0 / (230.0 * std::f64::consts::PI)).abs() < 1e-12);
//! ```
//!
//! Inner loops (per-sample branch evaluation, Fourier projection, parameter
//! sweeps) run on rayon when the `parallel` feature is enabled. Every entry
//! point that fans out has a `*_with` variant taking an explicit
//! [`Execution`] so both paths can be compared.

pub mod chebyshev;
pub mod elements;
mod error;
mod exec;
pub mod harmonics;
pub mod loads;
pub mod simulation;
pub mod synthesis;

pub use chebyshev::{ChebyshevKind, ChebyshevSeries};
pub use elements::{ControlVariable, ElementKind, MemoryElement, RegularizedElement};
pub use error::{Error, Result};
pub use exec::Execution;
pub use harmonics::{
    compute_powers, fryze_split, project_waveform, project_waveform_with, FryzeSplit, Harmonic,
    HarmonicSpectrum, PfConvention, PowerSummary, SupplyVoltage,
};
pub use simulation::{simulate, simulate_with, Integrator, SimulationConfig, SimulationTrace};
pub use synthesis::{
    conditioner_target, decompose_load, reconstruct_spectrum, synthesize_conditioner,
    verify_decomposition, verify_decomposition_with, AssignmentMode, AssignmentPolicy, Branch,
    BranchRole, EvenSineRoute, LoadDecomposition, VerificationReport,
};
