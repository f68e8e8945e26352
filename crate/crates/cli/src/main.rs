use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use memsynth::loads::{self, bridge_pf_sweep, SweepPoint, DEFAULT_N_MAX};
use memsynth::simulation::{constitutive_curve, hysteresis_loop, supply_states};
use memsynth::{
    compute_powers, conditioner_target, decompose_load, fryze_split, reconstruct_spectrum,
    simulate, synthesize_conditioner, verify_decomposition, AssignmentMode, AssignmentPolicy,
    BranchRole, ElementKind, EvenSineRoute, Execution, HarmonicSpectrum, Integrator,
    LoadDecomposition, PfConvention, PowerSummary, SimulationConfig, SupplyVoltage,
    VerificationReport,
};
use serde::{Deserialize, Serialize};

const NMAX_ENV: &str = "MEMSYNTH_NMAX_DEFAULT";
/// Relative rms error above which a synthesized network is rejected.
const VERIFY_LIMIT: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<memsynth::Error> for CliError {
    fn from(e: memsynth::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "memsynth",
    version,
    about = "Characterize nonlinear loads with memory elements and synthesize lossless shunt conditioners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the spectrum of a built-in load as JSON.
    LoadModel(LoadModelArgs),
    /// Decompose a load spectrum into dc source and memory elements.
    Characterize(CharacterizeArgs),
    /// Synthesize the conditioner for a load and report power factors.
    Compensate(CompensateArgs),
    /// Simulate decompositions sharing one supply and write a trace CSV.
    Simulate(SimulateArgs),
    /// Report powers of a spectrum, optionally with a bridge firing-delay sweep.
    Report(ReportArgs),
    /// Write the hysteresis loop and constitutive curve of one branch.
    Hysteresis(HysteresisArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadChoice {
    /// Two-harmonic example load on a 230 V rms, 50 Hz supply (fixed).
    Motivating,
    /// Half-wave rectifier feeding a unit resistance.
    Rectifier,
    /// Fully controlled bridge with smoothed dc current.
    Bridge,
}

#[derive(Args)]
struct LoadModelArgs {
    #[arg(value_enum)]
    kind: LoadChoice,
    /// Supply peak voltage [V].
    #[arg(long = "A", default_value_t = 1.0)]
    amplitude: f64,
    /// Supply angular frequency [rad/s].
    #[arg(long, default_value_t = 100.0 * PI)]
    omega: f64,
    /// Highest harmonic kept [default: $MEMSYNTH_NMAX_DEFAULT or 199].
    #[arg(long)]
    nmax: Option<u32>,
    /// Bridge dc-side current [A].
    #[arg(long, default_value_t = 1.0)]
    idc: f64,
    /// Bridge firing delay [rad], in [0, π].
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Output file [default: stdout].
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeChoice {
    Auto,
    Capacitive,
    Inductive,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvenSineChoice {
    Memristor,
    Meminductor,
}

#[derive(Args)]
struct PolicyArgs {
    /// Supply peak voltage [V]; overrides `supply_amplitude` in the file
    /// [default: the file's value, else 1].
    #[arg(long = "A")]
    amplitude: Option<f64>,
    /// Where cosine terms go.
    #[arg(long, value_enum, default_value_t = ModeChoice::Auto)]
    mode: ModeChoice,
    /// Which element absorbs even-order sine terms.
    #[arg(long, value_enum, default_value_t = EvenSineChoice::Memristor)]
    even_sines: EvenSineChoice,
}

impl PolicyArgs {
    fn policy(&self) -> AssignmentPolicy {
        let mode = match self.mode {
            ModeChoice::Auto => AssignmentMode::Auto,
            ModeChoice::Capacitive => AssignmentMode::Capacitive,
            ModeChoice::Inductive => AssignmentMode::Inductive,
        };
        let route = match self.even_sines {
            EvenSineChoice::Memristor => EvenSineRoute::Memristor,
            EvenSineChoice::Meminductor => EvenSineRoute::Meminductor,
        };
        AssignmentPolicy::new(mode, route)
    }
}

#[derive(Args)]
struct CharacterizeArgs {
    /// Spectrum JSON file.
    spectrum: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Output file [default: stdout].
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionChoice {
    /// Physical rms with dc weighted as a₀².
    Rms,
    /// dc weighted like an ac amplitude.
    Paper,
}

impl From<ConventionChoice> for PfConvention {
    fn from(c: ConventionChoice) -> Self {
        match c {
            ConventionChoice::Rms => PfConvention::Rms,
            ConventionChoice::Paper => PfConvention::Paper,
        }
    }
}

#[derive(Args)]
struct CompensateArgs {
    /// Spectrum JSON file.
    spectrum: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Convention used for the headline `pf_before`/`pf_after` values.
    #[arg(long, value_enum, default_value_t = ConventionChoice::Rms)]
    pf_convention: ConventionChoice,
    /// Output file [default: stdout].
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorChoice {
    /// Exact steady-state flux and integrated flux.
    ClosedForm,
    /// Cumulative trapezoid integration from --phi0/--sigma0.
    Trapezoid,
}

#[derive(Args)]
struct SimulateArgs {
    /// Decomposition JSON files; their branches are connected in parallel.
    #[arg(required = true)]
    decompositions: Vec<PathBuf>,
    #[arg(long, default_value_t = 2)]
    periods: u32,
    #[arg(long, default_value_t = 8192)]
    samples_per_period: usize,
    #[arg(long, value_enum, default_value_t = IntegratorChoice::ClosedForm)]
    integrator: IntegratorChoice,
    /// Initial flux for the trapezoid integrator [default: −A/ω].
    #[arg(long, allow_negative_numbers = true)]
    phi0: Option<f64>,
    /// Initial integrated flux for the trapezoid integrator.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sigma0: f64,
    /// Output CSV [default: stdout].
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Spectrum JSON file.
    spectrum: PathBuf,
    /// Supply peak voltage [V] [default: the file's value, else 1].
    #[arg(long = "A")]
    amplitude: Option<f64>,
    #[arg(long, value_enum, default_value_t = ConventionChoice::Rms)]
    pf_convention: ConventionChoice,
    /// Firing delays [rad] for a bridge power-factor sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    sweep_deltas: Vec<f64>,
    /// Bridge dc-side current for the sweep [A].
    #[arg(long, default_value_t = 1.0)]
    idc: f64,
    /// Truncation of the sweep spectra [default: $MEMSYNTH_NMAX_DEFAULT or 199].
    #[arg(long)]
    nmax: Option<u32>,
    /// Output file [default: stdout].
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HysteresisArgs {
    /// Decomposition JSON file.
    decomposition: PathBuf,
    /// Branch label: G_M, Gamma_M or C_M.
    #[arg(long)]
    branch: String,
    #[arg(long, default_value_t = 8192)]
    samples_per_period: usize,
    /// Loop CSV (control, response) over one period.
    #[arg(short, long)]
    output: PathBuf,
    /// Constitutive curve CSV (control, constitutive value).
    #[arg(long)]
    constitutive_out: Option<PathBuf>,
}

/// Spectrum document: the library's spectrum JSON plus an optional supply
/// amplitude so a file carries everything downstream commands need.
#[derive(Serialize, Deserialize)]
struct SpectrumFile {
    #[serde(flatten)]
    spectrum: HarmonicSpectrum,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    supply_amplitude: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct DecompositionFile {
    #[serde(flatten)]
    decomposition: LoadDecomposition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verification: Option<VerificationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_report: Option<PowerReport>,
}

#[derive(Serialize, Deserialize)]
struct ConventionPair {
    rms: PowerSummary,
    paper: PowerSummary,
}

#[derive(Serialize, Deserialize)]
struct PowerReport {
    pf_convention: PfConvention,
    pf_before: f64,
    pf_after: f64,
    before: ConventionPair,
    /// Recomputed from the simulated load-plus-conditioner current.
    after: ConventionPair,
}

#[derive(Serialize)]
struct SpectrumReport {
    pf_convention: PfConvention,
    powers: PowerSummary,
    active_rms: f64,
    nonactive_rms: f64,
    dc: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    bridge_sweep: Vec<SweepPoint>,
}

fn default_n_max() -> CliResult<u32> {
    match std::env::var(NMAX_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Validation(format!("{NMAX_ENV}: not a positive integer: {v:?}"))
        }),
        Err(_) => Ok(DEFAULT_N_MAX),
    }
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let mut out = open_output(path)?;
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    writeln!(out, "{text}")
        .and_then(|_| out.flush())
        .map_err(|e| io_error(path.unwrap_or(Path::new("<stdout>")), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_spectrum(
    path: &Path,
    amplitude: Option<f64>,
) -> CliResult<(SupplyVoltage, HarmonicSpectrum)> {
    let file: SpectrumFile = read_json(path)?;
    let a = amplitude.or(file.supply_amplitude).unwrap_or(1.0);
    let supply = SupplyVoltage::new(a, file.spectrum.omega())?;
    Ok((supply, file.spectrum))
}

fn cmd_load_model(args: &LoadModelArgs) -> CliResult<()> {
    let n_max = match args.nmax {
        Some(n) => n,
        None => default_n_max()?,
    };
    let (supply, spectrum) = match args.kind {
        LoadChoice::Motivating => loads::motivating_example(),
        LoadChoice::Rectifier => loads::rectifier(args.amplitude, args.omega, n_max)?,
        LoadChoice::Bridge => {
            loads::bridge(args.idc, args.delta, args.amplitude, args.omega, n_max)?
        }
    };
    let file = SpectrumFile {
        spectrum,
        supply_amplitude: Some(supply.amplitude()),
    };
    write_json(&file, args.output.as_deref())
}

fn check_verification(report: &VerificationReport, what: &str) -> CliResult<()> {
    if report.max_rel_rms_error > VERIFY_LIMIT {
        return Err(CliError::Numerical(format!(
            "{what} failed verification: relative error {:e} exceeds {VERIFY_LIMIT:e}",
            report.max_rel_rms_error
        )));
    }
    Ok(())
}

fn cmd_characterize(args: &CharacterizeArgs) -> CliResult<()> {
    let (supply, spectrum) = read_spectrum(&args.spectrum, args.policy.amplitude)?;
    let decomposition = decompose_load(&supply, &spectrum, args.policy.policy())?;
    let report = verify_decomposition(&decomposition, &spectrum)?;
    let file = DecompositionFile {
        decomposition,
        verification: Some(report),
        power_report: None,
    };
    // the file is written either way so a failing network can be inspected
    write_json(&file, args.output.as_deref())?;
    check_verification(&report, "decomposition")
}

fn both_conventions(supply: &SupplyVoltage, spec: &HarmonicSpectrum) -> CliResult<ConventionPair> {
    Ok(ConventionPair {
        rms: compute_powers(supply, spec, PfConvention::Rms)?,
        paper: compute_powers(supply, spec, PfConvention::Paper)?,
    })
}

fn cmd_compensate(args: &CompensateArgs) -> CliResult<()> {
    let (supply, spectrum) = read_spectrum(&args.spectrum, args.policy.amplitude)?;
    let policy = args.policy.policy();
    let conditioner = synthesize_conditioner(&supply, &spectrum, policy)?;
    let verification =
        verify_decomposition(&conditioner, &conditioner_target(&supply, &spectrum)?)?;

    let load = decompose_load(&supply, &spectrum, policy)?;
    let n_max = spectrum.max_order().max(1);
    let supplied = reconstruct_spectrum(&load.merged(&conditioner)?, n_max, Execution::default())?;
    let before = both_conventions(&supply, &spectrum)?;
    let after = both_conventions(&supply, &supplied)?;
    let pick = |pair: &ConventionPair| match args.pf_convention {
        ConventionChoice::Rms => pair.rms.power_factor,
        ConventionChoice::Paper => pair.paper.power_factor,
    };
    let power_report = PowerReport {
        pf_convention: args.pf_convention.into(),
        pf_before: pick(&before),
        pf_after: pick(&after),
        before,
        after,
    };
    let file = DecompositionFile {
        decomposition: conditioner,
        verification: Some(verification),
        power_report: Some(power_report),
    };
    write_json(&file, args.output.as_deref())?;
    check_verification(&verification, "conditioner")
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut merged: Option<LoadDecomposition> = None;
    for path in &args.decompositions {
        let file: DecompositionFile = read_json(path)?;
        merged = Some(match merged {
            Some(acc) => acc.merged(&file.decomposition)?,
            None => file.decomposition,
        });
    }
    let dec = merged.expect("clap requires at least one file");
    let config = SimulationConfig {
        periods: args.periods,
        samples_per_period: args.samples_per_period,
        phi0: args.phi0,
        sigma0: args.sigma0,
        integrator: match args.integrator {
            IntegratorChoice::ClosedForm => Integrator::ClosedForm,
            IntegratorChoice::Trapezoid => Integrator::Trapezoid,
        },
    };
    let trace = simulate(&dec, &config)?;
    if trace.i_total.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Numerical(
            "simulation produced non-finite currents".into(),
        ));
    }
    let path = args.output.as_deref();
    let mut out = open_output(path)?;
    trace
        .write_csv(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(path.unwrap_or(Path::new("<stdout>")), e))
}

fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let (supply, spectrum) = read_spectrum(&args.spectrum, args.amplitude)?;
    let convention = args.pf_convention.into();
    let split = fryze_split(&supply, &spectrum)?;
    let bridge_sweep = if args.sweep_deltas.is_empty() {
        Vec::new()
    } else {
        let n_max = match args.nmax {
            Some(n) => n,
            None => default_n_max()?,
        };
        bridge_pf_sweep(
            &supply,
            args.idc,
            &args.sweep_deltas,
            n_max,
            Execution::default(),
        )?
    };
    let report = SpectrumReport {
        pf_convention: convention,
        powers: compute_powers(&supply, &spectrum, convention)?,
        active_rms: split.active.rms(),
        nonactive_rms: split.nonactive.rms(),
        dc: split.dc,
        bridge_sweep,
    };
    write_json(&report, args.output.as_deref())
}

fn write_pairs(path: &Path, header: &str, pairs: &[(f64, f64)]) -> CliResult<()> {
    let mut out = open_output(Some(path))?;
    let mut body = || -> io::Result<()> {
        writeln!(out, "{header}")?;
        for (x, y) in pairs {
            writeln!(out, "{x},{y}")?;
        }
        out.flush()
    };
    body().map_err(|e| io_error(path, e))
}

fn cmd_hysteresis(args: &HysteresisArgs) -> CliResult<()> {
    let role = BranchRole::from_label(&args.branch).ok_or_else(|| {
        CliError::Validation(format!(
            "unknown branch {:?}; expected G_M, Gamma_M or C_M",
            args.branch
        ))
    })?;
    let file: DecompositionFile = read_json(&args.decomposition)?;
    let dec = file.decomposition;
    let branch = dec.branch(role).ok_or_else(|| {
        CliError::Validation(format!("decomposition has no {} branch", args.branch))
    })?;
    let element = &branch.element;
    let (loop_header, curve_header) = match element.kind() {
        ElementKind::Memcapacitor => ("u,q", "phi,rho"),
        ElementKind::Memristor => ("u,i", "phi,q"),
        ElementKind::Meminductor => ("phi,i", "sigma,q"),
        other => {
            return Err(CliError::Validation(format!(
                "branch {} is an LTI {}, not a memory element",
                args.branch,
                other.name()
            )))
        }
    };
    let states = supply_states(
        dec.supply(),
        &SimulationConfig::one_period(args.samples_per_period),
    )?;
    write_pairs(
        &args.output,
        loop_header,
        &hysteresis_loop(element, &states)?,
    )?;
    if let Some(path) = &args.constitutive_out {
        write_pairs(path, curve_header, &constitutive_curve(element, &states)?)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::LoadModel(a) => cmd_load_model(a),
        Command::Characterize(a) => cmd_characterize(a),
        Command::Compensate(a) => cmd_compensate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
        Command::Hysteresis(a) => cmd_hysteresis(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memsynth: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
