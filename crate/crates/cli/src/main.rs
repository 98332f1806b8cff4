//! `weylkms`: batch front end to the weyl-kms library.
//!
//! Every run prints the resolved configuration as a one-line JSON header on stdout,
//! followed by either a JSON result line or a CSV table (to `--out` when given).
//! Exit codes: 0 success, 2 invalid input, 3 numerical certificate failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use weyl_kms::berezin::{self, CoherentState, PhaseSpaceGrid};
use weyl_kms::equilibrium::{self, KmsMode, WeakDerivationSpec};
use weyl_kms::gibbsmc::{self, GaussianMeasureSpec, ModeCoefficients};
use weyl_kms::quantize;
use weyl_kms::spectrum::{self, BoxSpectrum};
use weyl_kms::states::{self, Excitation, ModeVector, StateKind, StateSpec, DEFAULT_TAIL_TOL};
use weyl_kms::testfn::TestFunction;
use weyl_kms::weyl::{Label, WeylElement};

const SCHEMA: &str = "# schema=1";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] weyl_kms::Error),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "weylkms", version, about = "Quantization, KMS states and classical limits of the free Bose gas")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// omega(W(f)) for a state spec and a test function or mode vector.
    /// JSON: {"value", "tail_bound"}.
    ComputeState(ComputeStateArgs),
    /// Chemical potential of a quantum box Gibbs state at prescribed density.
    /// JSON: {"mu", "density", "tail_bound"}.
    SolveMu(SolveMuArgs),
    /// Strict-deformation residuals along an h grid.
    /// CSV: h,dirac_residual,vonneumann_residual,rieffel_lower,rieffel_upper.
    CheckSdq(CheckSdqArgs),
    /// Weak classical KMS residual. JSON: {"residual"}.
    CheckKms(CheckKmsArgs),
    /// Semiclassical (CSV: h,quantum,classical,error) or thermodynamic
    /// (CSV: L,mu,cutoff,value,target,error,tail_bound) limit scans.
    LimitScan(LimitScanArgs),
    /// Gaussian Gibbs samples (CSV: q1,p1,q2,p2,...) or, with --f, a Monte Carlo
    /// summary JSON {"estimate", "stderr", "closed_form"}.
    SampleGibbs(SampleGibbsArgs),
    /// Phase-space quadrature of a Berezin matrix element against the closed form.
    /// JSON: {"quad", "closed_form", "rel_err"}.
    BerezinVerify(BerezinArgs),
    /// Critical density of the free Bose gas. JSON: {"rho_c"}.
    CriticalDensity(CriticalArgs),
    /// Partial traces of H^{-s} on a box at a cutoff and twice that cutoff.
    /// JSON: {"partial", "doubled_partial", "relative_change", "converges", "tail_bound"}.
    TraceCheck(TraceArgs),
    /// Partial l2 sums of a non-quantizable element and of its formal preimage.
    /// CSV: k,target_partial_l2,preimage_partial_l2.
    Witness(WitnessArgs),
}

#[derive(Args, Debug, Serialize)]
struct TableOut {
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ComputeStateArgs {
    /// StateSpec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// TestFunction JSON or mode-vector JSON ({"modes": [...]}).
    #[arg(long)]
    testfn: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    tail_tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct SolveMuArgs {
    #[arg(long)]
    rho: f64,
    #[arg(long = "L")]
    half_side: f64,
    #[arg(long, default_value_t = 3)]
    nu: usize,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 64)]
    cutoff: u32,
}

#[derive(Args, Debug, Serialize)]
struct CheckSdqArgs {
    /// Label JSON ([[re, im], ...]).
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    /// Classical WeylElement JSON for the Rieffel profile (default W(f) + W(g)).
    #[arg(long)]
    element: Option<PathBuf>,
    /// "a:b:steps[:log]".
    #[arg(long, default_value = "1e-4:1e-1:20:log")]
    h_grid: String,
    #[command(flatten)]
    #[serde(flatten)]
    out: TableOut,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum KmsModeArg {
    Analytic,
    Fd,
}

#[derive(Args, Debug, Serialize)]
struct CheckKmsArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long, value_enum, default_value_t = KmsModeArg::Analytic)]
    mode: KmsModeArg,
    #[arg(long, default_value_t = equilibrium::DEFAULT_FD_STEP)]
    dt: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ScanKind {
    Semiclassical,
    Thermodynamic,
}

#[derive(Args, Debug, Serialize)]
struct LimitScanArgs {
    #[arg(long, value_enum)]
    kind: ScanKind,
    /// Quantum StateSpec template (semiclassical); its h is replaced by each grid point.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    testfn: PathBuf,
    /// Renormalized condensate density (condensate and thermodynamic scans).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value = "0.0125:0.1:4:log")]
    h_grid: String,
    /// Comma-separated box half-sides.
    #[arg(long = "L-grid", default_value = "5,10,20,40")]
    l_grid: String,
    #[command(flatten)]
    #[serde(flatten)]
    out: TableOut,
}

#[derive(Args, Debug, Serialize)]
struct SampleGibbsArgs {
    /// JSON array of positive mode eigenvalues.
    #[arg(long)]
    modes: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ModeCoefficients JSON {"alpha": [...], "mu": [...]}: estimate theta(f) instead of dumping samples.
    #[arg(long)]
    f: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    out: TableOut,
}

#[derive(Args, Debug, Serialize)]
struct BerezinArgs {
    #[arg(long, default_value_t = 1)]
    l: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mu: Vec<f64>,
    #[arg(long)]
    h: f64,
    /// Phase-space centre (q1,..,p1,..) of the left coherent state; vacuum by default.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    phi: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    psi: Vec<f64>,
    #[arg(long, default_value_t = 80)]
    nodes: usize,
}

#[derive(Args, Debug, Serialize)]
struct CriticalArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 3)]
    nu: usize,
}

#[derive(Args, Debug, Serialize)]
struct TraceArgs {
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 3)]
    nu: usize,
    #[arg(long = "L", default_value_t = 1.0)]
    half_side: f64,
    #[arg(long, default_value_t = 60)]
    cutoff: u32,
}

#[derive(Args, Debug, Serialize)]
struct WitnessArgs {
    /// Label JSON; default the unit vector of C^1.
    #[arg(long)]
    f: Option<PathBuf>,
    #[arg(long = "N", default_value_t = 50)]
    n_max: usize,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[command(flatten)]
    #[serde(flatten)]
    out: TableOut,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A test function, or box-mode coefficients when the object has a "modes" key.
fn read_excitation(path: &Path) -> CliResult<Excitation> {
    let v: Value = read_json(path)?;
    let parsed = if v.get("modes").is_some() {
        serde_json::from_value::<ModeVector>(v).map(Excitation::from)
    } else {
        serde_json::from_value::<TestFunction>(v).map(Excitation::from)
    };
    parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_state(path: &Path) -> CliResult<StateSpec> {
    let spec: StateSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

fn parse_h_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Input(format!("h grid must be a:b:steps[:log|lin], got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    let log = match parts.get(3) {
        None | Some(&"lin") => false,
        Some(&"log") => true,
        Some(_) => return Err(bad()),
    };
    if steps < 2 || a.is_nan() || b.is_nan() || a <= 0.0 || b <= a {
        return Err(bad());
    }
    Ok((0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            if log {
                (a.ln() + t * (b.ln() - a.ln())).exp()
            } else {
                a + t * (b - a)
            }
        })
        .collect())
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| CliError::Input(format!("not a number list: {s:?}"))))
        .collect()
}

/// Header line, then the table to `out` or stdout.
fn emit_csv(out: &TableOut, columns: &str, rows: impl IntoIterator<Item = String>) -> CliResult<()> {
    let mut text = String::new();
    writeln!(text, "{SCHEMA}").unwrap();
    writeln!(text, "{columns}").unwrap();
    for r in rows {
        writeln!(text, "{r}").unwrap();
    }
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(v: Value) {
    println!("{v}");
}

fn check_tail(bound: f64, tol: f64) -> CliResult<()> {
    if bound > tol {
        return Err(weyl_kms::Error::TailToleranceExceeded { bound, tol }.into());
    }
    Ok(())
}

fn cpair(c: Complex64) -> Value {
    json!([c.re, c.im])
}

fn run(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::ComputeState(a) => {
            let spec = read_state(&a.spec)?;
            let f = read_excitation(&a.testfn)?;
            let ev = states::weyl_expectation(&spec, &f)?;
            check_tail(ev.tail_bound, a.tail_tol)?;
            emit_json(json!({"value": ev.value.re, "tail_bound": ev.tail_bound}));
        }
        Command::SolveMu(a) => {
            let b = BoxSpectrum::new(a.half_side, a.nu, a.cutoff)?;
            let mu = equilibrium::solve_mu_quantum(a.rho, &b, a.beta, a.h)?;
            let d = states::box_density(&b, a.beta * a.h, mu, 1e-12)?;
            emit_json(json!({"mu": mu, "density": d.value, "tail_bound": d.tail_bound}));
        }
        Command::CheckSdq(a) => {
            let f: Label = read_json(&a.f)?;
            let g: Label = read_json(&a.g)?;
            let element = match &a.element {
                Some(p) => read_json::<WeylElement>(p)?,
                None => WeylElement::generator(0.0, f.clone(), Complex64::new(1.0, 0.0))
                    .add(&WeylElement::generator(0.0, g.clone(), Complex64::new(1.0, 0.0)))?,
            };
            let rows = quantize::sdq_scan(&f, &g, &element, &parse_h_grid(&a.h_grid)?)?;
            emit_csv(
                &a.out,
                "h,dirac_residual,vonneumann_residual,rieffel_lower,rieffel_upper",
                rows.iter().map(|r| {
                    format!("{:e},{:e},{:e},{:e},{:e}", r.h, r.dirac_residual, r.vonneumann_residual, r.rieffel_lower, r.rieffel_upper)
                }),
            )?;
        }
        Command::CheckKms(a) => {
            let spec = read_state(&a.spec)?;
            let (f, g) = (read_excitation(&a.f)?, read_excitation(&a.g)?);
            let mode = match a.mode {
                KmsModeArg::Analytic => KmsMode::Analytic,
                KmsModeArg::Fd => KmsMode::FiniteDifference { dt: a.dt },
            };
            let residual = equilibrium::kms_residual(&spec, WeakDerivationSpec::for_state(&spec), &f, &g, mode)?;
            emit_json(json!({"residual": residual}));
        }
        Command::LimitScan(a) => match a.kind {
            ScanKind::Thermodynamic => {
                let f: TestFunction = read_json(&a.testfn)?;
                f.validate()?;
                let alpha = a.alpha.ok_or_else(|| CliError::Input("thermodynamic scan needs --alpha".into()))?;
                let rows = equilibrium::thermodynamic_scan(alpha, a.beta, &f, &parse_list(&a.l_grid)?)?;
                emit_csv(
                    &a.out,
                    "L,mu,cutoff,value,target,error,tail_bound",
                    rows.iter().map(|r| {
                        format!("{},{:e},{},{:e},{:e},{:e},{:e}", r.half_side, r.mu, r.cutoff, r.value, r.target, r.error, r.tail_bound)
                    }),
                )?;
            }
            ScanKind::Semiclassical => {
                let path = a.spec.as_ref().ok_or_else(|| CliError::Input("semiclassical scan needs --spec".into()))?;
                let template: StateSpec = read_json(path)?;
                let f = read_excitation(&a.testfn)?;
                let rows = semiclassical(&template, a.alpha, &f, &parse_h_grid(&a.h_grid)?)?;
                emit_csv(
                    &a.out,
                    "h,quantum,classical,error",
                    rows.iter().map(|r| format!("{:e},{:e},{:e},{:e}", r.h, r.quantum, r.classical, r.error)),
                )?;
            }
        },
        Command::SampleGibbs(a) => {
            let spec = GaussianMeasureSpec::new(read_json(&a.modes)?, a.beta)?;
            let samples = gibbsmc::sample(&spec, a.count, a.seed)?;
            match &a.f {
                Some(p) => {
                    let f: ModeCoefficients = read_json(p)?;
                    let est = gibbsmc::characteristic_mc(&spec, &f, &samples)?;
                    let closed = spec.characteristic(&f)?;
                    emit_json(json!({"estimate": cpair(est.estimate), "stderr": est.stderr, "closed_form": closed}));
                }
                None => {
                    let columns: Vec<String> = (1..=spec.modes()).flat_map(|k| [format!("q{k}"), format!("p{k}")]).collect();
                    emit_csv(
                        &a.out,
                        &columns.join(","),
                        samples.iter_rows().map(|r| r.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")),
                    )?;
                }
            }
        }
        Command::BerezinVerify(a) => {
            let point = |v: &[f64]| -> CliResult<CoherentState> {
                match v.len() {
                    0 => Ok(CoherentState::vacuum(a.l, a.h)),
                    n if n == 2 * a.l => Ok(CoherentState::new(v[..a.l].to_vec(), v[a.l..].to_vec(), a.h)?),
                    n => Err(CliError::Input(format!("phase-space point needs {} coordinates, got {n}", 2 * a.l))),
                }
            };
            let fill = |v: &[f64]| if v.is_empty() { vec![0.0; a.l] } else { v.to_vec() };
            let grid = PhaseSpaceGrid { nodes: a.nodes, ..PhaseSpaceGrid::default() };
            let c = berezin::verify(&fill(&a.lambda), &fill(&a.mu), &point(&a.phi)?, &point(&a.psi)?, grid)?;
            emit_json(json!({"quad": cpair(c.quad), "closed_form": cpair(c.closed_form), "rel_err": c.rel_err}));
        }
        Command::CriticalDensity(a) => {
            emit_json(json!({"rho_c": states::critical_density(a.beta, a.h, a.nu)?}));
        }
        Command::TraceCheck(a) => {
            let b = BoxSpectrum::new(a.half_side, a.nu, a.cutoff)?;
            let t = spectrum::trace_h_power(a.s, &b)?;
            let d = spectrum::trace_h_power(a.s, &b.with_cutoff(2 * a.cutoff))?;
            emit_json(json!({
                "partial": t.partial,
                "doubled_partial": d.partial,
                "relative_change": (d.partial - t.partial).abs() / t.partial,
                "converges": t.converged,
                "tail_bound": t.tail_bound,
            }));
        }
        Command::Witness(a) => {
            let f = match &a.f {
                Some(p) => read_json(p)?,
                None => Label::from_reals(&[1.0]),
            };
            let w = quantize::nonsurjectivity_witness(&f, a.n_max, a.h)?;
            emit_csv(
                &a.out,
                "k,target_partial_l2,preimage_partial_l2",
                w.target_partial_l2
                    .iter()
                    .zip(&w.preimage_partial_l2)
                    .enumerate()
                    .map(|(k, (t, p))| format!("{},{t:e},{p:e}", k + 1)),
            )?;
        }
    }
    Ok(())
}

/// Quantum family from a template spec, compared with its classical limit.
fn semiclassical(template: &StateSpec, alpha: Option<f64>, f: &Excitation, h_grid: &[f64]) -> CliResult<Vec<equilibrium::SemiclassicalRow>> {
    let (nu, beta, mu) = (template.nu, template.beta, template.mu);
    let rows = match template.kind {
        StateKind::QuantumBoxGibbs => {
            let b = template.box_spectrum()?;
            let target = StateSpec::classical_box(b, beta, mu)?;
            equilibrium::semiclassical_scan(|h| StateSpec::quantum_box(b, beta, h, mu), &target, f, h_grid)?
        }
        StateKind::QuantumInfVol => {
            let target = StateSpec::classical_inf_vol(nu, beta, mu)?;
            equilibrium::semiclassical_scan(|h| StateSpec::quantum_inf_vol(nu, beta, h, mu), &target, f, h_grid)?
        }
        StateKind::QuantumCondensate => {
            let alpha = alpha.ok_or_else(|| CliError::Input("condensate scan needs --alpha".into()))?;
            let target = StateSpec::classical_condensate(nu, beta, alpha)?;
            equilibrium::semiclassical_scan(equilibrium::condensate_family(nu, beta, alpha), &target, f, h_grid)?
        }
        k => return Err(CliError::Input(format!("semiclassical scan needs a quantum template, got {k:?}"))),
    };
    Ok(rows)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let header = serde_json::to_string(&cli.command).expect("arguments serialize");
    println!("{header}");
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
