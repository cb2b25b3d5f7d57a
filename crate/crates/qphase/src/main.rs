//! `qphase`: generate states, simulate and fit tomography, emit Wigner
//! slices/volumes, and print quantifier fingerprints as deterministic
//! CSV/JSON artifacts. Exit codes: 0 on success, 2 on usage or validation
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qphase::io::{self, format_float};
use qphase::quantifiers::{self, FingerprintConfig};
use qphase::states::{
    apply_noise, make_bell, make_ghz, make_w, maximally_mixed, projector, DensityOperator,
    NoiseKind, NoiseSpec, PureState,
};
use qphase::tomography::{mle_reconstruct, simulate_counts, MleConfig};
use qphase::wigner::{equal_angle_slice, integrated_ea_slice, negative_volume};
use qphase::wigner::{Axis, QuadratureGrid, SliceSpec, VolumeMethod};
use qphase::{Error, Result};

#[derive(Parser)]
#[command(name = "qphase", version, about = "Qubit Wigner-function toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a named state, optionally with noise, and write it as JSON.
    GenState(GenStateArgs),
    /// Simulate or fit Pauli-basis tomography data.
    Tomo {
        #[command(subcommand)]
        command: TomoCommand,
    },
    /// Wigner-function artifacts: slices, negative volume, EA integral.
    Wigner {
        #[command(subcommand)]
        command: WignerCommand,
    },
    /// Write the full quantifier fingerprint of a state as JSON.
    Quantify(QuantifyArgs),
}

#[derive(Args)]
struct GenStateArgs {
    /// One of: ghz, w, bell, mixed.
    name: String,
    /// Noise channel spec kind:strength[:qubit]; repeatable, applied in order.
    /// Kinds: global-depolarizing, per-qubit-dephasing, population-imbalance.
    #[arg(long = "noise")]
    noise: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TomoCommand {
    /// Simulate multinomial counts for all 3^n Pauli settings.
    Sim {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-likelihood reconstruction from a counts file.
    Fit {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "max-iter", default_value_t = 5000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum WignerCommand {
    /// Equal-angle slice over a theta x phi grid, written as CSV.
    Slice {
        #[arg(long)]
        state: PathBuf,
        /// Grid as T,P (theta points, phi points).
        #[arg(long)]
        grid: String,
        /// Pre-rotate one qubit by pi/2 about an axis, as qubit:axis.
        #[arg(long)]
        rotate: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Negative volume, printed as JSON on stdout.
    Volume {
        #[arg(long)]
        state: PathBuf,
        /// grid:N (N points per dimension) or mc:M (M samples).
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integrated equal-angle slice, printed as JSON on stdout.
    EaIntegral {
        #[arg(long)]
        state: PathBuf,
    },
}

#[derive(Args)]
struct QuantifyArgs {
    #[arg(long)]
    state: PathBuf,
    /// Ideal target for the fidelity entry: ghz or w.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Honors QPHASE_THREADS (positive integer) as a cap on the worker count.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("QPHASE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "QPHASE_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenState(args) => cmd_gen_state(args),
        Command::Tomo { command } => match command {
            TomoCommand::Sim {
                state,
                shots,
                seed,
                out,
            } => {
                let rho = io::read_state(&state)?;
                let data = simulate_counts(&rho, shots, seed)?;
                io::write_counts(&out, &data)
            }
            TomoCommand::Fit {
                counts,
                out,
                max_iter,
                tol,
            } => cmd_tomo_fit(counts, out, max_iter, tol),
        },
        Command::Wigner { command } => match command {
            WignerCommand::Slice {
                state,
                grid,
                rotate,
                out,
            } => cmd_wigner_slice(state, grid, rotate, out),
            WignerCommand::Volume {
                state,
                method,
                seed,
            } => cmd_wigner_volume(state, method, seed),
            WignerCommand::EaIntegral { state } => {
                let rho = io::read_state(&state)?;
                let value = integrated_ea_slice(&rho, &QuadratureGrid::default_grid())?;
                println!("{}", value_json(value, None));
                Ok(())
            }
        },
        Command::Quantify(args) => cmd_quantify(args),
    }
}

fn parse_noise(raw: &str) -> Result<NoiseSpec> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(Error::InvalidArgument(format!(
            "noise spec must be kind:strength[:qubit], got {raw:?}"
        )));
    }
    let kind = match parts[0] {
        "global-depolarizing" => NoiseKind::GlobalDepolarizing,
        "per-qubit-dephasing" => NoiseKind::PerQubitDephasing,
        "population-imbalance" => NoiseKind::PopulationImbalance,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown noise kind {other:?}"
            )));
        }
    };
    let strength: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad noise strength {:?}", parts[1])))?;
    let qubit = match parts.get(2) {
        Some(q) => Some(
            q.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad noise qubit {q:?}")))?,
        ),
        None => None,
    };
    NoiseSpec::new(kind, strength, qubit)
}

fn cmd_gen_state(args: GenStateArgs) -> Result<()> {
    let rho = match args.name.as_str() {
        "ghz" => projector(&make_ghz())?,
        "w" => projector(&make_w())?,
        "bell" => projector(&make_bell())?,
        "mixed" => maximally_mixed(3),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown state name {other:?} (expected ghz, w, bell, mixed)"
            )));
        }
    };
    let mut rho: DensityOperator = rho;
    for raw in &args.noise {
        let spec = parse_noise(raw)?;
        rho = apply_noise(&rho, &spec)?;
    }
    io::write_state(&args.out, &rho)
}

#[derive(Serialize)]
struct FitSidecar {
    iterations: usize,
    final_loglik: f64,
    converged: bool,
}

fn cmd_tomo_fit(counts: PathBuf, out: PathBuf, max_iter: usize, tol: f64) -> Result<()> {
    let data = io::read_counts(&counts)?;
    let config = MleConfig {
        max_iterations: max_iter,
        convergence_tol: tol,
        ..MleConfig::default()
    };
    let fit = mle_reconstruct(&data, &config)?;
    if !fit.converged {
        eprintln!(
            "warning: MLE did not converge within {max_iter} iterations (relative tolerance {tol:e})"
        );
    }
    io::write_state(&out, &fit.rho_hat)?;
    let sidecar = FitSidecar {
        iterations: fit.iterations,
        final_loglik: fit.final_loglik,
        converged: fit.converged,
    };
    let meta_path = out.with_extension("meta.json");
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    std::fs::write(meta_path, text)?;
    Ok(())
}

fn parse_grid(raw: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = raw.split(',').collect();
    let parse = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::InvalidArgument(format!("bad grid size {s:?}")))
    };
    match parts.as_slice() {
        [t, p] => Ok((parse(t)?, parse(p)?)),
        _ => Err(Error::InvalidArgument(format!(
            "grid must be T,P, got {raw:?}"
        ))),
    }
}

fn parse_rotation(raw: &str) -> Result<(usize, Axis)> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [qubit, axis] = parts.as_slice() else {
        return Err(Error::InvalidArgument(format!(
            "rotate must be qubit:axis, got {raw:?}"
        )));
    };
    let qubit: usize = qubit
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad rotation qubit {qubit:?}")))?;
    let axis = match *axis {
        "x" | "X" => Axis::X,
        "y" | "Y" => Axis::Y,
        "z" | "Z" => Axis::Z,
        other => return Err(Error::InvalidArgument(format!("unknown axis {other:?}"))),
    };
    Ok((qubit, axis))
}

fn cmd_wigner_slice(
    state: PathBuf,
    grid: String,
    rotate: Option<String>,
    out: PathBuf,
) -> Result<()> {
    let rho = io::read_state(&state)?;
    let (t, p) = parse_grid(&grid)?;
    let mut spec = SliceSpec::new(t, p)?;
    if let Some(raw) = rotate {
        let (qubit, axis) = parse_rotation(&raw)?;
        // The rotation angle is fixed at pi/2.
        spec = spec.with_rotation(qubit, axis, std::f64::consts::FRAC_PI_2);
    }
    let slice = equal_angle_slice(&rho, &spec)?;
    io::write_slice(&out, &slice)
}

fn parse_method(raw: &str, seed: u64) -> Result<VolumeMethod> {
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.as_slice() {
        ["grid", n] => {
            let n: usize = n
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad grid size {n:?}")))?;
            Ok(VolumeMethod::Grid { points_per_dim: n })
        }
        ["mc", m] => {
            let samples: usize = m
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad sample count {m:?}")))?;
            Ok(VolumeMethod::MonteCarlo { samples, seed })
        }
        _ => Err(Error::InvalidArgument(format!(
            "method must be grid:N or mc:M, got {raw:?}"
        ))),
    }
}

fn value_json(value: f64, std_error: Option<f64>) -> String {
    match std_error {
        Some(se) => format!(
            "{{\"value\": {}, \"std_error\": {}}}",
            format_float(value),
            format_float(se)
        ),
        None => format!("{{\"value\": {}}}", format_float(value)),
    }
}

fn cmd_wigner_volume(state: PathBuf, method: String, seed: u64) -> Result<()> {
    let rho = io::read_state(&state)?;
    let method = parse_method(&method, seed)?;
    let estimate = negative_volume(&rho, method)?;
    println!("{}", value_json(estimate.value, estimate.std_error));
    Ok(())
}

fn parse_target(raw: &str) -> Result<PureState> {
    match raw {
        "ghz" => Ok(make_ghz()),
        "w" => Ok(make_w()),
        other => Err(Error::InvalidArgument(format!(
            "unknown target {other:?} (expected ghz or w)"
        ))),
    }
}

fn cmd_quantify(args: QuantifyArgs) -> Result<()> {
    let rho = io::read_state(&args.state)?;
    let target = args.target.as_deref().map(parse_target).transpose()?;
    if let Some(t) = &target {
        if t.n_qubits() != rho.n_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "target has {} qubits, state has {}",
                t.n_qubits(),
                rho.n_qubits()
            )));
        }
    }
    if rho.n_qubits() != 3 {
        eprintln!(
            "warning: tangle and negativity entries are only defined for 3 qubits; reporting null"
        );
    }
    let report = quantifiers::fingerprint(&rho, target.as_ref(), &FingerprintConfig::default())?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&args.out, text)?;
    Ok(())
}
