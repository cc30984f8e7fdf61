//! `ftq`: command-line front-end for the future-tube toolkit. Subcommands
//! integrate the built-in Hamiltonian systems, run the identity verification
//! suites, and evaluate phase-space measurements. All randomness flows from
//! one 64-bit seed (flag `--seed` or env `FTQ_SEED`) through named
//! substreams, so outputs are byte-identical across runs.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid arguments,
//! 3 runtime/integration failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ftq::dynamics::{
    charged_helix_closed_form, conserved_quantities, integrate_cotangent,
    oscillator_initial_data, two_body_oscillator_closed_form, CotangentPoint, HamiltonianSpec,
    IntegratorConfig, Trajectory,
};
use ftq::localization::{reports_to_csv, scan_bound};
use ftq::mc::McConfig;
use ftq::minkowski::{FutureTubePoint, RealFourVector};
use ftq::states::{
    decohere_unrecorded, post_measurement_point, post_measurement_state, povm_probability,
    DensityState, Region,
};
use ftq::verify::{run_suite, IdentityReport, VerifyConfig};
use ftq::Error;

#[derive(Parser)]
#[command(
    name = "ftq",
    version,
    about = "Numerical toolkit for quantum theory on the future tube"
)]
struct Cli {
    /// Planck constant ħ.
    #[arg(long, global = true, default_value_t = 1.0)]
    hbar: f64,
    /// Master seed for all Monte-Carlo substreams.
    #[arg(long, global = true, env = "FTQ_SEED", default_value_t = 42)]
    seed: u64,
    /// Monte-Carlo sample budget; accepts scientific notation (1e6).
    #[arg(long, global = true, default_value = "1000000", value_parser = parse_samples)]
    samples: u64,
    /// Scale factor applied to every identity tolerance in `verify`.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol: f64,
    /// Output path; subcommands derive auxiliary file names from it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format for tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum System {
    /// Geodesic motion, H = √(p·p).
    Free,
    /// Uniform magnetic field in the symmetric gauge, H = √(π·π).
    Charged,
    /// Harmonic pair, H = √(X·X + Y·Y − 2k u).
    Twobody,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a built-in system and export the trajectory with a
    /// conservation report.
    Dynamics {
        #[arg(long, value_enum)]
        system: System,
        /// Particle mass (free and charged systems).
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Proper-time span; defaults to one period where one exists.
        #[arg(long = "s-max")]
        s_max: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Spring constant (two-body system).
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        m1: f64,
        #[arg(long, default_value_t = 1.0)]
        m2: f64,
        /// Magnetic field strength (charged system).
        #[arg(long = "B", default_value_t = 1.0)]
        b: f64,
        /// Charge (charged system).
        #[arg(long, default_value_t = 1.0)]
        q: f64,
    },
    /// Run identity verification suites and report pass/fail per identity.
    Verify {
        /// Suite name, `completeness`, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Evaluate a phase-space measurement: POVM probability and
    /// post-measurement state.
    Measure {
        /// Density-state JSON file.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Region JSON file (union of boxes).
        #[arg(long)]
        region: Option<PathBuf>,
        /// Smear over all of phase space (unrecorded outcome).
        #[arg(long)]
        unrecorded: bool,
        /// Point-outcome collapse: JSON file with one tube point.
        #[arg(long)]
        point: Option<PathBuf>,
        /// Number of foci in the sampled post-measurement mixture.
        #[arg(long, default_value_t = 256)]
        foci: usize,
    },
}

fn parse_samples(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let f: f64 = s.parse().map_err(|_| format!("invalid sample count '{s}'"))?;
    if f.is_finite() && f >= 1.0 && f <= 1e15 {
        Ok(f as u64)
    } else {
        Err(format!("sample count out of range: '{s}'"))
    }
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn write_or_print(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => {
            print!("{content}");
            if !content.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Dynamics { .. } => cmd_dynamics(&cli),
        Cmd::Verify { .. } => cmd_verify(&cli),
        Cmd::Measure { .. } => cmd_measure(&cli),
    }
}

// ---------------------------------------------------------------------------
// dynamics
// ---------------------------------------------------------------------------

struct DynOutcome {
    traj: Trajectory,
    spec: HamiltonianSpec,
    omega: Option<f64>,
    closed_form_dev: f64,
}

fn run_dynamics(cli: &Cli) -> Result<DynOutcome, Error> {
    let Cmd::Dynamics {
        system,
        m,
        s_max,
        steps,
        k,
        m1,
        m2,
        b,
        q,
    } = &cli.cmd
    else {
        unreachable!()
    };
    match system {
        System::Free => {
            let init = CotangentPoint {
                x: RealFourVector::zero(),
                p: RealFourVector::new(*m, 0.0, 0.0, 0.0),
            };
            let span = s_max.unwrap_or(10.0);
            let traj = integrate_cotangent(
                &HamiltonianSpec::FreeParticle,
                &[init],
                &IntegratorConfig::rk4(*steps, span),
            )?;
            let mut dev: f64 = 0.0;
            for (i, st) in traj.states.iter().enumerate() {
                let c = st.single().expect("single");
                let s = traj.s[i];
                for a in 0..4 {
                    let exact = init.x.0[a] + init.p.0[a] / m * s;
                    dev = dev.max((c.x.0[a] - exact).abs());
                }
            }
            Ok(DynOutcome {
                traj,
                spec: HamiltonianSpec::FreeParticle,
                omega: None,
                closed_form_dev: dev,
            })
        }
        System::Charged => {
            let v = 0.5 * m;
            let pi0 = RealFourVector::new((m * m + v * v).sqrt(), v, 0.0, 0.0);
            let x0 = RealFourVector::zero();
            let init = CotangentPoint { x: x0, p: pi0 };
            let h = pi0.norm_sqr().sqrt();
            let span = s_max.unwrap_or(2.0 * std::f64::consts::PI * h / (q * b));
            let spec = HamiltonianSpec::charged_uniform_b(*q, *b);
            let traj = integrate_cotangent(&spec, &[init], &IntegratorConfig::rk4(*steps, span))?;
            let mut dev: f64 = 0.0;
            for (i, st) in traj.states.iter().enumerate() {
                let c = st.single().expect("single");
                let (xe, pe) = charged_helix_closed_form(&x0, &pi0, *q, *b, traj.s[i]);
                for a in 0..4 {
                    dev = dev.max((c.x.0[a] - xe.0[a]).abs());
                    dev = dev.max((c.p.0[a] - pe.0[a]).abs());
                }
            }
            Ok(DynOutcome {
                traj,
                spec,
                omega: Some(q * b / h),
                closed_form_dev: dev,
            })
        }
        System::Twobody => {
            let alpha = RealFourVector::new(0.0, 0.5, 0.0, 0.0);
            let beta = RealFourVector::new(0.0, 0.0, 0.3, 0.0);
            let (c1, c2) = oscillator_initial_data(&alpha, &beta, *k, *m1, *m2);
            let omega = (k / (m1 * m1 + m2 * m2)).sqrt();
            let span = s_max.unwrap_or(2.0 * std::f64::consts::PI / omega);
            let spec = HamiltonianSpec::two_body_oscillator(*k);
            let traj = integrate_cotangent(&spec, &[c1, c2], &IntegratorConfig::rk4(*steps, span))?;
            let mut dev: f64 = 0.0;
            for (i, st) in traj.states.iter().enumerate() {
                let (a, bst) = st.pair().expect("pair");
                let xi = ftq::dynamics::internal_coordinate(&a.x, &bst.x, &a.p, &bst.p)?;
                let exact = two_body_oscillator_closed_form(&alpha, &beta, *k, *m1, *m2, traj.s[i]);
                for c in 0..4 {
                    dev = dev.max((xi.0[c] - exact.0[c]).abs());
                }
            }
            Ok(DynOutcome {
                traj,
                spec,
                omega: Some(omega),
                closed_form_dev: dev,
            })
        }
    }
}

fn cmd_dynamics(cli: &Cli) -> ExitCode {
    let outcome = match run_dynamics(cli) {
        Ok(o) => o,
        Err(Error::InvalidArgument(m)) => return fail(2, &m),
        Err(e) => return fail(3, &e.to_string()),
    };
    let report = match conserved_quantities(&outcome.traj, &outcome.spec) {
        Ok(r) => r,
        Err(e) => return fail(3, &e.to_string()),
    };
    let report_json = serde_json::json!({
        "samples": outcome.traj.len(),
        "h_initial": outcome.traj.h.first(),
        "h_drift": report.h_drift,
        "p_dot_q_drift": report.extra_drift,
        "omega": outcome.omega,
        "closed_form_max_deviation": outcome.closed_form_dev,
    });
    let body = match cli.format {
        Format::Csv => outcome.traj.to_csv(),
        Format::Json => {
            serde_json::to_string_pretty(&outcome.traj).expect("trajectory serializes")
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &body) {
                return fail(3, &e.to_string());
            }
            let mut rp = path.as_os_str().to_owned();
            rp.push(".report.json");
            let pretty = serde_json::to_string_pretty(&report_json).expect("report serializes");
            if let Err(e) = std::fs::write(PathBuf::from(rp), &pretty) {
                return fail(3, &e.to_string());
            }
            println!("{pretty}");
        }
        None => {
            print!("{body}");
            if !body.ends_with('\n') {
                println!();
            }
            eprintln!(
                "{}",
                serde_json::to_string(&report_json).expect("report serializes")
            );
        }
    }
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn reports_csv(reports: &[IdentityReport]) -> String {
    let mut s = String::from("suite,identity,observed,tolerance,std_err,samples,pass\n");
    for r in reports {
        s.push_str(&format!(
            "{},\"{}\",{:.17e},{:.17e},{},{},{}\n",
            r.suite,
            r.identity.replace('"', "\"\""),
            r.observed,
            r.tolerance,
            r.std_err.map_or(String::new(), |v| format!("{v:.17e}")),
            r.samples.map_or(String::new(), |v| v.to_string()),
            r.pass
        ));
    }
    s
}

fn cmd_verify(cli: &Cli) -> ExitCode {
    let Cmd::Verify { suite } = &cli.cmd else {
        unreachable!()
    };
    let cfg = VerifyConfig {
        hbar: cli.hbar,
        seed: cli.seed,
        samples: cli.samples,
    };
    let mut reports = match run_suite(suite, &cfg) {
        Ok(r) => r,
        Err(Error::InvalidArgument(m)) => return fail(2, &m),
        Err(e) => return fail(3, &e.to_string()),
    };
    if cli.tol != 1.0 {
        for r in &mut reports {
            r.tolerance *= cli.tol;
            r.pass = r.observed.is_finite() && r.observed <= r.tolerance;
        }
    }
    let body = match cli.format {
        Format::Csv => reports_csv(&reports),
        Format::Json => {
            serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n"
        }
    };
    if let Err(e) = write_or_print(cli.out.as_deref(), &body) {
        return fail(3, &e.to_string());
    }
    let failed: Vec<&IdentityReport> = reports.iter().filter(|r| !r.pass).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for r in failed {
            eprintln!(
                "FAIL [{}] {}: observed {:.3e} > tolerance {:.3e}",
                r.suite, r.identity, r.observed, r.tolerance
            );
        }
        ExitCode::from(1)
    }
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {what} {path:?}: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("parsing {what} {path:?}: {e}"))
}

fn cmd_measure(cli: &Cli) -> ExitCode {
    let Cmd::Measure {
        state,
        region,
        unrecorded,
        point,
        foci,
    } = &cli.cmd
    else {
        unreachable!()
    };

    // Point-outcome collapse needs no input state: the outgoing state is the
    // coherent state at the detected point.
    if let Some(point_path) = point {
        let z: FutureTubePoint = match read_json(point_path, "point") {
            Ok(z) => z,
            Err(m) => return fail(2, &m),
        };
        let post = post_measurement_point(&z);
        let scan = match scan_bound(&post, &[z], cli.hbar) {
            Ok(s) => s,
            Err(e) => return fail(3, &e.to_string()),
        };
        return emit_measurement(cli, None, &post, &scan);
    }

    let Some(state_path) = state else {
        return fail(2, "measure needs --state (or --point)");
    };
    let input: DensityState = match read_json::<DensityState>(state_path, "state") {
        Ok(s) => s,
        Err(m) => return fail(2, &m),
    };
    if let Err(e) = input.validate() {
        return fail(2, &format!("invalid state: {e}"));
    }

    let region = if *unrecorded {
        Region::all()
    } else {
        let Some(region_path) = region else {
            return fail(2, "measure needs --region (or --unrecorded / --point)");
        };
        match read_json(region_path, "region") {
            Ok(r) => r,
            Err(m) => return fail(2, &m),
        }
    };

    let mc = McConfig::new(cli.seed, cli.samples);
    let prob = match povm_probability(&input, &region, &mc) {
        Ok(p) => p,
        Err(e) => return fail(3, &e.to_string()),
    };
    let post = if *unrecorded {
        decohere_unrecorded(&input, *foci, &mc)
    } else {
        post_measurement_state(&input, &region, *foci, &mc)
    };
    let post = match post {
        Ok(p) => p,
        Err(e) => return fail(3, &e.to_string()),
    };
    let scan_points = post.all_foci();
    let scan = match scan_bound(&post, &scan_points, cli.hbar) {
        Ok(s) => s,
        Err(e) => return fail(3, &e.to_string()),
    };
    emit_measurement(cli, Some(&prob), &post, &scan)
}

fn emit_measurement(
    cli: &Cli,
    prob: Option<&ftq::mc::McEstimate>,
    post: &DensityState,
    scan: &[ftq::localization::LocalizationReport],
) -> ExitCode {
    let max_ratio = scan.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    let mut summary = serde_json::json!({
        "n_branches": post.branches.len(),
        "scan_max_ratio": max_ratio,
    });
    if let Some(p) = prob {
        summary["probability"] = serde_json::json!(p.estimate.re);
        summary["std_err"] = serde_json::json!(p.std_err);
        summary["samples"] = serde_json::json!(p.samples);
    }
    match &cli.out {
        Some(base) => {
            let mut state_path = base.as_os_str().to_owned();
            state_path.push(".state.json");
            let mut scan_path = base.as_os_str().to_owned();
            scan_path.push(".scan.csv");
            if let Err(e) = std::fs::write(PathBuf::from(&state_path), post.to_json()) {
                return fail(3, &e.to_string());
            }
            if let Err(e) = std::fs::write(PathBuf::from(&scan_path), reports_to_csv(scan)) {
                return fail(3, &e.to_string());
            }
            summary["state_file"] = serde_json::json!(state_path.to_string_lossy());
            summary["scan_file"] = serde_json::json!(scan_path.to_string_lossy());
        }
        None => {
            summary["state"] =
                serde_json::to_value(post).expect("state serializes");
        }
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    ExitCode::SUCCESS
}
