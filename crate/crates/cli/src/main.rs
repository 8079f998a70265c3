use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use locc3::campaign::{run_campaign, Campaign, RunConfig};
use locc3::gate::{find_gate_unitary, find_gate_unitary_complex_with, find_gate_unitary_real, LambdaChoice, DEFAULT_GRID};
use locc3::povm::{apply_deterministic_povm, chain_deterministic, orbit_curve, DeterministicPovm};
use locc3::protocols::{run_protocol, ProtocolTarget, Roles, TargetComplexSpec, TargetRealSpec};
use locc3::random::{random_state, Ensemble};
use locc3::invariants::compute_invariants_with;
use locc3::{classify, decompose_ghz, InvariantVector, json as fulljson, omega, Party, PureState3Q, StateClass, Tolerances};

#[derive(Parser)]
#[command(name = "locc3", version, about = "Three-qubit invariants, deterministic POVMs and GHZ protocols")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true)]
    tol_norm: Option<f64>,
    #[arg(long, global = true)]
    tol_unit: Option<f64>,
    #[arg(long, global = true)]
    tol_prob: Option<f64>,
    #[arg(long, global = true)]
    tol_tangle: Option<f64>,
    #[arg(long, global = true)]
    tol_i6: Option<f64>,
    #[arg(long, global = true)]
    tol_degenerate: Option<f64>,
    #[arg(long, global = true)]
    tol_gate: Option<f64>,
    #[arg(long, global = true)]
    tol_res: Option<f64>,
    #[arg(long, global = true)]
    tol_orbit: Option<f64>,
    #[arg(long, global = true)]
    tol_proto: Option<f64>,
    /// Seed for random-state and verify.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// I1..I6 of a state file.
    Invariants { file: PathBuf },
    /// Entanglement class, with the Re Ω subclass for GHZ-class states.
    Classify { file: PathBuf },
    /// Two-product-term canonical form of a GHZ-class state.
    Canon { file: PathBuf },
    /// Local unitary turning the state into a gate state for one party.
    GateFind {
        file: PathBuf,
        #[arg(long)]
        party: Party,
        /// ζ grid size for the complex search.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Build and apply the deterministic POVM with parameter λ.
    ApplyPovm {
        file: PathBuf,
        #[arg(long)]
        party: Party,
        #[arg(long)]
        lambda: f64,
    },
    /// Invariants of the outcome along the POVM family, λ ∈ [1, λmax].
    Curve {
        file: PathBuf,
        #[arg(long)]
        party: Party,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Run one of the GHZ protocols with every branch simulated.
    #[command(subcommand)]
    Protocol(ProtocolCommand),
    /// Apply deterministic POVMs in sequence, e.g. `--step A:2 --step B:1.5`.
    Chain {
        file: PathBuf,
        #[arg(long = "step", required = true, value_parser = parse_step)]
        steps: Vec<(Party, f64)>,
    },
    /// Draw a state from a seeded ensemble.
    RandomState {
        #[arg(long, default_value = "complex_haar")]
        ensemble: Ensemble,
    },
    /// Run a seeded verification campaign and print its report.
    Verify {
        campaign: Campaign,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
}

#[derive(Subcommand)]
enum ProtocolCommand {
    Ghz2real {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        delta_prime: f64,
        /// Party playing the first role.
        #[arg(long, default_value = "A")]
        first: Party,
    },
    Ghz2complex {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        delta_prime: f64,
        #[arg(long)]
        delta_double_prime: f64,
        #[arg(long, default_value = "A")]
        first: Party,
    },
}

fn parse_step(s: &str) -> Result<(Party, f64), String> {
    let (p, l) = s.split_once(':').ok_or_else(|| format!("expected PARTY:LAMBDA, got {s:?}"))?;
    let party = p.parse::<Party>().map_err(|e| e.to_string())?;
    let lambda = l.parse::<f64>().map_err(|e| format!("bad lambda {l:?}: {e}"))?;
    Ok((party, lambda))
}

/// A failure with its machine-readable code and exit status.
struct Failure {
    code: String,
    detail: String,
    exit: u8,
}

impl From<locc3::Error> for Failure {
    fn from(e: locc3::Error) -> Self {
        Failure {
            code: e.code().to_string(),
            detail: e.to_string(),
            exit: if e.is_search_failure() { 3 } else { 2 },
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: "IoError".into(),
        detail: format!("{}: {e}", path.display()),
        exit: 2,
    }
}

fn contract(detail: impl Into<String>) -> Failure {
    locc3::Error::InvalidParameter(detail.into()).into()
}

type CliResult<T> = Result<T, Failure>;

fn tolerances(g: &Global) -> CliResult<Tolerances> {
    let mut t = Tolerances::default();
    let overrides = [
        (g.tol_norm, &mut t.norm),
        (g.tol_unit, &mut t.unit),
        (g.tol_prob, &mut t.prob),
        (g.tol_tangle, &mut t.tangle),
        (g.tol_i6, &mut t.i6),
        (g.tol_degenerate, &mut t.degenerate),
        (g.tol_gate, &mut t.gate),
        (g.tol_res, &mut t.res),
        (g.tol_orbit, &mut t.orbit),
        (g.tol_proto, &mut t.proto),
    ];
    for (value, slot) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    t.validate()?;
    Ok(t)
}

fn read_state(path: &Path, tol: &Tolerances) -> CliResult<PureState3Q> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(fulljson::parse_state_with(&text, tol.norm)?)
}

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn re_omega_subclass(re: f64, tol: &Tolerances) -> &'static str {
    if re.abs() <= tol.orbit {
        "zero"
    } else if re > 0.0 {
        "positive"
    } else {
        "negative"
    }
}

fn invariants_json(inv: &InvariantVector) -> Value {
    json!({
        "I1": inv.i1,
        "I2": inv.i2,
        "I3": inv.i3,
        "I4": inv.i4,
        "I5": inv.i5,
        "I6": inv.i6,
        "im6_sign": inv.im6_sign.symbol(),
    })
}

enum Output {
    Json(Value),
    Csv(String),
}

fn json_of<T: serde::Serialize>(value: &T) -> CliResult<Output> {
    Ok(Output::Json(serde_json::to_value(value).map_err(|e| contract(e.to_string()))?))
}

fn run(cli: &Cli) -> CliResult<Output> {
    let g = &cli.global;
    let tol = tolerances(g)?;
    let csv_allowed = matches!(cli.command, Command::Curve { .. } | Command::Chain { .. });
    if g.format == Some(Format::Csv) && !csv_allowed {
        return Err(contract("CSV output is only available for curve and chain"));
    }
    match &cli.command {
        Command::Invariants { file } => {
            let s = read_state(file, &tol)?;
            Ok(Output::Json(invariants_json(&compute_invariants_with(&s, tol.i6))))
        }
        Command::Classify { file } => {
            let s = read_state(file, &tol)?;
            let class = classify(&s, &tol);
            let mut out = json!({ "class": class });
            if class == StateClass::GhzClass {
                let w = omega(&s, &tol)?;
                out["omega"] = json!(w.value);
                out["re_omega_subclass"] = json!(re_omega_subclass(w.value.re, &tol));
            }
            Ok(Output::Json(out))
        }
        Command::Canon { file } => {
            let s = read_state(file, &tol)?;
            let form = decompose_ghz(&s, &tol)?;
            Ok(Output::Json(json!({
                "class": StateClass::GhzClass,
                "mu": form.mu,
                "nu": form.nu,
                "gamma": form.gamma,
                "deltas": form.deltas(),
                "omega": form.omega,
                "re_omega_subclass": re_omega_subclass(form.omega.re, &tol),
                "im_sign_ambiguous": form.im_sign_ambiguous,
                "term_mu": form.term_mu,
                "term_nu": form.term_nu,
                "frame": form.frame,
            })))
        }
        Command::GateFind { file, party, grid } => {
            let s = read_state(file, &tol)?;
            let r = if s.is_real_amplitudes(tol.norm) {
                find_gate_unitary_real(&s, *party, &tol)?
            } else {
                find_gate_unitary_complex_with(&s, *party, LambdaChoice::Probe, *grid, &tol)?
            };
            Ok(Output::Json(json!({
                "party": r.party,
                "alpha": r.alpha,
                "zeta": r.zeta,
                "unitary": r.unitary,
                "residuals": {
                    "r1": r.residuals.r1,
                    "r2": r.residuals.r2,
                    "max_abs": r.residuals.max_abs(),
                },
                "candidates_tried": r.candidates_tried,
                "lambda": r.lambda,
                "transformed": r.transformed,
            })))
        }
        Command::ApplyPovm { file, party, lambda } => {
            let s = read_state(file, &tol)?;
            let gate = if s.is_real_amplitudes(tol.norm) {
                find_gate_unitary_real(&s, *party, &tol)?
            } else {
                find_gate_unitary_complex_with(&s, *party, LambdaChoice::Fixed(*lambda), DEFAULT_GRID, &tol)?
            };
            let povm = DeterministicPovm::build(&s, *party, &gate.unitary, *lambda, &tol)?;
            let app = apply_deterministic_povm(&s, &povm, &tol)?;
            Ok(Output::Json(json!({
                "party": party,
                "lambda": lambda,
                "x": povm.diag.x,
                "y": povm.diag.y,
                "pre_rotation": povm.pre_rotation,
                "kraus": povm.kraus(),
                "probabilities": app.probabilities,
                "verdict": app.verdict,
                "outcomes": app.outcomes,
                "fingerprints": app.fingerprints.map(|f| invariants_json(&f)),
            })))
        }
        Command::Curve {
            file,
            party,
            lambda_max,
            samples,
        } => {
            let s = read_state(file, &tol)?;
            let gate = find_gate_unitary(&s, *party, &tol)?;
            let curve = orbit_curve(&gate.transformed, *party, *lambda_max, *samples, &tol)?;
            if g.format == Some(Format::Json) {
                return json_of(&curve);
            }
            let mut csv = String::from("lambda,I1,I2,I3,I4,I5,ReOmega\n");
            for sample in &curve.samples {
                let mut row = vec![csv_float(sample.lambda)];
                row.extend(sample.invariants.iter().map(|&v| csv_float(v)));
                row.push(sample.re_omega.map(csv_float).unwrap_or_default());
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            Ok(Output::Csv(csv))
        }
        Command::Protocol(p) => {
            let (target, first) = match *p {
                ProtocolCommand::Ghz2real {
                    mu,
                    delta,
                    delta_prime,
                    first,
                } => (ProtocolTarget::Real(TargetRealSpec::new(mu, delta, delta_prime)?), first),
                ProtocolCommand::Ghz2complex {
                    delta,
                    delta_prime,
                    delta_double_prime,
                    first,
                } => (
                    ProtocolTarget::Complex(TargetComplexSpec::new(delta, delta_prime, delta_double_prime)?),
                    first,
                ),
            };
            let trace = run_protocol(target, Roles::led_by(first), &tol)?;
            json_of(&trace)
        }
        Command::Chain { file, steps } => {
            let s = read_state(file, &tol)?;
            let chain = chain_deterministic(&s, steps, &tol)?;
            if g.format != Some(Format::Csv) {
                return json_of(&chain);
            }
            let mut csv = String::from("step,party,lambda,I1,I2,I3,I4,I5,ReOmega\n");
            let mut push = |step: usize, party: &str, lambda: f64, inv: &[f64; 5], re: f64| {
                let mut row = vec![step.to_string(), party.to_string(), csv_float(lambda)];
                row.extend(inv.iter().map(|&v| csv_float(v)));
                row.push(csv_float(re));
                csv.push_str(&row.join(","));
                csv.push('\n');
            };
            push(0, "", 1.0, &chain.initial_invariants, chain.initial_re_omega);
            for (k, st) in chain.trajectory.iter().enumerate() {
                push(k + 1, &st.party.to_string(), st.lambda, &st.invariants, st.re_omega);
            }
            Ok(Output::Csv(csv))
        }
        Command::RandomState { ensemble } => {
            let s = random_state(g.seed, *ensemble, &tol)?;
            json_of(&s)
        }
        Command::Verify { campaign, trials, grid } => {
            let config = RunConfig {
                tolerances: tol,
                seed: g.seed,
                grid_size: *grid,
                trials: *trials,
            };
            let report = run_campaign(*campaign, &config)?;
            json_of(&report)
        }
    }
}

fn emit(output: Output, out: Option<&Path>) -> CliResult<()> {
    let mut bytes = match output {
        Output::Json(v) => fulljson::to_string(&v)?.into_bytes(),
        Output::Csv(s) => s.into_bytes(),
    };
    if !bytes.ends_with(b"\n") {
        bytes.push(b'\n');
    }
    match out {
        Some(path) => fs::write(path, &bytes).map_err(|e| io_failure(path, e)),
        None => io::stdout().write_all(&bytes).map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn report(f: &Failure) -> ExitCode {
    let body = json!({ "error": f.code, "detail": f.detail });
    let text = fulljson::to_string(&body).unwrap_or_else(|_| body.to_string());
    eprintln!("{text}");
    ExitCode::from(f.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return report(&Failure {
                code: "UsageError".into(),
                detail: e.to_string().trim_end().to_string(),
                exit: 2,
            })
        }
    };
    match run(&cli).and_then(|o| emit(o, cli.global.out.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
