//! Command-line front end: load a spec file, run programs, check triples
//! and proof scripts, print transformed assertions.
//!
//! Exit codes: 0 success / valid-on-suite, 1 invalid, 2 parse error,
//! 3 runtime error, 4 depth-bounded. Set `QHL_COLOR=1` for ANSI colors.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qhl::checker::{
    check_semantic, check_wp, proof::check_proof, render_mixed, sample::SuiteParams, CheckConfig,
    StateSuite, Verdict, VerdictStatus,
};
use qhl::cqstate::{Interpretation, MixedCqState};
use qhl::error::QhlError;
use qhl::semantics::{exec_pure, ExecConfig};
use qhl::syntax::ast::TripleSort;
use qhl::syntax::pretty::{format_complex, pretty_dassert, pretty_passert, pretty_rexpr};
use qhl::syntax::{parse_dassert_text, parse_passert_text, parse_rexpr_text, SpecFile};
use qhl::wpcalc::{preterm, wp_det, wp_prob, DepthConfig};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "qhl",
    version,
    about = "Checker for quantum-classical imperative programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: CommonOpts,
}

#[derive(Args)]
struct CommonOpts {
    /// RNG seed for the test-state suite.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Number of random suite states of each kind.
    #[arg(long, global = true, default_value_t = 50)]
    suite_size: usize,
    /// Bound K for the while clause of the deterministic wp calculus.
    #[arg(long, global = true, default_value_t = 64)]
    depth_k: usize,
    /// Bound N for the preterm while series.
    #[arg(long, global = true, default_value_t = 64)]
    depth_n: usize,
    /// Absolute tolerance for equality comparisons and `= 1` atoms.
    #[arg(long, global = true, default_value_t = 1e-9)]
    atol: f64,
    /// Loop-round cap of the interpreter.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_while_iters: usize,
    /// Output format.
    #[arg(long, global = true, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a program and print the final mixed state.
    Run {
        /// Spec file path.
        spec: String,
        /// Program name.
        program: String,
        /// Initial state name (default: all variables 0, all qubits |0>).
        #[arg(long)]
        state: Option<String>,
    },
    /// Check a named triple via both the semantic and the wp route.
    Check { spec: String, triple: String },
    /// Print the weakest precondition of an assertion.
    Wp {
        spec: String,
        program: String,
        /// Postcondition (deterministic assertion or probabilistic formula).
        post: String,
    },
    /// Print the weakest preterm of a real expression.
    Pt {
        spec: String,
        program: String,
        /// Real expression.
        term: String,
    },
    /// Check a proof script step by step.
    ProveCheck { spec: String, proof: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                QhlError::Parse { .. } | QhlError::Validation(_) => 2,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn color_enabled() -> bool {
    matches!(
        std::env::var("QHL_COLOR").ok().as_deref(),
        Some("1") | Some("true") | Some("yes")
    )
}

fn paint(text: &str, code: &str) -> String {
    if color_enabled() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn status_str(s: VerdictStatus) -> String {
    match s {
        VerdictStatus::ValidOnSuite => paint("VALID_ON_SUITE", "32"),
        VerdictStatus::Invalid => paint("INVALID", "31"),
        VerdictStatus::DepthBounded => paint("DEPTH_BOUNDED", "33"),
    }
}

struct Setup {
    spec: SpecFile,
    interp: Interpretation,
    cfg: CheckConfig,
    params: SuiteParams,
}

fn setup(path: &str, opts: &CommonOpts) -> Result<Setup, QhlError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QhlError::Eval(format!("cannot read {path}: {e}")))?;
    let spec = SpecFile::parse(&text)?;
    let interp = spec.decls.interpretation();
    let cfg = CheckConfig {
        exec: ExecConfig {
            max_while_iters: opts.max_while_iters,
            ..ExecConfig::default()
        },
        sat: qhl::assertions::SatConfig { atol: opts.atol },
        depth: DepthConfig {
            wp_while_depth: opts.depth_k,
            pt_while_terms: opts.depth_n,
        },
    };
    let params = SuiteParams {
        count: opts.suite_size,
        seed: opts.seed,
        ..SuiteParams::default()
    };
    Ok(Setup {
        spec,
        interp,
        cfg,
        params,
    })
}

#[derive(Serialize)]
struct RunReport {
    schema_version: u32,
    command: &'static str,
    program: String,
    supports: Vec<SupportJson>,
    total_mass: f64,
    residual_mass: f64,
    iterations_used: usize,
    depth_bounded: bool,
}

#[derive(Serialize)]
struct SupportJson {
    mass: f64,
    vars: std::collections::BTreeMap<String, i64>,
    amplitudes: Vec<String>,
}

fn supports_json(theta: &MixedCqState) -> Vec<SupportJson> {
    theta
        .supports()
        .map(|(s, mass)| SupportJson {
            mass,
            vars: s.store.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            amplitudes: s
                .quantum
                .amplitudes()
                .iter()
                .map(|a| format_complex(*a))
                .collect(),
        })
        .collect()
}

#[derive(Serialize)]
struct CheckReport {
    schema_version: u32,
    command: &'static str,
    triple: String,
    sort: &'static str,
    semantic: Verdict,
    wp: Verdict,
    exit_code: u8,
}

#[derive(Serialize)]
struct ProofReport {
    schema_version: u32,
    command: &'static str,
    proof: String,
    verdict: Verdict,
    exit_code: u8,
}

fn dispatch(cli: &Cli) -> Result<u8, QhlError> {
    match &cli.cmd {
        Cmd::Run {
            spec,
            program,
            state,
        } => {
            let s = setup(spec, &cli.opts)?;
            let prog = s.spec.program(program)?;
            let initial = match state {
                Some(name) => s.spec.state(name)?.clone(),
                None => s.spec.decls.default_state(),
            };
            let r = exec_pure(prog, &initial, &s.spec.decls, &s.cfg.exec)?;
            let depth_bounded = r.residual_mass > qhl::checker::RESIDUAL_TOL;
            if cli.opts.format == Format::Json {
                let report = RunReport {
                    schema_version: SCHEMA_VERSION,
                    command: "run",
                    program: program.clone(),
                    supports: supports_json(&r.out),
                    total_mass: r.out.mass(),
                    residual_mass: r.residual_mass,
                    iterations_used: r.iterations_used,
                    depth_bounded,
                };
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("final state of `{program}`:");
                println!("{}", render_mixed(&r.out));
                println!("total mass:    {}", r.out.mass());
                println!("residual mass: {}", r.residual_mass);
                println!("loop rounds:   {}", r.iterations_used);
                if depth_bounded {
                    println!(
                        "{}",
                        paint("note: depth-bounded (leftover loop mass)", "33")
                    );
                }
            }
            Ok(0)
        }
        Cmd::Check { spec, triple } => {
            let s = setup(spec, &cli.opts)?;
            let t = s.spec.triple(triple)?;
            let suite = StateSuite::build_for_triple(
                &s.spec.decls,
                s.spec.states.clone(),
                &s.params,
                t,
                &s.interp,
                &s.cfg.sat,
            )?;
            let semantic = check_semantic(t, &suite, &s.spec.decls, &s.interp, &s.cfg)?;
            let wp = check_wp(t, &suite, &s.spec.decls, &s.interp, &s.cfg)?;
            let exit_code = exit_for(&[semantic.status, wp.status]);
            if cli.opts.format == Format::Json {
                let report = CheckReport {
                    schema_version: SCHEMA_VERSION,
                    command: "check",
                    triple: triple.clone(),
                    sort: match t.body.sort() {
                        TripleSort::Deterministic => "deterministic",
                        TripleSort::Probabilistic => "probabilistic",
                    },
                    semantic,
                    wp,
                    exit_code,
                };
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                print_verdict("semantic", &semantic);
                print_verdict("wp", &wp);
            }
            Ok(exit_code)
        }
        Cmd::Wp {
            spec,
            program,
            post,
        } => {
            let s = setup(spec, &cli.opts)?;
            let prog = s.spec.program(program)?;
            match parse_dassert_text(post, &s.spec.decls) {
                Ok(phi) => {
                    println!("{}", pretty_dassert(&wp_det(prog, &phi, &s.cfg.depth)));
                }
                Err(det_err) => match parse_passert_text(post, &s.spec.decls) {
                    Ok(formula) => {
                        let out = wp_prob(prog, &formula, &s.cfg.depth, &s.spec.decls)?;
                        println!("{}", pretty_passert(&out));
                    }
                    Err(_) => return Err(det_err),
                },
            }
            Ok(0)
        }
        Cmd::Pt {
            spec,
            program,
            term,
        } => {
            let s = setup(spec, &cli.opts)?;
            let prog = s.spec.program(program)?;
            let r = parse_rexpr_text(term, &s.spec.decls)?;
            let out = preterm(prog, &r, &s.cfg.depth, &s.spec.decls)?;
            println!("{}", pretty_rexpr(&out));
            Ok(0)
        }
        Cmd::ProveCheck { spec, proof } => {
            let s = setup(spec, &cli.opts)?;
            let script = s.spec.proof(proof)?;
            let suite = StateSuite::build(&s.spec.decls, s.spec.states.clone(), &s.params)?;
            let verdict = check_proof(script, &suite, &s.spec.decls, &s.interp, &s.cfg)?;
            let exit_code = exit_for(&[verdict.status]);
            if cli.opts.format == Format::Json {
                let report = ProofReport {
                    schema_version: SCHEMA_VERSION,
                    command: "prove-check",
                    proof: proof.clone(),
                    verdict,
                    exit_code,
                };
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                print_verdict("proof", &verdict);
            }
            Ok(exit_code)
        }
    }
}

fn exit_for(statuses: &[VerdictStatus]) -> u8 {
    if statuses.iter().any(|s| *s == VerdictStatus::Invalid) {
        1
    } else if statuses.iter().any(|s| *s == VerdictStatus::DepthBounded) {
        4
    } else {
        0
    }
}

fn print_verdict(route: &str, v: &Verdict) {
    println!("{route}: {}", status_str(v.status));
    let mut labels = Vec::new();
    if v.labels.range_bounded {
        labels.push("range-bounded");
    }
    if v.labels.depth_bounded {
        labels.push("depth-bounded");
    }
    if v.labels.checked_on_suite {
        labels.push("checked-on-suite");
    }
    if !labels.is_empty() {
        println!("  labels: {}", labels.join(", "));
    }
    let checked = v.states.iter().filter(|s| s.precondition_holds).count();
    println!("  states checked: {checked} of {}", v.states.len());
    if let Some(ce) = &v.counterexample {
        println!(
            "  counterexample (state #{} {}):",
            ce.state_index, ce.state_label
        );
        println!("    {}", ce.state);
        for line in ce.observed.lines() {
            println!("    {line}");
        }
    }
}
