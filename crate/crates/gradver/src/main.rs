//! Command-line driver: verify, run, coexec, fuzz.
//!
//! Exit codes: 0 = clean, 2 = failures/violations found, 1 = usage or input
//! error.

use clap::{Parser, Subcommand, ValueEnum};
use gradver::ast::Program;
use gradver::harness::{coexecute, fuzz, CoExecOpts, FuzzConfig};
use gradver::parser::parse_program;
use gradver::runtime::{run, Mode, Outcome, RunOpts};
use gradver::verifier::{verify, Succ, VerifyReport};
use gradver::wf::check_well_formed;
use serde_json::json;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gradver", about = "Gradual static verifier and reference interpreter")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum RunMode {
    Full,
    Guarded,
}

#[derive(Subcommand)]
enum Cmd {
    /// Statically verify a program and report residual run-time checks.
    Verify {
        file: String,
        #[arg(long)]
        json: bool,
        /// Print every explored symbolic state.
        #[arg(long)]
        dump_states: bool,
        /// Keep branches with unsatisfiable path conditions.
        #[arg(long)]
        no_prune: bool,
    },
    /// Execute a program under the dynamic semantics.
    Run {
        file: String,
        #[arg(long, value_enum)]
        mode: RunMode,
        #[arg(long)]
        no_exclusion_frames: bool,
        /// Print one line per step: ⟨rule, site, |α|, stack-depth⟩.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 100_000)]
        step_limit: usize,
    },
    /// Co-execute guarded mode against the verification graph and check the
    /// correspondence relations at every step.
    Coexec {
        file: String,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        no_exclusion_frames: bool,
        #[arg(long, default_value_t = 100_000)]
        step_limit: usize,
    },
    /// Generate random verified programs and differentially test them.
    Fuzz {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        /// Probability that a contract or invariant is made imprecise.
        #[arg(long, default_value_t = 0.3)]
        imprecision: f64,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not usage errors.
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
    }
}

fn load(file: &str) -> Result<(Program, String), String> {
    let src = std::fs::read_to_string(file).map_err(|e| format!("{}: {}", file, e))?;
    let program = parse_program(&src).map_err(|e| format!("{}: {:?}", file, e))?;
    let diags = check_well_formed(&program);
    if !diags.is_empty() {
        let mut out = String::new();
        for d in &diags {
            out.push_str(&format!("{:?}\n", d));
        }
        return Err(out);
    }
    Ok((program, src))
}

fn dispatch(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Verify { file, json, dump_states, no_prune } => {
            let (program, _) = load(&file)?;
            let report = verify(&program, no_prune);
            if json {
                println!("{}", serde_json::to_string_pretty(&verify_json(&report)).unwrap());
            } else {
                print_verify(&report, dump_states);
            }
            Ok(ExitCode::from(if report.ok() { 0 } else { 2 }))
        }
        Cmd::Run { file, mode, no_exclusion_frames, trace, json, step_limit } => {
            let (program, _) = load(&file)?;
            let report = verify(&program, false);
            let mode = match mode {
                RunMode::Full => Mode::Full,
                RunMode::Guarded => Mode::Guarded,
            };
            let res = run(&program, &report, RunOpts { mode, no_exclusion_frames, trace, step_limit });
            for line in &res.trace {
                println!("{}", line);
            }
            let (desc, code) = match &res.outcome {
                Outcome::Completed(v) => (format!("completed: result = {}", v), 0),
                Outcome::Stuck { span, reason } => (format!("stuck at {}: {}", span, reason), 2),
                Outcome::CheckFailed { span, check, .. } => {
                    (format!("check failed at {}: {}", span, check), 2)
                }
                Outcome::StepLimit => ("step limit reached".to_string(), 0),
            };
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "outcome": desc,
                        "steps": res.steps,
                        "checks_evaluated": res.checks_evaluated,
                    }))
                    .unwrap()
                );
            } else {
                println!("{} ({} steps, {} checks evaluated)", desc, res.steps, res.checks_evaluated);
            }
            Ok(ExitCode::from(code))
        }
        Cmd::Coexec { file, json, no_exclusion_frames, step_limit } => {
            let (program, _) = load(&file)?;
            let report = verify(&program, false);
            let co = coexecute(&program, &report, CoExecOpts { no_exclusion_frames, step_limit });
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "outcome": format!("{:?}", co.outcome),
                        "steps": co.steps,
                        "checks_evaluated": co.checks_evaluated,
                        "violations": co.violations.iter().map(|v| json!({
                            "step": v.step,
                            "relation": v.relation,
                            "detail": v.detail,
                        })).collect::<Vec<_>>(),
                        "notes": co.notes,
                    }))
                    .unwrap()
                );
            } else {
                println!("outcome: {:?} after {} steps", co.outcome, co.steps);
                for v in &co.violations {
                    println!("violation at step {} [{}]: {}", v.step, v.relation, v.detail);
                }
                for n in &co.notes {
                    println!("note: {}", n);
                }
                if co.clean() {
                    println!("all correspondence relations held");
                }
            }
            Ok(ExitCode::from(if co.clean() { 0 } else { 2 }))
        }
        Cmd::Fuzz { seed, count, imprecision, json } => {
            let cfg = FuzzConfig { seed, count, imprecision, ..FuzzConfig::default() };
            let rep = fuzz(&cfg);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "seed": rep.seed,
                        "generated": rep.generated,
                        "attempts": rep.attempts,
                        "guarded_checks_evaluated": rep.guarded_checks_evaluated,
                        "outcome_matches": rep.outcome_matches,
                        "flags": rep.flags.iter().map(|f| json!({
                            "index": f.index,
                            "kind": f.kind,
                            "detail": f.detail,
                            "shrunk": f.shrunk,
                        })).collect::<Vec<_>>(),
                    }))
                    .unwrap()
                );
            } else {
                println!(
                    "{} programs accepted ({} attempts), {} guarded checks evaluated",
                    rep.generated, rep.attempts, rep.guarded_checks_evaluated
                );
                for f in &rep.flags {
                    println!("--- flag [{}] on program {}: {}", f.kind, f.index, f.detail);
                    println!("{}", f.shrunk);
                }
                if rep.clean() {
                    println!("no soundness flags");
                }
            }
            Ok(ExitCode::from(if rep.clean() { 0 } else { 2 }))
        }
    }
}

fn verify_json(report: &VerifyReport) -> serde_json::Value {
    let mut sites = Vec::new();
    for g in &report.graphs {
        for e in &g.edges {
            if e.checks.is_empty() && e.exclusion.is_empty() {
                continue;
            }
            sites.push(json!({
                "method": g.method,
                "pos": format!("{}", e.span),
                "branch_pc": e.branch_pc.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                "checks": e.checks.iter().map(|c| c.src.to_string()).collect::<Vec<_>>(),
                "exclusion": e.exclusion.iter().map(|(p, src)| match src {
                    Some(s) => s.to_string(),
                    None => p.to_string(),
                }).collect::<Vec<_>>(),
            }));
        }
    }
    json!({
        "sites": sites,
        "failures": report.failures.iter().map(|f| json!({
            "method": f.method,
            "pos": format!("{}", f.span),
            "msg": f.msg,
        })).collect::<Vec<_>>(),
        "stats": {
            "states": report.stats.states,
            "edges": report.stats.edges,
            "pruned": report.stats.pruned,
        },
    })
}

fn print_verify(report: &VerifyReport, dump_states: bool) {
    for g in &report.graphs {
        let mut printed = false;
        for e in &g.edges {
            if e.checks.is_empty() && e.exclusion.is_empty() {
                continue;
            }
            if !printed {
                println!("method {}:", g.method);
                printed = true;
            }
            let target = match e.to {
                Succ::State(s) => format!("state {}", s),
                Succ::Final => "exit".to_string(),
            };
            println!("  {} -> {} at {}:", e.from, target, e.span);
            for c in &e.checks {
                println!("    check {}", c.src);
            }
            for (p, src) in &e.exclusion {
                match src {
                    Some(s) => println!("    exclude {}", s),
                    None => println!("    exclude {}", p),
                }
            }
        }
        if dump_states {
            println!("method {} states:", g.method);
            for s in &g.states {
                println!("  [{}] {:?}", s.id, s.st);
            }
        }
    }
    for f in &report.failures {
        println!("failure in {} at {}: {}", f.method, f.span, f.msg);
    }
    for d in &report.diagnostics {
        println!("note: {}", d);
    }
    println!(
        "{} states, {} edges, {} pruned branches",
        report.stats.states, report.stats.edges, report.stats.pruned
    );
    if report.ok() {
        println!("verification succeeded");
    } else {
        println!("verification failed");
    }
}
