//! `asc`: command-line front end for affectible session contracts.
//!
//! Exit codes: 0 for a positive verdict or success, 1 for a negative
//! verdict, 2 for usage and input errors.

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use asc_core::compliance::{prove, Environment, Judgment};
use asc_core::games::strategy_from_orch;
use asc_core::orchestrators::{o2d, synth};
use asc_core::parse::parse_contract_with_notes;
use asc_core::semantics::{orch_steps, rbk_system_steps, tb_orch_steps, tb_steps, OrchSystem, RbkSystem, TBConfig, TBOrchConfig};
use asc_core::subcontract::{apply_functor, compile_functor, sub_prove, SubDerivation, SubEnv, SubJudgment};
use asc_core::testkit::{bounded_pairs, cross_check_pairs, sample_recursive_pairs, CrossCheckReport, EnumSpec, Scope};
use asc_core::{parse_orch, Contract, Orch};

#[derive(Parser, Debug)]
#[command(name = "asc", version, about = "Affectible session contracts: compliance, orchestrators and subcontracts")]
struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide compliance and print a derivation.
    Check { client: String, server: String },
    /// Print every synthesized orchestrator, one per line.
    Synth { client: String, server: String },
    /// Print one run of a semantics.
    Simulate {
        client: String,
        server: String,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 50)]
        max_steps: usize,
        /// Orchestrator for the orchestrated modes; defaults to the first
        /// synthesized one in `orch` mode.
        #[arg(long)]
        orch: Option<String>,
        /// Pick among enabled steps at random with this seed instead of
        /// taking the first.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the strategy induced by an orchestrator.
    Strategy {
        client: String,
        server: String,
        #[arg(long)]
        orch: String,
    },
    /// Rebuild a compliance derivation from an orchestrator.
    O2d {
        client: String,
        server: String,
        #[arg(long)]
        orch: String,
    },
    /// Decide the subcontract relation and print a derivation.
    Sub { lower: String, upper: String },
    /// Apply the functor of a subcontract derivation to an orchestrator.
    Functor {
        /// Subcontract derivation as JSON, inline or a file path.
        #[arg(long, required_unless_present = "lower")]
        derivation: Option<String>,
        /// Lower contract, to recompute the derivation.
        #[arg(long, requires = "upper", conflicts_with = "derivation")]
        lower: Option<String>,
        #[arg(long, requires = "lower")]
        upper: Option<String>,
        #[arg(long)]
        orch: String,
    },
    /// Cross-check the decision procedures on enumerated pairs.
    Crosscheck {
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Keep only contracts with at most this many prefixes.
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Additional recursive pairs to sample.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Parse a contract, or an orchestrator with `--orch`, and print it.
    Parse {
        term: String,
        #[arg(long)]
        orch: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Rollback,
    Orch,
    Tb,
}

/// Largest number of pairs `crosscheck` will enumerate.
const PAIR_CAP: usize = 5_000_000;

/// Reads an argument as a file when such a file exists, inline otherwise.
fn source(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.is_file() {
        std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))
    } else {
        Ok(arg.to_string())
    }
}

fn contract(arg: &str) -> Result<Contract> {
    let src = source(arg)?;
    asc_core::parse_contract(src.trim()).with_context(|| format!("parsing contract `{}`", src.trim()))
}

fn orchestrator(arg: &str) -> Result<Orch> {
    let src = source(arg)?;
    parse_orch(src.trim()).with_context(|| format!("parsing orchestrator `{}`", src.trim()))
}

/// Output of a command and whether its verdict is positive.
struct Report {
    text: String,
    json: Value,
    positive: bool,
}

fn report(text: String, json: Value, positive: bool) -> Report {
    Report { text, json, positive }
}

fn pick<T>(rng: &mut Option<StdRng>, mut items: Vec<T>) -> Option<T> {
    if items.is_empty() {
        return None;
    }
    let i = rng.as_mut().map_or(0, |r| r.gen_range(0..items.len()));
    Some(items.swap_remove(i))
}

fn simulate(client: &Contract, server: &Contract, mode: Mode, max_steps: usize, orch: Option<Orch>, seed: Option<u64>) -> Result<Report> {
    let mut rng = seed.map(StdRng::seed_from_u64);
    let mut lines = Vec::new();
    let mut steps = Vec::new();
    let mut record = |label: String, state: String, lines: &mut Vec<String>| {
        lines.push(format!("{:>3}  {label:<16} {state}", lines.len()));
        steps.push(json!({ "label": label, "state": state }));
    };
    let success = match mode {
        Mode::Rollback => {
            let mut sys = RbkSystem::new(client, server);
            record("start".into(), sys.to_string(), &mut lines);
            for _ in 0..max_steps {
                let Some((rule, next)) = pick(&mut rng, rbk_system_steps(&sys)) else { break };
                record(rule.to_string(), next.to_string(), &mut lines);
                sys = next;
            }
            let stuck = rbk_system_steps(&sys).is_empty();
            !stuck || sys.client.is_success()
        }
        Mode::Orch => {
            let f = match orch {
                Some(f) => f,
                None => synth(client, server).into_iter().next().context("no orchestrator exists; pass --orch")?,
            };
            let mut sys = OrchSystem::new(client, &f, server);
            record("start".into(), sys.to_string(), &mut lines);
            for _ in 0..max_steps {
                let Some((label, next)) = pick(&mut rng, orch_steps(&sys)) else { break };
                record(label.to_string(), next.to_string(), &mut lines);
                sys = next;
            }
            !orch_steps(&sys).is_empty() || sys.client.is_success()
        }
        Mode::Tb => match orch {
            Some(f) => {
                let mut cfg = TBOrchConfig::new(client, &f, server);
                record("start".into(), cfg.to_string(), &mut lines);
                for _ in 0..max_steps {
                    let Some((label, next)) = pick(&mut rng, tb_orch_steps(&cfg)) else { break };
                    record(label.to_string(), next.to_string(), &mut lines);
                    cfg = next;
                }
                !tb_orch_steps(&cfg).is_empty() || cfg.client == asc_core::semantics::BufferedContract::Zero
            }
            None => {
                let mut cfg = TBConfig::new(client, server);
                record("start".into(), cfg.to_string(), &mut lines);
                for _ in 0..max_steps {
                    let Some((label, next)) = pick(&mut rng, tb_steps(&cfg)) else { break };
                    record(label.to_string(), next.to_string(), &mut lines);
                    cfg = next;
                }
                !tb_steps(&cfg).is_empty() || cfg.client == asc_core::semantics::BufferedContract::Zero
            }
        },
    };
    lines.push(if success { "run ok".into() } else { "stuck with an unsuccessful client".into() });
    Ok(report(lines.join("\n"), json!({ "steps": steps, "ok": success }), success))
}

fn crosscheck(alphabet: usize, depth: usize, max_size: Option<usize>, seed: u64, samples: usize) -> Result<Report> {
    let spec = EnumSpec { alphabet, max_depth: depth, max_size, seed, ..EnumSpec::default() };
    let (pairs, scope) = bounded_pairs(&spec, PAIR_CAP)?;
    let mut r = cross_check_pairs(&pairs);
    if samples > 0 {
        r.merge(cross_check_pairs(&sample_recursive_pairs(&spec, samples)));
    }
    Ok(crosscheck_report(r, &scope))
}

fn crosscheck_report(r: CrossCheckReport, scope: &Scope) -> Report {
    let json = json!({
        "scope": scope.to_string(),
        "pairs": r.pairs,
        "recursive": r.recursive,
        "compliant": r.compliant,
        "disagreements": r.disagreements,
        "round_trip_failures": r.round_trips,
    });
    report(format!("scope          {scope}\n{}", r.to_string().trim_end()), json, r.is_clean())
}

fn run(cli: Cli) -> Result<Report> {
    Ok(match cli.command {
        Command::Check { client, server } => {
            let (c, s) = (contract(&client)?, contract(&server)?);
            match prove(&Environment::new(), &Judgment::new(&c, &s)) {
                Some(d) => report(d.to_string().trim_end().into(), json!({ "compliant": true, "derivation": d.to_json() }), true),
                None => report("NOT COMPLIANT".into(), json!({ "compliant": false }), false),
            }
        }
        Command::Synth { client, server } => {
            let fs = synth(&contract(&client)?, &contract(&server)?);
            let shown: Vec<String> = fs.iter().map(Orch::to_string).collect();
            let text = if shown.is_empty() { "NO ORCHESTRATOR".into() } else { shown.join("\n") };
            report(text, json!({ "orchestrators": shown }), !fs.is_empty())
        }
        Command::Simulate { client, server, mode, max_steps, orch, seed } => {
            let f = orch.as_deref().map(orchestrator).transpose()?;
            simulate(&contract(&client)?, &contract(&server)?, mode, max_steps, f, seed)?
        }
        Command::Strategy { client, server, orch } => {
            let sigma = strategy_from_orch(&orchestrator(&orch)?, &contract(&client)?, &contract(&server)?);
            report(
                sigma.tree.to_string().trim_end().into(),
                json!({ "univocal": sigma.is_univocal(), "tree": sigma.tree.to_json() }),
                true,
            )
        }
        Command::O2d { client, server, orch } => {
            let f = orchestrator(&orch)?;
            match o2d(&f, &contract(&client)?, &contract(&server)?) {
                Some(d) => report(d.to_string().trim_end().into(), json!({ "derivation": d.to_json() }), true),
                None => report(format!("{f} DOES NOT ORCHESTRATE"), json!({ "derivation": null }), false),
            }
        }
        Command::Sub { lower, upper } => {
            let (l, u) = (contract(&lower)?, contract(&upper)?);
            match sub_prove(&SubEnv::new(), &SubJudgment::new(&l, &u)) {
                Some(d) => report(d.to_string().trim_end().into(), json!({ "subcontract": true, "derivation": d.to_json() }), true),
                None => report("NOT A SUBCONTRACT".into(), json!({ "subcontract": false }), false),
            }
        }
        Command::Functor { derivation, lower, upper, orch } => {
            let d = match (derivation, lower, upper) {
                (Some(src), _, _) => {
                    let v: Value = serde_json::from_str(source(&src)?.trim()).context("reading derivation JSON")?;
                    let v = v.get("derivation").cloned().unwrap_or(v);
                    SubDerivation::from_json(&v)?
                }
                (None, Some(l), Some(u)) => {
                    let (l, u) = (contract(&l)?, contract(&u)?);
                    match sub_prove(&SubEnv::new(), &SubJudgment::new(&l, &u)) {
                        Some(d) => d,
                        None => return Ok(report("NOT A SUBCONTRACT".into(), json!({ "subcontract": false }), false)),
                    }
                }
                _ => bail!("pass --derivation or both --lower and --upper"),
            };
            let functor = compile_functor(&d)?;
            let g = apply_functor(&functor, &orchestrator(&orch)?);
            report(g.to_string(), json!({ "orchestrator": g.to_string() }), true)
        }
        Command::Crosscheck { alphabet, depth, max_size, seed, samples } => crosscheck(alphabet, depth, max_size, seed, samples)?,
        Command::Parse { term, orch } => {
            let src = source(&term)?;
            if orch {
                let f = parse_orch(src.trim())?;
                report(f.to_string(), json!({ "orchestrator": f.to_string() }), true)
            } else {
                let parsed = parse_contract_with_notes(src.trim())?;
                let mut text = parsed.value.to_string();
                for n in &parsed.notes {
                    text.push_str(&format!("\nnote: {n}"));
                }
                report(text, json!({ "contract": parsed.value.to_string(), "notes": parsed.notes }), true)
            }
        }
    })
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
    let json = cli.json;
    match run(cli) {
        Ok(r) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&r.json).expect("serializable"));
            } else {
                println!("{}", r.text);
            }
            ExitCode::from(if r.positive { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
