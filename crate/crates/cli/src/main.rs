//! `lcs`: decide reachability, saturated cycles and liveness for
//! leader/contributor systems.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use lcs_core::crosscheck::{self, CrosscheckOptions};
use lcs_core::cycle::{cyc, cyc_bruteforce, CycEvidence};
use lcs_core::gen::{corpus_params, generate_instance, GenParams};
use lcs_core::liveness::{lcl, Backend};
use lcs_core::semantics::{
    bounded_live_oracle, bounded_reach_oracle, bounded_saturated_cycle_oracle, Limits, OracleError,
    Step,
};
use lcs_core::subsets::lcr_subsets;
use lcs_core::witness::{lcr_witness, Engine, WitnessError};
use lcs_core::{parse_system, serialize_system, Interface, System};

const EXIT_DISAGREEMENT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_PARSE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "lcs",
    version,
    about = "Verify leader/contributor shared-memory systems"
)]
struct Cli {
    /// Output format for results.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Can the leader reach a final state?
    CheckReach {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ReachAlgo::Subsets)]
        algo: ReachAlgo,
        /// Largest contributor count tried by the oracle.
        #[arg(long, default_value_t = 3)]
        bound: usize,
    },
    /// Is there a saturated cycle on an interface?
    CheckCycle {
        file: PathBuf,
        /// Interface as `c0+c1:q0:x`.
        #[arg(long)]
        interface: String,
        #[arg(long, value_enum, default_value_t = CycleAlgo::Fixpoint)]
        algo: CycleAlgo,
        /// Largest contributor count tried by the oracle.
        #[arg(long, default_value_t = 3)]
        bound: usize,
    },
    /// Can the leader visit a final state infinitely often?
    CheckLiveness {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = LiveAlgo::Subsets)]
        algo: LiveAlgo,
        /// Also search for a concrete lasso with up to this many
        /// contributors.
        #[arg(long)]
        confirm_bound: Option<usize>,
    },
    /// Print a random system in the model format.
    Gen(GenArgs),
    /// Compare all engines and oracles on generated systems.
    Crosscheck {
        /// Seed range, `A..B` inclusive.
        #[arg(long, value_parser = parse_seeds)]
        seeds: RangeInclusive<u64>,
        /// `corpus`, or `L,C,D,DENSITY` for fixed sizes.
        #[arg(long, default_value = "corpus")]
        params: String,
        /// Largest contributor count tried by the oracles.
        #[arg(long, default_value_t = 3)]
        oracle_bound: usize,
        /// Directory for minimized reproducers.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    leader: usize,
    #[arg(long)]
    contrib: usize,
    #[arg(long)]
    domain: usize,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0.5)]
    final_fraction: f64,
    #[arg(long)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReachAlgo {
    Subsets,
    Witness,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CycleAlgo {
    Fixpoint,
    Enum,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LiveAlgo {
    Subsets,
    Witness,
}

fn parse_seeds(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got `{s}`"))?;
    let a: u64 = a
        .trim()
        .parse()
        .map_err(|e| format!("bad seed `{a}`: {e}"))?;
    let b: u64 = b
        .trim()
        .parse()
        .map_err(|e| format!("bad seed `{b}`: {e}"))?;
    if a > b {
        return Err(format!("empty seed range `{s}`"));
    }
    Ok(a..=b)
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::Inconclusive { .. } => EXIT_INCONCLUSIVE,
            OracleError::TooFewContributors { .. } => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<WitnessError> for Failure {
    fn from(e: WitnessError) -> Self {
        let code = match e {
            WitnessError::Capacity { .. } => EXIT_INCONCLUSIVE,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

fn load(path: &Path) -> Result<System, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    parse_system(&text).map_err(|e| {
        let (line, col) = e.position();
        Failure::new(EXIT_PARSE, format!("{}:{line}:{col}: {e}", path.display()))
    })
}

/// A result document: the fixed fields plus free-form stats.
struct Report {
    problem: &'static str,
    answer: Value,
    backend: String,
    interface: Option<String>,
    gamma: Option<Vec<String>>,
    stats: Map<String, Value>,
    started: Instant,
}

impl Report {
    fn new(problem: &'static str, backend: impl Into<String>) -> Self {
        Report {
            problem,
            answer: Value::Null,
            backend: backend.into(),
            interface: None,
            gamma: None,
            stats: Map::new(),
            started: Instant::now(),
        }
    }

    fn stat(&mut self, key: &str, v: impl Into<Value>) {
        self.stats.insert(key.to_string(), v.into());
    }

    fn render(self, format: Format) -> String {
        let total_ms = self.started.elapsed().as_secs_f64() * 1e3;
        match format {
            Format::Json => {
                let mut doc = json!({
                    "problem": self.problem,
                    "answer": self.answer,
                    "backend": self.backend,
                });
                if let Some(i) = self.interface {
                    doc["interface"] = json!(i);
                }
                if let Some(g) = self.gamma {
                    doc["gamma"] = json!(g);
                }
                doc["stats"] = Value::Object(self.stats);
                doc["timings"] = json!({ "total_ms": total_ms });
                doc.to_string()
            }
            Format::Text => {
                let answer = match &self.answer {
                    Value::String(s) => s.clone(),
                    v => v.to_string(),
                };
                let mut out = format!("{} ({}): {answer}\n", self.problem, self.backend);
                if let Some(i) = self.interface {
                    out.push_str(&format!("interface: {i}\n"));
                }
                if let Some(g) = self.gamma {
                    out.push_str(&format!("gamma: {{{}}}\n", g.join(", ")));
                }
                for (k, v) in &self.stats {
                    out.push_str(&format!("{k}: {v}\n"));
                }
                out.push_str(&format!("time: {total_ms:.2} ms"));
                out
            }
        }
    }
}

fn show_steps(sys: &System, steps: &[Step]) -> Value {
    steps
        .iter()
        .map(|s| {
            let (from, to) = match s.actor {
                lcs_core::semantics::Actor::Leader => (
                    sys.leader().state_name(s.from),
                    sys.leader().state_name(s.to),
                ),
                lcs_core::semantics::Actor::Contributor => (
                    sys.contributor().state_name(s.from),
                    sys.contributor().state_name(s.to),
                ),
            };
            json!(format!("{from} {} {to}", sys.display_op(s.op)))
        })
        .collect()
}

fn check_reach(sys: &System, algo: ReachAlgo, bound: usize) -> Result<Report, Failure> {
    let mut r;
    match algo {
        ReachAlgo::Subsets => {
            r = Report::new("LCR", "subsets");
            let res = lcr_subsets(sys);
            r.answer = json!(res.reachable);
            r.interface = res.interface.map(|i| sys.display_interface(&i));
            r.stat("abstract_states", res.explored);
            r.stat("trace_length", res.trace.len());
        }
        ReachAlgo::Witness => {
            r = Report::new("LCR", "witness");
            let engine = Engine::new(sys)?;
            let res = lcr_witness(&engine)?;
            r.answer = json!(res.reachable);
            r.stat("table_entries", res.stats.entries);
            r.stat("order1_candidates", res.stats.order1_candidates);
            if let Some(b) = res.beta {
                let names: Vec<&str> = b.values().iter().map(|&a| sys.symbol_name(a)).collect();
                r.stat("first_writes", json!(names));
            }
        }
        ReachAlgo::Oracle => {
            r = Report::new("LCR", "oracle");
            let limits = Limits::from_env();
            r.answer = json!("no-at-bound");
            r.stat("bound", bound);
            let mut explored = 0;
            for t in 1..=bound {
                let res = bounded_reach_oracle(sys, sys.final_states(), t, &limits)?;
                explored += res.explored;
                if let Some(trace) = res.trace {
                    r.answer = json!(true);
                    r.stat("contributors", t);
                    r.stat("trace", show_steps(sys, &trace));
                    break;
                }
            }
            r.stat("configurations", explored);
        }
    }
    Ok(r)
}

fn check_cycle(
    sys: &System,
    iface: &Interface,
    algo: CycleAlgo,
    bound: usize,
) -> Result<Report, Failure> {
    let mut r;
    match algo {
        CycleAlgo::Fixpoint => {
            r = Report::new("CYC", "fixpoint");
            let res = cyc(sys, iface);
            r.answer = json!(res.holds);
            r.stat("iterations", res.chain.len());
            match res.evidence {
                Some(CycEvidence::Stable { gamma }) => {
                    r.gamma = Some(sys.display_symbols(gamma));
                    r.stat("evidence", "stable");
                }
                Some(CycEvidence::ReadOnly) => r.stat("evidence", "read-only"),
                None => {}
            }
        }
        CycleAlgo::Enum => {
            r = Report::new("CYC", "enum");
            let holds = cyc_bruteforce(sys, iface)
                .map_err(|e| Failure::new(EXIT_INCONCLUSIVE, e.to_string()))?;
            r.answer = json!(holds);
        }
        CycleAlgo::Oracle => {
            r = Report::new("CYC", "oracle");
            let limits = Limits::from_env();
            r.answer = json!("no-at-bound");
            r.stat("bound", bound);
            for t in iface.contributors.len()..=bound {
                if bounded_saturated_cycle_oracle(sys, iface, t, &limits)? {
                    r.answer = json!(true);
                    r.stat("contributors", t);
                    break;
                }
            }
        }
    }
    r.interface = Some(sys.display_interface(iface));
    Ok(r)
}

fn check_liveness(sys: &System, algo: LiveAlgo, confirm: Option<usize>) -> Result<Report, Failure> {
    let backend = match algo {
        LiveAlgo::Subsets => Backend::Subsets,
        LiveAlgo::Witness => Backend::Witness,
    };
    let mut r = Report::new("LCL", backend.to_string());
    let v = lcl(sys, backend)?;
    r.answer = json!(v.answer);
    r.interface = v.interface.map(|i| sys.display_interface(&i));
    match v.evidence {
        Some(CycEvidence::Stable { gamma }) => {
            r.gamma = Some(sys.display_symbols(gamma));
            r.stat("evidence", "stable");
        }
        Some(CycEvidence::ReadOnly) => r.stat("evidence", "read-only"),
        None => {}
    }
    r.stat("interfaces", v.stats.interfaces);
    r.stat("cyc_calls", v.stats.cyc_calls);
    if let Some(n) = v.stats.abstract_states {
        r.stat("abstract_states", n);
    }
    if let Some(n) = v.stats.table_entries {
        r.stat("table_entries", n);
    }
    if let Some(bound) = confirm {
        let limits = Limits::from_env();
        let mut confirmed = Value::Null;
        for t in 1..=bound {
            let res = bounded_live_oracle(sys, t, &limits)?;
            if let Some(cert) = res.certificate {
                confirmed = json!({
                    "contributors": t,
                    "prefix": show_steps(sys, &cert.prefix),
                    "cycle": show_steps(sys, &cert.cycle),
                });
                break;
            }
        }
        r.stat("lasso", confirmed);
    }
    Ok(r)
}

fn gen_params(params: &str, seed: u64) -> Result<GenParams, Failure> {
    if params == "corpus" {
        return Ok(corpus_params(seed));
    }
    let parts: Vec<&str> = params.split(',').map(str::trim).collect();
    let bad = || {
        Failure::new(
            EXIT_USAGE,
            format!("--params: expected `corpus` or `L,C,D,DENSITY`, got `{params}`"),
        )
    };
    let [l, c, d, density] = parts.as_slice() else {
        return Err(bad());
    };
    Ok(GenParams {
        leader_states: l.parse().map_err(|_| bad())?,
        contributor_states: c.parse().map_err(|_| bad())?,
        domain_size: d.parse().map_err(|_| bad())?,
        density: density.parse().map_err(|_| bad())?,
        final_fraction: 0.5,
        seed,
    })
}

fn crosscheck_cmd(
    seeds: RangeInclusive<u64>,
    params: &str,
    oracle_bound: usize,
    out: &Path,
    format: Format,
) -> Result<(String, u8), Failure> {
    let probe = gen_params(params, *seeds.start())?;
    generate_instance(&probe).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let opts = CrosscheckOptions {
        oracle_bound,
        limits: Limits::from_env(),
    };
    let started = Instant::now();
    let summary = crosscheck::run(
        seeds,
        |seed| gen_params(params, seed).unwrap_or(probe),
        &opts,
    );
    let mut repros = Vec::new();
    for failing in &summary.failing {
        let sys = generate_instance(&failing.params).expect("generated before");
        let check = failing.report.disagreements[0].check;
        let small = crosscheck::minimize_disagreement(&sys, check, &opts);
        let path = out.join(format!("repro-seed{}-{}.lcs", failing.seed, check));
        fs::write(&path, serialize_system(&small))
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
        repros.push(json!({
            "seed": failing.seed,
            "checks": failing.report.disagreements.iter().map(|d| json!({"check": d.check, "detail": d.detail})).collect::<Vec<_>>(),
            "reproducer": path.display().to_string(),
        }));
    }
    let code = if summary.disagreements == 0 {
        0
    } else {
        EXIT_DISAGREEMENT
    };
    let text = match format {
        Format::Json => json!({
            "problem": "crosscheck",
            "answer": summary.disagreements == 0,
            "backend": "all",
            "stats": {
                "instances": summary.instances,
                "disagreements": summary.disagreements,
                "inconclusive": summary.inconclusive,
                "failing": repros,
            },
            "timings": { "total_ms": started.elapsed().as_secs_f64() * 1e3 },
        })
        .to_string(),
        Format::Text => {
            let mut s = format!(
                "instances: {}\ndisagreements: {}\ninconclusive: {}",
                summary.instances, summary.disagreements, summary.inconclusive
            );
            for r in &repros {
                s.push_str(&format!("\nseed {}: {}", r["seed"], r["reproducer"]));
            }
            s
        }
    };
    Ok((text, code))
}

fn run(cli: Cli) -> Result<(String, u8), Failure> {
    let format = cli.format;
    let report = match cli.command {
        Command::CheckReach { file, algo, bound } => check_reach(&load(&file)?, algo, bound)?,
        Command::CheckCycle {
            file,
            interface,
            algo,
            bound,
        } => {
            let sys = load(&file)?;
            let iface = sys
                .parse_interface(&interface)
                .map_err(|e| Failure::new(EXIT_USAGE, format!("--interface: {e}")))?;
            check_cycle(&sys, &iface, algo, bound)?
        }
        Command::CheckLiveness {
            file,
            algo,
            confirm_bound,
        } => check_liveness(&load(&file)?, algo, confirm_bound)?,
        Command::Gen(g) => {
            let p = GenParams {
                leader_states: g.leader,
                contributor_states: g.contrib,
                domain_size: g.domain,
                density: g.density,
                final_fraction: g.final_fraction,
                seed: g.seed,
            };
            let sys = generate_instance(&p).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            let text = serialize_system(&sys);
            return Ok((text.trim_end().to_string(), 0));
        }
        Command::Crosscheck {
            seeds,
            params,
            oracle_bound,
            out,
        } => return crosscheck_cmd(seeds, &params, oracle_bound, &out, format),
    };
    Ok((report.render(format), 0))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((out, code)) => {
            println!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
