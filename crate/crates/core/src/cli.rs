//! The `ijpred` command line.
//!
//! Exit codes: 0 success (or "predictable"), 1 "not predictable" or an
//! impossible observation, 2 errors, 3 usage errors.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::belief::{compile_predictor, BeliefAutomaton, PredictError, PredictorSession};
use crate::distances::DistanceTable;
use crate::dot::{automaton_to_dot, twin_to_dot};
use crate::fixtures;
use crate::format::{load_model, parse_model_unchecked, serialize_model, LoadOptions};
use crate::frontier::{pair_names, PairHull, PredictabilityFrontier};
use crate::interval::{ExtNat, TimeInterval};
use crate::model::{fault_closure, validate, DesModel, EventId};
use crate::oracle;
use crate::twin::{build_twin_with, TwinOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ijpred", version, about = "Interval fault predictability for partially observable DES models")]
struct Cli {
    /// Replace the fault set by its forward closure before validating.
    #[arg(long, global = true)]
    close_faults: bool,
    /// Skip model validation after parsing.
    #[arg(long, global = true)]
    no_validate: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model and print the validation report.
    Validate { file: PathBuf },
    /// Print dmin and dmax for every state.
    Distances {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Print the reachable twin pairs.
    Twin {
        file: PathBuf,
        /// Add a shortest observation sequence for each pair.
        #[arg(long)]
        witnesses: bool,
        /// Write the explored twin graph as DOT.
        #[arg(long, value_name = "OUT")]
        dot: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Print the predictability frontier.
    Predictability {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Tsv)]
        format: Format,
    },
    /// Decide (i,j)-predictability.
    Query {
        file: PathBuf,
        #[arg(short = 'i')]
        i: u32,
        /// Upper bound, a natural or `inf`.
        #[arg(short = 'j')]
        j: ExtNat,
        /// Print the blocking pair, its hull and a shortest witness.
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Read one observable event per line, print `lo hi` after each.
    Predict { file: PathBuf },
    /// Build the belief automaton.
    Compile {
        file: PathBuf,
        #[arg(long, default_value_t = BeliefAutomaton::DEFAULT_CAP)]
        cap: usize,
        #[arg(long, value_name = "OUT")]
        dot: Option<PathBuf>,
        /// Where to write the JSON (stdout when omitted).
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
    },
    /// Emit a built-in model.
    Gen {
        #[arg(value_enum)]
        which: Generator,
        /// Size parameter for fig3a.
        #[arg(short = 'n')]
        n: Option<usize>,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Also run the brute-force reference and compare.
    #[arg(long)]
    oracle: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Generator {
    Fig1,
    Fig2a,
    Fig2b,
    Fig3a,
}

struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_ERROR,
            error,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

type CmdResult = Result<i32, Failure>;

struct Io<'a> {
    stdin: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
}

/// Runs one command line (`argv[0]` is the program name) and returns the exit code.
pub fn run_command(
    argv: &[String],
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    let opts = LoadOptions {
        close_faults: cli.close_faults,
        skip_validation: cli.no_validate,
    };
    let mut io = Io { stdin, out: stdout };
    let result = dispatch(cli.command, opts, &mut io);
    let _ = io.out.flush();
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {:#}", f.error);
            f.code
        }
    }
}

fn dispatch(cmd: Command, opts: LoadOptions, io: &mut Io<'_>) -> CmdResult {
    match cmd {
        Command::Validate { file } => cmd_validate(&file, opts, io),
        Command::Distances { file, out } => cmd_distances(&load(&file, opts)?, out, io),
        Command::Twin {
            file,
            witnesses,
            dot,
            out,
        } => cmd_twin(&load(&file, opts)?, witnesses, dot.as_deref(), out, io),
        Command::Predictability { file, format } => cmd_predictability(&load(&file, opts)?, format, io),
        Command::Query {
            file,
            i,
            j,
            witness,
            out,
        } => cmd_query(&load(&file, opts)?, i, j, witness, out, io),
        Command::Predict { file } => cmd_predict(&load(&file, opts)?, io),
        Command::Compile {
            file,
            cap,
            dot,
            json,
        } => cmd_compile(&load(&file, opts)?, cap, dot.as_deref(), json.as_deref(), io),
        Command::Gen { which, n, out } => cmd_gen(which, n, out.as_deref(), io),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::from)
}

fn load(path: &Path, opts: LoadOptions) -> Result<DesModel, Failure> {
    let text = read(path)?;
    load_model(&text, opts)
        .map_err(|e| Failure::from(anyhow!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::from)
}

fn print_json(io: &mut Io<'_>, v: &Value) -> Result<(), Failure> {
    writeln!(io.out, "{}", serde_json::to_string_pretty(v).expect("json values serialize"))?;
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "MATCH"
    } else {
        "MISMATCH"
    }
}

fn event_names(m: &DesModel, evs: &[EventId]) -> Vec<String> {
    evs.iter().map(|&e| m.event_name(e).to_string()).collect()
}

fn interval_json(iv: TimeInterval) -> Value {
    iv.to_json()
}

fn cmd_validate(path: &Path, opts: LoadOptions, io: &mut Io<'_>) -> CmdResult {
    let text = read(path)?;
    let mut m = parse_model_unchecked(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if opts.close_faults {
        m = fault_closure(&m).map_err(anyhow::Error::from)?;
    }
    let report = validate(&m);
    write!(io.out, "{report}")?;
    Ok(if report.has_errors() { EXIT_ERROR } else { EXIT_OK })
}

fn cmd_distances(m: &DesModel, out: OutputArgs, io: &mut Io<'_>) -> CmdResult {
    let d = DistanceTable::compute(m);
    let reference = out
        .oracle
        .then(|| (oracle::oracle_dmin(m), oracle::oracle_dmax(m)));
    let matched = reference
        .as_ref()
        .map(|(lo, hi)| lo.as_slice() == d.dmin_table() && hi.as_slice() == d.dmax_table());

    match out.format {
        Format::Json => {
            let states: Vec<Value> = m
                .states()
                .map(|q| {
                    let mut row = json!({
                        "name": m.state_name(q),
                        "dmin": d.dmin(q).to_json(),
                        "dmax": d.dmax(q).to_json(),
                    });
                    if let Some((lo, hi)) = &reference {
                        row["oracle_dmin"] = lo[q.index()].to_json();
                        row["oracle_dmax"] = hi[q.index()].to_json();
                    }
                    row
                })
                .collect();
            let mut v = json!({ "states": states });
            if let Some(ok) = matched {
                v["verdict"] = json!(verdict(ok));
            }
            print_json(io, &v)?;
        }
        Format::Tsv => {
            let extra = if reference.is_some() { "\toracle_dmin\toracle_dmax" } else { "" };
            writeln!(io.out, "state\tdmin\tdmax{extra}")?;
            for q in m.states() {
                write!(io.out, "{}\t{}\t{}", m.state_name(q), d.dmin(q), d.dmax(q))?;
                if let Some((lo, hi)) = &reference {
                    write!(io.out, "\t{}\t{}", lo[q.index()], hi[q.index()])?;
                }
                writeln!(io.out)?;
            }
            if let Some(ok) = matched {
                writeln!(io.out, "{}", verdict(ok))?;
            }
        }
    }
    Ok(if matched == Some(false) { EXIT_ERROR } else { EXIT_OK })
}

fn cmd_twin(
    m: &DesModel,
    witnesses: bool,
    dot: Option<&Path>,
    out: OutputArgs,
    io: &mut Io<'_>,
) -> CmdResult {
    let t = build_twin_with(
        m,
        TwinOptions {
            record_parents: witnesses,
            record_edges: dot.is_some(),
            force_generic: false,
        },
    );
    if let Some(path) = dot {
        write_file(path, &twin_to_dot(m, &DistanceTable::compute(m), &t))?;
    }
    let matched = if out.oracle {
        let reference = oracle::oracle_pairs(m, oracle::OracleConfig::default().belief_cap)
            .map_err(anyhow::Error::from)?;
        let main: BTreeSet<_> = t.pairs().iter().copied().collect();
        Some((reference.len(), main == reference))
    } else {
        None
    };
    let witness_of = |p: &crate::twin::StatePair| {
        t.witness_observations(m, p.0, p.1)
            .map(|w| event_names(m, &w))
            .expect("parents were recorded")
    };

    match out.format {
        Format::Json => {
            let pairs: Vec<Value> = t
                .pairs()
                .iter()
                .map(|p| {
                    let (a, b) = pair_names(m, *p);
                    let mut row = json!({ "pair": [a, b] });
                    if witnesses {
                        row["witness"] = json!(witness_of(p));
                    }
                    row
                })
                .collect();
            let mut v = json!({
                "count": t.len(),
                "ordered_count": t.ordered_len(),
                "pairs": pairs,
            });
            if let Some((n, ok)) = matched {
                v["oracle_count"] = json!(n);
                v["verdict"] = json!(verdict(ok));
            }
            print_json(io, &v)?;
        }
        Format::Tsv => {
            writeln!(io.out, "# pairs {} ordered {}", t.len(), t.ordered_len())?;
            for p in t.pairs() {
                let (a, b) = pair_names(m, *p);
                if witnesses {
                    let w = witness_of(p);
                    let w = if w.is_empty() { "-".to_string() } else { w.join(" ") };
                    writeln!(io.out, "{a}\t{b}\t{w}")?;
                } else {
                    writeln!(io.out, "{a}\t{b}")?;
                }
            }
            if let Some((n, ok)) = matched {
                writeln!(io.out, "# oracle pairs {n}")?;
                writeln!(io.out, "{}", verdict(ok))?;
            }
        }
    }
    Ok(if matched.is_some_and(|(_, ok)| !ok) { EXIT_ERROR } else { EXIT_OK })
}

fn frontier_of(m: &DesModel) -> PredictabilityFrontier {
    crate::frontier::analyze(m).2
}

fn cmd_predictability(m: &DesModel, format: Format, io: &mut Io<'_>) -> CmdResult {
    let f = frontier_of(m);
    match format {
        Format::Json => {
            let rows: Vec<Value> = f
                .rows()
                .map(|(i, p)| json!({ "i": i, "p": p.to_json() }))
                .collect();
            print_json(
                io,
                &json!({
                    "dmin_init": f.dmin_init().to_json(),
                    "vacuous": f.is_vacuous(),
                    "rows": rows,
                }),
            )?;
        }
        Format::Tsv => {
            writeln!(io.out, "dmin_init\t{}", f.dmin_init())?;
            writeln!(io.out, "vacuous\t{}", f.is_vacuous())?;
            for (i, p) in f.rows() {
                writeln!(io.out, "{i} -> {p}")?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn blocking_json(m: &DesModel, h: &PairHull) -> Value {
    let (a, b) = pair_names(m, h.pair);
    let mut v = json!({ "pair": [a, b], "hull": interval_json(h.interval) });
    if let Some(w) = &h.witness {
        v["witness"] = json!(event_names(m, w));
    }
    v
}

fn cmd_query(
    m: &DesModel,
    i: u32,
    j: ExtNat,
    witness: bool,
    out: OutputArgs,
    io: &mut Io<'_>,
) -> CmdResult {
    let f = frontier_of(m);
    let v = f.is_ij_predictable(i, j).map_err(anyhow::Error::from)?;
    let reference = if out.oracle {
        let cap = oracle::OracleConfig::default().belief_cap;
        Some(oracle::oracle_is_ij_predictable(m, i, j, cap).map_err(anyhow::Error::from)?)
    } else {
        None
    };

    match out.format {
        Format::Json => {
            let mut doc = json!({ "predictable": v.predictable });
            if let Some(h) = &v.blocking {
                doc["blocking"] = blocking_json(m, h);
            }
            if let Some(r) = reference {
                doc["oracle_predictable"] = json!(r);
                doc["verdict"] = json!(verdict(r == v.predictable));
            }
            print_json(io, &doc)?;
        }
        Format::Tsv => {
            let word = if v.predictable { "predictable" } else { "not predictable" };
            writeln!(io.out, "({i},{j}) {word}")?;
            if witness && !v.predictable {
                match &v.blocking {
                    Some(h) => {
                        let (a, b) = pair_names(m, h.pair);
                        writeln!(io.out, "blocking pair {a} {b}")?;
                        writeln!(io.out, "hull {}", h.interval)?;
                        let w = h.witness.as_deref().map(|w| event_names(m, w)).unwrap_or_default();
                        let w = if w.is_empty() { "-".to_string() } else { w.join(" ") };
                        writeln!(io.out, "witness {w}")?;
                    }
                    None => writeln!(io.out, "i exceeds dmin(init) = {}", f.dmin_init())?,
                }
            }
            if let Some(r) = reference {
                let word = if r { "predictable" } else { "not predictable" };
                writeln!(io.out, "oracle {word}")?;
                writeln!(io.out, "{}", verdict(r == v.predictable))?;
            }
        }
    }
    if reference.is_some_and(|r| r != v.predictable) {
        return Ok(EXIT_ERROR);
    }
    Ok(if v.predictable { EXIT_OK } else { EXIT_NO })
}

fn cmd_predict(m: &DesModel, io: &mut Io<'_>) -> CmdResult {
    let d = DistanceTable::compute(m);
    let mut session = PredictorSession::new(m, &d);
    let mut line = String::new();
    loop {
        line.clear();
        if io.stdin.read_line(&mut line)? == 0 {
            return Ok(EXIT_OK);
        }
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        match session.observe_name(name) {
            Ok(iv) => {
                writeln!(io.out, "{} {}", iv.lo(), iv.hi())?;
                io.out.flush()?;
            }
            Err(e @ PredictError::ImpossibleObservation(_)) => {
                return Err(Failure {
                    code: EXIT_NO,
                    error: anyhow!("after {} observations: {e}", session.consumed()),
                });
            }
            Err(e) => return Err(anyhow::Error::from(e).into()),
        }
    }
}

fn automaton_json(m: &DesModel, a: &BeliefAutomaton) -> Value {
    let nodes: Vec<Value> = a
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let states: Vec<&str> = b.members().iter().map(|&q| m.state_name(q)).collect();
            json!({ "id": i, "states": states, "interval": interval_json(b.interval()) })
        })
        .collect();
    let edges: Vec<Value> = (0..a.nodes().len())
        .flat_map(|i| {
            a.edges(i)
                .iter()
                .map(move |&(e, j)| json!({ "from": i, "event": m.event_name(e), "to": j }))
        })
        .collect();
    json!({ "initial": a.initial(), "nodes": nodes, "edges": edges })
}

fn cmd_compile(
    m: &DesModel,
    cap: usize,
    dot: Option<&Path>,
    json_out: Option<&Path>,
    io: &mut Io<'_>,
) -> CmdResult {
    if cap == 0 {
        return Err(Failure {
            code: EXIT_USAGE,
            error: anyhow!("--cap must be positive"),
        });
    }
    let d = DistanceTable::compute(m);
    let a = compile_predictor(m, &d, cap).map_err(anyhow::Error::from)?;
    if let Some(path) = dot {
        write_file(path, &automaton_to_dot(m, &a))?;
    }
    let doc = automaton_json(m, &a);
    match json_out {
        Some(path) => {
            write_file(path, &serde_json::to_string_pretty(&doc).expect("json values serialize"))?;
            writeln!(io.out, "nodes {} edges {}", a.nodes().len(), a.edge_count())?;
        }
        None => print_json(io, &doc)?,
    }
    Ok(EXIT_OK)
}

fn cmd_gen(which: Generator, n: Option<usize>, out: Option<&Path>, io: &mut Io<'_>) -> CmdResult {
    let text = match which {
        Generator::Fig1 => fixtures::FIG1_TEXT.to_string(),
        Generator::Fig2a => fixtures::FIG2A_TEXT.to_string(),
        Generator::Fig2b => fixtures::FIG2B_TEXT.to_string(),
        Generator::Fig3a => match n {
            Some(n) if n >= 1 => serialize_model(&fixtures::fig3a(n)),
            _ => {
                return Err(Failure {
                    code: EXIT_USAGE,
                    error: anyhow!("fig3a needs -n N with N >= 1"),
                })
            }
        },
    };
    match out {
        Some(path) => write_file(path, &text)?,
        None => write!(io.out, "{text}")?,
    }
    Ok(EXIT_OK)
}
