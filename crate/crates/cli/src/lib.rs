//! The `asyncbasin` command line tool.
//!
//! Every command prints human-readable lines, or with `--json` one JSON object
//! per line whose `record` field names its kind. Exit codes: 0 success,
//! 1 negative answer (failed check, not invariant, no witness found), 2 usage
//! or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use asyncbasin::basins::{self, Inclusion};
use asyncbasin::graph;
use asyncbasin::io::{self, ParseError};
use asyncbasin::oracle::{self, OracleBounds, VerifyConfig};
use asyncbasin::schedule::{omega_limit, orbit_trace};
use asyncbasin::{Mode, Network, Schedule, State, StateSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "asyncbasin", version, about = "Basins of attraction of asynchronous Boolean networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// DOT state portrait: unstable coordinates underlined, one edge per fire set.
    Portrait(Common),
    /// States with Φ(μ) = μ.
    FixedPoints(Common),
    /// Terminal strongly connected sets of the transition graph, with their attractivity.
    Attractors(Common),
    /// ω-limit set of the flow from --from under --schedule.
    Omega(FlowCmd),
    /// Orbit, ω-limit set and timed trace of one flow.
    Orbit(FlowCmd),
    /// Basin of p- or n-attraction of --set.
    Basin(SetCmd),
    /// States whose flows eventually coincide with the given flow.
    OrbitBasin(FlowModeCmd),
    /// States whose ω-limit set equals that of the given flow.
    OmegaBasin(FlowModeCmd),
    /// Whether --set is p- or n-invariant.
    Invariant(SetCmd),
    /// Runs the theorem checks against the brute-force oracle.
    Verify(VerifyCmd),
    /// Brute-force ω-limit sets over bounded integer-time schedules.
    Oracle(OracleCmd),
    /// Searches for (μ, ρ) where an n-basin inclusion is strict.
    SearchWitness(SearchCmd),
}

#[derive(Args, Debug)]
struct Output {
    /// Line-delimited JSON records instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write results to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum NetFormat {
    Table,
    Expr,
}

#[derive(Args, Debug)]
struct NetArg {
    /// Network file.
    #[arg(long, value_name = "FILE")]
    net: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: NetFormat,
}

#[derive(Args, Debug)]
struct Common {
    #[command(flatten)]
    net: NetArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FlowArg {
    /// Initial state, e.g. 00.
    #[arg(long, value_name = "BITS")]
    from: String,
    /// Schedule literal or a file holding one.
    #[arg(long, value_name = "LIT|FILE")]
    schedule: String,
}

#[derive(Args, Debug)]
struct FlowCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flow: FlowArg,
}

#[derive(Args, Debug)]
struct FlowModeCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flow: FlowArg,
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
}

#[derive(Args, Debug)]
struct SetCmd {
    #[command(flatten)]
    common: Common,
    /// State set literal, e.g. 00,10.
    #[arg(long, value_name = "LIT")]
    set: String,
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
}

#[derive(Args, Debug)]
struct BoundsArg {
    #[arg(long, default_value_t = 4)]
    max_prefix: usize,
    #[arg(long, default_value_t = 4)]
    max_cycle: usize,
}

#[derive(Args, Debug)]
struct VerifyCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    bounds: BoundsArg,
    /// Skip the oracle; only graph-side checks.
    #[arg(long)]
    graph_only: bool,
}

#[derive(Args, Debug)]
struct OracleCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    bounds: BoundsArg,
    /// Only this initial state.
    #[arg(long, value_name = "BITS")]
    from: Option<String>,
    /// Also report the oracle basin of this set (needs --mode).
    #[arg(long, value_name = "LIT", requires = "mode")]
    set: Option<String>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Grow the bounds until the answer settles, up to this cycle length.
    #[arg(long, value_name = "LEN")]
    grow: Option<usize>,
}

#[derive(Args, Debug)]
struct SearchCmd {
    /// Network to search; omit with --all-nets.
    #[arg(long, value_name = "FILE", required_unless_present = "all_nets")]
    net: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: NetFormat,
    /// Search every network of this dimension (1 or 2) in table order.
    #[arg(long, value_name = "N", conflicts_with = "net")]
    all_nets: Option<usize>,
    #[arg(long, value_parser = parse_inclusion)]
    inclusion: Inclusion,
    /// Candidate schedules: every canonical schedule within these bounds.
    #[arg(long, default_value_t = 1)]
    max_prefix: usize,
    #[arg(long, default_value_t = 2)]
    max_cycle: usize,
    #[command(flatten)]
    output: Output,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_inclusion(s: &str) -> Result<Inclusion, String> {
    s.parse()
}

/// Anything that ends the command with exit code 2.
#[derive(Debug)]
struct Failure(String);

impl From<asyncbasin::Error> for Failure {
    fn from(e: asyncbasin::Error) -> Self {
        Failure(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

/// One result line in both renderings.
struct Record {
    text: String,
    json: Value,
}

struct Outcome {
    records: Vec<Record>,
    negative: bool,
}

impl Outcome {
    fn ok(records: Vec<Record>) -> Self {
        Outcome { records, negative: false }
    }
}

fn read_file(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn located(path: &Path, e: ParseError) -> Failure {
    Failure(format!("{}: {e}", path.display()))
}

fn load_net(path: &Path, format: NetFormat) -> Res<Network> {
    let text = read_file(path)?;
    match format {
        NetFormat::Table => io::parse_network_table(&text),
        NetFormat::Expr => io::parse_network_exprs(&text),
    }
    .map_err(|e| located(path, e))
}

fn parse_state(s: &str, net: &Network) -> Res<State> {
    let mu: State = s.parse().map_err(|e| Failure(format!("--from: {e}")))?;
    if mu.dim() != net.dim() {
        return Err(Failure(format!("--from: state {mu} has {} coordinates, the network has {}", mu.dim(), net.dim())));
    }
    Ok(mu)
}

fn parse_set(s: &str, net: &Network) -> Res<StateSet> {
    let a = io::parse_state_set(s).map_err(|e| Failure(format!("--set: {e}")))?;
    if a.dim() != net.dim() {
        return Err(Failure(format!("--set: states have {} coordinates, the network has {}", a.dim(), net.dim())));
    }
    Ok(a)
}

/// A literal, or a file whose non-comment lines are joined with spaces.
fn load_schedule(arg: &str) -> Res<Schedule> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = read_file(path)?;
        let joined: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        io::parse_schedule(&joined.join(" ")).map_err(|e| located(path, e))
    } else {
        io::parse_schedule(arg).map_err(|e| Failure(format!("--schedule: {e}")))
    }
}

fn set_text(s: &StateSet) -> String {
    if s.is_empty() {
        "{}".into()
    } else {
        s.to_string()
    }
}

fn witnesses_json(r: &basins::BasinResult) -> Value {
    r.witnesses.iter().map(|(m, rho)| (m.to_string(), Value::String(rho.to_string()))).collect()
}

fn basin_record(kind: &str, mode: Mode, r: &basins::BasinResult, extra: Value) -> Record {
    let mut j = json!({
        "record": kind,
        "mode": mode,
        "members": r.members,
    });
    let obj = j.as_object_mut().expect("object literal");
    if let Value::Object(more) = extra {
        obj.extend(more);
    }
    if mode == Mode::P {
        obj.insert("witnesses".into(), witnesses_json(r));
    }
    Record { text: set_text(&r.members), json: j }
}

fn portrait(c: &Common) -> Res<Outcome> {
    let net = load_net(&c.net.net, c.net.format)?;
    let dot = io::export_dot(&net)?;
    Ok(Outcome::ok(vec![Record {
        text: dot.trim_end().to_string(),
        json: json!({ "record": "portrait", "dot": dot }),
    }]))
}

fn fixed_points(c: &Common) -> Res<Outcome> {
    let net = load_net(&c.net.net, c.net.format)?;
    let fp = net.fixed_points();
    Ok(Outcome::ok(vec![Record { text: set_text(&fp), json: json!({ "record": "fixed_points", "states": fp }) }]))
}

fn attractors(c: &Common) -> Res<Outcome> {
    let net = load_net(&c.net.net, c.net.format)?;
    let full = StateSet::full(net.dim());
    let mut records = Vec::new();
    for comp in graph::fair_sccs(&net, &full)? {
        let first = comp.first().expect("components are nonempty");
        if graph::reachable_set(&net, first)? != comp {
            continue;
        }
        let class = basins::attractivity_class(&net, &comp)?;
        let bp = basins::basin_p(&net, &comp)?.members;
        let bn = basins::basin_n(&net, &comp)?.members;
        records.push(Record {
            text: format!("{{{comp}}} p={} n={}", class.p_class, class.n_class),
            json: json!({
                "record": "attractor",
                "set": comp,
                "p_class": class.p_class,
                "n_class": class.n_class,
                "basin_p": bp,
                "basin_n": bn,
            }),
        });
    }
    Ok(Outcome::ok(records))
}

fn omega(f: &FlowCmd) -> Res<Outcome> {
    let net = load_net(&f.common.net.net, f.common.net.format)?;
    let mu = parse_state(&f.flow.from, &net)?;
    let rho = load_schedule(&f.flow.schedule)?;
    let w = omega_limit(&net, mu, &rho)?;
    Ok(Outcome::ok(vec![Record {
        text: set_text(&w),
        json: json!({ "record": "omega", "from": mu, "schedule": rho, "omega": w }),
    }]))
}

fn orbit(f: &FlowCmd) -> Res<Outcome> {
    let net = load_net(&f.common.net.net, f.common.net.format)?;
    let mu = parse_state(&f.flow.from, &net)?;
    let rho = load_schedule(&f.flow.schedule)?;
    let (trace, orbit) = orbit_trace(&net, mu, &rho)?;
    let w = trace.tail_set();
    let changes: Vec<Value> =
        trace.changes.iter().map(|(t, s)| json!({ "time": t.to_string(), "state": s })).collect();
    let change_text: Vec<String> = trace.changes.iter().map(|(t, s)| format!("{t}:{s}")).collect();
    let text = format!(
        "orbit {}\nomega {}\nchanges {}\ntail entry {} period {}",
        set_text(&orbit),
        set_text(&w),
        if change_text.is_empty() { "none".to_string() } else { change_text.join(" ") },
        trace.tail.entry_time,
        trace.tail.period,
    );
    Ok(Outcome::ok(vec![Record {
        text,
        json: json!({
            "record": "orbit",
            "from": mu,
            "schedule": rho,
            "orbit": orbit,
            "omega": w,
            "changes": changes,
            "tail_entry_time": trace.tail.entry_time.to_string(),
            "tail_period": trace.tail.period.to_string(),
        }),
    }]))
}

fn basin(s: &SetCmd) -> Res<Outcome> {
    let net = load_net(&s.common.net.net, s.common.net.format)?;
    let a = parse_set(&s.set, &net)?;
    let r = match s.mode {
        Mode::P => basins::basin_p(&net, &a)?,
        Mode::N => basins::basin_n(&net, &a)?,
    };
    Ok(Outcome::ok(vec![basin_record("basin", s.mode, &r, json!({ "set": a }))]))
}

fn flow_basin(f: &FlowModeCmd, omega_kind: bool) -> Res<Outcome> {
    let net = load_net(&f.common.net.net, f.common.net.format)?;
    let mu = parse_state(&f.flow.from, &net)?;
    let rho = load_schedule(&f.flow.schedule)?;
    let r = match (omega_kind, f.mode) {
        (false, Mode::P) => basins::orbit_basin_p(&net, mu, &rho)?,
        (false, Mode::N) => basins::orbit_basin_n(&net, mu, &rho)?,
        (true, Mode::P) => basins::omega_basin_p(&net, mu, &rho)?,
        (true, Mode::N) => basins::omega_basin_n(&net, mu, &rho)?,
    };
    let kind = if omega_kind { "omega_basin" } else { "orbit_basin" };
    Ok(Outcome::ok(vec![basin_record(kind, f.mode, &r, json!({ "from": mu, "schedule": rho }))]))
}

fn invariant(s: &SetCmd) -> Res<Outcome> {
    let net = load_net(&s.common.net.net, s.common.net.format)?;
    let a = parse_set(&s.set, &net)?;
    let holds = match s.mode {
        Mode::P => graph::is_p_invariant(&net, &a)?,
        Mode::N => graph::is_n_invariant(&net, &a)?,
    };
    let text = format!("{{{a}}} is {}{}-invariant", if holds { "" } else { "not " }, s.mode);
    Ok(Outcome {
        records: vec![Record {
            text,
            json: json!({ "record": "invariant", "mode": s.mode, "set": a, "invariant": holds }),
        }],
        negative: !holds,
    })
}

fn verify(v: &VerifyCmd) -> Res<Outcome> {
    let net = load_net(&v.common.net.net, v.common.net.format)?;
    let bounds = OracleBounds::new(v.bounds.max_prefix, v.bounds.max_cycle);
    let report = if v.graph_only {
        oracle::verify_theorems_with(&net, &VerifyConfig::graph_only(net.dim()))?
    } else {
        oracle::verify_theorems(&net, &bounds)?
    };
    let mut records = Vec::new();
    for (check, tally) in &report.tallies {
        records.push(Record {
            text: format!("{check:<34} passed {:>7} failed {}", tally.passed, tally.failed),
            json: json!({ "record": "check", "check": check, "passed": tally.passed, "failed": tally.failed }),
        });
    }
    for cx in &report.counterexamples {
        let mut text = format!("counterexample {}: {}", cx.check, cx.detail);
        if let Some(mu) = cx.mu {
            text.push_str(&format!(" [from {mu}]"));
        }
        if let Some(rho) = &cx.schedule {
            text.push_str(&format!(" [schedule {rho}]"));
        }
        let mut j = serde_json::Map::new();
        j.insert("record".into(), "counterexample".into());
        if let Value::Object(fields) = serde_json::to_value(cx).map_err(|e| Failure(e.to_string()))? {
            j.extend(fields);
        }
        records.push(Record { text, json: Value::Object(j) });
    }
    let passed = report.passed();
    records.push(Record {
        text: format!(
            "{}: {} evaluations, {} failures, oracle stabilized {}, certified {}, stabilization gaps {}",
            if passed { "PASS" } else { "FAIL" },
            report.evaluations(),
            report.failures(),
            report.oracle_stabilized,
            report.oracle_certified,
            report.stabilization_gaps,
        ),
        json: json!({
            "record": "verify",
            "passed": passed,
            "evaluations": report.evaluations(),
            "failures": report.failures(),
            "oracle_stabilized": report.oracle_stabilized,
            "oracle_certified": report.oracle_certified,
            "stabilization_gaps": report.stabilization_gaps,
        }),
    });
    Ok(Outcome { records, negative: !passed })
}

fn run_oracle(o: &OracleCmd) -> Res<Outcome> {
    let net = load_net(&o.common.net.net, o.common.net.format)?;
    let bounds = OracleBounds::new(o.bounds.max_prefix, o.bounds.max_cycle);
    let orc = match o.grow {
        Some(cap) => oracle::Oracle::grow_until_stable(&net, &bounds, cap)?,
        None => oracle::Oracle::new(&net, &bounds)?,
    };
    let used = orc.bounds();
    let states: Vec<State> = match &o.from {
        Some(s) => vec![parse_state(s, &net)?],
        None => net.states().collect(),
    };
    let mut records = Vec::new();
    for mu in states {
        let r = orc.achievable(mu)?;
        let graph_side = graph::achievable_omegas_from(&net, mu)?;
        let family: Vec<String> = r.omegas.iter().map(|w| format!("{{{w}}}")).collect();
        records.push(Record {
            text: format!(
                "{mu}: {} [stabilized {}, certified {}, matches graph {}]",
                family.join(" "),
                r.stabilized,
                r.certified,
                r.omegas == graph_side
            ),
            json: json!({
                "record": "oracle_omegas",
                "from": mu,
                "max_prefix": used.max_prefix_len,
                "max_cycle": used.max_cycle_len,
                "omegas": r.omegas,
                "stabilized": r.stabilized,
                "certified": r.certified,
                "matches_graph": r.omegas == graph_side,
            }),
        });
    }
    if let (Some(s), Some(mode)) = (&o.set, o.mode) {
        let a = parse_set(s, &net)?;
        let b = orc.basin(&a, mode)?;
        records.push(Record {
            text: format!("basin_{mode} {} [stabilized {}]", set_text(&b.members), b.stabilized),
            json: json!({
                "record": "oracle_basin",
                "mode": mode,
                "set": a,
                "members": b.members,
                "stabilized": b.stabilized,
            }),
        });
    }
    Ok(Outcome::ok(records))
}

fn search_witness(s: &SearchCmd) -> Res<Outcome> {
    let nets: Box<dyn Iterator<Item = Res<Network>>> = match (&s.net, s.all_nets) {
        (Some(path), _) => Box::new(std::iter::once(load_net(path, s.format))),
        (None, Some(n @ 1..=2)) => {
            let size = 1usize << n;
            let count = 1u64 << (n * size);
            Box::new((0..count).map(move |code| {
                let table = (0..size).map(|k| ((code >> (n * k)) & ((1 << n) - 1)) as u32).collect();
                Network::new(n, table).map_err(Failure::from)
            }))
        }
        (None, Some(n)) => return Err(Failure(format!("--all-nets supports dimension 1 or 2, got {n}"))),
        (None, None) => unreachable!("clap requires one of --net and --all-nets"),
    };
    let bounds = OracleBounds::new(s.max_prefix, s.max_cycle);
    let mut schedules_by_dim: Vec<Option<Vec<Schedule>>> = vec![None; 33];
    for net in nets {
        let net = net?;
        let slot = &mut schedules_by_dim[net.dim()];
        if slot.is_none() {
            *slot = Some(oracle::enumerate_schedules(net.dim(), &bounds)?.collect());
        }
        let schedules = slot.as_deref().expect("filled above");
        if let Some(w) = basins::find_strict_inclusion(&net, s.inclusion, schedules)? {
            let rows: Vec<String> =
                net.table().iter().map(|&r| State::new(net.dim(), r).expect("valid row").to_string()).collect();
            let text = format!(
                "table {} from {} schedule {}: inner {} outer {}",
                rows.join(","),
                w.mu,
                w.schedule,
                set_text(&w.inner),
                set_text(&w.outer)
            );
            return Ok(Outcome::ok(vec![Record {
                text,
                json: json!({
                    "record": "inclusion_witness",
                    "inclusion": w.inclusion,
                    "table": rows,
                    "from": w.mu,
                    "schedule": w.schedule,
                    "inner": w.inner,
                    "outer": w.outer,
                }),
            }]));
        }
    }
    Ok(Outcome {
        records: vec![Record {
            text: "no strict inclusion found".into(),
            json: json!({ "record": "inclusion_witness", "inclusion": s.inclusion, "found": false }),
        }],
        negative: true,
    })
}

fn output_of(cmd: &Command) -> &Output {
    match cmd {
        Command::Portrait(c) | Command::FixedPoints(c) | Command::Attractors(c) => &c.output,
        Command::Omega(f) | Command::Orbit(f) => &f.common.output,
        Command::Basin(s) | Command::Invariant(s) => &s.common.output,
        Command::OrbitBasin(f) | Command::OmegaBasin(f) => &f.common.output,
        Command::Verify(v) => &v.common.output,
        Command::Oracle(o) => &o.common.output,
        Command::SearchWitness(s) => &s.output,
    }
}

fn dispatch(cmd: &Command) -> Res<Outcome> {
    match cmd {
        Command::Portrait(c) => portrait(c),
        Command::FixedPoints(c) => fixed_points(c),
        Command::Attractors(c) => attractors(c),
        Command::Omega(f) => omega(f),
        Command::Orbit(f) => orbit(f),
        Command::Basin(s) => basin(s),
        Command::OrbitBasin(f) => flow_basin(f, false),
        Command::OmegaBasin(f) => flow_basin(f, true),
        Command::Invariant(s) => invariant(s),
        Command::Verify(v) => verify(v),
        Command::Oracle(o) => run_oracle(o),
        Command::SearchWitness(s) => search_witness(s),
    }
}

/// Runs one invocation; `args` includes the program name. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let outcome = match dispatch(&cli.command) {
        Ok(o) => o,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let opts = output_of(&cli.command);
    let mut text = String::new();
    for r in &outcome.records {
        if opts.json {
            text.push_str(&r.json.to_string());
        } else {
            text.push_str(&r.text);
        }
        text.push('\n');
    }
    let written = match &opts.out {
        Some(path) => fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(err, "error: {msg}");
        return 2;
    }
    if outcome.negative {
        1
    } else {
        0
    }
}
