//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs without the libtest harness so the lines always show.
//!
//! Boolean results are compared by exact set equality; the only tolerances
//! are the wall-clock limits below.

use std::time::{Duration, Instant};

use asyncbasin::basins::{self, Attractivity, Inclusion, InclusionInstance};
use asyncbasin::graph;
use asyncbasin::io;
use asyncbasin::oracle::{
    enumerate_schedules, random_schedule, verify_theorems_with, Check, Oracle, OracleBounds, ScheduleSource,
    VerificationReport, VerifyConfig,
};
use asyncbasin::schedule::omega_limit;
use asyncbasin::{Mode, Network, Schedule, State, StateSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LIMIT_1: Duration = Duration::from_secs(1);
const LIMIT_2: Duration = Duration::from_secs(1);
const LIMIT_3: Duration = Duration::from_secs(5);
const LIMIT_4: Duration = Duration::from_secs(30);
const LIMIT_5: Duration = Duration::from_secs(300);
const LIMIT_6: Duration = Duration::from_secs(300);
const LIMIT_7: Duration = Duration::from_secs(120);

/// Oracle bounds and instance bounds for the theorem suite.
const N2_ORACLE: (usize, usize) = (4, 4);
const N2_INSTANCES: (usize, usize) = (2, 3);
const N3_ORACLE: (usize, usize) = (3, 4);
const N3_INSTANCES: (usize, usize) = (1, 2);
/// Largest cycle length the oracle may grow to while settling.
const ORACLE_GROWTH_CAP: usize = 12;
const N3_VERIFY_NETS: usize = 500;
const N4_VERIFY_NETS: usize = 100;
const N3_ORACLE_NETS: usize = 50;
/// Largest equal prefix and cycle bound tried by the word-search-only oracle.
const WORD_SEARCH_CAP: usize = 6;
/// Candidate schedules for the strict-inclusion search.
const SEARCH_BOUNDS: (usize, usize) = (1, 2);

/// First strict instance of each inclusion in search order (network code
/// ascending, then μ, then enumerated schedule), followed by the first one
/// whose smaller basin is nonempty when there is one. For ω there never is:
/// W̲[ω] is nonempty only when ω has no proper fair subset, and then every
/// member of W̲(ω) can only settle on ω itself, so the two basins coincide.
struct Fixture {
    inclusion: Inclusion,
    table: [&'static str; 4],
    mu: &'static str,
    schedule: &'static str,
    inner: &'static str,
    outer: &'static str,
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        inclusion: Inclusion::Orbit,
        table: ["01", "00", "00", "00"],
        mu: "00",
        schedule: "cycle 0:11 ; period 1 ; start 0",
        inner: "",
        outer: "00,01,10,11",
    },
    Fixture {
        inclusion: Inclusion::Orbit,
        table: ["11", "01", "00", "00"],
        mu: "00",
        schedule: "prefix 0:11 ; cycle 0:01 1:10 ; period 2 ; start 1",
        inner: "01",
        outer: "00,01,10,11",
    },
    Fixture {
        inclusion: Inclusion::Omega,
        table: ["01", "10", "00", "00"],
        mu: "00",
        schedule: "cycle 0:01 1:10 ; period 2 ; start 0",
        inner: "",
        outer: "00,01,10,11",
    },
];

const NET1_TABLE: &str = "n=2\n00 -> 11\n01 -> 11\n10 -> 10\n11 -> 01\n";

const NET1_DOT: &str = "digraph portrait {
  node [shape=plaintext];
  \"00\" [label=<<U>0</U><U>0</U>>];
  \"01\" [label=<<U>0</U>1>];
  \"10\" [label=<10>];
  \"11\" [label=<<U>1</U>1>];
  \"00\" -> \"01\" [label=\"01\"];
  \"00\" -> \"10\" [label=\"10\"];
  \"00\" -> \"11\" [label=\"11\"];
  \"01\" -> \"11\" [label=\"10\"];
  \"11\" -> \"01\" [label=\"10\"];
}
";

type Outcome = Result<String, String>;

/// Witness replays gathered by criteria 3 to 7 for criterion 8.
#[derive(Default)]
struct Replays {
    attempted: u64,
    failed: Vec<String>,
}

impl Replays {
    fn basin(&mut self, net: &Network, r: &basins::BasinResult, what: &str) {
        self.attempted += r.members.len() as u64;
        for m in r.failed_witnesses(net).expect("replay runs") {
            self.failed.push(format!("{what}: member {m}"));
        }
    }

    fn omega(&mut self, net: &Network, from: State, rho: &Schedule, t: &StateSet) {
        self.attempted += 1;
        if omega_limit(net, from, rho).expect("valid witness") != *t {
            self.failed.push(format!("ω witness from {from} for {{{t}}} under {rho}"));
        }
    }

    fn tally(&mut self, report: &VerificationReport) {
        for check in [Check::OrbitWitnessReplay, Check::BasinWitnessReplay, Check::AchievableWitness] {
            if let Some(t) = report.tallies.get(&check) {
                self.attempted += t.passed + t.failed;
                if t.failed > 0 {
                    self.failed.push(format!("{check}: {} failed", t.failed));
                }
            }
        }
    }
}

fn st(s: &str) -> State {
    s.parse().unwrap()
}

fn set(text: &str) -> StateSet {
    io::parse_state_set(text).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn net1() -> Network {
    io::parse_network_table(NET1_TABLE).unwrap()
}

fn all_nets2() -> impl Iterator<Item = Network> {
    (0u32..256).map(|code| Network::new(2, (0..4).map(|k| code >> (2 * k) & 3).collect()).unwrap())
}

fn random_nets(dim: usize, count: usize, seed: u64) -> Vec<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Network::new(dim, (0..1u32 << dim).map(|_| rng.gen_range(0..1u32 << dim)).collect()).unwrap())
        .collect()
}

fn bounds(b: (usize, usize)) -> OracleBounds {
    OracleBounds::new(b.0, b.1)
}

fn criterion_1() -> Outcome {
    let net = net1();
    ensure(net.fixed_points() == set("10"), || format!("fixed points {}", net.fixed_points()))?;
    let u = net.unstable_set(st("00")).unwrap();
    ensure(u.ones_indices() == vec![1, 2], || format!("unstable(00) = {u}"))?;
    let moves: Vec<_> = graph::successors(&net, st("00")).unwrap().into_iter().filter(|(_, t)| *t != st("00")).collect();
    ensure(moves.len() == 3, || format!("{} non-self edges from 00", moves.len()))?;
    Ok("fixed points {10}, unstable(00) = {1,2}, 3 arrows from 00".into())
}

fn criterion_2() -> Outcome {
    let net = Network::identity(2).unwrap();
    for mu in net.states() {
        let a = StateSet::singleton(mu);
        let bp = basins::basin_p(&net, &a).unwrap().members;
        let bn = basins::basin_n(&net, &a).unwrap().members;
        ensure(bp == a && bn == a, || format!("{mu}: p-basin {{{bp}}}, n-basin {{{bn}}}"))?;
        let class = basins::attractivity_class(&net, &a).unwrap();
        ensure(class.p_class == Attractivity::Partial && class.n_class == Attractivity::Partial, || {
            format!("{mu}: classified ({}, {})", class.p_class, class.n_class)
        })?;
    }
    Ok("every point basin is the point itself, classified (partial, partial)".into())
}

fn criterion_3(replays: &mut Replays) -> Outcome {
    let net = net1();
    let a = set("10");
    let bp = basins::basin_p(&net, &a).unwrap();
    let bn = basins::basin_n(&net, &a).unwrap();
    ensure(bp.members == set("00,10"), || format!("p-basin {}", bp.members))?;
    ensure(bn.members == set("10"), || format!("n-basin {}", bn.members))?;
    replays.basin(&net, &bp, "NET1 p-basin of {10}");

    let oracle = Oracle::grow_until_stable(&net, &OracleBounds::new(2, 2), ORACLE_GROWTH_CAP).unwrap();
    let op = oracle.basin(&a, Mode::P).unwrap();
    let on = oracle.basin(&a, Mode::N).unwrap();
    ensure(op.stabilized && on.stabilized, || "oracle did not stabilize".into())?;
    ensure(op.members == bp.members && on.members == bn.members, || {
        format!("oracle p-basin {{{}}}, n-basin {{{}}}", op.members, on.members)
    })?;
    let b = oracle.bounds();
    Ok(format!(
        "p-basin {{00,10}}, n-basin {{10}}; oracle at ({}, {}) agrees, certified {}",
        b.max_prefix_len,
        b.max_cycle_len,
        oracle.certified()
    ))
}

fn criterion_4(replays: &mut Replays) -> Outcome {
    let mut checked = 0;
    for net in all_nets2() {
        for mu in net.states() {
            let fixed = net.image(mu).unwrap() == mu;
            let a = StateSet::singleton(mu);
            let bp = basins::basin_p(&net, &a).unwrap();
            let bn = basins::basin_n(&net, &a).unwrap();
            ensure(!bp.members.is_empty() == fixed && !bn.members.is_empty() == fixed, || {
                format!("table {:?}, μ {mu}: fixed {fixed}, p-basin {{{}}}, n-basin {{{}}}", net.table(), bp.members, bn.members)
            })?;
            replays.basin(&net, &bp, "point p-basin");
            checked += 1;
        }
    }
    Ok(format!("{checked} (network, μ) pairs"))
}

fn verify_suite(nets: &[Network], cfg: &VerifyConfig, total: &mut VerificationReport) {
    for net in nets {
        total.merge(verify_theorems_with(net, cfg).unwrap());
    }
}

fn criterion_5(replays: &mut Replays) -> Outcome {
    let mut parts = Vec::new();
    let mut failures = Vec::new();

    let mut cfg2 = VerifyConfig::with_oracle(2, bounds(N2_ORACLE));
    cfg2.schedules[0] = ScheduleSource::Enumerate(bounds(N2_INSTANCES));
    let mut cfg3 = VerifyConfig::with_oracle(3, bounds(N3_ORACLE));
    cfg3.oracle_max_cycle_len = ORACLE_GROWTH_CAP;
    cfg3.schedules[0] = ScheduleSource::Enumerate(bounds(N3_INSTANCES));
    let cfg4 = VerifyConfig::graph_only(4);

    let suites: [(&str, Vec<Network>, VerifyConfig); 3] = [
        ("n=2", all_nets2().collect(), cfg2),
        ("n=3", random_nets(3, N3_VERIFY_NETS, 3), cfg3),
        ("n=4", random_nets(4, N4_VERIFY_NETS, 4), cfg4),
    ];
    for (label, nets, cfg) in &suites {
        let t = Instant::now();
        let mut report = VerificationReport::default();
        verify_suite(nets, cfg, &mut report);
        replays.tally(&report);
        let oracle = if cfg.oracle.is_some() {
            format!("oracle certified {}, gaps {}", report.oracle_certified, report.stabilization_gaps)
        } else {
            "graph-side only".to_string()
        };
        parts.push(format!(
            "{label}: {} nets, {} evaluations, {} failures, {oracle}, {:.1} s",
            report.networks,
            report.evaluations(),
            report.failures(),
            t.elapsed().as_secs_f64()
        ));
        for cx in report.counterexamples.iter().take(3) {
            failures.push(format!("{label} {}: {}", cx.check, cx.detail));
        }
        if report.failures() > 0 && report.counterexamples.is_empty() {
            failures.push(format!("{label}: {} failures", report.failures()));
        }
    }
    ensure(failures.is_empty(), || format!("{}; {}", parts.join("; "), failures.join("; ")))?;
    Ok(parts.join("; "))
}

fn oracle_matches_graph(net: &Network, start: OracleBounds, replays: &mut Replays) -> Result<bool, String> {
    let oracle = Oracle::grow_until_stable(net, &start, ORACLE_GROWTH_CAP).unwrap();
    ensure(oracle.stabilized(), || format!("table {:?}: oracle not stabilized at {:?}", net.table(), oracle.bounds()))?;
    for mu in net.states() {
        let found = &oracle.achievable(mu).unwrap().omegas;
        let achievable = graph::achievable_omegas_from(net, mu).unwrap();
        ensure(*found == achievable, || {
            let only_oracle: Vec<_> = found.difference(&achievable).map(|s| format!("{{{s}}}")).collect();
            let only_graph: Vec<_> = achievable.difference(found).map(|s| format!("{{{s}}}")).collect();
            format!("table {:?}, μ {mu}: oracle only {only_oracle:?}, graph only {only_graph:?}", net.table())
        })?;
        for t in &achievable {
            let rho = basins::witness_schedule(net, mu, t, None).unwrap();
            replays.omega(net, mu, &rho, t);
        }
    }
    Ok(oracle.certified())
}

/// The word-search oracle alone, bounds growing together until it is
/// certified complete.
fn word_search_matches_graph(net: &Network) -> Result<usize, String> {
    for k in 1..=WORD_SEARCH_CAP {
        let oracle = Oracle::word_search(net, &OracleBounds::new(k, k)).unwrap();
        if oracle.certified() {
            for mu in net.states() {
                let found = &oracle.achievable(mu).unwrap().omegas;
                ensure(*found == graph::achievable_omegas_from(net, mu).unwrap(), || {
                    format!("table {:?}, μ {mu}: word search disagrees at ({k}, {k})", net.table())
                })?;
            }
            return Ok(k);
        }
    }
    Err(format!("table {:?}: word search not complete at ({WORD_SEARCH_CAP}, {WORD_SEARCH_CAP})", net.table()))
}

fn criterion_6(replays: &mut Replays) -> Outcome {
    let mut certified = 0;
    let mut deepest = 0;
    for net in all_nets2() {
        certified += oracle_matches_graph(&net, OracleBounds::new(2, 2), replays)? as usize;
        deepest = deepest.max(word_search_matches_graph(&net)?);
    }
    let nets3 = random_nets(3, N3_ORACLE_NETS, 6);
    for net in &nets3 {
        certified += oracle_matches_graph(net, bounds(N3_ORACLE), replays)? as usize;
    }
    Ok(format!(
        "256 n=2 and {} n=3 networks agree ({certified} certified); n=2 word search alone complete by ({deepest}, {deepest})",
        nets3.len()
    ))
}

fn table_of(net: &Network) -> Vec<String> {
    net.table().iter().map(|&r| State::new(net.dim(), r).unwrap().to_string()).collect()
}

/// Oracle cross-check of both sides at one instance: the outer n-basin, and
/// for ω the inner one too, come from bounded schedules alone.
fn oracle_check(net: &Network, inst: &InclusionInstance) -> Result<(), String> {
    let oracle = Oracle::grow_until_stable(net, &OracleBounds::new(2, 2), ORACLE_GROWTH_CAP).unwrap();
    ensure(oracle.certified(), || "oracle not certified".into())?;
    let target = match inst.inclusion {
        Inclusion::Orbit => asyncbasin::schedule::orbit_trace(net, inst.mu, &inst.schedule).unwrap().1,
        Inclusion::Omega => omega_limit(net, inst.mu, &inst.schedule).unwrap(),
    };
    let outer = oracle.basin(&target, Mode::N).unwrap().members;
    ensure(outer == inst.outer, || format!("oracle outer basin {{{outer}}}"))?;
    if inst.inclusion == Inclusion::Omega {
        let inner = StateSet::from_states(
            net.dim(),
            net.states().filter(|&m| oracle.achievable(m).unwrap().omegas.iter().all(|w| *w == target)),
        )
        .unwrap();
        ensure(inner == inst.inner, || format!("oracle inner basin {{{inner}}}"))?;
    }
    Ok(())
}

fn criterion_7(replays: &mut Replays) -> Outcome {
    let schedules: Vec<Schedule> = enumerate_schedules(2, &bounds(SEARCH_BOUNDS)).unwrap().collect();
    let mut found: Vec<(Network, InclusionInstance)> = Vec::new();
    let mut counts = Vec::new();
    for inclusion in [Inclusion::Orbit, Inclusion::Omega] {
        let (mut first, mut first_nonempty, mut strict) = (None, None, 0u64);
        for net in all_nets2() {
            for mu in net.states() {
                for rho in &schedules {
                    let inst = basins::inclusion_instance(&net, inclusion, mu, rho).unwrap();
                    ensure(inst.holds(), || format!("inclusion fails: table {:?}, {inst:?}", table_of(&net)))?;
                    if !inst.is_strict() {
                        continue;
                    }
                    strict += 1;
                    if first.is_none() {
                        first = Some((net.clone(), inst.clone()));
                    }
                    if first_nonempty.is_none() && !inst.inner.is_empty() {
                        first_nonempty = Some((net.clone(), inst));
                    }
                }
            }
        }
        counts.push(format!("{inclusion:?}: {strict} strict instances"));
        ensure(first.is_some(), || format!("no strict {inclusion:?} inclusion"))?;
        found.extend(first);
        found.extend(first_nonempty);
    }

    for (net, inst) in &found {
        oracle_check(net, inst).map_err(|e| format!("{:?} at {}: {e}", inst.inclusion, inst.mu))?;
        let (p_flow, p_omega) = (
            basins::orbit_basin_p(net, inst.mu, &inst.schedule).unwrap(),
            basins::omega_basin_p(net, inst.mu, &inst.schedule).unwrap(),
        );
        replays.basin(net, &p_flow, "flow p-basin");
        replays.basin(net, &p_omega, "ω p-basin");
    }

    let rendered: Vec<String> = found
        .iter()
        .map(|(net, i)| {
            format!(
                "{:?} table {} from {} schedule `{}` inner {{{}}} outer {{{}}}",
                i.inclusion,
                table_of(net).join(","),
                i.mu,
                i.schedule,
                i.inner,
                i.outer
            )
        })
        .collect();
    let frozen: Vec<String> = FIXTURES
        .iter()
        .map(|f| {
            let sched = io::parse_schedule(f.schedule).unwrap();
            format!(
                "{:?} table {} from {} schedule `{}` inner {{{}}} outer {{{}}}",
                f.inclusion,
                f.table.join(","),
                f.mu,
                sched,
                f.inner,
                f.outer
            )
        })
        .collect();
    ensure(rendered == frozen, || format!("search found\n    {}\n  frozen\n    {}", rendered.join("\n    "), frozen.join("\n    ")))?;

    // The frozen fixtures stand on their own, independent of the search.
    for f in FIXTURES {
        let text = format!("n=2\n00 -> {}\n01 -> {}\n10 -> {}\n11 -> {}\n", f.table[0], f.table[1], f.table[2], f.table[3]);
        let net = io::parse_network_table(&text).unwrap();
        let rho = io::parse_schedule(f.schedule).unwrap();
        let inst = basins::inclusion_instance(&net, f.inclusion, st(f.mu), &rho).unwrap();
        let inner = if f.inner.is_empty() { StateSet::empty(2) } else { set(f.inner) };
        let expect = (inner, set(f.outer));
        ensure(inst.is_strict() && (inst.inner.clone(), inst.outer.clone()) == expect, || format!("fixture {inst:?}"))?;
    }
    Ok(counts.join(", "))
}

fn criterion_8(replays: &Replays) -> Outcome {
    ensure(replays.attempted > 0, || "no witnesses replayed".into())?;
    ensure(replays.failed.is_empty(), || {
        format!("{} of {} replays failed: {}", replays.failed.len(), replays.attempted, replays.failed.join("; "))
    })?;
    Ok(format!("{} of {} witness replays succeed", replays.attempted, replays.attempted))
}

fn criterion_9() -> Outcome {
    for net in all_nets2() {
        let text = io::render_network_table(&net);
        let back = io::parse_network_table(&text).unwrap();
        ensure(back == net && io::render_network_table(&back) == text, || format!("table round trip {text:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut schedules: Vec<Schedule> = enumerate_schedules(2, &OracleBounds::new(2, 3)).unwrap().collect();
    schedules.extend((0..200).map(|_| random_schedule(3, &mut rng, 3, 4)));
    for rho in &schedules {
        let text = rho.to_string();
        ensure(io::parse_schedule(&text).as_ref() == Ok(rho), || format!("schedule round trip `{text}`"))?;
    }
    for m in 1u32..256 {
        let s = StateSet::from_states(3, (0..8).filter(|k| m >> k & 1 == 1).map(|k| State::new(3, k).unwrap())).unwrap();
        ensure(io::parse_state_set(&io::render_state_set(&s)).as_ref() == Ok(&s), || format!("set round trip {s}"))?;
    }
    let dot = io::export_dot(&net1()).unwrap();
    ensure(dot == io::export_dot(&net1()).unwrap() && dot == NET1_DOT, || format!("DOT output changed:\n{dot}"))?;
    let node00 = dot.lines().find(|l| l.starts_with("  \"00\" [")).unwrap_or_default();
    ensure(node00.matches("<U>").count() == 2, || format!("node 00: {node00}"))?;
    let arrows = dot.lines().filter(|l| l.starts_with("  \"00\" ->")).count();
    ensure(arrows == 3, || format!("{arrows} edges out of 00"))?;
    Ok(format!("256 tables, {} schedules, 255 sets round-trip; NET1 DOT byte-stable", schedules.len()))
}

fn main() {
    let mut replays = Replays::default();
    let mut failed = 0;
    let mut report = |id: usize, name: &str, limit: Option<Duration>, run: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = run();
        let elapsed = t.elapsed();
        let slow = limit.is_some_and(|l| elapsed > l);
        let limit_text = limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
        let (verdict, detail) = match (&outcome, slow) {
            (Ok(msg), false) => ("PASS", msg.clone()),
            (Ok(msg), true) => ("FAIL", format!("over time: {msg}")),
            (Err(msg), _) => ("FAIL", msg.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("[{verdict}] {id} {name} ({:.2} s{limit_text}): {detail}", elapsed.as_secs_f64());
    };
    report(1, "reference table", Some(LIMIT_1), &mut criterion_1);
    report(2, "identity point basins", Some(LIMIT_2), &mut criterion_2);
    report(3, "reference point basins", Some(LIMIT_3), &mut || criterion_3(&mut replays));
    report(4, "fixed-point gate", Some(LIMIT_4), &mut || criterion_4(&mut replays));
    report(5, "theorem suite", Some(LIMIT_5), &mut || criterion_5(&mut replays));
    report(6, "achievability against the oracle", Some(LIMIT_6), &mut || criterion_6(&mut replays));
    report(7, "strict inclusion witnesses", Some(LIMIT_7), &mut || criterion_7(&mut replays));
    report(8, "witness replay", None, &mut || criterion_8(&replays));
    report(9, "I/O determinism", None, &mut criterion_9);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
