//! Eventually periodic progressive schedules and the flows they drive.
//!
//! A schedule places fire sets at strictly increasing rational times: a finite
//! prefix, then a cycle of events repeated every `period` starting at
//! `cycle_start`. The flow Φ^ρ(μ,t) is μ before the first event and, from each
//! event time on, the result of applying every fire set whose time is ≤ t.
//!
//! Since the cycle part repeats and B^n is finite, the pair (state, position
//! in the cycle) eventually recurs; that recurrence gives the periodic tail of
//! the flow and the ω-limit set exactly.

use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;

use crate::bits::{FireSet, State, StateSet};
use crate::error::{Error, Result};
use crate::network::Network;

/// Exact time value.
pub type Rational = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// Least common multiple of two positive rationals.
pub fn rational_lcm(a: Rational, b: Rational) -> Rational {
    Rational::new(
        a.numer().lcm(b.numer()),
        a.denom().gcd(b.denom()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub time: Rational,
    pub fire: FireSet,
}

impl Event {
    pub fn new(time: Rational, fire: FireSet) -> Self {
        Event { time, fire }
    }
}

/// An eventually periodic timed fire-set sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    dim: usize,
    prefix: Vec<Event>,
    /// Event times here are offsets in `[0, period)`.
    cycle: Vec<Event>,
    period: Rational,
    cycle_start: Rational,
}

impl Schedule {
    /// Validates the structural invariants: strictly increasing prefix times,
    /// strictly increasing cycle offsets within `[0, period)`, a positive period
    /// and a cycle start after every prefix event. Progressiveness is checked
    /// separately by [`Schedule::is_progressive`].
    pub fn new(
        prefix: Vec<Event>,
        cycle: Vec<Event>,
        period: Rational,
        cycle_start: Rational,
    ) -> Result<Self> {
        let first = cycle
            .first()
            .ok_or_else(|| Error::InvalidSchedule("cycle must contain at least one event".into()))?;
        let dim = first.fire.dim();
        for e in prefix.iter().chain(&cycle) {
            e.fire.check_dim(dim)?;
        }
        if period <= int(0) {
            return Err(Error::InvalidSchedule(format!("period {period} must be positive")));
        }
        for w in prefix.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::InvalidSchedule(format!(
                    "prefix times must increase strictly ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        for w in cycle.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::InvalidSchedule(format!(
                    "cycle offsets must increase strictly ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        for e in &cycle {
            if e.time < int(0) || e.time >= period {
                return Err(Error::InvalidSchedule(format!(
                    "cycle offset {} outside [0, {period})",
                    e.time
                )));
            }
        }
        if let Some(last) = prefix.last() {
            if cycle_start <= last.time {
                return Err(Error::InvalidSchedule(format!(
                    "cycle start {cycle_start} must come after the last prefix time {}",
                    last.time
                )));
            }
        }
        Ok(Schedule { dim, prefix, cycle, period, cycle_start })
    }

    /// Events at integer times: prefix word at 0, 1, …, then the cycle word
    /// repeated with one event per unit of time.
    pub fn from_words(prefix: &[FireSet], cycle: &[FireSet]) -> Result<Self> {
        let p = prefix.len() as i64;
        Schedule::new(
            prefix.iter().enumerate().map(|(k, &f)| Event::new(int(k as i64), f)).collect(),
            cycle.iter().enumerate().map(|(k, &f)| Event::new(int(k as i64), f)).collect(),
            int(cycle.len() as i64),
            int(p),
        )
    }

    /// All coordinates computed at every integer time t = 0, 1, 2, …
    pub fn synchronous(dim: usize) -> Self {
        Schedule::from_words(&[], &[FireSet::ones(dim)]).expect("valid synchronous schedule")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prefix(&self) -> &[Event] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Event] {
        &self.cycle
    }

    pub fn period(&self) -> Rational {
        self.period
    }

    pub fn cycle_start(&self) -> Rational {
        self.cycle_start
    }

    /// Every coordinate is fired by at least one cycle event, hence infinitely often.
    pub fn is_progressive(&self) -> bool {
        self.missing_coordinates().is_empty()
    }

    /// Coordinates (1-based) that no cycle event fires.
    pub fn missing_coordinates(&self) -> Vec<usize> {
        let covered = self.cycle.iter().fold(FireSet::zeros(self.dim), |acc, e| acc.union(e.fire));
        covered.complement().ones_indices()
    }

    pub fn require_progressive(&self) -> Result<()> {
        let missing = self.missing_coordinates();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::NotProgressive { missing })
        }
    }

    /// The infinite, time-ordered event stream.
    pub fn events(&self) -> Events<'_> {
        Events { schedule: self, index: 0, rep: 0 }
    }

    /// Time of the very first event.
    pub fn first_event_time(&self) -> Rational {
        self.prefix
            .first()
            .map(|e| e.time)
            .unwrap_or(self.cycle_start + self.cycle[0].time)
    }

    /// ρ∘τ^d: every event moved later by `d`.
    pub fn translate(&self, d: Rational) -> Schedule {
        Schedule {
            dim: self.dim,
            prefix: self.prefix.iter().map(|e| Event::new(e.time + d, e.fire)).collect(),
            cycle: self.cycle.clone(),
            period: self.period,
            cycle_start: self.cycle_start + d,
        }
    }

    /// ρ·χ_{(t′,∞)}: drops every event at a time ≤ t′. The cycle itself is
    /// kept; the start moves forward by whole periods and the events of the
    /// straddling repetition become prefix events.
    pub fn restrict_after(&self, t_prime: Rational) -> Schedule {
        let mut prefix: Vec<Event> =
            self.prefix.iter().filter(|e| e.time > t_prime).copied().collect();
        let mut cycle_start = self.cycle_start;
        if t_prime >= self.cycle_start {
            // smallest m with cycle_start + m·period > t′
            let m = ((t_prime - self.cycle_start) / self.period).floor() + int(1);
            let straddle = cycle_start + (m - int(1)) * self.period;
            cycle_start += m * self.period;
            prefix.extend(
                self.cycle
                    .iter()
                    .map(|e| Event::new(straddle + e.time, e.fire))
                    .filter(|e| e.time > t_prime),
            );
        }
        Schedule {
            dim: self.dim,
            prefix,
            cycle: self.cycle.clone(),
            period: self.period,
            cycle_start,
        }
    }

    /// Prepends events that all happen strictly before this schedule's first event.
    pub fn with_leading_events(&self, events: &[Event]) -> Result<Schedule> {
        let mut prefix = events.to_vec();
        prefix.extend_from_slice(&self.prefix);
        Schedule::new(prefix, self.cycle.clone(), self.period, self.cycle_start)
    }

    fn check_for(&self, net: &Network, mu: State) -> Result<()> {
        mu.check_dim(net.dim())?;
        if self.dim != net.dim() {
            return Err(Error::DimensionMismatch { expected: net.dim(), found: self.dim });
        }
        self.require_progressive()
    }
}

impl fmt::Display for Schedule {
    /// Text form `prefix t:bits … ; cycle o:bits … ; period P ; start s`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() {
            f.write_str("prefix")?;
            for e in &self.prefix {
                write!(f, " {}:{}", e.time, e.fire)?;
            }
            f.write_str(" ; ")?;
        }
        f.write_str("cycle")?;
        for e in &self.cycle {
            write!(f, " {}:{}", e.time, e.fire)?;
        }
        write!(f, " ; period {} ; start {}", self.period, self.cycle_start)
    }
}

impl serde::Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub struct Events<'a> {
    schedule: &'a Schedule,
    index: usize,
    rep: i64,
}

impl Iterator for Events<'_> {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        let s = self.schedule;
        if self.index < s.prefix.len() {
            self.index += 1;
            return Some(s.prefix[self.index - 1]);
        }
        let k = self.index - s.prefix.len();
        let e = s.cycle[k];
        let ev = Event::new(s.cycle_start + int(self.rep) * s.period + e.time, e.fire);
        if k + 1 == s.cycle.len() {
            self.index = s.prefix.len();
            self.rep += 1;
        } else {
            self.index += 1;
        }
        Some(ev)
    }
}

/// Detects the first recurrence of (state, next cycle position) once the
/// prefix has been applied. Returns the state entering the cycle together
/// with the states reached after each cycle event up to and including the
/// recurrence, and the loop's first index in that list.
struct LoopScan {
    /// Flow value after each applied event (prefix then cycle), in order.
    states: Vec<u32>,
    /// Index into `states` of the value whose next event starts the loop.
    entry: usize,
    /// Number of events per loop.
    loop_len: usize,
}

fn scan_loop(net: &Network, mu: u32, rho: &Schedule) -> LoopScan {
    let k = rho.cycle.len();
    let mut states = Vec::with_capacity(rho.prefix.len() + 2 * k + 1);
    let mut cur = mu;
    for e in &rho.prefix {
        cur = net.step_raw(cur, e.fire.bits());
        states.push(cur);
    }
    // states.len() - 1 is the index of the value entering the cycle; use a
    // virtual index `base` so that the initial value (no prefix) also works.
    let base = states.len();
    let keys = net.size() * k;
    let mut dense: Vec<u32>;
    let mut sparse: HashMap<(u32, usize), usize>;
    let use_dense = keys <= 1 << 16;
    if use_dense {
        dense = vec![u32::MAX; keys];
        sparse = HashMap::new();
    } else {
        dense = Vec::new();
        sparse = HashMap::new();
    }
    let mut pos = 0usize;
    let mut step = 0usize;
    loop {
        let seen = if use_dense {
            let slot = &mut dense[cur as usize * k + pos];
            let prev = *slot;
            if prev == u32::MAX {
                *slot = step as u32;
                None
            } else {
                Some(prev as usize)
            }
        } else {
            match sparse.entry((cur, pos)) {
                std::collections::hash_map::Entry::Occupied(o) => Some(*o.get()),
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert(step);
                    None
                }
            }
        };
        if let Some(first) = seen {
            // the value with step index `first` is states[base + first - 1]
            // (or μ when base + first == 0)
            return LoopScan { states, entry: base + first, loop_len: step - first };
        }
        cur = net.step_raw(cur, rho.cycle[pos].fire.bits());
        states.push(cur);
        pos = (pos + 1) % k;
        step += 1;
    }
}

/// Periodic tail of a flow: from `entry_time` on, the flow cycles through
/// `states`, each held for its dwell duration; the durations sum to `period`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tail {
    pub entry_time: Rational,
    pub states: Vec<(State, Rational)>,
    pub period: Rational,
}

/// Timed record of Φ^ρ(μ,·): the value is `initial` before the first change,
/// then the state of the latest change at or before t. `changes` covers the
/// transient and one full tail period; later values repeat with `tail.period`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitTrace {
    pub initial: State,
    pub changes: Vec<(Rational, State)>,
    pub tail: Tail,
}

impl OrbitTrace {
    /// Φ^ρ(μ,t).
    pub fn value_at(&self, t: Rational) -> State {
        let t = if t >= self.tail.entry_time {
            let k = ((t - self.tail.entry_time) / self.tail.period).floor();
            t - k * self.tail.period
        } else {
            t
        };
        match self.changes.partition_point(|(time, _)| *time <= t) {
            0 => self.initial,
            i => self.changes[i - 1].1,
        }
    }

    /// States taken by the flow from `entry_time` on, i.e. the ω-limit set.
    pub fn tail_set(&self) -> StateSet {
        let dim = self.initial.dim();
        let mut s = StateSet::empty(dim);
        for (st, _) in &self.tail.states {
            s.insert(*st);
        }
        s
    }
}

/// Φ^ρ(μ,t).
pub fn flow_at(net: &Network, mu: State, rho: &Schedule, t: Rational) -> Result<State> {
    rho.check_for(net, mu)?;
    if t < rho.first_event_time() {
        return Ok(mu);
    }
    // Events up to t; beyond the transient the loop lets us skip whole periods.
    let (trace, _) = orbit_trace(net, mu, rho)?;
    Ok(trace.value_at(t))
}

/// The full trace of Φ^ρ(μ,·) and the orbit Or_ρ(μ).
pub fn orbit_trace(net: &Network, mu: State, rho: &Schedule) -> Result<(OrbitTrace, StateSet)> {
    rho.check_for(net, mu)?;
    let scan = scan_loop(net, mu.bits(), rho);
    let dim = net.dim();
    let total = scan.entry + scan.loop_len;
    let times: Vec<Rational> = rho.events().take(total).map(|e| e.time).collect();

    let mut changes = Vec::new();
    let mut prev = mu.bits();
    let mut orbit = StateSet::singleton(mu);
    for (i, &st) in scan.states.iter().take(total).enumerate() {
        orbit.insert_raw(st);
        if st != prev {
            changes.push((times[i], State::from_raw(dim, st)));
            prev = st;
        }
    }

    // Loop events are indices entry .. entry+loop_len; the value after event j
    // holds on [t_j, t_{j+1}).
    let entry_time = times[scan.entry];
    let mut tail_states: Vec<(State, Rational)> = Vec::new();
    let period = times_after(rho, &times, scan.entry + scan.loop_len) - entry_time;
    for j in scan.entry..total {
        let start = times[j];
        let end = if j + 1 < total { times[j + 1] } else { entry_time + period };
        let st = State::from_raw(dim, scan.states[j]);
        match tail_states.last_mut() {
            Some((last, dwell)) if *last == st => *dwell += end - start,
            _ => tail_states.push((st, end - start)),
        }
    }
    let trace = OrbitTrace {
        initial: mu,
        changes,
        tail: Tail { entry_time, states: tail_states, period },
    };
    Ok((trace, orbit))
}

fn times_after(rho: &Schedule, times: &[Rational], index: usize) -> Rational {
    if index < times.len() {
        times[index]
    } else {
        rho.events().nth(index).expect("infinite event stream").time
    }
}

/// ω_ρ(μ): the states on the recurring loop of the flow.
pub fn omega_limit(net: &Network, mu: State, rho: &Schedule) -> Result<StateSet> {
    rho.check_for(net, mu)?;
    let scan = scan_loop(net, mu.bits(), rho);
    Ok(StateSet::from_raw_iter(
        net.dim(),
        scan.states[scan.entry..scan.entry + scan.loop_len].iter().copied(),
    ))
}

/// Decides whether Φ^ρ(μ,·) and Φ^ρ′(μ′,·) coincide on some [t′, ∞).
///
/// Both flows are periodic after their tail entry times; past the later entry
/// they agree forever iff they agree over one common period. When they do, the
/// returned t′ is the end of the last interval on which they differ, or the
/// earliest event time when they never differ.
pub fn flows_eventually_equal(
    net: &Network,
    mu: State,
    rho: &Schedule,
    mu2: State,
    rho2: &Schedule,
) -> Result<(bool, Option<Rational>)> {
    let (f, _) = orbit_trace(net, mu, rho)?;
    let (g, _) = orbit_trace(net, mu2, rho2)?;
    let start = f.tail.entry_time.max(g.tail.entry_time);
    let horizon = start + rational_lcm(f.tail.period, g.tail.period);

    let mut points = event_times_before(rho, horizon);
    points.extend(event_times_before(rho2, horizon));
    points.push(start);
    points.sort();
    points.dedup();

    for &p in points.iter().filter(|&&p| p >= start) {
        if f.value_at(p) != g.value_at(p) {
            return Ok((false, None));
        }
    }
    let mut last_bad: Option<Rational> = None;
    if mu != mu2 {
        last_bad = points.first().copied();
    }
    let before: Vec<Rational> = points.iter().copied().filter(|&p| p < start).collect();
    for (i, &p) in before.iter().enumerate() {
        if f.value_at(p) != g.value_at(p) {
            last_bad = Some(before.get(i + 1).copied().unwrap_or(start));
        }
    }
    let witness = last_bad.or_else(|| points.first().copied()).unwrap_or(start);
    Ok((true, Some(witness)))
}

fn event_times_before(rho: &Schedule, horizon: Rational) -> Vec<Rational> {
    rho.events().map(|e| e.time).take_while(|&t| t < horizon).collect()
}
