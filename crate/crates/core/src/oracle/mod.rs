//! Brute-force ground truth over bounded integer-time schedules.
//!
//! Nothing here uses the graph algorithms: ω-limit sets come from direct
//! simulation of fire-set words, so they can be compared against
//! [`crate::graph`] and [`crate::basins`].
//!
//! Only the order of events matters for a flow's values, so schedules with
//! events at 0, 1, 2, … stand for every timing of the same fire-set word.
//! A schedule is a prefix word followed by a cycle word repeated forever.

pub mod verify;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::basins::Mode;
use crate::bits::{mask, FireSet, State, StateSet};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::schedule::Schedule;

pub use verify::{
    random_schedule, verify_theorems, verify_theorems_with, Check, CheckTally, Counterexample, ScheduleSource,
    SetSource, VerificationReport, VerifyConfig,
};

/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 4;

/// Distinct cycle-word signatures the oracle may hold before giving up.
pub const SIGNATURE_LIMIT: usize = 2_000_000;

/// Which fire sets may label events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FireAlphabet {
    /// Every element of B^n, the empty fire set included.
    All,
    Restricted(Vec<FireSet>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleBounds {
    pub max_prefix_len: usize,
    pub max_cycle_len: usize,
    pub fire_alphabet: FireAlphabet,
}

impl OracleBounds {
    pub fn new(max_prefix_len: usize, max_cycle_len: usize) -> Self {
        OracleBounds { max_prefix_len, max_cycle_len, fire_alphabet: FireAlphabet::All }
    }

    /// Prefixes up to 2^n events, cycles up to n·2^n events.
    pub fn default_for(dim: usize) -> Self {
        OracleBounds::new(1 << dim, dim << dim)
    }

    /// Both lengths one larger; used for the stabilization check.
    pub fn grown(&self) -> Self {
        OracleBounds {
            max_prefix_len: self.max_prefix_len + 1,
            max_cycle_len: self.max_cycle_len + 1,
            fire_alphabet: self.fire_alphabet.clone(),
        }
    }

    fn alphabet(&self, dim: usize) -> Result<Vec<u32>> {
        if self.max_cycle_len == 0 {
            return Err(Error::InvalidBounds("max_cycle_len must be at least 1".into()));
        }
        let letters: Vec<u32> = match &self.fire_alphabet {
            FireAlphabet::All => (0..1u32 << dim).collect(),
            FireAlphabet::Restricted(sets) => {
                let mut v = Vec::with_capacity(sets.len());
                for f in sets {
                    f.check_dim(dim)?;
                    v.push(f.bits());
                }
                v.sort_unstable();
                v.dedup();
                v
            }
        };
        if letters.iter().fold(0, |acc, l| acc | l) != mask(dim) {
            return Err(Error::InvalidBounds(
                "fire alphabet does not cover every coordinate, so no schedule is progressive".into(),
            ));
        }
        Ok(letters)
    }
}

fn check_oracle_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if dim > ORACLE_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, cap: ORACLE_MAX_DIM, what: "oracle" });
    }
    Ok(())
}

/// All words of length `len` over `letters`, in lexicographic index order.
fn words(letters: std::rc::Rc<Vec<u32>>, len: usize) -> impl Iterator<Item = Vec<u32>> {
    let k = letters.len();
    let mut digits: Option<Vec<usize>> = Some(vec![0; len]);
    std::iter::from_fn(move || {
        let cur = digits.as_mut()?;
        let word: Vec<u32> = cur.iter().map(|&d| letters[d]).collect();
        // advance the odometer, last position fastest
        let mut i = len;
        loop {
            if i == 0 {
                digits = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < k {
                break;
            }
            cur[i] = 0;
        }
        Some(word)
    })
}

fn is_primitive(w: &[u32]) -> bool {
    let l = w.len();
    (1..l).filter(|d| l % d == 0).all(|d| (d..l).any(|i| w[i] != w[i - d]))
}

/// Canonical progressive integer-time schedules within `bounds`: events at
/// 0, 1, 2, …; the cycle is primitive and covers every coordinate; a
/// nonempty prefix does not end with the cycle's last letter (otherwise the
/// cycle could be rotated into the prefix). Each infinite fire-set word
/// appears once, so the stream is free of translation duplicates.
pub fn enumerate_schedules(dim: usize, bounds: &OracleBounds) -> Result<impl Iterator<Item = Schedule>> {
    check_oracle_dim(dim)?;
    let letters = std::rc::Rc::new(bounds.alphabet(dim)?);
    let full = mask(dim);
    let (p, c) = (bounds.max_prefix_len, bounds.max_cycle_len);
    let outer = letters.clone();
    Ok((1..=c)
        .flat_map(move |l| words(outer.clone(), l))
        .filter(move |w| is_primitive(w) && w.iter().fold(0, |a, b| a | b) == full)
        .flat_map(move |cycle| {
            let last = *cycle.last().expect("nonempty cycle");
            let letters = letters.clone();
            (0..=p)
                .flat_map(move |l| words(letters.clone(), l))
                .filter(move |pre| pre.last() != Some(&last))
                .map(move |pre| {
                    let to_fire =
                        |v: &[u32]| v.iter().map(|&b| FireSet::new(dim, b).expect("in range")).collect::<Vec<_>>();
                    Schedule::from_words(&to_fire(&pre), &to_fire(&cycle)).expect("valid schedule")
                })
        }))
}

/// Orbit and ω-limit set of the word `prefix · cycle^∞` from μ, by direct
/// simulation until a (state, cycle position) pair repeats.
pub fn simulate_words(
    net: &Network,
    mu: State,
    prefix: &[FireSet],
    cycle: &[FireSet],
) -> Result<(StateSet, StateSet)> {
    mu.check_dim(net.dim())?;
    if cycle.is_empty() {
        return Err(Error::InvalidSchedule("cycle must contain at least one event".into()));
    }
    let dim = net.dim();
    let table = net.table();
    let step = |x: u32, f: FireSet| (x & !f.bits()) | (table[x as usize] & f.bits());
    let mut orbit = StateSet::singleton(mu);
    let mut x = mu.bits();
    for &f in prefix {
        f.check_dim(dim)?;
        x = step(x, f);
        orbit.insert_raw(x);
    }
    let k = cycle.len();
    // first visit index of (state, position)
    let mut seen: HashMap<(u32, usize), usize> = HashMap::new();
    let mut after: Vec<u32> = Vec::new();
    let mut pos = 0;
    loop {
        if let Some(&first) = seen.get(&(x, pos)) {
            let omega = StateSet::from_raw_iter(dim, after[first..].iter().copied());
            return Ok((orbit, omega));
        }
        seen.insert((x, pos), after.len());
        x = step(x, cycle[pos]);
        orbit.insert_raw(x);
        after.push(x);
        pos = (pos + 1) % k;
    }
}

/// Effect of a cycle word on every start state: where it ends, which states
/// it passes through (after each event) and which coordinates it fires.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Signature {
    end: [u8; 16],
    visits: [u16; 16],
    covered: u8,
}

/// ω-limit sets and orbits reachable by bounded schedules from one state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleOmegas {
    pub omegas: BTreeSet<StateSet>,
    /// Orbits of bounded schedules; every one of them when `orbits_exact`,
    /// otherwise only those whose cycle returns to the state it starts in.
    pub orbits: BTreeSet<StateSet>,
    /// The ω-limit sets did not change when both bounds grew by one.
    pub stabilized: bool,
    /// Same for the orbits; false when they are not exact.
    pub orbits_stabilized: bool,
    pub orbits_exact: bool,
    /// The ω-limit sets equal those of all schedules without length bounds,
    /// as shown by the closed-walk search (n ≤ 3 only).
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleBasin {
    pub members: StateSet,
    pub stabilized: bool,
}

/// Bounded-schedule outcomes for every initial state of one network.
#[derive(Debug, Clone)]
pub struct Oracle {
    dim: usize,
    bounds: OracleBounds,
    per_state: Vec<OracleOmegas>,
}

/// Per cycle start x: (ω mask, orbit-of-cycle-part mask) pairs.
type CycleOutcomes = Vec<HashSet<(u32, u32)>>;

/// Largest dimension for the closed-walk search.
const CLOSED_WALK_MAX_DIM: usize = 3;

/// For each state y and set T, the length of the shortest word that fires
/// every coordinate, leads from y back to y, and passes through exactly T.
///
/// The ω-limit set of a prefix u and cycle w is exactly such a T: from a
/// state y where the iterated cycle closes up, some power of w is a closed
/// walk at y through ω. Conversely reaching y and then repeating a closed
/// walk at y has that walk's states as ω. So the closed walks at states
/// reachable from μ bound the oracle's answer from above, and the ones
/// within the length bounds from below.
struct ClosedWalks {
    dim: usize,
    /// `len[y][T]`, `u16::MAX` when there is no such walk.
    len: Vec<Vec<u16>>,
}

impl ClosedWalks {
    fn new(dim: usize, letters: &[u32], step: impl Fn(u32, u32) -> u32) -> Self {
        let size = 1usize << dim;
        let full = mask(dim);
        // product state: current, visited set, fired coordinates
        let index = |cur: u32, visited: u32, covered: u32| {
            ((cur as usize) << (size + dim)) | ((visited as usize) << dim) | covered as usize
        };
        let mut len = vec![vec![u16::MAX; 1 << size]; size];
        for y in 0..size as u32 {
            let mut seen = vec![false; size << (size + dim)];
            let mut layer = vec![(y, 1u32 << y, 0u32)];
            seen[index(y, 1 << y, 0)] = true;
            let mut depth = 0u16;
            while !layer.is_empty() {
                depth += 1;
                let mut next = Vec::new();
                for &(cur, visited, covered) in &layer {
                    for &a in letters {
                        let d = step(cur, a);
                        let (v, c) = (visited | 1 << d, covered | a);
                        if d == y && c == full {
                            let slot = &mut len[y as usize][v as usize];
                            *slot = (*slot).min(depth);
                        }
                        let i = index(d, v, c);
                        if !seen[i] {
                            seen[i] = true;
                            next.push((d, v, c));
                        }
                    }
                }
                layer = next;
            }
        }
        ClosedWalks { dim, len }
    }

    /// Sets T with a walk of length ≤ `max_len` at some state of `starts`.
    fn family(&self, starts: u32, max_len: usize) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for y in (0..1u32 << self.dim).filter(|y| starts >> y & 1 == 1) {
            for (t, &l) in self.len[y as usize].iter().enumerate() {
                if l != u16::MAX && l as usize <= max_len {
                    out.insert(t as u32);
                }
            }
        }
        out
    }

    /// Longest of the shortest walks over all sets T.
    fn longest_needed(&self) -> usize {
        let mut best = vec![u16::MAX; self.len[0].len()];
        for row in &self.len {
            for (b, &l) in best.iter_mut().zip(row) {
                *b = (*b).min(l);
            }
        }
        best.into_iter().filter(|&l| l != u16::MAX).max().unwrap_or(1) as usize
    }
}

/// States reachable from μ by words over `letters`, as a mask, and the
/// largest number of letters any of them needs.
fn reach(mu: u32, letters: &[u32], step: impl Fn(u32, u32) -> u32) -> (u32, usize) {
    let mut seen = 1u32 << mu;
    let mut layer = vec![mu];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &x in &layer {
            for &a in letters {
                let y = step(x, a);
                if seen >> y & 1 == 0 {
                    seen |= 1 << y;
                    next.push(y);
                }
            }
        }
        if next.is_empty() {
            return (seen, depth);
        }
        depth += 1;
        layer = next;
    }
}

impl Oracle {
    pub fn new(net: &Network, bounds: &OracleBounds) -> Result<Self> {
        Oracle::build(net, bounds, true)
    }

    /// Always runs the word search over bounded schedules, even where closed
    /// walks would settle the answer. `certified` still reports whether the
    /// search found every ω-limit set of unbounded schedules.
    pub fn word_search(net: &Network, bounds: &OracleBounds) -> Result<Self> {
        Oracle::build(net, bounds, false)
    }

    fn build(net: &Network, bounds: &OracleBounds, shortcut: bool) -> Result<Self> {
        let dim = net.dim();
        check_oracle_dim(dim)?;
        let letters = bounds.alphabet(dim)?;
        let size = 1usize << dim;
        let table = net.table();
        let step = |x: u32, f: u32| (x & !f) | (table[x as usize] & f);
        let (p, c) = (bounds.max_prefix_len, bounds.max_cycle_len);
        let prefixes: Vec<_> = (0..size as u32).map(|mu| prefix_pairs(mu, p + 1, &letters, step)).collect();

        let closed = (dim <= CLOSED_WALK_MAX_DIM).then(|| ClosedWalks::new(dim, &letters, step));
        let upper: Vec<BTreeSet<u32>> = match &closed {
            Some(cw) => (0..size as u32).map(|mu| cw.family(reach(mu, &letters, step).0, usize::MAX)).collect(),
            None => Vec::new(),
        };
        if let Some(cw) = closed.as_ref().filter(|_| shortcut) {
            // When the short closed walks already give every set, the bounded
            // answer is pinned between equal bounds.
            let lower: Vec<BTreeSet<u32>> = prefixes
                .iter()
                .map(|layers| {
                    let starts = layers[..=p].iter().flatten().fold(0, |m, &(x, _)| m | 1 << x);
                    cw.family(starts, c)
                })
                .collect();
            if lower == upper {
                let to_sets = |masks: &BTreeSet<u32>| {
                    masks.iter().map(|&m| StateSet::from_mask(dim, m as u64)).collect::<BTreeSet<_>>()
                };
                let per_state = prefixes
                    .iter()
                    .zip(&upper)
                    .map(|(layers, omegas)| {
                        let mut orbits = BTreeSet::new();
                        for &(y, visited) in layers[..=p].iter().flatten() {
                            for (t, &l) in cw.len[y as usize].iter().enumerate() {
                                if l != u16::MAX && l as usize <= c {
                                    orbits.insert(visited | t as u32);
                                }
                            }
                        }
                        OracleOmegas {
                            omegas: to_sets(omegas),
                            orbits: to_sets(&orbits),
                            stabilized: true,
                            orbits_stabilized: false,
                            orbits_exact: false,
                            certified: true,
                        }
                    })
                    .collect();
                return Ok(Oracle { dim, bounds: bounds.clone(), per_state });
            }
        }

        // Breadth-first over distinct signatures; a signature first met at
        // length L is the signature of some word of length L and of no shorter one.
        let mut seen: HashSet<Signature> = HashSet::new();
        let mut start = Signature { end: [0; 16], visits: [0; 16], covered: 0 };
        for x in 0..size {
            start.end[x] = x as u8;
        }
        seen.insert(start);
        let mut level = vec![start];
        let full = mask(dim) as u8;
        let mut outcomes: [CycleOutcomes; 2] = [vec![HashSet::new(); size], vec![HashSet::new(); size]];
        for len in 1..=c + 1 {
            let mut next = Vec::new();
            for sig in &level {
                for &a in &letters {
                    let mut s = Signature { end: [0; 16], visits: [0; 16], covered: sig.covered | a as u8 };
                    for x in 0..size {
                        let y = step(sig.end[x] as u32, a);
                        s.end[x] = y as u8;
                        s.visits[x] = sig.visits[x] | 1 << y;
                    }
                    if seen.insert(s) {
                        next.push(s);
                    }
                    if seen.len() > SIGNATURE_LIMIT {
                        return Err(Error::EnumerationLimit { limit: SIGNATURE_LIMIT });
                    }
                }
            }
            for sig in next.iter().filter(|s| s.covered == full) {
                for x in 0..size {
                    let outcome = cycle_outcome(sig, x);
                    if len <= c {
                        outcomes[0][x].insert(outcome);
                    }
                    outcomes[1][x].insert(outcome);
                }
            }
            level = next;
        }

        let mut per_state = Vec::with_capacity(size);
        for (mu, pairs) in prefixes.iter().enumerate() {
            let small = combine(dim, &pairs[..=p], &outcomes[0]);
            let large = combine(dim, pairs, &outcomes[1]);
            let certified = upper.get(mu).is_some_and(|u| {
                u.len() == small.0.len() && small.0.iter().all(|t| u.contains(&(t.iter_raw().fold(0, |m, x| m | 1 << x))))
            });
            per_state.push(OracleOmegas {
                stabilized: small.0 == large.0,
                orbits_stabilized: small.1 == large.1,
                orbits_exact: true,
                certified,
                omegas: small.0,
                orbits: small.1,
            });
        }
        Ok(Oracle { dim, bounds: bounds.clone(), per_state })
    }

    /// Smallest bounds at which the closed-walk search alone settles every
    /// initial state; `None` above n = 3.
    pub fn settling_bounds(net: &Network, alphabet: &FireAlphabet) -> Result<Option<OracleBounds>> {
        let dim = net.dim();
        check_oracle_dim(dim)?;
        if dim > CLOSED_WALK_MAX_DIM {
            return Ok(None);
        }
        let probe = OracleBounds { max_prefix_len: 0, max_cycle_len: 1, fire_alphabet: alphabet.clone() };
        let letters = probe.alphabet(dim)?;
        let table = net.table();
        let step = |x: u32, f: u32| (x & !f) | (table[x as usize] & f);
        let cw = ClosedWalks::new(dim, &letters, step);
        let p = (0..1u32 << dim).map(|mu| reach(mu, &letters, step).1).max().unwrap_or(0);
        Ok(Some(OracleBounds { max_prefix_len: p, max_cycle_len: cw.longest_needed(), fire_alphabet: alphabet.clone() }))
    }

    /// Starts at `bounds` and grows both lengths by one until two consecutive
    /// levels report every state stabilized, or the cycle length reaches
    /// `max_cycle_len`. A single stabilized level is not enough: some n=3
    /// networks show no growth from (3,4) to (4,5) yet gain ω-limit sets at (5,6).
    ///
    /// Up to n = 3 the bounds first jump to [`Oracle::settling_bounds`] when
    /// those fit under `max_cycle_len`, which ends the search at once.
    pub fn grow_until_stable(net: &Network, bounds: &OracleBounds, max_cycle_len: usize) -> Result<Self> {
        let mut b = bounds.clone();
        if let Some(s) = Oracle::settling_bounds(net, &b.fire_alphabet)? {
            if s.max_cycle_len <= max_cycle_len {
                b.max_prefix_len = b.max_prefix_len.max(s.max_prefix_len);
                b.max_cycle_len = b.max_cycle_len.max(s.max_cycle_len);
            }
        }
        let mut previous_stable = false;
        loop {
            let o = Oracle::new(net, &b)?;
            if o.certified() || (o.stabilized() && previous_stable) || b.max_cycle_len >= max_cycle_len {
                return Ok(o);
            }
            previous_stable = o.stabilized();
            b = b.grown();
        }
    }

    /// Whether every initial state's ω-limit sets are stabilized.
    pub fn stabilized(&self) -> bool {
        self.per_state.iter().all(|r| r.stabilized)
    }

    /// Whether every initial state's ω-limit sets are certified complete.
    pub fn certified(&self) -> bool {
        self.per_state.iter().all(|r| r.certified)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &OracleBounds {
        &self.bounds
    }

    pub fn achievable(&self, mu: State) -> Result<&OracleOmegas> {
        mu.check_dim(self.dim)?;
        Ok(&self.per_state[mu.bits() as usize])
    }

    /// Basin membership straight from the ω-limit sets found per state.
    pub fn basin(&self, a: &StateSet, mode: Mode) -> Result<OracleBasin> {
        a.check_dim(self.dim)?;
        if a.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut members = StateSet::empty(self.dim);
        let mut stabilized = true;
        for (mu, res) in self.per_state.iter().enumerate() {
            stabilized &= res.stabilized;
            let hit = match mode {
                Mode::P => res.omegas.iter().any(|w| w.is_subset(a)),
                Mode::N => res.omegas.iter().all(|w| w.is_subset(a)),
            };
            if hit {
                members.insert_raw(mu as u32);
            }
        }
        Ok(OracleBasin { members, stabilized })
    }
}

/// ω mask and cycle-part orbit mask when the cycle starts in state x.
fn cycle_outcome(sig: &Signature, x: usize) -> (u32, u32) {
    let mut order = [u8::MAX; 16];
    let mut seq: Vec<usize> = Vec::with_capacity(16);
    let mut cur = x;
    while order[cur] == u8::MAX {
        order[cur] = seq.len() as u8;
        seq.push(cur);
        cur = sig.end[cur] as usize;
    }
    let loop_from = order[cur] as usize;
    let mut omega = 0u32;
    let mut orbit = 1u32 << x;
    for (i, &s) in seq.iter().enumerate() {
        orbit |= sig.visits[s] as u32;
        if i >= loop_from {
            omega |= sig.visits[s] as u32;
        }
    }
    (omega, orbit)
}

/// For each length ℓ ≤ `max_len`, the (end state, visited mask) pairs of
/// prefix words of length exactly ℓ from μ.
fn prefix_pairs(
    mu: u32,
    max_len: usize,
    letters: &[u32],
    step: impl Fn(u32, u32) -> u32,
) -> Vec<HashSet<(u32, u32)>> {
    let mut layers = vec![HashSet::from([(mu, 1u32 << mu)])];
    for _ in 0..max_len {
        let prev = layers.last().expect("nonempty");
        let mut next = HashSet::new();
        for &(x, visited) in prev {
            for &a in letters {
                let y = step(x, a);
                next.insert((y, visited | 1 << y));
            }
        }
        layers.push(next);
    }
    layers
}

fn combine(
    dim: usize,
    prefix_layers: &[HashSet<(u32, u32)>],
    outcomes: &CycleOutcomes,
) -> (BTreeSet<StateSet>, BTreeSet<StateSet>) {
    let pairs: HashSet<(u32, u32)> = prefix_layers.iter().flatten().copied().collect();
    let mut omegas = HashSet::new();
    let mut orbits = HashSet::new();
    for &(x, visited) in &pairs {
        for &(omega, orbit) in &outcomes[x as usize] {
            omegas.insert(omega);
            orbits.insert(visited | orbit);
        }
    }
    let to_sets = |masks: HashSet<u32>| {
        masks
            .into_iter()
            .map(|m| StateSet::from_mask(dim, m as u64))
            .collect::<BTreeSet<_>>()
    };
    (to_sets(omegas), to_sets(orbits))
}

/// {ω_ρ(μ) : ρ within bounds}, with a stabilization flag.
pub fn oracle_achievable_omegas(net: &Network, mu: State, bounds: &OracleBounds) -> Result<OracleOmegas> {
    mu.check_dim(net.dim())?;
    Ok(Oracle::new(net, bounds)?.achievable(mu)?.clone())
}

/// Basin of `a` decided from the oracle's ω-limit sets: some (p) or every (n)
/// bounded schedule ends inside `a`.
pub fn oracle_basin(net: &Network, a: &StateSet, mode: Mode, bounds: &OracleBounds) -> Result<OracleBasin> {
    a.check_dim(net.dim())?;
    Oracle::new(net, bounds)?.basin(a, mode)
}
