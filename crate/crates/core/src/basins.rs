//! Basins of attraction for sets of states, fixed points, orbits and
//! ω-limit sets, with constructive witness schedules for the p-notions.
//!
//! p-notions ask for some progressive schedule, n-notions quantify over all
//! of them. Both reduce to reachability of fair strongly connected sets in
//! the asynchronous graph (see [`crate::graph`]).

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::bits::{mask, FireSet, State, StateSet};
use crate::error::{Error, Result};
use crate::graph::AsyncGraph;
use crate::network::Network;
use crate::schedule::{flows_eventually_equal, int, omega_limit, orbit_trace, Event, Schedule};

/// What a witness schedule from a member state must achieve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    /// ω_ρ′(μ′) ⊆ set.
    OmegaWithin { set: StateSet },
    /// ω_ρ′(μ′) = set.
    OmegaEquals { set: StateSet },
    /// Φ^ρ′(μ′,·) and Φ^ρ(μ,·) coincide from some time on.
    FlowsLike { from: State, schedule: Schedule },
}

/// Members of a basin. For p-basins every member carries a schedule that
/// realizes the claim; n-basins have no witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BasinResult {
    pub members: StateSet,
    pub witnesses: BTreeMap<State, Schedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim: Option<Claim>,
}

impl BasinResult {
    fn without_witnesses(members: StateSet) -> Self {
        BasinResult { members, witnesses: BTreeMap::new(), claim: None }
    }

    /// Replays every witness through the flow simulator and returns the
    /// members whose witness does not realize the claim.
    pub fn failed_witnesses(&self, net: &Network) -> Result<Vec<State>> {
        let Some(claim) = &self.claim else {
            return Ok(Vec::new());
        };
        let mut bad = Vec::new();
        for m in self.members.iter() {
            let Some(rho) = self.witnesses.get(&m) else {
                bad.push(m);
                continue;
            };
            if !replay(net, m, rho, claim)? {
                bad.push(m);
            }
        }
        Ok(bad)
    }
}

/// Whether `rho` from `from` realizes `claim`.
pub fn replay(net: &Network, from: State, rho: &Schedule, claim: &Claim) -> Result<bool> {
    if !rho.is_progressive() {
        return Ok(false);
    }
    Ok(match claim {
        Claim::OmegaWithin { set } => omega_limit(net, from, rho)?.is_subset(set),
        Claim::OmegaEquals { set } => omega_limit(net, from, rho)? == *set,
        Claim::FlowsLike { from: mu, schedule } => {
            flows_eventually_equal(net, from, rho, *mu, schedule)?.0
        }
    })
}

/// Quantifier over schedules: some (p) or every (n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    P,
    N,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "p" => Ok(Mode::P),
            "n" => Ok(Mode::N),
            other => Err(format!("mode must be p or n, got {other:?}")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::P => "p",
            Mode::N => "n",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attractivity {
    Not,
    Partial,
    Total,
}

impl Attractivity {
    fn of(basin: &StateSet) -> Self {
        if basin.is_empty() {
            Attractivity::Not
        } else if basin.is_full() {
            Attractivity::Total
        } else {
            Attractivity::Partial
        }
    }
}

impl std::fmt::Display for Attractivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Attractivity::Not => "not",
            Attractivity::Partial => "partial",
            Attractivity::Total => "total",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttractivityClass {
    pub p_class: Attractivity,
    pub n_class: Attractivity,
}

fn require_nonempty(net: &Network, a: &StateSet) -> Result<()> {
    a.check_dim(net.dim())?;
    if a.is_empty() {
        Err(Error::EmptySet)
    } else {
        Ok(())
    }
}

fn union_all(dim: usize, sets: &[StateSet]) -> StateSet {
    sets.iter().fold(StateSet::empty(dim), |acc, s| acc.union(s))
}

/// States from which some fair set of the `a`-induced subgraph is reachable.
pub(crate) fn basin_p_members(g: &AsyncGraph, a: &StateSet) -> StateSet {
    let targets = union_all(g.dim(), &g.fair_sccs(a));
    g.backward_closure(&targets, None).0
}

/// States from which no fair set escaping `a` is reachable.
pub(crate) fn basin_n_members(g: &AsyncGraph, a: &StateSet) -> StateSet {
    let full = StateSet::full(g.dim());
    let escaping: Vec<StateSet> =
        g.fair_sccs(&full).into_iter().filter(|c| !c.is_subset(a)).collect();
    g.backward_closure(&union_all(g.dim(), &escaping), None).0.complement()
}

/// W̄(A): the states μ with ω_ρ(μ) ⊆ A for some progressive ρ.
pub fn basin_p(net: &Network, a: &StateSet) -> Result<BasinResult> {
    require_nonempty(net, a)?;
    let g = AsyncGraph::build(net)?;
    let fair = g.fair_sccs(a);
    let targets = union_all(net.dim(), &fair);
    let (members, next_hop) = g.backward_closure(&targets, None);
    let mut covers = CoverCache::new(&g, &fair);
    let mut witnesses = BTreeMap::new();
    for m in members.iter() {
        let mut path = Vec::new();
        let mut cur = m.bits();
        while let Some((lam, next)) = next_hop[cur as usize] {
            path.push((lam, next));
            cur = next;
        }
        witnesses.insert(m, covers.schedule(path, cur));
    }
    Ok(BasinResult { members, witnesses, claim: Some(Claim::OmegaWithin { set: a.clone() }) })
}

/// W̲(A): the states μ with ω_ρ(μ) ⊆ A for every progressive ρ.
pub fn basin_n(net: &Network, a: &StateSet) -> Result<BasinResult> {
    require_nonempty(net, a)?;
    let g = AsyncGraph::build(net)?;
    Ok(BasinResult::without_witnesses(basin_n_members(&g, a)))
}

pub fn attractivity_class(net: &Network, a: &StateSet) -> Result<AttractivityClass> {
    require_nonempty(net, a)?;
    let g = AsyncGraph::build(net)?;
    Ok(AttractivityClass {
        p_class: Attractivity::of(&basin_p_members(&g, a)),
        n_class: Attractivity::of(&basin_n_members(&g, a)),
    })
}

/// W̄[Φ^ρ(μ,·)]: states μ′ with a progressive ρ′ whose flow from μ′ eventually
/// coincides with Φ^ρ(μ,·). These are exactly the states that can reach ω_ρ(μ).
pub fn orbit_basin_p(net: &Network, mu: State, rho: &Schedule) -> Result<BasinResult> {
    let omega = omega_limit(net, mu, rho)?;
    let g = AsyncGraph::build(net)?;
    if net.is_fixed_point(mu) {
        let mut r = basin_p(net, &omega)?;
        r.claim = Some(Claim::FlowsLike { from: mu, schedule: rho.clone() });
        return Ok(r);
    }
    let (members, _) = g.backward_closure(&omega, None);
    let splicer = Splicer::new(net, &g, mu, rho, &omega)?;
    let mut witnesses = BTreeMap::new();
    for m in members.iter() {
        witnesses.insert(m, splicer.schedule_from(m.bits())?);
    }
    Ok(BasinResult {
        members,
        witnesses,
        claim: Some(Claim::FlowsLike { from: mu, schedule: rho.clone() }),
    })
}

/// W̲[Φ^ρ(μ,·)]: states whose flow under every progressive ρ′ eventually
/// coincides with Φ^ρ(μ,·). Only a singleton ω-limit {μ*} can be followed by
/// every schedule; the basin is then W̲(μ*), otherwise empty.
pub fn orbit_basin_n(net: &Network, mu: State, rho: &Schedule) -> Result<BasinResult> {
    let omega = omega_limit(net, mu, rho)?;
    let g = AsyncGraph::build(net)?;
    if omega.len() > 1 {
        return Ok(BasinResult::without_witnesses(StateSet::empty(net.dim())));
    }
    Ok(BasinResult::without_witnesses(basin_n_members(&g, &omega)))
}

/// W̄[ω_ρ(μ)]: states μ′ with ω_ρ′(μ′) = ω_ρ(μ) for some progressive ρ′.
pub fn omega_basin_p(net: &Network, mu: State, rho: &Schedule) -> Result<BasinResult> {
    let omega = omega_limit(net, mu, rho)?;
    if net.is_fixed_point(mu) {
        let mut r = basin_p(net, &omega)?;
        r.claim = Some(Claim::OmegaEquals { set: omega });
        return Ok(r);
    }
    let g = AsyncGraph::build(net)?;
    let (members, next_hop) = g.backward_closure(&omega, None);
    let mut covers = CoverCache::new(&g, std::slice::from_ref(&omega));
    let mut witnesses = BTreeMap::new();
    for m in members.iter() {
        let mut path = Vec::new();
        let mut cur = m.bits();
        while let Some((lam, next)) = next_hop[cur as usize] {
            path.push((lam, next));
            cur = next;
        }
        witnesses.insert(m, covers.schedule(path, cur));
    }
    Ok(BasinResult { members, witnesses, claim: Some(Claim::OmegaEquals { set: omega }) })
}

/// W̲[ω_ρ(μ)]: states μ′ with ω_ρ′(μ′) = ω_ρ(μ) for every progressive ρ′.
pub fn omega_basin_n(net: &Network, mu: State, rho: &Schedule) -> Result<BasinResult> {
    let omega = omega_limit(net, mu, rho)?;
    let g = AsyncGraph::build(net)?;
    if net.is_fixed_point(mu) {
        return Ok(BasinResult::without_witnesses(basin_n_members(&g, &omega)));
    }
    let cap = net.limits().subset_max_dim;
    if net.dim() > cap {
        return Err(Error::DimensionTooLarge {
            dim: net.dim(),
            cap,
            what: "fair subset enumeration",
        });
    }
    Ok(BasinResult::without_witnesses(omega_basin_n_members(&g, &omega)))
}

pub(crate) fn omega_basin_n_members(g: &AsyncGraph, omega: &StateSet) -> StateSet {
    let full = StateSet::full(g.dim());
    let fair = g.fair_sccs(&full);
    // ω must be a whole SCC: a fair proper subset of a larger SCC leaves the
    // larger one achievable too.
    if !fair.contains(omega) || g.has_proper_fair_subset(omega) {
        return StateSet::empty(g.dim());
    }
    let others: Vec<StateSet> = fair.into_iter().filter(|c| c != omega).collect();
    g.backward_closure(&union_all(g.dim(), &others), None).0.complement()
}

/// A progressive schedule ρ′ with ω_ρ′(`from`) = T. With `align_to` = (μ, ρ),
/// T must be ω_ρ(μ) and the flow of ρ′ from `from` eventually coincides with
/// Φ^ρ(μ,·).
pub fn witness_schedule(
    net: &Network,
    from: State,
    t: &StateSet,
    align_to: Option<(State, &Schedule)>,
) -> Result<Schedule> {
    from.check_dim(net.dim())?;
    require_nonempty(net, t)?;
    let g = AsyncGraph::build(net)?;
    if !crate::graph::achievable_check(&g, t, from.bits()) {
        return Err(Error::NotAchievable { from: from.to_string() });
    }
    match align_to {
        Some((mu, rho)) => {
            let omega = omega_limit(net, mu, rho)?;
            if omega != *t {
                return Err(Error::InvalidSchedule(format!(
                    "alignment schedule has ω-limit set {omega}, not {t}"
                )));
            }
            Splicer::new(net, &g, mu, rho, t)?.schedule_from(from.bits())
        }
        None => Ok(witness_in(&g, from.bits(), t).expect("t is reachable")),
    }
}

/// Reach `t` along a shortest path, then cover it forever. `t` must be an
/// achievable ω-limit set; `None` when it is not reachable.
pub(crate) fn witness_in(g: &AsyncGraph, from: u32, t: &StateSet) -> Option<Schedule> {
    let path = g.path_to(from, t, None)?;
    let end = path.last().map_or(from, |&(_, s)| s);
    Some(CoverCache::new(g, std::slice::from_ref(t)).schedule(path, end))
}

/// Closed walks that cover fair sets, memoized per set.
struct CoverCache<'g> {
    g: &'g AsyncGraph,
    sets: &'g [StateSet],
    /// Per set index: root and the closed walk (fire set, next state) from it.
    walks: HashMap<usize, (u32, Vec<(u32, u32)>)>,
}

impl<'g> CoverCache<'g> {
    fn new(g: &'g AsyncGraph, sets: &'g [StateSet]) -> Self {
        CoverCache { g, sets, walks: HashMap::new() }
    }

    /// Events of `path` at times 0, 1, …, then a cycle walking from `end`
    /// (a state of one of the sets) around its set forever.
    fn schedule(&mut self, path: Vec<(u32, u32)>, end: u32) -> Schedule {
        let idx = self
            .sets
            .iter()
            .position(|s| s.contains_raw(end))
            .expect("path ends in a target set");
        let g = self.g;
        let set = &self.sets[idx];
        let (root, walk) = self
            .walks
            .entry(idx)
            .or_insert_with(|| {
                let root = set.iter_raw().next().expect("nonempty");
                (root, covering_walk(g, set, root))
            })
            .clone();
        let mut prefix: Vec<u32> = path.iter().map(|&(l, _)| l).collect();
        prefix.extend(
            g.path_to(end, &StateSet::from_raw_iter(g.dim(), [root]), Some(set))
                .expect("set is strongly connected")
                .iter()
                .map(|&(l, _)| l),
        );
        let cycle: Vec<u32> = walk.iter().map(|&(f, _)| f).collect();
        let dim = g.dim();
        let to_fire = |v: &[u32]| v.iter().map(|&b| FireSet::from_raw(dim, b)).collect::<Vec<_>>();
        Schedule::from_words(&to_fire(&prefix), &to_fire(&cycle)).expect("valid witness")
    }
}

/// A closed walk from `root` inside `set` that visits every state of `set`
/// and fires every coordinate. Each step fires λ together with the stable
/// coordinates of its source, which leaves the target unchanged.
fn covering_walk(g: &AsyncGraph, set: &StateSet, root: u32) -> Vec<(u32, u32)> {
    let full = mask(g.dim());
    // One internal edge per coordinate whose capability contains it.
    let mut needed: Vec<(u32, u32, u32)> = Vec::new();
    let mut covered = 0u32;
    for x in set.iter_raw() {
        for &(l, y) in g.out_raw(x) {
            let fire = l | g.stable_raw(x);
            if set.contains_raw(y) && fire & !covered != 0 {
                covered |= fire;
                needed.push((x, fire, y));
            }
        }
    }
    debug_assert_eq!(covered, full, "covering walk needs a fair set");

    let mut walk: Vec<(u32, u32)> = Vec::new();
    let mut cur = root;
    let step_to = |walk: &mut Vec<(u32, u32)>, cur: &mut u32, target: u32| {
        let path = g
            .path_to(*cur, &StateSet::from_raw_iter(g.dim(), [target]), Some(set))
            .expect("set is strongly connected");
        for (l, y) in path {
            walk.push((l | g.stable_raw(*cur), y));
            *cur = y;
        }
    };
    for x in set.iter_raw() {
        step_to(&mut walk, &mut cur, x);
    }
    for &(x, fire, y) in &needed {
        step_to(&mut walk, &mut cur, x);
        walk.push((fire, y));
        cur = y;
    }
    step_to(&mut walk, &mut cur, root);
    walk
}

/// Builds schedules whose flows join Φ^ρ(μ,·) on its periodic tail.
struct Splicer<'a> {
    g: &'a AsyncGraph,
    rho: &'a Schedule,
    omega: &'a StateSet,
    /// First tail interval start time for each ω state.
    join_time: BTreeMap<u32, crate::schedule::Rational>,
}

impl<'a> Splicer<'a> {
    fn new(
        net: &Network,
        g: &'a AsyncGraph,
        mu: State,
        rho: &'a Schedule,
        omega: &'a StateSet,
    ) -> Result<Self> {
        let (trace, _) = orbit_trace(net, mu, rho)?;
        let mut join_time = BTreeMap::new();
        let mut t = trace.tail.entry_time;
        for &(s, dwell) in &trace.tail.states {
            join_time.entry(s.bits()).or_insert(t);
            t += dwell;
        }
        Ok(Splicer { g, rho, omega, join_time })
    }

    /// Walks from `from` to the nearest ω state μ″, timing the last step at
    /// the start t₂ of an interval where Φ^ρ(μ,t₂) = μ″, then follows ρ after t₂.
    fn schedule_from(&self, from: u32) -> Result<Schedule> {
        let path = self
            .g
            .path_to(from, self.omega, None)
            .ok_or_else(|| Error::NotAchievable { from: State::from_raw(self.g.dim(), from).to_string() })?;
        let end = path.last().map_or(from, |&(_, s)| s);
        let t2 = self.join_time[&end];
        let len = path.len() as i64;
        let dim = self.g.dim();
        let lead: Vec<Event> = path
            .iter()
            .enumerate()
            .map(|(j, &(l, _))| Event::new(t2 - int(len - 1 - j as i64), FireSet::from_raw(dim, l)))
            .collect();
        self.rho.restrict_after(t2).with_leading_events(&lead)
    }
}

/// Predecessor closure by fixpoint iteration, independent of the graph module.
/// Which n-basin inclusion a strictness witness is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    /// W̲[Φ^ρ(μ,·)] ⊆ W̲(Or_ρ(μ)).
    Orbit,
    /// W̲[ω_ρ(μ)] ⊆ W̲(ω_ρ(μ)).
    Omega,
}

impl std::str::FromStr for Inclusion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "orbit" => Ok(Inclusion::Orbit),
            "omega" => Ok(Inclusion::Omega),
            other => Err(format!("inclusion must be orbit or omega, got {other:?}")),
        }
    }
}

/// Both sides of an n-basin inclusion at one (μ, ρ).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InclusionInstance {
    pub inclusion: Inclusion,
    pub mu: State,
    pub schedule: Schedule,
    /// W̲[Φ^ρ(μ,·)] or W̲[ω_ρ(μ)].
    pub inner: StateSet,
    /// W̲(Or_ρ(μ)) or W̲(ω_ρ(μ)).
    pub outer: StateSet,
}

impl InclusionInstance {
    pub fn holds(&self) -> bool {
        self.inner.is_subset(&self.outer)
    }

    pub fn is_strict(&self) -> bool {
        self.holds() && self.inner != self.outer
    }
}

pub fn inclusion_instance(
    net: &Network,
    inclusion: Inclusion,
    mu: State,
    rho: &Schedule,
) -> Result<InclusionInstance> {
    let (inner, target) = match inclusion {
        Inclusion::Orbit => (orbit_basin_n(net, mu, rho)?.members, orbit_trace(net, mu, rho)?.1),
        Inclusion::Omega => (omega_basin_n(net, mu, rho)?.members, omega_limit(net, mu, rho)?),
    };
    let outer = basin_n(net, &target)?.members;
    Ok(InclusionInstance { inclusion, mu, schedule: rho.clone(), inner, outer })
}

/// The first (μ, ρ), μ in increasing order and ρ in the given order, at which
/// the inclusion is strict.
pub fn find_strict_inclusion(
    net: &Network,
    inclusion: Inclusion,
    schedules: &[Schedule],
) -> Result<Option<InclusionInstance>> {
    for mu in net.states() {
        for rho in schedules {
            let inst = inclusion_instance(net, inclusion, mu, rho)?;
            if inst.is_strict() {
                return Ok(Some(inst));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
fn reverse_reachable(net: &Network, targets: &StateSet) -> StateSet {
    let mut seen = targets.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for mu in net.states() {
            if seen.contains(mu) {
                continue;
            }
            let u = net.unstable_set(mu).unwrap().bits();
            let mut l = u;
            loop {
                if seen.contains(net.apply_fire_set(mu, FireSet::from_raw(net.dim(), l)).unwrap()) {
                    seen.insert(mu);
                    changed = true;
                    break;
                }
                if l == 0 {
                    break;
                }
                l = (l - 1) & u;
            }
        }
    }
    seen
}
