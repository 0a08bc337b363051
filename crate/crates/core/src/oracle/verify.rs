//! Exhaustive property checking for one network.
//!
//! Two routes are kept apart: the schedule, graph and basin modules run on
//! the network under test, while the brute-force oracle, the word simulator
//! and event-by-event flow folding run on the reference network. The two
//! networks are identical unless a mutation is injected to exercise the
//! harness itself.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{enumerate_schedules, simulate_words, Oracle, OracleBounds};
use crate::basins::{self, basin_n_members, basin_p_members, Attractivity};
use crate::bits::{mask, FireSet, State, StateSet};
use crate::error::{Error, Result};
use crate::graph::{achievable_check, achievable_in, p_invariant_in, AsyncGraph};
use crate::network::Network;
use crate::schedule::{int, orbit_trace, rat, Event, OrbitTrace, Rational, Schedule};

/// Most witness replays per initial state; larger families are sampled evenly.
const WITNESS_SAMPLE: usize = 48;

macro_rules! checks {
    ($($variant:ident => $name:literal, $desc:literal;)*) => {
        /// The properties evaluated by [`verify_theorems`].
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Check {
            $($variant,)*
        }

        impl Check {
            pub const ALL: &'static [Check] = &[$(Check::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Check::$variant => $name,)*
                }
            }

            pub fn describe(self) -> &'static str {
                match self {
                    $(Check::$variant => $desc,)*
                }
            }
        }
    };
}

checks! {
    OmegaDualRoute => "omega_dual_route",
        "orbit and ω-limit set from the schedule module equal those of the word simulator";
    OmegaNonempty => "omega_nonempty", "every ω-limit set is nonempty";
    OmegaIsTail => "omega_is_tail",
        "ω ⊆ orbit, and ω equals the set of flow values over one period after the tail entry";
    SingletonLimitIsFixed => "singleton_limit_is_fixed",
        "card(ω)=1 iff the flow is eventually constant, and then the limit is a fixed point";
    ReachedFixedPointAbsorbs => "reached_fixed_point_absorbs",
        "a fixed point on the orbit is kept forever once reached and is the whole ω";
    FixedStartConstant => "fixed_start_constant", "a flow starting at a fixed point never moves";
    TranslationInvariance => "translation_invariance",
        "shifting a schedule by d shifts its flow by d and keeps ω";
    RestrictionFactorization => "restriction_factorization",
        "after t′ the flow equals the flow from its value at t′ under the schedule restricted to (t′,∞)";
    RestrictionCocycle => "restriction_cocycle",
        "restricting after t′ and restarting from the value at t′ keeps ω and progressiveness";
    OmegaAchievableInGraph => "omega_achievable_in_graph",
        "every simulated ω is fair, strongly connected and reachable in the transition graph";
    OrbitPInvariant => "orbit_p_invariant", "every orbit is p-invariant";
    OmegaPInvariant => "omega_p_invariant", "every ω-limit set is p-invariant";
    OrbitBasinPEqualsOmegaBasinP => "orbit_basin_p_equals_omega_basin_p",
        "p-basin of a flow equals p-basin of its ω-limit set";
    OrbitInOrbitBasin => "orbit_in_orbit_basin", "the orbit lies in the p-basin of its flow";
    OrbitBasinNWithinOmegaBasinN => "orbit_basin_n_within_omega_basin_n",
        "n-basin of a flow lies in the n-basin of its ω-limit set";
    OrbitBasinNNonemptyIffSingleton => "orbit_basin_n_nonempty_iff_singleton",
        "n-basin of a flow is nonempty iff its ω-limit set is a single state";
    SingletonOmegaBasinsEqual => "singleton_omega_basins_equal",
        "for ω={μ*}: n-basin of the flow = n-basin of ω = n-basin of μ*";
    OrbitBasinPEqualsSetBasin => "orbit_basin_p_equals_set_basin",
        "p-basin of a flow equals the p-basin of its orbit as a set";
    OrbitBasinNWithinSetBasin => "orbit_basin_n_within_set_basin",
        "n-basin of a flow lies in the n-basin of its orbit as a set";
    OmegaBasinPEqualsSetBasin => "omega_basin_p_equals_set_basin",
        "p-basin of ω equals the p-basin of ω as a set";
    OmegaBasinNWithinSetBasin => "omega_basin_n_within_set_basin",
        "n-basin of ω lies in the n-basin of ω as a set";
    OrbitBasinInvariant => "orbit_basin_invariant",
        "flow p-basins are p-invariant; nonempty flow and ω n-basins are n-invariant";
    FixedPointBasinsCoincide => "fixed_point_basins_coincide",
        "from a fixed point, point, flow and ω basins coincide in both modes";
    OrbitWitnessReplay => "orbit_witness_replay",
        "every flow and ω p-basin witness replays to the claimed relation";
    OmegaBasinOracle => "omega_basin_oracle",
        "ω p- and n-basins agree with a certified oracle and are bounded by an uncertified one";
    PInvarianceOracle => "p_invariance_oracle",
        "a set the oracle shows p-invariant (some orbit stays inside) is p-invariant";
    NInvarianceLocal => "n_invariance_local",
        "n-invariance equals closure under every single fire set";
    NInvarianceOracle => "n_invariance_oracle",
        "every orbit the oracle finds stays inside an n-invariant set";
    NInvariantImpliesP => "n_invariant_implies_p", "n-invariant sets are p-invariant";
    BasinOracle => "basin_oracle",
        "set p- and n-basins agree with a certified oracle and are bounded by an uncertified one";
    BasinMonotone => "basin_monotone", "basins grow with the set";
    FullSetBasin => "full_set_basin", "both basins of the full state space are everything";
    BasinNWithinBasinP => "basin_n_within_basin_p", "n-basin ⊆ p-basin";
    InvariantWithinBasin => "invariant_within_basin",
        "a p-invariant (n-invariant) set lies in its p-basin (n-basin)";
    BasinInvariant => "basin_invariant",
        "nonempty p-basins are p-invariant and nonempty n-basins are n-invariant";
    AttractivityConsistent => "attractivity_consistent",
        "attractivity classes match basin emptiness and fullness";
    BasinWitnessReplay => "basin_witness_replay", "every set p-basin witness replays";
    FixedPointGate => "fixed_point_gate",
        "a point basin is nonempty iff the point is fixed, in both modes";
    FixedPointBasinChain => "fixed_point_basin_chain",
        "for fixed μ: {μ} ⊆ n-basin ⊆ p-basin, both invariant in their mode";
    SingletonFairIffFixed => "singleton_fair_iff_fixed", "a single state is a fair set iff it is fixed";
    FixedPointsNInvariant => "fixed_points_n_invariant",
        "each fixed point and the set of all fixed points are n-invariant";
    ReachableNInvariant => "reachable_n_invariant", "the union of all orbits from μ is n-invariant";
    AchievableOracle => "achievable_oracle",
        "the oracle's ω-limit sets are graph-achievable, and all of them when certified";
    AchievableWitness => "achievable_witness",
        "every graph-achievable ω-limit set is produced by its witness schedule in the word simulator";
    AchievableNonempty => "achievable_nonempty", "some ω-limit set is achievable from every state";
    AchievablePInvariant => "achievable_p_invariant", "every achievable ω-limit set is p-invariant";
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Check {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl std::str::FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check {s:?}"))
    }
}

/// Everything needed to rerun a failed check in isolation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub check: Check,
    pub dim: usize,
    /// Φ(μ) for μ = 0…0, 0…01, … in order.
    pub table: Vec<State>,
    /// Row replaced in the network under test, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation: Option<(State, State)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<State>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<StateSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_bounds: Option<OracleBounds>,
    pub detail: String,
}

impl Counterexample {
    pub fn network(&self) -> Result<Network> {
        Network::new(self.dim, self.table.iter().map(|s| s.bits()).collect())
    }

    /// Reruns the recorded check on the recorded inputs only; true when it
    /// fails again.
    pub fn replay(&self) -> Result<bool> {
        let net = self.network()?;
        let cfg = VerifyConfig {
            oracle: self.oracle_bounds.clone(),
            oracle_max_cycle_len: self.oracle_bounds.as_ref().map_or(0, |b| b.max_cycle_len),
            schedules: self.schedule.iter().cloned().map(|s| ScheduleSource::List(vec![s])).collect(),
            sets: SetSource::List(self.set.iter().cloned().collect()),
            states: self.mu.map(|m| vec![m]),
            mutation: self.mutation,
            ..VerifyConfig::graph_only(self.dim)
        };
        let report = verify_theorems_with(&net, &cfg)?;
        Ok(report.tallies.get(&self.check).is_some_and(|t| t.failed > 0))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CheckTally {
    pub passed: u64,
    pub failed: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerificationReport {
    pub networks: u64,
    pub tallies: BTreeMap<Check, CheckTally>,
    pub counterexamples: Vec<Counterexample>,
    /// Every oracle consulted had stabilized ω-limit sets.
    pub oracle_stabilized: bool,
    /// Every oracle consulted was certified complete, so oracle comparisons
    /// were equalities rather than inclusions.
    pub oracle_certified: bool,
    /// Initial states whose oracle result claimed stabilization yet missed
    /// graph-achievable sets that their witnesses do produce. The bounded
    /// search is incomplete there; this is not counted as a failure.
    pub stabilization_gaps: u64,
}

impl VerificationReport {
    pub fn failures(&self) -> u64 {
        self.tallies.values().map(|t| t.failed).sum()
    }

    pub fn evaluations(&self) -> u64 {
        self.tallies.values().map(|t| t.passed + t.failed).sum()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn merge(&mut self, other: VerificationReport) {
        if self.networks == 0 {
            self.oracle_stabilized = other.oracle_stabilized;
            self.oracle_certified = other.oracle_certified;
        } else {
            self.oracle_stabilized &= other.oracle_stabilized;
            self.oracle_certified &= other.oracle_certified;
        }
        self.networks += other.networks;
        self.stabilization_gaps += other.stabilization_gaps;
        for (c, t) in other.tallies {
            let e = self.tallies.entry(c).or_default();
            e.passed += t.passed;
            e.failed += t.failed;
        }
        self.counterexamples.extend(other.counterexamples);
    }
}

/// Where per-flow instances come from.
#[derive(Debug, Clone)]
pub enum ScheduleSource {
    /// Every canonical integer-time schedule within the bounds.
    Enumerate(OracleBounds),
    /// Random progressive schedules with rational event times.
    Random { count: usize, max_prefix_len: usize, max_cycle_len: usize, seed: u64 },
    List(Vec<Schedule>),
}

/// Which sets A the set-level checks visit.
#[derive(Debug, Clone)]
pub enum SetSource {
    /// Every nonempty subset of B^n.
    All,
    Random { count: usize, seed: u64 },
    List(Vec<StateSet>),
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Oracle bounds; `None` runs the graph-side checks only.
    pub oracle: Option<OracleBounds>,
    /// The oracle's bounds grow until stabilized, up to this cycle length.
    pub oracle_max_cycle_len: usize,
    pub schedules: Vec<ScheduleSource>,
    pub sets: SetSource,
    /// Initial states for the per-state and per-flow checks; `None` means all.
    pub states: Option<Vec<State>>,
    /// Time shifts for the translation checks.
    pub shifts: Vec<Rational>,
    /// Replaces Φ(μ) in the network under test by the given value.
    pub mutation: Option<(State, State)>,
    pub max_counterexamples_per_check: usize,
}

impl VerifyConfig {
    /// No oracle, a handful of random rational-time schedules, and all sets
    /// for n ≤ 3 (64 random sets beyond).
    pub fn graph_only(dim: usize) -> Self {
        VerifyConfig {
            oracle: None,
            oracle_max_cycle_len: 0,
            schedules: vec![
                ScheduleSource::List(vec![Schedule::synchronous(dim)]),
                ScheduleSource::Random { count: 6, max_prefix_len: 3, max_cycle_len: 4, seed: 1 },
            ],
            sets: if dim <= 3 { SetSource::All } else { SetSource::Random { count: 64, seed: 2 } },
            states: None,
            shifts: vec![rat(7, 3), rat(-5, 2)],
            mutation: None,
            max_counterexamples_per_check: 3,
        }
    }

    /// Oracle at `bounds`, flows over every enumerated schedule within
    /// `bounds` plus a few random rational-time ones.
    pub fn with_oracle(dim: usize, bounds: OracleBounds) -> Self {
        let mut cfg = VerifyConfig::graph_only(dim);
        cfg.oracle_max_cycle_len = bounds.max_cycle_len;
        cfg.schedules.insert(0, ScheduleSource::Enumerate(bounds.clone()));
        cfg.oracle = Some(bounds);
        cfg
    }
}

/// Runs every check on `net`. Up to n = 3 this includes the oracle at
/// `bounds` and every enumerated schedule within them; from n = 4 on only
/// graph-side checks run, over random schedules and 64 random sets.
pub fn verify_theorems(net: &Network, bounds: &OracleBounds) -> Result<VerificationReport> {
    let cfg = if net.dim() <= 3 {
        VerifyConfig::with_oracle(net.dim(), bounds.clone())
    } else {
        VerifyConfig::graph_only(net.dim())
    };
    verify_theorems_with(net, &cfg)
}

pub fn verify_theorems_with(net: &Network, cfg: &VerifyConfig) -> Result<VerificationReport> {
    let cap = net.limits().subset_max_dim;
    if net.dim() > cap {
        return Err(Error::DimensionTooLarge { dim: net.dim(), cap, what: "theorem verification" });
    }
    let tested = match cfg.mutation {
        None => net.clone(),
        Some((at, to)) => {
            at.check_dim(net.dim())?;
            to.check_dim(net.dim())?;
            let mut table = net.table().to_vec();
            table[at.bits() as usize] = to.bits();
            Network::with_limits(net.dim(), table, *net.limits())?
        }
    };
    let oracle = match &cfg.oracle {
        Some(b) => Some(Oracle::grow_until_stable(net, b, cfg.oracle_max_cycle_len.max(b.max_cycle_len))?),
        None => None,
    };
    let mut v = Verifier {
        reference: net,
        tested: &tested,
        g: AsyncGraph::build(&tested)?,
        oracle,
        cfg,
        report: VerificationReport { networks: 1, ..Default::default() },
        p_inv_cache: HashMap::new(),
        bp_cache: HashMap::new(),
        bn_cache: HashMap::new(),
        seen_keys: HashSet::new(),
    };
    if let Some(o) = &v.oracle {
        v.report.oracle_stabilized = o.stabilized();
        v.report.oracle_certified = o.certified();
    }
    v.state_checks()?;
    v.set_checks()?;
    v.flow_checks()?;
    Ok(v.report)
}

struct Verifier<'a> {
    reference: &'a Network,
    tested: &'a Network,
    g: AsyncGraph,
    oracle: Option<Oracle>,
    cfg: &'a VerifyConfig,
    report: VerificationReport,
    p_inv_cache: HashMap<StateSet, bool>,
    bp_cache: HashMap<StateSet, StateSet>,
    bn_cache: HashMap<StateSet, StateSet>,
    seen_keys: HashSet<(State, StateSet, StateSet)>,
}

/// Inputs attached to a counterexample.
#[derive(Default, Clone)]
struct Ctx {
    mu: Option<State>,
    schedule: Option<Schedule>,
    set: Option<StateSet>,
}

impl Verifier<'_> {
    fn dim(&self) -> usize {
        self.reference.dim()
    }

    fn record(&mut self, check: Check, ok: bool, ctx: &Ctx, detail: impl FnOnce() -> String) {
        let tally = self.report.tallies.entry(check).or_default();
        if ok {
            tally.passed += 1;
            return;
        }
        tally.failed += 1;
        let already = self.report.counterexamples.iter().filter(|c| c.check == check).count();
        if already >= self.cfg.max_counterexamples_per_check {
            return;
        }
        let dim = self.dim();
        self.report.counterexamples.push(Counterexample {
            check,
            dim,
            table: self.reference.table().iter().map(|&b| State::new(dim, b).expect("in range")).collect(),
            mutation: self.cfg.mutation,
            mu: ctx.mu,
            schedule: ctx.schedule.clone(),
            set: ctx.set.clone(),
            oracle_bounds: self.oracle.as_ref().map(|o| o.bounds().clone()),
            detail: detail(),
        });
    }

    fn states(&self) -> Vec<State> {
        match &self.cfg.states {
            Some(v) => v.clone(),
            None => self.reference.states().collect(),
        }
    }

    fn p_inv(&mut self, a: &StateSet) -> bool {
        if let Some(&b) = self.p_inv_cache.get(a) {
            return b;
        }
        let b = !a.is_empty() && p_invariant_in(&self.g, a);
        self.p_inv_cache.insert(a.clone(), b);
        b
    }

    fn n_inv(&self, a: &StateSet) -> bool {
        crate::graph::is_n_invariant(self.tested, a).unwrap_or(false)
    }

    fn bp(&mut self, a: &StateSet) -> StateSet {
        if let Some(b) = self.bp_cache.get(a) {
            return b.clone();
        }
        let b = basin_p_members(&self.g, a);
        self.bp_cache.insert(a.clone(), b.clone());
        b
    }

    fn bn(&mut self, a: &StateSet) -> StateSet {
        if let Some(b) = self.bn_cache.get(a) {
            return b.clone();
        }
        let b = basin_n_members(&self.g, a);
        self.bn_cache.insert(a.clone(), b.clone());
        b
    }

    fn state_checks(&mut self) -> Result<()> {
        let dim = self.dim();
        let fixed = self.tested.fixed_points();
        if self.cfg.states.is_none() && !fixed.is_empty() {
            let ok = self.n_inv(&fixed);
            let ctx = Ctx { set: Some(fixed.clone()), ..Ctx::default() };
            self.record(Check::FixedPointsNInvariant, ok, &ctx, || "fixed point set escapes".into());
        }
        let limit = self.tested.limits().subset_max_results;
        for mu in self.states() {
            let ctx = Ctx { mu: Some(mu), ..Ctx::default() };
            let achievable = achievable_in(&self.g, mu.bits(), limit)?;
            self.record(Check::AchievableNonempty, !achievable.is_empty(), &ctx, || {
                "no achievable ω-limit set".into()
            });
            for t in &achievable {
                let ok = self.p_inv(t);
                let ctx = Ctx { mu: Some(mu), set: Some(t.clone()), ..Ctx::default() };
                self.record(Check::AchievablePInvariant, ok, &ctx, || format!("{{{t}}} is not p-invariant"));
            }
            // sufficiency side, independent of any bound
            let step = achievable.len().div_ceil(WITNESS_SAMPLE).max(1);
            let mut missing = BTreeSet::new();
            if let Some(o) = &self.oracle {
                let res = o.achievable(mu)?;
                missing = achievable.difference(&res.omegas).cloned().collect();
                let ok = if res.certified { res.omegas == achievable } else { res.omegas.is_subset(&achievable) };
                let detail = format!("oracle {:?} vs graph {:?}", res.omegas, achievable);
                self.record(Check::AchievableOracle, ok, &ctx, || detail);
            }
            let mut gaps_confirmed = true;
            for (i, t) in achievable.iter().enumerate() {
                let is_missing = missing.contains(t);
                if i % step != 0 && !is_missing {
                    continue;
                }
                let produced = self.witness_omega(mu, t)?;
                gaps_confirmed &= !is_missing || produced.as_ref() == Some(t);
                let ctx = Ctx { mu: Some(mu), set: Some(t.clone()), ..Ctx::default() };
                self.record(Check::AchievableWitness, produced.as_ref() == Some(t), &ctx, || {
                    format!("witness gives {produced:?}")
                });
            }
            if let Some(o) = &self.oracle {
                if o.achievable(mu)?.stabilized && !missing.is_empty() && gaps_confirmed {
                    self.report.stabilization_gaps += 1;
                }
            }

            let reach = self.g.forward_closure(&StateSet::singleton(mu), None);
            let ok = self.n_inv(&reach);
            self.record(Check::ReachableNInvariant, ok, &ctx, || format!("reachable set {{{reach}}} escapes"));

            let single = StateSet::singleton(mu);
            let is_fixed = self.tested.is_fixed_point(mu);
            let fair = self.g.is_fair(&single);
            self.record(Check::SingletonFairIffFixed, fair == is_fixed, &ctx, || {
                format!("fair={fair} fixed={is_fixed}")
            });

            let bp = self.bp(&single);
            let bn = self.bn(&single);
            let ok = (!bp.is_empty() == is_fixed) && (!bn.is_empty() == is_fixed);
            self.record(Check::FixedPointGate, ok, &ctx, || {
                format!("fixed={is_fixed} p-basin {{{bp}}} n-basin {{{bn}}}")
            });
            if is_fixed {
                let ok = single.is_subset(&bn)
                    && bn.is_subset(&bp)
                    && self.p_inv(&bp)
                    && self.n_inv(&bn)
                    && self.n_inv(&single);
                self.record(Check::FixedPointBasinChain, ok, &ctx, || {
                    format!("p-basin {{{bp}}} n-basin {{{bn}}}")
                });
            }
        }
        debug_assert_eq!(dim, self.tested.dim());
        Ok(())
    }

    /// ω-limit set the word simulator gives for the witness schedule of `t`
    /// from `mu`; `None` when no witness can be built.
    fn witness_omega(&self, mu: State, t: &StateSet) -> Result<Option<StateSet>> {
        let Some(rho) = basins::witness_in(&self.g, mu.bits(), t) else {
            return Ok(None);
        };
        let prefix: Vec<FireSet> = rho.prefix().iter().map(|e| e.fire).collect();
        let cycle: Vec<FireSet> = rho.cycle().iter().map(|e| e.fire).collect();
        Ok(Some(simulate_words(self.reference, mu, &prefix, &cycle)?.1))
    }

    fn sets(&self) -> Result<Vec<StateSet>> {
        let dim = self.dim();
        Ok(match &self.cfg.sets {
            SetSource::All if dim > 4 => {
                return Err(Error::DimensionTooLarge { dim, cap: 4, what: "exhaustive set checks" })
            }
            SetSource::All => {
                let top = if dim == 6 { u64::MAX } else { (1u64 << (1 << dim)) - 1 };
                (1..=top).map(|m| StateSet::from_mask(dim, m)).collect()
            }
            SetSource::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut out = vec![StateSet::full(dim)];
                while out.len() < *count {
                    let s = StateSet::from_raw_iter(dim, (0..1u32 << dim).filter(|_| rng.gen_bool(0.3)));
                    if !s.is_empty() {
                        out.push(s);
                    }
                }
                out
            }
            SetSource::List(v) => v.clone(),
        })
    }

    fn set_checks(&mut self) -> Result<()> {
        let dim = self.dim();
        let size = 1u32 << dim;
        for a in self.sets()? {
            let ctx = Ctx { set: Some(a.clone()), ..Ctx::default() };
            let bp = self.bp(&a);
            let bn = self.bn(&a);
            let pinv = self.p_inv(&a);
            let ninv = self.n_inv(&a);

            self.record(Check::BasinNWithinBasinP, bn.is_subset(&bp), &ctx, || {
                format!("n-basin {{{bn}}} p-basin {{{bp}}}")
            });
            if a.is_full() {
                let ok = bp.is_full() && bn.is_full();
                self.record(Check::FullSetBasin, ok, &ctx, || format!("{{{bp}}} / {{{bn}}}"));
            }
            for s in 0..size {
                if a.contains_raw(s) {
                    continue;
                }
                let mut bigger = a.clone();
                bigger.insert_raw(s);
                let (bp2, bn2) = (self.bp(&bigger), self.bn(&bigger));
                let ok = bp.is_subset(&bp2) && bn.is_subset(&bn2);
                let detail = format!("adding {} shrinks a basin", State::new(dim, s).expect("in range"));
                self.record(Check::BasinMonotone, ok, &ctx, || detail);
            }

            // closure under every fire set, straight from the table
            let local = a.iter().all(|mu| {
                (0..size).all(|l| {
                    let nu = FireSet::new(dim, l).expect("in range");
                    a.contains(self.tested.apply_fire_set(mu, nu).expect("dims match"))
                })
            });
            self.record(Check::NInvarianceLocal, local == ninv, &ctx, || {
                format!("graph {ninv} local {local}")
            });
            self.record(Check::NInvariantImpliesP, !ninv || pinv, &ctx, || "n- but not p-invariant".into());
            let ok = (!pinv || a.is_subset(&bp)) && (!ninv || a.is_subset(&bn));
            self.record(Check::InvariantWithinBasin, ok, &ctx, || {
                format!("p-inv {pinv} n-inv {ninv} p-basin {{{bp}}} n-basin {{{bn}}}")
            });
            let ok = (bp.is_empty() || self.p_inv(&bp)) && (bn.is_empty() || self.n_inv(&bn));
            self.record(Check::BasinInvariant, ok, &ctx, || format!("p-basin {{{bp}}} n-basin {{{bn}}}"));

            let class = basins::attractivity_class(self.tested, &a)?;
            let of = |b: &StateSet| {
                if b.is_empty() {
                    Attractivity::Not
                } else if b.is_full() {
                    Attractivity::Total
                } else {
                    Attractivity::Partial
                }
            };
            let ok = class.p_class == of(&bp) && class.n_class == of(&bn);
            self.record(Check::AttractivityConsistent, ok, &ctx, || format!("{class:?}"));

            let with_witnesses = basins::basin_p(self.tested, &a)?;
            let bad = with_witnesses.failed_witnesses(self.reference)?;
            self.record(Check::BasinWitnessReplay, bad.is_empty(), &ctx, || {
                format!("witnesses fail from {bad:?}")
            });

            if let Some(o) = &self.oracle {
                let op = o.basin(&a, basins::Mode::P)?;
                let on = o.basin(&a, basins::Mode::N)?;
                // some orbit stays in A / every orbit stays in A, per member
                let mut some_all = true;
                let mut every_all = true;
                for mu in a.iter() {
                    let r = o.achievable(mu)?;
                    some_all &= r.orbits.iter().any(|or| or.is_subset(&a));
                    every_all &= r.orbits.iter().all(|or| or.is_subset(&a));
                }

                let ok = if o.certified() {
                    op.members == bp && on.members == bn
                } else {
                    op.members.is_subset(&bp) && bn.is_subset(&on.members)
                };
                let detail = format!(
                    "oracle p {{{}}} n {{{}}} vs graph p {{{bp}}} n {{{bn}}}",
                    op.members, on.members
                );
                self.record(Check::BasinOracle, ok, &ctx, || detail);
                let ok = !some_all || pinv;
                self.record(Check::PInvarianceOracle, ok, &ctx, || {
                    format!("oracle {some_all} graph {pinv}")
                });
                let ok = !ninv || every_all;
                self.record(Check::NInvarianceOracle, ok, &ctx, || {
                    format!("oracle {every_all} graph {ninv}")
                });
            }
        }
        Ok(())
    }

    fn schedules(&self) -> Result<Vec<Schedule>> {
        let dim = self.dim();
        let mut out = Vec::new();
        for src in &self.cfg.schedules {
            match src {
                ScheduleSource::Enumerate(b) => out.extend(enumerate_schedules(dim, b)?),
                ScheduleSource::Random { count, max_prefix_len, max_cycle_len, seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    for _ in 0..*count {
                        out.push(random_schedule(dim, &mut rng, *max_prefix_len, *max_cycle_len));
                    }
                }
                ScheduleSource::List(v) => out.extend(v.iter().cloned()),
            }
        }
        Ok(out)
    }

    fn flow_checks(&mut self) -> Result<()> {
        let schedules = self.schedules()?;
        for rho in &schedules {
            if rho.dim() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.dim() });
            }
            for mu in self.states() {
                self.flow_instance(mu, rho)?;
            }
        }
        Ok(())
    }

    fn flow_instance(&mut self, mu: State, rho: &Schedule) -> Result<()> {
        let ctx = Ctx { mu: Some(mu), schedule: Some(rho.clone()), set: None };
        let (trace, orbit) = orbit_trace(self.tested, mu, rho)?;
        let omega = trace.tail_set();

        let prefix: Vec<FireSet> = rho.prefix().iter().map(|e| e.fire).collect();
        let cycle: Vec<FireSet> = rho.cycle().iter().map(|e| e.fire).collect();
        let (sim_orbit, sim_omega) = simulate_words(self.reference, mu, &prefix, &cycle)?;
        let ok = sim_orbit == orbit && sim_omega == omega;
        self.record(Check::OmegaDualRoute, ok, &ctx, || {
            format!("schedule module Or {{{orbit}}} ω {{{omega}}}, simulator Or {{{sim_orbit}}} ω {{{sim_omega}}}")
        });
        self.record(Check::OmegaNonempty, !omega.is_empty(), &ctx, || "empty ω".into());

        let samples = sample_times(rho, &trace);
        let values = brute_flow(self.reference, mu, rho, &samples);
        let entry = trace.tail.entry_time;
        let period = trace.tail.period;
        let mut tail_values = StateSet::empty(self.dim());
        for (&t, &x) in samples.iter().zip(&values) {
            if t >= entry && t < entry + period {
                tail_values.insert(x);
            }
        }
        let ok = omega.is_subset(&orbit) && tail_values == omega;
        self.record(Check::OmegaIsTail, ok, &ctx, || {
            format!("ω {{{omega}}}, values after entry {{{tail_values}}}, orbit {{{orbit}}}")
        });

        let constant = trace.tail.states.len() == 1;
        let single_ok = (omega.len() == 1) == constant
            && (omega.len() != 1 || self.tested.is_fixed_point(omega.first().expect("nonempty")));
        self.record(Check::SingletonLimitIsFixed, single_ok, &ctx, || {
            format!("ω {{{omega}}}, tail {:?}", trace.tail.states)
        });

        for fixed in orbit.iter().filter(|&s| self.tested.is_fixed_point(s)) {
            let first_hit = values.iter().position(|&x| x == fixed);
            let absorbs = first_hit.is_some_and(|i| values[i..].iter().all(|&x| x == fixed));
            let ok = omega == StateSet::singleton(fixed) && absorbs;
            self.record(Check::ReachedFixedPointAbsorbs, ok, &ctx, || {
                format!("fixed point {fixed} on the orbit, ω {{{omega}}}")
            });
        }
        if self.tested.is_fixed_point(mu) {
            let ok = orbit == StateSet::singleton(mu);
            self.record(Check::FixedStartConstant, ok, &ctx, || format!("orbit {{{orbit}}}"));
        }

        for &d in &self.cfg.shifts {
            let shifted = rho.translate(d);
            let (trace_d, _) = orbit_trace(self.tested, mu, &shifted)?;
            let ok = trace_d.tail_set() == omega
                && samples.iter().all(|&t| trace_d.value_at(t + d) == trace.value_at(t));
            self.record(Check::TranslationInvariance, ok, &ctx, || format!("shift {d}"));
        }

        let picks: BTreeSet<Rational> = [0, samples.len() / 3, 2 * samples.len() / 3, samples.len() - 1]
            .iter()
            .map(|&i| samples[i])
            .collect();
        for t1 in picks {
            let from = trace.value_at(t1);
            let rest = rho.restrict_after(t1);
            let ok_prog = rest.is_progressive() && rest.events().next().is_some_and(|e| e.time > t1);
            let (trace_r, _) = orbit_trace(self.tested, from, &rest)?;
            let cocycle = ok_prog && trace_r.tail_set() == omega;
            self.record(Check::RestrictionCocycle, cocycle, &ctx, || {
                format!("restricting after {t1}: ω {{{}}} vs {{{omega}}}", trace_r.tail_set())
            });
            let factor = samples
                .iter()
                .zip(&values)
                .filter(|(&t, _)| t >= t1)
                .all(|(&t, &x)| trace_r.value_at(t) == x);
            self.record(Check::RestrictionFactorization, factor, &ctx, || {
                format!("restricting after {t1}")
            });
        }

        let ok = achievable_check(&self.g, &omega, mu.bits());
        self.record(Check::OmegaAchievableInGraph, ok, &ctx, || format!("ω {{{omega}}}"));
        let ok = self.p_inv(&orbit);
        self.record(Check::OrbitPInvariant, ok, &ctx, || format!("orbit {{{orbit}}}"));
        let ok = self.p_inv(&omega);
        self.record(Check::OmegaPInvariant, ok, &ctx, || format!("ω {{{omega}}}"));

        if self.seen_keys.insert((mu, omega.clone(), orbit.clone())) {
            self.basin_instance(mu, rho, &omega, &orbit)?;
        }
        Ok(())
    }

    /// Flow and ω basins for one (μ, ω, orbit) class; `rho` represents it.
    fn basin_instance(&mut self, mu: State, rho: &Schedule, omega: &StateSet, orbit: &StateSet) -> Result<()> {
        let ctx = Ctx { mu: Some(mu), schedule: Some(rho.clone()), set: None };
        let op = basins::orbit_basin_p(self.tested, mu, rho)?;
        let on = basins::orbit_basin_n(self.tested, mu, rho)?.members;
        let wp = basins::omega_basin_p(self.tested, mu, rho)?;
        let wn = basins::omega_basin_n(self.tested, mu, rho)?.members;
        let (opm, wpm) = (&op.members, &wp.members);

        self.record(Check::OrbitBasinPEqualsOmegaBasinP, opm == wpm, &ctx, || {
            format!("{{{opm}}} vs {{{wpm}}}")
        });
        self.record(Check::OrbitInOrbitBasin, orbit.is_subset(opm), &ctx, || {
            format!("orbit {{{orbit}}} basin {{{opm}}}")
        });
        self.record(Check::OrbitBasinNWithinOmegaBasinN, on.is_subset(&wn), &ctx, || {
            format!("{{{on}}} vs {{{wn}}}")
        });
        let ok = !on.is_empty() == (omega.len() == 1);
        self.record(Check::OrbitBasinNNonemptyIffSingleton, ok, &ctx, || {
            format!("n-basin {{{on}}} ω {{{omega}}}")
        });
        if omega.len() == 1 {
            let b = self.bn(omega);
            let ok = on == wn && wn == b;
            self.record(Check::SingletonOmegaBasinsEqual, ok, &ctx, || {
                format!("{{{on}}} {{{wn}}} {{{b}}}")
            });
        }
        let (bp_or, bn_or) = (self.bp(orbit), self.bn(orbit));
        let (bp_om, bn_om) = (self.bp(omega), self.bn(omega));
        self.record(Check::OrbitBasinPEqualsSetBasin, *opm == bp_or, &ctx, || {
            format!("{{{opm}}} vs {{{bp_or}}}")
        });
        self.record(Check::OrbitBasinNWithinSetBasin, on.is_subset(&bn_or), &ctx, || {
            format!("{{{on}}} vs {{{bn_or}}}")
        });
        self.record(Check::OmegaBasinPEqualsSetBasin, *wpm == bp_om, &ctx, || {
            format!("{{{wpm}}} vs {{{bp_om}}}")
        });
        self.record(Check::OmegaBasinNWithinSetBasin, wn.is_subset(&bn_om), &ctx, || {
            format!("{{{wn}}} vs {{{bn_om}}}")
        });
        let opm = opm.clone();
        let ok = self.p_inv(&opm) && (on.is_empty() || self.n_inv(&on)) && (wn.is_empty() || self.n_inv(&wn));
        self.record(Check::OrbitBasinInvariant, ok, &ctx, || {
            format!("p {{{opm}}} n {{{on}}} ω-n {{{wn}}}")
        });
        if self.tested.is_fixed_point(mu) {
            let single = StateSet::singleton(mu);
            let (bp, bn) = (self.bp(&single), self.bn(&single));
            let ok = bp == opm && opm == *wpm && bn == on && on == wn;
            self.record(Check::FixedPointBasinsCoincide, ok, &ctx, || {
                format!("p {{{bp}}} {{{opm}}} {{{wpm}}} n {{{bn}}} {{{on}}} {{{wn}}}")
            });
        }
        let mut bad = op.failed_witnesses(self.reference)?;
        bad.extend(wp.failed_witnesses(self.reference)?);
        self.record(Check::OrbitWitnessReplay, bad.is_empty(), &ctx, || {
            format!("witnesses fail from {bad:?}")
        });

        if let Some(o) = &self.oracle {
            let mut some = StateSet::empty(self.dim());
            let mut only = StateSet::empty(self.dim());
            for m in self.reference.states() {
                let r = o.achievable(m)?;
                if r.omegas.contains(omega) {
                    some.insert(m);
                    if r.omegas.len() == 1 {
                        only.insert(m);
                    }
                }
            }
            let ok = if o.certified() {
                some == *wpm && only == wn
            } else {
                some.is_subset(wpm) && wn.is_subset(&only)
            };
            let detail = format!("oracle p {{{some}}} n {{{only}}} vs graph p {{{wpm}}} n {{{wn}}}");
            self.record(Check::OmegaBasinOracle, ok, &ctx, || detail);
        }
        Ok(())
    }
}

/// Flow values at the ascending `times`, folding every event with time ≤ t.
fn brute_flow(net: &Network, mu: State, rho: &Schedule, times: &[Rational]) -> Vec<State> {
    let table = net.table();
    let mut x = mu.bits();
    let mut events = rho.events().peekable();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while let Some(e) = events.next_if(|e| e.time <= t) {
            let f = e.fire.bits();
            x = (x & !f) | (table[x as usize] & f);
        }
        out.push(State::new(net.dim(), x).expect("in range"));
    }
    out
}

/// Event times up to two tail periods past the entry, the midpoints between
/// them, and one time before the first event.
fn sample_times(rho: &Schedule, trace: &OrbitTrace) -> Vec<Rational> {
    let horizon = trace.tail.entry_time + trace.tail.period * int(2);
    let events: Vec<Rational> = rho.events().map(|e| e.time).take_while(|&t| t <= horizon).collect();
    let mut out = vec![events[0] - int(1)];
    for w in events.windows(2) {
        out.push(w[0]);
        out.push((w[0] + w[1]) / int(2));
    }
    out.push(*events.last().expect("nonempty"));
    out.sort();
    out.dedup();
    out
}

/// A random progressive schedule with rational event times: a prefix of up
/// to `max_prefix_len` events and a cycle of 1..=`max_cycle_len` events.
pub fn random_schedule(dim: usize, rng: &mut impl Rng, max_prefix_len: usize, max_cycle_len: usize) -> Schedule {
    let full = mask(dim);
    let gap = |rng: &mut dyn rand::RngCore| rat(rng.gen_range(1..=5), rng.gen_range(1..=4));
    let start = rat(rng.gen_range(-6..=6), rng.gen_range(1..=3));
    let mut t = start;
    let mut prefix = Vec::new();
    for _ in 0..rng.gen_range(0..=max_prefix_len) {
        prefix.push(Event::new(t, FireSet::new(dim, rng.gen_range(0..=full)).expect("in range")));
        t += gap(rng);
    }
    let k = rng.gen_range(1..=max_cycle_len.max(1));
    let mut fires: Vec<u32> = (0..k).map(|_| rng.gen_range(0..=full)).collect();
    let covered = fires.iter().fold(0, |a, b| a | b);
    let j = rng.gen_range(0..k);
    fires[j] |= full & !covered;
    let mut offset = rat(rng.gen_range(0..=2), 2);
    let mut cycle = Vec::new();
    for f in fires {
        cycle.push(Event::new(offset, FireSet::new(dim, f).expect("in range")));
        offset += gap(rng);
    }
    let period = offset;
    Schedule::new(prefix, cycle, period, t).expect("valid random schedule")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;

    #[test]
    fn net1_passes() {
        let report = verify_theorems(&net1(), &OracleBounds::new(2, 3)).unwrap();
        assert!(report.passed(), "{:#?}", report.counterexamples);
        assert!(report.oracle_stabilized && report.oracle_certified);
        for c in Check::ALL {
            if !matches!(c, Check::FullSetBasin) {
                assert!(report.tallies.contains_key(c), "{c} never evaluated");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), *c);
        }
    }

    #[test]
    fn mutation_is_caught_and_replays() {
        let mut cfg = VerifyConfig::with_oracle(2, OracleBounds::new(2, 3));
        cfg.mutation = Some((st("10"), st("00")));
        let report = verify_theorems_with(&net1(), &cfg).unwrap();
        assert!(!report.passed());
        let cx = &report.counterexamples[0];
        assert_eq!(cx.mutation, Some((st("10"), st("00"))));
        assert!(cx.replay().unwrap(), "{cx:?}");
        let unmutated = Counterexample { mutation: None, ..cx.clone() };
        assert!(!unmutated.replay().unwrap());
    }

    #[test]
    fn premature_stabilization_is_reported_not_failed() {
        let net = Network::new(3, vec![0b010, 0b000, 0b110, 0b011, 0b111, 0b010, 0b100, 0b010]).unwrap();
        let mut cfg = VerifyConfig::with_oracle(3, OracleBounds::new(3, 4));
        cfg.schedules = vec![ScheduleSource::List(vec![Schedule::synchronous(3)])];
        cfg.sets = SetSource::List(vec![]);
        let report = verify_theorems_with(&net, &cfg).unwrap();
        assert!(report.passed(), "{:#?}", report.counterexamples);
        assert!(report.stabilization_gaps > 0);
    }

    #[test]
    fn random_schedules_are_progressive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 1..=4 {
            for _ in 0..50 {
                let s = random_schedule(dim, &mut rng, 3, 4);
                assert!(s.is_progressive());
            }
        }
    }
}
