//! The labelled asynchronous transition graph and the fairness-aware
//! strongly connected sets that stand for achievable ω-limit sets.
//!
//! Edges leave μ for every λ ⊆ unstable(μ), including the empty self-loop.
//! Firing a stable coordinate is a no-op, so an edge may be taken with any
//! extra stable coordinates fired as well; its fired-capability is therefore
//! λ ∪ stable(μ).
//!
//! A set T of states is the ω-limit set of some progressive schedule from μ
//! exactly when
//!   1. T is strongly connected using edges with both ends in T,
//!   2. every coordinate is in the capability of some edge internal to T,
//!   3. some state of T is reachable from μ.
//! Necessity: the recurring part of the run is a closed walk over T that
//! fires every coordinate. Sufficiency: reach T, then repeat a closed walk
//! covering all of T that takes, for each coordinate, an edge whose
//! capability contains it (see `crate::basins::witness_schedule`). The
//! brute-force checks in `crate::oracle` exercise this equivalence.

use std::collections::{BTreeSet, VecDeque};
use std::ops::ControlFlow;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::bits::{mask, FireSet, State, StateSet};
use crate::error::{Error, Result};
use crate::network::Network;

/// Outgoing edges of every state, stored contiguously.
#[derive(Debug, Clone)]
pub struct AsyncGraph {
    dim: usize,
    offsets: Vec<usize>,
    /// (λ, target) with λ ⊆ unstable(source), in increasing λ order.
    edges: Vec<(u32, u32)>,
    /// stable(μ) per state.
    stable: Vec<u32>,
}

fn submasks_ascending(u: u32) -> impl Iterator<Item = u32> {
    // Enumerate submasks of u in increasing numeric order.
    let mut next = Some(0u32);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == u { None } else { Some(((cur | !u).wrapping_add(1)) & u) };
        Some(cur)
    })
}

impl AsyncGraph {
    pub fn build(net: &Network) -> Result<Self> {
        net.check_graph_cap()?;
        let dim = net.dim();
        let full = mask(dim);
        let mut offsets = Vec::with_capacity(net.size() + 1);
        let mut edges = Vec::new();
        let mut stable = Vec::with_capacity(net.size());
        for mu in 0..net.size() as u32 {
            offsets.push(edges.len());
            let u = net.unstable_raw(mu);
            stable.push(!u & full);
            for lam in submasks_ascending(u) {
                edges.push((lam, net.step_raw(mu, lam)));
            }
        }
        offsets.push(edges.len());
        Ok(AsyncGraph { dim, offsets, edges, stable })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.stable.len()
    }

    pub(crate) fn out_raw(&self, mu: u32) -> &[(u32, u32)] {
        &self.edges[self.offsets[mu as usize]..self.offsets[mu as usize + 1]]
    }

    pub(crate) fn stable_raw(&self, mu: u32) -> u32 {
        self.stable[mu as usize]
    }

    /// Edges out of μ as (λ, Φ^λ(μ)), self-loop first.
    pub fn successors(&self, mu: State) -> Vec<(FireSet, State)> {
        self.out_raw(mu.bits())
            .iter()
            .map(|&(l, t)| (FireSet::from_raw(self.dim, l), State::from_raw(self.dim, t)))
            .collect()
    }

    /// Forward closure of a set of states, with every visited state restricted to `within`.
    pub(crate) fn forward_closure(&self, from: &StateSet, within: Option<&StateSet>) -> StateSet {
        let mut seen = StateSet::empty(self.dim);
        let mut queue: VecDeque<u32> = VecDeque::new();
        for s in from.iter_raw() {
            if within.map_or(true, |w| w.contains_raw(s)) && seen.insert_raw(s) {
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            for &(_, y) in self.out_raw(x) {
                if within.map_or(true, |w| w.contains_raw(y)) && seen.insert_raw(y) {
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    /// Predecessor lists (sources only, deduplicated, self-loops dropped).
    pub(crate) fn reverse(&self) -> Vec<Vec<u32>> {
        let mut rev = vec![Vec::new(); self.size()];
        for x in 0..self.size() as u32 {
            for &(l, y) in self.out_raw(x) {
                if l != 0 {
                    rev[y as usize].push(x);
                }
            }
        }
        rev
    }

    /// States that can reach `targets` (targets included), with every state
    /// on the way restricted to `within`. Alongside, for each such state
    /// outside `targets`, the next hop (λ, successor) of a shortest path.
    pub(crate) fn backward_closure(
        &self,
        targets: &StateSet,
        within: Option<&StateSet>,
    ) -> (StateSet, Vec<Option<(u32, u32)>>) {
        let rev = self.reverse();
        let mut seen = targets.clone();
        let mut next_hop: Vec<Option<(u32, u32)>> = vec![None; self.size()];
        let mut queue: VecDeque<u32> = targets.iter_raw().collect();
        while let Some(y) = queue.pop_front() {
            for &x in &rev[y as usize] {
                if within.map_or(true, |w| w.contains_raw(x)) && seen.insert_raw(x) {
                    let lam = self
                        .out_raw(x)
                        .iter()
                        .find(|&&(_, t)| t == y)
                        .map(|&(l, _)| l)
                        .expect("reverse edge has a forward edge");
                    next_hop[x as usize] = Some((lam, y));
                    queue.push_back(x);
                }
            }
        }
        (seen, next_hop)
    }

    /// Shortest path of edges from `from` to any state of `targets`, staying
    /// inside `within` when given. Empty when `from` is already a target.
    pub(crate) fn path_to(
        &self,
        from: u32,
        targets: &StateSet,
        within: Option<&StateSet>,
    ) -> Option<Vec<(u32, u32)>> {
        if targets.contains_raw(from) {
            return Some(Vec::new());
        }
        let mut parent: Vec<Option<(u32, u32)>> = vec![None; self.size()];
        let mut seen = StateSet::empty(self.dim);
        seen.insert_raw(from);
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            for &(l, y) in self.out_raw(x) {
                if within.map_or(true, |w| w.contains_raw(y)) && seen.insert_raw(y) {
                    parent[y as usize] = Some((l, x));
                    if targets.contains_raw(y) {
                        let mut path = vec![(l, y)];
                        let mut cur = x;
                        while cur != from {
                            let (pl, px) = parent[cur as usize].expect("bfs parent");
                            path.push((pl, cur));
                            cur = px;
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(y);
                }
            }
        }
        None
    }

    /// Union of λ ∪ stable(source) over the edges with both ends in `set`.
    pub(crate) fn internal_capability(&self, set: &StateSet) -> u32 {
        let mut cap = 0;
        for x in set.iter_raw() {
            cap |= self.stable[x as usize];
            for &(l, y) in self.out_raw(x) {
                if set.contains_raw(y) {
                    cap |= l;
                }
            }
        }
        cap
    }

    pub fn is_fair(&self, set: &StateSet) -> bool {
        !set.is_empty() && self.internal_capability(set) == mask(self.dim)
    }

    /// Strongly connected components of the subgraph induced on `domain`.
    pub fn sccs(&self, domain: &StateSet) -> Vec<StateSet> {
        let mut g: DiGraphMap<u32, ()> = DiGraphMap::new();
        for x in domain.iter_raw() {
            g.add_node(x);
        }
        for x in domain.iter_raw() {
            for &(l, y) in self.out_raw(x) {
                if l != 0 && domain.contains_raw(y) {
                    g.add_edge(x, y, ());
                }
            }
        }
        let mut comps: Vec<StateSet> = tarjan_scc(&g)
            .into_iter()
            .map(|c| StateSet::from_raw_iter(self.dim, c))
            .collect();
        comps.sort();
        comps
    }

    pub fn is_strongly_connected(&self, set: &StateSet) -> bool {
        match set.first() {
            None => false,
            Some(s) => {
                let fwd = self.forward_closure(&StateSet::singleton(s), Some(set));
                if fwd != *set {
                    return false;
                }
                let (bwd, _) = self.backward_closure(&StateSet::singleton(s), Some(set));
                bwd == *set
            }
        }
    }

    /// SCCs of the `domain`-induced subgraph that are fair.
    pub fn fair_sccs(&self, domain: &StateSet) -> Vec<StateSet> {
        self.sccs(domain).into_iter().filter(|c| self.is_fair(c)).collect()
    }

    /// Visits every fair strongly connected subset of `domain`, stopping when
    /// the visitor breaks. Each set is visited once.
    pub fn for_each_fair_subset<B>(
        &self,
        domain: &StateSet,
        visit: &mut impl FnMut(&StateSet) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if self.dim <= 6 {
            let m = MaskGraph::new(self);
            let mut visit_mask = |t: u64| visit(&StateSet::from_mask(self.dim, t));
            return m.fair_subsets(domain.iter_raw().fold(0, |a, x| a | 1 << x), &mut visit_mask);
        }
        for comp in self.fair_sccs(domain) {
            let v = comp.first().expect("nonempty component");
            let mut must = StateSet::empty(self.dim);
            must.insert(v);
            self.fair_subsets_containing(&comp, &must, visit)?;
            let mut rest = comp.clone();
            rest.remove(v);
            if !rest.is_empty() {
                self.for_each_fair_subset(&rest, visit)?;
            }
        }
        ControlFlow::Continue(())
    }

    /// Fair strongly connected T with `must` ⊆ T ⊆ `domain`.
    fn fair_subsets_containing<B>(
        &self,
        domain: &StateSet,
        must: &StateSet,
        visit: &mut impl FnMut(&StateSet) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let Some(m) = must.first() else {
            return ControlFlow::Continue(());
        };
        let Some(comp) = self.sccs(domain).into_iter().find(|c| c.contains(m)) else {
            return ControlFlow::Continue(());
        };
        if !must.is_subset(&comp) || !self.is_fair(&comp) {
            return ControlFlow::Continue(());
        }
        let Some(w) = comp.difference(must).first() else {
            return visit(&comp);
        };
        // T either avoids w or contains it.
        let mut without = comp.clone();
        without.remove(w);
        self.fair_subsets_containing(&without, must, visit)?;
        let mut with = must.clone();
        with.insert(w);
        self.fair_subsets_containing(&comp, &with, visit)
    }

    /// Whether `set` contains a fair strongly connected proper subset.
    pub fn has_proper_fair_subset(&self, set: &StateSet) -> bool {
        self.for_each_fair_subset(set, &mut |t: &StateSet| {
            if t != set {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .is_break()
    }
}

/// The same search as [`AsyncGraph::for_each_fair_subset`] on 64-bit
/// membership masks, for at most 64 states.
struct MaskGraph<'a> {
    g: &'a AsyncGraph,
    succ: Vec<u64>,
    pred: Vec<u64>,
}

fn mask_bits(mut m: u64) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let b = m.trailing_zeros();
        m &= m - 1;
        Some(b)
    })
}

impl<'a> MaskGraph<'a> {
    fn new(g: &'a AsyncGraph) -> Self {
        let mut succ = vec![0u64; g.size()];
        let mut pred = vec![0u64; g.size()];
        for x in 0..g.size() as u32 {
            for &(l, y) in g.out_raw(x) {
                if l != 0 {
                    succ[x as usize] |= 1 << y;
                    pred[y as usize] |= 1 << x;
                }
            }
        }
        MaskGraph { g, succ, pred }
    }

    fn closure(adj: &[u64], start: u64, domain: u64) -> u64 {
        let mut seen = start & domain;
        let mut frontier = seen;
        while frontier != 0 {
            let next = mask_bits(frontier).fold(0, |a, x| a | adj[x as usize]) & domain & !seen;
            seen |= next;
            frontier = next;
        }
        seen
    }

    fn component(&self, v: u32, domain: u64) -> u64 {
        Self::closure(&self.succ, 1 << v, domain) & Self::closure(&self.pred, 1 << v, domain)
    }

    fn is_fair(&self, set: u64) -> bool {
        let mut cap = 0;
        for x in mask_bits(set) {
            cap |= self.g.stable_raw(x);
            for &(l, y) in self.g.out_raw(x) {
                if set >> y & 1 == 1 {
                    cap |= l;
                }
            }
        }
        set != 0 && cap == mask(self.g.dim)
    }

    fn fair_subsets<B>(&self, domain: u64, visit: &mut impl FnMut(u64) -> ControlFlow<B>) -> ControlFlow<B> {
        let mut remaining = domain;
        while remaining != 0 {
            let v = remaining.trailing_zeros();
            let comp = self.component(v, domain);
            remaining &= !comp;
            if !self.is_fair(comp) {
                continue;
            }
            self.containing(comp, 1 << v, visit)?;
            let rest = comp & !(1 << v);
            if rest != 0 {
                self.fair_subsets(rest, visit)?;
            }
        }
        ControlFlow::Continue(())
    }

    fn containing<B>(&self, domain: u64, must: u64, visit: &mut impl FnMut(u64) -> ControlFlow<B>) -> ControlFlow<B> {
        let comp = self.component(must.trailing_zeros(), domain);
        if must & !comp != 0 || !self.is_fair(comp) {
            return ControlFlow::Continue(());
        }
        let free = comp & !must;
        if free == 0 {
            return visit(comp);
        }
        let w = free & free.wrapping_neg();
        // T either avoids w or contains it.
        self.containing(comp & !w, must, visit)?;
        self.containing(comp, must | w, visit)
    }
}

/// Edges out of μ: one per λ ⊆ unstable(μ), the empty self-loop included.
pub fn successors(net: &Network, mu: State) -> Result<Vec<(FireSet, State)>> {
    let u = net.unstable_set(mu)?;
    Ok(submasks_ascending(u.bits())
        .map(|l| {
            let lam = FireSet::from_raw(net.dim(), l);
            (lam, State::from_raw(net.dim(), net.step_raw(mu.bits(), l)))
        })
        .collect())
}

/// Forward closure of μ: the union of all orbits Or_ρ(μ).
pub fn reachable_set(net: &Network, mu: State) -> Result<StateSet> {
    mu.check_dim(net.dim())?;
    let g = AsyncGraph::build(net)?;
    Ok(g.forward_closure(&StateSet::singleton(mu), None))
}

fn require_nonempty(net: &Network, a: &StateSet) -> Result<()> {
    a.check_dim(net.dim())?;
    if a.is_empty() {
        Err(Error::EmptySet)
    } else {
        Ok(())
    }
}

/// Every Φ^λ(μ), μ ∈ A, stays in A.
pub fn is_n_invariant(net: &Network, a: &StateSet) -> Result<bool> {
    require_nonempty(net, a)?;
    let full = mask(net.dim());
    Ok(a.iter_raw().all(|mu| {
        let u = net.unstable_raw(mu);
        submasks_ascending(u).all(|l| a.contains_raw(net.step_raw(mu, l & full)))
    }))
}

/// From every μ ∈ A some progressive run stays in A forever: μ reaches,
/// along edges inside A, a fair strongly connected set contained in A.
pub fn is_p_invariant(net: &Network, a: &StateSet) -> Result<bool> {
    require_nonempty(net, a)?;
    let g = AsyncGraph::build(net)?;
    Ok(p_invariant_in(&g, a))
}

pub(crate) fn p_invariant_in(g: &AsyncGraph, a: &StateSet) -> bool {
    let fair = g.fair_sccs(a);
    let mut targets = StateSet::empty(g.dim());
    for c in &fair {
        targets = targets.union(c);
    }
    let (can_stay, _) = g.backward_closure(&targets, Some(a));
    can_stay == *a
}

/// SCCs of the `domain`-induced subgraph that satisfy the fairness condition.
pub fn fair_sccs(net: &Network, domain: &StateSet) -> Result<Vec<StateSet>> {
    require_nonempty(net, domain)?;
    let g = AsyncGraph::build(net)?;
    Ok(g.fair_sccs(domain))
}

fn check_subset_cap(net: &Network) -> Result<()> {
    let cap = net.limits().subset_max_dim;
    if net.dim() > cap {
        Err(Error::DimensionTooLarge { dim: net.dim(), cap, what: "fair subset enumeration" })
    } else {
        Ok(())
    }
}

/// Every set T with T = ω_ρ(μ) for some progressive ρ: the fair strongly
/// connected sets (maximal or not) reachable from μ.
pub fn achievable_omegas_from(net: &Network, mu: State) -> Result<BTreeSet<StateSet>> {
    mu.check_dim(net.dim())?;
    check_subset_cap(net)?;
    let g = AsyncGraph::build(net)?;
    achievable_in(&g, mu.bits(), net.limits().subset_max_results)
}

pub(crate) fn achievable_in(g: &AsyncGraph, mu: u32, limit: usize) -> Result<BTreeSet<StateSet>> {
    let reach = g.forward_closure(&StateSet::from_raw_iter(g.dim(), [mu]), None);
    let mut out = BTreeSet::new();
    let flow = g.for_each_fair_subset(&reach, &mut |t: &StateSet| {
        out.insert(t.clone());
        if out.len() > limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if flow.is_break() {
        return Err(Error::EnumerationLimit { limit });
    }
    Ok(out)
}

/// T is strongly connected, fair, and reachable from μ.
pub fn is_achievable_from(net: &Network, t: &StateSet, mu: State) -> Result<bool> {
    require_nonempty(net, t)?;
    mu.check_dim(net.dim())?;
    let g = AsyncGraph::build(net)?;
    Ok(achievable_check(&g, t, mu.bits()))
}

pub(crate) fn achievable_check(g: &AsyncGraph, t: &StateSet, mu: u32) -> bool {
    if !g.is_strongly_connected(t) || !g.is_fair(t) {
        return false;
    }
    let reach = g.forward_closure(&StateSet::from_raw_iter(g.dim(), [mu]), None);
    !reach.intersection(t).is_empty()
}
