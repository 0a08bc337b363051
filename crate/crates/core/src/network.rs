//! The generator function Φ: B^n → B^n and the single-step asynchronous
//! iteration Φ^ν.

use crate::bits::{mask, FireSet, State, StateSet, MAX_DIM};
use crate::error::{Error, Result};

/// Dimension caps for the different kinds of sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest n for pure step evaluation (table construction, flows).
    pub step_max_dim: usize,
    /// Largest n for operations that enumerate all 2^n states and their edges.
    pub graph_max_dim: usize,
    /// Largest n for enumerating fair strongly connected subsets of an SCC.
    pub subset_max_dim: usize,
    /// Largest number of fair subsets a single enumeration may produce.
    pub subset_max_results: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            step_max_dim: MAX_DIM,
            graph_max_dim: 10,
            subset_max_dim: 5,
            subset_max_results: 1 << 20,
        }
    }
}

/// A network: the dimension n plus the total truth table of Φ.
#[derive(Clone)]
pub struct Network {
    dim: usize,
    table: Vec<u32>,
    limits: Limits,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.table == other.table
    }
}

impl Eq for Network {}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Network(n={}; ", self.dim)?;
        for (k, &img) in self.table.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            let from = State::from_raw(self.dim, k as u32);
            write!(f, "{from}->{}", State::from_raw(self.dim, img))?;
        }
        f.write_str(")")
    }
}

impl Network {
    /// Builds a network from its packed truth table: `table[μ]` is Φ(μ).
    pub fn new(dim: usize, table: Vec<u32>) -> Result<Self> {
        Self::with_limits(dim, table, Limits::default())
    }

    pub fn with_limits(dim: usize, table: Vec<u32>, limits: Limits) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let cap = limits.step_max_dim.min(MAX_DIM);
        if dim > cap {
            return Err(Error::DimensionTooLarge { dim, cap, what: "step evaluation" });
        }
        if table.len() != 1 << dim {
            return Err(Error::TableSize { expected: 1 << dim, found: table.len() });
        }
        if let Some(&bad) = table.iter().find(|&&v| v & !mask(dim) != 0) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: 32 - bad.leading_zeros() as usize,
            });
        }
        Ok(Network { dim, table, limits })
    }

    /// Tabulates Φ from a function on states.
    pub fn from_fn(dim: usize, f: impl Fn(State) -> State) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, cap: MAX_DIM, what: "step evaluation" });
        }
        let mut table = Vec::with_capacity(1 << dim);
        for raw in 0..1u32 << dim {
            let img = f(State::from_raw(dim, raw));
            img.check_dim(dim)?;
            table.push(img.bits());
        }
        Network::new(dim, table)
    }

    /// The identity network on B^n: every point is fixed.
    pub fn identity(dim: usize) -> Result<Self> {
        Network::new(dim, (0..1u32 << dim.min(MAX_DIM + 1)).collect())
    }

    /// The constant network Φ ≡ `value`.
    pub fn constant(value: State) -> Result<Self> {
        Network::new(value.dim(), vec![value.bits(); 1 << value.dim()])
    }

    pub fn set_limits(&mut self, limits: Limits) {
        self.limits = limits;
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of states, 2^n.
    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.table.len() as u32).map(move |r| State::from_raw(self.dim, r))
    }

    pub(crate) fn check_graph_cap(&self) -> Result<()> {
        if self.dim > self.limits.graph_max_dim {
            Err(Error::DimensionTooLarge {
                dim: self.dim,
                cap: self.limits.graph_max_dim,
                what: "graph enumeration",
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn image_raw(&self, mu: u32) -> u32 {
        self.table[mu as usize]
    }

    /// Φ^ν on packed values.
    #[inline]
    pub(crate) fn step_raw(&self, mu: u32, nu: u32) -> u32 {
        (mu & !nu) | (self.table[mu as usize] & nu)
    }

    #[inline]
    pub(crate) fn unstable_raw(&self, mu: u32) -> u32 {
        mu ^ self.table[mu as usize]
    }

    /// Φ(μ), the synchronous image.
    pub fn image(&self, mu: State) -> Result<State> {
        mu.check_dim(self.dim)?;
        Ok(State::from_raw(self.dim, self.image_raw(mu.bits())))
    }

    /// Φ^ν(μ): coordinates selected by ν take their Φ value, the others keep μ's.
    pub fn apply_fire_set(&self, mu: State, nu: FireSet) -> Result<State> {
        mu.check_dim(self.dim)?;
        nu.check_dim(self.dim)?;
        Ok(State::from_raw(self.dim, self.step_raw(mu.bits(), nu.bits())))
    }

    /// Φ^{α⁰…α^k}(μ): left fold of [`Network::apply_fire_set`]; the empty word is the identity.
    pub fn iterate_word(&self, mu: State, word: &[FireSet]) -> Result<State> {
        mu.check_dim(self.dim)?;
        let mut cur = mu.bits();
        for nu in word {
            nu.check_dim(self.dim)?;
            cur = self.step_raw(cur, nu.bits());
        }
        Ok(State::from_raw(self.dim, cur))
    }

    /// Coordinates with Φ_i(μ) ≠ μ_i.
    pub fn unstable_set(&self, mu: State) -> Result<FireSet> {
        mu.check_dim(self.dim)?;
        Ok(FireSet::from_raw(self.dim, self.unstable_raw(mu.bits())))
    }

    pub fn is_fixed_point(&self, mu: State) -> bool {
        mu.dim() == self.dim && self.image_raw(mu.bits()) == mu.bits()
    }

    /// The set Eq of fixed points of Φ; possibly empty.
    pub fn fixed_points(&self) -> StateSet {
        StateSet::from_raw_iter(
            self.dim,
            (0..self.table.len() as u32).filter(|&r| self.table[r as usize] == r),
        )
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The two-dimensional network of the introductory example.
    pub fn net1() -> Network {
        // 00 -> 11, 01 -> 11, 10 -> 10, 11 -> 01
        Network::new(2, vec![0b11, 0b11, 0b10, 0b01]).unwrap()
    }

    pub fn id2() -> Network {
        Network::identity(2).unwrap()
    }

    pub fn const10() -> Network {
        Network::constant(st("10")).unwrap()
    }

    pub fn st(s: &str) -> State {
        s.parse().unwrap()
    }

    pub fn fs(s: &str) -> FireSet {
        s.parse().unwrap()
    }

    pub fn set(items: &[&str]) -> StateSet {
        let dim = items.first().map(|s| s.len()).unwrap_or(2);
        StateSet::from_states(dim, items.iter().map(|s| st(s))).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn apply_fire_set_examples() {
        let net = net1();
        assert_eq!(net.apply_fire_set(st("00"), fs("10")).unwrap(), st("10"));
        assert_eq!(net.apply_fire_set(st("11"), fs("11")).unwrap(), st("01"));
        for mu in net.states() {
            assert_eq!(net.apply_fire_set(mu, FireSet::zeros(2)).unwrap(), mu);
        }
    }

    #[test]
    fn iterate_word_examples() {
        let net = net1();
        assert_eq!(net.iterate_word(st("00"), &[fs("01"), fs("11")]).unwrap(), st("11"));
        assert_eq!(net.iterate_word(st("01"), &[]).unwrap(), st("01"));
        let words = [vec![], vec![fs("11")], vec![fs("01"), fs("10"), fs("11")]];
        for w in &words {
            assert_eq!(net.iterate_word(st("10"), w).unwrap(), st("10"));
        }
    }

    #[test]
    fn unstable_set_examples() {
        let net = net1();
        assert_eq!(net.unstable_set(st("00")).unwrap(), fs("11"));
        assert_eq!(net.unstable_set(st("10")).unwrap(), fs("00"));
        assert_eq!(net.unstable_set(st("11")).unwrap(), fs("10"));
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(net1().fixed_points(), set(&["10"]));
        assert!(id2().fixed_points().is_full());
        assert_eq!(const10().fixed_points(), set(&["10"]));
        let negation = Network::from_fn(2, |s| State::new(2, !s.bits() & 3).unwrap()).unwrap();
        assert!(negation.fixed_points().is_empty());
    }

    #[test]
    fn dimension_errors() {
        let net = net1();
        assert!(matches!(
            net.apply_fire_set(st("000"), fs("10")),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(net.iterate_word(st("00"), &[fs("1")]).is_err());
        assert!(Network::new(2, vec![0, 1, 2]).is_err());
        assert!(Network::new(2, vec![0, 1, 2, 7]).is_err());
        let tight = Limits { step_max_dim: 3, ..Limits::default() };
        assert!(Network::with_limits(4, vec![0; 16], tight).is_err());
    }
}
