//! Bit-vector value types: points of B^n, fire sets and characteristic
//! vectors of subsets of B^n.
//!
//! Coordinate `i` (1-based) of an n-bit value is stored in bit `n - i` of the
//! packed integer, so coordinate 1 is the leftmost character of the textual
//! form and the numeric order of states matches the lexicographic order of
//! their bitstrings (`00 < 01 < 10 < 11`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest dimension representable by the packed `u32` encoding.
pub const MAX_DIM: usize = 20;

pub(crate) fn mask(dim: usize) -> u32 {
    if dim >= 32 {
        u32::MAX
    } else {
        (1u32 << dim) - 1
    }
}

fn format_bits(f: &mut fmt::Formatter<'_>, dim: usize, bits: u32) -> fmt::Result {
    for i in (0..dim).rev() {
        f.write_str(if bits >> i & 1 == 1 { "1" } else { "0" })?;
    }
    Ok(())
}

fn parse_bits(s: &str) -> std::result::Result<(usize, u32), String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty bitstring".into());
    }
    if s.len() > MAX_DIM {
        return Err(format!("bitstring `{s}` longer than {MAX_DIM}"));
    }
    let mut bits = 0u32;
    for c in s.chars() {
        bits <<= 1;
        match c {
            '0' => {}
            '1' => bits |= 1,
            _ => return Err(format!("bad bitstring `{s}`")),
        }
    }
    Ok((s.len(), bits))
}

macro_rules! bit_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name {
            dim: u8,
            bits: u32,
        }

        impl $name {
            /// Builds a value from its packed bits; bits above `dim` are rejected.
            pub fn new(dim: usize, bits: u32) -> Result<Self> {
                if dim == 0 {
                    return Err(Error::ZeroDimension);
                }
                if dim > MAX_DIM {
                    return Err(Error::DimensionTooLarge { dim, cap: MAX_DIM, what: "bit vector" });
                }
                if bits & !mask(dim) != 0 {
                    return Err(Error::DimensionMismatch { expected: dim, found: 32 - bits.leading_zeros() as usize });
                }
                Ok(Self { dim: dim as u8, bits })
            }

            pub(crate) fn from_raw(dim: usize, bits: u32) -> Self {
                debug_assert!(dim >= 1 && dim <= MAX_DIM && bits & !mask(dim) == 0);
                Self { dim: dim as u8, bits }
            }

            /// Builds a value from coordinates listed in paper order (coordinate 1 first).
            pub fn from_coords(coords: &[bool]) -> Result<Self> {
                let bits = coords.iter().fold(0u32, |acc, &b| acc << 1 | b as u32);
                Self::new(coords.len(), bits)
            }

            pub fn zeros(dim: usize) -> Self {
                Self::from_raw(dim, 0)
            }

            pub fn ones(dim: usize) -> Self {
                Self::from_raw(dim, mask(dim))
            }

            pub fn dim(&self) -> usize {
                self.dim as usize
            }

            pub fn bits(&self) -> u32 {
                self.bits
            }

            /// Value of coordinate `i`, 1-based.
            pub fn get(&self, i: usize) -> bool {
                assert!(i >= 1 && i <= self.dim(), "coordinate {i} out of range");
                self.bits >> (self.dim() - i) & 1 == 1
            }

            /// 1-based indices of the coordinates that are set.
            pub fn ones_indices(&self) -> Vec<usize> {
                (1..=self.dim()).filter(|&i| self.get(i)).collect()
            }

            pub fn count_ones(&self) -> usize {
                self.bits.count_ones() as usize
            }

            pub fn is_zero(&self) -> bool {
                self.bits == 0
            }

            pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
                if self.dim() == dim {
                    Ok(())
                } else {
                    Err(Error::DimensionMismatch { expected: dim, found: self.dim() })
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                format_bits(f, self.dim(), self.bits)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}(", stringify!($name))?;
                format_bits(f, self.dim(), self.bits)?;
                f.write_str(")")
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                let (dim, bits) = parse_bits(s)?;
                Ok(Self::from_raw(dim, bits))
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
    };
}

bit_vector! {
    /// A point μ ∈ B^n.
    State
}

bit_vector! {
    /// A coordinate selection ν ∈ B^n: bit `i` set means Φ_i is computed.
    FireSet
}

impl FireSet {
    pub fn union(self, other: FireSet) -> FireSet {
        debug_assert_eq!(self.dim, other.dim);
        FireSet::from_raw(self.dim(), self.bits | other.bits)
    }

    pub fn intersection(self, other: FireSet) -> FireSet {
        debug_assert_eq!(self.dim, other.dim);
        FireSet::from_raw(self.dim(), self.bits & other.bits)
    }

    pub fn is_subset(self, other: FireSet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn complement(self) -> FireSet {
        FireSet::from_raw(self.dim(), !self.bits & mask(self.dim()))
    }
}

/// A subset of B^n stored as its 2^n-bit characteristic vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    dim: u8,
    words: Vec<u64>,
}

/// Sets order by their ascending member lists, lexicographically.
impl Ord for StateSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dim.cmp(&other.dim).then_with(|| self.iter_raw().cmp(other.iter_raw()))
    }
}

impl PartialOrd for StateSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl StateSet {
    pub fn empty(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        let words = ((1usize << dim) + 63) / 64;
        Self { dim: dim as u8, words: vec![0; words] }
    }

    pub fn full(dim: usize) -> Self {
        let mut s = Self::empty(dim);
        let size = 1usize << dim;
        for (w, word) in s.words.iter_mut().enumerate() {
            let lo = w * 64;
            let count = (size - lo).min(64);
            *word = if count == 64 { u64::MAX } else { (1u64 << count) - 1 };
        }
        s
    }

    pub fn singleton(state: State) -> Self {
        let mut s = Self::empty(state.dim());
        s.insert(state);
        s
    }

    pub fn from_states<I: IntoIterator<Item = State>>(dim: usize, states: I) -> Result<Self> {
        let mut s = Self::empty(dim);
        for st in states {
            st.check_dim(dim)?;
            s.insert(st);
        }
        Ok(s)
    }

    /// Builds a set from packed state indices; used by the hot loops.
    pub(crate) fn from_raw_iter<I: IntoIterator<Item = u32>>(dim: usize, raw: I) -> Self {
        let mut s = Self::empty(dim);
        for r in raw {
            s.insert_raw(r);
        }
        s
    }

    /// Builds a set of dimension ≤ 6 from a 64-bit membership mask.
    pub(crate) fn from_mask(dim: usize, m: u64) -> Self {
        debug_assert!(dim <= 6);
        let mut s = Self::empty(dim);
        s.words[0] = m;
        s
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Number of points of the ambient space, 2^n.
    pub fn universe_size(&self) -> usize {
        1usize << self.dim
    }

    pub fn insert(&mut self, state: State) -> bool {
        assert_eq!(state.dim(), self.dim(), "dimension mismatch");
        self.insert_raw(state.bits())
    }

    pub(crate) fn insert_raw(&mut self, raw: u32) -> bool {
        let (w, b) = (raw as usize / 64, raw % 64);
        let fresh = self.words[w] >> b & 1 == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, state: State) -> bool {
        let raw = state.bits();
        let (w, b) = (raw as usize / 64, raw % 64);
        let present = self.words[w] >> b & 1 == 1;
        self.words[w] &= !(1 << b);
        present
    }

    pub fn contains(&self, state: State) -> bool {
        state.dim() == self.dim() && self.contains_raw(state.bits())
    }

    pub(crate) fn contains_raw(&self, raw: u32) -> bool {
        self.words[raw as usize / 64] >> (raw % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.universe_size()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.dim == other.dim && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &StateSet) -> StateSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> StateSet {
        StateSet::full(self.dim()).difference(self)
    }

    fn zip_with(&self, other: &StateSet, f: impl Fn(u64, u64) -> u64) -> StateSet {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        StateSet {
            dim: self.dim,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub(crate) fn iter_raw(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros();
                    rest &= rest - 1;
                    Some(w as u32 * 64 + b)
                }
            })
        })
    }

    /// Members in increasing numeric (= lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = State> + '_ {
        let dim = self.dim();
        self.iter_raw().map(move |r| State::from_raw(dim, r))
    }

    pub fn first(&self) -> Option<State> {
        self.iter().next()
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: dim, found: self.dim() })
        }
    }
}

impl fmt::Display for StateSet {
    /// Comma-separated bitstrings, the same literal accepted by the set parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl serde::Serialize for StateSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.len()))?;
        for st in self.iter() {
            seq.serialize_element(&st.to_string())?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_one_is_leftmost() {
        let s: State = "10".parse().unwrap();
        assert_eq!(s.bits(), 2);
        assert!(s.get(1));
        assert!(!s.get(2));
        assert_eq!(s.to_string(), "10");
        assert_eq!(State::from_coords(&[true, false]).unwrap(), s);
    }

    #[test]
    fn rejects_out_of_range_bits() {
        assert!(State::new(2, 4).is_err());
        assert!(State::new(0, 0).is_err());
        assert!("1x".parse::<State>().is_err());
    }

    #[test]
    fn set_algebra() {
        let dim = 3;
        let a = StateSet::from_states(dim, ["000", "101"].map(|s| s.parse().unwrap())).unwrap();
        let b = StateSet::from_states(dim, ["101", "111"].map(|s| s.parse().unwrap())).unwrap();
        assert_eq!(a.union(&b).len(), 3);
        assert_eq!(a.intersection(&b).to_string(), "101");
        assert_eq!(a.difference(&b).to_string(), "000");
        assert_eq!(a.complement().len(), 6);
        assert!(StateSet::full(dim).is_full());
        assert!(a.intersection(&b).is_subset(&a));
    }

    #[test]
    fn wide_sets_span_words() {
        let mut s = StateSet::empty(8);
        s.insert(State::new(8, 200).unwrap());
        s.insert(State::new(8, 3).unwrap());
        let v: Vec<u32> = s.iter().map(|x| x.bits()).collect();
        assert_eq!(v, vec![3, 200]);
        assert_eq!(StateSet::full(8).len(), 256);
        assert_eq!(StateSet::full(1).len(), 2);
    }
}
