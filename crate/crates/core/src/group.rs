//! Finite abelian groups with an injective integer index.
//!
//! Two families are supported: the cyclic groups `Z/mZ` and the XOR groups
//! `(Z/2Z)^bits`. Elements are stored as their least nonnegative canonical
//! representative, and the index of an element is that representative.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Machine word length in bits used for all space accounting.
pub const WORD_BITS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// `Z/mZ` under addition.
    Modular(u128),
    /// `(Z/2Z)^bits` under exclusive-or.
    Xor(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    kind: GroupKind,
    order: u128,
}

/// Canonical representative of a group element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement(u128);

impl GroupElement {
    #[inline]
    pub fn value(self) -> u128 {
        self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl GroupSpec {
    pub fn modular(m: u128) -> Result<Self> {
        if m < 2 {
            return Err(Error::Parameter(format!("modulus must be at least 2, got {m}")));
        }
        Ok(GroupSpec {
            kind: GroupKind::Modular(m),
            order: m,
        })
    }

    /// XOR group on `bits` bits. Orders up to `2^127` are representable.
    pub fn xor(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 127 {
            return Err(Error::Parameter(format!(
                "xor group width must be in 1..=127 bits, got {bits}"
            )));
        }
        Ok(GroupSpec {
            kind: GroupKind::Xor(bits),
            order: 1u128 << bits,
        })
    }

    #[inline]
    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    #[inline]
    pub fn order(&self) -> u128 {
        self.order
    }

    /// Number of bits needed to write any index, `ceil(log2(order))`.
    pub fn index_bits(&self) -> u32 {
        128 - (self.order - 1).leading_zeros()
    }

    /// Words occupied by one element, `ceil(index_bits / 64)` (at least one).
    pub fn words_per_element(&self) -> usize {
        (self.index_bits().max(1)).div_ceil(WORD_BITS) as usize
    }

    #[inline]
    pub fn zero(&self) -> GroupElement {
        GroupElement(0)
    }

    #[inline]
    pub fn contains(&self, g: GroupElement) -> bool {
        g.0 < self.order
    }

    fn check(&self, g: GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "element {} is not canonical in {}",
                g.0, self
            )))
        }
    }

    pub fn add(&self, g: GroupElement, h: GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.add_unchecked(g, h))
    }

    /// Group sum of two canonical elements. Callers must guarantee both
    /// operands belong to this group.
    #[inline]
    pub fn add_unchecked(&self, g: GroupElement, h: GroupElement) -> GroupElement {
        match self.kind {
            GroupKind::Modular(m) => {
                let gap = m - h.0;
                if g.0 >= gap {
                    GroupElement(g.0 - gap)
                } else {
                    GroupElement(g.0 + h.0)
                }
            }
            GroupKind::Xor(_) => GroupElement(g.0 ^ h.0),
        }
    }

    pub fn negate(&self, g: GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(self.negate_unchecked(g))
    }

    #[inline]
    pub fn negate_unchecked(&self, g: GroupElement) -> GroupElement {
        match self.kind {
            GroupKind::Modular(m) => {
                if g.0 == 0 {
                    g
                } else {
                    GroupElement(m - g.0)
                }
            }
            GroupKind::Xor(_) => g,
        }
    }

    #[inline]
    pub fn sub_unchecked(&self, g: GroupElement, h: GroupElement) -> GroupElement {
        self.add_unchecked(g, self.negate_unchecked(h))
    }

    /// Sum of a sequence of canonical elements.
    pub fn sum<I: IntoIterator<Item = GroupElement>>(&self, items: I) -> GroupElement {
        items
            .into_iter()
            .fold(self.zero(), |acc, g| self.add_unchecked(acc, g))
    }

    /// The injective integer index of an element: the canonical representative.
    #[inline]
    pub fn index(&self, g: GroupElement) -> u128 {
        g.0
    }

    pub fn from_index(&self, i: u128) -> Result<GroupElement> {
        if i < self.order {
            Ok(GroupElement(i))
        } else {
            Err(Error::Range {
                index: i,
                order: self.order,
            })
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        GroupElement(rng.gen_range(0..self.order))
    }

    /// Append the element's words, most significant word first, so that
    /// word-wise lexicographic comparison matches numeric order.
    pub fn to_words(&self, g: GroupElement, out: &mut Vec<u64>) {
        match self.words_per_element() {
            1 => out.push(g.0 as u64),
            _ => {
                out.push((g.0 >> 64) as u64);
                out.push(g.0 as u64);
            }
        }
    }

    pub fn from_words(&self, words: &[u64]) -> GroupElement {
        match words {
            [lo] => GroupElement(*lo as u128),
            [hi, lo] => GroupElement(((*hi as u128) << 64) | *lo as u128),
            _ => panic!("element spans {} words", words.len()),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupKind::Modular(m) => write!(f, "mod:{m}"),
            GroupKind::Xor(bits) => write!(f, "xor:{bits}"),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Parameter(format!("bad group descriptor {s:?}")))?;
        match family {
            "mod" => {
                let m = arg
                    .parse::<u128>()
                    .map_err(|e| Error::Parameter(format!("bad modulus {arg:?}: {e}")))?;
                GroupSpec::modular(m)
            }
            "xor" => {
                let bits = arg
                    .parse::<u32>()
                    .map_err(|e| Error::Parameter(format!("bad xor width {arg:?}: {e}")))?;
                GroupSpec::xor(bits)
            }
            _ => Err(Error::Parameter(format!("unknown group family {family:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn el(v: u128) -> GroupElement {
        GroupElement(v)
    }

    #[test]
    fn modular_examples() {
        let g = GroupSpec::modular(19).unwrap();
        assert_eq!(g.add(el(5), el(16)).unwrap(), el(2));
        assert_eq!(g.add(el(0), el(7)).unwrap(), el(7));
        assert_eq!(g.negate(el(5)).unwrap(), el(14));
        assert_eq!(g.negate(el(0)).unwrap(), el(0));
        assert_eq!(g.index(el(7)), 7);
        assert_eq!(g.from_index(18).unwrap(), el(18));
        assert!(matches!(g.from_index(19), Err(Error::Range { .. })));
        assert!(matches!(g.add(el(19), el(1)), Err(Error::Contract(_))));
    }

    #[test]
    fn xor_examples() {
        let g = GroupSpec::xor(4).unwrap();
        assert_eq!(g.add(el(0b1010), el(0b0110)).unwrap(), el(0b1100));
        for x in 0..16 {
            assert_eq!(g.negate(el(x)).unwrap(), el(x));
        }
        assert_eq!(g.index(el(0b1100)), 12);
    }

    #[test]
    fn group_axioms_exhaustive_small() {
        for spec in [
            GroupSpec::modular(2).unwrap(),
            GroupSpec::modular(19).unwrap(),
            GroupSpec::modular(97).unwrap(),
            GroupSpec::xor(5).unwrap(),
        ] {
            let n = spec.order();
            for a in 0..n {
                let a = el(a);
                assert_eq!(spec.add_unchecked(a, spec.zero()), a);
                assert_eq!(spec.add_unchecked(a, spec.negate_unchecked(a)), spec.zero());
                for b in 0..n {
                    let b = el(b);
                    assert_eq!(spec.add_unchecked(a, b), spec.add_unchecked(b, a));
                    for c in (0..n).step_by(7) {
                        let c = el(c);
                        assert_eq!(
                            spec.add_unchecked(spec.add_unchecked(a, b), c),
                            spec.add_unchecked(a, spec.add_unchecked(b, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn index_is_bijection() {
        for spec in [GroupSpec::xor(16).unwrap(), GroupSpec::modular(65521).unwrap()] {
            let mut seen = vec![false; spec.order() as usize];
            for i in 0..spec.order() {
                let g = spec.from_index(i).unwrap();
                let j = spec.index(g) as usize;
                assert!(!seen[j]);
                seen[j] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_uniform() {
        let spec = GroupSpec::modular(19).unwrap();
        let a = spec.sample_uniform(&mut ChaCha8Rng::seed_from_u64(3));
        let b = spec.sample_uniform(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);

        let bin = GroupSpec::modular(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(bin.sample_uniform(&mut rng).value() < 2);
        }

        // 16 cells, 16000 draws: expected 1000 each, sd ~ 30.6, so [800, 1200]
        // is a > 6 sigma window per cell.
        let spec = GroupSpec::xor(4).unwrap();
        let mut counts = [0u32; 16];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..16000 {
            counts[spec.sample_uniform(&mut rng).value() as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (800..=1200).contains(&c)), "{counts:?}");
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["mod:19", "xor:4", "mod:340282366920938463463374607431768211455"] {
            let g: GroupSpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("mod:1".parse::<GroupSpec>().is_err());
        assert!("xor:128".parse::<GroupSpec>().is_err());
        assert!("add:5".parse::<GroupSpec>().is_err());
        assert!("mod".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn word_layout() {
        let small = GroupSpec::modular(1 << 20).unwrap();
        assert_eq!(small.words_per_element(), 1);
        let exact = GroupSpec::modular(1 << 64).unwrap();
        assert_eq!(exact.words_per_element(), 1);
        let wide = GroupSpec::modular(u128::MAX).unwrap();
        assert_eq!(wide.words_per_element(), 2);
        let g = el(u128::MAX - 5);
        let mut w = Vec::new();
        wide.to_words(g, &mut w);
        assert_eq!(wide.from_words(&w), g);
    }

    proptest! {
        #[test]
        fn wide_modular_axioms(m in 2u128..=u128::MAX, a in any::<u128>(), b in any::<u128>(), c in any::<u128>()) {
            let spec = GroupSpec::modular(m).unwrap();
            let (a, b, c) = (el(a % m), el(b % m), el(c % m));
            prop_assert_eq!(spec.add_unchecked(a, b), spec.add_unchecked(b, a));
            prop_assert_eq!(
                spec.add_unchecked(spec.add_unchecked(a, b), c),
                spec.add_unchecked(a, spec.add_unchecked(b, c))
            );
            prop_assert_eq!(spec.add_unchecked(a, spec.negate_unchecked(a)), spec.zero());
            // reference via u128 wide arithmetic on two halves
            let expect = ((a.0 as u128).wrapping_add(b.0)).wrapping_rem(m);
            if a.0.checked_add(b.0).is_some() {
                prop_assert_eq!(spec.add_unchecked(a, b).0, expect);
            }
        }
    }
}
