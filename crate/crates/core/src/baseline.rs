//! Reference solvers: exhaustive search, the sorted table of all
//! `(k-1)`-wise sums, and the two-finger scan for `k = 3`.

use std::cmp::Ordering;

use crate::cells::{CellArray, ProbeMeter};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind, GroupSpec};
use crate::instance::{for_each_subset, Instance, Witness};

/// Lexicographically least witness for `b`, or `None` when `b` is not a
/// `(k-1)`-wise sum.
pub fn solve_brute(inst: &Instance, b: GroupElement) -> Result<Option<Witness>> {
    inst.check_enumerable()?;
    let mut found = None;
    let spec = inst.spec();
    let elems = inst.elements();
    // for_each_subset has no early exit; the enumeration is bounded by the guard
    for_each_subset(inst.len(), inst.arity(), |set| {
        if found.is_none() && spec.sum(set.iter().map(|&i| elems[i])) == b {
            found = Some(set.to_vec());
        }
    });
    Ok(found.map(|s| Witness::new(s).expect("subsets are distinct")))
}

/// All distinct `(k-1)`-wise sums, sorted, each with its least witness.
///
/// Entry layout: the sum's words (most significant first) followed by
/// `k-1` index words.
#[derive(Clone, Debug)]
pub struct SortedSums {
    spec: GroupSpec,
    cells: CellArray,
    arity: usize,
    entries: usize,
}

impl SortedSums {
    pub fn build(inst: &Instance) -> Result<Self> {
        let sums = crate::instance::enumerate_sumset(inst)?;
        let spec = *inst.spec();
        let arity = inst.arity();
        let mut words = Vec::with_capacity(sums.len() * (spec.words_per_element() + arity));
        for (g, entry) in sums.iter() {
            spec.to_words(g, &mut words);
            words.extend(entry.witness.indices().iter().map(|&i| i as u64));
        }
        Ok(SortedSums {
            spec,
            cells: CellArray::new(words),
            arity,
            entries: sums.len(),
        })
    }

    pub fn entries(&self) -> usize {
        self.entries
    }

    pub fn space_words(&self) -> usize {
        self.cells.len()
    }

    fn entry_words(&self) -> usize {
        self.spec.words_per_element() + self.arity
    }

    pub fn query(&self, b: GroupElement, meter: &mut ProbeMeter) -> Option<Witness> {
        let wpe = self.spec.words_per_element();
        let stride = self.entry_words();
        let (mut lo, mut hi) = (0usize, self.entries);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let at = mid * stride;
            let g = self.spec.from_words(self.cells.read_range(at..at + wpe, meter));
            match g.cmp(&b) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => {
                    let idx = self.cells.read_range(at + wpe..at + stride, meter);
                    let w = idx.iter().map(|&i| i as usize).collect();
                    return Some(Witness::new(w).expect("stored witnesses are distinct"));
                }
            }
        }
        None
    }
}

/// Inputs sorted by index value plus the sorting permutation, answering
/// `k = 3` queries over `Z/mZ` by scanning for the integer targets `b` and
/// `b + m`.
#[derive(Clone, Debug)]
pub struct TwoFinger {
    modulus: u128,
    n: usize,
    wpe: usize,
    spec: GroupSpec,
    /// `n * wpe` sorted value words, then `n` original positions.
    cells: CellArray,
}

impl TwoFinger {
    pub fn build(inst: &Instance) -> Result<Self> {
        if inst.k() != 3 {
            return Err(Error::Unsupported(format!(
                "two-finger scan needs k = 3, got k = {}",
                inst.k()
            )));
        }
        let spec = *inst.spec();
        let GroupKind::Modular(modulus) = spec.kind() else {
            return Err(Error::Unsupported(
                "two-finger scan needs a modular group".into(),
            ));
        };
        if modulus > 1 << 127 {
            return Err(Error::Unsupported(
                "two-finger scan needs integer sums below 2^128".into(),
            ));
        }
        let mut order: Vec<usize> = (0..inst.len()).collect();
        order.sort_by_key(|&i| (inst.elements()[i], i));
        let mut words = Vec::new();
        for &i in &order {
            spec.to_words(inst.elements()[i], &mut words);
        }
        words.extend(order.iter().map(|&i| i as u64));
        Ok(TwoFinger {
            modulus,
            n: inst.len(),
            wpe: spec.words_per_element(),
            spec,
            cells: CellArray::new(words),
        })
    }

    pub fn space_words(&self) -> usize {
        self.cells.len()
    }

    fn value(&self, pos: usize, meter: &mut ProbeMeter) -> u128 {
        let at = pos * self.wpe;
        self.spec
            .from_words(self.cells.read_range(at..at + self.wpe, meter))
            .value()
    }

    fn scan(&self, target: u128, meter: &mut ProbeMeter) -> Option<(usize, usize)> {
        if self.n < 2 {
            return None;
        }
        let (mut lo, mut hi) = (0, self.n - 1);
        let mut a_lo = self.value(lo, meter);
        let mut a_hi = self.value(hi, meter);
        while lo < hi {
            match a_lo.checked_add(a_hi).map_or(Ordering::Greater, |s| s.cmp(&target)) {
                Ordering::Equal => return Some((lo, hi)),
                Ordering::Less => {
                    lo += 1;
                    if lo < hi {
                        a_lo = self.value(lo, meter);
                    }
                }
                Ordering::Greater => {
                    hi -= 1;
                    if lo < hi {
                        a_hi = self.value(hi, meter);
                    }
                }
            }
        }
        None
    }

    pub fn query(&self, b: GroupElement, meter: &mut ProbeMeter) -> Option<Witness> {
        let b = b.value();
        let targets = [Some(b), b.checked_add(self.modulus)];
        for target in targets.into_iter().flatten() {
            if let Some((lo, hi)) = self.scan(target, meter) {
                let perm = self.n * self.wpe;
                let i = self.cells.read(perm + lo, meter) as usize;
                let j = self.cells.read(perm + hi, meter) as usize;
                return Some(Witness::new(vec![i, j]).expect("distinct sorted positions"));
            }
        }
        None
    }
}
