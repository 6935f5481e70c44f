//! kSUM-Indexing inputs, their sumsets, and query sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};

/// Largest number of `(k-1)`-subsets that may be enumerated explicitly.
pub const ENUMERATION_GUARD: u64 = 1 << 24;

/// A set of distinct, zero-based input positions, kept sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Witness(Vec<usize>);

impl Witness {
    /// Build a witness from positions in any order. Fails on repeats.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract(format!(
                "witness positions must be distinct: {indices:?}"
            )));
        }
        Ok(Witness(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Witness {
    /// One-based, brace-delimited, e.g. `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    spec: GroupSpec,
    elements: Vec<GroupElement>,
    k: usize,
}

impl Instance {
    pub fn new(spec: GroupSpec, elements: Vec<GroupElement>, k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::Parameter(format!("k must be at least 3, got {k}")));
        }
        if elements.len() < k - 1 {
            return Err(Error::Parameter(format!(
                "need at least k-1 = {} elements, got {}",
                k - 1,
                elements.len()
            )));
        }
        if let Some(bad) = elements.iter().find(|g| !spec.contains(**g)) {
            return Err(Error::Contract(format!("element {bad} is not in {spec}")));
        }
        Ok(Instance { spec, elements, k })
    }

    /// Convenience constructor from raw indices.
    pub fn from_indices(spec: GroupSpec, values: &[u128], k: usize) -> Result<Self> {
        let elements = values
            .iter()
            .map(|&v| spec.from_index(v))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(spec, elements, k)
    }

    #[inline]
    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    #[inline]
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    /// Number of inputs `N`.
    #[inline]
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Size of each witness, `k - 1`.
    #[inline]
    pub fn arity(&self) -> usize {
        self.k - 1
    }

    /// `C(N, k-1)`, saturating at `u64::MAX`.
    pub fn subset_count(&self) -> u64 {
        binomial(self.len() as u64, self.arity() as u64)
    }

    pub fn sum_of(&self, indices: &[usize]) -> GroupElement {
        self.spec.sum(indices.iter().map(|&i| self.elements[i]))
    }

    /// True when `w` is a valid answer for query `b`.
    pub fn verifies(&self, w: &Witness, b: GroupElement) -> bool {
        w.len() == self.arity()
            && w.indices().iter().all(|&i| i < self.len())
            && self.sum_of(w.indices()) == b
    }

    pub fn check_enumerable(&self) -> Result<u64> {
        let count = self.subset_count();
        if count > ENUMERATION_GUARD {
            Err(Error::Capacity(format!(
                "C({}, {}) = {count} exceeds the enumeration guard {ENUMERATION_GUARD}",
                self.len(),
                self.arity()
            )))
        } else {
            Ok(count)
        }
    }

    /// Sample a uniformly random witness set and return its sum.
    pub fn sample_planted<R: Rng + ?Sized>(&self, rng: &mut R) -> (GroupElement, Witness) {
        let tuple = sample_distinct_tuple(self.len(), self.arity(), rng);
        let witness = Witness::new(tuple).expect("sampled positions are distinct");
        (self.sum_of(witness.indices()), witness)
    }

    /// Write the plain-text instance format: a header line
    /// `<group> <N> <k>` followed by one decimal index per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.spec, self.len(), self.k)?;
        for g in &self.elements {
            writeln!(out, "{}", self.spec.index(*g))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Malformed("empty instance file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [group, n, k] = fields.as_slice() else {
            return Err(Error::Malformed(format!("bad instance header {header:?}")));
        };
        let spec: GroupSpec = group.parse()?;
        let n: usize = n
            .parse()
            .map_err(|e| Error::Malformed(format!("bad element count {n:?}: {e}")))?;
        let k: usize = k
            .parse()
            .map_err(|e| Error::Malformed(format!("bad k {k:?}: {e}")))?;
        let mut values = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: u128 = line
                .parse()
                .map_err(|e| Error::Malformed(format!("bad element {line:?}: {e}")))?;
            values.push(v);
        }
        if values.len() != n {
            return Err(Error::Malformed(format!(
                "header declares {n} elements, file has {}",
                values.len()
            )));
        }
        Instance::from_indices(spec, &values, k)
    }
}

/// Average-case input: `N` coordinates drawn i.i.d. uniformly from the group.
pub fn gen_average_case<R: Rng + ?Sized>(
    spec: GroupSpec,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Instance> {
    if k < 3 || n < k - 1 {
        return Err(Error::Parameter(format!(
            "need k >= 3 and N >= k-1, got N={n}, k={k}"
        )));
    }
    let elements = (0..n).map(|_| spec.sample_uniform(rng)).collect();
    Instance::new(spec, elements, k)
}

/// Ordered tuple of `len` distinct positions in `[0, n)`, exactly uniform,
/// by rejection of tuples with a repeated coordinate.
pub fn sample_distinct_tuple<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Vec<usize> {
    assert!(len <= n, "cannot draw {len} distinct positions from {n}");
    let mut tuple = Vec::with_capacity(len);
    loop {
        tuple.clear();
        tuple.extend((0..len).map(|_| rng.gen_range(0..n)));
        let mut sorted = tuple.clone();
        sorted.sort_unstable();
        if sorted.windows(2).all(|w| w[0] != w[1]) {
            return tuple;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumEntry {
    /// Number of index sets with this sum, `c_g`.
    pub count: u64,
    /// Lexicographically least index set with this sum.
    pub witness: Witness,
}

/// The set `Z` of `(k-1)`-wise sums, with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumSet {
    entries: BTreeMap<GroupElement, SumEntry>,
    total: u64,
}

impl SumSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `C(N, k-1)`, the sum of all multiplicities.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn contains(&self, g: GroupElement) -> bool {
        self.entries.contains_key(&g)
    }

    pub fn get(&self, g: GroupElement) -> Option<&SumEntry> {
        self.entries.get(&g)
    }

    pub fn multiplicity(&self, g: GroupElement) -> u64 {
        self.entries.get(&g).map_or(0, |e| e.count)
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupElement, &SumEntry)> + '_ {
        self.entries.iter().map(|(g, e)| (*g, e))
    }

    pub fn values(&self) -> impl Iterator<Item = GroupElement> + '_ {
        self.entries.keys().copied()
    }

    /// A value uniform over the distinct elements of `Z`, with its stored witness.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> (GroupElement, Witness) {
        let n = rng.gen_range(0..self.entries.len());
        let (g, e) = self.entries.iter().nth(n).expect("index within length");
        (*g, e.witness.clone())
    }
}

pub fn enumerate_sumset(inst: &Instance) -> Result<SumSet> {
    let total = inst.check_enumerable()?;
    let spec = *inst.spec();
    let elems = inst.elements();
    let mut entries: BTreeMap<GroupElement, SumEntry> = BTreeMap::new();
    for_each_subset(inst.len(), inst.arity(), |set| {
        let g = spec.sum(set.iter().map(|&i| elems[i]));
        entries
            .entry(g)
            .and_modify(|e| e.count += 1)
            .or_insert_with(|| SumEntry {
                count: 1,
                witness: Witness(set.to_vec()),
            });
    });
    Ok(SumSet { entries, total })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryMode {
    /// Uniform over the distinct values of `Z`.
    UniformOverZ,
    /// Sum over a uniformly random `(k-1)`-set.
    UniformWitness,
}

pub fn sample_query<R: Rng + ?Sized>(
    inst: &Instance,
    rng: &mut R,
    mode: QueryMode,
) -> Result<(GroupElement, Witness)> {
    match mode {
        QueryMode::UniformOverZ => Ok(enumerate_sumset(inst)?.sample_uniform(rng)),
        QueryMode::UniformWitness => Ok(inst.sample_planted(rng)),
    }
}

/// Visit every `r`-subset of `[0, n)` in lexicographic order.
pub fn for_each_subset<F: FnMut(&[usize])>(n: usize, r: usize, mut visit: F) {
    if r > n {
        return;
    }
    let mut set: Vec<usize> = (0..r).collect();
    loop {
        visit(&set);
        // rightmost position that can still advance
        let mut pos = r;
        while pos > 0 {
            pos -= 1;
            if set[pos] < n - r + pos {
                set[pos] += 1;
                for q in pos + 1..r {
                    set[q] = set[q - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return;
            }
        }
        if r == 0 {
            return;
        }
    }
}

pub fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}
