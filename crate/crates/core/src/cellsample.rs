//! Cell sampling: pick a random subset `V` of a structure's cells, find
//! the inputs recoverable from queries that only probe inside `V`, and
//! compress the instance as the sampled cells plus the remaining inputs.
//!
//! The structure sampled here is a direct-addressed table with one probe
//! per query: cell `Index(b)` holds the least witness of `b` together with
//! the witness elements' values, or a null marker.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::cells::{CellArray, ProbeMeter};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::instance::{enumerate_sumset, gen_average_case, Instance, Witness};

/// Largest group a reference table is built for.
pub const MAX_CELLS: u128 = 1 << 20;
const MAGIC: &[u8; 4] = b"CSMP";

fn bits_for(count: u128) -> u32 {
    if count <= 1 {
        1
    } else {
        128 - (count - 1).leading_zeros()
    }
}

/// Field widths of a packed cell: a presence bit, then `arity` index
/// fields, then `arity` value fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct CellLayout {
    arity: usize,
    idx_bits: u32,
    val_bits: u32,
}

impl CellLayout {
    fn new(spec: &GroupSpec, n: usize, k: usize) -> Result<Self> {
        let layout = CellLayout {
            arity: k - 1,
            idx_bits: bits_for(n as u128),
            val_bits: bits_for(spec.order()),
        };
        let need = 1 + layout.arity as u32 * (layout.idx_bits + layout.val_bits);
        if need > 64 {
            return Err(Error::Capacity(format!(
                "a witness with its values needs {need} bits, more than one word"
            )));
        }
        Ok(layout)
    }

    fn pack(&self, entries: &[(usize, u128)]) -> u64 {
        let mut word = 1u64;
        let mut at = 1;
        for &(i, _) in entries {
            word |= (i as u64) << at;
            at += self.idx_bits;
        }
        for &(_, v) in entries {
            word |= (v as u64) << at;
            at += self.val_bits;
        }
        word
    }

    fn unpack(&self, word: u64) -> Option<Vec<(usize, u128)>> {
        if word & 1 == 0 {
            return None;
        }
        let field = |at: u32, bits: u32| (word >> at) & ((1u64 << bits) - 1);
        let vals_at = 1 + self.arity as u32 * self.idx_bits;
        Some(
            (0..self.arity as u32)
                .map(|j| {
                    let i = field(1 + j * self.idx_bits, self.idx_bits) as usize;
                    let v = field(vals_at + j * self.val_bits, self.val_bits) as u128;
                    (i, v)
                })
                .collect(),
        )
    }
}

/// Non-adaptive solver with `S = |G|` cells and `T = 1`: query `b` probes
/// only cell `Index(b)`.
#[derive(Clone, Debug)]
pub struct ReferenceTable {
    spec: GroupSpec,
    n: usize,
    layout: CellLayout,
    cells: CellArray,
    /// Per cell, whether the stored witness is the only one for that sum.
    unique: Vec<bool>,
}

impl ReferenceTable {
    pub fn build(inst: &Instance) -> Result<Self> {
        let spec = *inst.spec();
        if spec.order() > MAX_CELLS {
            return Err(Error::Capacity(format!(
                "reference table needs |G| <= {MAX_CELLS}, got {}",
                spec.order()
            )));
        }
        let layout = CellLayout::new(&spec, inst.len(), inst.k())?;
        let sums = enumerate_sumset(inst)?;
        let size = spec.order() as usize;
        let mut words = vec![0u64; size];
        let mut unique = vec![false; size];
        for (b, entry) in sums.iter() {
            let cell = spec.index(b) as usize;
            let packed: Vec<(usize, u128)> = entry
                .witness
                .indices()
                .iter()
                .map(|&i| (i, spec.index(inst.elements()[i])))
                .collect();
            words[cell] = layout.pack(&packed);
            unique[cell] = entry.count == 1;
        }
        Ok(ReferenceTable {
            spec,
            n: inst.len(),
            layout,
            cells: CellArray::new(words),
            unique,
        })
    }

    /// Number of cells, `S`.
    pub fn space(&self) -> usize {
        self.cells.len()
    }

    /// Probes per query, `T`.
    pub fn time(&self) -> usize {
        1
    }

    /// The fixed probe set of query `b`.
    pub fn query_set(&self, b: GroupElement) -> [usize; 1] {
        [self.spec.index(b) as usize]
    }

    pub fn query(&self, b: GroupElement, meter: &mut ProbeMeter) -> Option<Witness> {
        let word = self.cells.read(self.query_set(b)[0], meter);
        self.layout
            .unpack(word)
            .map(|e| Witness::new(e.into_iter().map(|(i, _)| i).collect()).expect("stored witnesses are distinct"))
    }

    pub fn cells(&self) -> &CellArray {
        &self.cells
    }
}

/// `T + ceil((S - T) / N^(1/T))`.
pub fn default_sample_size(space: usize, time: usize, n: usize) -> usize {
    let root = (n as f64).powf(1.0 / time as f64);
    time + ((space - time) as f64 / root).ceil() as usize
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSampleRun {
    /// Sampled cells, sorted.
    pub sample: Vec<usize>,
    /// Queries whose probes all land in the sample.
    pub answerable: Vec<GroupElement>,
    /// Good indices, sorted.
    pub good: Vec<usize>,
}

impl CellSampleRun {
    pub fn v(&self) -> usize {
        self.sample.len()
    }
}

/// Evaluate a given sample: `i` is good when some answerable query has a
/// unique witness that contains `i`.
pub fn run_with_sample(table: &ReferenceTable, mut sample: Vec<usize>) -> Result<CellSampleRun> {
    sample.sort_unstable();
    sample.dedup();
    if sample.last().is_some_and(|&c| c >= table.space()) {
        return Err(Error::Parameter("sampled cell outside the table".into()));
    }
    let mut good = vec![false; table.n];
    let mut answerable = Vec::with_capacity(sample.len());
    for &cell in &sample {
        let b = table.spec.from_index(cell as u128).expect("cells are group indices");
        answerable.push(b);
        if table.unique[cell] {
            for (i, _) in table.layout.unpack(table.cells.as_words()[cell]).expect("unique implies present") {
                good[i] = true;
            }
        }
    }
    Ok(CellSampleRun {
        sample,
        answerable,
        good: (0..table.n).filter(|&i| good[i]).collect(),
    })
}

/// Sample `v` distinct cells uniformly and evaluate them.
pub fn run_cellsample<R: Rng + ?Sized>(table: &ReferenceTable, v: usize, rng: &mut R) -> Result<CellSampleRun> {
    if v > table.space() {
        return Err(Error::Parameter(format!("v = {v} exceeds S = {}", table.space())));
    }
    run_with_sample(table, sample(rng, table.space(), v).into_vec())
}

/// A compressed instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub bytes: Vec<u8>,
    /// Bits spent on the header (size fields, group descriptor, the sample
    /// list and the good-index mask).
    pub header_bits: usize,
}

impl Encoding {
    pub fn len_bits(&self) -> usize {
        self.bytes.len() * 8
    }

    /// `v w + (N - |N_V|) ceil(log2 |G|) + header`, plus at most seven bits
    /// of byte padding.
    pub fn bound_bits(&self, v: usize, n: usize, good: usize, spec: &GroupSpec) -> usize {
        v * 64 + (n - good) * bits_for(spec.order()) as usize + self.header_bits + 7
    }
}

struct BitWriter {
    bytes: Vec<u8>,
    bit: usize,
}

impl BitWriter {
    fn push(&mut self, value: u128, bits: u32) {
        for j in 0..bits {
            if self.bit % 8 == 0 {
                self.bytes.push(0);
            }
            if (value >> j) & 1 == 1 {
                *self.bytes.last_mut().expect("pushed") |= 1 << (self.bit % 8);
            }
            self.bit += 1;
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Malformed("encoding truncated".into()))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Store the sampled cells and the inputs that are not good.
pub fn encode(inst: &Instance, table: &ReferenceTable, run: &CellSampleRun) -> Encoding {
    let spec = inst.spec();
    let n = inst.len();
    let desc = spec.to_string();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(n as u32).to_le_bytes());
    bytes.extend_from_slice(&(inst.k() as u32).to_le_bytes());
    bytes.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    bytes.extend_from_slice(desc.as_bytes());
    bytes.extend_from_slice(&(run.v() as u64).to_le_bytes());
    for &c in &run.sample {
        bytes.extend_from_slice(&(c as u64).to_le_bytes());
    }
    let mut mask = vec![0u8; n.div_ceil(8)];
    for &i in &run.good {
        mask[i / 8] |= 1 << (i % 8);
    }
    bytes.extend_from_slice(&mask);
    let header_bits = bytes.len() * 8;

    for &c in &run.sample {
        bytes.extend_from_slice(&table.cells.as_words()[c].to_le_bytes());
    }
    let mut raw = BitWriter { bytes, bit: 0 };
    let gbits = bits_for(spec.order());
    let mut good = run.good.iter().peekable();
    for (i, &a) in inst.elements().iter().enumerate() {
        if good.peek() == Some(&&i) {
            good.next();
        } else {
            raw.push(spec.index(a), gbits);
        }
    }
    Encoding {
        bytes: raw.bytes,
        header_bits,
    }
}

/// Rebuild the instance by replaying every sampled cell's query and
/// reading the remaining inputs from the raw section.
pub fn decode(bytes: &[u8]) -> Result<Instance> {
    let bad = |what: &str| Error::Malformed(format!("cell-sample encoding: {what}"));
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let n = r.u32()? as usize;
    let k = r.u32()? as usize;
    let desc_len = r.u32()? as usize;
    let desc = std::str::from_utf8(r.take(desc_len)?).map_err(|_| bad("group descriptor is not UTF-8"))?;
    let spec: GroupSpec = desc.parse()?;
    if k < 3 || n + 1 < k {
        return Err(bad("invalid N or k"));
    }
    let layout = CellLayout::new(&spec, n, k)?;
    let v = usize::try_from(r.u64()?).map_err(|_| bad("v too large"))?;
    if v as u128 > spec.order() {
        return Err(bad("v exceeds the table size"));
    }
    let sample = (0..v)
        .map(|_| r.u64().map(|c| c as u128))
        .collect::<Result<Vec<u128>>>()?;
    let mask = r.take(n.div_ceil(8))?.to_vec();
    let is_good = |i: usize| mask[i / 8] >> (i % 8) & 1 == 1;

    let mut values: Vec<Option<u128>> = vec![None; n];
    for &cell in &sample {
        let word = r.u64()?;
        let b = spec.from_index(cell).map_err(|_| bad("sampled cell outside the group"))?;
        let Some(entries) = layout.unpack(word) else {
            continue;
        };
        let mut sum = spec.zero();
        for &(i, val) in &entries {
            if i >= n {
                return Err(bad("witness index out of range"));
            }
            let a = spec.from_index(val).map_err(|_| bad("stored value outside the group"))?;
            sum = spec.add_unchecked(sum, a);
            if is_good(i) {
                values[i] = Some(val);
            }
        }
        if sum != b {
            return Err(bad("stored witness does not sum to its cell"));
        }
    }

    let gbits = bits_for(spec.order());
    let mut bit = r.at * 8;
    for (i, slot) in values.iter_mut().enumerate() {
        if is_good(i) {
            if slot.is_none() {
                return Err(bad("good index not recovered from the sampled cells"));
            }
            continue;
        }
        let mut val = 0u128;
        for j in 0..gbits {
            let byte = *bytes.get(bit / 8).ok_or_else(|| bad("raw section truncated"))?;
            val |= ((byte >> (bit % 8) & 1) as u128) << j;
            bit += 1;
        }
        *slot = Some(val);
    }
    if bit.div_ceil(8) != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    let values: Vec<u128> = values.into_iter().map(|v| v.expect("filled")).collect();
    Instance::from_indices(spec, &values, k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub n: usize,
    pub group: GroupSpec,
    pub v: usize,
    pub trials: u64,
    /// Fraction of trials with `|N_V| >= N/5`.
    pub frac_savings_event: f64,
    pub max_encoding_bits: usize,
    pub roundtrip_ok: bool,
    /// Every encoding met its length bound.
    pub bound_ok: bool,
}

/// Run `trials` independent (instance, sample) draws. Trial `i` uses its
/// own generator seeded from `seed` and `i`, so the result does not
/// depend on scheduling.
pub fn experiment(spec: GroupSpec, n: usize, k: usize, v: Option<usize>, trials: u64, seed: u64) -> Result<ExperimentReport> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let space = usize::try_from(spec.order()).unwrap_or(usize::MAX);
    let v = v.unwrap_or_else(|| default_sample_size(space, 1, n));
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, usize, bool, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let inst = gen_average_case(spec, n, k, &mut rng)?;
            let table = ReferenceTable::build(&inst)?;
            let run = run_cellsample(&table, v, &mut rng)?;
            let enc = encode(&inst, &table, &run);
            let round = decode(&enc.bytes).map(|d| d == inst).unwrap_or(false);
            let within = enc.len_bits() <= enc.bound_bits(run.v(), n, run.good.len(), &spec);
            Ok((5 * run.good.len() >= n, enc.len_bits(), round, within))
        })
        .collect::<Result<Vec<_>>>()?;
    let hits = outcomes.iter().filter(|o| o.0).count();
    Ok(ExperimentReport {
        n,
        group: spec,
        v,
        trials,
        frac_savings_event: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
        max_encoding_bits: outcomes.iter().map(|o| o.1).max().unwrap_or(0),
        roundtrip_ok: outcomes.iter().all(|o| o.2),
        bound_ok: outcomes.iter().all(|o| o.3),
    })
}
