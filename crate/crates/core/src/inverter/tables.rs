use std::collections::{HashMap, HashSet};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::plan::{HellmanParams, Mode};
use super::EvaluableFunction;
use crate::cells::{CellArray, ProbeMeter};
use crate::error::{Error, Result};

/// "FNTB" as a little-endian word.
pub const MAGIC: u64 = u32::from_le_bytes(*b"FNTB") as u64;
const HEADER_WORDS: usize = 7;

/// Domains up to this size get exact image counts; larger ones are sampled.
const EXACT_COUNT_LIMIT: u64 = 1 << 20;
const COUNT_SAMPLES: u64 = 1 << 20;

const REDIRECT_SALT: u64 = 0xa076_1d64_78bd_642f;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn reduce(h: u64, n: u64) -> u64 {
    ((h as u128 * n as u128) >> 64) as u64
}

/// Keyed rerandomization of one table: maps images back into the domain.
#[derive(Clone, Copy, Debug)]
struct Flavor {
    key: u64,
    domain: u64,
}

impl Flavor {
    fn new(seed: u64, j: u64, domain: u64) -> Self {
        Flavor {
            key: mix64(seed ^ mix64(j.wrapping_add(1).wrapping_mul(GOLDEN))),
            domain,
        }
    }

    #[inline]
    fn apply(&self, y: u64) -> u64 {
        reduce(mix64(y ^ self.key), self.domain)
    }

    /// Successor of `x` when `f(x)` is an explicitly stored heavy image.
    #[inline]
    fn redirect(&self, x: u64) -> u64 {
        reduce(mix64(mix64(x ^ REDIRECT_SALT) ^ self.key), self.domain)
    }
}

/// Built inversion tables.
///
/// Everything lives in one word array: header, `r` chain tables of
/// `(end, start)` pairs sorted by end, the heavy map, and a patch map of
/// images that no chain covered. Both maps are `(image, preimage)` pairs
/// sorted by image.
#[derive(Clone, Debug)]
pub struct InversionTables {
    params: HellmanParams,
    domain: u64,
    seed: u64,
    cells: CellArray,
    tables: Vec<Range<usize>>,
    heavy: Range<usize>,
    patch: Range<usize>,
}

struct ImageGroup {
    image: u64,
    count: u64,
    /// Least admissible preimage, if any.
    preimage: Option<u64>,
}

/// Exact image multiplicities, sorted by image.
fn exact_groups<F: EvaluableFunction + ?Sized>(f: &F) -> Vec<ImageGroup> {
    let domain = f.domain_size();
    let mut pairs: Vec<(u64, bool, u64)> = (0..domain)
        .into_par_iter()
        .map(|x| {
            let y = f.eval(x, &mut ProbeMeter::new());
            (y, !f.admissible(x), x)
        })
        .collect();
    pairs.par_sort_unstable();
    let mut groups: Vec<ImageGroup> = Vec::new();
    for (y, inadmissible, x) in pairs {
        match groups.last_mut() {
            Some(g) if g.image == y => g.count += 1,
            _ => groups.push(ImageGroup {
                image: y,
                count: 1,
                preimage: (!inadmissible).then_some(x),
            }),
        }
    }
    groups
}

fn sampled_groups<F: EvaluableFunction + ?Sized>(f: &F, seed: u64) -> Vec<ImageGroup> {
    let domain = f.domain_size();
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ REDIRECT_SALT));
    let mut seen: HashMap<u64, (u64, Option<u64>)> = HashMap::new();
    let mut meter = ProbeMeter::new();
    for _ in 0..COUNT_SAMPLES {
        let x = rng.gen_range(0..domain);
        let y = f.eval(x, &mut meter);
        let e = seen.entry(y).or_insert((0, None));
        e.0 += 1;
        if f.admissible(x) {
            e.1 = Some(e.1.map_or(x, |p| p.min(x)));
        }
    }
    let mut groups: Vec<ImageGroup> = seen
        .into_iter()
        .map(|(image, (count, preimage))| ImageGroup {
            image,
            count,
            preimage,
        })
        .collect();
    groups.sort_unstable_by_key(|g| g.image);
    groups
}

/// The `limit` most frequent images with an admissible preimage, ties
/// broken by smaller image.
fn heaviest(groups: &[ImageGroup], limit: usize, skip: &HashSet<u64>) -> Vec<(u64, u64)> {
    let mut order: Vec<&ImageGroup> = groups
        .iter()
        .filter(|g| g.preimage.is_some() && !skip.contains(&g.image))
        .collect();
    order.sort_unstable_by(|a, b| b.count.cmp(&a.count).then(a.image.cmp(&b.image)));
    let mut out: Vec<(u64, u64)> = order
        .into_iter()
        .take(limit)
        .map(|g| (g.image, g.preimage.expect("filtered")))
        .collect();
    out.sort_unstable();
    out
}

struct Walker<'a, F: ?Sized> {
    f: &'a F,
    flavor: Flavor,
    heavy: &'a HashSet<u64>,
}

impl<F: EvaluableFunction + ?Sized> Walker<'_, F> {
    #[inline]
    fn step(&self, x: u64, meter: &mut ProbeMeter) -> u64 {
        let y = self.f.eval(x, meter);
        if self.heavy.contains(&y) {
            self.flavor.redirect(x)
        } else {
            self.flavor.apply(y)
        }
    }
}

/// Preprocess `f` into inversion tables. The build is a deterministic
/// function of `f`, `params` and one word drawn from `rng`.
pub fn build_inverter<F, R>(f: &F, params: HellmanParams, rng: &mut R) -> InversionTables
where
    F: EvaluableFunction + ?Sized,
    R: Rng + ?Sized,
{
    build_with_seed(f, params, rng.gen())
}

pub fn build_with_seed<F>(f: &F, params: HellmanParams, seed: u64) -> InversionTables
where
    F: EvaluableFunction + ?Sized,
{
    let domain = f.domain_size();

    if params.is_full_table() {
        let groups = exact_groups(f);
        let explicit: Vec<(u64, u64)> = groups
            .iter()
            .filter_map(|g| g.preimage.map(|x| (g.image, x)))
            .collect();
        return assemble(params, domain, seed, Vec::new(), explicit, Vec::new());
    }

    let exact = domain <= EXACT_COUNT_LIMIT;
    let groups = match params.ell {
        0 => Vec::new(),
        _ if exact => exact_groups(f),
        _ => sampled_groups(f, seed),
    };
    let heavy_cap = params.ell.div_ceil(2) as usize;
    let heavy = heaviest(&groups, heavy_cap, &HashSet::new());
    let heavy_set: HashSet<u64> = heavy.iter().map(|&(y, _)| y).collect();

    let tables: Vec<Vec<(u64, u64)>> = (0..params.r)
        .into_par_iter()
        .map(|j| {
            let walker = Walker {
                f,
                flavor: Flavor::new(seed, j, domain),
                heavy: &heavy_set,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed.wrapping_add(j.wrapping_mul(GOLDEN))));
            let mut meter = ProbeMeter::new();
            let mut pairs: Vec<(u64, u64)> = (0..params.m)
                .map(|_| {
                    let start = rng.gen_range(0..domain);
                    let mut x = start;
                    for _ in 0..params.t {
                        x = walker.step(x, &mut meter);
                    }
                    (x, start)
                })
                .collect();
            pairs.sort_unstable();
            pairs.dedup_by_key(|p| p.0);
            pairs
        })
        .collect();

    // Spend leftover side-table capacity on images no chain reaches.
    let patch_cap = (params.ell as usize).saturating_sub(heavy.len());
    let patch = if exact && patch_cap > 0 {
        let covered = covered_images(f, params, seed, domain, &tables, &heavy_set);
        let mut skip = heavy_set.clone();
        skip.extend(covered);
        heaviest(&groups, patch_cap, &skip)
    } else {
        Vec::new()
    };

    assemble(params, domain, seed, tables, heavy, patch)
}

fn covered_images<F: EvaluableFunction + ?Sized>(
    f: &F,
    params: HellmanParams,
    seed: u64,
    domain: u64,
    tables: &[Vec<(u64, u64)>],
    heavy: &HashSet<u64>,
) -> HashSet<u64> {
    tables
        .par_iter()
        .enumerate()
        .map(|(j, pairs)| {
            let walker = Walker {
                f,
                flavor: Flavor::new(seed, j as u64, domain),
                heavy,
            };
            let mut meter = ProbeMeter::new();
            let mut images = Vec::new();
            for &(_, start) in pairs {
                let mut x = start;
                for _ in 0..params.t {
                    let y = f.eval(x, &mut meter);
                    if f.admissible(x) {
                        images.push(y);
                    }
                    x = walker.step(x, &mut meter);
                }
            }
            images
        })
        .flatten_iter()
        .collect()
}

fn assemble(
    params: HellmanParams,
    domain: u64,
    seed: u64,
    tables: Vec<Vec<(u64, u64)>>,
    heavy: Vec<(u64, u64)>,
    patch: Vec<(u64, u64)>,
) -> InversionTables {
    let mut words = vec![MAGIC, domain, params.m, params.t, params.r, params.ell, seed];
    let push_section = |words: &mut Vec<u64>, pairs: &[(u64, u64)]| {
        words.push(pairs.len() as u64);
        let start = words.len();
        for &(a, b) in pairs {
            words.push(a);
            words.push(b);
        }
        start..words.len()
    };
    let table_ranges: Vec<Range<usize>> = tables.iter().map(|t| push_section(&mut words, t)).collect();
    let heavy = push_section(&mut words, &heavy);
    let patch = push_section(&mut words, &patch);
    InversionTables {
        params,
        domain,
        seed,
        cells: CellArray::new(words),
        tables: table_ranges,
        heavy,
        patch,
    }
}

/// Metered binary search over a section of `(key, value)` pairs.
fn lookup(cells: &CellArray, section: &Range<usize>, key: u64, meter: &mut ProbeMeter) -> Option<u64> {
    let (mut lo, mut hi) = (0, section.len() / 2);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let at = section.start + 2 * mid;
        let k = cells.read(at, meter);
        match k.cmp(&key) {
            std::cmp::Ordering::Less => lo = mid + 1,
            std::cmp::Ordering::Greater => hi = mid,
            std::cmp::Ordering::Equal => return Some(cells.read(at + 1, meter)),
        }
    }
    None
}

impl InversionTables {
    pub fn params(&self) -> &HellmanParams {
        &self.params
    }

    pub fn domain_size(&self) -> u64 {
        self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn space_words(&self) -> usize {
        self.cells.len()
    }

    /// Stored chains per table after merging chains with equal ends.
    pub fn chain_counts(&self) -> Vec<usize> {
        self.tables.iter().map(|r| r.len() / 2).collect()
    }

    pub fn heavy_len(&self) -> usize {
        self.heavy.len() / 2
    }

    pub fn patch_len(&self) -> usize {
        self.patch.len() / 2
    }

    /// Explicit `(image, preimage)` entries, heavy map first.
    pub fn explicit_entries(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let w = self.cells.as_words();
        w[self.heavy.clone()]
            .chunks_exact(2)
            .chain(w[self.patch.clone()].chunks_exact(2))
            .map(|c| (c[0], c[1]))
    }

    /// Stored `(end, start)` pairs of table `j`.
    pub fn chains(&self, j: usize) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.cells.as_words()[self.tables[j].clone()]
            .chunks_exact(2)
            .map(|c| (c[0], c[1]))
    }

    /// Flavored step of table `j`, unmetered.
    pub fn step<F: EvaluableFunction + ?Sized>(&self, f: &F, j: usize, x: u64) -> u64 {
        let flavor = Flavor::new(self.seed, j as u64, self.domain);
        let y = f.eval(x, &mut ProbeMeter::new());
        let heavy = &self.cells.as_words()[self.heavy.clone()];
        if heavy.chunks_exact(2).any(|c| c[0] == y) {
            flavor.redirect(x)
        } else {
            flavor.apply(y)
        }
    }

    #[inline]
    fn step_metered<F: EvaluableFunction + ?Sized>(
        &self,
        f: &F,
        flavor: &Flavor,
        x: u64,
        meter: &mut ProbeMeter,
    ) -> u64 {
        let y = f.eval(x, meter);
        if !self.heavy.is_empty() && lookup(&self.cells, &self.heavy, y, meter).is_some() {
            flavor.redirect(x)
        } else {
            flavor.apply(y)
        }
    }

    #[inline]
    fn accept<F: EvaluableFunction + ?Sized>(&self, f: &F, x: u64, y: u64, meter: &mut ProbeMeter) -> bool {
        f.admissible(x) && f.eval(x, meter) == y
    }

    /// An admissible `x` with `f(x) = y`, or `None`. Never returns a wrong
    /// preimage.
    pub fn invert<F: EvaluableFunction + ?Sized>(&self, f: &F, y: u64, meter: &mut ProbeMeter) -> Option<u64> {
        for section in [&self.heavy, &self.patch] {
            if section.is_empty() {
                continue;
            }
            if let Some(x) = lookup(&self.cells, section, y, meter) {
                if self.accept(f, x, y, meter) {
                    return Some(x);
                }
            }
        }
        let t = self.params.t;
        for (j, table) in self.tables.iter().enumerate() {
            if table.is_empty() {
                continue;
            }
            let flavor = Flavor::new(self.seed, j as u64, self.domain);
            let mut z = flavor.apply(y);
            for i in 0..t {
                if let Some(start) = lookup(&self.cells, table, z, meter) {
                    let mut x = start;
                    for _ in 0..(t - 1 - i) {
                        x = self.step_metered(f, &flavor, x, meter);
                    }
                    if self.accept(f, x, y, meter) {
                        return Some(x);
                    }
                }
                if i + 1 < t {
                    z = self.step_metered(f, &flavor, z, meter);
                }
            }
        }
        None
    }

    pub fn to_words(&self) -> &[u64] {
        self.cells.as_words()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.cells.to_le_bytes()
    }

    /// Parse a dump produced by [`to_bytes`](Self::to_bytes).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 8 != 0 {
            return Err(Error::Malformed("table dump is not a whole number of words".into()));
        }
        let words: Vec<u64> = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::from_words(words)
    }

    /// Locate the sections of a dump held in `cells`, reading only the
    /// header and the section counts through `meter`. Section contents are
    /// not validated.
    pub fn open_metered(cells: &CellArray, meter: &mut ProbeMeter) -> Result<Self> {
        let bad = |what: &str| Error::Malformed(format!("table dump: {what}"));
        if cells.len() < HEADER_WORDS + 2 {
            return Err(bad("missing FNTB header"));
        }
        let h = cells.read_range(0..HEADER_WORDS, meter);
        if h[0] != MAGIC {
            return Err(bad("missing FNTB header"));
        }
        let (domain, m, t, r, ell, seed) = (h[1], h[2], h[3], h[4], h[5], h[6]);
        if r > cells.len() as u64 {
            return Err(bad("table count exceeds dump size"));
        }
        let mut at = HEADER_WORDS;
        let mut ranges = Vec::with_capacity(r as usize + 2);
        for _ in 0..r + 2 {
            if at >= cells.len() {
                return Err(bad("truncated"));
            }
            let len = usize::try_from(cells.read(at, meter))
                .ok()
                .and_then(|c| c.checked_mul(2))
                .ok_or_else(|| bad("section too long"))?;
            let end = (at + 1).checked_add(len).filter(|&e| e <= cells.len());
            let end = end.ok_or_else(|| bad("truncated"))?;
            ranges.push(at + 1..end);
            at = end;
        }
        let patch = ranges.pop().expect("r + 2 sections");
        let heavy = ranges.pop().expect("r + 2 sections");
        let mode = if ell > 0 && r > 0 { Mode::WorstCase } else { Mode::RandomFunction };
        Ok(InversionTables {
            params: HellmanParams { m, t, r, ell, mode },
            domain,
            seed,
            cells: cells.clone(),
            tables: ranges,
            heavy,
            patch,
        })
    }

    pub fn from_words(words: Vec<u64>) -> Result<Self> {
        let bad = |what: &str| Error::Malformed(format!("table dump: {what}"));
        if words.len() < HEADER_WORDS || words[0] != MAGIC {
            return Err(bad("missing FNTB header"));
        }
        let (domain, m, t, r, ell, seed) = (words[1], words[2], words[3], words[4], words[5], words[6]);
        let mut at = HEADER_WORDS;
        let mut section = |words: &[u64]| -> Result<Range<usize>> {
            let count = *words.get(at).ok_or_else(|| bad("truncated"))?;
            let len = usize::try_from(count)
                .ok()
                .and_then(|c| c.checked_mul(2))
                .ok_or_else(|| bad("section too long"))?;
            let start = at + 1;
            let end = start.checked_add(len).filter(|&e| e <= words.len()).ok_or_else(|| bad("truncated"))?;
            let keys: Vec<u64> = words[start..end].iter().step_by(2).copied().collect();
            if keys.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("section keys not strictly increasing"));
            }
            at = end;
            Ok(start..end)
        };
        if r > words.len() as u64 {
            return Err(bad("table count exceeds dump size"));
        }
        let tables = (0..r).map(|_| section(&words)).collect::<Result<Vec<_>>>()?;
        let heavy = section(&words)?;
        let patch = section(&words)?;
        if at != words.len() {
            return Err(bad("trailing words"));
        }
        let mode = if ell > 0 && r > 0 { Mode::WorstCase } else { Mode::RandomFunction };
        Ok(InversionTables {
            params: HellmanParams { m, t, r, ell, mode },
            domain,
            seed,
            cells: CellArray::new(words),
            tables,
            heavy,
            patch,
        })
    }
}
