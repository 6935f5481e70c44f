//! kSUM-Indexing through function inversion modulo random primes.
//!
//! For each prime `p` the structure preprocesses
//! `f_p(i_1, ..., i_{k-1}) = Index(a_{i_1} + ... + a_{i_{k-1}}) mod p`
//! over the tuple domain `[N]^(k-1)`. A query inverts `Index(b) mod p` for
//! each prime in turn and re-checks every candidate against the stored
//! input, so it never reports a false positive.

mod primes;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{CellArray, ProbeMeter, ProbeStats};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::instance::{enumerate_sumset, Instance, Witness};
use crate::inverter::{budget_floor, build_with_seed, plan_parameters, EvaluableFunction, InversionTables, Mode};

pub use primes::{is_prime, next_prime, prime_count, prime_interval, sample_primes};

/// Index-range exponent used when none is given.
pub const DEFAULT_C: u64 = 2;
/// Isolation checks run by default up to this many inputs.
pub const VERIFY_DEFAULT_MAX_N: usize = 32;
/// Prime sets drawn before giving up on the isolation check.
pub const MAX_RESAMPLES: usize = 64;

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Tradeoff knob in `[0, k-2]`; space shrinks as `N^(k-1-delta)`.
    pub delta: f64,
    pub c: u64,
    /// Check that every sum is isolated modulo some prime. `None` means
    /// on for `N <= 32`.
    pub verify: Option<bool>,
    pub mode: Mode,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            delta: 0.0,
            c: DEFAULT_C,
            verify: None,
            mode: Mode::WorstCase,
        }
    }
}

impl BuildOptions {
    pub fn with_delta(delta: f64) -> Self {
        BuildOptions {
            delta,
            ..Self::default()
        }
    }
}

/// Read-only view of the stored input, shared by every prime.
#[derive(Clone, Copy)]
struct Raw<'a> {
    cells: &'a CellArray,
    spec: &'a GroupSpec,
    n: usize,
    arity: usize,
}

impl Raw<'_> {
    fn element(&self, i: usize, meter: &mut ProbeMeter) -> GroupElement {
        let wpe = self.spec.words_per_element();
        self.spec
            .from_words(self.cells.read_range(i * wpe..(i + 1) * wpe, meter))
    }

    /// Mixed-radix digits of a tuple code, least significant first.
    fn decode(&self, mut x: u64, out: &mut [usize]) {
        for d in out.iter_mut() {
            *d = (x % self.n as u64) as usize;
            x /= self.n as u64;
        }
    }

    fn tuple_sum(&self, x: u64, meter: &mut ProbeMeter) -> GroupElement {
        let mut digits = [0usize; 16];
        let digits = &mut digits[..self.arity];
        self.decode(x, digits);
        self.spec
            .sum(digits.iter().map(|&i| self.element(i, meter)))
    }
}

/// Encode a tuple of indices, least significant digit first.
pub fn encode_tuple(tuple: &[usize], n: usize) -> u64 {
    tuple.iter().rev().fold(0u64, |acc, &i| acc * n as u64 + i as u64)
}

struct ModularFn<'a> {
    raw: Raw<'a>,
    p: u64,
    domain: u64,
}

impl EvaluableFunction for ModularFn<'_> {
    fn domain_size(&self) -> u64 {
        self.domain
    }

    fn eval(&self, x: u64, meter: &mut ProbeMeter) -> u64 {
        let s = self.raw.tuple_sum(x, meter);
        (self.raw.spec.index(s) % self.p as u128) as u64
    }

    fn admissible(&self, x: u64) -> bool {
        let mut digits = [0usize; 16];
        let digits = &mut digits[..self.raw.arity];
        self.raw.decode(x, digits);
        digits.iter().enumerate().all(|(a, i)| !digits[..a].contains(i))
    }
}

/// One prime and its inversion tables.
#[derive(Clone, Debug)]
pub struct ModularStructure {
    pub p: u64,
    pub tables: InversionTables,
}

#[derive(Clone, Debug)]
pub struct KSumStructure {
    inst: Instance,
    raw: CellArray,
    subs: Vec<ModularStructure>,
    delta: f64,
    c: u64,
    seed: u64,
    mode: Mode,
}

/// Words given to each prime's tables for `delta`: `2 N^(k-1-delta)`,
/// raised to the inverter's floor where that is larger.
pub fn budget_per_prime(n: usize, k: usize, delta: f64) -> u64 {
    let domain = (n as f64).powi(k as i32 - 1);
    let want = (2.0 * (n as f64).powf(k as f64 - 1.0 - delta)).round() as u64;
    want.max(budget_floor(domain as u64))
}

fn tuple_domain(n: usize, k: usize) -> Result<u64> {
    (n as u64)
        .checked_pow(k as u32 - 1)
        .filter(|&m| m <= 1 << 40)
        .ok_or_else(|| Error::Capacity(format!("tuple domain N^(k-1) for N = {n}, k = {k} is too large")))
}

fn table_seed(seed: u64, i: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000_0000);
    rng.set_stream(i as u64 + 1);
    rng.gen()
}

/// True when every value of `sums` is alone in its residue class modulo
/// at least one of `primes`.
pub fn isolates(spec: &GroupSpec, sums: &[GroupElement], primes: &[u64]) -> bool {
    let residues: Vec<HashMap<u64, u32>> = primes
        .iter()
        .map(|&p| {
            let mut counts = HashMap::new();
            for &s in sums {
                *counts.entry((spec.index(s) % p as u128) as u64).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    sums.iter().all(|&s| {
        primes
            .iter()
            .zip(&residues)
            .any(|(&p, counts)| counts[&((spec.index(s) % p as u128) as u64)] == 1)
    })
}

impl KSumStructure {
    pub fn build<R: Rng + ?Sized>(inst: &Instance, opts: &BuildOptions, rng: &mut R) -> Result<Self> {
        Self::build_with_seed(inst, opts, rng.gen())
    }

    pub fn build_with_seed(inst: &Instance, opts: &BuildOptions, seed: u64) -> Result<Self> {
        let (n, k) = (inst.len(), inst.k());
        let max_delta = (k - 2) as f64;
        if !(0.0..=max_delta).contains(&opts.delta) {
            return Err(Error::Parameter(format!(
                "delta = {} outside [0, {max_delta}]",
                opts.delta
            )));
        }
        if opts.c < 1 {
            return Err(Error::Parameter("c must be at least 1".into()));
        }
        if k - 1 > 16 {
            return Err(Error::Unsupported(format!("k = {k} is above 17")));
        }
        let domain = tuple_domain(n, k)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let verify = opts.verify.unwrap_or(n <= VERIFY_DEFAULT_MAX_N);
        let primes = if verify {
            let sums: Vec<GroupElement> = enumerate_sumset(inst)?.values().collect();
            let mut attempt = 0;
            loop {
                let primes = sample_primes(n, k, opts.c, &mut rng)?;
                if isolates(inst.spec(), &sums, &primes) {
                    break primes;
                }
                attempt += 1;
                if attempt == MAX_RESAMPLES {
                    return Err(Error::Build(format!(
                        "no isolating prime set after {MAX_RESAMPLES} draws"
                    )));
                }
            }
        } else {
            sample_primes(n, k, opts.c, &mut rng)?
        };

        let mut words = Vec::with_capacity(n * inst.spec().words_per_element());
        for &a in inst.elements() {
            inst.spec().to_words(a, &mut words);
        }
        let raw = CellArray::new(words);
        let plan = plan_parameters(domain, budget_per_prime(n, k, opts.delta), opts.mode)?;
        let view = Raw {
            cells: &raw,
            spec: inst.spec(),
            n,
            arity: k - 1,
        };
        let subs = primes
            .par_iter()
            .enumerate()
            .map(|(i, &p)| {
                let f = ModularFn { raw: view, p, domain };
                ModularStructure {
                    p,
                    tables: build_with_seed(&f, plan.params, table_seed(seed, i)),
                }
            })
            .collect();

        Ok(KSumStructure {
            inst: inst.clone(),
            raw,
            subs,
            delta: opts.delta,
            c: opts.c,
            seed,
            mode: opts.mode,
        })
    }

    fn view(&self) -> Raw<'_> {
        Raw {
            cells: &self.raw,
            spec: self.inst.spec(),
            n: self.inst.len(),
            arity: self.inst.arity(),
        }
    }

    fn function(&self, i: usize) -> ModularFn<'_> {
        ModularFn {
            raw: self.view(),
            p: self.subs[i].p,
            domain: self.subs[i].tables.domain_size(),
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn primes(&self) -> Vec<u64> {
        self.subs.iter().map(|s| s.p).collect()
    }

    pub fn subs(&self) -> &[ModularStructure] {
        &self.subs
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Raw input, one word per prime, and every table.
    pub fn space_words(&self) -> usize {
        self.raw.len() + self.subs.iter().map(|s| 1 + s.tables.space_words()).sum::<usize>()
    }

    /// Distinct indices whose sum is congruent to `b` modulo prime `i`, as
    /// found by that prime's tables.
    pub fn query_modular(&self, i: usize, b: GroupElement, meter: &mut ProbeMeter) -> Option<Vec<usize>> {
        let f = self.function(i);
        let y = (self.inst.spec().index(b) % f.p as u128) as u64;
        let x = self.subs[i].tables.invert(&f, y, meter)?;
        if !f.admissible(x) {
            return None;
        }
        let mut tuple = vec![0; self.inst.arity()];
        f.raw.decode(x, &mut tuple);
        tuple.sort_unstable();
        Some(tuple)
    }

    /// A witness for `b`, or `None` when no prime produced a candidate
    /// whose sum equals `b` in the group.
    pub fn query(&self, b: GroupElement, meter: &mut ProbeMeter) -> Option<Witness> {
        let view = self.view();
        for i in 0..self.subs.len() {
            if let Some(tuple) = self.query_modular(i, b, meter) {
                let sum = self
                    .inst
                    .spec()
                    .sum(tuple.iter().map(|&j| view.element(j, meter)));
                if sum == b {
                    return Some(Witness::new(tuple).expect("admissible tuples are distinct"));
                }
            }
        }
        None
    }

    /// Probe statistics over a workload, queried in parallel.
    pub fn probe_report(&self, workload: &[GroupElement]) -> ProbeStats {
        let counts: Vec<u64> = workload
            .par_iter()
            .map(|&b| {
                let mut meter = ProbeMeter::new();
                self.query(b, &mut meter);
                meter.probes()
            })
            .collect();
        ProbeStats::from_counts(counts)
    }

    /// Write `instance.txt`, `prime_<i>.fntb` and `manifest.json` into `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut inst = Vec::new();
        self.inst.write_to(&mut inst)?;
        fs::write(dir.join("instance.txt"), inst)?;
        for (i, s) in self.subs.iter().enumerate() {
            fs::write(dir.join(format!("prime_{i}.fntb")), s.tables.to_bytes())?;
        }
        let manifest = Manifest {
            instance: "instance.txt".into(),
            group: self.inst.spec().to_string(),
            n: self.inst.len(),
            k: self.inst.k(),
            delta: self.delta,
            c: self.c,
            mode: self.mode.to_string(),
            seed: self.seed,
            primes: self.primes(),
            space_words: self.space_words(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("manifest.json: {e}")))?;
        let file = fs::File::open(dir.join(&m.instance))?;
        let inst = Instance::read_from(std::io::BufReader::new(file))?;
        if inst.len() != m.n || inst.k() != m.k || inst.spec().to_string() != m.group {
            return Err(Error::Malformed("manifest does not match the instance file".into()));
        }
        let domain = tuple_domain(inst.len(), inst.k())?;
        let mut subs = Vec::with_capacity(m.primes.len());
        for (i, &p) in m.primes.iter().enumerate() {
            let tables = InversionTables::from_bytes(&fs::read(dir.join(format!("prime_{i}.fntb")))?)?;
            if tables.domain_size() != domain {
                return Err(Error::Malformed(format!("prime_{i}.fntb has the wrong domain")));
            }
            subs.push(ModularStructure { p, tables });
        }
        let mut words = Vec::new();
        for &a in inst.elements() {
            inst.spec().to_words(a, &mut words);
        }
        let ks = KSumStructure {
            inst,
            raw: CellArray::new(words),
            subs,
            delta: m.delta,
            c: m.c,
            seed: m.seed,
            mode: m.mode.parse()?,
        };
        if ks.space_words() != m.space_words {
            return Err(Error::Malformed("space_words in manifest does not match the tables".into()));
        }
        Ok(ks)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    instance: String,
    group: String,
    n: usize,
    k: usize,
    delta: f64,
    c: u64,
    mode: String,
    seed: u64,
    primes: Vec<u64>,
    space_words: usize,
}
