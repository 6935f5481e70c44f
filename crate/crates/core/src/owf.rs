//! The subset-sum function over a random oracle, `f^R(x) = R(x_1) + ... +
//! R(x_{k-1})` on tuples of distinct positions, and a harness that
//! measures how well preprocessing adversaries invert it.
//!
//! An [`Adversary`] works in two phases. `preprocess` sees the whole oracle
//! and returns advice words. `online` sees only the challenge and an
//! [`Online`] context through which every advice word read and every oracle
//! query is counted.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cells::{CellArray, ProbeMeter};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::instance::{enumerate_sumset, sample_distinct_tuple, Instance};
use crate::inverter::{plan_parameters, build_with_seed, EvaluableFunction, InversionTables, Mode};

/// Largest group the inverse-table attack addresses directly.
pub const DIRECT_TABLE_MAX: u128 = 1 << 24;

/// `R: [N] -> G`, sampled once and then only read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomOracle {
    spec: GroupSpec,
    table: Vec<GroupElement>,
}

impl RandomOracle {
    pub fn sample<R: Rng + ?Sized>(spec: GroupSpec, n: usize, rng: &mut R) -> Self {
        RandomOracle {
            spec,
            table: (0..n).map(|_| spec.sample_uniform(rng)).collect(),
        }
    }

    pub fn from_values(spec: GroupSpec, values: &[u128]) -> Result<Self> {
        let table = values.iter().map(|&v| spec.from_index(v)).collect::<Result<_>>()?;
        Ok(RandomOracle { spec, table })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// One counted query.
    pub fn query(&self, i: usize, meter: &mut ProbeMeter) -> GroupElement {
        meter.charge(1);
        self.table[i]
    }

    /// The kSUM-Indexing input `A = (R(1), ..., R(N))`.
    pub fn to_instance(&self, k: usize) -> Result<Instance> {
        Instance::new(self.spec, self.table.clone(), k)
    }
}

/// Uniform tuple of `k-1` distinct positions.
pub fn sample_owf_input<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    sample_distinct_tuple(n, k - 1, rng)
}

/// `f^R(x)`, with exactly one oracle query per coordinate.
pub fn eval_owf(r: &RandomOracle, x: &[usize], meter: &mut ProbeMeter) -> GroupElement {
    r.spec.sum(x.iter().map(|&i| r.query(i, meter)))
}

/// Preprocessed advice: a word array of `bits()` bits.
#[derive(Clone, Debug, Default)]
pub struct Advice {
    cells: CellArray,
}

impl Advice {
    pub fn new(words: Vec<u64>) -> Self {
        Advice {
            cells: CellArray::new(words),
        }
    }

    pub fn words(&self) -> usize {
        self.cells.len()
    }

    pub fn bits(&self) -> u64 {
        self.cells.len() as u64 * 64
    }
}

/// What the online phase can see.
pub struct Online<'a> {
    advice: &'a CellArray,
    oracle: &'a RandomOracle,
    k: usize,
    meter: ProbeMeter,
}

impl<'a> Online<'a> {
    pub fn n(&self) -> usize {
        self.oracle.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.oracle.spec
    }

    pub fn advice_words(&self) -> usize {
        self.advice.len()
    }

    pub fn advice(&mut self, offset: usize) -> u64 {
        self.advice.read(offset, &mut self.meter)
    }

    pub fn oracle(&mut self, i: usize) -> GroupElement {
        self.oracle.query(i, &mut self.meter)
    }

    /// Advice reads plus oracle queries so far.
    pub fn queries(&self) -> u64 {
        self.meter.probes()
    }

    /// Open advice that holds an inversion-table dump.
    fn open_tables(&mut self) -> Result<InversionTables> {
        InversionTables::open_metered(self.advice, &mut self.meter)
    }

    /// Invert `y` under the tuple-sum function, counting every table read
    /// and oracle query.
    fn invert_sum(&mut self, tables: &InversionTables, y: u64) -> Option<u64> {
        let f = TupleSum {
            oracle: self.oracle,
            arity: self.k - 1,
        };
        tables.invert(&f, y, &mut self.meter)
    }
}

/// `x -> Index(R(x_1) + ... + R(x_{k-1}))` on mixed-radix tuple codes.
struct TupleSum<'a> {
    oracle: &'a RandomOracle,
    arity: usize,
}

impl TupleSum<'_> {
    fn digits(&self, mut x: u64) -> Vec<usize> {
        let n = self.oracle.len() as u64;
        (0..self.arity)
            .map(|_| {
                let d = (x % n) as usize;
                x /= n;
                d
            })
            .collect()
    }
}

impl EvaluableFunction for TupleSum<'_> {
    fn domain_size(&self) -> u64 {
        (self.oracle.len() as u64).pow(self.arity as u32)
    }

    fn eval(&self, x: u64, meter: &mut ProbeMeter) -> u64 {
        let s = eval_owf(self.oracle, &self.digits(x), meter);
        self.oracle.spec.index(s) as u64
    }

    fn admissible(&self, x: u64) -> bool {
        let d = self.digits(x);
        d.iter().enumerate().all(|(a, i)| !d[..a].contains(i))
    }
}

pub trait Adversary: Sync {
    fn name(&self) -> &str;

    fn preprocess(&self, oracle: &RandomOracle, k: usize) -> Result<Advice>;

    /// A candidate preimage of `challenge`, as positions.
    fn online(&self, ctx: &mut Online<'_>, challenge: GroupElement) -> Option<Vec<usize>>;
}

fn index_bits(n: usize) -> u32 {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1)
}

fn pack_tuple(tuple: &[usize], bits: u32) -> u64 {
    tuple
        .iter()
        .enumerate()
        .fold(1u64, |w, (j, &i)| w | (i as u64) << (1 + j as u32 * bits))
}

fn unpack_tuple(word: u64, arity: usize, bits: u32) -> Option<Vec<usize>> {
    (word & 1 == 1).then(|| {
        (0..arity as u32)
            .map(|j| ((word >> (1 + j * bits)) & ((1 << bits) - 1)) as usize)
            .collect()
    })
}

/// Advice maps every sum to one of its witnesses. Groups up to
/// [`DIRECT_TABLE_MAX`] are addressed directly by index (one advice read);
/// larger ones fall back to a sorted table searched by bisection.
pub struct InverseTable;

impl Adversary for InverseTable {
    fn name(&self) -> &str {
        "inverse-table"
    }

    fn preprocess(&self, oracle: &RandomOracle, k: usize) -> Result<Advice> {
        let spec = oracle.spec;
        let bits = index_bits(oracle.len());
        if 1 + (k as u32 - 1) * bits > 64 {
            return Err(Error::Capacity("a witness tuple does not fit one advice word".into()));
        }
        let sums = enumerate_sumset(&oracle.to_instance(k)?)?;
        if spec.order() <= DIRECT_TABLE_MAX {
            let mut words = vec![0u64; spec.order() as usize];
            for (g, e) in sums.iter() {
                words[spec.index(g) as usize] = pack_tuple(e.witness.indices(), bits);
            }
            Ok(Advice::new(words))
        } else {
            let mut words = Vec::with_capacity(sums.len() * (spec.words_per_element() + 1));
            for (g, e) in sums.iter() {
                spec.to_words(g, &mut words);
                words.push(pack_tuple(e.witness.indices(), bits));
            }
            Ok(Advice::new(words))
        }
    }

    fn online(&self, ctx: &mut Online<'_>, challenge: GroupElement) -> Option<Vec<usize>> {
        let spec = *ctx.spec();
        let (arity, bits) = (ctx.k() - 1, index_bits(ctx.n()));
        let word = if spec.order() <= DIRECT_TABLE_MAX {
            ctx.advice(spec.index(challenge) as usize)
        } else {
            let stride = spec.words_per_element() + 1;
            let (mut lo, mut hi) = (0, ctx.advice_words() / stride);
            let mut found = 0;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                let w: Vec<u64> = (0..stride - 1).map(|j| ctx.advice(mid * stride + j)).collect();
                match spec.from_words(&w).cmp(&challenge) {
                    std::cmp::Ordering::Less => lo = mid + 1,
                    std::cmp::Ordering::Greater => hi = mid,
                    std::cmp::Ordering::Equal => {
                        found = ctx.advice(mid * stride + stride - 1);
                        break;
                    }
                }
            }
            found
        };
        let tuple = unpack_tuple(word, arity, bits)?;
        let sum = spec.sum(tuple.iter().map(|&i| ctx.oracle(i)));
        (sum == challenge).then_some(tuple)
    }
}

/// Advice is a set of inversion tables for the tuple-sum function, planned
/// on the random-function curve within `budget_bits`.
pub struct Hellman {
    pub budget_bits: u64,
}

impl Adversary for Hellman {
    fn name(&self) -> &str {
        "hellman"
    }

    fn preprocess(&self, oracle: &RandomOracle, k: usize) -> Result<Advice> {
        if oracle.spec.order() > 1 << 64 {
            return Err(Error::Unsupported("hellman attack needs |G| <= 2^64".into()));
        }
        let f = TupleSum { oracle, arity: k - 1 };
        let words = self.budget_bits / 64;
        let plan = plan_parameters(f.domain_size(), words, Mode::RandomFunction)?;
        let seed = oracle
            .table
            .iter()
            .fold(0x4865_6c6c_6d61_6e00u64, |h, g| crate::inverter::mix64(h ^ g.value() as u64));
        Ok(Advice::new(build_with_seed(&f, plan.params, seed).to_words().to_vec()))
    }

    fn online(&self, ctx: &mut Online<'_>, challenge: GroupElement) -> Option<Vec<usize>> {
        let tables = ctx.open_tables().ok()?;
        let y = ctx.spec().index(challenge) as u64;
        let x = ctx.invert_sum(&tables, y)?;
        let (n, arity) = (ctx.n() as u64, ctx.k() - 1);
        let mut x = x;
        Some(
            (0..arity)
                .map(|_| {
                    let d = (x % n) as usize;
                    x /= n;
                    d
                })
                .collect(),
        )
    }
}

/// No advice and no queries: guesses a tuple derived from the challenge.
pub struct Null;

impl Adversary for Null {
    fn name(&self) -> &str {
        "null"
    }

    fn preprocess(&self, _oracle: &RandomOracle, _k: usize) -> Result<Advice> {
        Ok(Advice::default())
    }

    fn online(&self, ctx: &mut Online<'_>, challenge: GroupElement) -> Option<Vec<usize>> {
        let seed = challenge.value() as u64 ^ (challenge.value() >> 64) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Some(sample_distinct_tuple(ctx.n(), ctx.k() - 1, &mut rng))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackReport {
    pub n: usize,
    pub k: usize,
    pub group: GroupSpec,
    pub attack: String,
    /// Largest advice size over the trials.
    pub s_bits: u64,
    /// Largest number of advice reads plus oracle queries in one trial.
    pub t_max: u64,
    pub trials: u64,
    pub successes: u64,
    pub seed: u64,
}

impl AttackReport {
    pub fn eps_hat(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub const CSV_HEADER: [&'static str; 9] = ["N", "k", "group", "attack", "S_bits", "T_max", "trials", "eps_hat", "seed"];

    pub fn csv_record(&self) -> [String; 9] {
        [
            self.n.to_string(),
            self.k.to_string(),
            self.group.to_string(),
            self.attack.clone(),
            self.s_bits.to_string(),
            self.t_max.to_string(),
            self.trials.to_string(),
            format!("{:.6}", self.eps_hat()),
            self.seed.to_string(),
        ]
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} N={} k={} {}: eps={:.4} ({}/{}) S={} bits T_max={}",
            self.attack,
            self.n,
            self.k,
            self.group,
            self.eps_hat(),
            self.successes,
            self.trials,
            self.s_bits,
            self.t_max
        )
    }
}

/// Generator for trial `t`: independent of how trials are scheduled.
pub fn trial_rng(seed: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}

/// One trial: fresh oracle, advice, a planted challenge, the online phase.
/// Returns (success, advice bits, queries).
pub fn run_trial<A: Adversary + ?Sized>(
    attack: &A,
    spec: GroupSpec,
    n: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(bool, u64, u64)> {
    let oracle = RandomOracle::sample(spec, n, rng);
    let advice = attack.preprocess(&oracle, k)?;
    let x = sample_owf_input(n, k, rng);
    let y = eval_owf(&oracle, &x, &mut ProbeMeter::new());
    let mut ctx = Online {
        advice: &advice.cells,
        oracle: &oracle,
        k,
        meter: ProbeMeter::new(),
    };
    let answer = attack.online(&mut ctx, y);
    let ok = answer.is_some_and(|x2| {
        x2.len() == k - 1
            && x2.iter().all(|&i| i < n)
            && x2.iter().enumerate().all(|(a, i)| !x2[..a].contains(i))
            && eval_owf(&oracle, &x2, &mut ProbeMeter::new()) == y
    });
    Ok((ok, advice.bits(), ctx.meter.probes()))
}

/// Measure `attack` over `trials` fresh (oracle, input) pairs.
pub fn run_attack<A: Adversary + ?Sized>(
    attack: &A,
    spec: GroupSpec,
    n: usize,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    if k < 3 || n < k - 1 {
        return Err(Error::Parameter(format!("need k >= 3 and N >= k-1, got N={n}, k={k}")));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(attack, spec, n, k, &mut trial_rng(seed, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackReport {
        n,
        k,
        group: spec,
        attack: attack.name().to_string(),
        s_bits: outcomes.iter().map(|o| o.1).max().unwrap_or(0),
        t_max: outcomes.iter().map(|o| o.2).max().unwrap_or(0),
        trials,
        successes: outcomes.iter().filter(|o| o.0).count() as u64,
        seed,
    })
}

/// Exact total-variation distance between the sum of a uniform witness
/// (`Pr[g] = c_g / C(N, k-1)`) and a uniform element of the sumset.
pub fn distribution_distance(inst: &Instance) -> Result<f64> {
    let sums = enumerate_sumset(inst)?;
    let total = sums.total() as f64;
    let uniform = 1.0 / sums.len() as f64;
    Ok(0.5 * sums.iter().map(|(_, e)| (e.count as f64 / total - uniform).abs()).sum::<f64>())
}
