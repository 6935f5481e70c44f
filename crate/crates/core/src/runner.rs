//! Command line front end. Every subcommand is deterministic given its
//! arguments; `--seed` is always required.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cells::ProbeMeter;
use crate::cellsample;
use crate::error::{Error, Result};
use crate::geometry;
use crate::group::{GroupElement, GroupKind, GroupSpec};
use crate::instance::{gen_average_case, Instance, Witness};
use crate::inverter::{build_inverter, measure_success, plan_parameters, Mode, TableFunction};
use crate::ksum::{next_prime, BuildOptions, KSumStructure, DEFAULT_C};
use crate::owf::{self, Adversary};
use crate::baseline::solve_brute;

#[derive(Parser, Debug)]
#[command(name = "ksum", version, about = "kSUM-Indexing structures, inversion tables and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every random choice.
    #[arg(long)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Random,
    Worst,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Random => Mode::RandomFunction,
            ModeArg::Worst => Mode::WorstCase,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AttackArg {
    InverseTable,
    Hellman,
    Null,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a uniformly random instance file.
    ///
    /// Format: a header line "<group> <N> <k>" then one element index per line.
    Gen {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build a structure for an instance and dump it to a directory.
    ///
    /// The directory receives instance.txt, prime_<i>.fntb and manifest.json.
    /// CSV to --out/stdout: n,k,group,delta,c,seed,primes,space_words
    Build {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_C)]
        c: u64,
        #[arg(long, value_enum, default_value = "worst")]
        mode: ModeArg,
        /// Force the isolation check on or off (default: on for N <= 32).
        #[arg(long)]
        verify: Option<bool>,
        #[arg(long)]
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Answer queries against a dumped structure.
    ///
    /// Queries are the --b values, then --sample planted sums and --sample
    /// uniform group elements drawn with --seed.
    /// CSV: b,found,witness,verified,probes (witness positions are 1-based).
    Query {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        b: Vec<u128>,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Measure space and probes of built structures over a query workload.
    ///
    /// CSV: n,k,group,delta,c,seed,space_words,worst_probes,mean_probes,build_ms,success_all
    /// build_ms is 0 unless --timing is given.
    BenchTradeoff {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// One or more values; one row each.
        #[arg(long, num_args = 1.., default_values_t = [0.0])]
        delta: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_C)]
        c: u64,
        #[arg(long, value_enum, default_value = "worst")]
        mode: ModeArg,
        #[arg(long)]
        verify: Option<bool>,
        /// Planted queries, plus as many uniform ones.
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a preprocessing attack on the subset-sum one-way function.
    ///
    /// CSV: N,k,group,attack,S_bits,T_max,trials,eps_hat,seed
    /// The default group is Z/pZ for the least prime p >= N^k.
    AttackOwf {
        #[arg(long, value_enum)]
        attack: AttackArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        group: Option<GroupSpec>,
        #[arg(long, default_value_t = 1_000_000)]
        budget_bits: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Cell-sampling compression experiment on a direct-addressed table.
    ///
    /// CSV: n,group,v,trials,frac_savings_event,max_encoding_bits,roundtrip_ok
    CellsampleDemo {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "xor:16")]
        group: GroupSpec,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Sampled cells (default T + ceil((S - T) / N^(1/T))).
        #[arg(long)]
        v: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Check the three-points-on-a-cubic reduction against brute force.
    ///
    /// Instances have pairwise distinct elements. Every group element is queried.
    /// CSV: instance,n,group,queries,solutions,agreements,all_agree
    #[command(name = "reduce-3pol")]
    Reduce3pol {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check the comb polygon containment reduction against brute force.
    ///
    /// agreements counts queries where the tooth-alignment answer matches brute
    /// force; cover_agreements counts queries where the exact rectangle-cover
    /// check finds the same translations.
    /// CSV: instance,n,group,abar,queries,solutions,agreements,cover_agreements,all_agree
    ReducePolygon {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        /// Element bound (default max(A) + 1).
        #[arg(long)]
        abar: Option<i128>,
        #[command(flatten)]
        common: Common,
    },
    /// Inversion tables for a random function on [M].
    ///
    /// CSV: M,mode,budget_words,m,t,r,ell,space_words,predicted_probes,trials,success_rate,invalid,max_probes,mean_probes
    InvertBench {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        budget: u64,
        #[arg(long, value_enum, default_value = "random")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Internal(format!("csv: {other:?}")),
    }
}

fn emit(out: &Option<PathBuf>, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))?;
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn witness_cell(w: &Option<Witness>) -> String {
    w.as_ref().map_or_else(String::new, |w| w.to_string())
}

fn read_instance(path: &PathBuf) -> Result<Instance> {
    Instance::read_from(io::BufReader::new(fs::File::open(path)?))
}

fn distinct_values(inst: &Instance) -> bool {
    let mut v: Vec<_> = inst.elements().to_vec();
    v.sort_unstable();
    v.windows(2).all(|w| w[0] != w[1])
}

/// Instance `i` of a reduction check, redrawn until its elements are
/// pairwise distinct.
fn reduction_instance(spec: GroupSpec, n: usize, seed: u64, i: usize) -> Result<Instance> {
    if (n as u128) > spec.order() {
        return Err(Error::Parameter(format!("cannot draw {n} distinct elements from {spec}")));
    }
    let mut rng = owf::trial_rng(seed, i as u64);
    loop {
        let inst = gen_average_case(spec, n, 3, &mut rng)?;
        if distinct_values(&inst) {
            return Ok(inst);
        }
    }
}

fn all_elements(spec: &GroupSpec) -> Result<Vec<GroupElement>> {
    if spec.order() > 1 << 20 {
        return Err(Error::Capacity(format!("querying all of {spec} is too many queries")));
    }
    (0..spec.order()).map(|v| spec.from_index(v)).collect()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { group, n, k, common } => {
            let inst = gen_average_case(group, n, k, &mut ChaCha8Rng::seed_from_u64(common.seed))?;
            let mut bytes = Vec::new();
            inst.write_to(&mut bytes)?;
            match &common.out {
                Some(p) => fs::write(p, bytes)?,
                None => io::stdout().lock().write_all(&bytes)?,
            }
            Ok(())
        }

        Command::Build {
            instance,
            delta,
            c,
            mode,
            verify,
            dir,
            common,
        } => {
            let inst = read_instance(&instance)?;
            let opts = BuildOptions {
                delta,
                c,
                verify,
                mode: mode.into(),
            };
            let ks = KSumStructure::build_with_seed(&inst, &opts, common.seed)?;
            ks.dump(&dir)?;
            let primes: Vec<String> = ks.primes().iter().map(|p| p.to_string()).collect();
            emit(
                &common.out,
                &["n", "k", "group", "delta", "c", "seed", "primes", "space_words"],
                vec![vec![
                    inst.len().to_string(),
                    inst.k().to_string(),
                    inst.spec().to_string(),
                    delta.to_string(),
                    c.to_string(),
                    common.seed.to_string(),
                    primes.join(" "),
                    ks.space_words().to_string(),
                ]],
            )
        }

        Command::Query { dir, b, sample, common } => {
            let ks = KSumStructure::load(&dir)?;
            let inst = ks.instance();
            let spec = *inst.spec();
            let mut queries = b.iter().map(|&v| spec.from_index(v)).collect::<Result<Vec<_>>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            queries.extend((0..sample).map(|_| inst.sample_planted(&mut rng).0));
            queries.extend((0..sample).map(|_| spec.sample_uniform(&mut rng)));
            let rows = queries
                .par_iter()
                .map(|&q| {
                    let mut meter = ProbeMeter::new();
                    let w = ks.query(q, &mut meter);
                    let verified = w.as_ref().is_none_or(|w| inst.verifies(w, q));
                    vec![
                        q.to_string(),
                        w.is_some().to_string(),
                        witness_cell(&w),
                        verified.to_string(),
                        meter.probes().to_string(),
                    ]
                })
                .collect();
            emit(&common.out, &["b", "found", "witness", "verified", "probes"], rows)
        }

        Command::BenchTradeoff {
            group,
            n,
            k,
            delta,
            c,
            mode,
            verify,
            queries,
            timing,
            common,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            let inst = gen_average_case(group, n, k, &mut rng)?;
            let planted: Vec<GroupElement> = (0..queries).map(|_| inst.sample_planted(&mut rng).0).collect();
            let uniform: Vec<GroupElement> = (0..queries).map(|_| group.sample_uniform(&mut rng)).collect();
            let mut rows = Vec::new();
            for (row, &d) in delta.iter().enumerate() {
                let opts = BuildOptions {
                    delta: d,
                    c,
                    verify,
                    mode: mode.into(),
                };
                let started = Instant::now();
                let ks = KSumStructure::build_with_seed(&inst, &opts, common.seed.wrapping_add(row as u64))?;
                let build_ms = if timing { started.elapsed().as_millis() } else { 0 };
                let results: Vec<(bool, bool, u64)> = planted
                    .par_iter()
                    .map(|&b| (b, true))
                    .chain(uniform.par_iter().map(|&b| (b, false)))
                    .map(|(b, is_planted)| {
                        let mut meter = ProbeMeter::new();
                        let w = ks.query(b, &mut meter);
                        let sound = w.as_ref().is_none_or(|w| inst.verifies(w, b));
                        (sound && (!is_planted || w.is_some()), sound, meter.probes())
                    })
                    .collect();
                let stats = crate::cells::ProbeStats::from_counts(results.iter().map(|r| r.2));
                rows.push(vec![
                    n.to_string(),
                    k.to_string(),
                    group.to_string(),
                    d.to_string(),
                    c.to_string(),
                    common.seed.to_string(),
                    ks.space_words().to_string(),
                    stats.max.to_string(),
                    f6(stats.mean),
                    build_ms.to_string(),
                    results.iter().all(|r| r.0 && r.1).to_string(),
                ]);
            }
            emit(
                &common.out,
                &[
                    "n",
                    "k",
                    "group",
                    "delta",
                    "c",
                    "seed",
                    "space_words",
                    "worst_probes",
                    "mean_probes",
                    "build_ms",
                    "success_all",
                ],
                rows,
            )
        }

        Command::AttackOwf {
            attack,
            n,
            k,
            group,
            budget_bits,
            trials,
            common,
        } => {
            let spec = match group {
                Some(g) => g,
                None => {
                    let nk = (n as u64)
                        .checked_pow(k as u32)
                        .ok_or_else(|| Error::Parameter("N^k overflows".into()))?;
                    GroupSpec::modular(next_prime(nk) as u128)?
                }
            };
            let adversary: Box<dyn Adversary> = match attack {
                AttackArg::InverseTable => Box::new(owf::InverseTable),
                AttackArg::Hellman => Box::new(owf::Hellman { budget_bits }),
                AttackArg::Null => Box::new(owf::Null),
            };
            let rep = owf::run_attack(adversary.as_ref(), spec, n, k, trials, common.seed)?;
            emit(&common.out, &owf::AttackReport::CSV_HEADER, vec![rep.csv_record().to_vec()])
        }

        Command::CellsampleDemo {
            n,
            group,
            k,
            v,
            trials,
            common,
        } => {
            let rep = cellsample::experiment(group, n, k, v, trials, common.seed)?;
            if !rep.bound_ok {
                return Err(Error::Internal("an encoding exceeded its length bound".into()));
            }
            emit(
                &common.out,
                &["n", "group", "v", "trials", "frac_savings_event", "max_encoding_bits", "roundtrip_ok"],
                vec![vec![
                    n.to_string(),
                    group.to_string(),
                    rep.v.to_string(),
                    trials.to_string(),
                    f6(rep.frac_savings_event),
                    rep.max_encoding_bits.to_string(),
                    rep.roundtrip_ok.to_string(),
                ]],
            )
        }

        Command::Reduce3pol {
            group,
            n,
            instances,
            common,
        } => {
            let queries = all_elements(&group)?;
            let rows = (0..instances)
                .into_par_iter()
                .map(|i| -> Result<Vec<String>> {
                    let inst = reduction_instance(group, n, common.seed, i)?;
                    let (mut solutions, mut agree) = (0, 0);
                    for &b in &queries {
                        let brute = solve_brute(&inst, b)?;
                        let geo = geometry::solve_via_3pol(&inst, b)?;
                        solutions += brute.is_some() as usize;
                        let ok = brute.is_some() == geo.is_some() && geo.as_ref().is_none_or(|w| inst.verifies(w, b));
                        agree += ok as usize;
                    }
                    Ok(vec![
                        i.to_string(),
                        n.to_string(),
                        group.to_string(),
                        queries.len().to_string(),
                        solutions.to_string(),
                        agree.to_string(),
                        (agree == queries.len()).to_string(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            emit(
                &common.out,
                &["instance", "n", "group", "queries", "solutions", "agreements", "all_agree"],
                rows,
            )
        }

        Command::ReducePolygon {
            group,
            n,
            instances,
            abar,
            common,
        } => {
            let GroupKind::Modular(m) = group.kind() else {
                return Err(Error::Unsupported("polygon reduction needs a modular group".into()));
            };
            let queries = all_elements(&group)?;
            let rows = (0..instances)
                .into_par_iter()
                .map(|i| -> Result<Vec<String>> {
                    let inst = reduction_instance(group, n, common.seed, i)?;
                    let values: Vec<i128> = inst.elements().iter().map(|g| g.value() as i128).collect();
                    let abar = abar.unwrap_or_else(|| geometry::default_abar(&values));
                    let p = geometry::to_polygon(&values, abar)?;
                    let (mut solutions, mut agree, mut cover_agree) = (0, 0, 0);
                    for &b in &queries {
                        let brute = solve_brute(&inst, b)?;
                        let geo = geometry::solve_via_polygon(&inst, Some(abar), b)?;
                        solutions += brute.is_some() as usize;
                        let ok = brute.is_some() == geo.is_some() && geo.as_ref().is_none_or(|w| inst.verifies(w, b));
                        agree += ok as usize;
                        let cover_ok = [b.value() as i128, b.value() as i128 + m as i128].iter().all(|&t| {
                            geometry::query_polygon(t, abar).is_none_or(|q| {
                                let align = geometry::containment_translation(&p, &q).map(|x| x.0);
                                let cover: Vec<_> = geometry::translations_by_cover(&p, &q)
                                    .into_iter()
                                    .filter(|&tr| geometry::pair_for_translation(&p, &q, tr).is_some())
                                    .collect();
                                align.is_some() == !cover.is_empty() && align.is_none_or(|a| cover.contains(&a))
                            })
                        });
                        cover_agree += cover_ok as usize;
                    }
                    Ok(vec![
                        i.to_string(),
                        n.to_string(),
                        group.to_string(),
                        abar.to_string(),
                        queries.len().to_string(),
                        solutions.to_string(),
                        agree.to_string(),
                        cover_agree.to_string(),
                        (agree == queries.len() && cover_agree == queries.len()).to_string(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            emit(
                &common.out,
                &[
                    "instance",
                    "n",
                    "group",
                    "abar",
                    "queries",
                    "solutions",
                    "agreements",
                    "cover_agreements",
                    "all_agree",
                ],
                rows,
            )
        }

        Command::InvertBench {
            m,
            budget,
            mode,
            trials,
            common,
        } => {
            if trials == 0 {
                return Err(Error::Parameter("trials must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            let plan = plan_parameters(m, budget, mode.into())?;
            let f = TableFunction::random(m, m, &mut rng);
            let tables = build_inverter(&f, plan.params, &mut rng);
            let rep = measure_success(&tables, &f, trials, &mut rng);
            if rep.invalid > 0 {
                return Err(Error::Internal(format!("{} inversions failed re-verification", rep.invalid)));
            }
            let p = plan.params;
            emit(
                &common.out,
                &[
                    "M",
                    "mode",
                    "budget_words",
                    "m",
                    "t",
                    "r",
                    "ell",
                    "space_words",
                    "predicted_probes",
                    "trials",
                    "success_rate",
                    "invalid",
                    "max_probes",
                    "mean_probes",
                ],
                vec![vec![
                    m.to_string(),
                    p.mode.to_string(),
                    budget.to_string(),
                    p.m.to_string(),
                    p.t.to_string(),
                    p.r.to_string(),
                    p.ell.to_string(),
                    tables.space_words().to_string(),
                    plan.predicted_probes.to_string(),
                    trials.to_string(),
                    f6(rep.rate()),
                    rep.invalid.to_string(),
                    rep.probes.max.to_string(),
                    f6(rep.probes.mean),
                ]],
            )
        }
    }
}

/// Parse arguments, run, and return the process exit code. Usage errors
/// exit with 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
