//! Function inversion with preprocessing.
//!
//! [`plan_parameters`] picks a table geometry for a space budget,
//! [`build_inverter`] walks flavored chains `x -> h_j(f(x))` and stores
//! their endpoints, and [`InversionTables::invert`] answers a target image
//! with table lookups and function evaluations, all counted on a
//! [`ProbeMeter`]. Images with many preimages go into an explicit side
//! table and chains step around them.

mod plan;
mod tables;

use rand::Rng;
use rayon::prelude::*;

use crate::cells::{ProbeMeter, ProbeStats};

pub use plan::{budget_floor, plan_parameters, HellmanParams, Mode, Plan, FIXED_WORDS};
pub(crate) use tables::mix64;
pub use tables::{build_inverter, build_with_seed, InversionTables, MAGIC};

/// A deterministic map from `[0, domain_size)` into `u64`.
///
/// `eval` should charge its probes to `meter`. Points for which
/// `admissible` is false are never returned by an inversion.
pub trait EvaluableFunction: Sync {
    fn domain_size(&self) -> u64;

    fn eval(&self, x: u64, meter: &mut ProbeMeter) -> u64;

    fn admissible(&self, _x: u64) -> bool {
        true
    }
}

/// A function stored as its table of values; one probe per evaluation.
#[derive(Clone, Debug)]
pub struct TableFunction {
    values: Vec<u64>,
}

impl TableFunction {
    pub fn new(values: Vec<u64>) -> Self {
        TableFunction { values }
    }

    /// A uniformly random function from `[domain]` to `[codomain]`.
    pub fn random<R: Rng + ?Sized>(domain: u64, codomain: u64, rng: &mut R) -> Self {
        TableFunction::new((0..domain).map(|_| rng.gen_range(0..codomain)).collect())
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

impl EvaluableFunction for TableFunction {
    fn domain_size(&self) -> u64 {
        self.values.len() as u64
    }

    fn eval(&self, x: u64, meter: &mut ProbeMeter) -> u64 {
        meter.charge(1);
        self.values[x as usize]
    }
}

/// A function given by a closure; one probe per evaluation.
pub struct FnFunction<G> {
    domain: u64,
    g: G,
}

impl<G: Fn(u64) -> u64 + Sync> FnFunction<G> {
    pub fn new(domain: u64, g: G) -> Self {
        FnFunction { domain, g }
    }
}

impl<G: Fn(u64) -> u64 + Sync> EvaluableFunction for FnFunction<G> {
    fn domain_size(&self) -> u64 {
        self.domain
    }

    fn eval(&self, x: u64, meter: &mut ProbeMeter) -> u64 {
        meter.charge(1);
        (self.g)(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuccessReport {
    pub trials: u64,
    pub successes: u64,
    /// Returned preimages that failed re-verification. Always zero for a
    /// correct engine; counted rather than assumed.
    pub invalid: u64,
    pub probes: ProbeStats,
}

impl SuccessReport {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Invert `trials` challenges `y = f(x)` for uniform admissible `x`.
///
/// Challenges are drawn sequentially from `rng` and answered in parallel.
pub fn measure_success<F, R>(tables: &InversionTables, f: &F, trials: u64, rng: &mut R) -> SuccessReport
where
    F: EvaluableFunction + ?Sized,
    R: Rng + ?Sized,
{
    let domain = f.domain_size();
    let mut challenges = Vec::with_capacity(trials as usize);
    while (challenges.len() as u64) < trials {
        let x = rng.gen_range(0..domain);
        if f.admissible(x) {
            challenges.push(f.eval(x, &mut ProbeMeter::new()));
        }
    }
    let outcomes: Vec<(Option<bool>, u64)> = challenges
        .par_iter()
        .map(|&y| {
            let mut meter = ProbeMeter::new();
            let got = tables.invert(f, y, &mut meter);
            let valid = got.map(|x| f.admissible(x) && f.eval(x, &mut ProbeMeter::new()) == y);
            (valid, meter.probes())
        })
        .collect();
    SuccessReport {
        trials,
        successes: outcomes.iter().filter(|o| o.0 == Some(true)).count() as u64,
        invalid: outcomes.iter().filter(|o| o.0 == Some(false)).count() as u64,
        probes: ProbeStats::from_counts(outcomes.iter().map(|o| o.1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn exhaustive_soundness<F: EvaluableFunction>(tables: &InversionTables, f: &F, codomain: u64) -> u64 {
        let mut found = 0;
        for y in 0..codomain {
            if let Some(x) = tables.invert(f, y, &mut ProbeMeter::new()) {
                assert_eq!(f.eval(x, &mut ProbeMeter::new()), y);
                found += 1;
            }
        }
        found
    }

    #[test]
    fn identity_inverts_everywhere() {
        let m = 1u64 << 10;
        let f = FnFunction::new(m, |x| x);
        for (budget, mode) in [(200, Mode::RandomFunction), (400, Mode::WorstCase), (2 * m, Mode::WorstCase)] {
            let plan = plan_parameters(m, budget, mode).unwrap();
            let tables = build_inverter(&f, plan.params, &mut rng(1));
            for y in 0..m {
                let got = tables.invert(&f, y, &mut ProbeMeter::new());
                if plan.params.is_full_table() {
                    assert_eq!(got, Some(y), "{mode} budget {budget}");
                } else if let Some(x) = got {
                    assert_eq!(x, y);
                }
            }
        }
        let plan = plan_parameters(m, 2 * m, Mode::RandomFunction).unwrap();
        let tables = build_inverter(&f, plan.params, &mut rng(1));
        let report = measure_success(&tables, &f, 500, &mut rng(2));
        assert_eq!(report.rate(), 1.0);
    }

    #[test]
    fn constant_function_uses_heavy_map() {
        let m = 1u64 << 10;
        let f = FnFunction::new(m, |_| 0);
        let plan = plan_parameters(m, 256, Mode::WorstCase).unwrap();
        let tables = build_inverter(&f, plan.params, &mut rng(3));
        assert!(tables.explicit_entries().any(|(y, _)| y == 0));
        let mut meter = ProbeMeter::new();
        let x = tables.invert(&f, 0, &mut meter).unwrap();
        assert!(x < m);
        assert!(meter.probes() < 10);
        assert_eq!(tables.invert(&f, 1, &mut ProbeMeter::new()), None);
    }

    #[test]
    fn successor_function() {
        let m = 1u64 << 12;
        let f = FnFunction::new(m, move |x| (x + 1) % m);
        for mode in [Mode::RandomFunction, Mode::WorstCase] {
            let plan = plan_parameters(m, 1 << 10, mode).unwrap();
            let tables = build_inverter(&f, plan.params, &mut rng(4));
            let found = exhaustive_soundness(&tables, &f, m + 16);
            assert!(found <= m);
            if let Some(x) = tables.invert(&f, 0, &mut ProbeMeter::new()) {
                assert_eq!(x, m - 1);
            }
            let report = measure_success(&tables, &f, 1000, &mut rng(5));
            assert_eq!(report.invalid, 0);
            assert!(report.rate() > 0.3, "{mode}: {}", report.rate());
        }
        let full = build_inverter(&f, plan_parameters(m, 2 * m, Mode::WorstCase).unwrap().params, &mut rng(6));
        assert_eq!(full.invert(&f, 0, &mut ProbeMeter::new()), Some(m - 1));
    }

    #[test]
    fn images_outside_the_range_are_not_found() {
        let m = 1u64 << 12;
        let mut r = rng(7);
        let f = TableFunction::random(m, m, &mut r);
        let image: std::collections::HashSet<u64> = f.values().iter().copied().collect();
        let plan = plan_parameters(m, 700, Mode::WorstCase).unwrap();
        let tables = build_inverter(&f, plan.params, &mut r);
        for y in 0..m {
            if !image.contains(&y) {
                assert_eq!(tables.invert(&f, y, &mut ProbeMeter::new()), None);
            }
        }
        exhaustive_soundness(&tables, &f, m);
    }

    #[test]
    fn random_function_reaches_half() {
        let m = 1u64 << 14;
        let mut r = rng(8);
        let f = TableFunction::random(m, m, &mut r);
        let budget = 2f64.powf(10.67).round() as u64;
        let plan = plan_parameters(m, budget, Mode::RandomFunction).unwrap();
        let tables = build_inverter(&f, plan.params, &mut r);
        assert!(tables.space_words() as u64 <= budget + FIXED_WORDS);
        let report = measure_success(&tables, &f, 1000, &mut r);
        assert_eq!(report.invalid, 0);
        assert!(report.rate() >= 0.5, "rate {}", report.rate());
        let p = plan.params;
        let bound = 4 * p.t * p.r * (64 - p.m.leading_zeros() as u64);
        assert!(report.probes.max <= bound, "{} > {bound}", report.probes.max);
    }

    #[test]
    fn space_is_accounted_exactly() {
        let m = 1u64 << 12;
        let mut r = rng(9);
        let f = TableFunction::random(m, m / 4, &mut r);
        for (budget, mode) in [(300, Mode::RandomFunction), (900, Mode::WorstCase), (2 * m, Mode::WorstCase)] {
            let plan = plan_parameters(m, budget, mode).unwrap();
            let tables = build_inverter(&f, plan.params, &mut r);
            let p = tables.params();
            let chains: usize = tables.chain_counts().iter().sum();
            let explicit = tables.heavy_len() + tables.patch_len();
            assert_eq!(
                tables.space_words(),
                2 * chains + 2 * explicit + p.r as usize + FIXED_WORDS as usize
            );
            assert!(explicit as u64 <= p.ell);
            assert!(tables.space_words() as u64 <= plan.predicted_words);
        }
    }

    #[test]
    fn stored_chains_replay() {
        let m = 1u64 << 12;
        let mut r = rng(10);
        let f = TableFunction::random(m, m, &mut r);
        let plan = plan_parameters(m, 800, Mode::WorstCase).unwrap();
        let tables = build_inverter(&f, plan.params, &mut r);
        for j in 0..tables.params().r as usize {
            for (end, start) in tables.chains(j) {
                let mut x = start;
                for _ in 0..tables.params().t {
                    x = tables.step(&f, j, x);
                }
                assert_eq!(x, end);
            }
        }
        for (y, x) in tables.explicit_entries() {
            assert_eq!(f.eval(x, &mut ProbeMeter::new()), y);
        }
    }

    #[test]
    fn determinism_and_dump_round_trip() {
        let m = 1u64 << 12;
        let f = TableFunction::random(m, m, &mut rng(11));
        let plan = plan_parameters(m, 800, Mode::WorstCase).unwrap();
        let a = build_with_seed(&f, plan.params, 42);
        let b = build_with_seed(&f, plan.params, 42);
        assert_eq!(a.to_bytes(), b.to_bytes());
        let bytes = a.to_bytes();
        assert_eq!(&bytes[..4], b"FNTB");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), m);
        let c = InversionTables::from_bytes(&bytes).unwrap();
        assert_eq!(c.to_bytes(), bytes);
        assert_eq!(c.params(), a.params());
        for y in 0..256 {
            assert_eq!(
                c.invert(&f, y, &mut ProbeMeter::new()),
                a.invert(&f, y, &mut ProbeMeter::new())
            );
        }
        assert!(InversionTables::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        assert!(InversionTables::from_bytes(&bytes[1..]).is_err());
        assert!(InversionTables::from_bytes(&[0u8; 64]).is_err());
    }

    #[test]
    fn inadmissible_points_are_never_returned() {
        struct Halves;
        impl EvaluableFunction for Halves {
            fn domain_size(&self) -> u64 {
                1 << 10
            }
            fn eval(&self, x: u64, meter: &mut ProbeMeter) -> u64 {
                meter.charge(1);
                x / 2
            }
            fn admissible(&self, x: u64) -> bool {
                x % 2 == 1
            }
        }
        for budget in [300, 2048] {
            let plan = plan_parameters(1 << 10, budget, Mode::WorstCase).unwrap();
            let tables = build_inverter(&Halves, plan.params, &mut rng(12));
            for y in 0..512 {
                if let Some(x) = tables.invert(&Halves, y, &mut ProbeMeter::new()) {
                    assert_eq!(x, 2 * y + 1);
                }
            }
        }
    }

    #[test]
    fn more_space_does_not_hurt() {
        let m = 1u64 << 14;
        let mut r = rng(13);
        let f = TableFunction::random(m, m, &mut r);
        let mut last = 0.0f64;
        for budget in [600, 1200, 2400, 4800] {
            let plan = plan_parameters(m, budget, Mode::RandomFunction).unwrap();
            let tables = build_inverter(&f, plan.params, &mut r);
            let rate = measure_success(&tables, &f, 1000, &mut r).rate();
            let sigma = (last.max(0.01) * (1.0 - last).max(0.01) / 1000.0).sqrt();
            assert!(rate >= last - 3.0 * sigma, "{budget}: {rate} < {last}");
            last = rate;
        }
    }
}
