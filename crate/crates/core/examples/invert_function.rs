//! Hellman-style tables for inverting an arbitrary function f: [M] -> [M]
//! with a word budget well below M.

use ksum_core::cells::ProbeMeter;
use ksum_core::inverter::{
    budget_floor, build_inverter, measure_success, plan_parameters, EvaluableFunction, FnFunction,
    InversionTables, Mode, TableFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ksum_core::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = 1u64 << 16;
    let f = TableFunction::random(m, m, &mut rng);

    println!("M = {m}, smallest budget {}", budget_floor(m));
    for budget in [1626, 4096, 16384, 2 * m] {
        let plan = plan_parameters(m, budget, Mode::RandomFunction)?;
        let tables = build_inverter(&f, plan.params, &mut rng);
        let rep = measure_success(&tables, &f, 500, &mut rng);
        let p = plan.params;
        println!(
            "budget {budget:>6}: m={:<5} t={:<4} r={:<4} words={:<7} success {:.3}  max probes {}",
            p.m,
            p.t,
            p.r,
            tables.space_words(),
            rep.rate(),
            rep.probes.max
        );
    }

    // Worst-case mode reserves part of the budget for explicitly stored
    // heavy images, which helps on skewed functions like this one.
    let skewed = FnFunction::new(m, |x| if x % 4 == 0 { 7 } else { x.wrapping_mul(0x9e37_79b9) % m });
    let plan = plan_parameters(m, 8192, Mode::WorstCase)?;
    let tables = build_inverter(&skewed, plan.params, &mut rng);
    let mut meter = ProbeMeter::new();
    let x = tables.invert(&skewed, 7, &mut meter).expect("7 is stored as a heavy image");
    assert_eq!(skewed.eval(x, &mut ProbeMeter::new()), 7);
    println!("worst case: heavy={} patch={}  f^-1(7) = {x} in {} probes", tables.heavy_len(), tables.patch_len(), meter.probes());

    let copy = InversionTables::from_bytes(&tables.to_bytes())?;
    assert_eq!(copy.to_words(), tables.to_words());
    Ok(())
}
