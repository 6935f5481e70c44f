//! Space against probes for the kSUM-Indexing structure as delta grows.

use ksum_core::cells::ProbeMeter;
use ksum_core::group::GroupSpec;
use ksum_core::instance::gen_average_case;
use ksum_core::ksum::{BuildOptions, KSumStructure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ksum_core::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = gen_average_case(GroupSpec::modular(65_537)?, 128, 3, &mut rng)?;
    let planted: Vec<_> = (0..100).map(|_| inst.sample_planted(&mut rng).0).collect();

    println!("{:>6} {:>12} {:>12} {:>12}", "delta", "space words", "max probes", "mean probes");
    for delta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let ks = KSumStructure::build_with_seed(&inst, &BuildOptions::with_delta(delta), 11)?;
        for &b in &planted {
            let w = ks.query(b, &mut ProbeMeter::new()).expect("planted sums are found");
            assert!(inst.verifies(&w, b));
        }
        let stats = ks.probe_report(&planted);
        println!("{delta:>6} {:>12} {:>12} {:>12.1}", ks.space_words(), stats.max, stats.mean);
    }

    let ks = KSumStructure::build_with_seed(&inst, &BuildOptions::default(), 11)?;
    let b = inst.spec().sample_uniform(&mut rng);
    match ks.query(b, &mut ProbeMeter::new()) {
        Some(w) => println!("uniform query {b}: {w}"),
        None => println!("uniform query {b}: no triple"),
    }
    println!("primes: {:?}", ks.primes());
    Ok(())
}
