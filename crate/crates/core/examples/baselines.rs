//! The two classical endpoints: store every k-subset sum (one lookup per
//! query) or store nothing but the sorted input and search at query time.

use ksum_core::baseline::{solve_brute, SortedSums, TwoFinger};
use ksum_core::cells::ProbeMeter;
use ksum_core::group::GroupSpec;
use ksum_core::instance::gen_average_case;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ksum_core::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = GroupSpec::modular(1_000_003)?;
    let inst = gen_average_case(spec, 200, 3, &mut rng)?;

    let table = SortedSums::build(&inst)?;
    let fingers = TwoFinger::build(&inst)?;
    println!("N = {}, {} pair sums", inst.len(), table.entries());
    println!("sorted sums: {:>8} words", table.space_words());
    println!("two finger:  {:>8} words", fingers.space_words());

    for _ in 0..4 {
        let (b, planted) = inst.sample_planted(&mut rng);
        let (mut m1, mut m2) = (ProbeMeter::new(), ProbeMeter::new());
        let w1 = table.query(b, &mut m1).expect("planted sum");
        let w2 = fingers.query(b, &mut m2).expect("planted sum");
        assert!(inst.verifies(&w1, b) && inst.verifies(&w2, b));
        assert!(solve_brute(&inst, b)?.is_some());
        println!("b = {b:>7}  planted {planted}  table {w1} ({} probes)  fingers {w2} ({} probes)", m1.probes(), m2.probes());
    }
    Ok(())
}
