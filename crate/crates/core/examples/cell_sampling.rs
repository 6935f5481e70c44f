//! Cell sampling on a one-probe table. A random set of cells pins down part
//! of the input, so an encoding can store those cells and only the rest of
//! the input verbatim.

use ksum_core::cellsample::{decode, default_sample_size, encode, experiment, run_cellsample, ReferenceTable};
use ksum_core::group::GroupSpec;
use ksum_core::instance::gen_average_case;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ksum_core::error::Result<()> {
    let spec = GroupSpec::xor(16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = gen_average_case(spec, 32, 3, &mut rng)?;
    let table = ReferenceTable::build(&inst)?;

    let v = default_sample_size(table.space(), table.time(), inst.len());
    let run = run_cellsample(&table, v, &mut rng)?;
    let enc = encode(&inst, &table, &run);
    let raw_bits = inst.len() * spec.index_bits() as usize;
    println!("S = {} cells, v = {v}, good indices {}/{}", table.space(), run.good.len(), inst.len());
    println!(
        "encoding {} bits, bound {} bits, raw input {raw_bits} bits",
        enc.len_bits(),
        enc.bound_bits(v, inst.len(), run.good.len(), &spec)
    );
    assert_eq!(decode(&enc.bytes)?, inst);

    for n in [16, 32] {
        let rep = experiment(spec, n, 3, None, 300, 9)?;
        println!(
            "N={n:<3} v={:<6} savings event {:.3}  roundtrip {}  bound {}",
            rep.v, rep.frac_savings_event, rep.roundtrip_ok, rep.bound_ok
        );
    }
    Ok(())
}
