//! Preprocessing attacks on x -> sum of R(x_i) for a random oracle R.

use ksum_core::group::GroupSpec;
use ksum_core::owf::{run_attack, Adversary, Hellman, InverseTable, Null};

fn main() -> ksum_core::error::Result<()> {
    let (n, k) = (256, 3);
    let spec = GroupSpec::modular(16_777_259)?;
    let attacks: [(&dyn Adversary, u64); 3] = [
        (&InverseTable, 200),
        (&Hellman { budget_bits: 64 * 4096 }, 200),
        (&Null, 2000),
    ];
    for (attack, trials) in attacks {
        let rep = run_attack(attack, spec, n, k, trials, 42)?;
        println!("{rep}");
    }

    // Below 2^24 elements the inverse table is direct-addressed and the
    // online phase makes one advice read plus k - 1 oracle queries.
    let small = GroupSpec::xor(24)?;
    println!("{}", run_attack(&InverseTable, small, n, k, 200, 42)?);
    Ok(())
}
