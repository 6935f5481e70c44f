//! Persist a structure to disk and answer queries from the reloaded copy.

use ksum_core::cells::ProbeMeter;
use ksum_core::group::GroupSpec;
use ksum_core::instance::gen_average_case;
use ksum_core::ksum::{BuildOptions, KSumStructure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ksum_core::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let inst = gen_average_case(GroupSpec::xor(20)?, 64, 3, &mut rng)?;
    let ks = KSumStructure::build_with_seed(&inst, &BuildOptions::with_delta(0.5), 4)?;

    let dir = std::env::temp_dir().join(format!("ksum-example-{}", std::process::id()));
    ks.dump(&dir)?;
    let mut files: Vec<_> = std::fs::read_dir(&dir)?.collect::<Result<_, _>>()?;
    files.sort_by_key(|e| e.file_name());
    for entry in files {
        println!("{:>16} {:>7} bytes", entry.file_name().to_string_lossy(), entry.metadata()?.len());
    }

    let loaded = KSumStructure::load(&dir)?;
    assert_eq!(loaded.space_words(), ks.space_words());
    for _ in 0..5 {
        let (b, _) = inst.sample_planted(&mut rng);
        let (mut a, mut c) = (ProbeMeter::new(), ProbeMeter::new());
        assert_eq!(ks.query(b, &mut a), loaded.query(b, &mut c));
        assert_eq!(a.probes(), c.probes());
    }
    std::fs::remove_dir_all(&dir)?;
    println!("reloaded structure answers identically");
    Ok(())
}
