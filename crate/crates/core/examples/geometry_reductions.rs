//! 3SUM-Indexing instances answered through two geometric encodings:
//! collinearity on the cubic y = x^3 and translating a comb polygon into
//! another.

use ksum_core::baseline::solve_brute;
use ksum_core::geometry::{
    collinear_witness, containment_translation, query_3pol, query_polygon, solve_via_3pol, solve_via_polygon,
    to_3pol, to_polygon,
};
use ksum_core::group::GroupSpec;
use ksum_core::instance::Instance;

fn main() -> ksum_core::error::Result<()> {
    let values: [u128; 6] = [3, 10, 18, 25, 41, 57];
    let ints: Vec<i128> = values.iter().map(|&v| v as i128).collect();

    let points = to_3pol(&ints)?;
    let q = query_3pol(28)?;
    println!("28 = a_i + a_j via collinear points {:?}", collinear_witness(&points, q));

    let p = to_polygon(&ints, 64)?;
    let qp = query_polygon(43, 64).expect("43 < 2 * 64");
    println!("comb with {} teeth; 43 = a_i + a_j via {:?}", p.teeth.len(), containment_translation(&p, &qp));

    let inst = Instance::from_indices(GroupSpec::modular(131)?, &values, 3)?;
    let spec = *inst.spec();
    let mut solvable = 0;
    for v in 0..spec.order() {
        let b = spec.from_index(v)?;
        let brute = solve_brute(&inst, b)?;
        let pol = solve_via_3pol(&inst, b)?;
        let comb = solve_via_polygon(&inst, None, b)?;
        assert_eq!(brute.is_some(), pol.is_some());
        assert_eq!(brute.is_some(), comb.is_some());
        solvable += brute.is_some() as u32;
    }
    println!("all {} targets agree, {solvable} solvable", spec.order());
    Ok(())
}
