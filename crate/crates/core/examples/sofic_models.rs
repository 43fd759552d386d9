//! Cycle, torus and random permutation models, with their defects.

use sofic_mixing::sofic::LocalObservable;
use sofic_mixing::{GroupPresentation, Result, SoficMap};

fn main() -> Result<()> {
    let cycle = SoficMap::cycle(5)?;
    let z = cycle.presentation().clone();
    let h = z.parse_word("[1]")?;
    println!("sigma^h on the 5-cycle: {:?}", cycle.evaluate(&h)?.images());

    // XOR of a site and its right neighbour, pushed along the model
    let xor = LocalObservable::from_fn(vec![z.parse_word("[0]")?, h.clone()], 2, |p| p[0] ^ p[1]);
    println!("xor push of 10011: {:?}", cycle.push_observable(&xor, &[1, 0, 0, 1, 1])?);

    let torus = SoficMap::torus(&[6, 4])?;
    let p = torus.presentation().clone();
    let pairs = vec![(p.parse_word("[0,0]")?, p.parse_word("[0,1]")?)];
    let report = torus.defect_report(&[p.parse_word("[1,1]")?], Some(&p.parse_word("[1,0]")?), &pairs, 2)?;
    println!("torus 6x4: homomorphic {}, injectivity fraction {}", torus.is_homomorphic(), report.injectivity_fraction);

    let free = SoficMap::random_free(GroupPresentation::free(2)?, 200, 11)?;
    let fp = free.presentation().clone();
    let w = fp.parse_word("a b a^-1 b^-1")?;
    let fixed = free.evaluate(&w)?.fixed_points();
    println!("random F_2 model on 200 points: commutator fixes {fixed} points");
    Ok(())
}
