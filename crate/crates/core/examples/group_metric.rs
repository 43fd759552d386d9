//! Word metrics, balls and coset decompositions on Z^2 and the free group.

use sofic_mixing::{GroupPresentation, Result};

fn main() -> Result<()> {
    let z2 = GroupPresentation::free_abelian(2)?.with_weights(vec![1.0, 2.0])?;
    let g = z2.parse_word("[3,-1]")?;
    println!("|{g}| = {} with weights (1, 2)", z2.word_metric(&g));
    println!("Z^2 ball of radius 2 has {} elements", z2.ball(2.0)?.len());

    let f2 = GroupPresentation::free(2)?;
    for r in 0..=4 {
        // 1 + 4 (3^r - 1) / 2 for the rank-2 free group
        println!("F_2 ball of radius {r}: {}", f2.ball(r as f64)?.len());
    }
    let a = f2.parse_word("a^2 b^-1")?;
    let b = f2.parse_word("b a^-1")?;
    println!("({a})({b}) = {}", f2.mul(&a, &b)?);

    // the window {(0,0), (1,0), (0,1)} split along h = (1,0)
    let window: Vec<_> = ["[0,0]", "[1,0]", "[0,1]"].iter().map(|w| z2.parse_word(w)).collect::<Result<_>>()?;
    let h = z2.parse_word("[1,0]")?;
    let dec = z2.coset_decompose(&window, &h)?;
    println!(
        "{} cosets, interval length {}, enlarged window {:?}",
        dec.cosets(),
        dec.interval_len(),
        dec.enlarged.iter().map(|g| g.to_string()).collect::<Vec<_>>()
    );
    Ok(())
}
