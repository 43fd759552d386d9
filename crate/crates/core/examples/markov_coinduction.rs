//! Markov interval laws and coinduction from Z to Z^2.

use sofic_mixing::{GroupPresentation, Process, ProcessOracle, Result};

fn main() -> Result<()> {
    let flip = Process::symmetric_flip(0.25)?;
    for len in 1..=4 {
        println!("H(nu on {len} sites) = {:.9}", flip.interval_law(len)?.entropy());
    }

    let z2 = GroupPresentation::free_abelian(2)?;
    let h = z2.parse_word("[1,0]")?;
    let lifted = Process::coinduce(flip.clone(), h.clone(), z2.clone())?;
    let window: Vec<_> = ["[0,0]", "[1,0]", "[0,1]"].iter().map(|w| z2.parse_word(w)).collect::<Result<_>>()?;
    let dec = z2.coset_decompose(&window, &h)?;
    let h_f = lifted.marginal(&dec.enlarged)?.entropy();
    let h_i = flip.interval_law(dec.interval_len())?.entropy();
    println!("coinduced: H(mu on F') = {h_f:.12}, {} x H(nu_I) = {:.12}", dec.cosets(), dec.cosets() as f64 * h_i);

    // independent copies on different cosets
    let columns = [z2.parse_word("[0,0]")?, z2.parse_word("[0,1]")?];
    println!("two vertical neighbours: {:.9} = 2 ln 2", lifted.marginal(&columns)?.entropy());
    Ok(())
}
