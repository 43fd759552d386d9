//! Covering-number and chain inequalities on small enumerable measures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sofic_mixing::cli::random_explicit;
use sofic_mixing::sofic::LocalObservable;
use sofic_mixing::verify::{lemma1_bound_check, lemma1_sequence, lemma4_chain_check};
use sofic_mixing::{ExplicitMeasure, Result, SoficMap};

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..3 {
        let mu = random_explicit(&mut rng, 2, 6, 20)?;
        let r = lemma1_bound_check(&mu, 0.1)?;
        println!("H = {:.4} <= {:.4} (cov {}): {:?}", r.entropy, r.bound, r.cov, r.verdict);
    }

    // per-site entropy and log covering number of growing products
    let seq = (1..=8)
        .map(|k| ExplicitMeasure::product(&[0.8, 0.2], (0..k).collect(), 1 << 10))
        .collect::<Result<Vec<_>>>()?;
    for row in lemma1_sequence(&seq, 0.2)? {
        println!("{} sites: H/n = {:.4}, log cov/n = {:.4}", row.sites, row.entropy_per_site, row.log_cov_per_site);
    }

    let sofic = SoficMap::cycle(9)?;
    let z = sofic.presentation().clone();
    let xor = LocalObservable::from_fn(vec![z.parse_word("[0]")?, z.parse_word("[1]")?], 2, |p| p[0] ^ p[1]);
    let mu = random_explicit(&mut rng, 2, 9, 64)?;
    let r = lemma4_chain_check(&mu, &sofic, &xor, &[0, 3, 6])?;
    println!("H(alpha) = {:.4} <= {:.4} = H(beta) + sum H(alpha_s|beta_s): {:?}", r.h_alpha, r.rhs, r.verdict);
    Ok(())
}
