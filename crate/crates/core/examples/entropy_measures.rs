//! Entropy, covering numbers and observables on finite measures.

use sofic_mixing::measures::{
    conditional_entropy, conditioning_bound, cov_epsilon_explicit, rokhlin_distance, total_variation, Atom, Observable,
};
use sofic_mixing::{ExplicitMeasure, Result};

fn main() -> Result<()> {
    let uniform = ExplicitMeasure::uniform(2, (0..6).collect(), 1 << 10)?;
    println!("uniform on 64 points: H = {:.6} = 6 ln 2", uniform.entropy());
    println!("cov_0.2 = {}", cov_epsilon_explicit(&uniform, 0.2)?);

    // two correlated bits: equal with probability 0.9
    let pair = ExplicitMeasure::new(
        2,
        vec![0, 1],
        vec![
            Atom { config: vec![0, 0], p: 0.45 },
            Atom { config: vec![0, 1], p: 0.05 },
            Atom { config: vec![1, 0], p: 0.05 },
            Atom { config: vec![1, 1], p: 0.45 },
        ],
    )?;
    let (x, y) = (Observable::Project(vec![0]), Observable::Project(vec![1]));
    println!("H(X,Y) = {:.6}", pair.entropy());
    println!("H(X|Y) = {:.6}", conditional_entropy(&pair, &x, &y)?);
    println!("d_Rok(X,Y) = {:.6}", rokhlin_distance(&pair, &x, &y)?);

    let product = ExplicitMeasure::product(&[0.5, 0.5], vec![0, 1], 16)?;
    println!("TV to the fair product: {:.3}", total_variation(&pair, &product)?);

    let (lhs, rhs) = conditioning_bound(&pair, &[vec![0, 0], vec![1, 1]])?;
    println!("conditioning bound: {lhs:.6} <= {rhs:.6}");
    Ok(())
}
