//! The shortest-path metric of a model and greedy separated sets.

use sofic_mixing::modelmetric::VertexOrder;
use sofic_mixing::{ModelMetric, Result, SoficMap};

fn main() -> Result<()> {
    let torus = SoficMap::torus(&[12, 12])?;
    let metric = ModelMetric::build(&torus, 3.0)?;
    let s = metric.summary();
    println!("{s:?}");
    println!("rho(0, 77) = {}", metric.distance(0, 77));
    println!("closed ball B(0, 2) has {} vertices", metric.ball(0, 2.0).len());

    let all: Vec<usize> = (0..torus.n()).collect();
    for order in [VertexOrder::Ascending, VertexOrder::Descending, VertexOrder::Shuffled(4)] {
        let set = metric.separated_set_greedy(&all, 3.0, &order)?;
        assert!(metric.separation_violation(&set.members, 3.0).is_none());
        assert!(metric.maximality_violation(&all, &set.members, 3.0).is_none());
        println!("{:>12}: {} vertices pairwise >= 3 apart", set.order, set.members.len());
    }

    let mut edges = Vec::new();
    SoficMap::cycle(6).and_then(|c| ModelMetric::build(&c, 2.0))?.write_edges_csv(&mut edges)?;
    print!("{}", String::from_utf8_lossy(&edges));
    Ok(())
}
