mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sofic_mixing::measures::{conditional_entropy, rokhlin_distance, total_variation, Measure, Observable};
use sofic_mixing::modelmetric::VertexOrder;
use sofic_mixing::sofic::DEFAULT_BUDGET;
use sofic_mixing::{GroupPresentation, ModelMetric, Permutation, SoficMap};

fn small_size(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let alphabet = rng.gen_range(2..=3);
    let max_sites = if alphabet == 2 { 10 } else { 7 };
    (alphabet, rng.gen_range(1..=max_sites))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_product_joint_law_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, n) = small_size(&mut rng);
        let m = random_block_product(&mut rng, a, n);
        let oracle = block_product_table(&m);
        let explicit = m.to_explicit(1 << 20).unwrap();
        prop_assert!(tables_close(&explicit_table(&explicit), &oracle, TOL));
        prop_assert!((m.entropy() - entropy(&oracle)).abs() < TOL);
    }

    #[test]
    fn block_product_marginals_match_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, n) = small_size(&mut rng);
        let m = random_block_product(&mut rng, a, n);
        let sites = m.sites().to_vec();
        let keep = random_subset(&mut rng, &sites);
        let oracle = marginalize(&block_product_table(&m), &sites, &keep);
        let sub = m.marginal(&keep).unwrap();
        prop_assert!((sub.entropy() - entropy(&oracle)).abs() < TOL);
        let explicit = sub.to_explicit(1 << 20).unwrap();
        prop_assert_eq!(explicit.sites(), &keep[..]);
        prop_assert!(tables_close(&explicit_table(&explicit), &oracle, TOL));
    }

    #[test]
    fn covering_number_matches_sorted_atoms(seed in any::<u64>(), eps in 0.013f64..0.987) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, n) = small_size(&mut rng);
        let m = Measure::BlockProduct(random_block_product(&mut rng, a, n));
        let oracle = block_product_table(match &m { Measure::BlockProduct(b) => b, _ => unreachable!() });
        prop_assert_eq!(m.cov_epsilon(eps, 1 << 20).unwrap(), cov(&oracle, eps));
    }

    #[test]
    fn markov_positions_match_path_sums(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.gen_range(1..=3);
        let chain = random_chain(&mut rng, a);
        let mut positions: Vec<usize> = (0..8).filter(|_| rng.gen_bool(0.4)).collect();
        if positions.is_empty() {
            positions.push(rng.gen_range(0..8));
        }
        let got = chain.subset_marginal(&positions, 1 << 20).unwrap();
        let oracle = markov_positions(&chain, &positions);
        prop_assert!(tables_close(&explicit_table(&got), &oracle, TOL));
        prop_assert!((chain.entropy_at(&positions) - entropy(&oracle)).abs() < TOL);
    }

    #[test]
    fn explicit_marginal_and_reorder(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, n) = small_size(&mut rng);
        let sites: Vec<usize> = (0..n).map(|i| 2 * i + 1).collect();
        let m = random_explicit(&mut rng, a, sites.clone());
        let keep = random_subset(&mut rng, &sites);
        let oracle = marginalize(&explicit_table(&m), &sites, &keep);
        prop_assert!(tables_close(&explicit_table(&m.marginal(&keep).unwrap()), &oracle, TOL));

        let mut order = sites.clone();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let r = m.reorder(&order).unwrap();
        prop_assert!(tables_close(&explicit_table(&r), &marginalize(&explicit_table(&m), &sites, &order), TOL));
        prop_assert!((r.entropy() - m.entropy()).abs() < TOL);
    }

    #[test]
    fn entropy_inequalities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, n) = small_size(&mut rng);
        let sites: Vec<usize> = (0..n).collect();
        let m = random_explicit(&mut rng, a, sites.clone());
        let h = m.entropy();
        prop_assert!(h >= -TOL);
        prop_assert!(h <= (m.support_size() as f64).ln() + TOL);
        let sub = random_subset(&mut rng, &sites);
        prop_assert!(m.marginal(&sub).unwrap().entropy() <= h + TOL);

        let x = Observable::Project(random_subset(&mut rng, &sites));
        let y = Observable::Project(random_subset(&mut rng, &sites));
        let z = Observable::Project(random_subset(&mut rng, &sites));
        // chain rule and Rokhlin triangle inequality
        let hxy = m.observable_entropy(&Observable::Tuple(vec![x.clone(), y.clone()])).unwrap();
        let hy = m.observable_entropy(&y).unwrap();
        let cond = conditional_entropy(&m, &x, &y).unwrap();
        prop_assert!((hxy - hy - cond).abs() < TOL);
        let dxz = rokhlin_distance(&m, &x, &z).unwrap();
        let dxy = rokhlin_distance(&m, &x, &y).unwrap();
        let dyz = rokhlin_distance(&m, &y, &z).unwrap();
        prop_assert!(dxz <= dxy + dyz + TOL);
    }

    #[test]
    fn total_variation_is_half_l1(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, n) = small_size(&mut rng);
        let sites: Vec<usize> = (0..n).collect();
        let p = random_explicit(&mut rng, a, sites.clone());
        let q = random_explicit(&mut rng, a, sites);
        let (tp, tq) = (explicit_table(&p), explicit_table(&q));
        let mut l1 = 0.0;
        for c in every_config(a, n) {
            l1 += (tp.get(&c).copied().unwrap_or(0.0) - tq.get(&c).copied().unwrap_or(0.0)).abs();
        }
        prop_assert!((total_variation(&p, &q).unwrap() - l1 / 2.0).abs() < TOL);
        prop_assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn measure_files_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, n) = small_size(&mut rng);
        let m = Measure::BlockProduct(random_block_product(&mut rng, a, n));
        let text = serde_json::to_string(&m.to_file()).unwrap();
        let back = Measure::from_file(serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(serde_json::to_string(&back.to_file()).unwrap(), text);
        prop_assert!((back.entropy() - m.entropy()).abs() < TOL);
    }

    #[test]
    fn permutation_group_laws(seed in any::<u64>(), n in 1usize..40, k in -50i64..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a: Vec<usize> = (0..n).collect();
        let mut b: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(a.as_mut_slice(), &mut rng);
        rand::seq::SliceRandom::shuffle(b.as_mut_slice(), &mut rng);
        let (a, b) = (Permutation::from_images(a).unwrap(), Permutation::from_images(b).unwrap());
        prop_assert!(a.compose(&a.inverse()).is_identity());
        for v in 0..n {
            // (ab)v = a(bv)
            prop_assert_eq!(a.compose(&b).apply(v), a.apply(b.apply(v)));
        }
        let mut p = Permutation::identity(n);
        for _ in 0..k.unsigned_abs() {
            p = p.compose(&a);
        }
        if k < 0 {
            p = p.inverse();
        }
        prop_assert_eq!(a.pow(k), p);
        let cycle_total: usize = a.cycles().iter().map(|c| c.len()).sum();
        prop_assert_eq!(cycle_total, n);
    }

    #[test]
    fn free_models_are_homomorphic(seed in any::<u64>(), n in 1usize..30) {
        let pres = GroupPresentation::free(2).unwrap();
        let s = SoficMap::random_free(pres.clone(), n, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let ball = pres.ball(3.0).unwrap();
        for _ in 0..10 {
            let g = &ball[rng.gen_range(0..ball.len())];
            let h = &ball[rng.gen_range(0..ball.len())];
            let gh = pres.mul(g, h).unwrap();
            let lhs = s.evaluate(&gh).unwrap();
            let rhs = s.evaluate(g).unwrap().compose(&s.evaluate(h).unwrap());
            prop_assert_eq!(&lhs, &rhs);
            for v in 0..n {
                prop_assert_eq!(s.act(&gh, v).unwrap(), lhs.apply(v));
            }
        }
    }

    #[test]
    fn cycle_metric_is_cyclic_distance(n in 2usize..60, w in 0.5f64..3.0, extra in 0.0f64..4.0) {
        let pres = GroupPresentation::integers().with_weights(vec![w]).unwrap();
        let s = SoficMap::from_parts(pres, DEFAULT_BUDGET, vec![Permutation::cycle(n)], BTreeMap::new()).unwrap();
        let m = ModelMetric::build(&s, w + extra).unwrap();
        for v in 0..n {
            let d = m.distances_from(v);
            for (u, du) in d.iter().enumerate() {
                prop_assert!((du - w * cycle_distance(n, u, v)).abs() < TOL);
            }
        }
    }

    #[test]
    fn greedy_sets_are_separated_and_maximal(n in 4usize..40, r in 0.5f64..6.0, seed in any::<u64>()) {
        let s = SoficMap::torus(&[n, 3]).unwrap();
        let m = ModelMetric::build(&s, r.max(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let candidates = random_subset(&mut rng, &(0..3 * n).collect::<Vec<_>>());
        for order in [VertexOrder::Ascending, VertexOrder::Descending, VertexOrder::Shuffled(seed)] {
            let set = m.separated_set_greedy(&candidates, r, &order).unwrap();
            for (i, &a) in set.members.iter().enumerate() {
                for &b in &set.members[i + 1..] {
                    prop_assert!(torus_distance(&[n, 3], &[1.0, 1.0], a, b) >= r - TOL);
                }
            }
            for &c in &candidates {
                let near = set.members.iter().any(|&s| torus_distance(&[n, 3], &[1.0, 1.0], c, s) < r - TOL);
                prop_assert!(set.members.contains(&c) || near);
            }
            prop_assert!(m.separation_violation(&set.members, r).is_none());
            prop_assert!(m.maximality_violation(&candidates, &set.members, r).is_none());
        }
    }
}

#[test]
fn free_group_metric_matches_floyd_warshall() {
    for seed in 0..12u64 {
        let pres = GroupPresentation::free(2).unwrap().with_weights(vec![1.0, 1.5]).unwrap();
        let n = 7 + (seed as usize % 9);
        let s = SoficMap::random_free(pres.clone(), n, seed).unwrap();
        let radius = 2.5;
        let m = ModelMetric::build(&s, radius).unwrap();
        let mut edges = Vec::new();
        for g in pres.ball(radius).unwrap() {
            let w = pres.word_metric(&g);
            if w == 0.0 {
                continue;
            }
            for v in 0..n {
                let u = s.act(&g, v).unwrap();
                if u != v {
                    edges.push((v, u, w));
                }
            }
        }
        let fw = floyd_warshall(n, &edges);
        for (v, row) in fw.iter().enumerate() {
            let d = m.distances_from(v);
            for (u, &want) in row.iter().enumerate() {
                if want.is_finite() {
                    assert!((d[u] - want).abs() < TOL, "seed {seed}: {v}->{u} {} vs {want}", d[u]);
                } else {
                    assert_eq!(d[u], m.sentinel());
                }
            }
        }
    }
}

#[test]
fn iid_measure_entropy_is_additive() {
    let eta = [0.2, 0.5, 0.3];
    let m = sofic_mixing::BlockProductMeasure::iid(&eta, (0..6).collect()).unwrap();
    let h1: f64 = eta.iter().map(|p| -p * p.ln()).sum();
    assert!((m.entropy() - 6.0 * h1).abs() < TOL);
    let oracle = block_product_table(&m);
    assert!((entropy(&oracle) - 6.0 * h1).abs() < TOL);
}
