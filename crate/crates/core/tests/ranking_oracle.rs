mod common;

use linkmoe::eval::{
    combination_grid, evaluate, group_breakdown, overlap_matrix, GroupSpec, MethodScores, NegScores, DEFAULT_KS,
};
use linkmoe::nn::seeded_rng;
use proptest::prelude::*;
use rand::Rng as _;

/// Scores on a coarse grid so ties are common.
fn tied_scores(rng: &mut linkmoe::nn::Rng, n: usize, levels: u32) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0..levels) as f64 * 0.25).collect()
}

#[test]
fn shared_ranks_match_sort_oracle() {
    let mut rng = seeded_rng(11);
    for case in 0..200 {
        let levels = [2, 5, 50, 1_000_000][case % 4];
        let pos = tied_scores(&mut rng, 200, levels);
        let neg = tied_scores(&mut rng, 1 + case % 97, levels);
        let rep = evaluate(&pos, &NegScores::Shared(neg.clone()), &DEFAULT_KS).unwrap();
        for (k, &p) in pos.iter().enumerate() {
            assert_eq!(rep.ranks[k], common::sort_rank(p, &neg));
        }
    }
}

#[test]
fn per_positive_ranks_match_sort_oracle() {
    let mut rng = seeded_rng(12);
    for case in 0..100 {
        let pos = tied_scores(&mut rng, 30, 4 + case as u32);
        let lists: Vec<Vec<f64>> = (0..30).map(|k| tied_scores(&mut rng, 1 + k, 4 + case as u32)).collect();
        let rep = evaluate(&pos, &NegScores::PerPositive(lists.clone()), &[1, 10]).unwrap();
        for k in 0..30 {
            assert_eq!(rep.ranks[k], common::sort_rank(pos[k], &lists[k]));
        }
    }
}

#[test]
fn full_ties_take_the_midpoint() {
    for n in 1..20 {
        let rep = evaluate(&[0.5], &NegScores::Shared(vec![0.5; n]), &[1]).unwrap();
        assert_eq!(rep.ranks[0], 1.0 + 0.5 * n as f64);
    }
}

fn arb_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-3i32..3, 1..40),
        prop::collection::vec(-3i32..3, 1..40),
    )
        .prop_map(|(p, n)| {
            (
                p.into_iter().map(f64::from).collect(),
                n.into_iter().map(f64::from).collect(),
            )
        })
}

proptest! {
    #[test]
    fn report_invariants((pos, neg) in arb_instance()) {
        let rep = evaluate(&pos, &NegScores::Shared(neg.clone()), &DEFAULT_KS).unwrap();
        prop_assert!(rep.mrr > 0.0 && rep.mrr <= 1.0);
        for &r in &rep.ranks {
            prop_assert!(r >= 1.0 && r <= neg.len() as f64 + 1.0);
        }
        let hits: Vec<f64> = DEFAULT_KS.iter().map(|k| rep.hits[k]).collect();
        prop_assert!(hits.windows(2).all(|w| w[0] <= w[1]));
        let mrr = rep.ranks.iter().map(|r| 1.0 / r).sum::<f64>() / pos.len() as f64;
        prop_assert_eq!(rep.mrr, mrr);
    }

    #[test]
    fn monotone_transforms_keep_the_report((pos, neg) in arb_instance()) {
        let rep = evaluate(&pos, &NegScores::Shared(neg.clone()), &DEFAULT_KS).unwrap();
        let f = |x: f64| (x * 0.7).exp() + 3.0;
        let pos2: Vec<f64> = pos.iter().map(|&x| f(x)).collect();
        let neg2 = NegScores::Shared(neg).map(f);
        prop_assert_eq!(evaluate(&pos2, &neg2, &DEFAULT_KS).unwrap(), rep);
    }

    #[test]
    fn analysis_invariants(
        (pos, neg) in arb_instance(),
        shift in prop::collection::vec(-2i32..2, 40),
        values in prop::collection::vec(0u32..40, 40),
    ) {
        let other: Vec<f64> = pos.iter().zip(&shift).map(|(p, s)| p + f64::from(*s)).collect();
        let methods = vec![
            MethodScores { name: "a".into(), pos: pos.clone(), neg: NegScores::Shared(neg.clone()) },
            MethodScores { name: "b".into(), pos: other, neg: NegScores::Shared(neg) },
        ];
        let ov = overlap_matrix(&methods, 3).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                prop_assert_eq!(ov.matrix[a][b], ov.matrix[b][a]);
            }
            prop_assert_eq!(ov.matrix[a][a], 1.0);
        }
        let grid = combination_grid(&methods, 3).unwrap();
        for (a, m) in methods.iter().enumerate() {
            prop_assert_eq!(grid.hits[a][a], m.report(&[3]).unwrap().hits[&3]);
        }
        let vals: Vec<f64> = values[..pos.len()].iter().map(|&v| f64::from(v)).collect();
        let rep = group_breakdown(&vals, &GroupSpec::default_cn(), &methods, 3).unwrap();
        prop_assert!((rep.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(rep.counts.iter().sum::<usize>(), pos.len());
    }
}
