#![allow(dead_code)]

use ftaplab::market::{FiniteMarket, MarketSpec, NodeSpec};
use rand::Rng;

/// Random market with at most 3 periods and 12 leaves. Price moves are on a
/// half-integer grid so that degenerate (arbitrage) trees are common.
pub fn random_market<R: Rng>(rng: &mut R) -> FiniteMarket {
    let horizon = rng.gen_range(1..=3);
    let assets = rng.gen_range(1..=2);
    let max_branch = match horizon {
        1 => 12,
        2 => 3,
        _ => 2,
    };
    let mut nodes = vec![NodeSpec {
        id: "n0".into(),
        parent: None,
        prob: None,
        prices: (0..assets).map(|_| rng.gen_range(-4..=4) as f64 * 0.5).collect(),
    }];
    let mut frontier = vec![0usize];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for &v in &frontier {
            let b = rng.gen_range(1..=max_branch);
            let w: Vec<f64> = (0..b).map(|_| rng.gen_range(0.2..1.0)).collect();
            let tot: f64 = w.iter().sum();
            for wi in w {
                let id = format!("n{}", nodes.len());
                let parent_prices = nodes[v].prices.clone();
                nodes.push(NodeSpec {
                    id,
                    parent: Some(nodes[v].id.clone()),
                    prob: Some(wi / tot),
                    prices: parent_prices.iter().map(|s| s + rng.gen_range(-3..=3) as f64 * 0.5).collect(),
                });
                next.push(nodes.len() - 1);
            }
        }
        frontier = next;
    }
    let spec = MarketSpec { horizon, assets, nodes };
    let m = FiniteMarket::from_spec(&spec).expect("generated market is valid");
    assert!(m.num_leaves() <= 12);
    m
}

/// Random strictly positive probability vector.
pub fn random_probs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x| x / t).collect()
}

/// Random market with at most `max_leaves` leaves (rejection sampling).
pub fn random_market_upto<R: Rng>(rng: &mut R, max_leaves: usize) -> FiniteMarket {
    loop {
        let m = random_market(rng);
        if m.num_leaves() <= max_leaves && m.num_leaves() >= 2 {
            return m;
        }
    }
}
