use super::cones::GainsBasis;
use crate::error::{Error, Result};
use crate::space::FiniteProbSpace;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// One node of a market file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
    /// Conditional probability of reaching this node from its parent.
    #[serde(default)]
    pub prob: Option<f64>,
    pub prices: Vec<f64>,
}

/// Serialised form of a market: `{horizon, assets, nodes: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub horizon: usize,
    pub assets: usize,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone)]
struct Node {
    id: String,
    parent: Option<usize>,
    prob: f64,
    prices: Vec<f64>,
    children: Vec<usize>,
    depth: usize,
}

/// A finite discrete-time market on an event tree. Leaves are ordered by a
/// depth-first walk that visits children in file order.
#[derive(Debug, Clone)]
pub struct FiniteMarket {
    horizon: usize,
    assets: usize,
    nodes: Vec<Node>,
    leaves: Vec<usize>,
    space: FiniteProbSpace,
    basis: GainsBasis,
}

fn node_err(node: &str, msg: impl Into<String>) -> Error {
    Error::MarketFile { node: node.to_string(), msg: msg.into() }
}

impl FiniteMarket {
    pub fn from_spec(spec: &MarketSpec) -> Result<Self> {
        if spec.horizon < 1 {
            return Err(node_err("-", "horizon must be at least 1"));
        }
        if spec.assets < 1 {
            return Err(node_err("-", "at least one asset is required"));
        }
        if spec.nodes.is_empty() {
            return Err(node_err("-", "no nodes"));
        }
        let mut index = HashMap::new();
        for (i, n) in spec.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(node_err(&n.id, "duplicate node id"));
            }
        }
        let mut nodes = Vec::with_capacity(spec.nodes.len());
        let mut root = None;
        for n in &spec.nodes {
            if n.prices.len() != spec.assets {
                return Err(node_err(&n.id, format!("expected {} prices, found {}", spec.assets, n.prices.len())));
            }
            if n.prices.iter().any(|x| !x.is_finite()) {
                return Err(node_err(&n.id, "non-finite price"));
            }
            let parent = match &n.parent {
                None => {
                    if root.is_some() {
                        return Err(node_err(&n.id, "second root node"));
                    }
                    root = Some(nodes.len());
                    None
                }
                Some(p) => Some(*index.get(p.as_str()).ok_or_else(|| node_err(&n.id, format!("unknown parent `{p}`")))?),
            };
            let prob = match (parent, n.prob) {
                (None, None) => 1.0,
                (None, Some(p)) if (p - 1.0).abs() <= 1e-12 => 1.0,
                (None, Some(p)) => return Err(node_err(&n.id, format!("root probability must be 1, got {p}"))),
                (Some(_), None) => return Err(node_err(&n.id, "missing conditional probability")),
                (Some(_), Some(p)) => {
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(node_err(&n.id, format!("conditional probability {p} not in (0, 1]")));
                    }
                    p
                }
            };
            nodes.push(Node {
                id: n.id.clone(),
                parent,
                prob,
                prices: n.prices.clone(),
                children: Vec::new(),
                depth: usize::MAX,
            });
        }
        let root = root.ok_or_else(|| node_err(&spec.nodes[0].id, "no root node (a node without parent)"))?;
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent {
                nodes[p].children.push(i);
            }
        }
        // depth-first walk from the root; nodes never reached sit on a cycle
        let mut leaves = Vec::new();
        let mut stack = vec![(root, 0usize)];
        let mut seen = 0;
        while let Some((v, d)) = stack.pop() {
            nodes[v].depth = d;
            seen += 1;
            if d > spec.horizon {
                return Err(node_err(&nodes[v].id, format!("depth {d} exceeds horizon {}", spec.horizon)));
            }
            if nodes[v].children.is_empty() {
                if d != spec.horizon {
                    return Err(node_err(&nodes[v].id, format!("leaf at depth {d}, horizon is {}", spec.horizon)));
                }
                leaves.push(v);
            }
            for &c in nodes[v].children.iter().rev() {
                stack.push((c, d + 1));
            }
        }
        if seen != nodes.len() {
            let lost = nodes.iter().find(|n| n.depth == usize::MAX).unwrap();
            return Err(node_err(&lost.id, "node not reachable from the root"));
        }
        for n in &spec.nodes {
            let v = index[n.id.as_str()];
            if nodes[v].children.is_empty() {
                continue;
            }
            let total: f64 = nodes[v].children.iter().map(|&c| nodes[c].prob).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(node_err(&n.id, format!("children probabilities sum to {total}")));
            }
        }
        let mut probs = Vec::with_capacity(leaves.len());
        for &l in &leaves {
            let mut p = 1.0;
            let mut v = Some(l);
            while let Some(i) = v {
                p *= nodes[i].prob;
                v = nodes[i].parent;
            }
            if !(p > 0.0) {
                return Err(node_err(&nodes[l].id, "leaf probability underflows to 0"));
            }
            probs.push(p);
        }
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        let labels = leaves.iter().map(|&l| nodes[l].id.clone()).collect();
        let space = FiniteProbSpace::new(labels, probs)?;
        let mut market = Self {
            horizon: spec.horizon,
            assets: spec.assets,
            nodes,
            leaves,
            space,
            basis: GainsBasis::empty(0),
        };
        market.basis = GainsBasis::build(&market);
        Ok(market)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MarketSpec = serde_json::from_str(text).map_err(|e| node_err("-", format!("malformed JSON: {e}")))?;
        Self::from_spec(&spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_spec(&self) -> MarketSpec {
        MarketSpec {
            horizon: self.horizon,
            assets: self.assets,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    id: n.id.clone(),
                    parent: n.parent.map(|p| self.nodes[p].id.clone()),
                    prob: n.parent.map(|_| n.prob),
                    prices: n.prices.clone(),
                })
                .collect(),
        }
    }

    /// One-period market with root prices `s0` and leaf prices `s1[i]`.
    pub fn one_period(probs: &[f64], s0: Vec<f64>, s1: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != s1.len() {
            return Err(Error::InvalidInput("one probability per leaf is required".into()));
        }
        let mut nodes = vec![NodeSpec { id: "root".into(), parent: None, prob: None, prices: s0.clone() }];
        for (i, (p, s)) in probs.iter().zip(s1).enumerate() {
            nodes.push(NodeSpec {
                id: format!("leaf{}", i + 1),
                parent: Some("root".into()),
                prob: Some(*p),
                prices: s,
            });
        }
        Self::from_spec(&MarketSpec { horizon: 1, assets: s0.len(), nodes })
    }

    /// Recombining-free binomial tree with one asset: from every node the
    /// price moves by `+up` with probability `p_up` and by `+down` otherwise.
    pub fn binomial(p_up: f64, up: f64, down: f64, horizon: usize, s0: f64) -> Result<Self> {
        let mut nodes = vec![NodeSpec { id: "r".into(), parent: None, prob: None, prices: vec![s0] }];
        let mut frontier = vec![("r".to_string(), s0)];
        for _ in 0..horizon {
            let mut next = Vec::new();
            for (id, s) in frontier {
                for (tag, p, ds) in [("u", p_up, up), ("d", 1.0 - p_up, down)] {
                    let child = format!("{id}{tag}");
                    nodes.push(NodeSpec {
                        id: child.clone(),
                        parent: Some(id.clone()),
                        prob: Some(p),
                        prices: vec![s + ds],
                    });
                    next.push((child, s + ds));
                }
            }
            frontier = next;
        }
        Self::from_spec(&MarketSpec { horizon, assets: 1, nodes })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    /// Leaf space with the reference measure.
    pub fn space(&self) -> &FiniteProbSpace {
        &self.space
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn gains_basis(&self) -> &GainsBasis {
        &self.basis
    }

    /// Same tree and prices with a different (strictly positive) leaf measure.
    pub fn with_leaf_measure(&self, probs: &[f64]) -> Result<Self> {
        self.space.check_len(probs)?;
        if probs.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidInput("leaf measure must be strictly positive".into()));
        }
        let total: f64 = probs.iter().sum();
        let mut mass = vec![0.0; self.nodes.len()];
        for (&l, p) in self.leaves.iter().zip(probs) {
            let mut v = Some(l);
            while let Some(i) = v {
                mass[i] += p / total;
                v = self.nodes[i].parent;
            }
        }
        let mut out = self.clone();
        for (i, n) in out.nodes.iter_mut().enumerate() {
            n.prob = match n.parent {
                Some(p) => mass[i] / mass[p],
                None => 1.0,
            };
        }
        let norm: Vec<f64> = probs.iter().map(|p| p / total).collect();
        out.space = FiniteProbSpace::new(self.space.labels().to_vec(), norm)?;
        Ok(out)
    }

    // tree accessors used by the basis builder

    pub(crate) fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn is_leaf_node(&self, v: usize) -> bool {
        self.nodes[v].children.is_empty()
    }

    pub(crate) fn node_id(&self, v: usize) -> &str {
        &self.nodes[v].id
    }

    pub(crate) fn node_prices(&self, v: usize) -> &[f64] {
        &self.nodes[v].prices
    }

    pub(crate) fn node_depth(&self, v: usize) -> usize {
        self.nodes[v].depth
    }

    /// Path from the root to leaf `leaf` (leaf-space index), root first.
    pub(crate) fn path(&self, leaf: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.horizon + 1);
        let mut v = Some(self.leaves[leaf]);
        while let Some(i) = v {
            out.push(i);
            v = self.nodes[i].parent;
        }
        out.reverse();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_json() -> &'static str {
        r#"{"horizon":1,"assets":1,"nodes":[
            {"id":"root","parent":null,"prices":[0]},
            {"id":"leaf1","parent":"root","prob":0.5,"prices":[1]},
            {"id":"leaf2","parent":"root","prob":0.5,"prices":[-1]}]}"#
    }

    #[test]
    fn loads_symmetric_market() {
        let m = FiniteMarket::from_json(sym_json()).unwrap();
        assert_eq!(m.num_leaves(), 2);
        assert_eq!(m.space().probs(), &[0.5, 0.5]);
        assert_eq!(m.space().labels(), &["leaf1".to_string(), "leaf2".to_string()]);
        let again = FiniteMarket::from_spec(&m.to_spec()).unwrap();
        assert_eq!(again.space().probs(), m.space().probs());
    }

    #[test]
    fn reports_first_violation_with_node() {
        let bad = sym_json().replace("\"prob\":0.5,\"prices\":[-1]", "\"prob\":0.4,\"prices\":[-1]");
        match FiniteMarket::from_json(&bad) {
            Err(Error::MarketFile { node, .. }) => assert_eq!(node, "root"),
            other => panic!("{other:?}"),
        }
        let bad = sym_json().replace("\"parent\":\"root\",\"prob\":0.5,\"prices\":[1]", "\"parent\":\"nowhere\",\"prob\":0.5,\"prices\":[1]");
        match FiniteMarket::from_json(&bad) {
            Err(Error::MarketFile { node, msg }) => {
                assert_eq!(node, "leaf1");
                assert!(msg.contains("nowhere"));
            }
            other => panic!("{other:?}"),
        }
        let bad = sym_json().replace("\"prices\":[1]", "\"prices\":[1, 2]");
        assert!(matches!(FiniteMarket::from_json(&bad), Err(Error::MarketFile { node, .. }) if node == "leaf1"));
        let bad = sym_json().replace("\"prob\":0.5,\"prices\":[1]", "\"prob\":0.0,\"prices\":[1]");
        assert!(matches!(FiniteMarket::from_json(&bad), Err(Error::MarketFile { node, .. }) if node == "leaf1"));
    }

    #[test]
    fn rejects_short_leaf() {
        let m = MarketSpec {
            horizon: 2,
            assets: 1,
            nodes: vec![
                NodeSpec { id: "r".into(), parent: None, prob: None, prices: vec![0.0] },
                NodeSpec { id: "a".into(), parent: Some("r".into()), prob: Some(0.5), prices: vec![1.0] },
                NodeSpec { id: "b".into(), parent: Some("r".into()), prob: Some(0.5), prices: vec![-1.0] },
                NodeSpec { id: "aa".into(), parent: Some("a".into()), prob: Some(1.0), prices: vec![1.0] },
            ],
        };
        assert!(matches!(FiniteMarket::from_spec(&m), Err(Error::MarketFile { node, .. }) if node == "b"));
    }

    #[test]
    fn binomial_tree_shape() {
        let m = FiniteMarket::binomial(0.3, 1.0, -1.0, 3, 0.0).unwrap();
        assert_eq!(m.num_leaves(), 8);
        assert!((m.space().probs()[0] - 0.027).abs() < 1e-15);
        assert_eq!(m.space().labels()[0], "ruuu");
    }

    #[test]
    fn leaf_measure_swap() {
        let m = FiniteMarket::binomial(0.5, 1.0, -1.0, 2, 0.0).unwrap();
        let r = m.with_leaf_measure(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        for (a, b) in r.space().probs().iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
