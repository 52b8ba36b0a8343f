//! Extremal events for pairs of measures on a finite space: the smallest
//! `b`-mass of an event whose `a`-mass reaches a level.

/// Spaces up to this many atoms are searched exhaustively.
pub const ENUMERATION_LIMIT: usize = 15;

const LEVEL_TOL: f64 = 1e-12;

/// Best event found for `min b(A)` subject to `a(A) >= level`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalSet {
    pub set: Vec<usize>,
    /// `b(set)`.
    pub value: f64,
    /// Value of the fractional relaxation; never above the true minimum.
    pub lower: f64,
    /// `value` is the exact minimum over all events.
    pub exact: bool,
}

/// Atoms by decreasing likelihood ratio `a_i / b_i` (atoms with `b_i = 0`
/// first), ties by index.
pub fn ratio_order(a: &[f64], b: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    // compare a_i / b_i > a_j / b_j as a_i b_j > a_j b_i
    idx.sort_by(|&i, &j| (a[j] * b[i]).partial_cmp(&(a[i] * b[j])).unwrap().then(i.cmp(&j)));
    idx
}

/// The nested threshold events `{a/b >= t}`, smallest first.
pub fn threshold_sets(a: &[f64], b: &[f64]) -> Vec<Vec<usize>> {
    let order = ratio_order(a, b);
    let mut out = Vec::new();
    let mut i = 0;
    while i < order.len() {
        // atoms with equal ratio enter together
        let mut j = i + 1;
        while j < order.len() && a[order[i]] * b[order[j]] == a[order[j]] * b[order[i]] {
            j += 1;
        }
        let mut set: Vec<usize> = order[..j].to_vec();
        set.sort_unstable();
        out.push(set);
        i = j;
    }
    out
}

fn mass(x: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| x[i]).sum()
}

/// Subset sums indexed by bitmask.
pub(crate) fn subset_sums(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut s = vec![0.0; 1usize << n];
    for mask in 1..s.len() {
        let low = mask.trailing_zeros() as usize;
        s[mask] = s[mask & (mask - 1)] + x[low];
    }
    s
}

pub(crate) fn mask_to_set(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Exact `min b(A)` over all events with `a(A) >= level`; `None` above the
/// enumeration limit or when no event qualifies.
pub fn exhaustive_min_mass(a: &[f64], b: &[f64], level: f64) -> Option<(Vec<usize>, f64)> {
    let n = a.len();
    if n > ENUMERATION_LIMIT {
        return None;
    }
    let sa = subset_sums(a);
    let sb = subset_sums(b);
    let mut best: Option<(usize, f64)> = None;
    for mask in 0..sa.len() {
        if sa[mask] >= level - LEVEL_TOL && best.is_none_or(|(_, v)| sb[mask] < v) {
            best = Some((mask, sb[mask]));
        }
    }
    best.map(|(m, v)| (mask_to_set(m, n), v))
}

/// `min b(A)` subject to `a(A) >= level`.
///
/// Threshold events solve the problem exactly at their own `a`-level; in
/// between, the 0/1 problem is a knapsack. The result is exact up to
/// [`ENUMERATION_LIMIT`] atoms; beyond it the smallest qualifying threshold
/// event is returned together with the fractional lower bound.
pub fn min_mass_subject_to(a: &[f64], b: &[f64], level: f64) -> ExtremalSet {
    assert_eq!(a.len(), b.len());
    if level <= 0.0 {
        return ExtremalSet { set: Vec::new(), value: 0.0, lower: 0.0, exact: true };
    }
    let order = ratio_order(a, b);
    let mut lower = 0.0;
    let mut need = level;
    for &i in &order {
        if need <= 0.0 {
            break;
        }
        if a[i] <= 0.0 {
            continue;
        }
        let take = (need / a[i]).min(1.0);
        lower += take * b[i];
        need -= take * a[i];
    }
    if need > LEVEL_TOL {
        return ExtremalSet { set: (0..a.len()).collect(), value: f64::INFINITY, lower: f64::INFINITY, exact: true };
    }
    let threshold = threshold_sets(a, b)
        .into_iter()
        .find(|s| mass(a, s) >= level - LEVEL_TOL)
        .unwrap_or_else(|| (0..a.len()).collect());
    if let Some((set, value)) = exhaustive_min_mass(a, b, level) {
        return ExtremalSet { set, value, lower: lower.min(value), exact: true };
    }
    let value = mass(b, &threshold);
    let exact = value - lower <= 1e-14;
    ExtremalSet { set: threshold, value, lower, exact }
}
