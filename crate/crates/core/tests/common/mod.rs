//! Independent brute-force oracles for the metrization infima, used to
//! cross-check the walk-search implementations on small grounds.

use diversity::conformity::Mask;
use diversity::metrization::NestedBase;

/// Cost in integer units of `2^{-(levels-1)}` for each subset: the
/// cheapest level containing it (deeper levels are cheaper).
fn unit_costs(b: &NestedBase) -> Vec<Option<u64>> {
    let n = b.ground.len();
    let m = b.levels.len() - 1;
    let full: Mask = (1 << n) - 1;
    (0..=full)
        .map(|a| {
            // The last level repeats forever under stabilization, so its
            // sets are free; otherwise the deepest level is cheapest.
            if b.levels[m].contains(a) {
                return Some(0);
            }
            let mut best = None;
            for (k, lvl) in b.levels.iter().enumerate() {
                if lvl.contains(a) {
                    best = Some(1u64 << (m - k));
                }
            }
            best
        })
        .collect()
}

fn intersect_graph_connected(sets: &[Mask]) -> bool {
    if sets.is_empty() {
        return false;
    }
    let mut seen = vec![false; sets.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..sets.len() {
            if !seen[j] && sets[i] & sets[j] != 0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Minimum total cost of a connected family of base sets covering `a`,
/// by enumerating every subset of the distinct base sets. Returns units;
/// `None` when no family covers `a` (cannot happen for valid bases).
pub fn oracle_connected_units(b: &NestedBase, a: Mask) -> Option<u64> {
    if a == 0 || a.count_ones() == 1 {
        return Some(0);
    }
    let costs = unit_costs(b);
    let candidates: Vec<(Mask, u64)> = costs
        .iter()
        .enumerate()
        .filter_map(|(m, c)| c.map(|c| (m as Mask, c)))
        .filter(|&(m, _)| m != 0)
        .collect();
    let k = candidates.len();
    let mut best: Option<u64> = None;
    for pick in 1u64..(1 << k) {
        let mut union: Mask = 0;
        let mut cost = 0u64;
        let mut sets = Vec::new();
        for (i, &(m, c)) in candidates.iter().enumerate() {
            if pick >> i & 1 == 1 {
                union |= m;
                cost += c;
                sets.push(m);
            }
        }
        if union & a != a {
            continue;
        }
        if let Some(b) = best {
            if cost >= b {
                continue;
            }
        }
        if intersect_graph_connected(&sets) {
            best = Some(cost);
        }
    }
    best
}

/// Minimum cost over explicit cyclic sequences of base sets (repeats pay
/// again) of length at most `max_len`, covering `a` with consecutive and
/// wraparound nonempty intersections. Depth-first with cost pruning.
pub fn oracle_cycle_units(b: &NestedBase, a: Mask, max_len: usize) -> Option<u64> {
    if a == 0 || a.count_ones() == 1 {
        return Some(0);
    }
    let costs = unit_costs(b);
    let candidates: Vec<(Mask, u64)> = costs
        .iter()
        .enumerate()
        .filter_map(|(m, c)| c.map(|c| (m as Mask, c)))
        .filter(|&(m, _)| m != 0)
        .collect();
    let mut best: Option<u64> = None;
    // seq holds the chosen sets in order; close the cycle by requiring
    // last ∩ first ≠ ∅ (length 1 cycles close trivially).
    fn dfs(
        candidates: &[(Mask, u64)],
        a: Mask,
        max_len: usize,
        seq: &mut Vec<(Mask, u64)>,
        covered: Mask,
        cost: u64,
        best: &mut Option<u64>,
    ) {
        if let Some(b) = *best {
            if cost >= b {
                return;
            }
        }
        if !seq.is_empty() {
            let closes = seq.len() == 1 || seq[0].0 & seq[seq.len() - 1].0 != 0;
            if closes && covered & a == a {
                *best = Some(cost);
            }
        }
        if seq.len() == max_len {
            return;
        }
        for &(m, c) in candidates {
            if let Some(last) = seq.last() {
                if last.0 & m == 0 {
                    continue;
                }
            }
            seq.push((m, c));
            dfs(candidates, a, max_len, seq, covered | m, cost + c, best);
            seq.pop();
        }
    }
    let mut seq = Vec::new();
    dfs(&candidates, a, max_len, &mut seq, 0, 0, &mut best);
    best
}
