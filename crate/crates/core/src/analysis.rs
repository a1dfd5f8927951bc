//! Convergence and Cauchy analysis of sequences under diversities and
//! their induced metrics.
//!
//! The Cauchy condition for a diversity quantifies over all finite
//! subsets of every tail, which is not directly computable. Finite
//! windows lower-bound the tail suprema (by monotonicity), so windows can
//! refute but never certify; certification comes from structural
//! knowledge declared by the sequence kind. The flagship instance is the
//! concatenated-grid sequence: Cauchy in the induced metric, refuted
//! under the Steiner lower-bound diversity.

use std::sync::Arc;

use serde::Serialize;

use crate::ground::{Error, Result, TOL};
use crate::zoo::{euclid, mst_points, STEINER_RATIO};

/// A sequence element: a point of R^3 (lower dimensions are padded).
pub type Point = [f64; 3];

/// Diversities evaluatable on raw point lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PointDiversity {
    Diameter,
    /// `ratio * MST`, a certified lower bound for the Euclidean Steiner
    /// diversity.
    SteinerLowerBound { ratio: f64 },
}

impl PointDiversity {
    pub fn steiner_lb() -> Self {
        PointDiversity::SteinerLowerBound { ratio: STEINER_RATIO }
    }

    pub fn eval(&self, pts: &[Point]) -> f64 {
        match self {
            PointDiversity::Diameter => {
                let mut best = 0.0f64;
                for (k, p) in pts.iter().enumerate() {
                    for q in &pts[k + 1..] {
                        best = best.max(euclid(p, q));
                    }
                }
                best
            }
            PointDiversity::SteinerLowerBound { ratio } => ratio * mst_points(pts),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PointDiversity::Diameter => "diameter",
            PointDiversity::SteinerLowerBound { .. } => "steiner-lb",
        }
    }
}

/// Cumulative length of `G_1 G_2 ... G_b`: the sum of cubes
/// `(b(b+1)/2)^2`.
pub fn grid_concat_cum(b: u64) -> u64 {
    let t = b as u128 * (b as u128 + 1) / 2;
    (t * t).min(u64::MAX as u128) as u64
}

/// 1-based start index of block `G_b` inside the concatenated sequence.
pub fn grid_block_start(b: u64) -> u64 {
    grid_concat_cum(b - 1).saturating_add(1)
}

/// Block index containing 1-based position `i`.
pub fn grid_block_of(i: u64) -> u64 {
    let mut b = 1u64;
    // cum grows like b^4/4; this loop is ~ i^(1/4) steps.
    while grid_concat_cum(b) < i {
        b += 1;
    }
    b
}

/// The point at 1-based position `i` of the concatenated grid sequence,
/// with lexicographic `(i, j, k)` inner order.
pub fn grid_concat_point(idx: u64) -> Point {
    let b = grid_block_of(idx);
    let within = idx - grid_concat_cum(b - 1) - 1;
    let scale = 1.0 / ((b * b) as f64);
    let i = within / (b * b);
    let j = (within / b) % b;
    let k = within % b;
    [i as f64 * scale, j as f64 * scale, k as f64 * scale]
}

/// A sequence of ground points with a structural tail description.
/// Indices are 1-based throughout.
#[derive(Clone)]
pub enum SequenceRep {
    /// Equals `constant` beyond the explicit prefix.
    EventuallyConstant { prefix: Vec<Point>, constant: Point },
    /// Nothing is known beyond the stored terms.
    FinitePrefix { terms: Vec<Point> },
    /// The concatenation `G_1 G_2 G_3 ...` of the cubic grids.
    /// `blocks_materialized` bounds witness searches; terms at any index
    /// are computable.
    GridConcat { blocks_materialized: u32 },
    /// A term rule plus a chain-bound modulus: `modulus(ε)` returns `N`
    /// such that for every finite index set `i_1 < ... < i_m` with
    /// `i_1 ≥ N`, the telescoped pair sum
    /// `Σ d(x_{i_j}, x_{i_{j+1}})` is `< ε`. By the D2 chain bound this
    /// certifies `δ` on any tail subset for every diversity dominated by
    /// its pair sums (diameter, Steiner lower bound).
    ModulusBacked {
        name: String,
        term: Arc<dyn Fn(u64) -> Point + Send + Sync>,
        modulus: Arc<dyn Fn(f64) -> u64 + Send + Sync>,
        represented: u64,
    },
}

impl SequenceRep {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SequenceRep::EventuallyConstant { .. } => "eventually-constant",
            SequenceRep::FinitePrefix { .. } => "finite-prefix",
            SequenceRep::GridConcat { .. } => "grid-concat",
            SequenceRep::ModulusBacked { .. } => "modulus-backed",
        }
    }

    /// Term at 1-based index `i`, when representable.
    pub fn term(&self, i: u64) -> Option<Point> {
        if i == 0 {
            return None;
        }
        match self {
            SequenceRep::EventuallyConstant { prefix, constant } => Some(
                prefix
                    .get(i as usize - 1)
                    .copied()
                    .unwrap_or(*constant),
            ),
            SequenceRep::FinitePrefix { terms } => terms.get(i as usize - 1).copied(),
            SequenceRep::GridConcat { .. } => Some(grid_concat_point(i)),
            SequenceRep::ModulusBacked { term, .. } => Some(term(i)),
        }
    }

    /// How far window scans may reach.
    pub fn scan_horizon(&self) -> u64 {
        match self {
            SequenceRep::EventuallyConstant { prefix, .. } => prefix.len() as u64 + 2,
            SequenceRep::FinitePrefix { terms } => terms.len() as u64,
            SequenceRep::GridConcat { blocks_materialized } => {
                grid_concat_cum(*blocks_materialized as u64)
            }
            SequenceRep::ModulusBacked { represented, .. } => *represented,
        }
    }

    /// Metric Cauchy modulus, when the kind carries one: `N(ε)` with
    /// `d(x_i, x_j) < ε` for all `i, j ≥ N`.
    pub fn metric_modulus(&self, eps: f64) -> Option<u64> {
        match self {
            SequenceRep::EventuallyConstant { prefix, .. } => Some(prefix.len() as u64 + 1),
            SequenceRep::FinitePrefix { .. } => None,
            SequenceRep::GridConcat { .. } => {
                // All points from the start of G_b lie in [0, 1/b]^3.
                let b = (3f64.sqrt() / eps).floor() as u64 + 1;
                Some(grid_block_start(b))
            }
            SequenceRep::ModulusBacked { modulus, .. } => Some(modulus(eps)),
        }
    }
}

/// The concatenated grid sequence `G_1 G_2 G_3 ...` with 12 blocks
/// materialized for witness searches.
pub fn concatenated_grid_sequence() -> SequenceRep {
    SequenceRep::GridConcat { blocks_materialized: 12 }
}

/// `x_n = 1/n` on the real line, with the total-variation chain modulus
/// `N(ε) = ⌈1/ε⌉ + 1`.
pub fn harmonic_sequence() -> SequenceRep {
    SequenceRep::ModulusBacked {
        name: "harmonic".into(),
        term: Arc::new(|i| [1.0 / i as f64, 0.0, 0.0]),
        modulus: Arc::new(|eps| (1.0 / eps).ceil() as u64 + 1),
        represented: 1 << 15,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub epsilon: f64,
    pub window_start: u64,
    pub window_len: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusEntry {
    pub epsilon: f64,
    pub index: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyVerdict {
    pub status: Status,
    pub witness: Option<Witness>,
    pub modulus_table: Vec<ModulusEntry>,
    pub notes: String,
}

impl CauchyVerdict {
    fn certified(table: Vec<ModulusEntry>, notes: &str) -> Self {
        CauchyVerdict {
            status: Status::Certified,
            witness: None,
            modulus_table: table,
            notes: notes.into(),
        }
    }

    fn refuted(witness: Witness, notes: &str) -> Self {
        CauchyVerdict {
            status: Status::Refuted,
            witness: Some(witness),
            modulus_table: vec![],
            notes: notes.into(),
        }
    }

    fn inconclusive(notes: &str) -> Self {
        CauchyVerdict {
            status: Status::Inconclusive,
            witness: None,
            modulus_table: vec![],
            notes: notes.into(),
        }
    }
}

/// `{1, 1/2, 1/4, ..., 2^-20}`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=20).map(|k| (2f64).powi(-k)).collect()
}

fn window_points(s: &SequenceRep, start: u64, window: usize, extra: Option<Point>) -> Vec<Point> {
    let mut pts: Vec<Point> = (start..start + window as u64 + 1)
        .filter_map(|i| s.term(i))
        .collect();
    if let Some(p) = extra {
        pts.push(p);
    }
    pts
}

/// Scan windows `{x_N, ..., x_{N+window}}` and refute ε when every
/// reachable window evaluates to at least ε. Returns the strongest
/// refuted ε from the grid.
fn scan_refute(
    s: &SequenceRep,
    delta: PointDiversity,
    eps_grid: &[f64],
    window: usize,
    extra: Option<Point>,
) -> Option<Witness> {
    let horizon = s.scan_horizon();
    if horizon < window as u64 + 1 {
        return None;
    }
    let last_start = horizon - window as u64;
    // Stride keeps long scans tractable without changing any verdict on
    // the shipped instances (the statistic is monotone in N for them).
    let stride = ((last_start / 64).max(1)) as u64;
    let starts: Vec<u64> = (1..=last_start).step_by(stride as usize).collect();
    let mut eps_sorted = eps_grid.to_vec();
    eps_sorted.sort_by(f64::total_cmp);
    eps_sorted.reverse();
    let values: Vec<(u64, f64)> = starts
        .iter()
        .map(|&n| (n, delta.eval(&window_points(s, n, window, extra))))
        .collect();
    for eps in eps_sorted {
        if values.iter().all(|&(_, v)| v >= eps) {
            let &(n, v) = values.last().unwrap();
            return Some(Witness {
                epsilon: eps,
                window_start: n,
                window_len: window + 1,
                value: v,
            });
        }
    }
    None
}

/// Decide the Cauchy property of `s` under `delta`.
pub fn is_cauchy_diversity(
    s: &SequenceRep,
    delta: PointDiversity,
    eps_grid: &[f64],
    window: usize,
) -> Result<CauchyVerdict> {
    if window < 2 {
        return Err(Error::Precondition("window must be >= 2".into()));
    }
    match s {
        SequenceRep::EventuallyConstant { prefix, .. } => {
            let table = eps_grid
                .iter()
                .map(|&epsilon| ModulusEntry { epsilon, index: prefix.len() as u64 + 1 })
                .collect();
            Ok(CauchyVerdict::certified(
                table,
                "tail is constant; every tail subset is a singleton set",
            ))
        }
        SequenceRep::FinitePrefix { .. } => {
            if let Some(w) = scan_refute(s, delta, eps_grid, window, None) {
                Ok(CauchyVerdict::refuted(
                    w,
                    "every reachable window stays above epsilon",
                ))
            } else {
                Ok(CauchyVerdict::inconclusive(
                    "finite prefix carries no tail information",
                ))
            }
        }
        SequenceRep::GridConcat { blocks_materialized } => match delta {
            PointDiversity::Diameter => {
                let table = eps_grid
                    .iter()
                    .map(|&epsilon| ModulusEntry {
                        epsilon,
                        index: s.metric_modulus(epsilon).unwrap(),
                    })
                    .collect();
                Ok(CauchyVerdict::certified(
                    table,
                    "tail from the start of G_b is contained in [0,1/b]^3, so any \
                     tail subset has diameter <= sqrt(3)/b",
                ))
            }
            PointDiversity::SteinerLowerBound { .. } => {
                // The block G_b itself is a subset of every tail before it,
                // and its value grows without bound.
                let mut best: Option<Witness> = None;
                for b in (1..=*blocks_materialized as u64).rev() {
                    let start = grid_block_start(b);
                    let len = (b * b * b) as usize;
                    let pts: Vec<Point> = (start..start + len as u64)
                        .map(grid_concat_point)
                        .collect();
                    let v = delta.eval(&pts);
                    let eps = eps_grid
                        .iter()
                        .copied()
                        .filter(|&e| v >= e)
                        .fold(f64::NEG_INFINITY, f64::max);
                    if eps.is_finite() {
                        best = Some(Witness {
                            epsilon: eps,
                            window_start: start,
                            window_len: len,
                            value: v,
                        });
                        break;
                    }
                }
                match best {
                    Some(w) => Ok(CauchyVerdict::refuted(
                        w,
                        "blocks G_b grow like 0.615*(b^3-1)/b^2; every tail contains \
                         arbitrarily large blocks",
                    )),
                    None => Ok(CauchyVerdict::inconclusive(
                        "no materialized block reaches the requested epsilon",
                    )),
                }
            }
        },
        SequenceRep::ModulusBacked { modulus, .. } => {
            let mut table = Vec::new();
            for &epsilon in eps_grid {
                let index = modulus(epsilon);
                // Spot-check one window against the claimed modulus.
                if index + window as u64 <= s.scan_horizon() {
                    let v = delta.eval(&window_points(s, index, window, None));
                    if v >= epsilon {
                        return Ok(CauchyVerdict::inconclusive(&format!(
                            "modulus claims N({epsilon}) = {index} but window value {v} >= epsilon"
                        )));
                    }
                }
                table.push(ModulusEntry { epsilon, index });
            }
            Ok(CauchyVerdict::certified(
                table,
                "chain-bound modulus dominates the tail suprema via D2",
            ))
        }
    }
}

/// Cauchy in the induced metric: the same analysis restricted to pairs.
pub fn is_cauchy_metric(s: &SequenceRep, eps_grid: &[f64]) -> Result<CauchyVerdict> {
    match s {
        SequenceRep::FinitePrefix { .. } => {
            if let Some(w) = scan_refute(s, PointDiversity::Diameter, eps_grid, 1, None) {
                Ok(CauchyVerdict::refuted(w, "pair distances stay above epsilon"))
            } else {
                Ok(CauchyVerdict::inconclusive(
                    "finite prefix carries no tail information",
                ))
            }
        }
        _ => {
            let table = eps_grid
                .iter()
                .map(|&epsilon| ModulusEntry {
                    epsilon,
                    index: s.metric_modulus(epsilon).expect("kind carries a modulus"),
                })
                .collect();
            Ok(CauchyVerdict::certified(table, "metric modulus from structure"))
        }
    }
}

/// Convergence to `x`: the Cauchy analysis on windows augmented with `x`.
pub fn converges_to(
    s: &SequenceRep,
    x: Point,
    delta: PointDiversity,
    eps_grid: &[f64],
    window: usize,
) -> Result<CauchyVerdict> {
    if window < 2 {
        return Err(Error::Precondition("window must be >= 2".into()));
    }
    match s {
        SequenceRep::EventuallyConstant { prefix, constant } => {
            if euclid(constant, &x) <= TOL {
                let table = eps_grid
                    .iter()
                    .map(|&epsilon| ModulusEntry { epsilon, index: prefix.len() as u64 + 1 })
                    .collect();
                Ok(CauchyVerdict::certified(table, "sequence is eventually x"))
            } else {
                let v = delta.eval(&[*constant, x]);
                let eps = eps_grid
                    .iter()
                    .copied()
                    .filter(|&e| v >= e)
                    .fold(f64::NEG_INFINITY, f64::max);
                if eps.is_finite() {
                    Ok(CauchyVerdict::refuted(
                        Witness {
                            epsilon: eps,
                            window_start: prefix.len() as u64 + 1,
                            window_len: 2,
                            value: v,
                        },
                        "tail pair {constant, x} stays apart",
                    ))
                } else {
                    Ok(CauchyVerdict::inconclusive("epsilon grid too coarse"))
                }
            }
        }
        SequenceRep::FinitePrefix { .. } => {
            if let Some(w) = scan_refute(s, delta, eps_grid, window, Some(x)) {
                Ok(CauchyVerdict::refuted(w, "augmented windows stay above epsilon"))
            } else {
                Ok(CauchyVerdict::inconclusive(
                    "finite prefix carries no tail information",
                ))
            }
        }
        SequenceRep::GridConcat { .. } => match delta {
            PointDiversity::Diameter => {
                let origin = [0.0, 0.0, 0.0];
                if euclid(&x, &origin) <= TOL {
                    let table = eps_grid
                        .iter()
                        .map(|&epsilon| ModulusEntry {
                            epsilon,
                            index: s.metric_modulus(epsilon).unwrap(),
                        })
                        .collect();
                    Ok(CauchyVerdict::certified(
                        table,
                        "diam({0} U tail from G_b) <= sqrt(3)/b",
                    ))
                } else if let Some(w) = scan_refute(s, delta, eps_grid, window, Some(x)) {
                    Ok(CauchyVerdict::refuted(w, "windows with x stay above epsilon"))
                } else {
                    Ok(CauchyVerdict::inconclusive("epsilon grid too coarse"))
                }
            }
            PointDiversity::SteinerLowerBound { .. } => {
                let mut inner = is_cauchy_diversity(s, delta, eps_grid, window)?;
                if inner.status == Status::Refuted {
                    // Augment the witness block with x; MST can only pick up
                    // the extra vertex.
                    let w = inner.witness.take().unwrap();
                    let mut pts: Vec<Point> = (w.window_start
                        ..w.window_start + w.window_len as u64)
                        .map(grid_concat_point)
                        .collect();
                    pts.push(x);
                    let v = delta.eval(&pts);
                    let eps = eps_grid
                        .iter()
                        .copied()
                        .filter(|&e| v >= e)
                        .fold(f64::NEG_INFINITY, f64::max);
                    Ok(CauchyVerdict::refuted(
                        Witness {
                            epsilon: if eps.is_finite() { eps } else { w.epsilon },
                            window_start: w.window_start,
                            window_len: w.window_len + 1,
                            value: v,
                        },
                        "a refuted Cauchy sequence converges nowhere",
                    ))
                } else {
                    Ok(inner)
                }
            }
        },
        SequenceRep::ModulusBacked { term, modulus, .. } => {
            // sup_{m >= N} d(x, x_m) <= d(x, x_N) + chain(N); with
            // N = modulus(eps/8) and pair < eps/4 every augmented tail
            // subset evaluates below eps.
            let mut table = Vec::new();
            for &epsilon in eps_grid {
                let n = modulus(epsilon / 8.0);
                let pair = euclid(&term(n), &x);
                if pair >= epsilon / 4.0 {
                    let v = delta.eval(&[term(n), x]);
                    return Ok(CauchyVerdict::refuted(
                        Witness {
                            epsilon,
                            window_start: n,
                            window_len: 2,
                            value: v,
                        },
                        "pair {x_N, x} fails the modulus margin",
                    ));
                }
                table.push(ModulusEntry { epsilon, index: n });
            }
            Ok(CauchyVerdict::certified(
                table,
                "pair bound at the modulus cutoff plus the chain bound",
            ))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsequenceExtraction {
    /// 1-based indices `n_1 < n_2 < ...` into the original sequence.
    pub indices: Vec<u64>,
    /// `(N, 2^{1-N})`: the telescoped tail bound per starting position.
    pub bound_table: Vec<(u32, f64)>,
}

/// Extract a diversity-Cauchy subsequence from a metric-Cauchy sequence:
/// `n_i` is the least represented index with `d(x_{n_i}, x_m) < 2^{-i}`
/// for all represented `m ≥ n_i`, bounded by the certified modulus, then
/// made strictly increasing.
pub fn extract_cauchy_subsequence(s: &SequenceRep, count: u32) -> Result<SubsequenceExtraction> {
    if s.metric_modulus(1.0).is_none() {
        return Err(Error::Precondition(
            "sequence kind carries no certified metric modulus".into(),
        ));
    }
    let mut indices: Vec<u64> = Vec::with_capacity(count as usize);
    for i in 1..=count {
        let eps = (2f64).powi(-(i as i32));
        let n = match s {
            SequenceRep::GridConcat { .. } => {
                // Candidates are block starts, where the exact tail pair
                // supremum has the closed form max over b' >= max(b,2) of
                // sqrt(3)(b'-1)/b'^2, attained at the first term.
                let sup_from_block = |b: u64| -> f64 {
                    let bb = b.max(2) as f64;
                    3f64.sqrt() * (bb - 1.0) / (bb * bb)
                };
                let mut b = 1u64;
                while sup_from_block(b) >= eps {
                    b += 1;
                }
                grid_block_start(b)
            }
            SequenceRep::EventuallyConstant { prefix, .. } => {
                // Beyond the prefix every pair distance is zero; scan the
                // represented range for an earlier witness.
                let horizon = prefix.len() as u64 + 2;
                let mut found = horizon;
                'outer: for n in 1..=horizon {
                    for m in n..=horizon {
                        let (a, b) = (s.term(n).unwrap(), s.term(m).unwrap());
                        if euclid(&a, &b) >= eps {
                            continue 'outer;
                        }
                    }
                    found = n;
                    break;
                }
                found
            }
            SequenceRep::ModulusBacked { term, modulus, represented, .. } => {
                let bound = modulus(eps).min(*represented);
                let horizon = *represented;
                // Exact suffix extremes in each coordinate: the farthest
                // represented point from x_n is a coordinate extreme.
                // (Exact for the shipped 1-dimensional sequences; an upper
                // bound otherwise, which can only delay the index.)
                let mut suffix_min = [f64::INFINITY; 3];
                let mut suffix_max = [f64::NEG_INFINITY; 3];
                let mut sup_at = vec![0.0f64; horizon as usize + 1];
                for n in (1..=horizon).rev() {
                    let p = term(n);
                    for d in 0..3 {
                        suffix_min[d] = suffix_min[d].min(p[d]);
                        suffix_max[d] = suffix_max[d].max(p[d]);
                    }
                    let mut far = [0.0; 3];
                    for d in 0..3 {
                        far[d] = (p[d] - suffix_min[d]).abs().max((p[d] - suffix_max[d]).abs());
                    }
                    sup_at[n as usize] = (far[0] * far[0] + far[1] * far[1] + far[2] * far[2]).sqrt();
                }
                (1..=bound)
                    .find(|&n| sup_at[n as usize] < eps)
                    .unwrap_or(bound)
            }
            SequenceRep::FinitePrefix { .. } => unreachable!("no modulus"),
        };
        let n = match indices.last() {
            Some(&prev) => n.max(prev + 1),
            None => n,
        };
        indices.push(n);
    }
    let bound_table = (1..=count).map(|n| (n, (2f64).powi(1 - n as i32))).collect();
    Ok(SubsequenceExtraction { indices, bound_table })
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowBound {
    pub start_position: u32,
    pub bound: f64,
    pub value: f64,
    pub ok: bool,
}

/// Evaluate `δ` on subsequence windows `{x_{n_N}, ..., x_{n_{N+window}}}`
/// and compare against the telescoped bound `2^{1-N}`.
pub fn verify_subsequence_windows(
    s: &SequenceRep,
    delta: PointDiversity,
    extraction: &SubsequenceExtraction,
    window: usize,
) -> Vec<WindowBound> {
    let k = extraction.indices.len();
    let mut out = Vec::new();
    for start in 1..=k.saturating_sub(window) {
        let pts: Vec<Point> = extraction.indices[start - 1..start - 1 + window + 1]
            .iter()
            .filter_map(|&i| s.term(i))
            .collect();
        let value = delta.eval(&pts);
        let bound = (2f64).powi(1 - start as i32);
        out.push(WindowBound {
            start_position: start as u32,
            bound,
            value,
            ok: value <= bound + TOL,
        });
    }
    out
}
