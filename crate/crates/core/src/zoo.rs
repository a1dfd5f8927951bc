//! Concrete diversities: diameter, metric MST, exact graph Steiner trees
//! via Dreyfus-Wagner, bounded Euclidean Steiner intervals, and the cubic
//! grid construction with its unboundedness experiment.

use serde::{Deserialize, Serialize};

use crate::axioms::Pseudodiversity;
use crate::ground::{DiversityValue, Error, FiniteSubset, GroundSet, Result, TOL};
use crate::metric::MetricTable;
use crate::par::par_map;

/// Steiner-to-MST ratio used for the lower bound in dimensions 2 and 3.
pub const STEINER_RATIO: f64 = 0.615;

/// Points in R^1, R^2 or R^3, stored padded to three coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    points: Vec<[f64; 3]>,
    ground: GroundSet,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!("dim must be 1..=3, got {dim}")));
        }
        let mut points = Vec::with_capacity(coords.len());
        for c in &coords {
            if c.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "point with {} coordinates in a dim-{dim} cloud",
                    c.len()
                )));
            }
            let mut p = [0.0; 3];
            p[..dim].copy_from_slice(c);
            points.push(p);
        }
        let ground = GroundSet::indexed(points.len(), "p");
        Ok(PointCloud { dim, points, ground })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        self.points[i]
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        euclid(&self.points[i], &self.points[j])
    }

    pub fn metric_table(&self) -> Result<MetricTable> {
        let n = self.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.dist(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        MetricTable::new(self.ground.clone(), d)
    }
}

pub fn euclid(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// A connected graph with nonnegative edge weights and a cached
/// shortest-path metric closure.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    ground: GroundSet,
    edges: Vec<(usize, usize, f64)>,
    closure: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(ground: GroundSet, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = ground.len();
        let mut closure = vec![f64::INFINITY; n * n];
        for i in 0..n {
            closure[i * n + i] = 0.0;
        }
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::IndexOutOfRange(u.max(v), n));
            }
            if w < 0.0 {
                return Err(Error::InvalidInput(format!("negative weight on ({u},{v})")));
            }
            if w < closure[u * n + v] {
                closure[u * n + v] = w;
                closure[v * n + u] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = closure[i * n + k] + closure[k * n + j];
                    if via < closure[i * n + j] {
                        closure[i * n + j] = via;
                    }
                }
            }
        }
        if closure.iter().any(|d| d.is_infinite()) {
            return Err(Error::InvalidInput("graph is not connected".into()));
        }
        Ok(WeightedGraph { ground, edges, closure })
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.closure[i * self.ground.len() + j]
    }

    pub fn metric_table(&self) -> Result<MetricTable> {
        MetricTable::new(self.ground.clone(), self.closure.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SteinerMethod {
    Diameter,
    Mst,
    DreyfusWagner,
    EuclideanBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteinerResult {
    pub value: DiversityValue,
    /// Empty when only bounds are known. Otherwise the edges form a tree
    /// spanning the terminals whose weight sum equals `value.ub`.
    pub tree_edges: Vec<(usize, usize, f64)>,
    pub method: SteinerMethod,
}

/// The diameter diversity of a metric: `δ(A) = max pairwise distance`.
pub struct DiamDiversity {
    metric: MetricTable,
}

impl Pseudodiversity for DiamDiversity {
    fn ground(&self) -> &GroundSet {
        self.metric.ground()
    }
    fn name(&self) -> &str {
        "diameter"
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn eval_unchecked(&self, a: &FiniteSubset) -> DiversityValue {
        let mut best = 0.0f64;
        let m = a.members();
        for (k, &i) in m.iter().enumerate() {
            for &j in &m[k + 1..] {
                best = best.max(self.metric.get(i, j));
            }
        }
        DiversityValue::exact(best)
    }
}

pub fn diameter_diversity(metric: MetricTable) -> DiamDiversity {
    DiamDiversity { metric }
}

/// Dense Prim over an implicit complete graph on `members`, with
/// lexicographic tie-breaks for a deterministic edge list.
fn mst_generic<D: Fn(usize, usize) -> f64>(
    members: &[usize],
    dist: D,
) -> (f64, Vec<(usize, usize, f64)>) {
    let k = members.len();
    if k <= 1 {
        return (0.0, vec![]);
    }
    let mut in_tree = vec![false; k];
    let mut best = vec![f64::INFINITY; k];
    let mut from = vec![0usize; k];
    in_tree[0] = true;
    for i in 1..k {
        best[i] = dist(members[0], members[i]);
    }
    let mut edges = Vec::with_capacity(k - 1);
    let mut total = 0.0;
    for _ in 1..k {
        let mut pick = usize::MAX;
        for i in 0..k {
            if in_tree[i] {
                continue;
            }
            if pick == usize::MAX
                || best[i] < best[pick]
                || (best[i] == best[pick]
                    && (members[from[i]], members[i]) < (members[from[pick]], members[pick]))
            {
                pick = i;
            }
        }
        in_tree[pick] = true;
        total += best[pick];
        let (u, v) = (members[from[pick]], members[pick]);
        edges.push((u.min(v), u.max(v), best[pick]));
        for i in 0..k {
            if !in_tree[i] {
                let d = dist(members[pick], members[i]);
                if d < best[i] || (d == best[i] && (members[pick], members[i]) < (members[from[i]], members[i])) {
                    best[i] = d;
                    from[i] = pick;
                }
            }
        }
    }
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    (total, edges)
}

/// Exact minimum spanning tree of `A` under the given metric.
pub fn mst(metric: &MetricTable, a: &FiniteSubset) -> Result<SteinerResult> {
    if let Some(&m) = a.members().last() {
        if m >= metric.len() {
            return Err(Error::IndexOutOfRange(m, metric.len()));
        }
    }
    let (total, edges) = mst_generic(a.members(), |i, j| metric.get(i, j));
    Ok(SteinerResult {
        value: DiversityValue::exact(total),
        tree_edges: edges,
        method: SteinerMethod::Mst,
    })
}

/// MST weight of a raw point list (used for sequence windows where no
/// metric table is materialized).
pub fn mst_points(points: &[[f64; 3]]) -> f64 {
    let members: Vec<usize> = (0..points.len()).collect();
    mst_generic(&members, |i, j| euclid(&points[i], &points[j])).0
}

/// Exact minimum Steiner tree on a graph via the Dreyfus-Wagner dynamic
/// program over (terminal subset, attachment vertex) states. `k ≤ 12`,
/// `|V| ≤ 200`. Returned edges live in the metric closure.
pub fn steiner_graph_exact(g: &WeightedGraph, terminals: &FiniteSubset) -> Result<SteinerResult> {
    let n = g.len();
    let k = terminals.len();
    if let Some(&m) = terminals.members().last() {
        if m >= n {
            return Err(Error::IndexOutOfRange(m, n));
        }
    }
    if k > 12 {
        return Err(Error::SizeLimit(format!("{k} terminals, max 12")));
    }
    if n > 200 {
        return Err(Error::SizeLimit(format!("{n} vertices, max 200")));
    }
    if k <= 1 {
        return Ok(SteinerResult {
            value: DiversityValue::exact(0.0),
            tree_edges: vec![],
            method: SteinerMethod::DreyfusWagner,
        });
    }

    let terms = terminals.members();
    let full = (1usize << k) - 1;
    // dp[mask][v]: cheapest tree containing terminals in `mask` plus v.
    let mut dp = vec![vec![f64::INFINITY; n]; full + 1];
    #[derive(Clone, Copy)]
    enum Choice {
        Leaf,
        Extend(usize),
        Merge(usize),
    }
    let mut how = vec![vec![Choice::Leaf; n]; full + 1];
    for (t, &tv) in terms.iter().enumerate() {
        for v in 0..n {
            dp[1 << t][v] = g.dist(tv, v);
            how[1 << t][v] = Choice::Extend(tv);
        }
        dp[1 << t][tv] = 0.0;
        how[1 << t][tv] = Choice::Leaf;
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        // Merge two subtrees at v.
        for v in 0..n {
            let mut sub = (mask - 1) & mask;
            while sub > mask / 2 {
                // Enumerate unordered splits once via sub > mask/2.
                let c = dp[sub][v] + dp[mask ^ sub][v];
                if c < dp[mask][v] {
                    dp[mask][v] = c;
                    how[mask][v] = Choice::Merge(sub);
                }
                sub = (sub - 1) & mask;
            }
        }
        // Re-attach through the metric closure (one pass suffices because
        // the closure already satisfies the triangle inequality).
        let snapshot: Vec<f64> = dp[mask].clone();
        for v in 0..n {
            for u in 0..n {
                let c = snapshot[u] + g.dist(u, v);
                if c < dp[mask][v] {
                    dp[mask][v] = c;
                    how[mask][v] = Choice::Extend(u);
                }
            }
        }
    }
    let root = (0..n)
        .min_by(|&a, &b| dp[full][a].total_cmp(&dp[full][b]).then(a.cmp(&b)))
        .expect("nonempty graph");
    let value = dp[full][root];

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        match how[mask][v] {
            Choice::Leaf => {}
            Choice::Extend(u) => {
                if u != v {
                    edges.push((u.min(v), u.max(v), g.dist(u, v)));
                }
                stack.push((mask, u));
            }
            Choice::Merge(sub) => {
                stack.push((sub, v));
                stack.push((mask ^ sub, v));
            }
        }
    }
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    edges.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
    Ok(SteinerResult {
        value: DiversityValue::exact(value),
        tree_edges: edges,
        method: SteinerMethod::DreyfusWagner,
    })
}

/// Graph Steiner diversity: `δ(A)` is the exact minimum Steiner tree
/// weight over the graph.
pub struct SteinerGraphDiversity {
    graph: WeightedGraph,
}

impl SteinerGraphDiversity {
    pub fn new(graph: WeightedGraph) -> Self {
        SteinerGraphDiversity { graph }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }
}

impl Pseudodiversity for SteinerGraphDiversity {
    fn ground(&self) -> &GroundSet {
        self.graph.ground()
    }
    fn name(&self) -> &str {
        "steiner-graph"
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn eval_unchecked(&self, a: &FiniteSubset) -> DiversityValue {
        steiner_graph_exact(&self.graph, a)
            .map(|r| r.value)
            .unwrap_or(DiversityValue { lb: f64::NAN, ub: f64::NAN })
    }
}

/// Certified interval for the Euclidean Steiner diversity:
/// `[ρ·MST, MST]` with `ρ = 1` in dimension 1 and the 0.615 Steiner
/// ratio otherwise (configurable in dimension 2).
pub fn steiner_euclidean_bounds_with_ratio(
    cloud: &PointCloud,
    a: &FiniteSubset,
    dim2_ratio: f64,
) -> Result<SteinerResult> {
    if let Some(&m) = a.members().last() {
        if m >= cloud.len() {
            return Err(Error::IndexOutOfRange(m, cloud.len()));
        }
    }
    let (mst_val, _) = mst_generic(a.members(), |i, j| cloud.dist(i, j));
    let ratio = match cloud.dim() {
        1 => 1.0,
        2 => dim2_ratio,
        _ => STEINER_RATIO,
    };
    Ok(SteinerResult {
        value: DiversityValue::interval(ratio * mst_val, mst_val)?,
        tree_edges: vec![],
        method: SteinerMethod::EuclideanBounds,
    })
}

pub fn steiner_euclidean_bounds(cloud: &PointCloud, a: &FiniteSubset) -> Result<SteinerResult> {
    steiner_euclidean_bounds_with_ratio(cloud, a, STEINER_RATIO)
}

/// The grid `G_n`: the `n^3` points `(i/n^2, j/n^2, k/n^2)`,
/// `0 ≤ i,j,k < n`, in lexicographic `(i, j, k)` order, all inside
/// `[0, 1/n]^3`.
pub fn grid_gn(n: u32) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Precondition("n must be >= 1".into()));
    }
    let n3 = (n as u64).pow(3);
    if n3 > 1_000_000 {
        return Err(Error::SizeLimit(format!("n^3 = {n3} > 10^6")));
    }
    let scale = 1.0 / ((n as f64) * (n as f64));
    let mut coords = Vec::with_capacity(n3 as usize);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                coords.push(vec![i as f64 * scale, j as f64 * scale, k as f64 * scale]);
            }
        }
    }
    PointCloud::new(3, coords)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRow {
    pub n: u32,
    pub diam: f64,
    pub mst: f64,
    /// `(n^3 - 1) / n^2`, the certified MST lower bound.
    pub paper_bound: f64,
    /// `0.615 * MST`, a lower bound for the Euclidean Steiner diversity.
    pub steiner_lb: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub rows: Vec<GridRow>,
}

impl ExperimentTable {
    pub fn all_bounds_hold(&self) -> bool {
        self.rows.iter().all(|r| r.bound_holds)
    }

    /// Aligned plain-text rendering (UTF-8, LF).
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>4} {:>14} {:>14} {:>14} {:>14}\n",
            "n", "diam", "mst", "paper_bound", "steiner_lb"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>4} {:>14.9} {:>14.9} {:>14.9} {:>14.9}\n",
                r.n, r.diam, r.mst, r.paper_bound, r.steiner_lb
            ));
        }
        out
    }
}

/// Grid sizes above this make the dense O(V^2) scans impractical.
const GRID_EXPERIMENT_MAX_N: u32 = 32;

/// Compute diam, MST, the `(n^3-1)/n^2` bound, and the Steiner lower
/// bound for each grid. Rows evaluate independently (in parallel with
/// the `parallel` feature) and deterministically.
pub fn grid_experiment(n_values: &[u32]) -> Result<ExperimentTable> {
    for &n in n_values {
        if n == 0 {
            return Err(Error::Precondition("n must be >= 1".into()));
        }
        if n > GRID_EXPERIMENT_MAX_N {
            return Err(Error::SizeLimit(format!(
                "grid experiment supports n <= {GRID_EXPERIMENT_MAX_N}, got {n}"
            )));
        }
    }
    let rows = par_map(n_values, |&n| -> Result<GridRow> {
        let cloud = grid_gn(n)?;
        let v = cloud.len();
        let mut diam = 0.0f64;
        for i in 0..v {
            for j in i + 1..v {
                diam = diam.max(cloud.dist(i, j));
            }
        }
        let members: Vec<usize> = (0..v).collect();
        let (mst_val, _) = mst_generic(&members, |i, j| cloud.dist(i, j));
        let nf = n as f64;
        let paper_bound = (nf * nf * nf - 1.0) / (nf * nf);
        Ok(GridRow {
            n,
            diam,
            mst: mst_val,
            paper_bound,
            steiner_lb: STEINER_RATIO * mst_val,
            bound_holds: mst_val >= paper_bound - TOL,
        })
    });
    Ok(ExperimentTable {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
