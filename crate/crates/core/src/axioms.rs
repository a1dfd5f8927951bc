//! Pseudodiversity evaluation, axiom verification, induced metrics, and
//! map-continuity checks.
//!
//! Axioms, for a function `δ` on finite subsets of a ground set `X`:
//! D1: `δ(A) ≥ 0`, with `δ(∅) = 0` and `δ({x}) = 0` (the weak direction,
//! which pseudodiversities must satisfy). D2: for all `A, B` and nonempty
//! `C`, `δ(A∪B) ≤ δ(A∪C) + δ(C∪B)`. Monotonicity (`A ⊆ B ⟹ δ(A) ≤ δ(B)`)
//! is a consequence of D1/D2 but is checked independently.

use serde::Serialize;

use crate::ground::{DiversityValue, Error, FiniteSubset, GroundSet, Result, TOL};
use crate::metric::MetricTable;
use crate::par::par_map;
use crate::zoo::{mst, PointCloud};

/// An evaluatable set-function on finite subsets of a fixed ground set,
/// with exactness metadata.
pub trait Pseudodiversity {
    fn ground(&self) -> &GroundSet;
    fn name(&self) -> &str;
    /// `true` when every returned interval is a point (`lb == ub`).
    fn is_exact(&self) -> bool;
    /// Evaluate without domain checks; see [`evaluate`].
    fn eval_unchecked(&self, a: &FiniteSubset) -> DiversityValue;
}

/// Evaluate `δ(A)`, checking that `A` lies inside the evaluator's ground.
pub fn evaluate(delta: &dyn Pseudodiversity, a: &FiniteSubset) -> Result<DiversityValue> {
    if let Some(&m) = a.members().last() {
        if m >= delta.ground().len() {
            return Err(Error::IndexOutOfRange(m, delta.ground().len()));
        }
    }
    Ok(delta.eval_unchecked(a))
}

/// Evaluate, requiring an exact value.
pub fn evaluate_exact(delta: &dyn Pseudodiversity, a: &FiniteSubset) -> Result<f64> {
    evaluate(delta, a)?.value().ok_or_else(|| {
        Error::Unsupported(format!("`{}` returned an interval value", delta.name()))
    })
}

/// A pseudodiversity backed by a precomputed table over all `2^n` subsets.
pub struct TableDiversity {
    ground: GroundSet,
    name: String,
    vals: Vec<f64>,
}

impl TableDiversity {
    pub fn from_fn<F: Fn(&FiniteSubset) -> f64>(
        ground: GroundSet,
        name: &str,
        f: F,
    ) -> Result<Self> {
        let n = ground.len();
        if n > 20 {
            return Err(Error::SizeLimit(format!("table over 2^{n} subsets")));
        }
        let vals = (0..1u32 << n)
            .map(|m| f(&FiniteSubset::from_mask(&ground, m).expect("mask in range")))
            .collect();
        Ok(TableDiversity {
            ground,
            name: name.to_string(),
            vals,
        })
    }
}

impl Pseudodiversity for TableDiversity {
    fn ground(&self) -> &GroundSet {
        &self.ground
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn eval_unchecked(&self, a: &FiniteSubset) -> DiversityValue {
        DiversityValue::exact(self.vals[a.mask() as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct D2Violation {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub name: String,
    pub mode: CheckMode,
    pub checked_subsets: usize,
    pub d1_violations: Vec<(Vec<String>, f64)>,
    pub d2_violations: Vec<D2Violation>,
    pub d2_violation_count: usize,
    pub monotonicity_violations: Vec<(Vec<String>, Vec<String>)>,
    pub pass: bool,
}

const MAX_LISTED: usize = 32;

/// Verify D1 (weak direction), D2, and monotonicity. Exhaustive mode
/// enumerates every subset triple and requires `|X| ≤ 12` and an exact
/// evaluator.
pub fn check_axioms(
    delta: &dyn Pseudodiversity,
    mode: CheckMode,
) -> Result<AxiomReport> {
    let ground = delta.ground();
    let n = ground.len();
    if !delta.is_exact() {
        return Err(Error::Unsupported(
            "interval-valued diversities cannot certify axiom equalities".into(),
        ));
    }
    if matches!(mode, CheckMode::Exhaustive) && n > 12 {
        return Err(Error::SizeLimit(format!(
            "exhaustive axiom check needs |X| <= 12, got {n}"
        )));
    }

    let total = 1usize << n;
    let vals: Vec<f64> = (0..total)
        .map(|m| {
            let a = FiniteSubset::from_mask(ground, m as u32).expect("mask in range");
            evaluate_exact(delta, &a)
        })
        .collect::<Result<_>>()?;
    let subset_labels =
        |m: usize| FiniteSubset::from_mask(ground, m as u32).unwrap().label_vec(ground);

    let mut d1 = Vec::new();
    for (m, &v) in vals.iter().enumerate() {
        let size = (m as u32).count_ones();
        if v < 0.0 || (size <= 1 && v != 0.0) {
            d1.push((subset_labels(m), v));
        }
    }

    let triples: Vec<(usize, usize, usize)> = match mode {
        CheckMode::Exhaustive => {
            // Parallelize over A; each task scans all (B, C != 0) pairs.
            let masks: Vec<usize> = (0..total).collect();
            let found = par_map(&masks, |&a| {
                let mut out = Vec::new();
                for b in 0..total {
                    for c in 1..total {
                        if vals[a | b] > vals[a | c] + vals[c | b] + TOL {
                            out.push((a, b, c));
                        }
                    }
                }
                out
            });
            found.into_iter().flatten().collect()
        }
        CheckMode::Sampled { samples, seed } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            for _ in 0..samples {
                let a = rng.gen_range(0..total);
                let b = rng.gen_range(0..total);
                let c = rng.gen_range(1..total);
                if vals[a | b] > vals[a | c] + vals[c | b] + TOL {
                    out.push((a, b, c));
                }
            }
            out
        }
    };
    let d2_violation_count = triples.len();
    let d2_violations = triples
        .iter()
        .take(MAX_LISTED)
        .map(|&(a, b, c)| D2Violation {
            a: subset_labels(a),
            b: subset_labels(b),
            c: subset_labels(c),
            lhs: vals[a | b],
            rhs: vals[a | c] + vals[c | b],
        })
        .collect();

    // Monotonicity over all pairs A ⊆ B via submask enumeration.
    let mut mono = Vec::new();
    for b in 0..total {
        let mut a = b;
        loop {
            if vals[a] > vals[b] + TOL {
                if mono.len() < MAX_LISTED {
                    mono.push((subset_labels(a), subset_labels(b)));
                }
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }

    let pass = d1.is_empty() && d2_violation_count == 0 && mono.is_empty();
    Ok(AxiomReport {
        name: delta.name().to_string(),
        mode,
        checked_subsets: total,
        d1_violations: d1,
        d2_violations,
        d2_violation_count,
        monotonicity_violations: mono,
        pass,
    })
}

/// Restrict `δ` to pairs: `d(x, y) = δ({x, y})`. Fails if the resulting
/// table violates the metric invariants.
pub fn induced_metric(delta: &dyn Pseudodiversity) -> Result<MetricTable> {
    let ground = delta.ground().clone();
    let n = ground.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let pair = FiniteSubset::new(&ground, vec![i, j])?;
            let v = evaluate_exact(delta, &pair)?;
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    MetricTable::new(ground, dist)
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichViolation {
    pub subset: Vec<String>,
    pub diam: f64,
    pub mst_upper: f64,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub checked: usize,
    pub violations: Vec<SandwichViolation>,
    pub pass: bool,
}

/// Check the two-sided bound `diam ≤ δ ≤ steiner` on concrete subsets,
/// with the MST value standing in as a certified upper bound for the
/// Steiner diversity. Requires `δ` to induce the cloud's metric.
pub fn check_sandwich(
    delta: &dyn Pseudodiversity,
    cloud: &PointCloud,
    subsets: &[FiniteSubset],
) -> Result<SandwichReport> {
    let metric = cloud.metric_table()?;
    let n = cloud.len();
    for i in 0..n {
        for j in i + 1..n {
            let pair = FiniteSubset::new(delta.ground(), vec![i, j])?;
            let v = evaluate(delta, &pair)?;
            let d = metric.get(i, j);
            if !v.is_exact() || (v.lb - d).abs() > TOL {
                return Err(Error::Precondition(format!(
                    "induced metric mismatch on pair ({}, {}): delta={:?}, d={}",
                    cloud.ground().label(i),
                    cloud.ground().label(j),
                    v,
                    d
                )));
            }
        }
    }

    let mut violations = Vec::new();
    for a in subsets {
        let v = evaluate(delta, a)?;
        let mut diam = 0.0f64;
        for &i in a.members() {
            for &j in a.members() {
                diam = diam.max(metric.get(i, j));
            }
        }
        let mst_upper = mst(&metric, a)?.value.ub;
        if diam - TOL > v.ub || v.lb > mst_upper + TOL {
            violations.push(SandwichViolation {
                subset: a.label_vec(cloud.ground()),
                diam,
                mst_upper,
                lb: v.lb,
                ub: v.ub,
            });
        }
    }
    Ok(SandwichReport {
        checked: subsets.len(),
        pass: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UCReport {
    /// For each requested `ε`: the largest modulus `d` (drawn from the
    /// attained-value grid) such that `δ_X(A) < d ⟹ δ_Y(f(A)) < ε`, or
    /// `None` when no positive `d` works.
    pub per_eps: Vec<(f64, Option<f64>)>,
    pub uniformly_continuous: bool,
    pub nonexpansive: bool,
}

/// Decide uniform continuity of a label map `f` between two finite exact
/// diversities, reporting a modulus per `ε` and whether `f` is
/// nonexpansive.
pub fn check_map_uniform_continuity(
    f: &[usize],
    delta_x: &dyn Pseudodiversity,
    delta_y: &dyn Pseudodiversity,
    eps_grid: &[f64],
) -> Result<UCReport> {
    let nx = delta_x.ground().len();
    let ny = delta_y.ground().len();
    if f.len() != nx {
        return Err(Error::Precondition(format!(
            "map defined on {} of {} ground points",
            f.len(),
            nx
        )));
    }
    if let Some(&bad) = f.iter().find(|&&y| y >= ny) {
        return Err(Error::IndexOutOfRange(bad, ny));
    }
    if nx > 12 {
        return Err(Error::SizeLimit(format!(
            "exhaustive subset scan needs |X| <= 12, got {nx}"
        )));
    }

    let total = 1usize << nx;
    let mut vx = Vec::with_capacity(total);
    let mut vy = Vec::with_capacity(total);
    for m in 0..total {
        let a = FiniteSubset::from_mask(delta_x.ground(), m as u32)?;
        let image: Vec<usize> = a.members().iter().map(|&i| f[i]).collect();
        let fa = FiniteSubset::new(delta_y.ground(), image)?;
        vx.push(evaluate_exact(delta_x, &a)?);
        vy.push(evaluate_exact(delta_y, &fa)?);
    }

    let nonexpansive = (0..total).all(|m| vy[m] <= vx[m] + TOL);

    let mut candidates: Vec<f64> = vx.iter().copied().filter(|&v| v > 0.0).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates.push(candidates.last().copied().unwrap_or(0.0) + 1.0);

    let per_eps: Vec<(f64, Option<f64>)> = eps_grid
        .iter()
        .map(|&eps| {
            let best = candidates
                .iter()
                .rev()
                .find(|&&d| (0..total).all(|m| vx[m] >= d || vy[m] < eps))
                .copied();
            (eps, best)
        })
        .collect();
    let uniformly_continuous = per_eps.iter().all(|(_, d)| d.is_some());
    Ok(UCReport {
        per_eps,
        uniformly_continuous,
        nonexpansive,
    })
}
