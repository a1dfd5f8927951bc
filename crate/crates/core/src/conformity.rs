//! Conformities over finite ground sets: filter bases on the finite
//! subsets of X, the composition operation, axiom validation, generation
//! from pseudodiversities, the induced uniformity and its topology,
//! Cauchy filters, and the commuting-diagram checks tying the diversity,
//! uniformity, metric, and topology constructions together.
//!
//! Everything here works on explicit finite bases; filters on finite
//! grounds are principal, so base-level reasoning is complete. Ground
//! sets are capped at 6 elements so set families fit in small bitmask
//! lattices.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};

use crate::axioms::{evaluate_exact, induced_metric, Pseudodiversity};
use crate::ground::{Error, FiniteSubset, GroundSet, Result, TOL};
use crate::metric::MetricTable;

/// Largest ground size for exhaustive lattice operations.
pub const MAX_GROUND: usize = 6;

/// A subset of the ground set as a bitmask.
pub type Mask = u32;

fn check_ground_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_GROUND {
        return Err(Error::SizeLimit(format!(
            "ground size {n} outside 1..={MAX_GROUND}"
        )));
    }
    Ok(())
}

/// One element of a conformity base: a family of subsets of the ground.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SetFamily {
    pub ground_size: usize,
    pub members: BTreeSet<Mask>,
}

impl SetFamily {
    pub fn new(ground_size: usize, members: impl IntoIterator<Item = Mask>) -> Result<Self> {
        check_ground_size(ground_size)?;
        let full = (1u32 << ground_size) - 1;
        let members: BTreeSet<Mask> = members.into_iter().collect();
        if members.iter().any(|&m| m & !full != 0) {
            return Err(Error::InvalidInput(format!(
                "mask exceeds ground of size {ground_size}"
            )));
        }
        Ok(SetFamily { ground_size, members })
    }

    /// All subsets of the ground.
    pub fn powerset(ground_size: usize) -> Self {
        let full = (1u32 << ground_size) - 1;
        SetFamily {
            ground_size,
            members: (0..=full).collect(),
        }
    }

    /// The empty set together with all singletons (the discrete family).
    pub fn singletons(ground_size: usize) -> Self {
        let mut members: BTreeSet<Mask> = (0..ground_size).map(|i| 1 << i).collect();
        members.insert(0);
        SetFamily { ground_size, members }
    }

    pub fn contains(&self, m: Mask) -> bool {
        self.members.contains(&m)
    }

    pub fn is_subfamily_of(&self, other: &SetFamily) -> bool {
        self.members.is_subset(&other.members)
    }

    /// `{ u ∪ v : u ∈ self, v ∈ other, u ∩ v ≠ ∅ }`.
    pub fn compose(&self, other: &SetFamily) -> Result<SetFamily> {
        if self.ground_size != other.ground_size {
            return Err(Error::Precondition("ground mismatch in compose".into()));
        }
        let mut out = BTreeSet::new();
        for &u in &self.members {
            for &v in &other.members {
                if u & v != 0 {
                    out.insert(u | v);
                }
            }
        }
        Ok(SetFamily { ground_size: self.ground_size, members: out })
    }

    pub fn intersect(&self, other: &SetFamily) -> Result<SetFamily> {
        if self.ground_size != other.ground_size {
            return Err(Error::Precondition("ground mismatch in intersect".into()));
        }
        Ok(SetFamily {
            ground_size: self.ground_size,
            members: self.members.intersection(&other.members).copied().collect(),
        })
    }

    pub fn downward_closure(&self) -> SetFamily {
        let mut out = BTreeSet::new();
        for &m in &self.members {
            // enumerate submasks of m
            let mut s = m;
            loop {
                out.insert(s);
                if s == 0 {
                    break;
                }
                s = (s - 1) & m;
            }
        }
        SetFamily { ground_size: self.ground_size, members: out }
    }

    pub fn is_downward_closed(&self) -> bool {
        self.members.iter().all(|&m| {
            let mut s = m;
            loop {
                if !self.members.contains(&s) {
                    return false;
                }
                if s == 0 {
                    return true;
                }
                s = (s - 1) & m;
            }
        })
    }

    pub fn has_all_singletons(&self) -> bool {
        (0..self.ground_size).all(|i| self.members.contains(&(1 << i)))
    }
}

/// A nonempty base of set families over one ground, generating a filter
/// on P(X). Construction normalizes by closing under pairwise
/// intersection up to a fixed point, so generated-filter questions reduce
/// to base membership.
#[derive(Debug, Clone)]
pub struct FilterBase {
    pub ground: GroundSet,
    pub families: Vec<SetFamily>,
}

impl FilterBase {
    pub fn new(ground: GroundSet, families: Vec<SetFamily>) -> Result<Self> {
        check_ground_size(ground.len())?;
        if families.is_empty() {
            return Err(Error::InvalidInput("filter base must be nonempty".into()));
        }
        for f in &families {
            if f.ground_size != ground.len() {
                return Err(Error::Precondition("family ground size mismatch".into()));
            }
            if f.members.is_empty() {
                return Err(Error::InvalidInput(
                    "the empty family cannot belong to a filter base".into(),
                ));
            }
        }
        let mut base = FilterBase { ground, families };
        base.normalize()?;
        Ok(base)
    }

    fn normalize(&mut self) -> Result<()> {
        let mut set: BTreeSet<SetFamily> = self.families.iter().cloned().collect();
        loop {
            let current: Vec<SetFamily> = set.iter().cloned().collect();
            let mut grew = false;
            for (i, a) in current.iter().enumerate() {
                for b in &current[i + 1..] {
                    let c = a.intersect(b)?;
                    if c.members.is_empty() {
                        return Err(Error::InvalidInput(
                            "pairwise intersection of base members is empty; \
                             the generated filter would contain the empty family"
                                .into(),
                        ));
                    }
                    if set.insert(c) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        self.families = set.into_iter().collect();
        Ok(())
    }

    /// Every member of `other` contains some member of `self`: the filter
    /// generated by `self` refines the one generated by `other`.
    pub fn dominates(&self, other: &FilterBase) -> bool {
        other
            .families
            .iter()
            .all(|c| self.families.iter().any(|d| d.is_subfamily_of(c)))
    }

    /// Equality of generated filters by mutual domination.
    pub fn equivalent_to(&self, other: &FilterBase) -> bool {
        self.dominates(other) && other.dominates(self)
    }

    /// Canonical JSON: `{"ground": [labels], "families": [[[subset]...]...]}`
    /// with subsets ordered by (size, lexicographic labels).
    pub fn to_json(&self) -> Value {
        let fams: Vec<Value> = self
            .families
            .iter()
            .map(|f| {
                let mut subsets: Vec<Vec<String>> = f
                    .members
                    .iter()
                    .map(|&m| {
                        FiniteSubset::from_mask(&self.ground, m)
                            .expect("mask validated")
                            .label_vec(&self.ground)
                    })
                    .collect();
                subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
                json!(subsets)
            })
            .collect();
        json!({ "ground": self.ground.labels(), "families": fams })
    }

    pub fn from_json(v: &Value) -> Result<FilterBase> {
        let ground_labels: Vec<String> = v
            .get("ground")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("missing \"ground\" array".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::InvalidInput("ground labels must be strings".into()))
            })
            .collect::<Result<_>>()?;
        let ground = GroundSet::new(ground_labels)?;
        let fams_json = v
            .get("families")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("missing \"families\" array".into()))?;
        let mut families = Vec::new();
        for fam in fams_json {
            let subsets = fam
                .as_array()
                .ok_or_else(|| Error::InvalidInput("family must be an array".into()))?;
            let mut members = BTreeSet::new();
            for sub in subsets {
                let labels: Vec<&str> = sub
                    .as_array()
                    .ok_or_else(|| Error::InvalidInput("subset must be an array".into()))?
                    .iter()
                    .map(|s| {
                        s.as_str()
                            .ok_or_else(|| Error::InvalidInput("labels must be strings".into()))
                    })
                    .collect::<Result<_>>()?;
                members.insert(FiniteSubset::from_labels(&ground, &labels)?.mask());
            }
            families.push(SetFamily::new(ground.len(), members)?);
        }
        FilterBase::new(ground, families)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub axiom: String,
    pub family_index: usize,
    pub detail: String,
}

/// A validated conformity: the normalized base plus, for each family, the
/// index of a base member `D` with `D∘D ⊆ C`.
#[derive(Debug, Clone)]
pub struct ConformityBase {
    pub base: FilterBase,
    pub c3_witnesses: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum Validation {
    Valid(ConformityBase),
    Invalid(ViolationReport),
}

impl Validation {
    pub fn into_conformity(self) -> Result<ConformityBase> {
        match self {
            Validation::Valid(c) => Ok(c),
            Validation::Invalid(v) => Err(Error::Precondition(format!(
                "{} violated at family {}: {}",
                v.axiom, v.family_index, v.detail
            ))),
        }
    }
}

/// Check C1 (all singletons in every family), C2 (downward closure), and
/// C3 (a base member `D` with `D∘D ⊆ C` for every family `C`), returning
/// certificates or the first violation.
pub fn validate_conformity(base: &FilterBase) -> Result<Validation> {
    for (i, c) in base.families.iter().enumerate() {
        if !c.has_all_singletons() {
            return Ok(Validation::Invalid(ViolationReport {
                axiom: "C1".into(),
                family_index: i,
                detail: "family misses a singleton".into(),
            }));
        }
        if !c.is_downward_closed() {
            let bad = c
                .members
                .iter()
                .find(|&&m| {
                    let mut s = m;
                    loop {
                        if !c.members.contains(&s) {
                            return true;
                        }
                        if s == 0 {
                            return false;
                        }
                        s = (s - 1) & m;
                    }
                })
                .copied()
                .unwrap();
            return Ok(Validation::Invalid(ViolationReport {
                axiom: "C2".into(),
                family_index: i,
                detail: format!("member {bad:#b} has a subset outside the family"),
            }));
        }
    }
    let mut witnesses = Vec::with_capacity(base.families.len());
    for (i, c) in base.families.iter().enumerate() {
        // The base is intersection-closed, so searching base members covers
        // the finite lattice of intersections.
        let found = base
            .families
            .iter()
            .position(|d| match d.compose(d) {
                Ok(dd) => dd.is_subfamily_of(c),
                Err(_) => false,
            });
        match found {
            Some(j) => witnesses.push(j),
            None => {
                return Ok(Validation::Invalid(ViolationReport {
                    axiom: "C3".into(),
                    family_index: i,
                    detail: "no base member D satisfies D∘D ⊆ C".into(),
                }))
            }
        }
    }
    Ok(Validation::Valid(ConformityBase {
        base: base.clone(),
        c3_witnesses: witnesses,
    }))
}

/// The discrete conformity: single family `{∅} ∪ singletons`.
pub fn discrete_conformity(ground: GroundSet) -> ConformityBase {
    let fam = SetFamily::singletons(ground.len());
    let base = FilterBase::new(ground, vec![fam]).expect("singleton base is a filter base");
    validate_conformity(&base)
        .expect("validation total")
        .into_conformity()
        .expect("discrete base satisfies the axioms")
}

/// The indiscrete conformity: single family `P(X)`.
pub fn indiscrete_conformity(ground: GroundSet) -> ConformityBase {
    let fam = SetFamily::powerset(ground.len());
    let base = FilterBase::new(ground, vec![fam]).expect("powerset base is a filter base");
    validate_conformity(&base)
        .expect("validation total")
        .into_conformity()
        .expect("powerset satisfies the axioms")
}

/// Sublevel family `δ⁻¹[0, ε]` (non-strict).
pub fn sublevel_family(delta: &dyn Pseudodiversity, eps: f64) -> Result<SetFamily> {
    let ground = delta.ground();
    check_ground_size(ground.len())?;
    let full = (1u32 << ground.len()) - 1;
    let mut members = BTreeSet::new();
    for m in 0..=full {
        let a = FiniteSubset::from_mask(ground, m)?;
        if evaluate_exact(delta, &a)? <= eps + TOL {
            members.insert(m);
        }
    }
    SetFamily::new(ground.len(), members)
}

/// The attained values of `delta` over all subsets, ascending.
pub fn attained_values(delta: &dyn Pseudodiversity) -> Result<Vec<f64>> {
    let ground = delta.ground();
    check_ground_size(ground.len())?;
    let full = (1u32 << ground.len()) - 1;
    let mut vals: Vec<f64> = (0..=full)
        .map(|m| {
            let a = FiniteSubset::from_mask(ground, m)?;
            evaluate_exact(delta, &a)
        })
        .collect::<Result<_>>()?;
    vals.sort_by(f64::total_cmp);
    vals.dedup_by(|a, b| (*a - *b).abs() <= TOL);
    Ok(vals)
}

/// The conformity generated by a family of exact pseudodiversities: the
/// base of sublevel families `δ_α⁻¹[0, ε]`, with ε ranging over each
/// generator's attained values plus one value below its smallest positive
/// value.
pub fn generate_from_diversities(deltas: &[&dyn Pseudodiversity]) -> Result<ConformityBase> {
    if deltas.is_empty() {
        return Err(Error::Precondition("need at least one generator".into()));
    }
    let ground = deltas[0].ground();
    let mut families = Vec::new();
    for &delta in deltas {
        if delta.ground() != ground {
            return Err(Error::Precondition("generators on different grounds".into()));
        }
        if !delta.is_exact() {
            return Err(Error::Precondition(format!(
                "generator {} is not exact",
                delta.name()
            )));
        }
        let mut grid = attained_values(delta)?;
        if let Some(&min_pos) = grid.iter().find(|&&v| v > TOL) {
            grid.push(min_pos / 2.0);
        }
        for eps in grid {
            families.push(sublevel_family(delta, eps)?);
        }
    }
    let base = FilterBase::new(ground.clone(), families)?;
    validate_conformity(&base)?.into_conformity()
}

/// A symmetric relation on the ground, packed as an `n*n` bitset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Relation {
    pub n: usize,
    pub pairs: u64,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { n, pairs: 0 }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pairs >> (x * self.n + y) & 1 == 1
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        self.pairs |= 1 << (x * self.n + y);
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|x| self.contains(x, x))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|x| (0..self.n).all(|y| self.contains(x, y) == self.contains(y, x)))
    }

    pub fn is_subrelation_of(&self, other: &Relation) -> bool {
        self.pairs & !other.pairs == 0
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        Relation { n: self.n, pairs: self.pairs & other.pairs }
    }

    /// Relational composition `{(x,z) : ∃y (x,y), (y,z)}`.
    pub fn compose(&self, other: &Relation) -> Relation {
        let mut out = Relation::empty(self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                if self.contains(x, y) {
                    for z in 0..self.n {
                        if other.contains(y, z) {
                            out.insert(x, z);
                        }
                    }
                }
            }
        }
        out
    }

    /// `N(x, U) = {y : (x,y) ∈ U}` as a mask.
    pub fn neighborhood(&self, x: usize) -> Mask {
        let mut m = 0u32;
        for y in 0..self.n {
            if self.contains(x, y) {
                m |= 1 << y;
            }
        }
        m
    }
}

/// A base for a uniformity, normalized under pairwise intersection.
#[derive(Debug, Clone)]
pub struct UniformityBase {
    pub ground: GroundSet,
    pub relations: Vec<Relation>,
}

impl UniformityBase {
    pub fn new(ground: GroundSet, relations: Vec<Relation>) -> Result<Self> {
        check_ground_size(ground.len())?;
        if relations.is_empty() {
            return Err(Error::InvalidInput("uniformity base must be nonempty".into()));
        }
        for r in &relations {
            if r.n != ground.len() {
                return Err(Error::Precondition("relation size mismatch".into()));
            }
            if !r.is_reflexive() {
                return Err(Error::InvalidInput("relation not reflexive (U1)".into()));
            }
            if !r.is_symmetric() {
                return Err(Error::InvalidInput("relation not symmetric (U2)".into()));
            }
        }
        let mut set: BTreeSet<Relation> = relations.into_iter().collect();
        loop {
            let current: Vec<Relation> = set.iter().copied().collect();
            let mut grew = false;
            for (i, a) in current.iter().enumerate() {
                for b in &current[i + 1..] {
                    if set.insert(a.intersect(b)) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        Ok(UniformityBase {
            ground,
            relations: set.into_iter().collect(),
        })
    }

    /// U3: every relation admits a base member W with W∘W ⊆ U.
    pub fn has_composition_witnesses(&self) -> bool {
        self.relations
            .iter()
            .all(|u| self.relations.iter().any(|w| w.compose(w).is_subrelation_of(u)))
    }

    pub fn dominates(&self, other: &UniformityBase) -> bool {
        other
            .relations
            .iter()
            .all(|u| self.relations.iter().any(|w| w.is_subrelation_of(u)))
    }

    pub fn equivalent_to(&self, other: &UniformityBase) -> bool {
        self.dominates(other) && other.dominates(self)
    }
}

/// `U_C = {(x,y) : {x,y} ∈ C}`, one relation per base family. U1 follows
/// from C1, U2 from `{x,y} = {y,x}`, U3 from the C3 witnesses; all three
/// are re-verified.
pub fn induced_uniformity(c: &ConformityBase) -> Result<UniformityBase> {
    let n = c.base.ground.len();
    let mut relations = Vec::new();
    for fam in &c.base.families {
        let mut r = Relation::empty(n);
        for x in 0..n {
            for y in 0..n {
                let pair: Mask = (1 << x) | (1 << y);
                if fam.contains(pair) {
                    r.insert(x, y);
                }
            }
        }
        relations.push(r);
    }
    let u = UniformityBase::new(c.base.ground.clone(), relations)?;
    if !u.has_composition_witnesses() {
        return Err(Error::Precondition(
            "induced relations lack composition witnesses (U3)".into(),
        ));
    }
    Ok(u)
}

/// The uniformity generated by a family of pseudometrics: relations
/// `{(x,y) : d(x,y) ≤ ε}` for ε over the attained distances plus one
/// value below the smallest positive distance.
pub fn metric_uniformity(metrics: &[MetricTable]) -> Result<UniformityBase> {
    if metrics.is_empty() {
        return Err(Error::Precondition("need at least one metric".into()));
    }
    let ground = metrics[0].ground().clone();
    let n = ground.len();
    check_ground_size(n)?;
    let mut relations = Vec::new();
    for m in metrics {
        if m.ground() != &ground {
            return Err(Error::Precondition("metrics on different grounds".into()));
        }
        let mut dists: Vec<f64> = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .map(|(x, y)| m.get(x, y))
            .collect();
        dists.sort_by(f64::total_cmp);
        dists.dedup_by(|a, b| (*a - *b).abs() <= TOL);
        if let Some(&min_pos) = dists.iter().find(|&&v| v > TOL) {
            dists.push(min_pos / 2.0);
        }
        for eps in dists {
            let mut r = Relation::empty(n);
            for x in 0..n {
                for y in 0..n {
                    if m.get(x, y) <= eps + TOL {
                        r.insert(x, y);
                    }
                }
            }
            relations.push(r);
        }
    }
    UniformityBase::new(ground, relations)
}

/// The uniformity induced by the conformity generated by `deltas` equals
/// the uniformity generated by their induced pseudometrics.
pub fn check_sunking(deltas: &[&dyn Pseudodiversity]) -> Result<bool> {
    let c = generate_from_diversities(deltas)?;
    let from_conformity = induced_uniformity(&c)?;
    let metrics: Vec<MetricTable> = deltas
        .iter()
        .map(|&d| induced_metric(d))
        .collect::<Result<_>>()?;
    let from_metrics = metric_uniformity(&metrics)?;
    Ok(from_conformity.equivalent_to(&from_metrics))
}

/// A finite topology: the full open-set lattice as masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub ground_size: usize,
    pub opens: BTreeSet<Mask>,
}

impl Topology {
    pub fn is_discrete(&self) -> bool {
        self.opens.len() == 1 << self.ground_size
    }

    pub fn is_indiscrete(&self) -> bool {
        self.opens.len() == 2 || self.ground_size == 0
    }
}

/// The uniform topology: `O` is open iff every `x ∈ O` has some base
/// relation `U` with `N(x,U) ⊆ O`. On a finite ground this is exactly the
/// smallest topology containing all neighborhoods.
pub fn uniform_topology(u: &UniformityBase) -> Topology {
    let n = u.ground.len();
    let full = (1u32 << n) - 1;
    let opens = (0..=full)
        .filter(|&o| {
            (0..n).all(|x| {
                o >> x & 1 == 0
                    || u.relations.iter().any(|r| r.neighborhood(x) & !o == 0)
            })
        })
        .collect();
    Topology { ground_size: n, opens }
}

/// The pseudometric topology: on a finite ground, `O` is open iff it
/// contains the zero-distance class of each of its points.
pub fn metric_topology(m: &MetricTable) -> Topology {
    let n = m.ground().len();
    let full = (1u32 << n) - 1;
    let class = |x: usize| -> Mask {
        let mut c = 0u32;
        for y in 0..n {
            if m.get(x, y) <= TOL {
                c |= 1 << y;
            }
        }
        c
    };
    let opens = (0..=full)
        .filter(|&o| (0..n).all(|x| o >> x & 1 == 0 || class(x) & !o == 0))
        .collect();
    Topology { ground_size: n, opens }
}

/// Cauchy test and limit set for a filter on X, given by base sets
/// (masks), against a conformity. Since every family is downward closed,
/// `P_fin(F) ⊆ C` reduces to `F ∈ C`, and it suffices to test base sets:
/// Cauchy iff every conformity family contains some base set; `x` is a
/// limit iff every family contains some base set unioned with `{x}`.
pub fn filter_cauchy_and_limits(
    base_sets: &[Mask],
    c: &ConformityBase,
) -> Result<(bool, Vec<usize>)> {
    let n = c.base.ground.len();
    let full = (1u32 << n) - 1;
    if base_sets.is_empty() {
        return Err(Error::InvalidInput("filter base must be nonempty".into()));
    }
    if base_sets.iter().any(|&b| b == 0) {
        return Err(Error::InvalidInput("filter may not contain the empty set".into()));
    }
    if base_sets.iter().any(|&b| b & !full != 0) {
        return Err(Error::InvalidInput("base set exceeds ground".into()));
    }
    let cauchy = c
        .base
        .families
        .iter()
        .all(|fam| base_sets.iter().any(|&b| fam.contains(b)));
    let limits = (0..n)
        .filter(|&x| {
            c.base
                .families
                .iter()
                .all(|fam| base_sets.iter().any(|&b| fam.contains(b | 1 << x)))
        })
        .collect();
    Ok((cauchy, limits))
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceConformityVerdict {
    /// Per family: least 0-based N with the tail range inside the family.
    pub per_family: Vec<Option<usize>>,
    /// Some(true)/Some(false) when the caller declared the prefix reaches
    /// the sequence's eventual period; None otherwise unless refuted.
    pub cauchy: Option<bool>,
}

/// Cauchy analysis of a sequence of ground points against a conformity.
/// `eventual_period` declares that beyond the prefix the sequence repeats
/// its last `p` entries forever, which makes tail sets exact: the set of
/// points at positions ≥ N is the prefix points from N on, together with
/// the recurring period points. Without the declaration the verdict stays
/// inconclusive (windows refute nothing for downward-closed families).
pub fn sequence_cauchy_conformity(
    prefix: &[usize],
    eventual_period: Option<usize>,
    c: &ConformityBase,
) -> Result<SequenceConformityVerdict> {
    let n = c.base.ground.len();
    if prefix.is_empty() {
        return Err(Error::InvalidInput("empty sequence prefix".into()));
    }
    if prefix.iter().any(|&x| x >= n) {
        return Err(Error::InvalidInput("sequence point outside ground".into()));
    }
    let recurring: Mask = match eventual_period {
        Some(p) if p == 0 || p > prefix.len() => {
            return Err(Error::Precondition(
                "eventual period must be within the prefix".into(),
            ));
        }
        Some(p) => prefix[prefix.len() - p..]
            .iter()
            .fold(0u32, |m, &x| m | 1 << x),
        None => 0,
    };
    // tail_mask[k] = set of points appearing at positions >= k
    let mut tail_mask = vec![recurring; prefix.len() + 1];
    for k in (0..prefix.len()).rev() {
        tail_mask[k] = tail_mask[k + 1] | 1 << prefix[k];
    }
    let per_family: Vec<Option<usize>> = c
        .base
        .families
        .iter()
        .map(|fam| (0..prefix.len()).find(|&k| fam.contains(tail_mask[k])))
        .collect();
    let all_found = per_family.iter().all(Option::is_some);
    let cauchy = match eventual_period {
        // With the period declared, tail sets from the period onward are
        // the true infinite tail sets, so the answer is exact.
        Some(_) => Some(all_found),
        None => None,
    };
    Ok(SequenceConformityVerdict { per_family, cauchy })
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctorReport {
    pub uniformities_equal: bool,
    pub topologies_equal: bool,
    pub ok: bool,
}

/// Both routes around the diagram agree on this instance: the induced
/// uniformity of the generated conformity equals the metric-generated
/// uniformity, and the uniform topology equals the pseudometric topology.
pub fn functor_diagram_check(delta: &dyn Pseudodiversity) -> Result<FunctorReport> {
    let uniformities_equal = check_sunking(&[delta])?;
    let c = generate_from_diversities(&[delta])?;
    let u = induced_uniformity(&c)?;
    let t_u = uniform_topology(&u);
    let t_m = metric_topology(&induced_metric(delta)?);
    let topologies_equal = t_u == t_m;
    Ok(FunctorReport {
        uniformities_equal,
        topologies_equal,
        ok: uniformities_equal && topologies_equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::TableDiversity;
    use crate::zoo::diameter_diversity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_metric(points: &[f64]) -> MetricTable {
        let ground = GroundSet::indexed(points.len(), "x");
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        MetricTable::new(ground, dist).unwrap()
    }

    fn line_diam(points: &[f64]) -> crate::zoo::DiamDiversity {
        diameter_diversity(line_metric(points))
    }

    #[test]
    fn compose_examples() {
        let s = SetFamily::singletons(3);
        let ss = s.compose(&s).unwrap();
        // empty set intersects nothing; {x}∘{x} = {x}
        let expected: BTreeSet<Mask> = [1u32, 2, 4].into_iter().collect();
        assert_eq!(ss.members, expected);

        let p = SetFamily::powerset(3);
        let pp = p.compose(&p).unwrap();
        assert!(pp.contains(0b111), "{{a,b}} ∪ {{b,c}} reaches the full set");
    }

    #[test]
    fn compose_monotone_and_associative_on_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = rng.gen_range(2..=4usize);
            let full = (1u32 << n) - 1;
            let rand_family = |rng: &mut ChaCha8Rng| {
                let members: BTreeSet<Mask> =
                    (0..=full).filter(|_| rng.gen_bool(0.5)).collect();
                SetFamily::new(n, members).unwrap()
            };
            let d = rand_family(&mut rng);
            let dd = d.compose(&d).unwrap();
            let left = dd.compose(&d).unwrap();
            let right = d.compose(&dd).unwrap();
            assert_eq!(left, right, "composition is associative");
            // triple composition sits inside the quadruple
            let quad = dd.compose(&dd).unwrap();
            assert!(left.is_subfamily_of(&quad));
            // monotone: enlarge d
            let mut bigger = d.members.clone();
            bigger.insert(rng.gen_range(0..=full));
            let e = SetFamily::new(n, bigger).unwrap();
            let ee = e.compose(&e).unwrap();
            assert!(dd.is_subfamily_of(&ee));
        }
    }

    #[test]
    fn discrete_and_indiscrete_validate() {
        let g = GroundSet::indexed(2, "x");
        let d = discrete_conformity(g.clone());
        assert_eq!(d.base.families.len(), 1);
        let i = indiscrete_conformity(g);
        assert_eq!(i.base.families.len(), 1);
    }

    #[test]
    fn c2_violation_reported() {
        let g = GroundSet::indexed(2, "x");
        // family contains {a,b} but not {a}
        let fam = SetFamily::new(2, [0u32, 2, 3]).unwrap();
        let base = FilterBase::new(g, vec![fam]).unwrap();
        match validate_conformity(&base).unwrap() {
            Validation::Invalid(v) => assert!(v.axiom == "C1" || v.axiom == "C2"),
            Validation::Valid(_) => panic!("should be invalid"),
        }
    }

    #[test]
    fn diam_sublevel_on_three_collinear_points() {
        let delta = line_diam(&[0.0, 1.0, 2.0]);
        let fam = sublevel_family(&delta, 1.0).unwrap();
        // {∅, {0}, {1}, {2}, {0,1}, {1,2}} — not {0,2} and not {0,1,2}
        let expected: BTreeSet<Mask> = [0u32, 1, 2, 4, 0b011, 0b110].into_iter().collect();
        assert_eq!(fam.members, expected);
    }

    #[test]
    fn generated_conformity_always_validates() {
        let delta = line_diam(&[0.0, 0.5, 2.0, 2.25]);
        let c = generate_from_diversities(&[&delta]).unwrap();
        // re-validation from the raw base passes
        match validate_conformity(&c.base).unwrap() {
            Validation::Valid(_) => {}
            Validation::Invalid(v) => panic!("{v:?}"),
        }
    }

    #[test]
    fn zero_diversity_generates_indiscrete() {
        let g = GroundSet::indexed(3, "x");
        let zero = TableDiversity::from_fn(g.clone(), "zero", |_| 0.0).unwrap();
        let c = generate_from_diversities(&[&zero]).unwrap();
        let ind = indiscrete_conformity(g);
        assert!(c.base.equivalent_to(&ind.base));
    }

    #[test]
    fn scaled_generator_changes_nothing() {
        let delta = line_diam(&[0.0, 1.0, 2.0]);
        let double = TableDiversity::from_fn(delta.ground().clone(), "2diam", |a| {
            2.0 * delta.eval_unchecked(a).value().unwrap()
        })
        .unwrap();
        let c1 = generate_from_diversities(&[&delta]).unwrap();
        let c2 = generate_from_diversities(&[&delta, &double]).unwrap();
        assert!(c1.base.equivalent_to(&c2.base));
    }

    #[test]
    fn induced_uniformity_examples() {
        let g = GroundSet::indexed(3, "x");
        let d = discrete_conformity(g.clone());
        let u = induced_uniformity(&d).unwrap();
        // diagonal relation only
        assert!(u.relations.iter().all(|r| {
            (0..3).all(|x| (0..3).all(|y| r.contains(x, y) == (x == y)))
        }));

        let i = indiscrete_conformity(g);
        let ui = induced_uniformity(&i).unwrap();
        assert!(ui
            .relations
            .iter()
            .any(|r| (0..3).all(|x| (0..3).all(|y| r.contains(x, y)))));

        // diam-generated on {0,1,2}: the C^1 family induces |x-y| <= 1
        let delta = line_diam(&[0.0, 1.0, 2.0]);
        let c = generate_from_diversities(&[&delta]).unwrap();
        let uc = induced_uniformity(&c).unwrap();
        let pts: [f64; 3] = [0.0, 1.0, 2.0];
        let expected = {
            let mut r = Relation::empty(3);
            for x in 0..3 {
                for y in 0..3 {
                    if (pts[x] - pts[y]).abs() <= 1.0 {
                        r.insert(x, y);
                    }
                }
            }
            r
        };
        assert!(uc.relations.contains(&expected));
    }

    #[test]
    fn sunking_on_seeded_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4usize);
            let pts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
            let delta = line_diam(&pts);
            assert!(check_sunking(&[&delta]).unwrap());
        }
        // two generators with distinct induced metrics
        let d1 = line_diam(&[0.0, 1.0, 2.0]);
        let d2 = line_diam(&[0.0, 0.25, 3.0]);
        assert!(check_sunking(&[&d1, &d2]).unwrap());
    }

    #[test]
    fn topologies() {
        let g = GroundSet::indexed(3, "x");
        let d = induced_uniformity(&discrete_conformity(g.clone())).unwrap();
        assert!(uniform_topology(&d).is_discrete());
        let i = induced_uniformity(&indiscrete_conformity(g.clone())).unwrap();
        assert!(uniform_topology(&i).is_indiscrete());

        // pseudometric with d(a,b) = 0, d(·,c) = 1: opens cannot separate a, b
        let m = line_metric(&[0.0, 0.0, 1.0]);
        let t = metric_topology(&m);
        for &o in &t.opens {
            assert_eq!(o & 1 != 0, o & 2 != 0, "a and b inseparable in {o:#b}");
        }
        assert!(t.opens.contains(&0b100));
    }

    #[test]
    fn filter_cauchy_examples() {
        let g = GroundSet::indexed(3, "x");
        let discrete = discrete_conformity(g.clone());
        let indiscrete = indiscrete_conformity(g.clone());

        // principal filter at {x0}
        let (cauchy, limits) = filter_cauchy_and_limits(&[0b001], &discrete).unwrap();
        assert!(cauchy);
        assert_eq!(limits, vec![0]);

        // large sets under the indiscrete conformity
        let (cauchy, limits) =
            filter_cauchy_and_limits(&[0b111, 0b011], &indiscrete).unwrap();
        assert!(cauchy);
        assert_eq!(limits, vec![0, 1, 2]);

        // principal filter at {a,b} under the discrete conformity
        let (cauchy, _) = filter_cauchy_and_limits(&[0b011], &discrete).unwrap();
        assert!(!cauchy);
    }

    #[test]
    fn cauchy_filters_have_limits_on_valid_conformities() {
        // finite-scale reflection: Cauchy + valid conformity => >= 1 limit
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..25 {
            let n = rng.gen_range(2..=4usize);
            let pts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let delta = line_diam(&pts);
            let c = generate_from_diversities(&[&delta]).unwrap();
            let x = rng.gen_range(0..n);
            let (cauchy, limits) =
                filter_cauchy_and_limits(&[1 << x], &c).unwrap();
            assert!(cauchy, "principal ultrafilter at a point is Cauchy");
            assert!(!limits.is_empty());
            assert!(limits.contains(&x));
        }
    }

    #[test]
    fn sequence_cauchy_examples() {
        let g = GroundSet::indexed(3, "x");
        let discrete = discrete_conformity(g.clone());

        // eventually constant: Cauchy for every valid conformity
        let v = sequence_cauchy_conformity(&[1, 2, 0, 0, 0], Some(1), &discrete).unwrap();
        assert_eq!(v.cauchy, Some(true));

        // alternating a,b under discrete: refuted
        let v = sequence_cauchy_conformity(&[0, 1, 0, 1], Some(2), &discrete).unwrap();
        assert_eq!(v.cauchy, Some(false));

        // undeclared tail: inconclusive
        let v = sequence_cauchy_conformity(&[0, 1, 0, 1], None, &discrete).unwrap();
        assert_eq!(v.cauchy, None);

        // alternating under diam-generated: certified at every family with
        // eps >= d(a,b), refuted below it (the base resolves 0.01)
        let delta = line_diam(&[0.0, 0.01, 5.0]);
        let c = generate_from_diversities(&[&delta]).unwrap();
        let v = sequence_cauchy_conformity(&[0, 1, 0, 1], Some(2), &c).unwrap();
        assert_eq!(v.cauchy, Some(false));
        for (fam, found) in c.base.families.iter().zip(&v.per_family) {
            assert_eq!(found.is_some(), fam.contains(0b011), "family {fam:?}");
        }
    }

    #[test]
    fn functor_diagram_instances() {
        // diam on {0,1,2}
        let delta = line_diam(&[0.0, 1.0, 2.0]);
        assert!(functor_diagram_check(&delta).unwrap().ok);

        // pseudodiversity with a zero pair: both topologies equal, non-discrete
        let pseudo = line_diam(&[0.0, 0.0, 1.0]);
        let r = functor_diagram_check(&pseudo).unwrap();
        assert!(r.ok);
        let c = generate_from_diversities(&[&pseudo]).unwrap();
        let t = uniform_topology(&induced_uniformity(&c).unwrap());
        assert!(!t.is_discrete());

        // zero diversity: both sides indiscrete
        let g = GroundSet::indexed(3, "x");
        let zero = TableDiversity::from_fn(g, "zero", |_| 0.0).unwrap();
        let r = functor_diagram_check(&zero).unwrap();
        assert!(r.ok);
        let c = generate_from_diversities(&[&zero]).unwrap();
        assert!(uniform_topology(&induced_uniformity(&c).unwrap()).is_indiscrete());
    }

    #[test]
    fn finite_base_cardinalities_consistent() {
        // both bases finite; mutual domination already asserted by sunking
        let delta = line_diam(&[0.0, 0.5, 1.5, 4.0]);
        let c = generate_from_diversities(&[&delta]).unwrap();
        let u = induced_uniformity(&c).unwrap();
        assert!(!c.base.families.is_empty() && c.base.families.len() < 1 << 16);
        assert!(!u.relations.is_empty());
        assert!(u.relations.len() <= c.base.families.len());
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let delta = line_diam(&[0.0, 1.0, 2.0]);
        let c = generate_from_diversities(&[&delta]).unwrap();
        let j = c.base.to_json();
        let back = FilterBase::from_json(&j).unwrap();
        assert!(back.equivalent_to(&c.base));
        assert_eq!(serde_json::to_string(&j).unwrap(), serde_json::to_string(&back.to_json()).unwrap());
    }

    #[test]
    fn sublevel_intersection_identity() {
        let delta = line_diam(&[0.0, 0.7, 1.9]);
        for (e1, e2) in [(0.7, 1.9), (1.2, 1.9), (0.7, 0.7)] {
            let a = sublevel_family(&delta, e1).unwrap();
            let b = sublevel_family(&delta, e2).unwrap();
            let c = sublevel_family(&delta, e1.min(e2)).unwrap();
            assert_eq!(a.intersect(&b).unwrap(), c);
        }
    }
}
