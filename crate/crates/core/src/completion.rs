//! Completion of a diversity space by Cauchy sequences.
//!
//! Points of the completion are Cauchy sequences; two are identified when
//! the pair value `δ({x_n, y_n})` tends to zero. The extended diversity
//! evaluates `δ` on tails: for a finite set of completion points, take all
//! terms past a cutoff supplied by the moduli and read off the limit. We
//! return a rigorous interval of requested width rather than a float
//! pretending to be exact.

use std::sync::Arc;

use crate::analysis::{Point, PointDiversity};
use crate::ground::{DiversityValue, Error, Result};

/// A Cauchy sequence given by a term rule and a chain-bound modulus:
/// `modulus(ε)` returns `N` such that for every finite subset `S` of
/// `{x_N, x_{N+1}, ...}` the telescoped pair sum over consecutive
/// elements of `S` is `< ε`; by the triangle-like axiom this bounds
/// `δ(S) < ε` for the diversities in scope.
#[derive(Clone)]
pub struct Representative {
    pub term: Arc<dyn Fn(u64) -> Point + Send + Sync>,
    pub modulus: Arc<dyn Fn(f64) -> u64 + Send + Sync>,
}

impl Representative {
    pub fn constant(p: Point) -> Self {
        Representative {
            term: Arc::new(move |_| p),
            modulus: Arc::new(|_| 1),
        }
    }
}

/// A labelled point of the completion.
#[derive(Clone)]
pub struct CompletionPoint {
    pub label: String,
    pub rep: Representative,
}

/// The canonical embedding: `x` maps to the constant sequence at `x`.
pub fn embed(label: &str, p: Point) -> CompletionPoint {
    CompletionPoint {
        label: label.to_string(),
        rep: Representative::constant(p),
    }
}

/// Equivalence of representatives: `δ({x_n, y_n}) -> 0`. Decided to
/// tolerance `tol` by sampling pairs past both moduli at `tol/2`; each
/// point then sits within `tol/2` of its tail, so a small pair value at
/// the cutoff certifies smallness everywhere past it.
pub fn equivalent(
    p: &CompletionPoint,
    q: &CompletionPoint,
    delta: PointDiversity,
    tol: f64,
) -> Result<bool> {
    if tol <= 0.0 {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let n = (p.rep.modulus)(tol / 2.0).max((q.rep.modulus)(tol / 2.0));
    // Sample a few indices past the cutoff; any one exceeding tol refutes.
    for k in 0..4u64 {
        let i = n + k * (n.max(1));
        let v = delta.eval(&[(p.rep.term)(i), (q.rep.term)(i)]);
        if v >= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Extended diversity on completion points: an interval of width `<= eps`
/// containing `lim δ({tails})`. With the chain-bound moduli, replacing
/// each sequence by its term at the common cutoff moves the value by at
/// most `ε/2` in total.
pub fn delta_hat(
    points: &[CompletionPoint],
    delta: PointDiversity,
    eps: f64,
) -> Result<DiversityValue> {
    if eps <= 0.0 {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let k = points.len();
    if k <= 1 {
        // Singletons and the empty set evaluate to 0 exactly.
        return Ok(DiversityValue::exact(0.0));
    }
    let per_point = eps / (2.0 * k as f64);
    let m = points
        .iter()
        .map(|p| (p.rep.modulus)(per_point))
        .max()
        .unwrap();
    let pts: Vec<Point> = points.iter().map(|p| (p.rep.term)(m)).collect();
    let v = delta.eval(&pts);
    DiversityValue::interval((v - eps / 2.0).max(0.0), v + eps / 2.0)
}

/// Truncation of a completion point: the embedded point `x_n` for the
/// cutoff `n = modulus(eps)`. Used to exhibit density of the embedded
/// copy: `δ̂({p, truncate(p, ε)}) < ε`.
pub fn truncated_constant(p: &CompletionPoint, eps: f64) -> CompletionPoint {
    let n = (p.rep.modulus)(eps);
    embed(&format!("{}@{}", p.label, n), (p.rep.term)(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::harmonic_sequence;
    use crate::analysis::SequenceRep;
    use crate::ground::TOL;

    fn harmonic_point(label: &str) -> CompletionPoint {
        match harmonic_sequence() {
            SequenceRep::ModulusBacked { term, modulus, .. } => CompletionPoint {
                label: label.into(),
                rep: Representative { term, modulus },
            },
            _ => unreachable!(),
        }
    }

    /// `x_n = 1/(n+1)`, same limit as 1/n.
    fn shifted_harmonic_point() -> CompletionPoint {
        CompletionPoint {
            label: "harmonic-shift".into(),
            rep: Representative {
                term: Arc::new(|i| [1.0 / (i + 1) as f64, 0.0, 0.0]),
                modulus: Arc::new(|eps| (1.0 / eps).ceil() as u64 + 1),
            },
        }
    }

    #[test]
    fn embedding_is_isometric_within_interval_width() {
        let a = [0.2, 0.0, 0.0];
        let b = [0.9, 0.4, 0.0];
        let c = [0.1, 0.8, 0.3];
        let pts = [embed("a", a), embed("b", b), embed("c", c)];
        for delta in [PointDiversity::Diameter, PointDiversity::steiner_lb()] {
            let ground_value = delta.eval(&[a, b, c]);
            let v = delta_hat(&pts, delta, 1e-7).unwrap();
            assert!(v.lb <= ground_value + TOL && ground_value <= v.ub + TOL);
            assert!(v.ub - v.lb <= 1e-7 + TOL);
        }
    }

    #[test]
    fn singleton_and_empty_are_exactly_zero() {
        let p = embed("a", [3.0, 0.0, 0.0]);
        let v = delta_hat(std::slice::from_ref(&p), PointDiversity::Diameter, 1e-3).unwrap();
        assert!(v.is_exact() && v.value().unwrap() == 0.0);
        let e = delta_hat(&[], PointDiversity::Diameter, 1e-3).unwrap();
        assert!(e.is_exact() && e.value().unwrap() == 0.0);
    }

    #[test]
    fn equivalent_representatives_identified() {
        let p = harmonic_point("harmonic");
        let q = shifted_harmonic_point();
        assert!(equivalent(&p, &q, PointDiversity::Diameter, 1e-6).unwrap());
        // Both equal the embedded limit point 0.
        let zero = embed("zero", [0.0, 0.0, 0.0]);
        assert!(equivalent(&p, &zero, PointDiversity::Diameter, 1e-6).unwrap());
    }

    #[test]
    fn distinct_limits_not_identified() {
        let p = harmonic_point("harmonic");
        let one = embed("one", [1.0, 0.0, 0.0]);
        assert!(!equivalent(&p, &one, PointDiversity::Diameter, 1e-6).unwrap());
    }

    #[test]
    fn limit_point_value_matches_hand_computation() {
        // {harmonic, embed(1)} has limit pair value |1 - 0| = 1.
        let p = harmonic_point("harmonic");
        let one = embed("one", [1.0, 0.0, 0.0]);
        let v = delta_hat(&[p, one], PointDiversity::Diameter, 1e-6).unwrap();
        assert!((v.center() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn embedded_copy_is_dense() {
        let p = harmonic_point("harmonic");
        for eps in [1e-2, 1e-4, 1e-6] {
            let t = truncated_constant(&p, eps);
            let v = delta_hat(&[p.clone(), t], PointDiversity::Diameter, eps).unwrap();
            // pair value < eps up to the interval slack
            assert!(v.lb <= eps + TOL, "eps={eps} got lb={}", v.lb);
        }
    }

    #[test]
    fn interval_width_shrinks_with_eps() {
        let p = harmonic_point("harmonic");
        let q = shifted_harmonic_point();
        let mut prev_width = f64::INFINITY;
        for eps in [1e-1, 1e-3, 1e-5] {
            let v = delta_hat(&[p.clone(), q.clone()], PointDiversity::Diameter, eps).unwrap();
            let width = v.ub - v.lb;
            assert!(width <= eps + TOL);
            assert!(width <= prev_width);
            prev_width = width;
        }
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let p = embed("a", [0.0; 3]);
        assert!(delta_hat(&[p.clone()], PointDiversity::Diameter, 0.0).is_err());
        assert!(equivalent(&p, &p, PointDiversity::Diameter, -1.0).is_err());
    }
}
