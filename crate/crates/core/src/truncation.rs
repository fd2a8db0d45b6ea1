//! Weighted membership, truncation to the lowest level, the scaling family, and distinguished weights.

use crate::num::*;
use crate::poly::{fmt_mono, Mono, Poly};
use crate::weights::{enumerate_weights_with, Admissibility, Weight, WeightError};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

/// Membership answer; the witness is the first offending term in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub holds: bool,
    pub witness: Option<Mono>,
}

pub fn in_m(p: &Poly, t: &Q, w: &Weight) -> Membership {
    let witness = p.terms().find(|(m, _)| m.weighted_degree(w) < *t).map(|(m, _)| m.clone());
    Membership { holds: witness.is_none(), witness }
}

/// Every term has weighted degree strictly greater than t.
pub fn in_m_strict(p: &Poly, t: &Q, w: &Weight) -> Membership {
    let witness = p.terms().find(|(m, _)| m.weighted_degree(w) <= *t).map(|(m, _)| m.clone());
    Membership { holds: witness.is_none(), witness }
}

pub fn in_h(p: &Poly, t: &Q, w: &Weight) -> Membership {
    let witness = p.terms().find(|(m, _)| m.weighted_degree(w) != *t).map(|(m, _)| m.clone());
    Membership { holds: witness.is_none(), witness }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TruncationError {
    #[error("term {term} has weighted degree {degree} below the level {level}")]
    DivergentTruncation { term: String, degree: String, level: String },
    #[error("scale factor {tau} raised to {exponent} is irrational")]
    IrrationalScale { tau: String, exponent: String },
    #[error("scale factor {0} outside (0, 1]")]
    ScaleOutOfRange(String),
    #[error("weight has {0} entries, polynomial has {1} variables")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

#[derive(Clone, Debug, Serialize)]
pub struct DroppedTerm {
    pub term: String,
    pub weighted_degree: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationRecord {
    pub source: Poly,
    pub weight: Weight,
    #[serde(serialize_with = "ser_q")]
    pub level: Q,
    pub truncated: Poly,
    pub dropped_count: usize,
    pub dropped: Vec<DroppedTerm>,
    pub degree: u32,
}

pub fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

fn check_dims(p: &Poly, w: &Weight) -> Result<(), TruncationError> {
    if p.n() != w.len() {
        return Err(TruncationError::DimensionMismatch(w.len(), p.n()));
    }
    Ok(())
}

fn divergent(p: &Poly, t: &Q, w: &Weight) -> Result<(), TruncationError> {
    if let Some(m) = in_m(p, t, w).witness {
        return Err(TruncationError::DivergentTruncation {
            term: fmt_mono(&m),
            degree: fmt_q(&m.weighted_degree(w)),
            level: fmt_q(t),
        });
    }
    Ok(())
}

/// Keep the terms of weighted degree exactly t.
pub fn truncate(p: &Poly, t: &Q, w: &Weight) -> Result<TruncationRecord, TruncationError> {
    check_dims(p, w)?;
    divergent(p, t, w)?;
    let truncated = p.filter(|m, _| m.weighted_degree(w) == *t);
    let dropped: Vec<DroppedTerm> = p
        .terms()
        .filter(|(m, _)| m.weighted_degree(w) != *t)
        .map(|(m, c)| DroppedTerm {
            term: Poly::monomial(m.clone(), c.clone()).to_string(),
            weighted_degree: fmt_q(&m.weighted_degree(w)),
        })
        .collect();
    Ok(TruncationRecord {
        source: p.clone(),
        weight: w.clone(),
        level: t.clone(),
        degree: truncated.degree(),
        dropped_count: dropped.len(),
        dropped,
        truncated,
    })
}

/// tau^{-t} (Lambda_tau)^* p: each term scaled by tau^(w - t).
pub fn scale_family(p: &Poly, tau: &Q, t: &Q, w: &Weight) -> Result<Poly, TruncationError> {
    check_dims(p, w)?;
    if !tau.is_positive() || *tau > Q::one() {
        return Err(TruncationError::ScaleOutOfRange(fmt_q(tau)));
    }
    divergent(p, t, w)?;
    let mut out = Poly::zero(p.n());
    for (m, c) in p.terms() {
        let e = m.weighted_degree(w) - t;
        let f = rational_power(tau, &e).ok_or_else(|| TruncationError::IrrationalScale {
            tau: fmt_q(tau),
            exponent: fmt_q(&e),
        })?;
        out.add_term(m.clone(), c * gr(f));
    }
    Ok(out)
}

/// Distinguished at x0: weighted order of the translated function is at least one.
pub fn is_distinguished(w: &Weight, r: &Poly, x0: &[Gq]) -> Membership {
    let rt = r.translate(x0);
    in_m(&rt, &Q::one(), w)
}

/// Holomorphic linear coordinate changes searched by the enumeration.
#[derive(Clone, Debug)]
pub struct CoordinateSearch {
    pub permutations: bool,
    /// Extra changes as matrices: z = M w.
    pub shears: Vec<Vec<Vec<Gq>>>,
}

impl CoordinateSearch {
    /// Permutations of z2..zn and the shears z_j -> z_j + z_k among tangential coordinates.
    pub fn standard(n: usize) -> CoordinateSearch {
        let mut shears = Vec::new();
        for j in 1..n {
            for k in 1..n {
                if j != k {
                    let mut m = identity(n);
                    m[j][k] = gone();
                    shears.push(m);
                }
            }
        }
        CoordinateSearch { permutations: true, shears }
    }

    pub fn identity_only() -> CoordinateSearch {
        CoordinateSearch { permutations: false, shears: vec![] }
    }
}

pub fn identity(n: usize) -> Vec<Vec<Gq>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { gone() } else { gzero() }).collect()).collect()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct MultitypeEstimate {
    /// Prefix of length n + 1 - q.
    pub multitype: Weight,
    pub full: Weight,
    pub coordinates: String,
    /// Some entry reached the enumeration cap, so the true value may be larger.
    pub cap_reached: bool,
    pub label: &'static str,
}

/// Lexicographic maximum of distinguished weights with entries at most `cap`.
pub fn multitype_by_enumeration(
    r: &Poly,
    x0: &[Gq],
    q: usize,
    cap: &Q,
    coords: &CoordinateSearch,
    budget: u64,
) -> Result<MultitypeEstimate, TruncationError> {
    let n = r.n();
    let weights = enumerate_weights_with(n, cap, Admissibility::Nonnegative, budget)?;
    let rt = r.translate(x0);
    let mut changes: Vec<(String, Vec<Vec<Gq>>)> = vec![("identity".into(), identity(n))];
    if coords.permutations && n > 2 {
        let tail: Vec<usize> = (1..n).collect();
        for p in permutations(&tail).into_iter().skip(1) {
            let mut m = vec![vec![gzero(); n]; n];
            m[0][0] = gone();
            for (i, &j) in p.iter().enumerate() {
                m[i + 1][j] = gone();
            }
            let name = format!("permutation z1,{}", p.iter().map(|j| format!("z{}", j + 1)).collect::<Vec<_>>().join(","));
            changes.push((name, m));
        }
    }
    for (i, m) in coords.shears.iter().enumerate() {
        changes.push((format!("shear #{}", i), m.clone()));
    }
    let mut best: Option<(Weight, String)> = None;
    for (name, m) in &changes {
        let rc = rt.linear_change(m);
        // weights are sorted ascending; scan from the top
        if let Some(w) = weights.iter().rev().find(|w| in_m(&rc, &Q::one(), w).holds) {
            let better = match &best {
                None => true,
                Some((b, _)) => w.entries() > b.entries(),
            };
            if better {
                best = Some((w.clone(), name.clone()));
            }
        }
    }
    let (full, coordinates) = best.unwrap_or_else(|| (Weight::ints(&vec![1; n]), "identity".into()));
    let k = n + 1 - q;
    let cap_reached = full.entries()[..k].iter().any(|e| e.finite() == Some(cap));
    Ok(MultitypeEstimate {
        multitype: full.prefix(k),
        full,
        coordinates,
        cap_reached,
        label: "multitype lower bound certificate; exact for decoupled models",
    })
}

pub fn abs_coeff_sum(p: &Poly) -> Q {
    p.terms().fold(Q::zero(), |acc, (_, c)| acc + abs_bound(c).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;

    fn p(s: &str) -> Poly {
        parse_poly(s, 2).unwrap()
    }

    fn w14() -> Weight {
        Weight::ints(&[1, 4])
    }

    #[test]
    fn membership_examples() {
        assert!(in_m(&p("Re(z1) + abs2(z2)^2"), &qi(1), &w14()).holds);
        let m = in_m(&p("abs2(z2)"), &qi(1), &w14());
        assert!(!m.holds);
        assert_eq!(fmt_mono(&m.witness.unwrap()), "z2 * zb2");
        assert!(in_m(&Poly::zero(2), &qi(7), &w14()).holds);
        assert!(in_h(&p("Re(z1) + abs2(z2)^2"), &qi(1), &w14()).holds);
        let h = in_h(&p("Re(z1) + abs2(z2)^3"), &qi(1), &w14());
        assert_eq!(fmt_mono(&h.witness.unwrap()), "z2^3 * zb2^3");
        assert!(in_h(&Poly::one(2), &qi(0), &w14()).holds);
    }

    #[test]
    fn truncate_examples() {
        let rec = truncate(&p("Re(z1) + abs2(z2)^2 + abs2(z2)^3"), &qi(1), &w14()).unwrap();
        assert_eq!(rec.truncated, p("Re(z1) + abs2(z2)^2"));
        assert_eq!(rec.dropped_count, 1);
        let again = truncate(&rec.truncated, &qi(1), &w14()).unwrap();
        assert_eq!(again.truncated, rec.truncated);
        assert_eq!(again.dropped_count, 0);
        assert!(matches!(
            truncate(&p("abs2(z2)"), &qi(1), &w14()),
            Err(TruncationError::DivergentTruncation { .. })
        ));
    }

    #[test]
    fn scale_examples() {
        let r = p("Re(z1) + abs2(z2)^3");
        let s = scale_family(&r, &q(1, 16), &qi(1), &w14()).unwrap();
        assert_eq!(s, p("Re(z1) + 1/4*abs2(z2)^3"));
        // oracle: tau^{-1} r(tau z1, tau^{1/4} z2) with tau^{1/4} = 1/2
        let n = 2;
        let zs = vec![Poly::z(n, 0).scale_q(&q(1, 16)), Poly::z(n, 1).scale_q(&q(1, 2))];
        let zbs = vec![Poly::zb(n, 0).scale_q(&q(1, 16)), Poly::zb(n, 1).scale_q(&q(1, 2))];
        assert_eq!(r.substitute(&zs, &zbs, n).scale_q(&qi(16)), s);
        assert_eq!(scale_family(&r, &qi(1), &qi(1), &w14()).unwrap(), r);
        assert!(matches!(
            scale_family(&r, &q(1, 2), &qi(1), &w14()),
            Err(TruncationError::IrrationalScale { .. })
        ));
    }

    #[test]
    fn distinguished_examples() {
        let r = p("Re(z1) + abs2(z2)^2");
        let o = vec![gzero(), gzero()];
        assert!(is_distinguished(&w14(), &r, &o).holds);
        let d = is_distinguished(&Weight::ints(&[1, 6]), &r, &o);
        assert!(!d.holds);
        assert_eq!(d.witness.unwrap(), Mono::new(vec![0, 2], vec![0, 2]));
        assert!(is_distinguished(&Weight::ints(&[1, 9]), &p("Re(z1)"), &o).holds);
    }

    #[test]
    fn multitype_examples() {
        let o2 = vec![gzero(); 2];
        let est = multitype_by_enumeration(&p("Re(z1) + abs2(z2)^2"), &o2, 1, &qi(5), &CoordinateSearch::standard(2), 1 << 22).unwrap();
        assert_eq!(est.multitype, w14());
        assert!(!est.cap_reached);
        let est = multitype_by_enumeration(&p("Re(z1) + abs2(z2)"), &o2, 1, &qi(5), &CoordinateSearch::standard(2), 1 << 22).unwrap();
        assert_eq!(est.multitype, Weight::ints(&[1, 2]));
        let r3 = parse_poly("Re(z1) + abs2(z2)^2 + abs2(z3)^3", 3).unwrap();
        let est = multitype_by_enumeration(&r3, &[gzero(), gzero(), gzero()], 1, &qi(6), &CoordinateSearch::standard(3), 1 << 24).unwrap();
        assert_eq!(est.multitype, Weight::ints(&[1, 4, 6]));
    }
}
