//! Weights: nondecreasing tuples of extended rationals with per-prefix integer certificates.

use crate::num::*;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Weight(Vec<Ext>);

impl Weight {
    pub fn new(entries: Vec<Ext>) -> Weight {
        Weight(entries)
    }

    pub fn finite(entries: &[Q]) -> Weight {
        Weight(entries.iter().cloned().map(Ext::Fin).collect())
    }

    pub fn ints(entries: &[i64]) -> Weight {
        Weight(entries.iter().map(|&x| Ext::int(x)).collect())
    }

    pub fn entries(&self) -> &[Ext] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<&Ext> {
        self.0.last()
    }

    pub fn prefix(&self, k: usize) -> Weight {
        Weight(self.0[..k.min(self.0.len())].to_vec())
    }

    /// Parse `(1, 4, inf)`, `1,4` or `[1, 9/2]`.
    pub fn parse(s: &str) -> Option<Weight> {
        let t = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
        t.split(',').map(Ext::parse).collect::<Option<Vec<_>>>().map(Weight)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Which sign condition the certificate integers must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Admissibility {
    /// a_j >= 0 for j < k and a_k > 0.
    #[default]
    Nonnegative,
    /// a_j > 0 for every j <= k.
    StrictlyPositive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    /// `vectors[k]` solves sum_{j<=k} a_j / lambda_j = 1; `None` for infinite entries.
    pub vectors: Vec<Option<Vec<u64>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Rejection {
    BelowOne,
    NotMonotone,
    NoCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum WeightVerdict {
    Admissible(Certificate),
    /// First failing index (zero-based) and reason.
    Rejected { index: usize, reason: Rejection },
}

impl WeightVerdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, WeightVerdict::Admissible(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightError {
    #[error("certificate search at index {index} exceeded {budget} nodes")]
    CertificateSearchExceeded { index: usize, budget: u64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("enumeration space exceeds the budget of {0} nodes")]
    CapTooLarge(u64),
    #[error("enumeration supports 2 <= n <= 4, got {0}")]
    UnsupportedDimension(usize),
}

pub const DEFAULT_CERT_BUDGET: u64 = 1_000_000;
pub const DEFAULT_ENUM_BUDGET: u64 = 5_000_000;

fn floor_u64(x: &Q) -> u64 {
    floor_q(x).to_u64().unwrap_or(u64::MAX)
}

/// Lexicographically smallest a_0..a_{k-1} with sum a_j / lam_j = target.
fn prefix_solution(
    lams: &[Q],
    target: &Q,
    min_each: u64,
    nodes: &mut u64,
    budget: u64,
) -> Result<Option<Vec<u64>>, u64> {
    fn go(
        lams: &[Q],
        j: usize,
        rem: &Q,
        min_each: u64,
        cur: &mut Vec<u64>,
        nodes: &mut u64,
        budget: u64,
    ) -> Result<bool, u64> {
        *nodes += 1;
        if *nodes > budget {
            return Err(*nodes);
        }
        if j == lams.len() {
            return Ok(rem.is_zero());
        }
        if rem.is_negative() {
            return Ok(false);
        }
        let hi = floor_u64(&(rem * &lams[j]));
        let mut a = min_each;
        while a <= hi {
            let next = rem - qi(a as i64) / &lams[j];
            cur.push(a);
            if go(lams, j + 1, &next, min_each, cur, nodes, budget)? {
                return Ok(true);
            }
            cur.pop();
            a += 1;
        }
        Ok(false)
    }
    let mut cur = Vec::new();
    if go(lams, 0, target, min_each, &mut cur, nodes, budget)? {
        Ok(Some(cur))
    } else {
        Ok(None)
    }
}

/// Certificate for index k: smallest a_k first, then lexicographically smallest prefix.
fn certificate_at(lams: &[Q], k: usize, adm: Admissibility, budget: u64) -> Result<Option<Vec<u64>>, WeightError> {
    let min_each = if adm == Admissibility::StrictlyPositive { 1 } else { 0 };
    let mut nodes = 0u64;
    let top = floor_u64(&lams[k]);
    for ak in 1..=top {
        let rem = Q::one() - qi(ak as i64) / &lams[k];
        if rem.is_negative() {
            break;
        }
        match prefix_solution(&lams[..k], &rem, min_each, &mut nodes, budget) {
            Err(_) => return Err(WeightError::CertificateSearchExceeded { index: k, budget }),
            Ok(Some(mut v)) => {
                v.push(ak);
                return Ok(Some(v));
            }
            Ok(None) => {}
        }
    }
    Ok(None)
}

pub fn is_weight(w: &Weight) -> Result<WeightVerdict, WeightError> {
    is_weight_with(w, Admissibility::Nonnegative, DEFAULT_CERT_BUDGET)
}

pub fn is_weight_with(w: &Weight, adm: Admissibility, budget: u64) -> Result<WeightVerdict, WeightError> {
    let e = w.entries();
    for (i, x) in e.iter().enumerate() {
        if let Ext::Fin(v) = x {
            if *v < Q::one() {
                return Ok(WeightVerdict::Rejected { index: i, reason: Rejection::BelowOne });
            }
        }
        if i > 0 && e[i - 1] > *x {
            return Ok(WeightVerdict::Rejected { index: i, reason: Rejection::NotMonotone });
        }
    }
    let finite: Vec<Q> = e.iter().take_while(|x| !x.is_inf()).map(|x| x.finite().unwrap().clone()).collect();
    let mut vectors = Vec::with_capacity(e.len());
    for k in 0..e.len() {
        if k >= finite.len() {
            vectors.push(None);
            continue;
        }
        match certificate_at(&finite, k, adm, budget)? {
            Some(v) => vectors.push(Some(v)),
            None => return Ok(WeightVerdict::Rejected { index: k, reason: Rejection::NoCertificate }),
        }
    }
    Ok(WeightVerdict::Admissible(Certificate { vectors }))
}

pub fn lex_compare(a: &Weight, b: &Weight) -> Result<Ordering, WeightError> {
    if a.len() != b.len() {
        return Err(WeightError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(a.entries().cmp(b.entries()))
}

/// All values 1 - sum_j a_j/lam_j that stay positive, for 0 <= a_j <= lam_j.
fn remainders(prefix: &[Q], adm: Admissibility, nodes: &mut u64, budget: u64) -> Result<BTreeSet<Q>, WeightError> {
    let min_each = if adm == Admissibility::StrictlyPositive { 1 } else { 0 };
    let mut cur: BTreeSet<Q> = [Q::one()].into_iter().collect();
    for lam in prefix {
        let mut next = BTreeSet::new();
        for r in &cur {
            let hi = floor_u64(&(r * lam));
            for a in min_each..=hi {
                *nodes += 1;
                if *nodes > budget {
                    return Err(WeightError::CapTooLarge(budget));
                }
                let v = r - qi(a as i64) / lam;
                if v.is_positive() {
                    next.insert(v);
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Every weight of length n with all entries at most t, in lexicographic order.
pub fn enumerate_weights_below(n: usize, t: &Q) -> Result<Vec<Weight>, WeightError> {
    enumerate_weights_with(n, t, Admissibility::Nonnegative, DEFAULT_ENUM_BUDGET)
}

pub fn enumerate_weights_with(n: usize, t: &Q, adm: Admissibility, budget: u64) -> Result<Vec<Weight>, WeightError> {
    if !(2..=4).contains(&n) {
        return Err(WeightError::UnsupportedDimension(n));
    }
    let mut nodes = 0u64;
    let mut prefixes: Vec<Vec<Q>> = vec![vec![]];
    for _ in 0..n {
        let mut next: BTreeSet<Vec<Q>> = BTreeSet::new();
        for p in &prefixes {
            let lo = p.last().cloned().unwrap_or_else(Q::one);
            for r in remainders(p, adm, &mut nodes, budget)? {
                // lam = a / r with lo <= lam <= t
                let a_lo = (&lo * &r).ceil().to_integer();
                let a_hi = (t * &r).floor().to_integer();
                let mut a = a_lo.max(BigInt::one());
                while a <= a_hi {
                    nodes += 1;
                    if nodes > budget {
                        return Err(WeightError::CapTooLarge(budget));
                    }
                    let lam = Q::from_integer(a.clone()) / &r;
                    let mut v = p.clone();
                    v.push(lam);
                    next.insert(v);
                    a += 1;
                }
            }
        }
        prefixes = next.into_iter().collect();
    }
    Ok(prefixes.iter().map(|v| Weight::finite(v)).collect())
}

/// Pad a prefix to length n by repeating its last entry.
pub fn extend_weight(prefix: &Weight, n: usize) -> Weight {
    let mut e = prefix.entries().to_vec();
    let last = e.last().cloned().unwrap_or(Ext::int(1));
    while e.len() < n {
        e.push(last.clone());
    }
    Weight(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cert(w: &[i64]) -> Vec<Option<Vec<u64>>> {
        match is_weight(&Weight::ints(w)).unwrap() {
            WeightVerdict::Admissible(c) => c.vectors,
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn certificates() {
        assert_eq!(cert(&[1, 2]), vec![Some(vec![1]), Some(vec![0, 2])]);
        assert_eq!(cert(&[1, 2, 4])[2], Some(vec![0, 1, 2]));
        assert_eq!(
            is_weight(&Weight::ints(&[2, 1])).unwrap(),
            WeightVerdict::Rejected { index: 1, reason: Rejection::NotMonotone }
        );
        let w = Weight::new(vec![Ext::int(1), Ext::int(3), Ext::Fin(q(9, 2))]);
        assert!(is_weight(&w).unwrap().is_admissible());
        let irr = Weight::new(vec![Ext::int(1), Ext::Fin(q(3, 2))]);
        assert_eq!(
            is_weight(&irr).unwrap(),
            WeightVerdict::Rejected { index: 1, reason: Rejection::NoCertificate }
        );
    }

    #[test]
    fn strict_variant_rejects_lowest_multitype() {
        let v = is_weight_with(&Weight::ints(&[1, 2]), Admissibility::StrictlyPositive, 1000).unwrap();
        assert_eq!(v, WeightVerdict::Rejected { index: 1, reason: Rejection::NoCertificate });
    }

    #[test]
    fn search_budget_is_reported() {
        let w = Weight::ints(&[1, 40, 40, 41]);
        assert!(matches!(
            is_weight_with(&w, Admissibility::Nonnegative, 5),
            Err(WeightError::CertificateSearchExceeded { .. })
        ));
    }

    #[test]
    fn infinite_entries() {
        let w = Weight::new(vec![Ext::int(1), Ext::int(2), Ext::Inf]);
        assert_eq!(cert_of(&w)[2], None);
        fn cert_of(w: &Weight) -> Vec<Option<Vec<u64>>> {
            match is_weight(w).unwrap() {
                WeightVerdict::Admissible(c) => c.vectors,
                o => panic!("{:?}", o),
            }
        }
    }

    #[test]
    fn lex_examples() {
        let a = Weight::ints(&[1, 2, 4]);
        let b = Weight::ints(&[1, 2, 6]);
        assert_eq!(lex_compare(&a, &b).unwrap(), Ordering::Less);
        let c = Weight::new(vec![Ext::int(1), Ext::int(2), Ext::Inf]);
        assert_eq!(lex_compare(&c, &Weight::ints(&[1, 2, 100])).unwrap(), Ordering::Greater);
        assert!(lex_compare(&a, &Weight::ints(&[1, 2])).is_err());
    }

    #[test]
    fn enumeration_small() {
        assert_eq!(enumerate_weights_below(2, &qi(1)).unwrap(), vec![Weight::ints(&[1, 1])]);
        let l = enumerate_weights_below(2, &qi(4)).unwrap();
        let want: Vec<Weight> = [[1, 1], [1, 2], [1, 3], [1, 4], [2, 2], [2, 3], [2, 4], [3, 3], [3, 4], [4, 4]]
            .iter()
            .map(|w| Weight::ints(w))
            .collect();
        assert_eq!(l, want);
        let l3 = enumerate_weights_below(3, &q(9, 2)).unwrap();
        assert!(l3.contains(&Weight::new(vec![Ext::int(1), Ext::int(3), Ext::Fin(q(9, 2))])));
        assert!(enumerate_weights_below(5, &qi(2)).is_err());
        assert!(matches!(
            enumerate_weights_with(4, &qi(12), Admissibility::Nonnegative, 100),
            Err(WeightError::CapTooLarge(_))
        ));
    }

    #[test]
    fn extension() {
        assert_eq!(extend_weight(&Weight::ints(&[1, 4]), 3), Weight::ints(&[1, 4, 4]));
        assert_eq!(extend_weight(&Weight::ints(&[1, 2, 6]), 3), Weight::ints(&[1, 2, 6]));
        assert_eq!(extend_weight(&Weight::ints(&[1]), 2), Weight::ints(&[1, 1]));
    }

    #[test]
    fn parse_and_print() {
        let w = Weight::parse("(1, 9/2, inf)").unwrap();
        assert_eq!(w.to_string(), "(1,9/2,inf)");
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"["1","9/2","inf"]"#);
    }
}
