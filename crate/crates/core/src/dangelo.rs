//! Curve-contact probing for the D'Angelo type.

use crate::num::*;
use crate::poly::{CurveError, CurveProbe, Mono, Poly};
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// ord_0(r o gamma) / ord_0(gamma); `Inf` when r o gamma vanishes identically.
pub fn contact_order(r: &Poly, gamma: &CurveProbe) -> Result<Ext, CurveError> {
    let og = gamma.order()?;
    let comp = r.compose_curve(gamma);
    Ok(match comp.order() {
        None => Ext::Inf,
        Some(o) => Ext::Fin(q(o as i64, og as i64)),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    ExactDecoupled,
    LowerBoundOnly,
}

#[derive(Clone, Debug, Serialize)]
pub struct TypeEstimate {
    pub lower_bound: Ext,
    pub exactness: Exactness,
    /// Best probe, centred at the base point.
    pub witness: Option<Vec<String>>,
    pub probe_bound: Ext,
    pub probes: usize,
    pub multitype_entry: Option<Ext>,
    pub consistent: bool,
}

#[derive(Clone, Debug)]
pub struct ProbeCaps {
    pub max_exponent: u32,
    pub coefficients: Vec<Gq>,
}

impl Default for ProbeCaps {
    fn default() -> Self {
        ProbeCaps { max_exponent: 6, coefficients: vec![gone(), -gone()] }
    }
}

/// Recognise a Re z1 + sum c_j |z_j|^(2 m_j) with a > 0, c_j > 0 and return 2 max m_j.
pub fn decoupled_type(r: &Poly) -> Option<Ext> {
    let n = r.n();
    if n < 2 {
        return None;
    }
    let z1 = Mono::new(unit(n, 0), vec![0; n]);
    let a = r.coeff(&z1);
    if gq_is_zero(&a) || !is_real(&a) || r.coeff(&z1.conj()) != a {
        return None;
    }
    let mut seen = vec![None::<u32>; n];
    for (m, c) in r.terms() {
        if *m == z1 || *m == z1.conj() {
            continue;
        }
        let support: Vec<usize> = (0..n).filter(|&j| m.a[j] + m.b[j] > 0).collect();
        if support.len() != 1 || support[0] == 0 {
            return None;
        }
        let j = support[0];
        if m.a[j] != m.b[j] || !is_real(c) || !c.re.is_positive() || seen[j].is_some() {
            return None;
        }
        seen[j] = Some(m.a[j]);
    }
    if seen[1..].iter().any(|s| s.is_none()) {
        return Some(Ext::Inf);
    }
    let top = seen[1..].iter().map(|s| s.unwrap()).max().unwrap();
    Some(Ext::int(2 * top as i64))
}

fn unit(n: usize, j: usize) -> Vec<u32> {
    let mut v = vec![0; n];
    v[j] = 1;
    v
}

/// ord of r(c_1 s^e_1, ..., c_n s^e_n) for r centred at the origin.
fn monomial_probe_order(r: &Poly, coeffs: &[Gq], exps: &[u32]) -> Option<u32> {
    let mut acc: BTreeMap<(u32, u32), Gq> = BTreeMap::new();
    'terms: for (m, c) in r.terms() {
        let mut v = c.clone();
        let (mut ds, mut dsb) = (0u32, 0u32);
        for j in 0..r.n() {
            if m.a[j] + m.b[j] == 0 {
                continue;
            }
            if gq_is_zero(&coeffs[j]) {
                continue 'terms;
            }
            for _ in 0..m.a[j] {
                v = v * coeffs[j].clone();
            }
            for _ in 0..m.b[j] {
                v = v * coeffs[j].conj();
            }
            ds += m.a[j] * exps[j];
            dsb += m.b[j] * exps[j];
        }
        let e = acc.entry((ds, dsb)).or_insert_with(gzero);
        *e = e.clone() + v;
    }
    acc.into_iter().filter(|(_, v)| !gq_is_zero(v)).map(|((a, b), _)| a + b).min()
}

/// Sup of contact orders over monomial curves through x0, plus the multitype bound when given.
pub fn type_lower_bound(r: &Poly, x0: &[Gq], q: usize, caps: &ProbeCaps, multitype_entry: Option<Ext>) -> TypeEstimate {
    let n = r.n();
    let rt = r.translate(x0);
    let exact = if x0.iter().all(gq_is_zero) { decoupled_type(&rt) } else { None };
    let mut best = Ext::Fin(Q::zero());
    let mut witness = None;
    let mut probes = 0usize;
    if q == 1 {
        let mut choices: Vec<(Gq, u32)> = vec![(gzero(), 0)];
        for c in &caps.coefficients {
            for e in 1..=caps.max_exponent {
                choices.push((c.clone(), e));
            }
        }
        let k = choices.len();
        let mut idx = vec![0usize; n];
        'outer: loop {
            // advance odometer
            let mut d = 0;
            loop {
                if d == n {
                    break 'outer;
                }
                idx[d] += 1;
                if idx[d] < k {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            let coeffs: Vec<Gq> = idx.iter().map(|&i| choices[i].0.clone()).collect();
            let exps: Vec<u32> = idx.iter().map(|&i| choices[i].1).collect();
            let og = idx.iter().filter(|&&i| i > 0).map(|&i| choices[i].1).min().unwrap();
            probes += 1;
            let v = match monomial_probe_order(&rt, &coeffs, &exps) {
                None => Ext::Inf,
                Some(o) => Ext::Fin(crate::num::q(o as i64, og as i64)),
            };
            if v > best {
                best = v;
                witness = Some((0..n).map(|j| probe_component(&coeffs[j], exps[j])).collect());
                if best.is_inf() {
                    break;
                }
            }
        }
    }
    let probe_bound = best.clone();
    let mut lower = best;
    if let Some(m) = &multitype_entry {
        if *m > lower {
            lower = m.clone();
        }
    }
    let (exactness, lower) = match exact {
        Some(v) if q == 1 => (Exactness::ExactDecoupled, v),
        _ => (Exactness::LowerBoundOnly, lower),
    };
    let consistent = match (&exactness, &multitype_entry) {
        (Exactness::ExactDecoupled, Some(m)) => *m <= lower && probe_bound <= lower,
        _ => true,
    };
    TypeEstimate { lower_bound: lower, exactness, witness, probe_bound, probes, multitype_entry, consistent }
}

fn probe_component(c: &Gq, e: u32) -> String {
    if gq_is_zero(c) {
        return "0".into();
    }
    let s = match e {
        1 => "s".to_string(),
        _ => format!("s^{}", e),
    };
    if *c == gone() {
        s
    } else if *c == -gone() {
        format!("-{}", s)
    } else {
        format!("{} * {}", fmt_gq(c), s)
    }
}
