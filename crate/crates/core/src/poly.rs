//! Bigraded polynomials in z_1..z_n and their conjugates over the Gaussian rationals.

use crate::num::*;
use crate::weights::Weight;
use num_complex::Complex;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent pair: the monomial z^a zbar^b.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mono {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

impl Mono {
    pub fn one(n: usize) -> Mono {
        Mono { a: vec![0; n], b: vec![0; n] }
    }

    pub fn new(a: Vec<u32>, b: Vec<u32>) -> Mono {
        assert_eq!(a.len(), b.len());
        Mono { a, b }
    }

    pub fn degree(&self) -> u32 {
        self.a.iter().sum::<u32>() + self.b.iter().sum::<u32>()
    }

    pub fn conj(&self) -> Mono {
        Mono { a: self.b.clone(), b: self.a.clone() }
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        Mono {
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
            b: self.b.iter().zip(&o.b).map(|(x, y)| x + y).collect(),
        }
    }

    /// Weighted degree; entries of weight `inf` contribute nothing.
    pub fn weighted_degree(&self, w: &Weight) -> Q {
        let mut s = Q::zero();
        for (i, lam) in w.entries().iter().enumerate() {
            if let Ext::Fin(l) = lam {
                let e = self.a[i] + self.b[i];
                if e > 0 {
                    s += qi(e as i64) / l;
                }
            }
        }
        s
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded: lower total degree first; within a degree, larger (a, b) first.
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Mono, Gq>,
}

impl Poly {
    pub fn zero(n: usize) -> Poly {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Gq) -> Poly {
        let mut p = Poly::zero(n);
        p.add_term(Mono::one(n), c);
        p
    }

    pub fn one(n: usize) -> Poly {
        Poly::constant(n, gone())
    }

    /// The coordinate z_j (zero-based j).
    pub fn z(n: usize, j: usize) -> Poly {
        let mut m = Mono::one(n);
        m.a[j] = 1;
        Poly::monomial(m, gone())
    }

    /// The conjugate coordinate zbar_j (zero-based j).
    pub fn zb(n: usize, j: usize) -> Poly {
        let mut m = Mono::one(n);
        m.b[j] = 1;
        Poly::monomial(m, gone())
    }

    pub fn monomial(m: Mono, c: Gq) -> Poly {
        let n = m.a.len();
        let mut p = Poly::zero(n);
        p.add_term(m, c);
        p
    }

    pub fn from_terms(n: usize, it: impl IntoIterator<Item = (Mono, Gq)>) -> Poly {
        let mut p = Poly::zero(n);
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Gq)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Mono) -> Gq {
        self.terms.get(m).cloned().unwrap_or_else(gzero)
    }

    pub fn add_term(&mut self, m: Mono, c: Gq) {
        debug_assert_eq!(m.a.len(), self.n);
        if gq_is_zero(&c) {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = &*v + &c;
                if gq_is_zero(v) {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Lowest total degree of a term; `None` for the zero polynomial.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    pub fn constant_term(&self) -> Gq {
        self.coeff(&Mono::one(self.n))
    }

    pub fn scale(&self, c: &Gq) -> Poly {
        if gq_is_zero(c) {
            return Poly::zero(self.n);
        }
        Poly { n: self.n, terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn scale_q(&self, c: &Q) -> Poly {
        self.scale(&gr(c.clone()))
    }

    pub fn conj(&self) -> Poly {
        Poly {
            n: self.n,
            terms: self.terms.iter().map(|(m, v)| (m.conj(), v.conj())).collect(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.non_real_witness().is_none()
    }

    /// A monomial whose coefficient breaks `p = conj(p)`.
    pub fn non_real_witness(&self) -> Option<Mono> {
        for (m, c) in &self.terms {
            let mc = m.conj();
            if self.coeff(&mc) != c.conj() {
                return Some(m.clone());
            }
        }
        None
    }

    pub fn re(&self) -> Poly {
        (self + &self.conj()).scale_q(&q(1, 2))
    }

    pub fn im(&self) -> Poly {
        // (p - conj p) / (2i)
        (self - &self.conj()).scale(&g(qi(0), q(-1, 2)))
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.n);
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// d/dz_j.
    pub fn dz(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.a[j];
            if e > 0 {
                let mut m2 = m.clone();
                m2.a[j] -= 1;
                out.add_term(m2, c * gi(e as i64));
            }
        }
        out
    }

    /// d/dzbar_j.
    pub fn dzb(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.b[j];
            if e > 0 {
                let mut m2 = m.clone();
                m2.b[j] -= 1;
                out.add_term(m2, c * gi(e as i64));
            }
        }
        out
    }

    /// Mixed partial D^alpha Dbar^beta.
    pub fn wirtinger(&self, alpha: &[u32], beta: &[u32]) -> Poly {
        let mut out = Poly::zero(self.n);
        for (m, c) in &self.terms {
            let mut coef = c.clone();
            let mut m2 = m.clone();
            let mut ok = true;
            for j in 0..self.n {
                if m.a[j] < alpha[j] || m.b[j] < beta[j] {
                    ok = false;
                    break;
                }
                coef = coef * gr(falling(m.a[j], alpha[j]) * falling(m.b[j], beta[j]));
                m2.a[j] -= alpha[j];
                m2.b[j] -= beta[j];
            }
            if ok {
                out.add_term(m2, coef);
            }
        }
        out
    }

    /// Minimum weighted degree over the terms, `inf` for zero.
    pub fn weighted_order(&self, w: &Weight) -> Ext {
        self.terms.keys().map(|m| Ext::Fin(m.weighted_degree(w))).min().unwrap_or(Ext::Inf)
    }

    pub fn eval(&self, x: &[Gq]) -> Gq {
        assert_eq!(x.len(), self.n);
        let xb: Vec<Gq> = x.iter().map(|v| v.conj()).collect();
        let mut pw: HashMap<(usize, bool, u32), Gq> = HashMap::new();
        let mut power = |j: usize, bar: bool, e: u32| -> Gq {
            pw.entry((j, bar, e))
                .or_insert_with(|| {
                    let base = if bar { &xb[j] } else { &x[j] };
                    num_traits::pow(base.clone(), e as usize)
                })
                .clone()
        };
        let mut s = gzero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for j in 0..self.n {
                if m.a[j] > 0 {
                    t = t * power(j, false, m.a[j]);
                }
                if m.b[j] > 0 {
                    t = t * power(j, true, m.b[j]);
                }
            }
            s = s + t;
        }
        s
    }

    pub fn eval_f64(&self, x: &[Complex<f64>]) -> Complex<f64> {
        let mut s = Complex::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = gq_to_c64(c);
            for j in 0..self.n {
                if m.a[j] > 0 {
                    t *= x[j].powu(m.a[j]);
                }
                if m.b[j] > 0 {
                    t *= x[j].conj().powu(m.b[j]);
                }
            }
            s += t;
        }
        s
    }

    /// Replace z_j by `zs[j]` and zbar_j by `zbs[j]`; the images live in `target_n` variables.
    pub fn substitute(&self, zs: &[Poly], zbs: &[Poly], target_n: usize) -> Poly {
        let mut cache: HashMap<(usize, bool, u32), Poly> = HashMap::new();
        let mut out = Poly::zero(target_n);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target_n, c.clone());
            for j in 0..self.n {
                for (bar, e) in [(false, m.a[j]), (true, m.b[j])] {
                    if e == 0 {
                        continue;
                    }
                    let base = if bar { &zbs[j] } else { &zs[j] };
                    let pw = cache.entry((j, bar, e)).or_insert_with(|| base.pow(e)).clone();
                    t = &t * &pw;
                }
            }
            out = &out + &t;
        }
        out
    }

    /// p(z + x).
    pub fn translate(&self, x: &[Gq]) -> Poly {
        let n = self.n;
        let zs: Vec<Poly> = (0..n).map(|j| &Poly::z(n, j) + &Poly::constant(n, x[j].clone())).collect();
        let zbs: Vec<Poly> = (0..n).map(|j| &Poly::zb(n, j) + &Poly::constant(n, x[j].conj())).collect();
        self.substitute(&zs, &zbs, n)
    }

    /// Holomorphic linear change z_j = sum_k m[j][k] w_k.
    pub fn linear_change(&self, m: &[Vec<Gq>]) -> Poly {
        let n = self.n;
        let mut zs = Vec::with_capacity(n);
        let mut zbs = Vec::with_capacity(n);
        for row in m {
            let mut a = Poly::zero(n);
            let mut b = Poly::zero(n);
            for (k, c) in row.iter().enumerate() {
                a = &a + &Poly::z(n, k).scale(c);
                b = &b + &Poly::zb(n, k).scale(&c.conj());
            }
            zs.push(a);
            zbs.push(b);
        }
        self.substitute(&zs, &zbs, n)
    }

    /// Substitute a holomorphic curve; the result is a polynomial in (s, sbar).
    pub fn compose_curve(&self, c: &CurveProbe) -> Poly {
        assert_eq!(c.comps.len(), self.n);
        let zbs: Vec<Poly> = c.comps.iter().map(|p| p.conj()).collect();
        self.substitute(&c.comps, &zbs, 1)
    }

    /// Drop every term failing `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Mono, &Gq) -> bool) -> Poly {
        Poly {
            n: self.n,
            terms: self.terms.iter().filter(|(m, c)| keep(m, c)).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(&Mono, &Gq) -> Gq) -> Poly {
        Poly::from_terms(self.n, self.terms.iter().map(|(m, c)| (m.clone(), f(m, c))))
    }

    /// Divide by the leading coefficient (first term in canonical order).
    pub fn monic(&self) -> Poly {
        match self.terms.values().next() {
            Some(c) => self.scale(&(gone() / c.clone())),
            None => self.clone(),
        }
    }
}

fn falling(e: u32, k: u32) -> Q {
    let mut r = Q::one();
    for i in 0..k {
        r *= qi((e - i) as i64);
    }
    r
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        assert_eq!(self.n, o.n);
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        assert_eq!(self.n, o.n);
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { n: self.n, terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        assert_eq!(self.n, o.n);
        let mut acc: HashMap<Mono, Gq> = HashMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let m = m1.mul(m2);
                let c = c1 * c2;
                match acc.get_mut(&m) {
                    Some(v) => *v = &*v + &c,
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        Poly { n: self.n, terms: acc.into_iter().filter(|(_, c)| !gq_is_zero(c)).collect() }
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, o: Poly) -> Poly {
        &self + &o
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, o: Poly) -> Poly {
        &self - &o
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        &self * &o
    }
}

/// Variable names: z1..zn, zb1..zbn; one-variable polynomials print in s, sb.
fn var_names(n: usize, j: usize) -> (String, String) {
    if n == 1 {
        ("s".into(), "sb".into())
    } else {
        (format!("z{}", j + 1), format!("zb{}", j + 1))
    }
}

pub fn fmt_mono(m: &Mono) -> String {
    let n = m.a.len();
    let mut parts = Vec::new();
    for (bar, ex) in [(false, &m.a), (true, &m.b)] {
        for (j, &e) in ex.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let (zn, zbn) = var_names(n, j);
            let v = if bar { zbn } else { zn };
            if e == 1 {
                parts.push(v);
            } else {
                parts.push(format!("{}^{}", v, e));
            }
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" * ")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            // pull a leading minus out of purely real or purely imaginary coefficients
            let (neg, cc) = if (c.im.is_zero() && c.re < Q::zero()) || (c.re.is_zero() && c.im < Q::zero()) {
                (true, -c.clone())
            } else {
                (false, c.clone())
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            let cs = fmt_gq(&cc);
            if m.is_constant() {
                write!(f, "{}", cs)?;
            } else if cc.re.is_one() && cc.im.is_zero() {
                write!(f, "{}", fmt_mono(m))?;
            } else {
                write!(f, "{} * {}", cs, fmt_mono(m))?;
            }
        }
        Ok(())
    }
}

impl serde::Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Holomorphic curve s -> (gamma_1(s), ..., gamma_n(s)), each a polynomial in s alone.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveProbe {
    pub comps: Vec<Poly>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CurveError {
    #[error("curve component {0} depends on sbar")]
    NotHolomorphic(usize),
    #[error("curve is constant")]
    ConstantCurve,
}

impl CurveProbe {
    pub fn new(comps: Vec<Poly>) -> Result<CurveProbe, CurveError> {
        for (j, c) in comps.iter().enumerate() {
            assert_eq!(c.n(), 1);
            if c.terms().any(|(m, _)| m.b[0] > 0) {
                return Err(CurveError::NotHolomorphic(j));
            }
        }
        Ok(CurveProbe { comps })
    }

    /// gamma_j(s) = x0_j + c_j s^{e_j}; exponent 0 means the component stays at x0_j.
    pub fn monomial(x0: &[Gq], coeffs: &[Gq], exps: &[u32]) -> CurveProbe {
        let comps = (0..x0.len())
            .map(|j| {
                let mut p = Poly::constant(1, x0[j].clone());
                if exps[j] > 0 {
                    p.add_term(Mono::new(vec![exps[j]], vec![0]), coeffs[j].clone());
                }
                p
            })
            .collect();
        CurveProbe { comps }
    }

    pub fn base_point(&self) -> Vec<Gq> {
        self.comps.iter().map(|c| c.constant_term()).collect()
    }

    /// min_j ord_0(gamma_j - gamma_j(0)).
    pub fn order(&self) -> Result<u32, CurveError> {
        self.comps
            .iter()
            .filter_map(|c| c.terms().filter(|(m, _)| !m.is_constant()).map(|(m, _)| m.degree()).min())
            .min()
            .ok_or(CurveError::ConstantCurve)
    }

    pub fn eval(&self, s: &Gq) -> Vec<Gq> {
        self.comps.iter().map(|c| c.eval(std::slice::from_ref(s))).collect()
    }
}
