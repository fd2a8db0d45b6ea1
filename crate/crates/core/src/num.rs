//! Exact scalars: rationals and Gaussian rationals.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

pub type Q = BigRational;
pub type Gq = Complex<Q>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn g(re: Q, im: Q) -> Gq {
    Complex::new(re, im)
}

pub fn gr(re: Q) -> Gq {
    Complex::new(re, Q::zero())
}

pub fn gi(n: i64) -> Gq {
    gr(qi(n))
}

pub fn gzero() -> Gq {
    Complex::new(Q::zero(), Q::zero())
}

pub fn gone() -> Gq {
    Complex::new(Q::one(), Q::zero())
}

pub fn imag_unit() -> Gq {
    Complex::new(Q::zero(), Q::one())
}

pub fn is_real(c: &Gq) -> bool {
    c.im.is_zero()
}

pub fn gq_is_zero(c: &Gq) -> bool {
    c.re.is_zero() && c.im.is_zero()
}

/// |re| + |im|, an upper bound for the modulus.
pub fn abs_bound(c: &Gq) -> Q {
    c.re.abs() + c.im.abs()
}

pub fn norm_sqr(c: &Gq) -> Q {
    &c.re * &c.re + &c.im * &c.im
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn gq_to_c64(c: &Gq) -> Complex<f64> {
    Complex::new(q_to_f64(&c.re), q_to_f64(&c.im))
}

pub fn floor_q(x: &Q) -> BigInt {
    x.floor().to_integer()
}

/// Rational printed as `p/q`, or `p` when the denominator is one.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `p`, `-p` or `p/q`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Q::from_integer(n))
    }
}

fn fmt_imag(x: &Q) -> String {
    if x.is_one() {
        "i".to_string()
    } else if (-x).is_one() {
        "-i".to_string()
    } else {
        format!("{}*i", fmt_q(x))
    }
}

/// Gaussian rational in the expression syntax accepted by the parser.
pub fn fmt_gq(c: &Gq) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => fmt_q(&c.re),
        (true, false) => fmt_imag(&c.im),
        (false, false) => {
            if c.im.is_negative() {
                format!("({} - {})", fmt_q(&c.re), fmt_imag(&-&c.im))
            } else {
                format!("({} + {})", fmt_q(&c.re), fmt_imag(&c.im))
            }
        }
    }
}

/// Extended rational: a finite rational or `+inf`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ext {
    Fin(Q),
    Inf,
}

impl Ext {
    pub fn int(n: i64) -> Ext {
        Ext::Fin(qi(n))
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Ext::Inf)
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            Ext::Fin(x) => Some(x),
            Ext::Inf => None,
        }
    }

    pub fn parse(s: &str) -> Option<Ext> {
        let t = s.trim();
        if t == "inf" || t == "∞" {
            Some(Ext::Inf)
        } else {
            parse_q(t).map(Ext::Fin)
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Inf, Ext::Inf) => Ordering::Equal,
            (Ext::Inf, _) => Ordering::Greater,
            (_, Ext::Inf) => Ordering::Less,
            (Ext::Fin(a), Ext::Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(x) => write!(f, "{}", fmt_q(x)),
            Ext::Inf => write!(f, "inf"),
        }
    }
}

impl serde::Serialize for Ext {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Exact `x^(a/b)` when it is rational.
pub fn rational_power(x: &Q, e: &Q) -> Option<Q> {
    if x.is_zero() {
        return if e.is_positive() { Some(Q::zero()) } else { None };
    }
    if x.is_negative() {
        return None;
    }
    let b = e.denom().to_u32()?;
    let a = e.numer().clone();
    let root = |n: &BigInt| -> Option<BigInt> {
        let r = n.nth_root(b);
        if num_traits::pow(r.clone(), b as usize) == *n {
            Some(r)
        } else {
            None
        }
    };
    let base = Q::new(root(x.numer())?, root(x.denom())?);
    let ai = a.to_i32()?;
    let p = num_traits::pow(base.clone(), ai.unsigned_abs() as usize);
    if ai < 0 {
        Some(p.recip())
    } else {
        Some(p)
    }
}
