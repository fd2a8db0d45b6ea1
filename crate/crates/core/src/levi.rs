//! Levi form, wedge-product coefficients, Levi rank and a sampled pseudoconvexity test.

use crate::num::*;
use crate::poly::Poly;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

/// Complex Hessian H_ij = d^2 r / dz_i dzbar_j and the gradient dr/dz_j.
#[derive(Clone, Debug, PartialEq)]
pub struct LeviData {
    pub h: Vec<Vec<Poly>>,
    pub grad: Vec<Poly>,
}

impl LeviData {
    pub fn is_hermitian(&self) -> bool {
        let n = self.h.len();
        (0..n).all(|i| (0..n).all(|j| self.h[i][j] == self.h[j][i].conj()))
    }

    pub fn at(&self, x: &[Gq]) -> (Vec<Vec<Gq>>, Vec<Gq>) {
        let h = self.h.iter().map(|row| row.iter().map(|p| p.eval(x)).collect()).collect();
        let g = self.grad.iter().map(|p| p.eval(x)).collect();
        (h, g)
    }
}

pub fn levi_matrix(r: &Poly) -> LeviData {
    let n = r.n();
    let grad: Vec<Poly> = (0..n).map(|j| r.dz(j)).collect();
    let h = (0..n).map(|i| (0..n).map(|j| grad[i].dzb(j)).collect()).collect();
    LeviData { h, grad }
}

/// Holomorphic gradient (dp/dz_1, ..., dp/dz_n).
pub fn gradient(p: &Poly) -> Vec<Poly> {
    (0..p.n()).map(|j| p.dz(j)).collect()
}

/// Determinant by expansion over column subsets.
pub fn det_poly(m: &[Vec<Poly>], n_vars: usize) -> Poly {
    let k = m.len();
    if k == 0 {
        return Poly::one(n_vars);
    }
    let mut layer: Vec<Option<Poly>> = vec![None; 1 << k];
    layer[0] = Some(Poly::one(n_vars));
    for (row, entries) in m.iter().enumerate() {
        let mut next: Vec<Option<Poly>> = vec![None; 1 << k];
        for mask in 0..(1usize << k) {
            if mask.count_ones() as usize != row {
                continue;
            }
            let Some(acc) = &layer[mask] else { continue };
            if acc.is_zero() {
                continue;
            }
            for (c, entry) in entries.iter().enumerate() {
                if mask & (1 << c) != 0 || entry.is_zero() {
                    continue;
                }
                let above = (mask >> (c + 1)).count_ones();
                let mut t = acc * entry;
                if above % 2 == 1 {
                    t = -&t;
                }
                let slot = &mut next[mask | (1 << c)];
                *slot = Some(match slot.take() {
                    Some(s) => &s + &t,
                    None => t,
                });
            }
        }
        layer = next;
    }
    layer[(1 << k) - 1].take().unwrap_or_else(|| Poly::zero(n_vars))
}

/// Determinant of a Gaussian-rational matrix by elimination.
pub fn det_gq(m: &[Vec<Gq>]) -> Gq {
    let k = m.len();
    let mut a: Vec<Vec<Gq>> = m.to_vec();
    let mut det = gone();
    for col in 0..k {
        let Some(piv) = (col..k).find(|&r| !gq_is_zero(&a[r][col])) else {
            return gzero();
        };
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det = det * p.clone();
        for r in col + 1..k {
            if gq_is_zero(&a[r][col]) {
                continue;
            }
            let f = a[r][col].clone() / p.clone();
            for c in col..k {
                let v = a[col][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
    }
    det
}

pub fn rank_gq(m: &[Vec<Gq>]) -> usize {
    let mut a: Vec<Vec<Gq>> = m.to_vec();
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| !gq_is_zero(&a[r][col])) else { continue };
        a.swap(piv, rank);
        let p = a[rank][col].clone();
        for r in 0..rows {
            if r == rank || gq_is_zero(&a[r][col]) {
                continue;
            }
            let f = a[r][col].clone() / p.clone();
            for c in col..cols {
                let v = a[rank][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
        rank += 1;
    }
    rank
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LeviError {
    #[error("{given} gradients exceed n - q = {max}")]
    TooManyGradients { given: usize, max: usize },
    #[error("point is not on the boundary: r(x) = {0}")]
    NotOnBoundary(String),
    #[error("gradient of r vanishes at the point")]
    DegenerateGradient,
}

/// Coefficient of dz_I ^ dzbar_J in  df_1 ^ ... ^ df_j ^ dr ^ dbar r ^ (ddbar r)^k.
#[derive(Clone, Debug, PartialEq)]
pub struct WedgeCoefficient {
    pub holo: Vec<usize>,
    pub anti: Vec<usize>,
    pub value: Poly,
}

fn factorial(k: usize) -> Q {
    (1..=k).fold(Q::one(), |a, i| a * qi(i as i64))
}

/// Bordered determinant for one index pair (I, J):
/// rows df_a|_I and dr|_I padded with 0, then (H_{aJ_b})_{a in I} bordered by dr/dzbar_{J_b}.
pub fn bordered_minor(levi: &LeviData, rbar: &[Poly], grads: &[Vec<Poly>], holo: &[usize], anti: &[usize], n: usize) -> Poly {
    let mut rows: Vec<Vec<Poly>> = Vec::new();
    for gr in grads.iter().chain(std::iter::once(&levi.grad)) {
        let mut row: Vec<Poly> = holo.iter().map(|&a| gr[a].clone()).collect();
        row.push(Poly::zero(n));
        rows.push(row);
    }
    for &b in anti {
        let mut row: Vec<Poly> = holo.iter().map(|&a| levi.h[a][b].clone()).collect();
        row.push(rbar[b].clone());
        rows.push(row);
    }
    det_poly(&rows, n)
}

/// All coefficients of df_1 ^ ... ^ df_j ^ dr ^ dbar r ^ (ddbar r)^{n-q-j}, zero ones omitted.
pub fn wedge_coefficients(r: &Poly, extra_gradients: &[Vec<Poly>], q: usize) -> Result<Vec<WedgeCoefficient>, LeviError> {
    let n = r.n();
    let j = extra_gradients.len();
    if q > n || j > n - q {
        return Err(LeviError::TooManyGradients { given: j, max: n.saturating_sub(q) });
    }
    let k = n - q - j;
    let levi = levi_matrix(r);
    let rbar: Vec<Poly> = (0..n).map(|b| r.dzb(b)).collect();
    let kf = gr(factorial(k));
    let mut out = Vec::new();
    for holo in subsets(n, n - q + 1) {
        for anti in subsets(n, k + 1) {
            let v = bordered_minor(&levi, &rbar, extra_gradients, &holo, &anti, n);
            if !v.is_zero() {
                out.push(WedgeCoefficient { holo: holo.clone(), anti, value: v.scale(&kf) });
            }
        }
    }
    Ok(out)
}

/// Rank of the Levi form on the complex tangent space at x.
pub fn levi_rank_at(r: &Poly, x: &[Gq]) -> Result<usize, LeviError> {
    let v = r.eval(x);
    if !gq_is_zero(&v) {
        return Err(LeviError::NotOnBoundary(fmt_gq(&v)));
    }
    let n = r.n();
    let levi = levi_matrix(r);
    let (h, g) = levi.at(x);
    if g.iter().all(gq_is_zero) {
        return Err(LeviError::DegenerateGradient);
    }
    let gb: Vec<Gq> = (0..n).map(|j| r.dzb(j).eval(x)).collect();
    let mut b = vec![vec![gzero(); n + 1]; n + 1];
    for j in 0..n {
        b[0][j + 1] = gb[j].clone();
        b[j + 1][0] = g[j].clone();
        for i in 0..n {
            b[i + 1][j + 1] = h[i][j].clone();
        }
    }
    Ok(rank_gq(&b) - 2)
}

#[derive(Clone, Debug)]
pub struct SampleSpec {
    pub radius: Q,
    pub count: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { radius: q(1, 2), count: 64 }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Pseudoconvexity {
    Pass { samples: usize },
    Fail { point: Vec<String>, vector: Vec<String>, value: String },
    Inconclusive { reason: String },
}

/// Hermitian form Q(u, w) = sum H_ij u_i conj(w_j).
fn herm(h: &[Vec<Gq>], u: &[Gq], w: &[Gq]) -> Gq {
    let mut s = gzero();
    for (i, row) in h.iter().enumerate() {
        if gq_is_zero(&u[i]) {
            continue;
        }
        for (j, hij) in row.iter().enumerate() {
            if gq_is_zero(&w[j]) || gq_is_zero(hij) {
                continue;
            }
            s = s + hij.clone() * u[i].clone() * w[j].conj();
        }
    }
    s
}

/// Either a vector v in the span of `basis` with Q(v, v) < 0, or `None` when Q is semidefinite there.
pub fn negative_direction(h: &[Vec<Gq>], basis: Vec<Vec<Gq>>) -> Option<Vec<Gq>> {
    let mut b = basis;
    loop {
        if b.is_empty() {
            return None;
        }
        let k = b.len();
        let m: Vec<Vec<Gq>> = (0..k).map(|a| (0..k).map(|c| herm(h, &b[a], &b[c])).collect()).collect();
        if let Some(a) = (0..k).find(|&a| m[a][a].re.is_negative()) {
            return Some(b[a].clone());
        }
        // isotropic direction paired with a nonzero entry gives a negative combination
        for a in 0..k {
            if m[a][a].re.is_zero() {
                if let Some(c) = (0..k).find(|&c| c != a && !gq_is_zero(&m[a][c])) {
                    let mac = m[a][c].clone();
                    let t = (m[c][c].re.clone() + Q::one()) / norm_sqr(&mac);
                    let s = -(mac.conj() * gr(t));
                    let v: Vec<Gq> = b[a].iter().zip(&b[c]).map(|(x, y)| s.clone() * x.clone() + y.clone()).collect();
                    return Some(v);
                }
            }
        }
        b = (0..k).filter(|&a| !m[a][a].re.is_zero()).map(|a| b[a].clone()).collect();
        if b.is_empty() {
            return None;
        }
        let a = 0;
        let maa = herm(h, &b[a], &b[a]);
        let pivot = b[a].clone();
        let rest: Vec<Vec<Gq>> = (1..b.len())
            .map(|c| {
                let mu = herm(h, &b[c], &pivot) / maa.clone();
                b[c].iter().zip(&pivot).map(|(x, p)| x.clone() - mu.clone() * p.clone()).collect()
            })
            .collect();
        b = rest;
    }
}

/// Basis of {v : sum_j g_j v_j = 0}, or `None` if g = 0.
pub fn tangent_basis(g: &[Gq]) -> Option<Vec<Vec<Gq>>> {
    let n = g.len();
    let p = g.iter().position(|c| !gq_is_zero(c))?;
    Some(
        (0..n)
            .filter(|&k| k != p)
            .map(|k| {
                let mut v = vec![gzero(); n];
                v[k] = gone();
                v[p] = -(g[k].clone() / g[p].clone());
                v
            })
            .collect(),
    )
}

/// The real slope a when r = a Re(z_1) + (terms free of Re z_1), a a nonzero real constant.
pub fn graph_slope(r: &Poly) -> Option<Q> {
    let d = &r.dz(0) + &r.dzb(0);
    if d.len() == 1 && d.terms().all(|(m, c)| m.is_constant() && c.im.is_zero()) {
        let c = d.constant_term().re;
        if !c.is_zero() {
            return Some(c);
        }
    }
    None
}

/// Solve r = 0 for Re z_1 given the other real coordinates; needs `graph_slope`.
pub fn project_to_boundary(r: &Poly, slope: &Q, x: &[Gq]) -> Vec<Gq> {
    let mut y = x.to_vec();
    y[0] = g(Q::zero(), x[0].im.clone());
    let v = r.eval(&y);
    y[0] = g(-(v.re / slope), x[0].im.clone());
    y
}

fn radical_inverse(mut k: u64, base: u64) -> Q {
    let mut inv = q(1, base as i64);
    let mut out = Q::zero();
    while k > 0 {
        out += qi((k % base) as i64) * &inv;
        k /= base;
        inv /= qi(base as i64);
    }
    out
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic rational offsets in the 2n - 1 real coordinates other than Re z_1.
pub fn halton_offsets(n: usize, radius: &Q, count: usize) -> Vec<Vec<Gq>> {
    (0..count)
        .map(|k| {
            let mut coords = Vec::with_capacity(2 * n - 1);
            for d in 0..(2 * n - 1) {
                let h = radical_inverse(k as u64 + 1, PRIMES[d % PRIMES.len()]);
                coords.push(radius * (qi(2) * h - qi(1)));
            }
            let mut x = vec![g(Q::zero(), coords[0].clone())];
            for j in 1..n {
                x.push(g(coords[2 * j - 1].clone(), coords[2 * j].clone()));
            }
            x
        })
        .collect()
}

pub fn pseudoconvexity_check(r: &Poly, x0: &[Gq], spec: &SampleSpec) -> Pseudoconvexity {
    let Some(slope) = graph_slope(r) else {
        return Pseudoconvexity::Inconclusive { reason: "r is not linear in Re z1 with constant slope".into() };
    };
    let levi = levi_matrix(r);
    let n = r.n();
    let mut points = vec![x0.to_vec()];
    for off in halton_offsets(n, &spec.radius, spec.count) {
        let x: Vec<Gq> = x0.iter().zip(&off).map(|(a, b)| a + b).collect();
        points.push(project_to_boundary(r, &slope, &x));
    }
    for x in &points {
        let (h, gvec) = levi.at(x);
        let Some(basis) = tangent_basis(&gvec) else { continue };
        if let Some(v) = negative_direction(&h, basis) {
            let val = herm(&h, &v, &v);
            debug_assert!(val.re.is_negative());
            return Pseudoconvexity::Fail {
                point: x.iter().map(fmt_gq).collect(),
                vector: v.iter().map(fmt_gq).collect(),
                value: fmt_gq(&val),
            };
        }
    }
    Pseudoconvexity::Pass { samples: points.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;

    fn p(s: &str, n: usize) -> Poly {
        parse_poly(s, n).unwrap()
    }

    #[test]
    fn levi_examples() {
        let l = levi_matrix(&p("Re(z1) + abs2(z2)^2", 2));
        assert_eq!(l.h[1][1], p("4*z2*zb2", 2));
        assert!(l.h[0][0].is_zero() && l.h[0][1].is_zero() && l.h[1][0].is_zero());
        assert_eq!(levi_matrix(&p("Re(z1) + abs2(z2)", 2)).h[1][1], Poly::one(2));
        assert!(levi_matrix(&p("Re(z1)", 2)).h.iter().flatten().all(|x| x.is_zero()));
    }

    #[test]
    fn wedge_examples() {
        // strongly pseudoconvex: one constant coefficient
        let w = wedge_coefficients(&p("Re(z1) + abs2(z2)", 2), &[], 1).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].value, Poly::constant(2, gr(q(-1, 4))));
        let w = wedge_coefficients(&p("Re(z1) + abs2(z2)^2", 2), &[], 1).unwrap();
        assert_eq!(w[0].value, p("-z2*zb2", 2));
        // gradient of |z2|^2 leaves a factor zb2; gradient of Re z2 gives a unit
        let r = p("Re(z1) + abs2(z2)^2", 2);
        let w = wedge_coefficients(&r, &[gradient(&p("abs2(z2)", 2))], 1).unwrap();
        assert!(w.iter().all(|c| gq_is_zero(&c.value.constant_term())));
        assert!(w.iter().any(|c| c.value == p("-1/4*zb2", 2)));
        let w = wedge_coefficients(&r, &[gradient(&p("Re(z2)", 2))], 1).unwrap();
        assert!(w.iter().any(|c| c.value == Poly::constant(2, gr(q(-1, 8)))));
        assert!(matches!(
            wedge_coefficients(&r, &[gradient(&r), gradient(&r)], 1),
            Err(LeviError::TooManyGradients { .. })
        ));
    }

    #[test]
    fn rank_examples() {
        let o2 = vec![gzero(); 2];
        assert_eq!(levi_rank_at(&p("Re(z1) + abs2(z2)", 2), &o2).unwrap(), 1);
        assert_eq!(levi_rank_at(&p("Re(z1) + abs2(z2)^2", 2), &o2).unwrap(), 0);
        let r3 = p("Re(z1) + abs2(z2) + abs2(z3)^3", 3);
        assert_eq!(levi_rank_at(&r3, &[gzero(), gzero(), gzero()]).unwrap(), 1);
        assert!(matches!(
            levi_rank_at(&p("Re(z1) + abs2(z2)", 2), &[gone(), gzero()]),
            Err(LeviError::NotOnBoundary(_))
        ));
    }

    #[test]
    fn pseudoconvexity_examples() {
        let o2 = vec![gzero(); 2];
        let s = SampleSpec::default();
        assert!(matches!(pseudoconvexity_check(&p("Re(z1) + abs2(z2)^2", 2), &o2, &s), Pseudoconvexity::Pass { .. }));
        match pseudoconvexity_check(&p("Re(z1) - abs2(z2)", 2), &o2, &s) {
            Pseudoconvexity::Fail { vector, .. } => assert_eq!(vector, vec!["0", "1"]),
            other => panic!("{:?}", other),
        }
        assert!(matches!(
            pseudoconvexity_check(&p("abs2(z1) + Re(z2)", 2), &o2, &s),
            Pseudoconvexity::Inconclusive { .. }
        ));
    }

    #[test]
    fn det_agrees_with_elimination() {
        let m = vec![
            vec![gi(2), g(qi(1), qi(1)), gi(0)],
            vec![gi(1), gi(3), g(qi(0), qi(2))],
            vec![gi(-1), gi(1), gi(4)],
        ];
        let pm: Vec<Vec<Poly>> = m.iter().map(|r| r.iter().map(|c| Poly::constant(1, c.clone())).collect()).collect();
        assert_eq!(det_poly(&pm, 1).constant_term(), det_gq(&m));
    }
}
