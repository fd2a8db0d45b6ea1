//! Vector fields, list derivatives, the commutator multitype and boundary systems.

use crate::levi::{det_gq, gradient, graph_slope, levi_matrix, project_to_boundary, rank_gq, subsets, LeviData};
use crate::num::*;
use crate::poly::Poly;
use crate::weights::Weight;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

/// sum_j a_j d/dz_j + b_j d/dzbar_j.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub dz: Vec<Poly>,
    pub dzb: Vec<Poly>,
}

impl VectorField {
    pub fn holomorphic(dz: Vec<Poly>) -> VectorField {
        let n = dz.len();
        let zero = if n > 0 { Poly::zero(dz[0].n()) } else { Poly::zero(0) };
        VectorField { dz, dzb: vec![zero; n] }
    }

    /// d/dz_j.
    pub fn coordinate(n: usize, j: usize) -> VectorField {
        let mut dz = vec![Poly::zero(n); n];
        dz[j] = Poly::one(n);
        VectorField::holomorphic(dz)
    }

    pub fn n(&self) -> usize {
        self.dz.len()
    }

    pub fn apply(&self, f: &Poly) -> Poly {
        let mut out = Poly::zero(f.n());
        for j in 0..self.n() {
            if !self.dz[j].is_zero() {
                let d = f.dz(j);
                if !d.is_zero() {
                    out = &out + &(&self.dz[j] * &d);
                }
            }
            if !self.dzb[j].is_zero() {
                let d = f.dzb(j);
                if !d.is_zero() {
                    out = &out + &(&self.dzb[j] * &d);
                }
            }
        }
        out
    }

    /// The conjugate field: conj(L) f = conj(L conj f).
    pub fn conj(&self) -> VectorField {
        VectorField {
            dz: self.dzb.iter().map(|p| p.conj()).collect(),
            dzb: self.dz.iter().map(|p| p.conj()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.dz.iter().chain(&self.dzb).all(|p| p.is_zero())
    }

    pub fn scale(&self, c: &Gq) -> VectorField {
        VectorField {
            dz: self.dz.iter().map(|p| p.scale(c)).collect(),
            dzb: self.dzb.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        VectorField {
            dz: self.dz.iter().zip(&o.dz).map(|(a, b)| a + b).collect(),
            dzb: self.dzb.iter().zip(&o.dzb).map(|(a, b)| a + b).collect(),
        }
    }

    /// Holomorphic coefficient values at the origin.
    pub fn at_origin(&self) -> Vec<Gq> {
        self.dz.iter().map(|p| p.constant_term()).collect()
    }

    pub fn degree(&self) -> u32 {
        self.dz.iter().chain(&self.dzb).map(|p| p.degree()).max().unwrap_or(0)
    }
}

pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    let n = x.n();
    VectorField {
        dz: (0..n).map(|j| &x.apply(&y.dz[j]) - &y.apply(&x.dz[j])).collect(),
        dzb: (0..n).map(|j| &x.apply(&y.dzb[j]) - &y.apply(&x.dzb[j])).collect(),
    }
}

/// dr(V): contraction of the (1,0)-form dr with the holomorphic part of V.
pub fn contract_dr(r: &Poly, v: &VectorField) -> Poly {
    let mut out = Poly::zero(r.n());
    for j in 0..v.n() {
        if !v.dz[j].is_zero() {
            out = &out + &(&r.dz(j) * &v.dz[j]);
        }
    }
    out
}

/// One entry of a list: a field index and whether it is conjugated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Entry {
    pub field: usize,
    pub conj: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundaryError {
    #[error("list of length {0} is too short, need at least 3")]
    ListTooShort(usize),
    #[error("list is not admissible")]
    NotAdmissible,
    #[error("list search budget exhausted at entry {index}; prefix {partial} is a lower bound only")]
    SearchBudgetExceeded { index: usize, partial: Weight },
    #[error("boundary system is incomplete")]
    IncompleteSystem,
    #[error("gradient of r vanishes at the base point")]
    DegenerateGradient,
    #[error("r is not graph-like in Re z1; level-set scan unavailable")]
    NonGraphDomain,
    #[error("point is not on the boundary")]
    NotOnBoundary,
}

fn resolve(fields: &[VectorField], e: Entry) -> VectorField {
    if e.conj {
        fields[e.field].conj()
    } else {
        fields[e.field].clone()
    }
}

/// L^1 ... L^{l-2} dr([L^{l-1}, L^l]) as a polynomial.
pub fn list_derivative(fields: &[VectorField], list: &[Entry], r: &Poly) -> Result<Poly, BoundaryError> {
    if list.len() < 3 {
        return Err(BoundaryError::ListTooShort(list.len()));
    }
    Ok(list_function(fields, list, r))
}

fn list_function(fields: &[VectorField], list: &[Entry], r: &Poly) -> Poly {
    let l = list.len();
    let br = lie_bracket(&resolve(fields, list[l - 2]), &resolve(fields, list[l - 1]));
    let mut f = contract_dr(r, &br);
    for e in list[..l - 2].iter().rev() {
        f = resolve(fields, *e).apply(&f);
    }
    f
}

/// Memoised list functions keyed by suffix.
struct ListCache<'a> {
    r: &'a Poly,
    resolved: HashMap<Entry, VectorField>,
    fields: &'a [VectorField],
    memo: HashMap<Vec<Entry>, Poly>,
    evaluations: u64,
}

impl<'a> ListCache<'a> {
    fn new(fields: &'a [VectorField], r: &'a Poly) -> Self {
        ListCache { r, resolved: HashMap::new(), fields, memo: HashMap::new(), evaluations: 0 }
    }

    fn field(&mut self, e: Entry) -> VectorField {
        let fields = self.fields;
        self.resolved.entry(e).or_insert_with(|| resolve(fields, e)).clone()
    }

    fn get(&mut self, list: &[Entry]) -> Poly {
        if let Some(p) = self.memo.get(list) {
            return p.clone();
        }
        self.evaluations += 1;
        let l = list.len();
        let p = if l == 2 {
            let a = self.field(list[0]);
            let b = self.field(list[1]);
            contract_dr(self.r, &lie_bracket(&a, &b))
        } else {
            let inner = self.get(&list[1..]);
            self.field(list[0]).apply(&inner)
        };
        self.memo.insert(list.to_vec(), p.clone());
        p
    }
}

/// Solve sum_{i<nu} l_i / c_i + l_nu / c = 1 for c.
pub fn c_of_list(prefix_c: &[Q], multiplicities: &[u32]) -> Result<Q, BoundaryError> {
    if multiplicities.len() != prefix_c.len() + 1 {
        return Err(BoundaryError::NotAdmissible);
    }
    let l_last = *multiplicities.last().unwrap();
    if l_last == 0 {
        return Err(BoundaryError::NotAdmissible);
    }
    let s = prefix_c.iter().zip(multiplicities).fold(Q::zero(), |acc, (c, &l)| acc + qi(l as i64) / c);
    if s >= Q::one() {
        return Err(BoundaryError::NotAdmissible);
    }
    Ok(qi(l_last as i64) / (Q::one() - s))
}

#[derive(Clone, Debug)]
pub struct BoundaryCaps {
    pub max_list_len: usize,
    /// Also try sums of pairs of kernel basis fields.
    pub pair_sums: bool,
    /// Maximum number of list functions evaluated per entry.
    pub budget: u64,
    /// Declared degree cap for kernel-field coefficients; exceeding it is flagged.
    pub degree_cap: u32,
}

impl Default for BoundaryCaps {
    fn default() -> Self {
        BoundaryCaps { max_list_len: 8, pair_sums: true, budget: 200_000, degree_cap: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChosenList {
    /// Outermost entry first; field indices refer to `BoundarySystem::fields`.
    pub entries: Vec<Entry>,
    pub multiplicities: Vec<u32>,
    #[serde(serialize_with = "crate::truncation::ser_q")]
    pub c: Q,
    #[serde(serialize_with = "ser_gq")]
    pub value: Gq,
}

pub fn ser_gq<S: serde::Serializer>(x: &Gq, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_gq(x))
}

/// Boundary system at a base point, stored in coordinates centred at that point.
#[derive(Clone, Debug)]
pub struct BoundarySystem {
    pub n: usize,
    pub q: usize,
    pub base_point: Vec<Gq>,
    /// r translated so that the base point is the origin.
    pub r: Poly,
    pub rank: usize,
    pub levi_fields: Vec<VectorField>,
    /// r_{p+2}, ..., r_nu.
    pub functions: Vec<Poly>,
    /// L_{p+2}, ..., L_nu.
    pub fields: Vec<VectorField>,
    pub lists: Vec<ChosenList>,
    /// Commutator multitype prefix of length n + 1 - q.
    pub multitype: Weight,
    /// r_nu = Re(...) or Im(...) of the list function.
    pub branches: Vec<&'static str>,
    pub degree_cap_exceeded: bool,
    pub lists_evaluated: u64,
}

impl BoundarySystem {
    pub fn nu(&self) -> usize {
        1 + self.rank + self.functions.len()
    }

    pub fn target_len(&self) -> usize {
        self.n + 1 - self.q
    }

    pub fn is_complete(&self) -> bool {
        self.nu() == self.target_len() && self.multitype.entries().iter().all(|e| !e.is_inf())
    }

    /// r, r_{p+2}, ..., r_nu in centred coordinates.
    pub fn all_functions(&self) -> Vec<Poly> {
        std::iter::once(self.r.clone()).chain(self.functions.iter().cloned()).collect()
    }

    /// Evaluate every function of the system at a point given in original coordinates.
    pub fn values_at(&self, x: &[Gq]) -> Vec<Gq> {
        let y: Vec<Gq> = x.iter().zip(&self.base_point).map(|(a, b)| a - b).collect();
        self.all_functions().iter().map(|f| f.eval(&y)).collect()
    }
}

/// Fields annihilating `forms`, one per (s+1)-subset of coordinates, via cofactor expansion.
fn cramer_fields(forms: &[Vec<Poly>], n: usize) -> Vec<VectorField> {
    let s = forms.len();
    let mut out = Vec::new();
    for set in subsets(n, s + 1) {
        let mut dz = vec![Poly::zero(n); n];
        for (t, &col) in set.iter().enumerate() {
            let rest: Vec<usize> = set.iter().copied().filter(|&c| c != col).collect();
            let m: Vec<Vec<Poly>> = forms.iter().map(|f| rest.iter().map(|&c| f[c].clone()).collect()).collect();
            let d = crate::levi::det_poly(&m, n);
            dz[col] = if t % 2 == 0 { d } else { -&d };
        }
        out.push(VectorField::holomorphic(dz));
    }
    out
}

/// A basis at the origin of the kernel of `forms`, normalised so the first nonzero value is 1.
fn kernel_basis(forms: &[Vec<Poly>], n: usize) -> Vec<VectorField> {
    let want = n - forms.len();
    let mut chosen: Vec<VectorField> = Vec::new();
    let mut rows: Vec<Vec<Gq>> = Vec::new();
    for f in cramer_fields(forms, n) {
        let v = f.at_origin();
        let Some(k) = v.iter().position(|c| !gq_is_zero(c)) else { continue };
        let mut trial = rows.clone();
        trial.push(v.clone());
        if rank_gq(&trial) > rows.len() {
            rows = trial;
            chosen.push(f.scale(&(gone() / v[k].clone())));
            if chosen.len() == want {
                break;
            }
        }
    }
    chosen
}

/// theta_L = ddbar r(., conj L) as a (1,0)-form.
fn levi_contraction(levi: &LeviData, l: &VectorField) -> Vec<Poly> {
    let n = l.n();
    (0..n)
        .map(|a| {
            let mut s = Poly::zero(levi.h[0][0].n());
            for b in 0..n {
                if !l.dz[b].is_zero() && !levi.h[a][b].is_zero() {
                    s = &s + &(&levi.h[a][b] * &l.dz[b].conj());
                }
            }
            s
        })
        .collect()
}

/// ddbar r(U, conj V) at the origin for holomorphic vectors U, V.
pub fn levi_pairing(h0: &[Vec<Gq>], u: &[Gq], v: &[Gq]) -> Gq {
    let mut s = gzero();
    for (i, row) in h0.iter().enumerate() {
        for (j, hij) in row.iter().enumerate() {
            s = s + hij.clone() * u[i].clone() * v[j].conj();
        }
    }
    s
}

/// Multiplicity vectors (l_{p+2}, ..., l_nu) with their c values, sorted by c.
fn multiplicity_groups(prefix_c: &[Q], max_len: usize) -> Vec<(Q, Vec<Vec<u32>>)> {
    let k = prefix_c.len();
    let mut found: BTreeMap<Q, Vec<Vec<u32>>> = BTreeMap::new();
    fn go(i: usize, k: usize, prefix_c: &[Q], cur: &mut Vec<u32>, used: usize, max_len: usize, out: &mut BTreeMap<Q, Vec<Vec<u32>>>) {
        if i == k {
            for last in 1..=(max_len - used) {
                if used + last < 3 {
                    continue;
                }
                let mut m = cur.clone();
                m.push(last as u32);
                if let Ok(c) = c_of_list(prefix_c, &m) {
                    out.entry(c).or_default().push(m);
                }
            }
            return;
        }
        for l in 0..=(max_len - used) {
            cur.push(l as u32);
            let s = prefix_c.iter().zip(cur.iter()).fold(Q::zero(), |a, (c, &x)| a + qi(x as i64) / c);
            if s < Q::one() {
                go(i + 1, k, prefix_c, cur, used + l, max_len, out);
            }
            cur.pop();
            if s >= Q::one() {
                break;
            }
        }
    }
    if max_len >= 1 {
        go(0, k, prefix_c, &mut Vec::new(), 0, max_len, &mut found);
    }
    found.into_iter().collect()
}

/// All conjugation patterns for a list with the given block multiplicities.
/// Blocks are listed outermost first: block 0 is the new field.
fn patterns(block_fields: &[usize], mult: &[u32]) -> Vec<Vec<Entry>> {
    let mut blocks: Vec<(usize, u32)> = Vec::new();
    for (b, &m) in mult.iter().enumerate().rev() {
        blocks.push((block_fields[b], m));
    }
    let total: u32 = mult.iter().sum();
    let mut out = Vec::with_capacity(1 << total);
    for bits in 0..(1u64 << total) {
        let mut list = Vec::with_capacity(total as usize);
        let mut pos = 0;
        for &(f, m) in &blocks {
            for _ in 0..m {
                list.push(Entry { field: f, conj: (bits >> (total - 1 - pos)) & 1 == 1 });
                pos += 1;
            }
        }
        out.push(list);
    }
    out
}

/// Commutator multitype and boundary system at `x0`.
pub fn compute_commutator_multitype(r: &Poly, x0: &[Gq], q: usize, caps: &BoundaryCaps) -> Result<BoundarySystem, BoundaryError> {
    let n = r.n();
    let rt = r.translate(x0);
    if !gq_is_zero(&rt.constant_term()) {
        return Err(BoundaryError::NotOnBoundary);
    }
    let levi = levi_matrix(&rt);
    let dr = levi.grad.clone();
    if dr.iter().all(|p| gq_is_zero(&p.constant_term())) {
        return Err(BoundaryError::DegenerateGradient);
    }
    let target = n + 1 - q;
    let h0: Vec<Vec<Gq>> = levi.h.iter().map(|row| row.iter().map(|p| p.constant_term()).collect()).collect();
    let mut degree_cap_exceeded = false;

    // Levi-nondegenerate directions among the tangent fields
    let tangent = kernel_basis(std::slice::from_ref(&dr), n);
    let tv: Vec<Vec<Gq>> = tangent.iter().map(|f| f.at_origin()).collect();
    let a_full: Vec<Vec<Gq>> = tv.iter().map(|u| tv.iter().map(|v| levi_pairing(&h0, u, v)).collect()).collect();
    let p_full = rank_gq(&a_full);
    let p = p_full.min(target - 1);
    let mut levi_fields = Vec::new();
    if p > 0 {
        let chosen = subsets(tangent.len(), p_full)
            .into_iter()
            .find(|s| {
                let m: Vec<Vec<Gq>> = s.iter().map(|&i| s.iter().map(|&j| a_full[i][j].clone()).collect()).collect();
                !gq_is_zero(&det_gq(&m))
            })
            .expect("Hermitian matrix of rank p has a nonsingular principal p-minor");
        for &i in chosen.iter().take(p) {
            levi_fields.push(tangent[i].clone());
        }
    }
    let mut entries = vec![Ext::int(1)];
    entries.extend(std::iter::repeat(Ext::int(2)).take(p));
    let mut functions: Vec<Poly> = Vec::new();
    let mut fields: Vec<VectorField> = Vec::new();
    let mut lists: Vec<ChosenList> = Vec::new();
    let mut branches = Vec::new();
    let mut evaluated = 0u64;
    let thetas: Vec<Vec<Poly>> = levi_fields.iter().map(|l| levi_contraction(&levi, l)).collect();

    while entries.len() < target {
        let mut forms = vec![dr.clone()];
        forms.extend(thetas.iter().cloned());
        forms.extend(functions.iter().map(gradient));
        let basis = kernel_basis(&forms, n);
        if basis.iter().any(|f| f.degree() > caps.degree_cap) {
            degree_cap_exceeded = true;
        }
        let mut cands = basis.clone();
        if caps.pair_sums {
            for i in 0..basis.len() {
                for j in i + 1..basis.len() {
                    cands.push(basis[i].add(&basis[j]));
                }
            }
        }
        let prefix_c: Vec<Q> = entries[1 + p..].iter().map(|e| e.finite().unwrap().clone()).collect();
        let groups = multiplicity_groups(&prefix_c, caps.max_list_len);
        let k_prev = fields.len();
        let mut all_fields = fields.clone();
        all_fields.extend(cands.iter().cloned());
        let mut cache = ListCache::new(&all_fields, &rt);
        let mut best: Option<(Q, Vec<Entry>, Vec<u32>, usize, Gq)> = None;
        'groups: for (c, mults) in &groups {
            let mut hits: Vec<(Vec<Entry>, Vec<u32>, usize, Gq)> = Vec::new();
            for ci in 0..cands.len() {
                let mut block_fields: Vec<usize> = (0..k_prev).collect();
                block_fields.push(k_prev + ci);
                for m in mults {
                    for list in patterns(&block_fields, m) {
                        if cache.evaluations > caps.budget {
                            return Err(BoundaryError::SearchBudgetExceeded {
                                index: entries.len() + 1,
                                partial: Weight::new(entries.clone()),
                            });
                        }
                        let v = cache.get(&list).constant_term();
                        if !gq_is_zero(&v) {
                            hits.push((list, m.clone(), ci, v));
                        }
                    }
                }
            }
            if let Some(h) = hits.into_iter().min_by(|a, b| a.0.cmp(&b.0)) {
                best = Some((c.clone(), h.0, h.1, h.2, h.3));
                break 'groups;
            }
        }
        evaluated += cache.evaluations;
        let Some((c, list, mult, ci, value)) = best else {
            // no admissible list within the caps: the entry is infinite and the construction stops
            while entries.len() < target {
                entries.push(Ext::Inf);
            }
            break;
        };
        let lnew = cands[ci].clone();
        let tail = cache.get(&list[1..]);
        let (f, gfn) = (tail.re(), tail.im());
        let (rnu, branch) = if !gq_is_zero(&lnew.apply(&f).constant_term()) {
            (f, "Re")
        } else if !gq_is_zero(&lnew.apply(&gfn).constant_term()) {
            (gfn, "Im")
        } else {
            unreachable!("a nonzero list value forces a nonzero first derivative of Re or Im")
        };
        let k_new = fields.len();
        let remap: Vec<Entry> = list
            .iter()
            .map(|e| Entry { field: if e.field >= k_prev { k_new } else { e.field }, conj: e.conj })
            .collect();
        fields.push(lnew);
        functions.push(rnu);
        branches.push(branch);
        lists.push(ChosenList { entries: remap, multiplicities: mult, c: c.clone(), value });
        entries.push(Ext::Fin(c));
    }
    Ok(BoundarySystem {
        n,
        q,
        base_point: x0.to_vec(),
        r: rt,
        rank: p,
        levi_fields,
        functions,
        fields,
        lists,
        multitype: Weight::new(entries),
        branches,
        degree_cap_exceeded,
        lists_evaluated: evaluated,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WedgeCheck {
    #[serde(serialize_with = "ser_gq")]
    pub minor_value: Gq,
    #[serde(serialize_with = "ser_gq")]
    pub det_levi: Gq,
    pub diagonal: Vec<String>,
    #[serde(serialize_with = "ser_gq")]
    pub product: Gq,
    /// Some ambient-coordinate wedge coefficient is nonzero at the base point.
    pub ambient_nonzero: bool,
    pub pass: bool,
}

/// Wedge coefficient of dr ^ dbar r ^ (ddbar r)^p ^ dr_{p+2} ^ ... ^ dr_nu on the frame
/// (N, L_2, ..., L_nu; conj N, conj L_2, ..., conj L_{p+1}) at the base point, against
/// det(A_p) * prod L_k(r_k).
pub fn boundary_wedge_check(b: &BoundarySystem) -> Result<WedgeCheck, BoundaryError> {
    if !b.is_complete() {
        return Err(BoundaryError::IncompleteSystem);
    }
    let n = b.n;
    let levi = levi_matrix(&b.r);
    let (h0, g0) = levi.at(&vec![gzero(); n]);
    let piv = g0.iter().position(|c| !gq_is_zero(c)).ok_or(BoundaryError::DegenerateGradient)?;
    let mut nvec = vec![gzero(); n];
    nvec[piv] = gone() / g0[piv].clone();
    let gb0: Vec<Gq> = (0..n).map(|j| b.r.dzb(j).constant_term()).collect();
    let lv: Vec<Vec<Gq>> = b.levi_fields.iter().map(|f| f.at_origin()).collect();
    let kv: Vec<Vec<Gq>> = b.fields.iter().map(|f| f.at_origin()).collect();
    let mut cols: Vec<Vec<Gq>> = vec![nvec.clone()];
    cols.extend(lv.iter().cloned());
    cols.extend(kv.iter().cloned());
    let anti: Vec<Vec<Gq>> = std::iter::once(nvec.clone()).chain(lv.iter().cloned()).collect();
    let dot = |form: &[Gq], v: &[Gq]| form.iter().zip(v).fold(gzero(), |a, (x, y)| a + x.clone() * y.clone());
    let conj_dot = |form: &[Gq], v: &[Gq]| form.iter().zip(v).fold(gzero(), |a, (x, y)| a + x.clone() * y.conj());
    let grads: Vec<Vec<Gq>> = b.functions.iter().map(|f| gradient(f).iter().map(|p| p.constant_term()).collect()).collect();
    // rows: Levi row for conj N, dr, Levi rows for conj L_b, then dr_k; first column is the border
    let mut rows: Vec<Vec<Gq>> = Vec::new();
    let levi_row = |w: &[Gq]| -> Vec<Gq> {
        let mut row = vec![conj_dot(&gb0, w)];
        row.extend(cols.iter().map(|v| levi_pairing(&h0, v, w)));
        row
    };
    rows.push(levi_row(&anti[0]));
    let mut drow = vec![gzero()];
    drow.extend(cols.iter().map(|v| dot(&g0, v)));
    rows.push(drow);
    for w in &anti[1..] {
        rows.push(levi_row(w));
    }
    for gk in &grads {
        let mut row = vec![gzero()];
        row.extend(cols.iter().map(|v| dot(gk, v)));
        rows.push(row);
    }
    let minor_value = det_gq(&rows);
    let a: Vec<Vec<Gq>> = lv.iter().map(|u| lv.iter().map(|v| levi_pairing(&h0, u, v)).collect()).collect();
    let det_levi = if a.is_empty() { gone() } else { det_gq(&a) };
    let diag: Vec<Gq> = b.fields.iter().zip(&b.functions).map(|(l, f)| l.apply(f).constant_term()).collect();
    let product = diag.iter().fold(det_levi.clone(), |acc, x| acc * x.clone());
    let ambient = crate::levi::wedge_coefficients(&b.r, &b.functions.iter().map(gradient).collect::<Vec<_>>(), b.q)
        .map(|cs| cs.iter().any(|c| !gq_is_zero(&c.value.constant_term())))
        .unwrap_or(false);
    Ok(WedgeCheck {
        pass: minor_value == product && !gq_is_zero(&product),
        minor_value,
        det_levi,
        diagonal: diag.iter().map(fmt_gq).collect(),
        product,
        ambient_nonzero: ambient,
    })
}

pub fn holomorphic_dimension(b: &BoundarySystem) -> Result<usize, BoundaryError> {
    if !b.is_complete() {
        return Err(BoundaryError::IncompleteSystem);
    }
    Ok(b.n - b.nu())
}

/// Triangular structure: L_j(r_i)(x0) is zero for j > i and nonzero for j = i.
pub fn triangular_ok(b: &BoundarySystem) -> bool {
    for (j, l) in b.fields.iter().enumerate() {
        for (i, f) in b.functions.iter().enumerate() {
            let v = l.apply(f).constant_term();
            if (j > i && !gq_is_zero(&v)) || (j == i && gq_is_zero(&v)) {
                return false;
            }
        }
        if !gq_is_zero(&contract_dr(&b.r, l).constant_term()) {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    pub center: Vec<Gq>,
    pub radius: Q,
    /// Points per axis (odd sizes include the centre).
    pub size: usize,
    /// Real axes to vary: (variable index, imaginary part?).
    pub axes: Vec<(usize, bool)>,
    /// Check upper semicontinuity across level-set boundaries.
    pub usc_check: bool,
}

impl GridSpec {
    /// Real and imaginary parts of z2 around the centre.
    pub fn plane(center: Vec<Gq>, radius: Q, size: usize) -> GridSpec {
        GridSpec { center, radius, size, axes: vec![(1, false), (1, true)], usc_check: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSet {
    pub multitype: Weight,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSetScan {
    pub points: usize,
    /// Ascending in the lexicographic order; S_1 first.
    pub level_sets: Vec<LevelSet>,
    pub n_levels: usize,
    pub s1_fraction: f64,
    /// Every S_N sample is a common zero of the centre's boundary-system functions.
    pub top_in_zero_set: bool,
    pub centre_multitype: Weight,
    pub usc_violations: usize,
    pub search_failures: usize,
    #[serde(skip)]
    pub assignments: Vec<(Vec<Gq>, Weight)>,
}

fn grid_points(r: &Poly, slope: &Q, grid: &GridSpec) -> Vec<Vec<Gq>> {
    let n = r.n();
    let k = grid.size.max(1);
    let step = if k > 1 { qi(2) * &grid.radius / qi((k - 1) as i64) } else { Q::zero() };
    let total = k.pow(grid.axes.len() as u32);
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut x = grid.center.clone();
        let mut rem = idx;
        for &(var, imag) in &grid.axes {
            let t = rem % k;
            rem /= k;
            let off = -&grid.radius + &step * qi(t as i64);
            let d = if imag { g(Q::zero(), off) } else { gr(off) };
            x[var] = &x[var] + &d;
        }
        debug_assert_eq!(x.len(), n);
        out.push(project_to_boundary(r, slope, &x));
    }
    out
}

/// Commutator multitype over a grid of boundary points, grouped into level sets.
pub fn multitype_levelset_scan(r: &Poly, q: usize, grid: &GridSpec, caps: &BoundaryCaps) -> Result<LevelSetScan, BoundaryError> {
    let slope = graph_slope(r).ok_or(BoundaryError::NonGraphDomain)?;
    let pts = grid_points(r, &slope, grid);
    let centre = project_to_boundary(r, &slope, &grid.center);
    let centre_sys = compute_commutator_multitype(r, &centre, q, caps)?;
    let mut failures = 0;
    let mut assignments = Vec::with_capacity(pts.len());
    let mut cache: HashMap<Vec<String>, Weight> = HashMap::new();
    let mut type_at = |x: &Vec<Gq>, failures: &mut usize| -> Weight {
        let key: Vec<String> = x.iter().map(fmt_gq).collect();
        if let Some(w) = cache.get(&key) {
            return w.clone();
        }
        let w = match compute_commutator_multitype(r, x, q, caps) {
            Ok(b) => b.multitype,
            Err(BoundaryError::SearchBudgetExceeded { partial, .. }) => {
                *failures += 1;
                partial
            }
            Err(_) => {
                *failures += 1;
                Weight::new(vec![])
            }
        };
        cache.insert(key, w.clone());
        w
    };
    for x in &pts {
        let w = type_at(x, &mut failures);
        assignments.push((x.clone(), w));
    }
    let mut groups: BTreeMap<Vec<Ext>, usize> = BTreeMap::new();
    for (_, w) in &assignments {
        *groups.entry(w.entries().to_vec()).or_default() += 1;
    }
    let level_sets: Vec<LevelSet> = groups.iter().map(|(k, c)| LevelSet { multitype: Weight::new(k.clone()), count: *c }).collect();
    let top = level_sets.last().map(|l| l.multitype.clone()).unwrap_or_else(|| Weight::new(vec![]));
    let top_in_zero_set = assignments
        .iter()
        .filter(|(_, w)| *w == top)
        .all(|(x, _)| centre_sys.values_at(x).iter().all(gq_is_zero));
    let s1 = level_sets.first().map(|l| l.count).unwrap_or(0);
    let mut usc_violations = 0;
    if grid.usc_check && grid.size > 1 {
        let k = grid.size;
        let dims = grid.axes.len();
        for idx in 0..assignments.len() {
            for d in 0..dims {
                let stride = k.pow(d as u32);
                let coord = (idx / stride) % k;
                for nb in [coord.checked_sub(1), if coord + 1 < k { Some(coord + 1) } else { None }].into_iter().flatten() {
                    let j = idx - coord * stride + nb * stride;
                    let (x, wx) = &assignments[idx];
                    let (y, wy) = &assignments[j];
                    if wy.entries() <= wx.entries() {
                        continue;
                    }
                    // the higher value must not persist all the way into x
                    let mut persists = true;
                    for e in 1..=4 {
                        let f = crate::num::q(1, 1 << e);
                        let mid: Vec<Gq> = x.iter().zip(y).map(|(a, b)| a + (b - a) * gr(f.clone())).collect();
                        let mid = project_to_boundary(r, &slope, &mid);
                        if type_at(&mid, &mut failures).entries() < wy.entries() {
                            persists = false;
                            break;
                        }
                    }
                    if persists {
                        usc_violations += 1;
                    }
                }
            }
        }
    }
    Ok(LevelSetScan {
        points: assignments.len(),
        n_levels: level_sets.len(),
        s1_fraction: s1 as f64 / assignments.len().max(1) as f64,
        level_sets,
        top_in_zero_set,
        centre_multitype: centre_sys.multitype.clone(),
        usc_violations,
        search_failures: failures,
        assignments,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldJson {
    pub dz: Vec<String>,
    pub dzb: Vec<String>,
}

impl From<&VectorField> for FieldJson {
    fn from(f: &VectorField) -> Self {
        FieldJson { dz: f.dz.iter().map(|p| p.to_string()).collect(), dzb: f.dzb.iter().map(|p| p.to_string()).collect() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundarySystemJson {
    pub base_point: Vec<String>,
    pub rank: usize,
    pub nu: usize,
    pub multitype: Weight,
    pub functions: Vec<String>,
    pub branches: Vec<&'static str>,
    pub levi_fields: Vec<FieldJson>,
    pub fields: Vec<FieldJson>,
    pub lists: Vec<ChosenList>,
    pub degree_cap_exceeded: bool,
    pub lists_evaluated: u64,
    pub complete: bool,
}

impl From<&BoundarySystem> for BoundarySystemJson {
    fn from(b: &BoundarySystem) -> Self {
        BoundarySystemJson {
            base_point: b.base_point.iter().map(fmt_gq).collect(),
            rank: b.rank,
            nu: b.nu(),
            multitype: b.multitype.clone(),
            functions: b.functions.iter().map(|f| f.to_string()).collect(),
            branches: b.branches.clone(),
            levi_fields: b.levi_fields.iter().map(FieldJson::from).collect(),
            fields: b.fields.iter().map(FieldJson::from).collect(),
            lists: b.lists.clone(),
            degree_cap_exceeded: b.degree_cap_exceeded,
            lists_evaluated: b.lists_evaluated,
            complete: b.is_complete(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;

    fn p(s: &str, n: usize) -> Poly {
        parse_poly(s, n).unwrap()
    }

    fn model_field() -> VectorField {
        // tangent to Re z1 + |z2|^4
        VectorField::holomorphic(vec![p("-4*z2*zb2^2", 2), Poly::one(2)])
    }

    #[test]
    fn bracket_examples() {
        let d2 = VectorField::coordinate(2, 1);
        assert!(lie_bracket(&d2, &d2.conj()).is_zero());
        let l = model_field();
        let b = lie_bracket(&l, &l.conj());
        // hand computation: [L, conj L] = 8|z2|^2 d/dz1 - 8|z2|^2 d/dzbar1
        assert_eq!(b.dz[0], p("8*z2*zb2", 2));
        assert_eq!(b.dzb[0], p("-8*z2*zb2", 2));
        assert!(b.dz[1].is_zero() && b.dzb[1].is_zero());
        let f = p("z2^2*zb1", 2);
        let fl = VectorField::holomorphic(vec![Poly::zero(2), f.clone()]);
        let br = lie_bracket(&fl, &d2);
        assert_eq!(br.dz[1], -&f.dz(1));
    }

    #[test]
    fn list_derivative_examples() {
        let r = p("Re(z1) + abs2(z2)^2", 2);
        let fields = vec![model_field()];
        let e = |c: bool| Entry { field: 0, conj: c };
        let v = list_derivative(&fields, &[e(false), e(true), e(false), e(true)], &r).unwrap();
        // L conj(L) of dr([L, conj L]) = L conj(L) (4 z2 zb2) = 4
        assert_eq!(v, Poly::constant(2, gi(4)));
        let v = list_derivative(&fields, &[e(true), e(false), e(false)], &r).unwrap();
        assert!(v.is_zero());
        for bits in 0..8u32 {
            let l: Vec<Entry> = (0..3).map(|k| e(bits >> k & 1 == 1)).collect();
            assert!(gq_is_zero(&list_derivative(&fields, &l, &r).unwrap().constant_term()));
        }
        assert_eq!(list_derivative(&fields, &[e(false), e(true)], &r), Err(BoundaryError::ListTooShort(2)));
    }

    #[test]
    fn c_examples() {
        assert_eq!(c_of_list(&[], &[4]).unwrap(), qi(4));
        assert_eq!(c_of_list(&[qi(4)], &[2, 2]).unwrap(), qi(4));
        assert_eq!(c_of_list(&[qi(3)], &[2, 1]).unwrap(), qi(3));
        assert_eq!(c_of_list(&[qi(3)], &[3, 1]), Err(BoundaryError::NotAdmissible));
        assert_eq!(c_of_list(&[qi(3)], &[1, 0]), Err(BoundaryError::NotAdmissible));
    }

    #[test]
    fn commutator_examples() {
        let caps = BoundaryCaps::default();
        let b = compute_commutator_multitype(&p("Re(z1) + abs2(z2)", 2), &[gzero(), gzero()], 1, &caps).unwrap();
        assert_eq!(b.multitype, Weight::ints(&[1, 2]));
        assert_eq!(b.levi_fields.len(), 1);
        let b = compute_commutator_multitype(&p("Re(z1) + abs2(z2)^2", 2), &[gzero(), gzero()], 1, &caps).unwrap();
        assert_eq!(b.multitype, Weight::ints(&[1, 4]));
        assert_eq!(b.functions.len(), 1);
        assert!(triangular_ok(&b));
        let r3 = p("Re(z1) + abs2(z2)^2 + abs2(z3)^3", 3);
        let b = compute_commutator_multitype(&r3, &[gzero(), gzero(), gzero()], 1, &caps).unwrap();
        assert_eq!(b.multitype, Weight::ints(&[1, 4, 6]));
        assert_eq!(holomorphic_dimension(&b).unwrap(), 0);
        let c = boundary_wedge_check(&b).unwrap();
        assert!(c.pass, "{:?}", c);
    }

    #[test]
    fn wedge_check_model_and_corruption() {
        let caps = BoundaryCaps::default();
        let b = compute_commutator_multitype(&p("Re(z1) + abs2(z2)^2", 2), &[gzero(), gzero()], 1, &caps).unwrap();
        let c = boundary_wedge_check(&b).unwrap();
        assert!(c.pass && c.ambient_nonzero);
        assert_eq!(c.minor_value, c.product);
        let sp = compute_commutator_multitype(&p("Re(z1) + abs2(z2) + abs2(z3)", 3), &vec![gzero(); 3], 1, &caps).unwrap();
        let c = boundary_wedge_check(&sp).unwrap();
        assert!(c.pass);
        assert_eq!(c.product, c.det_levi);
        let mut bad = b.clone();
        bad.fields[0] = VectorField::coordinate(2, 0).scale(&gi(0)).add(&VectorField::holomorphic(vec![
            Poly::zero(2),
            p("z2", 2),
        ]));
        let c = boundary_wedge_check(&bad).unwrap();
        assert!(!c.pass);
    }

    #[test]
    fn holomorphic_dimension_n3_nu2() {
        let caps = BoundaryCaps::default();
        let b = compute_commutator_multitype(&p("Re(z1) + abs2(z2)^2 + abs2(z3)^3", 3), &vec![gzero(); 3], 2, &caps).unwrap();
        assert_eq!(b.multitype, Weight::ints(&[1, 4]));
        assert_eq!(holomorphic_dimension(&b).unwrap(), 1);
    }

    #[test]
    fn infinite_entry_when_no_list_survives() {
        let caps = BoundaryCaps { max_list_len: 6, ..BoundaryCaps::default() };
        let b = compute_commutator_multitype(&p("Re(z1) + abs2(z2)^2", 3), &vec![gzero(); 3], 1, &caps).unwrap();
        assert_eq!(b.multitype, Weight::new(vec![Ext::int(1), Ext::int(4), Ext::Inf]));
        assert!(holomorphic_dimension(&b).is_err());
    }

    #[test]
    fn level_sets_model() {
        let caps = BoundaryCaps::default();
        let g = GridSpec::plane(vec![gzero(), gzero()], q(1, 2), 5);
        let s = multitype_levelset_scan(&p("Re(z1) + abs2(z2)^2", 2), 1, &g, &caps).unwrap();
        assert_eq!(s.n_levels, 2);
        assert_eq!(s.level_sets[0].multitype, Weight::ints(&[1, 2]));
        assert_eq!(s.level_sets[1].count, 1);
        assert!(s.top_in_zero_set);
        assert_eq!(s.usc_violations, 0);
        let sp = multitype_levelset_scan(&p("Re(z1) + abs2(z2)", 2), 1, &g, &caps).unwrap();
        assert_eq!(sp.n_levels, 1);
        assert!(matches!(
            multitype_levelset_scan(&p("abs2(z1) + Re(z2)", 2), 1, &g, &caps),
            Err(BoundaryError::NonGraphDomain)
        ));
    }
}
