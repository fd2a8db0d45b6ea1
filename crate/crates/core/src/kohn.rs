//! The multiplier ideal algorithm with radical certificates and an epsilon ledger.

use crate::boundary::{compute_commutator_multitype, BoundaryCaps};
use crate::dangelo::{type_lower_bound, ProbeCaps};
use crate::levi::{gradient, graph_slope, pseudoconvexity_check, subsets, wedge_coefficients, Pseudoconvexity, SampleSpec};
use crate::num::*;
use crate::parse::DomainSpec;
use crate::poly::{Mono, Poly};
use crate::truncation::ser_q;
use crate::weights::Weight;
use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    DefiningFunction,
    WedgeMinor { holo: Vec<usize>, anti: Vec<usize> },
    JacobianMinor { sources: Vec<usize>, holo: Vec<usize>, anti: Vec<usize> },
    RadicalRoot { m: u32, of: Vec<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    WeightedDomination,
    ShellSampling,
}

/// |g|^m <= C * sum |f_i| near the base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadicalCertificate {
    pub m: u32,
    pub constant: f64,
    pub method: CertMethod,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Generator {
    pub id: usize,
    pub poly: Poly,
    pub provenance: Provenance,
    #[serde(serialize_with = "ser_q")]
    pub epsilon: Q,
    pub rule: String,
    pub step: usize,
    pub certificate: Option<RadicalCertificate>,
}

/// Generators live in coordinates centred at the base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierIdeal {
    pub step: usize,
    pub n: usize,
    pub q: usize,
    #[serde(skip)]
    pub base_point: Vec<Gq>,
    pub generators: Vec<Generator>,
}

impl MultiplierIdeal {
    fn contains(&self, p: &Poly) -> bool {
        let m = p.monic();
        self.generators.iter().any(|g| g.poly.monic() == m)
    }

    fn push(&mut self, poly: Poly, provenance: Provenance, epsilon: Q, rule: &str, certificate: Option<RadicalCertificate>) -> usize {
        let id = self.generators.len();
        self.generators.push(Generator { id, poly, provenance, epsilon, rule: rule.into(), step: self.step, certificate });
        id
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateOutcome {
    pub candidate: Poly,
    pub admitted: bool,
    pub certificate: Option<RadicalCertificate>,
    pub estimate: Option<f64>,
    pub failing_shell: Option<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub added: Vec<usize>,
    pub candidates: Vec<CandidateOutcome>,
    pub unit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Terminated,
    StepLimit,
    BudgetExhausted,
}

#[derive(Clone, Debug, Serialize)]
pub struct KohnTrace {
    pub status: Status,
    pub terminated_at: Option<usize>,
    #[serde(serialize_with = "ser_opt_q")]
    pub epsilon: Option<Q>,
    pub witness: Option<usize>,
    pub m_cap: u32,
    pub steps: Vec<StepRecord>,
    pub ideal: MultiplierIdeal,
    pub level_sets: Option<usize>,
    /// terminated_at <= level_sets, when both are known.
    pub bound_holds: Option<bool>,
    pub work: u64,
}

pub fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&fmt_q(v)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KohnError {
    #[error("domain is not pseudoconvex: Levi form is {value} at {point:?} in direction {vector:?}")]
    NotPseudoconvex { point: Vec<String>, vector: Vec<String>, value: String },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("base point is not on the boundary")]
    NotOnBoundary,
}

#[derive(Clone, Debug)]
pub struct ShellSpec {
    pub j_min: u32,
    pub j_max: u32,
    pub samples: usize,
    pub seed: u64,
    /// Admit when the fitted exponent plus this margin is at most the cap.
    pub margin: f64,
}

impl Default for ShellSpec {
    fn default() -> Self {
        ShellSpec { j_min: 4, j_max: 20, samples: 48, seed: 0x5eed, margin: 0.5 }
    }
}

#[derive(Clone, Debug)]
pub struct KohnConfig {
    pub max_steps: usize,
    /// Radical exponent cap; derived from the type estimate when unset.
    pub m_cap: Option<u32>,
    /// Degree cap for monomial radical candidates.
    pub degree_cap: u32,
    /// Work units: minors computed plus candidate certifications.
    pub budget: u64,
    pub shell: ShellSpec,
    pub heuristic: bool,
    pub boundary_caps: BoundaryCaps,
    /// Number of level sets, when known, for the termination-step check.
    pub level_sets: Option<usize>,
}

impl Default for KohnConfig {
    fn default() -> Self {
        KohnConfig {
            max_steps: 6,
            m_cap: None,
            degree_cap: 2,
            budget: 200_000,
            shell: ShellSpec::default(),
            heuristic: true,
            boundary_caps: BoundaryCaps::default(),
            level_sets: None,
        }
    }
}

/// 1/4 * 1 / max{([t]-1)^(n-q), [t]+1}.
pub fn epsilon_bound(t: &Q, n: usize, q: usize) -> Result<Q, KohnError> {
    check_range(t, n, q)?;
    Ok(q_frac(1, 4) / Q::from_integer(m_cap_big(t, n, q)))
}

fn q_frac(a: i64, b: i64) -> Q {
    crate::num::q(a, b)
}

fn check_range(t: &Q, n: usize, q: usize) -> Result<(), KohnError> {
    if *t < qi(2) {
        return Err(KohnError::InvalidRange(format!("t = {} is below 2", fmt_q(t))));
    }
    if n < 2 || q < 1 || q > n - 1 {
        return Err(KohnError::InvalidRange(format!("need 1 <= q <= n-1, got n = {}, q = {}", n, q)));
    }
    Ok(())
}

fn m_cap_big(t: &Q, n: usize, q: usize) -> num_bigint::BigInt {
    let ft = floor_q(t);
    let a = num_traits::pow(&ft - 1, n - q);
    let b = &ft + 1;
    if a > b {
        a
    } else {
        b
    }
}

/// deg r~ <= [t]+1, deg r~_k <= [([t]+1)/3]+1, wedge degree <= ([t]-1)^(n-q), and the radical cap.
pub fn degree_bounds(t: &Q, n: usize, q: usize) -> Result<[num_bigint::BigInt; 4], KohnError> {
    check_range(t, n, q)?;
    let ft = floor_q(t);
    Ok([&ft + 1, (&ft + 1) / 3 + 1, num_traits::pow(&ft - 1, n - q), m_cap_big(t, n, q)])
}

pub fn m_cap_for(t: &Q, n: usize, q: usize) -> u32 {
    m_cap_big(t, n, q).to_u32().unwrap_or(u32::MAX)
}

/// A generator with a nonzero value at the base point, preferring the largest epsilon.
pub fn detect_unit(ideal: &MultiplierIdeal) -> Option<usize> {
    ideal
        .generators
        .iter()
        .filter(|g| !gq_is_zero(&g.poly.constant_term()))
        .max_by(|a, b| a.epsilon.cmp(&b.epsilon).then(b.id.cmp(&a.id)))
        .map(|g| g.id)
}

/// Fast f64 evaluation of a fixed polynomial.
struct FPoly {
    terms: Vec<(Complex<f64>, Vec<(usize, u32, u32)>)>,
}

impl FPoly {
    fn new(p: &Poly) -> FPoly {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let f = (0..p.n()).filter(|&j| m.a[j] + m.b[j] > 0).map(|j| (j, m.a[j], m.b[j])).collect();
                (gq_to_c64(c), f)
            })
            .collect();
        FPoly { terms }
    }

    fn eval(&self, x: &[Complex<f64>]) -> Complex<f64> {
        let mut s = Complex::new(0.0, 0.0);
        for (c, f) in &self.terms {
            let mut t = *c;
            for &(j, a, b) in f {
                if a > 0 {
                    t *= x[j].powu(a);
                }
                if b > 0 {
                    t *= x[j].conj().powu(b);
                }
            }
            s += t;
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellEstimate {
    /// Exponent extrapolated to radius 0 from the per-shell maxima.
    pub fitted: f64,
    pub m: u32,
    pub constant: f64,
    pub failing_shell: Option<u32>,
    pub per_shell: Vec<f64>,
}

fn sample_points(n: usize, spec: &ShellSpec, r: Option<(&Poly, f64)>) -> Vec<(u32, Vec<Complex<f64>>, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fr = r.map(|(p, s)| (FPoly::new(p), s));
    let mut out = Vec::new();
    let supports = (1usize << n) - 1;
    for j in spec.j_min..=spec.j_max {
        let rho = 0.5f64.powi(j as i32);
        for k in 0..spec.samples {
            // cycle through coordinate subspaces so common zero sets are hit exactly
            let support = k % supports + 1;
            let mut u: Vec<Complex<f64>> = (0..n)
                .map(|i| {
                    let c = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if support >> i & 1 == 1 {
                        c
                    } else {
                        Complex::new(0.0, 0.0)
                    }
                })
                .collect();
            let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
            for c in u.iter_mut() {
                *c *= rho / norm;
            }
            if let Some((fr, slope)) = &fr {
                // r is affine in Re z1 for graph-like r, so one step lands on the boundary
                let mut b = u.clone();
                let v = fr.eval(&b).re;
                b[0].re -= v / slope;
                out.push((j, b, true));
            }
            out.push((j, u, false));
        }
    }
    out
}

/// Sampled Lojasiewicz exponent of g against sum |f_i| on shells of radius 2^-j.
/// `r_index` marks the defining function, dropped on boundary samples where it vanishes.
pub fn shell_estimate(g: &Poly, fs: &[Poly], r_index: Option<usize>, defining: Option<&Poly>, spec: &ShellSpec) -> ShellEstimate {
    let n = g.n();
    let slope = defining.and_then(|r| graph_slope(r).map(|s| (r, q_to_f64(&s))));
    let pts = sample_points(n, spec, slope);
    let fg = FPoly::new(g);
    let ff: Vec<FPoly> = fs.iter().map(FPoly::new).collect();
    let shells = (spec.j_max - spec.j_min + 1) as usize;
    let mut per = vec![f64::NEG_INFINITY; shells];
    let mut failing = None;
    let mut constant = 0.0f64;
    let mut cache: Vec<(u32, f64, f64)> = Vec::with_capacity(pts.len());
    for (j, x, on_boundary) in &pts {
        let gv = fg.eval(x).norm();
        let fv: f64 = ff
            .iter()
            .enumerate()
            .filter(|(i, _)| !(*on_boundary && Some(*i) == r_index))
            .map(|(_, f)| f.eval(x).norm())
            .sum();
        let k = (*j - spec.j_min) as usize;
        if gv <= 1e-300 || gv >= 1.0 {
            continue;
        }
        if fv <= 1e-300 {
            if failing.is_none() {
                failing = Some(*j);
            }
            per[k] = f64::INFINITY;
            continue;
        }
        let ratio = fv.ln() / gv.ln();
        if ratio > per[k] {
            per[k] = ratio;
        }
        cache.push((*j, gv, fv));
    }
    let pts_fit: Vec<(f64, f64)> = per
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(k, v)| (1.0 / (k as f64 + spec.j_min as f64), *v))
        .collect();
    let fitted = if failing.is_some() || pts_fit.len() < 3 {
        f64::INFINITY
    } else {
        let len = pts_fit.len() as f64;
        let mx = pts_fit.iter().map(|p| p.0).sum::<f64>() / len;
        let my = pts_fit.iter().map(|p| p.1).sum::<f64>() / len;
        let sxy: f64 = pts_fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts_fit.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        my - (sxy / sxx) * mx
    };
    let m = if fitted.is_finite() { ((fitted - 0.05).ceil().max(1.0)) as u32 } else { u32::MAX };
    if fitted.is_finite() {
        for (_, gv, fv) in &cache {
            constant = constant.max(gv.powi(m as i32) / fv);
        }
    }
    ShellEstimate { fitted, m, constant, failing_shell: failing, per_shell: per }
}

/// Lower bound shape of a generator near the origin.
enum Bound {
    /// |f| = |c| |z|^gamma
    Monomial(Vec<u32>, f64),
    /// f >= c * rho, rho = sum |z_j|^(2 d_j); the weight has 2 d_j in those slots and inf elsewhere
    Decoupled(Weight, f64),
}

fn bound_of(f: &Poly) -> Option<Bound> {
    let n = f.n();
    if f.len() == 1 {
        let (m, c) = f.terms().next().unwrap();
        if m.is_constant() {
            return None;
        }
        return Some(Bound::Monomial((0..n).map(|j| m.a[j] + m.b[j]).collect(), gq_to_c64(c).norm()));
    }
    // pure moduli c (z_j zbar_j)^d of one sign, lowest d per variable
    let mut lead: Vec<Option<(u32, Q)>> = vec![None; n];
    let mut sign = 0i8;
    for (m, c) in f.terms() {
        let support: Vec<usize> = (0..n).filter(|&j| m.a[j] + m.b[j] > 0).collect();
        if support.len() == 1 && m.a[support[0]] == m.b[support[0]] && is_real(c) {
            let j = support[0];
            let s = if c.re.is_positive() { 1 } else { -1 };
            if sign != 0 && s != sign {
                continue;
            }
            let d = m.a[j];
            if lead[j].as_ref().map_or(true, |(d0, _)| d < *d0) {
                lead[j] = Some((d, c.re.abs()));
                sign = s;
            }
        }
    }
    if lead.iter().all(|l| l.is_none()) {
        return None;
    }
    let w = Weight::new(lead.iter().map(|l| l.as_ref().map_or(Ext::Inf, |(d, _)| Ext::int(2 * *d as i64))).collect());
    let lead_monos: Vec<Mono> = (0..n)
        .filter_map(|j| {
            lead[j].as_ref().map(|(d, _)| {
                let mut a = vec![0; n];
                a[j] = *d;
                Mono::new(a.clone(), a)
            })
        })
        .collect();
    for (m, _) in f.terms() {
        if !lead_monos.contains(m) && m.weighted_degree(&w) <= Q::one() {
            return None;
        }
    }
    let cmin = lead.iter().flatten().map(|(_, c)| q_to_f64(c)).fold(f64::INFINITY, f64::min);
    Some(Bound::Decoupled(w, cmin))
}

/// Smallest m with m * gamma_t >= gamma componentwise.
fn monomial_exponent(t: &Mono, gamma: &[u32]) -> Option<u32> {
    let mut m = 1u32;
    for (j, &e) in gamma.iter().enumerate() {
        let have = t.a[j] + t.b[j];
        if e == 0 {
            continue;
        }
        if have == 0 {
            return None;
        }
        m = m.max(e.div_ceil(have));
    }
    Some(m)
}

/// Exact certificate by weighted domination, term by term, against generators with a known lower bound.
pub fn exact_certificate(g: &Poly, fs: &[Poly]) -> Option<(u32, Vec<usize>, f64)> {
    if g.is_zero() || !gq_is_zero(&g.constant_term()) {
        return None;
    }
    let bounds: Vec<(usize, Bound)> = fs.iter().enumerate().filter_map(|(i, f)| bound_of(f).map(|b| (i, b))).collect();
    let mut m_all = 1u32;
    let mut used = Vec::new();
    let mut cmin = f64::INFINITY;
    for (t, _) in g.terms() {
        let mut best: Option<(u32, usize, f64)> = None;
        for (i, b) in &bounds {
            let cand = match b {
                Bound::Monomial(gamma, c) => monomial_exponent(t, gamma).map(|m| (m, *c)),
                Bound::Decoupled(w, c) => {
                    let d = t.weighted_degree(w);
                    if d.is_positive() {
                        let m = (Q::one() / d).ceil().to_integer().to_u32()?;
                        Some((m.max(1), *c))
                    } else {
                        None
                    }
                }
            };
            if let Some((m, c)) = cand {
                if best.as_ref().map_or(true, |(bm, _, _)| m < *bm) {
                    best = Some((m, *i, c));
                }
            }
        }
        let (m, i, c) = best?;
        m_all = m_all.max(m);
        cmin = cmin.min(c);
        if !used.contains(&i) {
            used.push(i);
        }
    }
    used.sort();
    let coeff_sum: f64 = g.terms().map(|(_, c)| gq_to_c64(c).norm()).sum();
    Some((m_all, used, coeff_sum.powi(m_all as i32) / cmin))
}

/// Admit candidates by certificate; repeated until nothing new is admitted.
pub fn radical_close(ideal: &mut MultiplierIdeal, candidates: &[Poly], m_cap: u32, cfg: &KohnConfig, work: &mut u64) -> Vec<CandidateOutcome> {
    let mut outcomes: Vec<CandidateOutcome> = Vec::new();
    let mut pending: Vec<Poly> = Vec::new();
    for c in candidates {
        if c.is_zero() || !gq_is_zero(&c.constant_term()) || ideal.contains(c) || pending.iter().any(|p| p.monic() == c.monic()) {
            continue;
        }
        pending.push(c.clone());
    }
    let r = ideal.generators.iter().find(|g| g.provenance == Provenance::DefiningFunction).map(|g| g.poly.clone());
    for _round in 0..4 {
        let mut admitted_any = false;
        let mut still = Vec::new();
        for g in pending {
            let fs: Vec<Poly> = ideal.generators.iter().map(|x| x.poly.clone()).collect();
            *work += fs.len() as u64;
            let mut outcome = CandidateOutcome { candidate: g.clone(), admitted: false, certificate: None, estimate: None, failing_shell: None };
            let mut admitted: Option<(RadicalCertificate, Vec<usize>)> = None;
            if let Some((m, used, c)) = exact_certificate(&g, &fs) {
                if m <= m_cap {
                    admitted = Some((
                        RadicalCertificate { m, constant: c, method: CertMethod::WeightedDomination, note: "exact term-wise domination".into() },
                        used,
                    ));
                }
            }
            if admitted.is_none() && cfg.heuristic {
                let r_index = ideal.generators.iter().position(|x| x.provenance == Provenance::DefiningFunction);
                let est = shell_estimate(&g, &fs, r_index, r.as_ref(), &cfg.shell);
                outcome.estimate = est.fitted.is_finite().then_some(est.fitted);
                outcome.failing_shell = est.failing_shell;
                if est.fitted.is_finite() && est.fitted + cfg.shell.margin <= m_cap as f64 {
                    let m = est.m.min(m_cap);
                    admitted = Some((
                        RadicalCertificate {
                            m,
                            constant: est.constant,
                            method: CertMethod::ShellSampling,
                            note: format!("heuristic: fitted exponent {:.3} on shells 2^-{}..2^-{}", est.fitted, cfg.shell.j_min, cfg.shell.j_max),
                        },
                        (0..fs.len()).collect(),
                    ));
                }
            }
            match admitted {
                Some((cert, used)) => {
                    let emin = used.iter().map(|&i| ideal.generators[i].epsilon.clone()).min().unwrap();
                    let eps = emin / qi(cert.m as i64);
                    outcome.admitted = true;
                    outcome.certificate = Some(cert.clone());
                    ideal.push(g.clone(), Provenance::RadicalRoot { m: cert.m, of: used }, eps, "radical: eps/m", Some(cert));
                    admitted_any = true;
                    outcomes.retain(|o| o.candidate != g);
                    outcomes.push(outcome);
                }
                None => {
                    outcomes.retain(|o| o.candidate != g);
                    outcomes.push(outcome);
                    still.push(g);
                }
            }
        }
        pending = still;
        if !admitted_any || pending.is_empty() {
            break;
        }
    }
    outcomes
}

/// Radical candidates: boundary-system functions, Re/Im of their first derivatives,
/// Re/Im of holomorphic monomials in the tangential variables.
pub fn candidate_set(r: &Poly, functions: &[Poly], degree_cap: u32) -> Vec<Poly> {
    let n = r.n();
    let mut out: Vec<Poly> = Vec::new();
    let push = |p: Poly, out: &mut Vec<Poly>| {
        if !p.is_zero() && gq_is_zero(&p.constant_term()) {
            let m = p.monic();
            if !out.iter().any(|x| x.monic() == m) {
                out.push(p);
            }
        }
    };
    for f in functions {
        push(f.clone(), &mut out);
    }
    for f in std::iter::once(r).chain(functions) {
        for j in 0..n {
            let d = f.dz(j);
            push(d.re(), &mut out);
            push(d.im(), &mut out);
        }
    }
    let normal = (0..n).find(|&j| !gq_is_zero(&r.dz(j).constant_term())).unwrap_or(0);
    let tang: Vec<usize> = (0..n).filter(|&j| j != normal).collect();
    for deg in 1..=degree_cap {
        for exps in compositions(deg, tang.len()) {
            let mut a = vec![0; n];
            for (k, &j) in tang.iter().enumerate() {
                a[j] = exps[k];
            }
            let m = Poly::monomial(Mono::new(a, vec![0; n]), gone());
            push(m.re(), &mut out);
            push(m.im(), &mut out);
        }
    }
    out
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Step 1: r and the wedge minors, followed by radical closure.
pub fn init_ideal(r: &Poly, q: usize, x0: &[Gq]) -> Result<MultiplierIdeal, KohnError> {
    let rt = r.translate(x0);
    if !gq_is_zero(&rt.constant_term()) {
        return Err(KohnError::NotOnBoundary);
    }
    if let Pseudoconvexity::Fail { point, vector, value } = pseudoconvexity_check(r, x0, &SampleSpec::default()) {
        return Err(KohnError::NotPseudoconvex { point, vector, value });
    }
    let mut ideal = MultiplierIdeal { step: 1, n: r.n(), q, base_point: x0.to_vec(), generators: Vec::new() };
    ideal.push(rt.clone(), Provenance::DefiningFunction, Q::one(), "defining function: 1", None);
    let minors = wedge_coefficients(&rt, &[], q).map_err(|e| KohnError::InvalidRange(e.to_string()))?;
    for c in minors {
        if !ideal.contains(&c.value) {
            ideal.push(c.value, Provenance::WedgeMinor { holo: c.holo, anti: c.anti }, q_frac(1, 2), "levi minor: 1/2", None);
        }
    }
    Ok(ideal)
}

/// Step k+1: Jacobian minors for the given gradient sources, epsilon min(1/2, eps_f/2).
pub fn step(ideal: &MultiplierIdeal, sources: &[Vec<usize>], work: &mut u64, budget: u64) -> Result<MultiplierIdeal, MultiplierIdeal> {
    let mut next = ideal.clone();
    next.step += 1;
    if sources.is_empty() {
        return Ok(next);
    }
    let r = ideal.generators.iter().find(|g| g.provenance == Provenance::DefiningFunction).unwrap().poly.clone();
    for src in sources {
        if *work > budget {
            return Err(next);
        }
        let grads: Vec<Vec<Poly>> = src.iter().map(|&i| gradient(&ideal.generators[i].poly)).collect();
        let Ok(minors) = wedge_coefficients(&r, &grads, ideal.q) else { continue };
        *work += 1 + minors.len() as u64;
        let eps = src
            .iter()
            .map(|&i| ideal.generators[i].epsilon.clone() / qi(2))
            .fold(q_frac(1, 2), |a, b| if b < a { b } else { a });
        for c in minors {
            if !next.contains(&c.value) {
                next.push(
                    c.value,
                    Provenance::JacobianMinor { sources: src.clone(), holo: c.holo, anti: c.anti },
                    eps.clone(),
                    "jacobian minor: min(1/2, eps/2)",
                    None,
                );
            }
        }
    }
    Ok(next)
}

/// Full run from a validated domain.
pub fn run(spec: &DomainSpec, cfg: &KohnConfig) -> Result<KohnTrace, KohnError> {
    run_poly(&spec.r, spec.q, &spec.point, cfg)
}

pub fn run_poly(r: &Poly, q: usize, x0: &[Gq], cfg: &KohnConfig) -> Result<KohnTrace, KohnError> {
    let n = r.n();
    let mut work = 0u64;
    let mut ideal = init_ideal(r, q, x0)?;
    let mut steps = Vec::new();
    if let Some(u) = detect_unit(&ideal) {
        steps.push(StepRecord { step: 1, added: (0..ideal.generators.len()).collect(), candidates: vec![], unit: Some(u) });
        let cap = cfg.m_cap.unwrap_or(1);
        return Ok(finish(ideal, steps, Status::Terminated, cap, cfg, work));
    }
    let rt = ideal.generators[0].poly.clone();
    let (functions, entry) = match compute_commutator_multitype(r, x0, q, &cfg.boundary_caps) {
        Ok(b) => (b.functions.clone(), b.multitype.last().cloned()),
        Err(_) => (Vec::new(), None),
    };
    let m_cap = cfg.m_cap.unwrap_or_else(|| {
        let est = type_lower_bound(r, x0, q, &ProbeCaps::default(), entry);
        let t = match est.lower_bound {
            Ext::Fin(t) if t >= qi(2) => t,
            _ => qi(r.degree().max(2) as i64),
        };
        if q >= 1 && q < n {
            m_cap_for(&t, n, q)
        } else {
            1
        }
    });
    let tang = n.saturating_sub(1).max(1) as u64;
    let monomials = (1..=cfg.degree_cap as u64).fold(0u64, |a, d| a.saturating_add(binomial(d + tang - 1, tang - 1)));
    let mut status = Status::StepLimit;
    if monomials.saturating_mul(2) > cfg.budget {
        steps.push(StepRecord { step: 1, added: (0..ideal.generators.len()).collect(), candidates: vec![], unit: None });
        return Ok(finish(ideal, steps, Status::BudgetExhausted, m_cap, cfg, work));
    }
    let candidates = candidate_set(&rt, &functions, cfg.degree_cap);
    let outcomes = radical_close(&mut ideal, &candidates, m_cap, cfg, &mut work);
    let unit = detect_unit(&ideal);
    steps.push(StepRecord { step: 1, added: (0..ideal.generators.len()).collect(), candidates: outcomes, unit });
    if unit.is_some() {
        status = Status::Terminated;
    }
    while status != Status::Terminated && ideal.step < cfg.max_steps {
        let before = ideal.generators.len();
        let pool: Vec<usize> = ideal.generators.iter().filter(|g| g.provenance != Provenance::DefiningFunction).map(|g| g.id).collect();
        let mut sources: Vec<Vec<usize>> = Vec::new();
        for j in 1..=(n - q).min(pool.len()) {
            for s in subsets(pool.len(), j) {
                sources.push(s.iter().map(|&i| pool[i]).collect());
            }
        }
        match step(&ideal, &sources, &mut work, cfg.budget) {
            Ok(next) => ideal = next,
            Err(partial) => {
                ideal = partial;
                status = Status::BudgetExhausted;
                steps.push(StepRecord { step: ideal.step, added: (before..ideal.generators.len()).collect(), candidates: vec![], unit: None });
                break;
            }
        }
        let mut unit = detect_unit(&ideal);
        let outcomes = if unit.is_none() { radical_close(&mut ideal, &candidates, m_cap, cfg, &mut work) } else { vec![] };
        if unit.is_none() {
            unit = detect_unit(&ideal);
        }
        steps.push(StepRecord { step: ideal.step, added: (before..ideal.generators.len()).collect(), candidates: outcomes, unit });
        if unit.is_some() {
            status = Status::Terminated;
        } else if work > cfg.budget {
            status = Status::BudgetExhausted;
        } else if ideal.generators.len() == before {
            // the chain has stabilised without a unit
            break;
        }
    }
    Ok(finish(ideal, steps, status, m_cap, cfg, work))
}

fn finish(ideal: MultiplierIdeal, steps: Vec<StepRecord>, status: Status, m_cap: u32, cfg: &KohnConfig, work: u64) -> KohnTrace {
    let witness = if status == Status::Terminated { detect_unit(&ideal) } else { None };
    let terminated_at = witness.map(|_| ideal.step);
    let epsilon = witness.map(|w| ideal.generators[w].epsilon.clone());
    let bound_holds = match (terminated_at, cfg.level_sets) {
        (Some(k), Some(nl)) => Some(k <= nl),
        _ => None,
    };
    KohnTrace { status, terminated_at, epsilon, witness, m_cap, steps, ideal, level_sets: cfg.level_sets, bound_holds, work }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;

    fn p(s: &str, n: usize) -> Poly {
        parse_poly(s, n).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_bound(&qi(4), 2, 1).unwrap(), q_frac(1, 20));
        assert_eq!(epsilon_bound(&qi(6), 2, 1).unwrap(), q_frac(1, 28));
        assert_eq!(epsilon_bound(&qi(4), 3, 1).unwrap(), q_frac(1, 36));
        assert_eq!(epsilon_bound(&qi(2), 5, 1).unwrap(), q_frac(1, 12));
        assert!(epsilon_bound(&qi(4), 2, 0).is_err());
        assert!(epsilon_bound(&q_frac(3, 2), 2, 1).is_err());
    }

    #[test]
    fn degree_bound_examples() {
        let ints = |t: i64| degree_bounds(&qi(t), 2, 1).unwrap().map(|b| b.to_i64().unwrap());
        assert_eq!(ints(4), [5, 2, 3, 5]);
        assert_eq!(ints(6), [7, 3, 5, 7]);
        assert_eq!(ints(2), [3, 2, 1, 3]);
    }

    #[test]
    fn init_examples() {
        let o = vec![gzero(); 2];
        let i = init_ideal(&p("Re(z1) + abs2(z2)", 2), 1, &o).unwrap();
        let u = detect_unit(&i).unwrap();
        assert_eq!(i.generators[u].epsilon, q_frac(1, 2));
        let i = init_ideal(&p("Re(z1) + abs2(z2)^2", 2), 1, &o).unwrap();
        assert!(detect_unit(&i).is_none());
        assert_eq!(i.generators.len(), 2);
        assert_eq!(i.generators[1].poly.monic(), p("z2*zb2", 2));
        assert!(matches!(init_ideal(&p("Re(z1) - abs2(z2)", 2), 1, &o), Err(KohnError::NotPseudoconvex { .. })));
    }

    #[test]
    fn step_examples() {
        let o = vec![gzero(); 2];
        let mut i = init_ideal(&p("Re(z1) + abs2(z2)^2", 2), 1, &o).unwrap();
        let mut work = 0;
        let same = step(&i, &[], &mut work, 100).unwrap();
        assert_eq!(same.generators, i.generators);
        // the Levi minor itself has a vanishing gradient at 0; Re z2 enters through the radical
        let cfg = KohnConfig::default();
        radical_close(&mut i, &[p("Re(z2)", 2)], 5, &cfg, &mut work);
        let g = i.generators.last().unwrap();
        assert_eq!(g.certificate.as_ref().unwrap().m, 2);
        assert_eq!(g.certificate.as_ref().unwrap().method, CertMethod::WeightedDomination);
        let next = step(&i, &[vec![g.id]], &mut work, 100).unwrap();
        let u = detect_unit(&next).unwrap();
        assert_eq!(next.generators[u].epsilon, q_frac(1, 8));
    }

    #[test]
    fn exact_certificate_examples() {
        assert_eq!(exact_certificate(&p("Re(z2)", 2), &[p("z2*zb2", 2)]).unwrap().0, 2);
        assert_eq!(exact_certificate(&p("z2*zb2", 2), &[p("(z2*zb2)^2", 2)]).unwrap().0, 2);
        assert_eq!(exact_certificate(&p("Re(z2)", 3), &[p("abs2(z2) + abs2(z3)^3", 3)]).unwrap().0, 2);
        assert_eq!(exact_certificate(&p("Re(z3)", 3), &[p("abs2(z2) + abs2(z3)^3", 3)]).unwrap().0, 6);
        assert!(exact_certificate(&p("Re(z3)", 3), &[p("abs2(z2)*abs2(z3)", 3)]).is_none());
        assert_eq!(exact_certificate(&p("Re(z2*z3)", 3), &[p("abs2(z2)*abs2(z3)", 3)]).unwrap().0, 2);
        assert!(exact_certificate(&p("Re(z3)", 3), &[p("abs2(z2)", 3)]).is_none());
        assert!(exact_certificate(&p("Re(z2)", 2), &[p("Re(z1) + abs2(z2)", 2)]).is_none());
    }

    #[test]
    fn shell_agrees_with_exact() {
        let spec = ShellSpec::default();
        for k in 1..4u32 {
            let f = p(&format!("abs2(z2)^{}", k), 2);
            let e = shell_estimate(&p("Re(z2)", 2), &[f], None, None, &spec);
            assert!((e.fitted - 2.0 * k as f64).abs() < 0.5, "{:?}", e);
        }
        let e = shell_estimate(&p("Re(z2)", 2), &[p("abs2(z1)", 2)], None, None, &spec);
        assert!(!e.fitted.is_finite() || e.fitted > 10.0);
    }

    #[test]
    fn run_examples() {
        let cfg = KohnConfig::default();
        let t = run_poly(&p("Re(z1) + abs2(z2)", 2), 1, &vec![gzero(); 2], &cfg).unwrap();
        assert_eq!(t.terminated_at, Some(1));
        assert_eq!(t.epsilon, Some(q_frac(1, 2)));
        let t = run_poly(&p("Re(z1) + abs2(z2)^2", 2), 1, &vec![gzero(); 2], &cfg).unwrap();
        assert_eq!(t.terminated_at, Some(2));
        assert!(t.epsilon.unwrap() >= epsilon_bound(&qi(4), 2, 1).unwrap());
    }
}
