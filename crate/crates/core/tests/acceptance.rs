//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use finite_type::boundary::*;
use finite_type::dangelo::{type_lower_bound, Exactness, ProbeCaps};
use finite_type::kohn::*;
use finite_type::num::*;
use finite_type::parse::parse_poly;
use finite_type::poly::{Mono, Poly};
use finite_type::truncation::*;
use finite_type::weights::*;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn p(s: &str, n: usize) -> Poly {
    parse_poly(s, n).unwrap()
}

fn origin(n: usize) -> Vec<Gq> {
    vec![gzero(); n]
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, t0: Instant, what: &str) -> Result<(), String> {
    let e = t0.elapsed();
    ensure(e <= limit, || format!("{} took {:.2?}, limit {:.0?}", what, e, limit))
}

fn model(m: u32) -> Poly {
    p(&format!("Re(z1) + abs2(z2)^{}", m), 2)
}

fn strongly(n: usize) -> Poly {
    let s: Vec<String> = (2..=n).map(|j| format!("abs2(z{})", j)).collect();
    p(&format!("Re(z1) + {}", s.join(" + ")), n)
}

/// Domains with complete boundary systems: (defining function, q, base point).
fn corpus() -> Vec<(String, Poly, usize, Vec<Gq>)> {
    let mut out = Vec::new();
    for m in 2..=4 {
        out.push((format!("model m={}", m), model(m), 1, origin(2)));
    }
    for n in 2..=4 {
        out.push((format!("strongly pseudoconvex n={}", n), strongly(n), 1, origin(n)));
    }
    let extra: [(&str, usize, usize); 6] = [
        ("Re(z1) + abs2(z2)^2 + abs2(z3)^3", 3, 1),
        ("Re(z1) + abs2(z2) + abs2(z3)^2", 3, 1),
        ("Re(z1) + abs2(z2)^2 + abs2(z3)^2", 3, 2),
        ("Re(z1) + abs2(z2) + abs2(z3)^3 + abs2(z4)^2", 4, 2),
        ("Re(z1) + abs2(z2)^2 + abs2(z2)^2*Re(z2)", 2, 1),
        ("Re(z1) + abs2(z2)^2 + abs2(z3)^3 + abs2(z2)^2*abs2(z3)^2", 3, 1),
    ];
    for (s, n, q) in extra {
        out.push((format!("{} q={}", s, q), p(s, n), q, origin(n)));
    }
    // off-origin point of the m = 2 model, where the Levi form is nondegenerate
    out.push(("model m=2 at (-1/16, 1/2)".into(), model(2), 1, vec![gr(q(-1, 16)), gr(q(1, 2))]));
    out
}

fn c1() -> Outcome {
    let mut detail = Vec::new();
    for n in 2..=4 {
        let t0 = Instant::now();
        let tr = run_poly(&strongly(n), 1, &origin(n), &KohnConfig::default()).map_err(|e| e.to_string())?;
        within(Duration::from_secs(1), t0, &format!("n={}", n))?;
        ensure(tr.status == Status::Terminated && tr.terminated_at == Some(1), || format!("n={}: {:?} at {:?}", n, tr.status, tr.terminated_at))?;
        ensure(tr.epsilon == Some(q(1, 2)), || format!("n={}: epsilon {:?}", n, tr.epsilon.as_ref().map(fmt_q)))?;
        detail.push(format!("n={} k*=1 eps=1/2 {:.0?}", n, t0.elapsed()));
    }
    Ok(detail.join("; ") + " [limit 1s each]")
}

fn c2() -> Outcome {
    let mut detail = Vec::new();
    for (m, eps) in [(2u32, q(1, 20)), (3, q(1, 28)), (4, q(1, 36))] {
        let t0 = Instant::now();
        let r = model(m);
        let o = origin(2);
        let b = compute_commutator_multitype(&r, &o, 1, &BoundaryCaps::default()).map_err(|e| e.to_string())?;
        let want = Weight::ints(&[1, 2 * m as i64]);
        ensure(b.multitype == want, || format!("m={}: commutator multitype {}", m, b.multitype))?;
        let en = multitype_by_enumeration(&r, &o, 1, &qi(2 * m as i64 + 1), &CoordinateSearch::standard(2), 1_000_000).map_err(|e| e.to_string())?;
        ensure(en.multitype == b.multitype, || format!("m={}: enumeration {} vs commutator {}", m, en.multitype, b.multitype))?;
        let te = type_lower_bound(&r, &o, 1, &ProbeCaps::default(), Some(b.multitype.entries()[1].clone()));
        ensure(te.lower_bound == Ext::int(2 * m as i64) && te.exactness == Exactness::ExactDecoupled, || format!("m={}: type {} {:?}", m, te.lower_bound, te.exactness))?;
        let scan = multitype_levelset_scan(&r, 1, &GridSpec::plane(o.clone(), q(1, 2), 11), &BoundaryCaps::default()).map_err(|e| e.to_string())?;
        let cfg = KohnConfig { level_sets: Some(scan.n_levels), ..KohnConfig::default() };
        let tr = run_poly(&r, 1, &o, &cfg).map_err(|e| e.to_string())?;
        ensure(tr.terminated_at == Some(2), || format!("m={}: Kohn {:?} at {:?}", m, tr.status, tr.terminated_at))?;
        ensure(scan.n_levels == 2 && tr.bound_holds == Some(true), || format!("m={}: {} level sets", m, scan.n_levels))?;
        let e = epsilon_bound(&qi(2 * m as i64), 2, 1).map_err(|e| e.to_string())?;
        ensure(e == eps, || format!("m={}: epsilon bound {}", m, fmt_q(&e)))?;
        within(Duration::from_secs(10), t0, &format!("m={}", m))?;
        detail.push(format!("m={} (1,{}) type {} k*=2 N=2 eps {} {:.0?}", m, 2 * m, 2 * m, fmt_q(&e), t0.elapsed()));
    }
    Ok(detail.join("; ") + " [exact equality; limit 10s each]")
}

fn c3() -> Outcome {
    let mut count = 0;
    for (name, r, q, x0) in corpus() {
        let b = compute_commutator_multitype(&r, &x0, q, &BoundaryCaps::default()).map_err(|e| format!("{}: {}", name, e))?;
        let w = boundary_wedge_check(&b).map_err(|e| format!("{}: {}", name, e))?;
        ensure(w.minor_value == w.product && w.pass, || format!("{}: minor {} vs det*prod {}", name, fmt_gq(&w.minor_value), fmt_gq(&w.product)))?;
        ensure(!gq_is_zero(&w.minor_value) && w.ambient_nonzero, || format!("{}: vanishing wedge coefficient", name))?;
        count += 1;
    }
    Ok(format!("{} boundary systems, exact rational equality", count))
}

fn random_admissible(rng: &mut ChaCha8Rng, weights: &[Weight], n: usize) -> (Poly, Q, Weight) {
    let w = weights[rng.gen_range(0..weights.len())].clone();
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(3..10) {
        let a: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let b: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let m = Mono::new(a, b);
        if m.is_constant() {
            continue;
        }
        let c = g(q(rng.gen_range(-4..=4), rng.gen_range(1..=3)), q(rng.gen_range(-4..=4), rng.gen_range(1..=3)));
        terms.push((m, c));
    }
    terms.push((Mono::new((0..n).map(|j| (j == 0) as u32).collect(), vec![0; n]), gr(q(1, 2))));
    let degrees: BTreeSet<Q> = terms.iter().map(|(m, _)| m.weighted_degree(&w)).collect();
    let degrees: Vec<Q> = degrees.into_iter().collect();
    let level = degrees[rng.gen_range(0..degrees.len())].clone();
    let poly = Poly::from_terms(n, terms.into_iter().filter(|(m, _)| m.weighted_degree(&w) >= level));
    (poly, level, w)
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w2 = enumerate_weights_below(2, &qi(6)).map_err(|e| e.to_string())?;
    let w3 = enumerate_weights_below(3, &qi(4)).map_err(|e| e.to_string())?;
    let mut checked = 0;
    while checked < 200 {
        let n = if checked % 2 == 0 { 2 } else { 3 };
        let (poly, level, w) = random_admissible(&mut rng, if n == 2 { &w2 } else { &w3 }, n);
        if poly.is_zero() {
            continue;
        }
        ensure(in_m(&poly, &level, &w).holds, || format!("generator produced {} outside M({})", poly, fmt_q(&level)))?;
        let rec = truncate(&poly, &level, &w).map_err(|e| format!("{}: {}", poly, e))?;
        let residual = &poly - &rec.truncated;
        ensure(in_h(&rec.truncated, &level, &w).holds, || format!("{}: truncation not homogeneous", poly))?;
        ensure(in_m_strict(&residual, &level, &w).holds, || format!("{}: residual not strictly above level", poly))?;
        ensure(&rec.truncated + &residual == poly, || format!("{}: pieces do not sum back", poly))?;
        let again = truncate(&rec.truncated, &level, &w).map_err(|e| e.to_string())?;
        ensure(again.truncated == rec.truncated, || format!("{}: truncation not idempotent", poly))?;
        checked += 1;
    }
    Ok(format!("{} random weighted polynomials, exact membership", checked))
}

fn c5() -> Outcome {
    let mut count = 0;
    for (name, r, q, x0) in corpus() {
        let b = compute_commutator_multitype(&r, &x0, q, &BoundaryCaps::default()).map_err(|e| format!("{}: {}", name, e))?;
        let lam = extend_weight(&b.multitype, b.n);
        if x0.iter().all(gq_is_zero) {
            ensure(in_m(&b.r, &Q::one(), &lam).holds, || format!("{}: r not in M(1; {})", name, lam))?;
            count += 1;
        }
        for (i, f) in b.functions.iter().enumerate() {
            let k = b.rank + 1 + i;
            let lk = b.multitype.entries()[k].finite().cloned().ok_or_else(|| format!("{}: infinite entry", name))?;
            let t = Q::one() / lk;
            let mem = in_m(f, &t, &lam);
            ensure(mem.holds, || format!("{}: r_{} = {} not in M({}; {}), witness {:?}", name, k + 1, f, fmt_q(&t), lam, mem.witness))?;
            count += 1;
        }
    }
    Ok(format!("{} functions r_k in M(1/lambda_k; Lambda), exact", count))
}

/// Independent oracle: candidates a/b with b <= 120 in [prev, t], certificate by brute force.
fn oracle_weights(n: usize, t: i64) -> Vec<Vec<Q>> {
    let mut grid: BTreeSet<Q> = BTreeSet::new();
    for b in 1..=120i64 {
        for a in b..=t * b {
            grid.insert(q(a, b));
        }
    }
    let mut prefixes: Vec<Vec<Q>> = vec![vec![]];
    for k in 0..n {
        let mut next = Vec::new();
        for pre in &prefixes {
            for l in grid.iter().filter(|l| pre.last().map_or(true, |p| *l >= p)) {
                let mut cand = pre.clone();
                cand.push(l.clone());
                if has_certificate(&cand, k) {
                    next.push(cand);
                }
            }
        }
        prefixes = next;
    }
    prefixes
}

fn has_certificate(w: &[Q], k: usize) -> bool {
    let bounds: Vec<i64> = w.iter().map(|l| floor_q(l).to_string().parse::<i64>().unwrap()).collect();
    let mut a = vec![0i64; k + 1];
    loop {
        if a[k] > 0 {
            let s = (0..=k).fold(Q::zero(), |acc, j| acc + qi(a[j]) / &w[j]);
            if s == Q::one() {
                return true;
            }
        }
        let mut d = 0;
        loop {
            if d > k {
                return false;
            }
            a[d] += 1;
            if a[d] <= bounds[d] {
                break;
            }
            a[d] = 0;
            d += 1;
        }
    }
}

fn c6() -> Outcome {
    let mut detail = Vec::new();
    for (n, t) in [(2usize, 4i64), (3, 3)] {
        let got: Vec<Vec<Q>> = enumerate_weights_below(n, &qi(t))
            .map_err(|e| e.to_string())?
            .iter()
            .map(|w| w.entries().iter().map(|e| e.finite().unwrap().clone()).collect())
            .collect();
        let want = oracle_weights(n, t);
        let gs: BTreeSet<_> = got.iter().cloned().collect();
        let ws: BTreeSet<_> = want.iter().cloned().collect();
        ensure(gs.len() == got.len(), || format!("n={} t={}: duplicates", n, t))?;
        ensure(gs == ws, || format!("n={} t={}: {} enumerated vs {} by oracle", n, t, gs.len(), ws.len()))?;
        detail.push(format!("n={} t={}: {} weights", n, t, gs.len()));
    }
    Ok(detail.join("; ") + " [set equality with brute-force oracle]")
}

fn c7() -> Outcome {
    let t0 = Instant::now();
    let mut detail = Vec::new();
    for m in 2..=4 {
        let r = model(m);
        let coarse = multitype_levelset_scan(&r, 1, &GridSpec::plane(origin(2), q(1, 2), 41), &BoundaryCaps::default()).map_err(|e| e.to_string())?;
        let fine = multitype_levelset_scan(&r, 1, &GridSpec::plane(origin(2), q(1, 2), 81), &BoundaryCaps::default()).map_err(|e| e.to_string())?;
        ensure(coarse.top_in_zero_set && fine.top_in_zero_set, || format!("m={}: S_N sample off the zero set", m))?;
        ensure(coarse.search_failures == 0 && coarse.usc_violations == 0, || format!("m={}: {} failures, {} usc violations", m, coarse.search_failures, coarse.usc_violations))?;
        ensure(fine.s1_fraction > coarse.s1_fraction, || format!("m={}: S_1 fraction {} at 81x81 vs {} at 41x41", m, fine.s1_fraction, coarse.s1_fraction))?;
        detail.push(format!("m={} S_1 {:.4} -> {:.4}", m, coarse.s1_fraction, fine.s1_fraction));
    }
    within(Duration::from_secs(60), t0, "scans")?;
    Ok(detail.join("; ") + &format!(" [exact zero-set membership; {:.1?}, limit 60s]", t0.elapsed()))
}

fn c8() -> Outcome {
    let mut detail = Vec::new();
    for m in 2..=4u32 {
        let r = model(m);
        let o = origin(2);
        let tr = run_poly(&r, 1, &o, &KohnConfig::default()).map_err(|e| e.to_string())?;
        for gen in &tr.ideal.generators {
            if let Some(c) = &gen.certificate {
                ensure(c.m <= tr.m_cap, || format!("m={}: generator {} root m={} above cap {}", m, gen.id, c.m, tr.m_cap))?;
            }
        }
        let ideal = init_ideal(&r, 1, &o).map_err(|e| e.to_string())?;
        let fs: Vec<Poly> = ideal.generators.iter().map(|g| g.poly.clone()).collect();
        let target = p("Re(z2)", 2);
        let (exact, _, _) = exact_certificate(&target, &fs).ok_or_else(|| format!("m={}: no exact certificate", m))?;
        let est = shell_estimate(&target, &fs, Some(0), Some(&ideal.generators[0].poly), &ShellSpec::default());
        ensure(est.m >= exact && est.m <= exact + 1, || format!("m={}: shell m={} (fit {:.3}) vs exact m={}", m, est.m, est.fitted, exact))?;
        detail.push(format!("m={} exact {} shell {} (fit {:.3}) cap {}", m, exact, est.m, est.fitted, tr.m_cap));
    }
    Ok(detail.join("; ") + " [shell within +1 of exact]")
}

fn c9() -> Outcome {
    let t0 = Instant::now();
    let r = p("Re(z1) + abs2(z2)^2 + abs2(z2)^3", 2);
    let w = Weight::ints(&[1, 4]);
    let six = Mono::new(vec![0, 3], vec![0, 3]);
    let limit = truncate(&r, &Q::one(), &w).map_err(|e| e.to_string())?.truncated;
    let mut prev: Option<Q> = None;
    let mut steps = BTreeSet::new();
    for j in 0..=5u32 {
        let tau = Q::one() / qi(16).pow(j as i32);
        let rt = scale_family(&r, &tau, &Q::one(), &w).map_err(|e| e.to_string())?;
        let c = rt.coeff(&six).re;
        ensure(c == Q::one() / qi(4).pow(j as i32), || format!("tau=16^-{}: coefficient {}", j, fmt_q(&c)))?;
        if let Some(p) = &prev {
            ensure(c < *p && c.is_positive(), || format!("tau=16^-{}: coefficient not decreasing", j))?;
        }
        ensure(&rt - &limit == Poly::monomial(six.clone(), gr(c.clone())), || format!("tau=16^-{}: residual differs from the degree-6 term", j))?;
        prev = Some(c);
        let tr = run_poly(&rt, 1, &origin(2), &KohnConfig::default()).map_err(|e| e.to_string())?;
        steps.insert(tr.terminated_at);
    }
    ensure(steps.len() == 1 && steps.iter().next().unwrap().is_some(), || format!("termination steps {:?}", steps))?;
    within(Duration::from_secs(60), t0, "family")?;
    Ok(format!(
        "coefficient 4^-j for j=0..5, residual -> 0, Kohn stops at step {} throughout [{:.1?}, limit 60s]",
        steps.iter().next().unwrap().unwrap(),
        t0.elapsed()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("strongly pseudoconvex base case", c1),
        ("model domains Re z1 + |z2|^2m", c2),
        ("boundary-system wedge identity", c3),
        ("weighted truncation on random polynomials", c4),
        ("boundary-system functions are weighted", c5),
        ("weight enumeration against oracle", c6),
        ("level sets of the commutator multitype", c7),
        ("radical certificates and shell estimates", c8),
        ("scaling family convergence", c9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(d) => println!("PASS criterion {}: {}: {} ({:.2?})", i + 1, name, d, t0.elapsed()),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {}: {}: {} ({:.2?})", i + 1, name, e, t0.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
