//! JSON reports for the command-line front end.

use crate::boundary::{
    boundary_wedge_check, compute_commutator_multitype, multitype_levelset_scan, BoundaryCaps, BoundaryError, BoundarySystemJson,
    GridSpec, LevelSetScan, WedgeCheck,
};
use crate::dangelo::{type_lower_bound, Exactness, ProbeCaps, TypeEstimate};
use crate::kohn::{degree_bounds, epsilon_bound, run_poly, CertMethod, KohnConfig, KohnTrace, Status};
use crate::levi::{pseudoconvexity_check, Pseudoconvexity, SampleSpec};
use crate::num::*;
use crate::parse::{validate_domain, DomainSpec, ValidationReport};
use crate::truncation::{multitype_by_enumeration, truncate, CoordinateSearch, MultitypeEstimate, TruncationRecord};
use crate::weights::{extend_weight, is_weight, Weight, WeightVerdict};
use num_traits::{One, ToPrimitive};
use serde::Serialize;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputEcho {
    pub n: usize,
    pub q: usize,
    pub point: Vec<String>,
    pub r: String,
}

impl From<&DomainSpec> for InputEcho {
    fn from(s: &DomainSpec) -> Self {
        InputEcho { n: s.n, q: s.q, point: s.point.iter().map(fmt_gq).collect(), r: s.r.to_string() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MultitypeSection {
    pub commutator: Option<Weight>,
    pub enumeration: Option<MultitypeEstimate>,
    /// Commutator multitype equals the enumerated distinguished-weight maximum.
    pub agree: Option<bool>,
    pub holomorphic_dimension: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationSection {
    pub record: TruncationRecord,
    /// Termination step of the algorithm on the truncated defining function.
    pub kohn_step: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeBoundsJson {
    pub truncated_degree: String,
    pub function_degree: String,
    pub wedge_degree: String,
    pub m_cap: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonSection {
    pub t: String,
    pub n: usize,
    pub q: usize,
    pub bound: String,
    pub decimal: f64,
    /// The t used is the exact type rather than a lower bound.
    pub certified: bool,
    pub degree_bounds: DegreeBoundsJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: ToolInfo,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudoconvexity: Option<Pseudoconvexity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multitype: Option<MultitypeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_system: Option<BoundarySystemJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wedge_check: Option<WedgeCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_sets: Option<LevelSetScan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kohn: Option<KohnTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_estimate: Option<TypeEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonSection>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn new(command: &'static str) -> Report {
        Report {
            schema: SCHEMA,
            tool: ToolInfo { name: "finite-type", version: env!("CARGO_PKG_VERSION") },
            command,
            input: None,
            validation: None,
            pseudoconvexity: None,
            multitype: None,
            boundary_system: None,
            wedge_check: None,
            level_sets: None,
            truncation: None,
            kohn: None,
            type_estimate: None,
            epsilon: None,
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Exit codes: termination detected, invalid input, budget or cap exhausted.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub max_steps: usize,
    /// Points per axis of the level-set grid; 0 skips the scan.
    pub grid: usize,
    pub degree_cap: u32,
    pub probe_degree: u32,
    /// Overrides every search budget when set.
    pub budget: Option<u64>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { max_steps: 6, grid: 11, degree_cap: 2, probe_degree: 6, budget: None }
    }
}

fn epsilon_section(t: &Q, n: usize, q: usize, certified: bool) -> Option<EpsilonSection> {
    let bound = epsilon_bound(t, n, q).ok()?;
    let [a, b, c, d] = degree_bounds(t, n, q).ok()?;
    Some(EpsilonSection {
        t: fmt_q(t),
        n,
        q,
        decimal: q_to_f64(&bound),
        bound: fmt_q(&bound),
        certified,
        degree_bounds: DegreeBoundsJson {
            truncated_degree: a.to_string(),
            function_degree: b.to_string(),
            wedge_degree: c.to_string(),
            m_cap: d.to_string(),
        },
    })
}

/// validate, pseudoconvexity, boundary system, level sets, Kohn run, truncation, epsilon.
pub fn analyze(spec: &DomainSpec, opts: &AnalyzeOptions) -> (Report, i32) {
    let mut rep = Report::new("analyze");
    rep.input = Some(InputEcho::from(spec));
    let validation = validate_domain(spec);
    let ok = validation.ok();
    rep.validation = Some(validation);
    if !ok {
        rep.error = Some("input failed validation".into());
        return (rep, EXIT_INVALID);
    }
    let (r, x0, q, n) = (&spec.r, &spec.point, spec.q, spec.n);
    let pc = pseudoconvexity_check(r, x0, &SampleSpec::default());
    if let Pseudoconvexity::Inconclusive { reason } = &pc {
        rep.warnings.push(format!("pseudoconvexity: inconclusive ({})", reason));
    }
    let failed = matches!(pc, Pseudoconvexity::Fail { .. });
    rep.pseudoconvexity = Some(pc);
    if failed {
        rep.error = Some("domain is not pseudoconvex; the multiplier algorithm is not run".into());
        return (rep, EXIT_INVALID);
    }

    let mut caps = BoundaryCaps::default();
    if let Some(b) = opts.budget {
        caps.budget = b;
    }
    caps.degree_cap = caps.degree_cap.max(opts.degree_cap);
    let mut section = MultitypeSection { commutator: None, enumeration: None, agree: None, holomorphic_dimension: None, error: None };
    let system = match compute_commutator_multitype(r, x0, q, &caps) {
        Ok(b) => Some(b),
        Err(e) => {
            if let BoundaryError::SearchBudgetExceeded { partial, .. } = &e {
                section.commutator = Some(partial.clone());
            }
            rep.warnings.push(format!("boundary system: {}", e));
            section.error = Some(e.to_string());
            None
        }
    };
    if let Some(b) = &system {
        section.commutator = Some(b.multitype.clone());
        section.holomorphic_dimension = crate::boundary::holomorphic_dimension(b).ok();
        if b.degree_cap_exceeded {
            rep.warnings.push(format!("boundary system: kernel-field degree exceeds the cap {}", caps.degree_cap));
        }
        if !b.is_complete() {
            rep.warnings.push("boundary system: an entry is infinite within the list-length cap".into());
        }
        let top = b.multitype.entries().iter().filter_map(|e| e.finite().cloned()).max().unwrap_or_else(Q::one);
        if b.is_complete() && n <= 3 && top <= qi(8) {
            match multitype_by_enumeration(r, x0, q, &(&top + Q::one()), &CoordinateSearch::standard(n), opts.budget.unwrap_or(5_000_000)) {
                Ok(est) => {
                    if est.cap_reached {
                        rep.warnings.push("multitype enumeration: an entry reached the enumeration cap".into());
                    }
                    section.agree = Some(est.multitype == b.multitype);
                    section.enumeration = Some(est);
                }
                Err(e) => rep.warnings.push(format!("multitype enumeration: {}", e)),
            }
        }
        rep.boundary_system = Some(BoundarySystemJson::from(b));
        if b.is_complete() {
            match boundary_wedge_check(b) {
                Ok(c) => {
                    if !c.pass {
                        rep.warnings.push("boundary system: wedge identity check failed".into());
                    }
                    rep.wedge_check = Some(c);
                }
                Err(e) => rep.warnings.push(format!("wedge check: {}", e)),
            }
        }
    }
    rep.multitype = Some(section);

    if opts.grid > 0 {
        let grid = GridSpec::plane(x0.clone(), q_frac(1, 2), opts.grid);
        match multitype_levelset_scan(r, q, &grid, &caps) {
            Ok(s) => {
                if s.search_failures > 0 {
                    rep.warnings.push(format!("level sets: {} grid points hit the list-search budget", s.search_failures));
                }
                if s.usc_violations > 0 {
                    rep.warnings.push(format!("level sets: {} sampled upper-semicontinuity violations", s.usc_violations));
                }
                rep.level_sets = Some(s);
            }
            Err(e) => rep.warnings.push(format!("level sets: {}", e)),
        }
    }

    let entry = system.as_ref().and_then(|b| b.multitype.last().cloned());
    let est = type_lower_bound(r, x0, q, &ProbeCaps { max_exponent: opts.probe_degree, ..ProbeCaps::default() }, entry);
    if est.exactness == Exactness::LowerBoundOnly {
        rep.warnings.push("type estimate: lower bound only".into());
    }
    if !est.consistent {
        rep.warnings.push("type estimate: multitype entry exceeds the exact type".into());
    }

    let mut cfg = KohnConfig { max_steps: opts.max_steps, degree_cap: opts.degree_cap, boundary_caps: caps.clone(), ..KohnConfig::default() };
    if let Some(b) = opts.budget {
        cfg.budget = b;
    }
    cfg.level_sets = rep.level_sets.as_ref().map(|s| s.n_levels);
    if let Ext::Fin(t) = &est.lower_bound {
        if *t >= qi(2) && q < n {
            cfg.m_cap = Some(crate::kohn::m_cap_for(t, n, q));
        }
    }
    let code = match run_poly(r, q, x0, &cfg) {
        Ok(trace) => {
            for g in &trace.ideal.generators {
                if let Some(c) = &g.certificate {
                    if c.method == CertMethod::ShellSampling {
                        rep.warnings.push(format!("kohn: generator {} admitted by shell sampling (heuristic), m = {}", g.id, c.m));
                    }
                }
            }
            if trace.bound_holds == Some(false) {
                rep.warnings.push("kohn: termination step exceeds the number of sampled level sets".into());
            }
            let code = match trace.status {
                Status::Terminated => EXIT_OK,
                Status::BudgetExhausted => {
                    rep.warnings.push("kohn: budget exhausted; the trace is partial".into());
                    EXIT_BUDGET
                }
                Status::StepLimit => {
                    rep.warnings.push("kohn: no unit within the step limit".into());
                    EXIT_BUDGET
                }
            };
            rep.kohn = Some(trace);
            code
        }
        Err(e) => {
            rep.error = Some(e.to_string());
            EXIT_INVALID
        }
    };

    if let Some(b) = &system {
        if b.is_complete() {
            let w = extend_weight(&b.multitype, n);
            if w.entries().iter().all(|e| !e.is_inf()) && matches!(is_weight(&w), Ok(WeightVerdict::Admissible(_))) {
                if let Ok(record) = truncate(&b.r, &Q::one(), &w) {
                    let tcfg = KohnConfig { level_sets: None, ..cfg.clone() };
                    let kohn_step = run_poly(&record.truncated, q, &vec![gzero(); n], &tcfg).ok().and_then(|t| t.terminated_at);
                    rep.truncation = Some(TruncationSection { record, kohn_step });
                }
            }
        }
    }

    if let Ext::Fin(t) = &est.lower_bound {
        if *t >= qi(2) && q >= 1 && q < n {
            rep.epsilon = epsilon_section(t, n, q, est.exactness == Exactness::ExactDecoupled);
        }
    }
    rep.type_estimate = Some(est);
    (rep, code)
}

fn q_frac(a: i64, b: i64) -> Q {
    crate::num::q(a, b)
}

/// Truncate r (centred at the base point) at `level` for `weight`.
pub fn truncate_report(spec: &DomainSpec, weight: &Weight, level: &Q) -> (Report, i32) {
    let mut rep = Report::new("truncate");
    rep.input = Some(InputEcho::from(spec));
    if weight.len() != spec.n {
        rep.error = Some(format!("weight has {} entries, expected {}", weight.len(), spec.n));
        return (rep, EXIT_INVALID);
    }
    match is_weight(weight) {
        Ok(WeightVerdict::Admissible(_)) => {}
        Ok(WeightVerdict::Rejected { index, reason }) => {
            rep.error = Some(format!("weight {} rejected at entry {}: {:?}", weight, index + 1, reason));
            return (rep, EXIT_INVALID);
        }
        Err(e) => {
            rep.error = Some(e.to_string());
            return (rep, EXIT_INVALID);
        }
    }
    let rt = spec.r.translate(&spec.point);
    match truncate(&rt, level, weight) {
        Ok(record) => {
            rep.truncation = Some(TruncationSection { record, kohn_step: None });
            (rep, EXIT_OK)
        }
        Err(e) => {
            rep.error = Some(e.to_string());
            (rep, EXIT_INVALID)
        }
    }
}

pub fn epsilon_report(t: &Q, n: usize, q: usize) -> (Report, i32) {
    let mut rep = Report::new("epsilon");
    match epsilon_bound(t, n, q) {
        Ok(_) => {
            rep.epsilon = epsilon_section(t, n, q, true);
            (rep, EXIT_OK)
        }
        Err(e) => {
            rep.error = Some(e.to_string());
            (rep, EXIT_INVALID)
        }
    }
}

/// Parse a budget override such as `250000`.
pub fn parse_budget(s: &str) -> Option<u64> {
    s.trim().replace('_', "").parse::<u64>().ok().or_else(|| s.trim().parse::<f64>().ok().and_then(|f| f.to_u64()))
}
