//! Task execution and reports.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::document::{Document, HorizonDoc, Model, TaskDoc, TaskKind};
use crate::error::{Result, SummaError};
use crate::ideal::{cluster_points, core, ideal_lim, HorizonParams, LimitCertificate, LimitResult};
use crate::matrix::OperatorMatrix;
use crate::regularity::{
    check_core_inclusion, check_maps_to_zero, check_regular_family, check_uniform_core_inclusion, replay_witness, ConditionReport,
    TargetOperator, Verdict, Witness,
};
use crate::scalar::{format_rational, ser, Enclosure, Rational, ScalarMode};
use crate::selection::{test_theorem_equivalence, uniform_limit, verify_uniform_limsup_identity, EquivalenceReport, LimsupIdentity, UniformLimit};
use crate::sigma::{check_almost_regular, composed_family, replay_orbit_witness, sigma_limit, AlmostRegularity, SigmaCertificate, SigmaLimit};
use crate::transform::{matrix_norm, NormVerdict};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub mode: ScalarMode,
    /// Applied on top of document and task horizons.
    pub overrides: HorizonDoc,
    pub timing: bool,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum LimitView {
    Converges {
        #[serde(serialize_with = "ser::rationals")]
        eta: Vec<Rational>,
        exact: bool,
        certificate: String,
    },
    Diverges {
        #[serde(serialize_with = "ser::rationals")]
        a: Vec<Rational>,
        #[serde(serialize_with = "ser::rationals")]
        b: Vec<Rational>,
        indices: (usize, usize),
    },
}

impl From<LimitResult> for LimitView {
    fn from(r: LimitResult) -> Self {
        match r {
            LimitResult::Converges(l) => {
                let exact = l.is_exact();
                let certificate = match l.certificate {
                    LimitCertificate::DualBase { t } => format!("dual base S_{t}"),
                    LimitCertificate::NullSet { exceptional } => format!("exceptional set {exceptional}"),
                    LimitCertificate::Horizon { t, n, worst } => format!("horizon N={n}, t={t}, worst={}", format_rational(&worst)),
                };
                LimitView::Converges { eta: l.eta, exact, certificate }
            }
            LimitResult::Diverges(p) => LimitView::Diverges { a: p.a, b: p.b, indices: p.indices },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalView {
    #[serde(serialize_with = "ser::rational")]
    pub lo: Rational,
    #[serde(serialize_with = "ser::rational")]
    pub hi: Rational,
    #[serde(serialize_with = "ser::rational")]
    pub representative: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Conditions { reports: Vec<ConditionReport> },
    AlmostRegular(AlmostRegularity),
    UniformLimit(UniformLimit),
    Equivalence(EquivalenceReport),
    Limsup(LimsupIdentity),
    SigmaLimit(SigmaLimit),
    IdealLimit(LimitView),
    ClusterPoints { intervals: Vec<IntervalView>, exact: bool },
    Core {
        #[serde(serialize_with = "ser::rational")]
        lo: Rational,
        #[serde(serialize_with = "ser::rational")]
        hi: Rational,
    },
    MatrixNorm { norms: Vec<NormView> },
    Error { message: String, schema: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormView {
    pub member: String,
    #[serde(serialize_with = "ser_opt_enclosure")]
    pub value: Option<Enclosure>,
    pub verdict: NormVerdict,
    pub worst_row: Option<usize>,
}

fn ser_opt_enclosure<S: serde::Serializer>(e: &Option<Enclosure>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => ser::enclosure(e, s),
        None => s.serialize_none(),
    }
}

impl Outcome {
    pub fn verdicts(&self) -> Vec<Verdict> {
        match self {
            Outcome::Conditions { reports } => reports.iter().map(|r| r.verdict).collect(),
            Outcome::AlmostRegular(a) => a.k_route.iter().chain(&a.family_route).map(|r| r.verdict).collect(),
            Outcome::Equivalence(e) => e.items.iter().map(|i| i.verdict).collect(),
            Outcome::Limsup(l) => vec![l.verdict],
            _ => Vec::new(),
        }
    }

    /// Condition reports carrying witnesses, by condition name.
    fn conditions(&self) -> Vec<&ConditionReport> {
        match self {
            Outcome::Conditions { reports } => reports.iter().collect(),
            Outcome::AlmostRegular(a) => a.k_route.iter().chain(&a.family_route).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskResult {
    pub task_id: String,
    pub task: TaskKind,
    pub mode: ScalarMode,
    pub horizon: Option<HorizonParams>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub schema_version: u32,
    pub mode: ScalarMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: Vec<TaskResult>,
}

impl Report {
    /// 2 for schema errors, 3 for runtime errors, 1 for failures under
    /// `strict`, otherwise 0.
    pub fn exit_code(&self, strict: bool) -> i32 {
        let errors: Vec<bool> = self
            .results
            .iter()
            .filter_map(|r| match &r.outcome {
                Outcome::Error { schema, .. } => Some(*schema),
                _ => None,
            })
            .collect();
        if errors.contains(&true) {
            2
        } else if !errors.is_empty() {
            3
        } else if strict && self.results.iter().any(|r| r.outcome.verdicts().contains(&Verdict::FailsWithWitness)) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let _ = write!(out, "== {} ({})", r.task_id, task_name(r.task));
            if let Some(h) = &r.horizon {
                let _ = write!(out, " [{}, N={}, eps={}]", r.mode, h.n, format_rational(&h.eps));
            }
            if let Some(ms) = r.timing_ms {
                let _ = write!(out, " {ms} ms");
            }
            out.push('\n');
            text_outcome(&mut out, &r.outcome);
        }
        out
    }
}

fn task_name(t: TaskKind) -> String {
    serde_json::to_value(t).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn vec_text(v: &[Rational]) -> String {
    match v {
        [q] => format_rational(q),
        _ => format!("({})", v.iter().map(format_rational).collect::<Vec<_>>().join(", ")),
    }
}

fn enclosure_text(e: &Enclosure) -> String {
    if e.is_point() {
        format_rational(&e.lo)
    } else {
        format!("[{}, {}]", format_rational(&e.lo), format_rational(&e.hi))
    }
}

fn witness_text(w: &Witness) -> String {
    let value = w.value.as_ref().map_or("divergent".to_string(), enclosure_text);
    let set = w.set.as_ref().map(|s| format!(" E={s}")).unwrap_or_default();
    format!("row {} of {} (ν={}){set}: value {value}, target {}", w.n, w.member, w.nu, format_rational(&w.target))
}

fn condition_lines(out: &mut String, reports: &[ConditionReport]) {
    for c in reports {
        let _ = write!(out, "  {:<4} {}", c.condition, c.verdict);
        if let Some(w) = &c.witness {
            let _ = write!(out, "  witness: {}", witness_text(w));
        }
        if let Some(s) = &c.scope {
            let _ = write!(out, "  scope: {s}");
        }
        out.push('\n');
    }
}

fn text_outcome(out: &mut String, o: &Outcome) {
    match o {
        Outcome::Conditions { reports } => condition_lines(out, reports),
        Outcome::AlmostRegular(a) => {
            let _ = writeln!(out, "  σ check: injective={} no periodic points={} (n < {})", a.sigma_check.injective, a.sigma_check.no_periodic_points, a.sigma_check.checked_up_to);
            condition_lines(out, &a.k_route);
            condition_lines(out, &a.family_route);
            let _ = writeln!(out, "  routes agree: {}", a.routes_agree);
        }
        Outcome::UniformLimit(UniformLimit::Converges { eta, t }) => {
            let _ = writeln!(out, "  converges to {} (t={t})", vec_text(eta));
        }
        Outcome::UniformLimit(UniformLimit::Diverges { members, n }) => {
            let _ = writeln!(out, "  diverges: members {} and {} disagree at row {n}", members.0, members.1);
        }
        Outcome::Equivalence(e) => {
            for i in &e.items {
                let _ = write!(out, "  ({}) {}", i.item, i.verdict);
                if let Some(eta) = &i.eta {
                    let _ = write!(out, "  η={}", vec_text(eta));
                }
                if let Some(s) = &i.witness_selection {
                    let _ = write!(out, "  witness selection: {s}");
                }
                out.push('\n');
            }
            let _ = writeln!(out, "  selections tested: {}, consistent: {}", e.selections_tested, e.consistent);
        }
        Outcome::Limsup(l) => {
            let _ = writeln!(
                out,
                "  lhs={} rhsLowerBound={} adversarialRhs={} {} (selections tested: {}, {})",
                format_rational(&l.lhs),
                format_rational(&l.rhs_lower_bound),
                format_rational(&l.adversarial_rhs),
                l.verdict,
                l.selections_tested,
                l.adversarial
            );
        }
        Outcome::SigmaLimit(SigmaLimit::Converges { eta, certificate }) => {
            let cert = match certificate {
                SigmaCertificate::ClosedForm { bound } => format!("closed form, |F_n x - η| <= {}/(n+1)", format_rational(bound)),
                SigmaCertificate::Horizon { t, nu_max } => format!("horizon, t={t}, ν < {nu_max}"),
            };
            let _ = writeln!(out, "  σ-limit {} ({cert})", vec_text(eta));
        }
        Outcome::SigmaLimit(SigmaLimit::Diverges { members, n }) => {
            let _ = writeln!(out, "  no σ-limit: means {} and {} disagree at row {n}", members.0, members.1);
        }
        Outcome::IdealLimit(LimitView::Converges { eta, exact, certificate }) => {
            let _ = writeln!(out, "  limit {} ({}; {certificate})", vec_text(eta), if *exact { "exact" } else { "horizon" });
        }
        Outcome::IdealLimit(LimitView::Diverges { a, b, indices }) => {
            let _ = writeln!(out, "  no limit: {} near n={} and {} near n={}", vec_text(a), indices.0, vec_text(b), indices.1);
        }
        Outcome::ClusterPoints { intervals, exact } => {
            for i in intervals {
                let _ = writeln!(out, "  [{}, {}] ~ {}", format_rational(&i.lo), format_rational(&i.hi), format_rational(&i.representative));
            }
            let _ = writeln!(out, "  exact: {exact}");
        }
        Outcome::Core { lo, hi } => {
            let _ = writeln!(out, "  core [{}, {}]", format_rational(lo), format_rational(hi));
        }
        Outcome::MatrixNorm { norms } => {
            for n in norms {
                let value = n.value.as_ref().map_or("unbounded".into(), enclosure_text);
                let _ = writeln!(out, "  {}: {value} ({:?})", n.member, n.verdict);
            }
        }
        Outcome::Error { message, .. } => {
            let _ = writeln!(out, "  error: {message}");
        }
    }
}

fn single(model: &Model, t: &TaskDoc) -> Result<OperatorMatrix> {
    let f = model.task_family(t)?;
    match f.members() {
        [a] => Ok(a.clone()),
        _ => Err(SummaError::Schema(format!("task `{}` takes a single matrix", task_name(t.task)))),
    }
}

fn execute(model: &Model, t: &TaskDoc, h: &HorizonParams) -> Result<Outcome> {
    let ideal = || model.ideal(t.ideal.as_deref().or(t.ideal_i.as_deref()));
    let ideal_i = || model.ideal(t.ideal_i.as_deref().or(t.ideal.as_deref()));
    let ideal_j = || model.ideal(t.ideal_j.as_deref().or(t.ideal.as_deref()));
    let sets = model.task_test_sets(t)?;
    Ok(match t.task {
        TaskKind::CheckRegular => {
            let f = model.task_family(t)?;
            let target = TargetOperator(model.task_target(t, &f)?);
            Outcome::Conditions { reports: check_regular_family(&f, ideal_i()?, ideal_j()?, &target, h, &sets)? }
        }
        TaskKind::CheckMapsZero => Outcome::Conditions { reports: check_maps_to_zero(&model.task_family(t)?, ideal_j()?, h)? },
        TaskKind::CheckCoreInclusion => Outcome::Conditions { reports: check_core_inclusion(&single(model, t)?, ideal()?, h, &sets)? },
        TaskKind::CheckUniformCore => {
            Outcome::Conditions { reports: check_uniform_core_inclusion(&model.task_family(t)?, ideal()?, h, &sets)? }
        }
        TaskKind::UniformLimit => Outcome::UniformLimit(uniform_limit(&model.task_family(t)?, model.task_sequence(t)?, ideal()?, h)?),
        TaskKind::TheoremEquivalence => Outcome::Equivalence(test_theorem_equivalence(
            &model.task_family(t)?,
            model.task_sequence(t)?,
            ideal()?,
            h,
            &model.task_enum(t),
        )?),
        TaskKind::UniformLimsup => Outcome::Limsup(verify_uniform_limsup_identity(
            &model.task_family(t)?,
            model.task_sequence(t)?,
            ideal()?,
            h,
            &model.task_enum(t),
        )?),
        TaskKind::SigmaLimit => Outcome::SigmaLimit(sigma_limit(model.task_sequence(t)?, &model.sigma(t.sigma.as_deref())?, ideal()?, h)?),
        TaskKind::CheckAlmostRegular => {
            let a = single(model, t)?;
            let f = model.task_family(t)?;
            let target = TargetOperator(model.task_target(t, &f)?);
            Outcome::AlmostRegular(check_almost_regular(&a, &model.sigma(t.sigma.as_deref())?, ideal_i()?, ideal_j()?, &target, h, &sets)?)
        }
        TaskKind::IdealLimit => Outcome::IdealLimit(ideal_lim(model.task_sequence(t)?, ideal()?, h)?.into()),
        TaskKind::ClusterPoints => {
            let c = cluster_points(model.task_sequence(t)?, ideal()?, h)?;
            Outcome::ClusterPoints {
                intervals: c.intervals.into_iter().map(|i| IntervalView { lo: i.lo, hi: i.hi, representative: i.representative }).collect(),
                exact: c.exact,
            }
        }
        TaskKind::Core => {
            let (lo, hi) = core(model.task_sequence(t)?, ideal()?, h)?;
            Outcome::Core { lo, hi }
        }
        TaskKind::MatrixNorm => Outcome::MatrixNorm {
            norms: model
                .task_family(t)?
                .members()
                .iter()
                .map(|a| {
                    let m = matrix_norm(a, h.n);
                    NormView { member: a.label().to_string(), value: m.value, verdict: m.verdict, worst_row: m.worst_row }
                })
                .collect(),
        },
    })
}

fn run_task(model: &Model, id: String, t: &TaskDoc, opts: &RunOptions) -> TaskResult {
    let start = Instant::now();
    let horizon = model.task_horizon(t, &opts.overrides);
    let outcome = horizon.as_ref().map_err(Clone::clone).and_then(|h| execute(model, t, h));
    let outcome = outcome.unwrap_or_else(|e| Outcome::Error { message: e.to_string(), schema: e.is_schema_error() });
    TaskResult {
        task_id: id,
        task: t.task,
        mode: opts.mode,
        horizon: horizon.ok(),
        outcome,
        timing_ms: opts.timing.then(|| start.elapsed().as_millis()),
    }
}

/// Resolve a document and run its tasks concurrently; results keep
/// declaration order.
pub fn run(doc: &Document, opts: &RunOptions) -> Result<Report> {
    let model = Model::resolve(doc, opts.mode)?;
    opts.overrides.apply(&model.horizon)?;
    let ids = doc.task_ids();
    let results = doc.tasks.par_iter().zip(ids).map(|(t, id)| run_task(&model, id, t, opts)).collect();
    Ok(Report { schema_version: SCHEMA_VERSION, mode: opts.mode, seed: opts.seed, results })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayReport {
    pub id: String,
    pub verdict: Verdict,
    pub witness: Witness,
    #[serde(serialize_with = "ser_opt_enclosure")]
    pub replayed: Option<Enclosure>,
    /// The recomputed value equals the reported one.
    pub reproduced: bool,
}

impl ReplayReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("replay reports serialize")
    }

    pub fn to_text(&self) -> String {
        let replayed = self.replayed.as_ref().map_or("divergent".into(), enclosure_text);
        format!(
            "{} {}\n  witness: {}\n  replayed value: {replayed}\n  reproduced: {}\n",
            self.id,
            self.verdict,
            witness_text(&self.witness),
            self.reproduced
        )
    }
}

/// Re-run the task named by `id = "<task>/<condition>"` and recompute its
/// witness row from scratch.
pub fn replay(doc: &Document, opts: &RunOptions, id: &str) -> Result<ReplayReport> {
    let (task_id, condition) = id.rsplit_once('/').ok_or_else(|| SummaError::UnknownLabel(format!("witness id `{id}` is not <task>/<condition>")))?;
    let model = Model::resolve(doc, opts.mode)?;
    let ids = doc.task_ids();
    let pos = ids.iter().position(|i| i == task_id).ok_or_else(|| SummaError::UnknownLabel(format!("task `{task_id}`")))?;
    let t = &doc.tasks[pos];
    let h = model.task_horizon(t, &opts.overrides)?;
    let outcome = execute(&model, t, &h)?;
    let report = outcome
        .conditions()
        .into_iter()
        .find(|c| c.condition == condition)
        .cloned()
        .ok_or_else(|| SummaError::UnknownLabel(format!("condition `{condition}` in task `{task_id}`")))?;
    let w = report.witness.ok_or_else(|| SummaError::UnknownLabel(format!("`{id}` has no witness ({})", report.verdict)))?;
    let replayed = match t.task {
        TaskKind::CheckAlmostRegular => {
            let a = single(&model, t)?;
            let sigma = model.sigma(t.sigma.as_deref())?;
            if condition.starts_with('K') {
                replay_orbit_witness(&a, &sigma, &w, &h)?
            } else {
                replay_witness(&w, &composed_family(&a, &sigma, h.nu_max)?, &h)?
            }
        }
        _ => replay_witness(&w, &model.task_family(t)?, &h)?,
    };
    let reproduced = replayed == w.value;
    Ok(ReplayReport { id: id.to_string(), verdict: report.verdict, witness: w, replayed, reproduced })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document::parse(text).unwrap()
    }

    const BATTERY: &str = r#"{
        "matrices": [
            {"label": "C", "kind": "cesaro"},
            {"label": "two", "kind": "corpus", "name": "row-sum-2"},
            {"label": "even", "kind": "corpus", "name": "even-mass"},
            {"label": "odd", "kind": "corpus", "name": "odd-mass"}
        ],
        "sequences": [{"label": "alt", "kind": "periodic", "block": ["1", "0"]}],
        "horizon": {"n": 64},
        "tasks": [
            {"id": "ces", "task": "check-regular", "matrix": "C"},
            {"id": "two", "task": "check-regular", "matrix": "two"},
            {"id": "eq", "task": "theorem-equivalence", "family": ["even", "odd"], "sequence": "alt"},
            {"id": "sig", "task": "sigma-limit", "sequence": "alt"},
            {"id": "lim", "task": "ideal-limit", "sequence": "alt"}
        ]
    }"#;

    #[test]
    fn runs_in_order_with_exit_codes() {
        let d = doc(BATTERY);
        let r = run(&d, &RunOptions::default()).unwrap();
        let ids: Vec<&str> = r.results.iter().map(|t| t.task_id.as_str()).collect();
        assert_eq!(ids, ["ces", "two", "eq", "sig", "lim"]);
        assert_eq!(r.results[0].outcome.verdicts(), vec![Verdict::Holds; 4]);
        assert_eq!(r.results[1].outcome.verdicts()[2], Verdict::FailsWithWitness);
        assert_eq!(r.exit_code(false), 0);
        assert_eq!(r.exit_code(true), 1);
        match &r.results[3].outcome {
            Outcome::SigmaLimit(s) => assert_eq!(s.eta().unwrap(), [Rational::new(1.into(), 2.into())]),
            o => panic!("unexpected {o:?}"),
        }
        let text = r.to_text();
        assert!(text.contains("M3   FailsWithWitness  witness: row"));
        assert!(text.contains("witness selection: []+(0,1)^ω") || text.contains("witness selection: []+(1,0)^ω"), "{text}");
    }

    #[test]
    fn machine_reports_are_deterministic() {
        let d = doc(BATTERY);
        let a = run(&d, &RunOptions::default()).unwrap().to_json();
        let b = run(&d, &RunOptions::default()).unwrap().to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schemaVersion"], 1);
        assert_eq!(v["results"][3]["outcome"]["eta"][0], "1/2");
    }

    #[test]
    fn witnesses_replay() {
        let d = doc(BATTERY);
        let r = replay(&d, &RunOptions::default(), "two/M3").unwrap();
        assert!(r.reproduced);
        assert_eq!(r.verdict, Verdict::FailsWithWitness);
        assert!(matches!(replay(&d, &RunOptions::default(), "ces/M3"), Err(SummaError::UnknownLabel(_))));
        assert!(matches!(replay(&d, &RunOptions::default(), "nope/M3"), Err(SummaError::UnknownLabel(_))));
    }

    #[test]
    fn runtime_errors_are_results() {
        let d = doc(r#"{"matrices": [{"label": "C", "kind": "cesaro"}], "ideals": [{"label": "dz", "kind": "density-zero"}],
            "tasks": [{"task": "check-regular", "matrix": "C", "idealJ": "dz"}]}"#);
        let r = run(&d, &RunOptions::default()).unwrap();
        assert!(matches!(r.results[0].outcome, Outcome::Error { schema: false, .. }));
        assert_eq!(r.exit_code(false), 3);
        let empty = run(&doc("{}"), &RunOptions::default()).unwrap();
        assert!(empty.results.is_empty());
        assert_eq!(empty.exit_code(true), 0);
    }
}
