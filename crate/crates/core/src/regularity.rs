//! Condition checkers for regular, maps-to-zero and core-inclusion matrix
//! families.
//!
//! Every limit condition is reduced to a scalar deviation sequence
//! `D_n = max_ν max_{i,j} |q^ν_n(i,j) - target(i,j)|` judged by
//! [`deviation_verdict`]. Rows are materialized once per member.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::entry::OperatorEntry;
use crate::error::{Result, SummaError};
use crate::ideal::{deviation_verdict, ideal_contains, HorizonParams, HorizonVerdict, IdealSpec, Tri};
use crate::matrix::{MaterialRow, MatrixFamily, OperatorMatrix, RowSum};
use crate::scalar::{int, Enclosure, Rational, Scalar};
use crate::sets::{SetDescriptor, Sparse};
use crate::transform::{matrix_norm, NormVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    FailsWithWitness,
    UnknownAtHorizon,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "Holds",
            Verdict::FailsWithWitness => "FailsWithWitness",
            Verdict::UnknownAtHorizon => "UnknownAtHorizon",
        })
    }
}

/// Row functional whose limit a condition constrains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Quantity {
    /// `Σ_k Σ_{i,j} |a_{n,k}(i,j)|`
    AbsRowSum,
    /// `Σ_k a_{n,k}(i,j)`
    RowSum { i: usize, j: usize },
    /// `Σ_{k ∈ E} a_{n,k}(i,j)`
    SetSum { i: usize, j: usize },
    /// `Σ_k |a_{n,k}(i,j)|`
    AbsEntrySum { i: usize, j: usize },
    /// `Σ_{k ∈ E} |a_{n,k}(i,j)|`
    SetAbsSum { i: usize, j: usize },
}

impl Quantity {
    pub fn eval(&self, row: &MaterialRow, set: Option<&SetDescriptor>, d: usize) -> RowSum {
        match *self {
            Quantity::AbsRowSum => row.sum(None, d, OperatorEntry::abs_sum),
            Quantity::RowSum { i, j } => row.sum(None, 1, |e| e.get(i, j).clone()),
            Quantity::SetSum { i, j } => row.sum(set, 1, |e| e.get(i, j).clone()),
            Quantity::AbsEntrySum { i, j } => row.sum(None, 1, |e| e.get(i, j).abs()),
            Quantity::SetAbsSum { i, j } => row.sum(set, 1, |e| e.get(i, j).abs()),
        }
    }

    fn uses_set(&self) -> bool {
        matches!(self, Quantity::SetSum { .. } | Quantity::SetAbsSum { .. })
    }
}

/// A concrete row where a condition is violated.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Witness {
    pub n: usize,
    pub nu: usize,
    pub member: String,
    pub quantity: Quantity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<SetDescriptor>,
    /// `None` when the row series diverges.
    #[serde(serialize_with = "ser_opt_enclosure")]
    pub value: Option<Enclosure>,
    #[serde(serialize_with = "crate::scalar::ser::rational")]
    pub target: Rational,
}

fn ser_opt_enclosure<S: serde::Serializer>(e: &Option<Enclosure>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => crate::scalar::ser::enclosure(e, s),
        None => s.serialize_str("divergent"),
    }
}

impl Witness {
    /// `|value - target|`, the violated deviation.
    pub fn deviation(&self) -> Option<Enclosure> {
        self.value.as_ref().map(|v| v.distance_to(&self.target))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionReport {
    pub condition: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Holds: `threshold - worst`; fails: `deviation - threshold`.
    #[serde(serialize_with = "crate::scalar::ser::opt_rational", skip_serializing_if = "Option::is_none")]
    pub margin: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
}

impl ConditionReport {
    fn new(condition: &str, verdict: Verdict) -> Self {
        ConditionReport { condition: condition.into(), verdict, witness: None, margin: None, scope: None }
    }

    fn with_scope(mut self, scope: impl Into<String>) -> Self {
        self.scope = Some(scope.into());
        self
    }
}

pub fn all_hold(reports: &[ConditionReport]) -> bool {
    reports.iter().all(|r| r.verdict == Verdict::Holds)
}

/// The limit operator `T` as an `m × d` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetOperator(pub OperatorEntry);

impl TargetOperator {
    /// `T = I` on `R^dim`.
    pub fn identity(dim: usize) -> Self {
        TargetOperator(OperatorEntry::scaled_identity(dim, Scalar::one()))
    }

    fn exact(&self, i: usize, j: usize) -> Result<Rational> {
        self.0
            .get(i, j)
            .as_exact()
            .cloned()
            .ok_or_else(|| SummaError::Precondition("target operator entries must be exact".into()))
    }
}

/// Tolerance for row truncation during condition checks.
pub fn row_tolerance(h: &HorizonParams) -> Rational {
    &h.eps / int(1024)
}

/// Per-row quantity values of a finite family at horizon.
pub trait RowSource: Sync {
    fn horizon(&self) -> usize;
    fn size(&self) -> usize;
    fn d(&self) -> usize;
    fn m(&self) -> usize;
    fn label(&self, nu: usize) -> String;
    /// Certified bound on `Σ_k ‖A^ν_{n,k}‖` for every row, if any.
    fn norm_certificate(&self, nu: usize) -> Option<Rational>;
    fn value(&self, nu: usize, n: usize, q: &Quantity, set: Option<&SetDescriptor>) -> RowSum;
}

/// Rows `0..N` of every member.
pub struct RowTable<'a> {
    family: &'a MatrixFamily,
    rows: Vec<Vec<MaterialRow>>,
}

impl<'a> RowTable<'a> {
    pub fn build(family: &'a MatrixFamily, h: &HorizonParams) -> Self {
        let tol = row_tolerance(h);
        let rows = family
            .members()
            .iter()
            .map(|a| (0..h.n).into_par_iter().map(|n| a.materialize_row(n, &tol)).collect())
            .collect();
        RowTable { family, rows }
    }
}

impl RowSource for RowTable<'_> {
    fn horizon(&self) -> usize {
        self.rows[0].len()
    }

    fn size(&self) -> usize {
        self.family.size()
    }

    fn d(&self) -> usize {
        self.family.d()
    }

    fn m(&self) -> usize {
        self.family.m()
    }

    fn label(&self, nu: usize) -> String {
        self.family.members()[nu].label().to_string()
    }

    fn norm_certificate(&self, nu: usize) -> Option<Rational> {
        let a = &self.family.members()[nu];
        a.norm_bound().filter(|_| matrix_norm(a, 1).verdict == NormVerdict::CertifiedFinite).cloned()
    }

    fn value(&self, nu: usize, n: usize, q: &Quantity, set: Option<&SetDescriptor>) -> RowSum {
        q.eval(&self.rows[nu][n], set, self.family.d())
    }
}

/// Per-row worst deviation over members and quantities.
struct Deviations {
    dev: Vec<Enclosure>,
    /// `(ν, quantity index, value)` attaining the largest lower bound.
    arg: Vec<(usize, usize, Enclosure)>,
    /// First row whose series diverges (`true`) or is uncertified.
    issue: Option<(usize, usize, usize, bool)>,
}

fn deviations(table: &dyn RowSource, quantities: &[(Quantity, Rational)], set: Option<&SetDescriptor>) -> Deviations {
    let per_row: Vec<_> = (0..table.horizon())
        .into_par_iter()
        .map(|n| {
            let mut best: Option<(Enclosure, (usize, usize, Enclosure))> = None;
            let mut dev: Option<Enclosure> = None;
            for nu in 0..table.size() {
                for (qi, (q, target)) in quantities.iter().enumerate() {
                    let value = match table.value(nu, n, q, set) {
                        RowSum::Value(v) => v,
                        other => return Err((n, nu, qi, matches!(other, RowSum::Divergent))),
                    };
                    let delta = value.distance_to(target);
                    if best.as_ref().is_none_or(|(b, _)| delta.lo > b.lo) {
                        best = Some((delta.clone(), (nu, qi, value)));
                    }
                    dev = Some(match dev {
                        Some(x) => x.max(&delta),
                        None => delta,
                    });
                }
            }
            let (_, arg) = best.expect("family and quantity list are nonempty");
            Ok((dev.expect("nonempty"), arg))
        })
        .collect();
    let mut out = Deviations { dev: Vec::new(), arg: Vec::new(), issue: None };
    for r in per_row {
        match r {
            Ok((dev, arg)) => {
                out.dev.push(dev);
                out.arg.push(arg);
            }
            Err(issue) => {
                out.issue = Some(issue);
                break;
            }
        }
    }
    out
}

fn witness(
    table: &dyn RowSource,
    n: usize,
    nu: usize,
    quantity: &Quantity,
    set: Option<&SetDescriptor>,
    value: Option<Enclosure>,
    target: &Rational,
) -> Witness {
    Witness {
        n,
        nu,
        member: table.label(nu),
        quantity: quantity.clone(),
        set: set.filter(|_| quantity.uses_set()).cloned(),
        value,
        target: target.clone(),
    }
}

/// Judge "`q → target` along `ideal`, uniformly over the family".
fn limit_condition(
    label: &str,
    table: &dyn RowSource,
    quantities: &[(Quantity, Rational)],
    set: Option<&SetDescriptor>,
    ideal: &IdealSpec,
    h: &HorizonParams,
) -> ConditionReport {
    let devs = deviations(table, quantities, set);
    if let Some((n, nu, qi, divergent)) = devs.issue {
        let (q, target) = &quantities[qi];
        return match divergent {
            true => ConditionReport {
                witness: Some(witness(table, n, nu, q, set, None, target)),
                ..ConditionReport::new(label, Verdict::FailsWithWitness)
            }
            .with_scope("row series diverges"),
            false => ConditionReport::new(label, Verdict::UnknownAtHorizon)
                .with_scope(format!("row {n} of `{}` has no tail certificate", table.label(nu))),
        };
    }
    match deviation_verdict(&devs.dev, ideal, h) {
        HorizonVerdict::Holds { t, worst } => ConditionReport {
            margin: Some(&h.eps - worst),
            ..ConditionReport::new(label, Verdict::Holds)
        }
        .with_scope(format!("deviation within eps from t = {t} at N = {}", h.n)),
        HorizonVerdict::Fails { n, margin, .. } => {
            let (nu, qi, value) = devs.arg[n].clone();
            let (q, target) = &quantities[qi];
            ConditionReport {
                witness: Some(witness(table, n, nu, q, set, Some(value), target)),
                margin: Some(margin),
                ..ConditionReport::new(label, Verdict::FailsWithWitness)
            }
        }
        HorizonVerdict::Unknown => ConditionReport::new(label, Verdict::UnknownAtHorizon)
            .with_scope(format!("deviation neither within eps nor persistent at N = {}", h.n)),
    }
}

/// Combine per-test-set reports: any failure wins, then any unknown.
fn combine(label: &str, reports: Vec<ConditionReport>, sets: &[SetDescriptor]) -> ConditionReport {
    let scope = format!(
        "test sets: {}",
        sets.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
    );
    if let Some(r) = reports.iter().find(|r| r.verdict == Verdict::FailsWithWitness) {
        return ConditionReport { condition: label.into(), ..r.clone() }.with_scope(scope);
    }
    if let Some(r) = reports.iter().find(|r| r.verdict == Verdict::UnknownAtHorizon) {
        let note = r.scope.clone().unwrap_or_default();
        return ConditionReport { condition: label.into(), ..r.clone() }.with_scope(format!("{scope}; {note}"));
    }
    let margin = reports.iter().filter_map(|r| r.margin.clone()).min();
    ConditionReport { margin, ..ConditionReport::new(label, Verdict::Holds) }.with_scope(scope)
}

/// `Σ_k Σ_{i,j} |a|` lower bounds per row for one member; on failure the
/// row and whether its series diverges.
fn abs_row_sums(table: &dyn RowSource, nu: usize) -> std::result::Result<Vec<Enclosure>, (usize, bool)> {
    (0..table.horizon())
        .map(|n| match table.value(nu, n, &Quantity::AbsRowSum, None) {
            RowSum::Value(v) => Ok(v),
            other => Err((n, matches!(other, RowSum::Divergent))),
        })
        .collect()
}

/// Growth at horizon on the index list `w`: the late half exceeds twice the
/// early quarter.
fn growth(values: &[Enclosure], w: &[usize]) -> Option<(usize, Rational)> {
    if w.len() < 4 {
        return None;
    }
    let early = w[..w.len() / 4].iter().map(|&k| values[k].lo.clone()).max()?;
    let late_idx = &w[w.len() / 2..];
    let late = late_idx.iter().map(|&k| values[k].lo.clone()).max()?;
    let threshold = &early * int(2);
    if early > Rational::default() && late >= threshold {
        let n = *late_idx.iter().find(|&&k| values[k].lo == late)?;
        return Some((n, threshold));
    }
    None
}

fn bounded_member(label: &str, table: &dyn RowSource, nu: usize) -> ConditionReport {
    let d = table.d();
    let sums = match abs_row_sums(table, nu) {
        Ok(s) => s,
        Err((n, true)) => {
            return ConditionReport {
                witness: Some(witness(table, n, nu, &Quantity::AbsRowSum, None, None, &Rational::default())),
                ..ConditionReport::new(label, Verdict::FailsWithWitness)
            }
            .with_scope("row series diverges")
        }
        Err((n, _)) => {
            return ConditionReport::new(label, Verdict::UnknownAtHorizon)
                .with_scope(format!("row {n} of `{}` has no tail certificate", table.label(nu)))
        }
    };
    if let Some(bound) = table.norm_certificate(nu) {
        let bound = bound * int(d as i64);
        if sums.iter().all(|s| s.lo <= bound) {
            let worst = sums.iter().map(|s| s.hi.clone()).max().unwrap_or_default();
            return ConditionReport { margin: Some(&bound - worst), ..ConditionReport::new(label, Verdict::Holds) }
                .with_scope(format!("certified bound {}", crate::scalar::format_rational(&bound)));
        }
    }
    let all: Vec<usize> = (0..sums.len()).collect();
    match growth(&sums, &all) {
        Some((n, threshold)) => {
            let value = sums[n].clone();
            ConditionReport {
                margin: Some(&value.lo - &threshold),
                witness: Some(witness(table, n, nu, &Quantity::AbsRowSum, None, Some(value), &Rational::default())),
                ..ConditionReport::new(label, Verdict::FailsWithWitness)
            }
            .with_scope(format!("row sums at least double between the first quarter and the second half of N; threshold {}", crate::scalar::format_rational(&threshold)))
        }
        None => ConditionReport::new(label, Verdict::UnknownAtHorizon).with_scope("no norm certificate"),
    }
}

/// Row-norm boundedness of each member.
fn condition_bounded(label: &str, table: &dyn RowSource) -> ConditionReport {
    let reports: Vec<ConditionReport> = (0..table.size()).map(|nu| bounded_member(label, table, nu)).collect();
    if let Some(r) = reports.iter().find(|r| r.verdict == Verdict::FailsWithWitness) {
        return r.clone();
    }
    if let Some(r) = reports.iter().find(|r| r.verdict == Verdict::UnknownAtHorizon) {
        return r.clone();
    }
    let margin = reports.iter().filter_map(|r| r.margin.clone()).min();
    ConditionReport { margin, ..ConditionReport::new(label, Verdict::Holds) }
}

/// Uniform row-norm boundedness on some `J ∈ J*`.
fn condition_uniformly_bounded(label: &str, table: &dyn RowSource, d1: &ConditionReport, j: &IdealSpec, h: &HorizonParams) -> ConditionReport {
    if d1.verdict == Verdict::Holds {
        // finitely many certified members: J = ω works
        return ConditionReport { margin: d1.margin.clone(), ..ConditionReport::new(label, Verdict::Holds) }
            .with_scope("J = ω, maximum of the member certificates");
    }
    let mut worst: Vec<Enclosure> = vec![Enclosure::zero(); table.horizon()];
    let mut arg = vec![0usize; table.horizon()];
    for nu in 0..table.size() {
        match abs_row_sums(table, nu) {
            Ok(sums) => {
                for (n, s) in sums.into_iter().enumerate() {
                    if s.lo > worst[n].lo {
                        arg[n] = nu;
                    }
                    worst[n] = worst[n].max(&s);
                }
            }
            Err(_) => return ConditionReport::new(label, Verdict::UnknownAtHorizon).with_scope("a member row is not summable"),
        }
    }
    let w = h.late_window(j);
    match growth(&worst, &w) {
        Some((n, threshold)) => ConditionReport {
            margin: Some(&worst[n].lo - &threshold),
            witness: Some(witness(table, n, arg[n], &Quantity::AbsRowSum, None, Some(worst[n].clone()), &Rational::default())),
            ..ConditionReport::new(label, Verdict::FailsWithWitness)
        }
        .with_scope("row sums grow along the dual base at horizon"),
        None => ConditionReport::new(label, Verdict::UnknownAtHorizon).with_scope("no uniform norm certificate"),
    }
}

fn prefix(family: &MatrixFamily) -> &'static str {
    if family.d() == 1 && family.m() == 1 {
        "M"
    } else {
        "D"
    }
}

fn coords(m: usize, d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |i| (0..d).map(move |j| (i, j)))
}

/// Sets certified to lie in `I`, used when quantifying over `E ∈ I`.
pub fn builtin_test_sets(ideal: &IdealSpec, h: &HorizonParams) -> Vec<SetDescriptor> {
    let mut sets = vec![SetDescriptor::finite([0]), SetDescriptor::finite([1]), SetDescriptor::finite([0, 1])];
    match ideal.kind() {
        crate::ideal::IdealKind::DensityZero => {
            sets.push(SetDescriptor::sparse(Sparse::Squares));
            sets.push(SetDescriptor::sparse(Sparse::Powers(2)));
        }
        crate::ideal::IdealKind::CountablyGenerated(crate::ideal::DualBase::Stable(base)) => {
            if let Some(last) = base.last() {
                let outside = last.complement();
                if !outside.is_finite() {
                    sets.push(SetDescriptor::from_epset(outside));
                }
            }
        }
        _ => {}
    }
    sets.retain(|s| ideal_contains(ideal, s, h) == Tri::Yes);
    sets
}

fn check_test_sets(ideal: &IdealSpec, sets: &[SetDescriptor], h: &HorizonParams) -> Result<Vec<SetDescriptor>> {
    for s in sets {
        if ideal_contains(ideal, s, h) != Tri::Yes {
            return Err(SummaError::Precondition(format!("test set {s} is not certified to lie in `{}`", ideal.label())));
        }
    }
    let mut all = sets.to_vec();
    for s in builtin_test_sets(ideal, h) {
        if !all.contains(&s) {
            all.push(s);
        }
    }
    Ok(all)
}

fn require_countably_generated(j: &IdealSpec) -> Result<()> {
    if !j.is_countably_generated() {
        return Err(SummaError::Precondition(format!("ideal `{}` has no countable dual base", j.label())));
    }
    Ok(())
}

/// `(I, J)`-regularity of a family with respect to `T`.
pub fn check_regular_family(
    family: &MatrixFamily,
    i_ideal: &IdealSpec,
    j_ideal: &IdealSpec,
    target: &TargetOperator,
    h: &HorizonParams,
    test_sets: &[SetDescriptor],
) -> Result<Vec<ConditionReport>> {
    let table = RowTable::build(family, h);
    check_regular_source(&table, prefix(family), i_ideal, j_ideal, target, h, test_sets)
}

/// The regularity conditions on any row source, labelled `{prefix}1..4`.
pub fn check_regular_source(
    table: &dyn RowSource,
    prefix: &str,
    i_ideal: &IdealSpec,
    j_ideal: &IdealSpec,
    target: &TargetOperator,
    h: &HorizonParams,
    test_sets: &[SetDescriptor],
) -> Result<Vec<ConditionReport>> {
    require_countably_generated(j_ideal)?;
    if (target.0.rows(), target.0.cols()) != (table.m(), table.d()) {
        return Err(SummaError::DimensionMismatch(format!(
            "target is {}×{}, family maps R^{} to R^{}",
            target.0.rows(),
            target.0.cols(),
            table.d(),
            table.m()
        )));
    }
    let sets = check_test_sets(i_ideal, test_sets, h)?;
    let p = prefix;
    let d1 = condition_bounded(&format!("{p}1"), table);
    let d2 = condition_uniformly_bounded(&format!("{p}2"), table, &d1, j_ideal, h);
    let sums: Vec<(Quantity, Rational)> =
        coords(table.m(), table.d()).map(|(i, j)| Ok((Quantity::RowSum { i, j }, target.exact(i, j)?))).collect::<Result<_>>()?;
    let d3 = limit_condition(&format!("{p}3"), table, &sums, None, j_ideal, h);
    let set_sums: Vec<(Quantity, Rational)> = coords(table.m(), table.d()).map(|(i, j)| (Quantity::SetSum { i, j }, Rational::default())).collect();
    let label4 = format!("{p}4");
    let per_set: Vec<ConditionReport> =
        sets.par_iter().map(|e| limit_condition(&label4, table, &set_sums, Some(e), j_ideal, h)).collect();
    let d4 = combine(&label4, per_set, &sets);
    Ok(vec![d1, d2, d3, d4])
}

pub fn check_regular_singleton(
    a: &OperatorMatrix,
    i_ideal: &IdealSpec,
    j_ideal: &IdealSpec,
    target: &TargetOperator,
    h: &HorizonParams,
    test_sets: &[SetDescriptor],
) -> Result<Vec<ConditionReport>> {
    check_regular_family(&MatrixFamily::singleton(a.clone()), i_ideal, j_ideal, target, h, test_sets)
}

/// Bounded sequences mapped uniformly `J`-to zero.
pub fn check_maps_to_zero(family: &MatrixFamily, j_ideal: &IdealSpec, h: &HorizonParams) -> Result<Vec<ConditionReport>> {
    require_countably_generated(j_ideal)?;
    let table = RowTable::build(family, h);
    let d1 = condition_bounded("D1", &table);
    let d2 = condition_uniformly_bounded("D2", &table, &d1, j_ideal, h);
    let abs: Vec<(Quantity, Rational)> = coords(family.m(), family.d()).map(|(i, j)| (Quantity::AbsEntrySum { i, j }, Rational::default())).collect();
    let d3 = limit_condition("D3♯", &table, &abs, None, j_ideal, h);
    Ok(vec![d1, d2, d3])
}

fn require_scalar(family: &MatrixFamily) -> Result<()> {
    if family.d() != 1 || family.m() != 1 {
        return Err(SummaError::Precondition("core inclusion is defined for real matrices".into()));
    }
    Ok(())
}

fn core_conditions(
    labels: [&str; 3],
    family: &MatrixFamily,
    i_ideal: &IdealSpec,
    h: &HorizonParams,
    test_sets: &[SetDescriptor],
) -> Result<Vec<ConditionReport>> {
    require_scalar(family)?;
    for a in family.members() {
        if matrix_norm(a, h.n).verdict != NormVerdict::CertifiedFinite {
            return Err(SummaError::Precondition(format!("matrix `{}` has no certified finite norm", a.label())));
        }
    }
    let sets = check_test_sets(i_ideal, test_sets, h)?;
    let fin = IdealSpec::fin();
    let table = RowTable::build(family, h);
    let c1_parts: Vec<ConditionReport> = sets
        .par_iter()
        .map(|e| limit_condition(labels[0], &table, &[(Quantity::SetAbsSum { i: 0, j: 0 }, int(0))], Some(e), &fin, h))
        .collect();
    let c1 = combine(labels[0], c1_parts, &sets);
    let c2 = limit_condition(labels[1], &table, &[(Quantity::RowSum { i: 0, j: 0 }, int(1))], None, &fin, h);
    let c3 = limit_condition(labels[2], &table, &[(Quantity::AbsEntrySum { i: 0, j: 0 }, int(1))], None, &fin, h);
    Ok(vec![c1, c2, c3])
}

/// Knopp-type core inclusion `core(Ax) ⊆ I-core(x)`.
pub fn check_core_inclusion(
    a: &OperatorMatrix,
    i_ideal: &IdealSpec,
    h: &HorizonParams,
    test_sets: &[SetDescriptor],
) -> Result<Vec<ConditionReport>> {
    core_conditions(["C1", "C2", "C3"], &MatrixFamily::singleton(a.clone()), i_ideal, h, test_sets)
}

pub fn check_uniform_core_inclusion(
    family: &MatrixFamily,
    i_ideal: &IdealSpec,
    h: &HorizonParams,
    test_sets: &[SetDescriptor],
) -> Result<Vec<ConditionReport>> {
    core_conditions(["L1", "L2", "L3"], family, i_ideal, h, test_sets)
}

/// Re-evaluate a witness: the quantity value at its row, or `None` when the
/// series diverges.
pub fn replay_witness(w: &Witness, family: &MatrixFamily, h: &HorizonParams) -> Result<Option<Enclosure>> {
    let a = family
        .members()
        .get(w.nu)
        .ok_or_else(|| SummaError::UnknownLabel(w.member.clone()))?;
    let row = a.materialize_row(w.n, &row_tolerance(h));
    match w.quantity.eval(&row, w.set.as_ref(), a.d()) {
        RowSum::Value(v) => Ok(Some(v)),
        RowSum::Divergent => Ok(None),
        RowSum::Unknown => Err(SummaError::NotInDomain { row: w.n, divergent: false, reason: "uncertified tail".into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::TailModel;
    use crate::scalar::rat;

    fn h() -> HorizonParams {
        HorizonParams::new(256)
    }

    fn verdicts(r: &[ConditionReport]) -> Vec<(String, Verdict)> {
        r.iter().map(|c| (c.condition.clone(), c.verdict)).collect()
    }

    fn fin() -> IdealSpec {
        IdealSpec::fin()
    }

    fn delta0() -> OperatorMatrix {
        OperatorMatrix::scalar_finite("delta0", |_| Some(0), |_, _| int(1)).with_norm_bound(int(1))
    }

    fn row_sum_two() -> OperatorMatrix {
        OperatorMatrix::scalar_finite("rowsum2", Some, |n, _| rat(2, n as i64 + 1)).with_norm_bound(int(2))
    }

    #[test]
    fn cesaro_is_regular() {
        let r = check_regular_singleton(&OperatorMatrix::cesaro(1), &fin(), &fin(), &TargetOperator::identity(1), &h(), &[]).unwrap();
        assert!(all_hold(&r), "{r:?}");
        assert_eq!(r.iter().map(|c| c.condition.as_str()).collect::<Vec<_>>(), ["M1", "M2", "M3", "M4"]);
    }

    #[test]
    fn column_matrix_fails_m4() {
        let r = check_regular_singleton(&delta0(), &fin(), &fin(), &TargetOperator::identity(1), &h(), &[SetDescriptor::finite([0])]).unwrap();
        assert_eq!(r[3].verdict, Verdict::FailsWithWitness);
        let w = r[3].witness.as_ref().unwrap();
        assert_eq!(w.value, Some(Enclosure::point(int(1))));
        assert_eq!(r[3].margin, Some(int(1) - rat(1, 16)));
    }

    #[test]
    fn row_sum_two_fails_m3() {
        let r = check_regular_singleton(&row_sum_two(), &fin(), &fin(), &TargetOperator::identity(1), &h(), &[]).unwrap();
        assert_eq!(r[2].verdict, Verdict::FailsWithWitness);
        assert_eq!(r[2].witness.as_ref().unwrap().value, Some(Enclosure::point(int(2))));
    }

    #[test]
    fn identity_fails_m4_along_evens_under_density_zero() {
        // the evens are not density zero, so use the ideal generated by them
        let evens = crate::sets::EpSet::progression(2, 0);
        let i_ideal = IdealSpec::generated_by("evens", &evens).unwrap();
        let r = check_regular_singleton(
            &OperatorMatrix::identity(1),
            &i_ideal,
            &fin(),
            &TargetOperator::identity(1),
            &h(),
            &[SetDescriptor::evens()],
        )
        .unwrap();
        assert_eq!(r[3].verdict, Verdict::FailsWithWitness);
        // with the squares in place of the evens, density zero applies directly
        let dz = IdealSpec::density_zero();
        let r = check_regular_singleton(&OperatorMatrix::identity(1), &dz, &fin(), &TargetOperator::identity(1), &h(), &[]).unwrap();
        assert_eq!(r[3].verdict, Verdict::FailsWithWitness);
        assert!(r[3].witness.as_ref().unwrap().set.is_some());
    }

    #[test]
    fn unbounded_rows_fail_m1() {
        let a = OperatorMatrix::scalar_finite("ones", Some, |_, _| int(1));
        let r = check_regular_singleton(&a, &fin(), &fin(), &TargetOperator::identity(1), &h(), &[]).unwrap();
        assert_eq!(r[0].verdict, Verdict::FailsWithWitness);
    }

    #[test]
    fn witnesses_replay() {
        for a in [delta0(), row_sum_two()] {
            let fam = MatrixFamily::singleton(a);
            let r = check_regular_family(&fam, &fin(), &fin(), &TargetOperator::identity(1), &h(), &[SetDescriptor::finite([0])]).unwrap();
            for c in r.iter().filter(|c| c.verdict == Verdict::FailsWithWitness) {
                let w = c.witness.as_ref().unwrap();
                let replayed = replay_witness(w, &fam, &h()).unwrap();
                assert_eq!(replayed, w.value);
                let dev = replayed.unwrap().distance_to(&w.target);
                assert_eq!(Some(&dev.lo - &h().eps), c.margin);
            }
        }
    }

    #[test]
    fn maps_to_zero_examples() {
        let diag = OperatorMatrix::scalar_finite("diag", Some, |n, k| if n == k { rat(1, n as i64 + 1) } else { int(0) })
            .with_norm_bound(int(1));
        assert!(all_hold(&check_maps_to_zero(&MatrixFamily::singleton(diag), &fin(), &h()).unwrap()));
        let c = check_maps_to_zero(&MatrixFamily::singleton(OperatorMatrix::cesaro(1)), &fin(), &h()).unwrap();
        assert_eq!(c[2].verdict, Verdict::FailsWithWitness);
        assert!(all_hold(&check_maps_to_zero(&MatrixFamily::singleton(OperatorMatrix::zero(1, 1)), &fin(), &h()).unwrap()));
    }

    #[test]
    fn core_inclusion_examples() {
        assert!(all_hold(&check_core_inclusion(&OperatorMatrix::cesaro(1), &fin(), &h(), &[]).unwrap()));
        let signed = OperatorMatrix::scalar_finite("signed", Some, |n, k| rat(if k % 2 == 0 { 1 } else { -1 }, n as i64 + 1))
            .with_norm_bound(int(1));
        let r = check_core_inclusion(&signed, &fin(), &h(), &[]).unwrap();
        assert_eq!(verdicts(&r)[1..], [("C2".to_string(), Verdict::FailsWithWitness), ("C3".to_string(), Verdict::Holds)]);
        let r = check_core_inclusion(&delta0(), &fin(), &h(), &[SetDescriptor::finite([0])]).unwrap();
        assert_eq!(r[0].verdict, Verdict::FailsWithWitness);
        let unbounded = OperatorMatrix::scalar_finite("ones", Some, |_, _| int(1));
        assert!(matches!(check_core_inclusion(&unbounded, &fin(), &h(), &[]), Err(SummaError::Precondition(_))));
    }

    #[test]
    fn density_zero_is_not_countably_generated() {
        let r = check_regular_singleton(&OperatorMatrix::cesaro(1), &fin(), &IdealSpec::density_zero(), &TargetOperator::identity(1), &h(), &[]);
        assert!(matches!(r, Err(SummaError::Precondition(_))));
    }

    #[test]
    fn test_sets_must_be_in_the_ideal() {
        let r = check_regular_singleton(&OperatorMatrix::cesaro(1), &fin(), &fin(), &TargetOperator::identity(1), &h(), &[SetDescriptor::evens()]);
        assert!(matches!(r, Err(SummaError::Precondition(_))));
    }

    #[test]
    fn vector_valued_cesaro() {
        let r = check_regular_singleton(&OperatorMatrix::cesaro(2), &fin(), &fin(), &TargetOperator::identity(2), &h(), &[]).unwrap();
        assert!(all_hold(&r));
        assert_eq!(r[0].condition, "D1");
    }

    #[test]
    fn uncertified_tail_is_unknown() {
        let a = OperatorMatrix::new("opaque", 1, 1, TailModel::Uncertified, |n, k| {
            OperatorEntry::scalar(Scalar::Exact(if k <= n { rat(1, n as i64 + 1) } else { int(0) }))
        });
        let r = check_regular_singleton(&a, &fin(), &fin(), &TargetOperator::identity(1), &h(), &[]).unwrap();
        assert!(r.iter().all(|c| c.verdict == Verdict::UnknownAtHorizon));
    }
}
