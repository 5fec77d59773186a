//! Row-selected matrices `B ∈ ℬ_𝒜`, uniform limits, the equivalence tester
//! and the uniform-limsup identity.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SummaError};
use crate::ideal::{deviation_verdict, lim_of_samples, limsup_of_samples, HorizonParams, HorizonVerdict, IdealSpec, LimitResult, Samples};
use crate::matrix::{MatrixFamily, OperatorMatrix, TailModel};
use crate::regularity::{row_tolerance, Verdict};
use crate::scalar::{format_rational, Enclosure, Rational};
use crate::sequence::VectorSequence;
use crate::transform::{transform_cached, Terms};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectionKind {
    EventuallyPeriodic { prefix: Vec<usize>, period: Vec<usize> },
    /// Row-wise choices for `n < len`, member 0 beyond.
    Adversarial { choices: Vec<usize> },
    Explicit { prefix: Vec<usize>, default: usize },
}

/// `n ↦ ν_n`, total on ω with values below `arity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SelectionSeq {
    pub kind: SelectionKind,
    pub arity: usize,
}

impl SelectionSeq {
    pub fn eventually_periodic(arity: usize, prefix: Vec<usize>, period: Vec<usize>) -> Result<Self> {
        if period.is_empty() {
            return Err(SummaError::Schema("selection period must be nonempty".into()));
        }
        Self::checked(SelectionKind::EventuallyPeriodic { prefix, period }, arity)
    }

    pub fn constant(arity: usize, nu: usize) -> Result<Self> {
        Self::eventually_periodic(arity, Vec::new(), vec![nu])
    }

    pub fn explicit(arity: usize, prefix: Vec<usize>, default: usize) -> Result<Self> {
        Self::checked(SelectionKind::Explicit { prefix, default }, arity)
    }

    pub fn adversarial(arity: usize, choices: Vec<usize>) -> Result<Self> {
        Self::checked(SelectionKind::Adversarial { choices }, arity)
    }

    fn checked(kind: SelectionKind, arity: usize) -> Result<Self> {
        let s = SelectionSeq { kind, arity };
        let used: Vec<usize> = match &s.kind {
            SelectionKind::EventuallyPeriodic { prefix, period } => prefix.iter().chain(period).copied().collect(),
            SelectionKind::Adversarial { choices } => choices.clone(),
            SelectionKind::Explicit { prefix, default } => prefix.iter().chain([default]).copied().collect(),
        };
        if arity == 0 || used.iter().any(|&v| v >= arity) {
            return Err(SummaError::ArityMismatch { expected: arity, got: used.into_iter().max().map_or(0, |v| v + 1) });
        }
        Ok(s)
    }

    pub fn at(&self, n: usize) -> usize {
        match &self.kind {
            SelectionKind::EventuallyPeriodic { prefix, period } => {
                if n < prefix.len() {
                    prefix[n]
                } else {
                    period[(n - prefix.len()) % period.len()]
                }
            }
            SelectionKind::Adversarial { choices } => choices.get(n).copied().unwrap_or(0),
            SelectionKind::Explicit { prefix, default } => prefix.get(n).copied().unwrap_or(*default),
        }
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for SelectionSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SelectionKind::EventuallyPeriodic { prefix, period } => write!(f, "[{}]+({})^ω", join(prefix), join(period)),
            SelectionKind::Adversarial { choices } => {
                let shown: Vec<usize> = choices.iter().take(12).copied().collect();
                let more = if choices.len() > 12 { ",…" } else { "" };
                write!(f, "adversarial[{}{more}] (len {})", join(&shown), choices.len())
            }
            SelectionKind::Explicit { prefix, default } => write!(f, "[{}]+({default})^ω", join(prefix)),
        }
    }
}

/// `B` with `B_n = A^{s(n)}_n`.
pub fn select_matrix(family: &MatrixFamily, s: &SelectionSeq) -> Result<OperatorMatrix> {
    if s.arity != family.size() {
        return Err(SummaError::ArityMismatch { expected: family.size(), got: s.arity });
    }
    let members: Arc<Vec<OperatorMatrix>> = Arc::new(family.members().to_vec());
    let sel = Arc::new(s.clone());
    let (m1, s1) = (members.clone(), sel.clone());
    let (m2, s2) = (members.clone(), sel.clone());
    let (m3, s3) = (members, sel);
    let tail = TailModel::PerRow(Arc::new(move |n| m1[s1.at(n)].row_tail(n)));
    let entry = Arc::new(move |n: usize, k: usize| m2[s2.at(n)].entry(n, k));
    let rows = Arc::new(move |n: usize| m3[s3.at(n)].finite_row(n).unwrap_or_default());
    let b = OperatorMatrix::from_parts(format!("B{s}"), family.d(), family.m(), tail, entry, Some(rows));
    Ok(match family.norm_bound() {
        Some(bound) => b.with_norm_bound(bound),
        None => b,
    })
}

/// Smallest `q` with `w` a power of `w[..q]`.
fn primitive_root(w: &[usize]) -> Vec<usize> {
    let n = w.len();
    (1..=n)
        .find(|&q| n.is_multiple_of(q) && (0..n).all(|i| w[i] == w[i % q]))
        .map(|q| w[..q].to_vec())
        .expect("q = n always works")
}

fn least_rotation(w: &[usize]) -> Vec<usize> {
    (0..w.len()).map(|r| [&w[r..], &w[..r]].concat()).min().expect("nonempty word")
}

/// Minimal `(prefix, period)` describing the same sequence.
fn canonical(prefix: &[usize], period: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut prefix = prefix.to_vec();
    let mut period = primitive_root(period);
    while let Some(&last) = prefix.last() {
        if last != *period.last().expect("nonempty") {
            break;
        }
        prefix.pop();
        period.rotate_right(1);
    }
    (prefix, period)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnumParams {
    pub prefix: usize,
    pub period: usize,
    pub budget: u128,
}

impl Default for EnumParams {
    fn default() -> Self {
        EnumParams { prefix: 2, period: 3, budget: 100_000 }
    }
}

/// Eventually periodic selections with prefix `<= P` and period `<= Q`,
/// one per class of equal prefix and rotation-equivalent tail.
pub fn enumerate_selections(kappa: usize, params: &EnumParams) -> Result<Vec<SelectionSeq>> {
    if kappa == 0 || params.period == 0 {
        return Err(SummaError::Schema("enumeration needs κ >= 1 and period >= 1".into()));
    }
    let needed = (kappa as u128).checked_pow((params.prefix + params.period) as u32).unwrap_or(u128::MAX);
    if needed > params.budget {
        return Err(SummaError::BudgetExceeded { needed, budget: params.budget });
    }
    let words = |len: usize| -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out.into_iter().flat_map(|w| (0..kappa).map(move |c| [w.clone(), vec![c]].concat())).collect();
        }
        out
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in 0..=params.prefix {
        let prefixes = words(p);
        for q in 1..=params.period {
            for pre in &prefixes {
                for per in words(q) {
                    let (cp, cq) = canonical(pre, &per);
                    if seen.insert((cp.clone(), least_rotation(&cq))) {
                        out.push(SelectionSeq { kind: SelectionKind::EventuallyPeriodic { prefix: cp, period: cq }, arity: kappa });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `A^ν x` for every member at horizon `N`, as enclosures.
pub struct MemberTransforms {
    /// `[ν][n][coordinate]`
    pub rows: Vec<Samples>,
}

impl MemberTransforms {
    pub fn compute(family: &MatrixFamily, x: &VectorSequence, h: &HorizonParams) -> Result<Self> {
        if family.d() != x.dim() {
            return Err(SummaError::DimensionMismatch(format!(
                "family takes dimension {}, sequence `{}` has dimension {}",
                family.d(),
                x.label(),
                x.dim()
            )));
        }
        let xs = Terms::new(x, h.n + 1);
        let tol = row_tolerance(h);
        let rows = family
            .members()
            .iter()
            .map(|a| Ok(transform_cached(a, &xs, h.n, &tol)?.iter().map(|r| r.enclosures()).collect()))
            .collect::<Result<Vec<Samples>>>()?;
        Ok(MemberTransforms { rows })
    }

    /// `B x` for `B = select_matrix(𝒜, s)`, read off the member rows.
    pub fn select(&self, s: &SelectionSeq) -> Samples {
        (0..self.rows[0].len()).map(|n| self.rows[s.at(n)][n].clone()).collect()
    }

    /// `n ↦ max_ν A^ν_n x` for scalar families.
    pub fn rowwise_max(&self) -> Vec<Enclosure> {
        (0..self.rows[0].len())
            .map(|n| self.rows.iter().map(|r| r[n][0].clone()).reduce(|a, b| a.max(&b)).expect("nonempty family"))
            .collect()
    }
}

fn l1(x: &[Enclosure], eta: &[Rational]) -> Enclosure {
    x.iter().zip(eta).fold(Enclosure::zero(), |acc, (e, q)| acc.add(&e.distance_to(q)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum UniformLimit {
    Converges {
        #[serde(serialize_with = "crate::scalar::ser::rationals")]
        eta: Vec<Rational>,
        t: usize,
    },
    /// Members `members.0` and `members.1` disagree at row `n`.
    Diverges { members: (usize, usize), n: usize },
}

/// Uniform `𝒜`-limit of `x` along `I`.
pub fn uniform_limit(family: &MatrixFamily, x: &VectorSequence, ideal: &IdealSpec, h: &HorizonParams) -> Result<UniformLimit> {
    let table = MemberTransforms::compute(family, x, h)?;
    uniform_limit_from(&table, ideal, h)
}

pub fn uniform_limit_from(table: &MemberTransforms, ideal: &IdealSpec, h: &HorizonParams) -> Result<UniformLimit> {
    let eta = match lim_of_samples(&table.rows[0], ideal, h)? {
        LimitResult::Converges(l) => l.eta,
        LimitResult::Diverges(p) => return Ok(UniformLimit::Diverges { members: (0, 0), n: p.indices.0 }),
    };
    let mut dev = Vec::with_capacity(h.n);
    let mut arg = Vec::with_capacity(h.n);
    for n in 0..table.rows[0].len() {
        let (nu, d) = table
            .rows
            .iter()
            .enumerate()
            .map(|(nu, r)| (nu, l1(&r[n], &eta)))
            .reduce(|a, b| if b.1.lo > a.1.lo { b } else { a })
            .expect("nonempty family");
        let all = table.rows.iter().map(|r| l1(&r[n], &eta)).reduce(|a, b| a.max(&b)).expect("nonempty");
        dev.push(Enclosure { lo: d.lo, hi: all.hi });
        arg.push(nu);
    }
    match deviation_verdict(&dev, ideal, h) {
        HorizonVerdict::Holds { t, .. } => Ok(UniformLimit::Converges { eta, t }),
        HorizonVerdict::Fails { n, .. } => Ok(UniformLimit::Diverges { members: (0, arg[n]), n }),
        HorizonVerdict::Unknown => Err(SummaError::HorizonTooSmall(format!("uniform limit undecided at N = {}", h.n))),
    }
}

/// Row-wise argmax of `A^ν_n x` (ties to the smallest `ν`).
pub fn adversarial_limsup_selection(family: &MatrixFamily, x: &VectorSequence, h: &HorizonParams) -> Result<SelectionSeq> {
    require_real_bounded(family)?;
    let table = MemberTransforms::compute(family, x, h)?;
    Ok(argmax_selection(&table, |e: &[Enclosure]| e[0].mid()))
}

fn argmax_selection(table: &MemberTransforms, key: impl Fn(&[Enclosure]) -> Rational) -> SelectionSeq {
    let kappa = table.rows.len();
    let choices = (0..table.rows[0].len())
        .map(|n| {
            let mut best = 0;
            let mut best_key = key(&table.rows[0][n]);
            for nu in 1..kappa {
                let k = key(&table.rows[nu][n]);
                if k > best_key {
                    best = nu;
                    best_key = k;
                }
            }
            best
        })
        .collect();
    SelectionSeq { kind: SelectionKind::Adversarial { choices }, arity: kappa }
}

fn require_real_bounded(family: &MatrixFamily) -> Result<()> {
    if family.d() != 1 || family.m() != 1 {
        return Err(SummaError::Precondition("the uniform limsup is defined for real matrices".into()));
    }
    if family.norm_bound().is_none() {
        return Err(SummaError::Precondition("the family has no certified uniform norm bound".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemReport {
    pub item: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_selection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_vec")]
    pub eta: Option<Vec<Rational>>,
}

fn ser_opt_vec<S: serde::Serializer>(v: &Option<Vec<Rational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => crate::scalar::ser::rationals(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceReport {
    pub items: Vec<ItemReport>,
    pub selections_tested: usize,
    /// No item Holds while another Fails, and equal limits when both hold.
    pub consistent: bool,
}

#[derive(Clone, Debug)]
enum BOutcome {
    Converges(Vec<Rational>),
    Diverges,
    Unknown,
}

fn outcome(samples: &Samples, ideal: &IdealSpec, h: &HorizonParams) -> Result<BOutcome> {
    match lim_of_samples(samples, ideal, h) {
        Ok(LimitResult::Converges(l)) => Ok(BOutcome::Converges(l.eta)),
        Ok(LimitResult::Diverges(_)) => Ok(BOutcome::Diverges),
        Err(SummaError::HorizonTooSmall(_)) => Ok(BOutcome::Unknown),
        Err(e) => Err(e),
    }
}

/// Tests uniform summability (i), existence of every `B`-limit (ii) and a
/// common `B`-limit (iii) on enumerated and adversarial selections.
pub fn test_theorem_equivalence(
    family: &MatrixFamily,
    x: &VectorSequence,
    ideal: &IdealSpec,
    h: &HorizonParams,
    params: &EnumParams,
) -> Result<EquivalenceReport> {
    if !ideal.is_countably_generated() {
        return Err(SummaError::Precondition(format!("ideal `{}` is not countably generated", ideal.label())));
    }
    let table = MemberTransforms::compute(family, x, h)?;
    let (item1, eta1) = match uniform_limit_from(&table, ideal, h) {
        Ok(UniformLimit::Converges { eta, .. }) => (Verdict::Holds, Some(eta)),
        Ok(UniformLimit::Diverges { .. }) => (Verdict::FailsWithWitness, None),
        Err(SummaError::HorizonTooSmall(_)) => (Verdict::UnknownAtHorizon, None),
        Err(e) => return Err(e),
    };

    let mut selections = enumerate_selections(family.size(), params)?;
    let reference: Vec<Rational> = match &eta1 {
        Some(eta) => eta.clone(),
        None => table.rows[0].last().map(|v| v.iter().map(Enclosure::mid).collect()).unwrap_or_default(),
    };
    selections.push(argmax_selection(&table, |v| l1(v, &reference).mid()));
    let outcomes: Vec<BOutcome> =
        selections.par_iter().map(|s| outcome(&table.select(s), ideal, h)).collect::<Result<_>>()?;

    // two selections with different limits interleave into a divergent one
    let converged: Vec<(usize, &Vec<Rational>)> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match o {
            BOutcome::Converges(eta) => Some((i, eta)),
            _ => None,
        })
        .collect();
    let differing = converged.iter().find_map(|(i, a)| converged.iter().find(|(_, b)| b != a).map(|(j, _)| (*i, *j)));
    if let Some((i, j)) = differing {
        let (si, sj) = (&selections[i], &selections[j]);
        let choices = (0..h.n).map(|n| if (n / 2) % 2 == 0 { si.at(n) } else { sj.at(n) }).collect();
        let mixed = SelectionSeq { kind: SelectionKind::Adversarial { choices }, arity: family.size() };
        let o = outcome(&table.select(&mixed), ideal, h)?;
        selections.push(mixed);
        let mut outs = outcomes;
        outs.push(o);
        return Ok(assemble(item1, eta1, &selections, &outs));
    }
    Ok(assemble(item1, eta1, &selections, &outcomes))
}

fn assemble(item1: Verdict, eta1: Option<Vec<Rational>>, selections: &[SelectionSeq], outcomes: &[BOutcome]) -> EquivalenceReport {
    let diverging = outcomes.iter().position(|o| matches!(o, BOutcome::Diverges));
    let unknown = outcomes.iter().any(|o| matches!(o, BOutcome::Unknown));
    let limits: Vec<&Vec<Rational>> = outcomes
        .iter()
        .filter_map(|o| match o {
            BOutcome::Converges(e) => Some(e),
            _ => None,
        })
        .collect();
    let (item2, w2) = match diverging {
        Some(i) => (Verdict::FailsWithWitness, Some(selections[i].to_string())),
        None if unknown => (Verdict::UnknownAtHorizon, None),
        None => (Verdict::Holds, None),
    };
    let split = outcomes.iter().enumerate().find_map(|(i, o)| match o {
        BOutcome::Converges(e) if Some(&e) != limits.first() => Some(i),
        _ => None,
    });
    let (item3, w3, eta3) = match (diverging, split) {
        (Some(i), _) | (None, Some(i)) => (Verdict::FailsWithWitness, Some(selections[i].to_string()), None),
        (None, None) if unknown => (Verdict::UnknownAtHorizon, None, None),
        (None, None) => (Verdict::Holds, None, limits.first().map(|e| (*e).clone())),
    };
    let verdicts = [item1, item2, item3];
    let holds = verdicts.contains(&Verdict::Holds);
    let fails = verdicts.contains(&Verdict::FailsWithWitness);
    let same_eta = match (&eta1, &eta3) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    };
    EquivalenceReport {
        items: vec![
            ItemReport { item: "i".into(), verdict: item1, witness_selection: None, eta: eta1 },
            ItemReport { item: "ii".into(), verdict: item2, witness_selection: w2, eta: None },
            ItemReport { item: "iii".into(), verdict: item3, witness_selection: w3, eta: eta3 },
        ],
        selections_tested: selections.len(),
        consistent: !(holds && fails) && same_eta,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LimsupIdentity {
    #[serde(serialize_with = "crate::scalar::ser::rational")]
    pub lhs: Rational,
    #[serde(serialize_with = "crate::scalar::ser::rational")]
    pub rhs_lower_bound: Rational,
    #[serde(serialize_with = "crate::scalar::ser::rational")]
    pub adversarial_rhs: Rational,
    pub verdict: Verdict,
    pub selections_tested: usize,
    pub adversarial: String,
}

/// `I-limsup_n max_ν A^ν_n x` against `sup_B I-limsup_n B_n x`.
pub fn verify_uniform_limsup_identity(
    family: &MatrixFamily,
    x: &VectorSequence,
    ideal: &IdealSpec,
    h: &HorizonParams,
    params: &EnumParams,
) -> Result<LimsupIdentity> {
    require_real_bounded(family)?;
    let table = MemberTransforms::compute(family, x, h)?;
    let lhs = limsup_of_samples(&table.rowwise_max(), ideal, h)?;
    let selections = enumerate_selections(family.size(), params)?;
    let bounds: Vec<Rational> = selections
        .par_iter()
        .map(|s| {
            let bx: Vec<Enclosure> = table.select(s).into_iter().map(|mut v| v.remove(0)).collect();
            limsup_of_samples(&bx, ideal, h)
        })
        .collect::<Result<_>>()?;
    let rhs_lower_bound = bounds.into_iter().max().expect("at least one selection");
    let adv = argmax_selection(&table, |e| e[0].mid());
    let b = select_matrix(family, &adv)?;
    let bx = crate::transform::transform(&b, x, h.n, &row_tolerance(h))?;
    let bx: Vec<Enclosure> = bx.iter().map(|r| r.enclosures().remove(0)).collect();
    let adversarial_rhs = limsup_of_samples(&bx, ideal, h)?;
    let verdict = if adversarial_rhs == lhs && rhs_lower_bound <= lhs { Verdict::Holds } else { Verdict::FailsWithWitness };
    Ok(LimsupIdentity {
        lhs,
        rhs_lower_bound,
        adversarial_rhs,
        verdict,
        selections_tested: selections.len() + 1,
        adversarial: adv.to_string(),
    })
}

impl fmt::Display for LimsupIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lhs {} rhs≥ {} adversarial {} ({})",
            format_rational(&self.lhs),
            format_rational(&self.rhs_lower_bound),
            format_rational(&self.adversarial_rhs),
            self.verdict
        )
    }
}
