//! JSON input documents: matrices, sequences, ideals, σ-maps and tasks.
//!
//! Rationals are written as `"p/q"` strings. A document is parsed into plain
//! serde types first (these round-trip), then resolved into runtime objects.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::entry::OperatorEntry;
use crate::error::{Result, SummaError};
use crate::ideal::{HorizonParams, IdealSpec};
use crate::matrix::{MatrixFamily, OperatorMatrix, RowTail, TailModel};
use crate::scalar::{parse_rational, Interval, Rational, Scalar, ScalarMode};
use crate::selection::{select_matrix, EnumParams, SelectionSeq};
use crate::sequence::VectorSequence;
use crate::sets::{SetDescriptor, SetDescriptorDoc};
use crate::sigma::SigmaMap;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Document {
    #[serde(default)]
    pub matrices: Vec<MatrixDoc>,
    #[serde(default)]
    pub sequences: Vec<SequenceDoc>,
    #[serde(default)]
    pub ideals: Vec<IdealDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigmas: Vec<SigmaDoc>,
    #[serde(default)]
    pub tasks: Vec<TaskDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<HorizonDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Cesaro,
    Identity,
    Zero,
    Euler,
    Geometric,
    Rowselect,
    Banded,
    DensePrefix,
    Corpus,
}

/// A scalar `"p/q"` (times the identity when `d = m > 1`) or an `m × d` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryDoc {
    Scalar(String),
    Grid(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandDoc {
    pub lower: usize,
    pub upper: usize,
}

/// Eventually periodic when `period` is given, otherwise `prefix` then `default`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionDoc {
    #[serde(default)]
    pub prefix: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct MatrixDoc {
    pub label: String,
    pub kind: MatrixKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub family: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    /// Banded entries keyed by `"r,offset"` with `r = n mod period`, `offset = k - n`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub entries: BTreeMap<String, EntryDoc>,
    /// Dense prefix block, row-major.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<Vec<EntryDoc>>,
    /// Matrix supplying the rows below a dense prefix; zero rows when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl MatrixDoc {
    pub fn new(label: impl Into<String>, kind: MatrixKind) -> Self {
        MatrixDoc {
            label: label.into(),
            kind,
            d: None,
            m: None,
            norm_bound: None,
            coefficient: None,
            ratio: None,
            family: Vec::new(),
            selection: None,
            band: None,
            period: None,
            entries: BTreeMap::new(),
            rows: Vec::new(),
            tail: None,
            name: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    Constant,
    EventuallyConstant,
    Periodic,
    EventuallyPeriodic,
    Corpus,
}

/// One term: a scalar string or a vector of strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermDoc {
    Scalar(String),
    Vector(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceDoc {
    pub label: String,
    pub kind: SequenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdealKindDoc {
    Fin,
    DensityZero,
    CountablyGenerated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DualBaseDoc {
    Named(String),
    Sets(Vec<SetDescriptorDoc>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct IdealDoc {
    pub label: String,
    pub kind: IdealKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_base: Option<DualBaseDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaKindDoc {
    Shift,
    Affine,
    Blocks,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaDoc {
    pub label: String,
    pub kind: SigmaKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perm: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct HorizonDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmax: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_max: Option<usize>,
}

impl HorizonDoc {
    /// Fields present here override `base`; a new `n` resets `tmax` to `n/2`.
    pub fn apply(&self, base: &HorizonParams) -> Result<HorizonParams> {
        let mut h = base.clone();
        if let Some(n) = self.n {
            h = HorizonParams { n, tmax: n / 2, ..h };
        }
        if let Some(eps) = &self.eps {
            h.eps = parse_rational(eps)?;
        }
        if let Some(t) = self.tmax {
            h.tmax = t;
        }
        if let Some(nu) = self.nu_max {
            h.nu_max = nu;
        }
        h.validate()?;
        Ok(h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    CheckRegular,
    CheckMapsZero,
    CheckCoreInclusion,
    CheckUniformCore,
    UniformLimit,
    TheoremEquivalence,
    UniformLimsup,
    SigmaLimit,
    CheckAlmostRegular,
    IdealLimit,
    ClusterPoints,
    Core,
    MatrixNorm,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumDoc {
    pub prefix: usize,
    pub period: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct TaskDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub family: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<String>,
    #[serde(default, rename = "idealI", skip_serializing_if = "Option::is_none")]
    pub ideal_i: Option<String>,
    #[serde(default, rename = "idealJ", skip_serializing_if = "Option::is_none")]
    pub ideal_j: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub test_sets: Vec<SetDescriptorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<HorizonDoc>,
    #[serde(default, rename = "enum", skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<EnumDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
}

impl TaskDoc {
    pub fn new(task: TaskKind) -> Self {
        TaskDoc {
            id: None,
            task,
            family: Vec::new(),
            matrix: None,
            sequence: None,
            ideal: None,
            ideal_i: None,
            ideal_j: None,
            target: None,
            test_sets: Vec::new(),
            horizon: None,
            enumeration: None,
            sigma: None,
        }
    }
}

impl Document {
    pub fn parse(text: &str) -> Result<Document> {
        serde_json::from_str(text).map_err(|e| SummaError::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    /// Task ids, defaulting to `task-<index>`.
    pub fn task_ids(&self) -> Vec<String> {
        self.tasks.iter().enumerate().map(|(i, t)| t.id.clone().unwrap_or_else(|| format!("task-{i}"))).collect()
    }
}

/// Resolved runtime objects of a document.
#[derive(Clone, Debug)]
pub struct Model {
    pub mode: ScalarMode,
    pub matrices: BTreeMap<String, OperatorMatrix>,
    pub sequences: BTreeMap<String, VectorSequence>,
    pub ideals: BTreeMap<String, IdealSpec>,
    pub sigmas: BTreeMap<String, SigmaMap>,
    pub horizon: HorizonParams,
}

fn schema(msg: impl Into<String>) -> SummaError {
    SummaError::Schema(msg.into())
}

/// `"p/q"` or `"sqrt(p/q)"`; the latter is always an interval.
pub fn parse_scalar(s: &str, mode: ScalarMode) -> Result<Scalar> {
    let t = s.trim();
    if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let q = parse_rational(inner)?;
        if q < Rational::zero() {
            return Err(schema(format!("square root of a negative number in `{s}`")));
        }
        return Ok(Scalar::Interval(Interval::sqrt_of(&q)));
    }
    Ok(Scalar::from_rational(parse_rational(t)?, mode))
}

fn parse_entry(e: &EntryDoc, d: usize, m: usize, mode: ScalarMode, ctx: &str) -> Result<OperatorEntry> {
    match e {
        EntryDoc::Scalar(s) => {
            if d != m {
                return Err(SummaError::DimensionMismatch(format!("{ctx}: scalar entry needs d = m, got d = {d}, m = {m}")));
            }
            Ok(OperatorEntry::scaled_identity(d, parse_scalar(s, mode)?))
        }
        EntryDoc::Grid(rows) => {
            if rows.len() != m || rows.iter().any(|r| r.len() != d) {
                return Err(SummaError::DimensionMismatch(format!("{ctx}: entry grid must be {m}×{d}")));
            }
            let data = rows.iter().flatten().map(|s| parse_scalar(s, mode)).collect::<Result<Vec<_>>>()?;
            Ok(OperatorEntry::new(m, d, data))
        }
    }
}

fn parse_term(t: &TermDoc, mode: ScalarMode) -> Result<Vec<Scalar>> {
    match t {
        TermDoc::Scalar(s) => Ok(vec![parse_scalar(s, mode)?]),
        TermDoc::Vector(v) => v.iter().map(|s| parse_scalar(s, mode)).collect(),
    }
}

fn norm_upper(e: &OperatorEntry) -> Rational {
    e.norm().upper()
}

impl Model {
    pub fn resolve(doc: &Document, mode: ScalarMode) -> Result<Model> {
        let horizon = match &doc.horizon {
            Some(hd) => hd.apply(&HorizonParams::default())?,
            None => HorizonParams::default(),
        };
        let mut model = Model {
            mode,
            matrices: BTreeMap::new(),
            sequences: BTreeMap::new(),
            ideals: BTreeMap::new(),
            sigmas: BTreeMap::new(),
            horizon,
        };
        model.ideals.insert("fin".into(), IdealSpec::fin());
        model.ideals.insert("density-zero".into(), IdealSpec::density_zero());
        model.sigmas.insert("shift".into(), SigmaMap::shift());
        for md in &doc.matrices {
            if model.matrices.contains_key(&md.label) {
                return Err(schema(format!("matrix label `{}` is declared twice", md.label)));
            }
            let a = model.build_matrix(md)?;
            model.matrices.insert(md.label.clone(), a);
        }
        for sd in &doc.sequences {
            if model.sequences.contains_key(&sd.label) {
                return Err(schema(format!("sequence label `{}` is declared twice", sd.label)));
            }
            let x = model.build_sequence(sd)?;
            model.sequences.insert(sd.label.clone(), x);
        }
        for id in &doc.ideals {
            if model.ideals.contains_key(&id.label) {
                return Err(schema(format!("ideal label `{}` is declared twice or is built in", id.label)));
            }
            model.ideals.insert(id.label.clone(), build_ideal(id)?);
        }
        for sd in &doc.sigmas {
            if model.sigmas.contains_key(&sd.label) {
                return Err(schema(format!("sigma label `{}` is declared twice or is built in", sd.label)));
            }
            model.sigmas.insert(sd.label.clone(), build_sigma(sd)?);
        }
        for t in &doc.tasks {
            model.check_task(t)?;
        }
        Ok(model)
    }

    pub fn matrix(&self, label: &str) -> Result<&OperatorMatrix> {
        self.matrices.get(label).ok_or_else(|| SummaError::UnknownLabel(format!("matrix `{label}`")))
    }

    pub fn sequence(&self, label: &str) -> Result<&VectorSequence> {
        self.sequences.get(label).ok_or_else(|| SummaError::UnknownLabel(format!("sequence `{label}`")))
    }

    pub fn ideal(&self, label: Option<&str>) -> Result<&IdealSpec> {
        let label = label.unwrap_or("fin");
        self.ideals.get(label).ok_or_else(|| SummaError::UnknownLabel(format!("ideal `{label}`")))
    }

    pub fn sigma(&self, label: Option<&str>) -> Result<SigmaMap> {
        match label {
            None => Ok(SigmaMap::shift()),
            Some(l) => self.sigmas.get(l).cloned().ok_or_else(|| SummaError::UnknownLabel(format!("sigma `{l}`"))),
        }
    }

    pub fn family(&self, labels: &[String]) -> Result<MatrixFamily> {
        if labels.is_empty() {
            return Err(schema("task needs a nonempty `family`"));
        }
        let members = labels.iter().map(|l| self.matrix(l).cloned().map(|a| a.with_label(l.clone()))).collect::<Result<Vec<_>>>()?;
        MatrixFamily::new(members)
    }

    /// The task's family: `family`, or the singleton `matrix`.
    pub fn task_family(&self, t: &TaskDoc) -> Result<MatrixFamily> {
        match (&t.matrix, t.family.is_empty()) {
            (Some(m), true) => Ok(MatrixFamily::singleton(self.matrix(m)?.clone().with_label(m.clone()))),
            (None, false) => self.family(&t.family),
            (Some(_), false) => Err(schema("give either `matrix` or `family`, not both")),
            (None, true) => Err(schema(format!("task `{:?}` needs `matrix` or `family`", t.task))),
        }
    }

    pub fn task_sequence(&self, t: &TaskDoc) -> Result<&VectorSequence> {
        self.sequence(t.sequence.as_deref().ok_or_else(|| schema("task needs a `sequence`"))?)
    }

    pub fn task_horizon(&self, t: &TaskDoc, overrides: &HorizonDoc) -> Result<HorizonParams> {
        let h = match &t.horizon {
            Some(hd) => hd.apply(&self.horizon)?,
            None => self.horizon.clone(),
        };
        overrides.apply(&h)
    }

    pub fn task_target(&self, t: &TaskDoc, family: &MatrixFamily) -> Result<OperatorEntry> {
        match &t.target {
            None if family.d() == family.m() => Ok(OperatorEntry::scaled_identity(family.d(), Scalar::one())),
            None => Err(schema("a target operator is required when d ≠ m")),
            Some(rows) => parse_entry(&EntryDoc::Grid(rows.clone()), family.d(), family.m(), ScalarMode::Exact, "target"),
        }
    }

    pub fn task_test_sets(&self, t: &TaskDoc) -> Result<Vec<SetDescriptor>> {
        t.test_sets.iter().map(SetDescriptor::from_doc).collect()
    }

    pub fn task_enum(&self, t: &TaskDoc) -> EnumParams {
        match &t.enumeration {
            Some(e) => EnumParams {
                prefix: e.prefix,
                period: e.period,
                budget: e.budget.map_or(EnumParams::default().budget, u128::from),
            },
            None => EnumParams::default(),
        }
    }

    /// Structural checks: labels resolve and dimensions agree.
    fn check_task(&self, t: &TaskDoc) -> Result<()> {
        use TaskKind::*;
        for l in [&t.ideal, &t.ideal_i, &t.ideal_j].into_iter().flatten() {
            self.ideal(Some(l))?;
        }
        if let Some(s) = &t.sigma {
            self.sigma(Some(s))?;
        }
        if let Some(h) = &t.horizon {
            h.apply(&self.horizon)?;
        }
        self.task_test_sets(t)?;
        match t.task {
            IdealLimit | ClusterPoints | Core => {
                self.task_sequence(t)?;
            }
            SigmaLimit => {
                self.task_sequence(t)?;
            }
            MatrixNorm | CheckCoreInclusion => {
                self.task_family(t)?;
            }
            CheckRegular | CheckMapsZero | CheckUniformCore | CheckAlmostRegular => {
                let f = self.task_family(t)?;
                if matches!(t.task, CheckRegular | CheckAlmostRegular) {
                    self.task_target(t, &f)?;
                }
            }
            UniformLimit | TheoremEquivalence | UniformLimsup => {
                let f = self.task_family(t)?;
                let x = self.task_sequence(t)?;
                if f.d() != x.dim() {
                    return Err(SummaError::DimensionMismatch(format!(
                        "family takes dimension {}, sequence `{}` has dimension {}",
                        f.d(),
                        x.label(),
                        x.dim()
                    )));
                }
            }
        }
        Ok(())
    }

    fn build_matrix(&self, md: &MatrixDoc) -> Result<OperatorMatrix> {
        let (d, m) = (md.d.unwrap_or(1), md.m.unwrap_or(1));
        if d == 0 || m == 0 {
            return Err(SummaError::DimensionMismatch(format!("matrix `{}` has a zero dimension", md.label)));
        }
        let need = |field: &str| schema(format!("matrix `{}` of kind {:?} needs `{field}`", md.label, md.kind));
        let a = match md.kind {
            MatrixKind::Cesaro | MatrixKind::Identity => {
                if d != m {
                    return Err(SummaError::DimensionMismatch(format!("matrix `{}` must be square (d = m)", md.label)));
                }
                if md.kind == MatrixKind::Cesaro {
                    OperatorMatrix::cesaro(d)
                } else {
                    OperatorMatrix::identity(d)
                }
            }
            MatrixKind::Zero => OperatorMatrix::zero(d, m),
            MatrixKind::Euler => {
                if (d, m) != (1, 1) {
                    return Err(SummaError::DimensionMismatch(format!("matrix `{}`: euler is scalar", md.label)));
                }
                OperatorMatrix::euler()
            }
            MatrixKind::Geometric => {
                if (d, m) != (1, 1) {
                    return Err(SummaError::DimensionMismatch(format!("matrix `{}`: geometric is scalar", md.label)));
                }
                let c = parse_rational(md.coefficient.as_deref().ok_or_else(|| need("coefficient"))?)?;
                let r = parse_rational(md.ratio.as_deref().ok_or_else(|| need("ratio"))?)?;
                OperatorMatrix::geometric_rows(md.label.clone(), c, r)?
            }
            MatrixKind::Corpus => {
                let name = md.name.as_deref().ok_or_else(|| need("name"))?;
                crate::corpus::matrix(name).ok_or_else(|| SummaError::UnknownLabel(format!("corpus matrix `{name}`")))?
            }
            MatrixKind::Rowselect => {
                let family = self.family(&md.family)?;
                let sd = md.selection.as_ref().ok_or_else(|| need("selection"))?;
                let s = match (&sd.period, sd.default) {
                    (Some(p), None) => SelectionSeq::eventually_periodic(family.size(), sd.prefix.clone(), p.clone())?,
                    (None, Some(dflt)) => SelectionSeq::explicit(family.size(), sd.prefix.clone(), dflt)?,
                    _ => return Err(schema(format!("matrix `{}`: selection needs exactly one of `period`, `default`", md.label))),
                };
                select_matrix(&family, &s)?
            }
            MatrixKind::Banded => self.build_banded(md, d, m)?,
            MatrixKind::DensePrefix => self.build_dense(md, d, m)?,
        };
        if (a.d(), a.m()) != (d, m) && md.d.is_some() {
            return Err(SummaError::DimensionMismatch(format!(
                "matrix `{}` declares {}×{} but is {}×{}",
                md.label,
                m,
                d,
                a.m(),
                a.d()
            )));
        }
        let a = a.with_label(md.label.clone());
        Ok(match &md.norm_bound {
            Some(b) => a.with_norm_bound(parse_rational(b)?),
            None => a,
        })
    }

    fn build_banded(&self, md: &MatrixDoc, d: usize, m: usize) -> Result<OperatorMatrix> {
        let band = md.band.clone().ok_or_else(|| schema(format!("matrix `{}` needs `band`", md.label)))?;
        let period = md.period.unwrap_or(1);
        if period == 0 {
            return Err(schema(format!("matrix `{}`: period must be positive", md.label)));
        }
        let mut table: BTreeMap<(usize, i64), OperatorEntry> = BTreeMap::new();
        for (key, e) in &md.entries {
            let (r, off) = key
                .split_once(',')
                .and_then(|(r, o)| Some((r.trim().parse::<usize>().ok()?, o.trim().parse::<i64>().ok()?)))
                .ok_or_else(|| schema(format!("matrix `{}`: entry key `{key}` is not `r,offset`", md.label)))?;
            if r >= period {
                return Err(schema(format!("matrix `{}`: residue {r} is not below the period {period}", md.label)));
            }
            if off < -(band.lower as i64) || off > band.upper as i64 {
                return Err(SummaError::InvalidTailModel(format!(
                    "matrix `{}`: entry at offset {off} lies outside the band [-{}, {}]",
                    md.label, band.lower, band.upper
                )));
            }
            table.insert((r, off), parse_entry(e, d, m, self.mode, &md.label)?);
        }
        let bound = (0..period)
            .map(|r| table.range((r, i64::MIN)..=(r, i64::MAX)).map(|(_, e)| norm_upper(e)).sum::<Rational>())
            .max()
            .unwrap_or_default();
        let table = Arc::new(table);
        let t2 = table.clone();
        let zero = OperatorEntry::zero(m, d);
        let entry = move |n: usize, k: usize| {
            let off = k as i64 - n as i64;
            table.get(&(n % period, off)).cloned().unwrap_or_else(|| zero.clone())
        };
        Ok(OperatorMatrix::new(md.label.clone(), d, m, TailModel::Banded { lower: band.lower, upper: band.upper }, entry)
            .with_rows(move |n| {
                t2.range((n % period, i64::MIN)..=(n % period, i64::MAX))
                    .filter_map(|((_, off), e)| {
                        let k = n as i64 + off;
                        (k >= 0 && !e.is_certified_zero()).then(|| (k as usize, e.clone()))
                    })
                    .collect()
            })
            .with_norm_bound(bound))
    }

    fn build_dense(&self, md: &MatrixDoc, d: usize, m: usize) -> Result<OperatorMatrix> {
        let block: Vec<Vec<OperatorEntry>> = md
            .rows
            .iter()
            .map(|r| r.iter().map(|e| parse_entry(e, d, m, self.mode, &md.label)).collect())
            .collect::<Result<_>>()?;
        let tail = match &md.tail {
            Some(l) => {
                let t = self.matrix(l)?.clone();
                if (t.d(), t.m()) != (d, m) {
                    return Err(SummaError::DimensionMismatch(format!("matrix `{}`: tail `{l}` has other dimensions", md.label)));
                }
                Some(t)
            }
            None => None,
        };
        let prefix_bound = block.iter().map(|r| r.iter().map(norm_upper).sum::<Rational>()).max().unwrap_or_default();
        let bound = match &tail {
            None => Some(prefix_bound),
            Some(t) => t.norm_bound().map(|b| b.clone().max(prefix_bound)),
        };
        let rows_n = block.len();
        let block = Arc::new(block);
        let (b1, b2, b3) = (block.clone(), block.clone(), block);
        let (t1, t2, t3) = (tail.clone(), tail.clone(), tail);
        let row_tail = move |n: usize| {
            if n < rows_n {
                let last = b1[n].iter().rposition(|e| !e.is_certified_zero());
                RowTail::Finite { first: 0, last }
            } else {
                t1.as_ref().map_or(RowTail::Finite { first: 0, last: None }, |t| t.row_tail(n))
            }
        };
        let zero = OperatorEntry::zero(m, d);
        let entry = move |n: usize, k: usize| {
            if n < rows_n {
                b2[n].get(k).cloned().unwrap_or_else(|| zero.clone())
            } else {
                t2.as_ref().map_or_else(|| zero.clone(), |t| t.entry(n, k))
            }
        };
        let rows = move |n: usize| {
            if n < rows_n {
                b3[n].iter().enumerate().filter(|(_, e)| !e.is_certified_zero()).map(|(k, e)| (k, e.clone())).collect()
            } else {
                t3.as_ref().and_then(|t| t.finite_row(n)).unwrap_or_default()
            }
        };
        let a = OperatorMatrix::from_parts(md.label.clone(), d, m, TailModel::PerRow(Arc::new(row_tail)), Arc::new(entry), Some(Arc::new(rows)));
        Ok(match bound {
            Some(b) => a.with_norm_bound(b),
            None => a,
        })
    }

    fn build_sequence(&self, sd: &SequenceDoc) -> Result<VectorSequence> {
        let terms = |v: &[TermDoc]| v.iter().map(|t| parse_term(t, self.mode)).collect::<Result<Vec<_>>>();
        let need = |field: &str| schema(format!("sequence `{}` of kind {:?} needs `{field}`", sd.label, sd.kind));
        let x = match sd.kind {
            SequenceKind::Constant => VectorSequence::constant(&sd.label, parse_term(sd.value.as_ref().ok_or_else(|| need("value"))?, self.mode)?)?,
            SequenceKind::EventuallyConstant => VectorSequence::eventually_constant(
                &sd.label,
                terms(&sd.prefix)?,
                parse_term(sd.value.as_ref().ok_or_else(|| need("value"))?, self.mode)?,
            )?,
            SequenceKind::Periodic => {
                if sd.block.is_empty() {
                    return Err(need("block"));
                }
                VectorSequence::periodic(&sd.label, terms(&sd.block)?)?
            }
            SequenceKind::EventuallyPeriodic => {
                if sd.block.is_empty() {
                    return Err(need("block"));
                }
                VectorSequence::eventually_periodic(&sd.label, terms(&sd.prefix)?, terms(&sd.block)?)?
            }
            SequenceKind::Corpus => {
                let name = sd.name.as_deref().ok_or_else(|| need("name"))?;
                crate::corpus::scalar_sequences()
                    .into_iter()
                    .chain(crate::corpus::vector_sequences())
                    .find(|x| x.label() == name)
                    .ok_or_else(|| SummaError::UnknownLabel(format!("corpus sequence `{name}`")))?
                    .with_label(sd.label.clone())
            }
        };
        if let Some(d) = sd.d {
            if d != x.dim() {
                return Err(SummaError::DimensionMismatch(format!("sequence `{}` declares d = {d} but has dimension {}", sd.label, x.dim())));
            }
        }
        Ok(x)
    }
}

fn build_ideal(id: &IdealDoc) -> Result<IdealSpec> {
    match id.kind {
        IdealKindDoc::Fin => Ok(IdealSpec::fin().with_label(id.label.clone())),
        IdealKindDoc::DensityZero => Ok(IdealSpec::density_zero().with_label(id.label.clone())),
        IdealKindDoc::CountablyGenerated => match &id.dual_base {
            None => Err(schema(format!("ideal `{}` needs `dualBase`", id.label))),
            Some(DualBaseDoc::Named(n)) if n == "tails" => Ok(IdealSpec::fin().with_label(id.label.clone())),
            Some(DualBaseDoc::Named(n)) => Err(schema(format!("ideal `{}`: unknown dual base `{n}`", id.label))),
            Some(DualBaseDoc::Sets(sets)) => {
                let base = sets
                    .iter()
                    .map(|s| {
                        SetDescriptor::from_doc(s)?
                            .as_epset()
                            .cloned()
                            .ok_or_else(|| SummaError::InvalidIdeal(format!("ideal `{}`: dual base sets must be eventually periodic", id.label)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                IdealSpec::countably_generated(id.label.clone(), base)
            }
        },
    }
}

fn build_sigma(sd: &SigmaDoc) -> Result<SigmaMap> {
    let s = match sd.kind {
        SigmaKindDoc::Shift => SigmaMap::shift(),
        SigmaKindDoc::Affine => SigmaMap::affine(sd.a.unwrap_or(1), sd.b.unwrap_or(1))?,
        SigmaKindDoc::Blocks => SigmaMap::blocks(sd.perm.clone())?,
    };
    Ok(s.with_label(sd.label.clone()))
}
