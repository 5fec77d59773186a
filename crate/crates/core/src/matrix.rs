//! Infinite matrices of operator entries with a declared per-row tail model.
//!
//! A matrix is a pure generator `(n, k) ↦ A_{n,k}` plus a [`TailModel`]
//! certifying how far each row extends. Rows are materialized through
//! [`OperatorMatrix::materialize_row`], which either returns the full finite
//! row or a finite part with a certified remainder.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::entry::OperatorEntry;
use crate::error::{Result, SummaError};
use crate::scalar::{int, pow, Enclosure, Rational, Scalar};
use crate::sets::SetDescriptor;

pub type EntryFn = Arc<dyn Fn(usize, usize) -> OperatorEntry + Send + Sync>;
pub type RowFn = Arc<dyn Fn(usize) -> Vec<(usize, OperatorEntry)> + Send + Sync>;
pub type IndexFn = Arc<dyn Fn(usize) -> Option<usize> + Send + Sync>;
pub type CoefficientFn = Arc<dyn Fn(usize) -> Rational + Send + Sync>;

/// What the tail model says about one row.
#[derive(Clone, Debug, PartialEq)]
pub enum RowTail {
    /// Nonzero entries only at `first..=last`; `last = None` is the zero row.
    Finite { first: usize, last: Option<usize> },
    /// `‖A_{n,k}‖ <= c · ratio^k` for every `k`.
    Geometric { c: Rational, ratio: Rational },
    /// `A_{n,k} = A_{n,from}` for every `k >= from`.
    ConstantFrom { from: usize },
    Uncertified,
}

#[derive(Clone)]
pub enum TailModel {
    /// Row `n` vanishes beyond the returned index (`None`: the whole row is 0).
    FiniteSupport(IndexFn),
    /// Row `n` vanishes outside `n - lower ..= n + upper`.
    Banded { lower: usize, upper: usize },
    GeometricBound { coefficient: CoefficientFn, ratio: Rational },
    /// Row `n` is constant from the returned column on.
    ConstantTail(Arc<dyn Fn(usize) -> usize + Send + Sync>),
    PerRow(Arc<dyn Fn(usize) -> RowTail + Send + Sync>),
    Uncertified,
}

impl fmt::Debug for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailModel::FiniteSupport(_) => f.write_str("FiniteSupport"),
            TailModel::Banded { lower, upper } => write!(f, "Banded({lower}, {upper})"),
            TailModel::GeometricBound { ratio, .. } => write!(f, "GeometricBound(ratio {ratio})"),
            TailModel::ConstantTail(_) => f.write_str("ConstantTail"),
            TailModel::PerRow(_) => f.write_str("PerRow"),
            TailModel::Uncertified => f.write_str("Uncertified"),
        }
    }
}

impl TailModel {
    pub fn finite_support(f: impl Fn(usize) -> Option<usize> + Send + Sync + 'static) -> Self {
        TailModel::FiniteSupport(Arc::new(f))
    }

    pub fn geometric(coefficient: impl Fn(usize) -> Rational + Send + Sync + 'static, ratio: Rational) -> Result<Self> {
        if ratio < Rational::zero() || ratio >= Rational::one() {
            return Err(SummaError::InvalidTailModel(format!("geometric ratio {ratio} is outside [0, 1)")));
        }
        Ok(TailModel::GeometricBound { coefficient: Arc::new(coefficient), ratio })
    }

    pub fn row_tail(&self, n: usize) -> RowTail {
        match self {
            TailModel::FiniteSupport(f) => RowTail::Finite { first: 0, last: f(n) },
            TailModel::Banded { lower, upper } => RowTail::Finite { first: n.saturating_sub(*lower), last: Some(n + upper) },
            TailModel::GeometricBound { coefficient, ratio } => RowTail::Geometric { c: coefficient(n), ratio: ratio.clone() },
            TailModel::ConstantTail(from) => RowTail::ConstantFrom { from: from(n) },
            TailModel::PerRow(f) => f(n),
            TailModel::Uncertified => RowTail::Uncertified,
        }
    }

    /// Every row has finite support (so all row series are finite sums).
    pub fn is_finite_type(&self) -> bool {
        matches!(self, TailModel::FiniteSupport(_) | TailModel::Banded { .. })
    }
}

/// What lies beyond the materialized part of a row.
#[derive(Clone, Debug, PartialEq)]
pub enum Remainder {
    /// The row is complete.
    Zero,
    /// `Σ_{k >= start} ‖A_{n,k}‖ <= bound`.
    Geometric { start: usize, bound: Rational },
    /// `A_{n,k} = entry` for all `k >= from`.
    Constant { from: usize, entry: OperatorEntry },
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialRow {
    pub n: usize,
    pub entries: Vec<(usize, OperatorEntry)>,
    pub remainder: Remainder,
}

/// Outcome of summing a functional over a (possibly infinite) row.
#[derive(Clone, Debug, PartialEq)]
pub enum RowSum {
    Value(Enclosure),
    Divergent,
    Unknown,
}

impl MaterialRow {
    /// `Σ_{k ∈ set} f(A_{n,k})` where `|f(e)| <= factor · ‖e‖`.
    pub fn sum(&self, set: Option<&SetDescriptor>, factor: usize, f: impl Fn(&OperatorEntry) -> Scalar) -> RowSum {
        let in_set = |k: usize| set.is_none_or(|s| s.contains(k));
        let mut acc = Scalar::zero();
        for (k, e) in &self.entries {
            if in_set(*k) {
                acc = acc + f(e);
            }
        }
        match &self.remainder {
            Remainder::Zero => RowSum::Value(Enclosure::of(&acc)),
            Remainder::Geometric { bound, .. } => {
                RowSum::Value(Enclosure::with_error(&acc, &(bound * int(factor as i64))))
            }
            Remainder::Constant { from, entry } => {
                let v = f(entry);
                let infinite = set.is_none_or(|s| !s.is_finite());
                if v.is_certified_zero() {
                    RowSum::Value(Enclosure::of(&acc))
                } else if infinite {
                    if v.lower() > Rational::zero() || v.upper() < Rational::zero() {
                        RowSum::Divergent
                    } else {
                        RowSum::Unknown
                    }
                } else {
                    let s = set.expect("finite set present");
                    let last = s.base().max_element().unwrap_or(0);
                    let count = (*from..=last.max(*from)).filter(|&k| s.contains(k)).count();
                    RowSum::Value(Enclosure::of(&(acc + v * Scalar::integer(count as i64))))
                }
            }
            Remainder::Unknown => RowSum::Unknown,
        }
    }
}

#[derive(Clone)]
pub struct OperatorMatrix {
    label: String,
    d: usize,
    m: usize,
    entry: EntryFn,
    rows: Option<RowFn>,
    tail: TailModel,
    norm_bound: Option<Rational>,
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorMatrix")
            .field("label", &self.label)
            .field("d", &self.d)
            .field("m", &self.m)
            .field("tail", &self.tail)
            .field("norm_bound", &self.norm_bound)
            .finish()
    }
}

impl OperatorMatrix {
    /// `d` is the input dimension, `m` the output dimension.
    pub fn new(
        label: impl Into<String>,
        d: usize,
        m: usize,
        tail: TailModel,
        entry: impl Fn(usize, usize) -> OperatorEntry + Send + Sync + 'static,
    ) -> Self {
        OperatorMatrix { label: label.into(), d, m, entry: Arc::new(entry), rows: None, tail, norm_bound: None }
    }

    pub fn from_parts(label: impl Into<String>, d: usize, m: usize, tail: TailModel, entry: EntryFn, rows: Option<RowFn>) -> Self {
        OperatorMatrix { label: label.into(), d, m, entry, rows, tail, norm_bound: None }
    }

    /// Fast path producing the nonzero entries of a finite row at once.
    pub fn with_rows(mut self, rows: impl Fn(usize) -> Vec<(usize, OperatorEntry)> + Send + Sync + 'static) -> Self {
        self.rows = Some(Arc::new(rows));
        self
    }

    /// Declares `sup_n Σ_k ‖A_{n,k}‖ <= bound`.
    pub fn with_norm_bound(mut self, bound: Rational) -> Self {
        self.norm_bound = Some(bound);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tail(&self) -> &TailModel {
        &self.tail
    }

    pub fn norm_bound(&self) -> Option<&Rational> {
        self.norm_bound.as_ref()
    }

    pub fn entry_fn(&self) -> &EntryFn {
        &self.entry
    }

    pub fn row_fn(&self) -> Option<&RowFn> {
        self.rows.as_ref()
    }

    pub fn entry(&self, n: usize, k: usize) -> OperatorEntry {
        (self.entry)(n, k)
    }

    pub fn row_tail(&self, n: usize) -> RowTail {
        self.tail.row_tail(n)
    }

    /// Nonzero entries of a finite row, `None` if the row is not finite.
    pub fn finite_row(&self, n: usize) -> Option<Vec<(usize, OperatorEntry)>> {
        match self.row_tail(n) {
            RowTail::Finite { first, last } => {
                if let Some(rows) = &self.rows {
                    return Some(rows(n));
                }
                Some(match last {
                    None => Vec::new(),
                    Some(last) => (first..=last)
                        .map(|k| (k, self.entry(n, k)))
                        .filter(|(_, e)| !e.is_certified_zero())
                        .collect(),
                })
            }
            _ => None,
        }
    }

    /// The row with its certified remainder. Geometric rows are cut at the
    /// least `K` with `c · r^K / (1 - r) <= tol`.
    pub fn materialize_row(&self, n: usize, tol: &Rational) -> MaterialRow {
        match self.row_tail(n) {
            RowTail::Finite { .. } => {
                MaterialRow { n, entries: self.finite_row(n).unwrap_or_default(), remainder: Remainder::Zero }
            }
            RowTail::Geometric { c, ratio } => {
                let (start, bound) = geometric_cut(&c, &ratio, tol);
                let entries = (0..start).map(|k| (k, self.entry(n, k))).collect();
                MaterialRow { n, entries, remainder: Remainder::Geometric { start, bound } }
            }
            RowTail::ConstantFrom { from } => {
                let entries = (0..from).map(|k| (k, self.entry(n, k))).collect();
                MaterialRow { n, entries, remainder: Remainder::Constant { from, entry: self.entry(n, from) } }
            }
            RowTail::Uncertified => MaterialRow { n, entries: Vec::new(), remainder: Remainder::Unknown },
        }
    }

    /// Spot-check the tail model and norm certificate on `n < rows`,
    /// `k < cols`.
    pub fn check_tail(&self, rows: usize, cols: usize) -> Result<()> {
        let fail = |msg: String| Err(SummaError::InvalidTailModel(format!("matrix `{}`: {msg}", self.label)));
        for n in 0..rows {
            match self.row_tail(n) {
                RowTail::Finite { first, last } => {
                    for k in 0..cols {
                        let inside = k >= first && last.is_some_and(|l| k <= l);
                        if !inside && !self.entry(n, k).is_certified_zero() {
                            return fail(format!("entry ({n}, {k}) lies outside the declared support"));
                        }
                    }
                }
                RowTail::Geometric { c, ratio } => {
                    for k in 0..cols {
                        if self.entry(n, k).norm().lower() > &c * pow(&ratio, k) {
                            return fail(format!("entry ({n}, {k}) exceeds the geometric bound"));
                        }
                    }
                }
                RowTail::ConstantFrom { from } => {
                    let tail = self.entry(n, from);
                    for k in from..cols.max(from + 1) {
                        if self.entry(n, k) != tail {
                            return fail(format!("row {n} is not constant from column {from}"));
                        }
                    }
                }
                RowTail::Uncertified => {}
            }
            if let Some(bound) = &self.norm_bound {
                let row = self.materialize_row(n, &crate::scalar::rat(1, 1 << 20));
                if let RowSum::Value(total) = row.sum(None, 1, OperatorEntry::norm) {
                    if &total.lo > bound {
                        return fail(format!("row {n} has norm above the declared bound {bound}"));
                    }
                }
            }
        }
        Ok(())
    }

    // ---- builders ----

    /// Cesàro means: `A_{n,k} = I/(n+1)` for `k <= n`.
    pub fn cesaro(dim: usize) -> Self {
        OperatorMatrix::new("cesaro", dim, dim, TailModel::finite_support(Some), move |n, k| {
            if k <= n {
                OperatorEntry::scaled_identity(dim, Scalar::ratio(1, n as i64 + 1))
            } else {
                OperatorEntry::zero(dim, dim)
            }
        })
        .with_rows(move |n| {
            let e = OperatorEntry::scaled_identity(dim, Scalar::ratio(1, n as i64 + 1));
            (0..=n).map(|k| (k, e.clone())).collect()
        })
        .with_norm_bound(int(1))
    }

    pub fn identity(dim: usize) -> Self {
        OperatorMatrix::new("identity", dim, dim, TailModel::Banded { lower: 0, upper: 0 }, move |n, k| {
            if n == k {
                OperatorEntry::scaled_identity(dim, Scalar::one())
            } else {
                OperatorEntry::zero(dim, dim)
            }
        })
        .with_rows(move |n| vec![(n, OperatorEntry::scaled_identity(dim, Scalar::one()))])
        .with_norm_bound(int(1))
    }

    pub fn zero(d: usize, m: usize) -> Self {
        OperatorMatrix::new("zero", d, m, TailModel::finite_support(|_| None), move |_, _| OperatorEntry::zero(m, d))
            .with_rows(|_| Vec::new())
            .with_norm_bound(Rational::zero())
    }

    /// Scalar matrix from a rational formula supported on `k <= support(n)`.
    pub fn scalar_finite(
        label: impl Into<String>,
        support: impl Fn(usize) -> Option<usize> + Send + Sync + 'static,
        f: impl Fn(usize, usize) -> Rational + Send + Sync + 'static,
    ) -> Self {
        let support = Arc::new(support);
        let f = Arc::new(f);
        let (s1, s2, f2) = (support.clone(), support.clone(), f.clone());
        OperatorMatrix::new(label, 1, 1, TailModel::FiniteSupport(Arc::new(move |n| s1(n))), move |n, k| {
            OperatorEntry::scalar(Scalar::Exact(if s2(n).is_some_and(|l| k <= l) { f2(n, k) } else { Rational::zero() }))
        })
        .with_rows(move |n| match support(n) {
            None => Vec::new(),
            Some(last) => (0..=last)
                .map(|k| (k, f(n, k)))
                .filter(|(_, v)| !v.is_zero())
                .map(|(k, v)| (k, OperatorEntry::scalar(Scalar::Exact(v))))
                .collect(),
        })
    }

    /// Euler means: `a_{n,k} = C(n,k) / 2^n` for `k <= n`.
    pub fn euler() -> Self {
        OperatorMatrix::new("euler", 1, 1, TailModel::finite_support(Some), |n, k| {
            let v = if k <= n { binomial(n, k) / pow(&int(2), n) } else { Rational::zero() };
            OperatorEntry::scalar(Scalar::Exact(v))
        })
        .with_rows(|n| {
            let mut c = BigInt::one();
            let mut out = Vec::with_capacity(n + 1);
            for k in 0..=n {
                out.push((k, OperatorEntry::scalar(Scalar::Exact(dyadic(&c, n)))));
                c = c * BigInt::from(n - k) / BigInt::from(k + 1);
            }
            out
        })
        .with_norm_bound(int(1))
    }

    /// `a_{n,k} = coefficient · ratio^k` for every `n, k`.
    pub fn geometric_rows(label: impl Into<String>, coefficient: Rational, ratio: Rational) -> Result<Self> {
        let c = coefficient.clone();
        let tail = TailModel::geometric(move |_| num_traits::Signed::abs(&c), ratio.clone())?;
        let bound = num_traits::Signed::abs(&coefficient) / (Rational::one() - &ratio);
        Ok(OperatorMatrix::new(label, 1, 1, tail, move |_, k| {
            OperatorEntry::scalar(Scalar::Exact(&coefficient * pow(&ratio, k)))
        })
        .with_norm_bound(bound))
    }
}

/// Least `K` with `c · r^K / (1 - r) <= tol`, and that bound.
pub fn geometric_cut(c: &Rational, ratio: &Rational, tol: &Rational) -> (usize, Rational) {
    let scale = c / (Rational::one() - ratio);
    let mut k = 0usize;
    let mut bound = scale;
    while &bound > tol {
        bound *= ratio;
        k += 1;
    }
    (k, bound)
}

/// `c / 2^e` in lowest terms without a gcd.
fn dyadic(c: &BigInt, e: usize) -> Rational {
    let shift = c.trailing_zeros().map_or(0, |z| z.min(e as u64)) as usize;
    Rational::new_raw(c >> shift, BigInt::one() << (e - shift))
}

pub fn binomial(n: usize, k: usize) -> Rational {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(c)
}

/// A finite family `{A^ν : ν < κ}` of matrices sharing `(d, m)`.
#[derive(Clone, Debug)]
pub struct MatrixFamily {
    members: Vec<OperatorMatrix>,
}

impl MatrixFamily {
    pub fn new(members: Vec<OperatorMatrix>) -> Result<Self> {
        let first = members.first().ok_or_else(|| SummaError::Schema("matrix family is empty".into()))?;
        let dims = (first.d(), first.m());
        for (i, a) in members.iter().enumerate() {
            if (a.d(), a.m()) != dims {
                return Err(SummaError::DimensionMismatch(format!(
                    "member `{}` is {}→{}, family is {}→{}",
                    a.label(),
                    a.d(),
                    a.m(),
                    dims.0,
                    dims.1
                )));
            }
            if members[..i].iter().any(|b| b.label() == a.label()) {
                return Err(SummaError::Schema(format!("duplicate family member label `{}`", a.label())));
            }
        }
        Ok(MatrixFamily { members })
    }

    pub fn singleton(a: OperatorMatrix) -> Self {
        MatrixFamily { members: vec![a] }
    }

    pub fn members(&self) -> &[OperatorMatrix] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn d(&self) -> usize {
        self.members[0].d()
    }

    pub fn m(&self) -> usize {
        self.members[0].m()
    }

    /// `sup_ν` of the members' norm certificates, if all are certified.
    pub fn norm_bound(&self) -> Option<Rational> {
        self.members.iter().map(|a| a.norm_bound().cloned()).collect::<Option<Vec<_>>>()?.into_iter().max()
    }
}
