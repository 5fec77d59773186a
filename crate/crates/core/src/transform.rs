//! Row evaluation `A_n x`, transforms, group norms and domain checks.

use std::borrow::Cow;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::entry::OperatorEntry;
use crate::error::{Result, SummaError};
use crate::ideal::{HorizonParams, Tri};
use crate::matrix::{OperatorMatrix, Remainder, RowSum};
use crate::scalar::{Enclosure, Rational, Scalar};
use crate::sequence::{SequenceTail, Vector, VectorSequence};
use crate::sets::SetDescriptor;

#[derive(Clone, Debug, PartialEq)]
pub struct RowEvaluation {
    pub n: usize,
    pub value: Vector,
    /// Certified bound on `‖A_n x - value‖`.
    pub trunc_error: Rational,
}

impl RowEvaluation {
    pub fn enclosures(&self) -> Vec<Enclosure> {
        self.value.iter().map(|s| Enclosure::with_error(s, &self.trunc_error)).collect()
    }
}

/// Terms of `x` with the first `len` cached.
pub struct Terms<'a> {
    x: &'a VectorSequence,
    cache: Vec<Vector>,
}

impl<'a> Terms<'a> {
    pub fn new(x: &'a VectorSequence, len: usize) -> Self {
        let cache = (0..len).into_par_iter().map(|k| x.term(k)).collect();
        Terms { x, cache }
    }

    pub fn get(&self, k: usize) -> Cow<'_, Vector> {
        match self.cache.get(k) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(self.x.term(k)),
        }
    }

    pub fn sequence(&self) -> &VectorSequence {
        self.x
    }
}

fn add_into(acc: &mut Vector, v: Vector) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a = &*a + &b;
    }
}

fn check_dims(a: &OperatorMatrix, x: &VectorSequence) -> Result<()> {
    if a.d() != x.dim() {
        return Err(SummaError::DimensionMismatch(format!(
            "matrix `{}` takes dimension {}, sequence `{}` has dimension {}",
            a.label(),
            a.d(),
            x.label(),
            x.dim()
        )));
    }
    Ok(())
}

/// `A_n x` with truncation error at most `tol`.
pub fn row_apply(a: &OperatorMatrix, n: usize, x: &VectorSequence, tol: &Rational) -> Result<RowEvaluation> {
    check_dims(a, x)?;
    row_apply_cached(a, n, &Terms::new(x, 0), tol)
}

pub fn row_apply_cached(a: &OperatorMatrix, n: usize, xs: &Terms<'_>, tol: &Rational) -> Result<RowEvaluation> {
    let x = xs.sequence();
    let bound = x.sup_norm_bound();
    let row_tol = match (&bound, a.row_tail(n)) {
        (Some(b), crate::matrix::RowTail::Geometric { .. }) if b.is_positive() => tol / b,
        (None, crate::matrix::RowTail::Geometric { c, .. }) if !c.is_zero() => {
            return Err(SummaError::NotInDomain {
                row: n,
                divergent: false,
                reason: format!("sequence `{}` has no certified bound for a geometric tail", x.label()),
            })
        }
        _ => tol.clone(),
    };
    let row = a.materialize_row(n, &row_tol);
    let mut value = vec![Scalar::zero(); a.m()];
    for (k, e) in &row.entries {
        add_into(&mut value, e.apply(&xs.get(*k)));
    }
    let trunc_error = match &row.remainder {
        Remainder::Zero => Rational::zero(),
        Remainder::Geometric { bound: tail, .. } => tail * bound.unwrap_or_default(),
        Remainder::Constant { from, entry } => {
            constant_tail(n, *from, entry, xs, &mut value)?;
            Rational::zero()
        }
        Remainder::Unknown => {
            return Err(SummaError::NotInDomain {
                row: n,
                divergent: false,
                reason: format!("matrix `{}` has no tail certificate", a.label()),
            })
        }
    };
    Ok(RowEvaluation { n, value, trunc_error })
}

/// `Σ_{k >= from} entry · x_k` for eventually periodic `x`: finite exactly
/// when the periodic part is annihilated.
fn constant_tail(n: usize, from: usize, entry: &OperatorEntry, xs: &Terms<'_>, value: &mut Vector) -> Result<()> {
    if entry.is_certified_zero() {
        return Ok(());
    }
    let x = xs.sequence();
    let (start, block) = match x.tail() {
        SequenceTail::EventuallyConstant { from: p, value: v } => (p, vec![v]),
        SequenceTail::Periodic { from: p, block } => (p, block),
        SequenceTail::FormulaWithBound { .. } => {
            return Err(SummaError::NotInDomain {
                row: n,
                divergent: false,
                reason: "constant row tail against a formula sequence".into(),
            })
        }
    };
    let start = start.max(from);
    let annihilated = block.iter().all(|v| entry.apply(v).iter().all(Scalar::is_certified_zero));
    if !annihilated {
        return Err(SummaError::NotInDomain {
            row: n,
            divergent: true,
            reason: "row series has a constant nonzero tail".into(),
        });
    }
    for k in from..start {
        add_into(value, entry.apply(&xs.get(k)));
    }
    Ok(())
}

/// Rows `0..N` of `A x`, evaluated in parallel.
pub fn transform(a: &OperatorMatrix, x: &VectorSequence, n: usize, tol: &Rational) -> Result<Vec<RowEvaluation>> {
    check_dims(a, x)?;
    let xs = Terms::new(x, n + 1);
    transform_cached(a, &xs, n, tol)
}

pub fn transform_cached(a: &OperatorMatrix, xs: &Terms<'_>, n: usize, tol: &Rational) -> Result<Vec<RowEvaluation>> {
    (0..n).into_par_iter().map(|i| row_apply_cached(a, i, xs, tol)).collect()
}

/// `‖A_{n,E}‖ = Σ_{k ∈ E} ‖A_{n,k}‖` with certified error.
pub fn group_norm(a: &OperatorMatrix, n: usize, e: Option<&SetDescriptor>, tol: &Rational) -> Result<Enclosure> {
    match a.materialize_row(n, tol).sum(e, 1, OperatorEntry::norm) {
        RowSum::Value(v) => Ok(v),
        RowSum::Divergent => Err(SummaError::DivergentGroupNorm { row: n }),
        RowSum::Unknown => Err(SummaError::NotInDomain {
            row: n,
            divergent: false,
            reason: format!("matrix `{}` has no tail certificate", a.label()),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormVerdict {
    CertifiedFinite,
    UnboundedAtHorizon,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixNorm {
    /// `max_{n < N} ‖A_n‖`, absent when some row diverges or is uncertified.
    pub value: Option<Enclosure>,
    pub verdict: NormVerdict,
    pub worst_row: Option<usize>,
}

/// `sup_{n < N} Σ_k ‖A_{n,k}‖`; finite verdicts need a declared norm bound
/// that the horizon does not contradict.
pub fn matrix_norm(a: &OperatorMatrix, n: usize) -> MatrixNorm {
    let tol = crate::scalar::rat(1, 1 << 20);
    let rows: Vec<Option<Enclosure>> = (0..n).into_par_iter().map(|i| group_norm(a, i, None, &tol).ok()).collect();
    let mut value: Option<Enclosure> = None;
    let mut worst_row = None;
    for (i, r) in rows.into_iter().enumerate() {
        let Some(r) = r else {
            return MatrixNorm { value: None, verdict: NormVerdict::UnboundedAtHorizon, worst_row: Some(i) };
        };
        if value.as_ref().is_none_or(|v| r.hi > v.hi) {
            worst_row = Some(i);
        }
        value = Some(match value {
            Some(v) => v.max(&r),
            None => r,
        });
    }
    let certified = match (a.norm_bound(), &value) {
        (Some(b), Some(v)) => v.lo <= *b,
        (Some(_), None) => true,
        _ => false,
    };
    let verdict = if certified { NormVerdict::CertifiedFinite } else { NormVerdict::UnboundedAtHorizon };
    MatrixNorm { value, verdict, worst_row }
}

/// Whether every row series `Σ_k A_{n,k} x_k` converges.
pub fn in_domain(a: &OperatorMatrix, x: &VectorSequence, h: &HorizonParams) -> Tri {
    if check_dims(a, x).is_err() {
        return Tri::No;
    }
    let structural = match a.tail() {
        crate::matrix::TailModel::FiniteSupport(_) | crate::matrix::TailModel::Banded { .. } => true,
        crate::matrix::TailModel::GeometricBound { .. } => x.sup_norm_bound().is_some(),
        _ => false,
    };
    if structural {
        return Tri::Yes;
    }
    let xs = Terms::new(x, 0);
    let tol = h.eps.clone();
    let verdicts: Vec<Tri> = (0..h.n)
        .into_par_iter()
        .map(|i| match row_apply_cached(a, i, &xs, &tol) {
            Ok(_) => Tri::Yes,
            Err(SummaError::NotInDomain { divergent: true, .. }) => Tri::No,
            Err(_) => Tri::Unknown,
        })
        .collect();
    if verdicts.contains(&Tri::No) {
        Tri::No
    } else {
        Tri::Unknown
    }
}
