//! Sequences in `R^d`, either eventually periodic (decidable tails) or given
//! by a formula with an optional sup-norm bound.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SummaError};
use crate::scalar::{Rational, Scalar};
use crate::sets::EpSet;

pub type Vector = Vec<Scalar>;

pub type TermFn = Arc<dyn Fn(usize) -> Vector + Send + Sync>;

/// Declared tail behaviour.
#[derive(Clone, Debug, PartialEq)]
pub enum SequenceTail {
    EventuallyConstant { from: usize, value: Vector },
    Periodic { from: usize, block: Vec<Vector> },
    FormulaWithBound { bound: Option<Rational> },
}

#[derive(Clone)]
enum Kind {
    Eventual { prefix: Vec<Vector>, block: Vec<Vector> },
    Formula { term: TermFn, bound: Option<Rational> },
}

#[derive(Clone)]
pub struct VectorSequence {
    label: String,
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for VectorSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorSequence").field("label", &self.label).field("dim", &self.dim).field("tail", &self.tail()).finish()
    }
}

pub fn vector_norm(v: &[Scalar]) -> Scalar {
    v.iter().map(Scalar::abs).sum()
}

impl VectorSequence {
    /// `prefix` followed by `block` repeated forever.
    pub fn eventually_periodic(label: impl Into<String>, prefix: Vec<Vector>, block: Vec<Vector>) -> Result<Self> {
        let label = label.into();
        if block.is_empty() {
            return Err(SummaError::Schema(format!("sequence `{label}` has an empty periodic block")));
        }
        let dim = block[0].len();
        if dim == 0 {
            return Err(SummaError::DimensionMismatch(format!("sequence `{label}` has zero-dimensional terms")));
        }
        if prefix.iter().chain(&block).any(|v| v.len() != dim) {
            return Err(SummaError::DimensionMismatch(format!("sequence `{label}` mixes term dimensions")));
        }
        Ok(VectorSequence { label, dim, kind: Kind::Eventual { prefix, block } })
    }

    pub fn periodic(label: impl Into<String>, block: Vec<Vector>) -> Result<Self> {
        VectorSequence::eventually_periodic(label, Vec::new(), block)
    }

    pub fn eventually_constant(label: impl Into<String>, prefix: Vec<Vector>, value: Vector) -> Result<Self> {
        VectorSequence::eventually_periodic(label, prefix, vec![value])
    }

    pub fn constant(label: impl Into<String>, value: Vector) -> Result<Self> {
        VectorSequence::eventually_periodic(label, Vec::new(), vec![value])
    }

    /// Scalar convenience: `d = 1` eventually periodic sequence.
    pub fn scalar_eventually_periodic(label: impl Into<String>, prefix: &[Scalar], block: &[Scalar]) -> Result<Self> {
        VectorSequence::eventually_periodic(
            label,
            prefix.iter().map(|s| vec![s.clone()]).collect(),
            block.iter().map(|s| vec![s.clone()]).collect(),
        )
    }

    pub fn scalar_periodic(label: impl Into<String>, block: &[Scalar]) -> Result<Self> {
        VectorSequence::scalar_eventually_periodic(label, &[], block)
    }

    pub fn formula(
        label: impl Into<String>,
        dim: usize,
        bound: Option<Rational>,
        term: impl Fn(usize) -> Vector + Send + Sync + 'static,
    ) -> Self {
        VectorSequence { label: label.into(), dim, kind: Kind::Formula { term: Arc::new(term), bound } }
    }

    pub fn scalar_formula(
        label: impl Into<String>,
        bound: Option<Rational>,
        term: impl Fn(usize) -> Scalar + Send + Sync + 'static,
    ) -> Self {
        VectorSequence::formula(label, 1, bound, move |n| vec![term(n)])
    }

    /// A double sequence `(j, k) ↦ f(j, k)` laid out along ω by the inverse
    /// Cantor pairing `n ↦ (j, k)`.
    pub fn from_double(
        label: impl Into<String>,
        dim: usize,
        bound: Option<Rational>,
        term: impl Fn(usize, usize) -> Vector + Send + Sync + 'static,
    ) -> Self {
        VectorSequence::formula(label, dim, bound, move |n| {
            let (j, k) = unpair(n);
            term(j, k)
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn term(&self, k: usize) -> Vector {
        match &self.kind {
            Kind::Eventual { prefix, block } => {
                if k < prefix.len() {
                    prefix[k].clone()
                } else {
                    block[(k - prefix.len()) % block.len()].clone()
                }
            }
            Kind::Formula { term, .. } => {
                let v = term(k);
                debug_assert_eq!(v.len(), self.dim, "formula term has wrong dimension");
                v
            }
        }
    }

    pub fn prefix(&self, n: usize) -> Vec<Vector> {
        (0..n).map(|k| self.term(k)).collect()
    }

    pub fn tail(&self) -> SequenceTail {
        match &self.kind {
            Kind::Eventual { prefix, block } if block.len() == 1 => {
                SequenceTail::EventuallyConstant { from: prefix.len(), value: block[0].clone() }
            }
            Kind::Eventual { prefix, block } => SequenceTail::Periodic { from: prefix.len(), block: block.clone() },
            Kind::Formula { bound, .. } => SequenceTail::FormulaWithBound { bound: bound.clone() },
        }
    }

    /// `(prefix, block)` when the tail is decidable.
    pub fn eventual_parts(&self) -> Option<(&[Vector], &[Vector])> {
        match &self.kind {
            Kind::Eventual { prefix, block } => Some((prefix, block)),
            Kind::Formula { .. } => None,
        }
    }

    pub fn is_decidable(&self) -> bool {
        matches!(self.kind, Kind::Eventual { .. })
    }

    /// Certified bound on `sup_k ‖x_k‖`: exact for eventual tails, the
    /// declared bound for formulas.
    pub fn sup_norm_bound(&self) -> Option<Rational> {
        match &self.kind {
            Kind::Eventual { prefix, block } => {
                prefix.iter().chain(block).map(|v| vector_norm(v).upper()).max()
            }
            Kind::Formula { bound, .. } => bound.clone(),
        }
    }

    /// Spot-check that the declared bound dominates the first `n` terms.
    pub fn check_bound(&self, n: usize) -> Result<()> {
        if let Kind::Formula { bound: Some(b), .. } = &self.kind {
            for k in 0..n {
                if vector_norm(&self.term(k)).lower() > *b {
                    return Err(SummaError::Schema(format!(
                        "sequence `{}` exceeds its declared bound at index {k}",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }

    /// For decidable tails: the distinct term values with their exact
    /// index sets.
    pub fn level_sets(&self) -> Option<Vec<(Vector, EpSet)>> {
        let (prefix, block) = self.eventual_parts()?;
        let mut out: Vec<(Vector, EpSet)> = Vec::new();
        let mut add = |v: &Vector, set: EpSet| match out.iter_mut().find(|(w, _)| w == v) {
            Some((_, s)) => *s = s.union(&set),
            None => out.push((v.clone(), set)),
        };
        for (k, v) in prefix.iter().enumerate() {
            add(v, EpSet::finite([k]));
        }
        let p = block.len();
        for (r, v) in block.iter().enumerate() {
            add(v, EpSet::progression(p, prefix.len() + r));
        }
        Some(out)
    }
}

/// Inverse Cantor pairing.
pub fn unpair(n: usize) -> (usize, usize) {
    let mut w = ((((8 * n + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
    while w * (w + 1) / 2 > n {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= n {
        w += 1;
    }
    let t = w * (w + 1) / 2;
    let k = n - t;
    (w - k, k)
}

pub fn pair(j: usize, k: usize) -> usize {
    (j + k) * (j + k + 1) / 2 + k
}
