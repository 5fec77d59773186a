//! Index sets on ω.
//!
//! [`EpSet`] is an eventually periodic set: a residue mask modulo `M` with a
//! finite set of flipped indices. It is closed under all Boolean operations,
//! and finiteness, density and emptiness are exact. [`SetDescriptor`] adds
//! sparse infinite components (squares, powers of a base) that carry density
//! zero, which is what makes infinite members of the density-zero ideal
//! expressible.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SummaError};
use crate::scalar::{lcm, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpSet {
    modulus: usize,
    mask: Vec<bool>,
    flips: BTreeSet<usize>,
}

impl EpSet {
    pub fn empty() -> Self {
        EpSet { modulus: 1, mask: vec![false], flips: BTreeSet::new() }
    }

    pub fn all() -> Self {
        EpSet { modulus: 1, mask: vec![true], flips: BTreeSet::new() }
    }

    pub fn finite<I: IntoIterator<Item = usize>>(elems: I) -> Self {
        EpSet { modulus: 1, mask: vec![false], flips: elems.into_iter().collect() }
    }

    /// `{a·j + b : j ∈ ω}`; `a = 0` gives `{b}`.
    pub fn progression(a: usize, b: usize) -> Self {
        if a == 0 {
            return EpSet::finite([b]);
        }
        let mut mask = vec![false; a];
        mask[b % a] = true;
        let flips = (b % a..b).step_by(a).collect();
        EpSet { modulus: a, mask, flips }.normalized()
    }

    /// `{n : n >= t}`.
    pub fn tail_from(t: usize) -> Self {
        EpSet { modulus: 1, mask: vec![true], flips: (0..t).collect() }
    }

    /// `{0, …, t-1}`.
    pub fn initial_segment(t: usize) -> Self {
        EpSet::finite(0..t)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        assert!(!mask.is_empty());
        EpSet { modulus: mask.len(), mask, flips: BTreeSet::new() }.normalized()
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn flips(&self) -> &BTreeSet<usize> {
        &self.flips
    }

    pub fn contains(&self, n: usize) -> bool {
        self.mask[n % self.modulus] != self.flips.contains(&n)
    }

    fn normalized(mut self) -> Self {
        // shrink modulus to the least period of the mask
        let m = self.modulus;
        for p in 1..=m {
            if m.is_multiple_of(p) && (0..m).all(|r| self.mask[r] == self.mask[r % p]) {
                self.mask.truncate(p);
                self.modulus = p;
                break;
            }
        }
        self
    }

    fn combine(&self, other: &EpSet, op: impl Fn(bool, bool) -> bool) -> EpSet {
        let m = lcm(self.modulus, other.modulus);
        let mask: Vec<bool> = (0..m).map(|r| op(self.mask[r % self.modulus], other.mask[r % other.modulus])).collect();
        let flips = self
            .flips
            .iter()
            .chain(other.flips.iter())
            .copied()
            .filter(|&n| op(self.contains(n), other.contains(n)) != mask[n % m])
            .collect();
        EpSet { modulus: m, mask, flips }.normalized()
    }

    pub fn union(&self, other: &EpSet) -> EpSet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &EpSet) -> EpSet {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &EpSet) -> EpSet {
        self.combine(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> EpSet {
        EpSet { modulus: self.modulus, mask: self.mask.iter().map(|b| !b).collect(), flips: self.flips.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.mask.iter().all(|b| !b)
    }

    pub fn is_empty(&self) -> bool {
        self.is_finite() && self.flips.is_empty()
    }

    pub fn is_subset_of(&self, other: &EpSet) -> bool {
        self.difference(other).is_empty()
    }

    /// Asymptotic density, exact.
    pub fn density(&self) -> Rational {
        let hits = self.mask.iter().filter(|b| **b).count();
        Rational::new(BigInt::from(hits), BigInt::from(self.modulus))
    }

    /// Largest element of a finite set.
    pub fn max_element(&self) -> Option<usize> {
        if self.is_finite() {
            self.flips.iter().next_back().copied()
        } else {
            None
        }
    }

    pub fn elements_below(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n).filter(move |&k| self.contains(k))
    }

    pub fn count_below(&self, n: usize) -> usize {
        self.elements_below(n).count()
    }
}

impl fmt::Display for EpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let residues: Vec<usize> = (0..self.modulus).filter(|&r| self.mask[r]).collect();
        if self.is_finite() {
            write!(f, "{:?}", self.flips)
        } else if self.flips.is_empty() {
            write!(f, "{{n ≡ {residues:?} mod {}}}", self.modulus)
        } else {
            write!(f, "{{n ≡ {residues:?} mod {}}} Δ {:?}", self.modulus, self.flips)
        }
    }
}

/// Infinite sets of density zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sparse {
    /// `{j² : j ∈ ω}`
    Squares,
    /// `{b^j : j ∈ ω}` with `b >= 2`
    Powers(u64),
}

impl Sparse {
    pub fn contains(&self, n: usize) -> bool {
        match *self {
            Sparse::Squares => {
                let r = (n as f64).sqrt() as usize;
                (r.saturating_sub(1)..=r + 1).any(|s| s.checked_mul(s) == Some(n))
            }
            Sparse::Powers(b) => {
                let b = b as usize;
                if n == 0 {
                    return false;
                }
                let mut m = n;
                while m.is_multiple_of(b) {
                    m /= b;
                }
                m == 1
            }
        }
    }

    /// Residues modulo `m` attained infinitely often.
    fn recurring_residues(&self, m: usize) -> BTreeSet<usize> {
        match *self {
            // (j + m)² ≡ j² (mod m), so every attained residue recurs
            Sparse::Squares => (0..m).map(|j| j * j % m).collect(),
            Sparse::Powers(b) => {
                let b = (b as usize) % m;
                let mut r = 1 % m;
                let mut out = BTreeSet::new();
                // the preperiod of b^j mod m is shorter than m
                for j in 0..2 * m {
                    if j >= m {
                        out.insert(r);
                    }
                    r = r * b % m;
                }
                out
            }
        }
    }

    /// Whether this sparse set meets `set` infinitely often.
    pub fn meets_infinitely(&self, set: &EpSet) -> bool {
        let m = set.modulus();
        self.recurring_residues(m).into_iter().any(|r| set.mask()[r])
    }
}

/// `(progressions ∪ include ∪ sparse) ∖ exclude`, normalized.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetDescriptor {
    base: EpSet,
    sparse: Vec<Sparse>,
    exclude: BTreeSet<usize>,
}

/// Serialized set descriptor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDescriptorDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub progressions: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub include: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub squares: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub powers: Vec<u64>,
}

impl SetDescriptor {
    pub fn from_epset(base: EpSet) -> Self {
        SetDescriptor { base, sparse: Vec::new(), exclude: BTreeSet::new() }
    }

    pub fn finite<I: IntoIterator<Item = usize>>(elems: I) -> Self {
        SetDescriptor::from_epset(EpSet::finite(elems))
    }

    pub fn progression(a: usize, b: usize) -> Self {
        SetDescriptor::from_epset(EpSet::progression(a, b))
    }

    pub fn all() -> Self {
        SetDescriptor::from_epset(EpSet::all())
    }

    pub fn evens() -> Self {
        SetDescriptor::progression(2, 0)
    }

    pub fn odds() -> Self {
        SetDescriptor::progression(2, 1)
    }

    pub fn sparse(kind: Sparse) -> Self {
        SetDescriptor { base: EpSet::empty(), sparse: vec![kind], exclude: BTreeSet::new() }
    }

    pub fn from_doc(doc: &SetDescriptorDoc) -> Result<Self> {
        let mut base = EpSet::empty();
        for &[a, b] in &doc.progressions {
            if a == 0 {
                return Err(SummaError::Schema(format!("progression step must be positive, got [{a}, {b}]")));
            }
            base = base.union(&EpSet::progression(a, b));
        }
        base = base.union(&EpSet::finite(doc.include.iter().copied()));
        let exclude: BTreeSet<usize> = doc.exclude.iter().copied().collect();
        base = base.difference(&EpSet::finite(exclude.iter().copied()));
        let mut sparse = Vec::new();
        if doc.squares {
            sparse.push(Sparse::Squares);
        }
        for &b in &doc.powers {
            if b < 2 {
                return Err(SummaError::Schema(format!("power base must be at least 2, got {b}")));
            }
            sparse.push(Sparse::Powers(b));
        }
        let exclude = if sparse.is_empty() { BTreeSet::new() } else { exclude };
        Ok(SetDescriptor { base, sparse, exclude })
    }

    pub fn to_doc(&self) -> SetDescriptorDoc {
        let m = self.base.modulus();
        let progressions = (0..m).filter(|&r| self.base.mask()[r]).map(|r| [m, r]).collect();
        let (mut include, mut exclude) = (Vec::new(), Vec::new());
        for &n in self.base.flips() {
            if self.base.contains(n) {
                include.push(n);
            } else {
                exclude.push(n);
            }
        }
        // an excluded index must stay excluded from the sparse part
        for &n in &self.exclude {
            if !exclude.contains(&n) {
                exclude.push(n);
            }
        }
        exclude.sort_unstable();
        let squares = self.sparse.contains(&Sparse::Squares);
        let powers = self
            .sparse
            .iter()
            .filter_map(|s| match s {
                Sparse::Powers(b) => Some(*b),
                Sparse::Squares => None,
            })
            .collect();
        SetDescriptorDoc { progressions, include, exclude, squares, powers }
    }

    pub fn base(&self) -> &EpSet {
        &self.base
    }

    pub fn sparse_parts(&self) -> &[Sparse] {
        &self.sparse
    }

    pub fn as_epset(&self) -> Option<&EpSet> {
        self.sparse.is_empty().then_some(&self.base)
    }

    pub fn contains(&self, n: usize) -> bool {
        self.base.contains(n) || (!self.exclude.contains(&n) && self.sparse.iter().any(|s| s.contains(n)))
    }

    pub fn is_finite(&self) -> bool {
        self.base.is_finite() && self.sparse.is_empty()
    }

    pub fn density(&self) -> Rational {
        self.base.density()
    }

    pub fn is_density_zero(&self) -> bool {
        self.density().is_zero()
    }

    /// Whether `self ∩ set` is infinite.
    pub fn meets_infinitely(&self, set: &EpSet) -> bool {
        !self.base.intersection(set).is_finite() || self.sparse.iter().any(|s| s.meets_infinitely(set))
    }

    pub fn elements_below(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n).filter(move |&k| self.contains(k))
    }

    pub fn disjoint_union(&self, other: &SetDescriptor) -> Option<SetDescriptor> {
        if !self.sparse.is_empty() || !other.sparse.is_empty() {
            return None;
        }
        if !self.base.intersection(&other.base).is_empty() {
            return None;
        }
        Some(SetDescriptor::from_epset(self.base.union(&other.base)))
    }
}

impl fmt::Display for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for s in &self.sparse {
            match s {
                Sparse::Squares => write!(f, " ∪ squares")?,
                Sparse::Powers(b) => write!(f, " ∪ powers({b})")?,
            }
        }
        if !self.exclude.is_empty() {
            write!(f, " ∖ {:?}", self.exclude)?;
        }
        Ok(())
    }
}

impl Serialize for SetDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}
