//! A single block `A_{n,k}`: an `m × d` real matrix acting `R^d -> R^m`.

use crate::scalar::Scalar;

/// `rows × cols` grid of scalars, row-major. `rows` is the output dimension
/// `m`, `cols` the input dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorEntry {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl OperatorEntry {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry data does not match {rows}x{cols}");
        OperatorEntry { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let m = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == d), "ragged entry rows");
        OperatorEntry::new(m, d, rows.into_iter().flatten().collect())
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        OperatorEntry::new(rows, cols, vec![Scalar::zero(); rows * cols])
    }

    /// `value · I` on `R^dim`.
    pub fn scaled_identity(dim: usize, value: Scalar) -> Self {
        let mut e = OperatorEntry::zero(dim, dim);
        for i in 0..dim {
            e.data[i * dim + i] = value.clone();
        }
        e
    }

    pub fn scalar(value: Scalar) -> Self {
        OperatorEntry::new(1, 1, vec![value])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn is_certified_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_certified_zero)
    }

    /// Operator norm for the 1-norms on both sides: the largest absolute
    /// column sum.
    pub fn norm(&self) -> Scalar {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<Scalar>())
            .fold(Scalar::zero(), |acc, c| acc.max(&c))
    }

    /// `Σ_{i,j} |a(i,j)|`.
    pub fn abs_sum(&self) -> Scalar {
        self.data.iter().map(Scalar::abs).sum()
    }

    pub fn apply(&self, x: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(x.len(), self.cols, "vector length does not match entry input dimension");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &x[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &OperatorEntry) -> OperatorEntry {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        OperatorEntry::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: &Scalar) -> OperatorEntry {
        OperatorEntry::new(self.rows, self.cols, self.data.iter().map(|a| a * s).collect())
    }
}

/// `‖e‖ = max_j Σ_i |e(i,j)|`.
pub fn entry_norm(e: &OperatorEntry) -> Scalar {
    e.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};
    use num_traits::Signed;
    use proptest::prelude::*;

    fn grid(rows: &[&[i64]]) -> OperatorEntry {
        OperatorEntry::from_rows(rows.iter().map(|r| r.iter().map(|&v| Scalar::integer(v)).collect()).collect())
    }

    #[test]
    fn norm_examples() {
        assert_eq!(entry_norm(&OperatorEntry::scalar(Scalar::ratio(-1, 2))), Scalar::ratio(1, 2));
        assert_eq!(entry_norm(&grid(&[&[1, 0], &[0, 1]])), Scalar::integer(1));
        // column sums 1+3 = 4 and 2+4 = 6
        assert_eq!(entry_norm(&grid(&[&[1, 2], &[3, -4]])), Scalar::integer(6));
    }

    #[test]
    fn apply_and_identity() {
        let id = OperatorEntry::scaled_identity(2, Scalar::ratio(1, 3));
        let y = id.apply(&[Scalar::integer(3), Scalar::integer(-6)]);
        assert_eq!(y, vec![Scalar::integer(1), Scalar::integer(-2)]);
        assert_eq!(id.norm(), Scalar::ratio(1, 3));
    }

    /// Shape and two grids of `(p, q)` cells.
    type EntryPair = (usize, usize, Vec<(i64, i64)>, Vec<(i64, i64)>);

    fn entry_strategy() -> impl Strategy<Value = EntryPair> {
        (1usize..=3, 1usize..=3).prop_flat_map(|(m, d)| {
            let cell = (-9i64..10, 1i64..6);
            (Just(m), Just(d), prop::collection::vec(cell.clone(), m * d), prop::collection::vec(cell, m * d))
        })
    }

    fn build(m: usize, d: usize, cells: &[(i64, i64)]) -> OperatorEntry {
        OperatorEntry::new(m, d, cells.iter().map(|&(p, q)| Scalar::Exact(rat(p, q))).collect())
    }

    proptest! {
        #[test]
        fn norm_is_subadditive_and_homogeneous((m, d, a, b) in entry_strategy(), p in -5i64..6, q in 1i64..4) {
            let (a, b) = (build(m, d, &a), build(m, d, &b));
            let sum = a.add(&b).norm().as_exact().cloned().unwrap();
            let bound = a.norm().as_exact().cloned().unwrap() + b.norm().as_exact().cloned().unwrap();
            prop_assert!(sum <= bound);
            let s = Scalar::Exact(rat(p, q));
            let scaled = a.scale(&s).norm().as_exact().cloned().unwrap();
            let expected: Rational = rat(p, q).abs() * a.norm().as_exact().cloned().unwrap();
            prop_assert_eq!(scaled, expected);
            prop_assert!(a.norm().as_exact().unwrap() >= &int(0));
        }
    }
}
