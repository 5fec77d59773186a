//! Built-in matrices, sequences, families and ideals used by the property
//! checks and the acceptance suite.

use num_traits::Zero;

use crate::ideal::IdealSpec;
use crate::matrix::{MatrixFamily, OperatorMatrix};
use crate::scalar::{int, rat, Rational, Scalar};
use crate::sequence::VectorSequence;
use crate::sets::EpSet;

/// `a_{n,k} = 2/(n+1)` for `k <= n`; row sums 2.
pub fn row_sum_two() -> OperatorMatrix {
    OperatorMatrix::scalar_finite("row-sum-2", Some, |n, _| rat(2, n as i64 + 1)).with_norm_bound(int(2))
}

/// `a_{n,k} = δ_{k,0}`.
pub fn first_column() -> OperatorMatrix {
    OperatorMatrix::scalar_finite("first-column", |_| Some(0), |_, _| int(1)).with_norm_bound(int(1))
}

/// `a_{n,k} = 1` for `k <= n`; row norms `n + 1`.
pub fn unbounded_rows() -> OperatorMatrix {
    OperatorMatrix::scalar_finite("unbounded-rows", Some, |_, _| int(1))
}

/// `a_{n,k} = (-1)^k/(n+1)` for `k <= n`.
pub fn signed_cesaro() -> OperatorMatrix {
    OperatorMatrix::scalar_finite("signed-cesaro", Some, |n, k| rat(if k % 2 == 0 { 1 } else { -1 }, n as i64 + 1))
        .with_norm_bound(int(1))
}

pub fn negative_cesaro() -> OperatorMatrix {
    OperatorMatrix::scalar_finite("negative-cesaro", Some, |n, _| rat(-1, n as i64 + 1)).with_norm_bound(int(1))
}

/// Row `n` is Cesàro row `n - j`, and zero for `n < j`.
pub fn delayed_cesaro(j: usize) -> OperatorMatrix {
    OperatorMatrix::scalar_finite(format!("delayed-cesaro-{j}"), move |n| n.checked_sub(j), move |n, _| rat(1, (n - j) as i64 + 1))
        .with_norm_bound(int(1))
}

/// Row `n` is the unit mass at column `2n + parity`.
pub fn unit_mass(parity: usize) -> OperatorMatrix {
    let label = if parity == 0 { "even-mass" } else { "odd-mass" };
    OperatorMatrix::scalar_finite(label, move |n| Some(2 * n + parity), move |n, k| if k == 2 * n + parity { int(1) } else { int(0) })
        .with_norm_bound(int(1))
}

/// `a_{n,k} = δ_{k,n+1}`.
pub fn forward_shift() -> OperatorMatrix {
    OperatorMatrix::scalar_finite("forward-shift", |n| Some(n + 1), |n, k| if k == n + 1 { int(1) } else { int(0) })
        .with_norm_bound(int(1))
}

/// `a_{n,k} = δ_{k,n}/(n+1)`.
pub fn damped_diagonal() -> OperatorMatrix {
    OperatorMatrix::scalar_finite("damped-diagonal", Some, |n, k| if k == n { rat(1, n as i64 + 1) } else { int(0) })
        .with_norm_bound(int(1))
}

/// `a_{n,k} = 2^{-(k+1)}` in every row.
pub fn geometric_halves() -> OperatorMatrix {
    OperatorMatrix::geometric_rows("geometric-halves", rat(1, 2), rat(1, 2)).expect("ratio 1/2 is valid")
}

/// Every scalar corpus matrix.
pub fn scalar_matrices() -> Vec<OperatorMatrix> {
    vec![
        OperatorMatrix::cesaro(1),
        OperatorMatrix::identity(1),
        OperatorMatrix::euler(),
        row_sum_two(),
        first_column(),
        unbounded_rows(),
        signed_cesaro(),
        negative_cesaro(),
        delayed_cesaro(1),
        unit_mass(0),
        unit_mass(1),
        forward_shift(),
        damped_diagonal(),
        geometric_halves(),
        OperatorMatrix::zero(1, 1),
    ]
}

/// Corpus matrices with a certified norm bound.
pub fn bounded_scalar_matrices() -> Vec<OperatorMatrix> {
    scalar_matrices().into_iter().filter(|a| a.norm_bound().is_some()).collect()
}

pub fn matrix(label: &str) -> Option<OperatorMatrix> {
    scalar_matrices().into_iter().find(|a| a.label() == label)
}

fn s(v: i64) -> Scalar {
    Scalar::integer(v)
}

/// `(1, 0, 1, 0, …)`
pub fn alternating() -> VectorSequence {
    VectorSequence::scalar_periodic("alternating", &[s(1), s(0)]).expect("valid")
}

/// Bounded scalar corpus sequences.
pub fn scalar_sequences() -> Vec<VectorSequence> {
    let ok = |r: crate::error::Result<VectorSequence>| r.expect("valid corpus sequence");
    vec![
        alternating(),
        ok(VectorSequence::constant("one", vec![s(1)])),
        ok(VectorSequence::eventually_constant("three-from-5", vec![vec![s(0)]; 5], vec![s(3)])),
        ok(VectorSequence::scalar_periodic("signs", &[s(1), s(-1)])),
        ok(VectorSequence::scalar_periodic("cycle-012", &[s(0), s(1), s(2)])),
        ok(VectorSequence::eventually_constant("spike", vec![vec![s(1)]], vec![s(0)])),
        ok(VectorSequence::scalar_eventually_periodic("mixed", &[s(5), s(-3)], &[s(2), s(-1), s(0)])),
        VectorSequence::scalar_formula("harmonic", Some(int(1)), |n| Scalar::ratio(1, n as i64 + 1)),
        VectorSequence::scalar_formula("damped-signs", Some(int(1)), |n| Scalar::ratio(if n % 2 == 0 { 1 } else { -1 }, n as i64 + 1)),
        VectorSequence::scalar_formula("square-indicator", Some(int(1)), |n| {
            let r = (n as f64).sqrt() as usize;
            let hit = (r.saturating_sub(1)..=r + 1).any(|q| q * q == n);
            if hit {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        }),
    ]
}

/// Corpus sequences converging along `Fin`, with their limits.
pub fn convergent_sequences() -> Vec<(VectorSequence, Rational)> {
    let named = |label: &str| scalar_sequences().into_iter().find(|x| x.label() == label).expect("corpus label");
    vec![
        (named("one"), int(1)),
        (named("three-from-5"), int(3)),
        (named("spike"), Rational::zero()),
        (named("harmonic"), Rational::zero()),
        (named("damped-signs"), Rational::zero()),
    ]
}

/// Two-dimensional corpus sequences.
pub fn vector_sequences() -> Vec<VectorSequence> {
    vec![
        VectorSequence::periodic("pairs", vec![vec![s(1), s(0)], vec![s(0), s(1)]]).expect("valid"),
        VectorSequence::eventually_constant("settling-pair", vec![vec![s(4), s(-4)]; 3], vec![s(1), s(2)]).expect("valid"),
    ]
}

/// Scalar families with certified uniform norm bounds.
pub fn scalar_families() -> Vec<MatrixFamily> {
    let f = |members: Vec<OperatorMatrix>| MatrixFamily::new(members).expect("valid corpus family");
    vec![
        f(vec![OperatorMatrix::cesaro(1)]),
        f(vec![OperatorMatrix::identity(1)]),
        f(vec![OperatorMatrix::euler()]),
        f(vec![unit_mass(0), unit_mass(1)]),
        f(vec![OperatorMatrix::cesaro(1), negative_cesaro()]),
        f(vec![OperatorMatrix::cesaro(1), OperatorMatrix::zero(1, 1)]),
        f(vec![OperatorMatrix::cesaro(1), OperatorMatrix::identity(1)]),
        f(vec![delayed_cesaro(0), delayed_cesaro(1), delayed_cesaro(2)]),
        f(vec![OperatorMatrix::identity(1), forward_shift()]),
        f(vec![signed_cesaro(), OperatorMatrix::cesaro(1)]),
        f(vec![geometric_halves()]),
        f(vec![row_sum_two(), OperatorMatrix::cesaro(1), OperatorMatrix::euler()]),
        f(vec![first_column(), OperatorMatrix::identity(1)]),
    ]
}

/// The ideal generated by the even numbers.
pub fn evens_ideal() -> IdealSpec {
    IdealSpec::generated_by("evens", &EpSet::progression(2, 0)).expect("evens are coinfinite")
}

pub fn ideals() -> Vec<IdealSpec> {
    vec![IdealSpec::fin(), IdealSpec::density_zero(), evens_ideal()]
}

/// Family, sequence and countably generated ideal combinations for the
/// equivalence tester.
pub fn equivalence_cases() -> Vec<(MatrixFamily, VectorSequence, IdealSpec)> {
    let mut out = Vec::new();
    let seqs = scalar_sequences();
    let pick = |label: &str| seqs.iter().find(|x| x.label() == label).expect("corpus label").clone();
    let families = scalar_families();
    let chosen = ["alternating", "one", "three-from-5", "signs", "harmonic"];
    for (i, fam) in families.iter().enumerate() {
        for (j, label) in chosen.iter().enumerate() {
            if (i + j) % 2 == 0 {
                out.push((fam.clone(), pick(label), IdealSpec::fin()));
            }
        }
    }
    for fam in [&families[0], &families[3], &families[6]] {
        out.push((fam.clone(), pick("alternating"), evens_ideal()));
        out.push((fam.clone(), pick("cycle-012"), evens_ideal()));
    }
    let ces2 = MatrixFamily::singleton(OperatorMatrix::cesaro(2));
    let pair2 = MatrixFamily::new(vec![OperatorMatrix::cesaro(2), OperatorMatrix::identity(2)]).expect("valid");
    for x in vector_sequences() {
        out.push((ces2.clone(), x.clone(), IdealSpec::fin()));
        out.push((pair2.clone(), x, IdealSpec::fin()));
    }
    out
}
