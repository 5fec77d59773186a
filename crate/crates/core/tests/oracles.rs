//! Worked values recomputed by naive arithmetic and frozen.

use num_traits::{One, Signed, Zero};
use summa_core::corpus;
use summa_core::entry::{entry_norm, OperatorEntry};
use summa_core::ideal::{cluster_points, ideal_lim, ideal_limsup, HorizonParams, IdealSpec};
use summa_core::matrix::{binomial, MatrixFamily, OperatorMatrix};
use summa_core::regularity::{check_core_inclusion, Verdict};
use summa_core::scalar::{int, rat, Rational, Scalar};
use summa_core::selection::{enumerate_selections, verify_uniform_limsup_identity, EnumParams};
use summa_core::sequence::VectorSequence;
use summa_core::sets::{EpSet, SetDescriptor};
use summa_core::sigma::{compose_sigma, sigma_limit, sigma_matrix, SigmaMap};
use summa_core::transform::{group_norm, transform};

fn alternating() -> VectorSequence {
    VectorSequence::scalar_periodic("alt", &[Scalar::one(), Scalar::zero()]).unwrap()
}

fn naive_cesaro(x: &[i64], n: usize) -> Rational {
    let s: i64 = x[..=n].iter().sum();
    rat(s, n as i64 + 1)
}

fn row(a: &OperatorMatrix, n: usize) -> Vec<(usize, Rational)> {
    a.materialize_row(n, &rat(1, 1 << 20))
        .entries
        .iter()
        .map(|(k, e)| (*k, e.get(0, 0).lower()))
        .filter(|(_, v)| !v.is_zero())
        .collect()
}

#[test]
fn cesaro_partial_averages() {
    let x = [1, 0, 1, 0, 1];
    let oracle: Vec<Rational> = (0..4).map(|n| naive_cesaro(&x, n)).collect();
    assert_eq!(oracle, vec![int(1), rat(1, 2), rat(2, 3), rat(1, 2)]);
    let got = transform(&OperatorMatrix::cesaro(1), &alternating(), 4, &rat(1, 1024)).unwrap();
    for (r, want) in got.iter().zip(&oracle) {
        assert_eq!(&r.value[0].lower(), want);
        assert!(r.trunc_error.is_zero());
    }
}

#[test]
fn geometric_row_sums_to_one() {
    let a = OperatorMatrix::geometric_rows("g", rat(1, 2), rat(1, 2)).unwrap();
    let one = VectorSequence::constant("one", vec![Scalar::one()]).unwrap();
    let tol = rat(1, 1 << 10);
    let r = &transform(&a, &one, 1, &tol).unwrap()[0];
    let dev = (r.value[0].lower() - int(1)).abs();
    assert!(dev <= tol, "{dev}");
    assert!(r.trunc_error <= tol && dev <= r.trunc_error);
}

#[test]
fn set_restricted_norm_on_evens() {
    let evens = SetDescriptor::evens();
    let oracle: Rational = (0..=4).filter(|k| k % 2 == 0).map(|_| rat(1, 5)).sum();
    assert_eq!(oracle, rat(3, 5));
    let e = group_norm(&OperatorMatrix::cesaro(1), 4, Some(&evens), &rat(1, 1024)).unwrap();
    assert_eq!((e.lo, e.hi), (oracle.clone(), oracle));
}

#[test]
fn scaled_identity_norm() {
    let a = OperatorMatrix::cesaro(2);
    let e = group_norm(&a, 3, None, &rat(1, 1024)).unwrap();
    assert_eq!(e.lo, int(1));
    let entry = OperatorEntry::scaled_identity(2, Scalar::ratio(1, 4));
    assert_eq!(entry_norm(&entry).lower(), rat(1, 4));
}

#[test]
fn entry_norm_is_max_column_sum() {
    let e = OperatorEntry::from_rows(vec![vec![Scalar::integer(1), Scalar::integer(2)], vec![Scalar::integer(3), Scalar::integer(-4)]]);
    let oracle = (0..2).map(|j| [[1i64, 2], [3, -4]].iter().map(|r| r[j].abs()).sum::<i64>()).max().unwrap();
    assert_eq!(oracle, 6);
    assert_eq!(entry_norm(&e).lower(), int(oracle));
}

#[test]
fn euler_rows_are_binomial() {
    let a = OperatorMatrix::euler();
    for n in [0usize, 1, 5, 9] {
        let mut c = int(1);
        let scale = rat(1, 1i64 << n);
        for (k, v) in row(&a, n) {
            if k > 0 {
                c = c * int((n + 1 - k) as i64) / int(k as i64);
            }
            assert_eq!(v, &c * &scale, "row {n} column {k}");
            assert_eq!(v, binomial(n, k) * &scale);
        }
    }
}

#[test]
fn progression_densities() {
    for (a, b) in [(1, 0), (2, 1), (3, 2), (5, 0)] {
        let s = EpSet::progression(a, b);
        let counted = s.count_below(60 * a);
        assert_eq!(rat(counted as i64, 60 * a as i64), rat(1, a as i64));
        assert_eq!(s.density(), rat(1, a as i64));
    }
    let evens = EpSet::progression(2, 0);
    assert!(!IdealSpec::density_zero().contains_epset(&evens));
}

#[test]
fn evens_generated_ideal_limit() {
    let h = HorizonParams::new(128);
    let ideal = corpus::evens_ideal();
    let r = ideal_lim(&alternating(), &ideal, &h).unwrap();
    assert_eq!(r.eta(), Some(&[int(0)][..]));
}

#[test]
fn alternating_clusters_under_density_zero() {
    let h = HorizonParams::new(128);
    let c = cluster_points(&alternating(), &IdealSpec::density_zero(), &h).unwrap();
    assert_eq!(c.values(), vec![int(0), int(1)]);
    let cycle = VectorSequence::scalar_periodic("c", &[Scalar::integer(0), Scalar::integer(1), Scalar::integer(2)]).unwrap();
    let c = cluster_points(&cycle, &IdealSpec::fin(), &h).unwrap();
    assert_eq!((c.min(), c.max()), (int(0), int(2)));
}

#[test]
fn finite_exception_has_zero_density_limsup() {
    let h = HorizonParams::new(128);
    let x = VectorSequence::scalar_eventually_periodic("f", &[Scalar::one(), Scalar::zero(), Scalar::one()], &[Scalar::zero()]).unwrap();
    assert_eq!(ideal_limsup(&x, &IdealSpec::density_zero(), &h).unwrap(), int(0));
}

#[test]
fn shift_window_rows() {
    let s0 = SigmaMap::shift();
    let m = sigma_matrix(&s0, 0, 1);
    assert_eq!(row(&m, 2), (1..=3).map(|k| (k, rat(1, 3))).collect::<Vec<_>>());
    let m = sigma_matrix(&s0, 3, 1);
    assert_eq!(row(&m, 1), vec![(4, rat(1, 2)), (5, rat(1, 2))]);
}

#[test]
fn composed_cesaro_entry() {
    let c = compose_sigma(&OperatorMatrix::cesaro(1), &SigmaMap::shift(), 0);
    let oracle = (rat(1, 2) + rat(1, 3)) / int(2);
    assert_eq!(oracle, rat(5, 12));
    assert_eq!(c.entry(1, 0).get(0, 0).lower(), oracle);
    let id = compose_sigma(&OperatorMatrix::identity(1), &SigmaMap::shift(), 0);
    assert_eq!(row(&id, 4), (1..=5).map(|k| (k, rat(1, 5))).collect::<Vec<_>>());
}

#[test]
fn spike_has_sigma_limit_zero() {
    let spike = VectorSequence::scalar_eventually_periodic("spike", &[Scalar::one()], &[Scalar::zero()]).unwrap();
    let r = sigma_limit(&spike, &SigmaMap::shift(), &IdealSpec::fin(), &HorizonParams::new(64)).unwrap();
    assert_eq!(r.eta(), Some(&[int(0)][..]));
}

#[test]
fn rotation_classes_of_two_letter_words() {
    let s = enumerate_selections(2, &EnumParams { prefix: 0, period: 2, budget: 100 }).unwrap();
    assert_eq!(s.len(), 3);
}

#[test]
fn uniform_limsup_worked_values() {
    let h = HorizonParams::new(128);
    let fin = IdealSpec::fin();
    let pair = MatrixFamily::new(vec![corpus::unit_mass(0), corpus::unit_mass(1)]).unwrap();
    let r = verify_uniform_limsup_identity(&pair, &alternating(), &fin, &h, &EnumParams::default()).unwrap();
    assert_eq!((r.lhs.clone(), r.adversarial_rhs.clone()), (int(1), int(1)));
    let c = MatrixFamily::singleton(OperatorMatrix::cesaro(1));
    let r = verify_uniform_limsup_identity(&c, &alternating(), &fin, &h, &EnumParams::default()).unwrap();
    assert_eq!((r.lhs, r.adversarial_rhs), (rat(1, 2), rat(1, 2)));
    let pm = MatrixFamily::new(vec![OperatorMatrix::cesaro(1), corpus::negative_cesaro()]).unwrap();
    let one = VectorSequence::constant("one", vec![Scalar::one()]).unwrap();
    let r = verify_uniform_limsup_identity(&pm, &one, &fin, &h, &EnumParams::default()).unwrap();
    assert_eq!(r.lhs, Rational::one());
}

#[test]
fn signed_rows_sum_to_zero_in_the_limit() {
    let h = HorizonParams::new(128);
    let reports = check_core_inclusion(&corpus::signed_cesaro(), &IdealSpec::fin(), &h, &[]).unwrap();
    let by = |c: &str| reports.iter().find(|r| r.condition == c).unwrap().verdict;
    assert_eq!(by("C3"), Verdict::Holds);
    assert_eq!(by("C2"), Verdict::FailsWithWitness);
    let row_sum: Rational = row(&corpus::signed_cesaro(), 9).into_iter().map(|(_, v)| v).sum();
    assert_eq!(row_sum, Rational::zero());
}
