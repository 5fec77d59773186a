//! Ideals on ω, ideal limits, cluster points and cores.
//!
//! Decidable sequences (eventually periodic) get exact verdicts from their
//! level sets. Everything else is sampled on `[0, N)` and judged by the
//! horizon rule in [`deviation_verdict`].

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Result, SummaError};
use crate::scalar::{int, simplest_rational, Enclosure, Rational, Scalar};
use crate::sequence::{Vector, VectorSequence};
use crate::sets::{EpSet, SetDescriptor};

/// Three-valued certified answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }
}

/// Decreasing base `S_0 ⊇ S_1 ⊇ …` of the dual filter.
#[derive(Clone, Debug, PartialEq)]
pub enum DualBase {
    /// `S_t = [t, ∞)`; generates Fin.
    Tails,
    /// `S_t = B_{min(t, L-1)} ∖ [0, t)` for a decreasing list `B_0 ⊇ … ⊇ B_{L-1}`.
    Stable(Vec<EpSet>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum IdealKind {
    CountablyGenerated(DualBase),
    DensityZero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealSpec {
    label: String,
    kind: IdealKind,
}

impl IdealSpec {
    pub fn fin() -> Self {
        IdealSpec { label: "fin".into(), kind: IdealKind::CountablyGenerated(DualBase::Tails) }
    }

    pub fn density_zero() -> Self {
        IdealSpec { label: "density-zero".into(), kind: IdealKind::DensityZero }
    }

    /// Ideal whose dual filter is generated by `B_t ∖ [0, t)`.
    pub fn countably_generated(label: impl Into<String>, base: Vec<EpSet>) -> Result<Self> {
        let label = label.into();
        let last = base.last().ok_or_else(|| SummaError::InvalidIdeal(format!("ideal `{label}` has an empty dual base")))?;
        if last.is_finite() {
            return Err(SummaError::InvalidIdeal(format!(
                "ideal `{label}` would contain ω: its dual base ends in a finite set"
            )));
        }
        for (t, pair) in base.windows(2).enumerate() {
            if !pair[1].is_subset_of(&pair[0]) {
                return Err(SummaError::InvalidIdeal(format!(
                    "ideal `{label}`: dual base is not decreasing at index {}",
                    t + 1
                )));
            }
        }
        if base.iter().all(|b| b.complement().is_finite()) {
            return Ok(IdealSpec { label, kind: IdealKind::CountablyGenerated(DualBase::Tails) });
        }
        Ok(IdealSpec { label, kind: IdealKind::CountablyGenerated(DualBase::Stable(base)) })
    }

    /// The ideal generated by `E` together with Fin: dual base `ω ∖ E`.
    pub fn generated_by(label: impl Into<String>, e: &EpSet) -> Result<Self> {
        IdealSpec::countably_generated(label, vec![e.complement()])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &IdealKind {
        &self.kind
    }

    pub fn is_fin(&self) -> bool {
        matches!(self.kind, IdealKind::CountablyGenerated(DualBase::Tails))
    }

    pub fn is_countably_generated(&self) -> bool {
        matches!(self.kind, IdealKind::CountablyGenerated(_))
    }

    /// The set `B_{L-1}` on which the dual filter lives eventually.
    fn core_set(&self) -> Option<EpSet> {
        match &self.kind {
            IdealKind::CountablyGenerated(DualBase::Tails) => Some(EpSet::all()),
            IdealKind::CountablyGenerated(DualBase::Stable(b)) => b.last().cloned(),
            IdealKind::DensityZero => None,
        }
    }

    /// `S_t`, for countably generated ideals.
    pub fn dual_set(&self, t: usize) -> Option<EpSet> {
        let base = match &self.kind {
            IdealKind::CountablyGenerated(DualBase::Tails) => EpSet::all(),
            IdealKind::CountablyGenerated(DualBase::Stable(b)) => b[t.min(b.len() - 1)].clone(),
            IdealKind::DensityZero => return None,
        };
        Some(base.difference(&EpSet::initial_segment(t)))
    }

    /// Exact membership of an eventually periodic set.
    pub fn contains_epset(&self, e: &EpSet) -> bool {
        match self.core_set() {
            Some(core) => e.intersection(&core).is_finite(),
            None => e.density().is_zero(),
        }
    }

    /// Least `t` with `S_t ∩ e = ∅`, for `e` in a countably generated ideal.
    pub fn dual_witness(&self, e: &EpSet) -> Option<usize> {
        let core = self.core_set()?;
        let hit = e.intersection(&core);
        if !hit.is_finite() {
            return None;
        }
        let len = match &self.kind {
            IdealKind::CountablyGenerated(DualBase::Stable(b)) => b.len(),
            _ => 1,
        };
        let bound = (len - 1).max(hit.max_element().map_or(0, |m| m + 1));
        (0..=bound).find(|&t| self.dual_set(t).is_some_and(|s| s.intersection(e).is_empty()))
    }
}

impl fmt::Display for IdealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Certified membership `E ∈ I`.
pub fn ideal_contains(ideal: &IdealSpec, e: &SetDescriptor, _h: &HorizonParams) -> Tri {
    match ideal.core_set() {
        Some(core) => Tri::from_bool(!e.meets_infinitely(&core)),
        None => Tri::from_bool(e.is_density_zero()),
    }
}

/// Certified inclusion `I ⊆ I′`.
pub fn ideal_included(small: &IdealSpec, large: &IdealSpec) -> Tri {
    match (small.core_set(), large.core_set()) {
        // everything contains Fin
        _ if small.is_fin() => Tri::Yes,
        // E ∈ I iff E ∩ B finite; I ⊆ I′ iff (ω ∖ B) ∩ B′ is finite
        (Some(b), Some(b2)) => Tri::from_bool(b.complement().intersection(&b2).is_finite()),
        (Some(b), None) => Tri::from_bool(b.complement().density().is_zero()),
        // the squares are density zero but meet every infinite progression set infinitely often
        (None, Some(_)) => Tri::No,
        (None, None) => Tri::Yes,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HorizonParams {
    pub n: usize,
    #[serde(serialize_with = "crate::scalar::ser::rational")]
    pub eps: Rational,
    pub tmax: usize,
    pub nu_max: usize,
}

impl Default for HorizonParams {
    fn default() -> Self {
        HorizonParams::new(256)
    }
}

impl HorizonParams {
    pub fn new(n: usize) -> Self {
        HorizonParams { n: n.max(1), eps: crate::scalar::rat(1, 16), tmax: n / 2, nu_max: 8 }
    }

    pub fn with_eps(mut self, eps: Rational) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SummaError::Schema("horizon N must be at least 1".into()));
        }
        if !self.eps.is_positive() {
            return Err(SummaError::Schema("eps must be positive".into()));
        }
        if self.tmax >= self.n {
            return Err(SummaError::Schema("tmax must be below the horizon".into()));
        }
        Ok(())
    }

    /// `S_t ∩ [0, N)` for countably generated ideals, `[t, N)` otherwise.
    pub fn window(&self, ideal: &IdealSpec, t: usize) -> Vec<usize> {
        match ideal.dual_set(t) {
            Some(s) => s.elements_below(self.n).collect(),
            None => (t.min(self.n)..self.n).collect(),
        }
    }

    pub fn late_window(&self, ideal: &IdealSpec) -> Vec<usize> {
        self.window(ideal, self.tmax)
    }
}

/// Horizon verdict for "the deviation sequence is `I`-null".
#[derive(Clone, Debug, PartialEq)]
pub enum HorizonVerdict {
    /// Deviations are `<= eps` on `S_t ∩ [0, N)` (density case: outside an
    /// exceptional fraction `<= eps` of `[tmax, N)`).
    Holds { t: usize, worst: Rational },
    /// Deviation `value > eps` at `n`, persisting into the late half.
    Fails { n: usize, value: Rational, margin: Rational },
    Unknown,
}

fn split_halves(w: &[usize]) -> (&[usize], &[usize]) {
    w.split_at(w.len() / 2)
}

/// Decide whether `dev_n → 0` along `I` at horizon `N`.
pub fn deviation_verdict(dev: &[Enclosure], ideal: &IdealSpec, h: &HorizonParams) -> HorizonVerdict {
    let n = dev.len().min(h.n);
    let eps = &h.eps;
    if ideal.is_countably_generated() {
        let half = n / 2;
        for t in 0..=h.tmax.min(n.saturating_sub(1)) {
            let w: Vec<usize> = h.window(ideal, t).into_iter().filter(|&k| k < n).collect();
            if !w.iter().any(|&k| k >= half) {
                break;
            }
            let worst = w.iter().map(|&k| dev[k].hi.clone()).max().expect("nonempty window");
            if &worst <= eps {
                return HorizonVerdict::Holds { t, worst };
            }
        }
        let w: Vec<usize> = h.late_window(ideal).into_iter().filter(|&k| k < n).collect();
        if w.len() < 2 {
            return HorizonVerdict::Unknown;
        }
        let (w1, w2) = split_halves(&w);
        let m1 = w1.iter().map(|&k| dev[k].lo.clone()).max().expect("nonempty");
        let m2 = w2.iter().map(|&k| dev[k].lo.clone()).max().expect("nonempty");
        // a floor above eps that barely moves also persists
        let floor = w2.iter().map(|&k| dev[k].lo.clone()).min().expect("nonempty");
        let level = &floor > eps && &floor * int(4) >= &m1 * int(3);
        if &m2 > eps && (m2 >= m1 || level) {
            let k = *w2.iter().find(|&&k| dev[k].lo == m2).expect("argmax");
            return HorizonVerdict::Fails { n: k, margin: &m2 - eps, value: m2 };
        }
        HorizonVerdict::Unknown
    } else {
        let w: Vec<usize> = (h.tmax.min(n)..n).collect();
        if w.len() < 2 {
            return HorizonVerdict::Unknown;
        }
        let possible = w.iter().filter(|&&k| &dev[k].hi > eps).count();
        if int(possible as i64) / int(w.len() as i64) <= *eps {
            let worst = w.iter().filter(|&&k| &dev[k].hi <= eps).map(|&k| dev[k].hi.clone()).max().unwrap_or_default();
            return HorizonVerdict::Holds { t: h.tmax, worst };
        }
        let (w1, w2) = split_halves(&w);
        let frac = |part: &[usize]| {
            let c = part.iter().filter(|&&k| &dev[k].lo > eps).count();
            int(c as i64) / int(part.len() as i64)
        };
        let (f1, f2) = (frac(w1), frac(w2));
        if &f2 > eps && f2 >= f1 {
            let k = *w2.iter().find(|&&k| &dev[k].lo > eps).expect("exception present");
            let value = dev[k].lo.clone();
            return HorizonVerdict::Fails { n: k, margin: &value - eps, value };
        }
        HorizonVerdict::Unknown
    }
}

/// Samples `x_0, …, x_{N-1}` with per-coordinate enclosures.
pub type Samples = Vec<Vec<Enclosure>>;

pub fn sample(x: &VectorSequence, n: usize) -> Samples {
    (0..n).map(|k| x.term(k).iter().map(Enclosure::of).collect()).collect()
}

/// How an ideal limit was certified.
#[derive(Clone, Debug, PartialEq)]
pub enum LimitCertificate {
    /// Exact: `{n : x_n ≠ η}` misses `S_t`.
    DualBase { t: usize },
    /// Exact: `{n : x_n ≠ η}` has density zero.
    NullSet { exceptional: EpSet },
    /// Horizon: deviations `<= eps` on `S_t ∩ [0, N)`.
    Horizon { t: usize, n: usize, worst: Rational },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealLimit {
    pub eta: Vec<Rational>,
    pub certificate: LimitCertificate,
}

impl IdealLimit {
    pub fn is_exact(&self) -> bool {
        !matches!(self.certificate, LimitCertificate::Horizon { .. })
    }
}

/// Two values both visited on sets outside the ideal.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparatingPair {
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
    pub indices: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum LimitResult {
    Converges(IdealLimit),
    Diverges(SeparatingPair),
}

impl LimitResult {
    pub fn eta(&self) -> Option<&[Rational]> {
        match self {
            LimitResult::Converges(l) => Some(&l.eta),
            LimitResult::Diverges(_) => None,
        }
    }
}

fn exact_vector(v: &Vector) -> Option<Vec<Rational>> {
    v.iter().map(|s| s.as_exact().cloned()).collect()
}

/// `I`-limit of `x`. Exact for decidable tails with exact terms, otherwise
/// judged at horizon `N`.
pub fn ideal_lim(x: &VectorSequence, ideal: &IdealSpec, h: &HorizonParams) -> Result<LimitResult> {
    if let Some(levels) = x.level_sets() {
        if let Some(levels) = levels.iter().map(|(v, s)| exact_vector(v).map(|v| (v, s.clone()))).collect::<Option<Vec<_>>>() {
            return Ok(exact_lim(&levels, ideal));
        }
    }
    lim_of_samples(&sample(x, h.n), ideal, h)
}

fn first_index(s: &EpSet) -> usize {
    (0..).find(|&k| s.contains(k)).expect("nonempty set")
}

fn exact_lim(levels: &[(Vec<Rational>, EpSet)], ideal: &IdealSpec) -> LimitResult {
    let large: Vec<&(Vec<Rational>, EpSet)> = levels.iter().filter(|(_, s)| !ideal.contains_epset(s)).collect();
    if large.len() == 1 {
        let (eta, level) = large[0];
        let exceptional = level.complement();
        let certificate = match ideal.dual_witness(&exceptional) {
            Some(t) => LimitCertificate::DualBase { t },
            None => LimitCertificate::NullSet { exceptional },
        };
        return LimitResult::Converges(IdealLimit { eta: eta.clone(), certificate });
    }
    let (a, b) = (large[0], large[1]);
    LimitResult::Diverges(SeparatingPair {
        a: a.0.clone(),
        b: b.0.clone(),
        indices: (first_index(&a.1), first_index(&b.1)),
    })
}

fn l1_distance(x: &[Enclosure], eta: &[Rational]) -> Enclosure {
    x.iter().zip(eta).fold(Enclosure::zero(), |acc, (e, q)| acc.add(&e.distance_to(q)))
}

/// Snapped estimate of the limit: the simplest rational within two spreads
/// of the late-window range.
fn estimate(samples: &Samples, ideal: &IdealSpec, h: &HorizonParams) -> Option<Vec<Rational>> {
    let w: Vec<usize> = h.late_window(ideal).into_iter().filter(|&k| k < samples.len()).collect();
    if w.is_empty() {
        return None;
    }
    let w2 = &w[..];
    let dim = samples[w2[0]].len();
    let trim = if ideal.is_countably_generated() {
        0
    } else {
        let e = &h.eps * int(w2.len() as i64);
        e.ceil().to_integer().try_into().unwrap_or(0usize)
    };
    let mut eta = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut vals: Vec<&Enclosure> = w2.iter().map(|&k| &samples[k][c]).collect();
        vals.sort_by_key(|a| a.mid());
        let kept = if 2 * trim < vals.len() { &vals[trim..vals.len() - trim] } else { &vals[..] };
        let lo = kept.iter().map(|e| e.lo.clone()).min()?;
        let hi = kept.iter().map(|e| e.hi.clone()).max()?;
        let s = &hi - &lo;
        if s.is_zero() {
            eta.push(lo);
            continue;
        }
        let s2 = &s * int(2);
        let (a, b) = match trim == 0 { true => drift_bracket(samples, w2, c, &s), false => None }
            .unwrap_or((&lo - &s2, &hi + &s2));
        eta.push(simplest_rational(&a, &b));
    }
    Some(eta)
}

/// For a monotone window, a bracket around the limit of the `c/(n+a)` drift
/// through the first, middle and last samples.
fn drift_bracket(samples: &Samples, w: &[usize], c: usize, s: &Rational) -> Option<(Rational, Rational)> {
    let mids: Vec<Rational> = w.iter().map(|&k| samples[k][c].mid()).collect();
    let rising = mids.windows(2).all(|p| p[0] <= p[1]);
    let falling = mids.windows(2).all(|p| p[0] >= p[1]);
    if !(rising || falling) || w.len() < 3 {
        return None;
    }
    let i = [0, w.len() / 2, w.len() - 1];
    let [n0, n1, n2] = i.map(|j| int(w[j] as i64));
    let [x0, x1, x2] = i.map(|j| &mids[j]);
    if x1 == x2 || x0 == x1 {
        return None;
    }
    let rho = (x0 - x1) / (x1 - x2);
    let den = &rho * (&n2 - &n1) - (&n1 - &n0);
    if den.is_zero() {
        return None;
    }
    let a = ((&n1 - &n0) * &n2 - &rho * (&n2 - &n1) * &n0) / den;
    let (d0, d1, d2) = (&n0 + &a, &n1 + &a, &n2 + &a);
    if d0.is_zero() || d1.is_zero() || d2.is_zero() || d0 == d1 {
        return None;
    }
    let c = (x0 - x1) / (d0.recip() - d1.recip());
    let r = x2 - c / d2;
    let pad = s / int(4);
    Some((&r - &pad, r + pad))
}

/// Horizon `I`-limit of sampled vectors.
pub fn lim_of_samples(samples: &Samples, ideal: &IdealSpec, h: &HorizonParams) -> Result<LimitResult> {
    let eta = estimate(samples, ideal, h)
        .ok_or_else(|| SummaError::HorizonTooSmall(format!("no samples in the late window at N = {}", h.n)))?;
    let dev: Vec<Enclosure> = samples.iter().map(|x| l1_distance(x, &eta)).collect();
    match deviation_verdict(&dev, ideal, h) {
        HorizonVerdict::Holds { t, worst } => {
            Ok(LimitResult::Converges(IdealLimit { eta, certificate: LimitCertificate::Horizon { t, n: h.n, worst } }))
        }
        HorizonVerdict::Fails { n, .. } => {
            let w: Vec<usize> = h.late_window(ideal).into_iter().filter(|&k| k < samples.len()).collect();
            let (_, w2) = split_halves(&w);
            let far_mid: Vec<Rational> = samples[n].iter().map(Enclosure::mid).collect();
            let other = w2
                .iter()
                .copied()
                .max_by_key(|&k| (l1_distance(&samples[k], &far_mid).lo, std::cmp::Reverse(k)))
                .unwrap_or(n);
            let other_mid: Vec<Rational> = samples[other].iter().map(Enclosure::mid).collect();
            Ok(LimitResult::Diverges(SeparatingPair { a: far_mid, b: other_mid, indices: (n, other) }))
        }
        HorizonVerdict::Unknown => Err(SummaError::HorizonTooSmall(format!(
            "the {} limit of the samples cannot be certified at N = {}",
            ideal.label(),
            h.n
        ))),
    }
}

/// A closed interval of candidate cluster points with a representative.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterInterval {
    pub lo: Rational,
    pub hi: Rational,
    pub representative: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPoints {
    pub intervals: Vec<ClusterInterval>,
    pub exact: bool,
}

impl ClusterPoints {
    pub fn values(&self) -> Vec<Rational> {
        self.intervals.iter().map(|c| c.representative.clone()).collect()
    }

    pub fn contains(&self, q: &Rational) -> bool {
        self.intervals.iter().any(|c| &c.lo <= q && q <= &c.hi)
    }

    pub fn max(&self) -> Rational {
        self.intervals.iter().map(|c| c.representative.clone()).max().expect("cluster set is nonempty")
    }

    pub fn min(&self) -> Rational {
        self.intervals.iter().map(|c| c.representative.clone()).min().expect("cluster set is nonempty")
    }
}

fn require_scalar(x: &VectorSequence) -> Result<()> {
    if x.dim() != 1 {
        return Err(SummaError::DimensionMismatch(format!(
            "cluster points need a scalar sequence, `{}` has dimension {}",
            x.label(),
            x.dim()
        )));
    }
    Ok(())
}

/// `I`-cluster points of a scalar sequence.
pub fn cluster_points(x: &VectorSequence, ideal: &IdealSpec, h: &HorizonParams) -> Result<ClusterPoints> {
    require_scalar(x)?;
    if let Some(levels) = x.level_sets() {
        let exact: Option<Vec<(Rational, EpSet)>> =
            levels.into_iter().map(|(v, s)| v[0].as_exact().cloned().map(|q| (q, s))).collect();
        if let Some(mut levels) = exact {
            levels.retain(|(_, s)| !ideal.contains_epset(s));
            levels.sort_by(|a, b| a.0.cmp(&b.0));
            let intervals = levels
                .into_iter()
                .map(|(q, _)| ClusterInterval { lo: q.clone(), hi: q.clone(), representative: q })
                .collect();
            return Ok(ClusterPoints { intervals, exact: true });
        }
    }
    let samples: Vec<Enclosure> = sample(x, h.n).into_iter().map(|mut v| v.remove(0)).collect();
    cluster_points_of_samples(&samples, ideal, h)
}

/// Horizon cluster points: late-window values grouped by gaps `<= eps`,
/// split into cells of width `<= eps`.
pub fn cluster_points_of_samples(samples: &[Enclosure], ideal: &IdealSpec, h: &HorizonParams) -> Result<ClusterPoints> {
    let w: Vec<usize> = h.late_window(ideal).into_iter().filter(|&k| k < samples.len()).collect();
    if w.len() < 2 {
        return Err(SummaError::HorizonTooSmall(format!("late window is too small at N = {}", h.n)));
    }
    let eps = &h.eps;
    let mut vals: Vec<&Enclosure> = w.iter().map(|&k| &samples[k]).collect();
    vals.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
    let mut groups: Vec<(Rational, Rational, usize)> = Vec::new();
    for e in vals {
        match groups.last_mut() {
            Some((_, hi, count)) if &e.lo - &*hi <= *eps => {
                if e.hi > *hi {
                    *hi = e.hi.clone();
                }
                *count += 1;
            }
            _ => groups.push((e.lo.clone(), e.hi.clone(), 1)),
        }
    }
    if !ideal.is_countably_generated() {
        let total = int(w.len() as i64);
        let kept: Vec<_> = groups.iter().filter(|g| int(g.2 as i64) / &total >= *eps).cloned().collect();
        if !kept.is_empty() {
            groups = kept;
        }
    }
    let mut intervals = Vec::new();
    for (lo, hi, _) in groups {
        let width = (&hi - &lo) * int(2);
        let representative = simplest_rational(&(&lo - &width), &(&hi + &width));
        let lo = lo.min(representative.clone());
        let hi = hi.max(representative.clone());
        let mut a = lo;
        loop {
            let b = (&a + eps).min(hi.clone());
            let rep = if a <= representative && representative <= b { representative.clone() } else { simplest_rational(&a, &b) };
            intervals.push(ClusterInterval { lo: a.clone(), hi: b.clone(), representative: rep });
            if b >= hi {
                break;
            }
            a = b;
        }
    }
    Ok(ClusterPoints { intervals, exact: false })
}

/// Horizon `I`-limsup of scalar samples.
///
/// Countably generated ideals: maxima over stretches of half the late
/// window, snapped to the simplest rational near their range. The stretch
/// maxima are monotone in the samples, so a pointwise smaller sequence never
/// gets a larger range.
/// Density zero: the top cluster cell, ignoring sparse groups.
pub fn limsup_of_samples(samples: &[Enclosure], ideal: &IdealSpec, h: &HorizonParams) -> Result<Rational> {
    envelope_limit(samples, ideal, h, true)
}

pub fn liminf_of_samples(samples: &[Enclosure], ideal: &IdealSpec, h: &HorizonParams) -> Result<Rational> {
    envelope_limit(samples, ideal, h, false)
}

fn envelope_limit(samples: &[Enclosure], ideal: &IdealSpec, h: &HorizonParams, top: bool) -> Result<Rational> {
    if !ideal.is_countably_generated() {
        let c = cluster_points_of_samples(samples, ideal, h)?;
        return Ok(if top { c.max() } else { c.min() });
    }
    let w: Vec<usize> = h.late_window(ideal).into_iter().filter(|&k| k < samples.len()).collect();
    if w.len() < 2 {
        return Err(SummaError::HorizonTooSmall(format!("late window is too small at N = {}", h.n)));
    }
    // Extremes over every stretch of half the window: each value sees enough
    // of an oscillation, and the spread still shows a slow drift.
    let len = w.len() / 2;
    let stretch = |i: usize| {
        let vals = w[i..i + len].iter().map(|&k| if top { &samples[k].hi } else { &samples[k].lo });
        if top { vals.max() } else { vals.min() }.expect("nonempty stretch").clone()
    };
    let envelope: Vec<Rational> = (0..=w.len() - len).map(stretch).collect();
    let lo = envelope.iter().min().expect("nonempty window").clone();
    let hi = envelope.iter().max().expect("nonempty window").clone();
    let s = &hi - &lo;
    if s.is_zero() {
        return Ok(lo);
    }
    // A stretch spans half the samples a limit estimate sees, hence the
    // wider margin.
    let margin = &s * int(12);
    Ok(simplest_rational(&(&lo - &margin), &(&hi + &margin)))
}

fn exact_clusters(x: &VectorSequence, ideal: &IdealSpec, h: &HorizonParams) -> Result<Option<ClusterPoints>> {
    let c = cluster_points(x, ideal, h)?;
    Ok(c.exact.then_some(c))
}

fn scalar_samples(x: &VectorSequence, h: &HorizonParams) -> Vec<Enclosure> {
    sample(x, h.n).into_iter().map(|mut v| v.remove(0)).collect()
}

pub fn ideal_limsup(x: &VectorSequence, ideal: &IdealSpec, h: &HorizonParams) -> Result<Rational> {
    match exact_clusters(x, ideal, h)? {
        Some(c) => Ok(c.max()),
        None => limsup_of_samples(&scalar_samples(x, h), ideal, h),
    }
}

pub fn ideal_liminf(x: &VectorSequence, ideal: &IdealSpec, h: &HorizonParams) -> Result<Rational> {
    match exact_clusters(x, ideal, h)? {
        Some(c) => Ok(c.min()),
        None => liminf_of_samples(&scalar_samples(x, h), ideal, h),
    }
}

/// `I`-core `[liminf, limsup]`.
pub fn core(x: &VectorSequence, ideal: &IdealSpec, h: &HorizonParams) -> Result<(Rational, Rational)> {
    Ok((ideal_liminf(x, ideal, h)?, ideal_limsup(x, ideal, h)?))
}

/// Convert exact scalars to an enclosure sample vector (helper for callers
/// holding plain scalar rows).
pub fn enclose(values: &[Scalar]) -> Vec<Enclosure> {
    values.iter().map(Enclosure::of).collect()
}
