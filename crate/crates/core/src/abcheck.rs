//! The orbit-filtration sequence
//! `0 -> H_T(X) -> H_T(X_0) -> H_T^{+1}(X_1, X_0) -> ... -> H_T^{+n}(X_n, X_{n-1}) -> 0`,
//! its exactness, the short sequences of the filtration, and the
//! consolidated condition report.
//!
//! Position `p` in base degree `d` is the group `H_T^{d+p}(X_p, X_{p-1})`.
//! Maps are computed on cochains: the augmentation restricts to the fixed
//! cells; `d_p` lifts a level-`p` cocycle by zero, applies the global
//! differential and keeps the level-`p+1` part.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::ecw::{CochainModel, EcwError, EquivariantCW, SubsetCohomology};
use crate::grmod::{
    linear_annihilator_probe, shift, tensor_with_z, try_extended_witness, GradedAbelianGroup,
    GradedModule, ProbeHit, WitnessResult,
};
use crate::intlinalg::{
    cokernel_group, kernel_group, reduce_mod_orders, AbelianPresentation, IntMatrix, Subquotient,
};
use crate::koszul::{coordinate_forms, tor_table, TorTable};
use crate::polyring::LinearForm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Aug,
    Level(usize),
}

impl Position {
    /// Degree offset between base degree and cohomological degree.
    pub fn offset(self) -> i64 {
        match self {
            Position::Aug => 0,
            Position::Level(p) => p as i64,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Aug => write!(f, "aug"),
            Position::Level(p) => write!(f, "{p}"),
        }
    }
}

/// The assembled sequence on cochains of degree `<= d_max + 1`.
pub struct ABSequence {
    n: usize,
    d_max: i64,
    model: CochainModel,
    total: SubsetCohomology,
    levels: Vec<SubsetCohomology>,
}

impl ABSequence {
    pub fn build(e: &EquivariantCW, d_max: i64) -> Result<Self, EcwError> {
        let model = CochainModel::new(e, d_max + 1)?;
        let n = e.n;
        let total = model.subset_cohomology(&model.mask(-1, n as i64))?;
        let levels = (0..=n)
            .map(|p| model.subset_cohomology(&model.mask(p as i64 - 1, p as i64)))
            .collect::<Result<_, _>>()?;
        Ok(ABSequence {
            n,
            d_max,
            model,
            total,
            levels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_max(&self) -> i64 {
        self.d_max
    }

    pub fn model(&self) -> &CochainModel {
        &self.model
    }

    pub fn positions(&self) -> Vec<Position> {
        let mut v = vec![Position::Aug];
        v.extend((0..=self.n).map(Position::Level));
        v
    }

    pub fn prev(&self, p: Position) -> Option<Position> {
        match p {
            Position::Aug => None,
            Position::Level(0) => Some(Position::Aug),
            Position::Level(q) => Some(Position::Level(q - 1)),
        }
    }

    pub fn next(&self, p: Position) -> Option<Position> {
        match p {
            Position::Aug => Some(Position::Level(0)),
            Position::Level(q) if q < self.n => Some(Position::Level(q + 1)),
            Position::Level(_) => None,
        }
    }

    fn data(&self, p: Position) -> &SubsetCohomology {
        match p {
            Position::Aug => &self.total,
            Position::Level(q) => &self.levels[q],
        }
    }

    /// Per-degree subquotient at position `p`, base degree `d`; `None` when
    /// the group is zero for degree reasons or lies beyond the model.
    fn piece(&self, p: Position, d: i64) -> Option<&Subquotient> {
        self.data(p).piece(d + p.offset())
    }

    /// Whether the group at `(p, d)` is known.
    pub fn known(&self, p: Position, d: i64) -> bool {
        d + p.offset() <= self.d_max
    }

    pub fn group(&self, p: Position, d: i64) -> Option<AbelianPresentation> {
        if !self.known(p, d) {
            return None;
        }
        Some(
            self.piece(p, d)
                .map(|s| s.presentation().clone())
                .unwrap_or_default(),
        )
    }

    pub fn orders(&self, p: Position, d: i64) -> Vec<BigInt> {
        self.piece(p, d).map(|s| s.orders().to_vec()).unwrap_or_default()
    }

    /// The map from position `p` to `next(p)` in base degree `d`.
    pub fn map_from(&self, p: Position, d: i64) -> Option<IntMatrix> {
        let q = self.next(p)?;
        if !self.known(q, d) {
            return None;
        }
        let rows = self.orders(q, d).len();
        let cols = self.orders(p, d).len();
        if rows == 0 || cols == 0 {
            return Some(IntMatrix::zeros(rows, cols));
        }
        let k = d + p.offset();
        let shift = q.offset() - p.offset();
        Some(
            self.model
                .induced(self.data(p), self.data(q), k, shift)
                .expect("map inside the model"),
        )
    }

    /// The sequence's modules: `H_T(X)` and each `H_T^{*+p}(X_p, X_{p-1})`.
    pub fn module(&self, p: Position) -> GradedModule {
        let m = self.model.module(self.data(p)).expect("module");
        shift(&m, -p.offset())
    }

    /// Whether the verdict at `(p, d)` is determinate: every adjacent group
    /// is known two degrees beyond `d`.
    pub fn determinate(&self, p: Position, d: i64) -> bool {
        [self.prev(p), Some(p), self.next(p)]
            .into_iter()
            .flatten()
            .all(|q| self.known(q, d + 2))
    }

    /// Homology of the sequence at `(p, d)`, when determinate.
    pub fn defect(&self, p: Position, d: i64) -> Option<Subquotient> {
        if !self.determinate(p, d) {
            return None;
        }
        let mid = self.orders(p, d);
        let incoming = match self.prev(p) {
            Some(q) => self.map_from(q, d)?,
            None => IntMatrix::zeros(mid.len(), 0),
        };
        let (outgoing, next) = match self.next(p) {
            Some(q) => (self.map_from(p, d)?, self.orders(q, d)),
            None => (IntMatrix::zeros(0, mid.len()), Vec::new()),
        };
        Some(Subquotient::homology(&incoming, &mid, &outgoing, &next).expect("defect"))
    }

    /// Base degrees in which position `p` can be nonzero, up to the last
    /// known degree.
    pub fn degree_range(&self, p: Position) -> (i64, i64) {
        (-p.offset(), self.d_max - p.offset())
    }

    /// Consecutive composites vanish wherever both maps are defined;
    /// returns the offending spots.
    pub fn zero_composite_violations(&self) -> Vec<(Position, i64)> {
        let mut out = Vec::new();
        for p in self.positions() {
            let Some(q) = self.next(p) else { continue };
            let Some(r) = self.next(q) else { continue };
            let (lo, hi) = self.degree_range(p);
            for d in lo..=hi {
                let (Some(a), Some(b)) = (self.map_from(p, d), self.map_from(q, d)) else {
                    continue;
                };
                let comp = b.mul(&a);
                let orders = self.orders(r, d);
                for c in 0..comp.cols() {
                    let mut col = comp.column(c);
                    reduce_mod_orders(&mut col, &orders);
                    if col.iter().any(|x| !x.is_zero()) {
                        out.push((p, d));
                        break;
                    }
                }
            }
        }
        out
    }

    /// `H_T^k(X, X_hi)` style data for the filtration interval `(lo, hi]`.
    pub fn interval(&self, lo: i64, hi: i64) -> SubsetCohomology {
        self.model
            .subset_cohomology(&self.model.mask(lo, hi))
            .expect("interval cohomology")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Spot {
    pub degree: i64,
    pub verdict: SpotVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<AbelianPresentation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpotVerdict {
    Exact,
    Inexact,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactnessReport {
    pub positions: Vec<(Position, Vec<Spot>)>,
}

impl ExactnessReport {
    pub fn spots(&self, p: Position) -> &[Spot] {
        self.positions
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, s)| s.as_slice())
            .unwrap_or(&[])
    }

    pub fn verdict_at(&self, p: Position) -> Verdict {
        summarize(self.spots(p))
    }

    pub fn overall(&self) -> Verdict {
        let all: Vec<Spot> = self.positions.iter().flat_map(|(_, s)| s.clone()).collect();
        summarize(&all)
    }

    /// One line per position without failures, one per failing degree.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (p, spots) in &self.positions {
            let failures: Vec<&Spot> = spots.iter().filter(|s| s.verdict == SpotVerdict::Inexact).collect();
            if failures.is_empty() {
                match spots.iter().rev().find(|s| s.verdict == SpotVerdict::Exact) {
                    Some(s) => out.push(format!("position {p}: exact through degree {}", s.degree)),
                    None => out.push(format!("position {p}: indeterminate")),
                }
            }
            for s in failures {
                out.push(format!(
                    "position {p}: not exact at degree {} (defect {})",
                    s.degree,
                    s.defect.as_ref().unwrap()
                ));
            }
        }
        out
    }

    /// Definite failures as `(position, degree, defect)`.
    pub fn failures(&self) -> Vec<(Position, i64, AbelianPresentation)> {
        self.positions
            .iter()
            .flat_map(|(p, spots)| {
                spots
                    .iter()
                    .filter(|s| s.verdict == SpotVerdict::Inexact)
                    .map(move |s| (*p, s.degree, s.defect.clone().unwrap()))
            })
            .collect()
    }
}

fn summarize(spots: &[Spot]) -> Verdict {
    if spots.iter().any(|s| s.verdict == SpotVerdict::Inexact) {
        Verdict::Fails
    } else if spots.iter().any(|s| s.verdict == SpotVerdict::Exact) {
        Verdict::Holds
    } else {
        Verdict::Indeterminate
    }
}

impl Serialize for ExactnessReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.positions.len()))?;
        for (p, spots) in &self.positions {
            map.serialize_entry(&p.to_string(), spots)?;
        }
        map.end()
    }
}

pub fn exactness_report(seq: &ABSequence) -> ExactnessReport {
    let positions = seq
        .positions()
        .into_iter()
        .map(|p| {
            let (lo, hi) = seq.degree_range(p);
            let spots = (lo..=hi)
                .map(|d| match seq.defect(p, d) {
                    None => Spot {
                        degree: d,
                        verdict: SpotVerdict::Indeterminate,
                        defect: None,
                    },
                    Some(h) if h.presentation().is_trivial() => Spot {
                        degree: d,
                        verdict: SpotVerdict::Exact,
                        defect: None,
                    },
                    Some(h) => Spot {
                        degree: d,
                        verdict: SpotVerdict::Inexact,
                        defect: Some(h.presentation().clone()),
                    },
                })
                .collect();
            (p, spots)
        })
        .collect();
    ExactnessReport { positions }
}

/// Which part of `0 -> H(X, X_{i-1}) -> H(X_i, X_{i-1}) -> H^{+1}(X, X_i) -> 0`
/// failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFailure {
    NotInjective,
    NotExactInMiddle,
    NotSurjective,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitVerdict {
    pub i: usize,
    pub verdict: Verdict,
    /// First failure as (cohomological degree of the middle term, kind,
    /// offending group).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<(i64, SplitFailure, AbelianPresentation)>,
    /// Middle degrees checked: `0..=checked_up_to`.
    pub checked_up_to: i64,
}

/// The maps `α_i` (restriction) and `δ_i` (connecting) of the short
/// sequence for filtration level `i`, in cohomological degree `k`.
pub struct ShortSequence<'a> {
    seq: &'a ABSequence,
    pub ge: SubsetCohomology,
    pub eq: SubsetCohomology,
    pub gt: SubsetCohomology,
}

impl<'a> ShortSequence<'a> {
    pub fn new(seq: &'a ABSequence, i: usize) -> Self {
        let n = seq.n as i64;
        let i = i as i64;
        ShortSequence {
            seq,
            ge: seq.interval(i - 1, n),
            eq: seq.interval(i - 1, i),
            gt: seq.interval(i, n),
        }
    }

    fn orders(h: &SubsetCohomology, k: i64) -> Vec<BigInt> {
        h.piece(k).map(|s| s.orders().to_vec()).unwrap_or_default()
    }

    fn map(&self, src: &SubsetCohomology, tgt: &SubsetCohomology, k: i64, shift: i64) -> IntMatrix {
        let rows = Self::orders(tgt, k + shift).len();
        let cols = Self::orders(src, k).len();
        if rows == 0 || cols == 0 {
            return IntMatrix::zeros(rows, cols);
        }
        self.seq.model.induced(src, tgt, k, shift).expect("short sequence map")
    }

    /// `α_i: H^k(X, X_{i-1}) -> H^k(X_i, X_{i-1})`.
    pub fn alpha(&self, k: i64) -> IntMatrix {
        self.map(&self.ge, &self.eq, k, 0)
    }

    /// `δ_i: H^k(X_i, X_{i-1}) -> H^{k+1}(X, X_i)`.
    pub fn delta(&self, k: i64) -> IntMatrix {
        self.map(&self.eq, &self.gt, k, 1)
    }

    /// Extension by zero `H^k(X, X_i) -> H^k(X, X_{i-1})`.
    pub fn inclusion(&self, k: i64) -> IntMatrix {
        self.map(&self.gt, &self.ge, k, 0)
    }

    pub fn ge_orders(&self, k: i64) -> Vec<BigInt> {
        Self::orders(&self.ge, k)
    }

    pub fn eq_orders(&self, k: i64) -> Vec<BigInt> {
        Self::orders(&self.eq, k)
    }

    pub fn gt_orders(&self, k: i64) -> Vec<BigInt> {
        Self::orders(&self.gt, k)
    }

    /// Exactness defects of the long exact sequence of the triple at the
    /// three spots of cohomological degree `k` (requires `k + 1 <= d_max`).
    pub fn long_exact_defects(&self, k: i64) -> [AbelianPresentation; 3] {
        let ge = self.ge_orders(k);
        let eq = self.eq_orders(k);
        let gt_next = self.gt_orders(k + 1);
        let h = |inc: &IntMatrix, mid: &[BigInt], out: &IntMatrix, next: &[BigInt]| {
            Subquotient::homology(inc, mid, out, next)
                .expect("homology")
                .presentation()
                .clone()
        };
        [
            h(&self.inclusion(k), &ge, &self.alpha(k), &eq),
            h(&self.alpha(k), &eq, &self.delta(k), &gt_next),
            h(&self.delta(k), &gt_next, &self.inclusion(k + 1), &self.ge_orders(k + 1)),
        ]
    }
}

pub fn splitting_report(seq: &ABSequence) -> Vec<SplitVerdict> {
    (0..=seq.n)
        .map(|i| {
            let ss = ShortSequence::new(seq, i);
            let top = seq.d_max - 1;
            let mut failure = None;
            for k in 0..=top {
                let ker = kernel_group(&ss.alpha(k), &ss.ge_orders(k), &ss.eq_orders(k)).expect("kernel");
                if !ker.presentation().is_trivial() {
                    failure = Some((k, SplitFailure::NotInjective, ker.presentation().clone()));
                    break;
                }
                let mid = Subquotient::homology(&ss.alpha(k), &ss.eq_orders(k), &ss.delta(k), &ss.gt_orders(k + 1))
                    .expect("middle");
                if !mid.presentation().is_trivial() {
                    failure = Some((k, SplitFailure::NotExactInMiddle, mid.presentation().clone()));
                    break;
                }
                let cok = cokernel_group(&ss.delta(k), &ss.gt_orders(k + 1)).expect("cokernel");
                if !cok.presentation().is_trivial() {
                    failure = Some((k, SplitFailure::NotSurjective, cok.presentation().clone()));
                    break;
                }
            }
            SplitVerdict {
                i,
                verdict: if failure.is_some() { Verdict::Fails } else { Verdict::Holds },
                failure,
                checked_up_to: top,
            }
        })
        .collect()
}

/// An element of `H_T^k(X, X_{i-1})` of the given order whose restriction
/// to `H_T^k(X_i, X_{i-1})` vanishes, searched over `k <= d_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KernelClass {
    pub i: usize,
    pub degree: i64,
    pub order: String,
    /// Presentation coordinates in `H_T^k(X, X_{i-1})`.
    pub element: Vec<String>,
}

/// Searches `ker(α_i)` for an element of exact order `order`.
pub fn restriction_kernel_class(seq: &ABSequence, i: usize, order: u64) -> Option<KernelClass> {
    let ss = ShortSequence::new(seq, i);
    let want = BigInt::from(order);
    for k in 0..=seq.d_max {
        let ker = kernel_group(&ss.alpha(k), &ss.ge_orders(k), &ss.eq_orders(k)).ok()?;
        // The kernel is Z^f + ⊕ Z/m_j; an element of exact order `order`
        // exists iff some m_j is divisible by it.
        for (g, m) in ker.orders().iter().enumerate() {
            if m.is_zero() || (m % &want) != BigInt::zero() {
                continue;
            }
            let scale = m / &want;
            let mut el: Vec<BigInt> = ker.lift(g).iter().map(|x| x * &scale).collect();
            reduce_mod_orders(&mut el, &ss.ge_orders(k));
            return Some(KernelClass {
                i,
                degree: k,
                order: want.to_string(),
                element: el.iter().map(ToString::to_string).collect(),
            });
        }
    }
    None
}

/// A class `x` of the given order in `H_T^k(X, X_{i-1})` whose restriction
/// to `H_T^k(X_i, X_{i-1})` has smaller order, so that
/// `image_order · x` is a nonzero element of `ker(α_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderDrop {
    pub i: usize,
    pub degree: i64,
    pub order: String,
    pub image_order: String,
    pub element: Vec<String>,
    pub kernel_element: Vec<String>,
}

fn element_order(v: &[BigInt], orders: &[BigInt]) -> Option<BigInt> {
    let mut acc = BigInt::from(1);
    for (x, m) in v.iter().zip(orders) {
        if x.is_zero() {
            continue;
        }
        if m.is_zero() {
            return None;
        }
        acc = acc.lcm(&(m / x.gcd(m)));
    }
    Some(acc)
}

/// Searches `H_T^k(X, X_{i-1})`, `k <= d_max`, for an element of exact
/// order `order` whose image under `α_i` has strictly smaller order.
pub fn restriction_order_drop(seq: &ABSequence, i: usize, order: u64) -> Option<OrderDrop> {
    let ss = ShortSequence::new(seq, i);
    let want = BigInt::from(order);
    for k in 0..=seq.d_max {
        let src = ss.ge_orders(k);
        let tgt = ss.eq_orders(k);
        let alpha = ss.alpha(k);
        for (g, m) in src.iter().enumerate() {
            if m.is_zero() || (m % &want) != BigInt::zero() {
                continue;
            }
            let mut x = vec![BigInt::zero(); src.len()];
            x[g] = m / &want;
            let mut image = alpha.mul_vec(&x);
            reduce_mod_orders(&mut image, &tgt);
            let Some(o) = element_order(&image, &tgt) else { continue };
            if o < want {
                let mut kx: Vec<BigInt> = x.iter().map(|a| a * &o).collect();
                reduce_mod_orders(&mut kx, &src);
                return Some(OrderDrop {
                    i,
                    degree: k,
                    order: want.to_string(),
                    image_order: o.to_string(),
                    element: x.iter().map(ToString::to_string).collect(),
                    kernel_element: kx.iter().map(ToString::to_string).collect(),
                });
            }
        }
    }
    None
}

/// Largest exponent among the torsion subgroups of a module in its window.
pub fn max_torsion_order(m: &GradedModule) -> BigInt {
    let (lo, hi) = m.window();
    (lo..=hi)
        .filter_map(|d| m.group(d).map(|g| g.exponent()))
        .max()
        .unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Conditions {
    pub iii: Verdict,
    pub iv: Verdict,
    pub v: Verdict,
    pub i_necessary: Verdict,
    pub extended: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorRow {
    pub j: usize,
    pub window: (i64, i64),
    pub groups: Vec<AbelianPresentation>,
}

impl TorRow {
    pub fn from_table(table: &TorTable) -> Vec<TorRow> {
        table
            .rows
            .iter()
            .enumerate()
            .map(|(j, row)| TorRow {
                j,
                window: row.window(),
                groups: row.iter().map(|(_, g)| g.clone()).collect(),
            })
            .collect()
    }

    /// `Tor_j on [lo, hi]: d: G, ...` listing the nonzero degrees, or `0`.
    pub fn to_line(&self) -> String {
        let nz: Vec<String> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_trivial())
            .map(|(k, g)| format!("{}: {g}", self.window.0 + k as i64))
            .collect();
        let body = if nz.is_empty() { "0".to_string() } else { nz.join(", ") };
        format!("Tor_{} on [{}, {}]: {body}", self.j, self.window.0, self.window.1)
    }
}

/// The consolidated report.
#[derive(Clone, Debug, Serialize)]
pub struct ABReport {
    pub n: usize,
    pub max_degree: i64,
    pub reliable_window: (i64, i64),
    pub cohomology: GradedAbelianGroup,
    pub positions: ExactnessReport,
    pub tor: Vec<TorRow>,
    pub conditions: Conditions,
    pub splitting: Vec<SplitVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended_obstruction: Option<String>,
    pub probe: Option<ProbeHit>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct ReportOptions {
    pub hx: Option<GradedAbelianGroup>,
    /// Candidate forms for the annihilator probe; `None` skips the probe.
    pub probe_candidates: Option<Vec<LinearForm>>,
}

fn tor_verdict(table: &TorTable, rows: std::ops::RangeInclusive<usize>) -> Verdict {
    let mut known = false;
    for j in rows {
        let Some(row) = table.rows.get(j) else { continue };
        if row.d_max() >= row.d_min() {
            known = true;
        }
        if !row.is_zero() {
            return Verdict::Fails;
        }
    }
    if known {
        Verdict::Holds
    } else {
        Verdict::Indeterminate
    }
}

pub fn condition_report(
    e: &EquivariantCW,
    d_max: i64,
    opts: &ReportOptions,
) -> Result<ABReport, EcwError> {
    let seq = ABSequence::build(e, d_max)?;
    let ht = seq.module(Position::Aug);
    let n = e.n;
    let table = tor_table(&ht, &coordinate_forms(n), n).expect("coordinate forms are independent");
    let exact = exactness_report(&seq);
    let splitting = splitting_report(&seq);
    let tensor = tensor_with_z(&ht);
    let i_necessary = match &opts.hx {
        None => Verdict::Indeterminate,
        Some(hx) => {
            let lo = hx.d_min().max(tensor.d_min());
            let hi = hx.d_max().min(tensor.d_max());
            if hi < lo {
                Verdict::Indeterminate
            } else if tensor.first_disagreement(hx).is_some() {
                Verdict::Fails
            } else {
                Verdict::Holds
            }
        }
    };
    let witness = try_extended_witness(&ht);
    let extended_obstruction = match &witness {
        WitnessResult::No { reason, .. } => Some(reason.clone()),
        WitnessResult::Unknown(reason) => Some(reason.clone()),
        WitnessResult::Yes(_) => None,
    };
    let probe = match &opts.probe_candidates {
        Some(c) => linear_annihilator_probe(&ht, c).expect("candidates are primitive"),
        None => None,
    };
    let mut notes = vec![
        "i_necessary compares M ⊗ Z with the supplied H*(X) degreewise as abstract groups; the comparison map itself is not checked".to_string(),
    ];
    if opts.hx.is_none() {
        notes.push("no H*(X) supplied: i_necessary not evaluated".into());
    }
    let tor = TorRow::from_table(&table);
    Ok(ABReport {
        n,
        max_degree: d_max,
        reliable_window: ht.window(),
        cohomology: ht.underlying(),
        conditions: Conditions {
            iii: tor_verdict(&table, 1..=n),
            iv: tor_verdict(&table, 1..=1),
            v: exact.overall(),
            i_necessary,
            extended: witness.verdict(),
        },
        positions: exact,
        tor,
        splitting,
        extended_obstruction,
        probe,
        notes,
    })
}

impl ABReport {
    /// True when any of iii, iv, v or i_necessary definitely fails.
    pub fn has_definite_failure(&self) -> bool {
        let c = &self.conditions;
        [c.iii, c.iv, c.v, c.i_necessary].contains(&Verdict::Fails)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        push(&mut out, format!("torus rank: {}", self.n));
        push(
            &mut out,
            format!("reliable window: [{}, {}]", self.reliable_window.0, self.reliable_window.1),
        );
        for (d, g) in self.cohomology.iter() {
            push(&mut out, format!("H_T^{d}: {g}"));
        }
        for line in self.positions.lines() {
            push(&mut out, line);
        }
        for row in self.tor.iter().skip(1) {
            push(&mut out, row.to_line());
        }
        for s in &self.splitting {
            match &s.failure {
                None => push(&mut out, format!("short sequence {}: exact through degree {}", s.i, s.checked_up_to)),
                Some((k, kind, g)) => {
                    let what = match kind {
                        SplitFailure::NotInjective => "restriction not injective",
                        SplitFailure::NotExactInMiddle => "not exact in the middle",
                        SplitFailure::NotSurjective => "connecting map not surjective",
                    };
                    push(&mut out, format!("short sequence {}: {what} at degree {k} ({g})", s.i));
                }
            }
        }
        let c = &self.conditions;
        push(&mut out, format!("condition iii: {}", c.iii));
        push(&mut out, format!("condition iv: {}", c.iv));
        push(&mut out, format!("condition v: {}", c.v));
        push(&mut out, format!("i_necessary: {}", c.i_necessary));
        match &self.extended_obstruction {
            Some(r) => push(&mut out, format!("extended: {} ({r})", c.extended)),
            None => push(&mut out, format!("extended: {}", c.extended)),
        }
        match &self.probe {
            Some(h) => push(
                &mut out,
                format!("probe: {} annihilates a class in degree {}", h.form, h.degree),
            ),
            None => push(&mut out, "probe: no annihilated class found".into()),
        }
        for note in &self.notes {
            push(&mut out, format!("note: {note}"));
        }
        out
    }
}
