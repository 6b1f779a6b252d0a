//! Truncated graded modules over `A = Z[t_1, ..., t_n]` (each `t_i` in
//! degree 2).
//!
//! A [`GradedModule`] stores, for every degree in its window
//! `[d_min, d_max]`, a canonical abelian group and the matrices of
//! multiplication by each `t_i` in presentation coordinates. Degrees below
//! `d_min` are zero (every module built here is bounded below there);
//! degrees above `d_max` are unknown and never consulted.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use std::collections::HashMap;
use thiserror::Error;

use crate::intlinalg::{
    cokernel_group, kernel_group, reduce_mod_orders, relation_columns, solve, AbelianPresentation,
    IntMatrix, LinalgError, Subquotient,
};
use crate::polyring::{monomials_of_degree, Exponents, LinearForm, Poly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrModError {
    #[error("relation {0} is not homogeneous")]
    InhomogeneousRelation(usize),
    #[error("relation {0} has {1} components but there are {2} generators")]
    RelationLength(usize, usize, usize),
    #[error("variable count mismatch: {0} vs {1}")]
    VariableMismatch(usize, usize),
    #[error("linear form {0} is not primitive")]
    NotPrimitive(String),
    #[error("invalid module data: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Per-degree finitely generated abelian groups on a window of degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedAbelianGroup {
    d_min: i64,
    d_max: i64,
    groups: Vec<AbelianPresentation>,
}

impl GradedAbelianGroup {
    pub fn new(d_min: i64, groups: Vec<AbelianPresentation>) -> Self {
        let d_max = d_min + groups.len() as i64 - 1;
        GradedAbelianGroup {
            d_min,
            d_max,
            groups,
        }
    }

    pub fn d_min(&self) -> i64 {
        self.d_min
    }

    pub fn d_max(&self) -> i64 {
        self.d_max
    }

    pub fn window(&self) -> (i64, i64) {
        (self.d_min, self.d_max)
    }

    /// Group in degree `d`, or `None` outside the window.
    pub fn get(&self, d: i64) -> Option<&AbelianPresentation> {
        if d < self.d_min || d > self.d_max {
            None
        } else {
            self.groups.get((d - self.d_min) as usize)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &AbelianPresentation)> {
        self.groups
            .iter()
            .enumerate()
            .map(move |(k, g)| (self.d_min + k as i64, g))
    }

    /// Restriction to `[lo, hi]` intersected with the window.
    pub fn restrict(&self, lo: i64, hi: i64) -> GradedAbelianGroup {
        let lo = lo.max(self.d_min);
        let hi = hi.min(self.d_max);
        let groups = (lo..=hi).map(|d| self.get(d).unwrap().clone()).collect();
        GradedAbelianGroup {
            d_min: lo,
            d_max: hi,
            groups,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.groups.iter().all(AbelianPresentation::is_trivial)
    }

    /// First degree of the common window where the two disagree, if any.
    pub fn first_disagreement(&self, other: &GradedAbelianGroup) -> Option<i64> {
        let lo = self.d_min.max(other.d_min);
        let hi = self.d_max.min(other.d_max);
        (lo..=hi).find(|&d| self.get(d) != other.get(d))
    }
}

impl fmt::Display for GradedAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(d, g)| format!("{d}: {g}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

impl Serialize for GradedAbelianGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            d_min: i64,
            d_max: i64,
            groups: &'a [AbelianPresentation],
        }
        Repr {
            d_min: self.d_min,
            d_max: self.d_max,
            groups: &self.groups,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GradedAbelianGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            d_min: i64,
            d_max: i64,
            groups: Vec<AbelianPresentation>,
        }
        let r = Repr::deserialize(d)?;
        if r.d_max - r.d_min + 1 != r.groups.len() as i64 {
            return Err(de::Error::custom(format!(
                "window [{}, {}] does not match {} groups",
                r.d_min,
                r.d_max,
                r.groups.len()
            )));
        }
        Ok(GradedAbelianGroup::new(r.d_min, r.groups))
    }
}

/// A graded `A`-module truncated to the window `[d_min, d_max]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedModule {
    n: usize,
    d_min: i64,
    d_max: i64,
    groups: Vec<AbelianPresentation>,
    /// `actions[d - d_min][i]`: multiplication by `t_{i+1}` from degree `d`
    /// to `d + 2`; present only when `d + 2 <= d_max`.
    actions: Vec<Vec<IntMatrix>>,
}

impl GradedModule {
    /// Assembles a module from per-degree subquotients of ambient lattices
    /// and ambient-level actions `ambient_action(d, i): ambient(d) ->
    /// ambient(d + 2)`.
    pub fn from_subquotients<F>(
        n: usize,
        d_min: i64,
        pieces: &[Subquotient],
        mut ambient_action: F,
    ) -> Result<GradedModule, LinalgError>
    where
        F: FnMut(i64, usize) -> IntMatrix,
    {
        let d_max = d_min + pieces.len() as i64 - 1;
        let groups: Vec<AbelianPresentation> =
            pieces.iter().map(|p| p.presentation().clone()).collect();
        let mut actions = Vec::with_capacity(pieces.len());
        for (k, src) in pieces.iter().enumerate() {
            let d = d_min + k as i64;
            let mut per_var = Vec::new();
            if d + 2 <= d_max {
                let tgt = &pieces[k + 2];
                for i in 0..n {
                    let f = ambient_action(d, i);
                    per_var.push(crate::intlinalg::induced_map(src, &f, tgt)?);
                }
            }
            actions.push(per_var);
        }
        Ok(GradedModule {
            n,
            d_min,
            d_max,
            groups,
            actions,
        })
    }

    /// Direct constructor from canonical groups and action matrices; checks
    /// shapes, torsion compatibility and commutativity.
    pub fn from_parts(
        n: usize,
        d_min: i64,
        groups: Vec<AbelianPresentation>,
        actions: Vec<Vec<IntMatrix>>,
    ) -> Result<GradedModule, GrModError> {
        let d_max = d_min + groups.len() as i64 - 1;
        if actions.len() != groups.len() {
            return Err(GrModError::Invalid("one action list per degree expected".into()));
        }
        let mut m = GradedModule {
            n,
            d_min,
            d_max,
            groups,
            actions,
        };
        for k in 0..m.groups.len() {
            let d = d_min + k as i64;
            let expected = if d + 2 <= d_max { n } else { 0 };
            if m.actions[k].len() != expected {
                return Err(GrModError::Invalid(format!(
                    "degree {d}: expected {expected} action matrices"
                )));
            }
            for a in &mut m.actions[k] {
                let (r, c) = (a.rows(), a.cols());
                if c != m.groups[k].num_generators() || r != m.groups[k + 2].num_generators() {
                    return Err(GrModError::Invalid(format!(
                        "degree {d}: action matrix has shape {r}x{c}"
                    )));
                }
            }
        }
        for k in 0..m.groups.len() {
            let d = d_min + k as i64;
            if d + 2 > d_max {
                continue;
            }
            let tgt = m.groups[k + 2].orders();
            for a in &mut m.actions[k] {
                for j in 0..a.cols() {
                    let mut col = a.column(j);
                    reduce_mod_orders(&mut col, &tgt);
                    for (i, x) in col.into_iter().enumerate() {
                        a.set(i, j, x);
                    }
                }
            }
        }
        m.check_invariants().map_err(GrModError::Invalid)?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_min(&self) -> i64 {
        self.d_min
    }

    pub fn d_max(&self) -> i64 {
        self.d_max
    }

    pub fn window(&self) -> (i64, i64) {
        (self.d_min, self.d_max)
    }

    /// Group in degree `d`: trivial below the window, `None` above it.
    pub fn group(&self, d: i64) -> Option<&AbelianPresentation> {
        static TRIVIAL: AbelianPresentation = AbelianPresentation {
            free_rank: 0,
            torsion: Vec::new(),
        };
        if d < self.d_min {
            Some(&TRIVIAL)
        } else if d > self.d_max {
            None
        } else {
            Some(&self.groups[(d - self.d_min) as usize])
        }
    }

    /// Orders of the generators in degree `d` (empty below the window).
    pub fn orders(&self, d: i64) -> Vec<BigInt> {
        self.group(d).map(|g| g.orders()).unwrap_or_default()
    }

    pub fn num_generators(&self, d: i64) -> usize {
        self.group(d).map_or(0, |g| g.num_generators())
    }

    /// Multiplication by `t_{i+1}` from degree `d` to `d + 2`.
    pub fn action(&self, i: usize, d: i64) -> Option<IntMatrix> {
        if d + 2 > self.d_max {
            return None;
        }
        if d < self.d_min {
            return Some(IntMatrix::zeros(self.num_generators(d + 2), 0));
        }
        Some(self.actions[(d - self.d_min) as usize][i].clone())
    }

    /// Multiplication by a linear form from degree `d` to `d + 2`.
    pub fn mult_by_form(&self, form: &LinearForm, d: i64) -> Option<IntMatrix> {
        assert_eq!(form.n(), self.n, "form length");
        let mut acc = IntMatrix::zeros(self.num_generators(d + 2), self.num_generators(d));
        if d + 2 > self.d_max {
            return None;
        }
        for (i, c) in form.0.iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(&self.action(i, d)?.scale(c));
            }
        }
        Some(acc)
    }

    pub fn underlying(&self) -> GradedAbelianGroup {
        GradedAbelianGroup::new(self.d_min, self.groups.clone())
    }

    /// Restricts the window to `[d_min, hi]`.
    pub fn truncate(&self, hi: i64) -> GradedModule {
        let hi = hi.min(self.d_max).max(self.d_min - 1);
        let len = (hi - self.d_min + 1) as usize;
        let mut actions: Vec<Vec<IntMatrix>> = self.actions[..len].to_vec();
        for (k, a) in actions.iter_mut().enumerate() {
            if self.d_min + k as i64 + 2 > hi {
                a.clear();
            }
        }
        GradedModule {
            n: self.n,
            d_min: self.d_min,
            d_max: hi,
            groups: self.groups[..len].to_vec(),
            actions,
        }
    }

    /// Actions respect torsion and commute wherever both composites exist.
    pub fn check_invariants(&self) -> Result<(), String> {
        for d in self.d_min..=self.d_max - 2 {
            let src = self.orders(d);
            let tgt = self.orders(d + 2);
            for i in 0..self.n {
                let a = self.action(i, d).unwrap();
                for (j, m) in src.iter().enumerate() {
                    if m.is_zero() {
                        continue;
                    }
                    let mut col: Vec<BigInt> = a.column(j).iter().map(|x| x * m).collect();
                    reduce_mod_orders(&mut col, &tgt);
                    if col.iter().any(|x| !x.is_zero()) {
                        return Err(format!(
                            "action of t{} in degree {d} does not respect torsion",
                            i + 1
                        ));
                    }
                }
            }
        }
        for d in self.d_min..=self.d_max - 4 {
            let tgt = self.orders(d + 4);
            for i in 0..self.n {
                for j in i + 1..self.n {
                    let ij = self.action(i, d + 2).unwrap().mul(&self.action(j, d).unwrap());
                    let ji = self.action(j, d + 2).unwrap().mul(&self.action(i, d).unwrap());
                    let diff = ij.add(&ji.scale(&BigInt::from(-1)));
                    for c in 0..diff.cols() {
                        let mut col = diff.column(c);
                        reduce_mod_orders(&mut col, &tgt);
                        if col.iter().any(|x| !x.is_zero()) {
                            return Err(format!(
                                "t{} and t{} do not commute in degree {d}",
                                i + 1,
                                j + 1
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Each degree as `Z^g / diag(orders)`: the subquotient pieces of the
    /// canonical ambient model.
    fn canonical_pieces(&self) -> Vec<Subquotient> {
        (self.d_min..=self.d_max)
            .map(|d| {
                let orders = self.orders(d);
                Subquotient::new(
                    orders.len(),
                    &IntMatrix::identity(orders.len()),
                    &relation_columns(&orders),
                )
                .expect("canonical piece")
            })
            .collect()
    }
}

/// The free module `A` itself, truncated at `d_max`.
pub fn free_module(n: usize, d_max: i64) -> GradedModule {
    from_presentation(n, &[0], &[], d_max).expect("free module")
}

/// The trivial module `Z` concentrated in degree 0 (every `t_i` acts by 0).
pub fn trivial_module(n: usize, d_max: i64) -> GradedModule {
    let relations: Vec<Vec<Poly>> = (0..n).map(|i| vec![Poly::var(n, i)]).collect();
    from_presentation(n, &[0], &relations, d_max).expect("trivial module")
}

struct FreeBasis {
    /// (generator, exponents) -> ambient index, per degree.
    index: Vec<HashMap<(usize, Exponents), usize>>,
    sizes: Vec<usize>,
    d_min: i64,
}

impl FreeBasis {
    fn new(n: usize, gen_degrees: &[i64], d_min: i64, d_max: i64) -> Self {
        let mut index = Vec::new();
        let mut sizes = Vec::new();
        for d in d_min..=d_max {
            let mut map = HashMap::new();
            for (k, &g) in gen_degrees.iter().enumerate() {
                let rest = d - g;
                if rest < 0 || rest % 2 != 0 {
                    continue;
                }
                for e in monomials_of_degree(n, (rest / 2) as u32) {
                    let idx = map.len();
                    map.insert((k, e), idx);
                }
            }
            sizes.push(map.len());
            index.push(map);
        }
        FreeBasis {
            index,
            sizes,
            d_min,
        }
    }

    fn size(&self, d: i64) -> usize {
        self.sizes[(d - self.d_min) as usize]
    }

    fn at(&self, d: i64) -> &HashMap<(usize, Exponents), usize> {
        &self.index[(d - self.d_min) as usize]
    }

    /// Multiplication by `t_{i+1}` on the free ambient lattices.
    fn shift_matrix(&self, d: i64, i: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.size(d + 2), self.size(d));
        let tgt = self.at(d + 2);
        for ((k, e), &idx) in self.at(d) {
            let mut e2 = e.clone();
            e2[i] += 1;
            m.set(tgt[&(*k, e2)], idx, BigInt::one());
        }
        m
    }
}

/// Degree of a homogeneous relation vector, `None` for the zero vector.
fn relation_degree(
    idx: usize,
    rel: &[Poly],
    gen_degrees: &[i64],
    n: usize,
) -> Result<Option<i64>, GrModError> {
    if rel.len() != gen_degrees.len() {
        return Err(GrModError::RelationLength(idx, rel.len(), gen_degrees.len()));
    }
    let mut deg = None;
    for (k, p) in rel.iter().enumerate() {
        if p.nvars() != n {
            return Err(GrModError::VariableMismatch(p.nvars(), n));
        }
        if p.is_zero() {
            continue;
        }
        let e = p
            .cohomological_degree()
            .ok_or(GrModError::InhomogeneousRelation(idx))?
            + gen_degrees[k];
        match deg {
            None => deg = Some(e),
            Some(d) if d != e => return Err(GrModError::InhomogeneousRelation(idx)),
            _ => {}
        }
    }
    Ok(deg)
}

fn relation_lattice(
    basis: &FreeBasis,
    d: i64,
    n: usize,
    relations: &[(i64, &Vec<Poly>)],
) -> IntMatrix {
    let map = basis.at(d);
    let mut cols = Vec::new();
    for &(e, rel) in relations {
        let rest = d - e;
        if rest < 0 || rest % 2 != 0 {
            continue;
        }
        for mu in monomials_of_degree(n, (rest / 2) as u32) {
            let mut v = vec![BigInt::zero(); basis.size(d)];
            for (k, p) in rel.iter().enumerate() {
                for (exps, c) in p.terms() {
                    let e2: Exponents = exps.iter().zip(&mu).map(|(a, b)| a + b).collect();
                    v[map[&(k, e2)]] += c;
                }
            }
            cols.push(v);
        }
    }
    IntMatrix::from_columns(basis.size(d), &cols)
}

fn checked_relations<'a>(
    n: usize,
    gen_degrees: &[i64],
    relations: &'a [Vec<Poly>],
) -> Result<Vec<(i64, &'a Vec<Poly>)>, GrModError> {
    let mut out = Vec::new();
    for (idx, rel) in relations.iter().enumerate() {
        if let Some(e) = relation_degree(idx, rel, gen_degrees, n)? {
            out.push((e, rel));
        }
    }
    Ok(out)
}

/// The module with generators in the given degrees modulo the given
/// homogeneous relation vectors, computed degreewise up to `d_max`.
pub fn from_presentation(
    n: usize,
    gen_degrees: &[i64],
    relations: &[Vec<Poly>],
    d_max: i64,
) -> Result<GradedModule, GrModError> {
    let rels = checked_relations(n, gen_degrees, relations)?;
    let d_min = gen_degrees.iter().copied().min().unwrap_or(0);
    let d_max = d_max.max(d_min - 1);
    let basis = FreeBasis::new(n, gen_degrees, d_min, d_max);
    let mut pieces = Vec::new();
    for d in d_min..=d_max {
        let size = basis.size(d);
        let r = relation_lattice(&basis, d, n, &rels);
        pieces.push(Subquotient::new(size, &IntMatrix::identity(size), &r)?);
    }
    Ok(GradedModule::from_subquotients(n, d_min, &pieces, |d, i| {
        basis.shift_matrix(d, i)
    })?)
}

/// The submodule of the free module generated by the relation vectors
/// (the kernel in `0 -> K -> F -> F/K -> 0`).
pub fn relation_submodule(
    n: usize,
    gen_degrees: &[i64],
    relations: &[Vec<Poly>],
    d_max: i64,
) -> Result<GradedModule, GrModError> {
    let rels = checked_relations(n, gen_degrees, relations)?;
    let d_min = gen_degrees.iter().copied().min().unwrap_or(0);
    let d_max = d_max.max(d_min - 1);
    let basis = FreeBasis::new(n, gen_degrees, d_min, d_max);
    let mut pieces = Vec::new();
    for d in d_min..=d_max {
        let size = basis.size(d);
        let r = relation_lattice(&basis, d, n, &rels);
        pieces.push(Subquotient::new(size, &r, &IntMatrix::zeros(size, 0))?);
    }
    Ok(GradedModule::from_subquotients(n, d_min, &pieces, |d, i| {
        basis.shift_matrix(d, i)
    })?)
}

/// `M ⊗_A Z`: per degree, the cokernel of all `t_i`-actions into that degree.
pub fn tensor_with_z(m: &GradedModule) -> GradedAbelianGroup {
    let groups = (m.d_min..=m.d_max)
        .map(|d| {
            let orders = m.orders(d);
            let mut block = IntMatrix::zeros(orders.len(), 0);
            if d - 2 >= m.d_min {
                for i in 0..m.n {
                    block = block.hstack(&m.action(i, d - 2).unwrap());
                }
            }
            cokernel_group(&block, &orders)
                .expect("cokernel")
                .presentation()
                .clone()
        })
        .collect();
    GradedAbelianGroup::new(m.d_min, groups)
}

/// One ambient generator of `N ⊗ A` in some degree.
#[derive(Clone, Debug)]
struct ExtendedGen {
    source_degree: i64,
    generator: usize,
    exps: Exponents,
    order: BigInt,
}

fn extended_basis(nn: &GradedAbelianGroup, n: usize, d: i64) -> Vec<ExtendedGen> {
    let mut out = Vec::new();
    for (e, g) in nn.iter() {
        let rest = d - e;
        if rest < 0 || rest % 2 != 0 {
            continue;
        }
        let monos = monomials_of_degree(n, (rest / 2) as u32);
        for (k, order) in g.orders().into_iter().enumerate() {
            for mu in &monos {
                out.push(ExtendedGen {
                    source_degree: e,
                    generator: k,
                    exps: mu.clone(),
                    order: order.clone(),
                });
            }
        }
    }
    out
}

/// The extended module `N ⊗ A`, truncated at `min(d_max, N.d_max)`.
pub fn extended(nn: &GradedAbelianGroup, n: usize, d_max: i64) -> GradedModule {
    let d_min = nn.d_min();
    let hi = d_max.min(nn.d_max());
    let bases: Vec<Vec<ExtendedGen>> = (d_min..=hi).map(|d| extended_basis(nn, n, d)).collect();
    let index: Vec<HashMap<(i64, usize, Exponents), usize>> = bases
        .iter()
        .map(|b| {
            b.iter()
                .enumerate()
                .map(|(k, g)| ((g.source_degree, g.generator, g.exps.clone()), k))
                .collect()
        })
        .collect();
    let pieces: Vec<Subquotient> = bases
        .iter()
        .map(|b| {
            let orders: Vec<BigInt> = b.iter().map(|g| g.order.clone()).collect();
            Subquotient::new(b.len(), &IntMatrix::identity(b.len()), &relation_columns(&orders))
                .expect("extended piece")
        })
        .collect();
    GradedModule::from_subquotients(n, d_min, &pieces, |d, i| {
        let k = (d - d_min) as usize;
        let mut m = IntMatrix::zeros(bases[k + 2].len(), bases[k].len());
        for (j, g) in bases[k].iter().enumerate() {
            let mut e = g.exps.clone();
            e[i] += 1;
            let row = index[k + 2][&(g.source_degree, g.generator, e)];
            m.set(row, j, BigInt::one());
        }
        m
    })
    .expect("extended module")
}

/// `M[+a]`: the same module with every degree raised by `a`.
pub fn shift(m: &GradedModule, a: i64) -> GradedModule {
    GradedModule {
        d_min: m.d_min + a,
        d_max: m.d_max + a,
        ..m.clone()
    }
}

pub fn direct_sum(m1: &GradedModule, m2: &GradedModule) -> Result<GradedModule, GrModError> {
    if m1.n != m2.n {
        return Err(GrModError::VariableMismatch(m1.n, m2.n));
    }
    let d_min = m1.d_min.min(m2.d_min);
    let d_max = m1.d_max.min(m2.d_max);
    let orders = |d: i64| {
        let mut o = m1.orders(d);
        o.extend(m2.orders(d));
        o
    };
    let pieces: Vec<Subquotient> = (d_min..=d_max)
        .map(|d| {
            let o = orders(d);
            Subquotient::new(o.len(), &IntMatrix::identity(o.len()), &relation_columns(&o))
        })
        .collect::<Result<_, _>>()?;
    Ok(GradedModule::from_subquotients(m1.n, d_min, &pieces, |d, i| {
        let a = m1.action(i, d).unwrap();
        let b = m2.action(i, d).unwrap();
        let mut blk = IntMatrix::zeros(a.rows() + b.rows(), a.cols() + b.cols());
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                blk.set(r, c, a.get(r, c).clone());
            }
        }
        for r in 0..b.rows() {
            for c in 0..b.cols() {
                blk.set(a.rows() + r, a.cols() + c, b.get(r, c).clone());
            }
        }
        blk
    })?)
}

/// Data exhibiting `M ≅ N ⊗ A` on the window.
#[derive(Clone, Debug, Serialize)]
pub struct ExtendedWitness {
    /// `N = M ⊗_A Z`.
    pub base: GradedAbelianGroup,
    /// For each degree `e` with `N_e ≠ 0`: columns are the chosen lifts of
    /// the generators of `N_e`, in the presentation coordinates of `M_e`.
    pub lifts: Vec<(i64, IntMatrix)>,
}

#[derive(Clone, Debug)]
pub enum WitnessResult {
    Yes(ExtendedWitness),
    No { degree: i64, reason: String },
    Unknown(String),
}

impl WitnessResult {
    pub fn verdict(&self) -> &'static str {
        match self {
            WitnessResult::Yes(_) => "yes",
            WitnessResult::No { .. } => "no",
            WitnessResult::Unknown(_) => "unknown",
        }
    }
}

/// Decides, on the window, whether `M` is extended. A `No` answer is
/// certified by a degree in which no extended module can match; a `Yes`
/// answer carries lifts whose induced map `N ⊗ A -> M` is checked to be an
/// isomorphism in every degree of the window.
pub fn try_extended_witness(m: &GradedModule) -> WitnessResult {
    let (lo, hi) = m.window();
    if hi < lo {
        return WitnessResult::Unknown("empty window".into());
    }
    let nn = tensor_with_z(m);
    let ext = extended(&nn, m.n, hi);
    for d in lo..=hi {
        if ext.group(d) != m.group(d) {
            return WitnessResult::No {
                degree: d,
                reason: format!(
                    "(M ⊗ Z) ⊗ A has {} in degree {d} but M has {}",
                    ext.group(d).unwrap(),
                    m.group(d).unwrap()
                ),
            };
        }
    }

    // Choose lifts of the generators of N_e = M_e / (t M)_e that split the
    // projection: torsion generators need lifts of matching order.
    let mut lifts: HashMap<i64, Vec<Vec<BigInt>>> = HashMap::new();
    for e in lo..=hi {
        let orders = m.orders(e);
        let mut image = IntMatrix::zeros(orders.len(), 0);
        if e - 2 >= lo {
            for i in 0..m.n {
                image = image.hstack(&m.action(i, e - 2).unwrap());
            }
        }
        let quotient = match cokernel_group(&image, &orders) {
            Ok(q) => q,
            Err(err) => return WitnessResult::Unknown(err.to_string()),
        };
        let mut chosen = Vec::new();
        for g in 0..quotient.num_generators() {
            let x0 = quotient.lift(g).to_vec();
            let order = &quotient.orders()[g];
            let x = if order.is_zero() {
                x0
            } else {
                // solve order * (x0 + image * c) ≡ 0 modulo the relations of M_e
                let system = image.scale(order).hstack(&relation_columns(&orders));
                let rhs: Vec<BigInt> = x0.iter().map(|v| -(v * order)).collect();
                match solve(&system, &rhs) {
                    Some(sol) => {
                        let c = &sol[..image.cols()];
                        let shift = image.mul_vec(c);
                        x0.iter().zip(shift).map(|(a, b)| a + b).collect()
                    }
                    None => {
                        return WitnessResult::No {
                            degree: e,
                            reason: format!(
                                "no element of order {order} lifts a generator of M ⊗ Z in degree {e}"
                            ),
                        }
                    }
                }
            };
            let mut x = x;
            reduce_mod_orders(&mut x, &orders);
            chosen.push(x);
        }
        lifts.insert(e, chosen);
    }

    // Check the induced map N ⊗ A -> M degreewise.
    for d in lo..=hi {
        let basis = extended_basis(&nn, m.n, d);
        let tgt_orders = m.orders(d);
        let mut cols = Vec::with_capacity(basis.len());
        for g in &basis {
            let mut v = lifts[&g.source_degree][g.generator].clone();
            let mut deg = g.source_degree;
            for (i, &k) in g.exps.iter().enumerate() {
                for _ in 0..k {
                    v = m.action(i, deg).unwrap().mul_vec(&v);
                    deg += 2;
                    reduce_mod_orders(&mut v, &m.orders(deg));
                }
            }
            cols.push(v);
        }
        let phi = IntMatrix::from_columns(tgt_orders.len(), &cols);
        let src_orders: Vec<BigInt> = basis.iter().map(|g| g.order.clone()).collect();
        let injective = kernel_group(&phi, &src_orders, &tgt_orders)
            .map(|k| k.presentation().is_trivial())
            .unwrap_or(false);
        let surjective = cokernel_group(&phi, &tgt_orders)
            .map(|c| c.presentation().is_trivial())
            .unwrap_or(false);
        if !(injective && surjective) {
            return WitnessResult::Unknown(format!(
                "chosen lifts do not induce an isomorphism in degree {d}"
            ));
        }
    }
    let mut lift_list: Vec<(i64, IntMatrix)> = lifts
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(e, v)| (e, IntMatrix::from_columns(m.num_generators(e), &v)))
        .collect();
    lift_list.sort_by_key(|(e, _)| *e);
    WitnessResult::Yes(ExtendedWitness {
        base: nn,
        lifts: lift_list,
    })
}

/// Candidate forms for the annihilator probe: coordinate forms first, then
/// every other primitive form with coefficients in `-bound..=bound`, one
/// per sign class.
pub fn candidate_forms(n: usize, bound: i64) -> Vec<LinearForm> {
    let mut out: Vec<LinearForm> = (0..n).map(|i| LinearForm::coordinate(n, i)).collect();
    let width = (2 * bound + 1) as usize;
    let total = width.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push((c % width) as i64 - bound);
            c /= width;
        }
        let first = v.iter().find(|&&x| x != 0);
        if first.is_none_or(|&x| x < 0) {
            continue;
        }
        let f = LinearForm::from_i64(&v);
        if !out.contains(&f) && f.is_primitive() {
            out.push(f);
        }
    }
    out
}

/// The default probe set: primitive forms with coefficients in {-1, 0, 1}.
pub fn default_candidates(n: usize) -> Vec<LinearForm> {
    candidate_forms(n, 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeHit {
    pub form: String,
    pub degree: i64,
    /// Presentation coordinates of a nonzero `m` in degree `degree` with
    /// `form · m = 0`.
    pub element: Vec<String>,
}

/// Searches for a nonzero `m` and a candidate primitive form `t` with
/// `t · m = 0` inside the window.
pub fn linear_annihilator_probe(
    m: &GradedModule,
    candidates: &[LinearForm],
) -> Result<Option<ProbeHit>, GrModError> {
    for form in candidates {
        if form.n() != m.n {
            return Err(GrModError::VariableMismatch(form.n(), m.n));
        }
        if !form.is_primitive() {
            return Err(GrModError::NotPrimitive(form.to_string()));
        }
    }
    for form in candidates {
        for d in m.d_min..=m.d_max - 2 {
            let mult = m.mult_by_form(form, d).unwrap();
            let src = m.orders(d);
            let k = kernel_group(&mult, &src, &m.orders(d + 2))?;
            if k.num_generators() > 0 {
                let mut el = k.lift(0).to_vec();
                reduce_mod_orders(&mut el, &src);
                return Ok(Some(ProbeHit {
                    form: form.to_string(),
                    degree: d,
                    element: el.iter().map(ToString::to_string).collect(),
                }));
            }
        }
    }
    Ok(None)
}

impl Serialize for GradedModule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Degree<'a> {
            degree: i64,
            group: &'a AbelianPresentation,
            actions: &'a [IntMatrix],
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            n: usize,
            d_min: i64,
            d_max: i64,
            degrees: Vec<Degree<'a>>,
        }
        Repr {
            n: self.n,
            d_min: self.d_min,
            d_max: self.d_max,
            degrees: self
                .groups
                .iter()
                .zip(&self.actions)
                .enumerate()
                .map(|(k, (g, a))| Degree {
                    degree: self.d_min + k as i64,
                    group: g,
                    actions: a,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GradedModule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Degree {
            degree: i64,
            group: AbelianPresentation,
            actions: Vec<IntMatrix>,
        }
        #[derive(Deserialize)]
        struct Repr {
            n: usize,
            d_min: i64,
            d_max: i64,
            degrees: Vec<Degree>,
        }
        let r = Repr::deserialize(d)?;
        if r.d_max - r.d_min + 1 != r.degrees.len() as i64 {
            return Err(de::Error::custom("window does not match degree list"));
        }
        for (k, deg) in r.degrees.iter().enumerate() {
            if deg.degree != r.d_min + k as i64 {
                return Err(de::Error::custom("degrees must be consecutive"));
            }
        }
        let (groups, actions) = r.degrees.into_iter().map(|d| (d.group, d.actions)).unzip();
        GradedModule::from_parts(r.n, r.d_min, groups, actions).map_err(de::Error::custom)
    }
}

impl GradedModule {
    /// Re-canonicalised copy built from this module's own data; used to
    /// normalise modules assembled elsewhere.
    pub fn recanonicalize(&self) -> GradedModule {
        let pieces = self.canonical_pieces();
        GradedModule::from_subquotients(self.n, self.d_min, &pieces, |d, i| {
            self.action(i, d).unwrap()
        })
        .expect("canonical module")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> AbelianPresentation {
        AbelianPresentation::free(1)
    }

    fn zn(k: usize) -> AbelianPresentation {
        AbelianPresentation::free(k)
    }

    fn tors(m: i64) -> AbelianPresentation {
        AbelianPresentation {
            free_rank: 0,
            torsion: vec![BigInt::from(m)],
        }
    }

    fn zero() -> AbelianPresentation {
        AbelianPresentation::trivial()
    }

    fn t(s: &str, n: usize) -> Poly {
        Poly::parse(s, n, 't').unwrap()
    }

    #[test]
    fn presentation_examples() {
        let a = free_module(1, 6);
        let ranks: Vec<usize> = (0..=6).map(|d| a.group(d).unwrap().free_rank).collect();
        assert_eq!(ranks, vec![1, 0, 1, 0, 1, 0, 1]);

        let m = from_presentation(1, &[0], &[vec![t("t1", 1)]], 6).unwrap();
        assert_eq!(m.group(0), Some(&z()));
        assert!((1..=6).all(|d| m.group(d).unwrap().is_trivial()));

        let m = from_presentation(1, &[0], &[vec![t("2*t1", 1)]], 6).unwrap();
        let g: Vec<_> = (0..=6).map(|d| m.group(d).unwrap().clone()).collect();
        assert_eq!(g, vec![z(), zero(), tors(2), zero(), tors(2), zero(), tors(2)]);
        m.check_invariants().unwrap();
    }

    #[test]
    fn inhomogeneous_relation_rejected() {
        let err = from_presentation(1, &[0], &[vec![t("t1 + 1", 1)]], 4).unwrap_err();
        assert_eq!(err, GrModError::InhomogeneousRelation(0));
        let err = from_presentation(2, &[0, 2], &[vec![t("t1", 2), t("t1", 2)]], 4).unwrap_err();
        assert_eq!(err, GrModError::InhomogeneousRelation(0));
    }

    #[test]
    fn tensor_examples() {
        let a = free_module(1, 8);
        let n = tensor_with_z(&a);
        assert_eq!(n.get(0), Some(&z()));
        assert!((1..=8).all(|d| n.get(d).unwrap().is_trivial()));

        // t * 1 generates every positive degree of Z[t]/(2t), so only the
        // degree-0 class survives.
        let m = from_presentation(1, &[0], &[vec![t("2*t1", 1)]], 8).unwrap();
        let n = tensor_with_z(&m);
        assert_eq!(n.get(0), Some(&z()));
        assert!((1..=8).all(|d| n.get(d).unwrap().is_trivial()));
    }

    #[test]
    fn tensor_of_ker_eps_eps() {
        // ker(eps, eps) ⊂ A ⊕ A, presented as generators (1,1) in degree 0
        // and (0, t_i) in degree 2 with the Koszul relations among them.
        let n = 2;
        let rels = vec![vec![Poly::zero(n), t("t2", n), t("-t1", n)]];
        let m = from_presentation(n, &[0, 2, 2], &rels, 8).unwrap();
        let nn = tensor_with_z(&m);
        assert_eq!(nn.get(0), Some(&z()));
        assert_eq!(nn.get(2), Some(&zn(2)));
        assert!(nn.get(4).unwrap().is_trivial());
    }

    #[test]
    fn extended_examples() {
        let nz = GradedAbelianGroup::new(0, vec![z()]);
        assert_eq!(extended(&nz, 1, 6), free_module(1, 6).truncate(0));

        let n2 = GradedAbelianGroup::new(0, vec![zero(), zero(), tors(2), zero(), zero(), zero()]);
        let e = extended(&n2, 1, 5);
        let g: Vec<_> = (0..=5).map(|d| e.group(d).unwrap().clone()).collect();
        assert_eq!(g, vec![zero(), zero(), tors(2), zero(), tors(2), zero()]);

        let nn = GradedAbelianGroup::new(0, vec![z(), zero(), z(), zero(), zero(), zero(), zero()]);
        let e = extended(&nn, 1, 6);
        let expect =
            direct_sum(&free_module(1, 6), &shift(&free_module(1, 4), 2)).unwrap();
        assert_eq!(e.underlying(), expect.underlying());
    }

    #[test]
    fn shift_and_sum() {
        let a = free_module(2, 6);
        let s = shift(&a, 2);
        assert_eq!(s.group(2), Some(&z()));
        assert!(s.group(0).unwrap().is_trivial());
        assert_eq!(shift(&s, -2), a);
        let aa = direct_sum(&a, &a).unwrap();
        assert_eq!(aa.group(4).unwrap().free_rank, 6);
        assert!(direct_sum(&a, &free_module(1, 6)).is_err());
    }

    #[test]
    fn witness_examples() {
        let m = direct_sum(&free_module(1, 8), &shift(&free_module(1, 6), 2)).unwrap();
        assert!(matches!(try_extended_witness(&m), WitnessResult::Yes(_)));
        // Z[t]/(2t) ⊗ Z = Z, and A differs from it in degree 2.
        let m = from_presentation(1, &[0], &[vec![t("2*t1", 1)]], 8).unwrap();
        assert!(matches!(try_extended_witness(&m), WitnessResult::No { .. }));
        // Z/2 ⊗ A is extended.
        let m = from_presentation(1, &[0], &[vec![t("2", 1)]], 8).unwrap();
        assert!(matches!(try_extended_witness(&m), WitnessResult::Yes(_)));
    }

    #[test]
    fn probe_examples() {
        let a = free_module(1, 6);
        assert_eq!(linear_annihilator_probe(&a, &default_candidates(1)).unwrap(), None);
        let triv = trivial_module(1, 4);
        let hit = linear_annihilator_probe(&triv, &[LinearForm::coordinate(1, 0)])
            .unwrap()
            .unwrap();
        assert_eq!((hit.form.as_str(), hit.degree), ("t1", 0));
        assert_eq!(hit.element, vec!["1".to_string()]);
        let bad = linear_annihilator_probe(&a, &[LinearForm::from_i64(&[2])]);
        assert!(matches!(bad, Err(GrModError::NotPrimitive(_))));
    }

    #[test]
    fn candidate_sets() {
        let c = default_candidates(2);
        let strs: Vec<String> = c.iter().map(ToString::to_string).collect();
        assert_eq!(strs, vec!["t1", "t2", "t1 - t2", "t1 + t2"]);
        assert!(candidate_forms(2, 2).len() > c.len());
    }

    #[test]
    fn json_roundtrip() {
        let m = from_presentation(2, &[0, 2], &[vec![t("2*t1", 2), t("-2", 2)]], 6).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: GradedModule = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let g = m.underlying();
        let back: GradedAbelianGroup =
            serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
