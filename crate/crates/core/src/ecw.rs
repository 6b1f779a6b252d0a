//! Cellular cochain model of a finite torus-CW complex and its equivariant
//! cohomology.
//!
//! Every cell `c` carries the coefficient ring `A/I_c`, where `I_c` is
//! generated by the rows of its isotropy matrix `V` (read as linear forms)
//! and by `m·ℓ` for each cyclic relation `(m, ℓ)`. Completing the stacked
//! rows to a unimodular matrix `P` gives coordinates `u = P t` in which
//! `A/I_c = Z[u_{r+1}, ..., u_n] / (m_k u_{r+k})`; the monomials in the
//! surviving variables, each with its additive order, form the cochain
//! basis of the cell. Cochains of total degree `k` on `c` live in
//! `(A/I_c)_{k - j_c}`.
//!
//! `A/I_c` is the cohomology of `B T_c` only when `T_c` has at most one
//! cyclic factor. With several factors the model switches to resolved
//! coefficients: a cell with factors `(m_1, ℓ_1), ..., (m_q, ℓ_q)` becomes
//! the Koszul complex `A/(V_c) ⊗ Λ(e_1, ..., e_q)`, `d e_k = m_k ℓ_k`, one
//! internal cell per subset of factors. Entries are lifted along matching
//! factors with sign `(-1)^{|S|}`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::grmod::GradedModule;
use crate::intlinalg::{
    complete_to_unimodular, induced_map, inverse_unimodular, is_direct_summand, IntMatrix,
    LinalgError, Subquotient,
};
use crate::polyring::{monomials_of_degree, Exponents, Poly, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EcwError {
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("complex fails validation: {0}")]
    Invalid(ValidationReport),
    #[error("bad filtration indices ({0}, {1}] for n = {2}")]
    BadIndices(i64, i64, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> EcwError {
    EcwError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Isotropy data of a cell: the sublattice `V` of linear forms and cyclic
/// relations `(m, ℓ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isotropy {
    pub v: IntMatrix,
    pub torsion: Vec<(BigInt, Vec<BigInt>)>,
}

impl Isotropy {
    pub fn fixed(n: usize) -> Self {
        Isotropy {
            v: IntMatrix::zeros(0, n),
            torsion: Vec::new(),
        }
    }

    pub fn free(n: usize) -> Self {
        Isotropy {
            v: IntMatrix::identity(n),
            torsion: Vec::new(),
        }
    }

    pub fn orbit_dim(&self) -> usize {
        self.v.rows() + self.torsion.len()
    }

    pub fn is_connected(&self) -> bool {
        self.torsion.is_empty()
    }

    /// `V` stacked over the `ℓ` rows.
    pub fn stacked(&self) -> IntMatrix {
        let extra: Vec<Vec<BigInt>> = self.torsion.iter().map(|(_, l)| l.clone()).collect();
        if extra.is_empty() {
            return self.v.clone();
        }
        self.v.vstack(&IntMatrix::from_rows(&extra))
    }

    /// The linear generators of `I_c`: the rows of `V` and each `m·ℓ`.
    pub fn linear_generators(&self) -> Vec<Vec<BigInt>> {
        let mut out = self.v.to_rows();
        for (m, l) in &self.torsion {
            out.push(l.iter().map(|x| x * m).collect());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub id: String,
    pub disc_dim: u32,
    pub iso: Isotropy,
}

/// A differential entry `from -> to` with polynomial coefficient. The
/// original coefficient text is kept so that serialisation round-trips.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub from: String,
    pub to: String,
    pub coeff: Poly,
    text: String,
}

impl Entry {
    pub fn new(from: impl Into<String>, to: impl Into<String>, coeff: Poly) -> Self {
        let text = coeff.to_string();
        Entry {
            from: from.into(),
            to: to.into(),
            coeff,
            text,
        }
    }

    pub fn parse(
        from: impl Into<String>,
        to: impl Into<String>,
        text: &str,
        n: usize,
    ) -> Result<Self, PolyError> {
        Ok(Entry {
            from: from.into(),
            to: to.into(),
            coeff: Poly::parse(text, n, 't')?,
            text: text.to_string(),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivariantCW {
    pub n: usize,
    pub cells: Vec<Cell>,
    pub differential: Vec<Entry>,
}

fn int_value(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn parse_int(v: &Value, ptr: &str) -> Result<BigInt, EcwError> {
    match v {
        Value::Number(num) => num
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| schema(ptr, "expected an integer")),
        Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|_| schema(ptr, "expected an integer")),
        _ => Err(schema(ptr, "expected an integer")),
    }
}

fn parse_int_row(v: &Value, ptr: &str, n: usize) -> Result<Vec<BigInt>, EcwError> {
    let arr = v.as_array().ok_or_else(|| schema(ptr, "expected an array"))?;
    if arr.len() != n {
        return Err(schema(ptr, format!("expected {n} entries, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| parse_int(x, &format!("{ptr}/{i}")))
        .collect()
}

fn field<'a>(obj: &'a Value, key: &str, ptr: &str) -> Result<&'a Value, EcwError> {
    obj.get(key)
        .ok_or_else(|| schema(ptr, format!("missing field \"{key}\"")))
}

impl EquivariantCW {
    pub fn cell_index(&self, id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.id == id)
    }

    pub fn cell(&self, id: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.id == id)
    }

    pub fn is_connected(&self) -> bool {
        self.cells.iter().all(|c| c.iso.is_connected())
    }

    pub fn from_json_str(text: &str) -> Result<Self, EcwError> {
        let v: Value = serde_json::from_str(text).map_err(|e| schema("", e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, EcwError> {
        if !v.is_object() {
            return Err(schema("", "expected an object"));
        }
        let n = field(v, "n", "")?
            .as_u64()
            .ok_or_else(|| schema("/n", "expected a non-negative integer"))? as usize;
        let cells_v = field(v, "cells", "")?
            .as_array()
            .ok_or_else(|| schema("/cells", "expected an array"))?;
        let mut cells = Vec::with_capacity(cells_v.len());
        for (i, c) in cells_v.iter().enumerate() {
            let ptr = format!("/cells/{i}");
            if !c.is_object() {
                return Err(schema(ptr, "expected an object"));
            }
            let id = field(c, "id", &ptr)?
                .as_str()
                .ok_or_else(|| schema(format!("{ptr}/id"), "expected a string"))?
                .to_string();
            let disc_dim = field(c, "disc_dim", &ptr)?
                .as_u64()
                .ok_or_else(|| schema(format!("{ptr}/disc_dim"), "expected a non-negative integer"))?
                as u32;
            let mut rows = Vec::new();
            if let Some(vv) = c.get("V") {
                let arr = vv
                    .as_array()
                    .ok_or_else(|| schema(format!("{ptr}/V"), "expected an array"))?;
                for (r, row) in arr.iter().enumerate() {
                    rows.push(parse_int_row(row, &format!("{ptr}/V/{r}"), n)?);
                }
            }
            let mut torsion = Vec::new();
            if let Some(tv) = c.get("torsion") {
                let arr = tv
                    .as_array()
                    .ok_or_else(|| schema(format!("{ptr}/torsion"), "expected an array"))?;
                for (k, pair) in arr.iter().enumerate() {
                    let tp = format!("{ptr}/torsion/{k}");
                    let pa = pair
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or_else(|| schema(tp.clone(), "expected [m, [coefficients]]"))?;
                    let m = parse_int(&pa[0], &format!("{tp}/0"))?;
                    let l = parse_int_row(&pa[1], &format!("{tp}/1"), n)?;
                    torsion.push((m, l));
                }
            }
            let v = IntMatrix::from_rows_with_cols(&rows, n)
                .map_err(|e| schema(format!("{ptr}/V"), e.to_string()))?;
            cells.push(Cell {
                id,
                disc_dim,
                iso: Isotropy { v, torsion },
            });
        }
        let mut differential = Vec::new();
        if let Some(dv) = v.get("differential") {
            let arr = dv
                .as_array()
                .ok_or_else(|| schema("/differential", "expected an array"))?;
            for (k, e) in arr.iter().enumerate() {
                let ptr = format!("/differential/{k}");
                let get_str = |key: &str| -> Result<&str, EcwError> {
                    field(e, key, &ptr)?
                        .as_str()
                        .ok_or_else(|| schema(format!("{ptr}/{key}"), "expected a string"))
                };
                let coeff_text = match field(e, "coeff", &ptr)? {
                    Value::String(s) => s.clone(),
                    Value::Number(num) if num.is_i64() => num.to_string(),
                    _ => return Err(schema(format!("{ptr}/coeff"), "expected a polynomial string")),
                };
                let entry = Entry::parse(get_str("from")?, get_str("to")?, &coeff_text, n)
                    .map_err(|err| schema(format!("{ptr}/coeff"), err.to_string()))?;
                differential.push(entry);
            }
        }
        Ok(EquivariantCW {
            n,
            cells,
            differential,
        })
    }

    pub fn to_value(&self) -> Value {
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                let v: Vec<Value> = c
                    .iso
                    .v
                    .to_rows()
                    .iter()
                    .map(|r| Value::Array(r.iter().map(int_value).collect()))
                    .collect();
                let t: Vec<Value> = c
                    .iso
                    .torsion
                    .iter()
                    .map(|(m, l)| json!([int_value(m), l.iter().map(int_value).collect::<Vec<_>>()]))
                    .collect();
                json!({"id": c.id, "disc_dim": c.disc_dim, "V": v, "torsion": t})
            })
            .collect();
        let diff: Vec<Value> = self
            .differential
            .iter()
            .map(|e| json!({"from": e.from, "to": e.to, "coeff": e.text}))
            .collect();
        json!({"n": self.n, "cells": cells, "differential": diff})
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serialisable")
    }
}

/// The coefficient ring `A/I_c` of one cell in normal-form coordinates.
#[derive(Clone, Debug)]
pub struct CoeffBasis {
    n: usize,
    /// Number of rows of `V`: the variables `u_1..u_r` vanish.
    r: usize,
    /// Orders `m_k` of the variables `u_{r+1}, ...`.
    tors: Vec<BigInt>,
    /// `t_j` as a linear polynomial in `u`.
    t_in_u: Vec<Poly>,
    /// `u_k` as a linear polynomial in `t`.
    u_in_t: Vec<Poly>,
    /// Linear part of `I_c` (generator rows, in `t` coordinates).
    ideal: IntMatrix,
}

impl CoeffBasis {
    /// `None` when the stacked isotropy rows are not a direct summand.
    pub fn new(iso: &Isotropy, n: usize) -> Option<Self> {
        let s = iso.stacked();
        let p = complete_to_unimodular(&s)?;
        let p_inv = inverse_unimodular(&p)?;
        let t_in_u = (0..n).map(|j| Poly::linear(p_inv.row(j))).collect();
        let u_in_t = (0..n).map(|k| Poly::linear(p.row(k))).collect();
        let gens = iso.linear_generators();
        Some(CoeffBasis {
            n,
            r: iso.v.rows(),
            tors: iso.torsion.iter().map(|(m, _)| m.clone()).collect(),
            t_in_u,
            u_in_t,
            ideal: IntMatrix::from_rows_with_cols(&gens, n).expect("generator rows"),
        })
    }

    /// Additive order of a `u`-monomial: 0 for free, 1 when it vanishes.
    pub fn order_of(&self, exps: &[u32]) -> BigInt {
        if exps[..self.r].iter().any(|&e| e > 0) {
            return BigInt::one();
        }
        let mut g = BigInt::zero();
        for (k, m) in self.tors.iter().enumerate() {
            if exps[self.r + k] > 0 {
                g = g.gcd(m);
            }
        }
        g
    }

    /// Basis of `(A/I_c)` in polynomial degree `e`: `u`-monomials with their
    /// orders (order-1 monomials omitted).
    pub fn basis(&self, e: u32) -> Vec<(Exponents, BigInt)> {
        let mut out = Vec::new();
        for tail in monomials_of_degree(self.n - self.r, e) {
            let mut exps = vec![0u32; self.r];
            exps.extend(tail);
            let o = self.order_of(&exps);
            if !o.is_one() {
                out.push((exps, o));
            }
        }
        out
    }

    pub fn to_u(&self, f: &Poly) -> Poly {
        f.substitute(&self.t_in_u, self.n)
    }

    pub fn to_t(&self, g: &Poly) -> Poly {
        g.substitute(&self.u_in_t, self.n)
    }

    /// Normal form of a polynomial in `u`: terms in the ideal are dropped
    /// and torsion coefficients reduced.
    pub fn reduce_u(&self, g: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (exps, c) in g.terms() {
            let o = self.order_of(exps);
            if o.is_one() {
                continue;
            }
            let c = if o.is_zero() { c.clone() } else { c.mod_floor(&o) };
            if !c.is_zero() {
                out.add_term(exps.clone(), c);
            }
        }
        out
    }

    /// Normal form (in `u`) of a polynomial in `t`.
    pub fn normal_form(&self, f: &Poly) -> Poly {
        self.reduce_u(&self.to_u(f))
    }

    /// True iff the linear form `v` lies in `I_c`.
    pub fn contains_linear(&self, v: &[BigInt]) -> bool {
        if self.ideal.rows() == 0 {
            return v.iter().all(Zero::is_zero);
        }
        crate::intlinalg::solve(&self.ideal.transpose(), v).is_some()
    }

    /// `I_other ⊆ I_self`.
    pub fn contains_ideal_of(&self, other: &Isotropy) -> bool {
        other
            .linear_generators()
            .iter()
            .all(|g| self.contains_linear(g))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Schema,
    Isotropy,
    Degree,
    Containment,
    DSquared,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, location: String, kind: ViolationKind, message: String) {
        self.violations.push(Violation {
            location,
            kind,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let lines: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.location, v.message))
            .collect();
        write!(f, "{}", lines.join("; "))
    }
}

/// Checks isotropy lattices, coefficient degrees, containment of isotropy
/// ideals along nonzero entries, and `d² = 0`.
pub fn validate(e: &EquivariantCW) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = e.n;
    let mut seen = HashSet::new();
    for (i, c) in e.cells.iter().enumerate() {
        if !seen.insert(c.id.as_str()) {
            rep.push(
                format!("/cells/{i}/id"),
                ViolationKind::Schema,
                format!("duplicate cell id \"{}\"", c.id),
            );
        }
    }
    let mut rings: Vec<Option<CoeffBasis>> = Vec::with_capacity(e.cells.len());
    for (i, c) in e.cells.iter().enumerate() {
        let ptr = format!("/cells/{i}");
        let mut ok = true;
        if c.iso.v.cols() != n {
            rep.push(format!("{ptr}/V"), ViolationKind::Schema, format!("rows must have {n} entries"));
            ok = false;
        }
        for (k, (m, l)) in c.iso.torsion.iter().enumerate() {
            if l.len() != n {
                rep.push(
                    format!("{ptr}/torsion/{k}/1"),
                    ViolationKind::Schema,
                    format!("form must have {n} entries"),
                );
                ok = false;
            }
            if *m < BigInt::from(2) {
                rep.push(
                    format!("{ptr}/torsion/{k}/0"),
                    ViolationKind::Isotropy,
                    "cyclic order must be at least 2".into(),
                );
                ok = false;
            }
        }
        if ok && !is_direct_summand(&c.iso.v) {
            rep.push(
                format!("{ptr}/V"),
                ViolationKind::Isotropy,
                "rows of V are not a basis of a direct summand".into(),
            );
            ok = false;
        }
        if ok && !is_direct_summand(&c.iso.stacked()) {
            rep.push(
                format!("{ptr}/torsion"),
                ViolationKind::Isotropy,
                "V together with the cyclic forms is not part of a basis".into(),
            );
            ok = false;
        }
        rings.push(if ok { CoeffBasis::new(&c.iso, n) } else { None });
    }

    let mut pairs = HashSet::new();
    for (k, ent) in e.differential.iter().enumerate() {
        let ptr = format!("/differential/{k}");
        let src = e.cell_index(&ent.from);
        let tgt = e.cell_index(&ent.to);
        if src.is_none() {
            rep.push(format!("{ptr}/from"), ViolationKind::Schema, format!("unknown cell \"{}\"", ent.from));
        }
        if tgt.is_none() {
            rep.push(format!("{ptr}/to"), ViolationKind::Schema, format!("unknown cell \"{}\"", ent.to));
        }
        let (Some(s), Some(t)) = (src, tgt) else { continue };
        if !pairs.insert((s, t)) {
            rep.push(ptr.clone(), ViolationKind::Schema, format!("duplicate entry {} -> {}", ent.from, ent.to));
        }
        if ent.coeff.nvars() != n {
            rep.push(format!("{ptr}/coeff"), ViolationKind::Schema, format!("coefficient must use {n} variables"));
            continue;
        }
        if ent.coeff.is_zero() {
            continue;
        }
        let want = 1 + e.cells[s].disc_dim as i64 - e.cells[t].disc_dim as i64;
        match ent.coeff.cohomological_degree() {
            Some(d) if d == want => {}
            Some(d) => rep.push(
                format!("{ptr}/coeff"),
                ViolationKind::Degree,
                format!("coefficient has degree {d}, expected 1 + {} - {} = {want}", e.cells[s].disc_dim, e.cells[t].disc_dim),
            ),
            None => rep.push(
                format!("{ptr}/coeff"),
                ViolationKind::Degree,
                "coefficient is not homogeneous".into(),
            ),
        }
        if let Some(rt) = &rings[t] {
            if !rt.normal_form(&ent.coeff).is_zero() && !rt.contains_ideal_of(&e.cells[s].iso) {
                rep.push(
                    ptr.clone(),
                    ViolationKind::Containment,
                    format!("isotropy ideal of {} is not contained in that of {}", ent.from, ent.to),
                );
            }
        }
    }
    if !rep.is_ok() || rings.iter().any(Option::is_none) {
        return rep;
    }

    // d² = 0: for every pair (c, c''), Σ f₂·f₁ vanishes in A/I_{c''}.
    let mut out: Vec<Vec<(usize, &Poly)>> = vec![Vec::new(); e.cells.len()];
    for ent in &e.differential {
        if !ent.coeff.is_zero() {
            out[e.cell_index(&ent.from).unwrap()].push((e.cell_index(&ent.to).unwrap(), &ent.coeff));
        }
    }
    for (c, edges) in out.iter().enumerate() {
        let mut sums: BTreeMap<usize, Poly> = BTreeMap::new();
        for &(mid, f1) in edges {
            for &(end, f2) in &out[mid] {
                let acc = sums.entry(end).or_insert_with(|| Poly::zero(n));
                *acc = &*acc + &(f2 * f1);
            }
        }
        for (end, total) in sums {
            if !rings[end].as_ref().unwrap().normal_form(&total).is_zero() {
                rep.push(
                    format!("/cells/{c}"),
                    ViolationKind::DSquared,
                    format!("d² from {} to {} is {}", e.cells[c].id, e.cells[end].id, total),
                );
            }
        }
    }
    rep
}

/// Orbit dimension of every cell, in cell order.
pub fn skeleton_dims(e: &EquivariantCW) -> Vec<usize> {
    e.cells.iter().map(|c| c.iso.orbit_dim()).collect()
}

#[derive(Clone, Debug)]
struct Block {
    offset: usize,
    basis: Vec<(Exponents, BigInt)>,
    index: HashMap<Exponents, usize>,
    /// Each basis monomial as a polynomial in `t`.
    lifts: Vec<Poly>,
}

/// The assembled cochain complex of a validated complex in degrees
/// `0..=top`.
#[derive(Clone, Debug)]
pub struct CochainModel {
    n: usize,
    top: i64,
    resolved: bool,
    levels: Vec<usize>,
    disc: Vec<u32>,
    rings: Vec<CoeffBasis>,
    /// `blocks[k][c]` for cochain degree `k`.
    blocks: Vec<Vec<Option<Block>>>,
    sizes: Vec<usize>,
    orders: Vec<Vec<BigInt>>,
    /// `diff[k]: C^k -> C^{k+1}` for `k < top`.
    diff: Vec<IntMatrix>,
}

/// A set of cells closed under the filtration interval `(lo, hi]`.
pub type CellMask = Vec<bool>;

/// Coefficient model for torsion cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficients {
    /// One cell per input cell with ring `A/I_c`.
    Cyclic,
    /// Each cell with `q` cyclic factors becomes `2^q` cells over
    /// `A/(V_c)`, forming the Koszul complex on the `m_k ℓ_k`.
    Resolved,
    /// `Resolved` if some cell has two or more cyclic factors.
    Auto,
}

struct Layout {
    levels: Vec<usize>,
    disc: Vec<u32>,
    rings: Vec<CoeffBasis>,
    entries: Vec<(usize, usize, Poly)>,
}

fn cyclic_layout(e: &EquivariantCW) -> Layout {
    let entries = e
        .differential
        .iter()
        .filter(|x| !x.coeff.is_zero())
        .map(|x| (e.cell_index(&x.from).unwrap(), e.cell_index(&x.to).unwrap(), x.coeff.clone()))
        .collect();
    Layout {
        levels: skeleton_dims(e),
        disc: e.cells.iter().map(|c| c.disc_dim).collect(),
        rings: e
            .cells
            .iter()
            .map(|c| CoeffBasis::new(&c.iso, e.n).expect("validated"))
            .collect(),
        entries,
    }
}

fn subset_list(q: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << q)
        .map(|bits| (0..q).filter(|k| bits >> k & 1 == 1).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

fn permutation_sign(v: &[usize]) -> i64 {
    let mut s = 1;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                s = -s;
            }
        }
    }
    s
}

fn resolved_layout(e: &EquivariantCW) -> Layout {
    let n = e.n;
    let mut levels = Vec::new();
    let mut disc = Vec::new();
    let mut rings = Vec::new();
    let mut subsets: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut base = Vec::new();
    for c in &e.cells {
        let s = subset_list(c.iso.torsion.len());
        base.push(levels.len());
        let ring = CoeffBasis::new(
            &Isotropy {
                v: c.iso.v.clone(),
                torsion: Vec::new(),
            },
            n,
        )
        .expect("validated");
        for sub in &s {
            levels.push(c.iso.orbit_dim());
            disc.push(c.disc_dim + sub.len() as u32);
            rings.push(ring.clone());
        }
        subsets.push(s);
    }
    let index = |c: usize, sub: &[usize]| base[c] + subsets[c].iter().position(|x| x == sub).unwrap();
    let mut entries = Vec::new();
    for (c, cell) in e.cells.iter().enumerate() {
        for sub in &subsets[c] {
            for (a, &k) in sub.iter().enumerate() {
                let (m, l) = &cell.iso.torsion[k];
                let mut rest = sub.clone();
                rest.remove(a);
                let sign = if a % 2 == 0 { m.clone() } else { -m.clone() };
                let f = Poly::linear(&l.iter().map(|x| x * &sign).collect::<Vec<_>>());
                entries.push((index(c, sub), index(c, &rest), f));
            }
        }
    }
    for x in e.differential.iter().filter(|x| !x.coeff.is_zero()) {
        let s = e.cell_index(&x.from).unwrap();
        let t = e.cell_index(&x.to).unwrap();
        let ts = &e.cells[t].iso.torsion;
        let phi: Vec<Option<usize>> = e.cells[s]
            .iso
            .torsion
            .iter()
            .map(|f| ts.iter().position(|g| g == f))
            .collect();
        for sub in &subsets[s] {
            let Some(image) = sub.iter().map(|&k| phi[k]).collect::<Option<Vec<usize>>>() else {
                continue;
            };
            let sign = permutation_sign(&image) * if sub.len() % 2 == 0 { 1 } else { -1 };
            let mut sorted = image.clone();
            sorted.sort_unstable();
            entries.push((index(s, sub), index(t, &sorted), x.coeff.scalar_mul(&BigInt::from(sign))));
        }
    }
    Layout {
        levels,
        disc,
        rings,
        entries,
    }
}

impl CochainModel {
    pub fn new(e: &EquivariantCW, top: i64) -> Result<Self, EcwError> {
        Self::with_coefficients(e, top, Coefficients::Auto)
    }

    pub fn with_coefficients(e: &EquivariantCW, top: i64, coeffs: Coefficients) -> Result<Self, EcwError> {
        let rep = validate(e);
        if !rep.is_ok() {
            return Err(EcwError::Invalid(rep));
        }
        let resolved = match coeffs {
            Coefficients::Cyclic => false,
            Coefficients::Resolved => true,
            Coefficients::Auto => e.cells.iter().any(|c| c.iso.torsion.len() >= 2),
        };
        let layout = if resolved { resolved_layout(e) } else { cyclic_layout(e) };
        let n = e.n;
        let mut blocks = Vec::new();
        let mut sizes = Vec::new();
        let mut orders = Vec::new();
        for k in 0..=top.max(0) {
            let mut row = Vec::new();
            let mut offset = 0;
            let mut ord = Vec::new();
            for (c, &dd) in layout.disc.iter().enumerate() {
                let rest = k - dd as i64;
                if rest < 0 || rest % 2 != 0 {
                    row.push(None);
                    continue;
                }
                let ring = &layout.rings[c];
                let basis = ring.basis((rest / 2) as u32);
                let index = basis.iter().enumerate().map(|(i, (ex, _))| (ex.clone(), i)).collect();
                let lifts = basis
                    .iter()
                    .map(|(ex, _)| ring.to_t(&Poly::monomial(n, ex.clone(), 1)))
                    .collect();
                ord.extend(basis.iter().map(|(_, o)| o.clone()));
                let len = basis.len();
                row.push(Some(Block {
                    offset,
                    basis,
                    index,
                    lifts,
                }));
                offset += len;
            }
            blocks.push(row);
            sizes.push(offset);
            orders.push(ord);
        }
        let mut model = CochainModel {
            n,
            top,
            resolved,
            levels: layout.levels,
            disc: layout.disc,
            rings: layout.rings,
            blocks,
            sizes,
            orders,
            diff: Vec::new(),
        };
        for k in 0..top {
            let mut m = IntMatrix::zeros(model.size(k + 1), model.size(k));
            for (s, t, f) in &layout.entries {
                let (Some(src), Some(tgt)) = (model.block(k, *s), model.block(k + 1, *t)) else {
                    continue;
                };
                for (j, lift) in src.lifts.iter().enumerate() {
                    let image = model.rings[*t].normal_form(&(f * lift));
                    for (ex, c) in image.terms() {
                        let row = tgt.offset + tgt.index[ex];
                        let col = src.offset + j;
                        let v = m.get(row, col) + c;
                        m.set(row, col, v);
                    }
                }
            }
            model.diff.push(m);
        }
        if resolved {
            for k in 1..top {
                let comp = model.diff[k as usize].mul(&model.diff[k as usize - 1]);
                if (0..comp.rows()).any(|r| comp.row(r).iter().any(|x| !x.is_zero())) {
                    let mut rep = ValidationReport::default();
                    rep.push(
                        "/differential".into(),
                        ViolationKind::DSquared,
                        format!("differential does not lift to resolved coefficients (degree {})", k - 1),
                    );
                    return Err(EcwError::Invalid(rep));
                }
            }
        }
        Ok(model)
    }

    /// True when torsion cells use Koszul-resolved coefficients.
    pub fn is_resolved(&self) -> bool {
        self.resolved
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn top(&self) -> i64 {
        self.top
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    fn block(&self, k: i64, c: usize) -> Option<&Block> {
        if k < 0 || k > self.top {
            return None;
        }
        self.blocks[k as usize][c].as_ref()
    }

    /// Rank of the cochain lattice `C^k`.
    pub fn size(&self, k: i64) -> usize {
        if k < 0 || k > self.top {
            0
        } else {
            self.sizes[k as usize]
        }
    }

    /// Cells whose orbit dimension lies in `(lo, hi]`.
    pub fn mask(&self, lo: i64, hi: i64) -> CellMask {
        self.levels
            .iter()
            .map(|&l| (l as i64) > lo && (l as i64) <= hi)
            .collect()
    }

    /// Global coordinates of `C^k` supported on the masked cells.
    pub fn indices(&self, k: i64, mask: &[bool]) -> Vec<usize> {
        let mut out = Vec::new();
        for (c, &on) in mask.iter().enumerate() {
            if !on {
                continue;
            }
            if let Some(b) = self.block(k, c) {
                out.extend(b.offset..b.offset + b.basis.len());
            }
        }
        out
    }

    pub fn orders(&self, k: i64, mask: &[bool]) -> Vec<BigInt> {
        self.indices(k, mask)
            .into_iter()
            .map(|i| self.orders[k as usize][i].clone())
            .collect()
    }

    /// The global differential `C^k -> C^{k+1}`, restricted to the given
    /// source and target supports.
    pub fn differential(&self, k: i64, src: &[bool], tgt: &[bool]) -> IntMatrix {
        let rows = self.indices(k + 1, tgt);
        let cols = self.indices(k, src);
        if k < 0 || k >= self.top {
            return IntMatrix::zeros(rows.len(), cols.len());
        }
        self.diff[k as usize].select_rows(&rows).select_cols(&cols)
    }

    /// Multiplication by `t_{i+1}` on `C^k -> C^{k+2}` over the masked cells.
    pub fn action(&self, k: i64, i: usize, mask: &[bool]) -> IntMatrix {
        let src = self.indices(k, mask);
        let tgt = self.indices(k + 2, mask);
        let mut m = IntMatrix::zeros(tgt.len(), src.len());
        let pos: HashMap<usize, usize> = tgt.iter().enumerate().map(|(a, &g)| (g, a)).collect();
        let mut col = 0;
        for (c, &on) in mask.iter().enumerate() {
            if !on {
                continue;
            }
            let Some(b) = self.block(k, c) else { continue };
            let tb = self.block(k + 2, c).expect("degree k + 2 block");
            let ring = &self.rings[c];
            for (ex, _) in &b.basis {
                let prod = &ring.t_in_u[i] * &Poly::monomial(self.n, ex.clone(), 1);
                for (ex2, coeff) in ring.reduce_u(&prod).terms() {
                    let g = tb.offset + tb.index[ex2];
                    m.set(pos[&g], col, coeff.clone());
                }
                col += 1;
            }
        }
        m
    }

    /// Per-degree cohomology of the masked subcomplex on `0..top`.
    pub fn subset_cohomology(&self, mask: &[bool]) -> Result<SubsetCohomology, EcwError> {
        let mut pieces = Vec::new();
        for k in 0..self.top {
            let incoming = self.differential(k - 1, mask, mask);
            let outgoing = self.differential(k, mask, mask);
            let sq = Subquotient::homology(
                &incoming,
                &self.orders(k, mask),
                &outgoing,
                &self.orders(k + 1, mask),
            )?;
            pieces.push(sq);
        }
        Ok(SubsetCohomology {
            mask: mask.to_vec(),
            pieces,
        })
    }

    /// The cohomology of a masked subcomplex as a graded module on
    /// `[0, top - 1]`.
    pub fn module(&self, h: &SubsetCohomology) -> Result<GradedModule, EcwError> {
        Ok(GradedModule::from_subquotients(self.n, 0, &h.pieces, |d, i| {
            self.action(d, i, &h.mask)
        })?)
    }

    /// Map `H^k(src) -> H^{k+shift}(tgt)` induced by the identity on shared
    /// cells (`shift = 0`) or by the global differential (`shift = 1`).
    pub fn induced(
        &self,
        src: &SubsetCohomology,
        tgt: &SubsetCohomology,
        k: i64,
        shift: i64,
    ) -> Result<IntMatrix, EcwError> {
        let (Some(s), Some(t)) = (src.piece(k), tgt.piece(k + shift)) else {
            return Err(EcwError::Linalg(LinalgError::DimensionMismatch(format!(
                "degree {k} outside the model"
            ))));
        };
        let f = match shift {
            0 => {
                let si = self.indices(k, &src.mask);
                let ti: HashMap<usize, usize> = self
                    .indices(k, &tgt.mask)
                    .into_iter()
                    .enumerate()
                    .map(|(a, g)| (g, a))
                    .collect();
                let mut f = IntMatrix::zeros(ti.len(), si.len());
                for (a, g) in si.iter().enumerate() {
                    if let Some(&b) = ti.get(g) {
                        f.set(b, a, BigInt::one());
                    }
                }
                f
            }
            1 => self.differential(k, &src.mask, &tgt.mask),
            _ => panic!("shift must be 0 or 1"),
        };
        Ok(induced_map(s, &f, t)?)
    }

    /// Disc dimension of every cell.
    pub fn disc_dims(&self) -> &[u32] {
        &self.disc
    }
}

/// Per-degree cohomology of a cell subset, with lift/reduce data.
#[derive(Clone, Debug)]
pub struct SubsetCohomology {
    mask: CellMask,
    pieces: Vec<Subquotient>,
}

impl SubsetCohomology {
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Degree-`k` piece; `None` outside `[0, top)`. Negative degrees are
    /// zero but carry no piece.
    pub fn piece(&self, k: i64) -> Option<&Subquotient> {
        if k < 0 {
            None
        } else {
            self.pieces.get(k as usize)
        }
    }

    pub fn max_degree(&self) -> i64 {
        self.pieces.len() as i64 - 1
    }
}

/// `H_T^*(X)` on the window `[0, d_max]`.
pub fn cohomology(e: &EquivariantCW, d_max: i64) -> Result<GradedModule, EcwError> {
    relative_cohomology(e, -1, e.n as i64, d_max)
}

/// `H_T^*(X_hi, X_lo)` on the window `[0, d_max]`, from the cochains on
/// cells with orbit dimension in `(lo, hi]`.
pub fn relative_cohomology(
    e: &EquivariantCW,
    lo: i64,
    hi: i64,
    d_max: i64,
) -> Result<GradedModule, EcwError> {
    if lo < -1 || lo >= hi || hi > e.n as i64 {
        return Err(EcwError::BadIndices(lo, hi, e.n));
    }
    let model = CochainModel::new(e, d_max + 1)?;
    let mask = model.mask(lo, hi);
    let h = model.subset_cohomology(&mask)?;
    model.module(&h)
}

fn embed_row(row: &[BigInt], total: usize, offset: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); total];
    for (i, x) in row.iter().enumerate() {
        out[offset + i] = x.clone();
    }
    out
}

/// The product complex for the product torus, with cells `a*b`.
pub fn product(e1: &EquivariantCW, e2: &EquivariantCW) -> EquivariantCW {
    let n = e1.n + e2.n;
    let mut cells = Vec::new();
    for a in &e1.cells {
        for b in &e2.cells {
            let mut v_rows: Vec<Vec<BigInt>> =
                a.iso.v.to_rows().iter().map(|r| embed_row(r, n, 0)).collect();
            v_rows.extend(b.iso.v.to_rows().iter().map(|r| embed_row(r, n, e1.n)));
            let mut torsion: Vec<(BigInt, Vec<BigInt>)> = a
                .iso
                .torsion
                .iter()
                .map(|(m, l)| (m.clone(), embed_row(l, n, 0)))
                .collect();
            torsion.extend(b.iso.torsion.iter().map(|(m, l)| (m.clone(), embed_row(l, n, e1.n))));
            cells.push(Cell {
                id: format!("{}*{}", a.id, b.id),
                disc_dim: a.disc_dim + b.disc_dim,
                iso: Isotropy {
                    v: IntMatrix::from_rows_with_cols(&v_rows, n).expect("rows"),
                    torsion,
                },
            });
        }
    }
    let mut differential = Vec::new();
    for a in &e1.cells {
        for b in &e2.cells {
            for x in e1.differential.iter().filter(|x| x.from == a.id) {
                differential.push(Entry::new(
                    format!("{}*{}", a.id, b.id),
                    format!("{}*{}", x.to, b.id),
                    x.coeff.embed(n, 0),
                ));
            }
            let sign = if a.disc_dim % 2 == 0 { 1 } else { -1 };
            for y in e2.differential.iter().filter(|y| y.from == b.id) {
                differential.push(Entry::new(
                    format!("{}*{}", a.id, b.id),
                    format!("{}*{}", a.id, y.to),
                    y.coeff.embed(n, e1.n).scalar_mul(&BigInt::from(sign)),
                ));
            }
        }
    }
    EquivariantCW {
        n,
        cells,
        differential,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlinalg::AbelianPresentation;

    fn s2_rotation() -> EquivariantCW {
        EquivariantCW {
            n: 1,
            cells: vec![
                Cell { id: "N".into(), disc_dim: 0, iso: Isotropy::fixed(1) },
                Cell { id: "S".into(), disc_dim: 0, iso: Isotropy::fixed(1) },
                Cell { id: "E".into(), disc_dim: 1, iso: Isotropy::free(1) },
            ],
            differential: vec![
                Entry::parse("N", "E", "1", 1).unwrap(),
                Entry::parse("S", "E", "-1", 1).unwrap(),
            ],
        }
    }

    #[test]
    fn s2_rotation_validates_and_computes() {
        let e = s2_rotation();
        assert!(validate(&e).is_ok());
        let h = cohomology(&e, 8).unwrap();
        assert_eq!(h.group(0), Some(&AbelianPresentation::free(1)));
        for d in 1..=8 {
            let expect = if d % 2 == 0 { 2 } else { 0 };
            assert_eq!(h.group(d).unwrap().free_rank, expect, "degree {d}");
            assert!(h.group(d).unwrap().torsion.is_empty());
        }
        h.check_invariants().unwrap();
    }

    #[test]
    fn degree_violation() {
        let mut e = s2_rotation();
        e.differential[0] = Entry::parse("N", "E", "t1", 1).unwrap();
        let rep = validate(&e);
        assert!(rep.has(ViolationKind::Degree));
        assert_eq!(rep.violations[0].location, "/differential/0/coeff");
    }

    #[test]
    fn containment_violation() {
        let mut e = s2_rotation();
        e.cells.push(Cell { id: "F".into(), disc_dim: 2, iso: Isotropy::fixed(1) });
        e.differential.push(Entry::parse("E", "F", "1", 1).unwrap());
        assert!(validate(&e).has(ViolationKind::Containment));
    }

    #[test]
    fn d_squared_violation() {
        let mut e = s2_rotation();
        e.cells.push(Cell { id: "F".into(), disc_dim: 2, iso: Isotropy::free(1) });
        e.differential.push(Entry::parse("E", "F", "1", 1).unwrap());
        // N -> E -> F gives 1, S -> E -> F gives -1: both nonzero.
        assert!(validate(&e).has(ViolationKind::DSquared));
    }

    #[test]
    fn skeleton_dims_of_cells() {
        let mut e = s2_rotation();
        e.cells.push(Cell {
            id: "O".into(),
            disc_dim: 0,
            iso: Isotropy {
                v: IntMatrix::zeros(0, 1),
                torsion: vec![(BigInt::from(2), vec![BigInt::one()])],
            },
        });
        assert_eq!(skeleton_dims(&e), vec![0, 0, 1, 1]);
    }

    #[test]
    fn coefficient_ring_orders() {
        let iso = Isotropy {
            v: IntMatrix::zeros(0, 1),
            torsion: vec![(BigInt::from(2), vec![BigInt::one()])],
        };
        let ring = CoeffBasis::new(&iso, 1).unwrap();
        assert_eq!(ring.basis(0), vec![(vec![0], BigInt::zero())]);
        assert_eq!(ring.basis(3), vec![(vec![3], BigInt::from(2))]);
        let f = Poly::parse("3*t1^2", 1, 't').unwrap();
        assert_eq!(ring.normal_form(&f).to_string(), "t1^2");
    }

    #[test]
    fn relative_of_s2() {
        let e = s2_rotation();
        let h0 = relative_cohomology(&e, -1, 0, 6).unwrap();
        assert_eq!(h0.group(2).unwrap().free_rank, 2);
        let h1 = relative_cohomology(&e, 0, 1, 6).unwrap();
        assert_eq!(h1.group(1), Some(&AbelianPresentation::free(1)));
        assert!(h1.group(3).unwrap().is_trivial());
        assert!(matches!(relative_cohomology(&e, 1, 1, 6), Err(EcwError::BadIndices(..))));
    }

    #[test]
    fn json_roundtrip() {
        let e = s2_rotation();
        let s = e.to_json_string();
        let back = EquivariantCW::from_json_str(&s).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.to_json_string(), s);
    }

    #[test]
    fn schema_errors_are_located() {
        let err = EquivariantCW::from_json_str(r#"{"n": 1, "cells": [{"id": "a", "disc_dim": 0, "V": [[1, 2]]}]}"#)
            .unwrap_err();
        assert!(matches!(err, EcwError::Schema { ref pointer, .. } if pointer == "/cells/0/V/0"));
        let err = EquivariantCW::from_json_str(
            r#"{"n": 1, "cells": [], "differential": [{"from": "a", "to": "b", "coeff": "t1 +"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, EcwError::Schema { ref pointer, .. } if pointer == "/differential/0/coeff"));
    }
    fn model_cohomology(e: &EquivariantCW, coeffs: Coefficients, top: i64) -> Vec<String> {
        let m = CochainModel::with_coefficients(e, top, coeffs).unwrap();
        let h = m.subset_cohomology(&m.mask(-1, e.n as i64)).unwrap();
        (0..top).map(|k| h.piece(k).unwrap().presentation().to_string()).collect()
    }

    #[test]
    fn resolved_agrees_with_cyclic_for_single_factors() {
        for name in ["rp2", "s2-double-rotation", "example4"] {
            let e = crate::corpus::load(name).unwrap().ecw;
            assert_eq!(
                model_cohomology(&e, Coefficients::Cyclic, 9),
                model_cohomology(&e, Coefficients::Resolved, 9),
                "{name}"
            );
        }
    }

    #[test]
    fn two_cyclic_factors_give_odd_classes() {
        // A single orbit T/(Z/2 x Z/2): H^* = H^*(B(Z/2)^2), which has Z/2 in degree 3.
        let iso = Isotropy {
            v: IntMatrix::zeros(0, 2),
            torsion: vec![
                (BigInt::from(2), vec![BigInt::from(1), BigInt::from(0)]),
                (BigInt::from(2), vec![BigInt::from(0), BigInt::from(1)]),
            ],
        };
        let e = EquivariantCW {
            n: 2,
            cells: vec![Cell { id: "o".into(), disc_dim: 0, iso }],
            differential: vec![],
        };
        let h = model_cohomology(&e, Coefficients::Auto, 6);
        assert_eq!(h, ["Z", "0", "(Z/2)^2", "Z/2", "(Z/2)^3", "(Z/2)^2"]);
        assert_eq!(model_cohomology(&e, Coefficients::Cyclic, 4)[3], "0");
    }
}
