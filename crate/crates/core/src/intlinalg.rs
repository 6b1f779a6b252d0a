//! Exact integer matrix algebra.
//!
//! Everything here works over arbitrary-precision integers. The central
//! objects are [`IntMatrix`], the Smith normal form with (optional) change of
//! basis matrices, column echelon reduction for kernels and spans, and
//! [`Subquotient`], which presents `span(cycles) / span(boundaries)` as a
//! finitely generated abelian group together with the data needed to move
//! between presentation coordinates and ambient vectors.
//!
//! Finitely generated abelian groups given as `Z^g` modulo a diagonal relation
//! lattice are described by an `orders` slice: entry `0` means a free
//! coordinate, entry `m >= 1` means the coordinate lives in `Z/m`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("boundaries not contained in cycles")]
    BoundariesNotInCycles,
    #[error("vector is not contained in the cycle lattice")]
    NotACycle,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_rows_with_cols(rows, c).expect("ragged rows")
    }

    /// Like [`IntMatrix::from_rows`] but allows zero rows with a known width.
    pub fn from_rows_with_cols<T: Into<BigInt> + Clone>(
        rows: &[Vec<T>],
        cols: usize,
    ) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row {i} has length {} but {cols} columns expected",
                    row.len()
                )));
            }
            data.extend(row.iter().cloned().map(Into::into));
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, x) in col.iter().enumerate() {
                m.data[i * m.cols + j] = x.clone();
            }
        }
        m
    }

    pub fn diagonal(entries: &[BigInt], rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, d) in entries.iter().enumerate() {
            m.data[i * cols + i] = d.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<BigInt>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = BigInt::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> IntMatrix {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut out = IntMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * out.cols + j] = self.get(i, j).clone();
            }
            for j in 0..other.cols {
                out.data[i * out.cols + self.cols + j] = other.get(i, j).clone();
            }
        }
        out
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..self.cols {
                out.data[r * self.cols + j] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (c, &j) in idx.iter().enumerate() {
                out.data[i * idx.len() + c] = self.get(i, j).clone();
            }
        }
        out
    }

    /// Determinant by fraction-free elimination (Bareiss). Square matrices only.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                    Some(p) => {
                        a.swap_rows(k, p);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// row_i += q * row_j
    fn row_addmul(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let b = &self.data[j * self.cols + c];
            if !b.is_zero() {
                let add = b * q;
                self.data[i * self.cols + c] += add;
            }
        }
    }

    /// col_i += q * col_j
    fn col_addmul(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let b = &self.data[r * self.cols + j];
            if !b.is_zero() {
                let add = b * q;
                self.data[r * self.cols + i] += add;
            }
        }
    }

    fn neg_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let v = &mut self.data[i * self.cols + c];
            *v = -std::mem::take(v);
        }
    }

    fn neg_col(&mut self, j: usize) {
        for r in 0..self.rows {
            let v = &mut self.data[r * self.cols + j];
            *v = -std::mem::take(v);
        }
    }

    /// Entries as `i64`, when they all fit.
    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_i64()).collect())
            .collect()
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix({}x{})[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

/// Serialises as `{"rows": r, "cols": c, "entries": [[..], ..]}`; entries that
/// do not fit in an `i64` are written as decimal strings.
impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            rows: usize,
            cols: usize,
            entries: Vec<RowRepr<'a>>,
        }
        struct RowRepr<'a>(&'a [BigInt]);
        impl Serialize for RowRepr<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.len()))?;
                for x in self.0 {
                    seq.serialize_element(&BigIntRepr(x))?;
                }
                seq.end()
            }
        }
        Repr {
            rows: self.rows,
            cols: self.cols,
            entries: (0..self.rows).map(|i| RowRepr(self.row(i))).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rows: usize,
            cols: usize,
            entries: Vec<Vec<BigIntOwned>>,
        }
        let r = Repr::deserialize(d)?;
        if r.entries.len() != r.rows {
            return Err(de::Error::custom("row count mismatch"));
        }
        let rows: Vec<Vec<BigInt>> = r
            .entries
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.0).collect())
            .collect();
        IntMatrix::from_rows_with_cols(&rows, r.cols).map_err(de::Error::custom)
    }
}

/// Serialisation helper: an integer as a JSON number when it fits in `i64`,
/// otherwise as a decimal string.
pub struct BigIntRepr<'a>(pub &'a BigInt);

impl Serialize for BigIntRepr<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

/// Owned counterpart of [`BigIntRepr`] for deserialisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigIntOwned(pub BigInt);

impl Serialize for BigIntOwned {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BigIntRepr(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BigIntOwned {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(BigIntOwned(BigInt::from(v))),
            Raw::Str(s) => s
                .parse::<BigInt>()
                .map(BigIntOwned)
                .map_err(|_| de::Error::custom(format!("invalid integer {s:?}"))),
        }
    }
}

/// A finitely generated abelian group `Z^free_rank ⊕ Z/d_1 ⊕ ... ⊕ Z/d_k`
/// with `d_1 | d_2 | ... | d_k` and every `d_i >= 2`.
///
/// Presentation coordinates list the torsion generators first (in the order
/// of `torsion`), then the free generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AbelianPresentation {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianPresentation {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn free(rank: usize) -> Self {
        AbelianPresentation {
            free_rank: rank,
            torsion: Vec::new(),
        }
    }

    /// Canonical group from an arbitrary list of cyclic orders (0 = free).
    pub fn from_orders(orders: &[BigInt]) -> Self {
        cokernel(&IntMatrix::diagonal(orders, orders.len(), orders.len()))
    }

    /// Builds the group from a Smith diagonal (entries, in divisibility
    /// order, possibly followed by implicit zeros up to `rows`).
    fn from_smith_diagonal(diag: &[BigInt], rows: usize) -> Self {
        let torsion: Vec<BigInt> = diag.iter().filter(|d| !d.is_one()).cloned().collect();
        AbelianPresentation {
            free_rank: rows - diag.len(),
            torsion,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn num_generators(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    /// Order of each presentation generator; 0 marks a free generator.
    pub fn orders(&self) -> Vec<BigInt> {
        let mut out = self.torsion.clone();
        out.extend(std::iter::repeat_n(BigInt::zero(), self.free_rank));
        out
    }

    /// Order of the group if finite.
    pub fn order(&self) -> Option<BigInt> {
        (self.free_rank == 0).then(|| self.torsion.iter().product())
    }

    /// Largest order of a torsion element (1 if torsion-free).
    pub fn exponent(&self) -> BigInt {
        self.torsion.last().cloned().unwrap_or_else(BigInt::one)
    }

    pub fn direct_sum(&self, other: &AbelianPresentation) -> AbelianPresentation {
        let mut orders = self.orders();
        orders.extend(other.orders());
        Self::from_orders(&orders)
    }
}

impl fmt::Display for AbelianPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        let mut i = 0;
        while i < self.torsion.len() {
            let d = &self.torsion[i];
            let run = self.torsion[i..].iter().take_while(|x| *x == d).count();
            parts.push(if run == 1 { format!("Z/{d}") } else { format!("(Z/{d})^{run}") });
            i += run;
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for AbelianPresentation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            free_rank: usize,
            torsion: Vec<BigIntRepr<'a>>,
        }
        Repr {
            free_rank: self.free_rank,
            torsion: self.torsion.iter().map(BigIntRepr).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AbelianPresentation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            free_rank: usize,
            #[serde(default)]
            torsion: Vec<BigIntOwned>,
        }
        let r = Repr::deserialize(d)?;
        let mut orders: Vec<BigInt> = r.torsion.into_iter().map(|x| x.0).collect();
        if orders.iter().any(|m| !m.is_positive()) {
            return Err(de::Error::custom("torsion factors must be positive"));
        }
        orders.extend(std::iter::repeat_n(BigInt::zero(), r.free_rank));
        Ok(AbelianPresentation::from_orders(&orders))
    }
}

/// Smith normal form `U · M · V = D`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    /// Nonzero diagonal entries `d_1 | d_2 | ... | d_rank`, all positive.
    pub invariants: Vec<BigInt>,
    pub u: Option<IntMatrix>,
    pub u_inv: Option<IntMatrix>,
    pub v: Option<IntMatrix>,
    pub v_inv: Option<IntMatrix>,
    rows: usize,
    cols: usize,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.invariants.len()
    }

    pub fn diagonal_matrix(&self) -> IntMatrix {
        IntMatrix::diagonal(&self.invariants, self.rows, self.cols)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Transforms {
    pub left: bool,
    pub right: bool,
}

impl Transforms {
    pub const NONE: Transforms = Transforms {
        left: false,
        right: false,
    };
    pub const ALL: Transforms = Transforms {
        left: true,
        right: true,
    };
    pub const LEFT: Transforms = Transforms {
        left: true,
        right: false,
    };
}

struct SmithWork {
    a: IntMatrix,
    u: Option<IntMatrix>,
    u_inv: Option<IntMatrix>,
    v: Option<IntMatrix>,
    v_inv: Option<IntMatrix>,
}

impl SmithWork {
    fn row_swap(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        if let Some(u) = &mut self.u {
            u.swap_rows(i, j);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.swap_cols(i, j);
        }
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        if let Some(v) = &mut self.v {
            v.swap_cols(i, j);
        }
        if let Some(vi) = &mut self.v_inv {
            vi.swap_rows(i, j);
        }
    }

    /// row_i += q row_j
    fn row_addmul(&mut self, i: usize, j: usize, q: &BigInt) {
        self.a.row_addmul(i, j, q);
        if let Some(u) = &mut self.u {
            u.row_addmul(i, j, q);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.col_addmul(j, i, &-q);
        }
    }

    /// col_i += q col_j
    fn col_addmul(&mut self, i: usize, j: usize, q: &BigInt) {
        self.a.col_addmul(i, j, q);
        if let Some(v) = &mut self.v {
            v.col_addmul(i, j, q);
        }
        if let Some(vi) = &mut self.v_inv {
            vi.row_addmul(j, i, &-q);
        }
    }

    fn row_neg(&mut self, i: usize) {
        self.a.neg_row(i);
        if let Some(u) = &mut self.u {
            u.neg_row(i);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.neg_col(i);
        }
    }
}

/// Quotient rounded to the nearest integer, so remainders are small.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    // r has the sign of b, so q + 1 leaves remainder r - b of the other sign
    let (q, r) = a.div_mod_floor(b);
    let twice: BigInt = &r * 2;
    if twice.abs() > b.abs() {
        q + 1
    } else {
        q
    }
}

/// Smith normal form with the requested change-of-basis matrices.
pub fn smith(m: &IntMatrix, transforms: Transforms) -> SmithForm {
    let (rows, cols) = (m.rows, m.cols);
    let mut w = SmithWork {
        a: m.clone(),
        u: transforms.left.then(|| IntMatrix::identity(rows)),
        u_inv: transforms.left.then(|| IntMatrix::identity(rows)),
        v: transforms.right.then(|| IntMatrix::identity(cols)),
        v_inv: transforms.right.then(|| IntMatrix::identity(cols)),
    };
    let mut invariants = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero entry of the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                let x = w.a.get(i, j);
                if x.is_zero() {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| x.abs() < w.a.get(bi, bj).abs()) {
                    best = Some((i, j));
                    if x.abs().is_one() {
                        break;
                    }
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        w.row_swap(t, pi);
        w.col_swap(t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if w.a.get(i, t).is_zero() {
                    continue;
                }
                let q = round_div(w.a.get(i, t), w.a.get(t, t));
                w.row_addmul(i, t, &-q);
                if !w.a.get(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                if w.a.get(t, j).is_zero() {
                    continue;
                }
                let q = round_div(w.a.get(t, j), w.a.get(t, t));
                w.col_addmul(j, t, &-q);
                if !w.a.get(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                // move the smallest leftover of row/column t onto the pivot
                let mut best = (t, t);
                for i in t + 1..rows {
                    let x = w.a.get(i, t);
                    if !x.is_zero() && x.abs() < w.a.get(best.0, best.1).abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    let x = w.a.get(t, j);
                    if !x.is_zero() && x.abs() < w.a.get(best.0, best.1).abs() {
                        best = (t, j);
                    }
                }
                w.row_swap(t, best.0);
                w.col_swap(t, best.1);
                continue;
            }
            let pivot = w.a.get(t, t).clone();
            let offender = if pivot.abs().is_one() {
                None
            } else {
                (t + 1..rows).find(|&i| {
                    (t + 1..cols).any(|j| !w.a.get(i, j).is_multiple_of(&pivot))
                })
            };
            match offender {
                Some(i) => w.row_addmul(t, i, &BigInt::one()),
                None => break,
            }
        }
        if w.a.get(t, t).is_negative() {
            w.row_neg(t);
        }
        invariants.push(w.a.get(t, t).clone());
        t += 1;
    }
    SmithForm {
        invariants,
        u: w.u,
        u_inv: w.u_inv,
        v: w.v,
        v_inv: w.v_inv,
        rows,
        cols,
    }
}

/// `(U, D, V)` with `U · M · V = D`, `U` and `V` unimodular, `D` diagonal
/// with a divisibility chain.
pub fn smith_normal_form(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let s = smith(m, Transforms::ALL);
    let d = s.diagonal_matrix();
    (s.u.unwrap(), d, s.v.unwrap())
}

/// Presentation of `Z^rows / image(M)`.
pub fn cokernel(m: &IntMatrix) -> AbelianPresentation {
    let s = smith(m, Transforms::NONE);
    AbelianPresentation::from_smith_diagonal(&s.invariants, m.rows)
}

/// Column echelon reduction `E = A · V`. Column `k < rank` of `E` is zero
/// above its pivot row `pivots[k]` and the pivot rows strictly increase;
/// columns `rank..` of `E` are zero.
pub struct ColumnEchelon {
    pub reduced: IntMatrix,
    pub pivots: Vec<usize>,
    pub transform: Option<IntMatrix>,
}

impl ColumnEchelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

pub fn column_echelon(a: &IntMatrix, track: bool) -> ColumnEchelon {
    // Column operations on A are row operations on A^T; work on the transpose
    // so the hot loops walk contiguous memory.
    let mut t = a.transpose();
    let mut v = track.then(|| IntMatrix::identity(a.cols));
    let mut pivots = Vec::new();
    let mut k = 0;
    for r in 0..a.rows {
        if k == t.rows {
            break;
        }
        loop {
            // smallest nonzero |t[j][r]| for j >= k
            let mut best: Option<usize> = None;
            for j in k..t.rows {
                let x = t.get(j, r);
                if !x.is_zero() && best.is_none_or(|b| x.abs() < t.get(b, r).abs()) {
                    best = Some(j);
                }
            }
            let Some(b) = best else { break };
            t.swap_rows(k, b);
            if let Some(v) = &mut v {
                v.swap_cols(k, b);
            }
            let mut done = true;
            for j in k + 1..t.rows {
                if t.get(j, r).is_zero() {
                    continue;
                }
                let q = -round_div(t.get(j, r), t.get(k, r));
                t.row_addmul(j, k, &q);
                if let Some(v) = &mut v {
                    v.col_addmul(j, k, &q);
                }
                if !t.get(j, r).is_zero() {
                    done = false;
                }
            }
            if done {
                pivots.push(r);
                k += 1;
                break;
            }
        }
    }
    ColumnEchelon {
        reduced: t.transpose(),
        pivots,
        transform: v,
    }
}

fn normalize_sign(col: &mut [BigInt]) {
    if let Some(first) = col.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in col.iter_mut() {
                *x = -std::mem::take(x);
            }
        }
    }
}

/// Columns form a Z-basis of `ker(M)`; the kernel is saturated, hence a
/// direct summand of the domain lattice.
pub fn kernel_basis(m: &IntMatrix) -> IntMatrix {
    let ech = column_echelon(m, true);
    let r = ech.rank();
    let v = ech.transform.unwrap();
    let mut cols: Vec<Vec<BigInt>> = (r..m.cols).map(|j| v.column(j)).collect();
    for c in &mut cols {
        normalize_sign(c);
    }
    IntMatrix::from_columns(m.cols, &cols)
}

/// A basis (as columns) of the lattice spanned by the columns of `g`.
pub fn column_span_basis(g: &IntMatrix) -> IntMatrix {
    let ech = column_echelon(g, false);
    let idx: Vec<usize> = (0..ech.rank()).collect();
    ech.reduced.select_cols(&idx)
}

/// Exact solver for `B · y = z` where `B` is in column echelon form with
/// full column rank (as produced by [`column_span_basis`]).
#[derive(Clone, Debug)]
pub struct EchelonSolver {
    basis: IntMatrix,
    pivots: Vec<usize>,
}

impl EchelonSolver {
    pub fn new(generators: &IntMatrix) -> Self {
        let ech = column_echelon(generators, false);
        let idx: Vec<usize> = (0..ech.rank()).collect();
        EchelonSolver {
            basis: ech.reduced.select_cols(&idx),
            pivots: ech.pivots,
        }
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn solve(&self, z: &[BigInt]) -> Option<Vec<BigInt>> {
        let mut res = z.to_vec();
        let mut y = Vec::with_capacity(self.pivots.len());
        for (k, &p) in self.pivots.iter().enumerate() {
            let piv = self.basis.get(p, k);
            let (q, r) = res[p].div_rem(piv);
            if !r.is_zero() {
                return None;
            }
            if !q.is_zero() {
                for (i, x) in res.iter_mut().enumerate().skip(p) {
                    let b = self.basis.get(i, k);
                    if !b.is_zero() {
                        *x -= &q * b;
                    }
                }
            }
            y.push(q);
        }
        res.iter().all(Zero::is_zero).then_some(y)
    }
}

/// Some integer solution of `A · y = b`, if one exists.
pub fn solve(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    let s = smith(a, Transforms::ALL);
    let u = s.u.as_ref().unwrap();
    let v = s.v.as_ref().unwrap();
    let c = u.mul_vec(b);
    let mut w = vec![BigInt::zero(); a.cols];
    for (i, ci) in c.iter().enumerate() {
        if i < s.rank() {
            let (q, r) = ci.div_rem(&s.invariants[i]);
            if !r.is_zero() {
                return None;
            }
            w[i] = q;
        } else if !ci.is_zero() {
            return None;
        }
    }
    Some(v.mul_vec(&w))
}

/// True iff the rows of `b` are independent and span a direct summand of
/// `Z^cols`.
pub fn is_direct_summand(b: &IntMatrix) -> bool {
    let s = smith(b, Transforms::NONE);
    s.rank() == b.rows && s.invariants.iter().all(One::is_one)
}

/// Extends the rows of `b` (a direct-summand basis) to a unimodular square
/// matrix whose first rows are exactly `b`'s rows.
pub fn complete_to_unimodular(b: &IntMatrix) -> Option<IntMatrix> {
    if !is_direct_summand(b) {
        return None;
    }
    let s = smith(b, Transforms::ALL);
    let v_inv = s.v_inv.unwrap();
    let k = b.rows;
    let tail: Vec<usize> = (k..b.cols).collect();
    Some(b.vstack(&v_inv.select_rows(&tail)))
}

/// Inverse of a square matrix with determinant ±1.
pub fn inverse_unimodular(p: &IntMatrix) -> Option<IntMatrix> {
    if p.rows != p.cols {
        return None;
    }
    let s = smith(p, Transforms::ALL);
    if s.rank() != p.rows || !s.invariants.iter().all(One::is_one) {
        return None;
    }
    // U P V = I, so P^-1 = V U.
    Some(s.v.unwrap().mul(&s.u.unwrap()))
}

/// Diagonal relation columns for the given orders (`m >= 1` entries only).
pub fn relation_columns(orders: &[BigInt]) -> IntMatrix {
    let nz: Vec<usize> = (0..orders.len()).filter(|&i| !orders[i].is_zero()).collect();
    let mut r = IntMatrix::zeros(orders.len(), nz.len());
    for (c, &i) in nz.iter().enumerate() {
        r.set(i, c, orders[i].clone());
    }
    r
}

/// Reduces a coordinate vector modulo per-coordinate orders.
pub fn reduce_mod_orders(v: &mut [BigInt], orders: &[BigInt]) {
    for (x, m) in v.iter_mut().zip(orders) {
        if !m.is_zero() {
            *x = x.mod_floor(m);
        }
    }
}

/// Generators of `{ x : M x ≡ 0 }` where the target coordinates live in
/// `Z/target_orders[i]`.
pub fn preimage_of_zero(m: &IntMatrix, target_orders: &[BigInt]) -> IntMatrix {
    assert_eq!(m.rows, target_orders.len());
    let keep: Vec<usize> = (0..m.rows).filter(|&i| !target_orders[i].is_one()).collect();
    let trimmed = m.select_rows(&keep);
    let trimmed_orders: Vec<BigInt> = keep.iter().map(|&i| target_orders[i].clone()).collect();
    let rel = relation_columns(&trimmed_orders);
    if rel.cols == 0 {
        return kernel_basis(&trimmed);
    }
    let k = kernel_basis(&trimmed.hstack(&rel));
    let first: Vec<usize> = (0..m.cols).collect();
    k.select_rows(&first)
}

/// `span(cycles) / span(boundaries)` inside `Z^ambient`, with lift and
/// reduction data.
#[derive(Clone, Debug)]
pub struct Subquotient {
    ambient: usize,
    cycles: EchelonSolver,
    /// Left Smith transform of the boundary coordinates, restricted to the
    /// rows of kept generators.
    reducer: IntMatrix,
    lifts: Vec<Vec<BigInt>>,
    orders: Vec<BigInt>,
    presentation: AbelianPresentation,
}

impl Subquotient {
    pub fn new(
        ambient: usize,
        cycles: &IntMatrix,
        boundaries: &IntMatrix,
    ) -> Result<Subquotient, LinalgError> {
        if cycles.rows != ambient || boundaries.rows != ambient {
            return Err(LinalgError::DimensionMismatch(format!(
                "ambient rank {ambient}, cycles have {} rows, boundaries {}",
                cycles.rows, boundaries.rows
            )));
        }
        let solver = EchelonSolver::new(cycles);
        let k = solver.rank();
        let mut coords = Vec::with_capacity(boundaries.cols);
        for j in 0..boundaries.cols {
            let b = boundaries.column(j);
            if b.iter().all(Zero::is_zero) {
                continue;
            }
            coords.push(solver.solve(&b).ok_or(LinalgError::BoundariesNotInCycles)?);
        }
        let y = IntMatrix::from_columns(k, &coords);
        let s = smith(&y, Transforms::LEFT);
        let u = s.u.unwrap();
        let u_inv = s.u_inv.unwrap();
        let mut kept = Vec::new();
        let mut orders = Vec::new();
        for i in 0..k {
            let d = s.invariants.get(i).cloned().unwrap_or_else(BigInt::zero);
            if !d.is_one() {
                kept.push(i);
                orders.push(d);
            }
        }
        let basis = solver.basis();
        let lifts = kept.iter().map(|&i| basis.mul_vec(&u_inv.column(i))).collect();
        let presentation = AbelianPresentation::from_smith_diagonal(&s.invariants, k);
        Ok(Subquotient {
            ambient,
            cycles: solver,
            reducer: u.select_rows(&kept),
            lifts,
            orders,
            presentation,
        })
    }

    /// Homology at the middle of `prev --incoming--> mid --outgoing--> next`
    /// of groups given by per-coordinate orders.
    pub fn homology(
        incoming: &IntMatrix,
        mid_orders: &[BigInt],
        outgoing: &IntMatrix,
        next_orders: &[BigInt],
    ) -> Result<Subquotient, LinalgError> {
        let mid = mid_orders.len();
        if incoming.rows != mid || outgoing.cols != mid || outgoing.rows != next_orders.len() {
            return Err(LinalgError::DimensionMismatch(format!(
                "incoming {}x{}, mid {mid}, outgoing {}x{}, next {}",
                incoming.rows,
                incoming.cols,
                outgoing.rows,
                outgoing.cols,
                next_orders.len()
            )));
        }
        let cycles = preimage_of_zero(outgoing, next_orders);
        let boundaries = incoming.hstack(&relation_columns(mid_orders));
        Subquotient::new(mid, &cycles, &boundaries)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn presentation(&self) -> &AbelianPresentation {
        &self.presentation
    }

    /// Order of each presentation generator (0 = free), torsion first.
    pub fn orders(&self) -> &[BigInt] {
        &self.orders
    }

    pub fn num_generators(&self) -> usize {
        self.lifts.len()
    }

    /// Ambient representative of presentation generator `i`.
    pub fn lift(&self, i: usize) -> &[BigInt] {
        &self.lifts[i]
    }

    /// Ambient representative of a coordinate vector.
    pub fn lift_coords(&self, coords: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.ambient];
        for (c, l) in coords.iter().zip(&self.lifts) {
            if c.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(l) {
                if !x.is_zero() {
                    *o += c * x;
                }
            }
        }
        out
    }

    /// Presentation coordinates of an ambient cycle (torsion coordinates
    /// reduced into `[0, d)`).
    pub fn reduce(&self, z: &[BigInt]) -> Result<Vec<BigInt>, LinalgError> {
        if z.len() != self.ambient {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} in ambient {}",
                z.len(),
                self.ambient
            )));
        }
        let y = self.cycles.solve(z).ok_or(LinalgError::NotACycle)?;
        let mut c = self.reducer.mul_vec(&y);
        reduce_mod_orders(&mut c, &self.orders);
        Ok(c)
    }

    /// True when `z` is a cycle.
    pub fn contains(&self, z: &[BigInt]) -> bool {
        self.cycles.solve(z).is_some()
    }
}

/// Matrix (in presentation coordinates) of the map induced by an ambient
/// linear map `f: ambient(src) -> ambient(tgt)` that carries cycles to
/// cycles and boundaries to boundaries.
pub fn induced_map(
    src: &Subquotient,
    f: &IntMatrix,
    tgt: &Subquotient,
) -> Result<IntMatrix, LinalgError> {
    let cols: Result<Vec<Vec<BigInt>>, LinalgError> = (0..src.num_generators())
        .map(|g| tgt.reduce(&f.mul_vec(src.lift(g))))
        .collect();
    Ok(IntMatrix::from_columns(tgt.num_generators(), &cols?))
}

/// Kernel of a homomorphism between presented groups, as a subquotient of
/// the source coordinates.
pub fn kernel_group(
    map: &IntMatrix,
    src_orders: &[BigInt],
    tgt_orders: &[BigInt],
) -> Result<Subquotient, LinalgError> {
    Subquotient::homology(
        &IntMatrix::zeros(src_orders.len(), 0),
        src_orders,
        map,
        tgt_orders,
    )
}

/// Cokernel of a homomorphism between presented groups.
pub fn cokernel_group(map: &IntMatrix, tgt_orders: &[BigInt]) -> Result<Subquotient, LinalgError> {
    Subquotient::homology(
        map,
        tgt_orders,
        &IntMatrix::zeros(0, tgt_orders.len()),
        &[],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows)
    }

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn is_unimodular(u: &IntMatrix) -> bool {
        u.determinant().abs().is_one()
    }

    fn check_snf(a: &IntMatrix) -> Vec<BigInt> {
        let (u, d, v) = smith_normal_form(a);
        assert!(is_unimodular(&u) && is_unimodular(&v));
        assert_eq!(u.mul(a).mul(&v), d);
        let s = smith(a, Transforms::ALL);
        assert_eq!(s.u.unwrap().mul(&s.u_inv.unwrap()), IntMatrix::identity(a.rows()));
        assert_eq!(s.v.unwrap().mul(&s.v_inv.unwrap()), IntMatrix::identity(a.cols()));
        for w in s.invariants.windows(2) {
            assert!(w[1].is_multiple_of(&w[0]));
        }
        assert!(s.invariants.iter().all(|x| x.is_positive()));
        s.invariants
    }

    #[test]
    fn snf_identity_and_zero() {
        assert_eq!(check_snf(&IntMatrix::identity(2)), bi(&[1, 1]));
        let (_, d, _) = smith_normal_form(&IntMatrix::zeros(2, 3));
        assert!(d.is_zero());
        assert_eq!((d.rows(), d.cols()), (2, 3));
        let (u, d, v) = smith_normal_form(&IntMatrix::zeros(0, 3));
        assert_eq!((u.rows(), d.rows(), v.rows()), (0, 0, 3));
    }

    #[test]
    fn snf_small_example() {
        assert_eq!(check_snf(&m(&[vec![2, 4], vec![6, 8]])), bi(&[2, 4]));
    }

    #[test]
    fn cokernel_examples() {
        assert_eq!(
            cokernel(&m(&[vec![2]])),
            AbelianPresentation {
                free_rank: 0,
                torsion: bi(&[2])
            }
        );
        assert_eq!(cokernel(&m(&[vec![0]])), AbelianPresentation::free(1));
        assert_eq!(cokernel(&m(&[vec![2, 4], vec![6, 8]])).torsion, bi(&[2, 4]));
        assert_eq!(cokernel(&IntMatrix::zeros(3, 0)), AbelianPresentation::free(3));
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_basis(&m(&[vec![1, 0]])).columns(), vec![bi(&[0, 1])]);
        assert_eq!(kernel_basis(&IntMatrix::identity(3)).cols(), 0);
        assert_eq!(kernel_basis(&m(&[vec![2, -2]])).columns(), vec![bi(&[1, 1])]);
    }

    #[test]
    fn subquotient_examples() {
        let sq = Subquotient::new(2, &IntMatrix::identity(2), &m(&[vec![2], vec![0]])).unwrap();
        assert_eq!(
            sq.presentation(),
            &AbelianPresentation {
                free_rank: 1,
                torsion: bi(&[2])
            }
        );
        let sq = Subquotient::new(2, &IntMatrix::identity(2), &IntMatrix::identity(2)).unwrap();
        assert!(sq.presentation().is_trivial());
        let sq = Subquotient::new(2, &m(&[vec![1], vec![1]]), &m(&[vec![2], vec![2]])).unwrap();
        assert_eq!(sq.presentation().torsion, bi(&[2]));
        assert_eq!(sq.reduce(&bi(&[3, 3])).unwrap(), bi(&[1]));
        assert_eq!(sq.reduce(&bi(&[1, 0])), Err(LinalgError::NotACycle));
    }

    #[test]
    fn subquotient_rejects_bad_boundaries() {
        let err = Subquotient::new(2, &m(&[vec![1], vec![0]]), &m(&[vec![0], vec![1]]));
        assert_eq!(err.unwrap_err(), LinalgError::BoundariesNotInCycles);
    }

    #[test]
    fn subquotient_lift_reduce_roundtrip() {
        let cycles = m(&[vec![1, 0], vec![1, 2], vec![0, 3]]);
        let bounds = m(&[vec![2], vec![6], vec![6]]);
        let sq0 = Subquotient::new(3, &cycles, &bounds).unwrap();
        assert_eq!(sq0.presentation().to_string(), "Z + Z/2");
        let sq = Subquotient::new(3, &cycles, &bounds).unwrap();
        for g in 0..sq.num_generators() {
            let mut e = vec![BigInt::zero(); sq.num_generators()];
            e[g] = BigInt::one();
            assert_eq!(sq.reduce(sq.lift(g)).unwrap(), e);
        }
    }

    #[test]
    fn direct_summand_examples() {
        assert!(is_direct_summand(&m(&[vec![1, 0]])));
        assert!(!is_direct_summand(&m(&[vec![2, 0]])));
        assert!(is_direct_summand(&m(&[vec![2, 3]])));
        assert!(!is_direct_summand(&m(&[vec![1, 1], vec![2, 2]])));
    }

    #[test]
    fn completion_is_unimodular() {
        let b = m(&[vec![2, 3, 5]]);
        let p = complete_to_unimodular(&b).unwrap();
        assert_eq!(p.row(0), b.row(0));
        assert!(is_unimodular(&p));
        assert!(complete_to_unimodular(&m(&[vec![2, 4]])).is_none());
        let inv = inverse_unimodular(&p).unwrap();
        assert_eq!(p.mul(&inv), IntMatrix::identity(3));
        assert!(inverse_unimodular(&m(&[vec![2, 0], vec![0, 1]])).is_none());
    }

    #[test]
    fn group_homology_with_torsion() {
        // Z/4 --x2--> Z/4 --x2--> Z/4: homology at the middle is 0
        let two = m(&[vec![2]]);
        let h = Subquotient::homology(&two, &bi(&[4]), &two, &bi(&[4])).unwrap();
        assert!(h.presentation().is_trivial());
        // Z --x2--> Z --> 0 gives Z/2
        let h = Subquotient::homology(&two, &bi(&[0]), &IntMatrix::zeros(0, 1), &[]).unwrap();
        assert_eq!(h.presentation().torsion, bi(&[2]));
    }

    #[test]
    fn from_orders_is_canonical() {
        let g = AbelianPresentation::from_orders(&bi(&[2, 3, 0, 1]));
        assert_eq!(g.torsion, bi(&[6]));
        assert_eq!(g.free_rank, 1);
        assert_eq!(g.to_string(), "Z + Z/6");
    }

    #[test]
    fn bareiss_determinant() {
        assert_eq!(m(&[vec![2, 1], vec![7, 4]]).determinant(), BigInt::from(1));
        assert_eq!(
            m(&[vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 9]]).determinant(),
            BigInt::from(-3)
        );
    }

    #[test]
    fn rounded_division_shrinks_remainder() {
        for a in -40i64..=40 {
            for b in (-9i64..=9).filter(|&b| b != 0) {
                let q = round_div(&BigInt::from(a), &BigInt::from(b));
                let r = BigInt::from(a) - q * b;
                assert!(BigInt::from(2) * r.abs() <= BigInt::from(b.abs()), "{a} / {b}");
            }
        }
    }

    #[test]
    fn kernel_with_negative_entries() {
        let m = IntMatrix::from_rows(&[vec![-15, 18, 0], vec![2, 0, 18]]);
        let k = kernel_basis(&m);
        assert_eq!(k.cols(), 1);
        assert!(m.mul(&k).to_rows().iter().flatten().all(Zero::is_zero));
    }
}
