//! Sparse multivariate polynomials over the integers.
//!
//! A [`Poly`] lives in `Z[x_1, ..., x_n]` for a fixed variable count `n`.
//! Each variable has cohomological degree 2, so a monomial of total
//! exponent `e` sits in cohomological degree `2e`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::intlinalg::{is_direct_summand, smith, IntMatrix, Transforms};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: {0} vs {1}")]
    VariableCountMismatch(usize, usize),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("requested {count} vectors but only {n} variables")]
    TooManyVectors { count: usize, n: usize },
    #[error("rank deficient: rows are not independent")]
    RankDeficient,
}

pub type Exponents = Vec<u32>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponents, BigInt>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, 1)
    }

    /// The variable `x_{i+1}` (zero-based index `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, 1)
    }

    pub fn monomial(nvars: usize, exps: Exponents, c: impl Into<BigInt>) -> Self {
        assert_eq!(exps.len(), nvars, "exponent vector length");
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Poly { nvars, terms }
    }

    /// Linear form `sum coeffs[i] * x_{i+1}`.
    pub fn linear(coeffs: &[BigInt]) -> Self {
        let n = coeffs.len();
        let mut p = Poly::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, c.clone());
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[u32]) -> BigInt {
        self.terms.get(exps).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, exps: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Maximum total exponent, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// True when all terms have the same total exponent (zero counts).
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    /// Cohomological degree (twice the polynomial degree) if homogeneous
    /// and nonzero.
    pub fn cohomological_degree(&self) -> Option<i64> {
        if self.is_homogeneous() {
            self.degree().map(|d| 2 * d as i64)
        } else {
            None
        }
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_vars(other)?;
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn scalar_mul(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    fn check_vars(&self, other: &Poly) -> Result<(), PolyError> {
        if self.nvars == other.nvars {
            Ok(())
        } else {
            Err(PolyError::VariableCountMismatch(self.nvars, other.nvars))
        }
    }

    /// The augmentation: constant term.
    pub fn augmentation(&self) -> BigInt {
        self.coeff(&vec![0; self.nvars])
    }

    /// gcd of all coefficients, 0 for the zero polynomial.
    pub fn content(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Nonzero and not divisible by any integer > 1.
    pub fn is_z_reduced(&self) -> bool {
        !self.is_zero() && self.content().is_one()
    }

    /// Substitutes `images[i]` for the `i`-th variable. All images must share
    /// one variable count, which becomes the variable count of the result.
    pub fn substitute(&self, images: &[Poly], target_nvars: usize) -> Poly {
        assert_eq!(images.len(), self.nvars, "one image per variable");
        let mut powers: Vec<Vec<Poly>> = images
            .iter()
            .map(|p| {
                assert_eq!(p.nvars, target_nvars, "image variable count");
                vec![Poly::one(target_nvars)]
            })
            .collect();
        let mut out = Poly::zero(target_nvars);
        for (e, c) in &self.terms {
            let mut term = Poly::constant(target_nvars, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap() * &images[i];
                    powers[i].push(next);
                }
                term = &term * &powers[i][k as usize];
            }
            for (e2, c2) in term.terms {
                out.add_term(e2, c2);
            }
        }
        out
    }

    /// Re-embeds into `target_nvars` variables, sending variable `i` to
    /// variable `offset + i`.
    pub fn embed(&self, target_nvars: usize, offset: usize) -> Poly {
        assert!(offset + self.nvars <= target_nvars);
        let mut out = Poly::zero(target_nvars);
        for (e, c) in &self.terms {
            let mut e2 = vec![0; target_nvars];
            e2[offset..offset + self.nvars].copy_from_slice(e);
            out.add_term(e2, c.clone());
        }
        out
    }

    /// Parses text such as `"2*t1^2 - 3*t1*t2"`; `letter` is the variable
    /// prefix (`'t'` or `'s'`).
    pub fn parse(text: &str, nvars: usize, letter: char) -> Result<Poly, PolyError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            nvars,
            letter: letter as u8,
        };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(out)
    }

    /// Renders with the given variable letter.
    pub fn to_string_with(&self, letter: char) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut terms: Vec<(&Exponents, &BigInt)> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        let mut out = String::new();
        for (k, (e, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            let is_const = e.iter().all(|&x| x == 0);
            if !mag.is_one() || is_const {
                factors.push(mag.to_string());
            }
            for (i, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => factors.push(format!("{letter}{}", i + 1)),
                    _ => factors.push(format!("{letter}{}^{x}", i + 1)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_with('t'))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}]({})", self.nvars, self)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.checked_add(rhs).expect("polynomial add")
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.checked_sub(rhs).expect("polynomial sub")
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.checked_mul(rhs).expect("polynomial mul")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
    letter: u8,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<BigInt, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.number()?;
            let k: u32 = k
                .try_into()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => Ok(Poly::constant(self.nvars, self.number()?)),
            Some(c) if c == self.letter => {
                self.pos += 1;
                if !self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    return Err(self.err("expected variable index"));
                }
                let idx = self.number()?;
                let idx: usize = idx.try_into().map_err(|_| self.err("bad index"))?;
                if idx == 0 || idx > self.nvars {
                    return Err(self.err(&format!(
                        "variable index {idx} outside 1..={}",
                        self.nvars
                    )));
                }
                Ok(Poly::var(self.nvars, idx - 1))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// All exponent vectors of total degree `deg` in `nvars` variables, in
/// descending lexicographic order.
pub fn monomials_of_degree(nvars: usize, deg: u32) -> Vec<Exponents> {
    fn rec(nvars: usize, deg: u32, prefix: &mut Exponents, out: &mut Vec<Exponents>) {
        if prefix.len() + 1 == nvars {
            prefix.push(deg);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=deg).rev() {
            prefix.push(k);
            rec(nvars, deg - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(nvars, deg, &mut Vec::with_capacity(nvars), &mut out);
    out
}

/// An element of the degree-2 part of the polynomial ring: an integer
/// combination of the variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearForm(pub Vec<BigInt>);

impl LinearForm {
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut v = vec![BigInt::zero(); n];
        v[i] = BigInt::one();
        LinearForm(v)
    }

    pub fn from_i64(v: &[i64]) -> Self {
        LinearForm(v.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn to_poly(&self) -> Poly {
        Poly::linear(&self.0)
    }

    /// Extendable to a basis of `Z^n`.
    pub fn is_primitive(&self) -> bool {
        is_direct_summand(&IntMatrix::from_rows_with_cols(&[self.0.clone()], self.n()).unwrap())
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

/// The vectors `w_j = (s_1^j, ..., s_n^j)` for `j = 1..=count`, as
/// polynomials in `s_1..s_n`.
pub fn w_vectors(n: usize, count: usize) -> Result<Vec<Vec<Poly>>, PolyError> {
    if count > n {
        return Err(PolyError::TooManyVectors { count, n });
    }
    Ok((1..=count as u32)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let mut e = vec![0; n];
                    e[i] = j;
                    Poly::monomial(n, e, 1)
                })
                .collect()
        })
        .collect())
}

/// Determinant of a square matrix of polynomials, by Laplace expansion
/// memoised over column subsets.
pub fn poly_determinant(rows: &[Vec<Poly>], nvars: usize) -> Poly {
    let n = rows.len();
    assert!(n < 64, "matrix too large");
    fn rec(
        rows: &[Vec<Poly>],
        k: usize,
        mask: u64,
        nvars: usize,
        memo: &mut HashMap<u64, Poly>,
    ) -> Poly {
        if k == rows.len() {
            return Poly::one(nvars);
        }
        if let Some(p) = memo.get(&mask) {
            return p.clone();
        }
        let mut acc = Poly::zero(nvars);
        let mut position = 0;
        for j in 0..rows.len() {
            if mask & (1 << j) == 0 {
                continue;
            }
            let entry = &rows[k][j];
            if !entry.is_zero() {
                let minor = rec(rows, k + 1, mask & !(1 << j), nvars, memo);
                let term = entry * &minor;
                acc = if position % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            position += 1;
        }
        memo.insert(mask, acc.clone());
        acc
    }
    let full = if n == 0 { 0 } else { (1u64 << n) - 1 };
    rec(rows, 0, full, nvars, &mut HashMap::new())
}

/// Stacks the rows of `v` (an `i x n` integer matrix) on top of
/// `w_1, ..., w_{n-i}` and returns the determinant together with whether it
/// is Z-reduced. A Z-reduced determinant certifies that the span of `v`
/// and the `w`'s is everything after inverting Z-reduced elements.
pub fn complement_certificate(v: &IntMatrix) -> Result<(Poly, bool), PolyError> {
    let n = v.cols();
    let i = v.rows();
    if i > n || smith(v, Transforms::NONE).rank() != i {
        return Err(PolyError::RankDeficient);
    }
    let mut rows: Vec<Vec<Poly>> = (0..i)
        .map(|r| v.row(r).iter().map(|x| Poly::constant(n, x.clone())).collect())
        .collect();
    rows.extend(w_vectors(n, n - i)?);
    let det = poly_determinant(&rows, n);
    let ok = det.is_z_reduced();
    Ok((det, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Poly {
        Poly::parse(s, n, 't').unwrap()
    }

    fn sp(s: &str, n: usize) -> Poly {
        Poly::parse(s, n, 's').unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(&p("t1", 2) * &p("t2", 2), p("t1*t2", 2));
        assert_eq!(p("(t1+t2)^2", 2), p("t1^2 + 2*t1*t2 + t2^2", 2));
        assert!((&sp("2*s2 - 3*s1", 2) * &Poly::zero(2)).is_zero());
        assert_eq!(
            Poly::zero(1).checked_add(&Poly::zero(2)),
            Err(PolyError::VariableCountMismatch(1, 2))
        );
    }

    #[test]
    fn augmentation_examples() {
        assert_eq!(p("5 + t1", 1).augmentation(), BigInt::from(5));
        assert_eq!(p("t1*t2", 2).augmentation(), BigInt::zero());
        assert_eq!(Poly::zero(3).augmentation(), BigInt::zero());
    }

    #[test]
    fn content_and_reducedness() {
        assert_eq!(sp("2*s2 - 3*s1", 2).content(), BigInt::one());
        assert_eq!(sp("2*s1 + 4*s2", 2).content(), BigInt::from(2));
        assert_eq!(Poly::zero(2).content(), BigInt::zero());
        assert!(sp("s2", 2).is_z_reduced());
        assert!(!sp("2*s2", 2).is_z_reduced());
        assert!(sp("2*s2 - 3*s1", 2).is_z_reduced());
        assert!(!Poly::zero(2).is_z_reduced());
    }

    #[test]
    fn w_vector_examples() {
        let w = w_vectors(2, 1).unwrap();
        assert_eq!(w, vec![vec![sp("s1", 2), sp("s2", 2)]]);
        let w = w_vectors(3, 2).unwrap();
        assert_eq!(w[1], vec![sp("s1^2", 3), sp("s2^2", 3), sp("s3^2", 3)]);
        assert!(w_vectors(1, 0).unwrap().is_empty());
        assert!(w_vectors(2, 3).is_err());
    }

    #[test]
    fn certificate_examples() {
        let (d, ok) = complement_certificate(&IntMatrix::from_rows(&[vec![1, 0]])).unwrap();
        assert_eq!((d, ok), (sp("s2", 2), true));
        let (d, ok) = complement_certificate(&IntMatrix::from_rows(&[vec![2, 0]])).unwrap();
        assert_eq!((d, ok), (sp("2*s2", 2), false));
        let (d, ok) = complement_certificate(&IntMatrix::from_rows(&[vec![2, 3]])).unwrap();
        assert_eq!((d, ok), (sp("2*s2 - 3*s1", 2), true));
        assert_eq!(
            complement_certificate(&IntMatrix::from_rows(&[vec![1, 1], vec![2, 2]])),
            Err(PolyError::RankDeficient)
        );
    }

    #[test]
    fn printing_is_canonical() {
        let q = p("-3*t2*t1 + 2*t1^2", 2);
        assert_eq!(q.to_string(), "2*t1^2 - 3*t1*t2");
        assert_eq!(p("-t1 + 1", 1).to_string(), "-t1 + 1");
        assert_eq!(Poly::zero(1).to_string(), "0");
        assert_eq!(p("t1 - t1", 1).to_string(), "0");
    }

    #[test]
    fn parse_errors() {
        assert!(Poly::parse("t3", 2, 't').is_err());
        assert!(Poly::parse("t1 +", 2, 't').is_err());
        assert!(Poly::parse("s1", 2, 't').is_err());
        assert!(Poly::parse("t1 t2", 2, 't').is_err());
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials_of_degree(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(monomials_of_degree(3, 3).len(), 10);
        assert_eq!(monomials_of_degree(0, 0), vec![Vec::<u32>::new()]);
        assert!(monomials_of_degree(0, 1).is_empty());
    }

    #[test]
    fn substitution() {
        // t1 -> t1 + t2, t2 -> t2
        let images = vec![p("t1 + t2", 2), p("t2", 2)];
        assert_eq!(p("t1^2", 2).substitute(&images, 2), p("(t1+t2)^2", 2));
        assert_eq!(p("t1", 1).embed(3, 2), p("t3", 3));
    }

    #[test]
    fn homogeneity() {
        assert!(p("t1^2 - t1*t2", 2).is_homogeneous());
        assert!(!p("t1 + 1", 1).is_homogeneous());
        assert_eq!(p("3*t1*t2", 2).cohomological_degree(), Some(4));
        assert_eq!(Poly::zero(2).cohomological_degree(), None);
    }
}
