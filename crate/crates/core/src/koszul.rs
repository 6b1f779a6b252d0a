//! Koszul complexes and `Tor_j(M, Z)` over polynomial subrings generated by
//! integer linear forms.
//!
//! In total degree `d` the `j`-th Koszul module is `M_{d-2j} ⊗ Λ^j` with
//! basis ordered by exterior subset (lexicographic), then by the generators
//! of `M_{d-2j}`. The differential is
//! `d(m ⊗ e_S) = Σ_a (-1)^a (ℓ_{s_a} m) ⊗ e_{S \ s_a}` with `a` counted
//! from zero.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::grmod::{GradedAbelianGroup, GradedModule};
use crate::intlinalg::{reduce_mod_orders, smith, AbelianPresentation, IntMatrix, Subquotient, Transforms};
use crate::polyring::LinearForm;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KoszulError {
    #[error("linear forms are not independent")]
    DependentForms,
    #[error("form has {0} coefficients but the module has {1} variables")]
    VariableMismatch(usize, usize),
    #[error("exterior degree {0} exceeds the number of forms {1}")]
    DegreeTooLarge(usize, usize),
}

fn subsets(r: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, r: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for s in start..r {
            cur.push(s);
            rec(s + 1, r, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, r, j, &mut Vec::new(), &mut out);
    out
}

/// The Koszul complex of a module on a list of independent forms.
#[derive(Clone, Debug)]
pub struct KoszulSlice<'a> {
    module: &'a GradedModule,
    forms: Vec<LinearForm>,
    subsets: Vec<Vec<Vec<usize>>>,
}

impl<'a> KoszulSlice<'a> {
    pub fn new(module: &'a GradedModule, forms: &[LinearForm]) -> Result<Self, KoszulError> {
        for f in forms {
            if f.n() != module.n() {
                return Err(KoszulError::VariableMismatch(f.n(), module.n()));
            }
        }
        if !forms.is_empty() {
            let rows: Vec<Vec<BigInt>> = forms.iter().map(|f| f.0.clone()).collect();
            let m = IntMatrix::from_rows(&rows);
            if smith(&m, Transforms::NONE).rank() < forms.len() {
                return Err(KoszulError::DependentForms);
            }
        }
        let r = forms.len();
        Ok(KoszulSlice {
            module,
            forms: forms.to_vec(),
            subsets: (0..=r).map(|j| subsets(r, j)).collect(),
        })
    }

    pub fn rank(&self) -> usize {
        self.forms.len()
    }

    /// Per-coordinate orders of `K_j` in total degree `d`.
    pub fn orders(&self, j: usize, d: i64) -> Vec<BigInt> {
        if j > self.rank() {
            return Vec::new();
        }
        let g = self.module.orders(d - 2 * j as i64);
        let mut out = Vec::with_capacity(g.len() * self.subsets[j].len());
        for _ in &self.subsets[j] {
            out.extend(g.iter().cloned());
        }
        out
    }

    /// `K_j(d) -> K_{j-1}(d)`, or `None` when it leaves the module window.
    pub fn differential(&self, j: usize, d: i64) -> Option<IntMatrix> {
        let r = self.rank();
        if j == 0 || j > r {
            let rows = if j == 0 { 0 } else { self.orders(j - 1, d).len() };
            return Some(IntMatrix::zeros(rows, self.orders(j, d).len()));
        }
        let src_deg = d - 2 * j as i64;
        let gs = self.module.num_generators(src_deg);
        let gt = self.module.num_generators(src_deg + 2);
        let mults: Vec<IntMatrix> = self
            .forms
            .iter()
            .map(|f| self.module.mult_by_form(f, src_deg))
            .collect::<Option<_>>()?;
        let targets = &self.subsets[j - 1];
        let mut out = IntMatrix::zeros(gt * targets.len(), gs * self.subsets[j].len());
        for (si, s) in self.subsets[j].iter().enumerate() {
            for a in 0..s.len() {
                let mut rest = s.clone();
                let removed = rest.remove(a);
                let ti = targets.iter().position(|t| *t == rest).unwrap();
                let block = &mults[removed];
                let sign = if a % 2 == 0 { 1 } else { -1 };
                for row in 0..gt {
                    for col in 0..gs {
                        let v = block.get(row, col);
                        if !v.is_zero() {
                            out.set(ti * gt + row, si * gs + col, v * sign);
                        }
                    }
                }
            }
        }
        Some(out)
    }

    /// `d_{j-1} ∘ d_j = 0` in total degree `d`, modulo torsion relations.
    pub fn check_d_squared(&self, j: usize, d: i64) -> Option<bool> {
        if j < 2 {
            return Some(true);
        }
        let comp = self.differential(j - 1, d)?.mul(&self.differential(j, d)?);
        let tgt = self.orders(j - 2, d);
        Some((0..comp.cols()).all(|c| {
            let mut col = comp.column(c);
            reduce_mod_orders(&mut col, &tgt);
            col.iter().all(Zero::is_zero)
        }))
    }

    /// Koszul homology at `K_j` in total degree `d`.
    pub fn homology(&self, j: usize, d: i64) -> Option<Subquotient> {
        let incoming = self.differential(j + 1, d)?;
        let outgoing = self.differential(j, d)?;
        let next = if j == 0 { Vec::new() } else { self.orders(j - 1, d) };
        Some(
            Subquotient::homology(&incoming, &self.orders(j, d), &outgoing, &next)
                .expect("Koszul homology"),
        )
    }
}

/// Reliable output window of `Tor_j` for a module truncated at `d_max`.
pub fn tor_window(m: &GradedModule, j: usize) -> (i64, i64) {
    (m.d_min(), m.d_max() - 2 * j as i64)
}

/// `Tor_j` over `Z[forms]` with coefficients in `Z`, degreewise on the
/// reliable window `[d_min, d_max - 2j]`.
pub fn tor(m: &GradedModule, forms: &[LinearForm], j: usize) -> Result<GradedAbelianGroup, KoszulError> {
    let k = KoszulSlice::new(m, forms)?;
    tor_with(&k, j)
}

fn tor_with(k: &KoszulSlice<'_>, j: usize) -> Result<GradedAbelianGroup, KoszulError> {
    if j > k.rank() {
        return Err(KoszulError::DegreeTooLarge(j, k.rank()));
    }
    let (lo, hi) = tor_window(k.module, j);
    let groups: Vec<AbelianPresentation> = (lo..=hi)
        .map(|d| k.homology(j, d).expect("inside window").presentation().clone())
        .collect();
    Ok(GradedAbelianGroup::new(lo, groups))
}

/// `Tor_j` for `j = 0..=j_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorTable {
    pub forms: Vec<String>,
    pub rows: Vec<GradedAbelianGroup>,
}

impl TorTable {
    /// First `(j, degree, group)` with `j >= 1` and a nonzero group.
    pub fn first_nonzero(&self) -> Option<(usize, i64, AbelianPresentation)> {
        self.rows.iter().enumerate().skip(1).find_map(|(j, row)| {
            row.iter()
                .find(|(_, g)| !g.is_trivial())
                .map(|(d, g)| (j, d, g.clone()))
        })
    }

    pub fn row_vanishes(&self, j: usize) -> bool {
        self.rows.get(j).is_some_and(GradedAbelianGroup::is_zero)
    }
}

pub fn tor_table(m: &GradedModule, forms: &[LinearForm], j_max: usize) -> Result<TorTable, KoszulError> {
    let k = KoszulSlice::new(m, forms)?;
    if j_max > k.rank() {
        return Err(KoszulError::DegreeTooLarge(j_max, k.rank()));
    }
    let rows = (0..=j_max).map(|j| tor_with(&k, j)).collect::<Result<_, _>>()?;
    Ok(TorTable {
        forms: forms.iter().map(ToString::to_string).collect(),
        rows,
    })
}

/// The coordinate forms `t_1, ..., t_n`.
pub fn coordinate_forms(n: usize) -> Vec<LinearForm> {
    (0..n).map(|i| LinearForm::coordinate(n, i)).collect()
}
