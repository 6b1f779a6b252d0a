//! Built-in fixture complexes with expected-value tables, and seeded random
//! generators for property tests.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abcheck::{ABReport, Position};
use crate::ecw::{product, validate, Cell, EcwError, Entry, EquivariantCW, Isotropy};
use crate::grmod::{from_presentation, GradedAbelianGroup, GradedModule};
use crate::intlinalg::{is_direct_summand, AbelianPresentation, IntMatrix};
use crate::polyring::{monomials_of_degree, Poly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("unknown fixture \"{0}\"")]
    Unknown(String),
    #[error("fixture \"{0}\" takes no parameters")]
    NoParameters(String),
    #[error("bad fixture parameter: {0}")]
    BadParameter(String),
    #[error("fixture \"{name}\" is invalid: {source}")]
    Invalid { name: String, source: EcwError },
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Stated in the reference literature for this example.
    Reference,
    /// Follows immediately from the definitions.
    Trivial,
    /// Computed independently; `oracle` names how.
    Derived,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedGroup {
    pub degree: i64,
    pub free_rank: usize,
    #[serde(default)]
    pub torsion: Vec<u64>,
    pub source: Source,
    #[serde(default)]
    pub oracle: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedVerdict {
    /// One of `iii`, `iv`, `v`, `i_necessary`, `extended`, or
    /// `position:<p>` for the exactness verdict of one AB position.
    pub key: String,
    pub value: String,
    pub source: Source,
    #[serde(default)]
    pub oracle: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    #[serde(default)]
    pub cohomology: Vec<ExpectedGroup>,
    #[serde(default)]
    pub verdicts: Vec<ExpectedVerdict>,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub ecw: EquivariantCW,
    pub expected: Expected,
    /// Ordinary cohomology of the underlying space, where it is shipped.
    pub hx: Option<GradedAbelianGroup>,
}

struct Stored {
    name: &'static str,
    ecw: &'static str,
    expected: &'static str,
}

const STORED: &[Stored] = &[
    Stored {
        name: "point",
        ecw: include_str!("../fixtures/point.ecw.json"),
        expected: include_str!("../fixtures/point.expected.json"),
    },
    Stored {
        name: "s2-rotation",
        ecw: include_str!("../fixtures/s2-rotation.ecw.json"),
        expected: include_str!("../fixtures/s2-rotation.expected.json"),
    },
    Stored {
        name: "s2-double-rotation",
        ecw: include_str!("../fixtures/s2-double-rotation.ecw.json"),
        expected: include_str!("../fixtures/s2-double-rotation.expected.json"),
    },
    Stored {
        name: "rp2",
        ecw: include_str!("../fixtures/rp2.ecw.json"),
        expected: include_str!("../fixtures/rp2.expected.json"),
    },
    Stored {
        name: "example2",
        ecw: include_str!("../fixtures/example2.ecw.json"),
        expected: include_str!("../fixtures/example2.expected.json"),
    },
    Stored {
        name: "example4",
        ecw: include_str!("../fixtures/example4.ecw.json"),
        expected: include_str!("../fixtures/example4.expected.json"),
    },
];

const EXAMPLE2_HX: &str = include_str!("../fixtures/example2.hx.json");
const S2XS2_EXPECTED: &str = include_str!("../fixtures/s2xs2-double.expected.json");

/// Names accepted by [`load`]. `sigma-t` takes an optional rank `n`
/// (default 2).
pub fn list() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = STORED.iter().map(|s| s.name).collect();
    names.extend(["sigma-t", "s2xs2-double"]);
    names
}

/// Differences between a fixture's expected values and a report, restricted
/// to the report's window. Empty when everything matches.
pub fn mismatches(f: &Fixture, report: &ABReport) -> Vec<String> {
    let mut out = Vec::new();
    for g in &f.expected.cohomology {
        let Some(got) = report.cohomology.get(g.degree) else { continue };
        let want = AbelianPresentation {
            free_rank: g.free_rank,
            torsion: g.torsion.iter().map(|&m| BigInt::from(m)).collect(),
        };
        if *got != want {
            out.push(format!("H_T^{}: expected {want}, got {got}", g.degree));
        }
    }
    for v in &f.expected.verdicts {
        let c = &report.conditions;
        let got = match v.key.as_str() {
            "iii" => c.iii.to_string(),
            "iv" => c.iv.to_string(),
            "v" => c.v.to_string(),
            "i_necessary" => c.i_necessary.to_string(),
            "extended" => c.extended.to_string(),
            key => match key.strip_prefix("position:") {
                Some("aug") => report.positions.verdict_at(Position::Aug).to_string(),
                Some(p) => match p.parse() {
                    Ok(p) => report.positions.verdict_at(Position::Level(p)).to_string(),
                    Err(_) => format!("unknown key {key}"),
                },
                None => format!("unknown key {key}"),
            },
        };
        if got != v.value {
            out.push(format!("{}: expected {}, got {got}", v.key, v.value));
        }
    }
    out
}

/// The suspension of `T^n` with its two fixed suspension points.
pub fn sigma_t(n: usize) -> EquivariantCW {
    EquivariantCW {
        n,
        cells: vec![
            Cell {
                id: "N".into(),
                disc_dim: 0,
                iso: Isotropy::fixed(n),
            },
            Cell {
                id: "S".into(),
                disc_dim: 0,
                iso: Isotropy::fixed(n),
            },
            Cell {
                id: "e".into(),
                disc_dim: 1,
                iso: Isotropy::free(n),
            },
        ],
        differential: vec![
            Entry::new("N", "e", Poly::one(n)),
            Entry::new("S", "e", Poly::constant(n, -1)),
        ],
    }
}

fn parse_stored(s: &Stored) -> (EquivariantCW, Expected) {
    let ecw = EquivariantCW::from_json_str(s.ecw).expect("stored fixture parses");
    let expected = serde_json::from_str(s.expected).expect("stored expectations parse");
    (ecw, expected)
}

/// Loads a validated fixture. `n` is only accepted for `sigma-t`.
/// Expected values for `sigma-t` from `H_T = ker(ε, ε) ⊂ A ⊕ A`.
pub fn sigma_t_expected(n: usize, d_max: i64) -> Expected {
    let oracle = Some("monomial count of ker(ε, ε) in A + A".to_string());
    let cohomology = (0..=d_max)
        .map(|d| {
            let free_rank = match d {
                0 => 1,
                d if d % 2 == 1 => 0,
                d => {
                    let k = (d / 2) as usize;
                    2 * (1..n).fold(1usize, |acc, i| acc * (k + i) / i)
                }
            };
            ExpectedGroup {
                degree: d,
                free_rank,
                torsion: Vec::new(),
                source: Source::Derived,
                oracle: oracle.clone(),
            }
        })
        .collect();
    let verdict = |key: String, value: &str| ExpectedVerdict {
        key,
        value: value.into(),
        source: Source::Reference,
        oracle: None,
    };
    let mut verdicts = vec![verdict("position:aug".into(), "holds")];
    if n == 1 {
        verdicts.push(verdict("position:0".into(), "holds"));
        verdicts.push(verdict("position:1".into(), "holds"));
        verdicts.push(verdict("v".into(), "holds"));
    } else {
        verdicts.push(verdict("position:0".into(), "fails"));
        verdicts.push(verdict(format!("position:{n}"), "fails"));
        verdicts.push(verdict("v".into(), "fails"));
    }
    Expected { cohomology, verdicts }
}

pub fn load_with(name: &str, n: Option<usize>) -> Result<Fixture, CorpusError> {
    let (ecw, expected, hx) = match name {
        "sigma-t" => {
            let n = n.unwrap_or(2);
            if n == 0 {
                return Err(CorpusError::BadParameter("sigma-t needs n >= 1".into()));
            }
            (sigma_t(n), sigma_t_expected(n, 12), None)
        }
        "s2xs2-double" => {
            if n.is_some() {
                return Err(CorpusError::NoParameters(name.into()));
            }
            let (s2d, _) = parse_stored(&STORED[2]);
            (product(&s2d, &s2d), serde_json::from_str(S2XS2_EXPECTED).expect("parse"), None)
        }
        _ => {
            let s = STORED
                .iter()
                .find(|s| s.name == name)
                .ok_or_else(|| CorpusError::Unknown(name.into()))?;
            if n.is_some() {
                return Err(CorpusError::NoParameters(name.into()));
            }
            let (ecw, expected) = parse_stored(s);
            let hx = (name == "example2")
                .then(|| serde_json::from_str(EXAMPLE2_HX).expect("stored cohomology parses"));
            (ecw, expected, hx)
        }
    };
    let rep = validate(&ecw);
    if !rep.is_ok() {
        return Err(CorpusError::Invalid {
            name: name.into(),
            source: EcwError::Invalid(rep),
        });
    }
    Ok(Fixture {
        name: name.into(),
        ecw,
        expected,
        hx,
    })
}

pub fn load(name: &str) -> Result<Fixture, CorpusError> {
    load_with(name, None)
}

/// Parses `<name>` or `<name>?n=<rank>`.
pub fn parse_address(addr: &str) -> Result<(String, Option<usize>), CorpusError> {
    match addr.split_once('?') {
        None => Ok((addr.to_string(), None)),
        Some((name, query)) => {
            let value = query
                .strip_prefix("n=")
                .ok_or_else(|| CorpusError::BadParameter(query.into()))?;
            let n = value
                .parse()
                .map_err(|_| CorpusError::BadParameter(query.into()))?;
            Ok((name.to_string(), Some(n)))
        }
    }
}

/// A random homogeneous presentation: generator degrees and relations.
#[derive(Clone, Debug)]
pub struct RandomPresentation {
    pub n: usize,
    pub gen_degrees: Vec<i64>,
    pub relations: Vec<Vec<Poly>>,
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> Poly {
    let monos = monomials_of_degree(n, deg);
    let mut p = Poly::zero(n);
    let terms = rng.gen_range(1..=monos.len().min(2));
    for e in monos.choose_multiple(rng, terms) {
        let c: i64 = *[-2, -1, 1, 1, 2, 3].choose(rng).unwrap();
        p.add_term(e.clone(), BigInt::from(c));
    }
    p
}

/// Seeded presentation with at most `size` generators and `size` relations.
pub fn random_presentation(seed: u64, n: usize, size: usize) -> RandomPresentation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = rng.gen_range(1..=size.max(1));
    let gen_degrees: Vec<i64> = (0..g).map(|_| *[0i64, 0, 1, 2, 2, 4].choose(&mut rng).unwrap()).collect();
    let nrel = rng.gen_range(0..=size);
    let mut relations = Vec::new();
    for _ in 0..nrel {
        let parity = gen_degrees[rng.gen_range(0..g)] % 2;
        let base = gen_degrees.iter().copied().filter(|d| d % 2 == parity).max().unwrap();
        let e = base + 2 * rng.gen_range(0..=2) as i64;
        let mut rel = vec![Poly::zero(n); g];
        let mut any = false;
        for k in 0..g {
            let rest = e - gen_degrees[k];
            if rest < 0 || rest % 2 != 0 || !rng.gen_bool(0.6) {
                continue;
            }
            rel[k] = random_poly(&mut rng, n, (rest / 2) as u32);
            if rng.gen_bool(0.3) {
                // integer multiples make torsion and Tor-free cases likely
                rel[k] = rel[k].scalar_mul(&BigInt::from(*[2, 3].choose(&mut rng).unwrap()));
            }
            any = true;
        }
        if any {
            relations.push(rel);
        }
    }
    RandomPresentation {
        n,
        gen_degrees,
        relations,
    }
}

/// Seeded graded module of at most `size` generators, truncated at `d_max`.
pub fn random_module(seed: u64, n: usize, size: usize, d_max: i64) -> GradedModule {
    let p = random_presentation(seed, n, size);
    from_presentation(n, &p.gen_degrees, &p.relations, d_max).expect("homogeneous by construction")
}

/// Random unimodular-extendable rows: the first `r` rows of a random
/// product of elementary matrices.
fn random_summand(rng: &mut ChaCha8Rng, n: usize, r: usize) -> IntMatrix {
    let mut m: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    for _ in 0..2 * n {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let c = rng.gen_range(-1..=1);
        for j in 0..n {
            m[a][j] += c * m[b][j];
        }
    }
    m.shuffle(rng);
    let rows: Vec<Vec<i64>> = m.into_iter().take(r).collect();
    let v = IntMatrix::from_rows_with_cols(&rows, n).expect("rows");
    debug_assert!(is_direct_summand(&v));
    v
}

/// Seeded `r x n` matrix whose rows span a direct summand of `Z^n`.
pub fn random_summand_matrix(seed: u64, n: usize, r: usize) -> IntMatrix {
    random_summand(&mut ChaCha8Rng::seed_from_u64(seed), n, r)
}

fn random_cells(rng: &mut ChaCha8Rng, n: usize, count: usize, fixed_only: bool) -> Vec<Cell> {
    (0..count)
        .map(|i| {
            let r = if fixed_only { 0 } else { rng.gen_range(0..=n) };
            Cell {
                id: format!("c{i}"),
                disc_dim: rng.gen_range(0..=2),
                iso: Isotropy {
                    v: random_summand(rng, n, r),
                    torsion: Vec::new(),
                },
            }
        })
        .collect()
}

/// Integer entries on `j -> j + 1` pairs with isotropy containment, pruned
/// until `d² = 0`.
fn random_integer_differential(rng: &mut ChaCha8Rng, e: &mut EquivariantCW) {
    let cells = e.cells.clone();
    let k = cells.len();
    let mut coeff = vec![vec![0i64; k]; k];
    for (a, ca) in cells.iter().enumerate() {
        for (b, cb) in cells.iter().enumerate() {
            if cb.disc_dim != ca.disc_dim + 1 || !rng.gen_bool(0.6) {
                continue;
            }
            let ring = crate::ecw::CoeffBasis::new(&cb.iso, e.n).expect("summand");
            if ring.contains_ideal_of(&ca.iso) {
                coeff[a][b] = *[-2, -1, 1, 1, 2].choose(rng).unwrap();
            }
        }
    }
    loop {
        let mut bad = None;
        'outer: for a in 0..k {
            for c in 0..k {
                let s: i64 = (0..k).map(|b| coeff[a][b] * coeff[b][c]).sum();
                if s != 0 {
                    bad = Some((a, c));
                    break 'outer;
                }
            }
        }
        let Some((a, c)) = bad else { break };
        let mids: Vec<usize> = (0..k).filter(|&b| coeff[a][b] != 0 && coeff[b][c] != 0).collect();
        let b = *mids.choose(rng).unwrap();
        if rng.gen_bool(0.5) {
            coeff[a][b] = 0;
        } else {
            coeff[b][c] = 0;
        }
    }
    for a in 0..k {
        for b in 0..k {
            if coeff[a][b] != 0 {
                e.differential.push(Entry::new(
                    cells[a].id.clone(),
                    cells[b].id.clone(),
                    Poly::constant(e.n, coeff[a][b]),
                ));
            }
        }
    }
}

/// Seeded complex with connected isotropy, `cells` cells and integer
/// incidences between consecutive disc dimensions.
pub fn random_ecw(seed: u64, n: usize, cells: usize) -> EquivariantCW {
    random_ecw_impl(seed, n, cells, false)
}

/// As [`random_ecw`], but every cell is fixed (trivial action).
pub fn random_trivial_ecw(seed: u64, n: usize, cells: usize) -> EquivariantCW {
    random_ecw_impl(seed, n, cells, true)
}

fn random_ecw_impl(seed: u64, n: usize, cells: usize, fixed_only: bool) -> EquivariantCW {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = EquivariantCW {
        n,
        cells: random_cells(&mut rng, n, cells, fixed_only),
        differential: Vec::new(),
    };
    random_integer_differential(&mut rng, &mut e);
    debug_assert!(validate(&e).is_ok());
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addresses() {
        assert_eq!(parse_address("rp2").unwrap(), ("rp2".into(), None));
        assert_eq!(parse_address("sigma-t?n=3").unwrap(), ("sigma-t".into(), Some(3)));
        assert!(parse_address("sigma-t?k=3").is_err());
    }

    #[test]
    fn unknown_and_parameters() {
        assert_eq!(load("nope").unwrap_err(), CorpusError::Unknown("nope".into()));
        assert!(matches!(load_with("rp2", Some(2)), Err(CorpusError::NoParameters(_))));
        assert_eq!(load_with("sigma-t", Some(3)).unwrap().ecw.n, 3);
    }

    #[test]
    fn every_fixture_loads() {
        for name in list() {
            load(name).unwrap();
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_module(0, 1, 1, 8), random_module(0, 1, 1, 8));
        assert_eq!(random_ecw(5, 2, 6), random_ecw(5, 2, 6));
        for seed in 0..20 {
            assert!(validate(&random_ecw(seed, 2, 6)).is_ok());
            let t = random_trivial_ecw(seed, 2, 4);
            assert!(t.cells.iter().all(|c| c.iso.orbit_dim() == 0));
        }
    }
}
