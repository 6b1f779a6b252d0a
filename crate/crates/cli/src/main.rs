use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eqcohom::abcheck::{
    condition_report, exactness_report, ABSequence, Position, ReportOptions, TorRow, Verdict,
};
use eqcohom::corpus::{self, random_ecw, random_module};
use eqcohom::ecw::{cohomology, validate, EcwError, EquivariantCW};
use eqcohom::grmod::{candidate_forms, default_candidates, GradedAbelianGroup};
use eqcohom::koszul::{coordinate_forms, tor_table};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "eqcohom", version, about = "Integral equivariant cohomology of torus-CW complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Top cohomological degree; even and at least 4.
    #[arg(long, global = true, default_value_t = 12)]
    max_degree: i64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Candidates {
    /// Coordinate forms and primitive forms with coefficients in {-1, 0, 1}.
    Default,
    /// Primitive forms with coefficients in {-2, ..., 2}.
    Exhaustive,
}

#[derive(Subcommand)]
enum Command {
    /// Check an ECW file against the schema and the cochain invariants.
    Validate { input: String },
    /// H_T^* on [0, max-degree].
    Cohomology { input: String },
    /// Tor_j of H_T^* over the coordinate forms.
    Tor { input: String },
    /// Exactness of the Atiyah-Bredon sequence, per position and degree.
    Ab { input: String },
    /// Full report: cohomology, exactness, Tor, conditions, extendedness.
    Check {
        input: String,
        /// Ordinary cohomology H^*(X) as a graded group JSON file.
        #[arg(long)]
        hx: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Candidates::Default)]
        candidates: Candidates,
    },
    /// Print a built-in fixture as ECW JSON, or list them.
    Example { name: Option<String> },
    /// Run the fixture corpus and a seeded property sample.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct InputError(String);

impl From<EcwError> for InputError {
    fn from(e: EcwError) -> Self {
        match e {
            EcwError::Schema { pointer, message } => {
                let p = if pointer.is_empty() { "/".to_string() } else { pointer };
                InputError(format!("{p}: {message}"))
            }
            EcwError::Invalid(rep) => InputError(
                rep.violations
                    .iter()
                    .map(|v| format!("{}: {}", v.location, v.message))
                    .collect::<Vec<_>>()
                    .join("\n"),
            ),
            other => InputError(other.to_string()),
        }
    }
}

impl From<corpus::CorpusError> for InputError {
    fn from(e: corpus::CorpusError) -> Self {
        InputError(e.to_string())
    }
}

struct Loaded {
    ecw: EquivariantCW,
    hx: Option<GradedAbelianGroup>,
}

fn load(input: &str) -> Result<Loaded, InputError> {
    if let Some(addr) = input.strip_prefix("example:") {
        let (name, n) = corpus::parse_address(addr)?;
        let f = corpus::load_with(&name, n)?;
        return Ok(Loaded { ecw: f.ecw, hx: f.hx });
    }
    let text = std::fs::read_to_string(input).map_err(|e| InputError(format!("{input}: {e}")))?;
    Ok(Loaded {
        ecw: EquivariantCW::from_json_str(&text)?,
        hx: None,
    })
}

fn load_valid(input: &str) -> Result<Loaded, InputError> {
    let l = load(input)?;
    let rep = validate(&l.ecw);
    if !rep.is_ok() {
        return Err(EcwError::Invalid(rep).into());
    }
    Ok(l)
}

fn read_hx(path: &PathBuf) -> Result<GradedAbelianGroup, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

struct Output {
    text: String,
    json: Value,
    failed: bool,
}

fn run(cli: &Cli) -> Result<Output, InputError> {
    let d = cli.max_degree;
    match &cli.command {
        Command::Validate { input } => {
            let l = load(input)?;
            let rep = validate(&l.ecw);
            if !rep.is_ok() {
                return Err(EcwError::Invalid(rep).into());
            }
            Ok(Output {
                text: format!("ok: {} cells, {} entries\n", l.ecw.cells.len(), l.ecw.differential.len()),
                json: json!({ "valid": true, "violations": [] }),
                failed: false,
            })
        }
        Command::Cohomology { input } => {
            let l = load_valid(input)?;
            let m = cohomology(&l.ecw, d)?;
            let text: String = m.underlying().iter().map(|(k, g)| format!("H_T^{k}: {g}\n")).collect();
            Ok(Output {
                text,
                json: serde_json::to_value(&m).expect("serialisable"),
                failed: false,
            })
        }
        Command::Tor { input } => {
            let l = load_valid(input)?;
            let m = cohomology(&l.ecw, d)?;
            let n = l.ecw.n;
            let table = tor_table(&m, &coordinate_forms(n), n).expect("coordinate forms");
            let text: String = TorRow::from_table(&table).iter().map(|r| r.to_line() + "\n").collect();
            Ok(Output {
                text,
                json: serde_json::to_value(&table).expect("serialisable"),
                failed: false,
            })
        }
        Command::Ab { input } => {
            let l = load_valid(input)?;
            let seq = ABSequence::build(&l.ecw, d)?;
            let rep = exactness_report(&seq);
            let text: String = rep.lines().into_iter().map(|s| s + "\n").collect();
            let aug = seq.module(Position::Aug);
            Ok(Output {
                text,
                json: json!({
                    "positions": rep,
                    "reliable_window": aug.window(),
                    "overall": rep.overall(),
                }),
                failed: rep.overall() == Verdict::Fails,
            })
        }
        Command::Check { input, hx, candidates } => {
            let l = load_valid(input)?;
            let hx = match hx {
                Some(p) => Some(read_hx(p)?),
                None => l.hx,
            };
            let n = l.ecw.n;
            let forms = match candidates {
                Candidates::Default => default_candidates(n),
                Candidates::Exhaustive => candidate_forms(n, 2),
            };
            let opts = ReportOptions {
                hx,
                probe_candidates: Some(forms),
            };
            let r = condition_report(&l.ecw, d, &opts)?;
            Ok(Output {
                text: r.to_text(),
                json: serde_json::to_value(&r).expect("serialisable"),
                failed: r.has_definite_failure(),
            })
        }
        Command::Example { name } => match name {
            None => {
                let names = corpus::list();
                Ok(Output {
                    text: names.iter().map(|s| format!("{s}\n")).collect(),
                    json: json!(names),
                    failed: false,
                })
            }
            Some(name) => {
                let addr = name.strip_prefix("example:").unwrap_or(name);
                let (name, n) = corpus::parse_address(addr)?;
                let f = corpus::load_with(&name, n)?;
                Ok(Output {
                    text: f.ecw.to_json_string() + "\n",
                    json: f.ecw.to_value(),
                    failed: false,
                })
            }
        },
        Command::Selftest { seed } => Ok(selftest(d, *seed)),
    }
}

fn selftest(d: i64, seed: u64) -> Output {
    let mut text = String::new();
    let mut results = Vec::new();
    let mut failed = false;
    let mut fixtures: Vec<(String, Option<usize>)> = corpus::list()
        .into_iter()
        .filter(|s| *s != "sigma-t")
        .map(|s| (s.to_string(), None))
        .collect();
    fixtures.extend((1..=3).map(|n| ("sigma-t".to_string(), Some(n))));
    for (name, n) in fixtures {
        let f = corpus::load_with(&name, n).expect("shipped fixture");
        let opts = ReportOptions {
            hx: f.hx.clone(),
            probe_candidates: None,
        };
        let label = match n {
            Some(n) => format!("{name}?n={n}"),
            None => name.clone(),
        };
        let bad = match condition_report(&f.ecw, d, &opts) {
            Ok(r) => corpus::mismatches(&f, &r),
            Err(e) => vec![e.to_string()],
        };
        failed |= !bad.is_empty();
        text.push_str(&format!("{label}: {}\n", if bad.is_empty() { "ok".to_string() } else { bad.join("; ") }));
        results.push(json!({ "fixture": label, "mismatches": bad }));
    }
    let mut violations = Vec::new();
    for s in seed..seed + 20 {
        let n = 1 + (s % 3) as usize;
        let m = random_module(s, n, 3, d.min(10));
        let table = tor_table(&m, &coordinate_forms(n), n).expect("coordinate forms");
        if table.row_vanishes(1) && (2..=n).any(|j| !table.row_vanishes(j)) {
            violations.push(format!("module seed {s}: higher Tor without Tor_1"));
        }
        let e = random_ecw(s, 1 + (s % 2) as usize, 6);
        if let Ok(r) = condition_report(&e, d.min(8), &ReportOptions::default()) {
            let (iv, v) = (r.conditions.iv, r.conditions.v);
            if iv != Verdict::Indeterminate && v != Verdict::Indeterminate && iv != v {
                violations.push(format!("complex seed {s}: iv {iv}, v {v}"));
            }
        }
    }
    failed |= !violations.is_empty();
    text.push_str(&format!(
        "properties (seeds {seed}..{}): {}\n",
        seed + 20,
        if violations.is_empty() { "ok".to_string() } else { violations.join("; ") }
    ));
    Output {
        text,
        json: json!({ "fixtures": results, "property_violations": violations }),
        failed,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.max_degree < 4 || cli.max_degree % 2 != 0 {
        eprintln!("error: --max-degree must be even and at least 4 (got {})", cli.max_degree);
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(out) => {
            match cli.format {
                Format::Text => print!("{}", out.text),
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("serialisable")),
            }
            if out.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(InputError(msg)) => {
            for line in msg.lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(2)
        }
    }
}
