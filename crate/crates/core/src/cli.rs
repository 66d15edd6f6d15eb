//! Command-line front end: argument parsing, rendering and exit codes.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::algebra::{parse_polynomial, BiLaurent, Window};
use crate::bundle::{canonical_support, make_bundle, BundleV, ExtensionClass, Multiplicity};
use crate::invariants::{self, BoundsVerdict, InvariantReport, InvariantsError, ReportOptions};
use crate::strata::{self, BUDGET_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_NON_STABILIZED: i32 = 3;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "blowup",
    version,
    about = "Instanton invariants of rank-2 bundles V(j, p) on the blown-up plane",
    after_help = "Polynomials use z, u, integer or rational coefficients, ^ for powers \
                  (z may carry a negative exponent), e.g. \"z^2*u - 3/2*z^-1*u^2\".\n\
                  Exit codes: 0 ok, 1 usage or parse error, 2 cross-check mismatch, \
                  3 computation did not stabilize."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Full report for one bundle, or for every `j; p` line of a batch file.
    Invariants(InvariantsArgs),
    /// Formula-versus-oracle sweep over monomial and random classes.
    Verify(VerifyArgs),
    /// The (l(Q), l(R^1)) box for one splitting type, with witnesses.
    Strata(SurveyArgs),
    /// Which charges occur for one splitting type, with witnesses.
    Spectrum(SurveyArgs),
    /// First swept class with the given l(Q) and l(R^1).
    Witness(WitnessArgs),
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct Output {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InvariantsArgs {
    /// Splitting type.
    #[arg(long, required_unless_present = "batch")]
    pub j: Option<u32>,
    /// Extension class polynomial.
    #[arg(long, required_unless_present = "batch")]
    pub p: Option<String>,
    /// File with one `j; p` per line (blank lines and `#` comments skipped).
    #[arg(long, conflicts_with_all = ["j", "p"])]
    pub batch: Option<PathBuf>,
    /// Starting cohomology window: u-degree cap.
    #[arg(long, requires_all = ["zmin", "zmax"])]
    pub umax: Option<u32>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["umax", "zmax"])]
    pub zmin: Option<i64>,
    #[arg(long, requires_all = ["umax", "zmin"])]
    pub zmax: Option<i64>,
    /// Starting degree cap for the direct image.
    #[arg(long)]
    pub degree_cap: Option<u32>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 3)]
    pub jmax: u32,
    /// Random multi-term classes per splitting type, on top of all monomials.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SurveyArgs {
    #[arg(long)]
    pub j: u32,
    /// Number of candidate classes (default 500 for j <= 3, 2000 otherwise).
    #[arg(long, env = BUDGET_ENV)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    #[arg(long)]
    pub j: u32,
    #[arg(long)]
    pub lq: u64,
    #[arg(long)]
    pub lr1: u64,
    #[arg(long, env = BUDGET_ENV)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("line {line}: {message}")]
    Batch { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// `m` as a number, or the string `SPLIT`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MJson {
    Finite(u32),
    Split(SplitTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTag {
    #[serde(rename = "SPLIT")]
    Split,
}

impl From<Multiplicity> for MJson {
    fn from(m: Multiplicity) -> Self {
        match m {
            Multiplicity::Finite(m) => MJson::Finite(m),
            Multiplicity::Split => MJson::Split(SplitTag::Split),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputJson {
    pub j: u32,
    pub p: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaOracle {
    pub formula: Option<u64>,
    pub oracle: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantsJson {
    pub m: MJson,
    #[serde(rename = "lR1")]
    pub lr1: FormulaOracle,
    #[serde(rename = "lQ")]
    pub lq: u64,
    pub charge: u64,
    #[serde(rename = "h1End")]
    pub h1end: FormulaOracle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizationJson {
    pub stabilized: bool,
    pub windows: Vec<Window>,
    pub end_windows: Vec<Window>,
    pub degree_cap: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossCheckJson {
    pub ok: bool,
    pub mismatches: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub schema_version: u32,
    pub input: InputJson,
    pub invariants: InvariantsJson,
    pub bounds: BoundsVerdict,
    pub stabilization: StabilizationJson,
    pub cross_check: CrossCheckJson,
}

impl From<&InvariantReport> for ReportJson {
    fn from(r: &InvariantReport) -> Self {
        let mismatches = r.mismatches();
        ReportJson {
            schema_version: SCHEMA_VERSION,
            input: InputJson {
                j: r.j(),
                p: r.class.p().to_string(),
            },
            invariants: InvariantsJson {
                m: r.m.into(),
                lr1: FormulaOracle {
                    formula: Some(r.lr1_formula),
                    oracle: r.lr1_oracle,
                },
                lq: r.lq_oracle,
                charge: r.charge,
                h1end: FormulaOracle {
                    formula: r.h1end_formula,
                    oracle: r.h1end_oracle,
                },
            },
            bounds: r.bounds.clone(),
            stabilization: StabilizationJson {
                stabilized: r.stabilized,
                windows: r.windows.clone(),
                end_windows: r.end_windows.clone(),
                degree_cap: r.degree_cap,
            },
            cross_check: CrossCheckJson {
                ok: mismatches.is_empty(),
                mismatches,
            },
        }
    }
}

pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

pub fn parse_report_json(s: &str) -> Result<ReportJson, serde_json::Error> {
    serde_json::from_str(s)
}

/// One `j; p` line. Blank lines and lines starting with `#` give `None`.
pub fn parse_batch_line(line: &str) -> Result<Option<(u32, BiLaurent)>, String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (j, p) = line
        .split_once(';')
        .ok_or_else(|| "expected `j; p`".to_string())?;
    let j: u32 = j
        .trim()
        .parse()
        .map_err(|_| format!("invalid splitting type `{}`", j.trim()))?;
    let p = parse_polynomial(p.trim()).map_err(|e| e.to_string())?;
    Ok(Some((j, p)))
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn bundle(j: u32, p: BiLaurent) -> Result<BundleV, CliError> {
    make_bundle(j, p).map_err(usage)
}

fn report_options(a: &InvariantsArgs) -> Result<ReportOptions, CliError> {
    let window = match (a.umax, a.zmin, a.zmax) {
        (Some(umax), Some(zmin), Some(zmax)) => {
            if umax == 0 || zmin >= 0 || zmax <= 0 {
                return Err(CliError::Usage(
                    "window needs umax >= 1, zmin < 0 < zmax".to_string(),
                ));
            }
            Some(Window::new(umax, zmin, zmax).map_err(usage)?)
        }
        _ => None,
    };
    if a.degree_cap == Some(0) {
        return Err(CliError::Usage("degree cap must be positive".to_string()));
    }
    Ok(ReportOptions {
        window,
        degree_cap: a.degree_cap,
    })
}

fn exit_code_for(e: &InvariantsError) -> i32 {
    match e {
        InvariantsError::CrossCheckMismatch { .. } => EXIT_MISMATCH,
        e if e.is_non_stabilized() => EXIT_NON_STABILIZED,
        _ => EXIT_USAGE,
    }
}

struct Sink<'a> {
    out: Option<PathBuf>,
    buf: String,
    stdout: &'a mut dyn Write,
}

impl Sink<'_> {
    fn finish(self) -> Result<(), CliError> {
        match self.out {
            Some(path) => fs::write(path, self.buf)?,
            None => self.stdout.write_all(self.buf.as_bytes())?,
        }
        Ok(())
    }
}

fn cmd_invariants(
    a: &InvariantsArgs,
    sink: &mut Sink,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let opts = report_options(a)?;
    let inputs: Vec<(u32, BiLaurent)> = match &a.batch {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let mut v = Vec::new();
            for (n, line) in text.lines().enumerate() {
                match parse_batch_line(line) {
                    Ok(Some(x)) => v.push(x),
                    Ok(None) => {}
                    Err(message) => {
                        return Err(CliError::Batch {
                            line: n + 1,
                            message,
                        })
                    }
                }
            }
            v
        }
        None => {
            let p = parse_polynomial(a.p.as_deref().unwrap_or_default()).map_err(usage)?;
            vec![(a.j.unwrap_or_default(), p)]
        }
    };
    let bundles = inputs
        .into_iter()
        .map(|(j, p)| bundle(j, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut code = EXIT_OK;
    let mut reports = Vec::new();
    for b in &bundles {
        match invariants::report_with(b, opts) {
            Ok(r) => reports.push(r),
            Err(InvariantsError::CrossCheckMismatch { report, .. }) => {
                code = code.max(EXIT_MISMATCH);
                reports.push(*report);
            }
            Err(e) => {
                writeln!(err, "{}: {e}", b.ext())?;
                code = code.max(exit_code_for(&e));
            }
        }
    }
    let batch = a.batch.is_some();
    match a.output.format {
        Format::Json => {
            let json: Vec<ReportJson> = reports.iter().map(ReportJson::from).collect();
            sink.buf = if batch {
                render_json(&json)
            } else {
                json.first().map(render_json).unwrap_or_default()
            };
        }
        Format::Table => {
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    sink.buf.push('\n');
                }
                sink.buf.push_str(&format!("{r}\n"));
                for m in r.mismatches() {
                    sink.buf.push_str(&format!("MISMATCH {m}\n"));
                }
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "j",
                "p",
                "m",
                "lR1_formula",
                "lR1_oracle",
                "lQ",
                "charge",
                "h1End_formula",
                "h1End_oracle",
            ])
            .map_err(usage)?;
            for r in &reports {
                w.write_record([
                    r.j().to_string(),
                    r.class.p().to_string(),
                    r.m.to_string(),
                    r.lr1_formula.to_string(),
                    r.lr1_oracle.to_string(),
                    r.lq_oracle.to_string(),
                    r.charge.to_string(),
                    r.h1end_formula.map(|v| v.to_string()).unwrap_or_default(),
                    r.h1end_oracle.to_string(),
                ])
                .map_err(usage)?;
            }
            sink.buf = csv_string(w)?;
        }
    }
    Ok(code)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| usage(e.error()))?;
    String::from_utf8(bytes).map_err(usage)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckTally {
    pub pass: usize,
    pub fail: usize,
    /// First few failing classes with a short description.
    pub failures: Vec<String>,
}

impl CheckTally {
    const KEEP: usize = 20;

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if ok {
            self.pass += 1;
        } else {
            self.fail += 1;
            if self.failures.len() < Self::KEEP {
                self.failures.push(what());
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub schema_version: u32,
    pub jmax: u32,
    pub samples: usize,
    pub seed: u64,
    pub classes: usize,
    #[serde(rename = "lR1")]
    pub lr1: CheckTally,
    #[serde(rename = "h1End")]
    pub h1end: CheckTally,
    pub bounds: CheckTally,
    /// Observations of the claimed lower bound `l(Q) >= 1`; never fatal.
    #[serde(rename = "lQ_lower")]
    pub lq_lower: CheckTally,
    pub errors: Vec<String>,
    pub all_passed: bool,
}

/// All canonical monomials, the zero class, and `samples` seeded multi-term
/// classes for every `j` in `0..=jmax`.
pub fn verify_classes(jmax: u32, samples: usize, seed: u64) -> Vec<ExtensionClass> {
    let mut out = Vec::new();
    for j in 0..=jmax {
        out.push(ExtensionClass::split(j));
        for m in canonical_support(j) {
            out.push(ExtensionClass::new(j, BiLaurent::zu(m.zexp, m.udeg)).expect("canonical"));
        }
        out.extend(strata::random_classes(
            j,
            samples,
            seed.wrapping_add(j as u64),
        ));
    }
    out
}

pub fn verify(jmax: u32, samples: usize, seed: u64) -> VerifySummary {
    let classes = verify_classes(jmax, samples, seed);
    let evaluated = strata::evaluate(&classes, ReportOptions::default());
    let mut s = VerifySummary {
        schema_version: SCHEMA_VERSION,
        jmax,
        samples,
        seed,
        classes: classes.len(),
        lr1: CheckTally::default(),
        h1end: CheckTally::default(),
        bounds: CheckTally::default(),
        lq_lower: CheckTally::default(),
        errors: Vec::new(),
        all_passed: false,
    };
    for e in &evaluated {
        let r = match &e.report {
            Ok(r) => r,
            Err(msg) => {
                s.errors.push(format!("{}: {msg}", e.class));
                continue;
            }
        };
        let c = &e.class;
        s.lr1.record(r.lr1_formula == r.lr1_oracle, || {
            format!("{c}: formula {} oracle {}", r.lr1_formula, r.lr1_oracle)
        });
        if let Some(f) = r.h1end_formula {
            s.h1end.record(f == r.h1end_oracle, || {
                format!("{c}: formula {f} oracle {}", r.h1end_oracle)
            });
        }
        s.bounds
            .record(r.bounds.fatal_ok(), || format!("{c}: {:?}", r.mismatches()));
        s.lq_lower.record(r.bounds.lq_lower.ok, || {
            format!("{c}: lQ = {}", r.lq_oracle)
        });
    }
    s.all_passed =
        s.errors.is_empty() && s.lr1.fail == 0 && s.h1end.fail == 0 && s.bounds.fail == 0;
    s
}

fn render_verify_table(s: &VerifySummary) -> String {
    let mut out = format!(
        "classes {} (j <= {}, {} samples, seed {})\n",
        s.classes, s.jmax, s.samples, s.seed
    );
    for (name, t) in [
        ("lR1", &s.lr1),
        ("h1End", &s.h1end),
        ("bounds", &s.bounds),
        ("lQ_lower", &s.lq_lower),
    ] {
        out.push_str(&format!(
            "{name:<9} pass {:>4}  fail {:>4}\n",
            t.pass, t.fail
        ));
        for f in &t.failures {
            out.push_str(&format!("    {f}\n"));
        }
    }
    for e in &s.errors {
        out.push_str(&format!("error {e}\n"));
    }
    out.push_str(if s.all_passed {
        "all checks passed\n"
    } else {
        "some checks failed\n"
    });
    out
}

fn cmd_verify(a: &VerifyArgs, sink: &mut Sink) -> Result<i32, CliError> {
    let s = verify(a.jmax, a.samples, a.seed);
    sink.buf = match a.output.format {
        Format::Json => render_json(&s),
        Format::Table => render_verify_table(&s),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check", "pass", "fail"]).map_err(usage)?;
            for (name, t) in [
                ("lR1", &s.lr1),
                ("h1End", &s.h1end),
                ("bounds", &s.bounds),
                ("lQ_lower", &s.lq_lower),
            ] {
                w.write_record([name.to_string(), t.pass.to_string(), t.fail.to_string()])
                    .map_err(usage)?;
            }
            csv_string(w)?
        }
    };
    Ok(if !s.errors.is_empty() {
        EXIT_NON_STABILIZED
    } else if s.all_passed {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

#[derive(Serialize)]
struct CellJson {
    w: u64,
    h: u64,
    charge: u64,
    witness_p: Option<String>,
    in_box: bool,
}

#[derive(Serialize)]
struct StrataJson {
    schema_version: u32,
    j: u32,
    candidates: usize,
    cells: Vec<CellJson>,
    max_cell_review: Vec<String>,
    failures: Vec<String>,
}

fn strata_cells(t: &strata::StrataTable) -> Vec<CellJson> {
    let mut cells: Vec<CellJson> = t
        .cells
        .iter()
        .map(|((w, h), c)| CellJson {
            w: *w,
            h: *h,
            charge: w + h,
            witness_p: c.as_ref().map(|c| c.p().to_string()),
            in_box: true,
        })
        .chain(t.outside_box.iter().map(|((w, h), c)| CellJson {
            w: *w,
            h: *h,
            charge: w + h,
            witness_p: Some(c.p().to_string()),
            in_box: false,
        }))
        .collect();
    cells.sort_by_key(|c| (c.w, c.h));
    cells
}

fn budget(j: u32, b: Option<usize>) -> Result<usize, CliError> {
    match b {
        Some(0) => Err(CliError::Usage("budget must be at least 1".to_string())),
        Some(b) => Ok(b),
        None => Ok(strata::default_budget(j)),
    }
}

fn failure_lines(f: &[(ExtensionClass, String)]) -> Vec<String> {
    f.iter().map(|(c, m)| format!("{c}: {m}")).collect()
}

fn cmd_strata(a: &SurveyArgs, sink: &mut Sink) -> Result<i32, CliError> {
    let t = strata::strata_survey(a.j, budget(a.j, a.budget)?, a.seed);
    let cells = strata_cells(&t);
    sink.buf = match a.output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["w", "h", "charge", "witness_p"])
                .map_err(usage)?;
            for c in &cells {
                w.write_record([
                    c.w.to_string(),
                    c.h.to_string(),
                    c.charge.to_string(),
                    c.witness_p.clone().unwrap_or_default(),
                ])
                .map_err(usage)?;
            }
            csv_string(w)?
        }
        Format::Json => render_json(&StrataJson {
            schema_version: SCHEMA_VERSION,
            j: t.j,
            candidates: t.spectrum.candidates,
            cells,
            max_cell_review: t
                .max_cell_review
                .iter()
                .map(|c| c.p().to_string())
                .collect(),
            failures: failure_lines(&t.spectrum.failures),
        }),
        Format::Table => {
            let mut out = format!("j = {}, {} candidates\n", t.j, t.spectrum.candidates);
            out.push_str("   w    h  charge  witness\n");
            for c in &cells {
                let p = c.witness_p.as_deref().unwrap_or("not found within budget");
                let tag = if c.in_box { "" } else { "  (outside box)" };
                out.push_str(&format!(
                    "{:>4} {:>4} {:>7}  {p}{tag}\n",
                    c.w, c.h, c.charge
                ));
            }
            for c in &t.max_cell_review {
                out.push_str(&format!(
                    "review: non-split class at maximal cell: {}\n",
                    c.p()
                ));
            }
            for f in failure_lines(&t.spectrum.failures) {
                out.push_str(&format!("error {f}\n"));
            }
            out
        }
    };
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SpectrumJson {
    schema_version: u32,
    j: u32,
    candidates: usize,
    charges: Vec<ChargeJson>,
    missing: Vec<u64>,
}

#[derive(Serialize)]
struct ChargeJson {
    k: u64,
    witness_p: Option<String>,
}

fn cmd_spectrum(a: &SurveyArgs, sink: &mut Sink) -> Result<i32, CliError> {
    if a.j == 0 {
        return Err(CliError::Usage("spectrum needs j >= 1".to_string()));
    }
    let s = strata::charge_spectrum(a.j, budget(a.j, a.budget)?, a.seed);
    let rows: Vec<ChargeJson> = s
        .witnesses
        .iter()
        .map(|(k, w)| ChargeJson {
            k: *k,
            witness_p: w.as_ref().map(|c| c.p().to_string()),
        })
        .collect();
    sink.buf = match a.output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["charge", "witness_p"]).map_err(usage)?;
            for r in &rows {
                w.write_record([r.k.to_string(), r.witness_p.clone().unwrap_or_default()])
                    .map_err(usage)?;
            }
            csv_string(w)?
        }
        Format::Json => render_json(&SpectrumJson {
            schema_version: SCHEMA_VERSION,
            j: s.j,
            candidates: s.candidates,
            missing: s.missing(),
            charges: rows,
        }),
        Format::Table => {
            let mut out = format!(
                "j = {}, {} candidates\n charge  witness\n",
                s.j, s.candidates
            );
            for r in &rows {
                let p = r.witness_p.as_deref().unwrap_or("not found within budget");
                out.push_str(&format!("{:>7}  {p}\n", r.k));
            }
            out
        }
    };
    Ok(EXIT_OK)
}

fn cmd_witness(a: &WitnessArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    match strata::witness(a.j, a.lq, a.lr1, budget(a.j, a.budget)?, a.seed) {
        Some(c) => writeln!(out, "p = {}", c.p())?,
        None => writeln!(out, "not found within budget")?,
    }
    Ok(EXIT_OK)
}

/// Internal checks that must hold regardless of any closed formula.
pub fn selftest_checks() -> Vec<(&'static str, bool)> {
    let parse = |s: &str| parse_polynomial(s).expect("fixed input");
    let mut checks = Vec::new();
    let q = parse("3/2*z^-1*u^2 - z^2*u + 7");
    checks.push(("parser round trip", parse(&q.to_string()) == q));
    let b = make_bundle(3, parse("z^2*u - z^-1*u")).expect("canonical");
    checks.push((
        "transition has unit determinant",
        b.transition().det().is_ok_and(|d| d == BiLaurent::one()),
    ));
    let trivial = make_bundle(0, BiLaurent::zero()).expect("trivial");
    checks.push((
        "trivial bundle has zero invariants",
        invariants::report(&trivial).is_ok_and(|r| r.charge == 0 && r.h1end_oracle == 0),
    ));
    checks.push((
        "split j = 2 attains both maxima",
        make_bundle(2, BiLaurent::zero())
            .ok()
            .and_then(|b| invariants::compute_report(&b, ReportOptions::default()).ok())
            .is_some_and(|r| r.cell() == (3, 1) && r.charge == 4),
    ));
    let b = make_bundle(3, parse("z^2*u")).expect("canonical");
    checks.push((
        "direct image relations vanish on sections",
        crate::dirimg::pushforward_module(&b, crate::dirimg::TruncRing { maxdeg: 8 })
            .is_ok_and(|m| m.relations_hold()),
    ));
    checks.push((
        "non-split class has no traceless automorphisms",
        crate::cech::traceless_auto_dim(&b) == Ok(0),
    ));
    checks
}

fn cmd_selftest(out: &mut dyn Write) -> Result<i32, CliError> {
    let checks = selftest_checks();
    for (name, ok) in &checks {
        writeln!(out, "{} {name}", if *ok { "PASS" } else { "FAIL" })?;
    }
    Ok(if checks.iter().all(|(_, ok)| *ok) {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let output = match &cli.command {
        Command::Invariants(a) => Some(&a.output),
        Command::Verify(a) => Some(&a.output),
        Command::Strata(a) | Command::Spectrum(a) => Some(&a.output),
        Command::Witness(_) | Command::Selftest => None,
    };
    let mut sink = Sink {
        out: output.and_then(|o| o.out.clone()),
        buf: String::new(),
        stdout,
    };
    let code = match &cli.command {
        Command::Invariants(a) => cmd_invariants(a, &mut sink, stderr)?,
        Command::Verify(a) => cmd_verify(a, &mut sink)?,
        Command::Strata(a) => cmd_strata(a, &mut sink)?,
        Command::Spectrum(a) => cmd_spectrum(a, &mut sink)?,
        Command::Witness(a) => return cmd_witness(a, sink.stdout),
        Command::Selftest => return cmd_selftest(sink.stdout),
    };
    sink.finish()?;
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("blowup").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn batch_lines() {
        assert_eq!(parse_batch_line("  # note").unwrap(), None);
        assert_eq!(parse_batch_line("").unwrap(), None);
        let (j, p) = parse_batch_line("3; z^2*u").unwrap().unwrap();
        assert_eq!((j, p.to_string()), (3, "z^2*u".to_string()));
        assert!(parse_batch_line("3 z").is_err());
        assert!(parse_batch_line("x; u").is_err());
        assert!(parse_batch_line("2; u^").is_err());
    }

    #[test]
    fn m_serializes_as_number_or_split() {
        assert_eq!(
            serde_json::to_string(&MJson::from(Multiplicity::Finite(2))).unwrap(),
            "2"
        );
        assert_eq!(
            serde_json::to_string(&MJson::from(Multiplicity::Split)).unwrap(),
            "\"SPLIT\""
        );
        assert_eq!(
            serde_json::from_str::<MJson>("\"SPLIT\"").unwrap(),
            MJson::Split(SplitTag::Split)
        );
        assert!(serde_json::from_str::<MJson>("\"split\"").is_err());
    }

    #[test]
    fn trivial_report_json_round_trips() {
        let (code, out, _) =
            run_capture(&["invariants", "--j", "0", "--p", "0", "--format", "json"]);
        assert_eq!(code, EXIT_OK);
        let parsed = parse_report_json(&out).unwrap();
        assert_eq!(parsed.invariants.charge, 0);
        assert_eq!(parsed.invariants.m, MJson::Split(SplitTag::Split));
        assert_eq!(render_json(&parsed), out);
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run_capture(&["invariants", "--j", "2", "--p", "u^3"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("canonical support"), "{err}");
        assert_eq!(run_capture(&["invariants", "--j", "2"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) = run_capture(&[
            "invariants",
            "--j",
            "2",
            "--p",
            "u",
            "--umax",
            "4",
            "--zmin",
            "3",
            "--zmax",
            "5",
        ]);
        assert_eq!(code, EXIT_USAGE, "{err}");
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn selftest_passes() {
        let (code, out, _) = run_capture(&["selftest"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.lines().all(|l| l.starts_with("PASS")));
    }
}
