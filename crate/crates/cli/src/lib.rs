//! The `fqx` command-line driver. [`run`] parses arguments, executes one verb
//! and writes JSON (default) or CSV to the given sinks, returning the exit
//! status: 0 success, 1 domain error, 2 usage error, 3 budget exceeded.

use std::io::Write;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fqx::density::{bound_h_f, format_decimal, tail_bound, truncated_zeta_within_tail};
use fqx::experiment::DEFAULT_CENSUS_BUDGET;
use fqx::{
    complete_to_invertible, convergence_report, count_irreducibles, density_e_p,
    density_unimodular, exhaustive_census, irreducibles_up_to, is_irreducible, is_unimodular,
    lemma_exactness_check, minors_gcd, monte_carlo, parse_matrix, parse_poly, smith_normal_form,
    zeta_q_inverse, zeta_q_inverse_truncated, Error, FieldSpec, IrreducibleSet, MatrixDoc, Poly,
    PolyMatrix, Predicate, ReportMode, ReportRow, RunConfig, SpaceSpec,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

pub const BUDGET_ENV: &str = "FQX_CENSUS_BUDGET";

/// Keys holding exact rationals; `--decimals` adds a `<key>_decimal` beside each.
const EXACT_KEYS: &[&str] = &[
    "density",
    "bound",
    "ratio",
    "theory",
    "gap",
    "closed_form",
    "zeta_inverse",
    "truncated",
    "tail_bound",
];

#[derive(Parser, Debug)]
#[command(
    name = "fqx",
    version,
    about = "Unimodular matrices over F_q[x]: exact densities, censuses and Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Also print exact rationals as decimals with this many digits
    #[arg(long, global = true, value_name = "D")]
    decimals: Option<usize>,

    /// Worker threads for censuses and Monte Carlo (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Maximum number of census evaluations
    #[arg(long, global = true, env = BUDGET_ENV, default_value_t = DEFAULT_CENSUS_BUDGET)]
    census_budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exhaustive,
    Mc,
}

#[derive(Args, Debug)]
struct FieldArgs {
    /// Field order q (a prime power)
    #[arg(long, conflicts_with_all = ["p", "e"])]
    q: Option<u64>,

    /// Field characteristic p
    #[arg(long)]
    p: Option<u64>,

    /// Extension degree e, with --p
    #[arg(long, requires = "p")]
    e: Option<u32>,
}

impl FieldArgs {
    fn field(&self) -> Result<FieldSpec, Failure> {
        match (self.q, self.p) {
            (Some(q), _) => Ok(FieldSpec::with_order(q)?),
            (None, Some(p)) => Ok(FieldSpec::new(p, self.e.unwrap_or(1))?),
            (None, None) => Err(Failure::usage(
                "the field is required: pass --q, or --p with optional --e",
            )),
        }
    }
}

#[derive(Args, Debug)]
struct ShapeArgs {
    /// Rows
    #[arg(long)]
    k: usize,

    /// Columns
    #[arg(long)]
    n: usize,
}

#[derive(Args, Debug)]
struct PredicateArgs {
    /// Count E_P instead of E: irreducibles separated by ';', e.g. "x;x+1"
    #[arg(long, value_name = "P", conflicts_with = "divisible_by")]
    coprime_to: Option<String>,

    /// Count H_f instead of E: the irreducible f
    #[arg(long, value_name = "F")]
    divisible_by: Option<String>,
}

impl PredicateArgs {
    fn predicate(&self, field: &FieldSpec) -> Result<Predicate, Failure> {
        if let Some(text) = &self.coprime_to {
            return Ok(Predicate::CoprimeTo(parse_set(field, text)?));
        }
        if let Some(text) = &self.divisible_by {
            let f = parse_poly(field, text).map_err(|e| Failure::arg("--divisible-by", e))?;
            return Predicate::divisible_by(f).map_err(|e| Failure::arg("--divisible-by", e));
        }
        Ok(Predicate::Unimodular)
    }
}

#[derive(Args, Debug)]
struct MatrixArgs {
    /// Matrix text ("e|e;e|e", entries as comma coefficient lists or like
    /// "x^2+1") or its JSON form
    #[arg(long)]
    matrix: String,

    /// Expected number of rows
    #[arg(long)]
    k: Option<usize>,

    /// Expected number of columns
    #[arg(long)]
    n: Option<usize>,
}

impl MatrixArgs {
    fn matrix(&self, field: &FieldSpec) -> Result<PolyMatrix, Failure> {
        let a = if self.matrix.trim_start().starts_with('{') {
            let doc: MatrixDoc = serde_json::from_str(&self.matrix)
                .map_err(|e| Failure::usage(format!("--matrix: invalid JSON: {e}")))?;
            let a = PolyMatrix::from_doc(&doc).map_err(|e| Failure::arg("--matrix", e))?;
            if a.field() != field {
                return Err(Failure::usage(format!(
                    "--matrix: JSON field q = {} does not match q = {}",
                    a.field().q(),
                    field.q()
                )));
            }
            a
        } else {
            parse_matrix(field, &self.matrix).map_err(|e| Failure::arg("--matrix", e))?
        };
        for (name, want, got) in [("--k", self.k, a.rows()), ("--n", self.n, a.cols())] {
            if want.is_some_and(|w| w != got) {
                return Err(Failure::usage(format!(
                    "{name} = {} but --matrix has {got}",
                    want.unwrap_or_default()
                )));
            }
        }
        Ok(a)
    }
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Describe F_q: characteristic, degree and defining modulus
    Field {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Show a polynomial given by index or text; optionally its gcd with another
    Poly {
        #[command(flatten)]
        field: FieldArgs,
        /// Enumeration index m of f_m
        #[arg(long, conflicts_with = "text", allow_hyphen_values = true)]
        index: Option<String>,
        /// Polynomial text
        #[arg(long)]
        text: Option<String>,
        /// Second polynomial for a monic gcd
        #[arg(long)]
        gcd: Option<String>,
    },
    /// Count (and optionally list) monic irreducibles by degree
    Irreducibles {
        #[command(flatten)]
        field: FieldArgs,
        /// Largest degree
        #[arg(long)]
        t: u32,
        /// List the polynomials too
        #[arg(long)]
        list: bool,
    },
    /// Exact zeta_q(j)^{-1}; with --t also the truncated Euler product and tail bound
    Zeta {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        j: u32,
        /// Truncation degree
        #[arg(long)]
        t: Option<u32>,
    },
    /// Exact density of E, E_P or H_f
    Density {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        predicate: PredicateArgs,
    },
    /// Exhaustive census over M_N
    Census {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        /// Enumeration bound N: entries among f_0..f_N
        #[arg(long = "bound", visible_alias = "N", value_name = "N")]
        bound: u64,
        #[command(flatten)]
        predicate: PredicateArgs,
    },
    /// Seeded Monte Carlo estimate over M_N
    Mc {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long = "bound", visible_alias = "N", value_name = "N")]
        bound: u64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        predicate: PredicateArgs,
    },
    /// Compare an E_P census at N = m q^{d_P} - 1 with its closed-form count
    LemmaCheck {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        /// The set P: irreducibles separated by ';'
        #[arg(long = "set", value_name = "P")]
        set: String,
        #[arg(long)]
        m: u64,
    },
    /// Census or estimate against the exact density along a schedule of N
    Converge {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        /// Ascending values of N, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        schedule: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long, required_if_eq("mode", "mc"))]
        samples: Option<u64>,
        #[arg(long, required_if_eq("mode", "mc"))]
        seed: Option<u64>,
        #[command(flatten)]
        predicate: PredicateArgs,
    },
    /// Decide unimodularity (gcd of maximal minors equal to 1)
    Unimodular {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Extend a unimodular matrix to a square invertible one
    Complete {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Smith normal form A = U D V
    Snf {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
}

/// An error paired with its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    /// A library error attributed to a command-line option.
    fn arg(option: &str, e: Error) -> Self {
        let mut f = Failure::from(e);
        f.message = format!("{option}: {}", f.message);
        f
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            _ if e.is_resource() => 3,
            Error::InvalidArgument { .. } | Error::Parse { .. } => 2,
            _ => 1,
        };
        let mut message = e.to_string();
        if e.is_resource() {
            message.push_str(&format!(" (raise --census-budget or {BUDGET_ENV})"));
        }
        Failure { code, message }
    }
}

/// Output records: one object, or a table of rows.
enum Output {
    One(Map<String, Value>),
    Table(Vec<Map<String, Value>>),
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("records are objects"),
    }
}

fn parse_set(field: &FieldSpec, text: &str) -> Result<IrreducibleSet, Failure> {
    let members = text
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_poly(field, s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::arg("--set", e))?;
    IrreducibleSet::new(field, members).map_err(|e| Failure::arg("--set", e))
}

fn poly_record(f: &Poly) -> Map<String, Value> {
    object(json!({
        "index": f.to_index().to_string(),
        "poly": f.to_string(),
        "human": f.to_human(),
        "degree": f.degree(),
    }))
}

fn row_record(row: &ReportRow) -> Map<String, Value> {
    object(serde_json::to_value(row).expect("rows serialize"))
}

fn config(cli: &Cli) -> RunConfig {
    RunConfig {
        workers: cli.workers,
        census_budget: cli.census_budget,
    }
}

fn execute(cli: &Cli) -> Result<Output, Failure> {
    let out = match &cli.verb {
        Verb::Field { field } => {
            let f = field.field()?;
            let modulus = f
                .modulus()
                .map(|m| m.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
            Output::One(object(json!({
                "q": f.q(), "p": f.p(), "e": f.e(), "modulus": modulus,
            })))
        }
        Verb::Poly {
            field,
            index,
            text,
            gcd,
        } => {
            let f = field.field()?;
            let a = match (index, text) {
                (Some(m), _) => {
                    let m = BigInt::from_str(m.trim())
                        .map_err(|_| Failure::usage(format!("--index: not an integer: {m:?}")))?;
                    Poly::from_index_signed(&f, &m).map_err(|e| Failure::arg("--index", e))?
                }
                (None, Some(t)) => parse_poly(&f, t).map_err(|e| Failure::arg("--text", e))?,
                (None, None) => return Err(Failure::usage("pass --index or --text")),
            };
            let mut rec = poly_record(&a);
            rec.insert("irreducible".into(), is_irreducible(&a).into());
            if let Some(other) = gcd {
                let b = parse_poly(&f, other).map_err(|e| Failure::arg("--gcd", e))?;
                rec.insert("gcd".into(), a.gcd(&b)?.to_string().into());
            }
            Output::One(rec)
        }
        Verb::Irreducibles { field, t, list } => {
            let f = field.field()?;
            if *t < 1 {
                return Err(Failure::usage("--t must be at least 1"));
            }
            let table = if *list {
                Some(irreducibles_up_to(&f, *t).map_err(|e| Failure::arg("--t", e))?)
            } else {
                None
            };
            let mut rows = Vec::new();
            for m in 1..=*t {
                let mut rec = object(json!({
                    "q": f.q(),
                    "degree": m,
                    "count": count_irreducibles(f.q(), m)?.to_string(),
                }));
                if let Some(table) = &table {
                    let polys: Vec<String> = table
                        .list(m)
                        .unwrap_or_default()
                        .iter()
                        .map(Poly::to_human)
                        .collect();
                    rec.insert("polys".into(), polys.into());
                }
                rows.push(rec);
            }
            Output::Table(rows)
        }
        Verb::Zeta { q, j, t } => {
            let mut rec = object(json!({
                "q": q, "j": j, "zeta_inverse": zeta_q_inverse(*q, *j)?.to_string(),
            }));
            if let Some(t) = t {
                rec.insert("t".into(), (*t).into());
                let truncated =
                    zeta_q_inverse_truncated(*q, *j, *t).map_err(|e| Failure::arg("--t", e))?;
                rec.insert("truncated".into(), truncated.to_string().into());
                rec.insert("tail_bound".into(), tail_bound(*q, *t)?.to_string().into());
                rec.insert(
                    "within_tail".into(),
                    truncated_zeta_within_tail(*q, *j, *t)?.into(),
                );
            }
            Output::One(rec)
        }
        Verb::Density {
            field,
            shape,
            predicate,
        } => {
            let f = field.field()?;
            let (k, n) = (shape.k, shape.n);
            match predicate.predicate(&f)? {
                Predicate::Unimodular => Output::One(object(
                    json!({ "density": density_unimodular(f.q(), k, n)?.to_string() }),
                )),
                Predicate::CoprimeTo(set) => Output::One(object(
                    json!({ "density": density_e_p(k, n, &set)?.to_string() }),
                )),
                Predicate::DivisibleBy(g) => {
                    let d = g.degree().unwrap_or(0);
                    let h = bound_h_f(f.q(), k, n, d)?;
                    Output::One(object(json!({
                        "density": h.exact.to_string(),
                        "bound": h.bound.to_string(),
                    })))
                }
            }
        }
        Verb::Census {
            field,
            shape,
            bound,
            predicate,
        } => {
            let f = field.field()?;
            let space = SpaceSpec::new(&f, shape.k, shape.n, *bound)?;
            let c = exhaustive_census(&space, &predicate.predicate(&f)?, &config(cli))?;
            Output::One(row_record(&c.to_row()?))
        }
        Verb::Mc {
            field,
            shape,
            bound,
            samples,
            seed,
            predicate,
        } => {
            let f = field.field()?;
            let space = SpaceSpec::new(&f, shape.k, shape.n, *bound)?;
            let est = monte_carlo(
                &space,
                &predicate.predicate(&f)?,
                *samples,
                *seed,
                &config(cli),
            )
            .map_err(|e| Failure::arg("--samples", e))?;
            Output::One(row_record(&est.to_row()?))
        }
        Verb::LemmaCheck {
            field,
            shape,
            set,
            m,
        } => {
            let f = field.field()?;
            let set = parse_set(&f, set)?;
            let r = lemma_exactness_check(&f, shape.k, shape.n, &set, *m, &config(cli))?;
            Output::One(object(json!({
                "N": r.bound,
                "census": r.census,
                "closed_form": fqx::density::rational_string(&r.closed_form),
                "holds": r.holds,
            })))
        }
        Verb::Converge {
            field,
            shape,
            schedule,
            mode,
            samples,
            seed,
            predicate,
        } => {
            let f = field.field()?;
            let mode = match mode {
                Mode::Exhaustive => ReportMode::Exhaustive,
                Mode::Mc => ReportMode::MonteCarlo {
                    samples: samples.expect("required by clap"),
                    seed: seed.expect("required by clap"),
                },
            };
            let rows = convergence_report(
                &f,
                shape.k,
                shape.n,
                &predicate.predicate(&f)?,
                schedule,
                mode,
                &config(cli),
            )
            .map_err(|e| match e {
                Error::InvalidArgument { .. } => Failure::arg("--schedule", e),
                e => e.into(),
            })?;
            Output::Table(rows.iter().map(row_record).collect())
        }
        Verb::Unimodular { field, matrix } => {
            let f = field.field()?;
            let a = matrix.matrix(&f)?;
            Output::One(object(
                json!({ "unimodular": is_unimodular(&a).map_err(|e| Failure::arg("--matrix", e))? }),
            ))
        }
        Verb::Complete { field, matrix } => {
            let f = field.field()?;
            let a = matrix.matrix(&f)?;
            let completion = complete_to_invertible(&a).map_err(|e| Failure::arg("--matrix", e))?;
            let square = match &completion {
                Some(b) => a.stack(b)?,
                None => a.clone(),
            };
            Output::One(object(json!({
                "completion": completion.as_ref().map(PolyMatrix::to_text),
                "matrix": square.to_text(),
                "determinant": square.determinant()?.to_string(),
            })))
        }
        Verb::Snf { field, matrix } => {
            let f = field.field()?;
            let a = matrix.matrix(&f)?;
            let gcd = minors_gcd(&a).map_err(|e| Failure::arg("--matrix", e))?;
            let s = smith_normal_form(&a);
            let invariants: Vec<String> = s.invariants().iter().map(Poly::to_string).collect();
            Output::One(object(json!({
                "invariants": invariants,
                "minors_gcd": gcd.to_string(),
                "u": s.u.to_text(),
                "d": s.d.to_text(),
                "v": s.v.to_text(),
            })))
        }
    };
    Ok(out)
}

fn with_decimals(rec: Map<String, Value>, digits: usize) -> Map<String, Value> {
    let mut out = Map::new();
    for (key, value) in rec {
        let decimal = match (&value, EXACT_KEYS.contains(&key.as_str())) {
            (Value::String(s), true) => BigRational::from_str(s)
                .ok()
                .map(|r| format_decimal(&r, digits)),
            _ => None,
        };
        let decimal_key = format!("{key}_decimal");
        out.insert(key, value);
        if let Some(d) = decimal {
            out.insert(decimal_key, d.into());
        }
    }
    out
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn write_output(out: Output, format: Format, sink: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let v = match out {
                Output::One(rec) => Value::Object(rec),
                Output::Table(rows) => Value::Array(rows.into_iter().map(Value::Object).collect()),
            };
            writeln!(sink, "{}", serde_json::to_string(&v)?)
        }
        Format::Csv => {
            let rows = match out {
                Output::One(rec) => vec![rec],
                Output::Table(rows) => rows,
            };
            let mut w = csv::Writer::from_writer(sink);
            if let Some(first) = rows.first() {
                w.write_record(first.keys())?;
            }
            for row in &rows {
                w.write_record(row.values().map(csv_cell))?;
            }
            w.flush()
        }
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(&cli) {
        Ok(output) => {
            let output = match (cli.decimals, output) {
                (Some(d), Output::One(rec)) => Output::One(with_decimals(rec, d)),
                (Some(d), Output::Table(rows)) => {
                    Output::Table(rows.into_iter().map(|r| with_decimals(r, d)).collect())
                }
                (None, o) => o,
            };
            match write_output(output, cli.format, out) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write output: {e}");
                    1
                }
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
