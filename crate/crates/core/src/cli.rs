//! CSV ingestion and the `depmeas` command-line front end.
//!
//! Every subcommand builds a [`Report`] (named scalar fields plus an optional
//! numeric table) and prints it as text, JSON or CSV. Text uses six
//! significant digits; JSON carries full double precision.
//!
//! Column pairs are given as `--columns A,B`. For `rstar`, `classify` and
//! `depmeas` both directions are reported; `boot ci` resamples r*(A|B), i.e.
//! A is the response and B the regressor.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value as Json};

use crate::bootstrap::{self, Decision};
use crate::error::{Error, Result};
use crate::gencorr::{self, DEFAULT_EPSILON};
use crate::kernelreg::PairedSample;
use crate::taraldsen::{self, Tail, TaraldsenParams, DEFAULT_STEP};

/// A rectangular table of labeled numeric columns read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    source_path: String,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, source_path: impl Into<String>) -> Result<Self> {
        let source_path = source_path.into();
        if names.len() != columns.len() || names.is_empty() {
            return Err(Error::Degenerate(format!(
                "{} labels for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::Degenerate("empty column label".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateLabel(name.clone()));
            }
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::EmptyDataset(source_path));
        }
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Degenerate("columns differ in length".into()));
        }
        Ok(Self {
            names,
            columns,
            source_path,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|l| l == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Writes the dataset back out with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.names)?;
        for i in 0..self.n_rows() {
            w.write_record(self.columns.iter().map(|c| format!("{}", c[i])))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a comma-separated numeric table. Row and column numbers in errors
/// are 1-based file coordinates (the header, if any, is row 1).
pub fn ingest_csv(path: &Path, has_header: bool) -> Result<Dataset> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{shown}: {e}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut names: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = record.position().map_or(idx + 1, |p| p.line() as usize);
        if idx == 0 && has_header {
            names = Some(record.iter().map(str::to_string).collect());
            columns = vec![Vec::new(); record.len()];
            continue;
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); record.len()];
        }
        if record.len() != columns.len() {
            return Err(Error::RaggedRow {
                path: shown,
                row,
                found: record.len(),
                expected: columns.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: shown.clone(),
                row,
                col: col + 1,
                msg: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: shown.clone(),
                    row,
                    col: col + 1,
                    msg: format!("non-finite value {cell:?}"),
                });
            }
            columns[col].push(v);
        }
    }
    if columns.first().is_none_or(|c| c.is_empty()) {
        return Err(Error::EmptyDataset(shown));
    }
    let names = names.unwrap_or_else(|| (1..=columns.len()).map(|i| format!("V{i}")).collect());
    Dataset::new(names, columns, shown)
}

#[derive(Debug, Parser)]
#[command(name = "depmeas", version, about = "Asymmetric generalized correlations and exact correlation inference")]
pub struct Cli {
    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pearson correlation of two columns
    Pearson(PairArgs),
    /// Generalized correlations r*(A|B) and r*(B|A)
    Rstar(PairArgs),
    /// R* matrix: entry (i, j) is r*(row i | column j)
    Matrix(MatrixArgs),
    /// Signed max-dependence of two columns
    Depmeas(PairArgs),
    /// Classify a pair as independent, positive, negative or mixed
    Classify(ClassifyArgs),
    /// Exact sampling density of a correlation coefficient
    #[command(subcommand)]
    Taraldsen(TaraldsenCommand),
    /// Fisher z-transform of an observed correlation
    Fisherz(FisherArgs),
    /// Maximum-entropy bootstrap inference
    #[command(subcommand)]
    Boot(BootCommand),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with one numeric column per variable
    #[arg(long)]
    pub input: PathBuf,

    /// The file has no header row; columns are named V1, V2, ...
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Two column labels, A,B
    #[arg(long, value_delimiter = ',', required = true)]
    pub columns: Vec<String>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Column labels to include (default: all)
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,

    /// Also write the matrix as CSV to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub pair: PairArgs,

    /// Magnitude below which dependence counts as negligible
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Sample size (degrees of freedom v = n - 1)
    #[arg(long)]
    pub n: usize,

    /// Population correlation
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,

    /// Grid spacing on [-1, 1]
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
}

#[derive(Debug, Subcommand)]
pub enum TaraldsenCommand {
    /// Tail probability of an observed correlation
    Pvalue {
        #[command(flatten)]
        density: DensityArgs,
        /// Observed sample correlation
        #[arg(long, allow_negative_numbers = true)]
        obs_r: f64,
        #[arg(long, default_value_t = Tail::Two)]
        tail: Tail,
    },
    /// Grid quantile at probability `level`
    Quantile {
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long)]
        level: f64,
    },
    /// Critical values at rho = 0 for the standard sample sizes
    Table {
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Print unrounded quantiles instead of two decimals
        #[arg(long)]
        raw: bool,
    },
    /// Density heights on the grid
    Density {
        #[command(flatten)]
        density: DensityArgs,
        /// Write r,height CSV here instead of printing the grid
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub obs_r: f64,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum BootCommand {
    /// Order-statistic interval for r*(A|B)
    Ci {
        #[command(flatten)]
        pair: PairArgs,
        /// Number of replicates
        #[arg(long = "j", default_value_t = bootstrap::DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long, env = "GENCORR_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = Tail::Two)]
        tail: Tail,
        /// Hypothesized value of r*(A|B)
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        rho0: f64,
        /// Write the replicate ensemble as CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A scalar report entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

/// Numeric table with optional row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    /// Header of the label column and the labels themselves.
    pub row_labels: Option<(String, Vec<String>)>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub fields: Vec<(String, Field)>,
    pub table: Option<Table>,
}

impl Report {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            fields: Vec::new(),
            table: None,
        }
    }

    fn field(mut self, key: impl Into<String>, value: Field) -> Self {
        self.fields.push((key.into(), value));
        self
    }

    fn num(self, key: impl Into<String>, v: f64) -> Self {
        self.field(key, Field::Num(v))
    }

    fn int(self, key: impl Into<String>, v: usize) -> Self {
        self.field(key, Field::Int(v as i64))
    }

    fn text(self, key: impl Into<String>, v: impl ToString) -> Self {
        self.field(key, Field::Text(v.to_string()))
    }

    pub fn to_json(&self) -> Json {
        let mut map = Map::new();
        map.insert("command".into(), json!(self.command));
        for (k, v) in &self.fields {
            let value = match v {
                Field::Num(x) => json!(x),
                Field::Int(i) => json!(i),
                Field::Text(s) => json!(s),
                Field::Bool(b) => json!(b),
            };
            map.insert(k.clone(), value);
        }
        if let Some(t) = &self.table {
            let mut tm = Map::new();
            tm.insert("columns".into(), json!(t.columns));
            if let Some((head, labels)) = &t.row_labels {
                tm.insert("row_label".into(), json!(head));
                tm.insert("row_labels".into(), json!(labels));
            }
            tm.insert("rows".into(), json!(t.rows));
            map.insert("table".into(), Json::Object(tm));
        }
        Json::Object(map)
    }

    pub fn write_text<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "command: {}", self.command)?;
        for (k, v) in &self.fields {
            let shown = match v {
                Field::Num(x) => fmt_sig(*x, 6),
                Field::Int(i) => i.to_string(),
                Field::Text(s) => s.clone(),
                Field::Bool(b) => b.to_string(),
            };
            writeln!(out, "{k}: {shown}")?;
        }
        if let Some(t) = &self.table {
            let mut header: Vec<String> = Vec::new();
            if let Some((head, _)) = &t.row_labels {
                header.push(head.clone());
            }
            header.extend(t.columns.iter().cloned());
            writeln!(out, "{}", pad_row(&header))?;
            for (i, row) in t.rows.iter().enumerate() {
                let mut cells = Vec::new();
                if let Some((_, labels)) = &t.row_labels {
                    cells.push(labels[i].clone());
                }
                cells.extend(row.iter().map(|&v| fmt_sig(v, 6)));
                writeln!(out, "{}", pad_row(&cells))?;
            }
        }
        Ok(())
    }

    /// CSV: the table if there is one, otherwise `field,value` pairs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match &self.table {
            Some(t) => {
                let mut header = Vec::new();
                if let Some((head, _)) = &t.row_labels {
                    header.push(head.clone());
                }
                header.extend(t.columns.iter().cloned());
                w.write_record(&header)?;
                for (i, row) in t.rows.iter().enumerate() {
                    let mut rec = Vec::new();
                    if let Some((_, labels)) = &t.row_labels {
                        rec.push(labels[i].clone());
                    }
                    rec.extend(row.iter().map(|v| format!("{v}")));
                    w.write_record(&rec)?;
                }
            }
            None => {
                w.write_record(["field", "value"])?;
                w.write_record(["command", self.command.as_str()])?;
                for (k, v) in &self.fields {
                    let shown = match v {
                        Field::Num(x) => format!("{x}"),
                        Field::Int(i) => i.to_string(),
                        Field::Text(s) => s.clone(),
                        Field::Bool(b) => b.to_string(),
                    };
                    w.write_record([k.as_str(), shown.as_str()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn pad_row(cells: &[String]) -> String {
    cells
        .iter()
        .map(|c| format!("{c:>12}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Formats `v` with `digits` significant digits, like C's `%g`.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    // Rounding may carry into the next decade (9.999995 -> 10.0000).
    let rounded: f64 = format!("{:.*e}", digits - 1, v).parse().unwrap_or(v);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, v);
        let (mant, e) = s.split_once('e').expect("exponent");
        format!("{}e{}", trim_zeros(mant), e)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.into())
    }
}

fn pair_labels(columns: &[String]) -> std::result::Result<(String, String), Failure> {
    match columns {
        [a, b] if a != b => Ok((a.clone(), b.clone())),
        [a, _] => Err(Failure::Usage(format!("--columns names {a} twice"))),
        _ => Err(Failure::Usage(format!(
            "--columns needs exactly two labels, got {}",
            columns.len()
        ))),
    }
}

/// Loads the pair (A, B) as a sample with x = B and y = A.
fn load_pair(args: &PairArgs) -> std::result::Result<(String, String, PairedSample<f64>), Failure> {
    let (a, b) = pair_labels(&args.columns)?;
    let data = ingest_csv(&args.input.input, !args.input.no_header)?;
    let sample = PairedSample::new(data.column(&b)?.to_vec(), data.column(&a)?.to_vec())?;
    Ok((a, b, sample))
}

fn rstar_key(a: &str, b: &str) -> String {
    format!("r*({a}|{b})")
}

fn execute(cmd: &Command) -> std::result::Result<Report, Failure> {
    Ok(match cmd {
        Command::Pearson(args) => {
            let (a, b, s) = load_pair(args)?;
            Report::new("pearson")
                .text("columns", format!("{a},{b}"))
                .int("n", s.len())
                .num("pearson", gencorr::pearson(&s)?)
        }
        Command::Rstar(args) => {
            let (a, b, s) = load_pair(args)?;
            let pair = gencorr::rstar(&s)?;
            Report::new("rstar")
                .int("n", s.len())
                .num(rstar_key(&a, &b), pair.y_given_x)
                .num(rstar_key(&b, &a), pair.x_given_y)
                .field("cov_sign", Field::Int(pair.cov_sign.into()))
                .field("sign_indeterminate", Field::Bool(pair.sign_indeterminate))
        }
        Command::Depmeas(args) => {
            let (a, b, s) = load_pair(args)?;
            let pair = gencorr::rstar(&s)?;
            Report::new("depmeas")
                .int("n", s.len())
                .num(rstar_key(&a, &b), pair.y_given_x)
                .num(rstar_key(&b, &a), pair.x_given_y)
                .num("dep_meas", pair.max_dependence())
        }
        Command::Classify(args) => {
            let (a, b, s) = load_pair(&args.pair)?;
            let pair = gencorr::rstar(&s)?;
            let class = gencorr::classify_dependence(&pair, args.epsilon)?;
            Report::new("classify")
                .num(rstar_key(&a, &b), pair.y_given_x)
                .num(rstar_key(&b, &a), pair.x_given_y)
                .num("epsilon", args.epsilon)
                .text("dependence", class)
        }
        Command::Matrix(args) => {
            let data = ingest_csv(&args.input.input, !args.input.no_header)?;
            let labels: Vec<String> = if args.columns.is_empty() {
                data.names().to_vec()
            } else {
                args.columns.clone()
            };
            let columns = labels
                .iter()
                .map(|l| data.column(l).map(<[f64]>::to_vec))
                .collect::<Result<Vec<_>>>()?;
            let m = gencorr::gencorr_matrix(&labels, &columns)?;
            if let Some(path) = &args.out {
                m.write_csv(File::create(path)?)?;
            }
            let mut rep = Report::new("matrix").int("n", data.n_rows());
            rep.table = Some(Table {
                columns: m.labels.clone(),
                row_labels: Some(("response".into(), m.labels.clone())),
                rows: m.values.clone(),
            });
            rep
        }
        Command::Taraldsen(sub) => taraldsen_report(sub)?,
        Command::Fisherz(args) => {
            let (z, sd) = taraldsen::fisher_z(args.obs_r, args.n)?;
            Report::new("fisherz")
                .num("obs_r", args.obs_r)
                .int("n", args.n)
                .num("z", z)
                .num("sd", sd)
        }
        Command::Boot(BootCommand::Ci {
            pair,
            replicates,
            seed,
            level,
            tail,
            rho0,
            out,
        }) => {
            let (a, b, s) = load_pair(pair)?;
            let estimate = gencorr::rstar_one_way(&s)?;
            let ens = bootstrap::bootstrap_rstar(s.x(), s.y(), *replicates, *seed)?;
            let iv = bootstrap::interval(&ens, *level, *tail)?;
            let decision: Decision = bootstrap::accept_reject(&iv, *rho0);
            if let Some(path) = out {
                ens.write_csv(File::create(path)?)?;
            }
            Report::new("boot ci")
                .text("statistic", rstar_key(&a, &b))
                .num("estimate", estimate)
                .int("replicates", ens.len())
                .int("excluded", ens.excluded)
                .field("seed", Field::Text(seed.to_string()))
                .num("level", *level)
                .text("tail", tail)
                .num("lo", iv.lo)
                .num("up", iv.up)
                .num("rho0", *rho0)
                .text("decision", decision)
        }
    })
}

fn taraldsen_report(cmd: &TaraldsenCommand) -> std::result::Result<Report, Failure> {
    let params = |d: &DensityArgs| TaraldsenParams::from_sample_size(d.rho, d.n);
    Ok(match cmd {
        TaraldsenCommand::Pvalue { density, obs_r, tail } => {
            let grid = taraldsen::build_grid(&params(density)?, density.step)?;
            Report::new("taraldsen pvalue")
                .int("n", density.n)
                .num("rho", density.rho)
                .num("obs_r", *obs_r)
                .text("tail", tail)
                .num("p_value", taraldsen::p_value_on_grid(&grid, *obs_r, *tail)?)
        }
        TaraldsenCommand::Quantile { density, level } => Report::new("taraldsen quantile")
            .int("n", density.n)
            .num("rho", density.rho)
            .num("level", *level)
            .num("quantile", taraldsen::quantile(&params(density)?, *level, density.step)?),
        TaraldsenCommand::Table { step, raw } => {
            let t = taraldsen::table1(&taraldsen::TABLE_SAMPLE_SIZES, &taraldsen::TABLE_PROBS, *step)?;
            let rows = if *raw { t.values.clone() } else { t.rounded() };
            let mut rep = Report::new("taraldsen table").num("step", *step);
            rep.table = Some(Table {
                columns: t.probs.iter().map(|p| format!("{p}")).collect(),
                row_labels: Some(("n".into(), t.sample_sizes.iter().map(|n| n.to_string()).collect())),
                rows,
            });
            rep
        }
        TaraldsenCommand::Density { density, out } => {
            let grid = taraldsen::build_grid(&params(density)?, density.step)?;
            let mut rep = Report::new("taraldsen density")
                .int("n", density.n)
                .num("rho", density.rho)
                .num("step", density.step)
                .int("points", grid.len())
                .num("total", grid.total());
            match out {
                Some(path) => {
                    grid.write_csv(File::create(path)?)?;
                    rep = rep.text("out", path.display());
                }
                None => {
                    rep.table = Some(Table {
                        columns: vec!["r".into(), "height".into()],
                        row_labels: None,
                        rows: grid.points().map(|(r, h)| vec![r, h]).collect(),
                    });
                }
            }
            rep
        }
    })
}

fn emit(report: &Report, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Text => report.write_text(out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report.to_json())?;
            writeln!(out)?;
        }
        Format::Csv => report.write_csv(&mut *out)?,
    }
    Ok(())
}

fn error_chain(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut cur: Option<&dyn std::error::Error> = std::error::Error::source(e);
    while let Some(s) = cur {
        msg.push_str(&format!(": {s}"));
        cur = s.source();
    }
    msg
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status: 0 success, 1 computation error,
/// 2 usage error.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = execute(&cli.command).and_then(|rep| emit(&rep, cli.format, out).map_err(Failure::Compute));
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(err, "error: {}", error_chain(&e));
            1
        }
    }
}
