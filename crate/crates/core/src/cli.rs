//! Batch command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors (unknown or missing flags,
//! out-of-range parameters), 1 on domain or resource errors. Output goes to
//! stdout, or to `--output` through an atomic rename.
//!
//! `--config <file.json>` supplies default flag values as a JSON object whose
//! keys are flag names without the leading dashes, e.g.
//! `{"sigma": 9.48, "n": 60000, "orders": "2..30"}`. Flags given on the
//! command line take precedence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::accountant::{self, to_approx_dp, ApproxDp, Ledger};
use crate::amplification::{self, CheckinSpec, SubsampleSpec};
use crate::baselines;
use crate::error::Error;
use crate::io::write_atomic;
use crate::rdp::{self, MechanismSpec, RdpCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckinMethod {
    Fast,
    Direct,
}

/// Target `δ` for conversion: explicit, or `auto` for `1/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaArg {
    Auto,
    Value(f64),
}

#[derive(Debug, Parser)]
#[command(
    name = "shuffle-rdp",
    version,
    about = "Renyi-DP accounting for the shuffle Gaussian mechanism",
    args_override_self = true
)]
struct Cli {
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format (default json; table2 defaults to a text table)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// JSON file with default flag values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact shuffle Gaussian RDP curve, optionally converted to (ε, δ)
    Rdp(RdpArgs),
    /// Subsampled (fixed m of n) shuffle Gaussian RDP curve
    Subsample(SubsampleArgs),
    /// Shuffled check-in RDP curve
    Checkin(CheckinArgs),
    /// Append a curve to a JSON ledger and report the composed curve
    Compose(ComposeArgs),
    /// Convert a curve or ledger to (ε, δ)-DP
    Convert(ConvertArgs),
    /// Approximate-DP baseline row (clones bound + strong composition)
    Clones(ClonesArgs),
    /// Side-by-side baseline and exact rows under composition
    Table2(Table2Args),
    /// Check that the shuffle Gaussian moment is non-increasing in n
    ScanMonotonic(ScanArgs),
}

#[derive(Debug, Args)]
struct RdpArgs {
    #[arg(long, value_parser = positive_f64)]
    sigma: f64,
    #[arg(long, value_parser = positive_u64)]
    n: u64,
    /// Orders, e.g. `2..30` or `2,4,8` (inclusive ranges)
    #[arg(long, value_parser = parse_orders, default_value = "2..30")]
    orders: Orders,
    /// Conversion δ, or `auto` for 1/n
    #[arg(long, value_parser = parse_delta)]
    delta: Option<DeltaArg>,
    /// Number of composed rounds before conversion
    #[arg(long, value_parser = positive_u64, default_value = "1")]
    rounds: u64,
    /// Emit converted ε for 1..=MAX compositions, exact and unshuffled bound
    #[arg(long, value_name = "MAX", value_parser = positive_u64)]
    sweep_compositions: Option<u64>,
}

#[derive(Debug, Args)]
struct SubsampleArgs {
    #[arg(long, value_parser = positive_f64)]
    sigma: f64,
    /// Users sampled per round
    #[arg(long, value_parser = positive_u64)]
    m: u64,
    /// Population size (sets γ = m/n)
    #[arg(long, value_parser = positive_u64, required_unless_present = "gamma")]
    n: Option<u64>,
    /// Sampling rate, when no population is given
    #[arg(long, value_parser = unit_rate, conflicts_with = "n")]
    gamma: Option<f64>,
    #[arg(long, value_parser = parse_orders, default_value = "2..30")]
    orders: Orders,
    #[arg(long, value_parser = parse_delta)]
    delta: Option<DeltaArg>,
    #[arg(long, value_parser = positive_u64, default_value = "1")]
    rounds: u64,
}

#[derive(Debug, Args)]
struct CheckinArgs {
    #[arg(long, value_parser = positive_f64)]
    sigma: f64,
    #[arg(long, value_parser = positive_u64)]
    n: u64,
    /// Check-in probability
    #[arg(long, value_parser = unit_rate)]
    gamma: f64,
    #[arg(long, value_parser = parse_orders, default_value = "2..30")]
    orders: Orders,
    /// Comma-separated Chernoff slack values in (0, 1)
    #[arg(long, value_parser = parse_delta_grid)]
    delta_grid: Option<DeltaGrid>,
    #[arg(long, value_enum, default_value = "fast")]
    method: CheckinMethod,
    #[arg(long, value_parser = parse_delta)]
    delta: Option<DeltaArg>,
    #[arg(long, value_parser = positive_u64, default_value = "1")]
    rounds: u64,
}

#[derive(Debug, Args)]
struct ComposeArgs {
    /// Ledger file; created if missing
    #[arg(long)]
    ledger: PathBuf,
    /// Curve JSON (a bare curve or the output of rdp/subsample/checkin)
    #[arg(long, required_unless_present = "sigma")]
    curve: Option<PathBuf>,
    /// Shuffle Gaussian σ, when no curve file is given
    #[arg(long, value_parser = positive_f64, conflicts_with = "curve", requires = "n")]
    sigma: Option<f64>,
    #[arg(long, value_parser = positive_u64)]
    n: Option<u64>,
    #[arg(long, value_parser = parse_orders, default_value = "2..30")]
    orders: Orders,
    #[arg(long, value_parser = positive_u64, default_value = "1")]
    rounds: u64,
    #[arg(long, value_parser = parse_delta)]
    delta: Option<DeltaArg>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long, required_unless_present = "ledger", conflicts_with = "ledger")]
    curve: Option<PathBuf>,
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[arg(long, value_parser = parse_delta)]
    delta: DeltaArg,
    /// Population size, used by `--delta auto`
    #[arg(long, value_parser = positive_u64)]
    n: Option<u64>,
}

#[derive(Debug, Args)]
struct ClonesArgs {
    #[arg(long, value_parser = positive_f64)]
    sigma: f64,
    #[arg(long, value_parser = positive_u64)]
    n: u64,
    #[arg(long, value_parser = positive_u64, default_value = "1")]
    max_k: u64,
    /// Final δ budget, `auto` for 1/n
    #[arg(long, value_parser = parse_delta, default_value = "auto")]
    delta: DeltaArg,
    /// LDP sensitivity of the reports
    #[arg(long, value_parser = positive_f64, default_value = "2")]
    sensitivity: f64,
}

#[derive(Debug, Args)]
struct Table2Args {
    #[arg(long, value_parser = positive_f64, default_value = "9.48")]
    sigma: f64,
    #[arg(long, value_parser = positive_u64, default_value = "60000")]
    n: u64,
    #[arg(long, value_parser = positive_u64, default_value = "7")]
    max_k: u64,
    #[arg(long, value_parser = parse_orders, default_value = "2..30")]
    orders: Orders,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long, value_parser = positive_f64)]
    sigma: f64,
    #[arg(long, value_parser = parse_order)]
    lambda: u32,
    /// Inclusive range of database sizes, e.g. `1..100`
    #[arg(long, value_parser = parse_n_range)]
    n: (u64, u64),
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn positive_u64(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got `{s}`")),
    }
}

fn unit_rate(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Err(format!("expected a rate in (0, 1], got `{s}`")),
    }
}

fn parse_order(s: &str) -> Result<u32, String> {
    match s.trim().parse::<u32>() {
        Ok(v) if v >= 2 => Ok(v),
        _ => Err(format!("expected an integer order >= 2, got `{s}`")),
    }
}

/// A parsed order list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orders(pub Vec<u32>);

#[derive(Debug, Clone, PartialEq)]
struct DeltaGrid(Vec<f64>);

/// `a..b` (inclusive) and single orders, comma separated.
pub fn parse_orders(s: &str) -> Result<Orders, String> {
    let mut out = std::collections::BTreeSet::new();
    for piece in s.split(',').filter(|p| !p.trim().is_empty()) {
        match piece.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse_order(a)?, parse_order(b)?);
                if a > b {
                    return Err(format!("empty order range `{piece}`"));
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(parse_order(piece)?);
            }
        }
    }
    if out.is_empty() {
        return Err("no orders given".into());
    }
    Ok(Orders(out.into_iter().collect()))
}

fn parse_n_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let a = positive_u64(a.trim())?;
    let b = positive_u64(b.trim())?;
    if a > b {
        return Err(format!("empty range `{s}`"));
    }
    Ok((a, b))
}

fn parse_delta(s: &str) -> Result<DeltaArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(DeltaArg::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(DeltaArg::Value(v)),
        _ => Err(format!("expected `auto` or a number in (0, 1), got `{s}`")),
    }
}

fn parse_delta_grid(s: &str) -> Result<DeltaGrid, String> {
    let grid = s
        .split(',')
        .map(|p| match p.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
            _ => Err(format!("delta grid value `{p}` is not inside (0, 1)")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if grid.is_empty() {
        return Err("delta grid is empty".into());
    }
    Ok(DeltaGrid(grid))
}

/// A resolved conversion target and where it came from.
#[derive(Debug, Clone, Copy)]
struct Delta {
    value: f64,
    auto: bool,
}

impl Delta {
    fn resolve(arg: DeltaArg, n: Option<u64>) -> Result<Self, Failure> {
        match arg {
            DeltaArg::Value(v) => Ok(Self { value: v, auto: false }),
            DeltaArg::Auto => match n {
                Some(n) if n > 1 => Ok(Self {
                    value: accountant::default_delta(n),
                    auto: true,
                }),
                Some(_) => Err(Failure::Usage("--delta auto needs --n greater than 1".into())),
                None => Err(Failure::Usage("--delta auto needs --n".into())),
            },
        }
    }

    fn source(&self) -> &'static str {
        if self.auto {
            "auto (1/n)"
        } else {
            "explicit"
        }
    }

    fn to_json(self) -> Value {
        json!({ "value": self.value, "source": self.source() })
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

/// Run the command line, writing to the process stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Run the command line against explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match inject_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    2
                }
            };
        }
    };
    match execute(&cli, err) {
        Ok(text) => match &cli.output {
            Some(path) => match write_atomic(path, text.as_bytes()) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    1
                }
            },
            None => {
                let _ = out.write_all(text.as_bytes());
                0
            }
        },
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Expand `--config <file>` into flags placed right after the subcommand
/// name, so explicit flags later on the line override them.
fn inject_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut iter = argv.into_iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(iter.next().ok_or("--config needs a file path")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("--config {}: {e}", path.to_string_lossy()))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| format!("--config: {e}"))?;
    let Value::Object(map) = doc else {
        return Err("--config must hold a JSON object".into());
    };
    let mut flags = Vec::new();
    for (key, value) in map {
        let flag = OsString::from(format!("--{}", key.replace('_', "-")));
        match value {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => {
                flags.push(flag);
                flags.push(n.to_string().into());
            }
            Value::String(s) => {
                flags.push(flag);
                flags.push(s.into());
            }
            Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                flags.push(flag);
                flags.push(joined.into());
            }
            Value::Object(_) => return Err(format!("--config key `{key}` cannot be an object")),
        }
    }
    const SUBCOMMANDS: [&str; 8] = [
        "rdp",
        "subsample",
        "checkin",
        "compose",
        "convert",
        "clones",
        "table2",
        "scan-monotonic",
    ];
    let pos = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .ok_or("--config needs a subcommand")?;
    rest.splice(pos + 1..pos + 1, flags);
    Ok(rest)
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Result<String, Failure> {
    let format = cli.format;
    match &cli.command {
        Command::Rdp(a) => cmd_rdp(a, format),
        Command::Subsample(a) => cmd_subsample(a, format),
        Command::Checkin(a) => cmd_checkin(a, format),
        Command::Compose(a) => cmd_compose(a, format),
        Command::Convert(a) => cmd_convert(a, format),
        Command::Clones(a) => cmd_clones(a, format),
        Command::Table2(a) => cmd_table2(a, format),
        Command::ScanMonotonic(a) => cmd_scan(a, format, err),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self(w)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.0.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> String {
        String::from_utf8(self.0.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn curve_csv(curve: &RdpCurve) -> String {
    let mut csv = Csv::new(&["order", "epsilon"]);
    for (o, e) in curve.points() {
        csv.row([o.to_string(), e.to_string()]);
    }
    csv.finish()
}

/// Conversion block shared by the curve-producing commands.
fn conversion_json(curve: &RdpCurve, rounds: u64, delta: Option<Delta>) -> Result<Value, Failure> {
    let Some(delta) = delta else {
        return Ok(Value::Null);
    };
    let composed = curve.scaled(rounds);
    let dp = to_approx_dp(&composed, delta.value)?;
    Ok(json!({ "rounds": rounds, "delta": delta.to_json(), "approx_dp": to_value(&dp) }))
}

fn cmd_rdp(a: &RdpArgs, format: Option<Format>) -> Result<String, Failure> {
    let spec = MechanismSpec::new(a.sigma, a.n)?;
    let curve = rdp::rdp_curve(&spec, &a.orders.0)?;
    let bound = rdp::upper_bound_curve(a.sigma, &a.orders.0)?;
    let delta = match (a.delta, a.sweep_compositions) {
        (Some(d), _) => Some(Delta::resolve(d, Some(a.n))?),
        (None, Some(_)) => Some(Delta::resolve(DeltaArg::Auto, Some(a.n))?),
        (None, None) => None,
    };

    if let Some(max) = a.sweep_compositions {
        let delta = delta.expect("resolved above");
        let mut rows = Vec::with_capacity(max as usize);
        for k in 1..=max {
            let exact = to_approx_dp(&curve.scaled(k), delta.value)?;
            let upper = to_approx_dp(&bound.scaled(k), delta.value)?;
            rows.push((k, exact, upper));
        }
        return Ok(match format.unwrap_or(Format::Json) {
            Format::Csv => {
                let mut csv = Csv::new(&["compositions", "epsilon_shuffle", "epsilon_bound", "order_shuffle", "order_bound"]);
                for (k, e, u) in &rows {
                    csv.row([
                        k.to_string(),
                        e.epsilon.to_string(),
                        u.epsilon.to_string(),
                        opt(e.optimal_order),
                        opt(u.optimal_order),
                    ]);
                }
                csv.finish()
            }
            Format::Json => pretty(&json!({
                "command": "rdp",
                "mechanism": to_value(&spec),
                "orders": a.orders.0,
                "delta": delta.to_json(),
                "sweep": rows.iter().map(|(k, e, u)| json!({
                    "compositions": k,
                    "shuffle": to_value(e),
                    "bound": to_value(u),
                })).collect::<Vec<_>>(),
            })),
        });
    }

    Ok(match format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["order", "epsilon", "bound"]);
            for (o, e) in curve.points() {
                csv.row([o.to_string(), e.to_string(), opt(bound.get(*o))]);
            }
            csv.finish()
        }
        Format::Json => pretty(&json!({
            "command": "rdp",
            "mechanism": to_value(&spec),
            "orders": a.orders.0,
            "curve": to_value(&curve),
            "bound": to_value(&bound),
            "conversion": conversion_json(&curve, a.rounds, delta)?,
            "bound_conversion": conversion_json(&bound, a.rounds, delta)?,
        })),
    })
}

fn cmd_subsample(a: &SubsampleArgs, format: Option<Format>) -> Result<String, Failure> {
    let spec = match (a.n, a.gamma) {
        (Some(n), _) => SubsampleSpec::new(a.sigma, a.m, n)?,
        (None, Some(g)) => SubsampleSpec::with_rate(a.sigma, a.m, g)?,
        (None, None) => return Err(Failure::Usage("one of --n or --gamma is required".into())),
    };
    let curve = amplification::subsampled_curve(&spec, &a.orders.0)?;
    let delta = a.delta.map(|d| Delta::resolve(d, a.n)).transpose()?;
    Ok(match format.unwrap_or(Format::Json) {
        Format::Csv => curve_csv(&curve),
        Format::Json => pretty(&json!({
            "command": "subsample",
            "mechanism": to_value(&spec),
            "orders": a.orders.0,
            "curve": to_value(&curve),
            "conversion": conversion_json(&curve, a.rounds, delta)?,
        })),
    })
}

fn cmd_checkin(a: &CheckinArgs, format: Option<Format>) -> Result<String, Failure> {
    let grid = a.delta_grid.clone().map(|g| g.0).unwrap_or_else(amplification::default_delta_grid);
    let spec = CheckinSpec::with_delta_grid(a.sigma, a.n, a.gamma, grid)?;
    let delta = a.delta.map(|d| Delta::resolve(d, Some(a.n))).transpose()?;
    let (curve, choices) = match a.method {
        CheckinMethod::Fast => {
            let (c, b) = amplification::checkin_curve(&spec, &a.orders.0)?;
            (c, Some(b))
        }
        CheckinMethod::Direct => (amplification::checkin_curve_direct(&spec, &a.orders.0)?, None),
    };
    Ok(match format.unwrap_or(Format::Json) {
        Format::Csv => match &choices {
            Some(bounds) => {
                let mut csv = Csv::new(&["order", "epsilon", "chernoff_delta", "instances"]);
                for (o, b) in bounds {
                    csv.row([o.to_string(), b.epsilon.to_string(), b.delta.to_string(), b.instances.to_string()]);
                }
                csv.finish()
            }
            None => curve_csv(&curve),
        },
        Format::Json => pretty(&json!({
            "command": "checkin",
            "method": match a.method { CheckinMethod::Fast => "fast", CheckinMethod::Direct => "direct" },
            "mechanism": to_value(&spec),
            "orders": a.orders.0,
            "curve": to_value(&curve),
            "chernoff": choices.map(|b| b.iter().map(|(o, c)| json!({
                "order": o, "delta": c.delta, "instances": c.instances,
            })).collect::<Vec<_>>()),
            "conversion": conversion_json(&curve, a.rounds, delta)?,
        })),
    })
}

/// Read a curve from either a bare curve document or a command output that
/// carries one under `curve`.
fn read_curve(path: &Path) -> Result<RdpCurve, Failure> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let doc: Value = serde_json::from_str(&text).map_err(Error::from)?;
    let inner = doc.get("curve").cloned().unwrap_or(doc);
    Ok(serde_json::from_value(inner).map_err(Error::from)?)
}

fn cmd_compose(a: &ComposeArgs, format: Option<Format>) -> Result<String, Failure> {
    let curve = match (&a.curve, a.sigma, a.n) {
        (Some(p), _, _) => read_curve(p)?,
        (None, Some(sigma), Some(n)) => rdp::rdp_curve(&MechanismSpec::new(sigma, n)?, &a.orders.0)?,
        _ => return Err(Failure::Usage("give --curve, or --sigma with --n".into())),
    };
    let mut ledger = Ledger::load_or_new(&a.ledger)?;
    ledger.append(&curve, a.rounds)?;
    ledger.save(&a.ledger)?;
    let composed = ledger
        .composed()
        .ok_or_else(|| Failure::Run(Error::Domain("composed curve is not finite".into())))?;
    let delta = a.delta.map(|d| Delta::resolve(d, a.n)).transpose()?;
    Ok(match format.unwrap_or(Format::Json) {
        Format::Csv => curve_csv(&composed),
        Format::Json => pretty(&json!({
            "command": "compose",
            "ledger": a.ledger.to_string_lossy(),
            "entries": ledger.entries().len(),
            "composed": to_value(&composed),
            "conversion": conversion_json(&composed, 1, delta)?,
        })),
    })
}

fn cmd_convert(a: &ConvertArgs, format: Option<Format>) -> Result<String, Failure> {
    let (curve, source) = match (&a.curve, &a.ledger) {
        (Some(p), _) => (read_curve(p)?, p.to_string_lossy().into_owned()),
        (None, Some(p)) => {
            let ledger = Ledger::load(p)?;
            let c = ledger
                .composed()
                .ok_or_else(|| Failure::Usage(format!("ledger {} is empty", p.display())))?;
            (c, p.to_string_lossy().into_owned())
        }
        (None, None) => return Err(Failure::Usage("give --curve or --ledger".into())),
    };
    let delta = Delta::resolve(a.delta, a.n)?;
    let dp = to_approx_dp(&curve, delta.value)?;
    Ok(match format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["epsilon", "delta", "optimal_order", "clamped"]);
            csv.row([dp.epsilon.to_string(), dp.delta.to_string(), opt(dp.optimal_order), dp.clamped.to_string()]);
            csv.finish()
        }
        Format::Json => pretty(&json!({
            "command": "convert",
            "source": source,
            "delta": delta.to_json(),
            "approx_dp": to_value(&dp),
        })),
    })
}

fn cmd_clones(a: &ClonesArgs, format: Option<Format>) -> Result<String, Failure> {
    let target = Delta::resolve(a.delta, Some(a.n))?;
    let row = baselines::clones_table_row_with(a.sigma, a.n, a.max_k, target.value, a.sensitivity)?;
    Ok(match format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["k", "epsilon", "delta", "epsilon0", "delta0", "round_epsilon", "round_delta"]);
            for p in &row {
                csv.row([
                    p.k.to_string(),
                    p.dp.epsilon.to_string(),
                    p.dp.delta.to_string(),
                    p.epsilon0.to_string(),
                    p.delta0.to_string(),
                    p.round.epsilon.to_string(),
                    p.round.delta.to_string(),
                ]);
            }
            csv.finish()
        }
        Format::Json => pretty(&json!({
            "command": "clones",
            "sigma": a.sigma,
            "n": a.n,
            "sensitivity": a.sensitivity,
            "delta": target.to_json(),
            "row": to_value(&row),
        })),
    })
}

/// Both rows of the composition comparison.
pub struct Table2 {
    pub clones: Vec<ApproxDp>,
    pub ours: Vec<ApproxDp>,
    pub delta: f64,
}

/// Baseline and exact rows for `k = 1..=max_k` at `δ = 1/n`.
pub fn table2(sigma: f64, n: u64, max_k: u64, orders: &[u32]) -> crate::Result<Table2> {
    let delta = accountant::default_delta(n);
    let clones = baselines::clones_table_row(sigma, n, max_k)?
        .into_iter()
        .map(|p| p.dp)
        .collect();
    let curve = rdp::rdp_curve(&MechanismSpec::new(sigma, n)?, orders)?;
    let ours = (1..=max_k)
        .map(|k| to_approx_dp(&curve.scaled(k), delta))
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(Table2 { clones, ours, delta })
}

fn cmd_table2(a: &Table2Args, format: Option<Format>) -> Result<String, Failure> {
    let t = table2(a.sigma, a.n, a.max_k, &a.orders.0)?;
    Ok(match format {
        None => {
            let mut s = String::new();
            let cell = |v: f64| format!("{v:>9.5}");
            s.push_str(&format!("{:<20}", "No. of composition"));
            for k in 1..=a.max_k {
                s.push_str(&format!("{k:>9}"));
            }
            s.push('\n');
            s.push_str(&format!("{:<20}", "Clones"));
            t.clones.iter().for_each(|d| s.push_str(&cell(d.epsilon)));
            s.push('\n');
            s.push_str(&format!("{:<20}", "Ours"));
            t.ours.iter().for_each(|d| s.push_str(&cell(d.epsilon)));
            s.push('\n');
            s
        }
        Some(Format::Csv) => {
            let mut csv = Csv::new(&["k", "clones", "ours"]);
            for (k, (c, o)) in t.clones.iter().zip(&t.ours).enumerate() {
                csv.row([(k + 1).to_string(), c.epsilon.to_string(), o.epsilon.to_string()]);
            }
            csv.finish()
        }
        Some(Format::Json) => pretty(&json!({
            "command": "table2",
            "sigma": a.sigma,
            "n": a.n,
            "orders": a.orders.0,
            "delta": Delta { value: t.delta, auto: true }.to_json(),
            "clones": to_value(&t.clones),
            "ours": to_value(&t.ours),
        })),
    })
}

fn cmd_scan(a: &ScanArgs, format: Option<Format>, err: &mut dyn Write) -> Result<String, Failure> {
    let scan = amplification::monotonicity_scan(a.sigma, a.lambda, a.n.0..=a.n.1)?;
    Ok(match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let _ = writeln!(err, "non-increasing: {}", scan.non_increasing);
            let mut csv = Csv::new(&["n", "log_moment", "moment"]);
            for p in &scan.points {
                csv.row([p.n.to_string(), p.log_moment.to_string(), p.moment.to_string()]);
            }
            csv.finish()
        }
        Format::Json => pretty(&json!({
            "command": "scan-monotonic",
            "scan": to_value(&scan),
        })),
    })
}
