//! Command-line front end: evaluates the closed-form quantities, prints
//! sharp weight constants, runs the verification suites, and emits JSON/CSV
//! reports and plot-ready parameter tables.
//!
//! Exit codes: 0 on success (all checks pass), 1 when a verification run
//! finds a violation, 2 on usage, configuration, or domain errors.

use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bellman::{
    bellman_unweighted, bellman_weighted, omega_p, BellmanPoint, WeightedBellmanPoint,
};
use crate::error::{Error, Result};
use crate::extremal::{profile_limit_value, ProfileLimitConfig};
use crate::step::PiecewisePower;
use crate::tree::tree_from_json;
use crate::verify::{
    bruteforce_weighted_sup, fmt_sig, run_suite, Suite, SuiteConfig, TrialRow, VerificationReport,
};
use crate::weight::{power_weight_constants, PowerWeightSpec};

/// Runs the CLI on a full argument vector (including the program name) and
/// returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bellmax",
    version,
    about = "Exact Bellman bounds for dyadic-like maximal operators, with seeded verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print omega_p(y), the inverse of z^(p-1) (p - (p-1) z) on [1, p/(p-1)].
    Omega(OmegaArgs),
    /// Print the Bellman bound at (F, f); the weighted one when --a/--c are given.
    Bellman(BellmanArgs),
    /// Print the sharp constants (a, c) of the power weight w(t) = k t^b.
    Constants(ConstantsArgs),
    /// Run a verification suite and emit its reports.
    Verify(VerifyArgs),
    /// Evaluate a formula over a parameter grid as a CSV table.
    Table(TableArgs),
}

#[derive(Args, Debug)]
struct OmegaArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    y: f64,
    /// Output path (default standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BellmanArgs {
    #[arg(long)]
    p: f64,
    /// The p-th moment integral.
    #[arg(long = "F")]
    moment_p: f64,
    /// The plain mean integral.
    #[arg(long = "f")]
    mean: f64,
    /// Weight constant a (requires --c).
    #[arg(long, requires = "c")]
    a: Option<f64>,
    /// Weight constant c (requires --a).
    #[arg(long, requires = "a")]
    c: Option<f64>,
    /// Output path (default standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long)]
    k: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    p: f64,
    /// Output path (default standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite to run: thm1|thm2|prop1|thm3|prop2|doob|all.
    #[arg(long)]
    suite: String,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    p: Option<f64>,
    /// Moment target F.
    #[arg(long = "F")]
    moment_p: Option<f64>,
    /// Mean target f.
    #[arg(long = "f")]
    mean: Option<f64>,
    /// Power-weight scale k.
    #[arg(long)]
    k: Option<f64>,
    /// Power-weight exponent b.
    #[arg(long)]
    b: Option<f64>,
    /// Muckenhoupt target h for the profile-limit suite.
    #[arg(long)]
    h: Option<f64>,
    /// Weight-mass target z for the profile-limit suite.
    #[arg(long)]
    z: Option<f64>,
    /// Comma-separated splitting parameters for the profile-limit suite.
    #[arg(long)]
    alphas: Option<String>,
    /// Tree depth for randomly generated instances.
    #[arg(long)]
    depth: Option<u32>,
    /// Truncation endpoint for the rearrangement comparison.
    #[arg(long)]
    truncation: Option<f64>,
    /// Partition size for the brute-force supremum cross-check (thm2).
    #[arg(long)]
    pieces: Option<usize>,
    /// Proposal budget for the brute-force supremum cross-check (thm2).
    #[arg(long)]
    budget: Option<usize>,
    /// Measure-tree JSON file importing a fixed instance (thm1/prop1/thm3/doob).
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Piecewise-power JSON file: the comparison weight of the rearrangement suite.
    #[arg(long)]
    weight: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output path (default standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Formula: bellman|bellman_star|prop2_rhs.
    #[arg(long)]
    expr: String,
    /// Grid or scalar, e.g. `2` or `1.5:3:4`.
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "F")]
    moment_p: Option<String>,
    #[arg(long = "f")]
    mean: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    z: Option<String>,
    /// Output path (default standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Cmd::Omega(args) => {
            let value = omega_p(args.p, args.y)?;
            emit(&args.out, &format!("{}\n", fmt_sig(value)))?;
            Ok(0)
        }
        Cmd::Bellman(args) => {
            let value = match (args.a, args.c) {
                (Some(a), Some(c)) => bellman_weighted(&WeightedBellmanPoint::new(
                    args.p,
                    args.moment_p,
                    args.mean,
                    a,
                    c,
                )?),
                _ => bellman_unweighted(&BellmanPoint::new(args.p, args.moment_p, args.mean)?),
            };
            emit(&args.out, &format!("{}\n", fmt_sig(value)))?;
            Ok(0)
        }
        Cmd::Constants(args) => {
            let pair = power_weight_constants(&PowerWeightSpec::new(args.k, args.b, args.p)?)?;
            emit(&args.out, &format!("a={} c={}\n", fmt_sig(pair.a), fmt_sig(pair.c)))?;
            Ok(0)
        }
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Table(args) => cmd_table(args),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Maps the mandated external suite tokens onto the library's suites.
fn parse_suite(token: &str) -> Result<Suite> {
    Ok(match token {
        "thm1" => Suite::Rearrangement,
        "thm2" => Suite::WeightedUpper,
        "prop1" => Suite::PointwiseDomination,
        "thm3" => Suite::MomentChain,
        "prop2" => Suite::ProfileLimit,
        "doob" => Suite::Doob,
        "all" => Suite::All,
        other => {
            return Err(Error::Config(format!(
                "unknown suite {other}; expected thm1|thm2|prop1|thm3|prop2|doob|all"
            )))
        }
    })
}

fn parse_alphas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("alphas must be comma-separated numbers, got {s}")))
        })
        .collect()
}

/// Flags echoed into report headers, in a stable order, omitting unset ones.
fn verify_flag_echo(args: &VerifyArgs) -> Vec<(String, String)> {
    let mut flags: Vec<(String, String)> = vec![("suite".into(), args.suite.clone())];
    let mut add = |name: &str, value: Option<String>| {
        if let Some(v) = value {
            flags.push((name.into(), v));
        }
    };
    add("trials", args.trials.map(|v| v.to_string()));
    add("seed", Some(args.seed.to_string()));
    add("p", args.p.map(fmt_sig));
    add("F", args.moment_p.map(fmt_sig));
    add("f", args.mean.map(fmt_sig));
    add("k", args.k.map(fmt_sig));
    add("b", args.b.map(fmt_sig));
    add("h", args.h.map(fmt_sig));
    add("z", args.z.map(fmt_sig));
    add("alphas", args.alphas.clone());
    add("depth", args.depth.map(|v| v.to_string()));
    add("truncation", args.truncation.map(fmt_sig));
    add("pieces", args.pieces.map(|v| v.to_string()));
    add("budget", args.budget.map(|v| v.to_string()));
    add("tree", args.tree.as_ref().map(|v| v.display().to_string()));
    add("weight", args.weight.as_ref().map(|v| v.display().to_string()));
    add(
        "format",
        Some(match args.format {
            Format::Json => "json".into(),
            Format::Csv => "csv".into(),
        }),
    );
    flags
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let suite = parse_suite(&args.suite)?;
    let mut cfg = SuiteConfig {
        p: args.p,
        k: args.k,
        b: args.b,
        moment_p: args.moment_p,
        mean: args.mean,
        h: args.h,
        z: args.z,
        depth: args.depth,
        trials: args.trials,
        truncation: args.truncation,
        ..SuiteConfig::default()
    };
    if let Some(text) = &args.alphas {
        cfg.alphas = Some(parse_alphas(text)?);
    }
    if let Some(path) = &args.tree {
        let (tree, mut funcs) = tree_from_json(&fs::read_to_string(path)?)?;
        cfg.phi = funcs.remove("phi");
        cfg.leaf_weight = funcs.remove("w");
        cfg.tree = Some(tree);
    }
    if let Some(path) = &args.weight {
        if suite != Suite::Rearrangement {
            return Err(Error::Config(
                "--weight supplies the comparison weight of the thm1 suite only".into(),
            ));
        }
        cfg.comparison_weight = Some(PiecewisePower::from_json_str(&fs::read_to_string(path)?)?);
    }

    let mut reports = run_suite(suite, &cfg, args.seed)?;
    if args.pieces.is_some() || args.budget.is_some() {
        if suite != Suite::WeightedUpper {
            return Err(Error::Config(
                "--pieces/--budget drive the brute-force cross-check of the thm2 suite only".into(),
            ));
        }
        reports.push(bruteforce_gap_report(&cfg, args.pieces, args.budget, args.seed)?);
    }

    let flags = verify_flag_echo(&args);
    let text = match args.format {
        Format::Csv => render_csv(&flags, &reports),
        Format::Json => render_json(&flags, &reports)?,
    };
    emit(&args.out, &text)?;
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
}

/// Runs the independent brute-force supremum search and compares it with the
/// closed-form weighted bound: the oracle must reach at least 95% of the
/// bound and never exceed it.
fn bruteforce_gap_report(
    cfg: &SuiteConfig,
    pieces: Option<usize>,
    budget: Option<usize>,
    seed: u64,
) -> Result<VerificationReport> {
    let p = cfg.p.unwrap_or(2.0);
    let k = cfg.k.unwrap_or(1.0);
    let b = cfg.b.unwrap_or(0.0);
    let moment_p = cfg.moment_p.unwrap_or(2.0);
    let mean = cfg.mean.unwrap_or(1.0);
    let pieces = pieces.unwrap_or(64);
    let budget = budget.unwrap_or(20_000);
    let pair = power_weight_constants(&PowerWeightSpec::new(k, b, p)?)?;
    let bound = bellman_weighted(&WeightedBellmanPoint::new(p, moment_p, mean, pair.a, pair.c)?);
    let best = bruteforce_weighted_sup(p, k, b, moment_p, mean, pieces, budget, seed)?;
    let pass = best <= bound * (1.0 + 1e-8) && best >= bound * 0.95;
    Ok(VerificationReport {
        name: "bruteforce_gap".into(),
        instance: format!("p={p}, k={k}, b={b}, F={moment_p}, f={mean}, pieces={pieces}, budget={budget}"),
        seed,
        trials: 1,
        skipped: 0,
        lhs: best,
        rhs: bound,
        margin: bound - best,
        pass,
        worst_instance: json!({
            "p": p, "k": k, "b": b, "F": moment_p, "f": mean,
            "pieces": pieces, "budget": budget,
            "oracle": best, "bound": bound, "ratio": best / bound,
        }),
        rows: vec![TrialRow { trial: 0, lhs: best, rhs: bound, margin: bound - best, pass }],
    })
}

fn render_csv(flags: &[(String, String)], reports: &[VerificationReport]) -> String {
    let mut out = String::new();
    for (name, value) in flags {
        out.push_str(&format!("# {name}={value}\n"));
    }
    for report in reports {
        out.push_str(&format!(
            "# report name={} instance={} trials={} skipped={} pass={}\n",
            report.name,
            report.instance.replace('\n', " "),
            report.trials,
            report.skipped,
            report.pass
        ));
    }
    out.push_str(VerificationReport::csv_header());
    out.push('\n');
    for report in reports {
        for row in report.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

fn render_json(flags: &[(String, String)], reports: &[VerificationReport]) -> Result<String> {
    let flag_map: serde_json::Map<String, serde_json::Value> = flags
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let body = json!({
        "command": "verify",
        "flags": flag_map,
        "reports": reports,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&body)?))
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

enum TableExpr {
    Unweighted,
    Weighted,
    ProfileLimit,
}

/// Maps the mandated external expression tokens onto the formulas.
fn parse_expr(token: &str) -> Result<TableExpr> {
    Ok(match token {
        "bellman" => TableExpr::Unweighted,
        "bellman_star" => TableExpr::Weighted,
        "prop2_rhs" => TableExpr::ProfileLimit,
        other => {
            return Err(Error::Config(format!(
                "unknown expr {other}; expected bellman|bellman_star|prop2_rhs"
            )))
        }
    })
}

/// Parses a grid cell: a plain number, or `lo:hi:n` for `n` evenly spaced
/// points including both endpoints.
fn parse_grid(name: &str, spec: &str) -> Result<Vec<f64>> {
    let parse_num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("grid for {name}: {s} is not a number")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_num(single)?]),
        [lo, hi, n] => {
            let lo = parse_num(lo)?;
            let hi = parse_num(hi)?;
            let n: usize = n.trim().parse().map_err(|_| {
                Error::Config(format!("grid for {name}: count {n} is not a positive integer"))
            })?;
            if n == 0 {
                return Err(Error::Config(format!("grid for {name} needs at least one point")));
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
        }
        _ => Err(Error::Config(format!(
            "grid for {name} must be a number or lo:hi:n, got {spec}"
        ))),
    }
}

/// Quotes a CSV field when it contains a delimiter, quote, or newline.
fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn cmd_table(args: TableArgs) -> Result<i32> {
    let expr = parse_expr(&args.expr)?;
    let wanted: &[&str] = match expr {
        TableExpr::Unweighted => &["p", "F", "f"],
        TableExpr::Weighted => &["p", "a", "c", "F", "f"],
        TableExpr::ProfileLimit => &["p", "F", "f", "h", "z"],
    };
    let provided: [(&str, &Option<String>); 7] = [
        ("p", &args.p),
        ("F", &args.moment_p),
        ("f", &args.mean),
        ("a", &args.a),
        ("c", &args.c),
        ("h", &args.h),
        ("z", &args.z),
    ];
    for (name, value) in &provided {
        if value.is_some() && !wanted.contains(name) {
            return Err(Error::Config(format!(
                "parameter {name} does not apply to expr {}",
                args.expr
            )));
        }
    }
    let mut grids: Vec<Vec<f64>> = Vec::with_capacity(wanted.len());
    for name in wanted {
        let spec = provided
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| v.as_deref())
            .ok_or_else(|| {
                Error::Config(format!("expr {} needs parameter {name}", args.expr))
            })?;
        grids.push(parse_grid(name, spec)?);
    }
    let total: usize = grids.iter().map(Vec::len).product();
    if total > 1_000_000 {
        return Err(Error::TooLarge(format!("the grid has {total} points (limit 1e6)")));
    }

    let mut out = String::new();
    out.push_str(&wanted.join(","));
    out.push_str(",value,note\n");
    let mut index = vec![0usize; grids.len()];
    loop {
        let point: Vec<f64> = index.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
        let value = evaluate_expr(&expr, &point);
        for x in &point {
            out.push_str(&fmt_sig(*x));
            out.push(',');
        }
        match value {
            Ok(v) => {
                out.push_str(&fmt_sig(v));
                out.push_str(",\n");
            }
            Err(e) => {
                out.push_str("NA,");
                out.push_str(&csv_field(&e.to_string()));
                out.push('\n');
            }
        }
        // Odometer increment over the Cartesian product, last axis fastest.
        let mut axis = grids.len();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < grids[axis].len() {
                break;
            }
            index[axis] = 0;
            if axis == 0 {
                emit(&args.out, &out)?;
                return Ok(0);
            }
        }
    }
}

fn evaluate_expr(expr: &TableExpr, point: &[f64]) -> Result<f64> {
    match expr {
        TableExpr::Unweighted => {
            let (p, moment_p, mean) = (point[0], point[1], point[2]);
            Ok(bellman_unweighted(&BellmanPoint::new(p, moment_p, mean)?))
        }
        TableExpr::Weighted => {
            let (p, a, c, moment_p, mean) = (point[0], point[1], point[2], point[3], point[4]);
            Ok(bellman_weighted(&WeightedBellmanPoint::new(p, moment_p, mean, a, c)?))
        }
        TableExpr::ProfileLimit => {
            let (p, moment_p, mean, h, z) = (point[0], point[1], point[2], point[3], point[4]);
            profile_limit_value(&ProfileLimitConfig::new(p, moment_p, mean, h, z)?)
        }
    }
}
