//! Command-line front end. [`run`] parses arguments, executes one command and
//! writes JSON or CSV; the return value is the process exit code.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 domain or argument
//! error, 4 precision contract or undecidable branch, 5 sampling failure.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Rational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::base::BetaParam;
use crate::dynamics::{digits, is_simple, parse_point, random_nonsimple_point, GreedyDigits};
use crate::enclosure::{format_float, Enclosure};
use crate::error::{Error, Result};
use crate::field::Point;
use crate::measure::build_density;
use crate::regularity::{
    holder_probe_multi, lemma2_check, lemma3_trace, lipschitz_statistic, witness_sequence,
    ProbeConfig,
};
use crate::rng::stream_rng;
use crate::stats::{clt_run, CltConfig, OrbitMode};
use crate::takagi::{default_depth, evaluate, evaluate_batch, takagi_classical};
use crate::REFERENCE_SEED;

/// Version of every JSON document this tool emits.
pub const SCHEMA_VERSION: u32 = 1;

const EXIT_IO: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Certified,
    Fast,
}

/// Options shared by every command.
#[derive(Args, Clone, Debug)]
pub struct RunConfig {
    /// Base: a rational in (1, 2] (`2`, `1.7`, `17/10`) or one of golden,
    /// sqrt2, plastic, supergolden, tribonacci.
    #[arg(long, global = true, default_value = "2")]
    pub beta: String,
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = 256)]
    pub precision_bits: u32,
    /// Digit / series depth (command specific default).
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true, default_value_t = REFERENCE_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Upper bound on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Orbit mode for the statistics commands.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Fast)]
    pub mode: Mode,
}

#[derive(Parser, Debug)]
#[command(name = "beta-takagi", version, about = "Greedy beta-expansions and the generalized Takagi function")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Greedy digits of x.
    Digits {
        /// `p/q`, a decimal, or `digits:0101…`
        #[arg(long)]
        x: String,
    },
    /// G_beta(x) by both series, with the classical cross-check at beta = 2.
    Eval {
        #[arg(long)]
        x: String,
    },
    /// G_beta on a uniform grid of `points` points in [0, 1].
    Curve {
        #[arg(long, default_value_t = 257)]
        points: usize,
    },
    /// Invariant density, F and M; optionally the measure of [a, b].
    Measure {
        /// Orbit truncation K.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, requires = "b")]
        a: Option<String>,
        #[arg(long, requires = "a")]
        b: Option<String>,
    },
    /// Hölder quotient probe at x.
    Holder {
        /// A point literal or `random`.
        #[arg(long, default_value = "random")]
        x: String,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 9.313225746154785e-10)]
        delta_min: f64,
        #[arg(long, default_value_t = 0.25)]
        delta_max: f64,
    },
    /// Non-Lipschitz witness sequence at x.
    Witness {
        #[arg(long, default_value = "random")]
        x: String,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        /// Also report the running-maximum statistic through this depth.
        #[arg(long)]
        stat_depth: Option<usize>,
    },
    /// Central limit theorem run for the digit sums.
    Clt {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Separation inequality for the pair (x, y).
    Lemma2 {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Log-limit trace and small-neighbourhood events along the orbit of x.
    Lemma3 {
        #[arg(long, default_value = "random")]
        x: String,
        #[arg(long, default_value_t = 100)]
        n_max: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Digits { .. } => "digits",
            Command::Eval { .. } => "eval",
            Command::Curve { .. } => "curve",
            Command::Measure { .. } => "measure",
            Command::Holder { .. } => "holder",
            Command::Witness { .. } => "witness",
            Command::Clt { .. } => "clt",
            Command::Lemma2 { .. } => "lemma2",
            Command::Lemma3 { .. } => "lemma3",
        }
    }
}

/// What a command produced: a JSON result and, when CSV was requested, the
/// CSV text.
enum Output {
    Json(Value),
    Csv(String),
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Parse(format!("csv output: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn point_arg(base: &BetaParam, text: &str, seed: u64) -> Result<Point> {
    if text == "random" {
        random_nonsimple_point(base, &mut stream_rng(seed, 0))
    } else {
        parse_point(base, text)
    }
}

fn value_of(e: &Enclosure) -> String {
    format_float(&e.value())
}

fn radius_of(e: &Enclosure) -> String {
    format_float(&e.radius())
}

fn cmd_digits(cfg: &RunConfig, base: &BetaParam, x: &str) -> Result<Output> {
    let depth = cfg.depth.unwrap_or_else(|| base.max_depth().min(64));
    let (p, user) = if let Some(list) = x.strip_prefix("digits:") {
        let ds: Vec<u8> = list
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '_'))
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidDigits(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        let g = GreedyDigits::from_user(base, ds)?;
        (crate::dynamics::synthesize(base, &g.digits), Some(g))
    } else {
        (parse_point(base, x)?, None)
    };
    let g = match user {
        Some(g) if cfg.depth.is_none() => g,
        _ => digits(base, &p, depth)?,
    };
    let simple = is_simple(base, &p, g.depth().max(1))?;
    match cfg.format {
        Format::Json => Ok(Output::Json(json!({
            "x": p.enclosure(base),
            "depth": g.depth(),
            "digits": g.to_string_compact(),
            "certified": g.certified,
            "source": g.source,
            "simple": simple,
        }))),
        Format::Csv => Ok(Output::Csv(csv_text(
            &["beta", "x", "depth", "digits", "certified"],
            vec![vec![
                base.label().to_string(),
                value_of(&p.enclosure(base)),
                g.depth().to_string(),
                g.to_string_compact(),
                g.certified.to_string(),
            ]],
        )?)),
    }
}

fn cmd_eval(cfg: &RunConfig, base: &BetaParam, x: &str) -> Result<Output> {
    let d = build_density(base, None)?;
    let depth = cfg.depth.unwrap_or_else(|| default_depth(base, &d.m));
    let p = parse_point(base, x)?;
    let e = evaluate(base, &p, &d.m, depth)?;
    let classical = match (base.is_two(), p.as_rational()) {
        (true, Some(r)) => Some(classical_check(&r, &e.value_def, depth, base.precision_bits())?),
        _ => None,
    };
    match cfg.format {
        Format::Json => {
            let mut v = to_value(&e);
            if let Some(c) = classical {
                v["classical"] = c;
            }
            Ok(Output::Json(v))
        }
        Format::Csv => Ok(Output::Csv(csv_text(
            &["x", "value", "radius", "depth"],
            vec![vec![
                value_of(&e.x),
                value_of(&e.value_def),
                radius_of(&e.value_def),
                depth.to_string(),
            ]],
        )?)),
    }
}

fn classical_check(x: &Rational, g: &Enclosure, depth: usize, prec: u32) -> Result<Value> {
    let t = takagi_classical(x, depth.max(prec as usize), prec)?;
    let delta = g.sub(&t).abs();
    Ok(json!({
        "value": t,
        "delta": format_float(&delta.value()),
        "within_radii": g.intersects(&t),
    }))
}

fn cmd_curve(cfg: &RunConfig, base: &BetaParam, points: usize) -> Result<Output> {
    if points < 2 {
        return Err(Error::InvalidParameter("points must be >= 2".into()));
    }
    let d = build_density(base, None)?;
    let depth = cfg.depth.unwrap_or_else(|| default_depth(base, &d.m));
    let grid: Vec<Rational> = (0..points)
        .map(|k| Rational::from((k as u64, points as u64 - 1)))
        .collect();
    let xs: Vec<Point> = grid.iter().map(|r| Point::from_rational(base, r)).collect();
    let evals = evaluate_batch(base, &xs, &d.m, depth)?;
    let (mut max_delta, mut within) = (None::<Enclosure>, true);
    if base.is_two() {
        for (r, e) in grid.iter().zip(&evals) {
            let t = takagi_classical(r, depth.max(base.precision_bits() as usize), base.precision_bits())?;
            within &= e.value_def.intersects(&t);
            let delta = e.value_def.sub(&t).abs();
            max_delta = Some(match max_delta {
                Some(m) => m.max(&delta),
                None => delta,
            });
        }
    }
    match cfg.format {
        Format::Json => {
            let rows: Vec<Value> = evals
                .iter()
                .map(|e| json!({"x": e.x, "value": e.value_def, "depth": depth}))
                .collect();
            let mut v = json!({
                "M": d.m,
                "depth": depth,
                "points": rows,
            });
            if let Some(m) = max_delta {
                v["classical"] = json!({
                    "max_delta": format_float(&m.hi().clone()),
                    "within_radii": within,
                });
            }
            Ok(Output::Json(v))
        }
        Format::Csv => Ok(Output::Csv(csv_text(
            &["x", "value", "radius", "depth"],
            evals
                .iter()
                .map(|e| {
                    vec![
                        value_of(&e.x),
                        value_of(&e.value_def),
                        radius_of(&e.value_def),
                        depth.to_string(),
                    ]
                })
                .collect(),
        )?)),
    }
}

fn unit_enclosure(base: &BetaParam, text: &str) -> Result<Enclosure> {
    Ok(parse_point(base, text)?.enclosure(base))
}

fn cmd_measure(
    cfg: &RunConfig,
    base: &BetaParam,
    k: Option<usize>,
    a: Option<&str>,
    b: Option<&str>,
) -> Result<Output> {
    let d = build_density(base, k.or(cfg.depth))?;
    let interval = match (a, b) {
        (Some(a), Some(b)) => {
            let (ea, eb) = (unit_enclosure(base, a)?, unit_enclosure(base, b)?);
            Some(json!({
                "a": ea,
                "b": eb,
                "measure": d.interval_measure(&ea, &eb)?,
            }))
        }
        _ => None,
    };
    match cfg.format {
        Format::Json => {
            let mut v = to_value(&d);
            v["total_measure"] = to_value(
                &d.interval_measure(&Enclosure::zero(base.precision_bits()), &Enclosure::one(base.precision_bits()))?,
            );
            if let Some(i) = interval {
                v["interval"] = i;
            }
            Ok(Output::Json(v))
        }
        Format::Csv => {
            let mut buf = Vec::new();
            d.write_csv(&mut buf)?;
            Ok(Output::Csv(String::from_utf8(buf).expect("csv is utf-8")))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_holder(
    cfg: &RunConfig,
    base: &BetaParam,
    x: &str,
    alphas: &[f64],
    samples: usize,
    delta_min: f64,
    delta_max: f64,
) -> Result<Output> {
    let d = build_density(base, None)?;
    let p = point_arg(base, x, cfg.seed)?;
    let depth = cfg.depth.unwrap_or_else(|| {
        let need = (-delta_min.log2() / base.log2_beta()).ceil() as usize;
        (default_depth(base, &d.m) + need).min(base.max_depth())
    });
    let probe = ProbeConfig {
        n_samples: samples,
        delta_min,
        delta_max,
        depth,
        seed: cfg.seed,
    };
    let reports = holder_probe_multi(base, &d.m, &p, alphas, &probe)?;
    match cfg.format {
        Format::Json => Ok(Output::Json(json!({ "reports": reports }))),
        Format::Csv => {
            let mut rows = Vec::new();
            for r in &reports {
                for s in &r.samples {
                    rows.push(vec![
                        r.alpha.to_string(),
                        s.index.to_string(),
                        to_value(&s.side).as_str().unwrap_or_default().to_string(),
                        value_of(&s.y),
                        value_of(&s.distance),
                        s.n.to_string(),
                        value_of(&s.quotient),
                        radius_of(&s.quotient),
                        value_of(&s.bound),
                        to_value(&s.status).as_str().unwrap_or_default().to_string(),
                    ]);
                }
            }
            Ok(Output::Csv(csv_text(
                &[
                    "alpha", "index", "side", "y", "distance", "N", "quotient", "quotient_radius",
                    "bound", "status",
                ],
                rows,
            )?))
        }
    }
}

fn cmd_witness(
    cfg: &RunConfig,
    base: &BetaParam,
    x: &str,
    n_max: usize,
    stat_depth: Option<usize>,
) -> Result<Output> {
    let d = build_density(base, None)?;
    let p = point_arg(base, x, cfg.seed)?;
    let w = witness_sequence(base, &d.m, &p, n_max)?;
    let stat = stat_depth
        .map(|depth| lipschitz_statistic(base, &d.m, &p, depth))
        .transpose()?;
    match cfg.format {
        Format::Json => {
            let mut v = to_value(&w);
            if let Some(s) = stat {
                v["lipschitz_statistic"] = json!({
                    "depth": s.depth,
                    "max_stat": s.max_stat,
                    "argmax_N": s.argmax_n,
                    "ones": s.ones,
                });
            }
            Ok(Output::Json(v))
        }
        Format::Csv => Ok(Output::Csv(csv_text(
            &["N", "l_N", "x_N", "quotient_direct", "quotient_formula", "statistic"],
            w.rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.l_n.to_string(),
                        value_of(&r.x_n),
                        value_of(&r.quotient_direct),
                        value_of(&r.quotient_formula),
                        value_of(&r.statistic),
                    ]
                })
                .collect(),
        )?)),
    }
}

fn cmd_clt(cfg: &RunConfig, base: &BetaParam, n: usize, m: usize, bins: usize) -> Result<Output> {
    let d = build_density(base, None)?;
    let run = clt_run(
        base,
        &d,
        &CltConfig {
            n,
            m,
            seed: cfg.seed,
            mode: match cfg.mode {
                Mode::Certified => OrbitMode::Certified,
                Mode::Fast => OrbitMode::Fast,
            },
            bins,
        },
    )?;
    match cfg.format {
        Format::Json => Ok(Output::Json(json!({
            "M": run.m_beta,
            "n": run.n,
            "m": run.m,
            "seed": run.seed,
            "mode": run.mode,
            "mean": run.mean,
            "v_hat": run.v_hat,
            "v_hat_squared": run.v_hat * run.v_hat,
            "ks_distance": run.ks_distance,
            "histogram": run.histogram,
        }))),
        Format::Csv => Ok(Output::Csv(csv_text(
            &["bin_lo", "bin_hi", "count"],
            run.histogram
                .iter()
                .map(|h| vec![h.bin_lo.to_string(), h.bin_hi.to_string(), h.count.to_string()])
                .collect(),
        )?)),
    }
}

fn opt_value(e: &Option<Enclosure>) -> String {
    e.as_ref().map_or_else(|| "-inf".to_string(), value_of)
}

fn opt_bool(b: Option<bool>) -> String {
    b.map_or_else(|| "undecided".to_string(), |v| v.to_string())
}

fn cmd_lemma2(cfg: &RunConfig, base: &BetaParam, x: &str, y: &str) -> Result<Output> {
    let px = parse_point(base, x)?;
    let py = parse_point(base, y)?;
    let r = lemma2_check(base, &px, &py)?;
    match cfg.format {
        Format::Json => Ok(Output::Json(to_value(&r))),
        Format::Csv => Ok(Output::Csv(csv_text(
            &["N", "side", "lhs", "rhs", "holds", "certified"],
            vec![vec![
                r.n.to_string(),
                to_value(&r.side).as_str().unwrap_or_default().to_string(),
                value_of(&r.lhs),
                value_of(&r.rhs),
                r.holds.to_string(),
                r.certified.to_string(),
            ]],
        )?)),
    }
}

fn cmd_lemma3(cfg: &RunConfig, base: &BetaParam, x: &str, n_max: usize) -> Result<Output> {
    let p = point_arg(base, x, cfg.seed)?;
    let t = lemma3_trace(base, &p, n_max)?;
    match cfg.format {
        Format::Json => Ok(Output::Json(to_value(&t))),
        Format::Csv => Ok(Output::Csv(csv_text(
            &["n", "log_tau", "log_one_minus", "event_a", "event_b"],
            t.rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        opt_value(&r.log_tau),
                        opt_value(&r.log_one_minus),
                        opt_bool(r.event_a),
                        opt_bool(r.event_b),
                    ]
                })
                .collect(),
        )?)),
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let cfg = &cli.config;
    let base = BetaParam::parse(&cfg.beta, cfg.precision_bits)?;
    if let Some(d) = cfg.depth {
        base.check_depth(d)?;
    }
    match &cli.command {
        Command::Digits { x } => cmd_digits(cfg, &base, x),
        Command::Eval { x } => cmd_eval(cfg, &base, x),
        Command::Curve { points } => cmd_curve(cfg, &base, *points),
        Command::Measure { k, a, b } => cmd_measure(cfg, &base, *k, a.as_deref(), b.as_deref()),
        Command::Holder {
            x,
            alpha,
            samples,
            delta_min,
            delta_max,
        } => cmd_holder(cfg, &base, x, alpha, *samples, *delta_min, *delta_max),
        Command::Witness {
            x,
            n_max,
            stat_depth,
        } => cmd_witness(cfg, &base, x, *n_max, *stat_depth),
        Command::Clt { n, m, bins } => cmd_clt(cfg, &base, *n, *m, *bins),
        Command::Lemma2 { x, y } => cmd_lemma2(cfg, &base, x, y),
        Command::Lemma3 { x, n_max } => cmd_lemma3(cfg, &base, x, *n_max),
    }
}

fn envelope(cli: &Cli, result: Value) -> Value {
    let cfg = &cli.config;
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": cli.command.name(),
        "config": {
            "beta": cfg.beta,
            "precision_bits": cfg.precision_bits,
            "depth": cfg.depth,
            "seed": cfg.seed,
        },
        "result": result,
    })
}

fn error_document(kind: &str, message: &str, code: i32) -> String {
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "kind": kind, "message": message, "exit_code": code },
    });
    serde_json::to_string_pretty(&v).expect("json") + "\n"
}

fn emit(text: &str, path: Option<&PathBuf>, out: &mut dyn Write) -> std::io::Result<()> {
    match path {
        Some(p) => File::create(p)?.write_all(text.as_bytes()),
        None => out.write_all(text.as_bytes()),
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code. Output, including machine-readable error documents, goes to
/// `out` unless `--out` names a file.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let msg = e.render().to_string();
                    let _ = out.write_all(error_document("usage", msg.trim(), EXIT_USAGE).as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.config.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::InvalidParameter(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };
    let (text, code) = match result {
        Ok(Output::Json(v)) => (
            serde_json::to_string_pretty(&envelope(&cli, v)).expect("json") + "\n",
            0,
        ),
        Ok(Output::Csv(s)) => (s, 0),
        Err(e) => (error_document(e.kind(), &e.to_string(), e.exit_code()), e.exit_code()),
    };
    match emit(&text, cli.config.out.as_ref(), out) {
        Ok(()) => code,
        Err(e) => {
            let _ = out.write_all(error_document("io", &e.to_string(), EXIT_IO).as_bytes());
            EXIT_IO
        }
    }
}
