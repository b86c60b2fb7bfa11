use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::Ordering;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use bsunit::cache::{ZetaCache, CACHE_ENV};
use bsunit::groupring::{gross_stark_check, GroupRingElt};
use bsunit::measure::MeasureHandle;
use bsunit::padic::{Branch, PadicCtx, PadicElt};
use bsunit::pipeline::{compute_unit, conjugates, work_precision, UnitConfig, DEFAULT_PRECISION};
use bsunit::quadfield::Ideal;
use bsunit::shintani::{Smoothing, PIECE_EVALUATIONS};
use bsunit::Error;

mod selftest;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "bsunit", version, about = "Brumer-Stark p-units of real quadratic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conjugates and minimal polynomial of the unit.
    Compute(FieldArgs),
    /// Smoothed partial zeta values of every narrow class.
    Zeta {
        #[command(flatten)]
        field: FieldArgs,
        /// Evaluate at s = -k.
        #[arg(short, long, default_value_t = 0)]
        k: u32,
    },
    /// Measures of the residue classes modulo p^level for one class.
    Measure {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1)]
        level: u32,
        /// Narrow class index.
        #[arg(long, default_value_t = 0)]
        class: usize,
    },
    /// Compares the derivative of the Stickelberger element with the logarithms of the conjugates.
    GrossCheck {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(short, long, default_value_t = 3)]
        m: u32,
    },
    /// Runs the built-in invariant checks.
    Selftest {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SmoothingArg {
    Inverse,
    Direct,
    None,
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Fundamental discriminant of the real quadratic field.
    #[arg(short = 'D', long = "disc", allow_hyphen_values = true)]
    d: i64,
    /// Odd prime, inert in the field.
    #[arg(short, long)]
    p: u64,
    /// Split prime used for smoothing.
    #[arg(short = 'l', long = "ell")]
    ell: u64,
    /// Target precision in base-p digits.
    #[arg(short = 'M', long, default_value_t = DEFAULT_PRECISION)]
    precision: u32,
    /// Embed sqrt(D) as the negative square root.
    #[arg(long)]
    minus_branch: bool,
    /// Which prime above ell to smooth at (0 or 1).
    #[arg(long, default_value_t = 0)]
    ell_prime: usize,
    /// Extra inert smoothing primes, comma separated.
    #[arg(long, value_delimiter = ',')]
    extra_t: Vec<u64>,
    #[arg(long, value_enum, default_value_t = SmoothingArg::Inverse)]
    smoothing: SmoothingArg,
    /// Guard digits for coefficient recognition.
    #[arg(long, default_value_t = bsunit::recognize::DEFAULT_GUARD)]
    guard: u32,
    /// Zeta cache file.
    #[arg(long, env = CACHE_ENV)]
    cache: Option<PathBuf>,
    /// Skip the zeta cache.
    #[arg(long)]
    no_cache: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl FieldArgs {
    fn config(&self) -> UnitConfig {
        let mut c = UnitConfig::new(self.d, self.p, self.ell);
        c.precision = self.precision;
        c.branch = if self.minus_branch { Branch::Minus } else { Branch::Plus };
        c.ell_prime = self.ell_prime;
        c.extra_t = self.extra_t.clone();
        c.smoothing = match self.smoothing {
            SmoothingArg::Inverse => Smoothing::Inverse,
            SmoothingArg::Direct => Smoothing::Direct,
            SmoothingArg::None => Smoothing::None,
        };
        c.guard = self.guard;
        c
    }

    fn config_json(&self) -> Value {
        json!({
            "D": self.d,
            "p": self.p,
            "ell": self.ell,
            "precision": self.precision,
            "branch": if self.minus_branch { "minus" } else { "plus" },
            "ell_prime": self.ell_prime,
            "extra_t": self.extra_t,
            "smoothing": self.config().smoothing.name(),
        })
    }

    fn open_cache(&self) -> Result<Option<ZetaCache>, Error> {
        if self.no_cache {
            return Ok(None);
        }
        let path = match &self.cache {
            Some(p) => p.clone(),
            None => default_cache_path(),
        };
        ZetaCache::open(&path).map(Some)
    }
}

fn default_cache_path() -> PathBuf {
    let base = std::env::var_os("XDG_CACHE_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")))
        .unwrap_or_else(std::env::temp_dir);
    base.join("bsunit").join("zeta.cache")
}

/// Exit codes: 3 configuration, 4 precision, 5 arithmetic, 6 cache i/o.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotFundamental(_)
        | Error::NotReal(_)
        | Error::NotOddPrime(_)
        | Error::Ramified { .. }
        | Error::NotInert { .. }
        | Error::UnsupportedSmoothing { .. }
        | Error::NotCoprime(_)
        | Error::LevelTooDeep { .. }
        | Error::Invalid(_) => 3,
        Error::InsufficientPrecision(_) | Error::PrecisionExhausted(_) | Error::NoPurePDenominator => 4,
        Error::Io(_) => 6,
        _ => 5,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        3 => "config",
        4 => "precision",
        6 => "io",
        _ => "arithmetic",
    }
}

fn ideal_json(i: &Ideal) -> Value {
    json!([i.a, i.b, i.c])
}

fn padic_json(x: &PadicElt) -> Value {
    let (val, c0, c1, prec) = x.to_strings();
    json!({"val": val, "c0": c0, "c1": c1, "prec": prec})
}

fn ring_json(x: &GroupRingElt) -> Value {
    let m: Map<String, Value> =
        x.coeffs.iter().enumerate().map(|(i, c)| (i.to_string(), Value::String(c.to_string()))).collect();
    Value::Object(m)
}

fn emit(format: Format, report: &Value, table: impl FnOnce() -> String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).unwrap()),
        Format::Table => print!("{}", table()),
    }
}

fn cmd_compute(a: &FieldArgs) -> Result<(), Error> {
    let cfg = a.config();
    cfg.setup()?;
    let u = compute_unit(&cfg)?;
    let p = cfg.p;
    let coeffs: Vec<Value> = u
        .minpoly
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({"degree": i, "a": c.a.to_string(), "b": c.b.to_string(), "k": c.k, "text": c.display(&u.field, p)})
        })
        .collect();
    let report = json!({
        "schema": SCHEMA,
        "command": "compute",
        "config": a.config_json(),
        "class_number": u.group.order,
        "work_precision": u.work_precision,
        "ords": u.conjugates.iter().map(|c| c.zeta0).collect::<Vec<_>>(),
        "conjugates": u.conjugates.iter().map(|c| json!({
            "class": c.class_index,
            "rep": ideal_json(&c.rep),
            "ord": c.zeta0,
            "value": padic_json(&c.value),
        })).collect::<Vec<_>>(),
        "minpoly": {
            "degree": u.minpoly.degree,
            "coefficients": coeffs,
            "precision": u.minpoly.precision,
            "headroom": u.minpoly.headroom,
        },
    });
    emit(a.format, &report, || {
        let mut s = format!("ords {:?}\n", u.conjugates.iter().map(|c| c.zeta0).collect::<Vec<_>>());
        for (i, c) in u.minpoly.display(&u.field, p).iter().enumerate().rev() {
            s += &format!("X^{i}: {c}\n");
        }
        s
    });
    Ok(())
}

fn cmd_zeta(a: &FieldArgs, k: u32) -> Result<(), Error> {
    let cfg = a.config();
    let (field, group) = cfg.setup()?;
    let mut cache = a.open_cache()?;
    let mut rows = Vec::new();
    for (i, rep) in group.reps.iter().enumerate() {
        let mut q = cfg.query(rep);
        q.k = k;
        let z = match cache.as_mut() {
            Some(c) => c.zeta(&field, &q)?,
            None => bsunit::shintani::partial_zeta(&field, &q)?,
        };
        rows.push((i, rep.clone(), z));
    }
    let report = json!({
        "schema": SCHEMA,
        "command": "zeta",
        "config": a.config_json(),
        "k": k,
        "classes": rows.iter().map(|(i, rep, z)| json!({
            "class": i, "rep": ideal_json(rep), "zeta": z.to_string()
        })).collect::<Vec<_>>(),
        "cache": cache.as_ref().map(|c| json!({"hits": c.hits()})),
        "piece_evaluations": PIECE_EVALUATIONS.load(Ordering::Relaxed),
    });
    emit(a.format, &report, || rows.iter().map(|(i, _, z)| format!("class {i}: {z}\n")).collect());
    Ok(())
}

fn cmd_measure(a: &FieldArgs, level: u32, class: usize) -> Result<(), Error> {
    let cfg = a.config();
    let (field, group) = cfg.setup()?;
    let rep = group.reps.get(class).ok_or_else(|| Error::Invalid(format!("no class {class}")))?;
    let h = MeasureHandle::new(&field, &cfg.query(rep))?;
    let t = h.level_table(level)?;
    let pm = cfg.p.pow(level);
    let values: Vec<Value> = t
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0)
        .map(|(i, v)| json!([i as u64 / pm, i as u64 % pm, v]))
        .collect();
    let report = json!({
        "schema": SCHEMA,
        "command": "measure",
        "config": a.config_json(),
        "class": class,
        "level": level,
        "total": t.total(),
        "nonzero": values,
    });
    emit(a.format, &report, || {
        let mut s = format!("class {class} level {level} total {}\n", t.total());
        for (i, v) in t.values.iter().enumerate().filter(|(_, v)| **v != 0) {
            s += &format!("({}, {}): {v}\n", i as u64 / pm, i as u64 % pm);
        }
        s
    });
    Ok(())
}

fn cmd_gross(a: &FieldArgs, m: u32) -> Result<(), Error> {
    let mut cfg = a.config();
    cfg.precision = cfg.precision.min(m + 10);
    let (field, group) = cfg.setup()?;
    let zetas = bsunit::pipeline::class_zetas(&field, &group, &cfg)?;
    let ctx = PadicCtx::new(cfg.p, work_precision(cfg.precision, &zetas), cfg.d, cfg.branch)?;
    let conj = conjugates(&field, &group, &cfg, &ctx)?;
    let g = gross_stark_check(&cfg, m, &conj)?;
    let report = json!({
        "schema": SCHEMA,
        "command": "gross-check",
        "config": a.config_json(),
        "m": m,
        "theta_derivative": ring_json(&g.theta),
        "log_norms": ring_json(&g.log_side),
        "characters": g.characters.iter().map(|c| json!({
            "chi": c.chi,
            "theta_valuation": c.theta_valuation,
            "residual_valuation": c.residual_valuation,
        })).collect::<Vec<_>>(),
        "min_residual_valuation": g.min_residual(),
    });
    emit(a.format, &report, || {
        let mut s = String::new();
        for c in &g.characters {
            s += &format!("chi {:?}: v(theta') = {}, v(residual) = {}\n", c.chi, c.theta_valuation, c.residual_valuation);
        }
        s + &format!("min residual valuation {}\n", g.min_residual())
    });
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (format, result) = match &cli.command {
        Command::Compute(a) => (a.format, cmd_compute(a)),
        Command::Zeta { field, k } => (field.format, cmd_zeta(field, *k)),
        Command::Measure { field, level, class } => (field.format, cmd_measure(field, *level, *class)),
        Command::GrossCheck { field, m } => (field.format, cmd_gross(field, *m)),
        Command::Selftest { format } => {
            let ok = selftest::run(*format == Format::Json);
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            if format == Format::Json {
                let report = json!({"schema": SCHEMA, "error": {"kind": error_kind(&e), "message": e.to_string()}});
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
