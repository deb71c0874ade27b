//! `multicurve` command-line driver.
//!
//! Every subcommand writes its outputs plus a `manifest.json` (inputs with
//! SHA-256, seed, version) into `--out`. Floats are rounded to 15
//! significant digits, so identical manifests give byte-identical outputs
//! regardless of `--threads`.

pub mod acceptance;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use multicurve::curves::{CurveError, CurveSet};
use multicurve::hjm::{simulate, HjmError, PathEnsemble, SimulationGrid};
use multicurve::market_data::{
    parse_quotes, validate_config, validate_policy, EngineConfig, MarketDataError, QuoteFormat, QuoteSet,
};
use multicurve::pricing::{
    adjusted_one_period, price_reduced, AdjustedPrice, CsaTerms, DealSchedule, Decomposition, Market,
    PricingError,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] MarketDataError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Model(#[from] HjmError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for bad input, 1 for failures during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Pricing(PricingError::InvalidDeal(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "multicurve", version, about = "Multi-curve HJM engine with collateral-aware valuation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Bootstrap OIS discount and tenor forward curves from quotes.
    Bootstrap(Common),
    /// Simulate the HJM state and summarise it per grid date.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the first N paths to paths.csv.
        #[arg(long, value_name = "N")]
        dump_paths: Option<usize>,
    },
    /// Clean and collateral/credit/funding-adjusted value of a deal.
    Price {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        deal: PathBuf,
        /// Collateral policy; overrides the config's `policy`.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Adjusted forwards, convexity adjustments and adjusted bonds.
    Adjustments {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        tenor: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        maturities: Vec<f64>,
        /// Strike of the one-period contract; the par forward if omitted.
        #[arg(long)]
        strike: Option<f64>,
    },
    /// Run the acceptance checks.
    Selftest,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    quotes: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 or unset uses the config value, then all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    grid_dt: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

/// Rounds to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x + 0.0;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json!(round15(n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

struct Context {
    command: &'static str,
    out: PathBuf,
    format: Format,
    config: EngineConfig,
    inputs: Vec<(String, String)>,
    outputs: Vec<String>,
    parameters: Value,
}

impl Context {
    fn new(command: &'static str, c: &Common) -> Result<Self, CliError> {
        let mut ctx = Context {
            command,
            out: c.out.clone(),
            format: c.format,
            config: EngineConfig::default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            parameters: json!({}),
        };
        if let Some(path) = &c.config {
            let text = ctx.read_input(path)?;
            let raw: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Input(MarketDataError::MalformedRecord { line: e.line(), message: e.to_string() })
            })?;
            ctx.config = validate_config(&raw)?;
        }
        if let Some(p) = c.paths {
            if p == 0 {
                return Err(CliError::Usage("--paths must be positive".into()));
            }
            ctx.config.paths = p;
        }
        if let Some(s) = c.seed {
            ctx.config.seed = s;
        }
        if let Some(t) = c.threads {
            ctx.config.threads = t;
        }
        if let Some(dt) = c.grid_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Usage("--grid-dt must be positive".into()));
            }
            ctx.config.grid_dt = dt;
        }
        fs::create_dir_all(&ctx.out).map_err(io_err(&c.out))?;
        Ok(ctx)
    }

    fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|_| MarketDataError::FileNotFound(path.to_path_buf()))?;
        self.inputs
            .push((path.display().to_string(), hex::encode(Sha256::digest(&bytes))));
        String::from_utf8(bytes).map_err(|e| {
            CliError::Input(MarketDataError::MalformedRecord { line: 0, message: e.to_string() })
        })
    }

    fn quotes(&mut self, c: &Common) -> Result<QuoteSet, CliError> {
        let path = c
            .quotes
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("{} needs --quotes", self.command)))?;
        let format = QuoteFormat::from_path(path)
            .ok_or_else(|| CliError::Usage(format!("{}: expected a .csv or .json file", path.display())))?;
        self.read_input(path)?;
        Ok(parse_quotes(path, format)?)
    }

    fn curves(&mut self, c: &Common) -> Result<CurveSet, CliError> {
        let quotes = self.quotes(c)?;
        let config = &self.config;
        Ok(CurveSet::bootstrap(&quotes, config.extrapolate, |x| config.shift_for(x))?)
    }

    fn policy(&mut self, path: Option<&PathBuf>) -> Result<(), CliError> {
        if let Some(path) = path {
            let text = self.read_input(path)?;
            let raw: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Input(MarketDataError::MalformedRecord { line: e.line(), message: e.to_string() })
            })?;
            self.config.policy = validate_policy(&raw)?;
        }
        Ok(())
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|(path, sha)| json!({ "path": path, "sha256": sha }))
            .collect();
        self.outputs.sort();
        let manifest = json!({
            "command": self.command,
            "inputs": inputs,
            "outputs": self.outputs,
            "parameters": rounded(self.parameters.clone()),
            "seed": self.config.seed,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.out.join("manifest.json");
        fs::write(&path, text).map_err(io_err(&path))
    }

    fn with_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

fn csv_number(x: f64) -> String {
    format!("{}", round15(x))
}

fn bootstrap(c: &Common) -> Result<(), CliError> {
    let mut ctx = Context::new("bootstrap", c)?;
    let curves = ctx.curves(c)?;
    let mut discount = String::from("T,logP\n");
    for (t, l) in curves.discount.pillars().iter().zip(curves.discount.log_discounts()) {
        let _ = writeln!(discount, "{},{}", csv_number(*t), csv_number(*l));
    }
    let mut forwards = String::from("T,x,F\n");
    for f in &curves.forwards {
        for (t, v) in f.pillars().iter().zip(f.forwards()) {
            let _ = writeln!(forwards, "{},{},{}", csv_number(*t), csv_number(f.tenor()), csv_number(*v));
        }
    }
    ctx.write("discount.csv", &discount)?;
    ctx.write("forwards.csv", &forwards)?;
    log::info!(
        "bootstrapped {} OIS pillars and {} forward curves",
        curves.discount.pillars().len(),
        curves.forwards.len()
    );
    ctx.finish()
}

fn simulate_cmd(c: &Common, dump_paths: Option<usize>) -> Result<(), CliError> {
    let mut ctx = Context::new("simulate", c)?;
    let curves = match c.quotes {
        Some(_) => Some(ctx.curves(c)?),
        None => None,
    };
    let horizon = curves
        .as_ref()
        .map(|cs| cs.discount.last_pillar())
        .unwrap_or(10.0);
    let cfg = &ctx.config;
    let grid = SimulationGrid::regular(horizon, cfg.obs_dt, cfg.grid_dt, &[])?;
    let ens = ctx.with_pool(|| simulate(&cfg.model, &grid, cfg.paths, cfg.seed))??;
    ctx.parameters = json!({ "paths": cfg.paths, "grid_dt": cfg.grid_dt, "obs_dt": cfg.obs_dt, "horizon": horizon });
    let table = moments_csv(&ens, curves.as_ref())?;
    ctx.write("moments.csv", &table)?;
    if let Some(n) = dump_paths {
        ctx.write("paths.csv", &ens.to_csv(n))?;
    }
    ctx.finish()
}

/// Per grid date: means of `X`, `diag Y`, `v`, and, with curves, the mean
/// deflator next to `P_0(t)`.
fn moments_csv(ens: &PathEnsemble, curves: Option<&CurveSet>) -> Result<String, CliError> {
    let n = ens.num_factors();
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",X{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",Y{i}{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",v{i}");
    }
    if curves.is_some() {
        out.push_str(",D,P0");
    }
    out.push('\n');
    let paths = ens.num_paths() as f64;
    for (idx, &t) in ens.times().iter().enumerate() {
        let mut sums = vec![0.0; 3 * n];
        let mut deflator = 0.0;
        for p in 0..ens.num_paths() {
            let s = ens.state(p, idx);
            for k in 0..n {
                sums[k] += s.x[k];
                sums[n + k] += s.y_at(k, k);
                sums[2 * n + k] += s.v[k];
            }
            if let Some(cs) = curves {
                deflator += ens.deflator(&cs.discount, p, idx)?;
            }
        }
        out.push_str(&csv_number(t));
        for s in sums {
            let _ = write!(out, ",{}", csv_number(s / paths));
        }
        if let Some(cs) = curves {
            let p0 = cs.discount.discount_factor(t)?;
            let _ = write!(out, ",{},{}", csv_number(deflator / paths), csv_number(p0));
        }
        out.push('\n');
    }
    Ok(out)
}

fn price_json(p: &AdjustedPrice) -> Value {
    rounded(serde_json::to_value(p).expect("price serializes"))
}

fn price_csv(p: &AdjustedPrice) -> String {
    let d: &Decomposition = &p.decomposition;
    let mut out = String::from("field,value\n");
    for (k, v) in [
        ("clean", p.clean),
        ("adjusted", p.adjusted),
        ("cva", d.cva),
        ("dva", d.dva),
        ("funding_cost", d.funding_cost),
        ("collateral_cost", d.collateral_cost),
        ("std_error", p.std_error),
    ] {
        let _ = writeln!(out, "{k},{}", csv_number(v));
    }
    out
}

fn price(c: &Common, deal_path: &Path, policy: Option<&PathBuf>) -> Result<(), CliError> {
    let mut ctx = Context::new("price", c)?;
    let deal_text = ctx.read_input(deal_path)?;
    let deal = DealSchedule::from_json_str(&deal_text)?;
    ctx.policy(policy)?;
    let curves = ctx.curves(c)?;
    let cfg = &ctx.config;
    let mut extra = deal.required_times();
    extra.push(cfg.policy.delta);
    let grid = SimulationGrid::regular(deal.maturity(), cfg.obs_dt, cfg.grid_dt, &extra)?;
    let ens = ctx.with_pool(|| simulate(&cfg.model, &grid, cfg.paths, cfg.seed))??;
    let market = Market { curves: &curves, model: &cfg.model, ensemble: &ens };
    let terms = CsaTerms { policy: &cfg.policy, funding: &cfg.funding, credit: &cfg.credit };
    let result = price_reduced(&deal, &terms, &market)?;
    log::info!("clean {} adjusted {} (se {})", result.clean, result.adjusted, result.std_error);
    ctx.parameters = json!({ "paths": cfg.paths, "grid_dt": cfg.grid_dt, "obs_dt": cfg.obs_dt });
    let (name, text) = match ctx.format {
        Format::Json => (
            "price.json",
            serde_json::to_string_pretty(&price_json(&result)).expect("price serializes") + "\n",
        ),
        Format::Csv => ("price.csv", price_csv(&result)),
    };
    print!("{text}");
    ctx.write(name, &text)?;
    ctx.finish()
}

fn adjustments(
    c: &Common,
    policy: Option<&PathBuf>,
    tenor: f64,
    maturities: &[f64],
    strike: Option<f64>,
) -> Result<(), CliError> {
    if !(tenor > 0.0) || maturities.iter().any(|&t| !(t >= tenor)) {
        return Err(CliError::Usage("need --tenor > 0 and every maturity >= tenor".into()));
    }
    let mut ctx = Context::new("adjustments", c)?;
    ctx.policy(policy)?;
    let curves = ctx.curves(c)?;
    let fwd = curves.forward_curve(tenor)?;
    let cfg = &ctx.config;
    let horizon = maturities.iter().copied().fold(0.0, f64::max);
    let mut extra: Vec<f64> = maturities.iter().flat_map(|&t| [t, t - tenor]).collect();
    extra.push(cfg.policy.delta);
    let grid = SimulationGrid::regular(horizon, cfg.obs_dt, cfg.grid_dt, &extra)?;
    let ens = ctx.with_pool(|| simulate(&cfg.model, &grid, cfg.paths, cfg.seed))??;
    let market = Market { curves: &curves, model: &cfg.model, ensemble: &ens };
    let terms = CsaTerms { policy: &cfg.policy, funding: &cfg.funding, credit: &cfg.credit };
    let mut rows = Vec::new();
    for &t in maturities {
        let k = match strike {
            Some(k) => k,
            None => fwd.forward(t)?,
        };
        let a = adjusted_one_period(k, t, tenor, &terms, &market)?;
        rows.push((t, k, a));
    }
    ctx.parameters = json!({
        "paths": cfg.paths, "grid_dt": cfg.grid_dt, "obs_dt": cfg.obs_dt,
        "tenor": tenor, "maturities": maturities, "strike": strike,
    });
    let (name, text) = match ctx.format {
        Format::Csv => {
            let mut out = String::from("T,x,F,Fbar,gamma,P,Pbar\n");
            for (t, _, a) in &rows {
                let cv = &a.convexity;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    csv_number(*t),
                    csv_number(tenor),
                    csv_number(cv.forward),
                    csv_number(cv.adjusted_forward),
                    csv_number(cv.gamma),
                    csv_number(a.bond),
                    csv_number(a.adjusted_bond)
                );
            }
            ("adjustments.csv", out)
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|(t, k, a)| {
                    json!({
                        "T": t, "x": tenor, "strike": k,
                        "F": a.convexity.forward, "Fbar": a.convexity.adjusted_forward,
                        "gamma": a.convexity.gamma, "gamma_se": a.convexity.std_error,
                        "P": a.bond, "Pbar": a.adjusted_bond,
                        "price": price_json(&a.price),
                    })
                })
                .collect();
            (
                "adjustments.json",
                serde_json::to_string_pretty(&rounded(Value::Array(items))).expect("rows serialize") + "\n",
            )
        }
    };
    print!("{text}");
    ctx.write(name, &text)?;
    ctx.finish()
}

fn selftest() -> Result<bool, CliError> {
    let exe = std::env::current_exe().map_err(io_err(Path::new("multicurve")))?;
    let outcomes = acceptance::run_all(&exe, |o| println!("{o}"));
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    Ok(passed == outcomes.len())
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("MCE_LOG")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Cmd::Bootstrap(c) => bootstrap(c),
        Cmd::Simulate { common, dump_paths } => simulate_cmd(common, *dump_paths),
        Cmd::Price { common, deal, policy } => price(common, deal, policy.as_ref()),
        Cmd::Adjustments { common, policy, tenor, maturities, strike } => {
            adjustments(common, policy.as_ref(), *tenor, maturities, *strike)
        }
        Cmd::Selftest => match selftest() {
            Ok(true) => Ok(()),
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_fifteen_digits() {
        assert_eq!(round15(0.1 + 0.2), 0.3);
        assert_eq!(round15(-0.0), 0.0);
        assert_eq!(round15(123456.789012345678), 123456.789012346);
        assert_eq!(round15(1e-300), 1e-300);
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [1.0 / 3.0, std::f64::consts::PI * 1e7, -2.5e-9] {
            assert_eq!(round15(round15(x)), round15(x));
        }
    }

    #[test]
    fn bad_arguments_exit_with_two() {
        assert_eq!(run(["multicurve", "frobnicate"]), 2);
        assert_eq!(run(["multicurve", "price", "--paths", "many"]), 2);
        assert_eq!(run(["multicurve", "--help"]), 0);
    }
}
