//! Acceptance criteria, shared by `multicurve selftest` and the
//! `acceptance` test target. Every tolerance and time budget is pinned
//! here.

use std::fmt;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use multicurve::credit_funding::{
    collateral_fraction, haircut_price, haircut_var, CollateralMode, CollateralPolicy, CreditSnapshot,
    CreditSpec, FundingSpec, HaircutMethod, DEFAULT_MARGIN_PERIOD,
};
use multicurve::curves::CurveSet;
use multicurve::hjm::{
    reconstruct_bond, reconstruct_forward, simulate, SimulationGrid, VolatilityParams,
    VolatilitySpec,
};
use multicurve::market_data::QuoteSet;
use multicurve::pricing::{
    adjusted_bond, convexity_adjustment, effective_rate_xi, effective_rate_zeta, price_master_oracle,
    price_perfect, price_reduced, CsaTerms, DealSchedule, DividendIntegrals, Market, OracleSettings,
    PolicyDividend, PricingError, Sign,
};
use multicurve::StepFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const SAMPLE_QUOTES: &str = include_str!("../../../data/quotes.csv");
pub const SAMPLE_CONFIG: &str = include_str!("../../../data/config.json");
pub const SAMPLE_DEAL: &str = include_str!("../../../data/deal_irs.json");
pub const SAMPLE_POLICY: &str = include_str!("../../../data/policy_partial.json");

pub const BOOTSTRAP_TOL: f64 = 1e-10;
pub const BOOTSTRAP_BUDGET: Duration = Duration::from_secs(1);
pub const ZERO_VOL_TOL: f64 = 1e-12;
pub const ZERO_VOL_BUDGET: Duration = Duration::from_secs(5);
pub const MARTINGALE_PATHS: usize = 200_000;
pub const MARTINGALE_DT: f64 = 1.0 / 96.0;
pub const MARTINGALE_BUDGET: Duration = Duration::from_secs(60);
pub const CIR_PATHS: usize = 100_000;
pub const CIR_BUDGET: Duration = Duration::from_secs(30);
pub const ORACLE_DET_TOL: f64 = 1e-8;
pub const ORACLE_PATHS: usize = 20_000;
pub const ORACLE_BUDGET: Duration = Duration::from_secs(60);
pub const XI_CASES: usize = 10_000;
pub const XI_TOL: f64 = 1e-15;
pub const REDUCTION_TOL: f64 = 1e-12;
pub const GAMMA_PATHS: usize = 50_000;
/// Relative gap allowed between the simulated and two-point-tree `γ`.
pub const GAMMA_TREE_REL: f64 = 0.10;
pub const GAMMA_BUDGET: Duration = Duration::from_secs(60);
pub const BOND_TOL: f64 = 1e-10;
pub const HAIRCUT_CASES: usize = 10_000;
/// Monte Carlo gates are at this many standard errors.
pub const SE_GATE: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} {:>8.3}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

type Check = Result<(bool, String), String>;

fn sample_curves() -> Result<CurveSet, String> {
    let quotes = QuoteSet::from_csv_str(SAMPLE_QUOTES).map_err(|e| e.to_string())?;
    CurveSet::bootstrap(&quotes, false, |_| None).map_err(|e| e.to_string())
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

fn bootstrap_round_trip() -> Check {
    let quotes = QuoteSet::from_csv_str(SAMPLE_QUOTES).map_err(err)?;
    let curves = CurveSet::bootstrap(&quotes, false, |_| None).map_err(err)?;
    let mut worst: f64 = 0.0;
    for q in quotes.ois() {
        worst = worst.max((curves.discount.ois_swap_rate(q.maturity).map_err(err)? - q.rate).abs());
    }
    for strip in quotes.irs_strips() {
        let curve = curves.forward_curve(strip.tenor).map_err(err)?;
        for q in &strip.quotes {
            worst = worst.max((curve.swap_rate(&curves.discount, q.maturity).map_err(err)? - q.rate).abs());
        }
    }
    let count = quotes.ois().len() + quotes.irs_strips().iter().map(|s| s.quotes.len()).sum::<usize>();
    Ok((
        worst < BOOTSTRAP_TOL,
        format!("{count} quotes, max |error| = {worst:.2e} (< {BOOTSTRAP_TOL:.0e})"),
    ))
}

fn zero_volatility() -> Check {
    let curves = sample_curves()?;
    let spec = VolatilitySpec::zero_volatility(2);
    let grid = SimulationGrid::regular(10.0, 0.5, 1.0 / 96.0, &[]).map_err(err)?;
    let ens = simulate(&spec, &grid, 64, 3).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut checks = 0usize;
    for p in 0..ens.num_paths() {
        for (i, &t) in ens.times().iter().enumerate() {
            let s = ens.state(p, i);
            for k in 1..=20 {
                let maturity = 0.5 * k as f64;
                if maturity < t {
                    continue;
                }
                let p0 = curves.discount.discount_factor(maturity).map_err(err)?
                    / curves.discount.discount_factor(t).map_err(err)?;
                worst = worst.max((reconstruct_bond(&s, &curves.discount, &spec, maturity).map_err(err)? - p0).abs());
                checks += 1;
                for fwd in &curves.forwards {
                    if maturity - fwd.tenor() < t {
                        continue;
                    }
                    let f = reconstruct_forward(&s, fwd, &spec, maturity).map_err(err)?;
                    worst = worst.max((f - fwd.forward(maturity).map_err(err)?).abs());
                    checks += 1;
                }
            }
        }
    }
    Ok((
        worst <= ZERO_VOL_TOL,
        format!("{checks} reconstructions, max |error| = {worst:.2e} (<= {ZERO_VOL_TOL:.0e})"),
    ))
}

fn martingale() -> Check {
    let curves = sample_curves()?;
    let spec = VolatilitySpec::one_factor(0.1, 0.012);
    let x = 0.5;
    let fwd = curves.forward_curve(x).map_err(err)?;
    let grid = SimulationGrid::new(vec![0.5, 1.0, 1.5, 2.0, 4.5, 5.0], MARTINGALE_DT).map_err(err)?;
    let ens = simulate(&spec, &grid, MARTINGALE_PATHS, 11).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for maturity in [1.0, 2.0, 5.0] {
        let ir = ens.time_index(maturity - x).ok_or("reset not on grid")?;
        let ip = ens.time_index(maturity).ok_or("maturity not on grid")?;
        let z: Vec<f64> = (0..ens.num_paths())
            .map(|p| {
                let f = reconstruct_forward(&ens.state(p, ir), fwd, &spec, maturity)?;
                Ok((-ens.state(p, ip).integral).exp() * f)
            })
            .collect::<Result<_, multicurve::hjm::HjmError>>()
            .map_err(err)?;
        let (mean, se) = mean_se(z.iter().copied());
        let f0 = fwd.forward(maturity).map_err(err)?;
        let dev = (mean - f0) / se;
        ok &= dev.abs() <= SE_GATE;
        parts.push(format!("T={maturity}: {dev:+.2} SE"));
    }
    Ok((ok, format!("{} paths, {}", MARTINGALE_PATHS, parts.join(", "))))
}

fn cir_moments() -> Check {
    let spec = VolatilitySpec::new(VolatilityParams {
        a: vec![StepFunction::constant(0.1)],
        r: vec![vec![0.01]],
        kappa: vec![1.0],
        theta: vec![0.04],
        nu: vec![0.1],
        v_bar: vec![0.09],
        ..Default::default()
    })
    .map_err(err)?;
    let grid = SimulationGrid::new(vec![0.5, 1.0, 2.0], 1.0 / 96.0).map_err(err)?;
    let ens = simulate(&spec, &grid, CIR_PATHS, 5).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut min_v = f64::INFINITY;
    for (i, &t) in ens.times().iter().enumerate() {
        for p in 0..ens.num_paths() {
            min_v = min_v.min(ens.state(p, i).v[0]);
        }
        if t == 0.0 {
            continue;
        }
        let (mean, se) = mean_se((0..ens.num_paths()).map(|p| ens.state(p, i).v[0]));
        let expected = spec.variance_mean(t)[0];
        let dev = (mean - expected) / se;
        ok &= dev.abs() <= SE_GATE;
        parts.push(format!("t={t}: {dev:+.2} SE"));
    }
    ok &= min_v >= 0.0;
    Ok((ok, format!("{}, min v = {min_v:.3e}", parts.join(", "))))
}

struct OracleCase {
    label: &'static str,
    deal: DealSchedule,
    policy: CollateralPolicy,
}

fn oracle_cases() -> Result<Vec<OracleCase>, String> {
    let receiver = DealSchedule::swap(5.0, 0.5, 0.045, Some(1.0), 1.0, true).map_err(err)?;
    let payer = DealSchedule::swap(5.0, 0.5, 0.005, Some(1.0), 1.0, true).map_err(err)?;
    let alpha = StepFunction::new(vec![0.0, 2.0], vec![0.3, 0.7]).map_err(err)?;
    let fraction = CollateralPolicy::new(
        CollateralMode::Fraction(alpha),
        0.0005,
        DEFAULT_MARGIN_PERIOD,
        0.01,
        HaircutMethod::Var,
    )
    .map_err(err)?;
    Ok(vec![
        OracleCase { label: "partial", deal: receiver.clone(), policy: fraction },
        OracleCase { label: "none/negative", deal: payer, policy: CollateralPolicy::none() },
        OracleCase {
            label: "ccp",
            deal: receiver,
            policy: CollateralPolicy::ccp(Some(0.15)).map_err(err)?,
        },
    ])
}

fn oracle_credit() -> Result<(CreditSpec, FundingSpec), String> {
    let step = |a: f64, b: f64| StepFunction::new(vec![0.0, 1.5], vec![a, b]).map_err(err);
    let credit = CreditSpec::new(
        step(0.02, 0.03)?,
        StepFunction::constant(0.01),
        StepFunction::constant(0.01),
        StepFunction::constant(0.0),
        0.6,
        0.4,
    )
    .map_err(err)?;
    let funding = FundingSpec::flat(-0.001, 0.002, 0.5, 0.0);
    Ok((credit, funding))
}

fn oracle_equivalence() -> Check {
    let curves = sample_curves()?;
    let (credit, funding) = oracle_credit()?;
    let cases = oracle_cases()?;
    let settings = OracleSettings::default();
    let grid = SimulationGrid::regular(5.0, 0.25, 1.0 / 96.0, &[]).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();

    let flat = VolatilitySpec::zero_volatility(1);
    let det = simulate(&flat, &grid, 8, 1).map_err(err)?;
    let market = Market { curves: &curves, model: &flat, ensemble: &det };
    for case in &cases {
        let terms = CsaTerms { policy: &case.policy, funding: &funding, credit: &credit };
        let reduced = price_reduced(&case.deal, &terms, &market).map_err(err)?;
        let oracle = price_master_oracle(&case.deal, &terms, &market, &settings).map_err(err)?;
        let gap = (reduced.adjusted - oracle).abs();
        ok &= gap <= ORACLE_DET_TOL;
        parts.push(format!("{} {gap:.1e}", case.label));
    }

    let spec = VolatilitySpec::one_factor(0.1, 0.01);
    let ens = simulate(&spec, &grid, ORACLE_PATHS, 2).map_err(err)?;
    let market = Market { curves: &curves, model: &spec, ensemble: &ens };
    let case = &cases[0];
    let terms = CsaTerms { policy: &case.policy, funding: &funding, credit: &credit };
    let reduced = price_reduced(&case.deal, &terms, &market).map_err(err)?;
    let oracle = price_master_oracle(&case.deal, &terms, &market, &settings).map_err(err)?;
    let dev = (reduced.adjusted - oracle).abs() / reduced.std_error;
    ok &= dev <= SE_GATE;
    parts.push(format!("stochastic {dev:.2} SE"));
    Ok((ok, parts.join(", ")))
}

fn limit_reductions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..XI_CASES {
        let credit = CreditSnapshot {
            lambda_ci: rng.random_range(0.0..0.2),
            lambda_ic: rng.random_range(0.0..0.2),
            lambda_p: rng.random_range(0.0..0.2),
            lambda_i: rng.random_range(0.0..0.2),
            lgd_c: rng.random_range(0.0..=1.0),
            lgd_i: rng.random_range(0.0..=1.0),
        };
        let alpha = if rng.random_bool(0.1) {
            [0.0, 1.0][rng.random_range(0..2)]
        } else {
            rng.random_range(0.0..=1.0)
        };
        let sign = Sign::ALL[rng.random_range(0..3)];
        let f = rng.random_range(-0.02..0.1);
        let c = rng.random_range(-0.02..0.1);
        let xi = effective_rate_xi(alpha, sign, &credit, f, c).map_err(err)?;
        let zeta = effective_rate_zeta(alpha, sign, &credit, f, c).map_err(err)?;
        worst = worst.max((xi - zeta).abs() / (1.0 + xi.abs()));
    }

    let curves = sample_curves()?;
    let spec = VolatilitySpec::one_factor(0.1, 0.01);
    let deal = DealSchedule::swap(5.0, 0.5, 0.025, Some(1.0), 1.0, true).map_err(err)?;
    let grid = SimulationGrid::regular(5.0, 0.25, 1.0 / 96.0, &[]).map_err(err)?;
    let ens = simulate(&spec, &grid, 4000, 8).map_err(err)?;
    let market = Market { curves: &curves, model: &spec, ensemble: &ens };
    let credit = CreditSpec::flat(0.03, 0.02, 0.6, 0.6).map_err(err)?;
    let funding = FundingSpec::default();
    let perfect = price_perfect(&deal, &market).map_err(err)?;
    let mut gap: f64 = 0.0;
    for policy in [CollateralPolicy::perfect(), CollateralPolicy::fraction(1.0).map_err(err)?] {
        let terms = CsaTerms { policy: &policy, funding: &funding, credit: &credit };
        let p = price_reduced(&deal, &terms, &market).map_err(err)?;
        gap = gap.max((p.adjusted - p.clean).abs()).max((p.adjusted - perfect.clean).abs());
    }
    Ok((
        worst <= XI_TOL && gap <= REDUCTION_TOL,
        format!("{XI_CASES} cases max |ξ−ζ| = {worst:.1e}; α=1 |adjusted−clean| = {gap:.1e}"),
    ))
}

fn engineered_dividend(
    beta: f64,
    tenor: f64,
) -> impl Fn(&Market<'_>, f64) -> Result<DividendIntegrals, PricingError> {
    move |m, maturity| {
        let curve = m.curves.forward_curve(tenor)?;
        let k = curve.shift();
        let f0 = curve.forward(maturity)?;
        let ens = m.ensemble;
        let ir = ens
            .time_index(maturity - tenor)
            .ok_or(PricingError::GridTooCoarse(maturity - tenor))?;
        let total = (0..ens.num_paths())
            .map(|p| {
                let f = reconstruct_forward(&ens.state(p, ir), curve, m.model, maturity)?;
                Ok(-beta * ((k + f) / (k + f0)).ln())
            })
            .collect::<Result<Vec<f64>, PricingError>>()?;
        Ok(DividendIntegrals::unattributed(total))
    }
}

/// Two-point tree for `L = ln((k+F)/(k+F0))` with variance `s²` and
/// `E[e^L] = 1`: `γ = (k+F0)/F0 · (E[e^{(1+β)L}]/E[e^{βL}] − 1)`.
fn tree_gamma(s2: f64, beta: f64, k: f64, f0: f64) -> f64 {
    let s = s2.sqrt();
    let mu = -s.cosh().ln();
    let moment = |a: f64| 0.5 * ((a * (mu + s)).exp() + (a * (mu - s)).exp());
    (k + f0) / f0 * (moment(1.0 + beta) / moment(beta) - 1.0)
}

fn convexity() -> Check {
    let curves = sample_curves()?;
    let spec = VolatilitySpec::one_factor(0.1, 0.01);
    let (maturity, x) = (2.0, 0.5);
    let grid = SimulationGrid::regular(maturity, 0.25, 1.0 / 96.0, &[]).map_err(err)?;
    let ens = simulate(&spec, &grid, GAMMA_PATHS, 13).map_err(err)?;
    let market = Market { curves: &curves, model: &spec, ensemble: &ens };
    let mut ok = true;
    let mut parts = Vec::new();

    let flat = |m: &Market<'_>, t: f64| Ok(DividendIntegrals::unattributed(vec![0.004 * t; m.ensemble.num_paths()]));
    let credit = CreditSpec::flat(0.02, 0.01, 0.6, 0.6).map_err(err)?;
    let funding = FundingSpec::flat(0.0, 0.003, 0.0, 0.0);
    let none = CollateralPolicy::none();
    let itm = PolicyDividend {
        terms: CsaTerms { policy: &none, funding: &funding, credit: &credit },
        contract: DealSchedule::one_period_irs(maturity, x, 0.10).map_err(err)?,
    };
    for (label, estimate) in [
        ("flat", convexity_adjustment(maturity, x, &flat, &market)),
        ("uncollateralized", convexity_adjustment(maturity, x, &itm, &market)),
    ] {
        let g = estimate.map_err(err)?;
        ok &= g.gamma.abs() <= SE_GATE * g.std_error;
        parts.push(format!("{label} γ={:.1e}±{:.1e}", g.gamma, g.std_error));
    }

    let beta = 2.0;
    let g = convexity_adjustment(maturity, x, &engineered_dividend(beta, x), &market).map_err(err)?;
    let curve = curves.forward_curve(x).map_err(err)?;
    let (k, f0) = (curve.shift(), g.forward);
    // T-forward variance of L from the same paths
    let ir = ens.time_index(maturity - x).ok_or("reset not on grid")?;
    let ip = ens.time_index(maturity).ok_or("maturity not on grid")?;
    let mut sw = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for p in 0..ens.num_paths() {
        let f = reconstruct_forward(&ens.state(p, ir), curve, &spec, maturity).map_err(err)?;
        let l = ((k + f) / (k + f0)).ln();
        let w = (-ens.state(p, ip).integral).exp();
        sw += w;
        s1 += w * l;
        s2 += w * l * l;
    }
    let var = s2 / sw - (s1 / sw).powi(2);
    let tree = tree_gamma(var, beta, k, f0);
    let rel = (g.gamma - tree).abs() / tree.abs();
    ok &= g.gamma > SE_GATE * g.std_error && tree.signum() == g.gamma.signum() && rel <= GAMMA_TREE_REL;
    parts.push(format!("engineered γ={:.4e}±{:.1e} tree={tree:.4e}", g.gamma, g.std_error));
    Ok((ok, parts.join(", ")))
}

fn uncollateralized_bond() -> Check {
    let curves = sample_curves()?;
    let spec = VolatilitySpec::one_factor(0.1, 0.01);
    let grid = SimulationGrid::regular(5.0, 0.25, 1.0 / 96.0, &[]).map_err(err)?;
    let ens = simulate(&spec, &grid, 5000, 17).map_err(err)?;
    let market = Market { curves: &curves, model: &spec, ensemble: &ens };
    let (lambda, lgd, f_spread) = (0.02, 0.6, 0.003);
    let credit = CreditSpec::flat(lambda, 0.015, lgd, 0.6).map_err(err)?;
    let funding = FundingSpec::flat(0.0, f_spread, 0.0, 0.0);
    let policy = CollateralPolicy::none();
    let mut worst: f64 = 0.0;
    for maturity in [1.0, 3.0, 5.0] {
        let dividend = PolicyDividend {
            terms: CsaTerms { policy: &policy, funding: &funding, credit: &credit },
            contract: DealSchedule::zero_coupon(maturity).map_err(err)?,
        };
        let pbar = adjusted_bond(maturity, &dividend, &market).map_err(err)?;
        let p0 = curves.discount.discount_factor(maturity).map_err(err)?;
        let expected = p0 * (-(f_spread + lambda * lgd) * maturity).exp();
        worst = worst.max((pbar - expected).abs());
    }
    Ok((worst <= BOND_TOL, format!("T ∈ {{1,3,5}}, max |P̄ − closed form| = {worst:.1e}")))
}

fn haircut_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0usize;
    let mut max_var: f64 = 0.0;
    for _ in 0..HAIRCUT_CASES {
        let n = rng.random_range(1..200);
        let magnitude = rng.random_range(0.1..10.0);
        let value = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        let scale = rng.random_range(0.0..2.0) * magnitude;
        let fat = rng.random_bool(0.2);
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                let z = if fat { z * z * z } else { z };
                value + scale * z
            })
            .collect();
        let q = rng.random_range(0.001..0.5);
        let (plus, minus) = haircut_var(&samples, value, q).map_err(err)?;
        let price = haircut_price(&samples, value).map_err(err)?;
        max_var = max_var.max(plus).max(minus);
        if !(0.0..1.0).contains(&plus) || !(0.0..1.0).contains(&minus) || !(0.0..=1.0).contains(&price) {
            violations += 1;
        }
    }
    let riskless = vec![2.5; 50];
    let (plus, minus) = haircut_var(&riskless, 2.5, 0.01).map_err(err)?;
    let price = haircut_price(&riskless, 2.5).map_err(err)?;
    let ccp = CollateralPolicy::ccp(None).map_err(err)?;
    let alpha = collateral_fraction(&ccp, 0.0, Some(plus + minus)).map_err(err)?;
    let degenerate = plus == 0.0 && minus == 0.0 && price == 0.0 && alpha == 1.0;
    Ok((
        violations == 0 && degenerate,
        format!(
            "{HAIRCUT_CASES} distributions, {violations} out of range (max VaR haircut {max_var:.3}); riskless ς=0, α={alpha}"
        ),
    ))
}

fn determinism(binary: &Path) -> Check {
    let dir = std::env::temp_dir().join(format!("multicurve-determinism-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).map_err(err)?;
    let write = |name: &str, text: &str| -> Result<std::path::PathBuf, String> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(err)?;
        Ok(p)
    };
    let quotes = write("quotes.csv", SAMPLE_QUOTES)?;
    let config = write("config.json", SAMPLE_CONFIG)?;
    let deal = write("deal.json", SAMPLE_DEAL)?;
    let policy = write("policy.json", SAMPLE_POLICY)?;
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let out = dir.join(format!("run{threads}"));
        let status = Command::new(binary)
            .arg("price")
            .arg("--quotes")
            .arg(&quotes)
            .arg("--config")
            .arg(&config)
            .arg("--deal")
            .arg(&deal)
            .arg("--policy")
            .arg(&policy)
            .args(["--paths", "4000", "--seed", "11", "--threads", &threads.to_string()])
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| format!("cannot run {}: {e}", binary.display()))?;
        if !status.status.success() {
            return Ok((false, format!("price exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr))));
        }
        let report = std::fs::read(out.join("price.json")).map_err(err)?;
        let manifest = std::fs::read(out.join("manifest.json")).map_err(err)?;
        outputs.push((report, manifest));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let same = outputs[0] == outputs[1];
    Ok((same, format!("threads 1 vs 3: report {} bytes, {}", outputs[0].0.len(), if same { "identical" } else { "DIFFERENT" })))
}

/// `(id, name, budget)` of every criterion.
pub const CRITERIA: [(u8, &str, Option<Duration>); 10] = [
    (1, "bootstrap round-trip", Some(BOOTSTRAP_BUDGET)),
    (2, "zero-volatility reduction", Some(ZERO_VOL_BUDGET)),
    (3, "forward martingale", Some(MARTINGALE_BUDGET)),
    (4, "CIR moments", Some(CIR_BUDGET)),
    (5, "oracle equivalence", Some(ORACLE_BUDGET)),
    (6, "limit reductions", None),
    (7, "convexity adjustment", Some(GAMMA_BUDGET)),
    (8, "uncollateralized bond", None),
    (9, "haircut bounds", None),
    (10, "determinism across threads", None),
];

pub fn run_criterion(id: u8, binary: &Path) -> Outcome {
    let (_, name, budget) = CRITERIA[(id - 1) as usize];
    let start = Instant::now();
    let result = match id {
        1 => bootstrap_round_trip(),
        2 => zero_volatility(),
        3 => martingale(),
        4 => cir_moments(),
        5 => oracle_equivalence(),
        6 => limit_reductions(),
        7 => convexity(),
        8 => uncollateralized_bond(),
        9 => haircut_bounds(),
        10 => determinism(binary),
        _ => Err(format!("unknown criterion {id}")),
    };
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if elapsed > b {
            passed = false;
            detail.push_str(&format!("; over budget {:.0}s", b.as_secs_f64()));
        }
    }
    Outcome { id, name, passed, detail, elapsed }
}

/// Runs every criterion in order, calling `report` as each finishes.
pub fn run_all(binary: &Path, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .map(|&(id, _, _)| {
            let o = run_criterion(id, binary);
            report(&o);
            o
        })
        .collect()
}

