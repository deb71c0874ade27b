//! OIS and IRS par-rate quote sets.
//!
//! CSV layout is `instrument,maturity,tenor,rate` with an empty tenor for OIS
//! rows. The header row is optional, and a bare `OIS,maturity,rate` row is
//! accepted too. An `# as_of: YYYY-MM-DD` comment line carries the quote
//! date. Rates are decimals per annum and maturities are year fractions.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::MarketDataError;

/// Tenors closer than this are treated as the same tenor.
pub const TENOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DayCount {
    /// Decimal years, continuous compounding.
    #[default]
    #[serde(rename = "ACT365")]
    Act365,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub maturity: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsStrip {
    pub tenor: f64,
    pub quotes: Vec<Quote>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteFormat {
    Csv,
    Json,
}

impl QuoteFormat {
    pub fn from_path(path: &Path) -> Option<QuoteFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(QuoteFormat::Csv),
            "json" => Some(QuoteFormat::Json),
            _ => None,
        }
    }
}

/// Validated market quotes. Construct through [`QuoteSet::new`] or the
/// parsers; every instance satisfies the ordering and tenor invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuoteSet {
    as_of_date: Option<NaiveDate>,
    day_count: DayCount,
    ois: Vec<Quote>,
    irs: Vec<IrsStrip>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuoteSetRepr {
    #[serde(default)]
    as_of_date: Option<NaiveDate>,
    // only checked for validity: ACT365 is the sole convention
    #[serde(default)]
    #[allow(dead_code)]
    day_count: DayCount,
    #[serde(default)]
    ois: Vec<Quote>,
    #[serde(default)]
    irs: Vec<IrsStrip>,
}

impl QuoteSet {
    pub fn new(
        as_of_date: Option<NaiveDate>,
        ois: Vec<Quote>,
        mut irs: Vec<IrsStrip>,
    ) -> Result<QuoteSet, MarketDataError> {
        let violation = |msg: String| Err(MarketDataError::InvariantViolation(msg));
        if ois.is_empty() && irs.iter().all(|s| s.quotes.is_empty()) {
            return violation("no quotes".into());
        }
        check_strip("OIS", &ois)?;
        irs.retain(|s| !s.quotes.is_empty());
        irs.sort_by(|a, b| a.tenor.total_cmp(&b.tenor));
        for strip in &irs {
            if !(strip.tenor > 0.0) || !strip.tenor.is_finite() {
                return violation(format!("tenor {} must be positive", strip.tenor));
            }
            let label = format!("IRS tenor {}", strip.tenor);
            check_strip(&label, &strip.quotes)?;
            for q in &strip.quotes {
                let periods = q.maturity / strip.tenor;
                if (periods - periods.round()).abs() * strip.tenor > TENOR_TOLERANCE
                    || periods.round() < 1.0
                {
                    return violation(format!(
                        "tenor {} does not divide maturity {}",
                        strip.tenor, q.maturity
                    ));
                }
            }
        }
        for w in irs.windows(2) {
            if (w[1].tenor - w[0].tenor).abs() <= TENOR_TOLERANCE {
                return violation(format!("duplicate IRS tenor {}", w[0].tenor));
            }
        }
        Ok(QuoteSet {
            as_of_date,
            day_count: DayCount::Act365,
            ois,
            irs,
        })
    }

    pub fn as_of_date(&self) -> Option<NaiveDate> {
        self.as_of_date
    }

    pub fn day_count(&self) -> DayCount {
        self.day_count
    }

    pub fn ois(&self) -> &[Quote] {
        &self.ois
    }

    pub fn irs_strips(&self) -> &[IrsStrip] {
        &self.irs
    }

    pub fn irs(&self, tenor: f64) -> Option<&[Quote]> {
        self.irs
            .iter()
            .find(|s| (s.tenor - tenor).abs() <= TENOR_TOLERANCE)
            .map(|s| s.quotes.as_slice())
    }

    pub fn tenors(&self) -> Vec<f64> {
        self.irs.iter().map(|s| s.tenor).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        if let Some(d) = self.as_of_date {
            let _ = writeln!(out, "# as_of: {d}");
        }
        out.push_str("instrument,maturity,tenor,rate\n");
        for q in &self.ois {
            let _ = writeln!(out, "OIS,{},,{}", q.maturity, q.rate);
        }
        for s in &self.irs {
            for q in &s.quotes {
                let _ = writeln!(out, "IRS,{},{},{}", q.maturity, s.tenor, q.rate);
            }
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("quote sets always serialize")
    }

    pub fn from_json_str(text: &str) -> Result<QuoteSet, MarketDataError> {
        let repr: QuoteSetRepr =
            serde_json::from_str(text).map_err(|e| MarketDataError::MalformedRecord {
                line: e.line(),
                message: e.to_string(),
            })?;
        QuoteSet::new(repr.as_of_date, repr.ois, repr.irs)
    }

    pub fn from_csv_str(text: &str) -> Result<QuoteSet, MarketDataError> {
        let mut as_of_date = None;
        for (idx, line) in text.lines().enumerate() {
            let Some(comment) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            if let Some(date) = comment.trim().strip_prefix("as_of:") {
                let parsed = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d").map_err(|e| {
                    MarketDataError::MalformedRecord {
                        line: idx + 1,
                        message: format!("bad as_of date: {e}"),
                    }
                })?;
                as_of_date = Some(parsed);
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut ois = Vec::new();
        let mut irs: Vec<IrsStrip> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| MarketDataError::MalformedRecord {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let malformed = |message: String| MarketDataError::MalformedRecord { line, message };
            if record.iter().all(str::is_empty) {
                continue;
            }
            let instrument = record.get(0).unwrap_or_default();
            if instrument.eq_ignore_ascii_case("instrument") {
                continue;
            }
            let (maturity, tenor, rate) = match record.len() {
                3 => (record.get(1), None, record.get(2)),
                4 => (record.get(1), record.get(2), record.get(3)),
                n => return Err(malformed(format!("expected 3 or 4 fields, found {n}"))),
            };
            let number = |field: Option<&str>, name: &str| -> Result<f64, MarketDataError> {
                let raw = field.unwrap_or_default();
                let value: f64 = raw
                    .parse()
                    .map_err(|_| malformed(format!("{name} '{raw}' is not a number")))?;
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(malformed(format!("{name} '{raw}' is not finite")))
                }
            };
            let quote = Quote {
                maturity: number(maturity, "maturity")?,
                rate: number(rate, "rate")?,
            };
            let tenor = tenor.filter(|t| !t.is_empty());
            match instrument.to_ascii_uppercase().as_str() {
                "OIS" => {
                    if tenor.is_some() {
                        return Err(malformed("OIS rows take an empty tenor".into()));
                    }
                    ois.push(quote);
                }
                "IRS" => {
                    let tenor = number(tenor, "tenor")?;
                    match irs
                        .iter_mut()
                        .find(|s| (s.tenor - tenor).abs() <= TENOR_TOLERANCE)
                    {
                        Some(strip) => strip.quotes.push(quote),
                        None => irs.push(IrsStrip {
                            tenor,
                            quotes: vec![quote],
                        }),
                    }
                }
                other => return Err(malformed(format!("unknown instrument '{other}'"))),
            }
        }
        QuoteSet::new(as_of_date, ois, irs)
    }
}

fn check_strip(label: &str, quotes: &[Quote]) -> Result<(), MarketDataError> {
    for q in quotes {
        if !(q.maturity > 0.0) || !q.maturity.is_finite() {
            return Err(MarketDataError::InvariantViolation(format!(
                "{label}: maturity {} must be positive",
                q.maturity
            )));
        }
        if !q.rate.is_finite() {
            return Err(MarketDataError::InvariantViolation(format!(
                "{label}: rate {} is not finite",
                q.rate
            )));
        }
    }
    for w in quotes.windows(2) {
        if w[1].maturity == w[0].maturity {
            return Err(MarketDataError::InvariantViolation(format!(
                "{label}: duplicate maturity {}",
                w[0].maturity
            )));
        }
        if w[1].maturity < w[0].maturity {
            return Err(MarketDataError::InvariantViolation(format!(
                "{label}: maturities not increasing ({} after {})",
                w[1].maturity, w[0].maturity
            )));
        }
    }
    Ok(())
}

pub fn parse_quotes(path: &Path, format: QuoteFormat) -> Result<QuoteSet, MarketDataError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => MarketDataError::FileNotFound(path.to_path_buf()),
        _ => MarketDataError::Io(e.to_string()),
    })?;
    match format {
        QuoteFormat::Csv => QuoteSet::from_csv_str(&text),
        QuoteFormat::Json => QuoteSet::from_json_str(&text),
    }
}
