//! Unit-aware parsing of durations and rates.
//!
//! Durations accept the suffixes h/d/w/y (1 d = 24 h, 1 w = 168 h,
//! 1 y = 8760 h) and normalize to years; rates accept plain per-year
//! numbers or the reciprocal form `1/<duration>`, so `1/6h` is one repair
//! every six hours, 1460 per year. In raw mode every value is taken
//! verbatim, which is how the unitless delay examples are reproduced.

use raidrel::HOURS_PER_YEAR;

fn parse_number(s: &str, what: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("cannot parse {what} value '{s}'"))
}

/// Parses a duration into years, honoring a unit suffix unless `raw`.
pub fn parse_duration_years(s: &str, raw: bool) -> Result<f64, String> {
    let s = s.trim();
    if raw {
        return parse_number(s, "duration");
    }
    let (body, hours_per_unit) = match s.chars().last() {
        Some('h') => (&s[..s.len() - 1], 1.0),
        Some('d') => (&s[..s.len() - 1], 24.0),
        Some('w') => (&s[..s.len() - 1], 168.0),
        Some('y') => (&s[..s.len() - 1], HOURS_PER_YEAR),
        _ => (s, HOURS_PER_YEAR),
    };
    Ok(parse_number(body, "duration")? * hours_per_unit / HOURS_PER_YEAR)
}

/// Parses a rate into events per year. `1/<duration>` means one event per
/// that duration; a bare number is already a per-year rate.
pub fn parse_rate_per_year(s: &str, raw: bool) -> Result<f64, String> {
    let s = s.trim();
    if let Some(dur) = s.strip_prefix("1/") {
        let years = parse_duration_years(dur, raw)?;
        if years <= 0.0 {
            return Err(format!("rate '{s}' needs a positive duration"));
        }
        return Ok(1.0 / years);
    }
    parse_number(s, "rate")
}

/// Fixed CSV float format: scientific with nine significant digits, so
/// identical inputs always serialize to identical bytes.
pub fn fmt_csv(x: f64) -> String {
    format!("{x:.8e}")
}
