//! Plain-text configuration files: one `key = value` per line, `#`
//! comments, unknown keys rejected with the offending line number. Values
//! are kept as raw strings here; unit interpretation happens later so the
//! raw-units flag applies uniformly.

use std::fs;
use std::path::Path;

/// Raw string values read from a config file. Every field mirrors a CLI
/// flag, and a flag given explicitly wins over the file.
#[derive(Debug, Default, Clone)]
pub struct FileValues {
    pub model: Option<String>,
    pub n: Option<String>,
    pub m: Option<String>,
    pub lambda: Option<String>,
    pub mu: Option<String>,
    pub p: Option<String>,
    pub lambda_s: Option<String>,
    pub mu_s: Option<String>,
    pub h: Option<String>,
    pub horizon: Option<String>,
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<FileValues, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut values = FileValues::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{line_no}: expected 'key = value'", path.display()))?;
        let key = key.trim();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(format!("{}:{line_no}: empty value for '{key}'", path.display()));
        }
        let slot = match key {
            "model" => &mut values.model,
            "n" => &mut values.n,
            "m" => &mut values.m,
            "lambda" => &mut values.lambda,
            "mu" => &mut values.mu,
            "p" => &mut values.p,
            "lambda_s" => &mut values.lambda_s,
            "mu_s" => &mut values.mu_s,
            "h" => &mut values.h,
            "horizon" => &mut values.horizon,
            _ => {
                return Err(format!(
                    "{}:{line_no}: unknown key '{key}'",
                    path.display()
                ))
            }
        };
        *slot = Some(value);
    }
    Ok(values)
}
