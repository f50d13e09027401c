//! Sweep specifications for integer parameters: a single value, an
//! inclusive range `a..b`, or a comma list.

/// Expands a sweep spec like `4`, `1..64`, or `2,4,8` into its values.
pub fn parse_u32_sweep(s: &str) -> Result<Vec<u32>, String> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|_| format!("bad range start in '{s}'"))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .map_err(|_| format!("bad range end in '{s}'"))?;
        if hi < lo {
            return Err(format!("empty range '{s}'"));
        }
        return Ok((lo..=hi).collect());
    }
    let values: Result<Vec<u32>, _> = s.split(',').map(|v| v.trim().parse::<u32>()).collect();
    let values = values.map_err(|_| format!("cannot parse sweep '{s}'"))?;
    if values.is_empty() {
        return Err(format!("empty sweep '{s}'"));
    }
    Ok(values)
}
