//! Flag-value parsing: scientific notation plus K/M/B/T suffix forms.

use anyhow::{bail, Context, Result};

/// Parses `1e9`, `1500000`, `1B`, `30M`, `2.5T`, `12k` into a raw count.
pub fn parse_size(raw: &str) -> Result<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        bail!("empty numeric value");
    }
    let (number, scale) = match trimmed.chars().last().unwrap() {
        'k' | 'K' => (&trimmed[..trimmed.len() - 1], 1e3),
        'm' | 'M' => (&trimmed[..trimmed.len() - 1], 1e6),
        'b' | 'B' => (&trimmed[..trimmed.len() - 1], 1e9),
        't' | 'T' => (&trimmed[..trimmed.len() - 1], 1e12),
        _ => (trimmed, 1.0),
    };
    let value: f64 = number
        .parse()
        .with_context(|| format!("`{raw}` is not a number (suffixes K/M/B/T accepted)"))?;
    Ok(value * scale)
}

/// `Name:Na:N` triple with suffix forms, e.g. `Kimi-K2:32e9:1e12`.
pub fn parse_model(raw: &str) -> Result<(String, f64, f64)> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        bail!("model spec `{raw}` must be Name:Na:N (e.g. Kimi-K2:32B:1T)");
    }
    Ok((
        parts[0].to_owned(),
        parse_size(parts[1])?,
        parse_size(parts[2])?,
    ))
}

/// `name=lo:hi` box-bound override.
pub fn parse_bound(raw: &str) -> Result<(String, (f64, f64))> {
    let (name, range) = raw
        .split_once('=')
        .with_context(|| format!("`{raw}` must be name=lo:hi"))?;
    let (lo, hi) = range
        .split_once(':')
        .with_context(|| format!("`{raw}` must be name=lo:hi"))?;
    Ok((name.to_owned(), (parse_size(lo)?, parse_size(hi)?)))
}

/// `key=value` pair.
pub fn parse_key_value(raw: &str) -> Result<(String, String)> {
    raw.split_once('=')
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .with_context(|| format!("`{raw}` must be key=value"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_forms() {
        assert_eq!(parse_size("1B").unwrap(), 1e9);
        assert_eq!(parse_size("30M").unwrap(), 30e6);
        assert_eq!(parse_size("1.5T").unwrap(), 1.5e12);
        assert_eq!(parse_size("12k").unwrap(), 12e3);
        assert_eq!(parse_size("2e10").unwrap(), 2e10);
        assert_eq!(parse_size("0.3148").unwrap(), 0.3148);
        assert!(parse_size("abc").is_err());
        assert!(parse_size("").is_err());
    }

    #[test]
    fn bound_overrides() {
        let (name, (lo, hi)) = parse_bound("alpha=0.1:0.8").unwrap();
        assert_eq!(name, "alpha");
        assert_eq!((lo, hi), (0.1, 0.8));
        let (_, (lo, hi)) = parse_bound("b=1K:1B").unwrap();
        assert_eq!((lo, hi), (1e3, 1e9));
        assert!(parse_bound("alpha=0.1").is_err());
        assert!(parse_bound("alpha").is_err());
    }

    #[test]
    fn model_triples() {
        let (name, na, n) = parse_model("Kimi-K2:32e9:1T").unwrap();
        assert_eq!(name, "Kimi-K2");
        assert_eq!(na, 32e9);
        assert_eq!(n, 1e12);
        assert!(parse_model("bad").is_err());
    }
}
