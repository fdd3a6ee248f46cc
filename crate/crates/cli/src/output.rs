//! File writers and number formatting.

use std::fs;
use std::path::Path;
use std::process::Command;

use anyhow::Context;
use serde::Serialize;

/// `x` rounded to four significant digits, as printed in the tables.
pub fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.000".to_string();
    }
    let decimals = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    let text = format!("{x:.decimals$}");
    let digits = text.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
    if digits > 4 && decimals > 0 {
        let decimals = decimals - 1;
        format!("{x:.decimals$}")
    } else {
        text
    }
}

pub fn percent(p: f64) -> String {
    sig4(100.0 * p)
}

/// Revision of the working tree, or `unknown` outside a repository.
pub fn git_revision() -> String {
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Metadata wrapper embedded in every JSON output.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, T: Serialize> {
    pub command: &'a str,
    pub version: &'static str,
    pub git_revision: String,
    pub rng: &'static str,
    pub config: &'a C,
    #[serde(flatten)]
    pub body: T,
}

impl<'a, C: Serialize, T: Serialize> Envelope<'a, C, T> {
    pub fn new(command: &'a str, config: &'a C, body: T) -> Self {
        Envelope {
            command,
            version: env!("CARGO_PKG_VERSION"),
            git_revision: git_revision(),
            rng: "ChaCha8 seeded from the 64-bit seed, stream = (scale index << 32) | chunk",
            config,
            body,
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> anyhow::Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(13.3921), "13.39");
        assert_eq!(sig4(8.89371), "8.894");
        assert_eq!(sig4(5.0), "5.000");
        assert_eq!(sig4(0.071882), "0.07188");
        assert_eq!(sig4(9.99961), "10.00");
        assert_eq!(sig4(-2.76623), "-2.766");
        assert_eq!(sig4(12345.6), "12346");
        assert_eq!(percent(0.0502653), "5.027");
    }
}
