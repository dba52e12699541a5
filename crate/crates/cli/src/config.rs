//! Effective run configuration: defaults, then the config file, then flags.

use std::path::PathBuf;

use cuspmoment::recipe::GammaMode;
use cuspmoment::{Complex64, ShiftSet, TruncationPolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Output {
    pub format: Format,
    /// Empty means standard output.
    pub path: String,
}

impl Default for Output {
    fn default() -> Self {
        Self { format: Format::Json, path: String::new() }
    }
}

/// Every parameter of a run. Emitting it as TOML and parsing it back gives
/// the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub k: u32,
    pub l: u64,
    pub x: f64,
    /// `[re, im]` pairs.
    pub shifts: Vec<[f64; 2]>,
    pub psi: String,
    pub mode: GammaMode,
    pub exploratory: bool,
    /// Eigenvalue bound for `eigensystems`, second index for `kloosterman`.
    pub n: u64,
    pub m: u64,
    /// Kloosterman modulus; 0 skips the single sum.
    pub c: u64,
    pub x_grid: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    /// 0 lets the thread pool choose.
    pub threads: usize,
    pub policy: TruncationPolicy,
    pub output: Output,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            k: 12,
            l: 1,
            x: 100.0,
            shifts: vec![[0.1, 0.0]],
            psi: "bump".to_string(),
            mode: GammaMode::ExactGamma,
            exploratory: false,
            n: 1000,
            m: 1,
            c: 0,
            x_grid: Vec::new(),
            seed: 0,
            samples: 1000,
            threads: 0,
            policy: TruncationPolicy::default(),
            output: Output::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config file: {e}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn shift_set(&self) -> cuspmoment::Result<ShiftSet> {
        ShiftSet::new(self.shifts.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }

    pub fn out_path(&self) -> Option<PathBuf> {
        (!self.output.path.is_empty()).then(|| PathBuf::from(&self.output.path))
    }
}

/// Parses `"a+bi,c+di,..."`; each entry may be real (`0.1`), imaginary
/// (`0.05i`) or both (`0.1-0.02i`).
pub fn parse_shifts(text: &str) -> Result<Vec<[f64; 2]>, String> {
    text.split(',').map(|s| parse_complex(s.trim())).collect()
}

fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let bad = || format!("cannot parse shift {s:?}; expected forms like 0.1, 0.05i or 0.1-0.02i");
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| [re, 0.0]).map_err(|_| bad());
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => Ok([body[..i].parse::<f64>().map_err(|_| bad())?, imag(&body[i..])?]),
        None => Ok([0.0, imag(body)?]),
    }
}

/// `[re, im]` pairs back to the flag syntax.
#[cfg(test)]
pub fn format_shifts(shifts: &[[f64; 2]]) -> String {
    shifts
        .iter()
        .map(|&[re, im]| if im == 0.0 { format!("{re}") } else { format!("{re}{im:+}i") })
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_syntax() {
        assert_eq!(parse_shifts("0.1").unwrap(), vec![[0.1, 0.0]]);
        assert_eq!(parse_shifts("0.1+0.05i, -0.02-0.03i").unwrap(), vec![[0.1, 0.05], [-0.02, -0.03]]);
        assert_eq!(parse_shifts("0.05i,-i").unwrap(), vec![[0.0, 0.05], [0.0, -1.0]]);
        assert_eq!(parse_shifts("1e-2+2e-3i").unwrap(), vec![[0.01, 0.002]]);
        assert!(parse_shifts("0.1+x").is_err());
        assert!(parse_shifts("").is_err());
        let s = vec![[0.1, 0.0], [0.05, -0.02]];
        assert_eq!(parse_shifts(&format_shifts(&s)).unwrap(), s);
    }

    #[test]
    fn toml_roundtrip() {
        let mut c = RunConfig { command: "compare".into(), x: 2000.5, ..Default::default() };
        c.policy.prime_cutoff = 10_000;
        c.output.format = Format::Csv;
        c.x_grid = vec![100.0, 1e3 / 3.0];
        let text = c.to_toml();
        assert!(text.contains("[policy]") && text.contains("prime_cutoff = 10000"));
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        assert!(RunConfig::from_toml("kk = 3").is_err());
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }
}
