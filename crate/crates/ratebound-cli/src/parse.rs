//! Input parsing helpers: exact-rational alpha vectors, numeric lists, and
//! the key=value config file.

use std::collections::HashMap;
use std::path::Path;

use num_rational::Ratio;

/// Parses a comma-separated alpha vector. Entries may be fractions (`4/35`)
/// or decimals (`0.114`). All-fraction inputs are summed exactly so table
/// parameters round-trip without float drift in the simplex check.
pub fn parse_alpha(input: &str) -> Result<Vec<f64>, String> {
    let tokens: Vec<&str> = input.split(',').map(str::trim).collect();
    if tokens.len() < 2 {
        return Err("alpha needs at least 2 comma-separated components".into());
    }
    let mut fractions: Vec<Ratio<i64>> = Vec::with_capacity(tokens.len());
    let mut all_fractions = true;
    let mut values = Vec::with_capacity(tokens.len());
    for tok in &tokens {
        if let Some((num, den)) = tok.split_once('/') {
            let num: i64 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad fraction numerator in '{tok}'"))?;
            let den: i64 = den
                .trim()
                .parse()
                .map_err(|_| format!("bad fraction denominator in '{tok}'"))?;
            if den == 0 {
                return Err(format!("zero denominator in '{tok}'"));
            }
            fractions.push(Ratio::new(num, den));
            values.push(num as f64 / den as f64);
        } else {
            all_fractions = false;
            let v: f64 = tok.parse().map_err(|_| format!("bad number '{tok}'"))?;
            values.push(v);
        }
    }
    if all_fractions {
        let sum: Ratio<i64> = fractions.iter().sum();
        if sum != Ratio::new(1, 1) {
            return Err(format!(
                "fractional alpha must sum to exactly 1, got {}/{}",
                sum.numer(),
                sum.denom()
            ));
        }
    }
    Ok(values)
}

pub fn parse_u64_list(input: &str) -> Result<Vec<u64>, String> {
    input
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad integer '{tok}'"))
        })
        .collect()
}

/// Flat key=value file providing defaults for common flags. `#` starts a
/// comment; keys mirror the long flag names (`seed`, `delta`, `trials`,
/// `format`, `m`).
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {} is not key=value: '{raw}'", idx + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key '{key}' has invalid value '{raw}'")),
        }
    }

    pub fn seed(&self) -> Result<Option<u64>, String> {
        self.get("seed")
    }

    pub fn delta(&self) -> Result<Option<f64>, String> {
        self.get("delta")
    }

    pub fn trials(&self) -> Result<Option<u64>, String> {
        self.get("trials")
    }

    pub fn m(&self) -> Result<Option<usize>, String> {
        self.get("m")
    }

    pub fn format(&self) -> Option<&str> {
        self.values.get("format").map(String::as_str)
    }
}
