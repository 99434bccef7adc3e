//! Run configuration and the compact text syntax for families, measures
//! and exact rationals used on the command line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Alphabet, DyadicGrid, MeasureSpec, SubshiftFamily, DEFAULT_WORD_BUDGET};
use crate::ratedist::DEFAULT_TABLE_BUDGET;

pub const FAMILY_SCHEMA: &str = "family syntax: sparse:N=<n>,K=<k> | full-grid | full-binary | \
full:<v1>;<v2>;... | vanishing-cubes:m=<m> | reciprocal:n=<n>";

pub const MEASURE_SCHEMA: &str = "measure syntax: sparse-shift-avg:N=<n>,K=<k> | iid-uniform | \
iid:<v1>;<v2>;... | point-mass:<v>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: DyadicGrid,
    pub word_budget: u64,
    pub table_budget: u64,
    /// Soft cap; stages check it between jobs, never mid-computation.
    pub wall_clock_secs: u64,
    pub out_dir: PathBuf,
    pub threads: usize,
    /// Free-form per-experiment parameters.
    pub params: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid: DyadicGrid::default(),
            word_budget: DEFAULT_WORD_BUDGET,
            table_budget: DEFAULT_TABLE_BUDGET,
            wall_clock_secs: 600,
            out_dir: PathBuf::from("out"),
            threads: 1,
            params: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.word_budget == 0 || self.table_budget == 0 || self.wall_clock_secs == 0 {
            return Err(Error::param("budgets must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::param("threads must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::param(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// A nonnegative rational `num / den`, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::param("zero denominator"));
        }
        let g = gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `q` when the value is `1/q`.
    pub fn reciprocal_integer(self) -> Option<u64> {
        (self.num == 1).then_some(self.den)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a.max(1) } else { gcd(b, a % b) }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 { write!(f, "{}", self.num) } else { write!(f, "{}/{}", self.num, self.den) }
    }
}

/// Accepts `a`, `a/b` and `2^-e`. Decimals are rejected.
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let int = |t: &str| t.trim().parse::<u64>().map_err(|_| Error::param(format!("not an exact rational: {s:?}")));
        if let Some(exp) = s.strip_prefix("2^") {
            let e: i64 = exp.trim().parse().map_err(|_| Error::param(format!("bad exponent in {s:?}")))?;
            if e.unsigned_abs() > 62 {
                return Err(Error::param(format!("exponent out of range in {s:?}")));
            }
            return if e >= 0 { Self::new(1 << e, 1) } else { Self::new(1, 1 << -e) };
        }
        match s.split_once('/') {
            Some((a, b)) => Self::new(int(a)?, int(b)?),
            None => Self::new(int(s)?, 1),
        }
    }
}

pub fn parse_rational_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

fn key_values(body: &str) -> Result<BTreeMap<String, String>> {
    body.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::param(format!("expected key=value, got {kv:?}")))
        })
        .collect()
}

fn get_usize(map: &BTreeMap<String, String>, key: &str, schema: &str) -> Result<usize> {
    map.get(key)
        .ok_or_else(|| Error::param(format!("missing {key}; {schema}")))?
        .parse()
        .map_err(|_| Error::param(format!("{key} must be a nonnegative integer; {schema}")))
}

fn value_list(body: &str) -> Result<Vec<f64>> {
    body.split(';')
        .map(|t| t.parse::<Rational>().map(Rational::value))
        .collect::<Result<Vec<_>>>()
        .and_then(|v| if v.is_empty() { Err(Error::param("empty value list")) } else { Ok(v) })
}

pub fn parse_family(s: &str) -> Result<SubshiftFamily> {
    let (head, body) = s.split_once(':').unwrap_or((s, ""));
    let bad = || Error::param(format!("unknown family {s:?}; {FAMILY_SCHEMA}"));
    match head.trim() {
        "sparse" => {
            let kv = key_values(body)?;
            Ok(SubshiftFamily::sparse(get_usize(&kv, "N", FAMILY_SCHEMA)?, get_usize(&kv, "K", FAMILY_SCHEMA)?))
        }
        "full-grid" => Ok(SubshiftFamily::full_grid()),
        "full-binary" => Ok(SubshiftFamily::full_binary()),
        "full" => Ok(SubshiftFamily::FullShift { alphabet: Alphabet::Finite(value_list(body)?) }),
        "vanishing-cubes" => {
            let kv = key_values(body)?;
            Ok(SubshiftFamily::VanishingCubes { m_max: get_usize(&kv, "m", FAMILY_SCHEMA)? as u32 })
        }
        "reciprocal" => {
            let kv = key_values(body)?;
            Ok(SubshiftFamily::ReciprocalAlphabet { n_max: get_usize(&kv, "n", FAMILY_SCHEMA)? as u32 })
        }
        _ => Err(bad()),
    }
}

pub fn parse_measure(s: &str, grid: DyadicGrid) -> Result<MeasureSpec> {
    let (head, body) = s.split_once(':').unwrap_or((s, ""));
    match head.trim() {
        "sparse-shift-avg" => {
            let kv = key_values(body)?;
            Ok(MeasureSpec::ShiftAverageProduct {
                n: get_usize(&kv, "N", MEASURE_SCHEMA)?,
                k: get_usize(&kv, "K", MEASURE_SCHEMA)?,
            })
        }
        "iid-uniform" => Ok(MeasureSpec::uniform_grid_iid(grid)),
        "iid" => Ok(MeasureSpec::uniform_iid(&value_list(body)?)),
        "point-mass" => Ok(MeasureSpec::point_mass(body.parse::<Rational>()?.value())),
        _ => Err(Error::param(format!("unknown measure {s:?}; {MEASURE_SCHEMA}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!("1/2".parse::<Rational>().unwrap(), Rational { num: 1, den: 2 });
        assert_eq!("2^-3".parse::<Rational>().unwrap().value(), 0.125);
        assert_eq!("4/8".parse::<Rational>().unwrap().reciprocal_integer(), Some(2));
        assert!("0.5".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn families() {
        assert_eq!(parse_family("sparse:N=4,K=1").unwrap(), SubshiftFamily::sparse(4, 1));
        assert_eq!(parse_family("vanishing-cubes:m=6").unwrap(), SubshiftFamily::VanishingCubes { m_max: 6 });
        assert!(parse_family("sparse:N=4").is_err());
        assert!(parse_family("nope").is_err());
    }

    #[test]
    fn measures() {
        let g = DyadicGrid::new(3).unwrap();
        assert_eq!(parse_measure("sparse-shift-avg:N=4,K=1", g).unwrap(), MeasureSpec::ShiftAverageProduct { n: 4, k: 1 });
        assert!(parse_measure("point-mass:1/2", g).is_ok());
    }

    #[test]
    fn config_roundtrip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        assert!(RunConfig::from_json(r#"{"word_budget":0}"#).is_err());
    }
}
