//! Domain strings and the JSON scenario configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{make_dumbbell, make_spiked_square, regular_polygon, unit_square, Polygon, SpikeSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Square,
    Regular { sides: usize },
    /// Spiked square `Ω_j` with the tooth exponent preset for `p`.
    Spiked { j: u32, p: f64 },
    Dumbbell { eps: f64, length: f64 },
    File { path: String },
}

/// A named polygon family with parameters and an optional similarity scale.
///
/// Text form: `square`, `regular:64`, `spiked:2:4`, `dumbbell:0.2:1` or
/// `file:poly.json`, optionally followed by `@t` for the scale `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub family: Family,
    pub scale: f64,
}

fn bad(spec: &str, why: impl fmt::Display) -> Error {
    Error::Parse(format!("domain `{spec}`: {why}"))
}

fn number<T: FromStr>(spec: &str, field: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(spec, format!("{field} `{s}` is not a valid number")))
}

impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (body, scale) = match spec.rsplit_once('@') {
            Some((b, t)) => (b, number::<f64>(spec, "scale", t)?),
            None => (spec, 1.0),
        };
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(bad(spec, "scale must be positive"));
        }
        let parts: Vec<&str> = body.split(':').collect();
        let family = match parts.as_slice() {
            ["square"] => Family::Square,
            ["regular", n] => Family::Regular {
                sides: number(spec, "side count", n)?,
            },
            ["spiked", j, p] => Family::Spiked {
                j: number(spec, "j", j)?,
                p: number(spec, "p", p)?,
            },
            ["dumbbell", eps, length] => Family::Dumbbell {
                eps: number(spec, "eps", eps)?,
                length: number(spec, "length", length)?,
            },
            ["file", ..] => {
                let path = body["file:".len()..].to_string();
                if path.is_empty() || path.contains(',') {
                    return Err(bad(spec, "file path must be non-empty and free of commas"));
                }
                Family::File { path }
            }
            _ => {
                return Err(bad(
                    spec,
                    "expected square, regular:N, spiked:J:P, dumbbell:EPS:L or file:PATH",
                ))
            }
        };
        Ok(DomainSpec { family, scale })
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Square => write!(f, "square")?,
            Family::Regular { sides } => write!(f, "regular:{sides}")?,
            Family::Spiked { j, p } => write!(f, "spiked:{j}:{p}")?,
            Family::Dumbbell { eps, length } => write!(f, "dumbbell:{eps}:{length}")?,
            Family::File { path } => write!(f, "file:{path}")?,
        }
        if self.scale != 1.0 {
            write!(f, "@{}", self.scale)?;
        }
        Ok(())
    }
}

impl DomainSpec {
    /// The polygon, scaled. Regular polygons have circumradius 1.
    pub fn polygon(&self) -> Result<Polygon> {
        let base = match &self.family {
            Family::Square => unit_square(),
            Family::Regular { sides } => regular_polygon(*sides, 1.0)?,
            Family::Spiked { j, p } => make_spiked_square(SpikeSpec::PresetP(*p), *j)?.polygon,
            Family::Dumbbell { eps, length } => make_dumbbell(*eps, *length)?,
            Family::File { path } => Polygon::read_json(path)?,
        };
        if self.scale == 1.0 {
            Ok(base)
        } else {
            base.scaled(self.scale)
        }
    }

    /// `h_max` capped by the finest feature of the family: the tooth base of
    /// a spiked square and a quarter of a dumbbell channel width.
    pub fn mesh_size(&self, h_max: f64) -> Result<f64> {
        let cap = match &self.family {
            Family::Spiked { j, p } => make_spiked_square(SpikeSpec::PresetP(*p), *j)?.params.tooth_base(),
            Family::Dumbbell { eps, .. } => 0.25 * eps,
            _ => f64::INFINITY,
        };
        Ok(h_max.min(cap * self.scale))
    }
}

fn default_h_max() -> f64 {
    0.1
}

fn default_c_n() -> f64 {
    1.0
}

fn default_starts() -> usize {
    4
}

/// Scenario file. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domains: Vec<String>,
    pub p: Vec<f64>,
    pub k: Vec<usize>,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
    #[serde(default)]
    pub refinements: usize,
    /// Sub-segment length for certified bounds; per-k default when absent.
    #[serde(default)]
    pub measure_resolution: Option<f64>,
    #[serde(default = "default_c_n")]
    pub c_n: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_starts")]
    pub descent_starts: usize,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub svg: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        ScenarioConfig::from_json(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn domain_specs(&self) -> Result<Vec<DomainSpec>> {
        self.domains.iter().map(|d| d.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, why: &str| Err(Error::Parse(format!("field `{name}`: {why}")));
        if self.domains.is_empty() {
            return field("domains", "must be non-empty");
        }
        if self.p.is_empty() {
            return field("p", "must be non-empty");
        }
        if self.k.is_empty() {
            return field("k", "must be non-empty");
        }
        if self.p.iter().any(|&p| !(p > 1.0) || !p.is_finite()) {
            return field("p", "every exponent must be finite and exceed 1");
        }
        if self.k.contains(&0) {
            return field("k", "every index must be at least 1");
        }
        if !(self.h_max > 0.0) || !self.h_max.is_finite() {
            return field("h_max", "must be positive");
        }
        if let Some(r) = self.measure_resolution {
            if !(r > 0.0) || !r.is_finite() {
                return field("measure_resolution", "must be positive");
            }
        }
        if !(self.c_n > 0.0) || !self.c_n.is_finite() {
            return field("c_n", "must be positive");
        }
        if self.descent_starts == 0 {
            return field("descent_starts", "must be at least 1");
        }
        for d in &self.domains {
            d.parse::<DomainSpec>()
                .map_err(|e| Error::Parse(format!("field `domains`: {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_round_trip() {
        for s in ["square", "regular:64", "spiked:2:4", "dumbbell:0.2:1", "file:a/b.json", "square@2", "regular:8@0.5"] {
            let d: DomainSpec = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        for s in ["circle", "regular:x", "spiked:2", "square@0", "square@-1", "file:", "file:a,b"] {
            assert!(s.parse::<DomainSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn domain_polygons() {
        let d: DomainSpec = "square@2".parse().unwrap();
        assert!((d.polygon().unwrap().area() - 4.0).abs() < 1e-12);
        let s: DomainSpec = "spiked:2:4".parse().unwrap();
        assert!((s.mesh_size(0.1).unwrap() - 1.0 / 18.0).abs() < 1e-15);
        let b: DomainSpec = "dumbbell:0.2:1".parse().unwrap();
        assert!((b.mesh_size(0.1).unwrap() - 0.05).abs() < 1e-15);
        assert!(b.polygon().is_ok());
    }

    #[test]
    fn config_parsing() {
        let c = ScenarioConfig::from_json(r#"{"domains": ["square"], "p": [2], "k": [1, 2]}"#).unwrap();
        assert_eq!(c.h_max, 0.1);
        assert_eq!(c.c_n, 1.0);
        let missing = ScenarioConfig::from_json(r#"{"domains": ["square"], "k": [1]}"#).unwrap_err();
        assert!(missing.to_string().contains("`p`"), "{missing}");
        let empty = ScenarioConfig::from_json(r#"{"domains": ["square"], "p": [], "k": [1]}"#).unwrap_err();
        assert!(empty.to_string().contains("field `p`"));
        let unknown = ScenarioConfig::from_json("{\"domains\": [\"square\"],\n \"p\": [2], \"k\": [1], \"q\": 1}").unwrap_err();
        assert!(unknown.to_string().contains("line 2"), "{unknown}");
        assert!(ScenarioConfig::from_json(r#"{"domains": ["disk"], "p": [2], "k": [1]}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"domains": ["square"], "p": [1], "k": [1]}"#).is_err());
    }
}
