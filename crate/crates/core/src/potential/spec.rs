//! Structured potential descriptions: `{"kind": "...", "params": {...}}` documents
//! and the compact `kind:key=value,...` form accepted on the command line.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{build_cantor, Potential};
use crate::error::{Error, Result};

fn default_slope() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    Linear {
        #[serde(default)]
        intercept: f64,
        #[serde(default = "default_slope")]
        slope: f64,
    },
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    HolderWeierstrass {
        beta: f64,
        levels: u32,
    },
    TentTrain {
        amplitudes: Vec<f64>,
    },
    CantorIndicator {
        depth: u32,
    },
}

impl PotentialSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("potential spec: {e}")))
    }

    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialSpec::Constant { value } => Potential::constant(*value),
            PotentialSpec::Linear { intercept, slope } => Potential::linear(*intercept, *slope),
            PotentialSpec::PiecewiseConstant {
                breakpoints,
                values,
            } => Potential::piecewise_constant(breakpoints.clone(), values.clone()),
            PotentialSpec::HolderWeierstrass { beta, levels } => {
                Potential::weierstrass(*beta, *levels)
            }
            PotentialSpec::TentTrain { amplitudes } => Potential::tent_train(amplitudes.clone()),
            PotentialSpec::CantorIndicator { depth } => build_cantor(*depth).map(|(q, _)| q),
        }
    }

    /// Apply `--depth`, `--beta` and `--levels` style overrides where they make sense.
    pub fn with_overrides(
        mut self,
        depth: Option<u32>,
        beta: Option<f64>,
        levels: Option<u32>,
    ) -> Self {
        match &mut self {
            PotentialSpec::CantorIndicator { depth: d } => {
                if let Some(v) = depth {
                    *d = v;
                }
            }
            PotentialSpec::HolderWeierstrass { beta: b, levels: l } => {
                if let Some(v) = beta {
                    *b = v;
                }
                if let Some(v) = levels {
                    *l = v;
                }
            }
            PotentialSpec::TentTrain { amplitudes } => {
                if let Some(v) = levels {
                    *amplitudes = harmonic(v);
                }
            }
            _ => {}
        }
        self
    }
}

fn harmonic(levels: u32) -> Vec<f64> {
    (1..=levels).map(|j| 1.0 / j as f64).collect()
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Spec(format!("`{key}` expects a number, got `{v}`")))
}

fn parse_u32(key: &str, v: &str) -> Result<u32> {
    v.trim()
        .parse()
        .map_err(|_| Error::Spec(format!("`{key}` expects an integer, got `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(';').map(|x| parse_f64(key, x)).collect()
}

impl FromStr for PotentialSpec {
    type Err = Error;

    /// Accepts e.g. `constant:1`, `linear`, `linear:intercept=0.5,slope=2`,
    /// `weier:beta=0.5,levels=12`, `tent:harmonic=12`, `tent:amplitudes=1;0.5`,
    /// `cantor:depth=3`, `piecewise:breakpoints=0;0.5;1,values=1;0`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (i, item) in rest.split(',').filter(|x| !x.trim().is_empty()).enumerate() {
            match item.split_once('=') {
                Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
                // a bare value is the first parameter of the family
                None if i == 0 => pairs.push((String::new(), item.trim().to_string())),
                None => return Err(Error::Spec(format!("malformed parameter `{item}`"))),
            }
        }
        let unknown = |k: &str| Error::Spec(format!("unknown parameter `{k}` for `{kind}`"));

        match kind {
            "constant" | "const" => {
                let mut value = 1.0;
                for (k, v) in &pairs {
                    match k.as_str() {
                        "" | "value" | "c" => value = parse_f64("value", v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(PotentialSpec::Constant { value })
            }
            "linear" => {
                let (mut intercept, mut slope) = (0.0, 1.0);
                for (k, v) in &pairs {
                    match k.as_str() {
                        "intercept" | "a" => intercept = parse_f64(k, v)?,
                        "" | "slope" | "b" => slope = parse_f64("slope", v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(PotentialSpec::Linear { intercept, slope })
            }
            "piecewise" | "piecewise_constant" => {
                let (mut breakpoints, mut values) = (None, None);
                for (k, v) in &pairs {
                    match k.as_str() {
                        "breakpoints" => breakpoints = Some(parse_list(k, v)?),
                        "values" => values = Some(parse_list(k, v)?),
                        _ => return Err(unknown(k)),
                    }
                }
                match (breakpoints, values) {
                    (Some(breakpoints), Some(values)) => Ok(PotentialSpec::PiecewiseConstant {
                        breakpoints,
                        values,
                    }),
                    _ => Err(Error::Spec("piecewise needs breakpoints and values".into())),
                }
            }
            "weier" | "weierstrass" | "holder" | "holder_weierstrass" => {
                let (mut beta, mut levels) = (0.5, 12);
                for (k, v) in &pairs {
                    match k.as_str() {
                        "" | "beta" => beta = parse_f64("beta", v)?,
                        "levels" => levels = parse_u32(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(PotentialSpec::HolderWeierstrass { beta, levels })
            }
            "tent" | "tent_train" => {
                let mut amplitudes = harmonic(12);
                for (k, v) in &pairs {
                    match k.as_str() {
                        "" | "harmonic" | "levels" => amplitudes = harmonic(parse_u32("levels", v)?),
                        "amplitudes" => amplitudes = parse_list(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(PotentialSpec::TentTrain { amplitudes })
            }
            "cantor" | "cantor_indicator" => {
                let mut depth = 3;
                for (k, v) in &pairs {
                    match k.as_str() {
                        "" | "depth" => depth = parse_u32("depth", v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(PotentialSpec::CantorIndicator { depth })
            }
            other => Err(Error::Spec(format!("unknown potential kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::KindTag;

    #[test]
    fn shorthand_forms() {
        assert_eq!(
            "constant:1".parse::<PotentialSpec>().unwrap(),
            PotentialSpec::Constant { value: 1.0 }
        );
        assert_eq!(
            "linear".parse::<PotentialSpec>().unwrap(),
            PotentialSpec::Linear {
                intercept: 0.0,
                slope: 1.0
            }
        );
        assert_eq!(
            "weier:beta=0.5,levels=12".parse::<PotentialSpec>().unwrap(),
            PotentialSpec::HolderWeierstrass {
                beta: 0.5,
                levels: 12
            }
        );
        let tent: PotentialSpec = "tent:amplitudes=1;0.5".parse().unwrap();
        assert_eq!(
            tent,
            PotentialSpec::TentTrain {
                amplitudes: vec![1.0, 0.5]
            }
        );
        let q = "cantor:depth=2".parse::<PotentialSpec>().unwrap().build().unwrap();
        assert_eq!(q.tag(), KindTag::CantorIndicator);
    }

    #[test]
    fn shorthand_errors() {
        assert!("bogus".parse::<PotentialSpec>().is_err());
        assert!("linear:foo=1".parse::<PotentialSpec>().is_err());
        assert!("cantor:depth=x".parse::<PotentialSpec>().is_err());
        assert!("piecewise:values=1".parse::<PotentialSpec>().is_err());
    }

    #[test]
    fn json_documents() {
        let spec = PotentialSpec::from_json(r#"{"kind": "linear", "params": {"slope": 2}}"#).unwrap();
        assert_eq!(
            spec,
            PotentialSpec::Linear {
                intercept: 0.0,
                slope: 2.0
            }
        );
        let spec =
            PotentialSpec::from_json(r#"{"kind": "cantor_indicator", "params": {"depth": 4}}"#)
                .unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(PotentialSpec::from_json(&text).unwrap(), spec);
        assert!(PotentialSpec::from_json(r#"{"kind": "nope"}"#).is_err());
    }

    #[test]
    fn overrides_apply_per_family() {
        let spec = PotentialSpec::CantorIndicator { depth: 3 }.with_overrides(Some(6), None, None);
        assert_eq!(spec, PotentialSpec::CantorIndicator { depth: 6 });
        let spec = PotentialSpec::HolderWeierstrass {
            beta: 0.5,
            levels: 12,
        }
        .with_overrides(None, Some(0.25), Some(4));
        assert_eq!(
            spec,
            PotentialSpec::HolderWeierstrass {
                beta: 0.25,
                levels: 4
            }
        );
    }
}
