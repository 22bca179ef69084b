use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Free,
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub constraint: Constraint,
}

impl ParamSpec {
    pub fn free(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            constraint: Constraint::Free,
        }
    }

    pub fn positive(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            constraint: Constraint::Positive,
        }
    }
}

/// Named parameter values with per-entry constraints.
///
/// Positive entries are optimized through `u = ln(value)`, so any finite
/// unconstrained iterate maps back to a strictly positive value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    specs: Vec<ParamSpec>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(specs: Vec<ParamSpec>, values: Vec<f64>) -> Result<Self> {
        if specs.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} names for {} values",
                specs.len(),
                values.len()
            )));
        }
        for (s, &v) in specs.iter().zip(&values) {
            let ok = match s.constraint {
                Constraint::Free => v.is_finite(),
                Constraint::Positive => v.is_finite() && v > 0.0,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("{} = {v}", s.name)));
            }
        }
        Ok(Self { specs, values })
    }

    /// Every positive entry at `positive`, every free entry at `free`.
    pub fn constant(specs: Vec<ParamSpec>, positive: f64, free: f64) -> Result<Self> {
        let values = specs
            .iter()
            .map(|s| match s.constraint {
                Constraint::Positive => positive,
                Constraint::Free => free,
            })
            .collect();
        Self::new(specs, values)
    }

    /// Build from a name → value map; names missing from the map take `fallback`.
    pub fn from_map(
        specs: Vec<ParamSpec>,
        map: &BTreeMap<String, f64>,
        fallback: Option<&ParamVector>,
    ) -> Result<Self> {
        if let Some(unknown) = map.keys().find(|k| !specs.iter().any(|s| &s.name == *k)) {
            return Err(Error::NameMismatch(format!("unknown parameter {unknown}")));
        }
        let values = specs
            .iter()
            .enumerate()
            .map(|(i, s)| match map.get(&s.name) {
                Some(&v) => Ok(v),
                None => fallback
                    .map(|f| f.values[i])
                    .ok_or_else(|| Error::NameMismatch(format!("missing parameter {}", s.name))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(specs, values)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.specs
            .iter()
            .zip(&self.values)
            .map(|(s, &v)| (s.name.clone(), v))
            .collect()
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.specs
            .iter()
            .position(|s| s.name == name)
            .map(|i| self.values[i])
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.specs.clone(), values)
    }

    pub fn to_unconstrained(&self) -> Vec<f64> {
        self.specs
            .iter()
            .zip(&self.values)
            .map(|(s, &v)| match s.constraint {
                Constraint::Free => v,
                Constraint::Positive => v.ln(),
            })
            .collect()
    }

    /// Inverse of [`to_unconstrained`](Self::to_unconstrained).
    pub fn from_unconstrained(&self, raw: &[f64]) -> Result<Self> {
        let values = self
            .specs
            .iter()
            .zip(raw)
            .map(|(s, &u)| match s.constraint {
                Constraint::Free => u,
                Constraint::Positive => u.exp(),
            })
            .collect();
        Self::new(self.specs.clone(), values)
    }

    /// Converts a gradient with respect to the values into one with respect
    /// to the unconstrained coordinates.
    pub fn chain_to_unconstrained(&self, grad: &[f64]) -> Vec<f64> {
        self.specs
            .iter()
            .zip(&self.values)
            .zip(grad)
            .map(|((s, &v), &g)| match s.constraint {
                Constraint::Free => g,
                Constraint::Positive => g * v,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> Vec<ParamSpec> {
        vec![ParamSpec::positive("mu"), ParamSpec::free("theta")]
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(ParamVector::new(specs(), vec![0.0, 1.0]).is_err());
        assert!(ParamVector::new(specs(), vec![1.0, f64::NAN]).is_err());
        assert!(ParamVector::new(specs(), vec![1.0]).is_err());
    }

    #[test]
    fn unconstrained_roundtrip() {
        let p = ParamVector::new(specs(), vec![2.5, -1.0]).unwrap();
        let u = p.to_unconstrained();
        assert!((u[0] - 2.5f64.ln()).abs() < 1e-15);
        let back = p.from_unconstrained(&u).unwrap();
        assert!((back.values()[0] - 2.5).abs() < 1e-12);
        assert_eq!(back.values()[1], -1.0);
        assert_eq!(p.chain_to_unconstrained(&[1.0, 3.0]), vec![2.5, 3.0]);
    }

    #[test]
    fn map_conversion() {
        let defaults = ParamVector::constant(specs(), 0.5, 0.0).unwrap();
        let mut m = BTreeMap::new();
        m.insert("theta".to_string(), 2.0);
        let p = ParamVector::from_map(specs(), &m, Some(&defaults)).unwrap();
        assert_eq!(p.values(), &[0.5, 2.0]);
        assert!(ParamVector::from_map(specs(), &m, None).is_err());
        m.insert("bogus".into(), 1.0);
        assert!(matches!(
            ParamVector::from_map(specs(), &m, Some(&defaults)),
            Err(Error::NameMismatch(_))
        ));
    }
}
