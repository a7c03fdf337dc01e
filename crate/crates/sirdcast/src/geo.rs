//! Geographic units: provinces, their parent regions, and the nation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Administrative level of a [`GeoUnit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitLevel {
    Province,
    Region,
    Nation,
}

/// One geographic unit with its resident population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoUnit {
    /// Opaque key, unique across the dataset.
    pub unit_id: String,
    /// Display name.
    pub name: String,
    pub level: UnitLevel,
    /// Parent region for provinces; `None` for regions and the nation.
    pub parent_id: Option<String>,
    /// Resident population, the model's closed total.
    pub population: u64,
}

impl GeoUnit {
    pub fn new(
        unit_id: impl Into<String>,
        name: impl Into<String>,
        level: UnitLevel,
        parent_id: Option<String>,
        population: u64,
    ) -> Result<Self> {
        if population == 0 {
            return Err(Error::InvalidInput("population must be at least 1".into()));
        }
        if level == UnitLevel::Province && parent_id.is_none() {
            return Err(Error::InvalidInput(
                "a province must name its parent region".into(),
            ));
        }
        Ok(GeoUnit {
            unit_id: unit_id.into(),
            name: name.into(),
            level,
            parent_id,
            population,
        })
    }

    /// Convenience constructor for a province.
    pub fn province(unit_id: &str, parent_id: &str, population: u64) -> Result<Self> {
        GeoUnit::new(
            unit_id,
            unit_id,
            UnitLevel::Province,
            Some(parent_id.to_string()),
            population,
        )
    }

    /// Convenience constructor for a region.
    pub fn region(unit_id: &str, population: u64) -> Result<Self> {
        GeoUnit::new(unit_id, unit_id, UnitLevel::Region, None, population)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn province_requires_parent() {
        assert!(GeoUnit::new("p1", "p1", UnitLevel::Province, None, 1000).is_err());
        assert!(GeoUnit::province("p1", "r1", 1000).is_ok());
    }

    #[test]
    fn population_must_be_positive() {
        assert!(GeoUnit::region("r1", 0).is_err());
        assert!(GeoUnit::region("r1", 1).is_ok());
    }
}
