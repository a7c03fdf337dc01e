//! In-memory dataset: geographic units and their assembled compartment
//! series, plus anomalies recorded along the way.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::geo::{GeoUnit, UnitLevel};
use crate::series::{Anomaly, CompartmentSeries};

/// Units, series, and the anomaly log for one ingested snapshot.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    units: BTreeMap<String, GeoUnit>,
    series: BTreeMap<String, CompartmentSeries>,
    anomalies: Vec<Anomaly>,
    /// Units present in the input but excluded from modeling, with reasons
    /// (typically: no death data available).
    unusable: BTreeMap<String, String>,
}

impl Dataset {
    /// Build a dataset directly from assembled series. Every series carries
    /// its own unit; extra units (e.g. parents) can be listed separately.
    pub fn from_series(
        series: impl IntoIterator<Item = CompartmentSeries>,
        extra_units: impl IntoIterator<Item = GeoUnit>,
    ) -> Self {
        let mut dataset = Dataset::default();
        for unit in extra_units {
            dataset.units.insert(unit.unit_id.clone(), unit);
        }
        for s in series {
            dataset.units.insert(s.unit().unit_id.clone(), s.unit().clone());
            dataset.series.insert(s.unit().unit_id.clone(), s);
        }
        dataset
    }

    pub(crate) fn insert_unit(&mut self, unit: GeoUnit) {
        self.units.insert(unit.unit_id.clone(), unit);
    }

    pub(crate) fn insert_series(&mut self, series: CompartmentSeries) {
        self.series.insert(series.unit().unit_id.clone(), series);
    }

    pub(crate) fn record_anomalies(&mut self, anomalies: impl IntoIterator<Item = Anomaly>) {
        self.anomalies.extend(anomalies);
    }

    pub(crate) fn mark_unusable(&mut self, unit_id: &str, reason: impl Into<String>) {
        self.unusable.insert(unit_id.to_string(), reason.into());
    }

    pub fn unit(&self, unit_id: &str) -> Result<&GeoUnit> {
        self.units
            .get(unit_id)
            .ok_or_else(|| Error::UnknownUnit(unit_id.to_string()))
    }

    pub fn series(&self, unit_id: &str) -> Result<&CompartmentSeries> {
        self.series
            .get(unit_id)
            .ok_or_else(|| Error::UnknownUnit(unit_id.to_string()))
    }

    pub fn has_series(&self, unit_id: &str) -> bool {
        self.series.contains_key(unit_id)
    }

    pub fn units(&self) -> impl Iterator<Item = &GeoUnit> {
        self.units.values()
    }

    pub fn all_series(&self) -> impl Iterator<Item = &CompartmentSeries> {
        self.series.values()
    }

    pub fn anomalies(&self) -> &[Anomaly] {
        &self.anomalies
    }

    pub fn unusable(&self) -> &BTreeMap<String, String> {
        &self.unusable
    }

    /// Units at a level that have a usable assembled series, sorted by id.
    pub fn modeled_units(&self, level: UnitLevel) -> Vec<&GeoUnit> {
        self.units
            .values()
            .filter(|u| u.level == level)
            .filter(|u| self.series.contains_key(&u.unit_id))
            .filter(|u| !self.unusable.contains_key(&u.unit_id))
            .collect()
    }

    /// The parent region unit of a province.
    pub fn parent_region(&self, province: &GeoUnit) -> Result<&GeoUnit> {
        let parent_id = province.parent_id.as_deref().ok_or_else(|| {
            Error::InvalidInput(format!("unit `{}` has no parent region", province.unit_id))
        })?;
        self.unit(parent_id)
    }

    /// A copy of the dataset with every series truncated to dates on or
    /// before `as_of`. Units whose series vanish keep their unit entry but
    /// lose the series.
    pub fn truncated(&self, as_of: NaiveDate) -> Dataset {
        let mut out = Dataset {
            units: self.units.clone(),
            series: BTreeMap::new(),
            anomalies: Vec::new(),
            unusable: self.unusable.clone(),
        };
        for (id, series) in &self.series {
            if let Some(cut) = series.truncated(as_of) {
                out.series.insert(id.clone(), cut);
            }
        }
        out
    }
}
