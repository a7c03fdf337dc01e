//! Core domain types: compartment series, parameter series, and anomalies.
//!
//! Compartment counts are reals, not integers: the recovered series is a
//! ratio-based estimate and forecasts are continuous. Constructors enforce
//! structure (aligned lengths, ordered dates); value-level problems in
//! observed data are reported by [`validate_series`] as anomalies, never
//! silently repaired here.

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::GeoUnit;

/// Relative tolerance on `S + I + R + D = n` and `T = I + R + D`.
pub const CONSERVATION_REL_TOL: f64 = 1e-9;

/// A single time slice of the four compartments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirdState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub d: f64,
    /// Fixed population total.
    pub n: u64,
}

impl SirdState {
    pub fn new(s: f64, i: f64, r: f64, d: f64, n: u64) -> Result<Self> {
        for (label, v) in [("s", s), ("i", i), ("r", r), ("d", d)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "compartment {label} must be finite and non-negative, got {v}"
                )));
            }
        }
        let state = SirdState { s, i, r, d, n };
        if !state.conserves() {
            return Err(Error::InvalidInput(format!(
                "compartments sum to {} but population is {n}",
                s + i + r + d
            )));
        }
        Ok(state)
    }

    /// Whether `s + i + r + d` equals `n` within tolerance.
    pub fn conserves(&self) -> bool {
        let n = self.n as f64;
        ((self.s + self.i + self.r + self.d) - n).abs() <= CONSERVATION_REL_TOL * n
    }
}

/// Dated S/I/R/D counts plus cumulative total cases for one geographic unit.
///
/// Construction checks structure only: non-empty, equal lengths, strictly
/// increasing dates. Daily continuity, conservation, and monotonicity of the
/// cumulative series are value-level properties checked by
/// [`validate_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentSeries {
    unit: GeoUnit,
    dates: Vec<NaiveDate>,
    susceptible: Vec<f64>,
    infected: Vec<f64>,
    recovered: Vec<f64>,
    deceased: Vec<f64>,
    total_cases: Vec<f64>,
}

impl CompartmentSeries {
    pub fn new(
        unit: GeoUnit,
        dates: Vec<NaiveDate>,
        susceptible: Vec<f64>,
        infected: Vec<f64>,
        recovered: Vec<f64>,
        deceased: Vec<f64>,
        total_cases: Vec<f64>,
    ) -> Result<Self> {
        let len = dates.len();
        if len == 0 {
            return Err(Error::Structural("series must not be empty".into()));
        }
        for (label, v) in [
            ("susceptible", &susceptible),
            ("infected", &infected),
            ("recovered", &recovered),
            ("deceased", &deceased),
            ("total_cases", &total_cases),
        ] {
            if v.len() != len {
                return Err(Error::Structural(format!(
                    "{label} has {} entries but there are {len} dates",
                    v.len()
                )));
            }
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Structural(
                "dates must be strictly increasing".into(),
            ));
        }
        Ok(CompartmentSeries {
            unit,
            dates,
            susceptible,
            infected,
            recovered,
            deceased,
            total_cases,
        })
    }

    pub fn unit(&self) -> &GeoUnit {
        &self.unit
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn susceptible(&self) -> &[f64] {
        &self.susceptible
    }

    pub fn infected(&self) -> &[f64] {
        &self.infected
    }

    pub fn recovered(&self) -> &[f64] {
        &self.recovered
    }

    pub fn deceased(&self) -> &[f64] {
        &self.deceased
    }

    pub fn total_cases(&self) -> &[f64] {
        &self.total_cases
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Position of `date`, if present.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// The compartment state at index `idx`.
    pub fn state_at(&self, idx: usize) -> SirdState {
        SirdState {
            s: self.susceptible[idx],
            i: self.infected[idx],
            r: self.recovered[idx],
            d: self.deceased[idx],
            n: self.unit.population,
        }
    }

    /// The most recent state.
    pub fn last_state(&self) -> SirdState {
        self.state_at(self.len() - 1)
    }

    pub fn last_date(&self) -> NaiveDate {
        *self.dates.last().expect("series is non-empty")
    }

    /// The prefix of the series up to and including `as_of`.
    ///
    /// Returns `None` when no observation falls on or before `as_of`.
    pub fn truncated(&self, as_of: NaiveDate) -> Option<CompartmentSeries> {
        let end = self.dates.partition_point(|d| *d <= as_of);
        if end == 0 {
            return None;
        }
        Some(CompartmentSeries {
            unit: self.unit.clone(),
            dates: self.dates[..end].to_vec(),
            susceptible: self.susceptible[..end].to_vec(),
            infected: self.infected[..end].to_vec(),
            recovered: self.recovered[..end].to_vec(),
            deceased: self.deceased[..end].to_vec(),
            total_cases: self.total_cases[..end].to_vec(),
        })
    }

    /// Daily new cases: first differences of total cases, floored at zero so
    /// recount artifacts do not inject negative spikes. One entry per date
    /// from the second onward.
    pub fn new_cases(&self) -> (Vec<NaiveDate>, Vec<f64>) {
        let dates = self.dates[1..].to_vec();
        let values = self
            .total_cases
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .collect();
        (dates, values)
    }
}

/// Dated transmission / recovery / mortality rates with validity flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSeries {
    pub dates: Vec<NaiveDate>,
    pub beta: Vec<f64>,
    pub gamma_r: Vec<f64>,
    pub gamma_d: Vec<f64>,
    /// False where extraction was impossible (no infections or no
    /// susceptibles on that day).
    pub defined: Vec<bool>,
    /// True where a negative extracted value was clamped to zero.
    pub clamped: Vec<bool>,
}

impl ParameterSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Values of one parameter by kind.
    pub fn values(&self, kind: crate::sird::ParamKind) -> &[f64] {
        match kind {
            crate::sird::ParamKind::Beta => &self.beta,
            crate::sird::ParamKind::GammaR => &self.gamma_r,
            crate::sird::ParamKind::GammaD => &self.gamma_d,
        }
    }

    /// The longest run of defined entries ending at the last index, as values
    /// of the given parameter. Empty when the final entry is undefined.
    pub fn trailing_defined(&self, kind: crate::sird::ParamKind) -> Vec<f64> {
        let values = self.values(kind);
        let start = self
            .defined
            .iter()
            .rposition(|&ok| !ok)
            .map(|i| i + 1)
            .unwrap_or(0);
        values[start..].to_vec()
    }
}

/// Kinds of data problems surfaced by validation and repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// A cumulative series decreased day over day.
    NegativeIncrement,
    /// `S + I + R + D` deviates from the population, or `T != I + R + D`.
    ConservationViolation,
    /// Consecutive observations are more than one day apart.
    DateGap,
    /// A cumulative decrease was replaced by the previous value.
    MonotoneClamp,
    /// A missing day was filled by carrying the last observation forward.
    GapFill,
}

impl std::fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AnomalyKind::NegativeIncrement => "negative_increment",
            AnomalyKind::ConservationViolation => "conservation_violation",
            AnomalyKind::DateGap => "date_gap",
            AnomalyKind::MonotoneClamp => "monotone_clamp",
            AnomalyKind::GapFill => "gap_fill",
        };
        f.write_str(s)
    }
}

/// One reported data problem, attached to a unit and a date.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anomaly {
    pub unit_id: String,
    pub date: NaiveDate,
    pub kind: AnomalyKind,
    pub detail: String,
}

/// Report every value-level anomaly in a series without mutating it.
///
/// Checks: negative daily increments in the cumulative T/R/D series, gaps in
/// the date sequence, conservation of `S + I + R + D = n`, and consistency of
/// `T = I + R + D`. Clean data yields an empty list.
pub fn validate_series(series: &CompartmentSeries) -> Vec<Anomaly> {
    let mut anomalies = Vec::new();
    let unit_id = series.unit().unit_id.clone();
    let n = series.unit().population as f64;
    let tol = CONSERVATION_REL_TOL * n;

    for w in series.dates.windows(2) {
        if (w[1] - w[0]).num_days() != 1 {
            anomalies.push(Anomaly {
                unit_id: unit_id.clone(),
                date: w[1],
                kind: AnomalyKind::DateGap,
                detail: format!("{} days since previous observation", (w[1] - w[0]).num_days()),
            });
        }
    }

    for (label, values) in [
        ("total_cases", &series.total_cases),
        ("recovered", &series.recovered),
        ("deceased", &series.deceased),
    ] {
        for (idx, w) in values.windows(2).enumerate() {
            if w[1] < w[0] {
                anomalies.push(Anomaly {
                    unit_id: unit_id.clone(),
                    date: series.dates[idx + 1],
                    kind: AnomalyKind::NegativeIncrement,
                    detail: format!("{label} fell from {} to {}", w[0], w[1]),
                });
            }
        }
    }

    for idx in 0..series.len() {
        let state = series.state_at(idx);
        let sum = state.s + state.i + state.r + state.d;
        if (sum - n).abs() > tol {
            anomalies.push(Anomaly {
                unit_id: unit_id.clone(),
                date: series.dates[idx],
                kind: AnomalyKind::ConservationViolation,
                detail: format!("S+I+R+D = {sum}, population = {n}"),
            });
        }
        let t = series.total_cases[idx];
        let ird = state.i + state.r + state.d;
        if (t - ird).abs() > tol {
            anomalies.push(Anomaly {
                unit_id: unit_id.clone(),
                date: series.dates[idx],
                kind: AnomalyKind::ConservationViolation,
                detail: format!("total_cases = {t} but I+R+D = {ird}"),
            });
        }
    }

    anomalies
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoUnit;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn small_series(total: Vec<f64>, recovered: Vec<f64>, deceased: Vec<f64>) -> CompartmentSeries {
        let n = 1000u64;
        let len = total.len();
        let dates: Vec<NaiveDate> = (0..len)
            .map(|i| date("2020-03-01") + chrono::Days::new(i as u64))
            .collect();
        let infected: Vec<f64> = (0..len)
            .map(|i| total[i] - recovered[i] - deceased[i])
            .collect();
        let susceptible: Vec<f64> = total.iter().map(|t| n as f64 - t).collect();
        CompartmentSeries::new(
            GeoUnit::region("r1", n).unwrap(),
            dates,
            susceptible,
            infected,
            recovered,
            deceased,
            total,
        )
        .unwrap()
    }

    #[test]
    fn clean_series_has_no_anomalies() {
        let series = small_series(
            vec![10.0, 12.0, 15.0],
            vec![0.0, 1.0, 2.0],
            vec![0.0, 0.0, 1.0],
        );
        assert!(validate_series(&series).is_empty());
    }

    #[test]
    fn decreasing_total_is_flagged() {
        let series = small_series(
            vec![10.0, 12.0, 11.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        );
        let anomalies = validate_series(&series);
        assert_eq!(anomalies.len(), 1);
        assert_eq!(anomalies[0].kind, AnomalyKind::NegativeIncrement);
        assert_eq!(anomalies[0].date, date("2020-03-03"));
    }

    #[test]
    fn conservation_violation_is_flagged() {
        // Shift S by 1% of n on one day.
        let unit = GeoUnit::region("r1", 1000).unwrap();
        let dates = vec![date("2020-03-01"), date("2020-03-02")];
        let series = CompartmentSeries::new(
            unit,
            dates,
            vec![990.0, 980.0],
            vec![10.0, 10.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![10.0, 10.0],
        )
        .unwrap();
        let anomalies = validate_series(&series);
        assert_eq!(anomalies.len(), 1);
        assert_eq!(anomalies[0].kind, AnomalyKind::ConservationViolation);
    }

    #[test]
    fn date_gap_is_flagged() {
        let unit = GeoUnit::region("r1", 1000).unwrap();
        let dates = vec![date("2020-03-01"), date("2020-03-03")];
        let series = CompartmentSeries::new(
            unit,
            dates,
            vec![990.0, 990.0],
            vec![10.0, 10.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![10.0, 10.0],
        )
        .unwrap();
        let anomalies = validate_series(&series);
        assert_eq!(anomalies.len(), 1);
        assert_eq!(anomalies[0].kind, AnomalyKind::DateGap);
    }

    #[test]
    fn length_mismatch_is_a_structural_error() {
        let unit = GeoUnit::region("r1", 1000).unwrap();
        let err = CompartmentSeries::new(
            unit,
            vec![date("2020-03-01"), date("2020-03-02")],
            vec![990.0],
            vec![10.0, 10.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![10.0, 10.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn new_cases_floor_negative_differences() {
        let series = small_series(
            vec![10.0, 12.0, 11.0, 15.0],
            vec![0.0; 4],
            vec![0.0; 4],
        );
        let (dates, values) = series.new_cases();
        assert_eq!(dates.len(), 3);
        assert_eq!(values, vec![2.0, 0.0, 4.0]);
    }

    #[test]
    fn truncated_keeps_prefix() {
        let series = small_series(
            vec![10.0, 12.0, 15.0],
            vec![0.0; 3],
            vec![0.0; 3],
        );
        let cut = series.truncated(date("2020-03-02")).unwrap();
        assert_eq!(cut.len(), 2);
        assert_eq!(cut.last_date(), date("2020-03-02"));
        assert!(series.truncated(date("2020-02-01")).is_none());
    }
}
