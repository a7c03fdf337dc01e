//! Training-set construction: exponential time weights, weighted correlation
//! between per-capita new-case series, peer selection above the median, and
//! pooling of peer series.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::geo::{GeoUnit, UnitLevel};
use crate::series::CompartmentSeries;

/// Which geographic level supplies the training peers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Peers are regions correlated with the province's parent region.
    Regional,
    /// Peers are provinces correlated with the province itself.
    Provincial,
}

impl AggregationMode {
    pub fn peer_level(&self) -> UnitLevel {
        match self {
            AggregationMode::Regional => UnitLevel::Region,
            AggregationMode::Provincial => UnitLevel::Province,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AggregationMode::Regional => "regional",
            AggregationMode::Provincial => "provincial",
        }
    }
}

impl std::fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// How to build the training pool for one forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationSpec {
    pub mode: AggregationMode,
    /// The unit peers are correlated against. Must sit at the mode's peer
    /// level: the parent region in regional mode, the province itself in
    /// provincial mode.
    pub reference_id: String,
    pub as_of: NaiveDate,
    /// Correlation window in days; `None` uses the full history.
    pub window: Option<usize>,
}

impl AggregationSpec {
    /// Build the spec for forecasting `unit` under `mode`.
    pub fn for_unit(
        dataset: &Dataset,
        unit: &GeoUnit,
        mode: AggregationMode,
        as_of: NaiveDate,
        window: Option<usize>,
    ) -> Result<Self> {
        let reference_id = match mode {
            AggregationMode::Regional => dataset.parent_region(unit)?.unit_id.clone(),
            AggregationMode::Provincial => unit.unit_id.clone(),
        };
        Ok(AggregationSpec {
            mode,
            reference_id,
            as_of,
            window,
        })
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let reference = dataset.unit(&self.reference_id)?;
        if reference.level != self.mode.peer_level() {
            return Err(Error::InvalidInput(format!(
                "reference `{}` is not at the {} peer level",
                self.reference_id, self.mode
            )));
        }
        Ok(())
    }
}

/// Normalized exponential observation weights `w_{t-d} = e^(30-d)`.
///
/// `d` counts days between the observation and `current_day`. The constant 30
/// cancels under normalization and is kept only for fidelity to the weighting
/// rule; weights are computed shifted by the largest exponent for stability.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub dates: Vec<NaiveDate>,
    pub weights: Vec<f64>,
}

pub fn time_weights(current_day: NaiveDate, dates: &[NaiveDate]) -> Result<WeightVector> {
    if dates.is_empty() {
        return Err(Error::InvalidInput(
            "time weights need at least one date".into(),
        ));
    }
    let mut exponents = Vec::with_capacity(dates.len());
    for date in dates {
        let d = (current_day - *date).num_days();
        if d < 0 {
            return Err(Error::InvalidInput(format!(
                "date {date} lies after the current day {current_day}"
            )));
        }
        exponents.push(30.0 - d as f64);
    }
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = exponents.iter().map(|e| (e - max).exp()).collect();
    let sum: f64 = raw.iter().sum();
    Ok(WeightVector {
        dates: dates.to_vec(),
        weights: raw.into_iter().map(|w| w / sum).collect(),
    })
}

/// Weighted Pearson correlation between two aligned series.
///
/// Errors with `UndefinedCorrelation` when either series is constant.
pub fn weighted_correlation(x: &[f64], y: &[f64], w: &WeightVector) -> Result<f64> {
    let n = w.weights.len();
    if x.len() != n || y.len() != n {
        return Err(Error::Alignment(format!(
            "correlation inputs have lengths {}, {}, {} weights",
            x.len(),
            y.len(),
            n
        )));
    }
    if n < 2 {
        return Err(Error::insufficient("weighted correlation", 2, n));
    }
    if crate::stats::all_equal(x) {
        return Err(Error::UndefinedCorrelation(
            "first series is constant".into(),
        ));
    }
    if crate::stats::all_equal(y) {
        return Err(Error::UndefinedCorrelation(
            "second series is constant".into(),
        ));
    }

    let wsum: f64 = w.weights.iter().sum();
    let mean_x: f64 = x.iter().zip(&w.weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let mean_y: f64 = y.iter().zip(&w.weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for k in 0..n {
        let dx = x[k] - mean_x;
        let dy = y[k] - mean_y;
        cov += w.weights[k] * dx * dy;
        var_x += w.weights[k] * dx * dx;
        var_y += w.weights[k] * dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero weighted variance".into(),
        ));
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Per-capita new-case observations for one unit up to `as_of`, keyed by
/// date. Optionally limited to the trailing `window` days.
fn per_capita_new_cases(
    series: &CompartmentSeries,
    as_of: NaiveDate,
    window: Option<usize>,
) -> BTreeMap<NaiveDate, f64> {
    let population = series.unit().population as f64;
    let earliest = window.map(|w| as_of - chrono::Days::new(w.saturating_sub(1) as u64));
    let (dates, values) = series.new_cases();
    dates
        .into_iter()
        .zip(values)
        .filter(|(d, _)| *d <= as_of)
        .filter(|(d, _)| earliest.map_or(true, |lo| *d >= lo))
        .map(|(d, v)| (d, v / population))
        .collect()
}

/// Correlation of one candidate against the reference over their common
/// dates, or `None` when undefined (constant series, too little overlap).
fn candidate_correlation(
    reference: &BTreeMap<NaiveDate, f64>,
    candidate: &CompartmentSeries,
    as_of: NaiveDate,
    window: Option<usize>,
) -> Option<f64> {
    let cand = per_capita_new_cases(candidate, as_of, window);
    let mut dates = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (date, x) in reference {
        if let Some(y) = cand.get(date) {
            dates.push(*date);
            xs.push(*x);
            ys.push(*y);
        }
    }
    if dates.len() < 2 {
        return None;
    }
    let weights = time_weights(as_of, &dates).ok()?;
    weighted_correlation(&xs, &ys, &weights).ok()
}

/// Select the peers whose time-weighted correlation with the reference is
/// strictly above the median of all defined candidate correlations.
///
/// The reference takes part in the median through its self-correlation and is
/// always included in the result. Candidates with undefined correlation are
/// excluded from both the median and the selection. When fewer than two
/// candidates have a defined correlation the selection degenerates to the
/// reference alone. The result is sorted by unit id, so it does not depend on
/// candidate order.
pub fn select_peers(
    reference: &GeoUnit,
    candidates: &[&GeoUnit],
    dataset: &Dataset,
    as_of: NaiveDate,
    window: Option<usize>,
) -> Vec<GeoUnit> {
    let reference_series = match dataset.series(&reference.unit_id) {
        Ok(s) => s,
        Err(_) => return vec![reference.clone()],
    };
    let reference_cases = per_capita_new_cases(reference_series, as_of, window);

    let correlations: Vec<Option<(String, f64)>> = exec::map_slice(candidates, |candidate| {
        let series = dataset.series(&candidate.unit_id).ok()?;
        let corr = candidate_correlation(&reference_cases, series, as_of, window)?;
        Some((candidate.unit_id.clone(), corr))
    });
    let defined: Vec<(String, f64)> = correlations.into_iter().flatten().collect();

    if defined.len() < 2 {
        return vec![reference.clone()];
    }

    let mut values: Vec<f64> = defined.iter().map(|(_, c)| *c).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("correlations are finite"));
    let median = crate::stats::quantile(&values, 0.5);

    let mut selected: BTreeMap<String, GeoUnit> = BTreeMap::new();
    selected.insert(reference.unit_id.clone(), reference.clone());
    for (unit_id, corr) in &defined {
        if *corr > median {
            if let Ok(unit) = dataset.unit(unit_id) {
                selected.insert(unit_id.clone(), unit.clone());
            }
        }
    }
    selected.into_values().collect()
}

/// Pool the peers' series over their common dates by summing compartments and
/// populations.
pub fn aggregate_training_series(peers: &[GeoUnit], dataset: &Dataset) -> Result<CompartmentSeries> {
    if peers.is_empty() {
        return Err(Error::InvalidInput("peer list must not be empty".into()));
    }
    let series: Vec<&CompartmentSeries> = peers
        .iter()
        .map(|p| dataset.series(&p.unit_id))
        .collect::<Result<_>>()?;

    // Common dates: intersection across all peers.
    let mut common: Vec<NaiveDate> = series[0].dates().to_vec();
    for s in &series[1..] {
        let dates: std::collections::BTreeSet<NaiveDate> = s.dates().iter().copied().collect();
        common.retain(|d| dates.contains(d));
    }
    if common.is_empty() {
        return Err(Error::Alignment(
            "peer series share no common dates".into(),
        ));
    }

    let len = common.len();
    let mut sums = vec![vec![0.0; len]; 5];
    for s in &series {
        for (k, date) in common.iter().enumerate() {
            let idx = s.index_of(*date).expect("date comes from the intersection");
            sums[0][k] += s.susceptible()[idx];
            sums[1][k] += s.infected()[idx];
            sums[2][k] += s.recovered()[idx];
            sums[3][k] += s.deceased()[idx];
            sums[4][k] += s.total_cases()[idx];
        }
    }

    let mut ids: Vec<&str> = peers.iter().map(|p| p.unit_id.as_str()).collect();
    ids.sort_unstable();
    let population: u64 = peers.iter().map(|p| p.population).sum();
    // A pool of provinces acts as a pseudo-region; any other pool is treated
    // as a national-level aggregate. Neither needs a parent.
    let level = if peers.iter().all(|p| p.level == UnitLevel::Province) {
        UnitLevel::Region
    } else {
        UnitLevel::Nation
    };
    let unit = GeoUnit::new(
        format!("agg:{}", ids.join("+")),
        format!("aggregate of {} units", peers.len()),
        level,
        None,
        population,
    )?;

    let mut iter = sums.into_iter();
    CompartmentSeries::new(
        unit,
        common,
        iter.next().unwrap(),
        iter.next().unwrap(),
        iter.next().unwrap(),
        iter.next().unwrap(),
        iter.next().unwrap(),
    )
}
