//! Rolling-origin backtesting: re-train and forecast every province for every
//! day of an evaluation window, then reduce the prediction ledger to MAPE and
//! MPE tables, error-distribution statistics, province clusters, and the
//! maximum usable horizon.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::forecast::{forecast_unit, train_for_reference, TrainedForReference};
use crate::geo::UnitLevel;
use crate::regression::SearchSpace;
use crate::stats;
use crate::training::{AggregationMode, AggregationSpec};

/// Observable the ledger scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Infected,
    Recovered,
    Deceased,
    Total,
}

impl Variable {
    pub const ALL: [Variable; 4] = [
        Variable::Infected,
        Variable::Recovered,
        Variable::Deceased,
        Variable::Total,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Variable::Infected => "I",
            Variable::Recovered => "R",
            Variable::Deceased => "D",
            Variable::Total => "T",
        }
    }
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(Variable::Infected),
            "R" => Ok(Variable::Recovered),
            "D" => Ok(Variable::Deceased),
            "T" => Ok(Variable::Total),
            other => Err(Error::InvalidInput(format!("unknown variable `{other}`"))),
        }
    }
}

/// Backtest window, horizons, training mode, and scored variables.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestSpec {
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Forecast horizons `1..=max_horizon` are all evaluated.
    pub max_horizon: usize,
    pub mode: AggregationMode,
    pub variables: Vec<Variable>,
}

impl BacktestSpec {
    pub fn validate(&self) -> Result<()> {
        if self.end < self.start {
            return Err(Error::InvalidInput(format!(
                "backtest window ends ({}) before it starts ({})",
                self.end, self.start
            )));
        }
        if self.max_horizon < 1 {
            return Err(Error::InvalidInput("max_horizon must be at least 1".into()));
        }
        if self.variables.is_empty() {
            return Err(Error::InvalidInput(
                "at least one variable must be evaluated".into(),
            ));
        }
        Ok(())
    }
}

/// One prediction/actual pair in the ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub province: String,
    pub as_of: NaiveDate,
    pub horizon: usize,
    pub variable: Variable,
    pub predicted: f64,
    pub actual: f64,
}

/// A province left out of the ledger on one origin day, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedUnit {
    pub unit_id: String,
    pub as_of: NaiveDate,
    pub reason: String,
}

/// Raw backtest output: the ledger plus the skip list.
#[derive(Debug, Clone, Default)]
pub struct BacktestRun {
    pub rows: Vec<LedgerRow>,
    pub skipped: Vec<SkippedUnit>,
}

enum CellOutcome {
    Rows(Vec<LedgerRow>),
    Skip(String),
    Fail(Error),
}

/// Run the rolling-origin backtest.
///
/// For every day of the window the models are re-trained from scratch on
/// data visible at that day (hyperparameters free to change across days and
/// provinces) and every province is forecast over `1..=max_horizon`.
/// Provinces without enough usable data are listed as skipped, not failed.
/// Provinces sharing a training reference share the trained models within a
/// day; cells are independent jobs and the ledger order does not depend on
/// scheduling.
pub fn run_backtest(
    dataset: &Dataset,
    spec: &BacktestSpec,
    search: &SearchSpace,
    window: Option<usize>,
) -> Result<BacktestRun> {
    spec.validate()?;
    search.validate()?;

    let provinces = dataset.modeled_units(UnitLevel::Province);
    let province_ids: Vec<String> = provinces.iter().map(|p| p.unit_id.clone()).collect();

    let mut as_of_days = Vec::new();
    let mut day = spec.start;
    while day <= spec.end {
        as_of_days.push(day);
        day = day + Days::new(1);
    }

    let per_day: Vec<Result<(Vec<LedgerRow>, Vec<SkippedUnit>)>> =
        exec::map_slice(&as_of_days, |&as_of| {
            backtest_day(dataset, spec, search, window, &province_ids, as_of)
        });

    let mut run = BacktestRun::default();
    for day_result in per_day {
        let (rows, skipped) = day_result?;
        run.rows.extend(rows);
        run.skipped.extend(skipped);
    }
    Ok(run)
}

fn backtest_day(
    dataset: &Dataset,
    spec: &BacktestSpec,
    search: &SearchSpace,
    window: Option<usize>,
    province_ids: &[String],
    as_of: NaiveDate,
) -> Result<(Vec<LedgerRow>, Vec<SkippedUnit>)> {
    let visible = dataset.truncated(as_of);

    // Provinces sharing a reference unit share one training run.
    let mut reference_of: BTreeMap<&str, String> = BTreeMap::new();
    for id in province_ids {
        let unit = dataset.unit(id)?;
        let reference = match spec.mode {
            AggregationMode::Regional => dataset.parent_region(unit)?.unit_id.clone(),
            AggregationMode::Provincial => unit.unit_id.clone(),
        };
        reference_of.insert(id.as_str(), reference);
    }
    let mut references: Vec<String> = reference_of.values().cloned().collect();
    references.sort_unstable();
    references.dedup();

    let trained: Vec<Result<TrainedForReference>> = exec::map_slice(&references, |reference_id| {
        let agg = AggregationSpec {
            mode: spec.mode,
            reference_id: reference_id.clone(),
            as_of,
            window,
        };
        train_for_reference(&visible, &agg, search)
    });
    let trained: BTreeMap<&str, &Result<TrainedForReference>> = references
        .iter()
        .map(|r| r.as_str())
        .zip(trained.iter())
        .collect();

    let outcomes: Vec<CellOutcome> = exec::map_slice(province_ids, |id| {
        let reference = reference_of[id.as_str()].as_str();
        let models = match trained[reference] {
            Ok(t) => &t.models,
            Err(e) => {
                return match e {
                    Error::InsufficientData { .. } => CellOutcome::Skip(format!(
                        "training on reference `{reference}` had insufficient data: {e}"
                    )),
                    other => CellOutcome::Fail(Error::InvalidInput(other.to_string())),
                }
            }
        };
        province_cell(dataset, &visible, spec, id, as_of, models)
    });

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (id, outcome) in province_ids.iter().zip(outcomes) {
        match outcome {
            CellOutcome::Rows(r) => rows.extend(r),
            CellOutcome::Skip(reason) => skipped.push(SkippedUnit {
                unit_id: id.clone(),
                as_of,
                reason,
            }),
            CellOutcome::Fail(e) => return Err(e),
        }
    }
    Ok((rows, skipped))
}

fn province_cell(
    dataset: &Dataset,
    visible: &Dataset,
    spec: &BacktestSpec,
    province: &str,
    as_of: NaiveDate,
    models: &crate::forecast::TrainedModels,
) -> CellOutcome {
    let local = match visible.series(province) {
        Ok(s) => s,
        Err(_) => return CellOutcome::Skip("no data visible at this origin".into()),
    };
    let result = match forecast_unit(local, models, spec.max_horizon) {
        Ok(r) => r,
        Err(e @ Error::InsufficientData { .. }) => return CellOutcome::Skip(e.to_string()),
        Err(e) => return CellOutcome::Fail(e),
    };

    let full = match dataset.series(province) {
        Ok(s) => s,
        Err(e) => return CellOutcome::Fail(e),
    };
    let mut rows = Vec::with_capacity(spec.max_horizon * spec.variables.len());
    for (h, step) in result.steps.iter().enumerate() {
        let target_date = as_of + Days::new(h as u64 + 1);
        let idx = match full.index_of(target_date) {
            Some(i) => i,
            None => {
                return CellOutcome::Fail(Error::InvalidInput(format!(
                    "dataset does not cover {target_date} for `{province}`"
                )))
            }
        };
        for &variable in &spec.variables {
            let predicted = match variable {
                Variable::Infected => step.state.i,
                Variable::Recovered => step.state.r,
                Variable::Deceased => step.state.d,
                Variable::Total => step.state.i + step.state.r + step.state.d,
            };
            let actual = match variable {
                Variable::Infected => full.infected()[idx],
                Variable::Recovered => full.recovered()[idx],
                Variable::Deceased => full.deceased()[idx],
                Variable::Total => full.total_cases()[idx],
            };
            rows.push(LedgerRow {
                province: province.to_string(),
                as_of,
                horizon: h + 1,
                variable,
                predicted,
                actual,
            });
        }
    }
    CellOutcome::Rows(rows)
}

/// A metric value together with the rows that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub rows_used: usize,
    /// Rows dropped because the actual value was zero.
    pub rows_excluded: usize,
}

/// Signed per-row percentage errors `100 (Y - Yhat) / Y` for the matching
/// rows; rows with `Y = 0` are excluded and counted.
fn percentage_errors(
    rows: &[LedgerRow],
    horizon: usize,
    variable: Variable,
    province: Option<&str>,
) -> (Vec<f64>, usize) {
    let mut values = Vec::new();
    let mut excluded = 0usize;
    for row in rows {
        if row.horizon != horizon || row.variable != variable {
            continue;
        }
        if let Some(p) = province {
            if row.province != p {
                continue;
            }
        }
        if row.actual == 0.0 {
            excluded += 1;
            continue;
        }
        values.push(100.0 * ((row.actual - row.predicted) / row.actual));
    }
    (values, excluded)
}

/// Mean absolute percentage error over all (province, day) pairs at one
/// horizon. Computed as the unweighted mean of per-row absolute percentage
/// errors, which equals the double-sum normalization `100/(PD)`.
pub fn mape(rows: &[LedgerRow], horizon: usize, variable: Variable) -> Result<MetricValue> {
    let (values, excluded) = percentage_errors(rows, horizon, variable, None);
    if values.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no eligible rows for MAPE at horizon {horizon} on {variable}"
        )));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    Ok(MetricValue {
        value: stats::mean(&abs),
        rows_used: abs.len(),
        rows_excluded: excluded,
    })
}

/// Signed mean percentage error for one province at one horizon, averaged
/// over the origin days. Positive when actuals exceed predictions.
pub fn mpe_by_province(
    rows: &[LedgerRow],
    horizon: usize,
    province: &str,
    variable: Variable,
) -> Result<MetricValue> {
    let (values, excluded) = percentage_errors(rows, horizon, variable, Some(province));
    if values.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no eligible rows for MPE of `{province}` at horizon {horizon}"
        )));
    }
    Ok(MetricValue {
        value: stats::mean(&values),
        rows_used: values.len(),
        rows_excluded: excluded,
    })
}

/// Per-province mean absolute percentage error at one horizon.
pub fn mape_by_province(
    rows: &[LedgerRow],
    horizon: usize,
    province: &str,
    variable: Variable,
) -> Result<MetricValue> {
    let (values, excluded) = percentage_errors(rows, horizon, variable, Some(province));
    if values.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no eligible rows for province MAPE of `{province}` at horizon {horizon}"
        )));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    Ok(MetricValue {
        value: stats::mean(&abs),
        rows_used: abs.len(),
        rows_excluded: excluded,
    })
}

/// Moment statistics of an error sample: mean, sample standard deviation,
/// moment skewness `m3 / m2^(3/2)`, and non-excess kurtosis `m4 / m2^2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DistributionStats {
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn distribution_stats(values: &[f64]) -> Result<DistributionStats> {
    if values.len() < 3 {
        return Err(Error::insufficient(
            "distribution statistics",
            3,
            values.len(),
        ));
    }
    if stats::all_equal(values) {
        return Err(Error::InsufficientVariation(
            "all sample values are equal".into(),
        ));
    }
    let m2 = stats::central_moment(values, 2);
    let m3 = stats::central_moment(values, 3);
    let m4 = stats::central_moment(values, 4);
    Ok(DistributionStats {
        mean: stats::mean(values),
        sd: stats::sample_sd(values),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Summary of one error cluster, mirroring the per-cluster reporting of the
/// weekly analysis: membership plus moment statistics where defined.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClusterSummary {
    pub provinces: Vec<String>,
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

impl ClusterSummary {
    fn from_members(mut members: Vec<(String, f64)>) -> Self {
        members.sort_by(|a, b| a.0.cmp(&b.0));
        let values: Vec<f64> = members.iter().map(|(_, v)| *v).collect();
        let stats = distribution_stats(&values).ok();
        ClusterSummary {
            count: members.len(),
            mean: if values.is_empty() {
                None
            } else {
                Some(stats::mean(&values))
            },
            sd: if values.len() >= 2 {
                Some(stats::sample_sd(&values))
            } else {
                None
            },
            skewness: stats.as_ref().map(|s| s.skewness),
            kurtosis: stats.as_ref().map(|s| s.kurtosis),
            provinces: members.into_iter().map(|(p, _)| p).collect(),
        }
    }
}

/// Provinces partitioned by weekly infected-error bands.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProvinceClusters {
    /// MAPE <= 10%.
    pub within_10: ClusterSummary,
    /// 10% < MAPE <= 20%.
    pub within_20: ClusterSummary,
    /// MAPE > 20%.
    pub above_20: ClusterSummary,
}

/// Partition provinces by their weekly MAPE on the infected variable using
/// the closed thresholds 10% and 20%.
pub fn cluster_provinces(weekly_mape: &[(String, f64)]) -> ProvinceClusters {
    let mut low = Vec::new();
    let mut mid = Vec::new();
    let mut high = Vec::new();
    for (province, value) in weekly_mape {
        let member = (province.clone(), *value);
        if *value <= 10.0 {
            low.push(member);
        } else if *value <= 20.0 {
            mid.push(member);
        } else {
            high.push(member);
        }
    }
    ProvinceClusters {
        within_10: ClusterSummary::from_members(low),
        within_20: ClusterSummary::from_members(mid),
        above_20: ClusterSummary::from_members(high),
    }
}

/// The largest horizon whose per-province MAPE third quartile stays within
/// `bound` percent at every horizon up to it. Zero when even one-day
/// forecasts exceed the bound.
pub fn max_horizon(rows: &[LedgerRow], variable: Variable, bound: f64) -> usize {
    let last = rows.iter().map(|r| r.horizon).max().unwrap_or(0);
    let provinces: std::collections::BTreeSet<&str> =
        rows.iter().map(|r| r.province.as_str()).collect();

    let mut best = 0;
    for h in 1..=last {
        let mut values: Vec<f64> = provinces
            .iter()
            .filter_map(|p| mape_by_province(rows, h, p, variable).ok())
            .map(|m| m.value)
            .collect();
        if values.is_empty() {
            break;
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("MAPE values are finite"));
        if stats::quantile(&values, 0.75) <= bound {
            best = h;
        } else {
            break;
        }
    }
    best
}

/// Assembled error report: the plot-ready reduction of one ledger.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub max_horizon_evaluated: usize,
    pub variables: Vec<Variable>,
    /// MAPE per (horizon, variable); missing entries were undefined.
    pub mape_by_horizon: BTreeMap<(usize, Variable), f64>,
    /// Distribution of per-province MPE per (horizon, variable).
    pub mpe_stats: BTreeMap<(usize, Variable), DistributionStats>,
    /// Weekly clusters on infected, when horizon 7 was evaluated.
    pub clusters: Option<ProvinceClusters>,
    /// Maximum usable horizon on infected at the 20% third-quartile bound.
    pub max_horizon_days: usize,
}

/// Third-quartile bound, in percent, for the maximum-horizon rule.
pub const MAX_HORIZON_BOUND_PCT: f64 = 20.0;

/// Weekly horizon used for province clustering.
pub const CLUSTER_HORIZON: usize = 7;

/// Reduce a ledger to the full error report.
pub fn build_error_report(
    rows: &[LedgerRow],
    max_horizon_evaluated: usize,
    variables: &[Variable],
) -> ErrorReport {
    let provinces: std::collections::BTreeSet<&str> =
        rows.iter().map(|r| r.province.as_str()).collect();

    let mut mape_by_horizon = BTreeMap::new();
    let mut mpe_stats = BTreeMap::new();
    for h in 1..=max_horizon_evaluated {
        for &variable in variables {
            if let Ok(m) = mape(rows, h, variable) {
                mape_by_horizon.insert((h, variable), m.value);
            }
            let mpes: Vec<f64> = provinces
                .iter()
                .filter_map(|p| mpe_by_province(rows, h, p, variable).ok())
                .map(|m| m.value)
                .collect();
            if let Ok(stats) = distribution_stats(&mpes) {
                mpe_stats.insert((h, variable), stats);
            }
        }
    }

    let clusters = if max_horizon_evaluated >= CLUSTER_HORIZON
        && variables.contains(&Variable::Infected)
    {
        let weekly: Vec<(String, f64)> = provinces
            .iter()
            .filter_map(|p| {
                mape_by_province(rows, CLUSTER_HORIZON, p, Variable::Infected)
                    .ok()
                    .map(|m| (p.to_string(), m.value))
            })
            .collect();
        if weekly.is_empty() {
            None
        } else {
            Some(cluster_provinces(&weekly))
        }
    } else {
        None
    };

    ErrorReport {
        max_horizon_evaluated,
        variables: variables.to_vec(),
        mape_by_horizon,
        mpe_stats,
        clusters,
        max_horizon_days: max_horizon(rows, Variable::Infected, MAX_HORIZON_BOUND_PCT),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn row(province: &str, day: u64, horizon: usize, v: Variable, predicted: f64, actual: f64) -> LedgerRow {
        LedgerRow {
            province: province.to_string(),
            as_of: date("2020-04-08") + Days::new(day),
            horizon,
            variable: v,
            predicted,
            actual,
        }
    }

    #[test]
    fn mape_of_perfect_predictions_is_zero() {
        let rows = vec![
            row("p1", 0, 1, Variable::Infected, 50.0, 50.0),
            row("p2", 0, 1, Variable::Infected, 80.0, 80.0),
        ];
        assert_eq!(mape(&rows, 1, Variable::Infected).unwrap().value, 0.0);
        assert_eq!(
            mpe_by_province(&rows, 1, "p1", Variable::Infected).unwrap().value,
            0.0
        );
    }

    #[test]
    fn mape_single_row() {
        let rows = vec![row("p1", 0, 1, Variable::Infected, 90.0, 100.0)];
        assert_relative_eq!(
            mape(&rows, 1, Variable::Infected).unwrap().value,
            10.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mape_averages_the_two_row_example() {
        // (100/2)(0.10 + 0.10) = 10.0
        let rows = vec![
            row("p1", 0, 1, Variable::Infected, 110.0, 100.0),
            row("p1", 1, 1, Variable::Infected, 45.0, 50.0),
        ];
        assert_relative_eq!(
            mape(&rows, 1, Variable::Infected).unwrap().value,
            10.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mape_excludes_zero_actuals_and_counts_them() {
        let rows = vec![
            row("p1", 0, 1, Variable::Infected, 90.0, 100.0),
            row("p1", 1, 1, Variable::Infected, 5.0, 0.0),
        ];
        let m = mape(&rows, 1, Variable::Infected).unwrap();
        assert_eq!(m.rows_used, 1);
        assert_eq!(m.rows_excluded, 1);
        assert_relative_eq!(m.value, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn mape_with_no_rows_is_undefined() {
        let rows = vec![row("p1", 0, 1, Variable::Infected, 5.0, 0.0)];
        assert!(matches!(
            mape(&rows, 1, Variable::Infected),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn mpe_sign_convention_under_prediction_is_positive() {
        // Predictions at 90% of actuals every day: MPE = +10 exactly.
        let rows: Vec<LedgerRow> = (0..5)
            .map(|d| {
                let actual = 100.0 * f64::from(1 << d); // 100, 200, 400, ...
                row("p1", d as u64, 1, Variable::Infected, 0.9 * actual, actual)
            })
            .collect();
        let m = mpe_by_province(&rows, 1, "p1", Variable::Infected).unwrap();
        assert_eq!(m.value, 10.0);
    }

    #[test]
    fn mpe_mixed_errors_cancel() {
        let rows = vec![
            row("p1", 0, 1, Variable::Infected, 110.0, 100.0),
            row("p1", 1, 1, Variable::Infected, 90.0, 100.0),
        ];
        let m = mpe_by_province(&rows, 1, "p1", Variable::Infected).unwrap();
        assert_relative_eq!(m.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn scaled_predictions_give_exact_mpe_for_representable_scales() {
        // Yhat = 0.5 Y is exact in binary: MPE must equal 50 exactly.
        let rows: Vec<LedgerRow> = (0..5)
            .map(|d| {
                let actual = 3.0 + 7.0 * d as f64;
                row("p1", d as u64, 1, Variable::Infected, 0.5 * actual, actual)
            })
            .collect();
        assert_eq!(
            mpe_by_province(&rows, 1, "p1", Variable::Infected).unwrap().value,
            50.0
        );
    }

    #[test]
    fn distribution_stats_symmetric_sample() {
        let stats = distribution_stats(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(stats.mean, 0.0);
        assert_eq!(stats.skewness, 0.0);
        assert_relative_eq!(stats.sd, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn distribution_stats_reject_degenerate_samples() {
        assert!(matches!(
            distribution_stats(&[1.0, 1.0, 1.0]),
            Err(Error::InsufficientVariation(_))
        ));
        assert!(matches!(
            distribution_stats(&[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn distribution_stats_match_direct_moment_sums() {
        let xs = [2.5, -1.0, 0.5, 4.0, -3.5, 1.5, 2.0, -0.5];
        let n = xs.len() as f64;
        let mean: f64 = xs.iter().sum::<f64>() / n;
        let m2: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3: f64 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let m4: f64 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();

        let stats = distribution_stats(&xs).unwrap();
        assert_relative_eq!(stats.mean, mean, epsilon = 1e-12);
        assert_relative_eq!(stats.sd, sd, epsilon = 1e-12);
        assert_relative_eq!(stats.skewness, m3 / m2.powf(1.5), epsilon = 1e-12);
        assert_relative_eq!(stats.kurtosis, m4 / (m2 * m2), epsilon = 1e-12);
    }

    #[test]
    fn clusters_partition_on_closed_thresholds() {
        let values: Vec<(String, f64)> = [5.0, 10.0, 15.0, 20.0, 25.0]
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("p{i}"), *v))
            .collect();
        let clusters = cluster_provinces(&values);
        assert_eq!(clusters.within_10.provinces, vec!["p0", "p1"]);
        assert_eq!(clusters.within_20.provinces, vec!["p2", "p3"]);
        assert_eq!(clusters.above_20.provinces, vec!["p4"]);
        let total = clusters.within_10.count + clusters.within_20.count + clusters.above_20.count;
        assert_eq!(total, 5);
    }

    #[test]
    fn clusters_with_all_low_errors_leave_upper_bands_empty() {
        let values: Vec<(String, f64)> = (0..4).map(|i| (format!("p{i}"), 4.0 + i as f64)).collect();
        let clusters = cluster_provinces(&values);
        assert_eq!(clusters.within_10.count, 4);
        assert_eq!(clusters.within_20.count, 0);
        assert_eq!(clusters.above_20.count, 0);
        assert!(clusters.within_20.mean.is_none());
    }

    #[test]
    fn clusters_of_empty_input_are_empty() {
        let clusters = cluster_provinces(&[]);
        assert_eq!(clusters.within_10.count, 0);
        assert_eq!(clusters.within_20.count, 0);
        assert_eq!(clusters.above_20.count, 0);
    }

    /// Ledger where province `p` at horizon `h` has MAPE exactly `value`.
    fn ledger_with_quartiles(per_horizon: &[Vec<f64>]) -> Vec<LedgerRow> {
        let mut rows = Vec::new();
        for (h_idx, values) in per_horizon.iter().enumerate() {
            for (p_idx, v) in values.iter().enumerate() {
                rows.push(row(
                    &format!("p{p_idx}"),
                    0,
                    h_idx + 1,
                    Variable::Infected,
                    100.0 - v,
                    100.0,
                ));
            }
        }
        rows
    }

    #[test]
    fn max_horizon_stops_at_the_first_failing_quartile() {
        // Four provinces per horizon; the Q3 equals the value pattern
        // {5, 8, 15, 25}: horizons 1..3 pass the 20% bound, 4 fails.
        let rows = ledger_with_quartiles(&[
            vec![5.0, 5.0, 5.0, 5.0],
            vec![8.0, 8.0, 8.0, 8.0],
            vec![15.0, 15.0, 15.0, 15.0],
            vec![25.0, 25.0, 25.0, 25.0],
            vec![30.0, 30.0, 30.0, 30.0],
        ]);
        assert_eq!(max_horizon(&rows, Variable::Infected, 20.0), 3);
    }

    #[test]
    fn max_horizon_is_zero_when_day_one_fails() {
        let rows = ledger_with_quartiles(&[vec![25.0, 30.0, 40.0, 50.0]]);
        assert_eq!(max_horizon(&rows, Variable::Infected, 20.0), 0);
    }

    #[test]
    fn max_horizon_uses_interpolated_quartiles() {
        // Values {10, 12, 18, 40}: Q3 = 18 + 0.25*(40-18) = 23.5 > 20 at h=1.
        let rows = ledger_with_quartiles(&[vec![10.0, 12.0, 18.0, 40.0]]);
        assert_eq!(max_horizon(&rows, Variable::Infected, 20.0), 0);
        // Values {10, 12, 18, 20}: Q3 = 18.5 <= 20.
        let rows = ledger_with_quartiles(&[vec![10.0, 12.0, 18.0, 20.0]]);
        assert_eq!(max_horizon(&rows, Variable::Infected, 20.0), 1);
    }
}
