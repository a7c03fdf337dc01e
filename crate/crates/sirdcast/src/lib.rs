//! Time-dependent SIRD epidemic forecasting at sub-regional granularity.
//!
//! The pipeline extracts daily transmission, recovery, and mortality rates
//! from observed compartment series by inverting the discrete difference
//! equations, forecasts each rate with a ridge-regularized lag regression
//! trained on correlation-selected peer aggregates, rolls the compartments
//! forward under the predicted rates, and scores everything in a
//! rolling-origin backtest with forward-bootstrap prediction intervals.
//!
//! Heavy loops (peer correlations, bootstrap replications, backtest cells)
//! run data-parallel on rayon by default; building with
//! `--no-default-features` swaps in a sequential fallback with identical
//! results.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod forecast;
pub mod geo;
pub mod ingest;
pub mod regression;
pub mod report;
pub mod series;
pub mod sird;
pub mod stats;
pub mod synthetic;
pub mod training;
pub mod uncertainty;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use evaluation::{
    build_error_report, cluster_provinces, distribution_stats, mape, mape_by_province,
    max_horizon, mpe_by_province, run_backtest, BacktestRun, BacktestSpec, ErrorReport,
    LedgerRow, Variable,
};
pub use exec::configure_workers;
pub use forecast::{
    forecast_province, forecast_unit, train, ForecastConfig, ForecastResult, TrainedModels,
};
pub use geo::{GeoUnit, UnitLevel};
pub use ingest::{assemble, estimate_recovered, parse_csv, CsvSchema, RawTables, RepairPolicy};
pub use regression::{fit, predict_path, select_lag, select_penalty, LagRegressionModel, SearchSpace};
pub use series::{
    validate_series, Anomaly, AnomalyKind, CompartmentSeries, ParameterSeries, SirdState,
    CONSERVATION_REL_TOL,
};
pub use sird::{extract_parameters, r0, step, ParamKind};
pub use synthetic::generate_synthetic;
pub use training::{
    aggregate_training_series, select_peers, time_weights, weighted_correlation, AggregationMode,
    AggregationSpec, WeightVector,
};
pub use uncertainty::{
    bootstrap_parameter_band, forecast_bands, r0_band, variable_bands, BootstrapSettings,
    ForecastBands, IntervalBand, R0Band, VariableBands,
};
