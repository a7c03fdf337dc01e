//! The four subcommands: ingest, forecast, bootstrap, backtest.

use std::path::Path;

use chrono::NaiveDate;

use sirdcast::evaluation::BacktestSpec;
use sirdcast::forecast::ForecastConfig;
use sirdcast::ingest::{assemble, parse_csv, CsvSchema, RawTables};
use sirdcast::report;
use sirdcast::training::AggregationSpec;
use sirdcast::uncertainty::BootstrapSettings;
use sirdcast::{Dataset, Error, Result};

use crate::config::RunConfig;
use crate::stage::with_staging;

/// Parse the three inputs and assemble the dataset in memory.
pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let raw = RawTables {
        province_cases: parse_csv(&config.inputs.province_cases, CsvSchema::ProvinceCases)?,
        region_full: parse_csv(&config.inputs.region_full, CsvSchema::RegionFull)?,
        province_deaths: parse_csv(&config.inputs.province_deaths, CsvSchema::ProvinceDeaths)?,
    };
    assemble(&raw, config.repair.policy.into())
}

/// Write normalized per-unit series plus the anomaly and unusable sidecars.
pub fn cmd_ingest(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let dataset = load_dataset(config)?;
    with_staging(out_dir, |stage| {
        let series_dir = stage.join("series");
        std::fs::create_dir_all(&series_dir)?;
        for series in dataset.all_series() {
            let path = series_dir.join(format!("{}.csv", series.unit().unit_id));
            report::write_series_csv(&path, series)?;
        }
        report::write_anomalies_csv(&stage.join("anomalies.csv"), dataset.anomalies())?;
        report::write_unusable_csv(&stage.join("unusable.csv"), &dataset)?;
        Ok(())
    })?;
    println!(
        "ingested {} series ({} anomalies, {} unusable units) -> {}",
        dataset.all_series().count(),
        dataset.anomalies().len(),
        dataset.unusable().len(),
        out_dir.display()
    );
    Ok(())
}

fn bootstrap_settings(config: &RunConfig, seed_override: Option<u64>) -> Result<BootstrapSettings> {
    let seed = seed_override.or(config.bootstrap.seed).ok_or_else(|| {
        Error::InvalidInput("bootstrap requires a seed (config key bootstrap.seed or --seed)".into())
    })?;
    Ok(BootstrapSettings {
        replications: config.bootstrap.replications,
        alpha: config.bootstrap.alpha,
        seed,
    })
}

/// Forecast one unit from one origin date; bands included when requested.
pub fn cmd_forecast(
    config: &RunConfig,
    out_dir: &Path,
    unit_id: &str,
    as_of: NaiveDate,
    horizon_override: Option<usize>,
    seed_override: Option<u64>,
    force_bands: bool,
) -> Result<()> {
    let dataset = load_dataset(config)?;
    let horizon = horizon_override.unwrap_or(config.forecast.horizon);
    let unit = dataset.unit(unit_id)?.clone();
    let forecast_config = ForecastConfig {
        horizon,
        horizon_cap: config.forecast.horizon_cap,
        search: config.search_space(),
        aggregation: AggregationSpec::for_unit(
            &dataset,
            &unit,
            config.forecast.mode.into(),
            as_of,
            config.forecast.window,
        )?,
    };
    let (result, models) = sirdcast::forecast_province(&dataset, unit_id, &forecast_config)?;

    let bands = if config.bootstrap.enabled || force_bands {
        let settings = bootstrap_settings(config, seed_override)?;
        let visible = dataset.truncated(as_of);
        let local = visible.series(unit_id)?;
        Some(sirdcast::forecast_bands(
            local,
            &models,
            &result,
            config.bootstrap.focus.into(),
            &settings,
        )?)
    } else {
        None
    };

    with_staging(out_dir, |stage| {
        let base = format!("forecast_{unit_id}_{as_of}");
        report::write_forecast_csv(&stage.join(format!("{base}.csv")), &result, bands.as_ref())?;
        report::write_forecast_meta(&stage.join(format!("{base}.meta.json")), &result)?;
        Ok(())
    })?;
    println!(
        "forecast {unit_id} from {as_of} over {horizon} days (lag {}, peers {}) -> {}",
        result.meta.lag,
        result.meta.peers.len(),
        out_dir.display()
    );
    Ok(())
}

/// Run the rolling-origin backtest for every configured training mode.
pub fn cmd_backtest(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let backtest = config
        .backtest
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("config has no [backtest] section".into()))?;
    let variables = backtest.parsed_variables()?;
    let dataset = load_dataset(config)?;
    let search = config.search_space();

    let mut summaries = Vec::new();
    with_staging(out_dir, |stage| {
        for mode_name in &backtest.modes {
            let spec = BacktestSpec {
                start: backtest.start,
                end: backtest.end,
                max_horizon: backtest.max_horizon,
                mode: (*mode_name).into(),
                variables: variables.clone(),
            };
            let run = sirdcast::run_backtest(&dataset, &spec, &search, config.forecast.window)?;
            let report_data =
                sirdcast::build_error_report(&run.rows, spec.max_horizon, &variables);

            let mode_dir = stage.join(spec.mode.label());
            std::fs::create_dir_all(&mode_dir)?;
            report::write_ledger_csv(&mode_dir.join("ledger.csv"), &run.rows)?;
            report::write_skipped_csv(&mode_dir.join("skipped.csv"), &run.skipped)?;
            report::write_mape_by_horizon_csv(
                &mode_dir.join("mape_by_horizon.csv"),
                &report_data,
            )?;
            report::write_mpe_distribution_csv(
                &mode_dir.join("mpe_distribution.csv"),
                &report_data,
            )?;
            report::write_clusters_json(&mode_dir.join("clusters.json"), &report_data)?;
            report::write_max_horizon_txt(&mode_dir.join("max_horizon.txt"), &report_data)?;
            summaries.push(format!(
                "{} training: max usable horizon {} days ({} ledger rows, {} skips)",
                spec.mode,
                report_data.max_horizon_days,
                run.rows.len(),
                run.skipped.len()
            ));
        }
        Ok(())
    })?;
    for line in summaries {
        println!("{line}");
    }
    Ok(())
}
