//! File outputs: forecast CSVs with optional bands, metadata sidecars, the
//! backtest ledger, and the plot-ready report tables.
//!
//! All writers are deterministic: rows come sorted, floats use the shortest
//! round-trip formatting, and undefined values serialize as empty fields.

use std::fs;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::evaluation::{ErrorReport, LedgerRow, SkippedUnit, Variable};
use crate::forecast::ForecastResult;
use crate::series::Anomaly;
use crate::uncertainty::ForecastBands;

fn fmt(value: f64) -> String {
    format!("{value}")
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt).unwrap_or_default()
}

/// Write one forecast as CSV: `unit_id,as_of,horizon,S,I,R,D,beta,gamma_r,
/// gamma_d,r0`, extended with `<name>_lower,<name>_upper` per variable and
/// parameter plus the band level when bands are present.
pub fn write_forecast_csv(
    path: &Path,
    result: &ForecastResult,
    bands: Option<&ForecastBands>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![
        "unit_id", "as_of", "horizon", "S", "I", "R", "D", "beta", "gamma_r", "gamma_d", "r0",
    ];
    if bands.is_some() {
        header.extend([
            "S_lower", "S_upper", "I_lower", "I_upper", "R_lower", "R_upper", "D_lower",
            "D_upper", "beta_lower", "beta_upper", "gamma_r_lower", "gamma_r_upper",
            "gamma_d_lower", "gamma_d_upper", "r0_lower", "r0_upper", "level",
        ]);
    }
    writer.write_record(&header)?;

    for (idx, step) in result.steps.iter().enumerate() {
        let mut record = vec![
            result.unit.unit_id.clone(),
            result.as_of.to_string(),
            (idx + 1).to_string(),
            fmt(step.state.s),
            fmt(step.state.i),
            fmt(step.state.r),
            fmt(step.state.d),
            fmt(step.beta),
            fmt(step.gamma_r),
            fmt(step.gamma_d),
            fmt_opt(step.r0),
        ];
        if let Some(b) = bands {
            record.extend([
                fmt(b.variables.susceptible.lower[idx]),
                fmt(b.variables.susceptible.upper[idx]),
                fmt(b.variables.infected.lower[idx]),
                fmt(b.variables.infected.upper[idx]),
                fmt(b.variables.recovered.lower[idx]),
                fmt(b.variables.recovered.upper[idx]),
                fmt(b.variables.deceased.lower[idx]),
                fmt(b.variables.deceased.upper[idx]),
                fmt(b.beta.lower[idx]),
                fmt(b.beta.upper[idx]),
                fmt(b.gamma_r.lower[idx]),
                fmt(b.gamma_r.upper[idx]),
                fmt(b.gamma_d.lower[idx]),
                fmt(b.gamma_d.upper[idx]),
                fmt(b.r0.lower[idx]),
                fmt_opt(b.r0.upper[idx]),
                fmt(b.beta.level),
            ]);
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the metadata sidecar: chosen lag, per-parameter penalties, peers.
pub fn write_forecast_meta(path: &Path, result: &ForecastResult) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Meta<'a> {
        unit_id: &'a str,
        as_of: String,
        horizon: usize,
        lag: usize,
        penalty_beta: f64,
        penalty_gamma_r: f64,
        penalty_gamma_d: f64,
        peers: &'a [String],
    }
    let meta = Meta {
        unit_id: &result.unit.unit_id,
        as_of: result.as_of.to_string(),
        horizon: result.horizon(),
        lag: result.meta.lag,
        penalty_beta: result.meta.penalty_beta,
        penalty_gamma_r: result.meta.penalty_gamma_r,
        penalty_gamma_d: result.meta.penalty_gamma_d,
        peers: &result.meta.peers,
    };
    fs::write(path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Write the anomaly sidecar: `unit_id,date,kind,detail`.
pub fn write_anomalies_csv(path: &Path, anomalies: &[Anomaly]) -> Result<()> {
    let mut sorted: Vec<&Anomaly> = anomalies.iter().collect();
    sorted.sort_by(|a, b| (&a.unit_id, a.date, a.kind as u8).cmp(&(&b.unit_id, b.date, b.kind as u8)));
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["unit_id", "date", "kind", "detail"])?;
    for a in sorted {
        writer.write_record([
            a.unit_id.as_str(),
            &a.date.to_string(),
            &a.kind.to_string(),
            a.detail.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write one normalized series CSV: `date,S,I,R,D,total_cases`.
pub fn write_series_csv(path: &Path, series: &crate::series::CompartmentSeries) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["date", "S", "I", "R", "D", "total_cases"])?;
    for idx in 0..series.len() {
        writer.write_record([
            series.dates()[idx].to_string(),
            fmt(series.susceptible()[idx]),
            fmt(series.infected()[idx]),
            fmt(series.recovered()[idx]),
            fmt(series.deceased()[idx]),
            fmt(series.total_cases()[idx]),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the units that were excluded from modeling: `unit_id,reason`.
pub fn write_unusable_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["unit_id", "reason"])?;
    for (unit_id, reason) in dataset.unusable() {
        writer.write_record([unit_id.as_str(), reason.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the raw prediction ledger: `province,as_of,horizon,variable,
/// predicted,actual`.
pub fn write_ledger_csv(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["province", "as_of", "horizon", "variable", "predicted", "actual"])?;
    for row in rows {
        writer.write_record([
            row.province.as_str(),
            &row.as_of.to_string(),
            &row.horizon.to_string(),
            row.variable.label(),
            &fmt(row.predicted),
            &fmt(row.actual),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the skip list: `province,as_of,reason`.
pub fn write_skipped_csv(path: &Path, skipped: &[SkippedUnit]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["province", "as_of", "reason"])?;
    for s in skipped {
        writer.write_record([s.unit_id.as_str(), &s.as_of.to_string(), s.reason.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the MAPE-by-horizon table: one row per horizon, one column per
/// variable. Undefined cells are empty.
pub fn write_mape_by_horizon_csv(path: &Path, report: &ErrorReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["horizon".to_string()];
    header.extend(report.variables.iter().map(|v| format!("MAPE_{v}")));
    writer.write_record(&header)?;
    for h in 1..=report.max_horizon_evaluated {
        let mut record = vec![h.to_string()];
        for &variable in &report.variables {
            record.push(fmt_opt(report.mape_by_horizon.get(&(h, variable)).copied()));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the MPE distribution table with fully labeled columns:
/// `horizon,variable,mean,sd,skewness,kurtosis`.
pub fn write_mpe_distribution_csv(path: &Path, report: &ErrorReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["horizon", "variable", "mean", "sd", "skewness", "kurtosis"])?;
    for h in 1..=report.max_horizon_evaluated {
        for &variable in &report.variables {
            if let Some(stats) = report.mpe_stats.get(&(h, variable)) {
                writer.write_record([
                    h.to_string(),
                    variable.to_string(),
                    fmt(stats.mean),
                    fmt(stats.sd),
                    fmt(stats.skewness),
                    fmt(stats.kurtosis),
                ])?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Write the weekly cluster report as JSON.
pub fn write_clusters_json(path: &Path, report: &ErrorReport) -> Result<()> {
    let body = match &report.clusters {
        Some(clusters) => serde_json::to_string_pretty(clusters)?,
        None => "null".to_string(),
    };
    fs::write(path, body + "\n")?;
    Ok(())
}

/// Write the maximum usable horizon as a single-line text file.
pub fn write_max_horizon_txt(path: &Path, report: &ErrorReport) -> Result<()> {
    fs::write(path, format!("{}\n", report.max_horizon_days))?;
    Ok(())
}

/// Shorthand for `Variable::ALL` filtered to the report's variables, used by
/// callers assembling table layouts.
pub fn ordered_variables(report: &ErrorReport) -> Vec<Variable> {
    report.variables.clone()
}
