//! Ingestion of canonical CSV snapshots: parse the three input schemas,
//! estimate provincial recovered counts from the regional recovery rate, and
//! assemble validated compartment series.
//!
//! Provincial case counts and regional totals come from separate files;
//! province-level deaths are a third file because no official channel
//! publishes them. Provinces with no death rows are marked unusable rather
//! than imputed.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Days, NaiveDate};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geo::{GeoUnit, UnitLevel};
use crate::series::{Anomaly, AnomalyKind, CompartmentSeries};

/// The three snapshot layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvSchema {
    /// `date,unit_id,region_id,population,total_cases`
    ProvinceCases,
    /// `date,unit_id,population,total_cases,recovered,deaths`
    RegionFull,
    /// `date,unit_id,deaths`
    ProvinceDeaths,
}

impl CsvSchema {
    pub fn label(&self) -> &'static str {
        match self {
            CsvSchema::ProvinceCases => "province_cases",
            CsvSchema::RegionFull => "region_full",
            CsvSchema::ProvinceDeaths => "province_deaths",
        }
    }

    fn required_columns(&self) -> &'static [&'static str] {
        match self {
            CsvSchema::ProvinceCases => {
                &["date", "unit_id", "region_id", "population", "total_cases"]
            }
            CsvSchema::RegionFull => &[
                "date",
                "unit_id",
                "population",
                "total_cases",
                "recovered",
                "deaths",
            ],
            CsvSchema::ProvinceDeaths => &["date", "unit_id", "deaths"],
        }
    }
}

/// One parsed snapshot row. Values are taken as printed, negative counts
/// included; judging values is the validator's job, not the parser's.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCaseRecord {
    pub date: NaiveDate,
    pub unit_id: String,
    pub region_id: Option<String>,
    pub population: Option<u64>,
    pub total_cases: Option<f64>,
    pub deaths: Option<f64>,
    pub recovered: Option<f64>,
}

/// Parse one snapshot file. Unknown extra columns are ignored; a missing
/// mandatory column is a schema error naming the column; an unparseable date
/// or number is a row error carrying the 1-based data row index.
pub fn parse_csv(path: &Path, schema: CsvSchema) -> Result<Vec<RawCaseRecord>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut columns = BTreeMap::new();
    for (idx, name) in headers.iter().enumerate() {
        columns.insert(name.trim().to_string(), idx);
    }
    for required in schema.required_columns() {
        if !columns.contains_key(*required) {
            return Err(Error::Schema {
                schema: schema.label().to_string(),
                column: (*required).to_string(),
            });
        }
    }
    let col = |name: &str| columns[name];

    let mut records = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).map(str::trim).ok_or_else(|| Error::Row {
                row,
                detail: "row has fewer fields than the header".into(),
            })
        };
        let parse_f64 = |name: &str| -> Result<f64> {
            let raw = field(col(name))?;
            raw.parse::<f64>().map_err(|_| Error::Row {
                row,
                detail: format!("cannot parse {name} value `{raw}` as a number"),
            })
        };

        let date_raw = field(col("date"))?;
        let date = date_raw.parse::<NaiveDate>().map_err(|_| Error::Row {
            row,
            detail: format!("cannot parse date `{date_raw}`"),
        })?;
        let unit_id = field(col("unit_id"))?.to_string();

        let mut out = RawCaseRecord {
            date,
            unit_id,
            region_id: None,
            population: None,
            total_cases: None,
            deaths: None,
            recovered: None,
        };
        match schema {
            CsvSchema::ProvinceCases => {
                out.region_id = Some(field(col("region_id"))?.to_string());
                let pop_raw = field(col("population"))?;
                out.population = Some(pop_raw.parse::<u64>().map_err(|_| Error::Row {
                    row,
                    detail: format!("cannot parse population `{pop_raw}`"),
                })?);
                out.total_cases = Some(parse_f64("total_cases")?);
            }
            CsvSchema::RegionFull => {
                let pop_raw = field(col("population"))?;
                out.population = Some(pop_raw.parse::<u64>().map_err(|_| Error::Row {
                    row,
                    detail: format!("cannot parse population `{pop_raw}`"),
                })?);
                out.total_cases = Some(parse_f64("total_cases")?);
                out.recovered = Some(parse_f64("recovered")?);
                out.deaths = Some(parse_f64("deaths")?);
            }
            CsvSchema::ProvinceDeaths => {
                out.deaths = Some(parse_f64("deaths")?);
            }
        }
        records.push(out);
    }
    Ok(records)
}

/// Estimate provincial recovered counts from the regional recovery rate:
/// `R_p(t) = T_p(t) * R_reg(t) / T_reg(t)`, and zero where the region has no
/// cases. All three inputs must be aligned on the same dates.
pub fn estimate_recovered(
    dates: &[NaiveDate],
    province_total: &[f64],
    region_recovered: &[f64],
    region_total: &[f64],
) -> Result<Vec<f64>> {
    let len = dates.len();
    if province_total.len() != len || region_recovered.len() != len || region_total.len() != len {
        return Err(Error::Alignment(format!(
            "recovered estimation inputs differ in length: {len} dates, {} province totals, {} regional recovered, {} regional totals",
            province_total.len(),
            region_recovered.len(),
            region_total.len()
        )));
    }
    Ok((0..len)
        .map(|t| {
            if region_total[t] == 0.0 {
                0.0
            } else {
                province_total[t] * region_recovered[t] / region_total[t]
            }
        })
        .collect())
}

/// How to treat flawed cumulative series during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepairPolicy {
    /// Report anomalies and fail on gaps; change nothing.
    None,
    /// Replace cumulative decreases with the previous value and fill date
    /// gaps by carrying the last observation forward, recording an anomaly
    /// for every repair.
    #[default]
    ClampMonotone,
}

/// The three parsed tables, ready for assembly.
#[derive(Debug, Clone, Default)]
pub struct RawTables {
    pub province_cases: Vec<RawCaseRecord>,
    pub region_full: Vec<RawCaseRecord>,
    pub province_deaths: Vec<RawCaseRecord>,
}

/// A dated cumulative column for one unit, with repair bookkeeping.
struct CumulativeSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl CumulativeSeries {
    fn from_records(
        unit_id: &str,
        mut entries: Vec<(NaiveDate, f64)>,
        repair: RepairPolicy,
        label: &str,
        anomalies: &mut Vec<Anomaly>,
    ) -> Result<CumulativeSeries> {
        entries.sort_by_key(|(d, _)| *d);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Structural(format!(
                    "`{unit_id}` has duplicate {label} rows for {}",
                    pair[0].0
                )));
            }
        }

        // Fill date gaps by carrying forward, or fail under RepairPolicy::None.
        let mut dates = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (date, value) in entries {
            if let Some(&last) = dates.last() {
                let mut cursor: NaiveDate = last;
                while cursor + Days::new(1) < date {
                    cursor = cursor + Days::new(1);
                    if repair == RepairPolicy::None {
                        return Err(Error::DateGap {
                            unit_id: unit_id.to_string(),
                            date: last,
                        });
                    }
                    anomalies.push(Anomaly {
                        unit_id: unit_id.to_string(),
                        date: cursor,
                        kind: AnomalyKind::GapFill,
                        detail: format!("{label} carried forward from {last}"),
                    });
                    dates.push(cursor);
                    values.push(*values.last().unwrap());
                }
            }
            dates.push(date);
            values.push(value);
        }

        // Clamp cumulative decreases.
        if repair == RepairPolicy::ClampMonotone {
            for idx in 1..values.len() {
                if values[idx] < values[idx - 1] {
                    anomalies.push(Anomaly {
                        unit_id: unit_id.to_string(),
                        date: dates[idx],
                        kind: AnomalyKind::MonotoneClamp,
                        detail: format!(
                            "{label} fell from {} to {}; kept the previous value",
                            values[idx - 1],
                            values[idx]
                        ),
                    });
                    values[idx] = values[idx - 1];
                }
            }
        }

        Ok(CumulativeSeries { dates, values })
    }

    fn value_on(&self, date: NaiveDate) -> Option<f64> {
        self.dates
            .binary_search(&date)
            .ok()
            .map(|idx| self.values[idx])
    }
}

fn group_column(
    records: &[RawCaseRecord],
    pick: impl Fn(&RawCaseRecord) -> Option<f64>,
) -> BTreeMap<String, Vec<(NaiveDate, f64)>> {
    let mut grouped: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for record in records {
        if let Some(value) = pick(record) {
            grouped
                .entry(record.unit_id.clone())
                .or_default()
                .push((record.date, value));
        }
    }
    grouped
}

/// Build the compartment series for every region and province.
///
/// Regions assemble from their own full table. Provinces take cases from the
/// case table, deaths from the death table, and recovered estimated via the
/// parent region's recovery rate, all over the intersection of their date
/// ranges. `S = n - T` and `I = T - R - D`; a negative infected count means
/// the recovered estimate exceeded `T - D` and fails assembly with the
/// offending date. Every repair is recorded as an anomaly on the dataset.
pub fn assemble(raw: &RawTables, repair: RepairPolicy) -> Result<Dataset> {
    let mut dataset = Dataset::default();
    let mut anomalies = Vec::new();

    // Region units and series.
    let region_totals = group_column(&raw.region_full, |r| r.total_cases);
    let region_recovered = group_column(&raw.region_full, |r| r.recovered);
    let region_deaths = group_column(&raw.region_full, |r| r.deaths);

    for (region_id, totals) in region_totals {
        let population = raw
            .region_full
            .iter()
            .find(|r| r.unit_id == region_id)
            .and_then(|r| r.population)
            .ok_or_else(|| Error::Structural(format!("region `{region_id}` has no population")))?;
        let unit = GeoUnit::new(&region_id, &region_id, UnitLevel::Region, None, population)?;

        let t = CumulativeSeries::from_records(&region_id, totals, repair, "total_cases", &mut anomalies)?;
        let r = CumulativeSeries::from_records(
            &region_id,
            region_recovered.get(&region_id).cloned().unwrap_or_default(),
            repair,
            "recovered",
            &mut anomalies,
        )?;
        let d = CumulativeSeries::from_records(
            &region_id,
            region_deaths.get(&region_id).cloned().unwrap_or_default(),
            repair,
            "deaths",
            &mut anomalies,
        )?;

        let series = build_series(&unit, &t, &r, &d)?;
        dataset.insert_unit(unit);
        dataset.insert_series(series);
    }

    // Province units and series.
    let province_totals = group_column(&raw.province_cases, |r| r.total_cases);
    let province_deaths = group_column(&raw.province_deaths, |r| r.deaths);

    for (province_id, totals) in province_totals {
        let first = raw
            .province_cases
            .iter()
            .find(|r| r.unit_id == province_id)
            .expect("grouped ids come from the records");
        let region_id = first.region_id.clone().ok_or_else(|| {
            Error::Structural(format!("province `{province_id}` has no region_id"))
        })?;
        let population = first.population.ok_or_else(|| {
            Error::Structural(format!("province `{province_id}` has no population"))
        })?;
        let unit = GeoUnit::new(
            &province_id,
            &province_id,
            UnitLevel::Province,
            Some(region_id.clone()),
            population,
        )?;

        let t = CumulativeSeries::from_records(&province_id, totals, repair, "total_cases", &mut anomalies)?;

        let deaths = match province_deaths.get(&province_id) {
            Some(rows) if !rows.is_empty() => CumulativeSeries::from_records(
                &province_id,
                rows.clone(),
                repair,
                "deaths",
                &mut anomalies,
            )?,
            _ => {
                dataset.insert_unit(unit);
                dataset.mark_unusable(&province_id, "no death data available");
                continue;
            }
        };

        if !dataset.has_series(&region_id) {
            dataset.insert_unit(unit);
            dataset.mark_unusable(
                &province_id,
                format!("parent region `{region_id}` has no data for the recovered estimate"),
            );
            continue;
        }
        let region = dataset.series(&region_id)?.clone();

        // Intersection of the province's case/death dates and the region's.
        let dates: Vec<NaiveDate> = t
            .dates
            .iter()
            .copied()
            .filter(|d| deaths.value_on(*d).is_some())
            .filter(|d| region.index_of(*d).is_some())
            .collect();
        if dates.is_empty() {
            dataset.insert_unit(unit);
            dataset.mark_unusable(&province_id, "case, death, and region dates never overlap");
            continue;
        }

        let t_vals: Vec<f64> = dates.iter().map(|d| t.value_on(*d).unwrap()).collect();
        let d_vals: Vec<f64> = dates.iter().map(|d| deaths.value_on(*d).unwrap()).collect();
        let reg_t: Vec<f64> = dates
            .iter()
            .map(|d| region.total_cases()[region.index_of(*d).unwrap()])
            .collect();
        let reg_r: Vec<f64> = dates
            .iter()
            .map(|d| region.recovered()[region.index_of(*d).unwrap()])
            .collect();
        let estimated = estimate_recovered(&dates, &t_vals, &reg_r, &reg_t)?;

        // The ratio estimate need not be monotone even on monotone inputs.
        let r_series = CumulativeSeries::from_records(
            &province_id,
            dates.iter().copied().zip(estimated).collect(),
            repair,
            "recovered (estimated)",
            &mut anomalies,
        )?;

        let t_series = CumulativeSeries {
            dates: dates.clone(),
            values: t_vals,
        };
        let d_series = CumulativeSeries {
            dates: dates.clone(),
            values: d_vals,
        };
        let series = build_series(&unit, &t_series, &r_series, &d_series)?;
        dataset.insert_unit(unit);
        dataset.insert_series(series);
    }

    dataset.record_anomalies(anomalies);
    Ok(dataset)
}

/// Assemble `S = n - T`, `I = T - R - D` over the common dates of the three
/// cumulative columns.
fn build_series(
    unit: &GeoUnit,
    t: &CumulativeSeries,
    r: &CumulativeSeries,
    d: &CumulativeSeries,
) -> Result<CompartmentSeries> {
    let dates: Vec<NaiveDate> = t
        .dates
        .iter()
        .copied()
        .filter(|date| r.value_on(*date).is_some() && d.value_on(*date).is_some())
        .collect();
    if dates.is_empty() {
        return Err(Error::Alignment(format!(
            "`{}` has no dates shared by cases, recovered, and deaths",
            unit.unit_id
        )));
    }

    let n = unit.population as f64;
    let mut susceptible = Vec::with_capacity(dates.len());
    let mut infected = Vec::with_capacity(dates.len());
    let mut recovered = Vec::with_capacity(dates.len());
    let mut deceased = Vec::with_capacity(dates.len());
    let mut total = Vec::with_capacity(dates.len());

    for date in &dates {
        let tv = t.value_on(*date).unwrap();
        let rv = r.value_on(*date).unwrap();
        let dv = d.value_on(*date).unwrap();
        let mut iv = tv - rv - dv;
        if iv < 0.0 {
            // Tolerate rounding dust from the ratio estimate; anything
            // larger means the estimate genuinely exceeds T - D.
            if iv > -(crate::series::CONSERVATION_REL_TOL * n) {
                iv = 0.0;
            } else {
                return Err(Error::Consistency {
                    unit_id: unit.unit_id.clone(),
                    date: *date,
                    detail: format!(
                        "infected would be negative: T = {tv}, R = {rv}, D = {dv}"
                    ),
                });
            }
        }
        susceptible.push(n - tv);
        infected.push(iv);
        recovered.push(rv);
        deceased.push(dv);
        total.push(tv);
    }

    CompartmentSeries::new(
        unit.clone(),
        dates,
        susceptible,
        infected,
        recovered,
        deceased,
        total,
    )
}
