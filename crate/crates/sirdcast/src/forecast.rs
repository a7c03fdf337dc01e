//! End-to-end per-province forecasting: train the three parameter
//! regressions on an aggregated peer series, apply the coefficients to the
//! local parameter history, and roll the compartments forward.

use chrono::NaiveDate;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geo::{GeoUnit, UnitLevel};
use crate::regression::{
    fit_masked, predict_path, select_lag, select_penalty, LagRegressionModel, SearchSpace,
};
use crate::series::{CompartmentSeries, ParameterSeries, SirdState};
use crate::sird::{extract_parameters, r0, step, ParamKind};
use crate::training::{aggregate_training_series, select_peers, AggregationSpec};

/// Forecast request: horizon, hyperparameter search, and peer aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastConfig {
    /// Days ahead to forecast, `1..=horizon_cap`.
    pub horizon: usize,
    /// Hard cap on the horizon; forecasts past it are rejected.
    pub horizon_cap: usize,
    pub search: SearchSpace,
    pub aggregation: AggregationSpec,
}

impl ForecastConfig {
    pub const DEFAULT_HORIZON_CAP: usize = 15;

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 || self.horizon > self.horizon_cap {
            return Err(Error::InvalidInput(format!(
                "horizon {} is outside 1..={}",
                self.horizon, self.horizon_cap
            )));
        }
        self.search.validate()
    }
}

/// The three fitted parameter regressions sharing one lag count, together
/// with the aggregated parameter series they were trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub lag: usize,
    pub beta: LagRegressionModel,
    pub gamma_r: LagRegressionModel,
    pub gamma_d: LagRegressionModel,
    /// Parameter series extracted from the aggregated training data.
    pub targets: ParameterSeries,
}

impl TrainedModels {
    pub fn model(&self, kind: ParamKind) -> &LagRegressionModel {
        match kind {
            ParamKind::Beta => &self.beta,
            ParamKind::GammaR => &self.gamma_r,
            ParamKind::GammaD => &self.gamma_d,
        }
    }
}

/// One forecast day: the compartment state and the parameters that produced
/// it.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastStep {
    pub state: SirdState,
    pub beta: f64,
    pub gamma_r: f64,
    pub gamma_d: f64,
    pub r0: Option<f64>,
}

/// Hyperparameters and peers behind a forecast.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModelMeta {
    pub lag: usize,
    pub penalty_beta: f64,
    pub penalty_gamma_r: f64,
    pub penalty_gamma_d: f64,
    pub peers: Vec<String>,
}

/// Per-horizon point forecasts of the compartments and parameters for one
/// unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub unit: GeoUnit,
    pub as_of: NaiveDate,
    /// Steps for horizons `1..=h`, in order.
    pub steps: Vec<ForecastStep>,
    pub meta: ModelMeta,
}

impl ForecastResult {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

/// Fit the three parameter regressions on an aggregated series.
///
/// The lag count is chosen by AIC on the transmission-rate series alone —
/// the parameter most exposed to policy shifts — and shared by all three
/// regressions so the series stay homogeneous. Penalties are cross-validated
/// independently per parameter at that shared lag.
pub fn train(aggregated: &CompartmentSeries, search: &SearchSpace) -> Result<TrainedModels> {
    search.validate()?;
    let targets = extract_parameters(aggregated)?;
    let mask = Some(targets.defined.as_slice());

    let lag = select_lag(&targets.beta, mask, search.lag_min, search.lag_max)
        .map_err(|e| name_parameter(e, ParamKind::Beta, "lag selection"))?;

    let mut models = Vec::with_capacity(3);
    for kind in ParamKind::ALL {
        let values = targets.values(kind);
        let penalty = select_penalty(values, mask, lag, &search.penalty_grid, search.cv_folds)
            .map_err(|e| name_parameter(e, kind, "penalty selection"))?;
        let mut model = fit_masked(values, mask, lag, penalty)
            .map_err(|e| name_parameter(e, kind, "fit"))?;
        model.target = Some(kind);
        models.push(model);
    }

    let gamma_d = models.pop().unwrap();
    let gamma_r = models.pop().unwrap();
    let beta = models.pop().unwrap();
    Ok(TrainedModels {
        lag,
        beta,
        gamma_r,
        gamma_d,
        targets,
    })
}

fn name_parameter(err: Error, kind: ParamKind, stage: &str) -> Error {
    match err {
        Error::InsufficientData { needed, got, what } => Error::InsufficientData {
            what: format!("{kind} {stage} ({what})"),
            needed,
            got,
        },
        other => other,
    }
}

/// Forecast one unit from its last observed state.
///
/// The trained coefficients run recursively on the unit's own trailing
/// parameter history, and the compartments roll forward under the predicted
/// rates. Requires at least `lag` defined trailing parameter values.
pub fn forecast_unit(
    local: &CompartmentSeries,
    models: &TrainedModels,
    horizon: usize,
) -> Result<ForecastResult> {
    if horizon < 1 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let local_params = extract_parameters(local)?;

    let mut paths: Vec<Vec<f64>> = Vec::with_capacity(3);
    for kind in ParamKind::ALL {
        let history = local_params.trailing_defined(kind);
        if history.len() < models.lag {
            return Err(Error::InsufficientData {
                what: format!("trailing defined {kind} history for `{}`", local.unit().unit_id),
                needed: models.lag,
                got: history.len(),
            });
        }
        paths.push(predict_path(models.model(kind), &history, horizon)?);
    }

    let mut steps = Vec::with_capacity(horizon);
    let mut state = local.last_state();
    for h in 0..horizon {
        let (b, gr, gd) = (paths[0][h], paths[1][h], paths[2][h]);
        state = step(&state, b, gr, gd)?;
        steps.push(ForecastStep {
            state,
            beta: b,
            gamma_r: gr,
            gamma_d: gd,
            r0: r0(b, gr, gd),
        });
    }

    Ok(ForecastResult {
        unit: local.unit().clone(),
        as_of: local.last_date(),
        steps,
        meta: ModelMeta {
            lag: models.lag,
            penalty_beta: models.beta.penalty,
            penalty_gamma_r: models.gamma_r.penalty,
            penalty_gamma_d: models.gamma_d.penalty,
            peers: Vec::new(),
        },
    })
}

/// Train on the configured peer pool and forecast one province.
///
/// Only data up to `aggregation.as_of` enters peer selection, training, and
/// the local history; the rollout starts from the last observed local state.
pub fn forecast_province(
    dataset: &Dataset,
    unit_id: &str,
    config: &ForecastConfig,
) -> Result<(ForecastResult, TrainedModels)> {
    config.validate()?;
    let unit = dataset.unit(unit_id)?.clone();
    if unit.level != UnitLevel::Province {
        return Err(Error::InvalidInput(format!(
            "`{unit_id}` is not a province"
        )));
    }
    if let Some(reason) = dataset.unusable().get(unit_id) {
        return Err(Error::InvalidInput(format!(
            "`{unit_id}` is unusable: {reason}"
        )));
    }
    let spec = &config.aggregation;
    spec.validate(dataset)?;

    let visible = dataset.truncated(spec.as_of);
    let trained = train_for_reference(&visible, spec, &config.search)?;
    let local = visible.series(unit_id)?;
    let mut result = forecast_unit(local, &trained.models, config.horizon)?;
    result.meta.peers = trained.peer_ids;
    Ok((result, trained.models))
}

/// Trained models together with the peer pool they came from.
#[derive(Debug, Clone)]
pub struct TrainedForReference {
    pub models: TrainedModels,
    pub peer_ids: Vec<String>,
}

/// Select peers for the reference unit in an already-truncated dataset view
/// and train on their pooled series. The backtest harness shares trained
/// models across provinces with the same reference through this entry point.
pub fn train_for_reference(
    visible: &Dataset,
    spec: &AggregationSpec,
    search: &SearchSpace,
) -> Result<TrainedForReference> {
    let reference = visible.unit(&spec.reference_id)?.clone();
    let candidates = visible.modeled_units(spec.mode.peer_level());
    let peers = select_peers(&reference, &candidates, visible, spec.as_of, spec.window);
    let pooled = aggregate_training_series(&peers, visible)?;
    let models = train(&pooled, search)?;
    Ok(TrainedForReference {
        models,
        peer_ids: peers.into_iter().map(|p| p.unit_id).collect(),
    })
}
