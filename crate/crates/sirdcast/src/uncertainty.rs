//! Forward bootstrap prediction intervals for the model parameters, the
//! reproduction number, and the compartment variables.
//!
//! Per replication: resample the fitted residuals with replacement,
//! regenerate the training series forward from its initial lag window using
//! the fitted recursion plus resampled innovations, refit at the same lag and
//! penalty, and produce a forecast path with fresh resampled innovations.
//! Band edges are empirical quantiles across replications, floored at zero.
//! Replications draw from per-index random streams, so results do not depend
//! on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::forecast::TrainedModels;
use crate::regression::{fit, LagRegressionModel};
use crate::series::{CompartmentSeries, SirdState};
use crate::sird::{step, ParamKind};
use crate::stats::quantile;

/// Smallest accepted replication count; below this the quantiles are noise.
pub const MIN_REPLICATIONS: usize = 100;

/// Bootstrap configuration. The seed is mandatory so runs are reproducible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSettings {
    pub replications: usize,
    /// Band level is `1 - alpha` (alpha = 0.10 gives a 90% band).
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        BootstrapSettings {
            replications: 1000,
            alpha: 0.10,
            seed: 0,
        }
    }
}

impl BootstrapSettings {
    pub fn validate(&self) -> Result<()> {
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::InvalidInput(format!(
                "bootstrap needs at least {MIN_REPLICATIONS} replications, got {}",
                self.replications
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Lower/upper band per horizon at a confidence level.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBand {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Confidence level `1 - alpha`.
    pub level: f64,
}

impl IntervalBand {
    pub fn horizon(&self) -> usize {
        self.lower.len()
    }
}

/// Reproduction-number band. The upper edge is undefined wherever the
/// removal-rate lower bounds are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct R0Band {
    pub lower: Vec<f64>,
    pub upper: Vec<Option<f64>>,
    pub level: f64,
}

/// Per-variable envelope bands from extreme-parameter rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableBands {
    pub susceptible: IntervalBand,
    pub infected: IntervalBand,
    pub recovered: IntervalBand,
    pub deceased: IntervalBand,
    /// Which parameter's interval drove the envelope.
    pub focus: ParamKind,
}

/// Bootstrap a prediction band for one parameter, forecasting from the tail
/// of the fitting series itself.
pub fn bootstrap_parameter_band(
    model: &LagRegressionModel,
    history: &[f64],
    horizon: usize,
    settings: &BootstrapSettings,
) -> Result<IntervalBand> {
    bootstrap_band_with_start(model, history, history, horizon, settings)
}

/// Bootstrap a prediction band, regenerating over `history` (the series the
/// model was fitted on) but forecasting from the trailing lags of `start`.
/// Separating the two lets peers supply the training series while the band
/// brackets a local forecast.
pub fn bootstrap_band_with_start(
    model: &LagRegressionModel,
    history: &[f64],
    start: &[f64],
    horizon: usize,
    settings: &BootstrapSettings,
) -> Result<IntervalBand> {
    settings.validate()?;
    if horizon < 1 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let lag = model.lag;
    if model.residuals.len() < lag + 2 {
        return Err(Error::insufficient(
            "bootstrap residual pool",
            lag + 2,
            model.residuals.len(),
        ));
    }
    if history.len() < lag + 2 {
        return Err(Error::insufficient(
            "bootstrap regeneration series",
            lag + 2,
            history.len(),
        ));
    }
    if start.len() < lag {
        return Err(Error::insufficient(
            "bootstrap forecast lags",
            lag,
            start.len(),
        ));
    }

    let paths: Vec<Result<Vec<f64>>> = exec::map_range(settings.replications, |rep| {
        replicate_path(model, history, start, horizon, settings.seed, rep as u64)
    });
    let mut collected = Vec::with_capacity(settings.replications);
    for path in paths {
        collected.push(path?);
    }

    let mut lower = Vec::with_capacity(horizon);
    let mut upper = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let mut slice: Vec<f64> = collected.iter().map(|p| p[h]).collect();
        slice.sort_by(|a, b| a.partial_cmp(b).expect("paths are finite"));
        lower.push(quantile(&slice, settings.alpha / 2.0).max(0.0));
        upper.push(quantile(&slice, 1.0 - settings.alpha / 2.0).max(0.0));
    }
    Ok(IntervalBand {
        lower,
        upper,
        level: 1.0 - settings.alpha,
    })
}

/// One bootstrap replication: regenerate, refit, forecast.
fn replicate_path(
    model: &LagRegressionModel,
    history: &[f64],
    start: &[f64],
    horizon: usize,
    seed: u64,
    rep: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    let pool = &model.residuals;
    let lag = model.lag;

    // Regenerate the series from its initial lag window, with resampled
    // innovations; values stay clamped at zero like every parameter path.
    let mut regen: Vec<f64> = history[..lag].to_vec();
    for _ in lag..history.len() {
        let eps = pool[rng.random_range(0..pool.len())];
        let value = (model.predict_next(&regen) + eps).max(0.0);
        regen.push(value);
    }

    // Refit with the lag and penalty held fixed.
    let refit = fit(&regen, lag, model.penalty)?;

    // Forecast forward from the observed trailing lags, adding resampled
    // innovations so the band covers future noise, not just fit variance.
    let mut window: Vec<f64> = start[start.len() - lag..].to_vec();
    let mut path = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let eps = pool[rng.random_range(0..pool.len())];
        let value = (refit.predict_next(&window) + eps).max(0.0);
        window.push(value);
        window.remove(0);
        path.push(value);
    }
    Ok(path)
}

/// Compose the reproduction-number band from the three parameter bands:
/// `R0_low = beta_low / (gammaR_up + gammaD_up)` and
/// `R0_up = beta_up / (gammaR_low + gammaD_low)`, with the upper edge
/// undefined when the denominator is zero.
pub fn r0_band(beta: &IntervalBand, gamma_r: &IntervalBand, gamma_d: &IntervalBand) -> Result<R0Band> {
    let horizon = beta.horizon();
    if gamma_r.horizon() != horizon || gamma_d.horizon() != horizon {
        return Err(Error::Alignment(format!(
            "parameter bands cover different horizons: {}, {}, {}",
            horizon,
            gamma_r.horizon(),
            gamma_d.horizon()
        )));
    }
    let mut lower = Vec::with_capacity(horizon);
    let mut upper = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let up_removal = gamma_r.upper[h] + gamma_d.upper[h];
        lower.push(if up_removal == 0.0 {
            0.0
        } else {
            beta.lower[h] / up_removal
        });
        let low_removal = gamma_r.lower[h] + gamma_d.lower[h];
        upper.push(if low_removal == 0.0 {
            None
        } else {
            Some(beta.upper[h] / low_removal)
        });
    }
    Ok(R0Band {
        lower,
        upper,
        level: beta.level,
    })
}

/// Roll per-variable bands from the last observed state.
///
/// Three trajectories run under the focus parameter's lower band, upper band,
/// and point path, with the other two parameters at their point estimates.
/// The per-variable band is the min/max envelope of the three, so every bound
/// is itself a feasible trajectory and the band always contains the point
/// forecast.
pub fn variable_bands(
    local: &CompartmentSeries,
    focus: ParamKind,
    focus_band: &IntervalBand,
    beta_path: &[f64],
    gamma_r_path: &[f64],
    gamma_d_path: &[f64],
    horizon: usize,
) -> Result<VariableBands> {
    if focus_band.horizon() < horizon
        || beta_path.len() < horizon
        || gamma_r_path.len() < horizon
        || gamma_d_path.len() < horizon
    {
        return Err(Error::Alignment(
            "parameter paths are shorter than the requested horizon".into(),
        ));
    }

    let rollout = |focus_values: &[f64]| -> Result<Vec<SirdState>> {
        let mut state = local.last_state();
        let mut states = Vec::with_capacity(horizon);
        for h in 0..horizon {
            let (b, gr, gd) = match focus {
                ParamKind::Beta => (focus_values[h], gamma_r_path[h], gamma_d_path[h]),
                ParamKind::GammaR => (beta_path[h], focus_values[h], gamma_d_path[h]),
                ParamKind::GammaD => (beta_path[h], gamma_r_path[h], focus_values[h]),
            };
            state = step(&state, b, gr, gd)?;
            states.push(state);
        }
        Ok(states)
    };

    let point_focus = match focus {
        ParamKind::Beta => beta_path,
        ParamKind::GammaR => gamma_r_path,
        ParamKind::GammaD => gamma_d_path,
    };
    let low = rollout(&focus_band.lower)?;
    let high = rollout(&focus_band.upper)?;
    let point = rollout(point_focus)?;

    let envelope = |pick: fn(&SirdState) -> f64| -> IntervalBand {
        let mut lower = Vec::with_capacity(horizon);
        let mut upper = Vec::with_capacity(horizon);
        for h in 0..horizon {
            let values = [pick(&low[h]), pick(&high[h]), pick(&point[h])];
            lower.push(values.iter().cloned().fold(f64::INFINITY, f64::min));
            upper.push(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        IntervalBand {
            lower,
            upper,
            level: focus_band.level,
        }
    };

    Ok(VariableBands {
        susceptible: envelope(|s| s.s),
        infected: envelope(|s| s.i),
        recovered: envelope(|s| s.r),
        deceased: envelope(|s| s.d),
        focus,
    })
}

/// All bands for one forecast: the three parameter bands (regenerated on the
/// aggregated training series, forecast from the local trailing history), the
/// reproduction-number band, and the focus-parameter variable bands.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBands {
    pub beta: IntervalBand,
    pub gamma_r: IntervalBand,
    pub gamma_d: IntervalBand,
    pub r0: R0Band,
    pub variables: VariableBands,
}

fn splitmix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bands for a local forecast produced by [`crate::forecast::forecast_unit`].
pub fn forecast_bands(
    local: &CompartmentSeries,
    models: &TrainedModels,
    result: &crate::forecast::ForecastResult,
    focus: ParamKind,
    settings: &BootstrapSettings,
) -> Result<ForecastBands> {
    let horizon = result.horizon();
    let local_params = crate::sird::extract_parameters(local)?;

    let mut bands = Vec::with_capacity(3);
    for (idx, kind) in ParamKind::ALL.into_iter().enumerate() {
        let model = models.model(kind);
        // Regenerate over the trailing defined run of the training targets.
        let training = models.targets.trailing_defined(kind);
        let start = local_params.trailing_defined(kind);
        let per_param = BootstrapSettings {
            seed: splitmix(settings.seed, idx as u64 + 1),
            ..*settings
        };
        bands.push(bootstrap_band_with_start(
            model, &training, &start, horizon, &per_param,
        )?);
    }
    let gamma_d_band = bands.pop().unwrap();
    let gamma_r_band = bands.pop().unwrap();
    let beta_band = bands.pop().unwrap();

    let r0 = r0_band(&beta_band, &gamma_r_band, &gamma_d_band)?;

    let beta_path: Vec<f64> = result.steps.iter().map(|s| s.beta).collect();
    let gamma_r_path: Vec<f64> = result.steps.iter().map(|s| s.gamma_r).collect();
    let gamma_d_path: Vec<f64> = result.steps.iter().map(|s| s.gamma_d).collect();
    let focus_band = match focus {
        ParamKind::Beta => &beta_band,
        ParamKind::GammaR => &gamma_r_band,
        ParamKind::GammaD => &gamma_d_band,
    };
    let variables = variable_bands(
        local,
        focus,
        focus_band,
        &beta_path,
        &gamma_r_path,
        &gamma_d_path,
        horizon,
    )?;

    Ok(ForecastBands {
        beta: beta_band,
        gamma_r: gamma_r_band,
        gamma_d: gamma_d_band,
        r0,
        variables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoUnit;
    use crate::series::SirdState;
    use crate::synthetic::generate_synthetic;
    use approx::assert_relative_eq;

    fn settings(seed: u64) -> BootstrapSettings {
        BootstrapSettings {
            replications: 200,
            alpha: 0.10,
            seed,
        }
    }

    /// Model fitted on an exact AR(1) series: residuals are ~0.
    fn exact_model() -> (LagRegressionModel, Vec<f64>) {
        let mut y = vec![0.5];
        for t in 1..30 {
            y.push(0.1 + 0.7 * y[t - 1]);
        }
        let model = fit(&y, 1, 0.0).unwrap();
        (model, y)
    }

    #[test]
    fn zero_residuals_give_zero_width_band_at_point_forecast() {
        let (mut model, y) = exact_model();
        for r in model.residuals.iter_mut() {
            *r = 0.0;
        }
        let band = bootstrap_parameter_band(&model, &y, 5, &settings(1)).unwrap();
        let point = crate::regression::predict_path(&model, &y, 5).unwrap();
        for h in 0..5 {
            assert_relative_eq!(band.lower[h], band.upper[h], epsilon = 1e-12);
            assert_relative_eq!(band.lower[h], point[h], epsilon = 1e-9);
        }
    }

    #[test]
    fn bands_have_zero_lower_bound() {
        // Residuals large enough to push sample paths negative before the
        // clamp: lows must still be >= 0.
        let mut y = vec![0.05];
        for t in 1..40 {
            y.push(0.01 + 0.5 * y[t - 1] + if t % 2 == 0 { 0.04 } else { -0.04 });
        }
        let model = fit(&y, 1, 0.0).unwrap();
        let band = bootstrap_parameter_band(&model, &y, 8, &settings(3)).unwrap();
        for h in 0..8 {
            assert!(band.lower[h] >= 0.0);
            assert!(band.lower[h] <= band.upper[h]);
        }
    }

    #[test]
    fn bands_are_reproducible_under_a_seed() {
        let (model, y) = exact_model();
        let a = bootstrap_parameter_band(&model, &y, 4, &settings(9)).unwrap();
        let b = bootstrap_parameter_band(&model, &y, 4, &settings(9)).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_parameter_band(&model, &y, 4, &settings(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn wider_level_contains_narrower_band() {
        let mut y = vec![0.3];
        for t in 1..35 {
            y.push(0.05 + 0.6 * y[t - 1] + if t % 3 == 0 { 0.02 } else { -0.01 });
        }
        let model = fit(&y, 1, 0.0).unwrap();
        let narrow = bootstrap_parameter_band(
            &model,
            &y,
            6,
            &BootstrapSettings {
                replications: 300,
                alpha: 0.10,
                seed: 5,
            },
        )
        .unwrap();
        let wide = bootstrap_parameter_band(
            &model,
            &y,
            6,
            &BootstrapSettings {
                replications: 300,
                alpha: 0.05,
                seed: 5,
            },
        )
        .unwrap();
        for h in 0..6 {
            assert!(wide.lower[h] <= narrow.lower[h] + 1e-12);
            assert!(wide.upper[h] >= narrow.upper[h] - 1e-12);
        }
    }

    #[test]
    fn too_few_replications_are_rejected() {
        let (model, y) = exact_model();
        let bad = BootstrapSettings {
            replications: 10,
            alpha: 0.10,
            seed: 0,
        };
        assert!(bootstrap_parameter_band(&model, &y, 3, &bad).is_err());
    }

    fn flat_band(values: &[f64], level: f64) -> IntervalBand {
        IntervalBand {
            lower: values.to_vec(),
            upper: values.to_vec(),
            level,
        }
    }

    #[test]
    fn r0_band_composes_bounds() {
        let beta = IntervalBand {
            lower: vec![0.2],
            upper: vec![0.4],
            level: 0.9,
        };
        let gr = IntervalBand {
            lower: vec![0.05],
            upper: vec![0.1],
            level: 0.9,
        };
        let gd = IntervalBand {
            lower: vec![0.05],
            upper: vec![0.1],
            level: 0.9,
        };
        let band = r0_band(&beta, &gr, &gd).unwrap();
        assert_relative_eq!(band.lower[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(band.upper[0].unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn r0_upper_is_undefined_when_removal_lowers_are_zero() {
        let beta = IntervalBand {
            lower: vec![0.0],
            upper: vec![0.4],
            level: 0.9,
        };
        let zero = IntervalBand {
            lower: vec![0.0],
            upper: vec![0.1],
            level: 0.9,
        };
        let band = r0_band(&beta, &zero, &zero).unwrap();
        assert_eq!(band.upper[0], None);
        assert_relative_eq!(band.lower[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_parameter_bands_give_degenerate_r0_band() {
        let beta = flat_band(&[0.3, 0.3], 0.9);
        let gr = flat_band(&[0.1, 0.1], 0.9);
        let gd = flat_band(&[0.05, 0.05], 0.9);
        let band = r0_band(&beta, &gr, &gd).unwrap();
        for h in 0..2 {
            assert_relative_eq!(band.lower[h], 2.0, epsilon = 1e-12);
            assert_relative_eq!(band.upper[h].unwrap(), 2.0, epsilon = 1e-12);
        }
    }

    fn growth_series(len: usize) -> CompartmentSeries {
        let unit = GeoUnit::region("r1", 1_000_000).unwrap();
        let initial = SirdState::new(998_000.0, 2_000.0, 0.0, 0.0, 1_000_000).unwrap();
        generate_synthetic(
            &unit,
            "2020-03-01".parse().unwrap(),
            &initial,
            &vec![0.3; len],
            &vec![0.08; len],
            &vec![0.02; len],
        )
        .unwrap()
    }

    #[test]
    fn degenerate_focus_band_matches_point_rollout() {
        let local = growth_series(20);
        let horizon = 6;
        let beta_path = vec![0.3; horizon];
        let gr_path = vec![0.08; horizon];
        let gd_path = vec![0.02; horizon];
        let band = flat_band(&beta_path, 0.9);
        let bands = variable_bands(
            &local,
            ParamKind::Beta,
            &band,
            &beta_path,
            &gr_path,
            &gd_path,
            horizon,
        )
        .unwrap();

        let mut state = local.last_state();
        for h in 0..horizon {
            state = step(&state, 0.3, 0.08, 0.02).unwrap();
            assert_relative_eq!(bands.infected.lower[h], state.i, epsilon = 1e-9);
            assert_relative_eq!(bands.infected.upper[h], state.i, epsilon = 1e-9);
        }
    }

    #[test]
    fn wider_beta_upper_lifts_infected_on_growth_data() {
        let local = growth_series(20);
        let horizon = 8;
        let beta_path = vec![0.3; horizon];
        let gr_path = vec![0.08; horizon];
        let gd_path = vec![0.02; horizon];
        let band = IntervalBand {
            lower: vec![0.2; horizon],
            upper: vec![0.45; horizon],
            level: 0.9,
        };
        let bands = variable_bands(
            &local,
            ParamKind::Beta,
            &band,
            &beta_path,
            &gr_path,
            &gd_path,
            horizon,
        )
        .unwrap();
        // The upper rollout has strictly more infections than the lower one
        // at every horizon during growth.
        for h in 0..horizon {
            assert!(bands.infected.upper[h] > bands.infected.lower[h]);
            // And the band contains the point path.
            let mut state = local.last_state();
            for k in 0..=h {
                state = step(&state, beta_path[k], gr_path[k], gd_path[k]).unwrap();
            }
            assert!(bands.infected.lower[h] <= state.i && state.i <= bands.infected.upper[h]);
        }
    }

    #[test]
    fn beta_upper_rollout_is_the_susceptible_lower_bound() {
        let local = growth_series(15);
        let horizon = 5;
        let beta_point = vec![0.25; horizon];
        let gr_path = vec![0.08; horizon];
        let gd_path = vec![0.02; horizon];
        let band = IntervalBand {
            lower: vec![0.0; horizon],
            upper: vec![0.5; horizon],
            level: 0.9,
        };
        let bands = variable_bands(
            &local,
            ParamKind::Beta,
            &band,
            &beta_point,
            &gr_path,
            &gd_path,
            horizon,
        )
        .unwrap();
        let mut state = local.last_state();
        for h in 0..horizon {
            state = step(&state, 0.5, gr_path[h], gd_path[h]).unwrap();
            assert_relative_eq!(bands.susceptible.lower[h], state.s, epsilon = 1e-9);
        }
    }

    #[test]
    fn variable_bands_are_ordered_and_within_population() {
        let local = growth_series(20);
        let horizon = 10;
        let beta_path = vec![0.3; horizon];
        let gr_path = vec![0.08; horizon];
        let gd_path = vec![0.02; horizon];
        let band = IntervalBand {
            lower: vec![0.1; horizon],
            upper: vec![0.5; horizon],
            level: 0.9,
        };
        let bands = variable_bands(
            &local,
            ParamKind::Beta,
            &band,
            &beta_path,
            &gr_path,
            &gd_path,
            horizon,
        )
        .unwrap();
        let n = local.unit().population as f64;
        for h in 0..horizon {
            for band in [
                &bands.susceptible,
                &bands.infected,
                &bands.recovered,
                &bands.deceased,
            ] {
                assert!(band.lower[h] >= 0.0 && band.upper[h] <= n);
                assert!(band.lower[h] <= band.upper[h]);
            }
        }
    }
}
