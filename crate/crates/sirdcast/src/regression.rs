//! Per-parameter lag regression with ridge regularization, AIC lag selection,
//! and forward-chaining cross-validation for the penalty.
//!
//! The model is a finite-lag linear predictor
//!
//! ```text
//! Y_hat(t) = c_0 + sum_{j=1..J} c_j Y(t - j)
//! ```
//!
//! fitted by minimizing `sum_t (Y(t) - Y_hat(t))^2 + lambda * sum_{j=0..J} c_j^2`.
//! The intercept is penalized together with the lag coefficients. Rows enter
//! the design only when the target and all of its `J` lags are defined, so
//! gaps in upstream extraction drop rows instead of corrupting lag structure.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sird::ParamKind;

/// Relative RSS threshold below which a fit counts as exact for AIC purposes.
///
/// On data generated by an exact linear recurrence the residual sum is
/// rounding dust; comparing logs of dust across candidate lags would break
/// the tie toward the smallest lag. Fits with `RSS <= TSS * EXACT_FIT_REL`
/// score as negative infinity and the first (smallest) such lag wins.
const EXACT_FIT_REL: f64 = 1e-20;

/// A fitted lag regression for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LagRegressionModel {
    /// `c_0..c_J`; the intercept first.
    pub coefficients: Vec<f64>,
    /// Number of lag days `J`.
    pub lag: usize,
    /// Ridge penalty the model was fitted with.
    pub penalty: f64,
    /// In-sample residuals, one per usable design row.
    pub residuals: Vec<f64>,
    /// Which model parameter this regression targets, when known.
    pub target: Option<ParamKind>,
}

impl LagRegressionModel {
    /// One-step prediction from a lag window; `lags` is in time order and
    /// must hold at least `self.lag` values.
    pub fn predict_next(&self, lags: &[f64]) -> f64 {
        debug_assert!(lags.len() >= self.lag);
        let mut value = self.coefficients[0];
        for j in 1..=self.lag {
            value += self.coefficients[j] * lags[lags.len() - j];
        }
        value
    }
}

/// Hyperparameter search configuration: lag candidates, penalty grid, and
/// cross-validation folds.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub lag_min: usize,
    pub lag_max: usize,
    pub penalty_grid: Vec<f64>,
    pub cv_folds: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            lag_min: 1,
            lag_max: 5,
            penalty_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0],
            cv_folds: 5,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.lag_min < 1 || self.lag_max < self.lag_min {
            return Err(Error::InvalidInput(format!(
                "lag range {}..={} is invalid; the lower bound must be at least 1",
                self.lag_min, self.lag_max
            )));
        }
        if self.penalty_grid.is_empty() {
            return Err(Error::InvalidInput("penalty grid must not be empty".into()));
        }
        if self.penalty_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidInput(
                "penalties must be finite and non-negative".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidInput(
                "cross-validation needs at least 2 folds".into(),
            ));
        }
        Ok(())
    }
}

/// Indices `t` whose target and all `lag` lags are defined.
fn usable_rows(len: usize, lag: usize, mask: Option<&[bool]>) -> Vec<usize> {
    (lag..len)
        .filter(|&t| match mask {
            None => true,
            Some(m) => (t - lag..=t).all(|k| m[k]),
        })
        .collect()
}

/// Build the design matrix and target vector over the given rows.
fn design(values: &[f64], rows: &[usize], lag: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut x = DMatrix::<f64>::zeros(rows.len(), lag + 1);
    let mut y = DVector::<f64>::zeros(rows.len());
    for (r, &t) in rows.iter().enumerate() {
        x[(r, 0)] = 1.0;
        for j in 1..=lag {
            x[(r, j)] = values[t - j];
        }
        y[r] = values[t];
    }
    (x, y)
}

/// Least-squares solve via SVD. Rank-deficient systems get the minimum-norm
/// solution, so an exactly collinear design (e.g. a constant series with
/// lambda = 0) still fits cleanly.
fn solve_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>> {
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = max_sv * 1e-12;
    let solution = svd
        .solve(y, eps)
        .map_err(|e| Error::Structural(format!("least-squares solve failed: {e}")))?;
    Ok(solution.iter().cloned().collect())
}

fn ridge_solve(values: &[f64], rows: &[usize], lag: usize, penalty: f64) -> Result<Vec<f64>> {
    let (x, y) = design(values, rows, lag);
    if penalty == 0.0 {
        return solve_least_squares(&x, &y);
    }
    // Ridge as an augmented least-squares problem: stack sqrt(lambda) * I
    // under the design and zeros under the target.
    let p = lag + 1;
    let m = rows.len();
    let mut xa = DMatrix::<f64>::zeros(m + p, p);
    let mut ya = DVector::<f64>::zeros(m + p);
    xa.view_mut((0, 0), (m, p)).copy_from(&x);
    ya.rows_mut(0, m).copy_from(&y);
    let root = penalty.sqrt();
    for j in 0..p {
        xa[(m + j, j)] = root;
    }
    solve_least_squares(&xa, &ya)
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "regression series contains non-finite values".into(),
        ));
    }
    Ok(())
}

/// Fit the lag regression on a fully-defined series.
pub fn fit(values: &[f64], lag: usize, penalty: f64) -> Result<LagRegressionModel> {
    fit_masked(values, None, lag, penalty)
}

/// Fit the lag regression, using only rows whose target and lags are all
/// flagged defined in `mask`.
pub fn fit_masked(
    values: &[f64],
    mask: Option<&[bool]>,
    lag: usize,
    penalty: f64,
) -> Result<LagRegressionModel> {
    if lag < 1 {
        return Err(Error::InvalidInput("lag must be at least 1".into()));
    }
    if !penalty.is_finite() || penalty < 0.0 {
        return Err(Error::InvalidInput(format!(
            "penalty must be finite and non-negative, got {penalty}"
        )));
    }
    check_finite(values)?;
    if let Some(m) = mask {
        if m.len() != values.len() {
            return Err(Error::Structural(format!(
                "mask has {} entries for {} values",
                m.len(),
                values.len()
            )));
        }
    }
    if values.len() < lag + 2 {
        return Err(Error::insufficient(
            "lag regression series",
            lag + 2,
            values.len(),
        ));
    }
    let rows = usable_rows(values.len(), lag, mask);
    if rows.len() < 2 {
        return Err(Error::insufficient(
            "lag regression design rows",
            2,
            rows.len(),
        ));
    }

    let coefficients = ridge_solve(values, &rows, lag, penalty)?;
    let model = LagRegressionModel {
        coefficients,
        lag,
        penalty,
        residuals: Vec::new(),
        target: None,
    };
    let residuals = rows
        .iter()
        .map(|&t| values[t] - model.predict_next(&values[t - lag..t]))
        .collect();
    Ok(LagRegressionModel { residuals, ..model })
}

/// Choose the lag count minimizing the AIC over `lag_min..=lag_max`.
///
/// Every candidate is fitted unpenalized on the rows usable by the largest
/// candidate, so residual sums are comparable; `AIC = m ln(RSS/m) + 2(J+1)`.
/// Ties break toward the smaller lag.
pub fn select_lag(
    values: &[f64],
    mask: Option<&[bool]>,
    lag_min: usize,
    lag_max: usize,
) -> Result<usize> {
    if lag_min < 1 || lag_max < lag_min {
        return Err(Error::InvalidInput(format!(
            "lag range {lag_min}..={lag_max} is invalid"
        )));
    }
    check_finite(values)?;
    if values.len() < lag_max + 2 {
        return Err(Error::insufficient(
            "lag selection series",
            lag_max + 2,
            values.len(),
        ));
    }
    let rows = usable_rows(values.len(), lag_max, mask);
    let m = rows.len();
    if m < 2 {
        return Err(Error::insufficient("lag selection design rows", 2, m));
    }

    let targets: Vec<f64> = rows.iter().map(|&t| values[t]).collect();
    let target_mean = crate::stats::mean(&targets);
    let tss: f64 = targets.iter().map(|y| (y - target_mean).powi(2)).sum();

    let mut best_lag = lag_min;
    let mut best_aic = f64::INFINITY;
    for lag in lag_min..=lag_max {
        let coefficients = ridge_solve(values, &rows, lag, 0.0)?;
        let model = LagRegressionModel {
            coefficients,
            lag,
            penalty: 0.0,
            residuals: Vec::new(),
            target: None,
        };
        let rss: f64 = rows
            .iter()
            .map(|&t| {
                let e = values[t] - model.predict_next(&values[t - lag..t]);
                e * e
            })
            .sum();
        let aic = if rss <= tss * EXACT_FIT_REL {
            f64::NEG_INFINITY
        } else {
            m as f64 * (rss / m as f64).ln() + 2.0 * (lag + 1) as f64
        };
        if aic < best_aic {
            best_aic = aic;
            best_lag = lag;
        }
    }
    Ok(best_lag)
}

/// Choose the ridge penalty by forward-chaining cross-validation at a fixed
/// lag.
///
/// Validation positions after an initial `lag + 2` training prefix are split
/// into `folds` contiguous blocks; each fold trains on everything before its
/// block and scores one-step predictions inside it, so no fold ever validates
/// on data preceding its training segment. The grid value with the smallest
/// pooled mean squared error wins; ties break toward the larger penalty.
pub fn select_penalty(
    values: &[f64],
    mask: Option<&[bool]>,
    lag: usize,
    penalty_grid: &[f64],
    folds: usize,
) -> Result<f64> {
    if penalty_grid.is_empty() {
        return Err(Error::InvalidInput("penalty grid must not be empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidInput(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    check_finite(values)?;
    let min_train = lag + 2;
    let positions: Vec<usize> = usable_rows(values.len(), lag, mask)
        .into_iter()
        .filter(|&t| t >= min_train)
        .collect();
    if positions.len() < folds {
        return Err(Error::insufficient(
            "cross-validation points",
            folds,
            positions.len(),
        ));
    }

    // Contiguous blocks of near-equal size; earlier blocks take the remainder.
    let base = positions.len() / folds;
    let extra = positions.len() % folds;
    let mut blocks = Vec::with_capacity(folds);
    let mut cursor = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        blocks.push(&positions[cursor..cursor + size]);
        cursor += size;
    }

    let mut best_penalty = penalty_grid[0];
    let mut best_mse = f64::INFINITY;
    let mut first = true;
    for &penalty in penalty_grid {
        let mut total_se = 0.0;
        let mut count = 0usize;
        for block in &blocks {
            let train_end = block[0];
            let model = fit_masked(
                &values[..train_end],
                mask.map(|m| &m[..train_end]),
                lag,
                penalty,
            )?;
            for &t in *block {
                let e = values[t] - model.predict_next(&values[t - lag..t]);
                total_se += e * e;
                count += 1;
            }
        }
        let mse = total_se / count as f64;
        if first || mse < best_mse || (mse == best_mse && penalty > best_penalty) {
            best_mse = mse;
            best_penalty = penalty;
            first = false;
        }
    }
    Ok(best_penalty)
}

/// Iterate the regression recursively for `horizon` steps, feeding each
/// prediction back as a lag input. Predictions are clamped at zero before
/// reuse, matching the compartmental zero lower bound.
pub fn predict_path(
    model: &LagRegressionModel,
    history: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    if history.len() < model.lag {
        return Err(Error::insufficient(
            "prediction history",
            model.lag,
            history.len(),
        ));
    }
    check_finite(history)?;
    let mut window: Vec<f64> = history[history.len() - model.lag..].to_vec();
    let mut path = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let value = model.predict_next(&window).max(0.0);
        window.push(value);
        window.remove(0);
        path.push(value);
    }
    Ok(path)
}
