//! Discrete-time SIRD machinery: forward stepping, parameter extraction by
//! inverting the difference equations, and the basic reproduction number.
//!
//! The model advances by one-day flows:
//!
//! ```text
//! S(t+1) - S(t) = -beta(t) S(t) I(t) / n
//! I(t+1) - I(t) = (beta(t) S(t) / n - gamma_r(t) - gamma_d(t)) I(t)
//! R(t+1) - R(t) = gamma_r(t) I(t)
//! D(t+1) - D(t) = gamma_d(t) I(t)
//! ```

use crate::error::{Error, Result};
use crate::series::{CompartmentSeries, ParameterSeries, SirdState};

/// The three time-varying model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Beta,
    GammaR,
    GammaD,
}

impl ParamKind {
    pub const ALL: [ParamKind; 3] = [ParamKind::Beta, ParamKind::GammaR, ParamKind::GammaD];

    pub fn label(&self) -> &'static str {
        match self {
            ParamKind::Beta => "beta",
            ParamKind::GammaR => "gamma_r",
            ParamKind::GammaD => "gamma_d",
        }
    }
}

impl std::fmt::Display for ParamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

fn check_rate(label: &str, rate: f64) -> Result<()> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidInput(format!(
            "{label} must be finite and non-negative, got {rate}"
        )));
    }
    Ok(())
}

/// Advance the state by one day under the given rates.
///
/// Flows are computed exactly from the difference equations, then capped so
/// no compartment goes negative: the infection flow is capped at `S(t)`, and
/// when the combined outflow `gamma_r I + gamma_d I` exceeds `I(t)` both
/// flows are scaled down proportionally. Because the update moves flows
/// between compartments, `s + i + r + d = n` is preserved to rounding.
pub fn step(state: &SirdState, beta: f64, gamma_r: f64, gamma_d: f64) -> Result<SirdState> {
    check_rate("beta", beta)?;
    check_rate("gamma_r", gamma_r)?;
    check_rate("gamma_d", gamma_d)?;
    if !state.conserves() {
        return Err(Error::InvalidInput(
            "state does not conserve the population".into(),
        ));
    }

    let n = state.n as f64;
    let mut infections = beta * state.s * state.i / n;
    if infections > state.s {
        infections = state.s;
    }
    let mut recoveries = gamma_r * state.i;
    let mut deaths = gamma_d * state.i;
    let outflow = recoveries + deaths;
    if outflow > state.i {
        let scale = state.i / outflow;
        recoveries *= scale;
        deaths *= scale;
    }

    Ok(SirdState {
        s: state.s - infections,
        i: state.i + infections - recoveries - deaths,
        r: state.r + recoveries,
        d: state.d + deaths,
        n: state.n,
    })
}

/// Recover the daily parameter series from an observed compartment series by
/// inverting the difference equations.
///
/// For each day `t` with `I(t) > 0` and `S(t) > 0`:
///
/// ```text
/// gamma_r(t) = (R(t+1) - R(t)) / I(t)
/// gamma_d(t) = (D(t+1) - D(t)) / I(t)
/// beta(t)    = -n (S(t+1) - S(t)) / (S(t) I(t))
/// ```
///
/// Negative extracted values (recount artifacts) are clamped to zero and
/// flagged; days with `I(t) = 0` or `S(t) = 0` are marked undefined. The
/// output has one entry per transition, so its length is `series.len() - 1`.
pub fn extract_parameters(series: &CompartmentSeries) -> Result<ParameterSeries> {
    if series.len() < 2 {
        return Err(Error::insufficient(
            "parameter extraction",
            2,
            series.len(),
        ));
    }

    let n = series.unit().population as f64;
    let len = series.len() - 1;
    let mut beta = vec![0.0; len];
    let mut gamma_r = vec![0.0; len];
    let mut gamma_d = vec![0.0; len];
    let mut defined = vec![false; len];
    let mut clamped = vec![false; len];

    let s = series.susceptible();
    let i = series.infected();
    let r = series.recovered();
    let d = series.deceased();

    for t in 0..len {
        if i[t] <= 0.0 || s[t] <= 0.0 {
            continue;
        }
        defined[t] = true;
        let mut b = -n * (s[t + 1] - s[t]) / (s[t] * i[t]);
        let mut gr = (r[t + 1] - r[t]) / i[t];
        let mut gd = (d[t + 1] - d[t]) / i[t];
        for v in [&mut b, &mut gr, &mut gd] {
            if *v < 0.0 {
                *v = 0.0;
                clamped[t] = true;
            }
        }
        beta[t] = b;
        gamma_r[t] = gr;
        gamma_d[t] = gd;
    }

    Ok(ParameterSeries {
        dates: series.dates()[..len].to_vec(),
        beta,
        gamma_r,
        gamma_d,
        defined,
        clamped,
    })
}

/// Basic reproduction number `beta / (gamma_r + gamma_d)`.
///
/// `None` when the removal rate is zero, where the ratio is undefined.
pub fn r0(beta: f64, gamma_r: f64, gamma_d: f64) -> Option<f64> {
    let removal = gamma_r + gamma_d;
    if removal == 0.0 {
        None
    } else {
        Some(beta / removal)
    }
}
