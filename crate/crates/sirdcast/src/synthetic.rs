//! Synthetic epidemic generator: the exact trajectory of the difference
//! equations under given parameter paths. Used as the testing oracle for
//! extraction, forecasting, and the backtest harness.

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::geo::GeoUnit;
use crate::series::{CompartmentSeries, SirdState};
use crate::sird::step;

/// Roll the difference equations forward from `initial` under the given
/// daily parameter paths.
///
/// All three paths must have the same length `L >= 1`; the result has `L + 1`
/// observations starting at `start`.
pub fn generate_synthetic(
    unit: &GeoUnit,
    start: NaiveDate,
    initial: &SirdState,
    beta_path: &[f64],
    gamma_r_path: &[f64],
    gamma_d_path: &[f64],
) -> Result<CompartmentSeries> {
    let steps = beta_path.len();
    if steps == 0 {
        return Err(Error::InvalidInput(
            "parameter paths must contain at least one step".into(),
        ));
    }
    if gamma_r_path.len() != steps || gamma_d_path.len() != steps {
        return Err(Error::InvalidInput(format!(
            "parameter paths differ in length: beta {}, gamma_r {}, gamma_d {}",
            steps,
            gamma_r_path.len(),
            gamma_d_path.len()
        )));
    }
    if initial.n != unit.population {
        return Err(Error::InvalidInput(format!(
            "initial state population {} does not match unit population {}",
            initial.n, unit.population
        )));
    }
    if !initial.conserves() {
        return Err(Error::InvalidInput(
            "initial state does not conserve the population".into(),
        ));
    }

    let mut states = Vec::with_capacity(steps + 1);
    states.push(*initial);
    for k in 0..steps {
        let next = step(&states[k], beta_path[k], gamma_r_path[k], gamma_d_path[k])?;
        states.push(next);
    }

    let dates = (0..states.len())
        .map(|k| start + Days::new(k as u64))
        .collect();
    CompartmentSeries::new(
        unit.clone(),
        dates,
        states.iter().map(|st| st.s).collect(),
        states.iter().map(|st| st.i).collect(),
        states.iter().map(|st| st.r).collect(),
        states.iter().map(|st| st.d).collect(),
        states.iter().map(|st| st.i + st.r + st.d).collect(),
    )
}
