//! Shared oracles and fixtures for the integration and acceptance suites.
//!
//! Every oracle here re-derives its answer through an independent route
//! (dense normal equations solved by Gauss-Jordan, explicit loops over the
//! metric formulas) so it can check the library without sharing code paths
//! with it.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use sirdcast::dataset::Dataset;
use sirdcast::geo::GeoUnit;
use sirdcast::series::{CompartmentSeries, SirdState};
use sirdcast::synthetic::generate_synthetic;

pub fn start_date() -> NaiveDate {
    "2020-03-01".parse().unwrap()
}

// ---------------------------------------------------------------------------
// Dense linear-algebra oracle
// ---------------------------------------------------------------------------

/// Solve `A x = b` by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        assert!(diag.abs() > 0.0, "oracle system is singular");
        for j in col..n {
            a[col][j] /= diag;
        }
        b[col] /= diag;
        for row in 0..n {
            if row != col {
                let factor = a[row][col];
                for j in col..n {
                    a[row][j] -= factor * a[col][j];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    b
}

/// Ridge regression by explicit normal equations `(X'X + lambda I) c = X'y`
/// over the rows `lag..len`, intercept penalized like every coefficient.
pub fn ridge_oracle(values: &[f64], lag: usize, lambda: f64) -> Vec<f64> {
    let p = lag + 1;
    let rows: Vec<usize> = (lag..values.len()).collect();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for &t in &rows {
        let mut x = vec![1.0];
        for j in 1..=lag {
            x.push(values[t - j]);
        }
        for i in 0..p {
            for j in 0..p {
                xtx[i][j] += x[i] * x[j];
            }
            xty[i] += x[i] * values[t];
        }
    }
    for i in 0..p {
        xtx[i][i] += lambda;
    }
    gauss_solve(xtx, xty)
}

/// Unpenalized least squares over an explicit row set (for the AIC oracle).
fn ols_on_rows(values: &[f64], rows: &[usize], lag: usize) -> Vec<f64> {
    let p = lag + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for &t in rows {
        let mut x = vec![1.0];
        for j in 1..=lag {
            x.push(values[t - j]);
        }
        for i in 0..p {
            for j in 0..p {
                xtx[i][j] += x[i] * x[j];
            }
            xty[i] += x[i] * values[t];
        }
    }
    gauss_solve(xtx, xty)
}

fn predict(coefs: &[f64], values: &[f64], t: usize) -> f64 {
    let lag = coefs.len() - 1;
    let mut v = coefs[0];
    for j in 1..=lag {
        v += coefs[j] * values[t - j];
    }
    v
}

/// Exhaustive AIC evaluation on the common window (rows usable by the
/// largest lag): `AIC = m ln(RSS/m) + 2 (J+1)`, ties to the smaller lag,
/// fits with `RSS <= TSS * 1e-20` scored as exact.
pub fn aic_oracle(values: &[f64], lag_min: usize, lag_max: usize) -> usize {
    let rows: Vec<usize> = (lag_max..values.len()).collect();
    let m = rows.len() as f64;
    let targets: Vec<f64> = rows.iter().map(|&t| values[t]).collect();
    let mean = targets.iter().sum::<f64>() / m;
    let tss: f64 = targets.iter().map(|y| (y - mean) * (y - mean)).sum();

    let mut best = (f64::INFINITY, lag_min);
    for lag in lag_min..=lag_max {
        let coefs = ols_on_rows(values, &rows, lag);
        let rss: f64 = rows
            .iter()
            .map(|&t| {
                let e = values[t] - predict(&coefs, values, t);
                e * e
            })
            .sum();
        let aic = if rss <= tss * 1e-20 {
            f64::NEG_INFINITY
        } else {
            m * (rss / m).ln() + 2.0 * (lag + 1) as f64
        };
        if aic < best.0 {
            best = (aic, lag);
        }
    }
    best.1
}

/// Ridge over an explicit prefix for the CV oracle.
fn ridge_on_prefix(values: &[f64], lag: usize, lambda: f64) -> Vec<f64> {
    ridge_oracle(values, lag, lambda)
}

/// Exhaustive forward-chaining cross-validation: validation positions after
/// a `lag + 2` training prefix split into contiguous near-equal blocks, each
/// fold trained on everything before its block; smallest pooled MSE wins,
/// ties to the larger penalty.
pub fn cv_oracle(values: &[f64], lag: usize, grid: &[f64], folds: usize) -> f64 {
    let min_train = lag + 2;
    let positions: Vec<usize> = (min_train..values.len()).collect();
    assert!(positions.len() >= folds, "oracle fixture too short");
    let base = positions.len() / folds;
    let extra = positions.len() % folds;
    let mut blocks = Vec::new();
    let mut cursor = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        blocks.push(positions[cursor..cursor + size].to_vec());
        cursor += size;
    }

    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let mut se = 0.0;
        let mut count = 0usize;
        for block in &blocks {
            let train_end = block[0];
            let coefs = ridge_on_prefix(&values[..train_end], lag, lambda);
            for &t in block {
                let e = values[t] - predict(&coefs, values, t);
                se += e * e;
                count += 1;
            }
        }
        let mse = se / count as f64;
        best = match best {
            None => Some((mse, lambda)),
            Some((bm, bl)) if mse < bm || (mse == bm && lambda > bl) => Some((mse, lambda)),
            keep => keep,
        };
    }
    best.unwrap().1
}

// ---------------------------------------------------------------------------
// Synthetic worlds
// ---------------------------------------------------------------------------

/// A multi-region synthetic epidemic with noisy time-varying parameters.
pub struct SyntheticWorld {
    pub dataset: Dataset,
    pub provinces: Vec<String>,
    pub regions: Vec<String>,
}

/// Mean-reverting multiplicative noise: `u_t = phi u_{t-1} + N(0, sigma)`,
/// applied as `exp(u_t)`.
fn noisy_path(
    rng: &mut ChaCha8Rng,
    base: impl Fn(usize) -> f64,
    phi: f64,
    sigma: f64,
    len: usize,
) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut u = 0.0;
    (0..len)
        .map(|t| {
            u = phi * u + normal.sample(rng);
            (base(t) * u.exp()).max(0.0)
        })
        .collect()
}

/// Build a world of `regions_count * per_region` provinces over `days`
/// observations. Parameter paths share a regional trend with per-province
/// AR(1) log-noise, so peer aggregation genuinely helps and forecast error
/// grows with the horizon.
pub fn build_world(seed: u64, regions_count: usize, per_region: usize, days: usize) -> SyntheticWorld {
    let steps = days - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series_list = Vec::new();
    let mut provinces = Vec::new();
    let mut regions = Vec::new();

    for r in 0..regions_count {
        let region_id = format!("r{r:02}");
        let region_shift = 1.0 + 0.1 * (r as f64 - regions_count as f64 / 2.0) / regions_count as f64;
        let mut member_series = Vec::new();

        for p in 0..per_region {
            let province_id = format!("{region_id}p{p:02}");
            let population = rng.random_range(150_000..900_000);
            let i0 = rng.random_range(80.0..400.0);
            let beta = noisy_path(
                &mut rng,
                |t| region_shift * (0.34 - 0.004 * t as f64).max(0.06),
                0.75,
                0.07,
                steps,
            );
            let gamma_r = noisy_path(&mut rng, |_| 0.045, 0.7, 0.05, steps);
            let gamma_d = noisy_path(&mut rng, |_| 0.015, 0.7, 0.05, steps);

            let unit = GeoUnit::province(&province_id, &region_id, population).unwrap();
            let initial =
                SirdState::new(population as f64 - i0, i0, 0.0, 0.0, population).unwrap();
            let series =
                generate_synthetic(&unit, start_date(), &initial, &beta, &gamma_r, &gamma_d)
                    .unwrap();
            provinces.push(province_id);
            member_series.push(series);
        }

        // The region series is the exact sum of its provinces.
        let region_population: u64 = member_series.iter().map(|s| s.unit().population).sum();
        let region_unit = GeoUnit::region(&region_id, region_population).unwrap();
        let len = member_series[0].len();
        let sum_of = |pick: fn(&CompartmentSeries, usize) -> f64| -> Vec<f64> {
            (0..len)
                .map(|idx| member_series.iter().map(|s| pick(s, idx)).sum())
                .collect()
        };
        let region_series = CompartmentSeries::new(
            region_unit,
            member_series[0].dates().to_vec(),
            sum_of(|s, i| s.susceptible()[i]),
            sum_of(|s, i| s.infected()[i]),
            sum_of(|s, i| s.recovered()[i]),
            sum_of(|s, i| s.deceased()[i]),
            sum_of(|s, i| s.total_cases()[i]),
        )
        .unwrap();

        regions.push(region_id);
        series_list.extend(member_series);
        series_list.push(region_series);
    }

    SyntheticWorld {
        dataset: Dataset::from_series(series_list, []),
        provinces,
        regions,
    }
}

/// A world where every province follows the same exact AR(1) transmission
/// recurrence and constant removal rates, with identical initial conditions:
/// pooling preserves the recurrence and forecasts can be exact.
pub fn build_exact_ar_world(regions_count: usize, per_region: usize, days: usize) -> SyntheticWorld {
    let steps = days - 1;
    let mut beta = vec![0.32];
    for t in 1..steps {
        beta.push((0.06 + 0.75 * beta[t - 1]).max(0.0));
    }
    let gamma_r = vec![0.05; steps];
    let gamma_d = vec![0.012; steps];

    let mut series_list = Vec::new();
    let mut provinces = Vec::new();
    let mut regions = Vec::new();
    for r in 0..regions_count {
        let region_id = format!("r{r:02}");
        let mut member_series = Vec::new();
        for p in 0..per_region {
            let province_id = format!("{region_id}p{p:02}");
            let population = 500_000u64;
            let unit = GeoUnit::province(&province_id, &region_id, population).unwrap();
            let initial = SirdState::new(499_800.0, 200.0, 0.0, 0.0, population).unwrap();
            let series =
                generate_synthetic(&unit, start_date(), &initial, &beta, &gamma_r, &gamma_d)
                    .unwrap();
            provinces.push(province_id);
            member_series.push(series);
        }
        let region_population: u64 = member_series.iter().map(|s| s.unit().population).sum();
        let region_unit = GeoUnit::region(&region_id, region_population).unwrap();
        let len = member_series[0].len();
        let sum_of = |pick: fn(&CompartmentSeries, usize) -> f64| -> Vec<f64> {
            (0..len)
                .map(|idx| member_series.iter().map(|s| pick(s, idx)).sum())
                .collect()
        };
        let region_series = CompartmentSeries::new(
            region_unit,
            member_series[0].dates().to_vec(),
            sum_of(|s, i| s.susceptible()[i]),
            sum_of(|s, i| s.infected()[i]),
            sum_of(|s, i| s.recovered()[i]),
            sum_of(|s, i| s.deceased()[i]),
            sum_of(|s, i| s.total_cases()[i]),
        )
        .unwrap();
        regions.push(region_id);
        series_list.extend(member_series);
        series_list.push(region_series);
    }

    SyntheticWorld {
        dataset: Dataset::from_series(series_list, []),
        provinces,
        regions,
    }
}

// ---------------------------------------------------------------------------
// Random series helpers
// ---------------------------------------------------------------------------

pub fn uniform_series(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// AR(p) series with Gaussian noise, clamped away from drift explosions.
pub fn noisy_ar(rng: &mut ChaCha8Rng, c0: f64, coefs: &[f64], sigma: f64, len: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut y: Vec<f64> = (0..coefs.len()).map(|_| c0 + normal.sample(rng)).collect();
    for t in coefs.len()..len {
        let mut v = c0;
        for (j, c) in coefs.iter().enumerate() {
            v += c * y[t - 1 - j];
        }
        y.push(v + normal.sample(rng));
    }
    y
}
