//! Log-log growth-rate fits over a grid of horizons.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_HORIZONS: usize = 3;
pub const MIN_SEEDS: usize = 5;
const BOOTSTRAP_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% percentile bootstrap band on the slope (seeds resampled per horizon).
    pub band: (f64, f64),
    /// `(T, median)` per horizon.
    pub medians: Vec<(u64, f64)>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares slope of `ln(median metric)` against `ln T`.
///
/// `groups` maps each horizon to the per-seed metric values.
pub fn fit_slope(groups: &BTreeMap<u64, Vec<f64>>, bootstrap: usize) -> Result<SlopeFit> {
    if groups.len() < MIN_HORIZONS {
        return Err(Error::InsufficientData(format!(
            "{} distinct horizons, need at least {MIN_HORIZONS}",
            groups.len()
        )));
    }
    let mut medians = Vec::with_capacity(groups.len());
    for (&t, values) in groups {
        if values.len() < MIN_SEEDS {
            return Err(Error::InsufficientData(format!(
                "horizon {t} has {} seeds, need at least {MIN_SEEDS}",
                values.len()
            )));
        }
        let m = median(values);
        if !(m > 0.0) {
            return Err(Error::InsufficientData(format!(
                "median at horizon {t} is {m}, not positive"
            )));
        }
        medians.push((t, m));
    }
    let points: Vec<(f64, f64)> = medians
        .iter()
        .map(|&(t, m)| ((t as f64).ln(), m.ln()))
        .collect();
    let (slope, intercept) = least_squares(&points);

    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut slopes = Vec::with_capacity(bootstrap);
    'rep: for _ in 0..bootstrap {
        let mut pts = Vec::with_capacity(groups.len());
        for (&t, values) in groups {
            let resampled: Vec<f64> = (0..values.len())
                .map(|_| values[rng.random_range(0..values.len())])
                .collect();
            let m = median(&resampled);
            if !(m > 0.0) {
                continue 'rep;
            }
            pts.push(((t as f64).ln(), m.ln()));
        }
        slopes.push(least_squares(&pts).0);
    }
    let band = if slopes.is_empty() {
        (slope, slope)
    } else {
        slopes.sort_by(f64::total_cmp);
        let at = |q: f64| slopes[((slopes.len() - 1) as f64 * q).round() as usize];
        (at(0.025), at(0.975))
    };
    Ok(SlopeFit {
        slope,
        intercept,
        band,
        medians,
    })
}

/// Groups a metric column of summary CSVs by the `horizon` column.
///
/// Rows whose `status` is not `ok` are skipped.
pub fn read_summaries<P: AsRef<Path>>(
    paths: &[P],
    metric: &str,
) -> Result<BTreeMap<u64, Vec<f64>>> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for path in paths {
        let mut rdr = csv::Reader::from_path(path.as_ref())?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| {
                Error::InsufficientData(format!(
                    "{} has no column {name:?}",
                    path.as_ref().display()
                ))
            })
        };
        let (h_col, m_col) = (col("horizon")?, col(metric)?);
        let status_col = headers.iter().position(|h| h == "status");
        for row in rdr.records() {
            let row = row?;
            if status_col.is_some_and(|c| &row[c] != "ok") {
                continue;
            }
            let parse_err = |what: &str| {
                Error::InsufficientData(format!("unparsable {what} in {}", path.as_ref().display()))
            };
            let t: u64 = row[h_col].parse().map_err(|_| parse_err("horizon"))?;
            let v: f64 = row[m_col].parse().map_err(|_| parse_err(metric))?;
            groups.entry(t).or_default().push(v);
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64) -> BTreeMap<u64, Vec<f64>> {
        [1_000u64, 3_000, 10_000, 30_000, 100_000]
            .into_iter()
            .map(|t| (t, vec![f(t as f64); 5]))
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_slope(&grid(|t| 3.0 * t.sqrt()), 200).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-9);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
        assert!((fit.band.0 - 0.5).abs() < 1e-9 && (fit.band.1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constant_metric() {
        let fit = fit_slope(&grid(|_| 7.0), 50).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn insufficient_data() {
        let mut g = grid(|t| t);
        g.remove(&1_000);
        g.remove(&3_000);
        g.remove(&10_000);
        assert!(matches!(fit_slope(&g, 10), Err(Error::InsufficientData(_))));
        let mut g = grid(|t| t);
        g.get_mut(&1_000).unwrap().truncate(4);
        assert!(matches!(fit_slope(&g, 10), Err(Error::InsufficientData(_))));
        let g = grid(|_| -1.0);
        assert!(matches!(fit_slope(&g, 10), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
