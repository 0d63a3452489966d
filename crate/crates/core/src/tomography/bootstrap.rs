use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_counts_stream, CountTable, ExpectedCounts};
use crate::{Error, Result};

/// Per-statistic sample mean and standard deviation over the resamples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
    pub resamples: usize,
}

/// Draws `n_resamples` Poisson tables around `expected`, each on its own
/// stream of `seed`, and summarizes the statistics computed on each.
pub fn bootstrap_statistics<F>(
    expected: &ExpectedCounts,
    n_resamples: usize,
    seed: u64,
    statistic: F,
) -> Result<BootstrapSummary>
where
    F: Fn(&CountTable) -> Result<Vec<f64>> + Sync,
{
    if n_resamples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 resamples, got {n_resamples}")));
    }
    // stream 0 is what `sample_counts` uses for the data itself
    let samples: Vec<Vec<f64>> = (0..n_resamples)
        .into_par_iter()
        .map(|i| statistic(&sample_counts_stream(expected, seed, i as u64 + 1)))
        .collect::<Result<_>>()?;
    let width = samples[0].len();
    if samples.iter().any(|s| s.len() != width) {
        return Err(Error::InvariantViolation("statistic returned varying lengths".into()));
    }
    let n = n_resamples as f64;
    let mean: Vec<f64> = (0..width).map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / n).collect();
    let stddev = (0..width)
        .map(|k| (samples.iter().map(|s| (s[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    Ok(BootstrapSummary { mean, stddev, resamples: n_resamples })
}

/// Mean and standard deviation of a single statistic.
pub fn bootstrap_errorbars<F>(expected: &ExpectedCounts, n_resamples: usize, seed: u64, statistic: F) -> Result<(f64, f64)>
where
    F: Fn(&CountTable) -> Result<f64> + Sync,
{
    let summary = bootstrap_statistics(expected, n_resamples, seed, |c| statistic(c).map(|v| vec![v]))?;
    Ok((summary.mean[0], summary.stddev[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::{build_scenario, ScenarioId, Setting};
    use crate::tomography::expected_counts;
    use crate::witness::witness_ccd_from_counts;

    #[test]
    fn constant_statistic_has_no_spread() {
        let e = expected_counts(&build_scenario(ScenarioId::Coh).unwrap(), 1000).unwrap();
        let (mean, sd) = bootstrap_errorbars(&e, 5, 1, |_| Ok(3.0)).unwrap();
        assert_eq!((mean, sd), (3.0, 0.0));
        assert!(bootstrap_errorbars(&e, 1, 1, |_| Ok(3.0)).is_err());
    }

    #[test]
    fn ccd_spread_shrinks_with_runs() {
        let tau = build_scenario(ScenarioId::Coh).unwrap();
        let sd = |n: u64| {
            let e = expected_counts(&tau, n).unwrap();
            bootstrap_errorbars(&e, 300, 2, |c| witness_ccd_from_counts(&c.cdb_counts(Setting::XYZ))).unwrap().1
        };
        let ratio = sd(10_000) / sd(1_000_000);
        assert!((ratio / 10.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn results_do_not_depend_on_scheduling() {
        let e = expected_counts(&build_scenario(ScenarioId::ProbQ).unwrap(), 5000).unwrap();
        let stat = |c: &CountTable| Ok(vec![c.counts()[0] as f64, c.total_counts() as f64]);
        let a = bootstrap_statistics(&e, 16, 9, stat).unwrap();
        let b = bootstrap_statistics(&e, 16, 9, stat).unwrap();
        assert_eq!(a, b);
    }
}
