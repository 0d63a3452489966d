//! End-to-end analysis of a scenario from simulated counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::causal::{build_scenario, Cell, ScenarioId, Setting};
use crate::matlin::Label;
use crate::quantum::{fidelity, Outcome, PauliAxis};
use crate::tomography::{
    bootstrap_statistics, expected_counts, fit_causal_map, fit_conditioned_state, sample_counts, table_index,
    Conditioning, CountData, CountTable, ExpectedCounts, FitConfig, FitReport, Wire, DEFAULT_RUNS,
};
use crate::witness::{
    cdb_index, classify, negativity, witness_ccd0, witness_ccd_product_form, CdbDistribution, ClassLabel, PerOutcome,
    SettingValue, Thresholds, WitnessFlags, WitnessReport, WitnessStddev,
};
use crate::{Error, Result};

/// Default number of bootstrap resamples for error bars.
pub const DEFAULT_RESAMPLES: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// Use the expected counts themselves.
    None,
    Poisson,
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::None => "none",
            NoiseModel::Poisson => "poisson",
        })
    }
}

impl FromStr for NoiseModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoiseModel::None),
            "poisson" => Ok(NoiseModel::Poisson),
            other => Err(Error::Parse(format!("unknown noise model `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scenario: ScenarioId,
    pub n_runs: u64,
    pub seed: u64,
    pub noise: NoiseModel,
    pub fit: FitConfig,
    /// Bootstrap resamples for error bars; fewer than 2 disables them.
    pub resamples: usize,
    pub thresholds: Thresholds,
}

impl RunSpec {
    pub fn new(scenario: ScenarioId) -> Self {
        Self {
            scenario,
            n_runs: DEFAULT_RUNS,
            seed: 0,
            noise: NoiseModel::Poisson,
            fit: FitConfig::default(),
            resamples: DEFAULT_RESAMPLES,
            thresholds: Thresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::InvalidArgument("number of runs must be positive".into()));
        }
        self.fit.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub spec: RunSpec,
    /// Witnesses of the exact causal map.
    pub truth: WitnessReport,
    /// Witnesses estimated from the counts.
    pub fitted: WitnessReport,
    pub expected_label: ClassLabel,
    pub fidelity: f64,
    pub fit: FitReport,
    pub converged: bool,
}

impl PipelineReport {
    pub fn label_matches(&self) -> bool {
        self.fitted.label == self.expected_label
    }
}

/// How witnesses are estimated from a count table.
#[derive(Clone, Debug, PartialEq)]
pub struct CountWitnessOptions {
    pub fit: FitConfig,
    pub thresholds: Thresholds,
    pub resamples: usize,
    pub seed: u64,
    /// Search all 27 settings for a physical-mixture signal; only sound for noiseless data.
    pub scan_settings: bool,
}

impl Default for CountWitnessOptions {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            thresholds: Thresholds::default(),
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            scan_settings: false,
        }
    }
}

const CONDITIONINGS: [(Wire, usize); 3] = [(Wire::C, 0), (Wire::D, 1), (Wire::B, 2)];

/// `[N^c_BD(H), N^c_BD(V), N^d_CB(H), N^d_CB(V), N^b_CD(H), N^b_CD(V), C_CD]`.
fn count_statistics<D: CountData + ?Sized>(data: &D, cfg: &FitConfig) -> Result<[f64; 7]> {
    let mut out = [0.0; 7];
    for (wire, slot) in CONDITIONINGS {
        for (k, outcome) in Outcome::ALL.into_iter().enumerate() {
            let fit = fit_conditioned_state(data, Conditioning::new(wire, PauliAxis::Z, outcome), cfg)?;
            let over = if wire == Wire::D { Label::B } else { Label::D };
            out[2 * slot + k] = negativity(&fit.state, &over)?;
        }
    }
    out[6] = witness_ccd_product_form(&setting_distribution(data, Setting::XYZ)?);
    Ok(out)
}

fn setting_distribution<D: CountData + ?Sized>(data: &D, setting: Setting) -> Result<CdbDistribution> {
    let mut values = [0.0; 8];
    for cell in Cell::all() {
        values[cdb_index(cell.c, cell.d, cell.b)] = data.value(table_index(setting, cell));
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyCounts(format!("no counts at setting {setting}")));
    }
    CdbDistribution::new(values.map(|v| v / total))
}

fn per_outcome(values: &[f64]) -> PerOutcome {
    PerOutcome { H: values[0], V: values[1] }
}

/// Witnesses and class label estimated from counts. Negativities come from
/// conditioned reconstructions and `C_CD` from the counts at `(x, y, z)`.
/// Error bars, when requested, come from a Poisson bootstrap around `resample_around`.
pub fn classify_counts<D: CountData + ?Sized>(
    data: &D,
    resample_around: Option<&CountTable>,
    opts: &CountWitnessOptions,
) -> Result<WitnessReport> {
    let stats = count_statistics(data, &opts.fit)?;
    let xyz = setting_distribution(data, Setting::XYZ)?;
    let ccd_scan_max = if opts.scan_settings {
        let mut best = SettingValue { setting: Setting::XYZ, value: stats[6] };
        for setting in Setting::all() {
            let value = witness_ccd_product_form(&setting_distribution(data, setting)?);
            if value.abs() > best.value.abs() {
                best = SettingValue { setting, value };
            }
        }
        Some(best)
    } else {
        None
    };
    let stddev = match resample_around {
        Some(counts) if opts.resamples >= 2 => {
            let boot_cfg = FitConfig { restarts: 1, ..opts.fit.clone() };
            let summary = bootstrap_statistics(&ExpectedCounts::from_counts(counts), opts.resamples, opts.seed, |c| {
                count_statistics(c, &boot_cfg).map(|s| s.to_vec())
            })?;
            let sd = &summary.stddev;
            Some(WitnessStddev {
                neg_c_bd: per_outcome(&sd[0..2]),
                neg_d_cb: per_outcome(&sd[2..4]),
                neg_b_cd: per_outcome(&sd[4..6]),
                ccd: sd[6],
            })
        }
        _ => None,
    };
    let mut report = WitnessReport {
        neg_c_bd: per_outcome(&stats[0..2]),
        neg_d_cb: per_outcome(&stats[2..4]),
        neg_b_cd: per_outcome(&stats[4..6]),
        ccd: stats[6],
        ccd0: witness_ccd0(&xyz),
        ccd_setting: Setting::XYZ,
        ccd_scan_max,
        thresholds: opts.thresholds,
        stddev,
        flags: WitnessFlags::default(),
        label: ClassLabel::ProbC,
    };
    report.relabel(opts.thresholds);
    Ok(report)
}

/// Full analysis of one scenario from simulated counts.
pub fn run_pipeline(spec: &RunSpec) -> Result<PipelineReport> {
    spec.validate()?;
    let tau = build_scenario(spec.scenario)?;
    let truth = classify(&tau, spec.thresholds)?;
    let expected = expected_counts(&tau, spec.n_runs)?;
    let opts = CountWitnessOptions {
        fit: spec.fit.clone(),
        thresholds: spec.thresholds,
        resamples: spec.resamples,
        seed: spec.seed,
        scan_settings: spec.noise == NoiseModel::None,
    };
    let (fit, fitted) = match spec.noise {
        NoiseModel::None => (fit_causal_map(&expected, &spec.fit)?, classify_counts(&expected, None, &opts)?),
        NoiseModel::Poisson => {
            let counts = sample_counts(&expected, spec.seed);
            (fit_causal_map(&counts, &spec.fit)?, classify_counts(&counts, Some(&counts), &opts)?)
        }
    };
    Ok(PipelineReport {
        spec: spec.clone(),
        truth,
        fitted,
        expected_label: ClassLabel::expected_for(spec.scenario),
        fidelity: fidelity(fit.tau_hat.tau(), tau.tau())?,
        converged: fit.converged,
        fit: fit.report(),
    })
}
