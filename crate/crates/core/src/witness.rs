//! Witnesses of quantum pathways, physical mixtures and the quantum Berkson
//! effect, and the resulting class label.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::causal::{CausalChoi, Cell, ScenarioId, Setting};
use crate::matlin::{trace_norm, Label};
use crate::quantum::{pauli_projector, DensityOperator, Outcome, PauliAxis};
use crate::{Error, Result};

/// Negativities below this are reported as exactly zero.
pub const NEGATIVITY_FLOOR: f64 = 1e-12;
pub const NOISELESS_THRESHOLD: f64 = 1e-6;
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// `½(‖T_over ρ‖₁ − 1)` for a two-qubit state.
pub fn negativity(rho: &DensityOperator, over: &Label) -> Result<f64> {
    if rho.shape().len() != 2 {
        return Err(Error::NotBipartite(rho.shape().len()));
    }
    let pt = rho.operator().partial_transpose(over)?;
    let n = 0.5 * (trace_norm(pt.matrix())? - 1.0);
    Ok(if n < NEGATIVITY_FLOOR { 0.0 } else { n })
}

/// Joint distribution of the three ±1 outcomes, indexed as `(c, d, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdbDistribution {
    probs: [f64; 8],
}

fn slot(c: Outcome, d: Outcome, b: Outcome) -> usize {
    let bit = |o: Outcome| usize::from(o == Outcome::Minus);
    (bit(c) << 2) | (bit(d) << 1) | bit(b)
}

impl CdbDistribution {
    /// `probs` in `(c, d, b)` order with `+1` before `-1`.
    pub fn new(probs: [f64; 8]) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < -NORMALIZATION_TOL) {
            return Err(Error::InvalidDistribution(format!("entry {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { probs })
    }

    pub fn from_fn(f: impl Fn(Outcome, Outcome, Outcome) -> f64) -> Result<Self> {
        let mut probs = [0.0; 8];
        for c in Outcome::ALL {
            for d in Outcome::ALL {
                for b in Outcome::ALL {
                    probs[slot(c, d, b)] = f(c, d, b);
                }
            }
        }
        Self::new(probs)
    }

    /// `P(c, d, b) = P(cb|d) u(d)` predicted by `tau` at `setting`.
    pub fn from_choi(tau: &CausalChoi, setting: Setting) -> Result<Self> {
        Self::from_fn(|c, d, b| 0.5 * tau.predict_probability(setting, Cell::new(c, b, d)))
    }

    /// Normalized counts `n(c, d, b)`, same ordering as [`CdbDistribution::new`].
    pub fn from_counts(counts: &[u64; 8]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyCounts("all eight cells are zero".into()));
        }
        let n = total as f64;
        Self::new(counts.map(|k| k as f64 / n))
    }

    pub fn get(&self, c: Outcome, d: Outcome, b: Outcome) -> f64 {
        self.probs[slot(c, d, b)]
    }

    pub fn probs(&self) -> &[f64; 8] {
        &self.probs
    }

    pub fn p_b(&self, b: Outcome) -> f64 {
        Outcome::ALL.iter().flat_map(|&c| Outcome::ALL.map(|d| self.get(c, d, b))).sum()
    }
}

/// Index of `(c, d, b)` in the eight-cell arrays used by the witness functions.
pub fn cdb_index(c: Outcome, d: Outcome, b: Outcome) -> usize {
    slot(c, d, b)
}

/// `C_CD = 2 Σ_b b P(b)² cov(c, d | b)`.
pub fn witness_ccd_from_distribution(p: &CdbDistribution) -> f64 {
    let mut total = 0.0;
    for b in Outcome::ALL {
        let pb = p.p_b(b);
        if pb <= 0.0 {
            continue;
        }
        let mut e_cd = 0.0;
        let mut e_c = 0.0;
        let mut e_d = 0.0;
        for c in Outcome::ALL {
            for d in Outcome::ALL {
                let q = p.get(c, d, b) / pb;
                e_cd += c.sign() * d.sign() * q;
                e_c += c.sign() * q;
                e_d += d.sign() * q;
            }
        }
        total += b.sign() * pb * pb * (e_cd - e_c * e_d);
    }
    2.0 * total
}

/// `8 Σ_b b [P(++b) P(−−b) − P(+−b) P(−+b)]`.
pub fn witness_ccd_product_form(p: &CdbDistribution) -> f64 {
    use Outcome::{Minus, Plus};
    8.0 * Outcome::ALL
        .iter()
        .map(|&b| b.sign() * (p.get(Plus, Plus, b) * p.get(Minus, Minus, b) - p.get(Plus, Minus, b) * p.get(Minus, Plus, b)))
        .sum::<f64>()
}

/// The product form evaluated on raw counts `n(c, d, b)` of one setting.
pub fn witness_ccd_from_counts(counts: &[u64; 8]) -> Result<f64> {
    use Outcome::{Minus, Plus};
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyCounts("all eight cells are zero".into()));
    }
    let n = |c, d, b| counts[slot(c, d, b)] as f64;
    let numerator: f64 = Outcome::ALL
        .iter()
        .map(|&b| b.sign() * (n(Plus, Plus, b) * n(Minus, Minus, b) - n(Plus, Minus, b) * n(Minus, Plus, b)))
        .sum();
    let t = total as f64;
    Ok(8.0 * numerator / (t * t))
}

/// Propagated one-sigma error of [`witness_ccd_from_counts`] for independent Poisson cells.
pub fn witness_ccd_counts_sigma(counts: &[u64; 8]) -> Result<f64> {
    let base = witness_ccd_from_counts(counts)?;
    let total: u64 = counts.iter().sum();
    let mut var = 0.0;
    // derivative of 8 X / T² with respect to one cell n_k: 8 (∂X/∂n_k) / T² − 2 C / T
    let t = total as f64;
    for c in Outcome::ALL {
        for d in Outcome::ALL {
            for b in Outcome::ALL {
                let k = slot(c, d, b);
                let partner = counts[slot(c.flip(), d.flip(), b)] as f64;
                let sign = c.sign() * d.sign() * b.sign();
                let grad = 8.0 * sign * partner / (t * t) - 2.0 * base / t;
                var += grad * grad * counts[k] as f64;
            }
        }
    }
    Ok(var.sqrt())
}

/// `C⁰_CD = Σ c d b P(c, d, b)`.
pub fn witness_ccd0(p: &CdbDistribution) -> f64 {
    let mut total = 0.0;
    for c in Outcome::ALL {
        for d in Outcome::ALL {
            for b in Outcome::ALL {
                total += c.sign() * d.sign() * b.sign() * p.get(c, d, b);
            }
        }
    }
    total
}

/// The five classes of causal maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    ProbC,
    PhysC,
    ProbQ,
    PhysQ,
    Coh,
}

impl ClassLabel {
    /// The class each example scenario is built to realize.
    pub fn expected_for(id: ScenarioId) -> Self {
        match id {
            ScenarioId::ProbC => ClassLabel::ProbC,
            ScenarioId::PhysC => ClassLabel::PhysC,
            ScenarioId::ProbQ => ClassLabel::ProbQ,
            ScenarioId::Coh => ClassLabel::Coh,
            ScenarioId::EpsilonMix(_) => ClassLabel::PhysQ,
        }
    }

    /// Combines the witnessed flags into the most specific class they certify.
    pub fn from_flags(flags: &WitnessFlags) -> Self {
        let quantum = flags.quantum_cause_effect && flags.quantum_common_cause;
        match (quantum, flags.berkson, flags.physical) {
            (true, true, _) => ClassLabel::Coh,
            (true, false, true) => ClassLabel::PhysQ,
            (true, false, false) => ClassLabel::ProbQ,
            (false, _, true) => ClassLabel::PhysC,
            (false, _, false) => ClassLabel::ProbC,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ClassLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "probc" => Ok(ClassLabel::ProbC),
            "physc" => Ok(ClassLabel::PhysC),
            "probq" => Ok(ClassLabel::ProbQ),
            "physq" => Ok(ClassLabel::PhysQ),
            "coh" => Ok(ClassLabel::Coh),
            other => Err(Error::Parse(format!("unknown class `{other}`"))),
        }
    }
}

/// A witness fires when it exceeds both its absolute threshold and, when
/// error bars are known, `sigmas` standard deviations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub negativity: f64,
    pub ccd: f64,
    pub sigmas: f64,
}

pub const DEFAULT_SIGMAS: f64 = 3.0;

impl Default for Thresholds {
    fn default() -> Self {
        Self { negativity: NOISELESS_THRESHOLD, ccd: NOISELESS_THRESHOLD, sigmas: DEFAULT_SIGMAS }
    }
}

impl Thresholds {
    fn exceeds(&self, value: f64, absolute: f64, sd: Option<f64>) -> bool {
        value > absolute.max(sd.map_or(0.0, |s| self.sigmas * s))
    }
}

/// One value per z-basis outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PerOutcome {
    pub H: f64,
    pub V: f64,
}

impl PerOutcome {
    pub fn get(&self, o: Outcome) -> f64 {
        match o {
            Outcome::Plus => self.H,
            Outcome::Minus => self.V,
        }
    }

    pub fn set(&mut self, o: Outcome, v: f64) {
        match o {
            Outcome::Plus => self.H = v,
            Outcome::Minus => self.V = v,
        }
    }

    pub fn min(&self) -> f64 {
        self.H.min(self.V)
    }
}

/// Which witnesses fired. A `false` flag means "not witnessed", not "absent".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFlags {
    pub quantum_cause_effect: bool,
    pub quantum_common_cause: bool,
    pub physical: bool,
    pub berkson: bool,
}

/// Standard deviations of the witnesses, e.g. from a bootstrap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WitnessStddev {
    pub neg_c_bd: PerOutcome,
    pub neg_d_cb: PerOutcome,
    pub neg_b_cd: PerOutcome,
    pub ccd: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingValue {
    pub setting: Setting,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub neg_c_bd: PerOutcome,
    pub neg_d_cb: PerOutcome,
    pub neg_b_cd: PerOutcome,
    pub ccd: f64,
    pub ccd0: f64,
    pub ccd_setting: Setting,
    /// Largest `|C_CD|` over all 27 settings, when the scan was run.
    pub ccd_scan_max: Option<SettingValue>,
    pub thresholds: Thresholds,
    pub stddev: Option<WitnessStddev>,
    pub flags: WitnessFlags,
    pub label: ClassLabel,
}

impl WitnessReport {
    /// Recomputes flags and label from the stored values and `thresholds`.
    pub fn relabel(&mut self, thresholds: Thresholds) {
        self.thresholds = thresholds;
        let sd = self.stddev;
        let both = |values: &PerOutcome, sds: Option<PerOutcome>| {
            Outcome::ALL
                .iter()
                .all(|&o| thresholds.exceeds(values.get(o), thresholds.negativity, sds.map(|s| s.get(o))))
        };
        let physical_value = self.ccd_scan_max.map_or(self.ccd.abs(), |m| m.value.abs().max(self.ccd.abs()));
        self.flags = WitnessFlags {
            quantum_cause_effect: both(&self.neg_c_bd, sd.map(|s| s.neg_c_bd)),
            quantum_common_cause: both(&self.neg_d_cb, sd.map(|s| s.neg_d_cb)),
            physical: thresholds.exceeds(physical_value, thresholds.ccd, sd.map(|s| s.ccd)),
            berkson: both(&self.neg_b_cd, sd.map(|s| s.neg_b_cd)),
        };
        self.label = ClassLabel::from_flags(&self.flags);
    }
}

/// Choices for [`classify_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub thresholds: Thresholds,
    /// Axis of the conditioning projectors on C, B and D.
    pub conditioning_axis: PauliAxis,
    /// Setting at which `C_CD` and `C⁰_CD` are reported.
    pub ccd_setting: Setting,
    /// Also search all 27 settings for a nonzero `C_CD`.
    pub scan_settings: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            conditioning_axis: PauliAxis::Z,
            ccd_setting: Setting::XYZ,
            scan_settings: true,
        }
    }
}

/// Pathway negativities `(N^c_BD, N^d_CB, N^b_CD)` conditioned on eigenstates of `axis`.
pub fn pathway_negativities(tau: &CausalChoi, axis: PauliAxis) -> Result<[PerOutcome; 3]> {
    let mut out = [PerOutcome::default(); 3];
    for o in Outcome::ALL {
        let proj = pauli_projector(axis, o);
        let neg_given = |res: Result<(DensityOperator, f64)>, over: Label| match res {
            Ok((state, _)) => negativity(&state, &over),
            Err(Error::UndefinedConditioning(_)) => Ok(0.0),
            Err(e) => Err(e),
        };
        out[0].set(o, neg_given(tau.given_c(&proj), Label::D)?);
        out[1].set(o, negativity(&tau.given_d(&proj)?, &Label::B)?);
        out[2].set(o, neg_given(tau.given_b(&proj), Label::D)?);
    }
    Ok(out)
}

pub fn classify(tau: &CausalChoi, thresholds: Thresholds) -> Result<WitnessReport> {
    classify_with(tau, ClassifyOptions { thresholds, ..ClassifyOptions::default() })
}

pub fn classify_with(tau: &CausalChoi, opts: ClassifyOptions) -> Result<WitnessReport> {
    let [neg_c_bd, neg_d_cb, neg_b_cd] = pathway_negativities(tau, opts.conditioning_axis)?;
    let dist = CdbDistribution::from_choi(tau, opts.ccd_setting)?;
    let ccd_scan_max = if opts.scan_settings {
        let mut best = SettingValue { setting: opts.ccd_setting, value: 0.0 };
        for setting in Setting::all() {
            let value = witness_ccd_from_distribution(&CdbDistribution::from_choi(tau, setting)?);
            if value.abs() > best.value.abs() {
                best = SettingValue { setting, value };
            }
        }
        Some(best)
    } else {
        None
    };
    let mut report = WitnessReport {
        neg_c_bd,
        neg_d_cb,
        neg_b_cd,
        ccd: witness_ccd_from_distribution(&dist),
        ccd0: witness_ccd0(&dist),
        ccd_setting: opts.ccd_setting,
        ccd_scan_max,
        thresholds: opts.thresholds,
        stddev: None,
        flags: WitnessFlags::default(),
        label: ClassLabel::ProbC,
    };
    report.relabel(opts.thresholds);
    Ok(report)
}
