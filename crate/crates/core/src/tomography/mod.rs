//! Count statistics of the 27-setting experiment and reconstruction of causal
//! maps and conditioned states from them.

mod bootstrap;
mod fit;
pub(crate) mod lm;

use std::io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::causal::{CausalChoi, Cell, Setting};
use crate::quantum::{Outcome, PauliAxis};
use crate::witness::cdb_index;
use crate::{Error, Result};

pub use bootstrap::{bootstrap_errorbars, bootstrap_statistics, BootstrapSummary};
pub use fit::{
    fit_causal_map, fit_conditioned_state, ConditionedFit, Conditioning, FitConfig, FitReport, FitResult, Wire,
};

pub const SETTING_COUNT: usize = 27;
pub const CELL_COUNT: usize = 8;
pub const TABLE_SIZE: usize = SETTING_COUNT * CELL_COUNT;

/// Default number of runs: about a thousand counts per setting.
pub const DEFAULT_RUNS: u64 = 200_000;

/// Position of `(setting, cell)` in a flat table, settings in [`Setting::all`]
/// order and cells in [`Cell::all`] order.
pub fn table_index(setting: Setting, cell: Cell) -> usize {
    let axis = |a: PauliAxis| PauliAxis::ALL.iter().position(|&x| x == a).expect("axis listed");
    let bit = |o: Outcome| usize::from(o == Outcome::Minus);
    let s = axis(setting.s) * 9 + axis(setting.t) * 3 + axis(setting.u);
    s * CELL_COUNT + bit(cell.c) * 4 + bit(cell.b) * 2 + bit(cell.d)
}

/// All 216 `(setting, cell)` pairs in table order.
pub fn table_entries() -> impl Iterator<Item = (Setting, Cell)> {
    Setting::all().flat_map(|s| Cell::all().map(move |c| (s, c)))
}

/// Anything that can be fitted: integer counts or their real-valued expectation.
pub trait CountData {
    /// Value at a flat [`table_index`].
    fn value(&self, index: usize) -> f64;

    fn total(&self) -> f64 {
        (0..TABLE_SIZE).map(|k| self.value(k)).sum()
    }
}

/// Observed coincidence counts for every setting and outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    counts: Vec<u64>,
    total_runs: u64,
}

impl CountTable {
    /// `counts` in table order; `total_runs` is the nominal number of runs.
    pub fn new(counts: Vec<u64>, total_runs: u64) -> Result<Self> {
        if counts.len() != TABLE_SIZE {
            return Err(Error::DimensionMismatch { expected: TABLE_SIZE, got: counts.len() });
        }
        Ok(Self { counts, total_runs })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_runs(&self) -> u64 {
        self.total_runs
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, setting: Setting, cell: Cell) -> u64 {
        self.counts[table_index(setting, cell)]
    }

    /// Counts of one setting arranged for the witness functions (`(c, d, b)` order).
    pub fn cdb_counts(&self, setting: Setting) -> [u64; 8] {
        let mut out = [0; 8];
        for cell in Cell::all() {
            out[cdb_index(cell.c, cell.d, cell.b)] = self.get(setting, cell);
        }
        out
    }

    /// Writes `s,t,u,c,b,d,count`, one row per cell.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["s", "t", "u", "c", "b", "d", "count"])?;
        for (setting, cell) in table_entries() {
            w.write_record([
                setting.s.to_string(),
                setting.t.to_string(),
                setting.u.to_string(),
                cell.c.to_string(),
                cell.b.to_string(),
                cell.d.to_string(),
                self.get(setting, cell).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`CountTable::write_csv`]; missing rows are zero
    /// and the total number of runs is taken to be the sum of the counts.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header != ["s", "t", "u", "c", "b", "d", "count"] {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let mut counts = vec![0u64; TABLE_SIZE];
        let mut seen = vec![false; TABLE_SIZE];
        for record in r.records() {
            let record = record?;
            let field = |k: usize| record[k].trim();
            let setting = Setting::new(field(0).parse()?, field(1).parse()?, field(2).parse()?);
            let cell = Cell::new(field(3).parse()?, field(4).parse()?, field(5).parse()?);
            let n: u64 = field(6).parse().map_err(|e| Error::Parse(format!("count `{}`: {e}", field(6))))?;
            let k = table_index(setting, cell);
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::Parse(format!("duplicate row for {setting} {cell:?}")));
            }
            counts[k] = n;
        }
        let total = counts.iter().sum();
        Self::new(counts, total)
    }
}

impl CountData for CountTable {
    fn value(&self, index: usize) -> f64 {
        self.counts[index] as f64
    }
}

/// Mean counts predicted by a causal map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCounts {
    means: Vec<f64>,
    total_runs: u64,
}

impl ExpectedCounts {
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn total_runs(&self) -> u64 {
        self.total_runs
    }

    pub fn get(&self, setting: Setting, cell: Cell) -> f64 {
        self.means[table_index(setting, cell)]
    }

    /// Uses observed counts as the means, for resampling around data.
    pub fn from_counts(counts: &CountTable) -> Self {
        Self { means: counts.counts.iter().map(|&n| n as f64).collect(), total_runs: counts.total_runs }
    }

    /// Average of two tables, cell by cell.
    pub fn average(&self, other: &Self) -> Self {
        Self {
            means: self.means.iter().zip(&other.means).map(|(a, b)| 0.5 * (a + b)).collect(),
            total_runs: (self.total_runs + other.total_runs) / 2,
        }
    }
}

impl CountData for ExpectedCounts {
    fn value(&self, index: usize) -> f64 {
        self.means[index]
    }
}

/// `(N/27) Tr[τ Π^{s,c} ⊗ Π^{u,b} ⊗ T(Π^{t,d})]` for every cell: settings are
/// uniform and each preparation outcome has probability ½.
pub fn expected_counts(tau: &CausalChoi, n_runs: u64) -> Result<ExpectedCounts> {
    if n_runs == 0 {
        return Err(Error::InvalidArgument("number of runs must be positive".into()));
    }
    let scale = n_runs as f64 / SETTING_COUNT as f64;
    let means = table_entries().map(|(s, c)| scale * tau.cell_weight(s, c).max(0.0)).collect();
    Ok(ExpectedCounts { means, total_runs: n_runs })
}

/// Independent Poisson draws around each expected cell.
pub fn sample_counts(expected: &ExpectedCounts, seed: u64) -> CountTable {
    sample_counts_stream(expected, seed, 0)
}

/// [`sample_counts`] on an independent ChaCha stream, one per resample.
pub fn sample_counts_stream(expected: &ExpectedCounts, seed: u64, stream: u64) -> CountTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let counts = expected
        .means
        .iter()
        .map(|&mean| match Poisson::new(mean) {
            Ok(dist) => dist.sample(&mut rng) as u64,
            Err(_) => 0,
        })
        .collect();
    CountTable { counts, total_runs: expected.total_runs }
}
