//! Classical side: discrete joint distributions, mutual information, posterior
//! inversion for two competing causes, the two-term reduction of probabilistic
//! mixtures, and the mutual-information bound.

use std::fmt;
use std::io;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Probabilities must sum to one within this.
pub const NORMALIZATION_TOL: f64 = 1e-12;
const MIN_CONDITIONING_PROBABILITY: f64 = 1e-15;

/// Exact probability used by the mixture reduction.
pub type Exact = BigRational;

/// Scalar types a probability table can hold.
pub trait Probability: Clone + PartialOrd + fmt::Debug + Zero + One + std::ops::Div<Output = Self> {
    fn is_unit_sum(total: &Self) -> bool;
    fn to_f64(&self) -> f64;
}

impl Probability for f64 {
    fn is_unit_sum(total: &Self) -> bool {
        (total - 1.0).abs() <= NORMALIZATION_TOL
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Probability for Exact {
    fn is_unit_sum(total: &Self) -> bool {
        total.is_one()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Bits => x.log2(),
            LogBase::Nats => x.ln(),
        }
    }
}

/// A named discrete variable with values `0..cardinality`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Self {
        Self { name: name.into(), cardinality }
    }
}

/// Joint distribution over ordered variables, first variable slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(variables: Vec<Variable>, probs: Vec<f64>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidDistribution("no variables".into()));
        }
        if let Some(v) = variables.iter().find(|v| v.cardinality == 0) {
            return Err(Error::InvalidDistribution(format!("variable `{}` has no values", v.name)));
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidDistribution(format!("variable `{}` appears twice", v.name)));
            }
        }
        let size: usize = variables.iter().map(|v| v.cardinality).product();
        if probs.len() != size {
            return Err(Error::DimensionMismatch { expected: size, got: probs.len() });
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if !f64::is_unit_sum(&total) {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { variables, probs })
    }

    pub fn from_fn(variables: Vec<Variable>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let cards: Vec<usize> = variables.iter().map(|v| v.cardinality).collect();
        let probs = assignments(&cards).map(|a| f(&a)).collect();
        Self::new(variables, probs)
    }

    /// Normalizes nonnegative weights; fails if they sum to zero.
    pub fn from_weights(variables: Vec<Variable>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(variables, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.cardinality).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    fn flat_index(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.variables).fold(0, |acc, (x, v)| acc * v.cardinality + x)
    }

    /// Probability of one full assignment, in variable order.
    pub fn get(&self, values: &[usize]) -> f64 {
        assert_eq!(values.len(), self.variables.len(), "assignment length");
        self.probs[self.flat_index(values)]
    }

    /// Marginal over `names`, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<Self> {
        let keep = names.iter().map(|n| self.position(n)).collect::<Result<Vec<_>>>()?;
        let variables: Vec<Variable> = keep.iter().map(|&k| self.variables[k].clone()).collect();
        let cards: Vec<usize> = variables.iter().map(|v| v.cardinality).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        for (a, p) in assignments(&self.cardinalities()).zip(&self.probs) {
            let idx = keep.iter().zip(&cards).fold(0, |acc, (&k, &c)| acc * c + a[k]);
            probs[idx] += p;
        }
        Self::new(variables, probs)
    }

    /// Distribution of the other variables given `name = value`, and `P(name = value)`.
    pub fn condition(&self, name: &str, value: usize) -> Result<(Self, f64)> {
        let pos = self.position(name)?;
        if value >= self.variables[pos].cardinality {
            return Err(Error::InvalidArgument(format!("`{name}` has no value {value}")));
        }
        if self.variables.len() == 1 {
            return Err(Error::InvalidArgument("cannot condition a single-variable distribution".into()));
        }
        let rest: Vec<Variable> =
            self.variables.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, v)| v.clone()).collect();
        let weights: Vec<f64> = assignments(&self.cardinalities())
            .zip(&self.probs)
            .filter(|(a, _)| a[pos] == value)
            .map(|(_, p)| *p)
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= MIN_CONDITIONING_PROBABILITY {
            return Err(Error::UndefinedConditioning(total));
        }
        Ok((Self::new(rest, weights.into_iter().map(|w| w / total).collect())?, total))
    }

    pub fn entropy(&self, base: LogBase) -> f64 {
        -self.probs.iter().filter(|p| **p > 0.0).map(|p| p * base.log(*p)).sum::<f64>()
    }

    /// `I(X:Y)` in bits for a two-variable distribution.
    pub fn mutual_information(&self) -> Result<f64> {
        self.mutual_information_in(LogBase::Bits)
    }

    pub fn mutual_information_in(&self, base: LogBase) -> Result<f64> {
        if self.variables.len() != 2 {
            return Err(Error::NotBipartite(self.variables.len()));
        }
        let (nx, ny) = (self.variables[0].cardinality, self.variables[1].cardinality);
        let px: Vec<f64> = (0..nx).map(|x| (0..ny).map(|y| self.probs[x * ny + y]).sum()).collect();
        let py: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| self.probs[x * ny + y]).sum()).collect();
        let mut mi = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                let p = self.probs[x * ny + y];
                if p > 0.0 {
                    mi += p * base.log(p / (px[x] * py[y]));
                }
            }
        }
        Ok(mi.max(0.0))
    }

    /// `I(x:y | given = value)` in bits.
    pub fn conditional_mutual_information(&self, x: &str, y: &str, given: &str, value: usize) -> Result<f64> {
        let (conditioned, _) = self.marginal(&[x, y, given])?.condition(given, value)?;
        conditioned.mutual_information()
    }

    /// Writes one row per assignment with the variable names and `probability` as header.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        header.push("probability");
        w.write_record(&header)?;
        for (a, p) in assignments(&self.cardinalities()).zip(&self.probs) {
            let mut row: Vec<String> = a.iter().map(usize::to_string).collect();
            row.push(format!("{p:e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`JointDistribution::write_csv`]. Cardinalities are
    /// inferred from the largest value seen, and omitted rows have probability zero.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let n = header.len();
        if n < 2 || &header[n - 1] != "probability" {
            return Err(Error::Parse("last column must be `probability`".into()));
        }
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let values = (0..n - 1)
                .map(|k| record[k].trim().parse::<usize>().map_err(|e| Error::Parse(format!("{}: {e}", &record[k]))))
                .collect::<Result<Vec<_>>>()?;
            let p: f64 = record[n - 1].trim().parse().map_err(|e| Error::Parse(format!("{}: {e}", &record[n - 1])))?;
            rows.push((values, p));
        }
        let variables: Vec<Variable> = (0..n - 1)
            .map(|k| Variable::new(&header[k], rows.iter().map(|(v, _)| v[k] + 1).max().unwrap_or(1)))
            .collect();
        let cards: Vec<usize> = variables.iter().map(|v| v.cardinality).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        for (values, p) in rows {
            let idx = values.iter().zip(&cards).fold(0, |acc, (x, c)| acc * c + x);
            probs[idx] += p;
        }
        Self::new(variables, probs)
    }
}

/// Iterates all assignments of `cards`, last index fastest.
fn assignments(cards: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = cards.iter().product();
    (0..total).map(move |mut k| {
        let mut a = vec![0; cards.len()];
        for (slot, &c) in a.iter_mut().zip(cards).rev() {
            *slot = k % c;
            k /= c;
        }
        a
    })
}

/// Conditional table `P(outcome | input)`; each input column sums to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional<T> {
    outcomes: usize,
    inputs: usize,
    table: Vec<T>,
}

impl<T: Probability> Conditional<T> {
    pub fn from_fn(outcomes: usize, inputs: usize, f: impl Fn(usize, usize) -> T) -> Result<Self> {
        if outcomes == 0 || inputs == 0 {
            return Err(Error::InvalidDistribution("empty conditional table".into()));
        }
        let mut table = Vec::with_capacity(outcomes * inputs);
        for x in 0..inputs {
            let mut total = T::zero();
            for o in 0..outcomes {
                let p = f(o, x);
                if !(p >= T::zero()) {
                    return Err(Error::InvalidDistribution(format!("P({o}|{x}) = {p:?} is not a probability")));
                }
                total = total + p.clone();
                table.push(p);
            }
            if !T::is_unit_sum(&total) {
                return Err(Error::NotNormalized(total.to_f64()));
            }
        }
        Ok(Self { outcomes, inputs, table })
    }

    pub fn uniform(outcomes: usize, inputs: usize) -> Result<Self> {
        let n = (0..outcomes).fold(T::zero(), |acc, _| acc + T::one());
        Self::from_fn(outcomes, inputs, |_, _| T::one() / n.clone())
    }

    /// Outcome `rule(input)` with certainty.
    pub fn deterministic(outcomes: usize, inputs: usize, rule: impl Fn(usize) -> usize) -> Result<Self> {
        Self::from_fn(outcomes, inputs, |o, x| if rule(x) == o { T::one() } else { T::zero() })
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn get(&self, outcome: usize, input: usize) -> &T {
        &self.table[input * self.outcomes + outcome]
    }
}

/// `P(B | D E) = (1 − p) P_D(B | D) + p P_E(B | E)` with uniform priors on `D` and `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalMixtureSpec {
    weight: f64,
    mechanism_d: Conditional<f64>,
    mechanism_e: Conditional<f64>,
}

impl ClassicalMixtureSpec {
    pub fn new(weight: f64, mechanism_d: Conditional<f64>, mechanism_e: Conditional<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidArgument(format!("mixture weight {weight} outside [0, 1]")));
        }
        if mechanism_d.outcomes() != mechanism_e.outcomes() {
            return Err(Error::DimensionMismatch { expected: mechanism_d.outcomes(), got: mechanism_e.outcomes() });
        }
        Ok(Self { weight, mechanism_d, mechanism_e })
    }

    /// `p = ½` with `B` copying `D` under one mechanism and `E` under the other.
    pub fn extremal(n: usize) -> Result<Self> {
        let copy = Conditional::deterministic(n, n, |x| x)?;
        Self::new(0.5, copy.clone(), copy)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mechanism_d(&self) -> &Conditional<f64> {
        &self.mechanism_d
    }

    pub fn mechanism_e(&self) -> &Conditional<f64> {
        &self.mechanism_e
    }

    pub fn outcome_count(&self) -> usize {
        self.mechanism_d.outcomes()
    }

    pub fn likelihood(&self, b: usize, d: usize, e: usize) -> f64 {
        (1.0 - self.weight) * self.mechanism_d.get(b, d) + self.weight * self.mechanism_e.get(b, e)
    }

    /// Joint over `(D, E, B)`.
    pub fn joint(&self) -> Result<JointDistribution> {
        let (nd, ne) = (self.mechanism_d.inputs(), self.mechanism_e.inputs());
        let prior = 1.0 / (nd * ne) as f64;
        JointDistribution::from_fn(
            vec![Variable::new("D", nd), Variable::new("E", ne), Variable::new("B", self.outcome_count())],
            |a| prior * self.likelihood(a[2], a[0], a[1]),
        )
    }
}

/// Posterior over the two causes after observing the effect.
#[derive(Clone, Debug, PartialEq)]
pub struct BerksonPosterior {
    /// Joint over `(D, E)`.
    pub joint: JointDistribution,
    /// Posterior probability that the `E` mechanism produced the observation.
    pub q: f64,
}

impl BerksonPosterior {
    pub fn mutual_information(&self) -> f64 {
        self.joint.mutual_information().unwrap_or(0.0)
    }
}

fn mean_column(mech: &Conditional<f64>, b: usize) -> f64 {
    (0..mech.inputs()).map(|x| mech.get(b, x)).sum::<f64>() / mech.inputs() as f64
}

/// `P(D E | B = b) = (1 − q) u(E) P_D^b(D) + q u(D) P_E^b(E)`.
pub fn berkson_posterior(spec: &ClassicalMixtureSpec, b: usize) -> Result<BerksonPosterior> {
    if b >= spec.outcome_count() {
        return Err(Error::InvalidArgument(format!("outcome {b} out of range")));
    }
    let p = spec.weight;
    let from_d = (1.0 - p) * mean_column(&spec.mechanism_d, b);
    let from_e = p * mean_column(&spec.mechanism_e, b);
    let evidence = from_d + from_e;
    if evidence <= MIN_CONDITIONING_PROBABILITY {
        return Err(Error::UndefinedConditioning(evidence));
    }
    let q = from_e / evidence;
    let (nd, ne) = (spec.mechanism_d.inputs(), spec.mechanism_e.inputs());
    let posterior_of = |mech: &Conditional<f64>, x: usize| {
        let norm = mean_column(mech, b) * mech.inputs() as f64;
        if norm > 0.0 {
            mech.get(b, x) / norm
        } else {
            0.0
        }
    };
    let joint = JointDistribution::from_fn(vec![Variable::new("D", nd), Variable::new("E", ne)], |a| {
        (1.0 - q) * posterior_of(&spec.mechanism_d, a[0]) / ne as f64
            + q * posterior_of(&spec.mechanism_e, a[1]) / nd as f64
    })?;
    Ok(BerksonPosterior { joint, q })
}

/// Largest `I(D:E)` a two-mechanism probabilistic mixture can induce between
/// uniform `n`-valued causes, in bits.
pub fn berkson_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cardinality {n} must be at least 2")));
    }
    let n = n as f64;
    Ok(n.log2() - (n + 1.0) / n * ((n + 1.0).log2() - 1.0))
}

/// `P(c b d) = P(cb|d) u(d)` with `P(cb|d) = ½ u(c) u(b) + ½ u(c) [b = c ⊕ d]`,
/// over variables `c, b, d` with value 0 for `+1` and 1 for `-1`.
pub fn physc_distribution() -> JointDistribution {
    let vars = vec![Variable::new("c", 2), Variable::new("b", 2), Variable::new("d", 2)];
    JointDistribution::from_fn(vars, |a| {
        let parity = if a[1] == a[0] ^ a[2] { 1.0 } else { 0.0 };
        0.5 * (0.125 + 0.25 * parity)
    })
    .expect("fixed table is normalized")
}

/// The hiring illustration: two independent uniform skills and a hiring decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacultyPreset {
    /// One committee hires whenever either skill is strong.
    Comprehensive,
    /// Half the time a committee judges only the first skill, otherwise only the second.
    Specialized,
}

impl FacultyPreset {
    /// Joint over `(skill_a, skill_b, hired)`, value 1 meaning strong or hired.
    pub fn distribution(self) -> Result<JointDistribution> {
        let vars = vec![Variable::new("skill_a", 2), Variable::new("skill_b", 2), Variable::new("hired", 2)];
        match self {
            FacultyPreset::Comprehensive => JointDistribution::from_fn(vars, |a| {
                let hired = usize::from(a[0] == 1 || a[1] == 1);
                if a[2] == hired {
                    0.25
                } else {
                    0.0
                }
            }),
            FacultyPreset::Specialized => {
                let joint = ClassicalMixtureSpec::extremal(2)?.joint()?;
                JointDistribution::new(vars, joint.probs().to_vec())
            }
        }
    }

    /// Covariance of the `±1`-coded skills among hired candidates.
    pub fn skill_covariance_given_hired(self) -> Result<f64> {
        let (skills, _) = self.distribution()?.condition("hired", 1)?;
        let sign = |x: usize| if x == 1 { 1.0 } else { -1.0 };
        let mut e_ab = 0.0;
        let mut e_a = 0.0;
        let mut e_b = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let p = skills.get(&[a, b]);
                e_ab += sign(a) * sign(b) * p;
                e_a += sign(a) * p;
                e_b += sign(b) * p;
            }
        }
        Ok(e_ab - e_a * e_b)
    }
}

impl FromStr for FacultyPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comprehensive" => Ok(FacultyPreset::Comprehensive),
            "specialized" => Ok(FacultyPreset::Specialized),
            other => Err(Error::Parse(format!("unknown preset `{other}`"))),
        }
    }
}

/// How a mixture component produces `B`.
#[derive(Clone, Debug, PartialEq)]
pub enum Mechanism {
    /// `P(B | D)`.
    CauseEffect(Conditional<Exact>),
    /// `P(B | λ)`, with `λ` the hidden common cause of `C`.
    CommonCause(Conditional<Exact>),
    /// `P(B | D λ)` with input index `d · |λ| + λ`.
    Joint { table: Conditional<Exact>, lambda_card: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureTerm {
    pub weight: Exact,
    pub mechanism: Mechanism,
}

/// `P(c b | d) = Σ_λ P(λ) P(c | λ) Σ_j w_j P_j(b | d, λ)`, a control variable
/// selecting the mechanism for `B` only.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilisticMixture {
    prior: Vec<Exact>,
    source: Conditional<Exact>,
    d_card: usize,
    b_card: usize,
    terms: Vec<MixtureTerm>,
}

/// `P(c b | d)` indexed `[d][c][b]`.
pub type InducedTable = Vec<Vec<Vec<Exact>>>;

impl ProbabilisticMixture {
    pub fn new(prior: Vec<Exact>, source: Conditional<Exact>, d_card: usize, terms: Vec<MixtureTerm>) -> Result<Self> {
        let lambda_card = prior.len();
        if lambda_card == 0 || prior.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidDistribution("prior over λ must be a nonempty distribution".into()));
        }
        let total: Exact = prior.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::NotNormalized(Probability::to_f64(&total)));
        }
        if source.inputs() != lambda_card {
            return Err(Error::DimensionMismatch { expected: lambda_card, got: source.inputs() });
        }
        let first = terms.first().ok_or_else(|| Error::InvalidDistribution("mixture has no terms".into()))?;
        let b_card = Self::outcomes_of(&first.mechanism);
        let mut weights = Exact::zero();
        for term in &terms {
            if term.weight.is_negative() {
                return Err(Error::InvalidDistribution("negative mixture weight".into()));
            }
            weights += term.weight.clone();
            let (inputs, want) = match &term.mechanism {
                Mechanism::CauseEffect(t) => (t.inputs(), d_card),
                Mechanism::CommonCause(t) => (t.inputs(), lambda_card),
                Mechanism::Joint { table, lambda_card: l } => {
                    if *l != lambda_card {
                        return Err(Error::DimensionMismatch { expected: lambda_card, got: *l });
                    }
                    (table.inputs(), d_card * lambda_card)
                }
            };
            if inputs != want {
                return Err(Error::DimensionMismatch { expected: want, got: inputs });
            }
            if Self::outcomes_of(&term.mechanism) != b_card {
                return Err(Error::DimensionMismatch { expected: b_card, got: Self::outcomes_of(&term.mechanism) });
            }
        }
        if !weights.is_one() {
            return Err(Error::NotNormalized(Probability::to_f64(&weights)));
        }
        Ok(Self { prior, source, d_card, b_card, terms })
    }

    fn outcomes_of(m: &Mechanism) -> usize {
        match m {
            Mechanism::CauseEffect(t) | Mechanism::CommonCause(t) => t.outcomes(),
            Mechanism::Joint { table, .. } => table.outcomes(),
        }
    }

    pub fn prior(&self) -> &[Exact] {
        &self.prior
    }

    pub fn source(&self) -> &Conditional<Exact> {
        &self.source
    }

    pub fn terms(&self) -> &[MixtureTerm] {
        &self.terms
    }

    pub fn d_card(&self) -> usize {
        self.d_card
    }

    pub fn b_card(&self) -> usize {
        self.b_card
    }

    pub fn c_card(&self) -> usize {
        self.source.outcomes()
    }

    pub fn lambda_card(&self) -> usize {
        self.prior.len()
    }

    fn mechanism_prob(&self, m: &Mechanism, b: usize, d: usize, lambda: usize) -> Exact {
        match m {
            Mechanism::CauseEffect(t) => t.get(b, d).clone(),
            Mechanism::CommonCause(t) => t.get(b, lambda).clone(),
            Mechanism::Joint { table, lambda_card } => table.get(b, d * lambda_card + lambda).clone(),
        }
    }

    /// Direct sum over mechanisms and `λ`.
    pub fn induced(&self) -> InducedTable {
        (0..self.d_card)
            .map(|d| {
                (0..self.c_card())
                    .map(|c| {
                        (0..self.b_card)
                            .map(|b| {
                                let mut acc = Exact::zero();
                                for (lambda, pl) in self.prior.iter().enumerate() {
                                    let pcl = pl * self.source.get(c, lambda);
                                    for term in &self.terms {
                                        acc += &pcl * &term.weight * self.mechanism_prob(&term.mechanism, b, d, lambda);
                                    }
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// `P(cb|d) = (1 − p) P(c) P_CE(b|d) + p Σ_λ P(λ) P(c|λ) P_CC(b|λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoTermMixture {
    pub cause_effect_weight: Exact,
    pub cause_effect: Conditional<Exact>,
    pub common_cause_weight: Exact,
    pub common_cause: Conditional<Exact>,
    pub prior: Vec<Exact>,
    pub source: Conditional<Exact>,
}

impl TwoTermMixture {
    pub fn into_mixture(self) -> Result<ProbabilisticMixture> {
        let d_card = self.cause_effect.inputs();
        ProbabilisticMixture::new(
            self.prior,
            self.source,
            d_card,
            vec![
                MixtureTerm { weight: self.cause_effect_weight, mechanism: Mechanism::CauseEffect(self.cause_effect) },
                MixtureTerm { weight: self.common_cause_weight, mechanism: Mechanism::CommonCause(self.common_cause) },
            ],
        )
    }

    pub fn induced(&self) -> Result<InducedTable> {
        Ok(self.clone().into_mixture()?.induced())
    }
}

/// Classifies a joint mechanism by what it actually depends on.
fn split_joint(table: &Conditional<Exact>, lambda_card: usize) -> Result<Mechanism> {
    let d_card = table.inputs() / lambda_card;
    let b_card = table.outcomes();
    let at = |b: usize, d: usize, l: usize| table.get(b, d * lambda_card + l);
    let ignores_lambda = (0..b_card).all(|b| (0..d_card).all(|d| (0..lambda_card).all(|l| at(b, d, l) == at(b, d, 0))));
    if ignores_lambda {
        return Ok(Mechanism::CauseEffect(Conditional::from_fn(b_card, d_card, |b, d| at(b, d, 0).clone())?));
    }
    let ignores_d = (0..b_card).all(|b| (0..lambda_card).all(|l| (0..d_card).all(|d| at(b, d, l) == at(b, 0, l))));
    if ignores_d {
        return Ok(Mechanism::CommonCause(Conditional::from_fn(b_card, lambda_card, |b, l| at(b, 0, l).clone())?));
    }
    Err(Error::NotProbabilisticMixture(
        "a mechanism depends on both the intervened input and the common cause".into(),
    ))
}

fn aggregate(parts: &[(Exact, &Conditional<Exact>)], outcomes: usize, inputs: usize) -> Result<(Exact, Conditional<Exact>)> {
    let weight: Exact = parts.iter().map(|(w, _)| w.clone()).sum();
    if weight.is_zero() {
        return Ok((weight, Conditional::uniform(outcomes, inputs)?));
    }
    let table = Conditional::from_fn(outcomes, inputs, |o, x| {
        parts.iter().map(|(w, t)| w * t.get(o, x)).sum::<Exact>() / &weight
    })?;
    Ok((weight, table))
}

/// Collapses every cause-effect component into one and every common-cause
/// component into another, leaving the induced `P(cb|d)` unchanged.
pub fn reduce_to_two_terms(mixture: &ProbabilisticMixture) -> Result<TwoTermMixture> {
    let mut cause_effect = Vec::new();
    let mut common_cause = Vec::new();
    let split: Vec<(Exact, Mechanism)> = mixture
        .terms
        .iter()
        .map(|t| match &t.mechanism {
            Mechanism::Joint { table, lambda_card } => Ok((t.weight.clone(), split_joint(table, *lambda_card)?)),
            m => Ok((t.weight.clone(), m.clone())),
        })
        .collect::<Result<_>>()?;
    for (w, m) in &split {
        match m {
            Mechanism::CauseEffect(t) => cause_effect.push((w.clone(), t)),
            Mechanism::CommonCause(t) => common_cause.push((w.clone(), t)),
            Mechanism::Joint { .. } => unreachable!("joint mechanisms were split above"),
        }
    }
    let (ce_weight, ce) = aggregate(&cause_effect, mixture.b_card, mixture.d_card)?;
    let (cc_weight, cc) = aggregate(&common_cause, mixture.b_card, mixture.lambda_card())?;
    Ok(TwoTermMixture {
        cause_effect_weight: ce_weight,
        cause_effect: ce,
        common_cause_weight: cc_weight,
        common_cause: cc,
        prior: mixture.prior.clone(),
        source: mixture.source.clone(),
    })
}

/// Parses `3`, `1/3` or `0.125` exactly.
pub fn parse_exact(s: &str) -> Result<Exact> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational number"));
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: num_bigint::BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let scale = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Exact::new(digits, scale));
    }
    Exact::from_str(s).map_err(|_| bad())
}

#[derive(Debug, serde::Deserialize, serde::Serialize)]
struct MixtureRow {
    kind: String,
    term: Option<usize>,
    weight: Option<String>,
    c: Option<usize>,
    b: Option<usize>,
    d: Option<usize>,
    lambda: Option<usize>,
    probability: String,
}

impl MixtureRow {
    fn blank(kind: &str, probability: &Exact) -> Self {
        Self { kind: kind.into(), term: None, weight: None, c: None, b: None, d: None, lambda: None, probability: probability.to_string() }
    }
}

fn required(v: Option<usize>, column: &str, kind: &str) -> Result<usize> {
    v.ok_or_else(|| Error::Parse(format!("`{kind}` row is missing `{column}`")))
}

/// Writes a mixture with columns `kind,term,weight,c,b,d,lambda,probability`.
///
/// Row kinds are `prior` (`λ`), `source` (`c`, `λ`), `cause_effect` (`b`, `d`),
/// `common_cause` (`b`, `λ`) and `joint` (`b`, `d`, `λ`); term rows carry the
/// term index and its weight.
pub fn write_mixture_csv<W: io::Write>(mixture: &ProbabilisticMixture, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (l, p) in mixture.prior.iter().enumerate() {
        w.serialize(MixtureRow { lambda: Some(l), ..MixtureRow::blank("prior", p) })?;
    }
    for l in 0..mixture.lambda_card() {
        for c in 0..mixture.c_card() {
            w.serialize(MixtureRow { c: Some(c), lambda: Some(l), ..MixtureRow::blank("source", mixture.source.get(c, l)) })?;
        }
    }
    for (j, term) in mixture.terms.iter().enumerate() {
        let head = |kind: &str, p: &Exact| MixtureRow { term: Some(j), weight: Some(term.weight.to_string()), ..MixtureRow::blank(kind, p) };
        match &term.mechanism {
            Mechanism::CauseEffect(t) => {
                for d in 0..t.inputs() {
                    for b in 0..t.outcomes() {
                        w.serialize(MixtureRow { b: Some(b), d: Some(d), ..head("cause_effect", t.get(b, d)) })?;
                    }
                }
            }
            Mechanism::CommonCause(t) => {
                for l in 0..t.inputs() {
                    for b in 0..t.outcomes() {
                        w.serialize(MixtureRow { b: Some(b), lambda: Some(l), ..head("common_cause", t.get(b, l)) })?;
                    }
                }
            }
            Mechanism::Joint { table, lambda_card } => {
                for x in 0..table.inputs() {
                    for b in 0..table.outcomes() {
                        let (d, l) = (x / lambda_card, x % lambda_card);
                        w.serialize(MixtureRow { b: Some(b), d: Some(d), lambda: Some(l), ..head("joint", table.get(b, x)) })?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_two_term_csv<W: io::Write>(reduced: &TwoTermMixture, writer: W) -> Result<()> {
    write_mixture_csv(&reduced.clone().into_mixture()?, writer)
}

/// Reads the format of [`write_mixture_csv`]; omitted table entries are zero.
pub fn read_mixture_csv<R: io::Read>(reader: R) -> Result<ProbabilisticMixture> {
    struct TermRows {
        kind: String,
        weight: Exact,
        entries: Vec<(usize, usize, usize, Exact)>,
    }
    let mut prior: Vec<(usize, Exact)> = Vec::new();
    let mut source: Vec<(usize, usize, Exact)> = Vec::new();
    let mut terms: std::collections::BTreeMap<usize, TermRows> = Default::default();
    let mut r = csv::Reader::from_reader(reader);
    for row in r.deserialize::<MixtureRow>() {
        let row = row?;
        let p = parse_exact(&row.probability)?;
        let kind = row.kind.trim();
        match kind {
            "prior" => prior.push((required(row.lambda, "lambda", kind)?, p)),
            "source" => source.push((required(row.c, "c", kind)?, required(row.lambda, "lambda", kind)?, p)),
            "cause_effect" | "common_cause" | "joint" => {
                let j = required(row.term, "term", kind)?;
                let weight = parse_exact(row.weight.as_deref().ok_or_else(|| Error::Parse("term row is missing `weight`".into()))?)?;
                let b = required(row.b, "b", kind)?;
                let d = if kind == "common_cause" { 0 } else { required(row.d, "d", kind)? };
                let l = if kind == "cause_effect" { 0 } else { required(row.lambda, "lambda", kind)? };
                let entry = terms.entry(j).or_insert_with(|| TermRows { kind: kind.into(), weight: weight.clone(), entries: Vec::new() });
                if entry.kind != kind || entry.weight != weight {
                    return Err(Error::Parse(format!("term {j} has inconsistent kind or weight")));
                }
                entry.entries.push((b, d, l, p));
            }
            other => return Err(Error::Parse(format!("unknown row kind `{other}`"))),
        }
    }
    let lambda_card = prior.iter().map(|(l, _)| l + 1).chain(source.iter().map(|(_, l, _)| l + 1)).max().unwrap_or(1);
    let c_card = source.iter().map(|(c, _, _)| c + 1).max().unwrap_or(1);
    let rows = || terms.values().flat_map(|t| t.entries.iter());
    let b_card = rows().map(|e| e.0 + 1).max().unwrap_or(1);
    let d_card = rows().map(|e| e.1 + 1).max().unwrap_or(1);
    let lambda_card = lambda_card.max(rows().map(|e| e.2 + 1).max().unwrap_or(1));

    let mut prior_vec = vec![Exact::zero(); lambda_card];
    for (l, p) in prior {
        prior_vec[l] += p;
    }
    let lookup3 = |entries: &[(usize, usize, Exact)], o: usize, x: usize| {
        entries.iter().filter(|e| e.0 == o && e.1 == x).map(|e| e.2.clone()).sum::<Exact>()
    };
    let source = Conditional::from_fn(c_card, lambda_card, |c, l| lookup3(&source, c, l))?;
    let mut out = Vec::new();
    for (_, t) in terms {
        let pick = |b: usize, d: usize, l: usize| {
            t.entries.iter().filter(|e| e.0 == b && e.1 == d && e.2 == l).map(|e| e.3.clone()).sum::<Exact>()
        };
        let mechanism = match t.kind.as_str() {
            "cause_effect" => Mechanism::CauseEffect(Conditional::from_fn(b_card, d_card, |b, d| pick(b, d, 0))?),
            "common_cause" => Mechanism::CommonCause(Conditional::from_fn(b_card, lambda_card, |b, l| pick(b, 0, l))?),
            _ => Mechanism::Joint {
                table: Conditional::from_fn(b_card, d_card * lambda_card, |b, x| pick(b, x / lambda_card, x % lambda_card))?,
                lambda_card,
            },
        };
        out.push(MixtureTerm { weight: t.weight, mechanism });
    }
    ProbabilisticMixture::new(prior_vec, source, d_card, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::{build_scenario, Cell, ScenarioId, Setting};
    use crate::quantum::Outcome;
    use proptest::prelude::*;

    fn bits(names: [&str; 2]) -> Vec<Variable> {
        names.iter().map(|n| Variable::new(*n, 2)).collect()
    }

    fn q(n: i64, d: i64) -> Exact {
        Exact::new(n.into(), d.into())
    }

    #[test]
    fn independent_bits_have_no_information() {
        let p = JointDistribution::new(bits(["x", "y"]), vec![0.25; 4]).unwrap();
        assert_eq!(p.mutual_information().unwrap(), 0.0);
    }

    #[test]
    fn correlated_bits_share_one_bit() {
        let p = JointDistribution::new(bits(["x", "y"]), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((p.mutual_information().unwrap() - 1.0).abs() < 1e-15);
        assert!((p.mutual_information_in(LogBase::Nats).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(matches!(JointDistribution::new(bits(["x", "y"]), vec![0.3; 4]), Err(Error::NotNormalized(_))));
        assert!(matches!(
            JointDistribution::new(bits(["x", "y"]), vec![1.5, -0.5, 0.0, 0.0]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(JointDistribution::new(bits(["x", "x"]), vec![0.25; 4]).is_err());
        let three = physc_distribution();
        assert!(matches!(three.mutual_information(), Err(Error::NotBipartite(3))));
    }

    #[test]
    fn physc_conditional_information() {
        let p = physc_distribution();
        // P(cd|b) puts ⅜ on the two parity-consistent cells and ⅛ elsewhere
        let want = 0.75 * 1.5f64.log2() - 0.25;
        for b in 0..2 {
            let mi = p.conditional_mutual_information("c", "d", "b", b).unwrap();
            assert!((mi - want).abs() < 1e-12);
            assert!((mi - 0.19).abs() < 0.005);
            assert!(mi > berkson_bound(2).unwrap());
        }
        let cd = p.marginal(&["c", "d"]).unwrap();
        assert!(cd.mutual_information().unwrap() < 1e-15);
    }

    #[test]
    fn physc_distribution_matches_choi_diagonal() {
        let tau = build_scenario(ScenarioId::PhysC).unwrap();
        let [s, u, t] = ScenarioId::PhysC.preferred_bases().unwrap();
        let setting = Setting::new(s, t, u);
        let p = physc_distribution();
        let outcome = |k: usize| if k == 0 { Outcome::Plus } else { Outcome::Minus };
        for c in 0..2 {
            for b in 0..2 {
                for d in 0..2 {
                    let from_choi = 0.5 * tau.predict_probability(setting, Cell::new(outcome(c), outcome(b), outcome(d)));
                    assert!((from_choi - p.get(&[c, b, d])).abs() < 1e-12, "c{c} b{b} d{d}");
                }
            }
        }
    }

    #[test]
    fn bound_values() {
        assert!((berkson_bound(2).unwrap() - (2.5 - 1.5 * 3f64.log2())).abs() < 1e-12);
        assert!((berkson_bound(2).unwrap() - 0.1226).abs() < 1e-4);
        for n in 2..=16 {
            assert!(berkson_bound(n).unwrap() < (n as f64).log2());
        }
        assert!(berkson_bound(1).is_err());
    }

    #[test]
    fn extremal_spec_attains_bound() {
        for n in 2..=6 {
            let spec = ClassicalMixtureSpec::extremal(n).unwrap();
            for b in 0..n {
                let post = berkson_posterior(&spec, b).unwrap();
                assert!((post.mutual_information() - berkson_bound(n).unwrap()).abs() < 1e-10);
                assert!((post.q - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_mechanism_posterior_is_product() {
        let mech = Conditional::from_fn(2, 2, |b, d| if b == d { 0.8 } else { 0.2 }).unwrap();
        let spec = ClassicalMixtureSpec::new(0.0, mech.clone(), mech).unwrap();
        let post = berkson_posterior(&spec, 1).unwrap();
        assert_eq!(post.q, 0.0);
        assert!(post.mutual_information() < 1e-15);
    }

    #[test]
    fn posterior_matches_bayes_rule() {
        let md = Conditional::from_fn(3, 2, |b, d| [[0.5, 0.3, 0.2], [0.1, 0.1, 0.8]][d][b]).unwrap();
        let me = Conditional::from_fn(3, 3, |b, e| [[0.6, 0.2, 0.2], [0.0, 0.5, 0.5], [0.3, 0.3, 0.4]][e][b]).unwrap();
        let spec = ClassicalMixtureSpec::new(0.3, md, me).unwrap();
        let joint = spec.joint().unwrap();
        for b in 0..3 {
            let (bayes, _) = joint.condition("B", b).unwrap();
            let post = berkson_posterior(&spec, b).unwrap();
            for (x, y) in bayes.probs().iter().zip(post.joint.probs()) {
                assert!((x - y).abs() < 1e-12);
            }
            // 1 − q is the posterior weight of the D mechanism
            let from_d: f64 = (0..2).map(|d| 0.7 * spec.mechanism_d().get(b, d) / 2.0).sum();
            let evidence: f64 = bayes_evidence(&spec, b);
            assert!(((1.0 - post.q) - from_d / evidence).abs() < 1e-12);
        }
    }

    fn bayes_evidence(spec: &ClassicalMixtureSpec, b: usize) -> f64 {
        let (nd, ne) = (spec.mechanism_d().inputs(), spec.mechanism_e().inputs());
        let mut total = 0.0;
        for d in 0..nd {
            for e in 0..ne {
                total += spec.likelihood(b, d, e) / (nd * ne) as f64;
            }
        }
        total
    }

    #[test]
    fn impossible_outcome_is_undefined() {
        let never = Conditional::deterministic(2, 2, |_| 0).unwrap();
        let spec = ClassicalMixtureSpec::new(0.5, never.clone(), never).unwrap();
        assert!(matches!(berkson_posterior(&spec, 1), Err(Error::UndefinedConditioning(_))));
    }

    #[test]
    fn faculty_presets_show_negative_induced_covariance() {
        let comprehensive = FacultyPreset::Comprehensive.skill_covariance_given_hired().unwrap();
        let specialized = FacultyPreset::Specialized.skill_covariance_given_hired().unwrap();
        assert!((comprehensive + 4.0 / 9.0).abs() < 1e-12);
        assert!((specialized + 0.25).abs() < 1e-12);
        assert!(comprehensive < specialized && specialized < 0.0);
    }

    #[test]
    fn distribution_csv_round_trip() {
        let p = physc_distribution();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("c,b,d,probability\n"));
        assert_eq!(JointDistribution::read_csv(buf.as_slice()).unwrap(), p);
    }

    fn binary_mixture_parts() -> (Vec<Exact>, Conditional<Exact>) {
        let prior = vec![q(1, 3), q(2, 3)];
        let source = Conditional::from_fn(2, 2, |c, l| if c == l { q(3, 4) } else { q(1, 4) }).unwrap();
        (prior, source)
    }

    #[test]
    fn single_cause_effect_term_reduces_to_itself() {
        let (prior, source) = binary_mixture_parts();
        let mech = Conditional::from_fn(2, 2, |b, d| if b == d { q(9, 10) } else { q(1, 10) }).unwrap();
        let mixture = ProbabilisticMixture::new(
            prior,
            source,
            2,
            vec![MixtureTerm { weight: Exact::one(), mechanism: Mechanism::CauseEffect(mech.clone()) }],
        )
        .unwrap();
        let reduced = reduce_to_two_terms(&mixture).unwrap();
        assert_eq!(reduced.cause_effect, mech);
        assert!(reduced.cause_effect_weight.is_one());
        assert!(reduced.common_cause_weight.is_zero());
    }

    #[test]
    fn identical_common_cause_terms_merge() {
        let (prior, source) = binary_mixture_parts();
        let mech = Conditional::from_fn(2, 2, |b, l| if b == l { q(2, 3) } else { q(1, 3) }).unwrap();
        let term = MixtureTerm { weight: q(1, 2), mechanism: Mechanism::CommonCause(mech.clone()) };
        let mixture = ProbabilisticMixture::new(prior, source, 2, vec![term.clone(), term]).unwrap();
        let reduced = reduce_to_two_terms(&mixture).unwrap();
        assert!(reduced.common_cause_weight.is_one());
        assert_eq!(reduced.common_cause, mech);
        assert_eq!(reduced.induced().unwrap(), mixture.induced());
    }

    #[test]
    fn genuinely_joint_mechanism_is_rejected() {
        let (prior, source) = binary_mixture_parts();
        let xor = Conditional::deterministic(2, 4, |x| (x / 2) ^ (x % 2)).unwrap();
        let mixture = ProbabilisticMixture::new(
            prior,
            source,
            2,
            vec![MixtureTerm { weight: Exact::one(), mechanism: Mechanism::Joint { table: xor, lambda_card: 2 } }],
        )
        .unwrap();
        assert!(matches!(reduce_to_two_terms(&mixture), Err(Error::NotProbabilisticMixture(_))));
    }

    #[test]
    fn parse_exact_forms() {
        assert_eq!(parse_exact("1/3").unwrap(), q(1, 3));
        assert_eq!(parse_exact("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_exact(" 2 ").unwrap(), q(2, 1));
        assert!(parse_exact("0.").is_err());
        assert!(parse_exact("abc").is_err());
    }

    fn rational_column(raw: &[u8]) -> Vec<Exact> {
        let weights: Vec<i64> = raw.iter().map(|&r| i64::from(r) + 1).collect();
        let total: i64 = weights.iter().sum();
        weights.into_iter().map(|w| q(w, total)).collect()
    }

    fn rational_table(outcomes: usize, inputs: usize, raw: &[u8]) -> Conditional<Exact> {
        let cols: Vec<Vec<Exact>> = raw.chunks(outcomes).take(inputs).map(rational_column).collect();
        Conditional::from_fn(outcomes, inputs, |o, x| cols[x][o].clone()).unwrap()
    }

    fn random_mixture(raw: &[u8]) -> ProbabilisticMixture {
        let prior = rational_column(&raw[0..2]);
        let source = rational_table(2, 2, &raw[2..6]);
        let weights = rational_column(&raw[6..10]);
        let terms = weights
            .into_iter()
            .enumerate()
            .map(|(j, weight)| {
                let chunk = &raw[10 + 8 * j..18 + 8 * j];
                let mechanism = match raw[42 + j] % 3 {
                    0 => Mechanism::CauseEffect(rational_table(2, 2, chunk)),
                    1 => Mechanism::CommonCause(rational_table(2, 2, chunk)),
                    // a joint table that only reads λ
                    _ => {
                        let inner = rational_table(2, 2, chunk);
                        let table = Conditional::from_fn(2, 4, |b, x| inner.get(b, x % 2).clone()).unwrap();
                        Mechanism::Joint { table, lambda_card: 2 }
                    }
                };
                MixtureTerm { weight, mechanism }
            })
            .collect();
        ProbabilisticMixture::new(prior, source, 2, terms).unwrap()
    }

    /// Brute force over every assignment of `(J, λ, c, b, d)`.
    fn enumerate_induced(m: &ProbabilisticMixture) -> InducedTable {
        let mut table = vec![vec![vec![Exact::zero(); 2]; 2]; 2];
        for (j, term) in m.terms().iter().enumerate() {
            for l in 0..2 {
                for c in 0..2 {
                    for b in 0..2 {
                        for d in 0..2 {
                            let mech = match &m.terms()[j].mechanism {
                                Mechanism::CauseEffect(t) => t.get(b, d).clone(),
                                Mechanism::CommonCause(t) => t.get(b, l).clone(),
                                Mechanism::Joint { table, .. } => table.get(b, 2 * d + l).clone(),
                            };
                            table[d][c][b] += &term.weight * &m.prior()[l] * m.source().get(c, l) * mech;
                        }
                    }
                }
            }
        }
        table
    }

    #[test]
    fn mixture_csv_round_trip() {
        let raw: Vec<u8> = (0..46u8).map(|k| k.wrapping_mul(37) % 11).collect();
        let mixture = random_mixture(&raw);
        let mut buf = Vec::new();
        write_mixture_csv(&mixture, &mut buf).unwrap();
        assert_eq!(read_mixture_csv(buf.as_slice()).unwrap(), mixture);
        let reduced = reduce_to_two_terms(&mixture).unwrap();
        let mut buf = Vec::new();
        write_two_term_csv(&reduced, &mut buf).unwrap();
        assert_eq!(read_mixture_csv(buf.as_slice()).unwrap().induced(), mixture.induced());
    }

    proptest! {
        #[test]
        fn reduction_preserves_induced_distribution(raw in prop::collection::vec(0u8..9, 46)) {
            let mixture = random_mixture(&raw);
            let reduced = reduce_to_two_terms(&mixture).unwrap();
            let brute = enumerate_induced(&mixture);
            prop_assert_eq!(&reduced.induced().unwrap(), &brute);
            prop_assert_eq!(&mixture.induced(), &brute);
            // Σ_b P(c b d) = P(c) u(d)
            for c in 0..2 {
                let pc: Exact = (0..2).map(|l| &mixture.prior()[l] * mixture.source().get(c, l)).sum();
                for d in 0..2 {
                    let total: Exact = brute[d][c].iter().cloned().sum();
                    prop_assert_eq!(total, pc.clone());
                }
            }
        }

        #[test]
        fn posterior_never_exceeds_bound(
            n in 2usize..=4,
            weight in 0.0f64..=1.0,
            raw in prop::collection::vec(0.0f64..1.0, 32),
            peaked in any::<bool>(),
        ) {
            let column = |k: usize| -> Vec<f64> {
                let w: Vec<f64> = (0..n).map(|o| { let x = raw[(k * n + o) % raw.len()]; (if peaked { x.powi(8) } else { x }) + 1e-9 }).collect();
                let total: f64 = w.iter().sum();
                w.into_iter().map(|x| x / total).collect()
            };
            let md_cols: Vec<Vec<f64>> = (0..n).map(column).collect();
            let me_cols: Vec<Vec<f64>> = (n..2 * n).map(column).collect();
            let md = Conditional::from_fn(n, n, |o, x| md_cols[x][o]).unwrap();
            let me = Conditional::from_fn(n, n, |o, x| me_cols[x][o]).unwrap();
            let spec = ClassicalMixtureSpec::new(weight, md, me).unwrap();
            for b in 0..n {
                let post = berkson_posterior(&spec, b).unwrap();
                prop_assert!(post.mutual_information() <= berkson_bound(n).unwrap() + 1e-10);
            }
        }

        #[test]
        fn information_ignores_relabeling(raw in prop::collection::vec(0.01f64..1.0, 6), swap_x in any::<bool>(), rot in 0usize..3) {
            let vars = vec![Variable::new("x", 2), Variable::new("y", 3)];
            let p = JointDistribution::from_weights(vars.clone(), raw.clone()).unwrap();
            let relabeled = JointDistribution::from_fn(vars, |a| {
                let x = if swap_x { 1 - a[0] } else { a[0] };
                p.get(&[x, (a[1] + rot) % 3])
            }).unwrap();
            prop_assert!((p.mutual_information().unwrap() - relabeled.mutual_information().unwrap()).abs() < 1e-12);
        }
    }
}
