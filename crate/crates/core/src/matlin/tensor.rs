use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CMatrix, C64};
use crate::{Error, Result};

/// Name of a tensor factor (`C`, `B`, `D`, `E`, `F`, ...).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(Cow<'static, str>);

impl Label {
    pub const C: Label = Label(Cow::Borrowed("C"));
    pub const B: Label = Label(Cow::Borrowed("B"));
    pub const D: Label = Label(Cow::Borrowed("D"));
    pub const E: Label = Label(Cow::Borrowed("E"));
    pub const F: Label = Label(Cow::Borrowed("F"));

    pub fn new(name: impl Into<String>) -> Self {
        Label(Cow::Owned(name.into()))
    }

    /// `X` becomes `X'`.
    pub fn primed(&self) -> Self {
        Label::new(format!("{}'", self.0))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

/// Ordered list of labelled tensor factors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorShape {
    factors: Vec<(Label, usize)>,
}

impl TensorShape {
    pub fn new(factors: Vec<(Label, usize)>) -> Result<Self> {
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::InvalidArgument(format!("factor {label} has dimension 0")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::LabelCollision(label.to_string()));
            }
        }
        Ok(Self { factors })
    }

    /// All factors are qubits.
    pub fn qubits(labels: &[Label]) -> Result<Self> {
        Self::new(labels.iter().map(|l| (l.clone(), 2)).collect())
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.factors.iter().map(|(l, _)| l)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn factors(&self) -> &[(Label, usize)] {
        &self.factors
    }

    pub fn position(&self, label: &Label) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.factors.iter().any(|(l, _)| l == label)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::new(factors)
    }

    fn without(&self, idx: usize) -> Self {
        let mut factors = self.factors.clone();
        factors.remove(idx);
        Self { factors }
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factors[k + 1].1;
        }
        strides
    }

    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for k in (0..self.factors.len()).rev() {
            let d = self.factors[k].1;
            out[k] = index % d;
            index /= d;
        }
    }
}

impl TensorShape {
    /// Reordered shape and, for each index of it, the matching index in `self`.
    pub fn permutation_map(&self, order: &[Label]) -> Result<(TensorShape, Vec<usize>)> {
        if order.len() != self.len() {
            return Err(Error::InvalidArgument(format!("permutation {order:?} does not cover shape {self}")));
        }
        let src: Vec<usize> = order.iter().map(|l| self.position(l)).collect::<Result<_>>()?;
        let shape = TensorShape::new(src.iter().map(|&k| self.factors[k].clone()).collect())?;
        let old_strides = self.strides();
        let mut digits = vec![0; shape.len()];
        let map = (0..shape.total_dim())
            .map(|idx| {
                shape.digits(idx, &mut digits);
                digits.iter().zip(&src).map(|(d, &k)| d * old_strides[k]).sum()
            })
            .collect();
        Ok((shape, map))
    }

    /// Permutation matrix `P` taking vectors in this factor order to `order`.
    pub fn permutation_matrix(&self, order: &[Label]) -> Result<(TensorShape, CMatrix)> {
        let (shape, map) = self.permutation_map(order)?;
        let mut p = CMatrix::zeros(map.len());
        for (new, &old) in map.iter().enumerate() {
            p[(new, old)] = C64::new(1.0, 0.0);
        }
        Ok((shape, p))
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.factors.iter().map(|(l, d)| format!("{l}:{d}")).collect();
        write!(f, "[{}]", names.join(", "))
    }
}

/// A matrix together with the tensor factorization of its index space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    shape: TensorShape,
}

impl Operator {
    pub fn new(matrix: CMatrix, shape: TensorShape) -> Result<Self> {
        if matrix.dim() != shape.total_dim() {
            return Err(Error::DimensionMismatch { expected: shape.total_dim(), got: matrix.dim() });
        }
        Ok(Self { matrix, shape })
    }

    pub fn identity(shape: TensorShape) -> Self {
        Self { matrix: CMatrix::identity(shape.total_dim()), shape }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Kronecker product; the factor lists are concatenated.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let shape = self.shape.concat(&other.shape)?;
        Ok(Self { matrix: self.matrix.kron(&other.matrix), shape })
    }

    /// Traces out the named factor.
    pub fn partial_trace(&self, over: &Label) -> Result<Self> {
        let k = self.shape.position(over)?;
        let dk = self.shape.factors[k].1;
        let reduced = self.shape.without(k);
        let stride = self.shape.strides()[k];
        let n = reduced.total_dim();
        // index in the full space = high * (dk * stride) + a * stride + low
        let lift = |r: usize, a: usize| (r / stride) * dk * stride + a * stride + r % stride;
        let matrix = CMatrix::from_fn(n, |i, j| {
            (0..dk).map(|a| self.matrix[(lift(i, a), lift(j, a))]).sum()
        });
        Ok(Self { matrix, shape: reduced })
    }

    /// Traces out every factor except the named ones, keeping their current order.
    pub fn reduce_to(&self, keep: &[Label]) -> Result<Self> {
        for l in keep {
            self.shape.position(l)?;
        }
        let mut out = self.clone();
        for label in self.shape.labels() {
            if !keep.contains(label) {
                out = out.partial_trace(label)?;
            }
        }
        Ok(out)
    }

    /// Transposes the indices of the named factor only.
    pub fn partial_transpose(&self, over: &Label) -> Result<Self> {
        let k = self.shape.position(over)?;
        let stride = self.shape.strides()[k];
        let dk = self.shape.factors[k].1;
        let digit = |idx: usize| (idx / stride) % dk;
        let matrix = CMatrix::from_fn(self.matrix.dim(), |i, j| {
            let (a, b) = (digit(i), digit(j));
            let i2 = i - a * stride + b * stride;
            let j2 = j - b * stride + a * stride;
            self.matrix[(i2, j2)]
        });
        Ok(Self { matrix, shape: self.shape.clone() })
    }

    /// Reorders the factors to `order`, which must be a permutation of the labels.
    pub fn permute(&self, order: &[Label]) -> Result<Self> {
        let (shape, map) = self.shape.permutation_map(order)?;
        let matrix = CMatrix::from_fn(map.len(), |i, j| self.matrix[(map[i], map[j])]);
        Ok(Self { matrix, shape })
    }

    /// Renames a factor.
    pub fn relabel(&self, from: &Label, to: Label) -> Result<Self> {
        let k = self.shape.position(from)?;
        let mut factors = self.shape.factors.clone();
        factors[k].0 = to;
        Ok(Self { matrix: self.matrix.clone(), shape: TensorShape::new(factors)? })
    }
}
