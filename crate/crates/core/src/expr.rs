//! Sparse quadratic expressions over binary variables, and the 0/1
//! assignments they are evaluated against.
//!
//! An expression is `sum_i a_i x_i + sum_{i<j} b_ij x_i x_j + c` with
//! `x_i in {0, 1}`. Because the variables are binary, `x_i^2 == x_i`, so
//! self-pairs are folded into the linear part during normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("expression references variable {index} but the assignment has {len} entries")]
    DimensionMismatch { index: usize, len: usize },
    #[error("assignment entry {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: i64 },
}

/// A dense binary solution vector. Entries are exactly 0 or 1 by
/// construction; the JSON form is an array of 0/1 integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    /// Builds an assignment from integer entries, rejecting anything other
    /// than 0 or 1.
    pub fn from_ints<I>(values: I) -> Result<Self, ExprError>
    where
        I: IntoIterator<Item = i64>,
    {
        let mut bits = Vec::new();
        for (index, value) in values.into_iter().enumerate() {
            match value {
                0 => bits.push(false),
                1 => bits.push(true),
                other => return Err(ExprError::NotBinary { index, value: other }),
            }
        }
        Ok(Self { bits })
    }

    /// Assignment with exactly the given indices set.
    pub fn with_ones(len: usize, ones: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in ones {
            bits[i] = true;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.bits.get(index).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Indices of the variables set to 1, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn to_ints(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| u8::from(b)).collect()
    }
}

impl From<Vec<bool>> for Assignment {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.bits.iter().map(|&b| u8::from(b)))
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<i64>::deserialize(deserializer)?;
        Assignment::from_ints(values).map_err(serde::de::Error::custom)
    }
}

/// Sparse quadratic form over binary variables.
///
/// The maps are public so callers (and tests) can stage denormalized data;
/// [`QuadraticExpression::normalize`] restores the canonical shape, and the
/// `add_*` builders keep it canonical in the first place. Evaluation is
/// correct on denormalized expressions too.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "ExprDoc", from = "ExprDoc")]
pub struct QuadraticExpression {
    /// Variable index -> linear coefficient.
    pub linear: BTreeMap<usize, f64>,
    /// Canonically ordered (min, max) variable pair -> quadratic coefficient.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    /// Constant term.
    pub offset: f64,
}

impl QuadraticExpression {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_offset(offset: f64) -> Self {
        Self { offset, ..Self::default() }
    }

    /// Accumulates a linear coefficient; entries that cancel to zero are
    /// removed.
    pub fn add_linear(&mut self, var: usize, coeff: f64) -> &mut Self {
        let entry = self.linear.entry(var).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.linear.remove(&var);
        }
        self
    }

    /// Accumulates a quadratic coefficient. Pairs are stored in (min, max)
    /// order; a self-pair folds into the linear part since x^2 == x.
    pub fn add_quadratic(&mut self, a: usize, b: usize, coeff: f64) -> &mut Self {
        if a == b {
            return self.add_linear(a, coeff);
        }
        let key = (a.min(b), a.max(b));
        let entry = self.quadratic.entry(key).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.quadratic.remove(&key);
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty() && self.quadratic.is_empty() && self.offset == 0.0
    }

    pub fn is_linear(&self) -> bool {
        self.quadratic.is_empty()
    }

    /// Largest variable index mentioned, if any.
    pub fn max_index(&self) -> Option<usize> {
        let lin = self.linear.keys().next_back().copied();
        let quad = self.quadratic.keys().next_back().map(|&(a, b)| a.max(b));
        match (lin, quad) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.offset.is_finite()
            && self.linear.values().all(|c| c.is_finite())
            && self.quadratic.values().all(|c| c.is_finite())
    }

    /// Sum of absolute linear and quadratic coefficients (the attainable
    /// spread of the expression over the hypercube is at most this).
    pub fn coeff_abs_sum(&self) -> f64 {
        self.linear.values().map(|c| c.abs()).sum::<f64>()
            + self.quadratic.values().map(|c| c.abs()).sum::<f64>()
    }

    /// The expression multiplied by -1.
    pub fn negated(&self) -> Self {
        Self {
            linear: self.linear.iter().map(|(&k, &v)| (k, -v)).collect(),
            quadratic: self.quadratic.iter().map(|(&k, &v)| (k, -v)).collect(),
            offset: -self.offset,
        }
    }

    /// Canonical form: self-pairs folded to linear via x^2 == x, pair keys
    /// in (min, max) order with duplicates merged, zero coefficients
    /// dropped. Evaluation is unchanged.
    pub fn normalize(&self) -> Self {
        let mut out = Self::with_offset(self.offset);
        for (&var, &coeff) in &self.linear {
            out.add_linear(var, coeff);
        }
        for (&(a, b), &coeff) in &self.quadratic {
            out.add_quadratic(a, b, coeff);
        }
        // add_* already drop exact zeros; sweep anything that arrived as an
        // explicit zero.
        out.linear.retain(|_, c| *c != 0.0);
        out.quadratic.retain(|_, c| *c != 0.0);
        out
    }

    /// Evaluates the expression against a 0/1 assignment.
    pub fn evaluate(&self, x: &Assignment) -> Result<f64, ExprError> {
        let bit = |index: usize| -> Result<bool, ExprError> {
            x.get(index)
                .ok_or(ExprError::DimensionMismatch { index, len: x.len() })
        };
        let mut total = self.offset;
        for (&var, &coeff) in &self.linear {
            if bit(var)? {
                total += coeff;
            }
        }
        for (&(a, b), &coeff) in &self.quadratic {
            if bit(a)? && bit(b)? {
                total += coeff;
            }
        }
        Ok(total)
    }
}

/// Wire form: linear keys become JSON strings, quadratic terms are
/// `[i, j, coeff]` triples in canonical order.
#[derive(Serialize, Deserialize)]
struct ExprDoc {
    #[serde(default)]
    linear: BTreeMap<usize, f64>,
    #[serde(default)]
    quadratic: Vec<(usize, usize, f64)>,
    #[serde(default)]
    offset: f64,
}

impl From<QuadraticExpression> for ExprDoc {
    fn from(expr: QuadraticExpression) -> Self {
        let norm = expr.normalize();
        ExprDoc {
            linear: norm.linear,
            quadratic: norm
                .quadratic
                .into_iter()
                .map(|((a, b), c)| (a, b, c))
                .collect(),
            offset: norm.offset,
        }
    }
}

impl From<ExprDoc> for QuadraticExpression {
    fn from(doc: ExprDoc) -> Self {
        let mut expr = QuadraticExpression::with_offset(doc.offset);
        for (var, coeff) in doc.linear {
            expr.add_linear(var, coeff);
        }
        for (a, b, coeff) in doc.quadratic {
            expr.add_quadratic(a, b, coeff);
        }
        expr
    }
}
