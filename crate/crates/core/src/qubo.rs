//! Penalized QUBO transform.
//!
//! Equality constraints contribute a squared penalty; inequalities get a
//! binary-encoded slack integer before squaring. Penalties are computed on
//! the scale-normalized (integer-coefficient) form of each constraint, so
//! the smallest representable violation of any constraint costs at least
//! one full penalty weight - the property that makes the auto weight
//! dominance argument work. Every slack bit carries provenance back to its
//! constraint so solutions can be decoded and re-checked exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Assignment;
use crate::model::{Constraint, ConstraintSense, CqmModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("constraint {constraint:?} has quadratic terms; only linear constraints can be penalized directly")]
    NonlinearConstraint { constraint: String },
    #[error("constraint {constraint:?}: {term} scales to {value} at scale {scale}, which is not an integer")]
    NonIntegralCoefficient { constraint: String, term: String, value: f64, scale: u32 },
    #[error("constraint {constraint:?} can never hold: its minimum over the hypercube is positive")]
    Unsatisfiable { constraint: String },
    #[error("constraint {constraint:?} is not a less-or-equal inequality")]
    NotLe { constraint: String },
    #[error("{context} contains a non-finite coefficient")]
    NonFinite { context: String },
    #[error("invalid penalty policy: {reason}")]
    InvalidPolicy { reason: String },
    #[error("solution has {got} bits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid qubo document: {0}")]
    Document(String),
}

/// How penalty weights are chosen when folding constraints into the QUBO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyPolicy {
    /// Weight = multiplier x objective coefficient spread (see
    /// [`auto_penalty`]), with a floor of 1.0 for constant objectives.
    Auto { multiplier: f64 },
    /// One fixed weight for every constraint.
    Fixed { weight: f64 },
}

impl Default for PenaltyPolicy {
    fn default() -> Self {
        PenaltyPolicy::Auto { multiplier: 2.0 }
    }
}

impl PenaltyPolicy {
    pub fn validate(&self) -> Result<(), TransformError> {
        match *self {
            PenaltyPolicy::Auto { multiplier } => {
                if !(multiplier >= 1.0 && multiplier.is_finite()) {
                    return Err(TransformError::InvalidPolicy {
                        reason: format!("auto multiplier must be >= 1, got {multiplier}"),
                    });
                }
            }
            PenaltyPolicy::Fixed { weight } => {
                if !(weight > 0.0 && weight.is_finite()) {
                    return Err(TransformError::InvalidPolicy {
                        reason: format!("fixed weight must be positive, got {weight}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-constraint penalty weights: multiplier times the objective's
/// coefficient spread (`sum |a_i| + sum |b_ij|`). Any single unit violation
/// then costs more than the whole objective range. A zero-spread objective
/// gets a floor weight of 1.0.
pub fn auto_penalty(
    model: &CqmModel,
    multiplier: f64,
) -> Result<BTreeMap<String, f64>, TransformError> {
    PenaltyPolicy::Auto { multiplier }.validate()?;
    let spread = model.objective().coeff_abs_sum();
    let weight = if spread == 0.0 { 1.0 } else { multiplier * spread };
    Ok(model
        .constraints()
        .iter()
        .map(|c| (c.name.clone(), weight))
        .collect())
}

/// Where a slack variable came from: the constraint it belongs to, its bit
/// position within that constraint's slack integer, and the bit's weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackSource {
    pub constraint: String,
    pub bit: usize,
    pub weight: u64,
}

/// Binary encoding of a slack integer covering exactly `0..=range`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlackEncoding {
    pub range: u64,
    pub bit_weights: Vec<u64>,
}

impl SlackEncoding {
    pub fn num_bits(&self) -> usize {
        self.bit_weights.len()
    }
}

/// Weights 1, 2, 4, ..., with the top weight trimmed so the representable
/// sums cover `{0, ..., range}` with no gaps and no overshoot.
fn trimmed_binary_weights(range: u64) -> Vec<u64> {
    if range == 0 {
        return Vec::new();
    }
    let bits = 64 - range.leading_zeros();
    let mut weights: Vec<u64> = (0..bits - 1).map(|b| 1u64 << b).collect();
    let covered = (1u64 << (bits - 1)) - 1;
    weights.push(range - covered);
    weights
}

/// A constraint expression with integer coefficients after scaling.
struct ScaledLinear {
    /// (variable index, scaled coefficient), ascending by index.
    terms: Vec<(usize, i64)>,
    offset: i64,
}

impl ScaledLinear {
    /// Minimum of the expression over the whole hypercube.
    fn hypercube_min(&self) -> i64 {
        self.terms.iter().map(|&(_, a)| a.min(0)).sum::<i64>() + self.offset
    }

    /// Maximum of the expression over the whole hypercube.
    fn hypercube_max(&self) -> i64 {
        self.terms.iter().map(|&(_, a)| a.max(0)).sum::<i64>() + self.offset
    }
}

fn scale_to_integers(
    constraint: &Constraint,
    scale: u32,
    term_name: impl Fn(usize) -> String,
) -> Result<ScaledLinear, TransformError> {
    if !constraint.expr.is_linear() {
        return Err(TransformError::NonlinearConstraint { constraint: constraint.name.clone() });
    }
    if !constraint.expr.all_finite() {
        return Err(TransformError::NonFinite {
            context: format!("constraint {:?}", constraint.name),
        });
    }
    let to_int = |value: f64, term: &dyn Fn() -> String| -> Result<i64, TransformError> {
        let scaled = value * f64::from(scale);
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-6 * rounded.abs().max(1.0) {
            return Err(TransformError::NonIntegralCoefficient {
                constraint: constraint.name.clone(),
                term: term(),
                value: scaled,
                scale,
            });
        }
        Ok(rounded as i64)
    };
    let mut terms = Vec::with_capacity(constraint.expr.linear.len());
    for (&var, &coeff) in &constraint.expr.linear {
        terms.push((var, to_int(coeff, &|| term_name(var))?));
    }
    let offset = to_int(constraint.expr.offset, &|| "the constant term".to_string())?;
    Ok(ScaledLinear { terms, offset })
}

/// Integer form of a linear constraint at its declared scale:
/// `(terms, offset)` with terms ascending by variable index.
pub(crate) fn scaled_constraint_terms(
    constraint: &Constraint,
) -> Result<(Vec<(usize, i64)>, i64), TransformError> {
    let scaled = scale_to_integers(constraint, constraint.scale, |v| {
        format!("the coefficient of x{v}")
    })?;
    Ok((scaled.terms, scaled.offset))
}

/// Computes the slack encoding for a `Le` constraint at the given scale:
/// the slack range is the negated hypercube minimum of the scaled
/// expression (clamped at zero), covered by trimmed binary weights.
pub fn slack_bits(constraint: &Constraint, scale: u32) -> Result<SlackEncoding, TransformError> {
    if constraint.sense != ConstraintSense::Le {
        return Err(TransformError::NotLe { constraint: constraint.name.clone() });
    }
    let scaled = scale_to_integers(constraint, scale, |v| format!("the coefficient of x{v}"))?;
    let range = u64::try_from(-scaled.hypercube_min()).unwrap_or(0);
    Ok(SlackEncoding { range, bit_weights: trimmed_binary_weights(range) })
}

/// An unconstrained quadratic form over the original variables plus the
/// slack bits introduced for inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QuboDoc", try_from = "QuboDoc")]
pub struct QuboModel {
    num_vars: usize,
    num_original: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    provenance: BTreeMap<usize, SlackSource>,
    penalty_weights: BTreeMap<String, f64>,
    /// Constraints satisfied by every point of the hypercube are dropped
    /// from the penalty sum and recorded here.
    warnings: Vec<String>,
}

impl QuboModel {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Count of original model variables; slack bits occupy the indices
    /// from here to `num_vars`.
    pub fn num_original(&self) -> usize {
        self.num_original
    }

    pub fn linear(&self) -> &BTreeMap<usize, f64> {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn provenance(&self) -> &BTreeMap<usize, SlackSource> {
        &self.provenance
    }

    pub fn penalty_weights(&self) -> &BTreeMap<String, f64> {
        &self.penalty_weights
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// QUBO energy of a full (original + slack) bit vector.
    pub fn energy(&self, bits: &[bool]) -> Result<f64, TransformError> {
        if bits.len() != self.num_vars {
            return Err(TransformError::LengthMismatch {
                expected: self.num_vars,
                got: bits.len(),
            });
        }
        let mut total = self.offset;
        for (&i, &c) in &self.linear {
            if bits[i] {
                total += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if bits[i] && bits[j] {
                total += c;
            }
        }
        Ok(total)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("qubo serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("qubo serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self, TransformError> {
        serde_json::from_str(text).map_err(|e| TransformError::Document(e.to_string()))
    }

    /// Plain upper-triangular COO text: `i j value` lines with the linear
    /// part on the diagonal, preceded by `#` comment lines for the variable
    /// count and constant offset.
    pub fn to_coo_string(&self) -> String {
        let mut entries: Vec<(usize, usize, f64)> =
            self.linear.iter().map(|(&i, &v)| (i, i, v)).collect();
        entries.extend(self.quadratic.iter().map(|(&(i, j), &v)| (i, j, v)));
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = format!("# num_vars {}\n# offset {}\n", self.num_vars, self.offset);
        for (i, j, v) in entries {
            out.push_str(&format!("{i} {j} {v}\n"));
        }
        out
    }
}

/// A QUBO solution split back into the original assignment and the decoded
/// per-constraint slack integers.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSample {
    pub assignment: Assignment,
    pub slack_values: BTreeMap<String, u64>,
}

/// Truncates a QUBO solution to the original variables and reconstructs
/// each constraint's slack integer from provenance. Feasibility of the
/// result is for the model layer to check; it is never inferred from
/// penalty energy.
pub fn decode(qubo: &QuboModel, solution: &Assignment) -> Result<DecodedSample, TransformError> {
    if solution.len() != qubo.num_vars {
        return Err(TransformError::LengthMismatch {
            expected: qubo.num_vars,
            got: solution.len(),
        });
    }
    let assignment = Assignment::new(solution.bits()[..qubo.num_original].to_vec());
    let mut slack_values = BTreeMap::new();
    for (&index, source) in &qubo.provenance {
        let entry = slack_values.entry(source.constraint.clone()).or_insert(0u64);
        if solution.get(index) == Some(true) {
            *entry += source.weight;
        }
    }
    Ok(DecodedSample { assignment, slack_values })
}

/// Folds every constraint of the model into a penalized QUBO.
///
/// For a feasible assignment there is always a slack setting with total
/// penalty zero, so the QUBO energy equals the objective there; with auto
/// penalty weights at multiplier >= 2 every infeasible assignment costs
/// strictly more than the feasible optimum.
pub fn to_qubo(model: &CqmModel, policy: &PenaltyPolicy) -> Result<QuboModel, TransformError> {
    policy.validate()?;
    if !model.objective().all_finite() {
        return Err(TransformError::NonFinite { context: "objective".to_string() });
    }
    let weights = match *policy {
        PenaltyPolicy::Auto { multiplier } => auto_penalty(model, multiplier)?,
        PenaltyPolicy::Fixed { weight } => model
            .constraints()
            .iter()
            .map(|c| (c.name.clone(), weight))
            .collect(),
    };

    let n = model.num_variables();
    let mut linear: BTreeMap<usize, f64> = model.objective().linear.clone();
    let mut quadratic: BTreeMap<(usize, usize), f64> = model.objective().quadratic.clone();
    let mut offset = model.objective().offset;
    let mut provenance = BTreeMap::new();
    let mut penalty_weights = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut next_slack = n;

    for constraint in model.constraints() {
        let scaled = scale_to_integers(constraint, constraint.scale, |v| {
            model
                .label(v)
                .map(|l| format!("the coefficient of {l:?}"))
                .unwrap_or_else(|| format!("the coefficient of x{v}"))
        })?;

        let slack_weights = match constraint.sense {
            ConstraintSense::Eq => Vec::new(),
            ConstraintSense::Le => {
                let lo = scaled.hypercube_min();
                if lo > 0 {
                    return Err(TransformError::Unsatisfiable {
                        constraint: constraint.name.clone(),
                    });
                }
                if scaled.hypercube_max() <= 0 {
                    warnings.push(format!(
                        "constraint {:?} holds everywhere; no penalty emitted",
                        constraint.name
                    ));
                    continue;
                }
                trimmed_binary_weights((-lo) as u64)
            }
            // The model normalizes Ge away; reject anything hand-built.
            ConstraintSense::Ge => {
                return Err(TransformError::NotLe { constraint: constraint.name.clone() })
            }
        };

        let penalty = weights[&constraint.name];
        penalty_weights.insert(constraint.name.clone(), penalty);

        // Terms of the squared expression: original variables, then this
        // constraint's slack bits, all ascending by QUBO index.
        let mut terms: Vec<(usize, i64)> = scaled.terms.clone();
        for (bit, &weight) in slack_weights.iter().enumerate() {
            let index = next_slack;
            next_slack += 1;
            terms.push((index, weight as i64));
            provenance.insert(
                index,
                SlackSource { constraint: constraint.name.clone(), bit, weight },
            );
        }

        // P * (sum_t w_t z_t + c)^2 expanded over binary z:
        //   linear   P * (w_t^2 + 2 c w_t)
        //   pairwise P * 2 w_t w_u
        //   constant P * c^2
        let c = scaled.offset as i128;
        for &(index, w) in &terms {
            let w = w as i128;
            *linear.entry(index).or_insert(0.0) += (w * w + 2 * c * w) as f64 * penalty;
        }
        for (a, &(ia, wa)) in terms.iter().enumerate() {
            for &(ib, wb) in &terms[a + 1..] {
                *quadratic.entry((ia, ib)).or_insert(0.0) +=
                    (2 * wa as i128 * wb as i128) as f64 * penalty;
            }
        }
        offset += (c * c) as f64 * penalty;
    }

    linear.retain(|_, v| *v != 0.0);
    quadratic.retain(|_, v| *v != 0.0);

    Ok(QuboModel {
        num_vars: next_slack,
        num_original: n,
        linear,
        quadratic,
        offset,
        provenance,
        penalty_weights,
        warnings,
    })
}

#[derive(Serialize, Deserialize)]
struct QuboDoc {
    num_vars: usize,
    num_original: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: Vec<(usize, usize, f64)>,
    offset: f64,
    provenance: BTreeMap<usize, SlackSource>,
    penalty_weights: BTreeMap<String, f64>,
    #[serde(default)]
    warnings: Vec<String>,
}

impl From<QuboModel> for QuboDoc {
    fn from(q: QuboModel) -> Self {
        QuboDoc {
            num_vars: q.num_vars,
            num_original: q.num_original,
            linear: q.linear,
            quadratic: q.quadratic.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
            offset: q.offset,
            provenance: q.provenance,
            penalty_weights: q.penalty_weights,
            warnings: q.warnings,
        }
    }
}

impl TryFrom<QuboDoc> for QuboModel {
    type Error = TransformError;

    fn try_from(doc: QuboDoc) -> Result<Self, TransformError> {
        if doc.num_original > doc.num_vars {
            return Err(TransformError::Document(format!(
                "num_original {} exceeds num_vars {}",
                doc.num_original, doc.num_vars
            )));
        }
        if doc.provenance.len() != doc.num_vars - doc.num_original {
            return Err(TransformError::Document(format!(
                "{} slack variables but {} provenance entries",
                doc.num_vars - doc.num_original,
                doc.provenance.len()
            )));
        }
        for &index in doc.provenance.keys() {
            if index < doc.num_original || index >= doc.num_vars {
                return Err(TransformError::Document(format!(
                    "provenance entry {index} is outside the slack index range"
                )));
            }
        }
        if doc.penalty_weights.values().any(|&w| !(w > 0.0)) {
            return Err(TransformError::Document(
                "penalty weights must be strictly positive".to_string(),
            ));
        }
        let mut quadratic = BTreeMap::new();
        for (i, j, v) in doc.quadratic {
            if i >= j {
                return Err(TransformError::Document(format!(
                    "quadratic entry ({i}, {j}) is not in canonical (min, max) order"
                )));
            }
            quadratic.insert((i, j), v);
        }
        Ok(QuboModel {
            num_vars: doc.num_vars,
            num_original: doc.num_original,
            linear: doc.linear,
            quadratic,
            offset: doc.offset,
            provenance: doc.provenance,
            penalty_weights: doc.penalty_weights,
            warnings: doc.warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::QuadraticExpression;
    use crate::model::{Constraint, ConstraintKind, CqmModel};

    fn model_with_one_hot(n: usize, group: &[usize]) -> CqmModel {
        let mut model = CqmModel::new();
        for i in 0..n {
            model.add_variable(format!("x{i}")).unwrap();
        }
        let mut expr = QuadraticExpression::with_offset(-1.0);
        for &v in group {
            expr.add_linear(v, 1.0);
        }
        model
            .add_constraint(Constraint::new(
                "one_hot:g",
                expr,
                ConstraintSense::Eq,
                ConstraintKind::OneHot,
            ))
            .unwrap();
        model
    }

    fn le_constraint(coeffs: &[(usize, f64)], offset: f64) -> Constraint {
        let mut expr = QuadraticExpression::with_offset(offset);
        for &(v, c) in coeffs {
            expr.add_linear(v, c);
        }
        Constraint::new("le", expr, ConstraintSense::Le, ConstraintKind::Generic)
    }

    #[test]
    fn one_hot_penalty_expands_to_known_coefficients() {
        let model = model_with_one_hot(4, &[0, 1, 2, 3]);
        let qubo = to_qubo(&model, &PenaltyPolicy::Fixed { weight: 7.0 }).unwrap();
        assert_eq!(qubo.num_vars(), 4);
        for i in 0..4 {
            assert_eq!(qubo.linear()[&i], -7.0);
        }
        assert_eq!(qubo.quadratic().len(), 6);
        assert!(qubo.quadratic().values().all(|&v| v == 14.0));
        assert_eq!(qubo.offset(), 7.0);
    }

    #[test]
    fn unconstrained_model_maps_to_its_objective() {
        let mut model = CqmModel::new();
        model.add_variable("a").unwrap();
        model.add_variable("b").unwrap();
        let mut obj = QuadraticExpression::with_offset(0.5);
        obj.add_linear(0, 3.0).add_quadratic(0, 1, -2.0);
        model.set_objective(obj.clone()).unwrap();
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        assert_eq!(qubo.num_vars(), 2);
        assert_eq!(qubo.linear(), &obj.linear);
        assert_eq!(qubo.quadratic(), &obj.quadratic);
        assert_eq!(qubo.offset(), 0.5);
        assert!(qubo.provenance().is_empty());
    }

    #[test]
    fn slack_bits_single_unit_range() {
        // x0 - 1 <= 0: hypercube minimum is -1, so one slack bit of weight 1.
        let con = le_constraint(&[(0, 1.0)], -1.0);
        let enc = slack_bits(&con, 1).unwrap();
        assert_eq!(enc.range, 1);
        assert_eq!(enc.bit_weights, [1]);
    }

    #[test]
    fn slack_bits_zero_range_for_equality_like_bound() {
        let con = le_constraint(&[(0, 2.0), (1, 3.0)], 0.0);
        let enc = slack_bits(&con, 1).unwrap();
        assert_eq!(enc.range, 0);
        assert!(enc.bit_weights.is_empty());
    }

    #[test]
    fn slack_bits_trims_the_top_weight() {
        for range in 1u64..=200 {
            let weights = trimmed_binary_weights(range);
            assert_eq!(weights.iter().sum::<u64>(), range);
            // Exact coverage of 0..=range, nothing else.
            let mut representable = vec![false; range as usize + 1];
            for pattern in 0..(1u32 << weights.len()) {
                let value: u64 = weights
                    .iter()
                    .enumerate()
                    .filter(|&(b, _)| pattern >> b & 1 == 1)
                    .map(|(_, &w)| w)
                    .sum();
                assert!(value <= range, "range {range} overshoots");
                representable[value as usize] = true;
            }
            assert!(representable.iter().all(|&r| r), "range {range} has gaps");
        }
    }

    #[test]
    fn non_integral_coefficient_is_named() {
        let con = le_constraint(&[(0, 0.5)], -1.0);
        match slack_bits(&con, 1) {
            Err(TransformError::NonIntegralCoefficient { term, scale, .. }) => {
                assert!(term.contains("x0"));
                assert_eq!(scale, 1);
            }
            other => panic!("expected NonIntegralCoefficient, got {other:?}"),
        }
    }

    #[test]
    fn unsatisfiable_inequality_is_rejected() {
        let mut model = CqmModel::new();
        model.add_variable("a").unwrap();
        model.add_constraint(le_constraint(&[(0, 1.0)], 1.0)).unwrap();
        assert_eq!(
            to_qubo(&model, &PenaltyPolicy::default()),
            Err(TransformError::Unsatisfiable { constraint: "le".into() })
        );
    }

    #[test]
    fn trivially_satisfied_inequality_is_dropped_with_warning() {
        let mut model = CqmModel::new();
        model.add_variable("a").unwrap();
        model.add_constraint(le_constraint(&[(0, -1.0)], 0.0)).unwrap();
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        assert_eq!(qubo.num_vars(), 1);
        assert!(qubo.linear().is_empty());
        assert_eq!(qubo.warnings().len(), 1);
        assert!(qubo.warnings()[0].contains("le"));
        assert!(qubo.penalty_weights().is_empty());
    }

    #[test]
    fn auto_penalty_menu_style_weights() {
        let mut model = CqmModel::new();
        model.add_variable("a").unwrap();
        let mut obj = QuadraticExpression::new();
        obj.add_linear(0, 5.0);
        model.set_objective(obj).unwrap();
        model.add_constraint(le_constraint(&[(0, 1.0)], -1.0)).unwrap();
        let weights = auto_penalty(&model, 1.0).unwrap();
        assert_eq!(weights["le"], 5.0);
    }

    #[test]
    fn auto_penalty_floors_empty_objectives_at_one() {
        let mut model = CqmModel::new();
        model.add_variable("a").unwrap();
        model.add_constraint(le_constraint(&[(0, 1.0)], -1.0)).unwrap();
        let weights = auto_penalty(&model, 2.0).unwrap();
        assert_eq!(weights["le"], 1.0);
    }

    #[test]
    fn decode_is_identity_without_slack() {
        let model = model_with_one_hot(3, &[0, 1, 2]);
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        let solution = Assignment::from_ints([1, 0, 0]).unwrap();
        let decoded = decode(&qubo, &solution).unwrap();
        assert_eq!(decoded.assignment, solution);
        assert!(decoded.slack_values.is_empty());
    }

    #[test]
    fn decode_reconstructs_slack_from_bit_weights() {
        let mut model = CqmModel::new();
        for i in 0..2 {
            model.add_variable(format!("x{i}")).unwrap();
        }
        // 2x0 + 3x1 - 4 <= 0: range 4, weights [1, 2, 1].
        model.add_constraint(le_constraint(&[(0, 2.0), (1, 3.0)], -4.0)).unwrap();
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        assert_eq!(qubo.num_vars(), 5);
        let solution = Assignment::from_ints([1, 0, 1, 0, 1]).unwrap();
        let decoded = decode(&qubo, &solution).unwrap();
        assert_eq!(decoded.slack_values["le"], 2);
    }

    #[test]
    fn feasible_energy_matches_objective_with_right_slack() {
        let mut model = CqmModel::new();
        for i in 0..2 {
            model.add_variable(format!("x{i}")).unwrap();
        }
        let mut obj = QuadraticExpression::new();
        obj.add_linear(0, 4.0).add_linear(1, 9.0);
        model.set_objective(obj).unwrap();
        model.add_constraint(le_constraint(&[(0, 2.0), (1, 3.0)], -4.0)).unwrap();
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        // x = (1, 0): expression value -2, so slack 2 zeroes the penalty.
        // Weights are [1, 2, 1]; slack bits (0, 1, 0) encode 2.
        let bits = vec![true, false, false, true, false];
        assert_eq!(qubo.energy(&bits).unwrap(), 4.0);
    }

    #[test]
    fn qubo_json_round_trips() {
        let model = model_with_one_hot(3, &[0, 1]);
        let qubo = to_qubo(&model, &PenaltyPolicy::Fixed { weight: 2.5 }).unwrap();
        let back = QuboModel::from_json_str(&qubo.to_json_string()).unwrap();
        assert_eq!(back, qubo);
    }

    #[test]
    fn coo_export_puts_linear_on_the_diagonal() {
        let model = model_with_one_hot(2, &[0, 1]);
        let qubo = to_qubo(&model, &PenaltyPolicy::Fixed { weight: 1.0 }).unwrap();
        let coo = qubo.to_coo_string();
        let lines: Vec<&str> = coo.lines().collect();
        assert_eq!(lines[0], "# num_vars 2");
        assert_eq!(lines[1], "# offset 1");
        assert_eq!(lines[2], "0 0 -1");
        assert_eq!(lines[3], "0 1 2");
        assert_eq!(lines[4], "1 1 -1");
    }
}
