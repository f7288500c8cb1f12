//! Solver results: samples with recomputed energy and feasibility, the
//! deduplicated and canonically ordered sample set, and solve parameters
//! shared by every backend.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use crate::expr::Assignment;
use crate::model::CqmModel;
use crate::solvers::SolverError;

/// One violated constraint on a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub amount: f64,
}

/// A candidate assignment with its objective value ("energy"), how often a
/// backend produced it, and its exact feasibility verdict. Energy is always
/// recomputed locally from the objective; backend-reported values are never
/// trusted.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub assignment: Assignment,
    pub energy: f64,
    pub num_occurrences: u64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl Sample {
    /// Unweighted sum of violation magnitudes across constraints.
    pub fn total_violation(&self) -> f64 {
        self.violations.iter().map(|v| v.amount).sum()
    }
}

impl Serialize for Sample {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Sample", 5)?;
        s.serialize_field("bits", &self.assignment)?;
        s.serialize_field("energy", &self.energy)?;
        s.serialize_field("num_occurrences", &self.num_occurrences)?;
        s.serialize_field("feasible", &self.feasible)?;
        s.serialize_field("violations", &self.violations)?;
        s.end()
    }
}

/// Canonical sample order: feasible before infeasible, then ascending
/// energy, ties broken by lexicographic assignment bits.
pub fn canonical_order(a: &Sample, b: &Sample) -> Ordering {
    b.feasible
        .cmp(&a.feasible)
        .then_with(|| a.energy.total_cmp(&b.energy))
        .then_with(|| a.assignment.cmp(&b.assignment))
}

/// Deduplicated, canonically ordered samples from one solve call.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    /// Total reads behind the samples; occurrence counts sum to this.
    pub total_reads: u64,
    pub backend_name: String,
    /// Wall-clock duration of the solve. Excluded from serialized output so
    /// repeated runs stay byte-identical.
    pub wall_time: Duration,
}

impl SampleSet {
    pub fn empty(backend_name: impl Into<String>) -> Self {
        Self {
            samples: Vec::new(),
            total_reads: 0,
            backend_name: backend_name.into(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn has_feasible(&self) -> bool {
        self.samples.iter().any(|s| s.feasible)
    }

    /// Lowest-energy feasible sample (the first one, by canonical order).
    pub fn best_feasible(&self) -> Option<&Sample> {
        self.samples.iter().find(|s| s.feasible)
    }

    /// Sample with the smallest total violation; ties broken by energy,
    /// then bits. For feasible samples the total violation is zero, so this
    /// degenerates to the best feasible sample.
    pub fn least_violating(&self) -> Option<&Sample> {
        self.samples.iter().min_by(|a, b| {
            a.total_violation()
                .total_cmp(&b.total_violation())
                .then_with(|| a.energy.total_cmp(&b.energy))
                .then_with(|| a.assignment.cmp(&b.assignment))
        })
    }
}

impl Serialize for SampleSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("SampleSet", 3)?;
        s.serialize_field("backend", &self.backend_name)?;
        s.serialize_field("total_reads", &self.total_reads)?;
        s.serialize_field("samples", &self.samples)?;
        s.end()
    }
}

/// Parameters shared by the solver backends. The annealing backend uses
/// `num_reads`, `seed`, `sweeps` and the geometric inverse-temperature
/// schedule; the remote backend uses `num_reads` and `time_limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub num_reads: u32,
    pub seed: u64,
    pub sweeps: u32,
    pub beta_start: f64,
    pub beta_end: f64,
    pub time_limit: Duration,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            num_reads: 100,
            seed: 0,
            sweeps: 1000,
            beta_start: 0.01,
            beta_end: 10.0,
            time_limit: Duration::from_secs(5),
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.num_reads == 0 || self.sweeps == 0 {
            return Err(SolverError::InvalidParams {
                reason: "num_reads and sweeps must be at least 1".to_string(),
            });
        }
        if !(self.beta_start > 0.0 && self.beta_end.is_finite() && self.beta_start < self.beta_end)
        {
            return Err(SolverError::InvalidParams {
                reason: format!(
                    "need 0 < beta_start < beta_end, got {} and {}",
                    self.beta_start, self.beta_end
                ),
            });
        }
        Ok(())
    }
}

/// Merges raw (assignment, count) pairs into a canonical sample set:
/// duplicates are combined, energy and feasibility are recomputed from the
/// model for every sample, and the result is deterministically ordered.
pub fn aggregate(
    model: &CqmModel,
    raw: impl IntoIterator<Item = (Assignment, u64)>,
    backend_name: impl Into<String>,
    wall_time: Duration,
) -> Result<SampleSet, SolverError> {
    let mut counts: BTreeMap<Assignment, u64> = BTreeMap::new();
    let mut total_reads = 0u64;
    for (assignment, count) in raw {
        if count == 0 {
            return Err(SolverError::InvalidParams {
                reason: "sample occurrence counts must be at least 1".to_string(),
            });
        }
        total_reads += count;
        *counts.entry(assignment).or_insert(0) += count;
    }

    let mut samples = Vec::with_capacity(counts.len());
    for (assignment, num_occurrences) in counts {
        let energy = model.evaluate_objective(&assignment)?;
        let feas = model.is_feasible(&assignment)?;
        let violations = model
            .constraints()
            .iter()
            .zip(&feas.verdicts)
            .filter(|(_, v)| !v.satisfied)
            .map(|(c, v)| Violation { constraint: c.name.clone(), amount: v.violation })
            .collect();
        samples.push(Sample {
            assignment,
            energy,
            num_occurrences,
            feasible: feas.feasible,
            violations,
        });
    }
    samples.sort_by(canonical_order);

    Ok(SampleSet {
        samples,
        total_reads,
        backend_name: backend_name.into(),
        wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::QuadraticExpression;
    use crate::model::{Constraint, ConstraintKind, ConstraintSense};

    fn two_var_model() -> CqmModel {
        let mut model = CqmModel::new();
        model.add_variable("a").unwrap();
        model.add_variable("b").unwrap();
        let mut obj = QuadraticExpression::new();
        obj.add_linear(0, 2.0).add_linear(1, 9.0);
        model.set_objective(obj).unwrap();
        let mut expr = QuadraticExpression::with_offset(-1.0);
        expr.add_linear(1, 1.0);
        model
            .add_constraint(Constraint::new(
                "pick_b",
                expr,
                ConstraintSense::Eq,
                ConstraintKind::Generic,
            ))
            .unwrap();
        model
    }

    fn bits(pattern: &[i64]) -> Assignment {
        Assignment::from_ints(pattern.iter().copied()).unwrap()
    }

    #[test]
    fn aggregate_merges_duplicates_and_sums_counts() {
        let model = two_var_model();
        let set = aggregate(
            &model,
            vec![(bits(&[1, 0]), 3), (bits(&[1, 0]), 2), (bits(&[0, 1]), 1)],
            "test",
            Duration::ZERO,
        )
        .unwrap();
        assert_eq!(set.samples.len(), 2);
        assert_eq!(set.total_reads, 6);
        let occurrences: Vec<u64> = set.samples.iter().map(|s| s.num_occurrences).collect();
        // Feasible (0,1) with energy 9 orders before infeasible (1,0) with energy 2.
        assert_eq!(occurrences, [1, 5]);
        assert!(set.samples[0].feasible);
        assert_eq!(set.samples[0].energy, 9.0);
        assert!(!set.samples[1].feasible);
        assert_eq!(set.samples[1].energy, 2.0);
    }

    #[test]
    fn aggregate_empty_input_is_an_empty_set() {
        let model = two_var_model();
        let set = aggregate(&model, vec![], "test", Duration::ZERO).unwrap();
        assert!(set.samples.is_empty());
        assert_eq!(set.total_reads, 0);
    }

    #[test]
    fn aggregate_rejects_zero_counts() {
        let model = two_var_model();
        assert!(aggregate(&model, vec![(bits(&[0, 0]), 0)], "t", Duration::ZERO).is_err());
    }

    #[test]
    fn least_violating_prefers_smallest_total_violation() {
        let model = two_var_model();
        let set = aggregate(
            &model,
            vec![(bits(&[0, 0]), 1), (bits(&[1, 0]), 1)],
            "test",
            Duration::ZERO,
        )
        .unwrap();
        assert!(!set.has_feasible());
        // Both violate the equality by 1; the tie breaks on energy.
        assert_eq!(set.least_violating().unwrap().energy, 0.0);
    }

    #[test]
    fn energy_is_recomputed_not_trusted() {
        let model = two_var_model();
        let set = aggregate(&model, vec![(bits(&[1, 1]), 4)], "test", Duration::ZERO).unwrap();
        assert_eq!(set.samples[0].energy, 11.0);
        assert_eq!(set.samples[0].num_occurrences, 4);
        assert!(set.samples[0].feasible);
    }
}
