//! Exhaustive ground-truth enumeration.
//!
//! Two modes: a plain 2^n sweep for small models, and a Cartesian-product
//! mode that walks only assignments respecting the model's one-hot group
//! structure (one item per group, times free binary variables), which is
//! what makes catalog-sized instances tractable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::expr::{Assignment, QuadraticExpression};
use crate::model::{ConstraintSense, CqmModel};
use crate::sample::{aggregate, SampleSet};
use crate::solvers::{Solver, SolverError};
use crate::sample::SolveParams;

/// Cap for plain 2^n enumeration.
pub const FULL_ENUM_MAX_VARS: usize = 30;
/// Cap for one-hot Cartesian enumeration.
pub const CARTESIAN_MAX_CANDIDATES: u128 = 100_000_000;

/// One detected one-hot group: the constraint it came from and the variable
/// indices that form it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotGroup {
    pub constraint: String,
    pub members: Vec<usize>,
}

/// Disjoint one-hot groups plus the variables not covered by any group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotStructure {
    pub groups: Vec<OneHotGroup>,
    pub free: Vec<usize>,
}

impl OneHotStructure {
    /// Finds equality constraints of the exact form `sum_G x_i - 1 = 0`
    /// over disjoint groups. Returns `None` when there are none, or when
    /// two such constraints share a variable (the structure would not be a
    /// product space).
    pub fn detect(model: &CqmModel) -> Option<Self> {
        let n = model.num_variables();
        let mut covered = vec![false; n];
        let mut groups = Vec::new();
        for constraint in model.constraints() {
            if constraint.sense != ConstraintSense::Eq
                || !constraint.expr.is_linear()
                || constraint.expr.offset != -1.0
                || constraint.expr.linear.is_empty()
                || constraint.expr.linear.values().any(|&c| c != 1.0)
            {
                continue;
            }
            let members: Vec<usize> = constraint.expr.linear.keys().copied().collect();
            if members.iter().any(|&v| covered[v]) {
                return None;
            }
            for &v in &members {
                covered[v] = true;
            }
            groups.push(OneHotGroup { constraint: constraint.name.clone(), members });
        }
        if groups.is_empty() {
            return None;
        }
        let free = (0..n).filter(|&v| !covered[v]).collect();
        Some(Self { groups, free })
    }

    /// Number of assignments respecting every group: the product of group
    /// sizes times 2^(free variables). Saturates at `u128::MAX`.
    pub fn candidate_count(&self) -> u128 {
        let mut count: u128 = 1;
        for group in &self.groups {
            count = count.saturating_mul(group.members.len() as u128);
        }
        if self.free.len() >= 128 {
            return u128::MAX;
        }
        count.saturating_mul(1u128 << self.free.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationMode {
    Cartesian,
    Full,
}

/// How a solve actually ran, for callers that assert on the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactStats {
    pub mode: EnumerationMode,
    /// Candidate assignments visited.
    pub visited: u128,
}

/// heap entry ordered worst-first so the binary heap can evict
struct HeapEntry {
    primary: f64,
    secondary: f64,
    bits: Vec<bool>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then_with(|| self.secondary.total_cmp(&other.secondary))
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

/// Keeps the k smallest (primary, secondary, bits) candidates.
struct TopK {
    k: usize,
    heap: BinaryHeap<HeapEntry>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::new() }
    }

    fn offer(&mut self, primary: f64, secondary: f64, bits: impl FnOnce() -> Vec<bool>) {
        if self.heap.len() < self.k {
            self.heap.push(HeapEntry { primary, secondary, bits: bits() });
            return;
        }
        let worst = self.heap.peek().expect("non-empty heap");
        match primary
            .total_cmp(&worst.primary)
            .then_with(|| secondary.total_cmp(&worst.secondary))
        {
            Ordering::Less => {
                self.heap.pop();
                self.heap.push(HeapEntry { primary, secondary, bits: bits() });
            }
            Ordering::Equal => {
                let bits = bits();
                if bits < worst.bits {
                    self.heap.pop();
                    self.heap.push(HeapEntry { primary, secondary, bits });
                }
            }
            Ordering::Greater => {}
        }
    }

    fn into_assignments(self) -> Vec<Assignment> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|e| Assignment::new(e.bits))
            .collect()
    }

    fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Per-candidate violation of one constraint value.
fn violation_of(sense: ConstraintSense, value: f64, eps: f64) -> f64 {
    match sense {
        ConstraintSense::Eq => (value.abs() - eps).max(0.0),
        ConstraintSense::Le => (value - eps).max(0.0),
        ConstraintSense::Ge => (-value - eps).max(0.0),
    }
}

/// Expression evaluator for the Cartesian walk: positions contribute
/// precomputed deltas when every expression is linear, otherwise values are
/// computed from the materialized bits.
enum Evaluator {
    Linear {
        /// [expression][position][choice] -> coefficient sum.
        contrib: Vec<Vec<Vec<f64>>>,
        base: Vec<f64>,
    },
    General(Vec<QuadraticExpression>),
}

fn solve_cartesian(
    model: &CqmModel,
    structure: &OneHotStructure,
    top_k: usize,
) -> (Vec<Assignment>, u128) {
    let n = model.num_variables();
    // Positions: one per group (choices = members), then one per free
    // variable (choices = clear/set).
    let positions: Vec<Vec<Vec<usize>>> = structure
        .groups
        .iter()
        .map(|g| g.members.iter().map(|&m| vec![m]).collect())
        .chain(structure.free.iter().map(|&v| vec![vec![], vec![v]]))
        .collect();

    let exprs: Vec<&QuadraticExpression> = std::iter::once(model.objective())
        .chain(model.constraints().iter().map(|c| &c.expr))
        .collect();
    let senses: Vec<ConstraintSense> = model.constraints().iter().map(|c| c.sense).collect();
    let eps = model.eps();

    let evaluator = if exprs.iter().all(|e| e.is_linear()) {
        Evaluator::Linear {
            contrib: exprs
                .iter()
                .map(|expr| {
                    positions
                        .iter()
                        .map(|choices| {
                            choices
                                .iter()
                                .map(|vars| {
                                    vars.iter()
                                        .map(|v| expr.linear.get(v).copied().unwrap_or(0.0))
                                        .sum()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            base: exprs.iter().map(|e| e.offset).collect(),
        }
    } else {
        Evaluator::General(exprs.iter().map(|&e| e.clone()).collect())
    };

    let mut feasible = TopK::new(top_k);
    let mut violating = TopK::new(top_k);
    let mut visited: u128 = 0;

    let mut cursor = vec![0usize; positions.len()];
    let mut bits = vec![false; n];
    for (p, choices) in positions.iter().enumerate() {
        for &v in &choices[cursor[p]] {
            bits[v] = true;
        }
    }
    let mut values = vec![0.0f64; exprs.len()];

    loop {
        visited += 1;
        match &evaluator {
            Evaluator::Linear { contrib, base } => {
                for (e, value) in values.iter_mut().enumerate() {
                    let mut total = base[e];
                    for (p, &choice) in cursor.iter().enumerate() {
                        total += contrib[e][p][choice];
                    }
                    *value = total;
                }
            }
            Evaluator::General(exprs) => {
                let assignment = Assignment::new(bits.clone());
                for (e, expr) in exprs.iter().enumerate() {
                    values[e] = expr.evaluate(&assignment).expect("indices validated");
                }
            }
        }

        let energy = values[0];
        let total_violation: f64 = senses
            .iter()
            .zip(&values[1..])
            .map(|(&sense, &value)| violation_of(sense, value, eps))
            .sum();
        if total_violation == 0.0 {
            feasible.offer(energy, 0.0, || bits.clone());
        } else {
            violating.offer(total_violation, energy, || bits.clone());
        }

        // Advance the odometer.
        let mut p = positions.len();
        loop {
            if p == 0 {
                p = usize::MAX;
                break;
            }
            p -= 1;
            for &v in &positions[p][cursor[p]] {
                bits[v] = false;
            }
            cursor[p] += 1;
            if cursor[p] < positions[p].len() {
                for &v in &positions[p][cursor[p]] {
                    bits[v] = true;
                }
                break;
            }
            cursor[p] = 0;
            for &v in &positions[p][cursor[p]] {
                bits[v] = true;
            }
        }
        if p == usize::MAX {
            break;
        }
    }

    let chosen = if feasible.is_empty() { violating } else { feasible };
    (chosen.into_assignments(), visited)
}

fn solve_full(model: &CqmModel, top_k: usize) -> (Vec<Assignment>, u128) {
    let n = model.num_variables();
    let mut feasible = TopK::new(top_k);
    let mut violating = TopK::new(top_k);
    let eps = model.eps();

    for counter in 0u64..(1u64 << n) {
        let bits: Vec<bool> = (0..n).map(|i| counter >> i & 1 == 1).collect();
        let assignment = Assignment::new(bits.clone());
        let energy = model
            .objective()
            .evaluate(&assignment)
            .expect("indices validated");
        let total_violation: f64 = model
            .constraints()
            .iter()
            .map(|c| {
                let value = c.expr.evaluate(&assignment).expect("indices validated");
                violation_of(c.sense, value, eps)
            })
            .sum();
        if total_violation == 0.0 {
            feasible.offer(energy, 0.0, || bits.clone());
        } else {
            violating.offer(total_violation, energy, || bits.clone());
        }
    }

    let chosen = if feasible.is_empty() { violating } else { feasible };
    (chosen.into_assignments(), 1u128 << n)
}

/// Exhaustively finds the `top_k` best feasible assignments (or, when no
/// feasible assignment exists, the `top_k` smallest-total-violation ones).
/// Prefers Cartesian mode when the model has usable one-hot structure
/// within the candidate cap, falling back to plain 2^n enumeration.
pub fn solve_exact_with_stats(
    model: &CqmModel,
    top_k: usize,
) -> Result<(SampleSet, ExactStats), SolverError> {
    if top_k == 0 {
        return Err(SolverError::InvalidParams { reason: "top_k must be at least 1".to_string() });
    }
    let started = Instant::now();
    let structure = OneHotStructure::detect(model);
    let cartesian_count = structure.as_ref().map(|s| s.candidate_count());

    let (assignments, visited, mode) = match (&structure, cartesian_count) {
        (Some(s), Some(count)) if count <= CARTESIAN_MAX_CANDIDATES => {
            let (assignments, visited) = solve_cartesian(model, s, top_k);
            (assignments, visited, EnumerationMode::Cartesian)
        }
        _ if model.num_variables() <= FULL_ENUM_MAX_VARS => {
            let (assignments, visited) = solve_full(model, top_k);
            (assignments, visited, EnumerationMode::Full)
        }
        _ => {
            let cartesian_note = match cartesian_count {
                Some(count) => format!(
                    "one-hot Cartesian mode would visit {count} candidates (cap {CARTESIAN_MAX_CANDIDATES})"
                ),
                None => "it has no disjoint one-hot structure for Cartesian mode".to_string(),
            };
            return Err(SolverError::SizeLimit {
                variables: model.num_variables(),
                full_cap: FULL_ENUM_MAX_VARS,
                cartesian_note,
            });
        }
    };

    let set = aggregate(
        model,
        assignments.into_iter().map(|a| (a, 1)),
        "exact",
        started.elapsed(),
    )?;
    Ok((set, ExactStats { mode, visited }))
}

pub fn solve_exact(model: &CqmModel, top_k: usize) -> Result<SampleSet, SolverError> {
    solve_exact_with_stats(model, top_k).map(|(set, _)| set)
}

/// The exhaustive enumerator as a registry strategy.
pub struct ExactSolver {
    pub top_k: usize,
}

impl Solver for ExactSolver {
    fn name(&self) -> &str {
        "exact"
    }

    fn solve(&self, model: &CqmModel, _params: &SolveParams) -> Result<SampleSet, SolverError> {
        solve_exact(model, self.top_k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, ConstraintKind};

    fn single_var_model() -> CqmModel {
        let mut model = CqmModel::new();
        model.add_variable("x").unwrap();
        let mut obj = QuadraticExpression::new();
        obj.add_linear(0, 1.0);
        model.set_objective(obj).unwrap();
        model
    }

    #[test]
    fn unconstrained_single_variable_optimum_is_zero() {
        let set = solve_exact(&single_var_model(), 2).unwrap();
        assert_eq!(set.samples[0].energy, 0.0);
        assert!(set.samples[0].feasible);
        assert_eq!(set.samples[0].assignment.to_ints(), [0]);
        assert_eq!(set.backend_name, "exact");
    }

    #[test]
    fn full_mode_counts_every_pattern() {
        let (_, stats) = solve_exact_with_stats(&single_var_model(), 1).unwrap();
        assert_eq!(stats.mode, EnumerationMode::Full);
        assert_eq!(stats.visited, 2);
    }

    #[test]
    fn cartesian_mode_respects_group_structure() {
        let mut model = CqmModel::new();
        for i in 0..5 {
            model.add_variable(format!("x{i}")).unwrap();
        }
        let mut obj = QuadraticExpression::new();
        for i in 0..5 {
            obj.add_linear(i, (i + 1) as f64);
        }
        model.set_objective(obj).unwrap();
        for (name, members) in [("one_hot:a", vec![0, 1, 2]), ("one_hot:b", vec![3, 4])] {
            let mut expr = QuadraticExpression::with_offset(-1.0);
            for &v in &members {
                expr.add_linear(v, 1.0);
            }
            model
                .add_constraint(Constraint::new(
                    name,
                    expr,
                    ConstraintSense::Eq,
                    ConstraintKind::OneHot,
                ))
                .unwrap();
        }
        let (set, stats) = solve_exact_with_stats(&model, 10).unwrap();
        assert_eq!(stats.mode, EnumerationMode::Cartesian);
        assert_eq!(stats.visited, 6);
        assert_eq!(set.samples.len(), 6);
        assert!(set.samples.iter().all(|s| s.feasible));
        // Cheapest selection: x0 (1.0) plus x3 (4.0).
        assert_eq!(set.samples[0].energy, 5.0);
        assert_eq!(set.samples[0].assignment.to_ints(), [1, 0, 0, 1, 0]);
    }

    #[test]
    fn detect_rejects_overlapping_groups() {
        let mut model = CqmModel::new();
        for i in 0..3 {
            model.add_variable(format!("x{i}")).unwrap();
        }
        for (name, members) in [("a", vec![0, 1]), ("b", vec![1, 2])] {
            let mut expr = QuadraticExpression::with_offset(-1.0);
            for &v in &members {
                expr.add_linear(v, 1.0);
            }
            model
                .add_constraint(Constraint::new(
                    name,
                    expr,
                    ConstraintSense::Eq,
                    ConstraintKind::OneHot,
                ))
                .unwrap();
        }
        assert_eq!(OneHotStructure::detect(&model), None);
    }

    #[test]
    fn free_variables_extend_the_product_space()  {
        let mut model = CqmModel::new();
        for i in 0..3 {
            model.add_variable(format!("x{i}")).unwrap();
        }
        let mut expr = QuadraticExpression::with_offset(-1.0);
        expr.add_linear(0, 1.0).add_linear(1, 1.0);
        model
            .add_constraint(Constraint::new(
                "g",
                expr,
                ConstraintSense::Eq,
                ConstraintKind::OneHot,
            ))
            .unwrap();
        let structure = OneHotStructure::detect(&model).unwrap();
        assert_eq!(structure.free, [2]);
        assert_eq!(structure.candidate_count(), 4);
        let (_, stats) = solve_exact_with_stats(&model, 20).unwrap();
        assert_eq!(stats.mode, EnumerationMode::Cartesian);
        assert_eq!(stats.visited, 4);
    }

    #[test]
    fn oversized_models_name_both_caps() {
        let mut model = CqmModel::new();
        for i in 0..31 {
            model.add_variable(format!("x{i}")).unwrap();
        }
        match solve_exact(&model, 1) {
            Err(SolverError::SizeLimit { variables, full_cap, cartesian_note }) => {
                assert_eq!(variables, 31);
                assert_eq!(full_cap, 30);
                assert!(cartesian_note.contains("no disjoint one-hot structure"));
            }
            other => panic!("expected SizeLimit, got {:?}", other.map(|s| s.samples.len())),
        }
    }

    #[test]
    fn infeasible_models_return_least_violating_candidates() {
        let mut model = CqmModel::new();
        for i in 0..2 {
            model.add_variable(format!("x{i}")).unwrap();
        }
        let mut obj = QuadraticExpression::new();
        obj.add_linear(0, 1.0).add_linear(1, 2.0);
        model.set_objective(obj).unwrap();
        // x0 + x1 - 3 = 0 can never hold over two binaries; closest is both set.
        let mut expr = QuadraticExpression::with_offset(-3.0);
        expr.add_linear(0, 1.0).add_linear(1, 1.0);
        model
            .add_constraint(Constraint::new(
                "impossible",
                expr,
                ConstraintSense::Eq,
                ConstraintKind::Generic,
            ))
            .unwrap();
        let set = solve_exact(&model, 2).unwrap();
        assert!(!set.has_feasible());
        let least = set.least_violating().unwrap();
        assert_eq!(least.assignment.to_ints(), [1, 1]);
        // Violations are measured past the tolerance: |lhs| - eps.
        assert!((least.total_violation() - 1.0).abs() < 1e-8);
    }
}
