//! Seeded simulated-annealing sampler over a penalized QUBO.
//!
//! Each read is an independent single-flip Metropolis chain over the
//! original variables under a geometric inverse-temperature schedule. The
//! integer slack of each inequality is not sampled bit by bit: it is kept
//! at its per-constraint optimum analytically, so the chain walks the
//! slack-minimized energy surface of the QUBO. Sampling raw slack bits
//! instead would put squared-penalty barriers of order `weight * coeff^2`
//! between neighboring selections, which no fixed schedule can cross.
//!
//! Reads own their RNG streams (derived as seed XOR read index), so
//! fanning them out across workers cannot change the result: the
//! aggregated set is a pure function of (qubo, model, params). Final
//! states are materialized with their optimal slack bits and go through
//! the regular decode path.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::expr::Assignment;
use crate::model::{ConstraintSense, CqmModel};
use crate::qubo::{decode, scaled_constraint_terms, to_qubo, PenaltyPolicy, QuboModel};
use crate::sample::{aggregate, SampleSet, SolveParams};
use crate::solvers::{Solver, SolverError};

/// Geometric interpolation from `beta_start` to `beta_end`, one value per
/// sweep.
pub fn geometric_beta_schedule(beta_start: f64, beta_end: f64, sweeps: usize) -> Vec<f64> {
    if sweeps == 1 {
        return vec![beta_start];
    }
    let log_start = beta_start.ln();
    let step = (beta_end.ln() - log_start) / (sweeps - 1) as f64;
    (0..sweeps).map(|i| (log_start + step * i as f64).exp()).collect()
}

/// One penalized constraint in integer (scaled) form.
struct PenaltyTerm {
    weight: f64,
    /// Scaled constant term; the residual at the all-zeros assignment.
    offset: i64,
    /// Representable slack range (zero for equalities).
    slack_range: u64,
    is_equality: bool,
    /// Slack bit weights and the QUBO index of the first slack bit, for
    /// materializing final states.
    slack_weights: Vec<u64>,
    first_slack_index: usize,
}

impl PenaltyTerm {
    /// Residual that remains after the slack takes its optimal value.
    fn unabsorbed(&self, residual: i64) -> f64 {
        let d = if self.is_equality { residual } else { residual.max(0) };
        d as f64
    }

    fn energy(&self, residual: i64) -> f64 {
        let d = self.unabsorbed(residual);
        self.weight * d * d
    }
}

/// The sampler's working form: objective fields over the original
/// variables plus per-variable constraint membership.
struct Landscape {
    objective_linear: Vec<f64>,
    /// CSR adjacency of the objective's quadratic terms.
    objective_offsets: Vec<usize>,
    objective_edges: Vec<(u32, f64)>,
    terms: Vec<PenaltyTerm>,
    /// Per variable: (term index, scaled coefficient).
    memberships: Vec<Vec<(u32, i64)>>,
    num_slack: usize,
}

impl Landscape {
    fn build(qubo: &QuboModel, model: &CqmModel) -> Result<Self, SolverError> {
        let n = model.num_variables();
        let objective = model.objective();
        let mut objective_linear = vec![0.0; n];
        for (&i, &c) in &objective.linear {
            objective_linear[i] = c;
        }
        let mut degree = vec![0usize; n];
        for &(i, j) in objective.quadratic.keys() {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut objective_offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        objective_offsets.push(0);
        for d in &degree {
            total += d;
            objective_offsets.push(total);
        }
        let mut cursor = objective_offsets.clone();
        let mut objective_edges = vec![(0u32, 0.0f64); total];
        for (&(i, j), &w) in &objective.quadratic {
            objective_edges[cursor[i]] = (j as u32, w);
            cursor[i] += 1;
            objective_edges[cursor[j]] = (i as u32, w);
            cursor[j] += 1;
        }

        let mut terms = Vec::new();
        let mut memberships = vec![Vec::new(); n];
        for constraint in model.constraints() {
            // Constraints the transform dropped as trivially satisfied
            // carry no penalty weight and no slack.
            let Some(&weight) = qubo.penalty_weights().get(&constraint.name) else {
                continue;
            };
            let (coeffs, offset) =
                scaled_constraint_terms(constraint).map_err(SolverError::Transform)?;
            let mut slack: Vec<(usize, u64)> = qubo
                .provenance()
                .iter()
                .filter(|(_, s)| s.constraint == constraint.name)
                .map(|(&index, s)| (index, s.weight))
                .collect();
            slack.sort_by_key(|&(index, _)| index);
            let term_index = terms.len() as u32;
            for &(var, coeff) in &coeffs {
                memberships[var].push((term_index, coeff));
            }
            terms.push(PenaltyTerm {
                weight,
                offset,
                slack_range: slack.iter().map(|&(_, w)| w).sum(),
                is_equality: constraint.sense == ConstraintSense::Eq,
                first_slack_index: slack.first().map_or(qubo.num_vars(), |&(i, _)| i),
                slack_weights: slack.into_iter().map(|(_, w)| w).collect(),
            });
        }

        Ok(Self {
            objective_linear,
            objective_offsets,
            objective_edges,
            terms,
            memberships,
            num_slack: qubo.num_vars() - n,
        })
    }

    fn objective_neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.objective_edges[self.objective_offsets[i]..self.objective_offsets[i + 1]]
    }
}

/// One Metropolis chain; returns the final full (original + slack) state.
fn run_chain(landscape: &Landscape, schedule: &[f64], rng: &mut ChaCha8Rng) -> Vec<bool> {
    let n = landscape.objective_linear.len();
    let mut state: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();

    // Objective local fields: flipping i costs (1 - 2 x_i) * fields[i] on
    // the objective side, so rejected proposals stay O(memberships).
    let mut fields = landscape.objective_linear.clone();
    for i in 0..n {
        if state[i] {
            for &(j, w) in landscape.objective_neighbors(i) {
                fields[j as usize] += w;
            }
        }
    }
    let mut residuals: Vec<i64> = landscape.terms.iter().map(|t| t.offset).collect();
    for (i, &set) in state.iter().enumerate() {
        if set {
            for &(t, coeff) in &landscape.memberships[i] {
                residuals[t as usize] += coeff;
            }
        }
    }

    for &beta in schedule {
        for i in 0..n {
            let sign = if state[i] { -1i64 } else { 1i64 };
            let mut delta = sign as f64 * fields[i];
            for &(t, coeff) in &landscape.memberships[i] {
                let term = &landscape.terms[t as usize];
                let before = residuals[t as usize];
                delta += term.energy(before + sign * coeff) - term.energy(before);
            }
            let accept = if delta <= 0.0 {
                true
            } else {
                let t = beta * delta;
                // exp(-60) is far below the generator's resolution.
                t < 60.0 && rng.random::<f64>() < (-t).exp()
            };
            if accept {
                state[i] = !state[i];
                let flip = if state[i] { 1.0 } else { -1.0 };
                for &(j, w) in landscape.objective_neighbors(i) {
                    fields[j as usize] += flip * w;
                }
                for &(t, coeff) in &landscape.memberships[i] {
                    residuals[t as usize] += sign * coeff;
                }
            }
        }
    }

    // Materialize the optimal slack bits for the final state.
    let mut full = state;
    full.resize(n + landscape.num_slack, false);
    for (term, &residual) in landscape.terms.iter().zip(&residuals) {
        if term.is_equality || term.slack_weights.is_empty() {
            continue;
        }
        let value = (-residual).clamp(0, term.slack_range as i64) as u64;
        for (bit, set) in encode_slack(&term.slack_weights, value).into_iter().enumerate() {
            full[term.first_slack_index + bit] = set;
        }
    }
    full
}

/// Encodes a value over trimmed binary weights `[1, 2, ..., 2^(k-2), top]`.
fn encode_slack(weights: &[u64], value: u64) -> Vec<bool> {
    let mut bits = vec![false; weights.len()];
    if weights.is_empty() {
        return bits;
    }
    let mut remaining = value;
    let plain_cover: u64 = weights[..weights.len() - 1].iter().sum();
    if remaining > plain_cover {
        bits[weights.len() - 1] = true;
        remaining -= weights[weights.len() - 1];
    }
    for b in (0..weights.len() - 1).rev() {
        if remaining >= weights[b] {
            bits[b] = true;
            remaining -= weights[b];
        }
    }
    debug_assert_eq!(remaining, 0, "slack {value} not representable over {weights:?}");
    bits
}

fn check_provenance(qubo: &QuboModel, model: &CqmModel) -> Result<(), SolverError> {
    if qubo.num_original() != model.num_variables() {
        return Err(SolverError::ProvenanceMismatch {
            reason: format!(
                "qubo has {} original variables, model has {}",
                qubo.num_original(),
                model.num_variables()
            ),
        });
    }
    for source in qubo.provenance().values() {
        if model.constraint(&source.constraint).is_none() {
            return Err(SolverError::ProvenanceMismatch {
                reason: format!("slack provenance names unknown constraint {:?}", source.constraint),
            });
        }
    }
    for name in qubo.penalty_weights().keys() {
        if model.constraint(name).is_none() {
            return Err(SolverError::ProvenanceMismatch {
                reason: format!("penalty weights name unknown constraint {name:?}"),
            });
        }
    }
    Ok(())
}

/// Runs `num_reads` independent annealing chains, decodes each final state
/// back to the original variables, and aggregates with exactly re-checked
/// energy and feasibility. Identical (qubo, model, params) produce a
/// bit-identical sample set regardless of worker count.
pub fn solve_sa(
    qubo: &QuboModel,
    model: &CqmModel,
    params: &SolveParams,
) -> Result<SampleSet, SolverError> {
    params.validate()?;
    check_provenance(qubo, model)?;
    let started = Instant::now();

    let landscape = Landscape::build(qubo, model)?;
    let schedule = geometric_beta_schedule(params.beta_start, params.beta_end, params.sweeps as usize);

    let raw: Vec<(Assignment, u64)> = (0..params.num_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ u64::from(read));
            let state = run_chain(&landscape, &schedule, &mut rng);
            let decoded = decode(qubo, &Assignment::new(state)).expect("state length matches qubo");
            (decoded.assignment, 1)
        })
        .collect();

    aggregate(model, raw, "sa", started.elapsed())
}

/// The annealing sampler as a registry strategy: builds the penalized QUBO
/// for the model, then samples it.
pub struct AnnealingSolver {
    pub penalty: PenaltyPolicy,
}

impl Solver for AnnealingSolver {
    fn name(&self) -> &str {
        "sa"
    }

    fn solve(&self, model: &CqmModel, params: &SolveParams) -> Result<SampleSet, SolverError> {
        let qubo = to_qubo(model, &self.penalty)?;
        solve_sa(&qubo, model, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::QuadraticExpression;
    use crate::model::{Constraint, ConstraintKind};

    fn empty_objective_model(vars: usize) -> CqmModel {
        let mut model = CqmModel::new();
        for i in 0..vars {
            model.add_variable(format!("x{i}")).unwrap();
        }
        model
    }

    #[test]
    fn schedule_is_geometric_between_endpoints() {
        let schedule = geometric_beta_schedule(0.01, 10.0, 4);
        assert_eq!(schedule.len(), 4);
        assert!((schedule[0] - 0.01).abs() < 1e-12);
        assert!((schedule[3] - 10.0).abs() < 1e-12);
        let r1 = schedule[1] / schedule[0];
        let r2 = schedule[2] / schedule[1];
        assert!((r1 - r2).abs() < 1e-9);
    }

    #[test]
    fn encode_slack_round_trips_every_value() {
        for range in 0u64..=64 {
            let constraint = {
                let mut expr = QuadraticExpression::with_offset(-(range as f64));
                expr.add_linear(0, 1.0);
                Constraint::new("r", expr, ConstraintSense::Le, ConstraintKind::Generic)
            };
            let weights = crate::qubo::slack_bits(&constraint, 1).unwrap().bit_weights;
            for value in 0..=range {
                let bits = encode_slack(&weights, value);
                let sum: u64 = weights
                    .iter()
                    .zip(&bits)
                    .filter(|&(_, &b)| b)
                    .map(|(&w, _)| w)
                    .sum();
                assert_eq!(sum, value, "range {range}");
            }
        }
    }

    #[test]
    fn zero_coupling_qubo_conserves_reads() {
        let model = empty_objective_model(3);
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        let params = SolveParams { num_reads: 100, sweeps: 5, ..SolveParams::default() };
        let set = solve_sa(&qubo, &model, &params).unwrap();
        let total: u64 = set.samples.iter().map(|s| s.num_occurrences).sum();
        assert_eq!(total, 100);
        assert_eq!(set.total_reads, 100);
        assert!(set.samples.iter().all(|s| s.energy == 0.0));
    }

    #[test]
    fn positive_linear_term_drives_variable_to_zero() {
        let mut model = empty_objective_model(1);
        let mut obj = QuadraticExpression::new();
        obj.add_linear(0, 5.0);
        model.set_objective(obj).unwrap();
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        let set = solve_sa(&qubo, &model, &SolveParams::default()).unwrap();
        assert_eq!(set.samples.len(), 1);
        assert_eq!(set.samples[0].energy, 0.0);
        assert_eq!(set.samples[0].num_occurrences, 100);
        assert_eq!(set.samples[0].assignment.to_ints(), [0]);
    }

    #[test]
    fn slack_marginalization_matches_the_qubo_minimum() {
        // One inequality: the chain's landscape at any x must equal the
        // minimum QUBO energy over that x's slack patterns.
        let mut model = empty_objective_model(3);
        let mut obj = QuadraticExpression::new();
        obj.add_linear(0, 1.0).add_linear(1, -2.0).add_linear(2, 0.5);
        model.set_objective(obj).unwrap();
        let mut expr = QuadraticExpression::with_offset(-3.0);
        expr.add_linear(0, 2.0).add_linear(1, 3.0).add_linear(2, 1.0);
        model
            .add_constraint(Constraint::new(
                "bound",
                expr,
                ConstraintSense::Le,
                ConstraintKind::ResourceBound,
            ))
            .unwrap();
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        let landscape = Landscape::build(&qubo, &model).unwrap();
        let slack_bits = qubo.num_vars() - 3;

        for pattern in 0u32..8 {
            let x: Vec<bool> = (0..3).map(|i| pattern >> i & 1 == 1).collect();
            let assignment = Assignment::new(x.clone());
            let residual = landscape.terms[0].offset
                + landscape
                    .memberships
                    .iter()
                    .enumerate()
                    .flat_map(|(i, ms)| ms.iter().map(move |&(_, c)| (i, c)))
                    .filter(|&(i, _)| x[i])
                    .map(|(_, c)| c)
                    .sum::<i64>();
            let marginal = model.objective().evaluate(&assignment).unwrap()
                + landscape.terms[0].energy(residual);

            let mut best = f64::INFINITY;
            for slack_pattern in 0u32..(1 << slack_bits) {
                let mut full = x.clone();
                for b in 0..slack_bits {
                    full.push(slack_pattern >> b & 1 == 1);
                }
                best = best.min(qubo.energy(&full).unwrap());
            }
            assert!(
                (marginal - best).abs() < 1e-9,
                "pattern {pattern:03b}: marginal {marginal} vs brute {best}"
            );
        }
    }

    #[test]
    fn identical_seeds_give_identical_sample_sets() {
        let mut model = empty_objective_model(6);
        let mut obj = QuadraticExpression::new();
        for i in 0..6 {
            obj.add_linear(i, (i as f64) - 2.5);
        }
        obj.add_quadratic(0, 3, 1.5).add_quadratic(2, 5, -0.75);
        model.set_objective(obj).unwrap();
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        let params = SolveParams { seed: 42, num_reads: 25, sweeps: 50, ..SolveParams::default() };
        let a = solve_sa(&qubo, &model, &params).unwrap();
        let b = solve_sa(&qubo, &model, &params).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.total_reads, b.total_reads);
    }

    #[test]
    fn mismatched_qubo_is_rejected() {
        let model_a = empty_objective_model(2);
        let model_b = empty_objective_model(3);
        let qubo = to_qubo(&model_a, &PenaltyPolicy::default()).unwrap();
        assert!(matches!(
            solve_sa(&qubo, &model_b, &SolveParams::default()),
            Err(SolverError::ProvenanceMismatch { .. })
        ));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let model = empty_objective_model(1);
        let qubo = to_qubo(&model, &PenaltyPolicy::default()).unwrap();
        let params = SolveParams { beta_start: 5.0, beta_end: 1.0, ..SolveParams::default() };
        assert!(matches!(
            solve_sa(&qubo, &model, &params),
            Err(SolverError::InvalidParams { .. })
        ));
    }
}
