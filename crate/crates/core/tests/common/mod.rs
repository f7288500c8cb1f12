//! Shared helpers for integration tests: a seeded random-instance
//! generator producing small valid models with one-hot groups and integer
//! inequality bounds.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use cqmkit::expr::QuadraticExpression;
use cqmkit::model::{Constraint, ConstraintKind, ConstraintSense, CqmModel};

pub struct InstanceShape {
    pub max_vars: usize,
    pub max_groups: usize,
    pub max_inequalities: usize,
    pub quadratic_objective: bool,
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self { max_vars: 10, max_groups: 2, max_inequalities: 1, quadratic_objective: false }
    }
}

/// Builds a random model. Objective coefficients are quarter-steps (exact
/// in binary floating point); inequality coefficients are integers at
/// scale 1, so every constraint scales exactly.
pub fn random_model(rng: &mut ChaCha8Rng, shape: &InstanceShape) -> CqmModel {
    let n = rng.random_range(2..=shape.max_vars);
    let mut model = CqmModel::new();
    for i in 0..n {
        model.add_variable(format!("x{i}")).unwrap();
    }

    let mut objective = QuadraticExpression::new();
    for i in 0..n {
        if rng.random_bool(0.85) {
            objective.add_linear(i, f64::from(rng.random_range(-40..=40i32)) * 0.25);
        }
    }
    objective.offset = f64::from(rng.random_range(-20..=20i32)) * 0.25;
    if shape.quadratic_objective && n >= 2 {
        for _ in 0..rng.random_range(0..=3) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                objective.add_quadratic(a, b, f64::from(rng.random_range(-12..=12i32)) * 0.25);
            }
        }
    }
    model.set_objective(objective).unwrap();

    // Disjoint one-hot groups over a shuffled variable order.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut cursor = 0usize;
    let groups = rng.random_range(0..=shape.max_groups);
    for g in 0..groups {
        let remaining = n - cursor;
        if remaining < 2 {
            break;
        }
        let size = rng.random_range(2..=remaining.min(4));
        let mut expr = QuadraticExpression::with_offset(-1.0);
        for &v in &order[cursor..cursor + size] {
            expr.add_linear(v, 1.0);
        }
        cursor += size;
        model
            .add_constraint(Constraint::new(
                format!("one_hot:g{g}"),
                expr,
                ConstraintSense::Eq,
                ConstraintKind::OneHot,
            ))
            .unwrap();
    }

    for b in 0..rng.random_range(0..=shape.max_inequalities) {
        let mut expr = QuadraticExpression::new();
        for i in 0..n {
            if rng.random_bool(0.7) {
                let coeff = rng.random_range(-3..=6i32);
                if coeff != 0 {
                    expr.add_linear(i, f64::from(coeff));
                }
            }
        }
        // A limit drawn from the attainable range keeps the bound neither
        // impossible nor certain.
        let hi: f64 = expr.linear.values().map(|c| c.max(0.0)).sum();
        let lo: f64 = expr.linear.values().map(|c| c.min(0.0)).sum();
        let limit = rng.random_range(lo as i32..=(hi as i32).max(lo as i32 + 1));
        expr.offset = -f64::from(limit);
        model
            .add_constraint(Constraint::new(
                format!("bound:b{b}"),
                expr,
                ConstraintSense::Le,
                ConstraintKind::ResourceBound,
            ))
            .unwrap();
    }

    model
}

/// Every assignment of an `n`-variable hypercube, as bit vectors.
pub fn hypercube(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..(1u64 << n)).map(move |counter| (0..n).map(|i| counter >> i & 1 == 1).collect())
}
