//! The constrained model container: binary variables, a quadratic objective,
//! named constraints with a comparison sense, exact feasibility checking,
//! and the JSON document format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Assignment, ExprError, QuadraticExpression};

/// Default absolute feasibility tolerance. The catalog data this crate
/// targets is expressed in cents and tenths of a kcal, far above this.
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable label must be non-empty")]
    EmptyLabel,
    #[error("duplicate variable label {0:?}")]
    DuplicateLabel(String),
    #[error("duplicate constraint name {0:?}")]
    DuplicateConstraint(String),
    #[error("{context} references variable {index}, but the model has {num_vars} variables")]
    UnknownVariable { context: String, index: usize, num_vars: usize },
    #[error("assignment has {got} entries, model has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{context} contains a non-finite coefficient")]
    NonFiniteCoefficient { context: String },
    #[error("constraint {0:?} has scale 0; scales must be positive")]
    ZeroScale(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid model document: {0}")]
    Document(String),
}

/// A binary decision variable: dense 0-based index plus a unique label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub index: usize,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintSense {
    /// Expression must equal zero.
    Eq,
    /// Expression must be at most zero.
    Le,
    /// Expression must be at least zero. Stored constraints are normalized
    /// to `Le` by negating the expression; the variant survives only in
    /// hand-built values and input documents.
    Ge,
}

/// Reporting tag describing where a constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    OneHot,
    ResourceBound,
    Generic,
}

/// Outcome of checking one constraint against an assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub satisfied: bool,
    /// Value of the constraint expression.
    pub lhs: f64,
    /// How far past the tolerance the expression is; zero when satisfied.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: QuadraticExpression,
    pub sense: ConstraintSense,
    pub kind: ConstraintKind,
    /// Minor-unit factor: multiplying the expression by this yields integer
    /// coefficients. Declared at build time; the QUBO transform validates it.
    pub scale: u32,
}

impl Constraint {
    pub fn new(
        name: impl Into<String>,
        expr: QuadraticExpression,
        sense: ConstraintSense,
        kind: ConstraintKind,
    ) -> Self {
        Self { name: name.into(), expr, sense, kind, scale: 1 }
    }

    pub fn with_scale(mut self, scale: u32) -> Self {
        self.scale = scale;
        self
    }

    /// Checks the constraint against an assignment at absolute tolerance
    /// `eps`. `satisfied` holds exactly when `violation == 0`.
    pub fn check(&self, x: &Assignment, eps: f64) -> Result<Verdict, ExprError> {
        let lhs = self.expr.evaluate(x)?;
        let violation = match self.sense {
            ConstraintSense::Eq => (lhs.abs() - eps).max(0.0),
            ConstraintSense::Le => (lhs - eps).max(0.0),
            ConstraintSense::Ge => (-lhs - eps).max(0.0),
        };
        Ok(Verdict { satisfied: violation == 0.0, lhs, violation })
    }
}

/// Per-constraint feasibility breakdown, in constraint order.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub verdicts: Vec<Verdict>,
}

/// An immutable-once-built constrained quadratic model over binary
/// variables. All mutation happens through `&mut self` builders before the
/// model is shared with solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelDoc", try_from = "ModelDoc")]
pub struct CqmModel {
    variables: Vec<Variable>,
    labels: BTreeMap<String, usize>,
    objective: QuadraticExpression,
    constraints: Vec<Constraint>,
    eps: f64,
}

impl Default for CqmModel {
    fn default() -> Self {
        Self::new()
    }
}

impl CqmModel {
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            labels: BTreeMap::new(),
            objective: QuadraticExpression::new(),
            constraints: Vec::new(),
            eps: DEFAULT_EPS,
        }
    }

    /// Adds a variable and returns its dense index.
    pub fn add_variable(&mut self, label: impl Into<String>) -> Result<usize, ModelError> {
        let label = label.into();
        if label.is_empty() {
            return Err(ModelError::EmptyLabel);
        }
        if self.labels.contains_key(&label) {
            return Err(ModelError::DuplicateLabel(label));
        }
        let index = self.variables.len();
        self.labels.insert(label.clone(), index);
        self.variables.push(Variable { index, label });
        Ok(index)
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable_index(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.variables.get(index).map(|v| v.label.as_str())
    }

    pub fn objective(&self) -> &QuadraticExpression {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn set_eps(&mut self, eps: f64) {
        self.eps = eps;
    }

    fn validate_expr(&self, expr: &QuadraticExpression, context: &str) -> Result<(), ModelError> {
        if !expr.all_finite() {
            return Err(ModelError::NonFiniteCoefficient { context: context.to_string() });
        }
        if let Some(max) = expr.max_index() {
            if max >= self.variables.len() {
                return Err(ModelError::UnknownVariable {
                    context: context.to_string(),
                    index: max,
                    num_vars: self.variables.len(),
                });
            }
        }
        Ok(())
    }

    pub fn set_objective(&mut self, expr: QuadraticExpression) -> Result<(), ModelError> {
        let expr = expr.normalize();
        self.validate_expr(&expr, "objective")?;
        self.objective = expr;
        Ok(())
    }

    /// Adds a constraint. `Ge` is normalized to `Le` by negating the
    /// expression, so a single comparison path serves all stored senses.
    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<(), ModelError> {
        if self.constraints.iter().any(|c| c.name == constraint.name) {
            return Err(ModelError::DuplicateConstraint(constraint.name));
        }
        if constraint.scale == 0 {
            return Err(ModelError::ZeroScale(constraint.name));
        }
        let context = format!("constraint {:?}", constraint.name);
        let (expr, sense) = match constraint.sense {
            ConstraintSense::Ge => (constraint.expr.negated(), ConstraintSense::Le),
            other => (constraint.expr, other),
        };
        let expr = expr.normalize();
        self.validate_expr(&expr, &context)?;
        self.constraints.push(Constraint { expr, sense, ..constraint });
        Ok(())
    }

    fn check_len(&self, x: &Assignment) -> Result<(), ModelError> {
        if x.len() != self.variables.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.variables.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate_objective(&self, x: &Assignment) -> Result<f64, ModelError> {
        self.check_len(x)?;
        Ok(self.objective.evaluate(x)?)
    }

    /// Checks every constraint, preserving constraint order in the verdicts.
    pub fn is_feasible(&self, x: &Assignment) -> Result<Feasibility, ModelError> {
        self.check_len(x)?;
        let mut verdicts = Vec::with_capacity(self.constraints.len());
        let mut feasible = true;
        for constraint in &self.constraints {
            let verdict = constraint.check(x, self.eps)?;
            feasible &= verdict.satisfied;
            verdicts.push(verdict);
        }
        Ok(Feasibility { feasible, verdicts })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))
    }
}

/// JSON document shape. Rebuilding through the mutating API re-validates
/// every model invariant on input.
#[derive(Serialize, Deserialize)]
struct ModelDoc {
    variables: Vec<Variable>,
    objective: QuadraticExpression,
    constraints: Vec<ConstraintDoc>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintDoc {
    name: String,
    sense: ConstraintSense,
    kind: ConstraintKind,
    #[serde(default = "default_scale")]
    scale: u32,
    expr: QuadraticExpression,
}

fn default_scale() -> u32 {
    1
}

impl From<CqmModel> for ModelDoc {
    fn from(model: CqmModel) -> Self {
        ModelDoc {
            variables: model.variables,
            objective: model.objective,
            constraints: model
                .constraints
                .into_iter()
                .map(|c| ConstraintDoc {
                    name: c.name,
                    sense: c.sense,
                    kind: c.kind,
                    scale: c.scale,
                    expr: c.expr,
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelDoc> for CqmModel {
    type Error = ModelError;

    fn try_from(doc: ModelDoc) -> Result<Self, ModelError> {
        let mut model = CqmModel::new();
        for (pos, var) in doc.variables.iter().enumerate() {
            if var.index != pos {
                return Err(ModelError::Document(format!(
                    "variable {:?} has index {}, expected {} (indices must be dense and in order)",
                    var.label, var.index, pos
                )));
            }
            model.add_variable(var.label.clone())?;
        }
        model.set_objective(doc.objective)?;
        for c in doc.constraints {
            model.add_constraint(
                Constraint::new(c.name, c.expr, c.sense, c.kind).with_scale(c.scale),
            )?;
        }
        Ok(model)
    }
}
