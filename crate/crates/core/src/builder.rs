//! Turns an item catalog into a constrained model: minimize (or maximize)
//! one attribute, pick exactly one item per group, and keep other attribute
//! totals inside declared bounds. Also renders solved selections back into
//! human-readable reports with exact attribute totals.

use serde_json::json;
use thiserror::Error;

use crate::catalog::{format_minor, parse_minor, ChoiceCatalog};
use crate::expr::QuadraticExpression;
use crate::model::{Constraint, ConstraintKind, ConstraintSense, CqmModel, ModelError};
use crate::sample::Sample;

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("catalog has no attribute named {attribute:?}")]
    UnknownAttribute { attribute: String },
    #[error("group {group:?} has no items")]
    EmptyGroup { group: String },
    #[error("cannot parse bound {text:?}: {reason}")]
    BadBound { text: String, reason: String },
    #[error("model does not match catalog: {0}")]
    MismatchedModel(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSense {
    Le,
    Ge,
}

/// A cap on one attribute's total, with the limit in minor units.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeBound {
    pub attribute: String,
    pub sense: BoundSense,
    pub limit_minor: i64,
}

impl AttributeBound {
    /// Parses "calories<=700" / "protein>=20" against the catalog's scales.
    pub fn parse(text: &str, catalog: &ChoiceCatalog) -> Result<Self, BuildError> {
        let (attribute, sense, limit) = if let Some((a, l)) = text.split_once("<=") {
            (a, BoundSense::Le, l)
        } else if let Some((a, l)) = text.split_once(">=") {
            (a, BoundSense::Ge, l)
        } else {
            return Err(BuildError::BadBound {
                text: text.to_string(),
                reason: "expected ATTR<=LIMIT or ATTR>=LIMIT".to_string(),
            });
        };
        let attribute = attribute.trim().to_string();
        let scale = catalog
            .scale(&attribute)
            .ok_or_else(|| BuildError::UnknownAttribute { attribute: attribute.clone() })?;
        let limit_minor = parse_minor(limit, scale).map_err(|reason| BuildError::BadBound {
            text: text.to_string(),
            reason,
        })?;
        Ok(Self { attribute, sense, limit_minor })
    }
}

/// What to build from a catalog: the objective attribute and direction,
/// plus any attribute bounds. Selection is always one item per group.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceSpec {
    pub objective_attribute: String,
    pub direction: Direction,
    pub bounds: Vec<AttributeBound>,
}

impl ChoiceSpec {
    pub fn minimize(attribute: impl Into<String>) -> Self {
        Self {
            objective_attribute: attribute.into(),
            direction: Direction::Minimize,
            bounds: Vec::new(),
        }
    }

    pub fn maximize(attribute: impl Into<String>) -> Self {
        Self {
            objective_attribute: attribute.into(),
            direction: Direction::Maximize,
            bounds: Vec::new(),
        }
    }

    pub fn with_bound(mut self, bound: AttributeBound) -> Self {
        self.bounds.push(bound);
        self
    }
}

/// Builds the model: one binary variable per item (labeled "group/name",
/// in catalog order), the objective summing the chosen attribute, an
/// equality one-hot constraint per group, and a `Le` constraint per bound.
pub fn build_model(catalog: &ChoiceCatalog, spec: &ChoiceSpec) -> Result<CqmModel, BuildError> {
    let obj_scale = catalog
        .scale(&spec.objective_attribute)
        .ok_or_else(|| BuildError::UnknownAttribute {
            attribute: spec.objective_attribute.clone(),
        })?;
    for bound in &spec.bounds {
        if !catalog.has_attribute(&bound.attribute) {
            return Err(BuildError::UnknownAttribute { attribute: bound.attribute.clone() });
        }
    }

    let mut model = CqmModel::new();
    for index in 0..catalog.items().len() {
        model.add_variable(catalog.variable_label(index))?;
    }

    let sign = match spec.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut objective = QuadraticExpression::new();
    for (index, item) in catalog.items().iter().enumerate() {
        let minor = item.attributes[&spec.objective_attribute];
        objective.add_linear(index, sign * minor as f64 / f64::from(obj_scale));
    }
    model.set_objective(objective)?;

    for group in catalog.groups() {
        let members = catalog.group_members(group);
        if members.is_empty() {
            return Err(BuildError::EmptyGroup { group: group.clone() });
        }
        let mut expr = QuadraticExpression::with_offset(-1.0);
        for index in members {
            expr.add_linear(index, 1.0);
        }
        model.add_constraint(Constraint::new(
            format!("one_hot:{group}"),
            expr,
            ConstraintSense::Eq,
            ConstraintKind::OneHot,
        ))?;
    }

    for (pos, bound) in spec.bounds.iter().enumerate() {
        let scale = catalog.scale(&bound.attribute).expect("validated above");
        let mut expr =
            QuadraticExpression::with_offset(-(bound.limit_minor as f64) / f64::from(scale));
        for (index, item) in catalog.items().iter().enumerate() {
            expr.add_linear(index, item.attributes[&bound.attribute] as f64 / f64::from(scale));
        }
        // Second bound on the same attribute gets a positional suffix to
        // keep constraint names unique.
        let dup = spec.bounds[..pos]
            .iter()
            .filter(|b| b.attribute == bound.attribute)
            .count();
        let name = if dup == 0 {
            format!("bound:{}", bound.attribute)
        } else {
            format!("bound:{}:{}", bound.attribute, dup + 1)
        };
        let sense = match bound.sense {
            BoundSense::Le => ConstraintSense::Le,
            BoundSense::Ge => ConstraintSense::Ge,
        };
        model.add_constraint(
            Constraint::new(name, expr, sense, ConstraintKind::ResourceBound).with_scale(scale),
        )?;
    }

    Ok(model)
}

/// One group's pick in a solved selection; `item` is `None` when the
/// group's one-hot constraint is broken (zero or multiple picks).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupChoice {
    pub group: String,
    pub item: Option<String>,
}

/// An exact attribute total in minor units.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTotal {
    pub attribute: String,
    pub minor: i64,
    pub scale: u32,
}

impl AttributeTotal {
    pub fn value(&self) -> f64 {
        self.minor as f64 / f64::from(self.scale)
    }

    pub fn display(&self) -> String {
        format_minor(self.minor, self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationNote {
    pub constraint: String,
    pub amount: f64,
    /// Exact decimal rendering where the amount sits on the constraint's
    /// minor-unit grid, shortest float form otherwise.
    pub display: String,
}

/// A solved selection in catalog terms: one pick per group and exact
/// attribute totals, plus any constraint violations.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub choices: Vec<GroupChoice>,
    pub totals: Vec<AttributeTotal>,
    pub feasible: bool,
    pub violations: Vec<ViolationNote>,
}

/// Renders a violation amount: exact decimal when it lies on the scale
/// grid (within float noise), shortest float representation otherwise.
pub fn display_amount(amount: f64, scale: u32) -> String {
    let scaled = amount * f64::from(scale);
    let rounded = scaled.round();
    if (scaled - rounded).abs() < 1e-6 && rounded.abs() < 9.0e15 {
        format_minor(rounded as i64, scale)
    } else {
        format!("{amount}")
    }
}

/// Describes one sample from a catalog-built model.
pub fn describe_solution(
    catalog: &ChoiceCatalog,
    model: &CqmModel,
    sample: &Sample,
) -> Result<SelectionReport, BuildError> {
    if model.num_variables() != catalog.items().len() {
        return Err(BuildError::MismatchedModel(format!(
            "model has {} variables, catalog has {} items",
            model.num_variables(),
            catalog.items().len()
        )));
    }
    if sample.assignment.len() != model.num_variables() {
        return Err(BuildError::Model(ModelError::DimensionMismatch {
            expected: model.num_variables(),
            got: sample.assignment.len(),
        }));
    }

    let mut choices = Vec::new();
    for group in catalog.groups() {
        let picked: Vec<usize> = catalog
            .group_members(group)
            .into_iter()
            .filter(|&i| sample.assignment.get(i) == Some(true))
            .collect();
        let item = if picked.len() == 1 {
            Some(catalog.items()[picked[0]].name.clone())
        } else {
            None
        };
        choices.push(GroupChoice { group: group.clone(), item });
    }

    let mut totals = Vec::new();
    for attribute in catalog.attributes() {
        let minor: i64 = sample
            .assignment
            .ones()
            .map(|i| catalog.items()[i].attributes[attribute])
            .sum();
        totals.push(AttributeTotal {
            attribute: attribute.clone(),
            minor,
            scale: catalog.scale(attribute).expect("catalog attribute"),
        });
    }

    let violations = sample
        .violations
        .iter()
        .map(|v| {
            let scale = model.constraint(&v.constraint).map_or(1, |c| c.scale);
            ViolationNote {
                constraint: v.constraint.clone(),
                amount: v.amount,
                display: display_amount(v.amount, scale),
            }
        })
        .collect();

    Ok(SelectionReport {
        choices,
        totals,
        feasible: sample.feasible,
        violations,
    })
}

impl SelectionReport {
    pub fn total(&self, attribute: &str) -> Option<&AttributeTotal> {
        self.totals.iter().find(|t| t.attribute == attribute)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "choices": self.choices.iter().map(|c| json!({
                "group": c.group,
                "item": c.item,
            })).collect::<Vec<_>>(),
            "totals": self.totals.iter().map(|t| json!({
                "attribute": t.attribute,
                "total": t.display(),
            })).collect::<Vec<_>>(),
            "feasible": self.feasible,
            "violations": self.violations.iter().map(|v| json!({
                "constraint": v.constraint,
                "amount": v.display,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Aligned text table for a list of selections: one column per group, one
/// per attribute total, plus occurrence count and feasibility. The `price`
/// attribute renders with a "$" prefix.
pub fn render_selection_table(rows: &[(SelectionReport, u64)]) -> String {
    if rows.is_empty() {
        return "(no samples)\n".to_string();
    }
    let first = &rows[0].0;
    let mut header: Vec<String> = first.choices.iter().map(|c| c.group.clone()).collect();
    header.extend(first.totals.iter().map(|t| t.attribute.clone()));
    header.push("reads".to_string());
    header.push("ok".to_string());

    let mut table: Vec<Vec<String>> = vec![header];
    for (report, occurrences) in rows {
        let mut row: Vec<String> = report
            .choices
            .iter()
            .map(|c| c.item.clone().unwrap_or_else(|| "—".to_string()))
            .collect();
        for total in &report.totals {
            let text = total.display();
            row.push(if total.attribute == "price" { format!("${text}") } else { text });
        }
        row.push(occurrences.to_string());
        row.push(if report.feasible { "yes" } else { "NO" }.to_string());
        table.push(row);
    }

    let cols = table[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let pad = widths[c] - cell.chars().count();
                format!("{cell}{}", " ".repeat(pad))
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Assignment;
    use crate::sample::Violation;

    const SMALL: &str = "\
name,item_type,price,calories
Sweet Potato,waffle,$8.00,284.4
The Classic,waffle,$8.00,358
Strawberry-Creme,smear,$1.75,70
Maple Syrup,smear,$2.25,160
";

    fn catalog() -> ChoiceCatalog {
        ChoiceCatalog::parse(SMALL).unwrap()
    }

    fn sample_for(model: &CqmModel, ones: &[usize]) -> Sample {
        let assignment = Assignment::with_ones(model.num_variables(), ones);
        let feas = model.is_feasible(&assignment).unwrap();
        let violations = model
            .constraints()
            .iter()
            .zip(&feas.verdicts)
            .filter(|(_, v)| !v.satisfied)
            .map(|(c, v)| Violation { constraint: c.name.clone(), amount: v.violation })
            .collect();
        Sample {
            energy: model.evaluate_objective(&assignment).unwrap(),
            assignment,
            num_occurrences: 1,
            feasible: feas.feasible,
            violations,
        }
    }

    #[test]
    fn builds_expected_shape() {
        let spec = ChoiceSpec::minimize("price")
            .with_bound(AttributeBound::parse("calories<=500", &catalog()).unwrap());
        let model = build_model(&catalog(), &spec).unwrap();
        assert_eq!(model.num_variables(), 4);
        assert_eq!(model.constraints().len(), 3);
        assert_eq!(model.constraints()[0].name, "one_hot:waffle");
        assert_eq!(model.constraints()[1].name, "one_hot:smear");
        assert_eq!(model.constraints()[2].name, "bound:calories");
        assert_eq!(model.constraints()[2].scale, 10);
        // Objective coefficients are the prices, in catalog order.
        assert_eq!(model.objective().linear.get(&0), Some(&8.0));
        assert_eq!(model.objective().linear.get(&3), Some(&2.25));
        // The calorie bound expression carries the exact values and limit.
        let bound = &model.constraints()[2].expr;
        assert_eq!(bound.linear.get(&0), Some(&284.4));
        assert_eq!(bound.offset, -500.0);
    }

    #[test]
    fn one_hot_expression_is_unit_sum_minus_one() {
        let model = build_model(&catalog(), &ChoiceSpec::minimize("price")).unwrap();
        let waffle = &model.constraints()[0].expr;
        assert_eq!(waffle.linear.len(), 2);
        assert!(waffle.linear.values().all(|&c| c == 1.0));
        assert_eq!(waffle.offset, -1.0);
    }

    #[test]
    fn maximize_negates_objective() {
        let model = build_model(&catalog(), &ChoiceSpec::maximize("calories")).unwrap();
        assert_eq!(model.objective().linear.get(&1), Some(&-358.0));
    }

    #[test]
    fn unknown_attribute_is_rejected() {
        assert_eq!(
            build_model(&catalog(), &ChoiceSpec::minimize("protein")),
            Err(BuildError::UnknownAttribute { attribute: "protein".into() })
        );
    }

    #[test]
    fn bound_parsing_understands_both_senses() {
        let b = AttributeBound::parse("calories<=700", &catalog()).unwrap();
        assert_eq!(b.sense, BoundSense::Le);
        assert_eq!(b.limit_minor, 7000);
        let b = AttributeBound::parse("price>=3.50", &catalog()).unwrap();
        assert_eq!(b.sense, BoundSense::Ge);
        assert_eq!(b.limit_minor, 350);
        assert!(AttributeBound::parse("price=3", &catalog()).is_err());
    }

    #[test]
    fn describe_reports_choices_and_exact_totals() {
        let model = build_model(&catalog(), &ChoiceSpec::minimize("price")).unwrap();
        let sample = sample_for(&model, &[0, 2]);
        let report = describe_solution(&catalog(), &model, &sample).unwrap();
        assert!(report.feasible);
        assert_eq!(report.choices[0].item.as_deref(), Some("Sweet Potato"));
        assert_eq!(report.choices[1].item.as_deref(), Some("Strawberry-Creme"));
        assert_eq!(report.total("price").unwrap().display(), "9.75");
        assert_eq!(report.total("calories").unwrap().display(), "354.4");
    }

    #[test]
    fn describe_marks_broken_groups_and_violations() {
        let model = build_model(&catalog(), &ChoiceSpec::minimize("price")).unwrap();
        let sample = sample_for(&model, &[]);
        let report = describe_solution(&catalog(), &model, &sample).unwrap();
        assert!(!report.feasible);
        assert!(report.choices.iter().all(|c| c.item.is_none()));
        assert_eq!(report.total("price").unwrap().minor, 0);
        assert_eq!(report.violations.len(), 2);
        assert_eq!(report.violations[0].display, "1");
    }

    #[test]
    fn violation_amounts_snap_to_the_scale_grid() {
        assert_eq!(display_amount(20.400000000000091, 10), "20.4");
        assert_eq!(display_amount(1.0000000000000002, 1), "1");
        assert_eq!(display_amount(0.5, 1), "0.5");
    }
}
