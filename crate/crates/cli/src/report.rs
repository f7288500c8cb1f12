//! Rendering of solver output as aligned text tables and as JSON. Both
//! views are built from the same exact minor-unit totals, so the numbers in
//! them always agree, and neither includes wall-clock time, so repeated
//! runs are byte-identical.

use serde_json::{json, Value};

use cqmkit::builder::{describe_solution, display_amount};
use cqmkit::catalog::ChoiceCatalog;
use cqmkit::model::{ConstraintSense, CqmModel, Feasibility};
use cqmkit::sample::{Sample, SampleSet};

fn selected_labels(sample: &Sample, model: &CqmModel) -> Vec<String> {
    sample
        .assignment
        .ones()
        .filter_map(|i| model.label(i).map(str::to_string))
        .collect()
}

fn violation_entries(sample: &Sample, model: &CqmModel) -> Vec<Value> {
    sample
        .violations
        .iter()
        .map(|v| {
            let scale = model.constraint(&v.constraint).map_or(1, |c| c.scale);
            json!({
                "constraint": v.constraint,
                "amount": display_amount(v.amount, scale),
            })
        })
        .collect()
}

fn sample_json(
    sample: &Sample,
    model: &CqmModel,
    catalog: Option<&ChoiceCatalog>,
) -> Result<Value, String> {
    let mut value = json!({
        "bits": sample.assignment,
        "selected": selected_labels(sample, model),
        "energy": sample.energy,
        "num_occurrences": sample.num_occurrences,
        "feasible": sample.feasible,
        "violations": violation_entries(sample, model),
    });
    if let Some(catalog) = catalog {
        let report = describe_solution(catalog, model, sample).map_err(|e| e.to_string())?;
        let object = value.as_object_mut().expect("sample json object");
        let report_value = report.to_json_value();
        object.insert("choices".to_string(), report_value["choices"].clone());
        object.insert("totals".to_string(), report_value["totals"].clone());
    }
    Ok(value)
}

/// JSON document for `solve`: backend, totals, every sample, and (when
/// nothing is feasible) the least-violating sample called out explicitly.
pub fn solve_json(
    set: &SampleSet,
    model: &CqmModel,
    catalog: Option<&ChoiceCatalog>,
) -> Result<Value, String> {
    let samples: Result<Vec<Value>, String> = set
        .samples
        .iter()
        .map(|s| sample_json(s, model, catalog))
        .collect();
    let least_violating = if set.has_feasible() {
        Value::Null
    } else {
        match set.least_violating() {
            Some(sample) => sample_json(sample, model, catalog)?,
            None => Value::Null,
        }
    };
    Ok(json!({
        "backend": set.backend_name,
        "total_reads": set.total_reads,
        "feasible": set.has_feasible(),
        "samples": samples?,
        "least_violating": least_violating,
    }))
}

fn render_aligned(table: &[Vec<String>]) -> String {
    if table.is_empty() {
        return String::new();
    }
    let cols = table[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in table {
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

/// One table row per sample. Catalog runs get the selection-style columns
/// (one per group, then attribute totals); bare models list the selected
/// variable labels.
fn samples_table(
    samples: &[&Sample],
    model: &CqmModel,
    catalog: Option<&ChoiceCatalog>,
) -> Result<String, String> {
    match catalog {
        Some(catalog) => {
            let mut table: Vec<Vec<String>> = Vec::new();
            let mut header: Vec<String> = catalog.groups().to_vec();
            header.extend(catalog.attributes().iter().cloned());
            header.push("reads".to_string());
            header.push("ok".to_string());
            table.push(header);
            for sample in samples {
                let report =
                    describe_solution(catalog, model, sample).map_err(|e| e.to_string())?;
                let mut row: Vec<String> = report
                    .choices
                    .iter()
                    .map(|c| c.item.clone().unwrap_or_else(|| "—".to_string()))
                    .collect();
                for total in &report.totals {
                    let text = total.display();
                    row.push(if total.attribute == "price" {
                        format!("${text}")
                    } else {
                        text
                    });
                }
                row.push(sample.num_occurrences.to_string());
                row.push(if sample.feasible { "yes" } else { "NO" }.to_string());
                table.push(row);
            }
            Ok(render_aligned(&table))
        }
        None => {
            let mut table =
                vec![vec!["energy".to_string(), "reads".to_string(), "ok".to_string(), "selected".to_string()]];
            for sample in samples {
                table.push(vec![
                    format!("{}", sample.energy),
                    sample.num_occurrences.to_string(),
                    if sample.feasible { "yes" } else { "NO" }.to_string(),
                    selected_labels(sample, model).join(" + "),
                ]);
            }
            Ok(render_aligned(&table))
        }
    }
}

fn violations_block(sample: &Sample, model: &CqmModel) -> String {
    let mut out = String::new();
    for v in &sample.violations {
        let scale = model.constraint(&v.constraint).map_or(1, |c| c.scale);
        out.push_str(&format!("  {} violated by {}\n", v.constraint, display_amount(v.amount, scale)));
    }
    out
}

/// Text report for `solve`.
pub fn solve_table(
    set: &SampleSet,
    model: &CqmModel,
    catalog: Option<&ChoiceCatalog>,
) -> Result<String, String> {
    let mut out = format!("backend: {}\ntotal reads: {}\n", set.backend_name, set.total_reads);
    if set.samples.is_empty() {
        out.push_str("no samples returned\n");
        return Ok(out);
    }
    let refs: Vec<&Sample> = set.samples.iter().collect();
    out.push('\n');
    out.push_str(&samples_table(&refs, model, catalog)?);
    if !set.has_feasible() {
        out.push_str("\nno feasible solution; least-violating sample:\n");
        let least = set.least_violating().expect("non-empty sample set");
        out.push_str(&samples_table(&[least], model, catalog)?);
        out.push_str(&violations_block(least, model));
    }
    Ok(out)
}

fn verdict_entries(feasibility: &Feasibility, model: &CqmModel) -> Vec<Value> {
    model
        .constraints()
        .iter()
        .zip(&feasibility.verdicts)
        .map(|(c, v)| {
            json!({
                "constraint": c.name,
                "sense": match c.sense {
                    ConstraintSense::Eq => "eq",
                    ConstraintSense::Le => "le",
                    ConstraintSense::Ge => "ge",
                },
                "lhs": v.lhs,
                "satisfied": v.satisfied,
                "violation": display_amount(v.violation, c.scale),
            })
        })
        .collect()
}

/// JSON document for `check`: the verdict per constraint plus the
/// selection report when a catalog is in play.
pub fn check_json(
    sample: &Sample,
    feasibility: &Feasibility,
    model: &CqmModel,
    catalog: Option<&ChoiceCatalog>,
) -> Result<Value, String> {
    let mut value = json!({
        "feasible": feasibility.feasible,
        "energy": sample.energy,
        "selected": selected_labels(sample, model),
        "verdicts": verdict_entries(feasibility, model),
    });
    if let Some(catalog) = catalog {
        let report = describe_solution(catalog, model, sample).map_err(|e| e.to_string())?;
        let object = value.as_object_mut().expect("check json object");
        let report_value = report.to_json_value();
        object.insert("choices".to_string(), report_value["choices"].clone());
        object.insert("totals".to_string(), report_value["totals"].clone());
    }
    Ok(value)
}

/// Text report for `check`.
pub fn check_table(
    sample: &Sample,
    feasibility: &Feasibility,
    model: &CqmModel,
    catalog: Option<&ChoiceCatalog>,
) -> Result<String, String> {
    let mut out = String::new();
    if let Some(catalog) = catalog {
        let report = describe_solution(catalog, model, sample).map_err(|e| e.to_string())?;
        for choice in &report.choices {
            out.push_str(&format!(
                "{}: {}\n",
                choice.group,
                choice.item.as_deref().unwrap_or("—")
            ));
        }
        for total in &report.totals {
            let text = total.display();
            let text = if total.attribute == "price" { format!("${text}") } else { text };
            out.push_str(&format!("total {}: {}\n", total.attribute, text));
        }
    } else {
        out.push_str(&format!("selected: {}\n", selected_labels(sample, model).join(" + ")));
        out.push_str(&format!("energy: {}\n", sample.energy));
    }
    out.push('\n');
    let mut table = vec![vec![
        "constraint".to_string(),
        "sense".to_string(),
        "lhs".to_string(),
        "status".to_string(),
    ]];
    for (c, v) in model.constraints().iter().zip(&feasibility.verdicts) {
        table.push(vec![
            c.name.clone(),
            match c.sense {
                ConstraintSense::Eq => "=",
                ConstraintSense::Le => "<=",
                ConstraintSense::Ge => ">=",
            }
            .to_string(),
            display_amount(v.lhs, c.scale),
            if v.satisfied {
                "ok".to_string()
            } else {
                format!("VIOLATED by {}", display_amount(v.violation, c.scale))
            },
        ]);
    }
    out.push_str(&render_aligned(&table));
    out.push_str(&format!(
        "\n{}\n",
        if feasibility.feasible { "feasible" } else { "infeasible" }
    ));
    Ok(out)
}
