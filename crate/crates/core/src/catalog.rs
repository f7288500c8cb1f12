//! CSV-backed item catalogs: named items in ordered groups, with numeric
//! attributes stored exactly in integer minor units (cents, tenths of a
//! kcal, ...) so downstream totals and golden comparisons never lose
//! precision to floating point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("csv error: {0}")]
    Csv(String),
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("catalog needs at least one numeric attribute column")]
    NoAttributeColumns,
    #[error("catalog has a header but no rows")]
    EmptyCatalog,
    #[error("row {row}: item name is empty")]
    EmptyName { row: usize },
    #[error("row {row}: group is empty")]
    EmptyGroup { row: usize },
    #[error("row {row}, column {column:?}: cannot parse {value:?}: {reason}")]
    BadNumber { row: usize, column: String, value: String, reason: String },
    #[error("duplicate item {name:?} in group {group:?}")]
    DuplicateItem { group: String, name: String },
    #[error("attribute {attribute:?} has scale {scale}, which is not a power of ten")]
    BadScale { attribute: String, scale: u32 },
    #[error("invalid catalog document: {0}")]
    Document(String),
}

impl From<csv::Error> for CatalogError {
    fn from(e: csv::Error) -> Self {
        CatalogError::Csv(e.to_string())
    }
}

/// One catalog row: an item with its group and exact attribute values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub name: String,
    pub group: String,
    /// Attribute name -> value in minor units (actual value = minor / scale).
    pub attributes: BTreeMap<String, i64>,
}

/// An ordered item catalog parsed from CSV.
///
/// Row order is preserved so variable indices derived from the catalog are
/// stable; groups are listed in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CatalogDoc", into = "CatalogDoc")]
pub struct ChoiceCatalog {
    items: Vec<CatalogItem>,
    groups: Vec<String>,
    /// Attribute names in CSV column order.
    attributes: Vec<String>,
    scales: BTreeMap<String, u32>,
}

/// Default minor-unit factor for an attribute column.
pub fn default_scale(attribute: &str) -> u32 {
    match attribute {
        "price" => 100,
        "calories" => 10,
        _ => 1000,
    }
}

fn is_power_of_ten(scale: u32) -> bool {
    let mut s = scale;
    while s % 10 == 0 {
        s /= 10;
    }
    s == 1
}

/// Number of decimal digits implied by a power-of-ten scale.
pub fn scale_decimals(scale: u32) -> u32 {
    scale.ilog10()
}

/// Formats a minor-unit value as an exact decimal string ("2175" at scale
/// 100 renders as "21.75").
pub fn format_minor(minor: i64, scale: u32) -> String {
    let decimals = scale_decimals(scale);
    if decimals == 0 {
        return minor.to_string();
    }
    let scale = i64::from(scale);
    let sign = if minor < 0 { "-" } else { "" };
    let magnitude = minor.unsigned_abs();
    let whole = magnitude / scale.unsigned_abs();
    let frac = magnitude % scale.unsigned_abs();
    format!("{sign}{whole}.{frac:0width$}", width = decimals as usize)
}

/// Parses a decimal cell ("8.00", "$8.00", "\$8.00", "-3.5") into exact
/// minor units at the given power-of-ten scale.
pub fn parse_minor(text: &str, scale: u32) -> Result<i64, String> {
    let trimmed = text.trim();
    let unprefixed = trimmed
        .strip_prefix("\\$")
        .or_else(|| trimmed.strip_prefix('$'))
        .unwrap_or(trimmed);
    let (sign, digits) = match unprefixed.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, unprefixed),
    };
    if digits.is_empty() {
        return Err("empty number".to_string());
    }
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err("no digits".to_string());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err("not a plain decimal number".to_string());
    }
    let decimals = scale_decimals(scale) as usize;
    if frac.len() > decimals {
        return Err(format!(
            "{} fractional digits, but this column stores at most {decimals}",
            frac.len()
        ));
    }
    let whole_value: i64 = if whole.is_empty() {
        0
    } else {
        whole.parse().map_err(|_| "integer part out of range".to_string())?
    };
    let mut frac_value: i64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| "fractional part out of range".to_string())?
    };
    frac_value *= 10i64.pow((decimals - frac.len()) as u32);
    whole_value
        .checked_mul(i64::from(scale))
        .and_then(|w| w.checked_add(frac_value))
        .map(|v| sign * v)
        .ok_or_else(|| "value out of range".to_string())
}

impl ChoiceCatalog {
    /// Parses a CSV catalog with default per-attribute scales.
    pub fn parse(csv_text: &str) -> Result<Self, CatalogError> {
        Self::parse_with_scales(csv_text, &BTreeMap::new())
    }

    /// Parses a CSV catalog; `scales` overrides the default minor-unit
    /// factor per attribute column.
    pub fn parse_with_scales(
        csv_text: &str,
        scales: &BTreeMap<String, u32>,
    ) -> Result<Self, CatalogError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(csv_text.as_bytes());
        let headers: Vec<String> = reader
            .headers()?
            .iter()
            .map(|h| h.to_string())
            .collect();
        let name_col = headers
            .iter()
            .position(|h| h == "name")
            .ok_or(CatalogError::MissingColumn("name"))?;
        let group_col = headers
            .iter()
            .position(|h| h == "item_type")
            .ok_or(CatalogError::MissingColumn("item_type"))?;
        let attr_cols: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != name_col && i != group_col)
            .map(|(i, h)| (i, h.clone()))
            .collect();
        if attr_cols.is_empty() {
            return Err(CatalogError::NoAttributeColumns);
        }

        let mut attr_scales = BTreeMap::new();
        for (_, attr) in &attr_cols {
            let scale = scales.get(attr).copied().unwrap_or_else(|| default_scale(attr));
            if scale == 0 || !is_power_of_ten(scale) {
                return Err(CatalogError::BadScale { attribute: attr.clone(), scale });
            }
            attr_scales.insert(attr.clone(), scale);
        }

        let mut items = Vec::new();
        let mut groups: Vec<String> = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record?;
            let row = row_idx + 2; // 1-based, after the header
            let name = record.get(name_col).unwrap_or("").to_string();
            if name.is_empty() {
                return Err(CatalogError::EmptyName { row });
            }
            let group = record.get(group_col).unwrap_or("").to_string();
            if group.is_empty() {
                return Err(CatalogError::EmptyGroup { row });
            }
            let mut attributes = BTreeMap::new();
            for (col, attr) in &attr_cols {
                let raw = record.get(*col).unwrap_or("");
                let scale = attr_scales[attr];
                let minor = parse_minor(raw, scale).map_err(|reason| CatalogError::BadNumber {
                    row,
                    column: attr.clone(),
                    value: raw.to_string(),
                    reason,
                })?;
                attributes.insert(attr.clone(), minor);
            }
            if items
                .iter()
                .any(|i: &CatalogItem| i.name == name && i.group == group)
            {
                return Err(CatalogError::DuplicateItem { group, name });
            }
            if !groups.contains(&group) {
                groups.push(group.clone());
            }
            items.push(CatalogItem { name, group, attributes });
        }
        if items.is_empty() {
            return Err(CatalogError::EmptyCatalog);
        }
        Ok(Self {
            items,
            groups,
            attributes: attr_cols.into_iter().map(|(_, a)| a).collect(),
            scales: attr_scales,
        })
    }

    pub fn items(&self) -> &[CatalogItem] {
        &self.items
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn has_attribute(&self, attribute: &str) -> bool {
        self.scales.contains_key(attribute)
    }

    pub fn scale(&self, attribute: &str) -> Option<u32> {
        self.scales.get(attribute).copied()
    }

    /// Item indices belonging to a group, in catalog order.
    pub fn group_members(&self, group: &str) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter_map(|(i, item)| (item.group == group).then_some(i))
            .collect()
    }

    /// The unique variable label for an item ("group/name"); plain names may
    /// repeat across groups, so the group qualifies them.
    pub fn variable_label(&self, index: usize) -> String {
        let item = &self.items[index];
        format!("{}/{}", item.group, item.name)
    }

    /// Number of selections picking exactly one item per group.
    pub fn combination_count(&self) -> u128 {
        self.groups
            .iter()
            .map(|g| self.group_members(g).len() as u128)
            .product()
    }

    /// Serializes back to CSV; parsing the result yields an identical
    /// catalog (values are written from exact minor units).
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["name".to_string(), "item_type".to_string()];
        header.extend(self.attributes.iter().cloned());
        writer.write_record(&header).expect("in-memory write");
        for item in &self.items {
            let mut record = vec![item.name.clone(), item.group.clone()];
            for attr in &self.attributes {
                record.push(format_minor(item.attributes[attr], self.scales[attr]));
            }
            writer.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self, CatalogError> {
        serde_json::from_str(text).map_err(|e| CatalogError::Document(e.to_string()))
    }
}

/// JSON export shape, used for provenance alongside solver outputs.
#[derive(Serialize, Deserialize)]
struct CatalogDoc {
    items: Vec<CatalogItem>,
    groups: Vec<String>,
    attributes: Vec<String>,
    scales: BTreeMap<String, u32>,
}

impl From<ChoiceCatalog> for CatalogDoc {
    fn from(c: ChoiceCatalog) -> Self {
        CatalogDoc { items: c.items, groups: c.groups, attributes: c.attributes, scales: c.scales }
    }
}

impl TryFrom<CatalogDoc> for ChoiceCatalog {
    type Error = CatalogError;

    fn try_from(doc: CatalogDoc) -> Result<Self, CatalogError> {
        for attr in &doc.attributes {
            let scale = doc.scales.get(attr).copied().unwrap_or(0);
            if scale == 0 || !is_power_of_ten(scale) {
                return Err(CatalogError::BadScale { attribute: attr.clone(), scale });
            }
        }
        for item in &doc.items {
            if !doc.groups.contains(&item.group) {
                return Err(CatalogError::Document(format!(
                    "item {:?} references unlisted group {:?}",
                    item.name, item.group
                )));
            }
        }
        Ok(ChoiceCatalog {
            items: doc.items,
            groups: doc.groups,
            attributes: doc.attributes,
            scales: doc.scales,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minor_accepts_currency_prefixes() {
        assert_eq!(parse_minor("$8.00", 100), Ok(800));
        assert_eq!(parse_minor("\\$8.00", 100), Ok(800));
        assert_eq!(parse_minor("8.00", 100), Ok(800));
        assert_eq!(parse_minor("8", 100), Ok(800));
        assert_eq!(parse_minor("284.4", 10), Ok(2844));
        assert_eq!(parse_minor("358", 10), Ok(3580));
        assert_eq!(parse_minor("-1.5", 10), Ok(-15));
    }

    #[test]
    fn parse_minor_rejects_excess_precision_and_garbage() {
        assert!(parse_minor("8.005", 100).is_err());
        assert!(parse_minor("eight", 100).is_err());
        assert!(parse_minor("1e3", 100).is_err());
        assert!(parse_minor("", 100).is_err());
        assert!(parse_minor("$", 100).is_err());
    }

    #[test]
    fn format_minor_round_trips_values() {
        assert_eq!(format_minor(2175, 100), "21.75");
        assert_eq!(format_minor(6204, 10), "620.4");
        assert_eq!(format_minor(-15, 10), "-1.5");
        assert_eq!(format_minor(358, 1), "358");
        assert_eq!(format_minor(5, 100), "0.05");
    }

    const SMALL: &str = "\
name,item_type,price,calories
Sweet Potato,waffle,$8.00,284.4
The Classic,waffle,$8.00,358
Maple Syrup,smear,$2.25,160
Maple Syrup,drizzle,$2.00,104
";

    #[test]
    fn parses_rows_in_order_with_exact_minor_units() {
        let catalog = ChoiceCatalog::parse(SMALL).unwrap();
        assert_eq!(catalog.items().len(), 4);
        assert_eq!(catalog.groups(), ["waffle", "smear", "drizzle"]);
        assert_eq!(catalog.attributes(), ["price", "calories"]);
        let first = &catalog.items()[0];
        assert_eq!(first.attributes["price"], 800);
        assert_eq!(first.attributes["calories"], 2844);
        assert_eq!(catalog.variable_label(2), "smear/Maple Syrup");
        assert_eq!(catalog.combination_count(), 2);
    }

    #[test]
    fn duplicate_name_within_group_is_rejected() {
        let text = "name,item_type,price\nA,g,1\nA,g,2\n";
        assert_eq!(
            ChoiceCatalog::parse(text),
            Err(CatalogError::DuplicateItem { group: "g".into(), name: "A".into() })
        );
    }

    #[test]
    fn header_only_file_is_an_empty_catalog() {
        assert_eq!(
            ChoiceCatalog::parse("name,item_type,price\n"),
            Err(CatalogError::EmptyCatalog)
        );
    }

    #[test]
    fn missing_columns_are_named() {
        assert_eq!(
            ChoiceCatalog::parse("name,price\nA,1\n"),
            Err(CatalogError::MissingColumn("item_type"))
        );
        assert_eq!(
            ChoiceCatalog::parse("name,item_type\nA,g\n"),
            Err(CatalogError::NoAttributeColumns)
        );
    }

    #[test]
    fn bad_cells_name_row_and_column() {
        let text = "name,item_type,price\nA,g,cheap\n";
        match ChoiceCatalog::parse(text) {
            Err(CatalogError::BadNumber { row, column, value, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "price");
                assert_eq!(value, "cheap");
            }
            other => panic!("expected BadNumber, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let catalog = ChoiceCatalog::parse(SMALL).unwrap();
        let again = ChoiceCatalog::parse(&catalog.to_csv_string()).unwrap();
        assert_eq!(again, catalog);
    }

    #[test]
    fn json_round_trip_is_identity() {
        let catalog = ChoiceCatalog::parse(SMALL).unwrap();
        let again = ChoiceCatalog::from_json_str(&catalog.to_json_string()).unwrap();
        assert_eq!(again, catalog);
    }
}
