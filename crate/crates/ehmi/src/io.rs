//! Reading and writing answer files, schema files and CPI tables.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ehmi_core::answers::ProposalAnswerSet;
use ehmi_core::costkit::{CpiTable, YearMonth, CPI_TARGET};
use ehmi_core::schema::SchemaDocument;
use serde::de::DeserializeOwned;

/// JSON if the text starts with `{`, TOML otherwise.
fn parse_structured<T: DeserializeOwned>(text: &str) -> Result<T> {
    if text.trim_start().starts_with('{') {
        Ok(serde_json::from_str(text)?)
    } else {
        Ok(toml::from_str(text)?)
    }
}

pub fn parse_answers(text: &str) -> Result<ProposalAnswerSet> {
    parse_structured(text)
}

pub fn read_answers(path: &Path) -> Result<ProposalAnswerSet> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_answers(&text).with_context(|| format!("{} is not a valid answer file", path.display()))
}

pub fn answers_to_toml(set: &ProposalAnswerSet) -> Result<String> {
    Ok(toml::to_string(set)?)
}

pub fn parse_schema_document(text: &str) -> Result<SchemaDocument> {
    parse_structured(text)
}

pub fn schema_to_toml(doc: &SchemaDocument) -> Result<String> {
    Ok(toml::to_string(doc)?)
}

#[derive(serde::Deserialize)]
struct CpiRow {
    month: String,
    index: f64,
}

/// `month,index` rows such as `2022-12,296.797`, anchored at December 2022.
pub fn parse_cpi_csv(text: &str) -> Result<CpiTable> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, row) in reader.deserialize::<CpiRow>().enumerate() {
        let row = row.with_context(|| format!("CPI row {}", line + 2))?;
        let month: YearMonth = row.month.parse()?;
        rows.push((month, row.index));
    }
    if rows.is_empty() {
        bail!("CPI table is empty");
    }
    Ok(CpiTable::new(rows, CPI_TARGET)?)
}
