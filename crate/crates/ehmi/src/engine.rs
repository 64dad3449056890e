//! Schema loading and the validate-then-score pipeline shared by the CLI and
//! the service.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ehmi_core::answers::{validate, NormalizedAnswerSet, ProposalAnswerSet, ValidationReport, Warning};
use ehmi_core::schema::{load_schema, Category, QuestionnaireSchema, SchemaDocument, SchemaSet};
use ehmi_core::scoring::{evaluate_proposal, Evaluation, ScoreError, WeightVector};
use serde::Serialize;

use crate::data::SCHEMA_FILES;
use crate::io::parse_schema_document;

/// Environment variable naming a directory of schema files to use instead of
/// the bundled ones.
pub const SCHEMA_DIR_VAR: &str = "EHMI_SCHEMA_DIR";
/// Readability variant used when none is requested.
pub const DEFAULT_VARIANT: &str = "results";

/// One [`SchemaSet`] per readability variant. The other six categories are
/// shared.
#[derive(Debug, Clone)]
pub struct Schemas {
    sets: BTreeMap<String, SchemaSet>,
    default: String,
}

impl Schemas {
    pub fn bundled() -> Result<Self> {
        let docs = SCHEMA_FILES
            .iter()
            .map(|(name, text)| parse_schema_document(text).with_context(|| format!("bundled schema {name}")))
            .collect::<Result<Vec<_>>>()?;
        Self::from_documents(docs)
    }

    /// Every `*.toml` and `*.json` file in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .with_context(|| format!("cannot read schema directory {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("toml" | "json")))
            .collect();
        paths.sort();
        let docs = paths
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                parse_schema_document(&text).with_context(|| format!("{} is not a valid schema", p.display()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_documents(docs)
    }

    /// Bundled schemas unless `EHMI_SCHEMA_DIR` is set.
    pub fn load() -> Result<Self> {
        match std::env::var_os(SCHEMA_DIR_VAR) {
            Some(dir) if !dir.is_empty() => Self::from_dir(Path::new(&dir)),
            _ => Self::bundled(),
        }
    }

    /// Exactly one schema per category except readability, which may come in
    /// several variants.
    pub fn from_documents(docs: Vec<SchemaDocument>) -> Result<Self> {
        let mut shared: BTreeMap<Category, QuestionnaireSchema> = BTreeMap::new();
        let mut readability: BTreeMap<String, QuestionnaireSchema> = BTreeMap::new();
        for doc in docs {
            let (category, variant) = (doc.category, doc.variant.clone());
            let schema = load_schema(doc).with_context(|| format!("{category} schema"))?;
            if category == Category::R {
                let key = variant.unwrap_or_else(|| DEFAULT_VARIANT.to_string());
                if readability.insert(key.clone(), schema).is_some() {
                    bail!("two readability schemas with variant {key:?}");
                }
            } else if shared.insert(category, schema).is_some() {
                bail!("two {category} schemas");
            }
        }
        if readability.is_empty() {
            bail!("no R schema");
        }
        let mut sets = BTreeMap::new();
        for (variant, r) in readability {
            let mut all: Vec<_> = shared.values().cloned().collect();
            all.push(r);
            sets.insert(variant, SchemaSet::new(all)?);
        }
        let default = if sets.contains_key(DEFAULT_VARIANT) {
            DEFAULT_VARIANT.to_string()
        } else {
            sets.keys().next().cloned().unwrap_or_default()
        };
        Ok(Self { sets, default })
    }

    pub fn variants(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }

    pub fn default_variant(&self) -> &str {
        &self.default
    }

    /// The set for `variant`, or the default one.
    pub fn get(&self, variant: Option<&str>) -> Result<&SchemaSet, UnknownVariant> {
        let key = variant.unwrap_or(&self.default);
        self.sets.get(key).ok_or_else(|| UnknownVariant {
            requested: key.to_string(),
            available: self.sets.keys().cloned().collect(),
        })
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown readability variant {requested:?} (available: {})", available.join(", "))]
pub struct UnknownVariant {
    pub requested: String,
    pub available: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scored {
    pub evaluation: Evaluation,
    pub normalized: NormalizedAnswerSet,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, thiserror::Error)]
pub enum EvaluateError {
    #[error("{}: invalid answers\n{report}", .proposal)]
    Invalid { proposal: String, report: ValidationReport },
    #[error("{proposal}: {source}")]
    Score { proposal: String, source: ScoreError },
}

pub fn evaluate(set: &ProposalAnswerSet, schemas: &SchemaSet, weights: &WeightVector) -> Result<Scored, EvaluateError> {
    let validated =
        validate(set, schemas).map_err(|report| EvaluateError::Invalid { proposal: set.proposal.clone(), report })?;
    let evaluation = evaluate_proposal(&validated.answers, schemas, weights)
        .map_err(|source| EvaluateError::Score { proposal: set.proposal.clone(), source })?;
    Ok(Scored { evaluation, normalized: validated.answers, warnings: validated.warnings })
}

pub fn evaluate_all(
    sets: &[ProposalAnswerSet],
    schemas: &SchemaSet,
    weights: &WeightVector,
) -> Result<Vec<Scored>, EvaluateError> {
    sets.iter().map(|s| evaluate(s, schemas, weights)).collect()
}
