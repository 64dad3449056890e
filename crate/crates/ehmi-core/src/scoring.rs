//! Category scores (each in [0, 10]) and the weighted total (in [0, 70]).

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::answers::{NormalizedAnswerSet, NormalizedBlock};
use crate::schema::{AnswerKind, Category, QuestionnaireSchema, SchemaSet, ScoringMode};

/// Standardization baseline: the no-eHMI penalty (4) plus the question count (27).
pub const S_BASELINE: f64 = 31.0;
/// Cost baseline: average new-vehicle price in 2022, USD.
pub const CE_BASELINE: f64 = 48301.0;
/// Required sum of the seven weights.
pub const WEIGHT_SUM: f64 = 7.0;
pub const WEIGHT_TOLERANCE: f64 = 1e-9;
pub const MAX_TOTAL: f64 = 70.0;

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreError {
    #[error("no standardization penalties")]
    NoPenalties,
    #[error("question count must be positive")]
    ZeroCount,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cost amounts must be finite and non-negative, got {value}")]
    NegativeCost { value: f64 },
    #[error("percentage {value} is outside [0, 100]")]
    Percentage { value: f64 },
    #[error("total time must be positive and correct time within [0, total]")]
    Duration,
    #[error("positioning element `{element}` has no applicable purpose")]
    NoApplicablePurpose { element: String },
    #[error("no positioning elements")]
    NoElements,
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("category {category} is scored as {mode:?}, which does not fit its answers")]
    Mode { category: Category, mode: ScoringMode },
}

fn clamp10(x: f64) -> f64 {
    x.clamp(0.0, 10.0)
}

/// Penalty of one element: the sum of its resolved S answers.
pub fn standardization_penalty(element: &NormalizedBlock) -> f64 {
    element.sum()
}

pub fn score_standardization(penalties: &[f64], baseline: f64, count: usize) -> Result<f64, ScoreError> {
    if penalties.is_empty() {
        return Err(ScoreError::NoPenalties);
    }
    if count == 0 {
        return Err(ScoreError::ZeroCount);
    }
    let total: f64 = penalties.iter().sum();
    Ok(clamp10((baseline - total) / count as f64 * 10.0))
}

/// `ce` must already include the new-vehicle factor on the installation amount.
pub fn score_cost(ce: &[f64], baseline: f64) -> Result<f64, ScoreError> {
    if let Some(&value) = ce.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(ScoreError::NegativeCost { value });
    }
    let total: f64 = ce.iter().sum();
    Ok(clamp10((baseline - total) / baseline * 10.0))
}

pub fn score_sum_ratio(values: &[f64], count: usize) -> Result<f64, ScoreError> {
    if count == 0 {
        return Err(ScoreError::ZeroCount);
    }
    if values.len() != count {
        return Err(ScoreError::LengthMismatch { expected: count, got: values.len() });
    }
    Ok(values.iter().sum::<f64>() / count as f64 * 10.0)
}

/// Feel-safe percentage of an interaction.
pub fn fsp(correct_time: f64, total_time: f64) -> Result<f64, ScoreError> {
    if !total_time.is_finite() || total_time <= 0.0 || !(0.0..=total_time).contains(&correct_time) {
        return Err(ScoreError::Duration);
    }
    Ok(correct_time / total_time * 100.0)
}

/// Mean percentage scaled to [0, 10]: sum / (100 × count) × 10.
pub fn score_ease(eu: &[f64]) -> Result<f64, ScoreError> {
    if eu.is_empty() {
        return Err(ScoreError::ZeroCount);
    }
    if let Some(&value) = eu.iter().find(|v| !(0.0..=100.0).contains(*v)) {
        return Err(ScoreError::Percentage { value });
    }
    Ok(eu.iter().sum::<f64>() / (100.0 * eu.len() as f64) * 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurposeValue {
    pub id: String,
    pub applicable: bool,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositioningElement {
    pub name: String,
    pub purposes: Vec<PurposeValue>,
    pub y_count: usize,
    /// Mean value over applicable purposes.
    pub p_px: f64,
}

impl PositioningElement {
    pub fn new(name: impl Into<String>, purposes: Vec<PurposeValue>) -> Result<Self, ScoreError> {
        let name = name.into();
        let y_count = purposes.iter().filter(|p| p.applicable).count();
        if y_count == 0 {
            return Err(ScoreError::NoApplicablePurpose { element: name });
        }
        let sum: f64 = purposes.iter().filter(|p| p.applicable).map(|p| p.value).sum();
        Ok(Self { name, purposes, y_count, p_px: sum / y_count as f64 })
    }

    pub fn from_block(block: &NormalizedBlock, schema: &QuestionnaireSchema) -> Result<Self, ScoreError> {
        let purposes = block
            .items
            .iter()
            .filter(|r| schema.question(&r.id).is_some_and(|q| q.kind == AnswerKind::DerivedPurpose))
            .map(|r| PurposeValue { id: r.id.clone(), applicable: r.applicable == Some(true), value: r.value })
            .collect();
        Self::new(block.name.clone(), purposes)
    }
}

pub fn score_positioning(elements: &[PositioningElement]) -> Result<f64, ScoreError> {
    if elements.is_empty() {
        return Err(ScoreError::NoElements);
    }
    if let Some(e) = elements.iter().find(|e| e.y_count == 0) {
        return Err(ScoreError::NoApplicablePurpose { element: e.name.clone() });
    }
    let sum: f64 = elements.iter().map(|e| e.p_px).sum();
    Ok(clamp10(sum / elements.len() as f64 * 10.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementPenalty {
    pub name: String,
    pub penalty: f64,
}

/// Intermediates kept for reporting; [`CategoryDetail::score`] recomputes the
/// category score from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CategoryDetail {
    Penalty { elements: Vec<ElementPenalty>, baseline: f64, count: usize },
    Cost { values: Vec<f64>, sum: f64, baseline: f64 },
    SumRatio { sum: f64, count: usize },
    EuRatio { values: Vec<f64>, sum: f64, denominator: f64 },
    Positioning { elements: Vec<PositioningElement> },
}

impl CategoryDetail {
    pub fn score(&self) -> Result<f64, ScoreError> {
        match self {
            CategoryDetail::Penalty { elements, baseline, count } => {
                let p: Vec<f64> = elements.iter().map(|e| e.penalty).collect();
                score_standardization(&p, *baseline, *count)
            }
            CategoryDetail::Cost { values, baseline, .. } => score_cost(values, *baseline),
            CategoryDetail::SumRatio { sum, count } => {
                if *count == 0 {
                    return Err(ScoreError::ZeroCount);
                }
                Ok(sum / *count as f64 * 10.0)
            }
            CategoryDetail::EuRatio { values, .. } => score_ease(values),
            CategoryDetail::Positioning { elements } => score_positioning(elements),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: Category,
    pub score: f64,
    pub detail: CategoryDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub categories: Vec<CategoryScore>,
}

impl CategoryScores {
    /// Build from seven bare scores in [`Category::ALL`] order, with no
    /// intermediates. Useful for what-if comparisons.
    pub fn from_array(scores: [f64; 7]) -> Self {
        Self {
            categories: Category::ALL
                .into_iter()
                .zip(scores)
                .map(|(category, score)| CategoryScore {
                    category,
                    score,
                    detail: CategoryDetail::SumRatio { sum: score / 10.0, count: 1 },
                })
                .collect(),
        }
    }

    pub fn get(&self, category: Category) -> f64 {
        self.categories.iter().find(|c| c.category == category).map_or(0.0, |c| c.score)
    }

    pub fn as_array(&self) -> [f64; 7] {
        Category::ALL.map(|c| self.get(c))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightError {
    #[error("weight for {category} must be finite and non-negative, got {value}")]
    Invalid { category: Category, value: f64 },
    #[error("weights must sum to 7 (got {sum})")]
    Sum { sum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub s: f64,
    pub ce: f64,
    pub a: f64,
    pub eu: f64,
    pub cc: f64,
    pub p: f64,
    pub r: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        Self::UNIT
    }
}

impl WeightVector {
    pub const UNIT: WeightVector = WeightVector { s: 1.0, ce: 1.0, a: 1.0, eu: 1.0, cc: 1.0, p: 1.0, r: 1.0 };

    pub fn from_array(w: [f64; 7]) -> Self {
        let [s, ce, a, eu, cc, p, r] = w;
        Self { s, ce, a, eu, cc, p, r }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [self.s, self.ce, self.a, self.eu, self.cc, self.p, self.r]
    }

    pub fn get(&self, category: Category) -> f64 {
        self.as_array()[category.index()]
    }

    pub fn set(&mut self, category: Category, value: f64) {
        let mut w = self.as_array();
        w[category.index()] = value;
        *self = Self::from_array(w);
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Checks w_i >= 0 and the sum; returns the categories weighted above 1,
    /// which callers may want to flag.
    pub fn validate(&self) -> Result<Vec<Category>, WeightError> {
        for category in Category::ALL {
            let value = self.get(category);
            if !value.is_finite() || value < 0.0 {
                return Err(WeightError::Invalid { category, value });
            }
        }
        let sum = self.sum();
        if (sum - WEIGHT_SUM).abs() > WEIGHT_TOLERANCE {
            return Err(WeightError::Sum { sum });
        }
        Ok(Category::ALL.into_iter().filter(|c| self.get(*c) > 1.0).collect())
    }
}

/// Σ w_i s_i and its share of the 70-point maximum, in percent.
pub fn weighted_total(scores: &CategoryScores, weights: &WeightVector) -> Result<(f64, f64), ScoreError> {
    weights.validate()?;
    let total = dot(&scores.as_array(), &weights.as_array());
    Ok((total, total / MAX_TOTAL * 100.0))
}

pub(crate) fn dot(scores: &[f64; 7], weights: &[f64; 7]) -> f64 {
    scores.iter().zip(weights).map(|(s, w)| s * w).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub proposal: String,
    pub variant: Option<String>,
    pub weights: WeightVector,
    pub scores: CategoryScores,
    pub total: f64,
    pub percent: f64,
}

fn score_category(schema: &QuestionnaireSchema, blocks: &[NormalizedBlock]) -> Result<CategoryScore, ScoreError> {
    let category = schema.category;
    let count = schema.question_count();
    let mode_error = || ScoreError::Mode { category, mode: schema.scoring_mode };
    let single = || match blocks {
        [b] => Ok(b),
        _ => Err(mode_error()),
    };
    let detail = match schema.scoring_mode {
        ScoringMode::Penalty => CategoryDetail::Penalty {
            elements: blocks
                .iter()
                .map(|b| ElementPenalty { name: b.name.clone(), penalty: standardization_penalty(b) })
                .collect(),
            baseline: schema.baseline.unwrap_or(S_BASELINE),
            count,
        },
        ScoringMode::Cost => {
            let values: Vec<f64> = single()?.values().collect();
            CategoryDetail::Cost { sum: values.iter().sum(), values, baseline: schema.baseline.unwrap_or(CE_BASELINE) }
        }
        ScoringMode::SumRatio => {
            let values: Vec<f64> = single()?.values().collect();
            if values.len() != count {
                return Err(ScoreError::LengthMismatch { expected: count, got: values.len() });
            }
            CategoryDetail::SumRatio { sum: values.iter().sum(), count }
        }
        ScoringMode::EuRatio => {
            let values: Vec<f64> = single()?.values().collect();
            CategoryDetail::EuRatio { sum: values.iter().sum(), denominator: 100.0 * values.len() as f64, values }
        }
        ScoringMode::Positioning => CategoryDetail::Positioning {
            elements: blocks.iter().map(|b| PositioningElement::from_block(b, schema)).collect::<Result<_, _>>()?,
        },
    };
    Ok(CategoryScore { category, score: detail.score()?, detail })
}

/// Score every category of a validated answer set and combine with `weights`.
pub fn evaluate_proposal(
    answers: &NormalizedAnswerSet,
    schemas: &SchemaSet,
    weights: &WeightVector,
) -> Result<Evaluation, ScoreError> {
    weights.validate()?;
    let categories = Category::ALL
        .into_iter()
        .map(|c| score_category(schemas.get(c), answers.blocks(c)))
        .collect::<Result<Vec<_>, _>>()?;
    let scores = CategoryScores { categories };
    let (total, percent) = weighted_total(&scores, weights)?;
    Ok(Evaluation {
        proposal: answers.proposal.clone(),
        variant: answers.variant.clone(),
        weights: *weights,
        scores,
        total,
        percent,
    })
}
