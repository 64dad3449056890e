//! Questionnaires as data.
//!
//! A [`SchemaDocument`] is the serde shape of a schema file. [`load_schema`]
//! checks it and produces a [`QuestionnaireSchema`] with parsed point
//! expressions and expanded gate targets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::formula::{parse_expression, Expr, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    S,
    CE,
    A,
    EU,
    CC,
    P,
    R,
}

impl Category {
    /// Canonical order, also the order of weight vectors.
    pub const ALL: [Category; 7] =
        [Category::S, Category::CE, Category::A, Category::EU, Category::CC, Category::P, Category::R];

    /// Question id prefix, e.g. `CC` for `CC12`.
    pub fn prefix(self) -> &'static str {
        match self {
            Category::S => "S",
            Category::CE => "CE",
            Category::A => "A",
            Category::EU => "EU",
            Category::CC => "CC",
            Category::P => "P",
            Category::R => "R",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Category::S => "Standardization",
            Category::CE => "Cost Effectiveness",
            Category::A => "Accessibility",
            Category::EU => "Ease of Understanding",
            Category::CC => "Constant Communication",
            Category::P => "Positioning",
            Category::R => "Readability",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.prefix().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category `{s}` (expected one of S, CE, A, EU, CC, P, R)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    Penalty,
    Cost,
    SumRatio,
    EuRatio,
    Positioning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Binary,
    Count,
    Money,
    Percentage,
    Composite,
    DerivedPurpose,
}

impl AnswerKind {
    /// Kinds whose answer is a number bound to the question's single variable.
    pub fn is_scalar(self) -> bool {
        matches!(self, AnswerKind::Count | AnswerKind::Money | AnswerKind::Percentage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDocument {
    pub id: String,
    #[serde(default)]
    pub section: String,
    pub prompt: String,
    pub kind: AnswerKind,
    pub pts: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vars: Vec<String>,
    #[serde(default)]
    pub na_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub configurations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDocument {
    pub id: String,
    pub prompt: String,
    /// Element or category flag that switches the gate on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    /// Questions that must all be answered "No" for the gate to fire.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub when_no: Vec<String>,
    /// Question ids or inclusive ranges such as `A9-A14`.
    pub targets: Vec<String>,
    pub fill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityRow {
    pub part: String,
    pub configurations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub category: Category,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub scoring_mode: ScoringMode,
    /// Reference total for `penalty` and `cost` scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<f64>,
    #[serde(default)]
    pub per_element: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gates: Vec<GateDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub visibility: Vec<VisibilityRow>,
    #[serde(default)]
    pub questions: Vec<QuestionDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Question {
    pub id: String,
    pub section: String,
    pub prompt: String,
    pub kind: AnswerKind,
    pub points: Expr,
    pub vars: Vec<String>,
    pub na_value: f64,
    pub min: Option<f64>,
    pub part: Option<String>,
    pub configurations: Vec<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Flag(String),
    AllNo(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub id: String,
    pub prompt: String,
    pub trigger: Trigger,
    pub targets: Vec<String>,
    pub fill: f64,
}

/// Vehicle part → configurations (I..XI) in which the part is visible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VisibilityTable {
    pub parts: BTreeMap<String, BTreeSet<String>>,
}

impl VisibilityTable {
    pub fn is_visible(&self, part: &str, configuration: &str) -> bool {
        self.parts.get(part).is_some_and(|c| c.contains(configuration))
    }
}

pub const CONFIGURATIONS: [&str; 11] = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionnaireSchema {
    pub category: Category,
    pub title: String,
    pub variant: Option<String>,
    pub scoring_mode: ScoringMode,
    pub baseline: Option<f64>,
    pub per_element: bool,
    pub questions: Vec<Question>,
    pub gates: Vec<Gate>,
    pub visibility: Option<VisibilityTable>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("schema has no questions")]
    Empty,
    #[error("{id}: bad point expression: {error}")]
    Expression { id: String, error: ParseError },
    #[error("duplicate question id {0}")]
    DuplicateId(String),
    #[error("question ids must be contiguous: expected {expected}, found {found}")]
    NonContiguous { expected: String, found: String },
    #[error("{id}: kind {kind:?} is not allowed in category {category}")]
    KindNotAllowed { id: String, kind: AnswerKind, category: Category },
    #[error("{id}: {message}")]
    Question { id: String, message: String },
    #[error("{id}: point expression references undeclared variable `{var}`")]
    FreeVariable { id: String, var: String },
    #[error("gate {gate}: {message}")]
    Gate { gate: String, message: String },
    #[error("visibility table: {0}")]
    Visibility(String),
    #[error("schema set: {0}")]
    Set(String),
}

impl QuestionnaireSchema {
    pub fn question_count(&self) -> usize {
        self.questions.len()
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.questions.iter().position(|q| q.id == id)
    }

    /// Gates whose target list contains `id`.
    pub fn gates_for<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Gate> + 'a {
        self.gates.iter().filter(move |g| g.targets.iter().any(|t| t == id))
    }

    /// Every flag name a gate in this schema listens to.
    pub fn flags(&self) -> BTreeSet<&str> {
        self.gates
            .iter()
            .filter_map(|g| match &g.trigger {
                Trigger::Flag(f) => Some(f.as_str()),
                Trigger::AllNo(_) => None,
            })
            .collect()
    }

    pub fn to_document(&self) -> SchemaDocument {
        SchemaDocument {
            category: self.category,
            title: self.title.clone(),
            variant: self.variant.clone(),
            scoring_mode: self.scoring_mode,
            baseline: self.baseline,
            per_element: self.per_element,
            gates: self
                .gates
                .iter()
                .map(|g| {
                    let (flag, when_no) = match &g.trigger {
                        Trigger::Flag(f) => (Some(f.clone()), Vec::new()),
                        Trigger::AllNo(q) => (None, q.clone()),
                    };
                    GateDocument {
                        id: g.id.clone(),
                        prompt: g.prompt.clone(),
                        flag,
                        when_no,
                        targets: g.targets.clone(),
                        fill: g.fill,
                    }
                })
                .collect(),
            visibility: self
                .visibility
                .iter()
                .flat_map(|v| v.parts.iter())
                .map(|(part, confs)| VisibilityRow {
                    part: part.clone(),
                    configurations: confs.iter().cloned().collect(),
                })
                .collect(),
            questions: self
                .questions
                .iter()
                .map(|q| QuestionDocument {
                    id: q.id.clone(),
                    section: q.section.clone(),
                    prompt: q.prompt.clone(),
                    kind: q.kind,
                    pts: q.points.to_string(),
                    vars: q.vars.clone(),
                    na_value: q.na_value,
                    min: q.min,
                    part: q.part.clone(),
                    configurations: q.configurations.clone(),
                    note: q.note.clone(),
                })
                .collect(),
        }
    }
}

fn id_number(prefix: &str, id: &str) -> Option<usize> {
    let digits = id.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

fn expand_targets(prefix: &str, gate: &str, targets: &[String]) -> Result<Vec<String>, SchemaError> {
    let bad = |t: &str| SchemaError::Gate { gate: gate.to_string(), message: format!("bad target `{t}`") };
    let mut out = Vec::new();
    for t in targets {
        match t.split_once('-') {
            Some((lo, hi)) => {
                let lo = id_number(prefix, lo.trim()).ok_or_else(|| bad(t))?;
                let hi = id_number(prefix, hi.trim()).ok_or_else(|| bad(t))?;
                if lo > hi {
                    return Err(bad(t));
                }
                out.extend((lo..=hi).map(|n| format!("{prefix}{n}")));
            }
            None => {
                id_number(prefix, t.trim()).ok_or_else(|| bad(t))?;
                out.push(t.trim().to_string());
            }
        }
    }
    Ok(out)
}

pub fn load_schema(doc: SchemaDocument) -> Result<QuestionnaireSchema, SchemaError> {
    if doc.questions.is_empty() {
        return Err(SchemaError::Empty);
    }
    let category = doc.category;
    let prefix = category.prefix();
    if doc.baseline.is_some_and(|b| !b.is_finite() || b <= 0.0) {
        return Err(SchemaError::Set("baseline must be finite and positive".into()));
    }

    let mut questions = Vec::with_capacity(doc.questions.len());
    let mut seen = BTreeSet::new();
    for (i, q) in doc.questions.into_iter().enumerate() {
        if !seen.insert(q.id.clone()) {
            return Err(SchemaError::DuplicateId(q.id));
        }
        let expected = format!("{prefix}{}", i + 1);
        if q.id != expected {
            return Err(SchemaError::NonContiguous { expected, found: q.id });
        }
        let allowed = match q.kind {
            AnswerKind::DerivedPurpose => category == Category::P,
            AnswerKind::Money => category == Category::CE,
            AnswerKind::Percentage => category == Category::EU,
            _ => true,
        };
        if !allowed {
            return Err(SchemaError::KindNotAllowed { id: q.id, kind: q.kind, category });
        }
        if q.na_value != 0.0 && q.na_value != 1.0 {
            return Err(SchemaError::Question { id: q.id, message: "na_value must be 0 or 1".into() });
        }
        if q.min.is_some_and(|m| !m.is_finite() || m < 0.0) {
            return Err(SchemaError::Question { id: q.id, message: "min must be finite and non-negative".into() });
        }
        let var_rule = match q.kind {
            k if k.is_scalar() => q.vars.len() == 1,
            AnswerKind::Composite => !q.vars.is_empty(),
            _ => q.vars.is_empty(),
        };
        if !var_rule {
            return Err(SchemaError::Question {
                id: q.id,
                message: format!("kind {:?} does not accept {} declared variable(s)", q.kind, q.vars.len()),
            });
        }
        let points = parse_expression(&q.pts).map_err(|error| SchemaError::Expression { id: q.id.clone(), error })?;
        questions.push(Question {
            id: q.id,
            section: q.section,
            prompt: q.prompt,
            kind: q.kind,
            points,
            vars: q.vars,
            na_value: q.na_value,
            min: q.min,
            part: q.part,
            configurations: q.configurations,
            note: q.note,
        });
    }

    // free symbols: own variables, or in P the value of another non-derived P question
    for q in &questions {
        for var in q.points.variables() {
            let own = q.vars.contains(&var);
            let sibling = category == Category::P
                && var != q.id
                && questions.iter().any(|o| o.id == var && o.kind != AnswerKind::DerivedPurpose);
            if !own && !sibling {
                return Err(SchemaError::FreeVariable { id: q.id.clone(), var });
            }
        }
    }

    let index: BTreeMap<&str, usize> = questions.iter().enumerate().map(|(i, q)| (q.id.as_str(), i)).collect();
    let mut gates = Vec::with_capacity(doc.gates.len());
    let mut gate_ids = BTreeSet::new();
    for g in doc.gates {
        let err = |message: String| SchemaError::Gate { gate: g.id.clone(), message };
        if !gate_ids.insert(g.id.clone()) {
            return Err(err("duplicate gate id".into()));
        }
        if !g.fill.is_finite() || g.fill < 0.0 {
            return Err(err("fill must be finite and non-negative".into()));
        }
        let targets = expand_targets(prefix, &g.id, &g.targets)?;
        if targets.is_empty() {
            return Err(err("no targets".into()));
        }
        let mut first_target = usize::MAX;
        for t in &targets {
            let pos = *index.get(t.as_str()).ok_or_else(|| err(format!("target {t} is not a question")))?;
            first_target = first_target.min(pos);
        }
        let trigger = match (g.flag, g.when_no.is_empty()) {
            (Some(flag), true) if !flag.is_empty() => Trigger::Flag(flag),
            (None, false) => {
                for c in &g.when_no {
                    let pos = *index
                        .get(c.as_str())
                        .ok_or_else(|| err(format!("controlling question {c} does not exist")))?;
                    if questions[pos].kind != AnswerKind::Binary {
                        return Err(err(format!("controlling question {c} is not binary")));
                    }
                    if pos >= first_target {
                        return Err(err(format!("controlling question {c} must precede its targets")));
                    }
                }
                Trigger::AllNo(g.when_no)
            }
            _ => return Err(err("exactly one of `flag` or `when_no` is required".into())),
        };
        gates.push(Gate { id: g.id, prompt: g.prompt, trigger, targets, fill: g.fill });
    }

    let visibility = if doc.visibility.is_empty() {
        None
    } else {
        let mut parts = BTreeMap::new();
        for row in doc.visibility {
            for c in &row.configurations {
                if !CONFIGURATIONS.contains(&c.as_str()) {
                    return Err(SchemaError::Visibility(format!("{}: unknown configuration `{c}`", row.part)));
                }
            }
            let set: BTreeSet<String> = row.configurations.into_iter().collect();
            if parts.insert(row.part.clone(), set).is_some() {
                return Err(SchemaError::Visibility(format!("duplicate part `{}`", row.part)));
            }
        }
        Some(VisibilityTable { parts })
    };
    check_purposes(&questions, visibility.as_ref())?;

    Ok(QuestionnaireSchema {
        category,
        title: doc.title,
        variant: doc.variant,
        scoring_mode: doc.scoring_mode,
        baseline: doc.baseline,
        per_element: doc.per_element,
        questions,
        gates,
        visibility,
    })
}

/// Every part a purpose formula reads must be visible in at least one of the
/// configurations that purpose serves.
fn check_purposes(questions: &[Question], visibility: Option<&VisibilityTable>) -> Result<(), SchemaError> {
    for q in questions {
        if let Some(part) = &q.part {
            if let Some(v) = visibility {
                if !v.parts.contains_key(part) {
                    return Err(SchemaError::Visibility(format!("{}: part `{part}` not in table", q.id)));
                }
            }
        }
        if q.kind != AnswerKind::DerivedPurpose {
            continue;
        }
        let v =
            visibility.ok_or_else(|| SchemaError::Visibility("purpose questions need a visibility table".into()))?;
        if q.configurations.is_empty() {
            return Err(SchemaError::Visibility(format!("{}: purpose lists no configurations", q.id)));
        }
        for var in q.points.variables() {
            let part =
                questions.iter().find(|o| o.id == var).and_then(|o| o.part.as_deref()).ok_or_else(|| {
                    SchemaError::Visibility(format!("{}: {var} is not a vehicle-part question", q.id))
                })?;
            if !q.configurations.iter().any(|c| v.is_visible(part, c)) {
                return Err(SchemaError::Visibility(format!(
                    "{}: {var} ({part}) is not visible in {}",
                    q.id,
                    q.configurations.join("/")
                )));
            }
        }
    }
    Ok(())
}

/// One schema per category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaSet {
    schemas: Vec<QuestionnaireSchema>,
}

impl SchemaSet {
    pub fn new(mut schemas: Vec<QuestionnaireSchema>) -> Result<Self, SchemaError> {
        schemas.sort_by_key(|s| s.category);
        let cats: Vec<Category> = schemas.iter().map(|s| s.category).collect();
        if cats != Category::ALL {
            return Err(SchemaError::Set(format!("need exactly one schema per category, got {cats:?}")));
        }
        Ok(Self { schemas })
    }

    pub fn get(&self, category: Category) -> &QuestionnaireSchema {
        &self.schemas[category.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &QuestionnaireSchema> {
        self.schemas.iter()
    }

    /// Variant tag of the readability schema, if any.
    pub fn variant(&self) -> Option<&str> {
        self.get(Category::R).variant.as_deref()
    }

    pub fn total_questions(&self) -> usize {
        self.schemas.iter().map(|s| s.question_count()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn q(id: &str, kind: AnswerKind, pts: &str, vars: &[&str]) -> QuestionDocument {
        QuestionDocument {
            id: id.into(),
            section: String::new(),
            prompt: id.into(),
            kind,
            pts: pts.into(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
            na_value: 0.0,
            min: None,
            part: None,
            configurations: vec![],
            note: None,
        }
    }

    fn doc(category: Category, questions: Vec<QuestionDocument>) -> SchemaDocument {
        SchemaDocument {
            category,
            title: "t".into(),
            variant: None,
            scoring_mode: ScoringMode::SumRatio,
            baseline: None,
            per_element: false,
            gates: vec![],
            visibility: vec![],
            questions,
        }
    }

    #[test]
    fn empty_document_is_rejected() {
        assert_eq!(load_schema(doc(Category::A, vec![])), Err(SchemaError::Empty));
    }

    #[test]
    fn ids_must_be_unique_and_contiguous() {
        let d = doc(Category::A, vec![q("A1", AnswerKind::Binary, "1", &[]), q("A1", AnswerKind::Binary, "1", &[])]);
        assert_eq!(load_schema(d), Err(SchemaError::DuplicateId("A1".into())));
        let d = doc(Category::A, vec![q("A1", AnswerKind::Binary, "1", &[]), q("A3", AnswerKind::Binary, "1", &[])]);
        assert!(matches!(load_schema(d), Err(SchemaError::NonContiguous { .. })));
    }

    #[test]
    fn free_variables_and_kinds() {
        let d = doc(Category::S, vec![q("S1", AnswerKind::Count, "Pv - 1", &["Pvx"])]);
        assert!(matches!(load_schema(d), Err(SchemaError::FreeVariable { .. })));
        let d = doc(Category::A, vec![q("A1", AnswerKind::Money, "Buy", &["Buy"])]);
        assert!(matches!(load_schema(d), Err(SchemaError::KindNotAllowed { .. })));
        let d = doc(Category::A, vec![q("A1", AnswerKind::Binary, "1 +", &[])]);
        assert!(matches!(load_schema(d), Err(SchemaError::Expression { .. })));
    }

    #[test]
    fn gates_expand_ranges_and_must_follow_their_trigger() {
        let mut d = doc(Category::A, (1..=5).map(|i| q(&format!("A{i}"), AnswerKind::Binary, "1", &[])).collect());
        d.gates.push(GateDocument {
            id: "g".into(),
            prompt: String::new(),
            flag: None,
            when_no: vec!["A1".into()],
            targets: vec!["A2-A4".into()],
            fill: 0.0,
        });
        let s = load_schema(d.clone()).unwrap();
        assert_eq!(s.gates[0].targets, vec!["A2", "A3", "A4"]);
        assert_eq!(load_schema(s.to_document()).unwrap(), s);

        d.gates[0].when_no = vec!["A3".into()];
        assert!(matches!(load_schema(d.clone()), Err(SchemaError::Gate { .. })));
        d.gates[0].when_no = vec!["A1".into()];
        d.gates[0].targets = vec!["A4-A9".into()];
        assert!(matches!(load_schema(d), Err(SchemaError::Gate { .. })));
    }

    #[test]
    fn category_parsing() {
        assert_eq!("cc".parse::<Category>().unwrap(), Category::CC);
        assert!("Q".parse::<Category>().is_err());
    }
}
