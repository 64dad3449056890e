//! Filled questionnaires and their validation against a [`SchemaSet`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::formula::{Env, EvalError};
use crate::schema::{AnswerKind, Category, Question, QuestionnaireSchema, SchemaSet, Trigger};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binary {
    Yes,
    No,
    Unknown,
    Na,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnswerValue {
    Binary(Binary),
    Number(f64),
    Bindings(BTreeMap<String, f64>),
    /// Money amount that could not be found; resolved from the other costs.
    UnknownMoney,
}

impl AnswerValue {
    pub const YES: AnswerValue = AnswerValue::Binary(Binary::Yes);
    pub const NO: AnswerValue = AnswerValue::Binary(Binary::No);
    pub const NA: AnswerValue = AnswerValue::Binary(Binary::Na);
    pub const UNKNOWN: AnswerValue = AnswerValue::Binary(Binary::Unknown);

    fn describe(&self) -> String {
        match self {
            AnswerValue::Binary(b) => format!("{b:?}").to_lowercase(),
            AnswerValue::Number(n) => format!("number {n}"),
            AnswerValue::Bindings(_) => "variable bindings".to_string(),
            AnswerValue::UnknownMoney => "unknown".to_string(),
        }
    }
}

impl Serialize for AnswerValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AnswerValue::Binary(Binary::Yes) => s.serialize_str("yes"),
            AnswerValue::Binary(Binary::No) => s.serialize_str("no"),
            AnswerValue::Binary(Binary::Unknown) | AnswerValue::UnknownMoney => s.serialize_str("unknown"),
            AnswerValue::Binary(Binary::Na) => s.serialize_str("na"),
            AnswerValue::Number(n) => s.serialize_f64(*n),
            AnswerValue::Bindings(map) => map.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for AnswerValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = AnswerValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"yes\", \"no\", \"unknown\", \"na\", a number, or a table of variable bindings")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<AnswerValue, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "yes" => Ok(AnswerValue::YES),
                    "no" => Ok(AnswerValue::NO),
                    "unknown" => Ok(AnswerValue::UNKNOWN),
                    "na" | "n/a" => Ok(AnswerValue::NA),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<AnswerValue, E> {
                Ok(AnswerValue::Number(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<AnswerValue, E> {
                Ok(AnswerValue::Number(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<AnswerValue, E> {
                Ok(AnswerValue::Number(v as f64))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<AnswerValue, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = map.next_entry::<String, f64>()? {
                    out.insert(k, v);
                }
                Ok(AnswerValue::Bindings(out))
            }
        }
        d.deserialize_any(V)
    }
}

/// Answers for one element (S, P) or one flat category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnswerBlock {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<String>,
    #[serde(default)]
    pub answers: BTreeMap<String, AnswerValue>,
    /// Free-form provenance per question id; ignored by scoring.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

/// One proposal's complete evaluation. Standardization and positioning are
/// answered once per non-identical element.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProposalAnswerSet {
    pub proposal: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default)]
    pub standardization: Vec<AnswerBlock>,
    #[serde(default)]
    pub cost: AnswerBlock,
    #[serde(default)]
    pub accessibility: AnswerBlock,
    #[serde(default)]
    pub ease: AnswerBlock,
    #[serde(default)]
    pub communication: AnswerBlock,
    #[serde(default)]
    pub positioning: Vec<AnswerBlock>,
    #[serde(default)]
    pub readability: AnswerBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Answered { answer: AnswerValue },
    Forced { gate: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub id: String,
    pub value: f64,
    pub source: Source,
    /// Only for purpose questions: whether the evaluator marked it as applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub applicable: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NormalizedBlock {
    pub name: String,
    pub flags: BTreeSet<String>,
    pub items: Vec<Resolved>,
    pub notes: BTreeMap<String, String>,
}

impl NormalizedBlock {
    pub fn value(&self, id: &str) -> Option<f64> {
        self.items.iter().find(|r| r.id == id).map(|r| r.value)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.items.iter().map(|r| r.value)
    }

    pub fn sum(&self) -> f64 {
        self.values().sum()
    }
}

/// A fully numeric answer set: gates applied, NA and unknowns resolved.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NormalizedAnswerSet {
    pub proposal: String,
    pub variant: Option<String>,
    pub notes: Vec<String>,
    pub standardization: Vec<NormalizedBlock>,
    pub cost: NormalizedBlock,
    pub accessibility: NormalizedBlock,
    pub ease: NormalizedBlock,
    pub communication: NormalizedBlock,
    pub positioning: Vec<NormalizedBlock>,
    pub readability: NormalizedBlock,
}

impl NormalizedAnswerSet {
    pub fn blocks(&self, category: Category) -> &[NormalizedBlock] {
        match category {
            Category::S => &self.standardization,
            Category::CE => core::slice::from_ref(&self.cost),
            Category::A => core::slice::from_ref(&self.accessibility),
            Category::EU => core::slice::from_ref(&self.ease),
            Category::CC => core::slice::from_ref(&self.communication),
            Category::P => &self.positioning,
            Category::R => core::slice::from_ref(&self.readability),
        }
    }

    /// Back to an answer set. Forced entries are dropped so that the gates
    /// re-derive them; everything else keeps the evaluator's own answer.
    pub fn to_answers(&self) -> ProposalAnswerSet {
        let block = |b: &NormalizedBlock| AnswerBlock {
            name: b.name.clone(),
            flags: b.flags.clone(),
            answers: b
                .items
                .iter()
                .filter_map(|r| match &r.source {
                    Source::Answered { answer } => Some((r.id.clone(), answer.clone())),
                    Source::Forced { .. } => None,
                })
                .collect(),
            notes: b.notes.clone(),
        };
        ProposalAnswerSet {
            proposal: self.proposal.clone(),
            notes: self.notes.clone(),
            standardization: self.standardization.iter().map(block).collect(),
            cost: block(&self.cost),
            accessibility: block(&self.accessibility),
            ease: block(&self.ease),
            communication: block(&self.communication),
            positioning: self.positioning.iter().map(block).collect(),
            readability: block(&self.readability),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationError {
    #[error("{category}: at least one element is required")]
    NoElements { category: Category },
    #[error("{category}: duplicate or empty element name `{name}`")]
    ElementName { category: Category, name: String },
    #[error("{block}: missing answer for {id}")]
    Missing { block: String, id: String },
    #[error("{block}: {id} is {expected:?} but was answered with {found}")]
    KindMismatch { block: String, id: String, expected: AnswerKind, found: String },
    #[error("{block}: {id} {message}")]
    OutOfRange { block: String, id: String, message: String },
    #[error("{block}: unknown flag `{flag}`")]
    UnknownFlag { block: String, flag: String },
    #[error("{block}: gates {first} and {second} both fire on {id} with different fills")]
    ConflictingGates { block: String, id: String, first: String, second: String },
    #[error("{block}: {id}: {message}")]
    Evaluation { block: String, id: String, message: String },
    #[error("{block}: every cost is unknown")]
    AllCostsUnknown { block: String },
    #[error("{block}: no purpose question is marked applicable")]
    NoApplicablePurpose { block: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    GateContradiction { block: String, id: String, gate: String, answered: f64, forced: f64 },
    UnknownQuestion { block: String, id: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::GateContradiction { block, id, gate, answered, forced } => {
                write!(f, "{block}: {id} answered {answered} but gate {gate} forces {forced}")
            }
            Warning::UnknownQuestion { block, id } => write!(f, "{block}: {id} is not in the schema, ignored"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validated {
    pub answers: NormalizedAnswerSet,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
    pub warnings: Vec<Warning>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    #[error("answer kind does not fit the question")]
    KindMismatch,
    #[error("unknown money amounts are resolved from the other costs")]
    UnresolvedMoney,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Points contributed by one answer. `siblings` carries the values of the
/// block's earlier questions (purpose formulas read P1..P33 from it).
pub fn numeric_value(question: &Question, answer: &AnswerValue, siblings: &Env) -> Result<f64, NumericError> {
    use AnswerKind as K;
    match (question.kind, answer) {
        (_, AnswerValue::Binary(Binary::Na)) => Ok(question.na_value),
        (K::Money, AnswerValue::Binary(Binary::Unknown) | AnswerValue::UnknownMoney) => {
            Err(NumericError::UnresolvedMoney)
        }
        (_, AnswerValue::Binary(Binary::Unknown)) => Ok(0.0),
        (K::Binary | K::DerivedPurpose, AnswerValue::Binary(Binary::No)) => Ok(0.0),
        (K::Binary | K::DerivedPurpose, AnswerValue::Binary(Binary::Yes)) => Ok(question.points.eval(siblings)?),
        (k, AnswerValue::Number(n)) if k.is_scalar() => {
            let env = siblings.clone().with(question.vars[0].clone(), *n)?;
            Ok(question.points.eval(&env)?)
        }
        (K::Composite, AnswerValue::Bindings(map)) => {
            let mut env = siblings.clone();
            for (k, v) in map {
                env.bind(k.clone(), *v)?;
            }
            Ok(question.points.eval(&env)?)
        }
        _ => Err(NumericError::KindMismatch),
    }
}

fn kind_fits(kind: AnswerKind, answer: &AnswerValue) -> bool {
    use AnswerKind as K;
    match answer {
        AnswerValue::Binary(Binary::Na | Binary::Unknown) => true,
        AnswerValue::Binary(_) => matches!(kind, K::Binary | K::DerivedPurpose),
        AnswerValue::Number(_) => kind.is_scalar(),
        AnswerValue::Bindings(_) => kind == K::Composite,
        AnswerValue::UnknownMoney => kind == K::Money,
    }
}

/// Range checks on the raw answer, before any points are computed.
fn check_range(q: &Question, answer: &AnswerValue) -> Result<(), String> {
    let check_min = |name: &str, v: f64| match q.min {
        Some(m) if v < m => Err(format!("{name} = {v} is below the minimum {m}")),
        _ => Ok(()),
    };
    match answer {
        AnswerValue::Number(n) => {
            if !n.is_finite() || *n < 0.0 {
                return Err(format!("must be a finite non-negative number, got {n}"));
            }
            match q.kind {
                AnswerKind::Count if *n % 1.0 != 0.0 => return Err(format!("must be a whole count, got {n}")),
                AnswerKind::Percentage if *n > 100.0 => {
                    return Err(format!("must be a percentage in [0, 100], got {n}"))
                }
                _ => {}
            }
            check_min(&q.vars[0], *n)
        }
        AnswerValue::Bindings(map) => {
            let given: BTreeSet<&str> = map.keys().map(String::as_str).collect();
            let wanted: BTreeSet<&str> = q.vars.iter().map(String::as_str).collect();
            if given != wanted {
                return Err(format!("needs bindings for {:?}, got {:?}", wanted, given));
            }
            for (k, v) in map {
                if !v.is_finite() || *v < 0.0 {
                    return Err(format!("{k} must be a finite non-negative number, got {v}"));
                }
                check_min(k, *v)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

struct BlockOutcome {
    block: NormalizedBlock,
    errors: Vec<ValidationError>,
    warnings: Vec<Warning>,
}

fn validate_block(schema: &QuestionnaireSchema, input: &AnswerBlock, label: String) -> BlockOutcome {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let known_flags = schema.flags();
    for flag in &input.flags {
        if !known_flags.contains(flag.as_str()) {
            errors.push(ValidationError::UnknownFlag { block: label.clone(), flag: flag.clone() });
        }
    }
    for id in input.answers.keys() {
        if schema.question(id).is_none() {
            warnings.push(Warning::UnknownQuestion { block: label.clone(), id: id.clone() });
        }
    }

    let fired: Vec<&crate::schema::Gate> = schema
        .gates
        .iter()
        .filter(|g| match &g.trigger {
            Trigger::Flag(f) => input.flags.contains(f),
            Trigger::AllNo(ids) => ids.iter().all(|id| input.answers.get(id) == Some(&AnswerValue::NO)),
        })
        .collect();

    let mut siblings = Env::new();
    let mut items: Vec<Resolved> = Vec::with_capacity(schema.question_count());
    let mut unknown_money = Vec::new();

    for q in &schema.questions {
        let mut gates = fired.iter().filter(|g| g.targets.contains(&q.id));
        let forced = gates.next();
        if let (Some(first), Some(second)) = (forced, gates.find(|g| g.fill != forced.map_or(0.0, |f| f.fill))) {
            errors.push(ValidationError::ConflictingGates {
                block: label.clone(),
                id: q.id.clone(),
                first: first.id.clone(),
                second: second.id.clone(),
            });
        }
        let answer = input.answers.get(&q.id);
        let applicable = (q.kind == AnswerKind::DerivedPurpose).then(|| answer == Some(&AnswerValue::YES));

        let resolved = if let Some(gate) = forced {
            if let Some(a) = answer {
                if let Ok(v) = numeric_value(q, a, &siblings) {
                    if v != gate.fill {
                        warnings.push(Warning::GateContradiction {
                            block: label.clone(),
                            id: q.id.clone(),
                            gate: gate.id.clone(),
                            answered: v,
                            forced: gate.fill,
                        });
                    }
                }
            }
            Resolved {
                id: q.id.clone(),
                value: gate.fill,
                source: Source::Forced { gate: gate.id.clone() },
                applicable: applicable.map(|_| false),
            }
        } else {
            let Some(a) = answer else {
                errors.push(ValidationError::Missing { block: label.clone(), id: q.id.clone() });
                continue;
            };
            if !kind_fits(q.kind, a) {
                errors.push(ValidationError::KindMismatch {
                    block: label.clone(),
                    id: q.id.clone(),
                    expected: q.kind,
                    found: a.describe(),
                });
                continue;
            }
            if let Err(message) = check_range(q, a) {
                errors.push(ValidationError::OutOfRange { block: label.clone(), id: q.id.clone(), message });
                continue;
            }
            let answer = match a {
                AnswerValue::Binary(Binary::Unknown) if q.kind == AnswerKind::Money => AnswerValue::UnknownMoney,
                other => other.clone(),
            };
            let value = match numeric_value(q, &answer, &siblings) {
                Ok(v) => v,
                Err(NumericError::UnresolvedMoney) => {
                    unknown_money.push(items.len());
                    f64::NAN
                }
                Err(e) => {
                    errors.push(ValidationError::Evaluation {
                        block: label.clone(),
                        id: q.id.clone(),
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            Resolved { id: q.id.clone(), value, source: Source::Answered { answer }, applicable }
        };

        if resolved.value.is_finite() {
            if resolved.value < 0.0 {
                errors.push(ValidationError::OutOfRange {
                    block: label.clone(),
                    id: q.id.clone(),
                    message: format!("scores {} points; points must not be negative", resolved.value),
                });
                continue;
            }
            // cannot fail: finite and non-negative
            let _ = siblings.bind(q.id.clone(), resolved.value);
        }
        items.push(resolved);
    }

    if !unknown_money.is_empty() {
        resolve_unknown_money(schema, &mut items, &unknown_money, &label, &mut errors);
    }

    let has_purposes = schema.questions.iter().any(|q| q.kind == AnswerKind::DerivedPurpose);
    if has_purposes && errors.is_empty() && !items.iter().any(|r| r.applicable == Some(true)) {
        errors.push(ValidationError::NoApplicablePurpose { block: label.clone() });
    }

    BlockOutcome {
        block: NormalizedBlock {
            name: input.name.clone(),
            flags: input.flags.clone(),
            items,
            notes: input.notes.clone(),
        },
        errors,
        warnings,
    }
}

/// An unknown amount takes the largest known resolved amount as its input
/// variable; its own formula then applies (so an unknown new-vehicle
/// installation is still scaled by its factor).
fn resolve_unknown_money(
    schema: &QuestionnaireSchema,
    items: &mut [Resolved],
    pending: &[usize],
    label: &str,
    errors: &mut Vec<ValidationError>,
) {
    let known = items
        .iter()
        .enumerate()
        .filter(|(i, r)| !pending.contains(i) && schema.question(&r.id).is_some_and(|q| q.kind == AnswerKind::Money))
        .map(|(_, r)| r.value)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let Some(max) = known else {
        errors.push(ValidationError::AllCostsUnknown { block: label.to_string() });
        return;
    };
    for &i in pending {
        let Some(q) = schema.question(&items[i].id) else { continue };
        match numeric_value(q, &AnswerValue::Number(max), &Env::new()) {
            Ok(v) => items[i].value = v,
            Err(e) => errors.push(ValidationError::Evaluation {
                block: label.to_string(),
                id: q.id.clone(),
                message: e.to_string(),
            }),
        }
    }
}

fn check_elements(category: Category, blocks: &[AnswerBlock], errors: &mut Vec<ValidationError>) {
    if blocks.is_empty() {
        errors.push(ValidationError::NoElements { category });
    }
    let mut names = BTreeSet::new();
    for b in blocks {
        if b.name.trim().is_empty() || !names.insert(b.name.as_str()) {
            errors.push(ValidationError::ElementName { category, name: b.name.clone() });
        }
    }
}

fn block_label(category: Category, name: &str) -> String {
    if name.is_empty() {
        category.title().to_string()
    } else {
        format!("{} [{name}]", category.title())
    }
}

/// Apply gates, resolve NA/unknowns and check every answer against its
/// question. Gate contradictions are warnings; the forced value wins.
pub fn validate(input: &ProposalAnswerSet, schemas: &SchemaSet) -> Result<Validated, ValidationReport> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    check_elements(Category::S, &input.standardization, &mut errors);
    check_elements(Category::P, &input.positioning, &mut errors);

    let mut run = |category: Category, block: &AnswerBlock| {
        let out = validate_block(schemas.get(category), block, block_label(category, &block.name));
        errors.extend(out.errors);
        warnings.extend(out.warnings);
        out.block
    };

    let standardization = input.standardization.iter().map(|b| run(Category::S, b)).collect();
    let cost = run(Category::CE, &input.cost);
    let accessibility = run(Category::A, &input.accessibility);
    let ease = run(Category::EU, &input.ease);
    let communication = run(Category::CC, &input.communication);
    let positioning = input.positioning.iter().map(|b| run(Category::P, b)).collect();
    let readability = run(Category::R, &input.readability);

    if !errors.is_empty() {
        return Err(ValidationReport { errors, warnings });
    }
    Ok(Validated {
        answers: NormalizedAnswerSet {
            proposal: input.proposal.clone(),
            variant: schemas.variant().map(String::from),
            notes: input.notes.clone(),
            standardization,
            cost,
            accessibility,
            ease,
            communication,
            positioning,
            readability,
        },
        warnings,
    })
}
