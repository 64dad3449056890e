//! Re-score the five bundled proposals and compare every table with the
//! published values and golden exports.

use anyhow::{Context, Result};
use ehmi_core::report::compare;
use ehmi_core::schema::Category;
use ehmi_core::scoring::{CategoryDetail, WeightVector};
use serde::{Deserialize, Serialize};

use crate::data::{bundled_answers, GOLDEN_COST, GOLDEN_FINAL, PUBLISHED};
use crate::engine::{evaluate_all, Schemas, Scored};
use crate::export::{export_category, export_comparison, Format};

pub const SCORE_TOLERANCE: f64 = 0.005;
pub const COST_TOLERANCE: f64 = 0.01;
pub const TOTAL_TOLERANCE: f64 = 0.02;
pub const PERCENT_TOLERANCE: f64 = 0.05;
/// Slack for binary representation when a difference lands on a tolerance.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize)]
pub struct Published {
    pub proposals: Vec<String>,
    pub standardization: Standardization,
    pub cost: Cost,
    pub accessibility: Accessibility,
    pub ease: Scores,
    pub communication: Scores,
    pub positioning: Scores,
    pub readability: Scores,
    #[serde(rename = "final")]
    pub final_: Final,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Standardization {
    pub penalties: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Cost {
    pub values: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Accessibility {
    pub sums: Vec<f64>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Scores {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Final {
    pub totals: Vec<f64>,
    pub percents: Vec<f64>,
    pub ranking: Vec<String>,
}

pub fn published() -> Published {
    toml::from_str(PUBLISHED).expect("bundled published values")
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub table: String,
    pub pass: bool,
    /// One line per mismatch.
    pub mismatches: Vec<String>,
}

struct Checker {
    table: &'static str,
    mismatches: Vec<String>,
}

impl Checker {
    fn new(table: &'static str) -> Self {
        Self { table, mismatches: Vec::new() }
    }

    fn close(&mut self, what: impl Into<String>, got: f64, want: f64, tol: f64) {
        if (got - want).abs() > tol + EPS {
            self.mismatches.push(format!("{}: got {got:.4}, published {want} (tolerance {tol})", what.into()));
        }
    }

    fn same(&mut self, what: &str, got: &str, want: &str) {
        if got != want {
            self.mismatches.push(format!("{what} differs from the golden file:\n--- got\n{got}--- golden\n{want}"));
        }
    }

    fn done(self) -> Check {
        Check { table: self.table.into(), pass: self.mismatches.is_empty(), mismatches: self.mismatches }
    }
}

/// Run every replication check against the `results` readability variant.
pub fn replicate(schemas: &Schemas) -> Result<Vec<Check>> {
    let set = schemas.get(Some("results"))?;
    let scored = evaluate_all(&bundled_answers(), set, &WeightVector::UNIT).context("scoring bundled proposals")?;
    Ok(check_scored(&scored, &published()))
}

pub fn check_scored(scored: &[Scored], p: &Published) -> Vec<Check> {
    let name = |i: usize| p.proposals[i].as_str();
    let mut checks = Vec::new();

    let mut c = Checker::new("standardization");
    for (i, s) in scored.iter().enumerate() {
        if let CategoryDetail::Penalty { elements, .. } = &s.evaluation.scores.categories[Category::S.index()].detail {
            let got: Vec<f64> = elements.iter().map(|e| e.penalty).collect();
            if got.len() != p.standardization.penalties[i].len() {
                c.mismatches.push(format!(
                    "{}: {} elements, published {}",
                    name(i),
                    got.len(),
                    p.standardization.penalties[i].len()
                ));
            }
            for (j, (g, w)) in got.iter().zip(&p.standardization.penalties[i]).enumerate() {
                c.close(format!("{} element {} penalty", name(i), j + 1), *g, *w, 0.0);
            }
        }
        c.close(
            format!("{} S", name(i)),
            s.evaluation.scores.get(Category::S),
            p.standardization.scores[i],
            SCORE_TOLERANCE,
        );
    }
    checks.push(c.done());

    let mut c = Checker::new("cost");
    for (i, s) in scored.iter().enumerate() {
        for (j, (g, w)) in s.normalized.cost.values().zip(&p.cost.values[i]).enumerate() {
            c.close(format!("{} CE{}", name(i), j + 1), g, *w, COST_TOLERANCE);
        }
        c.close(
            format!("{} CE score", name(i)),
            s.evaluation.scores.get(Category::CE),
            p.cost.scores[i],
            SCORE_TOLERANCE,
        );
    }
    let rows: Vec<_> = scored.iter().map(|s| (&s.normalized, &s.evaluation)).collect();
    match export_category(Category::CE, &rows, Format::Csv) {
        Ok(csv) => c.same("cost CSV", &csv, GOLDEN_COST),
        Err(e) => c.mismatches.push(format!("cost CSV export failed: {e}")),
    }
    checks.push(c.done());

    let mut c = Checker::new("accessibility");
    for (i, s) in scored.iter().enumerate() {
        c.close(format!("{} A sum", name(i)), s.normalized.accessibility.sum(), p.accessibility.sums[i], 0.0);
        c.close(
            format!("{} A", name(i)),
            s.evaluation.scores.get(Category::A),
            p.accessibility.scores[i],
            SCORE_TOLERANCE,
        );
    }
    checks.push(c.done());

    for (table, category, published) in [
        ("ease", Category::EU, &p.ease),
        ("communication", Category::CC, &p.communication),
        ("positioning", Category::P, &p.positioning),
        ("readability", Category::R, &p.readability),
    ] {
        let mut c = Checker::new(table);
        for (i, s) in scored.iter().enumerate() {
            c.close(
                format!("{} {category}", name(i)),
                s.evaluation.scores.get(category),
                published.scores[i],
                SCORE_TOLERANCE,
            );
        }
        checks.push(c.done());
    }

    let mut c = Checker::new("final");
    for (i, s) in scored.iter().enumerate() {
        c.close(format!("{} total", name(i)), s.evaluation.total, p.final_.totals[i], TOTAL_TOLERANCE);
        c.close(format!("{} percent", name(i)), s.evaluation.percent, p.final_.percents[i], PERCENT_TOLERANCE);
    }
    let evaluations: Vec<_> = scored.iter().map(|s| s.evaluation.clone()).collect();
    match compare(&evaluations) {
        Ok(report) => {
            let order: Vec<String> = report.ranking.iter().map(|r| r.proposal.clone()).collect();
            if order != p.final_.ranking {
                c.mismatches.push(format!("ranking {order:?}, published {:?}", p.final_.ranking));
            }
            match export_comparison(&report, Format::Text) {
                Ok(text) => c.same("final table", &text, GOLDEN_FINAL),
                Err(e) => c.mismatches.push(format!("text export failed: {e}")),
            }
        }
        Err(e) => c.mismatches.push(format!("comparison failed: {e}")),
    }
    checks.push(c.done());
    checks
}
