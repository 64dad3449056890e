#![allow(dead_code)]

use std::collections::BTreeSet;

use ehmi::data::{bundled_answers, SCHEMA_FILES};
use ehmi::engine::{evaluate_all, Schemas, Scored};
use ehmi::io::parse_schema_document;
use ehmi_core::answers::NormalizedBlock;
use ehmi_core::formula::Expr;
use ehmi_core::scoring::WeightVector;

pub fn schemas() -> Schemas {
    Schemas::bundled().expect("bundled schemas load")
}

pub fn scored(variant: &str) -> Vec<Scored> {
    let schemas = schemas();
    evaluate_all(&bundled_answers(), schemas.get(Some(variant)).unwrap(), &WeightVector::UNIT)
        .expect("bundled answers score")
}

pub fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol + 1e-9
}

/// Every PTS string in the bundled schema files, with its question id.
pub fn bundled_pts() -> Vec<(String, String)> {
    SCHEMA_FILES
        .iter()
        .flat_map(|(_, text)| parse_schema_document(text).unwrap().questions)
        .map(|q| (q.id, q.pts))
        .collect()
}

/// Variables that only ever appear where increasing them cannot decrease
/// the result: not on the right of a subtraction, not in a denominator.
pub fn monotone_vars(e: &Expr) -> BTreeSet<String> {
    fn walk(e: &Expr, positive: bool, ok: &mut BTreeSet<String>, bad: &mut BTreeSet<String>) {
        match e {
            Expr::Lit(_) => {}
            Expr::Var(v) => {
                if positive {
                    ok.insert(v.clone());
                } else {
                    bad.insert(v.clone());
                }
            }
            Expr::Add(a, b) | Expr::Mul(a, b) => {
                walk(a, positive, ok, bad);
                walk(b, positive, ok, bad);
            }
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                walk(a, positive, ok, bad);
                walk(b, false, ok, bad);
            }
            Expr::Max(args) => args.iter().for_each(|a| walk(a, positive, ok, bad)),
        }
    }
    let (mut ok, mut bad) = (BTreeSet::new(), BTreeSet::new());
    walk(e, true, &mut ok, &mut bad);
    ok.difference(&bad).cloned().collect()
}

/// P34 to P41 computed directly from the visibility answers, without the
/// expression engine.
pub fn purpose_oracle(block: &NormalizedBlock) -> [f64; 8] {
    let v = |n: u32| block.value(&format!("P{n}")).expect("visibility answer");
    let max = |ids: &[u32]| ids.iter().map(|&n| v(n)).fold(f64::MIN, f64::max);
    [
        (max(&[12, 13, 15, 17, 18, 20, 21, 22, 24, 25, 29, 30])
            + max(&[5, 8, 12, 14, 15, 17, 18, 19, 20, 21, 22, 24, 25, 29, 33]))
            / 4.0,
        (max(&[15, 21, 22]) + max(&[3, 4, 5, 7, 8, 9, 10, 18, 28, 29, 31, 32])) / 4.0,
        max(&[12, 13, 15, 16, 17, 20, 21, 22, 29, 30]) / 2.0,
        max(&[14, 15, 17, 18, 26]) / 2.0,
        max(&[5, 8, 14, 17, 33]) / 2.0,
        max(&[12, 13, 15, 16, 20, 21, 22]) / 2.0,
        max(&[3, 6, 7, 9, 10, 32]) / 2.0,
        max(&[12, 13, 15, 20, 21, 22]) / 2.0,
    ]
}
